use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use serde_json::json;
use specmhd_core::counterexample::{divergence_scan_with, lemma_a1_sweep, lemma_a2_sweep, m_delta};
use specmhd_core::mhd::{self, records_to_csv, RunStatus};
use specmhd_core::nonlinear::{
    cutoff_bound_sweep, gradient_estimate_check, gradient_estimate_sweep, run_probe, CutoffSample, EstimateProbeReport,
    GradientSample, ProbeConfig, ProbeKind,
};
use specmhd_core::snapshot::save_snapshot;
use specmhd_core::stokes::{relaxation_csv, run_relaxation};
use specmhd_core::{Error, SpectralField, VectorField};

use crate::config::{read_json, CounterexampleConfig, Model, SimulationConfig, VerifyConfig};
use crate::manifest::Recorder;
use crate::{Cli, Suite, DEFAULT_SEED};

fn say(cli: &Cli, msg: impl AsRef<str>) {
    if !cli.quiet {
        println!("{}", msg.as_ref());
    }
}

fn require_config(cli: &Cli, command: &str) -> Result<std::path::PathBuf> {
    cli.config.clone().with_context(|| format!("{command} needs --config <path>"))
}

fn components(fields: &[&VectorField]) -> Vec<SpectralField> {
    fields.iter().flat_map(|v| v.components().iter().cloned()).collect()
}

pub fn simulate(cli: &Cli) -> Result<u8> {
    let mut cfg: SimulationConfig = read_json(&require_config(cli, "simulate")?)?;
    cfg.apply_seed(cli.seed);
    let solver = cfg.solver()?;
    let mut rec = Recorder::new(&cli.out, "simulate", serde_json::to_value(&cfg)?, cfg.ic.seed)?;
    let (code, summary) = match cfg.model {
        Model::Mhd => {
            let out = mhd::run(&solver)?;
            rec.write("diagnostics.csv", records_to_csv(&out.records))?;
            for (i, st) in out.snapshots.iter().enumerate() {
                let name = format!("snapshot_{i:05}.specf");
                save_snapshot(&rec.path(&name), &components(&[&st.u, &st.b]), Some(st.t))?;
                rec.register(&name);
            }
            let code = match out.status {
                RunStatus::Completed => 0,
                RunStatus::BlowUp { .. } => 2,
            };
            let summary = json!({
                "model": "mhd",
                "status": out.status,
                "samples": out.records.len(),
                "energy_residual": out.energy_residual(),
                "monitors": out.monitors,
            });
            say(cli, format!("simulate mhd: {:?}, {} samples, energy residual {:e}", out.status, out.records.len(), out.energy_residual()));
            (code, summary)
        }
        Model::Stokes => {
            let out = run_relaxation(&solver)?;
            rec.write("diagnostics.csv", relaxation_csv(&out.records))?;
            for (i, st) in out.snapshots.iter().enumerate() {
                let name = format!("snapshot_{i:05}.specf");
                save_snapshot(&rec.path(&name), &components(&[&st.b]), Some(st.t))?;
                rec.register(&name);
            }
            let code = if out.report.blow_up.is_some() { 2 } else { 0 };
            say(cli, format!("simulate stokes: {} samples, identity residual {:e}", out.records.len(), out.report.identity_residual));
            (code, json!({ "model": "stokes", "samples": out.records.len(), "report": out.report }))
        }
    };
    rec.finish(code as i32, summary)?;
    Ok(code)
}

fn probe_suite(kind: ProbeKind, samples: usize, seed: u64) -> Result<(bool, String, serde_json::Value)> {
    let mut csv = String::from(EstimateProbeReport::CSV_HEADER);
    csv.push('\n');
    let mut rows = Vec::new();
    let mut pass = true;
    for s in [1.1, 1.5, 2.0] {
        let cfg = ProbeConfig::new(kind, s, 8, samples, seed);
        let report = run_probe(&cfg)?;
        let again = run_probe(&cfg)?;
        let reproducible = report == again;
        let finite = report.samples.iter().all(|p| p.ratio.is_finite() && p.ratio >= 0.0);
        pass &= reproducible && finite;
        csv.push_str(report.to_csv().split_once('\n').map_or("", |(_, body)| body));
        rows.push(json!({
            "s": s, "samples": samples, "max_ratio": report.max_ratio, "mean_ratio": report.mean_ratio,
            "reproducible": reproducible, "finite": finite,
        }));
    }
    Ok((pass, csv, json!(rows)))
}

fn gradient_suite(samples: usize, seed: u64, extra: &VerifyConfig) -> Result<(bool, String, serde_json::Value)> {
    let sweep = gradient_estimate_sweep(samples, seed)?;
    let mut csv = format!("{},status\n", GradientSample::CSV_HEADER);
    let mut violations = 0;
    for g in &sweep {
        let ok = g.holds();
        violations += usize::from(!ok);
        writeln!(csv, "{},{}", g.csv_row(), if ok { "ok" } else { "violation" })?;
    }
    let mut rejected = 0;
    for (i, p) in extra.gradient_points.iter().enumerate() {
        let id = sweep.len() + i;
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let bound = p.s * 3f64.powf(p.s - 1.0);
        let (xn, zn) = (norm(&p.xi), norm(&p.zeta));
        match gradient_estimate_check(&p.xi, &p.zeta, p.s) {
            Ok(r) => {
                let ok = r <= bound;
                violations += usize::from(!ok);
                writeln!(csv, "{id},{},{:e},{xn:e},{zn:e},{r:e},{bound:e},{}", p.xi.len(), p.s, if ok { "ok" } else { "violation" })?;
            }
            Err(Error::Precondition(_)) => {
                rejected += 1;
                writeln!(csv, "{id},{},{:e},{xn:e},{zn:e},,{bound:e},rejected", p.xi.len(), p.s)?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let max = sweep.iter().map(|g| g.ratio / g.bound).fold(0.0, f64::max);
    Ok((violations == 0, csv, json!({ "samples": sweep.len(), "violations": violations, "rejected": rejected, "max_ratio_over_bound": max })))
}

fn lemma_suite(samples: usize, seed: u64) -> Result<(bool, String, serde_json::Value)> {
    let mut csv = String::from("lemma,delta,sample_id,margin\n");
    let mut rows = Vec::new();
    let mut pass = true;
    for (j, delta) in [0.05, 0.1, 0.3].into_iter().enumerate() {
        let a1 = lemma_a1_sweep(delta, 1, samples, seed.wrapping_add(2 * j as u64))?;
        let a2 = lemma_a2_sweep(delta, samples, seed.wrapping_add(2 * j as u64 + 1))?;
        for (name, sweep) in [("A1", &a1), ("A2", &a2)] {
            pass &= sweep.violations == 0;
            for (i, m) in sweep.margins.iter().enumerate() {
                writeln!(csv, "{name},{delta},{i},{m:e}")?;
            }
            rows.push(json!({ "lemma": name, "delta": delta, "samples": sweep.samples, "violations": sweep.violations, "min_margin": sweep.min_margin }));
        }
    }
    let m = m_delta(0.1)?;
    let m_ok = (m - 0.32165).abs() <= 1e-5;
    Ok((pass && m_ok, csv, json!({ "sweeps": rows, "m_delta_0.1": m, "m_delta_ok": m_ok })))
}

fn mollifier_suite(samples: usize, seed: u64) -> Result<(bool, String, serde_json::Value)> {
    let sweep = cutoff_bound_sweep(samples, seed)?;
    let mut csv = format!("{}\n", CutoffSample::CSV_HEADER);
    for c in &sweep {
        writeln!(csv, "{}", c.csv_row())?;
    }
    let violations = sweep.iter().filter(|c| !c.holds()).count();
    let worst = sweep.iter().filter(|c| c.rhs > 0.0).map(|c| c.lhs / c.rhs).fold(0.0, f64::max);
    Ok((violations == 0, csv, json!({ "samples": sweep.len(), "violations": violations, "max_lhs_over_rhs": worst })))
}

pub fn verify(cli: &Cli) -> Result<u8> {
    let suite = cli.suite.context("verify needs --suite <commutator|kato_ponce|gradient_estimate|lemmas|mollifier>")?;
    let extra: VerifyConfig = match &cli.config {
        Some(p) => read_json(p)?,
        None => VerifyConfig::default(),
    };
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let mut rec = Recorder::new(&cli.out, "verify", json!({ "suite": suite.name(), "overrides": extra }), seed)?;
    let (pass, csv, summary) = match suite {
        Suite::Commutator => probe_suite(ProbeKind::Commutator, extra.samples.unwrap_or(50), seed)?,
        Suite::KatoPonce => probe_suite(ProbeKind::KatoPonce, extra.samples.unwrap_or(50), seed)?,
        Suite::GradientEstimate => gradient_suite(extra.samples.unwrap_or(100_000), seed, &extra)?,
        Suite::Lemmas => lemma_suite(extra.samples.unwrap_or(100_000), seed)?,
        Suite::Mollifier => mollifier_suite(extra.samples.unwrap_or(1000), seed)?,
    };
    rec.write(&format!("{}.csv", suite.name()), csv)?;
    let code = if pass { 0 } else { 1 };
    say(cli, format!("verify {}: {}", suite.name(), if pass { "pass" } else { "FAIL" }));
    rec.finish(code, json!({ "suite": suite.name(), "pass": pass, "details": summary }))?;
    Ok(code as u8)
}

pub fn counterexample(cli: &Cli) -> Result<u8> {
    let cfg: CounterexampleConfig = read_json(&require_config(cli, "counterexample")?)?;
    let params = cfg.params()?;
    let radii = cfg.radii()?;
    let opts = cfg.outer.unwrap_or_default();
    let mut rec = Recorder::new(&cli.out, "counterexample", serde_json::to_value(&cfg)?, cli.seed.unwrap_or(DEFAULT_SEED))?;
    let scan = divergence_scan_with(&params, &radii, &opts)?;
    rec.write("scan.csv", scan.to_csv())?;
    let ok = scan.matches_prediction();
    say(
        cli,
        format!("counterexample alpha={}: {:?} (expected {:?}), fitted beta {:?}", params.alpha, scan.trend, scan.expected, scan.fitted_beta),
    );
    let code = if ok { 0 } else { 1 };
    rec.finish(
        code,
        json!({
            "trend": scan.trend, "expected": scan.expected, "matches": ok,
            "fitted_beta": scan.fitted_beta, "onset_radius": scan.onset_radius,
        }),
    )?;
    Ok(code as u8)
}

pub fn convergence(cli: &Cli) -> Result<u8> {
    let mut cfg: SimulationConfig = read_json(&require_config(cli, "convergence")?)?;
    cfg.apply_seed(cli.seed);
    if cfg.model != Model::Mhd {
        bail!("convergence runs the mhd model only");
    }
    let k_list = cfg.cutoffs()?;
    let base = cfg.solver()?;
    let mut rec = Recorder::new(&cli.out, "convergence", serde_json::to_value(&cfg)?, cfg.ic.seed)?;
    let report = mhd::cauchy_experiment(&base, &k_list, cfg.control)?;
    rec.write("cauchy.csv", report.to_csv(base.dt))?;
    let ok = report.strictly_decreasing();
    let diffs: Vec<f64> = report.rows.iter().map(|r| r.sup_diff).collect();
    say(cli, format!("convergence {k_list:?}: differences {diffs:?}, {}", if ok { "decreasing" } else { "NOT decreasing" }));
    let code = if ok { 0 } else { 1 };
    rec.finish(code, json!({ "strictly_decreasing": ok, "rows": report.rows, "control": report.control }))?;
    Ok(code as u8)
}
