//! Reduced model: the velocity is slaved to `B` through a Stokes problem,
//!
//! ```text
//! −νΔu + ∇p = (B·∇)B,   ∇·u = 0
//! ∂t B = S_R[(B·∇)u − (u·∇)B]
//! ```
//!
//! `u` is not truncated: it carries the exact modes `|k| ≤ 2K_R` of the
//! forcing and lives on the product grid. `B` stays in `V_R`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{NormKind, SpectralField, VectorField};
use crate::grid::SpectralGrid;
use crate::mhd::{combine, initial_condition, SolverConfig, ENVELOPE_SLACK};
use crate::nonlinear::advect;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!("viscosity nu must be positive, got {nu}")));
    }
    Ok(())
}

/// Divide a force by `4π²ν|k/L|²` and project; the zero mode is set to 0.
fn invert_stokes(force: &VectorField, nu: f64) -> VectorField {
    let g = *force.grid();
    let c = 4.0 * std::f64::consts::PI.powi(2) * nu / (g.length() * g.length());
    let mut u = force.clone();
    for comp in u.components_mut() {
        for (i, z) in comp.coeffs_mut().iter_mut().enumerate() {
            let k2 = g.k_sq(i);
            *z = if k2 == 0 { Complex64::new(0.0, 0.0) } else { *z / (c * k2 as f64) };
        }
    }
    // A second pass removes the cancellation residue of nearly-gradient modes.
    u.leray_project_in_place();
    u.leray_project_in_place();
    u
}

/// `û_k = P[F((B·∇)B)]_k / (4π²ν|k/L|²)`, `û_0 = 0`, on the product grid.
pub fn stokes_solve(b: &VectorField, nu: f64) -> Result<VectorField> {
    check_nu(nu)?;
    Ok(invert_stokes(&advect(b, b)?, nu))
}

/// `‖Leray[(B·∇)B]‖_{L²}`: distance from a magnetostatic (stationary Euler) state.
pub fn euler_residual(b: &VectorField) -> Result<f64> {
    Ok(advect(b, b)?.leray_project().l2_norm())
}

/// `‖u‖_{H^{s+1}} / (ν^{-1} ‖B‖²_{H^s})` with `u = stokes_solve(B, ν)`.
pub fn elliptic_ratio(b: &VectorField, nu: f64, s: f64) -> Result<f64> {
    check_nu(nu)?;
    let bn = b.sobolev_norm(s, NormKind::Inhomogeneous)?;
    if bn == 0.0 {
        return Err(Error::DegenerateProbe("elliptic ratio of a zero field".into()));
    }
    let u = stokes_solve(b, nu)?;
    Ok(u.sobolev_norm(s + 1.0, NormKind::Inhomogeneous)? * nu / (bn * bn))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StokesState {
    pub t: f64,
    pub b: VectorField,
    /// `stokes_solve(b, ν)`, on the product grid.
    pub u: VectorField,
}

/// Multipliers for the reduced model on a product grid.
struct Engine {
    grid: SpectralGrid,
    pg: SpectralGrid,
    nu: f64,
    mult: Vec<Vec<f64>>,
    in_native_ball: Vec<bool>,
    in_product_ball: Vec<bool>,
}

struct Stage {
    db: VectorField,
    u: VectorField,
}

impl Engine {
    fn new(grid: &SpectralGrid, nu: f64) -> Self {
        let pg = grid.product_grid();
        let k = grid.k_cut();
        let mult = (0..pg.n_dim())
            .map(|j| (0..pg.len()).map(|i| TWO_PI * pg.wavevector(i)[j] as f64 / pg.length()).collect())
            .collect();
        Engine {
            grid: *grid,
            pg,
            nu,
            mult,
            in_native_ball: (0..pg.len()).map(|i| pg.in_ball(i, k)).collect(),
            in_product_ball: (0..pg.len()).map(|i| pg.in_ball(i, 2 * k)).collect(),
        }
    }

    fn derivative(&self, c: &[Complex64], j: usize) -> Vec<Complex64> {
        c.iter().zip(&self.mult[j]).map(|(z, m)| Complex64::new(-z.im * m, z.re * m)).collect()
    }

    /// Physical values and gradients of a real vector field on the product grid.
    fn physical(&self, v: &VectorField) -> Vec<Vec<f64>> {
        let d = self.pg.n_dim();
        let mut spec: Vec<Vec<Complex64>> = v.components().iter().map(|c| c.coeffs().to_vec()).collect();
        for c in v.components() {
            for j in 0..d {
                spec.push(self.derivative(c.coeffs(), j));
            }
        }
        let refs: Vec<&[Complex64]> = spec.iter().map(|v| v.as_slice()).collect();
        fft::to_physical_real_many(&self.pg, &refs)
    }

    fn spectral(&self, phys: &[Vec<f64>], mask: &[bool]) -> Result<VectorField> {
        let fields = fft::to_spectral_real_many(&self.pg, phys)
            .into_iter()
            .map(|mut c| {
                for (z, keep) in c.iter_mut().zip(mask) {
                    if !keep {
                        *z = Complex64::new(0.0, 0.0);
                    }
                }
                SpectralField::from_coeffs(self.pg, c, true)
            })
            .collect::<Result<_>>()?;
        VectorField::new(fields)
    }

    fn eval(&self, b: &VectorField) -> Result<Stage> {
        if !b.is_hermitian() {
            return Err(Error::InvalidParameter("magnetic field must be real-valued".into()));
        }
        let d = self.pg.n_dim();
        let n = self.pg.len();
        let bp = self.physical(&b.resample(&self.pg)?);
        let (bv, gb) = bp.split_at(d);
        let mut force = vec![vec![0.0; n]; d];
        for (i, f) in force.iter_mut().enumerate() {
            for j in 0..d {
                let (bj, g) = (&bv[j], &gb[i * d + j]);
                for x in 0..n {
                    f[x] += bj[x] * g[x];
                }
            }
        }
        let u = invert_stokes(&self.spectral(&force, &self.in_product_ball)?, self.nu);
        let up = self.physical(&u);
        let (uv, gu) = up.split_at(d);
        let mut ind = vec![vec![0.0; n]; d];
        for (i, f) in ind.iter_mut().enumerate() {
            for j in 0..d {
                let (bj, uj, gui, gbi) = (&bv[j], &uv[j], &gu[i * d + j], &gb[i * d + j]);
                for x in 0..n {
                    f[x] += bj[x] * gui[x] - uj[x] * gbi[x];
                }
            }
        }
        let db = self.spectral(&ind, &self.in_native_ball)?.resample(&self.grid)?.leray_project();
        Ok(Stage { db, u })
    }
}

/// Running integrals over one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepIntegrals {
    pub diss: f64,
    pub gradu_hs: f64,
}

/// `k1` is the stage at `state.b`; the stage at the new `B` is returned for
/// reuse as the next step's `k1`.
fn step_with(engine: &Engine, state: &StokesState, k1: Stage, cfg: &SolverConfig) -> Result<(StokesState, StepIntegrals, Stage)> {
    let h = cfg.dt;
    let bn = &state.b;
    let sup = bn.sup_norm().max(k1.u.sup_norm());
    let limit = cfg.cfl_limit(sup);
    if h > limit {
        return Err(Error::Cfl { dt: h, limit });
    }
    let b2 = combine(&[(1.0, bn), (0.5 * h, &k1.db)])?;
    let k2 = engine.eval(&b2)?;
    let b3 = combine(&[(1.0, bn), (0.5 * h, &k2.db)])?;
    let k3 = engine.eval(&b3)?;
    let b4 = combine(&[(1.0, bn), (h, &k3.db)])?;
    let k4 = engine.eval(&b4)?;
    let mut b_next = combine(&[(1.0, bn), (h / 6.0, &k1.db), (h / 3.0, &k2.db), (h / 3.0, &k3.db), (h / 6.0, &k4.db)])?;
    b_next.leray_project_in_place();
    let t = state.t + h;
    if b_next.components().iter().any(|c| c.coeffs().iter().any(|z| !(z.re.is_finite() && z.im.is_finite()))) {
        return Err(Error::NonFinite { t, what: "magnetic field".into() });
    }
    let q = |u: &VectorField| (cfg.nu * u.gradient_sobolev_norm(0.0).powi(2), u.gradient_sobolev_norm(cfg.s));
    let (q1, r1) = q(&k1.u);
    let (q2, r2) = q(&k2.u);
    let (q3, r3) = q(&k3.u);
    let (q4, r4) = q(&k4.u);
    let integrals = StepIntegrals {
        diss: h / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4),
        gradu_hs: h / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4),
    };
    let next = engine.eval(&b_next)?;
    Ok((StokesState { t, b: b_next, u: next.u.clone() }, integrals, next))
}

/// Build the state for a given `B`, solving for `u`.
pub fn state_from(b: VectorField, nu: f64, t: f64) -> Result<StokesState> {
    let u = stokes_solve(&b, nu)?;
    Ok(StokesState { t, b, u })
}

/// One classic RK4 step with `u` re-solved at every stage.
pub fn step_detailed(state: &StokesState, cfg: &SolverConfig) -> Result<(StokesState, StepIntegrals)> {
    check_nu(cfg.nu)?;
    let engine = Engine::new(state.b.grid(), cfg.nu);
    let k1 = engine.eval(&state.b)?;
    let (next, inc, _) = step_with(&engine, state, k1, cfg)?;
    Ok((next, inc))
}

pub fn step(state: &StokesState, cfg: &SolverConfig) -> Result<StokesState> {
    Ok(step_detailed(state, cfg)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationRecord {
    pub t: f64,
    pub u_l2: f64,
    pub b_l2: f64,
    pub b_hs: f64,
    pub mag_energy: f64,
    pub euler_residual: f64,
    /// `∫ν‖∇u‖²`.
    pub cumdiss: f64,
    /// `‖B₀‖_{H^s} exp(∫‖∇u‖_{H^s})`.
    pub b_envelope: f64,
    pub div_b: f64,
    pub div_u: f64,
}

impl RelaxationRecord {
    pub const CSV_HEADER: &'static str = "t,u_L2,B_L2,B_Hs,mag_energy,euler_residual";

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t, self.u_l2, self.b_l2, self.b_hs, self.mag_energy, self.euler_residual
        )
    }
}

pub fn relaxation_csv(records: &[RelaxationRecord]) -> String {
    let mut out = String::from(RelaxationRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Trends of a relaxation run; nothing here is a convergence claim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationReport {
    /// `‖u‖_{L²}` at the first step after `t = 0` and at `T`.
    pub u_initial: f64,
    pub u_final: f64,
    pub u_decreased: bool,
    /// `½‖B(T)‖² + ∫ν‖∇u‖² − ½‖B(0)‖²`.
    pub identity_residual: f64,
    pub max_mag_energy_increase: f64,
    pub envelope_violations: usize,
    pub max_div_b: f64,
    pub max_div_u: f64,
    pub max_outside_support: f64,
    pub blow_up: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RelaxationOutcome {
    pub records: Vec<RelaxationRecord>,
    pub report: RelaxationReport,
    /// States every `snapshot_every` steps, starting with `t = 0`.
    pub snapshots: Vec<StokesState>,
    pub final_state: StokesState,
}

fn record(state: &StokesState, cfg: &SolverConfig, cumdiss: f64, envelope: f64) -> Result<RelaxationRecord> {
    let b_l2 = state.b.l2_norm();
    Ok(RelaxationRecord {
        t: state.t,
        u_l2: state.u.l2_norm(),
        b_l2,
        b_hs: state.b.sobolev_norm(cfg.s, NormKind::Inhomogeneous)?,
        mag_energy: 0.5 * b_l2 * b_l2,
        euler_residual: euler_residual(&state.b)?,
        cumdiss,
        b_envelope: envelope,
        div_b: state.b.divergence_residual(),
        div_u: state.u.divergence_residual(),
    })
}

/// Evolve `B` from the configured initial condition (its magnetic part).
pub fn run_relaxation(cfg: &SolverConfig) -> Result<RelaxationOutcome> {
    cfg.validate()?;
    let (_, b0) = initial_condition(&cfg.ic, &cfg.grid)?;
    run_relaxation_from(cfg, b0)
}

pub fn run_relaxation_from(cfg: &SolverConfig, b0: VectorField) -> Result<RelaxationOutcome> {
    cfg.validate()?;
    let n_steps = cfg.n_steps()?;
    let engine = Engine::new(&cfg.grid, cfg.nu);
    let k_cut = cfg.grid.k_cut();
    let hs_b0 = b0.sobolev_norm(cfg.s, NormKind::Inhomogeneous)?;
    let mut state = state_from(b0, cfg.nu, 0.0)?;
    let first = record(&state, cfg, 0.0, hs_b0)?;
    let y0 = first.b_hs * first.b_hs;
    let mut records = vec![first];
    let mut report = RelaxationReport {
        u_initial: first.u_l2,
        u_final: first.u_l2,
        u_decreased: false,
        identity_residual: 0.0,
        max_mag_energy_increase: 0.0,
        envelope_violations: 0,
        max_div_b: first.div_b,
        max_div_u: first.div_u,
        max_outside_support: state.b.max_outside_ball(k_cut),
        blow_up: None,
    };
    let mut snapshots = Vec::new();
    if cfg.snapshot_every > 0 {
        snapshots.push(state.clone());
    }
    let (mut cumdiss, mut cum_gradu) = (0.0, 0.0);
    let mut stage = engine.eval(&state.b)?;
    for n in 1..=n_steps {
        let (next, inc, k1) = step_with(&engine, &state, stage, cfg)?;
        state = next;
        stage = k1;
        state.t = n as f64 * cfg.dt;
        if cfg.snapshot_every > 0 && n % cfg.snapshot_every == 0 {
            snapshots.push(state.clone());
        }
        cumdiss += inc.diss;
        cum_gradu += inc.gradu_hs;
        if n == 1 {
            report.u_initial = state.u.l2_norm();
        }
        let b_hs = state.b.sobolev_norm(cfg.s, NormKind::Inhomogeneous)?;
        let blown = y0 > 0.0 && b_hs * b_hs > cfg.blowup_factor * y0;
        if n % cfg.diag_every == 0 || n == n_steps || blown {
            let rec = record(&state, cfg, cumdiss, hs_b0 * cum_gradu.exp())?;
            let prev = records.last().expect("non-empty");
            report.max_mag_energy_increase = report.max_mag_energy_increase.max(rec.mag_energy - prev.mag_energy);
            if rec.b_hs > rec.b_envelope * (1.0 + ENVELOPE_SLACK) {
                report.envelope_violations += 1;
            }
            report.max_div_b = report.max_div_b.max(rec.div_b);
            report.max_div_u = report.max_div_u.max(rec.div_u);
            report.max_outside_support = report.max_outside_support.max(state.b.max_outside_ball(k_cut));
            records.push(rec);
        }
        if blown {
            report.blow_up = Some(state.t);
            break;
        }
    }
    let last = records.last().expect("non-empty");
    report.u_final = last.u_l2;
    report.u_decreased = report.u_final < report.u_initial;
    report.identity_residual = last.mag_energy + last.cumdiss - records[0].mag_energy;
    Ok(RelaxationOutcome { records, report, snapshots, final_state: state })
}
