//! Truncated viscous, non-resistive MHD on `V_R`:
//!
//! ```text
//! ∂t u = νΔu + P S_R[(B·∇)B − (u·∇)u]
//! ∂t B =       S_R[(B·∇)u − (u·∇)B]
//! ```
//!
//! with `P` the Leray projection. Time stepping is integrating-factor RK4
//! (Lawson form): the viscous factor `e^{−4π²ν|k/L|²t}` is applied exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{NormKind, SpectralField, VectorField};
use crate::grid::SpectralGrid;
use crate::sampler::{random_solenoidal, rng_from_seed, RandomFieldSpec};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct MhdState {
    pub t: f64,
    pub u: VectorField,
    pub b: VectorField,
}

impl MhdState {
    pub fn zeros(grid: SpectralGrid) -> Self {
        MhdState { t: 0.0, u: VectorField::zeros(grid, true), b: VectorField::zeros(grid, true) }
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.u.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    IfRk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcKind {
    /// One transverse cosine mode in `u` (or in `B`, see [`IcTarget`]).
    SingleMode,
    /// `u = a(sin 2πx₂/L, 0)`, `B = a(cos 2πx₂/L, cos 2πx₁/L)`.
    OrthogonalModes,
    /// Seeded random solenoidal data on `|k| ≤ band`.
    RandomBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum IcTarget {
    #[default]
    #[serde(rename = "u")]
    U,
    #[serde(rename = "B", alias = "b")]
    B,
}

fn default_seed() -> u64 {
    7
}
fn default_amplitude() -> f64 {
    0.25
}
fn default_band() -> usize {
    4
}
fn default_gamma() -> f64 {
    2.0
}

/// Initial-condition selector. `amplitude` is the cosine amplitude for the
/// mode kinds and the rms value `‖f‖_{L²}/L^{n/2}` for random data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub kind: IcKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_band")]
    pub band: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub field: IcTarget,
    #[serde(default)]
    pub mode: Option<Vec<i64>>,
}

impl InitialCondition {
    pub fn new(kind: IcKind, seed: u64) -> Self {
        InitialCondition {
            kind,
            seed,
            amplitude: default_amplitude(),
            band: default_band(),
            gamma: default_gamma(),
            field: IcTarget::U,
            mode: None,
        }
    }
}

/// Transverse unit vector for wavevector `k`.
fn transverse(k: &[i64], n_dim: usize) -> Vec<f64> {
    let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
    let norm = kf.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n_dim == 2 {
        return vec![-kf[1] / norm, kf[0] / norm];
    }
    // k × e with e the axis least aligned with k.
    let mut axis = 0;
    for j in 1..3 {
        if kf[j].abs() < kf[axis].abs() {
            axis = j;
        }
    }
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let c = [kf[1] * e[2] - kf[2] * e[1], kf[2] * e[0] - kf[0] * e[2], kf[0] * e[1] - kf[1] * e[0]];
    let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    c.iter().map(|v| v / cn).collect()
}

/// `amp · dir · cos(2πk·x/L)` as a vector field.
fn cosine_field(grid: SpectralGrid, k: &[i64], dir: &[f64], amp: f64) -> Result<VectorField> {
    let comps = dir
        .iter()
        .map(|d| SpectralField::real_mode(grid, k, Complex64::new(0.5 * amp * d, 0.0)))
        .collect::<Result<_>>()?;
    VectorField::new(comps)
}

fn sine_field(grid: SpectralGrid, k: &[i64], dir: &[f64], amp: f64) -> Result<VectorField> {
    let comps = dir
        .iter()
        .map(|d| SpectralField::real_mode(grid, k, Complex64::new(0.0, -0.5 * amp * d)))
        .collect::<Result<_>>()?;
    VectorField::new(comps)
}

fn unit(n_dim: usize, axis: usize) -> Vec<i64> {
    let mut k = vec![0; n_dim];
    k[axis] = 1;
    k
}

/// Divergence-free, real, band-limited initial data `(u₀, B₀)` in `V_R`.
pub fn initial_condition(ic: &InitialCondition, grid: &SpectralGrid) -> Result<(VectorField, VectorField)> {
    let g = *grid;
    let d = g.n_dim();
    if !ic.amplitude.is_finite() {
        return Err(Error::InvalidParameter("initial amplitude must be finite".into()));
    }
    let zero = VectorField::zeros(g, true);
    let (u, b) = match ic.kind {
        IcKind::SingleMode => {
            let k = ic.mode.clone().unwrap_or_else(|| unit(d, 0));
            if k.len() != d || k.iter().all(|v| *v == 0) {
                return Err(Error::InvalidParameter(format!("mode {k:?} must be a nonzero {d}-vector")));
            }
            let k2: i64 = k.iter().map(|v| v * v).sum();
            if k2 > (g.k_cut() * g.k_cut()) as i64 {
                return Err(Error::InvalidParameter(format!("mode {k:?} lies outside |k| <= K_R")));
            }
            let f = cosine_field(g, &k, &transverse(&k, d), ic.amplitude)?;
            match ic.field {
                IcTarget::U => (f, zero),
                IcTarget::B => (zero, f),
            }
        }
        IcKind::OrthogonalModes => {
            if g.k_cut() < 1 {
                return Err(Error::InvalidParameter("orthogonal_modes needs K_R >= 1".into()));
            }
            let mut e1 = vec![0.0; d];
            e1[0] = 1.0;
            let mut e2 = vec![0.0; d];
            e2[1] = 1.0;
            let u = sine_field(g, &unit(d, 1), &e1, ic.amplitude)?;
            let b = cosine_field(g, &unit(d, 1), &e1, ic.amplitude)?
                .add(&cosine_field(g, &unit(d, 0), &e2, ic.amplitude)?)?;
            (u, b)
        }
        IcKind::RandomBand => {
            let band = ic.band.min(g.k_cut());
            let spec = RandomFieldSpec { band, gamma: ic.gamma, hermitian: true };
            let mut rng = rng_from_seed(ic.seed);
            let u = random_solenoidal(&g, &spec, &mut rng);
            let b = random_solenoidal(&g, &spec, &mut rng);
            let target = ic.amplitude * g.volume().sqrt();
            let norm = |v: VectorField| {
                let n = v.l2_norm();
                if n > 0.0 {
                    v.scaled(target / n)
                } else {
                    v
                }
            };
            (norm(u), norm(b))
        }
    };
    let k = g.k_cut();
    Ok((u.truncate(k).leray_project(), b.truncate(k).leray_project()))
}

fn default_blowup() -> f64 {
    1e6
}

/// Solver parameters. `diag_every` and `snapshot_every` count steps; a zero
/// `snapshot_every` disables snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub grid: SpectralGrid,
    pub nu: f64,
    pub s: f64,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub ic: InitialCondition,
    pub diag_every: usize,
    pub snapshot_every: usize,
    pub blowup_factor: f64,
}

impl SolverConfig {
    pub fn new(grid: SpectralGrid, nu: f64, s: f64, dt: f64, t_end: f64, ic: InitialCondition) -> Self {
        SolverConfig {
            grid,
            nu,
            s,
            dt,
            t_end,
            scheme: Scheme::IfRk4,
            ic,
            diag_every: 1,
            snapshot_every: 0,
            blowup_factor: default_blowup(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let half = self.grid.n_dim() as f64 / 2.0;
        if !(self.s > half) {
            return Err(Error::InvalidParameter(format!(
                "Sobolev index must satisfy s > n/2 (s = {}, n/2 = {half})",
                self.s
            )));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("viscosity nu must be positive, got {}", self.nu)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("T must be non-negative, got {}", self.t_end)));
        }
        self.n_steps()?;
        if self.diag_every == 0 {
            return Err(Error::InvalidParameter("diag_every must be at least 1".into()));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(Error::InvalidParameter("blow-up factor must exceed 1".into()));
        }
        Ok(())
    }

    /// Number of steps; `T` must be an integer multiple of `dt`.
    pub fn n_steps(&self) -> Result<usize> {
        let r = self.t_end / self.dt;
        let n = r.round();
        if (r - n).abs() > 1e-8 * r.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "T = {} is not an integer multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }

    /// Largest step allowed by `dt ≤ 0.5 L / (2π K_R max(‖u‖∞, ‖B‖∞, ε))`.
    pub fn cfl_limit(&self, sup: f64) -> f64 {
        cfl_limit(&self.grid, sup)
    }
}

pub fn cfl_limit(grid: &SpectralGrid, sup: f64) -> f64 {
    if grid.k_cut() == 0 {
        return f64::INFINITY;
    }
    0.5 * grid.length() / (TWO_PI * grid.k_cut() as f64 * sup.max(1e-12))
}

/// Per-sample diagnostics. `energy` is `½(‖u‖² + ‖B‖²)`, `diss` is
/// `ν‖∇u‖²` and `cumdiss` its time integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub diss: f64,
    pub cumdiss: f64,
    pub hs_u: f64,
    pub hs_b: f64,
    pub y: f64,
    pub hs_gradu: f64,
    pub cum_hs_gradu: f64,
    pub b_envelope: f64,
    pub div_u: f64,
    pub div_b: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str = "t,E,diss,cumdiss,Hs_u,Hs_B,Y,Hs_gradu,cum_Hs_gradu,B_envelope,div_u,div_B";

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t,
            self.energy,
            self.diss,
            self.cumdiss,
            self.hs_u,
            self.hs_b,
            self.y,
            self.hs_gradu,
            self.cum_hs_gradu,
            self.b_envelope,
            self.div_u,
            self.div_b
        )
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.energy,
            self.diss,
            self.cumdiss,
            self.hs_u,
            self.hs_b,
            self.y,
            self.hs_gradu,
            self.cum_hs_gradu,
            self.b_envelope,
            self.div_u,
            self.div_b,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// `E(t) + ∫ν‖∇u‖² − E(0)`.
    pub fn energy_residual(&self, e0: f64) -> f64 {
        self.energy + self.cumdiss - e0
    }
}

pub fn records_to_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::from(DiagnosticsRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Precomputed multipliers for one grid and viscosity.
pub(crate) struct Engine {
    pub grid: SpectralGrid,
    active: Vec<bool>,
    /// `2π k_j / L` per axis and index.
    mult: Vec<Vec<f64>>,
    visc: Vec<f64>,
}

impl Engine {
    pub fn new(grid: &SpectralGrid, nu: f64) -> Self {
        let g = *grid;
        let k = g.k_cut();
        let active = (0..g.len()).map(|i| g.in_ball(i, k)).collect();
        let mult = (0..g.n_dim())
            .map(|j| (0..g.len()).map(|i| TWO_PI * g.wavevector(i)[j] as f64 / g.length()).collect())
            .collect();
        let inv_l2 = 1.0 / (g.length() * g.length());
        let visc = (0..g.len()).map(|i| 4.0 * std::f64::consts::PI.powi(2) * nu * g.k_sq(i) as f64 * inv_l2).collect();
        Engine { grid: g, active, mult, visc }
    }

    /// Exact viscous factor `e^{−4π²ν|k/L|² h}` applied to `v`.
    pub fn decay(&self, v: &VectorField, h: f64) -> VectorField {
        let mut out = v.clone();
        for c in out.components_mut() {
            for (z, a) in c.coeffs_mut().iter_mut().zip(&self.visc) {
                if *a != 0.0 {
                    *z *= (-a * h).exp();
                }
            }
        }
        out
    }

    fn derivative(&self, c: &[Complex64], j: usize) -> Vec<Complex64> {
        c.iter().zip(&self.mult[j]).map(|(z, m)| Complex64::new(-z.im * m, z.re * m)).collect()
    }

    /// Projected, truncated quadratic terms `(N_u, N_B)` and `max(‖u‖∞, ‖B‖∞)`.
    pub fn nonlinear(&self, u: &VectorField, b: &VectorField) -> Result<(VectorField, VectorField, f64)> {
        if !(u.is_hermitian() && b.is_hermitian()) {
            return Err(Error::InvalidParameter("solver state must be real-valued".into()));
        }
        let d = self.grid.n_dim();
        let mut spec: Vec<Vec<Complex64>> = Vec::with_capacity(2 * d + 2 * d * d);
        for c in u.components() {
            spec.push(c.coeffs().to_vec());
        }
        for c in b.components() {
            spec.push(c.coeffs().to_vec());
        }
        for v in [u, b] {
            for c in v.components() {
                for j in 0..d {
                    spec.push(self.derivative(c.coeffs(), j));
                }
            }
        }
        let refs: Vec<&[Complex64]> = spec.iter().map(|v| v.as_slice()).collect();
        let phys = fft::to_physical_real_many(&self.grid, &refs);
        let uu = &phys[0..d];
        let bb = &phys[d..2 * d];
        let gu = |i: usize, j: usize| &phys[2 * d + i * d + j];
        let gb = |i: usize, j: usize| &phys[2 * d + d * d + i * d + j];

        let npts = self.grid.len();
        let mut sup2 = 0.0f64;
        for x in 0..npts {
            let su: f64 = uu.iter().map(|c| c[x] * c[x]).sum();
            let sb: f64 = bb.iter().map(|c| c[x] * c[x]).sum();
            sup2 = sup2.max(su).max(sb);
        }

        let mut out = vec![vec![0.0; npts]; 2 * d];
        for i in 0..d {
            let (left, right) = out.split_at_mut(d);
            let fu = &mut left[i];
            let fb = &mut right[i];
            for j in 0..d {
                let (uj, bj) = (&uu[j], &bb[j]);
                let (gbij, guij) = (gb(i, j), gu(i, j));
                for x in 0..npts {
                    fu[x] += bj[x] * gbij[x] - uj[x] * guij[x];
                    fb[x] += bj[x] * guij[x] - uj[x] * gbij[x];
                }
            }
        }
        let coeffs = fft::to_spectral_real_many(&self.grid, &out);
        let mut fields = coeffs.into_iter().map(|mut c| {
            for (z, keep) in c.iter_mut().zip(&self.active) {
                if !keep {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
            SpectralField::from_coeffs(self.grid, c, true).expect("grid length")
        });
        let nu_f = VectorField::new(fields.by_ref().take(d).collect())?.leray_project();
        let nb_f = VectorField::new(fields.collect())?.leray_project();
        Ok((nu_f, nb_f, sup2.sqrt()))
    }
}

/// Time derivatives `(∂t u, ∂t B)` of the truncated system.
pub fn rhs(state: &MhdState, cfg: &SolverConfig) -> Result<(VectorField, VectorField)> {
    let engine = Engine::new(state.grid(), cfg.nu);
    let (nu_f, nb_f, _) = engine.nonlinear(&state.u, &state.b)?;
    let visc = state.u.laplacian().scaled(cfg.nu);
    Ok((nu_f.add(&visc)?, nb_f))
}

/// Increments of the running integrals accumulated over one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepIntegrals {
    /// `∫ ν‖∇u‖² dt` over the step.
    pub diss: f64,
    /// `∫ ‖∇u‖_{H^s} dt` over the step.
    pub gradu_hs: f64,
}

fn check_finite(v: &VectorField, t: f64, what: &str) -> Result<()> {
    for c in v.components() {
        if c.coeffs().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { t, what: what.to_string() });
        }
    }
    Ok(())
}

pub(crate) fn combine(terms: &[(f64, &VectorField)]) -> Result<VectorField> {
    let mut out = terms[0].1.scaled(terms[0].0);
    for (a, v) in &terms[1..] {
        out.axpy(*a, v)?;
    }
    Ok(out)
}

pub(crate) fn step_with(engine: &Engine, state: &MhdState, cfg: &SolverConfig) -> Result<(MhdState, StepIntegrals)> {
    let h = cfg.dt;
    let (un, bn) = (&state.u, &state.b);
    let q = |u: &VectorField| (cfg.nu * u.gradient_sobolev_norm(0.0).powi(2), u.gradient_sobolev_norm(cfg.s));

    let (au, ab, sup) = engine.nonlinear(un, bn)?;
    let limit = cfg.cfl_limit(sup);
    if h > limit {
        return Err(Error::Cfl { dt: h, limit });
    }
    let e_un_half = engine.decay(un, 0.5 * h);
    let e_un_full = engine.decay(un, h);

    let ua = engine.decay(&combine(&[(1.0, un), (0.5 * h, &au)])?, 0.5 * h);
    let ba = combine(&[(1.0, bn), (0.5 * h, &ab)])?;
    let (bu, bb, _) = engine.nonlinear(&ua, &ba)?;

    let ub = combine(&[(1.0, &e_un_half), (0.5 * h, &bu)])?;
    let bbs = combine(&[(1.0, bn), (0.5 * h, &bb)])?;
    let (cu, cb, _) = engine.nonlinear(&ub, &bbs)?;

    let uc = combine(&[(1.0, &e_un_full), (h, &engine.decay(&cu, 0.5 * h))])?;
    let bc = combine(&[(1.0, bn), (h, &cb)])?;
    let (du, db, _) = engine.nonlinear(&uc, &bc)?;

    let mid = engine.decay(&bu.add(&cu)?, 0.5 * h);
    let mut u_next =
        combine(&[(1.0, &e_un_full), (h / 6.0, &engine.decay(&au, h)), (h / 3.0, &mid), (h / 6.0, &du)])?;
    let mut b_next = combine(&[(1.0, bn), (h / 6.0, &ab), (h / 3.0, &bb), (h / 3.0, &cb), (h / 6.0, &db)])?;
    u_next.leray_project_in_place();
    b_next.leray_project_in_place();
    let t = state.t + h;
    check_finite(&u_next, t, "velocity")?;
    check_finite(&b_next, t, "magnetic field")?;

    let (q0, r0) = q(un);
    let (q1, r1) = q(&ua);
    let (q2, r2) = q(&ub);
    let (q3, r3) = q(&uc);
    let integrals = StepIntegrals {
        diss: h / 6.0 * (q0 + 2.0 * q1 + 2.0 * q2 + q3),
        gradu_hs: h / 6.0 * (r0 + 2.0 * r1 + 2.0 * r2 + r3),
    };
    Ok((MhdState { t, u: u_next, b: b_next }, integrals))
}

/// One IF-RK4 step of size `cfg.dt`, with the accumulated integrals.
pub fn step_detailed(state: &MhdState, cfg: &SolverConfig) -> Result<(MhdState, StepIntegrals)> {
    step_with(&Engine::new(state.grid(), cfg.nu), state, cfg)
}

pub fn step(state: &MhdState, cfg: &SolverConfig) -> Result<MhdState> {
    Ok(step_detailed(state, cfg)?.0)
}

/// Diagnostics of `state` given the running integrals.
pub fn diagnostics(state: &MhdState, cfg: &SolverConfig, cumdiss: f64, cum_gradu: f64, hs_b0: f64) -> Result<DiagnosticsRecord> {
    let (u, b) = (&state.u, &state.b);
    let hs_u = u.sobolev_norm(cfg.s, NormKind::Inhomogeneous)?;
    let hs_b = b.sobolev_norm(cfg.s, NormKind::Inhomogeneous)?;
    let grad0 = u.gradient_sobolev_norm(0.0);
    Ok(DiagnosticsRecord {
        t: state.t,
        energy: 0.5 * (u.l2_norm().powi(2) + b.l2_norm().powi(2)),
        diss: cfg.nu * grad0 * grad0,
        cumdiss,
        hs_u,
        hs_b,
        y: hs_u * hs_u + hs_b * hs_b,
        hs_gradu: u.gradient_sobolev_norm(cfg.s),
        cum_hs_gradu: cum_gradu,
        b_envelope: hs_b0 * cum_gradu.exp(),
        div_u: u.divergence_residual(),
        div_b: b.divergence_residual(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowUp { t: f64, y: f64, ceiling: f64 },
}

/// Runtime monitors evaluated at every sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Monitors {
    /// Largest `E(t_{m+1}) − E(t_m)` between consecutive samples.
    pub max_energy_increase: f64,
    /// Samples with `‖B‖_{H^s}` above the Gronwall envelope.
    pub envelope_violations: usize,
    pub max_div_u: f64,
    pub max_div_b: f64,
    /// Largest coefficient magnitude outside `|k| ≤ K_R`.
    pub max_outside_support: f64,
    /// `sup_t Y(t) / Y(0)`.
    pub max_y_ratio: f64,
    /// Smallest `C` with `Y(t) ≤ νY₀/(ν − C t Y₀)` at every sample, i.e.
    /// `sup_t ν(Y − Y₀)/(t Y Y₀)`; 0 when `Y` never exceeds `Y₀`.
    pub implied_gronwall_c: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<DiagnosticsRecord>,
    pub status: RunStatus,
    pub monitors: Monitors,
    pub snapshots: Vec<MhdState>,
    pub final_state: MhdState,
}

impl RunOutcome {
    pub fn energy_residual(&self) -> f64 {
        let e0 = self.records[0].energy;
        self.records.last().map_or(0.0, |r| r.energy_residual(e0))
    }
}

/// Relative slack allowed when comparing `‖B‖_{H^s}` with its envelope.
pub const ENVELOPE_SLACK: f64 = 1e-10;

/// Integrate from the configured initial condition to `T`.
pub fn run(cfg: &SolverConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let (u0, b0) = initial_condition(&cfg.ic, &cfg.grid)?;
    run_from(cfg, MhdState { t: 0.0, u: u0, b: b0 })
}

pub fn run_from(cfg: &SolverConfig, initial: MhdState) -> Result<RunOutcome> {
    cfg.validate()?;
    let n_steps = cfg.n_steps()?;
    let engine = Engine::new(&cfg.grid, cfg.nu);
    let hs_b0 = initial.b.sobolev_norm(cfg.s, NormKind::Inhomogeneous)?;
    let mut state = initial;
    let (mut cumdiss, mut cum_gradu) = (0.0, 0.0);
    let first = diagnostics(&state, cfg, 0.0, 0.0, hs_b0)?;
    let y0 = first.y;
    let ceiling = cfg.blowup_factor * y0;
    let mut monitors = Monitors { max_y_ratio: 1.0, ..Default::default() };
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let k_cut = cfg.grid.k_cut();

    let mut observe = |rec: DiagnosticsRecord, state: &MhdState, records: &mut Vec<DiagnosticsRecord>| {
        if let Some(prev) = records.last() {
            monitors.max_energy_increase = monitors.max_energy_increase.max(rec.energy - prev.energy);
        }
        if rec.hs_b > rec.b_envelope * (1.0 + ENVELOPE_SLACK) {
            monitors.envelope_violations += 1;
        }
        monitors.max_div_u = monitors.max_div_u.max(rec.div_u);
        monitors.max_div_b = monitors.max_div_b.max(rec.div_b);
        monitors.max_outside_support = monitors
            .max_outside_support
            .max(state.u.max_outside_ball(k_cut))
            .max(state.b.max_outside_ball(k_cut));
        if y0 > 0.0 {
            monitors.max_y_ratio = monitors.max_y_ratio.max(rec.y / y0);
            if rec.t > 0.0 && rec.y > y0 {
                let c = cfg.nu * (rec.y - y0) / (rec.t * rec.y * y0);
                monitors.implied_gronwall_c = monitors.implied_gronwall_c.max(c);
            }
        }
        records.push(rec);
    };
    observe(first, &state, &mut records);
    if cfg.snapshot_every > 0 {
        snapshots.push(state.clone());
    }

    let mut status = RunStatus::Completed;
    for n in 1..=n_steps {
        let (next, inc) = step_with(&engine, &state, cfg)?;
        state = next;
        state.t = n as f64 * cfg.dt;
        cumdiss += inc.diss;
        cum_gradu += inc.gradu_hs;
        let sample = n % cfg.diag_every == 0 || n == n_steps;
        let hs_u = state.u.sobolev_norm(cfg.s, NormKind::Inhomogeneous)?;
        let hs_b = state.b.sobolev_norm(cfg.s, NormKind::Inhomogeneous)?;
        let y = hs_u * hs_u + hs_b * hs_b;
        let blown = y0 > 0.0 && y > ceiling;
        if sample || blown {
            let rec = diagnostics(&state, cfg, cumdiss, cum_gradu, hs_b0)?;
            if !rec.is_finite() {
                return Err(Error::NonFinite { t: state.t, what: "diagnostics".into() });
            }
            observe(rec, &state, &mut records);
        }
        if cfg.snapshot_every > 0 && n % cfg.snapshot_every == 0 {
            snapshots.push(state.clone());
        }
        if blown {
            status = RunStatus::BlowUp { t: state.t, y, ceiling };
            break;
        }
    }
    Ok(RunOutcome { records, status, monitors, snapshots, final_state: state })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyRow {
    pub k: usize,
    pub k_next: usize,
    /// `sup_t (‖u^K − u^{K'}‖_{L²} + ‖B^K − B^{K'}‖_{L²})`.
    pub sup_diff: f64,
}

/// Same cutoff, halved step: isolates the time-integration error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlRow {
    pub k: usize,
    pub dt: f64,
    pub dt_fine: f64,
    pub sup_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyReport {
    pub rows: Vec<CauchyRow>,
    pub control: Option<ControlRow>,
}

impl CauchyReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_diff < w[0].sup_diff)
    }

    pub const CSV_HEADER: &'static str = "kind,K,K_next,dt,sup_diff";

    pub fn to_csv(&self, dt: f64) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("cutoff,{},{},{:e},{:e}\n", r.k, r.k_next, dt, r.sup_diff));
        }
        if let Some(c) = &self.control {
            out.push_str(&format!("time_step,{},{},{:e},{:e}\n", c.k, c.k, c.dt_fine, c.sup_diff));
        }
        out
    }
}

fn pair_distance(a: &MhdState, b: &MhdState) -> Result<f64> {
    Ok(a.u.l2_distance(&b.u)? + a.b.l2_distance(&b.b)?)
}

/// Run the same initial data truncated to each cutoff in `k_list` (each on
/// its smallest dealiased grid, same box and step) and report the sup-in-time
/// distance between consecutive cutoffs. With `control`, the largest cutoff
/// is rerun at `dt/2` for comparison.
pub fn cauchy_experiment(base: &SolverConfig, k_list: &[usize], control: bool) -> Result<CauchyReport> {
    if k_list.len() < 2 {
        return Err(Error::InvalidParameter("need at least two cutoffs".into()));
    }
    if k_list.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("cutoffs must be non-decreasing".into()));
    }
    base.validate()?;
    let n_steps = base.n_steps()?;
    let g0 = base.grid;
    let k_max = *k_list.last().expect("non-empty");
    let top = g0.with_cutoff(k_max.max(g0.k_cut()))?;
    let (u0, b0) = initial_condition(&base.ic, &top)?;

    let mut cfgs = Vec::new();
    let mut states = Vec::new();
    let mut engines = Vec::new();
    for &k in k_list {
        let grid = g0.with_cutoff(k)?;
        if !grid.is_nested_with(&top) {
            return Err(Error::GridMismatch("cutoff grids are not nested".into()));
        }
        let cfg = SolverConfig { grid, ..base.clone() };
        let u = u0.truncate(k).resample(&grid)?;
        let b = b0.truncate(k).resample(&grid)?;
        engines.push(Engine::new(&grid, cfg.nu));
        states.push(MhdState { t: 0.0, u, b });
        cfgs.push(cfg);
    }
    let mut sup = vec![0.0f64; k_list.len() - 1];
    let update = |states: &[MhdState], sup: &mut [f64]| -> Result<()> {
        for i in 0..sup.len() {
            sup[i] = sup[i].max(pair_distance(&states[i], &states[i + 1])?);
        }
        Ok(())
    };
    update(&states, &mut sup)?;
    let mut top_traj = Vec::new();
    if control {
        top_traj.push(states.last().expect("non-empty").clone());
    }
    for _ in 0..n_steps {
        for i in 0..states.len() {
            states[i] = step_with(&engines[i], &states[i], &cfgs[i])?.0;
        }
        update(&states, &mut sup)?;
        if control {
            top_traj.push(states.last().expect("non-empty").clone());
        }
    }
    let rows = k_list
        .windows(2)
        .zip(&sup)
        .map(|(w, d)| CauchyRow { k: w[0], k_next: w[1], sup_diff: *d })
        .collect();

    let control = if control {
        let cfg = SolverConfig { dt: 0.5 * base.dt, ..cfgs.last().expect("non-empty").clone() };
        let engine = Engine::new(&cfg.grid, cfg.nu);
        let mut st = top_traj[0].clone();
        let mut worst = 0.0f64;
        for reference in &top_traj[1..] {
            st = step_with(&engine, &st, &cfg)?.0;
            st = step_with(&engine, &st, &cfg)?.0;
            worst = worst.max(pair_distance(&st, reference)?);
        }
        Some(ControlRow { k: k_max, dt: base.dt, dt_fine: cfg.dt, sup_diff: worst })
    } else {
        None
    };
    Ok(CauchyReport { rows, control })
}
