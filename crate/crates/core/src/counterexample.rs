//! Endpoint failure of the commutator estimate in two dimensions.
//!
//! With `u = ∇⊥φ`, `B = ∇⊥ψ` and
//!
//! ```text
//! φ̂(ζ) = g(|ζ|) h₁(arg ζ) / (|ζ|² (1+|ζ|²)^{1/2})
//! ψ̂(η) = g(|η|) h₂(arg η) / (|η|  (1+|η|²)^{1/2})
//! g(r)  = 1 / (r (log r)^α)   for r > e
//! ```
//!
//! (`h₁`, `h₂` indicators of the sectors around π/4 and 3π/4 of half-width
//! δ) both `‖∇u‖_{H¹}` and `‖B‖_{H¹}` are finite for α > 1/2, while the
//! transform of `((∂_k u)·∇)B₁` fails to be square integrable for α < 3/4.
//!
//! Everything is computed in continuum Fourier space on log-polar meshes:
//! Simpson in `log r`, trapezoid in angle. Fields are complex and
//! one-sided in angle, so nothing here is Hermitian.

use std::f64::consts::{E, FRAC_1_SQRT_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::rng_from_seed;

const PHI_CENTER: f64 = FRAC_PI_4;
const PSI_CENTER: f64 = 3.0 * FRAC_PI_4;

fn default_k_index() -> usize {
    1
}
fn default_density() -> f64 {
    400.0
}
fn default_n_theta() -> usize {
    64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleParams {
    pub alpha: f64,
    pub delta: f64,
    /// Outer radius of both supports.
    pub p_max: f64,
    /// Which derivative `∂_k` enters the product; 1 or 2.
    #[serde(default = "default_k_index")]
    pub k_index: usize,
    /// Simpson intervals per unit of `log r`.
    #[serde(default = "default_density")]
    pub radial_density: f64,
    /// Angular nodes per sector.
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
}

impl CounterexampleParams {
    pub fn new(alpha: f64, delta: f64, p_max: f64) -> Self {
        CounterexampleParams {
            alpha,
            delta,
            p_max,
            k_index: default_k_index(),
            radial_density: default_density(),
            n_theta: default_n_theta(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.alpha > 0.5 && self.alpha.is_finite()) {
            return bad(format!("alpha = {} out of range: the H^1 norms are finite iff alpha > 1/2", self.alpha));
        }
        if self.alpha == 0.75 {
            return bad("alpha = 3/4 is the borderline case; choose alpha in (1/2, 3/4) or (3/4, inf)".into());
        }
        if !(self.delta > 0.0 && self.delta < FRAC_1_SQRT_2) {
            return bad(format!("delta = {} must lie in (0, 1/sqrt 2)", self.delta));
        }
        if !(self.p_max > E && self.p_max.is_finite()) {
            return bad(format!("P_max = {} must exceed e", self.p_max));
        }
        if !(self.k_index == 1 || self.k_index == 2) {
            return bad(format!("k_index = {} must be 1 or 2", self.k_index));
        }
        if !(self.radial_density > 0.0) || self.n_theta < 2 {
            return bad("quadrature needs a positive radial density and at least 2 angular nodes".into());
        }
        Ok(())
    }

    /// `K = sin(δ/2)`.
    pub fn k_sin(&self) -> f64 {
        (0.5 * self.delta).sin()
    }

    pub fn with_p_max(&self, p_max: f64) -> Self {
        CounterexampleParams { p_max, ..*self }
    }

    /// Whether the fields belong to the window where the product leaves L².
    pub fn in_failing_window(&self) -> bool {
        self.alpha < 0.75
    }
}

/// `M_δ = (√2/2 − δ)² (1 − 4δ/π)`, on the closed range `[0, 1/√2]`.
pub fn m_delta(delta: f64) -> Result<f64> {
    if !(0.0..=FRAC_1_SQRT_2).contains(&delta) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside [0, 1/sqrt 2]")));
    }
    Ok((FRAC_1_SQRT_2 - delta).powi(2) * (1.0 - 4.0 * delta / PI))
}

fn arg(v: [f64; 2]) -> f64 {
    v[1].atan2(v[0])
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// `(ζ_k/|ζ|)(η₂/|η|)(ζ⊥·η)/(|ζ||η|)` with `ζ⊥ = (−ζ₂, ζ₁)`.
fn sector_product(zeta: [f64; 2], eta: [f64; 2], k_index: usize) -> f64 {
    let (a, b) = (norm(zeta), norm(eta));
    let cross = zeta[0] * eta[1] - zeta[1] * eta[0];
    (zeta[k_index - 1] / a) * (eta[1] / b) * (cross / (a * b))
}

/// Returns the normalised product and whether it reaches `M_δ`.
pub fn lemma_a1_check(zeta: [f64; 2], eta: [f64; 2], delta: f64, k_index: usize) -> Result<(f64, bool)> {
    if !(delta > 0.0 && delta < FRAC_1_SQRT_2) || !(k_index == 1 || k_index == 2) {
        return Err(Error::InvalidParameter(format!("delta = {delta}, k_index = {k_index}")));
    }
    let in_sector = |v: [f64; 2], c: f64| norm(v) > 0.0 && (arg(v) - c).abs() < delta;
    if !in_sector(zeta, PHI_CENTER) || !in_sector(eta, PSI_CENTER) {
        return Err(Error::Precondition(format!("zeta = {zeta:?}, eta = {eta:?} not in the open sectors of half-width {delta}")));
    }
    let lhs = sector_product(zeta, eta, k_index);
    Ok((lhs, lhs >= m_delta(delta)?))
}

/// `ξ ∈ Ξ`, `ζ ∈ Υ_ξ` ⟹ `arg(ξ − ζ) ∈ [3π/4 − δ, 3π/4 + δ]`.
pub fn lemma_a2_check(xi: [f64; 2], zeta: [f64; 2], delta: f64) -> Result<bool> {
    if !(delta > 0.0 && delta < FRAC_1_SQRT_2) {
        return Err(Error::InvalidParameter(format!("delta = {delta}")));
    }
    if norm(xi) == 0.0 || (arg(xi) - PSI_CENTER).abs() > 0.5 * delta {
        return Err(Error::Precondition(format!("xi = {xi:?} outside the sector of half-width delta/2")));
    }
    let z = norm(zeta);
    if z >= norm(xi) * (0.5 * delta).sin() || (z > 0.0 && (arg(zeta) - PHI_CENTER).abs() > delta) {
        return Err(Error::Precondition(format!("zeta = {zeta:?} outside the admissible region for xi = {xi:?}")));
    }
    let a = arg([xi[0] - zeta[0], xi[1] - zeta[1]]);
    Ok((a - PSI_CENTER).abs() <= delta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSweep {
    pub delta: f64,
    pub samples: usize,
    pub violations: usize,
    /// Smallest slack seen: `lhs − M_δ` for the product check, angular distance
    /// to the sector edge for the angle check.
    pub min_margin: f64,
    /// Slack of every sample, in draw order; negative means a violation.
    #[serde(skip)]
    pub margins: Vec<f64>,
}

impl LemmaSweep {
    fn new(delta: f64, samples: usize) -> Self {
        LemmaSweep { delta, samples, violations: 0, min_margin: f64::INFINITY, margins: Vec::with_capacity(samples) }
    }

    fn push(&mut self, margin: f64, holds: bool) {
        if !holds {
            self.violations += 1;
        }
        self.min_margin = self.min_margin.min(margin);
        self.margins.push(margin);
    }
}

fn open_offset<R: Rng>(rng: &mut R, half: f64) -> f64 {
    loop {
        let t = rng.random_range(-half..half);
        if t > -half {
            return t;
        }
    }
}

fn polar(r: f64, theta: f64) -> [f64; 2] {
    [r * theta.cos(), r * theta.sin()]
}

/// Random in-sector pairs with log-uniform magnitudes on `[1e-3, 1e3]`.
pub fn lemma_a1_sweep(delta: f64, k_index: usize, samples: usize, seed: u64) -> Result<LemmaSweep> {
    let m = m_delta(delta)?;
    let mut rng = rng_from_seed(seed);
    let mut out = LemmaSweep::new(delta, samples);
    for _ in 0..samples {
        let zeta = polar(10f64.powf(rng.random_range(-3.0..3.0)), PHI_CENTER + open_offset(&mut rng, delta));
        let eta = polar(10f64.powf(rng.random_range(-3.0..3.0)), PSI_CENTER + open_offset(&mut rng, delta));
        let (lhs, holds) = lemma_a1_check(zeta, eta, delta, k_index)?;
        out.push(lhs - m, holds);
    }
    Ok(out)
}

/// Random `ξ ∈ Ξ` with `|ξ|` log-uniform on `[1, 1e6]` and `ζ ∈ Υ_ξ` (the
/// origin included).
pub fn lemma_a2_sweep(delta: f64, samples: usize, seed: u64) -> Result<LemmaSweep> {
    let mut rng = rng_from_seed(seed);
    let k = (0.5 * delta).sin();
    let mut out = LemmaSweep::new(delta, samples);
    for _ in 0..samples {
        let r = 10f64.powf(rng.random_range(0.0..6.0));
        let xi = polar(r, PSI_CENTER + rng.random_range(-0.5 * delta..=0.5 * delta));
        let zeta = polar(r * k * rng.random_range(0.0..1.0), PHI_CENTER + rng.random_range(-delta..=delta));
        let holds = lemma_a2_check(xi, zeta, delta)?;
        let a = arg([xi[0] - zeta[0], xi[1] - zeta[1]]);
        out.push(delta - (a - PSI_CENTER).abs(), holds);
    }
    Ok(out)
}

/// `g(r) = 1/(r (log r)^α)` for `r > e`, else 0.
pub fn g(r: f64, alpha: f64) -> f64 {
    if r > E {
        1.0 / (r * r.ln().powf(alpha))
    } else {
        0.0
    }
}

/// Pointwise evaluators of `φ̂` and `ψ̂`, zero outside `e < |·| < P` and the
/// closed angular sectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profiles {
    pub params: CounterexampleParams,
}

impl Profiles {
    fn support(&self, v: [f64; 2], center: f64) -> Option<f64> {
        let r = norm(v);
        (r > E && r < self.params.p_max && (arg(v) - center).abs() <= self.params.delta).then_some(r)
    }

    pub fn phi_hat(&self, zeta: [f64; 2]) -> Complex64 {
        let v = self
            .support(zeta, PHI_CENTER)
            .map_or(0.0, |r| g(r, self.params.alpha) / (r * r * (1.0 + r * r).sqrt()));
        Complex64::new(v, 0.0)
    }

    pub fn psi_hat(&self, eta: [f64; 2]) -> Complex64 {
        let v = self
            .support(eta, PSI_CENTER)
            .map_or(0.0, |r| g(r, self.params.alpha) / (r * (1.0 + r * r).sqrt()));
        Complex64::new(v, 0.0)
    }
}

pub fn build_profiles(params: &CounterexampleParams) -> Result<Profiles> {
    params.validate()?;
    Ok(Profiles { params: *params })
}

/// Even number of Simpson intervals for a span of `len` at `density` per unit.
fn simpson_intervals(len: f64, density: f64) -> usize {
    let n = (len * density).ceil().max(2.0) as usize;
    n + n % 2
}

/// Nodes and weights of composite Simpson on `[a, b]` with `n` (even) intervals.
fn simpson(a: f64, b: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let h = (b - a) / n as f64;
    (0..=n).map(move |i| {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        (if i == n { b } else { a + h * i as f64 }, w * h / 3.0)
    })
}

/// Nodes and weights of the trapezoid rule with `n ≥ 2` nodes on `[a, b]`.
fn trapezoid(a: f64, b: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(move |i| {
        let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
        (if i == n - 1 { b } else { a + h * i as f64 }, w)
    })
}

/// Tensor mesh on the sector-annulus `r ∈ [r_min, r_max]`,
/// `θ ∈ [θ_min, θ_max]`. Weights carry the area element `r dr dθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPolarGrid {
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    pub radial_weights: Vec<f64>,
    pub angular_weights: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl LogPolarGrid {
    pub fn new(r_min: f64, r_max: f64, theta_min: f64, theta_max: f64, density: f64, n_theta: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && theta_max > theta_min && density > 0.0 && n_theta >= 2) {
            return Err(Error::InvalidParameter(format!(
                "log-polar mesh [{r_min}, {r_max}] x [{theta_min}, {theta_max}], density {density}, {n_theta} angles"
            )));
        }
        let (u0, u1) = (r_min.ln(), r_max.ln());
        let (mut radii, mut radial_weights) = (Vec::new(), Vec::new());
        for (u, w) in simpson(u0, u1, simpson_intervals(u1 - u0, density)) {
            let r = u.exp();
            radii.push(r);
            radial_weights.push(w * r * r);
        }
        let (angles, angular_weights) = trapezoid(theta_min, theta_max, n_theta).unzip();
        Ok(LogPolarGrid { radii, angles, radial_weights, angular_weights, r_min, r_max, theta_min, theta_max })
    }

    /// Mesh covering the support of `φ̂` (or `ψ̂` when `psi` is set).
    pub fn for_sector(params: &CounterexampleParams, psi: bool) -> Result<Self> {
        let c = if psi { PSI_CENTER } else { PHI_CENTER };
        Self::new(E, params.p_max, c - params.delta, c + params.delta, params.radial_density, params.n_theta)
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.radial_weights[i] * self.angular_weights[j]
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (&r, &wr) in self.radii.iter().zip(&self.radial_weights) {
            for (&t, &wt) in self.angles.iter().zip(&self.angular_weights) {
                acc += wr * wt * f(r, t);
            }
        }
        acc
    }

    pub fn total_weight(&self) -> f64 {
        self.radial_weights.iter().sum::<f64>() * self.angular_weights.iter().sum::<f64>()
    }

    pub fn exact_area(&self) -> f64 {
        0.5 * (self.theta_max - self.theta_min) * (self.r_max * self.r_max - self.r_min * self.r_min)
    }
}

/// Quadrature values of `(‖∇u‖²_{H¹}, ‖B‖²_{H¹}) = (∫|g h₁|², ∫|g h₂|²)`.
pub fn norms_h1(params: &CounterexampleParams) -> Result<(f64, f64)> {
    params.validate()?;
    let a = params.alpha;
    // Closed support: the node at r = e takes the limit from above.
    let f = |r: f64, _t: f64| (r * r.ln().max(1.0).powf(a)).powi(-2);
    let u = LogPolarGrid::for_sector(params, false)?.integrate(f);
    let b = LogPolarGrid::for_sector(params, true)?.integrate(f);
    Ok((u, b))
}

/// `2δ [1 − (log P)^{1−2α}] / (2α − 1)`.
pub fn norms_h1_analytic(alpha: f64, delta: f64, p: f64) -> f64 {
    2.0 * delta * (1.0 - p.ln().powf(1.0 - 2.0 * alpha)) / (2.0 * alpha - 1.0)
}

/// `P → ∞` limit `2δ / (2α − 1)`.
pub fn norms_h1_limit(alpha: f64, delta: f64) -> f64 {
    2.0 * delta / (2.0 * alpha - 1.0)
}

/// Transform value with per-node statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformEval {
    pub value: Complex64,
    pub nodes: usize,
    /// Nodes whose contribution is negative.
    pub negative_nodes: usize,
    pub min_contribution: f64,
    /// `min √2·|v|/(1+|v|²)^{1/2}` over `v ∈ {ζ, ξ−ζ}` at every node; at least
    /// 1 when the comparability bound holds.
    pub min_comparability: f64,
}

/// Admissible `r` along the ray `ζ = r ω`: `e ≤ r ≤ P`, `e ≤ |ξ − ζ| ≤ P` and
/// `arg(ξ − ζ)` in the closed `ψ̂` sector. At most two intervals.
fn ray_intervals(xi: [f64; 2], omega: [f64; 2], delta: f64, p: f64) -> [Option<(f64, f64)>; 2] {
    let (mut lo, mut hi) = (E, p);
    let (a1, a2) = (PSI_CENTER - delta, PSI_CENTER + delta);
    for n in [[-a1.sin(), a1.cos()], [a2.sin(), -a2.cos()]] {
        let a = n[0] * xi[0] + n[1] * xi[1];
        let b = n[0] * omega[0] + n[1] * omega[1];
        if b > 0.0 {
            hi = hi.min(a / b);
        } else if b < 0.0 {
            lo = lo.max(a / b);
        } else if a < 0.0 {
            return [None, None];
        }
    }
    let q = xi[0] * omega[0] + xi[1] * omega[1];
    let cross = xi[0] * omega[1] - xi[1] * omega[0];
    let xi2 = xi[0] * xi[0] + xi[1] * xi[1];
    // Roots of |ξ − rω|² = c², written to avoid cancellation for large |ξ|.
    let roots = |c: f64| -> Option<(f64, f64)> {
        let disc = (c - cross.abs()) * (c + cross.abs());
        if disc <= 0.0 {
            return None;
        }
        let s = disc.sqrt();
        let far = q + q.signum() * s;
        let near = if far != 0.0 { (xi2 - c * c) / far } else { q - s };
        Some((near.min(far), near.max(far)))
    };
    match roots(p) {
        Some((r0, r1)) => {
            lo = lo.max(r0);
            hi = hi.min(r1);
        }
        None => return [None, None],
    }
    if !(hi > lo) {
        return [None, None];
    }
    match roots(E) {
        Some((r0, r1)) if r1 > lo && r0 < hi => {
            let left = (r0 > lo).then_some((lo, r0));
            let right = (r1 < hi).then_some((r1, hi));
            [left, right]
        }
        _ => [Some((lo, hi)), None],
    }
}

fn transform_eval(params: &CounterexampleParams, xi: [f64; 2]) -> TransformEval {
    let alpha = params.alpha;
    let coef = 16.0 * PI.powi(4);
    let mut out = TransformEval {
        value: Complex64::new(0.0, 0.0),
        nodes: 0,
        negative_nodes: 0,
        min_contribution: f64::INFINITY,
        min_comparability: f64::INFINITY,
    };
    let mut acc = 0.0;
    for (theta, wt) in trapezoid(PHI_CENTER - params.delta, PHI_CENTER + params.delta, params.n_theta) {
        let omega = [theta.cos(), theta.sin()];
        for (lo, hi) in ray_intervals(xi, omega, params.delta, params.p_max).into_iter().flatten() {
            let (u0, u1) = (lo.ln(), hi.ln());
            for (u, wu) in simpson(u0, u1, simpson_intervals(u1 - u0, params.radial_density)) {
                let r = u.exp();
                let zeta = [r * omega[0], r * omega[1]];
                let eta = [xi[0] - zeta[0], xi[1] - zeta[1]];
                let rho = norm(eta);
                let cmp_r = r / (1.0 + r * r).sqrt();
                let cmp_rho = rho / (1.0 + rho * rho).sqrt();
                // 16π⁴ ζ_k η₂ (ζ⊥·η) φ̂(ζ) ψ̂(η) r², regrouped into bounded factors.
                let value = coef * sector_product(zeta, eta, params.k_index) * cmp_r * cmp_rho
                    / (u.max(1.0).powf(alpha) * rho * rho.ln().max(1.0).powf(alpha));
                let c = wt * wu * value;
                acc += c;
                out.nodes += 1;
                if c < 0.0 {
                    out.negative_nodes += 1;
                }
                out.min_contribution = out.min_contribution.min(c);
                out.min_comparability = out.min_comparability.min(cmp_r.min(cmp_rho) * std::f64::consts::SQRT_2);
            }
        }
    }
    out.value = Complex64::new(acc, 0.0);
    out
}

/// Quadrature value of `16π⁴ ∫ ζ_k (ξ−ζ)₂ [ζ⊥·(ξ−ζ)] φ̂(ζ) ψ̂(ξ−ζ) dζ`.
pub fn commutator_transform(params: &CounterexampleParams, xi: [f64; 2]) -> Result<Complex64> {
    Ok(commutator_transform_detailed(params, xi)?.value)
}

pub fn commutator_transform_detailed(params: &CounterexampleParams, xi: [f64; 2]) -> Result<TransformEval> {
    params.validate()?;
    if norm(xi) == 0.0 || !xi.iter().all(|v| v.is_finite()) {
        return Err(Error::Precondition(format!("transform needs a finite nonzero xi, got {xi:?}")));
    }
    Ok(transform_eval(params, xi))
}

/// Whether `ξ` lies in `X = {|ξ| > e/K, |arg ξ − 3π/4| ≤ δ/2}`.
pub fn in_region_x(params: &CounterexampleParams, xi: [f64; 2]) -> bool {
    norm(xi) > E / params.k_sin() && (arg(xi) - PSI_CENTER).abs() <= 0.5 * params.delta
}

/// `2δ · 8π⁴M_δ · [(log K|ξ|)^{1−α} − 1] / ((1+K)|ξ| (log (1+K)|ξ|)^α)` for
/// `ξ ∈ X`; valid for the untruncated fields, i.e. when `(1+K)|ξ| ≤ P`.
pub fn transform_lower_bound(params: &CounterexampleParams, xi: [f64; 2]) -> Result<f64> {
    params.validate()?;
    if !in_region_x(params, xi) {
        return Err(Error::Precondition(format!("xi = {xi:?} outside X")));
    }
    let (a, k, r) = (params.alpha, params.k_sin(), norm(xi));
    let c = 8.0 * PI.powi(4) * m_delta(params.delta)?;
    Ok(2.0 * params.delta * c * ((k * r).ln().powf(1.0 - a) - 1.0) / ((1.0 + k) * r * ((1.0 + k) * r).ln().powf(a)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Target spacing in `w = log|ξ|` of the outer mesh over `X`.
    pub outer_spacing: f64,
    /// Angular intervals (even) of the outer mesh.
    pub outer_angles: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { outer_spacing: 0.2, outer_angles: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Growth,
    Plateau,
}

/// Last over first positive truncated norm below which a scan counts as a plateau.
pub const PLATEAU_RATIO: f64 = 1.2;
/// Allowed gap between the local slope of the radial profile and `2 − 4α`
/// when locating the onset radius.
pub const ONSET_SLOPE_TOL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub p: f64,
    pub grad_u_h1_sq: f64,
    pub b_h1_sq: f64,
    /// `∫_{X ∩ {|ξ| < P}} |T_P|²` with both fields truncated at `P`.
    pub norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub params: CounterexampleParams,
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of `log norm²` against `log log P` over rows with a
    /// positive norm.
    pub fitted_beta: Option<f64>,
    pub trend: Trend,
    /// What the α window predicts.
    pub expected: Trend,
    /// Smallest `|ξ|` from which the angle-integrated profile of the largest
    /// row follows `w^{2−4α}` within `ONSET_SLOPE_TOL` in local slope.
    pub onset_radius: Option<f64>,
}

impl ScanReport {
    pub const CSV_HEADER: &'static str = "alpha,delta,P,grad_u_H1_sq,B_H1_sq,norm_sq_truncated,fitted_beta";

    pub fn matches_prediction(&self) -> bool {
        self.trend == self.expected
    }

    pub fn to_csv(&self) -> String {
        let beta = self.fitted_beta.map_or(String::new(), |b| format!("{b:e}"));
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
                self.params.alpha, self.params.delta, r.p, r.grad_u_h1_sq, r.b_h1_sq, r.norm_sq, beta
            ));
        }
        out
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Angle-integrated `∫ |T_P|² r² dθ` at each outer radius `w`, and its
/// integral over `w`.
fn truncated_norm(params: &CounterexampleParams, opts: &ScanOptions) -> (f64, Vec<(f64, f64)>) {
    let w0 = (E / params.k_sin()).ln();
    let w1 = params.p_max.ln();
    if w1 <= w0 {
        return (0.0, Vec::new());
    }
    let radial: Vec<(f64, f64)> = simpson(w0, w1, simpson_intervals(w1 - w0, 1.0 / opts.outer_spacing)).collect();
    let half = 0.5 * params.delta;
    let angular: Vec<(f64, f64)> = simpson(PSI_CENTER - half, PSI_CENTER + half, opts.outer_angles.max(2) + opts.outer_angles % 2).collect();
    let profile: Vec<(f64, f64)> = radial
        .par_iter()
        .map(|&(w, _)| {
            let r = w.exp();
            let mut acc = 0.0;
            for &(t, wt) in &angular {
                let v = transform_eval(params, polar(r, t)).value.norm_sqr();
                acc += wt * v * r * r;
            }
            (w, acc)
        })
        .collect();
    let total = profile.iter().zip(&radial).map(|(&(_, d), &(_, ww))| d * ww).sum();
    (total, profile)
}

fn onset(params: &CounterexampleParams, profile: &[(f64, f64)]) -> Option<f64> {
    // The last unit of log radius feels the truncation of ψ̂.
    let top = params.p_max.ln() - 1.0;
    let target = 2.0 - 4.0 * params.alpha;
    let pts: Vec<(f64, f64)> = profile.iter().copied().filter(|&(w, d)| w <= top && d > 0.0).collect();
    let mut start = None;
    for win in pts.windows(2) {
        let ((w0, d0), (w1, d1)) = (win[0], win[1]);
        let slope = (d1.ln() - d0.ln()) / (w1.ln() - w0.ln());
        if (slope - target).abs() <= ONSET_SLOPE_TOL {
            start.get_or_insert(w0);
        } else {
            start = None;
        }
    }
    start.map(f64::exp)
}

pub fn divergence_scan(params: &CounterexampleParams, p_list: &[f64]) -> Result<ScanReport> {
    divergence_scan_with(params, p_list, &ScanOptions::default())
}

pub fn divergence_scan_with(params: &CounterexampleParams, p_list: &[f64], opts: &ScanOptions) -> Result<ScanReport> {
    params.validate()?;
    if p_list.len() < 3 {
        return Err(Error::InvalidParameter(format!("divergence scan needs at least 3 radii, got {}", p_list.len())));
    }
    if p_list.windows(2).any(|w| !(w[1] > w[0])) || !(p_list[0] > E) {
        return Err(Error::InvalidParameter("radii must be strictly increasing and exceed e".into()));
    }
    if !(opts.outer_spacing > 0.0) {
        return Err(Error::InvalidParameter("outer spacing must be positive".into()));
    }
    let mut rows = Vec::with_capacity(p_list.len());
    let mut last_profile = Vec::new();
    for &p in p_list {
        let pp = params.with_p_max(p);
        let (gu, b) = norms_h1(&pp)?;
        let (norm_sq, profile) = truncated_norm(&pp, opts);
        rows.push(ScanRow { p, grad_u_h1_sq: gu, b_h1_sq: b, norm_sq });
        last_profile = profile;
    }
    let (x, y): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.norm_sq > 0.0).map(|r| (r.p.ln().ln(), r.norm_sq.ln())).unzip();
    let fitted_beta = fit_slope(&x, &y);
    let first = rows.iter().find(|r| r.norm_sq > 0.0).map(|r| r.norm_sq);
    let last = rows.last().map_or(0.0, |r| r.norm_sq);
    let trend = match first {
        Some(f) if last / f < PLATEAU_RATIO => Trend::Plateau,
        Some(_) => Trend::Growth,
        None => Trend::Plateau,
    };
    let expected = if params.in_failing_window() { Trend::Growth } else { Trend::Plateau };
    let onset_radius = onset(&params.with_p_max(*p_list.last().expect("checked length")), &last_profile);
    Ok(ScanReport { params: *params, rows, fitted_beta, trend, expected, onset_radius })
}

/// `e³, e⁵, e¹⁰, e²⁰, e⁴⁰`.
pub fn default_p_list() -> Vec<f64> {
    [3.0f64, 5.0, 10.0, 20.0, 40.0].iter().map(|w| w.exp()).collect()
}
