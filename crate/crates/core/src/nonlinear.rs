//! Alias-free advection products, fractional commutators and the randomized
//! estimate probes built on them.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FractionalKind, NormKind, SpectralField, VectorField};
use crate::fft::{self, Direction};
use crate::grid::SpectralGrid;
use crate::sampler::{derive_seed, random_field, random_solenoidal, rng_from_seed, RandomFieldSpec};

/// Physical samples of a vector field and of its gradient, `grad[i][j] = ∂_j v_i`.
pub(crate) struct PhysicalVector {
    #[allow(dead_code)]
    pub values: Vec<Vec<Complex64>>,
    pub grad: Vec<Vec<Vec<Complex64>>>,
}

impl PhysicalVector {
    pub fn new(v: &VectorField, with_values: bool) -> Result<Self> {
        let values = if with_values { v.to_physical() } else { Vec::new() };
        let mut grad = Vec::with_capacity(v.components().len());
        for c in v.components() {
            let mut row = Vec::with_capacity(v.grid().n_dim());
            for j in 0..v.grid().n_dim() {
                row.push(c.partial(j)?.to_physical());
            }
            grad.push(row);
        }
        Ok(PhysicalVector { values, grad })
    }
}

/// Accumulate `sign · (a·∇)b` into `out[i]` pointwise.
pub(crate) fn accumulate_advection(
    out: &mut [Vec<Complex64>],
    a: &[Vec<Complex64>],
    grad_b: &[Vec<Vec<Complex64>>],
    sign: f64,
) {
    for (i, o) in out.iter_mut().enumerate() {
        for (j, aj) in a.iter().enumerate() {
            let g = &grad_b[i][j];
            for x in 0..o.len() {
                o[x] += aj[x] * g[x] * sign;
            }
        }
    }
}

/// Forward-transform physical components into a vector field.
pub(crate) fn to_spectral(grid: &SpectralGrid, mut comps: Vec<Vec<Complex64>>, hermitian: bool) -> VectorField {
    let fields = comps
        .drain(..)
        .map(|mut c| {
            if hermitian {
                for v in c.iter_mut() {
                    v.im = 0.0;
                }
            }
            fft::transform(grid, &mut c, Direction::ToSpectral);
            SpectralField::from_coeffs(*grid, c, hermitian).expect("length matches grid")
        })
        .collect();
    VectorField::new(fields).expect("components share the grid")
}

fn check_pair(u: &VectorField, b: &VectorField) -> Result<()> {
    if u.grid() != b.grid() {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", u.grid(), b.grid())));
    }
    let g = u.grid();
    if g.n() < 3 * g.k_cut() + 1 {
        return Err(Error::Dealiasing(format!("N = {} < 3 K_R + 1", g.n())));
    }
    let k = g.k_cut();
    if u.max_outside_ball(k) != 0.0 || b.max_outside_ball(k) != 0.0 {
        return Err(Error::Dealiasing(format!("input field has modes outside |k| <= {k}")));
    }
    Ok(())
}

/// `(u·∇)B` evaluated pseudo-spectrally on whatever grid the inputs share.
/// Exact for every mode the grid can hold without aliasing.
pub(crate) fn advect_raw(u: &VectorField, b: &VectorField) -> Result<VectorField> {
    let grid = *u.grid();
    let uphys = u.to_physical();
    let gb = PhysicalVector::new(b, false)?;
    let mut out = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; b.components().len()];
    accumulate_advection(&mut out, &uphys, &gb.grad, 1.0);
    Ok(to_spectral(&grid, out, u.is_hermitian() && b.is_hermitian()))
}

/// Exact Fourier coefficients of `(u·∇)B` on `|k| ≤ 2K_R`.
///
/// The result lives on [`SpectralGrid::product_grid`], which stores every
/// mode of the product; callers apply `S_R` themselves.
pub fn advect(u: &VectorField, b: &VectorField) -> Result<VectorField> {
    check_pair(u, b)?;
    let pg = u.grid().product_grid();
    advect_raw(&u.resample(&pg)?, &b.resample(&pg)?)
}

/// `S_{K_R}[(u·∇)B]` on the input grid (alias-free since `N ≥ 3K_R + 1`).
pub fn advect_galerkin(u: &VectorField, b: &VectorField) -> Result<VectorField> {
    check_pair(u, b)?;
    Ok(advect_raw(u, b)?.truncate(u.grid().k_cut()))
}

fn is_constant(v: &VectorField) -> bool {
    v.components().iter().all(|c| c.coeffs()[1..].iter().all(|z| z.re == 0.0 && z.im == 0.0))
}

fn commutator(u: &VectorField, b: &VectorField, kind: FractionalKind, s: f64) -> Result<VectorField> {
    check_pair(u, b)?;
    let pg = u.grid().product_grid();
    if s == 0.0 || is_constant(u) {
        // Constant-coefficient multipliers commute exactly.
        return Ok(VectorField::zeros(pg, u.is_hermitian() && b.is_hermitian()));
    }
    let first = advect(u, b)?.fractional(kind, s)?;
    let second = advect(u, &b.fractional(kind, s)?)?;
    first.sub(&second)
}

/// `Λ^s[(u·∇)B] − (u·∇)(Λ^s B)` on the product grid.
pub fn commutator_lambda(u: &VectorField, b: &VectorField, s: f64) -> Result<VectorField> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!("commutator order must be >= 0, got {s}")));
    }
    commutator(u, b, FractionalKind::Homogeneous, s)
}

/// `J^s[(u·∇)B] − (u·∇)(J^s B)` on the product grid.
pub fn commutator_bessel(u: &VectorField, b: &VectorField, s: f64) -> Result<VectorField> {
    commutator(u, b, FractionalKind::Bessel, s)
}

/// `∂_k[(u·∇)B] − (u·∇)(∂_k B)`, which equals `((∂_k u)·∇)B`.
pub fn commutator_partial(u: &VectorField, b: &VectorField, k: usize) -> Result<VectorField> {
    check_pair(u, b)?;
    let a = advect(u, b)?;
    let d = VectorField::new(a.components().iter().map(|c| c.partial(k)).collect::<Result<_>>()?)?;
    let bk = VectorField::new(b.components().iter().map(|c| c.partial(k)).collect::<Result<_>>()?)?;
    d.sub(&advect(u, &bk)?)
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if num == 0.0 {
        return Ok(0.0);
    }
    if !(den > 0.0) || !den.is_finite() || !num.is_finite() {
        return Err(Error::DegenerateProbe(format!("numerator {num:e}, denominator {den:e}")));
    }
    Ok(num / den)
}

/// `‖Λ^s-commutator‖_{L²} / (‖∇u‖_{H^s} ‖B‖_{H^s})`.
pub fn commutator_ratio(u: &VectorField, b: &VectorField, s: f64) -> Result<f64> {
    let num = commutator_lambda(u, b, s)?.l2_norm();
    let den = u.gradient_sobolev_norm(s) * b.sobolev_norm(s, NormKind::Inhomogeneous)?;
    ratio(num, den)
}

/// `‖J^s-commutator‖_{L²} / (‖∇u‖_{H^s}‖B‖_{H^s} + ‖u‖_{H^s}‖∇B‖_{H^s})`.
pub fn kato_ponce_ratio(u: &VectorField, b: &VectorField, s: f64) -> Result<f64> {
    let num = commutator_bessel(u, b, s)?.l2_norm();
    let den = u.gradient_sobolev_norm(s) * b.sobolev_norm(s, NormKind::Inhomogeneous)?
        + u.sobolev_norm(s, NormKind::Inhomogeneous)? * b.gradient_sobolev_norm(s);
    ratio(num, den)
}

/// `|⟨Λ^s[(u·∇)B], Λ^s B⟩| / (‖∇u‖_{H^s} ‖B‖²_{H^s})`.
pub fn corollary_ratio(u: &VectorField, b: &VectorField, s: f64) -> Result<f64> {
    check_pair(u, b)?;
    let pg = u.grid().product_grid();
    let lhs = advect(u, b)?.fractional(FractionalKind::Homogeneous, s)?;
    let bs = b.fractional(FractionalKind::Homogeneous, s)?.resample(&pg)?;
    let num = lhs.inner(&bs)?.norm();
    let bn = b.sobolev_norm(s, NormKind::Inhomogeneous)?;
    ratio(num, u.gradient_sobolev_norm(s) * bn * bn)
}

/// `||ξ|^s − |ξ−ζ|^s| / (|ξ−ζ|^{s−1}|ζ|)` on the region `|ζ| < |ξ|/2`, `s > 1`.
/// Returns 0 for `ζ = 0`.
pub fn gradient_estimate_check(xi: &[f64], zeta: &[f64], s: f64) -> Result<f64> {
    if xi.len() != zeta.len() || xi.is_empty() {
        return Err(Error::InvalidParameter("wavevectors must have equal, nonzero length".into()));
    }
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::Precondition(format!("order s must exceed 1, got {s}")));
    }
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let nz = norm(&mut zeta.iter().copied());
    if nz == 0.0 {
        return Ok(0.0);
    }
    let nx = norm(&mut xi.iter().copied());
    if !(nz < 0.5 * nx) {
        return Err(Error::Precondition(format!("|zeta| = {nz} is not below |xi|/2 = {}", 0.5 * nx)));
    }
    let nd = norm(&mut xi.iter().zip(zeta).map(|(a, b)| a - b));
    Ok((nx.powf(s) - nd.powf(s)).abs() / (nd.powf(s - 1.0) * nz))
}

/// `‖(v·∇)w‖_{H^{s−1}} / (‖v‖_{H^s} ‖w‖_{H^s})` for divergence-free `v`.
pub fn advection_bound_probe(v: &VectorField, w: &VectorField, s: f64) -> Result<f64> {
    let res = v.divergence_residual();
    if res > 1e-10 {
        return Err(Error::Precondition(format!("v is not divergence-free (residual {res:e})")));
    }
    let num = advect(v, w)?.sobolev_norm(s - 1.0, NormKind::Inhomogeneous)?;
    let den = v.sobolev_norm(s, NormKind::Inhomogeneous)? * w.sobolev_norm(s, NormKind::Inhomogeneous)?;
    ratio(num, den)
}

/// Which inequality a randomized sweep probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Commutator,
    KatoPonce,
    Corollary,
    AdvectionBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub kind: ProbeKind,
    pub n_dim: usize,
    pub s: f64,
    pub k_cut: usize,
    pub samples: usize,
    pub seed: u64,
    pub gamma: f64,
}

impl ProbeConfig {
    pub fn new(kind: ProbeKind, s: f64, k_cut: usize, samples: usize, seed: u64) -> Self {
        ProbeConfig { kind, n_dim: 2, s, k_cut, samples, seed, gamma: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub sample_id: usize,
    pub seed: u64,
    pub ratio: f64,
}

/// Outcome of a randomized probe sweep. `max_ratio` is the empirical
/// constant; it is reported, not compared with any theoretical value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateProbeReport {
    pub config: ProbeConfig,
    pub samples: Vec<ProbeSample>,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

impl EstimateProbeReport {
    pub const CSV_HEADER: &'static str = "sample_id,seed,s,n,K_R,ratio";

    pub fn ratios(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.ratio).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.samples {
            out.push_str(&format!(
                "{},{},{:?},{},{},{:e}\n",
                p.sample_id, p.seed, self.config.s, self.config.n_dim, self.config.k_cut, p.ratio
            ));
        }
        out
    }
}

/// Random divergence-free pair for sample `index` of a sweep.
pub fn probe_pair(cfg: &ProbeConfig, index: u64) -> Result<(u64, VectorField, VectorField)> {
    let grid = SpectralGrid::dealiased(cfg.n_dim, 1.0, cfg.k_cut)?;
    let seed = derive_seed(cfg.seed, index);
    let mut rng = rng_from_seed(seed);
    let spec = RandomFieldSpec { band: cfg.k_cut, gamma: cfg.gamma, hermitian: true };
    let u = random_solenoidal(&grid, &spec, &mut rng);
    let b = random_solenoidal(&grid, &spec, &mut rng);
    Ok((seed, u, b))
}

/// Run a sweep. Samples are evaluated in parallel but each owns a derived
/// seed, so the report does not depend on scheduling.
pub fn run_probe(cfg: &ProbeConfig) -> Result<EstimateProbeReport> {
    if cfg.samples == 0 {
        return Err(Error::InvalidParameter("probe needs at least one sample".into()));
    }
    let samples = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let (seed, u, b) = probe_pair(cfg, i as u64)?;
            let r = match cfg.kind {
                ProbeKind::Commutator => commutator_ratio(&u, &b, cfg.s)?,
                ProbeKind::KatoPonce => kato_ponce_ratio(&u, &b, cfg.s)?,
                ProbeKind::Corollary => corollary_ratio(&u, &b, cfg.s)?,
                ProbeKind::AdvectionBound => advection_bound_probe(&u, &b, cfg.s)?,
            };
            Ok(ProbeSample { sample_id: i, seed, ratio: r })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = samples.iter().fold(0.0f64, |m, p| m.max(p.ratio));
    let mean_ratio = samples.iter().map(|p| p.ratio).sum::<f64>() / samples.len() as f64;
    Ok(EstimateProbeReport { config: *cfg, samples, max_ratio, mean_ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientSample {
    pub sample_id: usize,
    pub n_dim: usize,
    pub s: f64,
    pub xi_norm: f64,
    pub zeta_norm: f64,
    pub ratio: f64,
    /// `s·3^{s−1}`.
    pub bound: f64,
}

impl GradientSample {
    pub const CSV_HEADER: &'static str = "sample_id,n,s,xi_norm,zeta_norm,ratio,bound";

    pub fn holds(&self) -> bool {
        self.ratio <= self.bound
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e},{:e},{:e},{:e}",
            self.sample_id, self.n_dim, self.s, self.xi_norm, self.zeta_norm, self.ratio, self.bound
        )
    }
}

fn random_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

/// Random `(ξ, ζ, s)` with `n ∈ {2, 3}`, `|ξ|` log-uniform on `[1e-3, 1e3]`,
/// `0 < |ζ| < |ξ|/2` and `s ∈ (1, 4]`.
pub fn gradient_estimate_sweep(samples: usize, seed: u64) -> Result<Vec<GradientSample>> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(samples);
    for id in 0..samples {
        let n = rng.random_range(2..=3usize);
        let s = 4.0 - rng.random_range(0.0..3.0);
        let xn = 10f64.powf(rng.random_range(-3.0..3.0));
        let zn = 0.5 * xn * (1.0 - rng.random_range(0.0..1.0));
        let zn = if zn < 0.5 * xn { zn } else { 0.25 * xn };
        let xi: Vec<f64> = random_direction(&mut rng, n).into_iter().map(|v| v * xn).collect();
        let zeta: Vec<f64> = random_direction(&mut rng, n).into_iter().map(|v| v * zn).collect();
        let ratio = gradient_estimate_check(&xi, &zeta, s)?;
        out.push(GradientSample { sample_id: id, n_dim: n, s, xi_norm: xn, zeta_norm: zn, ratio, bound: s * 3f64.powf(s - 1.0) });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSample {
    pub sample_id: usize,
    pub seed: u64,
    pub length: f64,
    pub s: f64,
    pub m: f64,
    pub k: usize,
    /// `‖S_K f − f‖_{H^s}`.
    pub lhs: f64,
    /// `(K/L)^{−m} ‖f‖_{H^{s+m}}`.
    pub rhs: f64,
}

impl CutoffSample {
    pub const CSV_HEADER: &'static str = "sample_id,seed,L,s,m,K,lhs,rhs";

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e},{:e},{},{:e},{:e}",
            self.sample_id, self.seed, self.length, self.s, self.m, self.k, self.lhs, self.rhs
        )
    }
}

/// Random real fields on a 32² grid of side `L ∈ [0.5, 2]`, with `s, m ∈ [0, 3]`
/// and `K ∈ [1, 15]`.
pub fn cutoff_bound_sweep(samples: usize, seed: u64) -> Result<Vec<CutoffSample>> {
    (0..samples)
        .map(|id| {
            let seed = derive_seed(seed, id as u64);
            let mut rng = rng_from_seed(seed);
            let length = rng.random_range(0.5..=2.0);
            let grid = SpectralGrid::new(2, length, 32, 10)?;
            let spec = RandomFieldSpec { band: rng.random_range(4..=15usize), gamma: rng.random_range(0.0..3.0), hermitian: true };
            let f = random_field(&grid, &spec, &mut rng);
            let (s, m) = (rng.random_range(0.0..=3.0), rng.random_range(0.0..=3.0));
            let k = rng.random_range(1..=15usize);
            let (lhs, rhs) = f.cutoff_bound(s, m, k)?;
            Ok(CutoffSample { sample_id: id, seed, length, s, m, k, lhs, rhs })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pair(seed: u64, k: usize) -> (VectorField, VectorField) {
        let cfg = ProbeConfig::new(ProbeKind::Commutator, 1.5, k, 1, seed);
        let (_, u, b) = probe_pair(&cfg, 0).unwrap();
        (u, b)
    }

    #[test]
    fn constant_advection_is_a_multiplier() {
        let g = SpectralGrid::new(2, 2.0, 8, 2).unwrap();
        let cvec = [0.7, -0.3];
        let u = VectorField::new(vec![
            SpectralField::single_mode(g, &[0, 0], c(cvec[0], 0.0)).unwrap(),
            SpectralField::single_mode(g, &[0, 0], c(cvec[1], 0.0)).unwrap(),
        ])
        .unwrap();
        let k = [1i64, 1];
        let b = VectorField::new(vec![
            SpectralField::single_mode(g, &k, c(0.4, 0.1)).unwrap(),
            SpectralField::single_mode(g, &k, c(-0.2, 0.3)).unwrap(),
        ])
        .unwrap();
        let out = advect(&u, &b).unwrap();
        let m = c(0.0, 2.0 * PI * (cvec[0] + cvec[1]) / 2.0);
        for i in 0..2 {
            let expect = m * b.component(i).coeff(&k);
            assert!((out.component(i).coeff(&k) - expect).norm() < 1e-14);
            let others: f64 = out.component(i).l2_norm().powi(2) - out.component(i).coeff(&k).norm_sqr() * 4.0;
            assert!(others.abs() < 1e-13 * out.component(i).l2_norm().powi(2));
        }
        assert_eq!(commutator_lambda(&u, &b, 1.3).unwrap().l2_norm(), 0.0);
        assert_eq!(commutator_ratio(&u, &b, 1.3).unwrap(), 0.0);
        assert_eq!(kato_ponce_ratio(&u, &b, 1.3).unwrap(), 0.0);
    }

    #[test]
    fn constant_b_gives_zero() {
        let (u, _) = pair(1, 4);
        let g = *u.grid();
        let b = VectorField::new(vec![
            SpectralField::real_mode(g, &[0, 0], c(0.5, 0.0)).unwrap(),
            SpectralField::real_mode(g, &[0, 0], c(-1.0, 0.0)).unwrap(),
        ])
        .unwrap();
        assert_eq!(advect(&u, &b).unwrap().l2_norm(), 0.0);
        assert_eq!(advection_bound_probe(&u, &b, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn commutator_order_zero_vanishes() {
        let (u, b) = pair(3, 5);
        assert_eq!(commutator_lambda(&u, &b, 0.0).unwrap().l2_norm(), 0.0);
        assert!(commutator_lambda(&u, &b, -0.5).is_err());
    }

    #[test]
    fn dealiasing_precondition() {
        let g = SpectralGrid::new(2, 1.0, 16, 3).unwrap();
        let outside = SpectralField::real_mode(g, &[4, 0], c(1.0, 0.0)).unwrap();
        let u = VectorField::new(vec![SpectralField::zeros(g, true), outside]).unwrap();
        assert!(matches!(advect(&u, &u), Err(Error::Dealiasing(_))));
    }

    #[test]
    fn galerkin_product_is_truncated_exact_product() {
        let (u, b) = pair(5, 6);
        let full = advect(&u, &b).unwrap();
        let gal = advect_galerkin(&u, &b).unwrap();
        let diff = full.truncate(6).resample(u.grid()).unwrap().sub(&gal).unwrap().l2_norm();
        assert!(diff <= 1e-13 * full.l2_norm());
    }

    #[test]
    fn partial_commutator_is_product_rule() {
        let (u, b) = pair(9, 4);
        for k in 0..2 {
            let lhs = commutator_partial(&u, &b, k).unwrap();
            let du = VectorField::new(u.components().iter().map(|c| c.partial(k).unwrap()).collect()).unwrap();
            let rhs = advect(&du, &b).unwrap();
            assert!(lhs.sub(&rhs).unwrap().l2_norm() <= 1e-12 * rhs.l2_norm());
        }
    }

    #[test]
    fn skew_symmetry() {
        for seed in 0..5 {
            let (u, w) = pair(seed, 6);
            let adv = advect(&u, &w).unwrap();
            let w_p = w.resample(adv.grid()).unwrap();
            let val = adv.inner(&w_p).unwrap().norm();
            let scale = u.l2_norm() * w.gradient_sobolev_norm(0.0) * w.l2_norm();
            assert!(val <= 1e-10 * scale, "{val} vs {scale}");
        }
    }

    #[test]
    fn gradient_estimate_examples() {
        let r = gradient_estimate_check(&[1.0, 0.0], &[0.4, 0.0], 2.0).unwrap();
        assert!((r - 0.64 / 0.24).abs() < 1e-12);
        assert_eq!(gradient_estimate_check(&[1.0, 0.0], &[0.0, 0.0], 2.5).unwrap(), 0.0);
        assert!(gradient_estimate_check(&[1.0, 0.0], &[0.5, 0.0], 2.0).is_err());
        assert!(gradient_estimate_check(&[1.0, 0.0], &[0.1, 0.0], 1.0).is_err());

        // ζ → 0 along ω: ratio → s|ξ|^{s-2}|ξ·ω|/|ξ|^{s-1}.
        let xi = [0.8, -1.1];
        let omega = [0.6, 0.8];
        let s = 2.7;
        let nx: f64 = xi[0] * xi[0] + xi[1] * xi[1];
        let nx = nx.sqrt();
        let limit = s * nx.powf(s - 2.0) * (xi[0] * omega[0] + xi[1] * omega[1]).abs() / nx.powf(s - 1.0);
        let r = gradient_estimate_check(&xi, &[1e-7 * omega[0], 1e-7 * omega[1]], s).unwrap();
        assert!((r - limit).abs() < 1e-5 * limit);
        assert!(limit <= s);
    }

    #[test]
    fn advection_probe_rejects_compressible_v() {
        let g = SpectralGrid::new(2, 1.0, 16, 4).unwrap();
        let v = SpectralField::real_mode(g, &[1, 0], c(1.0, 0.0)).unwrap().gradient();
        let (w, _) = pair(2, 4);
        let w = w.resample(&g).unwrap();
        assert!(matches!(advection_bound_probe(&v, &w, 2.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn sweep_is_reproducible() {
        let cfg = ProbeConfig::new(ProbeKind::Commutator, 1.5, 4, 6, 7);
        let a = run_probe(&cfg).unwrap();
        let b = run_probe(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.ratios().iter().all(|r| r.is_finite() && *r >= 0.0 && *r <= a.max_ratio));
        assert!(a.to_csv().starts_with("sample_id,seed,s,n,K_R,ratio\n0,"));
    }

    #[test]
    fn sweeps_hold_and_repeat() {
        let g = gradient_estimate_sweep(2000, 7).unwrap();
        assert!(g.iter().all(|x| x.holds() && x.zeta_norm < 0.5 * x.xi_norm && x.s > 1.0 && x.s <= 4.0));
        assert_eq!(g, gradient_estimate_sweep(2000, 7).unwrap());
        let c = cutoff_bound_sweep(50, 7).unwrap();
        assert!(c.iter().all(|x| x.holds()));
        assert!(c.iter().any(|x| x.lhs > 0.0));
    }
}
