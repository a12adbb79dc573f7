//! Band-limited scalar and vector fields stored as Fourier coefficients.
//!
//! Convention: `f(x) = Σ_k f̂_k e^{2πi k·x/L}`, so `∂_j ↔ 2πi k_j/L`.
//! Norms carry the Parseval factor `L^n`, so `‖f‖_{L²}` agrees with the
//! physical-space integral.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{self, Direction};
use crate::grid::SpectralGrid;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Fourier coefficients of a scalar field on a [`SpectralGrid`].
///
/// `hermitian` marks fields that represent real-valued functions
/// (`f̂_{-k} = conj f̂_k`); physical values of such fields are taken as real.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: SpectralGrid,
    coeffs: Vec<Complex64>,
    hermitian: bool,
}

/// Weight used by Sobolev norms: `1 + |k/L|²` or `|k/L|²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Inhomogeneous,
    Homogeneous,
}

/// Fractional derivative: `Λ^s ↔ |k/L|^s`, `J^s ↔ (1+|k/L|²)^{s/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FractionalKind {
    Homogeneous,
    Bessel,
}

impl SpectralField {
    pub fn zeros(grid: SpectralGrid, hermitian: bool) -> Self {
        SpectralField { grid, coeffs: vec![ZERO; grid.len()], hermitian }
    }

    pub fn from_coeffs(grid: SpectralGrid, coeffs: Vec<Complex64>, hermitian: bool) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(SpectralField { grid, coeffs, hermitian })
    }

    /// Coefficients given as a function of the integer wavevector.
    pub fn from_fn(grid: SpectralGrid, hermitian: bool, mut f: impl FnMut([i64; 3]) -> Complex64) -> Self {
        let coeffs = (0..grid.len()).map(|i| f(grid.wavevector(i))).collect();
        SpectralField { grid, coeffs, hermitian }
    }

    /// `a·e^{2πik·x/L}` (complex-valued).
    pub fn single_mode(grid: SpectralGrid, k: &[i64], amp: Complex64) -> Result<Self> {
        let mut f = Self::zeros(grid, false);
        let idx = grid
            .index_of(k)
            .ok_or_else(|| Error::InvalidParameter(format!("wavevector {k:?} not representable")))?;
        f.coeffs[idx] = amp;
        Ok(f)
    }

    /// Real field `a·e^{2πik·x/L} + conj(a)·e^{-2πik·x/L}`.
    pub fn real_mode(grid: SpectralGrid, k: &[i64], amp: Complex64) -> Result<Self> {
        let mut f = Self::zeros(grid, true);
        let neg: Vec<i64> = k.iter().map(|v| -v).collect();
        let (i, j) = match (grid.index_of(k), grid.index_of(&neg)) {
            (Some(i), Some(j)) => (i, j),
            _ => return Err(Error::InvalidParameter(format!("wavevector {k:?} not representable"))),
        };
        if i == j {
            f.coeffs[i] = Complex64::new(2.0 * amp.re, 0.0);
        } else {
            f.coeffs[i] = amp;
            f.coeffs[j] = amp.conj();
        }
        Ok(f)
    }

    /// Transform physical samples (grid-point layout) to coefficients.
    pub fn from_physical(grid: SpectralGrid, mut values: Vec<Complex64>, hermitian: bool) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if hermitian {
            for v in values.iter_mut() {
                v.im = 0.0;
            }
        }
        fft::transform(&grid, &mut values, Direction::ToSpectral);
        Ok(SpectralField { grid, coeffs: values, hermitian })
    }

    pub fn from_physical_real(grid: SpectralGrid, values: &[f64]) -> Result<Self> {
        Self::from_physical(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect(), true)
    }

    /// Physical samples; imaginary parts are dropped for Hermitian fields.
    pub fn to_physical(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        fft::transform(&self.grid, &mut data, Direction::ToPhysical);
        if self.hermitian {
            for v in data.iter_mut() {
                v.im = 0.0;
            }
        }
        data
    }

    pub fn to_physical_real(&self) -> Vec<f64> {
        self.to_physical().into_iter().map(|v| v.re).collect()
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn set_hermitian(&mut self, hermitian: bool) {
        self.hermitian = hermitian;
    }

    /// Coefficient at wavevector `k` (zero if not representable).
    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.grid.index_of(k).map_or(ZERO, |i| self.coeffs[i])
    }

    pub fn set_coeff(&mut self, k: &[i64], value: Complex64) -> Result<()> {
        let idx = self
            .grid
            .index_of(k)
            .ok_or_else(|| Error::InvalidParameter(format!("wavevector {k:?} not representable")))?;
        self.coeffs[idx] = value;
        Ok(())
    }

    /// Largest deviation from Hermitian symmetry, `max |f̂_{-k} - conj f̂_k|`.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        let mut worst = 0.0f64;
        for i in 0..g.len() {
            let k = g.wavevector(i);
            if let Some(j) = g.index_of(&[-k[0], -k[1], -k[2]]) {
                worst = worst.max((self.coeffs[j] - self.coeffs[i].conj()).norm());
            }
        }
        worst
    }

    /// Apply a real multiplier `m(idx)` coefficientwise.
    pub(crate) fn map_real(&self, m: impl Fn(usize) -> f64) -> SpectralField {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, c)| c * m(i)).collect();
        SpectralField { grid: self.grid, coeffs, hermitian: self.hermitian }
    }

    fn check_same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        self.map_real(|_| a)
    }

    /// `self += a·other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        self.check_same_grid(other)?;
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
        self.hermitian &= other.hermitian;
        Ok(())
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// `∂_j`, multiplier `2πi k_j / L`.
    pub fn partial(&self, j: usize) -> Result<SpectralField> {
        if j >= self.grid.n_dim() {
            return Err(Error::InvalidParameter(format!("axis {j} out of range")));
        }
        let g = self.grid;
        let c = 2.0 * std::f64::consts::PI / g.length();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, v)| v * Complex64::new(0.0, c * g.wavevector(i)[j] as f64))
            .collect();
        Ok(SpectralField { grid: g, coeffs, hermitian: self.hermitian })
    }

    pub fn gradient(&self) -> VectorField {
        let comps = (0..self.grid.n_dim()).map(|j| self.partial(j).expect("axis in range")).collect();
        VectorField { components: comps }
    }

    /// `Δ`, multiplier `-4π²|k|²/L²`.
    pub fn laplacian(&self) -> SpectralField {
        let g = self.grid;
        let c = -4.0 * std::f64::consts::PI.powi(2) / (g.length() * g.length());
        self.map_real(|i| c * g.k_sq(i) as f64)
    }

    /// `∇^⊥φ = (∂₂φ, -∂₁φ)`; two dimensions only.
    pub fn perp_gradient(&self) -> Result<VectorField> {
        if self.grid.n_dim() != 2 {
            return Err(Error::InvalidParameter("perp_gradient is defined for n = 2 only".into()));
        }
        let a = self.partial(1)?;
        let b = self.partial(0)?.scaled(-1.0);
        Ok(VectorField { components: vec![a, b] })
    }

    /// `Λ^s` or `J^s`. For `Λ^s` the zero mode maps to 0 when `s > 0`, is
    /// untouched when `s = 0`, and must vanish when `s < 0`.
    pub fn fractional(&self, kind: FractionalKind, s: f64) -> Result<SpectralField> {
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("order s = {s} is not finite")));
        }
        if s == 0.0 {
            return Ok(self.clone());
        }
        let g = self.grid;
        let inv_l2 = 1.0 / (g.length() * g.length());
        match kind {
            FractionalKind::Homogeneous => {
                if s < 0.0 && self.coeffs[0] != ZERO {
                    return Err(Error::SingularMultiplier(format!(
                        "Λ^{s} applied to a field with nonzero mean"
                    )));
                }
                Ok(self.map_real(|i| {
                    let k2 = g.k_sq(i);
                    if k2 == 0 {
                        0.0
                    } else {
                        (k2 as f64 * inv_l2).powf(0.5 * s)
                    }
                }))
            }
            FractionalKind::Bessel => Ok(self.map_real(|i| (1.0 + g.k_sq(i) as f64 * inv_l2).powf(0.5 * s))),
        }
    }

    /// Galerkin truncation `S_K`: zero all modes with `|k| > K`.
    pub fn truncate(&self, k: usize) -> SpectralField {
        let g = self.grid;
        let r2 = (k * k) as i64;
        self.map_real(|i| if g.k_sq(i) <= r2 { 1.0 } else { 0.0 })
    }

    /// Both sides of the cutoff bound
    /// `‖S_K f − f‖_{H^s} ≤ (K/L)^{−m} ‖f‖_{H^{s+m}}`.
    pub fn cutoff_bound(&self, s: f64, m: f64, k: usize) -> Result<(f64, f64)> {
        if k == 0 || !(m >= 0.0) {
            return Err(Error::InvalidParameter(format!("cutoff bound needs K >= 1 and m >= 0, got K = {k}, m = {m}")));
        }
        let tail = self.sub(&self.truncate(k))?;
        let lhs = tail.sobolev_norm(s, NormKind::Inhomogeneous)?;
        let rhs = (k as f64 / self.grid.length()).powf(-m) * self.sobolev_norm(s + m, NormKind::Inhomogeneous)?;
        Ok((lhs, rhs))
    }

    /// Largest coefficient magnitude strictly outside the ball `|k| ≤ K`.
    pub fn max_outside_ball(&self, k: usize) -> f64 {
        let r2 = (k * k) as i64;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.k_sq(*i) > r2)
            .fold(0.0, |m, (_, c)| m.max(c.norm()))
    }

    /// `Σ_k w(k)^s |f̂_k|²` without the Parseval factor.
    pub(crate) fn weighted_sum(&self, s: f64, kind: NormKind) -> Result<f64> {
        let g = self.grid;
        let inv_l2 = 1.0 / (g.length() * g.length());
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let a = c.norm_sqr();
            let k2 = g.k_sq(i) as f64 * inv_l2;
            let w = match kind {
                NormKind::Inhomogeneous => (1.0 + k2).powf(s),
                NormKind::Homogeneous => {
                    if i == 0 {
                        if s == 0.0 {
                            1.0
                        } else if s > 0.0 {
                            0.0
                        } else if a != 0.0 {
                            return Err(Error::SingularMultiplier(format!(
                                "homogeneous H^{s} norm of a field with nonzero mean"
                            )));
                        } else {
                            0.0
                        }
                    } else {
                        k2.powf(s)
                    }
                }
            };
            acc += w * a;
        }
        Ok(acc)
    }

    /// `(L^n Σ_k w(k)^s |f̂_k|²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64, kind: NormKind) -> Result<f64> {
        Ok((self.grid.volume() * self.weighted_sum(s, kind)?).sqrt())
    }

    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (self.grid.volume() * sum).sqrt()
    }

    /// `⟨f, g⟩ = L^n Σ_k f̂_k conj(ĝ_k)`.
    pub fn inner(&self, other: &SpectralField) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let sum: Complex64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum();
        Ok(sum * self.grid.volume())
    }

    /// Copy every mode representable on `target` (same box required).
    pub fn resample(&self, target: &SpectralGrid) -> Result<SpectralField> {
        if !self.grid.is_nested_with(target) {
            return Err(Error::GridMismatch(format!(
                "cannot resample between non-nested grids {:?} and {:?}",
                self.grid, target
            )));
        }
        if self.grid == *target {
            return Ok(self.clone());
        }
        let mut out = SpectralField::zeros(*target, self.hermitian);
        let half_src = (self.grid.n() / 2) as i64;
        for i in 0..target.len() {
            let k = target.wavevector(i);
            if k.iter().all(|v| v.abs() < half_src) {
                out.coeffs[i] = self.coeff(&k);
            }
        }
        Ok(out)
    }

    /// `‖f - g‖_{L²}` for fields on nested grids of possibly different sizes.
    pub fn l2_distance(&self, other: &SpectralField) -> Result<f64> {
        if !self.grid.is_nested_with(&other.grid) {
            return Err(Error::GridMismatch("non-nested grids".into()));
        }
        let mut acc = 0.0;
        for (i, a) in self.coeffs.iter().enumerate() {
            let k = self.grid.wavevector(i);
            acc += (a - other.coeff(&k)).norm_sqr();
        }
        for (i, b) in other.coeffs.iter().enumerate() {
            let k = other.grid.wavevector(i);
            if self.grid.index_of(&k).is_none() {
                acc += b.norm_sqr();
            }
        }
        Ok((self.grid.volume() * acc).sqrt())
    }
}

/// `n_dim` scalar fields on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<SpectralField>,
}

impl VectorField {
    pub fn new(components: Vec<SpectralField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidParameter("vector field needs components".into()))?;
        let grid = *first.grid();
        if components.len() != grid.n_dim() {
            return Err(Error::GridMismatch(format!(
                "{} components on a {}-d grid",
                components.len(),
                grid.n_dim()
            )));
        }
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(Error::GridMismatch("vector components live on different grids".into()));
        }
        Ok(VectorField { components })
    }

    pub fn zeros(grid: SpectralGrid, hermitian: bool) -> Self {
        VectorField { components: (0..grid.n_dim()).map(|_| SpectralField::zeros(grid, hermitian)).collect() }
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.components[0].grid()
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [SpectralField] {
        &mut self.components
    }

    pub fn into_components(self) -> Vec<SpectralField> {
        self.components
    }

    pub fn component(&self, i: usize) -> &SpectralField {
        &self.components[i]
    }

    pub fn is_hermitian(&self) -> bool {
        self.components.iter().all(|c| c.is_hermitian())
    }

    fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> VectorField {
        VectorField { components: self.components.iter().map(f).collect() }
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        self.map(|c| c.scaled(a))
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) -> Result<()> {
        if self.components.len() != other.components.len() {
            return Err(Error::GridMismatch("component count differs".into()));
        }
        for (x, y) in self.components.iter_mut().zip(&other.components) {
            x.axpy(a, y)?;
        }
        Ok(())
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// `∇·v`.
    pub fn divergence(&self) -> Result<SpectralField> {
        let mut acc = SpectralField::zeros(*self.grid(), self.is_hermitian());
        for (j, c) in self.components.iter().enumerate() {
            acc.axpy(1.0, &c.partial(j)?)?;
        }
        Ok(acc)
    }

    pub fn laplacian(&self) -> VectorField {
        self.map(|c| c.laplacian())
    }

    pub fn fractional(&self, kind: FractionalKind, s: f64) -> Result<VectorField> {
        let comps = self.components.iter().map(|c| c.fractional(kind, s)).collect::<Result<_>>()?;
        Ok(VectorField { components: comps })
    }

    pub fn truncate(&self, k: usize) -> VectorField {
        self.map(|c| c.truncate(k))
    }

    pub fn max_outside_ball(&self, k: usize) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.max_outside_ball(k)))
    }

    /// Leray projection `û - k(k·û)/|k|²`; the zero mode is untouched.
    pub fn leray_project(&self) -> VectorField {
        let mut out = self.clone();
        out.leray_project_in_place();
        out
    }

    pub fn leray_project_in_place(&mut self) {
        let g = *self.grid();
        let d = g.n_dim();
        for i in 1..g.len() {
            let k = g.wavevector(i);
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            let mut dot = ZERO;
            for j in 0..d {
                dot += self.components[j].coeffs[i] * k[j] as f64;
            }
            if dot == ZERO {
                continue;
            }
            let dot = dot / k2;
            for j in 0..d {
                self.components[j].coeffs[i] -= dot * k[j] as f64;
            }
        }
    }

    /// `max_k |k·v̂_k| / (|k||v̂_k| + ε)` with `ε = ε_mach · max_k |v̂_k|`.
    pub fn divergence_residual(&self) -> f64 {
        let g = *self.grid();
        let d = g.n_dim();
        let mut vmax = 0.0f64;
        for i in 0..g.len() {
            let m: f64 = (0..d).map(|j| self.components[j].coeffs[i].norm_sqr()).sum();
            vmax = vmax.max(m.sqrt());
        }
        if vmax == 0.0 {
            return 0.0;
        }
        let eps = f64::EPSILON * vmax;
        let mut worst = 0.0f64;
        for i in 1..g.len() {
            let k = g.wavevector(i);
            let mut dot = ZERO;
            let mut m = 0.0;
            for j in 0..d {
                let c = self.components[j].coeffs[i];
                dot += c * k[j] as f64;
                m += c.norm_sqr();
            }
            let knorm = (g.k_sq(i) as f64).sqrt();
            worst = worst.max(dot.norm() / (knorm * m.sqrt() + eps));
        }
        worst
    }

    pub fn sobolev_norm(&self, s: f64, kind: NormKind) -> Result<f64> {
        let mut acc = 0.0;
        for c in &self.components {
            acc += c.weighted_sum(s, kind)?;
        }
        Ok((self.grid().volume() * acc).sqrt())
    }

    pub fn l2_norm(&self) -> f64 {
        self.components.iter().map(|c| c.l2_norm().powi(2)).sum::<f64>().sqrt()
    }

    /// `‖∇v‖_{H^s} = (Σ_{i,j} ‖∂_j v_i‖²_{H^s})^{1/2}`.
    pub fn gradient_sobolev_norm(&self, s: f64) -> f64 {
        let g = *self.grid();
        let inv_l2 = 1.0 / (g.length() * g.length());
        let c = 4.0 * std::f64::consts::PI.powi(2);
        let mut acc = 0.0;
        for i in 1..g.len() {
            let k2 = g.k_sq(i) as f64 * inv_l2;
            let m: f64 = self.components.iter().map(|f| f.coeffs[i].norm_sqr()).sum();
            if m != 0.0 {
                acc += c * k2 * (1.0 + k2).powf(s) * m;
            }
        }
        (g.volume() * acc).sqrt()
    }

    pub fn inner(&self, other: &VectorField) -> Result<Complex64> {
        let mut acc = ZERO;
        for (a, b) in self.components.iter().zip(&other.components) {
            acc += a.inner(b)?;
        }
        Ok(acc)
    }

    pub fn resample(&self, target: &SpectralGrid) -> Result<VectorField> {
        let comps = self.components.iter().map(|c| c.resample(target)).collect::<Result<_>>()?;
        Ok(VectorField { components: comps })
    }

    pub fn l2_distance(&self, other: &VectorField) -> Result<f64> {
        let mut acc = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            acc += a.l2_distance(b)?.powi(2);
        }
        Ok(acc.sqrt())
    }

    /// Physical samples of every component.
    pub fn to_physical(&self) -> Vec<Vec<Complex64>> {
        self.components.iter().map(|c| c.to_physical()).collect()
    }

    /// `sup_x |v(x)|` over the physical grid.
    pub fn sup_norm(&self) -> f64 {
        sup_norm_of(&self.to_physical())
    }
}

pub(crate) fn sup_norm_of(phys: &[Vec<Complex64>]) -> f64 {
    let n = phys[0].len();
    let mut worst = 0.0f64;
    for x in 0..n {
        let m: f64 = phys.iter().map(|c| c[x].norm_sqr()).sum();
        worst = worst.max(m);
    }
    worst.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{random_field, RandomFieldSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid(n_dim: usize, n: usize, k: usize) -> SpectralGrid {
        SpectralGrid::new(n_dim, 1.0, n, k).unwrap()
    }

    fn rand_scalar(g: SpectralGrid, seed: u64, hermitian: bool) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = RandomFieldSpec { band: g.k_cut(), gamma: 1.0, hermitian };
        random_field(&g, &spec, &mut rng)
    }

    #[test]
    fn partial_of_single_mode() {
        let g = grid(2, 8, 2);
        let f = SpectralField::single_mode(g, &[1, 0], c(0.3, -0.2)).unwrap();
        let d = f.partial(0).unwrap();
        let expect = c(0.0, 2.0 * PI) * c(0.3, -0.2);
        assert!((d.coeff(&[1, 0]) - expect).norm() < 1e-15);
        assert_eq!(f.partial(1).unwrap().coeff(&[1, 0]), ZERO);
        assert!(f.partial(2).is_err());
    }

    #[test]
    fn divergence_of_perp_gradient_vanishes() {
        let g = grid(2, 16, 5);
        let phi = rand_scalar(g, 3, true);
        let v = phi.perp_gradient().unwrap();
        let div = v.divergence().unwrap();
        assert!(div.l2_norm() <= 1e-15 * v.gradient_sobolev_norm(0.0));
        assert!(v.divergence_residual() <= 1e-15);
        assert!(SpectralField::zeros(grid(3, 4, 1), true).perp_gradient().is_err());
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let g = grid(3, 8, 2);
        let f = SpectralField::single_mode(g, &[0, 0, 0], c(2.5, 0.0)).unwrap();
        assert!(f.laplacian().coeffs().iter().all(|v| *v == ZERO));
    }

    #[test]
    fn fractional_examples() {
        let g = grid(2, 8, 2);
        let f = SpectralField::single_mode(g, &[1, 1], c(1.5, 0.5)).unwrap();
        let l1 = f.fractional(FractionalKind::Homogeneous, 1.0).unwrap();
        assert!((l1.coeff(&[1, 1]) - c(1.5, 0.5) * 2f64.sqrt()).norm() < 1e-15);
        assert_eq!(f.fractional(FractionalKind::Homogeneous, 0.0).unwrap(), f);
        assert_eq!(f.fractional(FractionalKind::Bessel, 0.0).unwrap(), f);

        let with_mean = SpectralField::single_mode(g, &[0, 0], c(1.0, 0.0)).unwrap();
        assert!(matches!(
            with_mean.fractional(FractionalKind::Homogeneous, -0.5),
            Err(Error::SingularMultiplier(_))
        ));
        assert!(with_mean.fractional(FractionalKind::Bessel, -0.5).is_ok());
        let lp = with_mean.fractional(FractionalKind::Homogeneous, 0.7).unwrap();
        assert_eq!(lp.coeff(&[0, 0]), ZERO);
    }

    #[test]
    fn sobolev_single_mode() {
        let g = grid(2, 8, 2);
        let f = SpectralField::single_mode(g, &[1, 1], c(2.0, 0.0)).unwrap();
        let v = f.sobolev_norm(1.0, NormKind::Inhomogeneous).unwrap();
        assert!((v - 2.0 * 3f64.sqrt()).abs() < 1e-14);
        let z = SpectralField::zeros(g, true);
        for s in [-1.0, 0.0, 2.5] {
            assert_eq!(z.sobolev_norm(s, NormKind::Inhomogeneous).unwrap(), 0.0);
            assert_eq!(z.sobolev_norm(s, NormKind::Homogeneous).unwrap(), 0.0);
        }
        let mean = SpectralField::single_mode(g, &[0, 0], c(1.0, 0.0)).unwrap();
        assert!(mean.sobolev_norm(-1.0, NormKind::Homogeneous).is_err());
        assert_eq!(mean.sobolev_norm(0.0, NormKind::Homogeneous).unwrap(), 1.0);
    }

    #[test]
    fn parseval_against_physical_quadrature() {
        let g = SpectralGrid::new(2, 2.5, 16, 5).unwrap();
        for hermitian in [true, false] {
            let f = rand_scalar(g, 11, hermitian);
            let phys = f.to_physical();
            let quad: f64 = phys.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_volume();
            let h0 = f.sobolev_norm(0.0, NormKind::Inhomogeneous).unwrap();
            assert!((h0 * h0 - quad).abs() <= 1e-10 * quad);
            let ff = f.inner(&f).unwrap();
            assert!((ff.re - quad).abs() <= 1e-10 * quad && ff.im.abs() <= 1e-12 * quad);
        }
    }

    #[test]
    fn inner_product_matches_physical_integral() {
        let g = SpectralGrid::new(3, 1.3, 8, 2).unwrap();
        let f = rand_scalar(g, 1, false);
        let h = rand_scalar(g, 2, false);
        let pf = f.to_physical();
        let ph = h.to_physical();
        let quad: Complex64 = pf.iter().zip(&ph).map(|(a, b)| a * b.conj()).sum::<Complex64>() * g.cell_volume();
        let spec = f.inner(&h).unwrap();
        assert!((spec - quad).norm() <= 1e-12 * quad.norm().max(1.0));
        let a = SpectralField::single_mode(g, &[1, 0, 0], c(1.0, 0.0)).unwrap();
        let b = SpectralField::single_mode(g, &[0, 1, 0], c(1.0, 0.0)).unwrap();
        assert_eq!(a.inner(&b).unwrap(), ZERO);
        assert!(a.inner(&SpectralField::zeros(grid(3, 4, 1), false)).is_err());
    }

    #[test]
    fn truncation_examples() {
        let g = grid(2, 16, 5);
        let f = SpectralField::real_mode(g, &[3, 0], c(1.0, 0.5)).unwrap();
        let t = f.truncate(2);
        assert!(t.coeffs().iter().all(|v| *v == ZERO));
        let full = f.sobolev_norm(1.0, NormKind::Inhomogeneous).unwrap();
        let diff = t.sub(&f).unwrap().sobolev_norm(1.0, NormKind::Inhomogeneous).unwrap();
        assert_eq!(diff, full);
        for m in [0.0, 0.5, 1.0, 2.0, 3.0] {
            let rhs = (1.0f64 / 3.0).powf(m) * f.sobolev_norm(1.0 + m, NormKind::Inhomogeneous).unwrap();
            assert!(diff <= rhs);
        }
        // K ≥ N/2 leaves V_R fields unchanged.
        let r = rand_scalar(g, 5, true);
        assert_eq!(r.truncate(8), r);
        assert_eq!(r.truncate(100), r);
    }

    #[test]
    fn leray_examples() {
        let g = grid(2, 16, 5);
        let mut phi = rand_scalar(g, 8, true);
        phi.coeffs_mut()[0] = ZERO;
        let grad = phi.gradient();
        let p = grad.leray_project();
        assert!(p.l2_norm() <= 1e-14 * grad.l2_norm());

        let v = rand_scalar(g, 9, true).perp_gradient().unwrap();
        let pv = v.leray_project();
        assert!(pv.sub(&v).unwrap().l2_norm() <= 1e-14 * v.l2_norm());

        let w = VectorField::new(vec![rand_scalar(g, 1, true), rand_scalar(g, 2, true)]).unwrap();
        let pw = w.leray_project();
        assert!(pw.divergence_residual() <= 1e-12);
        assert!(pw.leray_project().sub(&pw).unwrap().l2_norm() <= 1e-15 * pw.l2_norm());
    }

    #[test]
    fn vector_requires_shared_grid() {
        let a = SpectralField::zeros(grid(2, 8, 2), true);
        let b = SpectralField::zeros(grid(2, 10, 2), true);
        assert!(matches!(VectorField::new(vec![a.clone(), b]), Err(Error::GridMismatch(_))));
        assert!(VectorField::new(vec![a.clone()]).is_err());
        assert!(VectorField::new(vec![a.clone(), a]).is_ok());
    }

    #[test]
    fn resample_and_distance() {
        let g = grid(2, 16, 5);
        let big = grid(2, 32, 5);
        let f = rand_scalar(g, 4, true);
        let up = f.resample(&big).unwrap();
        assert_eq!(up.l2_norm(), f.l2_norm());
        assert_eq!(up.resample(&g).unwrap(), f);
        assert_eq!(f.l2_distance(&up).unwrap(), 0.0);
        let other = SpectralGrid::new(2, 2.0, 16, 5).unwrap();
        assert!(f.resample(&other).is_err());
        let h = rand_scalar(big, 6, true);
        let d1 = f.l2_distance(&h).unwrap();
        let d2 = up.sub(&h).unwrap().l2_norm();
        assert!((d1 - d2).abs() <= 1e-14 * d2);
    }
}
