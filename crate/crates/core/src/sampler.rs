//! Seeded random band-limited fields.
//!
//! Coefficients are i.i.d. complex Gaussians damped by `|k|^{-γ}` on
//! `1 ≤ |k| ≤ band`, optionally Hermitian-symmetrised; vector fields are
//! Leray-projected. Every draw comes from a ChaCha8 stream so results are
//! reproducible across platforms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::field::{SpectralField, VectorField};
use crate::grid::SpectralGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomFieldSpec {
    /// Largest `|k|` carrying energy.
    pub band: usize,
    /// Spectral decay exponent.
    pub gamma: f64,
    pub hermitian: bool,
}

impl RandomFieldSpec {
    pub fn new(band: usize) -> Self {
        RandomFieldSpec { band, gamma: 2.0, hermitian: true }
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finaliser, used to derive independent per-sample seeds.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Modes are drawn in lexicographic order of `k` over the cube
/// `[-band, band]^n`, so a seed yields the same field on every resolution
/// that holds the band.
pub fn random_field<R: Rng>(grid: &SpectralGrid, spec: &RandomFieldSpec, rng: &mut R) -> SpectralField {
    let band = spec.band as i64;
    let band2 = band * band;
    let d = grid.n_dim();
    let mut f = SpectralField::zeros(*grid, spec.hermitian);
    let side = (2 * band + 1) as usize;
    let count = side.pow(d as u32);
    {
        let c = f.coeffs_mut();
        for m in 0..count {
            let mut k = [0i64; 3];
            let mut r = m;
            for j in (0..d).rev() {
                k[j] = (r % side) as i64 - band;
                r /= side;
            }
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0 || k2 > band2 {
                continue;
            }
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if let Some(i) = grid.index_of(&k) {
                let damp = (k2 as f64).powf(-0.5 * spec.gamma) * std::f64::consts::FRAC_1_SQRT_2;
                c[i] = Complex64::new(re, im) * damp;
            }
        }
    }
    if spec.hermitian {
        symmetrize(&mut f);
    }
    f
}

/// Replace `f̂_k` by `(f̂_k + conj f̂_{-k}) / 2`.
pub fn symmetrize(f: &mut SpectralField) {
    let g = *f.grid();
    let src = f.coeffs().to_vec();
    let c = f.coeffs_mut();
    for i in 0..g.len() {
        let k = g.wavevector(i);
        match g.index_of(&[-k[0], -k[1], -k[2]]) {
            Some(j) => c[i] = 0.5 * (src[i] + src[j].conj()),
            None => c[i] = Complex64::new(0.0, 0.0),
        }
    }
    f.set_hermitian(true);
}

/// Divergence-free random vector field.
pub fn random_solenoidal<R: Rng>(grid: &SpectralGrid, spec: &RandomFieldSpec, rng: &mut R) -> VectorField {
    let comps = (0..grid.n_dim()).map(|_| random_field(grid, spec, rng)).collect();
    VectorField::new(comps).expect("components share the grid").leray_project()
}
