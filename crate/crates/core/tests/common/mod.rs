//! Brute-force Fourier-convolution oracles over the active modes of small
//! fields, plus sparse random instances to feed them.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use specmhd_core::sampler::{derive_seed, rng_from_seed};
use specmhd_core::stokes::stokes_solve;
use specmhd_core::{SpectralField, SpectralGrid, VectorField};

pub type Sparse = BTreeMap<[i64; 3], Vec<Complex64>>;

/// Nonzero modes of `v` with their vector coefficients.
pub fn active(v: &VectorField) -> Sparse {
    let g = *v.grid();
    let mut out = Sparse::new();
    for i in 0..g.len() {
        let c: Vec<Complex64> = v.components().iter().map(|f| f.coeffs()[i]).collect();
        if c.iter().any(|z| z.norm_sqr() > 0.0) {
            out.insert(g.wavevector(i), c);
        }
    }
    out
}

fn add_at(out: &mut Sparse, k: [i64; 3], d: usize, i: usize, z: Complex64) {
    out.entry(k).or_insert_with(|| vec![Complex64::new(0.0, 0.0); d])[i] += z;
}

fn modulus(k: &[i64; 3], l: f64) -> f64 {
    ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt() / l
}

/// `Σ_{p+q=k} (û(p)·2πiq/L) B̂(q) · m(p+q, q)`.
fn convolve(u: &Sparse, b: &Sparse, d: usize, l: f64, m: impl Fn(&[i64; 3], &[i64; 3]) -> f64) -> Sparse {
    let mut out = Sparse::new();
    for (p, up) in u {
        for (q, bq) in b {
            let k = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
            let mut dot = Complex64::new(0.0, 0.0);
            for j in 0..d {
                dot += up[j] * Complex64::new(0.0, 2.0 * PI * q[j] as f64 / l);
            }
            let w = m(&k, q);
            for i in 0..d {
                add_at(&mut out, k, d, i, dot * bq[i] * w);
            }
        }
    }
    out
}

pub fn advect_oracle(u: &VectorField, b: &VectorField) -> Sparse {
    let g = u.grid();
    convolve(&active(u), &active(b), g.n_dim(), g.length(), |_, _| 1.0)
}

/// `Λ^s[(u·∇)B] − (u·∇)Λ^s B` with `Λ^s ↔ |k/L|^s`.
pub fn commutator_oracle(u: &VectorField, b: &VectorField, s: f64) -> Sparse {
    let g = u.grid();
    let l = g.length();
    convolve(&active(u), &active(b), g.n_dim(), l, |k, q| modulus(k, l).powf(s) - modulus(q, l).powf(s))
}

/// `P[(B·∇)B]_k / (4π²ν|k/L|²)`, zero mean.
pub fn stokes_oracle(b: &VectorField, nu: f64) -> Sparse {
    let g = b.grid();
    let (d, l) = (g.n_dim(), g.length());
    let force = advect_oracle(b, b);
    let mut out = Sparse::new();
    for (k, f) in force {
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        if k2 == 0.0 {
            continue;
        }
        let mut dot = Complex64::new(0.0, 0.0);
        for j in 0..d {
            dot += f[j] * k[j] as f64;
        }
        let c = 4.0 * PI * PI * nu * k2 / (l * l);
        out.insert(k, (0..d).map(|i| (f[i] - dot * k[i] as f64 / k2) / c).collect());
    }
    out
}

pub fn max_modulus(s: &Sparse) -> f64 {
    s.values().flat_map(|c| c.iter().map(|z| z.norm())).fold(0.0, f64::max)
}

/// `max |v̂ − oracle| / max |oracle|` over every mode of `v` and every oracle
/// mode; oracle modes that `v` cannot hold count in full.
pub fn relative_error(v: &VectorField, oracle: &Sparse) -> f64 {
    let scale = max_modulus(oracle);
    let worst = absolute_error(v, oracle);
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

pub fn absolute_error(v: &VectorField, oracle: &Sparse) -> f64 {
    let g = *v.grid();
    let d = g.n_dim();
    let mut worst = 0.0f64;
    for i in 0..g.len() {
        let k = g.wavevector(i);
        let o = oracle.get(&k);
        for j in 0..d {
            let want = o.map_or(Complex64::new(0.0, 0.0), |c| c[j]);
            worst = worst.max((v.components()[j].coeffs()[i] - want).norm());
        }
    }
    for (k, c) in oracle {
        if g.index_of(&k[..d]).is_none() {
            worst = worst.max(c.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    worst
}

/// Real divergence-free field with `pairs` random `±k` pairs inside `|k| ≤ K_R`.
pub fn sparse_solenoidal<R: Rng>(grid: &SpectralGrid, pairs: usize, rng: &mut R) -> VectorField {
    let d = grid.n_dim();
    let kc = grid.k_cut() as i64;
    let mut comps: Vec<SpectralField> = (0..d).map(|_| SpectralField::zeros(*grid, true)).collect();
    let mut placed = 0;
    while placed < pairs {
        let mut k = [0i64; 3];
        for v in k.iter_mut().take(d) {
            *v = rng.random_range(-kc..=kc);
        }
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0 || k2 > kc * kc {
            continue;
        }
        let neg = [-k[0], -k[1], -k[2]];
        let (Some(i), Some(j)) = (grid.index_of(&k[..d]), grid.index_of(&neg[..d])) else { continue };
        if comps[0].coeffs()[i].norm_sqr() > 0.0 || comps[d - 1].coeffs()[i].norm_sqr() > 0.0 {
            continue;
        }
        // Random direction with its component along k removed.
        let mut dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let kd: f64 = (0..d).map(|m| dir[m] * k[m] as f64).sum::<f64>() / k2 as f64;
        for m in 0..d {
            dir[m] -= kd * k[m] as f64;
        }
        let a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        for m in 0..d {
            comps[m].coeffs_mut()[i] = a * dir[m];
            comps[m].coeffs_mut()[j] = a.conj() * dir[m];
        }
        placed += 1;
    }
    VectorField::new(comps).unwrap()
}

/// Thirty small instances: n and L vary, each field has at most 8 active modes.
pub fn small_instances() -> Vec<(f64, VectorField, VectorField)> {
    (0..30u64)
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(7, c));
            let n_dim = if c % 5 == 4 { 3 } else { 2 };
            let length = [1.0, 0.7, 2.5][(c % 3) as usize];
            let grid = SpectralGrid::dealiased(n_dim, length, 3).unwrap();
            let s = [1.1, 1.5, 2.0][(c % 3) as usize];
            let u = sparse_solenoidal(&grid, 4, &mut rng);
            let b = sparse_solenoidal(&grid, 4, &mut rng);
            (s, u, b)
        })
        .collect()
}

/// Error of `stokes_solve` against the oracle, scaled by the unprojected
/// inverse `max|F((B·∇)B)|/(4π²ν/L²)` so that magnetostatic data (`u = 0`)
/// are judged on the same footing.
pub fn stokes_error(b: &VectorField, nu: f64) -> f64 {
    let l = b.grid().length();
    let scale = max_modulus(&advect_oracle(b, b)) * l * l / (4.0 * std::f64::consts::PI.powi(2) * nu);
    absolute_error(&stokes_solve(b, nu).unwrap(), &stokes_oracle(b, nu)) / scale
}
