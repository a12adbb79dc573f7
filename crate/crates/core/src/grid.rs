//! Periodic box discretisation and the Galerkin cutoff.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A periodic box `[0, L)^n` resolved by `N` modes per axis, with Galerkin
/// cutoff `K_R` on integer wavenumbers (continuum radius `K_R / L`).
///
/// Coefficients are stored in FFT order: along each axis index `i` carries
/// wavenumber `i` for `i < N/2` and `i - N` otherwise. The last axis varies
/// fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    n_dim: usize,
    length: f64,
    n: usize,
    k_cut: usize,
}

impl SpectralGrid {
    /// Validating constructor: `n_dim ∈ {2,3}`, `L > 0`, `N` even,
    /// `N ≥ 3 K_R + 1` and `K_R ≤ N/2 − 1`.
    pub fn new(n_dim: usize, length: f64, n: usize, k_cut: usize) -> Result<Self> {
        if !(n_dim == 2 || n_dim == 3) {
            return Err(Error::InvalidGrid(format!("n_dim must be 2 or 3, got {n_dim}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("period L must be positive, got {length}")));
        }
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("N must be even and positive, got {n}")));
        }
        if n < 3 * k_cut + 1 {
            return Err(Error::InvalidGrid(format!(
                "N = {n} is below the dealiasing bound 3*K_R+1 = {}",
                3 * k_cut + 1
            )));
        }
        if k_cut + 1 > n / 2 {
            return Err(Error::InvalidGrid(format!("K_R = {k_cut} exceeds N/2 - 1 = {}", n / 2 - 1)));
        }
        Ok(SpectralGrid { n_dim, length, n, k_cut })
    }

    /// Smallest even resolution satisfying the dealiasing bound for `k_cut`.
    pub fn dealiased(n_dim: usize, length: f64, k_cut: usize) -> Result<Self> {
        Self::new(n_dim, length, min_dealiased_n(k_cut), k_cut)
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_cut(&self) -> usize {
        self.k_cut
    }

    /// Total number of stored coefficients, `N^n`.
    pub fn len(&self) -> usize {
        self.n.pow(self.n_dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integer wavenumber carried by FFT index `i` along one axis.
    #[inline]
    pub fn freq(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// FFT index of wavenumber `k`, if it is representable (`-N/2 ≤ k < N/2`).
    #[inline]
    pub fn index_of_freq(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k >= -half && k < half {
            Some(if k >= 0 { k as usize } else { (k + self.n as i64) as usize })
        } else {
            None
        }
    }

    /// Flat index of `-k` for the mode at `idx` (per-axis `(N - i) mod N`).
    #[inline]
    pub fn neg_index(&self, idx: usize) -> usize {
        let n = self.n;
        let neg = |i: usize| (n - i) % n;
        match self.n_dim {
            2 => neg(idx / n) * n + neg(idx % n),
            _ => (neg(idx / (n * n)) * n + neg((idx / n) % n)) * n + neg(idx % n),
        }
    }

    /// Integer wavevector at flat index `idx`; unused trailing entries are 0.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let n = self.n;
        match self.n_dim {
            2 => [self.freq(idx / n), self.freq(idx % n), 0],
            _ => [self.freq(idx / (n * n)), self.freq((idx / n) % n), self.freq(idx % n)],
        }
    }

    /// Flat index of an integer wavevector, if representable.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() < self.n_dim {
            return None;
        }
        let mut idx = 0usize;
        for &kd in &k[..self.n_dim] {
            idx = idx * self.n + self.index_of_freq(kd)?;
        }
        for &kd in &k[self.n_dim..] {
            if kd != 0 {
                return None;
            }
        }
        Some(idx)
    }

    /// `|k|²` in integer units at flat index `idx`.
    #[inline]
    pub fn k_sq(&self, idx: usize) -> i64 {
        let k = self.wavevector(idx);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// Physical wavevector `k / L` at flat index `idx`.
    #[inline]
    pub fn wavevector_phys(&self, idx: usize) -> [f64; 3] {
        let k = self.wavevector(idx);
        let inv = 1.0 / self.length;
        [k[0] as f64 * inv, k[1] as f64 * inv, k[2] as f64 * inv]
    }

    /// Whether the mode at `idx` lies in the closed ball `|k| ≤ radius`.
    #[inline]
    pub fn in_ball(&self, idx: usize, radius: usize) -> bool {
        self.k_sq(idx) <= (radius * radius) as i64
    }

    /// Same box and cutoff with a different resolution.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.n_dim, self.length, n, self.k_cut)
    }

    /// Same box with a different cutoff and the smallest dealiased resolution.
    pub fn with_cutoff(&self, k_cut: usize) -> Result<Self> {
        Self::dealiased(self.n_dim, self.length, k_cut)
    }

    /// Resolution on which quadratic products of two `V_R` fields are
    /// represented without truncation: every mode up to `2 K_R` is stored and
    /// aliases of the product land outside that ball.
    pub fn product_grid(&self) -> SpectralGrid {
        let need = even_smooth_at_least(4 * self.k_cut + 2);
        SpectralGrid { n: self.n.max(need), ..*self }
    }

    /// Whether fields on `self` and `other` can be compared mode by mode.
    pub fn is_nested_with(&self, other: &SpectralGrid) -> bool {
        self.n_dim == other.n_dim && self.length == other.length
    }

    /// Physical coordinate of grid point `i` along an axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        self.length * i as f64 / self.n as f64
    }

    /// Cell volume `(L/N)^n` of the physical grid.
    pub fn cell_volume(&self) -> f64 {
        (self.length / self.n as f64).powi(self.n_dim as i32)
    }

    /// Box volume `L^n`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.n_dim as i32)
    }

    /// Cartesian coordinates of physical grid point `idx` (same layout as
    /// coefficients).
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        match self.n_dim {
            2 => [self.coordinate(idx / n), self.coordinate(idx % n), 0.0],
            _ => [
                self.coordinate(idx / (n * n)),
                self.coordinate((idx / n) % n),
                self.coordinate(idx % n),
            ],
        }
    }
}

/// Smallest even 5-smooth integer `≥ m` (FFT-friendly size).
fn even_smooth_at_least(m: usize) -> usize {
    let mut c = m.max(2);
    loop {
        if c % 2 == 0 {
            let mut r = c;
            for p in [2, 3, 5] {
                while r % p == 0 {
                    r /= p;
                }
            }
            if r == 1 {
                return c;
            }
        }
        c += 1;
    }
}

/// Smallest even, 5-smooth `N` with `N ≥ 3K + 1` and `K ≤ N/2 − 1`.
pub fn min_dealiased_n(k_cut: usize) -> usize {
    even_smooth_at_least((3 * k_cut + 1).max(2 * k_cut + 2))
}
