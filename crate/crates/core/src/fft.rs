//! Multi-dimensional complex FFTs on the grid layout, built from 1-d
//! `rustfft` plans applied axis by axis.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::SpectralGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `f̂ → f`: unnormalised sum `Σ_k f̂_k e^{+2πik·x/L}`.
    ToPhysical,
    /// `f → f̂`: `N^{-n} Σ_x f(x) e^{-2πik·x/L}`.
    ToSpectral,
}

struct Workspace {
    planner: FftPlanner<f64>,
    plans: HashMap<(usize, bool), Arc<dyn Fft<f64>>>,
    scratch: Vec<Complex64>,
    lines: Vec<Complex64>,
}

thread_local! {
    static WORKSPACE: RefCell<Workspace> = RefCell::new(Workspace {
        planner: FftPlanner::new(),
        plans: HashMap::new(),
        scratch: Vec::new(),
        lines: Vec::new(),
    });
}

impl Workspace {
    fn plan(&mut self, n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
        let planner = &mut self.planner;
        self.plans
            .entry((n, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    }
}

/// In-place transform of `data` (length `N^n`, grid layout).
pub fn transform(grid: &SpectralGrid, data: &mut [Complex64], dir: Direction) {
    let n = grid.n();
    let total = grid.len();
    assert_eq!(data.len(), total, "buffer length does not match grid");
    let inverse = dir == Direction::ToPhysical;
    WORKSPACE.with(|ws| {
        let mut ws = ws.borrow_mut();
        let plan = ws.plan(n, inverse);
        let need = plan.get_inplace_scratch_len();
        if ws.scratch.len() < need {
            ws.scratch.resize(need, Complex64::new(0.0, 0.0));
        }
        if ws.lines.len() < total {
            ws.lines.resize(total, Complex64::new(0.0, 0.0));
        }
        let Workspace { scratch, lines, .. } = &mut *ws;
        let scratch = &mut scratch[..need];
        let lines = &mut lines[..total];

        // Contiguous last axis: all rows in one call.
        plan.process_with_scratch(data, scratch);

        // Remaining axes: gather strided lines contiguously, transform, scatter.
        let dims = grid.n_dim();
        for axis in (0..dims - 1).rev() {
            let stride = n.pow((dims - 1 - axis) as u32);
            let outer = total / (stride * n);
            for o in 0..outer {
                let base = o * stride * n;
                for i in 0..n {
                    let src = &data[base + i * stride..base + (i + 1) * stride];
                    for (inner, v) in src.iter().enumerate() {
                        lines[(o * stride + inner) * n + i] = *v;
                    }
                }
            }
            plan.process_with_scratch(lines, scratch);
            for o in 0..outer {
                let base = o * stride * n;
                for i in 0..n {
                    let dst = &mut data[base + i * stride..base + (i + 1) * stride];
                    for (inner, v) in dst.iter_mut().enumerate() {
                        *v = lines[(o * stride + inner) * n + i];
                    }
                }
            }
        }
    });
    if !inverse {
        let scale = 1.0 / total as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Physical samples of several real fields, two per complex transform.
///
/// Each coefficient array must be Hermitian-symmetric; the imaginary part of
/// the synthesis is discarded.
pub fn to_physical_real_many(grid: &SpectralGrid, coeffs: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let total = grid.len();
    let mut out = Vec::with_capacity(coeffs.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    for pair in coeffs.chunks(2) {
        match pair {
            [a, b] => {
                for ((h, x), y) in buf.iter_mut().zip(a.iter()).zip(b.iter()) {
                    *h = Complex64::new(x.re - y.im, x.im + y.re);
                }
                transform(grid, &mut buf, Direction::ToPhysical);
                out.push(buf.iter().map(|h| h.re).collect());
                out.push(buf.iter().map(|h| h.im).collect());
            }
            [a] => {
                buf.copy_from_slice(a);
                transform(grid, &mut buf, Direction::ToPhysical);
                out.push(buf.iter().map(|h| h.re).collect());
            }
            _ => unreachable!(),
        }
    }
    out
}

/// Coefficients of several real fields, two per complex transform.
pub fn to_spectral_real_many(grid: &SpectralGrid, values: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
    let total = grid.len();
    let mut out = Vec::with_capacity(values.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    for pair in values.chunks(2) {
        match pair {
            [a, b] => {
                for ((h, x), y) in buf.iter_mut().zip(a.iter()).zip(b.iter()) {
                    *h = Complex64::new(*x, *y);
                }
                transform(grid, &mut buf, Direction::ToSpectral);
                let mut ca = vec![Complex64::new(0.0, 0.0); total];
                let mut cb = vec![Complex64::new(0.0, 0.0); total];
                for i in 0..total {
                    let h = buf[i];
                    let hc = buf[grid.neg_index(i)].conj();
                    ca[i] = 0.5 * (h + hc);
                    let d = h - hc;
                    cb[i] = Complex64::new(0.5 * d.im, -0.5 * d.re);
                }
                out.push(ca);
                out.push(cb);
            }
            [a] => {
                for (h, x) in buf.iter_mut().zip(a.iter()) {
                    *h = Complex64::new(*x, 0.0);
                }
                transform(grid, &mut buf, Direction::ToSpectral);
                out.push(buf.clone());
            }
            _ => unreachable!(),
        }
    }
    out
}
