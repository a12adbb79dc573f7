use criterion::{criterion_group, criterion_main, Criterion};
use specmhd_core::mhd::{self, initial_condition, IcKind, InitialCondition, MhdState, SolverConfig};
use specmhd_core::nonlinear::{advect, commutator_lambda};
use specmhd_core::stokes;
use specmhd_core::SpectralGrid;

fn config(k: usize) -> SolverConfig {
    let grid = SpectralGrid::dealiased(2, 1.0, k).unwrap();
    SolverConfig::new(grid, 0.01, 1.5, 1e-3, 1e-3, InitialCondition::new(IcKind::RandomBand, 7))
}

fn kernels(c: &mut Criterion) {
    let cfg = config(32);
    let (u, b) = initial_condition(&cfg.ic, &cfg.grid).unwrap();

    c.bench_function("advect K=32", |bch| bch.iter(|| advect(&u, &b).unwrap()));
    c.bench_function("commutator_lambda K=32 s=1.5", |bch| bch.iter(|| commutator_lambda(&u, &b, 1.5).unwrap()));

    let state = MhdState { t: 0.0, u: u.clone(), b: b.clone() };
    c.bench_function("mhd step K=32", |bch| bch.iter(|| mhd::step(&state, &cfg).unwrap()));

    let st = stokes::state_from(b.clone(), cfg.nu, 0.0).unwrap();
    c.bench_function("stokes_solve K=32", |bch| bch.iter(|| stokes::stokes_solve(&b, cfg.nu).unwrap()));
    c.bench_function("stokes step K=32", |bch| bch.iter(|| stokes::step(&st, &cfg).unwrap()));
}

criterion_group!(benches, kernels);
criterion_main!(benches);
