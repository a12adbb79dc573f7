//! Benchmark harness for specmhd kernels; see `benches/`.
