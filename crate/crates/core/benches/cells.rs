//! Sequential vs rayon-parallel execution of benchmark cells.
//!
//! Uses one operating-point row of the bundled Francis plant on a short
//! horizon so a sample finishes in well under a second.

use criterion::{criterion_group, criterion_main, Criterion};
use hydrolin::bench::{build_grid, run_benchmark, BenchOptions, Execution};
use hydrolin::BundledPlant;

fn cells(c: &mut Criterion) {
    let plant = BundledPlant::Francis.load();
    let mut grid = build_grid(&plant.config);
    grid.cells.retain(|&(i, k)| i == 4 && k % 4 == 0);
    let mut opts = BenchOptions::new(&plant.config, plant.head_signal, plant.steps);
    opts.dt = 5e-3;
    opts.t_end = 20.0;
    opts.transient = 15.0;
    opts.steady = 5.0;

    let mut group = c.benchmark_group("cells");
    group.sample_size(10);
    for (name, exec) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| run_benchmark(&plant.config, &plant.curves, &grid, &opts, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, cells);
criterion_main!(benches);
