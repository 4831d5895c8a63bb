use hydrolin::bench::{build_grid, error_series, mae, run_benchmark, BenchOptions, Execution};
use hydrolin::BundledPlant;
use proptest::prelude::*;

proptest! {
    #[test]
    fn swapping_reference_negates_errors(
        pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..40),
        norm in 0.1f64..1e4,
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let t: Vec<f64> = (0..a.len()).map(|k| k as f64).collect();
        let e1 = error_series(&a, &b, norm).unwrap();
        let e2 = error_series(&b, &a, norm).unwrap();
        for (x, y) in e1.iter().zip(&e2) {
            prop_assert_eq!(*x, -*y);
        }
        let w = [0.0, t[t.len() - 1]];
        prop_assert_eq!(mae(&e1, &t, w).unwrap(), mae(&e2, &t, w).unwrap());
        prop_assert!(mae(&e1, &t, w).unwrap() >= 0.0);
    }

    #[test]
    fn mae_bounded_by_extremes(e in prop::collection::vec(-5.0f64..5.0, 1..60)) {
        let t: Vec<f64> = (0..e.len()).map(|k| 0.01 * k as f64).collect();
        let m = mae(&e, &t, [0.0, t[t.len() - 1]]).unwrap();
        let hi = e.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let lo = e.iter().fold(f64::INFINITY, |a, b| a.min(b.abs()));
        prop_assert!(m <= hi + 1e-12 && m >= lo - 1e-12);
    }
}

/// One operating point at two step sizes: halving dt moves every MAE by far
/// less than 0.01 pu.
#[test]
fn halving_dt_changes_maes_little() {
    let p = BundledPlant::Francis.load();
    let mut grid = build_grid(&p.config);
    grid.cells.retain(|&(i, k)| i == 4 && k % 5 == 0);
    let mut opts = BenchOptions::new(&p.config, p.head_signal, p.steps);
    opts.t_end = 60.0;
    opts.transient = 40.0;
    opts.steady = 10.0;
    opts.dt = 5e-3;
    let coarse = run_benchmark(&p.config, &p.curves, &grid, &opts, Execution::Sequential).unwrap();
    opts.dt = 2.5e-3;
    let fine = run_benchmark(&p.config, &p.curves, &grid, &opts, Execution::Parallel).unwrap();
    for (a, b) in coarse.iter().zip(&fine) {
        let (ma, mb) = (a.maes.unwrap(), b.maes.unwrap());
        for (x, y) in [
            (ma.torque_transient, mb.torque_transient),
            (ma.torque_steady, mb.torque_steady),
            (ma.head_transient, mb.head_transient),
            (ma.head_steady, mb.head_steady),
        ] {
            assert!((x - y).abs() < 1e-3, "dy {}: {x} vs {y}", a.dy);
        }
    }
}

#[test]
fn kaplan_steps_move_blade_pitch_on_cam() {
    let p = BundledPlant::Kaplan.load();
    let mut grid = build_grid(&p.config);
    grid.cells.retain(|&(i, k)| i == 3 && (k == 20 || k == 24));
    let mut opts = BenchOptions::new(&p.config, p.head_signal, p.steps);
    opts.dt = 5e-3;
    opts.t_end = 30.0;
    opts.transient = 20.0;
    opts.steady = 5.0;
    let res = run_benchmark(&p.config, &p.curves, &grid, &opts, Execution::Sequential).unwrap();
    assert!(res[0].maes.unwrap().torque_transient < 1e-8);
    assert!(res[1].maes.unwrap().torque_transient > 1e-6);
}
