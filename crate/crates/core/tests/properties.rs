use proptest::prelude::*;

use axisym::certificates::{data_constants, small_data_fixed_point};
use axisym::cli::io::{parse_timeseries_csv, timeseries_csv, Checkpoint};
use axisym::dynamics::{run, SimConfig};
use axisym::elliptic::{EllipticOperator, SolverMethod, StreamKind};
use axisym::fields::{Closure, ScalarField};
use axisym::norms::{lp_norm, Diagnostics, TimeSeries};
use axisym::Grid;

fn small_run(scenario: &str, amplitude: f64, forcing: f64) -> TimeSeries {
    let mut cfg = SimConfig {
        scenario: scenario.into(),
        nr: 8,
        nz: 8,
        horizon: 0.02,
        record_every: 2,
        ..SimConfig::default()
    };
    cfg.scenario_options.amplitude = Some(amplitude);
    cfg.scenario_options.forcing = forcing;
    run(&cfg).unwrap()
}

proptest! {
    #[test]
    fn fixed_point_stays_below_the_cube_root(kappa in 0.0f64..50.0, frac in 0.0f64..0.999) {
        let g2 = frac * (kappa + 1.0).powf(-1.5);
        let fp = small_data_fixed_point(kappa, g2).unwrap();
        prop_assert!(fp.converged && !fp.hypothesis_violated);
        prop_assert!(fp.m >= g2 && fp.m <= g2.cbrt() + 1e-15);
        prop_assert!(fp.residual < 1e-12);
        if let Some(c) = fp.contraction {
            prop_assert!(c < 1.0);
        }
    }

    #[test]
    fn lp_norms_are_homogeneous(c in -5.0f64..5.0, p in 1.0f64..12.0, seed in 0u64..1000) {
        let g = Grid::new(1.0, 0.5, 6, 7).unwrap();
        let f = ScalarField::from_fn(&g, Closure::GAMMA, |r, z| ((seed as f64 + 3.0 * r) * (1.0 + z)).sin());
        let a = lp_norm(&f, p, &g).unwrap();
        let b = lp_norm(&f.scaled(c), p, &g).unwrap();
        prop_assert!((b - c.abs() * a).abs() <= 1e-12 * (1.0 + b));
    }

    #[test]
    fn stream_solver_inverts_its_operator(values in prop::collection::vec(-1.0f64..1.0, 6 * 8)) {
        let g = Grid::new(1.0, 1.0, 6, 8).unwrap();
        let op = EllipticOperator::new(&g, StreamKind::Modified);
        let (x, res) = op.solve_values(&values, SolverMethod::Direct).unwrap();
        prop_assert!(res < 1e-10);
        prop_assert!(op.relative_residual(&x, &values) < 1e-10);
    }

    #[test]
    fn checkpoints_round_trip(t in 0.0f64..10.0, values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3 * 4 * 5)) {
        let n = 20;
        let cp = Checkpoint {
            nr: 4,
            nz: 5,
            radius: 1.0,
            half_height: 2.0,
            t,
            u: values[..n].to_vec(),
            gamma: values[n..2 * n].to_vec(),
            psi1: values[2 * n..].to_vec(),
        };
        prop_assert_eq!(Checkpoint::from_bytes(&cp.to_bytes()).unwrap(), cp);
    }

    #[test]
    fn timeseries_csv_round_trips(rows in prop::collection::vec((0.0f64..1e3, -1e6f64..1e6, 1e-300f64..1.0), 1..6)) {
        let mut s = TimeSeries::new();
        for (k, (v, x, tiny)) in rows.into_iter().enumerate() {
            let d = Diagnostics { u_inf: v, interaction: x, cfl: tiny, lebesgue: vec![(4.0, v, tiny)], ..Diagnostics::default() };
            s.push(k as f64 * 0.125, None, d).unwrap();
        }
        prop_assert_eq!(parse_timeseries_csv(&timeseries_csv(&s).unwrap()).unwrap(), s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn upwind_swirl_never_exceeds_its_start(amplitude in 0.1f64..3.0) {
        let s = small_run("swirl_decay", amplitude, 0.0);
        let u = s.column(|d| d.u_inf);
        prop_assert!(u.iter().all(|v| *v <= u[0] + 1e-10));
        let x = s.column(|d| d.x);
        prop_assert!(x.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn larger_data_never_shrinks_the_constants(amplitude in 0.1f64..2.0, forcing in 0.0f64..2.0, scale in 1.0f64..3.0) {
        let a = data_constants(&small_run("swirl_decay", amplitude, forcing), 1.0).unwrap();
        let b = data_constants(&small_run("swirl_decay", scale * amplitude, scale * forcing), 1.0).unwrap();
        let tol = |x: f64| x * (1.0 - 1e-12);
        for (lo, hi) in [(a.d1, b.d1), (a.d2, b.d2), (a.d3, b.d3), (a.d4, b.d4), (a.d5, b.d5), (a.d6, b.d6), (a.d7, b.d7), (a.g, b.g), (a.g2, b.g2)] {
            prop_assert!(hi >= tol(lo), "{} < {}", hi, lo);
        }
    }
}
