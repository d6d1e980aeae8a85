use std::f64::consts::PI;

use proptest::prelude::*;
use pss_core::expr::{EquationContext, Expr, Jet};
use pss_core::solutions::{
    goursat_from_solution, goursat_solve, linear_solution, sg_kink, traveling_wave, GridSpec, SolutionError, SolutionGrid, STANDARD_JETS,
};

fn kink_u(a: f64, x: f64, t: f64) -> f64 {
    4.0 * (a * x + t / a).exp().atan()
}

#[test]
fn kink_values_and_residual() {
    let k = sg_kink(1.0).unwrap();
    let j = k.eval(0.0, 0.0).unwrap();
    assert!((j.u - PI).abs() < 1e-15);
    assert!((j.ux - 2.0).abs() < 1e-14 && (j.ut - 2.0).abs() < 1e-14);
    for a in [1.0, -0.7, 2.5] {
        let k = sg_kink(a).unwrap();
        assert!(k.max_residual(100, (-3.0, 3.0), 1).unwrap() < 1e-12, "a = {a}");
    }
    assert!(matches!(sg_kink(0.0), Err(SolutionError::ZeroSpeed)));
}

proptest! {
    #[test]
    fn kink_derivatives_match_sech(a in prop_oneof![0.3f64..3.0, -3.0f64..-0.3], x in -3.0f64..3.0, t in -3.0f64..3.0) {
        let th = a * x + t / a;
        let sech = 1.0 / th.cosh();
        let j = sg_kink(a).unwrap().eval(x, t).unwrap();
        prop_assert!((j.u - kink_u(a, x, t)).abs() < 1e-12);
        prop_assert!((j.ux - 2.0 * a * sech).abs() < 1e-12);
        prop_assert!((j.ut - 2.0 / a * sech).abs() < 1e-12);
        prop_assert!((j.uxt + 2.0 * sech * th.tanh()).abs() < 1e-12);
        prop_assert!((j.uxx + 2.0 * a * a * sech * th.tanh()).abs() < 1e-11);
    }
}

#[test]
fn linear_solutions() {
    let s = linear_solution(1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
    for (x, t) in [(0.3, -0.2), (1.0, 1.0)] {
        let j = s.eval(x, t).unwrap();
        assert!((j.u - (x + t as f64).exp()).abs() < 1e-13);
        assert!((j.uxt - j.u).abs() < 1e-13);
    }
    let s = linear_solution(1.0, 1.0, 2.0, 1.0, 1.0).unwrap();
    let j = s.eval(0.0, 0.0).unwrap();
    assert!((j.u - (1.0 - 2.0)).abs() < 1e-14);
    assert!((j.ut - 2.0).abs() < 1e-14, "q = 2");
    assert!(s.max_residual(100, (-1.0, 1.0), 2).unwrap() < 1e-12);
    let s = linear_solution(0.0, 2.0, 3.0, 0.5, 1.0).unwrap();
    assert!(s.max_residual(100, (-1.0, 1.0), 3).unwrap() < 1e-12);
    assert!(matches!(linear_solution(1.0, 0.0, 0.0, 0.0, 1.0), Err(SolutionError::ZeroRate)));
    assert!(matches!(linear_solution(0.0, 0.0, 1.0, 1.0, 1.0), Err(SolutionError::NoParticular { .. })));
}

#[test]
fn wave_reproduces_kink() {
    let ctx = EquationContext::hyperbolic(Expr::z(0).sin()).unwrap();
    let w = traveling_wave(&ctx, 1.0, PI, 2.0, (-6.0, 6.0)).unwrap();
    let k = sg_kink(1.0).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..=60 {
        for m in 0..=6 {
            let (x, t) = (-3.0 + 0.1 * i as f64, -3.0 + m as f64);
            let (a, b) = (w.eval(x, t).unwrap(), k.eval(x, t).unwrap());
            worst = worst.max((a.u - b.u).abs()).max((a.ux - b.ux).abs()).max((a.uxt - b.uxt).abs());
        }
    }
    assert!(worst < 1e-8, "{worst}");
    assert!(w.max_residual(100, (-3.0, 3.0), 4).unwrap() < 1e-10);
    assert!(!w.contains(5.0, 5.0));
    assert!(matches!(w.jet(Jet::z(3), 0.0, 0.0), Err(SolutionError::JetUnavailable { .. })));
}

#[test]
fn wave_linear_profile() {
    let ctx = EquationContext::hyperbolic(Expr::z(0)).unwrap();
    let w = traveling_wave(&ctx, 1.0, 1.0, 0.0, (-2.0, 2.0)).unwrap();
    for s in [-1.9, -0.5, 0.0, 0.77, 1.95] {
        let j = w.eval(s, 0.0).unwrap();
        assert!((j.u - f64::cosh(s)).abs() < 1e-9 && (j.ux - f64::sinh(s)).abs() < 1e-9, "s = {s}");
    }
    assert!(matches!(traveling_wave(&ctx, 0.0, 1.0, 0.0, (-1.0, 1.0)), Err(SolutionError::ZeroWaveSpeed)));
}

fn kink_error(h: f64) -> f64 {
    let k = sg_kink(1.0).unwrap();
    let grid = GridSpec::new(-3.0, 3.0, -3.0, 3.0, h).unwrap();
    let g = goursat_from_solution(&k, &grid).unwrap();
    let mut worst: f64 = 0.0;
    for j in 0..grid.nt {
        for i in 0..grid.nx {
            worst = worst.max((g.value(Jet::z(0), i, j).unwrap() - kink_u(1.0, grid.x(i), grid.t(j))).abs());
        }
    }
    worst
}

#[test]
fn goursat_converges_at_second_order() {
    let (e1, e2) = (kink_error(0.02), kink_error(0.01));
    let ratio = e1 / e2;
    assert!(e2 < 5e-4, "{e2}");
    assert!((3.4..=4.6).contains(&ratio), "errors {e1} {e2} ratio {ratio}");
}

#[test]
fn goursat_free_case_is_exact() {
    let ctx = EquationContext::hyperbolic(Expr::zero()).unwrap();
    let grid = GridSpec::new(-1.0, 1.0, 0.0, 2.0, 0.05).unwrap();
    let phi = |x: f64| (x.sin(), x.cos());
    let psi = |t: f64| ((-1.0f64).sin() + t * t, 2.0 * t);
    let g = goursat_solve(&ctx, phi, psi, &grid).unwrap();
    for j in 0..grid.nt {
        for i in 0..grid.nx {
            let want = grid.x(i).sin() + grid.t(j).powi(2);
            assert!((g.value(Jet::z(0), i, j).unwrap() - want).abs() < 1e-12);
        }
    }
    let bad = goursat_solve(&ctx, phi, |t: f64| (t, 1.0), &grid);
    assert!(matches!(bad, Err(SolutionError::CornerMismatch { .. })));
}

#[test]
fn goursat_blow_up_is_reported() {
    let ctx = EquationContext::hyperbolic(Expr::int(40) * Expr::z(0)).unwrap();
    let grid = GridSpec::new(0.0, 2.0, 0.0, 2.0, 0.02).unwrap();
    match goursat_solve(&ctx, |x| (1.0 + x, 1.0), |t| (1.0 + t, 1.0), &grid) {
        Err(SolutionError::BlowUp { rows, partial, .. }) => {
            assert!(rows > 0 && rows < grid.nt);
            assert_eq!(partial.spec.nt, rows);
            assert!(partial.u().iter().all(|v| v.abs() <= 1e6));
        }
        other => panic!("expected blow-up, got {other:?}"),
    }
}

#[test]
fn sampled_grid_is_consistent_and_round_trips() {
    let k = sg_kink(1.0).unwrap();
    let g1 = k.sample(&GridSpec::new(-1.0, 1.0, -1.0, 1.0, 0.1).unwrap(), &[]).unwrap();
    let g2 = k.sample(&GridSpec::new(-1.0, 1.0, -1.0, 1.0, 0.05).unwrap(), &[Jet::z(3)]).unwrap();
    let (c1, c2) = (g1.derivative_consistency(), g2.derivative_consistency());
    assert!(c1 / c2 > 3.5 && c1 / c2 < 4.5, "{c1} {c2}");
    assert!(g2.field(Jet::z(3)).is_some());
    let dir = tempfile::tempdir().unwrap();
    let (csv, bin) = (dir.path().join("g.csv"), dir.path().join("g.bin"));
    g2.write_csv(&csv).unwrap();
    g2.write_binary(&bin).unwrap();
    assert_eq!(SolutionGrid::read_csv(&csv).unwrap(), g2);
    assert_eq!(SolutionGrid::read_binary(&bin).unwrap(), g2);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# pss-grid v1\n# x0=-1,t0=-1,hx=0.05,ht=0.05,nx=41,nt=41\nx,t,"));
    let bytes = std::fs::read(&bin).unwrap();
    let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
    let fields = 7;
    assert_eq!(bytes.len() - nl - 1, fields * 41 * 41 * 8);
    let first = f64::from_le_bytes(bytes[nl + 1..nl + 9].try_into().unwrap());
    assert_eq!(first, g2.u()[0]);
}

#[test]
fn grid_spec_parsing() {
    let g: GridSpec = "-3:3:-3:3:0.02".parse().unwrap();
    assert_eq!((g.nx, g.nt), (301, 301));
    assert_eq!(g.refined().nx, 601);
    assert!("1:0:0:1:0.1".parse::<GridSpec>().is_err());
    assert!("0:1:0:1".parse::<GridSpec>().is_err());
    assert!("0:1:0:1:0".parse::<GridSpec>().is_err());
    assert_eq!(STANDARD_JETS.len(), 6);
}
