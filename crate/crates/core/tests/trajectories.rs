//! Integration-level checks of the dynamics against closed forms and
//! self-consistency.

use toges_core::dynamics::matched_rescaled_config;
use toges_core::*;

const U0: [f64; 2] = [3.0, 1.0];

fn problem(name: &str) -> Builtin {
    builtin_problem(name).unwrap()
}

fn run(cfg: &DynamicsConfig, p: &dyn Objective, grid: Vec<f64>, rel_tol: f64) -> Trajectory {
    let icfg = IntegratorConfig::new(*grid.last().unwrap())
        .tolerances(rel_tol, rel_tol * 1e-3)
        .grid(grid);
    integrate(cfg, p, &icfg).unwrap()
}

/// With f ≡ 0 the velocity solves an Euler equation with indicial roots
/// −5 and −(α+1).
fn free_motion_error(alpha: f64, du0: f64, ddu0: f64) -> f64 {
    let q = alpha + 1.0;
    let d = (ddu0 + 5.0 * du0) / (5.0 - q);
    let c = du0 - d;
    let cfg = DynamicsConfig::new(SystemKind::TogesV, &[0.0])
        .alpha(alpha)
        .velocity(&[du0])
        .acceleration(&[ddu0]);
    let tr = run(&cfg, &problem("zero(1)"), log_grid(1.0, 50.0, 60), 1e-12);
    let mut worst = 0.0f64;
    for s in &tr.samples {
        let t = s.state.t;
        let du = c * t.powf(-5.0) + d * t.powf(-q);
        let ddu = -5.0 * c * t.powf(-6.0) - q * d * t.powf(-q - 1.0);
        let u = c * (1.0 - t.powf(-4.0)) / 4.0 + d * (1.0 - t.powf(-alpha)) / alpha;
        worst = worst.max((s.state.du[0] - du).abs() / du.abs());
        worst = worst.max((s.state.ddu[0] - ddu).abs() / ddu.abs().max(1e-300));
        if t > 1.0 {
            worst = worst.max((s.state.u[0] - u).abs() / u.abs());
        }
    }
    worst
}

#[test]
fn free_motion_matches_euler_closed_form() {
    for (alpha, du0, ddu0) in [(3.0, 1.0, 0.0), (6.0, 1.0, -2.0), (2.5, -0.5, 1.0)] {
        let e = free_motion_error(alpha, du0, ddu0);
        assert!(e <= 1e-8, "alpha {alpha}: {e:e}");
    }
}

#[test]
fn tightening_tolerances_converges() {
    let p = problem("f3");
    let cfg = DynamicsConfig::new(SystemKind::TogesVH, &U0).alpha(3.5).beta(0.5);
    let grid = log_grid(1.0, 50.0, 20);
    let coarse = run(&cfg, &p, grid.clone(), 1e-7);
    let fine = run(&cfg, &p, grid.clone(), 1e-9);
    let finest = run(&cfg, &p, grid, 1e-12);
    let err = |a: &Trajectory| {
        a.samples
            .iter()
            .zip(&finest.samples)
            .flat_map(|(x, y)| x.state.to_flat().into_iter().zip(y.state.to_flat()))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let (ec, ef) = (err(&coarse), err(&fine));
    assert!(ef < ec, "{ef:e} !< {ec:e}");
    assert!(ef <= 1e-6, "{ef:e}");
}

#[test]
fn dense_output_agrees_with_reintegration() {
    let p = problem("f1");
    for kind in [SystemKind::TogesV, SystemKind::Sc3, SystemKind::Avd] {
        let cfg = DynamicsConfig::new(kind, &U0).alpha(3.0);
        let sparse = run(&cfg, &p, vec![1.0, 30.0], 1e-10);
        for t in [1.37, 2.9, 7.77, 19.1] {
            let interp = sample_at(&sparse, t).unwrap();
            let direct = run(&cfg, &p, vec![t], 1e-10);
            let exact = &direct.samples.last().unwrap().state;
            for (a, b) in interp.to_flat().iter().zip(exact.to_flat()) {
                assert!((a - b).abs() <= 1e-7, "{kind} at {t}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn f2_preserves_the_component_along_its_argmin() {
    // ∇f2 is parallel to (1, 1), so u₁ − u₂ moves freely and stays put from rest
    let p = problem("f2");
    let cfg = DynamicsConfig::new(SystemKind::TogesV, &U0);
    let tr = run(&cfg, &p, log_grid(1.0, 500.0, 100), 1e-10);
    for s in &tr.samples {
        assert!((s.state.u[0] - s.state.u[1] - 2.0).abs() <= 1e-9);
    }
    let d = distance_to_argmin_series(&tr, &p, GapSelector::AtU).unwrap();
    assert!(d.last().unwrap().1 < 1e-3 * d[0].1);
    let limit = &tr.final_state().u;
    assert!((limit[0] - 1.5).abs() < 1e-3 && (limit[1] + 0.5).abs() < 1e-3, "{limit:?}");
}

#[test]
fn strongly_convex_auxiliary_distance_bound() {
    let p = problem("quad_mu(2)");
    let cfg = DynamicsConfig::new(SystemKind::Sc3, &U0).mu(2.0);
    let tr = run(&cfg, &p, log_grid(1.0, 30.0, 200), 1e-10);
    let b = StrongConvexityBounds::from_initial(&tr.samples[0].state, &p, 2.0).unwrap();
    for s in &tr.samples {
        let y = aux_point_y(&s.state, 2.0);
        let d2: f64 = y.iter().map(|v| v * v).sum();
        let t = s.state.t;
        assert!(d2 <= b.dist_y_sq(t) * (1.0 + 1e-6), "t = {t}");
        assert!(lyapunov_sc(&s.state, &p, 2.0).unwrap() <= b.energy(t) * (1.0 + 1e-6));
    }
}

#[test]
fn weighted_gradient_integral_settles() {
    let p = problem("f1");
    let cfg = DynamicsConfig::new(SystemKind::TogesVH, &U0).alpha(4.0).beta(1.0);
    let tr = run(&cfg, &p, log_grid(1.0, 400.0, 300), 1e-9);
    let whole = grad_integral(&tr, &p, 4.0).unwrap();
    let tail = grad_integral(&tr, &p, 100.0).unwrap();
    assert!(whole.is_finite() && whole > 0.0);
    assert!(tail < 1e-3 * whole, "tail {tail:e} of {whole:e}");
}

#[test]
fn rescaling_needs_the_four_ninths_factor() {
    let f1 = problem("f1");
    let avd = DynamicsConfig::new(SystemKind::Avd, &U0).alpha(3.0);
    let resc = matched_rescaled_config(&avd).unwrap();
    let resc_tr = run(&resc, &f1, log_grid(1.0, 5.0, 50), 1e-11);
    let dev = |scale: f64| {
        let g = Scaled { scale, inner: f1 };
        let tr = run(&avd, &g, log_grid(1.0, 5f64.powf(1.5), 50), 1e-11);
        rescale_equivalence(&tr, &resc_tr).unwrap()
    };
    assert!(dev(4.0 / 9.0) <= 1e-7);
    assert!(dev(9.0 / 4.0) > 1e-2);
}

#[test]
fn run_past_step_budget_is_truncated() {
    let p = problem("f1");
    let cfg = DynamicsConfig::new(SystemKind::TogesV, &U0);
    let icfg = IntegratorConfig::new(1e3).max_steps(50);
    match integrate(&cfg, &p, &icfg) {
        Err(Error::Truncated { steps, partial }) => {
            assert_eq!(steps, 50);
            assert!(partial.end_time() > 1.0 && partial.end_time() < 1e3);
            assert!(sample_at(&partial, partial.end_time()).is_ok());
        }
        other => panic!("expected truncation, got {other:?}"),
    }
}

#[test]
fn gap_at_prox_never_exceeds_envelope_gap() {
    let p = problem("abs_sum(2)");
    let env = regularize(p, 0.5).unwrap();
    let cfg = DynamicsConfig::new(SystemKind::TogesVR, &U0).lambda(0.5);
    let tr = run(&cfg, &p, log_grid(1.0, 100.0, 80), 1e-9);
    let smooth = gap_series(&tr, &env, GapSelector::AtU).unwrap();
    let prox = gap_series(&tr, &p, GapSelector::AtProxU).unwrap();
    for (a, b) in prox.points.iter().zip(&smooth.points) {
        assert!(a.1 <= b.1);
    }
}
