//! Shipped experiment configs.

use toges_core::{builtin_problem, GapSelector, SystemKind};

use crate::config::*;

pub const NAMES: [&str; 2] = ["figure1", "figure2"];

pub fn describe(name: &str) -> Option<&'static str> {
    match name {
        "figure1" => Some("TOGES, TOGES_V and TOGES_VH (alpha=3, beta=1) on f1, f2, f3 from u0=(3,1), log-log gaps to t=1e3"),
        "figure2" => Some("TOGES_V, TOGES_VH, SC3 and HEAVY_BALL (mu=1) on f1, semi-log gaps to t=100"),
        _ => None,
    }
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    match name {
        "figure1" => Some(figure1()),
        "figure2" => Some(figure2()),
        _ => None,
    }
}

fn system(kind: SystemKind) -> SystemSpec {
    SystemSpec {
        kind,
        alpha: 3.0,
        beta: 0.0,
        mu: 1.0,
        lambda: 1.0,
        t0: 1.0,
        u0: vec![3.0, 1.0],
        du0: Some(vec![0.0, 0.0]),
        ddu0: kind.is_third_order().then(|| vec![0.0, 0.0]),
    }
}

fn integrator(t_end: f64, grid: GridSpec) -> IntegratorSpec {
    IntegratorSpec {
        t_end,
        rel_tol: 1e-9,
        abs_tol: 1e-12,
        h_init: None,
        h_max: None,
        max_steps: None,
        grid: Some(grid),
    }
}

fn rate(selector: GapSelector, max_slope: Option<f64>) -> RateSpec {
    RateSpec { selector, window: (10.0, 1e3), power: 3.0, max_slope }
}

fn gradient_check() -> CheckSpec {
    CheckSpec::Gradient { points: 100, tol: 1e-6, radius: 3.0 }
}

fn figure1() -> ExperimentConfig {
    let mut runs = Vec::new();
    let mut figures = Vec::new();
    for f in ["f1", "f2", "f3"] {
        let mut names = Vec::new();
        for kind in [SystemKind::Toges, SystemKind::TogesV, SystemKind::TogesVH] {
            let mut sys = system(kind);
            if kind == SystemKind::TogesVH {
                sys.beta = 1.0;
            }
            let limit = (kind != SystemKind::Toges).then_some(-3.0 + 0.15);
            let mut checks = vec![gradient_check()];
            if kind == SystemKind::TogesV {
                checks.push(CheckSpec::Reduction { tol: 1e-6 });
            }
            let name = format!("figure1_{f}_{kind}");
            runs.push(RunSpec {
                name: name.clone(),
                problem: builtin_problem(f).expect("builtin"),
                system: sys,
                integrator: integrator(1e3, GridSpec::Log { lo: 1.0, hi: 1e3, n: 301 }),
                diagnostics: DiagnosticsSpec {
                    energy: kind != SystemKind::Toges,
                    rates: vec![rate(GapSelector::AtU, limit), rate(GapSelector::AtV, limit)],
                    checks,
                },
            });
            names.push(name);
        }
        figures.push(FigureSpec {
            name: format!("figure1_{f}"),
            title: Some(format!("{f}: f(u(t)) - min f")),
            axes: Axes::Loglog,
            column: "gap_u".into(),
            runs: names,
            fastest_at: None,
        });
    }
    ExperimentConfig { output_dir: None, seed: 1, runs, figures }
}

fn figure2() -> ExperimentConfig {
    let grid = GridSpec::Points((0..=198).map(|i| 1.0 + 0.5 * i as f64).collect());
    let mut runs = Vec::new();
    for kind in [SystemKind::TogesV, SystemKind::TogesVH, SystemKind::Sc3, SystemKind::HeavyBall] {
        let mut sys = system(kind);
        let mut diagnostics = DiagnosticsSpec::default();
        match kind {
            SystemKind::TogesVH => sys.beta = 1.0,
            SystemKind::Sc3 => {
                diagnostics.energy = true;
                diagnostics.checks = vec![CheckSpec::EnergyMonotone { tol: 1e-6 }, CheckSpec::Reduction { tol: 1e-6 }];
            }
            _ => {}
        }
        runs.push(RunSpec {
            name: format!("figure2_{kind}"),
            problem: builtin_problem("f1").expect("builtin"),
            system: sys,
            integrator: integrator(100.0, grid.clone()),
            diagnostics,
        });
    }
    let names: Vec<String> = runs.iter().map(|r| r.name.clone()).collect();
    let figures = vec![FigureSpec {
        name: "figure2".into(),
        title: Some("f1, strong convexity mu = 1: f(u(t)) - min f".into()),
        axes: Axes::Semilogy,
        column: "gap_u".into(),
        runs: names,
        fastest_at: Some(FastestAt {
            t: 100.0,
            run: "figure2_SC3".into(),
            than: vec!["figure2_TOGES_V".into(), "figure2_TOGES_VH".into()],
        }),
    }];
    ExperimentConfig { output_dir: None, seed: 2, runs, figures }
}
