use std::f64::consts::PI;

use num_complex::Complex64;
use slowvary::nlreduce::{emit_model, reduce_nonlinear};
use slowvary::problems::builtin;
use slowvary_verify::dispersion::{dispersion_oracle, dispersion_table, error_scaling_experiment};
use slowvary_verify::emergence::{emergence_experiment, ManifoldMap};
use slowvary_verify::grid::{Field, Grid, Scheme};
use slowvary_verify::numeric::Values;
use slowvary_verify::sim::{simulate_full, simulate_model, InitialCondition, Mode, SimConfig};
use slowvary_verify::VerifyError;

fn emergence_config(seed: u64) -> SimConfig {
    let m = 256;
    let mut cfg = SimConfig::new(m, 2.0 * PI * (m / 8) as f64 / 0.1);
    cfg.tmax = 5.0;
    cfg.stride = 10;
    cfg.initial = InitialCondition::Random { seed, amplitude: 0.05, max_harmonic: m / 8 };
    cfg
}

#[test]
fn heat_exchanger_oracle_values() {
    let p = builtin("heat-exchanger-linear").unwrap();
    assert_eq!(dispersion_oracle(&p, 0.0).unwrap().re, 0.0);
    let l = dispersion_oracle(&p, 0.1).unwrap().re;
    assert!((l + 1.010206e-2).abs() < 1e-8, "{l}");
    assert!(matches!(dispersion_oracle(&p, 0.5), Err(VerifyError::Branch(_))));
    let shear = builtin("shear-dispersion").unwrap();
    assert!(matches!(dispersion_oracle(&shear, 0.1), Err(VerifyError::Unsupported(_))));
}

#[test]
fn heat_exchanger_error_scaling() {
    let p = builtin("heat-exchanger-linear").unwrap();
    for (order, want) in [(4, 6.0), (2, 4.0)] {
        let s = error_scaling_experiment(&p, order, 0.02, 0.1, 8, &Values::new()).unwrap();
        let slope = s.slope.unwrap();
        assert!((slope - want).abs() <= 0.3, "N={order}: slope {slope}");
        assert!(s.accepted(0.3));
    }
    assert!(error_scaling_experiment(&p, 4, 0.1, 0.02, 8, &Values::new()).is_err());
}

#[test]
fn swift_hohenberg_model_symbol_is_exact() {
    let p = builtin("swift-hohenberg-linear").unwrap();
    let d = dispersion_table(&p, 4, -0.3, 0.3, 61, &Values::new()).unwrap();
    assert!(d.max_err < 1e-12, "{}", d.max_err);
    let row = d.rows.iter().find(|r| (r.k - 1.1).abs() < 1e-12).unwrap();
    assert!((row.lambda_full.re + 0.0441).abs() < 1e-12);
    let s = error_scaling_experiment(&p, 4, 0.02, 0.1, 8, &Values::new()).unwrap();
    assert!(s.slope.is_none() && s.accepted(0.3));
}

#[test]
fn spectral_simulation_matches_the_oracle_per_mode() {
    let p = builtin("heat-exchanger-linear").unwrap();
    let mut cfg = SimConfig::new(32, 2.0 * PI / 0.1);
    cfg.dt = 1e-3;
    cfg.tmax = 1.0;
    cfg.stride = 1000;
    let grid = cfg.grid().unwrap();
    let k = 0.1;
    let lambda = dispersion_oracle(&p, k).unwrap().re;
    // slow eigenvector (1, λ/(ik)) of the symbol
    let ratio = Complex64::new(lambda, 0.0) / Complex64::new(0.0, k);
    let c: Field = (0..grid.points).map(|j| Complex64::new(0.0, k * grid.x(j)).exp()).collect();
    let d: Field = c.iter().map(|z| z * ratio).collect();
    cfg.initial = InitialCondition::Fields(vec![c.clone(), d]);
    let sim = simulate_full(&p, &cfg).unwrap();
    let want = lambda.exp();
    for (z, z0) in sim.last()[0].iter().zip(&c) {
        let got = z / z0;
        assert!((got - want).norm() / want < 1e-8, "{got}");
    }
}

#[test]
fn rk4_converges_at_fourth_order() {
    let p = builtin("heat-exchanger-nonlinear").unwrap();
    let run = |dt: f64| {
        let mut cfg = SimConfig::new(32, 2.0 * PI / 0.2);
        cfg.dt = dt;
        cfg.tmax = 2.0;
        cfg.stride = 1_000_000;
        cfg.initial = InitialCondition::Modes(vec![
            Mode { field: 0, harmonic: 1, amplitude: 0.5, phase: 0.0 },
            Mode { field: 1, harmonic: 2, amplitude: 0.3, phase: 0.4 },
        ]);
        simulate_full(&p, &cfg).unwrap().last().to_vec()
    };
    let diff = |a: &[Field], b: &[Field]| {
        a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    };
    let (u1, u2, u3) = (run(0.2), run(0.1), run(0.05));
    let ratio = diff(&u1, &u2) / diff(&u2, &u3);
    assert!((12.0..=20.0).contains(&ratio), "{ratio}");
}

#[test]
fn heat_exchanger_conserves_the_mean_of_c() {
    let p = builtin("heat-exchanger-nonlinear").unwrap();
    let mut cfg = SimConfig::new(64, 2.0 * PI / 0.1);
    cfg.tmax = 2.0;
    cfg.initial = InitialCondition::Random { seed: 7, amplitude: 0.05, max_harmonic: 8 };
    let grid = cfg.grid().unwrap();
    let sim = simulate_full(&builtin("heat-exchanger-linear").unwrap(), &cfg).unwrap();
    let i0 = grid.integral(&sim.snapshots[0][0]);
    for u in &sim.snapshots {
        assert!((grid.integral(&u[0]) - i0).norm() < 1e-10);
    }
    // the nonlinear system loses c through -c*d, so only the linear one conserves it
    assert!(simulate_full(&p, &cfg).is_ok());
}

#[test]
fn trivial_simulations() {
    let p = builtin("heat-exchanger-linear").unwrap();
    let cfg = SimConfig::new(32, 10.0);
    let sim = simulate_full(&p, &cfg).unwrap();
    assert!(sim.last().iter().flatten().all(|z| z.norm() == 0.0));

    // a decaying, bounded single mode
    let mut cfg = SimConfig::new(64, 2.0 * PI / 0.1);
    cfg.tmax = 5.0;
    cfg.initial = InitialCondition::Modes(vec![Mode { field: 0, harmonic: 1, amplitude: 1.0, phase: -PI / 2.0 }]);
    let grid = cfg.grid().unwrap();
    let sim = simulate_full(&p, &cfg).unwrap();
    let energy: Vec<f64> = sim.snapshots.iter().map(|u| u.iter().map(|f| grid.l2(f).powi(2)).sum()).collect();
    assert!(energy.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));

    // the marginal Swift-Hohenberg mode keeps its amplitude
    let sh = builtin("swift-hohenberg-linear").unwrap();
    let mut cfg = SimConfig::new(32, 2.0 * PI * 4.0);
    cfg.dt = 1e-3;
    cfg.tmax = 1.0;
    cfg.initial = InitialCondition::Modes(vec![Mode { field: 0, harmonic: 4, amplitude: 1.0, phase: 0.0 }]);
    let sim = simulate_full(&sh, &cfg).unwrap();
    for (z, z0) in sim.last()[0].iter().zip(&sim.snapshots[0][0]) {
        assert!((z - z0).norm() < 1e-10);
    }
}

#[test]
fn time_step_is_checked() {
    let sh = builtin("swift-hohenberg-linear").unwrap();
    let mut cfg = SimConfig::new(256, 2.0 * PI * 4.0);
    cfg.dt = 0.1;
    assert!(matches!(simulate_full(&sh, &cfg), Err(VerifyError::Cfl { .. })));
    let shear = builtin("shear-dispersion").unwrap();
    assert!(matches!(simulate_full(&shear, &SimConfig::new(32, 10.0)), Err(VerifyError::Unsupported(_))));
}

#[test]
fn finite_differences_agree_with_spectral() {
    let p = builtin("heat-exchanger-linear").unwrap();
    let mut cfg = SimConfig::new(256, 2.0 * PI / 0.1);
    cfg.tmax = 2.0;
    cfg.initial = InitialCondition::Modes(vec![Mode { field: 0, harmonic: 1, amplitude: 1.0, phase: 0.0 }]);
    let a = simulate_full(&p, &cfg).unwrap();
    cfg.scheme = Scheme::FiniteDifference;
    let b = simulate_full(&p, &cfg).unwrap();
    let err = a.last().iter().flatten().zip(b.last().iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn heat_exchanger_model_mode_growth() {
    let p = builtin("heat-exchanger-linear").unwrap();
    let rep = emit_model(&p, &reduce_nonlinear(&p, 4).unwrap()).unwrap();
    let k = 0.3;
    let mut cfg = SimConfig::new(32, 2.0 * PI / k);
    cfg.dt = 1e-3;
    cfg.tmax = 1.0;
    cfg.initial = InitialCondition::Modes(vec![Mode { field: 0, harmonic: 1, amplitude: 1.0, phase: 0.0 }]);
    let sim = simulate_model(&rep, &cfg).unwrap();
    let g = (-k * k - k.powi(4)).exp();
    for (z, z0) in sim.last()[0].iter().zip(&sim.snapshots[0][0]) {
        assert!((z - z0 * g).norm() < 1e-10);
    }
    let zero = simulate_model(&rep, &SimConfig::new(32, 100.0)).unwrap();
    assert!(zero.last()[0].iter().all(|z| z.norm() == 0.0));
}

#[test]
fn ginzburg_landau_constant_amplitude() {
    let p = builtin("swift-hohenberg-nonlinear").unwrap();
    let rep = emit_model(&p, &reduce_nonlinear(&p, 2).unwrap()).unwrap();
    let a = 0.5;
    let mut cfg = SimConfig::new(16, 10.0);
    cfg.values = Values::from([("r".to_string(), 0.0)]);
    cfg.tmax = 1.0;
    cfg.initial = InitialCondition::Fields(vec![vec![Complex64::new(a, 0.0); 16]; 2]);
    let sim = simulate_model(&rep, &cfg).unwrap();
    // ċ = −3c³
    let want = a / (1.0 + 6.0 * a * a * cfg.tmax).sqrt();
    for f in sim.last() {
        assert!(f.iter().all(|z| (z.re - want).abs() < 1e-8 && z.im.abs() < 1e-14));
    }
    cfg.values.clear();
    assert!(simulate_model(&rep, &cfg).is_err());
}

#[test]
fn emergence_rate_of_the_heat_exchanger() {
    for name in ["heat-exchanger-linear", "heat-exchanger-nonlinear"] {
        let p = builtin(name).unwrap();
        let (e, _) = emergence_experiment(&p, p.default_order, &emergence_config(1), (1.0, 5.0)).unwrap();
        let fit = e.fit.clone().unwrap();
        assert!(e.rate_in(0.8, 1.1), "{name}: rate {} r2 {}", fit.rate, fit.r2);
    }
}

#[test]
fn emergence_is_reproducible_for_a_seed() {
    let p = builtin("heat-exchanger-linear").unwrap();
    let a = emergence_experiment(&p, 4, &emergence_config(3), (1.0, 5.0)).unwrap().0;
    let b = emergence_experiment(&p, 4, &emergence_config(3), (1.0, 5.0)).unwrap().0;
    assert_eq!(a.distance, b.distance);
}

#[test]
fn on_manifold_data_stays_on_the_manifold() {
    let p = builtin("heat-exchanger-linear").unwrap();
    let map = ManifoldMap::new(&p, 4, &Values::new()).unwrap();
    let mut cfg = SimConfig::new(64, 2.0 * PI / 0.01);
    cfg.tmax = 5.0;
    let grid: Grid = cfg.grid().unwrap();
    let c: Field = (0..grid.points).map(|j| Complex64::new(0.05 * (0.01 * grid.x(j)).cos(), 0.0)).collect();
    cfg.initial = InitialCondition::Fields(map.lift(&grid, &[c]));
    let (e, _) = emergence_experiment(&p, 4, &cfg, (1.0, 5.0)).unwrap();
    assert!(e.distance.iter().all(|d| *d < 1e-10), "{:?}", e.distance);
}
