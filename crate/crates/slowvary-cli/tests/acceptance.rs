//! One pass/fail line per acceptance criterion. Exits non-zero if any fail.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use slowvary::linreduce::{reduce_linear, render_matrix};
use slowvary::nlreduce::{emit_model, extract_taylor_compare, reduce_nonlinear, reduce_nonlinear_direct};
use slowvary::normform::{check_exact, separate};
use slowvary::problems::builtin;
use slowvary_algebra::{conv_int, ddt, parse_expr, rat, DependencyTable, Expr, Factor, Registry, Scalar, Symbol};
use slowvary_verify::dispersion::{dispersion_table, error_scaling_experiment};
use slowvary_verify::emergence::emergence_experiment;
use slowvary_verify::numeric::Values;
use slowvary_verify::sim::{InitialCondition, SimConfig};

const NORMAL_FORM_GOLDEN: &str = include_str!("../../slowvary/tests/fixtures/heat_exchanger_normal_form_4.txt");

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn same<T: PartialEq + std::fmt::Debug>(got: T, want: T, what: &str) -> Result<(), String> {
    ensure(got == want, || format!("{what}: got {got:?}, want {want:?}"))
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:?}, limit {limit:?}"))
}

fn coefficients(name: &str, order: u32) -> Result<Vec<String>, String> {
    let p = builtin(name).map_err(|e| e.to_string())?;
    Ok(reduce_linear(&p, order).map_err(|e| e.to_string())?.a.iter().map(render_matrix).collect())
}

fn c1_heat_exchanger() -> Result<String, String> {
    let t = Instant::now();
    same(coefficients("heat-exchanger-linear", 4)?, ["0", "0", "1", "0", "-1"].map(String::from).to_vec(), "A")?;
    within(t, Duration::from_secs(1))?;
    Ok("A0..A4 = 0, 0, 1, 0, -1".into())
}

fn c2_shear() -> Result<String, String> {
    let t = Instant::now();
    let p = builtin("shear-dispersion").map_err(|e| e.to_string())?;
    let red = reduce_linear(&p, 3).map_err(|e| e.to_string())?;
    let a: Vec<String> = red.a.iter().map(render_matrix).collect();
    same(a[1..].to_vec(), ["-Pe", "1 + 2/105*Pe^2", "4/17325*Pe^3"].map(String::from).to_vec(), "A1..A3")?;
    same(red.v[1][0].to_y_expr().to_string().as_str(), "-7/120*Pe + 1/4*Pe*y^2 - 1/8*Pe*y^4", "V1")?;
    same(
        red.v[2][0].to_y_expr().to_string().as_str(),
        "-29/201600*Pe^2 - 17/3360*Pe^2*y^2 + 17/960*Pe^2*y^4 - 7/480*Pe^2*y^6 + 3/896*Pe^2*y^8",
        "V2",
    )?;
    within(t, Duration::from_secs(5))?;
    Ok("A1 = -Pe, A2 = 1 + 2/105*Pe^2, A3 = 4/17325*Pe^3, V1 and V2 exact".into())
}

fn c3_swift_hohenberg_linear() -> Result<String, String> {
    let a = coefficients("swift-hohenberg-linear", 4)?;
    same(a[2..].to_vec(), ["diag(4, 4)", "diag(-4*i, 4*i)", "diag(-1, -1)"].map(String::from).to_vec(), "A2..A4")?;
    Ok("A2 = diag(4, 4), A3 = diag(-4i, 4i), A4 = -I".into())
}

fn c4_normal_form() -> Result<String, String> {
    let p = builtin("heat-exchanger-linear").map_err(|e| e.to_string())?;
    let nf = separate(&p, 4).map_err(|e| e.to_string())?;
    ensure(nf.to_text() == NORMAL_FORM_GOLDEN, || "transform differs from the golden fixture".into())?;
    check_exact(&nf, &p).map_err(|e| e.to_string())?;
    Ok(format!("fixture matches, residual zero after {} iterations", nf.iterations))
}

fn c5_nonlinear_heat_exchanger() -> Result<String, String> {
    let t = Instant::now();
    let p = builtin("heat-exchanger-nonlinear").map_err(|e| e.to_string())?;
    let direct = reduce_nonlinear_direct(&p, 2).map_err(|e| e.to_string())?;
    let rep = emit_model(&p, &direct).map_err(|e| e.to_string())?;
    same(rep.manifold_of("d2"), Some("-c0*c2 + 3*c0*Z[d2x;-1] - c1^2 + 3*Z[c2x;-1]"), "d2")?;
    same(rep.evolution_of("c0"), Some("-2*c0*c1 + 1/2*c0^3 + c2"), "c0_t")?;
    same(rep.coupling_of("c2"), Some("-3*c0*Z[c2x;-1] + 3*d2x"), "c2_t coupling")?;
    let generating = reduce_nonlinear(&p, 2).map_err(|e| e.to_string())?;
    let rep = emit_model(&p, &generating).map_err(|e| e.to_string())?;
    same(rep.evolution_of("c"), Some("-2*c*c_x + 1/2*c^3 + c_xx"), "c_t")?;
    ensure(rep.manifold_of("d").is_some_and(|d| d.contains("- c_xxx")), || "manifold lacks -c_xxx".into())?;
    for n in 2..=5 {
        let g = reduce_nonlinear(&p, n).map_err(|e| e.to_string())?;
        let d = reduce_nonlinear_direct(&p, n).map_err(|e| e.to_string())?;
        let diff = extract_taylor_compare(&p, &g, &d).map_err(|e| e.to_string())?;
        ensure(diff.is_empty(), || format!("N={n}: {diff:?}"))?;
    }
    within(t, Duration::from_secs(300))?;
    Ok(format!("direct and generating forms exact, Taylor compare empty for N = 2..5 ({:.1?})", t.elapsed()))
}

fn c6_swift_hohenberg_nonlinear() -> Result<String, String> {
    let p = builtin("swift-hohenberg-nonlinear").map_err(|e| e.to_string())?;
    let rep = emit_model(&p, &reduce_nonlinear(&p, 2).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    same(rep.equation("cp").as_deref(), Some("-3*cm*cp^2 + cp*r + 4*cp_xx - 12*i*u2x_p1 - 6*u2xx_p1"), "cp_t")?;
    same(rep.equation("cm").as_deref(), Some("cm*r - 3*cm^2*cp + 4*cm_xx + 12*i*u2x_m1 - 6*u2xx_m1"), "cm_t")?;
    let u = rep.manifold_of("u").unwrap_or_default();
    for h in ["(-1/64*cp^3)*cis(3*y)", "(-1/64*cm^3)*cis(-3*y)"] {
        ensure(u.contains(h), || format!("manifold lacks {h}"))?;
    }
    Ok("envelope equations and third harmonics exact".into())
}

fn c7_error_scaling() -> Result<String, String> {
    let t = Instant::now();
    let p = builtin("heat-exchanger-linear").map_err(|e| e.to_string())?;
    let mut slopes = Vec::new();
    for (order, want) in [(4, 6.0), (2, 4.0)] {
        let s = error_scaling_experiment(&p, order, 0.02, 0.1, 8, &Values::new()).map_err(|e| e.to_string())?;
        let m = s.slope.ok_or("no slope")?;
        ensure((m - want).abs() <= 0.3, || format!("N={order}: slope {m}"))?;
        slopes.push(format!("N={order}: {m:.3}"));
    }
    within(t, Duration::from_secs(10))?;
    Ok(format!("slopes {}", slopes.join(", ")))
}

fn c8_emergence() -> Result<String, String> {
    let t = Instant::now();
    let mut rates = Vec::new();
    for name in ["heat-exchanger-linear", "heat-exchanger-nonlinear"] {
        let p = builtin(name).map_err(|e| e.to_string())?;
        let m = 256;
        let mut cfg = SimConfig::new(m, 2.0 * PI * (m / 8) as f64 / 0.1);
        cfg.tmax = 5.0;
        for seed in [1, 2, 3] {
            cfg.initial = InitialCondition::Random { seed, amplitude: 0.05, max_harmonic: m / 8 };
            let (e, _) = emergence_experiment(&p, p.default_order, &cfg, (1.0, 5.0)).map_err(|e| e.to_string())?;
            let fit = e.fit.clone().ok_or("no fit")?;
            ensure(e.rate_in(0.8, 1.1), || format!("{name} seed {seed}: rate {} R^2 {}", fit.rate, fit.r2))?;
            rates.push(fit.rate);
        }
    }
    within(t, Duration::from_secs(60))?;
    let (lo, hi) = rates.iter().fold((f64::MAX, f64::MIN), |(a, b), r| (a.min(*r), b.max(*r)));
    Ok(format!("rates in [{lo:.4}, {hi:.4}] over 6 runs"))
}

fn c9_dispersion_identity() -> Result<String, String> {
    let p = builtin("swift-hohenberg-linear").map_err(|e| e.to_string())?;
    let d = dispersion_table(&p, 4, -0.3, 0.3, 121, &Values::new()).map_err(|e| e.to_string())?;
    ensure(d.max_err < 1e-12, || format!("max error {:e}", d.max_err))?;
    Ok(format!("max |error| {:.1e}", d.max_err))
}

/// Values of `e` at `t` with `w(s) = input(s)`, atoms by trapezoid quadrature against
/// the exactly integrated kernel, Richardson-extrapolated.
fn quadrature(e: &Expr, t: f64, input: &dyn Fn(f64) -> f64) -> f64 {
    fn grid(e: &Expr, h: f64, n: usize, input: &dyn Fn(f64) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; n + 1];
        for (m, c) in e.terms() {
            let mut v = vec![c.to_f64_pair().0; n + 1];
            for (f, p) in m.factors() {
                let fv: Vec<f64> = match f {
                    Factor::Sym(_) => (0..=n).map(|k| input(k as f64 * h)).collect(),
                    Factor::Atom(a) => {
                        let inner = grid(&Expr::term(a.content().clone(), Scalar::one()), h, n, input);
                        let decay = (Scalar::real(a.rate().clone()).to_f64_pair().0 * h).exp();
                        let mut z = vec![0.0; n + 1];
                        for k in 1..=n {
                            z[k] = decay * z[k - 1] + 0.5 * h * (decay * inner[k - 1] + inner[k]);
                        }
                        z
                    }
                };
                v.iter_mut().zip(&fv).for_each(|(a, b)| *a *= b.powi(p as i32));
            }
            out.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
        }
        out
    }
    let n = 4000;
    let coarse = grid(e, t / n as f64, n, input)[n];
    let fine = grid(e, t / (2 * n) as f64, 2 * n, input)[2 * n];
    (4.0 * fine - coarse) / 3.0
}

fn c10_algebra_properties() -> Result<String, String> {
    let mut reg = Registry::new();
    reg.slow("eps", 1);
    reg.slow("xi", 1);
    reg.coupling("w");
    let parse = |s: &str| parse_expr(s, &reg).map_err(|e| e.to_string());
    let samples = [
        "3/2*c0*Z[w;-1] - i*c1^2",
        "eps*xi^2*Z[Z[w;-2];-1] + 5*w",
        "-c0*c1*Z[w*Z[w;-1];-3] + 7/3",
        "(1 + 2*i)*eps^3*c0 - xi*Z[Z[w;-1];-1]",
    ];
    let mut deps = DependencyTable::new();
    deps.rule(Symbol::slow("c0"), Expr::slow("g0"));
    deps.rule(Symbol::slow("c1"), Expr::slow("g1"));
    deps.constant(Symbol::slow("eps")).constant(Symbol::slow("xi"));
    for s in samples {
        let e = parse(s)?;
        // round trip
        let back = parse(&e.to_string())?;
        same(&back, &e, "round trip")?;
        // d/dt z(f;μ) = f + μ z(f;μ) plus the derivative of the slow factors
        for mu in [-1i64, -2] {
            let z = slowvary_algebra::conv(&e, &rat(mu, 1)).map_err(|e| e.to_string())?;
            let lhs = ddt(&z, &deps).map_err(|e| e.to_string())?;
            let mut rhs = &e + &z.scale(&Scalar::from(mu));
            for (m, c) in e.terms() {
                let (slow, fast) = m.split_fast();
                let zf = slowvary_algebra::conv(&Expr::term(fast, c.clone()), &rat(mu, 1)).map_err(|e| e.to_string())?;
                rhs = &rhs + &(&ddt(&Expr::term(slow, Scalar::one()), &deps).map_err(|e| e.to_string())? * &zf);
            }
            same(&lhs, &rhs, "convolution derivative")?;
        }
        // truncation is an ideal
        for bound in 1..5 {
            let ring = reg.ring(bound);
            for s2 in samples {
                let b = parse(s2)?;
                same(ring.truncate(&(&e * &b)), ring.truncate(&(&ring.truncate(&e) * &ring.truncate(&b))), "truncation")?;
            }
        }
    }
    // numeric: convolution derivative and nested-rate rewrite by quadrature
    let w = Expr::coupling("w");
    let z = conv_int(&w, -1).map_err(|e| e.to_string())?;
    let h = 1e-3;
    for t in [0.5f64, 2.5] {
        let dz = (quadrature(&z, t + h, &f64::sin) - quadrature(&z, t - h, &f64::sin)) / (2.0 * h);
        let rhs = t.sin() - quadrature(&z, t, &f64::sin);
        ensure((dz - rhs).abs() < 1e-6, || format!("t={t}: {dz} vs {rhs}"))?;
    }
    let nested = conv_int(&conv_int(&w, -2).map_err(|e| e.to_string())?, -1).map_err(|e| e.to_string())?;
    let input = |s: f64| (-s / 3.0).exp();
    for t in [0.7f64, 5.0] {
        let zmu = |mu: f64| ((-t / 3.0).exp() - (mu * t).exp()) / (-1.0 / 3.0 - mu);
        let exact = zmu(-1.0) - zmu(-2.0);
        let got = quadrature(&nested, t, &input);
        ensure((exact - got).abs() < 1e-8, || format!("nested t={t}: {got} vs {exact}"))?;
    }
    Ok("round trip, convolution identity, truncation ideal, quadrature checks".into())
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 10] = [
        ("linear heat exchanger N=4", c1_heat_exchanger),
        ("shear dispersion N=3", c2_shear),
        ("linear Swift-Hohenberg N=4", c3_swift_hohenberg_linear),
        ("heat exchanger normal form N=4", c4_normal_form),
        ("nonlinear heat exchanger", c5_nonlinear_heat_exchanger),
        ("nonlinear Swift-Hohenberg N=2", c6_swift_hohenberg_nonlinear),
        ("error scaling", c7_error_scaling),
        ("emergence", c8_emergence),
        ("Swift-Hohenberg dispersion identity", c9_dispersion_identity),
        ("algebra properties", c10_algebra_properties),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let t = Instant::now();
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{:.2?}]", i + 1, t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{:.2?}]", i + 1, t.elapsed());
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
