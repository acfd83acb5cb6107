use slowvary::nlreduce::{
    at_unit_eps, emit_model, extract_taylor_compare, reduce_nonlinear, reduce_nonlinear_direct, Method,
};
use slowvary::problems::builtin;
use slowvary::Error;
use slowvary_algebra::{Expr, Symbol};

const ZD: &str = "Z[d2x;-1]";
const ZZD: &str = "Z[Z[d2x;-1];-1]";
const ZC: &str = "Z[c2x;-1]";
const ZZC: &str = "Z[Z[c2x;-1];-1]";

fn expand(s: &str) -> String {
    s.replace("ZZD", ZZD).replace("ZZC", ZZC).replace("ZD", ZD).replace("ZC", ZC)
}

#[test]
fn heat_exchanger_direct_coefficients() {
    let p = builtin("heat-exchanger-nonlinear").unwrap();
    let sm = reduce_nonlinear_direct(&p, 2).unwrap();
    assert_eq!(sm.method, Method::Direct);
    let rep = emit_model(&p, &sm).unwrap();
    let manifold = [
        ("c0", "c0"),
        ("c1", "c1"),
        ("c2", "c2"),
        (
            "d0",
            "3*c0*c2 - 9*c0*ZD - 9*c0*ZZD - 1/2*c0^2 - 3*c0^2*c1 + 3/8*c0^4 + c1 + 3/2*c1^2 - 3*ZZC",
        ),
        ("d1", "-c0*c1 + 6*c0*ZZC + c2 - 3*ZD"),
        ("d2", "-c0*c2 + 3*c0*ZD - c1^2 + 3*ZC"),
    ];
    for (k, v) in manifold {
        assert_eq!(rep.manifold_of(k), Some(expand(v).as_str()), "{k}");
    }
    let evolution = [
        ("c0", "-2*c0*c1 + 1/2*c0^3 + c2", "9*c0*ZZC - 3*ZD"),
        ("c1", "-2*c0*c2 + 3/2*c0^2*c1 - 2*c1^2", "6*c0*ZD + 3*ZC"),
        ("c2", "0", "-3*c0*ZC + 3*d2x"),
    ];
    for (k, auto, coupling) in evolution {
        assert_eq!(rep.evolution_of(k), Some(auto), "{k}");
        assert_eq!(rep.coupling_of(k), Some(expand(coupling).as_str()), "{k}");
    }
}

#[test]
fn heat_exchanger_generating_polynomials() {
    let p = builtin("heat-exchanger-nonlinear").unwrap();
    let sm = reduce_nonlinear(&p, 2).unwrap();
    assert_eq!(sm.bound, 5);
    let d = at_unit_eps(&sm.field[0].get(1));
    let want = "3*c*c_xi2 + 6*c*xi*ZZC + 3/2*c*xi^2*ZD - 9*c*ZD - 9*c*ZZD - 1/2*c^2 - 3*c^2*c_xi \
                + 3/8*c^4 + c_xi + 3/2*c_xi^2 - c_xi3 - 3*xi*ZD + 3/2*xi^2*ZC - 3*ZZC";
    assert_eq!(d.to_string(), expand(want));
    let g = at_unit_eps(&sm.evolution[0][0]);
    let want = "-2*c*c_xi + 6*c*xi*ZD - 3/2*c*xi^2*ZC + 9*c*ZZC + 1/2*c^3 + c_xi2 + 3/2*d2x*xi^2 \
                + 3*xi*ZC - 3*ZD";
    assert_eq!(g.to_string(), expand(want));

    let rep = emit_model(&p, &sm).unwrap();
    assert_eq!(rep.evolution_of("c"), Some("-2*c*c_x + 1/2*c^3 + c_xx"));
    assert_eq!(rep.coupling_of("c"), Some(expand("9*c*ZZC - 3*ZD").as_str()));
    assert_eq!(rep.coefficient("A2"), Some("1"));
    assert!(rep.manifold_of("d").unwrap().contains("- c_xxx"));
}

#[test]
fn generating_and_direct_agree_through_taylor_coefficients() {
    let p = builtin("heat-exchanger-nonlinear").unwrap();
    for n in 2..=4 {
        let g = reduce_nonlinear(&p, n).unwrap();
        let d = reduce_nonlinear_direct(&p, n).unwrap();
        assert_eq!(extract_taylor_compare(&p, &g, &d).unwrap(), Vec::<String>::new(), "N={n}");
    }
}

#[test]
fn taylor_compare_flags_a_corrupted_term() {
    let p = builtin("heat-exchanger-nonlinear").unwrap();
    let mut g = reduce_nonlinear(&p, 2).unwrap();
    let d = reduce_nonlinear_direct(&p, 2).unwrap();
    let bad = Expr::sym(&Symbol::slow("xi")).pow(2);
    g.evolution[0][0].add_assign(&bad);
    let diff = extract_taylor_compare(&p, &g, &d).unwrap();
    assert_eq!(diff.len(), 1, "{diff:?}");
    assert!(extract_taylor_compare(&p, &d, &g).is_err());
}

#[test]
fn swift_hohenberg_envelope() {
    let p = builtin("swift-hohenberg-nonlinear").unwrap();
    let sm = reduce_nonlinear(&p, 2).unwrap();
    let rep = emit_model(&p, &sm).unwrap();
    assert_eq!(rep.evolution_of("cp"), Some("-3*cm*cp^2 + cp*r + 4*cp_xx"));
    assert_eq!(rep.evolution_of("cm"), Some("cm*r - 3*cm^2*cp + 4*cm_xx"));
    assert_eq!(rep.coupling_of("cp"), Some("-12*i*u2x_p1 - 6*u2xx_p1"));
    assert_eq!(rep.coupling_of("cm"), Some("12*i*u2x_m1 - 6*u2xx_m1"));
    let u = rep.manifold_of("u").unwrap();
    assert!(u.contains("(-1/64*cp^3)*cis(3*y)"), "{u}");
    assert!(u.contains("(-1/64*cm^3)*cis(-3*y)"), "{u}");
}

#[test]
fn linear_problem_through_generating_method() {
    let p = builtin("heat-exchanger-linear").unwrap();
    let sm = reduce_nonlinear(&p, 4).unwrap();
    let rep = emit_model(&p, &sm).unwrap();
    assert_eq!(rep.evolution_of("c"), Some("c_xx - c_xxxx"));
    for (n, a) in ["0", "0", "1", "0", "-1"].iter().enumerate() {
        assert_eq!(rep.coefficient(&format!("A{n}")), Some(*a));
    }
}

#[test]
fn unsupported_problems_are_rejected() {
    let shear = builtin("shear-dispersion").unwrap();
    assert!(matches!(reduce_nonlinear(&shear, 2), Err(Error::VariantMismatch(_) | Error::Unsolvable(_))));
    let sh = builtin("swift-hohenberg-nonlinear").unwrap();
    assert!(matches!(reduce_nonlinear_direct(&sh, 2), Err(Error::VariantMismatch(_))));
}
