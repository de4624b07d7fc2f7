use nalgebra::DMatrix;
use num_complex::Complex64;
use ptwise::linalg::DenseLu;
use ptwise::problems::*;
use ptwise::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn det(m: &DMatrix<Complex64>) -> Complex64 {
    DenseLu::new(m).map_or(c(0.0, 0.0), |lu| lu.det())
}

const SCALAR_MODELS: &[&str] = &[
    "convection_diffusion",
    "swift_hohenberg",
    "cahn_hilliard",
    "kdv",
    "beam",
    "efkpp",
];

#[test]
fn companion_form_matches_dispersion_relation() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for name in SCALAR_MODELS {
        let model = scalar_model(name, &Params::new()).unwrap();
        let a = model.pencil::<f64>();
        let n = model.order();
        let top = model.p[n];
        for _ in 0..20 {
            let lam = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let nu = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let m = a.eval(lam) - DMatrix::identity(n, n) * nu;
            // det(A - ν) = (-1)^N d(λ, ν) / p_N
            let expected = model.dispersion(lam, nu) / top * if n % 2 == 0 { 1.0 } else { -1.0 };
            let got = det(&m);
            assert!(
                (got - expected).norm() <= 1e-12 * (1.0 + expected.norm()),
                "{name}: {got} vs {expected}"
            );
        }
    }
}

#[test]
fn dispersion_vanishes_at_reported_double_roots() {
    let cd = scalar_model("convection_diffusion", &Params::new()).unwrap();
    assert_eq!(cd.dispersion(c(0.0, 0.0), c(-1.0, 0.0)), c(0.0, 0.0));
    let sh = scalar_model("swift_hohenberg", &Params::new()).unwrap();
    assert!(sh.dispersion(c(0.0, 0.0), c(0.0, 1.0)).norm() < 1e-15);
    let kdv = scalar_model("kdv", &Params::new()).unwrap();
    let nu = c(0.3, -0.2);
    assert!((kdv.dispersion(c(0.0, 0.0), nu) - nu.powu(3)).norm() < 1e-15);
}

#[test]
fn far_field_limits_match_interior() {
    for (name, params, bound) in [
        (
            "allen_cahn_layer",
            Params::from([("L".into(), 10.0)]),
            12.0 * (-2f64.sqrt() * 10.0).exp(),
        ),
        (
            "sech_well",
            Params::from([("L".into(), 10.0)]),
            0.4 * (-20f64).exp(),
        ),
    ] {
        let spec = make_problem::<f64>(name, &params).unwrap();
        let interior = spec.interior.as_ref().unwrap();
        let l = spec.half_length;
        for (x, far) in [(-l, &spec.a_minus), (l, &spec.a_plus)] {
            let near = interior(x);
            let gap = (0..=near.order().max(far.order()))
                .map(|i| match (near.coeff(i), far.coeff(i)) {
                    (Some(p), Some(q)) => (p - q).norm(),
                    (Some(p), None) | (None, Some(p)) => p.norm(),
                    _ => 0.0,
                })
                .fold(0.0, f64::max);
            assert!(gap <= bound, "{name} at {x}: {gap} > {bound}");
        }
    }
}

#[test]
fn catalog_builds_with_defaults() {
    for name in CATALOG {
        let spec = make_problem::<f64>(name, &Params::new()).unwrap();
        assert!(spec.n_phase >= 2, "{name}");
        assert!(
            !references(name, &Params::new()).unwrap().is_empty() || *name == "coupled_transport"
        );
    }
}

#[test]
fn allen_cahn_references() {
    let refs = references("allen_cahn_layer", &Params::new()).unwrap();
    let values: Vec<(&str, f64)> = refs.iter().map(|r| (r.quantity, r.value.re)).collect();
    assert_eq!(
        values,
        vec![
            ("eigenvalue", 0.0),
            ("eigenvalue", -1.5),
            ("branch_point", -2.0)
        ]
    );
    assert!(refs.iter().all(|r| r.provenance == Provenance::Reported));
}

#[test]
fn sech_resonance_reference() {
    let refs = references("sech_well", &Params::from([("F0".into(), -0.1)])).unwrap();
    let g = refs[0].value.re;
    assert!((g - (-1.0 + 0.6f64.sqrt()) / 2.0).abs() < 1e-15);
    assert!((g + 0.1127).abs() < 1e-4);
    assert_eq!(refs[0].provenance, Provenance::Derived);
}

#[test]
fn cahn_hilliard_closed_form() {
    assert!((cahn_hilliard_frequency() - 1.2419785824).abs() < 1e-9);
    // d(iω, ν) = -ν⁴ - ν² + cν - iω has a double root: some critical point
    // of ν ↦ d, i.e. a root of -4ν³ - 2ν + c, is also a root of d.
    let model = scalar_model("cahn_hilliard", &Params::new()).unwrap();
    let speed = cahn_hilliard_speed();
    let crit = DMatrix::from_row_slice(
        3,
        3,
        &[
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(speed / 4.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(-0.5, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
        ],
    );
    let lam = c(0.0, cahn_hilliard_frequency());
    let best = crit
        .schur()
        .eigenvalues()
        .unwrap()
        .iter()
        .map(|&nu| model.dispersion(lam, nu).norm())
        .fold(f64::INFINITY, f64::min);
    assert!(best < 1e-10, "{best}");
}

#[test]
fn efkpp_speed_limits() {
    assert!((efkpp_speed(1e-4) - 2.0).abs() < 1e-6);
    for eps in [0.05, 0.1, 0.2, 0.28] {
        // envelope speed (1 + η² - ε²η⁴) / η at its local minimum
        let speed = |eta: f64| (1.0 + eta * eta - eps * eps * eta.powi(4)) / eta;
        let (mut lo, mut hi) = (0.2, 1.0 / (6f64.sqrt() * eps));
        for _ in 0..200 {
            let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
            if speed(m1) < speed(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        assert!(
            (efkpp_speed(eps) - speed(lo)).abs() < 1e-9,
            "{eps}: {} vs {}",
            efkpp_speed(eps),
            speed(lo)
        );
    }
}

#[test]
fn strip_ground_state_is_discrete_eigenvalue() {
    for ny in [10, 40] {
        let k = dirichlet_laplacian::<f64>(ny);
        let ev = k.clone().schur().eigenvalues().unwrap();
        let low = ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        assert!((low - discrete_ground_state(ny)).abs() < 1e-10, "{low}");
    }
    assert!((discrete_ground_state(300) - 0.25).abs() < 1e-6);
}

#[test]
fn speed_pencil_is_comoving_model_at_rest() {
    let params = Params::from([("eps".into(), 0.1)]);
    let model = scalar_model("efkpp", &params).unwrap();
    let pc = spreading_speed_pencil::<f64>("efkpp", &params).unwrap();
    for speed in [0.5, 2.0, 3.3] {
        let direct = model.comoving(speed).pencil::<f64>().eval(c(0.0, 0.0));
        assert!((pc.eval(c(speed, 0.0)) - direct).norm() < 1e-14);
    }
}

#[test]
fn unknown_names_and_parameters() {
    assert!(matches!(
        make_problem::<f64>("nope", &Params::new()),
        Err(Error::UnknownProblem(_))
    ));
    assert!(matches!(
        references("nope", &Params::new()),
        Err(Error::UnknownProblem(_))
    ));
    assert!(matches!(
        spreading_speed_pencil::<f64>("allen_cahn_layer", &Params::new()),
        Err(Error::UnknownProblem(_))
    ));
    let bad = Params::from([("eps".into(), 0.1)]);
    assert!(matches!(
        make_problem::<f64>("kdv", &bad),
        Err(Error::InvalidArgument(_))
    ));
    let frac = Params::from([("n".into(), 10.5)]);
    assert!(make_problem::<f64>("allen_cahn_layer", &frac).is_err());
}
