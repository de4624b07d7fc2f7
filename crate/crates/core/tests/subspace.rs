use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use ptwise::linalg::{adjoint, fro_norm, identity, subspace_angle};
use ptwise::pencil::MatrixPencil;
use ptwise::subspace::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type P = MatrixPencil<f64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn r(re: f64) -> Complex64 {
    c(re, 0.0)
}

fn mat(n: usize, rows: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(n, n, &rows.iter().map(|&x| r(x)).collect::<Vec<_>>())
}

/// u' = A(λ)u for λw = w'' + 2w' + w.
fn convection_diffusion() -> P {
    P::new(
        r(0.0),
        vec![
            mat(2, &[0.0, 1.0, -1.0, -2.0]),
            mat(2, &[0.0, 0.0, 1.0, 0.0]),
        ],
    )
    .unwrap()
}

/// Companion pencil of λw = -(∂² + 1)² w.
fn swift_hohenberg() -> P {
    let mut a0 = DMatrix::zeros(4, 4);
    for i in 0..3 {
        a0[(i, i + 1)] = r(1.0);
    }
    a0[(3, 0)] = r(-1.0);
    a0[(3, 2)] = r(-2.0);
    let mut a1 = DMatrix::zeros(4, 4);
    a1[(3, 0)] = r(-1.0);
    P::new(r(0.0), vec![a0, a1]).unwrap()
}

fn allen_cahn_far_field() -> P {
    P::new(
        r(0.0),
        vec![mat(2, &[0.0, 1.0, 2.0, 0.0]), mat(2, &[0.0, 0.0, 1.0, 0.0])],
    )
    .unwrap()
}

fn col(v: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}

#[test]
fn sorted_schur_of_sorted_diagonal() {
    let s = sorted_schur(&mat(2, &[2.0, 0.0, 0.0, -1.0]), 1).unwrap();
    assert!(fro_norm(&(s.q.clone() - identity::<f64>(2))) < 1e-15);
    assert!(fro_norm(&(s.t.clone() - mat(2, &[2.0, 0.0, 0.0, -1.0]))) < 1e-15);
}

#[test]
fn sorted_schur_convection_diffusion_at_one() {
    let s = sorted_schur(&convection_diffusion().eval(r(1.0)), 1).unwrap();
    let ev = s.eigenvalues();
    assert!((ev[0] - r(0.0)).norm() < 1e-14 && (ev[1] - r(-2.0)).norm() < 1e-14);
}

#[test]
fn sorted_schur_allen_cahn_at_one() {
    let s = sorted_schur(&allen_cahn_far_field().eval(r(1.0)), 1).unwrap();
    let ev = s.eigenvalues();
    let s3 = 3f64.sqrt();
    assert!((ev[0] - r(s3)).norm() < 1e-14 && (ev[1] - r(-s3)).norm() < 1e-14);
}

#[test]
fn sorted_schur_rejects_missing_gap() {
    let err = sorted_schur(&mat(2, &[1.0, 1.0, 0.0, 1.0]), 1).unwrap_err();
    assert!(matches!(err, ptwise::error::Error::GapFailure { .. }));
}

#[test]
fn morse_indices() {
    assert_eq!(morse_index(&convection_diffusion(), r(10.0)).unwrap(), 1);
    assert_eq!(morse_index(&swift_hohenberg(), r(10.0)).unwrap(), 2);
    assert_eq!(
        morse_index(&P::constant(mat(2, &[1.0, 0.0, 0.0, -1.0])), r(0.0)).unwrap(),
        1
    );
}

#[test]
fn block_diagonal_pencil_has_flat_graph() {
    let p = P::new(
        r(0.0),
        vec![
            mat(2, &[1.0, 0.0, 0.0, -1.0]),
            mat(2, &[2.0, 0.0, 0.0, 0.5]),
        ],
    )
    .unwrap();
    let jet = taylor_jet(&p, r(0.0), 1, 6, SubspaceKind::Unstable).unwrap();
    assert!(jet.h.iter().all(|h| fro_norm(h) == 0.0));
}

#[test]
fn hand_solved_graph() {
    let p = P::new(
        r(0.0),
        vec![
            mat(2, &[1.0, 0.0, 0.0, -1.0]),
            mat(2, &[0.0, 0.0, 1.0, 0.0]),
        ],
    )
    .unwrap();
    let jet = taylor_jet(&p, r(0.0), 1, 5, SubspaceKind::Unstable).unwrap();
    assert!((jet.h[0][(0, 0)] * jet.q[(0, 0)] / jet.q[(1, 1)] - r(0.5)).norm() < 1e-15);
    assert!(jet.h[1..].iter().all(|h| fro_norm(h) < 1e-15));
}

#[test]
fn convection_diffusion_jet_residual() {
    let p = convection_diffusion();
    let jet = taylor_jet(&p, r(4.0), 1, 8, SubspaceKind::Unstable).unwrap();
    assert!(fro_norm(&jet.homological_residual(&p, r(4.1))) <= 1e-9);
}

#[test]
fn basis_series_without_graph_is_constant() {
    let p = P::constant(mat(3, &[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -2.0]));
    let jet = taylor_jet(&p, r(0.0), 1, 3, SubspaceKind::Unstable).unwrap();
    let b = basis_series(&jet, 3).unwrap();
    assert!(b.coeffs()[1..].iter().all(|m| fro_norm(m) == 0.0));
    assert!(subspace_angle(&b.coeffs()[0], &col(&[r(1.0), r(0.0), r(0.0)])) < 1e-15);
}

#[test]
fn basis_is_orthonormal_at_anchor() {
    let p = swift_hohenberg();
    let jet = taylor_jet(&p, c(1.0, 1.0), 2, 10, SubspaceKind::Stable).unwrap();
    let b = basis_series(&jet, 10).unwrap();
    let u = b.eval(c(1.0, 1.0));
    assert!(fro_norm(&(adjoint(&u) * &u - identity::<f64>(2))) < 1e-12);
}

#[test]
fn square_root_basis_on_riemann_surface() {
    // λ = -1 + γ² in u' = v, v' = -2v + λu; the unstable line is (1, -1 + γ).
    let a = P::new(
        r(0.0),
        vec![
            mat(2, &[0.0, 1.0, -1.0, -2.0]),
            mat(2, &[0.0, 0.0, 0.0, 0.0]),
            mat(2, &[0.0, 0.0, 1.0, 0.0]),
        ],
    )
    .unwrap();
    let jet = taylor_jet(&a, r(2.0), 1, 30, SubspaceKind::Unstable).unwrap();
    let b = basis_series(&jet, 30).unwrap();
    for g in [c(2.1, 0.0), c(1.9, 0.2), c(2.3, -0.3)] {
        let u = b.eval(g);
        let det = u[(0, 0)] * (g - 1.0) - u[(1, 0)];
        assert!(det.norm() < 1e-10, "γ = {g}: det {det}");
    }
}

#[test]
fn newton_fixed_point() {
    let a = mat(2, &[1.0, 0.3, 0.0, -1.0]);
    let u = col(&[r(1.0), r(0.0)]);
    let v = newton_refine(&P::constant(a), r(0.0), &u).unwrap();
    assert!(subspace_angle(&u, &v) < 1e-12);
}

#[test]
fn newton_converges_on_perturbed_diagonal() {
    let a = mat(2, &[1.0, 1e-3, 1e-3, -1.0]);
    let v = newton_refine(&P::constant(a.clone()), r(0.0), &col(&[r(1.0), r(0.0)])).unwrap();
    assert!(invariance_residual(&a, &v) <= 1e-12);
}

#[test]
fn allen_cahn_jet_prediction_refines() {
    let p = allen_cahn_far_field();
    let jet = taylor_jet(&p, r(-0.5), 1, 6, SubspaceKind::Unstable).unwrap();
    let pred = jet.basis_at(r(-0.3));
    let u = newton_refine(&p, r(-0.3), &pred).unwrap();
    assert!(invariance_residual(&p.eval(r(-0.3)), &u) <= 1e-12);
    let again = newton_refine(&p, r(-0.3), &u).unwrap();
    assert!(subspace_angle(&u, &again) <= 1e-12);
}

#[test]
fn continuation_to_same_point() {
    let p = convection_diffusion();
    let jet = taylor_jet(&p, r(4.0), 1, 6, SubspaceKind::Unstable).unwrap();
    let same = continue_subspace(&p, &jet, r(4.0), 0.5).unwrap();
    for (a, b) in jet.h.iter().zip(&same.h) {
        assert!(fro_norm(&(a - b)) < 1e-10);
    }
}

#[test]
fn continuation_of_constant_pencil() {
    let a = mat(3, &[1.0, 2.0, 0.0, 0.0, -1.0, 1.0, 0.5, 0.0, -3.0]);
    let p = P::constant(a);
    let jet = taylor_jet(&p, r(0.0), 1, 4, SubspaceKind::Unstable).unwrap();
    let moved = continue_subspace(&p, &jet, c(3.0, -2.0), -0.5).unwrap();
    assert!(subspace_angle(&jet.basis_at(jet.base), &moved.basis_at(moved.base)) < 1e-12);
}

#[test]
fn continuation_follows_analytic_branch() {
    let p = convection_diffusion();
    let jet = taylor_jet(&p, r(4.0), 1, 8, SubspaceKind::Unstable).unwrap();
    let out = continue_subspace(&p, &jet, r(0.25), 0.5).unwrap();
    let want = col(&[r(1.0), r(-0.5)]);
    assert!(subspace_angle(&out.basis_at(r(0.25)), &want) < 1e-12);
}

#[test]
fn continuation_around_branch_point_switches_sheet() {
    // Arcs above and below the branch point at 0 reach different roots.
    let p = convection_diffusion();
    let jet = taylor_jet(&p, r(1.0), 1, 8, SubspaceKind::Unstable).unwrap();
    let up = continue_subspace(&p, &jet, r(-1.0), 0.9).unwrap();
    let down = continue_subspace(&p, &jet, r(-1.0), -0.9).unwrap();
    // ν = -1 ± i at λ = -1
    let plus = col(&[r(1.0), c(-1.0, 1.0)]);
    let minus = col(&[r(1.0), c(-1.0, -1.0)]);
    let a = subspace_angle(&up.basis_at(r(-1.0)), &plus)
        .min(subspace_angle(&up.basis_at(r(-1.0)), &minus));
    assert!(a < 1e-10);
    assert!(subspace_angle(&up.basis_at(r(-1.0)), &down.basis_at(r(-1.0))) > 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn homological_residual_is_high_order(seed in 0u64..10_000, n in 2usize..6, m in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..3)
            .map(|l| {
                let s = if l == 0 { 1.0 } else { 0.3 };
                DMatrix::from_fn(n, n, |_, _| c(s * rng.gen_range(-1.0..1.0), s * rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let p = P::new(r(0.0), coeffs).unwrap();
        let k = rng.gen_range(1..n);
        let lambda0 = c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let jet = match taylor_jet(&p, lambda0, k, m, SubspaceKind::Unstable) {
            Ok(j) => j,
            Err(_) => return Ok(()),
        };
        for dir in 0..10 {
            let w = Complex64::from_polar(1.0, dir as f64 * 0.628);
            let r1 = fro_norm(&jet.homological_residual(&p, lambda0 + w * 1e-1)) / 1e-1f64.powi(m as i32 + 1);
            let r2 = fro_norm(&jet.homological_residual(&p, lambda0 + w * 1e-2)) / 1e-2f64.powi(m as i32 + 1);
            prop_assert!(r2 <= 10.0 * r1 + 1e-13 / 1e-2f64.powi(m as i32 + 1));
        }
    }

    #[test]
    fn stable_and_unstable_split_complement(seed in 0u64..10_000, n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let k = rng.gen_range(1..n);
        let s = sorted_schur(&a, k);
        if let Ok(s) = s {
            prop_assert!(fro_norm(&(adjoint(&s.q) * &s.q - identity::<f64>(n))) <= 1e-10 * n as f64);
            prop_assert!(fro_norm(&(&s.q * &s.t * adjoint(&s.q) - &a)) <= 1e-10 * n as f64 * fro_norm(&a));
            for i in 0..n - 1 {
                prop_assert!(s.t[(i, i)].re >= s.t[(i + 1, i + 1)].re - 1e-12);
            }
        }
    }
}
