use nalgebra::DMatrix;
use num_complex::Complex64;
use ptwise::assembly::*;
use ptwise::ipm::{run_with_restarts, Classification, IpmOptions};
use ptwise::linalg::DenseLu;
use ptwise::pencil::MatrixPencil;
use ptwise::problems::{make_problem, Params};
use ptwise::subspace::{basis_series, taylor_jet, SubspaceKind};
use ptwise::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

type P = MatrixPencil<f64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn r(re: f64) -> Complex64 {
    c(re, 0.0)
}

fn column(base: Complex64, entries: &[&[f64]]) -> P {
    let coeffs = entries
        .iter()
        .map(|e| DMatrix::from_iterator(e.len(), 1, e.iter().map(|&x| r(x))))
        .collect();
    P::new(base, coeffs).unwrap()
}

fn det(m: &DMatrix<Complex64>) -> Complex64 {
    DenseLu::new(m).map_or(r(0.0), |lu| lu.det())
}

fn allen_cahn(l: f64, n: usize) -> ProblemSpec<f64> {
    make_problem(
        "allen_cahn_layer",
        &Params::from([("L".into(), l), ("n".into(), n as f64)]),
    )
    .unwrap()
}

fn allen_cahn_bases(spec: &ProblemSpec<f64>, anchor: Complex64, order: usize) -> (P, P) {
    let ju = taylor_jet(&spec.a_minus, anchor, 1, order, SubspaceKind::Unstable).unwrap();
    let js = taylor_jet(&spec.a_plus, anchor, 1, order, SubspaceKind::Stable).unwrap();
    (
        basis_series(&ju, order).unwrap(),
        basis_series(&js, order).unwrap(),
    )
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn square_root_example_determinant() {
    // Bases (1, γ - 1) and (1, 1 - γ) on the surface λ = -1 + γ².
    let uu = column(r(0.0), &[&[1.0, -1.0], &[0.0, 1.0]]);
    let us = column(r(0.0), &[&[1.0, 1.0], &[0.0, -1.0]]);
    let a = assemble_constant(&uu, &us).unwrap();
    for g in [r(0.0), r(1.0), c(0.3, -0.7), c(2.0, 1.0)] {
        let m = a.eval_dense(g);
        let expected = DMatrix::from_row_slice(2, 2, &[r(1.0), r(-1.0), g - 1.0, -(1.0 - g)]);
        assert!((&m - expected).norm() < 1e-15);
        assert!((det(&m) - 2.0 * (g - 1.0)).norm() < 1e-14);
    }
}

#[test]
fn transverse_constant_bases_are_invertible() {
    let a = assemble_constant(
        &column(r(0.0), &[&[1.0, 0.0]]),
        &column(r(0.0), &[&[0.0, 1.0]]),
    )
    .unwrap();
    let m = a.eval_dense(c(5.0, 3.0));
    assert_eq!(
        m,
        DMatrix::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r(-1.0)])
    );
    assert!(factor_zero_order(&a).is_ok());
}

#[test]
fn coupled_transport_bases_meet_at_zero() {
    let eps = 0.1;
    let a = assemble_constant(
        &column(r(0.0), &[&[1.0, 0.0]]),
        &column(r(0.0), &[&[eps, 0.0], &[0.0, 2.0]]),
    )
    .unwrap();
    for l in [c(0.5, 0.0), c(-0.2, 0.4)] {
        assert!((det(&a.eval_dense(l)) + 2.0 * l).norm() < 1e-15);
    }
    assert!(matches!(
        factor_zero_order(&a),
        Err(Error::SingularZeroOrder { .. })
    ));
}

#[test]
fn constant_assembly_rejects_bad_shapes() {
    let one = column(r(0.0), &[&[1.0, 0.0]]);
    let two = P::new(r(0.0), vec![DMatrix::identity(2, 2)]).unwrap();
    assert!(matches!(
        assemble_constant(&one, &two),
        Err(Error::DimensionMismatch(_))
    ));
    let moved = column(r(1.0), &[&[0.0, 1.0]]);
    assert!(assemble_constant(&one, &moved).is_err());
}

#[test]
fn bvp_dimension() {
    let spec = allen_cahn(5.0, 10);
    let (bu, bs) = allen_cahn_bases(&spec, r(-0.5), 4);
    let a = assemble_bvp(&spec, &bu, &bs).unwrap();
    assert_eq!(a.dim(), 24);
    assert_eq!(a.grid.len(), 11);
    assert!((a.grid[0] + 5.0).abs() < 1e-15 && (a.grid[10] - 5.0).abs() < 1e-14);
    let (left, right) = a.boundary_block_rows().unwrap();
    assert_eq!((left, right), (20..22, 22..24));
}

#[test]
fn bvp_rejects_bad_input() {
    let spec = allen_cahn(5.0, 10);
    let (bu, bs) = allen_cahn_bases(&spec, r(-0.5), 4);
    let wide = P::new(r(-0.5), vec![DMatrix::identity(2, 2)]).unwrap();
    assert!(matches!(
        assemble_bvp(&spec, &wide, &bs),
        Err(Error::DimensionMismatch(_))
    ));
    let mut flat = spec.clone();
    flat.half_length = 0.0;
    assert!(assemble_bvp(&flat, &bu, &bs).is_err());
    let constant = make_problem::<f64>("convection_diffusion", &Params::new()).unwrap();
    assert!(assemble_bvp(&constant, &bu, &bs).is_err());
}

#[test]
fn trapezoid_propagator_satisfies_interior_rows() {
    let a0 = DMatrix::from_row_slice(2, 2, &[r(0.3), r(1.0), r(-0.5), r(-0.2)]);
    let far = P::new(r(0.0), vec![a0.clone()]).unwrap();
    let interior_pencil = far.clone();
    let (l, n) = (2.0, 16);
    let spec = ProblemSpec::constant("propagator", far.clone(), far)
        .unwrap()
        .with_interior(Arc::new(move |_| interior_pencil.clone()), l, n);
    let bu = P::new(
        r(0.0),
        vec![DMatrix::from_column_slice(2, 1, &[r(1.0), r(0.0)])],
    )
    .unwrap();
    let bs = P::new(
        r(0.0),
        vec![DMatrix::from_column_slice(2, 1, &[r(0.0), r(1.0)])],
    )
    .unwrap();
    let a = assemble_bvp(&spec, &bu, &bs).unwrap();
    let h = spec.step();
    let id = DMatrix::<Complex64>::identity(2, 2);
    let step = (&id - &a0 * r(h / 2.0)).try_inverse().unwrap() * (&id + &a0 * r(h / 2.0));
    let mut u = DMatrix::from_column_slice(2, 1, &[c(0.4, 0.1), c(-1.0, 0.5)]);
    let mut x = Vec::new();
    for _ in 0..=n {
        x.extend(u.iter().copied());
        u = &step * u;
    }
    x.extend([r(0.0), r(0.0)]);
    let mut y = vec![r(0.0); a.dim()];
    a.apply_order_add(0, &x, &mut y);
    let interior = norm(&y[..2 * n]);
    assert!(interior < 1e-13 * norm(&x) / h, "{interior}");
}

#[test]
fn high_orders_live_in_the_boundary_corner() {
    let spec = allen_cahn(4.0, 12);
    let (bu, bs) = allen_cahn_bases(&spec, r(-0.5), 6);
    let a = assemble_bvp(&spec, &bu, &bs).unwrap();
    assert_eq!(a.interior_order(), 1);
    assert_eq!(a.order(), 6);
    let dense = a.to_dense();
    let n = a.dim();
    let (left, right) = a.boundary_block_rows().unwrap();
    let mut corner_nnz = 0;
    for l in 2..=a.order() {
        let m = &dense.coeffs()[l];
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] != r(0.0) {
                    let in_rows = left.contains(&i) || right.contains(&i);
                    assert!(in_rows && j >= n - 2, "order {l} entry ({i}, {j})");
                    corner_nnz += 1;
                }
            }
        }
    }
    assert!(corner_nnz > 0);
}

#[test]
fn bvp_apply_matches_dense() {
    let spec = allen_cahn(4.0, 12);
    let (bu, bs) = allen_cahn_bases(&spec, c(-0.5, 0.1), 5);
    let a = assemble_bvp(&spec, &bu, &bs).unwrap();
    let dense = a.to_dense();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random_vec(&mut rng, a.dim());
    let lam = c(-0.3, 0.2);
    let y = a.apply_eval(lam, &x);
    let yd = dense.eval(lam) * nalgebra::DVector::from_vec(x.clone());
    let diff: Vec<Complex64> = y.iter().zip(yd.iter()).map(|(p, q)| p - q).collect();
    assert!(norm(&diff) < 1e-12 * norm(&y));
}

#[test]
fn factor_identity() {
    let a: AssembledPencil<f64> = P::new(r(0.0), vec![DMatrix::identity(4, 4)])
        .unwrap()
        .into();
    let f = factor_zero_order(&a).unwrap();
    let b = vec![c(1.0, 2.0), c(-3.0, 0.5), r(0.0), c(0.0, 7.0)];
    assert_eq!(f.solve(&b), b);
}

#[test]
fn factor_random_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let n = 50;
    let m = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 10.0 } else { 0.0 };
        c(rng.gen_range(-1.0..1.0) + d, rng.gen_range(-1.0..1.0))
    });
    let a: AssembledPencil<f64> = P::new(r(0.0), vec![m.clone()]).unwrap().into();
    let f = factor_zero_order(&a).unwrap();
    let b = random_vec(&mut rng, n);
    let x = f.solve(&b);
    let res = &m * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(b.clone());
    assert!(res.norm() <= 1e-12 * norm(&b));
}

#[test]
fn factor_rank_deficient() {
    let mut m = DMatrix::from_fn(3, 3, |i, j| r((i * 3 + j) as f64 + 1.0));
    m[(2, 2)] = r(9.0);
    let a: AssembledPencil<f64> = P::new(r(0.0), vec![m]).unwrap().into();
    assert!(matches!(
        factor_zero_order(&a),
        Err(Error::SingularZeroOrder { .. })
    ));
}

#[test]
fn banded_solve_matches_dense() {
    let spec = allen_cahn(6.0, 60);
    let (bu, bs) = allen_cahn_bases(&spec, c(-0.7, 0.2), 3);
    let a = assemble_bvp(&spec, &bu, &bs).unwrap();
    let f = factor_zero_order(&a).unwrap();
    assert!(matches!(f, Factorization::Band { .. }));
    let i0 = a.to_dense().coeffs()[0].clone();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let b = random_vec(&mut rng, a.dim());
    let x = f.solve(&b);
    let xd = DenseLu::new(&i0)
        .unwrap()
        .solve(&nalgebra::DVector::from_vec(b.clone()));
    let diff: Vec<Complex64> = x.iter().zip(xd.iter()).map(|(p, q)| p - q).collect();
    assert!(norm(&diff) <= 1e-10 * norm(&x));
    let res = &i0 * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(b.clone());
    assert!(res.norm() <= 1e-10 * norm(&b));
}

#[test]
fn bvp_singular_at_eigenvalue() {
    // λ = 0 is an eigenvalue of the continuous problem; on the grid the
    // zero-order matrix at the discrete eigenvalue is nearly singular.
    let spec = allen_cahn(10.0, 400);
    let res = run_with_restarts(&spec, r(-0.5), &IpmOptions::default()).unwrap();
    let (bu, bs) = allen_cahn_bases(&spec, res.lambda, 2);
    let a = assemble_bvp(&spec, &bu, &bs).unwrap();
    match factor_zero_order(&a) {
        Err(Error::SingularZeroOrder { .. }) => {}
        Ok(f) => assert!(f.min_pivot_ratio() < 1e-8, "{}", f.min_pivot_ratio()),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn allen_cahn_pipeline_finds_zero() {
    let spec = allen_cahn(10.0, 400);
    let (bu, bs) = allen_cahn_bases(&spec, r(-0.5), 40);
    let a = assemble_bvp(&spec, &bu, &bs).unwrap();
    assert!(factor_zero_order(&a).is_ok());
    let res = run_with_restarts(&spec, r(-0.5), &IpmOptions::default()).unwrap();
    assert_eq!(res.classification, Classification::Eigenvalue);
    // second-order discretization error at h = 0.05
    assert!(res.lambda.norm() < 1e-3, "{}", res.lambda);
    assert!(res.lambda.im.abs() < 1e-10);
}
