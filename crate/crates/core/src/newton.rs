//! Newton's method for branch points: `(λ, ν)` where `det(A(λ) - ν)` has a
//! double root in `ν`, characterized by a Jordan chain `u, v`.

use crate::error::{Error, Result};
use crate::linalg::SortOrder;
use crate::linalg::{adjoint, closest_pair, dot_h, fro_norm, identity, schur, vec_norm, DenseLu};
use crate::pencil::MatrixPencil;
use crate::scalar::{CMat, CVec, Real, C};
use crate::subspace::{morse_index, sorted_schur_by};
use num_traits::{One, Zero};

#[derive(Clone, Debug)]
pub struct BranchPoint<T: Real> {
    pub lambda: C<T>,
    pub nu: C<T>,
    /// Eigenvector, `e0^H u = 1`.
    pub u: CVec<T>,
    /// Generalized eigenvector, `(A - ν) v = u`, `e0^H v = 0`.
    pub v: CVec<T>,
    pub e0: CVec<T>,
    /// Norm of the Newton residual at the returned point.
    pub residual: T,
    pub steps: usize,
}

pub const DEFAULT_MAX_STEPS: usize = 30;
const MAX_HALVINGS: usize = 8;
const SINGULAR_CONDITION: f64 = 1e12;

/// Newton solve started from `lambda_guess`, with `ν`, `u` taken from the
/// closest pair of directions in the unstable and stable subspaces of
/// `A(lambda_guess)`.
pub fn branch_point_newton<T: Real>(
    a: &MatrixPencil<T>,
    lambda_guess: C<T>,
    max_steps: usize,
) -> Result<BranchPoint<T>> {
    let (nu, u) = intersection_guess(a, lambda_guess)?;
    branch_point_newton_from(a, lambda_guess, nu, Some(u), max_steps)
}

/// Newton solve with an explicit spatial-root guess `nu_guess`. Without
/// `u_guess` the eigenvector guess is the smallest right singular vector
/// of `A(λ) - ν`.
pub fn branch_point_newton_from<T: Real>(
    a: &MatrixPencil<T>,
    lambda_guess: C<T>,
    nu_guess: C<T>,
    u_guess: Option<CVec<T>>,
    max_steps: usize,
) -> Result<BranchPoint<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(
            "branch points need a square pencil".into(),
        ));
    }
    let m0 = a.eval(lambda_guess) - identity::<T>(n) * nu_guess;
    let e0 = smallest_right_singular_vector(&m0)?;
    let mut u = u_guess.unwrap_or_else(|| e0.clone());
    let s = dot_h(e0.as_slice(), u.as_slice()).conj();
    if s.norm() < T::lit(1e-8) {
        u = e0.clone();
    } else {
        u /= s;
    }
    // v from the bordered system [[A - ν, e0], [e0^H, 0]] [v; t] = [u; 0]
    let mut border = CMat::zeros(n + 1, n + 1);
    border.view_mut((0, 0), (n, n)).copy_from(&m0);
    for i in 0..n {
        border[(i, n)] = e0[i];
        border[(n, i)] = e0[i].conj();
    }
    let mut rhs: Vec<C<T>> = u.iter().copied().collect();
    rhs.push(C::zero());
    let v = match DenseLu::new(&border) {
        Some(lu) => {
            lu.solve_in_place(&mut rhs);
            CVec::from_iterator(n, rhs[..n].iter().copied())
        }
        None => CVec::zeros(n),
    };

    let mut z = pack(&u, &v, lambda_guess, nu_guess);
    let scale = T::one() + fro_norm(&a.eval(lambda_guess));
    let mut f = residual(a, &e0, &z);
    let mut fnorm = vec_norm(&f);
    let tol = T::lit(1e-13) * scale;
    let mut trail: Vec<(T, T)> = Vec::new();
    for step in 0..=max_steps {
        if fnorm <= tol {
            return Ok(finish(&z, e0, fnorm, step));
        }
        if step == max_steps {
            break;
        }
        let jac = jacobian(a, &e0, &z);
        let lu = DenseLu::new(&jac).ok_or(Error::SingularJacobian {
            condition: f64::INFINITY,
        })?;
        let cond = fro_norm(&jac) * fro_norm(&lu.inverse());
        if !(cond.as_f64() <= SINGULAR_CONDITION) {
            return Err(Error::SingularJacobian {
                condition: cond.as_f64(),
            });
        }
        let delta = lu.solve(&f);
        trail.push((cond, vec_norm(&delta)));
        if converging_linearly(&trail) {
            return Err(Error::SingularJacobian {
                condition: cond.as_f64(),
            });
        }
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = &z - &delta * C::new(t, T::zero());
            let ft = residual(a, &e0, &trial);
            let nt = vec_norm(&ft);
            if nt < fnorm {
                z = trial;
                f = ft;
                fnorm = nt;
                accepted = true;
                break;
            }
            t *= T::lit(0.5);
        }
        if !accepted {
            // Stagnation at roundoff level counts as convergence.
            if fnorm <= T::lit(1e-10) * scale {
                return Ok(finish(&z, e0, fnorm, step));
            }
            break;
        }
    }
    Err(Error::NoConvergence {
        what: "branch-point Newton",
        steps: max_steps,
        residual: fnorm.as_f64(),
    })
}

/// Newton steps that shrink only linearly while the Jacobian condition
/// grows geometrically indicate a root where the Jacobian is singular
/// (a higher-order root); the residual then reaches roundoff long before
/// the condition number itself becomes large.
fn converging_linearly<T: Real>(trail: &[(T, T)]) -> bool {
    const WINDOW: usize = 5;
    if trail.len() < WINDOW + 1 {
        return false;
    }
    trail[trail.len() - WINDOW - 1..].windows(2).all(|w| {
        let step_ratio = w[1].1 / w[0].1;
        let cond_ratio = w[1].0 / w[0].0;
        step_ratio > T::lit(0.2) && step_ratio < T::lit(0.9) && cond_ratio > T::lit(1.2)
    })
}

fn finish<T: Real>(z: &CVec<T>, e0: CVec<T>, residual: T, steps: usize) -> BranchPoint<T> {
    let n = (z.len() - 2) / 2;
    BranchPoint {
        u: z.rows(0, n).into_owned(),
        v: z.rows(n, n).into_owned(),
        lambda: z[2 * n],
        nu: z[2 * n + 1],
        e0,
        residual,
        steps,
    }
}

fn pack<T: Real>(u: &CVec<T>, v: &CVec<T>, lambda: C<T>, nu: C<T>) -> CVec<T> {
    let n = u.len();
    let mut z = CVec::zeros(2 * n + 2);
    z.rows_mut(0, n).copy_from(u);
    z.rows_mut(n, n).copy_from(v);
    z[2 * n] = lambda;
    z[2 * n + 1] = nu;
    z
}

fn residual<T: Real>(a: &MatrixPencil<T>, e0: &CVec<T>, z: &CVec<T>) -> CVec<T> {
    let n = e0.len();
    let u = z.rows(0, n);
    let v = z.rows(n, n);
    let (lambda, nu) = (z[2 * n], z[2 * n + 1]);
    let am = a.eval(lambda);
    let mut f = CVec::zeros(2 * n + 2);
    f.rows_mut(0, n).copy_from(&(&am * u - u * nu));
    f.rows_mut(n, n).copy_from(&(&am * v - v * nu - u));
    f[2 * n] = hdot(e0, u.iter()) - C::one();
    f[2 * n + 1] = hdot(e0, v.iter());
    f
}

fn jacobian<T: Real>(a: &MatrixPencil<T>, e0: &CVec<T>, z: &CVec<T>) -> CMat<T> {
    let n = e0.len();
    let u = z.rows(0, n).into_owned();
    let v = z.rows(n, n).into_owned();
    let (lambda, nu) = (z[2 * n], z[2 * n + 1]);
    let shifted = a.eval(lambda) - identity::<T>(n) * nu;
    let da = a.eval_derivative(lambda);
    let mut j = CMat::zeros(2 * n + 2, 2 * n + 2);
    j.view_mut((0, 0), (n, n)).copy_from(&shifted);
    j.view_mut((n, n), (n, n)).copy_from(&shifted);
    j.view_mut((n, 0), (n, n)).copy_from(&(-identity::<T>(n)));
    j.view_mut((0, 2 * n), (n, 1)).copy_from(&(&da * &u));
    j.view_mut((n, 2 * n), (n, 1)).copy_from(&(&da * &v));
    j.view_mut((0, 2 * n + 1), (n, 1)).copy_from(&(-&u));
    j.view_mut((n, 2 * n + 1), (n, 1)).copy_from(&(-&v));
    for i in 0..n {
        j[(2 * n, i)] = e0[i].conj();
        j[(2 * n + 1, n + i)] = e0[i].conj();
    }
    j
}

fn smallest_right_singular_vector<T: Real>(m: &CMat<T>) -> Result<CVec<T>> {
    let g = adjoint(m) * m;
    let f = schur(&g).ok_or(Error::SchurFailure)?;
    let mut best = 0;
    for i in 1..g.nrows() {
        if f.t[(i, i)].re < f.t[(best, best)].re {
            best = i;
        }
    }
    Ok(f.q.column(best).into_owned())
}

/// `ν` and eigenvector guess from the closest pair of directions in the
/// unstable and stable subspaces of `A(λ)`, split by the Morse index far
/// to the right.
fn intersection_guess<T: Real>(a: &MatrixPencil<T>, lambda: C<T>) -> Result<(C<T>, CVec<T>)> {
    let n = a.nrows();
    let shift = T::lit(10.0) * (T::one() + lambda.norm());
    let k = morse_index(a, lambda + C::new(shift, T::zero()))?;
    if k == 0 || k == n {
        return Err(Error::InvalidArgument(format!(
            "Morse index {k} leaves no subspace pair"
        )));
    }
    let am = a.eval(lambda);
    let unstable = sorted_schur_by(&am, k, SortOrder::RealDescending)?;
    let stable = sorted_schur_by(&am, n - k, SortOrder::RealAscending)?;
    Ok(pair_guess(
        &am,
        &unstable.q.columns(0, k).into_owned(),
        &stable.q.columns(0, n - k).into_owned(),
    ))
}

fn pair_guess<T: Real>(am: &CMat<T>, unstable: &CMat<T>, stable: &CMat<T>) -> (C<T>, CVec<T>) {
    let (_, x, y) = closest_pair(unstable, stable);
    let phase = dot_h(y.as_slice(), x.as_slice());
    let phase = if phase.norm() > T::zero() {
        phase / C::new(phase.norm(), T::zero())
    } else {
        C::one()
    };
    let mut w = &x + &y * phase.conj();
    let wn = vec_norm(&w);
    if wn > T::zero() {
        w /= C::new(wn, T::zero());
    }
    let nu = hdot(&w, (am * &w).iter());
    (nu, w)
}

/// Newton solve initialized from given bases of the two subspaces at
/// `lambda_guess` instead of a Morse-index split.
pub fn branch_point_newton_between<T: Real>(
    a: &MatrixPencil<T>,
    lambda_guess: C<T>,
    unstable: &CMat<T>,
    stable: &CMat<T>,
    max_steps: usize,
) -> Result<BranchPoint<T>> {
    let n = a.nrows();
    if unstable.nrows() != n || stable.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "bases of height {} and {} in dimension {n}",
            unstable.nrows(),
            stable.nrows()
        )));
    }
    let (nu, u) = pair_guess(&a.eval(lambda_guess), unstable, stable);
    branch_point_newton_from(a, lambda_guess, nu, Some(u), max_steps)
}

/// `(D, ∂_ν D)` for `D(λ, ν) = det(A(λ) - ν)`; the derivative uses the
/// trapezoidal rule for the Cauchy integral on a small circle around `ν`.
pub fn double_root_residual<T: Real>(a: &MatrixPencil<T>, lambda: C<T>, nu: C<T>) -> (C<T>, C<T>) {
    let n = a.nrows();
    let am = a.eval(lambda);
    let det = |z: C<T>| {
        DenseLu::new(&(&am - identity::<T>(n) * z))
            .map(|lu| lu.det())
            .unwrap_or(C::zero())
    };
    let d = det(nu);
    let pts = 2 * n + 2;
    let radius = T::lit(1e-2) * (T::one() + nu.norm());
    let mut acc = C::<T>::zero();
    for j in 0..pts {
        let w = C::from_polar(
            T::one(),
            T::TAU() * T::from_usize(j).unwrap() / T::from_usize(pts).unwrap(),
        );
        acc += det(nu + w * radius) / w;
    }
    (
        d,
        acc / C::new(radius * T::from_usize(pts).unwrap(), T::zero()),
    )
}

/// `e^H x`.
fn hdot<'a, T: Real>(e: &CVec<T>, x: impl Iterator<Item = &'a C<T>>) -> C<T> {
    e.iter()
        .zip(x)
        .fold(C::zero(), |acc, (a, b)| acc + a.conj() * b)
}
