use super::{adjoint, schur};
use crate::scalar::{CMat, Real, C};
use num_traits::Zero;

/// Solves `T1 X - X T0 = R` for upper-triangular `T1` (m x m) and `T0`
/// (d x d) by column-wise back substitution. Returns `Err(sep)` with the
/// smallest diagonal separation when it falls below `tol`.
pub fn solve_sylvester_triangular<T: Real>(
    t1: &CMat<T>,
    t0: &CMat<T>,
    r: &CMat<T>,
    tol: T,
) -> Result<CMat<T>, T> {
    let m = t1.nrows();
    let d = t0.nrows();
    let mut x = CMat::<T>::zeros(m, d);
    let mut rhs = vec![C::zero(); m];
    for j in 0..d {
        let mu = t0[(j, j)];
        for i in 0..m {
            let mut s = r[(i, j)];
            for p in 0..j {
                s += x[(i, p)] * t0[(p, j)];
            }
            rhs[i] = s;
        }
        for i in (0..m).rev() {
            let mut s = rhs[i];
            for c in i + 1..m {
                s -= t1[(i, c)] * x[(c, j)];
            }
            let den = t1[(i, i)] - mu;
            if den.norm() <= tol {
                return Err(den.norm());
            }
            x[(i, j)] = s / den;
        }
    }
    Ok(x)
}

/// Bartels-Stewart for general `B1 X - X B0 = R`.
pub fn solve_sylvester<T: Real>(
    b1: &CMat<T>,
    b0: &CMat<T>,
    r: &CMat<T>,
    tol: T,
) -> Result<CMat<T>, T> {
    let s1 = schur(b1).ok_or(T::zero())?;
    let s0 = schur(b0).ok_or(T::zero())?;
    let rt = adjoint(&s1.q) * r * &s0.q;
    let y = solve_sylvester_triangular(&s1.t, &s0.t, &rt, tol)?;
    Ok(&s1.q * y * adjoint(&s0.q))
}
