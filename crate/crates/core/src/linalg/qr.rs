use super::vec_norm;
use crate::scalar::{CMat, CVec, Real, C};
use num_traits::{One, Zero};

/// Householder QR of the `n x d` matrix `u`; returns the full unitary `Q`
/// whose leading `d` columns span `span(u)`.
pub fn orthonormal_completion<T: Real>(u: &CMat<T>) -> CMat<T> {
    let n = u.nrows();
    let d = u.ncols();
    let mut r = u.clone();
    let mut reflectors: Vec<CVec<T>> = Vec::with_capacity(d);
    for k in 0..d.min(n) {
        let x = CVec::from_iterator(n - k, (k..n).map(|i| r[(i, k)]));
        let xn = vec_norm(&x);
        let mut v = x.clone();
        if xn > T::zero() {
            let phase = if x[0].norm() > T::zero() {
                x[0] / C::new(x[0].norm(), T::zero())
            } else {
                C::one()
            };
            v[0] += phase * C::new(xn, T::zero());
        }
        let vn = vec_norm(&v);
        if vn > T::zero() {
            v /= C::new(vn, T::zero());
        }
        // R <- (I - 2 v v^H) R on rows k..n
        for j in 0..d {
            let mut s = C::zero();
            for i in 0..n - k {
                s += v[i].conj() * r[(k + i, j)];
            }
            let two = C::new(T::lit(2.0), T::zero());
            for i in 0..n - k {
                let vi = v[i];
                r[(k + i, j)] -= two * vi * s;
            }
        }
        reflectors.push(v);
    }
    // Q = H_0 H_1 ... H_{d-1}; apply to identity from the right-most reflector.
    let mut q = super::identity::<T>(n);
    for (k, v) in reflectors.iter().enumerate().rev() {
        for j in 0..n {
            let mut s = C::zero();
            for i in 0..n - k {
                s += v[i].conj() * q[(k + i, j)];
            }
            let two = C::new(T::lit(2.0), T::zero());
            for i in 0..n - k {
                let vi = v[i];
                q[(k + i, j)] -= two * vi * s;
            }
        }
    }
    q
}

/// Orthonormal basis of `span(u)` (thin Q factor).
pub fn orthonormalize<T: Real>(u: &CMat<T>) -> CMat<T> {
    let q = orthonormal_completion(u);
    q.columns(0, u.ncols()).into_owned()
}
