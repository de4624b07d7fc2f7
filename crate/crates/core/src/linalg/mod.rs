//! Dense and banded complex linear algebra used by the pencil machinery.
//!
//! Everything is written against `nalgebra` storage but the factorizations
//! are hand-rolled so that they stay generic over the real scalar type.

mod band;
mod lu;
mod qr;
mod schur;
mod sylvester;

pub use band::BandLu;
pub use lu::DenseLu;
pub use qr::{orthonormal_completion, orthonormalize};
pub use schur::{schur, sort_schur, swap_adjacent, SchurForm, SortOrder};
pub use sylvester::{solve_sylvester, solve_sylvester_triangular};

use crate::scalar::{CMat, CVec, Real, C};
use num_traits::{One, Zero};

pub fn adjoint<T: Real>(m: &CMat<T>) -> CMat<T> {
    CMat::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].conj())
}

pub fn fro_norm<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

pub fn vec_norm<T: Real>(v: &CVec<T>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

pub fn slice_norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Hermitian pairing `<a, b> = sum a_i conj(b_i)`.
pub fn dot_h<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter()
        .zip(b)
        .fold(C::zero(), |acc, (x, y)| acc + *x * y.conj())
}

pub fn identity<T: Real>(n: usize) -> CMat<T> {
    CMat::from_fn(n, n, |i, j| if i == j { C::one() } else { C::zero() })
}

/// Largest absolute entry.
pub fn max_abs<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
}

/// Spectral norm from the eigenvalues of `M^H M`; meant for small matrices.
pub fn spectral_norm<T: Real>(m: &CMat<T>) -> T {
    if m.nrows() == 0 || m.ncols() == 0 {
        return T::zero();
    }
    let g = adjoint(m) * m;
    let herm = schur(&g).expect("hermitian schur");
    let top = (0..g.nrows())
        .map(|i| herm.t[(i, i)].re)
        .fold(T::zero(), T::max);
    top.max(T::zero()).sqrt()
}

/// Sine of the largest principal angle between `span(u)` and `span(v)`.
/// Both inputs need full column rank and equal column counts.
pub fn subspace_angle<T: Real>(u: &CMat<T>, v: &CMat<T>) -> T {
    let qu = orthonormalize(u);
    let qv = orthonormalize(v);
    let proj = &qv * (adjoint(&qv) * &qu);
    spectral_norm(&(qu - proj)).min(T::one())
}

/// Principal vectors: returns `(cos, x, y)` for the pair of unit vectors
/// `x` in `span(u)` and `y` in `span(v)` with the smallest angle.
pub fn closest_pair<T: Real>(u: &CMat<T>, v: &CMat<T>) -> (T, CVec<T>, CVec<T>) {
    let qu = orthonormalize(u);
    let qv = orthonormalize(v);
    let m = adjoint(&qu) * &qv;
    // Right singular vectors of m are eigenvectors of m^H m.
    let g = adjoint(&m) * &m;
    let herm = schur(&g).expect("hermitian schur");
    let mut best = 0;
    for i in 1..g.nrows() {
        if herm.t[(i, i)].re > herm.t[(best, best)].re {
            best = i;
        }
    }
    let b = herm.q.column(best).into_owned();
    let y = &qv * &b;
    let mb = &m * &b;
    let s = vec_norm(&mb);
    let x = if s > T::zero() {
        &qu * mb.map(|z| z / creal(s))
    } else {
        qu.column(0).into_owned()
    };
    (s.min(T::one()), x, y)
}

fn creal<T: Real>(x: T) -> C<T> {
    C::new(x, T::zero())
}
