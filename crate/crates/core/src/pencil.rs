//! Matrix-valued polynomials `P(λ) = Σ P_ℓ (λ - λ_base)^ℓ`.

use crate::error::{Error, Result};
use crate::scalar::{CMat, Real, C};
use num_traits::{One, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StorageHint {
    #[default]
    Dense,
    /// Interior rows carry only low orders; higher orders live in a border block.
    SparseBlock,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPencil<T: Real> {
    base: C<T>,
    coeffs: Vec<CMat<T>>,
    pub storage_hint: StorageHint,
}

impl<T: Real> MatrixPencil<T> {
    /// All coefficients must share one shape; at least one is required.
    pub fn new(base: C<T>, coeffs: Vec<CMat<T>>) -> Result<Self> {
        let first = coeffs.first().ok_or_else(|| {
            Error::InvalidArgument("pencil needs at least one coefficient".into())
        })?;
        let shape = first.shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::InvalidArgument("empty coefficient matrix".into()));
        }
        if let Some(bad) = coeffs.iter().position(|c| c.shape() != shape) {
            return Err(Error::DimensionMismatch(format!(
                "coefficient {bad} has shape {:?}, expected {:?}",
                coeffs[bad].shape(),
                shape
            )));
        }
        Ok(MatrixPencil {
            base,
            coeffs,
            storage_hint: StorageHint::Dense,
        })
    }

    pub fn constant(m: CMat<T>) -> Self {
        Self::new(C::zero(), vec![m]).expect("nonempty matrix")
    }

    pub fn base(&self) -> C<T> {
        self.base
    }

    pub fn coeffs(&self) -> &[CMat<T>] {
        &self.coeffs
    }

    pub fn coeff(&self, l: usize) -> Option<&CMat<T>> {
        self.coeffs.get(l)
    }

    /// Highest stored order `M`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn nrows(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn ncols(&self) -> usize {
        self.coeffs[0].ncols()
    }

    pub fn eval(&self, lambda: C<T>) -> CMat<T> {
        let z = lambda - self.base;
        let mut acc = self.coeffs[self.order()].clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc *= z;
            acc += c;
        }
        acc
    }

    /// Derivative with respect to λ, evaluated at `lambda`.
    pub fn eval_derivative(&self, lambda: C<T>) -> CMat<T> {
        let z = lambda - self.base;
        let mut acc = CMat::zeros(self.nrows(), self.ncols());
        for (l, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc *= z;
            acc += c * C::new(T::from_usize(l).unwrap(), T::zero());
        }
        acc
    }

    /// Same polynomial re-expanded about `base + s`.
    pub fn shift(&self, s: C<T>) -> Self {
        if s == C::zero() {
            return self.clone();
        }
        let m = self.order();
        let binom = binomials::<T>(m);
        let mut pw = vec![C::<T>::one(); m + 1];
        for i in 1..=m {
            pw[i] = pw[i - 1] * s;
        }
        let coeffs = (0..=m)
            .map(|j| {
                let mut acc = CMat::zeros(self.nrows(), self.ncols());
                for l in j..=m {
                    let w = pw[l - j] * C::new(binom(l, j), T::zero());
                    acc += &self.coeffs[l] * w;
                }
                acc
            })
            .collect();
        MatrixPencil {
            base: self.base + s,
            coeffs,
            storage_hint: self.storage_hint,
        }
    }

    /// Pencil moved to a new base point.
    pub fn rebase(&self, new_base: C<T>) -> Self {
        self.shift(new_base - self.base)
    }

    /// Drops orders above `m`.
    pub fn truncate(&self, m: usize) -> Self {
        let mut out = self.clone();
        out.coeffs.truncate(m + 1);
        out
    }

    /// The pencil `γ ↦ P(φ(γ))` expanded about `γ = 0`, truncated at `m_out`.
    pub fn reparametrize(&self, phi: &ScalarPoly<T>, m_out: usize) -> Result<Self> {
        self.reparametrize_at(phi, C::zero(), m_out)
    }

    /// The pencil `γ ↦ P(φ(γ))` expanded about `γ = gamma0`.
    pub fn reparametrize_at(
        &self,
        phi: &ScalarPoly<T>,
        gamma0: C<T>,
        m_out: usize,
    ) -> Result<Self> {
        if phi.degree() < 1 {
            return Err(Error::InvalidArgument(
                "reparametrization must be nonconstant".into(),
            ));
        }
        // ψ(δ) = φ(γ₀ + δ) - base
        let mut psi = phi.shift(gamma0);
        psi.coeffs[0] -= self.base;
        let mut coeffs = vec![CMat::zeros(self.nrows(), self.ncols()); m_out + 1];
        let mut power = ScalarPoly::new(vec![C::one()]);
        for (l, c) in self.coeffs.iter().enumerate() {
            if l > 0 {
                power = power.mul_truncated(&psi, m_out);
            }
            for (m, w) in power.coeffs.iter().enumerate() {
                if *w != C::zero() {
                    coeffs[m] += c * *w;
                }
            }
        }
        Ok(MatrixPencil {
            base: gamma0,
            coeffs,
            storage_hint: self.storage_hint,
        })
    }

    /// Applies `f` to every coefficient.
    pub fn map_coeffs(&self, mut f: impl FnMut(&CMat<T>) -> CMat<T>) -> Result<Self> {
        let coeffs = self.coeffs.iter().map(&mut f).collect();
        let mut p = Self::new(self.base, coeffs)?;
        p.storage_hint = self.storage_hint;
        Ok(p)
    }
}

impl<T: Real> std::ops::Add for &MatrixPencil<T> {
    type Output = MatrixPencil<T>;

    /// Both operands must share base point and shape.
    fn add(self, rhs: &MatrixPencil<T>) -> MatrixPencil<T> {
        assert_eq!(self.base, rhs.base, "pencils must share a base point");
        let m = self.order().max(rhs.order());
        let zero = CMat::zeros(self.nrows(), self.ncols());
        let coeffs = (0..=m)
            .map(|l| self.coeffs.get(l).unwrap_or(&zero) + rhs.coeffs.get(l).unwrap_or(&zero))
            .collect();
        MatrixPencil {
            base: self.base,
            coeffs,
            storage_hint: self.storage_hint,
        }
    }
}

/// `binom(l, j)` as a real; exact integer table up to order 64.
fn binomials<T: Real>(m: usize) -> impl Fn(usize, usize) -> T {
    let exact = m.min(64);
    let mut table = vec![vec![0u128; exact + 1]; exact + 1];
    for l in 0..=exact {
        table[l][0] = 1;
        for j in 1..=l {
            table[l][j] = table[l - 1][j - 1] + if j < l { table[l - 1][j] } else { 0 };
        }
    }
    move |l: usize, j: usize| {
        if l <= exact {
            T::from_u128(table[l][j]).unwrap()
        } else {
            let j = j.min(l - j);
            let mut acc = T::one();
            for i in 0..j {
                acc = acc * T::from_usize(l - i).unwrap() / T::from_usize(i + 1).unwrap();
            }
            acc.round()
        }
    }
}

/// Scalar polynomial `Σ c_i x^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarPoly<T: Real> {
    pub coeffs: Vec<C<T>>,
}

impl<T: Real> ScalarPoly<T> {
    /// Trailing zero coefficients are dropped (the zero polynomial keeps one).
    pub fn new(mut coeffs: Vec<C<T>>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == C::zero() {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(C::zero());
        }
        ScalarPoly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(
            coeffs
                .iter()
                .map(|&c| C::new(T::lit(c), T::zero()))
                .collect(),
        )
    }

    pub fn identity() -> Self {
        Self::new(vec![C::zero(), C::one()])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: C<T>) -> C<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(C::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::new(vec![C::zero()]);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| *c * C::new(T::from_usize(i).unwrap(), T::zero()))
                .collect(),
        )
    }

    /// `x ↦ p(x0 + x)`.
    pub fn shift(&self, x0: C<T>) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        // repeated synthetic division
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let t = c[j + 1] * x0;
                c[j] += t;
            }
        }
        Self::new(c)
    }

    pub fn mul_truncated(&self, other: &Self, max_degree: usize) -> Self {
        let n = (self.degree() + other.degree()).min(max_degree) + 1;
        let mut out = vec![C::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j < n {
                    out[i + j] += *a * b;
                }
            }
        }
        Self::new(out)
    }
}
