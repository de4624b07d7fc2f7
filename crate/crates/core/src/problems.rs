//! Catalog of model problems: traveling-wave and constant-state
//! linearizations reduced to first-order systems `u_x = A(x; λ) u`.

use crate::assembly::{InteriorFn, ProblemSpec, SheetRule};
use crate::error::{Error, Result};
use crate::pencil::{MatrixPencil, ScalarPoly};
use crate::scalar::{CMat, Real, C};
use num_complex::Complex64;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::sync::Arc;

pub type Params = BTreeMap<String, f64>;

/// Origin of a reference value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Reported for this model in the literature.
    Reported,
    /// Evaluated here from a closed form or an independent computation.
    Derived,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub quantity: &'static str,
    pub value: Complex64,
    pub provenance: Provenance,
}

fn reference(quantity: &'static str, re: f64, im: f64, provenance: Provenance) -> Reference {
    Reference {
        quantity,
        value: Complex64::new(re, im),
        provenance,
    }
}

pub const CATALOG: &[&str] = &[
    "convection_diffusion",
    "swift_hohenberg",
    "cahn_hilliard",
    "kdv",
    "beam",
    "coupled_transport",
    "allen_cahn_layer",
    "sech_well",
    "schrodinger_strip",
    "schrodinger_strip_4th",
    "robin_half_line",
    "efkpp",
];

/// Parameter defaults per catalog entry.
pub fn default_params(name: &str) -> Result<Params> {
    let pairs: &[(&str, f64)] = match name {
        "convection_diffusion" | "swift_hohenberg" | "kdv" | "beam" => &[],
        "cahn_hilliard" => &[("c", cahn_hilliard_speed())],
        "coupled_transport" => &[("eps", 0.1)],
        "allen_cahn_layer" => &[("L", 10.0), ("n", 400.0)],
        "sech_well" => &[("F0", -0.1), ("L", 10.0), ("n", 400.0)],
        "schrodinger_strip" => &[
            ("eps", 0.05),
            ("Ny", 40.0),
            ("L", 6.0),
            ("n", 300.0),
            ("explicit", 0.0),
        ],
        "schrodinger_strip_4th" => &[("eps", 0.05), ("Ny", 20.0), ("L", 6.0), ("n", 300.0)],
        "robin_half_line" => &[("n1", 1.0), ("n2", 1.0), ("reparam", 1.0)],
        "efkpp" => &[("eps", 0.1)],
        _ => return Err(Error::UnknownProblem(name.to_string())),
    };
    Ok(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

fn merged(name: &str, params: &Params) -> Result<Params> {
    let mut p = default_params(name)?;
    for (k, v) in params {
        if !p.contains_key(k) {
            return Err(Error::InvalidArgument(format!(
                "problem '{name}' has no parameter '{k}'"
            )));
        }
        p.insert(k.clone(), *v);
    }
    Ok(p)
}

fn count(p: &Params, key: &str) -> Result<usize> {
    let v = p[key];
    if v < 1.0 || v.fract() != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "parameter '{key}' must be a positive integer, got {v}"
        )));
    }
    Ok(v as usize)
}

/// Speed of the comoving frame in which the Cahn–Hilliard branch points are neutral.
pub fn cahn_hilliard_speed() -> f64 {
    let s7 = 7f64.sqrt();
    2.0 / (3.0 * 6f64.sqrt()) * (2.0 + s7) * (s7 - 1.0).sqrt()
}

/// `Im λ` of the Cahn–Hilliard branch points `±i ω`.
pub fn cahn_hilliard_frequency() -> f64 {
    let s7 = 7f64.sqrt();
    (3.0 + s7) * ((2.0 + s7) / 96.0).sqrt()
}

/// Linear spreading speed of `w_t = -ε² w_xxxx + w_xx + w` for `ε² < 1/12`.
pub fn efkpp_speed(eps: f64) -> f64 {
    let s = (1.0 - 12.0 * eps * eps).sqrt();
    ((6.0 - 6.0 * s) / (eps * eps)).sqrt() * (s + 2.0) / 9.0
}

/// Scalar model `λ^q w = Σ_j p_j ∂_x^j w` with constant `p_j`.
#[derive(Clone, Debug)]
pub struct ScalarModel {
    pub lambda_power: usize,
    pub p: Vec<f64>,
}

impl ScalarModel {
    pub fn order(&self) -> usize {
        self.p.len() - 1
    }

    /// Companion pencil in λ for `u = (w, w', ..., w^{(N-1)})`.
    pub fn pencil<T: Real>(&self) -> MatrixPencil<T> {
        let n = self.order();
        let top = self.p[n];
        let mut coeffs = vec![CMat::zeros(n, n); self.lambda_power + 1];
        for i in 0..n - 1 {
            coeffs[0][(i, i + 1)] = C::one();
        }
        for j in 0..n {
            coeffs[0][(n - 1, j)] = C::new(T::lit(-self.p[j] / top), T::zero());
        }
        coeffs[self.lambda_power][(n - 1, 0)] += C::new(T::lit(1.0 / top), T::zero());
        MatrixPencil::new(C::zero(), coeffs).expect("companion shapes")
    }

    /// Same model in a frame moving with speed `c` (adds `c w_x`).
    pub fn comoving(&self, c: f64) -> Self {
        let mut m = self.clone();
        m.p[1] += c;
        m
    }

    /// Companion pencil in `c` at `λ = 0` for the comoving model.
    pub fn speed_pencil<T: Real>(&self) -> MatrixPencil<T> {
        let n = self.order();
        let top = self.p[n];
        let mut a0 = CMat::zeros(n, n);
        for i in 0..n - 1 {
            a0[(i, i + 1)] = C::one();
        }
        for j in 0..n {
            a0[(n - 1, j)] = C::new(T::lit(-self.p[j] / top), T::zero());
        }
        let mut a1 = CMat::zeros(n, n);
        a1[(n - 1, 1)] = C::new(T::lit(-1.0 / top), T::zero());
        MatrixPencil::new(C::zero(), vec![a0, a1]).expect("companion shapes")
    }

    /// Dispersion relation `Σ p_j ν^j - λ^q`.
    pub fn dispersion(&self, lambda: Complex64, nu: Complex64) -> Complex64 {
        let s: Complex64 = self
            .p
            .iter()
            .rev()
            .fold(Complex64::zero(), |acc, &c| acc * nu + c);
        s - lambda.powu(self.lambda_power as u32)
    }
}

/// The scalar constant-coefficient models of the catalog.
pub fn scalar_model(name: &str, params: &Params) -> Result<ScalarModel> {
    let p = merged(name, params)?;
    let (q, coeffs) = match name {
        "convection_diffusion" => (1, vec![1.0, 2.0, 1.0]),
        "swift_hohenberg" => (1, vec![-1.0, 0.0, -2.0, 0.0, -1.0]),
        "cahn_hilliard" => (1, vec![0.0, p["c"], -1.0, 0.0, -1.0]),
        "kdv" => (1, vec![0.0, 0.0, 0.0, 1.0]),
        "beam" => (2, vec![0.0, 0.0, 0.0, 0.0, -1.0]),
        "efkpp" => {
            let e = p["eps"];
            (1, vec![1.0, 0.0, 1.0, 0.0, -e * e])
        }
        _ => {
            return Err(Error::UnknownProblem(format!(
                "{name} is not a scalar constant-coefficient model"
            )))
        }
    };
    Ok(ScalarModel {
        lambda_power: q,
        p: coeffs,
    })
}

fn cm<T: Real>(x: f64) -> C<T> {
    C::new(T::lit(x), T::zero())
}

fn sech<T: Real>(x: T) -> T {
    T::one() / x.cosh()
}

/// `[[0, 1], [λ + q(x), 0]]` as a pencil in λ.
fn schrodinger_1d<T: Real>(q: T) -> MatrixPencil<T> {
    let mut a0 = CMat::zeros(2, 2);
    a0[(0, 1)] = C::one();
    a0[(1, 0)] = C::new(q, T::zero());
    let mut a1 = CMat::zeros(2, 2);
    a1[(1, 0)] = C::one();
    MatrixPencil::new(C::zero(), vec![a0, a1]).expect("2x2")
}

/// Builds a catalog problem; unspecified parameters take their defaults.
pub fn make_problem<T: Real>(name: &str, params: &Params) -> Result<ProblemSpec<T>> {
    let p = merged(name, params)?;
    match name {
        "convection_diffusion" | "swift_hohenberg" | "cahn_hilliard" | "kdv" | "beam" | "efkpp" => {
            let a = scalar_model(name, params)?.pencil::<T>();
            ProblemSpec::constant(name, a.clone(), a)
        }
        "coupled_transport" => {
            let eps = p["eps"];
            let mut a0 = CMat::zeros(2, 2);
            a0[(0, 1)] = cm(eps);
            let mut a1 = CMat::zeros(2, 2);
            a1[(0, 0)] = cm(-1.0);
            a1[(1, 1)] = cm(1.0);
            let a = MatrixPencil::new(C::zero(), vec![a0, a1])?;
            ProblemSpec::constant(name, a.clone(), a)
        }
        "allen_cahn_layer" => {
            let far = schrodinger_1d::<T>(T::lit(2.0));
            let interior: InteriorFn<T> = Arc::new(|x: T| {
                let s = sech(x / T::lit(2f64.sqrt()));
                schrodinger_1d(T::lit(2.0) - T::lit(3.0) * s * s)
            });
            Ok(
                ProblemSpec::constant(name, far.clone(), far)?.with_interior(
                    interior,
                    T::lit(p["L"]),
                    count(&p, "n")?,
                ),
            )
        }
        "sech_well" => {
            let f0 = T::lit(p["F0"]);
            let far = schrodinger_1d::<T>(T::zero());
            let interior: InteriorFn<T> = Arc::new(move |x: T| {
                let s = sech(x);
                schrodinger_1d(-f0 * s * s)
            });
            let mut spec = ProblemSpec::constant(name, far.clone(), far)?.with_interior(
                interior,
                T::lit(p["L"]),
                count(&p, "n")?,
            );
            spec.reparam = Some(ScalarPoly::from_real(&[0.0, 0.0, 1.0]));
            spec.sheet = Some(SheetRule::PositiveGammaIsEigenvalue);
            Ok(spec)
        }
        "robin_half_line" => {
            let far = schrodinger_1d::<T>(T::zero());
            let mut spec = ProblemSpec::constant(name, far.clone(), far)?;
            let mut bc = CMat::zeros(2, 1);
            bc[(0, 0)] = cm(p["n2"]);
            bc[(1, 0)] = cm(-p["n1"]);
            spec.left_boundary = Some(bc);
            spec.k = Some(1);
            if p["reparam"] != 0.0 {
                spec.reparam = Some(ScalarPoly::from_real(&[0.0, 0.0, 1.0]));
                spec.sheet = Some(SheetRule::PositiveGammaIsEigenvalue);
            }
            Ok(spec)
        }
        "schrodinger_strip" => strip(name, &p, false),
        "schrodinger_strip_4th" => strip(name, &p, true),
        _ => Err(Error::UnknownProblem(name.to_string())),
    }
}

/// `-∂_yy` on `(-π, π)` with Dirichlet conditions by fourth-order centered
/// differences on `ny` interior points; the boundary-adjacent stencils use
/// odd reflection across the wall.
pub fn dirichlet_laplacian<T: Real>(ny: usize) -> CMat<T> {
    let dy = 2.0 * std::f64::consts::PI / (ny as f64 + 1.0);
    let w = [-1.0, 16.0, -30.0, 16.0, -1.0];
    let s = -1.0 / (12.0 * dy * dy);
    let mut k = CMat::zeros(ny, ny);
    for i in 0..ny as isize {
        for (o, wt) in (-2..=2).zip(w) {
            let j = i + o;
            // ghost points: index -1 is the wall, -2 reflects to 0 with a sign flip
            let (col, sign) = if j == -1 || j == ny as isize {
                continue;
            } else if j == -2 {
                (0, -1.0)
            } else if j == ny as isize + 1 {
                (ny as isize - 1, -1.0)
            } else {
                (j, 1.0)
            };
            k[(i as usize, col as usize)] += cm::<T>(s * wt * sign);
        }
    }
    k
}

/// Lowest eigenvalue of [`dirichlet_laplacian`], `(15 - 16 cos(dy/2) + cos dy) / (6 dy²)`.
pub fn discrete_ground_state(ny: usize) -> f64 {
    let dy = 2.0 * std::f64::consts::PI / (ny as f64 + 1.0);
    (15.0 - 16.0 * (dy / 2.0).cos() + dy.cos()) / (6.0 * dy * dy)
}

fn strip<T: Real>(name: &str, p: &Params, fourth: bool) -> Result<ProblemSpec<T>> {
    let ny = count(p, "Ny")?;
    let eps = T::lit(p["eps"]);
    let explicit = !fourth && p["explicit"] != 0.0;
    let k = dirichlet_laplacian::<T>(ny);
    let dy = 2.0 * std::f64::consts::PI / (ny as f64 + 1.0);
    let ys: Vec<T> = (1..=ny)
        .map(|i| T::lit(-std::f64::consts::PI + i as f64 * dy))
        .collect();
    let potential = move |x: T, y: T| -> T {
        if explicit {
            let s = sech(x / T::lit(2.0));
            T::lit(0.5) * s * s
        } else {
            let s = sech((x * x + y * y).sqrt());
            s * s
        }
    };
    let mu1 = discrete_ground_state(ny);
    let build = {
        let k = k.clone();
        move |x: Option<T>| -> MatrixPencil<T> {
            let v: Vec<T> = ys
                .iter()
                .map(|&y| x.map_or(T::zero(), |x| potential(x, y)))
                .collect();
            if fourth {
                let n = 4 * ny;
                let mut a0 = CMat::zeros(n, n);
                for b in 0..3 {
                    for i in 0..ny {
                        a0[(b * ny + i, (b + 1) * ny + i)] = C::one();
                    }
                }
                let k2 = &k * &k;
                for i in 0..ny {
                    for j in 0..ny {
                        a0[(3 * ny + i, j)] = -k2[(i, j)];
                        a0[(3 * ny + i, 2 * ny + j)] = k[(i, j)] * cm::<T>(2.0);
                    }
                    a0[(3 * ny + i, i)] += C::new(eps * v[i], T::zero());
                }
                let mut a1 = CMat::zeros(n, n);
                for i in 0..ny {
                    a1[(3 * ny + i, i)] = -C::<T>::one();
                }
                MatrixPencil::new(C::zero(), vec![a0, a1]).expect("strip shapes")
            } else {
                let n = 2 * ny;
                let mut a0 = CMat::zeros(n, n);
                let mut a1 = CMat::zeros(n, n);
                for i in 0..ny {
                    a0[(i, ny + i)] = C::one();
                    for j in 0..ny {
                        a0[(ny + i, j)] = k[(i, j)];
                    }
                    a0[(ny + i, i)] -= C::new(eps * v[i], T::zero());
                    a1[(ny + i, i)] = C::one();
                }
                MatrixPencil::new(C::zero(), vec![a0, a1]).expect("strip shapes")
            }
        }
    };
    let far = build(None);
    let interior: InteriorFn<T> = Arc::new(move |x: T| build(Some(x)));
    let mut spec = ProblemSpec::constant(name, far.clone(), far)?.with_interior(
        interior,
        T::lit(p["L"]),
        count(p, "n")?,
    );
    let shift = if fourth { mu1 * mu1 } else { mu1 };
    spec.reparam = Some(ScalarPoly::from_real(&[-shift, 0.0, 1.0]));
    spec.sheet = Some(SheetRule::PositiveGammaIsEigenvalue);
    Ok(spec)
}

/// Pencil in the speed `c` at `λ = 0` for a comoving scalar model.
pub fn spreading_speed_pencil<T: Real>(name: &str, params: &Params) -> Result<MatrixPencil<T>> {
    Ok(scalar_model(name, params)?.speed_pencil())
}

/// Problem whose spectral parameter is the speed `c` (at `λ = 0`). The
/// subspace split is inherited from the λ-problem far to the right.
pub fn spreading_speed_problem<T: Real>(name: &str, params: &Params) -> Result<ProblemSpec<T>> {
    let model = scalar_model(name, params)?;
    let lam = model.pencil::<f64>();
    let shift = 10.0;
    let k = crate::subspace::morse_index(&lam, Complex64::new(shift, 0.0))?;
    let a = model.speed_pencil::<T>();
    let mut spec = ProblemSpec::constant(&format!("{name}_speed"), a.clone(), a)?;
    spec.k = Some(k);
    Ok(spec)
}

/// Known spectral values for a catalog entry with the given parameters.
pub fn references(name: &str, params: &Params) -> Result<Vec<Reference>> {
    use Provenance::*;
    let p = merged(name, params)?;
    Ok(match name {
        "convection_diffusion" => vec![
            reference("branch_point", 0.0, 0.0, Reported),
            reference("nu", -1.0, 0.0, Reported),
        ],
        "swift_hohenberg" => vec![
            reference("branch_point", 0.0, 0.0, Reported),
            reference("nu", 0.0, 1.0, Reported),
            reference("nu", 0.0, -1.0, Reported),
        ],
        "cahn_hilliard" => vec![
            reference("branch_point", 0.0, cahn_hilliard_frequency(), Derived),
            reference("branch_point", 0.0, -cahn_hilliard_frequency(), Derived),
        ],
        "kdv" | "beam" => vec![
            reference("branch_point", 0.0, 0.0, Reported),
            reference("nu", 0.0, 0.0, Reported),
        ],
        "coupled_transport" if p["eps"] != 0.0 => vec![reference("eigenvalue", 0.0, 0.0, Reported)],
        "coupled_transport" => vec![],
        "allen_cahn_layer" => vec![
            reference("eigenvalue", 0.0, 0.0, Reported),
            reference("eigenvalue", -1.5, 0.0, Reported),
            reference("branch_point", -2.0, 0.0, Reported),
        ],
        "sech_well" => vec![reference(
            "gamma_resonance",
            -0.5 + (p["F0"] + 0.25).sqrt(),
            0.0,
            Derived,
        )],
        "robin_half_line" => vec![
            reference("gamma", p["n1"] / p["n2"], 0.0, Reported),
            reference("branch_point", 0.0, 0.0, Reported),
        ],
        "schrodinger_strip" if p["explicit"] != 0.0 => {
            vec![reference("eigenvalue", 0.0, 0.0, Reported)]
        }
        "schrodinger_strip" => vec![reference("gamma_slope", 0.567402, 0.0, Reported)],
        "schrodinger_strip_4th" => vec![reference("gamma_slope", 0.802428, 0.0, Reported)],
        "efkpp" => vec![reference("speed", efkpp_speed(p["eps"]), 0.0, Derived)],
        _ => return Err(Error::UnknownProblem(name.to_string())),
    })
}
