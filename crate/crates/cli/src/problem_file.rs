//! Problem files: TOML documents naming either a catalog entry with
//! parameters, or explicit asymptotic pencils with an optional interior
//! profile.
//!
//! ```toml
//! catalog = "allen_cahn_layer"
//! [params]
//! L = 8.0
//! n = 200
//! ```
//!
//! ```toml
//! name = "layer"
//! # coefficient of λ^0, λ^1, ...; each a list of rows of [re, im] pairs
//! a_plus = [
//!     [[[0, 0], [1, 0]], [[2, 0], [0, 0]]],
//!     [[[0, 0], [0, 0]], [[1, 0], [0, 0]]],
//! ]
//! [interior]
//! profile = "sech2"
//! scale = 1.4142135623730951
//! matrix = [[[0, 0], [0, 0]], [[-3, 0], [0, 0]]]
//! half_length = 10.0
//! intervals = 400
//! ```
//!
//! With an interior the coefficient is `A(x; λ) = A₊(λ) + f(x) B`.

use ptwise::assembly::{InteriorFn, ProblemSpec, SheetRule};
use ptwise::pencil::{MatrixPencil, ScalarPoly};
use ptwise::scalar::{CMat, C};
use ptwise::{Params, Problem};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

type Pair = [f64; 2];
type Rows = Vec<Vec<Pair>>;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub catalog: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub name: Option<String>,
    pub a_minus: Option<Vec<Rows>>,
    pub a_plus: Option<Vec<Rows>>,
    #[serde(default)]
    pub base: Option<Pair>,
    pub k: Option<usize>,
    #[serde(default)]
    pub swap_subspaces: bool,
    /// Coefficients of `λ = φ(γ)` in increasing degree.
    pub reparam: Option<Vec<Pair>>,
    #[serde(default)]
    pub positive_gamma_is_eigenvalue: bool,
    /// `N x d` basis replacing the left asymptotic subspace.
    pub left_boundary: Option<Rows>,
    pub interior: Option<Interior>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interior {
    pub profile: Profile,
    #[serde(default = "one")]
    pub scale: f64,
    /// Polynomial coefficients in `x`, increasing degree.
    #[serde(default)]
    pub coeffs: Vec<f64>,
    pub matrix: Rows,
    pub half_length: f64,
    pub intervals: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `sech²(x / scale)`
    Sech2,
    /// `tanh²(x / scale)`
    Tanh2,
    /// `Σ c_j x^j`
    Polynomial,
}

impl Profile {
    fn eval(self, x: f64, scale: f64, coeffs: &[f64]) -> f64 {
        match self {
            Profile::Sech2 => {
                let s = 1.0 / (x / scale).cosh();
                s * s
            }
            Profile::Tanh2 => (x / scale).tanh().powi(2),
            Profile::Polynomial => coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c),
        }
    }
}

/// What `--problem` resolved to.
pub enum Source {
    Catalog { name: String, params: Params },
    Explicit(Box<Problem>),
}

impl Source {
    pub fn name(&self) -> &str {
        match self {
            Source::Catalog { name, .. } => name,
            Source::Explicit(p) => &p.name,
        }
    }
}

pub fn is_file_reference(problem: &str) -> bool {
    problem.ends_with(".toml") || Path::new(problem).is_file()
}

pub fn load(path: &Path) -> Result<Source, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file: ProblemFile =
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    file.into_source()
}

impl ProblemFile {
    pub fn into_source(self) -> Result<Source, String> {
        if let Some(name) = self.catalog {
            if self.a_minus.is_some() || self.a_plus.is_some() || self.interior.is_some() {
                return Err(
                    "a problem file names either a catalog entry or explicit pencils, not both"
                        .into(),
                );
            }
            return Ok(Source::Catalog {
                name,
                params: self.params.into_iter().collect(),
            });
        }
        if !self.params.is_empty() {
            return Err("[params] applies only to catalog problems".into());
        }
        let base = self.base.map_or(C::new(0.0, 0.0), complex);
        let a_minus = self
            .a_minus
            .as_ref()
            .or(self.a_plus.as_ref())
            .ok_or("missing a_minus / a_plus")?;
        let a_plus = self.a_plus.as_ref().unwrap_or(a_minus);
        let a_minus = pencil(a_minus, base, "a_minus")?;
        let a_plus = pencil(a_plus, base, "a_plus")?;
        let name = self.name.unwrap_or_else(|| "explicit".to_string());
        let mut spec =
            ProblemSpec::constant(&name, a_minus, a_plus.clone()).map_err(|e| e.to_string())?;
        spec.k = self.k;
        spec.swap_subspaces = self.swap_subspaces;
        if let Some(c) = self.reparam {
            spec.reparam = Some(ScalarPoly::new(c.into_iter().map(complex).collect()));
        }
        if self.positive_gamma_is_eigenvalue {
            spec.sheet = Some(SheetRule::PositiveGammaIsEigenvalue);
        }
        if let Some(rows) = self.left_boundary {
            spec.left_boundary = Some(matrix(&rows, "left_boundary")?);
        }
        if let Some(int) = self.interior {
            let b = matrix(&int.matrix, "interior.matrix")?;
            if b.nrows() != spec.n_phase || b.ncols() != spec.n_phase {
                return Err(format!("interior.matrix must be {0}x{0}", spec.n_phase));
            }
            if int.profile == Profile::Polynomial && int.coeffs.is_empty() {
                return Err("polynomial profile needs coeffs".into());
            }
            if int.intervals == 0 || int.half_length <= 0.0 {
                return Err("interior needs half_length > 0 and intervals > 0".into());
            }
            let far = a_plus.rebase(C::new(0.0, 0.0));
            let (profile, scale, coeffs) = (int.profile, int.scale, int.coeffs);
            let interior: InteriorFn<f64> = Arc::new(move |x: f64| {
                let f = profile.eval(x, scale, &coeffs);
                let mut c = far.coeffs().to_vec();
                c[0] += &b * C::new(f, 0.0);
                MatrixPencil::new(far.base(), c).expect("interior shapes")
            });
            spec = spec.with_interior(interior, int.half_length, int.intervals);
        }
        Ok(Source::Explicit(Box::new(spec)))
    }
}

fn complex(p: Pair) -> C<f64> {
    C::new(p[0], p[1])
}

fn matrix(rows: &Rows, what: &str) -> Result<CMat<f64>, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(format!(
            "{what}: expected a non-empty rectangular list of rows"
        ));
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| complex(rows[i][j])))
}

fn pencil(coeffs: &[Rows], base: C<f64>, what: &str) -> Result<MatrixPencil<f64>, String> {
    let mats = coeffs
        .iter()
        .enumerate()
        .map(|(l, rows)| matrix(rows, &format!("{what}[{l}]")))
        .collect::<Result<Vec<_>, _>>()?;
    MatrixPencil::new(base, mats).map_err(|e| format!("{what}: {e}"))
}
