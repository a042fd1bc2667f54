//! Finite truncations of the closed-loop parametrization.
//!
//! A truncated parameter stores, for each of the four closed-loop blocks,
//! coefficient matrices `C[0..=N]` of an expansion in inverse powers of a
//! basis factor `sigma`:
//!
//! ```text
//!   block = sum_{i=0}^{N} C[i] sigma^-i,
//!   sigma = z          (discrete time)
//!   sigma = s + a, a>0 (continuous time)
//! ```
//!
//! Discrete truncations are finite impulse responses of length N+1;
//! continuous truncations have all poles at -a. Expanding a truncation
//! yields rational matrices with the exact denominator `sigma^N`, so no
//! root finding is involved.
//!
//! The squared H2 norm of the performance stack
//!
//! ```text
//!   J = [W      X - I]
//!       [Z - I  Y    ]
//! ```
//!
//! is a quadratic form in the coefficients. In discrete time the basis is
//! orthonormal and the cost is the plain sum of squared coefficients of J.
//! In continuous time the basis functions (s+a)^-i are not orthogonal and
//! the cost couples coefficients through the Gram matrix
//! `Gamma[i][j] = binom(i+j-2, i-1) / (2a)^(i+j-1)` for `i, j >= 1`,
//! obtained by integrating the products of the impulse responses
//! `t^(i-1) e^(-at) / (i-1)!`. A finite continuous cost additionally
//! requires `X(inf) = I`, `Z(inf) = I`, `Y(inf) = 0`, `W(inf) = 0`, i.e.
//! identity/zero leading coefficients.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::rational::RationalFunction;
use crate::rmatrix::{Domain, RationalMatrix};
use crate::verify::ClosedLoopQuad;

/// Identifies one block of the closed-loop quadruple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockId {
    X,
    Y,
    W,
    Z,
}

impl BlockId {
    pub const ALL: [BlockId; 4] = [BlockId::X, BlockId::Y, BlockId::W, BlockId::Z];

    /// (rows, cols) of the block for a p-output, m-input plant.
    pub fn shape(&self, p: usize, m: usize) -> (usize, usize) {
        match self {
            BlockId::X => (p, p),
            BlockId::Y => (m, p),
            BlockId::W => (p, m),
            BlockId::Z => (m, m),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BlockId::X => "X",
            BlockId::Y => "Y",
            BlockId::W => "W",
            BlockId::Z => "Z",
        }
    }
}

/// Coefficients of a truncated closed-loop parametrization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamWire", into = "ParamWire")]
pub struct TruncatedParam {
    domain: Domain,
    horizon: usize,
    pole_shift: Option<f64>,
    x: Vec<DMatrix<f64>>,
    y: Vec<DMatrix<f64>>,
    w: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
}

impl TruncatedParam {
    pub fn new(
        domain: Domain,
        horizon: usize,
        pole_shift: Option<f64>,
        x: Vec<DMatrix<f64>>,
        y: Vec<DMatrix<f64>>,
        w: Vec<DMatrix<f64>>,
        z: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        match (domain, pole_shift) {
            (Domain::S, Some(a)) if a.is_finite() && a > 0.0 => {}
            (Domain::S, _) => {
                return Err(Error::InvalidInput(
                    "continuous truncation requires a pole shift a > 0".into(),
                ))
            }
            (Domain::Z, None) => {}
            (Domain::Z, Some(_)) => {
                return Err(Error::InvalidInput(
                    "discrete truncation takes no pole shift".into(),
                ))
            }
        }
        let p = x.first().map(|m| m.nrows()).unwrap_or(0);
        let m = z.first().map(|m| m.nrows()).unwrap_or(0);
        if p == 0 || m == 0 {
            return Err(Error::InvalidInput("empty truncation".into()));
        }
        let lens_ok = [x.len(), y.len(), w.len(), z.len()]
            .iter()
            .all(|l| *l == horizon + 1);
        if !lens_ok {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coefficient matrices per block",
                horizon + 1
            )));
        }
        let shapes_ok = x.iter().all(|c| c.shape() == (p, p))
            && y.iter().all(|c| c.shape() == (m, p))
            && w.iter().all(|c| c.shape() == (p, m))
            && z.iter().all(|c| c.shape() == (m, m));
        if !shapes_ok {
            return Err(Error::DimensionMismatch(
                "coefficient matrices have inconsistent shapes".into(),
            ));
        }
        Ok(TruncatedParam {
            domain,
            horizon,
            pole_shift,
            x,
            y,
            w,
            z,
        })
    }

    /// All-zero coefficients for a p-output, m-input plant.
    pub fn zero(
        domain: Domain,
        horizon: usize,
        pole_shift: Option<f64>,
        p: usize,
        m: usize,
    ) -> Result<Self> {
        let block = |b: BlockId| {
            let (r, c) = b.shape(p, m);
            vec![DMatrix::zeros(r, c); horizon + 1]
        };
        Self::new(
            domain,
            horizon,
            pole_shift,
            block(BlockId::X),
            block(BlockId::Y),
            block(BlockId::W),
            block(BlockId::Z),
        )
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn pole_shift(&self) -> Option<f64> {
        self.pole_shift
    }

    pub fn p(&self) -> usize {
        self.x[0].nrows()
    }

    pub fn m(&self) -> usize {
        self.z[0].nrows()
    }

    pub fn block(&self, id: BlockId) -> &[DMatrix<f64>] {
        match id {
            BlockId::X => &self.x,
            BlockId::Y => &self.y,
            BlockId::W => &self.w,
            BlockId::Z => &self.z,
        }
    }

    pub fn block_mut(&mut self, id: BlockId) -> &mut [DMatrix<f64>] {
        match id {
            BlockId::X => &mut self.x,
            BlockId::Y => &mut self.y,
            BlockId::W => &mut self.w,
            BlockId::Z => &mut self.z,
        }
    }

    /// The basis factor sigma as a polynomial in the domain variable.
    fn sigma(&self) -> Polynomial {
        match self.domain {
            Domain::Z => Polynomial::from_coeffs(&[0.0, 1.0]),
            Domain::S => Polynomial::from_coeffs(&[self.pole_shift.unwrap(), 1.0]),
        }
    }

    fn sigma_root(&self) -> Complex64 {
        match self.domain {
            Domain::Z => Complex64::new(0.0, 0.0),
            Domain::S => Complex64::new(-self.pole_shift.unwrap(), 0.0),
        }
    }

    /// Expands the truncation into rational matrices over the common
    /// denominator sigma^N.
    pub fn expand(&self) -> ClosedLoopQuad {
        let n = self.horizon;
        let mut pow = Vec::with_capacity(n + 1);
        pow.push(Polynomial::one());
        let sigma = self.sigma();
        for i in 1..=n {
            pow.push(pow[i - 1].mul(&sigma));
        }
        let den = pow[n].clone();
        let den_roots = vec![self.sigma_root(); n];
        let expand_block = |coeffs: &[DMatrix<f64>]| {
            let (rows, cols) = coeffs[0].shape();
            RationalMatrix::from_fn(self.domain, rows, cols, |r, c| {
                let mut num = Polynomial::zero();
                for (i, ci) in coeffs.iter().enumerate() {
                    let v = ci[(r, c)];
                    if v != 0.0 {
                        num = num.add(&pow[n - i].scale(v));
                    }
                }
                RationalFunction::normalized(num, den.clone(), den_roots.clone())
            })
        };
        ClosedLoopQuad {
            x: expand_block(&self.x),
            y: expand_block(&self.y),
            w: expand_block(&self.w),
            z: expand_block(&self.z),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let sc = |v: &[DMatrix<f64>]| v.iter().map(|m| m * s).collect();
        TruncatedParam {
            domain: self.domain,
            horizon: self.horizon,
            pole_shift: self.pole_shift,
            x: sc(&self.x),
            y: sc(&self.y),
            w: sc(&self.w),
            z: sc(&self.z),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.domain != other.domain
            || self.horizon != other.horizon
            || self.pole_shift != other.pole_shift
            || self.p() != other.p()
            || self.m() != other.m()
        {
            return Err(Error::DimensionMismatch(
                "truncations differ in shape, horizon or basis".into(),
            ));
        }
        let ad = |a: &[DMatrix<f64>], b: &[DMatrix<f64>]| {
            a.iter().zip(b.iter()).map(|(x, y)| x + y).collect()
        };
        Ok(TruncatedParam {
            domain: self.domain,
            horizon: self.horizon,
            pole_shift: self.pole_shift,
            x: ad(&self.x, &other.x),
            y: ad(&self.y, &other.y),
            w: ad(&self.w, &other.w),
            z: ad(&self.z, &other.z),
        })
    }

    /// Frobenius inner product of the i-th and j-th performance-stack
    /// coefficients, with the identity subtracted from X and Z at index 0.
    fn stack_inner(&self, i: usize, j: usize) -> f64 {
        let inner = |a: &DMatrix<f64>, b: &DMatrix<f64>, sub_diag: bool| {
            let mut acc = 0.0;
            for r in 0..a.nrows() {
                for c in 0..a.ncols() {
                    let av = a[(r, c)] - if sub_diag && r == c { 1.0 } else { 0.0 };
                    let bv = b[(r, c)] - if sub_diag && r == c { 1.0 } else { 0.0 };
                    acc += av * bv;
                }
            }
            acc
        };
        inner(&self.w[i], &self.w[j], false)
            + inner(&self.x[i], &self.x[j], i == 0)
            + inner(&self.z[i], &self.z[j], i == 0)
            + inner(&self.y[i], &self.y[j], false)
    }

    /// Squared H2 norm of the performance stack.
    pub fn h2_sq(&self) -> Result<f64> {
        match self.domain {
            Domain::Z => {
                let mut acc = 0.0;
                for i in 0..=self.horizon {
                    acc += self.stack_inner(i, i);
                }
                Ok(acc)
            }
            Domain::S => {
                let bound = |m: &DMatrix<f64>, sub: bool| {
                    let mut worst = 0.0f64;
                    for r in 0..m.nrows() {
                        for c in 0..m.ncols() {
                            let v = m[(r, c)] - if sub && r == c { 1.0 } else { 0.0 };
                            worst = worst.max(v.abs());
                        }
                    }
                    worst
                };
                let leading = bound(&self.x[0], true)
                    .max(bound(&self.z[0], true))
                    .max(bound(&self.y[0], false))
                    .max(bound(&self.w[0], false));
                if leading > 1e-9 {
                    return Err(Error::InfiniteH2Norm(format!(
                        "nonzero feedthrough in the performance stack \
                         (leading coefficient defect {leading:.3e})"
                    )));
                }
                let n = self.horizon;
                if n == 0 {
                    return Ok(0.0);
                }
                let gamma = gram_matrix(self.pole_shift.unwrap(), n);
                let mut acc = 0.0;
                for i in 1..=n {
                    for j in 1..=n {
                        acc += gamma[(i - 1, j - 1)] * self.stack_inner(i, j);
                    }
                }
                Ok(acc)
            }
        }
    }

    pub fn h2_norm(&self) -> Result<f64> {
        Ok(self.h2_sq()?.max(0.0).sqrt())
    }
}

/// Gram matrix of the continuous basis functions (s+a)^-i, i = 1..=n:
/// `Gamma[i][j] = binom(i+j-2, i-1) / (2a)^(i+j-1)` (1-indexed).
pub fn gram_matrix(a: f64, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i0, j0| {
        let (i, j) = (i0 + 1, j0 + 1);
        binomial(i + j - 2, i - 1) / (2.0 * a).powi((i + j - 1) as i32)
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0;
    for t in 0..k {
        acc = acc * (n - t) as f64 / (t + 1) as f64;
    }
    acc
}

#[derive(Serialize, Deserialize)]
struct ParamWire {
    domain: Domain,
    #[serde(rename = "N")]
    horizon: usize,
    #[serde(rename = "a", default, skip_serializing_if = "Option::is_none")]
    pole_shift: Option<f64>,
    #[serde(rename = "Xc")]
    x: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "Yc")]
    y: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "Wc")]
    w: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "Zc")]
    z: Vec<Vec<Vec<f64>>>,
}

fn grids_to_mats(grids: Vec<Vec<Vec<f64>>>) -> Result<Vec<DMatrix<f64>>> {
    grids
        .into_iter()
        .map(|g| {
            let rows = g.len();
            let cols = g.first().map(|r| r.len()).unwrap_or(0);
            if rows == 0 || cols == 0 || g.iter().any(|r| r.len() != cols) {
                return Err(Error::DimensionMismatch(
                    "ragged or empty coefficient matrix".into(),
                ));
            }
            if g.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(
                    "non-finite coefficient in truncation".into(),
                ));
            }
            Ok(DMatrix::from_fn(rows, cols, |i, j| g[i][j]))
        })
        .collect()
}

fn mats_to_grids(mats: &[DMatrix<f64>]) -> Vec<Vec<Vec<f64>>> {
    mats.iter()
        .map(|m| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect()
        })
        .collect()
}

impl TryFrom<ParamWire> for TruncatedParam {
    type Error = Error;

    fn try_from(w: ParamWire) -> Result<Self> {
        TruncatedParam::new(
            w.domain,
            w.horizon,
            w.pole_shift,
            grids_to_mats(w.x)?,
            grids_to_mats(w.y)?,
            grids_to_mats(w.w)?,
            grids_to_mats(w.z)?,
        )
    }
}

impl From<TruncatedParam> for ParamWire {
    fn from(t: TruncatedParam) -> Self {
        ParamWire {
            domain: t.domain,
            horizon: t.horizon,
            pole_shift: t.pole_shift,
            x: mats_to_grids(&t.x),
            y: mats_to_grids(&t.y),
            w: mats_to_grids(&t.w),
            z: mats_to_grids(&t.z),
        }
    }
}
