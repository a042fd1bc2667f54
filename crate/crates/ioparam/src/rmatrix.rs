//! Matrices of rational functions over a common transform variable.
//!
//! A [`RationalMatrix`] carries its domain: `z` for discrete time, where
//! stability means all poles strictly inside the unit circle, or `s` for
//! continuous time, where stability means all poles strictly in the open
//! left half plane. Both checks leave a small margin so that poles within
//! rounding distance of the boundary are classified as unstable rather
//! than silently accepted.
//!
//! The inverse runs Gauss-Jordan elimination directly in rational-function
//! arithmetic. Every intermediate stays in reduced form with its pole
//! multiset tracked compositionally, so structural zeros are preserved
//! exactly and root finding only ever happens on low-degree reciprocal
//! numerators instead of a full determinant polynomial.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::rational::{multiset_diff, multiset_extra, RationalFunction};

/// Distance to the stability boundary below which a pole is treated as
/// unstable.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Transform variable of a rational matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Discrete time; stability region is the open unit disk.
    Z,
    /// Continuous time; stability region is the open left half plane.
    S,
}

impl Domain {
    pub fn var(&self) -> &'static str {
        match self {
            Domain::Z => "z",
            Domain::S => "s",
        }
    }

    /// Whether a pole at `p` lies in the open stability region, margin
    /// included.
    pub fn pole_is_stable(&self, p: Complex64) -> bool {
        match self {
            Domain::Z => p.norm() < 1.0 - STABILITY_MARGIN,
            Domain::S => p.re < -STABILITY_MARGIN,
        }
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.var())
    }
}

/// A dense matrix of rational functions sharing one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RmWire", into = "RmWire")]
pub struct RationalMatrix {
    domain: Domain,
    nrows: usize,
    ncols: usize,
    entries: Vec<RationalFunction>,
}

impl RationalMatrix {
    pub fn from_fn<F>(domain: Domain, nrows: usize, ncols: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> RationalFunction,
    {
        let mut entries = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                entries.push(f(i, j));
            }
        }
        RationalMatrix {
            domain,
            nrows,
            ncols,
            entries,
        }
    }

    pub fn zeros(domain: Domain, nrows: usize, ncols: usize) -> Self {
        Self::from_fn(domain, nrows, ncols, |_, _| RationalFunction::zero())
    }

    pub fn identity(domain: Domain, n: usize) -> Self {
        Self::from_fn(domain, n, n, |i, j| {
            if i == j {
                RationalFunction::one()
            } else {
                RationalFunction::zero()
            }
        })
    }

    pub fn from_rows(domain: Domain, rows: Vec<Vec<RationalFunction>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
        if nrows == 0 || ncols == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(RationalMatrix {
            domain,
            nrows,
            ncols,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn entry(&self, i: usize, j: usize) -> &RationalFunction {
        &self.entries[i * self.ncols + j]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, v: RationalFunction) {
        self.entries[i * self.ncols + j] = v;
    }

    pub fn entries(&self) -> &[RationalFunction] {
        &self.entries
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch {
                expected: self.domain,
                got: other.domain,
            });
        }
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            domain: self.domain,
            nrows: self.nrows,
            ncols: self.ncols,
            entries: self
                .entries
                .iter()
                .zip(other.entries.iter())
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            domain: self.domain,
            nrows: self.nrows,
            ncols: self.ncols,
            entries: self.entries.iter().map(|e| e.neg()).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            domain: self.domain,
            nrows: self.nrows,
            ncols: self.ncols,
            entries: self.entries.iter().map(|e| e.scale(s)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch {
                expected: self.domain,
                got: other.domain,
            });
        }
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        Ok(Self::from_fn(self.domain, self.nrows, other.ncols, |i, j| {
            let mut acc = RationalFunction::zero();
            for k in 0..self.ncols {
                acc = acc.add(&self.entry(i, k).mul(other.entry(k, j)));
            }
            acc
        }))
    }

    /// All poles of all entries, with multiplicity, unsorted.
    pub fn poles(&self) -> Vec<Complex64> {
        self.entries
            .iter()
            .flat_map(|e| e.poles().iter().copied())
            .collect()
    }

    /// Poles outside the open stability region of the domain.
    pub fn unstable_poles(&self) -> Vec<Complex64> {
        self.poles()
            .into_iter()
            .filter(|p| !self.domain.pole_is_stable(*p))
            .collect()
    }

    pub fn is_stable(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.poles().iter().all(|p| self.domain.pole_is_stable(*p)))
    }

    pub fn is_proper(&self) -> bool {
        self.entries.iter().all(|e| e.is_proper())
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.entries.iter().all(|e| e.is_strictly_proper())
    }

    pub fn eval(&self, x: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.nrows, self.ncols, |i, j| self.entry(i, j).eval(x))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self
                .entries
                .iter()
                .zip(other.entries.iter())
                .all(|(a, b)| a.approx_eq(b, tol))
    }

    /// Inverse as a rational matrix via Gauss-Jordan elimination carried
    /// out in rational-function arithmetic.
    ///
    /// Working entrywise keeps every intermediate in reduced form with its
    /// pole multiset known, so structural zeros stay exactly zero and no
    /// high-multiplicity determinant polynomial is ever formed or
    /// re-factored. Pivots are chosen by magnitude at a generic complex
    /// probe point.
    ///
    /// Fails with [`Error::SingularMatrix`] when some column has no
    /// nonzero pivot left, which is how a structurally singular matrix
    /// surfaces under exact zero propagation.
    pub fn inverse(&self) -> Result<Self> {
        if self.nrows != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "inverse of {}x{}",
                self.nrows, self.ncols
            )));
        }
        let n = self.nrows;
        let probe = Complex64::new(0.9481297134, 1.3147298571);
        let magnitude = |e: &RationalFunction| {
            let den = e.den().eval(probe).norm();
            e.num().eval(probe).norm() / den
        };

        let mut a: Vec<Vec<RationalFunction>> = (0..n)
            .map(|i| (0..n).map(|j| self.entry(i, j).clone()).collect())
            .collect();
        let mut inv: Vec<Vec<RationalFunction>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            RationalFunction::one()
                        } else {
                            RationalFunction::zero()
                        }
                    })
                    .collect()
            })
            .collect();

        for col in 0..n {
            let (best_row, best_mag) = (col..n)
                .filter(|&r| !a[r][col].is_zero())
                .map(|r| (r, magnitude(&a[r][col])))
                .filter(|(_, m)| m.is_finite() || *m == f64::INFINITY)
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .ok_or(Error::SingularMatrix)?;
            // Keep the diagonal pivot whenever it is usable: row swaps turn
            // entries of the inverse that are zero by the matrix's zero
            // pattern (elimination fill follows paths of the support graph)
            // into floating cancellations, while rational division is exact
            // for any nonzero pivot, so only a severely degenerate diagonal
            // justifies trading exact structural zeros for magnitude.
            let pivot_row = if !a[col][col].is_zero()
                && best_mag.is_finite()
                && magnitude(&a[col][col]) >= 1e-8 * best_mag
            {
                col
            } else {
                best_row
            };
            a.swap(col, pivot_row);
            inv.swap(col, pivot_row);

            let piv_inv = a[col][col].recip()?;
            for j in 0..n {
                if j != col {
                    a[col][j] = a[col][j].mul(&piv_inv);
                }
                inv[col][j] = inv[col][j].mul(&piv_inv);
            }
            a[col][col] = RationalFunction::one();

            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let f = std::mem::replace(&mut a[r][col], RationalFunction::zero());
                for j in 0..n {
                    if j != col {
                        a[r][j] = a[r][j].sub(&f.mul(&a[col][j]));
                    }
                    inv[r][j] = inv[r][j].sub(&f.mul(&inv[col][j]));
                }
            }
        }

        // Elimination can leave entries degraded: near-common factors the
        // gated cancellation refused to touch inflate degrees while the
        // coefficients drift. Direct numeric inversion at sample nodes
        // bypasses rational arithmetic entirely, so certify each entry
        // against those values and refit the ones that fail.
        let cap = inv
            .iter()
            .flatten()
            .filter_map(|e| e.den().degree())
            .max()
            .unwrap_or(0)
            .min(24);
        let fit_nodes = self.numeric_inverse_samples(&[0.83, 1.29], 0.37, 2 * (2 * cap + 1) + 16);
        let hold_nodes = self.numeric_inverse_samples(&[1.07, 0.64], 0.11, 2 * (2 * cap + 1) + 21);
        let certify = fit_nodes.len() >= 24.min(2 * cap + 9) && hold_nodes.len() >= 12;

        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in inv.into_iter().enumerate() {
            for (j, e) in row.into_iter().enumerate() {
                if !certify {
                    entries.push(e);
                    continue;
                }
                let fit: Vec<_> = fit_nodes.iter().map(|(z, w)| (*z, w[(i, j)])).collect();
                let hold: Vec<_> = hold_nodes.iter().map(|(z, w)| (*z, w[(i, j)])).collect();
                if e.matches_samples(&fit, REFIT_TOL) && e.matches_samples(&hold, REFIT_TOL) {
                    entries.push(e);
                    continue;
                }
                let excess = match (e.num().degree(), e.den().degree()) {
                    (Some(nd), Some(dd)) => nd.saturating_sub(dd),
                    _ => 0,
                };
                match RationalFunction::fit_minimal_from_samples(&fit, &hold, cap, excess, REFIT_TOL)
                {
                    Some(fitted) => entries.push(fitted),
                    None => entries.push(e),
                }
            }
        }
        Ok(RationalMatrix {
            domain: self.domain,
            nrows: n,
            ncols: n,
            entries,
        })
    }

    /// Root multiset of the least common denominator across all entries,
    /// assembled from the cached per-entry pole multisets.
    pub(crate) fn den_lcm_roots(&self) -> Vec<Complex64> {
        let mut lcm: Vec<Complex64> = Vec::new();
        for e in &self.entries {
            let extra = multiset_extra(&lcm, e.poles());
            lcm.extend(extra);
        }
        lcm
    }

    /// Numerators after lifting every entry onto the common denominator
    /// with the given root multiset, which must cover each entry's poles.
    pub(crate) fn lifted_numerators(&self, lcm: &[Complex64]) -> Vec<Vec<Polynomial>> {
        (0..self.nrows)
            .map(|i| {
                (0..self.ncols)
                    .map(|j| {
                        let e = self.entry(i, j);
                        if e.is_zero() {
                            return Polynomial::zero();
                        }
                        let lift = Polynomial::from_roots(&multiset_diff(lcm, e.poles()));
                        e.num().mul(&lift)
                    })
                    .collect()
            })
            .collect()
    }

    /// Value at infinity of a proper matrix: the ratio of leading
    /// coefficients where numerator and denominator degrees match, zero
    /// where the entry is strictly proper.
    pub fn feedthrough(&self) -> Result<DMatrix<f64>> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                let e = self.entry(i, j);
                if e.is_zero() {
                    continue;
                }
                let (nd, dd) = (e.num().degree().unwrap_or(0), e.den().degree().unwrap_or(0));
                if nd > dd {
                    return Err(Error::InvalidInput(
                        "feedthrough of an improper matrix".into(),
                    ));
                }
                if nd == dd {
                    d[(i, j)] = e.num().leading() / e.den().leading();
                }
            }
        }
        Ok(d)
    }

    /// Entrywise rendering with the domain variable, for reports.
    pub fn to_pretty_string(&self) -> String {
        let var = self.domain.var();
        let mut out = String::new();
        for i in 0..self.nrows {
            let row: Vec<String> = (0..self.ncols)
                .map(|j| self.entry(i, j).to_string_var(var))
                .collect();
            out.push_str("[ ");
            out.push_str(&row.join(" , "));
            out.push_str(" ]\n");
        }
        out
    }
}

/// Adjugate and determinant of a square polynomial matrix.
///
/// `det P` and every entry of `adj P` are polynomials of degree at most
/// the sum of the per-row maximum degrees, so their coefficients are
/// recovered exactly by uniform sampling on the unit circle and inverse
/// discrete Fourier sums. Every sample is a plain complex LU
/// factorization; nodes near a zero of the determinant fall back to
/// cofactor minors, which stay bounded where the matrix is singular.
/// Fraction-free elimination computes the same polynomials exactly in
/// exact arithmetic, but in floating point its exact divisions shed many
/// digits whenever a pivot's leading coefficient sits far below its
/// largest one; sampled recovery has no such amplification and comes out
/// accurate relative to the matrix's magnitude on the circle. The caller
/// gets `(adj P, det P)` with `adj P = det(P) P^-1`, which turns one
/// rational matrix inverse into a single root extraction of `det P`.
pub(crate) fn poly_adjugate_det(p: &[Vec<Polynomial>]) -> Result<(Vec<Vec<Polynomial>>, Polynomial)> {
    let n = p.len();
    if n == 0 || p.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("adjugate of a non-square grid".into()));
    }
    let bound: usize = p
        .iter()
        .map(|row| row.iter().filter_map(Polynomial::degree).max().unwrap_or(0))
        .sum();
    let nodes: Vec<Complex64> = (0..2 * (bound + 1))
        .map(|j| {
            let t = std::f64::consts::TAU * (j as f64 + 0.5) / (2 * (bound + 1)) as f64;
            Complex64::new(t.cos(), t.sin())
        })
        .collect();
    let at = |z: Complex64| DMatrix::from_fn(n, n, |i, j| p[i][j].eval(z));

    let dets: Vec<Complex64> = nodes.iter().map(|&z| at(z).lu().determinant()).collect();
    let det_peak = dets.iter().map(|d| d.norm()).fold(0.0f64, f64::max);
    // a determinant that never rises above rounding level relative to the
    // row-scale product is identically zero
    let hadamard: f64 = p
        .iter()
        .map(|row| row.iter().map(|q| q.eval_scale(1.0)).fold(0.0f64, f64::max))
        .product();
    if det_peak <= 1e-12 * hadamard {
        return Err(Error::SingularMatrix);
    }
    let adj_samples: Vec<DMatrix<Complex64>> = nodes
        .iter()
        .zip(&dets)
        .map(|(&z, d)| {
            let a = at(z);
            if d.norm() >= 1e-4 * det_peak {
                if let Some(inv) = a.clone().lu().try_inverse() {
                    return inv * *d;
                }
            }
            cofactor_adjugate(&a)
        })
        .collect();

    let det = circle_interp(&nodes, &dets, bound);
    let adj: Vec<Vec<Polynomial>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    let vals: Vec<Complex64> = adj_samples.iter().map(|s| s[(r, c)]).collect();
                    circle_interp(&nodes, &vals, bound)
                })
                .collect()
        })
        .collect();

    // entries that are pure round-off against the adjugate's scale are
    // structural zeros smeared by the sampling noise
    let peak = adj
        .iter()
        .flatten()
        .fold(0.0f64, |s, q| s.max(q.max_abs_coeff()));
    let adj = adj
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|q| {
                    if q.max_abs_coeff() <= 1e-12 * peak {
                        Polynomial::zero()
                    } else {
                        q
                    }
                })
                .collect()
        })
        .collect();
    Ok((adj, det))
}

/// Coefficients of a polynomial of degree at most `bound` from its values
/// at uniform unit-circle nodes: `c_k` is the mean of `v_j z_j^-k`, exact
/// whenever the node count exceeds the degree, and noise at any single
/// node is averaged down by the full sum.
fn circle_interp(nodes: &[Complex64], vals: &[Complex64], bound: usize) -> Polynomial {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); bound + 1];
    for (&z, &v) in nodes.iter().zip(vals) {
        let step = z.conj();
        let mut w = Complex64::new(1.0, 0.0);
        for c in coeffs.iter_mut() {
            *c += v * w;
            w *= step;
        }
    }
    let m = nodes.len() as f64;
    Polynomial::new(coeffs.into_iter().map(|c| c.re / m).collect()).trim_relative(1e-11)
}

/// Adjugate by explicit cofactor minors: each entry is the determinant of
/// an (n-1) x (n-1) submatrix, so the result stays accurate even where
/// the matrix itself is singular and `det P^-1` is unusable.
fn cofactor_adjugate(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    }
    DMatrix::from_fn(n, n, |r, c| {
        let minor = a.clone().remove_row(c).remove_column(r);
        let d = minor.lu().determinant();
        if (r + c) % 2 == 0 {
            d
        } else {
            -d
        }
    })
}

#[derive(Serialize, Deserialize)]
struct RmWire {
    domain: Domain,
    rows: usize,
    cols: usize,
    entries: Vec<Vec<RationalFunction>>,
}

impl TryFrom<RmWire> for RationalMatrix {
    type Error = Error;

    fn try_from(w: RmWire) -> Result<Self> {
        if w.entries.len() != w.rows || w.entries.iter().any(|r| r.len() != w.cols) {
            return Err(Error::DimensionMismatch(
                "entry grid does not match declared rows/cols".into(),
            ));
        }
        RationalMatrix::from_rows(w.domain, w.entries)
    }
}

impl From<RationalMatrix> for RmWire {
    fn from(m: RationalMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.nrows);
        for i in 0..m.nrows {
            entries.push((0..m.ncols).map(|j| m.entry(i, j).clone()).collect());
        }
        RmWire {
            domain: m.domain,
            rows: m.nrows,
            cols: m.ncols,
            entries,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(num: &[f64], den: &[f64]) -> RationalFunction {
        RationalFunction::from_coeffs(num, den).unwrap()
    }

    fn lower_2x2() -> RationalMatrix {
        RationalMatrix::from_rows(
            Domain::Z,
            vec![
                vec![rf(&[1.0], &[-0.5, 1.0]), RationalFunction::zero()],
                vec![rf(&[1.0], &[-2.0, 1.0]), rf(&[1.0], &[-0.5, 1.0])],
            ],
        )
        .unwrap()
    }

    #[test]
    fn product_against_hand_expansion() {
        let a = lower_2x2();
        let b = RationalMatrix::from_rows(
            Domain::Z,
            vec![
                vec![rf(&[-0.5, 1.0], &[1.0]), RationalFunction::zero()],
                vec![RationalFunction::zero(), rf(&[-0.5, 1.0], &[1.0])],
            ],
        )
        .unwrap();
        let p = a.mul(&b).unwrap();
        assert!(p.entry(0, 0).approx_eq(&RationalFunction::one(), 1e-12));
        assert!(p
            .entry(1, 0)
            .approx_eq(&rf(&[-0.5, 1.0], &[-2.0, 1.0]), 1e-12));
        assert!(p.entry(1, 1).approx_eq(&RationalFunction::one(), 1e-12));
    }

    #[test]
    fn inverse_times_original_is_identity() {
        let a = RationalMatrix::from_rows(
            Domain::Z,
            vec![
                vec![rf(&[1.0, 1.0], &[-0.5, 1.0]), rf(&[1.0], &[-0.5, 1.0])],
                vec![rf(&[1.0], &[-2.0, 1.0]), rf(&[3.0], &[1.0])],
            ],
        )
        .unwrap();
        let inv = a.inverse().unwrap();
        let prod = a.mul(&inv).unwrap();
        assert!(prod.approx_eq(&RationalMatrix::identity(Domain::Z, 2), 1e-9));
        let prod2 = inv.mul(&a).unwrap();
        assert!(prod2.approx_eq(&RationalMatrix::identity(Domain::Z, 2), 1e-9));
    }

    #[test]
    fn triangular_inverse_is_exact() {
        let a = lower_2x2();
        let inv = a.inverse().unwrap();
        // inverse of [[g,0],[h,g]] is [[1/g,0],[-h/g^2,1/g]]
        assert!(inv.entry(0, 0).approx_eq(&rf(&[-0.5, 1.0], &[1.0]), 1e-12));
        assert!(inv.entry(0, 1).is_zero());
        let h = rf(&[1.0], &[-2.0, 1.0]);
        let g_inv = rf(&[-0.5, 1.0], &[1.0]);
        let want = h.mul(&g_inv).mul(&g_inv).neg();
        assert!(inv.entry(1, 0).approx_eq(&want, 1e-10));
    }

    #[test]
    fn rank_deficient_matrix_is_rejected() {
        let row = vec![rf(&[1.0], &[-0.5, 1.0]), rf(&[2.0], &[-0.5, 1.0])];
        let a = RationalMatrix::from_rows(Domain::Z, vec![row.clone(), row]).unwrap();
        assert!(matches!(a.inverse(), Err(Error::SingularMatrix)));
    }

    #[test]
    fn stability_depends_on_domain() {
        let stable_z = RationalMatrix::from_fn(Domain::Z, 1, 1, |_, _| rf(&[1.0], &[-0.5, 1.0]));
        assert!(stable_z.is_stable());
        let unstable_z = RationalMatrix::from_fn(Domain::Z, 1, 1, |_, _| rf(&[1.0], &[-2.0, 1.0]));
        assert!(!unstable_z.is_stable());
        assert_eq!(unstable_z.unstable_poles().len(), 1);
        // s-domain: pole at -1 stable, pole at +1 unstable
        let stable_s = RationalMatrix::from_fn(Domain::S, 1, 1, |_, _| rf(&[1.0], &[1.0, 1.0]));
        assert!(stable_s.is_stable());
        let unstable_s = RationalMatrix::from_fn(Domain::S, 1, 1, |_, _| rf(&[1.0], &[-1.0, 1.0]));
        assert!(!unstable_s.is_stable());
        // margin: a pole exactly on the unit circle is not stable
        let boundary = RationalMatrix::from_fn(Domain::Z, 1, 1, |_, _| rf(&[1.0], &[-1.0, 1.0]));
        assert!(!boundary.is_stable());
    }

    #[test]
    fn eval_matches_entrywise_evaluation() {
        let a = lower_2x2();
        let x = Complex64::new(0.3, 0.7);
        let v = a.eval(x);
        assert!((v[(0, 0)] - a.entry(0, 0).eval(x)).norm() < 1e-14);
        assert!((v[(1, 0)] - a.entry(1, 0).eval(x)).norm() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let a = lower_2x2();
        let text = serde_json::to_string(&a).unwrap();
        let back: RationalMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(a, back);
        // declared dimensions must match the entry grid
        let bad = r#"{"domain":"z","rows":2,"cols":1,"entries":[[{"num":[1.0],"den":[1.0]}]]}"#;
        assert!(serde_json::from_str::<RationalMatrix>(bad).is_err());
    }

    #[test]
    fn properness_of_matrix() {
        let strictly = lower_2x2();
        assert!(strictly.is_strictly_proper());
        let proper = RationalMatrix::from_fn(Domain::Z, 1, 1, |_, _| rf(&[1.0, 1.0], &[-0.5, 1.0]));
        assert!(proper.is_proper() && !proper.is_strictly_proper());
    }

    fn pc(coeffs: &[f64]) -> Polynomial {
        Polynomial::from_coeffs(coeffs)
    }

    #[test]
    fn adjugate_of_2x2_matches_hand_swap() {
        // adj [[a, b], [c, d]] = [[d, -b], [-c, a]]
        let (a, b) = (pc(&[1.0, 2.0]), pc(&[3.0]));
        let (c, d) = (pc(&[0.0, 1.0]), pc(&[-1.0, 0.0, 1.0]));
        let grid = vec![vec![a.clone(), b.clone()], vec![c.clone(), d.clone()]];
        let (adj, det) = poly_adjugate_det(&grid).unwrap();
        let want_det = a.mul(&d).sub(&b.mul(&c));
        assert!(det.sub(&want_det).max_abs_coeff() < 1e-12);
        assert!(adj[0][0].sub(&d).max_abs_coeff() < 1e-12);
        assert!(adj[0][1].add(&b).max_abs_coeff() < 1e-12);
        assert!(adj[1][0].add(&c).max_abs_coeff() < 1e-12);
        assert!(adj[1][1].sub(&a).max_abs_coeff() < 1e-12);
    }

    #[test]
    fn adjugate_identity_holds_with_boundary_det_zeros() {
        // det = (x^2 + 1)(x - 1)(x + 2) has two roots on the unit circle,
        // so some sampling nodes sit close to a singular evaluation
        let grid = vec![
            vec![pc(&[1.0, 0.0, 1.0]), Polynomial::zero()],
            vec![pc(&[0.3, 0.7]), pc(&[-2.0, -1.0, 1.0])],
        ];
        let (adj, det) = poly_adjugate_det(&grid).unwrap();
        let want = pc(&[1.0, 0.0, 1.0]).mul(&pc(&[-2.0, -1.0, 1.0]));
        assert!(det.sub(&want).max_abs_coeff() < 1e-11);
        // P adj = det I in coefficient space
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Polynomial::zero();
                for l in 0..2 {
                    acc = acc.add(&grid[i][l].mul(&adj[l][j]));
                }
                if i == j {
                    acc = acc.sub(&det);
                }
                assert!(acc.max_abs_coeff() < 1e-11, "entry ({i},{j}): {acc:?}");
            }
        }
        // the structural zero stays an exact zero
        assert!(adj[0][1].is_zero() || adj[0][1].max_abs_coeff() < 1e-13);
    }

    #[test]
    fn adjugate_rejects_singular_grid() {
        let row = vec![pc(&[1.0, 1.0]), pc(&[2.0, 2.0])];
        let grid = vec![row.clone(), row];
        assert!(matches!(poly_adjugate_det(&grid), Err(Error::SingularMatrix)));
    }
}
