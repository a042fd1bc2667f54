//! Closed-loop response maps and their verification.
//!
//! For a plant `G` (p x m, strictly proper) and controller `K` (m x p,
//! proper), the four closed-loop responses mapping the loop disturbances
//! to the loop signals are
//!
//! ```text
//!   X = (I - G K)^-1          (p x p,  output disturbance to output)
//!   Y = K (I - G K)^-1        (m x p,  output disturbance to input)
//!   W = (I - G K)^-1 G        (p x m,  input disturbance to output)
//!   Z = (I - K G)^-1          (m x m,  input disturbance to input)
//! ```
//!
//! The controller internally stabilizes the plant exactly when all four
//! maps are stable. The quadruple ranges over the affine subspace
//!
//! ```text
//!   [I  -G] [X  W]   [I  0]      [X  W] [-G]   [0]
//!           [Y  Z] =           , [Y  Z] [ I] = [I]
//! ```
//!
//! with all four blocks stable and proper, and the controller is recovered
//! from any member as `K = Y X^-1`. Membership is checked by clearing each
//! defect entry onto a common denominator and measuring the largest
//! numerator coefficient relative to the operands' coefficient scale, so
//! an exact member reports a residual of exactly zero.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::rational::RationalFunction;
use crate::rmatrix::{poly_adjugate_det, Domain, RationalMatrix};

/// Default residual tolerance for affine-subspace membership.
pub const MEMBERSHIP_TOL: f64 = 1e-6;

/// The four closed-loop response maps of an output-feedback loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadWire", into = "QuadWire")]
pub struct ClosedLoopQuad {
    pub x: RationalMatrix,
    pub y: RationalMatrix,
    pub w: RationalMatrix,
    pub z: RationalMatrix,
}

impl ClosedLoopQuad {
    /// Output dimension p.
    pub fn p(&self) -> usize {
        self.x.nrows()
    }

    /// Input dimension m.
    pub fn m(&self) -> usize {
        self.z.nrows()
    }

    pub fn domain(&self) -> Domain {
        self.x.domain()
    }

    fn validate(self) -> Result<Self> {
        let (p, m) = (self.x.nrows(), self.z.nrows());
        let shapes_ok = self.x.ncols() == p
            && self.z.ncols() == m
            && self.y.nrows() == m
            && self.y.ncols() == p
            && self.w.nrows() == p
            && self.w.ncols() == m;
        if !shapes_ok {
            return Err(Error::DimensionMismatch(
                "closed-loop quadruple blocks have inconsistent shapes".into(),
            ));
        }
        let d = self.x.domain();
        for b in [&self.y, &self.w, &self.z] {
            if b.domain() != d {
                return Err(Error::DomainMismatch {
                    expected: d,
                    got: b.domain(),
                });
            }
        }
        Ok(self)
    }

    pub fn new(
        x: RationalMatrix,
        y: RationalMatrix,
        w: RationalMatrix,
        z: RationalMatrix,
    ) -> Result<Self> {
        ClosedLoopQuad { x, y, w, z }.validate()
    }

    pub fn blocks(&self) -> [(&'static str, &RationalMatrix); 4] {
        [
            ("X", &self.x),
            ("Y", &self.y),
            ("W", &self.w),
            ("Z", &self.z),
        ]
    }
}

#[derive(Serialize, Deserialize)]
struct QuadWire {
    #[serde(rename = "X")]
    x: RationalMatrix,
    #[serde(rename = "Y")]
    y: RationalMatrix,
    #[serde(rename = "W")]
    w: RationalMatrix,
    #[serde(rename = "Z")]
    z: RationalMatrix,
}

impl TryFrom<QuadWire> for ClosedLoopQuad {
    type Error = Error;

    fn try_from(w: QuadWire) -> Result<Self> {
        ClosedLoopQuad::new(w.x, w.y, w.w, w.z)
    }
}

impl From<ClosedLoopQuad> for QuadWire {
    fn from(q: ClosedLoopQuad) -> Self {
        QuadWire {
            x: q.x,
            y: q.y,
            w: q.w,
            z: q.z,
        }
    }
}

fn check_loop_dims(g: &RationalMatrix, k: &RationalMatrix) -> Result<(usize, usize)> {
    if g.domain() != k.domain() {
        return Err(Error::DomainMismatch {
            expected: g.domain(),
            got: k.domain(),
        });
    }
    if k.nrows() != g.ncols() || k.ncols() != g.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "plant {}x{} with controller {}x{}",
            g.nrows(),
            g.ncols(),
            k.nrows(),
            k.ncols()
        )));
    }
    Ok((g.nrows(), g.ncols()))
}

/// Computes the closed-loop quadruple of plant `G` and controller `K`.
///
/// `G` must be strictly proper (so the loop has no algebraic feedthrough
/// cycle) and `K` proper.
pub fn closed_loop_maps(g: &RationalMatrix, k: &RationalMatrix) -> Result<ClosedLoopQuad> {
    let (p, m) = check_loop_dims(g, k)?;
    if !g.is_strictly_proper() {
        return Err(Error::ImproperPlant(format!(
            "{}x{} plant has an entry with numerator degree >= denominator degree",
            p, m
        )));
    }
    if !k.is_proper() {
        return Err(Error::ImproperController);
    }
    let gk = g.mul(k)?;
    let x = match RationalMatrix::identity(g.domain(), p).sub(&gk)?.inverse() {
        Ok(x) => x,
        Err(Error::SingularMatrix) => return Err(Error::IllPosed),
        Err(e) => return Err(e),
    };
    let y = k.mul(&x)?;
    let w = x.mul(g)?;
    // (I - K G)^-1 = I + K (I - G K)^-1 G
    let z = RationalMatrix::identity(g.domain(), m).add(&k.mul(&w)?)?;
    ClosedLoopQuad::new(x, y, w, z)
}

/// Recovers the controller `K = Y X^-1` from a quadruple on the subspace.
///
/// `X` and `Y` are lifted onto their common denominators and the inverse
/// is taken as `adj / det` of the lifted numerator grid of `X`, so every
/// entry of `K` comes out over the single denominator `den(Y) det` and
/// entry degrees stay bounded by the determinant degree no matter how
/// high the quadruple's order is. Entries whose numerator is pure
/// round-off relative to the largest recovered numerator are snapped to
/// exact zero, which keeps solver noise out of sparsity checks.
pub fn recover_controller(quad: &ClosedLoopQuad) -> Result<RationalMatrix> {
    let (p, m) = (quad.p(), quad.m());
    // Quadruples assembled elsewhere may carry uncancelled factors; the
    // common-denominator lift squares that excess, so reduce first.
    let xr = RationalMatrix::from_fn(quad.domain(), p, p, |i, j| {
        let e = quad.x.entry(i, j);
        e.refit_minimal().unwrap_or_else(|| e.clone())
    });
    let yr = RationalMatrix::from_fn(quad.domain(), m, p, |i, j| {
        let e = quad.y.entry(i, j);
        e.refit_minimal().unwrap_or_else(|| e.clone())
    });
    let x_den_roots = xr.den_lcm_roots();
    let y_den_roots = yr.den_lcm_roots();
    let px = xr.lifted_numerators(&x_den_roots);
    let qy = yr.lifted_numerators(&y_den_roots);
    let (adj, det) = poly_adjugate_det(&px)?;
    let x_den = Polynomial::from_roots(&x_den_roots);

    // K = (Q / den_Y) (P / den_X)^-1 = Q adj(P) den_X / (den_Y det P)
    let nums: Vec<Vec<Polynomial>> = (0..m)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let mut acc = Polynomial::zero();
                    for l in 0..p {
                        acc = acc.add(&qy[i][l].mul(&adj[l][j]));
                    }
                    acc.mul(&x_den)
                })
                .collect()
        })
        .collect();
    let scale = nums
        .iter()
        .flatten()
        .fold(0.0f64, |s, n| s.max(n.max_abs_coeff()));

    let den = det.mul(&Polynomial::from_roots(&y_den_roots));
    let mut den_roots = det.roots();
    den_roots.extend_from_slice(&y_den_roots);

    Ok(RationalMatrix::from_fn(quad.domain(), m, p, |i, j| {
        let n = &nums[i][j];
        if n.max_abs_coeff() <= 1e-12 * scale {
            RationalFunction::zero()
        } else {
            let e = RationalFunction::normalized(n.clone(), den.clone(), den_roots.clone());
            e.refit_minimal().unwrap_or(e)
        }
    }))
}

/// Stability verdict for one closed-loop block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockStability {
    pub name: String,
    pub stable: bool,
    pub proper: bool,
    /// All poles as (re, im) pairs, sorted for reproducible reports.
    pub poles: Vec<(f64, f64)>,
    /// Poles outside the open stability region.
    pub unstable_poles: Vec<(f64, f64)>,
}

/// Internal-stability verdict with per-block diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stabilizing: bool,
    pub well_posed: bool,
    pub blocks: Vec<BlockStability>,
}

fn sorted_pairs(mut ps: Vec<Complex64>) -> Vec<(f64, f64)> {
    ps.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    ps.into_iter().map(|c| (c.re, c.im)).collect()
}

pub(crate) fn block_stability(name: &str, m: &RationalMatrix) -> BlockStability {
    BlockStability {
        name: name.to_string(),
        stable: m.is_stable(),
        proper: m.is_proper(),
        poles: sorted_pairs(m.poles()),
        unstable_poles: sorted_pairs(m.unstable_poles()),
    }
}

/// Builds the stability report of a quadruple: stable exactly when all
/// four blocks are stable.
pub fn quad_stability_report(quad: &ClosedLoopQuad, well_posed: bool) -> StabilityReport {
    let blocks: Vec<BlockStability> = quad
        .blocks()
        .iter()
        .map(|(n, b)| block_stability(n, b))
        .collect();
    StabilityReport {
        stabilizing: well_posed && blocks.iter().all(|b| b.stable),
        well_posed,
        blocks,
    }
}

/// Whether `K` internally stabilizes `G`: forms the closed loop and checks
/// all four response maps for stability. An ill-posed loop reports
/// `stabilizing: false` rather than an error.
pub fn is_internally_stabilizing(
    g: &RationalMatrix,
    k: &RationalMatrix,
) -> Result<StabilityReport> {
    match closed_loop_maps(g, k) {
        Ok(quad) => Ok(quad_stability_report(&quad, true)),
        Err(Error::IllPosed) => Ok(StabilityReport {
            stabilizing: false,
            well_posed: false,
            blocks: Vec::new(),
        }),
        Err(e) => Err(e),
    }
}

/// Certificate that `K` is the controller realized by a quadruple on the
/// subspace of `G`, together with the implied internal-stability verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationReport {
    pub stabilizing: bool,
    pub well_posed: bool,
    /// Largest relative pointwise defect of `K X - Y` on the boundary grid.
    pub controller_residual: f64,
    pub membership: MembershipReport,
}

/// Value of a rational entry at `z` together with a first-order envelope
/// of its evaluation noise: one unit in the last place of each stored
/// coefficient moves the value by at most `env` times that relative
/// perturbation. The envelope equals the magnitude for benign
/// coefficients and exceeds it exactly where evaluation is
/// ill-conditioned.
fn eval_with_envelope(e: &RationalFunction, z: Complex64) -> (Complex64, f64) {
    if e.num().is_zero() {
        return (Complex64::new(0.0, 0.0), 0.0);
    }
    let dv = e.den().eval(z);
    let v = e.num().eval(z) / dv;
    let env =
        (e.num().eval_scale(z.norm()) + v.norm() * e.den().eval_scale(z.norm())) / dv.norm();
    (v, env)
}

/// Largest pointwise defect of `K X = Y` over a grid on the stability
/// boundary, measured against the evaluation-noise envelope of the
/// operands. The recovered controller shares stiff factors with `X`
/// whose boundary values dip far below their coefficient scale, so both
/// a coefficient-space residual and a plain value-relative comparison
/// overstate the defect by the evaluation condition number; normalizing
/// by the envelope makes the verdict read "the identity holds at the
/// accuracy the stored coefficients can express". The grid has more than
/// twice as many points as the cleared-denominator degree bound, so a
/// genuine defect cannot vanish on all of it. Samples that overflow (a
/// boundary pole of `K`) are skipped.
fn sampled_controller_defect(quad: &ClosedLoopQuad, k: &RationalMatrix) -> f64 {
    let deg = |m: &RationalMatrix| -> usize {
        let mut d = 0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let e = m.entry(i, j);
                d = d.max(e.num().degree().unwrap_or(0) + e.den().degree().unwrap_or(0));
            }
        }
        d
    };
    let samples = (2 * (deg(k) + deg(&quad.x) + deg(&quad.y)) + 2).max(64);
    let points = (0..samples).map(|j| match quad.domain() {
        Domain::Z => {
            let t = std::f64::consts::TAU * (j as f64 + 0.5) / samples as f64;
            Complex64::new(t.cos(), t.sin())
        }
        Domain::S => {
            let e = -3.0 + 6.0 * j as f64 / (samples - 1) as f64;
            Complex64::new(0.0, 10f64.powf(e))
        }
    });
    let (m, p) = (k.nrows(), k.ncols());
    let mut worst = 0.0f64;
    for z in points {
        for i in 0..m {
            for j in 0..p {
                let (yv, yenv) = eval_with_envelope(quad.y.entry(i, j), z);
                let mut acc = -yv;
                let mut scale = 1.0 + yv.norm() + yenv;
                for l in 0..p {
                    let (kv, kenv) = eval_with_envelope(k.entry(i, l), z);
                    let (xv, xenv) = eval_with_envelope(quad.x.entry(l, j), z);
                    acc += kv * xv;
                    scale += kv.norm() * xv.norm() + kenv * xv.norm() + kv.norm() * xenv;
                }
                let d = acc.norm() / scale;
                if d.is_finite() {
                    worst = worst.max(d);
                }
            }
        }
    }
    worst
}

/// Verifies internal stability of the loop `(G, K)` through a quadruple
/// witness instead of inverting `I - G K`.
///
/// Membership of the quadruple plus `K X = Y` force `(I - G K) X = I`,
/// so when `X` is invertible at infinity the quadruple is exactly the
/// closed loop of `(G, K)` and its block stability decides internal
/// stability. Membership is a coefficient-space residual on the solver's
/// blocks; the controller identity is sampled on the stability boundary,
/// which keeps the verdict trustworthy for high-order parametrizations
/// where re-forming `(I - G K)^-1` in rational arithmetic is hopeless.
pub fn verify_controller_realization(
    g: &RationalMatrix,
    quad: &ClosedLoopQuad,
    k: &RationalMatrix,
    tol: f64,
) -> Result<RealizationReport> {
    check_loop_dims(g, k)?;
    let membership = check_iop_membership(g, quad, tol)?;
    let controller_residual = sampled_controller_defect(quad, k);
    let well_posed = match quad.x.feedthrough() {
        Ok(d) => d.lu().determinant().abs() > 1e-9,
        Err(_) => false,
    };
    Ok(RealizationReport {
        stabilizing: membership.ok && well_posed && controller_residual <= tol,
        well_posed,
        controller_residual,
        membership,
    })
}

/// One addend of a residual entry: a numerator polynomial over an exact
/// denominator polynomial.
pub(crate) struct RawTerm {
    pub num: Polynomial,
    pub den: Polynomial,
}

impl RawTerm {
    pub fn from_rf(r: &RationalFunction, sign: f64) -> Self {
        RawTerm {
            num: r.num().scale(sign),
            den: r.den().clone(),
        }
    }

    pub fn from_product(a: &RationalFunction, b: &RationalFunction, sign: f64) -> Self {
        RawTerm {
            num: a.num().mul(b.num()).scale(sign),
            den: a.den().mul(b.den()),
        }
    }

    pub fn constant(c: f64) -> Self {
        RawTerm {
            num: Polynomial::constant(c),
            den: Polynomial::one(),
        }
    }
}

/// Residual of a sum of terms: all terms are lifted onto the product of
/// the distinct denominators (a common multiple, found by exact
/// coefficient comparison so no root finding or polynomial division is
/// ever involved), summed, and the largest coefficient of the summed
/// numerator is reported relative to the largest lifted-term coefficient.
/// Exactly zero for an exact identity.
pub(crate) fn residual_entry(terms: &[RawTerm]) -> f64 {
    let mut distinct: Vec<&Polynomial> = Vec::new();
    for t in terms {
        if t.num.is_zero() {
            continue;
        }
        if !distinct.iter().any(|d| d.coeffs() == t.den.coeffs()) {
            distinct.push(&t.den);
        }
    }
    let mut sum = Polynomial::zero();
    let mut scale = 1.0f64;
    for t in terms {
        if t.num.is_zero() {
            continue;
        }
        let mut lifted = t.num.clone();
        for d in &distinct {
            if d.coeffs() != t.den.coeffs() {
                lifted = lifted.mul(d);
            }
        }
        scale = scale.max(lifted.max_abs_coeff());
        sum = sum.add(&lifted);
    }
    sum.max_abs_coeff() / scale
}

/// Largest entry residual of a matrix defect expression, with the terms of
/// entry (i, j) supplied by `builder`.
pub(crate) fn max_entry_residual<F>(nrows: usize, ncols: usize, builder: F) -> f64
where
    F: Fn(usize, usize) -> Vec<RawTerm>,
{
    let mut worst = 0.0f64;
    for i in 0..nrows {
        for j in 0..ncols {
            worst = worst.max(residual_entry(&builder(i, j)));
        }
    }
    worst
}

/// Residual norms of the two affine-subspace identities, split by block
/// column: `row_x = X - GY - I`, `row_w = W - GZ`, `col_w = W - XG`,
/// `col_z = Z - YG - I`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembershipResiduals {
    pub row_x: f64,
    pub row_w: f64,
    pub col_w: f64,
    pub col_z: f64,
}

impl MembershipResiduals {
    pub fn max(&self) -> f64 {
        self.row_x.max(self.row_w).max(self.col_w).max(self.col_z)
    }
}

/// Membership verdict of a quadruple in the affine subspace of `G`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembershipReport {
    pub ok: bool,
    pub residuals: MembershipResiduals,
    pub blocks: Vec<BlockStability>,
    pub tol: f64,
}

/// Checks whether a quadruple lies on the affine subspace of `G` within
/// `tol` and has all blocks stable and proper.
pub fn check_iop_membership(
    g: &RationalMatrix,
    quad: &ClosedLoopQuad,
    tol: f64,
) -> Result<MembershipReport> {
    let (p, m) = (g.nrows(), g.ncols());
    if quad.p() != p || quad.m() != m {
        return Err(Error::DimensionMismatch(format!(
            "plant {}x{} with quadruple blocks X {}x{}, Z {}x{}",
            p,
            m,
            quad.x.nrows(),
            quad.x.ncols(),
            quad.z.nrows(),
            quad.z.ncols()
        )));
    }
    if g.domain() != quad.domain() {
        return Err(Error::DomainMismatch {
            expected: g.domain(),
            got: quad.domain(),
        });
    }

    let row_x = max_entry_residual(p, p, |i, j| {
        let mut terms = vec![RawTerm::from_rf(quad.x.entry(i, j), 1.0)];
        for k in 0..m {
            terms.push(RawTerm::from_product(g.entry(i, k), quad.y.entry(k, j), -1.0));
        }
        if i == j {
            terms.push(RawTerm::constant(-1.0));
        }
        terms
    });
    let row_w = max_entry_residual(p, m, |i, j| {
        let mut terms = vec![RawTerm::from_rf(quad.w.entry(i, j), 1.0)];
        for k in 0..m {
            terms.push(RawTerm::from_product(g.entry(i, k), quad.z.entry(k, j), -1.0));
        }
        terms
    });
    let col_w = max_entry_residual(p, m, |i, j| {
        let mut terms = vec![RawTerm::from_rf(quad.w.entry(i, j), 1.0)];
        for k in 0..p {
            terms.push(RawTerm::from_product(quad.x.entry(i, k), g.entry(k, j), -1.0));
        }
        terms
    });
    let col_z = max_entry_residual(m, m, |i, j| {
        let mut terms = vec![RawTerm::from_rf(quad.z.entry(i, j), 1.0)];
        for k in 0..p {
            terms.push(RawTerm::from_product(quad.y.entry(i, k), g.entry(k, j), -1.0));
        }
        if i == j {
            terms.push(RawTerm::constant(-1.0));
        }
        terms
    });

    let residuals = MembershipResiduals {
        row_x,
        row_w,
        col_w,
        col_z,
    };
    let blocks: Vec<BlockStability> = quad
        .blocks()
        .iter()
        .map(|(n, b)| block_stability(n, b))
        .collect();
    let ok = residuals.max() <= tol && blocks.iter().all(|b| b.stable && b.proper);
    Ok(MembershipReport {
        ok,
        residuals,
        blocks,
        tol,
    })
}

/// The map `h_G(K) = -K (I - G K)^-1 = -Y`, whose fixed sparsity under a
/// structural pattern characterizes quadratic invariance.
pub fn h_g_map(g: &RationalMatrix, k: &RationalMatrix) -> Result<RationalMatrix> {
    let quad = closed_loop_maps(g, k)?;
    Ok(quad.y.neg())
}
