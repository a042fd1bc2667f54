//! Scalar rational functions in canonical form.
//!
//! Canonical form: monic denominator, no common factor between numerator
//! and denominator under the cancellation policy below, and an exact zero
//! numerator for the zero function (with denominator one). Alongside the
//! denominator polynomial each value carries the denominator's root
//! multiset; sums and products maintain it compositionally (union for
//! least common multiples, concatenation for products), so pole queries
//! never refactor a composed denominator and eigenvalue root finding is
//! only needed for denominators that enter from outside.
//!
//! Cancellation policy: a numerator/denominator root pair is cancelled
//! when the roots coincide within `CANCEL_TOL * (1 + |root|)`. The test is
//! evaluation-based: for a denominator root d, the Newton step
//! |num(d)| / |num'(d)| estimates the distance to the nearest numerator
//! root; a fallback accepts d when |num(d)| is negligible against the
//! coefficient magnitude scale at radius |d|, which covers tightly
//! clustered multiple roots where the step estimate degrades. Cancelled
//! factors are removed by synthetic division. When nothing cancels, the
//! original coefficients are kept bit for bit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{format_poly, Polynomial};

/// Relative tolerance of the numerator/denominator root cancellation rule.
pub const CANCEL_TOL: f64 = 1e-7;

/// Rounding-level relative threshold for declaring an evaluated residue
/// pure noise.
const VALUE_NOISE_REL: f64 = 1e-11;

/// Relative accuracy demanded of a sum assembled over a shared
/// denominator before the representation-sharing is accepted. Much
/// tighter than `CANCEL_TOL`: a correct lift reproduces the operands to
/// rounding, so anything worse means the cached roots misrepresent a
/// denominator and the exact cross product must be used instead.
const LIFT_TOL: f64 = 1e-9;

/// Relative mismatch against trusted numeric samples above which a carried
/// representation is considered degraded and gets refitted from the samples.
pub(crate) const REFIT_TOL: f64 = 1e-10;

/// Whether two roots are the same root up to the cancellation tolerance.
pub(crate) fn roots_match(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= CANCEL_TOL * (1.0 + a.norm().min(b.norm()))
}

/// Roots of `b` not already covered by a matching root of `a`, counting
/// multiplicity. `a` concatenated with the result is the multiset union
/// of `a` and `b` with per-root maximum multiplicity.
pub(crate) fn multiset_extra(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut used = vec![false; a.len()];
    let mut extra = Vec::new();
    for s in b {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in a.iter().enumerate() {
            if used[i] || !roots_match(*r, *s) {
                continue;
            }
            let d = (r - s).norm();
            if best.map(|(_, bd)| d < bd).unwrap_or(true) {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, _)) => used[i] = true,
            None => extra.push(*s),
        }
    }
    extra
}

/// Removes from `base` the nearest match of each root of `sub` (which must
/// be contained in `base` up to tolerance), counting multiplicity.
pub(crate) fn multiset_diff(base: &[Complex64], sub: &[Complex64]) -> Vec<Complex64> {
    let mut rem: Vec<Complex64> = base.to_vec();
    for s in sub {
        if let Some((idx, _)) = rem
            .iter()
            .enumerate()
            .map(|(i, r)| (i, (r - s).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
        {
            rem.swap_remove(idx);
        }
    }
    rem
}

fn should_cancel(num: &Polynomial, d: Complex64) -> bool {
    let v = num.eval(d).norm();
    let tol = CANCEL_TOL * (1.0 + d.norm());
    if v <= tol * num.derivative().eval(d).norm() {
        return true;
    }
    // Multiple roots defeat the Newton-step test, so fall back to a value
    // test against the evaluation scale at this radius (bounded below by
    // the coefficient scale, which matters at the origin where eval_scale
    // collapses to the trailing coefficient). The margin must stay at
    // rounding level: eval_scale grows geometrically in degree for
    // |d| > 1, so anything looser cancels mere near-misses, and deflating
    // a non-root smears an error that grows like |d|^degree.
    let scale = num.eval_scale(d.norm()).max(num.max_abs_coeff());
    v <= VALUE_NOISE_REL * scale
}

/// Generic complex probe points for value-level self checks.
const PROBES: [(f64, f64); 6] = [
    (0.9, 0.43),
    (-0.6, 0.77),
    (1.45, -0.89),
    (0.2, -1.1),
    (-1.3, -0.4),
    (1.8, 1.1),
];

/// Accepts a candidate deflation only if the reduced fraction agrees with
/// the original at fixed generic probe points to the cancellation
/// tolerance. A legitimate cancellation moves the function by at most the
/// root mismatch, well inside `CANCEL_TOL`; deflating at high degree can
/// smear a mismatch across the coefficients with growth like
/// radius^degree, and this gate keeps such smears out at any degree.
fn deflation_preserves_value(
    num: &Polynomial,
    den: &Polynomial,
    num2: &Polynomial,
    den2: &Polynomial,
) -> bool {
    let mut checked = false;
    for &(re, im) in &PROBES {
        let z = Complex64::new(re, im);
        let a = num.eval(z) / den.eval(z);
        let b = num2.eval(z) / den2.eval(z);
        if !a.is_finite() || !b.is_finite() {
            continue;
        }
        checked = true;
        if (a - b).norm() > CANCEL_TOL * (1.0 + a.norm() + b.norm()) {
            return false;
        }
    }
    checked
}

/// A real rational function `num / den` in canonical form.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RfWire", into = "RfWire")]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
    den_roots: Vec<Complex64>,
}

impl PartialEq for RationalFunction {
    fn eq(&self, other: &Self) -> bool {
        self.num == other.num && self.den == other.den
    }
}

impl RationalFunction {
    /// Canonicalizes `num / den`, computing the denominator roots.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        let den = den.trim_relative_default();
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let den_roots = den.roots();
        Ok(Self::normalized(num.trim_relative_default(), den, den_roots))
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::from_coeffs(num), Polynomial::from_coeffs(den))
    }

    pub fn zero() -> Self {
        RationalFunction {
            num: Polynomial::zero(),
            den: Polynomial::one(),
            den_roots: Vec::new(),
        }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        RationalFunction {
            num: Polynomial::constant(c),
            den: Polynomial::one(),
            den_roots: Vec::new(),
        }
    }

    pub fn from_polynomial(p: Polynomial) -> Self {
        RationalFunction {
            num: p.trim_relative_default(),
            den: Polynomial::one(),
            den_roots: Vec::new(),
        }
    }

    /// Canonicalizes parts whose denominator roots are already known,
    /// avoiding any eigenvalue computation.
    pub(crate) fn normalized(
        num: Polynomial,
        den: Polynomial,
        mut den_roots: Vec<Complex64>,
    ) -> Self {
        let mut num = num.trim_relative_default();
        if num.is_zero() {
            return Self::zero();
        }
        let mut den = den;
        debug_assert_eq!(den.degree().unwrap_or(0), den_roots.len());

        // Exact cancellation of roots at the origin.
        let t = num.trailing_zero_count().min(den.trailing_zero_count());
        if t > 0 {
            num = num.shift_down(t);
            den = den.shift_down(t);
            let mut removed = 0;
            den_roots.retain(|r| {
                if removed < t && r.re == 0.0 && r.im == 0.0 {
                    removed += 1;
                    false
                } else {
                    true
                }
            });
            while removed < t && !den_roots.is_empty() {
                let idx = den_roots
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                    .map(|(i, _)| i)
                    .unwrap();
                den_roots.swap_remove(idx);
                removed += 1;
            }
        }

        // Deflation of near-common factors, conjugate pairs together. Every
        // candidate must pass the probe-point gate: deflating a deg-n
        // polynomial at a radius-r near-root smears its residue across the
        // coefficients with growth like r^n, so a cancellation is committed
        // only when the reduced fraction provably equals the original.
        let mut i = 0;
        while i < den_roots.len() {
            if num.degree().map(|d| d < 1).unwrap_or(true) {
                break;
            }
            let d = den_roots[i];
            if !should_cancel(&num, d) {
                i += 1;
                continue;
            }
            if d.im.abs() <= CANCEL_TOL * (1.0 + d.norm()) {
                let num2 = num.deflate_real_root(d.re);
                let den2 = den.deflate_real_root(d.re);
                if !deflation_preserves_value(&num, &den, &num2, &den2) {
                    i += 1;
                    continue;
                }
                num = num2;
                den = den2;
                den_roots.swap_remove(i);
                i = 0;
            } else if num.degree().unwrap() >= 2 {
                let partner = den_roots
                    .iter()
                    .enumerate()
                    .filter(|(j, r)| *j != i && r.im * d.im < 0.0)
                    .map(|(j, r)| (j, (r - d.conj()).norm()))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                match partner {
                    Some((j, dist)) if dist <= CANCEL_TOL * (1.0 + d.norm()) => {
                        let num2 = num.deflate_conjugate_pair(d);
                        let den2 = den.deflate_conjugate_pair(d);
                        if !deflation_preserves_value(&num, &den, &num2, &den2) {
                            i += 1;
                            continue;
                        }
                        num = num2;
                        den = den2;
                        let (hi, lo) = (i.max(j), i.min(j));
                        den_roots.swap_remove(hi);
                        den_roots.swap_remove(lo);
                        i = 0;
                    }
                    _ => i += 1,
                }
            } else {
                i += 1;
            }
        }

        // Monic denominator.
        let lead = den.leading();
        debug_assert!(lead != 0.0);
        if lead != 1.0 {
            num = num.scale(1.0 / lead);
            den = den.scale(1.0 / lead);
        }
        num = num.trim_relative_default();
        if num.is_zero() {
            return Self::zero();
        }
        RationalFunction {
            num,
            den,
            den_roots,
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    /// Poles, i.e. the denominator root multiset of the canonical form.
    pub fn poles(&self) -> &[Complex64] {
        &self.den_roots
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Proper: numerator degree at most denominator degree.
    pub fn is_proper(&self) -> bool {
        self.is_zero() || self.num.degree() <= self.den.degree()
    }

    /// Strictly proper: numerator degree below denominator degree.
    pub fn is_strictly_proper(&self) -> bool {
        self.is_zero() || self.num.degree() < self.den.degree()
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.num.eval(x) / self.den.eval(x)
    }

    pub fn neg(&self) -> Self {
        RationalFunction {
            num: self.num.scale(-1.0),
            den: self.den.clone(),
            den_roots: self.den_roots.clone(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero();
        }
        RationalFunction {
            num: self.num.scale(s),
            den: self.den.clone(),
            den_roots: self.den_roots.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return Self::normalized(
                self.num.add(&other.num),
                self.den.clone(),
                self.den_roots.clone(),
            );
        }
        let extra = multiset_extra(&self.den_roots, &other.den_roots);
        let lcm_roots: Vec<Complex64> = self
            .den_roots
            .iter()
            .copied()
            .chain(extra.iter().copied())
            .collect();
        let mult_self = Polynomial::from_roots(&extra);
        let mult_other = Polynomial::from_roots(&multiset_diff(&lcm_roots, &other.den_roots));
        let num = self
            .num
            .mul(&mult_self)
            .add(&other.num.mul(&mult_other));
        let den = self.den.mul(&mult_self);
        if self.lcm_lift_preserves_value(other, &num, &den) {
            return Self::normalized(num, den, lcm_roots);
        }
        // The shared-factor lift rebuilt the other denominator from cached
        // roots, and those drift on refactored numerators with clustered
        // roots (a k-fold root is only located to eps^(1/k)). When the
        // lifted sum disagrees with the operands at the probe points, give
        // up the sharing and cross multiply: the product denominator and
        // concatenated root caches are consistent by construction.
        let num = self
            .num
            .mul(&other.den)
            .add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        let den_roots = self
            .den_roots
            .iter()
            .copied()
            .chain(other.den_roots.iter().copied())
            .collect();
        Self::normalized(num, den, den_roots)
    }

    /// Whether `num / den` equals `self + other` at the probe points, to
    /// the cancellation tolerance.
    fn lcm_lift_preserves_value(&self, other: &Self, num: &Polynomial, den: &Polynomial) -> bool {
        let mut checked = false;
        for &(re, im) in &PROBES {
            let z = Complex64::new(re, im);
            let want = self.eval(z) + other.eval(z);
            let got = num.eval(z) / den.eval(z);
            if !want.is_finite() || !got.is_finite() {
                continue;
            }
            checked = true;
            if (want - got).norm() > LIFT_TOL * (1.0 + want.norm() + got.norm()) {
                return false;
            }
        }
        checked
    }

    /// True when this function reproduces every sample within the relative
    /// tolerance.
    pub(crate) fn matches_samples(&self, samples: &[(Complex64, Complex64)], tol: f64) -> bool {
        samples.iter().all(|&(z, want)| {
            let got = self.eval(z);
            want.is_finite()
                && got.is_finite()
                && (want - got).norm() <= tol * (1.0 + want.norm() + got.norm())
        })
    }

    /// Lowest-degree rational reproducing trusted samples of a function,
    /// or `None` when no candidate survives the held-out nodes.
    ///
    /// The samples come from evaluations that sidestep rational arithmetic
    /// entirely, e.g. inverting a matrix numerically node by node, so a
    /// result validated against them is correct no matter how degraded the
    /// representation it replaces. Candidates with denominator degree
    /// `d = 0..=max_den_deg` and numerator degree `d + excess` are solved
    /// by linearized least squares with rows weighted down near poles; the
    /// first one within `tol` of every holdout sample wins.
    pub(crate) fn fit_minimal_from_samples(
        fit: &[(Complex64, Complex64)],
        holdout: &[(Complex64, Complex64)],
        max_den_deg: usize,
        excess: usize,
        tol: f64,
    ) -> Option<Self> {
        for d in 0..=max_den_deg {
            let p_deg = d + excess;
            let unknowns = p_deg + 1 + d;
            if fit.len() < unknowns + 8 {
                return None;
            }

            // p(z) - v (z^d + sum q_j z^j) = 0 with q monic, split into
            // real and imaginary rows.
            let mut a = DMatrix::<f64>::zeros(2 * fit.len(), unknowns);
            let mut b = DVector::<f64>::zeros(2 * fit.len());
            for (row, &(z, v)) in fit.iter().enumerate() {
                let w = 1.0 / (1.0 + v.norm());
                let mut zk = Complex64::new(w, 0.0);
                for k in 0..=p_deg {
                    a[(2 * row, k)] = zk.re;
                    a[(2 * row + 1, k)] = zk.im;
                    if k < d {
                        let c = -v * zk;
                        a[(2 * row, p_deg + 1 + k)] = c.re;
                        a[(2 * row + 1, p_deg + 1 + k)] = c.im;
                    }
                    if k == d {
                        let rhs = v * zk;
                        b[2 * row] = rhs.re;
                        b[2 * row + 1] = rhs.im;
                    }
                    zk *= z;
                }
            }
            let svd = a.svd(true, true);
            let sol = match svd.solve(&b, 1e-13) {
                Ok(s) => s,
                Err(_) => continue,
            };

            let p = Polynomial::new(sol.as_slice()[..=p_deg].to_vec());
            let mut q_coeffs = sol.as_slice()[p_deg + 1..].to_vec();
            q_coeffs.push(1.0);
            let q = Polynomial::new(q_coeffs);
            let cand = if p.is_zero() {
                Self::zero()
            } else {
                Self::normalized(p, q.clone(), q.roots())
            };
            if cand.matches_samples(holdout, tol) {
                return Some(cand);
            }
        }
        None
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let num = self.num.mul(&other.num);
        let den = self.den.mul(&other.den);
        let den_roots = self
            .den_roots
            .iter()
            .copied()
            .chain(other.den_roots.iter().copied())
            .collect();
        Self::normalized(num, den, den_roots)
    }

    /// Multiplicative inverse. Computes the numerator's roots, which become
    /// the poles of the result.
    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let den_roots = self.num.roots();
        Ok(Self::normalized(
            self.den.clone(),
            self.num.clone(),
            den_roots,
        ))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    /// Coefficient-level closeness: the difference's numerator coefficients
    /// are below `tol` relative to the operands' numerator scale.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let diff = self.sub(other);
        if diff.is_zero() {
            return true;
        }
        let scale = 1.0_f64
            .max(self.num.max_abs_coeff())
            .max(other.num.max_abs_coeff());
        diff.num.max_abs_coeff() <= tol * scale
    }

    pub fn to_string_var(&self, var: &str) -> String {
        if self.den.degree() == Some(0) || self.is_zero() {
            format_poly(&self.num, var)
        } else {
            format!(
                "({}) / ({})",
                format_poly(&self.num, var),
                format_poly(&self.den, var)
            )
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RfWire {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TryFrom<RfWire> for RationalFunction {
    type Error = Error;

    fn try_from(w: RfWire) -> Result<Self> {
        if w.num.iter().chain(w.den.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(
                "non-finite coefficient in rational function".into(),
            ));
        }
        RationalFunction::new(Polynomial::new(w.num), Polynomial::new(w.den))
    }
}

impl From<RationalFunction> for RfWire {
    fn from(r: RationalFunction) -> Self {
        RfWire {
            num: r.num.coeffs().to_vec(),
            den: r.den.coeffs().to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(num: &[f64], den: &[f64]) -> RationalFunction {
        RationalFunction::from_coeffs(num, den).unwrap()
    }

    #[test]
    fn sum_over_distinct_poles_matches_hand_result() {
        // 1/(z-0.5) + 1/(z-2) = (2z - 2.5) / (z^2 - 2.5z + 1)
        let a = rf(&[1.0], &[-0.5, 1.0]);
        let b = rf(&[1.0], &[-2.0, 1.0]);
        let s = a.add(&b);
        let want = rf(&[-2.5, 2.0], &[1.0, -2.5, 1.0]);
        assert!(s.approx_eq(&want, 1e-12));
        assert_eq!(s.poles().len(), 2);
    }

    #[test]
    fn shared_pole_is_not_duplicated_in_a_sum() {
        // 1/(z-0.5) + 2/(z-0.5) = 3/(z-0.5)
        let a = rf(&[1.0], &[-0.5, 1.0]);
        let b = rf(&[2.0], &[-0.5, 1.0]);
        let s = a.add(&b);
        assert!(s.approx_eq(&rf(&[3.0], &[-0.5, 1.0]), 1e-12));
        assert_eq!(s.poles().len(), 1);
    }

    #[test]
    fn product_cancels_shared_factor_exactly() {
        // (z-2)/z * 1/(z-2) = 1/z
        let a = rf(&[-2.0, 1.0], &[0.0, 1.0]);
        let b = rf(&[1.0], &[-2.0, 1.0]);
        let p = a.mul(&b);
        assert_eq!(p.num().coeffs(), &[1.0]);
        assert_eq!(p.den().coeffs(), &[0.0, 1.0]);
        assert_eq!(p.poles().len(), 1);
        assert_eq!(p.poles()[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn origin_factors_cancel_exactly() {
        // z^2 / z = z
        let p = rf(&[0.0, 0.0, 1.0], &[0.0, 1.0]);
        assert_eq!(p.num().coeffs(), &[0.0, 1.0]);
        assert_eq!(p.den().coeffs(), &[1.0]);
    }

    #[test]
    fn cancellation_respects_the_relative_tolerance() {
        // root distance 1e-9: inside the tolerance, collapses to a constant
        let close = rf(&[-(0.5 + 1e-9), 1.0], &[-0.5, 1.0]);
        assert_eq!(close.den().coeffs(), &[1.0]);
        assert!((close.num().coeff(0) - 1.0).abs() < 1e-8);
        // root distance 1e-3: far outside, kept verbatim
        let far = rf(&[-(0.5 + 1e-3), 1.0], &[-0.5, 1.0]);
        assert_eq!(far.den().coeffs(), &[-0.5, 1.0]);
        assert_eq!(far.num().coeffs(), &[-(0.5 + 1e-3), 1.0]);
    }

    #[test]
    fn repeated_roots_cancel_to_full_multiplicity() {
        // (z-0.9)^2 / ((z-0.9)^2 (z-0.5)) = 1/(z-0.5)
        let num = Polynomial::from_coeffs(&[0.81, -1.8, 1.0]);
        let den = num.mul(&Polynomial::from_coeffs(&[-0.5, 1.0]));
        let r = RationalFunction::new(num, den).unwrap();
        assert!(r.approx_eq(&rf(&[1.0], &[-0.5, 1.0]), 1e-7));
        assert_eq!(r.poles().len(), 1);
    }

    #[test]
    fn conjugate_pairs_cancel_together() {
        // (s^2 + 2s + 5) / ((s^2 + 2s + 5)(s + 1)) = 1/(s + 1)
        let quad = Polynomial::from_coeffs(&[5.0, 2.0, 1.0]);
        let den = quad.mul(&Polynomial::from_coeffs(&[1.0, 1.0]));
        let r = RationalFunction::new(quad, den).unwrap();
        assert!(r.approx_eq(&rf(&[1.0], &[1.0, 1.0]), 1e-7));
        assert_eq!(r.poles().len(), 1);
    }

    #[test]
    fn no_cancellation_keeps_coefficients_bit_exact() {
        // (z-1) / ((z-2)(z-3)): nothing cancels, expanded den kept as is
        let r = rf(&[-1.0, 1.0], &[6.0, -5.0, 1.0]);
        assert_eq!(r.num().coeffs(), &[-1.0, 1.0]);
        assert_eq!(r.den().coeffs(), &[6.0, -5.0, 1.0]);
    }

    #[test]
    fn denominator_is_made_monic() {
        let r = rf(&[1.0], &[-4.0, 2.0]);
        assert_eq!(r.den().coeffs(), &[-2.0, 1.0]);
        assert_eq!(r.num().coeffs(), &[0.5]);
    }

    #[test]
    fn reciprocal_swaps_poles_and_zeros() {
        let r = rf(&[-2.0, 1.0], &[-0.5, 1.0]);
        let inv = r.recip().unwrap();
        assert!(inv.approx_eq(&rf(&[-0.5, 1.0], &[-2.0, 1.0]), 1e-12));
        assert_eq!(inv.poles().len(), 1);
        assert!((inv.poles()[0].re - 2.0).abs() < 1e-12);
        assert!(r.mul(&inv).approx_eq(&RationalFunction::one(), 1e-12));
    }

    #[test]
    fn properness_queries() {
        assert!(rf(&[1.0], &[-0.5, 1.0]).is_strictly_proper());
        assert!(rf(&[1.0, 1.0], &[-0.5, 1.0]).is_proper());
        assert!(!rf(&[1.0, 1.0], &[-0.5, 1.0]).is_strictly_proper());
        assert!(!rf(&[1.0, 0.0, 1.0], &[-0.5, 1.0]).is_proper());
        assert!(RationalFunction::zero().is_strictly_proper());
    }

    #[test]
    fn json_round_trip_preserves_canonical_form() {
        let r = rf(&[-2.5, 2.0], &[1.0, -2.5, 1.0]);
        let text = serde_json::to_string(&r).unwrap();
        let back: RationalFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(r, back);
        let parsed: RationalFunction = serde_json::from_str(r#"{"num":[1.0],"den":[-0.5,1.0]}"#).unwrap();
        assert!(parsed.approx_eq(&rf(&[1.0], &[-0.5, 1.0]), 1e-12));
        assert!(serde_json::from_str::<RationalFunction>(r#"{"num":[1.0],"den":[0.0]}"#).is_err());
    }

    #[test]
    fn display_is_readable() {
        let r = rf(&[1.0], &[-0.5, 1.0]);
        assert_eq!(r.to_string_var("z"), "(1) / (z - 0.5)");
        assert_eq!(RationalFunction::constant(2.0).to_string_var("z"), "2");
    }
}
