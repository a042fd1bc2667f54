//! Dense univariate polynomials with real coefficients.
//!
//! Coefficients are stored in ascending order of the exponent, so
//! `coeffs[k]` multiplies the k-th power of the variable. The canonical
//! form keeps no trailing (highest-order) zero coefficient and represents
//! the zero polynomial by an empty coefficient vector. All arithmetic
//! restores canonical form, stripping only coefficients that are exactly
//! zero; relative trimming of numerically negligible leading coefficients
//! is a separate, explicit step.

use num_complex::Complex64;

/// Relative threshold under which leading coefficients are considered
/// numerical noise by [`Polynomial::trim_relative_default`].
pub const COEFF_TRIM_REL: f64 = 1e-12;

/// A real polynomial in one variable, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, dropping exact
    /// trailing zeros.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_coeffs(coeffs: &[f64]) -> Self {
        Self::new(coeffs.to_vec())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial { coeffs: vec![1.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `c` times the `degree`-th power of the variable.
    pub fn monomial(c: f64, degree: usize) -> Self {
        if c == 0.0 {
            return Self::zero();
        }
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[degree] = c;
        Polynomial { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of the k-th power, zero beyond the stored length.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Leading coefficient, zero for the zero polynomial.
    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Number of exactly-zero low-order coefficients, i.e. the multiplicity
    /// of the root at the origin when the zeros are exact.
    pub fn trailing_zero_count(&self) -> usize {
        self.coeffs.iter().take_while(|c| **c == 0.0).count()
    }

    /// Divides by the `k`-th power of the variable; the first `k`
    /// coefficients must be exactly zero.
    pub fn shift_down(&self, k: usize) -> Self {
        debug_assert!(self.trailing_zero_count() >= k || self.is_zero());
        if self.is_zero() {
            return Self::zero();
        }
        Polynomial {
            coeffs: self.coeffs[k..].to_vec(),
        }
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Sum of |c_k| r^k: the natural magnitude scale of an evaluation at
    /// radius r, used to decide when a value is negligible.
    pub fn eval_scale(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * r + c.abs();
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.coeff(k) + other.coeff(k);
        }
        Self::new(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Euclidean division, returning `(quotient, remainder)` with
    /// `deg(remainder) < deg(divisor)`.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let dd = divisor.degree().unwrap();
        if self.is_zero() || self.degree().unwrap() < dd {
            return (Self::zero(), self.clone());
        }
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        let qn = rem.len() - dd;
        let mut quot = vec![0.0; qn];
        for k in (0..qn).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            if q != 0.0 {
                for (j, dc) in divisor.coeffs.iter().enumerate() {
                    rem[k + j] -= q * dc;
                }
            }
            rem[k + dd] = 0.0;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    /// Drops leading coefficients whose magnitude is below `rel` times the
    /// largest coefficient magnitude. Keeps exact zeros elsewhere intact.
    pub fn trim_relative(&self, rel: f64) -> Self {
        let scale = self.max_abs_coeff();
        if scale == 0.0 {
            return Self::zero();
        }
        let tol = rel * scale;
        let mut coeffs = self.coeffs.clone();
        while coeffs.last().map(|c| c.abs() <= tol).unwrap_or(false) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn trim_relative_default(&self) -> Self {
        self.trim_relative(COEFF_TRIM_REL)
    }

    /// Real monic polynomial with the given complex root multiset. The
    /// multiset must be closed under conjugation up to rounding; imaginary
    /// residue from accumulated rounding is discarded.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (k, c) in acc.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect())
    }

    /// Deflates a real root by synthetic division, discarding the remainder.
    pub fn deflate_real_root(&self, r: f64) -> Self {
        let (q, _) = self.div_rem(&Self::new(vec![-r, 1.0]));
        q
    }

    /// Deflates a conjugate root pair by dividing out the real quadratic
    /// with roots `r` and `conj(r)`, discarding the remainder.
    pub fn deflate_conjugate_pair(&self, r: Complex64) -> Self {
        let (q, _) = self.div_rem(&Self::new(vec![r.norm_sqr(), -2.0 * r.re, 1.0]));
        q
    }

    /// All complex roots, with exact zero coefficients at the low end taken
    /// as exact roots at the origin. Uses closed forms through degree two
    /// and eigenvalues of the scaled companion matrix above that, followed
    /// by two Newton refinement passes.
    pub fn roots(&self) -> Vec<Complex64> {
        if self.coeffs.len() <= 1 {
            return Vec::new();
        }
        let tz = self.trailing_zero_count();
        let mut roots = vec![Complex64::new(0.0, 0.0); tz];
        let work = Polynomial {
            coeffs: self.coeffs[tz..].to_vec(),
        }
        .trim_relative_default();
        let n = match work.degree() {
            None | Some(0) => return roots,
            Some(n) => n,
        };
        match n {
            1 => roots.push(Complex64::new(-work.coeff(0) / work.coeff(1), 0.0)),
            2 => {
                let (a, b, c) = (work.coeff(2), work.coeff(1), work.coeff(0));
                let disc = Complex64::new(b * b - 4.0 * a * c, 0.0).sqrt();
                // Pick the sign that avoids cancellation in -b +/- disc.
                let q = if b >= 0.0 { -b - disc.re } else { -b + disc.re };
                if disc.im == 0.0 && q != 0.0 {
                    let r1 = q / (2.0 * a);
                    let r2 = 2.0 * c / q;
                    roots.push(Complex64::new(r1, 0.0));
                    roots.push(Complex64::new(r2, 0.0));
                } else {
                    let two_a = Complex64::new(2.0 * a, 0.0);
                    roots.push((Complex64::new(-b, 0.0) + disc) / two_a);
                    roots.push((Complex64::new(-b, 0.0) - disc) / two_a);
                }
            }
            _ => roots.extend(companion_roots(&work)),
        }
        roots
    }
}

/// Roots of a trimmed polynomial of degree three or more via the companion
/// matrix of a magnitude-balanced rescaling of the variable.
fn companion_roots(p: &Polynomial) -> Vec<Complex64> {
    let n = p.degree().unwrap();
    let lead = p.leading();
    // Fujiwara-style scale so the balanced coefficients are O(1).
    let mut alpha: f64 = 0.0;
    for k in 0..n {
        let c = p.coeff(k);
        if c != 0.0 {
            alpha = alpha.max((c.abs() / lead.abs()).powf(1.0 / (n - k) as f64));
        }
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        alpha = 1.0;
    }
    alpha = alpha.clamp(1e-6, 1e6);

    // Monic coefficients of p(alpha * w) in w.
    let mut d = vec![0.0; n];
    let mut pow = 1.0 / (lead * alpha.powi(n as i32));
    for (k, slot) in d.iter_mut().enumerate() {
        *slot = p.coeff(k) * pow;
        pow *= alpha;
    }

    let mut comp = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for (i, dk) in d.iter().enumerate() {
        comp[(i, n - 1)] = -dk;
    }
    let eig = comp.complex_eigenvalues();
    let deriv = p.derivative();
    eig.iter()
        .map(|w| {
            let mut r = w * alpha;
            for _ in 0..2 {
                let f = p.eval(r);
                let df = deriv.eval(r);
                if df.norm() == 0.0 {
                    break;
                }
                let step = f / df;
                if !step.re.is_finite() || !step.im.is_finite() {
                    break;
                }
                if step.norm() > 0.5 * (1.0 + r.norm()) {
                    break;
                }
                r -= step;
            }
            r
        })
        .collect()
}

/// Formats the polynomial with the given variable name, highest order first.
pub fn format_poly(p: &Polynomial, var: &str) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut parts = Vec::new();
    for (k, &c) in p.coeffs().iter().enumerate().rev() {
        if c == 0.0 {
            continue;
        }
        let mag = c.abs();
        let body = match k {
            0 => format!("{mag}"),
            1 => {
                if mag == 1.0 {
                    var.to_string()
                } else {
                    format!("{mag}{var}")
                }
            }
            _ => {
                if mag == 1.0 {
                    format!("{var}^{k}")
                } else {
                    format!("{mag}{var}^{k}")
                }
            }
        };
        if parts.is_empty() {
            parts.push(if c < 0.0 { format!("-{body}") } else { body });
        } else {
            parts.push(format!("{} {body}", if c < 0.0 { "-" } else { "+" }));
        }
    }
    parts.join(" ")
}
