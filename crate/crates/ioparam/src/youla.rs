//! Bridge to the classical stable-parameter characterization of all
//! stabilizing controllers built on a doubly coprime plant factorization.
//!
//! Given `G = Nr Mr^-1 = Ml^-1 Nl` with the eight stable proper factors
//! satisfying the Bezout identity
//!
//! ```text
//! [  Ul  -Vl ] [ Mr  Vr ]   [ I  0 ]
//! [ -Nl   Ml ] [ Nr  Ur ] = [ 0  I ]
//! ```
//!
//! every internally stabilizing controller is `K = (Vr - Mr Q)(Ur - Nr Q)^-1`
//! for a unique stable proper parameter `Q`, and the induced closed-loop
//! response quadruple is affine in `Q`:
//!
//! ```text
//! X = (Ur - Nr Q) Ml    W = (Ur - Nr Q) Nl
//! Y = (Vr - Mr Q) Ml    Z = I + (Vr - Mr Q) Nl
//! ```
//!
//! The reverse direction needs no inversion: from any member quadruple the
//! parameter is recovered as
//!
//! ```text
//! Q = Vl X Ur - Ul Y Ur - Vl W Vr + Ul Z Vr - Vl Ur
//! ```
//!
//! which follows from the Bezout blocks `Ml Ur - Nl Vr = I` and
//! `Ul Mr - Vl Nr = I`. The two conversions are exact inverses of each
//! other on the respective parameter sets, which is how the affine
//! subspace characterization and the classical one describe the same
//! controllers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rmatrix::RationalMatrix;
use crate::verify::{
    block_stability, check_iop_membership, max_entry_residual, BlockStability, ClosedLoopQuad,
    RawTerm, MEMBERSHIP_TOL,
};

/// Residual threshold for accepting a factorization as doubly coprime.
pub const DCF_TOL: f64 = 1e-7;

/// A doubly coprime factorization of a plant with `m` inputs and `p`
/// outputs: `Mr, Ul` are `m x m`, `Ml, Ur` are `p x p`, `Nr, Nl` are
/// `p x m` and `Vr, Vl` are `m x p`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoublyCoprime {
    #[serde(rename = "Mr")]
    pub mr: RationalMatrix,
    #[serde(rename = "Nr")]
    pub nr: RationalMatrix,
    #[serde(rename = "Ml")]
    pub ml: RationalMatrix,
    #[serde(rename = "Nl")]
    pub nl: RationalMatrix,
    #[serde(rename = "Ur")]
    pub ur: RationalMatrix,
    #[serde(rename = "Vr")]
    pub vr: RationalMatrix,
    #[serde(rename = "Ul")]
    pub ul: RationalMatrix,
    #[serde(rename = "Vl")]
    pub vl: RationalMatrix,
}

impl DoublyCoprime {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mr: RationalMatrix,
        nr: RationalMatrix,
        ml: RationalMatrix,
        nl: RationalMatrix,
        ur: RationalMatrix,
        vr: RationalMatrix,
        ul: RationalMatrix,
        vl: RationalMatrix,
    ) -> Result<Self> {
        let dcf = DoublyCoprime {
            mr,
            nr,
            ml,
            nl,
            ur,
            vr,
            ul,
            vl,
        };
        dcf.validate()?;
        Ok(dcf)
    }

    /// Plant inputs.
    pub fn m(&self) -> usize {
        self.mr.nrows()
    }

    /// Plant outputs.
    pub fn p(&self) -> usize {
        self.ml.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (m, p) = (self.m(), self.p());
        let expected = [
            ("Mr", &self.mr, m, m),
            ("Nr", &self.nr, p, m),
            ("Ml", &self.ml, p, p),
            ("Nl", &self.nl, p, m),
            ("Ur", &self.ur, p, p),
            ("Vr", &self.vr, m, p),
            ("Ul", &self.ul, m, m),
            ("Vl", &self.vl, m, p),
        ];
        let domain = self.mr.domain();
        for (name, block, rows, cols) in expected {
            if block.nrows() != rows || block.ncols() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "factor {name} is {}x{}, expected {rows}x{cols}",
                    block.nrows(),
                    block.ncols()
                )));
            }
            if block.domain() != domain {
                return Err(Error::DomainMismatch {
                    expected: domain,
                    got: block.domain(),
                });
            }
        }
        Ok(())
    }

    /// The factored plant `Ml^-1 Nl`.
    pub fn plant(&self) -> Result<RationalMatrix> {
        self.ml.inverse()?.mul(&self.nl)
    }

    fn blocks(&self) -> [(&'static str, &RationalMatrix); 8] {
        [
            ("Mr", &self.mr),
            ("Nr", &self.nr),
            ("Ml", &self.ml),
            ("Nl", &self.nl),
            ("Ur", &self.ur),
            ("Vr", &self.vr),
            ("Ul", &self.ul),
            ("Vl", &self.vl),
        ]
    }
}

/// Residuals of the factorization and Bezout identities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DcfResiduals {
    /// `G Mr - Nr`
    pub right_factorization: f64,
    /// `Ml G - Nl`
    pub left_factorization: f64,
    /// `Ul Mr - Vl Nr - I`
    pub bezout_upper_left: f64,
    /// `Ul Vr - Vl Ur`
    pub bezout_upper_right: f64,
    /// `Ml Nr - Nl Mr`
    pub bezout_lower_left: f64,
    /// `Ml Ur - Nl Vr - I`
    pub bezout_lower_right: f64,
}

impl DcfResiduals {
    pub fn max(&self) -> f64 {
        self.right_factorization
            .max(self.left_factorization)
            .max(self.bezout_upper_left)
            .max(self.bezout_upper_right)
            .max(self.bezout_lower_left)
            .max(self.bezout_lower_right)
    }
}

/// Outcome of checking a claimed doubly coprime factorization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DcfReport {
    pub ok: bool,
    pub residuals: DcfResiduals,
    pub blocks: Vec<BlockStability>,
    pub tol: f64,
}

/// Residual of `A B + sign * C - shift * I` at entry (i, j), as raw terms.
fn product_defect_terms(
    a: &RationalMatrix,
    b: &RationalMatrix,
    c: &RationalMatrix,
    sign: f64,
    shift: f64,
    i: usize,
    j: usize,
) -> Vec<RawTerm> {
    let mut terms = Vec::with_capacity(a.ncols() + 2);
    for k in 0..a.ncols() {
        terms.push(RawTerm::from_product(a.entry(i, k), b.entry(k, j), 1.0));
    }
    terms.push(RawTerm::from_rf(c.entry(i, j), sign));
    if shift != 0.0 && i == j {
        terms.push(RawTerm::constant(-shift));
    }
    terms
}

fn product_defect(
    a: &RationalMatrix,
    b: &RationalMatrix,
    c: &RationalMatrix,
    sign: f64,
    shift: f64,
) -> f64 {
    max_entry_residual(a.nrows(), b.ncols(), |i, j| {
        product_defect_terms(a, b, c, sign, shift, i, j)
    })
}

/// Checks the six defining identities of a doubly coprime factorization of
/// `g` and the stability and properness of all eight factors.
pub fn verify_dcf(g: &RationalMatrix, dcf: &DoublyCoprime, tol: f64) -> Result<DcfReport> {
    dcf.validate()?;
    if g.nrows() != dcf.p() || g.ncols() != dcf.m() {
        return Err(Error::DimensionMismatch(format!(
            "plant is {}x{} but the factorization is for a {}x{} plant",
            g.nrows(),
            g.ncols(),
            dcf.p(),
            dcf.m()
        )));
    }
    if g.domain() != dcf.mr.domain() {
        return Err(Error::DomainMismatch {
            expected: dcf.mr.domain(),
            got: g.domain(),
        });
    }
    let residuals = DcfResiduals {
        right_factorization: product_defect(g, &dcf.mr, &dcf.nr, -1.0, 0.0),
        left_factorization: product_defect(&dcf.ml, g, &dcf.nl, -1.0, 0.0),
        bezout_upper_left: {
            let vn = dcf.vl.mul(&dcf.nr)?;
            product_defect(&dcf.ul, &dcf.mr, &vn, -1.0, 1.0)
        },
        bezout_upper_right: {
            let vu = dcf.vl.mul(&dcf.ur)?;
            product_defect(&dcf.ul, &dcf.vr, &vu, -1.0, 0.0)
        },
        bezout_lower_left: {
            let nm = dcf.nl.mul(&dcf.mr)?;
            product_defect(&dcf.ml, &dcf.nr, &nm, -1.0, 0.0)
        },
        bezout_lower_right: {
            let nv = dcf.nl.mul(&dcf.vr)?;
            product_defect(&dcf.ml, &dcf.ur, &nv, -1.0, 1.0)
        },
    };
    let blocks: Vec<BlockStability> = dcf
        .blocks()
        .iter()
        .map(|(n, b)| block_stability(n, b))
        .collect();
    let ok = residuals.max() <= tol && blocks.iter().all(|b| b.stable && b.proper);
    Ok(DcfReport {
        ok,
        residuals,
        blocks,
        tol,
    })
}

/// The trivial factorization of a stable proper plant: coprimeness is
/// witnessed by identity factors and zero cofactors.
pub fn trivial_dcf(g: &RationalMatrix) -> Result<DoublyCoprime> {
    if !g.is_stable() {
        return Err(Error::InvalidInput(
            "the trivial factorization exists only for stable plants".into(),
        ));
    }
    if !g.is_proper() {
        return Err(Error::ImproperPlant("plant entries must be proper".into()));
    }
    let (p, m) = (g.nrows(), g.ncols());
    let d = g.domain();
    DoublyCoprime::new(
        RationalMatrix::identity(d, m),
        g.clone(),
        RationalMatrix::identity(d, p),
        g.clone(),
        RationalMatrix::identity(d, p),
        RationalMatrix::zeros(d, m, p),
        RationalMatrix::identity(d, m),
        RationalMatrix::zeros(d, m, p),
    )
}

/// Maps a stable proper parameter to the closed-loop quadruple of the
/// controller it encodes.
pub fn youla_to_iop(dcf: &DoublyCoprime, q: &RationalMatrix) -> Result<ClosedLoopQuad> {
    dcf.validate()?;
    let (m, p) = (dcf.m(), dcf.p());
    if q.nrows() != m || q.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "parameter is {}x{}, expected {m}x{p}",
            q.nrows(),
            q.ncols()
        )));
    }
    if q.domain() != dcf.mr.domain() {
        return Err(Error::DomainMismatch {
            expected: dcf.mr.domain(),
            got: q.domain(),
        });
    }
    if !q.is_stable() {
        return Err(Error::UnstableParameter(
            "the parameter must be stable".into(),
        ));
    }
    if !q.is_proper() {
        return Err(Error::UnstableParameter(
            "the parameter must be proper".into(),
        ));
    }
    let ur_shift = dcf.ur.sub(&dcf.nr.mul(q)?)?;
    let vr_shift = dcf.vr.sub(&dcf.mr.mul(q)?)?;
    let x = ur_shift.mul(&dcf.ml)?;
    let y = vr_shift.mul(&dcf.ml)?;
    let w = ur_shift.mul(&dcf.nl)?;
    let z = RationalMatrix::identity(q.domain(), m).add(&vr_shift.mul(&dcf.nl)?)?;
    ClosedLoopQuad::new(x, y, w, z)
}

/// Recovers the stable parameter from a member quadruple of the affine
/// subspace of the factored plant. Membership is checked first against
/// `Ml^-1 Nl`, so a quadruple that does not belong to the plant's subspace
/// is rejected rather than silently mapped.
pub fn iop_to_youla(dcf: &DoublyCoprime, quad: &ClosedLoopQuad) -> Result<RationalMatrix> {
    dcf.validate()?;
    let g = dcf.plant()?;
    let membership = check_iop_membership(&g, quad, MEMBERSHIP_TOL)?;
    if !membership.ok {
        return Err(Error::MembershipFailed {
            residual: membership.residuals.max(),
            tol: membership.tol,
        });
    }
    let xu = quad.x.mul(&dcf.ur)?;
    let yu = quad.y.mul(&dcf.ur)?;
    let wv = quad.w.mul(&dcf.vr)?;
    let zv = quad.z.mul(&dcf.vr)?;
    dcf.vl
        .mul(&xu)?
        .sub(&dcf.ul.mul(&yu)?)?
        .sub(&dcf.vl.mul(&wv)?)?
        .add(&dcf.ul.mul(&zv)?)?
        .sub(&dcf.vl.mul(&dcf.ur)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::RationalFunction;
    use crate::rmatrix::Domain;
    use crate::verify::recover_controller;

    fn rf(num: &[f64], den: &[f64]) -> RationalFunction {
        RationalFunction::from_coeffs(num, den).unwrap()
    }

    fn scalar(domain: Domain, r: RationalFunction) -> RationalMatrix {
        RationalMatrix::from_fn(domain, 1, 1, |_, _| r.clone())
    }

    /// Hand factorization of G = 1/(z-2) over poles at 0.5.
    fn unstable_scalar_dcf() -> (RationalMatrix, DoublyCoprime) {
        let g = scalar(Domain::Z, rf(&[1.0], &[-2.0, 1.0]));
        let m = scalar(Domain::Z, rf(&[-2.0, 1.0], &[-0.5, 1.0]));
        let n = scalar(Domain::Z, rf(&[1.0], &[-0.5, 1.0]));
        let u = scalar(Domain::Z, rf(&[1.0, 1.0], &[-0.5, 1.0]));
        let v = scalar(Domain::Z, rf(&[-2.25], &[-0.5, 1.0]));
        let dcf = DoublyCoprime::new(
            m.clone(),
            n.clone(),
            m,
            n,
            u.clone(),
            v.clone(),
            u,
            v,
        )
        .unwrap();
        (g, dcf)
    }

    #[test]
    fn hand_factorization_verifies_exactly() {
        let (g, dcf) = unstable_scalar_dcf();
        let report = verify_dcf(&g, &dcf, DCF_TOL).unwrap();
        assert!(report.ok, "residuals {:?}", report.residuals);
        assert!(report.residuals.max() < 1e-12);
        assert_eq!(report.blocks.len(), 8);
    }

    #[test]
    fn center_of_hand_factorization_stabilizes() {
        let (g, dcf) = unstable_scalar_dcf();
        let q = RationalMatrix::zeros(Domain::Z, 1, 1);
        let quad = youla_to_iop(&dcf, &q).unwrap();
        let membership = check_iop_membership(&g, &quad, 1e-9).unwrap();
        assert!(membership.ok, "{:?}", membership.residuals);
        // K = Vr / Ur = -2.25/(z+1)
        let k = recover_controller(&quad).unwrap();
        let expected = rf(&[-2.25], &[1.0, 1.0]);
        assert!(k.entry(0, 0).approx_eq(&expected, 1e-9));
    }

    #[test]
    fn round_trip_through_hand_factorization() {
        let (g, dcf) = unstable_scalar_dcf();
        let q = scalar(Domain::Z, rf(&[0.3, 0.1], &[0.0, 1.0]));
        let quad = youla_to_iop(&dcf, &q).unwrap();
        assert!(check_iop_membership(&g, &quad, 1e-9).unwrap().ok);
        let back = iop_to_youla(&dcf, &quad).unwrap();
        assert!(
            back.approx_eq(&q, 1e-8),
            "recovered {}",
            back.entry(0, 0).to_string_var("z")
        );
    }

    #[test]
    fn trivial_factorization_matches_direct_formulas() {
        let gq = rf(&[0.5], &[-0.3, 1.0]);
        let g = scalar(Domain::Z, gq.clone());
        let dcf = trivial_dcf(&g).unwrap();
        assert!(verify_dcf(&g, &dcf, DCF_TOL).unwrap().ok);
        let qr = rf(&[0.2, 1.0], &[-0.1, 1.0]);
        let q = scalar(Domain::Z, qr.clone());
        let quad = youla_to_iop(&dcf, &q).unwrap();
        // X = 1 - gq, Y = -q, W = g - gqg, Z = 1 - qg
        let one = RationalFunction::one();
        let x_hand = one.sub(&gq.mul(&qr));
        assert!(quad.x.entry(0, 0).approx_eq(&x_hand, 1e-12));
        assert!(quad.y.entry(0, 0).approx_eq(&qr.scale(-1.0), 1e-12));
        let w_hand = gq.sub(&gq.mul(&qr).mul(&gq));
        assert!(quad.w.entry(0, 0).approx_eq(&w_hand, 1e-12));
        let back = iop_to_youla(&dcf, &quad).unwrap();
        assert!(back.approx_eq(&q, 1e-9));
    }

    #[test]
    fn continuous_round_trip() {
        let g = scalar(Domain::S, rf(&[1.0], &[1.0, 1.0]));
        let dcf = trivial_dcf(&g).unwrap();
        let q = scalar(Domain::S, rf(&[2.0, 1.0], &[6.0, 5.0, 1.0]));
        let quad = youla_to_iop(&dcf, &q).unwrap();
        let back = iop_to_youla(&dcf, &quad).unwrap();
        assert!(back.approx_eq(&q, 1e-9));
    }

    #[test]
    fn two_by_two_round_trip() {
        let g = RationalMatrix::from_rows(
            Domain::Z,
            vec![
                vec![rf(&[0.4], &[-0.3, 1.0]), RationalFunction::zero()],
                vec![rf(&[0.2], &[-0.5, 1.0]), rf(&[1.0], &[-0.25, 1.0])],
            ],
        )
        .unwrap();
        let dcf = trivial_dcf(&g).unwrap();
        let q = RationalMatrix::from_rows(
            Domain::Z,
            vec![
                vec![rf(&[0.1, 0.3], &[0.0, 1.0]), rf(&[0.7], &[1.0])],
                vec![RationalFunction::zero(), rf(&[-0.2, 0.0, 1.0], &[0.0, 0.0, 1.0])],
            ],
        )
        .unwrap();
        let quad = youla_to_iop(&dcf, &q).unwrap();
        assert!(check_iop_membership(&g, &quad, 1e-9).unwrap().ok);
        let back = iop_to_youla(&dcf, &quad).unwrap();
        assert!(back.approx_eq(&q, 1e-8));
    }

    #[test]
    fn perturbed_factorization_is_rejected() {
        let (g, mut dcf) = unstable_scalar_dcf();
        dcf.vr = scalar(Domain::Z, rf(&[-2.25 + 1e-3], &[-0.5, 1.0]));
        let report = verify_dcf(&g, &dcf, DCF_TOL).unwrap();
        assert!(!report.ok);
        assert!(report.residuals.bezout_lower_right > 1e-5);
    }

    #[test]
    fn unstable_factor_is_rejected() {
        let (g, mut dcf) = unstable_scalar_dcf();
        dcf.ur = scalar(Domain::Z, rf(&[1.0, 1.0], &[-2.0, 1.0]));
        let report = verify_dcf(&g, &dcf, DCF_TOL).unwrap();
        assert!(!report.ok);
        let ur = report.blocks.iter().find(|b| b.name == "Ur").unwrap();
        assert!(!ur.stable);
    }

    #[test]
    fn unstable_parameter_is_rejected() {
        let (_, dcf) = unstable_scalar_dcf();
        let q = scalar(Domain::Z, rf(&[1.0], &[-2.0, 1.0]));
        assert!(matches!(
            youla_to_iop(&dcf, &q),
            Err(Error::UnstableParameter(_))
        ));
    }

    #[test]
    fn off_subspace_quadruple_is_rejected() {
        let (g, dcf) = unstable_scalar_dcf();
        let q = RationalMatrix::zeros(Domain::Z, 1, 1);
        let mut quad = youla_to_iop(&dcf, &q).unwrap();
        quad.w = scalar(Domain::Z, rf(&[0.1], &[-0.5, 1.0]));
        let _ = check_iop_membership(&g, &quad, 1e-9);
        assert!(matches!(
            iop_to_youla(&dcf, &quad),
            Err(Error::MembershipFailed { .. })
        ));
    }

    #[test]
    fn trivial_factorization_requires_stability() {
        let g = scalar(Domain::Z, rf(&[1.0], &[-2.0, 1.0]));
        assert!(matches!(trivial_dcf(&g), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn factorization_serializes() {
        let (_, dcf) = unstable_scalar_dcf();
        let text = serde_json::to_string(&dcf).unwrap();
        for key in ["\"Mr\"", "\"Nr\"", "\"Ml\"", "\"Nl\"", "\"Ur\"", "\"Vr\"", "\"Ul\"", "\"Vl\""]
        {
            assert!(text.contains(key), "missing {key}");
        }
        let back: DoublyCoprime = serde_json::from_str(&text).unwrap();
        back.validate().unwrap();
        assert!(back.mr.approx_eq(&dcf.mr, 0.0));
    }
}
