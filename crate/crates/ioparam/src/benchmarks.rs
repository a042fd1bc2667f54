//! A five-input five-output distributed control benchmark family.
//!
//! The plant is lower triangular with two scalar dynamics shared along
//! columns, one stable and one unstable, and comes in a discrete and a
//! continuous variant. The information structure is the matching lower
//! triangular sparsity pattern, which is quadratically invariant under
//! the plant support, so pattern constraints imposed on the control
//! response carry over to the controller itself.

use crate::constraints::SparsityPattern;
use crate::error::Result;
use crate::rational::RationalFunction;
use crate::rmatrix::{Domain, RationalMatrix};

/// column j of the lower triangle carries `gens[j]`
fn column_patterned(domain: Domain, gens: [RationalFunction; 5]) -> RationalMatrix {
    RationalMatrix::from_fn(domain, 5, 5, |i, j| {
        if j <= i {
            gens[j].clone()
        } else {
            RationalFunction::zero()
        }
    })
}

/// Discrete benchmark plant: lower triangular with column generators
/// `[v, u, v, v, u]` where `v = 0.1/(z - 0.5)` and `u = 1/(z - 2)`.
pub fn discrete_benchmark_plant() -> RationalMatrix {
    let v = RationalFunction::from_coeffs(&[0.1], &[-0.5, 1.0]).unwrap();
    let u = RationalFunction::from_coeffs(&[1.0], &[-2.0, 1.0]).unwrap();
    column_patterned(Domain::Z, [v.clone(), u.clone(), v.clone(), v, u])
}

/// Continuous benchmark plant: same structure with `v = 1/(s + 1)` and
/// `u = 1/(s - 1)`.
pub fn continuous_benchmark_plant() -> RationalMatrix {
    let v = RationalFunction::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
    let u = RationalFunction::from_coeffs(&[1.0], &[-1.0, 1.0]).unwrap();
    column_patterned(Domain::S, [v.clone(), u.clone(), v.clone(), v, u])
}

/// The benchmark information structure: lower triangular 5x5.
pub fn benchmark_sparsity() -> SparsityPattern {
    SparsityPattern::lower_triangular(5)
}

/// A known sparse internally stabilizing controller for the continuous
/// benchmark plant, with four nonzero entries:
///
/// ```text
/// K0[2][2] = -16/(s+7)                K0[4][2] = 8/(s+7)
/// K0[5][2] = 16(s+5)(s+3)/((s+1)(s+7)^2)    K0[5][5] = -16/(s+7)
/// ```
///
/// (1-indexed). It lies in the lower triangular pattern and its closed
/// loop with the continuous plant has all poles in the open left half
/// plane, which the test suite verifies from scratch.
pub fn continuous_reference_controller() -> Result<RationalMatrix> {
    let den7 = [7.0, 1.0];
    let k22 = RationalFunction::from_coeffs(&[-16.0], &den7)?;
    let k42 = RationalFunction::from_coeffs(&[8.0], &den7)?;
    // 16 (s+5)(s+3) / ((s+1)(s+7)^2)
    let k52 = RationalFunction::from_coeffs(&[240.0, 128.0, 16.0], &[49.0, 63.0, 15.0, 1.0])?;
    let k55 = RationalFunction::from_coeffs(&[-16.0], &den7)?;
    RationalMatrix::from_rows(
        Domain::S,
        vec![
            vec![RationalFunction::zero(); 5],
            vec![
                RationalFunction::zero(),
                k22,
                RationalFunction::zero(),
                RationalFunction::zero(),
                RationalFunction::zero(),
            ],
            vec![RationalFunction::zero(); 5],
            vec![
                RationalFunction::zero(),
                k42,
                RationalFunction::zero(),
                RationalFunction::zero(),
                RationalFunction::zero(),
            ],
            vec![
                RationalFunction::zero(),
                k52,
                RationalFunction::zero(),
                RationalFunction::zero(),
                k55,
            ],
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::is_quadratically_invariant;
    use crate::verify::is_internally_stabilizing;

    #[test]
    fn plants_are_strictly_proper_and_unstable() {
        for g in [discrete_benchmark_plant(), continuous_benchmark_plant()] {
            assert_eq!((g.nrows(), g.ncols()), (5, 5));
            assert!(g.is_strictly_proper());
            assert!(!g.is_stable());
        }
    }

    #[test]
    fn pattern_is_quadratically_invariant_for_both_plants() {
        let s = benchmark_sparsity();
        for g in [discrete_benchmark_plant(), continuous_benchmark_plant()] {
            let support = SparsityPattern::support_of(&g);
            assert!(is_quadratically_invariant(&s, &support).unwrap());
        }
    }

    #[test]
    fn reference_controller_is_sparse_and_stabilizing() {
        let g = continuous_benchmark_plant();
        let k0 = continuous_reference_controller().unwrap();
        assert_eq!(benchmark_sparsity().off_pattern_magnitude(&k0).unwrap(), 0.0);
        let report = is_internally_stabilizing(&g, &k0).unwrap();
        assert!(
            report.stabilizing,
            "unstable blocks: {:?}",
            report
                .blocks
                .iter()
                .filter(|b| !b.stable)
                .map(|b| (&b.name, &b.unstable_poles))
                .collect::<Vec<_>>()
        );
    }
}
