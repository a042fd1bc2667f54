//! Randomized invariants of the rational algebra, the truncation, and the
//! parametrization maps.

mod common;

use common::{rand_fir_matrix, rand_stable_matrix, rand_stabilizing_pair, rng, scalar_dcf};
use ioparam::{
    check_iop_membership, closed_loop_maps, gram_matrix, h_g_map, iop_to_youla,
    is_quadratically_invariant, recover_controller, verify_dcf, youla_to_iop, BlockId, Domain,
    Polynomial, RationalFunction, RationalMatrix, SparsityPattern, TruncatedParam,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn domain_for(seed: u64) -> Domain {
    if seed % 2 == 0 {
        Domain::Z
    } else {
        Domain::S
    }
}

proptest! {
    #[test]
    fn addition_is_associative(seed: u64) {
        let d = domain_for(seed);
        let mut r = rng(seed);
        let a = rand_stable_matrix(&mut r, d, 2, 3, 2, false);
        let b = rand_stable_matrix(&mut r, d, 2, 3, 2, false);
        let c = rand_stable_matrix(&mut r, d, 2, 3, 2, false);
        let left = a.add(&b).unwrap().add(&c).unwrap();
        let right = a.add(&b.add(&c).unwrap()).unwrap();
        prop_assert!(left.approx_eq(&right, 1e-9));
    }

    #[test]
    fn multiplication_is_associative(seed: u64) {
        let d = domain_for(seed);
        let mut r = rng(seed);
        let a = rand_stable_matrix(&mut r, d, 2, 2, 2, false);
        let b = rand_stable_matrix(&mut r, d, 2, 2, 2, false);
        let c = rand_stable_matrix(&mut r, d, 2, 1, 2, false);
        let left = a.mul(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(left.approx_eq(&right, 1e-9));
    }

    #[test]
    fn inverse_cancels_to_identity(seed: u64) {
        // I + small stable perturbation is invertible by a Neumann bound.
        let d = domain_for(seed);
        let mut r = rng(seed);
        let a = RationalMatrix::identity(d, 2)
            .add(&rand_stable_matrix(&mut r, d, 2, 2, 2, true).scale(0.3))
            .unwrap();
        let inv = a.inverse().unwrap();
        let eye = RationalMatrix::identity(d, 2);
        prop_assert!(a.mul(&inv).unwrap().approx_eq(&eye, 1e-9));
    }

    #[test]
    fn poles_ignore_common_factors(seed: u64) {
        let d = domain_for(seed);
        let mut r = rng(seed);
        let m = rand_stable_matrix(&mut r, d, 1, 1, 3, false);
        let e = m.entry(0, 0);
        // Extra factor roots sit far outside the stability region, so they
        // cannot collide with the true poles.
        let extra = Polynomial::from_roots(&[Complex64::new(r.gen_range(1.5..3.0), 0.0)]);
        let inflated = RationalMatrix::from_fn(d, 1, 1, |_, _| {
            RationalFunction::new(e.num().mul(&extra), e.den().mul(&extra)).unwrap()
        });
        let mut before = m.poles();
        let mut after = inflated.poles();
        prop_assert_eq!(before.len(), after.len());
        let key = |c: &Complex64| (c.re, c.im);
        before.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        after.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        for (p, q) in before.iter().zip(after.iter()) {
            prop_assert!((p - q).norm() < 1e-7, "pole moved: {p} vs {q}");
        }
    }

    #[test]
    fn stability_is_closed_under_sums_and_products(seed: u64) {
        let d = domain_for(seed);
        let mut r = rng(seed);
        let a = rand_stable_matrix(&mut r, d, 2, 2, 2, false);
        let b = rand_stable_matrix(&mut r, d, 2, 2, 2, false);
        prop_assert!(a.mul(&b).unwrap().is_stable());
        prop_assert!(a.add(&b).unwrap().is_stable());
    }

    #[test]
    fn expansion_is_linear(seed: u64, alpha in -2.0..2.0f64, beta in -2.0..2.0f64) {
        let mut r = rng(seed);
        let mut coeffs = |rows: usize, cols: usize| -> Vec<DMatrix<f64>> {
            (0..4)
                .map(|_| DMatrix::from_fn(rows, cols, |_, _| r.gen_range(-1.0..1.0)))
                .collect()
        };
        let build = |x, y, w, z| TruncatedParam::new(Domain::Z, 3, None, x, y, w, z).unwrap();
        let a = build(coeffs(2, 2), coeffs(2, 2), coeffs(2, 2), coeffs(2, 2));
        let b = build(coeffs(2, 2), coeffs(2, 2), coeffs(2, 2), coeffs(2, 2));
        let lhs = a.scale(alpha).add(&b.scale(beta)).unwrap().expand();
        let ea = a.expand();
        let eb = b.expand();
        for (l, (xa, xb)) in [
            (&lhs.x, (&ea.x, &eb.x)),
            (&lhs.y, (&ea.y, &eb.y)),
            (&lhs.w, (&ea.w, &eb.w)),
            (&lhs.z, (&ea.z, &eb.z)),
        ] {
            let rhs = xa.scale(alpha).add(&xb.scale(beta)).unwrap();
            prop_assert!(l.approx_eq(&rhs, 1e-9));
        }
    }

    #[test]
    fn basis_gram_matrix_is_symmetric_positive_definite(a in 0.1..10.0f64, n in 1usize..8) {
        let gamma = gram_matrix(a, n);
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(gamma[(i, j)], gamma[(j, i)]);
            }
        }
        let eigs = gamma.clone().symmetric_eigen().eigenvalues;
        for e in eigs.iter() {
            prop_assert!(*e > 0.0, "nonpositive eigenvalue {e} for a={a}, n={n}");
        }
    }

    #[test]
    fn recovered_controller_matches_the_loop_it_closed(seed: u64) {
        let d = domain_for(seed);
        let mut r = rng(seed);
        let (p, m) = if seed % 4 < 2 { (1, 1) } else { (2, 2) };
        let (g, k) = rand_stabilizing_pair(&mut r, d, p, m);
        let quad = closed_loop_maps(&g, &k).unwrap();
        let report = check_iop_membership(&g, &quad, 1e-6).unwrap();
        prop_assert!(report.ok, "true closed loop must be a member: {report:?}");
        let back = recover_controller(&quad).unwrap();
        prop_assert!(back.approx_eq(&k, 1e-8));
    }

    #[test]
    fn feedback_map_preserves_quadratically_invariant_patterns(seed: u64) {
        let d = domain_for(seed);
        let mut r = rng(seed);
        // A permuted block lower triangular controller pattern is
        // quadratically invariant under any plant support drawn from the
        // same triangle, and shrinking the plant support keeps it so.
        let perm: Vec<usize> = match seed % 6 {
            0 => vec![0, 1, 2],
            1 => vec![0, 2, 1],
            2 => vec![1, 0, 2],
            3 => vec![1, 2, 0],
            4 => vec![2, 0, 1],
            _ => vec![2, 1, 0],
        };
        let split = r.gen_range(1..3);
        let blk = |i: usize, j: usize| {
            let bi = usize::from(perm[i] >= split);
            let bj = usize::from(perm[j] >= split);
            bi >= bj
        };
        let k_rows: Vec<Vec<bool>> =
            (0..3).map(|i| (0..3).map(|j| blk(i, j)).collect()).collect();
        let g_rows: Vec<Vec<bool>> = (0..3)
            .map(|i| (0..3).map(|j| blk(i, j) && r.gen_bool(0.7)).collect())
            .collect();
        let k_pattern = SparsityPattern::from_rows(k_rows).unwrap();
        let g_support = SparsityPattern::from_rows(g_rows).unwrap();
        prop_assert!(is_quadratically_invariant(&k_pattern, &g_support).unwrap());

        let mut g = RationalMatrix::zeros(d, 3, 3);
        let mut k = RationalMatrix::zeros(d, 3, 3);
        for i in 0..3 {
            for j in 0..3 {
                if g_support.allowed(i, j) {
                    g.set_entry(i, j, common::rand_stable_rational(&mut r, d, 2, true));
                }
                if k_pattern.allowed(i, j) {
                    k.set_entry(i, j, common::rand_stable_rational(&mut r, d, 2, false));
                }
            }
        }
        let image = h_g_map(&g, &k).unwrap();
        let off = k_pattern.off_pattern_magnitude(&image).unwrap();
        prop_assert!(off <= 1e-9, "pattern leaked: off magnitude {off}");
    }

    #[test]
    fn scalar_coprime_factors_verify_and_round_trip(seed: u64) {
        let mut r = rng(seed);
        let (g, dcf) = scalar_dcf(&mut r);
        let report = verify_dcf(&g, &dcf, 1e-7).unwrap();
        prop_assert!(report.ok, "hand-built factorization must verify: {report:?}");

        let q = rand_fir_matrix(&mut r, Domain::Z, 1, 1, 3, 1.0);
        let quad = youla_to_iop(&dcf, &q).unwrap();
        let membership = check_iop_membership(&g, &quad, 1e-6).unwrap();
        prop_assert!(membership.ok, "parametrized quadruple left the subspace: {membership:?}");
        let q_back = iop_to_youla(&dcf, &quad).unwrap();
        prop_assert!(q_back.approx_eq(&q, 1e-8));
        let quad_back = youla_to_iop(&dcf, &q_back).unwrap();
        for ((_, a), (_, b)) in quad.blocks().iter().zip(quad_back.blocks().iter()) {
            prop_assert!(a.approx_eq(b, 1e-8));
        }
    }

    #[test]
    fn truncation_h2_norm_matches_boundary_energy(seed: u64) {
        // On the unit circle the squared Frobenius norm of the performance
        // stack is a trigonometric polynomial of degree at most the
        // horizon, so a 64-node rectangle rule integrates it exactly.
        let mut r = rng(seed);
        let n = 3;
        let mut coeffs = |sub: f64| -> Vec<DMatrix<f64>> {
            (0..=n)
                .map(|i| {
                    DMatrix::from_fn(2, 2, |a, b| {
                        r.gen_range(-1.0..1.0) + if i == 0 && a == b { sub } else { 0.0 }
                    })
                })
                .collect()
        };
        let param = TruncatedParam::new(
            Domain::Z,
            n,
            None,
            coeffs(1.0),
            coeffs(0.0),
            coeffs(0.0),
            coeffs(1.0),
        )
        .unwrap();
        let quad = param.expand();
        let nodes = 64;
        let mut acc = 0.0;
        for j in 0..nodes {
            let th = std::f64::consts::TAU * j as f64 / nodes as f64;
            let z = Complex64::new(th.cos(), th.sin());
            let mut f = 0.0;
            for (name, b) in quad.blocks() {
                let shift = matches!(name, "X" | "Z");
                for i in 0..b.nrows() {
                    for c in 0..b.ncols() {
                        let mut v = b.entry(i, c).eval(z);
                        if shift && i == c {
                            v -= Complex64::new(1.0, 0.0);
                        }
                        f += v.norm_sqr();
                    }
                }
            }
            acc += f;
        }
        let oracle = acc / nodes as f64;
        let h2 = param.h2_sq().unwrap();
        prop_assert!(
            (h2 - oracle).abs() <= 1e-9 * (1.0 + oracle),
            "h2_sq {h2} vs quadrature {oracle}"
        );
    }
}

#[test]
fn truncation_blocks_are_editable_in_place() {
    let mut param = TruncatedParam::zero(Domain::Z, 2, None, 2, 2).unwrap();
    param.block_mut(BlockId::Y)[1][(0, 1)] = 3.5;
    assert_eq!(param.block(BlockId::Y)[1][(0, 1)], 3.5);
    // 3.5 z^-1 evaluated at z = 2.
    let v = param.expand().y.entry(0, 1).eval(Complex64::new(2.0, 0.0));
    assert!((v - Complex64::new(1.75, 0.0)).norm() < 1e-12);
}
