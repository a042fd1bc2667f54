//! Randomized fixtures shared by the integration suites.

#![allow(dead_code)]

use ioparam::{
    is_internally_stabilizing, Domain, DoublyCoprime, Polynomial, RationalFunction,
    RationalMatrix,
};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random stable denominator roots: real points and conjugate pairs kept
/// well inside the stability region of the domain.
fn stable_roots(rng: &mut ChaCha8Rng, count: usize, domain: Domain) -> Vec<Complex64> {
    let mut roots = Vec::with_capacity(count);
    while roots.len() < count {
        let pair = roots.len() + 2 <= count && rng.gen_bool(0.4);
        match domain {
            Domain::Z => {
                let r = rng.gen_range(0.05..0.8);
                if pair {
                    let th = rng.gen_range(0.3..2.8);
                    let root = Complex64::from_polar(r, th);
                    roots.push(root);
                    roots.push(root.conj());
                } else {
                    roots.push(Complex64::new(if rng.gen_bool(0.5) { r } else { -r }, 0.0));
                }
            }
            Domain::S => {
                let re = -rng.gen_range(0.3..3.0);
                if pair {
                    let im = rng.gen_range(0.3..3.0);
                    roots.push(Complex64::new(re, im));
                    roots.push(Complex64::new(re, -im));
                } else {
                    roots.push(Complex64::new(re, 0.0));
                }
            }
        }
    }
    roots
}

/// Random stable rational function with denominator degree in
/// `1..=max_deg`, strictly proper or proper on request.
pub fn rand_stable_rational(
    rng: &mut ChaCha8Rng,
    domain: Domain,
    max_deg: usize,
    strictly_proper: bool,
) -> RationalFunction {
    let deg = rng.gen_range(1..=max_deg);
    let den = Polynomial::from_roots(&stable_roots(rng, deg, domain));
    let num_len = if strictly_proper { deg } else { deg + 1 };
    let num: Vec<f64> = (0..num_len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    RationalFunction::new(Polynomial::new(num), den).unwrap()
}

/// Random stable rational matrix; entries are occasionally zero so that
/// structural sparsity shows up in the fixtures.
pub fn rand_stable_matrix(
    rng: &mut ChaCha8Rng,
    domain: Domain,
    nrows: usize,
    ncols: usize,
    max_deg: usize,
    strictly_proper: bool,
) -> RationalMatrix {
    let mut m = RationalMatrix::zeros(domain, nrows, ncols);
    for i in 0..nrows {
        for j in 0..ncols {
            if rng.gen_bool(0.85) {
                m.set_entry(i, j, rand_stable_rational(rng, domain, max_deg, strictly_proper));
            }
        }
    }
    m
}

/// A random internally stabilizing pair `(G, K)`: the plant is stable and
/// small, and the controller is shrunk until the loop verifies, which
/// terminates because a vanishing controller leaves the stable open loop.
pub fn rand_stabilizing_pair(
    rng: &mut ChaCha8Rng,
    domain: Domain,
    p: usize,
    m: usize,
) -> (RationalMatrix, RationalMatrix) {
    let g = rand_stable_matrix(rng, domain, p, m, 2, true).scale(0.4);
    let mut k = rand_stable_matrix(rng, domain, m, p, 2, false);
    for _ in 0..64 {
        if is_internally_stabilizing(&g, &k).unwrap().stabilizing {
            return (g, k);
        }
        k = k.scale(0.5);
    }
    (g, RationalMatrix::zeros(domain, m, p))
}

/// Random strictly proper stable matrix with all poles at the basis pole:
/// `z^-1` terms in discrete time, `(s+a)^-1` terms in continuous time.
pub fn rand_fir_matrix(
    rng: &mut ChaCha8Rng,
    domain: Domain,
    nrows: usize,
    ncols: usize,
    order: usize,
    a: f64,
) -> RationalMatrix {
    let den = match domain {
        Domain::Z => Polynomial::monomial(1.0, order),
        Domain::S => Polynomial::from_roots(&vec![Complex64::new(-a, 0.0); order]),
    };
    RationalMatrix::from_fn(domain, nrows, ncols, |_, _| {
        let num: Vec<f64> = (0..order).map(|_| rng.gen_range(-1.0..1.0)).collect();
        RationalFunction::new(Polynomial::new(num), den.clone()).unwrap()
    })
}

/// A scalar plant `G = c/(z - p)`, possibly unstable, with a hand-built
/// doubly coprime factorization: with stable anchors `r1, r2`,
///
/// ```text
///   Mr = Ml = (z - p)/(z - r1)   Nr = Nl = c/(z - r1)
///   Ur = Ul = (z + a)/(z - r2)   Vr = Vl = b/(z - r2)
/// ```
///
/// where `a = p - r1 - r2` and `b = (-a p - r1 r2)/c` make
/// `(z + a)(z - p) - b c = (z - r1)(z - r2)`, which is the scalar Bezout
/// identity.
pub fn scalar_dcf(rng: &mut ChaCha8Rng) -> (RationalMatrix, DoublyCoprime) {
    let c = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    // Anchors kept away from the origin, from each other and from the
    // plant pole: clustered roots blunt the root pairing that later
    // cancellations rely on.
    let signed = |rng: &mut ChaCha8Rng| -> f64 {
        rng.gen_range(0.3..0.85) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
    };
    let r1 = signed(rng);
    let r2 = loop {
        let r = signed(rng);
        if (r - r1).abs() >= 0.15 {
            break r;
        }
    };
    let p = loop {
        let p: f64 = if rng.gen_bool(0.5) {
            rng.gen_range(1.2..2.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
        } else {
            rng.gen_range(-0.8..0.8)
        };
        if (p - r1).abs() >= 0.15 && (p - r2).abs() >= 0.15 {
            break p;
        }
    };
    let a = p - r1 - r2;
    let b = (-a * p - r1 * r2) / c;

    let scalar = |num: &[f64], den: &[f64]| {
        RationalMatrix::from_fn(Domain::Z, 1, 1, |_, _| {
            RationalFunction::from_coeffs(num, den).unwrap()
        })
    };
    let g = scalar(&[c], &[-p, 1.0]);
    let m = scalar(&[-p, 1.0], &[-r1, 1.0]);
    let n = scalar(&[c], &[-r1, 1.0]);
    let u = scalar(&[a, 1.0], &[-r2, 1.0]);
    let v = scalar(&[b], &[-r2, 1.0]);
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
