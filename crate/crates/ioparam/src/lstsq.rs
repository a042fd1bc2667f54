//! Equality-constrained linear least squares via the singular value
//! decomposition.
//!
//! Solves `min ||C x - d||_2 subject to A x = b` in three steps: the
//! minimum-norm particular solution `x_p = pinv(A) b`, the nullspace basis
//! of A from the right singular vectors of its negligible singular values,
//! and an unconstrained least-squares solve for the nullspace coordinates.
//! The nullspace coordinates are themselves the minimum-norm solution of
//! their reduced problem, so the result is deterministic even when the
//! cost does not pin every free direction.
//!
//! Feasibility of the constraints is not assumed: the caller receives the
//! worst-case equation residual at the particular solution and decides
//! whether the system was consistent. A first-order optimality certificate
//! (the cost gradient projected onto the nullspace) is reported with every
//! solve.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Rank cutoff factor: singular values below
/// `f64::EPSILON * max(rows, cols) * sigma_max` count as zero.
fn rank_tol(nrows: usize, ncols: usize, sigma_max: f64) -> f64 {
    f64::EPSILON * nrows.max(ncols) as f64 * sigma_max
}

struct SvdParts {
    /// Left singular vectors, columns sorted by descending singular value.
    u: DMatrix<f64>,
    /// Right singular vectors, columns sorted likewise.
    v: DMatrix<f64>,
    /// Singular values, descending.
    sigma: Vec<f64>,
    rank: usize,
}

/// Thin SVD with columns sorted by descending singular value. The matrix
/// is padded with zero rows up to square when it is wide, so the right
/// factor always spans the full column space and exposes the nullspace.
fn svd_sorted(a: &DMatrix<f64>) -> Result<SvdParts> {
    let (nr, nc) = a.shape();
    let work = if nr >= nc {
        a.clone()
    } else {
        let mut padded = DMatrix::zeros(nc, nc);
        padded.view_mut((0, 0), (nr, nc)).copy_from(a);
        padded
    };
    let svd = work.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => {
            return Err(Error::VerificationFailed(
                "singular value decomposition did not converge".into(),
            ))
        }
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = DMatrix::from_fn(u.nrows().min(nr.max(1)), order.len(), |r, c| {
        u[(r, order[c])]
    });
    let v = vt.transpose();
    let v_sorted = DMatrix::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])]);
    let tol = rank_tol(nr, nc, sigma.first().copied().unwrap_or(0.0));
    let rank = sigma.iter().take_while(|s| **s > tol).count();
    Ok(SvdParts {
        u: u_sorted,
        v: v_sorted,
        sigma,
        rank,
    })
}

impl SvdParts {
    /// Minimum-norm least-squares solution through the pseudoinverse.
    fn pinv_apply(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.v.nrows());
        for k in 0..self.rank {
            let coef = self.u.column(k).rows(0, rhs.len()).dot(rhs) / self.sigma[k];
            x.axpy(coef, &self.v.column(k).into_owned(), 1.0);
        }
        x
    }

    /// Orthonormal basis of the nullspace (trailing right singular
    /// vectors).
    fn nullspace(&self) -> DMatrix<f64> {
        let n = self.v.nrows();
        let nullity = n - self.rank;
        let mut z = DMatrix::zeros(n, nullity);
        for (c, k) in (self.rank..self.v.ncols()).enumerate() {
            z.column_mut(c).copy_from(&self.v.column(k));
        }
        // columns of V beyond those returned by the thin factorization
        // cannot occur: the matrix was padded to at least square
        debug_assert_eq!(self.v.ncols(), n);
        z
    }
}

/// Outcome of a constrained least-squares solve.
#[derive(Debug, Clone)]
pub struct ConstrainedSolution {
    pub x: DVector<f64>,
    /// Worst-case absolute residual of the equality constraints at `x`.
    pub eq_residual: f64,
    /// `eq_residual / (1 + max|b|)`.
    pub primal_feasibility: f64,
    /// Projected-gradient norm of the cost on the constraint nullspace,
    /// scaled by the gradient magnitude; zero when no cost was given.
    pub kkt_stationarity: f64,
    /// The attained `||C x - d||_2`, when a cost was given.
    pub objective_residual: Option<f64>,
    pub rank: usize,
    pub nullity: usize,
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Minimum-norm solution of `A x = b` (least-squares when inconsistent).
pub fn min_norm_solution(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<ConstrainedSolution> {
    solve_constrained(a, b, None)
}

/// Minimizes `||C x - d||` over the solutions of `A x = b`; with no cost,
/// returns the minimum-norm solution.
pub fn solve_constrained(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    cost: Option<(&DMatrix<f64>, &DVector<f64>)>,
) -> Result<ConstrainedSolution> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "system {}x{} with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if let Some((c, d)) = cost {
        if c.ncols() != a.ncols() || c.nrows() != d.len() {
            return Err(Error::DimensionMismatch(format!(
                "cost {}x{} with rhs of length {} against {} unknowns",
                c.nrows(),
                c.ncols(),
                d.len(),
                a.ncols()
            )));
        }
    }

    let parts = svd_sorted(a)?;
    let mut x = parts.pinv_apply(b);
    let nullity = a.ncols() - parts.rank;

    let mut kkt = 0.0;
    let mut objective_residual = None;
    if let Some((c, d)) = cost {
        if nullity > 0 {
            let z = parts.nullspace();
            let cz = c * &z;
            let rhs = d - c * &x;
            let reduced = svd_sorted(&cz)?;
            let t = reduced.pinv_apply(&rhs);
            x += &z * &t;
            let grad = c.transpose() * (c * &x - d);
            let projected = z.transpose() * &grad;
            kkt = max_abs(&projected) / (1.0 + max_abs(&grad));
        }
        objective_residual = Some((c * &x - d).norm());
    }

    let eq_residual = max_abs(&(a * &x - b));
    Ok(ConstrainedSolution {
        x,
        eq_residual,
        primal_feasibility: eq_residual / (1.0 + max_abs(b)),
        kkt_stationarity: kkt,
        objective_residual,
        rank: parts.rank,
        nullity,
    })
}
