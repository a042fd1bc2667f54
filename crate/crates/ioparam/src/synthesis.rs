//! Controller synthesis over the truncated closed-loop parametrization.
//!
//! A synthesis problem fixes a strictly proper plant, a truncation horizon
//! (and pole shift in continuous time), an optional sparsity pattern on
//! the control response, and an objective. Solving proceeds in four steps:
//!
//! 1. assemble the linear equality system of the affine subspace over the
//!    truncated basis, plus sparsity rows;
//! 2. minimize the objective over the solution set with an SVD-based
//!    equality-constrained least-squares solve;
//! 3. declare infeasibility at this horizon when the equality residual
//!    exceeds [`INFEASIBILITY_TOL`] (the feasible set only grows with the
//!    horizon, so raising it is the remedy);
//! 4. rebuild the truncation, recover the controller `K = Y X^-1`, and
//!    re-verify everything from first principles: subspace membership,
//!    the realization identity `K X = Y` against the original plant
//!    (which together certify internal stability without re-inverting
//!    `I - G K`), and pattern compliance. A result is only returned when
//!    all checks pass; otherwise the solve fails loudly.
//!
//! The default quadratic objective is the H2 norm of the deviation of the
//! response quadruple from the open-loop identity, which in discrete time
//! is exactly the coefficient sum of squares and in continuous time the
//! Gram-weighted quadratic form of the basis. Discrete problems optionally
//! take finite-impulse-response weights, giving the H2 norm of
//! `P_zw + P_zu Y P_yw`; with the weights chosen as the closed-loop
//! stack this reduces to the default objective.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{gram_matrix, BlockId, TruncatedParam};
use crate::constraints::{assemble, is_quadratically_invariant, SparsityPattern, VarKey};
use crate::error::{Error, Result};
use crate::lstsq::{min_norm_solution, solve_constrained, ConstrainedSolution};
use crate::rmatrix::{Domain, RationalMatrix};
use crate::verify::{
    quad_stability_report, recover_controller, verify_controller_realization, ClosedLoopQuad,
    MembershipReport, StabilityReport, MEMBERSHIP_TOL,
};

/// Equality residual above which a truncation order is declared
/// infeasible.
pub const INFEASIBILITY_TOL: f64 = 1e-6;

/// Largest absolute off-pattern coefficient tolerated in a sparse design.
pub const SPARSITY_TOL: f64 = 1e-7;

/// Objective of a synthesis problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// Any feasible point (minimum-norm coefficients).
    #[serde(rename = "none")]
    None,
    /// Quadratic H2 cost of the closed-loop performance stack.
    #[serde(rename = "h2_quad")]
    H2,
}

/// Finite-impulse-response weights for the discrete weighted objective
/// `|| P_zw + P_zu Y P_yw ||_H2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerformanceWeights {
    #[serde(rename = "P_zw")]
    pub zw: RationalMatrix,
    #[serde(rename = "P_zu")]
    pub zu: RationalMatrix,
    #[serde(rename = "P_yw")]
    pub yw: RationalMatrix,
}

/// A synthesis problem over the truncated parametrization.
#[derive(Debug, Clone)]
pub struct SynthesisProblem {
    pub plant: RationalMatrix,
    pub horizon: usize,
    pub pole_shift: Option<f64>,
    pub sparsity: Option<SparsityPattern>,
    pub objective: Objective,
    pub weights: Option<PerformanceWeights>,
}

impl SynthesisProblem {
    pub fn feasibility(plant: RationalMatrix, horizon: usize) -> Self {
        SynthesisProblem {
            plant,
            horizon,
            pole_shift: None,
            sparsity: None,
            objective: Objective::None,
            weights: None,
        }
    }

    pub fn h2(plant: RationalMatrix, horizon: usize) -> Self {
        SynthesisProblem {
            objective: Objective::H2,
            ..Self::feasibility(plant, horizon)
        }
    }

    pub fn with_pole_shift(mut self, a: f64) -> Self {
        self.pole_shift = Some(a);
        self
    }

    pub fn with_sparsity(mut self, s: SparsityPattern) -> Self {
        self.sparsity = Some(s);
        self
    }

    pub fn with_weights(mut self, w: PerformanceWeights) -> Self {
        self.weights = Some(w);
        self
    }
}

/// Numerical evidence attached to a synthesis result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub nullity: usize,
    pub eq_residual: f64,
    pub primal_feasibility: f64,
    pub kkt_stationarity: f64,
    pub solve_seconds: f64,
    pub verify_seconds: f64,
    pub membership: MembershipReport,
    pub stability: StabilityReport,
    /// Residual of `K X - Y` tying the recovered controller to the
    /// verified quadruple.
    pub controller_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_off_pattern: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub controller_off_pattern: Option<f64>,
}

/// A verified synthesis result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisResult {
    #[serde(rename = "truncated_param")]
    pub param: TruncatedParam,
    #[serde(rename = "K")]
    pub controller: RationalMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h2_norm: Option<f64>,
    pub diagnostics: SolverDiagnostics,
}

impl SynthesisResult {
    /// The closed-loop quadruple of the truncation.
    pub fn quad(&self) -> ClosedLoopQuad {
        self.param.expand()
    }
}

/// Finds any feasible point of the truncated subspace (minimum-norm
/// coefficients) and verifies it.
pub fn solve_feasibility(prob: &SynthesisProblem) -> Result<SynthesisResult> {
    if prob.objective != Objective::None {
        return Err(Error::UnsupportedObjective(
            "feasibility solve requires objective \"none\"".into(),
        ));
    }
    solve_impl(prob)
}

/// Minimizes the quadratic H2 objective over the truncated subspace and
/// verifies the result.
pub fn solve_h2(prob: &SynthesisProblem) -> Result<SynthesisResult> {
    if prob.objective != Objective::H2 {
        return Err(Error::UnsupportedObjective(
            "H2 solve requires objective \"h2_quad\"".into(),
        ));
    }
    solve_impl(prob)
}

fn solve_impl(prob: &SynthesisProblem) -> Result<SynthesisResult> {
    let g = &prob.plant;
    if let Some(pattern) = &prob.sparsity {
        let support = SparsityPattern::support_of(g);
        if !is_quadratically_invariant(pattern, &support)? {
            return Err(Error::InvalidInput(
                "sparsity pattern is not quadratically invariant under the plant support, \
                 so pattern constraints on the response would not carry over to the controller"
                    .into(),
            ));
        }
    }
    if prob.weights.is_some() && prob.objective != Objective::H2 {
        return Err(Error::UnsupportedObjective(
            "performance weights require the quadratic objective".into(),
        ));
    }
    if prob.weights.is_some() && g.domain() != Domain::Z {
        return Err(Error::UnsupportedObjective(
            "performance weights are supported in discrete time only".into(),
        ));
    }

    let solve_start = Instant::now();
    let mut sys = assemble(g, prob.horizon, prob.pole_shift, prob.sparsity.as_ref())?;

    // A finite continuous cost needs zero feedthrough throughout the
    // performance stack. The equality rows already pin X0 = I, W0 = 0 and
    // Z0 = I through the leading denominator coefficients; Y0 is free and
    // must be pinned explicitly.
    if prob.objective == Objective::H2 && g.domain() == Domain::S {
        let (m, p) = (g.ncols(), g.nrows());
        sys.append_var_pins((0..m).flat_map(|row| {
            (0..p).map(move |col| VarKey {
                block: BlockId::Y,
                index: 0,
                row,
                col,
            })
        }));
    }

    let (a, b) = sys.dense();
    let cost = build_cost(&sys, prob)?;
    let sol = match &cost {
        Some((c, d)) => solve_constrained(&a, &b, Some((c, d)))?,
        None => min_norm_solution(&a, &b)?,
    };
    let solve_seconds = solve_start.elapsed().as_secs_f64();

    if sol.eq_residual > INFEASIBILITY_TOL {
        return Err(Error::InfeasibleAtOrder {
            order: prob.horizon,
            residual: sol.eq_residual,
            threshold: INFEASIBILITY_TOL,
        });
    }

    let verify_start = Instant::now();
    let param = param_from_solution(&sys, &sol)?;
    let quad = param.expand();
    let controller = recover_controller(&quad)?;
    let realization = verify_controller_realization(g, &quad, &controller, MEMBERSHIP_TOL)?;
    if !realization.membership.ok {
        let offending: Vec<String> = realization
            .membership
            .blocks
            .iter()
            .filter(|b| !b.stable || !b.proper)
            .map(|b| format!("{} ({} unstable poles)", b.name, b.unstable_poles.len()))
            .collect();
        return Err(Error::VerificationFailed(format!(
            "solved truncation is off the subspace or unstable \
             (max residual {:.3e}, tol {:.3e}; offending blocks: {})",
            realization.membership.residuals.max(),
            realization.membership.tol,
            if offending.is_empty() {
                "none".to_string()
            } else {
                offending.join(", ")
            }
        )));
    }
    if !realization.stabilizing {
        return Err(Error::VerificationFailed(format!(
            "recovered controller does not realize the solved truncation \
             (K X - Y residual {:.3e}, well-posed: {})",
            realization.controller_residual, realization.well_posed
        )));
    }
    let stability = quad_stability_report(&quad, realization.well_posed);
    let membership = realization.membership;

    let (mut y_off, mut k_off) = (None, None);
    if let Some(pattern) = &prob.sparsity {
        let yv = pattern.off_pattern_magnitude(&quad.y)?;
        let kv = pattern.off_pattern_magnitude(&controller)?;
        if yv > SPARSITY_TOL || kv > SPARSITY_TOL {
            return Err(Error::VerificationFailed(format!(
                "sparsity violated: off-pattern magnitude {:.3e} in Y, {:.3e} in K \
                 (tol {:.1e})",
                yv, kv, SPARSITY_TOL
            )));
        }
        y_off = Some(yv);
        k_off = Some(kv);
    }

    let h2_norm = match (prob.objective, &prob.weights) {
        (Objective::None, _) => None,
        (Objective::H2, None) => Some(param.h2_norm()?),
        (Objective::H2, Some(_)) => sol.objective_residual,
    };
    let verify_seconds = verify_start.elapsed().as_secs_f64();

    Ok(SynthesisResult {
        param,
        controller,
        h2_norm,
        diagnostics: SolverDiagnostics {
            rows: a.nrows(),
            cols: a.ncols(),
            rank: sol.rank,
            nullity: sol.nullity,
            eq_residual: sol.eq_residual,
            primal_feasibility: sol.primal_feasibility,
            kkt_stationarity: sol.kkt_stationarity,
            solve_seconds,
            verify_seconds,
            membership,
            stability,
            controller_residual: realization.controller_residual,
            y_off_pattern: y_off,
            controller_off_pattern: k_off,
        },
    })
}

fn param_from_solution(
    sys: &crate::constraints::EqualitySystem,
    sol: &ConstrainedSolution,
) -> Result<TruncatedParam> {
    let mut param = TruncatedParam::zero(
        sys.domain(),
        sys.horizon(),
        sys.pole_shift(),
        sys.plant_outputs(),
        sys.plant_inputs(),
    )?;
    for (idx, key) in sys.vars().iter().enumerate() {
        param.block_mut(key.block)[key.index][(key.row, key.col)] = sol.x[idx];
    }
    Ok(param)
}

fn build_cost(
    sys: &crate::constraints::EqualitySystem,
    prob: &SynthesisProblem,
) -> Result<Option<(DMatrix<f64>, DVector<f64>)>> {
    if prob.objective == Objective::None {
        return Ok(None);
    }
    if let Some(w) = &prob.weights {
        return Ok(Some(weighted_cost(sys, w)?));
    }
    let n = sys.horizon();
    let nv = sys.ncols();
    match sys.domain() {
        Domain::Z => {
            // sum of squared coefficients of the stack: identity cost with
            // the open-loop identity as reference
            let c = DMatrix::identity(nv, nv);
            let mut d = DVector::zeros(nv);
            for block in [BlockId::X, BlockId::Z] {
                let (rows, _) = block.shape(sys.plant_outputs(), sys.plant_inputs());
                for r in 0..rows {
                    let idx = sys
                        .var_index(&VarKey {
                            block,
                            index: 0,
                            row: r,
                            col: r,
                        })
                        .unwrap();
                    d[idx] = 1.0;
                }
            }
            Ok(Some((c, d)))
        }
        Domain::S => {
            if n == 0 {
                // feedthrough-only truncation: cost is identically zero
                return Ok(Some((DMatrix::zeros(1, nv), DVector::zeros(1))));
            }
            let gamma = gram_matrix(sys.pole_shift().unwrap(), n);
            let chol = Cholesky::new(gamma).ok_or_else(|| {
                Error::VerificationFailed("basis Gram matrix lost positive definiteness".into())
            })?;
            let l = chol.l();
            // cost = sum over stack entries e of || L^T v_e ||^2 with
            // v_e = (coeff 1, ..., coeff N) of entry e
            let (p, m) = (sys.plant_outputs(), sys.plant_inputs());
            let entries: usize = BlockId::ALL
                .iter()
                .map(|b| {
                    let (r, c) = b.shape(p, m);
                    r * c
                })
                .sum();
            let mut c = DMatrix::zeros(entries * n, nv);
            let mut row = 0;
            for block in BlockId::ALL {
                let (rows, cols) = block.shape(p, m);
                for r in 0..rows {
                    for col in 0..cols {
                        for k in 0..n {
                            for i in 1..=n {
                                let idx = sys
                                    .var_index(&VarKey {
                                        block,
                                        index: i,
                                        row: r,
                                        col,
                                    })
                                    .unwrap();
                                c[(row, idx)] = l[(i - 1, k)];
                            }
                            row += 1;
                        }
                    }
                }
            }
            Ok(Some((c, DVector::zeros(entries * n))))
        }
    }
}

/// Impulse coefficients of a finite-impulse-response transfer matrix:
/// `h[t]` such that the entry (i, j) equals `sum_t h[t][(i,j)] z^-t`.
fn fir_impulse(m: &RationalMatrix, what: &str) -> Result<Vec<DMatrix<f64>>> {
    let mut depth = 0usize;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let e = m.entry(i, j);
            if e.poles().iter().any(|r| r.norm() > 1e-9) {
                return Err(Error::InvalidInput(format!(
                    "{what} must be a finite impulse response (all poles at the origin)"
                )));
            }
            if !e.is_proper() {
                return Err(Error::InvalidInput(format!("{what} must be proper")));
            }
            depth = depth.max(e.den().degree().unwrap_or(0));
        }
    }
    let mut h = vec![DMatrix::zeros(m.nrows(), m.ncols()); depth + 1];
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let e = m.entry(i, j);
            if e.is_zero() {
                continue;
            }
            let d = e.den().degree().unwrap_or(0);
            for t in 0..=d {
                h[t][(i, j)] = e.num().coeff(d - t);
            }
        }
    }
    Ok(h)
}

/// Rows of the weighted objective: the impulse response of
/// `P_zw + P_zu Y P_yw` is linear in the Y coefficients, and its
/// coefficient sum of squares is the squared H2 norm.
fn weighted_cost(
    sys: &crate::constraints::EqualitySystem,
    w: &PerformanceWeights,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (p, m) = (sys.plant_outputs(), sys.plant_inputs());
    if w.zu.ncols() != m || w.yw.nrows() != p || w.zw.nrows() != w.zu.nrows()
        || w.zw.ncols() != w.yw.ncols()
    {
        return Err(Error::DimensionMismatch(format!(
            "weights P_zw {}x{}, P_zu {}x{}, P_yw {}x{} for a {}x{} plant",
            w.zw.nrows(),
            w.zw.ncols(),
            w.zu.nrows(),
            w.zu.ncols(),
            w.yw.nrows(),
            w.yw.ncols(),
            p,
            m
        )));
    }
    for mat in [&w.zw, &w.zu, &w.yw] {
        if mat.domain() != Domain::Z {
            return Err(Error::DomainMismatch {
                expected: Domain::Z,
                got: mat.domain(),
            });
        }
    }
    let zw = fir_impulse(&w.zw, "P_zw")?;
    let zu = fir_impulse(&w.zu, "P_zu")?;
    let yw = fir_impulse(&w.yw, "P_yw")?;
    let n = sys.horizon();
    let horizon_out = (zu.len() - 1 + n + yw.len() - 1).max(zw.len() - 1);
    let (q, r) = (w.zw.nrows(), w.zw.ncols());

    let mut c = DMatrix::zeros((horizon_out + 1) * q * r, sys.ncols());
    let mut d = DVector::zeros((horizon_out + 1) * q * r);
    let mut row = 0;
    for t in 0..=horizon_out {
        for i in 0..q {
            for j in 0..r {
                if t < zw.len() {
                    d[row] = -zw[t][(i, j)];
                }
                for (a_idx, zu_h) in zu.iter().enumerate() {
                    if a_idx > t {
                        break;
                    }
                    for b in 0..=(t - a_idx).min(n) {
                        let c_idx = t - a_idx - b;
                        if c_idx >= yw.len() {
                            continue;
                        }
                        for u in 0..m {
                            let zu_v = zu_h[(i, u)];
                            if zu_v == 0.0 {
                                continue;
                            }
                            for v in 0..p {
                                let yw_v = yw[c_idx][(v, j)];
                                if yw_v == 0.0 {
                                    continue;
                                }
                                let idx = sys
                                    .var_index(&VarKey {
                                        block: BlockId::Y,
                                        index: b,
                                        row: u,
                                        col: v,
                                    })
                                    .unwrap();
                                c[(row, idx)] += zu_v * yw_v;
                            }
                        }
                    }
                }
                row += 1;
            }
        }
    }
    Ok((c, d))
}
