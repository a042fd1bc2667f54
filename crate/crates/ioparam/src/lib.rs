//! Synthesis and verification of internally stabilizing output-feedback
//! controllers for linear time-invariant systems, parametrized directly by
//! their closed-loop response maps.
//!
//! Instead of searching over controllers, everything here works with the
//! four closed-loop responses (X, Y, W, Z) of the loop. These range over
//! an affine subspace of stable transfer matrices cut out by two linear
//! identities in the plant, so stabilization, sparsity constraints on the
//! control action, and the H2 cost are all convex in the parameters. No
//! coprime factorization of the plant is required, and the plant itself
//! may be unstable. A controller is recovered from any feasible point as
//! `K = Y X^-1`.
//!
//! Synthesis restricts the subspace to finite expansions in inverse powers
//! of `z` (discrete time) or `s + a` (continuous time), turning the
//! identities into a finite linear system solved in the least-squares
//! sense with an exact-feasibility check; see [`synthesis`]. Verification
//! utilities ([`verify`]) check internal stability, subspace membership,
//! quadratic invariance of sparsity patterns, and the equivalence with the
//! classical stable-parameter description through doubly coprime
//! factorizations ([`youla`]).

pub mod basis;
pub mod benchmarks;
pub mod constraints;
pub mod error;
pub mod lstsq;
pub mod poly;
pub mod rational;
pub mod rmatrix;
pub mod synthesis;
pub mod verify;
pub mod youla;

pub use basis::{gram_matrix, BlockId, TruncatedParam};
pub use benchmarks::{
    benchmark_sparsity, continuous_benchmark_plant, continuous_reference_controller,
    discrete_benchmark_plant,
};
pub use constraints::{assemble, is_quadratically_invariant, EqualitySystem, SparsityPattern, VarKey};
pub use error::{Error, Result};
pub use poly::Polynomial;
pub use rational::RationalFunction;
pub use rmatrix::{Domain, RationalMatrix};
pub use synthesis::{
    solve_feasibility, solve_h2, Objective, PerformanceWeights, SolverDiagnostics,
    SynthesisProblem, SynthesisResult,
};
pub use verify::{
    check_iop_membership, closed_loop_maps, h_g_map, is_internally_stabilizing,
    recover_controller, verify_controller_realization, ClosedLoopQuad, MembershipReport,
    RealizationReport, StabilityReport,
};
pub use youla::{iop_to_youla, trivial_dcf, verify_dcf, youla_to_iop, DcfReport, DoublyCoprime};
