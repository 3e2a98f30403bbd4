//! Algorithm fittings.
//!
//! Each named first-order method is expressed twice:
//!
//! * through the common preconditioned splitting engine — as a monotone
//!   operator `A`, a cocoercive forward map `B`, a (possibly degenerate)
//!   metric `Q`, an optional relaxation `M`, and a block-sequential step
//!   solver for the implicit inclusion; and
//! * as the *native* iteration, coded verbatim from its textbook update
//!   rules, sharing only the prox catalog with the engine.
//!
//! [`equivalence_report`] runs both from the same start and reports the
//! worst coordinate deviation across the trajectory, which is the
//! machine-checked claim that the fitting is exact rather than approximate.

mod admm;
mod augmented;
mod primal_dual;
mod simple;

use crate::bench::{BenchError, ProblemInstance};
use crate::engine::{EngineError, RunOptions, SplittingModel};
use crate::report::CheckItem;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZooError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Operator(#[from] crate::operators::OperatorError),
    #[error("fitting `{fitting}` needs a {expected} problem")]
    UnsupportedProblem {
        fitting: &'static str,
        expected: &'static str,
    },
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error("unknown algorithm `{0}`")]
    UnknownName(String),
}

/// All fittings in the zoo.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FittingName {
    GradientDescent,
    ClassicalPpa,
    ProximalFbs,
    ChambollePock,
    AriasCombettes,
    DykstraDual,
    Papc,
    Afba,
    CondatI,
    CondatII,
    Alm,
    LinearizedAlm,
    LinearizedBregman,
    RelaxedAdmm,
    ProximalAdmm,
}

pub const ALL_FITTINGS: [FittingName; 15] = [
    FittingName::GradientDescent,
    FittingName::ClassicalPpa,
    FittingName::ProximalFbs,
    FittingName::ChambollePock,
    FittingName::AriasCombettes,
    FittingName::DykstraDual,
    FittingName::Papc,
    FittingName::Afba,
    FittingName::CondatI,
    FittingName::CondatII,
    FittingName::Alm,
    FittingName::LinearizedAlm,
    FittingName::LinearizedBregman,
    FittingName::RelaxedAdmm,
    FittingName::ProximalAdmm,
];

impl FittingName {
    pub fn as_str(&self) -> &'static str {
        match self {
            FittingName::GradientDescent => "gradient_descent",
            FittingName::ClassicalPpa => "ppa",
            FittingName::ProximalFbs => "pfbs",
            FittingName::ChambollePock => "chambolle_pock",
            FittingName::AriasCombettes => "arias_combettes",
            FittingName::DykstraDual => "dykstra",
            FittingName::Papc => "papc",
            FittingName::Afba => "afba",
            FittingName::CondatI => "condat1",
            FittingName::CondatII => "condat2",
            FittingName::Alm => "alm",
            FittingName::LinearizedAlm => "linearized_alm",
            FittingName::LinearizedBregman => "linearized_bregman",
            FittingName::RelaxedAdmm => "relaxed_admm",
            FittingName::ProximalAdmm => "proximal_admm",
        }
    }
}

impl std::fmt::Display for FittingName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FittingName {
    type Err = ZooError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_FITTINGS
            .iter()
            .find(|n| n.as_str() == s)
            .copied()
            .ok_or_else(|| ZooError::UnknownName(s.to_string()))
    }
}

/// Step sizes and relaxation parameters. Fields a given fitting does not use
/// are ignored by its builder.
#[derive(Clone, Copy, Debug)]
pub struct FittingParams {
    /// Primal step size τ.
    pub tau: f64,
    /// Dual step size σ.
    pub sigma: f64,
    /// Auxiliary scale ρ (linearized methods).
    pub rho: f64,
    /// Relaxation γ.
    pub gamma: f64,
    /// Weight of the extra quadratic penalty in the multi-term splittings.
    pub mu: f64,
}

impl Default for FittingParams {
    fn default() -> Self {
        Self {
            tau: 1.0,
            sigma: 1.0,
            rho: 1.0,
            gamma: 1.0,
            mu: 0.5,
        }
    }
}

/// The verbatim textbook iteration; `engine_view` exposes its state in the
/// engine's coordinates so trajectories can be compared elementwise.
pub trait NativeIterator {
    fn step(&mut self);
    fn engine_view(&self) -> DVector<f64>;
    fn restart(&mut self, x0: &DVector<f64>);
}

/// A fully assembled fitting: engine model, native twin, start point,
/// reference solution, and the declared admissibility conditions.
pub struct AlgorithmFitting {
    pub name: FittingName,
    pub model: SplittingModel,
    pub native: Box<dyn NativeIterator>,
    pub x0: DVector<f64>,
    /// Reference solution in engine coordinates, when the oracle provides
    /// every component.
    pub x_star: Option<DVector<f64>>,
    pub kkt_fn: Option<Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>>,
    /// Parameter-range conditions evaluated at build time.
    pub admissible: Vec<CheckItem>,
}

impl AlgorithmFitting {
    /// Run options pre-populated with the fitting's reference data.
    pub fn run_options(&self, max_iters: usize) -> RunOptions {
        let mut opts = RunOptions::iters(max_iters);
        opts.x_star = self.x_star.clone();
        opts.kkt_fn = self.kkt_fn.clone();
        opts
    }
}

/// Conservative defaults inside each fitting's admissible region, scaled by
/// the operator norms of the instance at hand.
pub fn default_params(name: FittingName, problem: &ProblemInstance) -> FittingParams {
    match name {
        FittingName::GradientDescent => simple::default_gradient_descent(problem),
        FittingName::ClassicalPpa => FittingParams::default(),
        FittingName::ProximalFbs => simple::default_proximal_fbs(problem),
        FittingName::ChambollePock
        | FittingName::AriasCombettes
        | FittingName::DykstraDual
        | FittingName::Papc
        | FittingName::Afba
        | FittingName::CondatI
        | FittingName::CondatII => primal_dual::default_params(name, problem),
        FittingName::Alm | FittingName::LinearizedAlm | FittingName::LinearizedBregman => {
            augmented::default_params(name, problem)
        }
        FittingName::RelaxedAdmm | FittingName::ProximalAdmm => admm::default_params(name),
    }
}

/// Build the named fitting on the given problem instance.
pub fn build(
    name: FittingName,
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    match name {
        FittingName::GradientDescent => simple::gradient_descent(problem, params),
        FittingName::ClassicalPpa => simple::classical_ppa(problem, params),
        FittingName::ProximalFbs => simple::proximal_fbs(problem, params),
        FittingName::ChambollePock => primal_dual::chambolle_pock(problem, params),
        FittingName::AriasCombettes => primal_dual::arias_combettes(problem, params),
        FittingName::DykstraDual => primal_dual::dykstra_dual(problem, params),
        FittingName::Papc => primal_dual::papc(problem, params),
        FittingName::Afba => primal_dual::afba(problem, params),
        FittingName::CondatI => primal_dual::condat(problem, params, false),
        FittingName::CondatII => primal_dual::condat(problem, params, true),
        FittingName::Alm => augmented::alm(problem, params),
        FittingName::LinearizedAlm => augmented::linearized_alm(problem, params),
        FittingName::LinearizedBregman => augmented::linearized_bregman(problem, params),
        FittingName::RelaxedAdmm => admm::relaxed_admm(problem, params),
        FittingName::ProximalAdmm => admm::proximal_admm(problem, params),
    }
}

/// Worst elementwise deviation between the engine trajectory and the native
/// trajectory over `iters` steps from the fitting's start point.
pub fn equivalence_deviation(
    fitting: &mut AlgorithmFitting,
    iters: usize,
) -> Result<f64, ZooError> {
    let trace = fitting
        .model
        .run(&fitting.x0, &RunOptions::iters(iters))?;
    fitting.native.restart(&fitting.x0);
    let mut worst = 0.0f64;
    for state in trace.states.iter().skip(1) {
        fitting.native.step();
        let dev = (state - fitting.native.engine_view()).amax();
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// [`equivalence_deviation`] as a pass/fail item at the given tolerance.
pub fn equivalence_report(
    fitting: &mut AlgorithmFitting,
    iters: usize,
    tol: f64,
) -> Result<CheckItem, ZooError> {
    let dev = equivalence_deviation(fitting, iters)?;
    Ok(
        CheckItem::from_slack(format!("engine_matches_native[{}]", fitting.name), -dev, tol)
            .at(format!("{} iterations", iters)),
    )
}

// ---- shared small helpers for the family modules ----

pub(crate) fn place(dst: &mut DMatrix<f64>, r: usize, c: usize, src: &DMatrix<f64>) {
    dst.view_mut((r, c), (src.nrows(), src.ncols())).copy_from(src);
}

pub(crate) fn stack(parts: &[&DVector<f64>]) -> DVector<f64> {
    let total = parts.iter().map(|p| p.len()).sum();
    let mut out = DVector::zeros(total);
    let mut at = 0;
    for p in parts {
        out.rows_mut(at, p.len()).copy_from(*p);
        at += p.len();
    }
    out
}

pub(crate) fn segment(x: &DVector<f64>, start: usize, len: usize) -> DVector<f64> {
    x.rows(start, len).into_owned()
}

/// `slack > 0` ⇒ the parameter sits strictly inside its admissible range.
pub(crate) fn range_item(name: &str, slack: f64) -> CheckItem {
    CheckItem::from_slack(name, slack, 0.0)
}
