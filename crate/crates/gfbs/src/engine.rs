//! The fixed-point iteration and its relaxations.
//!
//! A [`SplittingModel`] bundles the backward operator `A`, the forward map
//! `B`, the (possibly degenerate, possibly non-symmetric) metric `Q`, and an
//! optional relaxation operator `M`. The implicit step
//!
//! ```text
//! 0 ∈ A x̃ + B xᵏ + Q (x̃ − xᵏ)
//! ```
//!
//! is computed by a per-model `step_solver` closure — each algorithm fitting
//! knows the block-sequential closed form of its own step — and then
//! *certified* independently against the inclusion via
//! [`MonotoneBlockOperator::inclusion_residual`], so a wrong solver cannot
//! silently produce a plausible trace.

use crate::block::BlockLayout;
use crate::metric::{DegenerateMetric, MetricError, DEFAULT_PSD_TOL};
use crate::operators::{CocoerciveMap, DiagonalTerm, MonotoneBlockOperator, OperatorError};
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("implicit step not certified at iteration {iter:?}: inclusion residual {residual:.3e} above tolerance {tol:.3e}")]
    SolverFailure {
        iter: Option<usize>,
        residual: f64,
        tol: f64,
    },
    #[error("relaxation operator M is not invertible")]
    MNotInvertible,
    #[error("model has no relaxation operator")]
    MissingRelaxation,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Computes `x̃` from `(xᵏ, B xᵏ)` for one specific fitting.
///
/// The second argument is the forward term `w` to be used in place of `B xᵏ`,
/// which lets the engine re-run the same solver with the range-projected
/// forward term when cross-checking the resolvent form of the step.
pub type StepSolver =
    Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> Result<DVector<f64>, EngineError> + Send + Sync>;

/// Which definition of the auxiliary matrix `G` a fitting certifies:
/// the degenerate form `(1 − β/(4ν))(Q + Qᵀ) − MᵀQ`, or the non-degenerate
/// redefinition `Q + Qᵀ − MᵀQ − (β/2)I`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GVariant {
    Degenerate,
    NonDegenerate,
}

/// Relaxation data: `xᵏ⁺¹ = xᵏ + M(x̃ − xᵏ)` with the Fejér metric
/// `S = Q M⁻¹`.
#[derive(Clone, Debug)]
pub struct Relaxation {
    pub m: DMatrix<f64>,
    pub m_inv: DMatrix<f64>,
    /// `Some(γ)` when `M = γI` (the KM case).
    pub gamma: Option<f64>,
    /// `S = Q_raw · M⁻¹` (unsymmetrized).
    pub s_raw: DMatrix<f64>,
    /// Metric built from the symmetrized `S`, used for S-norms.
    pub s_metric: DegenerateMetric,
    /// η from the fitting's convergence proposition, if it states one.
    pub declared_eta: Option<f64>,
    pub g_variant: GVariant,
}

/// Smooth objective part `f` with its gradient (for descent-lemma checks).
#[derive(Clone)]
pub struct SmoothPart {
    pub value: Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>,
    pub grad: Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>,
}

/// Declared objective `h = f + g` for fittings that minimize a function of
/// the full iterate (FBS/PPA/gradient-descent style schemes).
#[derive(Clone)]
pub struct ObjectiveSpec {
    pub total: Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>,
    pub smooth: Option<SmoothPart>,
}

impl std::fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ObjectiveSpec(smooth: {})", self.smooth.is_some())
    }
}

/// The `(A, B, Q, M)` bundle plus the step solver.
#[derive(Clone)]
pub struct SplittingModel {
    pub operator: MonotoneBlockOperator,
    pub forward: CocoerciveMap,
    /// The metric exactly as the fitting declares it (may be non-symmetric).
    pub q_raw: DMatrix<f64>,
    /// `Q̃ = (Q_raw + Q_rawᵀ)/2`, source of ν and all Q-norms.
    pub metric: DegenerateMetric,
    pub relaxation: Option<Relaxation>,
    pub step_solver: StepSolver,
    pub objective: Option<ObjectiveSpec>,
    /// Tolerance for the per-step inclusion certificate.
    pub inclusion_tol: f64,
}

impl std::fmt::Debug for SplittingModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SplittingModel(dim = {}, beta = {}, nu = {}, relaxed: {})",
            self.metric.dim(),
            self.beta(),
            self.nu(),
            self.relaxation.is_some()
        )
    }
}

impl SplittingModel {
    pub fn new(
        operator: MonotoneBlockOperator,
        forward: CocoerciveMap,
        q_raw: DMatrix<f64>,
        step_solver: StepSolver,
    ) -> Result<Self, EngineError> {
        let q_tilde = (&q_raw + q_raw.transpose()) * 0.5;
        let metric = DegenerateMetric::build(&q_tilde, DEFAULT_PSD_TOL)?;
        Ok(Self {
            operator,
            forward,
            q_raw,
            metric,
            relaxation: None,
            step_solver,
            objective: None,
            inclusion_tol: 1e-8,
        })
    }

    pub fn with_objective(mut self, objective: ObjectiveSpec) -> Self {
        self.objective = Some(objective);
        self
    }

    /// Scalar (KM) relaxation `M = γI`.
    pub fn with_km(self, gamma: f64) -> Result<Self, EngineError> {
        let n = self.metric.dim();
        let m = DMatrix::identity(n, n) * gamma;
        self.with_relaxation(m, None, GVariant::Degenerate)
    }

    /// General relaxation operator `M`.
    pub fn with_relaxation(
        mut self,
        m: DMatrix<f64>,
        declared_eta: Option<f64>,
        g_variant: GVariant,
    ) -> Result<Self, EngineError> {
        let m_inv = m.clone().try_inverse().ok_or(EngineError::MNotInvertible)?;
        let s_raw = &self.q_raw * &m_inv;
        let s_sym = (&s_raw + s_raw.transpose()) * 0.5;
        let s_metric = DegenerateMetric::build(&s_sym, DEFAULT_PSD_TOL)?;
        // Detect the scalar case so KM certificates use Q-norms.
        let n = m.nrows();
        let g = m[(0, 0)];
        let is_scalar = (&m - DMatrix::identity(n, n) * g).amax() == 0.0;
        self.relaxation = Some(Relaxation {
            m,
            m_inv,
            gamma: if is_scalar { Some(g) } else { None },
            s_raw,
            s_metric,
            declared_eta,
            g_variant,
        });
        Ok(self)
    }

    pub fn beta(&self) -> f64 {
        self.forward.beta()
    }

    /// Smallest strictly positive eigenvalue of `Q̃`.
    pub fn nu(&self) -> f64 {
        self.metric.nu()
    }

    /// Averagedness constant `α = 2ν/(4ν − β)` (meaningful when `ν > β/2`).
    pub fn alpha(&self) -> f64 {
        2.0 * self.nu() / (4.0 * self.nu() - self.beta())
    }

    /// Admissible KM interval `]0, 2 − β/(2ν)[`.
    pub fn km_upper_bound(&self) -> f64 {
        2.0 - self.beta() / (2.0 * self.nu())
    }

    /// The auxiliary matrix `G` for the declared variant.
    pub fn g_matrix(&self) -> Result<DMatrix<f64>, EngineError> {
        let r = self.relaxation.as_ref().ok_or(EngineError::MissingRelaxation)?;
        let qq = &self.q_raw + self.q_raw.transpose();
        let mtq = r.m.transpose() * &self.q_raw;
        let g = match r.g_variant {
            GVariant::Degenerate => qq * (1.0 - self.beta() / (4.0 * self.nu())) - mtq,
            GVariant::NonDegenerate => {
                let n = self.q_raw.nrows();
                qq - mtq - DMatrix::identity(n, n) * (self.beta() / 2.0)
            }
        };
        Ok((&g + g.transpose()) * 0.5)
    }

    /// `W = M⁻ᵀ G M⁻¹`, the coefficient matrix of the Fejér decrease term.
    pub fn w_matrix(&self) -> Result<DMatrix<f64>, EngineError> {
        let r = self.relaxation.as_ref().ok_or(EngineError::MissingRelaxation)?;
        let g = self.g_matrix()?;
        let w = r.m_inv.transpose() * g * &r.m_inv;
        Ok((&w + w.transpose()) * 0.5)
    }

    fn certify_step(
        &self,
        x: &DVector<f64>,
        w: &DVector<f64>,
        x_tilde: &DVector<f64>,
        iter: Option<usize>,
    ) -> Result<(), EngineError> {
        // 0 ∈ A x̃ + w + Q(x̃ − x) means Q(x − x̃) − w is a selection of A(x̃).
        let selection = &self.q_raw * (x - x_tilde) - w;
        let residual = self.operator.inclusion_residual(x_tilde, &selection)?;
        let tol = self.inclusion_tol * (1.0 + x.norm());
        if residual > tol {
            return Err(EngineError::SolverFailure {
                iter,
                residual,
                tol,
            });
        }
        Ok(())
    }

    /// One implicit step `x ↦ x̃`, certified by the inclusion residual.
    pub fn gfbs_step(&self, x: &DVector<f64>) -> Result<DVector<f64>, EngineError> {
        let w = self.forward.eval(x);
        let x_tilde = (self.step_solver)(x, &w)?;
        self.certify_step(x, &w, &x_tilde, None)?;
        Ok(x_tilde)
    }

    /// The resolvent-form step `(A+Q)⁻¹Q(I − Q†B)x`: same solver, but with
    /// the forward term replaced by its projection `QQ†Bx` onto `ran Q`.
    /// Agrees with [`Self::gfbs_step`] whenever `ran B ⊆ ran Q`.
    pub fn gfbs_step_projected(&self, x: &DVector<f64>) -> Result<DVector<f64>, EngineError> {
        let w = self.forward.eval(x);
        let w_proj = self.metric.range_project(&w)?;
        let x_tilde = (self.step_solver)(x, &w_proj)?;
        self.certify_step(x, &w_proj, &x_tilde, None)?;
        Ok(x_tilde)
    }

    /// KM step `x + γ(x̃ − x)`; `γ = 1` returns `x̃` exactly (bit-identical
    /// to the plain step).
    pub fn km_step(&self, x: &DVector<f64>, gamma: f64) -> Result<DVector<f64>, EngineError> {
        let x_tilde = self.gfbs_step(x)?;
        if gamma == 1.0 {
            return Ok(x_tilde);
        }
        Ok(x + (x_tilde - x) * gamma)
    }

    /// Operator relaxation `x + M(x̃ − x)`; requires `M`.
    pub fn relaxed_step(&self, x: &DVector<f64>) -> Result<DVector<f64>, EngineError> {
        let r = self.relaxation.as_ref().ok_or(EngineError::MissingRelaxation)?;
        let x_tilde = self.gfbs_step(x)?;
        match r.gamma {
            Some(g) if g == 1.0 => Ok(x_tilde),
            Some(g) => Ok(x + (x_tilde - x) * g),
            None => Ok(x + &r.m * (x_tilde - x)),
        }
    }

    /// One step of whichever iteration the model is configured for.
    pub fn step(&self, x: &DVector<f64>) -> Result<DVector<f64>, EngineError> {
        match &self.relaxation {
            None => self.gfbs_step(x),
            Some(_) => self.relaxed_step(x),
        }
    }

    /// The metric used for stopping and the trace residual column: `S` when a
    /// general (non-scalar) `M` is present, `Q̃` otherwise.
    pub fn residual_metric(&self) -> &DegenerateMetric {
        match &self.relaxation {
            Some(r) if r.gamma.is_none() => &r.s_metric,
            _ => &self.metric,
        }
    }

    /// Run the iteration, recording every state and residual. Stops when the
    /// residual seminorm drops to `stop_tol` or `max_iters` is reached.
    pub fn run(&self, x0: &DVector<f64>, opts: &RunOptions) -> Result<IterationTrace, EngineError> {
        assert!(opts.max_iters >= 1);
        let rm = self.residual_metric();
        let mut states = vec![x0.clone()];
        let mut residuals = Vec::new();
        let mut s_distances = opts.x_star.as_ref().map(|_| Vec::new());
        let mut objectives = self.objective.as_ref().map(|_| Vec::new());
        let mut kkt_residuals = opts.kkt_fn.as_ref().map(|_| Vec::new());
        let record = |x: &DVector<f64>,
                          s_distances: &mut Option<Vec<f64>>,
                          objectives: &mut Option<Vec<f64>>,
                          kkt_residuals: &mut Option<Vec<f64>>|
         -> Result<(), EngineError> {
            if let (Some(v), Some(xs)) = (s_distances.as_mut(), opts.x_star.as_ref()) {
                v.push(rm.q_norm(&(x - xs))?);
            }
            if let (Some(v), Some(obj)) = (objectives.as_mut(), self.objective.as_ref()) {
                v.push((obj.total)(x));
            }
            if let (Some(v), Some(kkt)) = (kkt_residuals.as_mut(), opts.kkt_fn.as_ref()) {
                v.push(kkt(x));
            }
            Ok(())
        };

        let mut x = x0.clone();
        for iter in 0..opts.max_iters {
            let next = self.step(&x).map_err(|e| match e {
                EngineError::SolverFailure { residual, tol, .. } => EngineError::SolverFailure {
                    iter: Some(iter),
                    residual,
                    tol,
                },
                other => other,
            })?;
            let res = rm.q_norm(&(&x - &next))?;
            residuals.push(res);
            record(&next, &mut s_distances, &mut objectives, &mut kkt_residuals)?;
            states.push(next.clone());
            x = next;
            if res <= opts.stop_tol {
                break;
            }
        }
        Ok(IterationTrace {
            states,
            residuals,
            s_distances,
            objectives,
            kkt_residuals,
            params: opts.params.clone(),
        })
    }
}

/// Options for [`SplittingModel::run`].
#[derive(Clone, Default)]
pub struct RunOptions {
    pub max_iters: usize,
    pub stop_tol: f64,
    /// Oracle solution; enables the `s_distance` trace column.
    pub x_star: Option<DVector<f64>>,
    /// Problem-specific KKT residual; enables the `kkt_residual` column.
    pub kkt_fn: Option<Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>>,
    /// Configuration snapshot copied into the trace.
    pub params: Vec<(String, String)>,
}

impl RunOptions {
    pub fn iters(max_iters: usize) -> Self {
        Self {
            max_iters,
            stop_tol: -1.0, // never stop early: residuals are nonnegative
            ..Default::default()
        }
    }
}

/// Record of one run: states `x⁰..x^K` and per-transition residuals.
#[derive(Clone, Debug)]
pub struct IterationTrace {
    /// `K + 1` states including the initial point.
    pub states: Vec<DVector<f64>>,
    /// `K` residuals; entry `k` is the Q- (or S-) seminorm of `xᵏ − xᵏ⁺¹`.
    pub residuals: Vec<f64>,
    /// Distance of each post-step state to the reference, when provided.
    pub s_distances: Option<Vec<f64>>,
    pub objectives: Option<Vec<f64>>,
    pub kkt_residuals: Option<Vec<f64>>,
    pub params: Vec<(String, String)>,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trace holds at least x0")
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().unwrap_or(&f64::NAN)
    }

    /// CSV export: header `iter,q_residual,s_distance,objective,kkt_residual`,
    /// one row per iteration, 17 significant digits, optional columns empty
    /// when absent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,q_residual,s_distance,objective,kkt_residual\n");
        let opt = |v: &Option<Vec<f64>>, k: usize| -> String {
            v.as_ref()
                .and_then(|v| v.get(k))
                .map(|x| format!("{x:.16e}"))
                .unwrap_or_default()
        };
        for k in 0..self.residuals.len() {
            let _ = writeln!(
                out,
                "{},{:.16e},{},{},{}",
                k + 1,
                self.residuals[k],
                opt(&self.s_distances, k),
                opt(&self.objectives, k),
                opt(&self.kkt_residuals, k),
            );
        }
        out
    }
}

/// Step solver for models whose `A` is purely diagonal (no coupling) under
/// `Q = (1/τ)I`: the inclusion decouples into independent prox evaluations
/// `x̃_i = prox_{τ c_i g_i}(x_i − τ(w + offset)_i)`.
pub fn diagonal_step_solver(
    layout: Arc<BlockLayout>,
    diagonal: Vec<DiagonalTerm>,
    offset: DVector<f64>,
    tau: f64,
) -> StepSolver {
    Arc::new(move |x, w| {
        let z = x - (w + &offset) * tau;
        let mut out = DVector::zeros(x.len());
        for (i, term) in diagonal.iter().enumerate() {
            let r = layout.range(i);
            let zi = z.rows(r.start, r.len()).into_owned();
            let pi = term.prox.prox(tau * term.scale, &zi);
            out.rows_mut(r.start, r.len()).copy_from(&pi);
        }
        Ok(out)
    })
}
