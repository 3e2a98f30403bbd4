//! Single-block fittings: gradient descent, the classical proximal point
//! algorithm, and proximal forward-backward splitting.

use super::*;
use crate::bench::{self, ProblemData};
use crate::block::BlockLayout;
use crate::engine::{diagonal_step_solver, ObjectiveSpec, SmoothPart, SplittingModel};
use crate::operators::{spectral_norm, CocoerciveMap, DiagonalTerm, MonotoneBlockOperator};
use crate::prox::{CustomProx, ProxFunction};
use crate::report::CheckItem;

pub(super) fn default_gradient_descent(problem: &ProblemInstance) -> FittingParams {
    let beta = match &problem.data {
        ProblemData::EqualityQP { p, .. } => spectral_norm(p),
        _ => 1.0,
    };
    FittingParams {
        tau: 1.0 / beta.max(1e-12),
        ..Default::default()
    }
}

pub(super) fn default_proximal_fbs(problem: &ProblemInstance) -> FittingParams {
    let beta = match &problem.data {
        ProblemData::Lasso { m_design, .. } => crate::operators::gram_norm(m_design),
        _ => 1.0,
    };
    FittingParams {
        tau: 1.0 / beta.max(1e-12),
        ..Default::default()
    }
}

/// Explicit gradient steps on an unconstrained convex quadratic:
/// `A = 0`, `B = ∇f`, `Q = (1/τ)I`, admissible `τ ∈ ]0, 2/β[`.
pub(super) fn gradient_descent(
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    let ProblemData::EqualityQP { p, q, a, .. } = &problem.data else {
        return Err(ZooError::UnsupportedProblem {
            fitting: "gradient_descent",
            expected: "unconstrained quadratic",
        });
    };
    if a.nrows() != 0 {
        return Err(ZooError::UnsupportedProblem {
            fitting: "gradient_descent",
            expected: "unconstrained (no equality rows) quadratic",
        });
    }
    let n = p.nrows();
    let tau = params.tau;
    if tau <= 0.0 {
        return Err(ZooError::BadParam(format!("tau = {tau} must be positive")));
    }
    let beta = spectral_norm(p);
    let layout = BlockLayout::flat(n);
    let operator = MonotoneBlockOperator::zero(n);
    let forward = CocoerciveMap::affine(p.clone(), q.clone());
    let metric = DMatrix::identity(n, n) / tau;
    let solver = diagonal_step_solver(
        layout,
        vec![DiagonalTerm::new(ProxFunction::Zero, 1.0)],
        DVector::zeros(n),
        tau,
    );
    let (pv, qv) = (p.clone(), q.clone());
    let value = Arc::new(move |x: &DVector<f64>| 0.5 * (&pv * x).dot(x) + qv.dot(x));
    let (pg, qg) = (p.clone(), q.clone());
    let grad = Arc::new(move |x: &DVector<f64>| &pg * x + &qg);
    let objective = ObjectiveSpec {
        total: value.clone(),
        smooth: Some(SmoothPart {
            value: value.clone(),
            grad,
        }),
    };
    let model = SplittingModel::new(operator, forward, metric, solver)?.with_objective(objective);

    let native = Box::new(GradientNative {
        p: p.clone(),
        q: q.clone(),
        tau,
        x: DVector::zeros(n),
    });
    let oracle = bench::oracle_solve(problem)?;
    let problem_kkt = problem.clone();
    let kkt_fn: Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync> = Arc::new(move |x| {
        bench::kkt_residual(&problem_kkt, x, None).unwrap_or(f64::NAN)
    });
    let admissible = vec![
        range_item("tau_below_two_over_beta", 2.0 / beta - tau),
        CheckItem::info("beta", beta),
    ];
    Ok(AlgorithmFitting {
        name: FittingName::GradientDescent,
        model,
        native,
        x0: DVector::zeros(n),
        x_star: Some(oracle.primal),
        kkt_fn: Some(kkt_fn),
        admissible,
    })
}

struct GradientNative {
    p: DMatrix<f64>,
    q: DVector<f64>,
    tau: f64,
    x: DVector<f64>,
}

impl NativeIterator for GradientNative {
    fn step(&mut self) {
        let grad = &self.p * &self.x + &self.q;
        self.x -= grad * self.tau;
    }
    fn engine_view(&self) -> DVector<f64> {
        self.x.clone()
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        self.x = x0.clone();
    }
}

/// Proximal point iterations `x⁺ = x + γ(prox_{τf}(x) − x)`:
/// `A = ∂f`, `B = 0`, `Q = (1/τ)I`, `γ ∈ ]0, 2[`.
///
/// Supported objectives: an unconstrained convex quadratic, or an
/// L1-regularized least squares whose Gram matrix `MᵀM` is diagonal (then
/// the prox of the whole objective is a componentwise shrinkage).
pub(super) fn classical_ppa(
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    let tau = params.tau;
    let gamma = params.gamma;
    if tau <= 0.0 || gamma <= 0.0 {
        return Err(ZooError::BadParam(format!(
            "tau = {tau} and gamma = {gamma} must be positive"
        )));
    }
    let (prox, n, x_star, kkt_fn): (
        ProxFunction,
        usize,
        DVector<f64>,
        Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>,
    ) = match &problem.data {
        ProblemData::EqualityQP { p, q, a, .. } if a.nrows() == 0 => {
            let oracle = bench::oracle_solve(problem)?;
            let pk = problem.clone();
            (
                ProxFunction::Quadratic {
                    p: p.clone(),
                    q: q.clone(),
                },
                p.nrows(),
                oracle.primal,
                Arc::new(move |x| bench::kkt_residual(&pk, x, None).unwrap_or(f64::NAN)),
            )
        }
        ProblemData::Lasso {
            m_design,
            b,
            lambda,
        } => {
            let gram = m_design.transpose() * m_design;
            let d = gram.diagonal();
            let mut off = gram.clone();
            off.set_diagonal(&DVector::zeros(d.len()));
            if off.amax() > 1e-12 {
                return Err(ZooError::UnsupportedProblem {
                    fitting: "ppa",
                    expected: "lasso with diagonal Gram matrix",
                });
            }
            let p = m_design.ncols();
            let mtb = m_design.transpose() * b;
            let lam = *lambda;
            let (dp, mtbp) = (d.clone(), mtb.clone());
            let prox = ProxFunction::Custom(CustomProx {
                label: "l1_least_squares_diagonal".into(),
                // Componentwise: the prox of ½dᵢxᵢ² − (Mᵀb)ᵢxᵢ + λ|xᵢ| in
                // step τ is a shifted, rescaled soft threshold.
                prox: Arc::new(move |tau, y| {
                    DVector::from_fn(y.len(), |i, _| {
                        let denom = dp[i] + 1.0 / tau;
                        let z = (mtbp[i] + y[i] / tau) / denom;
                        let t = lam / denom;
                        if z > t {
                            z - t
                        } else if z < -t {
                            z + t
                        } else {
                            0.0
                        }
                    })
                }),
                value: {
                    let (m2, b2) = (m_design.clone(), b.clone());
                    Arc::new(move |x: &DVector<f64>| {
                        0.5 * (&m2 * x - &b2).norm_squared()
                            + lam * x.iter().map(|v| v.abs()).sum::<f64>()
                    })
                },
            });
            let oracle = bench::oracle_solve(problem)?;
            let pk = problem.clone();
            (
                prox,
                p,
                oracle.primal,
                Arc::new(move |x| bench::kkt_residual(&pk, x, None).unwrap_or(f64::NAN)),
            )
        }
        _ => {
            return Err(ZooError::UnsupportedProblem {
                fitting: "ppa",
                expected: "unconstrained quadratic or diagonal-Gram lasso",
            })
        }
    };

    let layout = BlockLayout::flat(n);
    let diag = vec![DiagonalTerm::new(prox.clone(), 1.0)];
    let operator = MonotoneBlockOperator::new(
        layout.clone(),
        diag.clone(),
        DMatrix::zeros(n, n),
        None,
        DVector::zeros(n),
    )?;
    let forward = CocoerciveMap::zero(n);
    let metric = DMatrix::identity(n, n) / tau;
    let solver = diagonal_step_solver(layout, diag, DVector::zeros(n), tau);
    let obj_prox = prox.clone();
    let objective = ObjectiveSpec {
        total: Arc::new(move |x: &DVector<f64>| obj_prox.value(x)),
        smooth: None,
    };
    let model = SplittingModel::new(operator, forward, metric, solver)?
        .with_objective(objective)
        .with_km(gamma)?;

    let native = Box::new(PpaNative {
        prox,
        tau,
        gamma,
        x: DVector::zeros(n),
    });
    let admissible = vec![range_item("gamma_below_two", 2.0 - gamma)];
    // Start away from the origin: for the pure-L1 instance x = 0 is already
    // optimal and a zero start would make every trace trivial.
    Ok(AlgorithmFitting {
        name: FittingName::ClassicalPpa,
        model,
        native,
        x0: DVector::from_element(n, 3.0),
        x_star: Some(x_star),
        kkt_fn: Some(kkt_fn),
        admissible,
    })
}

struct PpaNative {
    prox: ProxFunction,
    tau: f64,
    gamma: f64,
    x: DVector<f64>,
}

impl NativeIterator for PpaNative {
    fn step(&mut self) {
        let y = self.prox.prox(self.tau, &self.x);
        if self.gamma == 1.0 {
            self.x = y;
        } else {
            self.x = &self.x + (y - &self.x) * self.gamma;
        }
    }
    fn engine_view(&self) -> DVector<f64> {
        self.x.clone()
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        self.x = x0.clone();
    }
}

/// Forward-backward splitting for L1-regularized least squares (ISTA with
/// optional relaxation): `A = ∂(λ‖·‖₁)`, `B = ∇(½‖Mx − b‖²)`, `Q = (1/τ)I`,
/// admissible `τβ < 2` and `γ ∈ ]0, 2 − τβ/2[`.
pub(super) fn proximal_fbs(
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    let ProblemData::Lasso {
        m_design,
        b,
        lambda,
    } = &problem.data
    else {
        return Err(ZooError::UnsupportedProblem {
            fitting: "pfbs",
            expected: "lasso",
        });
    };
    let tau = params.tau;
    let gamma = params.gamma;
    if tau <= 0.0 || gamma <= 0.0 {
        return Err(ZooError::BadParam(format!(
            "tau = {tau} and gamma = {gamma} must be positive"
        )));
    }
    let p = m_design.ncols();
    let gram = m_design.transpose() * m_design;
    let mtb = m_design.transpose() * b;
    let beta = spectral_norm(&gram);
    let lam = *lambda;

    let layout = BlockLayout::flat(p);
    let diag = vec![DiagonalTerm::new(ProxFunction::L1 { weight: lam }, 1.0)];
    let operator = MonotoneBlockOperator::new(
        layout.clone(),
        diag.clone(),
        DMatrix::zeros(p, p),
        None,
        DVector::zeros(p),
    )?;
    let forward = CocoerciveMap::affine(gram.clone(), -&mtb);
    let metric = DMatrix::identity(p, p) / tau;
    let solver = diagonal_step_solver(layout, diag, DVector::zeros(p), tau);
    let (m2, b2) = (m_design.clone(), b.clone());
    let smooth_value = Arc::new(move |x: &DVector<f64>| 0.5 * (&m2 * x - &b2).norm_squared());
    let (g2, t2) = (gram.clone(), mtb.clone());
    let smooth_grad = Arc::new(move |x: &DVector<f64>| &g2 * x - &t2);
    let sv = smooth_value.clone();
    let objective = ObjectiveSpec {
        total: Arc::new(move |x: &DVector<f64>| {
            sv(x) + lam * x.iter().map(|v| v.abs()).sum::<f64>()
        }),
        smooth: Some(SmoothPart {
            value: smooth_value,
            grad: smooth_grad,
        }),
    };
    let model = SplittingModel::new(operator, forward, metric, solver)?
        .with_objective(objective)
        .with_km(gamma)?;

    let native = Box::new(IstaNative {
        gram,
        mtb,
        tau,
        gamma,
        lam,
        x: DVector::zeros(p),
    });
    let oracle = bench::oracle_solve(problem)?;
    let pk = problem.clone();
    let kkt_fn: Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync> =
        Arc::new(move |x| bench::kkt_residual(&pk, x, None).unwrap_or(f64::NAN));
    let admissible = vec![
        range_item("tau_beta_below_two", 2.0 - tau * beta),
        range_item("gamma_admissible", 2.0 - tau * beta / 2.0 - gamma),
        CheckItem::info("beta", beta),
    ];
    Ok(AlgorithmFitting {
        name: FittingName::ProximalFbs,
        model,
        native,
        x0: DVector::zeros(p),
        x_star: Some(oracle.primal),
        kkt_fn: Some(kkt_fn),
        admissible,
    })
}

struct IstaNative {
    gram: DMatrix<f64>,
    mtb: DVector<f64>,
    tau: f64,
    gamma: f64,
    lam: f64,
    x: DVector<f64>,
}

impl NativeIterator for IstaNative {
    fn step(&mut self) {
        let grad = &self.gram * &self.x - &self.mtb;
        let t = self.tau * self.lam;
        let y = (&self.x - grad * self.tau).map(|v| {
            if v > t {
                v - t
            } else if v < -t {
                v + t
            } else {
                0.0
            }
        });
        if self.gamma == 1.0 {
            self.x = y;
        } else {
            self.x = &self.x + (y - &self.x) * self.gamma;
        }
    }
    fn engine_view(&self) -> DVector<f64> {
        self.x.clone()
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        self.x = x0.clone();
    }
}
