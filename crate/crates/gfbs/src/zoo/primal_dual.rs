//! Primal-dual fittings on 1-D total-variation denoising
//! `min ½‖u − b‖² + λ‖Du‖₁`, with `D` the forward-difference matrix.
//!
//! The dual variable `s` lives on the edges and satisfies, at optimality,
//! `u − b + Dᵀs = 0` with `s ∈ λ∂‖Du‖₁`; the reference pair comes from the
//! independent active-set oracle in the problem bench.

use super::*;
use crate::bench::{self, difference_matrix, ProblemData, ProblemKind};
use crate::block::BlockLayout;
use crate::engine::{GVariant, ObjectiveSpec, SmoothPart, SplittingModel, StepSolver};
use crate::engine::diagonal_step_solver;
use crate::operators::{gram_norm, spectral_norm, CocoerciveMap, DiagonalTerm, MonotoneBlockOperator};
use crate::prox::ProxFunction;
use crate::report::CheckItem;

struct Tv {
    d: DMatrix<f64>,
    b: DVector<f64>,
    lambda: f64,
    /// Signal length.
    n: usize,
    /// Edge count `n − 1`.
    m: usize,
}

fn tv(problem: &ProblemInstance, fitting: &'static str) -> Result<Tv, ZooError> {
    let ProblemData::Tv1D { b, lambda } = &problem.data else {
        return Err(ZooError::UnsupportedProblem {
            fitting,
            expected: "total-variation denoising",
        });
    };
    let n = b.len();
    if n < 2 {
        return Err(ZooError::BadParam("signal too short".into()));
    }
    Ok(Tv {
        d: difference_matrix(n),
        b: b.clone(),
        lambda: *lambda,
        n,
        m: n - 1,
    })
}

fn box_prox(m: usize, lambda: f64) -> ProxFunction {
    ProxFunction::IndicatorBox {
        lo: DVector::from_element(m, -lambda),
        hi: DVector::from_element(m, lambda),
    }
}

fn clamp_box(y: &DVector<f64>, lambda: f64) -> DVector<f64> {
    y.map(|v| v.clamp(-lambda, lambda))
}

/// KKT closure for engine states that carry `(s, u)` or `(u, s)` blocks.
fn tv_kkt(
    problem: &ProblemInstance,
    u_at: usize,
    n: usize,
    s_at: usize,
    m: usize,
) -> Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync> {
    let pk = problem.clone();
    Arc::new(move |x| {
        let u = segment(x, u_at, n);
        let s = segment(x, s_at, m);
        bench::kkt_residual(&pk, &u, Some(&s)).unwrap_or(f64::NAN)
    })
}

pub(super) fn default_params(name: FittingName, problem: &ProblemInstance) -> FittingParams {
    let (norm_d_sq, _) = match &problem.data {
        ProblemData::Tv1D { b, .. } => {
            let d = difference_matrix(b.len());
            (gram_norm(&d), ())
        }
        _ => (4.0, ()),
    };
    let norm_d = norm_d_sq.sqrt();
    match name {
        FittingName::ChambollePock => FittingParams {
            tau: 0.95 / norm_d,
            sigma: 0.95 / norm_d,
            ..Default::default()
        },
        FittingName::AriasCombettes => FittingParams {
            tau: 0.9 / norm_d,
            ..Default::default()
        },
        FittingName::DykstraDual => FittingParams {
            tau: 1.0 / norm_d_sq,
            ..Default::default()
        },
        FittingName::Papc => FittingParams {
            sigma: 1.0,
            // β = 1, so admissibility needs τ < min{2, (2 − σ)/(2σ‖DᵀD‖)}.
            tau: 0.9 * (2.0f64).min(0.5 / norm_d_sq),
            ..Default::default()
        },
        FittingName::Afba => FittingParams {
            sigma: 1.0,
            tau: 0.45 / norm_d_sq,
            ..Default::default()
        },
        FittingName::CondatI | FittingName::CondatII => {
            let sum_norm = norm_d_sq + 1.0; // ‖DᵀD + I‖
            FittingParams {
                mu: 0.5,
                sigma: 0.5,
                tau: 1.0 / sum_norm,
                ..Default::default()
            }
        }
        _ => FittingParams::default(),
    }
}

/// Chambolle–Pock on `min h(u) + g(Du)` with `h = ½‖· − b‖²`, `g = λ‖·‖₁`.
/// State `(s, u)` where `u` is the most recent primal point; metric
/// `Q = [[(1/σ)I, −D], [−Dᵀ, (1/τ)I]]`, admissible `στ‖DᵀD‖ < 1`.
pub(super) fn chambolle_pock(
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    let tvp = tv(problem, "chambolle_pock")?;
    let (tau, sigma, gamma) = (params.tau, params.sigma, params.gamma);
    if tau <= 0.0 || sigma <= 0.0 || gamma <= 0.0 {
        return Err(ZooError::BadParam("tau, sigma, gamma must be positive".into()));
    }
    let (n, m) = (tvp.n, tvp.m);
    let layout = BlockLayout::new(&[("s", m), ("u", n)]).expect("distinct names");
    let h = ProxFunction::SquaredL2 {
        center: tvp.b.clone(),
        weight: 1.0,
    };
    let diag = vec![
        DiagonalTerm::new(box_prox(m, tvp.lambda), 1.0),
        DiagonalTerm::new(h.clone(), 1.0),
    ];
    let mut skew = DMatrix::zeros(m + n, m + n);
    place(&mut skew, 0, m, &(-tvp.d.clone()));
    place(&mut skew, m, 0, &tvp.d.transpose());
    let operator =
        MonotoneBlockOperator::new(layout, diag, skew, None, DVector::zeros(m + n))?;

    let mut q_raw = DMatrix::zeros(m + n, m + n);
    place(&mut q_raw, 0, 0, &(DMatrix::identity(m, m) / sigma));
    place(&mut q_raw, 0, m, &(-tvp.d.clone()));
    place(&mut q_raw, m, 0, &(-tvp.d.transpose()));
    place(&mut q_raw, m, m, &(DMatrix::identity(n, n) / tau));

    let (d2, lam) = (tvp.d.clone(), tvp.lambda);
    let h2 = h.clone();
    let solver: StepSolver = Arc::new(move |x, _w| {
        let s = segment(x, 0, m);
        let u = segment(x, m, n);
        let u_t = h2.prox(tau, &(&u - d2.transpose() * &s * tau));
        let s_t = clamp_box(&(&s + &d2 * (&u_t * 2.0 - &u) * sigma), lam);
        Ok(stack(&[&s_t, &u_t]))
    });
    let model = SplittingModel::new(operator, CocoerciveMap::zero(m + n), q_raw, solver)?
        .with_km(gamma)?;

    let native = Box::new(CpNative {
        d: tvp.d.clone(),
        h,
        lambda: tvp.lambda,
        tau,
        sigma,
        gamma,
        s: DVector::zeros(m),
        u: DVector::zeros(n),
    });
    let oracle = bench::oracle_solve(problem)?;
    let x_star = stack(&[oracle.dual.as_ref().expect("tv dual"), &oracle.primal]);
    let admissible = vec![
        range_item("sigma_tau_gram_below_one", 1.0 - sigma * tau * gram_norm(&tvp.d)),
        range_item("gamma_below_two", 2.0 - gamma),
    ];
    Ok(AlgorithmFitting {
        name: FittingName::ChambollePock,
        model,
        native,
        x0: DVector::zeros(m + n),
        x_star: Some(x_star),
        kkt_fn: Some(tv_kkt(problem, m, n, 0, m)),
        admissible,
    })
}

struct CpNative {
    d: DMatrix<f64>,
    h: ProxFunction,
    lambda: f64,
    tau: f64,
    sigma: f64,
    gamma: f64,
    s: DVector<f64>,
    u: DVector<f64>,
}

impl NativeIterator for CpNative {
    fn step(&mut self) {
        let u_hat = self
            .h
            .prox(self.tau, &(&self.u - self.d.transpose() * &self.s * self.tau));
        let s_hat = clamp_box(
            &(&self.s + &self.d * (&u_hat * 2.0 - &self.u) * self.sigma),
            self.lambda,
        );
        if self.gamma == 1.0 {
            self.s = s_hat;
            self.u = u_hat;
        } else {
            self.s = &self.s + (s_hat - &self.s) * self.gamma;
            self.u = &self.u + (u_hat - &self.u) * self.gamma;
        }
    }
    fn engine_view(&self) -> DVector<f64> {
        stack(&[&self.s, &self.u])
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        let m = self.s.len();
        self.s = segment(x0, 0, m);
        self.u = segment(x0, m, self.u.len());
    }
}

/// The fully decoupled primal-dual scheme with state `(u, s)`,
/// `Q = (1/τ)[[I, −τDᵀ], [τD, I]]` and relaxation `M = τQ`, so `S = (1/τ)I`;
/// admissible `τ‖D‖ < 1`.
pub(super) fn arias_combettes(
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    let tvp = tv(problem, "arias_combettes")?;
    let tau = params.tau;
    if tau <= 0.0 {
        return Err(ZooError::BadParam("tau must be positive".into()));
    }
    let (n, m) = (tvp.n, tvp.m);
    let layout = BlockLayout::new(&[("u", n), ("s", m)]).expect("distinct names");
    let h = ProxFunction::SquaredL2 {
        center: tvp.b.clone(),
        weight: 1.0,
    };
    let diag = vec![
        DiagonalTerm::new(h.clone(), 1.0),
        DiagonalTerm::new(box_prox(m, tvp.lambda), 1.0),
    ];
    let mut skew = DMatrix::zeros(n + m, n + m);
    place(&mut skew, 0, n, &tvp.d.transpose());
    place(&mut skew, n, 0, &(-tvp.d.clone()));
    let operator =
        MonotoneBlockOperator::new(layout, diag, skew, None, DVector::zeros(n + m))?;

    let mut q_raw = DMatrix::zeros(n + m, n + m);
    place(&mut q_raw, 0, 0, &(DMatrix::identity(n, n) / tau));
    place(&mut q_raw, 0, n, &(-tvp.d.transpose()));
    place(&mut q_raw, n, 0, &tvp.d.clone());
    place(&mut q_raw, n, n, &(DMatrix::identity(m, m) / tau));
    let m_op = &q_raw * tau;

    let (d2, lam) = (tvp.d.clone(), tvp.lambda);
    let h2 = h.clone();
    let solver: StepSolver = Arc::new(move |x, _w| {
        let u = segment(x, 0, n);
        let s = segment(x, n, m);
        let u_t = h2.prox(tau, &(&u - d2.transpose() * &s * tau));
        let s_t = clamp_box(&(&s + &d2 * &u * tau), lam);
        Ok(stack(&[&u_t, &s_t]))
    });
    let model = SplittingModel::new(operator, CocoerciveMap::zero(n + m), q_raw, solver)?
        .with_relaxation(m_op, None, GVariant::Degenerate)?;

    let native = Box::new(AriasNative {
        d: tvp.d.clone(),
        h,
        lambda: tvp.lambda,
        tau,
        u: DVector::zeros(n),
        s: DVector::zeros(m),
    });
    let oracle = bench::oracle_solve(problem)?;
    let x_star = stack(&[&oracle.primal, oracle.dual.as_ref().expect("tv dual")]);
    let admissible = vec![range_item(
        "tau_norm_below_one",
        1.0 - tau * gram_norm(&tvp.d).sqrt(),
    )];
    Ok(AlgorithmFitting {
        name: FittingName::AriasCombettes,
        model,
        native,
        x0: DVector::zeros(n + m),
        x_star: Some(x_star),
        kkt_fn: Some(tv_kkt(problem, 0, n, n, m)),
        admissible,
    })
}

struct AriasNative {
    d: DMatrix<f64>,
    h: ProxFunction,
    lambda: f64,
    tau: f64,
    u: DVector<f64>,
    s: DVector<f64>,
}

impl NativeIterator for AriasNative {
    fn step(&mut self) {
        // Two independent proxes, then a skew coupling of the displacements.
        let p = self
            .h
            .prox(self.tau, &(&self.u - self.d.transpose() * &self.s * self.tau));
        let q = clamp_box(&(&self.s + &self.d * &self.u * self.tau), self.lambda);
        let u_next = &p - self.d.transpose() * (&q - &self.s) * self.tau;
        let s_next = &q + &self.d * (&p - &self.u) * self.tau;
        self.u = u_next;
        self.s = s_next;
    }
    fn engine_view(&self) -> DVector<f64> {
        stack(&[&self.u, &self.s])
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        self.u = segment(x0, 0, self.d.ncols());
        self.s = segment(x0, self.d.ncols(), self.d.nrows());
    }
}

/// Projected gradient on the dual of TV denoising (the Dykstra-style
/// alternating scheme in its dual form): state `s` only, `A = N_{[−λ,λ]}`,
/// `B = ∇(½‖b − Dᵀs‖²)`, `β = ‖DDᵀ‖`, admissible `τβ < 2`,
/// `γ ∈ ]0, 2 − τβ/2[`.
pub(super) fn dykstra_dual(
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    let tvp = tv(problem, "dykstra")?;
    let (tau, gamma) = (params.tau, params.gamma);
    if tau <= 0.0 || gamma <= 0.0 {
        return Err(ZooError::BadParam("tau, gamma must be positive".into()));
    }
    let m = tvp.m;
    let layout = BlockLayout::flat(m);
    let diag = vec![DiagonalTerm::new(box_prox(m, tvp.lambda), 1.0)];
    let operator = MonotoneBlockOperator::new(
        layout.clone(),
        diag.clone(),
        DMatrix::zeros(m, m),
        None,
        DVector::zeros(m),
    )?;
    let ddt = &tvp.d * tvp.d.transpose();
    let db = &tvp.d * &tvp.b;
    let beta = spectral_norm(&ddt);
    let forward = CocoerciveMap::affine(ddt.clone(), -&db);
    let metric = DMatrix::identity(m, m) / tau;
    let solver = diagonal_step_solver(layout, diag, DVector::zeros(m), tau);

    let (ddt2, db2, b2, bp) = (ddt.clone(), db.clone(), tvp.b.clone(), box_prox(m, tvp.lambda));
    let smooth_value = Arc::new(move |s: &DVector<f64>| {
        // ½‖b − Dᵀs‖² without materializing Dᵀ: expand through DDᵀ and Db.
        0.5 * ((&ddt2 * s).dot(s)) - db2.dot(s) + 0.5 * b2.norm_squared()
    });
    let (ddt3, db3) = (ddt.clone(), db.clone());
    let smooth_grad = Arc::new(move |s: &DVector<f64>| &ddt3 * s - &db3);
    let sv = smooth_value.clone();
    let objective = ObjectiveSpec {
        total: Arc::new(move |s: &DVector<f64>| sv(s) + bp.value(s)),
        smooth: Some(SmoothPart {
            value: smooth_value,
            grad: smooth_grad,
        }),
    };
    let model = SplittingModel::new(operator, forward, metric, solver)?
        .with_objective(objective)
        .with_km(gamma)?;

    let native = Box::new(DykstraNative {
        d: tvp.d.clone(),
        b: tvp.b.clone(),
        lambda: tvp.lambda,
        tau,
        gamma,
        s: DVector::zeros(m),
    });
    let oracle = bench::oracle_solve(problem)?;
    let x_star = oracle.dual.clone().expect("tv dual");
    let pk = problem.clone();
    let (dk, bk) = (tvp.d.clone(), tvp.b.clone());
    let kkt_fn: Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync> = Arc::new(move |s| {
        let u = &bk - dk.transpose() * s;
        bench::kkt_residual(&pk, &u, Some(s)).unwrap_or(f64::NAN)
    });
    let admissible = vec![
        range_item("tau_beta_below_two", 2.0 - tau * beta),
        range_item("gamma_admissible", 2.0 - tau * beta / 2.0 - gamma),
        CheckItem::info("beta", beta),
    ];
    Ok(AlgorithmFitting {
        name: FittingName::DykstraDual,
        model,
        native,
        x0: DVector::zeros(m),
        x_star: Some(x_star),
        kkt_fn: Some(kkt_fn),
        admissible,
    })
}

struct DykstraNative {
    d: DMatrix<f64>,
    b: DVector<f64>,
    lambda: f64,
    tau: f64,
    gamma: f64,
    s: DVector<f64>,
}

impl NativeIterator for DykstraNative {
    fn step(&mut self) {
        // Displayed form with the explicit primal estimate u = b − Dᵀs.
        let u = &self.b - self.d.transpose() * &self.s;
        let s_hat = clamp_box(&(&self.s + &self.d * &u * self.tau), self.lambda);
        if self.gamma == 1.0 {
            self.s = s_hat;
        } else {
            self.s = &self.s + (s_hat - &self.s) * self.gamma;
        }
    }
    fn engine_view(&self) -> DVector<f64> {
        self.s.clone()
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        self.s = x0.clone();
    }
}

/// PAPC / PDFP²O: state `(s, u)`, `Q = blkdiag((1/σ)I − τDDᵀ, (1/τ)I)`,
/// forward map `(0, ∇f(u))` with `β = 1`; admissible
/// `τ < min{2/β, (2 − βσ)/(2σ‖DᵀD‖)}`.
pub(super) fn papc(
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    let tvp = tv(problem, "papc")?;
    let (tau, sigma, gamma) = (params.tau, params.sigma, params.gamma);
    if tau <= 0.0 || sigma <= 0.0 || gamma <= 0.0 {
        return Err(ZooError::BadParam("tau, sigma, gamma must be positive".into()));
    }
    let (n, m) = (tvp.n, tvp.m);
    let layout = BlockLayout::new(&[("s", m), ("u", n)]).expect("distinct names");
    let diag = vec![
        DiagonalTerm::new(box_prox(m, tvp.lambda), 1.0),
        DiagonalTerm::new(ProxFunction::Zero, 1.0),
    ];
    let mut skew = DMatrix::zeros(m + n, m + n);
    place(&mut skew, 0, m, &(-tvp.d.clone()));
    place(&mut skew, m, 0, &tvp.d.transpose());
    let operator =
        MonotoneBlockOperator::new(layout, diag, skew, None, DVector::zeros(m + n))?;

    let ddt = &tvp.d * tvp.d.transpose();
    let mut q_raw = DMatrix::zeros(m + n, m + n);
    place(
        &mut q_raw,
        0,
        0,
        &(DMatrix::identity(m, m) / sigma - &ddt * tau),
    );
    place(&mut q_raw, m, m, &(DMatrix::identity(n, n) / tau));

    // Forward map (0, u − b).
    let mut h_fwd = DMatrix::zeros(m + n, m + n);
    place(&mut h_fwd, m, m, &DMatrix::identity(n, n));
    let g_fwd = stack(&[&DVector::zeros(m), &(-tvp.b.clone())]);
    let forward = CocoerciveMap::affine(h_fwd, g_fwd);

    let (d2, ddt2, lam) = (tvp.d.clone(), ddt.clone(), tvp.lambda);
    let solver: StepSolver = Arc::new(move |x, w| {
        let s = segment(x, 0, m);
        let u = segment(x, m, n);
        let w_u = segment(w, m, n);
        let u_half = &u - &w_u * tau;
        let s_t = clamp_box(&(&s - &ddt2 * &s * (sigma * tau) + &d2 * &u_half * sigma), lam);
        let u_t = &u_half - d2.transpose() * &s_t * tau;
        Ok(stack(&[&s_t, &u_t]))
    });
    let model = SplittingModel::new(operator, forward, q_raw, solver)?.with_km(gamma)?;

    let native = Box::new(PapcNative {
        d: tvp.d.clone(),
        b: tvp.b.clone(),
        lambda: tvp.lambda,
        tau,
        sigma,
        gamma,
        s: DVector::zeros(m),
        u: DVector::zeros(n),
    });
    let oracle = bench::oracle_solve(problem)?;
    let x_star = stack(&[oracle.dual.as_ref().expect("tv dual"), &oracle.primal]);
    let gram = gram_norm(&tvp.d);
    let admissible = vec![
        range_item("tau_below_two_over_beta", 2.0 - tau),
        range_item(
            "tau_below_coupling_bound",
            (2.0 - sigma) / (2.0 * sigma * gram) - tau,
        ),
        CheckItem::info(
            "nu_lower_bound_estimate",
            (1.0 / sigma - tau * gram).min(1.0 / tau),
        ),
    ];
    Ok(AlgorithmFitting {
        name: FittingName::Papc,
        model,
        native,
        x0: DVector::zeros(m + n),
        x_star: Some(x_star),
        kkt_fn: Some(tv_kkt(problem, m, n, 0, m)),
        admissible,
    })
}

struct PapcNative {
    d: DMatrix<f64>,
    b: DVector<f64>,
    lambda: f64,
    tau: f64,
    sigma: f64,
    gamma: f64,
    s: DVector<f64>,
    u: DVector<f64>,
}

impl NativeIterator for PapcNative {
    fn step(&mut self) {
        let u_half = &self.u - (&self.u - &self.b) * self.tau;
        let s_hat = clamp_box(
            &(&self.s + &self.d * (&u_half - self.d.transpose() * &self.s * self.tau) * self.sigma),
            self.lambda,
        );
        let u_hat = &u_half - self.d.transpose() * &s_hat * self.tau;
        if self.gamma == 1.0 {
            self.s = s_hat;
            self.u = u_hat;
        } else {
            self.s = &self.s + (s_hat - &self.s) * self.gamma;
            self.u = &self.u + (u_hat - &self.u) * self.gamma;
        }
    }
    fn engine_view(&self) -> DVector<f64> {
        stack(&[&self.s, &self.u])
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        let m = self.s.len();
        self.s = segment(x0, 0, m);
        self.u = segment(x0, m, self.u.len());
    }
}

/// Asymmetric forward-backward-adjoint splitting: state `(s, u)`, triangular
/// metric `Q = [[(1/σ)I, 0], [−Dᵀ, (1/τ)I]]`, relaxation
/// `M = [[I, 0], [−τDᵀ, I]]` (so `S = blkdiag((1/σ)I, (1/τ)I)`); uses the
/// identity-shifted decrement matrix.
pub(super) fn afba(
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    let tvp = tv(problem, "afba")?;
    let (tau, sigma) = (params.tau, params.sigma);
    if tau <= 0.0 || sigma <= 0.0 {
        return Err(ZooError::BadParam("tau, sigma must be positive".into()));
    }
    let (n, m) = (tvp.n, tvp.m);
    let layout = BlockLayout::new(&[("s", m), ("u", n)]).expect("distinct names");
    let diag = vec![
        DiagonalTerm::new(box_prox(m, tvp.lambda), 1.0),
        DiagonalTerm::new(ProxFunction::Zero, 1.0),
    ];
    let mut skew = DMatrix::zeros(m + n, m + n);
    place(&mut skew, 0, m, &(-tvp.d.clone()));
    place(&mut skew, m, 0, &tvp.d.transpose());
    let operator =
        MonotoneBlockOperator::new(layout, diag, skew, None, DVector::zeros(m + n))?;

    let mut q_raw = DMatrix::zeros(m + n, m + n);
    place(&mut q_raw, 0, 0, &(DMatrix::identity(m, m) / sigma));
    place(&mut q_raw, m, 0, &(-tvp.d.transpose()));
    place(&mut q_raw, m, m, &(DMatrix::identity(n, n) / tau));
    let mut m_op = DMatrix::identity(m + n, m + n);
    place(&mut m_op, m, 0, &(-tvp.d.transpose() * tau));

    let mut h_fwd = DMatrix::zeros(m + n, m + n);
    place(&mut h_fwd, m, m, &DMatrix::identity(n, n));
    let g_fwd = stack(&[&DVector::zeros(m), &(-tvp.b.clone())]);
    let forward = CocoerciveMap::affine(h_fwd, g_fwd);

    let (d2, lam) = (tvp.d.clone(), tvp.lambda);
    let solver: StepSolver = Arc::new(move |x, w| {
        let s = segment(x, 0, m);
        let u = segment(x, m, n);
        let w_u = segment(w, m, n);
        let u_t = &u - (&w_u + d2.transpose() * &s) * tau;
        let s_t = clamp_box(&(&s + &d2 * &u_t * sigma), lam);
        Ok(stack(&[&s_t, &u_t]))
    });
    let model = SplittingModel::new(operator, forward, q_raw, solver)?.with_relaxation(
        m_op,
        None,
        GVariant::NonDegenerate,
    )?;

    let native = Box::new(AfbaNative {
        d: tvp.d.clone(),
        b: tvp.b.clone(),
        lambda: tvp.lambda,
        tau,
        sigma,
        s: DVector::zeros(m),
        u: DVector::zeros(n),
    });
    let oracle = bench::oracle_solve(problem)?;
    let x_star = stack(&[oracle.dual.as_ref().expect("tv dual"), &oracle.primal]);
    let ddt_norm = spectral_norm(&(&tvp.d * tvp.d.transpose()));
    let admissible = vec![
        // G ⪰ 0 needs 1/σ − τ‖DDᵀ‖ ≥ β/2 and 1/τ ≥ β/2 with β = 1.
        range_item("dual_block_margin", 1.0 / sigma - tau * ddt_norm - 0.5),
        range_item("primal_block_margin", 1.0 / tau - 0.5),
    ];
    Ok(AlgorithmFitting {
        name: FittingName::Afba,
        model,
        native,
        x0: DVector::zeros(m + n),
        x_star: Some(x_star),
        kkt_fn: Some(tv_kkt(problem, m, n, 0, m)),
        admissible,
    })
}

struct AfbaNative {
    d: DMatrix<f64>,
    b: DVector<f64>,
    lambda: f64,
    tau: f64,
    sigma: f64,
    s: DVector<f64>,
    u: DVector<f64>,
}

impl NativeIterator for AfbaNative {
    fn step(&mut self) {
        // Three-line displayed form with the intermediate point w.
        let w = &self.u - ((&self.u - &self.b) + self.d.transpose() * &self.s) * self.tau;
        let s_next = clamp_box(&(&self.s + &self.d * &w * self.sigma), self.lambda);
        let u_next = &w - self.d.transpose() * (&s_next - &self.s) * self.tau;
        self.s = s_next;
        self.u = u_next;
    }
    fn engine_view(&self) -> DVector<f64> {
        stack(&[&self.s, &self.u])
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        let m = self.s.len();
        self.s = segment(x0, 0, m);
        self.u = segment(x0, m, self.u.len());
    }
}

/// Condat's primal-dual splitting with two dual blocks on
/// `min ½‖u − b‖² + λ‖Du‖₁ + (μ/2)‖u‖²`: state `(u, s₁, s₂)` with
/// `s₁` attached to `λ‖·‖₁ ∘ D` and `s₂` to `(μ/2)‖·‖² ∘ I`.
/// `swap_order = false` solves the primal block first (variant I);
/// `swap_order = true` flips the off-diagonal metric signs and solves the
/// dual blocks first (variant II). Admissible `τσ‖DᵀD + I‖ ≤ 1`.
pub(super) fn condat(
    problem: &ProblemInstance,
    params: &FittingParams,
    swap_order: bool,
) -> Result<AlgorithmFitting, ZooError> {
    let tvp = tv(problem, if swap_order { "condat2" } else { "condat1" })?;
    let (tau, sigma, gamma, mu) = (params.tau, params.sigma, params.gamma, params.mu);
    if tau <= 0.0 || sigma <= 0.0 || gamma <= 0.0 || mu <= 0.0 {
        return Err(ZooError::BadParam(
            "tau, sigma, gamma, mu must be positive".into(),
        ));
    }
    let (n, m) = (tvp.n, tvp.m);
    let dim = n + m + n;
    let layout = BlockLayout::new(&[("u", n), ("s1", m), ("s2", n)]).expect("distinct names");
    // g₂ = (μ/2)‖·‖², so g₂* = (1/2μ)‖·‖².
    let g2_conj = ProxFunction::SquaredL2 {
        center: DVector::zeros(n),
        weight: 1.0 / mu,
    };
    let diag = vec![
        DiagonalTerm::new(ProxFunction::Zero, 1.0),
        DiagonalTerm::new(box_prox(m, tvp.lambda), 1.0),
        DiagonalTerm::new(g2_conj.clone(), 1.0),
    ];
    let eye_n = DMatrix::identity(n, n);
    let mut skew = DMatrix::zeros(dim, dim);
    place(&mut skew, 0, n, &tvp.d.transpose());
    place(&mut skew, 0, n + m, &eye_n);
    place(&mut skew, n, 0, &(-tvp.d.clone()));
    place(&mut skew, n + m, 0, &(-eye_n.clone()));
    let operator = MonotoneBlockOperator::new(layout, diag, skew, None, DVector::zeros(dim))?;

    let sign = if swap_order { 1.0 } else { -1.0 };
    let mut q_raw = DMatrix::zeros(dim, dim);
    place(&mut q_raw, 0, 0, &(&eye_n / tau));
    place(&mut q_raw, 0, n, &(tvp.d.transpose() * sign));
    place(&mut q_raw, 0, n + m, &(&eye_n * sign));
    place(&mut q_raw, n, 0, &(tvp.d.clone() * sign));
    place(&mut q_raw, n, n, &(DMatrix::identity(m, m) / sigma));
    place(&mut q_raw, n + m, 0, &(&eye_n * sign));
    place(&mut q_raw, n + m, n + m, &(&eye_n / sigma));

    let mut h_fwd = DMatrix::zeros(dim, dim);
    place(&mut h_fwd, 0, 0, &eye_n);
    let g_fwd = stack(&[&(-tvp.b.clone()), &DVector::zeros(m + n)]);
    let forward = CocoerciveMap::affine(h_fwd, g_fwd);

    let (d2, lam) = (tvp.d.clone(), tvp.lambda);
    let g2c = g2_conj.clone();
    let solver: StepSolver = Arc::new(move |x, w| {
        let u = segment(x, 0, n);
        let s1 = segment(x, n, m);
        let s2 = segment(x, n + m, n);
        let w_u = segment(w, 0, n);
        if swap_order {
            let s1_t = clamp_box(&(&s1 + &d2 * &u * sigma), lam);
            let s2_t = g2c.prox(sigma, &(&s2 + &u * sigma));
            let u_t = &u
                - (&w_u + d2.transpose() * (&s1_t * 2.0 - &s1) + (&s2_t * 2.0 - &s2)) * tau;
            Ok(stack(&[&u_t, &s1_t, &s2_t]))
        } else {
            let u_t = &u - (&w_u + d2.transpose() * &s1 + &s2) * tau;
            let s1_t = clamp_box(&(&s1 + &d2 * (&u_t * 2.0 - &u) * sigma), lam);
            let s2_t = g2c.prox(sigma, &(&s2 + (&u_t * 2.0 - &u) * sigma));
            Ok(stack(&[&u_t, &s1_t, &s2_t]))
        }
    });
    let model = SplittingModel::new(operator, forward, q_raw, solver)?.with_km(gamma)?;

    let native = Box::new(CondatNative {
        d: tvp.d.clone(),
        b: tvp.b.clone(),
        lambda: tvp.lambda,
        tau,
        sigma,
        gamma,
        mu,
        swap_order,
        u: DVector::zeros(n),
        s1: DVector::zeros(m),
        s2: DVector::zeros(n),
    });

    // Reference: the μ-augmented objective rescales to plain TV denoising
    // with data b/(1+μ) and weight λ/(1+μ); the multipliers scale back.
    let scaled = ProblemInstance {
        kind: ProblemKind::Tv1D,
        seed: problem.seed,
        dims: problem.dims,
        data: ProblemData::Tv1D {
            b: &tvp.b / (1.0 + mu),
            lambda: tvp.lambda / (1.0 + mu),
        },
    };
    let oracle = bench::oracle_solve(&scaled)?;
    let u_star = oracle.primal.clone();
    let s1_star = oracle.dual.as_ref().expect("tv dual") * (1.0 + mu);
    let s2_star = &u_star * mu;
    let x_star = stack(&[&u_star, &s1_star, &s2_star]);

    let (dk, bk, lamk) = (tvp.d.clone(), tvp.b.clone(), tvp.lambda);
    let kkt_fn: Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync> = Arc::new(move |x| {
        let u = segment(x, 0, n);
        let s1 = segment(x, n, m);
        let s2 = segment(x, n + m, n);
        let stat = &u - &bk + dk.transpose() * &s1 + &s2;
        let du = &dk * &u;
        let mut sq = stat.norm_squared() + (&s2 - &u * mu).norm_squared();
        for i in 0..m {
            let r = if du[i].abs() > 1e-11 {
                s1[i] - lamk * du[i].signum()
            } else {
                (s1[i].abs() - lamk).max(0.0)
            };
            sq += r * r;
        }
        sq.sqrt()
    });

    let sum_norm = spectral_norm(&(tvp.d.transpose() * &tvp.d + &eye_n));
    let admissible = vec![
        range_item("tau_sigma_sum_norm_at_most_one", 1.0 - tau * sigma * sum_norm),
        CheckItem::info(
            "gamma_upper_bound_estimate",
            2.0 - 0.5 / (1.0 / tau - sigma * sum_norm),
        ),
    ];
    Ok(AlgorithmFitting {
        name: if swap_order {
            FittingName::CondatII
        } else {
            FittingName::CondatI
        },
        model,
        native,
        x0: DVector::zeros(dim),
        x_star: Some(x_star),
        kkt_fn: Some(kkt_fn),
        admissible,
    })
}

struct CondatNative {
    d: DMatrix<f64>,
    b: DVector<f64>,
    lambda: f64,
    tau: f64,
    sigma: f64,
    gamma: f64,
    mu: f64,
    swap_order: bool,
    u: DVector<f64>,
    s1: DVector<f64>,
    s2: DVector<f64>,
}

impl NativeIterator for CondatNative {
    fn step(&mut self) {
        let grad = &self.u - &self.b;
        let (u_hat, s1_hat, s2_hat) = if self.swap_order {
            let s1_hat = clamp_box(&(&self.s1 + &self.d * &self.u * self.sigma), self.lambda);
            let s2_hat = (&self.s2 + &self.u * self.sigma) / (1.0 + self.sigma / self.mu);
            let u_hat = &self.u
                - (grad
                    + self.d.transpose() * (&s1_hat * 2.0 - &self.s1)
                    + (&s2_hat * 2.0 - &self.s2))
                    * self.tau;
            (u_hat, s1_hat, s2_hat)
        } else {
            let u_hat =
                &self.u - (grad + self.d.transpose() * &self.s1 + &self.s2) * self.tau;
            let s1_hat = clamp_box(
                &(&self.s1 + &self.d * (&u_hat * 2.0 - &self.u) * self.sigma),
                self.lambda,
            );
            let s2_hat =
                (&self.s2 + (&u_hat * 2.0 - &self.u) * self.sigma) / (1.0 + self.sigma / self.mu);
            (u_hat, s1_hat, s2_hat)
        };
        if self.gamma == 1.0 {
            self.u = u_hat;
            self.s1 = s1_hat;
            self.s2 = s2_hat;
        } else {
            self.u = &self.u + (u_hat - &self.u) * self.gamma;
            self.s1 = &self.s1 + (s1_hat - &self.s1) * self.gamma;
            self.s2 = &self.s2 + (s2_hat - &self.s2) * self.gamma;
        }
    }
    fn engine_view(&self) -> DVector<f64> {
        stack(&[&self.u, &self.s1, &self.s2])
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        let n = self.u.len();
        let m = self.s1.len();
        self.u = segment(x0, 0, n);
        self.s1 = segment(x0, n, m);
        self.s2 = segment(x0, n + m, n);
    }
}
