//! Multiplier methods for linearly constrained problems: the augmented
//! Lagrangian method, its prox-linearized variant, and linearized Bregman
//! iterations. State is `x = (u, s)` with `s` the constraint multiplier;
//! the saddle operator is
//!
//! ```text
//! 𝒜(u, s) = (∂f(u) − Aᵀs, Au − c)
//! ```
//!
//! and each variant differs only in the metric placed on the two blocks.

use super::*;
use crate::bench::{self, ProblemData};
use crate::block::BlockLayout;
use crate::engine::{SplittingModel, StepSolver};
use crate::operators::{gram_norm, CocoerciveMap, DiagonalTerm, MonotoneBlockOperator};
use crate::prox::ProxFunction;
use crate::report::CheckItem;

pub(super) fn default_params(name: FittingName, problem: &ProblemInstance) -> FittingParams {
    let gram = match &problem.data {
        ProblemData::EqualityQP { a, .. } => gram_norm(a),
        _ => 1.0,
    };
    match name {
        FittingName::Alm => FittingParams::default(),
        FittingName::LinearizedAlm => FittingParams {
            rho: 1.0,
            tau: 0.9 / gram.max(1e-12),
            ..Default::default()
        },
        FittingName::LinearizedBregman => FittingParams {
            rho: 0.9 / gram.max(1e-12),
            tau: 1.0,
            ..Default::default()
        },
        _ => FittingParams::default(),
    }
}

struct Pieces<'a> {
    p: &'a DMatrix<f64>,
    q: &'a DVector<f64>,
    a: &'a DMatrix<f64>,
    c: &'a DVector<f64>,
}

fn constrained_qp<'a>(
    problem: &'a ProblemInstance,
    fitting: &'static str,
) -> Result<Pieces<'a>, ZooError> {
    match &problem.data {
        ProblemData::EqualityQP { p, q, a, c } if a.nrows() >= 1 => Ok(Pieces { p, q, a, c }),
        _ => Err(ZooError::UnsupportedProblem {
            fitting,
            expected: "equality-constrained quadratic",
        }),
    }
}

fn saddle_operator(pieces: &Pieces<'_>) -> Result<MonotoneBlockOperator, ZooError> {
    let (n, m) = (pieces.p.nrows(), pieces.a.nrows());
    let layout = BlockLayout::new(&[("u", n), ("s", m)]).expect("distinct names");
    let diag = vec![
        DiagonalTerm::new(
            ProxFunction::Quadratic {
                p: pieces.p.clone(),
                q: pieces.q.clone(),
            },
            1.0,
        ),
        DiagonalTerm::new(ProxFunction::Zero, 1.0),
    ];
    let mut skew = DMatrix::zeros(n + m, n + m);
    place(&mut skew, 0, n, &(-pieces.a.transpose()));
    place(&mut skew, n, 0, &pieces.a.clone());
    let offset = stack(&[&DVector::zeros(n), &(-pieces.c)]);
    Ok(MonotoneBlockOperator::new(layout, diag, skew, None, offset)?)
}

fn qp_kkt_fn(
    problem: &ProblemInstance,
    n: usize,
    m: usize,
) -> Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync> {
    let pk = problem.clone();
    Arc::new(move |x| {
        let u = segment(x, 0, n);
        let s = segment(x, n, m);
        bench::kkt_residual(&pk, &u, Some(&s)).unwrap_or(f64::NAN)
    })
}

/// Augmented Lagrangian method (dual proximal point): `Q = blkdiag(0, (1/τ)I)`
/// is rank deficient on the primal block, `γ ∈ ]0, 2[`.
pub(super) fn alm(
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    let pieces = constrained_qp(problem, "alm")?;
    let (tau, gamma) = (params.tau, params.gamma);
    if tau <= 0.0 || gamma <= 0.0 {
        return Err(ZooError::BadParam(format!(
            "tau = {tau} and gamma = {gamma} must be positive"
        )));
    }
    let (n, m) = (pieces.p.nrows(), pieces.a.nrows());
    let operator = saddle_operator(&pieces)?;
    let mut metric = DMatrix::zeros(n + m, n + m);
    place(&mut metric, n, n, &(DMatrix::identity(m, m) / tau));

    // Eliminating s̃ from the inclusion leaves one SPD solve in ũ.
    let lhs = pieces.p + pieces.a.transpose() * pieces.a.clone() * tau;
    let lu = lhs.clone().lu();
    let (a2, c2, q2) = (pieces.a.clone(), pieces.c.clone(), pieces.q.clone());
    let solver: StepSolver = Arc::new(move |x, _w| {
        let s = segment(x, n, m);
        let rhs = -&q2 + a2.transpose() * (&s + &c2 * tau);
        let u_t = lu.solve(&rhs).expect("P + τAᵀA is positive definite");
        let s_t = &s - (&a2 * &u_t - &c2) * tau;
        Ok(stack(&[&u_t, &s_t]))
    });
    let model = SplittingModel::new(operator, CocoerciveMap::zero(n + m), metric, solver)?
        .with_km(gamma)?;

    let native = Box::new(AlmNative {
        lu: lhs.lu(),
        a: pieces.a.clone(),
        q: pieces.q.clone(),
        c: pieces.c.clone(),
        tau,
        gamma,
        u: DVector::zeros(n),
        s: DVector::zeros(m),
    });
    let oracle = bench::oracle_solve(problem)?;
    let x_star = stack(&[&oracle.primal, oracle.dual.as_ref().expect("constrained")]);
    let admissible = vec![range_item("gamma_below_two", 2.0 - gamma)];
    Ok(AlgorithmFitting {
        name: FittingName::Alm,
        model,
        native,
        x0: DVector::zeros(n + m),
        x_star: Some(x_star),
        kkt_fn: Some(qp_kkt_fn(problem, n, m)),
        admissible,
    })
}

struct AlmNative {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    a: DMatrix<f64>,
    q: DVector<f64>,
    c: DVector<f64>,
    tau: f64,
    gamma: f64,
    u: DVector<f64>,
    s: DVector<f64>,
}

impl NativeIterator for AlmNative {
    fn step(&mut self) {
        // u⁺ minimizes the augmented Lagrangian
        // f(u) − ⟨s, Au − c⟩ + (τ/2)‖Au − c‖²; then a multiplier update.
        let rhs = -&self.q + self.a.transpose() * (&self.s + &self.c * self.tau);
        let u_hat = self.lu.solve(&rhs).expect("SPD");
        let s_hat = &self.s - (&self.a * &u_hat - &self.c) * self.tau;
        if self.gamma == 1.0 {
            self.u = u_hat;
            self.s = s_hat;
        } else {
            self.u = &self.u + (u_hat - &self.u) * self.gamma;
            self.s = &self.s + (s_hat - &self.s) * self.gamma;
        }
    }
    fn engine_view(&self) -> DVector<f64> {
        stack(&[&self.u, &self.s])
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        self.u = segment(x0, 0, self.a.ncols());
        self.s = segment(x0, self.a.ncols(), self.a.nrows());
    }
}

/// Prox-linearized ALM: `Q = blkdiag(ρI − τAᵀA, (1/τ)I)`, which turns the
/// primal solve into a single prox in the scaled metric; admissible
/// `τ ∈ ]0, ρ/‖AᵀA‖[`, `γ ∈ ]0, 2[`.
pub(super) fn linearized_alm(
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    let pieces = constrained_qp(problem, "linearized_alm")?;
    let (tau, rho, gamma) = (params.tau, params.rho, params.gamma);
    if tau <= 0.0 || rho <= 0.0 || gamma <= 0.0 {
        return Err(ZooError::BadParam(format!(
            "tau = {tau}, rho = {rho}, gamma = {gamma} must be positive"
        )));
    }
    let (n, m) = (pieces.p.nrows(), pieces.a.nrows());
    let operator = saddle_operator(&pieces)?;
    let ata = pieces.a.transpose() * pieces.a.clone();
    let mut metric = DMatrix::zeros(n + m, n + m);
    place(
        &mut metric,
        0,
        0,
        &(DMatrix::identity(n, n) * rho - &ata * tau),
    );
    place(&mut metric, n, n, &(DMatrix::identity(m, m) / tau));

    let f_prox = ProxFunction::Quadratic {
        p: pieces.p.clone(),
        q: pieces.q.clone(),
    };
    let (a2, c2) = (pieces.a.clone(), pieces.c.clone());
    let fp = f_prox.clone();
    let solver: StepSolver = Arc::new(move |x, _w| {
        let u = segment(x, 0, n);
        let s = segment(x, n, m);
        let arg = &u - a2.transpose() * ((&a2 * &u - &c2) * tau - &s) / rho;
        let u_t = fp.prox(1.0 / rho, &arg);
        let s_t = &s - (&a2 * &u_t - &c2) * tau;
        Ok(stack(&[&u_t, &s_t]))
    });
    let model = SplittingModel::new(operator, CocoerciveMap::zero(n + m), metric, solver)?
        .with_km(gamma)?;

    let native = Box::new(LinAlmNative {
        f_prox,
        a: pieces.a.clone(),
        c: pieces.c.clone(),
        tau,
        rho,
        gamma,
        u: DVector::zeros(n),
        s: DVector::zeros(m),
    });
    let oracle = bench::oracle_solve(problem)?;
    let x_star = stack(&[&oracle.primal, oracle.dual.as_ref().expect("constrained")]);
    let admissible = vec![
        range_item("tau_below_rho_over_gram", rho / gram_norm(pieces.a) - tau),
        range_item("gamma_below_two", 2.0 - gamma),
    ];
    Ok(AlgorithmFitting {
        name: FittingName::LinearizedAlm,
        model,
        native,
        x0: DVector::zeros(n + m),
        x_star: Some(x_star),
        kkt_fn: Some(qp_kkt_fn(problem, n, m)),
        admissible,
    })
}

struct LinAlmNative {
    f_prox: ProxFunction,
    a: DMatrix<f64>,
    c: DVector<f64>,
    tau: f64,
    rho: f64,
    gamma: f64,
    u: DVector<f64>,
    s: DVector<f64>,
}

impl NativeIterator for LinAlmNative {
    fn step(&mut self) {
        // Displayed two-line scheme: one prox of f around the linearized
        // augmented term, then the multiplier update.
        let arg = &self.u
            - self.a.transpose() * ((&self.a * &self.u - &self.c) * self.tau - &self.s) / self.rho;
        let u_hat = self.f_prox.prox(1.0 / self.rho, &arg);
        let s_hat = &self.s - (&self.a * &u_hat - &self.c) * self.tau;
        if self.gamma == 1.0 {
            self.u = u_hat;
            self.s = s_hat;
        } else {
            self.u = &self.u + (u_hat - &self.u) * self.gamma;
            self.s = &self.s + (s_hat - &self.s) * self.gamma;
        }
    }
    fn engine_view(&self) -> DVector<f64> {
        stack(&[&self.u, &self.s])
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        self.u = segment(x0, 0, self.a.ncols());
        self.s = segment(x0, self.a.ncols(), self.a.nrows());
    }
}

/// Linearized Bregman iterations
/// `ũ = prox_{ρτf}(ρAᵀs), s̃ = s − (Aũ − c)`, admissible `ρ ∈ ]0, 1/‖AᵀA‖]`.
///
/// The fitting adds the positive semidefinite curvature `(1/ρ)I − AᵀA` to
/// the primal block of the operator, so the scheme converges to the
/// minimizer of the *ridge-regularized* objective
/// `τf(u) + (1/2ρ)‖u‖²  s.t.  Au = c`, not of `f` itself; the reference
/// solution is the exact solve of that system.
pub(super) fn linearized_bregman(
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    let pieces = constrained_qp(problem, "linearized_bregman")?;
    let (tau, rho, gamma) = (params.tau, params.rho, params.gamma);
    if tau <= 0.0 || rho <= 0.0 || gamma <= 0.0 {
        return Err(ZooError::BadParam(format!(
            "tau = {tau}, rho = {rho}, gamma = {gamma} must be positive"
        )));
    }
    let (n, m) = (pieces.p.nrows(), pieces.a.nrows());
    let ata = pieces.a.transpose() * pieces.a.clone();

    let layout = BlockLayout::new(&[("u", n), ("s", m)]).expect("distinct names");
    let diag = vec![
        // The operator carries τ·f on the primal block.
        DiagonalTerm::new(
            ProxFunction::Quadratic {
                p: pieces.p.clone(),
                q: pieces.q.clone(),
            },
            tau,
        ),
        DiagonalTerm::new(ProxFunction::Zero, 1.0),
    ];
    let mut skew = DMatrix::zeros(n + m, n + m);
    place(&mut skew, 0, n, &(-pieces.a.transpose()));
    place(&mut skew, n, 0, &pieces.a.clone());
    let mut extra = DMatrix::zeros(n + m, n + m);
    place(&mut extra, 0, 0, &(DMatrix::identity(n, n) / rho - &ata));
    let offset = stack(&[&(pieces.a.transpose() * pieces.c.clone()), &(-pieces.c)]);
    let operator = MonotoneBlockOperator::new(layout, diag, skew, Some(extra), offset)?;

    let mut metric = DMatrix::zeros(n + m, n + m);
    place(&mut metric, n, n, &DMatrix::identity(m, m));

    let f_prox = ProxFunction::Quadratic {
        p: pieces.p.clone(),
        q: pieces.q.clone(),
    };
    let (a2, c2) = (pieces.a.clone(), pieces.c.clone());
    let fp = f_prox.clone();
    let solver: StepSolver = Arc::new(move |x, _w| {
        let s = segment(x, n, m);
        let u_t = fp.prox(rho * tau, &(a2.transpose() * &s * rho));
        let s_t = &s - (&a2 * &u_t - &c2);
        Ok(stack(&[&u_t, &s_t]))
    });
    let model = SplittingModel::new(operator, CocoerciveMap::zero(n + m), metric, solver)?
        .with_km(gamma)?;

    let native = Box::new(BregmanNative {
        f_prox,
        a: pieces.a.clone(),
        c: pieces.c.clone(),
        tau,
        rho,
        gamma,
        u: DVector::zeros(n),
        s: DVector::zeros(m),
    });

    // Reference: exact solve of the fixed-point optimality system
    // (τP + (1/ρ)I)u − Aᵀs = −τq, Au = c.
    let mut sys = DMatrix::zeros(n + m, n + m);
    place(
        &mut sys,
        0,
        0,
        &(pieces.p.clone() * tau + DMatrix::identity(n, n) / rho),
    );
    place(&mut sys, 0, n, &(-pieces.a.transpose()));
    place(&mut sys, n, 0, &pieces.a.clone());
    let rhs = stack(&[&(-pieces.q * tau), &pieces.c.clone()]);
    let x_star = sys
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(BenchError::SingularSystem)
        .map_err(ZooError::Bench)?;
    let kkt_fn: Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync> = {
        let sys = sys.clone();
        let rhs = rhs.clone();
        Arc::new(move |x| (&sys * x - &rhs).norm())
    };
    let admissible = vec![range_item(
        "rho_at_most_inverse_gram",
        1.0 / gram_norm(pieces.a) - rho,
    ), range_item("gamma_below_two", 2.0 - gamma),
        CheckItem::info("regularization_weight", 1.0 / rho)];
    Ok(AlgorithmFitting {
        name: FittingName::LinearizedBregman,
        model,
        native,
        x0: DVector::zeros(n + m),
        x_star: Some(x_star),
        kkt_fn: Some(kkt_fn),
        admissible,
    })
}

struct BregmanNative {
    f_prox: ProxFunction,
    a: DMatrix<f64>,
    c: DVector<f64>,
    tau: f64,
    rho: f64,
    gamma: f64,
    u: DVector<f64>,
    s: DVector<f64>,
}

impl NativeIterator for BregmanNative {
    fn step(&mut self) {
        let u_hat = self
            .f_prox
            .prox(self.rho * self.tau, &(self.a.transpose() * &self.s * self.rho));
        let s_hat = &self.s - (&self.a * &u_hat - &self.c);
        if self.gamma == 1.0 {
            self.u = u_hat;
            self.s = s_hat;
        } else {
            self.u = &self.u + (u_hat - &self.u) * self.gamma;
            self.s = &self.s + (s_hat - &self.s) * self.gamma;
        }
    }
    fn engine_view(&self) -> DVector<f64> {
        stack(&[&self.u, &self.s])
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        self.u = segment(x0, 0, self.a.ncols());
        self.s = segment(x0, self.a.ncols(), self.a.nrows());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{generate, Dims, ProblemKind};
    use crate::zoo::{build, default_params, equivalence_deviation, FittingName};

    fn qp() -> ProblemInstance {
        generate(ProblemKind::EqualityQP, 3, Dims { n: 8, m: 3 }).unwrap()
    }

    #[test]
    fn alm_matches_native_and_solves_kkt() {
        let problem = qp();
        let params = default_params(FittingName::Alm, &problem);
        let mut f = build(FittingName::Alm, &problem, &params).unwrap();
        assert!(equivalence_deviation(&mut f, 200).unwrap() <= 1e-10);
        let trace = f.model.run(&f.x0, &f.run_options(3000)).unwrap();
        let kkt = trace.kkt_residuals.as_ref().unwrap();
        assert!(*kkt.last().unwrap() <= 1e-8, "kkt {:?}", kkt.last());
        // Multiplier block converges to the oracle dual.
        let n = 8;
        let s_err = (segment(trace.final_state(), n, 3)
            - segment(f.x_star.as_ref().unwrap(), n, 3))
        .norm();
        assert!(s_err <= 1e-7, "dual error {s_err}");
    }

    #[test]
    fn alm_overrelaxed_matches_native() {
        let problem = qp();
        let params = FittingParams {
            gamma: 1.7,
            ..default_params(FittingName::Alm, &problem)
        };
        let mut f = build(FittingName::Alm, &problem, &params).unwrap();
        assert!(equivalence_deviation(&mut f, 150).unwrap() <= 1e-10);
    }

    #[test]
    fn linearized_alm_matches_native_and_converges() {
        let problem = qp();
        let params = default_params(FittingName::LinearizedAlm, &problem);
        let mut f = build(FittingName::LinearizedAlm, &problem, &params).unwrap();
        assert!(equivalence_deviation(&mut f, 200).unwrap() <= 1e-10);
        let trace = f.model.run(&f.x0, &f.run_options(20000)).unwrap();
        let kkt = trace.kkt_residuals.as_ref().unwrap();
        assert!(*kkt.last().unwrap() <= 1e-6, "kkt {:?}", kkt.last());
    }

    #[test]
    fn linearized_bregman_reaches_its_fixed_point() {
        let problem = qp();
        let params = default_params(FittingName::LinearizedBregman, &problem);
        let mut f = build(FittingName::LinearizedBregman, &problem, &params).unwrap();
        assert!(equivalence_deviation(&mut f, 200).unwrap() <= 1e-10);
        let trace = f.model.run(&f.x0, &f.run_options(20000)).unwrap();
        let kkt = trace.kkt_residuals.as_ref().unwrap();
        assert!(*kkt.last().unwrap() <= 1e-6, "kkt {:?}", kkt.last());
        // Its target is the ridge-regularized problem, so it must *differ*
        // from the plain QP solution.
        let qp_oracle = bench::oracle_solve(&problem).unwrap();
        let n = 8;
        let u_final = segment(trace.final_state(), 0, n);
        assert!((u_final - qp_oracle.primal).norm() > 1e-3);
    }

    #[test]
    fn alm_rejects_unconstrained() {
        let problem = generate(ProblemKind::EqualityQP, 3, Dims { n: 8, m: 0 }).unwrap();
        assert!(matches!(
            build(FittingName::Alm, &problem, &FittingParams::default()),
            Err(ZooError::UnsupportedProblem { .. })
        ));
    }
}
