//! Two-block ADMM fittings on
//! `min f(u) + g(v)  s.t.  Au + Bv = c` with strongly convex quadratic
//! `f(u) = ½uᵀP₁u + q₁ᵀu`, `g(v) = ½vᵀP₂v + q₂ᵀv`. State `x = (u, v, p)`
//! with multiplier `p`; the KKT operator is
//!
//! ```text
//! 𝒜(u, v, p) = (∂f(u) − Aᵀp, ∂g(v) − Bᵀp, Au + Bv − c).
//! ```

use super::*;
use crate::bench::{self, ProblemData};
use crate::block::BlockLayout;
use crate::engine::{GVariant, SplittingModel, StepSolver};
use crate::operators::{CocoerciveMap, DiagonalTerm, MonotoneBlockOperator};
use crate::prox::ProxFunction;

pub(super) fn default_params(name: FittingName) -> FittingParams {
    match name {
        FittingName::RelaxedAdmm => FittingParams {
            tau: 1.0,
            gamma: 1.5,
            ..Default::default()
        },
        _ => FittingParams {
            tau: 1.0,
            ..Default::default()
        },
    }
}

struct Blocks<'a> {
    p1: &'a DMatrix<f64>,
    q1: &'a DVector<f64>,
    p2: &'a DMatrix<f64>,
    q2: &'a DVector<f64>,
    a: &'a DMatrix<f64>,
    b: &'a DMatrix<f64>,
    c: &'a DVector<f64>,
}

fn two_block<'a>(
    problem: &'a ProblemInstance,
    fitting: &'static str,
) -> Result<Blocks<'a>, ZooError> {
    match &problem.data {
        ProblemData::TwoBlockAdmm {
            p1,
            q1,
            p2,
            q2,
            a,
            bmat,
            c,
        } => Ok(Blocks {
            p1,
            q1,
            p2,
            q2,
            a,
            b: bmat,
            c,
        }),
        _ => Err(ZooError::UnsupportedProblem {
            fitting,
            expected: "two-block linearly coupled quadratic",
        }),
    }
}

fn kkt_operator(bl: &Blocks<'_>) -> Result<MonotoneBlockOperator, ZooError> {
    let (nu, nv, z) = (bl.p1.nrows(), bl.p2.nrows(), bl.a.nrows());
    let layout = BlockLayout::new(&[("u", nu), ("v", nv), ("p", z)]).expect("distinct names");
    let diag = vec![
        DiagonalTerm::new(
            ProxFunction::Quadratic {
                p: bl.p1.clone(),
                q: bl.q1.clone(),
            },
            1.0,
        ),
        DiagonalTerm::new(
            ProxFunction::Quadratic {
                p: bl.p2.clone(),
                q: bl.q2.clone(),
            },
            1.0,
        ),
        DiagonalTerm::new(ProxFunction::Zero, 1.0),
    ];
    let dim = nu + nv + z;
    let mut skew = DMatrix::zeros(dim, dim);
    place(&mut skew, 0, nu + nv, &(-bl.a.transpose()));
    place(&mut skew, nu, nu + nv, &(-bl.b.transpose()));
    place(&mut skew, nu + nv, 0, &bl.a.clone());
    place(&mut skew, nu + nv, nu, &bl.b.clone());
    let offset = stack(&[&DVector::zeros(nu + nv), &(-bl.c)]);
    Ok(MonotoneBlockOperator::new(layout, diag, skew, None, offset)?)
}

fn admm_kkt_fn(
    problem: &ProblemInstance,
    nu: usize,
    nv: usize,
    z: usize,
) -> Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync> {
    let pk = problem.clone();
    Arc::new(move |x| {
        let uv = segment(x, 0, nu + nv);
        let p = segment(x, nu + nv, z);
        bench::kkt_residual(&pk, &uv, Some(&p)).unwrap_or(f64::NAN)
    })
}

fn oracle_state(problem: &ProblemInstance) -> Result<DVector<f64>, ZooError> {
    let oracle = bench::oracle_solve(problem)?;
    Ok(stack(&[
        &oracle.primal,
        oracle.primal2.as_ref().expect("two-block"),
        oracle.dual.as_ref().expect("two-block"),
    ]))
}

/// γ-relaxed ADMM. The metric
/// `Q = [[0, 0, 0], [0, τBᵀB, (1−γ)Bᵀ], [0, −B, (1/τ)I]]` is degenerate on
/// the `u` block; the relaxation `M = [[I,0,0],[0,I,0],[0,−τB,γI]]` carries
/// the declared decrease factor `η = 2/γ − 1`. Admissible `γ ∈ ]0, 2[`.
pub(super) fn relaxed_admm(
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    let bl = two_block(problem, "relaxed_admm")?;
    let (tau, gamma) = (params.tau, params.gamma);
    if tau <= 0.0 || gamma <= 0.0 || gamma >= 2.0 {
        return Err(ZooError::BadParam(format!(
            "need tau > 0 and gamma in ]0, 2[, got tau = {tau}, gamma = {gamma}"
        )));
    }
    let (nu, nv, z) = (bl.p1.nrows(), bl.p2.nrows(), bl.a.nrows());
    let dim = nu + nv + z;
    let operator = kkt_operator(&bl)?;

    let btb = bl.b.transpose() * bl.b.clone();
    let mut q_raw = DMatrix::zeros(dim, dim);
    place(&mut q_raw, nu, nu, &(&btb * tau));
    place(&mut q_raw, nu, nu + nv, &(bl.b.transpose() * (1.0 - gamma)));
    place(&mut q_raw, nu + nv, nu, &(-bl.b.clone()));
    place(&mut q_raw, nu + nv, nu + nv, &(DMatrix::identity(z, z) / tau));

    let mut m_op = DMatrix::identity(dim, dim);
    place(&mut m_op, nu + nv, nu, &(-bl.b.clone() * tau));
    place(
        &mut m_op,
        nu + nv,
        nu + nv,
        &(DMatrix::identity(z, z) * gamma),
    );

    // Block-sequential solve: ũ from an SPD system, then p̃ explicitly,
    // then ṽ from a second SPD system.
    let u_lhs = (bl.p1 + bl.a.transpose() * bl.a.clone() * tau).lu();
    let v_lhs = (bl.p2 + &btb * tau).lu();
    let (a2, b2, c2) = (bl.a.clone(), bl.b.clone(), bl.c.clone());
    let (q1s, q2s) = (bl.q1.clone(), bl.q2.clone());
    let btb2 = btb.clone();
    let solver: StepSolver = Arc::new(move |x, _w| {
        let v = segment(x, nu, nv);
        let p = segment(x, nu + nv, z);
        let rhs_u = -&q1s - a2.transpose() * ((&b2 * &v - &c2) * tau - &p);
        let u_t = u_lhs.solve(&rhs_u).expect("P₁ + τAᵀA is positive definite");
        let p_t = &p - (&a2 * &u_t + &b2 * &v - &c2) * tau;
        let rhs_v =
            -&q2s + &btb2 * &v * tau + b2.transpose() * (&p_t * gamma + &p * (1.0 - gamma));
        let v_t = v_lhs.solve(&rhs_v).expect("P₂ + τBᵀB is positive definite");
        Ok(stack(&[&u_t, &v_t, &p_t]))
    });
    let model = SplittingModel::new(operator, CocoerciveMap::zero(dim), q_raw, solver)?
        .with_relaxation(m_op, Some(2.0 / gamma - 1.0), GVariant::Degenerate)?;

    let native = Box::new(RelaxedAdmmNative {
        u_lhs: (bl.p1 + bl.a.transpose() * bl.a.clone() * tau).lu(),
        v_lhs: (bl.p2 + &btb * tau).lu(),
        a: bl.a.clone(),
        b: bl.b.clone(),
        c: bl.c.clone(),
        q1: bl.q1.clone(),
        q2: bl.q2.clone(),
        tau,
        gamma,
        u: DVector::zeros(nu),
        v: DVector::zeros(nv),
        p: DVector::zeros(z),
    });
    let admissible = vec![
        range_item("gamma_above_zero", gamma),
        range_item("gamma_below_two", 2.0 - gamma),
        crate::report::CheckItem::info("declared_eta", 2.0 / gamma - 1.0),
    ];
    Ok(AlgorithmFitting {
        name: FittingName::RelaxedAdmm,
        model,
        native,
        x0: DVector::zeros(dim),
        x_star: Some(oracle_state(problem)?),
        kkt_fn: Some(admm_kkt_fn(problem, nu, nv, z)),
        admissible,
    })
}

struct RelaxedAdmmNative {
    u_lhs: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    v_lhs: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DVector<f64>,
    q1: DVector<f64>,
    q2: DVector<f64>,
    tau: f64,
    gamma: f64,
    u: DVector<f64>,
    v: DVector<f64>,
    p: DVector<f64>,
}

impl NativeIterator for RelaxedAdmmNative {
    fn step(&mut self) {
        // Textbook relaxed ADMM: u-minimization, relaxation of the residual
        // Au⁺ ← γAu⁺ − (1−γ)(Bv − c), v-minimization, multiplier update.
        let rhs_u =
            -&self.q1 - self.a.transpose() * ((&self.b * &self.v - &self.c) * self.tau - &self.p);
        let u_next = self.u_lhs.solve(&rhs_u).expect("SPD");
        let relaxed = &self.a * &u_next * self.gamma
            - (&self.b * &self.v - &self.c) * (1.0 - self.gamma);
        let rhs_v = -&self.q2
            + self.b.transpose() * (&self.p - (&relaxed - &self.c) * self.tau);
        let v_next = self.v_lhs.solve(&rhs_v).expect("SPD");
        let p_next = &self.p - (&relaxed + &self.b * &v_next - &self.c) * self.tau;
        self.u = u_next;
        self.v = v_next;
        self.p = p_next;
    }
    fn engine_view(&self) -> DVector<f64> {
        stack(&[&self.u, &self.v, &self.p])
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        let (nu, nv) = (self.a.ncols(), self.b.ncols());
        self.u = segment(x0, 0, nu);
        self.v = segment(x0, nu, nv);
        self.p = segment(x0, nu + nv, self.a.nrows());
    }
}

/// Proximal ADMM: extra proximal terms `½‖u − uᵏ‖²_{P₁}` and
/// `½‖v − vᵏ‖²_{P₂}` on the two minimizations. The metric
/// `Q = [[P₁,0,0],[0,P₂+τBᵀB,0],[0,−B,(1/τ)I]]` with
/// `M = [[I,0,0],[0,I,0],[0,−τB,I]]` gives the block-diagonal Fejér metric
/// `S = blkdiag(P₁, P₂+τBᵀB, (1/τ)I)`. Admissible for every `τ > 0`.
pub(super) fn proximal_admm(
    problem: &ProblemInstance,
    params: &FittingParams,
) -> Result<AlgorithmFitting, ZooError> {
    let bl = two_block(problem, "proximal_admm")?;
    let tau = params.tau;
    if tau <= 0.0 {
        return Err(ZooError::BadParam(format!("tau = {tau} must be positive")));
    }
    let (nu, nv, z) = (bl.p1.nrows(), bl.p2.nrows(), bl.a.nrows());
    let dim = nu + nv + z;
    let operator = kkt_operator(&bl)?;

    let btb = bl.b.transpose() * bl.b.clone();
    let mut q_raw = DMatrix::zeros(dim, dim);
    place(&mut q_raw, 0, 0, &bl.p1.clone());
    place(&mut q_raw, nu, nu, &(bl.p2 + &btb * tau));
    place(&mut q_raw, nu + nv, nu, &(-bl.b.clone()));
    place(&mut q_raw, nu + nv, nu + nv, &(DMatrix::identity(z, z) / tau));

    let mut m_op = DMatrix::identity(dim, dim);
    place(&mut m_op, nu + nv, nu, &(-bl.b.clone() * tau));

    let u_lhs = (bl.p1 * 2.0 + bl.a.transpose() * bl.a.clone() * tau).lu();
    let v_lhs = (bl.p2 * 2.0 + &btb * tau).lu();
    let (a2, b2, c2) = (bl.a.clone(), bl.b.clone(), bl.c.clone());
    let (q1s, q2s, p1s, p2s) = (bl.q1.clone(), bl.q2.clone(), bl.p1.clone(), bl.p2.clone());
    let btb2 = btb.clone();
    let solver: StepSolver = Arc::new(move |x, _w| {
        let u = segment(x, 0, nu);
        let v = segment(x, nu, nv);
        let p = segment(x, nu + nv, z);
        let rhs_u =
            -&q1s + &p1s * &u - a2.transpose() * ((&b2 * &v - &c2) * tau - &p);
        let u_t = u_lhs.solve(&rhs_u).expect("SPD");
        let p_t = &p - (&a2 * &u_t + &b2 * &v - &c2) * tau;
        let rhs_v = -&q2s + b2.transpose() * &p_t + (&p2s * &v + &btb2 * &v * tau);
        let v_t = v_lhs.solve(&rhs_v).expect("SPD");
        Ok(stack(&[&u_t, &v_t, &p_t]))
    });
    let model = SplittingModel::new(operator, CocoerciveMap::zero(dim), q_raw, solver)?
        .with_relaxation(m_op, None, GVariant::Degenerate)?;

    let native = Box::new(ProximalAdmmNative {
        u_lhs: (bl.p1 * 2.0 + bl.a.transpose() * bl.a.clone() * tau).lu(),
        v_lhs: (bl.p2 * 2.0 + &btb * tau).lu(),
        p1: bl.p1.clone(),
        p2: bl.p2.clone(),
        a: bl.a.clone(),
        b: bl.b.clone(),
        c: bl.c.clone(),
        q1: bl.q1.clone(),
        q2: bl.q2.clone(),
        tau,
        u: DVector::zeros(nu),
        v: DVector::zeros(nv),
        p: DVector::zeros(z),
    });
    let admissible = vec![range_item("tau_positive", tau)];
    Ok(AlgorithmFitting {
        name: FittingName::ProximalAdmm,
        model,
        native,
        x0: DVector::zeros(dim),
        x_star: Some(oracle_state(problem)?),
        kkt_fn: Some(admm_kkt_fn(problem, nu, nv, z)),
        admissible,
    })
}

struct ProximalAdmmNative {
    u_lhs: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    v_lhs: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    p1: DMatrix<f64>,
    p2: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DVector<f64>,
    q1: DVector<f64>,
    q2: DVector<f64>,
    tau: f64,
    u: DVector<f64>,
    v: DVector<f64>,
    p: DVector<f64>,
}

impl NativeIterator for ProximalAdmmNative {
    fn step(&mut self) {
        // u⁺ = argmin f(u) − ⟨p, Au⟩ + (τ/2)‖Au + Bv − c‖² + ½‖u − uᵏ‖²_{P₁}
        let rhs_u = -&self.q1 + &self.p1 * &self.u
            - self.a.transpose() * ((&self.b * &self.v - &self.c) * self.tau - &self.p);
        let u_next = self.u_lhs.solve(&rhs_u).expect("SPD");
        // v⁺ = argmin g(v) − ⟨p, Bv⟩ + (τ/2)‖Au⁺ + Bv − c‖² + ½‖v − vᵏ‖²_{P₂}
        let rhs_v = -&self.q2 + &self.p2 * &self.v
            - self.b.transpose() * ((&self.a * &u_next - &self.c) * self.tau - &self.p);
        let v_next = self.v_lhs.solve(&rhs_v).expect("SPD");
        let p_next = &self.p - (&self.a * &u_next + &self.b * &v_next - &self.c) * self.tau;
        self.u = u_next;
        self.v = v_next;
        self.p = p_next;
    }
    fn engine_view(&self) -> DVector<f64> {
        stack(&[&self.u, &self.v, &self.p])
    }
    fn restart(&mut self, x0: &DVector<f64>) {
        let (nu, nv) = (self.a.ncols(), self.b.ncols());
        self.u = segment(x0, 0, nu);
        self.v = segment(x0, nu, nv);
        self.p = segment(x0, nu + nv, self.a.nrows());
    }
}
