//! Seeded toy problems and independent high-accuracy oracles.
//!
//! Every trace certificate needs a reference solution `x*` that does *not*
//! come from the iteration under test. The oracles here use plain linear
//! algebra (dense KKT solves) for the quadratic problems, and reference
//! first-order iterations *polished by active-set/support identification*
//! for the L1-regularized ones, after which the KKT conditions are solved
//! exactly on the identified support.
//!
//! Generation is deterministic across platforms: all randomness comes from a
//! splitmix64 stream, and matrices are built from explicit QR factorizations
//! with singular values bounded in `[0.1, 10]`.

use crate::matio::{write_matrix, write_vector};
use crate::rng::SplitMix64;
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("total dimension {0} exceeds the dense-solver limit 2000")]
    DimsTooLarge(usize),
    #[error("oracle failed to converge: best KKT residual {0:.3e}")]
    OracleNotConverged(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular system in oracle solve")]
    SingularSystem,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    /// `min ½uᵀPu + qᵀu  s.t.  Au = c` (unconstrained when `m = 0`).
    EqualityQP,
    /// `min ½‖Mx − b‖² + λ‖x‖₁` (`n` rows, `p` features; `n = 0` degenerates
    /// to pure `λ‖x‖₁`).
    Lasso,
    /// `min ½‖x − b‖² + λ‖Dx‖₁` with the 1-D difference matrix `D`.
    Tv1D,
    /// `min f(u) + g(v)  s.t.  Au + Bv = c` with strongly convex quadratic
    /// `f, g`.
    TwoBlockAdmm,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::EqualityQP => "equality_qp",
            ProblemKind::Lasso => "lasso",
            ProblemKind::Tv1D => "tv1d",
            ProblemKind::TwoBlockAdmm => "two_block_admm",
        }
    }
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "equality_qp" => Ok(ProblemKind::EqualityQP),
            "lasso" => Ok(ProblemKind::Lasso),
            "tv1d" => Ok(ProblemKind::Tv1D),
            "two_block_admm" => Ok(ProblemKind::TwoBlockAdmm),
            other => Err(format!(
                "unknown problem kind `{other}` (expected equality_qp, lasso, tv1d, or two_block_admm)"
            )),
        }
    }
}

/// Requested sizes; interpretation depends on the kind (see [`ProblemKind`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
}

#[derive(Clone, Debug)]
pub enum ProblemData {
    EqualityQP {
        p: DMatrix<f64>,
        q: DVector<f64>,
        a: DMatrix<f64>,
        c: DVector<f64>,
    },
    Lasso {
        m_design: DMatrix<f64>,
        b: DVector<f64>,
        lambda: f64,
    },
    Tv1D {
        b: DVector<f64>,
        lambda: f64,
    },
    TwoBlockAdmm {
        p1: DMatrix<f64>,
        q1: DVector<f64>,
        p2: DMatrix<f64>,
        q2: DVector<f64>,
        a: DMatrix<f64>,
        bmat: DMatrix<f64>,
        c: DVector<f64>,
    },
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub kind: ProblemKind,
    pub seed: u64,
    pub dims: Dims,
    pub data: ProblemData,
}

/// Oracle solution: primal point, dual multipliers where the problem has
/// them, and the certified KKT residual.
#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub primal: DVector<f64>,
    pub dual: Option<DVector<f64>>,
    /// Second primal block for two-block problems.
    pub primal2: Option<DVector<f64>>,
    pub kkt_residual: f64,
}

/// Forward-difference matrix `D ∈ R^{(n−1)×n}`, `(Dx)_i = x_{i+1} − x_i`.
pub fn difference_matrix(n: usize) -> DMatrix<f64> {
    let rows = n.saturating_sub(1);
    DMatrix::from_fn(rows, n, |i, j| {
        if j == i + 1 {
            1.0
        } else if j == i {
            -1.0
        } else {
            0.0
        }
    })
}

fn random_orthogonal(rng: &mut SplitMix64, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.symmetric());
    g.qr().q()
}

/// Rectangular matrix with singular values in `[0.1, 10]`.
fn conditioned_matrix(rng: &mut SplitMix64, rows: usize, cols: usize) -> DMatrix<f64> {
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(rows, cols);
    }
    let u = random_orthogonal(rng, rows);
    let v = random_orthogonal(rng, cols);
    let k = rows.min(cols);
    let mut sigma = DMatrix::zeros(rows, cols);
    for i in 0..k {
        sigma[(i, i)] = rng.uniform(0.1, 10.0);
    }
    u * sigma * v.transpose()
}

/// Symmetric positive definite matrix with eigenvalues in `[0.1, 10]`.
fn spd_matrix(rng: &mut SplitMix64, n: usize) -> DMatrix<f64> {
    let u = random_orthogonal(rng, n);
    let vals = DVector::from_fn(n, |_, _| rng.uniform(0.1, 10.0));
    let m = &u * DMatrix::from_diagonal(&vals) * u.transpose();
    (&m + m.transpose()) * 0.5
}

fn random_vec(rng: &mut SplitMix64, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.symmetric())
}

/// Deterministic instance generation.
pub fn generate(kind: ProblemKind, seed: u64, dims: Dims) -> Result<ProblemInstance, BenchError> {
    let total = dims.n + dims.m;
    if total > 2000 {
        return Err(BenchError::DimsTooLarge(total));
    }
    // Domain-separate the stream so different kinds with the same seed do
    // not share draws.
    let mut rng = SplitMix64::new(seed ^ (kind as u64).wrapping_mul(0x9e37_79b9_0000_0001));
    let data = match kind {
        ProblemKind::EqualityQP => {
            let p = spd_matrix(&mut rng, dims.n);
            let q = random_vec(&mut rng, dims.n);
            let a = conditioned_matrix(&mut rng, dims.m, dims.n);
            let u0 = random_vec(&mut rng, dims.n);
            let c = &a * u0;
            ProblemData::EqualityQP { p, q, a, c }
        }
        ProblemKind::Lasso => {
            let m_design = conditioned_matrix(&mut rng, dims.n, dims.m);
            // Sparse ground truth plus noise gives a meaningful support.
            let mut x_true = DVector::zeros(dims.m);
            for i in 0..dims.m {
                if rng.next_f64() < 0.2 {
                    x_true[i] = rng.uniform(-2.0, 2.0);
                }
            }
            let noise = random_vec(&mut rng, dims.n) * 0.05;
            let b = &m_design * x_true + noise;
            let corr = m_design.transpose() * &b;
            let lambda = if corr.len() == 0 || corr.amax() == 0.0 {
                1.0
            } else {
                0.2 * corr.amax()
            };
            ProblemData::Lasso {
                m_design,
                b,
                lambda,
            }
        }
        ProblemKind::Tv1D => {
            // Piecewise-constant signal plus noise.
            let n = dims.n;
            let mut b = DVector::zeros(n);
            let mut level = rng.uniform(-2.0, 2.0);
            for i in 0..n {
                if rng.next_f64() < 0.1 {
                    level = rng.uniform(-2.0, 2.0);
                }
                b[i] = level + 0.1 * rng.symmetric();
            }
            ProblemData::Tv1D { b, lambda: 0.4 }
        }
        ProblemKind::TwoBlockAdmm => {
            let (nu, nv) = (dims.n, dims.m);
            let z = nu.min(nv).div_ceil(2).max(1);
            let p1 = spd_matrix(&mut rng, nu);
            let q1 = random_vec(&mut rng, nu);
            let p2 = spd_matrix(&mut rng, nv);
            let q2 = random_vec(&mut rng, nv);
            let a = conditioned_matrix(&mut rng, z, nu);
            let bmat = conditioned_matrix(&mut rng, z, nv);
            let u0 = random_vec(&mut rng, nu);
            let v0 = random_vec(&mut rng, nv);
            let c = &a * u0 + &bmat * v0;
            ProblemData::TwoBlockAdmm {
                p1,
                q1,
                p2,
                q2,
                a,
                bmat,
                c,
            }
        }
    };
    Ok(ProblemInstance {
        kind,
        seed,
        dims,
        data,
    })
}

impl ProblemInstance {
    /// Text serialization: a header line `kind seed n m lambda` followed by
    /// each matrix/vector in the plain matrix format.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let (kind, lambda) = match &self.data {
            ProblemData::EqualityQP { .. } => ("equality_qp", 0.0),
            ProblemData::Lasso { lambda, .. } => ("lasso", *lambda),
            ProblemData::Tv1D { lambda, .. } => ("tv1d", *lambda),
            ProblemData::TwoBlockAdmm { .. } => ("two_block_admm", 0.0),
        };
        let _ = writeln!(
            out,
            "{kind} {} {} {} {lambda:.16e}",
            self.seed, self.dims.n, self.dims.m
        );
        match &self.data {
            ProblemData::EqualityQP { p, q, a, c } => {
                out += &write_matrix(p);
                out += &write_vector(q);
                out += &write_matrix(a);
                out += &write_vector(c);
            }
            ProblemData::Lasso { m_design, b, .. } => {
                out += &write_matrix(m_design);
                out += &write_vector(b);
            }
            ProblemData::Tv1D { b, .. } => {
                out += &write_vector(b);
            }
            ProblemData::TwoBlockAdmm {
                p1,
                q1,
                p2,
                q2,
                a,
                bmat,
                c,
            } => {
                out += &write_matrix(p1);
                out += &write_vector(q1);
                out += &write_matrix(p2);
                out += &write_vector(q2);
                out += &write_matrix(a);
                out += &write_matrix(bmat);
                out += &write_vector(c);
            }
        }
        out
    }
}

/// KKT residual of a candidate point (with duals where applicable):
/// Euclidean norm of stacked stationarity + feasibility violations, with
/// subgradient distance for the L1 terms.
pub fn kkt_residual(
    problem: &ProblemInstance,
    x: &DVector<f64>,
    duals: Option<&DVector<f64>>,
) -> Result<f64, BenchError> {
    fn l1_stationarity(g: &DVector<f64>, x: &DVector<f64>, lambda: f64) -> f64 {
        // Distance of −g to λ∂‖x‖₁, componentwise.
        let mut sq = 0.0;
        for i in 0..x.len() {
            let r = if x[i].abs() > 1e-11 {
                g[i] + lambda * x[i].signum()
            } else {
                (g[i].abs() - lambda).max(0.0)
            };
            sq += r * r;
        }
        sq.sqrt()
    }
    match &problem.data {
        ProblemData::EqualityQP { p, q, a, c } => {
            if x.len() != p.nrows() {
                return Err(BenchError::DimensionMismatch {
                    expected: p.nrows(),
                    got: x.len(),
                });
            }
            let mut stat = p * x + q;
            if let Some(dual) = duals {
                stat -= a.transpose() * dual;
            }
            let feas = a * x - c;
            Ok((stat.norm_squared() + feas.norm_squared()).sqrt())
        }
        ProblemData::Lasso {
            m_design,
            b,
            lambda,
        } => {
            if x.len() != m_design.ncols() {
                return Err(BenchError::DimensionMismatch {
                    expected: m_design.ncols(),
                    got: x.len(),
                });
            }
            let g = m_design.transpose() * (m_design * x - b);
            Ok(l1_stationarity(&g, x, *lambda))
        }
        ProblemData::Tv1D { b, lambda } => {
            let n = b.len();
            if x.len() != n {
                return Err(BenchError::DimensionMismatch {
                    expected: n,
                    got: x.len(),
                });
            }
            let d = difference_matrix(n);
            let dx = &d * x;
            // Without explicit duals, take the implied multiplier from the
            // stationarity equation (least-squares through DDᵀ, clamped to
            // the feasible box); this upper-bounds the true KKT distance.
            let s_implied;
            let s = match duals {
                Some(s) => s,
                None => {
                    let ddt = &d * d.transpose();
                    let rhs = &d * (b - x);
                    s_implied = ddt
                        .lu()
                        .solve(&rhs)
                        .unwrap_or_else(|| DVector::zeros(n.saturating_sub(1)))
                        .map(|v: f64| v.clamp(-*lambda, *lambda));
                    &s_implied
                }
            };
            // Stationarity x − b + Dᵀs = 0 plus s ∈ λ∂‖Dx‖₁.
            let stat = x - b + d.transpose() * s;
            let mut sq = stat.norm_squared();
            for i in 0..s.len() {
                let r = if dx[i].abs() > 1e-11 {
                    s[i] - lambda * dx[i].signum()
                } else {
                    (s[i].abs() - lambda).max(0.0)
                };
                sq += r * r;
            }
            Ok(sq.sqrt())
        }
        ProblemData::TwoBlockAdmm {
            p1,
            q1,
            p2,
            q2,
            a,
            bmat,
            c,
        } => {
            // x stacks (u, v); duals are the constraint multipliers p.
            let nu = p1.nrows();
            let nv = p2.nrows();
            if x.len() != nu + nv {
                return Err(BenchError::DimensionMismatch {
                    expected: nu + nv,
                    got: x.len(),
                });
            }
            let u = x.rows(0, nu).into_owned();
            let v = x.rows(nu, nv).into_owned();
            let mut stat_u = p1 * &u + q1;
            let mut stat_v = p2 * &v + q2;
            if let Some(p) = duals {
                stat_u -= a.transpose() * p;
                stat_v -= bmat.transpose() * p;
            }
            let feas = a * u + bmat * v - c;
            Ok((stat_u.norm_squared() + stat_v.norm_squared() + feas.norm_squared()).sqrt())
        }
    }
}

/// Solve a dense symmetric-indefinite KKT system by LU.
fn solve_linear(m: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>, BenchError> {
    m.lu().solve(&rhs).ok_or(BenchError::SingularSystem)
}

/// High-accuracy reference solution.
pub fn oracle_solve(problem: &ProblemInstance) -> Result<OracleSolution, BenchError> {
    match &problem.data {
        ProblemData::EqualityQP { p, q, a, c } => {
            let n = p.nrows();
            let m = a.nrows();
            if m == 0 {
                let u = solve_linear(p.clone(), -q)?;
                let kkt = kkt_residual(problem, &u, None)?;
                return Ok(OracleSolution {
                    primal: u,
                    dual: None,
                    primal2: None,
                    kkt_residual: kkt,
                });
            }
            // [P −Aᵀ; A 0][u; p] = [−q; c]
            let mut kktm = DMatrix::zeros(n + m, n + m);
            kktm.view_mut((0, 0), (n, n)).copy_from(p);
            kktm.view_mut((0, n), (n, m)).copy_from(&(-a.transpose()));
            kktm.view_mut((n, 0), (m, n)).copy_from(a);
            let mut rhs = DVector::zeros(n + m);
            rhs.rows_mut(0, n).copy_from(&(-q));
            rhs.rows_mut(n, m).copy_from(c);
            let sol = solve_linear(kktm, rhs)?;
            let u = sol.rows(0, n).into_owned();
            let dual = sol.rows(n, m).into_owned();
            let kkt = kkt_residual(problem, &u, Some(&dual))?;
            Ok(OracleSolution {
                primal: u,
                dual: Some(dual),
                primal2: None,
                kkt_residual: kkt,
            })
        }
        ProblemData::Lasso {
            m_design,
            b,
            lambda,
        } => {
            let p = m_design.ncols();
            if m_design.nrows() == 0 {
                // Objective reduces to λ‖x‖₁: minimizer 0.
                return Ok(OracleSolution {
                    primal: DVector::zeros(p),
                    dual: None,
                    primal2: None,
                    kkt_residual: 0.0,
                });
            }
            let gram = m_design.transpose() * m_design;
            let mtb = m_design.transpose() * b;
            let lip = crate::operators::spectral_norm(&gram).max(1e-12);
            let tau = 1.0 / lip;
            let mut x = DVector::zeros(p);
            let mut best_kkt = f64::INFINITY;
            for _round in 0..200 {
                // Reference ISTA sweep.
                for _ in 0..1000 {
                    let grad = &gram * &x - &mtb;
                    x = (&x - grad * tau).map(|v| {
                        let t = tau * lambda;
                        if v > t {
                            v - t
                        } else if v < -t {
                            v + t
                        } else {
                            0.0
                        }
                    });
                }
                // Support polish: solve the stationarity equations exactly
                // on the identified support.
                let support: Vec<usize> =
                    (0..p).filter(|&i| x[i].abs() > 1e-10).collect();
                let mut polished = DVector::zeros(p);
                let mut ok = true;
                if !support.is_empty() {
                    let k = support.len();
                    let mut gs = DMatrix::zeros(k, k);
                    let mut rhs = DVector::zeros(k);
                    for (ii, &i) in support.iter().enumerate() {
                        for (jj, &j) in support.iter().enumerate() {
                            gs[(ii, jj)] = gram[(i, j)];
                        }
                        rhs[ii] = mtb[i] - lambda * x[i].signum();
                    }
                    match gs.lu().solve(&rhs) {
                        Some(xs) => {
                            for (ii, &i) in support.iter().enumerate() {
                                polished[i] = xs[ii];
                                if polished[i].signum() != x[i].signum() {
                                    ok = false;
                                }
                            }
                        }
                        None => ok = false,
                    }
                }
                if ok {
                    let kkt = kkt_residual(problem, &polished, None)?;
                    best_kkt = best_kkt.min(kkt);
                    if kkt <= 1e-10 {
                        return Ok(OracleSolution {
                            primal: polished,
                            dual: None,
                            primal2: None,
                            kkt_residual: kkt,
                        });
                    }
                }
            }
            Err(BenchError::OracleNotConverged(best_kkt))
        }
        ProblemData::Tv1D { b, lambda } => {
            let n = b.len();
            let d = difference_matrix(n);
            let m = n - 1;
            let ddt = &d * d.transpose();
            let db = &d * b;
            let lip = crate::operators::spectral_norm(&ddt).max(1e-12);
            let step = 1.0 / lip;
            let mut s = DVector::zeros(m);
            let mut best_kkt = f64::INFINITY;
            for _round in 0..200 {
                // Projected gradient on the box-constrained dual.
                for _ in 0..2000 {
                    let grad = &ddt * &s - &db;
                    s = (&s - grad * step).map(|v| v.clamp(-*lambda, *lambda));
                }
                // Active-set polish: pin saturated duals and solve the
                // remaining unconstrained block exactly.
                let active: Vec<usize> =
                    (0..m).filter(|&i| s[i].abs() > lambda - 1e-9).collect();
                let inactive: Vec<usize> =
                    (0..m).filter(|&i| s[i].abs() <= lambda - 1e-9).collect();
                let mut polished = DVector::zeros(m);
                for &i in &active {
                    polished[i] = lambda * s[i].signum();
                }
                let mut ok = true;
                if !inactive.is_empty() {
                    let k = inactive.len();
                    let mut aii = DMatrix::zeros(k, k);
                    let mut rhs = DVector::zeros(k);
                    for (ii, &i) in inactive.iter().enumerate() {
                        for (jj, &j) in inactive.iter().enumerate() {
                            aii[(ii, jj)] = ddt[(i, j)];
                        }
                        let mut v = db[i];
                        for &j in &active {
                            v -= ddt[(i, j)] * polished[j];
                        }
                        rhs[ii] = v;
                    }
                    match aii.lu().solve(&rhs) {
                        Some(si) => {
                            for (ii, &i) in inactive.iter().enumerate() {
                                polished[i] = si[ii];
                                if polished[i].abs() > *lambda {
                                    ok = false;
                                }
                            }
                        }
                        None => ok = false,
                    }
                }
                if ok {
                    let x = b - d.transpose() * &polished;
                    let kkt = kkt_residual(problem, &x, Some(&polished))?;
                    best_kkt = best_kkt.min(kkt);
                    if kkt <= 1e-10 {
                        return Ok(OracleSolution {
                            primal: x,
                            dual: Some(polished),
                            primal2: None,
                            kkt_residual: kkt,
                        });
                    }
                }
            }
            Err(BenchError::OracleNotConverged(best_kkt))
        }
        ProblemData::TwoBlockAdmm {
            p1,
            q1,
            p2,
            q2,
            a,
            bmat,
            c,
        } => {
            let nu = p1.nrows();
            let nv = p2.nrows();
            let z = a.nrows();
            // [P1 0 −Aᵀ; 0 P2 −Bᵀ; A B 0][u; v; p] = [−q1; −q2; c]
            let mut kktm = DMatrix::zeros(nu + nv + z, nu + nv + z);
            kktm.view_mut((0, 0), (nu, nu)).copy_from(p1);
            kktm.view_mut((0, nu + nv), (nu, z))
                .copy_from(&(-a.transpose()));
            kktm.view_mut((nu, nu), (nv, nv)).copy_from(p2);
            kktm.view_mut((nu, nu + nv), (nv, z))
                .copy_from(&(-bmat.transpose()));
            kktm.view_mut((nu + nv, 0), (z, nu)).copy_from(a);
            kktm.view_mut((nu + nv, nu), (z, nv)).copy_from(bmat);
            let mut rhs = DVector::zeros(nu + nv + z);
            rhs.rows_mut(0, nu).copy_from(&(-q1));
            rhs.rows_mut(nu, nv).copy_from(&(-q2));
            rhs.rows_mut(nu + nv, z).copy_from(c);
            let sol = solve_linear(kktm, rhs)?;
            let u = sol.rows(0, nu).into_owned();
            let v = sol.rows(nu, nv).into_owned();
            let dual = sol.rows(nu + nv, z).into_owned();
            let mut uv = DVector::zeros(nu + nv);
            uv.rows_mut(0, nu).copy_from(&u);
            uv.rows_mut(nu, nv).copy_from(&v);
            let kkt = kkt_residual(problem, &uv, Some(&dual))?;
            Ok(OracleSolution {
                primal: u,
                dual: Some(dual),
                primal2: Some(v),
                kkt_residual: kkt,
            })
        }
    }
}
