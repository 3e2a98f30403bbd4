//! Catalog of proximable functions.
//!
//! Each entry evaluates `prox_{τf}(y) = argmin_x f(x) + (1/2τ)‖x − y‖²` in
//! closed form, together with the function value. Conjugate proxes are
//! derived through the Moreau identity, so `prox_{σf*}` is available for
//! every catalog entry without a separate implementation.

use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProxError {
    #[error("unsupported prox spec `{0}`")]
    UnsupportedKind(String),
    #[error("malformed prox spec `{0}`")]
    BadSpec(String),
}

/// A custom entry: user-supplied closed-form prox and value callbacks.
#[derive(Clone)]
pub struct CustomProx {
    pub label: String,
    /// `(tau, y) ↦ prox_{τf}(y)`.
    pub prox: Arc<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync>,
    /// `x ↦ f(x)`.
    pub value: Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomProx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomProx({})", self.label)
    }
}

/// A convex function with a closed-form proximal operator.
#[derive(Clone, Debug)]
pub enum ProxFunction {
    /// `f ≡ 0`; prox is the identity.
    Zero,
    /// `f(x) = λ‖x‖₁`; prox is soft thresholding.
    L1 { weight: f64 },
    /// `f(x) = (w/2)‖x − b‖²`.
    SquaredL2 { center: DVector<f64>, weight: f64 },
    /// `f(x) = ½xᵀPx + qᵀx` with `P` PSD; prox is a linear solve.
    Quadratic { p: DMatrix<f64>, q: DVector<f64> },
    /// `f(x) = ⟨c, x⟩`.
    Linear { c: DVector<f64> },
    /// Indicator of the box `[lo, hi]`; prox is the clamp.
    IndicatorBox { lo: DVector<f64>, hi: DVector<f64> },
    /// Arbitrary closed-form entry.
    Custom(CustomProx),
}

fn soft_threshold(y: f64, t: f64) -> f64 {
    if y > t {
        y - t
    } else if y < -t {
        y + t
    } else {
        0.0
    }
}

impl ProxFunction {
    /// `prox_{τf}(y)`.
    pub fn prox(&self, tau: f64, y: &DVector<f64>) -> DVector<f64> {
        assert!(tau > 0.0, "prox requires tau > 0, got {tau}");
        match self {
            ProxFunction::Zero => y.clone(),
            ProxFunction::L1 { weight } => y.map(|v| soft_threshold(v, tau * weight)),
            ProxFunction::SquaredL2 { center, weight } => {
                (y + center * (tau * weight)) / (1.0 + tau * weight)
            }
            ProxFunction::Quadratic { p, q } => {
                let lhs = DMatrix::identity(p.nrows(), p.ncols()) + p * tau;
                let rhs = y - q * tau;
                lhs.lu().solve(&rhs).expect("I + τP is positive definite")
            }
            ProxFunction::Linear { c } => y - c * tau,
            ProxFunction::IndicatorBox { lo, hi } => {
                DVector::from_fn(y.len(), |i, _| y[i].clamp(lo[i], hi[i]))
            }
            ProxFunction::Custom(c) => (c.prox)(tau, y),
        }
    }

    /// `f(x)`; `+inf` outside the domain of an indicator.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            ProxFunction::Zero => 0.0,
            ProxFunction::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            ProxFunction::SquaredL2 { center, weight } => {
                0.5 * weight * (x - center).norm_squared()
            }
            ProxFunction::Quadratic { p, q } => 0.5 * (p * x).dot(x) + q.dot(x),
            ProxFunction::Linear { c } => c.dot(x),
            ProxFunction::IndicatorBox { lo, hi } => {
                let inside = x
                    .iter()
                    .enumerate()
                    .all(|(i, &v)| v >= lo[i] - 1e-9 && v <= hi[i] + 1e-9);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFunction::Custom(c) => (c.value)(x),
        }
    }

    /// `prox_{σf*}(y)` through the Moreau identity
    /// `prox_{σf*}(y) = y − σ·prox_{f/σ}(y/σ)`.
    pub fn prox_conjugate(&self, sigma: f64, y: &DVector<f64>) -> DVector<f64> {
        assert!(sigma > 0.0, "prox_conjugate requires sigma > 0, got {sigma}");
        y - self.prox(1.0 / sigma, &(y / sigma)) * sigma
    }

    /// Distance certifying subgradient membership `v ∈ ∂(scale·f)(x)`:
    /// zero iff `x = prox_{scale·f}(x + v)`.
    pub fn membership_gap(&self, scale: f64, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (x - self.prox(scale, &(x + v))).norm()
    }

    /// Config-format serialization (`kind` tag + parameters).
    pub fn spec_string(&self) -> String {
        fn join(v: &DVector<f64>) -> String {
            v.iter()
                .map(|x| format!("{x:.16e}"))
                .collect::<Vec<_>>()
                .join(" ")
        }
        match self {
            ProxFunction::Zero => "zero".into(),
            ProxFunction::L1 { weight } => format!("l1 {weight:.16e}"),
            ProxFunction::SquaredL2 { center, weight } => {
                format!("squared_l2 {weight:.16e} {}", join(center))
            }
            ProxFunction::Quadratic { .. } => "quadratic".into(),
            ProxFunction::Linear { c } => format!("linear {}", join(c)),
            ProxFunction::IndicatorBox { lo, hi } => {
                format!("box {} | {}", join(lo), join(hi))
            }
            ProxFunction::Custom(c) => format!("custom {}", c.label),
        }
    }

    /// Parse the simple (vector-parameterized) catalog kinds back from a
    /// spec string. `quadratic` and `custom` entries carry non-textual data
    /// and are not parseable.
    pub fn parse_spec(spec: &str) -> Result<ProxFunction, ProxError> {
        let mut parts = spec.split_whitespace();
        let kind = parts.next().ok_or_else(|| ProxError::BadSpec(spec.into()))?;
        let nums = |toks: &[&str]| -> Result<Vec<f64>, ProxError> {
            toks.iter()
                .map(|t| t.parse::<f64>().map_err(|_| ProxError::BadSpec(spec.into())))
                .collect()
        };
        let rest: Vec<&str> = parts.collect();
        match kind {
            "zero" => Ok(ProxFunction::Zero),
            "l1" => {
                let v = nums(&rest)?;
                if v.len() != 1 {
                    return Err(ProxError::BadSpec(spec.into()));
                }
                Ok(ProxFunction::L1 { weight: v[0] })
            }
            "squared_l2" => {
                let v = nums(&rest)?;
                if v.len() < 2 {
                    return Err(ProxError::BadSpec(spec.into()));
                }
                Ok(ProxFunction::SquaredL2 {
                    weight: v[0],
                    center: DVector::from_row_slice(&v[1..]),
                })
            }
            "linear" => {
                let v = nums(&rest)?;
                if v.is_empty() {
                    return Err(ProxError::BadSpec(spec.into()));
                }
                Ok(ProxFunction::Linear {
                    c: DVector::from_row_slice(&v),
                })
            }
            "box" => {
                let split: Vec<&[&str]> = rest.split(|t| *t == "|").collect();
                if split.len() != 2 {
                    return Err(ProxError::BadSpec(spec.into()));
                }
                let lo = nums(split[0])?;
                let hi = nums(split[1])?;
                if lo.len() != hi.len() || lo.is_empty() {
                    return Err(ProxError::BadSpec(spec.into()));
                }
                Ok(ProxFunction::IndicatorBox {
                    lo: DVector::from_row_slice(&lo),
                    hi: DVector::from_row_slice(&hi),
                })
            }
            other => Err(ProxError::UnsupportedKind(other.into())),
        }
    }
}
