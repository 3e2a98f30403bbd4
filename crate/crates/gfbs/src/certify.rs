//! Static and per-iteration certificates.
//!
//! Static certificates are properties of the model alone: PSD-ness of the
//! metric `Q` (and `S`, `G` when a relaxation operator is present), the
//! averagedness constant `α = 2ν/(4ν − β)`, and sampled operator
//! inequalities. Trace certificates verify, at every recorded iteration, the
//! inequalities that make up the convergence proofs: Fejér monotonicity,
//! residual monotonicity, the `O(1/√k)` rate envelope, sufficient decrease
//! and the non-ergodic objective rate (when an objective is declared), and
//! the η-condition that drives convergence under a general relaxation
//! operator `M`.

use crate::engine::{EngineError, IterationTrace, SplittingModel};
use crate::metric::psd_certificate;
use crate::report::{CertificateReport, CheckItem};
use crate::rng::SplitMix64;
use nalgebra::{DMatrix, DVector};

/// Tolerances for the certificate suite.
#[derive(Clone, Copy, Debug)]
pub struct CertifyOptions {
    /// Absolute slack tolerance on squared-seminorm inequalities.
    pub slack_tol: f64,
    /// Tolerance for residual monotonicity (plain norms).
    pub residual_tol: f64,
    /// PSD certification tolerance (absolute on eigenvalues).
    pub psd_tol: f64,
    /// Number of sampled pairs for static checks.
    pub n_samples: usize,
    /// Seed for sample generation.
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            slack_tol: 1e-8,
            residual_tol: 1e-10,
            psd_tol: 1e-9,
            n_samples: 100,
            seed: 0x5eed,
        }
    }
}

fn random_point(rng: &mut SplitMix64, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.symmetric())
}

fn quad_form(w: &DMatrix<f64>, d: &DVector<f64>) -> f64 {
    (w * d).dot(d)
}

/// Certificates of the model alone (no trace required).
pub fn certify_static(
    model: &SplittingModel,
    opts: &CertifyOptions,
) -> Result<CertificateReport, EngineError> {
    let mut report = CertificateReport::new();
    let n = model.metric.dim();
    let beta = model.beta();
    let nu = model.nu();

    // (a) PSD certificates.
    let q_cert = psd_certificate(&model.q_raw, opts.psd_tol)?;
    report.push(CheckItem {
        name: "psd_Q".into(),
        pass: q_cert.is_psd,
        worst_slack: q_cert.min_eigenvalue,
        location: None,
        informational: false,
    });
    if let Some(relax) = &model.relaxation {
        let s_cert = psd_certificate(&relax.s_raw, opts.psd_tol)?;
        report.push(CheckItem {
            name: "psd_S".into(),
            pass: s_cert.is_psd,
            worst_slack: s_cert.min_eigenvalue,
            location: None,
            informational: false,
        });
        let g_cert = psd_certificate(&model.g_matrix()?, opts.psd_tol)?;
        report.push(CheckItem {
            name: "psd_G".into(),
            pass: g_cert.is_psd,
            worst_slack: g_cert.min_eigenvalue,
            location: None,
            informational: false,
        });
        // (c) η estimate for the scalar case.
        if let Some(gamma) = relax.gamma {
            let eta = (2.0 - beta / (2.0 * nu) - gamma) / gamma;
            report.push(CheckItem::info("eta_km_estimate", eta));
        }
    }

    // (b) ν, α, and the strict averagedness condition ν > β/2.
    report.push(CheckItem::info("nu", nu));
    report.push(CheckItem::info("beta", beta));
    report.push(CheckItem::info("alpha", model.alpha()));
    report.push(CheckItem {
        name: "nu_gt_half_beta".into(),
        pass: nu > beta / 2.0,
        worst_slack: nu - beta / 2.0,
        location: None,
        informational: false,
    });

    // Sampled checks share one random stream.
    let mut rng = SplitMix64::new(opts.seed);

    // (f) range inclusion ran B ⊆ ran Q̃ and the resolvent-form agreement.
    let mut worst_range = 0.0f64;
    let mut worst_form = 0.0f64;
    for _ in 0..opts.n_samples {
        let x = random_point(&mut rng, n);
        let bx = model.forward.eval(&x);
        let leak = (&bx - model.metric.range_project(&bx)?).norm() / (1.0 + bx.norm());
        worst_range = worst_range.max(leak);
        let a = model.gfbs_step(&x)?;
        let b = model.gfbs_step_projected(&x)?;
        worst_form = worst_form.max((a - b).norm() / (1.0 + x.norm()));
    }
    report.push(CheckItem {
        name: "range_inclusion".into(),
        pass: worst_range <= opts.slack_tol,
        worst_slack: -worst_range,
        location: None,
        informational: false,
    });
    report.push(CheckItem {
        name: "step_form_equivalence".into(),
        pass: worst_form <= 1e-10,
        worst_slack: -worst_form,
        location: None,
        informational: false,
    });

    // (d) sampled averagedness inequality:
    // ‖Tx₁−Tx₂‖²_Q + (1 − β/(2ν))‖Rx₁−Rx₂‖²_Q ≤ ‖x₁−x₂‖²_Q with R = I − T.
    // Stated for a self-adjoint Q; when the raw metric is nonsymmetric the
    // contraction lives in S = QM⁻¹ instead and is covered by the trace
    // certificates, so the sampled form is skipped.
    let q_asym = (&model.q_raw - model.q_raw.transpose()).amax();
    if q_asym > 1e-12 * (1.0 + model.q_raw.amax()) {
        report.push(CheckItem::info("sampled_averagedness_skipped_nonsymmetric_q", q_asym));
        return Ok(report);
    }
    let coeff = 1.0 - beta / (2.0 * nu);
    let mut worst = f64::INFINITY;
    let mut loc = 0usize;
    for i in 0..opts.n_samples {
        let x1 = random_point(&mut rng, n);
        let x2 = random_point(&mut rng, n);
        let t1 = model.gfbs_step(&x1)?;
        let t2 = model.gfbs_step(&x2)?;
        let dt = &t1 - &t2;
        let dr = (&x1 - &t1) - (&x2 - &t2);
        let dx = &x1 - &x2;
        let slack = model.metric.q_inner(&dx, &dx)?
            - model.metric.q_inner(&dt, &dt)?
            - coeff * model.metric.q_inner(&dr, &dr)?;
        if slack < worst {
            worst = slack;
            loc = i;
        }
    }
    report.push(
        CheckItem::from_slack("sampled_averagedness", worst, opts.slack_tol)
            .at(format!("pair {loc}")),
    );

    // (e) sampled degenerate descent lemma when a smooth objective part is
    // declared: f(x₂) ≤ f(x₁) + ⟨Q(x₂−x₁), Q†∇f(x₁)⟩ + (β/2ν)‖x₂−x₁‖²_Q.
    if let Some(smooth) = model.objective.as_ref().and_then(|o| o.smooth.as_ref()) {
        let mut worst = f64::INFINITY;
        let mut loc = 0usize;
        for i in 0..opts.n_samples {
            let x1 = random_point(&mut rng, n);
            let x2 = random_point(&mut rng, n);
            let d = &x2 - &x1;
            let grad = (smooth.grad)(&x1);
            let slack = (smooth.value)(&x1)
                + model.metric.q_inner(&d, &model.metric.pinv_apply(&grad)?)?
                + beta / (2.0 * nu) * model.metric.q_inner(&d, &d)?.max(0.0)
                - (smooth.value)(&x2);
            if slack < worst {
                worst = slack;
                loc = i;
            }
        }
        report.push(
            CheckItem::from_slack("sampled_descent_lemma", worst, opts.slack_tol)
                .at(format!("pair {loc}")),
        );
    }

    Ok(report)
}

/// Per-iteration certificates along a recorded trace against an oracle
/// solution `x_star`.
pub fn certify_trace(
    model: &SplittingModel,
    trace: &IterationTrace,
    x_star: &DVector<f64>,
    opts: &CertifyOptions,
) -> Result<CertificateReport, EngineError> {
    let mut report = CertificateReport::new();
    let beta = model.beta();
    let nu = model.nu();
    let states = &trace.states;
    let k_max = trace.iterations();
    let general_m = matches!(&model.relaxation, Some(r) if r.gamma.is_none());
    let gamma = model
        .relaxation
        .as_ref()
        .and_then(|r| r.gamma)
        .unwrap_or(1.0);

    // Norm machinery for the two regimes.
    let (dist_metric, w_matrix): (&crate::metric::DegenerateMetric, Option<DMatrix<f64>>) =
        if general_m {
            (
                &model.relaxation.as_ref().unwrap().s_metric,
                Some(model.w_matrix()?),
            )
        } else {
            (&model.metric, None)
        };

    let diffs: Vec<DVector<f64>> = (0..k_max).map(|k| &states[k] - &states[k + 1]).collect();
    let diff_sq: Vec<f64> = diffs
        .iter()
        .map(|d| dist_metric.q_inner(d, d).map(|v| v.max(0.0)))
        .collect::<Result<_, _>>()?;
    let dists_sq: Vec<f64> = states
        .iter()
        .map(|x| {
            let d = x - x_star;
            dist_metric.q_inner(&d, &d).map(|v| v.max(0.0))
        })
        .collect::<Result<_, _>>()?;

    // Decrease coefficient: ‖Δ‖²_W for general M, else (1/γ)(2 − γ − β/(2ν))
    // in the Q-seminorm (γ = 1 gives the textbook 1 − β/(2ν)).
    let decrement = |k: usize| -> f64 {
        match &w_matrix {
            Some(w) => quad_form(w, &diffs[k]),
            None => (2.0 - gamma - beta / (2.0 * nu)) / gamma * diff_sq[k],
        }
    };

    // (1) Fejér monotonicity.
    {
        let mut worst = f64::INFINITY;
        let mut loc = 0usize;
        for k in 0..k_max {
            let slack = dists_sq[k] - dists_sq[k + 1] - decrement(k);
            if slack < worst {
                worst = slack;
                loc = k;
            }
        }
        report
            .push(CheckItem::from_slack("fejer", worst, opts.slack_tol).at(format!("iter {loc}")));
    }

    // (2) Residual monotonicity.
    {
        let mut worst = f64::INFINITY;
        let mut loc = 0usize;
        for k in 0..k_max.saturating_sub(1) {
            let slack = trace.residuals[k] - trace.residuals[k + 1];
            if slack < worst {
                worst = slack;
                loc = k;
            }
        }
        report.push(
            CheckItem::from_slack("residual_monotone", worst, opts.residual_tol)
                .at(format!("iter {loc}")),
        );
    }

    // Empirical η: largest η with ‖Δ‖²_W ≥ η‖Δ‖²_S along the whole trace.
    let eta_empirical = w_matrix.as_ref().map(|w| {
        let mut eta = f64::INFINITY;
        for k in 1..k_max {
            if diff_sq[k] > 1e-28 {
                eta = eta.min(quad_form(w, &diffs[k]) / diff_sq[k]);
            }
        }
        eta
    });

    // (3) Rate envelope.
    {
        let d0 = dists_sq[0].sqrt();
        let mut worst = f64::INFINITY;
        let mut loc = String::new();
        if general_m {
            let relax = model.relaxation.as_ref().unwrap();
            let eta = relax.declared_eta.or(eta_empirical).unwrap_or(f64::NAN);
            report.push(CheckItem::info("eta_used_for_rate", eta));
            for k in 0..k_max {
                if eta <= 0.0 {
                    continue; // no finite bound available
                }
                let bound = d0 / (eta * (k as f64 + 1.0)).sqrt();
                let slack = bound - trace.residuals[k];
                if slack < worst {
                    worst = slack;
                    loc = format!("iter {k}");
                }
            }
        } else {
            // ‖xᵏ⁺¹−xᵏ‖_Q ≤ sqrt(2γν/(((4−2γ)ν−β)(k+1)))·‖x⁰−x*‖_Q;
            // γ = 1 recovers sqrt(2ν/((2ν−β)(k+1))).
            let denom = (4.0 - 2.0 * gamma) * nu - beta;
            if denom <= 0.0 {
                // Admissibility boundary: the bound degenerates to +∞.
                worst = f64::INFINITY;
                loc = "vacuous: rate denominator <= 0".into();
            } else {
                let factor = (2.0 * gamma * nu / denom).sqrt();
                for k in 0..k_max {
                    let bound = factor / (k as f64 + 1.0).sqrt() * d0;
                    let slack = bound - trace.residuals[k];
                    if slack < worst {
                        worst = slack;
                        loc = format!("iter {k}");
                    }
                }
            }
        }
        report.push(CheckItem::from_slack("rate_envelope", worst, opts.slack_tol).at(loc));
    }

    // (4)–(5) objective-based checks, valid for the unrelaxed iteration.
    let unrelaxed = !general_m && gamma == 1.0;
    match (&model.objective, unrelaxed) {
        (Some(obj), true) => {
            let values: Vec<f64> = states.iter().map(|x| (obj.total)(x)).collect();
            let opt_value = (obj.total)(x_star);

            // Sufficient decrease, convex-g coefficient (1 − β/(2ν)).
            let mut worst_cvx = f64::INFINITY;
            let mut loc_cvx = 0usize;
            // General (nonconvex-g) coefficient ½(1 − β/ν).
            let mut worst_gen = f64::INFINITY;
            let mut loc_gen = 0usize;
            for k in 0..k_max {
                let drop = values[k] - values[k + 1];
                let q_sq = model.metric.q_inner(&diffs[k], &diffs[k])?.max(0.0);
                let s1 = drop - (1.0 - beta / (2.0 * nu)) * q_sq;
                if s1 < worst_cvx {
                    worst_cvx = s1;
                    loc_cvx = k;
                }
                let s2 = drop - 0.5 * (1.0 - beta / nu) * q_sq;
                if s2 < worst_gen {
                    worst_gen = s2;
                    loc_gen = k;
                }
            }
            report.push(
                CheckItem::from_slack("sufficient_decrease_convex", worst_cvx, opts.slack_tol)
                    .at(format!("iter {loc_cvx}")),
            );
            report.push(
                CheckItem::from_slack("sufficient_decrease_general", worst_gen, opts.slack_tol)
                    .at(format!("iter {loc_gen}")),
            );

            // Non-ergodic objective rate, valid when ν ≥ β.
            if nu >= beta {
                let d0_sq = dists_sq[0];
                let mut worst = f64::INFINITY;
                let mut loc = 1usize;
                for k in 1..=k_max {
                    let slack = d0_sq / (2.0 * k as f64) - (values[k] - opt_value);
                    if slack < worst {
                        worst = slack;
                        loc = k;
                    }
                }
                report.push(
                    CheckItem::from_slack("objective_rate", worst, opts.slack_tol)
                        .at(format!("iter {loc}")),
                );
            } else {
                report.push(CheckItem::info("objective_rate_skipped_nu_lt_beta", nu - beta));
            }
        }
        (Some(_), false) => {
            report.push(CheckItem::info("objective_checks_skipped_relaxed", gamma));
        }
        (None, _) => {
            report.push(CheckItem::info("objective_checks_skipped_missing_objective", 0.0));
        }
    }

    // (6) η-condition along the trace (general M only).
    if let Some(w) = &w_matrix {
        let relax = model.relaxation.as_ref().unwrap();
        match relax.declared_eta {
            Some(eta) => {
                let mut worst = f64::INFINITY;
                let mut loc = 0usize;
                // The inequality compares consecutive algorithm outputs; the
                // seed state x⁰ is arbitrary, so the first difference is
                // excluded.
                for k in 1..k_max {
                    let slack = quad_form(w, &diffs[k]) - eta * diff_sq[k];
                    if slack < worst {
                        worst = slack;
                        loc = k;
                    }
                }
                report.push(
                    CheckItem::from_slack("eta_condition", worst, opts.slack_tol)
                        .at(format!("iter {loc}")),
                );
            }
            None => {
                report.push(CheckItem::info(
                    "eta_empirical",
                    eta_empirical.unwrap_or(f64::NAN),
                ));
            }
        }
    }

    Ok(report)
}
