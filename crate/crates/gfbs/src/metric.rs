//! Degenerate-metric linear algebra.
//!
//! A *degenerate metric* is a symmetric positive semi-definite matrix `Q`
//! that may be singular, so `‖x‖_Q = sqrt(⟨Qx, x⟩)` is only a seminorm. The
//! quantities that drive every certificate in this crate are
//!
//! * `ν` — the smallest *strictly positive* eigenvalue of `Q` (its smallest
//!   eigenvalue restricted to `ran Q`),
//! * `Q†` — the Moore–Penrose pseudo-inverse, and
//! * `P = QQ†` — the orthogonal projector onto `ran Q`.
//!
//! The canonical factorization is a dense symmetric eigendecomposition (not
//! Cholesky, which fails on singular matrices). Eigenvalues within the PSD
//! tolerance of zero are clipped to exactly zero, which fixes the rank and ν
//! deterministically.

use crate::report::{CertificateReport, CheckItem};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Default relative tolerance separating kernel from range eigenvalues.
pub const DEFAULT_PSD_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: max asymmetry {asymmetry:.3e} exceeds tolerance {tol:.3e}")]
    NotSymmetric { asymmetry: f64, tol: f64 },
    #[error("matrix is not PSD: eigenvalue {eigenvalue:.6e} below -{tol:.3e}")]
    NotPsd { eigenvalue: f64, tol: f64 },
    #[error("metric is identically zero (rank 0)")]
    ZeroMetric,
    #[error("dimension mismatch: metric is {metric_dim}, vector is {vector_dim}")]
    DimensionMismatch {
        metric_dim: usize,
        vector_dim: usize,
    },
    #[error("range violation: ‖(I - QQ†)Bx‖ = {residual:.3e} on sample {sample}")]
    RangeViolation { residual: f64, sample: usize },
}

/// Symmetric PSD metric with cached eigendecomposition.
#[derive(Clone, Debug)]
pub struct DegenerateMetric {
    /// Exactly symmetric matrix, reconstructed from the clipped spectrum.
    matrix: DMatrix<f64>,
    /// Orthonormal eigenvectors, columns sorted by ascending eigenvalue.
    eig_basis: DMatrix<f64>,
    /// Eigenvalues sorted ascending; entries below the cutoff are exactly 0.
    eig_values: DVector<f64>,
    rank: usize,
    nu: f64,
    /// Absolute cutoff actually applied (relative tolerance × spectral scale).
    psd_tol_abs: f64,
}

impl DegenerateMetric {
    /// Build a metric from a (nearly) symmetric PSD matrix.
    ///
    /// `psd_tol` is relative: the absolute cutoff is
    /// `psd_tol × max(1, largest |eigenvalue|)`. Eigenvalues in
    /// `(−cutoff, cutoff]` are treated as exactly zero (kernel); anything
    /// below `−cutoff` is an error.
    pub fn build(matrix: &DMatrix<f64>, psd_tol: f64) -> Result<Self, MetricError> {
        if matrix.nrows() == 0 {
            return Err(MetricError::ZeroMetric);
        }
        if matrix.nrows() != matrix.ncols() {
            return Err(MetricError::NonSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let scale = matrix.amax().max(1.0);
        let asymmetry = (matrix - matrix.transpose()).amax();
        if asymmetry > psd_tol * scale {
            return Err(MetricError::NotSymmetric {
                asymmetry,
                tol: psd_tol * scale,
            });
        }
        let sym = (matrix + matrix.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();

        // Sort the spectrum ascending, carrying eigenvectors along.
        let n = sym.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut basis = DMatrix::zeros(n, n);
        let mut values = DVector::zeros(n);
        for (dst, &src) in order.iter().enumerate() {
            basis.set_column(dst, &eig.eigenvectors.column(src));
            values[dst] = eig.eigenvalues[src];
        }

        let max_abs = values.amax();
        let cutoff = psd_tol * max_abs.max(1.0);
        if values[0] < -cutoff {
            return Err(MetricError::NotPsd {
                eigenvalue: values[0],
                tol: cutoff,
            });
        }
        for v in values.iter_mut() {
            if *v <= cutoff {
                *v = 0.0;
            }
        }
        let rank = values.iter().filter(|&&v| v > 0.0).count();
        if rank == 0 {
            return Err(MetricError::ZeroMetric);
        }
        let nu = values
            .iter()
            .copied()
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);

        // Reconstruct so the stored matrix matches the clipped spectrum.
        let matrix = &basis * DMatrix::from_diagonal(&values) * basis.transpose();
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Ok(Self {
            matrix,
            eig_basis: basis,
            eig_values: values,
            rank,
            nu,
            psd_tol_abs: cutoff,
        })
    }

    /// Build with the default relative tolerance.
    pub fn new(matrix: &DMatrix<f64>) -> Result<Self, MetricError> {
        Self::build(matrix, DEFAULT_PSD_TOL)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Smallest strictly positive eigenvalue.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn psd_tol_abs(&self) -> f64 {
        self.psd_tol_abs
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eig_values(&self) -> &DVector<f64> {
        &self.eig_values
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<(), MetricError> {
        if x.len() != self.dim() {
            return Err(MetricError::DimensionMismatch {
                metric_dim: self.dim(),
                vector_dim: x.len(),
            });
        }
        Ok(())
    }

    /// `Qx`.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>, MetricError> {
        self.check_dim(x)?;
        Ok(&self.matrix * x)
    }

    /// `⟨Qx, y⟩`.
    pub fn q_inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, MetricError> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok((&self.matrix * x).dot(y))
    }

    /// The Q-seminorm `sqrt(⟨Qx, x⟩)`; the inner value is clamped at zero
    /// before the square root to absorb rounding. Note that `q_norm(x) = 0`
    /// does not imply `x = 0` when `Q` is degenerate.
    pub fn q_norm(&self, x: &DVector<f64>) -> Result<f64, MetricError> {
        Ok(self.q_inner(x, x)?.max(0.0).sqrt())
    }

    /// `Q†y`: invert the positive eigenvalues, annihilate the kernel.
    pub fn pinv_apply(&self, y: &DVector<f64>) -> Result<DVector<f64>, MetricError> {
        self.check_dim(y)?;
        let mut coeffs = self.eig_basis.transpose() * y;
        for (c, &v) in coeffs.iter_mut().zip(self.eig_values.iter()) {
            *c = if v > 0.0 { *c / v } else { 0.0 };
        }
        Ok(&self.eig_basis * coeffs)
    }

    /// Orthogonal projection onto `ran Q` (equals `QQ†y`).
    pub fn range_project(&self, y: &DVector<f64>) -> Result<DVector<f64>, MetricError> {
        self.check_dim(y)?;
        let mut coeffs = self.eig_basis.transpose() * y;
        for (c, &v) in coeffs.iter_mut().zip(self.eig_values.iter()) {
            if v == 0.0 {
                *c = 0.0;
            }
        }
        Ok(&self.eig_basis * coeffs)
    }

    /// `√Q · x`, computed in the same eigenbasis. Exposed for tests of
    /// norm identities; not part of the solver path.
    pub fn sqrt_apply(&self, x: &DVector<f64>) -> Result<DVector<f64>, MetricError> {
        self.check_dim(x)?;
        let mut coeffs = self.eig_basis.transpose() * x;
        for (c, &v) in coeffs.iter_mut().zip(self.eig_values.iter()) {
            *c *= v.sqrt();
        }
        Ok(&self.eig_basis * coeffs)
    }
}

/// Result of a plain PSD test on a square matrix.
#[derive(Clone, Copy, Debug)]
pub struct PsdCertificate {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// Symmetrize `M` as `(M + Mᵀ)/2` and test its smallest eigenvalue against
/// `−tol` (absolute).
pub fn psd_certificate(m: &DMatrix<f64>, tol: f64) -> Result<PsdCertificate, MetricError> {
    if m.nrows() != m.ncols() {
        return Err(MetricError::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PsdCertificate {
        is_psd: min_eigenvalue >= -tol,
        min_eigenvalue,
    })
}

/// Verify the three degenerate-metric inequalities relating a map `B` with
/// `ran B ⊆ ran Q` to the pseudo-inverse seminorms:
///
/// 1. `‖Bx‖² ≥ ν ‖Q†Bx‖²_Q`
/// 2. `⟨Bx, y⟩ ≤ ‖Q†Bx‖_Q · ‖y‖_Q`
/// 3. `⟨Bx, y⟩ ≤ η ‖Q†Bx‖²_Q + (1/4η) ‖y‖²_Q` for each `η` in the grid.
///
/// The range inclusion is pre-checked on every sample; a violation beyond
/// `tol` aborts with [`MetricError::RangeViolation`].
pub fn verify_fact_f1<F>(
    q: &DegenerateMetric,
    b: F,
    samples: &[(DVector<f64>, DVector<f64>)],
    eta_grid: &[f64],
    tol: f64,
) -> Result<CertificateReport, MetricError>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    // Pre-check: Bx must stay in ran Q.
    for (i, (x, _)) in samples.iter().enumerate() {
        let bx = b(x);
        let residual = (&bx - q.range_project(&bx)?).norm();
        if residual > tol * (1.0 + bx.norm()) {
            return Err(MetricError::RangeViolation {
                residual,
                sample: i,
            });
        }
    }

    let mut worst1 = f64::INFINITY;
    let mut worst2 = f64::INFINITY;
    let mut worst3 = f64::INFINITY;
    let (mut loc1, mut loc2, mut loc3) = (0usize, 0usize, 0usize);
    for (i, (x, y)) in samples.iter().enumerate() {
        let bx = b(x);
        let pinv_bx = q.pinv_apply(&bx)?;
        let pinv_bx_qsq = q.q_inner(&pinv_bx, &pinv_bx)?.max(0.0);
        let y_qsq = q.q_inner(y, y)?.max(0.0);
        let inner = bx.dot(y);

        let s1 = bx.norm_squared() - q.nu() * pinv_bx_qsq;
        if s1 < worst1 {
            worst1 = s1;
            loc1 = i;
        }
        let s2 = (pinv_bx_qsq * y_qsq).sqrt() - inner;
        if s2 < worst2 {
            worst2 = s2;
            loc2 = i;
        }
        for &eta in eta_grid {
            let s3 = eta * pinv_bx_qsq + y_qsq / (4.0 * eta) - inner;
            if s3 < worst3 {
                worst3 = s3;
                loc3 = i;
            }
        }
    }
    let mut report = CertificateReport::new();
    report.push(CheckItem::from_slack("f1_norm_lower_bound", worst1, tol).at(format!("sample {loc1}")));
    report.push(CheckItem::from_slack("f1_cauchy_schwarz", worst2, tol).at(format!("sample {loc2}")));
    report.push(CheckItem::from_slack("f1_young", worst3, tol).at(format!("sample {loc3}")));
    Ok(report)
}
