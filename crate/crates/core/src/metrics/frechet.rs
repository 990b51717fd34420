//! Fréchet distance between Gaussian fits of two feature sets.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

use super::FeatureVector;

/// Added to every covariance diagonal before the matrix square root.
pub const COVARIANCE_EPSILON: f64 = 1e-6;

/// Sample mean and (unbiased) covariance of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianStats {
    pub fn from_features(set: &[FeatureVector]) -> Result<Self> {
        if set.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "Fréchet distance needs at least 2 feature vectors per set, got {}",
                set.len()
            )));
        }
        let dim = set[0].dim();
        if let Some(bad) = set.iter().find(|f| f.dim() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "feature dimensions {dim} and {}",
                bad.dim()
            )));
        }
        let n = set.len() as f64;
        let mut mean = DVector::zeros(dim);
        for f in set {
            mean += DVector::from_column_slice(f.as_slice());
        }
        mean /= n;
        let mut covariance = DMatrix::zeros(dim, dim);
        for f in set {
            let d = DVector::from_column_slice(f.as_slice()) - &mean;
            covariance.ger(1.0, &d, &d, 1.0);
        }
        covariance /= n - 1.0;
        Ok(GaussianStats { mean, covariance })
    }

    fn regularized(mut self) -> Self {
        for i in 0..self.covariance.nrows() {
            self.covariance[(i, i)] += COVARIANCE_EPSILON;
        }
        self
    }

    /// Total order on the raw numbers; makes the distance exactly symmetric.
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.mean
            .iter()
            .chain(self.covariance.iter())
            .zip(other.mean.iter().chain(other.covariance.iter()))
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

/// Symmetric PSD square root by eigendecomposition, negative eigenvalues clipped.
fn sqrtm_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `|μ1 − μ2|² + Tr(Σ1 + Σ2 − 2 (Σ1 Σ2)^{1/2})` from given statistics.
///
/// The trace of `(Σ1 Σ2)^{1/2}` is computed as the trace of
/// `(Σ1^{1/2} Σ2 Σ1^{1/2})^{1/2}`, which has the same eigenvalues and stays symmetric.
pub fn frechet_from_stats(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    if a.mean.len() != b.mean.len()
        || a.covariance.shape() != (a.mean.len(), a.mean.len())
        || b.covariance.shape() != (b.mean.len(), b.mean.len())
    {
        return Err(Error::DimensionMismatch(format!(
            "statistics of dimension {} and {}",
            a.mean.len(),
            b.mean.len()
        )));
    }
    let (first, second) = if a.canonical_cmp(b).is_le() {
        (a, b)
    } else {
        (b, a)
    };
    let diff = &first.mean - &second.mean;
    let mean_term = diff.dot(&diff);

    let root_first = sqrtm_psd(&first.covariance);
    let inner = &root_first * &second.covariance * &root_first;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross_trace: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();

    let value =
        mean_term + first.covariance.trace() + second.covariance.trace() - 2.0 * cross_trace;
    Ok(value.max(0.0))
}

/// Fréchet feature distance between two sets of at least two vectors each.
pub fn frechet_distance(a: &[FeatureVector], b: &[FeatureVector]) -> Result<f64> {
    let sa = GaussianStats::from_features(a)?.regularized();
    let sb = GaussianStats::from_features(b)?.regularized();
    frechet_from_stats(&sa, &sb)
}
