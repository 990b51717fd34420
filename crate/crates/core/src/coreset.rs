//! Farthest-point sampling for K-center coreset selection.
//!
//! Starting from a seed point, each further pick is the unselected point
//! whose distance to the nearest selected point is largest. The result is a
//! 2-approximation of the optimal K-center cover radius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::FeatureVector;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "index")]
pub enum SeedRule {
    /// The point closest to the mean of all points (lowest index on ties).
    #[default]
    NearestToMean,
    ExplicitIndex(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetSelection {
    /// Indices into the feature list, in selection order.
    pub selected_indices: Vec<usize>,
    /// Max over all points of the distance to the nearest selected point.
    pub cover_radius: f64,
}

fn check_dims(features: &[FeatureVector]) -> Result<usize> {
    let first = features
        .first()
        .ok_or_else(|| Error::InvalidInput("empty feature list".into()))?;
    let dim = first.dim();
    if let Some((i, f)) = features.iter().enumerate().find(|(_, f)| f.dim() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "feature {i} has dimension {} but feature 0 has {dim}",
            f.dim()
        )));
    }
    Ok(dim)
}

/// Index of the point nearest to the centroid.
pub fn nearest_to_mean(features: &[FeatureVector]) -> Result<usize> {
    let dim = check_dims(features)?;
    let mut mean = vec![0.0; dim];
    for f in features {
        for (m, v) in mean.iter_mut().zip(f.as_slice()) {
            *m += v;
        }
    }
    let n = features.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    let centroid = FeatureVector(mean);
    let dists = par::map(features, |f| f.distance(&centroid));
    let mut best = 0;
    for (i, &d) in dists.iter().enumerate() {
        if d < dists[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Argmax with ties broken by lowest index.
fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Select `count` points by farthest-point sampling.
pub fn select_coreset(
    features: &[FeatureVector],
    count: usize,
    seed_rule: SeedRule,
) -> Result<CoresetSelection> {
    check_dims(features)?;
    let n = features.len();
    if count == 0 || count > n {
        return Err(Error::InvalidInput(format!(
            "coreset size {count} outside 1..={n}"
        )));
    }
    let first = match seed_rule {
        SeedRule::NearestToMean => nearest_to_mean(features)?,
        SeedRule::ExplicitIndex(i) if i < n => i,
        SeedRule::ExplicitIndex(i) => {
            return Err(Error::InvalidInput(format!(
                "seed index {i} out of range for {n} features"
            )))
        }
    };

    let mut selected = Vec::with_capacity(count);
    let mut is_selected = vec![false; n];
    selected.push(first);
    is_selected[first] = true;
    let mut nearest = par::map(features, |f| f.distance(&features[first]));

    while selected.len() < count {
        // selected points sit at distance 0, so they never win unless every
        // remaining point coincides with the selection; exclude them explicitly
        let candidates: Vec<f64> = nearest
            .iter()
            .zip(&is_selected)
            .map(|(&d, &s)| if s { f64::NEG_INFINITY } else { d })
            .collect();
        let pick = argmax_lowest(&candidates);
        selected.push(pick);
        is_selected[pick] = true;
        let picked = &features[pick];
        let fresh = par::map(features, |f| f.distance(picked));
        for (d, f) in nearest.iter_mut().zip(fresh) {
            if f < *d {
                *d = f;
            }
        }
    }

    let cover_radius = nearest.iter().copied().fold(0.0, f64::max);
    Ok(CoresetSelection {
        selected_indices: selected,
        cover_radius,
    })
}

/// Max over all points of the distance to the nearest selected point.
pub fn cover_radius(features: &[FeatureVector], selected: &[usize]) -> Result<f64> {
    check_dims(features)?;
    if selected.is_empty() {
        return Err(Error::InvalidInput("empty selection".into()));
    }
    if let Some(&bad) = selected.iter().find(|&&i| i >= features.len()) {
        return Err(Error::InvalidInput(format!(
            "selected index {bad} out of range for {} features",
            features.len()
        )));
    }
    let per_point = par::map(features, |f| {
        selected
            .iter()
            .map(|&s| f.distance(&features[s]))
            .fold(f64::INFINITY, f64::min)
    });
    Ok(per_point.into_iter().fold(0.0, f64::max))
}
