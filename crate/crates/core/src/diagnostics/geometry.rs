use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::rng::{self, streams};
use crate::{Error, Result};

/// Per-class cap on points entering the pairwise intra-class distances.
pub const GEOMETRY_CAP: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureGeometry {
    /// Mean over label groups of the mean pairwise distance within the group.
    pub intra: f64,
    /// Mean pairwise distance between label-group centroids.
    pub inter: f64,
}

fn dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn mean_pairwise(rows: &Array2<f64>) -> f64 {
    let n = rows.nrows();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += dist(rows.row(i), rows.row(j));
        }
    }
    total / (n * (n - 1) / 2) as f64
}

/// Intra- and inter-class distances of the label groups in `labels`.
/// Classes with no samples are ignored; groups larger than
/// [`GEOMETRY_CAP`] are subsampled from the `SUBSAMPLE` stream of `seed`.
pub fn feature_geometry(features: &Array2<f32>, labels: &[usize], seed: u64) -> Result<FeatureGeometry> {
    if features.nrows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature rows vs {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &y) in labels.iter().enumerate() {
        groups[y].push(i);
    }
    let x = features.mapv(f64::from);
    let mut rng = rng::stream(seed, streams::SUBSAMPLE);
    let mut intra = Vec::new();
    let mut centroids: Vec<Array1<f64>> = Vec::new();
    for (class, members) in groups.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::ClassTooSmall {
                class,
                count: members.len(),
                reason: "feature geometry needs two samples per class",
            });
        }
        let group = x.select(ndarray::Axis(0), members);
        centroids.push(group.mean_axis(ndarray::Axis(0)).expect("non-empty group"));
        let capped = if members.len() > GEOMETRY_CAP {
            let mut pick = sample(&mut rng, members.len(), GEOMETRY_CAP).into_vec();
            pick.sort_unstable();
            group.select(ndarray::Axis(0), &pick)
        } else {
            group
        };
        intra.push(mean_pairwise(&capped));
    }
    if centroids.len() < 2 {
        return Err(Error::InvalidConfig("feature geometry needs two classes".into()));
    }
    let c = ndarray::stack(
        ndarray::Axis(0),
        &centroids.iter().map(|c| c.view()).collect::<Vec<_>>(),
    )
    .map_err(|e| Error::Shape(e.to_string()))?;
    Ok(FeatureGeometry {
        intra: intra.iter().sum::<f64>() / intra.len() as f64,
        inter: mean_pairwise(&c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identical_points() {
        let f = Array2::<f32>::ones((6, 3));
        let g = feature_geometry(&f, &[0, 0, 1, 1, 2, 2], 0).unwrap();
        assert_eq!((g.intra, g.inter), (0.0, 0.0));
    }

    #[test]
    fn two_tight_clusters() {
        let f = array![[0.0f32, 0.0], [0.0, 0.0], [6.0, 8.0], [6.0, 8.0]];
        let g = feature_geometry(&f, &[0, 0, 1, 1], 0).unwrap();
        assert_eq!(g.intra, 0.0);
        assert!((g.inter - 10.0).abs() < 1e-12);
    }

    #[test]
    fn hand_intra() {
        // Class 0: points 0, 3, 4 on a line: distances 3, 4, 1 -> 8/3.
        let f = array![[0.0f32], [3.0], [4.0], [10.0], [12.0]];
        let g = feature_geometry(&f, &[0, 0, 0, 1, 1], 0).unwrap();
        assert!((g.intra - (8.0 / 3.0 + 2.0) / 2.0).abs() < 1e-12);
        assert!((g.inter - (11.0 - 7.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn singleton_class_rejected() {
        let f = Array2::<f32>::zeros((3, 2));
        assert!(matches!(
            feature_geometry(&f, &[0, 0, 1], 0),
            Err(Error::ClassTooSmall { class: 1, .. })
        ));
    }
}
