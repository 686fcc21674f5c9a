use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::FeatureDataset;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    #[serde(default = "default_true")]
    pub stratified: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.7,
            val_frac: 0.1,
            test_frac: 0.2,
            stratified: true,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|&f| !(f > 0.0)) {
            return Err(Error::InvalidConfig("split fractions must be > 0".into()));
        }
        if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("split fractions must sum to 1".into()));
        }
        Ok(())
    }

    fn fractions(&self) -> [f64; 3] {
        [self.train_frac, self.val_frac, self.test_frac]
    }
}

/// Sorted original indices of each part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Largest-remainder allocation of `n` items, then at least one per part.
fn allocate(n: usize, fracs: [f64; 3]) -> [usize; 3] {
    let ideal = fracs.map(|f| f * n as f64);
    let mut counts = ideal.map(|x| x.floor() as usize);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = ideal[a] - ideal[a].floor();
        let rb = ideal[b] - ideal[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    if n >= 3 {
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let donor = (0..3).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap();
            counts[donor] -= 1;
            counts[empty] += 1;
        }
    }
    counts
}

pub fn split_indices(ds: &FeatureDataset, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, rng::streams::SHUFFLE);
    let groups: Vec<Vec<usize>> = if spec.stratified {
        let mut by_class = vec![Vec::new(); ds.num_classes()];
        for (i, &y) in ds.labels().iter().enumerate() {
            by_class[usize::from(y)].push(i);
        }
        for (c, members) in by_class.iter().enumerate() {
            if !members.is_empty() && members.len() < 3 {
                return Err(Error::ClassTooSmall {
                    class: c,
                    count: members.len(),
                    reason: "stratified split needs >= 3 per class",
                });
            }
        }
        by_class
    } else {
        if ds.len() < 3 {
            return Err(Error::Empty("dataset too small to split"));
        }
        vec![(0..ds.len()).collect()]
    };

    let mut parts = [Vec::new(), Vec::new(), Vec::new()];
    for mut members in groups {
        members.shuffle(&mut rng);
        let counts = allocate(members.len(), spec.fractions());
        let mut rest = members.as_slice();
        for (part, &count) in parts.iter_mut().zip(&counts) {
            let (head, tail) = rest.split_at(count);
            part.extend_from_slice(head);
            rest = tail;
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    let [train, val, test] = parts;
    Ok(SplitIndices { train, val, test })
}

/// Seeded (train, val, test) partition, stratified by class when requested.
pub fn stratified_split(
    ds: &FeatureDataset,
    spec: &SplitSpec,
) -> Result<(FeatureDataset, FeatureDataset, FeatureDataset)> {
    let idx = split_indices(ds, spec)?;
    Ok((ds.subset(&idx.train), ds.subset(&idx.val), ds.subset(&idx.test)))
}
