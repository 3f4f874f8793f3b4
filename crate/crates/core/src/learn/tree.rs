//! Gain-ratio decision tree over feature presence/absence splits.

use serde::{Deserialize, Serialize};

use super::{check_dim, Dataset, LearnError};
use crate::corpus::Gender;
use crate::features::{FeatureVector, Representation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum instances per leaf; nodes smaller than `2 · min_leaf` are
    /// not split.
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 30,
            min_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        label: Gender,
        /// Training instances reaching the leaf, by [`Gender::index`].
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        absent: Box<TreeNode>,
        present: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split {
                absent, present, ..
            } => 1 + absent.depth().max(present.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<&TreeNode> {
        match self {
            TreeNode::Leaf { .. } => vec![self],
            TreeNode::Split {
                absent, present, ..
            } => {
                let mut v = absent.leaves();
                v.extend(present.leaves());
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: TreeNode,
    pub n_features: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl TreeModel {
    pub fn predict(&self, x: &FeatureVector) -> Result<Gender, LearnError> {
        check_dim(x, self.n_features)?;
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return Ok(*label),
                TreeNode::Split {
                    feature,
                    absent,
                    present,
                } => {
                    node = if x.get(*feature) > 0.0 { present } else { absent };
                }
            }
        }
    }
}

fn majority(counts: [usize; 2]) -> Gender {
    if counts[0] >= counts[1] {
        Gender::Female
    } else {
        Gender::Male
    }
}

fn entropy(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

const GAIN_EPS: f64 = 1e-12;

/// Greedy top-down induction.
///
/// At each node every feature is scored by information gain ratio of the
/// presence/absence split; both children must hold at least `min_leaf`
/// instances. The best ratio wins, ties going to the lower feature id.
/// Growth stops when no split has positive gain, at `max_depth`, or when
/// the node has fewer than `2 · min_leaf` instances. Leaves carry the
/// majority label, ties to female.
pub fn train_tree(dataset: &Dataset, params: &TreeParams) -> Result<TreeModel, LearnError> {
    if dataset.representation() != Representation::Boolean {
        return Err(LearnError::NonBoolean(dataset.representation()));
    }
    if dataset.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    if params.min_leaf == 0 {
        return Err(LearnError::InvalidParameter("min_leaf must be at least 1".into()));
    }
    let indices: Vec<usize> = (0..dataset.len()).collect();
    let mut scratch = vec![[0usize; 2]; dataset.n_features()];
    let root = grow(dataset, params, &indices, 0, &mut scratch);
    Ok(TreeModel {
        root,
        n_features: dataset.n_features(),
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
    })
}

fn grow(
    ds: &Dataset,
    params: &TreeParams,
    indices: &[usize],
    depth: usize,
    scratch: &mut [[usize; 2]],
) -> TreeNode {
    let mut counts = [0usize; 2];
    for &i in indices {
        counts[ds.labels()[i].index()] += 1;
    }
    let leaf = TreeNode::Leaf {
        label: majority(counts),
        counts,
    };
    let n = indices.len();
    if counts[0] == 0 || counts[1] == 0 || depth >= params.max_depth || n < 2 * params.min_leaf {
        return leaf;
    }

    // per-feature class counts among instances where the feature is present
    let mut touched = Vec::new();
    for &i in indices {
        let y = ds.labels()[i].index();
        for &(j, _) in &ds.vectors()[i].pairs {
            if scratch[j] == [0, 0] {
                touched.push(j);
            }
            scratch[j][y] += 1;
        }
    }
    touched.sort_unstable();

    let parent_entropy = entropy(counts);
    let mut best: Option<(usize, f64)> = None;
    for &j in &touched {
        let present = scratch[j];
        let absent = [counts[0] - present[0], counts[1] - present[1]];
        let n_present = present[0] + present[1];
        let n_absent = n - n_present;
        if n_present < params.min_leaf || n_absent < params.min_leaf {
            continue;
        }
        let fp = n_present as f64 / n as f64;
        let gain = parent_entropy - fp * entropy(present) - (1.0 - fp) * entropy(absent);
        if gain <= GAIN_EPS {
            continue;
        }
        let split_info = entropy([n_present, n_absent]);
        let ratio = gain / split_info;
        if best.is_none_or(|(_, r)| ratio > r + GAIN_EPS) {
            best = Some((j, ratio));
        }
    }
    for &j in &touched {
        scratch[j] = [0, 0];
    }

    let Some((feature, _)) = best else {
        return leaf;
    };
    let (with, without): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| ds.vectors()[i].get(feature) > 0.0);
    TreeNode::Split {
        feature,
        absent: Box::new(grow(ds, params, &without, depth + 1, scratch)),
        present: Box::new(grow(ds, params, &with, depth + 1, scratch)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::test_support::*;
    use crate::learn::TrainedModel;
    use Gender::{Female, Male};

    #[test]
    fn single_predictive_feature_gives_stump() {
        let ds = one_perfect_feature(6);
        let tree = train_tree(&ds, &TreeParams::default()).unwrap();
        assert_eq!(tree.root.depth(), 1);
        let model = TrainedModel::Tree(tree);
        assert_eq!(model.accuracy(&ds).unwrap(), 1.0);
    }

    #[test]
    fn pure_input_is_one_leaf() {
        let ds = boolean(&[&[1, 0], &[0, 1], &[1, 1]], &[Male, Male, Male]);
        let tree = train_tree(&ds, &TreeParams::default()).unwrap();
        assert_eq!(
            tree.root,
            TreeNode::Leaf {
                label: Male,
                counts: [0, 3]
            }
        );
    }

    #[test]
    fn leaf_counts_cover_training_set() {
        let ds = boolean(
            &[&[1, 0, 1], &[1, 1, 0], &[0, 0, 1], &[0, 1, 1], &[1, 1, 1], &[0, 0, 0]],
            &[Female, Female, Female, Male, Male, Male],
        );
        let tree = train_tree(
            &ds,
            &TreeParams {
                max_depth: 5,
                min_leaf: 1,
            },
        )
        .unwrap();
        let total: usize = tree
            .root
            .leaves()
            .iter()
            .map(|l| match l {
                TreeNode::Leaf { counts, .. } => counts[0] + counts[1],
                _ => unreachable!(),
            })
            .sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn depth_and_leaf_limits() {
        let ds = one_perfect_feature(6);
        let stump = train_tree(
            &ds,
            &TreeParams {
                max_depth: 0,
                min_leaf: 1,
            },
        )
        .unwrap();
        assert_eq!(stump.root.depth(), 0);
        let big_leaf = train_tree(
            &ds,
            &TreeParams {
                max_depth: 5,
                min_leaf: 7,
            },
        )
        .unwrap();
        assert_eq!(big_leaf.root.depth(), 0);
        // tie at the root leaf goes to female
        assert!(matches!(big_leaf.root, TreeNode::Leaf { label: Female, .. }));
    }

    #[test]
    fn rejects_non_boolean() {
        let ds = Dataset::new(
            vec![FeatureVector::from_pairs(vec![(0, 2.0)], Representation::Count)],
            vec![Female],
            1,
            Representation::Count,
        )
        .unwrap();
        assert_eq!(
            train_tree(&ds, &TreeParams::default()),
            Err(LearnError::NonBoolean(Representation::Count))
        );
    }
}
