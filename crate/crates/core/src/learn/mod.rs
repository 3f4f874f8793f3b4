//! Classifiers and stratified cross-validation.
//!
//! Labels are [`Gender`]s. Every tie, in prediction or in leaf voting,
//! resolves to `Female`, the lexicographically smaller label.

mod bayes;
mod svm;
mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Gender;
use crate::features::{FeatureVector, Representation};
use crate::rng::{derive_seed, Rng};

pub use bayes::{train_nb, BayesModel, NbVariant};
pub use svm::{svm_objective, train_svm, LinearModel, SvmFit, SvmParams};
pub use tree::{train_tree, TreeModel, TreeNode, TreeParams};

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has a single class ({0})")]
    SingleClass(Gender),
    #[error("{vectors} vectors but {labels} labels")]
    LengthMismatch { vectors: usize, labels: usize },
    #[error("feature id {id} outside a space of {dim} features")]
    DimensionMismatch { id: usize, dim: usize },
    #[error("vector representation {found} differs from dataset representation {expected}")]
    MixedRepresentation {
        expected: Representation,
        found: Representation,
    },
    #[error("{variant} naive Bayes cannot use {representation} vectors")]
    VariantMismatch {
        variant: NbVariant,
        representation: Representation,
    },
    #[error("decision trees need boolean vectors, got {0}")]
    NonBoolean(Representation),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("class {class} has {size} instances, fewer than k = {k}")]
    ClassTooSmall { class: Gender, size: usize, k: usize },
}

/// Vectors with parallel labels over a feature space of `n_features`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    vectors: Vec<FeatureVector>,
    labels: Vec<Gender>,
    n_features: usize,
    representation: Representation,
}

impl Dataset {
    pub fn new(
        vectors: Vec<FeatureVector>,
        labels: Vec<Gender>,
        n_features: usize,
        representation: Representation,
    ) -> Result<Self, LearnError> {
        if vectors.len() != labels.len() {
            return Err(LearnError::LengthMismatch {
                vectors: vectors.len(),
                labels: labels.len(),
            });
        }
        for v in &vectors {
            if v.representation != representation {
                return Err(LearnError::MixedRepresentation {
                    expected: representation,
                    found: v.representation,
                });
            }
            if let Some(id) = v.max_id().filter(|&id| id >= n_features) {
                return Err(LearnError::DimensionMismatch {
                    id,
                    dim: n_features,
                });
            }
        }
        Ok(Dataset {
            vectors,
            labels,
            n_features,
            representation,
        })
    }

    pub fn vectors(&self) -> &[FeatureVector] {
        &self.vectors
    }

    pub fn labels(&self) -> &[Gender] {
        &self.labels
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Instance counts indexed by [`Gender::index`].
    pub fn class_counts(&self) -> [usize; 2] {
        class_counts(&self.labels)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_features: self.n_features,
            representation: self.representation,
        }
    }

    pub(crate) fn require_both_classes(&self) -> Result<(), LearnError> {
        if self.is_empty() {
            return Err(LearnError::EmptyDataset);
        }
        match single_class(self.class_counts()) {
            Some(g) => Err(LearnError::SingleClass(g)),
            None => Ok(()),
        }
    }
}

/// The only class present, if one class is missing.
fn single_class(counts: [usize; 2]) -> Option<Gender> {
    match counts {
        [0, _] => Some(Gender::Male),
        [_, 0] => Some(Gender::Female),
        _ => None,
    }
}

fn class_counts(labels: &[Gender]) -> [usize; 2] {
    let mut counts = [0; 2];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

/// Accuracy of always predicting the most frequent class.
pub fn majority_baseline(labels: &[Gender]) -> Result<f64, LearnError> {
    if labels.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let counts = class_counts(labels);
    Ok(counts[0].max(counts[1]) as f64 / labels.len() as f64)
}

/// Indices kept when the majority class is randomly reduced to the size of
/// the minority class, in ascending order.
pub fn undersample_indices(labels: &[Gender], seed: u64) -> Result<Vec<usize>, LearnError> {
    if labels.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let counts = class_counts(labels);
    if let Some(g) = single_class(counts) {
        return Err(LearnError::SingleClass(g));
    }
    if counts[0] == counts[1] {
        return Ok((0..labels.len()).collect());
    }
    let majority = if counts[0] > counts[1] {
        Gender::Female
    } else {
        Gender::Male
    };
    let minority_size = counts[majority.other().index()];
    let mut major: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == majority).collect();
    Rng::seed_from_u64(seed).shuffle(&mut major);
    major.truncate(minority_size);
    let mut kept: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] != majority)
        .chain(major)
        .collect();
    kept.sort_unstable();
    Ok(kept)
}

pub fn undersample(dataset: &Dataset, seed: u64) -> Result<Dataset, LearnError> {
    Ok(dataset.subset(&undersample_indices(dataset.labels(), seed)?))
}

/// Splits indices into `k` stratified folds.
///
/// Each class is shuffled with one generator seeded from `seed` (female
/// first) and dealt round-robin; the dealing position carries over from
/// one class to the next so fold sizes differ by at most one. Folds are
/// returned with ascending indices.
pub fn stratified_folds(labels: &[Gender], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, LearnError> {
    if k < 2 {
        return Err(LearnError::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    let counts = class_counts(labels);
    for g in Gender::ALL {
        if counts[g.index()] < k {
            return Err(LearnError::ClassTooSmall {
                class: g,
                size: counts[g.index()],
                k,
            });
        }
    }
    let mut rng = Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut pos = 0;
    for g in Gender::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == g).collect();
        rng.shuffle(&mut members);
        for i in members {
            folds[pos % k].push(i);
            pos += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Which classifier to train, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Svm {
        lambda: f64,
        epochs: usize,
    },
    /// Naive Bayes; `variant: None` picks Bernoulli for boolean vectors and
    /// multinomial otherwise.
    Nb {
        alpha: f64,
        variant: Option<NbVariant>,
    },
    Tree {
        max_depth: usize,
        min_leaf: usize,
    },
}

impl ClassifierSpec {
    pub fn svm() -> Self {
        let p = SvmParams::default();
        ClassifierSpec::Svm {
            lambda: p.lambda,
            epochs: p.epochs,
        }
    }

    pub fn nb() -> Self {
        ClassifierSpec::Nb {
            alpha: 1.0,
            variant: None,
        }
    }

    pub fn tree() -> Self {
        let p = TreeParams::default();
        ClassifierSpec::Tree {
            max_depth: p.max_depth,
            min_leaf: p.min_leaf,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Svm { .. } => "svm",
            ClassifierSpec::Nb { .. } => "nb",
            ClassifierSpec::Tree { .. } => "tree",
        }
    }

    pub fn train(&self, dataset: &Dataset, seed: u64) -> Result<TrainedModel, LearnError> {
        Ok(match *self {
            ClassifierSpec::Svm { lambda, epochs } => TrainedModel::Linear(
                train_svm(
                    dataset,
                    &SvmParams {
                        lambda,
                        epochs,
                        seed,
                    },
                )?
                .model,
            ),
            ClassifierSpec::Nb { alpha, variant } => {
                let variant = variant.unwrap_or(match dataset.representation() {
                    Representation::Boolean => NbVariant::Bernoulli,
                    _ => NbVariant::Multinomial,
                });
                TrainedModel::Bayes(train_nb(dataset, variant, alpha)?)
            }
            ClassifierSpec::Tree {
                max_depth,
                min_leaf,
            } => TrainedModel::Tree(train_tree(
                dataset,
                &TreeParams {
                    max_depth,
                    min_leaf,
                },
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Linear(LinearModel),
    Bayes(BayesModel),
    Tree(TreeModel),
}

impl TrainedModel {
    pub fn predict(&self, x: &FeatureVector) -> Result<Gender, LearnError> {
        match self {
            TrainedModel::Linear(m) => m.predict(x),
            TrainedModel::Bayes(m) => m.predict(x),
            TrainedModel::Tree(m) => m.predict(x),
        }
    }

    pub fn accuracy(&self, dataset: &Dataset) -> Result<f64, LearnError> {
        if dataset.is_empty() {
            return Err(LearnError::EmptyDataset);
        }
        let mut correct = 0;
        for (x, &y) in dataset.vectors().iter().zip(dataset.labels()) {
            if self.predict(x)? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / dataset.len() as f64)
    }
}

pub(crate) fn check_dim(x: &FeatureVector, dim: usize) -> Result<(), LearnError> {
    match x.max_id() {
        Some(id) if id >= dim => Err(LearnError::DimensionMismatch { id, dim }),
        _ => Ok(()),
    }
}

/// Cross-validation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    /// Balance each training portion; test folds are never resampled.
    pub undersample: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 10,
            seed: 0,
            undersample: false,
        }
    }
}

/// Result of one k-fold cross-validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub descriptor: String,
    pub classifier: ClassifierSpec,
    pub representation: Representation,
    pub k: usize,
    pub seed: u64,
    pub undersample: bool,
    pub n_instances: usize,
    pub per_fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// `confusion[actual][predicted]`, index 0 = female, 1 = male.
    pub confusion: [[usize; 2]; 2],
}

impl CvReport {
    pub fn with_descriptor(mut self, descriptor: impl Into<String>) -> Self {
        self.descriptor = descriptor.into();
        self
    }
}

/// Stratified k-fold cross-validation.
///
/// Fold `f` (0-based) trains with seed `derive_seed(seed, f + 1)` and, when
/// undersampling, balances its training portion with
/// `derive_seed(seed, 1000 + f)`. Folds run in parallel; results are
/// merged in fold order.
pub fn cross_validate(
    dataset: &Dataset,
    classifier: &ClassifierSpec,
    config: &CvConfig,
) -> Result<CvReport, LearnError> {
    let folds = stratified_folds(dataset.labels(), config.k, config.seed)?;
    let n = dataset.len();
    let results: Vec<(f64, [[usize; 2]; 2])> = (0..config.k)
        .into_par_iter()
        .map(|f| {
            let mut in_test = vec![false; n];
            for &i in &folds[f] {
                in_test[i] = true;
            }
            let train_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
            let mut train = dataset.subset(&train_idx);
            if config.undersample {
                train = undersample(&train, derive_seed(config.seed, 1000 + f as u64))?;
            }
            let model = classifier.train(&train, derive_seed(config.seed, f as u64 + 1))?;
            let mut confusion = [[0usize; 2]; 2];
            for &i in &folds[f] {
                let predicted = model.predict(&dataset.vectors()[i])?;
                confusion[dataset.labels()[i].index()][predicted.index()] += 1;
            }
            let correct = confusion[0][0] + confusion[1][1];
            Ok((correct as f64 / folds[f].len() as f64, confusion))
        })
        .collect::<Result<_, LearnError>>()?;

    let mut confusion = [[0usize; 2]; 2];
    for (_, c) in &results {
        for a in 0..2 {
            for p in 0..2 {
                confusion[a][p] += c[a][p];
            }
        }
    }
    let per_fold_accuracy: Vec<f64> = results.iter().map(|r| r.0).collect();
    let mean_accuracy = per_fold_accuracy.iter().sum::<f64>() / per_fold_accuracy.len() as f64;
    Ok(CvReport {
        descriptor: String::new(),
        classifier: classifier.clone(),
        representation: dataset.representation(),
        k: config.k,
        seed: config.seed,
        undersample: config.undersample,
        n_instances: n,
        per_fold_accuracy,
        mean_accuracy,
        confusion,
    })
}
