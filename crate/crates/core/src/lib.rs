//! Detecting gendered coverage of politicians in news text.
//!
//! Articles are matched against a registry of politicians, labelled by
//! the gender of those mentioned, stripped of explicit gender cues and
//! turned into feature vectors. Classifiers trained on those vectors
//! measure how far the remaining language still separates the two
//! groups; the interpretation tools show which words do the separating.

pub mod corpus;
pub mod features;
pub mod interpret;
pub mod learn;
pub mod preprocess;
pub mod rng;

pub use corpus::{Article, Gender, LabeledInstance, Labeler, Registry};
pub use features::{FeatureSpace, FeatureVector, Representation, Scheme, Window};
pub use learn::{ClassifierSpec, CvConfig, CvReport, Dataset};
