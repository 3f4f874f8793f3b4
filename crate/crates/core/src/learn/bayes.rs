use std::fmt;

use serde::{Deserialize, Serialize};

use super::{check_dim, Dataset, LearnError};
use crate::corpus::Gender;
use crate::features::{FeatureVector, Representation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NbVariant {
    /// Presence/absence of every feature; boolean vectors only.
    Bernoulli,
    /// Feature counts (or tf-idf weights) as multinomial draws.
    Multinomial,
}

impl fmt::Display for NbVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NbVariant::Bernoulli => "bernoulli",
            NbVariant::Multinomial => "multinomial",
        })
    }
}

/// Naive Bayes tables, all in natural-log space. Per-class arrays are
/// indexed by [`Gender::index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesModel {
    pub variant: NbVariant,
    pub alpha: f64,
    pub log_prior: [f64; 2],
    /// Bernoulli: log P(present | class). Multinomial: log θ(feature | class).
    pub log_likelihood: Vec<[f64; 2]>,
    /// Bernoulli only: log P(absent | class); empty for multinomial.
    pub log_absent: Vec<[f64; 2]>,
    absent_total: [f64; 2],
}

/// Fits naive Bayes with Laplace smoothing `alpha` and maximum-likelihood
/// class priors.
///
/// Bernoulli: `P(x_j = 1 | c) = (n_cj + α) / (n_c + 2α)` where `n_cj`
/// counts class-`c` documents containing feature `j`.
/// Multinomial: `θ_cj = (N_cj + α) / (N_c + α·d)` where `N_cj` sums the
/// feature's values over class `c` and `d` is the number of features.
pub fn train_nb(dataset: &Dataset, variant: NbVariant, alpha: f64) -> Result<BayesModel, LearnError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(LearnError::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let rep = dataset.representation();
    let compatible = match variant {
        NbVariant::Bernoulli => rep == Representation::Boolean,
        NbVariant::Multinomial => rep != Representation::Boolean,
    };
    if !compatible {
        return Err(LearnError::VariantMismatch {
            variant,
            representation: rep,
        });
    }
    dataset.require_both_classes()?;

    let d = dataset.n_features();
    let counts = dataset.class_counts();
    let n = dataset.len() as f64;
    let log_prior = [(counts[0] as f64 / n).ln(), (counts[1] as f64 / n).ln()];

    let mut sums = vec![[0.0f64; 2]; d];
    for (x, &y) in dataset.vectors().iter().zip(dataset.labels()) {
        for &(j, v) in &x.pairs {
            sums[j][y.index()] += v;
        }
    }

    match variant {
        NbVariant::Bernoulli => {
            let mut log_likelihood = Vec::with_capacity(d);
            let mut log_absent = Vec::with_capacity(d);
            let mut absent_total = [0.0; 2];
            for s in &sums {
                let mut present = [0.0; 2];
                let mut absent = [0.0; 2];
                for c in 0..2 {
                    let p = (s[c] + alpha) / (counts[c] as f64 + 2.0 * alpha);
                    present[c] = p.ln();
                    absent[c] = (1.0 - p).ln();
                    absent_total[c] += absent[c];
                }
                log_likelihood.push(present);
                log_absent.push(absent);
            }
            Ok(BayesModel {
                variant,
                alpha,
                log_prior,
                log_likelihood,
                log_absent,
                absent_total,
            })
        }
        NbVariant::Multinomial => {
            let mut totals = [0.0; 2];
            for s in &sums {
                totals[0] += s[0];
                totals[1] += s[1];
            }
            let log_likelihood = sums
                .iter()
                .map(|s| {
                    [
                        ((s[0] + alpha) / (totals[0] + alpha * d as f64)).ln(),
                        ((s[1] + alpha) / (totals[1] + alpha * d as f64)).ln(),
                    ]
                })
                .collect();
            Ok(BayesModel {
                variant,
                alpha,
                log_prior,
                log_likelihood,
                log_absent: Vec::new(),
                absent_total: [0.0; 2],
            })
        }
    }
}

impl BayesModel {
    /// Unnormalised log joint `log P(c) + log P(x | c)` per class.
    pub fn log_joint(&self, x: &FeatureVector) -> Result<[f64; 2], LearnError> {
        check_dim(x, self.log_likelihood.len())?;
        let mut out = self.log_prior;
        match self.variant {
            NbVariant::Bernoulli => {
                for c in 0..2 {
                    out[c] += self.absent_total[c];
                }
                for &(j, _) in &x.pairs {
                    for c in 0..2 {
                        out[c] += self.log_likelihood[j][c] - self.log_absent[j][c];
                    }
                }
            }
            NbVariant::Multinomial => {
                for &(j, v) in &x.pairs {
                    for c in 0..2 {
                        out[c] += v * self.log_likelihood[j][c];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Normalised log posteriors `log P(c | x)`.
    pub fn log_posteriors(&self, x: &FeatureVector) -> Result<[f64; 2], LearnError> {
        let j = self.log_joint(x)?;
        let m = j[0].max(j[1]);
        let lse = m + ((j[0] - m).exp() + (j[1] - m).exp()).ln();
        Ok([j[0] - lse, j[1] - lse])
    }

    /// Arg-max posterior; equal posteriors go to female.
    pub fn predict(&self, x: &FeatureVector) -> Result<Gender, LearnError> {
        let j = self.log_joint(x)?;
        Ok(if j[0] >= j[1] {
            Gender::Female
        } else {
            Gender::Male
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::test_support::*;
    use Gender::{Female, Male};

    fn toy() -> Dataset {
        boolean(
            &[&[1, 0, 1], &[1, 1, 0], &[1, 0, 0], &[0, 1, 1], &[0, 1, 0], &[1, 1, 1]],
            &[Female, Female, Female, Male, Male, Male],
        )
    }

    #[test]
    fn priors_sum_to_one() {
        let m = train_nb(&toy(), NbVariant::Bernoulli, 1.0).unwrap();
        let total: f64 = m.log_prior.iter().map(|l| l.exp()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn large_alpha_flattens_towards_prior() {
        let ds = boolean(
            &[&[1, 0], &[1, 0], &[1, 1], &[0, 1], &[0, 1]],
            &[Female, Female, Female, Male, Male],
        );
        let x = &ds.vectors()[0];
        let prior = (3.0f64 / 5.0).ln();
        let mut last_gap = f64::INFINITY;
        for alpha in [0.5, 1.0, 10.0, 100.0, 1e4, 1e6] {
            let m = train_nb(&ds, NbVariant::Bernoulli, alpha).unwrap();
            let gap = (m.log_posteriors(x).unwrap()[0] - prior).abs();
            assert!(gap < last_gap, "alpha {alpha}: {gap} >= {last_gap}");
            last_gap = gap;
        }
        assert!(last_gap < 1e-4);
    }

    #[test]
    fn mirrored_dataset_mirrors_tables() {
        let ds = toy();
        let swapped: Vec<Gender> = ds.labels().iter().map(|g| g.other()).collect();
        let ds2 = Dataset::new(ds.vectors().to_vec(), swapped, 3, Representation::Boolean).unwrap();
        for variant_ds in [(ds, ds2)] {
            let a = train_nb(&variant_ds.0, NbVariant::Bernoulli, 1.0).unwrap();
            let b = train_nb(&variant_ds.1, NbVariant::Bernoulli, 1.0).unwrap();
            assert_eq!(a.log_prior, [b.log_prior[1], b.log_prior[0]]);
            for (x, y) in a.log_likelihood.iter().zip(&b.log_likelihood) {
                assert_eq!(*x, [y[1], y[0]]);
            }
        }
    }

    #[test]
    fn variant_mismatch() {
        assert!(matches!(
            train_nb(&toy(), NbVariant::Multinomial, 1.0),
            Err(LearnError::VariantMismatch { .. })
        ));
        let counts = Dataset::new(
            vec![
                FeatureVector::from_pairs(vec![(0, 2.0)], Representation::Count),
                FeatureVector::from_pairs(vec![(1, 3.0)], Representation::Count),
            ],
            vec![Female, Male],
            2,
            Representation::Count,
        )
        .unwrap();
        assert!(train_nb(&counts, NbVariant::Bernoulli, 1.0).is_err());
        let m = train_nb(&counts, NbVariant::Multinomial, 1.0).unwrap();
        assert_eq!(m.predict(&counts.vectors()[1]).unwrap(), Male);
    }

    #[test]
    fn multinomial_matches_hand_computation() {
        // female docs: (2,0), (1,1); male: (0,3). α = 1, d = 2
        let v = |a: f64, b: f64| FeatureVector::from_pairs(vec![(0, a), (1, b)], Representation::Count);
        let ds = Dataset::new(
            vec![v(2.0, 0.0), v(1.0, 1.0), v(0.0, 3.0)],
            vec![Female, Female, Male],
            2,
            Representation::Count,
        )
        .unwrap();
        let m = train_nb(&ds, NbVariant::Multinomial, 1.0).unwrap();
        // θ_f = (4/6, 2/6), θ_m = (1/5, 4/5)
        assert!((m.log_likelihood[0][0] - (4.0f64 / 6.0).ln()).abs() < 1e-12);
        assert!((m.log_likelihood[1][1] - (4.0f64 / 5.0).ln()).abs() < 1e-12);
        let x = v(1.0, 2.0);
        let jf = (2.0f64 / 3.0).ln() + (4.0f64 / 6.0).ln() + 2.0 * (2.0f64 / 6.0).ln();
        let jm = (1.0f64 / 3.0).ln() + (1.0f64 / 5.0).ln() + 2.0 * (4.0f64 / 5.0).ln();
        let got = m.log_joint(&x).unwrap();
        assert!((got[0] - jf).abs() < 1e-12 && (got[1] - jm).abs() < 1e-12);
    }

    #[test]
    fn equal_posteriors_go_female() {
        let ds = boolean(&[&[1], &[1]], &[Female, Male]);
        let m = train_nb(&ds, NbVariant::Bernoulli, 1.0).unwrap();
        assert_eq!(m.predict(&ds.vectors()[0]).unwrap(), Female);
        assert_eq!(
            train_nb(&boolean(&[&[1]], &[Male]), NbVariant::Bernoulli, 1.0),
            Err(LearnError::SingleClass(Male))
        );
    }
}
