//! Linear SVM trained by Pegasos-style stochastic sub-gradient descent.
//!
//! The objective is
//! `λ/2 · (‖w‖² + b²) + (1/n) Σ max(0, 1 − yᵢ(w·xᵢ + b))`
//! with `y = +1` for female. The bias is treated as the weight of a
//! constant feature, so it is regularised like the other weights.

use serde::{Deserialize, Serialize};

use super::{check_dim, Dataset, LearnError};
use crate::corpus::Gender;
use crate::features::FeatureVector;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Class predicted for positive scores (always female).
    pub positive_class: Gender,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        LinearModel {
            weights: vec![0.0; dim],
            bias: 0.0,
            positive_class: Gender::Female,
        }
    }

    pub fn score(&self, x: &FeatureVector) -> Result<f64, LearnError> {
        check_dim(x, self.weights.len())?;
        Ok(x.dot(&self.weights) + self.bias)
    }

    /// Sign of the score; zero goes to female.
    pub fn predict(&self, x: &FeatureVector) -> Result<Gender, LearnError> {
        let s = self.score(x)?;
        Ok(if s >= 0.0 {
            self.positive_class
        } else {
            self.positive_class.other()
        })
    }
}

/// A trained model plus the objective after each epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub model: LinearModel,
    /// Objective of each epoch's averaged iterate.
    pub epoch_objectives: Vec<f64>,
    /// Running minimum of `epoch_objectives`; the returned model attains
    /// the last value.
    pub objective_trace: Vec<f64>,
}

fn sign(label: Gender) -> f64 {
    if label == Gender::Female {
        1.0
    } else {
        -1.0
    }
}

pub fn svm_objective(model: &LinearModel, dataset: &Dataset, lambda: f64) -> f64 {
    let norm2: f64 = model.weights.iter().map(|w| w * w).sum::<f64>() + model.bias * model.bias;
    let hinge: f64 = dataset
        .vectors()
        .iter()
        .zip(dataset.labels())
        .map(|(x, &y)| (1.0 - sign(y) * (x.dot(&model.weights) + model.bias)).max(0.0))
        .sum();
    0.5 * lambda * norm2 + hinge / dataset.len().max(1) as f64
}

/// Weight vector stored as `scale · v` so the per-step shrink is O(1).
///
/// The running sum of iterates since the last `start_average` is kept
/// lazily as `cum · v − z`, where `cum` is the sum of scales so far and
/// `z` absorbs each update to `v` weighted by `cum` at that time.
struct ScaledWeights {
    v: Vec<f64>,
    vb: f64,
    scale: f64,
    /// ‖v‖² + vb²
    norm2: f64,
    cum: f64,
    z: Vec<f64>,
    zb: f64,
    steps: usize,
}

impl ScaledWeights {
    fn new(dim: usize) -> Self {
        ScaledWeights {
            v: vec![0.0; dim],
            vb: 0.0,
            scale: 1.0,
            norm2: 0.0,
            cum: 0.0,
            z: vec![0.0; dim],
            zb: 0.0,
            steps: 0,
        }
    }

    fn raw_dot(&self, x: &FeatureVector) -> f64 {
        x.dot(&self.v) + self.vb
    }

    fn reset(&mut self) {
        // callers reset only while the running sum is empty
        debug_assert_eq!(self.steps, 0);
        self.v.iter_mut().for_each(|w| *w = 0.0);
        self.vb = 0.0;
        self.scale = 1.0;
        self.norm2 = 0.0;
    }

    fn start_average(&mut self) {
        self.cum = 0.0;
        self.z.iter_mut().for_each(|w| *w = 0.0);
        self.zb = 0.0;
        self.steps = 0;
    }

    /// Adds the current iterate to the running sum.
    fn accumulate(&mut self) {
        self.cum += self.scale;
        self.steps += 1;
    }

    /// w += c · (x, 1), given `raw = v·x + vb`.
    fn add(&mut self, x: &FeatureVector, c: f64, raw: f64) {
        let k = c / self.scale;
        let x_norm2: f64 = x.pairs.iter().map(|p| p.1 * p.1).sum::<f64>() + 1.0;
        for &(i, val) in &x.pairs {
            self.v[i] += k * val;
            self.z[i] += self.cum * k * val;
        }
        self.vb += k;
        self.zb += self.cum * k;
        self.norm2 += 2.0 * k * raw + k * k * x_norm2;
    }

    fn renormalize(&mut self) {
        for w in &mut self.v {
            *w *= self.scale;
        }
        self.vb *= self.scale;
        self.norm2 *= self.scale * self.scale;
        self.cum /= self.scale;
        self.scale = 1.0;
    }

    /// Mean of the iterates accumulated since `start_average`.
    fn average(&self) -> LinearModel {
        let n = self.steps.max(1) as f64;
        LinearModel {
            weights: self
                .v
                .iter()
                .zip(&self.z)
                .map(|(v, z)| (self.cum * v - z) / n)
                .collect(),
            bias: (self.cum * self.vb - self.zb) / n,
            positive_class: Gender::Female,
        }
    }

}

/// Trains a linear SVM.
///
/// Each epoch visits every instance once in an order drawn from a
/// generator seeded with `params.seed`. Step `t` (from 1) uses learning
/// rate `1/(λt)`, then projects onto the ball of radius `1/√λ`. The
/// iterates of each epoch are averaged, and the epoch average with the
/// lowest objective is returned.
pub fn train_svm(dataset: &Dataset, params: &SvmParams) -> Result<SvmFit, LearnError> {
    if dataset.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(LearnError::InvalidParameter(format!(
            "lambda must be positive, got {}",
            params.lambda
        )));
    }
    if params.epochs == 0 {
        return Err(LearnError::InvalidParameter("epochs must be at least 1".into()));
    }
    let lambda = params.lambda;
    let radius = 1.0 / lambda.sqrt();
    let mut w = ScaledWeights::new(dataset.n_features());
    let mut rng = Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut t: u64 = 0;

    let mut best = LinearModel::zeros(dataset.n_features());
    let mut best_obj = f64::INFINITY;
    let mut epoch_objectives = Vec::with_capacity(params.epochs);
    let mut objective_trace = Vec::with_capacity(params.epochs);

    for _ in 0..params.epochs {
        w.start_average();
        rng.shuffle(&mut order);
        for &i in &order {
            t += 1;
            let x = &dataset.vectors()[i];
            let y = sign(dataset.labels()[i]);
            let raw = w.raw_dot(x);
            let margin = y * w.scale * raw;
            let eta = 1.0 / (lambda * t as f64);

            if t == 1 {
                // the shrink factor 1 − 1/t is zero on the first step
                w.reset();
            } else {
                w.scale *= 1.0 - 1.0 / t as f64;
            }
            if margin < 1.0 {
                let raw_now = if t == 1 { 0.0 } else { raw };
                w.add(x, eta * y, raw_now);
            }
            let norm = w.scale * w.norm2.max(0.0).sqrt();
            if norm > radius {
                w.scale *= radius / norm;
            }
            if w.scale < 1e-9 {
                w.renormalize();
            }
            w.accumulate();
        }
        let model = w.average();
        let obj = svm_objective(&model, dataset, lambda);
        epoch_objectives.push(obj);
        if obj < best_obj {
            best_obj = obj;
            best = model;
        }
        objective_trace.push(best_obj);
    }
    Ok(SvmFit {
        model: best,
        epoch_objectives,
        objective_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Representation;
    use crate::learn::test_support::*;

    fn dense(rows: &[[f64; 2]], labels: &[Gender]) -> Dataset {
        let vectors = rows
            .iter()
            .map(|r| {
                FeatureVector::from_pairs(
                    vec![(0, r[0]), (1, r[1])],
                    Representation::Count,
                )
            })
            .collect();
        Dataset::new(vectors, labels.to_vec(), 2, Representation::Count).unwrap()
    }

    #[test]
    fn separable_single_feature() {
        let rows: Vec<Vec<u8>> = (0..20).map(|i| vec![(i < 10) as u8]).collect();
        let refs: Vec<&[u8]> = rows.iter().map(Vec::as_slice).collect();
        let ds = boolean(&refs, &labels(10, 10));
        let fit = train_svm(&ds, &SvmParams::default()).unwrap();
        assert!(fit.model.weights[0] > 0.0);
        for (x, &y) in ds.vectors().iter().zip(ds.labels()) {
            assert_eq!(fit.model.predict(x).unwrap(), y);
        }
    }

    #[test]
    fn zero_vectors_leave_weights_zero() {
        let rows: Vec<Vec<u8>> = vec![vec![0, 0]; 6];
        let refs: Vec<&[u8]> = rows.iter().map(Vec::as_slice).collect();
        let ds = boolean(&refs, &labels(3, 3));
        let fit = train_svm(&ds, &SvmParams::default()).unwrap();
        assert!(fit.model.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn tie_goes_to_female() {
        let m = LinearModel::zeros(3);
        let x = FeatureVector::from_pairs(vec![(1, 1.0)], Representation::Boolean);
        assert_eq!(m.predict(&x).unwrap(), Gender::Female);
        let bad = FeatureVector::from_pairs(vec![(3, 1.0)], Representation::Boolean);
        assert!(m.predict(&bad).is_err());
    }

    #[test]
    fn trace_is_non_increasing_and_reproducible() {
        let rows = [
            [2.0, 1.0],
            [1.5, 2.5],
            [3.0, 0.5],
            [0.5, 0.2],
            [0.2, 0.4],
            [0.7, 0.1],
        ];
        let ds = dense(&rows, &labels(3, 3));
        let p = SvmParams {
            lambda: 0.05,
            epochs: 30,
            seed: 9,
        };
        let a = train_svm(&ds, &p).unwrap();
        assert!(a.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        let final_obj = svm_objective(&a.model, &ds, p.lambda);
        assert!((final_obj - a.objective_trace.last().unwrap()).abs() < 1e-12);
        assert_eq!(a, train_svm(&ds, &p).unwrap());
    }

    #[test]
    fn scaled_copy_still_separates() {
        let rows = [
            [2.0, 1.0],
            [1.5, 2.5],
            [3.0, 0.5],
            [0.5, 0.2],
            [0.2, 0.4],
            [0.7, 0.1],
        ];
        let scaled: Vec<[f64; 2]> = rows.iter().map(|r| [r[0] * 10.0, r[1] * 10.0]).collect();
        for data in [&rows[..], &scaled[..]] {
            let ds = dense(data, &labels(3, 3));
            let fit = train_svm(
                &ds,
                &SvmParams {
                    lambda: 1e-3,
                    epochs: 200,
                    seed: 1,
                },
            )
            .unwrap();
            for (x, &y) in ds.vectors().iter().zip(ds.labels()) {
                assert_eq!(fit.model.predict(x).unwrap(), y);
            }
        }
    }

    #[test]
    fn lazy_average_matches_dense_sum() {
        let mut rng = Rng::seed_from_u64(3);
        let mut w = ScaledWeights::new(4);
        let mut dense_sum = [0.0f64; 5];
        w.start_average();
        for step in 0..200 {
            w.scale *= 0.5 + rng.next_f64();
            if rng.bernoulli(0.6) {
                let x = FeatureVector::from_pairs(
                    vec![(rng.below(4) as usize, 1.0 + rng.next_f64()), (3, 0.5)],
                    Representation::Count,
                );
                let raw = w.raw_dot(&x);
                w.add(&x, rng.next_f64() - 0.5, raw);
            }
            if step % 37 == 0 || w.scale < 1e-3 {
                w.renormalize();
            }
            w.accumulate();
            for (i, s) in dense_sum.iter_mut().take(4).enumerate() {
                *s += w.scale * w.v[i];
            }
            dense_sum[4] += w.scale * w.vb;
        }
        let avg = w.average();
        for i in 0..4 {
            assert!((avg.weights[i] - dense_sum[i] / 200.0).abs() < 1e-9);
        }
        assert!((avg.bias - dense_sum[4] / 200.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_params() {
        let ds = one_perfect_feature(3);
        let mut p = SvmParams::default();
        p.lambda = 0.0;
        assert!(train_svm(&ds, &p).is_err());
        p.lambda = 1.0;
        p.epochs = 0;
        assert!(train_svm(&ds, &p).is_err());
    }
}
