//! Within-domain training, hard and soft transfer, and the transferability
//! index between every ordered pair of domains.

mod matrix;
mod model;

use serde::Serialize;

use crate::domain::{boe_encode, split_indices, LearningDomain};
use crate::entailment::Entailment;
use crate::error::{Error, Result};
use crate::stats;

pub use matrix::{fti_matrix, FtiMatrix, TransferRecord};
pub use model::{FeatureBlock, HeadBlock, PredictorModel, Sample, TrainMeta};

pub(crate) use model::job_rng;
use model::Sgd;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Models per domain or pair; AUCs are averaged over them.
    pub ensemble: usize,
    pub seed: u64,
    pub train_fraction: f64,
    /// Minimum number of samples on each side of the split.
    pub min_samples: usize,
    pub omega1: f64,
    pub omega2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 16,
            epochs: 200,
            learning_rate: 0.05,
            batch_size: 16,
            ensemble: 10,
            seed: 0,
            train_fraction: 0.8,
            min_samples: 2,
            omega1: 1.0,
            omega2: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.hidden == 0 || self.epochs == 0 || self.batch_size == 0 || self.ensemble == 0 {
            return bad("hidden width, epochs, batch size and ensemble must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train fraction {} must lie in (0, 1)", self.train_fraction));
        }
        check_weights(self.omega1, self.omega2)
    }

    /// Seeds of the ensemble members.
    pub fn seeds(&self) -> impl Iterator<Item = u64> {
        let base = self.seed;
        (0..self.ensemble as u64).map(move |k| base.wrapping_add(k))
    }

    fn sgd(&self) -> Sgd {
        Sgd {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
        }
    }
}

/// One domain's encoded training and test samples.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainData {
    pub id: String,
    pub width: usize,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl DomainData {
    /// Encodes the consistent samples of `d` against a shared vocabulary and
    /// splits them. Data values are standardized with training-split
    /// statistics.
    pub fn encode(d: &LearningDomain, vocab: &[Entailment], value_order: &[String], cfg: &TrainConfig) -> Result<Self> {
        let mut lsos = Vec::new();
        let mut vectors = Vec::new();
        for (o, c) in d.lsos.iter().zip(d.closures()) {
            if c.is_inconsistent() {
                log::warn!(
                    "domain {}: sample {} is inconsistent and not used for training",
                    d.id,
                    o.id
                );
                continue;
            }
            lsos.push(o.clone());
            vectors.push(boe_encode(c, &o.values, vocab, value_order, &d.target));
        }
        let split = split_indices(&lsos, cfg.train_fraction, cfg.seed);
        let nb = vocab.len();
        let nv = value_order.len();
        let mut mean = vec![0.0; nv];
        let mut sd = vec![1.0; nv];
        if !split.train.is_empty() {
            let n = split.train.len() as f64;
            for k in 0..nv {
                let col: Vec<f64> = split.train.iter().map(|&i| vectors[i].values[k]).collect();
                mean[k] = col.iter().sum::<f64>() / n;
                let var = col.iter().map(|v| (v - mean[k]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    sd[k] = var.sqrt();
                }
            }
        }
        let row = |i: usize| {
            let fv = &vectors[i];
            let mut x: Vec<(u32, f64)> = fv.boe.ones().map(|j| (j as u32, 1.0)).collect();
            for k in 0..nv {
                let v = (fv.values[k] - mean[k]) / sd[k];
                if v != 0.0 {
                    x.push(((nb + k) as u32, v));
                }
            }
            Sample { x, y: fv.label }
        };
        let data = DomainData {
            id: d.id.clone(),
            width: nb + nv,
            train: split.train.iter().map(|&i| row(i)).collect(),
            test: split.test.iter().map(|&i| row(i)).collect(),
        };
        data.check(cfg)?;
        Ok(data)
    }

    /// Preconditions for training on this data.
    pub fn check(&self, cfg: &TrainConfig) -> Result<()> {
        let got = self.train.len().min(self.test.len());
        if got < cfg.min_samples {
            return Err(Error::TooFewSamples {
                domain: self.id.clone(),
                needed: cfg.min_samples,
                got,
            });
        }
        let pos = self.train.iter().filter(|s| s.y).count();
        if pos == 0 || pos == self.train.len() {
            return Err(Error::DegenerateLabels(self.id.clone()));
        }
        Ok(())
    }

    pub fn test_labels(&self) -> Vec<bool> {
        self.test.iter().map(|s| s.y).collect()
    }
}

fn evaluate(model: &PredictorModel, data: &DomainData) -> Result<f64> {
    stats::auc(&model.scores(&data.test), &data.test_labels())
}

/// Trains a fresh model on the training split and scores the test split.
pub fn train_within(data: &DomainData, cfg: &TrainConfig, seed: u64) -> Result<(PredictorModel, f64)> {
    data.check(cfg)?;
    let mut rng = job_rng(seed, &format!("within/{}", data.id));
    let mut model = PredictorModel {
        feature: FeatureBlock::random(data.width, cfg.hidden, &mut rng),
        head: HeadBlock::zeros(cfg.hidden),
        meta: TrainMeta {
            domain: data.id.clone(),
            origin: data.id.clone(),
            seed,
            epochs: cfg.epochs,
        },
    };
    model.fit(&data.train, cfg.sgd(), true, &mut rng);
    let auc = evaluate(&model, data)?;
    Ok((model, auc))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferMode {
    /// Feature block frozen, new head trained.
    Hard,
    /// Both blocks copied and fine-tuned.
    Soft,
}

/// Reuses `source`'s parameters on `target` and scores the target test split.
pub fn transfer(
    source: &PredictorModel,
    target: &DomainData,
    mode: TransferMode,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(PredictorModel, f64)> {
    if source.feature.inputs != target.width {
        return Err(Error::WidthMismatch {
            source_domain: source.meta.origin.clone(),
            source_width: source.feature.inputs,
            target_domain: target.id.clone(),
            target_width: target.width,
        });
    }
    target.check(cfg)?;
    let tag = format!("{mode:?}/{}/{}", source.meta.origin, target.id);
    let mut rng = job_rng(seed, &tag);
    let mut model = source.clone();
    model.meta.domain = target.id.clone();
    model.meta.seed = seed;
    model.meta.epochs = cfg.epochs;
    match mode {
        TransferMode::Hard => {
            model.head = HeadBlock::zeros(source.feature.hidden);
            model.fit(&target.train, cfg.sgd(), false, &mut rng);
        }
        TransferMode::Soft => model.fit(&target.train, cfg.sgd(), true, &mut rng),
    }
    let auc = evaluate(&model, target)?;
    Ok((model, auc))
}

fn check_weights(w1: f64, w2: f64) -> Result<()> {
    let unit = |w: f64| (0.0..=1.0).contains(&w);
    if !unit(w1) || !unit(w2) {
        return Err(Error::InvalidParameter(format!(
            "weights {w1}, {w2} must lie in [0, 1]"
        )));
    }
    if w1 == 0.0 && w2 == 0.0 {
        return Err(Error::InvalidParameter("weights must not both be zero".into()));
    }
    Ok(())
}

/// `(w1 * fgi - w2 * fsi) / (w1 + w2)`.
pub fn fti(fsi: f64, fgi: f64, w1: f64, w2: f64) -> Result<f64> {
    check_weights(w1, w2)?;
    Ok((w1 * fgi - w2 * fsi) / (w1 + w2))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn synthetic(
        id: &str,
        n: usize,
        width: usize,
        seed: u64,
        label: impl Fn(&[f64], &mut ChaCha8Rng) -> bool,
    ) -> DomainData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for i in 0..n {
            let mut x: Vec<f64> = (0..width)
                .map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 })
                .collect();
            // Keep both classes on each side of the split.
            if i < 4 {
                x[0] = (i % 2) as f64;
            }
            let y = label(&x, &mut rng);
            rows.push(Sample::from_dense(&x, y));
        }
        let test = rows.split_off(n * 4 / 5);
        DomainData {
            id: id.into(),
            width,
            train: rows,
            test,
        }
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            epochs: 100,
            ensemble: 10,
            ..Default::default()
        }
    }

    #[test]
    fn separable_label_is_learned() {
        let data = synthetic("sep", 100, 10, 1, |x, _| x[0] == 1.0);
        let (_, auc) = train_within(&data, &quick(), 7).unwrap();
        assert!(auc >= 0.95, "{auc}");
    }

    #[test]
    fn noise_labels_stay_near_chance() {
        let cfg = quick();
        let mut total = 0.0;
        for seed in 0..10 {
            let mut data = synthetic("noise", 120, 10, 100 + seed, |_, r| r.random_bool(0.5));
            data.train[0].y = true;
            data.train[1].y = false;
            data.test[0].y = true;
            data.test[1].y = false;
            let (_, auc) = train_within(&data, &cfg, seed).unwrap();
            total += auc;
        }
        let mean = total / 10.0;
        assert!((0.35..=0.65).contains(&mean), "{mean}");
    }

    #[test]
    fn constant_scores_give_half() {
        let data = synthetic("tie", 40, 4, 2, |x, _| x[0] == 1.0);
        let model = PredictorModel {
            feature: FeatureBlock::identity(4),
            head: HeadBlock::zeros(4),
            meta: TrainMeta {
                domain: "tie".into(),
                origin: "tie".into(),
                seed: 0,
                epochs: 0,
            },
        };
        assert_eq!(evaluate(&model, &data).unwrap(), 0.5);
    }

    #[test]
    fn degenerate_and_small_splits() {
        let data = synthetic("one", 20, 3, 3, |_, _| true);
        assert!(matches!(
            train_within(&data, &quick(), 0),
            Err(Error::DegenerateLabels(_))
        ));
        let mut small = synthetic("small", 20, 3, 3, |x, _| x[0] == 1.0);
        small.test.truncate(1);
        assert!(matches!(
            train_within(&small, &quick(), 0),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn hard_transfer_freezes_features() {
        let cfg = quick();
        let a = synthetic("a", 80, 6, 4, |x, _| x[0] == 1.0);
        let b = synthetic("b", 80, 6, 5, |x, _| x[1] == 1.0);
        let (src, _) = train_within(&a, &cfg, 1).unwrap();
        let (hard, _) = transfer(&src, &b, TransferMode::Hard, &cfg, 1).unwrap();
        assert_eq!(hard.feature, src.feature);
        let (soft, _) = transfer(&src, &b, TransferMode::Soft, &cfg, 1).unwrap();
        assert_ne!(soft.feature, src.feature);
        let wide = synthetic("w", 80, 7, 6, |x, _| x[0] == 1.0);
        let err = transfer(&src, &wide, TransferMode::Hard, &cfg, 1).unwrap_err();
        assert!(
            err.to_string().contains("`a`") && err.to_string().contains("`w`"),
            "{err}"
        );
    }

    #[test]
    fn identity_block_hard_transfer_is_head_on_raw_inputs() {
        let cfg = quick();
        let b = synthetic("b", 80, 5, 8, |x, _| x[2] == 1.0);
        let src = PredictorModel {
            feature: FeatureBlock::identity(5),
            head: HeadBlock::zeros(5),
            meta: TrainMeta {
                domain: "id".into(),
                origin: "id".into(),
                seed: 0,
                epochs: 0,
            },
        };
        let (hard, auc) = transfer(&src, &b, TransferMode::Hard, &cfg, 3).unwrap();
        // Same fit by hand: logistic regression on the raw inputs.
        let mut head = PredictorModel {
            head: HeadBlock::zeros(5),
            ..src.clone()
        };
        head.fit(&b.train, cfg.sgd(), false, &mut job_rng(3, "Hard/id/b"));
        assert_eq!(hard.head, head.head);
        assert_eq!(auc, evaluate(&head, &b).unwrap());
    }

    #[test]
    fn self_transfer_soft_keeps_quality() {
        let cfg = quick();
        let a = synthetic("a", 100, 8, 9, |x, r| (x[0] == 1.0) ^ r.random_bool(0.1));
        let (mut base, mut soft) = (0.0, 0.0);
        for seed in cfg.seeds() {
            let (m, auc) = train_within(&a, &cfg, seed).unwrap();
            base += auc;
            soft += transfer(&m, &a, TransferMode::Soft, &cfg, seed).unwrap().1;
        }
        assert!(soft / 10.0 >= base / 10.0 - 0.02, "{soft} {base}");
    }

    #[test]
    fn training_is_deterministic() {
        let a = synthetic("a", 60, 6, 10, |x, _| x[3] == 1.0);
        let cfg = quick();
        assert_eq!(train_within(&a, &cfg, 5).unwrap(), train_within(&a, &cfg, 5).unwrap());
    }

    #[test]
    fn fti_arithmetic() {
        assert!((fti(0.02, 0.04, 1.0, 1.0).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(fti(0.0, 0.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(fti(0.5, 0.1, 1.0, 0.0).unwrap(), 0.1);
        assert!(fti(0.1, 0.1, 0.0, 0.0).is_err());
        assert!(fti(0.1, 0.1, 1.5, 0.0).is_err());
    }
}
