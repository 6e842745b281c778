//! Sub-token precision, recall and F1.
//!
//! Names are compared as case-insensitive sets of sub-tokens, so word order
//! and repeated words do not matter. An UNK name never matches anything.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;

use crate::corpus::{derive_seed, split_subtokens, AblationMask, IndexedExample, RawExample, Vocabs, UNK_TOKEN};
use crate::model::{predict_topk, ModelError, ModelParams, Real};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairScore {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl PairScore {
    pub fn is_exact(&self) -> bool {
        self.fp == 0 && self.fn_ == 0
    }

    fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Sub-token set of a name, or `None` for the UNK name.
fn subtoken_set(name: &str) -> Option<BTreeSet<String>> {
    (name != UNK_TOKEN).then(|| split_subtokens(name).into_iter().collect())
}

/// `(tp, fp, fn)` of one prediction against the true name.
pub fn score_pair(predicted: &str, truth: &str) -> PairScore {
    let pred = subtoken_set(predicted);
    let gold = subtoken_set(truth);
    match (pred, gold) {
        (Some(p), Some(t)) => PairScore {
            tp: p.intersection(&t).count() as u64,
            fp: p.difference(&t).count() as u64,
            fn_: t.difference(&p).count() as u64,
        },
        (Some(p), None) => PairScore {
            tp: 0,
            fp: p.len() as u64,
            fn_: 1,
        },
        (None, Some(t)) => PairScore {
            tp: 0,
            fp: 1,
            fn_: t.len() as u64,
        },
        (None, None) => PairScore {
            tp: 0,
            fp: 1,
            fn_: 1,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// Ratios of counts summed over all examples.
    #[default]
    Micro,
    /// Mean of per-example ratios.
    Macro,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricsAccumulator {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub examples: u64,
    pub exact: u64,
    macro_p: f64,
    macro_r: f64,
    macro_f1: f64,
}

impl MetricsAccumulator {
    pub fn add(&mut self, score: PairScore) {
        self.tp += score.tp;
        self.fp += score.fp;
        self.fn_ += score.fn_;
        self.examples += 1;
        self.exact += u64::from(score.is_exact());
        let (p, r) = (score.precision(), score.recall());
        self.macro_p += p;
        self.macro_r += r;
        self.macro_f1 += harmonic(p, r);
    }

    pub fn merge(&mut self, other: &MetricsAccumulator) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.examples += other.examples;
        self.exact += other.exact;
        self.macro_p += other.macro_p;
        self.macro_r += other.macro_r;
        self.macro_f1 += other.macro_f1;
    }

    pub fn metrics(&self, averaging: Averaging) -> Metrics {
        let exact_match = ratio(self.exact, self.examples);
        let (precision, recall, f1) = match averaging {
            Averaging::Micro => {
                let p = ratio(self.tp, self.tp + self.fp);
                let r = ratio(self.tp, self.tp + self.fn_);
                (p, r, harmonic(p, r))
            }
            Averaging::Macro if self.examples == 0 => (0.0, 0.0, 0.0),
            Averaging::Macro => {
                let n = self.examples as f64;
                (self.macro_p / n, self.macro_r / n, self.macro_f1 / n)
            }
        };
        Metrics {
            precision,
            recall,
            f1,
            exact_match,
            n: self.examples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub exact_match: f64,
    pub n: u64,
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P={:.4} R={:.4} F1={:.4} exact={:.4} n={}",
            self.precision, self.recall, self.f1, self.exact_match, self.n
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub ablation: AblationMask,
    /// Seed for sampling contexts from bags larger than `k_max`.
    pub seed: u64,
    pub averaging: Averaging,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            ablation: AblationMask::FULL,
            seed: 0,
            averaging: Averaging::Micro,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub truth: String,
    /// `None` when the example had no contexts to predict from.
    pub predicted: Option<String>,
    pub score: PairScore,
}

impl fmt::Display for EvalRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.truth,
            self.predicted.as_deref().unwrap_or("-"),
            self.score.tp,
            self.score.fp,
            self.score.fn_
        )
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub totals: MetricsAccumulator,
    pub rows: Vec<EvalRow>,
}

/// Scores the top-1 prediction of every example. Examples without contexts
/// get no prediction and count all their true sub-tokens as misses.
pub fn evaluate<T: Real>(
    params: &ModelParams<T>,
    dataset: &[RawExample],
    vocabs: &Vocabs,
    options: &EvalOptions,
) -> Result<Evaluation, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let k_max = params.dims.k_max;
    let rows: Vec<EvalRow> = dataset
        .par_iter()
        .enumerate()
        .map(|(i, raw)| {
            let enc = IndexedExample::new(raw, vocabs, options.ablation)
                .encode(k_max, Some(derive_seed(options.seed, 0, i as u64)));
            if !enc.is_trainable() {
                let misses = subtoken_set(&raw.label).map_or(1, |s| s.len() as u64);
                return Ok(EvalRow {
                    truth: raw.label.clone(),
                    predicted: None,
                    score: PairScore {
                        tp: 0,
                        fp: 0,
                        fn_: misses,
                    },
                });
            }
            let top = predict_topk(params, &enc, 1)?;
            let predicted = vocabs
                .tags
                .entry(top[0].0)
                .unwrap_or(UNK_TOKEN)
                .to_string();
            let score = score_pair(&predicted, &raw.label);
            Ok(EvalRow {
                truth: raw.label.clone(),
                predicted: Some(predicted),
                score,
            })
        })
        .collect::<Result<_, ModelError>>()?;
    let mut totals = MetricsAccumulator::default();
    for row in &rows {
        totals.add(row.score);
    }
    Ok(Evaluation {
        metrics: totals.metrics(options.averaging),
        totals,
        rows,
    })
}
