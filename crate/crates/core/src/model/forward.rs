use rand::Rng;

use super::{dot, AttentionVariant, Matrix, ModelError, ModelParams, Real};
use crate::corpus::{EncodedExample, PAD};

/// Training uses the soft weighting for [`AttentionVariant::TrainSoftPredictHard`];
/// inference uses the hard one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Infer,
}

/// How attention weights are formed from the combined context vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Softmax,
    Uniform,
    Argmax,
    PerElement,
}

impl AttentionVariant {
    pub fn weighting(self, phase: Phase) -> Weighting {
        match (self, phase) {
            (AttentionVariant::Soft | AttentionVariant::SoftNoFC, _) => Weighting::Softmax,
            (AttentionVariant::NoAttention, _) => Weighting::Uniform,
            (AttentionVariant::HardTrainHard, _) => Weighting::Argmax,
            (AttentionVariant::TrainSoftPredictHard, Phase::Train) => Weighting::Softmax,
            (AttentionVariant::TrainSoftPredictHard, Phase::Infer) => Weighting::Argmax,
            (AttentionVariant::ElementWise, _) => Weighting::PerElement,
        }
    }
}

/// Inverted-dropout scale factors for the context vectors of one example:
/// each entry is 0 or `1 / keep`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dropout<T> {
    pub scale: Matrix<T>,
}

impl<T: Real> Dropout<T> {
    pub fn sample<R: Rng>(rows: usize, cols: usize, rate: f64, rng: &mut R) -> Self {
        let keep = 1.0 - rate;
        let kept = T::of(1.0 / keep);
        let data = (0..rows * cols)
            .map(|_| {
                if rng.gen::<f64>() < keep {
                    kept
                } else {
                    T::zero()
                }
            })
            .collect();
        Self {
            scale: Matrix::from_vec(rows, cols, data),
        }
    }
}

/// Every intermediate of one forward pass, indexed by valid context.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    /// Slot index of each valid context.
    pub slots: Vec<usize>,
    /// Context vectors after dropout, n x 3d.
    pub contexts: Matrix<T>,
    pub dropout: Option<Matrix<T>>,
    /// Combined context vectors, n x w.
    pub combined: Matrix<T>,
    /// Attention logits, n x 1 (n x d element-wise); empty for uniform.
    pub scores: Matrix<T>,
    /// Attention weights, n x 1 (n x d element-wise).
    pub attention: Matrix<T>,
    pub weighting: Weighting,
    /// Winning context under hard attention.
    pub selected: Option<usize>,
    pub code_vector: Vec<T>,
    /// Tag logits; the PAD entry is negative infinity.
    pub logits: Vec<T>,
    /// Distribution over tags; the PAD entry is zero.
    pub q: Vec<T>,
    total_slots: usize,
}

impl<T: Real> ForwardTrace<T> {
    /// Attention per input slot, zero on masked slots. Element-wise weights
    /// are averaged over elements, which still sums to one.
    pub fn slot_attention(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.total_slots];
        let cols = T::of(self.attention.cols() as f64);
        for (i, &slot) in self.slots.iter().enumerate() {
            let sum = self
                .attention
                .row(i)
                .iter()
                .fold(T::zero(), |acc, &v| acc + v);
            out[slot] = sum / cols;
        }
        out
    }

    pub fn loss(&self, label_id: u32) -> T {
        -self.q[label_id as usize].ln()
    }
}

pub(crate) fn softmax_in_place<T: Real>(xs: &mut [T]) {
    let max = xs.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    let mut total = T::zero();
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        total = total + *x;
    }
    for x in xs.iter_mut() {
        *x = *x / total;
    }
}

fn validate<T: Real>(params: &ModelParams<T>, enc: &EncodedExample) -> Result<Vec<usize>, ModelError> {
    if enc.contexts.len() != enc.mask.len() {
        return Err(ModelError::Mismatch(format!(
            "{} contexts but {} mask flags",
            enc.contexts.len(),
            enc.mask.len()
        )));
    }
    let dims = &params.dims;
    let mut slots = Vec::new();
    for (slot, ids) in enc.valid_slots() {
        if ids.source as usize >= dims.values || ids.target as usize >= dims.values {
            return Err(ModelError::Mismatch(format!(
                "value id out of range in slot {slot} (vocabulary has {})",
                dims.values
            )));
        }
        if ids.path as usize >= dims.paths {
            return Err(ModelError::Mismatch(format!(
                "path id {} out of range (vocabulary has {})",
                ids.path, dims.paths
            )));
        }
        slots.push(slot);
    }
    if slots.is_empty() {
        return Err(ModelError::AllMasked);
    }
    Ok(slots)
}

/// Runs the network on one bag. `dropout`, when given, must have one row per
/// valid context and `3d` columns.
pub fn forward<T: Real>(
    params: &ModelParams<T>,
    enc: &EncodedExample,
    phase: Phase,
    dropout: Option<&Dropout<T>>,
) -> Result<ForwardTrace<T>, ModelError> {
    let slots = validate(params, enc)?;
    let n = slots.len();
    let d = params.dims.d;
    let width = params.code_width();
    if let Some(drop) = dropout {
        if drop.scale.rows() != n || drop.scale.cols() != 3 * d {
            return Err(ModelError::Mismatch("dropout mask shape".into()));
        }
    }

    let mut contexts = Matrix::zeros(n, 3 * d);
    for (i, &slot) in slots.iter().enumerate() {
        let ids = enc.contexts[slot];
        let row = contexts.row_mut(i);
        row[..d].copy_from_slice(params.value_vocab.row(ids.source as usize));
        row[d..2 * d].copy_from_slice(params.path_vocab.row(ids.path as usize));
        row[2 * d..].copy_from_slice(params.value_vocab.row(ids.target as usize));
        if let Some(drop) = dropout {
            for (v, &s) in row.iter_mut().zip(drop.scale.row(i)) {
                *v = *v * s;
            }
        }
    }

    let combined = if params.variant.has_fc() {
        let mut combined = Matrix::zeros(n, d);
        for i in 0..n {
            let c = contexts.row(i);
            for r in 0..d {
                combined.set(i, r, dot(params.w.row(r), c).tanh());
            }
        }
        combined
    } else {
        contexts.clone()
    };

    let weighting = params.variant.weighting(phase);
    let mut selected = None;
    let (scores, attention) = match weighting {
        Weighting::Uniform => {
            let share = T::one() / T::of(n as f64);
            (Matrix::zeros(0, 0), Matrix::from_vec(n, 1, vec![share; n]))
        }
        Weighting::Softmax | Weighting::Argmax => {
            let a = params.attention.row(0);
            let scores: Vec<T> = (0..n).map(|i| dot(combined.row(i), a)).collect();
            let mut weights = scores.clone();
            if weighting == Weighting::Softmax {
                softmax_in_place(&mut weights);
            } else {
                // lowest index wins ties
                let mut best = 0;
                for i in 1..n {
                    if scores[i] > scores[best] {
                        best = i;
                    }
                }
                weights.fill(T::zero());
                weights[best] = T::one();
                selected = Some(best);
            }
            (Matrix::from_vec(n, 1, scores), Matrix::from_vec(n, 1, weights))
        }
        Weighting::PerElement => {
            let mut scores = Matrix::zeros(n, d);
            for i in 0..n {
                for j in 0..d {
                    scores.set(i, j, dot(combined.row(i), params.attention.row(j)));
                }
            }
            let mut attention = Matrix::zeros(n, d);
            let mut column = vec![T::zero(); n];
            for j in 0..d {
                for (i, c) in column.iter_mut().enumerate() {
                    *c = scores.get(i, j);
                }
                softmax_in_place(&mut column);
                for (i, &c) in column.iter().enumerate() {
                    attention.set(i, j, c);
                }
            }
            (scores, attention)
        }
    };

    let mut code = vec![T::zero(); width];
    for i in 0..n {
        let h = combined.row(i);
        let alpha = attention.row(i);
        if alpha.len() == 1 {
            let a = alpha[0];
            for (u, &x) in code.iter_mut().zip(h) {
                *u = *u + a * x;
            }
        } else {
            for ((u, &x), &a) in code.iter_mut().zip(h).zip(alpha) {
                *u = *u + a * x;
            }
        }
    }

    let tags = params.dims.tags;
    let mut logits = vec![T::neg_infinity(); tags];
    for (y, logit) in logits.iter_mut().enumerate().skip(PAD as usize + 1) {
        *logit = dot(params.tags_vocab.row(y), &code);
    }
    let mut q = logits.clone();
    softmax_in_place(&mut q);

    Ok(ForwardTrace {
        slots,
        contexts,
        dropout: dropout.map(|d| d.scale.clone()),
        combined,
        scores,
        attention,
        weighting,
        selected,
        code_vector: code,
        logits,
        q,
        total_slots: enc.contexts.len(),
    })
}

/// The code vector of a bag, computed in inference mode.
pub fn code_vector<T: Real>(params: &ModelParams<T>, enc: &EncodedExample) -> Result<Vec<T>, ModelError> {
    Ok(forward(params, enc, Phase::Infer, None)?.code_vector)
}

/// The `k` most likely tags, most likely first, ties by lower id. PAD is
/// never returned; `k` is clamped to the number of real tag ids.
pub fn predict_topk<T: Real>(
    params: &ModelParams<T>,
    enc: &EncodedExample,
    k: usize,
) -> Result<Vec<(u32, T)>, ModelError> {
    let trace = forward(params, enc, Phase::Infer, None)?;
    Ok(rank_distribution(&trace.q, k))
}

/// Tag ids ranked by probability, PAD excluded, ties by lower id.
pub fn rank_distribution<T: Real>(q: &[T], k: usize) -> Vec<(u32, T)> {
    let mut ranked: Vec<(u32, T)> = q
        .iter()
        .enumerate()
        .skip(PAD as usize + 1)
        .map(|(i, &p)| (i as u32, p))
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ContextIds;
    use crate::model::ModelDims;

    fn dims() -> ModelDims {
        ModelDims {
            d: 4,
            values: 5,
            paths: 4,
            tags: 3,
            k_max: 3,
        }
    }

    fn ids(s: u32, p: u32, t: u32) -> ContextIds {
        ContextIds {
            source: s,
            path: p,
            target: t,
        }
    }

    #[test]
    fn identical_contexts_split_attention_evenly() {
        let params = ModelParams::<f64>::init(dims(), AttentionVariant::Soft, 3).unwrap();
        let enc = EncodedExample::from_ids(2, vec![ids(2, 2, 3), ids(2, 2, 3)]);
        let trace = forward(&params, &enc, Phase::Infer, None).unwrap();
        assert_eq!(trace.attention.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn singleton_bag_is_the_combined_vector() {
        let enc = EncodedExample::from_ids(2, vec![ids(2, 3, 4)]);
        for variant in AttentionVariant::ALL {
            let params = ModelParams::<f64>::init(dims(), variant, 3).unwrap();
            let trace = forward(&params, &enc, Phase::Infer, None).unwrap();
            assert_eq!(trace.code_vector.as_slice(), trace.combined.row(0));
            assert!(trace.attention.as_slice().iter().all(|&a| a == 1.0));
        }
    }

    #[test]
    fn masked_and_mismatched_inputs() {
        let params = ModelParams::<f64>::init(dims(), AttentionVariant::Soft, 3).unwrap();
        let mut enc = EncodedExample::from_ids(2, vec![ids(2, 3, 4)]);
        enc.mask[0] = false;
        assert!(matches!(
            forward(&params, &enc, Phase::Infer, None),
            Err(ModelError::AllMasked)
        ));
        let enc = EncodedExample::from_ids(2, vec![ids(9, 3, 4)]);
        assert!(matches!(
            forward(&params, &enc, Phase::Infer, None),
            Err(ModelError::Mismatch(_))
        ));
    }

    #[test]
    fn topk_clamps_and_sums_to_one() {
        let params = ModelParams::<f64>::init(dims(), AttentionVariant::Soft, 3).unwrap();
        let enc = EncodedExample::from_ids(2, vec![ids(2, 3, 4), ids(1, 1, 1)]);
        let all = predict_topk(&params, &enc, 10).unwrap();
        assert_eq!(all.len(), 2);
        let total: f64 = all.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(all[0].1 >= all[1].1);
        assert!(predict_topk(&params, &enc, 0).unwrap().is_empty());
    }

    #[test]
    fn ties_rank_by_id() {
        let ranked = rank_distribution(&[0.0, 0.25, 0.5, 0.25], 3);
        assert_eq!(ranked, vec![(2, 0.5), (1, 0.25), (3, 0.25)]);
    }

    #[test]
    fn hard_picks_lowest_index_on_ties() {
        let params = ModelParams::<f64>::init(dims(), AttentionVariant::HardTrainHard, 3).unwrap();
        let enc = EncodedExample::from_ids(2, vec![ids(2, 3, 4), ids(2, 3, 4)]);
        let trace = forward(&params, &enc, Phase::Infer, None).unwrap();
        assert_eq!(trace.selected, Some(0));
    }
}
