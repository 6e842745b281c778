//! Cross-entropy loss, reverse-mode gradients, Adam and the epoch loop.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{derive_seed, AblationMask, EncodedExample, IndexedExample, RawExample, Vocabs, PAD, UNK};
use crate::metrics::{evaluate, Averaging, EvalError, EvalOptions, Metrics};
use crate::model::{
    forward, AttentionVariant, Dropout, ForwardTrace, Matrix, ModelDims, ModelError, ModelParams, Phase, Real,
    Weighting,
};

/// Examples per parallel work unit. Fixed so that the summation order, and
/// therefore the result, does not depend on the thread count.
const CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub dropout: f64,
    pub k_max: usize,
    pub dim: usize,
    pub seed: u64,
    pub variant: AttentionVariant,
    pub ablation: AblationMask,
    /// Rescale the batch gradient to at most this global L2 norm.
    pub clip_norm: Option<f64>,
    /// Keep the first epoch's context samples instead of resampling.
    pub freeze_samples: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 32,
            max_epochs: 20,
            patience: 3,
            dropout: 0.25,
            k_max: 200,
            dim: 128,
            seed: 0,
            variant: AttentionVariant::Soft,
            ablation: AblationMask::FULL,
            clip_norm: None,
            freeze_samples: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::InvalidConfig(msg.to_string()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must be in [0, 1)");
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return bad("Adam epsilon must be positive");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.max_epochs == 0 {
            return bad("max epochs must be at least 1");
        }
        if self.k_max == 0 {
            return bad("k_max must be at least 1");
        }
        if self.dim == 0 {
            return bad("dimension must be at least 1");
        }
        if matches!(self.clip_norm, Some(c) if c.is_nan() || c <= 0.0) {
            return bad("clip norm must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("no training example has any path-context")]
    NoTrainableExamples,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite {what} in epoch {epoch}, batch {batch}")]
    NonFinite {
        what: &'static str,
        epoch: usize,
        batch: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Gradient of the loss for every parameter. Embedding gradients keep only
/// the rows that were touched; the PAD row never receives one.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    d: usize,
    pub value_rows: BTreeMap<u32, Vec<T>>,
    pub path_rows: BTreeMap<u32, Vec<T>>,
    pub w: Matrix<T>,
    pub attention: Matrix<T>,
    pub tags_vocab: Matrix<T>,
}

fn add_scaled<T: Real>(dst: &mut [T], src: &[T], scale: T) {
    for (x, &y) in dst.iter_mut().zip(src) {
        *x = *x + scale * y;
    }
}

fn add_row<T: Real>(rows: &mut BTreeMap<u32, Vec<T>>, id: u32, d: usize, grad: &[T]) {
    if id == PAD {
        return;
    }
    let row = rows.entry(id).or_insert_with(|| vec![T::zero(); d]);
    add_scaled(row, grad, T::one());
}

impl<T: Real> Gradients<T> {
    pub fn zeros(params: &ModelParams<T>) -> Self {
        Self {
            d: params.dims.d,
            value_rows: BTreeMap::new(),
            path_rows: BTreeMap::new(),
            w: Matrix::zeros(params.w.rows(), params.w.cols()),
            attention: Matrix::zeros(params.attention.rows(), params.attention.cols()),
            tags_vocab: Matrix::zeros(params.tags_vocab.rows(), params.tags_vocab.cols()),
        }
    }

    pub fn value_row(&self, id: u32) -> Option<&[T]> {
        self.value_rows.get(&id).map(Vec::as_slice)
    }

    pub fn path_row(&self, id: u32) -> Option<&[T]> {
        self.path_rows.get(&id).map(Vec::as_slice)
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (&id, row) in &other.value_rows {
            add_row(&mut self.value_rows, id, self.d, row);
        }
        for (&id, row) in &other.path_rows {
            add_row(&mut self.path_rows, id, self.d, row);
        }
        add_scaled(self.w.as_mut_slice(), other.w.as_slice(), T::one());
        add_scaled(self.attention.as_mut_slice(), other.attention.as_slice(), T::one());
        add_scaled(self.tags_vocab.as_mut_slice(), other.tags_vocab.as_slice(), T::one());
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.value_rows
            .values_mut()
            .chain(self.path_rows.values_mut())
            .flat_map(|r| r.iter_mut())
            .chain(self.w.as_mut_slice().iter_mut())
            .chain(self.attention.as_mut_slice().iter_mut())
            .chain(self.tags_vocab.as_mut_slice().iter_mut())
    }

    pub fn scale(&mut self, factor: T) {
        for v in self.values_mut() {
            *v = *v * factor;
        }
    }

    pub fn norm(&self) -> T {
        let sparse = self
            .value_rows
            .values()
            .chain(self.path_rows.values())
            .flat_map(|r| r.iter());
        let dense = self
            .w
            .as_slice()
            .iter()
            .chain(self.attention.as_slice())
            .chain(self.tags_vocab.as_slice());
        sparse
            .chain(dense)
            .fold(T::zero(), |acc, &v| acc + v * v)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.norm().is_finite()
    }
}

/// Negative log-likelihood of the true tag.
pub fn loss<T: Real>(trace: &ForwardTrace<T>, label_id: u32) -> T {
    trace.loss(label_id)
}

/// Adds the gradient of `-log q(label_id)` for one example to `grads`.
/// `trace` must come from [`forward`] on the same parameters and input.
pub fn backward_into<T: Real>(
    params: &ModelParams<T>,
    enc: &EncodedExample,
    trace: &ForwardTrace<T>,
    label_id: u32,
    grads: &mut Gradients<T>,
) -> Result<(), ModelError> {
    let d = params.dims.d;
    let width = params.code_width();
    let tags = params.dims.tags;
    let n = trace.slots.len();
    if label_id == PAD || label_id as usize >= tags {
        return Err(ModelError::Mismatch(format!("label id {label_id} is not a tag")));
    }
    if trace.combined.rows() != n
        || trace.combined.cols() != width
        || trace.q.len() != tags
        || trace.slots.iter().any(|&s| s >= enc.contexts.len() || !enc.mask[s])
        || grads.tags_vocab.rows() != tags
    {
        return Err(ModelError::Mismatch("trace does not belong to these parameters and input".into()));
    }

    let v = &trace.code_vector;
    let mut dv = vec![T::zero(); width];
    for y in (PAD as usize + 1)..tags {
        let target = if y == label_id as usize { T::one() } else { T::zero() };
        let dz = trace.q[y] - target;
        add_scaled(grads.tags_vocab.row_mut(y), v, dz);
        add_scaled(&mut dv, params.tags_vocab.row(y), dz);
    }

    let h = &trace.combined;
    let mut dh = Matrix::zeros(n, width);
    match trace.weighting {
        Weighting::Uniform => {
            for i in 0..n {
                add_scaled(dh.row_mut(i), &dv, trace.attention.get(i, 0));
            }
        }
        Weighting::Argmax => {
            // straight-through: only the chosen context gets a gradient
            let sel = trace
                .selected
                .ok_or_else(|| ModelError::Mismatch("hard trace without a selection".into()))?;
            dh.row_mut(sel).copy_from_slice(&dv);
        }
        Weighting::Softmax => {
            let alpha = trace.attention.as_slice();
            let dalpha: Vec<T> = (0..n).map(|i| crate::model::dot(h.row(i), &dv)).collect();
            let mean = alpha
                .iter()
                .zip(&dalpha)
                .fold(T::zero(), |acc, (&a, &g)| acc + a * g);
            let a = params.attention.row(0);
            for i in 0..n {
                let ds = alpha[i] * (dalpha[i] - mean);
                let row = dh.row_mut(i);
                add_scaled(row, &dv, alpha[i]);
                add_scaled(row, a, ds);
                add_scaled(grads.attention.row_mut(0), h.row(i), ds);
            }
        }
        Weighting::PerElement => {
            let alpha = &trace.attention;
            let mut mean = vec![T::zero(); d];
            for i in 0..n {
                for j in 0..d {
                    mean[j] = mean[j] + alpha.get(i, j) * dv[j] * h.get(i, j);
                }
            }
            for i in 0..n {
                for j in 0..d {
                    let a_ij = alpha.get(i, j);
                    let ds = a_ij * (dv[j] * h.get(i, j) - mean[j]);
                    let row = dh.row_mut(i);
                    row[j] = row[j] + a_ij * dv[j];
                    add_scaled(row, params.attention.row(j), ds);
                    add_scaled(grads.attention.row_mut(j), h.row(i), ds);
                }
            }
        }
    }

    let mut dc = vec![T::zero(); 3 * d];
    for i in 0..n {
        if params.variant.has_fc() {
            dc.fill(T::zero());
            let c = trace.contexts.row(i);
            for r in 0..d {
                let hr = h.get(i, r);
                let du = dh.get(i, r) * (T::one() - hr * hr);
                add_scaled(grads.w.row_mut(r), c, du);
                add_scaled(&mut dc, params.w.row(r), du);
            }
        } else {
            dc.copy_from_slice(dh.row(i));
        }
        if let Some(scale) = &trace.dropout {
            for (g, &s) in dc.iter_mut().zip(scale.row(i)) {
                *g = *g * s;
            }
        }
        let ids = enc.contexts[trace.slots[i]];
        add_row(&mut grads.value_rows, ids.source, d, &dc[..d]);
        add_row(&mut grads.path_rows, ids.path, d, &dc[d..2 * d]);
        add_row(&mut grads.value_rows, ids.target, d, &dc[2 * d..]);
    }
    Ok(())
}

pub fn backward<T: Real>(
    params: &ModelParams<T>,
    enc: &EncodedExample,
    trace: &ForwardTrace<T>,
    label_id: u32,
) -> Result<Gradients<T>, ModelError> {
    let mut grads = Gradients::zeros(params);
    backward_into(params, enc, trace, label_id, &mut grads)?;
    Ok(grads)
}

/// One example of a batch with its dropout mask, if any.
#[derive(Debug, Clone)]
pub struct BatchItem<'a, T> {
    pub example: &'a EncodedExample,
    pub dropout: Option<Dropout<T>>,
}

fn accumulate<T: Real>(
    params: &ModelParams<T>,
    item: &BatchItem<'_, T>,
    grads: &mut Gradients<T>,
) -> Result<T, ModelError> {
    let trace = forward(params, item.example, Phase::Train, item.dropout.as_ref())?;
    backward_into(params, item.example, &trace, item.example.label_id, grads)?;
    Ok(trace.loss(item.example.label_id))
}

/// Loss and gradient of one example in training mode.
pub fn example_gradients<T: Real>(
    params: &ModelParams<T>,
    example: &EncodedExample,
    dropout: Option<&Dropout<T>>,
) -> Result<(Gradients<T>, T), ModelError> {
    let mut grads = Gradients::zeros(params);
    let item = BatchItem {
        example,
        dropout: dropout.cloned(),
    };
    let loss = accumulate(params, &item, &mut grads)?;
    Ok((grads, loss))
}

/// Summed loss and summed gradient over a batch, computed in parallel.
pub fn batch_gradients<T: Real>(
    params: &ModelParams<T>,
    batch: &[BatchItem<'_, T>],
) -> Result<(Gradients<T>, T), ModelError> {
    let parts: Vec<(Gradients<T>, T)> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut grads = Gradients::zeros(params);
            let mut loss = T::zero();
            for item in chunk {
                loss = loss + accumulate(params, item, &mut grads)?;
            }
            Ok((grads, loss))
        })
        .collect::<Result<_, ModelError>>()?;
    let mut parts = parts.into_iter();
    let (mut total, mut loss) = parts.next().unwrap_or_else(|| (Gradients::zeros(params), T::zero()));
    for (g, l) in parts {
        total.add_assign(&g);
        loss = loss + l;
    }
    Ok((total, loss))
}

/// Adam moments for every parameter matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    pub m: [Matrix<T>; 5],
    pub v: [Matrix<T>; 5],
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        let zeros = || params.matrices().map(|m| Matrix::zeros(m.rows(), m.cols()));
        Self {
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }
}

/// One Adam update. The PAD rows of the embedding and tag matrices are
/// never touched.
pub fn adam_step<T: Real>(
    params: &mut ModelParams<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
    config: &TrainConfig,
) {
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (T::of(config.beta1), T::of(config.beta2));
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    let lr = T::of(config.lr);
    let eps = T::of(config.eps);
    let one = T::one();

    let update = |p: &mut [T], m: &mut [T], v: &mut [T], g: Option<&[T]>| {
        for j in 0..p.len() {
            let gj = g.map_or(T::zero(), |g| g[j]);
            m[j] = b1 * m[j] + (one - b1) * gj;
            v[j] = b2 * v[j] + (one - b2) * gj * gj;
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            p[j] = p[j] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    };

    let [mv, mp, mw, ma, mt] = &mut state.m;
    let [vv, vp, vw, va, vt] = &mut state.v;
    for r in 1..params.value_vocab.rows() {
        update(
            params.value_vocab.row_mut(r),
            mv.row_mut(r),
            vv.row_mut(r),
            grads.value_row(r as u32),
        );
    }
    for r in 1..params.path_vocab.rows() {
        update(
            params.path_vocab.row_mut(r),
            mp.row_mut(r),
            vp.row_mut(r),
            grads.path_row(r as u32),
        );
    }
    update(params.w.as_mut_slice(), mw.as_mut_slice(), vw.as_mut_slice(), Some(grads.w.as_slice()));
    update(
        params.attention.as_mut_slice(),
        ma.as_mut_slice(),
        va.as_mut_slice(),
        Some(grads.attention.as_slice()),
    );
    for r in 1..params.tags_vocab.rows() {
        update(
            params.tags_vocab.row_mut(r),
            mt.row_mut(r),
            vt.row_mut(r),
            Some(grads.tags_vocab.row(r)),
        );
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch.
    pub loss: f64,
    pub validation: Metrics,
}

impl fmt::Display for EpochRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epoch={} loss={:.6} val_p={:.4} val_r={:.4} val_f1={:.4}",
            self.epoch, self.loss, self.validation.precision, self.validation.recall, self.validation.f1
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Parameters from the epoch with the best validation F1.
    pub params: ModelParams<T>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    /// Fraction of training examples whose label is outside the tag vocabulary.
    pub oov_label_fraction: f64,
    /// Training examples skipped because they have no path-context.
    pub skipped: usize,
}

pub fn train<T: Real>(
    train_set: &[RawExample],
    validation: &[RawExample],
    vocabs: &Vocabs,
    config: &TrainConfig,
) -> Result<TrainOutcome<T>, TrainError> {
    train_with(train_set, validation, vocabs, config, |_, _| Ok(()))
}

/// Like [`train`], calling `on_epoch` after every epoch with its record and
/// the current parameters. An empty validation set means the training set
/// is used for early stopping.
pub fn train_with<T, F>(
    train_set: &[RawExample],
    validation: &[RawExample],
    vocabs: &Vocabs,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome<T>, TrainError>
where
    T: Real,
    F: FnMut(&EpochRecord, &ModelParams<T>) -> Result<(), TrainError>,
{
    config.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }
    let validation = if validation.is_empty() { train_set } else { validation };

    let indexed: Vec<IndexedExample> = train_set
        .iter()
        .map(|raw| IndexedExample::new(raw, vocabs, config.ablation))
        .collect();
    let usable: Vec<usize> = (0..indexed.len())
        .filter(|&i| !indexed[i].contexts.is_empty())
        .collect();
    if usable.is_empty() {
        return Err(TrainError::NoTrainableExamples);
    }
    let oov = indexed.iter().filter(|e| e.label_id == UNK).count();

    let dims = ModelDims::from_vocabs(vocabs, config.dim, config.k_max);
    let mut params = ModelParams::<T>::init(dims, config.variant, config.seed)?;
    let mut state = AdamState::new(&params);
    let eval_options = EvalOptions {
        ablation: config.ablation,
        seed: config.seed,
        averaging: Averaging::Micro,
    };
    let dropout_stream = derive_seed(config.seed, u64::MAX, 0);
    let width = dims.context_width();

    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ModelParams<T>)> = None;
    let mut stale = 0;
    let mut encoded: Vec<Option<EncodedExample>> = vec![None; indexed.len()];

    for epoch in 1..=config.max_epochs {
        let pass = if config.freeze_samples { 0 } else { epoch as u64 };
        if pass != 0 || epoch == 1 {
            encoded
                .par_iter_mut()
                .enumerate()
                .filter(|(i, _)| !indexed[*i].contexts.is_empty())
                .for_each(|(i, slot)| {
                    *slot = Some(indexed[i].encode(config.k_max, Some(derive_seed(config.seed, pass, i as u64))));
                });
        }

        let mut order = usable.clone();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(config.seed, epoch as u64, u64::MAX)));

        let mut loss_sum = 0.0;
        for (b, batch_ids) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<BatchItem<'_, T>> = batch_ids
                .iter()
                .map(|&i| {
                    let example = encoded[i].as_ref().expect("encoded");
                    let dropout = (config.dropout > 0.0).then(|| {
                        let mut rng =
                            ChaCha8Rng::seed_from_u64(derive_seed(dropout_stream, epoch as u64, i as u64));
                        Dropout::sample(example.valid_slots().count(), width, config.dropout, &mut rng)
                    });
                    BatchItem { example, dropout }
                })
                .collect();
            let (mut grads, batch_loss) = batch_gradients(&params, &batch)?;
            let batch_loss = batch_loss.to_f64().unwrap_or(f64::NAN);
            if !batch_loss.is_finite() {
                return Err(TrainError::NonFinite {
                    what: "loss",
                    epoch,
                    batch: b,
                });
            }
            loss_sum += batch_loss;
            grads.scale(T::one() / T::of(batch.len() as f64));
            if let Some(max) = config.clip_norm {
                let norm = grads.norm();
                if norm > T::of(max) {
                    grads.scale(T::of(max) / norm);
                }
            }
            adam_step(&mut params, &grads, &mut state, config);
            if !params.is_finite() {
                return Err(TrainError::NonFinite {
                    what: "parameter",
                    epoch,
                    batch: b,
                });
            }
        }

        let metrics = evaluate(&params, validation, vocabs, &eval_options)?.metrics;
        let record = EpochRecord {
            epoch,
            loss: loss_sum / usable.len() as f64,
            validation: metrics,
        };
        on_epoch(&record, &params)?;
        history.push(record);

        let improved = best.as_ref().is_none_or(|(f1, _, _)| metrics.f1 > *f1);
        if improved {
            best = Some((metrics.f1, epoch, params.clone()));
            stale = 0;
        } else {
            stale += 1;
        }
        // a perfect score cannot be beaten, so the best checkpoint is final
        if stale >= config.patience || metrics.f1 >= 1.0 {
            break;
        }
    }

    let (_, best_epoch, params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        params,
        history,
        best_epoch,
        oov_label_fraction: oov as f64 / train_set.len() as f64,
        skipped: train_set.len() - usable.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ContextIds;

    fn params(variant: AttentionVariant) -> ModelParams<f64> {
        let dims = ModelDims {
            d: 3,
            values: 5,
            paths: 4,
            tags: 4,
            k_max: 4,
        };
        ModelParams::init(dims, variant, 11).unwrap()
    }

    fn example() -> EncodedExample {
        let ids = |s, p, t| ContextIds {
            source: s,
            path: p,
            target: t,
        };
        EncodedExample::from_ids(2, vec![ids(2, 3, 4), ids(3, 2, 3), ids(1, 1, 2)])
    }

    #[test]
    fn uniform_loss_is_log_of_tag_count() {
        let mut p = params(AttentionVariant::Soft);
        p.tags_vocab.as_mut_slice().fill(0.0);
        let trace = forward(&p, &example(), Phase::Train, None).unwrap();
        assert!((loss(&trace, 2) - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn first_adam_step_is_signed_lr() {
        let mut p = params(AttentionVariant::Soft);
        let before = p.clone();
        let (grads, _) = example_gradients(&p, &example(), None).unwrap();
        let mut state = AdamState::new(&p);
        let config = TrainConfig::default();
        adam_step(&mut p, &grads, &mut state, &config);
        for (j, (&new, &old)) in p.w.as_slice().iter().zip(before.w.as_slice()).enumerate() {
            let g = grads.w.as_slice()[j];
            let expected = old - config.lr * g / (g.abs() + config.eps);
            assert!((new - expected).abs() < 1e-15);
        }
        assert_eq!(p.value_vocab.row(0), before.value_vocab.row(0));
        assert_eq!(p.tags_vocab.row(0), before.tags_vocab.row(0));
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = params(AttentionVariant::Soft);
        let before = p.clone();
        let grads = Gradients::zeros(&p);
        adam_step(&mut p, &grads, &mut AdamState::new(&before), &TrainConfig::default());
        assert_eq!(p, before);
    }

    #[test]
    fn untouched_rows_have_no_gradient() {
        let p = params(AttentionVariant::Soft);
        let (grads, _) = example_gradients(&p, &example(), None).unwrap();
        assert!(grads.value_row(0).is_none());
        assert!(grads.path_row(0).is_none());
        assert!(grads.value_row(1).is_some());
        assert!(grads.tags_vocab.row(0).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = [
            TrainConfig {
                lr: 0.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                dropout: 1.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                patience: 0,
                ..TrainConfig::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(TrainError::InvalidConfig(_))));
        }
    }

    #[test]
    fn log_line_format() {
        let record = EpochRecord {
            epoch: 3,
            loss: 0.5,
            validation: Metrics {
                precision: 0.25,
                recall: 0.5,
                f1: 1.0 / 3.0,
                exact_match: 0.0,
                n: 4,
            },
        };
        assert_eq!(
            record.to_string(),
            "epoch=3 loss=0.500000 val_p=0.2500 val_r=0.5000 val_f1=0.3333"
        );
    }
}
