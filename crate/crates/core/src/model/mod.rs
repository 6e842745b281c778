//! Learnable parameters and the forward pass: embedding lookup, the combining
//! layer, attention pooling into a code vector, and the softmax over tags.
//!
//! Everything is generic over [`Real`] so the same code runs in `f64` for
//! verification and `f32` for training throughput.

mod file;
mod forward;

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use file::{load_model, read_model, save_model, write_model, MAGIC};
pub use forward::{code_vector, forward, predict_topk, rank_distribution, Dropout, ForwardTrace, Phase, Weighting};

pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite constant")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("embedding size must be at least 1")]
    ZeroDim,
    #[error("{0} vocabulary is empty")]
    EmptyVocab(&'static str),
    #[error("k_max must be at least 1")]
    ZeroKMax,
    #[error("every slot of the input is masked")]
    AllMasked,
    #[error("input mismatch: {0}")]
    Mismatch(String),
    #[error("bad model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|v| U::of(v.to_f64().expect("finite")))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Attention pooling configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttentionVariant {
    /// Softmax of each combined vector against one attention vector.
    Soft,
    /// Plain mean of the combined vectors.
    NoAttention,
    /// One-hot on the best-scoring context, in training and prediction.
    HardTrainHard,
    /// Soft during training, hard at prediction.
    TrainSoftPredictHard,
    /// One attention vector per output element.
    ElementWise,
    /// Soft attention directly over the concatenated context vectors.
    SoftNoFC,
}

impl AttentionVariant {
    pub const ALL: [AttentionVariant; 6] = [
        AttentionVariant::Soft,
        AttentionVariant::NoAttention,
        AttentionVariant::HardTrainHard,
        AttentionVariant::TrainSoftPredictHard,
        AttentionVariant::ElementWise,
        AttentionVariant::SoftNoFC,
    ];

    /// Code stored in model files.
    pub fn code(self) -> u32 {
        match self {
            AttentionVariant::Soft => 0,
            AttentionVariant::NoAttention => 1,
            AttentionVariant::HardTrainHard => 2,
            AttentionVariant::TrainSoftPredictHard => 3,
            AttentionVariant::ElementWise => 4,
            AttentionVariant::SoftNoFC => 5,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            AttentionVariant::Soft => "soft",
            AttentionVariant::NoAttention => "none",
            AttentionVariant::HardTrainHard => "hard",
            AttentionVariant::TrainSoftPredictHard => "soft-hard",
            AttentionVariant::ElementWise => "elementwise",
            AttentionVariant::SoftNoFC => "nofc",
        }
    }

    pub fn has_fc(self) -> bool {
        self != AttentionVariant::SoftNoFC
    }
}

impl fmt::Display for AttentionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttentionVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown attention variant {s:?}"))
    }
}

/// Sizes of everything the parameters depend on. Vocabulary sizes include
/// the PAD and UNK rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub d: usize,
    pub values: usize,
    pub paths: usize,
    pub tags: usize,
    pub k_max: usize,
}

impl ModelDims {
    pub fn from_vocabs(vocabs: &crate::corpus::Vocabs, d: usize, k_max: usize) -> Self {
        Self {
            d,
            values: vocabs.values.len(),
            paths: vocabs.paths.len(),
            tags: vocabs.tags.len(),
            k_max,
        }
    }

    /// Width of a context vector.
    pub fn context_width(&self) -> usize {
        3 * self.d
    }

    /// Width of combined vectors, the code vector and tag embeddings.
    pub fn code_width(&self, variant: AttentionVariant) -> usize {
        if variant.has_fc() {
            self.d
        } else {
            3 * self.d
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.d == 0 {
            return Err(ModelError::ZeroDim);
        }
        if self.k_max == 0 {
            return Err(ModelError::ZeroKMax);
        }
        // PAD and UNK alone are enough to build a model
        for (name, size) in [("value", self.values), ("path", self.paths), ("tag", self.tags)] {
            if size < 2 {
                return Err(ModelError::EmptyVocab(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub dims: ModelDims,
    pub variant: AttentionVariant,
    /// |X| x d
    pub value_vocab: Matrix<T>,
    /// |P| x d
    pub path_vocab: Matrix<T>,
    /// d x 3d; empty for [`AttentionVariant::SoftNoFC`].
    pub w: Matrix<T>,
    /// One row per attention vector: 1 x w normally, d x d element-wise.
    pub attention: Matrix<T>,
    /// |Y| x w
    pub tags_vocab: Matrix<T>,
}

impl<T: Real> ModelParams<T> {
    /// All-zero parameters of the right shapes.
    pub fn zeros(dims: ModelDims, variant: AttentionVariant) -> Result<Self, ModelError> {
        dims.validate()?;
        let d = dims.d;
        let width = dims.code_width(variant);
        let w = if variant.has_fc() {
            Matrix::zeros(d, 3 * d)
        } else {
            Matrix::zeros(0, 0)
        };
        let attention = match variant {
            AttentionVariant::ElementWise => Matrix::zeros(d, d),
            _ => Matrix::zeros(1, width),
        };
        Ok(Self {
            dims,
            variant,
            value_vocab: Matrix::zeros(dims.values, d),
            path_vocab: Matrix::zeros(dims.paths, d),
            w,
            attention,
            tags_vocab: Matrix::zeros(dims.tags, width),
        })
    }

    /// Glorot-uniform initialization, each matrix bounded by
    /// `sqrt(6 / (rows + cols))`; PAD rows stay zero.
    pub fn init(dims: ModelDims, variant: AttentionVariant, seed: u64) -> Result<Self, ModelError> {
        let mut params = Self::zeros(dims, variant)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for m in params.matrices_mut() {
            if m.data.is_empty() {
                continue;
            }
            let bound = (6.0 / (m.rows + m.cols) as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            for v in m.data.iter_mut() {
                *v = T::of(dist.sample(&mut rng));
            }
        }
        params.value_vocab.row_mut(0).fill(T::zero());
        params.path_vocab.row_mut(0).fill(T::zero());
        params.tags_vocab.row_mut(0).fill(T::zero());
        Ok(params)
    }

    /// Matrices in declaration order (the model-file order).
    pub fn matrices(&self) -> [&Matrix<T>; 5] {
        [
            &self.value_vocab,
            &self.path_vocab,
            &self.w,
            &self.attention,
            &self.tags_vocab,
        ]
    }

    pub fn matrices_mut(&mut self) -> [&mut Matrix<T>; 5] {
        [
            &mut self.value_vocab,
            &mut self.path_vocab,
            &mut self.w,
            &mut self.attention,
            &mut self.tags_vocab,
        ]
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            dims: self.dims,
            variant: self.variant,
            value_vocab: self.value_vocab.cast(),
            path_vocab: self.path_vocab.cast(),
            w: self.w.cast(),
            attention: self.attention.cast(),
            tags_vocab: self.tags_vocab.cast(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.matrices().iter().all(|m| m.is_finite())
    }

    pub fn code_width(&self) -> usize {
        self.dims.code_width(self.variant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> ModelDims {
        ModelDims {
            d: 8,
            values: 10,
            paths: 7,
            tags: 5,
            k_max: 4,
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = ModelParams::<f64>::init(dims(), AttentionVariant::Soft, 7).unwrap();
        let b = ModelParams::<f64>::init(dims(), AttentionVariant::Soft, 7).unwrap();
        let c = ModelParams::<f64>::init(dims(), AttentionVariant::Soft, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn glorot_bounds_and_pad_rows() {
        let p = ModelParams::<f64>::init(dims(), AttentionVariant::Soft, 1).unwrap();
        // sqrt(6 / (8 + 24)) = 0.4330127...
        let bound = (6.0f64 / 32.0).sqrt();
        assert!((bound - 0.433_012_701_892_219_3).abs() < 1e-15);
        assert!(p.w.as_slice().iter().all(|v| v.abs() <= bound));
        assert!(p.w.as_slice().iter().any(|v| v.abs() > bound * 0.5));
        assert!(p.value_vocab.row(0).iter().all(|&v| v == 0.0));
        assert!(p.path_vocab.row(0).iter().all(|&v| v == 0.0));
        assert!(p.tags_vocab.row(0).iter().all(|&v| v == 0.0));
        assert!(p.value_vocab.row(1).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn variant_shapes() {
        let nofc = ModelParams::<f64>::init(dims(), AttentionVariant::SoftNoFC, 1).unwrap();
        assert_eq!((nofc.w.rows(), nofc.w.cols()), (0, 0));
        assert_eq!(nofc.attention.cols(), 24);
        assert_eq!(nofc.tags_vocab.cols(), 24);
        let ew = ModelParams::<f64>::init(dims(), AttentionVariant::ElementWise, 1).unwrap();
        assert_eq!((ew.attention.rows(), ew.attention.cols()), (8, 8));
    }

    #[test]
    fn rejects_degenerate_dims() {
        let mut bad = dims();
        bad.d = 0;
        assert!(matches!(
            ModelParams::<f64>::init(bad, AttentionVariant::Soft, 0),
            Err(ModelError::ZeroDim)
        ));
        let mut bad = dims();
        bad.tags = 0;
        assert!(matches!(
            ModelParams::<f64>::init(bad, AttentionVariant::Soft, 0),
            Err(ModelError::EmptyVocab("tag"))
        ));
    }

    #[test]
    fn variant_codes_and_names() {
        for v in AttentionVariant::ALL {
            assert_eq!(AttentionVariant::from_code(v.code()), Some(v));
            assert_eq!(v.name().parse::<AttentionVariant>().unwrap(), v);
        }
        assert!("bogus".parse::<AttentionVariant>().is_err());
    }
}
