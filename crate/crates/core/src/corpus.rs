//! Vocabularies, the line-based dataset format, and encoding of examples into
//! fixed-size index form.
//!
//! Dataset lines are `<label> <src>,<path>,<dst> ...`; vocab files are
//! `<kind>\t<entry>\t<count>` lines. Index 0 is PAD and index 1 is UNK in every
//! vocabulary; neither is written to vocab files.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::paths::{AstPath, PathContext};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const PAD_TOKEN: &str = "<PAD>";
pub const UNK_TOKEN: &str = "<UNK>";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("cutoffs must be at least 1")]
    BadCutoff,
    #[error("k_max must be at least 1")]
    BadKMax,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Splits an identifier into lowercase sub-tokens at camelCase and
/// letter/digit boundaries and at `_` and `$`.
pub fn split_subtokens(name: &str) -> Vec<String> {
    let chars: Vec<char> = name.chars().collect();
    let mut out = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c == '_' || c == '$' || !c.is_alphanumeric() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            continue;
        }
        if let Some(&prev) = i.checked_sub(1).map(|p| &chars[p]) {
            let next = chars.get(i + 1).copied();
            let boundary = (prev.is_lowercase() && c.is_uppercase())
                || (prev.is_alphabetic() && c.is_numeric())
                || (prev.is_numeric() && c.is_alphabetic())
                // end of an acronym: "HTTPServer" splits before "Server"
                || (prev.is_uppercase()
                    && c.is_uppercase()
                    && next.is_some_and(|n| n.is_lowercase()));
            if boundary && !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        }
        current.extend(c.to_lowercase());
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// One frequency-ranked index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    entries: Vec<(String, u64)>,
    index: HashMap<String, u32>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::from_ranked(Vec::new())
    }
}

impl Vocab {
    /// `ranked` holds real entries in id order, starting at id 2.
    fn from_ranked(ranked: Vec<(String, u64)>) -> Self {
        let mut entries = vec![(PAD_TOKEN.to_string(), 0), (UNK_TOKEN.to_string(), 0)];
        entries.extend(ranked);
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (e, _))| (e.clone(), i as u32))
            .collect();
        Self { entries, index }
    }

    /// Keeps the `limit` most frequent entries; ties go to the
    /// lexicographically smaller entry.
    pub fn from_counts(counts: HashMap<String, u64>, limit: usize) -> Self {
        let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(limit);
        Self::from_ranked(ranked)
    }

    /// Including PAD and UNK.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.len() <= 2
    }

    pub fn id(&self, entry: &str) -> Option<u32> {
        match self.index.get(entry) {
            Some(&id) if id > UNK => Some(id),
            _ => None,
        }
    }

    pub fn id_or_unk(&self, entry: &str) -> u32 {
        self.id(entry).unwrap_or(UNK)
    }

    pub fn entry(&self, id: u32) -> Option<&str> {
        self.entries.get(id as usize).map(|(e, _)| e.as_str())
    }

    pub fn count(&self, id: u32) -> Option<u64> {
        self.entries.get(id as usize).map(|(_, c)| *c)
    }

    /// Real entries with their ids, in id order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &str, u64)> {
        self.entries
            .iter()
            .enumerate()
            .skip(2)
            .map(|(i, (e, c))| (i as u32, e.as_str(), *c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VocabCutoffs {
    pub max_values: usize,
    pub max_paths: usize,
    pub max_tags: usize,
}

impl Default for VocabCutoffs {
    fn default() -> Self {
        Self {
            max_values: 50_000,
            max_paths: 50_000,
            max_tags: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabs {
    pub values: Vocab,
    pub paths: Vocab,
    pub tags: Vocab,
}

impl Vocabs {
    pub fn build<'a, I>(examples: I, cutoffs: &VocabCutoffs) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = &'a RawExample>,
    {
        if cutoffs.max_values == 0 || cutoffs.max_paths == 0 || cutoffs.max_tags == 0 {
            return Err(CorpusError::BadCutoff);
        }
        let mut values: HashMap<String, u64> = HashMap::new();
        let mut paths: HashMap<String, u64> = HashMap::new();
        let mut tags: HashMap<String, u64> = HashMap::new();
        let mut seen = 0usize;
        for ex in examples {
            seen += 1;
            *tags.entry(ex.label.clone()).or_default() += 1;
            for ctx in &ex.contexts {
                *values.entry(ctx.source.clone()).or_default() += 1;
                *values.entry(ctx.target.clone()).or_default() += 1;
                *paths.entry(ctx.path.to_string()).or_default() += 1;
            }
        }
        if seen == 0 {
            return Err(CorpusError::EmptyDataset);
        }
        Ok(Self {
            values: Vocab::from_counts(values, cutoffs.max_values),
            paths: Vocab::from_counts(paths, cutoffs.max_paths),
            tags: Vocab::from_counts(tags, cutoffs.max_tags),
        })
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (kind, vocab) in [("value", &self.values), ("path", &self.paths), ("tag", &self.tags)] {
            for (_, entry, count) in vocab.iter() {
                writeln!(out, "{kind}\t{entry}\t{count}")?;
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("vocab entries are UTF-8")
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self, CorpusError> {
        let mut ranked: [Vec<(String, u64)>; 3] = Default::default();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let malformed = |message: &str| CorpusError::Malformed {
                line: n + 1,
                message: message.to_string(),
            };
            let mut fields = line.split('\t');
            let (Some(kind), Some(entry), Some(count), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(malformed("expected <kind>\\t<entry>\\t<count>"));
            };
            let slot = match kind {
                "value" => 0,
                "path" => 1,
                "tag" => 2,
                _ => return Err(malformed("unknown vocab kind")),
            };
            if entry.is_empty() || entry == PAD_TOKEN || entry == UNK_TOKEN {
                return Err(malformed("empty or reserved entry"));
            }
            let count: u64 = count.parse().map_err(|_| malformed("bad count"))?;
            ranked[slot].push((entry.to_string(), count));
        }
        let [values, paths, tags] = ranked;
        Ok(Self {
            values: Vocab::from_ranked(values),
            paths: Vocab::from_ranked(paths),
            tags: Vocab::from_ranked(tags),
        })
    }

    pub fn from_text(text: &str) -> Result<Self, CorpusError> {
        Self::read(text.as_bytes())
    }
}

/// A labeled bag of path-contexts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawExample {
    pub label: String,
    pub contexts: Vec<PathContext>,
}

impl fmt::Display for RawExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)?;
        for ctx in &self.contexts {
            write!(f, " {ctx}")?;
        }
        Ok(())
    }
}

fn valid_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c == ',' || c.is_whitespace())
}

/// Parses one dataset line; `line_no` is only used in errors.
pub fn parse_example(line: &str, line_no: usize) -> Result<RawExample, CorpusError> {
    let malformed = |message: String| CorpusError::Malformed {
        line: line_no,
        message,
    };
    let mut fields = line.split(' ');
    let label = fields.next().unwrap_or_default();
    if !valid_token(label) {
        return Err(malformed("empty or invalid label".into()));
    }
    let mut contexts = Vec::new();
    for field in fields {
        let parts: Vec<&str> = field.split(',').collect();
        if parts.len() != 3 {
            return Err(malformed(format!(
                "context {field:?} has {} fields, expected 3",
                parts.len()
            )));
        }
        if parts.iter().any(|p| p.is_empty()) {
            return Err(malformed(format!("context {field:?} has an empty field")));
        }
        let path = AstPath::from_str(parts[1]).map_err(|e| malformed(format!("{e}")))?;
        contexts.push(PathContext {
            source: parts[0].to_string(),
            path,
            target: parts[2].to_string(),
        });
    }
    Ok(RawExample {
        label: label.to_string(),
        contexts,
    })
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Vec<RawExample>, CorpusError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        out.push(parse_example(&line, n + 1)?);
    }
    Ok(out)
}

/// Fails if a label or value would break the line format.
pub fn write_dataset<'a, W, I>(mut out: W, examples: I) -> Result<(), CorpusError>
where
    W: Write,
    I: IntoIterator<Item = &'a RawExample>,
{
    for (n, ex) in examples.into_iter().enumerate() {
        let bad = !valid_token(&ex.label)
            || ex
                .contexts
                .iter()
                .any(|c| !valid_token(&c.source) || !valid_token(&c.target));
        if bad {
            return Err(CorpusError::Malformed {
                line: n + 1,
                message: "label or value contains a separator".into(),
            });
        }
        writeln!(out, "{ex}")?;
    }
    Ok(())
}

/// Which path-context components are replaced by UNK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AblationMask {
    pub hide_source: bool,
    pub hide_path: bool,
    pub hide_target: bool,
}

impl AblationMask {
    pub const FULL: Self = Self::new(false, false, false);
    pub const ONLY_VALUES: Self = Self::new(false, true, false);
    pub const NO_VALUES: Self = Self::new(true, false, true);
    pub const VALUE_PATH: Self = Self::new(false, false, true);
    pub const ONE_VALUE: Self = Self::new(false, true, true);

    pub const fn new(hide_source: bool, hide_path: bool, hide_target: bool) -> Self {
        Self {
            hide_source,
            hide_path,
            hide_target,
        }
    }

    pub fn name(&self) -> Option<&'static str> {
        [
            ("full", Self::FULL),
            ("only-values", Self::ONLY_VALUES),
            ("no-values", Self::NO_VALUES),
            ("value-path", Self::VALUE_PATH),
            ("one-value", Self::ONE_VALUE),
        ]
        .into_iter()
        .find(|(_, m)| m == self)
        .map(|(n, _)| n)
    }

    pub fn apply(&self, ids: ContextIds) -> ContextIds {
        ContextIds {
            source: if self.hide_source { UNK } else { ids.source },
            path: if self.hide_path { UNK } else { ids.path },
            target: if self.hide_target { UNK } else { ids.target },
        }
    }
}

impl FromStr for AblationMask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Self::FULL),
            "only-values" => Ok(Self::ONLY_VALUES),
            "no-values" => Ok(Self::NO_VALUES),
            "value-path" => Ok(Self::VALUE_PATH),
            "one-value" => Ok(Self::ONE_VALUE),
            other => Err(format!("unknown ablation {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContextIds {
    pub source: u32,
    pub path: u32,
    pub target: u32,
}

impl ContextIds {
    pub const PADDING: Self = Self {
        source: PAD,
        path: PAD,
        target: PAD,
    };
}

/// An example mapped to vocabulary ids, before sampling and padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedExample {
    pub label_id: u32,
    pub contexts: Vec<ContextIds>,
}

impl IndexedExample {
    pub fn new(raw: &RawExample, vocabs: &Vocabs, ablation: AblationMask) -> Self {
        let contexts = raw
            .contexts
            .iter()
            .map(|c| {
                ablation.apply(ContextIds {
                    source: vocabs.values.id_or_unk(&c.source),
                    path: vocabs.paths.id_or_unk(&c.path.to_string()),
                    target: vocabs.values.id_or_unk(&c.target),
                })
            })
            .collect();
        Self {
            label_id: vocabs.tags.id_or_unk(&raw.label),
            contexts,
        }
    }

    /// Positions of the contexts kept when encoding: all of them if they fit,
    /// otherwise `k_max` sampled without replacement (or the first `k_max`
    /// with `seed = None`), in ascending order.
    pub fn sample_indices(&self, k_max: usize, seed: Option<u64>) -> Vec<usize> {
        let n = self.contexts.len();
        match seed {
            Some(seed) if n > k_max => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut picked = sample(&mut rng, n, k_max).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..n.min(k_max)).collect(),
        }
    }

    /// Samples at most `k_max` contexts without replacement and pads to
    /// exactly `k_max` slots. With `seed = None` the first `k_max` are kept.
    pub fn encode(&self, k_max: usize, seed: Option<u64>) -> EncodedExample {
        let mut contexts: Vec<ContextIds> = self
            .sample_indices(k_max, seed)
            .into_iter()
            .map(|i| self.contexts[i])
            .collect();
        let mut mask = vec![true; contexts.len()];
        contexts.resize(k_max, ContextIds::PADDING);
        mask.resize(k_max, false);
        EncodedExample {
            label_id: self.label_id,
            contexts,
            mask,
        }
    }
}

/// Fixed-width bag: `k_max` slots, padded slots carry PAD ids and a false mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedExample {
    pub label_id: u32,
    pub contexts: Vec<ContextIds>,
    pub mask: Vec<bool>,
}

impl EncodedExample {
    /// Untrainable examples have no valid slot.
    pub fn is_trainable(&self) -> bool {
        self.mask.iter().any(|&m| m)
    }

    pub fn valid_slots(&self) -> impl Iterator<Item = (usize, ContextIds)> + '_ {
        self.contexts
            .iter()
            .zip(&self.mask)
            .enumerate()
            .filter(|(_, (_, &m))| m)
            .map(|(i, (c, _))| (i, *c))
    }

    /// Bag from explicit ids with every slot valid.
    pub fn from_ids(label_id: u32, contexts: Vec<ContextIds>) -> Self {
        let mask = vec![true; contexts.len()];
        Self {
            label_id,
            contexts,
            mask,
        }
    }
}

pub fn encode_example(
    raw: &RawExample,
    vocabs: &Vocabs,
    k_max: usize,
    seed: u64,
    ablation: AblationMask,
) -> Result<EncodedExample, CorpusError> {
    if k_max == 0 {
        return Err(CorpusError::BadKMax);
    }
    Ok(IndexedExample::new(raw, vocabs, ablation).encode(k_max, Some(seed)))
}

/// Per-example sampling seed from a global seed, a pass number and the
/// example's position (splitmix64 finalizer).
pub fn derive_seed(seed: u64, pass: u64, ordinal: u64) -> u64 {
    let mut z = seed
        .wrapping_add(pass.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(ordinal.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
