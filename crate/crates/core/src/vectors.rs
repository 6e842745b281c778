//! Queries over learned name vectors: similarity, combination, analogy.
//!
//! Every query turns into a direction `q` and ranks table entries by
//! `v̂ · q` (unit vectors), so rankings are exact functions of the table.
//! Scores are reported as cosines.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::corpus::{Vocabs, PAD, UNK};
use crate::model::{ModelParams, Real};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum VectorError {
    #[error("unknown name {0:?}")]
    UnknownName(String),
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("query vectors cancel out")]
    Degenerate,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for VectorError {
    fn from(e: std::io::Error) -> Self {
        VectorError::Io(e.to_string())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, VectorError> {
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(VectorError::ZeroNorm);
    }
    Ok(dot(u, v) / (nu * nv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub name: String,
    pub id: u32,
    pub score: f64,
}

/// Name vectors keyed by tag, without PAD, UNK and zero-norm rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NameVectorTable {
    names: Vec<String>,
    ids: Vec<u32>,
    vectors: Vec<Vec<f64>>,
    units: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
    /// Names left out because their vector has zero norm.
    pub excluded: Vec<String>,
}

impl NameVectorTable {
    /// Builds a table from `(id, name, vector)` rows; ids order ties.
    pub fn from_rows<I>(rows: I) -> Self
    where
        I: IntoIterator<Item = (u32, String, Vec<f64>)>,
    {
        let mut table = Self {
            names: Vec::new(),
            ids: Vec::new(),
            vectors: Vec::new(),
            units: Vec::new(),
            index: HashMap::new(),
            excluded: Vec::new(),
        };
        for (id, name, vector) in rows {
            let n = norm(&vector);
            if n == 0.0 || !n.is_finite() {
                table.excluded.push(name);
                continue;
            }
            table.index.insert(name.clone(), table.names.len());
            table.units.push(vector.iter().map(|x| x / n).collect());
            table.vectors.push(vector);
            table.names.push(name);
            table.ids.push(id);
        }
        table
    }

    pub fn from_params<T: Real>(params: &ModelParams<T>, vocabs: &Vocabs) -> Self {
        let rows = vocabs.tags.iter().filter(|(id, _, _)| *id != PAD && *id != UNK).map(|(id, name, _)| {
            let row = params.tags_vocab.row(id as usize);
            (id, name.to_string(), row.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
        });
        Self::from_rows(rows)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn vector(&self, name: &str) -> Option<&[f64]> {
        self.index.get(name).map(|&i| self.vectors[i].as_slice())
    }

    fn position(&self, name: &str) -> Result<usize, VectorError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| VectorError::UnknownName(name.to_string()))
    }

    /// Ranks every entry outside `exclude` by `key`, highest first, ties by id.
    fn rank<F>(&self, exclude: &[usize], k: usize, key: F, scale: f64) -> Vec<Neighbor>
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut scored: Vec<(f64, usize)> = (0..self.len())
            .filter(|i| !exclude.contains(i))
            .map(|i| (key(&self.units[i]), i))
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.ids[a.1].cmp(&self.ids[b.1]))
        });
        scored
            .into_iter()
            .take(k)
            .map(|(s, i)| Neighbor {
                name: self.names[i].clone(),
                id: self.ids[i],
                score: s / scale,
            })
            .collect()
    }

    fn rank_towards(&self, q: &[f64], exclude: &[usize], k: usize) -> Result<Vec<Neighbor>, VectorError> {
        let n = norm(q);
        if n < 1e-12 {
            return Err(VectorError::Degenerate);
        }
        Ok(self.rank(exclude, k, |u| dot(u, q), n))
    }

    /// The `k` names most cosine-similar to `name`.
    pub fn nearest(&self, name: &str, k: usize) -> Result<Vec<Neighbor>, VectorError> {
        let i = self.position(name)?;
        self.rank_towards(&self.units[i], &[i], k)
    }

    /// Names maximizing `cos(a, v) + cos(b, v)`. Scores are that sum.
    pub fn combine(&self, a: &str, b: &str, k: usize) -> Result<Vec<Neighbor>, VectorError> {
        let (ia, ib) = (self.position(a)?, self.position(b)?);
        let (ua, ub) = (&self.units[ia], &self.units[ib]);
        if norm(&sum(ua, ub)) < 1e-12 {
            return Err(VectorError::Degenerate);
        }
        Ok(self.rank(&[ia, ib], k, |u| dot(ua, u) + dot(ub, u), 1.0))
    }

    /// Same ranking as [`combine`](Self::combine) through the single
    /// direction `â + b̂`. Scores are cosines to that direction.
    pub fn combine_unit_sum(&self, a: &str, b: &str, k: usize) -> Result<Vec<Neighbor>, VectorError> {
        let (ia, ib) = (self.position(a)?, self.position(b)?);
        let q = sum(&self.units[ia], &self.units[ib]);
        self.rank_towards(&q, &[ia, ib], k)
    }

    /// Names closest to `â - b̂ + ĉ`: "a is to b as ? is to c".
    pub fn analogy(&self, a: &str, b: &str, c: &str, k: usize) -> Result<Vec<Neighbor>, VectorError> {
        let (ia, ib, ic) = (self.position(a)?, self.position(b)?, self.position(c)?);
        let q: Vec<f64> = self.units[ia]
            .iter()
            .zip(&self.units[ib])
            .zip(&self.units[ic])
            .map(|((x, y), z)| (x - y) + z)
            .collect();
        self.rank_towards(&q, &[ia, ib, ic], k)
    }

    /// One line per entry, `<tag> <f1> ... <fd>`, nine significant digits.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (name, v) in self.names.iter().zip(&self.vectors) {
            write!(out, "{name}")?;
            for x in v {
                write!(out, " {x:.8e}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }

    /// Reads the [`write`](Self::write) format back. Components are read as
    /// single precision, which the format stores losslessly.
    pub fn read<R: BufRead>(input: R) -> Result<Self, VectorError> {
        let mut rows = Vec::new();
        let mut width = None;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| VectorError::Malformed { line: i + 1, message };
            let mut parts = line.split_whitespace();
            let name = parts.next().expect("nonempty line").to_string();
            let vector = parts
                .map(|s| s.parse::<f32>().map(f64::from).map_err(|e| bad(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<f64>, _>>()?;
            if vector.is_empty() {
                return Err(bad("no components".into()));
            }
            if *width.get_or_insert(vector.len()) != vector.len() {
                return Err(bad("inconsistent vector length".into()));
            }
            rows.push((rows.len() as u32, name, vector));
        }
        Ok(Self::from_rows(rows))
    }
}

fn sum(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Writes every tag vector except PAD and UNK, zero rows included.
pub fn export_vectors<T: Real, W: Write>(params: &ModelParams<T>, vocabs: &Vocabs, mut out: W) -> std::io::Result<()> {
    for (id, name, _) in vocabs.tags.iter() {
        if id == PAD || id == UNK {
            continue;
        }
        write!(out, "{name}")?;
        for v in params.tags_vocab.row(id as usize) {
            write!(out, " {:.8e}", v.to_f64().unwrap_or(f64::NAN))?;
        }
        writeln!(out)?;
    }
    out.flush()
}
