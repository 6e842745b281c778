//! Independent reference implementations and random instance generators
//! shared by the integration tests and the acceptance suite.
#![allow(dead_code, clippy::needless_range_loop)]

use code2vec::ast::{kinds, normalize_value, Ast, Tree};
use code2vec::corpus::{ContextIds, EncodedExample};
use code2vec::model::{forward, AttentionVariant, Dropout, Matrix, ModelDims, ModelParams, Phase};
use rand::seq::SliceRandom;
use rand::Rng;

const VALUES: [&str; 9] = ["a", "b", "c1", "x_y", "7", "foo bar", "$", "", "Zz"];

/// Random tree with between 1 and `max_terminals` terminals, kinds from the
/// built-in taxonomy.
pub fn random_tree<R: Rng>(rng: &mut R, max_terminals: usize) -> Tree {
    let n = rng.gen_range(1..=max_terminals);
    build(rng, n, 0)
}

fn build<R: Rng>(rng: &mut R, n: usize, depth: usize) -> Tree {
    let kind = *kinds::ALL.choose(rng).unwrap();
    if n == 1 && depth > 0 && (depth >= 6 || rng.gen_bool(0.6)) {
        return Tree::leaf(kind, *VALUES.choose(rng).unwrap());
    }
    let k = if n == 1 { 1 } else { rng.gen_range(1..=n.min(4)) };
    // random composition of n into k positive parts
    let mut cuts: Vec<usize> = (1..n).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(n)) {
        parts.push(c - prev);
        prev = c;
    }
    let children = parts.into_iter().map(|m| build(rng, m, depth + 1)).collect();
    Tree::node(kind, children)
}

pub fn random_ast<R: Rng>(rng: &mut R, max_terminals: usize) -> Ast {
    random_tree(rng, max_terminals).into_ast().unwrap()
}

/// Path-contexts by walking every terminal pair up to its lowest common
/// ancestor, rendered as `src,path,dst` strings.
pub fn oracle_contexts(ast: &Ast, max_length: usize, max_width: usize) -> Vec<String> {
    let mut order = Vec::new();
    let mut stack = vec![ast.root()];
    while let Some(id) = stack.pop() {
        order.push(id);
        stack.extend(ast.children(id).iter().rev());
    }
    let terms: Vec<usize> = order.into_iter().filter(|&id| ast.node(id).is_terminal()).collect();

    // (node, index of the previous chain node among its children)
    let chain = |mut id: usize| {
        let mut out = vec![(id, usize::MAX)];
        while let Some((parent, idx)) = ast.parent(id) {
            out.push((parent, idx));
            id = parent;
        }
        out
    };

    let mut out = Vec::new();
    for i in 0..terms.len() {
        for j in i + 1..terms.len() {
            let (ca, cb) = (chain(terms[i]), chain(terms[j]));
            let ups = ca.iter().position(|(n, _)| cb.iter().any(|(m, _)| m == n)).unwrap();
            let lca = ca[ups].0;
            let downs = cb.iter().position(|(m, _)| *m == lca).unwrap();
            let width = ca[ups].1.abs_diff(cb[downs].1);
            if ups + downs > max_length || width > max_width {
                continue;
            }
            let mut path = String::new();
            for (step, (n, _)) in ca[..ups].iter().enumerate() {
                if step > 0 {
                    path.push('^');
                }
                path.push_str(ast.kind(*n));
            }
            path.push('^');
            path.push_str(ast.kind(lca));
            for (n, _) in cb[..downs].iter().rev() {
                path.push('_');
                path.push_str(ast.kind(*n));
            }
            let value = |id: usize| normalize_value(ast.kind(id), ast.value(id).unwrap());
            out.push(format!("{},{},{}", value(terms[i]), path, value(terms[j])));
        }
    }
    out
}

pub fn random_dims<R: Rng>(rng: &mut R) -> ModelDims {
    ModelDims {
        d: rng.gen_range(2..=5),
        values: rng.gen_range(3..=8),
        paths: rng.gen_range(3..=7),
        tags: rng.gen_range(3..=7),
        k_max: rng.gen_range(1..=6),
    }
}

/// Parameters with every non-PAD entry uniform in `[-scale, scale]`.
pub fn random_params<R: Rng>(rng: &mut R, dims: ModelDims, variant: AttentionVariant, scale: f64) -> ModelParams<f64> {
    let mut p = ModelParams::<f64>::zeros(dims, variant).unwrap();
    for m in p.matrices_mut() {
        for v in m.as_mut_slice() {
            *v = rng.gen_range(-scale..=scale);
        }
    }
    p.value_vocab.row_mut(0).fill(0.0);
    p.path_vocab.row_mut(0).fill(0.0);
    p.tags_vocab.row_mut(0).fill(0.0);
    p
}

/// Bag of `k_max` slots over non-PAD ids, a random subset of them masked
/// (at least one valid).
pub fn random_example<R: Rng>(rng: &mut R, dims: &ModelDims) -> EncodedExample {
    let k = dims.k_max;
    let mut contexts = Vec::with_capacity(k);
    let mut mask = Vec::with_capacity(k);
    for _ in 0..k {
        contexts.push(ContextIds {
            source: rng.gen_range(1..dims.values as u32),
            path: rng.gen_range(1..dims.paths as u32),
            target: rng.gen_range(1..dims.values as u32),
        });
        mask.push(rng.gen_bool(0.75));
    }
    if !mask.iter().any(|&m| m) {
        let i = rng.gen_range(0..k);
        mask[i] = true;
    }
    for (c, &m) in contexts.iter_mut().zip(&mask) {
        if !m {
            *c = ContextIds::PADDING;
        }
    }
    EncodedExample {
        label_id: rng.gen_range(1..dims.tags as u32),
        contexts,
        mask,
    }
}

pub struct OracleOutput {
    /// Per valid context: one weight, or d weights element-wise.
    pub attention: Vec<Vec<f64>>,
    pub code: Vec<f64>,
    pub q: Vec<f64>,
}

fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

/// Straight-line forward pass, written without the library's helpers.
pub fn oracle_forward(
    p: &ModelParams<f64>,
    enc: &EncodedExample,
    train: bool,
    dropout: Option<&Matrix<f64>>,
) -> OracleOutput {
    let d = p.dims.d;
    let mut cs: Vec<Vec<f64>> = Vec::new();
    for (slot, ids) in enc.contexts.iter().enumerate() {
        if !enc.mask[slot] {
            continue;
        }
        let mut c = Vec::with_capacity(3 * d);
        for j in 0..d {
            c.push(p.value_vocab.get(ids.source as usize, j));
        }
        for j in 0..d {
            c.push(p.path_vocab.get(ids.path as usize, j));
        }
        for j in 0..d {
            c.push(p.value_vocab.get(ids.target as usize, j));
        }
        if let Some(m) = dropout {
            let row = cs.len();
            for (j, x) in c.iter_mut().enumerate() {
                *x *= m.get(row, j);
            }
        }
        cs.push(c);
    }
    let n = cs.len();
    let hs: Vec<Vec<f64>> = if p.variant == AttentionVariant::SoftNoFC {
        cs
    } else {
        cs.iter()
            .map(|c| {
                (0..d)
                    .map(|r| (0..3 * d).map(|k| p.w.get(r, k) * c[k]).sum::<f64>().tanh())
                    .collect()
            })
            .collect()
    };
    let width = hs[0].len();
    let score = |h: &[f64], row: usize| (0..width).map(|k| h[k] * p.attention.get(row, k)).sum::<f64>();
    let hard = match p.variant {
        AttentionVariant::HardTrainHard => true,
        AttentionVariant::TrainSoftPredictHard => !train,
        _ => false,
    };
    let attention: Vec<Vec<f64>> = match p.variant {
        AttentionVariant::NoAttention => vec![vec![1.0 / n as f64]; n],
        AttentionVariant::ElementWise => {
            let mut a = vec![vec![0.0; d]; n];
            for j in 0..d {
                let col: Vec<f64> = hs.iter().map(|h| score(h, j)).collect();
                for (i, w) in softmax(&col).into_iter().enumerate() {
                    a[i][j] = w;
                }
            }
            a
        }
        _ if hard => {
            let s: Vec<f64> = hs.iter().map(|h| score(h, 0)).collect();
            let mut best = 0;
            for i in 0..n {
                if s[i] > s[best] {
                    best = i;
                }
            }
            (0..n).map(|i| vec![if i == best { 1.0 } else { 0.0 }]).collect()
        }
        _ => {
            let s: Vec<f64> = hs.iter().map(|h| score(h, 0)).collect();
            softmax(&s).into_iter().map(|w| vec![w]).collect()
        }
    };
    let mut code = vec![0.0; width];
    for i in 0..n {
        for k in 0..width {
            let a = if attention[i].len() == 1 {
                attention[i][0]
            } else {
                attention[i][k]
            };
            code[k] += a * hs[i][k];
        }
    }
    let logits: Vec<f64> = (1..p.dims.tags)
        .map(|y| (0..width).map(|k| p.tags_vocab.get(y, k) * code[k]).sum())
        .collect();
    let mut q = vec![0.0];
    q.extend(softmax(&logits));
    OracleOutput { attention, code, q }
}

/// Loss of one example in training mode under a fixed dropout mask.
pub fn train_loss(p: &ModelParams<f64>, enc: &EncodedExample, dropout: Option<&Dropout<f64>>) -> f64 {
    forward(p, enc, Phase::Train, dropout).unwrap().loss(enc.label_id)
}

/// Central difference of the loss in one parameter entry.
pub fn numeric_derivative(
    p: &ModelParams<f64>,
    enc: &EncodedExample,
    dropout: Option<&Dropout<f64>>,
    group: usize,
    index: usize,
    h: f64,
) -> f64 {
    let mut plus = p.clone();
    plus.matrices_mut()[group].as_mut_slice()[index] += h;
    let mut minus = p.clone();
    minus.matrices_mut()[group].as_mut_slice()[index] -= h;
    (train_loss(&plus, enc, dropout) - train_loss(&minus, enc, dropout)) / (2.0 * h)
}

/// Relative error with an absolute floor so that vanishing gradients do not
/// blow up the ratio.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Analytic gradient of one parameter group, densified, in the same layout
/// as the parameter matrix.
pub fn dense_gradient(p: &ModelParams<f64>, grads: &code2vec::train::Gradients<f64>, group: usize) -> Vec<f64> {
    let d = p.dims.d;
    let sparse = |rows: &std::collections::BTreeMap<u32, Vec<f64>>, n: usize| {
        let mut out = vec![0.0; n * d];
        for (&id, row) in rows {
            out[id as usize * d..(id as usize + 1) * d].copy_from_slice(row);
        }
        out
    };
    match group {
        0 => sparse(&grads.value_rows, p.dims.values),
        1 => sparse(&grads.path_rows, p.dims.paths),
        2 => grads.w.as_slice().to_vec(),
        3 => grads.attention.as_slice().to_vec(),
        4 => grads.tags_vocab.as_slice().to_vec(),
        _ => unreachable!(),
    }
}

/// Worst relative error between analytic and numeric gradients over every
/// entry of one parameter group.
pub fn gradient_check(
    p: &ModelParams<f64>,
    enc: &EncodedExample,
    dropout: Option<&Dropout<f64>>,
    group: usize,
) -> f64 {
    let (grads, _) = code2vec::train::example_gradients(p, enc, dropout).unwrap();
    let analytic = dense_gradient(p, &grads, group);
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let n = numeric_derivative(p, enc, dropout, group, i, 1e-5);
        worst = worst.max(relative_error(a, n));
    }
    worst
}

/// Whether the best hard-attention score beats the runner-up by `margin`,
/// so that small perturbations cannot flip the selection.
pub fn hard_margin_ok(p: &ModelParams<f64>, enc: &EncodedExample, margin: f64) -> bool {
    let trace = forward(p, enc, Phase::Train, None).unwrap();
    let s = trace.scores.as_slice();
    if s.len() < 2 {
        return true;
    }
    let mut sorted = s.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sorted[0] - sorted[1] > margin
}
