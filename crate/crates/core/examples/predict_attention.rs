//! Predicts a name for an unseen method and shows which contexts the model
//! attended to.
//!
//! ```text
//! cargo run --release --example predict_attention
//! ```

use code2vec::corpus::{IndexedExample, VocabCutoffs, Vocabs};
use code2vec::model::{forward, rank_distribution, Phase};
use code2vec::paths::ExtractionLimits;
use code2vec::pipeline::{extract_text, SourceFormat};
use code2vec::train::{train, TrainConfig};

const UNSEEN: &str = "int sum(int[] values) {
    int acc = 0;
    for (int v : values) { acc = acc + v; }
    return acc;
}";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let limits = ExtractionLimits::default();
    let (examples, _) = extract_text(include_str!("../data/toy_corpus.minij"), SourceFormat::MiniJ, &limits)?;
    let vocabs = Vocabs::build(&examples, &VocabCutoffs::default())?;
    let config = TrainConfig {
        dim: 32,
        k_max: 50,
        batch_size: 10,
        max_epochs: 200,
        patience: 200,
        seed: 2,
        ..TrainConfig::default()
    };
    let params = train::<f32>(&examples, &[], &vocabs, &config)?.params;

    let (query, _) = extract_text(UNSEEN, SourceFormat::MiniJ, &limits)?;
    let query = &query[0];
    let indexed = IndexedExample::new(query, &vocabs, config.ablation);
    let kept = indexed.sample_indices(config.k_max, Some(0));
    let enc = indexed.encode(config.k_max, Some(0));
    let trace = forward(&params, &enc, Phase::Infer, None)?;

    println!("true name: {}", query.label);
    for (rank, (id, p)) in rank_distribution(&trace.q, 3).into_iter().enumerate() {
        println!("  {} {} {:.4}", rank + 1, vocabs.tags.entry(id).unwrap_or("?"), p);
    }

    let weights = trace.slot_attention();
    let mut slots: Vec<usize> = (0..kept.len()).collect();
    slots.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    println!("most attended contexts:");
    for &slot in slots.iter().take(5) {
        println!("  {:.4} {}", weights[slot], query.contexts[kept[slot]]);
    }
    Ok(())
}
