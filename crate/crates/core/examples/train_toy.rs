//! Trains a small model on the bundled toy corpus and reports held-out scores.
//!
//! ```text
//! cargo run --release --example train_toy
//! ```

use code2vec::corpus::{VocabCutoffs, Vocabs};
use code2vec::metrics::{evaluate, EvalOptions};
use code2vec::paths::ExtractionLimits;
use code2vec::pipeline::{extract_text, SourceFormat};
use code2vec::train::{train_with, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = include_str!("../data/toy_corpus.minij");
    let (examples, summary) = extract_text(text, SourceFormat::MiniJ, &ExtractionLimits::default())?;
    println!("methods={} contexts={}", summary.methods, summary.contexts);

    // the corpus lists five implementations per name; hold out every fifth
    let (train_set, test_set): (Vec<_>, Vec<_>) = examples
        .into_iter()
        .enumerate()
        .partition(|(i, _)| i % 5 != 4);
    let train_set: Vec<_> = train_set.into_iter().map(|(_, e)| e).collect();
    let test_set: Vec<_> = test_set.into_iter().map(|(_, e)| e).collect();

    let vocabs = Vocabs::build(&train_set, &VocabCutoffs::default())?;
    let config = TrainConfig {
        dim: 32,
        k_max: 50,
        batch_size: 10,
        max_epochs: 60,
        patience: 10,
        seed: 1,
        ..TrainConfig::default()
    };
    let outcome = train_with::<f32, _>(&train_set, &test_set, &vocabs, &config, |record, _| {
        if record.epoch % 10 == 0 {
            println!("{record}");
        }
        Ok(())
    })?;
    println!("best epoch {}", outcome.best_epoch);

    let report = evaluate(&outcome.params, &test_set, &vocabs, &EvalOptions::default())?;
    println!("held out: {}", report.metrics);
    for row in &report.rows {
        println!("  {row}");
    }
    Ok(())
}
