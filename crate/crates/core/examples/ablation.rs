//! Compares attention variants and input ablations on the toy corpus.
//!
//! ```text
//! cargo run --release --example ablation
//! ```

use code2vec::corpus::{AblationMask, VocabCutoffs, Vocabs};
use code2vec::model::AttentionVariant;
use code2vec::paths::ExtractionLimits;
use code2vec::pipeline::{extract_text, SourceFormat};
use code2vec::train::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (examples, _) = extract_text(
        include_str!("../data/toy_corpus.minij"),
        SourceFormat::MiniJ,
        &ExtractionLimits::default(),
    )?;
    let (train_set, val_set): (Vec<_>, Vec<_>) = examples.iter().cloned().enumerate().partition(|(i, _)| i % 5 != 4);
    let train_set: Vec<_> = train_set.into_iter().map(|(_, e)| e).collect();
    let val_set: Vec<_> = val_set.into_iter().map(|(_, e)| e).collect();
    let vocabs = Vocabs::build(&train_set, &VocabCutoffs::default())?;
    let base = TrainConfig {
        dim: 24,
        k_max: 40,
        batch_size: 10,
        max_epochs: 40,
        patience: 40,
        seed: 3,
        ..TrainConfig::default()
    };

    println!("variant                 best val F1");
    for variant in AttentionVariant::ALL {
        let out = train::<f32>(&train_set, &val_set, &vocabs, &TrainConfig { variant, ..base })?;
        let best = &out.history[out.best_epoch - 1];
        println!("{:<24}{:.4}", variant.name(), best.validation.f1);
    }

    println!();
    println!("ablation                best val F1");
    for name in ["full", "only-values", "no-values", "value-path", "one-value"] {
        let ablation: AblationMask = name.parse()?;
        let out = train::<f32>(&train_set, &val_set, &vocabs, &TrainConfig { ablation, ..base })?;
        let best = &out.history[out.best_epoch - 1];
        println!("{:<24}{:.4}", name, best.validation.f1);
    }
    Ok(())
}
