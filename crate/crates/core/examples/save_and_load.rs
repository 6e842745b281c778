//! Writes a trained model to disk, reads it back and checks that predictions
//! survive the round trip.
//!
//! ```text
//! cargo run --release --example save_and_load
//! ```

use code2vec::corpus::{encode_example, VocabCutoffs, Vocabs};
use code2vec::model::{load_model, predict_topk, save_model};
use code2vec::paths::ExtractionLimits;
use code2vec::pipeline::{extract_text, SourceFormat};
use code2vec::train::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (examples, _) = extract_text(
        include_str!("../data/toy_corpus.minij"),
        SourceFormat::MiniJ,
        &ExtractionLimits::default(),
    )?;
    let vocabs = Vocabs::build(&examples, &VocabCutoffs::default())?;
    let config = TrainConfig {
        dim: 16,
        k_max: 40,
        max_epochs: 10,
        seed: 5,
        ..TrainConfig::default()
    };
    let params = train::<f32>(&examples, &[], &vocabs, &config)?.params;

    let path = std::env::temp_dir().join(format!("code2vec-example-{}.model", std::process::id()));
    save_model(&path, &params, &vocabs)?;
    let bytes = std::fs::metadata(&path)?.len();
    let (loaded, loaded_vocabs) = load_model(&path)?;
    std::fs::remove_file(&path)?;
    println!("wrote {bytes} bytes, variant {}", loaded.variant.name());

    let mut same = 0;
    for (i, e) in examples.iter().enumerate() {
        let a = encode_example(e, &vocabs, config.k_max, i as u64, config.ablation)?;
        let b = encode_example(e, &loaded_vocabs, config.k_max, i as u64, config.ablation)?;
        if predict_topk(&params, &a, 1)? == predict_topk(&loaded, &b, 1)? {
            same += 1;
        }
    }
    println!("{same} of {} predictions identical after reload", examples.len());
    Ok(())
}
