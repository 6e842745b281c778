//! Queries the learned name vectors: neighbors, combinations and analogies.
//!
//! ```text
//! cargo run --release --example name_vectors
//! ```

use code2vec::corpus::{VocabCutoffs, Vocabs};
use code2vec::paths::ExtractionLimits;
use code2vec::pipeline::{extract_text, SourceFormat};
use code2vec::train::{train, TrainConfig};
use code2vec::vectors::{Neighbor, NameVectorTable};

fn show(title: &str, hits: &[Neighbor]) {
    let line: Vec<String> = hits.iter().map(|n| format!("{} ({:.3})", n.name, n.score)).collect();
    println!("{title:<32}{}", line.join(", "));
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (examples, _) = extract_text(
        include_str!("../data/toy_corpus.minij"),
        SourceFormat::MiniJ,
        &ExtractionLimits::default(),
    )?;
    let vocabs = Vocabs::build(&examples, &VocabCutoffs::default())?;
    let config = TrainConfig {
        dim: 32,
        k_max: 50,
        batch_size: 10,
        max_epochs: 200,
        patience: 200,
        seed: 4,
        ..TrainConfig::default()
    };
    let params = train::<f32>(&examples, &[], &vocabs, &config)?.params;
    let table = NameVectorTable::from_params(&params, &vocabs);
    println!("{} name vectors of width {}", table.len(), config.dim);

    show("nearest(isEmpty)", &table.nearest("isEmpty", 3)?);
    show("nearest(max)", &table.nearest("max", 3)?);
    show("combine(getSize, isEmpty)", &table.combine("getSize", "isEmpty", 3)?);
    show("analogy(max, sum, countLines)", &table.analogy("max", "sum", "countLines", 3)?);

    let mut text = Vec::new();
    table.write(&mut text)?;
    let first = String::from_utf8(text)?.lines().next().unwrap_or("").chars().take(72).collect::<String>();
    println!("export line: {first}...");
    Ok(())
}
