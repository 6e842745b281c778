//! Sub-token precision, recall and F1 for a handful of predicted names.
//!
//! ```text
//! cargo run --example score_names
//! ```

use code2vec::metrics::{score_pair, Averaging, MetricsAccumulator};

fn main() {
    let pairs = [
        // (truth, predicted)
        ("countLines", "countLines"),
        ("countLines", "countBlankLines"),
        ("getSize", "size"),
        ("isPrime", "checkPrime"),
        ("setName", "<UNK>"),
        ("reverseArray", "arrayReverse"),
    ];
    let mut acc = MetricsAccumulator::default();
    for (truth, predicted) in pairs {
        let s = score_pair(predicted, truth);
        println!("{truth:<14}{predicted:<18}tp={} fp={} fn={}", s.tp, s.fp, s.fn_);
        acc.add(s);
    }
    println!("micro  {}", acc.metrics(Averaging::Micro));
    println!("macro  {}", acc.metrics(Averaging::Macro));
}
