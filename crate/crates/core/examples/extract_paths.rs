//! Parses one MiniJ method and prints its path-contexts.
//!
//! ```text
//! cargo run --example extract_paths
//! ```

use code2vec::paths::{extract_path_contexts, ExtractionLimits};
use code2vec::{parse_mini, write_sexpr_ast};

const SOURCE: &str = "boolean contains(int[] items, int target) {
    for (int item : items) {
        if (item == target) { return true; }
    }
    return false;
}";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ast = parse_mini(SOURCE)?;
    let (_, name) = ast.method_name().ok_or("no method name")?;
    println!("method: {name}");
    println!("tree:   {}", write_sexpr_ast(&ast));

    // the name terminal itself must not leak into the contexts
    let body = ast.without_method_name().ok_or("nothing left")?;
    let limits = ExtractionLimits::new(6, 2)?;
    let contexts = extract_path_contexts(&body, &limits);
    println!("{} contexts with max_length=6, max_width=2:", contexts.len());
    for c in contexts.iter().take(12) {
        println!("  {c}");
    }
    Ok(())
}
