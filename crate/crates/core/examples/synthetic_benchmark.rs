//! Writes the bundled synthetic benchmark as JSONL.
//!
//!     cargo run --example synthetic_benchmark -- data/synthetic.jsonl

use tribrid::eval::{save_dataset, synthetic, write_dataset, Split};

fn main() -> tribrid::Result<()> {
    let data = synthetic::bundled();
    let count = |s| data.iter().filter(|p| p.split == s).count();
    eprintln!(
        "{} pairs (train {}, dev {}, test {}), seed {}",
        data.len(),
        count(Split::Train),
        count(Split::Dev),
        count(Split::Test),
        synthetic::SYNTHETIC_SEED
    );
    for p in data.iter().take(3) {
        eprintln!("  [{}] {} / {} -> {}", p.id, p.claim, p.perspective, p.label);
    }
    match std::env::args().nth(1) {
        Some(path) => save_dataset(path, &data),
        None => write_dataset(std::io::stdout().lock(), &data),
    }
}
