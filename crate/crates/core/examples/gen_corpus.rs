//! Writes the bundled mini-flights corpus: `cargo run --example gen_corpus -- <dir>`.

use tlexplain_core::synth::{generate, FlightCorpusConfig};

fn main() -> tlexplain_core::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "corpus/mini-flights".into());
    let corpus = generate(&FlightCorpusConfig::mini_flights())?;
    corpus.write(&dir)?;
    println!("wrote {} files to {dir}", corpus.files.len());
    Ok(())
}
