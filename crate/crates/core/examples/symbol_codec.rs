//! Encode a few values with every scheme, print the slot streams, and
//! decode them back. Also shows frequency-ranked text mapping.
//!
//! cargo run --example symbol_codec

use optosim::codec::{self, MappingTable, Scheme, SchemeSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let values = [0u32, 3, 1, 2];
    for scheme in Scheme::ALL {
        let spec =
            SchemeSpec::with_padding(scheme, 2, if scheme == Scheme::VcdDppm { 2 } else { 0 })?;
        let stream = codec::encode_symbols(&spec, &values, 1.0 / 40.0)?;
        let back = codec::decode_stream(&spec, &stream)?;
        println!(
            "{:<9} {:<24} -> {:?}",
            scheme.name(),
            stream.to_string(),
            back.values
        );
    }

    let text = "the quick brown fox jumps over the lazy dog";
    let table = MappingTable::from_corpus(text)?;
    let spec = SchemeSpec::vcd_dppm(table.order_m(), 2)?;
    let stream = codec::encode_text(text, &table, &spec, 1.0 / 40.0)?;
    println!(
        "\n{} symbols -> M = {}, E[v] = {:.3}, {} chips, {:.2} s at 40 Hz",
        table.len(),
        table.order_m(),
        table.mean_value().unwrap_or(0.0),
        stream.len(),
        stream.duration_s()
    );
    for e in table.entries().iter().take(5) {
        println!("  {:?} -> {}", e.symbol, e.value);
    }
    assert_eq!(codec::decode_text(&stream, &table, &spec)?, text);
    Ok(())
}
