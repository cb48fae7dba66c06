//! Characters per second of every scheme on the bundled English corpus,
//! or on a file given as the first argument.
//!
//! cargo run --release --example text_throughput [corpus.txt]

use optosim::codec::{self, Scheme};
use optosim::linksim::{self, ExperimentConfig, OokBaseline};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = match std::env::args().nth(1) {
        Some(p) => codec::latin1_to_string(&std::fs::read(p)?),
        None => optosim::cli::SAMPLE_CORPUS.to_string(),
    };
    for baseline in [OokBaseline::RMax, OokBaseline::SameRate] {
        for rate in [40.0, 10_000.0] {
            let mut cfg = ExperimentConfig::new(Scheme::VcdDppm, 1, rate);
            cfg.ook_baseline = baseline;
            let r = linksim::run_text_sim(&cfg, &corpus)?;
            println!(
                "R_L = {rate} Hz, OOK at {} Hz: M = {}, N0 = {}, E[v] = {:.3}, ratio {:.3} (formula {:.3} chars/s)",
                r.ook_rate_hz, r.order_m, r.padding_n0, r.mean_value, r.symbol_rate_ratio, r.formula_chars_per_s
            );
            for s in &r.schemes {
                println!(
                    "  {:<9} {:>9.2} Hz {:>10.4} chars/s  x{:<7.3} {:.2} pulses/char, {} suppressed",
                    s.scheme.name(),
                    s.r_l_hz,
                    s.chars_per_s,
                    s.ratio_vs_ook,
                    s.pulses_per_char,
                    s.suppressed_pulses
                );
            }
        }
    }
    Ok(())
}
