//! The vapor-cloud model on the laboratory pulse-train scenarios, plus
//! the highest sustainable rate for a few repeating patterns.
//!
//! cargo run --example cloud_calibration

use optosim::cloud::{self, CloudParams};
use optosim::codec::{self, SlotStream};
use optosim::rates::RATE_SEARCH_HORIZON;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = CloudParams::default();
    println!("T_v = {} s, R_max = {} Hz", params.t_v_s, params.r_max_hz());

    for (pattern, rate, repeats) in [
        ("1", 16.0, 10_000),
        ("1", 20.0, 10),
        ("01", 32.0, 5_000),
        ("11000", 40.0, 2_000),
        ("001", 40.0, 3_000),
        ("111", 40.0, 1),
    ] {
        let stream = SlotStream::from_pattern(pattern, repeats, rate)?;
        let trace = cloud::simulate_train(&stream, &params)?;
        println!(
            "{pattern:>6} at {rate:>4} Hz: {:>5} pulses, {:>4} suppressed, first at {:?}",
            trace.pulses(),
            trace.suppressed(),
            trace.first_suppression()
        );
    }

    println!();
    for pattern in ["1", "01", "001", "11000", "00011000"] {
        let r = cloud::max_sustainable_rate(
            &codec::parse_pattern(pattern)?,
            &params,
            RATE_SEARCH_HORIZON,
        )?;
        println!(
            "{pattern:>8}: {:.3} Hz (drain bound {:.3}, relax bound {:.0})",
            r.rate_hz, r.analytic_bound_hz, r.relax_bound_hz
        );
    }
    for rate in [16.0, 40.0, 300.0, 10_000.0] {
        println!(
            "N0 at {rate} Hz = {}",
            cloud::required_padding(rate, &params)
        );
    }
    Ok(())
}
