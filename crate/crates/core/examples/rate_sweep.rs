//! Bit rate and power efficiency of every scheme, written as the sweep CSV.
//!
//! cargo run --example rate_sweep

use optosim::cloud::CloudParams;
use optosim::codec::Scheme;
use optosim::rates;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = CloudParams::default();
    for scheme in Scheme::ALL {
        let limit = rates::max_allowed_rate(scheme, &params, 4)?;
        println!(
            "{:<9} limit {:>8.3} Hz ({})",
            scheme.name(),
            limit.rate_hz,
            limit.binding.name()
        );
    }
    for m in [2, 4, 8] {
        println!(
            "M = {m}: power efficiency {}%",
            rates::power_efficiency_vs_ook(m)?
        );
    }
    println!();
    let rows = rates::rate_sweep(
        &[1, 2, 3, 4, 5, 6, 7, 8],
        &[16.0, 32.0, 40.0, 300.0],
        &params,
    )?;
    rates::write_sweep_csv(&rows, std::io::stdout().lock())?;
    Ok(())
}
