//! Monte Carlo BER of OOK and VCD-DPPM at a few fixed SNRs, with and
//! without the vapor cloud.
//!
//! cargo run --release --example ber_experiment

use optosim::codec::Scheme;
use optosim::linksim::{self, ExperimentConfig, LinkBudget};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "{:<9} {:>5} {:>6} {:>5} {:>9} {:>9} {:>10}",
        "scheme", "R_L", "SNR", "cloud", "BER", "sigma", "suppressed"
    );
    for snr_db in [10.0, 15.0, 20.0, f64::INFINITY] {
        for (scheme, rate) in [
            (Scheme::Ook, 16.0),
            (Scheme::Ook, 40.0),
            (Scheme::VcdDppm, 40.0),
        ] {
            for gating in [true, false] {
                let mut cfg = ExperimentConfig::new(scheme, 4, rate);
                cfg.seed = 11;
                cfg.cloud_gating = gating;
                cfg.link = if snr_db.is_finite() {
                    LinkBudget::FixedSnr { snr_db }
                } else {
                    LinkBudget::Noiseless
                };
                let r = linksim::run_ber(&cfg)?;
                println!(
                    "{:<9} {:>5} {:>6} {:>5} {:>9.2e} {:>9.1e} {:>10}",
                    scheme.name(),
                    rate,
                    snr_db,
                    gating,
                    r.ber,
                    r.sigma(),
                    r.suppressed_pulses
                );
            }
        }
    }
    Ok(())
}
