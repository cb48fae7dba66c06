//! Source level, transmission loss, ambient noise and slot SNR over the
//! receiver grid, using the bundled source-level table.
//!
//! cargo run --example link_budget

use optosim::channel::{self, ChannelParams, Interpolation, SourceLevelTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = SourceLevelTable::from_csv(optosim::cli::SAMPLE_SOURCE_LEVELS.as_bytes(), None)?;
    for f in [1.0, 10.0, 50.0] {
        println!(
            "absorption at {f} kHz: {:.4} dB/km",
            channel::thorp_absorption(f)
        );
    }
    let nl = channel::ambient_noise_level(&ChannelParams::default())?;
    println!("noise level over 9-11 kHz: {:.2} dB\n", nl.level_db);

    println!(
        "{:>6} {:>6} {:>8} {:>8} {:>8} {:>10}",
        "D_m", "angle", "TL_dB", "SNR_dB", "p_miss", "p_false"
    );
    for d in [100.0, 250.0, 500.0, 1000.0] {
        for angle in [0.0, 45.0, 90.0] {
            let mut ch = ChannelParams::at_distance(d);
            ch.angle_deg = angle;
            let snr = channel::slot_snr(&table, 60.0, &ch, Interpolation::Exact)?;
            let (miss, fa) = channel::slot_detection_probs(snr, 0.5);
            println!(
                "{d:>6} {angle:>6} {:>8.2} {snr:>8.2} {miss:>8.2e} {fa:>10.2e}",
                channel::transmission_loss(&ch)?
            );
        }
    }
    let interp = table.lookup(55.0, 0.0, Interpolation::LogLinear)?;
    println!("\nSL at 55 mJ, 0 deg (log-linear): {interp:.2} dB");
    Ok(())
}
