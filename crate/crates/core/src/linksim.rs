//! End-to-end Monte Carlo link: encode, vapor-cloud gate, per-slot
//! detection, decode.
//!
//! Randomness comes from `ChaCha8Rng` seeded with the experiment seed and is
//! consumed in a fixed order (control bits, data bits, slot noise), so a
//! config and seed fully determine every result.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, ChannelError, ChannelParams, Interpolation, SourceLevelTable};
use crate::cloud::{self, CloudError, CloudParams};
use crate::codec::{self, CodecError, MappingTable, Scheme, SchemeSpec, SlotStream};
use crate::output::fmt_sig;
use crate::rates::{self, LaserParams, RateError};

pub const RNG_ALGORITHM: &str = "ChaCha8Rng";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Cloud(#[from] CloudError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Where the per-slot SNR comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LinkBudget {
    /// No noise at all; every slot is decided correctly.
    #[default]
    Noiseless,
    FixedSnr {
        snr_db: f64,
    },
    /// `SL - TL - NL` from a source-level table at the laser's pulse energy.
    Calibrated {
        source_levels: SourceLevelTable,
        #[serde(default)]
        interpolation: Interpolation,
    },
}

/// Which OOK operating point the text simulation compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OokBaseline {
    /// OOK at its cloud-limited maximum rate `R_max`.
    #[default]
    RMax,
    /// OOK at the same laser rate as VCD-DPPM, suppressions included.
    SameRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub order_m: u32,
    /// Guard zeros for VCD-DPPM; derived from the laser rate when absent.
    #[serde(default)]
    pub padding_n0: Option<u32>,
    pub laser: LaserParams,
    #[serde(default)]
    pub cloud: CloudParams,
    /// Pass the pulse train through the vapor-cloud model.
    #[serde(default = "yes")]
    pub cloud_gating: bool,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub link: LinkBudget,
    #[serde(default, alias = "rng_seed")]
    pub seed: u64,
    #[serde(default = "default_data_bits")]
    pub n_data_bits: usize,
    #[serde(default = "default_control_bits")]
    pub n_control_bits: usize,
    #[serde(default)]
    pub ook_baseline: OokBaseline,
}

fn yes() -> bool {
    true
}
fn default_data_bits() -> usize {
    100_000
}
fn default_control_bits() -> usize {
    64
}

impl ExperimentConfig {
    /// Noiseless defaults for a scheme at a laser rate.
    pub fn new(scheme: Scheme, order_m: u32, r_l_hz: f64) -> Self {
        ExperimentConfig {
            scheme,
            order_m,
            padding_n0: None,
            laser: LaserParams {
                r_l_hz,
                pulse_energy_mj: 60.0,
            },
            cloud: CloudParams::default(),
            cloud_gating: true,
            channel: ChannelParams::default(),
            link: LinkBudget::Noiseless,
            seed: 0,
            n_data_bits: default_data_bits(),
            n_control_bits: default_control_bits(),
            ook_baseline: OokBaseline::RMax,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.laser.validate()?;
        self.cloud.validate()?;
        self.channel.validate()?;
        self.spec()?;
        if self.n_data_bits == 0 {
            return Err(SimError::Config("n_data_bits must be positive".into()));
        }
        if self.n_control_bits < 2 || !self.n_control_bits.is_multiple_of(2) {
            return Err(SimError::Config(
                "n_control_bits must be even and at least 2".into(),
            ));
        }
        if let LinkBudget::FixedSnr { snr_db } = self.link {
            if snr_db.is_nan() {
                return Err(SimError::Config("snr_db is NaN".into()));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<SchemeSpec, CodecError> {
        let n0 = match self.scheme {
            Scheme::VcdDppm => self
                .padding_n0
                .unwrap_or_else(|| cloud::required_padding(self.laser.r_l_hz, &self.cloud)),
            _ => self.padding_n0.unwrap_or(0),
        };
        SchemeSpec::with_padding(self.scheme, self.order_m, n0)
    }

    /// Per-slot SNR in dB; `+inf` for a noiseless link.
    pub fn snr_db(&self) -> Result<f64, SimError> {
        Ok(match &self.link {
            LinkBudget::Noiseless => f64::INFINITY,
            LinkBudget::FixedSnr { snr_db } => *snr_db,
            LinkBudget::Calibrated {
                source_levels,
                interpolation,
            } => channel::slot_snr(
                source_levels,
                self.laser.pulse_energy_mj,
                &self.channel,
                *interpolation,
            )?,
        })
    }
}

/// Pulse mean and noise sigma of the received slot amplitude.
#[derive(Debug, Clone, Copy)]
struct Amplitude {
    mu: f64,
    sigma: f64,
}

impl Amplitude {
    fn from_snr(snr_db: f64) -> Self {
        if snr_db == f64::INFINITY {
            Amplitude {
                mu: 1.0,
                sigma: 0.0,
            }
        } else {
            Amplitude {
                mu: channel::pulse_amplitude(snr_db),
                sigma: 1.0,
            }
        }
    }

    fn sample(&self, pulse: bool, rng: &mut ChaCha8Rng) -> f64 {
        let noise: f64 = rng.sample(StandardNormal);
        let mean = if pulse { self.mu } else { 0.0 };
        mean + self.sigma * noise
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Decision threshold as a fraction of the pulse mean.
    pub threshold_normalized: f64,
    /// Decision threshold on the received amplitude.
    pub threshold_abs: f64,
    pub pulse_mean: f64,
    pub noise_mean: f64,
    /// Pulses could not be told apart from noise; the threshold fell back
    /// to half the nominal pulse amplitude.
    pub failed: bool,
}

pub const FALLBACK_THRESHOLD: f64 = 0.5;

/// Sends the alternating control pattern and places the threshold midway
/// between the pulse-slot and empty-slot sample means. Draws from a fresh
/// generator seeded like [`run_ber`], so both see the same threshold.
pub fn calibrate_threshold(config: &ExperimentConfig) -> Result<Calibration, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    calibrate_with(config, &mut rng)
}

fn calibrate_with(
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Calibration, SimError> {
    let amp = Amplitude::from_snr(config.snr_db()?);
    let n = config.n_control_bits;

    // Each control chip is followed by enough empty slots to let the cloud
    // drain, so no control pulse is ever suppressed.
    let spacing = cloud::required_padding(config.laser.r_l_hz, &config.cloud) as usize + 1;
    let mut chips = vec![false; n * spacing];
    for k in (0..n).step_by(2) {
        chips[k * spacing] = true;
    }
    let stream = SlotStream::at_rate(chips, config.laser.r_l_hz)?;
    let arrived = if config.cloud_gating {
        cloud::gate_stream(&stream, &config.cloud)?.0
    } else {
        stream
    };

    let (mut pulses, mut empties) = (Vec::with_capacity(n / 2), Vec::with_capacity(n / 2));
    for k in 0..n {
        let sample = amp.sample(arrived.chips()[k * spacing], rng);
        if k % 2 == 0 {
            pulses.push(sample);
        } else {
            empties.push(sample);
        }
    }
    let (pm, pv) = mean_var(&pulses);
    let (nm, nv) = mean_var(&empties);
    let std_err = (pv / pulses.len() as f64 + nv / empties.len() as f64).sqrt();
    let separated = pm - nm > 3.0 * std_err && pm > 0.0;
    let failed = !separated;
    let (threshold_abs, threshold_normalized) = if failed {
        (FALLBACK_THRESHOLD * amp.mu, FALLBACK_THRESHOLD)
    } else {
        let mid = 0.5 * (pm + nm);
        (mid, mid / pm)
    };
    Ok(Calibration {
        threshold_normalized,
        threshold_abs,
        pulse_mean: pm,
        noise_mean: nm,
        failed,
    })
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerResult {
    pub scheme: Scheme,
    pub order_m: u32,
    pub padding_n0: u32,
    pub r_l_hz: f64,
    pub distance_m: f64,
    pub angle_deg: f64,
    #[serde(with = "crate::output::nonfinite")]
    pub snr_db: f64,
    pub threshold_normalized: f64,
    pub calibration_failed: bool,
    pub transmitted_bits: usize,
    /// Bit errors with each received symbol matched to the transmitted
    /// symbol whose time window contains its pulse.
    pub bit_errors: usize,
    pub ber: f64,
    /// Bit errors comparing decoded and transmitted symbols position by
    /// position, with any shortfall counted as errors.
    pub prefix_bit_errors: usize,
    pub prefix_ber: f64,
    pub symbols: usize,
    pub erased_symbols: usize,
    pub suppressed_pulses: usize,
    pub resync_count: usize,
    pub seed: u64,
    pub rng: String,
    #[serde(skip)]
    pub wall_clock_s: f64,
}

impl BerResult {
    /// Binomial standard deviation of the BER estimate.
    pub fn sigma(&self) -> f64 {
        binomial_sigma(self.ber, self.transmitted_bits)
    }
}

pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// What the receiver recovered for one transmitted symbol.
struct Reception {
    /// Per transmitted symbol, in order. `None` is an erasure.
    aligned: Vec<Option<u32>>,
    /// Receiver output in arrival order, erasures included.
    sequence: Vec<Option<u32>>,
    resyncs: usize,
}

fn receive_fixed_frames(spec: &SchemeSpec, detected: &[bool], symbols: usize) -> Reception {
    let mut aligned = Vec::with_capacity(symbols);
    let mut resyncs = 0;
    match spec.scheme {
        Scheme::Ook => {
            for frame in detected.chunks_exact(spec.order_m as usize) {
                aligned.push(Some(
                    frame.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32),
                ));
            }
        }
        Scheme::Ppm => {
            for frame in detected.chunks_exact(spec.alphabet_size() as usize) {
                let hits = frame.iter().filter(|&&d| d).count();
                if hits != 1 {
                    resyncs += 1;
                }
                aligned.push(frame.iter().position(|&d| d).map(|p| p as u32));
            }
        }
        _ => unreachable!("differential schemes use receive_differential"),
    }
    Reception {
        sequence: aligned.clone(),
        aligned,
        resyncs,
    }
}

/// Self-synchronizing receiver. Detections inside the guard interval are
/// dropped; a gap too long for the alphabet yields an erasure and the
/// receiver re-anchors on that pulse.
fn receive_differential(spec: &SchemeSpec, detected: &[bool], tx_pulses: &[usize]) -> Reception {
    let guard = spec.guard_zeros() as usize;
    let alphabet = spec.alphabet_size() as usize;
    let mut aligned: Vec<Option<u32>> = vec![None; tx_pulses.len()];
    let mut filled = vec![false; tx_pulses.len()];
    let mut sequence = Vec::new();
    let mut resyncs = 0;
    let mut next_free = 0usize; // first chip after the last accepted pulse
    let mut window = 0usize;
    for (i, _) in detected.iter().enumerate().filter(|(_, &d)| d) {
        let zeros = i - next_free;
        if zeros < guard {
            resyncs += 1;
            continue;
        }
        let value = zeros - guard;
        let out = if value >= alphabet {
            resyncs += 1;
            None
        } else {
            Some(value as u32)
        };
        next_free = i + 1;
        sequence.push(out);

        while window < tx_pulses.len() && tx_pulses[window] < i {
            window += 1;
        }
        if window < tx_pulses.len() && !filled[window] {
            filled[window] = true;
            aligned[window] = out;
        }
    }
    Reception {
        aligned,
        sequence,
        resyncs,
    }
}

/// Bit errors between `tx` and `rx` over the first `n_bits` of the
/// MSB-first unpacking. Missing or erased symbols are read as zero.
fn count_bit_errors(tx: &[u32], rx: &[Option<u32>], order_m: u32, n_bits: usize) -> usize {
    let m = order_m as usize;
    let mut errors = 0;
    for (j, &t) in tx.iter().enumerate() {
        let r = rx.get(j).copied().flatten().unwrap_or(0);
        let valid = m.min(n_bits - j * m);
        // Keep the top `valid` bits of the M-bit symbol.
        let mask = if valid == 0 {
            0
        } else {
            ((1u64 << valid) - 1) << (m - valid)
        };
        errors += (((t ^ r) as u64) & mask).count_ones() as usize;
    }
    errors
}

/// Runs the full Monte Carlo link for one configuration.
pub fn run_ber(config: &ExperimentConfig) -> Result<BerResult, SimError> {
    let started = Instant::now();
    config.validate()?;
    let spec = config.spec()?;
    let snr_db = config.snr_db()?;
    let amp = Amplitude::from_snr(snr_db);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cal = calibrate_with(config, &mut rng)?;

    let m = spec.order_m as usize;
    let n_bits = config.n_data_bits;
    let n_symbols = n_bits.div_ceil(m);
    let mut values = Vec::with_capacity(n_symbols);
    for j in 0..n_symbols {
        let mut v = 0u32;
        for k in 0..m {
            let bit = if j * m + k < n_bits {
                rng.random::<bool>()
            } else {
                false
            };
            v = (v << 1) | bit as u32;
        }
        values.push(v);
    }

    let sent = codec::encode_symbols(&spec, &values, config.laser.chip_duration_s())?;
    let tx_pulses: Vec<usize> = sent.pulse_indices().collect();
    let (arrived, suppressed) = if config.cloud_gating {
        let (gated, trace) = cloud::gate_stream(&sent, &config.cloud)?;
        (gated, trace.suppressed())
    } else {
        (sent, 0)
    };

    let detected: Vec<bool> = arrived
        .chips()
        .iter()
        .map(|&pulse| amp.sample(pulse, &mut rng) > cal.threshold_abs)
        .collect();

    let rx = if spec.scheme.is_differential() {
        receive_differential(&spec, &detected, &tx_pulses)
    } else {
        receive_fixed_frames(&spec, &detected, n_symbols)
    };

    let bit_errors = count_bit_errors(&values, &rx.aligned, spec.order_m, n_bits);
    let prefix_bit_errors = count_bit_errors(&values, &rx.sequence, spec.order_m, n_bits);
    let erased = rx.aligned.iter().filter(|v| v.is_none()).count();

    Ok(BerResult {
        scheme: spec.scheme,
        order_m: spec.order_m,
        padding_n0: spec.padding_n0,
        r_l_hz: config.laser.r_l_hz,
        distance_m: config.channel.distance_m,
        angle_deg: config.channel.angle_deg,
        snr_db,
        threshold_normalized: cal.threshold_normalized,
        calibration_failed: cal.failed,
        transmitted_bits: n_bits,
        bit_errors,
        ber: bit_errors as f64 / n_bits as f64,
        prefix_bit_errors,
        prefix_ber: prefix_bit_errors as f64 / n_bits as f64,
        symbols: n_symbols,
        erased_symbols: erased,
        suppressed_pulses: suppressed,
        resync_count: rx.resyncs,
        seed: config.seed,
        rng: RNG_ALGORITHM.to_string(),
        wall_clock_s: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeThroughput {
    pub scheme: Scheme,
    pub order_m: u32,
    pub padding_n0: u32,
    /// Laser rate the scheme runs at.
    pub r_l_hz: f64,
    pub chips: usize,
    pub airtime_s: f64,
    pub chars_per_s: f64,
    pub ratio_vs_ook: f64,
    pub pulses_per_char: f64,
    pub suppressed_pulses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputResult {
    pub corpus_chars: usize,
    pub alphabet_size: usize,
    pub order_m: u32,
    pub r_l_hz: f64,
    pub padding_n0: u32,
    /// Probability-weighted codec value of the frequency-ranked mapping.
    pub mean_value: f64,
    pub ook_baseline: OokBaseline,
    pub ook_rate_hz: f64,
    /// VCD-DPPM symbol rate over the OOK baseline's.
    pub symbol_rate_ratio: f64,
    /// `R_L / (N0 + 1 + E[v])`, the closed form of the simulated rate.
    pub formula_chars_per_s: f64,
    /// OOK pulses over VCD-DPPM pulses, percent.
    pub pulse_ratio_pct: Option<f64>,
    /// Power efficiency formula at the corpus's `M`.
    pub formula_power_efficiency_pct: f64,
    pub schemes: Vec<SchemeThroughput>,
}

impl ThroughputResult {
    pub fn scheme(&self, scheme: Scheme) -> Option<&SchemeThroughput> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }
}

/// Text throughput of every scheme on `corpus` with a frequency-ranked
/// mapping. VCD-DPPM runs at the configured laser rate; the others run at
/// the lower of that rate and their cloud limit, except OOK which follows
/// [`ExperimentConfig::ook_baseline`].
pub fn run_text_sim(config: &ExperimentConfig, corpus: &str) -> Result<ThroughputResult, SimError> {
    config.laser.validate()?;
    config.cloud.validate()?;
    if corpus.is_empty() {
        return Err(SimError::Config("corpus is empty".into()));
    }
    let table = MappingTable::from_corpus(corpus)?;
    let m = table.order_m();
    let r_l = config.laser.r_l_hz;
    let n0 = config
        .padding_n0
        .unwrap_or_else(|| cloud::required_padding(r_l, &config.cloud));
    let n_chars = corpus.chars().count();
    let mean_value = table
        .mean_value()
        .expect("corpus tables carry probabilities");

    let ook_rate = match config.ook_baseline {
        OokBaseline::RMax => config.cloud.r_max_hz().min(r_l),
        OokBaseline::SameRate => r_l,
    };

    let mut schemes = Vec::new();
    for scheme in Scheme::ALL {
        let (spec, rate) = match scheme {
            Scheme::Ook => (SchemeSpec::new(Scheme::Ook, 8)?, ook_rate),
            Scheme::VcdDppm => (SchemeSpec::vcd_dppm(m, n0)?, r_l),
            other => {
                let limit = rates::max_allowed_rate(other, &config.cloud, m)?.rate_hz;
                (SchemeSpec::new(other, m)?, r_l.min(limit))
            }
        };
        let stream = codec::encode_text(corpus, &table, &spec, 1.0 / rate)?;
        let suppressed = cloud::simulate_train(&stream, &config.cloud)?.suppressed();
        let airtime_s = stream.len() as f64 / rate;
        schemes.push(SchemeThroughput {
            scheme,
            order_m: spec.order_m,
            padding_n0: spec.padding_n0,
            r_l_hz: rate,
            chips: stream.len(),
            airtime_s,
            chars_per_s: n_chars as f64 / airtime_s,
            ratio_vs_ook: 0.0,
            pulses_per_char: stream.pulse_count() as f64 / n_chars as f64,
            suppressed_pulses: suppressed,
        });
    }
    let ook_cps = schemes[0].chars_per_s;
    for s in &mut schemes {
        s.ratio_vs_ook = s.chars_per_s / ook_cps;
    }
    let vcd = schemes
        .iter()
        .find(|s| s.scheme == Scheme::VcdDppm)
        .expect("all schemes run");
    let ook_pulses = schemes[0].pulses_per_char * n_chars as f64;
    let vcd_pulses = vcd.pulses_per_char * n_chars as f64;

    Ok(ThroughputResult {
        corpus_chars: n_chars,
        alphabet_size: table.len(),
        order_m: m,
        r_l_hz: r_l,
        padding_n0: n0,
        mean_value,
        ook_baseline: config.ook_baseline,
        ook_rate_hz: ook_rate,
        symbol_rate_ratio: vcd.ratio_vs_ook,
        formula_chars_per_s: r_l / (n0 as f64 + 1.0 + mean_value),
        pulse_ratio_pct: (ook_pulses > 0.0).then(|| ook_pulses / vcd_pulses * 100.0),
        formula_power_efficiency_pct: rates::power_efficiency_vs_ook(m)?,
        schemes,
    })
}

pub const BER_CSV_HEADER: &str = "scheme,m,n0,r_l_hz,distance_m,angle_deg,snr_db,threshold,calibration_failed,bits,bit_errors,ber,prefix_ber,suppressed_pulses,resyncs,seed";

pub fn write_ber_csv<W: Write>(rows: &[BerResult], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{BER_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.order_m,
            r.padding_n0,
            fmt_sig(r.r_l_hz),
            fmt_sig(r.distance_m),
            fmt_sig(r.angle_deg),
            fmt_sig(r.snr_db),
            fmt_sig(r.threshold_normalized),
            r.calibration_failed as u8,
            r.transmitted_bits,
            r.bit_errors,
            fmt_sig(r.ber),
            fmt_sig(r.prefix_ber),
            r.suppressed_pulses,
            r.resync_count,
            r.seed,
        )?;
    }
    Ok(())
}

pub const TEXTSIM_CSV_HEADER: &str = "r_l_hz,scheme,m,n0,scheme_rate_hz,chips,airtime_s,chars_per_s,ratio_vs_ook,pulses_per_char,suppressed_pulses";

pub fn write_textsim_csv<W: Write>(results: &[ThroughputResult], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{TEXTSIM_CSV_HEADER}")?;
    for r in results {
        for s in &r.schemes {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                fmt_sig(r.r_l_hz),
                s.scheme,
                s.order_m,
                s.padding_n0,
                fmt_sig(s.r_l_hz),
                s.chips,
                fmt_sig(s.airtime_s),
                fmt_sig(s.chars_per_s),
                fmt_sig(s.ratio_vs_ook),
                fmt_sig(s.pulses_per_char),
                s.suppressed_pulses,
            )?;
        }
    }
    Ok(())
}
