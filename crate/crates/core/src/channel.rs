//! Underwater acoustic link budget.
//!
//! `SNR = SL - TL - NL`, where
//!
//! * `SL` comes from a laboratory calibration table keyed by pulse energy and
//!   receiver angle,
//! * `TL = k * 10 log10(D) + alpha(f_c) * D / 1000` with Thorp absorption,
//! * `NL` integrates the four-component ambient noise PSD (turbulence,
//!   shipping, wind, thermal) over the receiver band.
//!
//! Detection is a per-slot threshold test on a Gaussian amplitude.

use std::io::Read;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid channel parameters: {0}")]
    Params(String),
    #[error("no source level for {energy_mj} mJ at {angle_deg} deg")]
    Lookup { energy_mj: f64, angle_deg: f64 },
    #[error("source level table: {0}")]
    Table(String),
    #[error("source level CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// Thorp absorption in dB/km, `f` in kHz.
pub fn thorp_absorption(f_khz: f64) -> f64 {
    let f2 = f_khz * f_khz;
    0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 + 0.003
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub distance_m: f64,
    #[serde(default)]
    pub angle_deg: f64,
    #[serde(default = "default_k")]
    pub spreading_factor_k: f64,
    #[serde(default = "default_shipping")]
    pub shipping_activity_s: f64,
    #[serde(default)]
    pub wind_speed_mps: f64,
    #[serde(default = "default_band")]
    pub band_hz: (f64, f64),
    #[serde(default = "default_center")]
    pub center_freq_khz: f64,
}

fn default_k() -> f64 {
    1.5
}
fn default_shipping() -> f64 {
    0.5
}
fn default_band() -> (f64, f64) {
    (9_000.0, 11_000.0)
}
fn default_center() -> f64 {
    10.0
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::at_distance(500.0)
    }
}

impl ChannelParams {
    pub fn at_distance(distance_m: f64) -> Self {
        ChannelParams {
            distance_m,
            angle_deg: 0.0,
            spreading_factor_k: default_k(),
            shipping_activity_s: default_shipping(),
            wind_speed_mps: 0.0,
            band_hz: default_band(),
            center_freq_khz: default_center(),
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |m: &str| Err(ChannelError::Params(m.to_string()));
        if !(self.distance_m.is_finite() && self.distance_m >= 1.0) {
            return bad("distance_m must be at least 1 m");
        }
        if !(1.0..=2.0).contains(&self.spreading_factor_k) {
            return bad("spreading_factor_k must lie in [1, 2]");
        }
        if !(0.0..=1.0).contains(&self.shipping_activity_s) {
            return bad("shipping_activity_s must lie in [0, 1]");
        }
        if !(self.wind_speed_mps.is_finite() && self.wind_speed_mps >= 0.0) {
            return bad("wind_speed_mps must be non-negative");
        }
        let (lo, hi) = self.band_hz;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
            return bad("band_hz must satisfy 0 < f_low < f_high");
        }
        if !(self.center_freq_khz.is_finite() && self.center_freq_khz > 0.0) {
            return bad("center_freq_khz must be positive");
        }
        Ok(())
    }
}

/// Spreading plus absorption loss in dB.
pub fn transmission_loss(params: &ChannelParams) -> Result<f64, ChannelError> {
    params.validate()?;
    let d = params.distance_m;
    Ok(params.spreading_factor_k * 10.0 * d.log10()
        + thorp_absorption(params.center_freq_khz) * d / 1000.0)
}

/// Ambient noise PSD components in dB re 1 uPa^2/Hz, `f` in kHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePsd {
    pub turbulence: f64,
    pub shipping: f64,
    pub wind: f64,
    pub thermal: f64,
}

impl NoisePsd {
    pub fn at(f_khz: f64, shipping_s: f64, wind_mps: f64) -> Self {
        let lf = f_khz.log10();
        NoisePsd {
            turbulence: 17.0 - 30.0 * lf,
            shipping: 40.0 + 20.0 * (shipping_s - 0.5) + 26.0 * lf - 60.0 * (f_khz + 0.03).log10(),
            wind: 50.0 + 7.5 * wind_mps.sqrt() + 20.0 * lf - 40.0 * (f_khz + 0.4).log10(),
            thermal: -15.0 + 20.0 * lf,
        }
    }

    /// Power sum in linear units (uPa^2/Hz).
    pub fn total_linear(&self) -> f64 {
        [self.turbulence, self.shipping, self.wind, self.thermal]
            .iter()
            .map(|db| 10f64.powf(db / 10.0))
            .sum()
    }
}

/// Frequency range over which each PSD component is an accepted model.
pub const COMPONENT_RANGES_HZ: [(&str, f64, f64); 4] = [
    ("turbulence", 0.1, 10.0),
    ("shipping", 10.0, 100.0),
    ("wind", 100.0, 100_000.0),
    ("thermal", 100_000.0, 1_000_000.0),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevel {
    /// dB re 1 uPa, integrated over the band.
    pub level_db: f64,
    /// Set when the band leaves the 0.1 Hz - 1 MHz span covered by the
    /// component models.
    pub out_of_range: bool,
}

pub const MIN_NOISE_POINTS: usize = 1000;

/// Integrated ambient noise with the default resolution.
pub fn ambient_noise_level(params: &ChannelParams) -> Result<NoiseLevel, ChannelError> {
    ambient_noise_level_with(params, 2 * MIN_NOISE_POINTS)
}

/// Composite Simpson integration of the linear PSD over `intervals`
/// sub-intervals (rounded up to even, at least [`MIN_NOISE_POINTS`]).
pub fn ambient_noise_level_with(
    params: &ChannelParams,
    intervals: usize,
) -> Result<NoiseLevel, ChannelError> {
    params.validate()?;
    let (lo, hi) = params.band_hz;
    let mut n = intervals.max(MIN_NOISE_POINTS);
    if n % 2 == 1 {
        n += 1;
    }
    let psd = |f_hz: f64| {
        NoisePsd::at(
            f_hz / 1000.0,
            params.shipping_activity_s,
            params.wind_speed_mps,
        )
        .total_linear()
    };
    let h = (hi - lo) / n as f64;
    let mut sum = psd(lo) + psd(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * psd(lo + i as f64 * h);
    }
    let power = sum * h / 3.0;
    let (min_hz, max_hz) = (COMPONENT_RANGES_HZ[0].1, COMPONENT_RANGES_HZ[3].2);
    Ok(NoiseLevel {
        level_db: 10.0 * power.log10(),
        out_of_range: lo < min_hz || hi > max_hz,
    })
}

/// One calibration point: source level at 1 m for a pulse energy and angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceLevelRow {
    pub energy_mj: f64,
    pub angle_deg: f64,
    pub sl_db: f64,
}

/// Hydrophone used for the raw voltage measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hydrophone {
    /// Receive sensitivity, dB re 1 V/uPa (negative).
    pub sensitivity_db: f64,
    /// Source-to-hydrophone distance during measurement, metres.
    pub distance_m: f64,
}

impl Hydrophone {
    /// `SL = 20 log10(Vpp / 2) - sensitivity + 20 log10(d / 1 m)`.
    pub fn source_level(&self, vpp_volts: f64) -> f64 {
        20.0 * (vpp_volts / 2.0).log10() - self.sensitivity_db + 20.0 * self.distance_m.log10()
    }
}

/// How [`SourceLevelTable::lookup`] treats energies between rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    #[default]
    Exact,
    /// Linear in `log10(energy)` at a fixed angle; no extrapolation.
    LogLinear,
}

const KEY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SourceLevelRow>", into = "Vec<SourceLevelRow>")]
pub struct SourceLevelTable {
    rows: Vec<SourceLevelRow>,
}

impl TryFrom<Vec<SourceLevelRow>> for SourceLevelTable {
    type Error = ChannelError;

    fn try_from(rows: Vec<SourceLevelRow>) -> Result<Self, Self::Error> {
        Self::new(rows)
    }
}

impl From<SourceLevelTable> for Vec<SourceLevelRow> {
    fn from(t: SourceLevelTable) -> Self {
        t.rows
    }
}

impl SourceLevelTable {
    /// Rows are sorted by angle then energy. SL must not decrease with
    /// energy at a fixed angle.
    pub fn new(mut rows: Vec<SourceLevelRow>) -> Result<Self, ChannelError> {
        if rows.is_empty() {
            return Err(ChannelError::Table("no rows".into()));
        }
        for r in &rows {
            if !(r.energy_mj.is_finite() && r.energy_mj > 0.0 && r.sl_db.is_finite()) {
                return Err(ChannelError::Table(format!("bad row {r:?}")));
            }
        }
        rows.sort_by(|a, b| {
            a.angle_deg
                .total_cmp(&b.angle_deg)
                .then(a.energy_mj.total_cmp(&b.energy_mj))
        });
        for w in rows.windows(2) {
            if (w[0].angle_deg - w[1].angle_deg).abs() > KEY_TOL {
                continue;
            }
            if (w[0].energy_mj - w[1].energy_mj).abs() <= KEY_TOL {
                return Err(ChannelError::Table(format!(
                    "duplicate entry for {} mJ at {} deg",
                    w[0].energy_mj, w[0].angle_deg
                )));
            }
            if w[1].sl_db < w[0].sl_db {
                return Err(ChannelError::Table(format!(
                    "source level decreases from {} mJ to {} mJ at {} deg",
                    w[0].energy_mj, w[1].energy_mj, w[0].angle_deg
                )));
            }
        }
        Ok(SourceLevelTable { rows })
    }

    pub fn rows(&self) -> &[SourceLevelRow] {
        &self.rows
    }

    /// Reads `energy_mj,angle_deg,sl_db` or raw `energy_mj,angle_deg,vpp_volts`
    /// CSV; the header decides. Raw voltages need `hydrophone`.
    pub fn from_csv<R: Read>(
        reader: R,
        hydrophone: Option<&Hydrophone>,
    ) -> Result<Self, ChannelError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (ei, ai) = match (col("energy_mj"), col("angle_deg")) {
            (Some(e), Some(a)) => (e, a),
            _ => {
                return Err(ChannelError::Table(
                    "header must contain energy_mj and angle_deg".into(),
                ))
            }
        };
        enum Mode {
            Sl(usize),
            Vpp(usize, Hydrophone),
        }
        let mode = match (col("sl_db"), col("vpp_volts")) {
            (Some(i), None) => Mode::Sl(i),
            (None, Some(i)) => match hydrophone {
                Some(h) => Mode::Vpp(i, *h),
                None => {
                    return Err(ChannelError::Table(
                        "vpp_volts input needs hydrophone sensitivity and distance".into(),
                    ))
                }
            },
            _ => {
                return Err(ChannelError::Table(
                    "header must contain exactly one of sl_db, vpp_volts".into(),
                ))
            }
        };
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64, ChannelError> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| ChannelError::Table(format!("row {}: bad number", line + 2)))
            };
            let sl_db = match &mode {
                Mode::Sl(i) => num(*i)?,
                Mode::Vpp(i, h) => h.source_level(num(*i)?),
            };
            rows.push(SourceLevelRow {
                energy_mj: num(ei)?,
                angle_deg: num(ai)?,
                sl_db,
            });
        }
        Self::new(rows)
    }

    pub fn to_csv(&self) -> String {
        use crate::output::fmt_sig;
        let mut s = String::from("energy_mj,angle_deg,sl_db\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{}\n",
                fmt_sig(r.energy_mj),
                fmt_sig(r.angle_deg),
                fmt_sig(r.sl_db)
            ));
        }
        s
    }

    pub fn lookup(
        &self,
        energy_mj: f64,
        angle_deg: f64,
        interp: Interpolation,
    ) -> Result<f64, ChannelError> {
        let miss = || ChannelError::Lookup {
            energy_mj,
            angle_deg,
        };
        let same_angle: Vec<&SourceLevelRow> = self
            .rows
            .iter()
            .filter(|r| (r.angle_deg - angle_deg).abs() <= KEY_TOL)
            .collect();
        if let Some(r) = same_angle
            .iter()
            .find(|r| (r.energy_mj - energy_mj).abs() <= KEY_TOL)
        {
            return Ok(r.sl_db);
        }
        if interp == Interpolation::Exact || energy_mj.is_nan() || energy_mj <= 0.0 {
            return Err(miss());
        }
        let pair = same_angle
            .windows(2)
            .find(|w| w[0].energy_mj < energy_mj && energy_mj < w[1].energy_mj)
            .ok_or_else(miss)?;
        let (a, b) = (pair[0], pair[1]);
        let t =
            (energy_mj.log10() - a.energy_mj.log10()) / (b.energy_mj.log10() - a.energy_mj.log10());
        Ok(a.sl_db + t * (b.sl_db - a.sl_db))
    }
}

/// Per-slot SNR in dB: `SL - TL - NL`.
pub fn slot_snr(
    table: &SourceLevelTable,
    energy_mj: f64,
    channel: &ChannelParams,
    interp: Interpolation,
) -> Result<f64, ChannelError> {
    let sl = table.lookup(energy_mj, channel.angle_deg, interp)?;
    Ok(snr_from_parts(
        sl,
        transmission_loss(channel)?,
        ambient_noise_level(channel)?.level_db,
    ))
}

pub fn snr_from_parts(sl_db: f64, tl_db: f64, nl_db: f64) -> f64 {
    sl_db - tl_db - nl_db
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Mean pulse amplitude in noise-sigma units for an SNR in dB.
pub fn pulse_amplitude(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 20.0)
}

/// `(p_miss, p_false_alarm)` for one slot. Noise has unit sigma, a pulse
/// slot has mean `mu = 10^(SNR/20)`, and the decision threshold sits at
/// `threshold_normalized * mu`.
pub fn slot_detection_probs(snr_db: f64, threshold_normalized: f64) -> (f64, f64) {
    if snr_db == f64::INFINITY {
        return (0.0, 0.0);
    }
    let mu = pulse_amplitude(snr_db);
    let theta = threshold_normalized * mu;
    (std_normal_cdf(theta - mu), 1.0 - std_normal_cdf(theta))
}
