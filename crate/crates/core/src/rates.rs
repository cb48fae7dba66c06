//! Closed-form bit rates, repetition-rate limits and power efficiency.
//!
//! Rate formulas are evaluated in exact rational arithmetic and converted to
//! `f64` only at the end.
//!
//! | scheme   | mean chips per symbol | bit rate                     |
//! |----------|-----------------------|------------------------------|
//! | OOK      | `M`                   | `R_L`                        |
//! | PPM      | `2^M`                 | `M R_L / 2^M`                |
//! | DPPM     | `(2^M + 1) / 2`       | `2 M R_L / (2^M + 1)`        |
//! | IDPPM    | `(2^M + 3) / 2`       | `2 M R_L / (2^M + 3)`        |
//! | VCD-DPPM | `(2 N0 + 2^M + 1)/2`  | `2 M R_L / (2 N0 + 2^M + 1)` |

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::{self, CloudError, CloudParams};
use crate::codec::{self, CodecError, MappingTable, Scheme, SchemeSpec};
use crate::output::fmt_sig;

/// Pulses simulated when searching for a sustainable repetition rate.
pub const RATE_SEARCH_HORIZON: usize = 10_000;

/// The fixed PPM burst pattern used as the second worst-case probe.
pub const PPM_BURST_PATTERN: &str = "11000";

#[derive(Debug, Error)]
pub enum RateError {
    #[error("laser rate must be positive and finite, got {0}")]
    Rate(f64),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Cloud(#[from] CloudError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserParams {
    pub r_l_hz: f64,
    #[serde(default = "default_energy")]
    pub pulse_energy_mj: f64,
}

fn default_energy() -> f64 {
    60.0
}

impl LaserParams {
    pub fn new(r_l_hz: f64, pulse_energy_mj: f64) -> Result<Self, RateError> {
        let p = LaserParams {
            r_l_hz,
            pulse_energy_mj,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), RateError> {
        if !(self.r_l_hz.is_finite() && self.r_l_hz > 0.0) {
            return Err(RateError::Rate(self.r_l_hz));
        }
        if !(self.pulse_energy_mj.is_finite() && self.pulse_energy_mj > 0.0) {
            return Err(RateError::Rate(self.pulse_energy_mj));
        }
        Ok(())
    }

    /// Chip duration `T_c = 1 / R_L`.
    pub fn chip_duration_s(&self) -> f64 {
        1.0 / self.r_l_hz
    }
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn pow2(m: u32) -> BigRational {
    BigRational::from_integer(BigInt::one() << m as usize)
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn exact_rate(r_l_hz: f64) -> Result<BigRational, RateError> {
    if !(r_l_hz.is_finite() && r_l_hz > 0.0) {
        return Err(RateError::Rate(r_l_hz));
    }
    BigRational::from_float(r_l_hz).ok_or(RateError::Rate(r_l_hz))
}

/// Average symbol length in chips for uniformly distributed values.
pub fn mean_symbol_chips_exact(spec: &SchemeSpec) -> BigRational {
    let m = spec.order_m;
    match spec.scheme {
        Scheme::Ook => BigRational::from_integer(BigInt::from(m)),
        Scheme::Ppm => pow2(m),
        Scheme::Dppm => (pow2(m) + ratio(1, 1)) / ratio(2, 1),
        Scheme::Idppm => (pow2(m) + ratio(3, 1)) / ratio(2, 1),
        Scheme::VcdDppm => {
            (ratio(2 * spec.padding_n0 as i64, 1) + pow2(m) + ratio(1, 1)) / ratio(2, 1)
        }
    }
}

pub fn bit_rate_exact(spec: &SchemeSpec, r_l_hz: &BigRational) -> BigRational {
    let m = BigRational::from_integer(BigInt::from(spec.order_m));
    m * r_l_hz / mean_symbol_chips_exact(spec)
}

/// Bits per second at laser rate `r_l_hz`.
pub fn bit_rate(spec: &SchemeSpec, r_l_hz: f64) -> Result<f64, RateError> {
    spec.validate()?;
    Ok(to_f64(&bit_rate_exact(spec, &exact_rate(r_l_hz)?)))
}

/// What limits a scheme's laser repetition rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Binding {
    /// Back-to-back pulses are possible: `R_max`.
    ContinuousPulses,
    /// At least one empty slot between pulses: `2 R_max`.
    GuardSlot,
    /// Symbol ending in its last slot followed by one starting in its first.
    PpmAdjacency,
    /// The fixed `11000` burst.
    PpmBurst,
    /// Guard zeros keep every gap at least `T_v`; the cloud never binds.
    Unbounded,
}

impl Binding {
    pub fn name(self) -> &'static str {
        match self {
            Binding::ContinuousPulses => "continuous-pulses",
            Binding::GuardSlot => "guard-slot",
            Binding::PpmAdjacency => "ppm-adjacency",
            Binding::PpmBurst => "ppm-burst",
            Binding::Unbounded => "unbounded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxRate {
    pub rate_hz: f64,
    pub binding: Binding,
    /// PPM only: sustainable rates of the adjacency and burst probes.
    pub ppm_probes: Option<(f64, f64)>,
}

/// The two-symbol PPM cycle `[pulse in last slot][pulse in first slot]`.
pub fn ppm_adjacency_pattern(order_m: u32) -> Vec<bool> {
    let l = 1usize << order_m;
    let mut p = vec![false; 2 * l];
    p[l - 1] = true;
    p[l] = true;
    p
}

/// Highest laser rate at which `scheme` avoids vapor-cloud suppression.
pub fn max_allowed_rate(
    scheme: Scheme,
    params: &CloudParams,
    order_m: u32,
) -> Result<MaxRate, RateError> {
    params.validate()?;
    let r_max = params.r_max_hz();
    let simple = |rate_hz, binding| MaxRate {
        rate_hz,
        binding,
        ppm_probes: None,
    };
    Ok(match scheme {
        Scheme::Ook | Scheme::Dppm => simple(r_max, Binding::ContinuousPulses),
        Scheme::Idppm => simple(2.0 * r_max, Binding::GuardSlot),
        Scheme::VcdDppm => simple(f64::INFINITY, Binding::Unbounded),
        Scheme::Ppm => {
            SchemeSpec::new(Scheme::Ppm, order_m)?;
            let adjacency = cloud::max_sustainable_rate(
                &ppm_adjacency_pattern(order_m),
                params,
                RATE_SEARCH_HORIZON,
            )?
            .rate_hz;
            let burst = cloud::max_sustainable_rate(
                &codec::parse_pattern(PPM_BURST_PATTERN)?,
                params,
                RATE_SEARCH_HORIZON,
            )?
            .rate_hz;
            let (rate_hz, binding) = if burst <= adjacency {
                (burst, Binding::PpmBurst)
            } else {
                (adjacency, Binding::PpmAdjacency)
            };
            MaxRate {
                rate_hz,
                binding,
                ppm_probes: Some((adjacency, burst)),
            }
        }
    })
}

/// `(1 + (M - 2) / M) * 100`.
pub fn power_efficiency_exact(order_m: u32) -> BigRational {
    let m = order_m as i64;
    (ratio(1, 1) + ratio(m - 2, m)) * ratio(100, 1)
}

/// Power efficiency of a one-pulse-per-symbol scheme relative to OOK, in
/// percent. Holds for PPM, DPPM, IDPPM and VCD-DPPM alike.
pub fn power_efficiency_vs_ook(order_m: u32) -> Result<f64, RateError> {
    if order_m == 0 || order_m > codec::MAX_ORDER {
        return Err(CodecError::OrderOutOfRange { order_m }.into());
    }
    Ok(to_f64(&power_efficiency_exact(order_m)))
}

/// Measured pulse counts of a text under OOK and under another scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseRatio {
    pub ook_pulses: usize,
    pub other_pulses: usize,
}

impl PulseRatio {
    /// `ook / other * 100`; `None` when either count is zero.
    pub fn ratio_pct(&self) -> Option<f64> {
        (self.ook_pulses > 0 && self.other_pulses > 0)
            .then(|| self.ook_pulses as f64 / self.other_pulses as f64 * 100.0)
    }

    pub fn is_degenerate(&self) -> bool {
        self.ratio_pct().is_none()
    }
}

pub fn empirical_pulse_ratio(
    text: &str,
    table: &MappingTable,
    other: &SchemeSpec,
) -> Result<PulseRatio, RateError> {
    let ook = SchemeSpec::new(Scheme::Ook, 8)?;
    let a = codec::encode_text(text, table, &ook, 1.0)?;
    let b = codec::encode_text(text, table, other, 1.0)?;
    Ok(PulseRatio {
        ook_pulses: a.pulse_count(),
        other_pulses: b.pulse_count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub scheme: Scheme,
    pub order_m: u32,
    pub r_l_hz: f64,
    pub padding_n0: u32,
    #[serde(with = "crate::output::nonfinite")]
    pub max_allowed_hz: f64,
    pub binding: Binding,
    pub feasible: bool,
    pub bit_rate_bps: f64,
    pub mean_symbol_s: f64,
    pub power_efficiency_pct: f64,
}

/// Evaluates one sweep point. VCD-DPPM gets `N0` from the cloud parameters.
pub fn rate_report(
    scheme: Scheme,
    order_m: u32,
    r_l_hz: f64,
    params: &CloudParams,
) -> Result<RateReport, RateError> {
    let n0 = if scheme == Scheme::VcdDppm {
        cloud::required_padding(r_l_hz, params)
    } else {
        0
    };
    let spec = SchemeSpec::with_padding(scheme, order_m, n0)?;
    let limit = max_allowed_rate(scheme, params, order_m)?;
    let rate = exact_rate(r_l_hz)?;
    let mean_s = mean_symbol_chips_exact(&spec) / &rate;
    let eff = if scheme == Scheme::Ook {
        100.0
    } else {
        power_efficiency_vs_ook(order_m)?
    };
    Ok(RateReport {
        scheme,
        order_m,
        r_l_hz,
        padding_n0: n0,
        max_allowed_hz: limit.rate_hz,
        binding: limit.binding,
        // Search results carry ~1e-3 Hz of bisection slack.
        feasible: r_l_hz <= limit.rate_hz + 0.01,
        bit_rate_bps: to_f64(&bit_rate_exact(&spec, &rate)),
        mean_symbol_s: to_f64(&mean_s),
        power_efficiency_pct: eff,
    })
}

/// Full cartesian sweep in scheme, `M`, rate order.
pub fn rate_sweep(
    orders: &[u32],
    rates_hz: &[f64],
    params: &CloudParams,
) -> Result<Vec<RateReport>, RateError> {
    let mut rows = Vec::new();
    for scheme in Scheme::ALL {
        for &m in orders {
            for &r in rates_hz {
                rows.push(rate_report(scheme, m, r, params)?);
            }
        }
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str =
    "scheme,m,r_l_hz,n0,bit_rate_bps,power_efficiency_pct,max_allowed_hz,feasible,binding";

pub fn write_sweep_csv<W: Write>(rows: &[RateReport], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.order_m,
            fmt_sig(r.r_l_hz),
            r.padding_n0,
            fmt_sig(r.bit_rate_bps),
            fmt_sig(r.power_efficiency_pct),
            fmt_sig(r.max_allowed_hz),
            r.feasible as u8,
            r.binding.name()
        )?;
    }
    Ok(())
}
