//! Vapor-cloud suppression model.
//!
//! The cloud is a leaky bucket. Its level drains linearly at `1 / T_v` per
//! second and every emitted pulse adds `delta`. A pulse is suppressed (no
//! acoustic transient) when the drained level has reached `threshold`, or
//! when it follows the previous pulse by less than the relaxation time.
//! Suppressed pulses add no vapor.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::SlotStream;
use crate::output::fmt_sig;

/// Absolute slack on level comparisons, so that levels which are equal in
/// exact arithmetic compare equal after floating point drift.
const LEVEL_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CloudError {
    #[error("invalid cloud parameters: {0}")]
    Params(String),
    #[error("pulse time {t_pulse} s is not after the previous pulse at {last} s")]
    Ordering { t_pulse: f64, last: f64 },
    #[error("pattern contains no pulses")]
    NoPulses,
    #[error("horizon must be at least {min} pulses, got {got}")]
    Horizon { min: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudParams {
    /// Vapor cloud delay `T_v`, seconds.
    pub t_v_s: f64,
    /// Minimum spacing between laser pulses, seconds.
    #[serde(default = "default_relax")]
    pub t_relax_s: f64,
    #[serde(default = "default_one")]
    pub delta: f64,
    #[serde(default = "default_one")]
    pub threshold: f64,
}

fn default_relax() -> f64 {
    1e-3
}

fn default_one() -> f64 {
    1.0
}

impl Default for CloudParams {
    /// Laboratory values: `R_max` = 16 Hz.
    fn default() -> Self {
        CloudParams {
            t_v_s: 0.0625,
            t_relax_s: default_relax(),
            delta: 1.0,
            threshold: 1.0,
        }
    }
}

impl CloudParams {
    pub fn new(t_v_s: f64) -> Result<Self, CloudError> {
        let p = CloudParams {
            t_v_s,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters whose `T_v` is `1 / r_max_hz`.
    pub fn from_r_max(r_max_hz: f64) -> Result<Self, CloudError> {
        Self::new(1.0 / r_max_hz)
    }

    pub fn validate(&self) -> Result<(), CloudError> {
        let bad = |m: &str| Err(CloudError::Params(m.to_string()));
        if !(self.t_v_s.is_finite() && self.t_v_s > 0.0) {
            return bad("t_v_s must be positive");
        }
        if !(self.t_relax_s.is_finite() && self.t_relax_s >= 0.0) {
            return bad("t_relax_s must be non-negative");
        }
        if self.t_v_s <= self.t_relax_s {
            return bad("t_v_s must exceed t_relax_s");
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return bad("threshold must be positive");
        }
        Ok(())
    }

    /// Highest continuous-pulse rate, `1 / T_v`.
    pub fn r_max_hz(&self) -> f64 {
        1.0 / self.t_v_s
    }

    /// Same physics with every time constant multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        CloudParams {
            t_v_s: self.t_v_s * factor,
            t_relax_s: self.t_relax_s * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CloudState {
    pub level: f64,
    pub last_pulse_time_s: Option<f64>,
}

/// Fires one laser pulse at `t_pulse` and returns whether it produced an
/// acoustic transient.
pub fn step(
    state: &CloudState,
    params: &CloudParams,
    t_pulse: f64,
) -> Result<(bool, CloudState), CloudError> {
    let (pre_level, gap) = match state.last_pulse_time_s {
        Some(last) => {
            if t_pulse.is_nan() || t_pulse <= last {
                return Err(CloudError::Ordering { t_pulse, last });
            }
            let gap = t_pulse - last;
            ((state.level - gap / params.t_v_s).max(0.0), Some(gap))
        }
        None => (state.level.max(0.0), None),
    };
    Ok(step_inner(pre_level, gap, params, t_pulse))
}

fn step_inner(
    pre_level: f64,
    gap: Option<f64>,
    params: &CloudParams,
    t_pulse: f64,
) -> (bool, CloudState) {
    let clouded = pre_level >= params.threshold - LEVEL_EPS;
    let too_soon = gap.is_some_and(|g| g < params.t_relax_s * (1.0 - 1e-9));
    let emitted = !(clouded || too_soon);
    let level = if emitted {
        pre_level + params.delta
    } else {
        pre_level
    };
    (
        emitted,
        CloudState {
            level,
            last_pulse_time_s: Some(t_pulse),
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub chip_index: usize,
    pub time_s: f64,
    pub emitted: bool,
    pub pre_level: f64,
}

/// Outcome of every laser pulse in a train, in firing order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmissionTrace {
    pub records: Vec<PulseRecord>,
}

impl EmissionTrace {
    pub fn pulses(&self) -> usize {
        self.records.len()
    }

    pub fn suppressed(&self) -> usize {
        self.records.iter().filter(|r| !r.emitted).count()
    }

    /// Position (in pulse order) of the first suppressed pulse.
    pub fn first_suppression(&self) -> Option<usize> {
        self.records.iter().position(|r| !r.emitted)
    }

    pub fn emitted_mask(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.emitted).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time_s,emitted,pre_level")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{}",
                fmt_sig(r.time_s),
                r.emitted as u8,
                fmt_sig(r.pre_level)
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Steps the cloud at every pulse of `stream`. Empty chips touch no state.
pub fn simulate_train(
    stream: &SlotStream,
    params: &CloudParams,
) -> Result<EmissionTrace, CloudError> {
    params.validate()?;
    let dt = stream.slot_duration_s();
    let mut state = CloudState::default();
    let mut records = Vec::with_capacity(stream.pulse_count());
    let mut last_index: Option<usize> = None;
    for i in stream.pulse_indices() {
        let t = i as f64 * dt;
        // Gaps come from chip counts so long streams do not accumulate drift.
        let gap = last_index.map(|j| (i - j) as f64 * dt);
        let pre_level = match gap {
            Some(g) => (state.level - g / params.t_v_s).max(0.0),
            None => 0.0,
        };
        let (emitted, next) = step_inner(pre_level, gap, params, t);
        records.push(PulseRecord {
            chip_index: i,
            time_s: t,
            emitted,
            pre_level,
        });
        state = next;
        last_index = Some(i);
    }
    Ok(EmissionTrace { records })
}

/// Returns the stream as it arrives underwater: suppressed pulses become
/// empty slots.
pub fn gate_stream(
    stream: &SlotStream,
    params: &CloudParams,
) -> Result<(SlotStream, EmissionTrace), CloudError> {
    let trace = simulate_train(stream, params)?;
    let mut chips = stream.chips().to_vec();
    for r in trace.records.iter().filter(|r| !r.emitted) {
        chips[r.chip_index] = false;
    }
    let gated =
        SlotStream::new(chips, stream.slot_duration_s()).expect("slot duration already validated");
    Ok((gated, trace))
}

/// Guard zeros `N0 = ceil(R_L * T_v - 1)`, floored at zero.
pub fn required_padding(r_l_hz: f64, params: &CloudParams) -> u32 {
    let x = r_l_hz * params.t_v_s - 1.0;
    if x <= 0.0 {
        return 0;
    }
    // R_L / R_max is often an integer in exact arithmetic; don't let a
    // rounding error in the last bit add a whole chip.
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u32
    } else {
        x.ceil() as u32
    }
}

/// Highest chip rate at which a repeating pattern runs without suppression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SustainableRate {
    /// Largest passing rate found by bisection, within 1e-3 Hz.
    pub rate_hz: f64,
    /// Steady-state drain bound: `pulses * delta <= period / T_v`.
    pub analytic_bound_hz: f64,
    /// Bound from the relaxation gate on the shortest cyclic gap.
    pub relax_bound_hz: f64,
}

pub const MIN_HORIZON: usize = 1000;

pub fn max_sustainable_rate(
    pattern: &[bool],
    params: &CloudParams,
    horizon: usize,
) -> Result<SustainableRate, CloudError> {
    params.validate()?;
    if horizon < MIN_HORIZON {
        return Err(CloudError::Horizon {
            min: MIN_HORIZON,
            got: horizon,
        });
    }
    let pulses = pattern.iter().filter(|&&c| c).count();
    if pulses == 0 {
        return Err(CloudError::NoPulses);
    }
    let n = pattern.len() as f64;
    let analytic_bound_hz = n / (pulses as f64 * params.delta * params.t_v_s);
    let relax_bound_hz = if params.t_relax_s > 0.0 {
        min_cyclic_gap(pattern) as f64 / params.t_relax_s
    } else {
        f64::INFINITY
    };

    // Every gap is at least one chip, so at 1/T_v the cloud always drains.
    let mut lo = params.r_max_hz();
    let mut hi = lo * 2.0;
    while passes(pattern, params, horizon, hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if passes(pattern, params, horizon, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SustainableRate {
        rate_hz: lo,
        analytic_bound_hz,
        relax_bound_hz,
    })
}

fn min_cyclic_gap(pattern: &[bool]) -> usize {
    let idx: Vec<usize> = pattern
        .iter()
        .enumerate()
        .filter_map(|(i, &c)| c.then_some(i))
        .collect();
    let wrap = idx[0] + pattern.len() - idx[idx.len() - 1];
    idx.windows(2).map(|w| w[1] - w[0]).fold(wrap, usize::min)
}

/// True when `horizon` pulses of the repeating pattern are all emitted.
fn passes(pattern: &[bool], params: &CloudParams, horizon: usize, rate_hz: f64) -> bool {
    let dt = 1.0 / rate_hz;
    let mut level = 0.0;
    let mut last: Option<usize> = None;
    let mut fired = 0;
    let mut offset = 0;
    loop {
        for (k, &c) in pattern.iter().enumerate() {
            if !c {
                continue;
            }
            let i = offset + k;
            let gap = last.map(|j| (i - j) as f64 * dt);
            let pre = match gap {
                Some(g) => (level - g / params.t_v_s).max(0.0),
                None => 0.0,
            };
            let (emitted, st) = step_inner(pre, gap, params, i as f64 * dt);
            if !emitted {
                return false;
            }
            level = st.level;
            last = Some(i);
            fired += 1;
            if fired >= horizon {
                return true;
            }
        }
        offset += pattern.len();
    }
}
