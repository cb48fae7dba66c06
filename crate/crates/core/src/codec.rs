//! Symbol codecs for OOK, PPM, DPPM, IDPPM and VCD-DPPM.
//!
//! Every scheme maps an `M`-bit source value onto a run of chips. A chip is
//! one laser repetition interval; `true` means a pulse is fired in that slot.
//!
//! ```text
//! value = 1, M = 2
//!   OOK        01          (M-bit pattern, MSB first)
//!   PPM        0100        (L = 2^M slots, pulse at slot `value`)
//!   DPPM       01          (PPM with the trailing zeros removed)
//!   IDPPM      001         (one guard zero in front of DPPM)
//!   VCD-DPPM   0...001     (N0 guard zeros in front of DPPM)
//! ```
//!
//! The DPPM family is self-terminating: a symbol ends at its pulse, so the
//! receiver only counts empty slots since the previous pulse.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported source-bits-per-symbol.
pub const MAX_ORDER: u32 = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("order M = {order_m} outside 1..={MAX_ORDER}")]
    OrderOutOfRange { order_m: u32 },
    #[error("padding N0 = {padding_n0} is only meaningful for VCD-DPPM, not {scheme}")]
    PaddingNotAllowed { scheme: Scheme, padding_n0: u32 },
    #[error("value {value} outside alphabet of size {alphabet}")]
    ValueOutOfRange { value: u64, alphabet: u64 },
    #[error("synchronization error at chip {chip}: pulse arrived inside the guard interval")]
    Sync { chip: usize },
    #[error("overlong gap ending at chip {chip}: decoded value {value} does not fit the alphabet (missed pulse?)")]
    OverlongGap { chip: usize, value: u64 },
    #[error("frame {frame} carries {pulses} pulses, expected exactly one")]
    InvalidFrame { frame: usize, pulses: usize },
    #[error("alphabet of {alphabet} symbols exceeds capacity 2^{order_m}")]
    Capacity { alphabet: usize, order_m: u32 },
    #[error("symbol {symbol:?} (U+{code:04X}) is not mapped", code = *symbol as u32)]
    Unmapped { symbol: char },
    #[error("character {symbol:?} cannot be sent as an 8-bit OOK code")]
    NotEightBit { symbol: char },
    #[error("slot duration must be positive and finite, got {0}")]
    SlotDuration(f64),
    #[error("probabilities must be finite, non-negative and not all zero")]
    Probability,
    #[error("invalid chip pattern {0:?}: expected a non-empty string of 0/1")]
    Pattern(String),
    #[error("mapping table line {line}: {reason}")]
    TableParse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Ook,
    Ppm,
    Dppm,
    Idppm,
    VcdDppm,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Ook,
        Scheme::Ppm,
        Scheme::Dppm,
        Scheme::Idppm,
        Scheme::VcdDppm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ook => "OOK",
            Scheme::Ppm => "PPM",
            Scheme::Dppm => "DPPM",
            Scheme::Idppm => "IDPPM",
            Scheme::VcdDppm => "VCD-DPPM",
        }
    }

    /// True for the variable-length, self-terminating schemes.
    pub fn is_differential(self) -> bool {
        matches!(self, Scheme::Dppm | Scheme::Idppm | Scheme::VcdDppm)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match norm.as_str() {
            "ook" => Ok(Scheme::Ook),
            "ppm" => Ok(Scheme::Ppm),
            "dppm" => Ok(Scheme::Dppm),
            "idppm" => Ok(Scheme::Idppm),
            "vcddppm" => Ok(Scheme::VcdDppm),
            _ => Err(format!("unknown scheme {s:?}")),
        }
    }
}

/// A modulation scheme together with its order `M` and, for VCD-DPPM, the
/// number of vapor-cloud guard zeros `N0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub order_m: u32,
    #[serde(default)]
    pub padding_n0: u32,
}

impl SchemeSpec {
    pub fn new(scheme: Scheme, order_m: u32) -> Result<Self, CodecError> {
        Self::with_padding(scheme, order_m, 0)
    }

    pub fn vcd_dppm(order_m: u32, padding_n0: u32) -> Result<Self, CodecError> {
        Self::with_padding(Scheme::VcdDppm, order_m, padding_n0)
    }

    pub fn with_padding(scheme: Scheme, order_m: u32, padding_n0: u32) -> Result<Self, CodecError> {
        let spec = SchemeSpec {
            scheme,
            order_m,
            padding_n0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        if self.order_m == 0 || self.order_m > MAX_ORDER {
            return Err(CodecError::OrderOutOfRange {
                order_m: self.order_m,
            });
        }
        if self.padding_n0 != 0 && self.scheme != Scheme::VcdDppm {
            return Err(CodecError::PaddingNotAllowed {
                scheme: self.scheme,
                padding_n0: self.padding_n0,
            });
        }
        Ok(())
    }

    /// `L = 2^M`.
    pub fn alphabet_size(&self) -> u64 {
        1u64 << self.order_m
    }

    /// Empty slots that always precede the data delay of a DPPM-family symbol.
    pub fn guard_zeros(&self) -> u32 {
        match self.scheme {
            Scheme::Idppm => 1,
            Scheme::VcdDppm => self.padding_n0,
            _ => 0,
        }
    }

    /// Number of chips used by `value`.
    pub fn symbol_len(&self, value: u32) -> usize {
        match self.scheme {
            Scheme::Ook => self.order_m as usize,
            Scheme::Ppm => self.alphabet_size() as usize,
            _ => self.guard_zeros() as usize + value as usize + 1,
        }
    }

    fn check_value(&self, value: u64) -> Result<u32, CodecError> {
        let alphabet = self.alphabet_size();
        if value >= alphabet {
            return Err(CodecError::ValueOutOfRange { value, alphabet });
        }
        Ok(value as u32)
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (M={}", self.scheme, self.order_m)?;
        if self.scheme == Scheme::VcdDppm {
            write!(f, ", N0={}", self.padding_n0)?;
        }
        f.write_str(")")
    }
}

/// A timed sequence of chips. Pulse `k` fires at `index * slot_duration_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotStream {
    chips: Vec<bool>,
    slot_duration_s: f64,
}

impl SlotStream {
    pub fn new(chips: Vec<bool>, slot_duration_s: f64) -> Result<Self, CodecError> {
        if !(slot_duration_s > 0.0 && slot_duration_s.is_finite()) {
            return Err(CodecError::SlotDuration(slot_duration_s));
        }
        Ok(SlotStream {
            chips,
            slot_duration_s,
        })
    }

    /// Stream clocked at a laser repetition rate in Hz.
    pub fn at_rate(chips: Vec<bool>, r_l_hz: f64) -> Result<Self, CodecError> {
        Self::new(chips, 1.0 / r_l_hz)
    }

    /// Parses a `"0101"`-style pattern, repeated `repeats` times.
    pub fn from_pattern(pattern: &str, repeats: usize, r_l_hz: f64) -> Result<Self, CodecError> {
        let chips = parse_pattern(pattern)?;
        let mut all = Vec::with_capacity(chips.len() * repeats);
        for _ in 0..repeats {
            all.extend_from_slice(&chips);
        }
        Self::at_rate(all, r_l_hz)
    }

    pub fn chips(&self) -> &[bool] {
        &self.chips
    }

    pub fn into_chips(self) -> Vec<bool> {
        self.chips
    }

    pub fn slot_duration_s(&self) -> f64 {
        self.slot_duration_s
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.chips.len() as f64 * self.slot_duration_s
    }

    pub fn pulse_count(&self) -> usize {
        self.chips.iter().filter(|&&c| c).count()
    }

    pub fn pulse_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.chips
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| c.then_some(i))
    }

    pub fn pulse_times(&self) -> impl Iterator<Item = f64> + '_ {
        let dt = self.slot_duration_s;
        self.pulse_indices().map(move |i| i as f64 * dt)
    }
}

impl fmt::Display for SlotStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.chips {
            f.write_str(if c { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Parses a non-empty string of `0`/`1`. Whitespace and `_` are ignored.
pub fn parse_pattern(pattern: &str) -> Result<Vec<bool>, CodecError> {
    let mut chips = Vec::with_capacity(pattern.len());
    for c in pattern.chars() {
        match c {
            '0' => chips.push(false),
            '1' => chips.push(true),
            c if c.is_whitespace() || c == '_' => {}
            _ => return Err(CodecError::Pattern(pattern.to_string())),
        }
    }
    if chips.is_empty() {
        return Err(CodecError::Pattern(pattern.to_string()));
    }
    Ok(chips)
}

pub fn encode_symbol(spec: &SchemeSpec, value: u64) -> Result<Vec<bool>, CodecError> {
    let mut out = Vec::new();
    encode_symbol_into(spec, value, &mut out)?;
    Ok(out)
}

/// Appends the chips for `value` to `out`.
pub fn encode_symbol_into(
    spec: &SchemeSpec,
    value: u64,
    out: &mut Vec<bool>,
) -> Result<(), CodecError> {
    spec.validate()?;
    let v = spec.check_value(value)?;
    match spec.scheme {
        Scheme::Ook => {
            for bit in (0..spec.order_m).rev() {
                out.push((v >> bit) & 1 == 1);
            }
        }
        Scheme::Ppm => {
            let start = out.len();
            out.resize(start + spec.alphabet_size() as usize, false);
            out[start + v as usize] = true;
        }
        Scheme::Dppm | Scheme::Idppm | Scheme::VcdDppm => {
            let zeros = spec.guard_zeros() as usize + v as usize;
            out.resize(out.len() + zeros, false);
            out.push(true);
        }
    }
    Ok(())
}

pub fn encode_symbols(
    spec: &SchemeSpec,
    values: &[u32],
    slot_duration_s: f64,
) -> Result<SlotStream, CodecError> {
    let mut chips = Vec::new();
    for &v in values {
        encode_symbol_into(spec, v as u64, &mut chips)?;
    }
    SlotStream::new(chips, slot_duration_s)
}

/// Values recovered from a stream plus the number of chips left over after
/// the last complete symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub values: Vec<u32>,
    pub residue: usize,
}

pub fn decode_stream(spec: &SchemeSpec, stream: &SlotStream) -> Result<Decoded, CodecError> {
    decode_chips(spec, stream.chips())
}

pub fn decode_chips(spec: &SchemeSpec, chips: &[bool]) -> Result<Decoded, CodecError> {
    spec.validate()?;
    match spec.scheme {
        Scheme::Ook => {
            let m = spec.order_m as usize;
            let values = chips
                .chunks_exact(m)
                .map(|frame| frame.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32))
                .collect();
            Ok(Decoded {
                values,
                residue: chips.len() % m,
            })
        }
        Scheme::Ppm => {
            let l = spec.alphabet_size() as usize;
            let mut values = Vec::with_capacity(chips.len() / l);
            for (frame, slots) in chips.chunks_exact(l).enumerate() {
                let mut pulses = slots.iter().enumerate().filter(|(_, &c)| c);
                match (pulses.next(), pulses.count()) {
                    (Some((pos, _)), 0) => values.push(pos as u32),
                    (first, rest) => {
                        return Err(CodecError::InvalidFrame {
                            frame,
                            pulses: first.map_or(0, |_| 1 + rest),
                        })
                    }
                }
            }
            Ok(Decoded {
                values,
                residue: chips.len() % l,
            })
        }
        Scheme::Dppm | Scheme::Idppm | Scheme::VcdDppm => {
            let guard = spec.guard_zeros() as u64;
            let alphabet = spec.alphabet_size();
            let mut values = Vec::new();
            let mut zeros: u64 = 0;
            for (chip, &c) in chips.iter().enumerate() {
                if !c {
                    zeros += 1;
                    continue;
                }
                if zeros < guard {
                    return Err(CodecError::Sync { chip });
                }
                let value = zeros - guard;
                if value >= alphabet {
                    return Err(CodecError::OverlongGap { chip, value });
                }
                values.push(value as u32);
                zeros = 0;
            }
            Ok(Decoded {
                values,
                residue: zeros as usize,
            })
        }
    }
}

/// Smallest `M >= 1` with `2^M >= alphabet_size`.
pub fn order_for_alphabet(alphabet_size: usize) -> u32 {
    let mut m = 1;
    while (1usize << m) < alphabet_size {
        m += 1;
    }
    m
}

/// Decodes bytes one-to-one into characters (ISO-8859-1), so a corpus is
/// treated byte by byte regardless of its encoding.
pub fn latin1_to_string(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| b as char).collect()
}

/// Relative frequency of every character in `text`.
pub fn symbol_frequencies(text: &str) -> BTreeMap<char, f64> {
    let mut counts: BTreeMap<char, u64> = BTreeMap::new();
    let mut total = 0u64;
    for c in text.chars() {
        *counts.entry(c).or_default() += 1;
        total += 1;
    }
    counts
        .into_iter()
        .map(|(c, n)| (c, n as f64 / total as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub symbol: char,
    pub value: u32,
    /// Empirical probability; absent for tables loaded from text.
    pub probability: Option<f64>,
}

/// Bijection between alphabet symbols and codec values, most probable
/// symbol first.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingTable {
    order_m: u32,
    entries: Vec<MappingEntry>,
    by_symbol: BTreeMap<char, u32>,
}

/// Ranks symbols by descending probability and assigns `value = rank`.
/// Ties go to the lower code point.
pub fn build_mapping(
    frequencies: &BTreeMap<char, f64>,
    order_m: u32,
) -> Result<MappingTable, CodecError> {
    if order_m == 0 || order_m > MAX_ORDER {
        return Err(CodecError::OrderOutOfRange { order_m });
    }
    if frequencies.len() as u64 > 1u64 << order_m {
        return Err(CodecError::Capacity {
            alphabet: frequencies.len(),
            order_m,
        });
    }
    if frequencies.values().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(CodecError::Probability);
    }
    let total: f64 = frequencies.values().sum();
    if frequencies.is_empty() || total <= 0.0 {
        return Err(CodecError::Probability);
    }

    let mut ranked: Vec<(char, f64)> = frequencies.iter().map(|(&c, &p)| (c, p / total)).collect();
    // BTreeMap order is ascending code point; the stable sort keeps it for ties.
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));

    let entries: Vec<MappingEntry> = ranked
        .into_iter()
        .enumerate()
        .map(|(rank, (symbol, p))| MappingEntry {
            symbol,
            value: rank as u32,
            probability: Some(p),
        })
        .collect();
    Ok(MappingTable::from_entries(order_m, entries))
}

impl MappingTable {
    fn from_entries(order_m: u32, entries: Vec<MappingEntry>) -> Self {
        let by_symbol = entries.iter().map(|e| (e.symbol, e.value)).collect();
        MappingTable {
            order_m,
            entries,
            by_symbol,
        }
    }

    /// Builds a table from a text corpus with `M` picked to fit its alphabet.
    pub fn from_corpus(text: &str) -> Result<Self, CodecError> {
        let freqs = symbol_frequencies(text);
        build_mapping(&freqs, order_for_alphabet(freqs.len()))
    }

    pub fn order_m(&self) -> u32 {
        self.order_m
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in value order.
    pub fn entries(&self) -> &[MappingEntry] {
        &self.entries
    }

    pub fn value_of(&self, symbol: char) -> Option<u32> {
        self.by_symbol.get(&symbol).copied()
    }

    pub fn symbol_of(&self, value: u32) -> Option<char> {
        self.entries.get(value as usize).map(|e| e.symbol)
    }

    /// Expected codec value under the stored probabilities.
    pub fn mean_value(&self) -> Option<f64> {
        self.entries
            .iter()
            .map(|e| e.probability.map(|p| p * e.value as f64))
            .sum()
    }

    /// Two-column text form: `code_point value`, one symbol per line.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# code_point value\n");
        for e in &self.entries {
            out.push_str(&format!("{} {}\n", e.symbol as u32, e.value));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CodecError> {
        let err = |line: usize, reason: String| CodecError::TableParse { line, reason };
        let mut rows: Vec<(char, u32)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(err(
                    i + 1,
                    format!("expected 2 columns, found {}", cols.len()),
                ));
            }
            let code: u32 = cols[0]
                .parse()
                .map_err(|_| err(i + 1, format!("bad code point {:?}", cols[0])))?;
            let symbol = char::from_u32(code)
                .ok_or_else(|| err(i + 1, format!("invalid code point {code}")))?;
            let value: u32 = cols[1]
                .parse()
                .map_err(|_| err(i + 1, format!("bad value {:?}", cols[1])))?;
            rows.push((symbol, value));
        }
        if rows.is_empty() {
            return Err(err(0, "empty table".into()));
        }
        rows.sort_by_key(|r| r.1);
        for (expected, (symbol, value)) in rows.iter().enumerate() {
            if *value as usize != expected {
                return Err(err(
                    0,
                    format!("values must be 0..{} without gaps", rows.len()),
                ));
            }
            if rows.iter().filter(|r| r.0 == *symbol).count() > 1 {
                return Err(err(
                    0,
                    format!("symbol U+{:04X} mapped twice", *symbol as u32),
                ));
            }
        }
        let order_m = order_for_alphabet(rows.len());
        let entries = rows
            .into_iter()
            .map(|(symbol, value)| MappingEntry {
                symbol,
                value,
                probability: None,
            })
            .collect();
        Ok(Self::from_entries(order_m, entries))
    }
}

/// Concatenates per-character symbols. The OOK path sends each character's
/// 8-bit code verbatim and ignores the table.
pub fn encode_text(
    text: &str,
    table: &MappingTable,
    spec: &SchemeSpec,
    slot_duration_s: f64,
) -> Result<SlotStream, CodecError> {
    spec.validate()?;
    let mut chips = Vec::new();
    if spec.scheme == Scheme::Ook {
        for c in text.chars() {
            let code = c as u32;
            if code > 0xFF {
                return Err(CodecError::NotEightBit { symbol: c });
            }
            chips.extend((0..8).rev().map(|bit| (code >> bit) & 1 == 1));
        }
    } else {
        for c in text.chars() {
            let v = table
                .value_of(c)
                .ok_or(CodecError::Unmapped { symbol: c })?;
            encode_symbol_into(spec, v as u64, &mut chips)?;
        }
    }
    SlotStream::new(chips, slot_duration_s)
}

/// Inverse of [`encode_text`].
pub fn decode_text(
    stream: &SlotStream,
    table: &MappingTable,
    spec: &SchemeSpec,
) -> Result<String, CodecError> {
    if spec.scheme == Scheme::Ook {
        let bytes = SchemeSpec::new(Scheme::Ook, 8)?;
        let decoded = decode_stream(&bytes, stream)?;
        return Ok(decoded
            .values
            .into_iter()
            .map(|v| char::from_u32(v).unwrap_or(char::REPLACEMENT_CHARACTER))
            .collect());
    }
    decode_stream(spec, stream)?
        .values
        .into_iter()
        .map(|v| {
            table.symbol_of(v).ok_or(CodecError::ValueOutOfRange {
                value: v as u64,
                alphabet: table.len() as u64,
            })
        })
        .collect()
}
