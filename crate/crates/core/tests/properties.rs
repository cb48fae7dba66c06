use num_bigint::BigInt;
use num_rational::BigRational;
use optosim::channel::{self, ChannelParams, NoisePsd};
use optosim::cloud::{self, CloudParams};
use optosim::codec::{self, Scheme, SchemeSpec, SlotStream};
use optosim::rates;
use proptest::prelude::*;

fn scheme() -> impl Strategy<Value = Scheme> {
    prop::sample::select(Scheme::ALL.to_vec())
}

/// A scheme spec with `M` in 1..=8 and random symbol values for it.
fn spec_and_values() -> impl Strategy<Value = (SchemeSpec, Vec<u32>)> {
    (scheme(), 1u32..=8, 0u32..6).prop_flat_map(|(s, m, n0)| {
        let spec =
            SchemeSpec::with_padding(s, m, if s == Scheme::VcdDppm { n0 } else { 0 }).unwrap();
        let values = prop::collection::vec(0u32..(1 << m), 1..40);
        (Just(spec), values)
    })
}

proptest! {
    #[test]
    fn stream_round_trip((spec, values) in spec_and_values()) {
        let stream = codec::encode_symbols(&spec, &values, 0.025).unwrap();
        let back = codec::decode_stream(&spec, &stream).unwrap();
        prop_assert_eq!(back.values, values);
        prop_assert_eq!(back.residue, 0);
    }

    #[test]
    fn one_pulse_per_symbol((spec, values) in spec_and_values()) {
        prop_assume!(spec.scheme != Scheme::Ook);
        for &v in &values {
            let chips = codec::encode_symbol(&spec, v as u64).unwrap();
            prop_assert_eq!(chips.iter().filter(|&&c| c).count(), 1);
            prop_assert_eq!(chips.len(), spec.symbol_len(v));
        }
    }

    #[test]
    fn differential_self_sync((spec, values) in spec_and_values(), cut in any::<prop::sample::Index>()) {
        prop_assume!(spec.scheme.is_differential());
        let stream = codec::encode_symbols(&spec, &values, 1.0).unwrap();
        let pulses: Vec<usize> = stream.pulse_indices().collect();
        let k = cut.index(pulses.len());
        // Drop everything up to and including pulse k, plus optionally the
        // partial symbol before it.
        let rest = &stream.chips()[pulses[k] + 1..];
        let back = codec::decode_chips(&spec, rest).unwrap();
        prop_assert_eq!(&back.values[..], &values[k + 1..]);
    }

    #[test]
    fn pulse_times_are_index_times_slot((spec, values) in spec_and_values(), rate in 1.0f64..20_000.0) {
        let stream = codec::encode_symbols(&spec, &values, 1.0 / rate).unwrap();
        let times: Vec<f64> = stream.pulse_times().collect();
        for (t, i) in times.iter().zip(stream.pulse_indices()) {
            prop_assert_eq!(*t, i as f64 * (1.0 / rate));
        }
        prop_assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cloud_level_never_negative(chips in prop::collection::vec(any::<bool>(), 1..400), rate in 1.0f64..200.0) {
        let stream = SlotStream::at_rate(chips, rate).unwrap();
        let trace = cloud::simulate_train(&stream, &CloudParams::default()).unwrap();
        prop_assert!(trace.records.iter().all(|r| r.pre_level >= 0.0));
    }

    #[test]
    fn gaps_of_t_v_never_suppress(gaps in prop::collection::vec(0usize..5, 1..300), extra in 0usize..3) {
        // Chip rate 16 Hz: one chip is exactly T_v.
        let mut chips = vec![true];
        for g in gaps {
            chips.extend(std::iter::repeat_n(false, g + extra));
            chips.push(true);
        }
        let stream = SlotStream::at_rate(chips, 16.0).unwrap();
        let trace = cloud::simulate_train(&stream, &CloudParams::default()).unwrap();
        prop_assert_eq!(trace.suppressed(), 0);
    }

    #[test]
    fn padded_vcd_streams_never_suppress(
        m in 1u32..=6,
        rate in 16.0f64..5_000.0,
        seed_values in prop::collection::vec(any::<u32>(), 1..60),
    ) {
        let params = CloudParams::default();
        let spec = SchemeSpec::vcd_dppm(m, cloud::required_padding(rate, &params)).unwrap();
        let values: Vec<u32> = seed_values.iter().map(|v| v % (1 << m)).collect();
        let stream = codec::encode_symbols(&spec, &values, 1.0 / rate).unwrap();
        prop_assert_eq!(cloud::simulate_train(&stream, &params).unwrap().suppressed(), 0);
    }

    #[test]
    fn cloud_scale_invariance(
        chips in prop::collection::vec(any::<bool>(), 1..300),
        rate in 5.0f64..100.0,
        factor in prop::sample::select(vec![0.25, 0.5, 2.0, 4.0, 8.0]),
    ) {
        let params = CloudParams::default();
        let a = SlotStream::at_rate(chips.clone(), rate).unwrap();
        let b = SlotStream::new(chips, factor / rate).unwrap();
        let ta = cloud::simulate_train(&a, &params).unwrap();
        let tb = cloud::simulate_train(&b, &params.scaled(factor)).unwrap();
        prop_assert_eq!(ta.emitted_mask(), tb.emitted_mask());
    }

    #[test]
    fn vcd_bit_rate_increases_at_fixed_padding(m in 1u32..=8, r in 17.0f64..20_000.0, frac in 0.01f64..0.99) {
        let params = CloudParams::default();
        let n0 = cloud::required_padding(r, &params);
        // Highest rate that still needs only n0 guard zeros.
        let top = (n0 + 1) as f64 * params.r_max_hz();
        let lo = (n0 as f64 * params.r_max_hz()).max(17.0);
        prop_assume!(top > lo);
        let r1 = lo + frac * (top - lo);
        prop_assume!(cloud::required_padding(r1, &params) == n0 && cloud::required_padding(top, &params) == n0);
        let spec = SchemeSpec::vcd_dppm(m, n0).unwrap();
        prop_assert!(rates::bit_rate(&spec, top).unwrap() > rates::bit_rate(&spec, r1).unwrap());
    }

    #[test]
    fn tl_increases_with_distance_and_k(d in 1.0f64..10_000.0, dd in 0.1f64..1000.0, k in 1.0f64..1.99) {
        let mut p = ChannelParams::at_distance(d);
        p.spreading_factor_k = k;
        let base = channel::transmission_loss(&p).unwrap();
        p.distance_m = d + dd;
        prop_assert!(channel::transmission_loss(&p).unwrap() > base);
        p.distance_m = d.max(1.5);
        let lo = channel::transmission_loss(&p).unwrap();
        p.spreading_factor_k = k + 0.01;
        prop_assert!(channel::transmission_loss(&p).unwrap() > lo);
    }

    #[test]
    fn noise_band_subdivision(lo in 100.0f64..20_000.0, w1 in 100.0f64..10_000.0, w2 in 100.0f64..10_000.0) {
        let level = |a: f64, b: f64| {
            let p = ChannelParams { band_hz: (a, b), ..ChannelParams::default() };
            channel::ambient_noise_level(&p).unwrap().level_db
        };
        let whole = level(lo, lo + w1 + w2);
        let parts = 10f64.powf(level(lo, lo + w1) / 10.0) + 10f64.powf(level(lo + w1, lo + w1 + w2) / 10.0);
        prop_assert!((whole - 10.0 * parts.log10()).abs() < 0.01);
    }

    #[test]
    fn detection_probabilities_move_the_right_way(snr in -10.0f64..30.0, th in 0.05f64..0.95, d in 0.01f64..0.5) {
        let (m0, f0) = channel::slot_detection_probs(snr, th);
        let (m1, f1) = channel::slot_detection_probs(snr, (th + d).min(1.0));
        prop_assert!(m1 >= m0 && f1 <= f0);
        let (m2, f2) = channel::slot_detection_probs(snr + 1.0, th);
        prop_assert!(m2 <= m0 && f2 <= f0);
    }

    #[test]
    fn snr_tracks_source_level(sl in 80.0f64..140.0, x in -20.0f64..20.0, d in 10.0f64..2000.0) {
        let p = ChannelParams::at_distance(d);
        let tl = channel::transmission_loss(&p).unwrap();
        let nl = channel::ambient_noise_level(&p).unwrap().level_db;
        let a = channel::snr_from_parts(sl, tl, nl);
        let b = channel::snr_from_parts(sl + x, tl, nl);
        prop_assert!((b - a - x).abs() < 1e-9);
    }
}

#[test]
fn exhaustive_single_symbols_to_m12() {
    for scheme in Scheme::ALL {
        for m in 1..=12u32 {
            let spec =
                SchemeSpec::with_padding(scheme, m, if scheme == Scheme::VcdDppm { 3 } else { 0 })
                    .unwrap();
            for v in 0..(1u32 << m) {
                let stream = codec::encode_symbols(&spec, &[v], 1.0).unwrap();
                assert_eq!(
                    codec::decode_stream(&spec, &stream).unwrap().values,
                    vec![v],
                    "{scheme} M={m}"
                );
            }
        }
    }
}

#[test]
fn mean_symbol_length_matches_denominators() {
    let two = BigRational::from_integer(BigInt::from(2));
    for m in 1..=10u32 {
        let l = BigInt::from(1u64 << m);
        for (scheme, n0, num) in [
            (Scheme::Dppm, 0u32, l.clone() + BigInt::from(1)),
            (Scheme::Idppm, 0, l.clone() + BigInt::from(3)),
            (Scheme::VcdDppm, 5, l.clone() + BigInt::from(11)),
        ] {
            let spec = SchemeSpec::with_padding(scheme, m, n0).unwrap();
            // Direct average over every value.
            let total: u64 = (0..(1u32 << m)).map(|v| spec.symbol_len(v) as u64).sum();
            let direct = BigRational::new(BigInt::from(total), l.clone());
            assert_eq!(direct, BigRational::from_integer(num.clone()) / &two);
            assert_eq!(rates::mean_symbol_chips_exact(&spec), direct);
        }
    }
}

#[test]
fn vcd_bit_rate_envelope_increases() {
    // At R_L = k * R_max the padding is exactly k - 1.
    let params = CloudParams::default();
    for m in 1..=8u32 {
        let mut prev = 0.0;
        for k in 1..=2000u32 {
            let rate = k as f64 * params.r_max_hz();
            let spec = SchemeSpec::vcd_dppm(m, cloud::required_padding(rate, &params)).unwrap();
            assert_eq!(spec.padding_n0, k - 1);
            let b = rates::bit_rate(&spec, rate).unwrap();
            assert!(b > prev, "M={m} k={k}");
            prev = b;
        }
    }
}

#[test]
fn dppm_beats_ppm_per_chip() {
    for m in 1..=20u32 {
        let l = BigInt::from(1u64 << m);
        let dppm = BigRational::new(BigInt::from(2), l.clone() + BigInt::from(1));
        let ppm = BigRational::new(BigInt::from(1), l);
        assert!(dppm > ppm);
    }
}

#[test]
fn power_efficiency_monotone_and_bounded() {
    let mut prev = -1.0;
    for m in 1..=24 {
        let e = rates::power_efficiency_vs_ook(m).unwrap();
        assert!(e > prev && e < 200.0);
        prev = e;
    }
}

#[test]
fn wind_raises_noise() {
    let mut p = ChannelParams {
        band_hz: (500.0, 1500.0),
        ..ChannelParams::default()
    };
    let calm = channel::ambient_noise_level(&p).unwrap().level_db;
    p.wind_speed_mps = 10.0;
    assert!(channel::ambient_noise_level(&p).unwrap().level_db > calm);
    assert!(
        NoisePsd::at(1.0, 0.5, 10.0).total_linear() > NoisePsd::at(1.0, 0.5, 0.0).total_linear()
    );
}
