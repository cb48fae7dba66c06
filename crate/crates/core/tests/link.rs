use optosim::channel::{Interpolation, SourceLevelTable};
use optosim::codec::Scheme;
use optosim::linksim::{self, ExperimentConfig, LinkBudget};

fn bundled_link() -> LinkBudget {
    LinkBudget::Calibrated {
        source_levels: SourceLevelTable::from_csv(
            optosim::cli::SAMPLE_SOURCE_LEVELS.as_bytes(),
            None,
        )
        .unwrap(),
        interpolation: Interpolation::Exact,
    }
}

#[test]
fn ber_grows_with_distance() {
    for (scheme, rate) in [(Scheme::Ook, 16.0), (Scheme::VcdDppm, 40.0)] {
        let mut means = Vec::new();
        for d in [50.0, 100.0, 250.0, 500.0, 1000.0] {
            let mut total = 0.0;
            for seed in 0..3 {
                let mut c = ExperimentConfig::new(scheme, 4, rate);
                c.link = bundled_link();
                c.channel.distance_m = d;
                c.seed = seed;
                c.n_data_bits = 30_000;
                total += linksim::run_ber(&c).unwrap().ber;
            }
            means.push(total / 3.0);
        }
        let inversions = means
            .windows(2)
            .filter(|w| w[1] < w[0] && w[0] >= 1e-4)
            .count();
        let small = means
            .windows(2)
            .filter(|w| w[1] < w[0] && w[0] < 1e-4)
            .count();
        assert_eq!(inversions, 0, "{scheme}: {means:?}");
        assert!(small <= 1, "{scheme}: {means:?}");
    }
}

#[test]
fn deep_noise_is_chance_level() {
    for scheme in Scheme::ALL {
        let rate = if scheme == Scheme::VcdDppm {
            40.0
        } else {
            16.0
        };
        let mut c = ExperimentConfig::new(scheme, 4, rate);
        c.link = LinkBudget::FixedSnr { snr_db: -30.0 };
        c.n_data_bits = 40_000;
        let r = linksim::run_ber(&c).unwrap();
        assert!((0.4..=0.6).contains(&r.ber), "{scheme}: {}", r.ber);
    }
}

#[test]
fn same_seed_same_json() {
    let mut c = ExperimentConfig::new(Scheme::VcdDppm, 3, 40.0);
    c.link = LinkBudget::FixedSnr { snr_db: 11.0 };
    c.seed = 1234;
    c.n_data_bits = 20_000;
    let a = serde_json::to_string(&linksim::run_ber(&c).unwrap()).unwrap();
    let b = serde_json::to_string(&linksim::run_ber(&c).unwrap()).unwrap();
    assert_eq!(a, b);
    c.seed = 1235;
    assert_ne!(
        a,
        serde_json::to_string(&linksim::run_ber(&c).unwrap()).unwrap()
    );
}

#[test]
fn config_round_trips_through_toml() {
    let mut c = ExperimentConfig::new(Scheme::Ppm, 5, 40.0);
    c.link = bundled_link();
    c.seed = 3;
    let text = toml::to_string(&c).unwrap();
    let back: ExperimentConfig = toml::from_str(&text).unwrap();
    assert_eq!(back, c);
    let err = toml::from_str::<ExperimentConfig>(&format!("extra = 1\n{text}")).unwrap_err();
    assert!(err.to_string().contains("extra"));
    let err = toml::from_str::<ExperimentConfig>(&format!("{text}\nextra = 1\n")).unwrap_err();
    assert!(err.to_string().contains("extra"));
}

#[test]
fn throughput_formula_matches_streams() {
    let corpora = [
        optosim::cli::SAMPLE_CORPUS.to_string(),
        "abababab".to_string(),
        "zzzzzyyyyxxxwwv".repeat(7),
        (0u8..=127)
            .map(|b| (b % 95 + 32) as char)
            .collect::<String>()
            .repeat(3),
    ];
    for corpus in &corpora {
        for rate in [16.0, 40.0, 300.0, 10_000.0] {
            let c = ExperimentConfig::new(Scheme::VcdDppm, 1, rate);
            let r = linksim::run_text_sim(&c, corpus).unwrap();
            let sim = r.scheme(Scheme::VcdDppm).unwrap().chars_per_s;
            assert!(
                (sim / r.formula_chars_per_s - 1.0).abs() < 0.01,
                "rate {rate}"
            );
            assert!(r.schemes.iter().all(|s| s.ratio_vs_ook > 0.0));
        }
    }
}
