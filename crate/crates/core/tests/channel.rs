use deepmod_core::channel::{
    default_plc_taps, fir_filter, fir_response, Channel, ChannelConfig, ChannelKind, Jammer,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_block(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn dft_bin(x: &[Complex64], k: usize) -> Complex64 {
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * i) as f64 / n))
        .sum()
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[test]
fn measured_snr_tracks_configured_snr() {
    let x = random_block(1_000_000, 1);
    for (i, snr) in [-5.0, 0.0, 10.0, 20.0, 30.0].into_iter().enumerate() {
        for cfg in [
            ChannelConfig::awgn(snr),
            ChannelConfig::fir(snr, default_plc_taps()),
            ChannelConfig::new(ChannelKind::Narrowband, snr),
        ] {
            let mut ch = Channel::new(cfg.with_seed(i as u64)).unwrap();
            let out = ch.apply(&x).unwrap();
            assert!(
                (out.measured_snr_db - snr).abs() < 0.25,
                "configured {snr} dB, measured {}",
                out.measured_snr_db
            );
        }
    }
}

#[test]
fn streaming_fir_matches_single_block() {
    let x = random_block(4096, 2);
    let taps = default_plc_taps();
    let whole = fir_filter(&x, &taps, &mut Vec::new());
    for cuts in [vec![1], vec![7, 300, 301], vec![2048], vec![5, 6, 7, 8, 4000]] {
        let mut delay = Vec::new();
        let mut pieced = Vec::new();
        let mut start = 0;
        for end in cuts.into_iter().chain([x.len()]) {
            pieced.extend(fir_filter(&x[start..end], &taps, &mut delay));
            start = end;
        }
        assert_eq!(pieced, whole);
    }

    // the same holds through a noiseless channel object
    let cfg = ChannelConfig::fir(f64::INFINITY, taps);
    let mut a = Channel::new(cfg.clone()).unwrap();
    let mut b = Channel::new(cfg).unwrap();
    let full = a.apply(&x).unwrap().samples;
    let mut split = b.apply(&x[..1000]).unwrap().samples;
    split.extend(b.apply(&x[1000..]).unwrap().samples);
    assert_eq!(split, full);
}

#[test]
fn delay_and_identity_taps() {
    let x = random_block(16, 3);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    assert_eq!(fir_filter(&x, &[one, zero, zero], &mut Vec::new()), x);
    let delayed = fir_filter(&x, &[zero, zero, one], &mut Vec::new());
    assert_eq!(&delayed[..2], &[zero, zero]);
    assert_eq!(&delayed[2..], &x[..14]);
}

#[test]
fn fir_response_matches_impulse_dft() {
    let taps = default_plc_taps();
    let n = 64;
    let mut impulse = vec![Complex64::new(0.0, 0.0); n];
    impulse[0] = Complex64::new(1.0, 0.0);
    let h = fir_filter(&impulse, &taps, &mut Vec::new());
    for k in 0..n {
        let dft = dft_bin(&h, k).norm_sqr();
        let model = fir_response(&taps, k as f64 / n as f64).norm_sqr();
        assert!((db(dft) - db(model)).abs() < 1.0, "bin {k}: {dft} vs {model}");
    }
    // the preset is genuinely frequency selective
    let gains: Vec<f64> = (0..n)
        .map(|k| db(fir_response(&taps, k as f64 / n as f64).norm_sqr()))
        .collect();
    let spread = gains.iter().cloned().fold(f64::MIN, f64::max)
        - gains.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 6.0, "gain spread {spread} dB");
}

#[test]
fn jammer_appears_as_a_spectral_peak() {
    let n = 1024;
    let freq = 100.0 / n as f64;
    let x = random_block(n, 4);
    let cfg = ChannelConfig::new(ChannelKind::Jammed, 30.0)
        .with_jammer(Jammer {
            frequency: freq,
            power_ratio: 1.0,
        })
        .with_seed(9);
    let mut ch = Channel::new(cfg).unwrap();
    let out = ch.apply(&x).unwrap();
    let spectrum: Vec<f64> = (0..n).map(|k| dft_bin(&out.samples, k).norm()).collect();
    let peak = (0..n).max_by(|&a, &b| spectrum[a].total_cmp(&spectrum[b])).unwrap();
    assert_eq!(peak, 100);
    // a jammer as strong as the signal drags the SINR to about 0 dB
    assert!(out.measured_snr_db < 1.0, "{}", out.measured_snr_db);
}

#[test]
fn zero_power_jammer_changes_nothing() {
    let x = random_block(2048, 5);
    let plain = ChannelConfig::new(ChannelKind::Jammed, 10.0)
        .with_jammer(Jammer {
            frequency: 0.1,
            power_ratio: 0.0,
        })
        .with_seed(6);
    let mut a = Channel::new(plain).unwrap();
    let mut b = Channel::new(ChannelConfig::awgn(10.0).with_seed(6)).unwrap();
    assert_eq!(a.apply(&x).unwrap().samples, b.apply(&x).unwrap().samples);
}

#[test]
fn seeded_channels_are_bitwise_reproducible() {
    let x = random_block(10_000, 7);
    let cfg = ChannelConfig::fir(5.0, default_plc_taps()).with_seed(42);
    let run = |cfg: ChannelConfig| {
        let mut ch = Channel::new(cfg).unwrap();
        let mut out = ch.apply(&x[..3000]).unwrap().samples;
        out.extend(ch.apply(&x[3000..]).unwrap().samples);
        out
    };
    let first = run(cfg.clone());
    let second = run(cfg.clone());
    assert!(first.iter().zip(&second).all(|(a, b)| a.re.to_bits() == b.re.to_bits()
        && a.im.to_bits() == b.im.to_bits()));
    assert_ne!(first, run(cfg.with_seed(43)));
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(Channel::new(ChannelConfig::new(ChannelKind::Jammed, 10.0)).is_err());
    assert!(Channel::new(ChannelConfig::fir(10.0, vec![Complex64::new(1.0, 0.0)])).is_err());
    assert!(Channel::new(ChannelConfig::awgn(f64::NAN)).is_err());
    let bad_freq = ChannelConfig::new(ChannelKind::Jammed, 10.0).with_jammer(Jammer {
        frequency: 0.75,
        power_ratio: 1.0,
    });
    assert!(Channel::new(bad_freq).is_err());
}
