use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{input, Result};

/// Mean `|z|^2` over a block.
pub fn mean_power(block: &[Complex64]) -> f64 {
    if block.is_empty() {
        return 0.0;
    }
    block.iter().map(|z| z.norm_sqr()).sum::<f64>() / block.len() as f64
}

/// Noise variance that puts `signal_power` at `snr_db` above the noise.
pub fn noise_variance(signal_power: f64, snr_db: f64) -> f64 {
    signal_power / 10f64.powf(snr_db / 10.0)
}

/// Adds circular complex Gaussian noise of total variance `signal_power / 10^(snr_db/10)`.
///
/// Real and imaginary parts are independent with half the variance each. At `snr_db = +inf`
/// the block is returned unchanged and the generator is not advanced.
pub fn awgn<R: Rng + ?Sized>(
    block: &[Complex64],
    snr_db: f64,
    signal_power: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if signal_power.is_nan() || signal_power <= 0.0 {
        return Err(input(format!(
            "signal power must be positive, got {signal_power}"
        )));
    }
    if snr_db == f64::INFINITY {
        return Ok(block.to_vec());
    }
    let sigma = (noise_variance(signal_power, snr_db) / 2.0).sqrt();
    Ok(block
        .iter()
        .map(|z| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            z + Complex64::new(sigma * re, sigma * im)
        })
        .collect())
}

/// Streaming FIR filter. `delay` carries the most recent `taps.len() - 1` inputs, newest first,
/// and is updated in place so consecutive blocks filter as one stream.
pub fn fir_filter(
    block: &[Complex64],
    taps: &[Complex64],
    delay: &mut Vec<Complex64>,
) -> Vec<Complex64> {
    let memory = taps.len().saturating_sub(1);
    delay.resize(memory, Complex64::new(0.0, 0.0));
    let mut out = Vec::with_capacity(block.len());
    for &x in block {
        let mut acc = taps.first().map_or(Complex64::new(0.0, 0.0), |t| t * x);
        for (t, d) in taps.iter().skip(1).zip(delay.iter()) {
            acc += t * d;
        }
        if memory > 0 {
            delay.rotate_right(1);
            delay[0] = x;
        }
        out.push(acc);
    }
    out
}

/// Frequency response of `taps` at normalized frequency `f` (cycles/sample).
pub fn fir_response(taps: &[Complex64], f: f64) -> Complex64 {
    taps.iter()
        .enumerate()
        .map(|(k, t)| t * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * k as f64))
        .sum()
}

/// Adds `sqrt(power) * exp(j 2 pi freq n)`, where `n` continues from `phase_index`.
pub fn tone_jammer(
    block: &[Complex64],
    freq: f64,
    power: f64,
    phase_index: &mut u64,
) -> Result<Vec<Complex64>> {
    if power.is_nan() || power < 0.0 {
        return Err(input(format!("jammer power must be >= 0, got {power}")));
    }
    let amp = power.sqrt();
    let out = block
        .iter()
        .map(|z| {
            let cycles = (freq * *phase_index as f64).fract();
            *phase_index += 1;
            z + Complex64::from_polar(amp, 2.0 * std::f64::consts::PI * cycles)
        })
        .collect();
    Ok(out)
}

/// Receive SNR estimate `10 log10(sum |clean|^2 / sum |noisy - clean|^2)`.
///
/// Identical blocks report `+inf`.
pub fn measure_snr(clean: &[Complex64], noisy: &[Complex64]) -> Result<f64> {
    if clean.len() != noisy.len() {
        return Err(input(format!(
            "block lengths differ: {} vs {}",
            clean.len(),
            noisy.len()
        )));
    }
    let signal: f64 = clean.iter().map(|z| z.norm_sqr()).sum();
    if signal.is_nan() || signal <= 0.0 {
        return Err(input("clean block has zero power"));
    }
    let noise: f64 = clean
        .iter()
        .zip(noisy)
        .map(|(c, n)| (n - c).norm_sqr())
        .sum();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn awgn_infinite_snr_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = vec![c(0.3, -0.2), c(1.0, 0.0)];
        assert_eq!(awgn(&x, f64::INFINITY, 0.5, &mut rng).unwrap(), x);
    }

    #[test]
    fn awgn_rejects_zero_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(awgn(&[c(0.0, 0.0)], 10.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn awgn_is_reproducible() {
        let x = vec![c(0.5, 0.5); 64];
        let a = awgn(&x, 3.0, 0.5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = awgn(&x, 3.0, 0.5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unit_tap_is_identity() {
        let x = vec![c(1.0, 2.0), c(-0.5, 0.1), c(0.0, 3.0)];
        let mut d = Vec::new();
        assert_eq!(fir_filter(&x, &[c(1.0, 0.0)], &mut d), x);
    }

    #[test]
    fn delta_taps_delay() {
        let x = vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)];
        let mut d = Vec::new();
        let taps = [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let y = fir_filter(&x, &taps, &mut d);
        assert_eq!(y, vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
    }

    #[test]
    fn leading_unit_tap_passes_through() {
        let x = vec![c(1.0, 0.0), c(2.0, -1.0)];
        let mut d = Vec::new();
        let y = fir_filter(&x, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], &mut d);
        assert_eq!(y, x);
    }

    #[test]
    fn dc_gain_is_tap_sum() {
        let x = vec![c(1.0, 0.0); 6];
        let mut d = Vec::new();
        let y = fir_filter(&x, &[c(0.5, 0.0), c(0.5, 0.0)], &mut d);
        assert_eq!(y[0], c(0.5, 0.0));
        assert!(y[1..].iter().all(|&v| v == c(1.0, 0.0)));
    }

    #[test]
    fn jammer_zero_power_and_dc() {
        let x = vec![c(0.2, 0.1); 5];
        let mut n = 0;
        assert_eq!(tone_jammer(&x, 0.17, 0.0, &mut n).unwrap(), x);
        let mut n = 0;
        let y = tone_jammer(&x, 0.0, 1.0, &mut n).unwrap();
        assert!(y.iter().all(|v| (v - c(1.2, 0.1)).norm() < 1e-15));
        assert_eq!(n, 5);
    }

    #[test]
    fn jammer_phase_continues_across_blocks() {
        let x = vec![c(0.0, 0.0); 10];
        let mut n = 0;
        let whole = tone_jammer(&x, 0.123, 2.0, &mut n).unwrap();
        let mut n = 0;
        let mut parts = tone_jammer(&x[..4], 0.123, 2.0, &mut n).unwrap();
        parts.extend(tone_jammer(&x[4..], 0.123, 2.0, &mut n).unwrap());
        assert_eq!(whole, parts);
    }

    #[test]
    fn snr_measurement_edge_cases() {
        let x = vec![c(1.0, 0.0), c(0.0, 1.0)];
        assert_eq!(measure_snr(&x, &x).unwrap(), f64::INFINITY);
        assert!(measure_snr(&[c(0.0, 0.0)], &[c(1.0, 0.0)]).is_err());
        assert!(measure_snr(&x, &x[..1]).is_err());
        let y = vec![c(1.1, 0.0), c(0.0, 0.9)];
        let k = 3.7;
        let xs: Vec<_> = x.iter().map(|v| v * k).collect();
        let ys: Vec<_> = y.iter().map(|v| v * k).collect();
        let a = measure_snr(&x, &y).unwrap();
        let b = measure_snr(&xs, &ys).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!((a - 20.0).abs() < 1e-9);
    }
}
