//! Shared dither generation and the subtractive dithered uniform quantizer.
//!
//! The dither stream is counter-based: sample i is a pure function of
//! (seed, i), so an encoder and a decoder constructed from the same seed see
//! bit-identical sequences — the operational meaning of shared randomness.
//! Samples are uniform on [−Δ/2, Δ/2).

use crate::error::{Error, Result};

/// SplitMix64 finalizer; maps a counter to a well-mixed 64-bit word.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Uniform in [0, 1) from the top 53 bits of a word, so every platform with
/// IEEE-754 doubles produces the same values.
fn unit_from_word(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Deterministic IID dither source shared by encoder and decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct DitherStream {
    seed: u64,
    step: f64,
    index: u64,
}

impl DitherStream {
    /// Creates a stream with quantizer step Δ > 0.
    pub fn new(seed: u64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Domain(format!("dither step must be > 0, got {step}")));
        }
        Ok(Self {
            seed,
            step,
            index: 0,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Sample at an absolute counter position, without touching the stream
    /// state: uniform on [−Δ/2, Δ/2).
    pub fn sample_at(&self, index: u64) -> f64 {
        let word = splitmix64(self.seed ^ index.wrapping_mul(0xA24BAED4963EE407));
        (unit_from_word(word) - 0.5) * self.step
    }

    /// Next sample in sequence.
    pub fn next_sample(&mut self) -> f64 {
        let value = self.sample_at(self.index);
        self.index += 1;
        value
    }
}

/// Dithered uniform quantization: `round((value + dither) / Δ)` with ties to
/// even. The matching reconstruction is [`reconstruct`].
pub fn quantize_dithered(value: f64, dither: f64, step: f64) -> Result<i64> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Domain(format!("quantizer step must be > 0, got {step}")));
    }
    if !value.is_finite() || !dither.is_finite() {
        return Err(Error::Domain(format!(
            "quantizer input must be finite, got value {value}, dither {dither}"
        )));
    }
    Ok(((value + dither) / step).round_ties_even() as i64)
}

/// Decoder half of the subtractive-dither pair: `index·Δ − dither`. Composing
/// with [`quantize_dithered`] leaves an error inside [−Δ/2, Δ/2].
pub fn reconstruct(index: i64, dither: f64, step: f64) -> f64 {
    index as f64 * step - dither
}

/// Asymptotic Kolmogorov–Smirnov p-value for statistic `d` on `n` samples.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let lambda = (n as f64).sqrt() * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        p += sign * (-2.0 * (k as f64 * lambda).powi(2)).exp();
    }
    (2.0 * p).clamp(0.0, 1.0)
}

/// KS statistic of samples against the uniform law on [lo, hi).
pub fn ks_uniform_statistic(samples: &[f64], lo: f64, hi: f64) -> f64 {
    let n = samples.len();
    let mut unit: Vec<f64> = samples.iter().map(|s| (s - lo) / (hi - lo)).collect();
    unit.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut d = 0.0_f64;
    for (i, s) in unit.iter().enumerate() {
        let emp_hi = (i + 1) as f64 / n as f64;
        let emp_lo = i as f64 / n as f64;
        d = d.max((emp_hi - s).abs()).max((s - emp_lo).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantizer_examples() {
        assert_eq!(quantize_dithered(0.4, 0.0, 1.0).unwrap(), 0);
        assert_eq!(quantize_dithered(0.4, 0.2, 1.0).unwrap(), 1);
        assert_eq!(quantize_dithered(0.5, 0.0, 1.0).unwrap(), 0); // tie to even
        assert_eq!(quantize_dithered(1.5, 0.0, 1.0).unwrap(), 2);
    }

    #[test]
    fn quantizer_rejects_non_finite() {
        assert!(quantize_dithered(f64::NAN, 0.0, 1.0).is_err());
        assert!(quantize_dithered(1.0, f64::INFINITY, 1.0).is_err());
        assert!(quantize_dithered(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn reconstruct_examples() {
        assert_eq!(reconstruct(0, 0.0, 1.0), 0.0);
        assert_eq!(reconstruct(3, 0.25, 0.5), 1.25);
    }

    #[test]
    fn round_trip_error_is_bounded_by_half_step() {
        let mut stream = DitherStream::new(99, 0.75).unwrap();
        for i in 0..5000 {
            let x = (i as f64 * 0.137).sin() * 40.0;
            let d = stream.next_sample();
            let idx = quantize_dithered(x, d, 0.75).unwrap();
            let err = reconstruct(idx, d, 0.75) - x;
            assert!(err.abs() <= 0.75 / 2.0 + 1e-12, "error {err}");
        }
    }

    #[test]
    fn streams_from_same_seed_are_bit_identical() {
        let mut enc = DitherStream::new(1234, 0.5).unwrap();
        let mut dec = DitherStream::new(1234, 0.5).unwrap();
        for _ in 0..10_000 {
            let a = enc.next_sample();
            let b = dec.next_sample();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn sample_at_is_stateless_and_consistent_with_iteration() {
        let mut stream = DitherStream::new(7, 2.0).unwrap();
        let by_index: Vec<f64> = (0..100).map(|i| stream.sample_at(i)).collect();
        for expected in by_index {
            assert_eq!(stream.next_sample().to_bits(), expected.to_bits());
        }
    }

    #[test]
    fn samples_fill_the_half_open_interval() {
        let mut stream = DitherStream::new(5, 1.0).unwrap();
        let n = 100_000;
        let mut min = f64::MAX;
        let mut max = f64::MIN;
        for _ in 0..n {
            let s = stream.next_sample();
            assert!((-0.5..0.5).contains(&s), "sample {s} outside [−Δ/2, Δ/2)");
            min = min.min(s);
            max = max.max(s);
        }
        assert!(min < -0.49);
        assert!(max > 0.49);
    }

    #[test]
    fn samples_pass_uniformity_ks_test() {
        let mut stream = DitherStream::new(2024, 1.0).unwrap();
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| stream.next_sample()).collect();
        let d = ks_uniform_statistic(&samples, -0.5, 0.5);
        let p = ks_p_value(d, n);
        assert!(p > 0.01, "KS statistic {d}, p {p}");
    }

    #[test]
    fn samples_have_negligible_lag_autocorrelation() {
        let mut stream = DitherStream::new(31, 1.0).unwrap();
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| stream.next_sample()).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
        for lag in 1..=5 {
            let mut acc = 0.0;
            for i in 0..n - lag {
                acc += (samples[i] - mean) * (samples[i + lag] - mean);
            }
            let rho = acc / ((n - lag) as f64 * var);
            assert!(rho.abs() < 0.01, "lag {lag} autocorrelation {rho}");
        }
    }

    #[test]
    fn subtractive_dither_error_is_uniform_and_uncorrelated() {
        // Schuchman conditions: with dither uniform on [−Δ/2, Δ/2), the
        // reconstruction error is uniform and uncorrelated with the input.
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let step = 0.8;
        let mut stream = DitherStream::new(4242, step).unwrap();
        let n = 100_000;
        let mut inputs = Vec::with_capacity(n);
        let mut errors = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) * 2.5;
            let d = stream.next_sample();
            let idx = quantize_dithered(x, d, step).unwrap();
            inputs.push(x);
            errors.push(reconstruct(idx, d, step) - x);
        }

        // Uniformity of errors on [−Δ/2, Δ/2).
        let dstat = ks_uniform_statistic(&errors, -step / 2.0, step / 2.0);
        let p = ks_p_value(dstat, n);
        assert!(p > 0.01, "error KS statistic {dstat}, p {p}");

        // Decorrelation from the input.
        let mx = inputs.iter().sum::<f64>() / n as f64;
        let me = errors.iter().sum::<f64>() / n as f64;
        let mut cov = 0.0;
        let mut vx = 0.0;
        let mut ve = 0.0;
        for i in 0..n {
            cov += (inputs[i] - mx) * (errors[i] - me);
            vx += (inputs[i] - mx).powi(2);
            ve += (errors[i] - me).powi(2);
        }
        let rho = cov / (vx.sqrt() * ve.sqrt());
        assert!(rho.abs() < 0.01, "input-error correlation {rho}");
    }
}
