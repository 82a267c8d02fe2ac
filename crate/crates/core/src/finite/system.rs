//! Fully enumerable finite-alphabet closed loops.
//!
//! A [`FiniteSystem`] mirrors the structure of the Gaussian loop on finite
//! sets: exogenous dither and noise, a deterministic transition, a randomized
//! encoder kernel conditioned on (a^{t−1}, d^t, x^t), and a randomized
//! decoder kernel conditioned on (a^t, d^t, u^{t−1}). The kernel views make
//! those conditioning sets structural: an encoder cannot read inputs, a
//! decoder cannot read states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest admissible alphabet (values are packed in 3 bits).
pub const MAX_ALPHABET: usize = 8;
/// Largest admissible horizon T.
pub const MAX_HORIZON: usize = 3;
/// Largest admissible nominal support for exact enumeration.
pub const MAX_SUPPORT: u128 = 10_000_000;

/// Everything an encoder kernel may condition on at time t.
#[derive(Debug, Clone, Copy)]
pub struct EncoderView<'a> {
    pub t: usize,
    /// Past codewords a^{t−1}.
    pub codewords: &'a [usize],
    /// Dither d^t, including the current sample.
    pub dithers: &'a [usize],
    /// States x^t, including the current state.
    pub states: &'a [usize],
}

/// Everything a decoder kernel may condition on at time t.
#[derive(Debug, Clone, Copy)]
pub struct DecoderView<'a> {
    pub t: usize,
    /// Codewords a^t, including the current one.
    pub codewords: &'a [usize],
    /// Dither d^t.
    pub dithers: &'a [usize],
    /// Past inputs u^{t−1}.
    pub inputs: &'a [usize],
}

pub type TransitionFn = dyn Fn(usize, usize, usize) -> usize;
pub type EncoderFn = dyn Fn(EncoderView<'_>) -> Vec<f64>;
pub type DecoderFn = dyn Fn(DecoderView<'_>) -> Vec<f64>;

/// A finite closed loop over horizon t = 0..=T.
pub struct FiniteSystem {
    pub state_n: usize,
    pub input_n: usize,
    pub codeword_n: usize,
    pub dither_n: usize,
    pub noise_n: usize,
    /// Horizon T (inclusive); at most [`MAX_HORIZON`].
    pub horizon: usize,
    pub init_pmf: Vec<f64>,
    pub noise_pmf: Vec<f64>,
    pub dither_pmf: Vec<f64>,
    /// x_{t+1} = transition(x_t, u_t, w_t).
    pub transition: Box<TransitionFn>,
    pub encoder: Box<EncoderFn>,
    pub decoder: Box<DecoderFn>,
}

impl FiniteSystem {
    /// Structural checks: alphabet sizes, pmf lengths and normalization.
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("state", self.state_n),
            ("input", self.input_n),
            ("codeword", self.codeword_n),
            ("dither", self.dither_n),
            ("noise", self.noise_n),
        ] {
            if n == 0 || n > MAX_ALPHABET {
                return Err(Error::Domain(format!(
                    "{name} alphabet size {n} outside 1..={MAX_ALPHABET}"
                )));
            }
        }
        if self.horizon > MAX_HORIZON {
            return Err(Error::Domain(format!(
                "horizon {} exceeds the cap {MAX_HORIZON}",
                self.horizon
            )));
        }
        for (name, pmf, n) in [
            ("init", &self.init_pmf, self.state_n),
            ("noise", &self.noise_pmf, self.noise_n),
            ("dither", &self.dither_pmf, self.dither_n),
        ] {
            check_pmf(name, pmf, n)?;
        }
        Ok(())
    }

    /// Nominal support size of the joint trajectory space.
    pub fn nominal_support(&self) -> u128 {
        let t1 = self.horizon as u32 + 1;
        (self.state_n as u128)
            * (self.dither_n as u128).pow(t1)
            * (self.noise_n as u128).pow(self.horizon as u32)
            * (self.codeword_n as u128).pow(t1)
            * (self.input_n as u128).pow(t1)
    }
}

pub(crate) fn check_pmf(name: &str, pmf: &[f64], n: usize) -> Result<()> {
    if pmf.len() != n {
        return Err(Error::Dimension(format!(
            "{name} pmf has {} entries for an alphabet of {n}",
            pmf.len()
        )));
    }
    if pmf.iter().any(|&p| !(0.0..=1.0).contains(&p) || !p.is_finite()) {
        return Err(Error::Domain(format!("{name} pmf has an invalid entry")));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "{name} pmf sums to {total}, expected 1 within 1e-12"
        )));
    }
    Ok(())
}

/// Shape of the dither marginal used by [`random_system`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DitherShape {
    /// Dirichlet(1) row like every other pmf.
    Random,
    /// Exactly uniform.
    Uniform,
    /// Strongly tilted geometric weights.
    Skewed,
}

fn dirichlet_row<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-12..1.0_f64).ln()).collect();
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= total);
    // Make the sum exactly 1 to the last ulp.
    let total: f64 = row.iter().sum();
    row[0] += 1.0 - total;
    row
}

fn mixed_radix_index(digit_groups: &[(&[usize], usize)]) -> usize {
    let mut idx = 0;
    for &(digits, radix) in digit_groups {
        for &d in digits {
            idx = idx * radix + d;
        }
    }
    idx
}

/// Draws a randomized system: alphabets of size 2–3, horizon T ∈ {1, 2},
/// Dirichlet(1) kernels, deterministic random transition. Identical
/// `(master_seed, index, dither)` always produce the same system.
pub fn random_system(master_seed: u64, index: u64, dither: DitherShape) -> FiniteSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(
        master_seed ^ index.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(0xD1B54A32D192ED03),
    );

    let state_n = rng.gen_range(2..=3usize);
    let input_n = rng.gen_range(2..=3usize);
    let codeword_n = rng.gen_range(2..=3usize);
    let dither_n = rng.gen_range(2..=3usize);
    let noise_n = rng.gen_range(2..=3usize);
    let horizon = rng.gen_range(1..=2usize);

    let init_pmf = dirichlet_row(&mut rng, state_n);
    let noise_pmf = dirichlet_row(&mut rng, noise_n);
    let dither_pmf = match dither {
        DitherShape::Random => dirichlet_row(&mut rng, dither_n),
        DitherShape::Uniform => {
            let _ = dirichlet_row(&mut rng, dither_n); // keep the draw sequence aligned
            let mut row = vec![1.0 / dither_n as f64; dither_n];
            let total: f64 = row.iter().sum();
            row[0] += 1.0 - total;
            row
        }
        DitherShape::Skewed => {
            let _ = dirichlet_row(&mut rng, dither_n);
            let mut row: Vec<f64> = (0..dither_n).map(|i| 0.25_f64.powi(i as i32)).collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
            let total: f64 = row.iter().sum();
            row[0] += 1.0 - total;
            row
        }
    };

    let mut transition_table = vec![0usize; state_n * input_n * noise_n];
    for slot in transition_table.iter_mut() {
        *slot = rng.gen_range(0..state_n);
    }

    // Precomputed per-t kernel tables, indexed by the mixed-radix code of the
    // conditioning histories; closures below only do index arithmetic.
    let mut encoder_tables: Vec<Vec<Vec<f64>>> = Vec::with_capacity(horizon + 1);
    let mut decoder_tables: Vec<Vec<Vec<f64>>> = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        let enc_rows = codeword_n.pow(t as u32)
            * dither_n.pow(t as u32 + 1)
            * state_n.pow(t as u32 + 1);
        encoder_tables.push((0..enc_rows).map(|_| dirichlet_row(&mut rng, codeword_n)).collect());
        let dec_rows = codeword_n.pow(t as u32 + 1)
            * dither_n.pow(t as u32 + 1)
            * input_n.pow(t as u32);
        decoder_tables.push((0..dec_rows).map(|_| dirichlet_row(&mut rng, input_n)).collect());
    }

    let (sn, un, cn, dn, wn) = (state_n, input_n, codeword_n, dither_n, noise_n);
    FiniteSystem {
        state_n,
        input_n,
        codeword_n,
        dither_n,
        noise_n,
        horizon,
        init_pmf,
        noise_pmf,
        dither_pmf,
        transition: Box::new(move |x, u, w| transition_table[(x * un + u) * wn + w]),
        encoder: Box::new(move |view: EncoderView<'_>| {
            let idx = mixed_radix_index(&[
                (view.codewords, cn),
                (view.dithers, dn),
                (view.states, sn),
            ]);
            encoder_tables[view.t][idx].clone()
        }),
        decoder: Box::new(move |view: DecoderView<'_>| {
            let idx = mixed_radix_index(&[
                (view.codewords, cn),
                (view.dithers, dn),
                (view.inputs, un),
            ]);
            decoder_tables[view.t][idx].clone()
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_system_is_reproducible() {
        let a = random_system(99, 4, DitherShape::Random);
        let b = random_system(99, 4, DitherShape::Random);
        assert_eq!(a.state_n, b.state_n);
        assert_eq!(a.horizon, b.horizon);
        assert_eq!(a.init_pmf, b.init_pmf);
        let view = EncoderView {
            t: 0,
            codewords: &[],
            dithers: &[0],
            states: &[1],
        };
        assert_eq!((a.encoder)(view), (b.encoder)(view));
    }

    #[test]
    fn random_system_validates() {
        for idx in 0..20 {
            let sys = random_system(7, idx, DitherShape::Random);
            sys.validate().unwrap();
            assert!(sys.nominal_support() <= MAX_SUPPORT);
        }
    }

    #[test]
    fn dither_shapes_share_everything_but_the_dither() {
        let a = random_system(5, 0, DitherShape::Uniform);
        let b = random_system(5, 0, DitherShape::Skewed);
        assert_eq!(a.init_pmf, b.init_pmf);
        assert_eq!(a.noise_pmf, b.noise_pmf);
        assert_ne!(a.dither_pmf, b.dither_pmf);
    }

    #[test]
    fn validate_rejects_bad_pmf() {
        let mut sys = random_system(1, 1, DitherShape::Random);
        sys.init_pmf[0] += 0.5;
        assert!(sys.validate().is_err());
    }
}
