//! Exact joint distribution of a finite closed loop.
//!
//! Trajectories are enumerated in causal order (x₀, then per step: dither,
//! codeword, input, noise) with the factorized kernels multiplied along the
//! way; zero-probability branches are pruned. Realized states x₁..x_T are
//! materialized into the table so information functionals can select them
//! like any other variable.

use super::system::{check_pmf, DecoderView, EncoderView, FiniteSystem, MAX_SUPPORT};
use crate::error::{Error, Result};

/// Bits reserved per variable in a packed trajectory key.
const VAR_BITS: u32 = 3;

/// One process of the closed loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Process {
    State,
    Dither,
    Noise,
    Codeword,
    Control,
}

/// A single variable: a process at a time index.
pub type VarId = (Process, usize);

/// Exact joint table over all trajectory variables.
#[derive(Debug, Clone)]
pub struct JointTable {
    pub horizon: usize,
    /// Radix (alphabet size) of each variable in layout order.
    radices: Vec<usize>,
    /// Sparse support: packed trajectory key and its probability.
    entries: Vec<(u64, f64)>,
}

impl JointTable {
    /// Layout position of a variable, or an error if the selector does not
    /// exist in this table.
    pub fn var_position(&self, var: VarId) -> Result<usize> {
        let (process, t) = var;
        let t1 = self.horizon + 1;
        let pos = match process {
            Process::State if t < t1 => t,
            Process::Dither if t < t1 => t1 + t,
            Process::Noise if t < self.horizon => 2 * t1 + t,
            Process::Codeword if t < t1 => 2 * t1 + self.horizon + t,
            Process::Control if t < t1 => 3 * t1 + self.horizon + t,
            _ => {
                return Err(Error::Selector(format!(
                    "{process:?} at time {t} is outside a horizon-{} table",
                    self.horizon
                )))
            }
        };
        Ok(pos)
    }

    pub fn radix_of(&self, var: VarId) -> Result<usize> {
        Ok(self.radices[self.var_position(var)?])
    }

    /// Radix of the variable at a layout position.
    pub fn radix_at(&self, position: usize) -> usize {
        self.radices[position]
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|&(_, p)| p).sum()
    }

    /// Value of a variable inside a packed key.
    pub fn extract(&self, key: u64, position: usize) -> usize {
        ((key >> (VAR_BITS * position as u32)) & ((1 << VAR_BITS) - 1)) as usize
    }

    /// Dense marginal over the given variables (in the given order), plus the
    /// per-variable radices for indexing.
    pub fn marginal(&self, vars: &[VarId]) -> Result<(Vec<f64>, Vec<usize>)> {
        let positions: Vec<usize> = vars
            .iter()
            .map(|&v| self.var_position(v))
            .collect::<Result<_>>()?;
        let radices: Vec<usize> = positions.iter().map(|&p| self.radices[p]).collect();
        let size: usize = radices.iter().product::<usize>().max(1);
        let mut dense = vec![0.0; size];
        for &(key, p) in &self.entries {
            let mut idx = 0;
            for (pos, radix) in positions.iter().zip(radices.iter()) {
                idx = idx * radix + self.extract(key, *pos);
            }
            dense[idx] += p;
        }
        Ok((dense, radices))
    }
}

/// Builds the exact joint distribution by multiplying the factorized kernels
/// in causal order. Fails before allocating anything if the nominal support
/// exceeds the enumeration cap.
pub fn enumerate_joint(sys: &FiniteSystem) -> Result<JointTable> {
    sys.validate()?;
    if sys.nominal_support() > MAX_SUPPORT {
        return Err(Error::TooLarge(format!(
            "nominal support {} exceeds {MAX_SUPPORT}",
            sys.nominal_support()
        )));
    }

    let t1 = sys.horizon + 1;
    let mut radices = Vec::with_capacity(4 * t1 + sys.horizon);
    radices.extend(std::iter::repeat_n(sys.state_n, t1));
    radices.extend(std::iter::repeat_n(sys.dither_n, t1));
    radices.extend(std::iter::repeat_n(sys.noise_n, sys.horizon));
    radices.extend(std::iter::repeat_n(sys.codeword_n, t1));
    radices.extend(std::iter::repeat_n(sys.input_n, t1));
    debug_assert!(radices.len() as u32 * VAR_BITS <= 64);

    let mut table = JointTable {
        horizon: sys.horizon,
        radices,
        entries: Vec::new(),
    };

    let mut walker = Walker {
        sys,
        states: Vec::with_capacity(t1),
        dithers: Vec::with_capacity(t1),
        noises: Vec::with_capacity(sys.horizon),
        codewords: Vec::with_capacity(t1),
        inputs: Vec::with_capacity(t1),
        out: &mut table.entries,
        horizon: sys.horizon,
    };
    for (x0, &p0) in sys.init_pmf.iter().enumerate() {
        if p0 <= 0.0 {
            continue;
        }
        walker.states.push(x0);
        walker.step(0, p0)?;
        walker.states.pop();
    }

    Ok(table)
}

struct Walker<'a> {
    sys: &'a FiniteSystem,
    states: Vec<usize>,
    dithers: Vec<usize>,
    noises: Vec<usize>,
    codewords: Vec<usize>,
    inputs: Vec<usize>,
    out: &'a mut Vec<(u64, f64)>,
    horizon: usize,
}

impl Walker<'_> {
    fn step(&mut self, t: usize, prob: f64) -> Result<()> {
        for d in 0..self.sys.dither_n {
            let pd = self.sys.dither_pmf[d];
            if pd <= 0.0 {
                continue;
            }
            self.dithers.push(d);
            let enc = (self.sys.encoder)(EncoderView {
                t,
                codewords: &self.codewords,
                dithers: &self.dithers,
                states: &self.states,
            });
            check_pmf("encoder", &enc, self.sys.codeword_n)?;
            for (a, &pa) in enc.iter().enumerate() {
                if pa <= 0.0 {
                    continue;
                }
                self.codewords.push(a);
                let dec = (self.sys.decoder)(DecoderView {
                    t,
                    codewords: &self.codewords,
                    dithers: &self.dithers,
                    inputs: &self.inputs,
                });
                check_pmf("decoder", &dec, self.sys.input_n)?;
                for (u, &pu) in dec.iter().enumerate() {
                    if pu <= 0.0 {
                        continue;
                    }
                    self.inputs.push(u);
                    let p_here = prob * pd * pa * pu;
                    if t == self.horizon {
                        self.emit(p_here);
                    } else {
                        for w in 0..self.sys.noise_n {
                            let pw = self.sys.noise_pmf[w];
                            if pw <= 0.0 {
                                continue;
                            }
                            self.noises.push(w);
                            let x = self.states[t];
                            self.states.push((self.sys.transition)(x, u, w));
                            self.step(t + 1, p_here * pw)?;
                            self.states.pop();
                            self.noises.pop();
                        }
                    }
                    self.inputs.pop();
                }
                self.codewords.pop();
            }
            self.dithers.pop();
        }
        Ok(())
    }

    fn emit(&mut self, prob: f64) {
        let t1 = self.horizon + 1;
        let mut key = 0u64;
        let mut shift = 0u32;
        let mut push = |value: usize, shift: &mut u32| {
            key |= (value as u64) << *shift;
            *shift += VAR_BITS;
        };
        for i in 0..t1 {
            push(self.states[i], &mut shift);
        }
        for i in 0..t1 {
            push(self.dithers[i], &mut shift);
        }
        for i in 0..self.horizon {
            push(self.noises[i], &mut shift);
        }
        for i in 0..t1 {
            push(self.codewords[i], &mut shift);
        }
        for i in 0..t1 {
            push(self.inputs[i], &mut shift);
        }
        self.out.push((key, prob));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite::system::{random_system, DitherShape};

    fn point_mass(n: usize, at: usize) -> Vec<f64> {
        let mut pmf = vec![0.0; n];
        pmf[at] = 1.0;
        pmf
    }

    #[test]
    fn deterministic_system_has_single_trajectory() {
        let sys = FiniteSystem {
            state_n: 2,
            input_n: 2,
            codeword_n: 2,
            dither_n: 2,
            noise_n: 2,
            horizon: 2,
            init_pmf: point_mass(2, 1),
            noise_pmf: point_mass(2, 0),
            dither_pmf: point_mass(2, 1),
            transition: Box::new(|x, u, _| (x + u) % 2),
            encoder: Box::new(|view| point_mass(2, *view.states.last().unwrap())),
            decoder: Box::new(|view| point_mass(2, *view.codewords.last().unwrap())),
        };
        let table = enumerate_joint(&sys).unwrap();
        assert_eq!(table.entries().len(), 1);
        assert!((table.entries()[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_horizon_uniform_bits_give_product_measure() {
        let sys = FiniteSystem {
            state_n: 2,
            input_n: 2,
            codeword_n: 2,
            dither_n: 2,
            noise_n: 2,
            horizon: 0,
            init_pmf: vec![0.5, 0.5],
            noise_pmf: vec![0.5, 0.5],
            dither_pmf: vec![0.5, 0.5],
            transition: Box::new(|x, _, _| x),
            encoder: Box::new(|_| vec![0.5, 0.5]),
            decoder: Box::new(|_| vec![0.5, 0.5]),
        };
        let table = enumerate_joint(&sys).unwrap();
        // x0, d0, a0, u0: 16 equally likely trajectories.
        assert_eq!(table.entries().len(), 16);
        for &(_, p) in table.entries() {
            assert!((p - 1.0 / 16.0).abs() < 1e-15);
        }
        assert!((table.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn x0_marginal_matches_init_pmf() {
        let sys = random_system(3, 0, DitherShape::Random);
        let table = enumerate_joint(&sys).unwrap();
        let (marg, _) = table.marginal(&[(Process::State, 0)]).unwrap();
        for (value, &p) in marg.iter().enumerate() {
            assert!(
                (p - sys.init_pmf[value]).abs() < 1e-12,
                "x0 = {value}: {p} vs {}",
                sys.init_pmf[value]
            );
        }
    }

    #[test]
    fn probabilities_sum_to_one_on_random_systems() {
        for idx in 0..10 {
            let sys = random_system(17, idx, DitherShape::Random);
            let table = enumerate_joint(&sys).unwrap();
            assert!((table.total_probability() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn oversized_support_is_rejected_before_allocation() {
        let sys = FiniteSystem {
            state_n: 8,
            input_n: 8,
            codeword_n: 8,
            dither_n: 8,
            noise_n: 8,
            horizon: 3,
            init_pmf: vec![0.125; 8],
            noise_pmf: vec![0.125; 8],
            dither_pmf: vec![0.125; 8],
            transition: Box::new(|x, _, _| x),
            encoder: Box::new(|_| vec![0.125; 8]),
            decoder: Box::new(|_| vec![0.125; 8]),
        };
        let err = enumerate_joint(&sys).unwrap_err();
        assert!(matches!(err, Error::TooLarge(_)));
    }

    #[test]
    fn selector_outside_horizon_fails() {
        let sys = random_system(3, 1, DitherShape::Random);
        let table = enumerate_joint(&sys).unwrap();
        assert!(table.var_position((Process::State, 3)).is_err());
        assert!(table.var_position((Process::Noise, sys.horizon)).is_err());
    }
}
