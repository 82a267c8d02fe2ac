//! Closed-loop simulation of the dithered feedback link.
//!
//! Both ends run the same state predictor. The encoder quantizes the
//! innovation (prediction error) component-wise with subtractive dither from
//! the shared stream; the decoder reconstructs it, applies u = K·(estimate),
//! and both advance their predictors with the same reconstruction — so the
//! mirrored states must stay bit-identical, which the loop asserts every
//! step. Indices are entropy-coded under the configured regime and the
//! achieved (bits, cost) pair is compared against the rate bound.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::coding::{
    build_huffman_with_escape, conditional_codebook, encode_elias_signed, quantize_dithered,
    reconstruct, Codebook, CodebookKind, CodewordLog, ConditionalSymbolModel, DecoderSideInfo,
    DitherStream,
};
use crate::config::{CodebookRegime, ExperimentConfig};
use crate::error::{Error, Result};
use crate::plant::{psd_factor, PlantModel};
use crate::ratedist::{solve_tradeoff, theta_inverse};
use crate::riccati::{solve_dare, DareSolution};

/// Aggregated outcome of a multi-seed closed-loop experiment.
#[derive(Debug, Clone)]
pub struct SimulationReport {
    /// Mean over seeds of the time-average codeword length (bits/step).
    pub avg_bits: f64,
    /// Mean over seeds of the time-average LQG cost.
    pub avg_cost: f64,
    /// R(avg_cost): the prefix-free rate bound at the achieved cost.
    pub bound_at_cost: f64,
    /// θ⁻¹ of the bound: the bound without prefix constraints.
    pub relaxed_bound_at_cost: f64,
    /// avg_bits − bound_at_cost; nonnegative up to seed noise.
    pub gap_bits: f64,
    /// 3-sigma statistical slack of avg_bits across seeds.
    pub eps_stat: f64,
    pub per_seed_bits: Vec<f64>,
    pub per_seed_cost: Vec<f64>,
}

/// Decoder-computable model of the quantizer indices: a discretized Gaussian
/// whose standard deviation follows the predictor-covariance schedule (X0 at
/// t = 0, the stationary innovation covariance afterwards). Nothing in it
/// depends on realized data, so per-context codebooks satisfy the conditional
/// prefix-free regime structurally.
struct InnovationIndexModel {
    step: f64,
    sigma_first: f64,
    sigma_steady: f64,
}

impl InnovationIndexModel {
    fn sigma_at(&self, time: usize) -> f64 {
        if time == 0 {
            self.sigma_first
        } else {
            self.sigma_steady
        }
    }
}

impl ConditionalSymbolModel for InnovationIndexModel {
    fn pmf(&self, si: &DecoderSideInfo) -> Result<(Vec<(i64, f64)>, f64)> {
        gaussian_index_pmf(self.sigma_at(si.time), self.step)
    }
}

/// Discretized-Gaussian pmf over quantizer indices with the dither spread
/// folded in, plus the escape tail mass.
pub fn gaussian_index_pmf(sigma: f64, step: f64) -> Result<(Vec<(i64, f64)>, f64)> {
    if !sigma.is_finite() || !step.is_finite() || step <= 0.0 {
        return Err(Error::Config(format!(
            "index model needs finite sigma and positive step, got sigma {sigma}, step {step}"
        )));
    }
    let spread = (sigma * sigma + step * step / 12.0).sqrt().max(1e-12);
    let k_max = ((8.0 * spread / step).ceil() as i64).max(2);
    let phi = |x: f64| 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
    let mut pmf = Vec::with_capacity((2 * k_max + 1) as usize);
    let mut mass = 0.0;
    for k in -k_max..=k_max {
        let lo = (k as f64 - 0.5) * step / spread;
        let hi = (k as f64 + 0.5) * step / spread;
        let p = phi(hi) - phi(lo);
        if p > 0.0 {
            pmf.push((k, p));
            mass += p;
        }
    }
    let escape = (1.0 - mass).max(1e-12);
    // Renormalize so table + escape is exactly one.
    let total = mass + escape;
    for entry in pmf.iter_mut() {
        entry.1 /= total;
    }
    Ok((pmf, escape / total))
}

/// Stationary per-component innovation standard deviations: the innovation
/// recursion e⁺ = A·(quantization error) + w has covariance A·(Δ²/12)I·Aᵀ + W
/// from t = 1 on.
fn innovation_sigmas(model: &PlantModel, step: f64) -> (Vec<f64>, Vec<f64>) {
    let m = model.state_dim();
    let d = step * step / 12.0;
    let steady = &model.a * DMatrix::identity(m, m) * d * model.a.transpose() + &model.w;
    let first: Vec<f64> = (0..m).map(|i| model.x0[(i, i)].max(0.0).sqrt()).collect();
    let steady: Vec<f64> = (0..m).map(|i| steady[(i, i)].max(0.0).sqrt()).collect();
    (first, steady)
}

fn mix_seed(base: u64, index: u64) -> u64 {
    base ^ index
        .wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add(0x6A09E667F3BCC909)
}

enum StepCoder {
    Elias,
    /// One codebook per component, applied at every step.
    Fixed(Vec<Codebook>),
    /// Per-component codebooks for t = 0 and for t ≥ 1.
    Scheduled {
        first: Vec<Codebook>,
        steady: Vec<Codebook>,
    },
}

impl StepCoder {
    fn code_len(&self, component: usize, time: usize, index: i64) -> Result<usize> {
        match self {
            StepCoder::Elias => Ok(encode_elias_signed(index).len()),
            StepCoder::Fixed(books) => Ok(books[component].encode(index)?.len()),
            StepCoder::Scheduled { first, steady } => {
                let book = if time == 0 {
                    &first[component]
                } else {
                    &steady[component]
                };
                Ok(book.encode(index)?.len())
            }
        }
    }
}

fn build_coder(model: &PlantModel, regime: CodebookRegime, step: f64) -> Result<StepCoder> {
    let (sigma_first, sigma_steady) = innovation_sigmas(model, step);
    match regime {
        CodebookRegime::Elias => Ok(StepCoder::Elias),
        CodebookRegime::Marginal => {
            let books = sigma_steady
                .iter()
                .map(|&sigma| {
                    let (pmf, escape) = gaussian_index_pmf(sigma, step)?;
                    build_huffman_with_escape(&pmf, escape, CodebookKind::Marginal)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(StepCoder::Fixed(books))
        }
        CodebookRegime::SiConditional => {
            let make = |time: usize| -> Result<Vec<Codebook>> {
                (0..model.state_dim())
                    .map(|component| {
                        let model = InnovationIndexModel {
                            step,
                            sigma_first: sigma_first[component],
                            sigma_steady: sigma_steady[component],
                        };
                        let si = DecoderSideInfo {
                            time,
                            ..Default::default()
                        };
                        conditional_codebook(&si, &model)
                    })
                    .collect()
            };
            Ok(StepCoder::Scheduled {
                first: make(0)?,
                steady: make(1)?,
            })
        }
    }
}

/// Runs the full experiment described by the config: `num_seeds` independent
/// closed loops of `horizon` steps each, aggregated into a report. The
/// codeword-length bound is checked at the end; a violation beyond the
/// 3-sigma slack would mean a bug, so it is asserted.
pub fn run_closed_loop(config: &ExperimentConfig) -> Result<SimulationReport> {
    let model = config.plant_model()?;
    let dare = solve_dare(&model)?;
    let quant = config.quantizer()?;
    let sim = config.sim()?;

    let coder = build_coder(&model, quant.codebook_regime, quant.delta)?;

    let mut per_seed_bits = Vec::with_capacity(sim.num_seeds);
    let mut per_seed_cost = Vec::with_capacity(sim.num_seeds);
    for run in 0..sim.num_seeds {
        let (log, cost) = simulate_one(
            &model,
            &dare,
            &coder,
            quant.delta,
            mix_seed(quant.dither_seed, run as u64),
            mix_seed(sim.noise_seed, run as u64),
            sim.horizon,
        )?;
        per_seed_bits.push(log.lengths.iter().sum::<usize>() as f64 / sim.horizon as f64);
        per_seed_cost.push(cost);
    }

    let n = sim.num_seeds as f64;
    let avg_bits = per_seed_bits.iter().sum::<f64>() / n;
    let avg_cost = per_seed_cost.iter().sum::<f64>() / n;
    let eps_stat = if sim.num_seeds >= 2 {
        let var = per_seed_bits
            .iter()
            .map(|b| (b - avg_bits).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        3.0 * var.sqrt() / n.sqrt()
    } else {
        f64::INFINITY
    };

    // The measured cost is a finite-sample estimate and may dip a hair below
    // the cost floor Tr(WS) when the rate premium Tr(Θ)·Δ²/12 vanishes (A = 0
    // has Θ = 0); the true expectation cannot, so the bound is evaluated just
    // inside the feasible region in that case.
    let gamma_eff = avg_cost.max(dare.min_cost * (1.0 + 1e-9) + 1e-12);
    let point = solve_tradeoff(&dare, &model, gamma_eff)?;
    let bound_at_cost = point.rate_bits.ok_or_else(|| {
        Error::Infeasible(format!(
            "measured average cost {avg_cost} sits below the cost floor {}",
            dare.min_cost
        ))
    })?;
    let relaxed_bound_at_cost = theta_inverse(bound_at_cost)?;
    let gap_bits = avg_bits - bound_at_cost;
    assert!(
        gap_bits >= -eps_stat,
        "codeword-length bound violated: avg_bits {avg_bits} vs bound {bound_at_cost} (eps {eps_stat})"
    );

    Ok(SimulationReport {
        avg_bits,
        avg_cost,
        bound_at_cost,
        relaxed_bound_at_cost,
        gap_bits,
        eps_stat,
        per_seed_bits,
        per_seed_cost,
    })
}

/// One seeded closed loop. Returns the codeword log and the time-average
/// cost.
fn simulate_one(
    model: &PlantModel,
    dare: &DareSolution,
    coder: &StepCoder,
    delta: f64,
    dither_seed: u64,
    noise_seed: u64,
    horizon: usize,
) -> Result<(CodewordLog, f64)> {
    let m = model.state_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let noise_factor = psd_factor(&model.w)?;
    let init_factor = psd_factor(&model.x0)?;

    // Encoder and decoder dither streams are separate objects built from the
    // same seed; the loop checks they stay in lockstep.
    let mut enc_dither = DitherStream::new(dither_seed, delta)?;
    let mut dec_dither = DitherStream::new(dither_seed, delta)?;

    let mut x = &init_factor * normal_vector(&mut rng, m);
    let mut enc_pred = DVector::<f64>::zeros(m);
    let mut dec_pred = DVector::<f64>::zeros(m);

    let mut log = CodewordLog::default();
    let mut cost_total = 0.0;

    for t in 0..horizon {
        // Encoder side: quantize each innovation component.
        let mut indices = Vec::with_capacity(m);
        let mut enc_recon = DVector::<f64>::zeros(m);
        for i in 0..m {
            let d = enc_dither.next_sample();
            let index = quantize_dithered(x[i] - enc_pred[i], d, delta)?;
            indices.push(index);
            enc_recon[i] = reconstruct(index, d, delta);
        }

        // Decoder side: same indices, same dither, no access to x.
        let mut dec_recon = DVector::<f64>::zeros(m);
        for (i, &index) in indices.iter().enumerate() {
            let d = dec_dither.next_sample();
            dec_recon[i] = reconstruct(index, d, delta);
            log.push(index, coder.code_len(i, t, index)?);
        }

        let estimate = &dec_pred + &dec_recon;
        let u = &dare.k * &estimate;

        let w = &noise_factor * normal_vector(&mut rng, m);
        let x_next = model.step(&x, &u, &w)?;
        cost_total +=
            crate::plant::quadratic_form(&model.q, &x_next) + crate::plant::quadratic_form(&model.r, &u);

        enc_pred = &model.a * (&enc_pred + &enc_recon) + &model.b * &u;
        dec_pred = &model.a * estimate + &model.b * &u;
        assert!(
            bitwise_equal(&enc_pred, &dec_pred),
            "encoder/decoder predictor mirror diverged at step {t}"
        );

        if enc_pred.norm() > 1e12 || x_next.norm() > 1e12 {
            return Err(Error::Unstable(format!(
                "predictor or state diverged at step {t}"
            )));
        }
        x = x_next;
    }

    Ok((log, cost_total / horizon as f64))
}

fn bitwise_equal(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits())
}

fn normal_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::tests_support::benchmark_config;

    fn config_with(delta: f64, regime: CodebookRegime, horizon: usize, seeds: usize) -> ExperimentConfig {
        let mut cfg = benchmark_config();
        let quant = cfg.quantizer.as_mut().unwrap();
        quant.delta = delta;
        quant.codebook_regime = regime;
        let sim = cfg.sim.as_mut().unwrap();
        sim.horizon = horizon;
        sim.num_seeds = seeds;
        cfg
    }

    #[test]
    fn zero_a_plant_stays_stable_and_bounded() {
        let mut cfg = config_with(1.0, CodebookRegime::Elias, 2000, 4);
        cfg.plant.a = vec![0.0];
        let report = run_closed_loop(&cfg).unwrap();
        assert!(report.avg_cost.is_finite());
        // R(γ) = 0 for the memoryless plant, so the gap is the full bitrate.
        assert!(report.bound_at_cost.abs() < 1e-6);
        assert!(report.avg_bits >= 0.9);
        assert!(report.gap_bits >= -report.eps_stat);
    }

    #[test]
    fn benchmark_loop_respects_the_bound_across_regimes() {
        for regime in [
            CodebookRegime::Elias,
            CodebookRegime::Marginal,
            CodebookRegime::SiConditional,
        ] {
            let cfg = config_with(1.0, regime, 4000, 6);
            let report = run_closed_loop(&cfg).unwrap();
            assert!(
                report.gap_bits >= -report.eps_stat,
                "{regime:?}: gap {} eps {}",
                report.gap_bits,
                report.eps_stat
            );
            assert!(report.relaxed_bound_at_cost <= report.bound_at_cost);
        }
    }

    #[test]
    fn entropy_coding_beats_elias_on_concentrated_indices() {
        let elias = run_closed_loop(&config_with(1.0, CodebookRegime::Elias, 4000, 6)).unwrap();
        let conditional =
            run_closed_loop(&config_with(1.0, CodebookRegime::SiConditional, 4000, 6)).unwrap();
        assert!(
            conditional.avg_bits <= elias.avg_bits + elias.eps_stat + conditional.eps_stat,
            "conditional {} vs elias {}",
            conditional.avg_bits,
            elias.avg_bits
        );
    }

    #[test]
    fn shrinking_delta_trades_bits_for_cost() {
        let coarse = run_closed_loop(&config_with(2.0, CodebookRegime::SiConditional, 4000, 6)).unwrap();
        let fine = run_closed_loop(&config_with(0.5, CodebookRegime::SiConditional, 4000, 6)).unwrap();
        assert!(fine.avg_cost < coarse.avg_cost);
        assert!(fine.avg_bits > coarse.avg_bits);
    }

    #[test]
    fn identical_config_gives_identical_report() {
        let cfg = config_with(1.0, CodebookRegime::Marginal, 1000, 3);
        let a = run_closed_loop(&cfg).unwrap();
        let b = run_closed_loop(&cfg).unwrap();
        assert_eq!(a.per_seed_bits, b.per_seed_bits);
        assert_eq!(a.per_seed_cost, b.per_seed_cost);
    }

    #[test]
    fn index_pmf_is_a_valid_model() {
        let (pmf, escape) = gaussian_index_pmf(1.3, 0.5).unwrap();
        let total: f64 = pmf.iter().map(|&(_, p)| p).sum::<f64>() + escape;
        assert!((total - 1.0).abs() < 1e-12);
        assert!(escape > 0.0 && escape < 1e-6);
        // Symmetric around zero.
        let p0: f64 = pmf.iter().find(|&&(k, _)| k == 0).unwrap().1;
        let p1 = pmf.iter().find(|&&(k, _)| k == 1).unwrap().1;
        let p1n = pmf.iter().find(|&&(k, _)| k == -1).unwrap().1;
        assert!((p1 - p1n).abs() < 1e-12);
        assert!(p0 > p1);
    }

    #[test]
    fn non_finite_sigma_is_a_config_error() {
        assert!(matches!(
            gaussian_index_pmf(f64::NAN, 1.0),
            Err(Error::Config(_))
        ));
    }
}
