//! Command-line front end.
//!
//! Subcommands: `dare` (Riccati byproducts), `tradeoff` (R(γ) sweep to CSV),
//! `simulate` (closed-loop experiment to CSV), `policy-di` (scalar sensor
//! sweep), and `verify` (exact finite-system suites plus coding property
//! suites). Exit codes: 0 success, 1 verification/runtime failure, 2 usage
//! or configuration errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};

use crate::coding::dither::{ks_p_value, ks_uniform_statistic};
use crate::coding::huffman::{exhaustive_optimal_average, for_each_composition};
use crate::coding::{
    build_huffman, build_huffman_with_escape, decode_elias_signed, encode_elias_signed,
    quantize_dithered, reconstruct, CodebookKind, DitherStream,
};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::finite::{random_system, verify_system, DitherShape};
use crate::gaussdi::min_di_over_scalar_sensors_with_grid;
use crate::ratedist::{solve_tradeoff, tradeoff_curve, TradeoffPoint};
use crate::report::{emit_simulation_csv, emit_tradeoff_csv};
use crate::riccati::solve_dare;
use crate::sim::run_closed_loop;

#[derive(Debug, Parser)]
#[command(
    name = "ratebound",
    about = "Bitrate lower bounds for LQG control over a noiseless binary feedback channel",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the Riccati equation and print S, K, Theta, Tr(WS).
    Dare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sweep the rate-distortion bound over the configured gamma grid.
    Tradeoff {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the closed-loop dithered-quantizer experiment.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep scalar linear-Gaussian sensors and report the minimum
    /// steady-state directed information within the cost budget.
    PolicyDi {
        #[arg(long)]
        config: PathBuf,
        /// Cost budget; defaults to the tradeoff section's gamma_min.
        #[arg(long)]
        gamma: Option<f64>,
        /// Sensor-noise sweep as MIN:MAX:STEPS.
        #[arg(long, value_name = "MIN:MAX:STEPS", default_value = "1e-9:1e9:4000")]
        v_grid: String,
    },
    /// Exhaustively verify the information inequalities on randomized finite
    /// systems and run the coding property suites.
    Verify {
        /// Number of randomized systems.
        #[arg(long, default_value_t = 100)]
        systems: u64,
        /// Master seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

/// Entry point shared by the binary and the tests. Returns the process exit
/// code instead of exiting, so it stays testable.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) | Error::Io(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Dare { config } => cmd_dare(&config),
        Command::Tradeoff { config, out } => cmd_tradeoff(&config, &out),
        Command::Simulate { config, out } => cmd_simulate(&config, &out),
        Command::PolicyDi {
            config,
            gamma,
            v_grid,
        } => cmd_policy_di(&config, gamma, &v_grid),
        Command::Verify { systems, seed } => cmd_verify(systems, seed),
    }
}

fn print_matrix(name: &str, m: &nalgebra::DMatrix<f64>) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:+.9e}", m[(i, j)])).collect();
        if i == 0 {
            println!("{name} = [{}]", row.join(", "));
        } else {
            println!("{:width$}   [{}]", "", row.join(", "), width = name.len());
        }
    }
}

fn cmd_dare(config: &Path) -> Result<i32> {
    let cfg = ExperimentConfig::from_file(config)?;
    let model = cfg.plant_model()?;
    let dare = solve_dare(&model)?;
    print_matrix("S", &dare.s);
    print_matrix("K", &dare.k);
    print_matrix("Theta", &dare.theta);
    println!("Tr(WS) = {:.9e}", dare.min_cost);
    Ok(0)
}

fn cmd_tradeoff(config: &Path, out: &Path) -> Result<i32> {
    let cfg = ExperimentConfig::from_file(config)?;
    let model = cfg.plant_model()?;
    let dare = solve_dare(&model)?;
    let grid = cfg.gamma_grid()?;
    let mut points = Vec::with_capacity(grid.len());
    for outcome in tradeoff_curve(&dare, &model, &grid)? {
        match outcome {
            Ok(point) => points.push(point),
            Err(err) => {
                // Failed points are flagged as infeasible rows; the sweep
                // itself continues.
                eprintln!("warning: {err}");
                points.push(TradeoffPoint::infeasible(f64::NAN));
            }
        }
    }
    emit_tradeoff_csv(&points, out)?;
    println!("wrote {} points to {}", points.len(), out.display());
    Ok(0)
}

fn cmd_simulate(config: &Path, out: &Path) -> Result<i32> {
    let cfg = ExperimentConfig::from_file(config)?;
    let report = run_closed_loop(&cfg)?;
    emit_simulation_csv(&report, out)?;
    println!(
        "avg_bits {:.6} avg_cost {:.6} bound {:.6} relaxed {:.6} gap {:.6} eps {:.3e}",
        report.avg_bits,
        report.avg_cost,
        report.bound_at_cost,
        report.relaxed_bound_at_cost,
        report.gap_bits,
        report.eps_stat
    );
    Ok(0)
}

fn cmd_policy_di(config: &Path, gamma: Option<f64>, v_grid: &str) -> Result<i32> {
    let cfg = ExperimentConfig::from_file(config)?;
    let model = cfg.plant_model()?;
    let dare = solve_dare(&model)?;
    let gamma = match gamma {
        Some(g) => g,
        None => cfg.tradeoff()?.gamma_min,
    };
    let (v_min, v_max, steps) = parse_v_grid(v_grid)?;
    let di = min_di_over_scalar_sensors_with_grid(&model, &dare, gamma, v_min, v_max, steps)?;
    let bound = solve_tradeoff(&dare, &model, gamma)?
        .rate_bits
        .ok_or_else(|| Error::Infeasible(format!("gamma {gamma} below the cost floor")))?;
    println!("gamma {gamma:.6e}");
    println!("min policy DI  {di:.9} bits/step");
    println!("R(gamma) bound {bound:.9} bits/step");
    println!("excess         {:.3e} bits/step", di - bound);
    Ok(0)
}

fn parse_v_grid(spec: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "--v-grid expects MIN:MAX:STEPS, got {spec:?}"
        )));
    }
    let v_min: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("invalid v-grid minimum {:?}", parts[0])))?;
    let v_max: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("invalid v-grid maximum {:?}", parts[1])))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| Error::Config(format!("invalid v-grid step count {:?}", parts[2])))?;
    Ok((v_min, v_max, steps))
}

fn cmd_verify(systems: u64, seed: u64) -> Result<i32> {
    let mut failures = 0usize;

    println!("== finite-system suite: {systems} randomized systems (seed {seed}) ==");
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>9} {:>12} {:>12} {:>6}",
        "system", "dpi.lhs", "dpi.rhs", "margin", "lenbd", "chain.dev", "tele.dev", "ok"
    );
    for index in 0..systems {
        let sys = random_system(seed, index, DitherShape::Random);
        let verdict = verify_system(&sys, index)?;
        let ok = verdict.all_hold();
        if !ok {
            failures += 1;
        }
        println!(
            "{:>6} {:>12.6} {:>12.6} {:>12.3e} {:>9} {:>12.3e} {:>12.3e} {:>6}",
            index,
            verdict.data_processing.lhs_bits,
            verdict.data_processing.rhs_bits,
            verdict.data_processing.lhs_bits - verdict.data_processing.rhs_bits,
            if verdict.length_bound_marginal.holds && verdict.length_bound_conditional.holds {
                "hold"
            } else {
                "FAIL"
            },
            verdict.chain_rule_dev,
            verdict.telescoping_dev,
            if ok { "yes" } else { "NO" }
        );
    }

    println!("== coding property suites ==");
    failures += run_coding_suites(seed)?;

    if failures == 0 {
        println!("all checks hold");
        Ok(0)
    } else {
        println!("{failures} check(s) failed");
        Ok(1)
    }
}

fn run_coding_suites(seed: u64) -> Result<usize> {
    let mut failures = 0usize;

    // Elias round trip over the full ±10^6 window.
    let mut elias_ok = true;
    for n in -1_000_000..=1_000_000_i64 {
        let code = encode_elias_signed(n);
        let mut cursor = 0;
        if decode_elias_signed(&code, &mut cursor)? != n || cursor != code.len() {
            elias_ok = false;
            break;
        }
    }
    println!("elias round-trip on [-1e6, 1e6]: {}", verdict(elias_ok));
    failures += usize::from(!elias_ok);

    // Huffman optimality against brute-force prefix codes.
    let mut huffman_ok = true;
    for n in 1..=4usize {
        for_each_composition(8, n, &mut |parts| {
            let pmf: Vec<(i64, f64)> = parts
                .iter()
                .enumerate()
                .map(|(s, &k)| (s as i64, k as f64 / 8.0))
                .collect();
            let book = build_huffman(&pmf).expect("valid pmf");
            let avg: f64 = pmf
                .iter()
                .map(|&(s, p)| p * book.length_of(s).unwrap() as f64)
                .sum();
            let probs: Vec<f64> = pmf.iter().map(|&(_, p)| p).collect();
            if avg > exhaustive_optimal_average(&probs, 4) + 1e-12 {
                huffman_ok = false;
            }
            if !book.is_prefix_free() || book.kraft_sum() > 1.0 + 1e-12 {
                huffman_ok = false;
            }
        });
    }
    println!("huffman optimal on all k/8 pmfs (<=4 symbols): {}", verdict(huffman_ok));
    failures += usize::from(!huffman_ok);

    // Random escape codebooks stay prefix-free and Kraft-satisfying.
    let mut books_ok = true;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xC0DEB00C);
    for _ in 0..50 {
        let n = rng.gen_range(2..10usize);
        let mut probs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let escape = rng.gen_range(0.001..0.05);
        let z: f64 = probs.iter().sum::<f64>() / (1.0 - escape);
        probs.iter_mut().for_each(|p| *p /= z);
        let mass: f64 = probs.iter().sum();
        let pmf: Vec<(i64, f64)> = probs
            .into_iter()
            .enumerate()
            .map(|(s, p)| (s as i64, p))
            .collect();
        let book = build_huffman_with_escape(&pmf, 1.0 - mass, CodebookKind::SiConditional)?;
        if !book.is_prefix_free() || book.kraft_sum() > 1.0 + 1e-12 {
            books_ok = false;
        }
    }
    println!("random escape codebooks prefix-free and Kraft-feasible: {}", verdict(books_ok));
    failures += usize::from(!books_ok);

    // Dither statistics: uniformity, stream identity, subtractive error law.
    let n = 100_000;
    let step = 0.8;
    let mut stream = DitherStream::new(seed ^ 0xD17AE4, step)?;
    let samples: Vec<f64> = (0..n).map(|_| stream.next_sample()).collect();
    let d = ks_uniform_statistic(&samples, -step / 2.0, step / 2.0);
    let p_uniform = ks_p_value(d, n);

    let mut enc = DitherStream::new(seed, step)?;
    let mut dec = DitherStream::new(seed, step)?;
    let mut identical = true;
    let mut errors = Vec::with_capacity(n);
    let mut inputs = Vec::with_capacity(n);
    let mut gauss = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    for _ in 0..n {
        let de = enc.next_sample();
        let dd = dec.next_sample();
        if de.to_bits() != dd.to_bits() {
            identical = false;
        }
        let x: f64 = gauss.sample::<f64, _>(rand_distr::StandardNormal) * 2.0;
        let k = quantize_dithered(x, de, step)?;
        inputs.push(x);
        errors.push(reconstruct(k, dd, step) - x);
    }
    let p_err = ks_p_value(ks_uniform_statistic(&errors, -step / 2.0, step / 2.0), n);
    let rho = correlation(&inputs, &errors);
    let dither_ok = p_uniform > 0.01 && identical && p_err > 0.01 && rho.abs() < 0.01;
    println!(
        "dither stats (uniform p {:.3}, error p {:.3}, corr {:+.4}, streams identical {}): {}",
        p_uniform,
        p_err,
        rho,
        identical,
        verdict(dither_ok)
    );
    failures += usize::from(!dither_ok);

    Ok(failures)
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    cov / (va.sqrt() * vb.sqrt())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}
