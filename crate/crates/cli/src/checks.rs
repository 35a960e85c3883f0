// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};

use clap::Args;
use drecusum::distributions::GaussianSpec;
use drecusum::eval::{empirical_accuracy, oracle_check, AccuracySetup, OracleSetup, Preset};
use drecusum::RandomSource;
use ndarray::Array1;
use serde::Deserialize;

use crate::failure::{Failure, Outcome};

/// Two-Gaussian setup file. Missing means are drawn from the fig2b preset
/// with the run's seed; missing standard deviations default to 1.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetupFile {
    mean1: Option<Vec<f64>>,
    mean2: Option<Vec<f64>>,
    sd1: Option<Vec<f64>>,
    sd2: Option<Vec<f64>>,
    n: Option<usize>,
    t_star: Option<usize>,
    t_split: Option<usize>,
    t_splits: Option<Vec<usize>>,
    a_clip: Option<f64>,
    samples: Option<usize>,
}

struct Pair {
    p1: GaussianSpec<f64>,
    p2: GaussianSpec<f64>,
}

impl SetupFile {
    fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
    }

    fn pair(
        &self,
        fallback: impl FnOnce() -> Result<(Vec<f64>, Vec<f64>), Failure>,
    ) -> Result<Pair, Failure> {
        let (m1, m2) = match (&self.mean1, &self.mean2) {
            (Some(a), Some(b)) => (a.clone(), b.clone()),
            (None, None) => fallback()?,
            _ => return Err(Failure::Data("give both mean1 and mean2 or neither".into())),
        };
        let gauss = |m: Vec<f64>, sd: &Option<Vec<f64>>| -> Result<GaussianSpec<f64>, Failure> {
            let d = m.len();
            let var: Vec<f64> = sd
                .clone()
                .unwrap_or_else(|| vec![1.0; d])
                .iter()
                .map(|s| s * s)
                .collect();
            Ok(GaussianSpec::diagonal(Array1::from(m), Array1::from(var))?)
        };
        Ok(Pair {
            p1: gauss(m1, &self.sd1)?,
            p2: gauss(m2, &self.sd2)?,
        })
    }
}

fn fig2b_means(seed: u64) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let spec = &Preset::Fig2b.variants()[0].spec;
    let process = spec.process::<f64>(&RandomSource::new(seed).derive_named("data"))?;
    let seg = process.segments();
    Ok((seg[0].mean().to_vec(), seg[1].mean().to_vec()))
}

#[derive(Args)]
pub struct OracleArgs {
    /// Setup JSON; defaults to the fig2b configuration.
    #[arg(long)]
    setup: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn cmd_oracle_check(a: &OracleArgs) -> Result<Outcome, Failure> {
    let file = SetupFile::load(a.setup.as_deref())?;
    let pair = file.pair(|| fig2b_means(a.seed))?;
    let setup = OracleSetup {
        p1: pair.p1,
        p2: pair.p2,
        n: file.n.unwrap_or(500),
        t_star: file.t_star.unwrap_or(150),
        t_splits: file
            .t_splits
            .clone()
            .or(file.t_split.map(|t| vec![t]))
            .unwrap_or_else(|| vec![100, 250, 400]),
        samples: file.samples.unwrap_or(20_000),
        trials: a.trials,
        argmax_tolerance: 10,
        a_clip: file.a_clip.unwrap_or(10.0),
    };
    let rows = match oracle_check(&setup, &RandomSource::new(a.seed)) {
        Ok(rows) => rows,
        Err(e @ drecusum::Error::Degenerate(_)) => {
            println!("FAIL degenerate setup: {e}");
            return Err(Failure::Data(e.to_string()));
        }
        Err(e) => return Err(e.into()),
    };
    let mut all = true;
    println!(
        "{:>7}  {:>10} {:>10} {:>8}  {:>10} {:>10} {:>8}  {:>8}",
        "t_split", "pre(cf)", "pre(mc)", "", "post(cf)", "post(mc)", "", "argmax"
    );
    for r in &rows {
        let argmax_ok = r.argmax_rate() >= 0.95;
        all &= r.pre.passes() && r.post.passes() && argmax_ok;
        println!(
            "{:>7}  {:>10.4} {:>10.4} {:>8}  {:>10.4} {:>10.4} {:>8}  {:>7.2}%",
            r.t_split,
            r.pre.closed_form.value,
            r.pre.monte_carlo.value,
            verdict(r.pre.passes()),
            r.post.closed_form.value,
            r.post.monte_carlo.value,
            verdict(r.post.passes()),
            100.0 * r.argmax_rate()
        );
        println!(
            "         sign(pre) {}  sign(post) {}  3se(pre) {}  3se(post) {}  argmax>=95% {}",
            verdict(r.pre.sign_ok),
            verdict(r.post.sign_ok),
            verdict(r.pre.agrees),
            verdict(r.post.agrees),
            verdict(argmax_ok)
        );
    }
    println!("{}", verdict(all));
    Ok(if all {
        Outcome::Pass
    } else {
        Outcome::ChecksFailed
    })
}

#[derive(Args)]
pub struct TheoremArgs {
    /// Setup JSON; defaults to N(0, I_10) vs N(1, I_10), n=500, T*=150, split 250.
    #[arg(long)]
    setup: Option<PathBuf>,
    #[arg(long, default_value = "0.05,0.1,0.2")]
    betas: String,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn cmd_theorem_check(a: &TheoremArgs) -> Result<Outcome, Failure> {
    let betas = a
        .betas
        .split(',')
        .map(|b| {
            b.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0 && *v < 1.0)
                .ok_or_else(|| Failure::Usage(format!("bad beta `{b}`; expected values in (0, 1)")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if a.trials < 100 {
        return Err(Failure::Usage("--trials must be at least 100".into()));
    }
    let file = SetupFile::load(a.setup.as_deref())?;
    let pair = file.pair(|| Ok((vec![0.0; 10], vec![1.0; 10])))?;
    let setup = AccuracySetup {
        p1: pair.p1,
        p2: pair.p2,
        n: file.n.unwrap_or(500),
        t_star: file.t_star.unwrap_or(150),
        t_split: file.t_split.unwrap_or(250),
        trials: a.trials,
        betas,
        a_clip: file.a_clip.unwrap_or(10.0),
    };
    let table = empirical_accuracy(&setup, &RandomSource::new(a.seed))?;
    println!(
        "C = {:.6} (se {:.2e}), A = {}, trials = {}",
        table.c_min.value, table.c_min.std_err, table.a_clip, table.trials
    );
    println!("{:>6} {:>12} {:>11}", "beta", "alpha", "exceedance");
    let mut all = true;
    for r in &table.rows {
        all &= r.passes();
        println!(
            "{:>6} {:>12.3} {:>11.4} {}",
            r.beta,
            r.alpha,
            r.exceedance,
            verdict(r.passes())
        );
    }
    println!("{}", verdict(all));
    Ok(if all {
        Outcome::Pass
    } else {
        Outcome::ChecksFailed
    })
}
