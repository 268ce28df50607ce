use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::Args;

use quarc_sim::calibrate::mean_and_ci95;

use crate::config::{load_config, RunConfig};
use crate::run::run_to_dir;

#[derive(Args)]
pub struct SweepArgs {
    /// Run-config documents to sweep.
    #[arg(long, num_args = 1.., required = true)]
    pub configs: Vec<PathBuf>,
    /// Seeds as an inclusive range "1..10" or a comma list "1,5,9".
    #[arg(long, default_value = "1..10")]
    pub seeds: String,
    /// Parallel jobs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.trim().parse().context("seed range start")?;
        let hi: u64 = hi.trim().parse().context("seed range end")?;
        if lo > hi {
            bail!("seed range {text} is empty");
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<u64>().context("seed list entry"))
        .collect()
}

struct Job {
    stem: String,
    seed: u64,
    cfg: RunConfig,
    dir: PathBuf,
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let seeds = parse_seeds(&args.seeds)?;
    let out = crate::resolve_out(args.out, None);
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let mut jobs = Vec::new();
    for path in &args.configs {
        let base = load_config(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "config".into());
        for &seed in &seeds {
            let mut cfg = base.clone();
            cfg.seed = seed;
            jobs.push(Job {
                stem: stem.clone(),
                seed,
                cfg,
                dir: out.join(&stem).join(format!("seed-{seed}")),
            });
        }
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(String, u64, f64)>> = Mutex::new(Vec::new());
    let failures: Mutex<Vec<anyhow::Error>> = Mutex::new(Vec::new());
    let workers = args.jobs.max(1).min(jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let job = &jobs[i];
                match run_to_dir(&job.cfg, &job.dir, None) {
                    Ok(throughput) => results.lock().expect("results lock").push((
                        job.stem.clone(),
                        job.seed,
                        throughput,
                    )),
                    Err(e) => failures
                        .lock()
                        .expect("failures lock")
                        .push(e.context(format!("{} seed {}", job.stem, job.seed))),
                }
            });
        }
    });
    let failures = failures.into_inner().expect("failures lock");
    if let Some(first) = failures.into_iter().next() {
        return Err(first);
    }

    let mut results = results.into_inner().expect("results lock");
    results.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut per_seed = String::from("config,seed,throughput\n");
    for (stem, seed, tp) in &results {
        per_seed.push_str(&format!("{stem},{seed},{tp}\n"));
    }
    fs::write(out.join("per_seed.csv"), per_seed)?;

    let mut aggregate = String::from("config,seeds,mean_throughput,sdom\n");
    for path in &args.configs {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "config".into());
        let samples: Vec<f64> = results
            .iter()
            .filter(|(s, _, _)| *s == stem)
            .map(|(_, _, tp)| *tp)
            .collect();
        let (mean, ci) = mean_and_ci95(&samples);
        // Standard deviation of the mean (the CI helper scales it by 1.96).
        let sdom = ci / 1.96;
        aggregate.push_str(&format!("{stem},{},{mean},{sdom}\n", samples.len()));
    }
    fs::write(out.join("aggregate.csv"), aggregate)?;
    println!(
        "sweep complete: {} runs aggregated in {}",
        results.len(),
        out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::parse_seeds;

    #[test]
    fn seed_syntax() {
        assert_eq!(parse_seeds("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("2, 5, 9").unwrap(), vec![2, 5, 9]);
        assert!(parse_seeds("9..2").is_err());
        assert!(parse_seeds("a,b").is_err());
    }
}
