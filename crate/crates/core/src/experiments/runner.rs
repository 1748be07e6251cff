//! Independent training runs executed by a pool of worker threads.
//!
//! Each run owns its environment, ensemble, buffer and networks; workers
//! share nothing but the job queue. Results come back in job order, so the
//! output does not depend on the number of workers.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use smashvat_neural::Network;

use super::records::RecordWriter;
use crate::error::{Error, Result};
use crate::imagination::Imagination;
use crate::learner::{run_training_with, Rollout, RunRecord, TrainConfig};

/// One training run. With `out_dir` set the run streams its CSV there and
/// leaves a policy and an ensemble checkpoint next to it, all named after
/// the seed.
#[derive(Debug, Clone)]
pub struct Job {
    pub config: TrainConfig,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: TrainConfig,
    pub records: Vec<RunRecord>,
    pub greedy: Rollout,
    pub policy: Network<f32>,
    pub imagination: Imagination,
}

pub fn csv_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed_{seed}.csv"))
}

pub fn policy_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed_{seed}.policy"))
}

pub fn ensemble_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed_{seed}.ensemble"))
}

pub fn save_policy(path: &Path, policy: &Network<f32>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    policy.write_to(&mut w)?;
    Ok(())
}

pub fn load_policy(path: &Path) -> Result<Network<f32>> {
    let mut r = std::io::BufReader::new(File::open(path)?);
    Ok(Network::read_from(&mut r)?)
}

/// Runs one job to completion.
pub fn run_job(job: &Job) -> Result<RunResult> {
    let seed = job.config.seed;
    let mut writer = match &job.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Some(RecordWriter::new(BufWriter::new(File::create(csv_path(dir, seed))?))?)
        }
        None => None,
    };
    let mut write_err = None;
    let outcome = run_training_with(job.config.clone(), |rec| {
        if let Some(w) = writer.as_mut() {
            if let Err(e) = w.write(rec) {
                write_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    if let Some(w) = writer {
        w.finish()?;
    }
    let learner = outcome.learner;
    let greedy = learner.greedy_rollout()?;
    if let Some(dir) = &job.out_dir {
        save_policy(&policy_path(dir, seed), &learner.policy)?;
        let file = BufWriter::new(File::create(ensemble_path(dir, seed))?);
        learner.imagination.ensemble.write_to(file)?;
    }
    Ok(RunResult {
        config: learner.config,
        records: outcome.records,
        greedy,
        policy: learner.policy,
        imagination: learner.imagination,
    })
}

/// Worker count to use: `0` means one per available CPU.
pub fn resolve_workers(requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }
}

/// Runs every job on up to `workers` threads and returns the results in
/// job order. `on_done` is called from the worker thread as each run ends.
pub fn run_jobs(jobs: &[Job], workers: usize, on_done: &(dyn Fn(usize, &Result<RunResult>) + Sync)) -> Vec<Result<RunResult>> {
    let workers = resolve_workers(workers).min(jobs.len()).max(1);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunResult>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let res = run_job(&jobs[i]);
                on_done(i, &res);
                slots.lock().expect("result slots")[i] = Some(res);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|r| r.unwrap_or_else(|| Err(Error::Usage("worker exited without a result".into()))))
        .collect()
}

/// Like [`run_jobs`] but fails on the first error.
pub fn run_all(jobs: &[Job], workers: usize) -> Result<Vec<RunResult>> {
    run_jobs(jobs, workers, &|_, _| {}).into_iter().collect()
}
