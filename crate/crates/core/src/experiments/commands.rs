//! The harness verbs: train, ablate, sweep, render, oracle and report.
//!
//! Run directories are laid out as `<output_dir>/<layout>/<label>/`, each
//! holding `run.toml` and one `seed_<n>.csv`, `.policy` and `.ensemble`
//! per seed. `report` rebuilds tables from any tree of such directories.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::config::RunConfig;
use super::oracle::{self, OracleSolution, RewardSpec};
use super::records::load_records;
use super::render::{curves_svg, rollout_ascii, rollout_svg, smash_positions, Metric};
use super::report::{fmt_rate, AggregateReport};
use super::runner::{self, Job, RunResult};
use crate::error::{Error, Result};
use crate::gridworld::{parse_map, GridLayout, GOAL_REWARD, STEP_REWARD};
use crate::imagination::{Imagination, IntrinsicWeights, QEnsemble};
use crate::layouts::{self, LAYOUT_NAMES};
use crate::learner::{greedy_rollout, Rollout};

/// The four reward combinations of the ablation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardConfig {
    EnvOnly,
    EnvNse,
    EnvEmp,
    Full,
}

impl RewardConfig {
    pub const ALL: [RewardConfig; 4] = [
        RewardConfig::EnvOnly,
        RewardConfig::EnvNse,
        RewardConfig::EnvEmp,
        RewardConfig::Full,
    ];

    pub fn from_flags(use_nse: bool, use_emp: bool) -> Self {
        match (use_nse, use_emp) {
            (false, false) => RewardConfig::EnvOnly,
            (true, false) => RewardConfig::EnvNse,
            (false, true) => RewardConfig::EnvEmp,
            (true, true) => RewardConfig::Full,
        }
    }

    pub fn flags(self) -> (bool, bool) {
        match self {
            RewardConfig::EnvOnly => (false, false),
            RewardConfig::EnvNse => (true, false),
            RewardConfig::EnvEmp => (false, true),
            RewardConfig::Full => (true, true),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RewardConfig::EnvOnly => "r_env",
            RewardConfig::EnvNse => "r_env+nse",
            RewardConfig::EnvEmp => "r_env+emp",
            RewardConfig::Full => "r_total",
        }
    }

    pub fn apply(self, cfg: &RunConfig) -> RunConfig {
        let (use_nse, use_emp) = self.flags();
        RunConfig { use_nse, use_emp, ..cfg.clone() }
    }
}

/// Resolves a registry name or a path to a map file.
pub fn resolve_layout(spec: &str) -> Result<Arc<GridLayout>> {
    if LAYOUT_NAMES.contains(&spec) {
        return layouts::layout(spec);
    }
    let path = Path::new(spec);
    if path.is_file() {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
        return parse_map(name, &std::fs::read_to_string(path)?).map(Arc::new);
    }
    Err(Error::UnknownLayout(spec.to_string()))
}

pub fn group_dir(cfg: &RunConfig, label: &str) -> PathBuf {
    cfg.output_dir.join(&cfg.layout).join(label)
}

fn jobs_for(cfg: &RunConfig, dir: &Path) -> Result<Vec<Job>> {
    cfg.seeds
        .iter()
        .map(|&s| Ok(Job { config: cfg.train_config(s)?, out_dir: Some(dir.to_path_buf()) }))
        .collect()
}

/// Env-reward return of a rollout.
pub fn rollout_return(r: &Rollout) -> f64 {
    let goal = if r.stats.reached_goal { GOAL_REWARD } else { 0.0 };
    STEP_REWARD * r.stats.steps as f64 + goal
}

fn greedy_csv(results: &[RunResult]) -> String {
    let mut out = String::from("seed,reached_goal,vat_remain_rate,rescue_rate,smashes,steps,return\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in results {
        let g = &r.greedy;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.config.seed,
            u8::from(g.stats.reached_goal),
            opt(g.stats.vat_remain_rate),
            opt(g.stats.rescue_rate),
            smash_positions(g).len(),
            g.stats.steps,
            rollout_return(g)
        );
    }
    out
}

fn group_summary(layout: &str, label: &str, results: &[RunResult]) -> (AggregateReport, String) {
    let runs: Vec<_> = results.iter().map(|r| r.records.clone()).collect();
    let mut report = AggregateReport::default();
    report.add_group(layout, label, &runs);
    let cell = &report.cells[0];
    let mut text = format!("{layout} / {label}: last-100 means over {} seeds\n", results.len());
    let _ = writeln!(
        text,
        "  vat_remain {}  rescue {}  goal {}",
        fmt_rate(cell.vat_remain),
        fmt_rate(cell.rescue),
        fmt_rate(cell.goal_rate)
    );
    for (r, s) in results.iter().zip(&cell.per_seed) {
        let _ = writeln!(
            text,
            "  seed {:>4}: vat_remain {} rescue {} goal {} | greedy goal {} vat_remain {} rescue {} smashes {}",
            r.config.seed,
            fmt_rate(s.vat_remain),
            fmt_rate(s.rescue),
            fmt_rate(s.goal_rate),
            r.greedy.stats.reached_goal,
            fmt_rate(r.greedy.stats.vat_remain_rate),
            fmt_rate(r.greedy.stats.rescue_rate),
            smash_positions(&r.greedy).len()
        );
    }
    (report, text)
}

/// Trains every seed of `cfg` into `dir` and writes the group summary,
/// the greedy-rollout table and the seed-mean curves.
pub fn train_group(cfg: &RunConfig, label: &str, dir: &Path) -> Result<(AggregateReport, Vec<RunResult>)> {
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("run.toml"), cfg.to_toml())?;
    let results = runner::run_all(&jobs_for(cfg, dir)?, cfg.workers)?;
    let (report, text) = group_summary(&cfg.layout, label, &results);
    std::fs::write(dir.join("summary.txt"), text)?;
    std::fs::write(dir.join("greedy.csv"), greedy_csv(&results))?;
    std::fs::write(dir.join("aggregate.csv"), report.curves_csv())?;
    Ok((report, results))
}

/// `train`: one group of seeds as described by the configuration file.
pub fn cmd_train(config_path: &Path) -> Result<AggregateReport> {
    let cfg = RunConfig::load(config_path)?;
    let label = RewardConfig::from_flags(cfg.use_nse, cfg.use_emp).label();
    train_group(&cfg, label, &group_dir(&cfg, label)).map(|(r, _)| r)
}

/// `ablate`: the four reward combinations on one layout.
pub fn cmd_ablate(base: &RunConfig, layout: &str) -> Result<AggregateReport> {
    layouts::layout(layout)?;
    let cfg = RunConfig { layout: layout.to_string(), ..base.clone() };
    let mut report = AggregateReport::default();
    for rc in RewardConfig::ALL {
        let run = rc.apply(&cfg);
        let (group, _) = train_group(&run, rc.label(), &group_dir(&run, rc.label()))?;
        report.cells.extend(group.cells);
        report.curves.extend(group.curves);
    }
    let dir = cfg.output_dir.join(layout);
    std::fs::write(dir.join("ablation.txt"), report.to_table())?;
    std::fs::write(dir.join("ablation_curves.csv"), report.curves_csv())?;
    Ok(report)
}

pub fn sweep_label(alpha: f64, beta: f64) -> String {
    format!("sweep_a{alpha}_b{beta}")
}

/// Parses `"a:b,a:b"` or `"w,w"` (symmetric) into weight pairs.
pub fn parse_weight_grid(text: &str) -> Result<Vec<(f64, f64)>> {
    let bad = |s: &str| Error::Config(format!("bad weight pair {s:?}"));
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (a, b) = item.split_once(':').unwrap_or((item, item));
            let a: f64 = a.trim().parse().map_err(|_| bad(item))?;
            let b: f64 = b.trim().parse().map_err(|_| bad(item))?;
            IntrinsicWeights::new(a, b)?;
            Ok((a, b))
        })
        .collect()
}

/// `sweep`: the full method at each weight pair, with curves per pair.
pub fn cmd_sweep(base: &RunConfig, layout: &str, grid: &[(f64, f64)]) -> Result<AggregateReport> {
    layouts::layout(layout)?;
    if grid.is_empty() {
        return Err(Error::Config("empty weight grid".into()));
    }
    let cfg = RunConfig { layout: layout.to_string(), use_nse: true, use_emp: true, ..base.clone() };
    let mut report = AggregateReport::default();
    for &(alpha, beta) in grid {
        let run = RunConfig { alpha, beta, ..cfg.clone() };
        let label = sweep_label(alpha, beta);
        let (group, _) = train_group(&run, &label, &group_dir(&run, &label))?;
        report.cells.extend(group.cells);
        report.curves.extend(group.curves);
    }
    let dir = cfg.output_dir.join(layout);
    std::fs::write(dir.join("sweep.txt"), report.to_table())?;
    std::fs::write(dir.join("sweep_curves.csv"), report.curves_csv())?;
    let labelled: Vec<(&str, &_)> = report.curves.iter().map(|c| (c.reward.as_str(), c)).collect();
    for metric in [Metric::VatRemain, Metric::Rescue, Metric::Goal] {
        std::fs::write(dir.join(format!("sweep_{}.svg", metric.name())), curves_svg(&labelled, metric, 100))?;
    }
    Ok(report)
}

/// Greedy rollout of a saved policy, as ASCII frames and as SVG.
#[derive(Debug, Clone)]
pub struct Rendering {
    pub rollout: Rollout,
    pub ascii: String,
    pub svg: String,
}

/// `render`: loads a policy checkpoint and plays it greedily on a layout.
pub fn cmd_render(checkpoint: &Path, layout: &str, max_steps: u32) -> Result<Rendering> {
    let layout = resolve_layout(layout)?;
    let policy = runner::load_policy(checkpoint)?;
    let rollout = greedy_rollout(&policy, &layout, max_steps)?;
    Ok(Rendering { ascii: rollout_ascii(&rollout), svg: rollout_svg(&rollout), rollout })
}

/// Reward to solve for in `oracle`.
#[derive(Debug, Clone)]
pub struct OracleRequest {
    pub layout: String,
    pub gamma: f64,
    /// Frozen ensemble supplying the intrinsic terms; `None` solves for the
    /// environment reward alone.
    pub ensemble: Option<PathBuf>,
    pub weights: IntrinsicWeights,
    pub use_nse: bool,
    pub use_emp: bool,
    /// Scope, empathy and scale settings for the intrinsic terms.
    pub settings: RunConfig,
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub solution: OracleSolution,
    pub text: String,
}

/// `oracle`: exact value iteration on the layout's enumerated MDP.
pub fn cmd_oracle(req: &OracleRequest) -> Result<OracleReport> {
    let layout = resolve_layout(&req.layout)?;
    let imagination = match &req.ensemble {
        Some(path) => {
            let ensemble = QEnsemble::read_from(std::io::BufReader::new(std::fs::File::open(path)?))?;
            let s = &req.settings.imagination;
            Some(Imagination {
                ensemble,
                scope: s.scope,
                empathy: s.empathy,
                value_scale: s.value_scale.unwrap_or(1.0 - req.gamma),
                penalize_goal_step: s.penalize_goal_step,
            })
        }
        None => None,
    };
    let spec = match &imagination {
        Some(im) => RewardSpec::Composite {
            imagination: im,
            weights: req.weights,
            use_nse: req.use_nse,
            use_emp: req.use_emp,
        },
        None => RewardSpec::EnvOnly,
    };
    let solution = oracle::solve_layout(&layout, spec, req.gamma)?;
    let (actions, end) = solution.rollout(&layout, req.settings.max_steps)?;
    let stats = crate::gridworld::episode_stats(&end, &layout)?;
    let mut text = String::new();
    let _ = writeln!(text, "layout {}", layout.name);
    let _ = writeln!(text, "reward {}", if imagination.is_some() { "composite" } else { "env" });
    let _ = writeln!(text, "states {}", solution.graph.states.len());
    let _ = writeln!(text, "iterations {}  residual {:e}", solution.iterations, solution.residual);
    let _ = writeln!(text, "start value {}", solution.start_value());
    let _ = writeln!(text, "greedy actions {:?}", actions);
    let _ = writeln!(
        text,
        "greedy outcome: goal {} vat_remain {} rescue {} steps {}",
        stats.reached_goal,
        fmt_rate(stats.vat_remain_rate),
        fmt_rate(stats.rescue_rate),
        stats.steps
    );
    Ok(OracleReport { solution, text })
}

fn reward_rank(label: &str) -> (usize, String) {
    let pos = RewardConfig::ALL.iter().position(|r| r.label() == label).unwrap_or(RewardConfig::ALL.len());
    (pos, label.to_string())
}

fn layout_rank(name: &str) -> (usize, String) {
    (LAYOUT_NAMES.iter().position(|&n| n == name).unwrap_or(LAYOUT_NAMES.len()), name.to_string())
}

fn collect_groups(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if dir.join("run.toml").is_file() {
        out.push(dir.to_path_buf());
    }
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    for e in entries {
        collect_groups(&e, out)?;
    }
    Ok(())
}

/// `report`: rebuilds the aggregate table from every run directory below
/// `root`, reading only the per-seed CSVs.
pub fn cmd_report(root: &Path) -> Result<AggregateReport> {
    let mut groups = Vec::new();
    collect_groups(root, &mut groups)?;
    let mut found = Vec::new();
    for dir in groups {
        let cfg = RunConfig::load(&dir.join("run.toml"))?;
        let label = dir.file_name().and_then(|s| s.to_str()).unwrap_or("").to_string();
        let mut runs = Vec::new();
        for &seed in &cfg.seeds {
            let path = runner::csv_path(&dir, seed);
            if path.is_file() {
                runs.push(load_records(&path)?);
            }
        }
        if !runs.is_empty() {
            found.push((cfg.layout, label, runs));
        }
    }
    found.sort_by(|a, b| (layout_rank(&a.0), reward_rank(&a.1)).cmp(&(layout_rank(&b.0), reward_rank(&b.1))));
    let mut report = AggregateReport::default();
    for (layout, label, runs) in &found {
        report.add_group(layout, label, runs);
    }
    Ok(report)
}
