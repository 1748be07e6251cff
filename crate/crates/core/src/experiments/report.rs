//! Aggregation of run logs into last-100-episode tables and curves.
//!
//! Each seed is reduced to its own last-`n` means first; the seed means are
//! then averaged. Undefined rates (no vats or no humans in the layout) are
//! skipped, never counted as zero, and print as `-`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::learner::RunRecord;

pub const LAST_EPISODES: usize = 100;

/// Mean of the defined values, `None` when there are none.
pub fn mean_defined<I: IntoIterator<Item = Option<f64>>>(values: I) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values.into_iter().flatten() {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

pub fn fmt_rate(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".to_string())
}

/// Last-`n` means of one seed's log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub episodes: usize,
    pub vat_remain: Option<f64>,
    pub rescue: Option<f64>,
    pub goal_rate: Option<f64>,
    pub mean_return: Option<f64>,
}

impl SeedSummary {
    pub fn of_last(records: &[RunRecord], n: usize) -> Self {
        let tail = &records[records.len().saturating_sub(n)..];
        SeedSummary {
            episodes: tail.len(),
            vat_remain: mean_defined(tail.iter().map(|r| r.vat_remain_rate)),
            rescue: mean_defined(tail.iter().map(|r| r.rescue_rate)),
            goal_rate: mean_defined(tail.iter().map(|r| Some(f64::from(u8::from(r.reached_goal))))),
            mean_return: mean_defined(tail.iter().map(|r| Some(r.env_return))),
        }
    }
}

/// One (layout, reward configuration) entry of the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub layout: String,
    pub reward: String,
    pub per_seed: Vec<SeedSummary>,
    pub vat_remain: Option<f64>,
    pub rescue: Option<f64>,
    pub goal_rate: Option<f64>,
}

impl ReportCell {
    pub fn from_seeds(layout: &str, reward: &str, per_seed: Vec<SeedSummary>) -> Self {
        ReportCell {
            layout: layout.to_string(),
            reward: reward.to_string(),
            vat_remain: mean_defined(per_seed.iter().map(|s| s.vat_remain)),
            rescue: mean_defined(per_seed.iter().map(|s| s.rescue)),
            goal_rate: mean_defined(per_seed.iter().map(|s| s.goal_rate)),
            per_seed,
        }
    }
}

/// Seed-mean of each episode's rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub layout: String,
    pub reward: String,
    pub vat_remain: Vec<Option<f64>>,
    pub rescue: Vec<Option<f64>>,
    pub goal_rate: Vec<Option<f64>>,
}

impl Curve {
    pub fn from_runs(layout: &str, reward: &str, runs: &[Vec<RunRecord>]) -> Self {
        let len = runs.iter().map(Vec::len).max().unwrap_or(0);
        let column = |f: &dyn Fn(&RunRecord) -> Option<f64>| -> Vec<Option<f64>> {
            (0..len)
                .map(|e| mean_defined(runs.iter().map(|r| r.get(e).and_then(f))))
                .collect()
        };
        Curve {
            layout: layout.to_string(),
            reward: reward.to_string(),
            vat_remain: column(&|r| r.vat_remain_rate),
            rescue: column(&|r| r.rescue_rate),
            goal_rate: column(&|r| Some(f64::from(u8::from(r.reached_goal)))),
        }
    }

    pub fn len(&self) -> usize {
        self.goal_rate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goal_rate.is_empty()
    }
}

/// Trailing moving average over defined values.
pub fn smooth(values: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    let window = window.max(1);
    (0..values.len())
        .map(|i| mean_defined(values[i + 1 - window.min(i + 1)..=i].iter().copied()))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub cells: Vec<ReportCell>,
    pub curves: Vec<Curve>,
}

impl AggregateReport {
    /// Adds one group of seed runs sharing a layout and reward configuration.
    pub fn add_group(&mut self, layout: &str, reward: &str, runs: &[Vec<RunRecord>]) {
        let per_seed = runs.iter().map(|r| SeedSummary::of_last(r, LAST_EPISODES)).collect();
        self.cells.push(ReportCell::from_seeds(layout, reward, per_seed));
        self.curves.push(Curve::from_runs(layout, reward, runs));
    }

    pub fn cell(&self, layout: &str, reward: &str) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.layout == layout && c.reward == reward)
    }

    /// Plain-text table: one row per layout, one column per reward
    /// configuration, each cell `vat_remain / rescue`.
    pub fn to_table(&self) -> String {
        let mut rewards: Vec<&str> = Vec::new();
        let mut order: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !rewards.contains(&c.reward.as_str()) {
                rewards.push(&c.reward);
            }
            if !order.contains(&c.layout.as_str()) {
                order.push(&c.layout);
            }
        }
        let lw = order.iter().map(|l| l.len()).max().unwrap_or(0).max("environment".len());
        let cw = rewards.iter().map(|r| r.len()).max().unwrap_or(0).max(13);
        let mut out = String::new();
        let _ = write!(out, "{:<lw$}", "environment");
        for r in &rewards {
            let _ = write!(out, "  {r:>cw$}");
        }
        out.push('\n');
        let _ = write!(out, "{:<lw$}", "");
        for _ in &rewards {
            let _ = write!(out, "  {:>cw$}", "vat / rescue");
        }
        out.push('\n');
        for layout in &order {
            let _ = write!(out, "{layout:<lw$}");
            for r in &rewards {
                let text = match self.cell(layout, r) {
                    Some(c) => format!("{} / {}", fmt_rate(c.vat_remain), fmt_rate(c.rescue)),
                    None => String::new(),
                };
                let _ = write!(out, "  {text:>cw$}");
            }
            out.push('\n');
        }
        out
    }

    /// Long-format curve data: `layout, reward, episode, vat_remain_rate,
    /// rescue_rate, goal_rate`.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("layout,reward,episode,vat_remain_rate,rescue_rate,goal_rate\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.curves {
            for e in 0..c.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    c.layout,
                    c.reward,
                    e + 1,
                    opt(c.vat_remain[e]),
                    opt(c.rescue[e]),
                    opt(c.goal_rate[e])
                );
            }
        }
        out
    }
}
