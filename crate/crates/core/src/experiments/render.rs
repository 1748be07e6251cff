//! Text and SVG output: rollout frames, annotated trajectory pictures and
//! training-curve charts.

use std::fmt::Write as _;

use super::report::{fmt_rate, smooth, Curve};
use crate::gridworld::{render_ascii, CellKind, Pos, COLS, ROWS};
use crate::learner::Rollout;

/// Frame-by-frame ASCII rendering of a rollout, with the action taken
/// between frames and the final statistics.
pub fn rollout_ascii(rollout: &Rollout) -> String {
    let mut out = String::new();
    for (t, state) in rollout.states.iter().enumerate() {
        let _ = writeln!(out, "t={t}");
        out.push_str(&render_ascii(state));
        if let Some(a) = rollout.actions.get(t) {
            let _ = writeln!(out, "action: {a:?}");
        }
        out.push('\n');
    }
    let s = &rollout.stats;
    let _ = writeln!(
        out,
        "steps {}  reached_goal {}  vat_remain {}  rescue {}  smashes {}",
        s.steps,
        s.reached_goal,
        fmt_rate(s.vat_remain_rate),
        fmt_rate(s.rescue_rate),
        smash_positions(rollout).len()
    );
    out
}

/// Cells smashed during the rollout, in order.
pub fn smash_positions(rollout: &Rollout) -> Vec<Pos> {
    rollout
        .states
        .windows(2)
        .flat_map(|w| {
            let (before, after) = (&w[0], &w[1]);
            (0..ROWS * COLS)
                .map(Pos::from_index)
                .filter(|&p| before.cell(p) == CellKind::Vat && after.cell(p) != CellKind::Vat)
                .collect::<Vec<_>>()
        })
        .collect()
}

const CELL: f64 = 48.0;

fn centre(p: Pos) -> (f64, f64) {
    (p.col as f64 * CELL + CELL / 2.0, p.row as f64 * CELL + CELL / 2.0)
}

fn cell_fill(kind: CellKind) -> &'static str {
    match kind {
        CellKind::Empty => "#ffffff",
        CellKind::Wall => "#444444",
        CellKind::Vat => "#9ecae1",
        CellKind::Goal => "#a1d99b",
    }
}

/// One picture of the whole rollout: the starting map, the agent's path,
/// a hammer marker on every smashed cell and the humans' final positions.
pub fn rollout_svg(rollout: &Rollout) -> String {
    let first = rollout.states.first();
    let last = rollout.states.last();
    let (w, h) = (COLS as f64 * CELL, ROWS as f64 * CELL);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    if let Some(start) = first {
        for idx in 0..ROWS * COLS {
            let p = Pos::from_index(idx);
            let _ = writeln!(
                out,
                r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}" stroke="#888888"/>"##,
                p.col as f64 * CELL,
                p.row as f64 * CELL,
                cell_fill(start.cell(p))
            );
        }
        let points: Vec<String> = rollout
            .states
            .iter()
            .map(|s| {
                let (x, y) = centre(s.agent_pos);
                format!("{x},{y}")
            })
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="3" stroke-linejoin="round"/>"##,
            points.join(" ")
        );
        let (sx, sy) = centre(start.agent_pos);
        let _ = writeln!(out, r##"<circle cx="{sx}" cy="{sy}" r="8" fill="#d62728"><title>start</title></circle>"##);
    }
    for p in smash_positions(rollout) {
        let (x, y) = centre(p);
        let _ = writeln!(
            out,
            r##"<text x="{x}" y="{}" font-size="26" text-anchor="middle" fill="#000000">&#9874;<title>smash</title></text>"##,
            y + 9.0
        );
    }
    if let Some(end) = last {
        for hmn in &end.humans {
            let (x, y) = centre(hmn.pos);
            let fill = if hmn.trapped { "#7f7f7f" } else { "#ff7f0e" };
            let _ = writeln!(
                out,
                r##"<rect x="{}" y="{}" width="14" height="14" fill="{fill}"><title>human</title></rect>"##,
                x + 6.0,
                y - 20.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Smoothed line chart of one metric for several curves.
pub fn curves_svg(curves: &[(&str, &Curve)], metric: Metric, window: usize) -> String {
    let (w, h, pad) = (640.0, 360.0, 40.0);
    let len = curves.iter().map(|(_, c)| c.len()).max().unwrap_or(0).max(2);
    let colours = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"];
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        out,
        r##"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="#000000"/>"##,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(out, r#"<text x="{pad}" y="{}" font-size="12">{}</text>"#, pad - 8.0, metric.name());
    for (i, (label, curve)) in curves.iter().enumerate() {
        let colour = colours[i % colours.len()];
        let values = smooth(metric.values(curve), window);
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .filter_map(|(e, v)| {
                v.map(|v| {
                    let x = pad + (w - 2.0 * pad) * e as f64 / (len - 1) as f64;
                    let y = h - pad - (h - 2.0 * pad) * v.clamp(0.0, 1.0);
                    format!("{x:.1},{y:.1}")
                })
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="12" fill="{colour}">{}</text>"#,
            pad + 8.0,
            pad + 16.0 + 14.0 * i as f64,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    VatRemain,
    Rescue,
    Goal,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::VatRemain => "vat_remain_rate",
            Metric::Rescue => "rescue_rate",
            Metric::Goal => "goal_rate",
        }
    }

    fn values(self, c: &Curve) -> &[Option<f64>] {
        match self {
            Metric::VatRemain => &c.vat_remain,
            Metric::Rescue => &c.rescue,
            Metric::Goal => &c.goal_rate,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{episode_stats, reset, step, Action};
    use crate::layouts;

    fn scripted(layout: &str, actions: &[Action]) -> Rollout {
        let l = layouts::layout(layout).unwrap();
        let mut states = vec![reset(&l)];
        for &a in actions {
            let next = step(states.last().unwrap(), a).unwrap().next_state;
            states.push(next);
        }
        let mut last = states.last().unwrap().clone();
        last.done = true;
        let stats = episode_stats(&last, &l).unwrap();
        Rollout { states, actions: actions.to_vec(), stats }
    }

    #[test]
    fn smash_markers_follow_vat_changes() {
        let r = scripted("BasicVatGoalEnv", &[Action::Down, Action::Down, Action::Smash, Action::Down]);
        assert_eq!(smash_positions(&r), vec![Pos::new(3, 2)]);
        let svg = rollout_svg(&r);
        assert_eq!(svg.matches("<title>smash</title>").count(), 1);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        let quiet = scripted("BasicVatGoalEnv", &[Action::Smash, Action::Noop]);
        assert!(smash_positions(&quiet).is_empty());
    }

    #[test]
    fn ascii_has_one_frame_per_state() {
        let r = scripted("BasicHumanVatGoalEnv", &[Action::Down, Action::Down]);
        let text = rollout_ascii(&r);
        assert_eq!(text.matches("t=").count(), 3);
        assert_eq!(text.matches("action:").count(), 2);
    }
}
