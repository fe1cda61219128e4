//! Self-contained SVG charts: reward curves, distance-inefficiency bars
//! and value-function heatmaps. Numbers are printed with fixed precision
//! so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::scenario::{ScenarioReport, ScenarioScript};
use super::{create_dir, write_file, HarnessError, ResultsBundle};
use crate::agents::{AgentKind, SnapshotRow};
use crate::mapio::{CellCoord, CellKind, GridMap};

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const UNKNOWN_FILL: &str = "#bdbdbd";
const WALL_FILL: &str = "#000000";

fn color(kind: AgentKind) -> &'static str {
    PALETTE[AgentKind::ALL.iter().position(|&k| k == kind).unwrap_or(0)]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_open(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
}

/// Rounds the span `[lo, hi]` outwards to something tick-friendly.
fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        return (lo - 1.0, hi + 1.0);
    }
    let step = 10f64.powf((hi - lo).log10().floor());
    ((lo / step).floor() * step, (hi / step).ceil() * step)
}

struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        let _ = writeln!(
            out,
            r##"<rect x="{l:.1}" y="{t:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#444444"/>"##
        );
        for i in 0..=4 {
            let v = self.y.0 + (self.y.1 - self.y.0) * i as f64 / 4.0;
            let y = self.py(v);
            let _ =
                writeln!(out, r##"<line x1="{:.1}" y1="{y:.1}" x2="{l:.1}" y2="{y:.1}" stroke="#444444"/>"##, l - 4.0);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#, l - 6.0, y + 4.0);
        }
        for i in 0..=4 {
            let v = self.x.0 + (self.x.1 - self.x.0) * i as f64 / 4.0;
            let x = self.px(v);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#444444"/>"##,
                t + h,
                t + h + 4.0
            );
            let _ = writeln!(out, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{v:.0}</text>"#, t + h + 18.0);
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            l + w / 2.0,
            t + h + 36.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
            l - 48.0,
            t + h / 2.0,
            l - 48.0,
            t + h / 2.0,
            escape(y_label)
        );
    }
}

/// Per-agent mean reward across seeds with a shaded min/max band.
pub fn curves_svg(bundle: &ResultsBundle) -> String {
    struct Series {
        kind: AgentKind,
        mean: Vec<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    }
    let mut series = Vec::new();
    for kind in bundle.agents() {
        let runs = bundle.reward_series(kind);
        let len = runs.iter().map(|(_, r)| r.len()).min().unwrap_or(0);
        let col = |i: usize| runs.iter().map(move |(_, r)| r[i]);
        series.push(Series {
            kind,
            mean: (0..len).map(|i| col(i).sum::<f64>() / runs.len() as f64).collect(),
            lo: (0..len).map(|i| col(i).fold(f64::INFINITY, f64::min)).collect(),
            hi: (0..len).map(|i| col(i).fold(f64::NEG_INFINITY, f64::max)).collect(),
        });
    }
    let episodes = series.iter().map(|s| s.mean.len()).max().unwrap_or(1).max(2);
    let lo = series.iter().flat_map(|s| s.lo.iter().copied()).fold(f64::INFINITY, f64::min);
    let hi = series.iter().flat_map(|s| s.hi.iter().copied()).fold(f64::NEG_INFINITY, f64::max);
    let frame =
        Frame { left: 70.0, top: 30.0, width: 560.0, height: 320.0, x: (1.0, episodes as f64), y: nice_range(lo, hi) };

    let mut out = String::new();
    svg_open(&mut out, 800.0, 410.0);
    let _ = writeln!(out, r#"<text x="350" y="18" text-anchor="middle" font-size="14">Reward per episode</text>"#);
    frame.axes(&mut out, "episode", "total reward");
    for s in &series {
        let c = color(s.kind);
        let _ = writeln!(out, r#"<g class="series" data-agent="{}">"#, s.kind);
        let mut band = String::new();
        for (i, v) in s.hi.iter().enumerate() {
            let _ = write!(band, "{:.1},{:.1} ", frame.px(i as f64 + 1.0), frame.py(*v));
        }
        for (i, v) in s.lo.iter().enumerate().rev() {
            let _ = write!(band, "{:.1},{:.1} ", frame.px(i as f64 + 1.0), frame.py(*v));
        }
        let _ =
            writeln!(out, r#"<polygon points="{}" fill="{c}" fill-opacity="0.15" stroke="none"/>"#, band.trim_end());
        let line: Vec<String> = s
            .mean
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.1},{:.1}", frame.px(i as f64 + 1.0), frame.py(*v)))
            .collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, line.join(" "));
        let _ = writeln!(out, "</g>");
    }
    for (i, s) in series.iter().enumerate() {
        let y = 40.0 + 20.0 * i as f64;
        let _ = writeln!(out, r#"<rect x="650" y="{:.1}" width="14" height="4" fill="{}"/>"#, y - 4.0, color(s.kind));
        let _ = writeln!(out, r#"<text x="670" y="{y:.1}" class="legend">{}</text>"#, s.kind);
    }
    out.push_str("</svg>\n");
    out
}

/// Bar chart of the mean distance inefficiency per agent. Agents without
/// a defined value get an empty slot marked `n/a`.
pub fn dist_ineff_svg(bundle: &ResultsBundle) -> String {
    let bars: Vec<(AgentKind, Option<f64>)> = bundle.summary.iter().map(|(k, s)| (*k, s.mean_dist_ineff)).collect();
    let top = bars.iter().filter_map(|b| b.1).fold(1.0, f64::max);
    let frame = Frame {
        left: 70.0,
        top: 30.0,
        width: 90.0 * bars.len().max(1) as f64,
        height: 260.0,
        x: (0.0, bars.len().max(1) as f64),
        y: (0.0, nice_range(0.0, top).1),
    };
    let mut out = String::new();
    svg_open(&mut out, frame.left + frame.width + 30.0, 350.0);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">Distance inefficiency</text>"#,
        frame.left + frame.width / 2.0
    );
    let (l, t, w, h) = (frame.left, frame.top, frame.width, frame.height);
    let _ =
        writeln!(out, r##"<rect x="{l:.1}" y="{t:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#444444"/>"##);
    for i in 0..=4 {
        let v = frame.y.1 * i as f64 / 4.0;
        let y = frame.py(v);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#, l - 6.0, y + 4.0);
    }
    let one = frame.py(1.0);
    let _ = writeln!(
        out,
        r##"<line x1="{l:.1}" y1="{one:.1}" x2="{:.1}" y2="{one:.1}" stroke="#888888" stroke-dasharray="4 3"/>"##,
        l + w
    );
    for (i, (kind, v)) in bars.iter().enumerate() {
        let cx = frame.px(i as f64 + 0.5);
        match v {
            Some(v) => {
                let y = frame.py(*v);
                let _ = writeln!(
                    out,
                    r#"<rect class="bar" data-agent="{kind}" x="{:.1}" y="{y:.1}" width="50" height="{:.1}" fill="{}"/>"#,
                    cx - 25.0,
                    t + h - y,
                    color(*kind)
                );
                let _ = writeln!(out, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{v:.2}</text>"#, y - 4.0);
            }
            None => {
                let _ = writeln!(out, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">n/a</text>"#, t + h - 6.0);
            }
        }
        let _ = writeln!(out, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{kind}</text>"#, t + h + 18.0);
    }
    out.push_str("</svg>\n");
    out
}

/// Maps `t` in `[0, 1]` onto a dark-blue to yellow ramp.
fn ramp(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 4] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// What to draw on top of one heatmap panel.
#[derive(Debug, Clone, Default)]
pub struct Overlay<'a> {
    pub title: String,
    pub start: Option<CellCoord>,
    pub goal: Option<CellCoord>,
    pub trajectory: &'a [CellCoord],
}

const CELL: f64 = 24.0;

/// Draws one panel at `(ox, oy)`: walls black, unknown (`-inf`) cells
/// grey, every other free cell coloured by its value.
fn heatmap_panel(out: &mut String, map: &GridMap, values: &[f64], overlay: &Overlay, ox: f64, oy: f64) {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let _ = writeln!(out, r#"<g class="heatmap" transform="translate({ox:.1} {oy:.1})">"#);
    let _ = writeln!(out, r#"<text x="0" y="-6">{}</text>"#, escape(&overlay.title));
    for y in 0..map.height() {
        for x in 0..map.width() {
            let c = CellCoord::new(x, y);
            let (class, fill) = match (map.cell(c), map.state_index(c)) {
                (CellKind::Wall, _) | (_, None) => ("wall", WALL_FILL.to_string()),
                (_, Some(s)) => {
                    let v = values[s];
                    if !v.is_finite() {
                        ("free", UNKNOWN_FILL.to_string())
                    } else if hi > lo {
                        ("free", ramp((v - lo) / (hi - lo)))
                    } else {
                        ("free", ramp(1.0))
                    }
                }
            };
            let _ = writeln!(
                out,
                r#"<rect class="{class}" x="{:.1}" y="{:.1}" width="{CELL:.1}" height="{CELL:.1}" fill="{fill}"/>"#,
                x as f64 * CELL,
                y as f64 * CELL
            );
        }
    }
    let centre = |c: CellCoord| (c.x as f64 * CELL + CELL / 2.0, c.y as f64 * CELL + CELL / 2.0);
    if overlay.trajectory.len() > 1 {
        let pts: Vec<String> = overlay
            .trajectory
            .iter()
            .map(|&c| {
                let (x, y) = centre(c);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline class="trajectory" points="{}" fill="none" stroke="#ff7f0e" stroke-width="2" marker-end="url(#arrow)"/>"##,
            pts.join(" ")
        );
    }
    for (c, label, fill) in [(overlay.start, "S", "#1f77b4"), (overlay.goal, "G", "#2ca02c")] {
        if let Some(c) = c {
            let (x, y) = centre(c);
            let _ = writeln!(out, r##"<circle cx="{x:.1}" cy="{y:.1}" r="8" fill="{fill}" stroke="#ffffff"/>"##);
            let _ = writeln!(
                out,
                r##"<text x="{x:.1}" y="{:.1}" text-anchor="middle" fill="#ffffff" font-size="10">{label}</text>"##,
                y + 3.5
            );
        }
    }
    out.push_str("</g>\n");
}

const ARROW_DEF: &str = r##"<defs><marker id="arrow" viewBox="0 0 10 10" refX="8" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="#ff7f0e"/></marker></defs>"##;

/// A single value-function heatmap; `values` holds one entry per state.
pub fn heatmap_svg(map: &GridMap, values: &[f64], overlay: &Overlay) -> String {
    let mut out = String::new();
    svg_open(&mut out, map.width() as f64 * CELL + 20.0, map.height() as f64 * CELL + 40.0);
    out.push_str(ARROW_DEF);
    out.push('\n');
    heatmap_panel(&mut out, map, values, overlay, 10.0, 30.0);
    out.push_str("</svg>\n");
    out
}

/// `max_a value(s, a, goal)` per state from parsed snapshot rows; states
/// without rows stay at `-inf`.
pub fn snapshot_values(map: &GridMap, rows: &[SnapshotRow], goal: CellCoord) -> Vec<f64> {
    let mut values = vec![f64::NEG_INFINITY; map.num_states()];
    for r in rows.iter().filter(|r| r.goal == goal) {
        if let Some(s) = map.state_index(r.state) {
            values[s] = values[s].max(r.value);
        }
    }
    values
}

/// Grid of heatmaps: one row per agent, one column per snapshot. Training
/// columns show that episode's path; the test column shows the greedy
/// rollout.
pub fn scenario_heatmap(report: &ScenarioReport, script: &ScenarioScript) -> String {
    let map = &script.map;
    let cols = report.agents.iter().map(|a| a.snapshots.len()).max().unwrap_or(0).max(1);
    let (pw, ph) = (map.width() as f64 * CELL + 20.0, map.height() as f64 * CELL + 30.0);
    let mut out = String::new();
    svg_open(&mut out, 70.0 + cols as f64 * pw, 10.0 + report.agents.len().max(1) as f64 * ph);
    out.push_str(ARROW_DEF);
    out.push('\n');
    for (row, agent) in report.agents.iter().enumerate() {
        let oy = 30.0 + row as f64 * ph;
        let _ = writeln!(out, r#"<text x="6" y="{:.1}" font-size="14">{}</text>"#, oy + ph / 2.0 - 15.0, agent.agent);
        for (col, snap) in agent.snapshots.iter().enumerate() {
            let trace = agent.training.get(col).unwrap_or(&agent.test);
            let overlay = Overlay {
                title: snap.label.clone(),
                start: Some(trace.start),
                goal: Some(snap.goal),
                trajectory: &trace.trajectory,
            };
            heatmap_panel(&mut out, map, &snap.values, &overlay, 70.0 + col as f64 * pw, oy);
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `curves.svg` and `dist_ineff.svg` into `dir`.
pub fn emit_plots(bundle: &ResultsBundle, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    create_dir(dir)?;
    let files = [("curves.svg", curves_svg(bundle)), ("dist_ineff.svg", dist_ineff_svg(bundle))];
    let mut written = Vec::new();
    for (name, svg) in files {
        let path = dir.join(name);
        write_file(&path, &svg)?;
        written.push(path);
    }
    Ok(written)
}
