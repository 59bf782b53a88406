//! Sequential-instance benchmark on the reactor-kinetics family: each
//! replication solves a stream of generated instances, either carrying
//! one evaluation store across the stream (so later instances can lean
//! on earlier ones) or starting fresh every time, and the compare mode
//! runs both lanes on bitwise-identical instances.

use crate::config::SolverConfig;
use crate::driver::{solve, RunMode};
use crate::error::DfoError;
use crate::problems::methanol;
use crate::surrogate::HistoryStore;
use rayon::prelude::*;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

/// Which lane(s) to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    History,
    NoHistory,
    Compare,
}

impl BenchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchMode::History => "history",
            BenchMode::NoHistory => "nohistory",
            BenchMode::Compare => "compare",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "history" => Some(BenchMode::History),
            "nohistory" => Some(BenchMode::NoHistory),
            "compare" => Some(BenchMode::Compare),
            _ => None,
        }
    }
}

/// Benchmark shape: `reps` independent replications, each solving
/// `instances` generated instances in sequence with budget
/// `budget_mult * p * (n + 1)` per solve.
#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub reps: u64,
    pub instances: u64,
    pub seed: u64,
    pub budget_mult: f64,
    pub mode: BenchMode,
}

impl Default for BenchPlan {
    fn default() -> Self {
        BenchPlan {
            reps: 5,
            instances: 20,
            seed: 0,
            budget_mult: 2.0,
            mode: BenchMode::Compare,
        }
    }
}

impl BenchPlan {
    /// Oracle budget per solve.
    pub fn budget(&self) -> u64 {
        let base = (methanol::N_X + 1) * methanol::TIMES.len() * methanol::BASE_ICS.len();
        (self.budget_mult * base as f64).round() as u64
    }
}

/// One solve's outcome. Everything except `wall_ms` is deterministic
/// for a fixed plan.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub rep: u64,
    pub t: u64,
    pub mode: RunMode,
    pub final_f: f64,
    pub exact_evals: u64,
    pub approx_uses: u64,
    pub wall_ms: f64,
}

/// Per-instance-index aggregation over replications (compare mode):
/// mean final objectives per lane, mean cumulative objective savings of
/// the history lane with a normal 95% half-width over replications, and
/// the mean regression-use count of the history lane.
#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub t: u64,
    pub f_bar_hist: f64,
    pub f_bar_nohist: f64,
    pub cum_improvement: f64,
    pub ci_half_width: f64,
    pub m_bar: f64,
}

#[derive(Debug)]
pub struct BenchOutput {
    pub rows: Vec<RunRow>,
    /// Empty unless the plan ran in compare mode.
    pub aggregates: Vec<AggregateRow>,
}

fn lane_label(mode: RunMode) -> &'static str {
    match mode {
        RunMode::WithHistory => "history",
        RunMode::NoHistory => "nohistory",
    }
}

fn run_lane(
    plan: &BenchPlan,
    config: &SolverConfig,
    rep: u64,
    mode: RunMode,
) -> Result<Vec<RunRow>, DfoError> {
    let mut rows = Vec::with_capacity(plan.instances as usize);
    let mut shared_store = HistoryStore::new(methanol::N_X, methanol::N_W);
    for t in 0..plan.instances {
        let spec = methanol::instance_spec(plan.seed, rep, t);
        let problem = spec.build()?;
        let mut fresh_store;
        let store = match mode {
            RunMode::WithHistory => &mut shared_store,
            RunMode::NoHistory => {
                fresh_store = HistoryStore::new(methanol::N_X, methanol::N_W);
                &mut fresh_store
            }
        };
        let start = Instant::now();
        let report = solve(&problem, &spec.x0, config, mode, store)?;
        rows.push(RunRow {
            rep,
            t,
            mode,
            final_f: report.f_best,
            exact_evals: report.exact_evals,
            approx_uses: report.approx_uses,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(rows)
}

/// Solver settings the sequential experiment runs under, sized for the
/// kinetics task family: the instances differ by parameter
/// perturbations of radius ~0.1, so the regression radius
/// `c_app * delta^2` is kept at or below that scale (0.02 * 2^2 = 0.08
/// at the radius cap) and the trust radius is capped near the diameter
/// of the basin the rates live in. Wider settings let far-away records
/// feed the regressions and the reused-history lane loses its edge.
pub fn experiment_config(budget: u64, seed: u64) -> SolverConfig {
    SolverConfig {
        budget,
        seed,
        c_app: 0.02,
        delta_max: 2.0,
        ..SolverConfig::default()
    }
}

/// Run the plan, replications in parallel. Output rows are sorted by
/// `(rep, t, lane)` regardless of scheduling.
pub fn run(plan: &BenchPlan) -> Result<BenchOutput, DfoError> {
    if plan.reps == 0 || plan.instances == 0 {
        return Err(DfoError::Config(
            "benchmark needs at least one replication and one instance".into(),
        ));
    }
    let config = experiment_config(plan.budget(), plan.seed);
    // early budget check with the real problem dimensions
    let required = ((methanol::N_X + 1) * methanol::TIMES.len() * methanol::BASE_ICS.len()) as u64;
    if config.budget < required {
        return Err(DfoError::Config(format!(
            "budget multiplier {} gives budget {} below the per-solve minimum {required}",
            plan.budget_mult,
            config.budget
        )));
    }

    let lanes: &[RunMode] = match plan.mode {
        BenchMode::History => &[RunMode::WithHistory],
        BenchMode::NoHistory => &[RunMode::NoHistory],
        BenchMode::Compare => &[RunMode::WithHistory, RunMode::NoHistory],
    };
    let mut rows: Vec<RunRow> = (0..plan.reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<RunRow>, DfoError> {
            let mut rep_rows = Vec::new();
            for &mode in lanes {
                rep_rows.extend(run_lane(plan, &config, rep, mode)?);
            }
            Ok(rep_rows)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by_key(|r| (r.rep, r.t, lane_label(r.mode)));

    let aggregates = if plan.mode == BenchMode::Compare {
        aggregate(&rows, plan.reps, plan.instances)
    } else {
        Vec::new()
    };
    Ok(BenchOutput { rows, aggregates })
}

fn aggregate(rows: &[RunRow], reps: u64, instances: u64) -> Vec<AggregateRow> {
    let pick = |rep: u64, t: u64, mode: RunMode| -> &RunRow {
        rows.iter()
            .find(|r| r.rep == rep && r.t == t && r.mode == mode)
            .expect("compare mode has every (rep, t, lane) row")
    };
    let mut cumdiff = vec![0.0_f64; reps as usize];
    let mut out = Vec::with_capacity(instances as usize);
    for t in 0..instances {
        let mut f_hist = 0.0;
        let mut f_nohist = 0.0;
        let mut m = 0.0;
        for rep in 0..reps {
            let h = pick(rep, t, RunMode::WithHistory);
            let n = pick(rep, t, RunMode::NoHistory);
            f_hist += h.final_f;
            f_nohist += n.final_f;
            m += h.approx_uses as f64;
            cumdiff[rep as usize] += n.final_f - h.final_f;
        }
        let r = reps as f64;
        let mean = cumdiff.iter().sum::<f64>() / r;
        let ci_half_width = if reps >= 2 {
            let var = cumdiff.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (r - 1.0);
            1.96 * (var / r).sqrt()
        } else {
            0.0
        };
        out.push(AggregateRow {
            t,
            f_bar_hist: f_hist / r,
            f_bar_nohist: f_nohist / r,
            cum_improvement: mean,
            ci_half_width,
            m_bar: m / r,
        });
    }
    out
}

pub const RUNS_CSV_HEADER: &str = "rep,t,mode,final_f,exact_evals,approx_uses,wall_ms";
pub const AGGREGATES_CSV_HEADER: &str =
    "t,f_bar_hist,f_bar_nohist,cum_improvement,ci_half_width,m_bar";

pub fn runs_csv(rows: &[RunRow]) -> String {
    let mut s = String::from(RUNS_CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{:.16e},{},{},{:.3}\n",
            r.rep,
            r.t,
            lane_label(r.mode),
            r.final_f,
            r.exact_evals,
            r.approx_uses,
            r.wall_ms
        ));
    }
    s
}

pub fn aggregates_csv(aggs: &[AggregateRow]) -> String {
    let mut s = String::from(AGGREGATES_CSV_HEADER);
    s.push('\n');
    for a in aggs {
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            a.t, a.f_bar_hist, a.f_bar_nohist, a.cum_improvement, a.ci_half_width, a.m_bar
        ));
    }
    s
}

pub fn write_runs_csv(rows: &[RunRow], path: &Path) -> Result<(), DfoError> {
    let mut f = std::fs::File::create(path).map_err(|e| DfoError::io(path, e))?;
    f.write_all(runs_csv(rows).as_bytes())
        .map_err(|e| DfoError::io(path, e))
}

pub fn write_aggregates_csv(aggs: &[AggregateRow], path: &Path) -> Result<(), DfoError> {
    let mut f = std::fs::File::create(path).map_err(|e| DfoError::io(path, e))?;
    f.write_all(aggregates_csv(aggs).as_bytes())
        .map_err(|e| DfoError::io(path, e))
}

// ---------------------------------------------------------------- plots

struct Frame {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(1e-300);
        self.left + (v - self.x_min) / span * (self.right - self.left)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-300);
        self.bottom - (v - self.y_min) / span * (self.bottom - self.top)
    }
}

fn svg_shell(title: &str, aggs: &[AggregateRow], body: String) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 720 420\" font-family=\"sans-serif\" font-size=\"12\">\n<!-- aggregate-data\n{}-->\n<rect x=\"0\" y=\"0\" width=\"720\" height=\"420\" fill=\"white\"/>\n<text x=\"360\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{title}</text>\n{body}</svg>\n",
        aggregates_csv(aggs)
    )
}

fn axes(frame: &Frame, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = frame.left,
        r = frame.right,
        t = frame.top,
        b = frame.bottom
    ));
    for frac in [0.0, 0.5, 1.0] {
        let xv = frame.x_min + frac * (frame.x_max - frame.x_min);
        let yv = frame.y_min + frac * (frame.y_max - frame.y_min);
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{xv:.0}</text>\n",
            frame.x(xv),
            frame.bottom + 18.0
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{yv:.3}</text>\n",
            frame.left - 6.0,
            frame.y(yv) + 4.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x_label}</text>\n",
        0.5 * (frame.left + frame.right),
        frame.bottom + 38.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{y_label}</text>\n",
        0.5 * (frame.top + frame.bottom),
        0.5 * (frame.top + frame.bottom)
    ));
    s
}

fn polyline(frame: &Frame, pts: impl Iterator<Item = (f64, f64)>, style: &str) -> String {
    let coords: Vec<String> = pts
        .map(|(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
        .collect();
    format!("<polyline fill=\"none\" {style} points=\"{}\"/>\n", coords.join(" "))
}

/// Two standalone SVG files in `dir`: `improvement.svg` (mean
/// cumulative objective savings of the history lane, with its 95% band)
/// and `approx_share.svg` (mean regression-use count per instance).
/// Both embed the full aggregate table as a comment, recoverable with
/// [`parse_plot_data`].
pub fn render_plots(aggs: &[AggregateRow], dir: &Path) -> Result<(), DfoError> {
    if aggs.is_empty() {
        return Err(DfoError::Config(
            "plots need compare-mode aggregates".into(),
        ));
    }
    std::fs::create_dir_all(dir).map_err(|e| DfoError::io(dir, e))?;
    let x_min = aggs.first().unwrap().t as f64;
    let x_max = aggs.last().unwrap().t as f64;

    // cumulative improvement with confidence band
    let lo = aggs
        .iter()
        .map(|a| a.cum_improvement - a.ci_half_width)
        .fold(f64::INFINITY, f64::min);
    let hi = aggs
        .iter()
        .map(|a| a.cum_improvement + a.ci_half_width)
        .fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (hi - lo).max(1e-12);
    let frame = Frame {
        left: 70.0,
        right: 690.0,
        top: 40.0,
        bottom: 370.0,
        x_min,
        x_max: x_max.max(x_min + 1.0),
        y_min: lo.min(0.0) - pad,
        y_max: hi + pad,
    };
    let mut body = axes(&frame, "instance index", "cumulative improvement");
    let mut band: Vec<String> = aggs
        .iter()
        .map(|a| {
            format!(
                "{:.2},{:.2}",
                frame.x(a.t as f64),
                frame.y(a.cum_improvement + a.ci_half_width)
            )
        })
        .collect();
    band.extend(aggs.iter().rev().map(|a| {
        format!(
            "{:.2},{:.2}",
            frame.x(a.t as f64),
            frame.y(a.cum_improvement - a.ci_half_width)
        )
    }));
    body.push_str(&format!(
        "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"{}\"/>\n",
        band.join(" ")
    ));
    body.push_str(&polyline(
        &frame,
        aggs.iter().map(|a| (a.t as f64, 0.0)),
        "stroke=\"#999999\" stroke-dasharray=\"4 3\"",
    ));
    body.push_str(&polyline(
        &frame,
        aggs.iter().map(|a| (a.t as f64, a.cum_improvement)),
        "stroke=\"#08519c\" stroke-width=\"2\"",
    ));
    let svg = svg_shell("History lane: cumulative objective savings", aggs, body);
    let path = dir.join("improvement.svg");
    std::fs::write(&path, svg).map_err(|e| DfoError::io(&path, e))?;

    // regression-use share
    let m_max = aggs.iter().map(|a| a.m_bar).fold(0.0, f64::max);
    let frame = Frame {
        left: 70.0,
        right: 690.0,
        top: 40.0,
        bottom: 370.0,
        x_min,
        x_max: x_max.max(x_min + 1.0),
        y_min: 0.0,
        y_max: (m_max * 1.1).max(1.0),
    };
    let mut body = axes(&frame, "instance index", "mean regression uses");
    body.push_str(&polyline(
        &frame,
        aggs.iter().map(|a| (a.t as f64, a.m_bar)),
        "stroke=\"#a63603\" stroke-width=\"2\"",
    ));
    let svg = svg_shell("History lane: regression use per instance", aggs, body);
    let path = dir.join("approx_share.svg");
    std::fs::write(&path, svg).map_err(|e| DfoError::io(&path, e))
}

/// Recover the aggregate table embedded in a plot by [`render_plots`].
pub fn parse_plot_data(svg: &str) -> Option<Vec<AggregateRow>> {
    let start = svg.find("<!-- aggregate-data\n")? + "<!-- aggregate-data\n".len();
    let end = svg[start..].find("-->")? + start;
    let block = &svg[start..end];
    let mut lines = block.lines();
    if lines.next()? != AGGREGATES_CSV_HEADER {
        return None;
    }
    let mut out = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return None;
        }
        out.push(AggregateRow {
            t: f[0].parse().ok()?,
            f_bar_hist: f[1].parse().ok()?,
            f_bar_nohist: f[2].parse().ok()?,
            cum_improvement: f[3].parse().ok()?,
            ci_half_width: f[4].parse().ok()?,
            m_bar: f[5].parse().ok()?,
        });
    }
    Some(out)
}
