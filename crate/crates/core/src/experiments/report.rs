use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ExperimentConfig, Scenario};
use crate::error::{Error, Result};
use crate::model::{SurgemeClass, NUM_CLASSES};

/// Which curve a cell belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Series {
    /// Cross-validation cell of the no-transfer scenario.
    Main,
    /// Sim plus ratio-controlled real training.
    Transfer,
    /// Real-only training on the full held-in pool.
    Baseline,
}

impl Series {
    pub fn as_str(self) -> &'static str {
        match self {
            Series::Main => "main",
            Series::Transfer => "transfer",
            Series::Baseline => "baseline",
        }
    }
}

/// One trained-and-tested model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub robot: String,
    pub series: Series,
    pub ratio: Option<f64>,
    pub fold: Option<usize>,
    pub seed: u64,
    pub accuracy: f64,
    pub correct: usize,
    /// Test instances: segments sequence-wise, frames frame-wise.
    pub total: usize,
    pub train_sim: usize,
    pub train_real: usize,
    /// Fewer real segments were available than the ratio asked for.
    pub shortfall: bool,
    /// Rows are true classes, columns predictions.
    pub confusion: [[usize; NUM_CLASSES]; NUM_CLASSES],
}

fn ratio_cmp(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (a, b) => a.is_some().cmp(&b.is_some()),
    }
}

impl CellResult {
    pub(crate) fn key_cmp(a: &Self, b: &Self) -> Ordering {
        a.robot
            .cmp(&b.robot)
            .then(a.series.cmp(&b.series))
            .then(ratio_cmp(a.ratio, b.ratio))
            .then(a.seed.cmp(&b.seed))
            .then(a.fold.cmp(&b.fold))
    }
}

/// Mean and standard deviation of accuracy over the cells of one curve point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub robot: String,
    pub series: Series,
    pub ratio: Option<f64>,
    pub cells: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); zero for a single cell.
    pub std: f64,
    pub confusion: [[usize; NUM_CLASSES]; NUM_CLASSES],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub learner: String,
    /// SHA-256 of the TOML rendering of `config`.
    pub config_hash: String,
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

fn summarize(cells: &[CellResult]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut start = 0;
    while start < cells.len() {
        let first = &cells[start];
        let end = cells[start..]
            .iter()
            .position(|c| c.robot != first.robot || c.series != first.series || ratio_cmp(c.ratio, first.ratio).is_ne())
            .map_or(cells.len(), |p| start + p);
        let group = &cells[start..end];
        let accs: Vec<f64> = group.iter().map(|c| c.accuracy).collect();
        let (mean, std) = mean_std(&accs);
        let mut confusion = [[0; NUM_CLASSES]; NUM_CLASSES];
        for c in group {
            for (row, crow) in confusion.iter_mut().zip(&c.confusion) {
                for (v, cv) in row.iter_mut().zip(crow) {
                    *v += cv;
                }
            }
        }
        rows.push(SummaryRow {
            robot: first.robot.clone(),
            series: first.series,
            ratio: first.ratio,
            cells: group.len(),
            mean,
            std,
            confusion,
        });
        start = end;
    }
    rows
}

pub(crate) fn config_toml(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("config serializes")
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

impl ExperimentReport {
    /// Builds a report from cells already in key order.
    pub fn new(config: ExperimentConfig, learner: String, mut cells: Vec<CellResult>) -> Self {
        cells.sort_by(CellResult::key_cmp);
        let summary = summarize(&cells);
        ExperimentReport {
            config_hash: sha256_hex(&config_toml(&config)),
            config,
            learner,
            cells,
            summary,
        }
    }

    pub fn scenario(&self) -> Scenario {
        self.config.scenario
    }

    fn prefix(&self) -> String {
        format!(
            "{},{},{},{}",
            self.config.scenario.as_str(),
            self.config.mode.as_str(),
            self.learner,
            self.config.feature_kind.as_str()
        )
    }

    /// One row per cell.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(
            "scenario,mode,learner,feature_kind,ratio,fold,seed,accuracy,robot,series,correct,test_instances,train_sim,train_real,shortfall\n",
        );
        let prefix = self.prefix();
        for c in &self.cells {
            writeln!(
                out,
                "{prefix},{},{},{},{},{},{},{},{},{},{},{}",
                fmt_opt(c.ratio),
                c.fold.map(|f| f.to_string()).unwrap_or_default(),
                c.seed,
                c.accuracy,
                c.robot,
                c.series.as_str(),
                c.correct,
                c.total,
                c.train_sim,
                c.train_real,
                c.shortfall
            )
            .unwrap();
        }
        out
    }

    /// One row per (robot, series, ratio).
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("scenario,mode,learner,feature_kind,ratio,robot,series,cells,mean,std\n");
        let prefix = self.prefix();
        for r in &self.summary {
            writeln!(
                out,
                "{prefix},{},{},{},{},{},{}",
                fmt_opt(r.ratio),
                r.robot,
                r.series.as_str(),
                r.cells,
                r.mean,
                r.std
            )
            .unwrap();
        }
        out
    }

    /// Robots as rows and `mean±std` accuracy in percent, as in a results table.
    pub fn table_csv(&self) -> String {
        table_csv(std::slice::from_ref(self))
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Combines no-transfer reports into one table: a row per robot, a column
/// per (mode, learner, features) setup. Transfer reports contribute their
/// real-only baseline and their transfer point at the largest ratio.
pub fn table_csv(reports: &[ExperimentReport]) -> String {
    let mut columns: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(String, usize), String> = BTreeMap::new();
    for r in reports {
        let setup = format!("{} {} {}", r.config.mode.as_str(), r.learner, r.config.feature_kind.as_str());
        let max_ratio = r.summary.iter().filter_map(|s| s.ratio).fold(None, |m: Option<f64>, v| {
            Some(m.map_or(v, |m| m.max(v)))
        });
        for s in &r.summary {
            let label = match s.series {
                Series::Main => setup.clone(),
                Series::Baseline => format!("{setup} real-only"),
                Series::Transfer if s.ratio == max_ratio => format!("{setup} transfer@{}", fmt_opt(s.ratio)),
                Series::Transfer => continue,
            };
            let col = columns.iter().position(|c| *c == label).unwrap_or_else(|| {
                columns.push(label.clone());
                columns.len() - 1
            });
            cells.insert(
                (s.robot.clone(), col),
                format!("{:.0}±{:.0}", 100.0 * s.mean, 100.0 * s.std),
            );
        }
    }
    let robots: Vec<&String> = cells
        .keys()
        .map(|(r, _)| r)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut out = String::from("robot");
    for c in &columns {
        write!(out, ",{c}").unwrap();
    }
    out.push('\n');
    for robot in robots {
        out.push_str(robot);
        for col in 0..columns.len() {
            write!(out, ",{}", cells.get(&(robot.clone(), col)).map_or("", |s| s.as_str())).unwrap();
        }
        out.push('\n');
    }
    out
}

fn confusion_csv(m: &[[usize; NUM_CLASSES]; NUM_CLASSES]) -> String {
    let mut out = String::from("true\\predicted");
    for c in SurgemeClass::ALL {
        write!(out, ",{}", c.name()).unwrap();
    }
    out.push('\n');
    for (c, row) in SurgemeClass::ALL.iter().zip(m) {
        out.push_str(c.name());
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Accuracy versus real:sim ratio for one robot: the transfer curve and the
/// real-only baseline drawn at every ratio of the grid.
pub fn render_svg(report: &ExperimentReport, robot: &str) -> String {
    const W: f64 = 800.0;
    const H: f64 = 500.0;
    let (left, right, top, bottom) = (80.0, 40.0, 50.0, 70.0);
    let rows: Vec<&SummaryRow> = report.summary.iter().filter(|s| s.robot == robot).collect();
    let transfer: Vec<(f64, f64)> = rows
        .iter()
        .filter(|s| s.series == Series::Transfer)
        .filter_map(|s| s.ratio.map(|r| (r, s.mean)))
        .collect();
    let baseline = rows.iter().find(|s| s.series == Series::Baseline).map(|s| s.mean);
    let x_max = transfer.iter().map(|p| p.0).fold(0.0, f64::max);
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };
    let px = |r: f64| left + (W - left - right) * r / x_max;
    let py = |a: f64| top + (H - top - bottom) * (1.0 - a);
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="500" viewBox="0 0 800 500" font-family="sans-serif" font-size="13">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="800" height="500" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="400" y="28" text-anchor="middle" font-size="16">{} ({} {}, {})</text>"#,
        xml_escape(robot),
        xml_escape(&report.learner),
        report.config.mode.as_str(),
        report.config.feature_kind.as_str()
    )
    .unwrap();
    // Axes, grid and ticks.
    writeln!(
        s,
        r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/>"#,
        l = left,
        r = W - right,
        t = top,
        b = H - bottom
    )
    .unwrap();
    for k in 0..=5 {
        let a = k as f64 / 5.0;
        writeln!(
            s,
            r##"<line x1="{l}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="#dddddd"/><text x="{tx}" y="{ty:.2}" text-anchor="end">{a:.1}</text>"##,
            l = left,
            r = W - right,
            y = py(a),
            tx = left - 8.0,
            ty = py(a) + 4.0
        )
        .unwrap();
    }
    for &(r, _) in &transfer {
        writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{b2}" stroke="black"/><text x="{x:.2}" y="{ty}" text-anchor="middle">{r}</text>"#,
            x = px(r),
            b = H - bottom,
            b2 = H - bottom + 5.0,
            ty = H - bottom + 20.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{x}" y="{y}" text-anchor="middle">real:sim ratio</text>"#,
        x = left + (W - left - right) / 2.0,
        y = H - 20.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="20" y="{y}" text-anchor="middle" transform="rotate(-90 20 {y})">accuracy</text>"#,
        y = top + (H - top - bottom) / 2.0
    )
    .unwrap();
    // Series.
    let points = |pts: &[(f64, f64)]| {
        pts.iter()
            .map(|(r, a)| format!("{:.2},{:.2}", px(*r), py(*a)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    if let Some(b) = baseline {
        let pts: Vec<(f64, f64)> = transfer.iter().map(|&(r, _)| (r, b)).collect();
        writeln!(
            s,
            r##"<polyline class="series baseline" fill="none" stroke="#e67e22" stroke-width="2" stroke-dasharray="6 4" points="{}"/>"##,
            points(&pts)
        )
        .unwrap();
        for (r, a) in &pts {
            writeln!(
                s,
                r##"<rect class="marker baseline" x="{:.2}" y="{:.2}" width="8" height="8" fill="#e67e22"/>"##,
                px(*r) - 4.0,
                py(*a) - 4.0
            )
            .unwrap();
        }
    }
    writeln!(
        s,
        r##"<polyline class="series transfer" fill="none" stroke="#2c7fb8" stroke-width="2" points="{}"/>"##,
        points(&transfer)
    )
    .unwrap();
    for (r, a) in &transfer {
        writeln!(
            s,
            r##"<circle class="marker transfer" cx="{:.2}" cy="{:.2}" r="4.5" fill="#2c7fb8"/>"##,
            px(*r),
            py(*a)
        )
        .unwrap();
    }
    // Legend.
    let lx = W - right - 190.0;
    let ly = top + 15.0;
    writeln!(
        s,
        r##"<line x1="{lx}" y1="{ly}" x2="{lx2}" y2="{ly}" stroke="#2c7fb8" stroke-width="2"/><text x="{tx}" y="{ty}">transfer</text>"##,
        lx2 = lx + 30.0,
        tx = lx + 38.0,
        ty = ly + 4.0
    )
    .unwrap();
    writeln!(
        s,
        r##"<line x1="{lx}" y1="{ly2}" x2="{lx2}" y2="{ly2}" stroke="#e67e22" stroke-width="2" stroke-dasharray="6 4"/><text x="{tx}" y="{ty}">real-only baseline</text>"##,
        ly2 = ly + 20.0,
        lx2 = lx + 30.0,
        tx = lx + 38.0,
        ty = ly + 24.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

fn file_stem(robot: &str) -> String {
    robot
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Writes the report set into `dir` and returns the written paths in order:
/// `metrics.csv`, `summary.csv`, `table.csv`, confusion matrices, ratio-sweep
/// plots (transfer only), `config.toml` and `report.json`.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(PathBuf, String)> = vec![
        (dir.join("metrics.csv"), report.metrics_csv()),
        (dir.join("summary.csv"), report.summary_csv()),
        (dir.join("table.csv"), report.table_csv()),
    ];
    for row in &report.summary {
        let mut name = format!("confusion_{}_{}", file_stem(&row.robot), row.series.as_str());
        if let Some(r) = row.ratio {
            write!(name, "_{r}").unwrap();
        }
        files.push((dir.join(format!("{name}.csv")), confusion_csv(&row.confusion)));
    }
    if report.scenario() == Scenario::DomainTransfer {
        let robots: std::collections::BTreeSet<&str> = report.summary.iter().map(|s| s.robot.as_str()).collect();
        for robot in robots {
            files.push((
                dir.join(format!("ratio_sweep_{}.svg", file_stem(robot))),
                render_svg(report, robot),
            ));
        }
    }
    files.push((
        dir.join("config.toml"),
        format!(
            "# learner: {}\n# config-hash: {}\n{}",
            report.learner,
            report.config_hash,
            config_toml(&report.config)
        ),
    ));
    files.push((
        dir.join("report.json"),
        serde_json::to_string_pretty(report).expect("report serializes") + "\n",
    ));
    for (path, text) in &files {
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// Reads a report written by [`emit_report`].
pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, None, e.to_string()))
}
