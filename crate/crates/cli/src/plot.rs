//! Minimal deterministic SVG line charts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use deepmod_core::metrics::{aggregate_seeds, CerCurve, MetricsLog};
use serde::Deserialize;

use crate::error::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Draw markers at every point (always done for single-point series).
    pub markers: bool,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            markers: false,
        }
    }

    pub fn marked(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            markers: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Base-10 logarithmic y axis; non-positive values are clipped to the axis floor.
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.0e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let pts = || self.series.iter().flat_map(|s| s.points.iter());
        let xs: Vec<f64> = pts().map(|p| p.0).filter(|v| v.is_finite()).collect();
        let ys: Vec<f64> = pts()
            .map(|p| self.y_value(p.1))
            .filter(|v| v.is_finite())
            .collect();
        let range = |v: &[f64]| {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 1.0, hi + 1.0)
            } else {
                (lo, hi)
            }
        };
        let (mut ylo, mut yhi) = range(&ys);
        if self.log_y {
            ylo = ylo.floor();
            yhi = yhi.ceil().max(ylo + 1.0);
        }
        (range(&xs), (ylo, yhi))
    }

    fn y_value(&self, y: f64) -> f64 {
        if self.log_y {
            y.max(1e-6).log10()
        } else {
            y
        }
    }

    pub fn to_svg(&self) -> String {
        let ((xlo, xhi), (ylo, yhi)) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - xlo) / (xhi - xlo) * pw;
        let sy = |y: f64| TOP + ph - (y - ylo) / (yhi - ylo) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for t in ticks(xlo, xhi) {
            let x = sx(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{TOP}" stroke="#ddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 16.0,
                fmt_tick(t)
            );
        }
        let yt = if self.log_y {
            (ylo as i32..=yhi as i32).map(f64::from).collect()
        } else {
            ticks(ylo, yhi)
        };
        for t in yt {
            let y = sy(t);
            let label = if self.log_y {
                fmt_tick(10f64.powf(t))
            } else {
                fmt_tick(t)
            };
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter(|p| p.0.is_finite() && self.y_value(p.1).is_finite())
                .map(|&(x, y)| (sx(x), sy(self.y_value(y))))
                .collect();
            if pts.len() > 1 {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    path.join(" ")
                );
            }
            if series.markers || pts.len() == 1 {
                for (x, y) in &pts {
                    let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{color}"/>"#);
                }
            }
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                lx + 18.0,
                lx + 24.0,
                ly + 4.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn sorted_dirs(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_dir()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with(prefix))
        })
        .collect();
    // Numeric order of the suffix, so seed_10 follows seed_9 and train_snr_-5 precedes train_snr_0.
    out.sort_by(|a, b| {
        let key = |p: &Path| {
            p.file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n[prefix.len()..].parse::<f64>().ok())
                .unwrap_or(f64::INFINITY)
        };
        key(a).total_cmp(&key(b)).then_with(|| a.cmp(b))
    });
    Ok(out)
}

fn read_log(path: &Path) -> Result<Option<MetricsLog>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    MetricsLog::read_csv(f).map(Some).map_err(|e| io_err(path, e))
}

fn read_curve(path: &Path) -> Result<Option<CerCurve>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    CerCurve::read_csv(f).map(Some).map_err(|e| io_err(path, e))
}

fn curve_series(name: String, c: &CerCurve) -> Series {
    Series::marked(name, c.points().iter().map(|p| (p.test_snr_db, p.cer)).collect())
}

fn trace_series(name: String, log: &MetricsLog) -> Series {
    Series::line(name, log.success_trace(None).into_iter().map(|(e, s)| (e as f64, s)).collect())
}

/// Logs of `<dir>/seed_*/<rel>` in seed order.
fn seed_logs(dir: &Path, rel: &str) -> Result<Vec<(String, MetricsLog)>, CliError> {
    let mut out = Vec::new();
    for d in sorted_dirs(dir, "seed_")? {
        if let Some(log) = read_log(&d.join(rel))? {
            let name = d.file_name().unwrap().to_string_lossy().replace('_', " ");
            out.push((name, log));
        }
    }
    Ok(out)
}

fn median_series(name: &str, logs: &[MetricsLog]) -> Option<Series> {
    if logs.is_empty() || logs.iter().any(|l| l.is_empty()) {
        return None;
    }
    let agg = aggregate_seeds(logs).ok()?;
    Some(Series::line(name, agg.iter().map(|r| (r.epoch as f64, r.median)).collect()))
}

#[derive(Deserialize)]
struct CrossSection {
    test_snr_db: f64,
    train_snr_db: f64,
    median_cer: f64,
}

/// Renders every chart the CSVs under `dir` support. Errors when there is nothing to plot.
pub fn plot_run(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Io(format!("{}: not a run directory", dir.display())));
    }
    let mut charts: Vec<(&str, Chart)> = Vec::new();

    let logs = seed_logs(dir, "metrics.csv")?;
    if !logs.is_empty() {
        let mut c = Chart::new("Class success during training", "epoch", "class success");
        let plain: Vec<MetricsLog> = logs.iter().map(|(_, l)| l.clone()).collect();
        if logs.len() > 1 {
            if let Some(m) = median_series("median", &plain) {
                c = c.with(m);
            }
        }
        for (name, log) in &logs {
            c = c.with(trace_series(name.clone(), log));
        }
        charts.push(("convergence.svg", c));
    }

    if let Some(pooled) = read_curve(&dir.join("cer.csv"))? {
        let mut c = Chart::new("Class error rate", "test SNR (dB)", "CER").log_y();
        c = c.with(curve_series("pooled".into(), &pooled));
        for d in sorted_dirs(dir, "seed_")? {
            if let Some(curve) = read_curve(&d.join("cer.csv"))? {
                let name = d.file_name().unwrap().to_string_lossy().replace('_', " ");
                c = c.with(curve_series(name, &curve));
            }
        }
        charts.push(("cer.svg", c));
    }

    let study = sorted_dirs(dir, "train_snr_")?;
    if !study.is_empty() {
        let mut c = Chart::new("Median class success by train SNR", "epoch", "class success");
        for d in &study {
            let logs: Vec<MetricsLog> = seed_logs(d, "metrics.csv")?.into_iter().map(|p| p.1).collect();
            let label = format!("{} dB", &d.file_name().unwrap().to_string_lossy()["train_snr_".len()..]);
            if let Some(s) = median_series(&label, &logs) {
                c = c.with(s);
            }
        }
        if !c.series.is_empty() {
            charts.push(("train_snr_convergence.svg", c));
        }
    }

    let cross = dir.join("cer_cross_section.csv");
    if cross.exists() {
        let mut rdr = csv::Reader::from_path(&cross).map_err(|e| io_err(&cross, e))?;
        let rows: Vec<CrossSection> = rdr
            .deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e| io_err(&cross, e))?;
        let mut tests: Vec<f64> = rows.iter().map(|r| r.test_snr_db).collect();
        tests.sort_by(f64::total_cmp);
        tests.dedup();
        let mut c = Chart::new("CER against train SNR", "train SNR (dB)", "median CER").log_y();
        for t in tests {
            let mut pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.test_snr_db == t)
                .map(|r| (r.train_snr_db, r.median_cer))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            c = c.with(Series::marked(format!("test {t} dB"), pts));
        }
        charts.push(("cer_vs_train_snr.svg", c));
    }

    let retrain = seed_logs(dir, "retrain/metrics.csv")?;
    if !retrain.is_empty() {
        let mut c = Chart::new("Retraining under a tone jammer", "epoch", "class success");
        for (name, log) in &retrain {
            c = c.with(trace_series(name.clone(), log));
        }
        charts.push(("jammer_retrain.svg", c));
    }

    if charts.is_empty() {
        return Err(CliError::Io(format!(
            "{}: no metrics or CER CSVs to plot",
            dir.display()
        )));
    }
    let mut written = Vec::new();
    for (name, chart) in charts {
        let path = dir.join(name);
        fs::write(&path, chart.to_svg()).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
