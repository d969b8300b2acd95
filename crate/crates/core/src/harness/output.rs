use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::metrics::{activity_by_year, SummaryRow};
use super::run::RunArtifacts;
use crate::ecology::{YearEcology, YearRecord};
use crate::{Error, Result};

const RECORD_HEADER: [&str; 12] = [
    "year",
    "household",
    "planted",
    "irrigated",
    "delivered",
    "crop_income",
    "catch",
    "fish_income",
    "irrigation_cost",
    "budget",
    "stress",
    "activity",
];

const ECOLOGY_HEADER: [&str; 9] = [
    "year",
    "river_inflow",
    "withdrawn",
    "lake_inflow",
    "pre_harvest_adults",
    "total_catch",
    "adults_after",
    "fish_total_after",
    "migration",
];

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];
const ACTIVITY_COLOURS: [(&str, &str); 4] = [
    ("both", "#2ca02c"),
    ("farming only", "#ff7f0e"),
    ("fishing only", "#1f77b4"),
    ("none", "#bbbbbb"),
];

/// Writes `bytes` to `path` through a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    // Writing to a Vec cannot fail.
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

pub fn records_csv(records: &[YearRecord]) -> Vec<u8> {
    csv_bytes(
        &RECORD_HEADER,
        records.iter().map(|r| {
            vec![
                r.year.to_string(),
                r.household.to_string(),
                r.planted.to_string(),
                r.irrigated.to_string(),
                r.delivered.to_string(),
                r.crop_income.to_string(),
                r.catch.to_string(),
                r.fish_income.to_string(),
                r.irrigation_cost.to_string(),
                r.budget.to_string(),
                r.stress.to_string(),
                r.activity.as_str().to_string(),
            ]
        }),
    )
}

pub fn summary_csv(rows: &[SummaryRow]) -> Vec<u8> {
    csv_bytes(&SummaryRow::HEADER, rows.iter().map(SummaryRow::fields))
}

pub fn ecology_csv(ecology: &[YearEcology]) -> Vec<u8> {
    csv_bytes(
        &ECOLOGY_HEADER,
        ecology.iter().enumerate().map(|(i, e)| {
            vec![
                (i + 1).to_string(),
                e.river_inflow.iter().sum::<f64>().to_string(),
                e.withdrawn.iter().sum::<f64>().to_string(),
                e.lake_inflow.iter().sum::<f64>().to_string(),
                e.pre_harvest_adults.to_string(),
                e.total_catch.to_string(),
                e.fish_after.adult_total().to_string(),
                e.fish_after.total().to_string(),
                e.migration.to_string(),
            ]
        }),
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    width: f64,
    height: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    const CHART: Frame = Frame {
        width: 800.0,
        height: 450.0,
        left: 70.0,
        right: 150.0,
        top: 40.0,
        bottom: 50.0,
    };

    fn plot_w(&self) -> f64 {
        self.width - self.left - self.right
    }

    fn plot_h(&self) -> f64 {
        self.height - self.top - self.bottom
    }

    fn open(&self, out: &mut String, title: &str, x_label: &str, y_label: &str) {
        let (w, h) = (self.width, self.height);
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            self.left + self.plot_w() / 2.0,
            xml_escape(title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            self.left + self.plot_w() / 2.0,
            h - 12.0,
            xml_escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            self.top + self.plot_h() / 2.0,
            self.top + self.plot_h() / 2.0,
            xml_escape(y_label)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
            self.left,
            self.top,
            self.plot_w(),
            self.plot_h()
        );
    }

    fn legend(&self, out: &mut String, entries: &[(String, &str)]) {
        let x = self.width - self.right + 15.0;
        for (i, (label, colour)) in entries.iter().enumerate() {
            let y = self.top + 10.0 + 18.0 * i as f64;
            let _ = writeln!(out, r#"<rect x="{x}" y="{:.1}" width="12" height="12" fill="{colour}"/>"#, y - 10.0);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 18.0, xml_escape(label));
        }
    }
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-9);
    let raw = span / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= count as f64)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    while t <= hi + 1e-9 {
        ticks.push(if t.abs() < 1e-9 { 0.0 } else { t });
        t += step;
    }
    ticks
}

/// Line chart of every household's budget over the years.
pub fn budgets_svg(records: &[YearRecord], n_households: usize) -> String {
    let f = Frame::CHART;
    let mut out = String::new();
    f.open(&mut out, "Household budget", "year", "budget");
    let years = records.iter().map(|r| r.year).max().unwrap_or(1).max(1);
    let (mut lo, mut hi) = records
        .iter()
        .fold((0.0f64, 0.0f64), |(lo, hi), r| (lo.min(r.budget), hi.max(r.budget)));
    if hi - lo < 1e-9 {
        hi = lo + 1.0;
    }
    let pad = (hi - lo) * 0.05;
    lo -= pad;
    hi += pad;
    let x = |year: f64| f.left + f.plot_w() * if years > 1 { (year - 1.0) / f64::from(years - 1) } else { 0.5 };
    let y = |v: f64| f.top + f.plot_h() * (hi - v) / (hi - lo);

    for t in nice_ticks(lo, hi, 6) {
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            f.left,
            y(t),
            f.left + f.plot_w(),
            y(t)
        );
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{t}</text>"#, f.left - 6.0, y(t) + 4.0);
    }
    if lo < 0.0 && hi > 0.0 {
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="4 3"/>"#,
            f.left,
            y(0.0),
            f.left + f.plot_w(),
            y(0.0)
        );
    }
    for t in nice_ticks(1.0, f64::from(years), 10) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{t}</text>"#,
            x(t),
            f.top + f.plot_h() + 16.0
        );
    }

    let mut legend = Vec::new();
    for h in 1..=n_households {
        let colour = PALETTE[(h - 1) % PALETTE.len()];
        let points: Vec<String> = records
            .iter()
            .filter(|r| r.household == h)
            .map(|r| format!("{:.2},{:.2}", x(f64::from(r.year)), y(r.budget)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        legend.push((format!("household {h}"), colour));
    }
    f.legend(&mut out, &legend);
    out.push_str("</svg>\n");
    out
}

/// Stacked bars of the activity mix per year.
pub fn activity_svg(records: &[YearRecord]) -> String {
    let f = Frame::CHART;
    let mut out = String::new();
    f.open(&mut out, "Household activity", "year", "share of households (%)");
    let shares = activity_by_year(records);
    let bar_w = f.plot_w() / shares.len().max(1) as f64;
    let y = |pct: f64| f.top + f.plot_h() * (100.0 - pct) / 100.0;
    for t in [0.0, 25.0, 50.0, 75.0, 100.0] {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{t}</text>"#, f.left - 6.0, y(t) + 4.0);
    }
    for (i, (year, pct)) in shares.iter().enumerate() {
        let x0 = f.left + bar_w * i as f64;
        let mut acc = 0.0;
        for (k, (_, colour)) in ACTIVITY_COLOURS.iter().enumerate() {
            if pct[k] <= 0.0 {
                continue;
            }
            let _ = writeln!(
                out,
                r#"<rect x="{x0:.2}" y="{:.2}" width="{bar_w:.2}" height="{:.2}" fill="{colour}"><title>year {year}</title></rect>"#,
                y(acc + pct[k]),
                f.plot_h() * pct[k] / 100.0
            );
            acc += pct[k];
        }
    }
    let years = shares.len() as f64;
    for t in nice_ticks(1.0, years.max(1.0), 10) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{t}</text>"#,
            f.left + bar_w * (t - 0.5),
            f.top + f.plot_h() + 16.0
        );
    }
    let legend: Vec<(String, &str)> = ACTIVITY_COLOURS.iter().map(|(l, c)| (l.to_string(), *c)).collect();
    f.legend(&mut out, &legend);
    out.push_str("</svg>\n");
    out
}

/// Writes the run's CSV tables, charts and (for language-model runs) the
/// request log into `out_dir`, returning the written paths.
pub fn emit_outputs(art: &RunArtifacts, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files: Vec<(&str, Vec<u8>)> = vec![
        ("records.csv", records_csv(&art.records)),
        ("summary.csv", summary_csv(&[SummaryRow::from_artifacts(art)])),
        ("ecology.csv", ecology_csv(&art.ecology)),
        ("budgets.svg", budgets_svg(&art.records, art.config.n_households).into_bytes()),
        ("activity.svg", activity_svg(&art.records).into_bytes()),
    ];
    if art.config.pipeline.uses_gateway() {
        let mut log = String::new();
        for entry in &art.request_log {
            log.push_str(&serde_json::to_string(entry).expect("log entries serialize"));
            log.push('\n');
        }
        files.push(("request_log.jsonl", log.into_bytes()));
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = out_dir.join(name);
        write_atomic(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_simulation, RunConfig};

    #[test]
    fn csv_quotes_and_crlf() {
        let bytes = csv_bytes(&["a", "b"], vec![vec!["x,y".to_string(), "\"q\"".to_string()]]);
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\r\n\"x,y\",\"\"\"q\"\"\"\r\n");
    }

    #[test]
    fn horizon_one_emits_headers_and_rows() {
        let cfg = RunConfig {
            horizon: 1,
            ..RunConfig::default()
        };
        let art = run_simulation(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_outputs(&art, dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        let records = fs::read_to_string(dir.path().join("records.csv")).unwrap();
        let lines: Vec<&str> = records.lines().collect();
        assert_eq!(lines.len(), 1 + cfg.n_households);
        assert_eq!(lines[0], RECORD_HEADER.join(","));
        let svg = fs::read_to_string(dir.path().join("budgets.svg")).unwrap();
        assert!(svg.contains("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn re_emit_is_byte_identical() {
        let cfg = RunConfig {
            horizon: 5,
            ..RunConfig::default()
        };
        let art = run_simulation(&cfg).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        emit_outputs(&art, a.path()).unwrap();
        emit_outputs(&art, b.path()).unwrap();
        for name in ["records.csv", "summary.csv", "ecology.csv", "budgets.svg", "activity.svg"] {
            assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
        }
    }

    #[test]
    fn unwritable_dir_is_io_error() {
        let cfg = RunConfig {
            horizon: 1,
            ..RunConfig::default()
        };
        let art = run_simulation(&cfg).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        let err = emit_outputs(&art, &file.path().join("sub")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(-120.0, 880.0, 6);
        assert!(t.first().unwrap() >= &-120.0 && t.last().unwrap() <= &880.0);
        assert!(t.contains(&0.0));
    }
}
