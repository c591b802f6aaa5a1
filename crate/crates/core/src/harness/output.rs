//! Result rows, CSV serialization and SVG bar charts.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 6] = ["experiment", "cell", "metric", "value", "se", "R"];

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    /// `key=value` pairs joined by `;`.
    pub cell: String,
    pub metric: String,
    pub value: f64,
    /// Monte-Carlo standard error; `None` when undefined (R = 1 or not a proportion).
    pub se: Option<f64>,
    pub replicates: usize,
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => Error::Io(format!("{other:?}")),
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        let se = r.se.map(|s| s.to_string()).unwrap_or_default();
        w.write_record([
            r.experiment.as_str(),
            r.cell.as_str(),
            r.metric.as_str(),
            &r.value.to_string(),
            &se,
            &r.replicates.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!("unexpected header {header:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Config(format!("bad number {s:?}: {e}")));
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        rows.push(ResultRow {
            experiment: rec[0].to_string(),
            cell: rec[1].to_string(),
            metric: rec[2].to_string(),
            value: num(&rec[3])?,
            se: if rec[4].is_empty() { None } else { Some(num(&rec[4])?) },
            replicates: rec[5].parse().map_err(|e| Error::Config(format!("bad count {:?}: {e}", &rec[5])))?,
        });
    }
    Ok(rows)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Bar chart of one metric across cells, with ±2 se whiskers.
pub fn bar_chart_svg(title: &str, rows: &[&ResultRow]) -> String {
    let (w, h, left, bottom, top) = (720.0, 420.0, 60.0, 150.0, 40.0);
    let plot_h = h - bottom - top;
    let finite: Vec<f64> = rows.iter().map(|r| r.value + 2.0 * r.se.unwrap_or(0.0)).filter(|v| v.is_finite()).collect();
    let ymax = finite.iter().copied().fold(0.0f64, f64::max).max(1e-12) * 1.1;
    let slot = (w - left - 20.0) / rows.len().max(1) as f64;
    let y_of = |v: f64| top + plot_h * (1.0 - (v / ymax).clamp(0.0, 1.0));
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = write!(s, r#"<text x="{}" y="22" font-size="14" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let _ = write!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, top + plot_h);
    let _ = write!(s, r#"<line x1="{left}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#, top + plot_h, w - 20.0);
    for k in 0..=4 {
        let v = ymax * k as f64 / 4.0;
        let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, left - 4.0, y_of(v) + 4.0, v);
    }
    for (i, r) in rows.iter().enumerate() {
        let x = left + slot * i as f64 + slot * 0.15;
        let bw = slot * 0.7;
        if r.value.is_finite() {
            let y = y_of(r.value);
            let _ = write!(
                s,
                r##"<rect x="{x:.2}" y="{y:.2}" width="{bw:.2}" height="{:.2}" fill="#4a78b0"/>"##,
                top + plot_h - y
            );
            if let Some(se) = r.se {
                let cx = x + bw / 2.0;
                let _ = write!(
                    s,
                    r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
                    y_of(r.value - 2.0 * se),
                    y_of(r.value + 2.0 * se)
                );
            }
        }
        let lx = x + bw / 2.0;
        let ly = top + plot_h + 8.0;
        let _ = write!(
            s,
            r#"<text x="{lx:.2}" y="{ly:.2}" transform="rotate(60 {lx:.2} {ly:.2})">{}</text>"#,
            escape(&r.cell)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn svg_path(base: &Path, metric: &str) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    let clean: String = metric.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    base.with_file_name(format!("{stem}_{clean}.svg"))
}

/// Writes the CSV and, when `svg` is given, one bar chart per metric next to
/// it (`<stem>_<metric>.svg`); failed cells are left out of the charts.
/// Returns the SVG paths written.
pub fn emit_outputs(rows: &[ResultRow], csv_path: &Path, svg: Option<&Path>) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no result rows to write".into()));
    }
    for p in std::iter::once(csv_path).chain(svg) {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
    }
    write_csv(std::fs::File::create(csv_path)?, rows)?;
    let mut written = Vec::new();
    if let Some(base) = svg {
        let mut metrics: Vec<&str> = Vec::new();
        for r in rows.iter().filter(|r| !r.metric.starts_with("failed")) {
            if !metrics.contains(&r.metric.as_str()) {
                metrics.push(&r.metric);
            }
        }
        for m in metrics {
            let sel: Vec<&ResultRow> = rows.iter().filter(|r| r.metric == m).collect();
            let path = svg_path(base, m);
            std::fs::write(&path, bar_chart_svg(&format!("{} {m}", sel[0].experiment), &sel))?;
            written.push(path);
        }
    }
    Ok(written)
}
