use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;

use crate::run::{usage, write_file, CmdResult};

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Reward CSVs (iteration,mean_reward) to overlay
    #[arg(required = true)]
    pub csv: Vec<PathBuf>,
    /// Moving-average window
    #[arg(long, default_value_t = 20)]
    pub window: usize,
    /// Also write an SVG chart here
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long, default_value_t = 72)]
    pub width: usize,
    #[arg(long, default_value_t = 16)]
    pub height: usize,
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub fn read_curve(path: &Path) -> anyhow::Result<Series> {
    let mut reader = csv::Reader::from_path(path).with_context(|| path.display().to_string())?;
    let headers = reader.headers().with_context(|| path.display().to_string())?.clone();
    if headers.len() != 2 || &headers[0] != "iteration" || &headers[1] != "mean_reward" {
        bail!("{}: expected header iteration,mean_reward", path.display());
    }
    let mut points = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        let parse = |k: usize| {
            row[k]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .with_context(|| format!("{}: row {}: bad number {:?}", path.display(), i + 2, &row[k]))
        };
        points.push((parse(0)?, parse(1)?));
    }
    if points.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    let label = path
        .parent()
        .and_then(|p| p.file_name())
        .filter(|_| path.file_stem().is_some_and(|s| s == "rewards"))
        .or(path.file_stem())
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok(Series { label, points })
}

pub fn smooth(points: &[(f64, f64)], window: usize) -> Vec<(f64, f64)> {
    let w = window.max(1);
    let mut sum = 0.0;
    points
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            sum += y;
            if i >= w {
                sum -= points[i - w].1;
            }
            (x, sum / (i + 1).min(w) as f64)
        })
        .collect()
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    (x0, x1, y0, y1)
}

const MARKS: [char; 6] = ['*', '+', 'o', 'x', '#', '@'];

pub fn ascii_chart(series: &[Series], width: usize, height: usize) -> String {
    let (x0, x1, y0, y1) = bounds(series);
    let (w, h) = (width.max(8), height.max(4));
    let mut grid = vec![vec![' '; w]; h];
    for (k, s) in series.iter().enumerate() {
        for &(x, y) in &s.points {
            let c = (((x - x0) / (x1 - x0)) * (w - 1) as f64).round() as usize;
            let r = (((y1 - y) / (y1 - y0)) * (h - 1) as f64).round() as usize;
            grid[r][c] = MARKS[k % MARKS.len()];
        }
    }
    let mut out = String::new();
    for (r, row) in grid.iter().enumerate() {
        let label = match r {
            0 => format!("{y1:>8.2}"),
            _ if r == h - 1 => format!("{y0:>8.2}"),
            _ => " ".repeat(8),
        };
        writeln!(out, "{label} |{}", row.iter().collect::<String>().trim_end()).unwrap();
    }
    writeln!(out, "{} +{}", " ".repeat(8), "-".repeat(w)).unwrap();
    writeln!(out, "{}  {:<w2$}{:>8}", " ".repeat(8), x0, x1, w2 = w - 8).unwrap();
    for (k, s) in series.iter().enumerate() {
        writeln!(out, "  {} {}", MARKS[k % MARKS.len()], s.label).unwrap();
    }
    out
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn svg_chart(series: &[Series]) -> String {
    let (x0, x1, y0, y1) = bounds(series);
    let (w, h, m) = (720.0, 400.0, 50.0);
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(out, r##"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="#888"/>"##, w - 2.0 * m, h - 2.0 * m).unwrap();
    if y0 < 0.0 && y1 > 0.0 {
        writeln!(out, r##"<line x1="{m}" x2="{}" y1="{1:.1}" y2="{1:.1}" stroke="#ccc"/>"##, w - m, py(0.0)).unwrap();
    }
    writeln!(out, r#"<text x="{m}" y="{}" >{x0}</text>"#, h - m + 16.0).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{x1}</text>"#, w - m, h - m + 16.0).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{y1:.2}</text>"#, m - 4.0, m + 4.0).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{y0:.2}</text>"#, m - 4.0, h - m).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">iteration</text>"#, w / 2.0, h - 12.0).unwrap();
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" ")).unwrap();
        let ly = m + 16.0 * (k as f64 + 1.0);
        writeln!(out, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, m + 8.0, escape(&s.label)).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn run(args: PlotArgs) -> CmdResult {
    if args.window == 0 {
        return Err(usage("--window must be at least 1"));
    }
    let mut series = Vec::new();
    for path in &args.csv {
        let mut s = read_curve(path)?;
        s.points = smooth(&s.points, args.window);
        series.push(s);
    }
    print!("{}", ascii_chart(&series, args.width, args.height));
    if let Some(path) = &args.svg {
        write_file(path, &svg_chart(&series))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average() {
        let p: Vec<(f64, f64)> = [1.0, 3.0, 5.0, 7.0].iter().enumerate().map(|(i, &y)| (i as f64, y)).collect();
        let s: Vec<f64> = smooth(&p, 2).into_iter().map(|q| q.1).collect();
        assert_eq!(s, [1.0, 2.0, 4.0, 6.0]);
        assert_eq!(smooth(&p, 1), p);
    }

    #[test]
    fn chart_marks_each_series() {
        let a = Series { label: "a".into(), points: vec![(0.0, 0.0), (1.0, 1.0)] };
        let b = Series { label: "b".into(), points: vec![(0.0, 1.0), (1.0, 0.0)] };
        let text = ascii_chart(&[a, b], 20, 5);
        assert!(text.contains('*') && text.contains('+'));
        assert!(text.contains("  * a\n  + b\n"));
        let flat = Series { label: "f".into(), points: vec![(0.0, 2.0)] };
        assert!(svg_chart(&[flat]).contains("<polyline"));
    }
}
