//! Row buffers written as CSV or as a single-panel SVG line chart.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    /// A value that does not exist for this row, printed as `invalid`.
    Invalid,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "invalid".into(),
            Cell::Num(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(x) => format!("{x}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Invalid => "invalid".into(),
        }
    }

    fn value(&self) -> Option<f64> {
        match self {
            Cell::Num(x) if x.is_finite() => Some(*x),
            Cell::Int(n) => Some(*n as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

/// Which columns a chart draws: `y` against `x`, one line per distinct `series` value.
#[derive(Clone, Debug)]
pub struct Plot {
    pub x: &'static str,
    pub y: &'static str,
    pub series: Option<&'static str>,
}

#[derive(Clone, Debug)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub plot: Plot,
}

impl Table {
    pub fn new(header: Vec<&'static str>, plot: Plot) -> Self {
        Self { header, rows: Vec::new(), plot }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const M: f64 = 50.0;
        const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

        let (Some(xi), Some(yi)) = (self.column(self.plot.x), self.column(self.plot.y)) else {
            return String::new();
        };
        let si = self.plot.series.and_then(|s| self.column(s));
        let mut lines: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        let mut order = Vec::new();
        for row in &self.rows {
            let key = si.map_or_else(String::new, |i| row[i].render());
            if !lines.contains_key(&key) {
                order.push(key.clone());
            }
            let pts = lines.entry(key).or_default();
            if let (Some(x), Some(y)) = (row[xi].value(), row[yi].value()) {
                pts.push((x, y));
            }
        }
        let all: Vec<(f64, f64)> = lines.values().flatten().copied().collect();
        let bounds = |f: fn(&(f64, f64)) -> f64| {
            let lo = all.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = all.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = bounds(|p| p.0);
        let (y0, y1) = bounds(|p| p.1);
        let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
        let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<path d="M{M} {top} V{base} H{right}" fill="none" stroke="black"/>"#,
            top = M,
            base = H - M,
            right = W - M
        );
        let _ = writeln!(s, r#"<text x="{M}" y="{}" >{x0:.4}</text>"#, H - M + 15.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{x1:.4}</text>"#, W - M, H - M + 15.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, self.plot.x);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y0:.4}</text>"#, M - 4.0, H - M);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.4}</text>"#, M - 4.0, M + 4.0);
        let _ = writeln!(s, r#"<text x="{M}" y="{}">{}</text>"#, M - 16.0, self.plot.y);
        for (i, key) in order.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts = &lines[key];
            if !pts.is_empty() {
                let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, path.join(" "));
            }
            if let Some(name) = self.plot.series.filter(|_| !key.is_empty()) {
                let y = M + 14.0 * i as f64;
                let _ =
                    writeln!(s, r#"<text x="{}" y="{y}" fill="{color}" text-anchor="end">{name}={key}</text>"#, W - M);
            }
        }
        s.push_str("</svg>\n");
        s
    }
}
