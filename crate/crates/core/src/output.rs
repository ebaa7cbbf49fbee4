//! CSV and SVG emission. The CSV is the authoritative artifact: a schema
//! comment, a fixed header and one line per sweep point, with numbers in
//! shortest round-trip form so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::sweep::{DynamicsTable, SweepRow};

/// Schema tag written in the first comment line of every sweep CSV.
pub const CSV_SCHEMA: &str = "magnongate-sweep-csv v1";

pub const CSV_HEADER: &str =
    "omega_m_ratio,omega_m_Hz,e_r,n_th,kappa_Hz,coupling_Hz,T_gate_s,avg_fidelity,leakage,wall_time_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        String::new()
    }
}

/// Sweep rows as CSV. Failed points keep their row with empty cells for
/// the missing values and are explained in trailing comment lines. Wall
/// times are written only when `cfg.output.wall_time` is set.
pub fn sweep_csv(rows: &[SweepRow], cfg: &RunConfig) -> String {
    let mut out = String::new();
    let [a, b, c] = cfg.dims;
    let mode = if cfg.direct { "direct" } else { "derived" };
    let _ = writeln!(out, "# {CSV_SCHEMA} gate={} mode={mode} dims={a}x{b}x{c} seed={}", cfg.gate, cfg.seed);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let wall = if cfg.output.wall_time { num(r.wall_time_s) } else { String::new() };
        let cells = [
            r.omega_m_ratio.to_string(),
            num(r.omega_m_hz),
            num(r.e_r),
            num(r.n_th),
            num(r.kappa_hz),
            num(r.coupling_hz),
            num(r.t_gate_s),
            num(r.avg_fidelity),
            num(r.leakage),
            wall,
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    for r in rows {
        if let Some(e) = &r.error {
            let msg = e.message.replace(['\n', '\r'], " ");
            let _ = writeln!(out, "# error omega_m_ratio={} kind={}: {msg}", r.omega_m_ratio, e.kind);
        }
    }
    out
}

/// Observable trace as CSV: `t_s` followed by one column per observable.
pub fn dynamics_csv(table: &DynamicsTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# magnongate-dynamics-csv v1 gate={} input={} omega_m_ratio={} T_gate_s={:e}",
        table.kind, table.input, table.ratio, table.t_gate_s
    );
    out.push_str("t_s");
    for c in &table.columns {
        out.push(',');
        out.push_str(c);
    }
    out.push_str(",trace\n");
    for row in &table.rows {
        out.push_str(&num(row.t));
        for v in &row.values {
            out.push(',');
            out.push_str(&num(*v));
        }
        out.push(',');
        out.push_str(&num(row.trace));
        out.push('\n');
    }
    out
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 80.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

/// Linear or logarithmic map from data to pixels.
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
    p0: f64,
    p1: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, p0: f64, p1: f64, pad: f64) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let log = lo > 0.0 && hi / lo >= 10.0;
        if log {
            return Axis { lo: lo.ln(), hi: hi.ln(), log, p0, p1 };
        }
        let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) * 1e-3 };
        Axis { lo: lo - pad * span, hi: hi + pad * span, log, p0, p1 }
    }

    fn px(&self, v: f64) -> f64 {
        let v = if self.log { v.ln() } else { v };
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..TICKS)
            .map(|i| {
                let t = self.lo + (self.hi - self.lo) * i as f64 / (TICKS - 1) as f64;
                if self.log {
                    t.exp()
                } else {
                    t
                }
            })
            .collect()
    }
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}")
    }
}

/// Polyline segments, broken wherever a value is missing.
fn segments(points: &[(f64, f64)], x: &Axis, y: &Axis) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for &(a, b) in points {
        if a.is_finite() && b.is_finite() {
            let _ = write!(cur, "{:.2},{:.2} ", x.px(a), y.px(b));
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Fidelity (left axis, %) and gate time (right axis, μs) against ω_m/ω_q.
pub fn sweep_svg(rows: &[SweepRow], title: &str) -> String {
    let fid: Vec<(f64, f64)> = rows.iter().map(|r| (r.omega_m_ratio, 100.0 * r.avg_fidelity)).collect();
    let time: Vec<(f64, f64)> = rows.iter().map(|r| (r.omega_m_ratio, 1e6 * r.t_gate_s)).collect();
    let finite = |v: &[(f64, f64)]| v.iter().map(|p| p.1).filter(|y| y.is_finite()).collect::<Vec<_>>();
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let x = Axis::new(rows.iter().map(|r| r.omega_m_ratio), x0, x1, 0.0);
    let yl = Axis::new(finite(&fid).into_iter(), y0, y1, 0.05);
    let yr = Axis::new(finite(&time).into_iter(), y0, y1, 0.05);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0} L{x1},{y1}" fill="none" stroke="black"/>"#
    );
    for t in x.ticks() {
        let px = x.px(t);
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + 20.0, label(t));
    }
    for (axis, xp, anchor, dir) in [(&yl, x0, "end", -1.0), (&yr, x1, "start", 1.0)] {
        for t in axis.ticks() {
            let py = axis.px(t);
            let _ = writeln!(s, r#"<line x1="{xp}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="black"/>"#, xp + 5.0 * dir);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.2}" text-anchor="{anchor}">{}</text>"#,
                xp + 8.0 * dir,
                py + 4.0,
                label(t)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">magnon / qubit frequency ratio</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );
    let mid = (y0 + y1) / 2.0;
    let _ = writeln!(
        s,
        r#"<text x="20" y="{mid}" text-anchor="middle" fill="steelblue" transform="rotate(-90 20 {mid})">average gate fidelity (%)</text>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{0}" y="{mid}" text-anchor="middle" fill="firebrick" transform="rotate(90 {0} {mid})">gate time (us)</text>"#,
        WIDTH - 20.0
    );
    for (pts, axis, colour) in [(&fid, &yl, "steelblue"), (&time, &yr, "firebrick")] {
        for seg in segments(pts, &x, axis) {
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#, seg.trim_end());
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Writes sweep rows to `path` in `format`.
pub fn emit(rows: &[SweepRow], cfg: &RunConfig, format: Format, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Precondition("nothing to emit: no sweep rows".into()));
    }
    let body = match format {
        Format::Csv => sweep_csv(rows, cfg),
        Format::Svg => sweep_svg(rows, &format!("{} sweep", cfg.gate)),
    };
    std::fs::write(path, body)?;
    Ok(())
}
