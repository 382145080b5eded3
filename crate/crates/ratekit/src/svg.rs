//! Small hand-rolled SVG plots: line charts and a heat map with its zero
//! contour. Output depends only on the data, so it is reproducible.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 480.0;
const ML: f64 = 80.0;
const MR: f64 = 150.0;
const MT: f64 = 40.0;
const MB: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Markers only, no connecting line.
    pub scatter: bool,
}

pub struct LinePlot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        ML + (x - self.x.0) / (self.x.1 - self.x.0) * (W - ML - MR)
    }

    fn py(&self, y: f64) -> f64 {
        H - MB - (y - self.y.0) / (self.y.1 - self.y.0) * (H - MT - MB)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, (W - MR + ML) / 2.0, esc(title));
}

fn axes(out: &mut String, fr: &Frame, xlabel: &str, ylabel: &str, log_x: bool) {
    let (x0, x1, y0, y1) = (ML, W - MR, MT, H - MB);
    let _ = writeln!(out, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0);
    for k in 0..=5 {
        let t = k as f64 / 5.0;
        let xv = fr.x.0 + t * (fr.x.1 - fr.x.0);
        let px = fr.px(xv);
        let label = if log_x { tick(10f64.powf(xv)) } else { tick(xv) };
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{y1}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, y1 + 5.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, y1 + 19.0);
        let yv = fr.y.0 + t * (fr.y.1 - fr.y.0);
        let py = fr.py(yv);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, tick(yv));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 15.0, esc(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        esc(ylabel)
    );
}

impl LinePlot {
    pub fn render(&self) -> String {
        let tx = |x: f64| if self.log_x { x.log10() } else { x };
        let fr = Frame {
            x: range(self.series.iter().flat_map(|s| s.points.iter().map(|p| tx(p.0)))),
            y: range(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1))),
        };
        let mut out = String::new();
        header(&mut out, &self.title);
        axes(&mut out, &fr, &self.xlabel, &self.ylabel, self.log_x);
        for (k, s) in self.series.iter().enumerate() {
            let c = COLORS[k % COLORS.len()];
            let pts: Vec<(f64, f64)> = s.points.iter().filter(|p| tx(p.0).is_finite() && p.1.is_finite()).map(|p| (fr.px(tx(p.0)), fr.py(p.1))).collect();
            if s.scatter {
                for (x, y) in &pts {
                    let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{c}"/>"#);
                }
            } else if !pts.is_empty() {
                let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(out, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, d.join(" "));
            }
            let ly = MT + 10.0 + 18.0 * k as f64;
            let _ = writeln!(out, r#"<rect x="{:.2}" y="{:.2}" width="12" height="12" fill="{c}"/>"#, W - MR + 12.0, ly - 10.0);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, W - MR + 30.0, esc(&s.name));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn color(v: f64, scale: f64) -> String {
    if !v.is_finite() {
        return "#eeeeee".into();
    }
    let t = (v / scale).clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// Segments of the zero level set by marching squares; cells touching a
/// non-finite value are skipped.
pub fn zero_contour(axis: &[f64], values: &[Vec<f64>]) -> Vec<((f64, f64), (f64, f64))> {
    let m = axis.len();
    let mut segs = Vec::new();
    for i in 0..m.saturating_sub(1) {
        for j in 0..m.saturating_sub(1) {
            // corners counter-clockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1)
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v: Vec<f64> = c.iter().map(|&(a, b)| values[a][b]).collect();
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let mut cuts = Vec::new();
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if (v[a] < 0.0) != (v[b] < 0.0) {
                    let t = v[a] / (v[a] - v[b]);
                    let p = |k: usize| (axis[c[k].0], axis[c[k].1]);
                    let (pa, pb) = (p(a), p(b));
                    cuts.push((pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1)));
                }
            }
            match cuts.len() {
                2 => segs.push((cuts[0], cuts[1])),
                4 => {
                    segs.push((cuts[0], cuts[1]));
                    segs.push((cuts[2], cuts[3]));
                }
                _ => {}
            }
        }
    }
    segs
}

/// values[i][j] drawn at (x = axis[i], y = axis[j]).
pub fn heat_map(title: &str, xlabel: &str, ylabel: &str, axis: &[f64], values: &[Vec<f64>], marks: &[(f64, f64)]) -> String {
    let fr = Frame { x: (axis[0], axis[axis.len() - 1]), y: (axis[0], axis[axis.len() - 1]) };
    let scale = values.iter().flatten().filter(|v| v.is_finite()).fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut out = String::new();
    header(&mut out, title);
    let m = axis.len();
    let half = |k: usize| {
        let lo = if k == 0 { axis[0] } else { 0.5 * (axis[k - 1] + axis[k]) };
        let hi = if k + 1 == m { axis[m - 1] } else { 0.5 * (axis[k] + axis[k + 1]) };
        (lo, hi)
    };
    for i in 0..m {
        let (x0, x1) = half(i);
        for j in 0..m {
            let (y0, y1) = half(j);
            let (px0, px1, py0, py1) = (fr.px(x0), fr.px(x1), fr.py(y1), fr.py(y0));
            let _ = writeln!(
                out,
                r#"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                px1 - px0,
                py1 - py0,
                color(values[i][j], scale)
            );
        }
    }
    for (a, b) in zero_contour(axis, values) {
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/>"#, fr.px(a.0), fr.py(a.1), fr.px(b.0), fr.py(b.1));
    }
    for (x, y) in marks {
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="none" stroke="black"/>"#, fr.px(*x), fr.py(*y));
    }
    axes(&mut out, &fr, xlabel, ylabel, false);
    let lx = W - MR + 20.0;
    for k in 0..=10 {
        let v = scale * (1.0 - 0.2 * k as f64);
        let _ = writeln!(out, r#"<rect x="{lx}" y="{:.2}" width="16" height="20" fill="{}"/>"#, MT + 20.0 * k as f64, color(v, scale));
        if k % 5 == 0 {
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 22.0, MT + 20.0 * k as f64 + 14.0, tick(v));
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contour_of_a_plane() {
        let axis: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let values: Vec<Vec<f64>> = axis.iter().map(|x| axis.iter().map(|y| x - y - 0.5).collect()).collect();
        let segs = zero_contour(&axis, &values);
        assert!(!segs.is_empty());
        for (a, b) in segs {
            assert!((a.0 - a.1 - 0.5).abs() < 1e-12 && (b.0 - b.1 - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn plots_are_well_formed() {
        let p = LinePlot {
            title: "t <x>".into(),
            xlabel: "x".into(),
            ylabel: "y".into(),
            log_x: true,
            series: vec![Series { name: "a".into(), points: vec![(0.1, 1.0), (1.0, 2.0), (10.0, f64::NAN)], scatter: false }],
        };
        let s = p.render();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n") && s.contains("&lt;x&gt;"));
    }
}
