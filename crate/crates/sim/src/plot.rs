//! Static SVG line plots of logged series.

use std::fmt::Write;

use ibvs_core::sim::TrajectoryLog;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
/// Upper bound on points per polyline.
const MAX_POINTS: usize = 1500;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(label: &str, values: Vec<f64>) -> Self {
        Self { label: label.to_string(), values }
    }
}

/// Round step of about a fifth of `span`.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(x: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{x:.decimals$}")
}

/// Line plot of `series` against `t`, with dashed markers at `events`.
/// Non-finite samples break the line.
pub fn line_plot(title: &str, y_label: &str, t: &[f64], series: &[Series], events: &[(String, f64)]) -> String {
    let finite = series.iter().flat_map(|s| s.values.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        lo = -1.0;
        hi = 1.0;
    }
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (y0, y1) = (lo - pad, hi + pad);
    let (t0, t1) = (t.first().copied().unwrap_or(0.0), t.last().copied().unwrap_or(1.0).max(1e-9));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |tv: f64| LEFT + (tv - t0) / (t1 - t0).max(1e-12) * pw;
    let y = |v: f64| TOP + (y1 - v) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{title}</text>"#, LEFT + pw / 2.0);
    let _ = writeln!(svg, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);

    let ys = tick_step(y1 - y0);
    let mut v = (y0 / ys).ceil() * ys;
    while v <= y1 + 1e-12 {
        let yy = y(v);
        let _ = writeln!(svg, r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/>"##, LEFT + pw);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, yy + 4.0, fmt_tick(v, ys));
        v += ys;
    }
    let ts = tick_step(t1 - t0);
    let mut tv = (t0 / ts).ceil() * ts;
    while tv <= t1 + 1e-12 {
        let xx = x(tv);
        let _ = writeln!(svg, r##"<line x1="{xx:.2}" y1="{TOP}" x2="{xx:.2}" y2="{:.2}" stroke="#dddddd"/>"##, TOP + ph);
        let _ = writeln!(svg, r#"<text x="{xx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, fmt_tick(tv, ts));
        tv += ts;
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t [s]</text>"#, LEFT + pw / 2.0, HEIGHT - 12.0);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{y_label}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for (name, te) in events {
        let xx = x(*te);
        let _ = writeln!(svg, r##"<line x1="{xx:.2}" y1="{TOP}" x2="{xx:.2}" y2="{:.2}" stroke="#888888" stroke-dasharray="4 3"/>"##, TOP + ph);
        let _ = writeln!(svg, r##"<text x="{:.2}" y="{:.2}" fill="#555555">{name}</text>"##, xx + 3.0, TOP + 12.0);
    }

    let stride = (t.len() / MAX_POINTS).max(1);
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut runs: Vec<String> = Vec::new();
        let mut current = String::new();
        let n = t.len().min(s.values.len());
        for i in (0..n).step_by(stride).chain(n.checked_sub(1)) {
            let val = s.values[i];
            if val.is_finite() {
                let _ = write!(current, "{:.2},{:.2} ", x(t[i]), y(val));
            } else if !current.is_empty() {
                runs.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            runs.push(current);
        }
        for pts in runs {
            let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.trim_end());
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(svg, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, s.label);
    }
    svg.push_str("</svg>\n");
    svg
}

fn events(log: &TrajectoryLog) -> Vec<(String, f64)> {
    let e = &log.events;
    [("T2", e.t2), ("T3", e.t3), ("T4", e.t4)]
        .into_iter()
        .filter_map(|(n, t)| t.map(|t| (n.to_string(), t)))
        .collect()
}

/// The standard figure set: `(file stem, svg)`.
pub fn standard_plots(log: &TrajectoryLog) -> Vec<(&'static str, String)> {
    let t: Vec<f64> = log.records.iter().map(|r| r.t).collect();
    let ev = events(log);
    let col = |f: &dyn Fn(&ibvs_core::sim::TrajectoryRecord) -> f64| log.records.iter().map(f).collect::<Vec<_>>();
    let xyz = |prefix: &str, f: &dyn Fn(&ibvs_core::sim::TrajectoryRecord) -> [f64; 3]| {
        ["x", "y", "z"]
            .iter()
            .enumerate()
            .map(|(k, axis)| Series::new(&format!("{prefix}_{axis}"), col(&|r| f(r)[k])))
            .collect::<Vec<_>>()
    };
    let gated = |visible: fn(&ibvs_core::sim::TrajectoryRecord) -> bool, f: fn(&ibvs_core::sim::TrajectoryRecord) -> [f64; 3]| {
        move |r: &ibvs_core::sim::TrajectoryRecord| if visible(r) { f(r) } else { [f64::NAN; 3] }
    };
    let mut features = xyz("qbar_w", &gated(|r| r.window_visible, |r| r.qbar_w.into()));
    features.extend(xyz("q_t", &gated(|r| r.pad_visible, |r| r.q_t.into())));
    let mut flow = xyz("phi_w", &gated(|r| r.window_visible, |r| r.phi_w.into()));
    flow.extend(xyz("phi_t", &gated(|r| r.pad_visible, |r| r.phi_t.into())));
    let mut mode = vec![Series::new("mode", col(&|r| f64::from(r.mode.number())))];
    mode.push(Series::new("F_T / 10", col(&|r| r.thrust / 10.0)));
    vec![
        ("position", line_plot("Position", "m", &t, &xyz("xi", &|r| r.position.into()), &ev)),
        ("velocity", line_plot("Velocity", "m/s", &t, &xyz("v", &|r| r.velocity.into()), &ev)),
        ("euler", line_plot("Euler angles (Z-Y-X)", "rad", &t, &xyz("rpy", &|r| r.euler), &ev)),
        ("force", line_plot("Commanded force", "N", &t, &xyz("F", &|r| r.force.into()), &ev)),
        ("features", line_plot("Image features", "", &t, &features, &ev)),
        ("flow", line_plot("Translational optical flow", "1/s", &t, &flow, &ev)),
        ("mode", line_plot("Mode and thrust", "", &t, &mode, &ev)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(tick_step(10.0), 2.0);
        assert_eq!(tick_step(0.37), 0.05);
        assert_eq!(fmt_tick(0.15, 0.05), "0.15");
        assert_eq!(fmt_tick(4.0, 2.0), "4");
    }

    #[test]
    fn nan_breaks_the_line() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        let s = Series::new("a", vec![0.0, 1.0, f64::NAN, 1.0, 0.0]);
        let svg = line_plot("x", "y", &t, &[s], &[]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn output_is_deterministic() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let make = || vec![Series::new("s", t.iter().map(|x| x.sin()).collect())];
        assert_eq!(line_plot("p", "u", &t, &make(), &[]), line_plot("p", "u", &t, &make(), &[]));
    }
}
