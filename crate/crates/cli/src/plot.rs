//! Static SVG line charts of force curves.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Series<'a> {
    pub label: String,
    pub t: &'a [f64],
    pub y: &'a [f64],
}

/// A tick step of 1, 2 or 5 times a power of ten giving about `n` ticks.
fn tick_step(span: f64, n: f64) -> f64 {
    let raw = span / n;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|k| k * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn label(v: f64, step: f64) -> String {
    let digits = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.digits$}")
}

/// Force against time, with a dashed reference line at `reference`.
pub fn force_chart(title: &str, series: &[Series], reference: Option<(&str, f64)>) -> String {
    let finite = |v: &&f64| v.is_finite();
    let t_min = series
        .iter()
        .flat_map(|s| s.t.iter().filter(finite))
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let t_max = series
        .iter()
        .flat_map(|s| s.t.iter().filter(finite))
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut y_max = series
        .iter()
        .flat_map(|s| s.y.iter().filter(finite))
        .fold(0.0f64, |a, &b| a.max(b));
    if let Some((_, r)) = reference {
        y_max = y_max.max(r);
    }
    let (t_min, t_max) = if t_min < t_max { (t_min, t_max) } else { (0.0, 1.0) };
    let y_max = if y_max > 0.0 { 1.1 * y_max } else { 1.0 };

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |t: f64| LEFT + (t - t_min) / (t_max - t_min) * pw;
    let y = |f: f64| TOP + ph - f / y_max * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{LEFT}" y="22" font-size="14">{}</text>"#, escape(title));

    let ts = tick_step(t_max - t_min, 8.0);
    let mut tick = (t_min / ts).ceil() * ts;
    while tick <= t_max + 1e-9 * ts {
        let px = x(tick);
        let _ = writeln!(
            s,
            r##"<line x1="{px:.1}" y1="{TOP}" x2="{px:.1}" y2="{:.1}" stroke="#eee"/>"##,
            TOP + ph
        );
        let _ = writeln!(
            s,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + ph + 16.0,
            label(tick, ts)
        );
        tick += ts;
    }
    let fs = tick_step(y_max, 6.0);
    let mut tick = 0.0;
    while tick <= y_max {
        let py = y(tick);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#eee"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py + 4.0,
            label(tick, fs)
        );
        tick += fs;
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">time (s)</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">force (N)</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    let mut legend_y = TOP + 12.0;
    let lx = LEFT + pw + 12.0;
    if let Some((name, r)) = reference {
        let py = y(r);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#555" stroke-dasharray="6 4"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r##"<line x1="{lx:.1}" y1="{legend_y:.1}" x2="{:.1}" y2="{legend_y:.1}" stroke="#555" stroke-dasharray="6 4"/>"##,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 26.0,
            legend_y + 4.0,
            escape(name)
        );
        legend_y += 18.0;
    }
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut pts = String::new();
        for (&t, &f) in ser.t.iter().zip(ser.y) {
            if t.is_finite() && f.is_finite() {
                let _ = write!(pts, "{:.1},{:.1} ", x(t), y(f));
            }
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.trim_end()
        );
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{legend_y:.1}" x2="{:.1}" y2="{legend_y:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 26.0,
            legend_y + 4.0,
            escape(&ser.label)
        );
        legend_y += 18.0;
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_are_round() {
        assert_eq!(tick_step(3.0, 8.0), 0.5);
        assert_eq!(tick_step(1000.0, 6.0), 200.0);
        assert_eq!(tick_step(0.7, 8.0), 0.1);
    }

    #[test]
    fn chart_has_one_polyline_per_series() {
        let t = [0.0, 1.0, 2.0];
        let a = [1.0, 3.0, 2.0];
        let svg = force_chart(
            "a < b",
            &[
                Series {
                    label: "one".into(),
                    t: &t,
                    y: &a,
                },
                Series {
                    label: "two".into(),
                    t: &t,
                    y: &a,
                },
            ],
            Some(("BW", 2.0)),
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
