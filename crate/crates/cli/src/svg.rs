//! Minimal standalone SVG charts. Output depends only on the input rows.

use std::collections::BTreeMap;
use std::fmt::Write;

use sepaird::montecarlo::{BoxRow, QuantileRow, ScenarioKey};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const LEGEND_LINE: f64 = 16.0;

const PALETTE: [&str; 10] =
    ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

fn colour(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Linear map from a data range onto a pixel range.
#[derive(Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, from: f64, to: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, from, to }
    }

    fn at(&self, x: f64) -> f64 {
        self.from + (x - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }

    fn ticks(&self, n: usize) -> Vec<f64> {
        (0..=n).map(|k| self.lo + (self.hi - self.lo) * k as f64 / n as f64).collect()
    }
}

fn tick_label(x: f64) -> String {
    let r = (x * 1e4).round() / 1e4;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn header(out: &mut String, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{height}" fill="white"/>"#);
}

fn y_axis(out: &mut String, y: &Scale, label: &str) {
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#, HEIGHT - BOTTOM);
    for v in y.ticks(5) {
        let py = y.at(v);
        let _ = writeln!(out, r#"<line x1="{}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ =
            writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, py + 4.0, tick_label(v));
    }
    let cy = (TOP + HEIGHT - BOTTOM) / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="18" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 18 {cy:.2})">{}</text>"#,
        escape(label)
    );
}

fn legend(out: &mut String, entries: &[(String, &str)]) {
    for (i, (text, fill)) in entries.iter().enumerate() {
        let y = HEIGHT + 10.0 + i as f64 * LEGEND_LINE;
        let _ = writeln!(out, r#"<rect x="{LEFT}" y="{y:.2}" width="10" height="10" fill="{fill}"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}">{}</text>"#, LEFT + 16.0, y + 9.0, escape(text));
    }
}

fn value_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// One path per (scenario, quantile); the median is drawn solid and wider.
pub fn quantile_lines(rows: &[QuantileRow], metric: &str) -> String {
    let mut series: BTreeMap<(ScenarioKey, u64), Vec<(usize, f64)>> = BTreeMap::new();
    for r in rows {
        series.entry((r.scenario, r.quantile.to_bits())).or_default().push((r.step, r.value));
    }
    let scenarios: Vec<ScenarioKey> = {
        let mut s: Vec<ScenarioKey> = series.keys().map(|k| k.0).collect();
        s.dedup();
        s
    };
    let (s_lo, s_hi) = value_range(rows.iter().map(|r| r.step as f64));
    let (v_lo, v_hi) = value_range(rows.iter().map(|r| r.value));
    let x = Scale::new(s_lo, s_hi, LEFT, WIDTH - RIGHT);
    let y = Scale::new(v_lo, v_hi, HEIGHT - BOTTOM, TOP);

    let total_height = HEIGHT + 20.0 + scenarios.len() as f64 * LEGEND_LINE;
    let mut out = String::new();
    header(&mut out, total_height);
    y_axis(&mut out, &y, metric);
    let base = HEIGHT - BOTTOM;
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#, WIDTH - RIGHT);
    for v in x.ticks(5) {
        let px = x.at(v);
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{base}" x2="{px:.2}" y2="{}" stroke="black"/>"#, base + 5.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, base + 18.0, v.round());
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">step</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        base + 40.0
    );

    for ((scenario, q_bits), mut points) in series {
        points.sort_by_key(|p| p.0);
        let q = f64::from_bits(q_bits);
        let idx = scenarios.binary_search(&scenario).expect("scenario listed");
        let dist = (q - 0.5).abs();
        let (width, opacity) = if dist < 1e-12 { (2.0, 1.0) } else { (1.0, (0.9 - dist).max(0.3)) };
        let mut d = String::new();
        for (k, (step, value)) in points.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, x.at(*step as f64), y.at(*value));
        }
        let _ = writeln!(
            out,
            r#"<path d="{d}" fill="none" stroke="{}" stroke-width="{width}" stroke-opacity="{opacity:.2}" data-scenario="{idx}" data-quantile="{q}"/>"#,
            colour(idx)
        );
    }
    let entries: Vec<(String, &str)> = scenarios.iter().enumerate().map(|(i, s)| (s.label(), colour(i))).collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

/// Notched box per scenario, in scenario order.
pub fn notched_boxes(rows: &[BoxRow], metric: &str, step: Option<usize>) -> String {
    let mut rows: Vec<&BoxRow> = rows.iter().collect();
    rows.sort_by_key(|r| r.scenario);
    let (v_lo, v_hi) = value_range(rows.iter().flat_map(|r| {
        let s = &r.stats;
        [s.whisker_low, s.whisker_high, s.notch_low, s.notch_high].into_iter().chain(s.outliers.iter().copied())
    }));
    let y = Scale::new(v_lo, v_hi, HEIGHT - BOTTOM, TOP);
    let slot = (WIDTH - LEFT - RIGHT) / rows.len() as f64;
    let half = (slot * 0.3).min(30.0);

    let total_height = HEIGHT + 20.0 + rows.len() as f64 * LEGEND_LINE;
    let mut out = String::new();
    header(&mut out, total_height);
    let label = match step {
        Some(s) => format!("{metric} at step {s}"),
        None => metric.to_string(),
    };
    y_axis(&mut out, &y, &label);
    let base = HEIGHT - BOTTOM;
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#, WIDTH - RIGHT);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">scenario</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        base + 40.0
    );

    for (i, r) in rows.iter().enumerate() {
        let s = &r.stats;
        let cx = LEFT + slot * (i as f64 + 0.5);
        let (l, rr, il, ir) = (cx - half, cx + half, cx - half * 0.5, cx + half * 0.5);
        let (q1, q3, med) = (y.at(s.q1), y.at(s.q3), y.at(s.median));
        // Notches are drawn clamped to the box even when they extend past it.
        let nl = y.at(s.notch_low.max(s.q1));
        let nh = y.at(s.notch_high.min(s.q3));
        let fill = colour(i);
        let _ = writeln!(
            out,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{q1:.2}" stroke="black"/>"#,
            y.at(s.whisker_low)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{cx:.2}" y1="{q3:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            y.at(s.whisker_high)
        );
        for w in [s.whisker_low, s.whisker_high] {
            let py = y.at(w);
            let _ = writeln!(out, r#"<line x1="{il:.2}" y1="{py:.2}" x2="{ir:.2}" y2="{py:.2}" stroke="black"/>"#);
        }
        let _ = writeln!(
            out,
            r#"<polygon points="{l:.2},{q1:.2} {l:.2},{nl:.2} {il:.2},{med:.2} {l:.2},{nh:.2} {l:.2},{q3:.2} {rr:.2},{q3:.2} {rr:.2},{nh:.2} {ir:.2},{med:.2} {rr:.2},{nl:.2} {rr:.2},{q1:.2}" fill="{fill}" fill-opacity="0.5" stroke="black" data-scenario="{i}"/>"#
        );
        let _ = writeln!(
            out,
            r#"<line x1="{il:.2}" y1="{med:.2}" x2="{ir:.2}" y2="{med:.2}" stroke="black" stroke-width="2"/>"#
        );
        for o in &s.outliers {
            let _ = writeln!(out, r#"<circle cx="{cx:.2}" cy="{:.2}" r="2.5" fill="none" stroke="black"/>"#, y.at(*o));
        }
        let _ = writeln!(out, r#"<text x="{cx:.2}" y="{}" text-anchor="middle">{i}</text>"#, base + 18.0);
    }
    let entries: Vec<(String, &str)> =
        rows.iter().enumerate().map(|(i, r)| (format!("{i}: {}", r.scenario.label()), colour(i))).collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use sepaird::montecarlo::box_stats;
    use sepaird::SimParams;

    fn key(phi: f64) -> ScenarioKey {
        ScenarioKey { mutation_prob: phi, ..ScenarioKey::of(&SimParams::default()) }
    }

    fn bands() -> Vec<QuantileRow> {
        let mut rows = Vec::new();
        for phi in [0.0, 0.02] {
            for step in 1..=4 {
                for q in [0.05, 0.5, 0.95] {
                    rows.push(QuantileRow { scenario: key(phi), step, quantile: q, value: step as f64 * q + phi });
                }
            }
        }
        rows
    }

    #[test]
    fn one_path_per_scenario_quantile() {
        let doc = quantile_lines(&bands(), "mortality");
        assert_eq!(doc.matches("<path").count(), 6);
        assert!(doc.contains(">mortality</text>"));
        assert!(doc.contains(">step</text>"));
        assert!(doc.ends_with("</svg>\n"));
    }

    #[test]
    fn output_ignores_row_order() {
        let mut rev = bands();
        rev.reverse();
        assert_eq!(quantile_lines(&bands(), "m"), quantile_lines(&rev, "m"));
    }

    #[test]
    fn boxes_with_outliers_and_flat_data() {
        let rows = vec![
            BoxRow { scenario: key(0.0), stats: box_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]) },
            BoxRow { scenario: key(0.02), stats: box_stats(&[5.0; 4]) },
        ];
        let doc = notched_boxes(&rows, "mean_r0", Some(500));
        assert_eq!(doc.matches("<polygon").count(), 2);
        assert_eq!(doc.matches("<circle").count(), 1);
        assert!(doc.contains("mean_r0 at step 500"));
        assert!(!doc.contains("NaN"));
    }

    #[test]
    fn labels_are_escaped() {
        let doc = quantile_lines(&bands(), "a<b & c");
        assert!(doc.contains("a&lt;b &amp; c"));
    }
}
