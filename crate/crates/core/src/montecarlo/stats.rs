//! Order statistics.

/// Empirical quantile with linear interpolation between order statistics
/// (position `(n − 1)·q`). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Notch half-width factor applied to IQR/√n.
pub const NOTCH_FACTOR: f64 = 1.58;
/// Whisker reach in multiples of the IQR.
pub const WHISKER_REACH: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub notch_low: f64,
    pub notch_high: f64,
    /// Values beyond the whiskers, ascending.
    pub outliers: Vec<f64>,
}

/// Notched box-plot summary of a non-empty sample.
pub fn box_stats(values: &[f64]) -> BoxStats {
    let s = sorted(values);
    let q1 = quantile_sorted(&s, 0.25);
    let median = quantile_sorted(&s, 0.5);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - WHISKER_REACH * iqr, q3 + WHISKER_REACH * iqr);
    let mut inside = s.iter().copied().filter(|&x| x >= lo_fence && x <= hi_fence);
    // Whiskers never end inside the box, which small samples can otherwise cause.
    let whisker_low = inside.clone().next().map_or(q1, |x| x.min(q1));
    let whisker_high = inside.next_back().map_or(q3, |x| x.max(q3));
    let half = NOTCH_FACTOR * iqr / (s.len() as f64).sqrt();
    BoxStats {
        median,
        q1,
        q3,
        whisker_low,
        whisker_high,
        notch_low: median - half,
        notch_high: median + half,
        outliers: s.iter().copied().filter(|&x| x < lo_fence || x > hi_fence).collect(),
    }
}
