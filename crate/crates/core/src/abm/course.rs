//! Individual disease courses.

use crate::rng::RngStream;
use crate::variant::VariantProps;

/// Day thresholds of one agent's infection, counted from infection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CourseThresholds {
    /// First day the agent is infectious.
    pub latent_end: u32,
    /// Day symptoms may appear.
    pub symptom_day: u32,
    /// Day the infection resolves.
    pub end_day: u32,
}

/// Truncates at zero, then rounds to the nearest integer with halves away
/// from zero. All day rounding goes through here.
pub fn round_day(x: f64) -> u32 {
    if x.is_nan() {
        return 0;
    }
    let r = x.max(0.0).round();
    if r >= u32::MAX as f64 {
        u32::MAX
    } else {
        r as u32
    }
}

/// Builds thresholds from raw `(latent, incubation, duration)` draws.
pub fn course_from_raw(raw: [f64; 3]) -> CourseThresholds {
    CourseThresholds { latent_end: round_day(raw[0]), symptom_day: round_day(raw[1]), end_day: round_day(raw[2]) }
}

/// Three independent normal draws centred on the variant's latent period,
/// incubation period and duration, each with standard deviation
/// `sd_frac` times its mean.
pub fn draw_course(v: &VariantProps, sd_frac: f64, rng: &mut RngStream) -> CourseThresholds {
    let raw = [v.latent_end, v.incubation_end, v.duration].map(|m| rng.normal(m, m * sd_frac));
    course_from_raw(raw)
}
