//! Scalar closed-form proximal pieces.

/// `sign(t)·max(|t| − λ, 0)`; `|t| = λ` maps to exactly zero.
#[inline]
pub fn soft_threshold(t: f64, lambda: f64) -> f64 {
    if t > lambda {
        t - lambda
    } else if t < -lambda {
        t + lambda
    } else {
        0.0
    }
}

#[inline]
pub fn clip(t: f64, lower: f64, upper: f64) -> f64 {
    t.max(lower).min(upper)
}
