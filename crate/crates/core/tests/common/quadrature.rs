//! Numerical check of the left/right dilution factor: the singlet joint
//! azimuthal density integrated against the binary outcome product.

use spinpair::analysis::classify;
use spinpair::spin_models::{normalize_deg, MeasurementAxis};
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Breakpoints in [0, 360) where the outcome for `axis` flips.
fn pieces(axis: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0, normalize_deg(axis + 90.0), normalize_deg(axis + 270.0), 360.0];
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).map(|w| (w[0], w[1])).filter(|(a, b)| b > a).collect()
}

pub fn outcome_moment(a: f64, b: f64, analyzing_power: f64, rule: &[(f64, f64)]) -> f64 {
    let density =
        |p1: f64, p2: f64| (1.0 - analyzing_power.powi(2) * (p1 - p2).to_radians().cos()) / (360.0 * 360.0);
    let mut total = 0.0;
    for (lo1, hi1) in pieces(a) {
        for (lo2, hi2) in pieces(b) {
            let (h1, m1) = ((hi1 - lo1) / 2.0, (hi1 + lo1) / 2.0);
            let (h2, m2) = ((hi2 - lo2) / 2.0, (hi2 + lo2) / 2.0);
            // the sign is constant on each piece; read it at the midpoint
            let s = f64::from(classify(m1, MeasurementAxis::new(a)) * classify(m2, MeasurementAxis::new(b)));
            let mut piece = 0.0;
            for &(x1, w1) in rule {
                for &(x2, w2) in rule {
                    piece += w1 * w2 * density(m1 + h1 * x1, m2 + h2 * x2);
                }
            }
            total += s * h1 * h2 * piece;
        }
    }
    total
}
