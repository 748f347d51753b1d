//! Time-domain window statistics.
//!
//! Twenty features per signal window, computed from one sort:
//! std / min / max / median / four percentiles, tail sums and square sums
//! below p10/p25 and above p75/p90, and level-crossing counts of the four
//! percentile values.
//!
//! Pinned definitions:
//! - std is the sample standard deviation (n-1 denominator); 0 for n = 1.
//! - percentiles interpolate linearly between closest ranks:
//!   `h = (n-1)*p/100`, value = `x[floor(h)] + frac(h)*(x[floor(h)+1] - x[floor(h)])`
//!   on the ascending sort (median = p50).
//! - tail membership is strict: "below" means `x < level`, "above" `x > level`.
//! - a crossing of level L is an adjacent pair with strictly opposite signs
//!   of `x - L`; samples exactly on the level never cross.

pub const TIME_DOMAIN_FEATURE_COUNT: usize = 20;

pub const TIME_DOMAIN_FEATURE_NAMES: [&str; TIME_DOMAIN_FEATURE_COUNT] = [
    "std",
    "min",
    "max",
    "median",
    "p10",
    "p25",
    "p75",
    "p90",
    "sum_below_p10",
    "sum_below_p25",
    "sum_above_p75",
    "sum_above_p90",
    "sqsum_below_p10",
    "sqsum_below_p25",
    "sqsum_above_p75",
    "sqsum_above_p90",
    "xings_p10",
    "xings_p25",
    "xings_p75",
    "xings_p90",
];

/// Linear-interpolation percentile on an ascending pre-sorted slice.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=100.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

fn sample_std(window: &[f64]) -> f64 {
    let n = window.len();
    if n < 2 {
        return 0.0;
    }
    let mean = window.iter().sum::<f64>() / n as f64;
    let ss = window.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>();
    (ss / (n - 1) as f64).sqrt()
}

fn crossings(window: &[f64], level: f64) -> f64 {
    let mut count = 0usize;
    for pair in window.windows(2) {
        let a = pair[0] - level;
        let b = pair[1] - level;
        if (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0) {
            count += 1;
        }
    }
    count as f64
}

/// All 20 time-domain features for one window, in [`TIME_DOMAIN_FEATURE_NAMES`] order.
pub fn time_domain_features(window: &[f64]) -> [f64; TIME_DOMAIN_FEATURE_COUNT] {
    debug_assert!(!window.is_empty());
    let mut sorted = window.to_vec();
    sorted.sort_by(f64::total_cmp);

    let p10 = percentile_sorted(&sorted, 10.0);
    let p25 = percentile_sorted(&sorted, 25.0);
    let p75 = percentile_sorted(&sorted, 75.0);
    let p90 = percentile_sorted(&sorted, 90.0);

    let mut sum_below = [0.0f64; 2]; // p10, p25
    let mut sum_above = [0.0f64; 2]; // p75, p90
    let mut sqsum_below = [0.0f64; 2];
    let mut sqsum_above = [0.0f64; 2];
    for &x in window {
        if x < p10 {
            sum_below[0] += x;
            sqsum_below[0] += x * x;
        }
        if x < p25 {
            sum_below[1] += x;
            sqsum_below[1] += x * x;
        }
        if x > p75 {
            sum_above[0] += x;
            sqsum_above[0] += x * x;
        }
        if x > p90 {
            sum_above[1] += x;
            sqsum_above[1] += x * x;
        }
    }

    [
        sample_std(window),
        sorted[0],
        sorted[sorted.len() - 1],
        percentile_sorted(&sorted, 50.0),
        p10,
        p25,
        p75,
        p90,
        sum_below[0],
        sum_below[1],
        sum_above[0],
        sum_above[1],
        sqsum_below[0],
        sqsum_below[1],
        sqsum_above[0],
        sqsum_above[1],
        crossings(window, p10),
        crossings(window, p25),
        crossings(window, p75),
        crossings(window, p90),
    ]
}
