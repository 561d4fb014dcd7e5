//! Float math shims so the crate builds with either std intrinsics or libm.

#![allow(dead_code)]

macro_rules! shim {
    ($(($name:ident, $libm:ident)),* $(,)?) => {
        $(
            #[cfg(feature = "std")]
            #[inline(always)]
            pub(crate) fn $name(x: f64) -> f64 {
                f64::$name(x)
            }

            #[cfg(not(feature = "std"))]
            #[inline(always)]
            pub(crate) fn $name(x: f64) -> f64 {
                libm::$libm(x)
            }
        )*
    };
}

shim!(
    (sqrt, sqrt),
    (ln, log),
    (exp, exp),
    (atan, atan),
    (floor, floor),
    (ceil, ceil),
    (round, round),
    (abs, fabs),
    (cos, cos),
    (sin, sin),
    (tan, tan),
);

#[inline(always)]
pub(crate) fn hypot2(dx: f64, dy: f64) -> f64 {
    dx * dx + dy * dy
}

pub(crate) const PI: f64 = core::f64::consts::PI;

/// Median of an unsorted sample; averages the middle pair for even lengths.
pub(crate) fn median(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("median of NaN"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Mean and (sample) standard deviation; SD is 0 for fewer than two values.
pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, sqrt(var))
}
