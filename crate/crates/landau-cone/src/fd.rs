//! Central finite differences with one Richardson level.

/// ∂f/∂x via central differences at step `h`, Richardson-extrapolated.
pub fn derivative<T, F>(f: F, x: f64, h: f64) -> T
where
    F: Fn(f64) -> T,
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + Copy,
{
    let d = |s: f64| (f(x + s) - f(x - s)) * (0.5 / s);
    let d1 = d(h);
    let d2 = d(0.5 * h);
    (d2 * 4.0 - d1) * (1.0 / 3.0)
}

/// Gradient of a scalar function on ℝ².
pub fn gradient2(f: &dyn Fn([f64; 2]) -> f64, x: [f64; 2], h: f64) -> [f64; 2] {
    [
        derivative(|s| f([x[0] + s, x[1]]), 0.0, h),
        derivative(|s| f([x[0], x[1] + s]), 0.0, h),
    ]
}

/// Hessian of a scalar function on ℝ² (symmetric), Richardson-extrapolated.
pub fn hessian2(f: &dyn Fn([f64; 2]) -> f64, x: [f64; 2], h: f64) -> [[f64; 2]; 2] {
    let raw = |s: f64| {
        let f0 = f(x);
        let fxx = (f([x[0] + s, x[1]]) - 2.0 * f0 + f([x[0] - s, x[1]])) / (s * s);
        let fyy = (f([x[0], x[1] + s]) - 2.0 * f0 + f([x[0], x[1] - s])) / (s * s);
        let fxy = (f([x[0] + s, x[1] + s]) - f([x[0] + s, x[1] - s]) - f([x[0] - s, x[1] + s])
            + f([x[0] - s, x[1] - s]))
            / (4.0 * s * s);
        [fxx, fxy, fyy]
    };
    let a = raw(h);
    let b = raw(0.5 * h);
    let r = |k: usize| (4.0 * b[k] - a[k]) / 3.0;
    [[r(0), r(1)], [r(1), r(2)]]
}
