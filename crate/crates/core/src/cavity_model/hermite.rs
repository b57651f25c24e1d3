use super::ModeIndex;

/// Physicists' Hermite polynomial `H_n(x)` by the three-term recurrence.
pub fn hermite_poly(n: usize, x: f64) -> f64 {
    let mut h0 = 1.0;
    if n == 0 {
        return h0;
    }
    let mut h1 = 2.0 * x;
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Unnormalized midplane mode `H_l(sqrt2 x/w0) H_m(sqrt2 y/w0) exp(-r^2/w0^2)`.
pub fn hermite_gauss(mode: ModeIndex, point: [f64; 2], w0: f64) -> f64 {
    let sx = std::f64::consts::SQRT_2 * point[0] / w0;
    let sy = std::f64::consts::SQRT_2 * point[1] / w0;
    let r2 = (point[0] * point[0] + point[1] * point[1]) / (w0 * w0);
    hermite_poly(mode.l, sx) * hermite_poly(mode.m, sy) * (-r2).exp()
}

/// Scaled Hermite functions `h_l(x) = H_l(X) exp(-X^2/2) / sqrt(2^l l!)` with
/// `X = sqrt2 x / w0`, for `l = 0..=l_max`.
///
/// With this scaling `sum_l h_l(x) h_l(x') t^l` is exactly the one-axis
/// Mehler kernel, so the two-axis products are the mode functions whose
/// weighted sums reproduce the closed-form Green's functions. The recurrence
/// is stable to high order.
pub fn hermite_functions(l_max: usize, x: f64, w0: f64) -> Vec<f64> {
    let xs = std::f64::consts::SQRT_2 * x / w0;
    let mut out = Vec::with_capacity(l_max + 1);
    out.push((-0.5 * xs * xs).exp());
    if l_max >= 1 {
        out.push(std::f64::consts::SQRT_2 * xs * out[0]);
    }
    for n in 1..l_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * xs * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Scaled mode function `Xi_{l,m}(r) = h_l(x) h_m(y)`; equals 1 at the origin
/// for the fundamental mode.
pub fn mode_function(mode: ModeIndex, point: [f64; 2], w0: f64) -> f64 {
    let hx = hermite_functions(mode.l, point[0], w0);
    let hy = hermite_functions(mode.m, point[1], w0);
    hx[mode.l] * hy[mode.m]
}
