use cavity_kit::cavity_model::{gamma_factor, hermite_functions, mode_weight, CloudParams, KernelParams, ModeIndex};
use cavity_kit::greens::*;
use cavity_kit::quadrature::QuadratureSpec;
use cavity_kit::Error;
use num_complex::Complex64;

const W0: f64 = 35.0;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn relc(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn confocal(eps_t: f64, alpha: f64) -> KernelParams {
    KernelParams::confocal(W0, eps_t, 0.00137, alpha)
}

/// One-axis Mehler kernel for real t.
fn mehler_1d(x: f64, xp: f64, t: f64) -> f64 {
    let d = 1.0 - t * t;
    let (x, xp) = (x / W0, xp / W0);
    d.powf(-0.5) * (-(1.0 + t * t) / d * (x * x + xp * xp) + 4.0 * t / d * x * xp).exp()
}

/// Midpoint grid over +-8 sigma of a normalized 1-D Gaussian.
fn gauss_grid(center: f64, sigma: f64, n: usize) -> Vec<(f64, f64)> {
    let half = 8.0 * sigma;
    let h = 2.0 * half / n as f64;
    (0..n)
        .map(|i| {
            let x = center - half + (i as f64 + 0.5) * h;
            let z = (x - center) / sigma;
            (x, (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()) * h)
        })
        .collect()
}

#[test]
fn mehler_examples() {
    let z = [0.0, 0.0];
    let v = mehler_kernel(z, z, c(0.5), W0).unwrap();
    assert!((v - c(4.0 / 3.0)).norm() < 1e-15);

    let (r, rp) = ([3.0, -4.0], [10.0, 2.0]);
    let v = mehler_kernel(r, rp, c(0.0), W0).unwrap();
    assert!((v.re - (-(25.0 + 104.0) / (W0 * W0)).exp()).abs() < 1e-15);
}

#[test]
fn mehler_matches_brute_force_mode_sum() {
    let r = [0.3 * W0, 0.0];
    let rp = [0.1 * W0, 0.2 * W0];
    let t: f64 = 0.7;
    let n_max = 400;
    let hx = hermite_functions(n_max, r[0], W0);
    let hy = hermite_functions(n_max, r[1], W0);
    let hxp = hermite_functions(n_max, rp[0], W0);
    let hyp = hermite_functions(n_max, rp[1], W0);
    let mut sum = 0.0;
    for n in 0..=n_max {
        let shell: f64 = (0..=n).map(|l| hx[l] * hxp[l] * hy[n - l] * hyp[n - l]).sum();
        sum += shell * t.powi(n as i32);
    }
    let v = mehler_kernel(r, rp, c(t), W0).unwrap();
    assert!((v.re - sum).abs() / sum.abs() < 1e-8, "{} vs {sum}", v.re);
}

#[test]
fn mehler_rejects_singular_argument() {
    let e = mehler_kernel([1.0, 0.0], [1.0, 0.0], c(1.0), W0);
    assert!(matches!(e, Err(Error::SingularKernel(_))));
    // Imaginary t never reaches the singularity.
    assert!(mehler_kernel([1.0, 0.0], [1.0, 0.0], Complex64::new(0.0, 1.0), W0).is_ok());
}

#[test]
fn symmetrize_examples() {
    let z = [0.0, 0.0];
    for t in [0.1, 0.5, 0.9] {
        let v = symmetrize(z, z, t, W0).unwrap();
        let expect = 0.5 * (1.0 / (1.0 - t * t) + 1.0 / (1.0 + t * t));
        assert!((v - c(expect)).norm() < 1e-14 * expect);
    }
    let (r, rp) = ([5.0, 7.0], [-3.0, 2.0]);
    let v = symmetrize(r, rp, 0.0, W0).unwrap();
    assert!((v.re - (-(74.0 + 13.0) / (W0 * W0)).exp()).abs() < 1e-15);
    for t in [0.2, 0.6, 0.95] {
        let a = symmetrize(r, rp, t, W0).unwrap();
        let b = symmetrize([-r[0], -r[1]], rp, t, W0).unwrap();
        assert!((a - b).norm() < 1e-13 * a.norm());
        assert!((symmetrize_fast(r, rp, t, W0) - a.re).abs() < 1e-13 * a.norm());
    }
}

#[test]
fn single_mode_limit_is_the_fundamental() {
    let kp = KernelParams::single_mode(W0, 0.00137);
    let (r, rp) = ([4.0, -1.0], [2.0, 6.0]);
    let s = greens_point(r, rp, &kp, &QuadratureSpec::kernel()).unwrap();
    let expect = c((-(17.0 + 40.0) / (W0 * W0)).exp()) / Complex64::new(1.0, 0.00137);
    assert!((s.value - expect).norm() < 1e-15);
    assert_eq!(s.method, KernelMethod::ClosedForm);
    // Large dispersion pushes all weight into TEM00.
    let kp = confocal(1e4, 0.0);
    let s = greens_point(r, rp, &kp, &QuadratureSpec::kernel()).unwrap();
    assert!(relc(s.value, expect) < 1e-3);
}

#[test]
fn quadrature_agrees_with_converged_mode_sum() {
    // With the mode tail beyond n = 1000 below 1e-9, the two paths must agree.
    let spec = QuadratureSpec::kernel();
    let points = [([0.0, 0.0], [0.0, 0.0]), ([5.0, 3.0], [-2.0, 8.0]), ([20.0, -10.0], [15.0, 4.0]), ([12.0, 0.0], [-12.0, 0.5])];
    for (eps_t, alpha) in [(0.026, 0.03), (0.005, 0.05), (0.05, 0.025)] {
        let kp = confocal(eps_t, alpha);
        for (r, rp) in points {
            let q = greens_point(r, rp, &kp, &spec).unwrap();
            assert_eq!(q.method, KernelMethod::Quadrature);
            let o = mode_sum_oracle(r, rp, &kp, 1000);
            assert!(relc(q.value, o) < 1e-6, "eps {eps_t} alpha {alpha} {r:?} {rp:?}: {} vs {o}", q.value);
        }
    }
}

#[test]
fn oracle_examples() {
    let kp = confocal(0.026, 0.01);
    let (r, rp) = ([3.0, 4.0], [-1.0, 2.0]);
    let o = mode_sum_oracle(r, rp, &kp, 0);
    let xi = |p: [f64; 2]| (-(p[0] * p[0] + p[1] * p[1]) / (W0 * W0)).exp();
    let expect = mode_weight(ModeIndex::new(0, 0), &kp) * xi(r) * xi(rp);
    assert!((o - expect).norm() < 1e-15);

    // The truncation error shrinks with n_max.
    for alpha in [0.005, 0.01, 0.02] {
        let kp = kp_alpha(alpha);
        let z = [0.0, 0.0];
        let (a, b, d) = (
            mode_sum_oracle(z, z, &kp, 200),
            mode_sum_oracle(z, z, &kp, 400),
            mode_sum_oracle(z, z, &kp, 600),
        );
        assert!((d - b).norm() < (b - a).norm());
    }
}

fn kp_alpha(alpha: f64) -> KernelParams {
    confocal(0.026, alpha)
}

#[test]
fn kernel_symmetries() {
    let kp = confocal(0.026, 0.01);
    let spec = QuadratureSpec::kernel();
    let d = |r: [f64; 2], rp: [f64; 2]| greens_point(r, rp, &kp, &spec).unwrap().value;
    for (r, rp) in [([3.0, 1.0], [-7.0, 4.0]), ([10.0, -2.0], [1.0, 1.0]), ([0.5, 20.0], [6.0, -6.0])] {
        let base = d(r, rp);
        assert!(relc(d(rp, r), base) < 1e-9);
        assert!(relc(d([-r[0], -r[1]], [-rp[0], -rp[1]]), base) < 1e-9);
        assert!(relc(d([-r[0], -r[1]], rp), base) < 1e-9);
    }
    let z = [0.0, 0.0];
    assert_eq!(d(z, [-0.0, -0.0]), d(z, z));
}

#[test]
fn local_and_mirror_peaks() {
    let kp = confocal(0.026, 0.01);
    let spec = QuadratureSpec::kernel();
    let d = |r: [f64; 2], rp: [f64; 2]| greens_point(r, rp, &kp, &spec).unwrap().value;
    let local: Vec<f64> = [2.0, 3.0, 4.0].iter().map(|k| d([k * W0, 0.0], [k * W0, 0.0]).re).collect();
    for r0 in [2.0 * W0, 3.0 * W0, 4.0 * W0] {
        let profile: Vec<f64> = [0.0, 2.0, 5.0, 10.0].iter().map(|dx| d([r0, 0.0], [-r0 + dx, 0.0]).norm()).collect();
        assert!(profile.windows(2).all(|w| w[0] > w[1]), "r0 {r0}: {profile:?}");
        assert!(profile[0] > 5.0 * profile[3], "r0 {r0}: {profile:?}");
        let between = d([r0, 0.0], [0.0, 0.0]).norm();
        assert!(profile[0] > 10.0 * between, "r0 {r0}: mirror {} between {between}", profile[0]);
    }
    // The local peak height varies far less than the TEM00 envelope would.
    let spread = local.iter().cloned().fold(f64::MIN, f64::max) / local.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 1.5, "{local:?}");
}

#[test]
fn alpha_zero_point_source_diverges_but_cloud_converges() {
    let kp = confocal(0.026, 0.0);
    let spec = QuadratureSpec::kernel();
    let e = greens_point([0.0, 0.0], [0.0, 0.0], &kp, &spec);
    assert!(matches!(e, Err(Error::DivergentIntegral(_))));
    let cloud = CloudParams::gaussian([0.0, 0.0], 2.0, 2.0, 1e5);
    let v = greens_cloud([0.0, 0.0], [0.0, 0.0], &cloud, &kp, &spec).unwrap();
    assert!(v.value.re.is_finite() && v.value.re > 1.0);
}

#[test]
fn nonlocal_part_is_reported() {
    let kp = confocal(0.026, 0.01);
    let spec = QuadratureSpec::kernel();
    let r = [8.0, 3.0];
    let full = greens_point(r, r, &kp, &spec).unwrap().value;
    let nl = greens_point_nonlocal(r, r, &kp, &spec).unwrap();
    assert!(nl.norm().is_finite());
    assert!(nl.norm() < full.norm());
}

#[test]
fn cloud_kernel_tends_to_point_kernel() {
    let kp = confocal(0.026, 0.01);
    let spec = QuadratureSpec::kernel();
    for (ri, rj) in [([0.0, 0.0], [0.0, 0.0]), ([4.0, 1.0], [-3.0, 2.0])] {
        let point = greens_point(ri, rj, &kp, &spec).unwrap().value;
        let mut prev = f64::INFINITY;
        for k in 2..=6 {
            let s = W0 * 2f64.powi(-k);
            let cloud = CloudParams::gaussian([0.0, 0.0], s, s, 1e5);
            let v = greens_cloud(ri, rj, &cloud, &kp, &spec).unwrap().value;
            let err = relc(v, point);
            assert!(err < prev, "k {k}: {err} !< {prev}");
            prev = err;
        }
        assert!(prev < 0.05);
    }
}

#[test]
fn smeared_pair_kernel_matches_grid_integration() {
    let gamma: f64 = 0.8;
    // 2 sigma^2/w0^2 = (1 - gamma)/(1 + gamma).
    let sigma = W0 * ((1.0 - gamma) / (2.0 * (1.0 + gamma))).sqrt();
    assert!((gamma_factor(sigma, W0) - gamma).abs() < 1e-14);
    let t = 0.5;
    // The 4-D integral factorizes into identical x and y integrals.
    let g = gauss_grid(0.0, sigma, 400);
    let axis: f64 = g.iter().flat_map(|&(x, a)| g.iter().map(move |&(xp, b)| a * b * mehler_1d(x, xp, t))).sum();
    let grid = axis * axis;
    let v = g_prime([0.0, 0.0], [0.0, 0.0], [gamma, gamma], c(t), W0);
    assert!((v.re - grid).abs() / grid < 1e-4, "{} vs {grid}", v.re);
    let pref = (1.0 + gamma).powi(2) / (4.0 * (1.0 - gamma * gamma * t * t));
    assert!((v.re - pref).abs() < 1e-14);
}

#[test]
fn smeared_pair_kernel_off_center_matches_grid() {
    let (sx, sy) = (4.0, 7.0);
    let (ri, rj) = ([3.0, -2.0], [-5.0, 6.0]);
    let t = 0.6;
    let axis = |a: f64, b: f64, s: f64| -> f64 {
        let ga = gauss_grid(a, s, 300);
        let gb = gauss_grid(b, s, 300);
        ga.iter().flat_map(|&(x, u)| gb.iter().map(move |&(xp, v)| u * v * mehler_1d(x, xp, t))).sum()
    };
    let grid = axis(ri[0], rj[0], sx) * axis(ri[1], rj[1], sy);
    let v = g_prime(ri, rj, [gamma_factor(sx, W0), gamma_factor(sy, W0)], c(t), W0);
    assert!((v.re - grid).abs() / grid < 1e-4, "{} vs {grid}", v.re);
}

#[test]
fn dispersive_kernel_matches_grid_integration() {
    let s = 5.0;
    let g = gamma_factor(s, W0);
    let (ri, rj, rk) = ([2.0, 1.0], [-3.0, 4.0], [6.0, -1.0]);
    let axis = |a: f64, b: f64, cc: f64, t: f64, tp: f64| -> f64 {
        let (ga, gb, gc) = (gauss_grid(a, s, 90), gauss_grid(b, s, 90), gauss_grid(cc, s, 90));
        let mut acc = 0.0;
        for &(x, u) in &ga {
            let inner_j: f64 = gb.iter().map(|&(xp, v)| v * mehler_1d(x, xp, t)).sum();
            let inner_k: f64 = gc.iter().map(|&(xpp, w)| w * mehler_1d(x, xpp, tp)).sum();
            acc += u * inner_j * inner_k;
        }
        acc
    };
    for (t, tp) in [(0.5, 0.0), (0.4, 0.7)] {
        let grid = axis(ri[0], rj[0], rk[0], t, tp) * axis(ri[1], rj[1], rk[1], t, tp);
        let v = g_dispersive(ri, rj, rk, [g, g], c(t), c(tp), W0);
        assert!((v.re - grid).abs() / grid < 1e-4, "t {t} t' {tp}: {} vs {grid}", v.re);
    }
    // t' = 0 factorizes into the pair kernel weighted by exp(-r^2/w0^2) and
    // the fundamental overlap of cloud k.
    let i00k = overlap_i(ModeIndex::new(0, 0), &CloudParams::gaussian(rk, s, s, 1e5), W0);
    let v0 = g_dispersive(ri, rj, rk, [g, g], c(0.5), c(0.0), W0);
    let weighted = |a: f64, b: f64| -> f64 {
        let (ga, gb) = (gauss_grid(a, s, 300), gauss_grid(b, s, 300));
        ga.iter()
            .map(|&(x, u)| u * (-(x * x) / (W0 * W0)).exp() * gb.iter().map(|&(xp, v)| v * mehler_1d(x, xp, 0.5)).sum::<f64>())
            .sum()
    };
    let fact = weighted(ri[0], rj[0]) * weighted(ri[1], rj[1]) * i00k;
    assert!((v0.re - fact).abs() / fact < 1e-4);
}

#[test]
fn dispersive_kernel_symmetry_and_point_limit() {
    let g = gamma_factor(4.0, W0);
    let (ri, rj, rk) = ([1.0, 2.0], [-4.0, 3.0], [5.0, 5.0]);
    for (t, tp) in [(0.3, 0.8), (0.9, 0.1)] {
        let a = g_dispersive(ri, rj, rk, [g, g], c(t), c(tp), W0);
        let b = g_dispersive(ri, rk, rj, [g, g], c(tp), c(t), W0);
        assert!(relc(a, b) < 1e-13);
        let z = [0.0, 0.0];
        let p = g_dispersive(z, z, z, [1.0, 1.0], c(t), c(tp), W0);
        assert!((p.re - 1.0 / ((1.0 - t * t) * (1.0 - tp * tp))).abs() < 1e-13 * p.re);
    }
}

fn selected_modes(n_max: usize) -> Vec<ModeIndex> {
    ModeIndex::up_to(n_max).filter(|m| m.n() % 4 == 0).collect()
}

#[test]
fn cloud_kernel_matches_overlap_mode_sum() {
    let kp = confocal(0.026, 0.01);
    let cloud = CloudParams::gaussian([3.0, -2.0], 3.0, 4.5, 1e5);
    let tables = AxisOverlaps::new(&cloud, W0, 400);
    let sum: Complex64 = selected_modes(400).into_iter().map(|m| mode_weight(m, &kp) * tables.i(m).powi(2)).sum();
    let q = greens_cloud(cloud.center, cloud.center, &cloud, &kp, &QuadratureSpec::kernel()).unwrap().value;
    assert!(relc(q, sum) < 1e-4, "{q} vs {sum}");
}

#[test]
fn dispersive_integral_matches_overlap_mode_sum() {
    let kp = confocal(0.026, 0.01);
    let cloud = CloudParams::gaussian([2.0, 1.0], 10.0, 10.0, 1e5);
    let n_max = 60;
    let tables = AxisOverlaps::new(&cloud, W0, n_max);
    let modes = selected_modes(n_max);
    let u: Vec<Complex64> = modes.iter().map(|&m| mode_weight(m, &kp) * tables.i(m)).collect();
    let mut sum = Complex64::new(0.0, 0.0);
    for (a, &mu) in modes.iter().enumerate() {
        for (b, &nu) in modes.iter().enumerate() {
            sum += u[a] * tables.j(mu, nu) * u[b];
        }
    }
    let c0 = cloud.center;
    let q = greens_dispersive(c0, c0, c0, &cloud, &kp, &QuadratureSpec::double()).unwrap().value;
    assert!(relc(q, sum) < 1e-5, "{q} vs {sum}");
}

#[test]
fn overlap_examples() {
    let tiny = CloudParams::gaussian([0.0, 0.0], 1e-4, 1e-4, 1e5);
    assert!((overlap_i(ModeIndex::new(0, 0), &tiny, W0) - 1.0).abs() < 1e-8);
    let on_y = CloudParams::gaussian([0.0, 6.0], 3.0, 4.0, 1e5);
    for l in [1, 3, 5] {
        for m in 0..4 {
            assert!(overlap_i(ModeIndex::new(l, m), &on_y, W0).abs() < 1e-14);
        }
    }
    let cloud = CloudParams::gaussian([4.0, -3.0], 3.0, 5.0, 1e5);
    let tables = AxisOverlaps::new(&cloud, W0, 8);
    for (mu, nu) in [(ModeIndex::new(2, 2), ModeIndex::new(0, 4)), (ModeIndex::new(3, 1), ModeIndex::new(1, 3))] {
        assert!((tables.i(mu) - overlap_i(mu, &cloud, W0)).abs() < 1e-10);
        assert!((tables.j(mu, nu) - overlap_j(mu, nu, &cloud, W0)).abs() < 1e-10);
    }
}
