use cavity_kit::cavity_model::{cloud_energies, CavityKind, CavityParams, CloudParams, PumpParams};
use cavity_kit::dynamics::*;
use cavity_kit::imaging::{steady_state_field_spectral, FieldMap};
use cavity_kit::threshold::{critical_pump, stability_matrix, ThresholdOptions};
use cavity_kit::units::mhz;
use cavity_kit::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn delta_a() -> f64 {
    mhz(-98_000.0)
}

fn single_mode() -> (CloudParams, CavityParams) {
    let cav = CavityParams::reference().with_delta_c(mhz(-20.0)).with_kind(CavityKind::SingleMode);
    (CloudParams::gaussian([0.0, 0.0], 3.0, 4.0, 100.0), cav)
}

fn multimode() -> (CloudParams, CavityParams) {
    let cav = CavityParams::reference().with_delta_c(mhz(-60.0)).with_alpha(0.02);
    (CloudParams::gaussian([4.0, -2.0], 3.0, 4.0, 3e4), cav)
}

fn omega_c(cloud: &CloudParams, cav: &CavityParams) -> f64 {
    let pump = PumpParams { rabi: 0.0, delta_a: delta_a() };
    critical_pump(cloud, cav, &pump, &ThresholdOptions::default()).unwrap().omega_c
}

fn opts(tol: f64, dt: f64) -> IntegratorOptions {
    IntegratorOptions { tol, sample_dt: dt, max_steps: 50_000_000 }
}

fn random_state(rng: &mut ChaCha8Rng, n_modes: usize) -> MeanFieldState {
    let mut c = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let mut s = MeanFieldState { psi_0: c(), psi_f: c() * 0.3, psi_b: c() * 0.3, alphas: vec![], time: 0.0 };
    s.alphas = (0..n_modes).map(|_| c() * 1e-3).collect();
    let n = s.atomic_norm().sqrt();
    s.psi_0 /= n;
    s.psi_f /= n;
    s.psi_b /= n;
    s
}

#[test]
fn normal_state_is_stationary() {
    let (cloud, cav) = multimode();
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 8).unwrap();
    let d = eom_rhs(&model, &MeanFieldState::normal(model.n_modes()), 0.0);
    assert!(d.psi_0.norm() < 1e-12 * model.eta.abs().max(1.0));
    assert!(d.to_vector().iter().all(|v| v.norm() < 1e-12));
}

#[test]
fn rhs_conserves_atomic_norm() {
    let (cloud, mut cav) = multimode();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kappa in [0.0, cav.kappa] {
        cav.kappa = kappa.max(1e-12);
        let model = DynamicsModel::new(&cloud, &cav, delta_a(), 8).unwrap();
        for _ in 0..20 {
            let s = random_state(&mut rng, model.n_modes());
            let d = eom_rhs(&model, &s, 5e4);
            let rate = 2.0 * (s.psi_0.conj() * d.psi_0 + s.psi_f.conj() * d.psi_f + s.psi_b.conj() * d.psi_b).re;
            assert!(rate.abs() < 1e-12, "d|psi|^2/dt = {rate}");
        }
    }
}

#[test]
fn pumpless_lossless_system_stays_put() {
    let (cloud, mut cav) = single_mode();
    cav.kappa = 1e-14;
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 0).unwrap();
    let s0 = MeanFieldState::normal(1);
    let tr = integrate(&s0, &model, &RampProtocol::constant(0.0, 5.0), &opts(1e-10, 1.0)).unwrap();
    assert_eq!(tr.last().to_vector(), s0.to_vector());
}

#[test]
fn integration_conserves_atomic_norm() {
    let (cloud, cav) = multimode();
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 8).unwrap();
    let oc = omega_c(&cloud, &cav);
    let tr = integrate(&MeanFieldState::seeded(model.n_modes(), 1e-3), &model, &RampProtocol::constant(1.2 * oc, 5.0), &opts(1e-9, 0.5)).unwrap();
    for s in &tr.samples {
        assert!((s.atomic_norm() - 1.0).abs() < 1e-7, "norm {}", s.atomic_norm());
    }
}

#[test]
fn photons_decay_at_kappa_without_pump() {
    let (cloud, cav) = single_mode();
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 0).unwrap();
    let mut s0 = MeanFieldState::normal(1);
    s0.alphas[0] = Complex64::new(1.0, 0.0);
    let t = 3.0;
    let tr = integrate(&s0, &model, &RampProtocol::constant(0.0, t), &opts(1e-10, 0.5)).unwrap();
    let got = tr.last().alphas[0].norm();
    assert!((got / (-cav.kappa * t).exp() - 1.0).abs() < 1e-7, "{got}");
}

#[test]
fn halving_tolerance_changes_result_by_less_than_tolerance() {
    let (cloud, cav) = single_mode();
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 0).unwrap();
    let oc = omega_c(&cloud, &cav);
    let ramp = RampProtocol::constant(1.1 * oc, 4.0);
    let s0 = MeanFieldState::seeded(1, 1e-3);
    let tol = 1e-8;
    let a = integrate(&s0, &model, &ramp, &opts(tol, 1.0)).unwrap();
    let b = integrate(&s0, &model, &ramp, &opts(tol / 2.0, 1.0)).unwrap();
    let diff = a.last().to_vector().iter().zip(b.last().to_vector()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(diff < tol, "diff {diff}");
}

#[test]
fn adiabatic_amplitudes_vanish_without_scattering() {
    let (cloud, cav) = multimode();
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 8).unwrap();
    let a = adiabatic_mode_amplitudes(&model, &MeanFieldState::normal(model.n_modes()), 1e5).unwrap();
    assert!(a.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn strong_dispersive_mixing_is_rejected() {
    let (mut cloud, cav) = multimode();
    cloud.n_atoms = 3e9;
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 8).unwrap();
    let s = MeanFieldState::seeded(model.n_modes(), 1e-3);
    assert!(matches!(adiabatic_mode_amplitudes(&model, &s, 1.0), Err(Error::PerturbationInvalid(_))));
}

#[test]
fn frozen_atoms_relax_to_adiabatic_modes() {
    let (cloud, cav) = multimode();
    let mut model = DynamicsModel::new(&cloud, &cav, delta_a(), 8).unwrap();
    model.frozen_atoms = true;
    let oc = omega_c(&cloud, &cav);
    let s0 = MeanFieldState::seeded(model.n_modes(), 1e-2);
    let tr = integrate(&s0, &model, &RampProtocol::constant(0.8 * oc, 30.0 / cav.kappa), &opts(1e-10, 10.0)).unwrap();
    let want = adiabatic_mode_amplitudes(&model, &s0, 0.8 * oc).unwrap();
    let got = &tr.last().alphas;
    let norm = want.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let err = want.iter().zip(got).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    assert!(err < 0.01 * norm, "relative error {}", err / norm);
}

#[test]
fn first_order_modes_reproduce_the_spectral_field() {
    let (cloud, cav) = multimode();
    let n_max = 16;
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), n_max).unwrap();
    let first: Vec<Complex64> = (0..model.n_modes())
        .map(|k| model.coupling[k] / Complex64::new(model.detunings[k], model.kappa))
        .collect();
    let rho = FieldMap::from_fn(161, 40.0, |x, y| {
        let (dx, dy) = ((x - cloud.center[0]) / cloud.sigma_x, (y - cloud.center[1]) / cloud.sigma_y);
        Complex64::new((-0.5 * (dx * dx + dy * dy)).exp() / (2.0 * std::f64::consts::PI * cloud.sigma_x * cloud.sigma_y), 0.0)
    });
    let spectral = steady_state_field_spectral(&rho, &cav, n_max).unwrap();
    let scale = Complex64::new(0.0, cav.kappa);
    for (i, j) in [(80, 80), (90, 75), (60, 100), (70, 80)] {
        let r = [rho.x(i), rho.y(j)];
        let got = model.field_at(&first, r) * scale;
        let want = spectral.at(i, j);
        assert!((got - want).norm() < 1e-6 * want.norm().max(1e-12), "{r:?}: {got} vs {want}");
    }
}

fn real_jacobian(model: &DynamicsModel, omega: f64) -> DMatrix<f64> {
    let base = MeanFieldState::normal(model.n_modes()).to_vector();
    let n = 2 * base.len();
    let f = |v: &[f64]| -> Vec<f64> {
        let y: Vec<Complex64> = v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let s = MeanFieldState::from_vector(&y, 0.0);
        eom_rhs(model, &s, omega).to_vector().iter().flat_map(|z| [z.re, z.im]).collect()
    };
    let x0: Vec<f64> = base.iter().flat_map(|z| [z.re, z.im]).collect();
    let h = 1e-7;
    let mut jac = DMatrix::zeros(n, n);
    for k in 0..n {
        let (mut p, mut m) = (x0.clone(), x0.clone());
        p[k] += h;
        m[k] -= h;
        let (fp, fm) = (f(&p), f(&m));
        for i in 0..n {
            jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

#[test]
fn linearization_matches_stability_matrix() {
    let (cloud, cav) = single_mode();
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 0).unwrap();
    let oc = omega_c(&cloud, &cav);
    let pump = PumpParams { rabi: 0.0, delta_a: delta_a() };
    for frac in [0.3, 0.6] {
        let omega = frac * oc;
        let rep = stability_matrix(&cloud, &cav, &pump, omega, &ThresholdOptions::default()).unwrap();
        let eigs = real_jacobian(&model, omega).complex_eigenvalues();
        for lam in rep.analytic_eigs {
            // i d/dt x = lam x  =>  d/dt x = -i lam x
            let want = Complex64::new(0.0, -1.0) * lam;
            let best = eigs.iter().map(|e| (e - want).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 0.01 * want.norm(), "frac {frac}: eigenvalue {want} off by {best}");
        }
    }
}

#[test]
fn perturbations_stay_small_below_and_grow_above_threshold() {
    let (cloud, cav) = single_mode();
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 0).unwrap();
    let oc = omega_c(&cloud, &cav);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let mut s0 = MeanFieldState::normal(1);
        s0.psi_f = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 1e-5;
        s0.psi_b = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 1e-5;
        let p0 = s0.psi_f.norm_sqr() + s0.psi_b.norm_sqr();
        let run = |f: f64| {
            let tr = integrate(&s0, &model, &RampProtocol::constant(f * oc, 30.0), &opts(1e-10, 1.0)).unwrap();
            tr.samples.iter().map(|s| s.psi_f.norm_sqr() + s.psi_b.norm_sqr()).fold(0.0, f64::max) / p0
        };
        let below = run(0.9);
        let above = run(1.1);
        assert!(below < 20.0, "below threshold perturbation grew by {below}");
        assert!(above > 1e4, "above threshold perturbation grew only by {above}");
    }
}

fn onset_flux(model: &DynamicsModel, oc: f64) -> f64 {
    let mut s = MeanFieldState::seeded(model.n_modes(), 1e-2);
    s.alphas = adiabatic_mode_amplitudes(model, &s, oc).unwrap();
    s.flux(model.kappa)
}

#[test]
fn slow_ramp_onset_matches_critical_pump() {
    let (cloud, cav) = single_mode();
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 0).unwrap();
    let oc = omega_c(&cloud, &cav);
    let tr = integrate(&MeanFieldState::seeded(1, DEFAULT_SEED), &model, &RampProtocol::linear(1.5 * oc, 300.0), &opts(1e-9, 0.1)).unwrap();
    let on = detect_onset(&tr, onset_flux(&model, oc)).unwrap();
    assert!((on.onset_omega / oc - 1.0).abs() < 0.05, "onset at {} Omega_c", on.onset_omega / oc);
    let seed_f = tr.samples[0].psi_f.norm_sqr();
    let k = tr.omegas.iter().position(|&w| w >= 1.2 * oc).unwrap();
    assert!(tr.samples[k..].iter().any(|s| s.psi_f.norm_sqr() >= 10.0 * seed_f));
}

#[test]
fn onset_approaches_threshold_as_ramp_slows() {
    let (cloud, cav) = single_mode();
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 0).unwrap();
    let oc = omega_c(&cloud, &cav);
    let thr = onset_flux(&model, oc);
    let mut last = f64::INFINITY;
    for duration in [50.0, 150.0, 450.0] {
        let tr = integrate(&MeanFieldState::seeded(1, DEFAULT_SEED), &model, &RampProtocol::linear(2.0 * oc, duration), &opts(1e-9, 0.1)).unwrap();
        let w = detect_onset(&tr, thr).unwrap().onset_omega / oc;
        assert!(w > 1.0 && w < last, "duration {duration}: onset {w}");
        last = w;
    }
}

#[test]
fn ramp_below_threshold_has_no_onset() {
    let (cloud, cav) = single_mode();
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 0).unwrap();
    let oc = omega_c(&cloud, &cav);
    let tr = integrate(&MeanFieldState::seeded(1, DEFAULT_SEED), &model, &RampProtocol::linear(0.8 * oc, 100.0), &opts(1e-9, 0.5)).unwrap();
    assert!(matches!(detect_onset(&tr, onset_flux(&model, oc)), Err(Error::NoOnset)));
}

#[test]
fn ramp_rejects_bad_seed() {
    let (cloud, cav) = single_mode();
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 0).unwrap();
    let r = RampProtocol::linear(1.0, 1.0).with_seed(0.1);
    assert!(integrate(&MeanFieldState::normal(1), &model, &r, &opts(1e-8, 0.1)).is_err());
}

#[test]
fn mode_truncation_converges() {
    let (cloud, cav) = multimode();
    let change = truncation_change(&cloud, &cav, delta_a(), 20).unwrap();
    assert!(change < 0.05, "flux change {change}");
    let en = cloud_energies(&cloud, cav.wavelength);
    assert!(en.e_int > 0.0);
}

#[test]
fn shared_grid_overlaps_match_single_integrals() {
    use cavity_kit::cavity_model::ModeIndex;
    use cavity_kit::greens::{overlap_i, overlap_j, AxisOverlaps};
    let cloud = CloudParams::gaussian([4.0, -2.0], 3.0, 4.0, 3e4);
    let ov = AxisOverlaps::new(&cloud, 35.0, 12);
    let modes = [ModeIndex::new(0, 0), ModeIndex::new(4, 0), ModeIndex::new(2, 6), ModeIndex::new(12, 0)];
    for &a in &modes {
        assert!((ov.i(a) - overlap_i(a, &cloud, 35.0)).abs() < 1e-11);
        for &b in &modes {
            assert!((ov.j(a, b) - overlap_j(a, b, &cloud, 35.0)).abs() < 1e-11);
        }
    }
}

#[test]
fn converged_mode_set_reproduces_kernel_threshold() {
    let cav = CavityParams::reference().with_delta_c(mhz(-60.0)).with_alpha(0.1);
    let cloud = CloudParams::gaussian([4.0, -2.0], 3.0, 4.0, 3e4);
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 200).unwrap();
    let truncated = model.critical_pump(&cloud, &cav).unwrap().omega_c;
    assert!((truncated / omega_c(&cloud, &cav) - 1.0).abs() < 1e-9);
}

#[test]
fn single_mode_model_threshold_is_exact() {
    let (cloud, cav) = single_mode();
    let model = DynamicsModel::new(&cloud, &cav, delta_a(), 0).unwrap();
    let t = model.critical_pump(&cloud, &cav).unwrap().omega_c;
    assert!((t / omega_c(&cloud, &cav) - 1.0).abs() < 1e-12);
}
