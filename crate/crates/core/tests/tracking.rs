mod common;

use common::*;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use sqrt_slr::tracking::{ct_discretize, ct_observe, ct_transition_mean, simulate_trajectory, CtModel, CtParams};

const OMEGAS: [f64; 5] = [0.0, 0.0523, -0.0523, 0.5, -0.5];

fn diffusion(p: &CtParams) -> DMatrix<f64> {
    ct_diffusion(p.sigma_x, p.sigma_y, p.sigma_omega)
}

#[test]
fn romberg_oracle_converges() {
    let p = CtParams::default();
    let b = diffusion(&p);
    let coarse = ct_gramian_romberg(0.5, p.dt, &b, 5);
    let fine = ct_gramian_romberg(0.5, p.dt, &b, 7);
    assert!(rel(&coarse, &fine) < 1e-14);
}

#[test]
fn process_noise_factor_matches_quadrature_oracle() {
    let p = CtParams::default();
    let b = diffusion(&p);
    for omega in OMEGAS {
        let (_, q) = ct_discretize::<f64>(omega, &p).unwrap();
        let oracle = ct_gramian_romberg(omega, p.dt, &b, 6);
        let gap = rel(&to_na(&q.covariance()), &oracle);
        assert!(gap <= 1e-11, "omega {omega}: {gap:e}");
    }
}

#[test]
fn transition_matrix_matches_series_exponential() {
    let p = CtParams::default();
    for omega in OMEGAS.iter().copied().chain([1.0, -1.0, 1e-9]) {
        let (phi, _) = ct_discretize::<f64>(omega, &p).unwrap();
        let oracle = expm_taylor(&(ct_drift(omega) * p.dt));
        assert!(rel(&to_na(&phi), &oracle) <= 1e-13, "omega {omega}");
    }
}

#[test]
fn zero_turn_rate_gramian_closed_form() {
    for dt in [1.0, 0.1, 2.5] {
        let p = CtParams {
            dt,
            ..CtParams::default()
        };
        let (phi, q) = ct_discretize::<f64>(0.0, &p).unwrap();
        let phi = to_na(&phi);
        for i in 0..2 {
            assert_eq!(phi[(i, i)], 1.0);
            assert_eq!(phi[(i, i + 2)], dt);
        }
        let mut want = DMatrix::zeros(5, 5);
        for (i, s) in [p.sigma_x, p.sigma_y].into_iter().enumerate() {
            let s2 = s * s;
            want[(i, i)] = s2 * dt.powi(3) / 3.0;
            want[(i, i + 2)] = s2 * dt * dt / 2.0;
            want[(i + 2, i)] = s2 * dt * dt / 2.0;
            want[(i + 2, i + 2)] = s2 * dt;
        }
        want[(4, 4)] = p.sigma_omega * p.sigma_omega * dt;
        assert!(rel(&to_na(&q.covariance()), &want) <= 1e-12, "dt {dt}");
    }
}

#[test]
fn velocity_block_is_a_rotation() {
    let p = CtParams::default();
    for k in -20..=20 {
        let omega = k as f64 / 20.0;
        let (phi, _) = ct_discretize::<f64>(omega, &p).unwrap();
        let phi = to_na(&phi);
        let v = phi.view((2, 2), (2, 2));
        let gram = v.transpose() * v;
        assert!((gram - DMatrix::<f64>::identity(2, 2)).norm() <= 1e-12);
        let angle = v[(1, 0)].atan2(v[(0, 0)]);
        assert!((angle - omega * p.dt).abs() <= 1e-14);
    }
}

#[test]
fn observation_is_scale_consistent() {
    let mut g = rng(3);
    for _ in 0..100 {
        let x: [f64; 5] = [g.random_range(-2e3..2e3), g.random_range(-2e3..2e3), 1.0, 2.0, 0.1];
        let (r, th) = ct_observe(&x).unwrap();
        for alpha in [1e-3, 0.5, 3.0, 1e4] {
            let y = [alpha * x[0], alpha * x[1], x[2], x[3], x[4]];
            let (ra, tha) = ct_observe(&y).unwrap();
            assert!((ra - alpha * r).abs() <= 1e-14 * ra);
            assert!((tha - th).abs() <= 1e-15);
        }
    }
}

#[test]
fn sampled_transitions_match_process_noise() {
    let p = CtParams::default();
    let model = CtModel::<f64>::new(&p).unwrap();
    let x = [1000.0, 1000.0, 300.0, 0.0, -0.0523];
    let mean = ct_transition_mean(&x, &p).unwrap();
    let factor = to_na(model.process_noise_factor(x[4]).matrix());
    let oracle = ct_gramian_romberg(x[4], p.dt, &diffusion(&p), 6);
    let mut g = rng(99);
    let samples = 100_000;
    let mut second = DMatrix::<f64>::zeros(5, 5);
    for _ in 0..samples {
        let z = nalgebra::DVector::from_fn(5, |_, _| g.sample::<f64, _>(StandardNormal));
        let next = vec_na(&mean) + &factor * z;
        let dev = next - vec_na(&mean);
        second += &dev * dev.transpose();
    }
    second /= samples as f64;
    for i in 0..5 {
        for j in 0..5 {
            let scale = (oracle[(i, i)] * oracle[(j, j)]).sqrt();
            assert!(
                (second[(i, j)] - oracle[(i, j)]).abs() <= 0.03 * scale,
                "entry ({i},{j})"
            );
        }
    }
}

#[test]
fn simulated_trajectory_follows_the_model() {
    let p = CtParams::default();
    let t = simulate_trajectory(&p, 101, 5).unwrap();
    assert_eq!(t.states.len(), 101);
    assert_eq!(t.observations.len(), 101);
    assert_eq!(t, simulate_trajectory(&p, 101, 5).unwrap());
    assert_ne!(t, simulate_trajectory(&p, 101, 6).unwrap());
    for (x, y) in t.states.iter().zip(&t.observations) {
        let (r, _) = ct_observe(x).unwrap();
        assert!((y[0] - r).abs() < 8.0 * p.sigma_r);
        assert!(y[1] > -std::f64::consts::PI && y[1] <= std::f64::consts::PI);
    }
}

#[test]
fn iterated_smoother_routes_agree_on_the_turn_model() {
    use sqrt_slr::slr::ResidualRoute;
    use sqrt_slr::Estimator;

    let p = CtParams::default();
    let model = CtModel::<f64>::new(&p).unwrap().state_space_model();
    let t = simulate_trajectory(&p, 40, 17).unwrap();
    let ys: Vec<Option<Vec<f64>>> = t.observations.iter().map(|y| Some(y.to_vec())).collect();
    let run = |route| {
        let rule = sqrt_slr::cubature::spherical_radial(5).unwrap();
        Estimator::new(&model, rule, route)
            .unwrap()
            .ipls(&p.prior(), &ys, 10)
            .unwrap()
    };
    let qr = run(ResidualRoute::Qr);
    let dd = run(ResidualRoute::Downdate);
    for (a, b) in qr.iter().zip(&dd) {
        assert!(rel_vec(&vec_na(&b.mean), &vec_na(&a.mean)) <= 1e-6);
    }
}
