//! Dense reference implementations on nalgebra, written directly from the
//! covariance-form formulas (explicit inverses, no factors).

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sqrt_slr::cubature;
use sqrt_slr::slr::linearize;
use sqrt_slr::{Matrix, NoiseModel, ResidualRoute, StateSpaceModel, TriangularFactor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_na(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.nrows(), m.ncols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix<f64> {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn to_na32(m: &Matrix<f32>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] as f64)
}

pub fn vec_na(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn gaussian(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vec(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random SPD matrix with eigenvalues log-uniform in `[scale, scale * cond]`.
pub fn random_spd(n: usize, scale: f64, cond: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let q = gaussian(n, n, rng).qr().q();
    let eig = DVector::from_fn(n, |_, _| scale * cond.powf(rng.random::<f64>()));
    let m = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    (&m + m.transpose()) * 0.5
}

pub fn chol_factor(m: &DMatrix<f64>) -> TriangularFactor<f64> {
    TriangularFactor::cholesky(&from_na(m)).expect("SPD input")
}

/// `‖a - b‖_F / ‖b‖_F` (absolute when `b` is zero).
pub fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let d = (a - b).norm();
    let s = b.norm();
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

pub fn rel_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let d = (a - b).norm();
    let s = b.norm();
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

/// `(P, Γ, Σ)` for `u ~ N(·, Π)`, `v | u ~ N(Ψ u, Ω)`.
pub fn dense_condition(
    pi: &DMatrix<f64>,
    psi: &DMatrix<f64>,
    omega: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let p = psi * pi * psi.transpose() + omega;
    // information form: no subtraction and no inverse of P, so the oracle
    // stays accurate when Σ ≪ Π or P is poorly conditioned
    let pi_inv = pi.clone().try_inverse().expect("invertible Π");
    let omega_inv = omega.clone().try_inverse().expect("invertible Ω");
    let sigma = (pi_inv + psi.transpose() * &omega_inv * psi)
        .try_inverse()
        .expect("invertible information");
    let gamma = &sigma * psi.transpose() * omega_inv;
    (p, gamma, sigma)
}

/// Linear Gaussian state-space model in covariance form.
#[derive(Clone, Debug)]
pub struct LinearModel {
    pub f: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub mu0: DVector<f64>,
    pub sigma0: DMatrix<f64>,
}

impl LinearModel {
    pub fn random(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Self {
        // spectral radius kept near one so 20-step runs stay well scaled
        let a = gaussian(n, n, rng);
        let rho = a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let f = a * (0.95 / rho.max(1e-3));
        LinearModel {
            f,
            q: random_spd(n, 0.1, 10.0, rng),
            h: gaussian(d, n, rng),
            r: random_spd(d, 0.5, 10.0, rng),
            mu0: gaussian_vec(n, rng),
            sigma0: random_spd(n, 1.0, 10.0, rng),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.f.nrows(), self.h.nrows())
    }

    pub fn simulate(&self, len: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
        let (n, d) = self.dims();
        let lq = self.q.clone().cholesky().unwrap().l();
        let lr = self.r.clone().cholesky().unwrap().l();
        let l0 = self.sigma0.clone().cholesky().unwrap().l();
        let mut x = &self.mu0 + l0 * gaussian_vec(n, rng);
        let mut ys = Vec::with_capacity(len);
        for m in 0..len {
            if m > 0 {
                x = &self.f * &x + &lq * gaussian_vec(n, rng);
            }
            ys.push(&self.h * &x + &lr * gaussian_vec(d, rng));
        }
        ys
    }

    pub fn state_space(&self) -> StateSpaceModel<f64> {
        let (n, d) = self.dims();
        let f = from_na(&self.f);
        let h = from_na(&self.h);
        StateSpaceModel::new(
            n,
            d,
            move |x| Ok(f.mul_vec(x)),
            NoiseModel::constant(chol_factor(&self.q)),
            move |x| Ok(h.mul_vec(x)),
            NoiseModel::constant(chol_factor(&self.r)),
        )
    }

    pub fn init(&self) -> sqrt_slr::GaussianSqrt64 {
        sqrt_slr::GaussianSqrt::new(self.mu0.as_slice().to_vec(), chol_factor(&self.sigma0)).unwrap()
    }
}

pub struct DenseRun {
    pub filtered: Vec<(DVector<f64>, DMatrix<f64>)>,
    pub predicted: Vec<(DVector<f64>, DMatrix<f64>)>,
    pub smoothed: Vec<(DVector<f64>, DMatrix<f64>)>,
}

/// Kalman filter and RTS smoother on the grid `0..ys.len()`; `predicted[0]`
/// is the prior of `x_0`.
pub fn kalman_rts(model: &LinearModel, ys: &[Option<Vec<f64>>]) -> DenseRun {
    let mut filtered: Vec<(DVector<f64>, DMatrix<f64>)> = Vec::new();
    let mut predicted = Vec::new();
    for (m, y) in ys.iter().enumerate() {
        let (mu, sigma) = if m == 0 {
            (model.mu0.clone(), model.sigma0.clone())
        } else {
            let (mf, sf) = &filtered[m - 1];
            (&model.f * mf, &model.f * sf * model.f.transpose() + &model.q)
        };
        let post = match y {
            Some(y) => {
                let y = vec_na(y);
                let s = &model.h * &sigma * model.h.transpose() + &model.r;
                let k = &sigma * model.h.transpose() * s.clone().try_inverse().unwrap();
                let mean = &mu + &k * (&y - &model.h * &mu);
                let cov = &sigma - &k * &s * k.transpose();
                (mean, cov)
            }
            None => (mu.clone(), sigma.clone()),
        };
        predicted.push((mu, sigma));
        filtered.push(post);
    }
    let n = filtered.len();
    let mut smoothed = vec![filtered[n - 1].clone()];
    for m in (0..n - 1).rev() {
        let (mf, sf) = &filtered[m];
        let (mp, sp) = &predicted[m + 1];
        let (ms, ss) = smoothed.last().unwrap();
        let g = sf * model.f.transpose() * sp.clone().try_inverse().unwrap();
        let mean = mf + &g * (ms - mp);
        let cov = sf + &g * (ss - sp) * g.transpose();
        smoothed.push((mean, cov));
    }
    smoothed.reverse();
    DenseRun {
        filtered,
        predicted,
        smoothed,
    }
}

/// Largest relative mean and covariance gaps between a square-root run and
/// the dense oracle.
pub fn worst_gap(ours: &[sqrt_slr::GaussianSqrt64], dense: &[(DVector<f64>, DMatrix<f64>)]) -> (f64, f64) {
    assert_eq!(ours.len(), dense.len());
    let mut worst = (0.0f64, 0.0f64);
    for (g, (mu, sigma)) in ours.iter().zip(dense) {
        worst.0 = worst.0.max(rel_vec(&vec_na(&g.mean), mu));
        worst.1 = worst.1.max(rel(&to_na(&g.covariance()), sigma));
    }
    worst
}

/// Exact rational conditioning on the covariances implied by the given
/// factors (`Π = L_Π L_Π^*`, `Ω = L_Ω L_Ω^*` formed without rounding),
/// rounded to f64 at the end.
pub fn exact_condition(
    pi_factor: &DMatrix<f64>,
    psi: &DMatrix<f64>,
    omega_factor: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let pi = q_gram(&q_of(pi_factor));
    let omega = q_gram(&q_of(omega_factor));
    let psi = q_of(psi);
    let psi_pi = q_mul(&psi, &pi);
    let p = q_add(&q_mul(&psi_pi, &q_t(&psi)), &omega);
    let x = q_solve(&p, &psi_pi);
    let gamma = q_t(&x);
    let sigma = q_sub(&pi, &q_mul(&gamma, &psi_pi));
    (q_to_f64(&p), q_to_f64(&gamma), q_to_f64(&sigma))
}

type Q = num_rational::BigRational;
type QMat = Vec<Vec<Q>>;

fn q_of(m: &DMatrix<f64>) -> QMat {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| Q::from_float(m[(i, j)]).expect("finite"))
                .collect()
        })
        .collect()
}

fn q_to_f64(m: &QMat) -> DMatrix<f64> {
    use num_traits::ToPrimitive;
    DMatrix::from_fn(m.len(), m[0].len(), |i, j| m[i][j].to_f64().unwrap())
}

fn q_t(m: &QMat) -> QMat {
    (0..m[0].len())
        .map(|j| m.iter().map(|r| r[j].clone()).collect())
        .collect()
}

fn q_mul(a: &QMat, b: &QMat) -> QMat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).fold(Q::from_integer(0.into()), |s, l| s + &a[i][l] * &b[l][j]))
                .collect()
        })
        .collect()
}

fn q_gram(l: &QMat) -> QMat {
    q_mul(l, &q_t(l))
}

fn q_add(a: &QMat, b: &QMat) -> QMat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

fn q_sub(a: &QMat, b: &QMat) -> QMat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect())
        .collect()
}

/// Solve `A X = B` by Gauss-Jordan elimination (A nonsingular).
fn q_solve(a: &QMat, b: &QMat) -> QMat {
    let n = a.len();
    let mut aug: QMat = a
        .iter()
        .zip(b)
        .map(|(r, s)| r.iter().chain(s).cloned().collect())
        .collect();
    let zero = Q::from_integer(0.into());
    for c in 0..n {
        let p = (c..n).find(|&r| aug[r][c] != zero).expect("nonsingular");
        aug.swap(c, p);
        let piv = aug[c][c].clone();
        for x in aug[c].iter_mut() {
            *x = &*x / &piv;
        }
        let row = aug[c].clone();
        for (r, other) in aug.iter_mut().enumerate() {
            if r != c && other[c] != zero {
                let f = other[c].clone();
                for (x, y) in other.iter_mut().zip(&row) {
                    *x = &*x - &f * y;
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Coordinated-turn drift `A(ω)` with `ṗ` in the position rows and `ω J ṗ`
/// in the velocity rows.
pub fn ct_drift(omega: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(5, 5);
    a[(0, 2)] = 1.0;
    a[(1, 3)] = 1.0;
    a[(2, 3)] = -omega;
    a[(3, 2)] = omega;
    a
}

pub fn ct_diffusion(sx: f64, sy: f64, so: f64) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(5, 3);
    b[(2, 0)] = sx;
    b[(3, 1)] = sy;
    b[(4, 2)] = so;
    b
}

/// Matrix exponential by scaling and squaring of a 30-term Taylor series.
pub fn expm_taylor(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.norm();
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);
    let n = a.nrows();
    let mut term = DMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `∫_0^dt exp(A s) B B^* exp(A^* s) ds` by Romberg extrapolation of the
/// composite trapezoid rule (2^levels panels on the finest level).
pub fn ct_gramian_romberg(omega: f64, dt: f64, b: &DMatrix<f64>, levels: usize) -> DMatrix<f64> {
    let a = ct_drift(omega);
    let g = |s: f64| {
        let e = expm_taylor(&(&a * s)) * b;
        &e * e.transpose()
    };
    let mut table: Vec<Vec<DMatrix<f64>>> = Vec::new();
    let mut trap = (g(0.0) + g(dt)) * (dt / 2.0);
    table.push(vec![trap.clone()]);
    for k in 1..=levels {
        let panels = 1usize << k;
        let h = dt / panels as f64;
        let mut mid = DMatrix::zeros(5, 5);
        for i in (1..panels).step_by(2) {
            mid += g(i as f64 * h);
        }
        trap = trap * 0.5 + mid * h;
        let mut row = vec![trap.clone()];
        for j in 1..=k {
            let f = 4f64.powi(j as i32);
            let next = (&row[j - 1] * f - &table[k - 1][j - 1]) / (f - 1.0);
            row.push(next);
        }
        table.push(row);
    }
    table[levels][levels].clone()
}

/// Smooth test function R^n -> R^d with seeded coefficients.
pub fn smooth_fn(n: usize, d: usize, seed: u64) -> impl Fn(&[f64]) -> sqrt_slr::Result<Vec<f64>> {
    let mut g = rng(seed);
    let a = gaussian(d, n, &mut g);
    let b = gaussian(d, n, &mut g) * 0.3;
    let c = gaussian_vec(d, &mut g);
    move |u: &[f64]| {
        let u = vec_na(u);
        let lin = &a * &u;
        let quad = &b * &u;
        Ok((0..d)
            .map(|i| lin[i].sin() + 0.5 * quad[i] * quad[i] + c[i] * lin[i])
            .collect())
    }
}

/// `a(u) = 3e4 u + 0.5 sin(u + i)` in three dimensions with unit prior and
/// unit noise: `‖Ψ̄ Π Ψ̄^*‖ / ‖Ω̄‖ ≈ 8.7e8`.
pub fn stiff_instance<T: sqrt_slr::Real>(route: ResidualRoute) -> sqrt_slr::Result<sqrt_slr::AffineApprox<T>> {
    let n = 3;
    let rule = cubature::spherical_radial::<T>(n).unwrap();
    let noise = NoiseModel::constant(TriangularFactor::<T>::identity(n));
    let k = T::of(3e4);
    let f = move |u: &[T]| {
        Ok(u.iter()
            .enumerate()
            .map(|(i, &x)| k * x + T::of(0.5) * (x + T::of(i as f64)).sin())
            .collect())
    };
    linearize(
        &vec![T::of(0.3); n],
        &TriangularFactor::identity(n),
        &rule,
        f,
        &noise,
        route,
    )
}
