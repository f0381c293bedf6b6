//! SL(2,R) cocycles: projective circle action, Furstenberg-Kesten Lyapunov
//! exponents, the order-2 expansion in the perturbation coefficient
//! Z' = (a-d) + i(b+c), the Schrodinger/Figotin-Pastur check, and the
//! matrix KAM loop through degree-1 trig conjugations.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::diffeo::{CircleDiffeo, RandomEnsemble};
use crate::error::{Error, Result};
use crate::kam::{KamStep, StepAction, StopReason};
use crate::lyapunov::LyapunovEstimate;
use crate::periodic::PeriodicMap;

pub const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        Mat2::new(1.0, 0.0, 0.0, 1.0)
    }

    /// R_alpha = rotation by pi * alpha.
    pub fn rotation(alpha: f64) -> Self {
        let (s, c) = (PI * alpha).sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(s * self.a, s * self.b, s * self.c, s * self.d)
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        if det.abs() < 1e-300 {
            return Err(Error::BadDeterminant { det });
        }
        Ok(Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    pub fn frob_norm(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    /// Operator 2-norm (largest singular value), closed form for 2x2.
    pub fn op_norm(&self) -> f64 {
        let f2 = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        let det = self.det();
        let gap = (f2 * f2 - 4.0 * det * det).max(0.0).sqrt();
        (0.5 * (f2 + gap)).sqrt()
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.a * x + self.b * y, self.c * x + self.d * y)
    }
}

/// M / sqrt(det M) and the Lyapunov shift (1/2) ln det M.
pub fn sl2_normalize(m: &Mat2) -> Result<(Mat2, f64)> {
    let det = m.det();
    if det <= 0.0 {
        return Err(Error::BadDeterminant { det });
    }
    Ok((m.scale(1.0 / det.sqrt()), 0.5 * det.ln()))
}

/// alpha minimizing ||M - R_alpha||: polar angle of (a+d, c-b), in units of
/// pi (i.e. R_alpha with this alpha is the nearest rotation).
pub fn nearest_rotation_angle(m: &Mat2) -> f64 {
    (m.c - m.b).atan2(m.a + m.d) / PI
}

/// The two perturbation coefficients of E = M - R_alpha entering the
/// order-2 theory, in the basis E(z) = (Z z + Z' conj(z)) / 2.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationZ {
    /// Z = (a+d) + i(b-c) = Tr(E) + i Tr(E R_{1/2}).
    pub z: Complex64,
    /// Z' = (a-d) + i(b+c); the coefficient driving the Lyapunov expansion.
    pub z_prime: Complex64,
}

impl PerturbationZ {
    pub fn from_e(e: &Mat2) -> Self {
        PerturbationZ {
            z: Complex64::new(e.a + e.d, e.b - e.c),
            z_prime: Complex64::new(e.a - e.d, e.b + e.c),
        }
    }

    /// |Z - (Tr E + i Tr(E R_{1/2}))|; identically 0 up to rounding.
    pub fn trace_identity_residual(e: &Mat2) -> f64 {
        let r_half = Mat2::rotation(0.5);
        let z_alt = Complex64::new(e.trace(), e.mul(&r_half).trace());
        (PerturbationZ::from_e(e).z - z_alt).norm()
    }
}

/// The projective circle diffeomorphism f_M defined by
/// e^{i pi f_M(x)} = M(e^{i pi x}) / |M(e^{i pi x})|, with the continuous
/// lift normalized so f_M(0) lies in (-1, 1].
pub fn projective_diffeo(m: &Mat2, n: usize, grid: usize) -> Result<CircleDiffeo> {
    if m.det() <= 0.0 {
        return Err(Error::BadDeterminant { det: m.det() });
    }
    let big = 2 * grid;
    let raw_angle = |x: f64| -> f64 {
        let (s, c) = (PI * x).sin_cos();
        let (wx, wy) = m.apply(c, s);
        wy.atan2(wx) / PI
    };
    let mut phi = Vec::with_capacity(big);
    let mut prev_raw = raw_angle(0.0);
    let mut lift = prev_raw;
    phi.push(lift);
    for j in 1..big {
        let x = j as f64 / big as f64;
        let raw = raw_angle(x);
        let mut delta = raw - prev_raw;
        // angles live mod 2; steps of a fine grid stay well inside (-1, 1)
        while delta > 1.0 {
            delta -= 2.0;
        }
        while delta < -1.0 {
            delta += 2.0;
        }
        lift += delta;
        prev_raw = raw;
        phi.push(lift - x);
    }
    let (map, residual) = PeriodicMap::fit_from_oversampled(&phi, n, grid);
    if residual > crate::diffeo::ALIASING_TOL {
        return Err(Error::Aliasing { residual, tol: crate::diffeo::ALIASING_TOL });
    }
    CircleDiffeo::new(map)
}

fn mat_per_sample_rng(seed: u64, sample: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    rng
}

/// Furstenberg-Kesten Monte Carlo: grow a unit vector, renormalizing every
/// 32 steps or when the norm leaves [2^-20, 2^20].
pub fn mc_matrix_lyapunov(
    m: &RandomEnsemble<Mat2>,
    n_steps: usize,
    n_samples: usize,
    seed: u64,
) -> LyapunovEstimate {
    assert!(n_steps >= 1 && n_samples >= 1);
    let per_sample: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = mat_per_sample_rng(seed, s as u64);
            let theta: f64 = rng.random();
            let (mut vy, mut vx) = (PI * theta).sin_cos();
            let mut acc = 0.0;
            for k in 0..n_steps {
                let i = m.pick(rng.random());
                let (nx, ny) = m.atoms()[i].1.apply(vx, vy);
                vx = nx;
                vy = ny;
                let norm2 = vx * vx + vy * vy;
                if k % 32 == 31 || !(1e-12..=1e12).contains(&norm2) {
                    let norm = norm2.sqrt();
                    acc += norm.ln();
                    vx /= norm;
                    vy /= norm;
                }
            }
            acc += (vx * vx + vy * vy).sqrt().ln();
            acc / n_steps as f64
        })
        .collect();
    let mean = per_sample.iter().sum::<f64>() / n_samples as f64;
    let var = per_sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        / (n_samples as f64 - 1.0).max(1.0);
    LyapunovEstimate {
        value: mean,
        std_error: (var / n_samples as f64).sqrt(),
        n_steps,
        n_samples,
        seed,
    }
}

/// Control-variate variant for near-rotation ensembles: subtracts the
/// conditionally centered first-order growth term so std_error scales as
/// eps^2. Needs the reference angles pairing each atom with its rotation.
pub fn mc_matrix_lyapunov_cv(
    m: &RandomEnsemble<Mat2>,
    alpha: &RandomEnsemble<f64>,
    n_steps: usize,
    n_samples: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if m.len() != alpha.len() {
        return Err(Error::Ensemble("matrix/angle ensembles must pair up".into()));
    }
    let atoms: Vec<(f64, Mat2, Mat2, Complex64)> = m
        .atoms()
        .iter()
        .zip(alpha.atoms())
        .map(|((w, mi), (_, ai))| {
            let e = mi.sub(&Mat2::rotation(*ai));
            let phase = Complex64::new(0.0, -PI * ai).exp();
            (*w, *mi, e, phase)
        })
        .collect();
    let per_sample: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = mat_per_sample_rng(seed, s as u64);
            let theta: f64 = rng.random();
            let (mut vy, mut vx) = (PI * theta).sin_cos();
            let mut acc = 0.0;
            for _ in 0..n_steps {
                let i = mpick(&atoms, rng.random());
                let z = Complex64::new(vx, vy);
                let mut mean_u = 0.0;
                let mut u_i = 0.0;
                for (j, (w, _, e, phase)) in atoms.iter().enumerate() {
                    let (ex, ey) = e.apply(vx, vy);
                    let u = (Complex64::new(ex, ey) * z.conj() * phase).re;
                    mean_u += w * u;
                    if j == i {
                        u_i = u;
                    }
                }
                let (nx, ny) = atoms[i].1.apply(vx, vy);
                let norm = (nx * nx + ny * ny).sqrt();
                acc += norm.ln() - (u_i - mean_u);
                vx = nx / norm;
                vy = ny / norm;
            }
            acc / n_steps as f64
        })
        .collect();
    let mean = per_sample.iter().sum::<f64>() / n_samples as f64;
    let var = per_sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        / (n_samples as f64 - 1.0).max(1.0);
    Ok(LyapunovEstimate {
        value: mean,
        std_error: (var / n_samples as f64).sqrt(),
        n_steps,
        n_samples,
        seed,
    })
}

fn mpick(atoms: &[(f64, Mat2, Mat2, Complex64)], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, (w, ..)) in atoms.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    atoms.len() - 1
}

#[derive(Debug, Clone, Copy)]
pub struct MatrixOrder2 {
    /// (1/8) E |Z' e^{i pi alpha} - E[Z' e^{i pi alpha}] (1 - e^{2 i pi alpha}) / (1 - E[e^{2 i pi alpha}])|^2.
    pub value: f64,
    /// Var(Z')/8 when alpha is a single deterministic angle.
    pub var_form: Option<f64>,
}

/// Order-2 expansion of Lambda for near-rotation SL2 ensembles, driven by
/// the coefficient Z' of E = M - R_alpha.
pub fn analytic_matrix_lyapunov_order2(
    m: &RandomEnsemble<Mat2>,
    alpha: &RandomEnsemble<f64>,
) -> Result<MatrixOrder2> {
    if m.len() != alpha.len() {
        return Err(Error::Ensemble("matrix/angle ensembles must pair up".into()));
    }
    let mut m2 = Complex64::ZERO; // E[e^{2 i pi alpha}]
    let mut mean_w = Complex64::ZERO; // E[Z' e^{i pi alpha}]
    let mut terms = Vec::with_capacity(m.len());
    for ((w, mi), (_, ai)) in m.atoms().iter().zip(alpha.atoms()) {
        let e = mi.sub(&Mat2::rotation(*ai));
        let zp = PerturbationZ::from_e(&e).z_prime;
        let ph1 = Complex64::new(0.0, PI * ai).exp();
        let ph2 = ph1 * ph1;
        m2 += w * ph2;
        mean_w += w * zp * ph1;
        terms.push((*w, zp * ph1, ph2));
    }
    let denom = Complex64::ONE - m2;
    if denom.norm() <= crate::cohomology::RESONANCE_FLOOR {
        return Err(Error::Resonance {
            q: 2,
            denom: denom.norm(),
            floor: crate::cohomology::RESONANCE_FLOOR,
        });
    }
    let corr = mean_w / denom;
    let value = terms
        .iter()
        .map(|(w, zph, ph2)| w * (zph - corr * (Complex64::ONE - ph2)).norm_sqr())
        .sum::<f64>()
        / 8.0;

    // Deterministic alpha: the correction factor collapses to E[Z'] and the
    // formula reduces to Var(Z')/8.
    let a0 = alpha.atoms()[0].1;
    let var_form = if alpha.values().all(|&a| (a - a0).abs() < 1e-15) {
        let ph1 = Complex64::new(0.0, PI * a0).exp();
        let mean_zp = mean_w / ph1;
        let var = m
            .atoms()
            .iter()
            .zip(alpha.atoms())
            .map(|((w, mi), (_, ai))| {
                let e = mi.sub(&Mat2::rotation(*ai));
                let zp = PerturbationZ::from_e(&e).z_prime;
                w * (zp - mean_zp).norm_sqr()
            })
            .sum::<f64>();
        Some(var / 8.0)
    } else {
        None
    };
    Ok(MatrixOrder2 { value, var_form })
}

/// Schrodinger transfer matrices M = ((E - gV, -1), (1, 0)) and the
/// Figotin-Pastur asymptotic Lambda = Var(V) g^2 / (2 (4 - E^2)).
pub fn schrodinger_lyapunov(
    e_energy: f64,
    v: &RandomEnsemble<f64>,
    g: f64,
    n_steps: usize,
    n_samples: usize,
    seed: u64,
) -> Result<(LyapunovEstimate, f64)> {
    if !(-2.0..=2.0).contains(&e_energy) || e_energy.abs() >= 2.0 || e_energy == 0.0 {
        return Err(Error::Domain(format!(
            "energy must lie in (-2,2) excluding 0, got {e_energy}"
        )));
    }
    let m = v.map(|&vi| Mat2::new(e_energy - g * vi, -1.0, 1.0, 0.0));
    let lambda_mc = mc_matrix_lyapunov(&m, n_steps, n_samples, seed);
    let mean_v = v.expect(|&x| x);
    let var_v = v.expect(|&x| (x - mean_v) * (x - mean_v));
    let lambda_fp = var_v * g * g / (2.0 * (4.0 - e_energy * e_energy));
    Ok((lambda_mc, lambda_fp))
}

/// Sum_{i,j} w_i w_j || M_i M_j - M_j M_i ||^2 (operator norm), the exact
/// finite-sum form of E || M Mt - Mt M ||^2.
pub fn matrix_commutator_defect(m: &RandomEnsemble<Mat2>) -> f64 {
    let mut acc = 0.0;
    for (wi, mi) in m.atoms() {
        for (wj, mj) in m.atoms() {
            let comm = mi.mul(mj).sub(&mj.mul(mi));
            acc += wi * wj * comm.op_norm().powi(2);
        }
    }
    acc
}

/// Degree-1 trig polynomial a + b cos(2 pi x) + c sin(2 pi x); the space T1
/// in which the matrix conjugations live.
#[derive(Debug, Clone, Copy, Default)]
pub struct Trig1 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Trig1 {
    pub fn eval(&self, x: f64) -> f64 {
        let ang = std::f64::consts::TAU * x;
        self.a + self.b * ang.cos() + self.c * ang.sin()
    }

    pub fn sup_norm(&self) -> f64 {
        self.a.abs() + self.b.hypot(self.c)
    }

    /// C^k norm: derivatives multiply the oscillating amplitude by 2 pi.
    pub fn ck_norm(&self, k: u32) -> f64 {
        let r = self.b.hypot(self.c);
        let mut best = self.a.abs() + r;
        for j in 1..=k {
            best = best.max(std::f64::consts::TAU.powi(j as i32) * r);
        }
        best
    }

    /// Complex coefficient of e^{2 i pi x}.
    pub fn mode1(&self) -> Complex64 {
        Complex64::new(self.b / 2.0, -self.c / 2.0)
    }

    pub fn from_mode1(a: f64, c1: Complex64) -> Self {
        Trig1 { a, b: 2.0 * c1.re, c: -2.0 * c1.im }
    }
}

/// The degree-1 part zeta_1 of f_M - r_alpha:
/// zeta_1(x) = (1/2pi) [ Im(Z e^{-i pi alpha}) + Im(Z' e^{-i pi (2x + alpha)}) ].
pub fn zeta1(m: &Mat2, alpha: f64) -> Trig1 {
    let e = m.sub(&Mat2::rotation(alpha));
    let pz = PerturbationZ::from_e(&e);
    let ph = Complex64::new(0.0, -PI * alpha).exp();
    let w = pz.z_prime * ph;
    // Im(w e^{-2 i pi x}) = Im(w) cos(2 pi x) - Re(w) sin(2 pi x)
    Trig1 {
        a: (pz.z * ph).im / (2.0 * PI),
        b: w.im / (2.0 * PI),
        c: -w.re / (2.0 * PI),
    }
}

/// Builds P (normalized to SL2) whose projective action is
/// Id + target + O(||target||^2), by the degree-1 coefficient matching
/// c - b = 2 pi A, c + b = 2 pi B, d - a = 2 pi C.
pub fn trig1_conjugator(target: &Trig1) -> Result<Mat2> {
    let e = Mat2::new(
        -PI * target.c,
        PI * (target.b - target.a),
        PI * (target.b + target.a),
        PI * target.c,
    );
    let p = Mat2::identity().add(&e);
    Ok(sl2_normalize(&p)?.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixKamConfig {
    /// Ellipticity margin: require ||Tr M||_{L^2} <= 2 - delta.
    pub delta: f64,
    /// Calibrated obstruction constant for the T1 dichotomy.
    pub c0: f64,
    pub max_iters: usize,
    pub convergence_tol: f64,
    pub mc_steps: usize,
    pub mc_samples: usize,
}

impl Default for MatrixKamConfig {
    fn default() -> Self {
        MatrixKamConfig {
            delta: 0.1,
            c0: 1.0,
            max_iters: 20,
            convergence_tol: 1e-9,
            mc_steps: 100_000,
            mc_samples: 64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixKamReport {
    pub steps: Vec<KamStep>,
    pub stop_reason: StopReason,
    /// Composed conjugator.
    pub p: Mat2,
    /// sqrt( sum w_i ||M_i - R_{alpha_i}||^2 ) at stop (operator norm).
    pub final_dist: f64,
    pub lambda: LyapunovEstimate,
    pub ratio: f64,
    pub final_ensemble: RandomEnsemble<Mat2>,
}

/// sqrt( sum w_i || M_i - R_{nearest alpha_i} ||^2 ).
pub fn ensemble_rotation_distance(m: &RandomEnsemble<Mat2>) -> f64 {
    m.expect(|mi| {
        let alpha = nearest_rotation_angle(mi);
        mi.sub(&Mat2::rotation(alpha)).op_norm().powi(2)
    })
    .sqrt()
}

fn trace_l2(m: &RandomEnsemble<Mat2>) -> f64 {
    m.expect(|mi| mi.trace().powi(2)).sqrt()
}

pub fn matrix_conjugation_step(m: &RandomEnsemble<Mat2>) -> Result<(Mat2, RandomEnsemble<Mat2>)> {
    // zeta_bar_1 = E[zeta_1 o r_{-alpha}] on the degree-1 mode, then the
    // T1 small-divisor solve eta_hat(1) = zbar_hat(1) / (1 - E[e^{-2 i pi alpha}]).
    let mut m1 = Complex64::ZERO;
    let mut zbar_mode = Complex64::ZERO;
    for (w, mi) in m.atoms() {
        let alpha = nearest_rotation_angle(mi);
        let z1 = zeta1(mi, alpha);
        let shift = Complex64::new(0.0, -std::f64::consts::TAU * alpha).exp();
        zbar_mode += w * z1.mode1() * shift;
        m1 += w * Complex64::new(0.0, std::f64::consts::TAU * alpha).exp();
    }
    let denom = Complex64::ONE - m1.conj();
    if denom.norm() <= crate::cohomology::RESONANCE_FLOOR {
        return Err(Error::Resonance {
            q: 1,
            denom: denom.norm(),
            floor: crate::cohomology::RESONANCE_FLOOR,
        });
    }
    let eta = Trig1::from_mode1(0.0, zbar_mode / denom);
    let target = Trig1 { a: 0.0, b: -eta.b, c: -eta.c };
    let p = trig1_conjugator(&target)?;
    let p_inv = p.inverse()?;
    let m_new = m.map(|mi| p.mul(mi).mul(&p_inv));
    Ok((p, m_new))
}

/// ||| zeta_1 |||_0 over the ensemble.
pub fn zeta1_triple_norm(m: &RandomEnsemble<Mat2>, k: u32) -> f64 {
    m.expect(|mi| {
        let alpha = nearest_rotation_angle(mi);
        zeta1(mi, alpha).ck_norm(k).powi(2)
    })
    .sqrt()
}

/// Matrix KAM loop: repeatedly conjugate the ensemble toward rotations by
/// SL2 matrices built from degree-1 trig data, stopping on convergence,
/// obstruction by Lambda (then one final step), ellipticity loss, or the
/// iteration cap.
pub fn matrix_kam(
    m: &RandomEnsemble<Mat2>,
    config: &MatrixKamConfig,
    seed: u64,
) -> Result<MatrixKamReport> {
    for mi in m.values() {
        if (mi.det() - 1.0).abs() > 1e-12 {
            return Err(Error::BadDeterminant { det: mi.det() });
        }
    }
    let tr = trace_l2(m);
    if tr > 2.0 - config.delta {
        return Err(Error::Ellipticity { trace_l2: tr, bound: 2.0 - config.delta });
    }

    let lambda = mc_matrix_lyapunov(m, config.mc_steps, config.mc_samples, seed);
    let lambda_cons = lambda.value.max(0.0) + 3.0 * lambda.std_error;

    let mut p_total = Mat2::identity();
    let mut cur = m.clone();
    let mut steps = Vec::new();
    let mut stop_reason = StopReason::MaxIters;

    for n in 1..=config.max_iters {
        let norm0 = zeta1_triple_norm(&cur, 0);
        let norm_k = zeta1_triple_norm(&cur, 2);
        let dist = ensemble_rotation_distance(&cur);
        let mut step = KamStep { n, t_n: 0.0, norm0, norm_k, action: StepAction::Iterated };

        if dist < config.convergence_tol {
            step.action = StepAction::Stopped;
            steps.push(step);
            stop_reason = StopReason::Converged;
            break;
        }
        if trace_l2(&cur) > 2.0 - config.delta {
            step.action = StepAction::Stopped;
            steps.push(step);
            stop_reason = StopReason::LeftU0;
            break;
        }
        if lambda_cons.sqrt() >= (config.c0 / 3.0) * norm_k.powf(1.5) {
            step.action = StepAction::Stopped;
            steps.push(step);
            match matrix_conjugation_step(&cur) {
                Ok((p, m_new)) => {
                    p_total = p.mul(&p_total);
                    cur = m_new;
                    stop_reason = StopReason::Obstruction;
                }
                Err(Error::Resonance { .. }) => stop_reason = StopReason::Resonance,
                Err(e) => return Err(e),
            }
            break;
        }

        match matrix_conjugation_step(&cur) {
            Ok((p, m_new)) => {
                p_total = p.mul(&p_total);
                cur = m_new;
                steps.push(step);
            }
            Err(Error::Resonance { .. }) => {
                step.action = StepAction::Stopped;
                steps.push(step);
                stop_reason = StopReason::Resonance;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let final_dist = ensemble_rotation_distance(&cur);
    // The obstruction stop can fire one step short of numerical convergence
    // when Lambda is zero but its MC estimate is not; the converged state
    // wins the dichotomy.
    if stop_reason == StopReason::Obstruction && final_dist < config.convergence_tol {
        stop_reason = StopReason::Converged;
    }
    let ratio = if lambda.value.abs() > 0.0 {
        final_dist / lambda.value.abs().sqrt()
    } else {
        f64::INFINITY
    };
    Ok(MatrixKamReport {
        steps,
        stop_reason,
        p: p_total,
        final_dist,
        lambda,
        ratio,
        final_ensemble: cur,
    })
}

/// Calibrates the matrix-track obstruction constant as twice the largest
/// observed one-step ratio |||zeta1_new|||_0 / |||zeta1|||_2^{3/2} over
/// planted (Lambda = 0) ensembles near rotations.
pub fn calibrate_matrix_c0(seed: u64) -> Result<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..8 {
        let s = Mat2::new(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        );
        let a1 = 0.15 + 0.3 * rng.random::<f64>();
        let a2 = 0.55 + 0.3 * rng.random::<f64>();
        for &eps in &[0.04, 0.02, 0.01] {
            let (p0, _) = sl2_normalize(&Mat2::identity().add(&s.scale(eps)))?;
            let p0_inv = p0.inverse()?;
            let m = RandomEnsemble::new(vec![
                (0.5, p0_inv.mul(&Mat2::rotation(a1)).mul(&p0)),
                (0.5, p0_inv.mul(&Mat2::rotation(a2)).mul(&p0)),
            ])?;
            let norm_k = zeta1_triple_norm(&m, 2);
            let (_, m_new) = matrix_conjugation_step(&m)?;
            let norm_new = zeta1_triple_norm(&m_new, 0);
            if norm_k > 1e-14 {
                worst = worst.max(norm_new / norm_k.powf(1.5));
            }
        }
    }
    Ok(2.0 * worst)
}

/// Calibrates A0: the largest observed ratio between the matrix distance
/// ||M - R_alpha|| and the sup distance ||f_M - r_alpha||_0 over a sample
/// of near-rotation SL2 matrices (operator norm; Lemma-6.1-style
/// equivalence constant).
pub fn calibrate_a0(n: usize, grid: usize, n_samples: usize, seed: u64) -> Result<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let alpha: f64 = rng.random::<f64>() * 0.8 + 0.1;
        let eps = 0.005 + 0.045 * rng.random::<f64>();
        let s = Mat2::new(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        );
        let m0 = Mat2::rotation(alpha).add(&s.scale(eps));
        let (m, _) = sl2_normalize(&m0)?;
        let a_star = nearest_rotation_angle(&m);
        let num = m.sub(&Mat2::rotation(a_star)).op_norm();
        let f = projective_diffeo(&m, n, grid)?;
        let den = f.dist_to_rotation(a_star, 0);
        if den > 1e-14 {
            worst = worst.max(num / den);
        }
    }
    Ok(worst)
}
