//! KAM linearization scheme for random circle diffeomorphisms: the
//! obstruction dichotomy, the smoothed conjugation step with truncation
//! schedule T_n = 2^{Q^n}, and the commutator defect.

use serde::Serialize;

use crate::cohomology::solve_ubar;
use crate::diffeo::{CircleDiffeo, RandomEnsemble};
use crate::error::{Error, Result};
use crate::lyapunov::{mc_lyapunov, zeta_bar, LyapunovEstimate};
use crate::periodic::PeriodicMap;

#[derive(Debug, Clone, Serialize)]
pub struct KamConfig {
    /// Working norm index K (>= 4 sigma + 7 for the profile's sigma).
    pub k: u32,
    /// Truncation schedule exponent Q in (1, 3/2).
    pub q_exp: f64,
    /// Calibrated obstruction constant.
    pub c0: f64,
    pub max_iters: usize,
    pub convergence_tol: f64,
    /// MC budget for the lambda estimate feeding the obstruction test.
    pub mc_steps: usize,
    pub mc_samples: usize,
}

impl Default for KamConfig {
    fn default() -> Self {
        KamConfig {
            k: 11, // 4 sigma + 7 at sigma = 1
            q_exp: 4.0 / 3.0,
            c0: 1.0,
            max_iters: 20,
            convergence_tol: 1e-9,
            mc_steps: 100_000,
            mc_samples: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    Obstruction,
    LeftU0,
    MaxIters,
    Resonance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepAction {
    Iterated,
    Stopped,
}

#[derive(Debug, Clone, Serialize)]
pub struct KamStep {
    pub n: usize,
    pub t_n: f64,
    pub norm0: f64,
    pub norm_k: f64,
    pub action: StepAction,
}

#[derive(Debug, Clone)]
pub struct KamReport {
    pub steps: Vec<KamStep>,
    pub stop_reason: StopReason,
    /// Composed conjugacy h = g_{n-1} o ... o g_0.
    pub h: CircleDiffeo,
    /// || d_0(h f h^{-1}, r_alpha) ||_{L^2(Omega)} at stop.
    pub final_d0: f64,
    pub lambda: LyapunovEstimate,
    pub ratio: f64,
    /// The ensemble after all conjugations (diagnostic).
    pub final_ensemble: RandomEnsemble<CircleDiffeo>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DichotomyBranch {
    SmallByLambda,
    SmallByPower,
}

/// ||| z |||_k = sqrt( sum_i w_i ||z_i||_k^2 ), the L^2(Omega) norm of the
/// C^k norm.
pub fn triple_norm(z: &RandomEnsemble<PeriodicMap>, k: u32) -> f64 {
    z.expect(|zi| zi.ck_norm(k).powi(2)).sqrt()
}

pub(crate) fn zeta_ensemble(
    f: &RandomEnsemble<CircleDiffeo>,
    alpha: &RandomEnsemble<f64>,
) -> RandomEnsemble<PeriodicMap> {
    let zetas: Vec<(f64, PeriodicMap)> = f
        .atoms()
        .iter()
        .zip(alpha.atoms())
        .map(|((w, fi), (_, ai))| (*w, fi.phi().add_constant(-ai)))
        .collect();
    RandomEnsemble::new(zetas).expect("weights shared with f")
}

fn zeta_triples(
    f: &RandomEnsemble<CircleDiffeo>,
    alpha: &RandomEnsemble<f64>,
) -> Vec<(f64, f64, PeriodicMap)> {
    f.atoms()
        .iter()
        .zip(alpha.atoms())
        .map(|((w, fi), (_, ai))| (*w, *ai, fi.phi().add_constant(-ai)))
        .collect()
}

/// Every atom inside U0 = { |f' - 1| < 1/2 }; boundary counts as outside.
pub fn in_u0(f: &RandomEnsemble<CircleDiffeo>) -> bool {
    f.values().all(|fi| fi.phi().derivative().sup_norm() < 0.5)
}

fn conjugation_step(
    f: &RandomEnsemble<CircleDiffeo>,
    alpha: &RandomEnsemble<f64>,
    truncation: Option<f64>,
) -> Result<(CircleDiffeo, RandomEnsemble<CircleDiffeo>)> {
    let zetas = zeta_triples(f, alpha);
    let mut eta = solve_ubar(&zeta_bar(&zetas), alpha)?;
    if let Some(t) = truncation {
        eta = eta.smooth_split(t).0;
    }
    let eta_d_sup = eta.derivative().sup_norm();
    if eta_d_sup >= 1.0 {
        return Err(Error::ConjugationTooLarge { norm: eta_d_sup });
    }
    let g = CircleDiffeo::new(eta.scale(-1.0))?;
    let g_inv = g.invert()?;
    let f_new = f.try_map(|fi| g.compose(fi)?.compose(&g_inv))?;
    Ok((g, f_new))
}

/// One full (un-truncated) conjugation g = Id - Ubar(zeta_bar). Returns the
/// conjugator, the conjugated ensemble, and which side of the dichotomy the
/// new perturbation size lands on.
pub fn first_conjugation(
    f: &RandomEnsemble<CircleDiffeo>,
    alpha: &RandomEnsemble<f64>,
    lambda: f64,
) -> Result<(CircleDiffeo, RandomEnsemble<CircleDiffeo>, DichotomyBranch)> {
    let (g, f_new) = conjugation_step(f, alpha, None)?;
    let norm_new = triple_norm(&zeta_ensemble(&f_new, alpha), 0);
    let branch = if norm_new <= 3.0 * lambda.abs().sqrt() {
        DichotomyBranch::SmallByLambda
    } else {
        DichotomyBranch::SmallByPower
    };
    Ok((g, f_new, branch))
}

/// The smoothed step g_T = Id - S_T(Ubar zeta_bar).
pub fn smoothed_conjugation(
    f: &RandomEnsemble<CircleDiffeo>,
    alpha: &RandomEnsemble<f64>,
    t: f64,
) -> Result<(CircleDiffeo, RandomEnsemble<CircleDiffeo>)> {
    conjugation_step(f, alpha, Some(t))
}

/// sqrt( sum_i w_i || phi_i - alpha_i ||_0^2 ).
pub fn ensemble_d0(f: &RandomEnsemble<CircleDiffeo>, alpha: &RandomEnsemble<f64>) -> f64 {
    triple_norm(&zeta_ensemble(f, alpha), 0)
}

/// The KAM loop of the linearization theorem: iterate smoothed
/// conjugations with T_n = 2^{Q^n} until convergence, an obstruction
/// (then one final plain conjugation), leaving U0, or the iteration cap.
pub fn kam_run(
    f: &RandomEnsemble<CircleDiffeo>,
    alpha: &RandomEnsemble<f64>,
    config: &KamConfig,
    seed: u64,
) -> Result<KamReport> {
    let lambda = mc_lyapunov(f, config.mc_steps, config.mc_samples, seed);
    let lambda_cons = lambda.value.abs() + 3.0 * lambda.std_error;

    let mut h = CircleDiffeo::identity(
        f.atoms()[0].1.phi().degree(),
        f.atoms()[0].1.phi().grid_size(),
    );
    let mut cur = f.clone();
    let mut steps = Vec::new();
    let mut stop_reason = StopReason::MaxIters;

    for n in 1..=config.max_iters {
        let t_n = 2f64.powf(config.q_exp.powi(n as i32));
        let zetas = zeta_ensemble(&cur, alpha);
        let norm0 = triple_norm(&zetas, 0);
        let norm_k = triple_norm(&zetas, config.k);
        let mut step = KamStep { n, t_n, norm0, norm_k, action: StepAction::Iterated };

        if norm0 < config.convergence_tol {
            step.action = StepAction::Stopped;
            steps.push(step);
            stop_reason = StopReason::Converged;
            break;
        }
        if !in_u0(&cur) {
            step.action = StepAction::Stopped;
            steps.push(step);
            stop_reason = StopReason::LeftU0;
            break;
        }
        if lambda_cons.sqrt() >= (config.c0 / 3.0) * norm_k.powf(1.5) {
            step.action = StepAction::Stopped;
            steps.push(step);
            match first_conjugation(&cur, alpha, lambda.value) {
                Ok((g, f_new, _)) => {
                    h = g.compose(&h)?;
                    cur = f_new;
                    stop_reason = StopReason::Obstruction;
                }
                Err(Error::Resonance { .. }) => stop_reason = StopReason::Resonance,
                Err(e) => return Err(e),
            }
            break;
        }

        match smoothed_conjugation(&cur, alpha, t_n) {
            Ok((g, f_new)) => {
                h = g.compose(&h)?;
                cur = f_new;
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

    let final_d0 = ensemble_d0(&cur, alpha);
    // The obstruction stop can fire one step short of numerical convergence
    // when lambda is zero but its MC estimate is not; the converged state
    // wins the dichotomy.
    if stop_reason == StopReason::Obstruction && final_d0 < config.convergence_tol {
        stop_reason = StopReason::Converged;
    }
    let ratio = if lambda.value.abs() > 0.0 {
        final_d0 / lambda.value.abs().sqrt()
    } else {
        f64::INFINITY
    };
    Ok(KamReport {
        steps,
        stop_reason,
        h,
        final_d0,
        lambda,
        ratio,
        final_ensemble: cur,
    })
}

/// sqrt( sum_{i,j} w_i w_j d_0(f_i o f_j, f_j o f_i)^2 ): the L^2 commutator
/// defect over an independent pair from the ensemble.
pub fn commutator_defect(f: &RandomEnsemble<CircleDiffeo>) -> Result<f64> {
    let mut acc = 0.0;
    for (wi, fi) in f.atoms() {
        for (wj, fj) in f.atoms() {
            let d = fi.compose(fj)?.dist_k(&fj.compose(fi)?, 0);
            acc += wi * wj * d * d;
        }
    }
    Ok(acc.sqrt())
}

/// Calibrates the obstruction constant C0 as twice the largest observed
/// contraction ratio |||zeta_new|||_0 / |||zeta|||_{k0}^{3/2} over a family
/// of coboundary perturbations (the lambda = 0 side of the dichotomy).
pub fn calibrate_c0(
    alpha: &RandomEnsemble<f64>,
    k0: u32,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    // Conjugation spreads spectra; double the resolution so the calibration
    // family never trips the aliasing check.
    let (n, m) = (2 * n, 2 * m);
    let mut worst = 0.0f64;
    for _ in 0..8 {
        let raw = random_trig_poly(&mut rng, 6, n, m, 0.5);
        let u = raw.scale(0.5 / raw.sup_norm());
        for &eps in &[0.04, 0.02, 0.01] {
            let f = alpha.try_map(|&a| {
                let zeta = u.shift(a).sub(&u).scale(eps);
                CircleDiffeo::new(zeta.add_constant(a))
            })?;
            let zetas = zeta_ensemble(&f, alpha);
            let norm_k0 = triple_norm(&zetas, k0);
            let (_, f_new, _) = first_conjugation(&f, alpha, 0.0)?;
            let norm_new = triple_norm(&zeta_ensemble(&f_new, alpha), 0);
            worst = worst.max(norm_new / norm_k0.powf(1.5));
        }
    }
    Ok(2.0 * worst)
}

/// Random real trig polynomial with geometrically decaying coefficients.
pub fn random_trig_poly(
    rng: &mut impl rand::Rng,
    degree: usize,
    n: usize,
    m: usize,
    decay: f64,
) -> PeriodicMap {
    use num_complex::Complex64;
    let mut coeffs = vec![Complex64::ZERO; 2 * n + 1];
    for p in 1..=degree.min(n) {
        let re: f64 = rng.random::<f64>() * 2.0 - 1.0;
        let im: f64 = rng.random::<f64>() * 2.0 - 1.0;
        let c = Complex64::new(re, im) * decay.powi(p as i32);
        coeffs[n + p] = c;
        coeffs[n - p] = c.conj();
    }
    PeriodicMap::from_coeffs(&coeffs, m)
}
