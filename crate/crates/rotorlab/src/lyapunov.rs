//! Lyapunov exponents and stationary measures for random circle
//! diffeomorphisms: Monte Carlo ground truth and the order-2 analytic
//! expansion lambda2 = -1/2 E int (zeta' + eta' - eta' o r_alpha)^2 dx.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cohomology::solve_ubar;
use crate::diffeo::{CircleDiffeo, RandomEnsemble};
use crate::error::{Error, Result};
use crate::periodic::PeriodicMap;

#[derive(Debug, Clone, Copy)]
pub struct LyapunovEstimate {
    /// Mean over samples of (1/n) ln g_n'(x0), nats per step.
    pub value: f64,
    pub std_error: f64,
    pub n_steps: usize,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct StationaryHistogram {
    pub masses: Vec<f64>,
    pub n_draws: usize,
}

/// Number of independent chains mc_stationary splits its draws over.
const STATIONARY_CHAINS: usize = 64;

fn per_sample_rng(seed: u64, sample: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    rng
}

fn summarize(per_sample: &[f64], n_steps: usize, n_samples: usize, seed: u64) -> LyapunovEstimate {
    let mean = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    let var = per_sample
        .iter()
        .map(|v| (v - mean).powi(2))
        .sum::<f64>()
        / (per_sample.len() as f64 - 1.0).max(1.0);
    LyapunovEstimate {
        value: mean,
        std_error: (var / per_sample.len() as f64).sqrt(),
        n_steps,
        n_samples,
        seed,
    }
}

fn run_chains(
    f: &RandomEnsemble<CircleDiffeo>,
    n_steps: usize,
    n_samples: usize,
    seed: u64,
    control_variate: bool,
) -> LyapunovEstimate {
    assert!(n_steps >= 1 && n_samples >= 1);
    let per_sample: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = per_sample_rng(seed, s as u64);
            let mut x: f64 = rng.random();
            let mut acc = 0.0;
            for _ in 0..n_steps {
                let i = f.pick(rng.random());
                if control_variate {
                    // ln f' minus its conditionally-mean-zero first-order
                    // part; unbiased, variance O(eps^4) per step.
                    let mut mean_d = 0.0;
                    let mut chosen = (0.0, 0.0);
                    for (j, (w, fj)) in f.atoms().iter().enumerate() {
                        let (v, d) = fj.phi().eval_both(x);
                        mean_d += w * d;
                        if j == i {
                            chosen = (v, d);
                        }
                    }
                    acc += (1.0 + chosen.1).ln() - (chosen.1 - mean_d);
                    x = (x + chosen.0).rem_euclid(1.0);
                } else {
                    let (v, d) = f.atoms()[i].1.phi().eval_both(x);
                    acc += (1.0 + d).ln();
                    x = (x + v).rem_euclid(1.0);
                }
            }
            acc / n_steps as f64
        })
        .collect();
    summarize(&per_sample, n_steps, n_samples, seed)
}

/// Plain Monte Carlo estimator of lambda: independent chains
/// x_{k+1} = f_k(x_k) accumulating sum of ln f_k'(x_k).
pub fn mc_lyapunov(
    f: &RandomEnsemble<CircleDiffeo>,
    n_steps: usize,
    n_samples: usize,
    seed: u64,
) -> LyapunovEstimate {
    run_chains(f, n_steps, n_samples, seed, false)
}

/// Control-variate variant: subtracts the conditionally centered
/// first-order term phi_i'(x) - E_j phi_j'(x) from each increment. Same
/// expectation as [`mc_lyapunov`], with std_error O(eps^2) instead of
/// O(eps), which the order-3 scaling experiments require.
pub fn mc_lyapunov_cv(
    f: &RandomEnsemble<CircleDiffeo>,
    n_steps: usize,
    n_samples: usize,
    seed: u64,
) -> LyapunovEstimate {
    run_chains(f, n_steps, n_samples, seed, true)
}

/// Histogram of the chain after burn-in, split over independent chains with
/// per-chain derived seeds; deterministic for a given seed.
pub fn mc_stationary(
    f: &RandomEnsemble<CircleDiffeo>,
    burn_in: usize,
    n_draws: usize,
    bins: usize,
    seed: u64,
) -> StationaryHistogram {
    assert!(n_draws >= 1 && bins >= 1);
    let chains = STATIONARY_CHAINS.min(n_draws);
    let counts: Vec<Vec<u64>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let draws = n_draws / chains + usize::from(c < n_draws % chains);
            let mut rng = per_sample_rng(seed, c as u64);
            let mut x: f64 = rng.random();
            let mut local = vec![0u64; bins];
            for _ in 0..burn_in {
                let i = f.pick(rng.random());
                x = (x + f.atoms()[i].1.phi().eval(x)).rem_euclid(1.0);
            }
            for _ in 0..draws {
                let i = f.pick(rng.random());
                x = (x + f.atoms()[i].1.phi().eval(x)).rem_euclid(1.0);
                let b = ((x * bins as f64) as usize).min(bins - 1);
                local[b] += 1;
            }
            local
        })
        .collect();
    let mut masses = vec![0.0; bins];
    for local in counts {
        for (b, k) in local.into_iter().enumerate() {
            masses[b] += k as f64;
        }
    }
    for v in &mut masses {
        *v /= n_draws as f64;
    }
    StationaryHistogram { masses, n_draws }
}

impl StationaryHistogram {
    /// int g dmu against the histogram, evaluating g at bin centers.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let bins = self.masses.len() as f64;
        self.masses
            .iter()
            .enumerate()
            .map(|(b, &mass)| mass * g((b as f64 + 0.5) / bins))
            .sum()
    }
}

/// Checks that the diffeo ensemble and the angle ensemble pair up atom by
/// atom, and extracts zeta_i = phi_i - alpha_i.
fn extract_zetas(
    f: &RandomEnsemble<CircleDiffeo>,
    alpha: &RandomEnsemble<f64>,
) -> Result<Vec<(f64, f64, PeriodicMap)>> {
    if f.len() != alpha.len() {
        return Err(Error::Ensemble(
            "diffeo and angle ensembles must have matching atoms".into(),
        ));
    }
    let mut out = Vec::with_capacity(f.len());
    for ((wf, fi), (wa, ai)) in f.atoms().iter().zip(alpha.atoms()) {
        if (wf - wa).abs() > 1e-12 {
            return Err(Error::Ensemble("mismatched atom weights".into()));
        }
        out.push((*wf, *ai, fi.phi().add_constant(-ai)));
    }
    Ok(out)
}

/// zeta_bar = E[zeta o r_{-alpha}], exact on coefficients.
pub fn zeta_bar(zetas: &[(f64, f64, PeriodicMap)]) -> PeriodicMap {
    let mut acc: Option<PeriodicMap> = None;
    for (w, a, z) in zetas {
        let term = z.shift(-a).scale(*w);
        acc = Some(match acc {
            None => term,
            Some(prev) => prev.add(&term),
        });
    }
    acc.expect("non-empty ensemble")
}

/// h1 = 1 - (Ubar zeta_bar)': the order-1 stationary density. Integrates
/// to 1 exactly (the derivative has zero mean).
pub fn stationary_density_order1(
    f: &RandomEnsemble<CircleDiffeo>,
    alpha: &RandomEnsemble<f64>,
) -> Result<PeriodicMap> {
    let zetas = extract_zetas(f, alpha)?;
    let eta = solve_ubar(&zeta_bar(&zetas), alpha)?;
    Ok(eta.derivative().scale(-1.0).add_constant(1.0))
}

/// int cos(2 pi x) h(x) dx for a periodic density h.
pub fn cos_moment(h: &PeriodicMap) -> f64 {
    h.coeff(1).re
}

#[derive(Debug, Clone, Copy)]
pub struct Order2 {
    /// -1/2 sum_i w_i int (zeta_i' + eta' - eta' o r_{alpha_i})^2 dx.
    pub direct: f64,
    /// The same quantity summed mode-wise (Parseval).
    pub parseval: f64,
}

impl Order2 {
    pub fn value(&self) -> f64 {
        self.direct
    }

    pub fn agreement(&self) -> f64 {
        (self.direct - self.parseval).abs()
    }
}

/// Order-2 Lyapunov expansion. eta is built coefficient-wise as
/// eta_hat(p) = E[zeta_hat(p) e^{-2 i pi p alpha}] / (1 - E[e^{-2 i pi p alpha}])
/// (that is, eta = Ubar zeta_bar); both the direct-integral and Parseval
/// forms are returned and must agree to 1e-10.
pub fn analytic_lyapunov_order2(
    f: &RandomEnsemble<CircleDiffeo>,
    alpha: &RandomEnsemble<f64>,
) -> Result<Order2> {
    let zetas = extract_zetas(f, alpha)?;
    let eta = solve_ubar(&zeta_bar(&zetas), alpha)?;
    let eta_d = eta.derivative();

    let mut direct = 0.0;
    let mut parseval = 0.0;
    for (w, a, z) in &zetas {
        let g = z.derivative().add(&eta_d).sub(&eta_d.shift(*a));
        direct += w * g.dot(&g);

        let n = z.degree() as i64;
        let mut s = 0.0;
        for p in -n..=n {
            if p == 0 {
                continue;
            }
            let rot = num_complex::Complex64::new(
                0.0,
                std::f64::consts::TAU * p as f64 * a,
            )
            .exp();
            let term = z.coeff(p) + eta.coeff(p) * (num_complex::Complex64::ONE - rot);
            s += (std::f64::consts::TAU * p as f64).powi(2) * term.norm_sqr();
        }
        parseval += w * s;
    }
    let out = Order2 { direct: -0.5 * direct, parseval: -0.5 * parseval };
    debug_assert!(out.agreement() < 1e-10, "Parseval mismatch {}", out.agreement());
    Ok(out)
}

/// The theorem's own epsilon: || d_k(f, r_alpha) ||_{L^3(Omega)} with k = 3.
pub fn epsilon_l3(
    f: &RandomEnsemble<CircleDiffeo>,
    alpha: &RandomEnsemble<f64>,
) -> Result<f64> {
    let zetas = extract_zetas(f, alpha)?;
    Ok(zetas
        .iter()
        .map(|(w, _, z)| w * z.ck_norm(3).powi(3))
        .sum::<f64>()
        .cbrt())
}
