//! Circle diffeomorphisms as lifts f = Id + phi, their algebra, rotation
//! numbers, finite weighted ensembles, and the random diophantine profile.

use crate::error::{Error, Result};
use crate::periodic::PeriodicMap;

/// Residual tolerance above which grid-wise composition reports spectral
/// under-resolution.
pub const ALIASING_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CircleDiffeo {
    phi: PeriodicMap,
}

impl CircleDiffeo {
    /// Wrap a periodic part, checking orientation (1 + phi' > 0 on the
    /// refined grid).
    pub fn new(phi: PeriodicMap) -> Result<Self> {
        let min_deriv = 1.0 - phi.derivative().sup_norm();
        // sup_deriv is a sup over the refined grid of |phi'|, so this is a
        // conservative lower bound for min(1 + phi').
        if min_deriv <= 0.0 {
            let exact = Self::min_lift_deriv(&phi);
            if exact <= 0.0 {
                return Err(Error::NotDiffeo { min_deriv: exact });
            }
        }
        Ok(CircleDiffeo { phi })
    }

    fn min_lift_deriv(phi: &PeriodicMap) -> f64 {
        let d = phi.derivative();
        d.grid().iter().fold(f64::INFINITY, |a, &v| a.min(1.0 + v))
    }

    pub fn identity(n: usize, m: usize) -> Self {
        CircleDiffeo { phi: PeriodicMap::zero(n, m) }
    }

    pub fn rotation(alpha: f64, n: usize, m: usize) -> Self {
        CircleDiffeo { phi: PeriodicMap::constant(alpha, n, m) }
    }

    pub fn phi(&self) -> &PeriodicMap {
        &self.phi
    }

    /// Lift value F(x) = x + phi(x).
    pub fn eval(&self, x: f64) -> f64 {
        x + self.phi.eval(x)
    }

    /// F'(x) = 1 + phi'(x).
    pub fn deriv(&self, x: f64) -> f64 {
        1.0 + self.phi.eval_deriv(x)
    }

    /// (F(x), F'(x)).
    pub fn eval_both(&self, x: f64) -> (f64, f64) {
        let (v, d) = self.phi.eval_both(x);
        (x + v, 1.0 + d)
    }

    /// d_k(f, g) = ||phi_f - phi_g||_k.
    pub fn dist_k(&self, other: &Self, k: u32) -> f64 {
        self.phi.sub(&other.phi).ck_norm(k)
    }

    /// d_k(f, r_alpha) = ||phi - alpha||_k.
    pub fn dist_to_rotation(&self, alpha: f64, k: u32) -> f64 {
        self.phi.add_constant(-alpha).ck_norm(k)
    }

    /// (f o g)(x) = f(g(x)), re-projected to the working degree.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        let n = self.phi.degree().max(g.phi.degree());
        let m = self.phi.grid_size().max(g.phi.grid_size());
        // phi_{f o g}(x) = phi_g(x) + phi_f(x + phi_g(x)) is periodic.
        let (phi, residual) = PeriodicMap::fit_from_fn(
            |x| {
                let gv = g.phi.eval(x);
                gv + self.phi.eval(x + gv)
            },
            n,
            m,
        );
        if residual > ALIASING_TOL {
            return Err(Error::Aliasing { residual, tol: ALIASING_TOL });
        }
        Self::new(phi)
    }

    /// f^{-1} via Newton iteration on the lift. Requires ||phi'||_0 < 1 for
    /// the guaranteed contraction; otherwise may report non-convergence.
    pub fn invert(&self) -> Result<Self> {
        let n = self.phi.degree();
        let m = self.phi.grid_size();
        let newton = |y: f64| -> Result<f64> {
            let mut x = y - self.phi.eval(y);
            for _ in 0..50 {
                let (fx, dfx) = self.eval_both(x);
                let step = (fx - y) / dfx;
                x -= step;
                if step.abs() < 1e-14 {
                    return Ok(x);
                }
            }
            let residual = (self.eval(x) - y).abs();
            if residual < 1e-12 {
                Ok(x)
            } else {
                Err(Error::InversionDiverged { iters: 50, residual })
            }
        };
        // psi(y) = f^{-1}(y) - y, sampled on the 2M fit grid.
        let big = 2 * m;
        let mut samples = Vec::with_capacity(big);
        for j in 0..big {
            let y = j as f64 / big as f64;
            samples.push(newton(y)? - y);
        }
        let (psi, residual) = PeriodicMap::fit_from_oversampled(&samples, n, m);
        if residual > ALIASING_TOL {
            return Err(Error::Aliasing { residual, tol: ALIASING_TOL });
        }
        Self::new(psi)
    }

    /// h f h^{-1}.
    pub fn conjugate_by(&self, h: &Self) -> Result<Self> {
        h.compose(self)?.compose(&h.invert()?)
    }

    /// Birkhoff estimate of the rotation number, averaged over a few
    /// starting points. Error O(1/n_iter) in general.
    pub fn rotation_number(&self, n_iter: usize) -> f64 {
        assert!(n_iter >= 1);
        let starts = [0.0, 1.0 / 3.0, 2.0 / 3.0];
        let mut acc = 0.0;
        for &x0 in &starts {
            let mut x = x0;
            for _ in 0..n_iter {
                x = self.eval(x);
            }
            acc += (x - x0) / n_iter as f64;
        }
        acc / starts.len() as f64
    }
}

/// Finite weighted law over atoms of type X.
#[derive(Debug, Clone)]
pub struct RandomEnsemble<X> {
    atoms: Vec<(f64, X)>,
}

impl<X> RandomEnsemble<X> {
    pub fn new(atoms: Vec<(f64, X)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Ensemble("ensemble needs at least one atom".into()));
        }
        let mut total = 0.0;
        for (w, _) in &atoms {
            if *w <= 0.0 {
                return Err(Error::Ensemble(format!("non-positive weight {w}")));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Ensemble(format!("weights sum to {total}, expected 1")));
        }
        Ok(RandomEnsemble { atoms })
    }

    pub fn single(x: X) -> Self {
        RandomEnsemble { atoms: vec![(1.0, x)] }
    }

    pub fn atoms(&self) -> &[(f64, X)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|(w, _)| *w)
    }

    pub fn values(&self) -> impl Iterator<Item = &X> {
        self.atoms.iter().map(|(_, x)| x)
    }

    pub fn map<Y>(&self, f: impl Fn(&X) -> Y) -> RandomEnsemble<Y> {
        RandomEnsemble {
            atoms: self.atoms.iter().map(|(w, x)| (*w, f(x))).collect(),
        }
    }

    pub fn try_map<Y>(&self, f: impl Fn(&X) -> Result<Y>) -> Result<RandomEnsemble<Y>> {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for (w, x) in &self.atoms {
            atoms.push((*w, f(x)?));
        }
        Ok(RandomEnsemble { atoms })
    }

    /// E[g(X)] as an exact weighted sum.
    pub fn expect(&self, g: impl Fn(&X) -> f64) -> f64 {
        self.atoms.iter().map(|(w, x)| w * g(x)).sum()
    }

    /// Inverse-CDF atom pick from a uniform variate in [0,1).
    pub fn pick(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, (w, _)) in self.atoms.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.atoms.len() - 1
    }
}

/// The empirical random diophantine profile of Def-style type (A, sigma):
/// value(q) = ||dist(q alpha, Z)||_{L^2(Omega)} with the fitted envelope
/// value(q) >= A / q^sigma over the probed range.
#[derive(Debug, Clone)]
pub struct DiophantineProfile {
    pub values: Vec<(i64, f64)>,
    pub a: f64,
    pub sigma: f64,
    pub q_max: i64,
    pub resonant: bool,
}

fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Probe q = 1..=q_max. sigma is the smallest exponent making
/// q^sigma * value(q) bounded below by its q = 1 value; A is that infimum.
pub fn diophantine_profile(alpha: &RandomEnsemble<f64>, q_max: i64) -> DiophantineProfile {
    assert!(q_max >= 1);
    let mut values = Vec::with_capacity(q_max as usize);
    let mut resonant = false;
    for q in 1..=q_max {
        let v = alpha
            .atoms()
            .iter()
            .map(|(w, a)| w * dist_to_int(q as f64 * a).powi(2))
            .sum::<f64>()
            .sqrt();
        if v < 1e-12 {
            resonant = true;
        }
        values.push((q, v));
    }
    if resonant {
        return DiophantineProfile { values, a: 0.0, sigma: 0.0, q_max, resonant };
    }
    let v1 = values[0].1;
    let mut sigma = 0.0f64;
    for &(q, v) in values.iter().skip(1) {
        let s = (v1.ln() - v.ln()) / (q as f64).ln();
        sigma = sigma.max(s);
    }
    let a = values
        .iter()
        .map(|&(q, v)| (q as f64).powf(sigma) * v)
        .fold(f64::INFINITY, f64::min);
    DiophantineProfile { values, a, sigma, q_max, resonant }
}

impl DiophantineProfile {
    pub fn value(&self, q: i64) -> f64 {
        let q = q.abs();
        assert!(q >= 1 && q <= self.q_max);
        self.values[(q - 1) as usize].1
    }

    /// Loss-of-derivative index k0 = 2 sigma + 2 for the one-solve bound,
    /// rounded up to an integer norm index.
    pub fn k0_cohomology(&self) -> u32 {
        (2.0 * self.sigma + 2.0).ceil() as u32
    }

    /// k0 = 4 sigma + 7, the working smoothness of the KAM track.
    pub fn k0_kam(&self) -> u32 {
        (4.0 * self.sigma + 7.0).ceil() as u32
    }
}
