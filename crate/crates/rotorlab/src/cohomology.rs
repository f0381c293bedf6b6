//! Transfer operators T0, T and the small-divisor solvers U, Ubar for the
//! cohomological equation phi - T0 phi = psi - mean(psi).

use num_complex::Complex64;

use crate::diffeo::{CircleDiffeo, RandomEnsemble, ALIASING_TOL};
use crate::error::{Error, Result};
use crate::periodic::PeriodicMap;

/// |1 - m_q| below this is treated as a resonance rather than amplified.
pub const RESONANCE_FLOOR: f64 = 1e-10;

/// Modes of psi smaller than this (relative to sup |psi|) are treated as
/// absent when probing resonances.
const NONZERO_MODE_REL: f64 = 1e-14;

/// m_q = E[e^{2 i pi q alpha}] for 0 <= q <= n; m_{-q} = conj(m_q).
#[derive(Debug, Clone)]
pub struct AveragedMultiplier {
    m: Vec<Complex64>,
}

impl AveragedMultiplier {
    pub fn new(alpha: &RandomEnsemble<f64>, n: usize) -> Self {
        let m = (0..=n)
            .map(|q| {
                alpha
                    .atoms()
                    .iter()
                    .map(|&(w, a)| {
                        let ang = std::f64::consts::TAU * q as f64 * a;
                        w * Complex64::new(0.0, ang).exp()
                    })
                    .sum()
            })
            .collect();
        AveragedMultiplier { m }
    }

    pub fn get(&self, q: i64) -> Complex64 {
        let qa = q.unsigned_abs() as usize;
        assert!(qa < self.m.len());
        if q >= 0 {
            self.m[qa]
        } else {
            self.m[qa].conj()
        }
    }

    pub fn degree(&self) -> usize {
        self.m.len() - 1
    }
}

/// T0 phi = E[phi o r_alpha]; coefficient-wise c_q -> c_q m_q.
pub fn transfer_t0(phi: &PeriodicMap, alpha: &RandomEnsemble<f64>) -> PeriodicMap {
    let n = phi.degree() as i64;
    let mult = AveragedMultiplier::new(alpha, phi.degree());
    let coeffs: Vec<Complex64> = (-n..=n).map(|q| phi.coeff(q) * mult.get(q)).collect();
    PeriodicMap::from_coeffs(&coeffs, phi.grid_size())
}

/// T phi = E[phi o f]; grid-wise weighted average, re-projected.
pub fn transfer_t(
    phi: &PeriodicMap,
    f: &RandomEnsemble<CircleDiffeo>,
) -> Result<PeriodicMap> {
    let n = phi.degree();
    let m = phi.grid_size();
    let (out, residual) = PeriodicMap::fit_from_fn(
        |x| f.expect(|fi| phi.eval(fi.eval(x))),
        n,
        m,
    );
    if residual > ALIASING_TOL {
        return Err(Error::Aliasing { residual, tol: ALIASING_TOL });
    }
    Ok(out)
}

#[derive(Clone, Copy)]
enum Divisor {
    /// 1 - E[e^{2 i pi q alpha}]  (the U solver)
    Plain,
    /// 1 - E[e^{-2 i pi q alpha}]  (the Ubar solver)
    Conjugated,
}

fn solve(
    psi: &PeriodicMap,
    alpha: &RandomEnsemble<f64>,
    which: Divisor,
) -> Result<PeriodicMap> {
    let n = psi.degree() as i64;
    let mult = AveragedMultiplier::new(alpha, psi.degree());
    let floor = NONZERO_MODE_REL * psi.sup_norm().max(f64::MIN_POSITIVE);
    let mut coeffs = vec![Complex64::ZERO; (2 * n + 1) as usize];
    for q in -n..=n {
        if q == 0 {
            continue;
        }
        let c = psi.coeff(q);
        if c.norm() <= floor {
            continue;
        }
        let denom = match which {
            Divisor::Plain => Complex64::ONE - mult.get(q),
            Divisor::Conjugated => Complex64::ONE - mult.get(-q),
        };
        if denom.norm() <= RESONANCE_FLOOR {
            return Err(Error::Resonance { q, denom: denom.norm(), floor: RESONANCE_FLOOR });
        }
        coeffs[(q + n) as usize] = c / denom;
    }
    Ok(PeriodicMap::from_coeffs(&coeffs, psi.grid_size()))
}

/// U psi: zero-mean phi with phi - T0 phi = psi - mean(psi).
pub fn solve_u(psi: &PeriodicMap, alpha: &RandomEnsemble<f64>) -> Result<PeriodicMap> {
    solve(psi, alpha, Divisor::Plain)
}

/// Ubar psi: same with conjugated divisors 1 - E[e^{-2 i pi q alpha}].
pub fn solve_ubar(psi: &PeriodicMap, alpha: &RandomEnsemble<f64>) -> Result<PeriodicMap> {
    solve(psi, alpha, Divisor::Conjugated)
}
