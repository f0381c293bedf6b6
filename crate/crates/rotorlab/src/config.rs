//! Experiment configuration: a single TOML file with nested sections.
//! Unknown keys are rejected; every default that influences a run is
//! materialized before the manifest is written.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LyapunovExpansion,
    StationaryDensity,
    KamCircle,
    CommutatorCircle,
    MatrixExpansion,
    Schrodinger,
    KamMatrix,
    CommutatorMatrix,
}

impl ExperimentKind {
    pub fn all() -> &'static [ExperimentKind] {
        use ExperimentKind::*;
        &[
            LyapunovExpansion,
            StationaryDensity,
            KamCircle,
            CommutatorCircle,
            MatrixExpansion,
            Schrodinger,
            KamMatrix,
            CommutatorMatrix,
        ]
    }

    pub fn name(&self) -> &'static str {
        use ExperimentKind::*;
        match self {
            LyapunovExpansion => "lyapunov_expansion",
            StationaryDensity => "stationary_density",
            KamCircle => "kam_circle",
            CommutatorCircle => "commutator_circle",
            MatrixExpansion => "matrix_expansion",
            Schrodinger => "schrodinger",
            KamMatrix => "kam_matrix",
            CommutatorMatrix => "commutator_matrix",
        }
    }
}

/// One Fourier mode of a perturbation shape: coefficient re + i*im at
/// frequency q (the conjugate mode is implied by realness).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffSpec {
    pub q: i64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub weight: f64,
    pub alpha: f64,
    /// Circle perturbation shape z (zeta = eps * z), as Fourier modes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coeffs: Vec<CoeffSpec>,
    /// Matrix perturbation shape S (M = normalize(R_alpha + eps * S)),
    /// row-major [[a, b], [c, d]].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub atoms: Vec<AtomSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralSpec {
    pub n: usize,
    pub m: usize,
}

impl Default for SpectralSpec {
    fn default() -> Self {
        SpectralSpec { n: crate::periodic::DEFAULT_N, m: crate::periodic::DEFAULT_M }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Plain,
    ControlVariate,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSpec {
    pub n_steps: usize,
    pub n_samples: usize,
    pub burn_in: usize,
    pub n_draws: usize,
    pub bins: usize,
    pub estimator: Estimator,
}

impl Default for McSpec {
    fn default() -> Self {
        McSpec {
            n_steps: 100_000,
            n_samples: 200,
            burn_in: 1_000,
            n_draws: 1_000_000,
            bins: 64,
            estimator: Estimator::ControlVariate,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub epsilons: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { epsilons: vec![0.04, 0.02, 0.01] }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KamSpec {
    pub k: u32,
    pub q_exp: f64,
    /// 0 means: calibrate C0 on a coboundary family before the run.
    pub c0: f64,
    pub max_iters: usize,
    pub convergence_tol: f64,
    /// Matrix track only: ellipticity margin.
    pub delta: f64,
    /// Matrix track only: 0 means calibrate A0 before the run.
    pub a0: f64,
    pub mc_steps: usize,
    pub mc_samples: usize,
}

impl Default for KamSpec {
    fn default() -> Self {
        KamSpec {
            k: 11,
            q_exp: 4.0 / 3.0,
            c0: 0.0,
            max_iters: 20,
            convergence_tol: 1e-9,
            delta: 0.1,
            a0: 0.0,
            mc_steps: 100_000,
            mc_samples: 64,
        }
    }
}

/// Planted conjugacy: circle h = Id + coeffs, or matrix P0.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConjugacySpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coeffs: Vec<CoeffSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialAtom {
    pub weight: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchrodingerSpec {
    pub energy: f64,
    pub gs: Vec<f64>,
    pub potential: Vec<PotentialAtom>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default)]
    pub spectral: SpectralSpec,
    #[serde(default)]
    pub mc: McSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default)]
    pub kam: KamSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjugacy: Option<ConjugacySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schrodinger: Option<SchrodingerSpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        if self.spectral.m < 4 * self.spectral.n || !self.spectral.m.is_power_of_two() {
            return Err(Error::Config(format!(
                "spectral: need m >= 4n and m a power of two, got n={} m={}",
                self.spectral.n, self.spectral.m
            )));
        }
        let needs_ensemble = !matches!(self.experiment, Schrodinger);
        if needs_ensemble {
            let ens = self
                .ensemble
                .as_ref()
                .ok_or_else(|| Error::Config("missing [ensemble]".into()))?;
            if ens.atoms.is_empty() {
                return Err(Error::Config("ensemble.atoms is empty".into()));
            }
            let total: f64 = ens.atoms.iter().map(|a| a.weight).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("atom weights sum to {total}")));
            }
            let matrix_track = matches!(self.experiment, MatrixExpansion | KamMatrix | CommutatorMatrix);
            for (i, atom) in ens.atoms.iter().enumerate() {
                if matrix_track && atom.matrix.is_none() && self.conjugacy.is_none() {
                    return Err(Error::Config(format!(
                        "atom {i}: matrix experiments need a `matrix` shape (or a planted [conjugacy])"
                    )));
                }
                for c in &atom.coeffs {
                    // Positive q only: the conjugate mode is implied.
                    if c.q < 1 || c.q as usize > self.spectral.n {
                        return Err(Error::Config(format!(
                            "atom {i}: mode q={} out of range 1..={}",
                            c.q, self.spectral.n
                        )));
                    }
                }
            }
        }
        if matches!(self.experiment, Schrodinger) {
            let s = self
                .schrodinger
                .as_ref()
                .ok_or_else(|| Error::Config("missing [schrodinger]".into()))?;
            if s.gs.is_empty() {
                return Err(Error::Config("schrodinger.gs is empty".into()));
            }
            if s.potential.is_empty() {
                return Err(Error::Config("schrodinger.potential is empty".into()));
            }
            let total: f64 = s.potential.iter().map(|p| p.weight).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("potential weights sum to {total}")));
            }
            if !(-2.0 < s.energy && s.energy < 2.0) || s.energy == 0.0 {
                return Err(Error::Config(
                    "schrodinger.energy must lie in (-2, 2) and differ from 0".into(),
                ));
            }
        }
        if self.sweep.epsilons.is_empty() {
            return Err(Error::Config("sweep.epsilons is empty".into()));
        }
        if !(1.0 < self.kam.q_exp && self.kam.q_exp < 1.5) {
            return Err(Error::Config("kam.q_exp must lie in (1, 3/2)".into()));
        }
        Ok(())
    }
}
