use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A small divisor |1 - E[e^{2i pi q alpha}]| fell below the resonance
    /// floor while the corresponding Fourier mode was nonzero.
    #[error("resonance at mode q = {q}: |1 - m_q| = {denom:.3e} below floor {floor:.1e}")]
    Resonance { q: i64, denom: f64, floor: f64 },

    /// A grid-wise composition lost more spectral mass than tolerated when
    /// re-projected to the working degree.
    #[error("spectral under-resolution: re-projection residual {residual:.3e} > {tol:.1e}")]
    Aliasing { residual: f64, tol: f64 },

    /// Newton inversion of a lift did not reach tolerance.
    #[error("diffeomorphism inversion did not converge ({residual:.3e} after {iters} iterations)")]
    InversionDiverged { iters: usize, residual: f64 },

    /// 1 + phi' takes a non-positive value: not an orientation-preserving
    /// diffeomorphism.
    #[error("not an orientation-preserving diffeomorphism: min(1 + phi') = {min_deriv:.3e}")]
    NotDiffeo { min_deriv: f64 },

    /// A conjugation g = Id - eta would not be invertible.
    #[error("conjugation too large: ||eta'||_0 = {norm:.3e} >= 1")]
    ConjugationTooLarge { norm: f64 },

    #[error("determinant must be positive, got {det:.3e}")]
    BadDeterminant { det: f64 },

    #[error("ellipticity violated: ||Tr M||_L2 = {trace_l2:.4} > 2 - delta = {bound:.4}")]
    Ellipticity { trace_l2: f64, bound: f64 },

    #[error("invalid ensemble: {0}")]
    Ensemble(String),

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
