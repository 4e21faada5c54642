//! The loss budget: spreading, Beer-Lambert molecular absorption, and
//! two-regime scattering.
//!
//! Total attenuation factorizes as
//! `L_tot = L_spr * L_abs * L_sca`; every term is reported both as a
//! linear factor and as positive dB (`dB = -10 log10(factor)`). The dB
//! values are computed analytically from the exponents so deep links never
//! lose them to floating-point underflow of the factor.
//!
//! Scattering: a population is classified by the size parameter
//! `psi = 2 pi r / lambda_g` (wavelength inside the background medium).
//! Small populations (`psi < 1`) use the Rayleigh efficiency for absorbing
//! spheres; large ones the anomalous-diffraction extinction minus the
//! absorption efficiency. The efficiencies take the scatterer's own
//! complex refractive index; with the low optical contrast of tissue a
//! host-relative index collapses the efficiencies to zero across the band
//! and suppresses the Rayleigh-to-Mie transition entirely, so the absolute
//! composite index is used.

use core::fmt;

// float math comes from num-traits/libm in no_std builds; std-linked test
// builds resolve the same calls through inherent methods instead
#[allow(unused_imports)]
use num_traits::Float;

use alloc::string::String;

use crate::dielectrics::RefractiveIndex;
use crate::SPEED_OF_LIGHT;

const LN10: f64 = core::f64::consts::LN_10;

/// dB per neper for power quantities: `dB = 10/ln(10) * nepers`.
const DB_PER_NEPER: f64 = 10.0 / LN10;

/// One loss mechanism as a linear factor and positive dB.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LossTerm {
    pub factor: f64,
    pub db: f64,
}

impl LossTerm {
    pub const UNITY: LossTerm = LossTerm { factor: 1.0, db: 0.0 };

    /// From an exponential attenuation exponent (`factor = e^-x`).
    fn from_nepers(nepers: f64) -> Self {
        Self {
            factor: (-nepers).exp(),
            db: nepers * DB_PER_NEPER,
        }
    }
}

/// Per-mechanism breakdown with the factorization identity built in:
/// the total factor is the product of the component factors and the total
/// dB is the sum of the component dBs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LossBreakdown {
    pub spreading: LossTerm,
    pub absorption: LossTerm,
    pub scattering: LossTerm,
    pub total: LossTerm,
}

impl LossBreakdown {
    pub fn assemble(spreading: LossTerm, absorption: LossTerm, scattering: LossTerm) -> Self {
        Self {
            spreading,
            absorption,
            scattering,
            total: LossTerm {
                factor: spreading.factor * absorption.factor * scattering.factor,
                db: spreading.db + absorption.db + scattering.db,
            },
        }
    }
}

/// Link geometry and background medium for one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    pub frequency_hz: f64,
    pub distance_m: f64,
    /// Transmit antenna directivity, >= 1; 1 = isotropic.
    pub directivity: f64,
    /// Effective background index along the path.
    pub medium_index: RefractiveIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LossesError {
    InvalidConfig(String),
    /// `|n^2 + 2| = 0` in the Rayleigh efficiency (unreachable for passive
    /// media; guarded anyway).
    Singularity,
}

impl fmt::Display for LossesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidConfig(msg) => write!(f, "invalid propagation config: {msg}"),
            Self::Singularity => write!(f, "singular denominator in scattering efficiency"),
        }
    }
}

impl core::error::Error for LossesError {}

/// Free-space wavelength `c / f` in meters.
pub fn wavelength_m(f_hz: f64) -> f64 {
    SPEED_OF_LIGHT / f_hz
}

/// In-medium wavelength `lambda / n'`.
pub fn medium_wavelength_m(f_hz: f64, n_real: f64) -> f64 {
    SPEED_OF_LIGHT / (f_hz * n_real)
}

/// Spreading loss `L_spr = D (lambda_g / 4 pi d)^2`.
///
/// At `d = 0` the factor is defined as 1 (0 dB): there is no wavefront
/// divergence over a zero-length path. For `d < lambda_g/(4 pi)` the
/// far-field expression formally exceeds 1; it is reported as computed.
pub fn spreading_loss(cfg: &PropagationConfig) -> LossTerm {
    if cfg.distance_m == 0.0 {
        return LossTerm::UNITY;
    }
    let lambda_g = medium_wavelength_m(cfg.frequency_hz, cfg.medium_index.n_real);
    let ratio = lambda_g / (4.0 * core::f64::consts::PI * cfg.distance_m);
    LossTerm {
        factor: cfg.directivity * ratio * ratio,
        db: -20.0 * ratio.log10() - 10.0 * cfg.directivity.log10(),
    }
}

/// Molecular absorption coefficient `mu_abs = 4 pi n'' / lambda_g`
/// in m^-1, with `lambda_g = c / (f n')`.
///
/// Note the in-medium wavelength in the denominator: the coefficient is a
/// factor `n'` larger than the free-space-wavelength form `4 pi n'' / lambda`.
pub fn absorption_coefficient(n: &RefractiveIndex, f_hz: f64) -> f64 {
    4.0 * core::f64::consts::PI * n.n_imag * n.n_real * f_hz / SPEED_OF_LIGHT
}

/// Beer-Lambert absorption over a path: `L_abs = e^(-mu_abs d)`.
pub fn absorption_loss(mu_abs_per_m: f64, distance_m: f64) -> LossTerm {
    LossTerm::from_nepers(mu_abs_per_m * distance_m)
}

/// Scattering loss over a path:
/// `L_sca = e^(-(mu_small + mu_large) d)`.
pub fn scattering_loss(mu_small_per_m: f64, mu_large_per_m: f64, distance_m: f64) -> LossTerm {
    LossTerm::from_nepers((mu_small_per_m + mu_large_per_m) * distance_m)
}

/// Anomalous-diffraction extinction efficiency of a large soft sphere,
/// as a function of the central phase delay `p = 2 (n' - 1) psi`:
///
/// `Q_ext(p) = 2 - (4/p) sin p + (4/p^2)(1 - cos p)`
///
/// evaluated through `1 - cos p = 2 sin^2(p/2)` and, below `p = 1e-3`, a
/// series branch `p^2/2 - p^4/36 + p^6/1440` to avoid cancellation.
pub fn extinction_efficiency(p: f64) -> f64 {
    debug_assert!(p >= 0.0);
    if p == 0.0 {
        return 0.0;
    }
    if p < 1e-3 {
        let p2 = p * p;
        return p2 / 2.0 - p2 * p2 / 36.0 + p2 * p2 * p2 / 1440.0;
    }
    let half = 0.5 * p;
    let sin_half = half.sin();
    2.0 - 4.0 * p.sin() / p + 8.0 * sin_half * sin_half / (p * p)
}

/// Absorption efficiency of a large absorbing sphere, as a function of the
/// absorption thickness `b = 4 psi n''`:
///
/// `Q_abs(b) = 1 + (2/b) e^-b + (2/b^2)(e^-b - 1)`
///
/// with a series branch `2b/3 - b^2/4 + b^3/15 - b^4/72` below `b = 1e-3`
/// and the result clamped to `[0, 1]`.
pub fn absorption_efficiency(b: f64) -> f64 {
    debug_assert!(b >= 0.0);
    if b == 0.0 {
        return 0.0;
    }
    let q = if b < 1e-3 {
        2.0 * b / 3.0 - b * b / 4.0 + b * b * b / 15.0 - b * b * b * b / 72.0
    } else {
        1.0 + 2.0 * (-b).exp() / b + 2.0 * (-b).exp_m1() / (b * b)
    };
    q.clamp(0.0, 1.0)
}

/// Rayleigh scattering efficiency of a small absorbing sphere:
///
/// `Q = (8/3) psi^4 Re[((n^2 - 1)/(n^2 + 2))^2]`, clamped at 0 below.
pub fn rayleigh_efficiency(psi: f64, n: &RefractiveIndex) -> Result<f64, LossesError> {
    let nc = n.as_complex();
    let n2 = nc * nc;
    let denom = n2 + 2.0;
    if denom.norm_sqr() == 0.0 {
        return Err(LossesError::Singularity);
    }
    let ratio = (n2 - 1.0) / denom;
    let q = 8.0 / 3.0 * psi.powi(4) * (ratio * ratio).re;
    Ok(q.max(0.0))
}

/// Size parameter `psi = 2 pi r / lambda_g` for a sphere of radius `r` in
/// a background with real index `medium_n_real`.
pub fn size_parameter(radius_m: f64, f_hz: f64, medium_n_real: f64) -> f64 {
    2.0 * core::f64::consts::PI * radius_m / medium_wavelength_m(f_hz, medium_n_real)
}

/// Scattering regime of one population at the operating frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatterRegime {
    Small,
    Large,
}

/// A population is "large" iff `psi >= 1`.
pub fn classify(psi: f64) -> ScatterRegime {
    if psi >= 1.0 {
        ScatterRegime::Large
    } else {
        ScatterRegime::Small
    }
}

/// One monodisperse scatterer population embedded in a background medium.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererPopulation {
    pub species: String,
    pub radius_m: f64,
    pub number_density_per_m3: f64,
    /// The scatterer's own complex composite index (see module docs).
    pub index: RefractiveIndex,
}

impl ScattererPopulation {
    pub fn regime_at(&self, f_hz: f64, medium_n_real: f64) -> ScatterRegime {
        classify(size_parameter(self.radius_m, f_hz, medium_n_real))
    }

    fn geometric_cross_section(&self) -> f64 {
        core::f64::consts::PI * self.radius_m * self.radius_m
    }
}

/// Per-regime scattering coefficients `mu = sum rho Q sigma_g` in m^-1 for
/// a set of populations in a background of real index `medium_n_real`.
///
/// Large regime: `Q_sca = max(Q_ext - Q_abs, 0)` with `p = 2 (n' - 1) psi`
/// (clamped at 0 for the n' < 1 edge) and `b = 4 psi n''`.
pub fn scattering_coefficients(
    pops: &[ScattererPopulation],
    f_hz: f64,
    medium_n_real: f64,
) -> Result<(f64, f64), LossesError> {
    let mut mu_small = 0.0;
    let mut mu_large = 0.0;
    for pop in pops {
        let psi = size_parameter(pop.radius_m, f_hz, medium_n_real);
        let q = match classify(psi) {
            ScatterRegime::Small => rayleigh_efficiency(psi, &pop.index)?,
            ScatterRegime::Large => {
                let p = (2.0 * (pop.index.n_real - 1.0) * psi).max(0.0);
                let b = 4.0 * psi * pop.index.n_imag;
                (extinction_efficiency(p) - absorption_efficiency(b)).max(0.0)
            }
        };
        let mu = pop.number_density_per_m3 * q * pop.geometric_cross_section();
        match classify(psi) {
            ScatterRegime::Small => mu_small += mu,
            ScatterRegime::Large => mu_large += mu,
        }
    }
    Ok((mu_small, mu_large))
}

/// Full loss breakdown for one link: spreading from the config, absorption
/// from `mu_abs`, scattering from the populations (size parameters taken
/// against the config's background index).
pub fn total_loss(
    cfg: &PropagationConfig,
    mu_abs_per_m: f64,
    pops: &[ScattererPopulation],
) -> Result<LossBreakdown, LossesError> {
    if !(cfg.frequency_hz > 0.0) {
        return Err(LossesError::InvalidConfig(alloc::format!(
            "frequency must be positive, got {}",
            cfg.frequency_hz
        )));
    }
    if !(cfg.distance_m >= 0.0) {
        return Err(LossesError::InvalidConfig(alloc::format!(
            "distance must be >= 0, got {}",
            cfg.distance_m
        )));
    }
    if !(cfg.directivity >= 1.0) {
        return Err(LossesError::InvalidConfig(alloc::format!(
            "directivity must be >= 1, got {}",
            cfg.directivity
        )));
    }
    let spreading = spreading_loss(cfg);
    let absorption = absorption_loss(mu_abs_per_m, cfg.distance_m);
    let (mu_s, mu_l) = scattering_coefficients(pops, cfg.frequency_hz, cfg.medium_index.n_real)?;
    let scattering = scattering_loss(mu_s, mu_l, cfg.distance_m);
    Ok(LossBreakdown::assemble(spreading, absorption, scattering))
}
