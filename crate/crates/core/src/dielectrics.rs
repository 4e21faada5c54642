//! Multi-Debye permittivity, Maxwell-Garnett mixing, and complex
//! refractive indices.
//!
//! Sign convention: `eps = eps' - j eps''`, `n = n' - j n''`, with the loss
//! magnitudes `eps''` and `n''` stored non-negative. Internally the module
//! computes with [`num_complex::Complex64`] carrying the `-j` convention
//! directly (negative imaginary part for passive media).

use core::fmt;

use num_complex::Complex64;

use crate::materials::{Catalog, ComponentId};

/// Relative complex permittivity `eps = eps_real - j * eps_imag`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ComplexPermittivity {
    /// Real part `eps'`.
    pub eps_real: f64,
    /// Loss magnitude `eps'' >= 0` for passive media.
    pub eps_imag: f64,
}

impl ComplexPermittivity {
    pub const fn new(eps_real: f64, eps_imag: f64) -> Self {
        Self { eps_real, eps_imag }
    }

    /// The value as a `Complex64` in the `eps' - j eps''` convention.
    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.eps_real, -self.eps_imag)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self {
            eps_real: z.re,
            eps_imag: -z.im,
        }
    }
}

/// Complex refractive index `n = n_real - j * n_imag`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RefractiveIndex {
    /// Real part `n'` (phase velocity).
    pub n_real: f64,
    /// Loss magnitude `n'' >= 0` (absorption).
    pub n_imag: f64,
}

impl RefractiveIndex {
    pub const fn new(n_real: f64, n_imag: f64) -> Self {
        Self { n_real, n_imag }
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.n_real, -self.n_imag)
    }
}

/// One first-order dipolar relaxation process.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DebyeBranch {
    /// Relaxation strength (dimensionless).
    pub delta_eps: f64,
    /// Relaxation time in seconds.
    pub tau_s: f64,
}

/// The three relaxation processes a component may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxationBranch {
    Alpha = 0,
    Beta = 1,
    Gamma = 2,
}

impl RelaxationBranch {
    pub const ALL: [RelaxationBranch; 3] = [Self::Alpha, Self::Beta, Self::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::Beta => "beta",
            Self::Gamma => "gamma",
        }
    }
}

/// High-frequency limit plus up to three labeled relaxation branches.
///
/// A branch a material does not exhibit is absent (`None`), not a
/// zero-time placeholder.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DebyeParameters {
    pub eps_inf: f64,
    pub branches: [Option<DebyeBranch>; 3],
}

impl DebyeParameters {
    pub const fn new(eps_inf: f64) -> Self {
        Self {
            eps_inf,
            branches: [None, None, None],
        }
    }

    pub const fn with_branch(mut self, which: RelaxationBranch, delta_eps: f64, tau_s: f64) -> Self {
        self.branches[which as usize] = Some(DebyeBranch { delta_eps, tau_s });
        self
    }

    pub fn branch(&self, which: RelaxationBranch) -> Option<DebyeBranch> {
        self.branches[which as usize]
    }

    /// Relaxation strength of a branch, zero when absent.
    pub fn delta_eps(&self, which: RelaxationBranch) -> f64 {
        self.branch(which).map_or(0.0, |b| b.delta_eps)
    }

    /// Static (zero-frequency) limit `eps_inf + sum(delta_eps)`.
    pub fn eps_static(&self) -> f64 {
        self.eps_inf + self.branches.iter().flatten().map(|b| b.delta_eps).sum::<f64>()
    }
}

/// Host plus dispersed inclusions, by volume fraction.
///
/// The host fraction is implicit: `1 - sum(phi_n)`. Mass fractions from
/// composition tables are used directly as volume fractions (equal-density
/// assumption), which is the modeling caveat that keeps the fractions
/// summing to one.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MixtureComposition {
    pub host: ComponentId,
    pub inclusions: alloc::vec::Vec<(ComponentId, f64)>,
}

impl MixtureComposition {
    /// Water host with the given protein and lipid volume fractions.
    /// Zero fractions are dropped so an absent inclusion is truly absent.
    pub fn water_host(protein: f64, lipid: f64) -> Self {
        let mut inclusions = alloc::vec::Vec::new();
        if protein > 0.0 {
            inclusions.push((ComponentId::Protein, protein));
        }
        if lipid > 0.0 {
            inclusions.push((ComponentId::Lipid, lipid));
        }
        Self {
            host: ComponentId::Water,
            inclusions,
        }
    }

    pub fn inclusion_sum(&self) -> f64 {
        self.inclusions.iter().map(|(_, phi)| phi).sum()
    }

    /// Implicit host volume fraction `1 - sum(phi_n)`.
    pub fn host_fraction(&self) -> f64 {
        1.0 - self.inclusion_sum()
    }

    /// Volume fraction of one component (host or inclusion).
    pub fn fraction(&self, id: ComponentId) -> f64 {
        if id == self.host {
            return self.host_fraction();
        }
        self.inclusions
            .iter()
            .filter(|(c, _)| *c == id)
            .map(|(_, phi)| phi)
            .sum()
    }

    pub fn validate(&self) -> Result<(), DielectricsError> {
        let sum = self.inclusion_sum();
        if self.inclusions.iter().any(|(_, phi)| *phi < 0.0) || !(sum < 1.0) {
            return Err(DielectricsError::InvalidComposition { sum });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DielectricsError {
    /// Frequency must be strictly positive.
    NonPositiveFrequency { f_hz: f64 },
    /// Inclusion fractions must be non-negative and sum below one.
    InvalidComposition { sum: f64 },
    /// A mixing denominator vanished (cannot occur for passive media).
    Singularity,
}

impl fmt::Display for DielectricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonPositiveFrequency { f_hz } => {
                write!(f, "frequency must be positive, got {f_hz} Hz")
            }
            Self::InvalidComposition { sum } => write!(
                f,
                "inclusion volume fractions must be >= 0 and sum below 1 (sum = {sum})"
            ),
            Self::Singularity => write!(f, "singular denominator in effective-medium mixing"),
        }
    }
}

impl core::error::Error for DielectricsError {}

/// Complex permittivity of one pure component at frequency `f_hz`:
/// `eps = eps_inf + sum_k delta_eps_k / (1 + j w tau_k)`, `w = 2 pi f`.
///
/// The parameters are fitted for 100 GHz - 1 THz (see
/// [`crate::VALIDITY_BAND_HZ`]); evaluation elsewhere is allowed so sweeps
/// can carry guard bands.
pub fn debye_permittivity(
    params: &DebyeParameters,
    f_hz: f64,
) -> Result<ComplexPermittivity, DielectricsError> {
    if !(f_hz > 0.0) {
        return Err(DielectricsError::NonPositiveFrequency { f_hz });
    }
    let omega = 2.0 * core::f64::consts::PI * f_hz;
    let mut eps = Complex64::new(params.eps_inf, 0.0);
    for branch in params.branches.iter().flatten() {
        eps += branch.delta_eps / Complex64::new(1.0, omega * branch.tau_s);
    }
    Ok(ComplexPermittivity::from_complex(eps))
}

/// Maxwell-Garnett effective permittivity of spherical inclusions in a
/// host medium:
///
/// `eps_eff = eps_h + 3 eps_h S / (1 - S)`,
/// `S = sum_n phi_n (eps_n - eps_h) / (eps_n + 2 eps_h)`.
pub fn maxwell_garnett(
    host: ComplexPermittivity,
    inclusions: &[(ComplexPermittivity, f64)],
) -> Result<ComplexPermittivity, DielectricsError> {
    let sum: f64 = inclusions.iter().map(|(_, phi)| phi).sum();
    if inclusions.iter().any(|(_, phi)| *phi < 0.0) || !(sum < 1.0) {
        return Err(DielectricsError::InvalidComposition { sum });
    }
    let eps_h = host.as_complex();
    let mut s = Complex64::new(0.0, 0.0);
    for (eps_n, phi) in inclusions {
        let eps_n = eps_n.as_complex();
        let denom = eps_n + 2.0 * eps_h;
        if denom.norm_sqr() == 0.0 {
            return Err(DielectricsError::Singularity);
        }
        s += phi * (eps_n - eps_h) / denom;
    }
    let one_minus_s = Complex64::new(1.0, 0.0) - s;
    if one_minus_s.norm_sqr() == 0.0 {
        return Err(DielectricsError::Singularity);
    }
    Ok(ComplexPermittivity::from_complex(eps_h + 3.0 * eps_h * s / one_minus_s))
}

/// Principal square root `n = sqrt(eps)` with `n' > 0`, `n'' >= 0`.
pub fn refractive_index(eps: ComplexPermittivity) -> RefractiveIndex {
    let mut n = eps.as_complex().sqrt();
    // principal branch already has Re >= 0; resolve the Re == 0 edge
    // (negative-real eps) toward the passive sign
    if n.re == 0.0 && n.im > 0.0 {
        n = -n;
    }
    RefractiveIndex {
        n_real: n.re,
        n_imag: -n.im,
    }
}

/// Permittivity of a host/inclusion mixture: per-component Debye spectra
/// composed through Maxwell-Garnett. Deterministic in all arguments.
pub fn mixture_permittivity(
    comp: &MixtureComposition,
    f_hz: f64,
    catalog: &Catalog,
) -> Result<ComplexPermittivity, DielectricsError> {
    comp.validate()?;
    let host = debye_permittivity(&catalog.component_params(comp.host), f_hz)?;
    let mut inclusions = alloc::vec::Vec::with_capacity(comp.inclusions.len());
    for (id, phi) in &comp.inclusions {
        let eps = debye_permittivity(&catalog.component_params(*id), f_hz)?;
        inclusions.push((eps, *phi));
    }
    maxwell_garnett(host, &inclusions)
}
