//! Dielectric modeling of layered human skin and intrabody sub-THz/THz
//! path loss.
//!
//! The crate evaluates frequency-dependent complex permittivity of skin
//! cells and extracellular matrix as water-hosted protein/lipid mixtures
//! (multi-Debye relaxation plus Maxwell-Garnett effective medium theory),
//! generates seeded voxelized three-layer skin phantoms (disc-Poisson cell
//! packing, line-Poisson vessels, red blood cell filling), and computes the
//! resulting loss budget: spreading, Beer-Lambert molecular absorption, and
//! two-regime (Rayleigh / anomalous-diffraction) scattering.
//!
//! The library is `no_std` + `alloc`; all file formats, IO and the CLI live
//! in the companion `dermawave` crate. All randomness goes through a
//! counter-based generator with explicit stream splitting, so every result
//! is a pure function of `(seed, config, catalog)`.
//!
//! Conventions used throughout:
//!
//! * permittivity `eps = eps' - j eps''` with `eps'' >= 0` stored as a
//!   non-negative loss magnitude, refractive index `n = n' - j n''`
//!   likewise;
//! * SI units internally (Hz, m, m^-1); catalog files use the more
//!   readable um / ps / mm^-3 and are converted on load;
//! * losses are reported both as linear factors in `(0, 1]` and as
//!   positive dB, `dB = -10 log10(factor)`.
//!
//! ```
//! use dermawave_core::dielectrics::{mixture_permittivity, refractive_index};
//! use dermawave_core::losses::absorption_coefficient;
//! use dermawave_core::materials::Catalog;
//!
//! let catalog = Catalog::builtin();
//! let cell = catalog.cell_species("fibroblasts").unwrap();
//! let eps = mixture_permittivity(&cell.composition, 1.0e11, &catalog).unwrap();
//! let n = refractive_index(eps);
//! let mu = absorption_coefficient(&n, 1.0e11);
//! assert!(eps.eps_imag > 0.0 && n.n_real > 1.0 && mu > 0.0);
//! ```

#![no_std]
// validation uses negated float comparisons (`!(x > 0.0)`) so NaN inputs
// fail closed; fixture literals intentionally carry full oracle precision
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dielectrics;
pub mod losses;
pub mod materials;
pub mod rng;
pub mod scenario;
pub mod simulate;

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Frequency band the catalog parameters are fitted for, in Hz.
///
/// Evaluation outside this band is permitted (sweeps with guard bands are
/// common) but callers that surface results to users should warn.
pub const VALIDITY_BAND_HZ: (f64, f64) = (1.0e11, 1.0e12);

/// True when `f_hz` lies inside [`VALIDITY_BAND_HZ`].
pub fn in_validity_band(f_hz: f64) -> bool {
    f_hz >= VALIDITY_BAND_HZ.0 && f_hz <= VALIDITY_BAND_HZ.1
}
