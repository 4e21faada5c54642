//! Monte Carlo driver producing the model observables: per-voxel
//! absorption/scattering coefficient fields, per-layer coefficient
//! distributions, and attenuation-vs-distance breakdowns, pooled over
//! seeded phantom realizations.
//!
//! The driver is split so hosts can parallelize: [`run_realization`]
//! evaluates one seeded phantom end to end, and [`pool_report`] reduces a
//! list of realization outputs (in their given order) into the final
//! report. [`run_monte_carlo`] is the sequential composition of the two;
//! any parallel schedule that preserves output order produces the
//! identical report.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

// float math comes from num-traits/libm in no_std builds; std-linked test
// builds resolve the same calls through inherent methods instead
#[allow(unused_imports)]
use num_traits::Float;

use crate::dielectrics::{
    mixture_permittivity, refractive_index, ComplexPermittivity, DielectricsError,
    MixtureComposition, RefractiveIndex,
};
use crate::losses::{
    absorption_coefficient, absorption_loss, scattering_coefficients, scattering_loss,
    spreading_loss, LossBreakdown, LossTerm, LossesError, PropagationConfig, ScattererPopulation,
};
use crate::materials::{Catalog, LayerId};
use crate::rng;
use crate::scenario::{
    generate_scenario, GridConfig, MaterialLabel, ScenarioError, ScenarioRealization, SpeciesStats,
};

#[derive(Debug, Clone, PartialEq)]
pub enum SimulateError {
    Scenario(ScenarioError),
    Dielectrics(DielectricsError),
    Losses(LossesError),
    InvalidConfig(String),
}

impl fmt::Display for SimulateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Scenario(e) => write!(f, "{e}"),
            Self::Dielectrics(e) => write!(f, "{e}"),
            Self::Losses(e) => write!(f, "{e}"),
            Self::InvalidConfig(msg) => write!(f, "invalid simulation config: {msg}"),
        }
    }
}

impl core::error::Error for SimulateError {}

impl From<ScenarioError> for SimulateError {
    fn from(e: ScenarioError) -> Self {
        Self::Scenario(e)
    }
}

impl From<DielectricsError> for SimulateError {
    fn from(e: DielectricsError) -> Self {
        Self::Dielectrics(e)
    }
}

impl From<LossesError> for SimulateError {
    fn from(e: LossesError) -> Self {
        Self::Losses(e)
    }
}

/// Which coefficient a histogram is over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CoefficientKind {
    /// Molecular absorption, reported in m^-1.
    Abs,
    /// Scattering, reported in um^-1.
    Sca,
}

impl CoefficientKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Abs => "abs",
            Self::Sca => "sca",
        }
    }
}

/// The composition a voxel label refers to.
///
/// Vessel lumen voxels are treated as pure water (blood plasma is not a
/// catalog material; water is the minimal assumption and the dominant
/// plasma constituent).
pub fn material_composition(label: MaterialLabel, catalog: &Catalog) -> MixtureComposition {
    match label {
        MaterialLabel::Ecm(layer) => catalog.ecm_composition(layer).clone(),
        MaterialLabel::VesselLumen => MixtureComposition::water_host(0.0, 0.0),
        MaterialLabel::Cell(i) => catalog.cells[i].composition.clone(),
    }
}

/// Permittivity, index and absorption coefficient of every label at one
/// frequency; the memoization table behind the per-voxel evaluation
/// (each distinct material is evaluated exactly once per frequency).
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialSpectra {
    pub frequency_hz: f64,
    pub eps: Vec<ComplexPermittivity>,
    pub index: Vec<RefractiveIndex>,
    pub mu_abs_per_m: Vec<f64>,
}

pub fn material_spectra(
    label_table: &[MaterialLabel],
    f_hz: f64,
    catalog: &Catalog,
) -> Result<MaterialSpectra, DielectricsError> {
    let mut eps = Vec::with_capacity(label_table.len());
    let mut index = Vec::with_capacity(label_table.len());
    let mut mu_abs = Vec::with_capacity(label_table.len());
    for &label in label_table {
        let e = mixture_permittivity(&material_composition(label, catalog), f_hz, catalog)?;
        let n = refractive_index(e);
        eps.push(e);
        index.push(n);
        mu_abs.push(absorption_coefficient(&n, f_hz));
    }
    Ok(MaterialSpectra {
        frequency_hz: f_hz,
        eps,
        index,
        mu_abs_per_m: mu_abs,
    })
}

/// Layer-level scattering coefficients in m^-1 at one frequency.
///
/// Populations use the achieved (placed) densities over the layer volume,
/// not the nominal catalog densities, and the layer's ECM real index sets
/// the in-medium wavelength. Evaluating at the layer level (rather than
/// per-voxel sphere occupancy) avoids quantization artifacts at the
/// default 10 um voxel pitch.
pub fn layer_scattering_coefficients(
    real: &ScenarioRealization,
    spectra: &MaterialSpectra,
    catalog: &Catalog,
) -> Result<[f64; 3], LossesError> {
    let mut out = [0.0f64; 3];
    let lateral = real.grid.extent_m[0] * real.grid.extent_m[1];
    for layer in LayerId::ALL {
        let spec = catalog.layer(layer);
        let (lo, hi) = spec.depth_interval_m();
        let thickness = hi.min(real.grid.extent_m[2]) - lo.max(0.0);
        if thickness <= 0.0 {
            continue;
        }
        let volume = lateral * thickness;
        let mut pops = Vec::new();
        for s in &real.stats {
            if s.layer != layer || s.achieved == 0 {
                continue;
            }
            let species = &catalog.cells[s.species_index];
            pops.push(ScattererPopulation {
                species: species.id.clone(),
                radius_m: species.radius_m(),
                number_density_per_m3: s.achieved as f64 / volume,
                index: spectra.index[4 + s.species_index],
            });
        }
        let medium_n_real = spectra.index[layer as usize].n_real;
        let (mu_s, mu_l) = scattering_coefficients(&pops, spectra.frequency_hz, medium_n_real)?;
        out[layer as usize] = mu_s + mu_l;
    }
    Ok(out)
}

/// Per-voxel coefficient field at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub frequency_hz: f64,
    pub dims: [usize; 3],
    /// Molecular absorption coefficient per voxel, m^-1.
    pub mu_abs_per_m: Vec<f64>,
    /// Scattering coefficient per voxel, um^-1 (the distribution unit).
    pub mu_sca_per_um: Vec<f64>,
}

/// Evaluate the coefficient field of a realization: voxel composition ->
/// mixture permittivity -> index -> `mu_abs = 4 pi n''/lambda_g`, and the
/// layer-level scattering coefficient of the voxel's layer.
pub fn per_voxel_coefficients(
    real: &ScenarioRealization,
    f_hz: f64,
    catalog: &Catalog,
) -> Result<CoefficientField, SimulateError> {
    let dims = real.grid.dims()?;
    let spectra = material_spectra(&real.label_table, f_hz, catalog)?;
    let layer_sca = layer_scattering_coefficients(real, &spectra, catalog)?;

    let slab = dims[0] * dims[1];
    let mut mu_abs = Vec::with_capacity(real.labels.len());
    let mut mu_sca = Vec::with_capacity(real.labels.len());
    for iz in 0..dims[2] {
        let layer = real.layer_of_iz(iz, catalog);
        let sca_um = layer_sca[layer as usize] * 1e-6;
        for &label in &real.labels[iz * slab..(iz + 1) * slab] {
            mu_abs.push(spectra.mu_abs_per_m[label as usize]);
            mu_sca.push(sca_um);
        }
    }
    Ok(CoefficientField {
        frequency_hz: f_hz,
        dims,
        mu_abs_per_m: mu_abs,
        mu_sca_per_um: mu_sca,
    })
}

/// Normalized per-layer distribution of one coefficient.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LayerHistogram {
    pub layer: LayerId,
    pub kind: CoefficientKind,
    pub frequency_hz: f64,
    /// `bins + 1` strictly increasing edges starting at 0.
    pub bin_edges: Vec<f64>,
    /// Probability density per unit coefficient; integrates to 1.
    pub density: Vec<f64>,
}

impl LayerHistogram {
    /// Sum of `density * bin_width`; 1 for any non-empty histogram.
    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .sum()
    }
}

/// Histogram over `[0, max * 1.05]` with uniform bins, normalized to unit
/// integral. An all-zero sample degenerates to `[0, 1]` so the edges stay
/// strictly increasing.
pub fn histogram_from_values(
    layer: LayerId,
    kind: CoefficientKind,
    frequency_hz: f64,
    values: &[f64],
    bins: usize,
) -> Result<LayerHistogram, SimulateError> {
    if bins < 2 {
        return Err(SimulateError::InvalidConfig(alloc::format!(
            "histogram needs at least 2 bins, got {bins}"
        )));
    }
    if values.is_empty() {
        return Err(SimulateError::InvalidConfig(String::from(
            "histogram over an empty sample",
        )));
    }
    let max = values.iter().fold(0.0f64, |a, &b| if b > a { b } else { a });
    let hi = if max > 0.0 { max * 1.05 } else { 1.0 };
    let width = hi / bins as f64;
    let mut counts = alloc::vec![0u64; bins];
    for &v in values {
        let idx = ((v / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let total = values.len() as f64;
    let density: Vec<f64> = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    let bin_edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
    Ok(LayerHistogram {
        layer,
        kind,
        frequency_hz,
        bin_edges,
        density,
    })
}

/// Voxel values of one field grouped by layer, for histogramming and
/// pooling. Index by `LayerId as usize`.
pub fn values_by_layer(
    field: &CoefficientField,
    real: &ScenarioRealization,
    kind: CoefficientKind,
    catalog: &Catalog,
) -> [Vec<f64>; 3] {
    let dims = field.dims;
    let slab = dims[0] * dims[1];
    let source = match kind {
        CoefficientKind::Abs => &field.mu_abs_per_m,
        CoefficientKind::Sca => &field.mu_sca_per_um,
    };
    let mut out: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for iz in 0..dims[2] {
        let layer = real.layer_of_iz(iz, catalog) as usize;
        out[layer].extend_from_slice(&source[iz * slab..(iz + 1) * slab]);
    }
    out
}

/// Per-layer histograms of both coefficient kinds for one field.
pub fn layer_histograms(
    field: &CoefficientField,
    real: &ScenarioRealization,
    catalog: &Catalog,
    bins: usize,
) -> Result<Vec<LayerHistogram>, SimulateError> {
    let mut out = Vec::with_capacity(6);
    for kind in [CoefficientKind::Abs, CoefficientKind::Sca] {
        let grouped = values_by_layer(field, real, kind, catalog);
        for layer in LayerId::ALL {
            let values = &grouped[layer as usize];
            if values.is_empty() {
                continue;
            }
            out.push(histogram_from_values(
                layer,
                kind,
                field.frequency_hz,
                values,
                bins,
            )?);
        }
    }
    Ok(out)
}

/// One attenuation table entry.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AttenuationRow {
    pub frequency_hz: f64,
    pub distance_m: f64,
    pub loss: LossBreakdown,
}

/// How the depth path integral samples each slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "mode"))]
pub enum PathSampling {
    /// Mean over the lateral plane per depth slice (the default).
    LateralMean,
    /// A single voxel column, for heterogeneity studies.
    SingleRay { ix: usize, iy: usize },
}

/// Attenuation vs depth through the phantom.
///
/// Absorption and scattering integrate the per-voxel coefficients down
/// the depth axis (piecewise-constant path integral), sampling each slice
/// per `sampling`; spreading uses the depth-weighted mean `n'` along the
/// path.
pub fn attenuation_profile(
    freqs_hz: &[f64],
    depths_m: &[f64],
    real: &ScenarioRealization,
    catalog: &Catalog,
    directivity: f64,
    sampling: PathSampling,
) -> Result<Vec<AttenuationRow>, SimulateError> {
    let dims = real.grid.dims()?;
    let dx = real.grid.dx_m;
    let z_max = real.grid.extent_m[2];
    for &d in depths_m {
        if !(0.0..=z_max * (1.0 + 1e-9)).contains(&d) {
            return Err(SimulateError::InvalidConfig(alloc::format!(
                "depth {d} m outside the grid depth [0, {z_max}] m"
            )));
        }
    }

    if let PathSampling::SingleRay { ix, iy } = sampling {
        if ix >= dims[0] || iy >= dims[1] {
            return Err(SimulateError::InvalidConfig(alloc::format!(
                "ray column ({ix}, {iy}) outside the {} x {} lateral grid",
                dims[0], dims[1]
            )));
        }
    }

    let slab = (dims[0] * dims[1]) as f64;
    let mut rows = Vec::with_capacity(freqs_hz.len() * depths_m.len());
    for &f in freqs_hz {
        let spectra = material_spectra(&real.label_table, f, catalog)?;
        let layer_sca = layer_scattering_coefficients(real, &spectra, catalog)?;

        // per-slice sample values down the depth axis
        let nz = dims[2];
        let mut abs_slice = Vec::with_capacity(nz);
        let mut n_slice = Vec::with_capacity(nz);
        let mut sca_slice = Vec::with_capacity(nz);
        for iz in 0..nz {
            match sampling {
                PathSampling::LateralMean => {
                    let voxels = &real.labels[iz * dims[0] * dims[1]..(iz + 1) * dims[0] * dims[1]];
                    let mut abs_sum = 0.0;
                    let mut n_sum = 0.0;
                    for &label in voxels {
                        abs_sum += spectra.mu_abs_per_m[label as usize];
                        n_sum += spectra.index[label as usize].n_real;
                    }
                    abs_slice.push(abs_sum / slab);
                    n_slice.push(n_sum / slab);
                }
                PathSampling::SingleRay { ix, iy } => {
                    let label = real.labels[ix + dims[0] * (iy + dims[1] * iz)] as usize;
                    abs_slice.push(spectra.mu_abs_per_m[label]);
                    n_slice.push(spectra.index[label].n_real);
                }
            }
            sca_slice.push(layer_sca[real.layer_of_iz(iz, catalog) as usize]);
        }
        // prefix integrals over whole slices
        let prefix = |slice: &[f64]| {
            let mut acc = Vec::with_capacity(nz + 1);
            acc.push(0.0);
            let mut sum = 0.0;
            for &v in slice {
                sum += v * dx;
                acc.push(sum);
            }
            acc
        };
        let abs_cum = prefix(&abs_slice);
        let n_cum = prefix(&n_slice);
        let sca_cum = prefix(&sca_slice);
        let integrate = |cum: &[f64], slice: &[f64], d: f64| {
            let k = ((d / dx).floor() as usize).min(nz);
            let rem = (d - k as f64 * dx).max(0.0);
            if k >= nz {
                cum[nz]
            } else {
                cum[k] + rem * slice[k]
            }
        };

        for &d in depths_m {
            let (spreading, absorption, scattering) = if d == 0.0 {
                (LossTerm::UNITY, LossTerm::UNITY, LossTerm::UNITY)
            } else {
                let n_mean = integrate(&n_cum, &n_slice, d) / d;
                let cfg = PropagationConfig {
                    frequency_hz: f,
                    distance_m: d,
                    directivity,
                    medium_index: RefractiveIndex::new(n_mean, 0.0),
                };
                let abs_int = integrate(&abs_cum, &abs_slice, d);
                let sca_int = integrate(&sca_cum, &sca_slice, d);
                (
                    spreading_loss(&cfg),
                    absorption_loss(abs_int / d, d),
                    scattering_loss(sca_int / d, 0.0, d),
                )
            };
            rows.push(AttenuationRow {
                frequency_hz: f,
                distance_m: d,
                loss: LossBreakdown::assemble(spreading, absorption, scattering),
            });
        }
    }
    Ok(rows)
}

/// Full Monte Carlo configuration. `grid.seed` is the master seed the
/// per-realization seeds derive from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SimulationConfig {
    pub grid: GridConfig,
    pub frequencies_hz: Vec<f64>,
    pub depths_m: Vec<f64>,
    pub n_realizations: usize,
    pub histogram_bins: usize,
    pub directivity: f64,
    pub path_sampling: PathSampling,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            frequencies_hz: alloc::vec![1.0e11, 1.0e12],
            depths_m: (0..=10).map(|i| i as f64 * 0.5e-3).collect(),
            n_realizations: 10,
            histogram_bins: 64,
            directivity: 1.0,
            path_sampling: PathSampling::LateralMean,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimulateError> {
        self.grid.dims()?;
        let bad = |msg: String| Err(SimulateError::InvalidConfig(msg));
        if self.n_realizations < 1 {
            return bad(String::from("n_realizations must be >= 1"));
        }
        if self.histogram_bins < 2 {
            return bad(String::from("histogram_bins must be >= 2"));
        }
        if !(self.directivity >= 1.0) {
            return bad(alloc::format!("directivity must be >= 1, got {}", self.directivity));
        }
        if self.frequencies_hz.is_empty() {
            return bad(String::from("frequency list is empty"));
        }
        if self.depths_m.is_empty() {
            return bad(String::from("depth list is empty"));
        }
        for &f in &self.frequencies_hz {
            if !(f > 0.0) {
                return bad(alloc::format!("frequency {f} Hz must be positive"));
            }
        }
        let z = self.grid.extent_m[2];
        for &d in &self.depths_m {
            if !(0.0..=z * (1.0 + 1e-9)).contains(&d) {
                return bad(alloc::format!("depth {d} m outside the grid depth [0, {z}] m"));
            }
        }
        if let PathSampling::SingleRay { ix, iy } = self.path_sampling {
            let dims = self.grid.dims()?;
            if ix >= dims[0] || iy >= dims[1] {
                return bad(alloc::format!(
                    "ray column ({ix}, {iy}) outside the {} x {} lateral grid",
                    dims[0], dims[1]
                ));
            }
        }
        Ok(())
    }
}

/// Per-layer voxel values of one `(kind, frequency)` pair in one
/// realization, kept for pooled histogramming.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerValues {
    pub kind: CoefficientKind,
    pub frequency_hz: f64,
    /// Indexed by `LayerId as usize`.
    pub values: [Vec<f64>; 3],
}

/// Everything one seeded realization contributes to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationOutput {
    pub seed: u64,
    pub layer_values: Vec<LayerValues>,
    pub attenuation: Vec<AttenuationRow>,
    pub stats: Vec<SpeciesStats>,
    pub skipped_vessels: usize,
}

/// Generate and evaluate one seeded realization.
pub fn run_realization(
    cfg: &SimulationConfig,
    catalog: &Catalog,
    seed: u64,
) -> Result<RealizationOutput, SimulateError> {
    let grid = GridConfig { seed, ..cfg.grid };
    let real = generate_scenario(&grid, catalog)?;
    let mut layer_values = Vec::with_capacity(2 * cfg.frequencies_hz.len());
    for &f in &cfg.frequencies_hz {
        let field = per_voxel_coefficients(&real, f, catalog)?;
        for kind in [CoefficientKind::Abs, CoefficientKind::Sca] {
            layer_values.push(LayerValues {
                kind,
                frequency_hz: f,
                values: values_by_layer(&field, &real, kind, catalog),
            });
        }
    }
    let attenuation = attenuation_profile(
        &cfg.frequencies_hz,
        &cfg.depths_m,
        &real,
        catalog,
        cfg.directivity,
        cfg.path_sampling,
    )?;
    Ok(RealizationOutput {
        seed,
        layer_values,
        attenuation,
        stats: real.stats.clone(),
        skipped_vessels: real.skipped_vessels,
    })
}

/// Mean and spread of the attenuation at one `(f, d)` grid point.
///
/// `mean` is rebuilt from the mean dB components, so the factorization
/// identity (total factor = product, total dB = sum) holds row-wise on
/// the pooled table exactly as it does per realization.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AttenuationSummary {
    pub frequency_hz: f64,
    pub distance_m: f64,
    pub mean: LossBreakdown,
    /// Population standard deviation of the dB components
    /// `[spreading, absorption, scattering, total]`.
    pub std_db: [f64; 4],
}

/// Achieved-density summary for one `(species, layer)` pair.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PooledSpecies {
    pub species: String,
    pub layer: LayerId,
    pub nominal_per_mm3: f64,
    pub mean_target: f64,
    pub mean_achieved: f64,
    pub mean_achieved_per_mm3: f64,
}

/// The pooled Monte Carlo report.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    pub attenuation: Vec<AttenuationSummary>,
    pub histograms: Vec<LayerHistogram>,
    pub species: Vec<PooledSpecies>,
    pub skipped_vessels_total: usize,
}

/// Deterministic ordered reduction of realization outputs.
pub fn pool_report(
    cfg: &SimulationConfig,
    catalog: &Catalog,
    outputs: &[RealizationOutput],
) -> Result<SimulationReport, SimulateError> {
    if outputs.is_empty() {
        return Err(SimulateError::InvalidConfig(String::from("no realizations to pool")));
    }
    let n = outputs.len() as f64;

    // attenuation: mean and population std of the dB components per row
    let rows = outputs[0].attenuation.len();
    let mut attenuation = Vec::with_capacity(rows);
    for row in 0..rows {
        let f = outputs[0].attenuation[row].frequency_hz;
        let d = outputs[0].attenuation[row].distance_m;
        let components = |o: &RealizationOutput| {
            let l = &o.attenuation[row].loss;
            [l.spreading.db, l.absorption.db, l.scattering.db, l.total.db]
        };
        let mut mean = [0.0f64; 4];
        for o in outputs {
            let c = components(o);
            for i in 0..4 {
                mean[i] += c[i];
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = [0.0f64; 4];
        for o in outputs {
            let c = components(o);
            for i in 0..4 {
                let dlt = c[i] - mean[i];
                var[i] += dlt * dlt;
            }
        }
        let std_db = [
            (var[0] / n).sqrt(),
            (var[1] / n).sqrt(),
            (var[2] / n).sqrt(),
            (var[3] / n).sqrt(),
        ];
        let term = |db: f64| LossTerm {
            factor: 10f64.powf(-db / 10.0),
            db,
        };
        attenuation.push(AttenuationSummary {
            frequency_hz: f,
            distance_m: d,
            mean: LossBreakdown::assemble(term(mean[0]), term(mean[1]), term(mean[2])),
            std_db,
        });
    }

    // histograms pooled over all realizations per (kind, frequency, layer)
    let mut histograms = Vec::new();
    for &f in &cfg.frequencies_hz {
        for kind in [CoefficientKind::Abs, CoefficientKind::Sca] {
            let mut pooled: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
            for o in outputs {
                for lv in &o.layer_values {
                    if lv.kind == kind && lv.frequency_hz == f {
                        for (pool, values) in pooled.iter_mut().zip(&lv.values) {
                            pool.extend_from_slice(values);
                        }
                    }
                }
            }
            for layer in LayerId::ALL {
                let values = &pooled[layer as usize];
                if values.is_empty() {
                    continue;
                }
                histograms.push(histogram_from_values(
                    layer,
                    kind,
                    f,
                    values,
                    cfg.histogram_bins,
                )?);
            }
        }
    }

    // achieved densities pooled per (species, layer)
    let mut species: Vec<PooledSpecies> = Vec::new();
    for o in outputs {
        for s in &o.stats {
            let id = &catalog.cells[s.species_index].id;
            let entry = species
                .iter_mut()
                .find(|p| &p.species == id && p.layer == s.layer);
            let entry = match entry {
                Some(e) => e,
                None => {
                    species.push(PooledSpecies {
                        species: id.clone(),
                        layer: s.layer,
                        nominal_per_mm3: catalog.cells[s.species_index].density_per_mm3,
                        mean_target: 0.0,
                        mean_achieved: 0.0,
                        mean_achieved_per_mm3: 0.0,
                    });
                    species.last_mut().expect("just pushed")
                }
            };
            entry.mean_target += s.target as f64 / n;
            entry.mean_achieved += s.achieved as f64 / n;
            entry.mean_achieved_per_mm3 += s.achieved_per_mm3() / n;
        }
    }

    Ok(SimulationReport {
        config: cfg.clone(),
        master_seed: cfg.grid.seed,
        seeds: outputs.iter().map(|o| o.seed).collect(),
        attenuation,
        histograms,
        species,
        skipped_vessels_total: outputs.iter().map(|o| o.skipped_vessels).sum(),
    })
}

/// Per-realization seeds derived from the master seed.
pub fn realization_seeds(cfg: &SimulationConfig) -> Vec<u64> {
    rng::derive_seeds(cfg.grid.seed, "realization", cfg.n_realizations)
}

/// Sequential Monte Carlo run: derive seeds, evaluate every realization,
/// pool. Deterministic in `(config, catalog)`.
pub fn run_monte_carlo(cfg: &SimulationConfig, catalog: &Catalog) -> Result<SimulationReport, SimulateError> {
    cfg.validate()?;
    let mut outputs = Vec::with_capacity(cfg.n_realizations);
    for seed in realization_seeds(cfg) {
        outputs.push(run_realization(cfg, catalog, seed)?);
    }
    pool_report(cfg, catalog, &outputs)
}
