//! The material catalog: Debye parameters of the pure components, cell
//! species geometry and composition, layer boundaries, ECM compositions,
//! and vessel policies.
//!
//! A catalog is loaded from a line-oriented text format (see [`Catalog::parse`])
//! or taken from the embedded defaults ([`Catalog::builtin`]). Catalog
//! records keep the file units (um, ps, mm^-3, mm^-2) verbatim so that
//! dump -> parse round-trips are exact; accessors convert to SI at the point
//! of use.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use crate::dielectrics::{DebyeParameters, MixtureComposition, RelaxationBranch};
use crate::rng::fnv1a64;

/// The pure dielectric components every mixture is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum ComponentId {
    Water = 0,
    Protein = 1,
    Lipid = 2,
}

impl ComponentId {
    pub const ALL: [ComponentId; 3] = [Self::Water, Self::Protein, Self::Lipid];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Water => "water",
            Self::Protein => "protein",
            Self::Lipid => "lipid",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "water" => Some(Self::Water),
            "protein" => Some(Self::Protein),
            "lipid" => Some(Self::Lipid),
            _ => None,
        }
    }
}

/// The three modeled skin layers, ordered by depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LayerId {
    Epidermis = 0,
    Dermis = 1,
    Hypodermis = 2,
}

impl LayerId {
    pub const ALL: [LayerId; 3] = [Self::Epidermis, Self::Dermis, Self::Hypodermis];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Epidermis => "epidermis",
            Self::Dermis => "dermis",
            Self::Hypodermis => "hypodermis",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "epidermis" => Some(Self::Epidermis),
            "dermis" => Some(Self::Dermis),
            "hypodermis" => Some(Self::Hypodermis),
            _ => None,
        }
    }
}

/// One relaxation branch in file units (relaxation time in ps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPs {
    pub delta_eps: f64,
    pub tau_ps: f64,
}

/// Literature min/max bounds behind a midpoint choice, in file units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceRange {
    pub eps_inf: (f64, f64),
    pub delta_eps: [Option<(f64, f64)>; 3],
    pub tau_ps: [Option<(f64, f64)>; 3],
}

/// Debye parameters of one pure component.
///
/// Equality ignores `source_range`: the range is documentation carried by
/// the embedded defaults (parsed catalogs have none) and does not affect
/// any computed result.
#[derive(Debug, Clone)]
pub struct ComponentRecord {
    pub id: ComponentId,
    pub eps_inf: f64,
    pub branches: [Option<BranchPs>; 3],
    pub source_range: Option<SourceRange>,
}

impl PartialEq for ComponentRecord {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.eps_inf == other.eps_inf && self.branches == other.branches
    }
}

impl ComponentRecord {
    /// The parameters in SI units for spectrum evaluation.
    pub fn params(&self) -> DebyeParameters {
        let mut p = DebyeParameters::new(self.eps_inf);
        for (i, branch) in self.branches.iter().enumerate() {
            if let Some(b) = branch {
                p.branches[i] = Some(crate::dielectrics::DebyeBranch {
                    delta_eps: b.delta_eps,
                    tau_s: b.tau_ps * 1e-12,
                });
            }
        }
        p
    }
}

/// Geometry, abundance and composition of one spherical cell species.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpecies {
    pub id: String,
    pub composition: MixtureComposition,
    pub diameter_um: f64,
    pub density_per_mm3: f64,
    /// Depth interval the centers are confined to; `None` for species that
    /// live inside vessels (red blood cells) rather than in a depth band.
    pub depth_interval_um: Option<(f64, f64)>,
}

impl CellSpecies {
    pub fn diameter_m(&self) -> f64 {
        self.diameter_um * 1e-6
    }

    pub fn radius_m(&self) -> f64 {
        0.5 * self.diameter_um * 1e-6
    }

    pub fn density_per_m3(&self) -> f64 {
        self.density_per_mm3 * 1e9
    }

    pub fn depth_interval_m(&self) -> Option<(f64, f64)> {
        self.depth_interval_um.map(|(a, b)| (a * 1e-6, b * 1e-6))
    }

    pub fn is_vessel_bound(&self) -> bool {
        self.depth_interval_um.is_none()
    }

    /// Nominal volume fraction `rho * (4/3) pi r^3` implied by the catalog
    /// density; may exceed 1 for literature densities that are not
    /// geometrically attainable with hard spheres.
    pub fn nominal_volume_fraction(&self) -> f64 {
        let r = 0.5 * self.diameter_um; // um
        let v_um3 = 4.0 / 3.0 * core::f64::consts::PI * r * r * r;
        self.density_per_mm3 * v_um3 * 1e-9
    }
}

/// How vessel segments of a layer are placed in depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VesselPlacement {
    /// Centers confined to the upper `fraction` of the layer depth
    /// (superficial capillary beds).
    UpperFraction(f64),
    /// Centers uniform over the full layer depth.
    FullDepth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum VesselClass {
    Capillary,
    Deep,
}

impl VesselClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Capillary => "capillary",
            Self::Deep => "deep",
        }
    }
}

/// Vessel geometry defaults for one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VesselPolicy {
    pub class: VesselClass,
    pub radius_um: f64,
    pub density_per_mm2: f64,
    pub placement: VesselPlacement,
}

impl VesselPolicy {
    pub fn radius_m(&self) -> f64 {
        self.radius_um * 1e-6
    }

    pub fn density_per_m2(&self) -> f64 {
        self.density_per_mm2 * 1e6
    }
}

/// Depth band, ECM composition and vessel policy of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub id: LayerId,
    pub depth_interval_um: (f64, f64),
    pub ecm: MixtureComposition,
    pub vessels: Option<VesselPolicy>,
}

impl LayerSpec {
    pub fn depth_interval_m(&self) -> (f64, f64) {
        (self.depth_interval_um.0 * 1e-6, self.depth_interval_um.1 * 1e-6)
    }

    pub fn thickness_m(&self) -> f64 {
        let (a, b) = self.depth_interval_m();
        b - a
    }
}

/// Capillaries occupy the upper part of the dermis; this is the default
/// depth fraction they are confined to.
pub const CAPILLARY_ZONE_FRACTION: f64 = 0.2;

const SCHEMA_VERSION: u32 = 1;

/// Validated parameter catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub schema_version: u32,
    pub components: [ComponentRecord; 3],
    pub cells: Vec<CellSpecies>,
    pub layers: [LayerSpec; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub enum CatalogError {
    /// Syntax-level failure with the 1-based line it occurred on.
    Parse { line: usize, message: String },
    /// Semantic invariant violations, listed exhaustively.
    Invalid(Vec<String>),
    UnknownCell(String),
}

impl fmt::Display for CatalogError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse { line, message } => write!(f, "catalog parse error, line {line}: {message}"),
            Self::Invalid(violations) => {
                write!(f, "catalog validation failed ({} issue(s)):", violations.len())?;
                for v in violations {
                    write!(f, "\n  - {v}")?;
                }
                Ok(())
            }
            Self::UnknownCell(id) => write!(f, "unknown cell species '{id}'"),
        }
    }
}

impl core::error::Error for CatalogError {}

impl Catalog {
    /// The embedded default catalog.
    ///
    /// Literature ranges are resolved to their arithmetic midpoints and the
    /// water fraction of every composition absorbs the residual
    /// `1 - protein - lipid` so fractions sum to exactly one. The ranges
    /// themselves are kept in [`SourceRange`] records and echoed as comments
    /// by [`Catalog::dump`] so users can override the midpoints in a file.
    pub fn builtin() -> Catalog {
        let components = [
            ComponentRecord {
                id: ComponentId::Water,
                eps_inf: 1.8,
                branches: [Some(BranchPs { delta_eps: 78.0, tau_ps: 8.3 }), None, None],
                source_range: None,
            },
            ComponentRecord {
                id: ComponentId::Protein,
                eps_inf: 2.25,
                branches: [
                    Some(BranchPs { delta_eps: 30.0, tau_ps: 50.5 }),
                    Some(BranchPs { delta_eps: 3.0, tau_ps: 5.05 }),
                    Some(BranchPs { delta_eps: 1.25, tau_ps: 0.055 }),
                ],
                source_range: Some(SourceRange {
                    eps_inf: (2.0, 2.5),
                    delta_eps: [Some((10.0, 50.0)), Some((1.0, 5.0)), Some((0.5, 2.0))],
                    tau_ps: [Some((1.0, 100.0)), Some((0.1, 10.0)), Some((0.01, 0.1))],
                }),
            },
            ComponentRecord {
                id: ComponentId::Lipid,
                eps_inf: 2.1,
                branches: [
                    None, // alpha relaxation vanishing for lipids
                    Some(BranchPs { delta_eps: 2.0, tau_ps: 0.55 }),
                    Some(BranchPs { delta_eps: 0.6, tau_ps: 0.03 }),
                ],
                source_range: Some(SourceRange {
                    eps_inf: (2.0, 2.2),
                    delta_eps: [None, Some((1.0, 3.0)), Some((0.2, 1.0))],
                    tau_ps: [None, Some((0.1, 1.0)), Some((0.01, 0.05))],
                }),
            },
        ];

        let cell = |id: &str, protein: f64, lipid: f64, d_um: f64, rho_mm3: f64, z: Option<(f64, f64)>| {
            CellSpecies {
                id: id.to_string(),
                composition: MixtureComposition::water_host(protein, lipid),
                diameter_um: d_um,
                density_per_mm3: rho_mm3,
                depth_interval_um: z,
            }
        };
        let cells = alloc::vec![
            cell("corneocytes", 0.75, 0.125, 23.0, 1.0e7, Some((0.0, 20.0))),
            cell("granular_keratinocytes", 0.225, 0.04, 15.0, 0.8e6, Some((20.0, 50.0))),
            cell("spinous_keratinocytes", 0.175, 0.025, 15.0, 0.7e6, Some((50.0, 120.0))),
            cell("melanocytes", 0.175, 0.025, 14.0, 2.0e4, Some((50.0, 120.0))),
            cell("basal_keratinocytes", 0.175, 0.025, 8.0, 1.0e6, Some((120.0, 130.0))),
            cell("langerhans_cells", 0.225, 0.04, 10.0, 3.0e4, Some((50.0, 120.0))),
            // composition assumed identical to melanocytes (both are sparse
            // basal-region cells); no measured fractions available
            cell("merkel_cells", 0.175, 0.025, 10.0, 1.0e3, Some((50.0, 120.0))),
            cell("fibroblasts", 0.175, 0.025, 20.0, 5.0e4, Some((130.0, 3000.0))),
            cell("red_blood_cells", 0.30, 0.015, 8.0, 6.0e5, None),
            cell("adipocytes", 0.075, 0.775, 80.0, 1.0e5, Some((3000.0, 5000.0))),
        ];

        let layers = [
            LayerSpec {
                id: LayerId::Epidermis,
                depth_interval_um: (0.0, 130.0),
                ecm: MixtureComposition::water_host(0.275, 0.05),
                vessels: None, // avascular
            },
            LayerSpec {
                id: LayerId::Dermis,
                depth_interval_um: (130.0, 3000.0),
                ecm: MixtureComposition::water_host(0.25, 0.02),
                vessels: Some(VesselPolicy {
                    class: VesselClass::Capillary,
                    radius_um: 4.0,
                    density_per_mm2: 2000.0,
                    placement: VesselPlacement::UpperFraction(CAPILLARY_ZONE_FRACTION),
                }),
            },
            LayerSpec {
                id: LayerId::Hypodermis,
                depth_interval_um: (3000.0, 5000.0),
                ecm: MixtureComposition::water_host(0.075, 0.675),
                vessels: Some(VesselPolicy {
                    class: VesselClass::Deep,
                    radius_um: 15.0,
                    density_per_mm2: 500.0,
                    placement: VesselPlacement::FullDepth,
                }),
            },
        ];

        Catalog {
            schema_version: SCHEMA_VERSION,
            components,
            cells,
            layers,
        }
    }

    /// Debye parameters (SI) of a pure component.
    pub fn component_params(&self, id: ComponentId) -> DebyeParameters {
        self.components[id as usize].params()
    }

    pub fn component(&self, id: ComponentId) -> &ComponentRecord {
        &self.components[id as usize]
    }

    /// Cell species by id.
    pub fn cell_species(&self, id: &str) -> Result<&CellSpecies, CatalogError> {
        self.cells
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| CatalogError::UnknownCell(id.to_string()))
    }

    pub fn cell_index(&self, id: &str) -> Option<usize> {
        self.cells.iter().position(|c| c.id == id)
    }

    pub fn layer(&self, id: LayerId) -> &LayerSpec {
        &self.layers[id as usize]
    }

    /// ECM composition of a layer.
    pub fn ecm_composition(&self, id: LayerId) -> &MixtureComposition {
        &self.layers[id as usize].ecm
    }

    /// The layer whose depth band contains the full interval of `cell`;
    /// `None` for vessel-bound species.
    pub fn layer_of_cell(&self, cell: &CellSpecies) -> Option<LayerId> {
        let (lo, hi) = cell.depth_interval_um?;
        self.layers
            .iter()
            .find(|l| lo >= l.depth_interval_um.0 && hi <= l.depth_interval_um.1)
            .map(|l| l.id)
    }

    /// Stable fingerprint of the catalog content (FNV-1a over the dump
    /// with comment and blank lines stripped, so annotations do not
    /// affect it), echoed in reports so runs can be reproduced.
    pub fn fingerprint(&self) -> u64 {
        let mut canonical = String::new();
        for line in self.dump().lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            canonical.push_str(line);
            canonical.push('\n');
        }
        fnv1a64(canonical.as_bytes())
    }

    /// Exhaustive invariant check; returns every violation found.
    pub fn validate(&self) -> Result<(), CatalogError> {
        let mut bad: Vec<String> = Vec::new();

        if self.schema_version != SCHEMA_VERSION {
            bad.push(format!(
                "schema_version must be {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }

        for rec in &self.components {
            let name = rec.id.as_str();
            if !(rec.eps_inf >= 1.0) {
                bad.push(format!("{name}.eps_inf must be >= 1 (got {})", rec.eps_inf));
            }
            for (i, branch) in rec.branches.iter().enumerate() {
                let bn = RelaxationBranch::ALL[i].name();
                if let Some(b) = branch {
                    if !(b.delta_eps >= 0.0) {
                        bad.push(format!(
                            "{name}.delta_eps_{bn} must be >= 0 (got {})",
                            b.delta_eps
                        ));
                    }
                    if !(b.tau_ps > 0.0) {
                        bad.push(format!("{name}.tau_{bn} must be positive (got {} ps)", b.tau_ps));
                    }
                }
            }
            if let Some(range) = &rec.source_range {
                let within = |x: f64, (lo, hi): (f64, f64)| x >= lo && x <= hi;
                if !within(rec.eps_inf, range.eps_inf) {
                    bad.push(format!("{name}.eps_inf outside its source range"));
                }
                for (i, branch) in rec.branches.iter().enumerate() {
                    let bn = RelaxationBranch::ALL[i].name();
                    if let Some(b) = branch {
                        if let Some(r) = range.delta_eps[i] {
                            if !within(b.delta_eps, r) {
                                bad.push(format!("{name}.delta_eps_{bn} outside its source range"));
                            }
                        }
                        if let Some(r) = range.tau_ps[i] {
                            if !within(b.tau_ps, r) {
                                bad.push(format!("{name}.tau_{bn} outside its source range"));
                            }
                        }
                    }
                }
            }
        }

        let check_mix = |bad: &mut Vec<String>, owner: &str, mix: &MixtureComposition| {
            if let Err(e) = mix.validate() {
                bad.push(format!("{owner}: {e}"));
            }
            // host + inclusions must account for the whole volume
            let total = mix.host_fraction() + mix.inclusion_sum();
            if (total - 1.0).abs() > 1e-12 {
                bad.push(format!("{owner}: fractions sum to {total}, expected 1"));
            }
        };

        let mut seen = Vec::new();
        for cell in &self.cells {
            let name = format!("cell.{}", cell.id);
            if seen.contains(&cell.id) {
                bad.push(format!("{name}: duplicate id"));
            }
            seen.push(cell.id.clone());
            if !(cell.diameter_um > 0.0) {
                bad.push(format!("{name}: diameter_um must be positive (got {})", cell.diameter_um));
            }
            if !(cell.density_per_mm3 >= 0.0) {
                bad.push(format!(
                    "{name}: density_per_mm3 must be >= 0 (got {})",
                    cell.density_per_mm3
                ));
            }
            check_mix(&mut bad, &name, &cell.composition);
            if let Some((lo, hi)) = cell.depth_interval_um {
                if !(lo < hi) {
                    bad.push(format!("{name}: z_min_um must be below z_max_um ({lo} >= {hi})"));
                }
                if self.layer_of_cell(cell).is_none() {
                    bad.push(format!(
                        "{name}: depth interval [{lo}, {hi}] um does not lie inside a single layer"
                    ));
                }
            }
        }

        // layers must tile [0, Z] in order without gaps or overlap
        let mut expected_lo = 0.0;
        for layer in &self.layers {
            let name = format!("layer.{}", layer.id.as_str());
            let (lo, hi) = layer.depth_interval_um;
            if lo != expected_lo {
                bad.push(format!(
                    "{name}: starts at {lo} um, expected {expected_lo} um (layers must tile depth)"
                ));
            }
            if !(lo < hi) {
                bad.push(format!("{name}: z_min_um must be below z_max_um ({lo} >= {hi})"));
            }
            expected_lo = hi;
            check_mix(&mut bad, &name, &layer.ecm);
            if let Some(v) = &layer.vessels {
                if !(v.radius_um > 0.0) {
                    bad.push(format!("{name}: vessel_radius_um must be positive (got {})", v.radius_um));
                }
                if !(v.density_per_mm2 >= 0.0) {
                    bad.push(format!(
                        "{name}: vessel_density_per_mm2 must be >= 0 (got {})",
                        v.density_per_mm2
                    ));
                }
            }
        }

        if bad.is_empty() {
            Ok(())
        } else {
            Err(CatalogError::Invalid(bad))
        }
    }

    /// Serialize to the versioned catalog text format.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# dermawave material catalog");
        let _ = writeln!(out, "schema_version = {}", self.schema_version);

        for rec in &self.components {
            let _ = writeln!(out);
            let _ = writeln!(out, "[component.{}]", rec.id.as_str());
            if let Some(range) = &rec.source_range {
                let _ = writeln!(
                    out,
                    "# midpoints of literature ranges; eps_inf {}-{}",
                    range.eps_inf.0, range.eps_inf.1
                );
                for (i, r) in range.delta_eps.iter().enumerate() {
                    if let (Some(de), Some(tau)) = (r, range.tau_ps[i]) {
                        let bn = RelaxationBranch::ALL[i].name();
                        let _ = writeln!(
                            out,
                            "# {bn}: delta_eps {}-{}, tau {}-{} ps",
                            de.0, de.1, tau.0, tau.1
                        );
                    }
                }
            }
            let _ = writeln!(out, "eps_inf = {}", rec.eps_inf);
            for (i, branch) in rec.branches.iter().enumerate() {
                if let Some(b) = branch {
                    let bn = RelaxationBranch::ALL[i].name();
                    let _ = writeln!(out, "delta_eps_{bn} = {}", b.delta_eps);
                    let _ = writeln!(out, "tau_{bn}_ps = {}", b.tau_ps);
                }
            }
        }

        let dump_mix = |out: &mut String, mix: &MixtureComposition| {
            let _ = writeln!(out, "water_frac = {}", mix.host_fraction());
            let _ = writeln!(out, "protein_frac = {}", mix.fraction(ComponentId::Protein));
            let _ = writeln!(out, "lipid_frac = {}", mix.fraction(ComponentId::Lipid));
        };

        for cell in &self.cells {
            let _ = writeln!(out);
            let _ = writeln!(out, "[cell.{}]", cell.id);
            if cell.id == "merkel_cells" {
                let _ = writeln!(out, "# composition assumed equal to melanocytes (no measured fractions)");
            }
            dump_mix(&mut out, &cell.composition);
            let _ = writeln!(out, "diameter_um = {}", cell.diameter_um);
            let _ = writeln!(out, "density_per_mm3 = {}", cell.density_per_mm3);
            match cell.depth_interval_um {
                Some((lo, hi)) => {
                    let _ = writeln!(out, "z_min_um = {lo}");
                    let _ = writeln!(out, "z_max_um = {hi}");
                }
                None => {
                    let _ = writeln!(out, "# no depth interval: placement is vessel-bound");
                }
            }
        }

        for layer in &self.layers {
            let _ = writeln!(out);
            let _ = writeln!(out, "[layer.{}]", layer.id.as_str());
            let _ = writeln!(out, "z_min_um = {}", layer.depth_interval_um.0);
            let _ = writeln!(out, "z_max_um = {}", layer.depth_interval_um.1);
            dump_mix(&mut out, &layer.ecm);
            let (r, d) = match &layer.vessels {
                Some(v) => (v.radius_um, v.density_per_mm2),
                None => (0.0, 0.0),
            };
            let _ = writeln!(out, "vessel_radius_um = {r}");
            let _ = writeln!(out, "vessel_density_per_mm2 = {d}");
        }

        out
    }

    /// Parse and validate a catalog from its text form.
    ///
    /// Syntax errors carry the offending line; semantic violations are
    /// collected exhaustively into [`CatalogError::Invalid`].
    pub fn parse(text: &str) -> Result<Catalog, CatalogError> {
        parser::parse(text)
    }
}

mod parser {
    use super::*;

    #[derive(Default)]
    struct PendingComponent {
        eps_inf: Option<f64>,
        delta_eps: [Option<f64>; 3],
        tau_ps: [Option<f64>; 3],
    }

    #[derive(Default)]
    struct PendingMix {
        water: Option<f64>,
        protein: Option<f64>,
        lipid: Option<f64>,
    }

    #[derive(Default)]
    struct PendingCell {
        mix: PendingMix,
        diameter_um: Option<f64>,
        density_per_mm3: Option<f64>,
        z_min_um: Option<f64>,
        z_max_um: Option<f64>,
        line: usize,
    }

    #[derive(Default)]
    struct PendingLayer {
        mix: PendingMix,
        z_min_um: Option<f64>,
        z_max_um: Option<f64>,
        vessel_radius_um: Option<f64>,
        vessel_density_per_mm2: Option<f64>,
        line: usize,
    }

    enum Section {
        Preamble,
        Component(ComponentId),
        Cell(usize),
        Layer(LayerId),
    }

    fn err(line: usize, message: impl Into<String>) -> CatalogError {
        CatalogError::Parse {
            line,
            message: message.into(),
        }
    }

    fn set_once(slot: &mut Option<f64>, value: f64, line: usize, key: &str) -> Result<(), CatalogError> {
        if slot.is_some() {
            return Err(err(line, format!("duplicate key '{key}'")));
        }
        *slot = Some(value);
        Ok(())
    }

    fn require(slot: Option<f64>, line: usize, owner: &str, key: &str) -> Result<f64, CatalogError> {
        slot.ok_or_else(|| err(line, format!("{owner} is missing required key '{key}'")))
    }

    fn mix_from(p: &PendingMix, line: usize, owner: &str) -> Result<MixtureComposition, CatalogError> {
        // water is required but carries no independent information: the
        // host fraction absorbs the residual 1 - protein - lipid
        require(p.water, line, owner, "water_frac")?;
        let protein = require(p.protein, line, owner, "protein_frac")?;
        let lipid = require(p.lipid, line, owner, "lipid_frac")?;
        Ok(MixtureComposition::water_host(protein, lipid))
    }

    pub(super) fn parse(text: &str) -> Result<Catalog, CatalogError> {
        let mut schema_version: Option<u32> = None;
        let mut components: [Option<(PendingComponent, usize)>; 3] = [None, None, None];
        let mut cells: Vec<(String, PendingCell)> = Vec::new();
        let mut layers: [Option<PendingLayer>; 3] = [None, None, None];
        let mut section = Section::Preamble;

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }

            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(lineno, "unterminated section header"))?
                    .trim();
                if schema_version.is_none() {
                    return Err(err(lineno, "schema_version must appear before the first section"));
                }
                section = match name.split_once('.') {
                    Some(("component", id)) => {
                        let id = ComponentId::from_name(id)
                            .ok_or_else(|| err(lineno, format!("unknown component '{id}'")))?;
                        if components[id as usize].is_some() {
                            return Err(err(lineno, format!("duplicate section [component.{}]", id.as_str())));
                        }
                        components[id as usize] = Some((PendingComponent::default(), lineno));
                        Section::Component(id)
                    }
                    Some(("cell", id)) => {
                        if cells.iter().any(|(existing, _)| existing == id) {
                            return Err(err(lineno, format!("duplicate section [cell.{id}]")));
                        }
                        cells.push((
                            id.to_string(),
                            PendingCell {
                                line: lineno,
                                ..PendingCell::default()
                            },
                        ));
                        Section::Cell(cells.len() - 1)
                    }
                    Some(("layer", id)) => {
                        let id = LayerId::from_name(id)
                            .ok_or_else(|| err(lineno, format!("unknown layer '{id}'")))?;
                        if layers[id as usize].is_some() {
                            return Err(err(lineno, format!("duplicate section [layer.{}]", id.as_str())));
                        }
                        layers[id as usize] = Some(PendingLayer {
                            line: lineno,
                            ..PendingLayer::default()
                        });
                        Section::Layer(id)
                    }
                    _ => return Err(err(lineno, format!("unknown section '[{name}]'"))),
                };
                continue;
            }

            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(lineno, "expected 'key = value'"))?;
            let key = key.trim();
            let value = value.trim();

            if matches!(section, Section::Preamble) {
                if key == "schema_version" {
                    let v: u32 = value
                        .parse()
                        .map_err(|_| err(lineno, format!("invalid schema_version '{value}'")))?;
                    if v != SCHEMA_VERSION {
                        return Err(err(lineno, format!("unsupported schema_version {v} (expected {SCHEMA_VERSION})")));
                    }
                    if schema_version.is_some() {
                        return Err(err(lineno, "duplicate schema_version"));
                    }
                    schema_version = Some(v);
                    continue;
                }
                return Err(err(lineno, format!("key '{key}' outside any section")));
            }

            let num: f64 = value
                .parse()
                .map_err(|_| err(lineno, format!("invalid number '{value}' for key '{key}'")))?;

            match &mut section {
                Section::Preamble => unreachable!(),
                Section::Component(id) => {
                    let (pending, _) = components[*id as usize].as_mut().expect("section was opened");
                    let branch_of = |suffix: &str| {
                        RelaxationBranch::ALL
                            .iter()
                            .position(|b| b.name() == suffix)
                    };
                    if key == "eps_inf" {
                        set_once(&mut pending.eps_inf, num, lineno, key)?;
                    } else if let Some(b) = key.strip_prefix("delta_eps_").and_then(branch_of) {
                        set_once(&mut pending.delta_eps[b], num, lineno, key)?;
                    } else if let Some(b) = key
                        .strip_prefix("tau_")
                        .and_then(|rest| rest.strip_suffix("_ps"))
                        .and_then(branch_of)
                    {
                        set_once(&mut pending.tau_ps[b], num, lineno, key)?;
                    } else {
                        return Err(err(lineno, format!("unknown component key '{key}'")));
                    }
                }
                Section::Cell(i) => {
                    let pending = &mut cells[*i].1;
                    match key {
                        "water_frac" => set_once(&mut pending.mix.water, num, lineno, key)?,
                        "protein_frac" => set_once(&mut pending.mix.protein, num, lineno, key)?,
                        "lipid_frac" => set_once(&mut pending.mix.lipid, num, lineno, key)?,
                        "diameter_um" => set_once(&mut pending.diameter_um, num, lineno, key)?,
                        "density_per_mm3" => set_once(&mut pending.density_per_mm3, num, lineno, key)?,
                        "z_min_um" => set_once(&mut pending.z_min_um, num, lineno, key)?,
                        "z_max_um" => set_once(&mut pending.z_max_um, num, lineno, key)?,
                        _ => return Err(err(lineno, format!("unknown cell key '{key}'"))),
                    }
                }
                Section::Layer(id) => {
                    let pending = layers[*id as usize].as_mut().expect("section was opened");
                    match key {
                        "water_frac" => set_once(&mut pending.mix.water, num, lineno, key)?,
                        "protein_frac" => set_once(&mut pending.mix.protein, num, lineno, key)?,
                        "lipid_frac" => set_once(&mut pending.mix.lipid, num, lineno, key)?,
                        "z_min_um" => set_once(&mut pending.z_min_um, num, lineno, key)?,
                        "z_max_um" => set_once(&mut pending.z_max_um, num, lineno, key)?,
                        "vessel_radius_um" => set_once(&mut pending.vessel_radius_um, num, lineno, key)?,
                        "vessel_density_per_mm2" => {
                            set_once(&mut pending.vessel_density_per_mm2, num, lineno, key)?
                        }
                        _ => return Err(err(lineno, format!("unknown layer key '{key}'"))),
                    }
                }
            }
        }

        if schema_version.is_none() {
            return Err(err(1, "missing 'schema_version = 1' header"));
        }

        // assemble components
        let mut built_components: Vec<ComponentRecord> = Vec::with_capacity(3);
        for id in ComponentId::ALL {
            let (pending, line) = components[id as usize]
                .take()
                .ok_or_else(|| err(1, format!("missing section [component.{}]", id.as_str())))?;
            let owner = format!("[component.{}]", id.as_str());
            let eps_inf = require(pending.eps_inf, line, &owner, "eps_inf")?;
            let mut branches = [None, None, None];
            for (i, slot) in branches.iter_mut().enumerate() {
                let bn = RelaxationBranch::ALL[i].name();
                match (pending.delta_eps[i], pending.tau_ps[i]) {
                    (Some(delta_eps), Some(tau_ps)) => {
                        *slot = Some(BranchPs { delta_eps, tau_ps });
                    }
                    (None, None) => {}
                    _ => {
                        return Err(err(
                            line,
                            format!("{owner}: delta_eps_{bn} and tau_{bn}_ps must be given together"),
                        ))
                    }
                }
            }
            built_components.push(ComponentRecord {
                id,
                eps_inf,
                branches,
                source_range: None,
            });
        }

        let mut built_cells = Vec::with_capacity(cells.len());
        for (id, pending) in cells {
            let owner = format!("[cell.{id}]");
            let mix = mix_from(&pending.mix, pending.line, &owner)?;
            let depth = match (pending.z_min_um, pending.z_max_um) {
                (Some(lo), Some(hi)) => Some((lo, hi)),
                (None, None) => None, // vessel-bound species
                _ => {
                    return Err(err(
                        pending.line,
                        format!("{owner}: z_min_um and z_max_um must be given together"),
                    ))
                }
            };
            built_cells.push(CellSpecies {
                id,
                composition: mix,
                diameter_um: require(pending.diameter_um, pending.line, &owner, "diameter_um")?,
                density_per_mm3: require(pending.density_per_mm3, pending.line, &owner, "density_per_mm3")?,
                depth_interval_um: depth,
            });
        }

        let mut built_layers: Vec<LayerSpec> = Vec::with_capacity(3);
        for id in LayerId::ALL {
            let pending = layers[id as usize]
                .take()
                .ok_or_else(|| err(1, format!("missing section [layer.{}]", id.as_str())))?;
            let owner = format!("[layer.{}]", id.as_str());
            let line = pending.line;
            let radius_um = require(pending.vessel_radius_um, line, &owner, "vessel_radius_um")?;
            let density = require(pending.vessel_density_per_mm2, line, &owner, "vessel_density_per_mm2")?;
            let vessels = if density > 0.0 || radius_um > 0.0 {
                Some(VesselPolicy {
                    class: match id {
                        LayerId::Hypodermis => VesselClass::Deep,
                        _ => VesselClass::Capillary,
                    },
                    radius_um,
                    density_per_mm2: density,
                    placement: match id {
                        LayerId::Dermis => VesselPlacement::UpperFraction(CAPILLARY_ZONE_FRACTION),
                        _ => VesselPlacement::FullDepth,
                    },
                })
            } else {
                None
            };
            built_layers.push(LayerSpec {
                id,
                depth_interval_um: (
                    require(pending.z_min_um, line, &owner, "z_min_um")?,
                    require(pending.z_max_um, line, &owner, "z_max_um")?,
                ),
                ecm: mix_from(&pending.mix, line, &owner)?,
                vessels,
            });
        }

        let catalog = Catalog {
            schema_version: SCHEMA_VERSION,
            components: built_components
                .try_into()
                .unwrap_or_else(|_| unreachable!("exactly three components")),
            cells: built_cells,
            layers: built_layers
                .try_into()
                .unwrap_or_else(|_| unreachable!("exactly three layers")),
        };
        catalog.validate()?;
        Ok(catalog)
    }
}
