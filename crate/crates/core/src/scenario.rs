//! Seeded voxelized skin phantoms: disc-Poisson sphere packing of cells,
//! line-Poisson vessel segments, red-blood-cell filling of vessel lumens,
//! and voxel material labeling.
//!
//! Everything is a pure function of `(seed, grid, catalog)`. Random draws
//! come from [`CounterRng`] streams addressed by purpose and catalog
//! indices, e.g. `(seed, "cells", layer, species)`, so the generation
//! order never leaks into the output.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

// float math comes from num-traits/libm in no_std builds; std-linked test
// builds resolve the same calls through inherent methods instead
#[allow(unused_imports)]
use num_traits::Float;

use crate::materials::{Catalog, CellSpecies, LayerId, LayerSpec, VesselClass, VesselPlacement};
use crate::rng::CounterRng;

/// Voxel grid geometry plus the master seed of a realization.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GridConfig {
    /// Voxel pitch in meters.
    pub dx_m: f64,
    /// Lateral and depth extents `(X, Y, Z)` in meters; each must be a
    /// positive integer multiple of `dx_m`.
    pub extent_m: [f64; 3],
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dx_m: 1.0e-5,
            extent_m: [1.0e-4, 1.0e-4, 5.0e-3],
            seed: 0,
        }
    }
}

impl GridConfig {
    /// Voxel counts per axis, after validating the extents.
    pub fn dims(&self) -> Result<[usize; 3], ScenarioError> {
        if !(self.dx_m > 0.0) {
            return Err(ScenarioError::InvalidGrid(alloc::format!(
                "voxel pitch must be positive, got {}",
                self.dx_m
            )));
        }
        let mut dims = [0usize; 3];
        for (i, &extent) in self.extent_m.iter().enumerate() {
            let ratio = extent / self.dx_m;
            let n = ratio.round();
            if !(extent > 0.0) || n < 1.0 || (ratio - n).abs() > 1e-6 * n.max(1.0) {
                return Err(ScenarioError::InvalidGrid(alloc::format!(
                    "extent {extent} m on axis {i} is not a positive integer multiple of dx = {} m",
                    self.dx_m
                )));
            }
            dims[i] = n as usize;
        }
        Ok(dims)
    }

    pub fn voxel_count(&self) -> Result<usize, ScenarioError> {
        let d = self.dims()?;
        Ok(d[0] * d[1] * d[2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    InvalidGrid(String),
    /// Grid depth extends beyond the catalog's last layer.
    GridBeyondLayers { grid_z_m: f64, layers_z_m: f64 },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Self::GridBeyondLayers { grid_z_m, layers_z_m } => write!(
                f,
                "grid depth {grid_z_m} m exceeds the catalog layer stack ({layers_z_m} m)"
            ),
        }
    }
}

impl core::error::Error for ScenarioError {}

/// One placed spherical cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPlacement {
    /// Index into `catalog.cells`.
    pub species_index: usize,
    pub center_m: [f64; 3],
    pub radius_m: f64,
}

/// One vessel segment (a finite cylinder with a horizontal axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VesselSegment {
    pub class: VesselClass,
    pub layer: LayerId,
    pub center_m: [f64; 3],
    /// Unit axis direction; horizontal by construction.
    pub axis: [f64; 3],
    pub half_length_m: f64,
    pub radius_m: f64,
}

impl VesselSegment {
    /// Lumen volume `pi r^2 * 2h` in m^3.
    pub fn lumen_volume_m3(&self) -> f64 {
        core::f64::consts::PI * self.radius_m * self.radius_m * 2.0 * self.half_length_m
    }

    /// True when `point` lies inside the lumen, with `margin` subtracted
    /// from both the radius and the axial half-length (a positive margin
    /// asks for a sphere of that radius to fit fully inside).
    pub fn contains(&self, point: [f64; 3], margin: f64) -> bool {
        let v = sub(point, self.center_m);
        let t = dot(v, self.axis);
        if t.abs() > self.half_length_m - margin {
            return false;
        }
        let radial = sub(v, scale(self.axis, t));
        norm(radial) <= self.radius_m - margin
    }
}

/// What a voxel label id refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind", content = "id"))]
pub enum MaterialLabel {
    Ecm(LayerId),
    VesselLumen,
    /// Index into `catalog.cells`.
    Cell(usize),
}

impl MaterialLabel {
    pub fn name(&self, catalog: &Catalog) -> String {
        match self {
            Self::Ecm(layer) => alloc::format!("ecm_{}", layer.as_str()),
            Self::VesselLumen => String::from("vessel_lumen"),
            Self::Cell(i) => catalog.cells[*i].id.clone(),
        }
    }
}

/// Placement bookkeeping for one `(species, layer)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SpeciesStats {
    pub species_index: usize,
    pub layer: LayerId,
    /// Count implied by the catalog density over the placement region
    /// (vessel lumens for vessel-bound species).
    pub target: usize,
    pub achieved: usize,
    /// Volume of the placement region in m^3.
    pub region_volume_m3: f64,
}

impl SpeciesStats {
    pub fn achieved_per_mm3(&self) -> f64 {
        if self.region_volume_m3 == 0.0 {
            return 0.0;
        }
        self.achieved as f64 / (self.region_volume_m3 * 1e9)
    }
}

/// A fully generated, labeled phantom.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRealization {
    pub grid: GridConfig,
    pub placements: Vec<CellPlacement>,
    pub vessels: Vec<VesselSegment>,
    /// Voxel labels in x-fastest order (`idx = ix + nx*(iy + ny*iz)`),
    /// indices into `label_table`.
    pub labels: Vec<u16>,
    pub label_table: Vec<MaterialLabel>,
    pub stats: Vec<SpeciesStats>,
    /// Vessels skipped by the RBC fill because they cannot hold one.
    pub skipped_vessels: usize,
    pub seed: u64,
}

impl ScenarioRealization {
    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims().expect("realization carries a validated grid")
    }

    /// Layer of a voxel depth index.
    pub fn layer_of_iz(&self, iz: usize, catalog: &Catalog) -> LayerId {
        let z = (iz as f64 + 0.5) * self.grid.dx_m;
        layer_of_depth(z, catalog)
    }
}

/// The layer whose band contains depth `z_m` (the last layer is closed
/// above).
pub fn layer_of_depth(z_m: f64, catalog: &Catalog) -> LayerId {
    for layer in &catalog.layers {
        let (lo, hi) = layer.depth_interval_m();
        if z_m >= lo && z_m < hi {
            return layer.id;
        }
    }
    catalog.layers[2].id
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Uniform-bin index over spheres for neighborhood overlap queries.
struct SphereGrid {
    bin: f64,
    dims: [usize; 3],
    bins: Vec<Vec<(usize, [f64; 3], f64)>>,
    max_radius: f64,
}

impl SphereGrid {
    fn new(extent: [f64; 3], bin: f64) -> Self {
        let dims = [
            ((extent[0] / bin).ceil() as usize).max(1),
            ((extent[1] / bin).ceil() as usize).max(1),
            ((extent[2] / bin).ceil() as usize).max(1),
        ];
        let n = dims[0] * dims[1] * dims[2];
        Self {
            bin,
            dims,
            bins: alloc::vec![Vec::new(); n],
            max_radius: 0.0,
        }
    }

    fn coord(&self, x: f64, axis: usize) -> usize {
        let i = (x / self.bin).floor();
        (i.max(0.0) as usize).min(self.dims[axis] - 1)
    }

    fn bin_index(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    fn insert(&mut self, id: usize, center: [f64; 3], radius: f64) {
        let c = [
            self.coord(center[0], 0),
            self.coord(center[1], 1),
            self.coord(center[2], 2),
        ];
        let idx = self.bin_index(c);
        self.bins[idx].push((id, center, radius));
        self.max_radius = self.max_radius.max(radius);
    }

    fn for_each_near(&self, center: [f64; 3], reach: f64, mut f: impl FnMut(usize, [f64; 3], f64) -> bool) -> bool {
        let r = reach + self.max_radius;
        let lo = [
            self.coord(center[0] - r, 0),
            self.coord(center[1] - r, 1),
            self.coord(center[2] - r, 2),
        ];
        let hi = [
            self.coord(center[0] + r, 0),
            self.coord(center[1] + r, 1),
            self.coord(center[2] + r, 2),
        ];
        for cz in lo[2]..=hi[2] {
            for cy in lo[1]..=hi[1] {
                for cx in lo[0]..=hi[0] {
                    for &(id, c, rad) in &self.bins[self.bin_index([cx, cy, cz])] {
                        if f(id, c, rad) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// True when a sphere at `center` with `radius` overlaps any indexed
    /// sphere (hard minimum center distance = sum of radii).
    fn overlaps(&self, center: [f64; 3], radius: f64) -> bool {
        self.for_each_near(center, radius, |_, c, r| {
            let d = sub(center, c);
            let min = radius + r;
            dot(d, d) < min * min
        })
    }
}

fn sphere_grid_bin(catalog: &Catalog) -> f64 {
    let max_d = catalog
        .cells
        .iter()
        .map(|c| c.diameter_m())
        .fold(0.0f64, |a, b| if b > a { b } else { a });
    max_d.max(1e-5)
}

/// Axial placement band for a species within a layer clipped to the grid.
fn species_region(species: &CellSpecies, layer: &LayerSpec, grid: &GridConfig) -> Option<(f64, f64)> {
    let (s_lo, s_hi) = species.depth_interval_m()?;
    let (l_lo, l_hi) = layer.depth_interval_m();
    let lo = s_lo.max(l_lo).max(0.0);
    let hi = s_hi.min(l_hi).min(grid.extent_m[2]);
    (lo < hi).then_some((lo, hi))
}

/// Dart-throwing disc-Poisson placement of one species.
///
/// Centers are confined to `z_range` and held at least one radius away
/// from the lateral faces; an accepted center keeps a center-to-center
/// distance of at least the sum of radii from every existing placement,
/// across species. Sampling stops at the density-implied target count or
/// after 30 attempts per target; a shortfall is visible in the returned
/// target, not an error (several catalog densities are geometrically
/// unattainable).
///
/// Returns the accepted placements and the target count.
pub fn place_cells_disc_poisson(
    grid: &GridConfig,
    z_range: (f64, f64),
    species_index: usize,
    species: &CellSpecies,
    existing: &[CellPlacement],
    rng: &mut CounterRng,
) -> (Vec<CellPlacement>, usize) {
    let (x_ext, y_ext) = (grid.extent_m[0], grid.extent_m[1]);
    let r = species.radius_m();
    let volume = x_ext * y_ext * (z_range.1 - z_range.0);
    let target = (species.density_per_m3() * volume).round() as usize;

    let mut index = SphereGrid::new(grid.extent_m, sphere_grid_bin_for(existing, r));
    for (i, p) in existing.iter().enumerate() {
        index.insert(i, p.center_m, p.radius_m);
    }

    let mut accepted = Vec::new();
    let lateral_ok = x_ext >= 2.0 * r && y_ext >= 2.0 * r;
    if target > 0 && lateral_ok {
        let attempts_cap = target.saturating_mul(30);
        let mut attempts = 0usize;
        while accepted.len() < target && attempts < attempts_cap {
            attempts += 1;
            let center = [
                rng.range_f64(r, x_ext - r),
                rng.range_f64(r, y_ext - r),
                rng.range_f64(z_range.0, z_range.1),
            ];
            if !index.overlaps(center, r) {
                index.insert(existing.len() + accepted.len(), center, r);
                accepted.push(CellPlacement {
                    species_index,
                    center_m: center,
                    radius_m: r,
                });
            }
        }
    }
    (accepted, target)
}

fn sphere_grid_bin_for(existing: &[CellPlacement], radius: f64) -> f64 {
    let max_r = existing
        .iter()
        .map(|p| p.radius_m)
        .fold(radius, |a, b| if b > a { b } else { a });
    (2.0 * max_r).max(1e-5)
}

/// Line-Poisson vessel placement for one layer.
///
/// The segment count is Poisson with mean `density * lateral area`;
/// centers are uniform laterally, the depth follows the layer policy
/// (upper-fraction band for capillary beds, full depth otherwise, always
/// with one radius of clearance), the axis is horizontal with uniform
/// azimuth, and segments are clipped to the lateral box.
pub fn place_vessels_line_poisson(
    grid: &GridConfig,
    layer: &LayerSpec,
    rng: &mut CounterRng,
) -> Vec<VesselSegment> {
    let Some(policy) = &layer.vessels else {
        return Vec::new();
    };
    let (x_ext, y_ext) = (grid.extent_m[0], grid.extent_m[1]);
    let radius = policy.radius_m();
    let (l_lo, l_hi) = layer.depth_interval_m();
    let l_hi = l_hi.min(grid.extent_m[2]);
    if l_hi <= l_lo {
        return Vec::new();
    }
    let z_band = match policy.placement {
        VesselPlacement::UpperFraction(f) => (l_lo + radius, l_lo + f * (l_hi - l_lo) - radius),
        VesselPlacement::FullDepth => (l_lo + radius, l_hi - radius),
    };
    if z_band.1 <= z_band.0 {
        return Vec::new();
    }

    let mean = policy.density_per_m2() * x_ext * y_ext;
    let count = rng.poisson(mean);
    let mut vessels = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let p = [rng.range_f64(0.0, x_ext), rng.range_f64(0.0, y_ext)];
        let z = rng.range_f64(z_band.0, z_band.1);
        let theta = rng.range_f64(0.0, 2.0 * core::f64::consts::PI);
        let axis = [theta.cos(), theta.sin(), 0.0];

        // clip the line p + t*axis to the lateral rectangle
        let mut t_lo = f64::NEG_INFINITY;
        let mut t_hi = f64::INFINITY;
        for (axis_dir, (pos, ext)) in [(axis[0], (p[0], x_ext)), (axis[1], (p[1], y_ext))] {
            if axis_dir.abs() < 1e-12 {
                continue;
            }
            let a = (0.0 - pos) / axis_dir;
            let b = (ext - pos) / axis_dir;
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
        if !(t_hi > t_lo) || !t_lo.is_finite() {
            continue; // degenerate azimuth; cannot happen with unit axes
        }
        let mid = 0.5 * (t_lo + t_hi);
        vessels.push(VesselSegment {
            class: policy.class,
            layer: layer.id,
            center_m: [p[0] + mid * axis[0], p[1] + mid * axis[1], z],
            axis,
            half_length_m: 0.5 * (t_hi - t_lo),
            radius_m: radius,
        });
    }
    vessels
}

/// Outcome of filling vessels with a vessel-bound species.
#[derive(Debug, Clone, PartialEq)]
pub struct VesselFill {
    pub placements: Vec<CellPlacement>,
    /// Vessels that cannot hold a single cell (radius or length too small).
    pub skipped_vessels: usize,
    /// Density-implied target per layer, keyed by `LayerId as usize`.
    pub target_by_layer: [usize; 3],
    pub lumen_volume_by_layer: [f64; 3],
}

/// Disc-Poisson placement of a vessel-bound species inside vessel lumens.
///
/// The per-vessel target is the catalog density times the lumen volume;
/// cells must fit entirely inside the cylinder (for lumens no wider than
/// the cell this forces centers onto the axis) and must not overlap any
/// existing placement.
pub fn fill_vessels_with_rbc(
    vessels: &[VesselSegment],
    species_index: usize,
    species: &CellSpecies,
    existing: &[CellPlacement],
    rng: &mut CounterRng,
) -> VesselFill {
    let r = species.radius_m();
    let mut fill = VesselFill {
        placements: Vec::new(),
        skipped_vessels: 0,
        target_by_layer: [0; 3],
        lumen_volume_by_layer: [0.0; 3],
    };
    if vessels.is_empty() {
        return fill;
    }

    let extent = bounding_extent(vessels);
    let mut index = SphereGrid::new(extent, sphere_grid_bin_for(existing, r));
    for (i, p) in existing.iter().enumerate() {
        index.insert(i, p.center_m, p.radius_m);
    }

    for vessel in vessels {
        let radial_max = vessel.radius_m - r;
        let axial_max = vessel.half_length_m - r;
        if radial_max < 0.0 || axial_max < 0.0 {
            fill.skipped_vessels += 1;
            continue;
        }
        let target = (species.density_per_m3() * vessel.lumen_volume_m3()).round() as usize;
        fill.target_by_layer[vessel.layer as usize] += target;
        fill.lumen_volume_by_layer[vessel.layer as usize] += vessel.lumen_volume_m3();
        if target == 0 {
            continue;
        }
        // horizontal unit axis: e1 lateral-perpendicular, e2 vertical
        let e1 = [-vessel.axis[1], vessel.axis[0], 0.0];
        let e2 = [0.0, 0.0, 1.0];
        let attempts_cap = target.saturating_mul(30);
        let mut attempts = 0usize;
        let mut accepted = 0usize;
        while accepted < target && attempts < attempts_cap {
            attempts += 1;
            let t = rng.range_f64(-axial_max, axial_max);
            let center = if radial_max > 0.0 {
                let rho = radial_max * rng.next_f64().sqrt();
                let phi = rng.range_f64(0.0, 2.0 * core::f64::consts::PI);
                let radial = [
                    rho * (phi.cos() * e1[0] + phi.sin() * e2[0]),
                    rho * (phi.cos() * e1[1] + phi.sin() * e2[1]),
                    rho * (phi.cos() * e1[2] + phi.sin() * e2[2]),
                ];
                [
                    vessel.center_m[0] + t * vessel.axis[0] + radial[0],
                    vessel.center_m[1] + t * vessel.axis[1] + radial[1],
                    vessel.center_m[2] + t * vessel.axis[2] + radial[2],
                ]
            } else {
                [
                    vessel.center_m[0] + t * vessel.axis[0],
                    vessel.center_m[1] + t * vessel.axis[1],
                    vessel.center_m[2] + t * vessel.axis[2],
                ]
            };
            if !index.overlaps(center, r) {
                index.insert(existing.len() + fill.placements.len(), center, r);
                fill.placements.push(CellPlacement {
                    species_index,
                    center_m: center,
                    radius_m: r,
                });
                accepted += 1;
            }
        }
    }
    fill
}

fn bounding_extent(vessels: &[VesselSegment]) -> [f64; 3] {
    let mut ext: [f64; 3] = [1e-5; 3];
    for v in vessels {
        for (i, e) in ext.iter_mut().enumerate() {
            let reach = v.center_m[i].abs() + v.half_length_m + v.radius_m;
            *e = e.max(reach);
        }
    }
    ext
}

/// Voxel-center labeling with precedence cell > vessel lumen > layer ECM;
/// a voxel inside several spheres takes the nearest center.
pub fn rasterize(
    placements: &[CellPlacement],
    vessels: &[VesselSegment],
    grid: &GridConfig,
    catalog: &Catalog,
) -> Result<(Vec<u16>, Vec<MaterialLabel>), ScenarioError> {
    let dims = grid.dims()?;

    let mut label_table = Vec::with_capacity(4 + catalog.cells.len());
    for layer in LayerId::ALL {
        label_table.push(MaterialLabel::Ecm(layer));
    }
    label_table.push(MaterialLabel::VesselLumen);
    let cell_label_base = label_table.len() as u16;
    for i in 0..catalog.cells.len() {
        label_table.push(MaterialLabel::Cell(i));
    }
    debug_assert!(label_table.len() <= u16::MAX as usize);

    let mut index = SphereGrid::new(grid.extent_m, sphere_grid_bin(catalog));
    for (i, p) in placements.iter().enumerate() {
        index.insert(i, p.center_m, p.radius_m);
    }

    let dx = grid.dx_m;
    let mut labels = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
    for iz in 0..dims[2] {
        let z = (iz as f64 + 0.5) * dx;
        let ecm_label = layer_of_depth(z, catalog) as u16;
        for iy in 0..dims[1] {
            let y = (iy as f64 + 0.5) * dx;
            for ix in 0..dims[0] {
                let x = (ix as f64 + 0.5) * dx;
                let p = [x, y, z];

                // nearest containing sphere wins
                let mut best: Option<(f64, usize)> = None;
                index.for_each_near(p, 0.0, |id, c, r| {
                    let d = sub(p, c);
                    let d2 = dot(d, d);
                    if d2 <= r * r && best.is_none_or(|(bd2, _)| d2 < bd2) {
                        best = Some((d2, id));
                    }
                    false
                });

                let label = if let Some((_, id)) = best {
                    cell_label_base + placements[id].species_index as u16
                } else if vessels.iter().any(|v| v.contains(p, 0.0)) {
                    3u16 // vessel lumen
                } else {
                    ecm_label
                };
                labels.push(label);
            }
        }
    }
    Ok((labels, label_table))
}

/// Generate a full phantom: per-layer cell packing (densest species
/// first), vessels, RBC filling, then rasterization.
pub fn generate_scenario(grid: &GridConfig, catalog: &Catalog) -> Result<ScenarioRealization, ScenarioError> {
    grid.dims()?;
    let layers_z = catalog.layers[2].depth_interval_m().1;
    if grid.extent_m[2] > layers_z * (1.0 + 1e-9) {
        return Err(ScenarioError::GridBeyondLayers {
            grid_z_m: grid.extent_m[2],
            layers_z_m: layers_z,
        });
    }
    let seed = grid.seed;

    let mut placements: Vec<CellPlacement> = Vec::new();
    let mut stats: Vec<SpeciesStats> = Vec::new();

    for (layer_idx, layer) in catalog.layers.iter().enumerate() {
        // species resident in this layer, most volume-demanding first so
        // the hard-to-fit ones see an empty box
        let mut resident: Vec<(usize, &CellSpecies)> = catalog
            .cells
            .iter()
            .enumerate()
            .filter(|(_, c)| catalog.layer_of_cell(c) == Some(layer.id))
            .collect();
        resident.sort_by(|a, b| {
            b.1.nominal_volume_fraction()
                .partial_cmp(&a.1.nominal_volume_fraction())
                .unwrap_or(core::cmp::Ordering::Equal)
        });

        for (species_index, species) in resident {
            let Some(z_range) = species_region(species, layer, grid) else {
                continue;
            };
            let mut rng = CounterRng::stream(seed, "cells", &[layer_idx as u64, species_index as u64]);
            let (accepted, target) =
                place_cells_disc_poisson(grid, z_range, species_index, species, &placements, &mut rng);
            stats.push(SpeciesStats {
                species_index,
                layer: layer.id,
                target,
                achieved: accepted.len(),
                region_volume_m3: grid.extent_m[0] * grid.extent_m[1] * (z_range.1 - z_range.0),
            });
            placements.extend(accepted);
        }
    }

    let mut vessels: Vec<VesselSegment> = Vec::new();
    for (layer_idx, layer) in catalog.layers.iter().enumerate() {
        let mut rng = CounterRng::stream(seed, "vessels", &[layer_idx as u64]);
        vessels.extend(place_vessels_line_poisson(grid, layer, &mut rng));
    }

    let mut skipped_vessels = 0usize;
    for (species_index, species) in catalog.cells.iter().enumerate() {
        if !species.is_vessel_bound() {
            continue;
        }
        let mut rng = CounterRng::stream(seed, "rbc", &[species_index as u64]);
        let fill = fill_vessels_with_rbc(&vessels, species_index, species, &placements, &mut rng);
        skipped_vessels += fill.skipped_vessels;
        // per-layer achieved counts for the stats table
        for layer in LayerId::ALL {
            let achieved = fill
                .placements
                .iter()
                .filter(|p| {
                    vessels
                        .iter()
                        .any(|v| v.layer == layer && v.contains(p.center_m, 0.0))
                })
                .count();
            let target = fill.target_by_layer[layer as usize];
            let volume = fill.lumen_volume_by_layer[layer as usize];
            if target > 0 || achieved > 0 || volume > 0.0 {
                stats.push(SpeciesStats {
                    species_index,
                    layer,
                    target,
                    achieved,
                    region_volume_m3: volume,
                });
            }
        }
        placements.extend(fill.placements);
    }

    let (labels, label_table) = rasterize(&placements, &vessels, grid, catalog)?;
    Ok(ScenarioRealization {
        grid: *grid,
        placements,
        vessels,
        labels,
        label_table,
        stats,
        skipped_vessels,
        seed,
    })
}

/// Built-in consistency check: exhaustive O(N^2) pairwise overlap scan,
/// depth-interval containment and lateral fit for layer-resident species,
/// and lumen containment for vessel-bound species. Returns every
/// violation found.
pub fn verify_realization(real: &ScenarioRealization, catalog: &Catalog) -> Vec<String> {
    let mut bad = Vec::new();
    let p = &real.placements;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            let d = sub(p[i].center_m, p[j].center_m);
            let min = p[i].radius_m + p[j].radius_m;
            if dot(d, d) < min * min * (1.0 - 1e-12) {
                bad.push(alloc::format!(
                    "spheres {i} and {j} overlap (centers {:?} / {:?})",
                    p[i].center_m,
                    p[j].center_m
                ));
            }
        }
    }
    for (i, placement) in p.iter().enumerate() {
        let species = &catalog.cells[placement.species_index];
        match species.depth_interval_m() {
            Some((lo, hi)) => {
                let z = placement.center_m[2];
                if z < lo || z > hi {
                    bad.push(alloc::format!(
                        "sphere {i} ({}) center depth {z} outside [{lo}, {hi}]",
                        species.id
                    ));
                }
                for axis in 0..2 {
                    let c = placement.center_m[axis];
                    if c < placement.radius_m - 1e-12
                        || c > real.grid.extent_m[axis] - placement.radius_m + 1e-12
                    {
                        bad.push(alloc::format!("sphere {i} ({}) leaves the lateral box", species.id));
                    }
                }
            }
            None => {
                let inside = real
                    .vessels
                    .iter()
                    .any(|v| v.contains(placement.center_m, placement.radius_m - 1e-12));
                if !inside {
                    bad.push(alloc::format!(
                        "vessel-bound sphere {i} ({}) does not fit inside any vessel",
                        species.id
                    ));
                }
            }
        }
    }
    let voxels = real.grid.voxel_count().unwrap_or(0);
    if real.labels.len() != voxels {
        bad.push(alloc::format!(
            "label array has {} entries for {} voxels",
            real.labels.len(),
            voxels
        ));
    }
    bad
}
