//! File outputs: CSV tables, the voxel-label binary with its sidecar
//! header, and the JSON report. All numeric CSV fields use
//! locale-independent scientific notation with 9 significant digits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dermawave_core::materials::Catalog;
use dermawave_core::scenario::ScenarioRealization;
use dermawave_core::simulate::{LayerHistogram, SimulationReport};

use crate::CliError;

/// 9 significant digits, scientific, locale independent.
pub fn g9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Frequency label for file names: integral GHz counts render bare
/// (`100GHz`, `1000GHz`), anything else keeps its fractional part.
pub fn freq_label(f_hz: f64) -> String {
    let ghz = f_hz / 1e9;
    if (ghz - ghz.round()).abs() < 1e-9 * ghz.abs().max(1.0) {
        format!("{}GHz", ghz.round() as i64)
    } else {
        format!("{ghz}GHz")
    }
}

pub fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", dir.display())))
}

/// `scenario.csv`: one row per placed sphere.
pub fn scenario_csv(real: &ScenarioRealization, catalog: &Catalog) -> String {
    let mut out = String::from("species,x_um,y_um,z_um,radius_um\n");
    for p in &real.placements {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            catalog.cells[p.species_index].id,
            g9(p.center_m[0] * 1e6),
            g9(p.center_m[1] * 1e6),
            g9(p.center_m[2] * 1e6),
            g9(p.radius_m * 1e6),
        ));
    }
    out
}

/// `vessels.csv`: one row per vessel segment.
pub fn vessels_csv(real: &ScenarioRealization) -> String {
    let mut out = String::from("class,x_um,y_um,z_um,axis_x,axis_y,axis_z,half_len_um,radius_um\n");
    for v in &real.vessels {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            v.class.as_str(),
            g9(v.center_m[0] * 1e6),
            g9(v.center_m[1] * 1e6),
            g9(v.center_m[2] * 1e6),
            g9(v.axis[0]),
            g9(v.axis[1]),
            g9(v.axis[2]),
            g9(v.half_length_m * 1e6),
            g9(v.radius_m * 1e6),
        ));
    }
    out
}

/// Voxel labels as little-endian u16 in x-fastest order, plus a text
/// header naming the dimensions and the label table.
pub fn write_voxels(dir: &Path, real: &ScenarioRealization, catalog: &Catalog) -> Result<(), CliError> {
    let dims = real.dims();
    let mut bytes = Vec::with_capacity(real.labels.len() * 2);
    for &label in &real.labels {
        bytes.extend_from_slice(&label.to_le_bytes());
    }
    let bin = dir.join("voxels.bin");
    fs::write(&bin, &bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", bin.display())))?;

    let mut header = String::from("dermawave voxel grid v1\n");
    header.push_str(&format!("dims = {} {} {}\n", dims[0], dims[1], dims[2]));
    header.push_str(&format!("dx_um = {}\n", real.grid.dx_m * 1e6));
    header.push_str("order = x-fastest\n");
    header.push_str("dtype = u16le\n");
    header.push_str(&format!("seed = {}\n", real.seed));
    for (i, label) in real.label_table.iter().enumerate() {
        header.push_str(&format!("label {} = {}\n", i, label.name(catalog)));
    }
    write_text(&dir.join("voxels.hdr"), &header)
}

/// `attenuation.csv` from the pooled report (mean dB components).
pub fn attenuation_csv(report: &SimulationReport) -> String {
    let mut out = String::from("frequency_hz,distance_m,L_spr_db,L_abs_db,L_sca_db,L_tot_db\n");
    for row in &report.attenuation {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            g9(row.frequency_hz),
            g9(row.distance_m),
            g9(row.mean.spreading.db),
            g9(row.mean.absorption.db),
            g9(row.mean.scattering.db),
            g9(row.mean.total.db),
        ));
    }
    out
}

/// One `hist_<layer>_<kind>_<freq>.csv` body.
pub fn histogram_csv(hist: &LayerHistogram) -> String {
    let mut out = String::from("bin_left,bin_right,density\n");
    for (i, d) in hist.density.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            g9(hist.bin_edges[i]),
            g9(hist.bin_edges[i + 1]),
            g9(*d),
        ));
    }
    out
}

pub fn histogram_filename(hist: &LayerHistogram) -> String {
    format!(
        "hist_{}_{}_{}.csv",
        hist.layer.as_str(),
        hist.kind.as_str(),
        freq_label(hist.frequency_hz)
    )
}

/// The JSON report file: the pooled report plus run metadata. The
/// `wall_clock` object is the only non-deterministic part.
#[derive(serde::Serialize)]
pub struct ReportFile<'a> {
    pub tool: &'a str,
    pub catalog_fingerprint: String,
    pub report: &'a SimulationReport,
    pub wall_clock: WallClock,
}

#[derive(serde::Serialize)]
pub struct WallClock {
    pub elapsed_seconds: f64,
}

pub fn write_report(
    dir: &Path,
    report: &SimulationReport,
    catalog: &Catalog,
    elapsed_seconds: f64,
) -> Result<PathBuf, CliError> {
    let file = ReportFile {
        tool: concat!("dermawave ", env!("CARGO_PKG_VERSION")),
        catalog_fingerprint: format!("{:016x}", catalog.fingerprint()),
        report,
        wall_clock: WallClock { elapsed_seconds },
    };
    let path = dir.join("report.json");
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::Io(format!("cannot serialize report: {e}")))?;
    let mut f = fs::File::create(&path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    f.write_all(json.as_bytes())
        .and_then(|_| f.write_all(b"\n"))
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}
