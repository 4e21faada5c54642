//! dermawave: dielectric skin-tissue modeling and intrabody sub-THz/THz
//! path-loss simulation.
//!
//! Subcommands: `dump-catalog`, `permittivity`, `scenario`, `simulate`.
//! Exit codes: 0 success, 1 failed self-check/verification, 2 usage or
//! configuration error, 3 I/O error.

mod args;
mod output;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use dermawave_core::dielectrics::{
    debye_permittivity, mixture_permittivity, refractive_index, ComplexPermittivity,
    MixtureComposition,
};
use dermawave_core::losses::absorption_coefficient;
use dermawave_core::materials::{Catalog, ComponentId, LayerId};
use dermawave_core::scenario::{generate_scenario, verify_realization, GridConfig, ScenarioRealization};
use dermawave_core::simulate::{PathSampling, SimulationConfig, SimulationReport};
use dermawave_core::{in_validity_band, VALIDITY_BAND_HZ};

use args::{parse_list, Quantity};

#[derive(Parser)]
#[command(
    name = "dermawave",
    version,
    about = "Dielectric modeling of layered skin and sub-THz/THz intrabody path loss",
    after_help = "Frequencies/distances accept SI suffixes (GHz, THz, mm, um), comma lists,\n\
                  and start:step:stop ranges, e.g. --f 100GHz,1THz --d 0:0.5mm:5mm.\n\
                  DERMAWAVE_THREADS caps worker parallelism."
)]
struct Cli {
    /// Material catalog file (defaults to the embedded catalog).
    #[arg(long, global = true, value_name = "FILE")]
    catalog: Option<PathBuf>,
    /// Force the embedded default catalog.
    #[arg(long, global = true, conflicts_with = "catalog")]
    builtin: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the active catalog in the catalog file format.
    DumpCatalog {
        /// Output file (stdout when absent).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Evaluate permittivity, refractive index and absorption coefficient
    /// of a material over a frequency list.
    Permittivity {
        /// Component (water|protein|lipid), cell species, `ecm_<layer>`,
        /// vessel_lumen, or a literal like "protein=0.25,lipid=0.02".
        material: String,
        /// Frequency list.
        #[arg(long = "f", value_name = "LIST", default_value = "100GHz,1THz")]
        frequencies: String,
        /// Write CSV here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Generate one seeded phantom and export it
    /// (scenario.csv, vessels.csv, voxels.bin, voxels.hdr).
    Scenario {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        seed: SeedArgs,
        /// Output directory.
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        /// Re-check the realization with the built-in brute-force
        /// overlap/containment verifier.
        #[arg(long)]
        verify: bool,
    },
    /// Monte Carlo run: attenuation table, per-layer coefficient
    /// histograms, and a JSON report.
    Simulate {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        seed: SeedArgs,
        /// Frequency list.
        #[arg(long = "f", value_name = "LIST", default_value = "100GHz,1THz")]
        frequencies: String,
        /// Depth list.
        #[arg(long = "d", value_name = "LIST", default_value = "0:0.5mm:5mm")]
        depths: String,
        /// Number of seeded realizations to pool.
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Histogram bin count.
        #[arg(long, default_value_t = 64)]
        bins: usize,
        /// Transmit antenna directivity (>= 1).
        #[arg(long, default_value_t = 1.0)]
        directivity: f64,
        /// Integrate a single voxel column "ix,iy" instead of the
        /// lateral-mean path (heterogeneity studies).
        #[arg(long, value_name = "IX,IY")]
        ray: Option<String>,
        /// Output directory.
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        /// Re-verify the loss factorization identity on every output row.
        #[arg(long)]
        self_check: bool,
    },
}

#[derive(Args)]
struct GridArgs {
    /// Voxel pitch in micrometers.
    #[arg(long = "dx-um", default_value_t = 10.0)]
    dx_um: f64,
    /// Lateral extent X in millimeters.
    #[arg(long = "x-mm", default_value_t = 0.1)]
    x_mm: f64,
    /// Lateral extent Y in millimeters.
    #[arg(long = "y-mm", default_value_t = 0.1)]
    y_mm: f64,
    /// Depth extent Z in millimeters.
    #[arg(long = "z-mm", default_value_t = 5.0)]
    z_mm: f64,
}

impl GridArgs {
    fn to_grid(&self, seed: u64) -> GridConfig {
        GridConfig {
            dx_m: self.dx_um * 1e-6,
            extent_m: [self.x_mm * 1e-3, self.y_mm * 1e-3, self.z_mm * 1e-3],
            seed,
        }
    }
}

#[derive(Args)]
struct SeedArgs {
    /// Master seed for the realization stream.
    #[arg(long, required_unless_present = "seed_from_entropy", conflicts_with = "seed_from_entropy")]
    seed: Option<u64>,
    /// Draw the seed from system entropy; the chosen value is printed
    /// and echoed in the outputs.
    #[arg(long)]
    seed_from_entropy: bool,
}

impl SeedArgs {
    fn resolve(&self) -> u64 {
        match self.seed {
            Some(s) => s,
            None => {
                let seed = entropy_seed();
                eprintln!("seed drawn from entropy: {seed}");
                seed
            }
        }
    }
}

fn entropy_seed() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_nanos());
    let mut bytes = Vec::with_capacity(20);
    bytes.extend_from_slice(&nanos.to_le_bytes());
    bytes.extend_from_slice(&std::process::id().to_le_bytes());
    dermawave_core::rng::fnv1a64(&bytes)
}

#[derive(Debug)]
enum CliError {
    /// Usage / configuration problems: exit 2.
    Usage(String),
    /// Filesystem problems: exit 3.
    Io(String),
    /// A requested consistency check failed: exit 1.
    Check(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Check(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let catalog = load_catalog(&cli)?;
    match cli.command {
        Command::DumpCatalog { out } => cmd_dump_catalog(&catalog, out),
        Command::Permittivity {
            material,
            frequencies,
            out,
        } => cmd_permittivity(&catalog, &material, &frequencies, out),
        Command::Scenario {
            grid,
            seed,
            out,
            verify,
        } => cmd_scenario(&catalog, &grid, &seed, &out, verify),
        Command::Simulate {
            grid,
            seed,
            frequencies,
            depths,
            n,
            bins,
            directivity,
            ray,
            out,
            self_check,
        } => cmd_simulate(
            &catalog,
            &grid,
            &seed,
            &frequencies,
            &depths,
            n,
            bins,
            directivity,
            ray.as_deref(),
            &out,
            self_check,
        ),
    }
}

fn load_catalog(cli: &Cli) -> Result<Catalog, CliError> {
    match &cli.catalog {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read catalog {}: {e}", path.display())))?;
            Catalog::parse(&text).map_err(|e| CliError::Usage(e.to_string()))
        }
        None => Ok(Catalog::builtin()),
    }
}

fn cmd_dump_catalog(catalog: &Catalog, out: Option<PathBuf>) -> Result<(), CliError> {
    let text = catalog.dump();
    match out {
        Some(path) => output::write_text(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// How the permittivity subcommand evaluates its material argument.
enum MaterialArg {
    Pure(ComponentId),
    Mixture(MixtureComposition),
}

fn resolve_material(spec: &str, catalog: &Catalog) -> Result<MaterialArg, CliError> {
    if let Some(component) = ComponentId::from_name(spec) {
        return Ok(MaterialArg::Pure(component));
    }
    if let Ok(cell) = catalog.cell_species(spec) {
        return Ok(MaterialArg::Mixture(cell.composition.clone()));
    }
    if let Some(layer) = spec.strip_prefix("ecm_").and_then(LayerId::from_name) {
        return Ok(MaterialArg::Mixture(catalog.ecm_composition(layer).clone()));
    }
    if spec == "vessel_lumen" {
        return Ok(MaterialArg::Mixture(MixtureComposition::water_host(0.0, 0.0)));
    }
    if spec.contains('=') {
        return parse_composition_literal(spec).map(MaterialArg::Mixture);
    }
    Err(CliError::Usage(format!(
        "unknown material '{spec}'; expected a component (water|protein|lipid), a cell species, \
         ecm_<layer>, vessel_lumen, or a composition literal like 'protein=0.25,lipid=0.02'"
    )))
}

fn parse_composition_literal(spec: &str) -> Result<MixtureComposition, CliError> {
    let mut protein = 0.0f64;
    let mut lipid = 0.0f64;
    let mut water: Option<f64> = None;
    for pair in spec.split(',') {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected key=value in '{pair}'")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("invalid fraction '{value}'")))?;
        match key.trim() {
            "protein" => protein = value,
            "lipid" => lipid = value,
            "water" => water = Some(value),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown component '{other}' in composition literal"
                )))
            }
        }
    }
    let comp = MixtureComposition::water_host(protein, lipid);
    comp.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(w) = water {
        let implied = comp.host_fraction();
        if (w - implied).abs() > 1e-6 {
            return Err(CliError::Usage(format!(
                "water fraction {w} is inconsistent with 1 - protein - lipid = {implied}"
            )));
        }
    }
    Ok(comp)
}

fn cmd_permittivity(
    catalog: &Catalog,
    material: &str,
    frequencies: &str,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let material = resolve_material(material, catalog)?;
    let freqs = parse_list(frequencies, Quantity::FrequencyHz).map_err(CliError::Usage)?;
    if freqs.is_empty() {
        return Err(CliError::Usage("frequency list is empty".into()));
    }
    let out_of_band: Vec<f64> = freqs.iter().copied().filter(|&f| !in_validity_band(f)).collect();
    if !out_of_band.is_empty() {
        eprintln!(
            "warning: {} frequency value(s) outside the {:.0}-{:.0} GHz validity band of the catalog parameters",
            out_of_band.len(),
            VALIDITY_BAND_HZ.0 / 1e9,
            VALIDITY_BAND_HZ.1 / 1e9,
        );
    }

    let mut table = String::from("f_hz,eps_real,eps_imag,n_real,n_imag,mu_abs_per_m\n");
    for &f in &freqs {
        let eps: ComplexPermittivity = match &material {
            MaterialArg::Pure(component) => {
                debye_permittivity(&catalog.component_params(*component), f)
            }
            MaterialArg::Mixture(comp) => mixture_permittivity(comp, f, catalog),
        }
        .map_err(|e| CliError::Usage(e.to_string()))?;
        let n = refractive_index(eps);
        let mu = absorption_coefficient(&n, f);
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            output::g9(f),
            output::g9(eps.eps_real),
            output::g9(eps.eps_imag),
            output::g9(n.n_real),
            output::g9(n.n_imag),
            output::g9(mu),
        ));
    }
    match out {
        Some(path) => output::write_text(&path, &table),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

fn print_species_summary(real: &ScenarioRealization, catalog: &Catalog) {
    println!(
        "{:<24} {:<11} {:>10} {:>10} {:>14} {:>14}",
        "species", "layer", "target", "achieved", "per_mm3", "nominal_mm3"
    );
    for s in &real.stats {
        println!(
            "{:<24} {:<11} {:>10} {:>10} {:>14.6e} {:>14.6e}",
            catalog.cells[s.species_index].id,
            s.layer.as_str(),
            s.target,
            s.achieved,
            s.achieved_per_mm3(),
            catalog.cells[s.species_index].density_per_mm3,
        );
    }
}

fn cmd_scenario(
    catalog: &Catalog,
    grid: &GridArgs,
    seed: &SeedArgs,
    out: &std::path::Path,
    verify: bool,
) -> Result<(), CliError> {
    let grid = grid.to_grid(seed.resolve());
    let real = generate_scenario(&grid, catalog).map_err(|e| CliError::Usage(e.to_string()))?;

    print_species_summary(&real, catalog);
    let capillaries = real
        .vessels
        .iter()
        .filter(|v| v.class == dermawave_core::materials::VesselClass::Capillary)
        .count();
    println!(
        "vessels: {} capillary, {} deep; skipped by fill: {}",
        capillaries,
        real.vessels.len() - capillaries,
        real.skipped_vessels
    );

    output::create_out_dir(out)?;
    output::write_text(&out.join("scenario.csv"), &output::scenario_csv(&real, catalog))?;
    output::write_text(&out.join("vessels.csv"), &output::vessels_csv(&real))?;
    output::write_voxels(out, &real, catalog)?;
    println!("wrote {}/{{scenario.csv, vessels.csv, voxels.bin, voxels.hdr}}", out.display());

    if verify {
        let issues = verify_realization(&real, catalog);
        if issues.is_empty() {
            println!("verify: ok ({} spheres, {} vessels)", real.placements.len(), real.vessels.len());
        } else {
            for issue in &issues {
                eprintln!("verify: {issue}");
            }
            return Err(CliError::Check(format!(
                "verification found {} issue(s)",
                issues.len()
            )));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    catalog: &Catalog,
    grid: &GridArgs,
    seed: &SeedArgs,
    frequencies: &str,
    depths: &str,
    n: usize,
    bins: usize,
    directivity: f64,
    ray: Option<&str>,
    out: &std::path::Path,
    self_check: bool,
) -> Result<(), CliError> {
    let cfg = SimulationConfig {
        grid: grid.to_grid(seed.resolve()),
        frequencies_hz: parse_list(frequencies, Quantity::FrequencyHz).map_err(CliError::Usage)?,
        depths_m: parse_list(depths, Quantity::DistanceM).map_err(CliError::Usage)?,
        n_realizations: n,
        histogram_bins: bins,
        directivity,
        path_sampling: parse_ray(ray)?,
    };
    // full validation before any computation
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let out_of_band: Vec<f64> = cfg
        .frequencies_hz
        .iter()
        .copied()
        .filter(|&f| !in_validity_band(f))
        .collect();
    if !out_of_band.is_empty() {
        eprintln!(
            "warning: {} frequency value(s) outside the {:.0}-{:.0} GHz validity band of the catalog parameters",
            out_of_band.len(),
            VALIDITY_BAND_HZ.0 / 1e9,
            VALIDITY_BAND_HZ.1 / 1e9,
        );
    }

    let start = Instant::now();
    let report = runner::run_parallel(&cfg, catalog).map_err(|e| CliError::Usage(e.to_string()))?;
    let elapsed = start.elapsed().as_secs_f64();

    output::create_out_dir(out)?;
    output::write_text(&out.join("attenuation.csv"), &output::attenuation_csv(&report))?;
    for hist in &report.histograms {
        output::write_text(&out.join(output::histogram_filename(hist)), &output::histogram_csv(hist))?;
    }
    output::write_report(out, &report, catalog, elapsed)?;

    println!(
        "{:<24} {:<11} {:>12} {:>12} {:>14} {:>14}",
        "species", "layer", "mean_target", "mean_achvd", "per_mm3", "nominal_mm3"
    );
    for s in &report.species {
        println!(
            "{:<24} {:<11} {:>12.1} {:>12.1} {:>14.6e} {:>14.6e}",
            s.species, s.layer.as_str(), s.mean_target, s.mean_achieved,
            s.mean_achieved_per_mm3, s.nominal_per_mm3,
        );
    }
    println!(
        "{} realizations, {} attenuation rows, {} histograms; wall clock {elapsed:.2} s",
        report.seeds.len(),
        report.attenuation.len(),
        report.histograms.len(),
    );
    println!("wrote {}/{{attenuation.csv, hist_*.csv, report.json}}", out.display());

    if self_check {
        self_check_report(&report)?;
        println!("self-check: ok ({} rows)", report.attenuation.len());
    }
    Ok(())
}

fn parse_ray(ray: Option<&str>) -> Result<PathSampling, CliError> {
    let Some(text) = ray else {
        return Ok(PathSampling::LateralMean);
    };
    let parts: Vec<&str> = text.split(',').collect();
    let parsed: Option<(usize, usize)> = match parts.as_slice() {
        [a, b] => a.trim().parse().ok().zip(b.trim().parse().ok()),
        _ => None,
    };
    match parsed {
        Some((ix, iy)) => Ok(PathSampling::SingleRay { ix, iy }),
        None => Err(CliError::Usage(format!(
            "--ray expects two voxel indices 'ix,iy', got '{text}'"
        ))),
    }
}

/// Factorization identity on every pooled row, and unit integral on
/// every histogram.
fn self_check_report(report: &SimulationReport) -> Result<(), CliError> {
    for row in &report.attenuation {
        let l = &row.mean;
        let product = l.spreading.factor * l.absorption.factor * l.scattering.factor;
        let rel = (l.total.factor - product).abs() / product.abs().max(1e-300);
        let db_sum = l.spreading.db + l.absorption.db + l.scattering.db;
        let db_err = (l.total.db - db_sum).abs();
        if rel > 1e-12 || db_err > 1e-9 {
            return Err(CliError::Check(format!(
                "factorization identity violated at f = {} Hz, d = {} m (rel {rel:e}, dB {db_err:e})",
                row.frequency_hz, row.distance_m
            )));
        }
    }
    for h in &report.histograms {
        let integral = h.integral();
        if (integral - 1.0).abs() > 1e-9 {
            return Err(CliError::Check(format!(
                "histogram {}/{:?} integrates to {integral}, expected 1",
                h.layer.as_str(),
                h.kind
            )));
        }
    }
    Ok(())
}
