//! Acceptance suite: every release criterion as one test that prints a
//! `criterion <id> (<name>): PASS|FAIL` line plus per-check detail and
//! then asserts.
//!
//! Two checks are knowingly red and kept red on purpose; faking them
//! green would hide a real property of the model. Both trace back to the
//! same root cause, explained at the failing tests:
//! criterion 4 (the 100 GHz total-attenuation reference band) and
//! criterion 5a (epidermis-over-dermis mean absorption ordering).

#![allow(clippy::excessive_precision)] // fixtures keep full oracle digits

use std::process::Command;
use std::time::Instant;

use dermawave_core::dielectrics::{
    debye_permittivity, maxwell_garnett, mixture_permittivity, ComplexPermittivity,
    DebyeParameters, RefractiveIndex, refractive_index,
};
use dermawave_core::losses::{absorption_efficiency, extinction_efficiency, rayleigh_efficiency};
use dermawave_core::materials::{Catalog, LayerId, VesselClass};
use dermawave_core::scenario::{
    generate_scenario, place_vessels_line_poisson, GridConfig, ScenarioRealization,
};
use dermawave_core::simulate::{
    attenuation_profile, histogram_from_values, realization_seeds, run_realization,
    CoefficientKind, PathSampling, SimulationConfig,
};
use dermawave_core::rng::CounterRng;

struct Checks {
    id: &'static str,
    name: &'static str,
    items: Vec<(String, bool)>,
}

impl Checks {
    fn new(id: &'static str, name: &'static str) -> Self {
        Self {
            id,
            name,
            items: Vec::new(),
        }
    }

    fn push(&mut self, ok: bool, desc: impl Into<String>) {
        self.items.push((desc.into(), ok));
    }

    fn conclude(self) {
        let all = self.items.iter().all(|(_, ok)| *ok);
        println!(
            "criterion {} ({}): {}",
            self.id,
            self.name,
            if all { "PASS" } else { "FAIL" }
        );
        for (desc, ok) in &self.items {
            println!("  [{}] {desc}", if *ok { "ok" } else { "FAIL" });
        }
        let failed: Vec<&String> = self
            .items
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(desc, _)| desc)
            .collect();
        assert!(all, "criterion {} ({}) failed: {failed:#?}", self.id, self.name);
    }
}

fn rel_err(value: f64, expected: f64) -> f64 {
    (value - expected).abs() / expected.abs().max(1e-300)
}

fn water_params() -> DebyeParameters {
    Catalog::builtin().component_params(dermawave_core::materials::ComponentId::Water)
}

#[test]
fn criterion_1_analytic_limits() {
    let start = Instant::now();
    let mut c = Checks::new("1", "analytic limits");

    // Debye limits
    let hi = debye_permittivity(&water_params(), 1e22).unwrap();
    c.push(
        rel_err(hi.eps_real, 1.8) <= 1e-9 && hi.eps_imag <= 1.8e-9,
        format!("high-frequency limit -> eps_inf: ({}, {})", hi.eps_real, hi.eps_imag),
    );
    let lo = debye_permittivity(&water_params(), 1.0).unwrap();
    c.push(
        rel_err(lo.eps_real, 79.8) <= 1e-9 && lo.eps_imag / 79.8 <= 1e-9,
        format!("low-frequency limit -> eps_static: ({}, {})", lo.eps_real, lo.eps_imag),
    );

    // Maxwell-Garnett identities
    let host = ComplexPermittivity::new(4.2, 1.3);
    let id0 = maxwell_garnett(host, &[]).unwrap();
    c.push(id0 == host, "phi = 0 returns the host exactly");
    let idc = maxwell_garnett(host, &[(host, 0.4)]).unwrap();
    c.push(
        rel_err(idc.eps_real, host.eps_real) <= 1e-9 && rel_err(idc.eps_imag, host.eps_imag) <= 1e-9,
        "zero contrast returns the host",
    );

    // principal square-root round trip
    let mut worst = 0.0f64;
    for re in [0.001, 1.0, 2.3, 4.566, 80.0] {
        for im in [0.0, 0.5, 1.495, 14.427, 100.0] {
            let eps = ComplexPermittivity::new(re, im);
            let n = refractive_index(eps);
            let back = n.as_complex() * n.as_complex();
            worst = worst.max((back - eps.as_complex()).norm() / eps.as_complex().norm());
        }
    }
    c.push(worst <= 1e-12, format!("sqrt round trip worst rel err {worst:e}"));

    // extinction asymptotes
    let q0 = extinction_efficiency(1e-9);
    c.push(
        (0.0..=1e-9).contains(&q0) && rel_err(q0, 0.5e-18) <= 1e-6,
        format!("Q_ext(p -> 0) -> 0 (got {q0:e})"),
    );
    let qinf = extinction_efficiency(1e6);
    c.push(
        (1.99..=2.01).contains(&qinf),
        format!("Q_ext(p -> inf) -> 2 (got {qinf})"),
    );

    // absorption efficiency bounded to [0, 1]
    let mut qabs_ok = true;
    let mut b = 1e-9;
    while b < 1e9 {
        let q = absorption_efficiency(b);
        qabs_ok &= (0.0..=1.0).contains(&q);
        b *= 3.7;
    }
    c.push(qabs_ok, "Q_abs in [0, 1] over 12 decades of b");

    // Rayleigh psi^4 scaling
    let mut scaling_ok = true;
    for psi in [0.01, 0.1, 0.45] {
        for n in [
            RefractiveIndex::new(1.5, 0.0),
            RefractiveIndex::new(2.8, 1.9),
            RefractiveIndex::new(1.2, 0.1),
        ] {
            let q1 = rayleigh_efficiency(psi, &n).unwrap();
            let q2 = rayleigh_efficiency(2.0 * psi, &n).unwrap();
            if q1 > 0.0 {
                scaling_ok &= rel_err(q2 / q1, 16.0) <= 1e-9;
            }
        }
    }
    c.push(scaling_ok, "Q_rayleigh(2 psi) / Q_rayleigh(psi) = 16");

    let elapsed = start.elapsed().as_secs_f64();
    c.push(elapsed < 1.0, format!("runtime {elapsed:.3} s < 1 s"));
    c.conclude();
}

#[test]
fn criterion_2_oracle_equivalence() {
    let start = Instant::now();
    let mut c = Checks::new("2", "oracle equivalence");
    let catalog = Catalog::builtin();

    // Frozen fixtures from an independent straight-line 50-digit
    // evaluation of the Debye sum and the Maxwell-Garnett expression.
    // (material, f_hz, eps_real, eps_imag)
    let fixtures: &[(&str, f64, f64, f64)] = &[
        ("water", 1e11, 4.5662829375035854, 14.426286695992014),
        ("water", 1e12, 1.8286694277244555, 1.4951232144614305),
        ("protein", 1e11, 3.7993289487115855, 1.8477327184788182),
        ("protein", 1e12, 3.3699222431242900, 0.57488589611881729),
        ("lipid", 1e11, 4.4864228695750213, 0.62872278727249879),
        ("lipid", 1e12, 2.8339460959990122, 0.64324443411602194),
        ("corneocytes", 1e11, 4.0731019015717270, 2.8692642676542983),
        ("corneocytes", 1e12, 3.1161032173160714, 0.74564566683784759),
        ("granular_keratinocytes", 1e11, 4.6250526310509008, 10.201046125876918),
        ("granular_keratinocytes", 1e12, 2.2199815041190498, 1.3302826750292681),
        ("spinous_keratinocytes", 1e11, 4.6279975576123176, 11.176633746235136),
        ("spinous_keratinocytes", 1e12, 2.1259948757966813, 1.3758352603383378),
        ("basal_keratinocytes", 1e11, 4.6279975576123176, 11.176633746235136),
        ("basal_keratinocytes", 1e12, 2.1259948757966813, 1.3758352603383378),
        ("melanocytes", 1e11, 4.6279975576123176, 11.176633746235136),
        ("melanocytes", 1e12, 2.1259948757966813, 1.3758352603383378),
        ("langerhans_cells", 1e11, 4.6250526310509008, 10.201046125876918),
        ("langerhans_cells", 1e12, 2.2199815041190498, 1.3302826750292681),
        ("merkel_cells", 1e11, 4.6279975576123176, 11.176633746235136),
        ("merkel_cells", 1e12, 2.1259948757966813, 1.3758352603383378),
        ("red_blood_cells", 1e11, 4.5653791214865924, 9.5412572887854167),
        ("red_blood_cells", 1e12, 2.3102658210258347, 1.2957180469977246),
        ("fibroblasts", 1e11, 4.6279975576123176, 11.176633746235136),
        ("fibroblasts", 1e12, 2.1259948757966813, 1.3758352603383378),
        ("adipocytes", 1e11, 4.6137470202586172, 2.2636226819745420),
        ("adipocytes", 1e12, 2.7358527804425783, 0.79709194785649540),
        ("ecm_epidermis", 1e11, 4.6051012358006918, 9.3441690805696267),
        ("ecm_epidermis", 1e12, 2.3086558943891031, 1.2858070981579389),
        ("ecm_dermis", 1e11, 4.5952887571584653, 10.164516248100652),
        ("ecm_dermis", 1e12, 2.2374821926670605, 1.3282956845934824),
        ("ecm_hypodermis", 1e11, 4.7121461147701404, 3.3760605443383444),
        ("ecm_hypodermis", 1e12, 2.6411567348850199, 0.89675161193767435),
    ];

    let mut worst: (f64, &str) = (0.0, "");
    for &(material, f, want_re, want_im) in fixtures {
        let eps = match dermawave_core::materials::ComponentId::from_name(material) {
            Some(component) => debye_permittivity(&catalog.component_params(component), f).unwrap(),
            None => {
                let comp = if let Some(layer) =
                    material.strip_prefix("ecm_").and_then(LayerId::from_name)
                {
                    catalog.ecm_composition(layer).clone()
                } else {
                    catalog.cell_species(material).unwrap().composition.clone()
                };
                mixture_permittivity(&comp, f, &catalog).unwrap()
            }
        };
        let err = rel_err(eps.eps_real, want_re).max(rel_err(eps.eps_imag, want_im));
        if err > worst.0 {
            worst = (err, material);
        }
    }
    c.push(
        worst.0 <= 1e-9,
        format!(
            "{} fixtures match to <= 1e-9 relative (worst {:e} at {})",
            fixtures.len(),
            worst.0,
            worst.1
        ),
    );

    let elapsed = start.elapsed().as_secs_f64();
    c.push(elapsed < 1.0, format!("runtime {elapsed:.3} s < 1 s"));
    c.conclude();
}

#[test]
fn criterion_3_loss_factorization() {
    let mut c = Checks::new("3", "loss factorization identity");
    let catalog = Catalog::builtin();
    let grid = GridConfig {
        seed: 1,
        ..GridConfig::default()
    };
    let real = generate_scenario(&grid, &catalog).unwrap();
    let depths: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5e-3).collect();
    let rows = attenuation_profile(&[1e11, 1e12], &depths, &real, &catalog, 1.0, PathSampling::LateralMean).unwrap();
    c.push(rows.len() == 22, format!("2 x 11 grid produced {} rows", rows.len()));

    let mut worst_factor = 0.0f64;
    let mut worst_db = 0.0f64;
    for row in &rows {
        let l = &row.loss;
        let product = l.spreading.factor * l.absorption.factor * l.scattering.factor;
        worst_factor = worst_factor.max(rel_err(l.total.factor, product));
        let db_sum = l.spreading.db + l.absorption.db + l.scattering.db;
        worst_db = worst_db.max((l.total.db - db_sum).abs());
    }
    c.push(
        worst_factor <= 1e-12,
        format!("total factor = product of components (worst rel {worst_factor:e})"),
    );
    c.push(
        worst_db <= 1e-9,
        format!("total dB = sum of component dBs (worst abs {worst_db:e})"),
    );
    c.conclude();
}

/// Attenuation reference targets for the default phantom.
///
/// The 100 GHz total-attenuation band [37, 53] dB is a published
/// reference figure for this scenario; it presumes per-layer absorption
/// coefficients of a few hundred m^-1. The absorption model implemented
/// here (Beer-Lambert with mu_abs = 4 pi n'' / lambda_g over water-rich
/// Debye mixtures) yields 2e4 m^-1 scale coefficients and therefore
/// ~340 dB of absorption over 5 mm; no parameter choice inside the
/// stated model family reaches the band. The check is implemented as
/// stated and kept honestly red rather than tuned green; the spreading
/// and 1 THz orderings do hold.
#[test]
fn criterion_4_attenuation_reference_targets() {
    let start = Instant::now();
    let mut c = Checks::new("4", "attenuation reference targets");
    let catalog = Catalog::builtin();
    let cfg = SimulationConfig {
        grid: GridConfig {
            seed: 7,
            ..GridConfig::default()
        },
        ..SimulationConfig::default()
    };
    let seeds = realization_seeds(&cfg);
    let outputs: Vec<_> = seeds
        .iter()
        .map(|&s| run_realization(&cfg, &catalog, s).unwrap())
        .collect();
    let report = dermawave_core::simulate::pool_report(&cfg, &catalog, &outputs).unwrap();

    let at = |f: f64, d: f64| {
        report
            .attenuation
            .iter()
            .find(|r| r.frequency_hz == f && (r.distance_m - d).abs() < 1e-12)
            .expect("row exists")
    };

    let spr = at(1e11, 5e-3).mean.spreading.db;
    c.push(
        (30.0..=40.0).contains(&spr),
        format!("spreading(100 GHz, 5 mm) = {spr:.2} dB in [30, 40]"),
    );

    let tot100 = at(1e11, 5e-3).mean.total.db;
    c.push(
        (37.0..=53.0).contains(&tot100),
        format!("total(100 GHz, 5 mm) = {tot100:.1} dB in [37, 53] (see test docs: unreachable for this absorption model)"),
    );

    let tot1t = at(1e12, 5e-3).mean.total.db;
    c.push(tot1t > 55.0, format!("total(1 THz, 5 mm) = {tot1t:.1} dB > 55"));

    let mut ordering = true;
    for &d in &cfg.depths_m {
        if d > 0.0 && at(1e12, d).mean.total.db <= at(1e11, d).mean.total.db {
            ordering = false;
        }
    }
    c.push(ordering, "total(1 THz) > total(100 GHz) at every d > 0");

    let elapsed = start.elapsed().as_secs_f64();
    c.push(elapsed < 60.0, format!("runtime {elapsed:.1} s < 60 s"));
    c.conclude();
}

fn percentile(values: &mut [f64], p: f64) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((values.len() as f64 * p).ceil() as usize).clamp(1, values.len());
    values[rank - 1]
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// True when the density sequence has two local maxima separated by a
/// dip of at least 20% below the smaller peak.
fn is_bimodal(density: &[f64]) -> bool {
    let peaks: Vec<usize> = (0..density.len())
        .filter(|&i| {
            density[i] > 0.0
                && (i == 0 || density[i] >= density[i - 1])
                && (i + 1 == density.len() || density[i] >= density[i + 1])
        })
        .collect();
    for (a, &i) in peaks.iter().enumerate() {
        for &j in peaks.iter().skip(a + 1) {
            let dip = density[i..=j].iter().cloned().fold(f64::INFINITY, f64::min);
            let smaller = density[i].min(density[j]);
            if smaller > 0.0 && dip <= 0.8 * smaller {
                return true;
            }
        }
    }
    false
}

/// Distribution-shape targets, pooled over 10 seeded realizations.
///
/// Check (a) expects the epidermis to out-absorb the dermis on average.
/// With the catalog compositions the ordering comes out reversed: the
/// dermis ECM carries more water (0.73 vs 0.675 volume fraction, the
/// protein/lipid residual rule) and hard-sphere packing caps cell volume
/// fractions near 38%, so epidermal cells cannot lift the layer mean
/// above the wetter dermis background. The gap is systematic (~8-10% at
/// 100 GHz, ~5% at 1 THz) and no random-packing seed flips it. Kept
/// honestly red; (b)-(d) hold.
#[test]
fn criterion_5_distribution_shapes() {
    let mut c = Checks::new("5", "distribution shapes");
    let catalog = Catalog::builtin();
    let cfg = SimulationConfig {
        grid: GridConfig {
            seed: 5,
            ..GridConfig::default()
        },
        ..SimulationConfig::default()
    };
    assert!(cfg.n_realizations >= 10);
    let seeds = realization_seeds(&cfg);
    let outputs: Vec<_> = seeds
        .iter()
        .map(|&s| run_realization(&cfg, &catalog, s).unwrap())
        .collect();

    // pooled voxel values per (frequency, kind, layer)
    let pooled = |f: f64, kind: CoefficientKind, layer: LayerId| -> Vec<f64> {
        let mut values = Vec::new();
        for o in &outputs {
            for lv in &o.layer_values {
                if lv.frequency_hz == f && lv.kind == kind {
                    values.extend_from_slice(&lv.values[layer as usize]);
                }
            }
        }
        values
    };

    // (a) epidermis vs dermis mean absorption at both band edges
    let mut ordering = true;
    let mut detail = String::new();
    for f in [1e11, 1e12] {
        let epi = mean(&pooled(f, CoefficientKind::Abs, LayerId::Epidermis));
        let der = mean(&pooled(f, CoefficientKind::Abs, LayerId::Dermis));
        ordering &= epi > der;
        detail.push_str(&format!(" [{:.0} GHz: epi {epi:.0}, dermis {der:.0} m^-1]", f / 1e9));
    }
    c.push(
        ordering,
        format!("(a) epidermis mean mu_abs > dermis mean{detail} (see test docs: reversed by the wetter dermis ECM)"),
    );

    // (b) hypodermis absorption bimodality at 100 GHz
    let hypo_abs = pooled(1e11, CoefficientKind::Abs, LayerId::Hypodermis);
    let hist = histogram_from_values(
        LayerId::Hypodermis,
        CoefficientKind::Abs,
        1e11,
        &hypo_abs,
        cfg.histogram_bins,
    )
    .unwrap();
    c.push(
        is_bimodal(&hist.density),
        "(b) hypodermis absorption histogram is bimodal (>= 20% dip between maxima)",
    );

    // (c) scattering mass below 1e-3 um^-1 at 100 GHz, every layer
    let mut small_sca = true;
    for layer in LayerId::ALL {
        let values = pooled(1e11, CoefficientKind::Sca, layer);
        let below = values.iter().filter(|&&v| v < 1e-3).count() as f64 / values.len() as f64;
        small_sca &= below >= 0.95;
    }
    c.push(small_sca, "(c) >= 95% of 100 GHz scattering mass below 1e-3 um^-1 in every layer");

    // (d) hypodermis scattering tail grows with frequency
    let mut lo = pooled(1e11, CoefficientKind::Sca, LayerId::Hypodermis);
    let mut hi = pooled(1e12, CoefficientKind::Sca, LayerId::Hypodermis);
    let p_lo = percentile(&mut lo, 0.95);
    let p_hi = percentile(&mut hi, 0.95);
    c.push(
        p_hi > p_lo,
        format!("(d) hypodermis scattering p95 heavier at 1 THz ({p_hi:.3e} > {p_lo:.3e} um^-1)"),
    );
    c.conclude();
}

#[test]
fn criterion_6_stochastic_geometry() {
    let start = Instant::now();
    let mut c = Checks::new("6", "stochastic geometry");
    let catalog = Catalog::builtin();

    // independent brute-force checker, written against the public data
    // model only (no reuse of the generator's own verification)
    fn scan(real: &ScenarioRealization, catalog: &Catalog) -> Vec<String> {
        let mut bad = Vec::new();
        let p = &real.placements;
        for i in 0..p.len() {
            for j in (i + 1)..p.len() {
                let dx = p[i].center_m[0] - p[j].center_m[0];
                let dy = p[i].center_m[1] - p[j].center_m[1];
                let dz = p[i].center_m[2] - p[j].center_m[2];
                let dist2 = dx * dx + dy * dy + dz * dz;
                let min = p[i].radius_m + p[j].radius_m;
                if dist2 < min * min * (1.0 - 1e-12) {
                    bad.push(format!("overlap between spheres {i} and {j}"));
                }
            }
        }
        for (i, placement) in p.iter().enumerate() {
            let species = &catalog.cells[placement.species_index];
            match species.depth_interval_m() {
                Some((lo, hi)) => {
                    let z = placement.center_m[2];
                    if z < lo || z > hi {
                        bad.push(format!("sphere {i} out of its depth interval"));
                    }
                }
                None => {
                    // vessel-bound: the center must sit inside some lumen
                    let inside = real.vessels.iter().any(|v| {
                        let vx = placement.center_m[0] - v.center_m[0];
                        let vy = placement.center_m[1] - v.center_m[1];
                        let vz = placement.center_m[2] - v.center_m[2];
                        let t = vx * v.axis[0] + vy * v.axis[1] + vz * v.axis[2];
                        if t.abs() > v.half_length_m {
                            return false;
                        }
                        let rx = vx - t * v.axis[0];
                        let ry = vy - t * v.axis[1];
                        let rz = vz - t * v.axis[2];
                        (rx * rx + ry * ry + rz * rz).sqrt() <= v.radius_m + 1e-12
                    });
                    if !inside {
                        bad.push(format!("vessel-bound sphere {i} outside every lumen"));
                    }
                }
            }
        }
        bad
    }

    let mut violations = 0usize;
    let mut spheres = 0usize;
    for seed in 0..100u64 {
        let grid = GridConfig {
            seed,
            ..GridConfig::default()
        };
        let real = generate_scenario(&grid, &catalog).unwrap();
        spheres += real.placements.len();
        let bad = scan(&real, &catalog);
        if !bad.is_empty() {
            eprintln!("seed {seed}: {bad:?}");
        }
        violations += bad.len();
    }
    c.push(
        violations == 0,
        format!("zero violations across 100 seeds ({spheres} spheres scanned O(N^2))"),
    );

    // line-Poisson counts: sample mean within 3 sigma of the configured
    // mean over 1000 draws, for both vessel-carrying layers
    let grid = GridConfig::default();
    for (layer, lambda) in [(LayerId::Dermis, 20.0), (LayerId::Hypodermis, 5.0)] {
        let spec = catalog.layer(layer);
        let mut total = 0usize;
        for seed in 0..1000u64 {
            let mut rng = CounterRng::stream(seed, "vessels", &[layer as u64]);
            total += place_vessels_line_poisson(&grid, spec, &mut rng).len();
        }
        let sample_mean = total as f64 / 1000.0;
        let sigma3 = 3.0 * (lambda / 1000.0f64).sqrt();
        c.push(
            (sample_mean - lambda).abs() < sigma3,
            format!(
                "{} vessel count mean {sample_mean:.2} within 3 sigma ({sigma3:.2}) of {lambda}",
                layer.as_str()
            ),
        );
    }

    let elapsed = start.elapsed().as_secs_f64();
    c.push(elapsed < 120.0, format!("runtime {elapsed:.1} s < 120 s"));
    c.conclude();
}

#[test]
fn criterion_7_determinism() {
    let mut c = Checks::new("7", "determinism");
    let bin = env!("CARGO_BIN_EXE_dermawave");
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let threads = ["", "1", "5"]; // default, serial, oversubscribed

    for (dir, t) in dirs.iter().zip(threads) {
        let mut cmd = Command::new(bin);
        cmd.args(["simulate", "--seed", "7", "--out"]).arg(dir.path());
        if !t.is_empty() {
            cmd.env("DERMAWAVE_THREADS", t);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }

    let names: Vec<String> = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    c.push(names.len() > 2, format!("{} output files compared", names.len()));

    let mut csv_identical = true;
    let mut json_identical = true;
    for name in &names {
        let base = std::fs::read(dirs[0].path().join(name)).unwrap();
        for dir in &dirs[1..] {
            let other = std::fs::read(dir.path().join(name)).unwrap();
            if name.ends_with(".json") {
                // wall-clock metadata is the only permitted difference
                let strip = |bytes: &[u8]| {
                    let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
                    v.as_object_mut().unwrap().remove("wall_clock");
                    v
                };
                json_identical &= strip(&base) == strip(&other);
            } else {
                csv_identical &= base == other;
            }
        }
    }
    c.push(csv_identical, "CSV outputs byte-identical across runs and thread counts");
    c.push(json_identical, "report.json identical excluding wall-clock metadata");
    c.conclude();
}

#[test]
fn criterion_8_grid_conformance() {
    let mut c = Checks::new("8", "grid conformance");
    let dims = GridConfig::default().dims().unwrap();
    c.push(dims == [10, 10, 500], format!("default grid dims {dims:?} = [10, 10, 500]"));
    let catalog = Catalog::builtin();
    let real = generate_scenario(
        &GridConfig {
            seed: 0,
            ..GridConfig::default()
        },
        &catalog,
    )
    .unwrap();
    c.push(
        real.labels.len() == 50_000,
        format!("default realization labels {} voxels", real.labels.len()),
    );
    // capillaries really are confined to the upper dermis by default
    let ok = real
        .vessels
        .iter()
        .filter(|v| v.class == VesselClass::Capillary)
        .all(|v| {
            let z_um = v.center_m[2] * 1e6;
            (130.0..=704.0).contains(&z_um)
        });
    c.push(ok, "capillary band within [130, 704] um");
    c.conclude();
}
