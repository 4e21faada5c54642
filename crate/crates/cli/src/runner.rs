//! Parallel Monte Carlo execution.
//!
//! Realizations are independent (their seeds derive from the master seed)
//! and results are collected in index order before the deterministic
//! pooled reduction, so the report is byte-identical for any worker
//! count. `DERMAWAVE_THREADS` caps the workers; the default is the
//! machine parallelism.

use dermawave_core::materials::Catalog;
use dermawave_core::simulate::{
    pool_report, realization_seeds, run_realization, SimulateError, SimulationConfig,
    SimulationReport,
};

pub const THREADS_ENV: &str = "DERMAWAVE_THREADS";

pub fn worker_count(n_items: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    let default = std::thread::available_parallelism().map_or(1, |n| n.get());
    cap.unwrap_or(default).min(n_items.max(1))
}

/// Order-preserving parallel map over `0..n` with a fixed worker count.
pub fn parallel_map<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    let chunk = n.div_ceil(threads);
    std::thread::scope(|scope| {
        for (w, slice) in slots.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                for (i, slot) in slice.iter_mut().enumerate() {
                    *slot = Some(f(w * chunk + i));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every index was assigned to a worker"))
        .collect()
}

/// Monte Carlo run with realization-level parallelism; output equals
/// `run_monte_carlo` exactly.
pub fn run_parallel(cfg: &SimulationConfig, catalog: &Catalog) -> Result<SimulationReport, SimulateError> {
    cfg.validate()?;
    let seeds = realization_seeds(cfg);
    let threads = worker_count(seeds.len());
    let outputs = parallel_map(seeds.len(), threads, |i| run_realization(cfg, catalog, seeds[i]));
    let outputs: Result<Vec<_>, _> = outputs.into_iter().collect();
    pool_report(cfg, catalog, &outputs?)
}
