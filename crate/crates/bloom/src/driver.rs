//! Parallel evaluation of a Saltelli design.

use bloom_core::sensitivity::{saltelli_design, SensitivityReport, SobolProblem};
use bloom_core::ModelParams;
use rayon::prelude::*;

use crate::error::Result;

/// Runs `model` on every design row in parallel and reduces the outputs.
///
/// Rows come back in design order whatever the scheduling, so the report only
/// depends on `(problem, base, n, bins, seed)`. A failing row is logged and
/// its whole block is dropped by the estimator.
pub fn run_sensitivity_parallel<F>(
    problem: &SobolProblem,
    base: &ModelParams,
    n: usize,
    bins: &[(f64, f64)],
    seed: u64,
    model: F,
) -> Result<SensitivityReport>
where
    F: Fn(&ModelParams) -> bloom_core::Result<Vec<Vec<f64>>> + Sync,
{
    problem.validate_for(base)?;
    if !n.is_power_of_two() {
        log::warn!("N = {n} is not a power of two; the Sobol' points lose balance");
    }
    let design = saltelli_design(problem, n, seed)?;
    let rows: Vec<&[f64]> = design.rows().collect();
    let outputs: Vec<Option<Vec<Vec<f64>>>> = rows
        .par_iter()
        .enumerate()
        .map(|(k, row)| match problem.apply(base, row).and_then(|p| model(&p)) {
            Ok(out) => Some(out),
            Err(e) => {
                log::warn!("design row {k} failed: {e}");
                None
            }
        })
        .collect();
    Ok(SensitivityReport::from_outputs(problem, &design, bins, &outputs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bloom_core::sensitivity::{run_sensitivity, Factor};

    fn problem() -> SobolProblem {
        SobolProblem { factors: vec![Factor::new("K_bg", 0.1, 1.0), Factor::new("z_m", 2.0, 10.0), Factor::new("D", 0.01, 0.1)] }
    }

    fn model(p: &ModelParams) -> bloom_core::Result<Vec<Vec<f64>>> {
        Ok(vec![vec![p.k_bg + 0.1 * p.z_m, p.k_bg * p.z_m], vec![p.exchange * 3.0 + p.k_bg, 1.0 + p.z_m]])
    }

    #[test]
    fn matches_the_serial_driver() {
        let base = ModelParams::default();
        let bins = [(0.0, 1.0), (1.0, 2.0)];
        let par = run_sensitivity_parallel(&problem(), &base, 64, &bins, 3, model).unwrap();
        let ser = run_sensitivity(&problem(), &base, 64, &bins, 3, model).unwrap();
        assert_eq!(par, ser);
    }

    #[test]
    fn thread_count_does_not_change_the_report() {
        let base = ModelParams::default();
        let bins = [(0.0, 1.0), (1.0, 2.0)];
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run_sensitivity_parallel(&problem(), &base, 32, &bins, 9, model).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
