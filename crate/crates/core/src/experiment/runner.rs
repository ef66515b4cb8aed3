//! Seeded Monte-Carlo convergence runs.
//!
//! Sample `i` uses the point seeded by `sample_seed(master_seed, i)`. Workers
//! compute every average for one sample; the results are collected in sample
//! order and reduced sequentially, so the report does not depend on the
//! number of threads.

use rayon::prelude::*;

use super::config::{BoundVariant, ExperimentConfig};
use super::report::{AverageRow, BorelCantelliSeries, ConvergenceReport, DoobRow, RunConstants};
use crate::dynamics::{sample_point, Observable, SystemDescriptor};
use crate::error::{Error, Result};
use crate::group::FiniteSubset;
use crate::hash::sample_seed;
use crate::martingale::{
    borel_cantelli_partial_sums, cell_tail_bound, check_disjoint_windows, doob_path_unchecked,
    empirical_tail, ergodic_average, gamma_constants, split_cells, CellDecomposition, TailComparison,
};
use crate::numeric::CompensatedSum;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "FOLNERLAB_THREADS";

/// Explicit count, else `FOLNERLAB_THREADS`, else the hardware parallelism.
pub fn resolve_threads(explicit: Option<usize>) -> Result<usize> {
    if let Some(t) = explicit {
        return if t == 0 {
            Err(Error::invalid("thread count must be at least 1"))
        } else {
            Ok(t)
        };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(Error::invalid(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub type Pool = rayon::ThreadPool;

/// A worker pool sized by [`resolve_threads`].
pub fn pool(threads: Option<usize>) -> Result<Pool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_threads(threads)?)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// Averages `avgs[i][j]` of sample `i` over the `j`-th scheduled set.
fn sample_averages(
    sys: &SystemDescriptor,
    f: &Observable,
    sets: &[FiniteSubset],
    samples: u64,
    master_seed: u64,
    threads: usize,
) -> Result<Vec<Vec<f64>>> {
    pool(Some(threads))?.install(|| {
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let x = sample_point(sys, sample_seed(master_seed, i));
                sets.iter().map(|h| ergodic_average(&x, f, h)).collect()
            })
            .collect()
    })
}

pub fn run_convergence(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let threads = resolve_threads(threads)?;
    let sys = cfg.build_system()?;
    let f = cfg.build_observable(&sys)?;
    let seq = cfg.build_folner()?;

    let wants_theory = cfg.use_partition || cfg.bounds != BoundVariant::None;
    let theory = if sys.is_rotation() {
        if wants_theory && !cfg.force {
            return Err(Error::HypothesisFails);
        }
        false
    } else {
        wants_theory
    };

    let sets = cfg
        .schedule
        .iter()
        .map(|&n| seq.set(n))
        .collect::<Result<Vec<_>>>()?;

    let mut constants = RunConstants {
        k: None,
        r: 1,
        modulus: None,
        delta: None,
        gammas: Vec::new(),
        beta: None,
        observation_only: !theory,
        bound_variant: if theory { cfg.bounds } else { BoundVariant::None },
        sup_norm: f.sup_norm(),
        exact_mean: f.exact_mean(),
    };
    let mut decompositions: Vec<CellDecomposition> = Vec::new();
    if theory {
        let (k, p) = cfg.build_partition(&f, sys.group())?;
        constants.r = p.r();
        constants.modulus = match p.construction() {
            crate::density::PartitionConstruction::LatticeCosets { modulus } => Some(*modulus),
            _ => None,
        };
        constants.delta = Some(cfg.delta(f.sup_norm()));
        constants.k = Some(k);
        for set in &sets {
            let cells = split_cells(set, &p)?;
            if cfg.use_partition {
                for cell in &cells.cells[1..] {
                    check_disjoint_windows(&f, cell)?;
                }
            }
            decompositions.push(cells);
        }
        constants.gammas = cfg
            .eps
            .iter()
            .map(|&eps| gamma_constants(eps, f.sup_norm()).map(|g| (eps, g)))
            .collect::<Result<Vec<_>>>()?;
        constants.beta = Some(decompositions.iter().map(CellDecomposition::beta).fold(1.0, f64::min));
    }

    let avgs = sample_averages(&sys, &f, &sets, cfg.samples, cfg.master_seed, threads)?;
    let mean = f.exact_mean();

    let mut averages = Vec::with_capacity(sets.len());
    let mut tails = Vec::new();
    for (j, (&n, set)) in cfg.schedule.iter().zip(&sets).enumerate() {
        let column: Vec<f64> = avgs.iter().map(|row| row[j]).collect();
        let mut dev = CompensatedSum::new();
        let mut avg = CompensatedSum::new();
        let mut max_dev = 0.0f64;
        for &a in &column {
            dev.add((a - mean).abs());
            avg.add(a);
            max_dev = max_dev.max((a - mean).abs());
        }
        let count = column.len() as f64;
        averages.push(AverageRow {
            n,
            size: set.len(),
            mean_abs_deviation: dev.value() / count,
            max_abs_deviation: max_dev,
            mean_average: avg.value() / count,
            d0_mass: decompositions.get(j).map(|c| c.d0_size() as f64 / set.len() as f64),
        });
        for &eps in &cfg.eps {
            let empirical = empirical_tail(&column, mean, eps)?;
            let mut row = TailComparison {
                n,
                eps,
                empirical_tail: empirical,
                bound_paper: None,
                bound_derived: None,
                r: constants.r,
                gamma: None,
                beta: 1.0,
                min_cell: set.len(),
            };
            if let Some(cells) = decompositions.get(j) {
                let gamma = gamma_constants(eps, f.sup_norm())?;
                row.gamma = Some(gamma);
                row.beta = cells.beta();
                row.min_cell = cells.min_cell();
                if cfg.bounds.includes_paper() {
                    row.bound_paper = Some(cell_tail_bound(cells, gamma.paper)?.per_n);
                }
                if cfg.bounds.includes_derived() {
                    row.bound_derived = Some(cell_tail_bound(cells, gamma.derived)?.per_n);
                }
            }
            tails.push(row);
        }
    }

    let mut borel_cantelli = Vec::new();
    if let Some(beta) = constants.beta {
        let two_r = 2.0 * constants.r as f64;
        for (eps, gamma) in &constants.gammas {
            let mut variants = Vec::new();
            if cfg.bounds.includes_paper() {
                variants.push(("paper", gamma.paper));
            }
            if cfg.bounds.includes_derived() {
                variants.push(("derived", gamma.derived));
            }
            for (variant, g) in variants {
                let alpha = g.powf(beta);
                let bounds: Vec<f64> = sets
                    .iter()
                    .map(|s| two_r * alpha.powf(s.len() as f64))
                    .collect();
                borel_cantelli.push(BorelCantelliSeries {
                    eps: *eps,
                    variant,
                    alpha,
                    schedule: cfg.schedule.clone(),
                    sizes: sets.iter().map(FiniteSubset::len).collect(),
                    bounds: bounds.clone(),
                    sums: borel_cantelli_partial_sums(&bounds)?,
                });
            }
        }
    }

    let mut doob = Vec::new();
    if theory && cfg.use_partition && cfg.doob_samples > 0 {
        let cells = decompositions.last().expect("schedule is nonempty");
        for i in 0..cfg.doob_samples.min(cfg.samples) {
            let seed = sample_seed(cfg.master_seed, i);
            let x = sample_point(&sys, seed);
            for (c, cell) in cells.cells.iter().enumerate().skip(1) {
                let path = doob_path_unchecked(&x, &f, cell)?;
                for k in 0..path.y.len() {
                    doob.push(DoobRow {
                        seed,
                        cell: c,
                        k,
                        y: path.y[k],
                        m: path.m[k],
                        n: path.n[k],
                    });
                }
            }
        }
    }

    Ok(ConvergenceReport {
        config: cfg.clone(),
        constants,
        averages,
        tails,
        borel_cantelli,
        doob,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn constant_observable_single_sample() {
        let c = cfg("observable.kind = constant\nobservable.value = 0.75\nrun.schedule = 1..6\nrun.eps = 0.1\nrun.samples = 1\n");
        let report = run_convergence(&c, Some(2)).unwrap();
        for row in &report.averages {
            assert_eq!(row.mean_average, 0.75);
            assert_eq!(row.max_abs_deviation, 0.0);
        }
        assert!(report.tails.iter().all(|t| t.empirical_tail == 0.0));
    }

    #[test]
    fn writes_every_output_file() {
        let c = cfg("run.schedule = 8, 16\nrun.eps = 0.2\nrun.samples = 20\nrun.doob_samples = 1\n");
        let report = run_convergence(&c, Some(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let written = report.write_to(dir.path()).unwrap();
        assert!(written.len() >= 5, "{written:?}");
        let tails = std::fs::read_to_string(dir.path().join("tails.csv")).unwrap();
        assert_eq!(tails.lines().count(), 3);
    }

    #[test]
    fn rotation_refuses_without_force() {
        let text = "system.kind = rotation\nobservable.kind = arc\nrun.schedule = 10, 100\nrun.eps = 0.1\nrun.samples = 50\n";
        let err = run_convergence(&cfg(text), Some(1)).unwrap_err();
        assert_eq!(err.to_string(), "hypothesis of Theorem fails: no finite K");
        let forced = cfg(&format!("{text}run.force = true\n"));
        let report = run_convergence(&forced, Some(1)).unwrap();
        assert!(report.constants.observation_only);
        assert!(report.tails.iter().all(|t| t.bound_derived.is_none()));
        // irrational rotation is uniquely ergodic, so averages still approach 1/2
        assert!(report.averages[1].max_abs_deviation < 0.05);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let text = "observable.kind = all_equal\nobservable.window = 0; 2\nrun.schedule = 8, 32, 128\nrun.eps = 0.1, 0.2\nrun.samples = 300\nrun.seed = 4\nrun.doob_samples = 2\n";
        let a = run_convergence(&cfg(text), Some(1)).unwrap();
        let b = run_convergence(&cfg(text), Some(3)).unwrap();
        assert_eq!(a.tails_csv(), b.tails_csv());
        assert_eq!(a.averages_csv(), b.averages_csv());
        assert_eq!(a.doob_csv(), b.doob_csv());
        assert_eq!(a.constants.r, 3);
        assert!(!a.doob.is_empty());
    }

    #[test]
    fn explicit_thread_count_wins() {
        assert_eq!(resolve_threads(Some(3)).unwrap(), 3);
        assert!(resolve_threads(Some(0)).is_err());
    }
}
