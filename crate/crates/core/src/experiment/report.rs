//! Report tables, CSV rendering and the plain-text summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{BoundVariant, ExperimentConfig};
use crate::error::Result;
use crate::group::FiniteSubset;
use crate::martingale::{BorelCantelli, GammaConstants, TailComparison};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConstants {
    pub k: Option<FiniteSubset>,
    pub r: usize,
    pub modulus: Option<i64>,
    /// `eps_min / (7 ||f||)`.
    pub delta: Option<f64>,
    pub gammas: Vec<(f64, GammaConstants)>,
    /// `min_n beta_n` over the schedule.
    pub beta: Option<f64>,
    pub observation_only: bool,
    pub bound_variant: BoundVariant,
    pub sup_norm: f64,
    pub exact_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageRow {
    pub n: u64,
    pub size: usize,
    pub mean_abs_deviation: f64,
    pub max_abs_deviation: f64,
    pub mean_average: f64,
    /// `|F_n ∩ D_0| / |F_n|`.
    pub d0_mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BorelCantelliSeries {
    pub eps: f64,
    pub variant: &'static str,
    pub alpha: f64,
    pub schedule: Vec<u64>,
    pub sizes: Vec<usize>,
    /// `2 r alpha^{|F_n|}`.
    pub bounds: Vec<f64>,
    pub sums: BorelCantelli,
}

impl BorelCantelliSeries {
    /// Schedule index `n` from which the increments stay below the threshold.
    pub fn flat_from_n(&self) -> Option<u64> {
        self.sums.flat_from.map(|j| self.schedule[j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoobRow {
    pub seed: u64,
    pub cell: usize,
    pub k: usize,
    pub y: f64,
    pub m: f64,
    pub n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub constants: RunConstants,
    pub averages: Vec<AverageRow>,
    pub tails: Vec<TailComparison>,
    pub borel_cantelli: Vec<BorelCantelliSeries>,
    pub doob: Vec<DoobRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ConvergenceReport {
    pub fn tail(&self, n: u64, eps: f64) -> Option<&TailComparison> {
        self.tails.iter().find(|t| t.n == n && t.eps == eps)
    }

    pub fn average(&self, n: u64) -> Option<&AverageRow> {
        self.averages.iter().find(|a| a.n == n)
    }

    pub fn tails_csv(&self) -> String {
        let mut s = String::from("n,eps,empirical,bound_paper,bound_derived,r,min_cell,beta\n");
        for t in &self.tails {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                t.n,
                t.eps,
                t.empirical_tail,
                opt(t.bound_paper),
                opt(t.bound_derived),
                t.r,
                t.min_cell,
                t.beta
            );
        }
        s
    }

    pub fn averages_csv(&self) -> String {
        let mut s = String::from("n,size,mean_abs_dev,max_abs_dev,mean_average,d0_mass\n");
        for a in &self.averages {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                a.n,
                a.size,
                a.mean_abs_deviation,
                a.max_abs_deviation,
                a.mean_average,
                opt(a.d0_mass)
            );
        }
        s
    }

    pub fn borel_cantelli_csv(&self) -> String {
        let mut s = String::from("eps,variant,alpha,n,size,bound,partial_sum\n");
        for series in &self.borel_cantelli {
            for j in 0..series.bounds.len() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    series.eps,
                    series.variant,
                    series.alpha,
                    series.schedule[j],
                    series.sizes[j],
                    series.bounds[j],
                    series.sums.partial_sums[j]
                );
            }
        }
        s
    }

    pub fn doob_csv(&self) -> String {
        let mut s = String::from("seed,cell,k,Y,M,N\n");
        for d in &self.doob {
            let _ = writeln!(s, "{},{},{},{},{},{}", d.seed, d.cell, d.k, d.y, d.m, d.n);
        }
        s
    }

    pub fn summary(&self) -> String {
        let c = &self.constants;
        let cfg = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "convergence run");
        let _ = writeln!(s, "  master seed      {}", cfg.master_seed);
        let _ = writeln!(s, "  samples          {}", cfg.samples);
        let _ = writeln!(s, "  schedule         {:?}", cfg.schedule);
        let _ = writeln!(s, "  eps              {:?}", cfg.eps);
        let _ = writeln!(s, "  exact mean       {}", c.exact_mean);
        let _ = writeln!(s, "  sup norm         {}", c.sup_norm);
        if c.observation_only {
            let _ = writeln!(s, "  mode             observation only (no finite K, no bounds)");
        } else {
            if let Some(k) = &c.k {
                let elems: Vec<String> = k.iter().map(ToString::to_string).collect();
                let _ = writeln!(s, "  K                {{{}}}", elems.join(", "));
            }
            let _ = writeln!(s, "  r                {}", c.r);
            if let Some(m) = c.modulus {
                let _ = writeln!(s, "  coset modulus    {m}");
            }
            if let Some(d) = c.delta {
                let _ = writeln!(s, "  delta            {d}");
            }
            if let Some(b) = c.beta {
                let _ = writeln!(s, "  beta             {b}");
            }
            for (eps, g) in &c.gammas {
                let _ = writeln!(s, "  gamma(eps={eps})   paper {} derived {}", g.paper, g.derived);
            }
            let _ = writeln!(s, "  bound variant    {}", c.bound_variant.name());
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "averages");
        for a in &self.averages {
            let _ = writeln!(
                s,
                "  n={:<6} |F|={:<8} mean|avg-mean|={:.6} max={:.6}",
                a.n, a.size, a.mean_abs_deviation, a.max_abs_deviation
            );
        }
        if let (Some(first), Some(last)) = (self.averages.first(), self.averages.last()) {
            let _ = writeln!(
                s,
                "  mean deviation went from {:.6} to {:.6}",
                first.mean_abs_deviation, last.mean_abs_deviation
            );
        }
        if !c.observation_only {
            let _ = writeln!(s);
            let _ = writeln!(s, "tails");
            let mut dominated = true;
            for t in &self.tails {
                for bound in [t.bound_paper, t.bound_derived].into_iter().flatten() {
                    dominated &= t.empirical_tail <= bound;
                }
            }
            let _ = writeln!(
                s,
                "  empirical tails {} the configured bounds at every (n, eps)",
                if dominated { "stay below" } else { "EXCEED" }
            );
            let _ = writeln!(s);
            let _ = writeln!(s, "borel-cantelli");
            for series in &self.borel_cantelli {
                let flat = match series.flat_from_n() {
                    Some(n) => format!("increments below 1e-9 from n = {n}"),
                    None => format!(
                        "not flat within the schedule (last increment {})",
                        series.sums.last_increment()
                    ),
                };
                let _ = writeln!(s, "  eps={} {}: alpha={} {}", series.eps, series.variant, series.alpha, flat);
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "These finite-sample results are consistent with the almost-everywhere \
             convergence of the averages to the mean; a finite run cannot certify it."
        );
        s
    }

    /// Writes `tails.csv`, `averages.csv`, `borel_cantelli.csv`, `summary.txt`
    /// and, when Doob paths were recorded, `doob.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files = vec![
            ("tails.csv", self.tails_csv()),
            ("averages.csv", self.averages_csv()),
            ("borel_cantelli.csv", self.borel_cantelli_csv()),
            ("summary.txt", self.summary()),
        ];
        if !self.doob.is_empty() {
            files.push(("doob.csv", self.doob_csv()));
        }
        let mut written = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}
