//! Ergodic sums, partition cells, the Doob decomposition and the tail bounds
//! that drive the Borel–Cantelli argument.
//!
//! Along a cell `H = {g_1, g_2, ...}` (enumeration order) the process
//! `Y_k = sum_{j <= k} f∘g_j` splits as `M_k + N_k` with `N_k` predictable.
//! When the windows `W g_j` are pairwise disjoint the conditional
//! expectations in `N` are the constant `∫ f dmu`, so `N_k = k ∫ f dmu`.

use rayon::prelude::*;

use crate::density::Partition;
use crate::dynamics::{act, Observable, SystemPoint};
use crate::error::{Error, Result};
use crate::group::{FiniteSubset, GroupElement};
use crate::hash::{sample_seed, walk_bits};
use crate::numeric::CompensatedSum;

/// Tolerance on `min_cell >= beta |F_n|` when checking constants.
pub const CONSTANT_TOLERANCE: f64 = 1e-12;

/// Tail increments below this count as flat.
pub const FLATNESS_THRESHOLD: f64 = 1e-9;

/// `Y_H(x) = sum_{g in H} f(gx)`.
pub fn ergodic_sum(x: &SystemPoint<'_>, f: &Observable, h: &FiniteSubset) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for g in h {
        acc.add(f.eval(&act(g, x)?)?);
    }
    Ok(acc.value())
}

/// `Y_H(x) / |H|`.
pub fn ergodic_average(x: &SystemPoint<'_>, f: &Observable, h: &FiniteSubset) -> Result<f64> {
    if h.is_empty() {
        return Err(Error::EmptySet("averaging set"));
    }
    Ok(ergodic_sum(x, f, h)? / h.len() as f64)
}

/// `F_n` split into `H^(i) = F_n ∩ D_i`, `i = 0..=r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellDecomposition {
    pub cells: Vec<FiniteSubset>,
    pub total: usize,
}

impl CellDecomposition {
    pub fn sizes(&self) -> Vec<usize> {
        self.cells.iter().map(FiniteSubset::len).collect()
    }

    pub fn r(&self) -> usize {
        self.cells.len() - 1
    }

    /// `min_{i >= 1} |H^(i)|`.
    pub fn min_cell(&self) -> usize {
        self.cells[1..].iter().map(FiniteSubset::len).min().unwrap_or(0)
    }

    /// Empirical `beta_n = min_{i >= 1} |H^(i)| / |F_n|`.
    pub fn beta(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.min_cell() as f64 / self.total as f64
    }

    /// `|H^(0)|`, the mass of the exceptional class inside `F_n`.
    pub fn d0_size(&self) -> usize {
        self.cells[0].len()
    }
}

pub fn split_cells(f_n: &FiniteSubset, p: &Partition) -> Result<CellDecomposition> {
    if f_n.group() != p.group() {
        return Err(Error::DimensionMismatch {
            expected: p.group().dim(),
            found: f_n.group().dim(),
        });
    }
    let mut members: Vec<Vec<GroupElement>> = vec![Vec::new(); p.r() + 1];
    for g in f_n {
        let i = p.classify(g);
        let slot = members
            .get_mut(i)
            .ok_or_else(|| Error::invalid(format!("classifier returned {i} for {g}, above r = {}", p.r())))?;
        slot.push(*g);
    }
    let cells = members
        .into_iter()
        .map(|m| FiniteSubset::from_elements(f_n.group(), m))
        .collect::<Result<Vec<_>>>()?;
    Ok(CellDecomposition {
        cells,
        total: f_n.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoobMode {
    /// The windows `W g`, `g` in the cell, are pairwise disjoint, so every
    /// conditional expectation equals `∫ f dmu`.
    ExactIndependence,
}

/// `Y_k, M_k, N_k` for `k = 0..=|H|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoobPath {
    pub y: Vec<f64>,
    pub m: Vec<f64>,
    pub n: Vec<f64>,
}

impl DoobPath {
    pub fn len(&self) -> usize {
        self.y.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_increment(&self) -> f64 {
        self.m.windows(2).fold(0.0, |acc, w| acc.max((w[1] - w[0]).abs()))
    }
}

/// Checks that `W g ∩ W h = ∅` for distinct `g, h` in the cell, that is
/// `h g^{-1} ∉ W^{-1} W`.
pub fn check_disjoint_windows(f: &Observable, cell: &FiniteSubset) -> Result<()> {
    let window = f
        .window()
        .ok_or_else(|| Error::NoFiniteWindow("exact independence needs a cylinder observable".into()))?;
    let k = FiniteSubset::quotient_set(window, window)?;
    for g in cell {
        for d in &k {
            if d.is_identity() {
                continue;
            }
            let h = match d.compose(g) {
                Ok(h) => h,
                Err(Error::CoordinateOverflow { .. }) => continue,
                Err(e) => return Err(e),
            };
            if cell.contains(&h) {
                let (first, second) = if cell.group().enumeration_cmp(g, &h).is_lt() {
                    (*g, h)
                } else {
                    (h, *g)
                };
                return Err(Error::OverlappingWindows { first, second });
            }
        }
    }
    Ok(())
}

pub fn doob_decompose(
    x: &SystemPoint<'_>,
    f: &Observable,
    cell: &FiniteSubset,
    mode: DoobMode,
) -> Result<DoobPath> {
    match mode {
        DoobMode::ExactIndependence => check_disjoint_windows(f, cell)?,
    }
    doob_path_unchecked(x, f, cell)
}

/// The decomposition assuming the disjointness precondition already holds.
pub(crate) fn doob_path_unchecked(x: &SystemPoint<'_>, f: &Observable, cell: &FiniteSubset) -> Result<DoobPath> {
    let mean = f.exact_mean();
    let mut y = Vec::with_capacity(cell.len() + 1);
    let mut m = Vec::with_capacity(cell.len() + 1);
    let mut n = Vec::with_capacity(cell.len() + 1);
    y.push(0.0);
    m.push(0.0);
    n.push(0.0);
    let mut acc = CompensatedSum::new();
    for (k, g) in cell.iter().enumerate() {
        acc.add(f.eval(&act(g, x)?)?);
        let yk = acc.value();
        let nk = (k + 1) as f64 * mean;
        y.push(yk);
        n.push(nk);
        m.push(yk - nk);
    }
    Ok(DoobPath { y, m, n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probability {
    pub raw: f64,
    /// `min(raw, 1)`.
    pub capped: f64,
}

impl Probability {
    fn new(raw: f64) -> Self {
        Probability {
            raw,
            capped: raw.min(1.0),
        }
    }
}

/// Azuma–Hoeffding: `P(|M_n| >= eps) <= 2 exp(-eps^2 / (2 sum d_k^2))`.
pub fn azuma_tail_bound(eps_abs: f64, d: &[f64]) -> Result<Probability> {
    if eps_abs.is_nan() || eps_abs < 0.0 {
        return Err(Error::invalid(format!("deviation must be nonnegative, got {eps_abs}")));
    }
    if d.is_empty() || d.iter().any(|&dk| !(dk > 0.0 && dk.is_finite())) {
        return Err(Error::invalid("increment bounds must be positive and finite"));
    }
    let var: f64 = d.iter().map(|dk| dk * dk).sum();
    Ok(Probability::new(2.0 * (-eps_abs * eps_abs / (2.0 * var)).exp()))
}

/// Azuma bound for `n` increments all bounded by `d`.
pub fn azuma_uniform(eps_abs: f64, d: f64, n: usize) -> Result<Probability> {
    azuma_tail_bound(eps_abs, &vec![d; n])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaConstants {
    /// `exp(-eps^2 / (8 ||f||^2))`.
    pub paper: f64,
    /// `exp(-eps^2 / (288 ||f||^2))`: deviation `eps |H| / 6` with `d_k = 2 ||f||`.
    pub derived: f64,
}

pub fn gamma_constants(eps: f64, sup_norm: f64) -> Result<GammaConstants> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if !(sup_norm > 0.0 && sup_norm.is_finite()) {
        return Err(Error::invalid(format!("sup norm must be positive, got {sup_norm}")));
    }
    let s2 = sup_norm * sup_norm;
    Ok(GammaConstants {
        paper: (-eps * eps / (8.0 * s2)).exp(),
        derived: (-eps * eps / (288.0 * s2)).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeBound {
    /// `2 r gamma^{min_cell}`.
    pub per_n: f64,
    /// `2 r (gamma^beta)^{|F_n|}`.
    pub via_alpha: f64,
}

pub fn composite_tail_bound(
    r: usize,
    gamma: f64,
    min_cell: usize,
    beta: f64,
    size: usize,
) -> Result<CompositeBound> {
    if r == 0 {
        return Err(Error::invalid("r must be at least 1"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid(format!("beta must lie in (0, 1], got {beta}")));
    }
    if (min_cell as f64) < beta * size as f64 - CONSTANT_TOLERANCE * size.max(1) as f64 {
        return Err(Error::InconsistentConstants(format!(
            "min cell {min_cell} < beta {beta} * |F_n| {size}"
        )));
    }
    let two_r = 2.0 * r as f64;
    Ok(CompositeBound {
        per_n: two_r * gamma.powf(min_cell as f64),
        via_alpha: two_r * gamma.powf(beta).powf(size as f64),
    })
}

/// Empirical tail at `(n, eps)` next to the composite bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailComparison {
    pub n: u64,
    pub eps: f64,
    pub empirical_tail: f64,
    /// `2 r gamma^{min_cell}` per variant, uncapped; `None` in observation-only runs.
    pub bound_paper: Option<f64>,
    pub bound_derived: Option<f64>,
    pub r: usize,
    pub gamma: Option<GammaConstants>,
    pub beta: f64,
    pub min_cell: usize,
}

/// `2 r gamma^{min_cell}` for an observed cell decomposition. Empty cells
/// make the bound the vacuous `2 r`.
pub fn cell_tail_bound(cells: &CellDecomposition, gamma: f64) -> Result<CompositeBound> {
    let r = cells.r();
    if cells.min_cell() == 0 {
        let two_r = 2.0 * r as f64;
        return Ok(CompositeBound {
            per_n: two_r,
            via_alpha: two_r,
        });
    }
    composite_tail_bound(r, gamma, cells.min_cell(), cells.beta(), cells.total)
}

/// Fraction of samples with `|s - mean| > eps`, strictly.
pub fn empirical_tail(samples: &[f64], mean: f64, eps: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySet("samples"));
    }
    let hits = samples.iter().filter(|s| (*s - mean).abs() > eps).count();
    Ok(hits as f64 / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BorelCantelli {
    pub partial_sums: Vec<f64>,
    /// First index from which every later term is below the flatness threshold.
    pub flat_from: Option<usize>,
}

impl BorelCantelli {
    pub fn flattens(&self) -> bool {
        self.flat_from.is_some()
    }

    pub fn last_increment(&self) -> f64 {
        match self.partial_sums.as_slice() {
            [] => 0.0,
            [only] => *only,
            [.., a, b] => b - a,
        }
    }
}

pub fn borel_cantelli_partial_sums(bounds: &[f64]) -> Result<BorelCantelli> {
    if let Some(b) = bounds.iter().find(|b| b.is_nan() || **b < 0.0) {
        return Err(Error::invalid(format!("bounds must be nonnegative, got {b}")));
    }
    let mut acc = CompensatedSum::new();
    let partial_sums = bounds
        .iter()
        .map(|&b| {
            acc.add(b);
            acc.value()
        })
        .collect();
    let flat_from = match bounds.iter().rposition(|&b| b >= FLATNESS_THRESHOLD) {
        None if bounds.is_empty() => None,
        None => Some(0),
        Some(last) if last + 1 < bounds.len() => Some(last + 1),
        Some(_) => None,
    };
    Ok(BorelCantelli {
        partial_sums,
        flat_from,
    })
}

/// Symmetric `±1` walk of `steps` steps, a martingale with `d_k = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkSpec {
    pub steps: u64,
}

impl WalkSpec {
    /// `M_n` for one trial.
    pub fn endpoint(&self, trial_seed: u64) -> i64 {
        let full = self.steps / 64;
        let mut ups = 0u64;
        for w in 0..full {
            ups += walk_bits(trial_seed, w).count_ones() as u64;
        }
        let rest = self.steps % 64;
        if rest > 0 {
            ups += (walk_bits(trial_seed, full) & ((1u64 << rest) - 1)).count_ones() as u64;
        }
        2 * ups as i64 - self.steps as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnessRow {
    pub eps: f64,
    pub empirical: f64,
    pub bound: Probability,
}

/// Empirical `P(|M_n| > eps)` over `trials` walks against the Azuma bound.
pub fn azuma_harness(walk: WalkSpec, trials: u64, eps_grid: &[f64], master_seed: u64) -> Result<Vec<HarnessRow>> {
    if walk.steps == 0 {
        return Err(Error::invalid("walk needs at least one step"));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let endpoints: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|i| walk.endpoint(sample_seed(master_seed, i)).unsigned_abs())
        .collect();
    eps_grid
        .iter()
        .map(|&eps| {
            let hits = endpoints.iter().filter(|&&m| m as f64 > eps).count();
            Ok(HarnessRow {
                eps,
                empirical: hits as f64 / trials as f64,
                bound: azuma_uniform(eps, 1.0, walk.steps as usize)?,
            })
        })
        .collect()
}
