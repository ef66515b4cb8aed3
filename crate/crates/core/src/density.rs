//! Banach densities and K-disjoint partitions of lattices.
//!
//! For a finite `F` the translate densities are
//! `d_F(S) = inf_g |S ∩ Fg| / |F|` and `D_F(S) = sup_g |S ∩ Fg| / |F|`.
//! When `S` is periodic the extremum over one period of translates is exact.
//! Otherwise the extremum over a finite window of translates is reported as a
//! one-sided bound.
//!
//! [`build_partition`] realises a partition `D_0, D_1, ..., D_r` with
//! `D_0 = ∅` and classes the cosets of `(mZ)^d`, where `m` is the smallest
//! modulus such that no nonzero vector of `(mZ)^d` lies in `K^{-1}K`. Two
//! distinct elements of one coset then differ by a vector outside `K^{-1}K`,
//! which is exactly `Kg ∩ Kh = ∅`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::folner::FolnerSequence;
use crate::group::{FiniteSubset, GroupDescriptor, GroupElement, MAX_DIM};
use crate::Rational;

/// Largest `|K|^2` enumerated when forming `K^{-1}K`.
pub const PARTITION_GUARD: usize = 10_000_000;
/// Largest number of coset classes built.
pub const MAX_CLASSES: usize = 1_000_000;
/// Most violating pairs listed in a report (all are counted).
pub const MAX_LISTED_VIOLATIONS: usize = 64;

type Membership = dyn Fn(&GroupElement) -> bool + Send + Sync;
type Classifier = dyn Fn(&GroupElement) -> usize + Send + Sync;

/// A subset `S` of the group given by its membership function.
#[derive(Clone)]
pub struct SetPredicate {
    group: GroupDescriptor,
    membership: Arc<Membership>,
    /// `S` is invariant under `g -> g + period[i] e_i` for every axis `i`.
    period: Option<Vec<i64>>,
}

impl fmt::Debug for SetPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetPredicate")
            .field("group", &self.group)
            .field("period", &self.period)
            .finish_non_exhaustive()
    }
}

impl SetPredicate {
    pub fn new<F>(group: GroupDescriptor, membership: F) -> Self
    where
        F: Fn(&GroupElement) -> bool + Send + Sync + 'static,
    {
        SetPredicate {
            group,
            membership: Arc::new(membership),
            period: None,
        }
    }

    /// Declares the axis periods. The caller vouches that `S` really is periodic.
    pub fn with_period(mut self, period: Vec<i64>) -> Result<Self> {
        if period.len() != self.group.dim() || period.iter().any(|&p| p < 1) {
            return Err(Error::invalid(format!(
                "period must list {} positive axis periods",
                self.group.dim()
            )));
        }
        self.period = Some(period);
        Ok(self)
    }

    /// Drops any periodicity hint, forcing window approximation.
    pub fn aperiodic(mut self) -> Self {
        self.period = None;
        self
    }

    pub fn whole(group: GroupDescriptor) -> Self {
        let d = group.dim();
        SetPredicate::new(group, |_| true)
            .with_period(vec![1; d])
            .expect("unit period is valid")
    }

    /// `{g : g_0 mod modulus ∈ residues}` in a one-dimensional group.
    pub fn residues(group: GroupDescriptor, modulus: i64, residues: &[i64]) -> Result<Self> {
        if group.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: group.dim(),
            });
        }
        if modulus < 1 {
            return Err(Error::invalid("modulus must be positive"));
        }
        let mut keep: Vec<i64> = residues.iter().map(|r| r.rem_euclid(modulus)).collect();
        keep.sort_unstable();
        keep.dedup();
        SetPredicate::new(group, move |g| {
            keep.binary_search(&g.coords()[0].rem_euclid(modulus)).is_ok()
        })
        .with_period(vec![modulus])
    }

    pub fn singleton(group: GroupDescriptor, point: GroupElement) -> Self {
        SetPredicate::new(group, move |g| *g == point)
    }

    pub fn group(&self) -> GroupDescriptor {
        self.group
    }

    pub fn period(&self) -> Option<&[i64]> {
        self.period.as_deref()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        (self.membership)(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityMode {
    Exact,
    /// Extremum over a finite window of translates; see [`DensityValue`].
    WindowApprox,
}

/// A translate density. In exact mode `lo = estimate = hi`. In window mode
/// the computed extremum is one endpoint of the interval known to contain
/// the true value, and the other endpoint is the trivial bound 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityValue {
    pub estimate: Rational,
    pub lo: Rational,
    pub hi: Rational,
    pub mode: DensityMode,
}

impl DensityValue {
    fn exact(v: Rational) -> Self {
        DensityValue {
            estimate: v,
            lo: v,
            hi: v,
            mode: DensityMode::Exact,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.mode == DensityMode::Exact
    }

    pub fn as_f64(&self) -> f64 {
        self.estimate.to_f64().unwrap_or(f64::NAN)
    }
}

/// All translations in `[lo_i, hi_i)` per axis.
fn box_translations(dim: usize, lo: &[i64], hi: &[i64]) -> Vec<GroupElement> {
    let mut out = Vec::new();
    let mut cur = [0i64; MAX_DIM];
    cur[..dim].copy_from_slice(&lo[..dim]);
    if (0..dim).any(|i| lo[i] >= hi[i]) {
        return out;
    }
    loop {
        out.push(GroupElement::new(&cur[..dim]).expect("window within coordinate range"));
        let mut axis = 0;
        loop {
            if axis == dim {
                return out;
            }
            cur[axis] += 1;
            if cur[axis] < hi[axis] {
                break;
            }
            cur[axis] = lo[axis];
            axis += 1;
        }
    }
}

/// The translations over which the extremum is taken, and whether it is exact.
fn translation_domain(s: &SetPredicate, window: i64) -> (Vec<GroupElement>, DensityMode) {
    let d = s.group.dim();
    match &s.period {
        Some(p) => (box_translations(d, &vec![0; d], p), DensityMode::Exact),
        None => (
            box_translations(d, &vec![-window; d], &vec![window + 1; d]),
            DensityMode::WindowApprox,
        ),
    }
}

fn translate_counts(s: &SetPredicate, f: &FiniteSubset, window: i64) -> Result<(Vec<i64>, DensityMode)> {
    if f.is_empty() {
        return Err(Error::EmptySet("density window F"));
    }
    s.group.check(&f.elements()[0])?;
    let (shifts, mode) = translation_domain(s, window);
    let counts = shifts
        .iter()
        .map(|g| {
            f.iter()
                .map(|x| x.compose(g))
                .try_fold(0i64, |acc, y| Ok::<_, Error>(acc + s.contains(&y?) as i64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((counts, mode))
}

/// `sup_g |S ∩ Fg| / |F|`.
pub fn upper_density_on(s: &SetPredicate, f: &FiniteSubset, window: i64) -> Result<DensityValue> {
    let (counts, mode) = translate_counts(s, f, window)?;
    let best = Rational::new(*counts.iter().max().unwrap_or(&0), f.len() as i64);
    Ok(match mode {
        DensityMode::Exact => DensityValue::exact(best),
        DensityMode::WindowApprox => DensityValue {
            estimate: best,
            lo: best,
            hi: Rational::from_integer(1),
            mode,
        },
    })
}

/// `inf_g |S ∩ Fg| / |F|`.
pub fn lower_density_on(s: &SetPredicate, f: &FiniteSubset, window: i64) -> Result<DensityValue> {
    let (counts, mode) = translate_counts(s, f, window)?;
    let worst = Rational::new(*counts.iter().min().unwrap_or(&0), f.len() as i64);
    Ok(match mode {
        DensityMode::Exact => DensityValue::exact(worst),
        DensityMode::WindowApprox => DensityValue {
            estimate: worst,
            lo: Rational::from_integer(0),
            hi: worst,
            mode,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityPair {
    pub n: u64,
    pub lower: DensityValue,
    pub upper: DensityValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensitySeries {
    pub per_n: Vec<DensityPair>,
}

impl DensitySeries {
    /// The values at the largest computed `n`, used as the limit estimate.
    pub fn limit(&self) -> (DensityValue, DensityValue) {
        let last = self.per_n.last().expect("series has at least one term");
        (last.lower, last.upper)
    }
}

/// Per-`n` lower and upper translate densities along a Følner sequence.
pub fn banach_densities(
    s: &SetPredicate,
    seq: &FolnerSequence,
    n_max: u64,
    window: i64,
) -> Result<DensitySeries> {
    if n_max < 1 {
        return Err(Error::invalid("n_max must be >= 1"));
    }
    let per_n = (1..=n_max)
        .map(|n| {
            let f = seq.set(n)?;
            Ok(DensityPair {
                n,
                lower: lower_density_on(s, &f, window)?,
                upper: upper_density_on(s, &f, window)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensitySeries { per_n })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionConstruction {
    LatticeCosets { modulus: i64 },
    Trivial,
    /// Caller-supplied classifier, used for adversarial verification.
    Custom,
}

/// Classifier `g -> {0, 1, ..., r}` together with the set `K` it separates.
#[derive(Clone)]
pub struct Partition {
    group: GroupDescriptor,
    r: usize,
    k: FiniteSubset,
    construction: PartitionConstruction,
    classify: Arc<Classifier>,
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Partition")
            .field("r", &self.r)
            .field("k", &self.k)
            .field("construction", &self.construction)
            .finish_non_exhaustive()
    }
}

impl Partition {
    /// `r = 1`, `D_1 = G`, `K = {e}`.
    pub fn trivial(group: GroupDescriptor) -> Self {
        Partition {
            group,
            r: 1,
            k: FiniteSubset::singleton(group, group.identity()).expect("identity matches group"),
            construction: PartitionConstruction::Trivial,
            classify: Arc::new(|_| 1),
        }
    }

    pub fn custom<F>(k: FiniteSubset, r: usize, classify: F) -> Self
    where
        F: Fn(&GroupElement) -> usize + Send + Sync + 'static,
    {
        Partition {
            group: k.group(),
            r,
            k,
            construction: PartitionConstruction::Custom,
            classify: Arc::new(classify),
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn k(&self) -> &FiniteSubset {
        &self.k
    }

    pub fn group(&self) -> GroupDescriptor {
        self.group
    }

    pub fn construction(&self) -> &PartitionConstruction {
        &self.construction
    }

    pub fn classify(&self, g: &GroupElement) -> usize {
        (self.classify)(g)
    }

    /// The class `D_i` as a set predicate, periodic when the construction is.
    pub fn class(&self, i: usize) -> SetPredicate {
        let classify = Arc::clone(&self.classify);
        let pred = SetPredicate::new(self.group, move |g| classify(g) == i);
        let d = self.group.dim();
        match self.construction {
            PartitionConstruction::LatticeCosets { modulus } => pred
                .with_period(vec![modulus; d])
                .expect("coset modulus is positive"),
            PartitionConstruction::Trivial => pred.with_period(vec![1; d]).expect("unit period"),
            PartitionConstruction::Custom => pred,
        }
    }
}

/// Coset partition of `Z^d` separating right translates of `K`. `D_0 = ∅`.
pub fn build_partition(k: &FiniteSubset, delta: f64, group: GroupDescriptor) -> Result<Partition> {
    if k.is_empty() {
        return Err(Error::EmptySet("partition set K"));
    }
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if k.group() != group {
        return Err(Error::DimensionMismatch {
            expected: group.dim(),
            found: k.group().dim(),
        });
    }
    if k.len().saturating_mul(k.len()) > PARTITION_GUARD {
        return Err(Error::ResourceGuard {
            n: k.len() as u64,
            what: format!("|K|^2 exceeds {PARTITION_GUARD}"),
        });
    }
    let diffs = FiniteSubset::quotient_set(k, k)?;
    let modulus = (1i64..)
        .find(|&m| {
            !diffs
                .iter()
                .any(|v| !v.is_identity() && v.coords().iter().all(|c| c % m == 0))
        })
        .expect("modulus beyond the extent of K^{-1}K always works");
    let d = group.dim();
    let r = (modulus as u128).pow(d as u32);
    if r > MAX_CLASSES as u128 {
        return Err(Error::ResourceGuard {
            n: modulus as u64,
            what: format!("{r} coset classes exceed the limit {MAX_CLASSES}"),
        });
    }
    Ok(Partition {
        group,
        r: r as usize,
        k: k.clone(),
        construction: PartitionConstruction::LatticeCosets { modulus },
        classify: Arc::new(move |g| {
            1 + g
                .coords()
                .iter()
                .fold(0usize, |acc, c| acc * modulus as usize + c.rem_euclid(modulus) as usize)
        }),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionReport {
    pub r: usize,
    pub window: i64,
    pub n_probe: u64,
    /// `D_F(D_0)` at `F = F_{n_probe}`.
    pub d0_upper: DensityValue,
    /// `d_F(D_i)` for `i = 1..=r` at `F = F_{n_probe}`.
    pub class_lower: Vec<DensityValue>,
    pub condition1: bool,
    pub condition2: bool,
    /// Total number of same-class pairs `(g, h)` in the window with `Kg ∩ Kh ≠ ∅`.
    pub violation_count: usize,
    /// The first violating pairs, each ordered by enumeration.
    pub violations: Vec<(GroupElement, GroupElement)>,
}

impl PartitionReport {
    pub fn condition3(&self) -> bool {
        self.violation_count == 0
    }

    pub fn passes(&self) -> bool {
        self.condition1 && self.condition2 && self.condition3()
    }

    /// True when every density in the report is exact.
    pub fn exact(&self) -> bool {
        self.d0_upper.is_exact() && self.class_lower.iter().all(DensityValue::is_exact)
    }
}

/// Checks the three partition conditions: `D_0` sparse, every other class
/// of positive lower density, and K-disjointness inside the class.
pub fn verify_partition(
    p: &Partition,
    k: &FiniteSubset,
    seq: &FolnerSequence,
    delta: f64,
    window: i64,
    n_probe: u64,
) -> Result<PartitionReport> {
    let group = p.group();
    if seq.group() != group || k.group() != group {
        return Err(Error::invalid("partition, K and Følner sequence must share a group"));
    }
    if window < 0 {
        return Err(Error::invalid("window radius must be nonnegative"));
    }
    let d = group.dim();
    let diffs = FiniteSubset::quotient_set(k, k)?;
    let mut points = box_translations(d, &vec![-window; d], &vec![window + 1; d]);
    points.sort_by(|a, b| group.enumeration_cmp(a, b));
    let mut violation_count = 0;
    let mut violations = Vec::new();
    // Kg ∩ Kh ≠ ∅ iff h - g ∈ K^{-1}K.
    for g in &points {
        let class = p.classify(g);
        if class == 0 {
            continue;
        }
        for v in diffs.iter().filter(|v| !v.is_identity()) {
            let h = g.compose(v)?;
            if h.max_norm() > window || group.enumeration_cmp(g, &h) != Ordering::Less {
                continue;
            }
            if p.classify(&h) == class {
                violation_count += 1;
                if violations.len() < MAX_LISTED_VIOLATIONS {
                    violations.push((*g, h));
                }
            }
        }
    }

    let f = seq.set(n_probe)?;
    let d0_upper = upper_density_on(&p.class(0), &f, window)?;
    let class_lower = (1..=p.r())
        .map(|i| lower_density_on(&p.class(i), &f, window))
        .collect::<Result<Vec<_>>>()?;
    let condition1 = d0_upper.as_f64() <= delta;
    let condition2 = class_lower.iter().all(|v| v.estimate > Rational::from_integer(0));
    Ok(PartitionReport {
        r: p.r(),
        window,
        n_probe,
        d0_upper,
        class_lower,
        condition1,
        condition2,
        violation_count,
        violations,
    })
}

/// One row of a per-class count table: `|F_n ∩ D_class|` and its share of `|F_n|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCount {
    pub n: u64,
    pub class_id: usize,
    pub count: u64,
    pub density: Rational,
}

/// Counts `F_n` against `classes` labels given by `classify`, for `n = 1..=n_max`.
pub fn class_counts<F>(seq: &FolnerSequence, n_max: u64, classes: usize, classify: F) -> Result<Vec<ClassCount>>
where
    F: Fn(&GroupElement) -> usize,
{
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let f = seq.set(n)?;
        let mut counts = vec![0u64; classes];
        for g in f.iter() {
            let c = classify(g);
            if c < classes {
                counts[c] += 1;
            }
        }
        let size = f.len() as i64;
        for (class_id, &count) in counts.iter().enumerate() {
            rows.push(ClassCount {
                n,
                class_id,
                count,
                density: Rational::new(count as i64, size),
            });
        }
    }
    Ok(rows)
}

/// CSV with header `n,class_id,count,density_num,density_den`.
pub fn class_counts_csv(rows: &[ClassCount]) -> String {
    let mut out = String::from("n,class_id,count,density_num,density_den\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.n, r.class_id, r.count, r.density.numer(), r.density.denom()));
    }
    out
}
