//! Følner sequence generators and the two diagnostics run on them.
//!
//! [`check_summability`] evaluates the standing hypothesis that
//! `sum_n alpha^{|F_n|}` converges for every `alpha in [0, 1)`. Strictly
//! increasing sizes certify it; partial sums on an `alpha` grid are reported
//! alongside. [`temperedness_ratios`] computes the Shulman ratios
//! `|U_{k<n} F_k^{-1} F_n| / |F_n|` exactly on a finite prefix. It never
//! claims an asymptotic fact.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{FiniteSubset, GroupDescriptor};
use crate::numeric::CompensatedSum;
use crate::Rational;

/// Upper bound on the number of quotient elements enumerated for one `n`.
pub const TEMPEREDNESS_GUARD: u64 = 10_000_000;

/// `n -> s(n)` for jump sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SizeMap {
    /// `s(n) = n^p`.
    Power(u32),
    /// Explicit sizes `s(1), s(2), ...`; only defined on the listed prefix.
    Table(Vec<u64>),
}

impl SizeMap {
    pub fn size(&self, n: u64) -> Result<u64> {
        match self {
            SizeMap::Power(p) => n
                .checked_pow(*p)
                .ok_or_else(|| Error::invalid(format!("size n^{p} overflows at n = {n}"))),
            SizeMap::Table(t) => t
                .get((n as usize).wrapping_sub(1))
                .copied()
                .ok_or_else(|| Error::invalid(format!("size table has no entry for n = {n}"))),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SizeMap::Power(0) => Err(Error::invalid(
                "size map n^0 is constant; sizes must strictly increase",
            )),
            SizeMap::Power(_) => Ok(()),
            SizeMap::Table(t) => {
                if t.is_empty() || t[0] == 0 {
                    return Err(Error::invalid("size table must start with a positive size"));
                }
                if let Some(w) = t.windows(2).find(|w| w[1] <= w[0]) {
                    return Err(Error::invalid(format!(
                        "size map must strictly increase, found {} then {}",
                        w[0], w[1]
                    )));
                }
                Ok(())
            }
        }
    }
}

type Generator = dyn Fn(u64) -> Result<FiniteSubset> + Send + Sync;

/// User-supplied generator `n -> F_n`.
#[derive(Clone)]
pub struct CustomGenerator {
    group: GroupDescriptor,
    generate: Arc<Generator>,
}

impl fmt::Debug for CustomGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomGenerator")
            .field("group", &self.group)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum FolnerKind {
    /// `F_n = [0, n)` in `Z`.
    Interval,
    /// `F_n = [0, n)^d` in the `d`-dimensional lattice.
    Box(usize),
    /// `F_n = [b^n, b^n + s(n))` in `Z`.
    JumpShifted { base: u64, sizes: SizeMap },
    Custom(CustomGenerator),
}

#[derive(Debug, Clone)]
pub struct FolnerSequence {
    kind: FolnerKind,
    group: GroupDescriptor,
}

impl FolnerSequence {
    pub fn make(kind: FolnerKind) -> Result<Self> {
        let group = match &kind {
            FolnerKind::Interval => GroupDescriptor::integer_line(),
            FolnerKind::Box(d) => GroupDescriptor::lattice(*d)?,
            FolnerKind::JumpShifted { base, sizes } => {
                if *base < 2 {
                    return Err(Error::invalid(format!("jump base must be >= 2, got {base}")));
                }
                sizes.validate()?;
                GroupDescriptor::integer_line()
            }
            FolnerKind::Custom(c) => c.group,
        };
        Ok(FolnerSequence { kind, group })
    }

    pub fn interval() -> Self {
        FolnerSequence {
            kind: FolnerKind::Interval,
            group: GroupDescriptor::integer_line(),
        }
    }

    pub fn boxes(dim: usize) -> Result<Self> {
        Self::make(FolnerKind::Box(dim))
    }

    pub fn jump_shifted(base: u64, sizes: SizeMap) -> Result<Self> {
        Self::make(FolnerKind::JumpShifted { base, sizes })
    }

    /// The default non-tempered witness `[4^n, 4^n + n^2)`.
    pub fn default_jump() -> Self {
        Self::jump_shifted(4, SizeMap::Power(2)).expect("default jump parameters are valid")
    }

    pub fn custom<F>(group: GroupDescriptor, generate: F) -> Self
    where
        F: Fn(u64) -> Result<FiniteSubset> + Send + Sync + 'static,
    {
        FolnerSequence {
            kind: FolnerKind::Custom(CustomGenerator {
                group,
                generate: Arc::new(generate),
            }),
            group,
        }
    }

    pub fn kind(&self) -> &FolnerKind {
        &self.kind
    }

    pub fn group(&self) -> GroupDescriptor {
        self.group
    }

    /// `F_n` for `n >= 1`.
    pub fn set(&self, n: u64) -> Result<FiniteSubset> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        let set = match &self.kind {
            FolnerKind::Interval => FiniteSubset::interval(self.group, 0, n)?,
            FolnerKind::Box(_) => {
                let side = i64::try_from(n).map_err(|_| Error::invalid("box side too large"))?;
                FiniteSubset::cube(self.group, 0, side)?
            }
            FolnerKind::JumpShifted { base, sizes } => {
                let start = jump_start(*base, n)?;
                FiniteSubset::interval(self.group, start, sizes.size(n)?)?
            }
            FolnerKind::Custom(c) => (c.generate)(n)?,
        };
        if set.is_empty() {
            return Err(Error::EmptySet("Følner set"));
        }
        Ok(set)
    }

    /// `|F_n|`, computed without materialising the set for built-in kinds.
    pub fn size(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        match &self.kind {
            FolnerKind::Interval => Ok(n),
            FolnerKind::Box(d) => n
                .checked_pow(*d as u32)
                .ok_or_else(|| Error::invalid("box size overflows u64")),
            FolnerKind::JumpShifted { sizes, .. } => sizes.size(n),
            FolnerKind::Custom(_) => Ok(self.set(n)?.len() as u64),
        }
    }
}

fn jump_start(base: u64, n: u64) -> Result<i64> {
    let exp = u32::try_from(n).map_err(|_| Error::invalid("jump exponent too large"))?;
    let start = (base as i128)
        .checked_pow(exp)
        .filter(|&v| v <= crate::group::COORDINATE_LIMIT as i128)
        .ok_or(Error::CoordinateOverflow {
            value: i128::MAX,
        })?;
    Ok(start as i64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSeries {
    pub alpha: f64,
    /// `partial_sums[j] = sum_{n=1}^{j+1} alpha^{|F_n|}`.
    pub partial_sums: Vec<f64>,
}

impl AlphaSeries {
    /// Increment contributed by the last computed term.
    pub fn last_increment(&self) -> f64 {
        match self.partial_sums.as_slice() {
            [] => 0.0,
            [only] => *only,
            [.., a, b] => b - a,
        }
    }

    /// Smallest `n` from which every term in the computed range is `< tol`.
    pub fn flat_from(&self, tol: f64) -> Option<u64> {
        let mut first = None;
        let mut prev = 0.0;
        for (j, &s) in self.partial_sums.iter().enumerate() {
            let inc = s - prev;
            prev = s;
            if inc < tol {
                first.get_or_insert(j as u64 + 1);
            } else {
                first = None;
            }
        }
        first
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummabilityReport {
    pub sizes: Vec<u64>,
    /// The certified sufficient condition: `|F_n|` strictly increases.
    pub strictly_increasing: bool,
    pub partial_sums: Vec<AlphaSeries>,
}

impl SummabilityReport {
    /// `true` when the summability hypothesis is certified on the prefix.
    pub fn passes(&self) -> bool {
        self.strictly_increasing
    }

    pub fn series(&self, alpha: f64) -> Option<&AlphaSeries> {
        self.partial_sums.iter().find(|s| s.alpha == alpha)
    }
}

pub fn check_summability(
    seq: &FolnerSequence,
    n_max: u64,
    alphas: &[f64],
) -> Result<SummabilityReport> {
    if n_max < 2 {
        return Err(Error::invalid(format!("n_max must be >= 2, got {n_max}")));
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..1.0).contains(*a)) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1), got {a}")));
    }
    let sizes = (1..=n_max)
        .map(|n| seq.size(n))
        .collect::<Result<Vec<_>>>()?;
    let strictly_increasing = sizes.windows(2).all(|w| w[0] < w[1]);
    let partial_sums = alphas
        .iter()
        .map(|&alpha| {
            let mut acc = CompensatedSum::new();
            let partial_sums = sizes
                .iter()
                .map(|&s| {
                    acc.add(alpha.powf(s as f64));
                    acc.value()
                })
                .collect();
            AlphaSeries {
                alpha,
                partial_sums,
            }
        })
        .collect();
    Ok(SummabilityReport {
        sizes,
        strictly_increasing,
        partial_sums,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemperednessVerdict {
    /// Ratios stayed at most `C` up to `N`.
    BoundedUpTo { n: u64, max_ratio: Rational },
    /// Ratios were still growing at `N`.
    GrowingUpTo { n: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemperednessReport {
    /// `(n, |U_{k<n} F_k^{-1} F_n| / |F_n|)` for `n = 2..=n_max`.
    pub ratios: Vec<(u64, Rational)>,
    pub verdict: TemperednessVerdict,
}

impl TemperednessReport {
    pub fn ratio(&self, n: u64) -> Option<Rational> {
        self.ratios.iter().find(|(m, _)| *m == n).map(|(_, r)| *r)
    }

    /// Whether the ratios strictly increase over `lo..=hi`.
    pub fn strictly_increasing_on(&self, lo: u64, hi: u64) -> bool {
        let window: Vec<Rational> = self
            .ratios
            .iter()
            .filter(|(n, _)| (lo..=hi).contains(n))
            .map(|(_, r)| *r)
            .collect();
        window.len() as u64 == hi - lo + 1 && window.windows(2).all(|w| w[0] < w[1])
    }
}

/// `|U_{k<n} F_k^{-1} F_n|` for a single `n`, by exact enumeration.
pub fn shulman_union_size(seq: &FolnerSequence, n: u64) -> Result<(usize, usize)> {
    let target = seq.set(n)?;
    let earlier = (1..n).map(|k| seq.set(k)).collect::<Result<Vec<_>>>()?;
    let work: u64 = earlier.iter().map(|f| f.len() as u64 * target.len() as u64).sum();
    if work > TEMPEREDNESS_GUARD {
        return Err(Error::ResourceGuard {
            n,
            what: format!("{work} quotient elements exceed the limit {TEMPEREDNESS_GUARD}"),
        });
    }
    let mut all = Vec::with_capacity(work as usize);
    for f in &earlier {
        all.extend_from_slice(FiniteSubset::quotient_set(f, &target)?.elements());
    }
    let union = FiniteSubset::from_elements(seq.group(), all)?;
    Ok((union.len(), target.len()))
}

pub fn temperedness_ratios(seq: &FolnerSequence, n_max: u64) -> Result<TemperednessReport> {
    let mut ratios = Vec::new();
    for n in 2..=n_max {
        let (union, size) = shulman_union_size(seq, n)?;
        ratios.push((n, Rational::new(union as i64, size as i64)));
    }
    let verdict = classify_prefix(&ratios, n_max);
    Ok(TemperednessReport { ratios, verdict })
}

/// Growing: at least three ratios, strict increase over the second half of
/// the prefix, and the last ratio at least 1.5 times the one at `ceil(N/2)`.
fn classify_prefix(ratios: &[(u64, Rational)], n_max: u64) -> TemperednessVerdict {
    let max_ratio = ratios
        .iter()
        .map(|(_, r)| *r)
        .max()
        .unwrap_or_else(|| Rational::from_integer(0));
    let bounded = TemperednessVerdict::BoundedUpTo {
        n: n_max,
        max_ratio,
    };
    if ratios.len() < 3 {
        return bounded;
    }
    let mid = n_max.div_ceil(2).max(2);
    let half: Vec<Rational> = ratios
        .iter()
        .filter(|(n, _)| *n >= mid)
        .map(|(_, r)| *r)
        .collect();
    let increasing = half.windows(2).all(|w| w[0] < w[1]);
    let last = ratios.last().map(|(_, r)| *r).unwrap();
    let grew = last * Rational::from_integer(2) >= half[0] * Rational::from_integer(3);
    if increasing && grew {
        TemperednessVerdict::GrowingUpTo { n: n_max }
    } else {
        bounded
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupElement;

    fn scalars(set: &FiniteSubset) -> Vec<i64> {
        let mut v: Vec<i64> = set.iter().map(|g| g.coords()[0]).collect();
        v.sort();
        v
    }

    #[test]
    fn built_in_sets() {
        assert_eq!(scalars(&FolnerSequence::interval().set(3).unwrap()), vec![0, 1, 2]);
        let jump = FolnerSequence::default_jump();
        assert_eq!(scalars(&jump.set(2).unwrap()), vec![16, 17, 18, 19]);
        let b = FolnerSequence::boxes(2).unwrap().set(2).unwrap();
        assert_eq!(b.len(), 4);
        for c in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert!(b.contains(&GroupElement::new(&c).unwrap()));
        }
    }

    #[test]
    fn jump_reaches_n_twenty_and_guards_beyond_the_cap() {
        let jump = FolnerSequence::default_jump();
        let f20 = jump.set(20).unwrap();
        assert_eq!(f20.len(), 400);
        assert_eq!(scalars(&f20)[0], 1 << 40);
        assert!(matches!(jump.set(22), Err(Error::CoordinateOverflow { .. })));
    }

    #[test]
    fn rejects_non_increasing_size_map() {
        assert!(FolnerSequence::jump_shifted(4, SizeMap::Table(vec![1, 3, 3])).is_err());
        assert!(FolnerSequence::jump_shifted(4, SizeMap::Power(0)).is_err());
        assert!(FolnerSequence::jump_shifted(1, SizeMap::Power(2)).is_err());
    }

    #[test]
    fn interval_summability_with_geometric_oracle() {
        let r = check_summability(&FolnerSequence::interval(), 100, &[0.5]).unwrap();
        assert!(r.strictly_increasing);
        let s = r.series(0.5).unwrap();
        // sum_{n=1}^{100} 2^-n = 1 - 2^-100
        let oracle = 1.0 - 0.5f64.powi(100);
        assert!((s.partial_sums[99] - oracle).abs() < 1e-15);
        assert!(s.last_increment() < 1e-30);
    }

    #[test]
    fn constant_size_sequence_fails_summability() {
        let group = GroupDescriptor::integer_line();
        let seq = FolnerSequence::custom(group, move |_| FiniteSubset::interval(group, 0, 5));
        let r = check_summability(&seq, 30, &[0.9]).unwrap();
        assert!(!r.strictly_increasing);
        assert!(!r.passes());
        let term = 0.9f64.powi(5);
        for (j, s) in r.series(0.9).unwrap().partial_sums.iter().enumerate() {
            assert!((s - term * (j + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_increments_vanish_for_large_sizes() {
        let r = check_summability(&FolnerSequence::interval(), 60, &[0.5, 0.25]).unwrap();
        for s in &r.partial_sums {
            for j in 40..60 {
                assert!(s.partial_sums[j] - s.partial_sums[j - 1] < 1e-12);
            }
        }
    }

    #[test]
    fn summability_rejects_alpha_one() {
        assert!(check_summability(&FolnerSequence::interval(), 10, &[1.0]).is_err());
        assert!(check_summability(&FolnerSequence::interval(), 1, &[0.5]).is_err());
    }

    #[test]
    fn jump_sizes_strictly_increase() {
        let r = check_summability(&FolnerSequence::default_jump(), 20, &[0.9]).unwrap();
        assert!(r.strictly_increasing);
        assert_eq!(r.sizes[19], 400);
    }

    #[test]
    fn interval_ratios_match_closed_form() {
        let r = temperedness_ratios(&FolnerSequence::interval(), 20).unwrap();
        assert_eq!(r.ratio(3), Some(Rational::new(4, 3)));
        for (n, ratio) in &r.ratios {
            let n = *n as i64;
            assert_eq!(*ratio, Rational::new(2 * n - 2, n));
        }
        assert!(matches!(r.verdict, TemperednessVerdict::BoundedUpTo { .. }));
    }

    #[test]
    fn jump_ratios_grow() {
        let r = temperedness_ratios(&FolnerSequence::default_jump(), 8).unwrap();
        // values frozen from a direct set enumeration of the differences
        assert_eq!(r.ratio(3), Some(Rational::new(7, 3)));
        assert_eq!(r.ratio(4), Some(Rational::new(55, 16)));
        assert_eq!(r.ratio(8), Some(Rational::new(255, 32)));
        assert!(r.ratio(3).unwrap() > Rational::new(3, 2));
        assert!(r.strictly_increasing_on(3, 8));
        assert_eq!(r.verdict, TemperednessVerdict::GrowingUpTo { n: 8 });
    }

    #[test]
    fn n_one_gives_empty_prefix() {
        let r = temperedness_ratios(&FolnerSequence::interval(), 1).unwrap();
        assert!(r.ratios.is_empty());
    }

    #[test]
    fn guard_names_offending_n() {
        let seq = FolnerSequence::jump_shifted(4, SizeMap::Power(6)).unwrap();
        let err = temperedness_ratios(&seq, 10).unwrap_err();
        match err {
            Error::ResourceGuard { n, .. } => assert_eq!(n, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ratios_are_independent_of_enumeration_order() {
        // Same sets, different construction order: the union is a set.
        let group = GroupDescriptor::integer_line();
        let jump = FolnerSequence::default_jump();
        let reversed = FolnerSequence::custom(group, move |n| {
            let f = FolnerSequence::default_jump().set(n)?;
            let mut elems = f.elements().to_vec();
            elems.reverse();
            FiniteSubset::from_elements(group, elems)
        });
        assert_eq!(
            temperedness_ratios(&jump, 6).unwrap().ratios,
            temperedness_ratios(&reversed, 6).unwrap().ratios
        );
    }

    #[test]
    fn box_defects_non_increasing() {
        for d in 1..=2 {
            let seq = FolnerSequence::boxes(d).unwrap();
            for axis in 0..d {
                let mut gen = vec![0; d];
                gen[axis] = 1;
                let s = GroupElement::new(&gen).unwrap();
                let mut prev = Rational::from_integer(2);
                for n in 2..=64 {
                    let defect = seq.set(n).unwrap().folner_defect(&s).unwrap();
                    assert!(defect <= prev);
                    prev = defect;
                }
            }
        }
    }
}
