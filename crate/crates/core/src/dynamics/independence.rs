//! ε-independence of an observable from `σ(f∘g : g ∉ K)`.
//!
//! The supremum over every positive-measure `B` of the sub-σ-algebra is not
//! computable, so the tester ranges over a generating family:
//!
//! * Bernoulli: cylinder events `{x_C = p}` on coordinate sets
//!   `C ⊆ U_{g ∉ K} W g` (over the probe window) with `|C| <= max_coords`;
//! * rotation: level sets `{f∘g = 0}`, `{f∘g = 1}` for `g` in the probe
//!   window and their pairwise intersections.
//!
//! Conditional means are computed exactly: rational product-measure
//! arithmetic for Bernoulli, linear-in-theta arc lengths for rotations.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::circle::ArcSet;
use super::{sample_point, Observable, ObservableKind, SystemDescriptor};
use crate::error::{Error, Result};
use crate::group::{FiniteSubset, GroupElement};
use crate::hash::sample_seed;
use crate::numeric::CompensatedSum;

/// Cylinder probes use a bitmask over the relevant window coordinates.
const MAX_RELEVANT_COORDS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditioningSpec {
    /// Translations `g` with `|g|_inf <= probe_radius` are considered.
    pub probe_radius: i64,
    /// `c_max`: largest cylinder coordinate set.
    pub max_coords: usize,
    /// Rotation only: 1 = single level sets, 2 = also pairwise intersections.
    pub max_depth: usize,
}

impl Default for ConditioningSpec {
    fn default() -> Self {
        ConditioningSpec {
            probe_radius: 24,
            max_coords: 3,
            max_depth: 2,
        }
    }
}

/// `{x : x(coords[j]) = symbols[j] for all j}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderEvent {
    pub coords: Vec<GroupElement>,
    pub symbols: Vec<usize>,
}

impl CylinderEvent {
    pub fn contains(&self, x: &super::SystemPoint<'_>) -> Result<bool> {
        for (c, &s) in self.coords.iter().zip(&self.symbols) {
            if x.symbol(c)? != s {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Display for CylinderEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coords.is_empty() {
            return write!(f, "X");
        }
        for (i, (c, s)) in self.coords.iter().zip(&self.symbols).enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            write!(f, "x[{c}]={s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConditioningEvent {
    Cylinder(CylinderEvent),
    /// Intersection of level sets `{f∘g = level}`.
    LevelSets {
        generators: Vec<(i64, bool)>,
        set: ArcSet,
    },
}

impl fmt::Display for ConditioningEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditioningEvent::Cylinder(c) => write!(f, "{c}"),
            ConditioningEvent::LevelSets { generators, .. } => {
                for (i, (g, level)) in generators.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    write!(f, "f.{g}={}", *level as u8)?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    /// The family generates the σ-algebra and the maximum is the true supremum.
    Exact,
    /// The maximum over the family only bounds the true supremum from below.
    LowerBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub eps: f64,
    pub max_deviation: f64,
    /// Exact rational value, Bernoulli only.
    pub exact_deviation: Option<BigRational>,
    pub witness: Option<ConditioningEvent>,
    pub passes: bool,
    pub exactness: Exactness,
    pub events_checked: usize,
}

fn to_big(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::invalid(format!("{x} is not finite")))
}

/// Exact `E[f | x_w = fixed_w for the fixed window positions]`.
fn conditional_mean(
    table: &[BigRational],
    probabilities: &[BigRational],
    fixed: &[Option<usize>],
) -> BigRational {
    let a = probabilities.len();
    let len = fixed.len();
    let mut acc = BigRational::zero();
    'tuples: for (idx, value) in table.iter().enumerate() {
        let mut weight = BigRational::from_integer(BigInt::from(1));
        let mut rest = idx;
        // digit j counted from the least significant end is window position len-1-j
        for j in 0..len {
            let digit = rest % a;
            rest /= a;
            match fixed[len - 1 - j] {
                Some(s) if s != digit => continue 'tuples,
                Some(_) => {}
                None => weight *= &probabilities[digit],
            }
        }
        acc += value * weight;
    }
    acc
}

struct ExactCylinder<'a> {
    window: &'a FiniteSubset,
    table: Vec<BigRational>,
    probabilities: Vec<BigRational>,
    mean: BigRational,
}

impl<'a> ExactCylinder<'a> {
    fn new(f: &'a Observable) -> Result<Self> {
        let ObservableKind::Cylinder {
            window,
            table,
            probabilities,
        } = f.kind()
        else {
            return Err(Error::invalid("exact cylinder arithmetic needs a cylinder observable"));
        };
        let table = table.iter().map(|&v| to_big(v)).collect::<Result<Vec<_>>>()?;
        let probabilities = probabilities.iter().map(|&p| to_big(p)).collect::<Result<Vec<_>>>()?;
        let mean = conditional_mean(&table, &probabilities, &vec![None; window.len()]);
        Ok(ExactCylinder {
            window,
            table,
            probabilities,
            mean,
        })
    }

    /// Signed `E[f | B] - E[f]`, or `None` when `mu(B) = 0`.
    fn deviation(&self, event: &CylinderEvent) -> Result<Option<BigRational>> {
        if event.coords.len() != event.symbols.len() {
            return Err(Error::invalid("cylinder event needs one symbol per coordinate"));
        }
        let a = self.probabilities.len();
        let mut fixed = vec![None; self.window.len()];
        let mut outside: Vec<(GroupElement, usize)> = Vec::new();
        for (c, &s) in event.coords.iter().zip(&event.symbols) {
            if s >= a || self.probabilities[s].is_zero() {
                return Ok(None);
            }
            match self.window.elements().iter().position(|w| w == c) {
                Some(pos) => match fixed[pos] {
                    Some(prev) if prev != s => return Ok(None),
                    _ => fixed[pos] = Some(s),
                },
                None => {
                    if outside.iter().any(|(o, t)| o == c && *t != s) {
                        return Ok(None);
                    }
                    outside.push((*c, s));
                }
            }
        }
        // Coordinates outside W are independent of f and drop out of E[f | B].
        Ok(Some(
            conditional_mean(&self.table, &self.probabilities, &fixed) - &self.mean,
        ))
    }
}

/// Signed `∫_B f dmu_B - ∫ f dmu` for a cylinder event under the product
/// measure, computed in exact rational arithmetic. `None` if `mu(B) = 0`.
pub fn cylinder_deviation(f: &Observable, event: &CylinderEvent) -> Result<Option<BigRational>> {
    ExactCylinder::new(f)?.deviation(event)
}

fn probe_shifts(k: &FiniteSubset, radius: i64) -> Result<Vec<GroupElement>> {
    if radius < 0 {
        return Err(Error::invalid("probe radius must be nonnegative"));
    }
    let probe = FiniteSubset::cube(k.group(), -radius, radius + 1)?;
    Ok(probe.iter().filter(|g| !k.contains(g)).copied().collect())
}

pub fn test_eps_independence(
    f: &Observable,
    k: &FiniteSubset,
    eps: f64,
    spec: &ConditioningSpec,
) -> Result<IndependenceReport> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    match f.kind() {
        ObservableKind::Cylinder { window, .. } => {
            if window.group() != k.group() {
                return Err(Error::DimensionMismatch {
                    expected: window.group().dim(),
                    found: k.group().dim(),
                });
            }
            cylinder_independence(f, window, k, eps, spec)
        }
        ObservableKind::Arc { start, end, theta } => {
            rotation_independence(f, *start, *end, *theta, k, eps, spec)
        }
    }
}

fn cylinder_independence(
    f: &Observable,
    window: &FiniteSubset,
    k: &FiniteSubset,
    eps: f64,
    spec: &ConditioningSpec,
) -> Result<IndependenceReport> {
    let exact = ExactCylinder::new(f)?;
    let mut reachable: HashSet<GroupElement> = HashSet::new();
    for g in probe_shifts(k, spec.probe_radius)? {
        for w in window {
            reachable.insert(w.compose(&g)?);
        }
    }
    // Only coordinates in W can move E[f | B]; the others factor out, so the
    // maximum over C equals the maximum over C ∩ W.
    let relevant: Vec<GroupElement> = window.iter().filter(|w| reachable.contains(w)).copied().collect();
    if relevant.len() > MAX_RELEVANT_COORDS {
        return Err(Error::ResourceGuard {
            n: relevant.len() as u64,
            what: "too many window coordinates to enumerate conditioning cylinders".into(),
        });
    }
    let a = exact.probabilities.len();
    let mut best = BigRational::zero();
    let mut witness = None;
    let mut checked = 0usize;
    for mask in 1u32..(1u32 << relevant.len()) {
        let size = mask.count_ones() as usize;
        if size > spec.max_coords {
            continue;
        }
        let coords: Vec<GroupElement> = (0..relevant.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| relevant[i])
            .collect();
        for pattern in 0..a.pow(size as u32) {
            let mut rest = pattern;
            let symbols: Vec<usize> = (0..size)
                .map(|_| {
                    let s = rest % a;
                    rest /= a;
                    s
                })
                .collect();
            let event = CylinderEvent {
                coords: coords.clone(),
                symbols,
            };
            let Some(dev) = exact.deviation(&event)? else {
                continue;
            };
            checked += 1;
            let dev = dev.abs();
            if dev > best {
                best = dev;
                witness = Some(ConditioningEvent::Cylinder(event));
            }
        }
    }
    let full = FiniteSubset::quotient_set(window, window)?;
    let exactness = if full.iter().all(|g| k.contains(g)) {
        Exactness::Exact
    } else {
        Exactness::LowerBound
    };
    let max_deviation = best.to_f64().unwrap_or(f64::INFINITY);
    Ok(IndependenceReport {
        eps,
        max_deviation,
        passes: max_deviation < eps,
        exact_deviation: Some(best),
        witness,
        exactness,
        events_checked: checked,
    })
}

/// `|mu(A ∩ B) / mu(B) - mu(A)|` for arc sets, `None` when `mu(B) = 0`.
pub(crate) fn arc_deviation(a: &ArcSet, b: &ArcSet, theta: f64) -> Option<f64> {
    let mb = b.measure();
    let mb_val = mb.value(theta);
    if mb.is_zero() || mb_val <= 1e-15 {
        return None;
    }
    let mab = a.intersect(b, theta).measure().value(theta);
    Some((mab / mb_val - a.measure().value(theta)).abs())
}

fn rotation_independence(
    f: &Observable,
    start: crate::Rational,
    end: crate::Rational,
    theta: f64,
    k: &FiniteSubset,
    eps: f64,
    spec: &ConditioningSpec,
) -> Result<IndependenceReport> {
    let _ = f;
    let a = ArcSet::rotated_arc(start, end, 0, theta);
    // {x : f(gx) = 1} = [start, end) - g theta
    let mut level_sets: Vec<(i64, bool, ArcSet)> = Vec::new();
    for g in probe_shifts(k, spec.probe_radius)? {
        let g = g.coords()[0];
        let hit = ArcSet::rotated_arc(start, end, -g, theta);
        let miss = hit.complement(theta);
        level_sets.push((g, true, hit));
        level_sets.push((g, false, miss));
    }
    let mut best = 0.0f64;
    let mut witness = None;
    let mut checked = 0usize;
    let mut consider = |generators: Vec<(i64, bool)>, set: ArcSet| {
        if let Some(dev) = arc_deviation(&a, &set, theta) {
            checked += 1;
            if dev > best {
                best = dev;
                witness = Some(ConditioningEvent::LevelSets { generators, set });
            }
        }
    };
    for (g, level, set) in &level_sets {
        consider(vec![(*g, *level)], set.clone());
    }
    if spec.max_depth >= 2 {
        for (i, (g1, l1, s1)) in level_sets.iter().enumerate() {
            for (g2, l2, s2) in &level_sets[i + 1..] {
                if g1 == g2 {
                    continue;
                }
                consider(vec![(*g1, *l1), (*g2, *l2)], s1.intersect(s2, theta));
            }
        }
    }
    Ok(IndependenceReport {
        eps,
        max_deviation: best,
        exact_deviation: None,
        passes: best < eps,
        witness,
        exactness: Exactness::LowerBound,
        events_checked: checked,
    })
}

/// Deviation of the specific level set `{f∘g = 1}` for a rotation arc observable.
pub fn rotation_level_set_deviation(f: &Observable, g: i64) -> Result<f64> {
    let ObservableKind::Arc { start, end, theta } = f.kind() else {
        return Err(Error::KindMismatch);
    };
    let a = ArcSet::rotated_arc(*start, *end, 0, *theta);
    let b = ArcSet::rotated_arc(*start, *end, -g, *theta);
    arc_deviation(&a, &b, *theta).ok_or_else(|| Error::invalid("level set has measure zero"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloDeviation {
    /// Estimated signed `∫_B f dmu_B - ∫ f dmu`.
    pub deviation: f64,
    /// Standard error of the conditional mean estimate.
    pub std_error: f64,
    pub hits: u64,
}

/// Sampling estimate of the conditional deviation for a cylinder event:
/// draws points, keeps those in `B`, and averages `f` over them.
pub fn monte_carlo_deviation(
    system: &SystemDescriptor,
    f: &Observable,
    event: &CylinderEvent,
    samples: u64,
    master_seed: u64,
) -> Result<MonteCarloDeviation> {
    let mut sum = CompensatedSum::new();
    let mut sum_sq = CompensatedSum::new();
    let mut hits = 0u64;
    for i in 0..samples {
        let x = sample_point(system, sample_seed(master_seed, i));
        if event.contains(&x)? {
            let v = f.eval(&x)?;
            hits += 1;
            sum.add(v);
            sum_sq.add(v * v);
        }
    }
    if hits == 0 {
        return Err(Error::invalid("no sample landed in the conditioning event"));
    }
    let n = hits as f64;
    let mean = sum.value() / n;
    let var = (sum_sq.value() / n - mean * mean).max(0.0);
    Ok(MonteCarloDeviation {
        deviation: mean - f.exact_mean(),
        std_error: (var / n).sqrt(),
        hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::independence_window;
    use crate::group::GroupDescriptor;
    use crate::Rational;

    fn z() -> GroupDescriptor {
        GroupDescriptor::integer_line()
    }

    fn e(c: &[i64]) -> GroupElement {
        GroupElement::new(c).unwrap()
    }

    fn k_of(values: &[i64]) -> FiniteSubset {
        FiniteSubset::from_scalars(z(), values).unwrap()
    }

    /// Brute force over every configuration of W ∪ C.
    fn brute_force_deviation(
        sys: &SystemDescriptor,
        f: &Observable,
        event: &CylinderEvent,
    ) -> Option<f64> {
        let m = sys.measure().unwrap();
        let window = f.window().unwrap();
        let mut coords: Vec<GroupElement> = window.elements().to_vec();
        for c in &event.coords {
            if !coords.contains(c) {
                coords.push(*c);
            }
        }
        let a = m.alphabet_size();
        let (mut num, mut den) = (0.0, 0.0);
        for cfg in 0..a.pow(coords.len() as u32) {
            let mut rest = cfg;
            let sym: Vec<usize> = (0..coords.len())
                .map(|_| {
                    let s = rest % a;
                    rest /= a;
                    s
                })
                .collect();
            let p: f64 = sym.iter().map(|&s| m.probabilities()[s]).product();
            let in_b = event
                .coords
                .iter()
                .zip(&event.symbols)
                .all(|(c, s)| sym[coords.iter().position(|x| x == c).unwrap()] == *s);
            if !in_b {
                continue;
            }
            let ObservableKind::Cylinder { table, .. } = f.kind() else { unreachable!() };
            let idx = (0..window.len()).fold(0, |acc, j| acc * a + sym[j]);
            num += p * table[idx];
            den += p;
        }
        (den > 0.0).then(|| num / den - f.exact_mean())
    }

    #[test]
    fn single_coordinate_is_exactly_independent() {
        let sys = SystemDescriptor::fair_coin(z());
        let f = Observable::symbol_indicator(&sys, 1).unwrap();
        let r = test_eps_independence(&f, &k_of(&[0]), 1e-9, &ConditioningSpec::default()).unwrap();
        assert_eq!(r.max_deviation, 0.0);
        assert!(r.exact_deviation.unwrap().is_zero());
        assert!(r.passes);
        assert_eq!(r.exactness, Exactness::Exact);
    }

    #[test]
    fn too_small_k_is_detected() {
        let sys = SystemDescriptor::fair_coin(z());
        let f = Observable::all_equal(&sys, k_of(&[0, 1]), 1).unwrap();
        let r = test_eps_independence(&f, &k_of(&[0]), 0.1, &ConditioningSpec::default()).unwrap();
        assert_eq!(r.exactness, Exactness::LowerBound);
        assert!(!r.passes);
        // conditioning on x_1 = 1 doubles mu(A) from 1/4 to 1/2; a two-coordinate
        // cylinder on {0, 1} gives the overall maximum 3/4
        let single = CylinderEvent {
            coords: vec![e(&[1])],
            symbols: vec![1],
        };
        let d = cylinder_deviation(&f, &single).unwrap().unwrap();
        assert_eq!(d, BigRational::new(1.into(), 4.into()));
        assert_eq!(r.max_deviation, 0.75);
    }

    #[test]
    fn exact_route_matches_brute_force() {
        let g2 = GroupDescriptor::lattice(2).unwrap();
        let sys = SystemDescriptor::bernoulli(g2, vec![0.0, 1.0, 3.0], vec![0.25, 0.5, 0.25]).unwrap();
        let w = FiniteSubset::from_elements(g2, [e(&[0, 0]), e(&[1, 0])]).unwrap();
        let table: Vec<f64> = (0..9).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let f = Observable::cylinder(&sys, w, table).unwrap();
        let events = [
            CylinderEvent { coords: vec![e(&[1, 0])], symbols: vec![2] },
            CylinderEvent { coords: vec![e(&[0, 0]), e(&[5, 5])], symbols: vec![0, 1] },
            CylinderEvent { coords: vec![e(&[0, 0]), e(&[1, 0])], symbols: vec![2, 1] },
            CylinderEvent { coords: vec![e(&[3, 0])], symbols: vec![1] },
        ];
        for ev in &events {
            let exact = cylinder_deviation(&f, ev).unwrap().unwrap().to_f64().unwrap();
            let brute = brute_force_deviation(&sys, &f, ev).unwrap();
            assert!((exact - brute).abs() < 1e-12, "{ev}: {exact} vs {brute}");
        }
        let contradictory = CylinderEvent {
            coords: vec![e(&[1, 0]), e(&[1, 0])],
            symbols: vec![0, 1],
        };
        assert!(cylinder_deviation(&f, &contradictory).unwrap().is_none());
    }

    #[test]
    fn full_window_gives_zero_and_enlarging_k_never_increases() {
        let sys = SystemDescriptor::bernoulli(z(), vec![0.0, 1.0], vec![0.3, 0.7]).unwrap();
        let w = k_of(&[0, 2, 3]);
        let table = vec![0.1, -0.4, 0.9, 0.0, 0.3, 0.25, -1.0, 0.6];
        let f = Observable::cylinder(&sys, w, table).unwrap();
        let full = independence_window(&f).unwrap();
        let spec = ConditioningSpec::default();
        let r = test_eps_independence(&f, &full, 1e-12, &spec).unwrap();
        assert!(r.exact_deviation.unwrap().is_zero());
        let mut prev = f64::INFINITY;
        let mut k = Vec::new();
        for &g in [-3i64, 0, 3, -2, 2, 1, -1].iter() {
            k.push(g);
            let dev = test_eps_independence(&f, &k_of(&k), 0.01, &spec).unwrap().max_deviation;
            assert!(dev <= prev);
            prev = dev;
        }
        assert_eq!(prev, 0.0);
    }

    #[test]
    fn rotation_witness_for_g_one() {
        let theta = std::f64::consts::SQRT_2 - 1.0;
        let sys = SystemDescriptor::rotation(theta).unwrap();
        let f = Observable::arc(&sys, Rational::new(0, 1), Rational::new(1, 2)).unwrap();
        let dev = rotation_level_set_deviation(&f, 1).unwrap();
        let expected = ((0.5 - theta) / 0.5 - 0.5f64).abs();
        assert!((dev - expected).abs() < 1e-12);
        assert!((dev - 0.3284).abs() < 1e-4);
        let r = test_eps_independence(&f, &k_of(&[0]), 0.1, &ConditioningSpec::default()).unwrap();
        assert!(!r.passes);
        assert!(r.max_deviation >= dev);
        assert_eq!(r.exactness, Exactness::LowerBound);
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let sys = SystemDescriptor::fair_coin(z());
        let f = Observable::all_equal(&sys, k_of(&[0, 1]), 1).unwrap();
        let ev = CylinderEvent {
            coords: vec![e(&[1])],
            symbols: vec![1],
        };
        let exact = cylinder_deviation(&f, &ev).unwrap().unwrap().to_f64().unwrap();
        let mc = monte_carlo_deviation(&sys, &f, &ev, 100_000, 17).unwrap();
        assert!((mc.deviation - exact).abs() <= 3.0 * mc.std_error, "{mc:?} vs {exact}");
    }

    #[test]
    fn rejects_nonpositive_eps() {
        let sys = SystemDescriptor::fair_coin(z());
        let f = Observable::symbol_indicator(&sys, 0).unwrap();
        assert!(test_eps_independence(&f, &k_of(&[0]), 0.0, &ConditioningSpec::default()).is_err());
    }
}
