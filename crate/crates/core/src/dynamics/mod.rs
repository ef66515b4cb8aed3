//! Measure-preserving systems, observables and the ε-independence tester.
//!
//! Two systems are provided: the Bernoulli shift over `Z` or `Z^d`, and the
//! circle rotation by `theta` over `Z`, which serves as a non-mixing control.
//!
//! The action convention is `(gx)(h) = x(h g)`: reading coordinate `h` of
//! `gx` returns coordinate `h g` of `x`. A cylinder observable with window
//! `W` composed with `g` therefore reads the coordinates `W g`, and those are
//! disjoint from `W` exactly when `g ∉ W^{-1} W`.

mod circle;
mod independence;

pub use circle::{ArcSet, LinearPoint};
pub use independence::{
    cylinder_deviation, monte_carlo_deviation, rotation_level_set_deviation, test_eps_independence,
    ConditioningEvent,
    ConditioningSpec, CylinderEvent, Exactness, IndependenceReport, MonteCarloDeviation,
};

use crate::error::{Error, Result};
use crate::group::{FiniteSubset, GroupDescriptor, GroupElement};
use crate::hash::{coordinate_hash, rotation_phase, unit_interval};
use crate::Rational;

/// Tolerance on the probability vector summing to one.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Largest `|A|^|W|` table accepted for a cylinder observable.
pub const MAX_TABLE_LEN: usize = 1 << 20;

/// Product measure on a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliMeasure {
    values: Vec<f64>,
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl BernoulliMeasure {
    pub fn new(values: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probabilities.len() {
            return Err(Error::invalid(
                "alphabet values and probabilities must be nonempty and of equal length",
            ));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("probabilities must be finite and nonnegative"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("alphabet values must be finite"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(BernoulliMeasure {
            values,
            probabilities,
            cumulative,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn alphabet_size(&self) -> usize {
        self.values.len()
    }

    /// Symbol whose cumulative bin contains `u in [0, 1)`.
    fn symbol_for(&self, u: f64) -> usize {
        match self.cumulative.iter().position(|&c| u < c) {
            Some(i) => i,
            // rounding left the top of [0,1) uncovered: use the last positive symbol
            None => self
                .probabilities
                .iter()
                .rposition(|&p| p > 0.0)
                .expect("some probability is positive"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    Bernoulli(BernoulliMeasure),
    /// `x -> x + theta mod 1`, only over the integer line.
    Rotation { theta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDescriptor {
    kind: SystemKind,
    group: GroupDescriptor,
}

impl SystemDescriptor {
    pub fn bernoulli(group: GroupDescriptor, values: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        Ok(SystemDescriptor {
            kind: SystemKind::Bernoulli(BernoulliMeasure::new(values, probabilities)?),
            group,
        })
    }

    /// Symbols `{0, 1}` with values `0.0, 1.0`, each of probability 1/2.
    pub fn fair_coin(group: GroupDescriptor) -> Self {
        Self::bernoulli(group, vec![0.0, 1.0], vec![0.5, 0.5]).expect("fair coin is valid")
    }

    pub fn rotation(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::invalid(format!("rotation angle must lie in (0, 1), got {theta}")));
        }
        Ok(SystemDescriptor {
            kind: SystemKind::Rotation { theta },
            group: GroupDescriptor::integer_line(),
        })
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn group(&self) -> GroupDescriptor {
        self.group
    }

    pub fn measure(&self) -> Option<&BernoulliMeasure> {
        match &self.kind {
            SystemKind::Bernoulli(m) => Some(m),
            SystemKind::Rotation { .. } => None,
        }
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self.kind, SystemKind::Rotation { .. })
    }
}

/// A point of the system: a seed plus the accumulated action offset.
///
/// Bernoulli coordinates are never stored; `x(h)` is recomputed from
/// `coordinate_hash(seed, h + offset)` on every read.
#[derive(Debug, Clone, Copy)]
pub struct SystemPoint<'a> {
    system: &'a SystemDescriptor,
    seed: u64,
    offset: GroupElement,
}

/// `x ~ mu` determined by `seed`.
pub fn sample_point(system: &SystemDescriptor, seed: u64) -> SystemPoint<'_> {
    SystemPoint {
        system,
        seed,
        offset: system.group.identity(),
    }
}

/// `gx`, with `(gx)(h) = x(h g)`.
pub fn act<'a>(g: &GroupElement, x: &SystemPoint<'a>) -> Result<SystemPoint<'a>> {
    x.system.group.check(g)?;
    Ok(SystemPoint {
        offset: x.offset.compose(g)?,
        ..*x
    })
}

impl<'a> SystemPoint<'a> {
    pub fn system(&self) -> &'a SystemDescriptor {
        self.system
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn offset(&self) -> GroupElement {
        self.offset
    }

    /// Symbol index of coordinate `h`.
    #[inline]
    pub fn symbol(&self, h: &GroupElement) -> Result<usize> {
        let SystemKind::Bernoulli(measure) = &self.system.kind else {
            return Err(Error::KindMismatch);
        };
        let at = h.compose(&self.offset)?;
        Ok(measure.symbol_for(unit_interval(coordinate_hash(self.seed, &at))))
    }

    /// Alphabet value of coordinate `h`.
    pub fn value(&self, h: &GroupElement) -> Result<f64> {
        let s = self.symbol(h)?;
        Ok(self.system.measure().expect("symbol checked kind").values[s])
    }

    /// Position on the circle, in `[0, 1)`.
    pub fn phase(&self) -> Result<f64> {
        let SystemKind::Rotation { theta } = self.system.kind else {
            return Err(Error::KindMismatch);
        };
        let turns = self.offset.coords()[0] as f64 * theta;
        Ok((rotation_phase(self.seed) + turns.rem_euclid(1.0)).rem_euclid(1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableKind {
    /// Table lookup on the symbols read over `window`. The first window
    /// element (in enumeration order) is the most significant digit.
    Cylinder {
        window: FiniteSubset,
        table: Vec<f64>,
        probabilities: Vec<f64>,
    },
    /// Indicator of the circle arc `[start, end)`.
    Arc {
        start: Rational,
        end: Rational,
        theta: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    kind: ObservableKind,
    sup_norm: f64,
    exact_mean: f64,
}

impl Observable {
    pub fn cylinder(system: &SystemDescriptor, window: FiniteSubset, table: Vec<f64>) -> Result<Self> {
        let measure = system
            .measure()
            .ok_or_else(|| Error::invalid("cylinder observables need a Bernoulli system"))?;
        if window.is_empty() {
            return Err(Error::EmptySet("observable window"));
        }
        if window.group() != system.group() {
            return Err(Error::DimensionMismatch {
                expected: system.group().dim(),
                found: window.group().dim(),
            });
        }
        let a = measure.alphabet_size();
        let expected = u32::try_from(window.len())
            .ok()
            .and_then(|w| a.checked_pow(w))
            .filter(|&n| n <= MAX_TABLE_LEN)
            .ok_or_else(|| Error::invalid("observable table too large"))?;
        if table.len() != expected {
            return Err(Error::invalid(format!(
                "table for |A| = {a}, |W| = {} needs {expected} entries, got {}",
                window.len(),
                table.len()
            )));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("table entries must be finite"));
        }
        let sup_norm = table.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let probabilities = measure.probabilities().to_vec();
        let exact_mean = crate::numeric::compensated_sum(
            table
                .iter()
                .enumerate()
                .map(|(idx, v)| v * tuple_probability(idx, window.len(), &probabilities)),
        );
        Ok(Observable {
            kind: ObservableKind::Cylinder {
                window,
                table,
                probabilities,
            },
            sup_norm,
            exact_mean,
        })
    }

    /// `f(x) = value of x(e)`.
    pub fn coordinate_value(system: &SystemDescriptor) -> Result<Self> {
        let measure = system
            .measure()
            .ok_or_else(|| Error::invalid("coordinate observables need a Bernoulli system"))?;
        let group = system.group();
        Self::cylinder(
            system,
            FiniteSubset::singleton(group, group.identity())?,
            measure.values().to_vec(),
        )
    }

    /// `f(x) = 1{x(e) = symbol}`.
    pub fn symbol_indicator(system: &SystemDescriptor, symbol: usize) -> Result<Self> {
        let group = system.group();
        let window = FiniteSubset::singleton(group, group.identity())?;
        Self::all_equal(system, window, symbol)
    }

    /// `f(x) = 1{x(w) = symbol for every w in window}`.
    pub fn all_equal(system: &SystemDescriptor, window: FiniteSubset, symbol: usize) -> Result<Self> {
        let measure = system
            .measure()
            .ok_or_else(|| Error::invalid("cylinder observables need a Bernoulli system"))?;
        let a = measure.alphabet_size();
        if symbol >= a {
            return Err(Error::invalid(format!("symbol {symbol} outside alphabet of size {a}")));
        }
        let len = a.pow(window.len() as u32);
        let target: usize = (0..window.len()).fold(0, |acc, _| acc * a + symbol);
        let table = (0..len).map(|i| (i == target) as u8 as f64).collect();
        Self::cylinder(system, window, table)
    }

    /// Constant observable, realised as a cylinder on `{e}`.
    pub fn constant(system: &SystemDescriptor, c: f64) -> Result<Self> {
        let measure = system
            .measure()
            .ok_or_else(|| Error::invalid("constant observables are provided for Bernoulli systems"))?;
        let group = system.group();
        Self::cylinder(
            system,
            FiniteSubset::singleton(group, group.identity())?,
            vec![c; measure.alphabet_size()],
        )
    }

    /// Indicator of `[start, end) ⊂ [0, 1)` for a rotation.
    pub fn arc(system: &SystemDescriptor, start: Rational, end: Rational) -> Result<Self> {
        let SystemKind::Rotation { theta } = system.kind else {
            return Err(Error::invalid("arc observables need a rotation system"));
        };
        let zero = Rational::from_integer(0);
        let one = Rational::from_integer(1);
        if !(zero <= start && start < end && end <= one) {
            return Err(Error::invalid("arc must satisfy 0 <= start < end <= 1"));
        }
        let len = end - start;
        Ok(Observable {
            kind: ObservableKind::Arc { start, end, theta },
            sup_norm: 1.0,
            exact_mean: *len.numer() as f64 / *len.denom() as f64,
        })
    }

    pub fn kind(&self) -> &ObservableKind {
        &self.kind
    }

    /// `||f||_inf`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `∫ f dmu`.
    pub fn exact_mean(&self) -> f64 {
        self.exact_mean
    }

    pub fn window(&self) -> Option<&FiniteSubset> {
        match &self.kind {
            ObservableKind::Cylinder { window, .. } => Some(window),
            ObservableKind::Arc { .. } => None,
        }
    }

    /// `f(x)`, reading exactly the coordinates of the window.
    #[inline]
    pub fn eval(&self, x: &SystemPoint<'_>) -> Result<f64> {
        match (&self.kind, &x.system.kind) {
            (ObservableKind::Cylinder { window, table, .. }, SystemKind::Bernoulli(m)) => {
                let a = m.alphabet_size();
                let mut idx = 0usize;
                for w in window {
                    idx = idx * a + x.symbol(w)?;
                }
                table.get(idx).copied().ok_or(Error::KindMismatch)
            }
            (ObservableKind::Arc { start, end, .. }, SystemKind::Rotation { .. }) => {
                let p = x.phase()?;
                let lo = *start.numer() as f64 / *start.denom() as f64;
                let hi = *end.numer() as f64 / *end.denom() as f64;
                Ok((lo <= p && p < hi) as u8 as f64)
            }
            _ => Err(Error::KindMismatch),
        }
    }
}

/// Product probability of the `idx`-th tuple over a window of `len` symbols.
fn tuple_probability(mut idx: usize, len: usize, probabilities: &[f64]) -> f64 {
    let a = probabilities.len();
    let mut p = 1.0;
    for _ in 0..len {
        p *= probabilities[idx % a];
        idx /= a;
    }
    p
}

/// `K = W^{-1} W`: `f∘g` reads `W g`, which misses `W` exactly when `g ∉ K`.
/// Under a product measure `f` is then independent of `σ(f∘g : g ∉ K)`.
pub fn independence_window(f: &Observable) -> Result<FiniteSubset> {
    match &f.kind {
        ObservableKind::Cylinder { window, .. } => FiniteSubset::quotient_set(window, window),
        ObservableKind::Arc { .. } => Err(Error::NoFiniteWindow(
            "rotation observables are not independent of any tail of their translates".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> GroupDescriptor {
        GroupDescriptor::integer_line()
    }

    fn e(c: &[i64]) -> GroupElement {
        GroupElement::new(c).unwrap()
    }

    #[test]
    fn reads_are_deterministic() {
        let sys = SystemDescriptor::fair_coin(z());
        let x = sample_point(&sys, 99);
        let y = sample_point(&sys, 99);
        for g in -20..20 {
            assert_eq!(x.symbol(&e(&[g])).unwrap(), y.symbol(&e(&[g])).unwrap());
        }
    }

    #[test]
    fn coordinate_zero_is_fair_across_seeds() {
        let sys = SystemDescriptor::fair_coin(z());
        let n = 100_000u64;
        let ones: u64 = (0..n)
            .map(|s| sample_point(&sys, crate::hash::sample_seed(1, s)).symbol(&e(&[0])).unwrap() as u64)
            .sum();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((ones as f64 - n as f64 / 2.0).abs() < 3.0 * sigma, "{ones}");
    }

    #[test]
    fn rotation_point_in_unit_interval() {
        let sys = SystemDescriptor::rotation(std::f64::consts::SQRT_2 - 1.0).unwrap();
        for s in 0..1000 {
            let p = sample_point(&sys, s).phase().unwrap();
            assert!((0.0..1.0).contains(&p));
        }
    }

    #[test]
    fn action_convention() {
        let sys = SystemDescriptor::fair_coin(z());
        let x = sample_point(&sys, 5);
        let same = act(&e(&[0]), &x).unwrap();
        assert_eq!(same.offset(), x.offset());
        let moved = act(&e(&[3]), &x).unwrap();
        assert_eq!(moved.symbol(&e(&[0])).unwrap(), x.symbol(&e(&[3])).unwrap());
        // act(g, act(h, x)) = act(g h, x) in the abelian case
        let twice = act(&e(&[2]), &act(&e(&[5]), &x).unwrap()).unwrap();
        assert_eq!(twice.offset(), e(&[7]));

        let sys = SystemDescriptor::rotation(0.25).unwrap();
        let x = sample_point(&sys, 11);
        let p = x.phase().unwrap();
        let q = act(&e(&[2]), &x).unwrap().phase().unwrap();
        assert!(((p + 0.5).rem_euclid(1.0) - q).abs() < 1e-15);
    }

    #[test]
    fn eval_examples() {
        let sys = SystemDescriptor::fair_coin(z());
        let f = Observable::symbol_indicator(&sys, 1).unwrap();
        let seed = (0..).find(|&s| sample_point(&sys, s).symbol(&e(&[0])).unwrap() == 1).unwrap();
        assert_eq!(f.eval(&sample_point(&sys, seed)).unwrap(), 1.0);

        let c = Observable::constant(&sys, 2.5).unwrap();
        for s in 0..20 {
            assert_eq!(c.eval(&sample_point(&sys, s)).unwrap(), 2.5);
        }
        assert_eq!(c.exact_mean(), 2.5);

        let w = FiniteSubset::from_scalars(z(), &[0, 1]).unwrap();
        let and = Observable::all_equal(&sys, w, 1).unwrap();
        assert_eq!(and.exact_mean(), 0.25);
        for s in 0..200 {
            let x = sample_point(&sys, s);
            let both = x.symbol(&e(&[0])).unwrap() == 1 && x.symbol(&e(&[1])).unwrap() == 1;
            assert_eq!(and.eval(&x).unwrap(), both as u8 as f64);
        }
    }

    #[test]
    fn eval_respects_sup_norm_and_kind() {
        let group = GroupDescriptor::lattice(2).unwrap();
        let sys = SystemDescriptor::bernoulli(group, vec![-1.0, 0.5, 2.0], vec![0.2, 0.3, 0.5]).unwrap();
        let w = FiniteSubset::from_elements(group, [e(&[0, 0]), e(&[1, 0])]).unwrap();
        let table: Vec<f64> = (0..9).map(|i| (i as f64 - 4.0) / 3.0).collect();
        let f = Observable::cylinder(&sys, w, table).unwrap();
        for s in 0..500 {
            assert!(f.eval(&sample_point(&sys, s)).unwrap().abs() <= f.sup_norm());
        }
        let rot = SystemDescriptor::rotation(0.3).unwrap();
        assert!(matches!(f.eval(&sample_point(&rot, 1)), Err(Error::KindMismatch)));
    }

    #[test]
    fn rejects_bad_systems() {
        assert!(SystemDescriptor::bernoulli(z(), vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(SystemDescriptor::bernoulli(z(), vec![0.0], vec![0.5, 0.5]).is_err());
        assert!(SystemDescriptor::bernoulli(z(), vec![0.0, 1.0], vec![-0.5, 1.5]).is_err());
        assert!(SystemDescriptor::rotation(1.0).is_err());
        let sys = SystemDescriptor::fair_coin(z());
        let w = FiniteSubset::from_scalars(z(), &[0, 1]).unwrap();
        assert!(Observable::cylinder(&sys, w, vec![0.0; 3]).is_err());
    }

    #[test]
    fn independence_windows() {
        let sys = SystemDescriptor::fair_coin(z());
        let f = Observable::symbol_indicator(&sys, 1).unwrap();
        assert_eq!(
            independence_window(&f).unwrap(),
            FiniteSubset::from_scalars(z(), &[0]).unwrap()
        );
        let w = FiniteSubset::from_scalars(z(), &[0, 1]).unwrap();
        let g = Observable::all_equal(&sys, w, 1).unwrap();
        assert_eq!(
            independence_window(&g).unwrap(),
            FiniteSubset::from_scalars(z(), &[-1, 0, 1]).unwrap()
        );
        let g2 = GroupDescriptor::lattice(2).unwrap();
        let sys2 = SystemDescriptor::fair_coin(g2);
        let h = Observable::all_equal(&sys2, FiniteSubset::cube(g2, 0, 3).unwrap(), 0).unwrap();
        assert_eq!(independence_window(&h).unwrap(), FiniteSubset::cube(g2, -2, 3).unwrap());

        let rot = SystemDescriptor::rotation(0.3).unwrap();
        let arc = Observable::arc(&rot, Rational::new(0, 1), Rational::new(1, 2)).unwrap();
        assert!(matches!(independence_window(&arc), Err(Error::NoFiniteWindow(_))));
    }

    #[test]
    fn shift_preserves_pattern_frequencies() {
        let g2 = GroupDescriptor::lattice(2).unwrap();
        let sys = SystemDescriptor::bernoulli(g2, vec![0.0, 1.0], vec![0.3, 0.7]).unwrap();
        let v = [e(&[0, 0]), e(&[1, 0]), e(&[0, 1])];
        let pattern = [1usize, 0, 1];
        let p = 0.7 * 0.3 * 0.7;
        let n = 10_000u64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let count_at = |shift: &GroupElement| -> f64 {
            (0..n)
                .filter(|&s| {
                    let x = sample_point(&sys, crate::hash::sample_seed(3, s));
                    v.iter()
                        .zip(pattern)
                        .all(|(w, sym)| x.symbol(&w.compose(shift).unwrap()).unwrap() == sym)
                })
                .count() as f64
        };
        let base = count_at(&e(&[0, 0]));
        for g in [e(&[5, -3]), e(&[100, 7]), e(&[-1, 1])] {
            assert!((count_at(&g) - base).abs() < 4.0 * sigma * std::f64::consts::SQRT_2);
        }
        assert!((base - n as f64 * p).abs() < 4.0 * sigma);
    }
}
