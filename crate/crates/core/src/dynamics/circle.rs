//! Unions of arcs on `[0, 1)` whose endpoints are kept as `c + t·theta`.
//!
//! Every endpoint that arises from rotating rational arcs by integer multiples
//! of `theta` has that form, and intersections and complements only select
//! among existing endpoints. Lengths are therefore exact linear forms in
//! `theta`; floating point enters only when a form is evaluated.

use std::ops::{Add, Sub};

use crate::Rational;

/// The real number `constant + theta_coeff · theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearPoint {
    pub constant: Rational,
    pub theta_coeff: i64,
}

impl LinearPoint {
    pub fn rational(c: Rational) -> Self {
        LinearPoint {
            constant: c,
            theta_coeff: 0,
        }
    }

    pub fn zero() -> Self {
        Self::rational(Rational::from_integer(0))
    }

    pub fn one() -> Self {
        Self::rational(Rational::from_integer(1))
    }

    pub fn is_zero(&self) -> bool {
        self.theta_coeff == 0 && self.constant == Rational::from_integer(0)
    }

    pub fn value(&self, theta: f64) -> f64 {
        *self.constant.numer() as f64 / *self.constant.denom() as f64 + self.theta_coeff as f64 * theta
    }

    /// Shifts by an integer so the value lies in `[0, 1)`.
    fn reduce(self, theta: f64) -> Self {
        let k = self.value(theta).floor() as i64;
        let mut out = LinearPoint {
            constant: self.constant - Rational::from_integer(k),
            ..self
        };
        // guard against the floor landing one off at an exact integer
        if out.value(theta) < 0.0 {
            out.constant += Rational::from_integer(1);
        } else if out.value(theta) >= 1.0 {
            out.constant -= Rational::from_integer(1);
        }
        out
    }
}

impl Add for LinearPoint {
    type Output = LinearPoint;

    fn add(self, rhs: Self) -> Self {
        LinearPoint {
            constant: self.constant + rhs.constant,
            theta_coeff: self.theta_coeff + rhs.theta_coeff,
        }
    }
}

impl Sub for LinearPoint {
    type Output = LinearPoint;

    fn sub(self, rhs: Self) -> Self {
        LinearPoint {
            constant: self.constant - rhs.constant,
            theta_coeff: self.theta_coeff - rhs.theta_coeff,
        }
    }
}

/// Finite disjoint union of half-open intervals in `[0, 1)`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcSet {
    intervals: Vec<(LinearPoint, LinearPoint)>,
}

impl ArcSet {
    pub fn empty() -> Self {
        ArcSet { intervals: vec![] }
    }

    pub fn full() -> Self {
        ArcSet {
            intervals: vec![(LinearPoint::zero(), LinearPoint::one())],
        }
    }

    /// The arc `[start, end) + shift·theta (mod 1)`, for `0 <= start < end <= 1`.
    pub fn rotated_arc(start: Rational, end: Rational, shift: i64, theta: f64) -> Self {
        let length = LinearPoint::rational(end - start);
        if length.value(theta) >= 1.0 {
            return Self::full();
        }
        let lo = LinearPoint {
            constant: start,
            theta_coeff: shift,
        }
        .reduce(theta);
        let hi = lo + length;
        if hi.value(theta) <= 1.0 {
            ArcSet {
                intervals: vec![(lo, hi)],
            }
        } else {
            ArcSet {
                intervals: vec![(LinearPoint::zero(), hi - LinearPoint::one()), (lo, LinearPoint::one())],
            }
        }
    }

    pub fn intervals(&self) -> &[(LinearPoint, LinearPoint)] {
        &self.intervals
    }

    pub fn intersect(&self, other: &ArcSet, theta: f64) -> ArcSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a0, a1) = self.intervals[i];
            let (b0, b1) = other.intervals[j];
            let lo = if a0.value(theta) >= b0.value(theta) { a0 } else { b0 };
            let hi = if a1.value(theta) <= b1.value(theta) { a1 } else { b1 };
            if lo.value(theta) < hi.value(theta) {
                out.push((lo, hi));
            }
            if a1.value(theta) <= b1.value(theta) {
                i += 1;
            } else {
                j += 1;
            }
        }
        ArcSet { intervals: out }
    }

    pub fn complement(&self, theta: f64) -> ArcSet {
        let mut out = Vec::new();
        let mut cursor = LinearPoint::zero();
        for &(lo, hi) in &self.intervals {
            if cursor.value(theta) < lo.value(theta) {
                out.push((cursor, lo));
            }
            cursor = hi;
        }
        if cursor.value(theta) < 1.0 {
            out.push((cursor, LinearPoint::one()));
        }
        ArcSet { intervals: out }
    }

    /// Total length as a linear form in `theta`.
    pub fn measure(&self) -> LinearPoint {
        self.intervals
            .iter()
            .fold(LinearPoint::zero(), |acc, &(lo, hi)| acc + (hi - lo))
    }

    pub fn contains(&self, x: f64, theta: f64) -> bool {
        self.intervals
            .iter()
            .any(|(lo, hi)| lo.value(theta) <= x && x < hi.value(theta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THETA: f64 = std::f64::consts::SQRT_2 - 1.0;

    fn half() -> Rational {
        Rational::new(1, 2)
    }

    #[test]
    fn rotated_half_arc_wraps() {
        let zero = Rational::from_integer(0);
        // [0, 1/2) - theta wraps to [1 - theta, 1) ∪ [0, 1/2 - theta)
        let b = ArcSet::rotated_arc(zero, half(), -1, THETA);
        assert_eq!(b.intervals().len(), 2);
        assert!((b.measure().value(THETA) - 0.5).abs() < 1e-15);
        let a = ArcSet::rotated_arc(zero, half(), 0, THETA);
        let ab = a.intersect(&b, THETA);
        let m = ab.measure();
        assert_eq!(m.theta_coeff, -1);
        assert_eq!(m.constant, half());
    }

    #[test]
    fn complement_partitions_the_circle() {
        let b = ArcSet::rotated_arc(Rational::new(1, 5), Rational::new(3, 4), 7, THETA);
        let c = b.complement(THETA);
        assert!(b.intersect(&c, THETA).measure().value(THETA).abs() < 1e-15);
        let total = b.measure() + c.measure();
        assert_eq!(total, LinearPoint::one());
    }

    #[test]
    fn membership_matches_intervals() {
        let b = ArcSet::rotated_arc(Rational::from_integer(0), half(), 3, THETA);
        for k in 0..1000 {
            let x = k as f64 / 1000.0;
            let shifted = (x - 3.0 * THETA).rem_euclid(1.0);
            assert_eq!(b.contains(x, THETA), shifted < 0.5, "{x}");
        }
    }
}
