//! Concrete countable groups: `Z` and `Z^d` for `d <= 3`.
//!
//! Elements are plain integer vectors with checked arithmetic. Every family
//! carries a fixed enumeration `g_1, g_2, ...` so that "the first `k` elements
//! of a set" is well defined:
//!
//! * `Z` is enumerated `0, 1, -1, 2, -2, ...`;
//! * `Z^d` is enumerated by increasing max-norm shell, lexicographically
//!   (ascending coordinate tuples) inside each shell.
//!
//! [`FiniteSubset`] stores its elements in that enumeration order.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::Rational;

/// Maximum supported dimension for lattice families.
pub const MAX_DIM: usize = 3;

pub const COORDINATE_LIMIT_LOG2: u32 = 42;

/// Coordinates must satisfy `|c| <= COORDINATE_LIMIT`.
pub const COORDINATE_LIMIT: i64 = 1 << COORDINATE_LIMIT_LOG2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupFamily {
    IntegerLine,
    IntegerLattice(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupDescriptor {
    family: GroupFamily,
}

/// An element of `Z` or `Z^d`. Unused trailing coordinates are always zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupElement {
    dim: u8,
    coords: [i64; MAX_DIM],
}

/// Sort key realising the enumeration order of a family.
type EnumKey = (i64, [i64; MAX_DIM]);

fn check_coordinate(value: i128) -> Result<i64> {
    if value.unsigned_abs() > COORDINATE_LIMIT as u128 {
        Err(Error::CoordinateOverflow { value })
    } else {
        Ok(value as i64)
    }
}

impl GroupElement {
    pub fn new(coords: &[i64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::invalid(format!(
                "element needs 1..={MAX_DIM} coordinates, got {}",
                coords.len()
            )));
        }
        let mut out = [0i64; MAX_DIM];
        for (slot, &c) in out.iter_mut().zip(coords) {
            *slot = check_coordinate(c as i128)?;
        }
        Ok(GroupElement {
            dim: coords.len() as u8,
            coords: out,
        })
    }

    /// Element of `Z` (or of a one-dimensional lattice).
    pub fn scalar(c: i64) -> Result<Self> {
        Self::new(&[c])
    }

    pub fn identity(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        GroupElement {
            dim: dim as u8,
            coords: [0; MAX_DIM],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim as usize]
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// Group operation: coordinatewise addition, overflow-checked against
    /// [`COORDINATE_LIMIT`].
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] = check_coordinate(self.coords[i] as i128 + other.coords[i] as i128)?;
        }
        Ok(out)
    }

    pub fn inverse(&self) -> GroupElement {
        let mut out = *self;
        for c in out.coords.iter_mut() {
            *c = -*c;
        }
        out
    }

    /// Max-norm of the coordinate vector.
    pub fn max_norm(&self) -> i64 {
        self.coords().iter().map(|c| c.abs()).max().unwrap_or(0)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == 1 {
            return write!(f, "{}", self.coords[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

fn pow_u128(base: u128, exp: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Number of ways to fill `remaining` coordinates in `[-s, s]` so that the
/// full vector lies on shell `s`, given whether the shell was already hit.
fn shell_completions(s: u128, remaining: usize, hit: bool) -> Option<u128> {
    let full = pow_u128(2 * s + 1, remaining)?;
    if hit {
        Some(full)
    } else {
        Some(full - pow_u128(2 * s - 1, remaining)?)
    }
}

impl GroupDescriptor {
    pub fn integer_line() -> Self {
        GroupDescriptor {
            family: GroupFamily::IntegerLine,
        }
    }

    pub fn lattice(dim: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::invalid(format!(
                "lattice dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        Ok(GroupDescriptor {
            family: GroupFamily::IntegerLattice(dim as u8),
        })
    }

    /// Parses `z`, `z1`, `z2`, `z3`. `z` is the integer line with its
    /// zig-zag enumeration; `z1` the one-dimensional lattice with shell order.
    pub fn parse(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "z" => Ok(Self::integer_line()),
            "z1" => Self::lattice(1),
            "z2" => Self::lattice(2),
            "z3" => Self::lattice(3),
            other => Err(Error::invalid(format!("unknown group `{other}`"))),
        }
    }

    pub fn family(&self) -> GroupFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        match self.family {
            GroupFamily::IntegerLine => 1,
            GroupFamily::IntegerLattice(d) => d as usize,
        }
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.dim())
    }

    /// Builds an element, checking the dimension against this group.
    pub fn element(&self, coords: &[i64]) -> Result<GroupElement> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: coords.len(),
            });
        }
        GroupElement::new(coords)
    }

    pub fn check(&self, g: &GroupElement) -> Result<()> {
        if g.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: g.dim(),
            });
        }
        Ok(())
    }

    pub fn compose(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        g.compose(h)
    }

    fn key(&self, g: &GroupElement) -> EnumKey {
        match self.family {
            GroupFamily::IntegerLine => {
                let c = g.coords[0];
                (c.abs(), [(c < 0) as i64, 0, 0])
            }
            GroupFamily::IntegerLattice(_) => (g.max_norm(), g.coords),
        }
    }

    /// Total order induced by the enumeration: `a < b` iff `a` is enumerated first.
    pub fn enumeration_cmp(&self, a: &GroupElement, b: &GroupElement) -> Ordering {
        self.key(a).cmp(&self.key(b))
    }

    /// The `index`-th element (1-based) of the fixed enumeration.
    pub fn enumerate(&self, index: u64) -> Result<GroupElement> {
        if index == 0 {
            return Err(Error::ZeroIndex);
        }
        match self.family {
            GroupFamily::IntegerLine => {
                let j = (index - 1) as i128;
                let c = if j % 2 == 1 { (j + 1) / 2 } else { -j / 2 };
                GroupElement::new(&[check_coordinate(c)?])
            }
            GroupFamily::IntegerLattice(d) => {
                let d = d as usize;
                if index == 1 {
                    return Ok(self.identity());
                }
                let idx = index as u128;
                // smallest s with (2s+1)^d >= index
                let mut s = ((idx as f64).powf(1.0 / d as f64) - 1.0).max(0.0) as u128 / 2;
                while pow_u128(2 * s + 1, d).is_some_and(|v| v < idx) {
                    s += 1;
                }
                while s > 1 && pow_u128(2 * s - 1, d).is_some_and(|v| v >= idx) {
                    s -= 1;
                }
                let mut rank = idx - pow_u128(2 * s - 1, d).expect("inner shell fits") - 1;
                let si = s as i64;
                let mut coords = [0i64; MAX_DIM];
                let mut hit = false;
                for (pos, slot) in coords.iter_mut().enumerate().take(d) {
                    let remaining = d - pos - 1;
                    // choices in order: -s, the 2s-1 interior values, +s
                    let edge = shell_completions(s, remaining, true).expect("bounded by index");
                    let inner = shell_completions(s, remaining, hit).expect("bounded by index");
                    let interior = (2 * s - 1) * inner;
                    if rank < edge {
                        *slot = -si;
                        hit = true;
                    } else if rank - edge < interior {
                        rank -= edge;
                        *slot = -si + 1 + (rank / inner) as i64;
                        rank %= inner;
                    } else {
                        rank -= edge + interior;
                        *slot = si;
                        hit = true;
                    }
                }
                GroupElement::new(&coords[..d])
            }
        }
    }

    /// Inverse of [`enumerate`](Self::enumerate).
    pub fn inverse_enumerate(&self, g: &GroupElement) -> Result<u64> {
        self.check(g)?;
        let too_big = || Error::ResourceGuard {
            n: 0,
            what: format!("enumeration index of {g} does not fit in u64"),
        };
        match self.family {
            GroupFamily::IntegerLine => {
                let c = g.coords[0];
                Ok(match c.cmp(&0) {
                    Ordering::Equal => 1,
                    Ordering::Greater => 2 * c as u64,
                    Ordering::Less => 2 * c.unsigned_abs() + 1,
                })
            }
            GroupFamily::IntegerLattice(d) => {
                let d = d as usize;
                let s = g.max_norm() as u128;
                if s == 0 {
                    return Ok(1);
                }
                let mut index = pow_u128(2 * s - 1, d).ok_or_else(too_big)?;
                let si = s as i64;
                let mut hit = false;
                for (pos, &target) in g.coords.iter().enumerate().take(d) {
                    let remaining = d - pos - 1;
                    let edge = shell_completions(s, remaining, true).ok_or_else(too_big)?;
                    let inner = shell_completions(s, remaining, hit).ok_or_else(too_big)?;
                    let before = if target == -si {
                        0
                    } else {
                        let interior = (target + si - 1) as u128;
                        inner
                            .checked_mul(interior)
                            .and_then(|v| v.checked_add(edge))
                            .ok_or_else(too_big)?
                    };
                    index = index.checked_add(before).ok_or_else(too_big)?;
                    hit = hit || target.abs() == si;
                }
                u64::try_from(index + 1).map_err(|_| too_big())
            }
        }
    }
}

/// A finite subset of a group, stored without duplicates in enumeration order.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteSubset {
    group: GroupDescriptor,
    elements: Vec<GroupElement>,
}

impl fmt::Debug for FiniteSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.elements.iter()).finish()
    }
}

impl FiniteSubset {
    pub fn empty(group: GroupDescriptor) -> Self {
        FiniteSubset {
            group,
            elements: Vec::new(),
        }
    }

    pub fn from_elements<I>(group: GroupDescriptor, elements: I) -> Result<Self>
    where
        I: IntoIterator<Item = GroupElement>,
    {
        let elements: Vec<GroupElement> = elements.into_iter().collect();
        for g in &elements {
            group.check(g)?;
        }
        Ok(Self::from_checked(group, elements))
    }

    fn from_checked(group: GroupDescriptor, mut elements: Vec<GroupElement>) -> Self {
        elements.sort_unstable_by_key(|g| group.key(g));
        elements.dedup();
        FiniteSubset { group, elements }
    }

    /// Convenience for `Z`-like groups: the listed scalars.
    pub fn from_scalars(group: GroupDescriptor, values: &[i64]) -> Result<Self> {
        let elems = values
            .iter()
            .map(|&v| group.element(&[v]))
            .collect::<Result<Vec<_>>>()?;
        Self::from_elements(group, elems)
    }

    pub fn singleton(group: GroupDescriptor, g: GroupElement) -> Result<Self> {
        Self::from_elements(group, [g])
    }

    /// The half-open integer interval `[start, start + len)` in a one-dimensional group.
    pub fn interval(group: GroupDescriptor, start: i64, len: u64) -> Result<Self> {
        if group.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: group.dim(),
            });
        }
        check_coordinate(start as i128)?;
        if len > 0 {
            check_coordinate(start as i128 + len as i128 - 1)?;
        }
        let elements = (0..len as i64)
            .map(|k| GroupElement {
                dim: 1,
                coords: [start + k, 0, 0],
            })
            .collect();
        Ok(Self::from_checked(group, elements))
    }

    /// The box `[lo, hi)^d`.
    pub fn cube(group: GroupDescriptor, lo: i64, hi: i64) -> Result<Self> {
        check_coordinate(lo as i128)?;
        check_coordinate(hi as i128)?;
        let d = group.dim();
        let side = (hi - lo).max(0) as u128;
        let total = pow_u128(side, d).filter(|&t| t <= 50_000_000).ok_or_else(|| Error::ResourceGuard {
            n: side as u64,
            what: format!("box of side {side} in dimension {d} is too large to materialise"),
        })?;
        let mut elements = Vec::with_capacity(total as usize);
        let mut cur = [lo; MAX_DIM];
        for c in cur.iter_mut().skip(d) {
            *c = 0;
        }
        if side > 0 {
            loop {
                elements.push(GroupElement {
                    dim: d as u8,
                    coords: cur,
                });
                let mut axis = 0;
                loop {
                    if axis == d {
                        return Ok(Self::from_checked(group, elements));
                    }
                    cur[axis] += 1;
                    if cur[axis] < hi {
                        break;
                    }
                    cur[axis] = lo;
                    axis += 1;
                }
            }
        }
        Ok(Self::from_checked(group, elements))
    }

    pub fn group(&self) -> GroupDescriptor {
        self.group
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GroupElement> {
        self.elements.iter()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        if g.dim() != self.group.dim() {
            return false;
        }
        let key = self.group.key(g);
        self.elements
            .binary_search_by(|e| self.group.key(e).cmp(&key))
            .is_ok()
    }

    /// Right translate `Fg = {f g : f in F}`.
    pub fn translate(&self, g: &GroupElement) -> Result<FiniteSubset> {
        self.group.check(g)?;
        let moved = self
            .elements
            .iter()
            .map(|f| f.compose(g))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_checked(self.group, moved))
    }

    /// `A^{-1} B = {a^{-1} b : a in A, b in B}`.
    pub fn quotient_set(a: &FiniteSubset, b: &FiniteSubset) -> Result<FiniteSubset> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptySet("quotient_set operands"));
        }
        if a.group != b.group {
            return Err(Error::DimensionMismatch {
                expected: a.group.dim(),
                found: b.group.dim(),
            });
        }
        let mut out = Vec::with_capacity(a.len() * b.len());
        for x in &a.elements {
            let inv = x.inverse();
            for y in &b.elements {
                out.push(inv.compose(y)?);
            }
        }
        Ok(Self::from_checked(a.group, out))
    }

    /// `|gF Δ F| / |F|` as an exact rational.
    pub fn folner_defect(&self, g: &GroupElement) -> Result<Rational> {
        if self.is_empty() {
            return Err(Error::EmptySet("folner_defect set"));
        }
        self.group.check(g)?;
        let mut escaped = 0i64;
        for f in &self.elements {
            if !self.contains(&g.compose(f)?) {
                escaped += 1;
            }
        }
        // |gF| = |F|, so the two halves of the symmetric difference match.
        Ok(Rational::new(2 * escaped, self.len() as i64))
    }

    /// Largest absolute coordinate among the elements.
    pub fn max_extent(&self) -> i64 {
        self.elements.iter().map(|g| g.max_norm()).max().unwrap_or(0)
    }

    /// The first `k` elements in enumeration order.
    pub fn prefix(&self, k: usize) -> &[GroupElement] {
        &self.elements[..k.min(self.len())]
    }
}

impl<'a> IntoIterator for &'a FiniteSubset {
    type Item = &'a GroupElement;
    type IntoIter = std::slice::Iter<'a, GroupElement>;

    fn into_iter(self) -> Self::IntoIter {
        self.elements.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z() -> GroupDescriptor {
        GroupDescriptor::integer_line()
    }

    fn z2() -> GroupDescriptor {
        GroupDescriptor::lattice(2).unwrap()
    }

    fn e(c: &[i64]) -> GroupElement {
        GroupElement::new(c).unwrap()
    }

    #[test]
    fn compose_examples() {
        assert_eq!(e(&[2]).compose(&e(&[3])).unwrap(), e(&[5]));
        assert!(e(&[1, -2]).compose(&e(&[-1, 2])).unwrap().is_identity());
        assert!(matches!(
            e(&[1]).compose(&e(&[1, 2])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn overflow_fails_loudly() {
        let big = e(&[COORDINATE_LIMIT]);
        assert!(matches!(big.compose(&e(&[1])), Err(Error::CoordinateOverflow { .. })));
        assert!(GroupElement::new(&[COORDINATE_LIMIT + 1]).is_err());
    }

    #[test]
    fn line_enumeration_prefix() {
        let got: Vec<i64> = (1..=5).map(|k| z().enumerate(k).unwrap().coords()[0]).collect();
        assert_eq!(got, vec![0, 1, -1, 2, -2]);
        assert!(matches!(z().enumerate(0), Err(Error::ZeroIndex)));
    }

    #[test]
    fn lattice_enumeration_starts_at_identity_then_shell_one_lex() {
        let g = z2();
        assert!(g.enumerate(1).unwrap().is_identity());
        let shell: Vec<GroupElement> = (2..=9).map(|k| g.enumerate(k).unwrap()).collect();
        let expected = [
            [-1, -1],
            [-1, 0],
            [-1, 1],
            [0, -1],
            [0, 1],
            [1, -1],
            [1, 0],
            [1, 1],
        ];
        for (got, want) in shell.iter().zip(expected.iter()) {
            assert_eq!(got.coords(), want);
        }
        assert_eq!(g.enumerate(10).unwrap().coords(), &[-2, -2]);
    }

    #[test]
    fn enumeration_is_bijective_on_prefix() {
        for desc in [
            z(),
            GroupDescriptor::lattice(1).unwrap(),
            z2(),
            GroupDescriptor::lattice(3).unwrap(),
        ] {
            let mut seen = std::collections::HashSet::new();
            let mut prev: Option<GroupElement> = None;
            for k in 1..=100_000u64 {
                let g = desc.enumerate(k).unwrap();
                assert_eq!(desc.inverse_enumerate(&g).unwrap(), k, "{desc:?} {k}");
                assert!(seen.insert(g));
                if let Some(p) = prev {
                    assert_eq!(desc.enumeration_cmp(&p, &g), Ordering::Less);
                }
                prev = Some(g);
            }
        }
    }

    #[test]
    fn translate_examples() {
        let f = FiniteSubset::from_scalars(z(), &[0, 1, 2]).unwrap();
        assert_eq!(
            f.translate(&e(&[5])).unwrap(),
            FiniteSubset::from_scalars(z(), &[5, 6, 7]).unwrap()
        );
        assert_eq!(f.translate(&e(&[0])).unwrap(), f);
        let sq = FiniteSubset::from_elements(z2(), [e(&[0, 0]), e(&[0, 1])]).unwrap();
        let moved = sq.translate(&e(&[1, 1])).unwrap();
        assert_eq!(
            moved,
            FiniteSubset::from_elements(z2(), [e(&[1, 1]), e(&[1, 2])]).unwrap()
        );
    }

    #[test]
    fn quotient_set_examples() {
        let a = FiniteSubset::from_scalars(z(), &[0, 1]).unwrap();
        assert_eq!(
            FiniteSubset::quotient_set(&a, &a).unwrap(),
            FiniteSubset::from_scalars(z(), &[-1, 0, 1]).unwrap()
        );
        let g = FiniteSubset::from_scalars(z(), &[7]).unwrap();
        let q = FiniteSubset::quotient_set(&g, &g).unwrap();
        assert_eq!(q.len(), 1);
        assert!(q.elements()[0].is_identity());
        let zero = FiniteSubset::from_scalars(z(), &[0]).unwrap();
        let b = FiniteSubset::from_scalars(z(), &[0, 1, 2]).unwrap();
        assert_eq!(FiniteSubset::quotient_set(&zero, &b).unwrap(), b);
        assert!(matches!(
            FiniteSubset::quotient_set(&FiniteSubset::empty(z()), &b),
            Err(Error::EmptySet(_))
        ));
    }

    /// Symmetric difference counted by brute force over both sets.
    fn defect_oracle(f: &FiniteSubset, g: &GroupElement) -> Rational {
        let moved: std::collections::HashSet<GroupElement> =
            f.iter().map(|x| g.compose(x).unwrap()).collect();
        let orig: std::collections::HashSet<GroupElement> = f.iter().copied().collect();
        let sym = moved.symmetric_difference(&orig).count() as i64;
        Rational::new(sym, f.len() as i64)
    }

    #[test]
    fn folner_defect_examples() {
        let f = FiniteSubset::interval(z(), 0, 100).unwrap();
        let one = e(&[1]);
        assert_eq!(defect_oracle(&f, &one), Rational::new(2, 100));
        assert_eq!(f.folner_defect(&one).unwrap(), Rational::new(2, 100));
        assert_eq!(f.folner_defect(&e(&[0])).unwrap(), Rational::from_integer(0));
        let sq = FiniteSubset::cube(z2(), 0, 10).unwrap();
        assert_eq!(defect_oracle(&sq, &e(&[1, 0])), Rational::new(20, 100));
        assert_eq!(sq.folner_defect(&e(&[1, 0])).unwrap(), Rational::new(20, 100));
    }

    #[test]
    fn box_defect_matches_surface_formula() {
        for d in 1..=3usize {
            let desc = GroupDescriptor::lattice(d).unwrap();
            let mut gen = [0i64; MAX_DIM];
            gen[0] = 1;
            let s = GroupElement::new(&gen[..d]).unwrap();
            let mut prev = Rational::from_integer(3);
            let n_max = if d == 3 { 12 } else { 40 };
            for n in 2..=n_max as i64 {
                let b = FiniteSubset::cube(desc, 0, n).unwrap();
                let got = b.folner_defect(&s).unwrap();
                let want = Rational::new(2 * n.pow(d as u32 - 1), n.pow(d as u32));
                assert_eq!(got, want);
                assert!(got < prev);
                prev = got;
            }
        }
    }

    fn arb_elem(dim: usize) -> impl Strategy<Value = GroupElement> {
        proptest::collection::vec(-1_000_000i64..1_000_000, dim)
            .prop_map(|v| GroupElement::new(&v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn group_axioms_z2(a in arb_elem(2), b in arb_elem(2), c in arb_elem(2)) {
            let ab_c = a.compose(&b).unwrap().compose(&c).unwrap();
            let a_bc = a.compose(&b.compose(&c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            prop_assert_eq!(a.compose(&GroupElement::identity(2)).unwrap(), a);
            prop_assert!(a.compose(&a.inverse()).unwrap().is_identity());
        }

        #[test]
        fn group_axioms_z3(a in arb_elem(3), b in arb_elem(3), c in arb_elem(3)) {
            let ab_c = a.compose(&b).unwrap().compose(&c).unwrap();
            let a_bc = a.compose(&b.compose(&c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            prop_assert!(a.inverse().compose(&a).unwrap().is_identity());
        }

        #[test]
        fn group_axioms_line(a in arb_elem(1), b in arb_elem(1), c in arb_elem(1)) {
            let ab_c = a.compose(&b).unwrap().compose(&c).unwrap();
            let a_bc = a.compose(&b.compose(&c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            prop_assert_eq!(a.compose(&GroupElement::identity(1)).unwrap(), a);
        }

        #[test]
        fn translate_preserves_cardinality(
            pts in proptest::collection::vec(arb_elem(2), 1..40),
            g in arb_elem(2),
        ) {
            let f = FiniteSubset::from_elements(z2(), pts).unwrap();
            let t = f.translate(&g).unwrap();
            prop_assert_eq!(t.len(), f.len());
            for pair in t.elements().windows(2) {
                prop_assert_eq!(z2().enumeration_cmp(&pair[0], &pair[1]), Ordering::Less);
            }
        }
    }
}
