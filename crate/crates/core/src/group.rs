//! Finite abelian groups in invariant-factor form.
//!
//! A group is `Z/d1 x Z/d2 x ... x Z/dk` with `d1 | d2 | ... | dk`, each `di >= 2`.
//! Elements are plain coordinate vectors; every operation takes the group as
//! context and validates shapes, so elements stay serializable values.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::error::{Error, Result};

/// Default upper bound on the number of elements `enumerate_elements` will materialize.
pub const DEFAULT_ELEMENT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct AbelianGroup {
    factors: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement {
    coords: Vec<u64>,
}

impl GroupElement {
    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl AbelianGroup {
    /// Builds a group from any decomposition into cyclic factors, normalizing to
    /// invariant factors. `[2, 3]` becomes `[6]`; `[]` is the trivial group.
    pub fn new(factors: &[u64]) -> Result<Self> {
        let mut exponents: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
        for &f in factors {
            if f < 2 {
                return Err(Error::InvalidGroup(format!("cyclic factor {f} is smaller than 2")));
            }
            for (p, e) in arith::factor(f) {
                exponents.entry(p).or_default().push(e);
            }
        }
        let rank = exponents.values().map(Vec::len).max().unwrap_or(0);
        let mut invariants = vec![1u64; rank];
        for (p, exps) in exponents.iter_mut() {
            exps.sort_unstable_by(|a, b| b.cmp(a));
            for (j, &e) in exps.iter().enumerate() {
                invariants[j] = invariants[j]
                    .checked_mul(p.pow(e))
                    .ok_or_else(|| Error::TooLarge("group order overflows u64".into()))?;
            }
        }
        invariants.reverse();
        let group = AbelianGroup { factors: invariants };
        group.order_checked()?;
        Ok(group)
    }

    pub fn trivial() -> Self {
        AbelianGroup { factors: Vec::new() }
    }

    /// Cyclic group `Z/n`; `n = 1` gives the trivial group.
    pub fn cyclic(n: u64) -> Result<Self> {
        match n {
            0 => Err(Error::InvalidGroup("Z/0 is infinite".into())),
            1 => Ok(Self::trivial()),
            n => Self::new(&[n]),
        }
    }

    pub fn invariant_factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    fn order_checked(&self) -> Result<u64> {
        self.factors.iter().try_fold(1u64, |acc, &d| {
            acc.checked_mul(d).ok_or_else(|| Error::TooLarge("group order overflows u64".into()))
        })
    }

    pub fn order(&self) -> u64 {
        self.factors.iter().product()
    }

    /// Exponent of the group (largest invariant factor).
    pub fn exponent(&self) -> u64 {
        self.factors.last().copied().unwrap_or(1)
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement { coords: vec![0; self.rank()] }
    }

    /// Validates coordinates; they must already be reduced.
    pub fn element(&self, coords: &[u64]) -> Result<GroupElement> {
        self.check_coords(coords)?;
        Ok(GroupElement { coords: coords.to_vec() })
    }

    /// Reduces arbitrary integer coordinates modulo the invariant factors.
    pub fn element_reduced(&self, coords: &[i64]) -> Result<GroupElement> {
        if coords.len() != self.rank() {
            return Err(Error::GroupMismatch);
        }
        Ok(GroupElement {
            coords: coords
                .iter()
                .zip(&self.factors)
                .map(|(&c, &d)| c.rem_euclid(d as i64) as u64)
                .collect(),
        })
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.check_coords(&g.coords).is_ok()
    }

    fn check_coords(&self, coords: &[u64]) -> Result<()> {
        if coords.len() != self.rank() {
            return Err(Error::GroupMismatch);
        }
        if coords.iter().zip(&self.factors).any(|(c, d)| c >= d) {
            return Err(Error::GroupMismatch);
        }
        Ok(())
    }

    pub fn add(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check_coords(&g.coords)?;
        self.check_coords(&h.coords)?;
        Ok(GroupElement {
            coords: g
                .coords
                .iter()
                .zip(&h.coords)
                .zip(&self.factors)
                .map(|((a, b), d)| (a + b) % d)
                .collect(),
        })
    }

    pub fn neg(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check_coords(&g.coords)?;
        Ok(GroupElement {
            coords: g.coords.iter().zip(&self.factors).map(|(&a, &d)| (d - a) % d).collect(),
        })
    }

    pub fn scale(&self, g: &GroupElement, k: i64) -> Result<GroupElement> {
        self.check_coords(&g.coords)?;
        Ok(GroupElement {
            coords: g
                .coords
                .iter()
                .zip(&self.factors)
                .map(|(&a, &d)| ((a as i128 * k as i128).rem_euclid(d as i128)) as u64)
                .collect(),
        })
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a GroupElement>>(&self, items: I) -> Result<GroupElement> {
        items.into_iter().try_fold(self.identity(), |acc, g| self.add(&acc, g))
    }

    /// Least `k >= 1` with `k * g = 0`.
    pub fn element_order(&self, g: &GroupElement) -> u64 {
        g.coords
            .iter()
            .zip(&self.factors)
            .map(|(&a, &d)| d / a.gcd(&d))
            .fold(1u64, |acc, o| acc.lcm(&o))
    }

    /// All elements, lexicographic in their coordinates.
    pub fn enumerate_elements(&self, cap: u64) -> Result<Vec<GroupElement>> {
        let order = self.order_checked()?;
        if order > cap {
            return Err(Error::TooLarge(format!("group of order {order} exceeds element cap {cap}")));
        }
        Ok((0..order as usize).map(|i| self.element_at(i)).collect())
    }

    /// Mixed-radix index; the first coordinate is most significant so index order
    /// is lexicographic order.
    pub fn index_of(&self, g: &GroupElement) -> usize {
        g.coords
            .iter()
            .zip(&self.factors)
            .fold(0usize, |acc, (&c, &d)| acc * d as usize + c as usize)
    }

    pub fn element_at(&self, mut index: usize) -> GroupElement {
        let mut coords = vec![0u64; self.rank()];
        for (slot, &d) in coords.iter_mut().zip(&self.factors).rev() {
            *slot = (index % d as usize) as u64;
            index /= d as usize;
        }
        GroupElement { coords }
    }
}

impl TryFrom<Vec<u64>> for AbelianGroup {
    type Error = Error;

    fn try_from(factors: Vec<u64>) -> Result<Self> {
        AbelianGroup::new(&factors)
    }
}

impl From<AbelianGroup> for Vec<u64> {
    fn from(g: AbelianGroup) -> Self {
        g.factors
    }
}

impl FromStr for AbelianGroup {
    type Err = Error;

    /// Parses `"d1,d2,..."`; the empty string is the trivial group.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::trivial());
        }
        let factors = s
            .split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad group factor {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        AbelianGroup::new(&factors)
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "trivial");
        }
        let parts: Vec<String> = self.factors.iter().map(|d| format!("Z/{d}")).collect();
        write!(f, "{}", parts.join(" x "))
    }
}

/// Index-level arithmetic for hot loops. Elements are addressed by `index_of`.
#[derive(Debug, Clone)]
pub struct IndexedGroup {
    group: AbelianGroup,
    add: Option<Vec<u32>>,
    neg: Vec<usize>,
}

const ADD_TABLE_LIMIT: u64 = 128;

impl IndexedGroup {
    pub fn new(group: &AbelianGroup, cap: u64) -> Result<Self> {
        let elements = group.enumerate_elements(cap)?;
        let n = elements.len();
        let neg = elements.iter().map(|g| group.index_of(&group.neg(g).expect("own element"))).collect();
        let add = (n as u64 <= ADD_TABLE_LIMIT).then(|| {
            let mut table = vec![0u32; n * n];
            for (i, g) in elements.iter().enumerate() {
                for (j, h) in elements.iter().enumerate() {
                    table[i * n + j] = group.index_of(&group.add(g, h).expect("own element")) as u32;
                }
            }
            table
        });
        Ok(IndexedGroup { group: group.clone(), add, neg })
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.neg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neg.is_empty()
    }

    #[inline]
    pub fn add(&self, i: usize, j: usize) -> usize {
        match &self.add {
            Some(table) => table[i * self.len() + j] as usize,
            None => {
                let mut out = 0usize;
                let mut stride = 1usize;
                let (mut a, mut b) = (i, j);
                for &d in self.group.factors.iter().rev() {
                    let d = d as usize;
                    out += ((a % d + b % d) % d) * stride;
                    stride *= d;
                    a /= d;
                    b /= d;
                }
                out
            }
        }
    }

    #[inline]
    pub fn neg(&self, i: usize) -> usize {
        self.neg[i]
    }
}
