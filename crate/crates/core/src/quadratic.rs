//! Positive definite binary quadratic forms of negative fundamental
//! discriminant and the form class group.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::arith::{exact_sqrt, is_prime, is_squarefree, isqrt, kronecker, square_split, sqrt_mod_prime};
use crate::error::{Error, Result};
use crate::group::{AbelianGroup, GroupElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Discriminant(i64);

/// Validates a negative fundamental discriminant.
pub fn check_fundamental(d: i64) -> Result<Discriminant> {
    if d >= 0 {
        return Err(Error::Unsupported(d));
    }
    let ok = match d.rem_euclid(4) {
        1 => is_squarefree(d.unsigned_abs()),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m.unsigned_abs())
        }
        _ => false,
    };
    if ok {
        Ok(Discriminant(d))
    } else {
        Err(Error::NotFundamental(d))
    }
}

impl Discriminant {
    /// Accepts either a fundamental discriminant or a squarefree radicand `m`
    /// with `m = 2, 3 mod 4`, which names the field `Q(sqrt m)` of discriminant `4m`.
    pub fn of_field(d: i64) -> Result<Discriminant> {
        match check_fundamental(d) {
            Ok(disc) => Ok(disc),
            Err(Error::NotFundamental(_)) if matches!(d.rem_euclid(4), 2 | 3) && is_squarefree(d.unsigned_abs()) => {
                d.checked_mul(4).map(Discriminant).ok_or(Error::NotFundamental(d))
            }
            Err(e) => Err(e),
        }
    }

    pub fn value(self) -> i64 {
        self.0
    }

    /// Squarefree `m` with `K = Q(sqrt m)`.
    pub fn radicand(self) -> i64 {
        if self.0 % 4 == 0 {
            self.0 / 4
        } else {
            self.0
        }
    }

    pub fn principal_form(self) -> QuadForm {
        let b = self.0.rem_euclid(2);
        QuadForm::new(1, b, (b * b - self.0) / 4)
    }
}

impl fmt::Display for Discriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `a x^2 + b x y + c y^2`, serialized as `[a, b, c]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i64; 3]", into = "[i64; 3]")]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl From<[i64; 3]> for QuadForm {
    fn from([a, b, c]: [i64; 3]) -> Self {
        QuadForm { a, b, c }
    }
}

impl From<QuadForm> for [i64; 3] {
    fn from(f: QuadForm) -> Self {
        [f.a, f.b, f.c]
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

impl QuadForm {
    pub const fn new(a: i64, b: i64, c: i64) -> Self {
        QuadForm { a, b, c }
    }

    pub fn disc(&self) -> i128 {
        self.b as i128 * self.b as i128 - 4 * self.a as i128 * self.c as i128
    }

    pub fn is_primitive(&self) -> bool {
        self.a.gcd(&self.b).gcd(&self.c) == 1
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0 && self.disc() < 0
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        b.abs() <= a && a <= c && (b >= 0 || (b.abs() != a && a != c))
    }

    /// `a | b`: the linear factors over `K(sqrt a)` are integral exactly then.
    pub fn is_ambiguous(&self) -> bool {
        self.a != 0 && self.b % self.a == 0
    }

    pub fn eval(&self, x: i64, y: i64) -> i128 {
        let (x, y) = (x as i128, y as i128);
        self.a as i128 * x * x + self.b as i128 * x * y + self.c as i128 * y * y
    }

    /// Inverse class representative.
    pub fn opposite(&self) -> QuadForm {
        QuadForm::new(self.a, -self.b, self.c)
    }
}

/// Unique reduced form properly equivalent to `f`.
pub fn reduce_form(f: &QuadForm) -> Result<QuadForm> {
    if !f.is_positive_definite() {
        return Err(Error::InvalidForm(format!("{f} is not positive definite")));
    }
    if !f.is_primitive() {
        return Err(Error::InvalidForm(format!("{f} is not primitive")));
    }
    let (mut a, mut b, mut c) = (f.a as i128, f.b as i128, f.c as i128);
    loop {
        // move b into (-a, a]
        if !(-a < b && b <= a) {
            let r = Integer::div_floor(&(a - b), &(2 * a));
            c += r * (a * r + b);
            b += 2 * r * a;
        }
        if a > c {
            std::mem::swap(&mut a, &mut c);
            b = -b;
            continue;
        }
        if a == c && b < 0 {
            b = -b;
        }
        break;
    }
    let out = |v: i128| i64::try_from(v).map_err(|_| Error::InvalidForm(format!("{f}: coefficients overflow")));
    Ok(QuadForm::new(out(a)?, out(b)?, out(c)?))
}

/// All reduced primitive forms of discriminant `disc`, ordered by `(a, b)`,
/// so the principal form comes first.
pub fn reduced_forms(disc: Discriminant) -> Vec<QuadForm> {
    let d = disc.value() as i128;
    let a_max = isqrt((d.unsigned_abs()) / 3) as i64;
    let mut forms = Vec::new();
    for a in 1..=a_max {
        for b in -a..=a {
            if (b as i128 - d).rem_euclid(2) != 0 {
                continue;
            }
            let num = b as i128 * b as i128 - d;
            if num % (4 * a as i128) != 0 {
                continue;
            }
            let c = (num / (4 * a as i128)) as i64;
            let f = QuadForm::new(a, b, c);
            if f.is_reduced() && f.is_primitive() {
                forms.push(f);
            }
        }
    }
    forms
}

/// Element `(x + y sqrt(disc)) / 2` of `O_K`, stored as `(x, y)`.
type HalfPair = (i128, i128);

fn half_mul(p: HalfPair, q: HalfPair, d: i128) -> HalfPair {
    ((p.0 * q.0 + d * p.1 * q.1) / 2, (p.0 * q.1 + p.1 * q.0) / 2)
}

/// Composition through the product of the ideals `[a, (-b + sqrt disc) / 2]`.
pub fn compose(f: &QuadForm, g: &QuadForm, disc: Discriminant) -> Result<QuadForm> {
    let d = disc.value() as i128;
    for h in [f, g] {
        if h.disc() != d {
            return Err(Error::InvalidForm(format!("{h} does not have discriminant {disc}")));
        }
        if !h.is_positive_definite() || !h.is_primitive() {
            return Err(Error::InvalidForm(format!("{h} is not primitive positive definite")));
        }
    }
    let gens_f = [(2 * f.a as i128, 0), (-(f.b as i128), 1)];
    let gens_g = [(2 * g.a as i128, 0), (-(g.b as i128), 1)];
    let mut rows: Vec<HalfPair> = Vec::with_capacity(4);
    for p in gens_f {
        for q in gens_g {
            rows.push(half_mul(p, q, d));
        }
    }
    // Hermite normal form of the 4 x 2 integer matrix: one row (x2, g), the rest (x, 0).
    loop {
        let Some(pivot) = (0..rows.len()).filter(|&i| rows[i].1 != 0).min_by_key(|&i| rows[i].1.abs()) else {
            return Err(Error::Internal("degenerate ideal product".into()));
        };
        let mut changed = false;
        for i in 0..rows.len() {
            if i != pivot && rows[i].1 != 0 {
                let q = rows[i].1 / rows[pivot].1;
                rows[i].0 -= q * rows[pivot].0;
                rows[i].1 -= q * rows[pivot].1;
                changed = true;
            }
        }
        if !changed {
            let (mut x2, mut g) = rows[pivot];
            if g < 0 {
                x2 = -x2;
                g = -g;
            }
            let x1 = rows.iter().enumerate().filter(|&(i, _)| i != pivot).fold(0i128, |acc, (_, r)| acc.gcd(&r.0));
            if x1 == 0 || x1 % (2 * g) != 0 || x2 % g != 0 {
                return Err(Error::Internal(format!("ideal product of {f} and {g} not of expected shape")));
            }
            let a = x1 / (2 * g);
            let b = (-x2 / g).rem_euclid(2 * a);
            let num = b * b - d;
            if num % (4 * a) != 0 {
                return Err(Error::Internal(format!("composite of {f} and {g} is not integral")));
            }
            let c = num / (4 * a);
            let to64 = |v: i128| i64::try_from(v).map_err(|_| Error::InvalidForm("composite overflows".into()));
            return reduce_form(&QuadForm::new(to64(a)?, to64(b)?, to64(c)?));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplittingType {
    Inert,
    Split,
    Ramified,
}

pub fn splitting_type(p: u64, disc: Discriminant) -> Result<SplittingType> {
    if !is_prime(p) {
        return Err(Error::InvalidPrime(p));
    }
    let d = disc.value();
    Ok(if d.unsigned_abs() % p == 0 {
        SplittingType::Ramified
    } else if kronecker(d, p) == 1 {
        SplittingType::Split
    } else {
        SplittingType::Inert
    })
}

/// Form `(p, b, c)` attached to a prime ideal above `p`.
pub fn prime_form(p: u64, disc: Discriminant) -> Result<QuadForm> {
    let d = disc.value();
    if splitting_type(p, disc)? == SplittingType::Inert {
        return Err(Error::NoFiniteClass(p));
    }
    let b: i64 = if p == 2 {
        (0..4).find(|b: &i64| (b * b - d).rem_euclid(8) == 0).expect("2 is not inert")
    } else {
        let r = sqrt_mod_prime(d, p).expect("p is not inert") as i64;
        if (r - d).rem_euclid(2) == 0 {
            r
        } else {
            p as i64 - r
        }
    };
    let p = p as i64;
    let c = ((b as i128 * b as i128 - d as i128) / (4 * p as i128)) as i64;
    Ok(QuadForm::new(p, b, c))
}

/// All `(x, y)` with `f(x, y) = m`, in the preferred order: `x >= 0` first,
/// then smaller `x`, then `y >= 0`, then smaller `|y|`.
pub fn representations(f: &QuadForm, m: u64) -> Vec<(i64, i64)> {
    let d = f.disc();
    if d >= 0 || f.a <= 0 {
        return Vec::new();
    }
    let (a, b) = (f.a as i128, f.b as i128);
    let four_am = 4 * a * m as i128;
    // (2ax + by)^2 + |d| y^2 = 4am
    let y_max = isqrt((four_am / -d) as u128) as i128;
    let mut sols = Vec::new();
    for y in -y_max..=y_max {
        let Some(s) = exact_sqrt(four_am + d * y * y) else {
            continue;
        };
        for t in [s, -s] {
            let num = t - b * y;
            if num % (2 * a) == 0 {
                let x = num / (2 * a);
                let sol = (x as i64, y as i64);
                if !sols.contains(&sol) {
                    sols.push(sol);
                }
            }
        }
    }
    sols.sort_by_key(|&(x, y)| (x < 0, x.abs(), y < 0, y.abs()));
    sols
}

/// Preferred representation of `m` by `f`, or `None` when `m` is not represented.
pub fn represent(f: &QuadForm, m: u64) -> Option<(i64, i64)> {
    representations(f, m).into_iter().next()
}

/// The form class group with an explicit isomorphism to an invariant-factor group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormClassGroup {
    disc: Discriminant,
    reduced: Vec<QuadForm>,
    group: AbelianGroup,
    /// `classes[i]` is the class of `reduced[i]`.
    classes: Vec<GroupElement>,
    /// Reduced forms mapping to the standard basis vectors.
    generators: Vec<QuadForm>,
    ambiguous: Vec<AmbiguousRep>,
    #[serde(skip)]
    index: HashMap<QuadForm, usize>,
    #[serde(skip)]
    form_at: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguousRep {
    pub class: GroupElement,
    pub form: QuadForm,
}

impl FormClassGroup {
    pub fn new(disc: Discriminant) -> Result<Self> {
        let reduced = reduced_forms(disc);
        let h = reduced.len();
        let index: HashMap<QuadForm, usize> = reduced.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        let mul = |i: usize, j: usize| -> Result<usize> {
            let f = compose(&reduced[i], &reduced[j], disc)?;
            index.get(&f).copied().ok_or_else(|| Error::Internal(format!("{f} missing from reduced list")))
        };
        let pow = |i: usize, mut k: u64| -> Result<usize> {
            let (mut acc, mut base) = (0usize, i);
            while k > 0 {
                if k & 1 == 1 {
                    acc = mul(acc, base)?;
                }
                base = mul(base, base)?;
                k >>= 1;
            }
            Ok(acc)
        };
        let order_of = |i: usize| -> Result<u64> {
            let (mut x, mut n) = (i, 1u64);
            while x != 0 {
                x = mul(x, i)?;
                n += 1;
            }
            Ok(n)
        };

        // Basis per Sylow subgroup, then merged into invariant-factor generators.
        let mut columns: Vec<Vec<(usize, u64)>> = Vec::new();
        for (p, v) in crate::arith::factor(h as u64) {
            let pv = p.pow(v);
            let cofactor = h as u64 / pv;
            let mut sylow: Vec<usize> = (0..h).map(|i| pow(i, cofactor)).collect::<Result<_>>()?;
            sylow.sort_unstable();
            sylow.dedup();
            let orders: Vec<u64> = sylow.iter().map(|&i| order_of(i)).collect::<Result<_>>()?;
            let exps = sylow_exponents(p, &orders);
            let basis = sylow_basis(&sylow, &orders, &exps, p, &mul)?;
            columns.push(basis.into_iter().zip(exps.iter().map(|&e| p.pow(e))).collect());
        }
        let rank = columns.iter().map(Vec::len).max().unwrap_or(0);
        let mut gens: Vec<(usize, u64)> = vec![(0, 1); rank];
        for col in &columns {
            // col is sorted by ascending exponent; align with the largest factors
            for (k, &(g, ord)) in col.iter().enumerate() {
                let slot = rank - col.len() + k;
                gens[slot] = (mul(gens[slot].0, g)?, gens[slot].1 * ord);
            }
        }
        let factors: Vec<u64> = gens.iter().map(|g| g.1).collect();
        let group = AbelianGroup::new(&factors)?;
        if group.invariant_factors() != factors.as_slice() {
            return Err(Error::Internal("generator orders are not invariant factors".into()));
        }

        let mut classes: Vec<Option<GroupElement>> = vec![None; h];
        let mut form_at = vec![0usize; h];
        for (idx, slot) in form_at.iter_mut().enumerate() {
            let el = group.element_at(idx);
            let mut f = 0usize;
            for (&(g, _), &c) in gens.iter().zip(el.coords()) {
                f = mul(f, pow(g, c)?)?;
            }
            if classes[f].is_some() {
                return Err(Error::Internal("class map is not injective".into()));
            }
            classes[f] = Some(el);
            *slot = f;
        }
        let classes: Vec<GroupElement> = classes.into_iter().map(|c| c.expect("bijective")).collect();
        let generators = gens.iter().map(|&(g, _)| reduced[g]).collect();
        let mut fcg = FormClassGroup { disc, reduced, group, classes, generators, ambiguous: Vec::new(), index, form_at };
        fcg.ambiguous = fcg.search_ambiguous()?;
        Ok(fcg)
    }

    /// Rebuilds lookup tables after deserialization and checks consistency.
    pub fn from_parts_checked(mut self) -> Result<Self> {
        self.index = self.reduced.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        self.form_at = vec![0; self.reduced.len()];
        if self.classes.len() != self.reduced.len() || self.group.order() as usize != self.reduced.len() {
            return Err(Error::Parse("class group data is inconsistent".into()));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if !self.group.contains(c) {
                return Err(Error::Parse("class outside group".into()));
            }
            self.form_at[self.group.index_of(c)] = i;
        }
        Ok(self)
    }

    fn search_ambiguous(&self) -> Result<Vec<AmbiguousRep>> {
        let d = self.disc.value() as i128;
        let wanted: Vec<GroupElement> = self
            .group
            .enumerate_elements(self.group.order())?
            .into_iter()
            .filter(|g| self.group.element_order(g) <= 2)
            .collect();
        let mut found: HashMap<GroupElement, QuadForm> = HashMap::new();
        let limit = self.disc.value().unsigned_abs() as i64;
        'passes: for squarefree_only in [true, false] {
            for a in 1..=limit {
                if squarefree_only && !is_squarefree(a as u64) {
                    continue;
                }
                for b in [0, a] {
                    if (b as i128 - d).rem_euclid(2) != 0 {
                        continue;
                    }
                    let num = b as i128 * b as i128 - d;
                    if num % (4 * a as i128) != 0 {
                        continue;
                    }
                    let f = QuadForm::new(a, b, (num / (4 * a as i128)) as i64);
                    if !f.is_primitive() {
                        continue;
                    }
                    let class = self.class_of(&f)?;
                    found.entry(class).or_insert(f);
                    if found.len() == wanted.len() {
                        break 'passes;
                    }
                }
            }
        }
        if found.len() != wanted.len() {
            return Err(Error::Internal(format!("missing ambiguous representatives for {}", self.disc)));
        }
        let mut reps: Vec<AmbiguousRep> = found.into_iter().map(|(class, form)| AmbiguousRep { class, form }).collect();
        reps.sort_by_key(|r| self.group.index_of(&r.class));
        Ok(reps)
    }

    pub fn disc(&self) -> Discriminant {
        self.disc
    }

    pub fn reduced(&self) -> &[QuadForm] {
        &self.reduced
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn class_number(&self) -> u64 {
        self.reduced.len() as u64
    }

    pub fn generators(&self) -> &[QuadForm] {
        &self.generators
    }

    pub fn principal(&self) -> QuadForm {
        self.reduced[0]
    }

    /// Class of an arbitrary primitive form of this discriminant.
    pub fn class_of(&self, f: &QuadForm) -> Result<GroupElement> {
        if f.disc() != self.disc.value() as i128 {
            return Err(Error::InvalidForm(format!("{f} does not have discriminant {}", self.disc)));
        }
        let r = reduce_form(f)?;
        let i = self.index.get(&r).ok_or_else(|| Error::Internal(format!("{r} missing from reduced list")))?;
        Ok(self.classes[*i].clone())
    }

    /// Reduced form of a class.
    pub fn form_of(&self, g: &GroupElement) -> Result<QuadForm> {
        if !self.group.contains(g) {
            return Err(Error::GroupMismatch);
        }
        Ok(self.reduced[self.form_at[self.group.index_of(g)]])
    }

    pub fn compose(&self, f: &QuadForm, g: &QuadForm) -> Result<QuadForm> {
        compose(f, g, self.disc)
    }

    /// One ambiguous form per class of order at most 2, keyed by class.
    pub fn ambiguous_representatives(&self) -> &[AmbiguousRep] {
        &self.ambiguous
    }

    pub fn ambiguous_for(&self, class: &GroupElement) -> Option<&QuadForm> {
        self.ambiguous.iter().find(|r| &r.class == class).map(|r| &r.form)
    }

    /// Number of even invariant factors.
    pub fn two_rank(&self) -> usize {
        self.group.invariant_factors().iter().filter(|&&d| d % 2 == 0).count()
    }

    /// Class of the prime ideal attached to `prime_form(p)`.
    pub fn class_of_prime(&self, p: u64) -> Result<GroupElement> {
        self.class_of(&prime_form(p, self.disc)?)
    }

    pub fn splitting_type(&self, p: u64) -> Result<SplittingType> {
        splitting_type(p, self.disc)
    }
}

/// Exponents `e_1 <= e_2 <= ...` of a p-group from its element orders.
fn sylow_exponents(p: u64, orders: &[u64]) -> Vec<u32> {
    // |G[p^k]| = p^{sum min(k, e_i)}; the number of e_i >= k is log_p(|G[p^k]| / |G[p^{k-1}]|)
    let max_e = orders.iter().map(|&o| log_p(p, o)).max().unwrap_or(0);
    let mut at_least = Vec::new();
    let mut prev = 1u64;
    for k in 1..=max_e {
        let size = orders.iter().filter(|&&o| p.pow(k) % o == 0).count() as u64;
        at_least.push(log_p(p, size / prev) as usize);
        prev = size;
    }
    let mut exps = Vec::new();
    for k in (1..=max_e).rev() {
        let count = at_least[k as usize - 1] - if (k as usize) < at_least.len() { at_least[k as usize] } else { 0 };
        exps.extend(std::iter::repeat(k).take(count));
    }
    exps.reverse();
    exps
}

fn log_p(p: u64, mut n: u64) -> u32 {
    let mut k = 0;
    while n > 1 {
        n /= p;
        k += 1;
    }
    k
}

/// Independent elements of orders `p^e` for the given exponents, ascending.
fn sylow_basis(
    sylow: &[usize],
    orders: &[u64],
    exps: &[u32],
    p: u64,
    mul: &dyn Fn(usize, usize) -> Result<usize>,
) -> Result<Vec<usize>> {
    fn span(gens: &[usize], mul: &dyn Fn(usize, usize) -> Result<usize>) -> Result<HashSet<usize>> {
        let mut set: HashSet<usize> = HashSet::from([0]);
        let mut frontier = vec![0usize];
        while let Some(x) = frontier.pop() {
            for &g in gens {
                let y = mul(x, g)?;
                if set.insert(y) {
                    frontier.push(y);
                }
            }
        }
        Ok(set)
    }

    fn rec(
        k: usize,
        chosen: &mut Vec<usize>,
        sylow: &[usize],
        orders: &[u64],
        targets: &[u64],
        mul: &dyn Fn(usize, usize) -> Result<usize>,
    ) -> Result<bool> {
        if k == targets.len() {
            return Ok(true);
        }
        let expected: u64 = targets[..=k].iter().product();
        for (&x, &o) in sylow.iter().zip(orders) {
            if o != targets[k] {
                continue;
            }
            chosen.push(x);
            if span(chosen, mul)?.len() as u64 == expected && rec(k + 1, chosen, sylow, orders, targets, mul)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }

    // choose largest orders first, report ascending
    let targets: Vec<u64> = exps.iter().rev().map(|&e| p.pow(e)).collect();
    let mut chosen = Vec::new();
    if !rec(0, &mut chosen, sylow, orders, &targets, mul)? {
        return Err(Error::Internal("no basis found for Sylow subgroup".into()));
    }
    chosen.reverse();
    Ok(chosen)
}

/// Squarefree part of a positive integer.
pub fn squarefree_part(a: u64) -> u64 {
    square_split(a as i64).0 as u64
}
