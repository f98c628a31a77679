//! Irreducible factorizations of rational integers in the ring of integers of
//! an imaginary quadratic field.
//!
//! Primes of `n` are turned into class-labelled symbols, the symbolic
//! factorizations are the minimal zero-sum partitions of that sequence, and in
//! explicit mode each block is multiplied out from the linear factors of
//! ambiguous forms.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::arith::factor;
use crate::blocks::{self, ClassSequence, Limits};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::kfield::{beta_of, checked_graded_mul, descend_to_k, GradedNumber, KNumber, QuadField, Rational, Sign};
use crate::quadratic::{represent, FormClassGroup, QuadForm, SplittingType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrimeKind {
    Inert,
    SplitHalf,
    SplitHalfConj,
    Ramified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealEntry {
    pub id: String,
    pub prime: u64,
    pub kind: PrimeKind,
    pub class: GroupElement,
    pub exponent: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealFactorization {
    pub n: u64,
    pub entries: Vec<IdealEntry>,
}

impl IdealFactorization {
    /// `|n|` rebuilt from the ideal exponents.
    pub fn norm_product(&self) -> u128 {
        self.entries
            .iter()
            .map(|e| match e.kind {
                PrimeKind::Inert => (e.prime as u128).pow(e.exponent),
                PrimeKind::SplitHalf => (e.prime as u128).pow(e.exponent),
                PrimeKind::SplitHalfConj => 1,
                PrimeKind::Ramified => (e.prime as u128).pow(e.exponent / 2),
            })
            .product()
    }

    /// Norm of the prime ideal behind a symbol.
    fn symbol_norm(&self, id: &str) -> Option<u128> {
        let e = self.entries.iter().find(|e| e.id == id)?;
        Some(match e.kind {
            PrimeKind::Inert => (e.prime as u128).pow(2),
            _ => e.prime as u128,
        })
    }
}

pub fn ideal_factorization(n: u64, cg: &FormClassGroup) -> Result<IdealFactorization> {
    if n <= 1 {
        return Err(Error::InvalidInput(format!("n must be > 1, got {n}")));
    }
    ideal_factorization_from(n, &factor(n), cg)
}

/// As [`ideal_factorization`] with the prime factorization of `n` supplied.
pub fn ideal_factorization_from(n: u64, primes: &[(u64, u32)], cg: &FormClassGroup) -> Result<IdealFactorization> {
    let check: Option<u64> = primes.iter().try_fold(1u64, |acc, &(p, e)| acc.checked_mul(p.checked_pow(e)?));
    if check != Some(n) || n <= 1 {
        return Err(Error::InvalidInput(format!("supplied factorization does not multiply to {n}")));
    }
    let group = cg.group();
    let mut sorted = primes.to_vec();
    sorted.sort_unstable();
    let mut entries = Vec::new();
    for (p, v) in sorted {
        match cg.splitting_type(p)? {
            SplittingType::Inert => entries.push(IdealEntry {
                id: format!("i{p}"),
                prime: p,
                kind: PrimeKind::Inert,
                class: group.identity(),
                exponent: v,
            }),
            SplittingType::Ramified => entries.push(IdealEntry {
                id: format!("r{p}"),
                prime: p,
                kind: PrimeKind::Ramified,
                class: cg.class_of_prime(p)?,
                exponent: 2 * v,
            }),
            SplittingType::Split => {
                let c = cg.class_of_prime(p)?;
                let cbar = group.neg(&c)?;
                entries.push(IdealEntry { id: format!("q{p}"), prime: p, kind: PrimeKind::SplitHalf, class: c, exponent: v });
                entries.push(IdealEntry {
                    id: format!("q{p}_bar"),
                    prime: p,
                    kind: PrimeKind::SplitHalfConj,
                    class: cbar,
                    exponent: v,
                });
            }
        }
    }
    Ok(IdealFactorization { n, entries })
}

pub fn class_sequence_of(fact: &IdealFactorization, cg: &FormClassGroup) -> Result<ClassSequence> {
    let mut seq = ClassSequence::empty(cg.group().clone());
    for e in &fact.entries {
        seq.push(e.id.clone(), e.class.clone(), e.exponent)?;
    }
    Ok(seq)
}

/// Number of non-associate irreducible factorizations of `n`.
pub fn eta(n: u64, cg: &FormClassGroup, limits: &Limits) -> Result<u128> {
    let fact = ideal_factorization(n, cg)?;
    eta_of(&fact, cg, limits)
}

pub fn eta_of(fact: &IdealFactorization, cg: &FormClassGroup, limits: &Limits) -> Result<u128> {
    if fact.entries.iter().all(|e| e.class.is_identity()) {
        return Ok(1);
    }
    let seq = class_sequence_of(fact, cg)?;
    blocks::count_partitions(&seq, limits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Symbolic,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub n: u64,
    pub disc: i64,
    pub eta: u128,
    pub lengths: BTreeSet<usize>,
    /// Each partition as a list of blocks, each block a list of symbol ids.
    pub partitions: Vec<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Vec<Vec<KNumber>>>,
    /// Unit folded into the first element of each explicit factorization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<Vec<KNumber>>,
    pub mode: Mode,
}

/// Generator in the principalization field for each symbol of the sequence.
fn symbol_generators(fact: &IdealFactorization, cg: &FormClassGroup, k: &QuadField) -> Result<BTreeMap<String, GradedNumber>> {
    let group = cg.group();
    let mut out = BTreeMap::new();
    for e in &fact.entries {
        if group.element_order(&e.class) > 2 {
            return Err(Error::ExplicitUnavailable(format!(
                "prime {} lies in a class of order {}",
                e.prime,
                group.element_order(&e.class)
            )));
        }
        let g = match e.kind {
            PrimeKind::Inert => GradedNumber::in_k(KNumber::from_int(e.prime as i128)),
            kind => {
                let form: QuadForm = *cg
                    .ambiguous_for(&e.class)
                    .ok_or_else(|| Error::Internal(format!("no ambiguous form for class {}", e.class)))?;
                let (x, y) = represent(&form, e.prime)
                    .ok_or_else(|| Error::Internal(format!("{form} does not represent {}", e.prime)))?;
                let sign = if kind == PrimeKind::SplitHalfConj { Sign::Minus } else { Sign::Plus };
                beta_of(k, &form, x, y, sign)?
            }
        };
        out.insert(e.id.clone(), g);
    }
    Ok(out)
}

fn overflow() -> Error {
    Error::TooLarge("explicit element exceeds 128-bit rational arithmetic".into())
}

/// Symbolic factorizations of `n`, and explicit elements when requested.
pub fn enumerate(n: u64, cg: &FormClassGroup, want_explicit: bool, limits: &Limits) -> Result<FactorizationReport> {
    let fact = ideal_factorization(n, cg)?;
    enumerate_from(&fact, cg, want_explicit, limits)
}

pub fn enumerate_from(
    fact: &IdealFactorization,
    cg: &FormClassGroup,
    want_explicit: bool,
    limits: &Limits,
) -> Result<FactorizationReport> {
    let seq = class_sequence_of(fact, cg)?;
    let parts = blocks::enumerate_partitions(&seq, limits)?;
    let partitions: Vec<Vec<Vec<String>>> = parts.iter().map(|p| p.ids(&seq)).collect();
    let lengths = parts.iter().map(|p| p.len()).collect();
    let mut report = FactorizationReport {
        n: fact.n,
        disc: cg.disc().value(),
        eta: parts.len() as u128,
        lengths,
        partitions,
        explicit: None,
        units: None,
        mode: Mode::Symbolic,
    };
    if !want_explicit {
        return Ok(report);
    }

    let k = QuadField::new(cg.disc());
    let gens = symbol_generators(fact, cg, &k)?;
    let target = KNumber::from_int(fact.n as i128);
    let mut explicit = Vec::with_capacity(report.partitions.len());
    let mut units = Vec::with_capacity(report.partitions.len());
    for partition in &report.partitions {
        let mut elements = Vec::with_capacity(partition.len());
        for block in partition {
            let mut acc = GradedNumber::in_k(KNumber::one());
            for id in block {
                acc = checked_graded_mul(&k, &acc, &gens[id]).ok_or_else(overflow)?;
            }
            let alpha = descend_to_k(&k, &acc)
                .ok_or_else(|| Error::Internal(format!("block {block:?} does not descend to K (radicand {})", acc.d())))?;
            elements.push(alpha);
        }
        let mut product = KNumber::one();
        for x in &elements {
            product = k.checked_mul(&product, x).ok_or_else(overflow)?;
        }
        let unit = k
            .unit_ratio(&product, &target)
            .ok_or_else(|| Error::Internal(format!("explicit product {product} is not a unit multiple of {}", fact.n)))?;
        if let Some(first) = elements.first_mut() {
            let inv = k.checked_div(&KNumber::one(), &unit).ok_or_else(overflow)?;
            *first = k.checked_mul(first, &inv).ok_or_else(overflow)?;
        }
        explicit.push(elements);
        units.push(unit);
    }
    report.explicit = Some(explicit);
    report.units = Some(units);
    report.mode = Mode::Explicit;
    Ok(report)
}

/// `eta(p^n)` from the class order `m` of a prime above `p`.
pub fn closed_form_prime_power(p: u64, n: u32, cg: &FormClassGroup) -> Result<u128> {
    match cg.splitting_type(p)? {
        SplittingType::Inert | SplittingType::Ramified => Ok(1),
        SplittingType::Split => {
            let m = cg.group().element_order(&cg.class_of_prime(p)?);
            Ok(if m == 1 { 1 } else { (n as u64 / m) as u128 + 1 })
        }
    }
}

/// Partitions of `k` labelled items into blocks of size `m`: `k! / ((m!)^{k/m} (k/m)!)`.
pub fn closed_form_distinct_same_class(k: u64, m: u64) -> Result<u128> {
    if m == 0 || k % m != 0 {
        return Err(Error::NoPartition(format!("{m} does not divide {k}")));
    }
    let fact = |x: u64| -> Option<u128> { (1..=x as u128).try_fold(1u128, |acc, i| acc.checked_mul(i)) };
    let too_large = || Error::TooLarge(format!("{k}! overflows 128 bits"));
    let num = fact(k).ok_or_else(too_large)?;
    let mf = fact(m).ok_or_else(too_large)?;
    let den = (0..k / m).try_fold(1u128, |acc, _| acc.checked_mul(mf)).ok_or_else(too_large)?;
    let den = den.checked_mul(fact(k / m).ok_or_else(too_large)?).ok_or_else(too_large)?;
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub ok: bool,
    pub reasons: Vec<String>,
}

/// Every proper nonempty sub-multiset checked directly.
fn block_is_minimal(cg: &FormClassGroup, classes: &[GroupElement]) -> bool {
    let g = cg.group();
    let n = classes.len();
    if n == 0 || n > 24 {
        return false;
    }
    let sum_of = |mask: u32| -> GroupElement {
        (0..n).filter(|i| mask >> i & 1 == 1).fold(g.identity(), |acc, i| g.add(&acc, &classes[i]).expect("same group"))
    };
    let full = (1u32 << n) - 1;
    sum_of(full).is_identity() && (1..full).all(|mask| !sum_of(mask).is_identity())
}

fn canonical_associate(k: &QuadField, x: &KNumber) -> (Rational, Rational) {
    k.units()
        .iter()
        .map(|e| k.mul(e, x))
        .map(|y| (y.u, y.v))
        .min()
        .expect("units are nonempty")
}

/// Certificate check of an explicit report, independent of the enumerator.
pub fn verify(report: &FactorizationReport, cg: &FormClassGroup) -> Verdict {
    let mut reasons = Vec::new();
    let k = QuadField::new(cg.disc());
    if report.disc != cg.disc().value() {
        reasons.push(format!("report is for discriminant {}, not {}", report.disc, cg.disc()));
    }
    let Some(explicit) = &report.explicit else {
        return Verdict { ok: false, reasons: vec!["report has no explicit elements".into()] };
    };
    let fact = match ideal_factorization(report.n, cg) {
        Ok(f) => f,
        Err(e) => return Verdict { ok: false, reasons: vec![format!("cannot factor n: {e}")] },
    };
    let class_of: BTreeMap<&str, &GroupElement> = fact.entries.iter().map(|e| (e.id.as_str(), &e.class)).collect();
    let expected: BTreeMap<&str, u32> = fact.entries.iter().map(|e| (e.id.as_str(), e.exponent)).collect();
    if report.eta as usize != report.partitions.len() || explicit.len() != report.partitions.len() {
        reasons.push("eta, partitions and explicit factorizations disagree in number".into());
    }
    let target = KNumber::from_int(report.n as i128);

    let mut canon: Vec<Vec<(Rational, Rational)>> = Vec::new();
    for (pi, (partition, elements)) in report.partitions.iter().zip(explicit).enumerate() {
        if partition.len() != elements.len() {
            reasons.push(format!("factorization {pi}: {} blocks but {} elements", partition.len(), elements.len()));
        }
        let mut used: BTreeMap<&str, u32> = BTreeMap::new();
        for (bi, block) in partition.iter().enumerate() {
            let mut classes = Vec::with_capacity(block.len());
            let mut norm = 1u128;
            for id in block {
                *used.entry(id.as_str()).or_default() += 1;
                match class_of.get(id.as_str()) {
                    Some(c) => classes.push((*c).clone()),
                    None => reasons.push(format!("factorization {pi}: unknown symbol {id}")),
                }
                norm = norm.saturating_mul(fact.symbol_norm(id).unwrap_or(0));
            }
            if !block_is_minimal(cg, &classes) {
                reasons.push(format!("factorization {pi}, block {bi}: non-minimal block"));
            }
            if let Some(x) = elements.get(bi) {
                match k.checked_norm(x) {
                    Some(nx) if nx == Rational::from_integer(norm as i128) => {}
                    _ => reasons.push(format!("factorization {pi}, block {bi}: norm mismatch")),
                }
            }
        }
        if used != expected {
            reasons.push(format!("factorization {pi}: blocks do not cover the prime ideal sequence"));
        }
        let mut product = KNumber::one();
        for (ei, x) in elements.iter().enumerate() {
            if !k.is_integral(x) {
                reasons.push(format!("factorization {pi}, element {ei}: not integral"));
            }
            if k.checked_norm(x).map_or(true, |nx| nx.abs().is_one()) {
                reasons.push(format!("factorization {pi}, element {ei}: unit or overflow"));
            }
            match k.checked_mul(&product, x) {
                Some(p) => product = p,
                None => reasons.push(format!("factorization {pi}: product overflows")),
            }
        }
        if !k.associates(&product, &target) {
            reasons.push(format!("factorization {pi}: product is not n up to a unit"));
        }
        let mut c: Vec<_> = elements.iter().map(|x| canonical_associate(&k, x)).collect();
        c.sort();
        canon.push(c);
    }
    for i in 0..canon.len() {
        for j in i + 1..canon.len() {
            if canon[i] == canon[j] {
                reasons.push(format!("factorizations {i} and {j} are associate"));
            }
        }
    }
    Verdict { ok: reasons.is_empty(), reasons }
}
