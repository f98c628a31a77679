//! Zero-sum combinatorics over a finite abelian group.
//!
//! A [`ClassSequence`] is a multiset of labelled symbols, each carrying a group
//! element. Irreducible factorizations correspond to partitions of the sequence
//! into minimal zero-sum blocks; this module enumerates and counts them three
//! ways (explicit enumeration, memoized recursion, generating function) and
//! computes the Davenport constant and elasticity of the group.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{AbelianGroup, GroupElement, IndexedGroup, DEFAULT_ELEMENT_CAP};

pub const DEFAULT_ENUMERATION_CAP: usize = 24;
pub const DEFAULT_DAVENPORT_CAP: u64 = 64;
/// Upper bound on subset-sum states visited by the Davenport search.
pub const DAVENPORT_STATE_BUDGET: usize = 5_000_000;
/// Largest exponent box the generating-function oracle will allocate.
pub const GF_BOX_CAP: u128 = 1 << 22;

/// Size limits shared by the enumeration routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Maximum total length (sum of multiplicities) of a sequence.
    pub enumeration_cap: usize,
    /// Maximum group order for the Davenport search.
    pub davenport_cap: u64,
    pub element_cap: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            davenport_cap: DEFAULT_DAVENPORT_CAP,
            element_cap: DEFAULT_ELEMENT_CAP,
        }
    }
}

impl Limits {
    pub fn with_enumeration_cap(mut self, cap: usize) -> Self {
        self.enumeration_cap = cap;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqEntry {
    pub id: String,
    pub class: GroupElement,
    pub mult: u32,
}

/// Multiset of class-labelled symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSequence")]
pub struct ClassSequence {
    group: AbelianGroup,
    entries: Vec<SeqEntry>,
}

#[derive(Deserialize)]
struct RawSequence {
    group: AbelianGroup,
    entries: Vec<SeqEntry>,
}

impl TryFrom<RawSequence> for ClassSequence {
    type Error = Error;

    fn try_from(raw: RawSequence) -> Result<Self> {
        ClassSequence::new(raw.group, raw.entries)
    }
}

impl ClassSequence {
    pub fn new(group: AbelianGroup, entries: Vec<SeqEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.mult == 0 {
                return Err(Error::InvalidInput(format!("symbol {} has multiplicity 0", e.id)));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate symbol id {}", e.id)));
            }
            if !group.contains(&e.class) {
                return Err(Error::GroupMismatch);
            }
        }
        Ok(ClassSequence { group, entries })
    }

    pub fn empty(group: AbelianGroup) -> Self {
        ClassSequence { group, entries: Vec::new() }
    }

    pub fn push(&mut self, id: impl Into<String>, class: GroupElement, mult: u32) -> Result<()> {
        let id = id.into();
        if mult == 0 {
            return Err(Error::InvalidInput(format!("symbol {id} has multiplicity 0")));
        }
        if self.entries.iter().any(|e| e.id == id) {
            return Err(Error::InvalidInput(format!("duplicate symbol id {id}")));
        }
        if !self.group.contains(&class) {
            return Err(Error::GroupMismatch);
        }
        self.entries.push(SeqEntry { id, class, mult });
        Ok(())
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn entries(&self) -> &[SeqEntry] {
        &self.entries
    }

    pub fn total_length(&self) -> usize {
        self.entries.iter().map(|e| e.mult as usize).sum()
    }

    pub fn multiplicities(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.mult).collect()
    }

    /// Class-sum of the whole sequence.
    pub fn class_sum(&self) -> GroupElement {
        self.entries
            .iter()
            .map(|e| self.group.scale(&e.class, e.mult as i64).expect("validated"))
            .fold(self.group.identity(), |acc, g| self.group.add(&acc, &g).expect("validated"))
    }

    /// Same sequence with the symbols reordered by `perm` (`perm[i]` is the old
    /// position of the new `i`-th entry).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        ClassSequence {
            group: self.group.clone(),
            entries: perm.iter().map(|&i| self.entries[i].clone()).collect(),
        }
    }

    /// Parses `id:c1.c2:mult,...`; an empty string is the empty sequence.
    pub fn from_spec(group: &AbelianGroup, spec: &str) -> Result<Self> {
        let mut seq = ClassSequence::empty(group.clone());
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let parts: Vec<&str> = item.split(':').collect();
            let [id, coords, mult] = parts[..] else {
                return Err(Error::Parse(format!("expected id:class:mult, got {item:?}")));
            };
            let coords: Vec<i64> = if group.rank() == 0 && (coords.is_empty() || coords == "0") {
                Vec::new()
            } else {
                coords
                    .split('.')
                    .map(|c| c.parse::<i64>().map_err(|_| Error::Parse(format!("bad class coordinate {c:?}"))))
                    .collect::<Result<_>>()?
            };
            let class = group.element_reduced(&coords)?;
            let mult = mult.parse::<u32>().map_err(|_| Error::Parse(format!("bad multiplicity {mult:?}")))?;
            seq.push(id, class, mult)?;
        }
        Ok(seq)
    }

    fn check_cap(&self, limits: &Limits) -> Result<()> {
        let len = self.total_length();
        if len > limits.enumeration_cap {
            return Err(Error::TooLarge(format!(
                "sequence length {len} exceeds enumeration cap {}",
                limits.enumeration_cap
            )));
        }
        Ok(())
    }
}

/// A sub-multiset of a [`ClassSequence`], stored as per-symbol counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Block {
    counts: Vec<u32>,
}

impl Block {
    pub fn from_counts(counts: Vec<u32>) -> Self {
        Block { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn min_symbol(&self) -> usize {
        self.counts.iter().position(|&c| c > 0).unwrap_or(usize::MAX)
    }

    /// Symbol ids with repetition, in sequence order.
    pub fn ids(&self, seq: &ClassSequence) -> Vec<String> {
        self.counts
            .iter()
            .zip(seq.entries())
            .flat_map(|(&c, e)| std::iter::repeat(e.id.clone()).take(c as usize))
            .collect()
    }

    /// Class multiset of the block.
    pub fn classes(&self, seq: &ClassSequence) -> Vec<GroupElement> {
        self.counts
            .iter()
            .zip(seq.entries())
            .flat_map(|(&c, e)| std::iter::repeat(e.class.clone()).take(c as usize))
            .collect()
    }
}

/// Canonical block order: smallest first symbol first, then larger count vectors.
fn canonical_block_cmp(a: &Block, b: &Block) -> std::cmp::Ordering {
    a.min_symbol().cmp(&b.min_symbol()).then_with(|| b.counts.cmp(&a.counts))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockPartition {
    blocks: Vec<Block>,
}

impl BlockPartition {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn ids(&self, seq: &ClassSequence) -> Vec<Vec<String>> {
        self.blocks.iter().map(|b| b.ids(seq)).collect()
    }
}

/// Set of group elements as a bitset over element indices.
#[derive(Clone, PartialEq, Eq, Hash)]
struct ElemSet {
    words: Vec<u64>,
}

impl ElemSet {
    fn new(n: usize) -> Self {
        ElemSet { words: vec![0; n.div_ceil(64)] }
    }

    #[inline]
    fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Subset sums after appending `g` to a sequence whose subset sums are `self`.
    fn extended(&self, g: usize, ig: &IndexedGroup) -> Self {
        let mut out = self.clone();
        for s in self.iter() {
            out.insert(ig.add(s, g));
        }
        out.insert(g);
        out
    }
}

/// Sequence data in index form.
struct Indexed {
    ig: IndexedGroup,
    classes: Vec<usize>,
    mults: Vec<u32>,
}

impl Indexed {
    fn new(seq: &ClassSequence, limits: &Limits) -> Result<Self> {
        let ig = IndexedGroup::new(seq.group(), limits.element_cap)?;
        let classes = seq.entries().iter().map(|e| seq.group().index_of(&e.class)).collect();
        Ok(Indexed { ig, classes, mults: seq.multiplicities() })
    }
}

/// True iff the multiset sums to the identity and no proper nonempty
/// sub-multiset does.
pub fn is_minimal_zero_sum(group: &AbelianGroup, elements: &[GroupElement]) -> bool {
    let Some((last, rest)) = elements.split_last() else {
        return false;
    };
    if elements.iter().any(|g| !group.contains(g)) {
        return false;
    }
    match group.sum(elements) {
        Ok(s) if s.is_identity() => {}
        _ => return false,
    }
    let _ = last;
    // A zero-sum multiset is minimal iff removing one element leaves it zero-sum free.
    is_zero_sum_free(group, rest)
}

/// No nonempty sub-multiset sums to the identity.
pub fn is_zero_sum_free(group: &AbelianGroup, elements: &[GroupElement]) -> bool {
    let mut sums: HashSet<GroupElement> = HashSet::new();
    for g in elements {
        if g.is_identity() {
            return false;
        }
        let Ok(neg) = group.neg(g) else {
            return false;
        };
        if sums.contains(&neg) {
            return false;
        }
        let shifted: Vec<GroupElement> = sums.iter().map(|s| group.add(s, g).expect("same group")).collect();
        sums.extend(shifted);
        sums.insert(g.clone());
    }
    true
}

/// All distinct minimal zero-sum sub-multisets of `seq`, canonically ordered.
pub fn enumerate_minimal_blocks(seq: &ClassSequence, limits: &Limits) -> Result<Vec<Block>> {
    seq.check_cap(limits)?;
    let ix = Indexed::new(seq, limits)?;
    Ok(minimal_blocks_indexed(&ix))
}

fn minimal_blocks_indexed(ix: &Indexed) -> Vec<Block> {
    struct Search<'a> {
        ix: &'a Indexed,
        counts: Vec<u32>,
        out: Vec<Block>,
    }

    impl Search<'_> {
        // Invariant: the current partial multiset is zero-sum free.
        fn dfs(&mut self, i: usize, sum: usize, subsums: &ElemSet) {
            if i == self.ix.classes.len() {
                return;
            }
            self.dfs(i + 1, sum, subsums);
            let g = self.ix.classes[i];
            let neg = self.ix.ig.neg(g);
            let mut cur_sum = sum;
            let mut cur_sub = subsums.clone();
            for c in 1..=self.ix.mults[i] {
                let next_sum = self.ix.ig.add(cur_sum, g);
                if next_sum == 0 {
                    self.counts[i] = c;
                    self.out.push(Block { counts: self.counts.clone() });
                    break;
                }
                if g == 0 || cur_sub.contains(neg) {
                    break;
                }
                cur_sub = cur_sub.extended(g, &self.ix.ig);
                cur_sum = next_sum;
                self.counts[i] = c;
                self.dfs(i + 1, cur_sum, &cur_sub);
            }
            self.counts[i] = 0;
        }
    }

    let mut search = Search { ix, counts: vec![0; ix.classes.len()], out: Vec::new() };
    search.dfs(0, 0, &ElemSet::new(ix.ig.len()));
    let mut blocks = search.out;
    blocks.sort_by(canonical_block_cmp);
    blocks
}

/// Blocks grouped by their first symbol.
struct BlockTable {
    blocks: Vec<Block>,
    /// `ranges[i]` is the index range of blocks whose first symbol is `i`.
    ranges: Vec<(usize, usize)>,
}

impl BlockTable {
    fn new(blocks: Vec<Block>, symbols: usize) -> Self {
        let mut ranges = vec![(0usize, 0usize); symbols];
        let mut start = 0;
        for (i, range) in ranges.iter_mut().enumerate() {
            let end = start + blocks[start..].iter().take_while(|b| b.min_symbol() == i).count();
            *range = (start, end);
            start = end;
        }
        BlockTable { blocks, ranges }
    }

    fn fits(block: &Block, residual: &[u32]) -> bool {
        block.counts.iter().zip(residual).all(|(b, r)| b <= r)
    }

    /// Candidate block indices for the next step, or `None` when the residual is empty.
    fn candidates(&self, residual: &[u32], prev: usize) -> Option<std::ops::Range<usize>> {
        let i = residual.iter().position(|&r| r > 0)?;
        let (lo, hi) = self.ranges[i];
        Some(lo.max(prev)..hi.max(lo.max(prev)))
    }
}

fn subtract(residual: &mut [u32], block: &Block) {
    residual.iter_mut().zip(&block.counts).for_each(|(r, b)| *r -= b);
}

fn add_back(residual: &mut [u32], block: &Block) {
    residual.iter_mut().zip(&block.counts).for_each(|(r, b)| *r += b);
}

/// Every partition of `seq` into minimal zero-sum blocks, each exactly once.
/// Blocks inside a partition appear in canonical order.
pub fn enumerate_partitions(seq: &ClassSequence, limits: &Limits) -> Result<Vec<BlockPartition>> {
    let blocks = enumerate_minimal_blocks(seq, limits)?;
    let table = BlockTable::new(blocks, seq.entries().len());
    let mut residual = seq.multiplicities();
    let mut chosen = Vec::new();
    let mut out = Vec::new();

    fn rec(
        table: &BlockTable,
        residual: &mut Vec<u32>,
        prev: usize,
        chosen: &mut Vec<usize>,
        out: &mut Vec<BlockPartition>,
    ) {
        let Some(range) = table.candidates(residual, prev) else {
            out.push(BlockPartition { blocks: chosen.iter().map(|&j| table.blocks[j].clone()).collect() });
            return;
        };
        for j in range {
            let block = &table.blocks[j];
            if BlockTable::fits(block, residual) {
                subtract(residual, block);
                chosen.push(j);
                rec(table, residual, j, chosen, out);
                chosen.pop();
                add_back(residual, block);
            }
        }
    }

    rec(&table, &mut residual, 0, &mut chosen, &mut out);
    Ok(out)
}

/// Number of partitions into minimal zero-sum blocks, by memoized recursion on
/// the residual multiplicity vector.
pub fn count_partitions(seq: &ClassSequence, limits: &Limits) -> Result<u128> {
    let blocks = enumerate_minimal_blocks(seq, limits)?;
    let table = BlockTable::new(blocks, seq.entries().len());
    let mut memo: HashMap<(Vec<u32>, usize), u128> = HashMap::new();

    fn rec(table: &BlockTable, residual: &mut Vec<u32>, prev: usize, memo: &mut HashMap<(Vec<u32>, usize), u128>) -> u128 {
        let Some(range) = table.candidates(residual, prev) else {
            return 1;
        };
        let key = (residual.clone(), range.start);
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let mut total = 0u128;
        for j in range {
            let block = &table.blocks[j];
            if BlockTable::fits(block, residual) {
                subtract(residual, block);
                total += rec(table, residual, j, memo);
                add_back(residual, block);
            }
        }
        memo.insert(key, total);
        total
    }

    Ok(rec(&table, &mut seq.multiplicities(), 0, &mut memo))
}

/// Set of partition lengths (number of blocks), computed without materializing
/// partitions.
pub fn length_set(seq: &ClassSequence, limits: &Limits) -> Result<BTreeSet<usize>> {
    if seq.total_length() > 127 {
        return Err(Error::TooLarge("length sets are tracked for sequences of length <= 127".into()));
    }
    let blocks = enumerate_minimal_blocks(seq, limits)?;
    let table = BlockTable::new(blocks, seq.entries().len());
    let mut memo: HashMap<(Vec<u32>, usize), u128> = HashMap::new();

    fn rec(table: &BlockTable, residual: &mut Vec<u32>, prev: usize, memo: &mut HashMap<(Vec<u32>, usize), u128>) -> u128 {
        let Some(range) = table.candidates(residual, prev) else {
            return 1;
        };
        let key = (residual.clone(), range.start);
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let mut mask = 0u128;
        for j in range {
            let block = &table.blocks[j];
            if BlockTable::fits(block, residual) {
                subtract(residual, block);
                mask |= rec(table, residual, j, memo) << 1;
                add_back(residual, block);
            }
        }
        memo.insert(key, mask);
        mask
    }

    let mask = rec(&table, &mut seq.multiplicities(), 0, &mut memo);
    Ok((0..128).filter(|&k| mask >> k & 1 == 1).collect())
}

/// Coefficient of `prod x_i^{e_i}` in `prod_S 1/(1 - x^S)` over minimal zero-sum
/// sub-multisets `S`, truncated componentwise at the multiplicity vector.
///
/// The block list is rediscovered here by a direct scan of the exponent box so
/// this count does not share code with the enumerator.
pub fn count_via_gf(seq: &ClassSequence, limits: &Limits) -> Result<u128> {
    seq.check_cap(limits)?;
    let radices: Vec<usize> = seq.entries().iter().map(|e| e.mult as usize + 1).collect();
    let box_size = radices.iter().try_fold(1u128, |acc, &r| acc.checked_mul(r as u128));
    let box_size = match box_size {
        Some(b) if b <= GF_BOX_CAP => b as usize,
        _ => return Err(Error::TooLarge("generating-function exponent box too large".into())),
    };
    let group = seq.group();
    let k = radices.len();

    // strides: last symbol varies fastest
    let mut strides = vec![1usize; k];
    for i in (0..k.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * radices[i + 1];
    }
    let digits_of = |mut idx: usize| -> Vec<usize> {
        let mut d = vec![0usize; k];
        for i in (0..k).rev() {
            d[i] = idx % radices[i];
            idx /= radices[i];
        }
        d
    };

    let mut block_offsets: Vec<(usize, Vec<usize>)> = Vec::new();
    for idx in 1..box_size {
        let digits = digits_of(idx);
        let elements: Vec<GroupElement> = digits
            .iter()
            .zip(seq.entries())
            .flat_map(|(&c, e)| std::iter::repeat(e.class.clone()).take(c))
            .collect();
        if is_minimal_zero_sum(group, &elements) {
            block_offsets.push((idx, digits));
        }
    }

    let mut coeffs = vec![0u128; box_size];
    coeffs[0] = 1;
    for (offset, bdigits) in &block_offsets {
        // multiply by 1/(1 - x^B): c[v] += c[v - B] in increasing order
        let mut digits = vec![0usize; k];
        for v in 0..box_size {
            if v > 0 {
                let mut i = k - 1;
                loop {
                    digits[i] += 1;
                    if digits[i] < radices[i] {
                        break;
                    }
                    digits[i] = 0;
                    i -= 1;
                }
            }
            if digits.iter().zip(bdigits).all(|(d, b)| d >= b) {
                coeffs[v] += coeffs[v - offset];
            }
        }
    }
    Ok(coeffs[box_size - 1])
}

/// Davenport constant of `group`: the maximal length of a minimal zero-sum
/// sequence. Also returns one minimal zero-sum sequence of that length.
///
/// Breadth-first search over zero-sum free sequences, keyed by their set of
/// subset sums (which alone decides how a sequence can be extended). States
/// that cannot beat the standard lower bound `sum(d_i - 1)` are dropped.
pub fn davenport_with_witness(group: &AbelianGroup, limits: &Limits) -> Result<(u64, Vec<GroupElement>)> {
    let order = group.order();
    if order > limits.davenport_cap || order > 128 {
        return Err(Error::TooLarge(format!(
            "group order {order} exceeds Davenport cap {}",
            limits.davenport_cap.min(128)
        )));
    }
    if order == 1 {
        return Ok((1, vec![group.identity()]));
    }
    let ig = IndexedGroup::new(group, limits.element_cap)?;
    let n = ig.len();

    // Zero-sum free sequence of length sum(d_i - 1): each basis vector d_i - 1 times.
    let mut standard: Vec<usize> = Vec::new();
    for (i, &d) in group.invariant_factors().iter().enumerate() {
        let mut coords = vec![0u64; group.rank()];
        coords[i] = 1;
        let e = group.index_of(&group.element(&coords)?);
        standard.extend(std::iter::repeat(e).take(d as usize - 1));
    }
    let lower = standard.len();

    let shift = |set: u128, g: usize| -> u128 {
        let mut out = 0u128;
        let mut rest = set;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            out |= 1 << ig.add(i, g);
        }
        out
    };

    // layers[k] maps each subset-sum set reachable with k elements to a parent and the added element
    let mut layers: Vec<HashMap<u128, (u128, usize)>> = vec![HashMap::from([(0u128, (0u128, 0usize))])];
    let mut states = 1usize;
    loop {
        let depth = layers.len() - 1;
        let mut next: HashMap<u128, (u128, usize)> = HashMap::new();
        for &set in layers[depth].keys() {
            for g in 1..n {
                if set >> ig.neg(g) & 1 == 1 {
                    continue;
                }
                let grown = set | shift(set, g) | 1 << g;
                // each further element adds a new nonzero subset sum
                let reach = depth + 1 + (n - 1 - grown.count_ones() as usize);
                if reach <= lower {
                    continue;
                }
                next.entry(grown).or_insert((set, g));
            }
        }
        if next.is_empty() {
            break;
        }
        states += next.len();
        if states > DAVENPORT_STATE_BUDGET {
            return Err(Error::TooLarge(format!(
                "Davenport search for {group} exceeds {DAVENPORT_STATE_BUDGET} states"
            )));
        }
        layers.push(next);
    }

    let deepest = layers.len() - 1;
    let mut witness = if deepest > lower {
        let mut seq = Vec::with_capacity(deepest);
        let mut set = *layers[deepest].keys().next().expect("nonempty layer");
        for k in (1..=deepest).rev() {
            let (parent, g) = layers[k][&set];
            seq.push(g);
            set = parent;
        }
        seq
    } else {
        standard
    };
    let total = witness.iter().fold(0usize, |acc, &g| ig.add(acc, g));
    witness.push(ig.neg(total));
    let d = witness.len() as u64;
    Ok((d, witness.into_iter().map(|i| group.element_at(i)).collect()))
}

pub fn davenport(group: &AbelianGroup, limits: &Limits) -> Result<u64> {
    davenport_with_witness(group, limits).map(|(d, _)| d)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Elasticity {
    pub davenport: u64,
    /// `D(G) / 2` as `[numerator, denominator]` in lowest terms.
    pub ratio: Ratio<u64>,
    /// Sequence whose length set has max/min equal to `ratio`.
    pub witness: ClassSequence,
    pub witness_lengths: BTreeSet<usize>,
}

/// Elasticity `D(G)/2` with a witness sequence: a longest minimal zero-sum
/// sequence `U` together with `-U`, which factors both as two blocks and as
/// `D(G)` pairs.
pub fn elasticity(group: &AbelianGroup, limits: &Limits) -> Result<Elasticity> {
    if group.order() == 1 {
        return Err(Error::Undefined("elasticity of the trivial group".into()));
    }
    let (d, u) = davenport_with_witness(group, limits)?;
    let mut classes: Vec<GroupElement> = u.clone();
    for g in &u {
        classes.push(group.neg(g)?);
    }
    classes.sort();
    let mut witness = ClassSequence::empty(group.clone());
    let mut i = 0;
    while i < classes.len() {
        let j = i + classes[i..].iter().take_while(|c| **c == classes[i]).count();
        witness.push(format!("w{}", witness.entries().len()), classes[i].clone(), (j - i) as u32)?;
        i = j;
    }
    let lengths = length_set(&witness, &limits.with_enumeration_cap(witness.total_length()))?;
    let ratio = Ratio::new(d, 2);
    let (&min, &max) = (lengths.first().expect("nonempty"), lengths.last().expect("nonempty"));
    if Ratio::new(max as u64, min as u64) != ratio {
        return Err(Error::Internal(format!("elasticity witness has lengths {lengths:?}, expected ratio {ratio}")));
    }
    Ok(Elasticity { davenport: d, ratio, witness, witness_lengths: lengths })
}

/// Sequence exhibiting two factorization lengths whenever `|G| > 2`: an element
/// of order `e > 2` with its inverse, each `e` times; otherwise three order-2
/// classes `c1, c2, c1+c2`, each twice.
pub fn carlitz_witness(group: &AbelianGroup) -> Result<Option<ClassSequence>> {
    if group.order() <= 2 {
        return Ok(None);
    }
    let mut seq = ClassSequence::empty(group.clone());
    let elements = group.enumerate_elements(DEFAULT_ELEMENT_CAP)?;
    if let Some(g) = elements.iter().find(|g| group.element_order(g) > 2) {
        let e = group.element_order(g) as u32;
        seq.push("p", g.clone(), e)?;
        seq.push("q", group.neg(g)?, e)?;
    } else {
        let c1 = group.element_at(1);
        let c2 = elements.iter().find(|g| !g.is_identity() && **g != c1).expect("rank >= 2").clone();
        let c3 = group.add(&c1, &c2)?;
        seq.push("p1", c1, 2)?;
        seq.push("p2", c2, 2)?;
        seq.push("p3", c3, 2)?;
    }
    Ok(Some(seq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn limits() -> Limits {
        Limits::default()
    }

    fn seq(group: &[u64], items: &[(&str, &[i64], u32)]) -> ClassSequence {
        let g = AbelianGroup::new(group).unwrap();
        let mut s = ClassSequence::empty(g.clone());
        for (id, c, m) in items {
            s.push(*id, g.element_reduced(c).unwrap(), *m).unwrap();
        }
        s
    }

    /// Brute force: partitions of the expanded symbol list into minimal zero-sum
    /// blocks, deduplicated as multisets of sorted id-lists.
    fn brute_partitions(s: &ClassSequence) -> BTreeSet<Vec<Vec<String>>> {
        let mut items: Vec<(String, GroupElement)> = Vec::new();
        for e in s.entries() {
            for _ in 0..e.mult {
                items.push((e.id.clone(), e.class.clone()));
            }
        }
        let mut out = BTreeSet::new();
        fn rec(
            g: &AbelianGroup,
            items: &[(String, GroupElement)],
            used: &mut Vec<bool>,
            cur: &mut Vec<Vec<String>>,
            out: &mut BTreeSet<Vec<Vec<String>>>,
        ) {
            let Some(first) = used.iter().position(|u| !u) else {
                let mut p = cur.clone();
                p.sort();
                out.insert(p);
                return;
            };
            let rest: Vec<usize> = (first + 1..items.len()).filter(|&i| !used[i]).collect();
            for mask in 0u32..(1 << rest.len()) {
                let mut members = vec![first];
                members.extend(rest.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i));
                let classes: Vec<GroupElement> = members.iter().map(|&i| items[i].1.clone()).collect();
                if !is_minimal_zero_sum(g, &classes) {
                    continue;
                }
                let mut ids: Vec<String> = members.iter().map(|&i| items[i].0.clone()).collect();
                ids.sort();
                for &i in &members {
                    used[i] = true;
                }
                cur.push(ids);
                rec(g, items, used, cur, out);
                cur.pop();
                for &i in &members {
                    used[i] = false;
                }
            }
        }
        rec(s.group(), &items, &mut vec![false; items.len()], &mut Vec::new(), &mut out);
        out
    }

    fn canonical(s: &ClassSequence, parts: &[BlockPartition]) -> BTreeSet<Vec<Vec<String>>> {
        parts
            .iter()
            .map(|p| {
                let mut ids: Vec<Vec<String>> = p
                    .ids(s)
                    .into_iter()
                    .map(|mut b| {
                        b.sort();
                        b
                    })
                    .collect();
                ids.sort();
                ids
            })
            .collect()
    }

    #[test]
    fn minimal_zero_sum_examples() {
        let z2 = AbelianGroup::cyclic(2).unwrap();
        let g = z2.element(&[1]).unwrap();
        assert!(is_minimal_zero_sum(&z2, &[z2.identity()]));
        assert!(is_minimal_zero_sum(&z2, &[g.clone(), g.clone()]));
        assert!(!is_minimal_zero_sum(&z2, &[g.clone(), g.clone(), g.clone(), g.clone()]));
        let v4 = AbelianGroup::new(&[2, 2]).unwrap();
        let c1 = v4.element(&[1, 0]).unwrap();
        let c2 = v4.element(&[0, 1]).unwrap();
        let c3 = v4.add(&c1, &c2).unwrap();
        assert!(is_minimal_zero_sum(&v4, &[c1.clone(), c2.clone(), c3.clone()]));
        assert!(!is_minimal_zero_sum(&v4, &[c1.clone(), c1.clone(), c2.clone(), c2.clone()]));
        assert!(!is_minimal_zero_sum(&v4, &[c1, c2]));
        assert!(!is_minimal_zero_sum(&v4, &[]));
    }

    #[test]
    fn minimal_blocks_examples() {
        let s = seq(&[2], &[("a", &[1], 2), ("b", &[1], 2)]);
        let blocks = enumerate_minimal_blocks(&s, &limits()).unwrap();
        let ids: Vec<Vec<String>> = blocks.iter().map(|b| b.ids(&s)).collect();
        assert_eq!(ids, vec![vec!["a", "a"], vec!["a", "b"], vec!["b", "b"]]);

        let s = seq(&[5], &[("p", &[0], 3)]);
        let blocks = enumerate_minimal_blocks(&s, &limits()).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].ids(&s), vec!["p"]);

        // one id per copy of three order-2 classes in (Z/2)^2
        let s = seq(
            &[2, 2],
            &[
                ("b1p", &[1, 0], 1),
                ("b1m", &[1, 0], 1),
                ("b2p", &[0, 1], 1),
                ("b2m", &[0, 1], 1),
                ("b3p", &[1, 1], 1),
                ("b3m", &[1, 1], 1),
            ],
        );
        let blocks = enumerate_minimal_blocks(&s, &limits()).unwrap();
        assert_eq!(blocks.len(), 3 + 8);
        assert_eq!(blocks.iter().filter(|b| b.len() == 2).count(), 3);
        assert_eq!(blocks.iter().filter(|b| b.len() == 3).count(), 8);
        for b in &blocks {
            assert!(is_minimal_zero_sum(s.group(), &b.classes(&s)));
        }
    }

    #[test]
    fn partition_examples() {
        let s = seq(&[2], &[("q", &[1], 2), ("qbar", &[1], 2)]);
        let parts = enumerate_partitions(&s, &limits()).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].ids(&s), vec![vec!["q", "q"], vec!["qbar", "qbar"]]);
        assert_eq!(parts[1].ids(&s), vec![vec!["q", "qbar"], vec!["q", "qbar"]]);

        let empty = ClassSequence::empty(AbelianGroup::cyclic(3).unwrap());
        let parts = enumerate_partitions(&empty, &limits()).unwrap();
        assert_eq!(parts.len(), 1);
        assert!(parts[0].is_empty());

        let s = seq(&[6], &[("r", &[3], 2), ("q", &[3], 1), ("qbar", &[3], 1)]);
        assert_eq!(enumerate_partitions(&s, &limits()).unwrap().len(), 2);

        // no partition when the total class is nonzero
        let s = seq(&[3], &[("a", &[1], 1)]);
        assert!(enumerate_partitions(&s, &limits()).unwrap().is_empty());
        assert_eq!(count_partitions(&s, &limits()).unwrap(), 0);
    }

    #[test]
    fn count_examples() {
        let ids = ["a", "b", "c", "d", "e", "f"];
        let items: Vec<(&str, &[i64], u32)> = ids.iter().map(|id| (*id, &[1i64][..], 1)).collect();
        let s = seq(&[2], &items);
        assert_eq!(count_partitions(&s, &limits()).unwrap(), 15);

        let s = seq(&[3], &[("q", &[1], 3), ("qbar", &[2], 3)]);
        assert_eq!(count_partitions(&s, &limits()).unwrap(), 2);

        let s = seq(
            &[2, 2],
            &[
                ("a", &[1, 0], 1),
                ("b", &[1, 0], 1),
                ("c", &[0, 1], 1),
                ("d", &[0, 1], 1),
                ("e", &[1, 1], 1),
                ("f", &[1, 1], 1),
            ],
        );
        assert_eq!(count_partitions(&s, &limits()).unwrap(), 5);
        assert_eq!(count_via_gf(&s, &limits()).unwrap(), 5);
    }

    #[test]
    fn gf_examples() {
        let s = seq(&[2], &[("x", &[1], 2), ("y", &[1], 2)]);
        assert_eq!(count_via_gf(&s, &limits()).unwrap(), 2);
        let s = seq(&[2], &[("p", &[0], 5)]);
        assert_eq!(count_via_gf(&s, &limits()).unwrap(), 1);
    }

    #[test]
    fn cap_is_enforced() {
        let s = seq(&[2], &[("a", &[1], 30)]);
        assert!(matches!(enumerate_partitions(&s, &limits()), Err(Error::TooLarge(_))));
        assert!(matches!(count_partitions(&s, &limits()), Err(Error::TooLarge(_))));
        assert!(matches!(count_via_gf(&s, &limits()), Err(Error::TooLarge(_))));
        assert_eq!(count_partitions(&s, &limits().with_enumeration_cap(30)).unwrap(), 1);
    }

    #[test]
    fn davenport_small() {
        let l = limits();
        for n in 1..=12u64 {
            assert_eq!(davenport(&AbelianGroup::cyclic(n).unwrap(), &l).unwrap(), n);
        }
        assert_eq!(davenport(&AbelianGroup::new(&[2, 2]).unwrap(), &l).unwrap(), 3);
        assert_eq!(davenport(&AbelianGroup::new(&[2, 2, 2]).unwrap(), &l).unwrap(), 4);
        assert_eq!(davenport(&AbelianGroup::trivial(), &l).unwrap(), 1);
        assert!(matches!(davenport(&AbelianGroup::cyclic(65).unwrap(), &l), Err(Error::TooLarge(_))));
    }

    /// Independent oracle: longest minimal zero-sum sequence by scanning all
    /// multisets of nonzero elements up to length |G|.
    fn davenport_brute(g: &AbelianGroup) -> u64 {
        let els: Vec<GroupElement> = g.enumerate_elements(1000).unwrap();
        let nonzero: Vec<GroupElement> = els.into_iter().filter(|e| !e.is_identity()).collect();
        let mut best = 1;
        fn rec(g: &AbelianGroup, pool: &[GroupElement], start: usize, cur: &mut Vec<GroupElement>, best: &mut u64) {
            if !cur.is_empty() && is_minimal_zero_sum(g, cur) {
                *best = (*best).max(cur.len() as u64);
                return;
            }
            if !cur.is_empty() && !is_zero_sum_free(g, cur) {
                return;
            }
            for i in start..pool.len() {
                cur.push(pool[i].clone());
                rec(g, pool, i, cur, best);
                cur.pop();
            }
        }
        rec(g, &nonzero, 0, &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn davenport_matches_brute_force() {
        for f in [&[2u64][..], &[3], &[4], &[6], &[2, 2], &[2, 4], &[3, 3], &[2, 2, 2]] {
            let g = AbelianGroup::new(f).unwrap();
            assert_eq!(davenport(&g, &limits()).unwrap(), davenport_brute(&g), "{g}");
        }
    }

    #[test]
    fn elasticity_examples() {
        let l = limits();
        let e = elasticity(&AbelianGroup::cyclic(2).unwrap(), &l).unwrap();
        assert_eq!(e.ratio, Ratio::new(1, 1));
        assert_eq!(e.witness_lengths.len(), 1);
        assert_eq!(elasticity(&AbelianGroup::cyclic(6).unwrap(), &l).unwrap().ratio, Ratio::new(3, 1));
        assert_eq!(elasticity(&AbelianGroup::new(&[2, 2]).unwrap(), &l).unwrap().ratio, Ratio::new(3, 2));
        assert!(matches!(elasticity(&AbelianGroup::trivial(), &l), Err(Error::Undefined(_))));
    }

    #[test]
    fn length_set_examples() {
        let s = seq(&[3], &[("p", &[1], 3), ("q", &[2], 3)]);
        assert_eq!(length_set(&s, &limits()).unwrap(), BTreeSet::from([2, 3]));
        let s = seq(&[2, 2], &[("p1", &[1, 0], 2), ("p2", &[0, 1], 2), ("p3", &[1, 1], 2)]);
        assert_eq!(length_set(&s, &limits()).unwrap(), BTreeSet::from([2, 3]));
        let s = seq(&[], &[("a", &[], 3), ("b", &[], 2)]);
        assert_eq!(length_set(&s, &limits()).unwrap(), BTreeSet::from([5]));
    }

    #[test]
    fn spec_parsing() {
        let g = AbelianGroup::new(&[2, 2]).unwrap();
        let s = ClassSequence::from_spec(&g, "a:1.0:2, b:0.1:1").unwrap();
        assert_eq!(s.total_length(), 3);
        assert_eq!(s.entries()[1].class.coords(), &[0, 1]);
        assert!(ClassSequence::from_spec(&g, "a:1:2").is_err());
        assert!(ClassSequence::from_spec(&g, "a:1.0:2,a:0.1:1").is_err());
        assert!(ClassSequence::from_spec(&g, "a:1.0").is_err());
        assert_eq!(ClassSequence::from_spec(&g, "").unwrap().total_length(), 0);
    }

    #[test]
    fn json_schema() {
        let s = seq(&[2], &[("q41", &[1], 1), ("q41_bar", &[1], 1)]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"group":[2],"entries":[{"id":"q41","class":[1],"mult":1},{"id":"q41_bar","class":[1],"mult":1}]}"#
        );
        let back: ClassSequence = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"group":[2],"entries":[{"id":"a","class":[1],"mult":0}]}"#;
        assert!(serde_json::from_str::<ClassSequence>(bad).is_err());
    }

    fn arb_sequence(max_order: u64, max_len: u32) -> impl Strategy<Value = ClassSequence> {
        let groups: Vec<Vec<u64>> = (1..=max_order)
            .flat_map(|n| {
                let mut v = vec![if n == 1 { vec![] } else { vec![n] }];
                for a in 2..=n {
                    if n % a == 0 && (n / a) % a == 0 {
                        v.push(vec![a, n / a]);
                    }
                }
                v
            })
            .collect();
        (proptest::sample::select(groups), proptest::collection::vec((0u64..1000, 1u32..4), 0..7)).prop_map(
            move |(factors, raw)| {
                let g = AbelianGroup::new(&factors).unwrap();
                let n = g.order() as usize;
                let mut s = ClassSequence::empty(g.clone());
                let mut left = max_len;
                for (i, (c, m)) in raw.into_iter().enumerate() {
                    let m = m.min(left);
                    if m == 0 {
                        break;
                    }
                    left -= m;
                    s.push(format!("s{i}"), g.element_at(c as usize % n), m).unwrap();
                }
                s
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn three_counts_agree(s in arb_sequence(12, 12)) {
            let l = limits();
            let parts = enumerate_partitions(&s, &l).unwrap();
            let count = count_partitions(&s, &l).unwrap();
            let gf = count_via_gf(&s, &l).unwrap();
            prop_assert_eq!(parts.len() as u128, count);
            prop_assert_eq!(count, gf);
            // no duplicates
            prop_assert_eq!(canonical(&s, &parts).len(), parts.len());
        }

        #[test]
        fn enumeration_matches_brute_force(s in arb_sequence(6, 8)) {
            let parts = enumerate_partitions(&s, &limits()).unwrap();
            prop_assert_eq!(canonical(&s, &parts), brute_partitions(&s));
        }

        #[test]
        fn partitions_cover_and_blocks_are_minimal(s in arb_sequence(12, 10)) {
            let l = limits();
            let d = davenport(s.group(), &l).unwrap() as usize;
            for p in enumerate_partitions(&s, &l).unwrap() {
                let mut total = vec![0u32; s.entries().len()];
                for b in p.blocks() {
                    prop_assert!(is_minimal_zero_sum(s.group(), &b.classes(&s)));
                    prop_assert!(b.len() <= d);
                    for (t, c) in total.iter_mut().zip(b.counts()) {
                        *t += c;
                    }
                }
                prop_assert_eq!(total, s.multiplicities());
                // identity-class symbols only as singletons
                for b in p.blocks() {
                    if b.classes(&s).iter().any(|c| c.is_identity()) {
                        prop_assert_eq!(b.len(), 1);
                    }
                }
            }
        }

        #[test]
        fn count_is_label_order_invariant(s in arb_sequence(12, 12), seed in 0u64..1000) {
            let k = s.entries().len();
            let mut perm: Vec<usize> = (0..k).collect();
            // deterministic shuffle from seed
            let mut x = seed;
            for i in (1..k).rev() {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (x >> 33) as usize % (i + 1));
            }
            let l = limits();
            prop_assert_eq!(count_partitions(&s, &l).unwrap(), count_partitions(&s.permuted(&perm), &l).unwrap());
            prop_assert_eq!(length_set(&s, &l).unwrap(), length_set(&s.permuted(&perm), &l).unwrap());
        }

        #[test]
        fn length_ratio_bounded_by_half_davenport(s in arb_sequence(12, 12)) {
            let l = limits();
            let lengths = length_set(&s, &l).unwrap();
            if let (Some(&min), Some(&max)) = (lengths.first(), lengths.last()) {
                if min > 0 && s.group().order() > 1 {
                    let d = davenport(s.group(), &l).unwrap();
                    prop_assert!(Ratio::new(max as u64, min as u64) <= Ratio::new(d, 2));
                }
                if s.group().order() <= 2 {
                    prop_assert_eq!(lengths.len(), 1);
                }
            }
        }
    }

    #[test]
    fn carlitz_witnesses() {
        for f in [&[3u64][..], &[4], &[2, 2], &[5], &[6], &[2, 4], &[2, 2, 2], &[3, 3]] {
            let g = AbelianGroup::new(f).unwrap();
            let w = carlitz_witness(&g).unwrap().unwrap();
            assert!(length_set(&w, &limits()).unwrap().len() >= 2, "{g}");
        }
        assert!(carlitz_witness(&AbelianGroup::cyclic(2).unwrap()).unwrap().is_none());
    }
}
