//! Exact support counting, level-wise Apriori with per-level thresholds and
//! association-rule derivation.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::bitmap::{and_popcount, ItemBitmaps};
use crate::error::{Error, Result};
use crate::market_basket::{write_ids, ItemId, TransactionDb};

/// Sorted, duplicate-free set of items.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Itemset(Vec<ItemId>);

impl Itemset {
    pub fn new<I: IntoIterator<Item = ItemId>>(ids: I) -> Self {
        let mut v: Vec<ItemId> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Itemset(v)
    }

    pub(crate) fn from_sorted(v: Vec<ItemId>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        Itemset(v)
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_disjoint(&self, other: &Itemset) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }
}

impl<const K: usize> From<[u32; K]> for Itemset {
    fn from(ids: [u32; K]) -> Self {
        Itemset::new(ids.into_iter().map(ItemId))
    }
}

impl fmt::Display for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        write_ids(f, &self.0)?;
        f.write_str("}")
    }
}

/// Canonical output order: by size, then lexicographically.
pub fn canonical_cmp(a: &Itemset, b: &Itemset) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.0.cmp(&b.0))
}

/// Exact ratio `num/den`, kept unreduced so supports print as `count/N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

pub type Support = Fraction;

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        Fraction { num, den }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Value equality (`4/8 == 1/2`).
    pub fn same_value(self, other: Fraction) -> bool {
        self.num as u128 * other.den as u128 == other.num as u128 * self.den as u128
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequentItemset {
    pub itemset: Itemset,
    pub support: Support,
}

/// Itemset with a real-valued (estimated or de-biased) support.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatedItemset {
    pub itemset: Itemset,
    pub support: f64,
}

/// Common view used by the evaluation metrics.
pub trait ItemsetRecord {
    fn itemset(&self) -> &Itemset;
    fn support_value(&self) -> f64;
}

impl ItemsetRecord for FrequentItemset {
    fn itemset(&self) -> &Itemset {
        &self.itemset
    }
    fn support_value(&self) -> f64 {
        self.support.value()
    }
}

impl ItemsetRecord for EstimatedItemset {
    fn itemset(&self) -> &Itemset {
        &self.itemset
    }
    fn support_value(&self) -> f64 {
        self.support
    }
}

impl From<&FrequentItemset> for EstimatedItemset {
    fn from(f: &FrequentItemset) -> Self {
        EstimatedItemset { itemset: f.itemset.clone(), support: f.support.value() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssociationRule {
    pub antecedent: Itemset,
    pub consequent: Itemset,
    pub support: Support,
    /// `count(X ∪ Y) / count(X)`.
    pub confidence: Fraction,
}

/// Minimum support per itemset size. Sizes beyond the explicit levels use
/// `tail`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelThresholds {
    levels: Vec<f64>,
    tail: f64,
}

impl LevelThresholds {
    pub fn constant(threshold: f64) -> Self {
        LevelThresholds { levels: Vec::new(), tail: threshold }
    }

    /// `levels[0]` is the threshold for 1-itemsets.
    pub fn per_level(levels: Vec<f64>, tail: f64) -> Self {
        LevelThresholds { levels, tail }
    }

    pub fn get(&self, k: usize) -> f64 {
        assert!(k >= 1, "itemset sizes start at 1");
        self.levels.get(k - 1).copied().unwrap_or(self.tail)
    }
}

/// Smallest count meeting `threshold` over `n` rows. Products within 1e-9
/// of an integer are snapped to it so that e.g. `0.3 * 10` means 3.
pub fn min_count(threshold: f64, n: usize) -> u64 {
    if threshold <= 0.0 {
        return 0;
    }
    let x = threshold * n as f64;
    if !x.is_finite() || x > n as f64 + 1.0 {
        return n as u64 + 1;
    }
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

pub fn support(db: &TransactionDb, itemset: &Itemset) -> Result<Support> {
    if db.is_empty() {
        return Err(Error::EmptyDb);
    }
    let count = db.iter().filter(|t| t.contains_all(itemset.items())).count() as u64;
    Ok(Fraction::new(count, db.len() as u64))
}

/// Apriori join of lexicographically sorted `k`-itemsets sharing a
/// `(k-1)`-prefix, pruned so every `k`-subset is in `prev`.
pub(crate) fn join_candidates(prev: &[Itemset]) -> Vec<Itemset> {
    let Some(first) = prev.first() else { return Vec::new() };
    let k = first.len();
    let lookup: HashSet<&[ItemId]> = prev.iter().map(|s| s.items()).collect();
    let mut out = Vec::new();
    let mut scratch = Vec::with_capacity(k);
    for i in 0..prev.len() {
        let a = prev[i].items();
        for b in prev[i + 1..].iter().map(Itemset::items) {
            if a[..k - 1] != b[..k - 1] {
                break;
            }
            let mut cand = a.to_vec();
            cand.push(b[k - 1]);
            // the two generating subsets drop position k or k-1
            let pruned = (0..k.saturating_sub(1)).all(|drop| {
                scratch.clear();
                scratch.extend(cand.iter().enumerate().filter(|(j, _)| *j != drop).map(|(_, v)| *v));
                lookup.contains(scratch.as_slice())
            });
            if pruned {
                out.push(Itemset::from_sorted(cand));
            }
        }
    }
    out
}

/// Counts each candidate against the bitmaps. Consecutive candidates that
/// share a prefix reuse its intersection.
pub(crate) fn count_candidates(bitmaps: &ItemBitmaps, candidates: &[Itemset]) -> Vec<u64> {
    let mut runs: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    for i in 1..=candidates.len() {
        let boundary = i == candidates.len() || {
            let (a, b) = (candidates[i - 1].items(), candidates[i].items());
            a.len() != b.len() || a[..a.len() - 1] != b[..b.len() - 1]
        };
        if boundary {
            runs.push(start..i);
            start = i;
        }
    }
    let counted: Vec<Vec<u64>> = runs
        .par_iter()
        .map(|r| {
            let group = &candidates[r.clone()];
            let items = group[0].items();
            let prefix = bitmaps.intersect(&items[..items.len() - 1]);
            group
                .iter()
                .map(|c| and_popcount(&prefix, bitmaps.item(*c.items().last().unwrap())))
                .collect()
        })
        .collect();
    counted.into_iter().flatten().collect()
}

/// All itemsets `A` with `count(A) >= max(1, min_count(thresholds(|A|), N))`.
///
/// Thresholds need not be monotone in `k`. Level `k` candidates are joined
/// from every `(k-1)`-itemset meeting the smallest threshold of any level
/// `>= k-1`, which keeps the search complete.
pub fn mine_frequent(
    db: &TransactionDb,
    thresholds: &LevelThresholds,
    max_k: Option<usize>,
) -> Vec<FrequentItemset> {
    let n = db.len();
    if n == 0 || db.n_items() == 0 {
        return Vec::new();
    }
    let kmax = max_k.unwrap_or(usize::MAX).min(db.max_len());
    if kmax == 0 {
        return Vec::new();
    }
    let level_min: Vec<u64> = (1..=kmax).map(|k| min_count(thresholds.get(k), n).max(1)).collect();
    // survivor bound at level k: min over j >= k
    let mut survivor_min = level_min.clone();
    for k in (0..kmax.saturating_sub(1)).rev() {
        survivor_min[k] = survivor_min[k].min(survivor_min[k + 1]);
    }

    let bitmaps = ItemBitmaps::build(db);
    let total = n as u64;
    let mut out = Vec::new();

    let mut survivors: Vec<Itemset> = Vec::new();
    for (i, c) in db.item_counts().into_iter().enumerate() {
        let set = Itemset::from_sorted(vec![ItemId(i as u32)]);
        if c >= level_min[0] {
            out.push(FrequentItemset { itemset: set.clone(), support: Fraction::new(c, total) });
        }
        if c >= survivor_min[0] {
            survivors.push(set);
        }
    }

    for k in 2..=kmax {
        let candidates = join_candidates(&survivors);
        if candidates.is_empty() {
            break;
        }
        let counts = count_candidates(&bitmaps, &candidates);
        survivors = Vec::new();
        for (cand, c) in candidates.into_iter().zip(counts) {
            if c >= level_min[k - 1] {
                out.push(FrequentItemset { itemset: cand.clone(), support: Fraction::new(c, total) });
            }
            if c >= survivor_min[k - 1] {
                survivors.push(cand);
            }
        }
    }
    out.sort_by(|a, b| canonical_cmp(&a.itemset, &b.itemset));
    out
}

/// Rules `X => Y` with `X ∪ Y` frequent, both sides nonempty and
/// `confidence >= min_confidence`. Antecedent supports missing from
/// `frequent` are counted on `db`.
pub fn derive_rules(
    frequent: &[FrequentItemset],
    min_confidence: f64,
    db: &TransactionDb,
) -> Vec<AssociationRule> {
    let known: HashMap<&Itemset, u64> =
        frequent.iter().map(|f| (&f.itemset, f.support.num)).collect();
    let mut rules = Vec::new();
    for f in frequent.iter().filter(|f| f.itemset.len() >= 2) {
        let items = f.itemset.items();
        let k = items.len();
        assert!(k < 64, "rule derivation enumerates subsets with a u64 mask");
        for mask in 1..(1u64 << k) - 1 {
            let (x, y): (Vec<_>, Vec<_>) =
                (0..k).partition(|&i| mask & (1 << i) != 0);
            let antecedent = Itemset::from_sorted(x.into_iter().map(|i| items[i]).collect());
            let consequent = Itemset::from_sorted(y.into_iter().map(|i| items[i]).collect());
            let count_x = match known.get(&antecedent) {
                Some(&c) => c,
                None => db.iter().filter(|t| t.contains_all(antecedent.items())).count() as u64,
            };
            if count_x == 0 {
                continue;
            }
            let confidence = Fraction::new(f.support.num, count_x);
            if confidence.num as f64 >= min_confidence * count_x as f64 - 1e-9 {
                rules.push(AssociationRule { antecedent, consequent, support: f.support, confidence });
            }
        }
    }
    rules.sort_by(|a, b| {
        canonical_cmp(&a.antecedent, &b.antecedent)
            .then_with(|| canonical_cmp(&a.consequent, &b.consequent))
    });
    rules
}

/// `<count>/<N> <item ids...>`, one line per itemset.
pub fn write_frequent<W: Write>(mut w: W, sets: &[FrequentItemset]) -> std::io::Result<()> {
    for f in sets {
        let mut ids = String::new();
        write_ids(&mut ids, f.itemset.items()).expect("write to String");
        writeln!(w, "{} {}", f.support, ids)?;
    }
    Ok(())
}

/// `<item ids...> est=<real>`, one line per itemset.
pub fn write_estimated<W: Write>(mut w: W, sets: &[EstimatedItemset]) -> std::io::Result<()> {
    for e in sets {
        let mut ids = String::new();
        write_ids(&mut ids, e.itemset.items()).expect("write to String");
        writeln!(w, "{ids} est={}", e.support)?;
    }
    Ok(())
}

/// `X -> Y  supp=<r> conf=<r>`.
pub fn write_rules<W: Write>(mut w: W, rules: &[AssociationRule]) -> std::io::Result<()> {
    for r in rules {
        writeln!(
            w,
            "{} -> {}  supp={} conf={}",
            r.antecedent, r.consequent, r.support, r.confidence
        )?;
    }
    Ok(())
}
