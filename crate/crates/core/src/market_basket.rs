//! Binary market-basket data: transactions over an item universe `0..n`,
//! the line-oriented file format, synthetic generation and basic statistics.
//!
//! File format: an optional header line `# n=<int>`, then one transaction per
//! LF-terminated line as space-separated decimal item ids. An empty line is
//! an empty transaction.

use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u32);

impl ItemId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for ItemId {
    fn from(v: u32) -> Self {
        ItemId(v)
    }
}

/// A set of items kept in strictly ascending order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transaction {
    items: Vec<ItemId>,
}

impl Transaction {
    /// Builds a transaction from arbitrary ids, returning it together with the
    /// number of duplicate ids that were dropped.
    pub fn from_unsorted<I: IntoIterator<Item = ItemId>>(ids: I) -> (Self, usize) {
        let mut items: Vec<ItemId> = ids.into_iter().collect();
        let before = items.len();
        items.sort_unstable();
        items.dedup();
        let dups = before - items.len();
        (Transaction { items }, dups)
    }

    /// Caller guarantees `items` is strictly ascending.
    pub(crate) fn from_sorted_unchecked(items: Vec<ItemId>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Transaction { items }
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.items.binary_search(&item).is_ok()
    }

    /// True when every item of `subset` (ascending) appears in this transaction.
    pub fn contains_all(&self, subset: &[ItemId]) -> bool {
        let mut it = self.items.iter();
        'outer: for s in subset {
            for t in it.by_ref() {
                if t == s {
                    continue 'outer;
                }
                if t > s {
                    return false;
                }
            }
            return false;
        }
        true
    }

    /// Complement with respect to the universe `0..n_items`.
    pub fn complement(&self, n_items: usize) -> Transaction {
        let mut out = Vec::with_capacity(n_items.saturating_sub(self.items.len()));
        let mut it = self.items.iter().peekable();
        for i in 0..n_items as u32 {
            if it.peek().map(|x| x.0) == Some(i) {
                it.next();
            } else {
                out.push(ItemId(i));
            }
        }
        Transaction { items: out }
    }
}

impl<const K: usize> From<[u32; K]> for Transaction {
    fn from(ids: [u32; K]) -> Self {
        Transaction::from_unsorted(ids.into_iter().map(ItemId)).0
    }
}

impl fmt::Display for Transaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_ids(f, &self.items)
    }
}

pub(crate) fn write_ids<W: fmt::Write>(w: &mut W, ids: &[ItemId]) -> fmt::Result {
    for (i, id) in ids.iter().enumerate() {
        if i > 0 {
            w.write_char(' ')?;
        }
        write!(w, "{}", id.0)?;
    }
    Ok(())
}

/// An ordered list of transactions over `n_items` items. Order is part of
/// the value: fake-transaction insertion is positional.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransactionDb {
    n_items: usize,
    transactions: Vec<Transaction>,
}

impl TransactionDb {
    pub fn new(n_items: usize, transactions: Vec<Transaction>) -> Result<Self> {
        for (line, t) in transactions.iter().enumerate() {
            if let Some(last) = t.items.last() {
                if last.index() >= n_items {
                    return Err(Error::ItemRange {
                        line: line + 1,
                        item: last.0 as u64,
                        n_items,
                    });
                }
            }
        }
        Ok(TransactionDb { n_items, transactions })
    }

    pub(crate) fn new_unchecked(n_items: usize, transactions: Vec<Transaction>) -> Self {
        TransactionDb { n_items, transactions }
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Number of transactions (the `N` of the data model).
    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Transaction> {
        self.transactions.iter()
    }

    pub fn total_items(&self) -> u64 {
        self.transactions.iter().map(|t| t.len() as u64).sum()
    }

    pub fn max_len(&self) -> usize {
        self.transactions.iter().map(Transaction::len).max().unwrap_or(0)
    }

    /// Per-item occurrence counts.
    pub fn item_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_items];
        for t in &self.transactions {
            for id in t.items() {
                counts[id.index()] += 1;
            }
        }
        counts
    }

    /// Remaps the observed items onto the dense range `0..distinct`, keeping
    /// their relative order. Returns the new database and the old id of each
    /// new id.
    pub fn compact_items(&self) -> (TransactionDb, Vec<ItemId>) {
        let counts = self.item_counts();
        let mut old_of_new = Vec::new();
        let mut new_of_old = vec![u32::MAX; self.n_items];
        for (old, &c) in counts.iter().enumerate() {
            if c > 0 {
                new_of_old[old] = old_of_new.len() as u32;
                old_of_new.push(ItemId(old as u32));
            }
        }
        let transactions = self
            .transactions
            .iter()
            .map(|t| {
                Transaction::from_sorted_unchecked(
                    t.items().iter().map(|id| ItemId(new_of_old[id.index()])).collect(),
                )
            })
            .collect();
        (TransactionDb::new_unchecked(old_of_new.len(), transactions), old_of_new)
    }
}

impl<'a> IntoIterator for &'a TransactionDb {
    type Item = &'a Transaction;
    type IntoIter = std::slice::Iter<'a, Transaction>;

    fn into_iter(self) -> Self::IntoIter {
        self.transactions.iter()
    }
}

/// Result of [`load_db`]: the database and the number of duplicate item
/// ids that were dropped while parsing.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub db: TransactionDb,
    pub duplicates_dropped: usize,
}

fn parse_header(line: &str, line_no: usize) -> Result<usize> {
    let rest = line.trim_start_matches('#').trim();
    let value = rest.strip_prefix("n=").ok_or_else(|| Error::Parse {
        line: line_no,
        msg: format!("expected header `# n=<int>`, found `{line}`"),
    })?;
    value.trim().parse::<usize>().map_err(|e| Error::Parse {
        line: line_no,
        msg: format!("bad item count `{value}`: {e}"),
    })
}

/// Reads a database in the line-oriented transaction format.
///
/// The universe size is `n_items_hint` when given, otherwise the header value,
/// otherwise one more than the largest id seen.
pub fn load_db<R: BufRead>(source: R, n_items_hint: Option<usize>) -> Result<Loaded> {
    let mut header_n = None;
    let mut transactions = Vec::new();
    let mut duplicates_dropped = 0;
    let mut max_seen: Option<u64> = None;

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if idx == 0 && line.starts_with('#') {
            header_n = Some(parse_header(line, line_no)?);
            continue;
        }
        let bound = n_items_hint.or(header_n);
        let mut ids = Vec::new();
        for tok in line.split_ascii_whitespace() {
            let v: u64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("malformed item id `{tok}`"),
            })?;
            if let Some(n) = bound {
                if v >= n as u64 {
                    return Err(Error::ItemRange { line: line_no, item: v, n_items: n });
                }
            }
            if v > u32::MAX as u64 - 1 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("item id `{tok}` does not fit in 32 bits"),
                });
            }
            max_seen = Some(max_seen.map_or(v, |m| m.max(v)));
            ids.push(ItemId(v as u32));
        }
        let (t, dups) = Transaction::from_unsorted(ids);
        if dups > 0 {
            log::warn!("line {line_no}: dropped {dups} duplicate item id(s)");
        }
        duplicates_dropped += dups;
        transactions.push(t);
    }

    let n_items = n_items_hint
        .or(header_n)
        .unwrap_or_else(|| max_seen.map_or(0, |m| m as usize + 1));
    Ok(Loaded {
        db: TransactionDb::new_unchecked(n_items, transactions),
        duplicates_dropped,
    })
}

/// Writes the header and one line per transaction.
pub fn save_db<W: Write>(db: &TransactionDb, mut sink: W) -> Result<()> {
    writeln!(sink, "# n={}", db.n_items)?;
    let mut buf = String::new();
    for t in &db.transactions {
        buf.clear();
        write_ids(&mut buf, t.items()).expect("write to String");
        buf.push('\n');
        sink.write_all(buf.as_bytes())?;
    }
    sink.flush()?;
    Ok(())
}

/// Serialized size in bytes, without materialising the output.
pub fn serialized_len(db: &TransactionDb) -> u64 {
    fn digits(mut v: u32) -> u64 {
        let mut d = 1;
        while v >= 10 {
            v /= 10;
            d += 1;
        }
        d
    }
    let header = format!("# n={}\n", db.n_items).len() as u64;
    let body: u64 = db
        .transactions
        .iter()
        .map(|t| {
            let ids: u64 = t.items().iter().map(|id| digits(id.0)).sum();
            ids + t.len().saturating_sub(1) as u64 + 1
        })
        .sum();
    header + body
}

/// Item popularity law for synthetic data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ItemWeights {
    Uniform,
    /// Item `i` has weight `1 / (i + 1)^exponent`.
    Zipf(f64),
}

/// Generates `n_transactions` transactions over `n_items` items. Lengths are
/// uniform on `1..=max_len` with `max_len = floor(2 * avg_len - 1)`, and items
/// are drawn without replacement according to `weights`.
pub fn gen_synthetic(
    n_items: usize,
    n_transactions: usize,
    avg_len: f64,
    weights: ItemWeights,
    seed: u64,
) -> Result<TransactionDb> {
    if n_transactions == 0 {
        return Err(Error::Param("synthetic database needs at least one transaction".into()));
    }
    if !(avg_len >= 1.0) || avg_len > n_items as f64 {
        return Err(Error::Param(format!(
            "avg_len must lie in [1, n] = [1, {n_items}], got {avg_len}"
        )));
    }
    if avg_len > (n_items as f64 + 1.0) / 2.0 {
        return Err(Error::Param(format!(
            "avg_len {avg_len} exceeds (n+1)/2: lengths up to 2*avg_len-1 would not fit in {n_items} items"
        )));
    }
    let max_len = (2.0 * avg_len - 1.0 + 1e-9).floor() as usize;
    let item_weights: Option<Vec<f64>> = match weights {
        ItemWeights::Uniform => None,
        ItemWeights::Zipf(s) => {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::Param(format!("Zipf exponent must be finite and >= 0, got {s}")));
            }
            Some((0..n_items).map(|i| ((i + 1) as f64).powf(-s)).collect())
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transactions = Vec::with_capacity(n_transactions);
    for _ in 0..n_transactions {
        let len = rng.gen_range(1..=max_len);
        let picked = match &item_weights {
            None => index::sample(&mut rng, n_items, len),
            Some(w) => index::sample_weighted(&mut rng, n_items, |i| w[i], len)
                .map_err(|e| Error::Param(format!("weighted sampling failed: {e}")))?,
        };
        let mut items: Vec<ItemId> = picked.into_iter().map(|i| ItemId(i as u32)).collect();
        items.sort_unstable();
        transactions.push(Transaction::from_sorted_unchecked(items));
    }
    Ok(TransactionDb::new_unchecked(n_items, transactions))
}

/// Adds every item of `itemset` to a random subset of
/// `round(support * N)` transactions. The resulting support of `itemset` is
/// at least `support` (other rows may already contain it).
pub fn plant_itemset(
    db: &TransactionDb,
    itemset: &[ItemId],
    support: f64,
    seed: u64,
) -> Result<TransactionDb> {
    if !(0.0..=1.0).contains(&support) {
        return Err(Error::Param(format!("planted support must lie in [0,1], got {support}")));
    }
    if let Some(bad) = itemset.iter().find(|id| id.index() >= db.n_items) {
        return Err(Error::Param(format!("planted item {bad} is outside the universe")));
    }
    let n = db.len();
    let k = (support * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = index::sample(&mut rng, n, k.min(n));
    let mut transactions = db.transactions.clone();
    for r in rows {
        let t = &transactions[r];
        let (merged, _) =
            Transaction::from_unsorted(t.items().iter().copied().chain(itemset.iter().copied()));
        transactions[r] = merged;
    }
    Ok(TransactionDb::new_unchecked(db.n_items, transactions))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DbStats {
    pub n_items: usize,
    pub n_transactions: usize,
    pub total_items: u64,
    pub avg_len: f64,
    /// Fraction of 1-bits in the dense `N x n` view.
    pub density: f64,
}

pub fn compute_stats(db: &TransactionDb) -> Result<DbStats> {
    if db.is_empty() {
        return Err(Error::EmptyDb);
    }
    let total = db.total_items();
    let n_tx = db.len();
    let density = if db.n_items == 0 {
        0.0
    } else {
        total as f64 / (n_tx as f64 * db.n_items as f64)
    };
    Ok(DbStats {
        n_items: db.n_items,
        n_transactions: n_tx,
        total_items: total,
        avg_len: total as f64 / n_tx as f64,
        density,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Real,
    Fake,
}

/// Ground-truth labels for an anonymized database: which rows are real and,
/// for distorted rows, the bits before distortion.
///
/// Evaluation and attack simulation only. Never written unless explicitly
/// requested, and always to a separate file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProvenanceSidecar {
    pub origin: Vec<Origin>,
    pub original: Vec<Option<Transaction>>,
}

impl ProvenanceSidecar {
    pub fn from_origins(origin: Vec<Origin>) -> Self {
        let original = vec![None; origin.len()];
        ProvenanceSidecar { origin, original }
    }

    pub fn len(&self) -> usize {
        self.origin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origin.is_empty()
    }

    pub fn real_count(&self) -> usize {
        self.origin.iter().filter(|o| **o == Origin::Real).count()
    }

    pub fn fake_count(&self) -> usize {
        self.len() - self.real_count()
    }

    /// Rows of `db` flagged real, in order.
    pub fn real_rows(&self, db: &TransactionDb) -> TransactionDb {
        let rows = db
            .iter()
            .zip(&self.origin)
            .filter(|(_, o)| **o == Origin::Real)
            .map(|(t, _)| t.clone())
            .collect();
        TransactionDb::new_unchecked(db.n_items, rows)
    }

    /// One line per row: `R` or `F`, optionally followed by `|` and the
    /// original item list.
    pub fn save<W: Write>(&self, mut sink: W) -> Result<()> {
        let mut buf = String::new();
        for (o, orig) in self.origin.iter().zip(&self.original) {
            buf.clear();
            buf.push(match o {
                Origin::Real => 'R',
                Origin::Fake => 'F',
            });
            if let Some(t) = orig {
                buf.push('|');
                write_ids(&mut buf, t.items()).expect("write to String");
            }
            buf.push('\n');
            sink.write_all(buf.as_bytes())?;
        }
        sink.flush()?;
        Ok(())
    }

    pub fn load<R: BufRead>(source: R) -> Result<Self> {
        let mut origin = Vec::new();
        let mut original = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            let (tag, rest) = match line.split_once('|') {
                Some((tag, rest)) => (tag, Some(rest)),
                None => (line, None),
            };
            origin.push(match tag.trim() {
                "R" => Origin::Real,
                "F" => Origin::Fake,
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("expected `R` or `F`, found `{other}`"),
                    })
                }
            });
            original.push(match rest {
                None => None,
                Some(list) => {
                    let mut ids = Vec::new();
                    for tok in list.split_ascii_whitespace() {
                        let v: u32 = tok.parse().map_err(|_| Error::Parse {
                            line: line_no,
                            msg: format!("malformed item id `{tok}`"),
                        })?;
                        ids.push(ItemId(v));
                    }
                    Some(Transaction::from_unsorted(ids).0)
                }
            });
        }
        Ok(ProvenanceSidecar { origin, original })
    }
}
