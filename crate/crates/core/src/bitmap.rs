//! Vertical layout: one bitmap of transaction rows per item.

use crate::market_basket::{ItemId, TransactionDb};

#[derive(Clone, Debug)]
pub(crate) struct ItemBitmaps {
    words: usize,
    rows: usize,
    bits: Vec<Vec<u64>>,
}

impl ItemBitmaps {
    pub fn build(db: &TransactionDb) -> Self {
        let rows = db.len();
        let words = rows.div_ceil(64);
        let mut bits = vec![vec![0u64; words]; db.n_items()];
        for (row, t) in db.iter().enumerate() {
            let (w, b) = (row / 64, row % 64);
            for id in t.items() {
                bits[id.index()][w] |= 1u64 << b;
            }
        }
        ItemBitmaps { words, rows, bits }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn item(&self, id: ItemId) -> &[u64] {
        &self.bits[id.index()]
    }

    #[cfg(test)]
    pub fn count_item(&self, id: ItemId) -> u64 {
        popcount(self.item(id))
    }

    /// Bitmap of rows containing every item of `items` (all rows when empty).
    pub fn intersect(&self, items: &[ItemId]) -> Vec<u64> {
        let mut acc = match items.first() {
            Some(&first) => self.item(first).to_vec(),
            None => self.all_rows(),
        };
        for &id in &items[1.min(items.len())..] {
            and_assign(&mut acc, self.item(id));
        }
        acc
    }

    pub fn all_rows(&self) -> Vec<u64> {
        let mut v = vec![u64::MAX; self.words];
        let tail = self.rows % 64;
        if tail != 0 {
            if let Some(last) = v.last_mut() {
                *last = (1u64 << tail) - 1;
            }
        }
        v
    }
}

#[inline]
pub(crate) fn popcount(words: &[u64]) -> u64 {
    words.iter().map(|w| w.count_ones() as u64).sum()
}

#[inline]
pub(crate) fn and_assign(acc: &mut [u64], other: &[u64]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a &= *b;
    }
}

#[inline]
pub(crate) fn and_popcount(a: &[u64], b: &[u64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as u64).sum()
}
