#![allow(dead_code)]

use std::path::PathBuf;

use ppmine::apriori::{FrequentItemset, Fraction, Itemset};
use ppmine::market_basket::{load_db, ItemId, TransactionDb};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn sample_db() -> TransactionDb {
    let f = std::fs::File::open(fixture("basket8.txt")).unwrap();
    load_db(std::io::BufReader::new(f), None).unwrap().db
}

/// Every nonempty itemset whose count passes `keep(k, count)`, by exhaustive
/// enumeration of the `2^n` subsets. Only for small universes.
pub fn brute_force<F: Fn(usize, u64) -> bool>(db: &TransactionDb, keep: F) -> Vec<FrequentItemset> {
    let n = db.n_items();
    assert!(n <= 16);
    let masks: Vec<u32> = db
        .iter()
        .map(|t| t.items().iter().fold(0u32, |m, id| m | (1 << id.0)))
        .collect();
    let mut out = Vec::new();
    for subset in 1u32..(1 << n) {
        let count = masks.iter().filter(|&&m| m & subset == subset).count() as u64;
        let k = subset.count_ones() as usize;
        if count >= 1 && keep(k, count) {
            let ids = (0..n as u32).filter(|i| subset & (1 << i) != 0).map(ItemId);
            out.push(FrequentItemset {
                itemset: Itemset::new(ids),
                support: Fraction::new(count, db.len() as u64),
            });
        }
    }
    out.sort_by(|a, b| (a.itemset.len(), a.itemset.items()).cmp(&(b.itemset.len(), b.itemset.items())));
    out
}
