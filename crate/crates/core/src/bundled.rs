//! Pinyin and radical tables for 500 common characters, compiled into the
//! library. Readings are tone-stripped with `v` standing for u-umlaut; each
//! character carries a single reading and a single radical.

use crate::resources::{load_pinyin_table, load_radical_table, PinyinTable, RadicalTable};

pub const PINYIN_TSV: &str = include_str!("../data/pinyin_500.tsv");
pub const RADICALS_TSV: &str = include_str!("../data/radicals_500.tsv");

pub fn pinyin_table() -> PinyinTable {
    load_pinyin_table(PINYIN_TSV.as_bytes()).expect("bundled pinyin table is valid")
}

pub fn radical_table() -> RadicalTable {
    load_radical_table(RADICALS_TSV.as_bytes()).expect("bundled radical table is valid")
}

/// The bundled characters in file order.
pub fn characters() -> Vec<char> {
    PINYIN_TSV
        .lines()
        .filter_map(|l| l.chars().next())
        .collect()
}
