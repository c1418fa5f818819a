//! Byte-level BPE without pre-tokenization. Training merges the most
//! frequent adjacent pair, breaking count ties by the lexicographically
//! smallest `(left bytes, right bytes)`, and stops at the target size or
//! once no pair occurs twice.

use std::cmp::Ordering;
use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::rc::Rc;
use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

pub const BASE_SYMBOLS: usize = 256;

type Pair = (u32, u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeVocab {
    pub corpus_tag: String,
    pub seed: u64,
    merges: Vec<Pair>,
    symbols: Vec<Vec<u8>>,
    ranks: HashMap<Pair, u32>,
}

impl BpeVocab {
    fn base(corpus_tag: &str, seed: u64) -> Self {
        BpeVocab {
            corpus_tag: corpus_tag.to_string(),
            seed,
            merges: Vec::new(),
            symbols: (0..=255u8).map(|b| vec![b]).collect(),
            ranks: HashMap::new(),
        }
    }

    fn push_merge(&mut self, pair: Pair) -> u32 {
        let id = self.symbols.len() as u32;
        let mut sym = self.symbols[pair.0 as usize].clone();
        sym.extend_from_slice(&self.symbols[pair.1 as usize]);
        self.symbols.push(sym);
        self.ranks.insert(pair, self.merges.len() as u32);
        self.merges.push(pair);
        id
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbol(&self, id: u32) -> &[u8] {
        &self.symbols[id as usize]
    }

    /// Merge rules in training order, as byte strings.
    pub fn merges(&self) -> impl Iterator<Item = (&[u8], &[u8])> {
        self.merges.iter().map(|&(a, b)| (self.symbol(a), self.symbol(b)))
    }

    pub fn longest_symbol(&self) -> usize {
        self.symbols.iter().map(Vec::len).max().unwrap_or(1)
    }

    /// Applies merges lowest rank first. Each rank's occurrences are taken
    /// left to right, via a position heap over a linked list of symbols.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        let mut ids: Vec<u32> = text.bytes().map(u32::from).collect();
        let n = ids.len();
        if n < 2 {
            return ids;
        }
        let mut next: Vec<usize> = (1..=n).collect();
        let mut prev: Vec<usize> = (0..n).map(|i| i.wrapping_sub(1)).collect();
        let mut alive = vec![true; n];
        let mut heap = BinaryHeap::new();
        for i in 0..n - 1 {
            if let Some(&r) = self.ranks.get(&(ids[i], ids[i + 1])) {
                heap.push(Reverse((r, i)));
            }
        }
        while let Some(Reverse((rank, i))) = heap.pop() {
            let j = next[i];
            if !alive[i] || j >= n || self.ranks.get(&(ids[i], ids[j])) != Some(&rank) {
                continue;
            }
            ids[i] = BASE_SYMBOLS as u32 + rank;
            alive[j] = false;
            next[i] = next[j];
            if next[i] < n {
                prev[next[i]] = i;
                if let Some(&r) = self.ranks.get(&(ids[i], ids[next[i]])) {
                    heap.push(Reverse((r, i)));
                }
            }
            let p = prev[i];
            if p < n {
                if let Some(&r) = self.ranks.get(&(ids[p], ids[i])) {
                    heap.push(Reverse((r, p)));
                }
            }
        }
        ids.into_iter().zip(alive).filter_map(|(id, a)| a.then_some(id)).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> String {
        let bytes: Vec<u8> = ids.iter().flat_map(|&i| self.symbol(i).iter().copied()).collect();
        String::from_utf8_lossy(&bytes).into_owned()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("#bpe tag={} seed={} size={}\n", self.corpus_tag, self.seed, self.size());
        for (a, b) in self.merges() {
            let _ = writeln!(out, "{} {}", hex::encode(a), hex::encode(b));
        }
        out
    }

    pub fn from_text(text: &str, name: &str) -> Result<Self> {
        let mut tag = String::new();
        let mut seed = 0;
        let mut body = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if let Some(header) = line.strip_prefix("#bpe") {
                for field in header.split_whitespace() {
                    if let Some(t) = field.strip_prefix("tag=") {
                        tag = t.to_string();
                    } else if let Some(s) = field.strip_prefix("seed=") {
                        seed = s.parse().unwrap_or(0);
                    }
                }
            } else if !line.is_empty() {
                body.push((i as u64 + 1, line));
            }
        }
        let mut vocab = BpeVocab::base(&tag, seed);
        let mut lookup: HashMap<Vec<u8>, u32> = vocab.symbols.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
        for (line, text) in body {
            let bad = |message: String| Error::Parse {
                source_name: name.to_string(),
                line,
                message,
            };
            let (a, b) = text.split_once(' ').ok_or_else(|| bad("expected two hex symbols".into()))?;
            let id = |h: &str| -> Result<u32> {
                let bytes = hex::decode(h).map_err(|e| bad(e.to_string()))?;
                lookup.get(&bytes).copied().ok_or_else(|| bad(format!("symbol {h} used before it is defined")))
            };
            let pair = (id(a)?, id(b)?);
            let new = vocab.push_merge(pair);
            lookup.entry(vocab.symbol(new).to_vec()).or_insert(new);
        }
        Ok(vocab)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::corpus::csvio::write_file(path, self.to_text().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, &path.display().to_string())
    }
}

#[derive(PartialEq, Eq)]
struct Candidate {
    count: i64,
    left: Rc<[u8]>,
    right: Rc<[u8]>,
    pair: Pair,
}

impl Ord for Candidate {
    // max-heap: higher count first, then the smaller byte pair
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| (&other.left, &other.right).cmp(&(&self.left, &self.right)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Merges every left-to-right occurrence of `pair` in `seq`, returning the
/// new sequence plus the pairs that disappeared and appeared. Pairs not
/// touching a merge site are the same before and after.
fn merge_in_place(seq: &[u32], pair: Pair, merged: u32) -> Option<(Vec<u32>, Vec<Pair>, Vec<Pair>)> {
    let mut out = Vec::with_capacity(seq.len());
    let mut hit_old = vec![false; seq.len()];
    let mut hit_new = Vec::with_capacity(seq.len());
    let mut i = 0;
    while i < seq.len() {
        if i + 1 < seq.len() && (seq[i], seq[i + 1]) == pair {
            hit_old[i] = true;
            hit_old[i + 1] = true;
            out.push(merged);
            hit_new.push(true);
            i += 2;
        } else {
            out.push(seq[i]);
            hit_new.push(false);
            i += 1;
        }
    }
    if out.len() == seq.len() {
        return None;
    }
    let touched = |s: &[u32], hit: &[bool]| -> Vec<Pair> {
        (0..s.len().saturating_sub(1))
            .filter(|&k| hit[k] || hit[k + 1])
            .map(|k| (s[k], s[k + 1]))
            .collect()
    };
    let gone = touched(seq, &hit_old);
    let born = touched(&out, &hit_new);
    Some((out, gone, born))
}

/// Trains a vocabulary of at most `vocab_size` symbols. The seed only tags
/// the result: training is deterministic.
pub fn train_bpe(docs: &[&str], vocab_size: usize, seed: u64, corpus_tag: &str) -> Result<BpeVocab> {
    if vocab_size <= BASE_SYMBOLS {
        return Err(Error::InvalidArgument(format!(
            "vocabulary size must exceed the {BASE_SYMBOLS} byte symbols, got {vocab_size}"
        )));
    }
    if docs.iter().all(|d| d.is_empty()) {
        return Err(Error::InvalidArgument("empty training corpus".into()));
    }
    let mut vocab = BpeVocab::base(corpus_tag, seed);
    let mut bytes: Vec<Rc<[u8]>> = vocab.symbols.iter().map(|s| Rc::from(s.as_slice())).collect();
    let mut seqs: Vec<Vec<u32>> = docs.iter().map(|d| d.bytes().map(u32::from).collect()).collect();
    let mut counts: HashMap<Pair, i64> = HashMap::new();
    // may list documents that no longer hold the pair; those merges are no-ops
    let mut holders: HashMap<Pair, BTreeSet<usize>> = HashMap::new();
    for (di, s) in seqs.iter().enumerate() {
        for w in s.windows(2) {
            let p = (w[0], w[1]);
            *counts.entry(p).or_default() += 1;
            holders.entry(p).or_default().insert(di);
        }
    }
    let candidate = |p: Pair, count: i64, bytes: &[Rc<[u8]>]| Candidate {
        count,
        left: bytes[p.0 as usize].clone(),
        right: bytes[p.1 as usize].clone(),
        pair: p,
    };
    let mut heap: BinaryHeap<Candidate> =
        counts.iter().filter(|(_, &c)| c >= 2).map(|(&p, &c)| candidate(p, c, &bytes)).collect();
    while vocab.size() < vocab_size {
        // drop stale entries; a live one matches the current count
        let best = loop {
            match heap.pop() {
                None => break None,
                Some(c) if counts.get(&c.pair) == Some(&c.count) => break Some(c.pair),
                Some(_) => {}
            }
        };
        let Some(pair) = best else { break };
        let merged = vocab.push_merge(pair);
        bytes.push(Rc::from(vocab.symbol(merged)));
        let mut changed: BTreeSet<Pair> = BTreeSet::new();
        for di in holders.remove(&pair).unwrap_or_default() {
            let Some((out, gone, born)) = merge_in_place(&seqs[di], pair, merged) else { continue };
            for p in gone {
                let c = counts.get_mut(&p).expect("counted pair");
                *c -= 1;
                if *c == 0 {
                    counts.remove(&p);
                }
                changed.insert(p);
            }
            for p in born {
                *counts.entry(p).or_default() += 1;
                holders.entry(p).or_default().insert(di);
                changed.insert(p);
            }
            seqs[di] = out;
        }
        for p in changed {
            match counts.get(&p) {
                Some(&c) if c >= 2 => heap.push(candidate(p, c, &bytes)),
                Some(_) => {}
                None => {
                    holders.remove(&p);
                }
            }
        }
    }
    Ok(vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_pair_is_merged_first() {
        let v = train_bpe(&["aaaa"], 258, 0, "t").unwrap();
        let merges: Vec<_> = v.merges().collect();
        assert_eq!(merges[0], (&b"a"[..], &b"a"[..]));
        // (aa, aa) then occurs once, so training stops short of the target
        assert_eq!(merges.len(), 1);
        assert_eq!(v.encode("aaaa"), [256, 256]);
    }

    #[test]
    fn ties_break_lexicographically() {
        // "ab" and "cd" both occur twice
        let v = train_bpe(&["abcd abcd"], 257, 0, "t").unwrap();
        assert_eq!(v.merges().next().unwrap(), (&b"a"[..], &b"b"[..]));
    }

    #[test]
    fn stops_when_nothing_repeats() {
        let v = train_bpe(&["abcdef"], 1000, 0, "t").unwrap();
        assert_eq!(v.size(), 256);
        assert!(train_bpe(&["abc"], 256, 0, "t").is_err());
        assert!(train_bpe(&[""], 300, 0, "t").is_err());
    }

    #[test]
    fn round_trips_and_serializes() {
        let docs = ["int x = 1;\nint y = x + 1;\n", "return x + y;", "naïve — ünïcödé"];
        let v = train_bpe(&docs, 300, 9, "code").unwrap();
        for d in docs.iter().chain(["never seen: ∑ 😀"].iter()) {
            assert_eq!(v.decode(&v.encode(d)), *d);
        }
        let back = BpeVocab::from_text(&v.to_text(), "vocab").unwrap();
        assert_eq!(back, v);
        assert_eq!(train_bpe(&docs, 300, 9, "code").unwrap(), v);
        assert!(BpeVocab::from_text("6162 zz\n", "v").is_err());
    }
}
