//! Word algebra for free groups and surface groups.
//!
//! Letters are signed 1-based generator indices: `2` is the second generator,
//! `-2` its inverse.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Letter = i8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    Free { rank: usize },
    Surface { genus: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPreset {
    pub kind: GroupKind,
    pub ngens: usize,
    pub relator: Vec<Letter>,
}

impl GroupPreset {
    pub fn free(rank: usize) -> Self {
        assert!(rank >= 1 && rank <= 60);
        GroupPreset { kind: GroupKind::Free { rank }, ngens: rank, relator: Vec::new() }
    }

    /// Surface group with relator [a1,b1]...[ag,bg]; generators ordered a1,b1,a2,b2,...
    pub fn surface(genus: usize) -> Self {
        assert!(genus >= 1 && genus <= 30);
        let mut relator = Vec::with_capacity(4 * genus);
        for j in 0..genus {
            let a = (2 * j + 1) as Letter;
            let b = (2 * j + 2) as Letter;
            relator.extend_from_slice(&[a, b, -a, -b]);
        }
        GroupPreset { kind: GroupKind::Surface { genus }, ngens: 2 * genus, relator }
    }

    pub fn is_surface(&self) -> bool {
        matches!(self.kind, GroupKind::Surface { .. })
    }

    pub fn gen_name(&self, x: Letter) -> String {
        let i = x.unsigned_abs() as usize;
        let base = match self.kind {
            GroupKind::Free { rank } if rank <= 26 => {
                ((b'a' + (i - 1) as u8) as char).to_string()
            }
            GroupKind::Free { .. } => format!("g{i}"),
            GroupKind::Surface { .. } => {
                let j = (i - 1) / 2 + 1;
                if i % 2 == 1 { format!("a{j}") } else { format!("b{j}") }
            }
        };
        if x < 0 { base.to_uppercase() } else { base }
    }

    pub fn parse_letter(&self, s: &str) -> Option<Letter> {
        (1..=self.ngens as Letter)
            .flat_map(|i| [i, -i])
            .find(|&x| self.gen_name(x) == s)
    }

    /// Parses a word written as letter names separated by `.` (empty string is the identity).
    pub fn parse_word(&self, s: &str) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(Word::empty());
        }
        let mut letters = Vec::new();
        for tok in s.split('.') {
            let x = self
                .parse_letter(tok.trim())
                .ok_or_else(|| Error::InvalidParameters(format!("unknown letter `{tok}`")))?;
            letters.push(x);
        }
        Ok(Word(letters))
    }

    pub fn format_word(&self, w: &Word) -> String {
        if w.is_empty() {
            return "e".into();
        }
        w.0.iter().map(|&x| self.gen_name(x)).collect::<Vec<_>>().join(".")
    }
}

/// Position of a letter in the fixed total order a < A < b < B < ...
#[inline]
pub fn letter_rank(x: Letter) -> u8 {
    2 * (x.unsigned_abs() - 1) + (x < 0) as u8
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&x| -x).collect())
    }
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
    pub fn pow(&self, k: usize) -> Word {
        Word(self.0.repeat(k))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            self.0
                .iter()
                .map(|&x| letter_rank(x))
                .cmp(other.0.iter().map(|&x| letter_rank(x)))
        })
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "[{}]", s.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConjugacyClass {
    pub canonical: Word,
    pub partner: Word,
}

pub fn reduce(w: &Word) -> Word {
    let mut out: Vec<Letter> = Vec::with_capacity(w.len());
    for &x in &w.0 {
        if out.last() == Some(&-x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    Word(out)
}

pub fn cyclic_reduce(w: &Word) -> Word {
    let w = reduce(w);
    let v = &w.0;
    let (mut i, mut j) = (0usize, v.len());
    while j >= i + 2 && v[i] == -v[j - 1] {
        i += 1;
        j -= 1;
    }
    Word(v[i..j].to_vec())
}

/// Start index of the least rotation of `s` (Booth).
pub fn least_rotation<T: Ord + Copy>(s: &[T]) -> usize {
    let n = s.len();
    if n == 0 {
        return 0;
    }
    let at = |i: isize| s[(i as usize) % n];
    let mut f = vec![-1isize; 2 * n];
    let mut k: isize = 0;
    for j in 1..(2 * n) as isize {
        let sj = at(j);
        let mut i = f[(j - k - 1) as usize];
        while i != -1 && sj != at(k + i + 1) {
            if sj < at(k + i + 1) {
                k = j - i - 1;
            }
            i = f[i as usize];
        }
        if sj != at(k + i + 1) {
            if sj < at(k) {
                k = j;
            }
            f[(j - k) as usize] = -1;
        } else {
            f[(j - k) as usize] = i + 1;
        }
    }
    (k as usize) % n
}

pub fn rotate<T: Copy>(s: &[T], start: usize) -> Vec<T> {
    let n = s.len();
    (0..n).map(|i| s[(start + i) % n]).collect()
}

fn min_rotation(w: &Word) -> Word {
    let ranks: Vec<u8> = w.0.iter().map(|&x| letter_rank(x)).collect();
    Word(rotate(&w.0, least_rotation(&ranks)))
}

/// Cyclic rotations of the relator and of its inverse.
fn relator_rotations(rel: &[Letter]) -> Vec<Vec<Letter>> {
    let inv: Vec<Letter> = rel.iter().rev().map(|&x| -x).collect();
    let mut out = Vec::with_capacity(2 * rel.len());
    for r in [rel.to_vec(), inv] {
        for s in 0..r.len() {
            out.push(rotate(&r, s));
        }
    }
    out
}

/// Cyclic Dehn reduction: while the cyclic word contains more than half of a
/// relator rotation, replace that piece by the inverse of the complement.
pub fn dehn_reduce_cyclic(w: &Word, relator: &[Letter]) -> Word {
    let mut cur = cyclic_reduce(w);
    if relator.is_empty() {
        return cur;
    }
    let rots = relator_rotations(relator);
    let rl = relator.len();
    let half = rl / 2;
    'outer: loop {
        let n = cur.len();
        if n == 0 {
            return cur;
        }
        for i in 0..n {
            for r in &rots {
                let mut m = 0;
                while m < rl && m < n && cur.0[(i + m) % n] == r[m] {
                    m += 1;
                }
                if m > half {
                    let rotated = rotate(&cur.0, i);
                    let mut next: Vec<Letter> = r[m..].iter().rev().map(|&x| -x).collect();
                    next.extend_from_slice(&rotated[m..]);
                    cur = cyclic_reduce(&Word(next));
                    continue 'outer;
                }
            }
        }
        return cur;
    }
}

fn canonical_word(w: &Word, preset: &GroupPreset) -> Word {
    let c = if preset.is_surface() {
        dehn_reduce_cyclic(w, &preset.relator)
    } else {
        cyclic_reduce(w)
    };
    min_rotation(&c)
}

pub fn canonical_class(w: &Word, preset: &GroupPreset) -> Result<ConjugacyClass> {
    let canonical = canonical_word(w, preset);
    if canonical.is_empty() {
        return Err(Error::TrivialElement);
    }
    let partner = canonical_word(&canonical.inverse(), preset);
    Ok(ConjugacyClass { canonical, partner })
}

/// Smallest rotation period of a cyclic word.
pub fn word_period<T: PartialEq>(s: &[T]) -> usize {
    let n = s.len();
    (1..=n)
        .find(|&p| n % p == 0 && (p..n).all(|i| s[i] == s[i - p]))
        .unwrap_or(n)
}

pub fn primitive_root(c: &ConjugacyClass, preset: &GroupPreset) -> (ConjugacyClass, usize) {
    let w = &c.canonical.0;
    let p = word_period(w);
    if p == w.len() {
        return (c.clone(), 1);
    }
    let root = Word(w[..p].to_vec());
    let partner = canonical_word(&root.inverse(), preset);
    (ConjugacyClass { canonical: root, partner }, w.len() / p)
}

pub fn abelianize(w: &Word, preset: &GroupPreset) -> Vec<i64> {
    let mut h = vec![0i64; preset.ngens];
    for &x in &w.0 {
        let i = x.unsigned_abs() as usize - 1;
        h[i] += if x > 0 { 1 } else { -1 };
    }
    h
}

/// All conjugacy classes represented by a cyclically reduced word of length
/// at most `max_len`, in (length, lexicographic) order.
pub fn enumerate_classes(preset: &GroupPreset, max_len: usize) -> Vec<ConjugacyClass> {
    let m = preset.ngens as Letter;
    let letters: Vec<Letter> = (1..=m).flat_map(|i| [i, -i]).collect();
    let mut found: BTreeSet<Word> = BTreeSet::new();
    let mut stack: Vec<Letter> = Vec::new();

    fn rec(
        stack: &mut Vec<Letter>,
        max_len: usize,
        letters: &[Letter],
        preset: &GroupPreset,
        found: &mut BTreeSet<Word>,
    ) {
        if !stack.is_empty() && stack[0] != -*stack.last().unwrap() {
            let w = Word(stack.clone());
            if preset.is_surface() {
                let c = canonical_word(&w, preset);
                if !c.is_empty() {
                    found.insert(c);
                }
            } else {
                let ranks: Vec<u8> = w.0.iter().map(|&x| letter_rank(x)).collect();
                if rotate(&ranks, least_rotation(&ranks)) == ranks {
                    found.insert(w);
                }
            }
        }
        if stack.len() == max_len {
            return;
        }
        for &x in letters {
            if stack.last() == Some(&-x) {
                continue;
            }
            stack.push(x);
            rec(stack, max_len, letters, preset, found);
            stack.pop();
        }
    }

    rec(&mut stack, max_len, &letters, preset, &mut found);
    found
        .into_iter()
        .map(|w| {
            let partner = canonical_word(&w.inverse(), preset);
            ConjugacyClass { canonical: w, partner }
        })
        .collect()
}
