//! Words in the standard surface-group presentation and canonical keys for
//! their conjugacy classes.
//!
//! Letters are encoded as `2 * generator + inverse`, with generators ordered
//! `a1, b1, a2, b2, …`. The lexicographic order used for canonical keys is the
//! order of these codes, so `a1 < A1 < b1 < B1 < a2 < …`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("the word reduces to the identity, which has no conjugacy class key")]
    TrivialClass,
    #[error("cannot parse word {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("letter {letter} is outside the alphabet of genus {genus}")]
    LetterOutOfRange { letter: String, genus: usize },
    #[error("genus must be at least 2, got {0}")]
    Genus(usize),
}

/// One generator or inverse generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(u8);

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Letter((2 * generator + inverse as usize) as u8)
    }

    /// `a_i` for `i` counted from 1.
    pub fn a(i: usize) -> Self {
        Letter::new(2 * (i - 1), false)
    }

    /// `b_i` for `i` counted from 1.
    pub fn b(i: usize) -> Self {
        Letter::new(2 * (i - 1) + 1, false)
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn generator(self) -> usize {
        (self.0 / 2) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn inverse(self) -> Self {
        Letter(self.0 ^ 1)
    }

    /// Handle index `i` (1-based) and whether this is an `a` or `b` letter.
    fn handle(self) -> (usize, bool) {
        let g = self.generator();
        (g / 2 + 1, g % 2 == 0)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (i, is_a) = self.handle();
        let c = match (is_a, self.is_inverse()) {
            (true, false) => 'a',
            (true, true) => 'A',
            (false, false) => 'b',
            (false, true) => 'B',
        };
        write!(f, "{c}{i}")
    }
}

/// A word over the generator alphabet. Constructors do not reduce; use
/// [`Word::reduce`] or [`reduce`] when a freely reduced word is required.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    /// Concatenation followed by free reduction.
    pub fn mul(&self, other: &Word) -> Word {
        let mut out = self.clone();
        for &l in &other.0 {
            out.push_reduced(l);
        }
        out
    }

    pub fn pow(&self, n: usize) -> Word {
        let mut out = Word::empty();
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// `u · self · u⁻¹`, freely reduced.
    pub fn conjugate_by(&self, u: &Word) -> Word {
        u.mul(self).mul(&u.inverse())
    }

    fn push_reduced(&mut self, l: Letter) {
        if self.0.last() == Some(&l.inverse()) {
            self.0.pop();
        } else {
            self.0.push(l);
        }
    }

    pub fn reduce(&self) -> Word {
        let mut out = Word(Vec::with_capacity(self.0.len()));
        for &l in &self.0 {
            out.push_reduced(l);
        }
        out
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inverse())
    }

    /// Strips matching first/last letters of a freely reduced word.
    pub fn cyclic_reduce(&self) -> Word {
        let w = self.reduce();
        let mut lo = 0;
        let mut hi = w.0.len();
        while hi - lo >= 2 && w.0[lo] == w.0[hi - 1].inverse() {
            lo += 1;
            hi -= 1;
        }
        Word(w.0[lo..hi].to_vec())
    }

    /// Largest generator index used, if any.
    pub fn max_generator(&self) -> Option<usize> {
        self.0.iter().map(|l| l.generator()).max()
    }

    /// Exponent sum of each generator (length `2 * genus`).
    pub fn exponent_sums(&self, genus: usize) -> Vec<i64> {
        let mut sums = vec![0i64; 2 * genus];
        for l in &self.0 {
            sums[l.generator()] += if l.is_inverse() { -1 } else { 1 };
        }
        sums
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| WordError::Parse { input: s.to_string(), reason: reason.to_string() };
        let mut letters = Vec::new();
        let bytes: Vec<char> = s.chars().filter(|c| !c.is_whitespace() && *c != '.').collect();
        let mut i = 0;
        while i < bytes.len() {
            let (is_a, inverse) = match bytes[i] {
                'a' => (true, false),
                'A' => (true, true),
                'b' => (false, false),
                'B' => (false, true),
                c => return Err(err(&format!("unexpected character {c:?}"))),
            };
            i += 1;
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if start == i {
                return Err(err("letter without handle index"));
            }
            let idx: usize = bytes[start..i].iter().collect::<String>().parse().map_err(|_| err("bad handle index"))?;
            if idx == 0 {
                return Err(err("handle indices start at 1"));
            }
            let generator = 2 * (idx - 1) + usize::from(!is_a);
            letters.push(Letter::new(generator, inverse));
        }
        Ok(Word(letters))
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Free reduction.
pub fn reduce(w: &Word) -> Word {
    w.reduce()
}

/// Canonical key of the conjugacy class of `w` in the free group, merged
/// with the class of `w⁻¹`: the lexicographic minimum over all rotations of
/// the cyclic reduction and of its inverse.
pub fn conjugacy_key(w: &Word) -> Result<Word, WordError> {
    let c = w.cyclic_reduce();
    if c.is_empty() {
        return Err(WordError::TrivialClass);
    }
    Ok(Word(min_rotation_pair(&c.0)))
}

fn min_rotation(letters: &[Letter]) -> Vec<Letter> {
    let n = letters.len();
    let mut best: Option<Vec<Letter>> = None;
    for r in 0..n {
        let cand: Vec<Letter> = letters[r..].iter().chain(&letters[..r]).copied().collect();
        if best.as_ref().map_or(true, |b| cand < *b) {
            best = Some(cand);
        }
    }
    best.unwrap_or_default()
}

fn min_rotation_pair(letters: &[Letter]) -> Vec<Letter> {
    let inv: Vec<Letter> = letters.iter().rev().map(|l| l.inverse()).collect();
    let a = min_rotation(letters);
    let b = min_rotation(&inv);
    a.min(b)
}

/// Standard presentation `⟨a1, b1, …, a_g, b_g | ∏ [a_i, b_i]⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    genus: usize,
}

impl Presentation {
    pub fn new(genus: usize) -> Result<Self, WordError> {
        if genus < 2 {
            return Err(WordError::Genus(genus));
        }
        Ok(Presentation { genus })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn generator_count(&self) -> usize {
        2 * self.genus
    }

    /// All `4·genus` letters in code order.
    pub fn alphabet(&self) -> Vec<Letter> {
        (0..4 * self.genus).map(|c| Letter(c as u8)).collect()
    }

    pub fn generators(&self) -> Vec<Letter> {
        (0..2 * self.genus).map(|g| Letter::new(g, false)).collect()
    }

    /// `a1 b1 A1 B1 a2 b2 A2 B2 …`
    pub fn relator(&self) -> Word {
        let mut letters = Vec::with_capacity(4 * self.genus);
        for i in 1..=self.genus {
            let (a, b) = (Letter::a(i), Letter::b(i));
            letters.extend([a, b, a.inverse(), b.inverse()]);
        }
        Word(letters)
    }

    pub fn check_word(&self, w: &Word) -> Result<(), WordError> {
        match w.letters().iter().find(|l| l.generator() >= self.generator_count()) {
            Some(l) => Err(WordError::LetterOutOfRange { letter: l.to_string(), genus: self.genus }),
            None => Ok(()),
        }
    }
}

/// Finite truncation of the set of conjugacy classes: canonical keys of all
/// cyclically reduced words of length at most `max_length`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjClassSet {
    max_length: usize,
    classes: Vec<Word>,
    index: HashMap<Word, usize>,
}

impl ConjClassSet {
    pub fn from_classes(max_length: usize, classes: Vec<Word>) -> Self {
        let index = classes.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        ConjClassSet { max_length, classes, index }
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    pub fn classes(&self) -> &[Word] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Position of the class of `w`, or `None` for the identity or a class
    /// outside the truncation.
    pub fn position(&self, w: &Word) -> Option<usize> {
        let key = conjugacy_key(w).ok()?;
        self.index.get(&key).copied()
    }

    pub fn position_of_key(&self, key: &Word) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Restriction to classes of length at most `n`, in the same order.
    pub fn truncate(&self, n: usize) -> ConjClassSet {
        let classes = self.classes.iter().filter(|w| w.len() <= n).cloned().collect();
        ConjClassSet::from_classes(n.min(self.max_length), classes)
    }
}

/// Enumerates the canonical keys of all nontrivial classes with cyclically
/// reduced length `≤ max_length`, ordered by length and then lexicographically.
pub fn enumerate_classes(p: &Presentation, max_length: usize) -> ConjClassSet {
    let alphabet = p.alphabet();
    let mut classes = Vec::new();
    let mut buf = Vec::with_capacity(max_length);
    for len in 1..=max_length {
        extend_canonical(&alphabet, len, &mut buf, &mut classes);
    }
    ConjClassSet::from_classes(max_length, classes)
}

fn extend_canonical(alphabet: &[Letter], len: usize, buf: &mut Vec<Letter>, out: &mut Vec<Word>) {
    if buf.len() == len {
        if len > 1 && buf[0] == buf[len - 1].inverse() {
            return;
        }
        if min_rotation_pair(buf) == *buf {
            out.push(Word(buf.clone()));
        }
        return;
    }
    for &l in alphabet {
        if let Some(&last) = buf.last() {
            if l == last.inverse() {
                continue;
            }
        }
        // A canonical key starts with its smallest letter.
        if let Some(&first) = buf.first() {
            if l < first {
                continue;
            }
        }
        buf.push(l);
        extend_canonical(alphabet, len, buf, out);
        buf.pop();
    }
}

/// Distinct keys of a set of words, for diagnostics.
pub fn distinct_keys<'a>(words: impl IntoIterator<Item = &'a Word>) -> BTreeSet<Word> {
    words.into_iter().filter_map(|w| conjugacy_key(w).ok()).collect()
}
