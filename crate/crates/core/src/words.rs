//! Alphabets and words over them.
//!
//! A word is a finite sequence of letter indices. Letter `0` is always the
//! drift letter `x0`. Words order shortest-first and then lexicographically
//! by letter index, which is the canonical order used for every rendered
//! series.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Letter index. Letter `0` is the drift letter.
pub type Letter = u8;

pub const MAX_ALPHABET: usize = 256;

/// A finite alphabet `{x0, x1, ..., x(size-1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || size > MAX_ALPHABET {
            return Err(Error::InvalidAlphabet(size));
        }
        Ok(Alphabet { size })
    }

    /// Alphabet for a system with `inputs` input channels plus the drift letter.
    pub fn with_inputs(inputs: usize) -> Result<Self> {
        Self::new(inputs + 1)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of non-drift letters.
    pub fn inputs(&self) -> usize {
        self.size - 1
    }

    pub fn contains(&self, word: &Word) -> bool {
        word.letters().iter().all(|&l| (l as usize) < self.size)
    }

    pub fn validate(&self, word: &Word) -> Result<()> {
        match word.letters().iter().find(|&&l| l as usize >= self.size) {
            Some(&l) => Err(Error::LetterOutOfRange {
                letter: l as usize,
                size: self.size,
            }),
            None => Ok(()),
        }
    }

    /// Catenation of two words, both checked against this alphabet.
    pub fn concat(&self, a: &Word, b: &Word) -> Result<Word> {
        self.validate(a)?;
        self.validate(b)?;
        Ok(a.concat(b))
    }

    pub fn compare_length_lex(&self, a: &Word, b: &Word) -> Result<Ordering> {
        self.validate(a)?;
        self.validate(b)?;
        Ok(a.cmp(b))
    }

    /// Every word of length at most `degree`, in length-lex order.
    pub fn words_up_to(&self, degree: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        let mut layer = vec![Word::empty()];
        for _ in 0..degree {
            let mut next = Vec::with_capacity(layer.len() * self.size);
            for w in &layer {
                for l in 0..self.size {
                    next.push(w.append(l as Letter));
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}

/// A word over some alphabet. The empty word is the monoid identity.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(SmallVec<[Letter; 12]>);

impl Word {
    pub fn empty() -> Self {
        Word(SmallVec::new())
    }

    pub fn from_letters(letters: &[Letter]) -> Self {
        Word(SmallVec::from_slice(letters))
    }

    pub fn letter(l: Letter) -> Self {
        Word(SmallVec::from_slice(&[l]))
    }

    /// `letter` repeated `n` times.
    pub fn power(l: Letter, n: usize) -> Self {
        Word(std::iter::repeat_n(l, n).collect())
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

    /// Number of occurrences of `l`.
    pub fn count(&self, l: Letter) -> usize {
        self.0.iter().filter(|&&x| x == l).count()
    }

    pub fn max_letter(&self) -> Option<Letter> {
        self.0.iter().copied().max()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn prepend(&self, l: Letter) -> Word {
        let mut v = SmallVec::with_capacity(self.len() + 1);
        v.push(l);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn append(&self, l: Letter) -> Word {
        let mut v = self.0.clone();
        v.push(l);
        Word(v)
    }

    /// Splits off the first letter.
    pub fn split_first(&self) -> Option<(Letter, Word)> {
        self.0.split_first().map(|(&l, rest)| (l, Word::from_letters(rest)))
    }

    pub fn suffix(&self, start: usize) -> Word {
        Word::from_letters(&self.0[start..])
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.as_slice().cmp(other.0.as_slice()))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("e");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "x{l}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

/// Parses one `x<i>` token.
pub(crate) fn parse_letter(token: &str) -> Option<Letter> {
    let digits = token.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let n: usize = digits.parse().ok()?;
    if n >= MAX_ALPHABET {
        return None;
    }
    Some(n as Letter)
}

/// Whitespace-separated tokens paired with their 1-based column.
pub(crate) fn tokens_with_columns(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(s, t)| (line[..s].chars().count() + 1, t))
        .collect()
}

/// Parses word tokens (`e`, or a run of `x<i>`), reporting errors on `line`.
pub(crate) fn parse_word_tokens(tokens: &[(usize, &str)], line: usize) -> Result<Word> {
    if let [(_, "e")] = tokens {
        return Ok(Word::empty());
    }
    let mut letters = SmallVec::new();
    for &(column, token) in tokens {
        let l = parse_letter(token)
            .ok_or_else(|| Error::parse(line, column, format!("expected letter `x<i>`, found `{token}`")))?;
        letters.push(l);
    }
    Ok(Word(letters))
}

impl FromStr for Word {
    type Err = Error;

    /// Accepts `e` for the empty word or whitespace-separated `x<i>` tokens.
    fn from_str(s: &str) -> Result<Self> {
        parse_word_tokens(&tokens_with_columns(s), 1)
    }
}
