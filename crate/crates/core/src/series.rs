//! Truncated, vector-valued noncommutative formal power series with exact
//! rational coefficients.
//!
//! Invariants of [`Series`]:
//! - every stored word has length `<= degree` and only uses letters of the
//!   alphabet;
//! - no stored coefficient is zero, so structural equality is series equality;
//! - there is at least one output component.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::words::{Alphabet, Word};

/// Exact rational coefficient, always kept in lowest terms with a positive
/// denominator.
pub type Coefficient = BigRational;

/// Terms of one output component.
pub(crate) type Terms = BTreeMap<Word, Coefficient>;

pub fn rational(num: i64, den: i64) -> Coefficient {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn integer(n: i64) -> Coefficient {
    BigRational::from_integer(BigInt::from(n))
}

/// Order of a series: the length of its shortest support word, or infinite
/// for the zero series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    Finite(usize),
    Infinite,
}

impl Order {
    pub fn is_infinite(self) -> bool {
        matches!(self, Order::Infinite)
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            Order::Finite(n) => Some(n),
            Order::Infinite => None,
        }
    }
}

impl std::ops::Add for Order {
    type Output = Order;

    fn add(self, rhs: Order) -> Order {
        match (self, rhs) {
            (Order::Finite(a), Order::Finite(b)) => Order::Finite(a + b),
            _ => Order::Infinite,
        }
    }
}

impl std::ops::Add<usize> for Order {
    type Output = Order;

    fn add(self, rhs: usize) -> Order {
        self + Order::Finite(rhs)
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(n) => write!(f, "{n}"),
            Order::Infinite => f.write_str("inf"),
        }
    }
}

pub(crate) fn insert_term(terms: &mut Terms, word: Word, coeff: Coefficient) {
    if coeff.is_zero() {
        return;
    }
    match terms.entry(word) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(coeff);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            *o.get_mut() += coeff;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

pub(crate) fn terms_order(terms: &Terms) -> Order {
    // BTreeMap order is length-lex, so the first key is the shortest.
    terms.keys().next().map_or(Order::Infinite, |w| Order::Finite(w.len()))
}

pub(crate) fn constant_of(terms: &Terms) -> Coefficient {
    terms.get(&Word::empty()).cloned().unwrap_or_else(Coefficient::zero)
}

pub(crate) fn one_terms() -> Terms {
    let mut t = Terms::new();
    t.insert(Word::empty(), Coefficient::one());
    t
}

/// A truncated formal power series over `alphabet` with `outputs` components.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Series {
    alphabet: Alphabet,
    degree: usize,
    components: Vec<Terms>,
}

impl Series {
    pub fn zero(alphabet: Alphabet, outputs: usize, degree: usize) -> Result<Self> {
        if outputs == 0 {
            return Err(Error::InvalidArgument("a series needs at least one output".into()));
        }
        Ok(Series {
            alphabet,
            degree,
            components: vec![Terms::new(); outputs],
        })
    }

    /// The all-ones constant series, identity of both the Cauchy and shuffle
    /// products.
    pub fn ones(alphabet: Alphabet, outputs: usize, degree: usize) -> Result<Self> {
        Self::constant(alphabet, degree, &vec![Coefficient::one(); outputs])
    }

    pub fn constant(alphabet: Alphabet, degree: usize, values: &[Coefficient]) -> Result<Self> {
        let mut s = Self::zero(alphabet, values.len(), degree)?;
        for (terms, v) in s.components.iter_mut().zip(values) {
            insert_term(terms, Word::empty(), v.clone());
        }
        Ok(s)
    }

    /// Builds a series from `(word, component, coefficient)` triples,
    /// summing duplicates and dropping zeros.
    pub fn from_terms<I>(alphabet: Alphabet, outputs: usize, degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Word, usize, Coefficient)>,
    {
        let mut s = Self::zero(alphabet, outputs, degree)?;
        for (word, component, coeff) in terms {
            alphabet.validate(&word)?;
            if word.len() > degree {
                return Err(Error::BeyondTruncation {
                    length: word.len(),
                    degree,
                });
            }
            if component >= outputs {
                return Err(Error::ComponentOutOfRange { component, outputs });
            }
            insert_term(&mut s.components[component], word, coeff);
        }
        Ok(s)
    }

    /// Single-output series from `(coefficient, word)` pairs.
    pub fn scalar<I>(alphabet: Alphabet, degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Coefficient, Word)>,
    {
        Self::from_terms(alphabet, 1, degree, terms.into_iter().map(|(c, w)| (w, 0, c)))
    }

    pub(crate) fn from_components(alphabet: Alphabet, degree: usize, components: Vec<Terms>) -> Self {
        debug_assert!(!components.is_empty());
        debug_assert!(components
            .iter()
            .all(|t| t.iter().all(|(w, c)| w.len() <= degree && !c.is_zero())));
        Series {
            alphabet,
            degree,
            components,
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn outputs(&self) -> usize {
        self.components.len()
    }

    pub(crate) fn components(&self) -> &[Terms] {
        &self.components
    }

    pub(crate) fn component_terms(&self, i: usize) -> &Terms {
        &self.components[i]
    }

    /// All nonzero terms as `(word, component, coefficient)`, words in
    /// length-lex order and components ascending within a word.
    pub fn terms(&self) -> Vec<(&Word, usize, &Coefficient)> {
        let mut out: Vec<_> = self
            .components
            .iter()
            .enumerate()
            .flat_map(|(i, t)| t.iter().map(move |(w, c)| (w, i, c)))
            .collect();
        out.sort_by(|a, b| a.0.cmp(b.0).then(a.1.cmp(&b.1)));
        out
    }

    pub fn support_len(&self) -> usize {
        self.components.iter().map(|t| t.len()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|t| t.is_empty())
    }

    /// Largest letter index used, if any.
    pub fn max_letter(&self) -> Option<usize> {
        self.components
            .iter()
            .flat_map(|t| t.keys())
            .filter_map(|w| w.max_letter())
            .max()
            .map(|l| l as usize)
    }

    /// Coefficient of `word` in component `i`. Words longer than the
    /// truncation degree are unknown, not zero, and are reported as errors.
    pub fn coefficient(&self, word: &Word, i: usize) -> Result<Coefficient> {
        self.check_component(i)?;
        self.alphabet.validate(word)?;
        if word.len() > self.degree {
            return Err(Error::BeyondTruncation {
                length: word.len(),
                degree: self.degree,
            });
        }
        Ok(self.components[i].get(word).cloned().unwrap_or_else(Coefficient::zero))
    }

    pub fn constant_term(&self, i: usize) -> Result<Coefficient> {
        self.check_component(i)?;
        Ok(constant_of(&self.components[i]))
    }

    pub fn component_is_proper(&self, i: usize) -> Result<bool> {
        Ok(self.constant_term(i)?.is_zero())
    }

    /// True when every component has zero constant term.
    pub fn is_proper(&self) -> bool {
        self.components.iter().all(|t| constant_of(t).is_zero())
    }

    /// True when every component has a nonzero constant term.
    pub fn is_purely_improper(&self) -> bool {
        self.components.iter().all(|t| !constant_of(t).is_zero())
    }

    pub fn require_proper(&self) -> Result<()> {
        match self.components.iter().position(|t| !constant_of(t).is_zero()) {
            Some(component) => Err(Error::NotProper { component }),
            None => Ok(()),
        }
    }

    pub fn require_purely_improper(&self) -> Result<()> {
        match self.components.iter().position(|t| constant_of(t).is_zero()) {
            Some(component) => Err(Error::NotPurelyImproper { component }),
            None => Ok(()),
        }
    }

    pub fn order(&self) -> Order {
        self.components.iter().map(terms_order).min().unwrap_or(Order::Infinite)
    }

    /// The series with its constant terms removed.
    pub fn proper_part(&self) -> Series {
        let mut out = self.clone();
        for t in &mut out.components {
            t.remove(&Word::empty());
        }
        out
    }

    /// `sigma^ord(self - other)`, or zero when the series agree up to the
    /// truncation degree.
    pub fn ultrametric(&self, other: &Series, sigma: &Coefficient) -> Result<Coefficient> {
        if !(sigma.is_positive() && sigma < &Coefficient::one()) {
            return Err(Error::InvalidArgument(format!("sigma must lie in (0, 1), got {sigma}")));
        }
        match self.sub(other)?.order() {
            Order::Infinite => Ok(Coefficient::zero()),
            Order::Finite(n) => Ok(num_traits::pow(sigma.clone(), n)),
        }
    }

    pub(crate) fn check_component(&self, i: usize) -> Result<()> {
        if i >= self.outputs() {
            return Err(Error::ComponentOutOfRange {
                component: i,
                outputs: self.outputs(),
            });
        }
        Ok(())
    }

    pub fn check_same_shape(&self, other: &Series) -> Result<()> {
        check_eq("alphabet size", self.alphabet.size(), other.alphabet.size())?;
        check_eq("output count", self.outputs(), other.outputs())?;
        check_eq("truncation degree", self.degree, other.degree)
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (t, o) in out.components.iter_mut().zip(&other.components) {
            for (w, c) in o {
                insert_term(t, w.clone(), c.clone());
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Series {
        self.scale(&-Coefficient::one())
    }

    pub fn scale(&self, r: &Coefficient) -> Series {
        let mut out = self.clone();
        if r.is_zero() {
            out.components.iter_mut().for_each(|t| t.clear());
            return out;
        }
        for t in &mut out.components {
            for c in t.values_mut() {
                *c *= r;
            }
        }
        out
    }

    /// Component `i` as a single-output series.
    pub fn component(&self, i: usize) -> Result<Series> {
        self.check_component(i)?;
        Ok(Series::from_components(
            self.alphabet,
            self.degree,
            vec![self.components[i].clone()],
        ))
    }

    /// Concatenates the output components of several series.
    pub fn stack(parts: &[Series]) -> Result<Series> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot stack an empty list".into()))?;
        let mut components = Vec::new();
        for p in parts {
            check_eq("alphabet size", first.alphabet.size(), p.alphabet.size())?;
            check_eq("truncation degree", first.degree, p.degree)?;
            components.extend(p.components.iter().cloned());
        }
        Ok(Series::from_components(first.alphabet, first.degree, components))
    }

    /// Drops every term above `degree`. Only lowering is allowed.
    pub fn truncate(&self, degree: usize) -> Result<Series> {
        if degree > self.degree {
            return Err(Error::InvalidArgument(format!(
                "cannot raise truncation degree from {} to {degree}",
                self.degree
            )));
        }
        let components = self
            .components
            .iter()
            .map(|t| {
                t.iter()
                    .filter(|(w, _)| w.len() <= degree)
                    .map(|(w, c)| (w.clone(), c.clone()))
                    .collect()
            })
            .collect();
        Ok(Series::from_components(self.alphabet, degree, components))
    }

    /// Reinterprets the retained terms as a polynomial truncated at a higher
    /// degree. Coefficients of the new lengths are zero.
    pub fn extend_degree(&self, degree: usize) -> Result<Series> {
        if degree < self.degree {
            return Err(Error::InvalidArgument(format!(
                "cannot lower truncation degree from {} to {degree} by extension",
                self.degree
            )));
        }
        let mut out = self.clone();
        out.degree = degree;
        Ok(out)
    }

    /// Views the series over a larger alphabet; the new letters simply do not
    /// occur in the support.
    pub fn with_alphabet(&self, alphabet: Alphabet) -> Result<Series> {
        if let Some(l) = self.max_letter() {
            if l >= alphabet.size() {
                return Err(Error::LetterOutOfRange {
                    letter: l,
                    size: alphabet.size(),
                });
            }
        }
        let mut out = self.clone();
        out.alphabet = alphabet;
        Ok(out)
    }
}

pub(crate) fn check_eq(what: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::ShapeMismatch { what, left, right });
    }
    Ok(())
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Series(alphabet={}, outputs={}, degree={}) {}",
            self.alphabet.size(),
            self.outputs(),
            self.degree,
            self
        )
    }
}

/// Human-readable form, e.g. `[1 + 2*x1 - x0 x1]`, one bracket per component.
impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            if t.is_empty() {
                f.write_str("0")?;
            }
            for (k, (w, c)) in t.iter().enumerate() {
                let (sign, mag) = if c.is_negative() {
                    ("-", -c.clone())
                } else {
                    ("+", c.clone())
                };
                match (k, sign) {
                    (0, "-") => f.write_str("-")?,
                    (0, _) => {}
                    _ => write!(f, " {sign} ")?,
                }
                if w.is_empty() {
                    write!(f, "{mag}")?;
                } else if mag.is_one() {
                    write!(f, "{w}")?;
                } else {
                    write!(f, "{mag}*{w}")?;
                }
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Scalar series from `(numerator, word)` pairs with integer coefficients.
    pub fn scalar(size: usize, degree: usize, terms: &[(i64, &str)]) -> Series {
        let a = Alphabet::new(size).unwrap();
        Series::scalar(a, degree, terms.iter().map(|(c, w)| (integer(*c), w.parse().unwrap()))).unwrap()
    }

    pub fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    use proptest::prelude::*;

    /// Random series with at most `max_terms` terms, coefficients in [-3, 3].
    pub fn arb_series(size: usize, outputs: usize, degree: usize, max_terms: usize) -> BoxedStrategy<Series> {
        let term = (prop::collection::vec(0..size as u8, 0..=degree), 0..outputs, -3i64..=3);
        prop::collection::vec(term, 0..=max_terms)
            .prop_map(move |terms| {
                let a = Alphabet::new(size).unwrap();
                Series::from_terms(
                    a,
                    outputs,
                    degree,
                    terms
                        .into_iter()
                        .map(|(l, i, c)| (Word::from_letters(&l), i, integer(c))),
                )
                .unwrap()
            })
            .boxed()
    }

    pub fn arb_proper(size: usize, outputs: usize, degree: usize, max_terms: usize) -> BoxedStrategy<Series> {
        arb_series(size, outputs, degree, max_terms)
            .prop_map(|s| s.proper_part())
            .boxed()
    }

    /// Random series whose constant terms are drawn from a nonzero set.
    pub fn arb_purely_improper(size: usize, outputs: usize, degree: usize, max_terms: usize) -> BoxedStrategy<Series> {
        let consts = prop::collection::vec(prop::sample::select(vec![-2i64, -1, 1, 2, 3]), outputs);
        (arb_proper(size, outputs, degree, max_terms), consts)
            .prop_map(|(s, cs)| {
                let cs: Vec<_> = cs.into_iter().map(integer).collect();
                let shift = Series::constant(s.alphabet(), s.degree(), &cs).unwrap();
                s.add(&shift).unwrap()
            })
            .boxed()
    }
}
