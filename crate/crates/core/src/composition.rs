//! Composition-type products.
//!
//! Both the composition product and the multiplicative mixed composition
//! product substitute every support word of the left operand letter by
//! letter, right to left, starting from the unit series. Each letter `x_i`
//! maps a series `e` to `y (f_i ш e)`, where the emitted letter `y` and the
//! factor `f_i` depend on the product:
//!
//! | product           | emitted letter | factor for `x_0` | factor for `x_i` |
//! |-------------------|----------------|------------------|------------------|
//! | `compose`         | `x_0`          | `1`              | `d_i`            |
//! | `mixed_compose`   | `x_i`          | `1`              | `d_i`            |
//!
//! Every application prepends one letter, so a word of length `k` only
//! contributes at degrees `>= k`; words longer than the truncation degree
//! are skipped and intermediate results are truncated after every step.

use std::collections::HashMap;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::products::{shuffle, shuffle_inverse, shuffle_terms};
use crate::series::{check_eq, insert_term, one_terms, Series, Terms};
use crate::words::{Alphabet, Letter, Word};

/// A series `δ ш d`: the generating series of `u ↦ u · F_d[u]`. Only `d` is
/// stored. Its output count equals the number of inputs of its alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaSeries(Series);

impl DeltaSeries {
    pub fn new(inner: Series) -> Result<Self> {
        let inputs = inner.alphabet().inputs();
        if inner.outputs() != inputs {
            return Err(Error::DimensionMismatch {
                context: "delta series outputs vs alphabet inputs",
                expected: inputs,
                found: inner.outputs(),
            });
        }
        Ok(DeltaSeries(inner))
    }

    /// `δ ш ll`, the identity of the multiplicative composition product.
    pub fn identity(alphabet: Alphabet, degree: usize) -> Result<Self> {
        Self::new(Series::ones(alphabet, alphabet.inputs(), degree)?)
    }

    pub fn inner(&self) -> &Series {
        &self.0
    }

    pub fn into_inner(self) -> Series {
        self.0
    }
}

/// Applies the letter substitution to every support word of `c`.
fn substitute<'a>(
    c: &Series,
    out_alphabet: Alphabet,
    degree: usize,
    action: impl Fn(Letter) -> (Letter, Option<&'a Terms>),
) -> Series {
    // Image of the unit series under each suffix, shared across words.
    let mut memo: HashMap<Word, Rc<Terms>> = HashMap::new();
    memo.insert(Word::empty(), Rc::new(one_terms()));

    let mut image = |word: &Word| -> Rc<Terms> {
        for start in (0..word.len()).rev() {
            let suffix = word.suffix(start);
            if memo.contains_key(&suffix) {
                continue;
            }
            let inner = memo[&suffix.suffix(1)].clone();
            let (emit, factor) = action(suffix.letters()[0]);
            let max_inner = degree - 1;
            let product = match factor {
                Some(f) => shuffle_terms(f, &inner, max_inner),
                None => inner
                    .iter()
                    .filter(|(w, _)| w.len() <= max_inner)
                    .map(|(w, c)| (w.clone(), c.clone()))
                    .collect(),
            };
            let shifted: Terms = product.into_iter().map(|(w, c)| (w.prepend(emit), c)).collect();
            memo.insert(suffix, Rc::new(shifted));
        }
        memo[word].clone()
    };

    let components = c
        .components()
        .iter()
        .map(|terms| {
            let mut out = Terms::new();
            for (word, coeff) in terms {
                if word.len() > degree {
                    continue;
                }
                for (w, v) in image(word).iter() {
                    insert_term(&mut out, w.clone(), coeff * v);
                }
            }
            out
        })
        .collect();
    Series::from_components(out_alphabet, degree, components)
}

/// Composition product `c ∘ d`: the generating series of the cascade
/// `F_c ∘ F_d`. `c` lives over an alphabet with one letter per output of
/// `d` plus drift.
pub fn compose(c: &Series, d: &Series) -> Result<Series> {
    if c.alphabet().size() != d.outputs() + 1 {
        return Err(Error::DimensionMismatch {
            context: "composition: left alphabet size vs right outputs + 1",
            expected: d.outputs() + 1,
            found: c.alphabet().size(),
        });
    }
    check_eq("truncation degree", c.degree(), d.degree())?;
    Ok(substitute(c, d.alphabet(), d.degree(), |l| {
        let factor = (l > 0).then(|| d.component_terms(l as usize - 1));
        (0, factor)
    }))
}

/// Multiplicative mixed composition product `c ⊓∘ δd`: the generating series
/// of `u ↦ F_c[u · F_d[u]]`.
pub fn mixed_compose(c: &Series, dd: &DeltaSeries) -> Result<Series> {
    let d = dd.inner();
    check_eq("alphabet size", c.alphabet().size(), d.alphabet().size())?;
    check_eq("truncation degree", c.degree(), d.degree())?;
    Ok(substitute(c, c.alphabet(), c.degree(), |l| {
        let factor = (l > 0).then(|| d.component_terms(l as usize - 1));
        (l, factor)
    }))
}

/// Multiplicative composition product `δc ∘ δd = δ(d ш (c ⊓∘ δd))`.
pub fn mult_compose(cc: &DeltaSeries, dd: &DeltaSeries) -> Result<DeltaSeries> {
    cc.inner().check_same_shape(dd.inner())?;
    let mixed = mixed_compose(cc.inner(), dd)?;
    Ok(DeltaSeries(shuffle(dd.inner(), &mixed)?))
}

/// Inverse of `δd` in the multiplicative dynamic output feedback group,
/// returned as the inner series `d^{∘-1}`.
///
/// Solves `e = d^{ш-1} ⊓∘ δe` by fixed-point iteration from
/// `e = d^{ш-1}`. The map gains at least one degree of agreement per step,
/// so `degree + 1` steps reach the exact truncated fixed point.
pub fn group_inverse(d: &Series) -> Result<Series> {
    d.require_purely_improper()?;
    DeltaSeries::new(d.clone())?;
    let d_inv = shuffle_inverse(d)?;
    let mut e = d_inv.clone();
    for _ in 0..d.degree() + 2 {
        let next = mixed_compose(&d_inv, &DeltaSeries(e.clone()))?;
        if next == e {
            return Ok(e);
        }
        e = next;
    }
    Err(Error::Invariant(format!(
        "group inverse iteration did not stabilize within {} steps",
        d.degree() + 2
    )))
}
