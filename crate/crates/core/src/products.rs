//! Cauchy (catenation) and shuffle products, and their inverses on purely
//! improper series. Vector-valued series multiply component-wise.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::Result;
use crate::series::{constant_of, insert_term, one_terms, Coefficient, Series, Terms};
use crate::words::Word;

type WordShuffle = Rc<Vec<(Word, u64)>>;

// Past this many entries the memo is dropped and rebuilt on demand.
const MEMO_LIMIT: usize = 1 << 18;

thread_local! {
    static SHUFFLE_MEMO: RefCell<HashMap<(Word, Word), WordShuffle>> = RefCell::new(HashMap::new());
}

fn memo_key(a: &Word, b: &Word) -> (Word, Word) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Shuffle of two words as a list of `(word, multiplicity)`, memoized per
/// thread. Shuffle is commutative, so the key is order-normalized.
fn shuffle_word_pair(a: &Word, b: &Word) -> WordShuffle {
    if a.is_empty() {
        return Rc::new(vec![(b.clone(), 1)]);
    }
    if b.is_empty() {
        return Rc::new(vec![(a.clone(), 1)]);
    }
    let key = memo_key(a, b);
    if let Some(hit) = SHUFFLE_MEMO.with(|m| m.borrow().get(&key).cloned()) {
        return hit;
    }
    let (la, ra) = a.split_first().expect("nonempty");
    let (lb, rb) = b.split_first().expect("nonempty");
    let mut acc: BTreeMap<Word, u64> = BTreeMap::new();
    for (w, m) in shuffle_word_pair(&ra, b).iter() {
        *acc.entry(w.prepend(la)).or_default() += m;
    }
    for (w, m) in shuffle_word_pair(a, &rb).iter() {
        *acc.entry(w.prepend(lb)).or_default() += m;
    }
    let result: WordShuffle = Rc::new(acc.into_iter().collect());
    SHUFFLE_MEMO.with(|m| {
        let mut m = m.borrow_mut();
        if m.len() >= MEMO_LIMIT {
            m.clear();
        }
        m.insert(key, result.clone());
    });
    result
}

/// Shuffle of two words: every interleaving with its multiplicity.
pub fn shuffle_words(a: &Word, b: &Word) -> BTreeMap<Word, u64> {
    shuffle_word_pair(a, b).iter().cloned().collect()
}

pub(crate) fn shuffle_terms(a: &Terms, b: &Terms, max_len: usize) -> Terms {
    let mut out = Terms::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            if wa.len() + wb.len() > max_len {
                // b iterates in length order, so nothing later fits either.
                break;
            }
            let prod = ca * cb;
            for (w, m) in shuffle_word_pair(wa, wb).iter() {
                let coeff = if *m == 1 {
                    prod.clone()
                } else {
                    &prod * Coefficient::from_integer(BigInt::from(*m))
                };
                insert_term(&mut out, w.clone(), coeff);
            }
        }
    }
    out
}

pub(crate) fn cauchy_terms(a: &Terms, b: &Terms, max_len: usize) -> Terms {
    let mut out = Terms::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            if wa.len() + wb.len() > max_len {
                break;
            }
            insert_term(&mut out, wa.concat(wb), ca * cb);
        }
    }
    out
}

/// `(d, e)^{-1} * sum_{k=0..=max_len} (1 - d/(d,e))^k` under `product`.
/// The proper part has order >= 1, so the k-th power only reaches degrees
/// >= k and the sum is exact up to `max_len`.
fn geometric_inverse(d: &Terms, max_len: usize, product: fn(&Terms, &Terms, usize) -> Terms) -> Terms {
    let d0 = constant_of(d);
    debug_assert!(!d0.is_zero());
    let inv0 = d0.recip();
    let mut proper = Terms::new();
    for (w, c) in d {
        if !w.is_empty() {
            insert_term(&mut proper, w.clone(), -(c * &inv0));
        }
    }
    let mut sum = one_terms();
    let mut power = one_terms();
    for _ in 0..max_len {
        power = product(&power, &proper, max_len);
        if power.is_empty() {
            break;
        }
        for (w, c) in &power {
            insert_term(&mut sum, w.clone(), c.clone());
        }
    }
    for c in sum.values_mut() {
        *c *= &inv0;
    }
    sum
}

pub(crate) fn shuffle_inverse_terms(d: &Terms, max_len: usize) -> Terms {
    geometric_inverse(d, max_len, shuffle_terms)
}

fn componentwise(c: &Series, d: &Series, f: impl Fn(&Terms, &Terms, usize) -> Terms) -> Result<Series> {
    c.check_same_shape(d)?;
    let n = c.degree();
    let comps = c
        .components()
        .iter()
        .zip(d.components())
        .map(|(a, b)| f(a, b, n))
        .collect();
    Ok(Series::from_components(c.alphabet(), n, comps))
}

fn map_components(c: &Series, f: impl Fn(&Terms, usize) -> Terms) -> Series {
    let n = c.degree();
    let comps = c.components().iter().map(|t| f(t, n)).collect();
    Series::from_components(c.alphabet(), n, comps)
}

pub fn cauchy(c: &Series, d: &Series) -> Result<Series> {
    componentwise(c, d, cauchy_terms)
}

pub fn shuffle(c: &Series, d: &Series) -> Result<Series> {
    componentwise(c, d, shuffle_terms)
}

pub fn cauchy_inverse(d: &Series) -> Result<Series> {
    d.require_purely_improper()?;
    Ok(map_components(d, |t, n| geometric_inverse(t, n, cauchy_terms)))
}

pub fn shuffle_inverse(d: &Series) -> Result<Series> {
    d.require_purely_improper()?;
    Ok(map_components(d, shuffle_inverse_terms))
}

/// k-fold shuffle power; the zeroth power is the all-ones series.
pub fn shuffle_power(c: &Series, k: usize) -> Series {
    map_components(c, |t, n| {
        let mut acc = one_terms();
        for _ in 0..k {
            acc = shuffle_terms(&acc, t, n);
        }
        acc
    })
}
