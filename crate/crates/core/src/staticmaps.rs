//! Commutative generating series of formal static maps and the
//! Wiener-Fliess composition product.
//!
//! A commutative series over `{x̃_1, ..., x̃_m}` is stored as a map from
//! exponent vectors to coefficients, so commutativity is structural and the
//! Cauchy product is ordinary sparse polynomial multiplication.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::products::shuffle_terms;
use crate::series::{check_eq, insert_term, one_terms, Coefficient, Order, Series, Terms};

/// Exponent vector of a commutative monomial. Ordered by total degree and
/// then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Exponents(Vec<u32>);

impl Exponents {
    pub fn new(exps: Vec<u32>) -> Self {
        Exponents(exps)
    }

    pub fn zeros(variables: usize) -> Self {
        Exponents(vec![0; variables])
    }

    pub fn unit(variables: usize, i: usize) -> Self {
        let mut e = Self::zeros(variables);
        e.0[i] = 1;
        e
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn variables(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn add(&self, other: &Exponents) -> Exponents {
        Exponents(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Exponents {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Exponents {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Exponents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("]")
    }
}

type CommTerms = BTreeMap<Exponents, Coefficient>;

fn insert_comm(terms: &mut CommTerms, e: Exponents, c: Coefficient) {
    if c.is_zero() {
        return;
    }
    match terms.entry(e) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            *o.get_mut() += c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

/// Truncated commutative series with `outputs` components in `variables`
/// commuting letters.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CommutativeSeries {
    variables: usize,
    degree: usize,
    components: Vec<CommTerms>,
}

impl CommutativeSeries {
    pub fn zero(variables: usize, outputs: usize, degree: usize) -> Result<Self> {
        if variables == 0 || outputs == 0 {
            return Err(Error::InvalidArgument(
                "commutative series need at least one variable and one output".into(),
            ));
        }
        Ok(CommutativeSeries {
            variables,
            degree,
            components: vec![CommTerms::new(); outputs],
        })
    }

    pub fn constant(variables: usize, degree: usize, values: &[Coefficient]) -> Result<Self> {
        let mut s = Self::zero(variables, values.len(), degree)?;
        for (t, v) in s.components.iter_mut().zip(values) {
            insert_comm(t, Exponents::zeros(variables), v.clone());
        }
        Ok(s)
    }

    pub fn ones(variables: usize, outputs: usize, degree: usize) -> Result<Self> {
        Self::constant(variables, degree, &vec![Coefficient::one(); outputs])
    }

    pub fn from_terms<I>(variables: usize, outputs: usize, degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponents, usize, Coefficient)>,
    {
        let mut s = Self::zero(variables, outputs, degree)?;
        for (e, component, c) in terms {
            check_eq("exponent vector length", variables, e.variables())?;
            if e.total_degree() > degree {
                return Err(Error::BeyondTruncation {
                    length: e.total_degree(),
                    degree,
                });
            }
            if component >= outputs {
                return Err(Error::ComponentOutOfRange { component, outputs });
            }
            insert_comm(&mut s.components[component], e, c);
        }
        Ok(s)
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn outputs(&self) -> usize {
        self.components.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Terms as `(exponents, component, coefficient)`, monomials in graded
    /// order and components ascending within a monomial.
    pub fn terms(&self) -> Vec<(&Exponents, usize, &Coefficient)> {
        let mut out: Vec<_> = self
            .components
            .iter()
            .enumerate()
            .flat_map(|(i, t)| t.iter().map(move |(e, c)| (e, i, c)))
            .collect();
        out.sort_by(|a, b| a.0.cmp(b.0).then(a.1.cmp(&b.1)));
        out
    }

    pub fn coefficient(&self, e: &Exponents, component: usize) -> Result<Coefficient> {
        if component >= self.outputs() {
            return Err(Error::ComponentOutOfRange {
                component,
                outputs: self.outputs(),
            });
        }
        check_eq("exponent vector length", self.variables, e.variables())?;
        if e.total_degree() > self.degree {
            return Err(Error::BeyondTruncation {
                length: e.total_degree(),
                degree: self.degree,
            });
        }
        Ok(self.components[component]
            .get(e)
            .cloned()
            .unwrap_or_else(Coefficient::zero))
    }

    fn constant_of(t: &CommTerms, variables: usize) -> Coefficient {
        t.get(&Exponents::zeros(variables))
            .cloned()
            .unwrap_or_else(Coefficient::zero)
    }

    pub fn is_purely_improper(&self) -> bool {
        self.components
            .iter()
            .all(|t| !Self::constant_of(t, self.variables).is_zero())
    }

    pub fn require_purely_improper(&self) -> Result<()> {
        match self
            .components
            .iter()
            .position(|t| Self::constant_of(t, self.variables).is_zero())
        {
            Some(component) => Err(Error::NotPurelyImproper { component }),
            None => Ok(()),
        }
    }

    /// Order of the proper part: the smallest total degree of a
    /// non-constant monomial, or infinite for a constant series.
    pub fn omega_bar(&self) -> Order {
        self.components
            .iter()
            .flat_map(|t| t.keys())
            .filter(|e| !e.is_constant())
            .map(|e| Order::Finite(e.total_degree()))
            .min()
            .unwrap_or(Order::Infinite)
    }

    /// Drops every monomial above `degree`. Only lowering is allowed.
    pub fn truncate(&self, degree: usize) -> Result<CommutativeSeries> {
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
                    .filter(|(e, _)| e.total_degree() <= degree)
                    .map(|(e, c)| (e.clone(), c.clone()))
                    .collect()
            })
            .collect();
        Ok(CommutativeSeries {
            variables: self.variables,
            degree,
            components,
        })
    }

    fn check_same_shape(&self, other: &CommutativeSeries) -> Result<()> {
        check_eq("variable count", self.variables, other.variables)?;
        check_eq("output count", self.outputs(), other.outputs())?;
        check_eq("truncation degree", self.degree, other.degree)
    }

    fn check_point_len(&self, len: usize) -> Result<()> {
        if len != self.variables {
            return Err(Error::DimensionMismatch {
                context: "static map evaluation point",
                expected: self.variables,
                found: len,
            });
        }
        Ok(())
    }

    /// Evaluates the truncated static map `f_d(z) = Σ (d, η) z^η` exactly.
    pub fn eval_static(&self, z: &[Coefficient]) -> Result<Vec<Coefficient>> {
        self.check_point_len(z.len())?;
        Ok(self
            .components
            .iter()
            .map(|t| {
                t.iter()
                    .map(|(e, c)| {
                        e.0.iter()
                            .zip(z)
                            .fold(c.clone(), |acc, (&k, zi)| acc * num_traits::pow(zi.clone(), k as usize))
                    })
                    .fold(Coefficient::zero(), |a, b| a + b)
            })
            .collect())
    }

    /// Floating-point evaluation used by the simulator.
    pub fn eval_static_f64(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_point_len(z.len())?;
        Ok(self
            .components
            .iter()
            .map(|t| {
                t.iter()
                    .map(|(e, c)| {
                        let c = c.to_f64().unwrap_or(f64::NAN);
                        e.0.iter().zip(z).fold(c, |acc, (&k, zi)| acc * zi.powi(k as i32))
                    })
                    .sum()
            })
            .collect())
    }
}

/// Product of the static maps, i.e. the truncated polynomial product.
pub fn cauchy_comm(d: &CommutativeSeries, e: &CommutativeSeries) -> Result<CommutativeSeries> {
    d.check_same_shape(e)?;
    let components = d
        .components
        .iter()
        .zip(&e.components)
        .map(|(a, b)| poly_mul(a, b, d.degree))
        .collect();
    Ok(CommutativeSeries {
        variables: d.variables,
        degree: d.degree,
        components,
    })
}

fn poly_mul(a: &CommTerms, b: &CommTerms, degree: usize) -> CommTerms {
    let mut out = CommTerms::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            if ea.total_degree() + eb.total_degree() > degree {
                break;
            }
            insert_comm(&mut out, ea.add(eb), ca * cb);
        }
    }
    out
}

/// Multiplicative inverse of the static map, `f_d^{-1} = f_{d^{-1}}`.
pub fn cauchy_inverse_comm(d: &CommutativeSeries) -> Result<CommutativeSeries> {
    d.require_purely_improper()?;
    let zeros = Exponents::zeros(d.variables);
    let components = d
        .components
        .iter()
        .map(|t| {
            let inv0 = CommutativeSeries::constant_of(t, d.variables).recip();
            let mut proper = CommTerms::new();
            for (e, c) in t {
                if !e.is_constant() {
                    insert_comm(&mut proper, e.clone(), -(c * &inv0));
                }
            }
            let mut one = CommTerms::new();
            one.insert(zeros.clone(), Coefficient::one());
            let mut sum = one.clone();
            let mut power = one;
            for _ in 0..d.degree {
                power = poly_mul(&power, &proper, d.degree);
                if power.is_empty() {
                    break;
                }
                for (e, c) in &power {
                    insert_comm(&mut sum, e.clone(), c.clone());
                }
            }
            sum.values_mut().for_each(|c| *c *= &inv0);
            sum
        })
        .collect();
    Ok(CommutativeSeries {
        variables: d.variables,
        degree: d.degree,
        components,
    })
}

/// Wiener-Fliess composition `d ⊓ c`: the generating series of `f_d ∘ F_c`.
///
/// `c` must be proper, so every shuffle factor has order at least one and
/// monomials above the truncation degree vanish.
pub fn wiener_fliess(d: &CommutativeSeries, c: &Series) -> Result<Series> {
    if d.variables != c.outputs() {
        return Err(Error::DimensionMismatch {
            context: "Wiener-Fliess: static map variables vs series outputs",
            expected: c.outputs(),
            found: d.variables,
        });
    }
    check_eq("truncation degree", d.degree, c.degree())?;
    c.require_proper()?;
    let n = c.degree();

    // c^{ш e} for every exponent vector met so far, built by peeling one
    // factor c_i at a time.
    let mut powers: HashMap<Exponents, Terms> = HashMap::new();
    powers.insert(Exponents::zeros(d.variables), one_terms());
    fn power_of(e: &Exponents, c: &Series, n: usize, powers: &mut HashMap<Exponents, Terms>) -> Terms {
        if let Some(p) = powers.get(e) {
            return p.clone();
        }
        let i = e.0.iter().position(|&k| k > 0).expect("nonconstant exponent");
        let mut rest = e.clone();
        rest.0[i] -= 1;
        let tail = power_of(&rest, c, n, powers);
        let p = shuffle_terms(c.component_terms(i), &tail, n);
        powers.insert(e.clone(), p.clone());
        p
    }

    let components = d
        .components
        .iter()
        .map(|t| {
            let mut out = Terms::new();
            for (e, coeff) in t {
                if e.total_degree() > n {
                    continue;
                }
                for (w, v) in power_of(e, c, n, &mut powers) {
                    insert_term(&mut out, w, coeff * v);
                }
            }
            out
        })
        .collect();
    Ok(Series::from_components(c.alphabet(), n, components))
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::series::integer;
    use proptest::prelude::*;

    /// Scalar-output commutative series from `(coefficient, exponents)`.
    pub fn comm(variables: usize, degree: usize, terms: &[(i64, &[u32])]) -> CommutativeSeries {
        CommutativeSeries::from_terms(
            variables,
            1,
            degree,
            terms.iter().map(|(c, e)| (Exponents::new(e.to_vec()), 0, integer(*c))),
        )
        .unwrap()
    }

    pub fn arb_comm(
        variables: usize,
        outputs: usize,
        degree: usize,
        max_terms: usize,
    ) -> BoxedStrategy<CommutativeSeries> {
        let term = (
            prop::collection::vec(0u32..=degree as u32, variables),
            0..outputs,
            -3i64..=3,
        );
        prop::collection::vec(term, 0..=max_terms)
            .prop_map(move |terms| {
                CommutativeSeries::from_terms(
                    variables,
                    outputs,
                    degree,
                    terms
                        .into_iter()
                        .filter(|(e, _, _)| e.iter().sum::<u32>() as usize <= degree)
                        .map(|(e, i, c)| (Exponents::new(e), i, integer(c))),
                )
                .unwrap()
            })
            .boxed()
    }

    pub fn arb_comm_purely_improper(
        variables: usize,
        outputs: usize,
        degree: usize,
        max_terms: usize,
    ) -> BoxedStrategy<CommutativeSeries> {
        let consts = prop::collection::vec(prop::sample::select(vec![-2i64, -1, 1, 2, 3]), outputs);
        (arb_comm(variables, outputs, degree, max_terms), consts)
            .prop_map(move |(mut s, cs)| {
                for (t, c) in s.components.iter_mut().zip(cs) {
                    t.insert(Exponents::zeros(variables), integer(c));
                }
                s
            })
            .boxed()
    }
}
