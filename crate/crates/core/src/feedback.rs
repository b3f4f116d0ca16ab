//! Multiplicative output feedback.
//!
//! Closing the loop `u = v · F_d[y]` around `y = F_c[u]` gives a Chen-Fliess
//! series in closed form. With `d` a dynamic (Chen-Fliess) controller the
//! closed loop is `c ⊓∘ δ((d^{ш-1} ∘ c)^{-1})`; with `d` the generating
//! series of a static map it is `c ⊓∘ δ((d^{-1} ⊓ c)^{-1})`. Both are also
//! the unique fixed points of `e ↦ c ⊓∘ δ(d ∘ e)` and `e ↦ c ⊓∘ δ(d ⊓ e)`,
//! which [`iterate_dynamic_fixed_point`] and [`iterate_static_fixed_point`]
//! compute independently.

use num_traits::ToPrimitive;

use crate::composition::{compose, group_inverse, mixed_compose, DeltaSeries};
use crate::error::{Error, Result};
use crate::products::shuffle_inverse;
use crate::series::{check_eq, rational, Series};
use crate::staticmaps::{cauchy_inverse_comm, wiener_fliess, CommutativeSeries};

fn check_dynamic(c: &Series, d: &Series) -> Result<()> {
    if c.alphabet().size() != d.outputs() + 1 {
        return Err(Error::DimensionMismatch {
            context: "dynamic feedback: plant inputs vs controller outputs",
            expected: c.alphabet().inputs(),
            found: d.outputs(),
        });
    }
    if d.alphabet().size() != c.outputs() + 1 {
        return Err(Error::DimensionMismatch {
            context: "dynamic feedback: controller inputs vs plant outputs",
            expected: c.outputs(),
            found: d.alphabet().inputs(),
        });
    }
    check_eq("truncation degree", c.degree(), d.degree())?;
    d.require_purely_improper()
}

fn check_static(c: &Series, d: &CommutativeSeries) -> Result<()> {
    if c.alphabet().size() != d.outputs() + 1 {
        return Err(Error::DimensionMismatch {
            context: "static feedback: plant inputs vs static map outputs",
            expected: c.alphabet().inputs(),
            found: d.outputs(),
        });
    }
    if d.variables() != c.outputs() {
        return Err(Error::DimensionMismatch {
            context: "static feedback: static map variables vs plant outputs",
            expected: c.outputs(),
            found: d.variables(),
        });
    }
    check_eq("truncation degree", c.degree(), d.degree())?;
    c.require_proper()?;
    d.require_purely_improper()
}

/// Closed loop of plant `c` under dynamic multiplicative feedback `d`.
pub fn dynamic_feedback(c: &Series, d: &Series) -> Result<Series> {
    check_dynamic(c, d)?;
    let loop_series = compose(&shuffle_inverse(d)?, c)?;
    let e = group_inverse(&loop_series)?;
    mixed_compose(c, &DeltaSeries::new(e)?)
}

/// Closed loop of plant `c` under static multiplicative feedback `f_d`.
pub fn static_feedback(c: &Series, d: &CommutativeSeries) -> Result<Series> {
    check_static(c, d)?;
    let loop_series = wiener_fliess(&cauchy_inverse_comm(d)?, c)?;
    let e = group_inverse(&loop_series)?;
    mixed_compose(c, &DeltaSeries::new(e)?)
}

fn dynamic_step(c: &Series, d: &Series, e: &Series) -> Result<Series> {
    mixed_compose(c, &DeltaSeries::new(compose(d, e)?)?)
}

fn static_step(c: &Series, d: &CommutativeSeries, e: &Series) -> Result<Series> {
    mixed_compose(c, &DeltaSeries::new(wiener_fliess(d, e)?)?)
}

/// Whether `e` satisfies the dynamic feedback equation `e = c ⊓∘ δ(d ∘ e)`.
pub fn verify_dynamic_fixed_point(c: &Series, d: &Series, e: &Series) -> Result<bool> {
    check_dynamic(c, d)?;
    c.check_same_shape(e)?;
    Ok(&dynamic_step(c, d, e)? == e)
}

/// Whether `e` satisfies the static feedback equation `e = c ⊓∘ δ(d ⊓ e)`.
pub fn verify_static_fixed_point(c: &Series, d: &CommutativeSeries, e: &Series) -> Result<bool> {
    check_static(c, d)?;
    c.check_same_shape(e)?;
    if !e.is_proper() {
        return Ok(false);
    }
    Ok(&static_step(c, d, e)? == e)
}

fn iterate(start: &Series, mut step: impl FnMut(&Series) -> Result<Series>) -> Result<Series> {
    // Each step fixes at least one more length of coefficients.
    let limit = start.degree() + 3;
    let mut e = start.clone();
    let mut last_change = f64::INFINITY;
    for _ in 0..limit {
        let next = step(&e)?;
        if next == e {
            return Ok(e);
        }
        last_change = next.ultrametric(&e, &rational(1, 2))?.to_f64().unwrap_or(f64::INFINITY);
        e = next;
    }
    Err(Error::NonConvergence {
        iterations: limit,
        last_change,
    })
}

/// Solves the dynamic feedback equation by fixed-point iteration from `start`.
pub fn iterate_dynamic_fixed_point(c: &Series, d: &Series, start: &Series) -> Result<Series> {
    check_dynamic(c, d)?;
    c.check_same_shape(start)?;
    iterate(start, |e| dynamic_step(c, d, e))
}

/// Solves the static feedback equation by fixed-point iteration from `start`,
/// which must be proper.
pub fn iterate_static_fixed_point(c: &Series, d: &CommutativeSeries, start: &Series) -> Result<Series> {
    check_static(c, d)?;
    c.check_same_shape(start)?;
    start.require_proper()?;
    iterate(start, |e| static_step(c, d, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::products::shuffle;
    use crate::series::integer;
    use crate::series::test_support::{arb_proper, arb_purely_improper, arb_series, scalar};
    use crate::staticmaps::cauchy_comm;
    use crate::staticmaps::test_support::{arb_comm_purely_improper, comm};
    use crate::words::Alphabet;
    use proptest::prelude::*;

    #[test]
    fn dynamic_feedback_example() {
        let c = scalar(2, 7, &[(1, "x1")]);
        let d = scalar(2, 7, &[(1, "e"), (1, "x1")]);
        let expected = scalar(
            2,
            7,
            &[
                (1, "x1"),
                (1, "x1 x0 x1"),
                (1, "x1 x0 x1 x0 x1"),
                (1, "x1 x0 x1 x0 x1 x0 x1"),
            ],
        );
        let e = dynamic_feedback(&c, &d).unwrap();
        assert_eq!(e, expected);
        assert!(verify_dynamic_fixed_point(&c, &d, &e).unwrap());
    }

    #[test]
    fn static_feedback_example() {
        let c = scalar(2, 6, &[(1, "x1")]);
        let d = comm(1, 6, &[(1, &[0]), (1, &[1])]);
        let expected = scalar(
            2,
            6,
            &[
                (1, "x1"),
                (1, "x1 x1"),
                (1, "x1 x1 x1"),
                (1, "x1 x1 x1 x1"),
                (1, "x1 x1 x1 x1 x1"),
                (1, "x1 x1 x1 x1 x1 x1"),
            ],
        );
        let e = static_feedback(&c, &d).unwrap();
        assert_eq!(e, expected);
        assert!(verify_static_fixed_point(&c, &d, &e).unwrap());
    }

    #[test]
    fn constant_gain_scales_the_plant() {
        let c = scalar(2, 5, &[(1, "x1")]);
        let two = scalar(2, 5, &[(2, "e")]);
        let e = dynamic_feedback(&c, &two).unwrap();
        assert_eq!(e, scalar(2, 5, &[(2, "x1")]));
        assert!(verify_dynamic_fixed_point(&c, &two, &e).unwrap());
        let half = scalar(2, 5, &[(1, "x1")]).scale(&rational(1, 2));
        assert!(!verify_dynamic_fixed_point(&c, &two, &half).unwrap());

        let gain = CommutativeSeries::constant(1, 5, &[integer(2)]).unwrap();
        let e = static_feedback(&c, &gain).unwrap();
        assert_eq!(e, scalar(2, 5, &[(2, "x1")]));
        assert!(!verify_static_fixed_point(&c, &gain, &half).unwrap());
    }

    #[test]
    fn preconditions() {
        let c = scalar(2, 3, &[(1, "x1")]);
        assert_eq!(
            dynamic_feedback(&c, &scalar(2, 3, &[(1, "x1")])),
            Err(Error::NotPurelyImproper { component: 0 })
        );
        assert!(matches!(
            dynamic_feedback(&c, &scalar(3, 3, &[(1, "e")])),
            Err(Error::DimensionMismatch { .. })
        ));
        let d = comm(1, 3, &[(1, &[0])]);
        assert_eq!(
            static_feedback(&scalar(2, 3, &[(1, "e"), (1, "x1")]), &d),
            Err(Error::NotProper { component: 0 })
        );
        assert!(matches!(
            static_feedback(&c, &comm(2, 3, &[(1, &[0, 0])])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn two_input_two_output_loop() {
        let a = Alphabet::new(3).unwrap();
        let c = Series::from_terms(
            a,
            2,
            4,
            [
                ("x1".parse().unwrap(), 0, integer(1)),
                ("x0 x2".parse().unwrap(), 1, integer(-1)),
            ],
        )
        .unwrap();
        let d = Series::from_terms(
            a,
            2,
            4,
            [
                ("e".parse().unwrap(), 0, integer(1)),
                ("e".parse().unwrap(), 1, integer(2)),
                ("x2".parse().unwrap(), 0, integer(1)),
                ("x1 x0".parse().unwrap(), 1, integer(3)),
            ],
        )
        .unwrap();
        let e = dynamic_feedback(&c, &d).unwrap();
        assert_eq!(iterate_dynamic_fixed_point(&c, &d, &c).unwrap(), e);
        assert!(verify_dynamic_fixed_point(&c, &d, &e).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn dynamic_closed_form_is_the_unique_fixed_point(
            c in arb_series(2, 1, 4, 4), d in arb_purely_improper(2, 1, 4, 4), start in arb_series(2, 1, 4, 4)
        ) {
            let e = dynamic_feedback(&c, &d).unwrap();
            prop_assert!(verify_dynamic_fixed_point(&c, &d, &e).unwrap());
            prop_assert_eq!(iterate_dynamic_fixed_point(&c, &d, &start).unwrap(), e);
        }

        #[test]
        fn static_closed_form_is_the_unique_fixed_point(
            c in arb_proper(2, 1, 4, 4), d in arb_comm_purely_improper(1, 1, 4, 3), start in arb_proper(2, 1, 4, 4)
        ) {
            let e = static_feedback(&c, &d).unwrap();
            prop_assert!(verify_static_fixed_point(&c, &d, &e).unwrap());
            prop_assert_eq!(iterate_static_fixed_point(&c, &d, &start).unwrap(), e);
        }

        #[test]
        fn dynamic_feedback_is_a_group_action(
            c in arb_series(2, 1, 4, 4), d1 in arb_purely_improper(2, 1, 4, 3), d2 in arb_purely_improper(2, 1, 4, 3)
        ) {
            let nested = dynamic_feedback(&dynamic_feedback(&c, &d1).unwrap(), &d2).unwrap();
            let combined = dynamic_feedback(&c, &shuffle(&d1, &d2).unwrap()).unwrap();
            prop_assert_eq!(nested, combined);
            let one = Series::ones(d1.alphabet(), 1, 4).unwrap();
            prop_assert_eq!(dynamic_feedback(&c, &one).unwrap(), c);
        }

        #[test]
        fn static_feedback_is_a_group_action(
            c in arb_proper(2, 1, 4, 4), d1 in arb_comm_purely_improper(1, 1, 4, 3), d2 in arb_comm_purely_improper(1, 1, 4, 3)
        ) {
            let nested = static_feedback(&static_feedback(&c, &d1).unwrap(), &d2).unwrap();
            let combined = static_feedback(&c, &cauchy_comm(&d1, &d2).unwrap()).unwrap();
            prop_assert_eq!(nested, combined);
            let one = CommutativeSeries::ones(1, 1, 4).unwrap();
            prop_assert_eq!(static_feedback(&c, &one).unwrap(), c);
        }
    }
}
