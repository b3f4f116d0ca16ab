//! Acceptance run: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use fliess_core::{
    cauchy, cauchy_comm, cauchy_inverse, compare_loop_vs_formula, compose, dynamic_feedback, evaluate_fliess,
    group_inverse, integer, iterate_dynamic_fixed_point, iterate_static_fixed_point, mixed_compose, mult_compose,
    shuffle, shuffle_inverse, shuffle_words, simulate_static_loop, static_feedback, wiener_fliess, Alphabet,
    CommutativeSeries, Controller, DeltaSeries, Exponents, Letter, Order, Series, Signal, SimConfig, Trajectory, Word,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn word(s: &str) -> Word {
    s.parse().unwrap()
}

fn scalar(size: usize, degree: usize, terms: &[(i64, &str)]) -> Series {
    Series::scalar(
        Alphabet::new(size).unwrap(),
        degree,
        terms.iter().map(|(c, w)| (integer(*c), word(w))),
    )
    .unwrap()
}

fn nonzero_coeff(rng: &mut ChaCha8Rng) -> i64 {
    let c = rng.gen_range(1..=3);
    if rng.gen_bool(0.5) {
        c
    } else {
        -c
    }
}

/// Random series with at most five terms and coefficients in [-3, 3].
fn random_series(rng: &mut ChaCha8Rng, size: usize, outputs: usize, degree: usize, min_len: usize) -> Series {
    let count = rng.gen_range(0..=5);
    let terms: Vec<_> = (0..count)
        .map(|_| {
            let len = rng.gen_range(min_len..=degree);
            let letters: Vec<Letter> = (0..len).map(|_| rng.gen_range(0..size) as Letter).collect();
            (
                Word::from_letters(&letters),
                rng.gen_range(0..outputs),
                integer(rng.gen_range(-3..=3)),
            )
        })
        .collect();
    Series::from_terms(Alphabet::new(size).unwrap(), outputs, degree, terms).unwrap()
}

fn random_proper(rng: &mut ChaCha8Rng, size: usize, outputs: usize, degree: usize) -> Series {
    random_series(rng, size, outputs, degree, 1)
}

fn random_purely_improper(rng: &mut ChaCha8Rng, size: usize, outputs: usize, degree: usize) -> Series {
    let constants: Vec<_> = (0..outputs).map(|_| integer(nonzero_coeff(rng))).collect();
    let c = Series::constant(Alphabet::new(size).unwrap(), degree, &constants).unwrap();
    random_proper(rng, size, outputs, degree).add(&c).unwrap()
}

fn random_comm(
    rng: &mut ChaCha8Rng,
    variables: usize,
    outputs: usize,
    degree: usize,
    improper: bool,
) -> CommutativeSeries {
    let count = rng.gen_range(0..=5);
    let mut terms: Vec<_> = (0..count)
        .map(|_| {
            let total = rng.gen_range(1..=degree);
            let mut exps = vec![0u32; variables];
            for _ in 0..total {
                exps[rng.gen_range(0..variables)] += 1;
            }
            (
                Exponents::new(exps),
                rng.gen_range(0..outputs),
                integer(rng.gen_range(-3..=3)),
            )
        })
        .collect();
    if improper {
        terms.extend((0..outputs).map(|i| (Exponents::new(vec![0; variables]), i, integer(nonzero_coeff(rng)))));
    } else if rng.gen_bool(0.5) {
        terms.push((Exponents::new(vec![0; variables]), 0, integer(rng.gen_range(-3..=3))));
    }
    CommutativeSeries::from_terms(variables, outputs, degree, terms).unwrap()
}

fn delta(s: &Series) -> DeltaSeries {
    DeltaSeries::new(s.clone()).unwrap()
}

fn law(name: &str, lhs: Series, rhs: Series) -> Result<(), String> {
    ensure(lhs == rhs, || format!("{name} failed:\n  lhs = {lhs}\n  rhs = {rhs}"))
}

fn algebra_laws() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 4;
    let instances = 30;
    for i in 0..instances {
        // Square shapes so every series is also a valid δ-series.
        let m = 1 + i % 2;
        let size = m + 1;
        let a = random_series(&mut rng, size, m, n, 0);
        let b = random_series(&mut rng, size, m, n, 0);
        let c = random_series(&mut rng, size, m, n, 0);
        let d = random_series(&mut rng, size, m, n, 0);
        let e = random_series(&mut rng, size, m, n, 0);
        let sh = |x: &Series, y: &Series| shuffle(x, y).unwrap();
        let ca = |x: &Series, y: &Series| cauchy(x, y).unwrap();
        let co = |x: &Series, y: &Series| compose(x, y).unwrap();
        let mx = |x: &Series, y: &Series| mixed_compose(x, &delta(y)).unwrap();

        law("shuffle commutativity", sh(&a, &b), sh(&b, &a))?;
        law("shuffle associativity", sh(&sh(&a, &b), &c), sh(&a, &sh(&b, &c)))?;
        law("Cauchy associativity", ca(&ca(&a, &b), &c), ca(&a, &ca(&b, &c)))?;
        law(
            "shuffle distributes over composition",
            co(&sh(&a, &b), &e),
            sh(&co(&a, &e), &co(&b, &e)),
        )?;
        law(
            "shuffle distributes over mixed composition",
            mx(&sh(&a, &b), &e),
            sh(&mx(&a, &e), &mx(&b, &e)),
        )?;
        law(
            "composition / mixed composition associativity",
            co(&c, &mx(&d, &e)),
            mx(&co(&c, &d), &e),
        )?;
        let de = mult_compose(&delta(&d), &delta(&e)).unwrap();
        law(
            "right action of the multiplicative product",
            mx(&mx(&c, &d), &e),
            mx(&c, de.inner()),
        )?;
        let f = random_comm(&mut rng, m, 1, n, false);
        let cp = random_proper(&mut rng, size, m, n);
        law(
            "Wiener-Fliess mixed associativity",
            wiener_fliess(&f, &mx(&cp, &e)).unwrap(),
            mx(&wiener_fliess(&f, &cp).unwrap(), &e),
        )?;
    }
    Ok(format!(
        "{} random series at N = {n}, 8 identities per instance",
        instances * 7
    ))
}

fn group_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 5;
    let mut count = 0;
    for m in [1, 2] {
        for _ in 0..10 {
            let size = m + 1;
            let d = random_purely_improper(&mut rng, size, m, n);
            let e = group_inverse(&d).map_err(|err| format!("group inverse failed: {err}"))?;
            let one = Series::ones(d.alphabet(), m, n).unwrap();
            law(
                "right inverse",
                mult_compose(&delta(&d), &delta(&e)).unwrap().into_inner(),
                one.clone(),
            )?;
            law(
                "left inverse",
                mult_compose(&delta(&e), &delta(&d)).unwrap().into_inner(),
                one.clone(),
            )?;
            let d_inv = shuffle_inverse(&d).unwrap();
            law(
                "fixed-point relation",
                mixed_compose(&d_inv, &delta(&e)).unwrap(),
                e.clone(),
            )?;
            law(
                "shuffle-inverse relation",
                shuffle_inverse(&e).unwrap(),
                mixed_compose(&d, &delta(&e)).unwrap(),
            )?;
            law("shuffle inverse", shuffle(&d, &d_inv).unwrap(), one.clone())?;
            let c_inv = cauchy_inverse(&d).unwrap();
            law("Cauchy right inverse", cauchy(&d, &c_inv).unwrap(), one.clone())?;
            law("Cauchy left inverse", cauchy(&c_inv, &d).unwrap(), one)?;
            count += 1;
        }
    }
    Ok(format!(
        "{count} purely improper series (scalar and 2-output) at N = {n}"
    ))
}

fn dynamic_feedback_suite() -> Check {
    let c = scalar(2, 7, &[(1, "x1")]);
    let d = scalar(2, 7, &[(1, "e"), (1, "x1")]);
    let e = dynamic_feedback(&c, &d).map_err(|err| err.to_string())?;
    // Σ_{k≤3} (x1 x0)^k x1, written out letter by letter.
    let mut expected = BTreeMap::new();
    for k in 0..=3 {
        let mut letters = Vec::new();
        for _ in 0..k {
            letters.extend([1, 0]);
        }
        letters.push(1);
        expected.insert(Word::from_letters(&letters), integer(1));
    }
    let got: BTreeMap<Word, _> = e.terms().into_iter().map(|(w, _, c)| (w.clone(), c.clone())).collect();
    ensure(got == expected, || {
        format!("closed loop {e} differs from the expected sum")
    })?;
    let zero = Series::zero(c.alphabet(), 1, 7).unwrap();
    law(
        "fixed-point iteration",
        iterate_dynamic_fixed_point(&c, &d, &zero).unwrap(),
        e,
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 4;
    let mut count = 0;
    for m in [1, 1, 1, 2] {
        for _ in 0..5 {
            let size = m + 1;
            let c = random_series(&mut rng, size, m, n, 0);
            let d1 = random_purely_improper(&mut rng, size, m, n);
            let d2 = random_purely_improper(&mut rng, size, m, n);
            let nested = dynamic_feedback(&dynamic_feedback(&c, &d1).unwrap(), &d2).unwrap();
            law(
                "dynamic group action",
                nested,
                dynamic_feedback(&c, &shuffle(&d1, &d2).unwrap()).unwrap(),
            )?;
            law(
                "unit feedback",
                dynamic_feedback(&c, &Series::ones(c.alphabet(), m, n).unwrap()).unwrap(),
                c,
            )?;
            count += 1;
        }
    }
    Ok(format!(
        "exact closed loop at N = 7; group action on {count} random triples at N = {n}"
    ))
}

fn static_feedback_suite() -> Check {
    let c = scalar(2, 6, &[(1, "x1")]);
    let d = CommutativeSeries::from_terms(
        1,
        1,
        6,
        [
            (Exponents::new(vec![0]), 0, integer(1)),
            (Exponents::new(vec![1]), 0, integer(1)),
        ],
    )
    .unwrap();
    let e = static_feedback(&c, &d).map_err(|err| err.to_string())?;
    for w in Alphabet::new(2).unwrap().words_up_to(6) {
        let want = if !w.is_empty() && w.count(1) == w.len() {
            integer(1)
        } else {
            integer(0)
        };
        ensure(e.coefficient(&w, 0).unwrap() == want, || {
            format!("coefficient of {w} in {e}")
        })?;
    }
    let zero = Series::zero(c.alphabet(), 1, 6).unwrap();
    law(
        "fixed-point iteration",
        iterate_static_fixed_point(&c, &d, &zero).unwrap(),
        e,
    )?;

    let cfg = SimConfig::new(0.5, 2000, 8);
    let v = cfg.sample(&[Signal::Constant(1.0)]).unwrap();
    let c8 = scalar(2, 8, &[(1, "x1")]);
    let d8 = CommutativeSeries::from_terms(
        1,
        1,
        8,
        [
            (Exponents::new(vec![0]), 0, integer(1)),
            (Exponents::new(vec![1]), 0, integer(1)),
        ],
    )
    .unwrap();
    let y = simulate_static_loop(&c8, &d8, &v, &cfg).map_err(|err| err.to_string())?;
    let err = (y.final_values()[0] - (0.5f64.exp() - 1.0)).abs();
    ensure(err < 1e-4, || format!("|y(0.5) - (e^0.5 - 1)| = {err:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 4;
    let mut count = 0;
    for m in [1, 1, 1, 2] {
        for _ in 0..5 {
            let size = m + 1;
            let c = random_proper(&mut rng, size, m, n);
            let d1 = random_comm(&mut rng, m, m, n, true);
            let d2 = random_comm(&mut rng, m, m, n, true);
            let nested = static_feedback(&static_feedback(&c, &d1).unwrap(), &d2).unwrap();
            law(
                "static group action",
                nested,
                static_feedback(&c, &cauchy_comm(&d1, &d2).unwrap()).unwrap(),
            )?;
            let one = CommutativeSeries::ones(m, m, n).unwrap();
            law("unit feedback", static_feedback(&c, &one).unwrap(), c)?;
            count += 1;
        }
    }
    Ok(format!(
        "exact closed loop at N = 6; |y(0.5) - (e^0.5 - 1)| = {err:.2e}; group action on {count} random triples"
    ))
}

fn cross_validation() -> Check {
    let cfg = SimConfig::new(0.2, 2000, 8);
    let v = cfg.sample(&[Signal::Constant(1.0)]).unwrap();
    let c = scalar(2, 8, &[(1, "x1")]);
    let d = scalar(2, 8, &[(1, "e"), (1, "x1")]);
    let report = compare_loop_vs_formula(&c, Controller::Dynamic(&d), &v, &cfg).map_err(|e| e.to_string())?;
    let dev = report.worst_deviation();
    ensure(dev < 1e-5, || format!("loop vs formula deviation {dev:e}"))?;

    // Open-loop integrator driven by a sinusoid; the trapezoid rule is not
    // exact here, so the error isolates quadrature.
    let integrator = scalar(2, 1, &[(1, "x1")]);
    let t_final = 0.5;
    let exact = (1.0 - (2.0 * PI * t_final).cos()) / (2.0 * PI);
    let error = |steps: usize| {
        let u = Trajectory::from_signals(&[Signal::Sin { amp: 1.0, freq: 1.0 }], 0.0, t_final, steps).unwrap();
        (evaluate_fliess(&integrator, &u).unwrap().final_values()[0] - exact).abs()
    };
    let ratio = error(200) / error(400);
    ensure((3.5..=4.5).contains(&ratio), || {
        format!("halving dt reduced the error by {ratio:.3}")
    })?;
    Ok(format!(
        "deviation {dev:.2e} (budget {:.2e}); halving ratio {ratio:.3}",
        report.truncation_budget
    ))
}

/// Every way of merging `a` and `b`, counted by enumerating which output
/// positions are taken by `a`.
fn brute_force_shuffle(a: &[Letter], b: &[Letter]) -> BTreeMap<Word, u64> {
    let total = a.len() + b.len();
    let mut out = BTreeMap::new();
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let (mut ia, mut ib) = (0, 0);
        let merged: Vec<Letter> = (0..total)
            .map(|p| {
                if mask & (1 << p) != 0 {
                    ia += 1;
                    a[ia - 1]
                } else {
                    ib += 1;
                    b[ib - 1]
                }
            })
            .collect();
        *out.entry(Word::from_letters(&merged)).or_insert(0) += 1;
    }
    out
}

fn shuffle_oracle() -> Check {
    let words = Alphabet::new(2).unwrap().words_up_to(6);
    let mut pairs = 0;
    for a in &words {
        for b in words.iter().filter(|b| a.len() + b.len() <= 6) {
            let expected = brute_force_shuffle(a.letters(), b.letters());
            let got = shuffle_words(a, b);
            ensure(got == expected, || format!("shuffle of {a} and {b}"))?;
            pairs += 1;
        }
    }
    Ok(format!("{pairs} word pairs with total length <= 6"))
}

// `Order` saturates at infinity, so `>= base + 1` is not the same as `> base`.
#[allow(clippy::int_plus_one)]
fn contraction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 4;
    let instances = 100;
    for _ in 0..instances {
        let m = rng.gen_range(1..=2);
        let size = m + 1;
        let k = rng.gen_range(2..=3);

        let c = random_series(&mut rng, size, 1, n, 0);
        let d = random_series(&mut rng, k, m, n, 0);
        let e = d.add(&random_series(&mut rng, k, m, n, 0)).unwrap();
        let gap = compose(&c, &d).unwrap().sub(&compose(&c, &e).unwrap()).unwrap().order();
        let base = d.sub(&e).unwrap().order();
        ensure(gap >= base + 1, || format!("composition: {gap} < {base} + 1"))?;

        let c = random_series(&mut rng, size, 2, n, 0);
        let d = random_series(&mut rng, size, m, n, 0);
        let e = random_series(&mut rng, size, m, n, 0);
        let gap = mixed_compose(&c, &delta(&d))
            .unwrap()
            .sub(&mixed_compose(&c, &delta(&e)).unwrap())
            .unwrap()
            .order();
        let base = c.proper_part().order() + d.sub(&e).unwrap().order();
        ensure(gap >= base, || format!("mixed composition: {gap} < {base}"))?;

        let improper = rng.gen_bool(0.5);
        let f = random_comm(&mut rng, m, 1, n, improper);
        let c = random_proper(&mut rng, size, m, n);
        let mut perturbation = random_proper(&mut rng, size, m, n);
        if perturbation.is_zero() {
            perturbation = Series::from_terms(c.alphabet(), m, n, [(word("x1"), 0, integer(1))]).unwrap();
        }
        let c2 = c.add(&perturbation).unwrap();
        let gap = wiener_fliess(&f, &c)
            .unwrap()
            .sub(&wiener_fliess(&f, &c2).unwrap())
            .unwrap()
            .order();
        let base = perturbation.order();
        let holds = match f.omega_bar() {
            Order::Finite(1) => gap >= base,
            _ => gap > base,
        };
        ensure(holds, || {
            format!("Wiener-Fliess: gap {gap} vs {base} with omega_bar {}", f.omega_bar())
        })?;
    }
    Ok(format!("{instances} random instances of each inequality at N = {n}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("algebra law suite", algebra_laws),
        ("group suite", group_suite),
        ("dynamic feedback", dynamic_feedback_suite),
        ("static feedback", static_feedback_suite),
        ("closed-loop cross-validation", cross_validation),
        ("shuffle oracle equivalence", shuffle_oracle),
        ("contraction inequalities", contraction),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}: {name} [{secs:.2}s] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}: {name} [{secs:.2}s] {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
