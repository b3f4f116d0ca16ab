//! Numerical evaluation of Chen-Fliess operators and direct simulation of
//! the multiplicative feedback loops.
//!
//! Iterated integrals use the cumulative trapezoid rule on a uniform grid,
//! innermost letter first, with one memoized trajectory per word suffix.
//! Closed loops are solved by Picard iteration on whole trajectories
//! starting from `y ≡ 0`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::rc::Rc;

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feedback::{dynamic_feedback, static_feedback};
use crate::series::Series;
use crate::staticmaps::CommutativeSeries;
use crate::words::Word;

/// Uniformly sampled vector signal, stored channel-major: `channels[i][k]`
/// is channel `i` at time `t0 + k·dt`. The drift channel is never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    channels: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, channels: Vec<Vec<f64>>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite() && t0.is_finite()) {
            return Err(Error::InvalidTrajectory(format!("bad grid t0 = {t0}, dt = {dt}")));
        }
        let Some(first) = channels.first() else {
            return Err(Error::InvalidTrajectory("no channels".into()));
        };
        let samples = first.len();
        if samples < 2 {
            return Err(Error::InvalidTrajectory(format!("{samples} samples, need at least 2")));
        }
        if let Some(i) = channels.iter().position(|c| c.len() != samples) {
            return Err(Error::InvalidTrajectory(format!(
                "channel {i} has {} samples, expected {samples}",
                channels[i].len()
            )));
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTrajectory("non-finite sample".into()));
        }
        Ok(Trajectory { t0, dt, channels })
    }

    /// Samples `signals` (one per channel) at `steps + 1` grid points on `[t0, t_final]`.
    pub fn from_signals(signals: &[Signal], t0: f64, t_final: f64, steps: usize) -> Result<Self> {
        if t_final.is_nan() || t_final <= t0 || steps == 0 {
            return Err(Error::InvalidTrajectory(format!(
                "empty horizon [{t0}, {t_final}] with {steps} steps"
            )));
        }
        let dt = (t_final - t0) / steps as f64;
        let channels = signals
            .iter()
            .map(|s| (0..=steps).map(|k| s.sample(t0 + k as f64 * dt)).collect())
            .collect();
        Self::new(t0, dt, channels)
    }

    fn with_channels(&self, channels: Vec<Vec<f64>>) -> Trajectory {
        Trajectory {
            t0: self.t0,
            dt: self.dt,
            channels,
        }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> usize {
        self.channels[0].len()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.channels[i]
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.time(self.samples() - 1)
    }

    pub fn final_values(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c[c.len() - 1]).collect()
    }

    /// Piecewise-linear interpolation of channel `i` at time `t`, clamped to the grid.
    pub fn value_at(&self, i: usize, t: f64) -> f64 {
        let c = &self.channels[i];
        let x = ((t - self.t0) / self.dt).clamp(0.0, (c.len() - 1) as f64);
        let k = (x.floor() as usize).min(c.len() - 2);
        let frac = x - k as f64;
        c[k] + frac * (c[k + 1] - c[k])
    }

    fn check_grid(&self, other: &Trajectory) -> Result<()> {
        if self.samples() != other.samples()
            || (self.t0 - other.t0).abs() > 1e-12
            || (self.dt - other.dt).abs() > 1e-12 * self.dt.abs().max(1.0)
        {
            return Err(Error::InvalidTrajectory("trajectories live on different grids".into()));
        }
        Ok(())
    }

    /// Per-sample product of two trajectories with equal channel counts.
    pub fn hadamard(&self, other: &Trajectory) -> Result<Trajectory> {
        self.check_grid(other)?;
        check_channels("Hadamard product", self.channel_count(), other.channel_count())?;
        Ok(self.with_channels(
            self.channels
                .iter()
                .zip(&other.channels)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).collect())
                .collect(),
        ))
    }

    /// Maximum absolute difference over the grid, per channel.
    pub fn max_abs_diff(&self, other: &Trajectory) -> Result<Vec<f64>> {
        self.check_grid(other)?;
        check_channels("trajectory comparison", self.channel_count(), other.channel_count())?;
        Ok(self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
            .collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.channels.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

fn check_channels(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

/// Built-in input generators.
#[derive(Clone, Debug, PartialEq)]
pub enum Signal {
    Constant(f64),
    /// `c0 + c1·t + c2·t² + ...`
    Poly(Vec<f64>),
    /// `amp · sin(2π · freq · t)`
    Sin {
        amp: f64,
        freq: f64,
    },
}

impl Signal {
    pub fn sample(&self, t: f64) -> f64 {
        match self {
            Signal::Constant(v) => *v,
            Signal::Poly(cs) => cs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            Signal::Sin { amp, freq } => amp * (2.0 * PI * freq * t).sin(),
        }
    }
}

/// Grid and stopping rule for a simulation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub t_final: f64,
    pub steps: usize,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Truncation degree at which operand series are evaluated.
    pub degree: usize,
}

impl SimConfig {
    pub fn new(t_final: f64, steps: usize, degree: usize) -> Self {
        SimConfig {
            t_final,
            steps,
            picard_tol: 1e-12,
            picard_max_iters: 200,
            degree,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if self.steps < 2 {
            return Err(Error::InvalidArgument(format!(
                "steps must be at least 2, got {}",
                self.steps
            )));
        }
        if self.picard_tol.is_nan() || self.picard_tol <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "picard_tol must be positive, got {}",
                self.picard_tol
            )));
        }
        if self.picard_max_iters == 0 {
            return Err(Error::InvalidArgument("picard_max_iters must be positive".into()));
        }
        Ok(())
    }

    /// Samples `signals` on this configuration's grid over `[0, t_final]`.
    pub fn sample(&self, signals: &[Signal]) -> Result<Trajectory> {
        self.validate()?;
        Trajectory::from_signals(signals, 0.0, self.t_final, self.steps)
    }

    fn check_input(&self, v: &Trajectory) -> Result<()> {
        self.validate()?;
        let end = v.t_final();
        if v.samples() != self.steps + 1 || (end - self.t_final).abs() > 1e-9 * self.t_final.max(1.0) {
            return Err(Error::InvalidTrajectory(format!(
                "input has {} samples ending at t = {end}, configuration expects {} ending at t = {}",
                v.samples(),
                self.steps + 1,
                self.t_final
            )));
        }
        Ok(())
    }

    fn truncate(&self, c: &Series) -> Result<Series> {
        c.truncate(self.degree)
    }
}

fn cumulative_trapezoid(f: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(acc);
    for pair in f.windows(2) {
        acc += 0.5 * dt * (pair[0] + pair[1]);
        out.push(acc);
    }
    out
}

struct IntegralCache<'a> {
    u: &'a Trajectory,
    memo: HashMap<Word, Rc<Vec<f64>>>,
}

impl<'a> IntegralCache<'a> {
    fn new(u: &'a Trajectory) -> Self {
        IntegralCache {
            u,
            memo: HashMap::new(),
        }
    }

    fn get(&mut self, w: &Word) -> Rc<Vec<f64>> {
        if let Some(v) = self.memo.get(w) {
            return v.clone();
        }
        let values = match w.split_first() {
            None => vec![1.0; self.u.samples()],
            Some((l, rest)) => {
                let inner = self.get(&rest);
                let integrand: Vec<f64> = if l == 0 {
                    inner.to_vec()
                } else {
                    self.u
                        .channel(l as usize - 1)
                        .iter()
                        .zip(inner.iter())
                        .map(|(a, b)| a * b)
                        .collect()
                };
                cumulative_trapezoid(&integrand, self.u.dt)
            }
        };
        let values = Rc::new(values);
        self.memo.insert(w.clone(), values.clone());
        values
    }
}

/// The iterated integral `E_w[u]` on `u`'s grid, as a one-channel trajectory.
pub fn iterated_integral(w: &Word, u: &Trajectory) -> Result<Trajectory> {
    if let Some(l) = w.max_letter() {
        if l as usize > u.channel_count() {
            return Err(Error::LetterOutOfRange {
                letter: l as usize,
                size: u.channel_count() + 1,
            });
        }
    }
    let values = IntegralCache::new(u).get(w);
    Ok(u.with_channels(vec![values.to_vec()]))
}

/// `F_c[u]`, the truncated Chen-Fliess operator applied to `u`.
pub fn evaluate_fliess(c: &Series, u: &Trajectory) -> Result<Trajectory> {
    check_channels(
        "input channels vs series alphabet",
        c.alphabet().inputs(),
        u.channel_count(),
    )?;
    let mut cache = IntegralCache::new(u);
    let mut out = vec![vec![0.0; u.samples()]; c.outputs()];
    for (w, i, coeff) in c.terms() {
        let coeff = coeff.to_f64().unwrap_or(f64::NAN);
        let e = cache.get(w);
        for (y, x) in out[i].iter_mut().zip(e.iter()) {
            *y += coeff * x;
        }
    }
    Ok(u.with_channels(out))
}

fn picard(
    cfg: &SimConfig,
    v: &Trajectory,
    outputs: usize,
    mut step: impl FnMut(&Trajectory) -> Result<Trajectory>,
) -> Result<(Trajectory, usize)> {
    let mut y = v.with_channels(vec![vec![0.0; v.samples()]; outputs]);
    let mut last_change = f64::INFINITY;
    for k in 1..=cfg.picard_max_iters {
        let next = step(&y)?;
        let change = next.max_abs_diff(&y)?.into_iter().fold(0.0, f64::max);
        if !change.is_finite() {
            break;
        }
        last_change = change;
        y = next;
        if change < cfg.picard_tol {
            return Ok((y, k));
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.picard_max_iters,
        last_change,
    })
}

fn loop_trajectory(v: &Trajectory, values: impl Fn(usize) -> Result<Vec<f64>>, channels: usize) -> Result<Trajectory> {
    let mut out = vec![Vec::with_capacity(v.samples()); channels];
    for k in 0..v.samples() {
        for (ch, x) in out.iter_mut().zip(values(k)?) {
            ch.push(x);
        }
    }
    Trajectory::new(v.t0, v.dt, out).map_err(|_| Error::NonConvergence {
        iterations: 0,
        last_change: f64::INFINITY,
    })
}

fn dynamic_loop(c: &Series, d: &Series, v: &Trajectory, cfg: &SimConfig) -> Result<(Trajectory, usize)> {
    cfg.check_input(v)?;
    let (c, d) = (cfg.truncate(c)?, cfg.truncate(d)?);
    check_channels("plant inputs vs input signal", c.alphabet().inputs(), v.channel_count())?;
    check_channels("plant inputs vs controller outputs", c.alphabet().inputs(), d.outputs())?;
    check_channels("controller inputs vs plant outputs", d.alphabet().inputs(), c.outputs())?;
    picard(cfg, v, c.outputs(), |y| {
        let u = v.hadamard(&evaluate_fliess(&d, y)?)?;
        evaluate_fliess(&c, &u)
    })
}

fn static_loop(c: &Series, d: &CommutativeSeries, v: &Trajectory, cfg: &SimConfig) -> Result<(Trajectory, usize)> {
    cfg.check_input(v)?;
    let (c, d) = (cfg.truncate(c)?, d.truncate(cfg.degree)?);
    check_channels("plant inputs vs input signal", c.alphabet().inputs(), v.channel_count())?;
    check_channels("plant inputs vs static map outputs", c.alphabet().inputs(), d.outputs())?;
    check_channels("static map variables vs plant outputs", d.variables(), c.outputs())?;
    picard(cfg, v, c.outputs(), |y| {
        let gain = loop_trajectory(
            v,
            |k| {
                let point: Vec<f64> = (0..y.channel_count()).map(|i| y.channel(i)[k]).collect();
                d.eval_static_f64(&point)
            },
            d.outputs(),
        )?;
        evaluate_fliess(&c, &v.hadamard(&gain)?)
    })
}

/// Output of the loop `y = F_c[v · F_d[y]]`.
pub fn simulate_dynamic_loop(c: &Series, d: &Series, v: &Trajectory, cfg: &SimConfig) -> Result<Trajectory> {
    dynamic_loop(c, d, v, cfg).map(|(y, _)| y)
}

/// Output of the loop `y = F_c[v · f_d(y)]`.
pub fn simulate_static_loop(c: &Series, d: &CommutativeSeries, v: &Trajectory, cfg: &SimConfig) -> Result<Trajectory> {
    static_loop(c, d, v, cfg).map(|(y, _)| y)
}

#[derive(Clone, Copy, Debug)]
pub enum Controller<'a> {
    Dynamic(&'a Series),
    Static(&'a CommutativeSeries),
}

/// Simulated loop versus the closed-loop series evaluated on the same input.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub kind: &'static str,
    pub t_final: f64,
    pub steps: usize,
    pub degree: usize,
    pub picard_iterations: usize,
    /// Largest absolute deviation over the grid, per output channel.
    pub max_deviation: Vec<f64>,
    /// Heuristic size of the first omitted word length, `C·T^(N+1)`.
    pub truncation_budget: f64,
}

impl ComparisonReport {
    pub fn worst_deviation(&self) -> f64 {
        self.max_deviation.iter().copied().fold(0.0, f64::max)
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind: {}", self.kind)?;
        writeln!(f, "t_final: {}", self.t_final)?;
        writeln!(f, "steps: {}", self.steps)?;
        writeln!(f, "degree: {}", self.degree)?;
        writeln!(f, "picard_iterations: {}", self.picard_iterations)?;
        for (i, d) in self.max_deviation.iter().enumerate() {
            writeln!(f, "max_deviation[{i}]: {d:e}")?;
        }
        writeln!(f, "truncation_budget: {:e}", self.truncation_budget)
    }
}

/// Estimates the contribution of words of length `N + 1` over `[0, t]`.
///
/// With `A_n = Σ_{|η|=n} |c_η| R^n / n!`, where `R` bounds the inputs and
/// the drift, `|E_η[u](t)| ≤ R^n t^n / n!`. `A_{N+1}` is extrapolated
/// geometrically from the two highest nonzero `A_n`.
pub fn truncation_budget(c: &Series, input_bound: f64, t: f64) -> f64 {
    let n_max = c.degree();
    let r = input_bound.max(1.0);
    let mut a = vec![0.0f64; n_max + 1];
    let mut factorial = vec![1.0f64; n_max + 1];
    for n in 1..=n_max {
        factorial[n] = factorial[n - 1] * n as f64;
    }
    for (w, _, coeff) in c.terms() {
        let n = w.len();
        a[n] += coeff.to_f64().unwrap_or(f64::INFINITY).abs() * r.powi(n as i32) / factorial[n];
    }
    let nonzero: Vec<usize> = (0..=n_max).filter(|&n| a[n] > 0.0).collect();
    let next = match nonzero.as_slice() {
        [] => 0.0,
        [only] => a[*only],
        [.., lo, hi] => {
            let rate = (a[*hi] / a[*lo]).powf(1.0 / (hi - lo) as f64);
            a[*hi] * rate.powi((n_max + 1 - hi) as i32)
        }
    };
    next * t.powi(n_max as i32 + 1)
}

/// Runs the loop simulation and the closed-form feedback series side by side.
pub fn compare_loop_vs_formula(
    c: &Series,
    controller: Controller<'_>,
    v: &Trajectory,
    cfg: &SimConfig,
) -> Result<ComparisonReport> {
    let ct = cfg.truncate(c)?;
    let (kind, (y, iterations), e) = match controller {
        Controller::Dynamic(d) => {
            let dt = cfg.truncate(d)?;
            ("dynamic", dynamic_loop(c, d, v, cfg)?, dynamic_feedback(&ct, &dt)?)
        }
        Controller::Static(d) => {
            let dt = d.truncate(cfg.degree)?;
            ("static", static_loop(c, d, v, cfg)?, static_feedback(&ct, &dt)?)
        }
    };
    let formula = evaluate_fliess(&e, v)?;
    let horizon = v.t_final() - v.t0();
    Ok(ComparisonReport {
        kind,
        t_final: cfg.t_final,
        steps: cfg.steps,
        degree: cfg.degree,
        picard_iterations: iterations,
        max_deviation: y.max_abs_diff(&formula)?,
        truncation_budget: truncation_budget(&e, v.sup_norm(), horizon),
    })
}
