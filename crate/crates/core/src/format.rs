//! Text, JSON and CSV serialization.
//!
//! Series text format, one term per line, with optional `@` headers:
//!
//! ```text
//! @alphabet 2
//! @outputs 1
//! @degree 3
//! 3/2 0 x0 x1
//! -1 0 e
//! ```
//!
//! Commutative series use `@variables` instead of `@alphabet` and an
//! exponent vector such as `[2,0,1]` in place of the word. `#` starts a
//! comment. Any input whose first non-blank character is `{` is read as JSON.

use std::io;

use num_bigint::BigInt;
use num_traits::{Num, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Coefficient, Series};
use crate::simulator::{ComparisonReport, Signal, Trajectory};
use crate::staticmaps::{CommutativeSeries, Exponents};
use crate::words::{parse_word_tokens, tokens_with_columns, Alphabet, Letter, Word, MAX_ALPHABET};

/// Parses `7`, `-3/2` or a plain decimal such as `0.25`, exactly.
pub fn parse_rational(token: &str) -> Option<Coefficient> {
    if let Some((num, den)) = token.split_once('/') {
        let num = BigInt::from_str_radix(num, 10).ok()?;
        let den = BigInt::from_str_radix(den, 10).ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Coefficient::new(num, den));
    }
    if let Some((int, frac)) = token.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int.starts_with('-');
        let digits = int.trim_start_matches(['-', '+']);
        if !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let whole =
            BigInt::from_str_radix(&format!("{}{frac}", if digits.is_empty() { "0" } else { digits }), 10).ok()?;
        let value = Coefficient::new(whole, num_traits::pow(BigInt::from(10), frac.len()));
        return Some(if negative { -value } else { value });
    }
    BigInt::from_str_radix(token, 10).ok().map(Coefficient::from_integer)
}

#[derive(Default)]
struct Headers {
    size: Option<usize>,
    outputs: Option<usize>,
    degree: Option<usize>,
}

impl Headers {
    fn read(&mut self, tokens: &[(usize, &str)], line: usize, size_name: &str) -> Result<()> {
        let (column, name) = tokens[0];
        let [_, (value_col, value)] = tokens else {
            return Err(Error::parse(
                line,
                column,
                format!("header `{name}` takes exactly one value"),
            ));
        };
        let value: usize = value.parse().map_err(|_| {
            Error::parse(
                line,
                *value_col,
                format!("expected a non-negative integer, found `{value}`"),
            )
        })?;
        let slot = match &name[1..] {
            n if n == size_name => &mut self.size,
            "outputs" => &mut self.outputs,
            "degree" => &mut self.degree,
            _ => return Err(Error::parse(line, column, format!("unknown header `{name}`"))),
        };
        if slot.replace(value).is_some() {
            return Err(Error::parse(line, column, format!("duplicate header `{name}`")));
        }
        Ok(())
    }
}

struct Located<T> {
    line: usize,
    coeff: Coefficient,
    component: usize,
    component_col: usize,
    key: T,
    key_col: usize,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<(usize, &str)>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokens_with_columns(content);
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn parse_lines<T>(
    text: &str,
    size_name: &str,
    mut key: impl FnMut(&str, &[(usize, &str)], usize) -> Result<T>,
) -> Result<(Headers, Vec<Located<T>>)> {
    let mut headers = Headers::default();
    let mut terms = Vec::new();
    for (line, tokens) in content_lines(text) {
        if tokens[0].1.starts_with('@') {
            headers.read(&tokens, line, size_name)?;
            continue;
        }
        let (coeff_col, coeff) = tokens[0];
        let coeff = parse_rational(coeff).ok_or_else(|| {
            Error::parse(
                line,
                coeff_col,
                format!("expected a rational coefficient, found `{coeff}`"),
            )
        })?;
        let Some(&(component_col, component)) = tokens.get(1) else {
            return Err(Error::parse(line, coeff_col, "missing component index"));
        };
        let component = component.parse().map_err(|_| {
            Error::parse(
                line,
                component_col,
                format!("expected a component index, found `{component}`"),
            )
        })?;
        let Some(&(key_col, _)) = tokens.get(2) else {
            return Err(Error::parse(line, component_col, "missing word"));
        };
        // Byte offset of the key within the line, for keys that contain spaces.
        let raw = text.lines().nth(line - 1).unwrap_or("");
        let start = raw.char_indices().nth(key_col - 1).map_or(raw.len(), |(i, _)| i);
        let rest = raw[start..].split('#').next().unwrap_or("").trim_end();
        let key = key(rest, &tokens[2..], line)?;
        terms.push(Located {
            line,
            coeff,
            component,
            component_col,
            key,
            key_col,
        });
    }
    Ok((headers, terms))
}

fn resolve_degree(header: Option<usize>, requested: Option<usize>, inferred: usize) -> Result<(usize, Option<usize>)> {
    match (header, requested) {
        (Some(h), Some(n)) if h < n => Err(Error::InvalidArgument(format!(
            "series is only known up to degree {h}, but degree {n} was requested"
        ))),
        (Some(h), Some(n)) => Ok((h, Some(n))),
        (Some(h), None) => Ok((h, None)),
        (None, Some(n)) => Ok((n, None)),
        (None, None) => Ok((inferred, None)),
    }
}

fn parse_series_text(text: &str, requested: Option<usize>) -> Result<Series> {
    let (headers, terms) = parse_lines(text, "alphabet", |_, tokens, line| parse_word_tokens(tokens, line))?;
    let inferred = terms.iter().map(|t| t.key.len()).max().unwrap_or(0);
    let (degree, cut) = resolve_degree(headers.degree, requested, inferred)?;
    let size = headers.size.unwrap_or_else(|| {
        let top = terms
            .iter()
            .filter_map(|t| t.key.max_letter())
            .max()
            .map_or(0, |l| l as usize);
        (top + 1).max(2)
    });
    let alphabet = Alphabet::new(size)?;
    let outputs = headers
        .outputs
        .unwrap_or_else(|| terms.iter().map(|t| t.component + 1).max().unwrap_or(1));
    for t in &terms {
        if let Some(l) = t.key.max_letter().filter(|&l| l as usize >= size) {
            return Err(Error::parse(
                t.line,
                t.key_col,
                format!("letter x{l} is outside the alphabet of size {size}"),
            ));
        }
        if t.key.len() > degree {
            return Err(Error::parse(
                t.line,
                t.key_col,
                format!("word of length {} exceeds degree {degree}", t.key.len()),
            ));
        }
        if t.component >= outputs {
            return Err(Error::parse(
                t.line,
                t.component_col,
                format!("component {} out of range for {outputs} output(s)", t.component),
            ));
        }
    }
    let series = Series::from_terms(
        alphabet,
        outputs,
        degree,
        terms.into_iter().map(|t| (t.key, t.component, t.coeff)),
    )?;
    match cut {
        Some(n) => series.truncate(n),
        None => Ok(series),
    }
}

fn is_json(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

fn json_error(e: serde_json::Error) -> Error {
    Error::parse(e.line(), e.column(), e.to_string())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesDoc {
    alphabet: usize,
    outputs: usize,
    degree: usize,
    terms: Vec<SeriesTermDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesTermDoc {
    coeff: String,
    component: usize,
    word: Vec<usize>,
}

fn series_from_doc(doc: SeriesDoc, requested: Option<usize>) -> Result<Series> {
    let (degree, cut) = resolve_degree(Some(doc.degree), requested, 0)?;
    let alphabet = Alphabet::new(doc.alphabet)?;
    let mut terms = Vec::with_capacity(doc.terms.len());
    for (i, t) in doc.terms.into_iter().enumerate() {
        let coeff = parse_rational(&t.coeff)
            .ok_or_else(|| Error::parse(1, 1, format!("term {i}: bad coefficient `{}`", t.coeff)))?;
        if let Some(&l) = t.word.iter().find(|&&l| l >= MAX_ALPHABET) {
            return Err(Error::LetterOutOfRange {
                letter: l,
                size: alphabet.size(),
            });
        }
        let letters: Vec<Letter> = t.word.iter().map(|&l| l as Letter).collect();
        terms.push((Word::from_letters(&letters), t.component, coeff));
    }
    let series = Series::from_terms(alphabet, doc.outputs, degree, terms)?;
    match cut {
        Some(n) => series.truncate(n),
        None => Ok(series),
    }
}

/// Parses a series in text or JSON form. Without a `@degree` header the
/// degree is the longest word present.
pub fn parse_series(text: &str) -> Result<Series> {
    if is_json(text) {
        return series_from_doc(serde_json::from_str(text).map_err(json_error)?, None);
    }
    parse_series_text(text, None)
}

/// Parses a series and brings it to truncation degree `degree`.
///
/// A series with an explicit degree above `degree` is truncated; one with
/// an explicit degree below it is rejected, since its higher coefficients
/// are unknown. Without a `@degree` header the terms are taken as given.
pub fn parse_series_at(text: &str, degree: usize) -> Result<Series> {
    if is_json(text) {
        return series_from_doc(serde_json::from_str(text).map_err(json_error)?, Some(degree));
    }
    parse_series_text(text, Some(degree))
}

/// Canonical text form: headers, then one term per line in length-lex order.
pub fn render_series(s: &Series) -> String {
    let mut out = format!(
        "@alphabet {}\n@outputs {}\n@degree {}\n",
        s.alphabet().size(),
        s.outputs(),
        s.degree()
    );
    for (w, i, c) in s.terms() {
        out.push_str(&format!("{c} {i} {w}\n"));
    }
    out
}

pub fn render_series_json(s: &Series) -> String {
    let doc = SeriesDoc {
        alphabet: s.alphabet().size(),
        outputs: s.outputs(),
        degree: s.degree(),
        terms: s
            .terms()
            .into_iter()
            .map(|(w, i, c)| SeriesTermDoc {
                coeff: c.to_string(),
                component: i,
                word: w.letters().iter().map(|&l| l as usize).collect(),
            })
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("series documents always serialize");
    json.push('\n');
    json
}

fn parse_exponents(rest: &str, column: usize, line: usize) -> Result<Exponents> {
    let inner = rest
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| {
            Error::parse(
                line,
                column,
                format!("expected an exponent vector like [1,0], found `{rest}`"),
            )
        })?;
    let exps = inner
        .split(',')
        .map(|e| e.trim().parse::<u32>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::parse(line, column, format!("bad exponent vector `{rest}`")))?;
    Ok(Exponents::new(exps))
}

fn parse_comm_text(text: &str, requested: Option<usize>) -> Result<CommutativeSeries> {
    let (headers, terms) = parse_lines(text, "variables", |rest, tokens, line| {
        parse_exponents(rest, tokens[0].0, line)
    })?;
    let inferred = terms.iter().map(|t| t.key.total_degree()).max().unwrap_or(0);
    let (degree, cut) = resolve_degree(headers.degree, requested, inferred)?;
    let variables = headers
        .size
        .or_else(|| terms.first().map(|t| t.key.variables()))
        .unwrap_or(1);
    let outputs = headers
        .outputs
        .unwrap_or_else(|| terms.iter().map(|t| t.component + 1).max().unwrap_or(1));
    for t in &terms {
        if t.key.variables() != variables {
            return Err(Error::parse(
                t.line,
                t.key_col,
                format!(
                    "exponent vector has {} entries, expected {variables}",
                    t.key.variables()
                ),
            ));
        }
        if t.key.total_degree() > degree {
            return Err(Error::parse(
                t.line,
                t.key_col,
                format!("monomial of degree {} exceeds degree {degree}", t.key.total_degree()),
            ));
        }
        if t.component >= outputs {
            return Err(Error::parse(
                t.line,
                t.component_col,
                format!("component {} out of range for {outputs} output(s)", t.component),
            ));
        }
    }
    let series = CommutativeSeries::from_terms(
        variables,
        outputs,
        degree,
        terms.into_iter().map(|t| (t.key, t.component, t.coeff)),
    )?;
    match cut {
        Some(n) => series.truncate(n),
        None => Ok(series),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommDoc {
    variables: usize,
    outputs: usize,
    degree: usize,
    terms: Vec<CommTermDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommTermDoc {
    coeff: String,
    component: usize,
    exponents: Vec<u32>,
}

fn comm_from_doc(doc: CommDoc, requested: Option<usize>) -> Result<CommutativeSeries> {
    let (degree, cut) = resolve_degree(Some(doc.degree), requested, 0)?;
    let mut terms = Vec::with_capacity(doc.terms.len());
    for (i, t) in doc.terms.into_iter().enumerate() {
        let coeff = parse_rational(&t.coeff)
            .ok_or_else(|| Error::parse(1, 1, format!("term {i}: bad coefficient `{}`", t.coeff)))?;
        terms.push((Exponents::new(t.exponents), t.component, coeff));
    }
    let series = CommutativeSeries::from_terms(doc.variables, doc.outputs, degree, terms)?;
    match cut {
        Some(n) => series.truncate(n),
        None => Ok(series),
    }
}

pub fn parse_comm_series(text: &str) -> Result<CommutativeSeries> {
    if is_json(text) {
        return comm_from_doc(serde_json::from_str(text).map_err(json_error)?, None);
    }
    parse_comm_text(text, None)
}

/// Degree handling as for [`parse_series_at`].
pub fn parse_comm_series_at(text: &str, degree: usize) -> Result<CommutativeSeries> {
    if is_json(text) {
        return comm_from_doc(serde_json::from_str(text).map_err(json_error)?, Some(degree));
    }
    parse_comm_text(text, Some(degree))
}

pub fn render_comm_series(s: &CommutativeSeries) -> String {
    let mut out = format!(
        "@variables {}\n@outputs {}\n@degree {}\n",
        s.variables(),
        s.outputs(),
        s.degree()
    );
    for (e, i, c) in s.terms() {
        out.push_str(&format!("{c} {i} {e}\n"));
    }
    out
}

pub fn render_comm_series_json(s: &CommutativeSeries) -> String {
    let doc = CommDoc {
        variables: s.variables(),
        outputs: s.outputs(),
        degree: s.degree(),
        terms: s
            .terms()
            .into_iter()
            .map(|(e, i, c)| CommTermDoc {
                coeff: c.to_string(),
                component: i,
                exponents: e.as_slice().to_vec(),
            })
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("series documents always serialize");
    json.push('\n');
    json
}

pub fn render_report_json(r: &ComparisonReport) -> String {
    let mut json = serde_json::to_string_pretty(r).expect("reports always serialize");
    json.push('\n');
    json
}

/// Parses the input mini-language: one `const:<v>`, `poly:<c0,c1,...>` or
/// `sin:<amp>,<freq>` per channel, separated by `;`.
pub fn parse_signals(spec: &str) -> Result<Vec<Signal>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for part in spec.split(';') {
        let column = offset + part.len() - part.trim_start().len() + 1;
        offset += part.len() + 1;
        let part = part.trim();
        let bad = |msg: String| Error::parse(1, column, msg);
        let (kind, args) = part
            .split_once(':')
            .ok_or_else(|| bad(format!("expected `kind:args`, found `{part}`")))?;
        let values = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad(format!("bad numeric arguments `{args}`")))?;
        let signal = match (kind.trim(), values.as_slice()) {
            ("const", [v]) => Signal::Constant(*v),
            ("poly", cs) => Signal::Poly(cs.to_vec()),
            ("sin", [amp, freq]) => Signal::Sin { amp: *amp, freq: *freq },
            (k @ ("const" | "sin"), _) => return Err(bad(format!("wrong number of arguments for `{k}`"))),
            (k, _) => return Err(bad(format!("unknown signal kind `{k}`"))),
        };
        out.push(signal);
    }
    Ok(out)
}

/// Writes `t,ch0,ch1,...` CSV. Floats use the shortest representation that
/// reads back to the same value.
pub fn write_trajectory_csv<W: io::Write>(t: &Trajectory, writer: W) -> Result<()> {
    let io_err = |e: csv::Error| Error::InvalidArgument(format!("writing CSV: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend((0..t.channel_count()).map(|i| format!("ch{i}")));
    w.write_record(&header).map_err(io_err)?;
    for k in 0..t.samples() {
        let mut row = vec![t.time(k).to_string()];
        row.extend((0..t.channel_count()).map(|i| t.channel(i)[k].to_string()));
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("writing CSV: {e}")))
}

pub fn render_trajectory_csv(t: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(t, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// Reads a trajectory written by [`write_trajectory_csv`]. The time column
/// must form a uniform grid.
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::parse(1, 1, e.to_string()))?.clone();
    if header.get(0).map(str::trim) != Some("t") || header.len() < 2 {
        return Err(Error::parse(1, 1, "expected header `t,ch0,...`"));
    }
    let mut times = Vec::new();
    let mut channels = vec![Vec::new(); header.len() - 1];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, 1, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(Error::parse(
                line,
                1,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::parse(line, j + 1, format!("expected a number, found `{field}`")))?;
            if j == 0 {
                times.push(v);
            } else {
                channels[j - 1].push(v);
            }
        }
    }
    if times.len() < 2 {
        return Err(Error::InvalidTrajectory(format!(
            "{} samples, need at least 2",
            times.len()
        )));
    }
    let t0 = times[0];
    let dt = (times[times.len() - 1] - t0) / (times.len() - 1) as f64;
    let tol = 1e-9 * dt.abs().max(1e-300) * times.len() as f64;
    if let Some(k) = (0..times.len()).find(|&k| (times[k] - (t0 + k as f64 * dt)).abs() > tol.max(1e-12)) {
        return Err(Error::InvalidTrajectory(format!(
            "sample {k} at t = {} is off the uniform grid",
            times[k]
        )));
    }
    Trajectory::new(t0, dt, channels)
}
