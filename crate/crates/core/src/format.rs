//! Number formatting and the small `key = value` text format shared by the
//! map, family and report files.

use crate::error::{Error, Result};

/// C's `%.17g`.
pub fn g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    const P: i32 = 17;
    let e_form = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = e_form.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, x);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip_zeros(mantissa), sign, exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A signed decimal or `p/q` fraction of decimals, e.g. `-23/14`.
pub fn parse_literal(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: f64 = p.trim().parse().ok()?;
        let q: f64 = q.trim().parse().ok()?;
        let v = p / q;
        return v.is_finite().then_some(v);
    }
    t.parse().ok().filter(|v: &f64| v.is_finite())
}

/// One `key = value` line with its 1-based position.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
    /// column of the first character of `value`
    pub col: usize,
}

/// Splits `key = value` lines; blank lines and `#` comments are skipped and
/// duplicate keys are rejected.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(Error::Parse {
                line,
                col: 1,
                msg: "expected `key = value`".into(),
            });
        };
        let key = content[..eq].trim().to_string();
        if key.is_empty() {
            return Err(Error::Parse {
                line,
                col: 1,
                msg: "empty key".into(),
            });
        }
        if out.iter().any(|e| e.key == key) {
            return Err(Error::Parse {
                line,
                col: 1,
                msg: format!("duplicate key `{key}`"),
            });
        }
        let rest = &content[eq + 1..];
        let lead = rest.len() - rest.trim_start().len();
        out.push(Entry {
            key,
            value: rest.trim().to_string(),
            line,
            col: eq + 2 + lead,
        });
    }
    Ok(out)
}

/// Splits a list of values on commas outside parentheses, returning each
/// piece with its column offset inside `text`.
pub fn split_top_level(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' | ';' if depth == 0 => {
                out.push((start, &text[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((start, &text[start..]));
    out.into_iter()
        .map(|(off, s)| {
            let lead = s.len() - s.trim_start().len();
            (off + lead, s.trim())
        })
        .collect()
}

/// Parses a list of literals such as `0, 1, 28/87`.
pub fn parse_literal_list(entry: &Entry) -> Result<Vec<f64>> {
    let body = entry.value.trim_start_matches('[').trim_end_matches(']');
    let shift = entry.value.len() - entry.value.trim_start_matches('[').len();
    split_top_level(body)
        .into_iter()
        .map(|(off, piece)| {
            parse_literal(piece).ok_or_else(|| Error::Parse {
                line: entry.line,
                col: entry.col + shift + off,
                msg: format!("`{piece}` is not a number or p/q fraction"),
            })
        })
        .collect()
}

/// Shortest decimal that parses back to the same `f64`.
pub fn shortest(x: f64) -> String {
    let s = format!("{x:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

pub fn join_shortest(v: &[f64]) -> String {
    v.iter()
        .map(|x| shortest(*x))
        .collect::<Vec<_>>()
        .join(", ")
}
