use super::expr::Expr;
use crate::error::{Error, Result};
use crate::format::{parse_entries, parse_literal, split_top_level, Entry};
use crate::pwamap::PwaMap;
use crate::shrink::MapFamily;
use crate::smallmat::Matrix;

/// A two-parameter family of maps with entries given as expressions in
/// `p1`, `p2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub dim: usize,
    /// row-major
    pub a_l: Vec<Expr>,
    pub a_r: Vec<Expr>,
    pub b: Vec<Expr>,
    pub mu: f64,
    /// `[p1_min, p1_max, p2_min, p2_max]`
    pub domain: [f64; 4],
    pub built_in: Option<String>,
}

const FIG1: &str = "\
N = 2
A_L = 6/5*cos(2*pi*p1), 1; -9/25, 0
A_R = 2/p2*cos(2*pi*p1), 1; -1/p2^2, 0
b = 1, 0
mu = 1
box = 0, 0.5, 0.2, 2
";

/// Parses a family file, or expands the built-in name `fig1`.
///
/// ```text
/// N = 2
/// A_L = 6/5*cos(2*pi*p1), 1; -9/25, 0
/// A_R = 2/p2*cos(2*pi*p1), 1; -1/p2^2, 0
/// b = 1, 0
/// mu = 1
/// box = 0.27, 0.30, 0.6, 1.0
/// ```
pub fn parse_family(text: &str) -> Result<FamilySpec> {
    if text.trim() == "fig1" {
        let mut spec = parse_family(FIG1)?;
        spec.built_in = Some("fig1".into());
        return Ok(spec);
    }
    let entries = parse_entries(text)?;
    for e in &entries {
        if !["N", "A_L", "A_R", "b", "mu", "box"].contains(&e.key.as_str()) {
            return Err(Error::Parse {
                line: e.line,
                col: 1,
                msg: format!("unknown key `{}`", e.key),
            });
        }
    }
    let find = |k: &str| {
        entries
            .iter()
            .find(|e| e.key == k)
            .ok_or_else(|| Error::Parse {
                line: 0,
                col: 0,
                msg: format!("missing key `{k}`"),
            })
    };
    let n_entry = find("N")?;
    let dim: usize = n_entry
        .value
        .parse()
        .ok()
        .filter(|n| (1..=8).contains(n))
        .ok_or_else(|| Error::Parse {
            line: n_entry.line,
            col: n_entry.col,
            msg: "N must be an integer in 1..=8".into(),
        })?;
    let exprs = |key: &str, len: usize| -> Result<Vec<Expr>> {
        let e = find(key)?;
        let list = expr_list(e)?;
        if list.len() != len {
            return Err(Error::Parse {
                line: e.line,
                col: e.col,
                msg: format!("`{key}` needs {len} entries, found {}", list.len()),
            });
        }
        Ok(list)
    };
    let a_l = exprs("A_L", dim * dim)?;
    let a_r = exprs("A_R", dim * dim)?;
    let b = exprs("b", dim)?;
    let mu = match entries.iter().find(|e| e.key == "mu") {
        None => 1.0,
        Some(e) => parse_literal(&e.value).ok_or_else(|| Error::Parse {
            line: e.line,
            col: e.col,
            msg: "mu must be a number".into(),
        })?,
    };
    let box_entry = find("box")?;
    let corners = crate::format::parse_literal_list(box_entry)?;
    if corners.len() != 4 || corners[0] > corners[1] || corners[2] > corners[3] {
        return Err(Error::Parse {
            line: box_entry.line,
            col: box_entry.col,
            msg: "box must be p1_min, p1_max, p2_min, p2_max with min ≤ max".into(),
        });
    }
    let spec = FamilySpec {
        dim,
        a_l,
        a_r,
        b,
        mu,
        domain: [corners[0], corners[1], corners[2], corners[3]],
        built_in: None,
    };
    spec.validate()?;
    Ok(spec)
}

fn expr_list(e: &Entry) -> Result<Vec<Expr>> {
    let body = e.value.trim_start_matches('[').trim_end_matches(']');
    let shift = e.value.len() - e.value.trim_start_matches('[').len();
    split_top_level(body)
        .into_iter()
        .map(|(off, piece)| Expr::parse_at(piece, e.line, e.col + shift + off))
        .collect()
}

impl FamilySpec {
    /// Continuity as expressions, then finiteness at the box corners.
    pub fn validate(&self) -> Result<()> {
        if self.mu == 0.0 || !self.mu.is_finite() {
            return Err(Error::Config("mu must be nonzero and finite".into()));
        }
        let n = self.dim;
        for r in 0..n {
            for c in 1..n {
                let (l, rr) = (&self.a_l[r * n + c], &self.a_r[r * n + c]);
                if l.to_string() != rr.to_string() {
                    return Err(Error::ContinuityViolated(format!(
                        "entry ({}, {}) differs: `{l}` vs `{rr}`",
                        r + 1,
                        c + 1
                    )));
                }
            }
        }
        let [a, b, c, d] = self.domain;
        for (p1, p2) in [(a, c), (a, d), (b, c), (b, d)] {
            for e in self.a_l.iter().chain(&self.a_r).chain(&self.b) {
                e.eval_checked(p1, p2)?;
            }
        }
        Ok(())
    }

    pub fn with_domain(mut self, domain: [f64; 4]) -> Result<Self> {
        self.domain = domain;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        self.mu = mu;
        self.validate()?;
        Ok(self)
    }

    pub fn build(&self, p1: f64, p2: f64) -> Result<PwaMap> {
        let eval =
            |v: &[Expr]| -> Result<Vec<f64>> { v.iter().map(|e| e.eval_checked(p1, p2)).collect() };
        PwaMap::new(
            Matrix::from_row_major(self.dim, eval(&self.a_l)?)?,
            Matrix::from_row_major(self.dim, eval(&self.a_r)?)?,
            eval(&self.b)?,
        )
    }
}

impl MapFamily for FamilySpec {
    fn map_at(&self, xi: [f64; 2]) -> Result<PwaMap> {
        self.build(xi[0], xi[1])
    }

    fn mu(&self) -> f64 {
        self.mu
    }

    fn domain(&self) -> [f64; 4] {
        self.domain
    }
}
