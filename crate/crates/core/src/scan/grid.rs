use super::family::FamilySpec;
use crate::cycles::solve_cycle;
use crate::error::{Error, Result};
use crate::format::g17;
use crate::pwamap::PwaMap;
use crate::shrink::MapFamily;
use crate::smallmat::norm2;
use crate::symseq::{gcd, rotational_params, RotationalParams, Symbol, SymbolSequence};
use crate::Tolerances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// iteration budget before giving up on recurrence
    pub transient: usize,
    /// escape radius in units of `|μ|`
    pub escape: f64,
    pub recurrence_tol: f64,
    /// also start from both fixed points plus seeded random offsets
    pub multi_start: bool,
    pub seed: u64,
    /// worker threads; 0 lets rayon decide
    pub threads: usize,
    pub tol: Tolerances,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            transient: 10_000,
            escape: 1e6,
            recurrence_tol: 1e-9,
            multi_start: false,
            seed: 0,
            threads: 0,
            tol: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellLabel {
    FixedPoint(Symbol),
    Periodic(RotationalParams),
    PeriodicNonRotational(usize),
    NoPeriodDetected,
    Diverged,
}

impl CellLabel {
    fn columns(&self) -> (&'static str, i64, i64, i64) {
        match *self {
            CellLabel::FixedPoint(Symbol::L) => ("FixedPointL", 1, 0, 1),
            CellLabel::FixedPoint(Symbol::R) => ("FixedPointR", 0, 0, 1),
            CellLabel::Periodic(p) => ("Periodic", p.l, p.m, p.n),
            CellLabel::PeriodicNonRotational(n) => ("PeriodicNonRotational", 0, 0, n as i64),
            CellLabel::NoPeriodDetected => ("NoPeriodDetected", 0, 0, 0),
            CellLabel::Diverged => ("Diverged", 0, 0, 0),
        }
    }

    fn from_columns(label: &str, l: i64, m: i64, n: i64) -> Option<CellLabel> {
        Some(match label {
            "FixedPointL" => CellLabel::FixedPoint(Symbol::L),
            "FixedPointR" => CellLabel::FixedPoint(Symbol::R),
            "Periodic" => CellLabel::Periodic(RotationalParams::new(l, m, n).ok()?),
            "PeriodicNonRotational" => CellLabel::PeriodicNonRotational(usize::try_from(n).ok()?),
            "NoPeriodDetected" => CellLabel::NoPeriodDetected,
            "Diverged" => CellLabel::Diverged,
            _ => return None,
        })
    }

    pub fn is_attractor(&self) -> bool {
        matches!(
            self,
            CellLabel::FixedPoint(_) | CellLabel::Periodic(_) | CellLabel::PeriodicNonRotational(_)
        )
    }
}

impl fmt::Display for CellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellLabel::FixedPoint(s) => write!(f, "FixedPoint({s})"),
            CellLabel::Periodic(p) => write!(f, "Periodic({},{},{})", p.l, p.m, p.n),
            CellLabel::PeriodicNonRotational(n) => write!(f, "PeriodicNonRotational({n})"),
            CellLabel::NoPeriodDetected => f.write_str("NoPeriodDetected"),
            CellLabel::Diverged => f.write_str("Diverged"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub p1: f64,
    pub p2: f64,
    pub label: CellLabel,
    /// smallest `|s_i|` of the detected orbit, NaN without one
    pub margin: f64,
    /// largest multiplier modulus of the detected orbit, NaN without one
    pub max_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TongueGrid {
    pub width: usize,
    pub height: usize,
    /// row-major with `p1` varying fastest
    pub cells: Vec<Cell>,
}

pub const GRID_HEADER: &str = "p1,p2,label,l,m,n,margin,max_multiplier";

impl TongueGrid {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[j * self.width + i]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.cells.len());
        out.push_str(GRID_HEADER);
        out.push('\n');
        for c in &self.cells {
            let (name, l, m, n) = c.label.columns();
            out += &format!(
                "{},{},{name},{l},{m},{n},{},{}\n",
                g17(c.p1),
                g17(c.p2),
                g17(c.margin),
                g17(c.max_multiplier)
            );
        }
        out
    }

    /// Reads [`TongueGrid::to_csv`] output back.
    pub fn from_csv(text: &str) -> Result<TongueGrid> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == GRID_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    col: 1,
                    msg: format!("expected header `{GRID_HEADER}`"),
                })
            }
        }
        let mut cells = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse {
                line: idx + 1,
                col: 1,
                msg: msg.to_string(),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad("expected 8 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
            let int = |s: &str| s.parse::<i64>().map_err(|_| bad("bad integer"));
            let label = CellLabel::from_columns(f[2], int(f[3])?, int(f[4])?, int(f[5])?)
                .ok_or_else(|| bad("bad label"))?;
            cells.push(Cell {
                p1: num(f[0])?,
                p2: num(f[1])?,
                label,
                margin: num(f[6])?,
                max_multiplier: num(f[7])?,
            });
        }
        if cells.is_empty() {
            return Err(Error::Config("grid has no cells".into()));
        }
        let width = cells.iter().take_while(|c| c.p2 == cells[0].p2).count();
        if cells.len() % width != 0 {
            return Err(Error::Config("grid rows have unequal length".into()));
        }
        Ok(TongueGrid {
            width,
            height: cells.len() / width,
            cells,
        })
    }

    /// Cells with the given label, in grid order.
    pub fn with_label(&self, label: CellLabel) -> impl Iterator<Item = &Cell> + '_ {
        self.cells.iter().filter(move |c| c.label == label)
    }
}

/// `k`-th of `count` equally spaced values on `[lo, hi]`.
pub fn grid_coord(lo: f64, hi: f64, k: usize, count: usize) -> f64 {
    if count == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * (k as f64 / (count - 1) as f64)
    }
}

/// Labels every cell of a `width × height` grid over the family's box.
pub fn scan_tongues(
    spec: &FamilySpec,
    grid: (usize, usize),
    n_max: usize,
    opts: &ScanOptions,
) -> Result<TongueGrid> {
    let (width, height) = grid;
    if width == 0 || height == 0 {
        return Err(Error::Config("empty grid".into()));
    }
    if n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    let [a, b, c, d] = spec.domain;
    let run = || -> Vec<Cell> {
        (0..width * height)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % width, k / width);
                let (p1, p2) = (grid_coord(a, b, i, width), grid_coord(c, d, j, height));
                let (label, margin, max_multiplier) = match spec.map_at([p1, p2]) {
                    Ok(map) => classify_map(&map, spec.mu, n_max, opts, k as u64),
                    Err(_) => (CellLabel::NoPeriodDetected, f64::NAN, f64::NAN),
                };
                Cell {
                    p1,
                    p2,
                    label,
                    margin,
                    max_multiplier,
                }
            })
            .collect()
    };
    let cells = if opts.threads == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run)
    };
    Ok(TongueGrid {
        width,
        height,
        cells,
    })
}

/// Label, margin and largest multiplier modulus of the attractor reached
/// from the configured initial points.
pub fn classify_map(
    map: &PwaMap,
    mu: f64,
    n_max: usize,
    opts: &ScanOptions,
    cell_id: u64,
) -> (CellLabel, f64, f64) {
    let mut first = None;
    for x0 in initial_points(map, mu, opts, cell_id) {
        let found = classify_orbit(map, mu, &x0, n_max, opts);
        if found.0.is_attractor() {
            return found;
        }
        first.get_or_insert(found);
    }
    first.unwrap_or((CellLabel::NoPeriodDetected, f64::NAN, f64::NAN))
}

fn initial_points(map: &PwaMap, mu: f64, opts: &ScanOptions, cell_id: u64) -> Vec<Vec<f64>> {
    let n = map.dim();
    let fixed: Vec<_> = [Symbol::L, Symbol::R]
        .into_iter()
        .filter_map(|side| map.fixed_point(mu, side, &opts.tol).ok())
        .collect();
    let nudge = 1e-4 * mu / (n as f64).sqrt();
    let primary = match fixed.iter().find(|fp| fp.admissible) {
        Some(fp) => fp.point.iter().map(|x| x + nudge).collect(),
        None => map.b().iter().map(|v| mu * v).collect(),
    };
    let mut starts = vec![primary];
    if opts.multi_start {
        let mut rng =
            ChaCha8Rng::seed_from_u64(opts.seed ^ cell_id.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        for fp in &fixed {
            for _ in 0..2 {
                let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let len = norm2(&dir).max(f64::MIN_POSITIVE);
                starts.push(
                    fp.point
                        .iter()
                        .zip(&dir)
                        .map(|(x, u)| x + 1e-2 * mu.abs() * u / len)
                        .collect(),
                );
            }
        }
    }
    starts
}

const CHECK_EVERY: usize = 256;

fn classify_orbit(
    map: &PwaMap,
    mu: f64,
    x0: &[f64],
    n_max: usize,
    opts: &ScanOptions,
) -> (CellLabel, f64, f64) {
    let none = (CellLabel::NoPeriodDetected, f64::NAN, f64::NAN);
    let escape = opts.escape * mu.abs();
    let window = 2 * n_max;
    let mut buf = vec![vec![0.0; map.dim()]; window + 1];
    buf[0].copy_from_slice(x0);
    let mut done = 0;
    loop {
        // fill the window starting from buf[0]
        for k in 0..window {
            let (head, tail) = buf.split_at_mut(k + 1);
            map.evaluate_into(mu, &head[k], &mut tail[0]);
            let r = norm2(&tail[0]);
            if !r.is_finite() || r > escape {
                return (CellLabel::Diverged, f64::NAN, f64::NAN);
            }
        }
        done += window;
        if let Some(p) = recurrence(&buf, n_max, opts.recurrence_tol) {
            return label_orbit(map, mu, &buf[..p], opts).unwrap_or(none);
        }
        if done >= opts.transient {
            return none;
        }
        // skip ahead before checking again
        let mut x = buf[window].clone();
        let mut y = x.clone();
        for _ in 0..CHECK_EVERY.min(opts.transient - done) {
            map.evaluate_into(mu, &x, &mut y);
            std::mem::swap(&mut x, &mut y);
            let r = norm2(&x);
            if !r.is_finite() || r > escape {
                return (CellLabel::Diverged, f64::NAN, f64::NAN);
            }
            done += 1;
        }
        buf[0] = x;
    }
}

/// Smallest `p ≤ n_max` with `‖x_{k+p} − x_k‖ ≤ tol·max(1, ‖x_k‖)` for
/// `k = 0, …, p−1`.
fn recurrence(buf: &[Vec<f64>], n_max: usize, tol: f64) -> Option<usize> {
    (1..=n_max).find(|&p| {
        (0..p).all(|k| {
            let d = buf[k]
                .iter()
                .zip(&buf[k + p])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d <= tol * norm2(&buf[k]).max(1.0)
        })
    })
}

fn label_orbit(
    map: &PwaMap,
    mu: f64,
    orbit: &[Vec<f64>],
    opts: &ScanOptions,
) -> Option<(CellLabel, f64, f64)> {
    let symbols: Vec<Symbol> = orbit
        .iter()
        .map(|x| if x[0] < 0.0 { Symbol::L } else { Symbol::R })
        .collect();
    let seq = SymbolSequence::new(symbols).ok()?;
    let sol = solve_cycle(map, mu, &seq, &opts.tol).ok()?;
    let radius = sol.multipliers.spectral_radius();
    if !sol.admissibility.is_admissible() || radius >= 1.0 + opts.tol.sing {
        return None;
    }
    let margin = sol
        .s_values
        .iter()
        .fold(f64::INFINITY, |a, s| a.min(s.abs()));
    let label = if seq.len() == 1 {
        CellLabel::FixedPoint(seq.symbols()[0])
    } else {
        match rotational_params(&seq) {
            Some(p) if p.l == 1 || p.l == p.n - 1 => {
                let m = angular_step(&sol.points).unwrap_or(p.m);
                CellLabel::Periodic(RotationalParams::new(p.l, m, p.n).ok()?)
            }
            Some(p) => CellLabel::Periodic(p),
            None => CellLabel::PeriodicNonRotational(seq.len()),
        }
    };
    Some((label, margin, radius))
}

/// For an orbit that steps a constant number `k` of places through the
/// angular order of its points (in the first two coordinates), returns
/// `min(k, n−k)`.
fn angular_step(points: &[Vec<f64>]) -> Option<i64> {
    let n = points.len();
    if n < 3 || points[0].len() < 2 {
        return None;
    }
    let (cx, cy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
    let (cx, cy) = (cx / n as f64, cy / n as f64);
    let mut order: Vec<usize> = (0..n).collect();
    let angle = |i: usize| (points[i][1] - cy).atan2(points[i][0] - cx);
    order.sort_by(|&i, &j| angle(i).total_cmp(&angle(j)));
    let mut pos = vec![0i64; n];
    for (rank, &i) in order.iter().enumerate() {
        pos[i] = rank as i64;
    }
    let n = n as i64;
    let k = (pos[1] - pos[0]).rem_euclid(n);
    let consistent =
        (0..n as usize).all(|i| (pos[(i + 1) % n as usize] - pos[i]).rem_euclid(n) == k);
    (consistent && k != 0 && gcd(k, n) == 1).then(|| k.min(n - k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::parse_family;
    use crate::smallmat::Matrix;

    #[test]
    fn csv_round_trip() {
        let spec = parse_family("fig1")
            .unwrap()
            .with_domain([0.27, 0.3, 0.6, 1.0])
            .unwrap();
        let g = scan_tongues(&spec, (6, 5), 12, &ScanOptions::default()).unwrap();
        let csv = g.to_csv();
        assert!(csv.starts_with("p1,p2,label,l,m,n,margin,max_multiplier\n"));
        let back = TongueGrid::from_csv(&csv).unwrap();
        assert_eq!(back.width, 6);
        assert_eq!(back.height, 5);
        assert_eq!(back.to_csv(), csv);
    }

    #[test]
    fn threads_do_not_change_bytes() {
        let spec = parse_family("fig1")
            .unwrap()
            .with_domain([0.27, 0.3, 0.6, 1.0])
            .unwrap();
        let run = |t| {
            let opts = ScanOptions {
                threads: t,
                ..ScanOptions::default()
            };
            scan_tongues(&spec, (8, 8), 10, &opts).unwrap().to_csv()
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn trivial_labels() {
        let opts = ScanOptions::default();
        let one = |a_l: f64, a_r: f64| {
            let map = PwaMap::new(
                Matrix::from_row_major(1, vec![a_l]).unwrap(),
                Matrix::from_row_major(1, vec![a_r]).unwrap(),
                vec![1.0],
            )
            .unwrap();
            classify_map(&map, -1.0, 5, &opts, 0).0
        };
        // x* = -1/(1 - 0.5) = -2 < 0, stable
        assert_eq!(one(0.5, 0.3), CellLabel::FixedPoint(Symbol::L));
        assert_eq!(one(3.0, 2.0), CellLabel::Diverged);
        assert!(matches!(
            scan_tongues(&parse_family("fig1").unwrap(), (0, 3), 5, &opts),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn angular_step_of_a_regular_orbit() {
        use std::f64::consts::PI;
        let pts: Vec<Vec<f64>> = (0..7)
            .map(|i| {
                let t = 2.0 * PI * 2.0 * i as f64 / 7.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        assert_eq!(angular_step(&pts), Some(2));
        let rev: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0], -p[1]]).collect();
        assert_eq!(angular_step(&rev), Some(2));
    }
}
