#![allow(dead_code)]

use lenschain::cycles::{cycle_matrices, det_i_minus, solve_cycle};
use lenschain::pwamap::PwaMap;
use lenschain::smallmat::{is_singular_det, Matrix};
use lenschain::symseq::{Symbol, SymbolSequence};
use lenschain::Tolerances;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn na(m: &Matrix) -> DMatrix<f64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m[(i, j)])
}

/// Continuous map with entries of size about `1/√N`. With `singular_left`
/// the first column of `A_L` is a combination of the others.
pub fn random_map(r: &mut ChaCha8Rng, dim: usize, singular_left: bool) -> PwaMap {
    let s = 1.2 / (dim as f64).sqrt();
    let mut a_l = Matrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            a_l[(i, j)] = r.gen_range(-s..s);
        }
    }
    if singular_left && dim > 1 {
        let w: Vec<f64> = (1..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
        let col: Vec<f64> = (0..dim)
            .map(|i| (1..dim).map(|j| w[j - 1] * a_l[(i, j)]).sum())
            .collect();
        a_l.set_col(0, &col);
    }
    let mut a_r = a_l.clone();
    let col: Vec<f64> = (0..dim).map(|_| r.gen_range(-2.0 * s..2.0 * s)).collect();
    a_r.set_col(0, &col);
    let b: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
    PwaMap::new(a_l, a_r, b).unwrap()
}

/// Random word of the given length containing both symbols when `len > 1`.
pub fn random_sequence(r: &mut ChaCha8Rng, len: usize) -> SymbolSequence {
    loop {
        let v: Vec<Symbol> = (0..len)
            .map(|_| {
                if r.gen_bool(0.5) {
                    Symbol::L
                } else {
                    Symbol::R
                }
            })
            .collect();
        let s = SymbolSequence::new(v).unwrap();
        if len == 1 || (s.count_l() > 0 && s.count_l() < len) {
            return s;
        }
    }
}

/// Replaces the first column of the branch matrix for `side` by
/// `base + c·dir`.
pub fn retune(map: &PwaMap, side: Symbol, base: &[f64], dir: &[f64], c: f64) -> PwaMap {
    let col: Vec<f64> = base.iter().zip(dir).map(|(a, d)| a + c * d).collect();
    let (mut a_l, mut a_r) = (map.a_l().clone(), map.a_r().clone());
    match side {
        Symbol::L => a_l.set_col(0, &col),
        Symbol::R => a_r.set_col(0, &col),
    }
    PwaMap::new(a_l, a_r, map.b().to_vec()).unwrap()
}

/// The `nN × nN` system `x_{i+1} − A_{S_i} x_i = μb` (indices mod n).
pub fn stacked_system(map: &PwaMap, mu: f64, s: &SymbolSequence) -> (DMatrix<f64>, DVector<f64>) {
    let (n, dim) = (s.len(), map.dim());
    let mut k = DMatrix::zeros(n * dim, n * dim);
    let mut rhs = DVector::zeros(n * dim);
    for i in 0..n {
        let a = map.matrix(s.symbols()[i]);
        let next = (i + 1) % n;
        for r in 0..dim {
            k[(i * dim + r, next * dim + r)] += 1.0;
            for c in 0..dim {
                k[(i * dim + r, i * dim + c)] -= a[(r, c)];
            }
            rhs[i * dim + r] = mu * map.b()[r];
        }
    }
    (k, rhs)
}

/// SVD least-squares solution of the stacked system and its residual norm.
pub fn stacked_solve(map: &PwaMap, mu: f64, s: &SymbolSequence) -> (Vec<Vec<f64>>, f64) {
    let (k, rhs) = stacked_system(map, mu, s);
    let svd = k.clone().svd(true, true);
    let eps = 1e-10 * svd.singular_values.max();
    let x = svd.solve(&rhs, eps).unwrap();
    let residual = (&k * &x - &rhs).norm();
    let dim = map.dim();
    let pts = (0..s.len())
        .map(|i| x.rows(i * dim, dim).iter().copied().collect())
        .collect();
    (pts, residual)
}

/// `det(I − M_S)` and `det P_S` computed with nalgebra from scratch.
pub fn oracle_dets(map: &PwaMap, s: &SymbolSequence) -> (f64, f64) {
    let dim = map.dim();
    let id = DMatrix::<f64>::identity(dim, dim);
    let mut q = id.clone();
    let mut p = id.clone();
    for k in (1..s.len()).rev() {
        q = &q * na(map.matrix(s.symbols()[k]));
        p += &q;
    }
    let m = &q * na(map.matrix(s.symbols()[0]));
    ((id - m).determinant(), p.determinant())
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Default)]
pub struct IdentityTally {
    pub instances: usize,
    pub flip_identity_worst: f64,
    pub cyclic_det_worst: f64,
    pub singular_branch: usize,
    pub p_indep_s0_failures: usize,
    pub oracle_worst: f64,
    pub on_manifold: usize,
    pub off_manifold: usize,
    pub manifold_failures: usize,
    pub unsolvable_instances: usize,
    pub unsolvable_min_residual: f64,
    pub unsolvable_failures: usize,
}

/// Flip and cyclic-shift identities, `P_S` independence of `S₀` and agreement with
/// the stacked oracle for one random instance.
pub fn generic_instance(r: &mut ChaCha8Rng, t: &mut IdentityTally) {
    let tol = Tolerances::default();
    let dim = r.gen_range(2..=5);
    let len = r.gen_range(2..=9);
    let singular_left = r.gen_bool(0.3);
    let map = random_map(r, dim, singular_left);
    let s = random_sequence(r, len);
    let mu = r.gen_range(0.5..2.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
    t.instances += 1;

    let flipped = s.flip(0);
    let (mats, mats_f) = (cycle_matrices(&map, &s), cycle_matrices(&map, &flipped));
    if mats.p.as_slice() != mats_f.p.as_slice() {
        t.p_indep_s0_failures += 1;
    }

    // cyclic shifts leave det(I − M) unchanged; checked against the oracle too
    let (det_oracle, detp_oracle) = oracle_dets(&map, &s);
    let base = det_i_minus(&mats.m);
    let mut worst = rel_err(base, det_oracle);
    for i in 1..len as i64 {
        worst = worst.max(rel_err(
            det_i_minus(&cycle_matrices(&map, &s.cyclic(i)).m),
            base,
        ));
    }
    t.cyclic_det_worst = t.cyclic_det_worst.max(worst);
    if singular_left && s.count_l() > 0 {
        t.singular_branch += 1;
    }
    t.oracle_worst = t.oracle_worst.max(rel_err(mats.p.det(), detp_oracle));

    // det(I − M_S) s₀ is unchanged by flipping S₀
    let (a, b) = (
        solve_cycle(&map, mu, &s, &tol),
        solve_cycle(&map, mu, &flipped, &tol),
    );
    if let (Ok(a), Ok(b)) = (&a, &b) {
        let lhs = a.det_i_minus_m * a.s_values[0];
        let rhs = b.det_i_minus_m * b.s_values[0];
        t.flip_identity_worst = t.flip_identity_worst.max(rel_err(lhs, rhs));
        let (pts, _) = stacked_solve(&map, mu, &s);
        for (x, y) in a.points.iter().zip(&pts) {
            let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (u, v) in x.iter().zip(y) {
                t.oracle_worst = t.oracle_worst.max((u - v).abs() / scale);
            }
        }
    }
}

fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First sign change of `f` on a uniform grid over `[-4, 4]`, refined.
fn tuned_root<F: FnMut(f64) -> f64>(mut f: F) -> Option<f64> {
    let grid: Vec<f64> = (0..=160).map(|k| -4.0 + 0.05 * k as f64).collect();
    let mut prev = f(grid[0]);
    for w in grid.windows(2) {
        let cur = f(w[1]);
        if prev.is_finite() && cur.is_finite() && (prev < 0.0) != (cur < 0.0) {
            return Some(bisect(&mut f, w[0], w[1]));
        }
        prev = cur;
    }
    None
}

fn relative_det_big(m: &Matrix, det: f64) -> bool {
    det.abs() > 1e-3 * m.norm_inf().max(1.0).powi(m.dim() as i32)
}

/// `s₀ = 0` iff `P_S` singular, on one on-manifold instance (a branch column tuned so that
/// `det P_S = 0`) and one off-manifold instance. Returns false when the
/// random draw cannot be tuned.
pub fn manifold_pair(r: &mut ChaCha8Rng, t: &mut IdentityTally) -> bool {
    let tol = Tolerances::default();
    let dim = r.gen_range(2..=5);
    let len = r.gen_range(2..=9);
    let map = random_map(r, dim, false);
    let s = random_sequence(r, len);
    let mu = 1.0;
    let on_side = |m: &PwaMap| -> Option<(bool, bool)> {
        let sol = solve_cycle(m, mu, &s, &tol).ok()?;
        let mats = cycle_matrices(m, &s);
        let i_m = &Matrix::identity(dim) - &mats.m;
        if !relative_det_big(&i_m, sol.det_i_minus_m) {
            return None;
        }
        let x0 = &sol.points[0];
        let scale = x0.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        let on = sol.s_values[0].abs() <= tol.band * scale;
        let fired = is_singular_det(sol.det_p, mats.p.norm_inf(), dim, tol.sing);
        Some((on, fired))
    };
    // off-manifold: the draw itself, when P_S is far from singular
    let mats = cycle_matrices(&map, &s);
    let mut used = false;
    if relative_det_big(&mats.p, mats.p.det()) {
        if let Some((on, fired)) = on_side(&map) {
            t.off_manifold += 1;
            if on || fired {
                t.manifold_failures += 1;
            }
            used = true;
        }
    }
    // on-manifold: tune the branch used at S₁ so that det P_S = 0
    let side = s.symbols()[1];
    let base = map.matrix(side).col(0);
    let dir: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
    if let Some(c) = tuned_root(|c| {
        cycle_matrices(&retune(&map, side, &base, &dir, c), &s)
            .p
            .det()
    }) {
        let tuned = retune(&map, side, &base, &dir, c);
        if let Some((on, fired)) = on_side(&tuned) {
            t.on_manifold += 1;
            if !(on && fired) {
                t.manifold_failures += 1;
            }
            used = true;
        }
    }
    used
}

/// No solution on an instance tuned to `det(I − M_S) = 0` with `P_S`
/// nonsingular: the stacked system must have no solution.
pub fn unsolvable_instance(r: &mut ChaCha8Rng, t: &mut IdentityTally) -> bool {
    let tol = Tolerances::default();
    let dim = r.gen_range(2..=5);
    let len = r.gen_range(2..=9);
    let map = random_map(r, dim, false);
    let s = random_sequence(r, len);
    // S₀'s branch does not enter P_S unless the symbol repeats
    let side = s.symbols()[0];
    let base = map.matrix(side).col(0);
    let dir: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
    let Some(c) =
        tuned_root(|c| det_i_minus(&cycle_matrices(&retune(&map, side, &base, &dir, c), &s).m))
    else {
        return false;
    };
    let tuned = retune(&map, side, &base, &dir, c);
    let mats = cycle_matrices(&tuned, &s);
    if !relative_det_big(&mats.p, mats.p.det()) {
        return false;
    }
    let rho = tuned.rho().unwrap();
    let rb: f64 = rho.iter().zip(tuned.b()).map(|(a, b)| a * b).sum();
    if rb.abs() < 1e-3 {
        return false;
    }
    t.unsolvable_instances += 1;
    let (_, residual) = stacked_solve(&tuned, 1.0, &s);
    if t.unsolvable_instances == 1 || residual < t.unsolvable_min_residual {
        t.unsolvable_min_residual = residual;
    }
    let fired = {
        let a = &Matrix::identity(dim) - &mats.m;
        is_singular_det(a.det(), a.norm_inf(), dim, tol.sing)
    };
    if residual <= 1e-4 || !fired || solve_cycle(&tuned, 1.0, &s, &tol).is_ok() {
        t.unsolvable_failures += 1;
    }
    true
}

/// Runs the full corpus from one seed.
pub fn identity_suite(seed: u64, generic: usize, tuned: usize) -> IdentityTally {
    let mut r = rng(seed);
    let mut t = IdentityTally::default();
    for _ in 0..generic {
        generic_instance(&mut r, &mut t);
    }
    let mut tries = 0;
    while t.on_manifold < tuned && tries < 20 * tuned {
        manifold_pair(&mut r, &mut t);
        tries += 1;
    }
    tries = 0;
    while t.unsolvable_instances < tuned && tries < 20 * tuned {
        unsolvable_instance(&mut r, &mut t);
        tries += 1;
    }
    t
}

/// Primitive words of length `n` as bit masks (bit j set = R), reduced to
/// their least rotation.
pub fn primitive_classes(n: u32) -> BTreeSet<u32> {
    let mask = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let rot = |w: u32, k: u32| {
        if k == 0 {
            w
        } else {
            ((w >> k) | (w << (n - k))) & mask
        }
    };
    let mut out = BTreeSet::new();
    for w in 0..=mask {
        if (1..n).any(|k| rot(w, k) == w) {
            continue;
        }
        out.insert((0..n).map(|k| rot(w, k)).min().unwrap());
    }
    out
}

pub fn least_rotation(w: u32, n: u32) -> u32 {
    let mask = (1u32 << n) - 1;
    (0..n)
        .map(|k| {
            if k == 0 {
                w
            } else {
                ((w >> k) | (w << (n - k))) & mask
            }
        })
        .min()
        .unwrap()
}

/// Rotational classes from the rigid-rotation itinerary: symbol `j` is L
/// exactly when the rotated point `j·m mod n` is among the first `l`.
pub fn rotational_classes(n: u32) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    for l in 1..n {
        for m in 1..n {
            if gcd(m, n) != 1 {
                continue;
            }
            let w = (0..n)
                .filter(|j| (j * m) % n >= l)
                .fold(0u32, |acc, j| acc | (1 << j));
            out.insert(least_rotation(w, n));
        }
    }
    out
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn word(w: u32, n: u32) -> SymbolSequence {
    let v = (0..n)
        .map(|j| {
            if w >> j & 1 == 1 {
                Symbol::R
            } else {
                Symbol::L
            }
        })
        .collect();
    SymbolSequence::new(v).unwrap()
}
