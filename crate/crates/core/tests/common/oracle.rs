//! Reference computations written from textbook formulas, independent of
//! the library's numerics. Shared by the integration and acceptance tests.

#![allow(dead_code)]

use std::f64::consts::{PI, SQRT_2};

use fkm_core::{BasisKind, BasisSystem, SparseFunctionalDataset, WeightScheme};

/// Fourier basis value (`deriv` 0 or 2) in closed form.
pub fn fourier(m: usize, t: f64, deriv: usize) -> Vec<f64> {
    (0..m)
        .map(|j| {
            if j == 0 {
                return if deriv == 0 { 1.0 } else { 0.0 };
            }
            let l = ((j + 1) / 2) as f64;
            let w = 2.0 * PI * l;
            let v = if j % 2 == 1 { (w * t).sin() } else { (w * t).cos() };
            let scale = if deriv == 2 { -w * w } else { 1.0 };
            SQRT_2 * scale * v
        })
        .collect()
}

/// Cox-de Boor recursion for all B-splines of degree `p` on `knots`. The
/// last nonempty span is closed on the right.
fn cox_de_boor(knots: &[f64], p: usize, t: f64) -> Vec<f64> {
    let n0 = knots.len() - 1;
    let last = (0..n0).rev().find(|&i| knots[i] < knots[i + 1]).unwrap();
    let mut b: Vec<f64> = (0..n0)
        .map(|i| {
            let inside = knots[i] <= t && t < knots[i + 1];
            let closed_end = i == last && t == knots[i + 1];
            if inside || closed_end {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for d in 1..=p {
        let next: Vec<f64> = (0..n0 - d)
            .map(|i| {
                let mut v = 0.0;
                let den1 = knots[i + d] - knots[i];
                if den1 > 0.0 {
                    v += (t - knots[i]) / den1 * b[i];
                }
                let den2 = knots[i + d + 1] - knots[i + 1];
                if den2 > 0.0 {
                    v += (knots[i + d + 1] - t) / den2 * b[i + 1];
                }
                v
            })
            .collect();
        b = next;
    }
    b
}

/// Derivative of order `deriv` of every degree-`p` B-spline, by repeated
/// application of the difference formula on lower-degree splines.
fn bspline_derivative(knots: &[f64], p: usize, t: f64, deriv: usize) -> Vec<f64> {
    if deriv == 0 {
        return cox_de_boor(knots, p, t);
    }
    if p == 0 {
        return vec![0.0; knots.len() - 1];
    }
    let lower = bspline_derivative(knots, p - 1, t, deriv - 1);
    let count = knots.len() - 1 - p;
    (0..count)
        .map(|i| {
            let mut v = 0.0;
            let den1 = knots[i + p] - knots[i];
            if den1 > 0.0 {
                v += p as f64 / den1 * lower[i];
            }
            let den2 = knots[i + p + 1] - knots[i + 1];
            if den2 > 0.0 {
                v -= p as f64 / den2 * lower[i + 1];
            }
            v
        })
        .collect()
}

/// Basis values (`deriv` 0 or 2) of `basis` at `t`, computed from scratch.
pub fn phi(basis: &BasisSystem, t: f64, deriv: usize) -> Vec<f64> {
    match basis.kind() {
        BasisKind::Fourier => fourier(basis.m(), t, deriv),
        BasisKind::BSpline => {
            let p = basis.order().unwrap() - 1;
            bspline_derivative(basis.knots(), p, t, deriv)
        }
    }
}

const GL3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Composite 3-point Gauss-Legendre rule: each interval between
/// consecutive `breaks` is cut into `panels` pieces.
pub fn integrate<F: FnMut(f64) -> f64>(breaks: &[f64], panels: usize, mut f: F) -> f64 {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for p in 0..panels {
            let mid = w[0] + (p as f64 + 0.5) * h;
            for (x, wt) in GL3_NODES.iter().zip(GL3_WEIGHTS) {
                total += wt * 0.5 * h * f(mid + 0.5 * h * x);
            }
        }
    }
    total
}

/// Breakpoints of `basis` on `[0, 1]`.
pub fn breaks(basis: &BasisSystem) -> Vec<f64> {
    let mut b: Vec<f64> = match basis.kind() {
        BasisKind::Fourier => vec![0.0, 1.0],
        BasisKind::BSpline => basis.knots().to_vec(),
    };
    b.dedup();
    b
}

/// `∫ φ_a^(d) φ_b^(d)` over `[0, 1]` by fine quadrature.
pub fn gram(basis: &BasisSystem, deriv: usize) -> Vec<Vec<f64>> {
    let m = basis.m();
    let panels = match basis.kind() {
        BasisKind::Fourier => 4000,
        BasisKind::BSpline => 8,
    };
    let brk = breaks(basis);
    let mut out = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in a..m {
            let v = integrate(&brk, panels, |t| {
                let f = phi(basis, t, deriv);
                f[a] * f[b]
            });
            out[a][b] = v;
            out[b][a] = v;
        }
    }
    out
}

/// Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub fn subject_weights(ds: &SparseFunctionalDataset, scheme: WeightScheme) -> Vec<f64> {
    let n = ds.n() as f64;
    let total: usize = ds.subjects().iter().map(|s| s.times.len()).sum();
    ds.subjects()
        .iter()
        .map(|s| match scheme {
            WeightScheme::Subj => 1.0 / s.times.len() as f64,
            WeightScheme::Obs => n / total as f64,
        })
        .collect()
}

/// Penalized weighted least-squares center of the subjects in `members`
/// from the normal equations `(Σ w ΦᵀΦ + λR) β = Σ w Φᵀy`.
pub fn center_update(
    ds: &SparseFunctionalDataset,
    members: &[usize],
    basis: &BasisSystem,
    r: &[Vec<f64>],
    lambda: f64,
    scheme: WeightScheme,
) -> Vec<f64> {
    let m = basis.m();
    let w = subject_weights(ds, scheme);
    let mut lhs = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for &i in members {
        let s = &ds.subjects()[i];
        for (&t, &y) in s.times.iter().zip(&s.values) {
            let f = phi(basis, t, 0);
            for a in 0..m {
                rhs[a] += w[i] * f[a] * y;
                for b in 0..m {
                    lhs[a][b] += w[i] * f[a] * f[b];
                }
            }
        }
    }
    for a in 0..m {
        for b in 0..m {
            lhs[a][b] += lambda * r[a][b];
        }
    }
    solve(lhs, rhs)
}

pub fn quadratic_form(r: &[Vec<f64>], beta: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, row) in r.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            s += beta[a] * v * beta[b];
        }
    }
    s
}

fn dense(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut seen: Vec<usize> = Vec::new();
    let out = labels
        .iter()
        .map(|l| match seen.iter().position(|s| s == l) {
            Some(p) => p,
            None => {
                seen.push(*l);
                seen.len() - 1
            }
        })
        .collect();
    (out, seen.len())
}

/// All injective maps from `0..k` into `0..into`.
fn injections(k: usize, into: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, into: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in 0..into {
            if !cur.contains(&j) {
                cur.push(j);
                rec(k, into, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(k, into, &mut Vec::new(), &mut out);
    out
}

/// Correct classification rate (percent) by enumerating every one-to-one
/// label mapping from the smaller label set into the larger.
pub fn ccr_bruteforce(truth: &[usize], pred: &[usize]) -> f64 {
    let (a, ka) = dense(truth);
    let (b, kb) = dense(pred);
    let mut best = 0;
    if kb <= ka {
        for map in injections(kb, ka) {
            best = best.max(a.iter().zip(&b).filter(|(x, y)| map[**y] == **x).count());
        }
    } else {
        for map in injections(ka, kb) {
            best = best.max(a.iter().zip(&b).filter(|(x, y)| map[**x] == **y).count());
        }
    }
    100.0 * best as f64 / truth.len() as f64
}

/// Adjusted Rand index from explicit pair counts, as an exact fraction
/// `(numerator, denominator)`; `None` when the denominator vanishes.
pub fn ari_pairs(truth: &[usize], pred: &[usize]) -> Option<(i128, i128)> {
    let n = truth.len();
    let (mut both, mut only_a, mut only_b, mut neither) = (0i128, 0i128, 0i128, 0i128);
    for i in 0..n {
        for j in i + 1..n {
            match (truth[i] == truth[j], pred[i] == pred[j]) {
                (true, true) => both += 1,
                (true, false) => only_a += 1,
                (false, true) => only_b += 1,
                (false, false) => neither += 1,
            }
        }
    }
    let num = 2 * (both * neither - only_a * only_b);
    let den = (both + only_a) * (only_a + neither) + (both + only_b) * (only_b + neither);
    (den != 0).then_some((num, den))
}

/// `true` when the two labelings induce the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    dense(a).0 == dense(b).0
}

/// `L₂[0,1]` distance by composite Simpson on `panels` (even) intervals.
pub fn l2_distance<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(f: &F, g: &G, panels: usize) -> f64 {
    let h = 1.0 / panels as f64;
    let sq = |t: f64| (f(t) - g(t)).powi(2);
    let mut s = sq(0.0) + sq(1.0);
    for i in 1..panels {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * sq(i as f64 * h);
    }
    (s * h / 3.0).sqrt()
}

pub fn hausdorff_bruteforce<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(a: &[F], b: &[G], panels: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for f in a {
        let near = b.iter().map(|g| l2_distance(f, g, panels)).fold(f64::INFINITY, f64::min);
        worst = worst.max(near);
    }
    for g in b {
        let near = a.iter().map(|f| l2_distance(f, g, panels)).fold(f64::INFINITY, f64::min);
        worst = worst.max(near);
    }
    worst
}
