//! Independent reference computations for integration tests. They share
//! nothing with the library search code beyond reading basis columns.
#![allow(dead_code)]

use condgreedy::bases::BasisTruncation;
use nalgebra::DMatrix;

pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Rows `0..rows` of the first `m` columns, as a dense matrix.
fn leading_block(b: &BasisTruncation, rows: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, m, |i, j| b.column(j)[i])
}

fn used_rows(b: &BasisTruncation, m: usize) -> usize {
    (0..b.ambient_dim())
        .rev()
        .find(|&i| (0..m).any(|j| b.column(j)[i] != 0.0))
        .map_or(0, |i| i + 1)
}

fn subsets_of(m: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << m).map(move |mask| (0..m).filter(|j| mask >> j & 1 == 1).collect())
}

fn ratio_with(b: &BasisTruncation, a: &[f64], set: &[usize], norm: fn(&[f64]) -> f64) -> f64 {
    let n = b.ambient_dim();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    for (j, &x) in a.iter().enumerate() {
        for i in 0..n {
            f[i] += x * b.column(j)[i];
            if set.contains(&j) {
                g[i] += x * b.column(j)[i];
            }
        }
    }
    norm(&g) / norm(&f)
}

/// Vertices of `{a ∈ R^m : ‖Xa‖₁ ≤ 1}`: each is, up to sign and scale, the
/// null vector of `m-1` independent rows of `X` (the generalized cross
/// product of those rows).
pub fn l1_section_vertices(b: &BasisTruncation, m: usize) -> Vec<Vec<f64>> {
    let rows = used_rows(b, m);
    let x = leading_block(b, rows, m);
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut pick: Vec<usize> = (0..m - 1).collect();
    loop {
        let sub = DMatrix::from_fn(m - 1, m, |i, j| x[(pick[i], j)]);
        let v: Vec<f64> = (0..m)
            .map(|k| {
                let minor = sub.clone().remove_column(k);
                let det = if m == 1 { 1.0 } else { minor.determinant() };
                if k % 2 == 0 { det } else { -det }
            })
            .collect();
        if v.iter().any(|c| c.abs() > 1e-9) {
            let f: Vec<f64> = (0..rows).map(|i| (0..m).map(|j| x[(i, j)] * v[j]).sum()).collect();
            let s = l1(&f);
            out.push(v.iter().map(|c| c / s).collect());
        }
        // next combination of m-1 rows out of `rows`
        let k = m - 1;
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if pick[i] < rows - k + i {
                pick[i] += 1;
                for t in i + 1..k {
                    pick[t] = pick[t - 1] + 1;
                }
                break;
            }
        }
        if k == 0 {
            return out;
        }
    }
}

/// Exact `L_m` for a basis whose first `m` vectors span an ℓ1 section.
pub fn exact_lm_l1(b: &BasisTruncation, m: usize) -> f64 {
    let verts = l1_section_vertices(b, m);
    let mut best = 0.0f64;
    for a in &verts {
        for set in subsets_of(m) {
            best = best.max(ratio_with(b, a, &set, l1));
        }
    }
    best
}

/// Exact `L_m` when the first `m` vectors live on the first `m` coordinates
/// of an ℓ∞ space with an invertible block: vertices are `X⁻¹ s`, `s ∈ {±1}^m`.
pub fn exact_lm_cube(b: &BasisTruncation, m: usize) -> f64 {
    let x = leading_block(b, m, m);
    let inv = x.try_inverse().expect("invertible leading block");
    let mut best = 0.0f64;
    for signs in 0u32..1 << m {
        let s = nalgebra::DVector::from_fn(m, |i, _| if signs >> i & 1 == 1 { 1.0 } else { -1.0 });
        let a: Vec<f64> = (&inv * s).iter().copied().collect();
        for set in subsets_of(m) {
            best = best.max(ratio_with(b, &a, &set, linf));
        }
    }
    best
}

/// `max ‖f - S_A f‖/‖f‖` over all sign vectors and every greedy set,
/// checking the greedy condition directly.
pub fn brute_quasi_greedy(b: &BasisTruncation, norm: fn(&[f64]) -> f64) -> f64 {
    let d = b.d();
    let mut best = 1.0f64;
    let mut code = vec![0u8; d];
    let total = 3usize.pow(d as u32);
    for idx in 1..total {
        let mut t = idx;
        for c in code.iter_mut() {
            *c = (t % 3) as u8;
            t /= 3;
        }
        let a: Vec<f64> = code.iter().map(|&c| [0.0, 1.0, -1.0][c as usize]).collect();
        for set in subsets_of(d) {
            let lo = set.iter().map(|&k| a[k].abs()).fold(f64::INFINITY, f64::min);
            let hi = (0..d).filter(|j| !set.contains(j)).map(|j| a[j].abs()).fold(0.0, f64::max);
            if !set.is_empty() && lo < hi {
                continue;
            }
            let complement: Vec<usize> = (0..d).filter(|j| !set.contains(j)).collect();
            best = best.max(ratio_with(b, &a, &complement, norm));
        }
    }
    best
}
