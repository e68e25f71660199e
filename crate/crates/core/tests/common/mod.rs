//! Reference implementations used as test oracles. They share no code with
//! the library: plain `Vec` arithmetic, textbook formulas, brute force.
#![allow(dead_code)]

use std::collections::BTreeMap;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
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
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

pub fn poisson_loglik(x: &[Vec<f64>], y: &[f64], beta: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(row, &yi)| {
            let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            yi * eta - eta.exp()
        })
        .sum()
}

/// Newton's method on the Poisson log-likelihood with analytic gradient
/// `Xᵀ(y − μ)` and Hessian `−Xᵀ diag(μ) X`, halving steps that lower it.
pub fn newton_poisson(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut beta = vec![0.0; p];
    beta[0] = (y.iter().sum::<f64>() / y.len() as f64).ln();
    for _ in 0..500 {
        let mu: Vec<f64> = x
            .iter()
            .map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>().exp())
            .collect();
        let mut grad = vec![0.0; p];
        let mut hess = vec![vec![0.0; p]; p];
        for (i, r) in x.iter().enumerate() {
            for a in 0..p {
                grad[a] += r[a] * (y[i] - mu[i]);
                for b in 0..p {
                    hess[a][b] += r[a] * r[b] * mu[i];
                }
            }
        }
        let step = solve(hess, grad);
        let base = poisson_loglik(x, y, &beta);
        let mut t = 1.0;
        let mut next: Vec<f64>;
        loop {
            next = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            if poisson_loglik(x, y, &next) >= base || t < 1e-12 {
                break;
            }
            t *= 0.5;
        }
        let size = step.iter().map(|s| (t * s).abs()).fold(0.0, f64::max);
        beta = next;
        if size < 1e-14 {
            break;
        }
    }
    beta
}

/// Pearson χ² of independence divided by the grand total.
pub fn chi_square_inertia(t: &[Vec<f64>]) -> f64 {
    let n: f64 = t.iter().flatten().sum();
    let rows: Vec<f64> = t.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..t[0].len())
        .map(|j| t.iter().map(|r| r[j]).sum())
        .collect();
    let mut chi2 = 0.0;
    for (i, r) in t.iter().enumerate() {
        for (j, &o) in r.iter().enumerate() {
            let e = rows[i] * cols[j] / n;
            if e > 0.0 {
                chi2 += (o - e) * (o - e) / e;
            }
        }
    }
    chi2 / n
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleMerge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// Ward clustering recomputing every pairwise merge cost from the member
/// points at each step. Node ids: leaves `0..n`, step `s` creates `n + s`.
pub fn ward_exhaustive(points: &[Vec<f64>], weights: &[f64]) -> Vec<OracleMerge> {
    let n = points.len();
    let dim = points[0].len();
    let mut clusters: BTreeMap<usize, Vec<usize>> = (0..n).map(|i| (i, vec![i])).collect();
    let centroid = |m: &[usize]| -> (f64, Vec<f64>) {
        let w: f64 = m.iter().map(|&i| weights[i]).sum();
        let c = (0..dim)
            .map(|d| m.iter().map(|&i| weights[i] * points[i][d]).sum::<f64>() / w)
            .collect();
        (w, c)
    };
    let mut out = Vec::new();
    for step in 0..n - 1 {
        let ids: Vec<usize> = clusters.keys().copied().collect();
        let mut best: Option<(f64, usize, usize)> = None;
        for (x, &a) in ids.iter().enumerate() {
            for &b in &ids[x + 1..] {
                let (wa, ca) = centroid(&clusters[&a]);
                let (wb, cb) = centroid(&clusters[&b]);
                let sq: f64 = ca.iter().zip(&cb).map(|(p, q)| (p - q) * (p - q)).sum();
                let cost = wa * wb / (wa + wb) * sq;
                if best.is_none_or(|(c, _, _)| cost < c) {
                    best = Some((cost, a, b));
                }
            }
        }
        let (height, a, b) = best.unwrap();
        let mut members = clusters.remove(&a).unwrap();
        members.extend(clusters.remove(&b).unwrap());
        out.push(OracleMerge {
            a,
            b,
            height,
            size: members.len(),
        });
        clusters.insert(n + step, members);
    }
    out
}

/// Great-circle distance from the chord between unit vectors.
pub fn chord_distance_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let v = |lat: f64, lon: f64| {
        let (la, lo) = (lat.to_radians(), lon.to_radians());
        [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
    };
    let (a, b) = (v(lat1, lon1), v(lat2, lon2));
    let chord = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    2.0 * 6371.0088 * (chord / 2.0).min(1.0).asin()
}
