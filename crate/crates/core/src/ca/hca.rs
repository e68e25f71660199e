//! Agglomerative clustering with the Ward criterion.
//!
//! Dissimilarities are Ward merge costs, `w_a·w_b / (w_a + w_b) · ‖c_a − c_b‖²`,
//! i.e. the increase in weighted within-cluster sum of squares, updated with
//! the Lance-Williams recurrence. Leaves are nodes `0..n`; the cluster formed
//! at step `s` is node `n + s`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Smaller node id of the merged pair.
    pub node_a: usize,
    pub node_b: usize,
    /// Ward cost of the merge.
    pub height: f64,
    /// Leaves in the new cluster.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTree {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

/// Clusters the rows of `points`. `weights` default to 1 and must be
/// positive. Equal costs are resolved by the smallest `(node_a, node_b)`.
pub fn hca_ward(points: &DMatrix<f64>, weights: Option<&[f64]>) -> Result<ClusterTree> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::TooFewObservations {
            found: n,
            needed: 2,
        });
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("point coordinates must be finite".into()));
    }
    let mut w: Vec<f64> = match weights {
        Some(ws) if ws.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: ws.len(),
            })
        }
        Some(ws) => ws.to_vec(),
        None => vec![1.0; n],
    };
    if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain("cluster weights must be positive".into()));
    }

    let mut dist = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let sq = (points.row(i) - points.row(j)).norm_squared();
            let d = w[i] * w[j] / (w[i] + w[j]) * sq;
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }

    // slot i holds the cluster currently stored at leaf position i
    let mut node = (0..n).collect::<Vec<usize>>();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for s in 0..n {
            if !active[s] {
                continue;
            }
            for t in s + 1..n {
                if !active[t] {
                    continue;
                }
                let d = dist[(s, t)];
                let key = (node[s].min(node[t]), node[s].max(node[t]));
                let better = match best {
                    None => true,
                    Some((bd, bkey, _, _)) => d < bd || (d == bd && key < bkey),
                };
                if better {
                    best = Some((d, key, s, t));
                }
            }
        }
        let (height, (node_a, node_b), s, t) = best.expect("at least two active clusters");

        let (ws, wt) = (w[s], w[t]);
        for x in 0..n {
            if !active[x] || x == s || x == t {
                continue;
            }
            let wx = w[x];
            let d = ((ws + wx) * dist[(s, x)] + (wt + wx) * dist[(t, x)] - wx * height)
                / (ws + wt + wx);
            let d = d.max(0.0);
            dist[(s, x)] = d;
            dist[(x, s)] = d;
        }
        active[t] = false;
        w[s] = ws + wt;
        size[s] += size[t];
        node[s] = n + step;
        merges.push(Merge {
            node_a,
            node_b,
            height: height.max(0.0),
            size: size[s],
        });
    }
    Ok(ClusterTree {
        n_leaves: n,
        merges,
    })
}

/// Cluster label per leaf after undoing the last `k − 1` merges. Labels are
/// numbered in order of each cluster's smallest leaf.
pub fn cut_tree(tree: &ClusterTree, k: usize) -> Result<Vec<usize>> {
    let n = tree.n_leaves;
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "cluster count must lie in 1..={n}, got {k}"
        )));
    }
    let mut parent: Vec<usize> = (0..n + tree.merges.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (step, m) in tree.merges.iter().take(n - k).enumerate() {
        let new = n + step;
        let a = find(&mut parent, m.node_a);
        let b = find(&mut parent, m.node_b);
        parent[a] = new;
        parent[b] = new;
    }
    let mut labels = vec![0; n];
    let mut seen: Vec<usize> = Vec::new();
    for (leaf, label) in labels.iter_mut().enumerate() {
        let root = find(&mut parent, leaf);
        *label = match seen.iter().position(|&r| r == root) {
            Some(i) => i,
            None => {
                seen.push(root);
                seen.len() - 1
            }
        };
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_merge_at_zero() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let t = hca_ward(&p, None).unwrap();
        assert_eq!(
            t.merges,
            vec![Merge {
                node_a: 0,
                node_b: 1,
                height: 0.0,
                size: 2
            }]
        );
    }

    #[test]
    fn nearest_pair_merges_first() {
        let p = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 10.0]);
        let t = hca_ward(&p, None).unwrap();
        assert_eq!((t.merges[0].node_a, t.merges[0].node_b), (0, 1));
        assert_eq!(t.merges[0].height, 0.5);
        assert_eq!((t.merges[1].node_a, t.merges[1].node_b), (2, 3));
        // {0,1} centroid 0.5, cost 2·1/3 · 9.5²
        assert!((t.merges[1].height - 2.0 / 3.0 * 9.5 * 9.5).abs() < 1e-12);
        assert_eq!(t.merges[1].size, 3);
    }

    #[test]
    fn ties_break_on_smallest_pair() {
        let p = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        let t = hca_ward(&p, None).unwrap();
        assert_eq!((t.merges[0].node_a, t.merges[0].node_b), (0, 1));
        assert_eq!((t.merges[1].node_a, t.merges[1].node_b), (2, 3));
    }

    #[test]
    fn errors() {
        assert!(hca_ward(&DMatrix::zeros(1, 2), None).is_err());
        let p = DMatrix::from_column_slice(2, 1, &[0.0, f64::NAN]);
        assert!(hca_ward(&p, None).is_err());
        let p = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert!(hca_ward(&p, Some(&[1.0])).is_err());
        assert!(hca_ward(&p, Some(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn cut_extremes() {
        let p = DMatrix::from_column_slice(4, 1, &[0.0, 5.0, 1.0, 6.0]);
        let t = hca_ward(&p, None).unwrap();
        assert_eq!(cut_tree(&t, 4).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(cut_tree(&t, 1).unwrap(), vec![0, 0, 0, 0]);
        assert_eq!(cut_tree(&t, 2).unwrap(), vec![0, 1, 0, 1]);
        assert!(cut_tree(&t, 0).is_err());
        assert!(cut_tree(&t, 5).is_err());
    }
}
