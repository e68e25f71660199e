//! Correspondence analysis of non-negative contingency tables, projection
//! of supplementary profiles, trajectories of `COUNTRY:YEAR` rows, and
//! signed axis listings.
//!
//! Axis signs are fixed so that, on each axis, the column with the largest
//! absolute principal coordinate is positive (first such column on ties).

pub mod hca;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use hca::{cut_tree, hca_ward, ClusterTree, Merge};

/// Singular values at or below this are treated as zero. Standardized
/// residual matrices are scale free, so an absolute cutoff is adequate.
pub const SINGULAR_VALUE_TOL: f64 = 1e-10;

/// Default years of the trade specialisation analysis.
pub const TRADE_CA_YEARS: [i32; 9] = [1970, 1975, 1980, 1985, 1990, 1995, 2000, 2005, 2010];

#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    counts: DMatrix<f64>,
    dropped_rows: Vec<String>,
    dropped_cols: Vec<String>,
}

impl ContingencyTable {
    /// Drops all-zero rows and columns (recorded in `dropped_rows` /
    /// `dropped_cols`). Fails on negative or non-finite counts and on a zero
    /// grand total.
    pub fn new(row_ids: Vec<String>, col_ids: Vec<String>, counts: DMatrix<f64>) -> Result<Self> {
        if counts.nrows() != row_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: row_ids.len(),
                found: counts.nrows(),
            });
        }
        if counts.ncols() != col_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: col_ids.len(),
                found: counts.ncols(),
            });
        }
        if counts.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain(
                "contingency counts must be finite and non-negative".into(),
            ));
        }
        let keep_rows: Vec<usize> = (0..counts.nrows())
            .filter(|&i| counts.row(i).sum() > 0.0)
            .collect();
        let keep_cols: Vec<usize> = (0..counts.ncols())
            .filter(|&j| counts.column(j).sum() > 0.0)
            .collect();
        if keep_rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        let dropped_rows = (0..row_ids.len())
            .filter(|i| !keep_rows.contains(i))
            .map(|i| row_ids[i].clone())
            .collect();
        let dropped_cols = (0..col_ids.len())
            .filter(|j| !keep_cols.contains(j))
            .map(|j| col_ids[j].clone())
            .collect();
        let kept = DMatrix::from_fn(keep_rows.len(), keep_cols.len(), |i, j| {
            counts[(keep_rows[i], keep_cols[j])]
        });
        Ok(ContingencyTable {
            row_ids: keep_rows.iter().map(|&i| row_ids[i].clone()).collect(),
            col_ids: keep_cols.iter().map(|&j| col_ids[j].clone()).collect(),
            counts: kept,
            dropped_rows,
            dropped_cols,
        })
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn counts(&self) -> &DMatrix<f64> {
        &self.counts
    }

    pub fn dropped_rows(&self) -> &[String] {
        &self.dropped_rows
    }

    pub fn dropped_cols(&self) -> &[String] {
        &self.dropped_cols
    }

    pub fn grand_total(&self) -> f64 {
        self.counts.sum()
    }

    pub fn row_masses(&self) -> DVector<f64> {
        let n = self.grand_total();
        DVector::from_iterator(
            self.counts.nrows(),
            self.counts.row_iter().map(|r| r.sum() / n),
        )
    }

    pub fn col_masses(&self) -> DVector<f64> {
        let n = self.grand_total();
        DVector::from_iterator(
            self.counts.ncols(),
            self.counts.column_iter().map(|c| c.sum() / n),
        )
    }

    /// Largest admissible number of axes, `min(rows, cols) − 1`.
    pub fn max_axes(&self) -> usize {
        self.counts
            .nrows()
            .min(self.counts.ncols())
            .saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CAResult {
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub row_masses: DVector<f64>,
    pub col_masses: DVector<f64>,
    /// Non-zero singular values, descending (all of them, not only the
    /// retained axes).
    pub singular_values: Vec<f64>,
    /// Percentage of total inertia per entry of `singular_values`.
    pub inertia_shares: Vec<f64>,
    /// χ² / n.
    pub total_inertia: f64,
    /// Principal row coordinates, rows × `n_axes`.
    pub row_coords: DMatrix<f64>,
    /// Principal column coordinates, cols × `n_axes`.
    pub col_coords: DMatrix<f64>,
    pub n_axes: usize,
}

impl CAResult {
    /// Standard column coordinates (principal divided by the singular value).
    pub fn col_standard_coords(&self) -> DMatrix<f64> {
        let mut g = self.col_coords.clone();
        for (k, mut col) in g.column_iter_mut().enumerate() {
            col /= self.singular_values[k];
        }
        g
    }

    pub fn row_standard_coords(&self) -> DMatrix<f64> {
        let mut f = self.row_coords.clone();
        for (k, mut col) in f.column_iter_mut().enumerate() {
            col /= self.singular_values[k];
        }
        f
    }
}

/// Fits a correspondence analysis and keeps `n_axes` axes (fewer when the
/// table has lower rank). A table whose rank after centering is zero gives
/// a result with no axes and zero inertia.
pub fn ca_fit(table: &ContingencyTable, n_axes: usize) -> Result<CAResult> {
    let max_axes = table.max_axes();
    if max_axes > 0 && (n_axes == 0 || n_axes > max_axes) {
        return Err(Error::Domain(format!(
            "n_axes must lie in 1..={max_axes}, got {n_axes}"
        )));
    }
    let n = table.grand_total();
    let r = table.row_masses();
    let c = table.col_masses();
    let (nr, nc) = table.counts.shape();

    let s = DMatrix::from_fn(nr, nc, |i, j| {
        let p = table.counts[(i, j)] / n;
        (p - r[i] * c[j]) / (r[i] * c[j]).sqrt()
    });
    let total_inertia = s.iter().map(|v| v * v).sum::<f64>();

    let svd = s.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let nonzero: Vec<usize> = order
        .into_iter()
        .filter(|&k| svd.singular_values[k] > SINGULAR_VALUE_TOL)
        .take(max_axes)
        .collect();
    let singular_values: Vec<f64> = nonzero.iter().map(|&k| svd.singular_values[k]).collect();
    let explained: f64 = singular_values.iter().map(|s| s * s).sum();
    let inertia_shares = singular_values
        .iter()
        .map(|s| 100.0 * s * s / explained)
        .collect();

    let kept = n_axes.min(singular_values.len());
    let mut row_coords = DMatrix::zeros(nr, kept);
    let mut col_coords = DMatrix::zeros(nc, kept);
    for (axis, &k) in nonzero.iter().take(kept).enumerate() {
        let sigma = svd.singular_values[k];
        for i in 0..nr {
            row_coords[(i, axis)] = u[(i, k)] * sigma / r[i].sqrt();
        }
        for j in 0..nc {
            col_coords[(j, axis)] = v_t[(k, j)] * sigma / c[j].sqrt();
        }
        let mut lead = 0;
        for j in 1..nc {
            if col_coords[(j, axis)].abs() > col_coords[(lead, axis)].abs() {
                lead = j;
            }
        }
        if col_coords[(lead, axis)] < 0.0 {
            row_coords.column_mut(axis).neg_mut();
            col_coords.column_mut(axis).neg_mut();
        }
    }

    Ok(CAResult {
        row_ids: table.row_ids.clone(),
        col_ids: table.col_ids.clone(),
        row_masses: r,
        col_masses: c,
        singular_values,
        inertia_shares,
        total_inertia,
        row_coords,
        col_coords,
        n_axes: kept,
    })
}

/// Principal coordinates of supplementary row profiles (one profile per
/// row of `profiles`, in the fitted column order). The fit is unchanged.
pub fn project_supplementary(result: &CAResult, profiles: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if profiles.ncols() != result.col_ids.len() {
        return Err(Error::DimensionMismatch {
            expected: result.col_ids.len(),
            found: profiles.ncols(),
        });
    }
    let g = result.col_standard_coords();
    let mut out = DMatrix::zeros(profiles.nrows(), result.n_axes);
    for (i, row) in profiles.row_iter().enumerate() {
        let total = row.sum();
        if !(total > 0.0) || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "supplementary profile {i} must have a positive total"
            )));
        }
        let h = row / total;
        out.row_mut(i).copy_from(&(h * &g));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub year: i32,
    pub axis1: f64,
    /// Zero when the fit has fewer than two axes.
    pub axis2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub country: String,
    pub points: Vec<TrajectoryPoint>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectorySet {
    /// Sorted by country.
    pub trajectories: Vec<Trajectory>,
    /// Countries absent from some of the years seen in the table.
    pub warnings: Vec<String>,
}

/// Splits `COUNTRY:YEAR`.
pub fn parse_row_id(id: &str) -> Result<(String, i32)> {
    let (country, year) = id
        .split_once(':')
        .ok_or_else(|| Error::MalformedRowId(id.to_string()))?;
    let year = year
        .trim()
        .parse()
        .map_err(|_| Error::MalformedRowId(id.to_string()))?;
    if country.trim().is_empty() {
        return Err(Error::MalformedRowId(id.to_string()));
    }
    Ok((country.trim().to_string(), year))
}

/// Groups row points by country in year order. When `years` is given every
/// row year must belong to it.
pub fn build_trajectories(result: &CAResult, years: Option<&[i32]>) -> Result<TrajectorySet> {
    let mut by_country: BTreeMap<String, BTreeMap<i32, TrajectoryPoint>> = BTreeMap::new();
    let mut all_years = BTreeSet::new();
    for (i, id) in result.row_ids.iter().enumerate() {
        let (country, year) = parse_row_id(id)?;
        if let Some(allowed) = years {
            if !allowed.contains(&year) {
                return Err(Error::Domain(format!(
                    "row `{id}`: year {year} is not an analysis year"
                )));
            }
        }
        let coord = |k: usize| {
            if k < result.n_axes {
                result.row_coords[(i, k)]
            } else {
                0.0
            }
        };
        let point = TrajectoryPoint {
            year,
            axis1: coord(0),
            axis2: coord(1),
        };
        if by_country
            .entry(country)
            .or_default()
            .insert(year, point)
            .is_some()
        {
            return Err(Error::Domain(format!("duplicate row `{id}`")));
        }
        all_years.insert(year);
    }
    let mut set = TrajectorySet::default();
    for (country, points) in by_country {
        let missing: Vec<String> = all_years
            .iter()
            .filter(|y| !points.contains_key(y))
            .map(|y| y.to_string())
            .collect();
        if !missing.is_empty() {
            let msg = format!("{country}: no data for {}", missing.join(", "));
            log::warn!("{msg}");
            set.warnings.push(msg);
        }
        set.trajectories.push(Trajectory {
            country,
            points: points.into_values().collect(),
        });
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisReport {
    pub axis: usize,
    /// Rows sorted by decreasing coordinate.
    pub entries: Vec<(String, f64)>,
}

impl AxisReport {
    /// Rows with coordinate ≥ 0.
    pub fn positive(&self) -> impl Iterator<Item = &(String, f64)> {
        self.entries.iter().filter(|(_, v)| *v >= 0.0)
    }

    pub fn negative(&self) -> impl Iterator<Item = &(String, f64)> {
        self.entries.iter().filter(|(_, v)| *v < 0.0)
    }
}

/// Row coordinates on `axis` (0-based), sorted descending; ties keep row order.
pub fn axis_report(result: &CAResult, axis: usize) -> Result<AxisReport> {
    if axis >= result.n_axes {
        return Err(Error::AxisOutOfRange {
            axis,
            n_axes: result.n_axes,
        });
    }
    let mut entries: Vec<(String, f64)> = result
        .row_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), result.row_coords[(i, axis)]))
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(AxisReport { axis, entries })
}
