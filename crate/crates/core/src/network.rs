//! City- and country-level aggregation of capital-control links, and the
//! statistics derived from them: origin/destination shares, the
//! sector × city-size cross-tabulation, and mono/pluri specialisation.
//!
//! Link weight is the revenue of the controlled firm, attributed to the
//! parent city → subsidiary city direction. Size and specialisation
//! statistics count distinct destination cities.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;

use crate::ca::ContingencyTable;
use crate::domain::{CityTable, CountryCode, SectorScheme, SizeClass};
use crate::error::{Error, Result, ValidationError};
use crate::ingest::OwnershipLinkTable;

/// Relative tolerance of the revenue conservation check.
pub const CONSERVATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SectorFlow {
    pub revenue: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CityEdge {
    pub revenue: f64,
    pub count: usize,
    pub sectors: BTreeMap<String, SectorFlow>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CityGraph {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeMap<(String, String), CityEdge>,
    /// Sector groups in scheme order.
    pub sector_order: Vec<String>,
}

impl CityGraph {
    pub fn total_revenue(&self) -> f64 {
        self.edges.values().map(|e| e.revenue).sum()
    }

    /// Edges whose origin and destination are the same city.
    pub fn self_loops(&self) -> impl Iterator<Item = (&(String, String), &CityEdge)> {
        self.edges.iter().filter(|((o, d), _)| o == d)
    }

    /// Per destination city, sector → inbound revenue and link count.
    pub fn inbound_sectors(&self) -> BTreeMap<&str, BTreeMap<&str, SectorFlow>> {
        let mut out: BTreeMap<&str, BTreeMap<&str, SectorFlow>> = BTreeMap::new();
        for ((_, dest), edge) in &self.edges {
            let city = out.entry(dest.as_str()).or_default();
            for (sector, flow) in &edge.sectors {
                let acc = city.entry(sector.as_str()).or_default();
                acc.revenue += flow.revenue;
                acc.count += flow.count;
            }
        }
        out
    }
}

pub fn aggregate_to_cities(
    links: &OwnershipLinkTable,
    scheme: &SectorScheme,
    cities: &CityTable,
) -> Result<CityGraph> {
    let mut graph = CityGraph {
        sector_order: scheme.groups().to_vec(),
        ..CityGraph::default()
    };
    for l in &links.links {
        for city in [&l.parent_city, &l.subsidiary_city] {
            cities.resolve(city)?;
        }
        let group = scheme
            .group_of(&l.sector)
            .ok_or_else(|| ValidationError::UnmappedSector {
                line: None,
                code: l.sector.clone(),
            })?;
        graph.nodes.insert(l.parent_city.clone());
        graph.nodes.insert(l.subsidiary_city.clone());
        let edge = graph
            .edges
            .entry((l.parent_city.clone(), l.subsidiary_city.clone()))
            .or_default();
        edge.revenue += l.revenue;
        edge.count += 1;
        let s = edge.sectors.entry(group.to_string()).or_default();
        s.revenue += l.revenue;
        s.count += 1;
    }
    Ok(graph)
}

/// Origin × destination revenue between countries. Domestic revenue is kept
/// apart in `domestic_total`; the diagonal of `values` is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryMatrix {
    pub countries: Vec<CountryCode>,
    pub values: DMatrix<f64>,
    pub domestic_total: f64,
}

impl CountryMatrix {
    pub fn index_of(&self, code: CountryCode) -> Option<usize> {
        self.countries.iter().position(|&c| c == code)
    }

    pub fn get(&self, origin: CountryCode, dest: CountryCode) -> f64 {
        match (self.index_of(origin), self.index_of(dest)) {
            (Some(i), Some(j)) => self.values[(i, j)],
            _ => 0.0,
        }
    }

    pub fn grand_total(&self) -> f64 {
        self.values.sum()
    }
}

/// Countries are ordered by code.
pub fn aggregate_to_countries(graph: &CityGraph, cities: &CityTable) -> Result<CountryMatrix> {
    let mut country_of = BTreeMap::new();
    for node in &graph.nodes {
        country_of.insert(node.as_str(), cities.resolve(node)?.country);
    }
    let countries: Vec<CountryCode> = country_of
        .values()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let idx: BTreeMap<CountryCode, usize> =
        countries.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut values = DMatrix::zeros(countries.len(), countries.len());
    let mut domestic_total = 0.0;
    for ((o, d), edge) in &graph.edges {
        let (co, cd) = (country_of[o.as_str()], country_of[d.as_str()]);
        if co == cd {
            domestic_total += edge.revenue;
        } else {
            values[(idx[&co], idx[&cd])] += edge.revenue;
        }
    }
    Ok(CountryMatrix {
        countries,
        values,
        domestic_total,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shares {
    pub countries: Vec<CountryCode>,
    /// Percent of the grand total sent by each country.
    pub origin: Vec<f64>,
    /// Percent of the grand total received by each country.
    pub destination: Vec<f64>,
    pub origin_rounded: Vec<u32>,
    pub destination_rounded: Vec<u32>,
}

pub fn share_matrix(matrix: &CountryMatrix) -> Result<Shares> {
    let total = matrix.grand_total();
    if !(total > 0.0) {
        return Err(Error::Domain("country matrix has zero grand total".into()));
    }
    let origin: Vec<f64> = matrix
        .values
        .row_iter()
        .map(|r| 100.0 * r.sum() / total)
        .collect();
    let destination: Vec<f64> = matrix
        .values
        .column_iter()
        .map(|c| 100.0 * c.sum() / total)
        .collect();
    Ok(Shares {
        countries: matrix.countries.clone(),
        origin_rounded: largest_remainder(&origin, 100),
        destination_rounded: largest_remainder(&destination, 100),
        origin,
        destination,
    })
}

/// Rounds non-negative values to integers summing to `target`, giving the
/// missing units to the largest fractional parts (earlier index on ties).
/// The input should already sum to `target`.
pub fn largest_remainder(values: &[f64], target: u32) -> Vec<u32> {
    let mut out: Vec<u32> = values.iter().map(|v| v.max(0.0).floor() as u32).collect();
    let assigned: u32 = out.iter().sum();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (values[a] - values[a].floor(), values[b] - values[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(target.saturating_sub(assigned) as usize) {
        out[i] += 1;
    }
    out
}

fn percentages(counts: [usize; 3]) -> [f64; 3] {
    let total: usize = counts.iter().sum();
    counts.map(|c| {
        if total == 0 {
            0.0
        } else {
            100.0 * c as f64 / total as f64
        }
    })
}

fn rounded(pct: [f64; 3]) -> [u32; 3] {
    let r = largest_remainder(&pct, 100);
    [r[0], r[1], r[2]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeRow {
    pub label: String,
    /// Distinct cities per size class (small, medium, large).
    pub counts: [usize; 3],
    pub pct: [f64; 3],
    pub pct_rounded: [u32; 3],
}

impl SizeRow {
    fn new(label: impl Into<String>, counts: [usize; 3]) -> Self {
        let pct = percentages(counts);
        SizeRow {
            label: label.into(),
            counts,
            pct,
            pct_rounded: rounded(pct),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SectorSizeCrosstab {
    /// One row per sector with at least one destination city, scheme order.
    pub rows: Vec<SizeRow>,
}

impl SectorSizeCrosstab {
    pub fn row(&self, sector: &str) -> Option<&SizeRow> {
        self.rows.iter().find(|r| r.label == sector)
    }
}

pub fn sector_size_crosstab(graph: &CityGraph, cities: &CityTable) -> Result<SectorSizeCrosstab> {
    let mut per_sector: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for (city, sectors) in graph.inbound_sectors() {
        let size = cities.resolve(city)?.size_class()?;
        for (sector, flow) in sectors {
            if flow.count > 0 {
                per_sector.entry(sector).or_default()[size.index()] += 1;
            }
        }
    }
    let rows = ordered_sectors(graph, per_sector.keys().copied())
        .into_iter()
        .map(|s| {
            let counts = per_sector[s.as_str()];
            SizeRow::new(s, counts)
        })
        .collect();
    Ok(SectorSizeCrosstab { rows })
}

/// Scheme order first, then any other sector names alphabetically.
fn ordered_sectors<'a>(graph: &CityGraph, present: impl Iterator<Item = &'a str>) -> Vec<String> {
    let present: BTreeSet<&str> = present.collect();
    let mut out: Vec<String> = graph
        .sector_order
        .iter()
        .filter(|s| present.contains(s.as_str()))
        .cloned()
        .collect();
    for s in present {
        if !graph.sector_order.iter().any(|g| g == s) {
            out.push(s.to_string());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Specialisation {
    Mono,
    Pluri,
}

impl Specialisation {
    pub fn label(self) -> &'static str {
        match self {
            Specialisation::Mono => "MONO",
            Specialisation::Pluri => "PLURI",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CitySpecialisation {
    pub city: String,
    pub size: SizeClass,
    pub distinct_sectors: usize,
    pub class: Specialisation,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpecialisationReport {
    /// Destination cities, sorted by id.
    pub cities: Vec<CitySpecialisation>,
    /// MONO then PLURI, each distributed over size classes. Classes
    /// without any city are left out.
    pub rows: Vec<SizeRow>,
}

impl SpecialisationReport {
    pub fn row(&self, class: Specialisation) -> Option<&SizeRow> {
        self.rows.iter().find(|r| r.label == class.label())
    }
}

/// A sector counts toward a city's diversity when it holds at least
/// `min_share` (fraction in `[0, 1)`) of the city's inbound revenue; with
/// `min_share = 0` any controlled firm counts. A city always keeps its
/// dominant sector.
pub fn specialisation_classify(
    graph: &CityGraph,
    cities: &CityTable,
    min_share: f64,
) -> Result<SpecialisationReport> {
    if !(0.0..1.0).contains(&min_share) {
        return Err(Error::Domain(format!(
            "min_share must lie in [0, 1), got {min_share}"
        )));
    }
    let mut report = SpecialisationReport::default();
    let mut table: BTreeMap<Specialisation, [usize; 3]> = BTreeMap::new();
    for (city, sectors) in graph.inbound_sectors() {
        let present: Vec<&SectorFlow> = sectors.values().filter(|f| f.count > 0).collect();
        if present.is_empty() {
            continue;
        }
        let total: f64 = present.iter().map(|f| f.revenue).sum();
        let distinct = if min_share > 0.0 && total > 0.0 {
            present
                .iter()
                .filter(|f| f.revenue / total >= min_share)
                .count()
                .max(1)
        } else {
            present.len()
        };
        let class = if distinct == 1 {
            Specialisation::Mono
        } else {
            Specialisation::Pluri
        };
        let size = cities.resolve(city)?.size_class()?;
        table.entry(class).or_default()[size.index()] += 1;
        report.cities.push(CitySpecialisation {
            city: city.to_string(),
            size,
            distinct_sectors: distinct,
            class,
        });
    }
    report.rows = table
        .into_iter()
        .map(|(c, counts)| SizeRow::new(c.label(), counts))
        .collect();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    #[default]
    Revenue,
    Count,
}

/// Destination city × sector table (rows sorted by city id, columns in
/// scheme order) weighted by revenue or link count.
pub fn city_sector_table(graph: &CityGraph, mode: WeightMode) -> Result<ContingencyTable> {
    let inbound = graph.inbound_sectors();
    let rows: Vec<String> = inbound.keys().map(|c| c.to_string()).collect();
    let cols = ordered_sectors(
        graph,
        graph
            .sector_order
            .iter()
            .map(String::as_str)
            .chain(inbound.values().flat_map(|s| s.keys().copied())),
    );
    let counts = DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        inbound[rows[i].as_str()]
            .get(cols[j].as_str())
            .map_or(0.0, |f| match mode {
                WeightMode::Revenue => f.revenue,
                WeightMode::Count => f.count as f64,
            })
    });
    ContingencyTable::new(rows, cols, counts)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CONSERVATION_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Ingested revenue = city-graph revenue = country matrix + domestic revenue.
pub fn check_conservation(
    links: &OwnershipLinkTable,
    graph: &CityGraph,
    matrix: &CountryMatrix,
) -> Result<()> {
    let ingested = links.total_revenue();
    let city = graph.total_revenue();
    let country = matrix.grand_total() + matrix.domestic_total;
    if !close(ingested, city) {
        return Err(Error::Conservation(format!(
            "ingested revenue {ingested} differs from city graph revenue {city}"
        )));
    }
    if !close(city, country) {
        return Err(Error::Conservation(format!(
            "city graph revenue {city} differs from country matrix plus domestic revenue {country}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::CityRecord;
    use crate::ingest::OwnershipLinkRecord;

    fn city(id: &str, country: &str, pop: f64) -> CityRecord {
        CityRecord {
            id: id.into(),
            name: id.into(),
            country: country.parse().unwrap(),
            lat: 0.0,
            lon: 0.0,
            population: pop,
        }
    }

    fn cities() -> CityTable {
        CityTable::new(vec![
            city("BUD", "HU", 1_750_000.0),
            city("BTS", "SK", 420_000.0),
            city("GYR", "HU", 130_000.0),
            city("ZAT", "CZ", 19_000.0),
        ])
        .unwrap()
    }

    fn link(i: usize, from: &str, to: &str, sector: &str, revenue: f64) -> OwnershipLinkRecord {
        OwnershipLinkRecord {
            parent_firm: format!("P{i}"),
            parent_city: from.into(),
            subsidiary_firm: format!("S{i}"),
            subsidiary_city: to.into(),
            ownership_pct: 100.0,
            sector: sector.into(),
            revenue,
        }
    }

    fn fdi9() -> SectorScheme {
        SectorScheme::builtin("fdi9").unwrap()
    }

    fn table(links: Vec<OwnershipLinkRecord>) -> OwnershipLinkTable {
        OwnershipLinkTable {
            links,
            dropped_below_threshold: 0,
        }
    }

    #[test]
    fn city_edges_sum_revenue() {
        let t = table(vec![
            link(0, "BUD", "BTS", "IT", 1.0),
            link(1, "BUD", "BTS", "IT", 2.0),
            link(2, "BUD", "BTS", "CARS", 3.0),
        ]);
        let g = aggregate_to_cities(&t, &fdi9(), &cities()).unwrap();
        assert_eq!(g.edges.len(), 1);
        let e = &g.edges[&("BUD".into(), "BTS".into())];
        assert_eq!(e.revenue, 6.0);
        assert_eq!(e.count, 3);
        assert_eq!(e.sectors.len(), 2);
        assert_eq!(e.sectors.values().map(|s| s.revenue).sum::<f64>(), 6.0);
    }

    #[test]
    fn empty_links_empty_graph() {
        let g = aggregate_to_cities(&table(vec![]), &fdi9(), &cities()).unwrap();
        assert!(g.edges.is_empty() && g.nodes.is_empty());
    }

    #[test]
    fn unknown_city_and_sector() {
        let bad_city = table(vec![link(0, "BUD", "XXX", "IT", 1.0)]);
        assert!(aggregate_to_cities(&bad_city, &fdi9(), &cities()).is_err());
        let bad_sector = table(vec![link(0, "BUD", "BTS", "Plastics", 1.0)]);
        assert!(aggregate_to_cities(&bad_sector, &fdi9(), &cities()).is_err());
    }

    #[test]
    fn country_matrix_and_domestic() {
        let t = table(vec![
            link(0, "BUD", "BTS", "IT", 1676.0),
            link(1, "GYR", "BTS", "IT", 24.0),
            link(2, "BUD", "GYR", "IT", 50.0),
            link(3, "BUD", "BUD", "IT", 5.0),
        ]);
        let g = aggregate_to_cities(&t, &fdi9(), &cities()).unwrap();
        assert_eq!(g.self_loops().count(), 1);
        let m = aggregate_to_countries(&g, &cities()).unwrap();
        let hu = "HU".parse().unwrap();
        let sk = "SK".parse().unwrap();
        assert_eq!(m.get(hu, sk), 1700.0);
        assert_eq!(m.get(hu, hu), 0.0);
        assert_eq!(m.domestic_total, 55.0);
        check_conservation(&t, &g, &m).unwrap();
    }

    #[test]
    fn domestic_only_matrix_is_zero() {
        let t = table(vec![link(0, "BUD", "GYR", "IT", 9.0)]);
        let g = aggregate_to_cities(&t, &fdi9(), &cities()).unwrap();
        let m = aggregate_to_countries(&g, &cities()).unwrap();
        assert_eq!(m.grand_total(), 0.0);
        assert!(share_matrix(&m).is_err());
    }

    #[test]
    fn uniform_shares() {
        let m = CountryMatrix {
            countries: vec!["CZ".parse().unwrap(), "PL".parse().unwrap()],
            values: DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 3.0, 0.0]),
            domestic_total: 0.0,
        };
        let s = share_matrix(&m).unwrap();
        assert_eq!(s.origin, vec![50.0, 50.0]);
        assert_eq!(s.destination_rounded, vec![50, 50]);
    }

    #[test]
    fn largest_remainder_rounding() {
        assert_eq!(largest_remainder(&[100.0 / 3.0; 3], 100), vec![34, 33, 33]);
        assert_eq!(
            largest_remainder(&[14.2857, 14.2857, 71.4286], 100),
            vec![14, 14, 72]
        );
        assert_eq!(largest_remainder(&[0.0, 0.0, 100.0], 100), vec![0, 0, 100]);
    }

    #[test]
    fn crosstab_and_specialisation() {
        let t = table(vec![
            link(0, "BUD", "ZAT", "INDUSTRY", 1.0),
            link(1, "BUD", "BTS", "CARS", 2.0),
            link(2, "BUD", "BTS", "IT", 2.0),
            link(3, "GYR", "BTS", "MEDIA", 2.0),
        ]);
        let g = aggregate_to_cities(&t, &fdi9(), &cities()).unwrap();
        let x = sector_size_crosstab(&g, &cities()).unwrap();
        assert_eq!(x.row("INDUSTRY").unwrap().pct_rounded, [100, 0, 0]);
        assert_eq!(x.row("CARS").unwrap().pct_rounded, [0, 0, 100]);
        assert_eq!(
            x.rows.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(),
            ["CARS", "IT", "INDUSTRY", "MEDIA"]
        );
        let s = specialisation_classify(&g, &cities(), 0.0).unwrap();
        let bts = s.cities.iter().find(|c| c.city == "BTS").unwrap();
        assert_eq!(
            (bts.distinct_sectors, bts.class),
            (3, Specialisation::Pluri)
        );
        let zat = s.cities.iter().find(|c| c.city == "ZAT").unwrap();
        assert_eq!(zat.class, Specialisation::Mono);
        assert_eq!(
            s.row(Specialisation::Mono).unwrap().pct_rounded,
            [100, 0, 0]
        );
        assert_eq!(
            s.row(Specialisation::Pluri).unwrap().pct_rounded,
            [0, 0, 100]
        );
        // BTS: CARS 2, IT 2, MEDIA 2 -> each a third; a 0.4 share floor keeps only one
        let strict = specialisation_classify(&g, &cities(), 0.4).unwrap();
        assert!(strict
            .cities
            .iter()
            .all(|c| c.class == Specialisation::Mono));
        assert!(specialisation_classify(&g, &cities(), 1.0).is_err());
    }

    #[test]
    fn city_sector_table_modes() {
        let t = table(vec![
            link(0, "BUD", "BTS", "CARS", 100.0),
            link(1, "BUD", "BTS", "IT", 1.0),
            link(2, "BUD", "ZAT", "IT", 1.0),
            link(3, "GYR", "ZAT", "IT", 1.0),
            link(4, "BUD", "ZAT", "CARS", 1.0),
        ]);
        let g = aggregate_to_cities(&t, &fdi9(), &cities()).unwrap();
        let rev = city_sector_table(&g, WeightMode::Revenue).unwrap();
        assert_eq!(rev.row_ids(), ["BTS".to_string(), "ZAT".to_string()]);
        assert_eq!(rev.col_ids(), ["CARS".to_string(), "IT".to_string()]);
        assert_eq!(
            rev.counts(),
            &DMatrix::from_row_slice(2, 2, &[100.0, 1.0, 1.0, 2.0])
        );
        let cnt = city_sector_table(&g, WeightMode::Count).unwrap();
        assert_eq!(
            cnt.counts(),
            &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0])
        );
        assert_eq!(rev.dropped_cols().len(), 7);
    }
}
