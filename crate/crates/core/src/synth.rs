//! Seeded synthetic fixtures standing in for the proprietary trade,
//! population and ownership databases.
//!
//! * Gravity: 8 countries, flows for every ordered pair drawn as Poisson
//!   counts around `exp(c + β log Mi + γ log Mj + δ log Dij)` with all means
//!   at least [`MIN_GRAVITY_MEAN`].
//! * Trade CA: 8 countries × 9 years × 10 export groups with drifting
//!   sector profiles.
//! * Ownership: a 2013 reference country matrix encoded as capital-to-
//!   capital links, plus two city-level fixtures built so that their
//!   size-class proportions match reference cross-tabulations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};

use crate::ca::TRADE_CA_YEARS;
use crate::domain::{CityRecord, CountryCode, TradeFlowRecord, FDI9_GROUPS, TRADE10_GROUPS};
use crate::error::{Error, Result};
use crate::ingest::{haversine_km, GdpTable, OwnershipLinkRecord};

pub const GRAVITY_YEAR: i32 = 2012;
/// (β, γ, δ) used to generate the gravity flows.
pub const GRAVITY_TRUTH: (f64, f64, f64) = (1.2, 1.1, -1.8);
pub const MIN_GRAVITY_MEAN: f64 = 50.0;

/// Capital id, name, latitude, longitude, population.
type Capital = (&'static str, &'static str, &'static str, f64, f64, f64);

pub const CAPITALS: [Capital; 8] = [
    ("CZ", "PRG", "Prague", 50.0755, 14.4378, 1_300_000.0),
    ("PL", "WAW", "Warsaw", 52.2297, 21.0122, 1_700_000.0),
    ("HU", "BUD", "Budapest", 47.4979, 19.0402, 1_750_000.0),
    ("SK", "BTS", "Bratislava", 48.1486, 17.1077, 420_000.0),
    ("HR", "ZAG", "Zagreb", 45.8150, 15.9819, 790_000.0),
    ("SI", "LJU", "Ljubljana", 46.0569, 14.5058, 280_000.0),
    ("BG", "SOF", "Sofia", 42.6977, 23.3219, 1_240_000.0),
    ("RO", "BUH", "Bucharest", 44.4268, 26.1025, 1_880_000.0),
];

/// Approximate 2012 GDP, constant-dollar millions, in `CAPITALS` order.
const BASE_GDP: [f64; 8] = [
    207_000.0, 500_000.0, 127_000.0, 93_000.0, 57_000.0, 46_000.0, 54_000.0, 171_000.0,
];

/// 2013 FDI revenue between CEE countries, euro millions, origin rows and
/// destination columns in `CAPITALS` order. Blank and "-" cells are 0.
/// The RO→BG cell is 253.8: with 953.8 none of the reference
/// share margins can be reproduced, with 253.8 all of them are.
pub const COUNTRY_MATRIX: [[f64; 8]; 8] = [
    [0.0, 52.0, 1.0, 383.0, 0.4, 0.1, 215.0, 203.0],
    [1148.0, 0.0, 9.0, 28.0, 9.0, 1.0, 0.4, 73.0],
    [30.0, 31.0, 0.0, 1676.0, 607.0, 60.0, 96.0, 235.0],
    [390.0, 194.0, 33.0, 0.0, 0.6, 10.0, 1.0, 0.1],
    [8.0, 8.0, 2.0, 28.0, 0.0, 128.0, 0.01, 0.1],
    [8.0, 2.0, 0.0, 0.3, 212.0, 0.0, 1.0, 23.0],
    [1.0, 0.0, 0.0, 0.0, 0.05, 0.0, 0.0, 3.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 253.8, 0.0],
];

/// Reference origin shares (%) in `CAPITALS` order.
pub const COUNTRY_ORIGIN_PCT: [f64; 8] = [14.0, 21.0, 44.0, 10.0, 3.0, 4.0, 0.0, 4.0];
/// Reference destination shares (%) in `CAPITALS` order.
pub const COUNTRY_DEST_PCT: [f64; 8] = [26.0, 5.0, 1.0, 34.0, 13.0, 3.0, 9.0, 9.0];

/// Distinct destination cities per FDI sector as (small, medium, large),
/// chosen so that the rounded row percentages equal the reference ones.
pub const SECTOR_SIZE_COUNTS: [(&str, [usize; 3]); 9] = [
    ("CARS", [1, 1, 5]),
    ("FINANCE", [1, 2, 8]),
    ("IT", [0, 1, 1]),
    ("INDUSTRY", [8, 3, 4]),
    ("MEDIA", [1, 2, 9]),
    ("REAL ESTATE", [0, 0, 2]),
    ("SALES", [7, 3, 4]),
    ("SERVICES", [2, 1, 4]),
    ("ENERGY", [1, 1, 1]),
];

/// Reference sector × size percentages.
pub const SECTOR_SIZE_PCT: [(&str, [f64; 3]); 9] = [
    ("CARS", [14.0, 14.0, 72.0]),
    ("FINANCE", [9.0, 18.0, 73.0]),
    ("IT", [0.0, 50.0, 50.0]),
    ("INDUSTRY", [53.0, 20.0, 27.0]),
    ("MEDIA", [8.0, 17.0, 75.0]),
    ("REAL ESTATE", [0.0, 0.0, 100.0]),
    ("SALES", [50.0, 21.0, 29.0]),
    ("SERVICES", [29.0, 14.0, 57.0]),
    ("ENERGY", [33.3, 33.3, 33.3]),
];

/// Mono- and pluri-specialised city counts per size class.
pub const MONO_COUNTS: [usize; 3] = [24, 9, 4];
pub const PLURI_COUNTS: [usize; 3] = [0, 3, 8];
pub const MONO_PCT: [f64; 3] = [65.0, 24.0, 11.0];
pub const PLURI_PCT: [f64; 3] = [0.0, 27.0, 73.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Fixtures {
    pub seed: u64,
    pub cities: Vec<CityRecord>,
    pub capitals: BTreeMap<CountryCode, String>,
    pub gdp: GdpTable,
    /// Gravity-year flows followed by the trade-CA flows.
    pub trade: Vec<TradeFlowRecord>,
    /// Country-matrix fixture, including links below the control threshold.
    pub ownership: Vec<OwnershipLinkRecord>,
    /// Sector × size fixture.
    pub ownership_sizes: Vec<OwnershipLinkRecord>,
    /// Mono/pluri specialisation fixture.
    pub ownership_diversity: Vec<OwnershipLinkRecord>,
}

fn code(s: &str) -> CountryCode {
    s.parse().expect("static country code")
}

fn stream(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn capital_cities() -> Vec<CityRecord> {
    CAPITALS
        .iter()
        .map(|&(c, id, name, lat, lon, pop)| CityRecord {
            id: id.into(),
            name: name.into(),
            country: code(c),
            lat,
            lon,
            population: pop,
        })
        .collect()
}

/// GDP of the gravity year with ±10% seeded jitter.
pub fn gravity_gdp(seed: u64) -> GdpTable {
    let mut rng = stream(seed, 1);
    let mut gdp = GdpTable::new();
    for (i, cap) in CAPITALS.iter().enumerate() {
        let jitter: f64 = rng.random_range(-0.1..0.1);
        gdp.entry(code(cap.0))
            .or_default()
            .insert(GRAVITY_YEAR, (BASE_GDP[i] * jitter.exp()).round());
    }
    gdp
}

/// Poisson means for every ordered capital pair, with the intercept set so
/// that the smallest mean equals [`MIN_GRAVITY_MEAN`].
pub fn gravity_means(gdp: &GdpTable) -> Vec<(CountryCode, CountryCode, f64)> {
    let (b, g, d) = GRAVITY_TRUTH;
    let mut raw = Vec::new();
    for (i, ci) in CAPITALS.iter().enumerate() {
        for (j, cj) in CAPITALS.iter().enumerate() {
            if i == j {
                continue;
            }
            let (oi, oj) = (code(ci.0), code(cj.0));
            let mi = gdp[&oi][&GRAVITY_YEAR];
            let mj = gdp[&oj][&GRAVITY_YEAR];
            let dij = haversine_km(ci.3, ci.4, cj.3, cj.4);
            raw.push((oi, oj, b * mi.ln() + g * mj.ln() + d * dij.ln()));
        }
    }
    let min = raw.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let intercept = MIN_GRAVITY_MEAN.ln() - min;
    raw.into_iter()
        .map(|(o, d, eta)| (o, d, (intercept + eta).exp()))
        .collect()
}

fn gravity_flows(seed: u64, gdp: &GdpTable) -> Vec<TradeFlowRecord> {
    let mut rng = stream(seed, 2);
    let mut out = Vec::new();
    for (o, d, mean) in gravity_means(gdp) {
        let draw: f64 = Poisson::new(mean).expect("positive mean").sample(&mut rng);
        // split across two product groups; the pair total is the Poisson draw
        let first = (draw * rng.random_range(0.3..0.7)).floor();
        for (sector, value) in [("Mechanics", first), ("Chemistry", draw - first)] {
            out.push(TradeFlowRecord {
                year: GRAVITY_YEAR,
                origin: o,
                dest: d,
                sector: sector.into(),
                value,
            });
        }
    }
    out
}

/// Exports per (year, country, group), each routed to the next capital.
fn trade_ca_flows(seed: u64) -> Vec<TradeFlowRecord> {
    let mut rng = stream(seed, 3);
    let shape = Gamma::new(2.0, 1.0).expect("gamma");
    let drift = Normal::new(0.0, 1.2).expect("normal");
    let mut out = Vec::new();
    for (ci, cap) in CAPITALS.iter().enumerate() {
        let base: Vec<f64> = (0..TRADE10_GROUPS.len())
            .map(|_| shape.sample(&mut rng))
            .collect();
        let trend: Vec<f64> = (0..TRADE10_GROUPS.len())
            .map(|_| drift.sample(&mut rng))
            .collect();
        let size = rng.random_range(500.0..5000.0);
        let dest = code(CAPITALS[(ci + 1) % CAPITALS.len()].0);
        for (t, &year) in TRADE_CA_YEARS.iter().enumerate() {
            let phase = t as f64 / (TRADE_CA_YEARS.len() - 1) as f64;
            let weights: Vec<f64> = base
                .iter()
                .zip(&trend)
                .map(|(b, d)| b * (d * phase).exp())
                .collect();
            let total: f64 = weights.iter().sum();
            let volume = size * (1.0 + phase);
            for (s, w) in weights.iter().enumerate() {
                let mean = (volume * w / total).max(1.0);
                let value: f64 = Poisson::new(mean).expect("positive mean").sample(&mut rng);
                out.push(TradeFlowRecord {
                    year,
                    origin: code(cap.0),
                    dest,
                    sector: TRADE10_GROUPS[s].into(),
                    value: value.max(1.0),
                });
            }
        }
    }
    out
}

fn link(
    prefix: &str,
    n: usize,
    parent_city: &str,
    sub_city: &str,
    pct: f64,
    sector: &str,
    revenue: f64,
) -> OwnershipLinkRecord {
    OwnershipLinkRecord {
        parent_firm: format!("{prefix}-P{n:04}"),
        parent_city: parent_city.into(),
        subsidiary_firm: format!("{prefix}-S{n:04}"),
        subsidiary_city: sub_city.into(),
        ownership_pct: pct,
        sector: sector.into(),
        revenue,
    }
}

fn control_pct(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        100.0
    } else {
        (rng.random_range(50.0..100.0f64) * 10.0).round() / 10.0
    }
}

fn country_links(seed: u64) -> Vec<OwnershipLinkRecord> {
    let mut rng = stream(seed, 4);
    let mut out = Vec::new();
    for (i, row) in COUNTRY_MATRIX.iter().enumerate() {
        for (j, &value) in row.iter().enumerate() {
            if value == 0.0 {
                continue;
            }
            let sector = FDI9_GROUPS[rng.random_range(0..FDI9_GROUPS.len())];
            let pct = control_pct(&mut rng);
            out.push(link(
                "CM",
                out.len(),
                CAPITALS[i].1,
                CAPITALS[j].1,
                pct,
                sector,
                value,
            ));
        }
        // a minority stake that the control filter must drop
        let j = (i + 3) % CAPITALS.len();
        let pct = (rng.random_range(10.0..49.9f64) * 10.0).round() / 10.0;
        let revenue = rng.random_range(100.0..2000.0f64).round();
        out.push(link(
            "CM",
            out.len(),
            CAPITALS[i].1,
            CAPITALS[j].1,
            pct,
            "FINANCE",
            revenue,
        ));
    }
    out
}

fn synthetic_city(rng: &mut ChaCha8Rng, id: String, idx: usize, class: usize) -> CityRecord {
    let (lo, hi): (f64, f64) = match class {
        0 => (5_000.0, 49_999.0),
        1 => (50_000.0, 250_000.0),
        _ => (250_001.0, 2_000_000.0),
    };
    let cap = &CAPITALS[idx % CAPITALS.len()];
    CityRecord {
        name: format!("Synthetic {id}"),
        id,
        country: code(cap.0),
        lat: cap.3 + rng.random_range(-1.5..1.5),
        lon: cap.4 + rng.random_range(-1.5..1.5),
        population: rng.random_range(lo..=hi).round(),
    }
}

const CLASS_TAG: [&str; 3] = ["S", "M", "L"];

fn sizes_fixture(seed: u64) -> (Vec<CityRecord>, Vec<OwnershipLinkRecord>) {
    let mut rng = stream(seed, 5);
    let mut pools: [Vec<CityRecord>; 3] = Default::default();
    for (class, pool) in pools.iter_mut().enumerate() {
        let needed = SECTOR_SIZE_COUNTS
            .iter()
            .map(|(_, c)| c[class])
            .max()
            .unwrap_or(0);
        for k in 0..needed {
            let id = format!("SZ-{}{:02}", CLASS_TAG[class], k + 1);
            pool.push(synthetic_city(&mut rng, id, class * 7 + k, class));
        }
    }
    let mut links = Vec::new();
    for (s, (sector, counts)) in SECTOR_SIZE_COUNTS.iter().enumerate() {
        for (class, &n) in counts.iter().enumerate() {
            for k in 0..n {
                // rotate so different sectors land in different cities
                let pool = &pools[class];
                let city = &pool[(k + s) % pool.len()];
                for _ in 0..rng.random_range(1..=2) {
                    let parent = CAPITALS[rng.random_range(0..CAPITALS.len())].1;
                    let revenue = (rng.random_range(0.5..500.0f64) * 10.0).round() / 10.0;
                    let pct = control_pct(&mut rng);
                    links.push(link(
                        "SZ",
                        links.len(),
                        parent,
                        &city.id,
                        pct,
                        sector,
                        revenue,
                    ));
                }
            }
        }
    }
    (pools.into_iter().flatten().collect(), links)
}

fn diversity_fixture(seed: u64) -> (Vec<CityRecord>, Vec<OwnershipLinkRecord>) {
    let mut rng = stream(seed, 6);
    let mut cities = Vec::new();
    let mut links = Vec::new();
    for (tag, counts, pluri) in [("MONO", MONO_COUNTS, false), ("PLURI", PLURI_COUNTS, true)] {
        for (class, &n) in counts.iter().enumerate() {
            for k in 0..n {
                let id = format!("DV-{tag}-{}{:02}", CLASS_TAG[class], k + 1);
                let city = synthetic_city(&mut rng, id, cities.len(), class);
                let sectors: Vec<&str> = if pluri {
                    let first = rng.random_range(0..FDI9_GROUPS.len());
                    let extra = rng.random_range(1..=3);
                    (0..=extra)
                        .map(|e| FDI9_GROUPS[(first + e * 2) % FDI9_GROUPS.len()])
                        .collect()
                } else {
                    let s = FDI9_GROUPS[rng.random_range(0..FDI9_GROUPS.len())];
                    vec![s; rng.random_range(1..=3)]
                };
                for sector in sectors {
                    let parent = CAPITALS[rng.random_range(0..CAPITALS.len())].1;
                    let revenue = (rng.random_range(0.5..800.0f64) * 10.0).round() / 10.0;
                    let pct = control_pct(&mut rng);
                    links.push(link(
                        "DV",
                        links.len(),
                        parent,
                        &city.id,
                        pct,
                        sector,
                        revenue,
                    ));
                }
                cities.push(city);
            }
        }
    }
    (cities, links)
}

pub fn generate(seed: u64) -> Fixtures {
    let gdp = gravity_gdp(seed);
    let mut trade = gravity_flows(seed, &gdp);
    trade.extend(trade_ca_flows(seed));
    let (size_cities, ownership_sizes) = sizes_fixture(seed);
    let (diversity_cities, ownership_diversity) = diversity_fixture(seed);
    let mut cities = capital_cities();
    cities.extend(size_cities);
    cities.extend(diversity_cities);
    let capitals = CAPITALS
        .iter()
        .map(|c| (code(c.0), c.1.to_string()))
        .collect();
    Fixtures {
        seed,
        cities,
        capitals,
        gdp,
        trade,
        ownership: country_links(seed),
        ownership_sizes,
        ownership_diversity,
    }
}

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let io = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ownership_rows(links: &[OwnershipLinkRecord]) -> impl Iterator<Item = Vec<String>> + '_ {
    links.iter().map(|l| {
        vec![
            l.parent_firm.clone(),
            l.parent_city.clone(),
            l.subsidiary_firm.clone(),
            l.subsidiary_city.clone(),
            l.ownership_pct.to_string(),
            l.sector.clone(),
            l.revenue.to_string(),
        ]
    })
}

/// Writes the fixture CSVs into `dir` and returns their paths.
pub fn write_fixtures(dir: &Path, fx: &Fixtures) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let mut emit = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
        let path = dir.join(name);
        write_csv(&path, header, rows)?;
        written.push(path);
        Ok(())
    };
    emit(
        "cities.csv",
        &crate::ingest::CITY_COLUMNS,
        fx.cities
            .iter()
            .map(|c| {
                vec![
                    c.id.clone(),
                    c.name.clone(),
                    c.country.to_string(),
                    c.lat.to_string(),
                    c.lon.to_string(),
                    c.population.to_string(),
                ]
            })
            .collect(),
    )?;
    emit(
        "capitals.csv",
        &crate::ingest::CAPITAL_COLUMNS,
        fx.capitals
            .iter()
            .map(|(c, id)| vec![c.to_string(), id.clone()])
            .collect(),
    )?;
    emit(
        "gdp.csv",
        &crate::ingest::GDP_COLUMNS,
        fx.gdp
            .iter()
            .flat_map(|(c, s)| {
                s.iter()
                    .map(move |(y, v)| vec![c.to_string(), y.to_string(), v.to_string()])
            })
            .collect(),
    )?;
    emit(
        "trade_flows.csv",
        &crate::ingest::TRADE_COLUMNS,
        fx.trade
            .iter()
            .map(|r| {
                vec![
                    r.year.to_string(),
                    r.origin.to_string(),
                    r.dest.to_string(),
                    r.sector.clone(),
                    r.value.to_string(),
                ]
            })
            .collect(),
    )?;
    emit(
        "ownership.csv",
        &crate::ingest::OWNERSHIP_COLUMNS,
        ownership_rows(&fx.ownership).collect(),
    )?;
    emit(
        "ownership_sizes.csv",
        &crate::ingest::OWNERSHIP_COLUMNS,
        ownership_rows(&fx.ownership_sizes).collect(),
    )?;
    emit(
        "ownership_diversity.csv",
        &crate::ingest::OWNERSHIP_COLUMNS,
        ownership_rows(&fx.ownership_diversity).collect(),
    )?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seed_deterministic() {
        assert_eq!(generate(7), generate(7));
        assert_ne!(generate(7).trade, generate(8).trade);
    }

    #[test]
    fn gravity_means_respect_floor() {
        let means = gravity_means(&gravity_gdp(7));
        assert_eq!(means.len(), 56);
        let min = means.iter().map(|m| m.2).fold(f64::INFINITY, f64::min);
        assert!((min - MIN_GRAVITY_MEAN).abs() < 1e-9);
    }

    #[test]
    fn sector_counts_round_to_reference_percentages() {
        for ((s, counts), (s2, pct)) in SECTOR_SIZE_COUNTS.iter().zip(SECTOR_SIZE_PCT.iter()) {
            assert_eq!(s, s2);
            let total: usize = counts.iter().sum();
            for k in 0..3 {
                let p = 100.0 * counts[k] as f64 / total as f64;
                assert!((p - pct[k]).abs() <= 1.0, "{s}: {p} vs {}", pct[k]);
            }
        }
    }

    #[test]
    fn city_ids_are_unique() {
        let fx = generate(3);
        let mut ids: Vec<&str> = fx.cities.iter().map(|c| c.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), fx.cities.len());
    }
}
