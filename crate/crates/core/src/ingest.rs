//! CSV loaders for trade flows, cities, GDP, capitals, ownership links and
//! sector schemes, plus inter-capital distances.
//!
//! All inputs are UTF-8, comma-delimited, with a mandatory header row and
//! `.` as decimal separator. Columns are located by header name, so extra
//! columns and any column order are accepted.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use csv::StringRecord;

use crate::domain::{
    CityRecord, CityTable, CountryCode, CountryRecord, SectorScheme, TradeFlowRecord,
    TradeFlowTable,
};
use crate::error::{Error, Result, ValidationError};

/// Mean Earth radius (IUGG), km.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

pub const DEFAULT_MIN_CONTROL_PCT: f64 = 50.0;

pub const TRADE_COLUMNS: [&str; 5] = ["year", "origin", "dest", "sector", "value"];
pub const CITY_COLUMNS: [&str; 6] = ["city_id", "name", "country", "lat", "lon", "population"];
pub const OWNERSHIP_COLUMNS: [&str; 7] = [
    "parent_firm",
    "parent_city",
    "subsidiary_firm",
    "subsidiary_city",
    "ownership_pct",
    "sector",
    "revenue",
];
pub const GDP_COLUMNS: [&str; 3] = ["country", "year", "gdp"];
pub const SCHEME_COLUMNS: [&str; 2] = ["raw_code", "group"];
pub const CAPITAL_COLUMNS: [&str; 2] = ["country", "city_id"];

/// GDP in constant-dollar millions per country and year.
pub type GdpTable = BTreeMap<CountryCode, BTreeMap<i32, f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct OwnershipLinkRecord {
    pub parent_firm: String,
    pub parent_city: String,
    pub subsidiary_firm: String,
    pub subsidiary_city: String,
    pub ownership_pct: f64,
    /// Raw sector code, mapped to a group during aggregation.
    pub sector: String,
    /// Revenue of the subsidiary, euro millions.
    pub revenue: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OwnershipLinkTable {
    pub links: Vec<OwnershipLinkRecord>,
    /// Rows below the control threshold.
    pub dropped_below_threshold: usize,
}

impl OwnershipLinkTable {
    pub fn total_revenue(&self) -> f64 {
        self.links.iter().map(|l| l.revenue).sum()
    }

    pub fn check_cities(&self, cities: &CityTable) -> Result<()> {
        for l in &self.links {
            cities.resolve(&l.parent_city)?;
            cities.resolve(&l.subsidiary_city)?;
        }
        Ok(())
    }
}

/// Symmetric country-pair distances in km. Self-distances are not stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistanceTable {
    km: BTreeMap<(CountryCode, CountryCode), f64>,
}

impl DistanceTable {
    fn key(a: CountryCode, b: CountryCode) -> (CountryCode, CountryCode) {
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Rejects self pairs and non-positive distances.
    pub fn insert(&mut self, a: CountryCode, b: CountryCode, km: f64) -> Result<()> {
        if a == b {
            return Err(Error::Domain(format!("self-distance for {a}")));
        }
        if !(km > 0.0) || !km.is_finite() {
            return Err(ValidationError::ZeroDistance {
                a: a.to_string(),
                b: b.to_string(),
            }
            .into());
        }
        self.km.insert(Self::key(a, b), km);
        Ok(())
    }

    pub fn get(&self, a: CountryCode, b: CountryCode) -> Option<f64> {
        if a == b {
            return None;
        }
        self.km.get(&Self::key(a, b)).copied()
    }

    /// Unordered pairs with `a < b`.
    pub fn iter(&self) -> impl Iterator<Item = (CountryCode, CountryCode, f64)> + '_ {
        self.km.iter().map(|(&(a, b), &d)| (a, b, d))
    }

    pub fn len(&self) -> usize {
        self.km.len()
    }

    pub fn is_empty(&self) -> bool {
        self.km.is_empty()
    }

    /// Every distance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> DistanceTable {
        DistanceTable {
            km: self.km.iter().map(|(k, d)| (*k, d * factor)).collect(),
        }
    }
}

/// Great-circle distance between two points given in degrees.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Haversine distance between the capitals of every unordered country pair.
pub fn capital_distances(countries: &[CountryRecord], cities: &CityTable) -> Result<DistanceTable> {
    let mut located = Vec::with_capacity(countries.len());
    for c in countries {
        let city =
            cities
                .get(&c.capital_city_id)
                .ok_or_else(|| ValidationError::UnresolvedCapital {
                    country: c.code.to_string(),
                    city: c.capital_city_id.clone(),
                })?;
        located.push((c.code, city.lat, city.lon));
    }
    let mut table = DistanceTable::default();
    for (i, &(a, lat_a, lon_a)) in located.iter().enumerate() {
        for &(b, lat_b, lon_b) in &located[i + 1..] {
            table.insert(a, b, haversine_km(lat_a, lon_a, lat_b, lon_b))?;
        }
    }
    Ok(table)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Attaches the file name to errors raised by a `read_*` function.
fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    let file = path.display().to_string();
    r.map_err(|e| match e {
        Error::Validation(error) => Error::Invalid { file, error },
        Error::Csv { source, .. } => Error::Csv { file, source },
        other => other,
    })
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn csv_err(source: csv::Error) -> Error {
    Error::Csv {
        file: "<input>".into(),
        source,
    }
}

/// Column positions for the requested names.
fn locate<const N: usize>(headers: &StringRecord, names: [&str; N]) -> Result<[usize; N]> {
    let mut out = [0; N];
    for (slot, name) in out.iter_mut().zip(names) {
        *slot = headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| ValidationError::MissingColumn {
                column: name.to_string(),
            })?;
    }
    Ok(out)
}

struct Row<'a> {
    record: &'a StringRecord,
    line: usize,
}

impl<'a> Row<'a> {
    fn new(record: &'a StringRecord) -> Self {
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        Row { record, line }
    }

    fn str(&self, idx: usize) -> &'a str {
        self.record.get(idx).unwrap_or("")
    }

    fn f64(&self, idx: usize, column: &str) -> Result<f64> {
        let raw = self.str(idx);
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                ValidationError::NotNumeric {
                    line: self.line,
                    column: column.to_string(),
                    value: raw.to_string(),
                }
                .into()
            })
    }

    fn non_negative(&self, idx: usize, column: &str) -> Result<f64> {
        let v = self.f64(idx, column)?;
        if v < 0.0 {
            return Err(ValidationError::Negative {
                line: self.line,
                column: column.to_string(),
                value: v,
            }
            .into());
        }
        Ok(v)
    }

    fn i32(&self, idx: usize, column: &str) -> Result<i32> {
        let raw = self.str(idx);
        raw.parse::<i32>().map_err(|_| {
            ValidationError::NotNumeric {
                line: self.line,
                column: column.to_string(),
                value: raw.to_string(),
            }
            .into()
        })
    }

    fn country(&self, idx: usize) -> Result<CountryCode> {
        let raw = self.str(idx);
        raw.parse().map_err(|_| {
            ValidationError::CountryCode {
                line: self.line,
                code: raw.to_string(),
            }
            .into()
        })
    }
}

pub fn read_trade_flows<R: Read>(reader: R, scheme: &SectorScheme) -> Result<TradeFlowTable> {
    let mut rdr = csv_reader(reader);
    let [year, origin, dest, sector, value] =
        locate(rdr.headers().map_err(csv_err)?, TRADE_COLUMNS)?;
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = Row::new(&rec);
        let o = row.country(origin)?;
        let d = row.country(dest)?;
        if o == d {
            return Err(ValidationError::SelfFlow { line: row.line }.into());
        }
        let raw = row.str(sector);
        let group = scheme
            .group_of(raw)
            .ok_or_else(|| ValidationError::UnmappedSector {
                line: Some(row.line),
                code: raw.to_string(),
            })?;
        records.push(TradeFlowRecord {
            year: row.i32(year, "year")?,
            origin: o,
            dest: d,
            sector: group.to_string(),
            value: row.non_negative(value, "value")?,
        });
    }
    Ok(TradeFlowTable::from_records(records))
}

pub fn load_trade_flows(path: &Path, scheme: &SectorScheme) -> Result<TradeFlowTable> {
    in_file(path, read_trade_flows(open(path)?, scheme))
}

pub fn read_cities<R: Read>(reader: R) -> Result<CityTable> {
    let mut rdr = csv_reader(reader);
    let [id, name, country, lat, lon, pop] = locate(rdr.headers().map_err(csv_err)?, CITY_COLUMNS)?;
    let mut cities = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = Row::new(&rec);
        let city = CityRecord {
            id: row.str(id).to_string(),
            name: row.str(name).to_string(),
            country: row.country(country)?,
            lat: row.f64(lat, "lat")?,
            lon: row.f64(lon, "lon")?,
            population: row.non_negative(pop, "population")?,
        };
        if !(-90.0..=90.0).contains(&city.lat) || !(-180.0..=180.0).contains(&city.lon) {
            return Err(ValidationError::Coordinates {
                line: row.line,
                lat: city.lat,
                lon: city.lon,
            }
            .into());
        }
        if !seen.insert(city.id.clone()) {
            return Err(ValidationError::DuplicateCity {
                line: row.line,
                id: city.id,
            }
            .into());
        }
        cities.push(city);
    }
    CityTable::new(cities)
}

pub fn load_cities(path: &Path) -> Result<CityTable> {
    in_file(path, read_cities(open(path)?))
}

pub fn read_gdp<R: Read>(reader: R) -> Result<GdpTable> {
    let mut rdr = csv_reader(reader);
    let [country, year, gdp] = locate(rdr.headers().map_err(csv_err)?, GDP_COLUMNS)?;
    let mut table = GdpTable::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = Row::new(&rec);
        let c = row.country(country)?;
        let y = row.i32(year, "year")?;
        let v = row.f64(gdp, "gdp")?;
        if v <= 0.0 {
            return Err(ValidationError::NonPositiveGdp {
                line: row.line,
                value: v,
            }
            .into());
        }
        if table.entry(c).or_default().insert(y, v).is_some() {
            return Err(ValidationError::DuplicateGdp {
                line: row.line,
                country: c.to_string(),
                year: y,
            }
            .into());
        }
    }
    Ok(table)
}

pub fn load_gdp(path: &Path) -> Result<GdpTable> {
    in_file(path, read_gdp(open(path)?))
}

/// `country,city_id` pairs naming each country's capital.
pub fn read_capitals<R: Read>(reader: R) -> Result<BTreeMap<CountryCode, String>> {
    let mut rdr = csv_reader(reader);
    let [country, city] = locate(rdr.headers().map_err(csv_err)?, CAPITAL_COLUMNS)?;
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = Row::new(&rec);
        out.insert(row.country(country)?, row.str(city).to_string());
    }
    Ok(out)
}

pub fn load_capitals(path: &Path) -> Result<BTreeMap<CountryCode, String>> {
    in_file(path, read_capitals(open(path)?))
}

/// Joins GDP series with capital cities. Without an explicit capital the
/// most populous city of the country is used (ties broken by smallest id).
pub fn build_countries(
    gdp: &GdpTable,
    cities: &CityTable,
    capitals: Option<&BTreeMap<CountryCode, String>>,
) -> Result<Vec<CountryRecord>> {
    let mut out = Vec::with_capacity(gdp.len());
    for (&code, series) in gdp {
        let capital = match capitals.and_then(|m| m.get(&code)) {
            Some(id) => {
                if cities.get(id).is_none() {
                    return Err(ValidationError::UnresolvedCapital {
                        country: code.to_string(),
                        city: id.clone(),
                    }
                    .into());
                }
                id.clone()
            }
            None => cities
                .iter()
                .filter(|c| c.country == code)
                .max_by(|a, b| {
                    a.population
                        .total_cmp(&b.population)
                        .then_with(|| b.id.cmp(&a.id))
                })
                .map(|c| c.id.clone())
                .ok_or_else(|| ValidationError::NoCapital {
                    country: code.to_string(),
                })?,
        };
        out.push(CountryRecord {
            code,
            gdp_by_year: series.clone(),
            capital_city_id: capital,
        });
    }
    Ok(out)
}

fn check_threshold(min_control_pct: f64) -> Result<()> {
    if !(min_control_pct > 0.0 && min_control_pct <= 100.0) {
        return Err(ValidationError::ControlThreshold(min_control_pct).into());
    }
    Ok(())
}

/// Keeps links with `ownership_pct >= min_control_pct`.
pub fn read_ownership<R: Read>(reader: R, min_control_pct: f64) -> Result<OwnershipLinkTable> {
    check_threshold(min_control_pct)?;
    let mut rdr = csv_reader(reader);
    let [pf, pc, sf, sc, pct, sector, revenue] =
        locate(rdr.headers().map_err(csv_err)?, OWNERSHIP_COLUMNS)?;
    let mut table = OwnershipLinkTable::default();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = Row::new(&rec);
        let share = row.f64(pct, "ownership_pct")?;
        if !(share > 0.0 && share <= 100.0) {
            return Err(ValidationError::OwnershipPct {
                line: row.line,
                value: share,
            }
            .into());
        }
        let link = OwnershipLinkRecord {
            parent_firm: row.str(pf).to_string(),
            parent_city: row.str(pc).to_string(),
            subsidiary_firm: row.str(sf).to_string(),
            subsidiary_city: row.str(sc).to_string(),
            ownership_pct: share,
            sector: row.str(sector).to_string(),
            revenue: row.non_negative(revenue, "revenue")?,
        };
        if !seen.insert((link.parent_firm.clone(), link.subsidiary_firm.clone())) {
            return Err(ValidationError::DuplicateOwnership {
                line: row.line,
                parent_firm: link.parent_firm,
                subsidiary_firm: link.subsidiary_firm,
            }
            .into());
        }
        if share < min_control_pct {
            table.dropped_below_threshold += 1;
        } else {
            table.links.push(link);
        }
    }
    Ok(table)
}

pub fn load_ownership(path: &Path, min_control_pct: f64) -> Result<OwnershipLinkTable> {
    check_threshold(min_control_pct)?;
    in_file(path, read_ownership(open(path)?, min_control_pct))
}

/// Groups are ordered by first appearance in the file.
pub fn read_sector_scheme<R: Read>(reader: R, name: &str) -> Result<SectorScheme> {
    let mut rdr = csv_reader(reader);
    let [raw, group] = locate(rdr.headers().map_err(csv_err)?, SCHEME_COLUMNS)?;
    let mut mapping: BTreeMap<String, String> = BTreeMap::new();
    let mut groups: Vec<String> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = Row::new(&rec);
        let code = row.str(raw).to_string();
        let g = row.str(group).to_string();
        if let Some(prev) = mapping.get(&code) {
            if prev != &g {
                return Err(ValidationError::ConflictingSector {
                    line: row.line,
                    code,
                    first: prev.clone(),
                    second: g,
                }
                .into());
            }
            continue;
        }
        if !groups.contains(&g) {
            groups.push(g.clone());
        }
        mapping.insert(code, g);
    }
    SectorScheme::new(name, mapping, groups)
}

/// A built-in scheme name, or a path to a `raw_code,group` file.
pub fn resolve_scheme(name_or_path: &str) -> Result<SectorScheme> {
    match SectorScheme::builtin(name_or_path) {
        Ok(s) => Ok(s),
        Err(_) if Path::new(name_or_path).is_file() => {
            let path = Path::new(name_or_path);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| name_or_path.to_string());
            in_file(path, read_sector_scheme(open(path)?, &name))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trade10() -> SectorScheme {
        SectorScheme::builtin("trade10").unwrap()
    }

    #[test]
    fn trade_rows_aggregate_by_key() {
        let csv = "year,origin,dest,sector,value\n2012,PL,CZ,Wood,3\n2012,PL,CZ,Wood,4\n2012,CZ,PL,Wood,1\n";
        let t = read_trade_flows(csv.as_bytes(), &trade10()).unwrap();
        assert_eq!(t.len(), 2);
        let pl_cz = t
            .records()
            .iter()
            .find(|r| r.origin.as_str() == "PL")
            .unwrap();
        assert_eq!(pl_cz.value, 7.0);
    }

    #[test]
    fn trade_self_flow_is_rejected_with_line() {
        let csv = "year,origin,dest,sector,value\n2012,PL,CZ,Wood,3\n2012,PL,PL,Wood,4\n";
        let err = read_trade_flows(csv.as_bytes(), &trade10()).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Validation(ValidationError::SelfFlow { line: 3 })
            ),
            "{err}"
        );
    }

    #[test]
    fn trade_empty_file_with_header() {
        let t = read_trade_flows("year,origin,dest,sector,value\n".as_bytes(), &trade10()).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn trade_errors() {
        let s = trade10();
        let missing = read_trade_flows("year,origin,dest,value\n".as_bytes(), &s).unwrap_err();
        assert!(matches!(
            missing,
            Error::Validation(ValidationError::MissingColumn { ref column }) if column == "sector"
        ));
        let bad = read_trade_flows(
            "year,origin,dest,sector,value\n2012,PL,CZ,Wood,abc\n".as_bytes(),
            &s,
        )
        .unwrap_err();
        assert!(matches!(
            bad,
            Error::Validation(ValidationError::NotNumeric { line: 2, .. })
        ));
        let unmapped = read_trade_flows(
            "year,origin,dest,sector,value\n2012,PL,CZ,Plastics,1\n".as_bytes(),
            &s,
        )
        .unwrap_err();
        assert!(matches!(
            unmapped,
            Error::Validation(ValidationError::UnmappedSector { line: Some(2), ref code }) if code == "Plastics"
        ));
        let neg = read_trade_flows(
            "year,origin,dest,sector,value\n2012,PL,CZ,Wood,-1\n".as_bytes(),
            &s,
        )
        .unwrap_err();
        assert!(matches!(
            neg,
            Error::Validation(ValidationError::Negative { .. })
        ));
    }

    #[test]
    fn trade_conserves_total() {
        let mut csv = String::from("year,origin,dest,sector,value\n");
        let mut raw_total = 0.0;
        for i in 0..200 {
            let v = (i as f64 * 0.37).sin().abs() * 1000.0;
            raw_total += v;
            let (o, d) = if i % 2 == 0 {
                ("PL", "CZ")
            } else {
                ("HU", "SK")
            };
            csv.push_str(&format!(
                "{},{o},{d},{},{v}\n",
                2000 + i % 3,
                TRADE10_GROUPS[i % 4]
            ));
        }
        let t = read_trade_flows(csv.as_bytes(), &trade10()).unwrap();
        assert!(((t.total() - raw_total) / raw_total).abs() < 1e-9);
    }

    use crate::domain::TRADE10_GROUPS;

    const OWN_HEADER: &str =
        "parent_firm,parent_city,subsidiary_firm,subsidiary_city,ownership_pct,sector,revenue\n";

    #[test]
    fn ownership_threshold_filtering() {
        let csv = format!(
            "{OWN_HEADER}a,c1,x,c2,10,IT,1\nb,c1,y,c2,50,IT,1\nc,c1,z,c2,100,IT,1\nd,c1,w,c2,49.9,IT,1\n"
        );
        let t = read_ownership(csv.as_bytes(), 50.0).unwrap();
        assert_eq!(t.links.len(), 2);
        assert_eq!(t.dropped_below_threshold, 2);
    }

    #[test]
    fn ownership_errors() {
        let zero = format!("{OWN_HEADER}a,c1,x,c2,0,IT,1\n");
        assert!(matches!(
            read_ownership(zero.as_bytes(), 50.0).unwrap_err(),
            Error::Validation(ValidationError::OwnershipPct { line: 2, .. })
        ));
        let over = format!("{OWN_HEADER}a,c1,x,c2,100.5,IT,1\n");
        assert!(read_ownership(over.as_bytes(), 50.0).is_err());
        let dup = format!("{OWN_HEADER}a,c1,x,c2,60,IT,1\na,c1,x,c3,70,IT,2\n");
        assert!(matches!(
            read_ownership(dup.as_bytes(), 50.0).unwrap_err(),
            Error::Validation(ValidationError::DuplicateOwnership { line: 3, .. })
        ));
        assert!(read_ownership(OWN_HEADER.as_bytes(), 0.0).is_err());
        assert!(read_ownership(OWN_HEADER.as_bytes(), 100.1).is_err());
    }

    #[test]
    fn city_validation() {
        let ok = "city_id,name,country,lat,lon,population\nWAW,Warsaw,PL,52.2297,21.0122,1700000\n";
        assert_eq!(read_cities(ok.as_bytes()).unwrap().len(), 1);
        let lat = "city_id,name,country,lat,lon,population\nX,X,PL,91,0,1\n";
        assert!(read_cities(lat.as_bytes()).is_err());
        let dup = "city_id,name,country,lat,lon,population\nX,X,PL,1,0,1\nX,Y,PL,1,0,1\n";
        assert!(matches!(
            read_cities(dup.as_bytes()).unwrap_err(),
            Error::Validation(ValidationError::DuplicateCity { line: 3, .. })
        ));
        let pop = "city_id,name,country,lat,lon,population\nX,X,PL,1,0,-5\n";
        assert!(read_cities(pop.as_bytes()).is_err());
    }

    #[test]
    fn gdp_validation() {
        let g = read_gdp("country,year,gdp\nPL,2012,500000\nCZ,2012,200000\n".as_bytes()).unwrap();
        assert_eq!(g.len(), 2);
        assert!(read_gdp("country,year,gdp\nPL,2012,0\n".as_bytes()).is_err());
        assert!(read_gdp("country,year,gdp\nPL,2012,1\nPL,2012,2\n".as_bytes()).is_err());
    }

    #[test]
    fn scheme_file() {
        let s = read_sector_scheme(
            "raw_code,group\n29,CARS\n45,CARS\n64,FINANCE\n".as_bytes(),
            "x",
        )
        .unwrap();
        assert_eq!(s.groups(), ["CARS".to_string(), "FINANCE".to_string()]);
        assert_eq!(s.group_of("45"), Some("CARS"));
        assert!(read_sector_scheme("raw_code,group\n29,CARS\n29,IT\n".as_bytes(), "x").is_err());
    }

    fn city(id: &str, country: &str, lat: f64, lon: f64, pop: f64) -> CityRecord {
        CityRecord {
            id: id.into(),
            name: id.into(),
            country: country.parse().unwrap(),
            lat,
            lon,
            population: pop,
        }
    }

    #[test]
    fn distances_between_capitals() {
        let cities = CityTable::new(vec![
            city("WAW", "PL", 52.2297, 21.0122, 1.7e6),
            city("KRK", "PL", 50.06, 19.94, 7.6e5),
            city("BUD", "HU", 47.4979, 19.0402, 1.7e6),
        ])
        .unwrap();
        let mut gdp = GdpTable::new();
        gdp.entry("PL".parse().unwrap())
            .or_default()
            .insert(2012, 5e5);
        gdp.entry("HU".parse().unwrap())
            .or_default()
            .insert(2012, 1.3e5);
        let countries = build_countries(&gdp, &cities, None).unwrap();
        let pl = countries.iter().find(|c| c.code.as_str() == "PL").unwrap();
        assert_eq!(pl.capital_city_id, "WAW");
        let d = capital_distances(&countries, &cities).unwrap();
        let km = d.get("PL".parse().unwrap(), "HU".parse().unwrap()).unwrap();
        assert!((km - 545.0).abs() < 5.0, "{km}");
        assert_eq!(
            d.get("HU".parse().unwrap(), "PL".parse().unwrap()),
            Some(km)
        );
        assert_eq!(d.get("PL".parse().unwrap(), "PL".parse().unwrap()), None);
    }

    #[test]
    fn unresolved_capital() {
        let cities = CityTable::new(vec![city("WAW", "PL", 52.2, 21.0, 1.0)]).unwrap();
        let countries = vec![CountryRecord {
            code: "PL".parse().unwrap(),
            gdp_by_year: BTreeMap::new(),
            capital_city_id: "NOPE".into(),
        }];
        assert!(capital_distances(&countries, &cities).is_err());
    }

    #[test]
    fn haversine_special_cases() {
        assert_eq!(haversine_km(10.0, 20.0, 10.0, 20.0), 0.0);
        let anti = haversine_km(0.0, 0.0, 0.0, 180.0);
        assert!((anti - std::f64::consts::PI * EARTH_RADIUS_KM).abs() < 1e-6);
        assert!((anti - 20015.1).abs() < 0.1);
        let mut t = DistanceTable::default();
        let pl = "PL".parse().unwrap();
        let cz = "CZ".parse().unwrap();
        assert!(t.insert(pl, pl, 1.0).is_err());
        assert!(t.insert(pl, cz, 0.0).is_err());
    }
}
