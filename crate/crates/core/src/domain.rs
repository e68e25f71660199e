//! Shared immutable record types and the city-size rule.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, ValidationError};

/// Upper bound (exclusive) of the small-city class, in inhabitants.
pub const SMALL_CITY_LIMIT: f64 = 50_000.0;
/// Upper bound (inclusive) of the medium-city class, in inhabitants.
pub const MEDIUM_CITY_LIMIT: f64 = 250_000.0;

/// ISO 3166-1 alpha-2 country code, always two uppercase ASCII letters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode([u8; 2]);

impl CountryCode {
    pub fn as_str(&self) -> &str {
        // both bytes are ASCII uppercase by construction
        std::str::from_utf8(&self.0).expect("ascii")
    }
}

impl FromStr for CountryCode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.as_bytes() {
            [a, b] if a.is_ascii_uppercase() && b.is_ascii_uppercase() => Ok(CountryCode([*a, *b])),
            _ => Err(()),
        }
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CountryCode({})", self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountryRecord {
    pub code: CountryCode,
    /// GDP in constant-dollar millions, keyed by year.
    pub gdp_by_year: BTreeMap<i32, f64>,
    pub capital_city_id: String,
}

impl CountryRecord {
    pub fn gdp(&self, year: i32) -> Option<f64> {
        self.gdp_by_year.get(&year).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CityRecord {
    pub id: String,
    pub name: String,
    pub country: CountryCode,
    pub lat: f64,
    pub lon: f64,
    pub population: f64,
}

impl CityRecord {
    pub fn size_class(&self) -> Result<SizeClass> {
        classify_city_size(self.population)
    }
}

/// Cities indexed by id, in input order.
#[derive(Debug, Clone, Default)]
pub struct CityTable {
    cities: Vec<CityRecord>,
    index: HashMap<String, usize>,
}

impl CityTable {
    pub fn new(cities: Vec<CityRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(cities.len());
        for (i, c) in cities.iter().enumerate() {
            if !(-90.0..=90.0).contains(&c.lat) || !(-180.0..=180.0).contains(&c.lon) {
                return Err(ValidationError::Coordinates {
                    line: i + 2,
                    lat: c.lat,
                    lon: c.lon,
                }
                .into());
            }
            if c.population.is_nan() || c.population < 0.0 {
                return Err(ValidationError::NegativePopulation(c.population).into());
            }
            if index.insert(c.id.clone(), i).is_some() {
                return Err(ValidationError::DuplicateCity {
                    line: i + 2,
                    id: c.id.clone(),
                }
                .into());
            }
        }
        Ok(CityTable { cities, index })
    }

    pub fn get(&self, id: &str) -> Option<&CityRecord> {
        self.index.get(id).map(|&i| &self.cities[i])
    }

    pub fn resolve(&self, id: &str) -> Result<&CityRecord> {
        self.get(id).ok_or_else(|| {
            ValidationError::UnknownCity {
                city: id.to_string(),
                line: None,
            }
            .into()
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &CityRecord> {
        self.cities.iter()
    }

    pub fn len(&self) -> usize {
        self.cities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cities.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::Small, SizeClass::Medium, SizeClass::Large];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            SizeClass::Small => "SMALL",
            SizeClass::Medium => "MEDIUM",
            SizeClass::Large => "LARGE",
        }
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Small below 50 000 inhabitants, large above 250 000, medium in between
/// with both bounds inclusive.
pub fn classify_city_size(population: f64) -> Result<SizeClass> {
    if population.is_nan() || population < 0.0 {
        return Err(ValidationError::NegativePopulation(population).into());
    }
    Ok(if population < SMALL_CITY_LIMIT {
        SizeClass::Small
    } else if population <= MEDIUM_CITY_LIMIT {
        SizeClass::Medium
    } else {
        SizeClass::Large
    })
}

/// Export product groups used for trade flows.
pub const TRADE10_GROUPS: [&str; 10] = [
    "Agriculture",
    "Chemistry",
    "Construction",
    "Energy",
    "Food Products",
    "Mechanics",
    "Mining",
    "Siderurgy",
    "Textiles",
    "Wood",
];

/// Sectors of firms under foreign capital control.
pub const FDI9_GROUPS: [&str; 9] = [
    "CARS",
    "FINANCE",
    "IT",
    "INDUSTRY",
    "MEDIA",
    "REAL ESTATE",
    "SALES",
    "SERVICES",
    "ENERGY",
];

const FDI9_ALIASES: [(&str, &str); 9] = [
    ("car industry", "CARS"),
    ("finance/insurance/banking", "FINANCE"),
    ("it", "IT"),
    ("industry", "INDUSTRY"),
    ("media/advertising/communication", "MEDIA"),
    ("real estate/tourism", "REAL ESTATE"),
    ("sales/trade", "SALES"),
    ("services/construction", "SERVICES"),
    ("energy", "ENERGY"),
];

/// Maps raw sector codes onto an ordered list of group labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorScheme {
    name: String,
    mapping: BTreeMap<String, String>,
    groups: Vec<String>,
}

impl SectorScheme {
    /// Groups keep the order given. Every mapping target must be a group.
    pub fn new(
        name: impl Into<String>,
        mapping: BTreeMap<String, String>,
        groups: Vec<String>,
    ) -> Result<Self> {
        let name = name.into();
        if groups.is_empty() {
            return Err(ValidationError::EmptyScheme(name).into());
        }
        for (i, g) in groups.iter().enumerate() {
            if groups[..i].contains(g) {
                return Err(ValidationError::DuplicateGroup(g.clone()).into());
            }
        }
        if let Some((code, _)) = mapping.iter().find(|(_, g)| !groups.contains(g)) {
            return Err(ValidationError::UnmappedSector {
                line: None,
                code: code.clone(),
            }
            .into());
        }
        Ok(SectorScheme {
            name,
            mapping,
            groups,
        })
    }

    /// `trade10` or `fdi9`. Group labels map to themselves; `fdi9` also
    /// accepts the long descriptive sector names.
    pub fn builtin(name: &str) -> Result<Self> {
        let (groups, aliases): (&[&str], &[(&str, &str)]) = match name {
            "trade10" => (&TRADE10_GROUPS, &[]),
            "fdi9" => (&FDI9_GROUPS, &FDI9_ALIASES),
            other => return Err(ValidationError::UnknownScheme(other.to_string()).into()),
        };
        let mut mapping: BTreeMap<String, String> = groups
            .iter()
            .map(|g| (g.to_string(), g.to_string()))
            .collect();
        for (raw, g) in aliases {
            mapping
                .entry(raw.to_string())
                .or_insert_with(|| g.to_string());
        }
        SectorScheme::new(
            name,
            mapping,
            groups.iter().map(|g| g.to_string()).collect(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn group_of(&self, raw_code: &str) -> Option<&str> {
        self.mapping.get(raw_code).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeFlowRecord {
    pub year: i32,
    pub origin: CountryCode,
    pub dest: CountryCode,
    pub sector: String,
    /// Constant-dollar millions.
    pub value: f64,
}

/// Trade flows aggregated per (year, origin, dest, sector group), sorted by
/// that key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TradeFlowTable {
    records: Vec<TradeFlowRecord>,
}

impl TradeFlowTable {
    /// Sums values sharing the same key. Records must already satisfy the
    /// record invariants.
    pub fn from_records(records: impl IntoIterator<Item = TradeFlowRecord>) -> Self {
        let mut acc: BTreeMap<(i32, CountryCode, CountryCode, String), f64> = BTreeMap::new();
        for r in records {
            *acc.entry((r.year, r.origin, r.dest, r.sector))
                .or_insert(0.0) += r.value;
        }
        let records = acc
            .into_iter()
            .map(|((year, origin, dest, sector), value)| TradeFlowRecord {
                year,
                origin,
                dest,
                sector,
                value,
            })
            .collect();
        TradeFlowTable { records }
    }

    pub fn records(&self) -> &[TradeFlowRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn years(&self) -> Vec<i32> {
        let mut y: Vec<i32> = self.records.iter().map(|r| r.year).collect();
        y.dedup();
        y
    }

    pub fn total(&self) -> f64 {
        self.records.iter().map(|r| r.value).sum()
    }

    /// Flows of one year summed over sectors, per ordered pair.
    pub fn pair_totals(&self, year: i32) -> BTreeMap<(CountryCode, CountryCode), f64> {
        let mut out = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.year == year) {
            *out.entry((r.origin, r.dest)).or_insert(0.0) += r.value;
        }
        out
    }
}
