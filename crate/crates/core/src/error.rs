use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A record-level validation failure. `line` is the 1-based line of the
/// input file (the header is line 1).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("missing column `{column}` in header")]
    MissingColumn { column: String },
    #[error("line {line}: column `{column}` has non-numeric value `{value}`")]
    NotNumeric {
        line: usize,
        column: String,
        value: String,
    },
    #[error("line {line}: column `{column}` must be non-negative, got {value}")]
    Negative {
        line: usize,
        column: String,
        value: f64,
    },
    #[error("unmapped sector code `{code}`{}", line_suffix(*.line))]
    UnmappedSector { line: Option<usize>, code: String },
    #[error("line {line}: origin equals destination")]
    SelfFlow { line: usize },
    #[error("line {line}: invalid country code `{code}`")]
    CountryCode { line: usize, code: String },
    #[error("line {line}: ownership percentage {value} outside (0, 100]")]
    OwnershipPct { line: usize, value: f64 },
    #[error("control threshold {0} outside (0, 100]")]
    ControlThreshold(f64),
    #[error("line {line}: duplicate ownership link {parent_firm} -> {subsidiary_firm}")]
    DuplicateOwnership {
        line: usize,
        parent_firm: String,
        subsidiary_firm: String,
    },
    #[error("line {line}: duplicate city id `{id}`")]
    DuplicateCity { line: usize, id: String },
    #[error("line {line}: duplicate GDP entry for {country} in {year}")]
    DuplicateGdp {
        line: usize,
        country: String,
        year: i32,
    },
    #[error("line {line}: GDP must be positive, got {value}")]
    NonPositiveGdp { line: usize, value: f64 },
    #[error("line {line}: latitude/longitude ({lat}, {lon}) out of range")]
    Coordinates { line: usize, lat: f64, lon: f64 },
    #[error("negative population {0}")]
    NegativePopulation(f64),
    #[error("unknown city id `{city}`{}", line_suffix(*.line))]
    UnknownCity { city: String, line: Option<usize> },
    #[error("capital of {country} (`{city}`) does not resolve to a city")]
    UnresolvedCapital { country: String, city: String },
    #[error("no capital city for {country}")]
    NoCapital { country: String },
    #[error("capitals of {a} and {b} coincide (zero distance)")]
    ZeroDistance { a: String, b: String },
    #[error("line {line}: sector code `{code}` mapped to both `{first}` and `{second}`")]
    ConflictingSector {
        line: usize,
        code: String,
        first: String,
        second: String,
    },
    #[error("sector scheme `{0}` has no groups")]
    EmptyScheme(String),
    #[error("sector scheme group `{0}` listed twice")]
    DuplicateGroup(String),
    #[error("unknown built-in sector scheme `{0}`")]
    UnknownScheme(String),
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" at line {l}")).unwrap_or_default()
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}: {error}")]
    Invalid {
        file: String,
        error: ValidationError,
    },
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("{file}: malformed CSV: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A numeric argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("design matrix is rank deficient (rank {rank} < {columns} columns)")]
    RankDeficient { rank: usize, columns: usize },
    #[error("not enough observations: {found} < {needed}")]
    TooFewObservations { found: usize, needed: usize },
    #[error("year {0} not present in the input")]
    MissingYear(i32),
    #[error("missing {what} for pair {origin}->{dest}")]
    MissingPairData {
        what: &'static str,
        origin: String,
        dest: String,
    },
    #[error("contingency table has zero grand total")]
    EmptyTable,
    #[error("malformed row id `{0}`, expected COUNTRY:YEAR")]
    MalformedRowId(String),
    #[error("axis {axis} out of range (result has {n_axes} axes)")]
    AxisOutOfRange { axis: usize, n_axes: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("conservation check failed: {0}")]
    Conservation(String),
}

impl Error {
    /// True for failures caused by malformed or inconsistent input data.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::Validation(_)
                | Error::Csv { .. }
                | Error::MissingYear(_)
                | Error::MissingPairData { .. }
                | Error::MalformedRowId(_)
        )
    }
}
