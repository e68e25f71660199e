use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::output::{Cell, Format, Outputs, Table};
use super::{Failure, RunConfig};
use crate::ca::{self, CAResult, ContingencyTable, TRADE_CA_YEARS};
use crate::domain::CityTable;
use crate::error::{Error, Result};
use crate::gravity::{self, FitOptions, GravityFit, GravitySpec, TheoreticalFlow};
use crate::ingest::{self, OwnershipLinkTable};
use crate::network::{self, SizeRow};
use crate::plot::{self, Point};
use crate::synth;

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    path.as_deref()
        .ok_or_else(|| Failure::config(format!("`--{flag}` is required for this command")))
}

/// Attributes untagged validation errors to `file`.
fn tag(file: &Path, e: Error) -> Error {
    match e {
        Error::Validation(error) => Error::Invalid {
            file: file.display().to_string(),
            error,
        },
        e => e,
    }
}

fn report_written(out: &Outputs, stdout: &mut dyn Write) {
    for p in out.written() {
        let _ = writeln!(stdout, "wrote {}", p.display());
    }
}

struct Inputs {
    cities: CityTable,
    links: OwnershipLinkTable,
    graph: network::CityGraph,
}

fn ownership_inputs(cfg: &RunConfig) -> Result<Inputs, Failure> {
    let own_path = require(&cfg.ownership, "ownership")?;
    let cities = ingest::load_cities(require(&cfg.cities, "cities")?)?;
    let scheme = ingest::resolve_scheme(&cfg.fdi_scheme)?;
    let links = ingest::load_ownership(own_path, cfg.min_control_pct)?;
    if links.dropped_below_threshold > 0 {
        log::info!(
            "{} ownership links below {}% control dropped",
            links.dropped_below_threshold,
            cfg.min_control_pct
        );
    }
    let graph =
        network::aggregate_to_cities(&links, &scheme, &cities).map_err(|e| tag(own_path, e))?;
    Ok(Inputs {
        cities,
        links,
        graph,
    })
}

pub fn validate(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), Failure> {
    let mut report = Table::new(["input", "file", "records", "dropped", "status", "detail"]);
    let mut failed: Option<i32> = None;
    let mut add = |input: &str,
                   file: Option<&Path>,
                   outcome: std::result::Result<(usize, usize, String), &Error>| {
        let file = file.map_or(String::new(), |p| p.display().to_string());
        match outcome {
            Ok((n, dropped, detail)) => report.push(vec![
                input.into(),
                file.into(),
                n.into(),
                dropped.into(),
                "ok".into(),
                detail.into(),
            ]),
            Err(e) => {
                failed.get_or_insert(super::exit_code(e));
                report.push(vec![
                    input.into(),
                    file.into(),
                    Cell::Text(String::new()),
                    Cell::Text(String::new()),
                    "error".into(),
                    e.to_string().into(),
                ]);
            }
        }
    };

    if [
        &cfg.trade,
        &cfg.cities,
        &cfg.gdp,
        &cfg.capitals,
        &cfg.ownership,
    ]
    .iter()
    .all(|p| p.is_none())
    {
        return Err(Failure::config("no input files given"));
    }

    let trade_scheme = ingest::resolve_scheme(&cfg.scheme)?;
    let fdi_scheme = ingest::resolve_scheme(&cfg.fdi_scheme)?;
    let mut cities = None;
    let mut gdp = None;
    let mut capitals = None;
    let mut links = None;

    if let Some(p) = &cfg.trade {
        let outcome = ingest::load_trade_flows(p, &trade_scheme)
            .map(|t| (t.len(), 0, format!("years {:?}", t.years())));
        add("trade", Some(p), outcome.as_ref().map(Clone::clone));
    }
    if let Some(p) = &cfg.cities {
        let r = ingest::load_cities(p);
        add(
            "cities",
            Some(p),
            r.as_ref().map(|c| (c.len(), 0, String::new())),
        );
        cities = r.ok();
    }
    if let Some(p) = &cfg.gdp {
        let r = ingest::load_gdp(p);
        add(
            "gdp",
            Some(p),
            r.as_ref().map(|g| {
                (
                    g.values().map(|s| s.len()).sum(),
                    0,
                    format!("{} countries", g.len()),
                )
            }),
        );
        gdp = r.ok();
    }
    if let Some(p) = &cfg.capitals {
        let r = ingest::load_capitals(p);
        add(
            "capitals",
            Some(p),
            r.as_ref().map(|c| (c.len(), 0, String::new())),
        );
        capitals = r.ok();
    }
    if let Some(p) = &cfg.ownership {
        let r = ingest::load_ownership(p, cfg.min_control_pct);
        add(
            "ownership",
            Some(p),
            r.as_ref().map(|l| {
                let detail = if l.dropped_below_threshold > 0 {
                    format!("below {}% control", cfg.min_control_pct)
                } else {
                    String::new()
                };
                (l.links.len(), l.dropped_below_threshold, detail)
            }),
        );
        links = r.ok();
    }

    if let (Some(l), Some(c), Some(p)) = (&links, &cities, &cfg.ownership) {
        let outcome = network::aggregate_to_cities(l, &fdi_scheme, c)
            .map(|g| (g.edges.len(), 0, format!("{} city edges", g.edges.len())))
            .map_err(|e| tag(p, e));
        add(
            "ownership+cities",
            Some(p),
            outcome.as_ref().map(Clone::clone),
        );
    }
    if let (Some(g), Some(c)) = (&gdp, &cities) {
        let outcome = ingest::build_countries(g, c, capitals.as_ref())
            .and_then(|countries| ingest::capital_distances(&countries, c))
            .map(|d| (d.len(), 0, "capital distances".to_string()));
        add("gdp+cities", None, outcome.as_ref().map(Clone::clone));
    }

    let _ = stdout.write_all(&report.to_csv()?);
    match failed {
        Some(code) => Err(Failure {
            code,
            message: "validation failed".into(),
        }),
        None => Ok(()),
    }
}

struct YearOutcome {
    year: i32,
    n_obs: usize,
    result: Result<(GravityFit, f64, Vec<TheoreticalFlow>)>,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::numerical(format!("thread pool: {e}")))
}

pub fn gravity(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), Failure> {
    let scheme = ingest::resolve_scheme(&cfg.scheme)?;
    let flows = ingest::load_trade_flows(require(&cfg.trade, "trade")?, &scheme)?;
    let cities = ingest::load_cities(require(&cfg.cities, "cities")?)?;
    let gdp = ingest::load_gdp(require(&cfg.gdp, "gdp")?)?;
    let capitals = cfg
        .capitals
        .as_deref()
        .map(ingest::load_capitals)
        .transpose()?;
    let countries = ingest::build_countries(&gdp, &cities, capitals.as_ref())?;
    let dist = ingest::capital_distances(&countries, &cities)?;
    let spec = GravitySpec::new(cfg.a)?;
    let opts = FitOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        assume_zero: cfg.assume_zero,
    };
    let years: Vec<i32> = if cfg.years.is_empty() {
        flows
            .years()
            .into_iter()
            .filter(|y| gdp.values().any(|s| s.contains_key(y)))
            .collect()
    } else {
        cfg.years.clone()
    };
    if years.is_empty() {
        return Err(Failure::config("no year has both trade flows and GDP"));
    }

    let outcomes: Vec<YearOutcome> = pool(cfg.jobs)?.install(|| {
        years
            .par_iter()
            .map(|&year| {
                let obs = match gravity::pair_observations(
                    &flows,
                    year,
                    &countries,
                    &dist,
                    &spec,
                    opts.assume_zero,
                ) {
                    Ok(o) => o,
                    Err(e) => {
                        return YearOutcome {
                            year,
                            n_obs: 0,
                            result: Err(e),
                        }
                    }
                };
                let result = gravity::fit_observations(year, &obs, &opts).and_then(|fit| {
                    let (k, rows) = gravity::theoretical_flows(&obs, cfg.a, cfg.k_variant)?;
                    Ok((fit, k, rows))
                });
                YearOutcome {
                    year,
                    n_obs: obs.len(),
                    result,
                }
            })
            .collect()
    });

    let mut table = Table::new([
        "year",
        "beta",
        "gamma",
        "delta",
        "r2_deviance",
        "r2_corr",
        "n_obs",
        "converged",
    ]);
    let mut theo = Table::new(["year", "origin", "dest", "observed", "theoretical", "k"]);
    let mut problems = Vec::new();
    for o in &outcomes {
        match &o.result {
            Ok((fit, k, rows)) => {
                if !fit.converged {
                    log::warn!(
                        "year {}: IRLS did not converge in {} iterations",
                        o.year,
                        fit.iterations
                    );
                    problems.push(format!("year {} did not converge", o.year));
                }
                table.push(vec![
                    o.year.into(),
                    fit.beta.into(),
                    fit.gamma.into(),
                    fit.delta.into(),
                    fit.r2_deviance.into(),
                    fit.r2_corr.into(),
                    fit.n_obs.into(),
                    fit.converged.into(),
                ]);
                for r in rows {
                    theo.push(vec![
                        o.year.into(),
                        r.origin.to_string().into(),
                        r.dest.to_string().into(),
                        r.observed.into(),
                        r.theoretical.into(),
                        (*k).into(),
                    ]);
                }
            }
            Err(e) => {
                log::warn!("year {}: {e}", o.year);
                eprintln!("warning: year {}: {e}", o.year);
                problems.push(format!("year {}: {e}", o.year));
                let nan = Cell::Float(f64::NAN);
                table.push(vec![
                    o.year.into(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan,
                    o.n_obs.into(),
                    false.into(),
                ]);
            }
        }
    }
    let mut out = Outputs::new(&cfg.out, &cfg.formats);
    out.table("gravity", &table)?;
    out.table("theoretical_flows", &theo)?;
    report_written(&out, stdout);
    if cfg.strict && !problems.is_empty() {
        return Err(Failure::numerical(problems.join("; ")));
    }
    Ok(())
}

/// Keeps at most `requested` axes; fewer are available on small or
/// degenerate tables.
fn fit_ca(table: &ContingencyTable, requested: usize) -> Result<CAResult> {
    let n = requested.min(table.max_axes());
    if n < requested {
        log::warn!("only {} axes available, {} requested", n, requested);
    }
    let result = ca::ca_fit(table, n)?;
    if result.n_axes == 0 {
        log::warn!("degenerate table: no axis carries inertia");
    }
    Ok(result)
}

fn with_degenerate(t: Result<ContingencyTable>) -> Result<Option<ContingencyTable>> {
    match t {
        Ok(t) => {
            for r in t.dropped_rows() {
                log::warn!("dropped all-zero row `{r}`");
            }
            for c in t.dropped_cols() {
                log::warn!("dropped all-zero column `{c}`");
            }
            Ok(Some(t))
        }
        Err(Error::EmptyTable) => {
            log::warn!("empty contingency table: writing empty outputs");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn axes_header(first: &str, n: usize) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain((1..=n).map(|k| format!("axis{k}")))
        .collect()
}

fn coords_table(first: &str, ids: &[String], coords: &DMatrix<f64>, n: usize) -> Table {
    let mut t = Table::new(axes_header(first, n));
    for (i, id) in ids.iter().enumerate() {
        let mut row = vec![Cell::from(id.as_str())];
        row.extend((0..n).map(|k| Cell::from(coords[(i, k)])));
        t.push(row);
    }
    t
}

fn write_ca(
    prefix: &str,
    result: Option<&CAResult>,
    cfg: &RunConfig,
    out: &mut Outputs,
) -> Result<()> {
    let n = result.map_or(0, |r| r.n_axes);
    let empty = DMatrix::zeros(0, 0);
    let (rows, cols, rc, cc) = match result {
        Some(r) => (&r.row_ids[..], &r.col_ids[..], &r.row_coords, &r.col_coords),
        None => (&[][..], &[][..], &empty, &empty),
    };
    out.table(
        &format!("{prefix}_coordinates"),
        &coords_table("row_id", rows, rc, n),
    )?;
    out.table(
        &format!("{prefix}_column_coordinates"),
        &coords_table("col_id", cols, cc, n),
    )?;
    let mut inertia = Table::new(["axis", "singular_value", "inertia_share_pct"]);
    if let Some(r) = result {
        for (k, (sv, share)) in r.singular_values.iter().zip(&r.inertia_shares).enumerate() {
            inertia.push(vec![(k + 1).into(), (*sv).into(), (*share).into()]);
        }
    }
    out.table(&format!("{prefix}_inertia"), &inertia)?;

    if out.wants(Format::Svg) {
        let (ax, ay) = cfg.plot_axes;
        let label = |a: usize| match result {
            Some(r) if a <= r.n_axes => format!("Axis {a} ({:.2}%)", r.inertia_shares[a - 1]),
            _ => format!("Axis {a} (absent)"),
        };
        let coord = |i: usize, a: usize| if a <= n { rc[(i, a - 1)] } else { 0.0 };
        let points: Vec<Point> = rows
            .iter()
            .enumerate()
            .map(|(i, id)| Point {
                label: id.clone(),
                x: coord(i, ax),
                y: coord(i, ay),
                series: 0,
            })
            .collect();
        out.svg(
            prefix,
            &plot::scatter_svg(prefix, &label(ax), &label(ay), &points),
        )?;
    }
    Ok(())
}

pub fn trade_ca(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), Failure> {
    let scheme = ingest::resolve_scheme(&cfg.scheme)?;
    let flows = ingest::load_trade_flows(require(&cfg.trade, "trade")?, &scheme)?;
    let years = if cfg.years.is_empty() {
        TRADE_CA_YEARS.to_vec()
    } else {
        cfg.years.clone()
    };
    let groups = scheme.groups();
    let mut rows: BTreeMap<(String, i32), Vec<f64>> = BTreeMap::new();
    for r in flows.records().iter().filter(|r| years.contains(&r.year)) {
        let j = groups
            .iter()
            .position(|g| *g == r.sector)
            .expect("flows carry scheme groups");
        rows.entry((r.origin.to_string(), r.year))
            .or_insert_with(|| vec![0.0; groups.len()])[j] += r.value;
    }
    let row_ids: Vec<String> = rows.keys().map(|(c, y)| format!("{c}:{y}")).collect();
    let values: Vec<&Vec<f64>> = rows.values().collect();
    let counts = DMatrix::from_fn(values.len(), groups.len(), |i, j| values[i][j]);
    let table = with_degenerate(ContingencyTable::new(row_ids, groups.to_vec(), counts))?;
    let result = table.as_ref().map(|t| fit_ca(t, cfg.axes)).transpose()?;

    let mut out = Outputs::new(&cfg.out, &cfg.formats);
    write_ca("trade_ca", result.as_ref(), cfg, &mut out)?;
    let mut traj = Table::new(["country", "year", "axis1", "axis2"]);
    if let Some(r) = &result {
        let set = ca::build_trajectories(r, Some(&years))?;
        for w in &set.warnings {
            eprintln!("warning: {w}");
        }
        for t in &set.trajectories {
            for p in &t.points {
                traj.push(vec![
                    t.country.as_str().into(),
                    p.year.into(),
                    p.axis1.into(),
                    p.axis2.into(),
                ]);
            }
        }
    }
    out.table("trade_ca_trajectories", &traj)?;
    report_written(&out, stdout);
    Ok(())
}

pub fn city_ca(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), Failure> {
    let inputs = ownership_inputs(cfg)?;
    let table = with_degenerate(network::city_sector_table(&inputs.graph, cfg.weights))?;
    let result = table.as_ref().map(|t| fit_ca(t, cfg.axes)).transpose()?;

    let mut out = Outputs::new(&cfg.out, &cfg.formats);
    write_ca("city_ca", result.as_ref(), cfg, &mut out)?;

    let mut merges = Table::new(["step", "node_a", "node_b", "height", "size"]);
    let mut clusters = Table::new(["row_id", "cluster"]);
    let mut report = Table::new(["axis", "rank", "row_id", "coordinate", "side"]);
    if let Some(r) = &result {
        let n_rows = r.row_ids.len();
        let labels = if r.n_axes > 0 && n_rows >= 2 {
            let points = r.row_coords.columns(0, r.n_axes).into_owned();
            let tree = ca::hca_ward(&points, Some(r.row_masses.as_slice()))?;
            for (s, m) in tree.merges.iter().enumerate() {
                merges.push(vec![
                    (s + 1).into(),
                    m.node_a.into(),
                    m.node_b.into(),
                    m.height.into(),
                    m.size.into(),
                ]);
            }
            let k = cfg.clusters.min(n_rows);
            if k < cfg.clusters {
                log::warn!("only {n_rows} rows; cutting into {k} clusters");
            }
            ca::cut_tree(&tree, k)?
        } else {
            log::warn!("no clustering on a table without axes or with a single row");
            vec![0; n_rows]
        };
        for (id, l) in r.row_ids.iter().zip(labels) {
            clusters.push(vec![id.as_str().into(), (l + 1).into()]);
        }
        for axis in 0..r.n_axes {
            let rep = ca::axis_report(r, axis)?;
            for (rank, (id, v)) in rep.entries.iter().enumerate() {
                let side = if *v >= 0.0 { "positive" } else { "negative" };
                report.push(vec![
                    (axis + 1).into(),
                    (rank + 1).into(),
                    id.as_str().into(),
                    (*v).into(),
                    side.into(),
                ]);
            }
        }
    }
    out.table("city_ca_merges", &merges)?;
    out.table("city_ca_clusters", &clusters)?;
    out.table("city_ca_axis_report", &report)?;
    report_written(&out, stdout);
    Ok(())
}

fn size_table(first: &str, rows: &[SizeRow]) -> Table {
    let mut t = Table::new([
        first,
        "small",
        "medium",
        "large",
        "small_pct",
        "medium_pct",
        "large_pct",
        "small_pct_rounded",
        "medium_pct_rounded",
        "large_pct_rounded",
    ]);
    for r in rows {
        let mut row = vec![Cell::from(r.label.as_str())];
        row.extend(r.counts.iter().map(|&c| Cell::from(c)));
        row.extend(r.pct.iter().map(|&p| Cell::from(p)));
        row.extend(r.pct_rounded.iter().map(|&p| Cell::from(p)));
        t.push(row);
    }
    t
}

pub fn network(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), Failure> {
    let Inputs {
        cities,
        links,
        graph,
    } = ownership_inputs(cfg)?;
    let matrix = network::aggregate_to_countries(&graph, &cities)?;
    network::check_conservation(&links, &graph, &matrix)?;
    if graph.self_loops().next().is_some() {
        log::info!("ownership links within a single city are kept as self-loops");
    }

    let mut edges = Table::new(["origin_city", "dest_city", "revenue", "count"]);
    for ((o, d), e) in &graph.edges {
        edges.push(vec![
            o.as_str().into(),
            d.as_str().into(),
            e.revenue.into(),
            e.count.into(),
        ]);
    }

    let codes: Vec<String> = matrix.countries.iter().map(|c| c.to_string()).collect();
    let mut header = vec!["origin".to_string()];
    header.extend(codes.iter().cloned());
    header.extend(["total", "origin_pct", "origin_pct_rounded"].map(String::from));
    let mut cm = Table::new(header);
    if matrix.grand_total() > 0.0 {
        let shares = network::share_matrix(&matrix)?;
        let blank = || Cell::Text(String::new());
        for (i, code) in codes.iter().enumerate() {
            let mut row = vec![Cell::from(code.as_str())];
            row.extend(matrix.values.row(i).iter().map(|&v| Cell::from(v)));
            row.push(matrix.values.row(i).sum().into());
            row.push(shares.origin[i].into());
            row.push(shares.origin_rounded[i].into());
            cm.push(row);
        }
        let mut total = vec![Cell::from("total")];
        total.extend(matrix.values.column_iter().map(|c| Cell::from(c.sum())));
        total.extend([matrix.grand_total().into(), 100.0.into(), 100u32.into()]);
        cm.push(total);
        let mut pct = vec![Cell::from("dest_pct")];
        pct.extend(shares.destination.iter().map(|&v| Cell::from(v)));
        pct.extend([100.0.into(), blank(), blank()]);
        cm.push(pct);
        let mut rounded = vec![Cell::from("dest_pct_rounded")];
        rounded.extend(shares.destination_rounded.iter().map(|&v| Cell::from(v)));
        rounded.extend([100u32.into(), blank(), blank()]);
        cm.push(rounded);
    } else if !links.links.is_empty() {
        log::warn!("no revenue between distinct countries");
    }

    let crosstab = network::sector_size_crosstab(&graph, &cities)?;
    let spec = network::specialisation_classify(&graph, &cities, cfg.min_share)?;
    let mut spec_cities = Table::new(["city", "size", "distinct_sectors", "class"]);
    for c in &spec.cities {
        spec_cities.push(vec![
            c.city.as_str().into(),
            c.size.label().into(),
            c.distinct_sectors.into(),
            c.class.label().into(),
        ]);
    }

    let mut out = Outputs::new(&cfg.out, &cfg.formats);
    out.table("edges", &edges)?;
    out.table("country_matrix", &cm)?;
    out.table("crosstab", &size_table("sector", &crosstab.rows))?;
    out.table("specialisation", &size_table("class", &spec.rows))?;
    out.table("specialisation_cities", &spec_cities)?;
    report_written(&out, stdout);
    Ok(())
}

pub fn synth(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), Failure> {
    let fx = synth::generate(cfg.seed);
    for p in synth::write_fixtures(&cfg.out, &fx)? {
        let _ = writeln!(stdout, "wrote {}", p.display());
    }
    Ok(())
}
