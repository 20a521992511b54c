//! Report assembly and rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ratiolab::approximation::{
    first_order_bias, first_order_mse, optimal_parameters, regression_min_mse, second_order_mse,
    FormulaMode, OptimumMethod,
};
use ratiolab::combin::binomial;
use ratiolab::moments::{build_v_table, OracleOptions, VPolicy};
use ratiolab::simulation::{simulate, McOptions, SimMethod, SimResult};
use ratiolab::{EstimatorSpec, Family, Population, Powers, Provenance, VTable};

use crate::config::{DataSource, ModeSelection, ParamPolicy, RunConfig};
use crate::error::{CliError, CliResult};
use crate::input::{load_population, load_v_fixture, RefOrder};

/// A report value, or the reason it could not be computed.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub value: Option<f64>,
    pub provenance: Provenance,
    pub note: Option<String>,
}

impl Cell {
    fn value(value: f64, provenance: Provenance) -> Self {
        Self {
            value: Some(value),
            provenance,
            note: None,
        }
    }

    fn missing(provenance: Provenance, why: String) -> Self {
        Self {
            value: None,
            provenance,
            note: Some(why),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub family: Family,
    /// Parameters every cell of the row was computed at.
    pub spec: Option<EstimatorSpec>,
    /// The other optimizer's answer, when it differs.
    pub alternative: Option<(OptimumMethod, EstimatorSpec)>,
    pub mse1: Cell,
    pub bias1: BTreeMap<Mode, Cell>,
    pub mse2: BTreeMap<Mode, Cell>,
    pub exact: Option<(Cell, Cell)>,
    pub simulation: Option<SimResult>,
    pub references: BTreeMap<RefOrder, f64>,
}

/// Orderable wrapper so modes can key maps in a fixed order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    AsPublished,
    ReDerived,
}

impl Mode {
    fn formula(self) -> FormulaMode {
        match self {
            Mode::AsPublished => FormulaMode::AsPublished,
            Mode::ReDerived => FormulaMode::ReDerived,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Mode::AsPublished => "as-published",
            Mode::ReDerived => "re-derived",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MseReport {
    pub source: String,
    pub population: Option<usize>,
    pub n: Option<usize>,
    pub ybar: f64,
    pub policy: ParamPolicy,
    pub modes: Vec<Mode>,
    pub table_summary: String,
    pub regression: Cell,
    pub rows: Vec<Row>,
    pub warnings: Vec<String>,
    pub footnotes: Vec<String>,
}

/// Errata-ledger ids behind each family's printed expressions.
fn errata(family: Family) -> (&'static str, Option<&'static str>, &'static str) {
    // (first-order bias, published optimum, second-order MSE)
    match family {
        Family::T1 => ("E1", None, "E10"),
        Family::T2 => ("E2", Some("E3"), "E11"),
        Family::T3 => ("E4", Some("E5"), "E12"),
        Family::T4 => ("E6", None, "E13"),
        Family::T5 => ("E7", Some("E8"), "E9, E14"),
    }
}

fn rank(p: Provenance) -> u8 {
    match p {
        Provenance::ClosedForm => 0,
        Provenance::Enumerated => 1,
        Provenance::MonteCarlo => 2,
        Provenance::LiteralFixture => 3,
    }
}

/// Least exact provenance among table entries up to `degree`.
fn provenance_up_to(v: &VTable, degree: u32) -> Provenance {
    v.iter()
        .filter(|(p, _)| p.degree() <= degree)
        .map(|(_, e)| e.provenance)
        .max_by_key(|p| rank(*p))
        .unwrap_or(Provenance::ClosedForm)
}

/// Errors that leave a cell empty instead of aborting the run.
fn soft(err: &ratiolab::Error) -> bool {
    matches!(
        err,
        ratiolab::Error::UndefinedSymbol(_) | ratiolab::Error::MissingEntry(_)
    )
}

fn cell(
    result: ratiolab::Result<f64>,
    provenance: Provenance,
    module: &'static str,
) -> CliResult<Cell> {
    match result {
        Ok(v) => Ok(Cell::value(v, provenance)),
        Err(e) if soft(&e) => Ok(Cell::missing(provenance, e.to_string())),
        Err(e) => Err(CliError::from_core(module, e)),
    }
}

fn specs_differ(a: &EstimatorSpec, b: &EstimatorSpec) -> bool {
    a.params()
        .iter()
        .zip(b.params())
        .any(|((_, x), (_, y))| (x - y).abs() > 1e-9 * x.abs().max(y.abs()).max(1.0))
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

struct Loaded {
    source: String,
    table: VTable,
    population: Option<Population>,
    warnings: Vec<String>,
    references: BTreeMap<(Family, RefOrder), f64>,
}

fn load(cfg: &RunConfig) -> CliResult<Loaded> {
    match &cfg.source {
        DataSource::Fixture(path) => {
            let mut fixture = load_v_fixture(path)?;
            let mut warnings = std::mem::take(&mut fixture.warnings);
            let mut table = fixture.table;
            // higher-order terms the fixture omits are read as zero; powers of e0 above two
            // never enter a second-order MSE
            for p in Powers::up_to_degree(4) {
                if p.degree() >= 3 && p.y <= 2 && table.entry(p).is_none() {
                    table.set(p, 0.0, Provenance::LiteralFixture);
                    warnings.push(format!("V{p} absent from fixture; read as 0"));
                }
            }
            Ok(Loaded {
                source: format!("fixture {}", path.display()),
                table,
                population: None,
                warnings,
                references: fixture.references,
            })
        }
        DataSource::Csv(path) => {
            let pop = load_population(path)?;
            let n = cfg.n.expect("validated: n given with CSV data");
            let big_n = pop.len();
            if n > big_n {
                return Err(CliError::config(format!("n = {n} exceeds N = {big_n}")));
            }
            if binomial(big_n, n) > cfg.budget && cfg.seed.is_none() {
                return Err(CliError::config(format!(
                    "C({big_n}, {n}) exceeds the enumeration budget, so Monte Carlo runs: a seed is required"
                )));
            }
            let oracle = OracleOptions {
                budget: cfg.budget,
                monte_carlo: mc_options(cfg),
            };
            let table = build_v_table(&pop, n, VPolicy::ClosedFormWhereListed, &oracle)
                .map_err(|e| CliError::from_core("moments", e))?;
            Ok(Loaded {
                source: format!("population {}", path.display()),
                table,
                population: Some(pop),
                warnings: Vec::new(),
                references: BTreeMap::new(),
            })
        }
    }
}

fn mc_options(cfg: &RunConfig) -> McOptions {
    McOptions {
        reps: cfg.reps,
        seed: cfg.seed.unwrap_or(0),
        workers: cfg.workers,
    }
}

pub fn run_report(cfg: &RunConfig) -> CliResult<MseReport> {
    let loaded = load(cfg)?;
    let v = &loaded.table;
    let modes = match cfg.mode {
        ModeSelection::AsPublished => vec![Mode::AsPublished],
        ModeSelection::ReDerived => vec![Mode::ReDerived],
        ModeSelection::Both => vec![Mode::AsPublished, Mode::ReDerived],
    };
    let first_prov = provenance_up_to(v, 2);
    let second_prov = provenance_up_to(v, 4);
    let mut footnotes = Vec::new();

    let regression = cell(regression_min_mse(v), first_prov, "approximation").or_else(|e| {
        if e.kind == crate::error::ErrorKind::Numerical {
            Ok(Cell::missing(first_prov, e.message))
        } else {
            Err(e)
        }
    })?;

    let mut rows = Vec::new();
    for &family in &cfg.estimators {
        let template = cfg.spec_for(family)?;
        let (spec, alternative) = match cfg.policy {
            ParamPolicy::Explicit => (Ok(template), None),
            ParamPolicy::Optimal(method) => {
                let chosen = optimal_parameters(&template, v, method).map(|o| {
                    if o.non_unique {
                        footnotes.push(format!(
                            "{family}: optimum is not unique; minimum-norm choice shown"
                        ));
                    }
                    o.spec
                });
                let other = match method {
                    OptimumMethod::PublishedFormula => OptimumMethod::QuadraticSolve,
                    OptimumMethod::QuadraticSolve => OptimumMethod::PublishedFormula,
                };
                let alt = match (&chosen, optimal_parameters(&template, v, other)) {
                    (Ok(c), Ok(o)) if specs_differ(c, &o.spec) => Some((other, o.spec)),
                    _ => None,
                };
                (chosen, alt)
            }
        };
        let spec = match spec {
            Ok(s) => s,
            Err(e) if soft(&e) => {
                let why = format!("parameters unavailable: {e}");
                rows.push(Row {
                    family,
                    spec: None,
                    alternative: None,
                    mse1: Cell::missing(first_prov, why.clone()),
                    bias1: modes
                        .iter()
                        .map(|m| (*m, Cell::missing(first_prov, why.clone())))
                        .collect(),
                    mse2: modes
                        .iter()
                        .map(|m| (*m, Cell::missing(second_prov, why.clone())))
                        .collect(),
                    exact: None,
                    simulation: None,
                    references: references_for(&loaded, family),
                });
                continue;
            }
            Err(e) => return Err(CliError::from_core("approximation", e)),
        };

        let mse1 = cell(first_order_mse(&spec, v), first_prov, "approximation")?;
        let mut bias1 = BTreeMap::new();
        let mut mse2 = BTreeMap::new();
        for &m in &modes {
            bias1.insert(
                m,
                cell(
                    first_order_bias(&spec, v, m.formula(), &cfg.symbols),
                    first_prov,
                    "approximation",
                )?,
            );
            mse2.insert(
                m,
                cell(
                    second_order_mse(&spec, v, m.formula(), &cfg.symbols),
                    second_prov,
                    "approximation",
                )?,
            );
        }
        let (e_bias, e_opt, e_mse2) = errata(family);
        if let (Some(a), Some(b)) = (
            bias1.get(&Mode::AsPublished).and_then(|c| c.value),
            bias1.get(&Mode::ReDerived).and_then(|c| c.value),
        ) {
            if relative_gap(a, b) > 1e-9 {
                footnotes.push(format!(
                    "{family}: first-order bias as-published {} vs re-derived {}; see {e_bias}",
                    num(a),
                    num(b)
                ));
            }
        }
        if let (Some(a), Some(b)) = (
            mse2.get(&Mode::AsPublished).and_then(|c| c.value),
            mse2.get(&Mode::ReDerived).and_then(|c| c.value),
        ) {
            if relative_gap(a, b) > 1e-9 {
                footnotes.push(format!(
                    "{family}: second-order MSE as-published {} vs re-derived {}; see {e_mse2}",
                    num(a),
                    num(b)
                ));
            }
        }
        if let (Some(m), Some(r)) = (mse1.value, regression.value) {
            if matches!(cfg.policy, ParamPolicy::Optimal(_)) && relative_gap(m, r) > 1e-6 {
                let mut ids = Vec::new();
                if cfg.policy == ParamPolicy::Optimal(OptimumMethod::PublishedFormula) {
                    ids.extend(e_opt);
                }
                if matches!(family, Family::T2 | Family::T3 | Family::T5) {
                    ids.push("E16");
                }
                footnotes.push(format!(
                    "{family}: first-order MSE at the optimum {} differs from the regression minimum {}; see {}",
                    num(m),
                    num(r),
                    ids.join(", ")
                ));
            }
        }
        if let Some((method, alt)) = &alternative {
            footnotes.push(format!("{family}: {method} optimum differs: {alt}"));
        }

        let (exact, simulation) = match &loaded.population {
            Some(pop) => {
                let n = cfg.n.expect("validated: n given with CSV data");
                let r = simulate(pop, &spec, n, Some(cfg.budget), &mc_options(cfg))
                    .map_err(|e| CliError::from_core("simulation", e))?;
                let prov = match r.method {
                    SimMethod::Enumeration => Provenance::Enumerated,
                    SimMethod::MonteCarlo => Provenance::MonteCarlo,
                };
                if r.method == SimMethod::MonteCarlo {
                    footnotes.push(format!(
                        "{family}: Monte Carlo, {} draws, seed {}, rng {}, se(mse) {}, se(bias) {}, failed draws {}",
                        r.samples,
                        r.seed.unwrap_or_default(),
                        r.rng.unwrap_or("-"),
                        num(r.mse_se.unwrap_or(f64::NAN)),
                        num(r.bias_se.unwrap_or(f64::NAN)),
                        r.failures
                    ));
                }
                (
                    Some((Cell::value(r.mse, prov), Cell::value(r.bias, prov))),
                    Some(r),
                )
            }
            None => (None, None),
        };

        rows.push(Row {
            family,
            spec: Some(spec),
            alternative,
            mse1,
            bias1,
            mse2,
            exact,
            simulation,
            references: references_for(&loaded, family),
        });
    }

    for row in &rows {
        let notes = std::iter::once(&row.mse1)
            .chain(row.bias1.values())
            .chain(row.mse2.values())
            .filter_map(|c| c.note.as_ref());
        for note in notes {
            let line = format!("{}: n/a, {note}", row.family);
            if !footnotes.contains(&line) {
                footnotes.push(line);
            }
        }
    }

    Ok(MseReport {
        source: loaded.source,
        population: v.population(),
        n: cfg.n.or(v.sample()),
        ybar: v.means().y,
        policy: cfg.policy,
        modes,
        table_summary: v.provenance_summary(),
        regression,
        rows,
        warnings: loaded.warnings,
        footnotes,
    })
}

fn references_for(loaded: &Loaded, family: Family) -> BTreeMap<RefOrder, f64> {
    loaded
        .references
        .iter()
        .filter(|((f, _), _)| *f == family)
        .map(|((_, o), v)| (*o, *v))
        .collect()
}

/// Fixed-width numeric formatting shared by the table and the records.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e7).contains(&a) {
        format!("{v:.6}")
    } else {
        format!("{v:.6e}")
    }
}

fn tag(p: Provenance) -> &'static str {
    match p {
        Provenance::ClosedForm => "cf",
        Provenance::Enumerated => "en",
        Provenance::MonteCarlo => "mc",
        Provenance::LiteralFixture => "lit",
    }
}

fn show(c: &Cell) -> String {
    match c.value {
        Some(v) => format!("{} [{}]", num(v), tag(c.provenance)),
        None => format!("n/a [{}]", tag(c.provenance)),
    }
}

fn policy_label(p: ParamPolicy) -> String {
    match p {
        ParamPolicy::Explicit => "explicit".into(),
        ParamPolicy::Optimal(m) => format!("optimal ({m})"),
    }
}

/// Column headers and cells, in display order.
fn columns(report: &MseReport) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["estimator".to_string(), "mse1".to_string()];
    for m in &report.modes {
        header.push(format!("bias1 {}", m.label()));
    }
    for m in &report.modes {
        header.push(format!("mse2 {}", m.label()));
    }
    let has_exact = report.rows.iter().any(|r| r.exact.is_some());
    if has_exact {
        header.push("exact mse".into());
        header.push("exact bias".into());
    }
    let has_refs = report.rows.iter().any(|r| !r.references.is_empty());
    if has_refs {
        header.push("reference mse1".into());
        header.push("reference mse2".into());
    }
    let body = report
        .rows
        .iter()
        .map(|r| {
            let mut line = vec![r.family.to_string(), show(&r.mse1)];
            line.extend(r.bias1.values().map(show));
            line.extend(r.mse2.values().map(show));
            if has_exact {
                match &r.exact {
                    Some((m, b)) => line.extend([show(m), show(b)]),
                    None => line.extend(["-".to_string(), "-".to_string()]),
                }
            }
            if has_refs {
                for o in [RefOrder::First, RefOrder::Second] {
                    line.push(match r.references.get(&o) {
                        Some(v) => show(&Cell::value(*v, Provenance::LiteralFixture)),
                        None => "-".into(),
                    });
                }
            }
            line
        })
        .collect();
    (header, body)
}

pub fn render_text(report: &MseReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "source: {}", report.source);
    let sizes = match (report.population, report.n) {
        (Some(big), Some(n)) => format!("N={big}, n={n}"),
        (None, Some(n)) => format!("n={n}"),
        (Some(big), None) => format!("N={big}"),
        (None, None) => "sizes not stated".into(),
    };
    let _ = writeln!(out, "design: SRSWOR, {sizes}, Ybar={}", num(report.ybar));
    let _ = writeln!(out, "parameters: {}", policy_label(report.policy));
    let _ = writeln!(out, "V-table: {}", report.table_summary);
    let _ = writeln!(
        out,
        "tags: cf closed-form, en enumerated, mc monte-carlo, lit literal-fixture"
    );
    out.push('\n');

    let width = report
        .rows
        .iter()
        .map(|r| r.family.id().len())
        .max()
        .unwrap_or(2)
        .max("estimator".len());
    for r in &report.rows {
        let params = r
            .spec
            .map(|s| s.to_string())
            .unwrap_or_else(|| "n/a".into());
        let _ = writeln!(out, "{:<width$}  {params}", r.family.id());
    }
    out.push('\n');

    let (header, body) = columns(report);
    let widths: Vec<usize> = (0..header.len())
        .map(|j| {
            body.iter()
                .map(|row| row[j].len())
                .chain(std::iter::once(header[j].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| -> String {
        let mut s = String::new();
        for (j, c) in cells.iter().enumerate() {
            if j == 0 {
                let _ = write!(s, "{:<w$}", c, w = widths[j]);
            } else {
                let _ = write!(s, "  {:>w$}", c, w = widths[j]);
            }
        }
        s.trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(&header));
    let _ = writeln!(
        out,
        "{}",
        "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))
    );
    for row in &body {
        let _ = writeln!(out, "{}", line(row));
    }
    let _ = writeln!(
        out,
        "\nregression minimum (first order): {}",
        show(&report.regression)
    );

    if !report.footnotes.is_empty() {
        out.push_str("\nnotes:\n");
        for (i, f) in report.footnotes.iter().enumerate() {
            let _ = writeln!(out, "  [{}] {f}", i + 1);
        }
    }
    if !report.warnings.is_empty() {
        out.push_str("\nwarnings:\n");
        for w in &report.warnings {
            let _ = writeln!(out, "  {w}");
        }
    }
    out
}

/// One tab-separated record per numeric cell, with a header line.
pub fn render_records(report: &MseReport) -> String {
    let mut out = String::from("estimator\tmetric\tmode\tvalue\tprovenance\n");
    let mut push = |est: &str, metric: &str, mode: &str, c: &Cell| {
        let value = c.value.map(num).unwrap_or_else(|| "NA".into());
        let _ = writeln!(out, "{est}\t{metric}\t{mode}\t{value}\t{}", c.provenance);
    };
    for r in &report.rows {
        let id = r.family.id();
        push(id, "mse1", "-", &r.mse1);
        for (m, c) in &r.bias1 {
            push(id, "bias1", m.label(), c);
        }
        for (m, c) in &r.mse2 {
            push(id, "mse2", m.label(), c);
        }
        if let Some((m, b)) = &r.exact {
            push(id, "mse_exact", "-", m);
            push(id, "bias_exact", "-", b);
        }
        for (o, v) in &r.references {
            let metric = match o {
                RefOrder::First => "reference_mse1",
                RefOrder::Second => "reference_mse2",
            };
            push(
                id,
                metric,
                "-",
                &Cell::value(*v, Provenance::LiteralFixture),
            );
        }
    }
    push("regression", "mse1", "-", &report.regression);
    out
}

pub fn write_records(report: &MseReport, path: &Path) -> CliResult<()> {
    std::fs::write(path, render_records(report))
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}
