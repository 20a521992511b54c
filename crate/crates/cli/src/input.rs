//! CSV populations and `Vpqr = value` fixtures.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ratiolab::{Family, Means, Population, Powers, Provenance, VTable};

use crate::error::{CliError, CliResult};

const HEADER: [&str; 3] = ["y", "x", "z"];

/// Reads a population from CSV with the exact header `y,x,z`.
pub fn load_population(path: &Path) -> CliResult<Population> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_population(&text)
}

pub fn parse_population(text: &str) -> CliResult<Population> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::input(format!("unreadable header: {e}")))?
        .clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != HEADER {
        let mut sorted = names.clone();
        sorted.sort_unstable();
        return Err(if sorted == ["x", "y", "z"] {
            CliError::input("column order must be y,x,z")
        } else {
            CliError::input(format!(
                "header must be exactly y,x,z (found {} column(s): {})",
                names.len(),
                names.join(",")
            ))
        });
    }
    let (mut y, mut x, mut z) = (Vec::new(), Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::input(format!("row {row}: {e}")))?;
        if record.len() != 3 {
            return Err(CliError::input(format!(
                "row {row}: expected 3 columns, found {}",
                record.len()
            )));
        }
        for (cell, (name, col)) in record
            .iter()
            .zip([("y", &mut y), ("x", &mut x), ("z", &mut z)])
        {
            let value = parse_decimal(cell.trim()).ok_or_else(|| {
                CliError::input(format!(
                    "row {row}, column {name}: '{cell}' is not a finite decimal number"
                ))
            })?;
            col.push(value);
        }
    }
    if y.is_empty() {
        return Err(CliError::input("population has no rows (N = 0)"));
    }
    Population::new(y, x, z).map_err(|e| CliError::from_core("moments", e))
}

/// Plain decimal or scientific notation; rejects `nan`, `inf` and friends.
fn parse_decimal(s: &str) -> Option<f64> {
    let ok = !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
    if !ok {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reference value stated alongside a fixture, e.g. a published table entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RefOrder {
    First,
    Second,
}

#[derive(Clone, Debug)]
pub struct Fixture {
    /// First occurrence of every index; provenance `literal-fixture`.
    pub table: VTable,
    /// Every value seen per index, with its 1-based line number.
    pub candidates: BTreeMap<Powers, Vec<(usize, f64)>>,
    pub warnings: Vec<String>,
    pub references: BTreeMap<(Family, RefOrder), f64>,
    /// Whether `Ybar` was declared; without it MSE values are relative.
    pub has_ybar: bool,
}

impl Fixture {
    pub fn duplicates(&self) -> impl Iterator<Item = (Powers, &[(usize, f64)])> + '_ {
        self.candidates
            .iter()
            .filter(|(_, c)| c.len() > 1)
            .map(|(p, c)| (*p, c.as_slice()))
    }
}

pub fn load_v_fixture(path: &Path) -> CliResult<Fixture> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_v_fixture(&text)
}

fn parse_index(key: &str) -> Option<Powers> {
    let digits = key.strip_prefix('V')?.as_bytes();
    if digits.len() != 3 || !digits.iter().all(u8::is_ascii_digit) {
        return None;
    }
    let p = Powers::new(digits[0] - b'0', digits[1] - b'0', digits[2] - b'0');
    (1..=4).contains(&p.degree()).then_some(p)
}

fn parse_reference(key: &str) -> Option<(Family, RefOrder)> {
    let mut parts = key.split('.');
    if parts.next()? != "ref" {
        return None;
    }
    let family = Family::parse(parts.next()?)?;
    let order = match parts.next()? {
        "first" => RefOrder::First,
        "second" => RefOrder::Second,
        _ => return None,
    };
    parts.next().is_none().then_some((family, order))
}

pub fn parse_v_fixture(text: &str) -> CliResult<Fixture> {
    let mut warnings = Vec::new();
    let mut candidates: BTreeMap<Powers, Vec<(usize, f64)>> = BTreeMap::new();
    let mut references = BTreeMap::new();
    let mut means: [Option<f64>; 3] = [None; 3];
    let mut sizes: [Option<usize>; 2] = [None; 2];

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let malformed = |why: &str| format!("line {line_no}: {why}: {raw}");
        let Some((key, value)) = line.split_once('=') else {
            warnings.push(malformed("expected `key = value`"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(number) = parse_decimal(value) else {
            warnings.push(malformed("malformed value, entry skipped"));
            continue;
        };
        if let Some(p) = parse_index(key) {
            candidates.entry(p).or_default().push((line_no, number));
        } else if let Some(r) = parse_reference(key) {
            references.insert(r, number);
        } else {
            let slot = match key {
                "Ybar" => Some(&mut means[0]),
                "Xbar" => Some(&mut means[1]),
                "Zbar" => Some(&mut means[2]),
                _ => None,
            };
            if let Some(slot) = slot {
                *slot = Some(number);
                continue;
            }
            let size = match key {
                "N" => Some(&mut sizes[0]),
                "n" => Some(&mut sizes[1]),
                _ => None,
            };
            match size {
                Some(slot) if number >= 1.0 && number.fract() == 0.0 => {
                    *slot = Some(number as usize)
                }
                Some(_) => warnings.push(malformed("sizes must be positive integers")),
                None => warnings.push(malformed("unknown key")),
            }
        }
    }
    if candidates.is_empty() {
        return Err(CliError::input("fixture contains no Vpqr entries"));
    }
    let has_ybar = means[0].is_some();
    if !has_ybar {
        warnings.push("Ybar not declared; MSE values are relative to Ybar = 1".to_string());
    }
    let m = Means {
        y: means[0].unwrap_or(1.0),
        x: means[1].unwrap_or(1.0),
        z: means[2].unwrap_or(1.0),
    };
    let mut table = VTable::new(m, sizes[0], sizes[1]);
    for (p, values) in &candidates {
        table.set(*p, values[0].1, Provenance::LiteralFixture);
        if values.len() > 1 {
            let listed = values
                .iter()
                .map(|(l, v)| format!("line {l}: {v}"))
                .collect::<Vec<_>>()
                .join(", ");
            warnings.push(format!(
                "V{p} given {} times ({listed}); using line {}, resolve manually",
                values.len(),
                values[0].0
            ));
        }
    }
    Ok(Fixture {
        table,
        candidates,
        warnings,
        references,
        has_ybar,
    })
}
