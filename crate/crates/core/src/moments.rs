//! Population moments and SRSWOR expectation terms.
//!
//! Index triples are always ordered `(y, x, z)`: `C_pqr` is the sum over units
//! of `(y-Ȳ)^p (x-X̄)^q (z-Z̄)^r` and `V_pqr = E[e0^p e1^q e2^r]` with
//! `e0 = (ȳ-Ȳ)/Ȳ`, `e1 = (x̄-X̄)/X̄`, `e2 = (z̄-Z̄)/Z̄`.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;

use crate::combin::{binomial, Combinations};
use crate::error::{Error, Result};
use crate::simulation::{run_shards, srswor_sample, McOptions, RunningStats};

/// Exponent triple `(y, x, z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Powers {
    pub y: u8,
    pub x: u8,
    pub z: u8,
}

impl Powers {
    pub const fn new(y: u8, x: u8, z: u8) -> Self {
        Self { y, x, z }
    }

    pub const fn degree(self) -> u32 {
        self.y as u32 + self.x as u32 + self.z as u32
    }

    /// Every triple with `1 <= degree <= max`, in lexicographic order.
    pub fn up_to_degree(max: u32) -> Vec<Powers> {
        let m = max as u8;
        let mut out = Vec::new();
        for y in 0..=m {
            for x in 0..=m - y {
                for z in 0..=m - y - x {
                    let p = Powers::new(y, x, z);
                    if p.degree() >= 1 {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

/// Exponents add when monomials multiply.
impl std::ops::Add for Powers {
    type Output = Powers;

    fn add(self, other: Powers) -> Powers {
        Powers::new(self.y + other.y, self.x + other.x, self.z + other.z)
    }
}

impl fmt::Display for Powers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.y, self.x, self.z)
    }
}

/// The sixteen expectation terms that have closed forms.
pub const CLOSED_FORM_INDICES: [Powers; 16] = [
    Powers::new(2, 0, 0),
    Powers::new(0, 2, 0),
    Powers::new(0, 0, 2),
    Powers::new(1, 1, 0),
    Powers::new(0, 1, 1),
    Powers::new(1, 0, 1),
    Powers::new(2, 1, 0),
    Powers::new(2, 0, 1),
    Powers::new(0, 2, 1),
    Powers::new(1, 2, 0),
    Powers::new(0, 1, 2),
    Powers::new(1, 0, 2),
    Powers::new(0, 3, 0),
    Powers::new(0, 3, 1),
    Powers::new(0, 1, 3),
    Powers::new(1, 3, 0),
];

pub fn has_closed_form(p: Powers) -> bool {
    CLOSED_FORM_INDICES.contains(&p)
}

/// Population means `(Ȳ, X̄, Z̄)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Means {
    pub y: f64,
    pub x: f64,
    pub z: f64,
}

impl Means {
    /// `Ȳ^p X̄^q Z̄^r`, failing on a zero mean raised to a positive power.
    pub fn normalizer(&self, p: Powers) -> Result<f64> {
        let mut acc = 1.0;
        for (mean, power, name) in [(self.y, p.y, 'y'), (self.x, p.x, 'x'), (self.z, p.z, 'z')] {
            if power > 0 {
                if mean == 0.0 {
                    return Err(Error::ZeroMean(name));
                }
                acc *= mean.powi(power as i32);
            }
        }
        Ok(acc)
    }

    pub fn require_nonzero(&self) -> Result<()> {
        self.normalizer(Powers::new(1, 1, 1)).map(|_| ())
    }
}

/// A finite population of `N` units carrying the study variable `y` and the
/// auxiliaries `x` and `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    y: Vec<f64>,
    x: Vec<f64>,
    z: Vec<f64>,
}

impl Population {
    pub fn new(y: Vec<f64>, x: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        if y.len() != x.len() || y.len() != z.len() {
            return Err(Error::LengthMismatch {
                y: y.len(),
                x: x.len(),
                z: z.len(),
            });
        }
        if y.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        for (column, values) in [('y', &y), ('x', &x), ('z', &z)] {
            if let Some(unit) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { column, unit });
            }
        }
        Ok(Self { y, x, z })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn means(&self) -> Means {
        population_means(self)
    }

    /// Copy with every column multiplied by its own factor.
    pub fn scaled(&self, cy: f64, cx: f64, cz: f64) -> Result<Population> {
        Population::new(
            self.y.iter().map(|v| v * cy).collect(),
            self.x.iter().map(|v| v * cx).collect(),
            self.z.iter().map(|v| v * cz).collect(),
        )
    }

    /// Deviations from the column means, one vector per variable.
    pub(crate) fn centered(&self) -> [Vec<f64>; 3] {
        let m = self.means();
        [
            self.y.iter().map(|v| v - m.y).collect(),
            self.x.iter().map(|v| v - m.x).collect(),
            self.z.iter().map(|v| v - m.z).collect(),
        ]
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn population_means(pop: &Population) -> Means {
    Means {
        y: mean(&pop.y),
        x: mean(&pop.x),
        z: mean(&pop.z),
    }
}

/// `C_pqr`: sum over units of centered deviation products (two-pass).
pub fn central_moment(pop: &Population, p: Powers) -> f64 {
    let [dy, dx, dz] = pop.centered();
    (0..pop.len())
        .map(|i| dy[i].powi(p.y as i32) * dx[i].powi(p.x as i32) * dz[i].powi(p.z as i32))
        .sum()
}

/// Central cross-moments `C_pqr` for every `p+q+r <= 4`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    units: usize,
    entries: BTreeMap<Powers, f64>,
}

impl MomentTable {
    pub fn from_population(pop: &Population) -> Self {
        let [dy, dx, dz] = pop.centered();
        let mut entries = BTreeMap::new();
        entries.insert(Powers::new(0, 0, 0), pop.len() as f64);
        for p in Powers::up_to_degree(4) {
            let c = (0..pop.len())
                .map(|i| dy[i].powi(p.y as i32) * dx[i].powi(p.x as i32) * dz[i].powi(p.z as i32))
                .sum();
            entries.insert(p, c);
        }
        Self {
            units: pop.len(),
            entries,
        }
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn get(&self, p: Powers) -> Option<f64> {
        self.entries.get(&p).copied()
    }

    /// Per-unit moment `C_pqr / N`.
    pub fn per_unit(&self, p: Powers) -> Result<f64> {
        self.get(p)
            .map(|c| c / self.units as f64)
            .ok_or(Error::MissingEntry(p))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Powers, f64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    /// Line records `p q r value`.
    pub fn records(&self) -> String {
        self.iter()
            .map(|(p, v)| format!("{} {} {} {:e} population\n", p.y, p.x, p.z, v))
            .collect()
    }
}

/// Finite-population coefficients that turn per-unit central moments into
/// moments of SRSWOR sample means.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LCoefficients {
    pub population: usize,
    pub sample: usize,
    l1: Ratio<i128>,
    l2: Option<Ratio<i128>>,
    l3: Option<Ratio<i128>>,
    l4: Option<Ratio<i128>>,
}

fn ratio_f64(r: Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl LCoefficients {
    pub fn l1(&self) -> f64 {
        ratio_f64(self.l1)
    }

    pub fn l2(&self) -> Result<f64> {
        self.l2.map(ratio_f64).ok_or(Error::TooFewUnits {
            population: self.population,
            needed: 3,
        })
    }

    pub fn l3(&self) -> Result<f64> {
        self.l3.map(ratio_f64).ok_or(Error::TooFewUnits {
            population: self.population,
            needed: 4,
        })
    }

    pub fn l4(&self) -> Result<f64> {
        self.l4.map(ratio_f64).ok_or(Error::TooFewUnits {
            population: self.population,
            needed: 4,
        })
    }

    pub fn l1_exact(&self) -> Ratio<i128> {
        self.l1
    }

    pub fn l2_exact(&self) -> Option<Ratio<i128>> {
        self.l2
    }

    pub fn l3_exact(&self) -> Option<Ratio<i128>> {
        self.l3
    }

    pub fn l4_exact(&self) -> Option<Ratio<i128>> {
        self.l4
    }
}

/// Exact `L1..L4` for population size `population` and sample size `sample`.
///
/// `L2` needs `N >= 3` and `L3`, `L4` need `N >= 4` unless `n = N`, where every
/// coefficient is zero. Missing coefficients surface as errors from the
/// accessors, so second-order-only callers still work on tiny populations.
pub fn l_coefficients(population: usize, sample: usize) -> Result<LCoefficients> {
    if sample == 0 || sample > population {
        return Err(Error::InvalidSampleSize {
            n: sample,
            population,
        });
    }
    let zero = Ratio::from_integer(0);
    if sample == population {
        return Ok(LCoefficients {
            population,
            sample,
            l1: zero,
            l2: Some(zero),
            l3: Some(zero),
            l4: Some(zero),
        });
    }
    let big_n = population as i128;
    let n = sample as i128;
    let l1 = Ratio::new(big_n - n, (big_n - 1) * n);
    let l2 = (population >= 3).then(|| {
        Ratio::new(
            (big_n - n) * (big_n - 2 * n),
            (big_n - 1) * (big_n - 2) * n * n,
        )
    });
    let (l3, l4) = if population >= 4 {
        let denom = (big_n - 1) * (big_n - 2) * (big_n - 3) * n * n * n;
        (
            Some(Ratio::new(
                (big_n - n) * (big_n * big_n + big_n - 6 * n * big_n + 6 * n * n),
                denom,
            )),
            Some(Ratio::new(
                big_n * (big_n - n) * (big_n - n - 1) * (n - 1),
                denom,
            )),
        )
    } else {
        (None, None)
    };
    Ok(LCoefficients {
        population,
        sample,
        l1,
        l2,
        l3,
        l4,
    })
}

/// Closed-form `V_pqr` for the sixteen indices that have one.
pub fn v_closed_form(
    moments: &MomentTable,
    l: &LCoefficients,
    means: &Means,
    index: Powers,
) -> Result<f64> {
    if !has_closed_form(index) {
        return Err(Error::NoClosedForm(index));
    }
    let norm = means.normalizer(index)?;
    let mu = |p: Powers| moments.per_unit(p);
    let raw = match index.degree() {
        2 => l.l1() * mu(index)?,
        3 => l.l2()? * mu(index)?,
        _ => {
            // one variable cubed (a), one linear (b): L3 μ_{aaab} + 3 L4 μ_aa μ_ab
            let (cubed, single) = split_three_one(index);
            let aa = cubed + cubed;
            let ab = cubed + single;
            l.l3()? * mu(index)? + 3.0 * l.l4()? * mu(aa)? * mu(ab)?
        }
    };
    Ok(raw / norm)
}

fn unit_powers(p: Powers) -> [(u8, Powers); 3] {
    [
        (p.y, Powers::new(1, 0, 0)),
        (p.x, Powers::new(0, 1, 0)),
        (p.z, Powers::new(0, 0, 1)),
    ]
}

fn split_three_one(p: Powers) -> (Powers, Powers) {
    let units = unit_powers(p);
    let cubed = units.iter().find(|(k, _)| *k == 3).map(|(_, u)| *u);
    let single = units.iter().find(|(k, _)| *k == 1).map(|(_, u)| *u);
    match (cubed, single) {
        (Some(a), Some(b)) => (a, b),
        _ => unreachable!("closed-form fourth-order index {p} is not of 3+1 shape"),
    }
}

/// Where a V-table value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    ClosedForm,
    Enumerated,
    MonteCarlo,
    LiteralFixture,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::Enumerated => "enumerated",
            Provenance::MonteCarlo => "monte-carlo",
            Provenance::LiteralFixture => "literal-fixture",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VEntry {
    pub value: f64,
    pub provenance: Provenance,
    /// Monte Carlo standard error; `None` for exact values.
    pub std_error: Option<f64>,
}

impl VEntry {
    pub fn exact(value: f64, provenance: Provenance) -> Self {
        Self {
            value,
            provenance,
            std_error: None,
        }
    }
}

/// Oracle settings shared by the V-table builder and the estimator simulator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    /// Largest `C(N, n)` that is enumerated exhaustively.
    pub budget: u128,
    /// Fallback Monte Carlo settings used above the budget.
    pub monte_carlo: McOptions,
}

pub const DEFAULT_BUDGET: u128 = 2_000_000;

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            monte_carlo: McOptions::default(),
        }
    }
}

/// `E[e0^p e1^q e2^r]` from the sampling design itself: full enumeration when
/// `C(N, n)` fits the budget, seeded Monte Carlo otherwise.
pub fn v_exact(
    pop: &Population,
    n: usize,
    index: Powers,
    oracle: &OracleOptions,
) -> Result<VEntry> {
    Ok(v_exact_many(pop, n, &[index], oracle)?[0])
}

/// Same as [`v_exact`] for several indices in one pass over the samples.
pub fn v_exact_many(
    pop: &Population,
    n: usize,
    indices: &[Powers],
    oracle: &OracleOptions,
) -> Result<Vec<VEntry>> {
    let big_n = pop.len();
    if n == 0 || n > big_n {
        return Err(Error::InvalidSampleSize {
            n,
            population: big_n,
        });
    }
    let means = pop.means();
    means.require_nonzero()?;
    let centered = pop.centered();
    let rel_errors = |subset: &[usize]| -> [f64; 3] {
        let mut e = [0.0; 3];
        for (k, (col, m)) in centered.iter().zip([means.y, means.x, means.z]).enumerate() {
            let s: f64 = subset.iter().map(|&i| col[i]).sum();
            e[k] = s / n as f64 / m;
        }
        e
    };
    let monomials = |e: [f64; 3], out: &mut [f64]| {
        for (slot, p) in out.iter_mut().zip(indices) {
            *slot = e[0].powi(p.y as i32) * e[1].powi(p.x as i32) * e[2].powi(p.z as i32);
        }
    };

    let subsets = binomial(big_n, n);
    if subsets <= oracle.budget {
        let mut sums = vec![0.0; indices.len()];
        let mut buf = vec![0.0; indices.len()];
        let mut it = Combinations::new(big_n, n);
        while let Some(s) = it.next_subset() {
            monomials(rel_errors(s), &mut buf);
            for (acc, v) in sums.iter_mut().zip(&buf) {
                *acc += v;
            }
        }
        let count = subsets as f64;
        Ok(sums
            .into_iter()
            .map(|s| VEntry::exact(s / count, Provenance::Enumerated))
            .collect())
    } else {
        let mc = oracle.monte_carlo;
        if mc.reps == 0 {
            return Err(Error::ZeroReplications);
        }
        let k = indices.len();
        let shards = run_shards(mc.reps, mc.seed, mc.workers, |rng, reps| {
            let mut stats = vec![RunningStats::default(); k];
            let mut buf = vec![0.0; k];
            for _ in 0..reps {
                let s = srswor_sample(rng, big_n, n).expect("validated sample size");
                monomials(rel_errors(&s), &mut buf);
                for (st, v) in stats.iter_mut().zip(&buf) {
                    st.push(*v);
                }
            }
            stats
        });
        let mut total = vec![RunningStats::default(); k];
        for shard in &shards {
            for (t, s) in total.iter_mut().zip(shard) {
                t.merge(s);
            }
        }
        Ok(total
            .into_iter()
            .map(|s| VEntry {
                value: s.mean(),
                provenance: Provenance::MonteCarlo,
                std_error: Some(s.std_error()),
            })
            .collect())
    }
}

/// How [`build_v_table`] fills entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VPolicy {
    /// Closed forms for the sixteen listed indices, the exact oracle elsewhere.
    ClosedFormWhereListed,
    /// Exact oracle for every index.
    EnumerateAll,
}

/// Normalized SRSWOR expectation terms for one `(N, n)` design.
#[derive(Clone, Debug, PartialEq)]
pub struct VTable {
    means: Means,
    population: Option<usize>,
    sample: Option<usize>,
    entries: BTreeMap<Powers, VEntry>,
}

impl VTable {
    pub fn new(means: Means, population: Option<usize>, sample: Option<usize>) -> Self {
        Self {
            means,
            population,
            sample,
            entries: BTreeMap::new(),
        }
    }

    pub fn means(&self) -> &Means {
        &self.means
    }

    pub fn population(&self) -> Option<usize> {
        self.population
    }

    pub fn sample(&self) -> Option<usize> {
        self.sample
    }

    pub fn insert(&mut self, p: Powers, entry: VEntry) {
        self.entries.insert(p, entry);
    }

    pub fn set(&mut self, p: Powers, value: f64, provenance: Provenance) {
        self.insert(p, VEntry::exact(value, provenance));
    }

    pub fn entry(&self, p: Powers) -> Option<&VEntry> {
        self.entries.get(&p)
    }

    /// `V_pqr`. `V000 = 1` and first-order terms default to their exact value 0.
    pub fn get(&self, p: Powers) -> Result<f64> {
        if let Some(e) = self.entries.get(&p) {
            return Ok(e.value);
        }
        match p.degree() {
            0 => Ok(1.0),
            1 => Ok(0.0),
            _ => Err(Error::MissingEntry(p)),
        }
    }

    /// Like [`VTable::get`] but absent entries read as zero.
    pub fn get_or_zero(&self, p: Powers) -> f64 {
        self.get(p).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Powers, &VEntry)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Short summary such as `closed-form:16 enumerated:18`.
    pub fn provenance_summary(&self) -> String {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for e in self.entries.values() {
            *counts.entry(e.provenance.to_string()).or_default() += 1;
        }
        counts
            .iter()
            .map(|(k, v)| format!("{k}:{v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Line records `p q r value provenance`.
    pub fn records(&self) -> String {
        self.iter()
            .map(|(p, e)| format!("{} {} {} {:e} {}\n", p.y, p.x, p.z, e.value, e.provenance))
            .collect()
    }
}

/// Every `V_pqr` with `1 <= p+q+r <= 4` for samples of size `n`.
pub fn build_v_table(
    pop: &Population,
    n: usize,
    policy: VPolicy,
    oracle: &OracleOptions,
) -> Result<VTable> {
    let big_n = pop.len();
    if n == 0 || n > big_n {
        return Err(Error::InvalidSampleSize {
            n,
            population: big_n,
        });
    }
    let means = pop.means();
    means.require_nonzero()?;
    let mut table = VTable::new(means, Some(big_n), Some(n));
    let all = Powers::up_to_degree(4);

    let oracle_indices: Vec<Powers> = match policy {
        VPolicy::EnumerateAll => all.clone(),
        VPolicy::ClosedFormWhereListed => {
            let moments = MomentTable::from_population(pop);
            let l = l_coefficients(big_n, n)?;
            for &p in &all {
                if p.degree() == 1 {
                    table.set(p, 0.0, Provenance::ClosedForm);
                } else if has_closed_form(p) {
                    table.set(
                        p,
                        v_closed_form(&moments, &l, &means, p)?,
                        Provenance::ClosedForm,
                    );
                }
            }
            all.iter()
                .copied()
                .filter(|p| p.degree() > 1 && !has_closed_form(*p))
                .collect()
        }
    };
    let values = v_exact_many(pop, n, &oracle_indices, oracle)?;
    for (p, e) in oracle_indices.into_iter().zip(values) {
        table.insert(p, e);
    }
    Ok(table)
}
