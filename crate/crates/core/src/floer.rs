//! ℤ/2 filtration bookkeeping over an intersection table.
//!
//! Each circle contributes the homology of a circle, shifted into the total
//! degrees i′ and i′+1, as one column of a bigraded first page. Differentials
//! of the action filtration have bidegree (−d, d−1); nothing downstream ever
//! computes one, so the survivor analysis works with dimension intervals: a
//! cell that is zero on the first page stays zero forever, and a cell with
//! no possible arrows in or out on any page keeps its dimension. The cells
//! (1, 1) and (r, r+1) are always of that kind, which is what keeps the
//! limit nonzero. An exhaustive enumeration of admissible boundary operators
//! on the matching chain model double-checks the interval argument at small
//! sizes.

use std::collections::BTreeMap;

use crate::error::Error;
use crate::intersections::{compute_circles, IntersectionTable};
use crate::Result;

/// Dimensions over ℤ/2 of a bigraded page, keyed by (column, row).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigradedPage {
    pub entries: BTreeMap<(i64, i64), usize>,
    pub page_number: u32,
}

impl BigradedPage {
    pub fn dimension(&self, cell: (i64, i64)) -> usize {
        self.entries.get(&cell).copied().unwrap_or(0)
    }

    pub fn total_dimension(&self) -> usize {
        self.entries.values().sum()
    }

    /// Cells with nonzero dimension, in key order.
    pub fn support(&self) -> Vec<(i64, i64)> {
        self.entries
            .iter()
            .filter(|&(_, &dim)| dim > 0)
            .map(|(&cell, _)| cell)
            .collect()
    }
}

/// The two shapes of local models for one intersection component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalModelKind {
    /// A transverse point: a single generator.
    TransversePoint,
    /// A clean circle: circle homology, two generators one degree apart.
    CleanCircle,
}

/// Local model of one intersection component, graded by the normalized
/// index of the component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalHfModel {
    pub kind: LocalModelKind,
    pub index_prime: i64,
}

impl LocalHfModel {
    /// Total degrees of the generators.
    pub fn generator_degrees(&self) -> Vec<i64> {
        match self.kind {
            LocalModelKind::TransversePoint => vec![self.index_prime],
            LocalModelKind::CleanCircle => vec![self.index_prime, self.index_prime + 1],
        }
    }
}

/// Graded dimensions of the subquotients of an action filtration. The
/// boundary of any chain-level realization preserves or lowers the
/// filtration level and drops the total degree by one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilteredComplexSpec {
    /// One dimension vector per filtration level, in action order.
    pub levels: Vec<BTreeMap<i64, usize>>,
    /// Whether boundary operators are required to respect the filtration.
    pub filtration_respecting: bool,
}

impl FilteredComplexSpec {
    /// Levels of a clean-intersection table: one circle model per level.
    pub fn from_table(table: &IntersectionTable) -> Result<Self> {
        validate_table(table)?;
        let levels = table
            .circles
            .iter()
            .map(|c| {
                let model =
                    LocalHfModel { kind: LocalModelKind::CleanCircle, index_prime: c.index_prime };
                let mut dims = BTreeMap::new();
                for deg in model.generator_degrees() {
                    *dims.entry(deg).or_insert(0) += 1;
                }
                dims
            })
            .collect();
        Ok(FilteredComplexSpec { levels, filtration_respecting: true })
    }

    pub fn total_dimension(&self) -> usize {
        self.levels.iter().map(|l| l.values().sum::<usize>()).sum()
    }
}

/// Structural validity of a table before any page is built: the circle
/// count matches, actions strictly increase, and the normalized indices
/// start at 2 and step by exactly 2, the signature of a column of clean
/// circles.
fn validate_table(table: &IntersectionTable) -> Result<()> {
    if table.circles.len() != table.r {
        return Err(Error::invalid(format!(
            "table claims {} circles but carries {}",
            table.r,
            table.circles.len()
        )));
    }
    for pair in table.circles.windows(2) {
        if !(pair[1].action > pair[0].action) {
            return Err(Error::invalid(format!(
                "actions must strictly increase; {} then {}",
                pair[0].action, pair[1].action
            )));
        }
        if pair[1].index_prime - pair[0].index_prime != 2 {
            return Err(Error::invalid(format!(
                "index gap {} is not the clean-circle gap 2",
                pair[1].index_prime - pair[0].index_prime
            )));
        }
    }
    if let Some(first) = table.circles.first() {
        if first.index_prime != 2 {
            return Err(Error::invalid(format!(
                "first circle index {} is not in the normalization pinned at 2",
                first.index_prime
            )));
        }
    }
    Ok(())
}

/// First page of the action filtration: column p holds the circle model of
/// the p-th circle at total degrees i′ and i′+1, i.e. cells (p, i′−p) and
/// (p, i′+1−p). In the pinned normalization those are (p, p) and (p, p+1).
pub fn e1_page(table: &IntersectionTable) -> Result<BigradedPage> {
    validate_table(table)?;
    let mut entries = BTreeMap::new();
    for (col, c) in table.circles.iter().enumerate() {
        let p = col as i64 + 1;
        let model = LocalHfModel { kind: LocalModelKind::CleanCircle, index_prime: c.index_prime };
        for deg in model.generator_degrees() {
            *entries.entry((p, deg - p)).or_insert(0usize) += 1;
        }
    }
    Ok(BigradedPage { entries, page_number: 1 })
}

/// Bidegree of the page-d differential. The total degree drops by one on
/// every page, matching a degree-−1 boundary.
pub fn differential_degree(d: u32) -> (i64, i64) {
    assert!(d >= 1, "differentials start on page one");
    (-(d as i64), d as i64 - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Survives,
    PossiblyDies,
}

/// One arrow that could change a cell's dimension on some page.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threat {
    pub page: u32,
    pub from: (i64, i64),
    pub to: (i64, i64),
}

/// Outcome of the interval analysis for one cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivorCertificate {
    pub cell: (i64, i64),
    pub verdict: Verdict,
    /// Every arrow on any page that connects the cell to a possibly-nonzero
    /// cell. Empty exactly when the verdict is `Survives`.
    pub threats: Vec<Threat>,
    /// Last page on which an arrow can connect two cells of the support.
    pub d_max: u32,
}

/// Decides whether a first-page cell is guaranteed to keep its dimension on
/// every later page. Dimensions only ever decrease, so a cell that is zero
/// on the first page is zero on all pages; the cell survives if for every
/// page degree the source and target cells of the differential through it
/// are zero on the first page. `Survives` is a certificate; `PossiblyDies`
/// only means the interval argument is silent.
pub fn survives_to_infinity(
    page: &BigradedPage,
    cell: (i64, i64),
) -> Result<SurvivorCertificate> {
    if page.page_number != 1 {
        return Err(Error::invalid("survivor analysis starts from the first page"));
    }
    if page.dimension(cell) == 0 {
        return Err(Error::Vacuous(format!(
            "cell ({}, {}) is zero on the first page",
            cell.0, cell.1
        )));
    }
    let support = page.support();
    let (mut pmin, mut pmax, mut qmin, mut qmax) =
        (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for &(p, q) in &support {
        pmin = pmin.min(p);
        pmax = pmax.max(p);
        qmin = qmin.min(q);
        qmax = qmax.max(q);
    }
    let d_max = ((pmax - pmin) + (qmax - qmin) + 1).max(1) as u32;
    let mut threats = Vec::new();
    for d in 1..=d_max {
        let (dp, dq) = differential_degree(d);
        let source = (cell.0 - dp, cell.1 - dq);
        let target = (cell.0 + dp, cell.1 + dq);
        if page.dimension(source) > 0 {
            threats.push(Threat { page: d, from: source, to: cell });
        }
        if page.dimension(target) > 0 {
            threats.push(Threat { page: d, from: cell, to: target });
        }
    }
    let verdict = if threats.is_empty() { Verdict::Survives } else { Verdict::PossiblyDies };
    Ok(SurvivorCertificate { cell, verdict, threats, d_max })
}

/// Nonvanishing verdict with the cells that certify it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonvanishingWitness {
    pub nonvanishing: bool,
    pub witnesses: Vec<(i64, i64)>,
}

/// Builds the table and page for winding parameter r and reports whether
/// the limit is forced to be nonzero. The witnesses are the corner cells
/// (1, 1) and (r, r+1); r = 0 is the disjoint configuration with nothing to
/// survive.
pub fn hf_nonvanishing(r: usize) -> Result<NonvanishingWitness> {
    if r == 0 {
        return Ok(NonvanishingWitness { nonvanishing: false, witnesses: Vec::new() });
    }
    let table = compute_circles(r)?;
    let page = e1_page(&table)?;
    let mut witnesses = Vec::new();
    for cell in [(1, 1), (r as i64, r as i64 + 1)] {
        let cert = survives_to_infinity(&page, cell)?;
        if cert.verdict == Verdict::Survives && !witnesses.contains(&cell) {
            witnesses.push(cell);
        }
    }
    Ok(NonvanishingWitness { nonvanishing: !witnesses.is_empty(), witnesses })
}

/// Feasible pairs (g, connecting rank) for a two-level filtration whose
/// subquotient homologies both have dimension g: the long exact sequence
/// over a field forces total = 2g − 2δ. Pairs are returned in increasing g
/// order.
pub fn rank_feasibility_t2(
    total_rank: i64,
    chain_rank_per_level: i64,
) -> Result<Vec<(i64, i64)>> {
    if total_rank < 0 || chain_rank_per_level < 0 {
        return Err(Error::invalid("ranks must be nonnegative"));
    }
    let mut out = Vec::new();
    for g in 0..=chain_rank_per_level {
        for delta in 0..=g {
            if 2 * g - 2 * delta == total_rank {
                out.push((g, delta));
            }
        }
    }
    Ok(out)
}

/// Parity of the total dimension; true when even. Differentials cancel
/// dimensions in pairs, so this parity is shared by every later page.
pub fn parity_check(page: &BigradedPage) -> bool {
    page.total_dimension() % 2 == 0
}

/// Result of enumerating every admissible boundary operator on the chain
/// model of a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteForceOutcome {
    pub r: usize,
    /// Number of operators enumerated, 2^(r−1).
    pub operators: usize,
    /// Total degrees of the cells certified by the interval analysis.
    pub survivor_degrees: Vec<i64>,
    /// True when every operator's homology is nonzero in every survivor
    /// degree.
    pub sound: bool,
}

/// Exhaustive soundness check of the survivor analysis. The chain model has
/// one generator per page cell, graded by total degree and filtered by
/// column. A boundary operator is admissible when it drops the degree by
/// one, strictly lowers the filtration (a level-preserving component would
/// change the level subquotients away from circle homology), and squares to
/// zero; the admissible arrows turn out to be exactly one candidate per
/// adjacent column pair, so there are 2^(r−1) operators. For each one the
/// homology over ℤ/2 is computed by elimination and compared against the
/// certified survivors.
pub fn brute_force_soundness(r: usize) -> Result<BruteForceOutcome> {
    if r == 0 {
        return Err(Error::Vacuous("no generators without circles".into()));
    }
    if r > 20 {
        return Err(Error::invalid("enumeration is meant for desk-scale r"));
    }
    let table = compute_circles(r)?;
    let page = e1_page(&table)?;
    let cells = page.support();
    // Generators: index into `cells`; degree = p + q, filtration = p.
    let degree = |i: usize| cells[i].0 + cells[i].1;
    let filtration = |i: usize| cells[i].0;
    let n = cells.len();
    assert!(n <= 64, "bitmask rows require at most 64 generators");

    // Candidate arrows: degree −1 and strictly lower filtration.
    let mut arrows = Vec::new();
    for src in 0..n {
        for dst in 0..n {
            if degree(dst) == degree(src) - 1 && filtration(dst) < filtration(src) {
                arrows.push((src, dst));
            }
        }
    }
    assert_eq!(arrows.len(), r - 1, "one candidate arrow per adjacent column pair");

    let survivors: Vec<(i64, i64)> = cells
        .iter()
        .copied()
        .filter(|&cell| {
            survives_to_infinity(&page, cell)
                .map(|c| c.verdict == Verdict::Survives)
                .unwrap_or(false)
        })
        .collect();
    let survivor_degrees: Vec<i64> = survivors.iter().map(|&(p, q)| p + q).collect();

    let degrees: Vec<i64> = (0..n).map(degree).collect();
    let mut sound = true;
    let patterns = 1usize << arrows.len();
    for pattern in 0..patterns {
        // Boundary masks: boundary[i] = sum of targets of generator i.
        let mut boundary = vec![0u64; n];
        for (bit, &(src, dst)) in arrows.iter().enumerate() {
            if pattern >> bit & 1 == 1 {
                boundary[src] |= 1 << dst;
            }
        }
        // ∂² = 0: expand the boundary of each boundary.
        for i in 0..n {
            let mut second = 0u64;
            let mut mask = boundary[i];
            while mask != 0 {
                let j = mask.trailing_zeros() as usize;
                second ^= boundary[j];
                mask &= mask - 1;
            }
            assert_eq!(second, 0, "admissible operators square to zero");
        }
        let homology = gf2_homology(&boundary, &degrees);
        for deg in &survivor_degrees {
            if homology.get(deg).copied().unwrap_or(0) == 0 {
                sound = false;
            }
        }
    }
    Ok(BruteForceOutcome { r, operators: patterns, survivor_degrees, sound })
}

/// Graded homology dimensions of a ℤ/2 complex given as boundary bitmasks:
/// dim H_d = dim ker ∂_d − rank ∂_{d+1}.
fn gf2_homology(boundary: &[u64], degrees: &[i64]) -> BTreeMap<i64, usize> {
    let n = boundary.len();
    let mut present: Vec<i64> = degrees.to_vec();
    present.sort_unstable();
    present.dedup();
    let rank_at = |deg: i64| -> usize {
        let rows: Vec<u64> = (0..n)
            .filter(|&i| degrees[i] == deg && boundary[i] != 0)
            .map(|i| boundary[i])
            .collect();
        gf2_rank(rows)
    };
    let mut out = BTreeMap::new();
    for &deg in &present {
        let dim = degrees.iter().filter(|&&d| d == deg).count();
        let kernel = dim - rank_at(deg);
        let image_from_above = rank_at(deg + 1);
        out.insert(deg, kernel - image_from_above);
    }
    out
}

/// Rank of a set of GF(2) row vectors by elimination.
fn gf2_rank(mut rows: Vec<u64>) -> usize {
    let mut rank = 0;
    for bit in 0..64u32 {
        let Some(pivot) = (rank..rows.len()).find(|&i| rows[i] >> bit & 1 == 1) else {
            continue;
        };
        rows.swap(rank, pivot);
        let lead = rows[rank];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && *row >> bit & 1 == 1 {
                *row ^= lead;
            }
        }
        rank += 1;
    }
    rank
}
