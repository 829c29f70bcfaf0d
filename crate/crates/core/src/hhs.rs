//! Finite relative hierarchically hyperbolic structures.
//!
//! An instance is a finite metric space with a family of domains, each
//! carrying a finite connected graph, projections of points to nonempty
//! node sets, and relative projections between non-orthogonal domains.
//! The checker computes, for every axiom, the least integer constant for
//! which it holds, and a witness when the claimed constant is too small.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::cayley::delta_of_metric;
use crate::domain::{DomainRelation, Nesting};

pub const MAX_POINTS: usize = 10_000;
pub const MAX_DOMAINS: usize = 32;
pub const MAX_NODES: usize = 1_000;
/// Largest family searched when looking for a large-links witness.
pub const LARGE_LINKS_SEARCH: usize = 6;
const DELTA_BUDGET: u64 = 10_000_000;
const REALIZATION_BUDGET: u64 = 500_000_000;
const TOPSPACE_MAX_POINTS: usize = 2_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HhsError {
    #[error("invalid instance JSON: {0}")]
    Parse(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("instance exceeds the brute-force budget: {0}")]
    BudgetExceeded(String),
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("product region of `{0}` is empty")]
    EmptyRegion(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub points: Vec<String>,
    pub distances: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    /// `a` is nested in `b`.
    Nested,
    Orthogonal,
    Transverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationSpec {
    pub a: String,
    pub b: String,
    pub kind: RelationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CSpaceSpec {
    pub nodes: Vec<String>,
    /// Neighbour indices per node.
    pub adjacency: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoSpec {
    pub from: String,
    pub to: String,
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainFlags {
    /// Whether the domain's space stands for an unbounded one.
    #[serde(default)]
    pub unbounded: bool,
}

/// JSON instance format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HhsFile {
    pub space: SpaceSpec,
    pub domains: Vec<String>,
    /// Unlisted pairs of distinct domains are transverse.
    #[serde(default)]
    pub relations: Vec<RelationSpec>,
    pub cspaces: BTreeMap<String, CSpaceSpec>,
    /// Per domain, the node names each point projects to, in point order.
    pub projections: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default)]
    pub rhos: Vec<RhoSpec>,
    #[serde(default)]
    pub flags: BTreeMap<String, DomainFlags>,
    #[serde(rename = "E")]
    pub e: u64,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    /// Projection tolerance used to group points into slices.
    #[serde(default)]
    pub slice_tolerance: u64,
}

// ---------------------------------------------------------------------------
// Validated instance

#[derive(Debug, Clone)]
pub struct CSpace {
    nodes: Vec<String>,
    dist: Vec<Vec<u32>>,
    adjacency: Vec<Vec<u32>>,
    diameter: u32,
}

impl CSpace {
    fn new(domain: &str, spec: &CSpaceSpec) -> Result<Self, HhsError> {
        let n = spec.nodes.len();
        if n == 0 {
            return Err(HhsError::Invalid(format!("space of `{domain}` has no nodes")));
        }
        if n > MAX_NODES {
            return Err(HhsError::BudgetExceeded(format!(
                "space of `{domain}` has {n} nodes (limit {MAX_NODES})"
            )));
        }
        if spec.adjacency.len() != n {
            return Err(HhsError::Invalid(format!(
                "space of `{domain}` lists adjacency for {} of {n} nodes",
                spec.adjacency.len()
            )));
        }
        let mut sorted = spec.nodes.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != n {
            return Err(HhsError::Invalid(format!("space of `{domain}` repeats a node name")));
        }
        let adjacency: Vec<Vec<u32>> = spec
            .adjacency
            .iter()
            .map(|row| row.iter().map(|&j| j as u32).collect())
            .collect();
        for (i, row) in spec.adjacency.iter().enumerate() {
            for &j in row {
                if j >= n || j == i || !spec.adjacency[j].contains(&i) {
                    return Err(HhsError::Invalid(format!(
                        "space of `{domain}`: edge {i}-{j} is out of range, a loop, or one-sided"
                    )));
                }
            }
        }
        let dist: Vec<Vec<u32>> = (0..n).map(|s| bfs(&adjacency, s, None)).collect();
        if dist[0].contains(&u32::MAX) {
            return Err(HhsError::Invalid(format!("space of `{domain}` is disconnected")));
        }
        let diameter = dist.iter().flatten().copied().max().unwrap_or(0);
        Ok(CSpace {
            nodes: spec.nodes.clone(),
            dist,
            adjacency,
            diameter,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn diameter(&self) -> u32 {
        self.diameter
    }

    pub fn distances(&self) -> &[Vec<u32>] {
        &self.dist
    }

    fn set_distance(&self, a: &[u32], b: &[u32]) -> u32 {
        a.iter()
            .flat_map(|&i| b.iter().map(move |&j| self.dist[i as usize][j as usize]))
            .min()
            .unwrap_or(0)
    }

    fn set_diameter(&self, a: &[u32]) -> u32 {
        a.iter()
            .flat_map(|&i| a.iter().map(move |&j| self.dist[i as usize][j as usize]))
            .max()
            .unwrap_or(0)
    }

    fn resolve(&self, domain: &str, names: &[String]) -> Result<Vec<u32>, HhsError> {
        if names.is_empty() {
            return Err(HhsError::Invalid(format!("empty node set in `{domain}`")));
        }
        let mut out: Vec<u32> = names
            .iter()
            .map(|name| {
                self.nodes
                    .iter()
                    .position(|n| n == name)
                    .map(|i| i as u32)
                    .ok_or_else(|| HhsError::Invalid(format!("`{name}` is not a node of `{domain}`")))
            })
            .collect::<Result<_, _>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

/// BFS distances from `src`, never entering nodes marked in `blocked`.
fn bfs(adjacency: &[Vec<u32>], src: usize, blocked: Option<&[bool]>) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adjacency.len()];
    if blocked.is_some_and(|b| b[src]) {
        return dist;
    }
    dist[src] = 0;
    let mut queue = VecDeque::from([src as u32]);
    while let Some(x) = queue.pop_front() {
        for &y in &adjacency[x as usize] {
            if dist[y as usize] == u32::MAX && !blocked.is_some_and(|b| b[y as usize]) {
                dist[y as usize] = dist[x as usize] + 1;
                queue.push_back(y);
            }
        }
    }
    dist
}

#[derive(Debug, Clone)]
pub struct HhsInstance {
    points: Vec<String>,
    dist: Vec<Vec<u32>>,
    domains: Vec<String>,
    rel: Vec<Vec<DomainRelation>>,
    spaces: Vec<CSpace>,
    /// `proj[w][x]`: nodes of `CW` that point `x` projects to.
    proj: Vec<Vec<Vec<u32>>>,
    /// `rho[v][w]`: the relative projection of `V` into `CW`.
    rho: Vec<Vec<Option<Vec<u32>>>>,
    unbounded: Vec<bool>,
    e: u64,
    m: Option<u64>,
    slice_tolerance: u64,
}

impl HhsInstance {
    pub fn from_json(text: &str) -> Result<Self, HhsError> {
        let file: HhsFile =
            serde_json::from_str(text).map_err(|e| HhsError::Parse(e.to_string()))?;
        Self::new(&file)
    }

    pub fn new(file: &HhsFile) -> Result<Self, HhsError> {
        let n = file.space.points.len();
        if n == 0 {
            return Err(HhsError::Invalid("space has no points".into()));
        }
        if n > MAX_POINTS {
            return Err(HhsError::BudgetExceeded(format!(
                "{n} points (limit {MAX_POINTS})"
            )));
        }
        let d = &file.space.distances;
        if d.len() != n || d.iter().any(|row| row.len() != n) {
            return Err(HhsError::Invalid("distance table is not square".into()));
        }
        for i in 0..n {
            if d[i][i] != 0 {
                return Err(HhsError::Invalid(format!("nonzero self-distance at point {i}")));
            }
            for j in 0..n {
                if d[i][j] != d[j][i] {
                    return Err(HhsError::Invalid(format!(
                        "distance table is not symmetric at ({i},{j})"
                    )));
                }
                if i != j && d[i][j] == 0 {
                    return Err(HhsError::Invalid(format!("points {i} and {j} coincide")));
                }
            }
        }

        let k = file.domains.len();
        if k == 0 {
            return Err(HhsError::Invalid("no domains".into()));
        }
        if k > MAX_DOMAINS {
            return Err(HhsError::BudgetExceeded(format!(
                "{k} domains (limit {MAX_DOMAINS})"
            )));
        }
        let index = |name: &str| -> Result<usize, HhsError> {
            file.domains
                .iter()
                .position(|d| d == name)
                .ok_or_else(|| HhsError::UnknownDomain(name.to_string()))
        };
        for (i, name) in file.domains.iter().enumerate() {
            if file.domains[..i].contains(name) {
                return Err(HhsError::Invalid(format!("domain `{name}` listed twice")));
            }
        }

        // Explicit relations, then the transitive closure of nesting.
        let mut explicit: Vec<Vec<Option<DomainRelation>>> = vec![vec![None; k]; k];
        for r in &file.relations {
            let (a, b) = (index(&r.a)?, index(&r.b)?);
            if a == b {
                return Err(HhsError::Invalid(format!("relation of `{}` with itself", r.a)));
            }
            let (ab, ba) = match r.kind {
                RelationKind::Nested => (
                    DomainRelation::Nested(Nesting::Inside),
                    DomainRelation::Nested(Nesting::Contains),
                ),
                RelationKind::Orthogonal => (DomainRelation::Orthogonal, DomainRelation::Orthogonal),
                RelationKind::Transverse => (DomainRelation::Transverse, DomainRelation::Transverse),
            };
            for (x, y, rel) in [(a, b, ab), (b, a, ba)] {
                match explicit[x][y] {
                    Some(old) if old != rel => {
                        return Err(HhsError::Invalid(format!(
                            "conflicting relations for `{}` and `{}`",
                            r.a, r.b
                        )))
                    }
                    _ => explicit[x][y] = Some(rel),
                }
            }
        }
        let mut below = vec![vec![false; k]; k];
        for (a, row) in explicit.iter().enumerate() {
            for (b, rel) in row.iter().enumerate() {
                below[a][b] = *rel == Some(DomainRelation::Nested(Nesting::Inside));
            }
        }
        for mid in 0..k {
            for a in 0..k {
                if below[a][mid] {
                    for b in 0..k {
                        if below[mid][b] {
                            below[a][b] = true;
                        }
                    }
                }
            }
        }
        let mut rel = vec![vec![DomainRelation::Transverse; k]; k];
        for a in 0..k {
            rel[a][a] = DomainRelation::Equal;
            if below[a][a] {
                return Err(HhsError::Invalid(format!(
                    "nesting has a cycle through `{}`",
                    file.domains[a]
                )));
            }
            for b in 0..k {
                if a == b {
                    continue;
                }
                let derived = if below[a][b] {
                    Some(DomainRelation::Nested(Nesting::Inside))
                } else if below[b][a] {
                    Some(DomainRelation::Nested(Nesting::Contains))
                } else {
                    None
                };
                rel[a][b] = match (derived, explicit[a][b]) {
                    (Some(d), Some(e)) if d != e => {
                        return Err(HhsError::Invalid(format!(
                            "nesting closure contradicts the relation of `{}` and `{}`",
                            file.domains[a], file.domains[b]
                        )))
                    }
                    (Some(d), _) => d,
                    (None, Some(e)) => e,
                    (None, None) => DomainRelation::Transverse,
                };
            }
        }

        let mut spaces = Vec::with_capacity(k);
        for name in &file.domains {
            let spec = file
                .cspaces
                .get(name)
                .ok_or_else(|| HhsError::Invalid(format!("no space for domain `{name}`")))?;
            spaces.push(CSpace::new(name, spec)?);
        }
        for name in file.cspaces.keys().chain(file.projections.keys()).chain(file.flags.keys()) {
            index(name)?;
        }

        let mut proj = Vec::with_capacity(k);
        for (w, name) in file.domains.iter().enumerate() {
            let rows = file
                .projections
                .get(name)
                .ok_or_else(|| HhsError::Invalid(format!("no projection for domain `{name}`")))?;
            if rows.len() != n {
                return Err(HhsError::Invalid(format!(
                    "projection to `{name}` has {} rows for {n} points",
                    rows.len()
                )));
            }
            proj.push(
                rows.iter()
                    .map(|names| spaces[w].resolve(name, names))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }

        let mut rho = vec![vec![None; k]; k];
        for r in &file.rhos {
            let (v, w) = (index(&r.from)?, index(&r.to)?);
            let allowed = matches!(
                rel[v][w],
                DomainRelation::Nested(Nesting::Inside) | DomainRelation::Transverse
            );
            if !allowed {
                return Err(HhsError::Invalid(format!(
                    "relative projection from `{}` to `{}`, which are {}",
                    r.from, r.to, rel[v][w]
                )));
            }
            if rho[v][w].is_some() {
                return Err(HhsError::Invalid(format!(
                    "relative projection from `{}` to `{}` given twice",
                    r.from, r.to
                )));
            }
            rho[v][w] = Some(spaces[w].resolve(&r.to, &r.set)?);
        }

        let unbounded = file
            .domains
            .iter()
            .map(|d| file.flags.get(d).is_some_and(|f| f.unbounded))
            .collect();

        Ok(HhsInstance {
            points: file.space.points.clone(),
            dist: file.space.distances.clone(),
            domains: file.domains.clone(),
            rel,
            spaces,
            proj,
            rho,
            unbounded,
            e: file.e,
            m: file.m,
            slice_tolerance: file.slice_tolerance,
        })
    }

    pub fn e(&self) -> u64 {
        self.e
    }

    pub fn m(&self) -> Option<u64> {
        self.m
    }

    pub fn slice_tolerance(&self) -> u64 {
        self.slice_tolerance
    }

    pub fn set_slice_tolerance(&mut self, t: u64) {
        self.slice_tolerance = t;
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn domains(&self) -> &[String] {
        &self.domains
    }

    pub fn space(&self, w: usize) -> &CSpace {
        &self.spaces[w]
    }

    pub fn distance(&self, x: usize, y: usize) -> u32 {
        self.dist[x][y]
    }

    pub fn domain(&self, name: &str) -> Result<usize, HhsError> {
        self.domains
            .iter()
            .position(|d| d == name)
            .ok_or_else(|| HhsError::UnknownDomain(name.to_string()))
    }

    pub fn point(&self, name: &str) -> Result<usize, HhsError> {
        self.points
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| HhsError::UnknownPoint(name.to_string()))
    }

    pub fn relation(&self, a: usize, b: usize) -> DomainRelation {
        self.rel[a][b]
    }

    /// `a ⊑ b`.
    pub fn nested(&self, a: usize, b: usize) -> bool {
        matches!(
            self.rel[a][b],
            DomainRelation::Equal | DomainRelation::Nested(Nesting::Inside)
        )
    }

    /// `a ⊊ b`.
    pub fn strictly_nested(&self, a: usize, b: usize) -> bool {
        self.rel[a][b] == DomainRelation::Nested(Nesting::Inside)
    }

    pub fn orthogonal(&self, a: usize, b: usize) -> bool {
        self.rel[a][b] == DomainRelation::Orthogonal
    }

    pub fn transverse(&self, a: usize, b: usize) -> bool {
        self.rel[a][b] == DomainRelation::Transverse
    }

    pub fn is_minimal(&self, w: usize) -> bool {
        (0..self.domains.len()).all(|v| !self.strictly_nested(v, w))
    }

    /// Domains not nested in any other domain.
    pub fn maximal(&self) -> Vec<usize> {
        (0..self.domains.len())
            .filter(|&w| (0..self.domains.len()).all(|v| !self.strictly_nested(w, v)))
            .collect()
    }

    pub fn top(&self) -> Option<usize> {
        match self.maximal().as_slice() {
            [s] => Some(*s),
            _ => None,
        }
    }

    pub fn projection(&self, w: usize, x: usize) -> &[u32] {
        &self.proj[w][x]
    }

    pub fn rho(&self, v: usize, w: usize) -> Option<&[u32]> {
        self.rho[v][w].as_deref()
    }

    pub fn is_unbounded(&self, w: usize) -> bool {
        self.unbounded[w]
    }

    /// `d_W(π_W(x), π_W(y))`, the least distance between the two sets.
    pub fn dw(&self, w: usize, x: usize, y: usize) -> u32 {
        self.spaces[w].set_distance(&self.proj[w][x], &self.proj[w][y])
    }

    fn dw_to(&self, w: usize, x: usize, set: &[u32]) -> u32 {
        self.spaces[w].set_distance(&self.proj[w][x], set)
    }

    pub fn diameter(&self) -> u32 {
        self.dist.iter().flatten().copied().max().unwrap_or(0)
    }

    fn pairs(&self) -> impl ParallelIterator<Item = (usize, usize)> + '_ {
        let n = self.points.len();
        (0..n)
            .into_par_iter()
            .flat_map_iter(move |x| (x + 1..n).map(move |y| (x, y)))
    }

    /// Constant large enough that every axiom with no structural defect
    /// holds.
    fn constant_ceiling(&self) -> u64 {
        let cw = self.spaces.iter().map(|s| s.diameter).max().unwrap_or(0);
        u64::from(self.diameter()) + u64::from(cw) + self.domains.len() as u64 + 2
    }
}

// ---------------------------------------------------------------------------
// Axioms

pub const AXIOM_NAMES: [&str; 12] = [
    "projections",
    "nesting",
    "orthogonality",
    "transversality",
    "hyperbolicity",
    "finite complexity",
    "containers",
    "uniqueness",
    "bounded geodesic image",
    "large links",
    "consistency",
    "partial realization",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomStatus {
    Pass,
    Fail,
    /// No witness family was found within the search bound, but a larger
    /// family might exist.
    FailAtBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomResult {
    pub axiom: u8,
    pub name: &'static str,
    pub status: AxiomStatus,
    /// Least constant for which the axiom holds; `None` when no constant
    /// works.
    pub minimal_constant: Option<u64>,
    pub witness: Option<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ThetaRow {
    pub r: u64,
    pub theta: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub claimed_e: u64,
    /// Least single constant satisfying every axiom, if one exists.
    pub minimal_e: Option<u64>,
    pub all_pass: bool,
    pub axioms: Vec<AxiomResult>,
    /// Least uniqueness function: `θ(r) = 1 + max d(x,y)` over pairs whose
    /// projections are all closer than `r`.
    pub theta: Vec<ThetaRow>,
    pub clean_containers: bool,
    pub clean_container_witness: Option<Value>,
}

impl AxiomReport {
    pub fn result(&self, axiom: u8) -> &AxiomResult {
        &self.axioms[axiom as usize - 1]
    }

    pub fn failing(&self) -> Vec<u8> {
        self.axioms
            .iter()
            .filter(|a| a.status != AxiomStatus::Pass)
            .map(|a| a.axiom)
            .collect()
    }
}

/// Data shared by the axiom checks.
struct Checker<'a> {
    inst: &'a HhsInstance,
    theta: Vec<ThetaRow>,
    /// Pair realizing `θ(r) − 1`, per `r`.
    theta_pairs: Vec<(usize, usize)>,
    deltas: Vec<u64>,
    longest_chain: Vec<usize>,
    /// For each pairwise-orthogonal family and choice of points, the least
    /// realization error, with the family, choice and best point.
    realization: Vec<(u64, Vec<usize>, Vec<u32>, usize)>,
}

pub fn check_axioms(inst: &HhsInstance) -> Result<AxiomReport, HhsError> {
    let checker = Checker::new(inst)?;
    let ceiling = inst.constant_ceiling();
    let mut axioms = Vec::with_capacity(12);
    for axiom in 1..=12u8 {
        let check = |e: u64| checker.check(axiom, e);
        let minimal = if check(ceiling).is_some() {
            None
        } else {
            let (mut lo, mut hi) = (0, ceiling);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if check(mid).is_none() {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            Some(lo)
        };
        let witness = check(inst.e);
        let status = match &witness {
            None => AxiomStatus::Pass,
            Some(w) if w.get("search_exhausted") == Some(&Value::Bool(true)) => {
                AxiomStatus::FailAtBudget
            }
            Some(_) => AxiomStatus::Fail,
        };
        axioms.push(AxiomResult {
            axiom,
            name: AXIOM_NAMES[axiom as usize - 1],
            status,
            minimal_constant: minimal,
            witness,
        });
    }
    let minimal_e = axioms
        .iter()
        .map(|a| a.minimal_constant)
        .collect::<Option<Vec<u64>>>()
        .map(|v| v.into_iter().max().unwrap_or(0));
    let clean_container_witness = checker.unclean_container();
    Ok(AxiomReport {
        claimed_e: inst.e,
        minimal_e,
        all_pass: axioms.iter().all(|a| a.status == AxiomStatus::Pass),
        axioms,
        theta: checker.theta.clone(),
        clean_containers: clean_container_witness.is_none(),
        clean_container_witness,
    })
}

impl<'a> Checker<'a> {
    fn new(inst: &'a HhsInstance) -> Result<Self, HhsError> {
        let k = inst.domains.len();
        let n = inst.points.len();

        // Uniqueness: the largest distance among pairs whose largest
        // projected distance is m, for each m.
        let max_cw = inst.spaces.iter().map(|s| s.diameter).max().unwrap_or(0) as usize;
        let per_level: Vec<(u32, usize, usize)> = inst
            .pairs()
            .fold(
                || vec![(0u32, 0usize, 0usize); max_cw + 1],
                |mut acc, (x, y)| {
                    let m = (0..k).map(|w| inst.dw(w, x, y)).max().unwrap_or(0) as usize;
                    if inst.dist[x][y] > acc[m].0 {
                        acc[m] = (inst.dist[x][y], x, y);
                    }
                    acc
                },
            )
            .reduce(
                || vec![(0u32, 0usize, 0usize); max_cw + 1],
                |a, b| a.into_iter().zip(b).map(|(p, q)| if q.0 > p.0 { q } else { p }).collect(),
            );
        let mut theta = vec![ThetaRow { r: 0, theta: 0 }];
        let mut theta_pairs = vec![(0, 0)];
        let mut best = (0u32, 0usize, 0usize);
        for (m, level) in per_level.iter().enumerate() {
            if level.0 > best.0 {
                best = *level;
            }
            theta.push(ThetaRow {
                r: m as u64 + 1,
                theta: u64::from(best.0) + 1,
            });
            theta_pairs.push((best.1, best.2));
        }

        let deltas = inst
            .spaces
            .iter()
            .map(|s| delta_of_metric(&s.dist, DELTA_BUDGET, 0).delta_halves)
            .collect();

        // Longest ⊑-chain ending at each domain.
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&w| (0..k).filter(|&v| inst.strictly_nested(v, w)).count());
        let mut longest_chain = vec![1usize; k];
        for &w in &order {
            for v in 0..k {
                if inst.strictly_nested(v, w) {
                    longest_chain[w] = longest_chain[w].max(longest_chain[v] + 1);
                }
            }
        }

        // Partial realization over every pairwise-orthogonal family.
        let mut families: Vec<Vec<usize>> = Vec::new();
        fn extend(inst: &HhsInstance, cur: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
            for v in start..inst.domains.len() {
                if cur.iter().all(|&u| inst.orthogonal(u, v)) {
                    cur.push(v);
                    out.push(cur.clone());
                    extend(inst, cur, v + 1, out);
                    cur.pop();
                }
            }
        }
        extend(inst, &mut Vec::new(), 0, &mut families);
        let mut cost: u64 = 0;
        for f in &families {
            let choices: u64 = f.iter().map(|&v| inst.spaces[v].nodes.len() as u64).product();
            cost = cost.saturating_add(choices.saturating_mul(n as u64 * f.len() as u64));
        }
        if cost > REALIZATION_BUDGET {
            return Err(HhsError::BudgetExceeded(format!(
                "partial realization needs about {cost} evaluations"
            )));
        }
        let mut realization = Vec::new();
        for f in &families {
            // Error from the relative projections, independent of the choice.
            let rho_err: Vec<u32> = (0..n)
                .map(|x| {
                    let mut worst = 0;
                    for &v in f {
                        for w in 0..k {
                            if inst.strictly_nested(v, w) || inst.transverse(w, v) {
                                if let Some(r) = inst.rho(v, w) {
                                    worst = worst.max(inst.dw_to(w, x, r));
                                }
                            }
                        }
                    }
                    worst
                })
                .collect();
            let sizes: Vec<usize> = f.iter().map(|&v| inst.spaces[v].nodes.len()).collect();
            let total: usize = sizes.iter().product();
            let rows: Vec<(u64, Vec<usize>, Vec<u32>, usize)> = (0..total)
                .into_par_iter()
                .map(|mut code| {
                    let choice: Vec<u32> = sizes
                        .iter()
                        .map(|&s| {
                            let c = (code % s) as u32;
                            code /= s;
                            c
                        })
                        .collect();
                    let (err, x) = (0..n)
                        .map(|x| {
                            let mut e = rho_err[x];
                            for (i, &v) in f.iter().enumerate() {
                                e = e.max(inst.dw_to(v, x, &[choice[i]]));
                            }
                            (e, x)
                        })
                        .min()
                        .unwrap();
                    (u64::from(err), f.clone(), choice, x)
                })
                .collect();
            // Keep only the worst choice per family; it decides every check.
            if let Some(worst) = rows.into_iter().max_by_key(|r| r.0) {
                realization.push(worst);
            }
        }

        Ok(Checker {
            inst,
            theta,
            theta_pairs,
            deltas,
            longest_chain,
            realization,
        })
    }

    fn name(&self, w: usize) -> &str {
        &self.inst.domains[w]
    }

    fn point(&self, x: usize) -> &str {
        &self.inst.points[x]
    }

    fn check(&self, axiom: u8, e: u64) -> Option<Value> {
        match axiom {
            1 => self.projections(e),
            2 => self.nesting(e),
            3 => self.orthogonality(),
            4 => self.transversality(e),
            5 => self.hyperbolicity(e),
            6 => self.finite_complexity(e),
            7 => self.containers(),
            8 => self.uniqueness(e),
            9 => self.bounded_geodesic_image(e),
            10 => self.large_links(e),
            11 => self.consistency(e),
            12 => self.partial_realization(e),
            _ => unreachable!(),
        }
    }

    fn projections(&self, e: u64) -> Option<Value> {
        let inst = self.inst;
        let k = inst.domains.len();
        for w in 0..k {
            for x in 0..inst.points.len() {
                let diam = inst.spaces[w].set_diameter(&inst.proj[w][x]);
                if u64::from(diam) > e {
                    return Some(json!({
                        "kind": "projection_diameter", "domain": self.name(w),
                        "point": self.point(x), "diameter": diam,
                    }));
                }
            }
        }
        let lipschitz = inst.pairs().find_map_first(|(x, y)| {
            (0..k).find_map(|w| {
                let dw = u64::from(inst.dw(w, x, y));
                let d = u64::from(inst.dist[x][y]);
                (dw > e * d + e).then(|| {
                    json!({
                        "kind": "coarse_lipschitz", "domain": self.name(w),
                        "x": self.point(x), "y": self.point(y),
                        "d_X": d, "d_W": dw,
                    })
                })
            })
        });
        if lipschitz.is_some() {
            return lipschitz;
        }
        for w in 0..k {
            let space = &inst.spaces[w];
            let mut image = vec![false; space.nodes.len()];
            for p in &inst.proj[w] {
                for &c in p {
                    image[c as usize] = true;
                }
            }
            for c in 0..space.nodes.len() {
                let gap = (0..space.nodes.len())
                    .filter(|&i| image[i])
                    .map(|i| space.dist[c][i])
                    .min()
                    .unwrap_or(u32::MAX);
                if u64::from(gap) > e {
                    return Some(json!({
                        "kind": "image_not_coarsely_onto", "domain": self.name(w),
                        "node": space.nodes[c], "distance_to_image": gap,
                    }));
                }
            }
        }
        None
    }

    fn nesting(&self, e: u64) -> Option<Value> {
        let inst = self.inst;
        if inst.top().is_none() {
            let maximal: Vec<&str> = inst.maximal().into_iter().map(|w| self.name(w)).collect();
            return Some(json!({ "kind": "no_unique_maximum", "maximal": maximal }));
        }
        let k = inst.domains.len();
        for v in 0..k {
            for w in 0..k {
                if !inst.strictly_nested(v, w) {
                    continue;
                }
                match inst.rho(v, w) {
                    None => {
                        return Some(json!({
                            "kind": "missing_rho", "from": self.name(v), "to": self.name(w),
                        }))
                    }
                    Some(r) => {
                        let diam = inst.spaces[w].set_diameter(r);
                        if u64::from(diam) > e {
                            return Some(json!({
                                "kind": "rho_diameter", "from": self.name(v),
                                "to": self.name(w), "diameter": diam,
                            }));
                        }
                    }
                }
            }
        }
        None
    }

    fn orthogonality(&self) -> Option<Value> {
        let inst = self.inst;
        let k = inst.domains.len();
        for v in 0..k {
            for w in 0..k {
                for u in 0..k {
                    if inst.nested(v, w) && inst.orthogonal(w, u) && !inst.orthogonal(v, u) {
                        return Some(json!({
                            "kind": "orthogonality_not_inherited",
                            "V": self.name(v), "W": self.name(w), "U": self.name(u),
                        }));
                    }
                }
            }
        }
        None
    }

    fn transversality(&self, e: u64) -> Option<Value> {
        let inst = self.inst;
        let k = inst.domains.len();
        for v in 0..k {
            for w in 0..k {
                if !inst.transverse(v, w) {
                    continue;
                }
                match inst.rho(v, w) {
                    None => {
                        return Some(json!({
                            "kind": "missing_rho", "from": self.name(v), "to": self.name(w),
                        }))
                    }
                    Some(r) => {
                        let diam = inst.spaces[w].set_diameter(r);
                        if u64::from(diam) > e {
                            return Some(json!({
                                "kind": "rho_diameter", "from": self.name(v),
                                "to": self.name(w), "diameter": diam,
                            }));
                        }
                    }
                }
            }
        }
        None
    }

    fn hyperbolicity(&self, e: u64) -> Option<Value> {
        let inst = self.inst;
        (0..inst.domains.len())
            .filter(|&w| !inst.is_minimal(w))
            .find(|&w| self.deltas[w] > 2 * e)
            .map(|w| {
                json!({
                    "kind": "not_hyperbolic", "domain": self.name(w),
                    "delta": self.deltas[w] as f64 / 2.0,
                })
            })
    }

    fn finite_complexity(&self, e: u64) -> Option<Value> {
        let inst = self.inst;
        let (w, &len) = self
            .longest_chain
            .iter()
            .enumerate()
            .max_by_key(|&(w, &l)| (l, std::cmp::Reverse(w)))?;
        if len as u64 <= e {
            return None;
        }
        // Walk the chain back down from its top.
        let mut chain = vec![w];
        let mut cur = w;
        while let Some(v) = (0..inst.domains.len())
            .find(|&v| inst.strictly_nested(v, cur) && self.longest_chain[v] + 1 == self.longest_chain[cur])
        {
            chain.push(v);
            cur = v;
        }
        chain.reverse();
        let names: Vec<&str> = chain.iter().map(|&v| self.name(v)).collect();
        Some(json!({ "kind": "long_chain", "chain": names, "length": len }))
    }

    /// Domains nested in `w` and orthogonal to `u`.
    fn orthogonal_in(&self, w: usize, u: usize) -> Vec<usize> {
        let inst = self.inst;
        (0..inst.domains.len())
            .filter(|&v| inst.nested(v, w) && inst.orthogonal(v, u))
            .collect()
    }

    fn containers(&self) -> Option<Value> {
        let inst = self.inst;
        let k = inst.domains.len();
        for w in 0..k {
            for u in (0..k).filter(|&u| inst.nested(u, w)) {
                let orth = self.orthogonal_in(w, u);
                if orth.is_empty() {
                    continue;
                }
                let found = (0..k).any(|q| {
                    inst.strictly_nested(q, w) && orth.iter().all(|&v| inst.nested(v, q))
                });
                if !found {
                    let names: Vec<&str> = orth.iter().map(|&v| self.name(v)).collect();
                    return Some(json!({
                        "kind": "no_container", "W": self.name(w), "U": self.name(u),
                        "orthogonal": names,
                    }));
                }
            }
        }
        None
    }

    fn unclean_container(&self) -> Option<Value> {
        let inst = self.inst;
        let k = inst.domains.len();
        for w in 0..k {
            for u in (0..k).filter(|&u| inst.nested(u, w)) {
                let orth = self.orthogonal_in(w, u);
                if orth.is_empty() {
                    continue;
                }
                let clean = (0..k).any(|q| {
                    inst.strictly_nested(q, w)
                        && inst.orthogonal(q, u)
                        && orth.iter().all(|&v| inst.nested(v, q))
                });
                if !clean {
                    return Some(json!({ "W": self.name(w), "U": self.name(u) }));
                }
            }
        }
        None
    }

    fn uniqueness(&self, e: u64) -> Option<Value> {
        self.theta.iter().enumerate().find_map(|(i, row)| {
            (row.theta > e * row.r + e).then(|| {
                let (x, y) = self.theta_pairs[i];
                json!({
                    "kind": "uniqueness", "r": row.r, "theta": row.theta,
                    "bound": e * row.r + e,
                    "x": self.point(x), "y": self.point(y),
                    "d_X": self.inst.dist[x][y],
                })
            })
        })
    }

    fn bounded_geodesic_image(&self, e: u64) -> Option<Value> {
        let inst = self.inst;
        let k = inst.domains.len();
        for v in 0..k {
            for w in 0..k {
                if !inst.strictly_nested(v, w) {
                    continue;
                }
                let Some(rho) = inst.rho(v, w) else { continue };
                let space = &inst.spaces[w];
                let reach = e.min(u64::from(u32::MAX)) as u32;
                let blocked: Vec<bool> = (0..space.nodes.len())
                    .map(|c| rho.iter().any(|&r| space.dist[c][r as usize] <= reach))
                    .collect();
                // Node pairs (a, b) whose geodesics must meet the neighbourhood.
                let mut needed: BTreeMap<u32, Vec<(u32, usize, usize)>> = BTreeMap::new();
                for x in 0..inst.points.len() {
                    for y in 0..inst.points.len() {
                        if x == y || u64::from(inst.dw(v, x, y)) < e {
                            continue;
                        }
                        for &a in &inst.proj[w][x] {
                            for &b in &inst.proj[w][y] {
                                needed.entry(a).or_default().push((b, x, y));
                            }
                        }
                    }
                }
                for (a, targets) in needed {
                    let avoid = bfs(&space.adjacency, a as usize, Some(&blocked));
                    for (b, x, y) in targets {
                        if avoid[b as usize] == space.dist[a as usize][b as usize] {
                            return Some(json!({
                                "kind": "geodesic_avoids_rho", "V": self.name(v),
                                "W": self.name(w), "x": self.point(x), "y": self.point(y),
                                "d_V": inst.dw(v, x, y),
                                "from": space.nodes[a as usize], "to": space.nodes[b as usize],
                            }));
                        }
                    }
                }
            }
        }
        None
    }

    fn large_links(&self, e: u64) -> Option<Value> {
        let inst = self.inst;
        let k = inst.domains.len();
        for w in 0..k {
            let below: Vec<usize> = (0..k).filter(|&u| inst.strictly_nested(u, w)).collect();
            if below.is_empty() {
                continue;
            }
            let found = inst.pairs().find_map_first(|(x, y)| {
                let required: Vec<usize> = below
                    .iter()
                    .copied()
                    .filter(|&u| u64::from(inst.dw(u, x, y)) > e)
                    .collect();
                if required.is_empty() {
                    return None;
                }
                let bound = e * u64::from(inst.dw(w, x, y)) + e;
                let limit = bound.min(LARGE_LINKS_SEARCH as u64) as usize;
                if (1..=limit).any(|size| covers_with(inst, &below, &required, size)) {
                    return None;
                }
                let names: Vec<&str> = required.iter().map(|&u| self.name(u)).collect();
                Some(json!({
                    "kind": "large_links", "W": self.name(w),
                    "x": self.point(x), "y": self.point(y),
                    "relevant": names, "allowed": bound,
                    "search_exhausted": bound > LARGE_LINKS_SEARCH as u64,
                }))
            });
            if found.is_some() {
                return found;
            }
        }
        None
    }

    fn consistency(&self, e: u64) -> Option<Value> {
        let inst = self.inst;
        let k = inst.domains.len();
        for v in 0..k {
            for w in 0..k {
                if !inst.transverse(v, w) {
                    continue;
                }
                let (Some(vw), Some(wv)) = (inst.rho(v, w), inst.rho(w, v)) else {
                    continue;
                };
                for x in 0..inst.points.len() {
                    let a = inst.dw_to(w, x, vw);
                    let b = inst.dw_to(v, x, wv);
                    if u64::from(a.min(b)) > e {
                        return Some(json!({
                            "kind": "transverse_inconsistency", "V": self.name(v),
                            "W": self.name(w), "x": self.point(x), "d_W": a, "d_V": b,
                        }));
                    }
                }
            }
        }
        for u in 0..k {
            for v in (0..k).filter(|&v| inst.nested(u, v)) {
                for w in 0..k {
                    let applies = inst.strictly_nested(v, w)
                        || (inst.transverse(v, w) && !inst.orthogonal(w, u));
                    if !applies {
                        continue;
                    }
                    let (Some(uw), Some(vw)) = (inst.rho(u, w), inst.rho(v, w)) else {
                        continue;
                    };
                    let d = inst.spaces[w].set_distance(uw, vw);
                    if u64::from(d) > e {
                        return Some(json!({
                            "kind": "rho_inconsistency", "U": self.name(u), "V": self.name(v),
                            "W": self.name(w), "distance": d,
                        }));
                    }
                }
            }
        }
        None
    }

    fn partial_realization(&self, e: u64) -> Option<Value> {
        let (err, family, choice, x) = self.realization.iter().find(|r| r.0 > e)?;
        let inst = self.inst;
        let targets: BTreeMap<&str, &str> = family
            .iter()
            .zip(choice)
            .map(|(&v, &c)| (self.name(v), inst.spaces[v].nodes[c as usize].as_str()))
            .collect();
        Some(json!({
            "kind": "partial_realization", "targets": targets,
            "best_point": self.point(*x), "error": err,
        }))
    }
}

/// Whether some `size` candidates together contain every required domain.
fn covers_with(inst: &HhsInstance, candidates: &[usize], required: &[usize], size: usize) -> bool {
    fn rec(
        inst: &HhsInstance,
        candidates: &[usize],
        required: &[usize],
        start: usize,
        left: usize,
        chosen: &mut Vec<usize>,
    ) -> bool {
        if required
            .iter()
            .all(|&u| chosen.iter().any(|&v| inst.nested(u, v)))
        {
            return true;
        }
        if left == 0 {
            return false;
        }
        for i in start..candidates.len() {
            chosen.push(candidates[i]);
            if rec(inst, candidates, required, i + 1, left - 1, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    rec(inst, candidates, required, 0, size, &mut Vec::new())
}

// ---------------------------------------------------------------------------
// Product regions, slices and gates

/// Points whose projections to every domain transverse to or strictly
/// containing `u` lie within `c` of the relative projection of `u`.
pub fn product_region(inst: &HhsInstance, u: usize, c: u64) -> Vec<usize> {
    let k = inst.domains.len();
    (0..inst.points.len())
        .filter(|&x| {
            (0..k).all(|v| {
                if !(inst.transverse(v, u) || inst.strictly_nested(u, v)) {
                    return true;
                }
                inst.rho(u, v)
                    .is_none_or(|r| u64::from(inst.dw_to(v, x, r)) <= c)
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceKind {
    /// Fix the coordinates orthogonal to `U`: slices `F_U × {e}`.
    F,
    /// Fix the coordinates nested in `U`: slices `{f} × E_U`.
    E,
}

/// Classes of the region of `u` under "projections within the slice
/// tolerance on every domain orthogonal to `u`" (F) or "nested in `u`" (E),
/// closed transitively.
pub fn slices(inst: &HhsInstance, u: usize, kind: SliceKind) -> Vec<Vec<usize>> {
    let region = product_region(inst, u, inst.e);
    let k = inst.domains.len();
    let coords: Vec<usize> = (0..k)
        .filter(|&v| match kind {
            SliceKind::F => inst.orthogonal(v, u),
            SliceKind::E => inst.nested(v, u),
        })
        .collect();
    let t = inst.slice_tolerance;
    let mut parent: Vec<usize> = (0..region.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..region.len() {
        for j in i + 1..region.len() {
            let close = coords
                .iter()
                .all(|&v| u64::from(inst.dw(v, region[i], region[j])) <= t);
            if close {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..region.len() {
        let root = find(&mut parent, i);
        classes.entry(root).or_default().push(region[i]);
    }
    classes.into_values().collect()
}

/// How far `y` is from satisfying the gate conditions for `x`: near the
/// relative projection of `u` on domains transverse to or strictly
/// containing `u`, near `x` everywhere else.
pub fn gate_deviation(inst: &HhsInstance, u: usize, x: usize, y: usize) -> u32 {
    (0..inst.domains.len())
        .map(|v| {
            if inst.transverse(v, u) || inst.strictly_nested(u, v) {
                inst.rho(u, v).map_or(0, |r| inst.dw_to(v, y, r))
            } else {
                inst.dw(v, x, y)
            }
        })
        .max()
        .unwrap_or(0)
}

/// The point of the product region of `u` with least gate deviation from
/// `x`; ties go to the earlier point.
pub fn gate(inst: &HhsInstance, u: usize, x: usize) -> Result<usize, HhsError> {
    product_region(inst, u, inst.e)
        .into_iter()
        .min_by_key(|&y| (gate_deviation(inst, u, x, y), y))
        .ok_or_else(|| HhsError::EmptyRegion(inst.domains[u].clone()))
}

// ---------------------------------------------------------------------------
// Distance formula

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DistanceFit {
    pub threshold: u64,
    pub k: u64,
    pub c: u64,
}

/// Least integer constants with
/// `Σ/K − C ≤ d(x,y) ≤ K·Σ + C` for all pairs, where `Σ` sums the projected
/// distances that reach the threshold. Minimizes `max(K, C)`, then `K`.
pub fn distance_formula_fit(inst: &HhsInstance, threshold: u64) -> DistanceFit {
    let k_domains = inst.domains.len();
    let samples: Vec<(u64, u64)> = inst
        .pairs()
        .map(|(x, y)| {
            let sum: u64 = (0..k_domains)
                .map(|w| u64::from(inst.dw(w, x, y)))
                .filter(|&d| d >= threshold)
                .sum();
            (u64::from(inst.dist[x][y]), sum)
        })
        .collect();
    let c_for = |k: u64| -> u64 {
        samples
            .iter()
            .map(|&(d, sum)| {
                let upper = d.saturating_sub(k * sum);
                // Σ/K − d rounded up, computed exactly.
                let lower = if sum > d * k { (sum - d * k).div_ceil(k) } else { 0 };
                upper.max(lower)
            })
            .max()
            .unwrap_or(0)
    };
    let mut best = DistanceFit {
        threshold,
        k: 1,
        c: c_for(1),
    };
    let mut k = 2;
    // C is non-increasing in K, so once K alone exceeds the best score no
    // larger K helps.
    while k < best.k.max(best.c) {
        let c = c_for(k);
        if k.max(c) < best.k.max(best.c) {
            best = DistanceFit { threshold, k, c };
        }
        k += 1;
    }
    best
}

// ---------------------------------------------------------------------------
// Maximization

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmReport {
    pub m: u64,
    pub domains: Vec<String>,
    pub closed_under_nesting: bool,
    /// `(U, V)` with `U ∈ 𝔖^M`, `V ⊑ U`, `V ∉ 𝔖^M`.
    pub violation: Option<(String, String)>,
}

/// Domains nested in some `V` that has an orthogonal partner `W`, with both
/// spaces of diameter above `m`.
pub fn compute_sm(inst: &HhsInstance, m: u64) -> (Vec<usize>, SmReport) {
    let k = inst.domains.len();
    let big = |w: usize| u64::from(inst.spaces[w].diameter) > m;
    let anchors: Vec<usize> = (0..k)
        .filter(|&v| big(v) && (0..k).any(|w| inst.orthogonal(v, w) && big(w)))
        .collect();
    let sm: Vec<usize> = (0..k)
        .filter(|&u| anchors.iter().any(|&v| inst.nested(u, v)))
        .collect();
    let violation = sm.iter().find_map(|&u| {
        (0..k)
            .find(|&v| inst.nested(v, u) && !sm.contains(&v))
            .map(|v| (inst.domains[u].clone(), inst.domains[v].clone()))
    });
    let report = SmReport {
        m,
        domains: sm.iter().map(|&u| inst.domains[u].clone()).collect(),
        closed_under_nesting: violation.is_none(),
        violation,
    };
    (sm, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainClass {
    Top,
    Unb,
    Min,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopSpace {
    pub points: Vec<String>,
    pub distances: Vec<Vec<u32>>,
    pub diameter: u32,
    pub coned_slices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximizedInstance {
    pub m: u64,
    #[serde(rename = "T")]
    pub t: Vec<String>,
    pub classification: BTreeMap<String, DomainClass>,
    #[serde(rename = "SM")]
    pub sm: Vec<String>,
    #[serde(rename = "SMplus")]
    pub sm_plus: Vec<String>,
    pub original_diameter: u32,
    pub topspace: TopSpace,
}

/// Whether the nested partial tuples of `u` are unbounded: some domain
/// nested in `u` is flagged unbounded.
pub fn f_unbounded(inst: &HhsInstance, u: usize) -> bool {
    (0..inst.domains.len()).any(|v| inst.nested(v, u) && inst.unbounded[v])
}

/// Whether the orthogonal partial tuples of `u` are unbounded.
pub fn e_unbounded(inst: &HhsInstance, u: usize) -> bool {
    (0..inst.domains.len()).any(|v| inst.orthogonal(v, u) && inst.unbounded[v])
}

pub fn maximize(inst: &HhsInstance, m: u64) -> Result<MaximizedInstance, HhsError> {
    let report = check_axioms(inst)?;
    if let Some(a) = report.axioms.iter().find(|a| a.status != AxiomStatus::Pass) {
        return Err(HhsError::PreconditionFailed(format!(
            "axiom {} ({}) fails at E = {}",
            a.axiom, a.name, inst.e
        )));
    }
    if !report.clean_containers {
        return Err(HhsError::PreconditionFailed(format!(
            "containers are not clean: {}",
            report.clean_container_witness.unwrap_or(Value::Null)
        )));
    }
    let n = inst.points.len();
    if n > TOPSPACE_MAX_POINTS {
        return Err(HhsError::BudgetExceeded(format!(
            "{n} points for the factored space (limit {TOPSPACE_MAX_POINTS})"
        )));
    }
    let k = inst.domains.len();
    let top = inst.top().expect("axiom 2 passed");
    let (sm, sm_report) = compute_sm(inst, m);
    if let Some((u, v)) = sm_report.violation {
        return Err(HhsError::PreconditionFailed(format!(
            "𝔖^M is not closed under nesting: {v} ⊑ {u}"
        )));
    }
    let mut sm_plus = sm.clone();
    for u in 0..k {
        if inst.is_minimal(u) && f_unbounded(inst, u) && !sm_plus.contains(&u) {
            sm_plus.push(u);
        }
    }
    sm_plus.sort_unstable();

    let mut classification = BTreeMap::new();
    let mut t = Vec::new();
    for u in 0..k {
        let class = if u == top {
            DomainClass::Top
        } else if f_unbounded(inst, u) && e_unbounded(inst, u) {
            DomainClass::Unb
        } else if inst.is_minimal(u) && f_unbounded(inst, u) && !e_unbounded(inst, u) {
            DomainClass::Min
        } else {
            DomainClass::Dropped
        };
        if class != DomainClass::Dropped {
            t.push(inst.domains[u].clone());
        }
        classification.insert(inst.domains[u].clone(), class);
    }

    // Cone off every F-slice of every domain in 𝔖^{M+}.
    let mut cones: Vec<Vec<usize>> = Vec::new();
    for &u in &sm_plus {
        cones.extend(slices(inst, u, SliceKind::F).into_iter().filter(|s| s.len() > 1));
    }
    let mut d = inst.dist.clone();
    for cone in &cones {
        for &a in cone {
            for &b in cone {
                if a != b {
                    d[a][b] = d[a][b].min(1);
                }
            }
        }
    }
    for mid in 0..n {
        let through: Vec<u32> = d[mid].clone();
        d.par_iter_mut().for_each(|row| {
            let to_mid = row[mid];
            for (y, via) in through.iter().enumerate() {
                let alt = to_mid.saturating_add(*via);
                if alt < row[y] {
                    row[y] = alt;
                }
            }
        });
    }
    let diameter = d.iter().flatten().copied().max().unwrap_or(0);
    Ok(MaximizedInstance {
        m,
        t,
        classification,
        sm: sm_report.domains,
        sm_plus: sm_plus.iter().map(|&u| inst.domains[u].clone()).collect(),
        original_diameter: inst.diameter(),
        topspace: TopSpace {
            points: inst.points.clone(),
            distances: d,
            diameter,
            coned_slices: cones.len(),
        },
    })
}

// ---------------------------------------------------------------------------
// Fixtures

/// Small instances used by tests, examples and the command line.
pub mod fixtures {
    use super::*;

    pub const GRID_RADIUS: i32 = 4;

    fn line_space(radius: i32) -> CSpaceSpec {
        let nodes: Vec<String> = (-radius..=radius).map(|i| i.to_string()).collect();
        let n = nodes.len();
        let adjacency = (0..n)
            .map(|i| {
                let mut row = Vec::new();
                if i > 0 {
                    row.push(i - 1);
                }
                if i + 1 < n {
                    row.push(i + 1);
                }
                row
            })
            .collect();
        CSpaceSpec { nodes, adjacency }
    }

    fn point_space() -> CSpaceSpec {
        CSpaceSpec {
            nodes: vec!["*".into()],
            adjacency: vec![vec![]],
        }
    }

    fn rel(a: &str, b: &str, kind: RelationKind) -> RelationSpec {
        RelationSpec {
            a: a.into(),
            b: b.into(),
            kind,
        }
    }

    fn rho(from: &str, to: &str, set: &[&str]) -> RhoSpec {
        RhoSpec {
            from: from.into(),
            to: to.into(),
            set: set.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unbounded(names: &[&str]) -> BTreeMap<String, DomainFlags> {
        names
            .iter()
            .map(|n| (n.to_string(), DomainFlags { unbounded: true }))
            .collect()
    }

    fn grid_points(xs: i32, ys: i32) -> (Vec<(i32, i32)>, SpaceSpec) {
        let coords: Vec<(i32, i32)> = (-xs..=xs)
            .flat_map(|x| (-ys..=ys).map(move |y| (x, y)))
            .collect();
        let points = coords.iter().map(|(x, y)| format!("{x},{y}")).collect();
        let distances = coords
            .iter()
            .map(|a| {
                coords
                    .iter()
                    .map(|b| a.0.abs_diff(b.0) + a.1.abs_diff(b.1))
                    .collect()
            })
            .collect();
        (coords, SpaceSpec { points, distances })
    }

    /// `{−4..4}²` with the ℓ¹ metric. `H` and `V` are the coordinate lines
    /// with coordinate projections, orthogonal to each other and nested in
    /// the one-point domain `S`.
    pub fn grid(e: u64) -> HhsFile {
        let (coords, space) = grid_points(GRID_RADIUS, GRID_RADIUS);
        let mut cspaces = BTreeMap::new();
        cspaces.insert("S".into(), point_space());
        cspaces.insert("H".into(), line_space(GRID_RADIUS));
        cspaces.insert("V".into(), line_space(GRID_RADIUS));
        let mut projections = BTreeMap::new();
        projections.insert("S".into(), coords.iter().map(|_| vec!["*".into()]).collect());
        projections.insert(
            "H".into(),
            coords.iter().map(|(x, _)| vec![x.to_string()]).collect(),
        );
        projections.insert(
            "V".into(),
            coords.iter().map(|(_, y)| vec![y.to_string()]).collect(),
        );
        HhsFile {
            space,
            domains: vec!["S".into(), "H".into(), "V".into()],
            relations: vec![
                rel("H", "S", RelationKind::Nested),
                rel("V", "S", RelationKind::Nested),
                rel("H", "V", RelationKind::Orthogonal),
            ],
            cspaces,
            projections,
            rhos: vec![rho("H", "S", &["*"]), rho("V", "S", &["*"])],
            flags: unbounded(&["H", "V"]),
            e,
            m: Some(1),
            slice_tolerance: 0,
        }
    }

    /// The grid with `H` and `V` transverse and no relative projections
    /// between them.
    pub fn grid_transverse(e: u64) -> HhsFile {
        let mut f = grid(e);
        f.relations[2].kind = RelationKind::Transverse;
        f
    }

    /// The grid without the relative projection of `H` into `S`.
    pub fn grid_missing_rho(e: u64) -> HhsFile {
        let mut f = grid(e);
        f.rhos.retain(|r| r.from != "H");
        f
    }

    /// The grid with `π_H` constant at `0`.
    pub fn grid_constant_pi_h(e: u64) -> HhsFile {
        let mut f = grid(e);
        let rows = f.projections.get_mut("H").unwrap();
        for row in rows.iter_mut() {
            *row = vec!["0".into()];
        }
        f
    }

    /// The grid with `V`'s space shrunk to a point: `{−4..4} × {0}`, with
    /// only `H` flagged unbounded.
    pub fn grid_shrunk_v(e: u64) -> HhsFile {
        let (coords, space) = grid_points(GRID_RADIUS, 0);
        let mut f = grid(e);
        f.space = space;
        f.cspaces.insert(
            "V".into(),
            CSpaceSpec {
                nodes: vec!["0".into()],
                adjacency: vec![vec![]],
            },
        );
        f.projections
            .insert("S".into(), coords.iter().map(|_| vec!["*".into()]).collect());
        f.projections.insert(
            "H".into(),
            coords.iter().map(|(x, _)| vec![x.to_string()]).collect(),
        );
        f.projections
            .insert("V".into(), coords.iter().map(|_| vec!["0".into()]).collect());
        f.flags = unbounded(&["H"]);
        f
    }

    /// A path of `len + 1` points that is its own top-level space.
    pub fn single_domain(len: usize) -> HhsFile {
        let radius = len as i32;
        let nodes: Vec<String> = (0..=radius).map(|i| i.to_string()).collect();
        let space = SpaceSpec {
            points: nodes.clone(),
            distances: (0..=radius)
                .map(|a| (0..=radius).map(|b| a.abs_diff(b)).collect())
                .collect(),
        };
        let mut line = line_space(0);
        line.nodes = nodes.clone();
        line.adjacency = (0..nodes.len())
            .map(|i| {
                [i.checked_sub(1), (i + 1 < nodes.len()).then_some(i + 1)]
                    .into_iter()
                    .flatten()
                    .collect()
            })
            .collect();
        let mut cspaces = BTreeMap::new();
        cspaces.insert("S".into(), line);
        let mut projections = BTreeMap::new();
        projections.insert("S".into(), nodes.iter().map(|n| vec![n.clone()]).collect());
        HhsFile {
            space,
            domains: vec!["S".into()],
            relations: vec![],
            cspaces,
            projections,
            rhos: vec![],
            flags: BTreeMap::new(),
            e: 1,
            m: Some(1),
            slice_tolerance: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    fn load(f: &HhsFile) -> HhsInstance {
        HhsInstance::new(f).unwrap()
    }

    fn minimal(report: &AxiomReport) -> Vec<Option<u64>> {
        report.axioms.iter().map(|a| a.minimal_constant).collect()
    }

    #[test]
    fn grid_minimal_constants() {
        let report = check_axioms(&load(&grid(2))).unwrap();
        assert!(report.all_pass, "{:?}", report.failing());
        assert_eq!(
            minimal(&report),
            [1, 0, 0, 0, 0, 2, 0, 2, 0, 2, 0, 0].map(Some)
        );
        assert_eq!(report.minimal_e, Some(2));
        assert!(report.clean_containers);
    }

    #[test]
    fn grid_at_one_fails_chain_uniqueness_and_large_links() {
        let report = check_axioms(&load(&grid(1))).unwrap();
        assert_eq!(report.failing(), [6, 8, 10]);
        assert_eq!(report.result(6).witness.as_ref().unwrap()["length"], 2);
        assert_eq!(report.result(8).witness.as_ref().unwrap()["r"], 3);
    }

    #[test]
    fn grid_theta_table() {
        let report = check_axioms(&load(&grid(2))).unwrap();
        let theta: Vec<u64> = report.theta.iter().map(|r| r.theta).collect();
        // θ(r) = 2r − 1 until the grid runs out, then diam + 1.
        assert_eq!(theta, [0, 1, 3, 5, 7, 9, 11, 13, 15, 17]);
    }

    #[test]
    fn transverse_without_rho_fails_transversality() {
        let report = check_axioms(&load(&grid_transverse(2))).unwrap();
        assert_eq!(report.failing(), [4]);
        let w = report.result(4).witness.clone().unwrap();
        assert_eq!(w["kind"], "missing_rho");
        assert_eq!(report.result(4).minimal_constant, None);
    }

    #[test]
    fn missing_rho_fails_nesting() {
        let report = check_axioms(&load(&grid_missing_rho(2))).unwrap();
        assert_eq!(report.failing(), [2]);
        assert_eq!(report.result(2).witness.as_ref().unwrap()["from"], "H");
    }

    #[test]
    fn constant_projection_fails_uniqueness() {
        let report = check_axioms(&load(&grid_constant_pi_h(4))).unwrap();
        assert_eq!(report.failing(), [8]);
        assert_eq!(report.result(8).minimal_constant, Some(5));
        let w = report.result(8).witness.clone().unwrap();
        // A horizontal pair with identical projections everywhere.
        let (x, y) = (w["x"].as_str().unwrap(), w["y"].as_str().unwrap());
        assert_eq!(x.split(',').nth(1), y.split(',').nth(1));
        assert_eq!(w["d_X"], 8);
    }

    #[test]
    fn validation_errors() {
        let mut f = grid(2);
        f.relations.push(RelationSpec {
            a: "H".into(),
            b: "V".into(),
            kind: RelationKind::Nested,
        });
        assert!(matches!(HhsInstance::new(&f), Err(HhsError::Invalid(_))));

        let mut f = grid(2);
        f.rhos.push(RhoSpec {
            from: "H".into(),
            to: "V".into(),
            set: vec!["0".into()],
        });
        assert!(matches!(HhsInstance::new(&f), Err(HhsError::Invalid(_))));

        let mut f = grid(2);
        f.projections.get_mut("H").unwrap()[0] = vec![];
        assert!(matches!(HhsInstance::new(&f), Err(HhsError::Invalid(_))));

        let mut f = grid(2);
        f.cspaces.get_mut("H").unwrap().adjacency[4].clear();
        assert!(matches!(HhsInstance::new(&f), Err(HhsError::Invalid(_))));

        let mut f = grid(2);
        f.space.distances[0][1] += 1;
        assert!(matches!(HhsInstance::new(&f), Err(HhsError::Invalid(_))));

        assert!(matches!(
            HhsInstance::from_json("{\"space\": 1}"),
            Err(HhsError::Parse(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let f = grid(2);
        let text = serde_json::to_string(&f).unwrap();
        let back: HhsFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        let extra = text.replacen('{', "{\"bogus\":1,", 1);
        assert!(HhsInstance::from_json(&extra).is_err());
    }

    #[test]
    fn nesting_closure_is_transitive() {
        let mut f = grid(3);
        f.domains.push("T".into());
        f.cspaces.insert("T".into(), f.cspaces["H"].clone());
        f.projections.insert("T".into(), f.projections["H"].clone());
        f.relations.push(RelationSpec {
            a: "T".into(),
            b: "H".into(),
            kind: RelationKind::Nested,
        });
        let inst = load(&f);
        let (s, t, v) = (inst.domain("S").unwrap(), inst.domain("T").unwrap(), inst.domain("V").unwrap());
        assert!(inst.strictly_nested(t, s));
        assert!(inst.transverse(t, v));
    }

    #[test]
    fn product_region_and_slices() {
        let inst = load(&grid(2));
        let h = inst.domain("H").unwrap();
        assert_eq!(product_region(&inst, h, 1).len(), 81);
        let f = slices(&inst, h, SliceKind::F);
        assert_eq!(f.len(), 9);
        for slice in &f {
            let y: Vec<&str> = slice.iter().map(|&p| inst.points()[p].split(',').nth(1).unwrap()).collect();
            assert!(y.iter().all(|c| *c == y[0]));
            assert_eq!(slice.len(), 9);
        }
        let s = inst.domain("S").unwrap();
        assert_eq!(slices(&inst, s, SliceKind::F).len(), 1);
        assert_eq!(product_region(&inst, s, 0).len(), 81);
    }

    #[test]
    fn slice_tolerance_merges_rows() {
        let mut inst = load(&grid(2));
        inst.set_slice_tolerance(2);
        let h = inst.domain("H").unwrap();
        assert_eq!(slices(&inst, h, SliceKind::F).len(), 1);
    }

    #[test]
    fn gate_examples() {
        let inst = load(&grid(2));
        let (h, v) = (inst.domain("H").unwrap(), inst.domain("V").unwrap());
        let x = inst.point("3,2").unwrap();
        let g = gate(&inst, h, x).unwrap();
        assert_eq!(inst.projection(h, g), inst.projection(h, x));
        let g = gate(&inst, v, x).unwrap();
        assert_eq!(inst.projection(v, g), inst.projection(v, x));
        for p in product_region(&inst, h, inst.e()) {
            let g = gate(&inst, h, p).unwrap();
            assert_eq!(gate_deviation(&inst, h, p, g), gate_deviation(&inst, h, p, p));
        }
    }

    #[test]
    fn distance_formula_examples() {
        let inst = load(&grid(2));
        assert_eq!(distance_formula_fit(&inst, 1), DistanceFit { threshold: 1, k: 1, c: 0 });
        assert_eq!(distance_formula_fit(&inst, 3), DistanceFit { threshold: 3, k: 1, c: 4 });
        let single = load(&single_domain(6));
        assert_eq!(distance_formula_fit(&single, 1), DistanceFit { threshold: 1, k: 1, c: 0 });
    }

    #[test]
    fn sm_examples() {
        let inst = load(&grid(2));
        let (_, r) = compute_sm(&inst, 1);
        assert_eq!(r.domains, ["H", "V"]);
        assert!(r.closed_under_nesting);
        assert!(compute_sm(&inst, 100).1.domains.is_empty());
        let t = load(&grid_transverse(2));
        assert!(compute_sm(&t, 0).1.domains.is_empty());
    }

    #[test]
    fn maximize_grid() {
        let inst = load(&grid(2));
        let out = maximize(&inst, 1).unwrap();
        assert_eq!(out.t, ["S", "H", "V"]);
        assert_eq!(out.classification["H"], DomainClass::Unb);
        assert_eq!(out.classification["V"], DomainClass::Unb);
        assert_eq!(out.topspace.diameter, 2);
        assert_eq!(out.original_diameter, 16);
        assert_eq!(out.topspace.points, inst.points());
        for x in 0..81 {
            for y in 0..81 {
                assert!(out.topspace.distances[x][y] <= inst.distance(x, y));
            }
        }
    }

    #[test]
    fn maximize_single_domain_is_identity() {
        let inst = load(&single_domain(5));
        let out = maximize(&inst, 1).unwrap();
        assert_eq!(out.t, ["S"]);
        assert_eq!(out.topspace.distances, inst.dist);
    }

    #[test]
    fn maximize_shrunk_v() {
        let inst = load(&grid_shrunk_v(2));
        let out = maximize(&inst, 1).unwrap();
        assert!(out.sm.is_empty());
        assert_eq!(out.sm_plus, ["H"]);
        assert_eq!(out.t, ["S", "H"]);
        assert_eq!(out.classification["H"], DomainClass::Min);
        assert_eq!(out.classification["V"], DomainClass::Dropped);
        // H's single F-slice is the whole line.
        assert_eq!(out.topspace.diameter, 1);
    }

    #[test]
    fn maximize_requires_axioms() {
        let inst = load(&grid(1));
        assert!(matches!(maximize(&inst, 1), Err(HhsError::PreconditionFailed(_))));
    }

    fn with_bigger_rhos(f: &HhsFile) -> HhsFile {
        let mut g = f.clone();
        for r in &mut g.rhos {
            let nodes = &f.cspaces[&r.to].nodes;
            let extra = nodes.iter().find(|n| !r.set.contains(n)).cloned();
            r.set.extend(extra);
        }
        g
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// Moving relative projections can only raise the constants that
        /// measure distances to them; enlarging them can only lower them.
        #[test]
        fn enlarging_rhos_never_hurts_distance_axioms(shift in -4i32..=4) {
            let mut f = grid_transverse(2);
            f.rhos.push(RhoSpec { from: "H".into(), to: "V".into(), set: vec![shift.to_string()] });
            f.rhos.push(RhoSpec { from: "V".into(), to: "H".into(), set: vec![(-shift).to_string()] });
            let base = check_axioms(&load(&f)).unwrap();
            let bigger = check_axioms(&load(&with_bigger_rhos(&f))).unwrap();
            for axiom in [9u8, 11, 12] {
                let (a, b) = (base.result(axiom).minimal_constant, bigger.result(axiom).minimal_constant);
                prop_assert!(b <= a, "axiom {} went from {:?} to {:?}", axiom, a, b);
            }
        }

        #[test]
        fn sm_closed_under_nesting(m in 0u64..10) {
            for f in [grid(2), grid_transverse(2), grid_shrunk_v(2)] {
                let inst = load(&f);
                prop_assert!(compute_sm(&inst, m).1.closed_under_nesting);
            }
        }
    }
}
