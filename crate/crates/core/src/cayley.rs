//! Finite balls in Cayley graphs of graph products, with the standard word
//! metric or with star subgroups coned off.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Subgraph, Vertex};
use crate::word::{GraphProduct, NormalForm, Prefix, Syllable, WordError};

pub const DEFAULT_NODE_LIMIT: usize = 2_000_000;
pub const DEFAULT_DELTA_BUDGET: u64 = 10_000_000;
pub const DEFAULT_DELTA_SEED: u64 = 0x5eed;
/// Points whose pairwise distances are computed when δ is sampled.
const DELTA_SAMPLE_POINTS: usize = 512;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CayleyError {
    #[error("ball exceeds the node limit of {limit} points")]
    NodeLimitExceeded { limit: usize },
    #[error("family member {0} has empty link")]
    InvalidFamily(String),
    #[error("element of length {length} lies outside the ball of radius {radius}")]
    OutOfBall { length: u64, radius: u64 },
    #[error(transparent)]
    Word(#[from] WordError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricKind {
    Standard,
    /// Cone off `G_st(v)` for every vertex `v`.
    ConedVertexStars,
    /// Cone off `G_st(Λ)` for every listed `Λ`.
    ConedFamily(Vec<Subgraph>),
}

#[derive(Debug, Clone, Copy)]
pub struct BallOptions {
    pub node_limit: usize,
    /// Reject family members with empty link.
    pub strict_family: bool,
}

impl Default for BallOptions {
    fn default() -> Self {
        BallOptions {
            node_limit: DEFAULT_NODE_LIMIT,
            strict_family: false,
        }
    }
}

/// Stars coned off by a metric kind, deduplicated, in ShortLex order of the
/// coned subgraph.
pub fn coned_stars(
    gp: &GraphProduct,
    kind: &MetricKind,
    strict: bool,
) -> Result<Vec<Subgraph>, CayleyError> {
    let graph = gp.graph();
    let mut members: Vec<Subgraph> = match kind {
        MetricKind::Standard => return Ok(Vec::new()),
        MetricKind::ConedVertexStars => (0..gp.rank()).map(Subgraph::single).collect(),
        MetricKind::ConedFamily(family) => family.clone(),
    };
    members.sort_by_key(|s| s.shortlex_key());
    let mut stars = Vec::new();
    for m in members {
        if m.is_empty() || (strict && graph.link(m).is_empty()) {
            return Err(CayleyError::InvalidFamily(graph.format_subgraph(m)));
        }
        let st = graph.star(m);
        if !stars.contains(&st) {
            stars.push(st);
        }
    }
    Ok(stars)
}

/// A ball of standard radius around `center`, with distances measured in
/// the chosen metric restricted to the ball.
#[derive(Debug, Clone)]
pub struct MetricBall {
    gp: GraphProduct,
    center: NormalForm,
    radius: u64,
    kind: MetricKind,
    points: Vec<NormalForm>,
    index: HashMap<NormalForm, u32>,
    /// Standard distance from the center.
    word_len: Vec<u32>,
    /// Generator edges inside the ball.
    gen_adj: Vec<Vec<u32>>,
    /// Cosets of coned star subgroups, as cliques of point ids.
    cliques: Vec<Vec<u32>>,
    point_cliques: Vec<Vec<u32>>,
    dist: Vec<u32>,
}

pub fn build_ball(
    gp: &GraphProduct,
    center: &NormalForm,
    radius: u64,
    kind: MetricKind,
    options: BallOptions,
) -> Result<MetricBall, CayleyError> {
    if center.ambient() != gp.id() {
        return Err(WordError::MixedAmbient.into());
    }
    let stars = coned_stars(gp, &kind, options.strict_family)?;
    let gens = gp.generators();

    let mut offsets = vec![gp.identity()];
    let mut index: HashMap<NormalForm, u32> = HashMap::new();
    index.insert(gp.identity(), 0);
    let mut word_len = vec![0u32];
    let mut gen_adj: Vec<Vec<u32>> = vec![Vec::new()];
    let mut frontier = vec![0u32];
    for layer in 1..=radius {
        let expanded: Vec<Vec<NormalForm>> = frontier
            .par_iter()
            .map(|&i| {
                gens.iter()
                    .map(|s| gp.mul_syllable(&offsets[i as usize], s))
                    .collect()
            })
            .collect();
        let mut next = Vec::new();
        for (&i, neighbours) in frontier.iter().zip(expanded) {
            for y in neighbours {
                let j = match index.get(&y) {
                    Some(&j) => j,
                    None => {
                        if offsets.len() >= options.node_limit {
                            return Err(CayleyError::NodeLimitExceeded {
                                limit: options.node_limit,
                            });
                        }
                        let j = offsets.len() as u32;
                        index.insert(y.clone(), j);
                        offsets.push(y);
                        word_len.push(layer as u32);
                        gen_adj.push(Vec::new());
                        next.push(j);
                        j
                    }
                };
                if !gen_adj[i as usize].contains(&j) {
                    gen_adj[i as usize].push(j);
                    gen_adj[j as usize].push(i);
                }
            }
        }
        frontier = next;
    }

    let points: Vec<NormalForm> = if center.is_identity() {
        offsets
    } else {
        offsets.par_iter().map(|x| gp.mul(center, x)).collect()
    };
    let index: HashMap<NormalForm, u32> = if center.is_identity() {
        index
    } else {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect()
    };

    let mut cliques = Vec::new();
    let mut point_cliques = vec![Vec::new(); points.len()];
    for &st in &stars {
        let keys: Vec<NormalForm> = points.par_iter().map(|p| gp.strip_right(p, st)).collect();
        let mut buckets: HashMap<NormalForm, Vec<u32>> = HashMap::new();
        for (i, key) in keys.into_iter().enumerate() {
            buckets.entry(key).or_default().push(i as u32);
        }
        let mut members: Vec<Vec<u32>> = buckets.into_values().filter(|b| b.len() > 1).collect();
        members.sort_unstable();
        for clique in members {
            let id = cliques.len() as u32;
            for &p in &clique {
                point_cliques[p as usize].push(id);
            }
            cliques.push(clique);
        }
    }

    let mut ball = MetricBall {
        gp: gp.clone(),
        center: center.clone(),
        radius,
        kind,
        points,
        index,
        word_len,
        gen_adj,
        cliques,
        point_cliques,
        dist: Vec::new(),
    };
    ball.dist = ball.distances_from(0);
    Ok(ball)
}

impl MetricBall {
    pub fn center(&self) -> &NormalForm {
        &self.center
    }

    pub fn radius(&self) -> u64 {
        self.radius
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[NormalForm] {
        &self.points
    }

    pub fn index_of(&self, x: &NormalForm) -> Option<usize> {
        self.index.get(x).map(|&i| i as usize)
    }

    /// Standard distance of each point from the center.
    pub fn word_lengths(&self) -> &[u32] {
        &self.word_len
    }

    /// Ball-metric distance of each point from the center.
    pub fn dist(&self) -> &[u32] {
        &self.dist
    }

    pub fn dist_to(&self, x: &NormalForm) -> Option<u32> {
        self.index_of(x).map(|i| self.dist[i])
    }

    pub fn is_coned(&self) -> bool {
        self.kind != MetricKind::Standard
    }

    /// BFS distances from point `src` inside the ball.
    pub fn distances_from(&self, src: usize) -> Vec<u32> {
        let n = self.points.len();
        let mut dist = vec![u32::MAX; n];
        let mut clique_done = vec![false; self.cliques.len()];
        dist[src] = 0;
        let mut frontier = vec![src as u32];
        let mut d = 0;
        while !frontier.is_empty() {
            d += 1;
            let mut next = Vec::new();
            for &x in &frontier {
                for &y in &self.gen_adj[x as usize] {
                    if dist[y as usize] == u32::MAX {
                        dist[y as usize] = d;
                        next.push(y);
                    }
                }
                for &c in &self.point_cliques[x as usize] {
                    if std::mem::replace(&mut clique_done[c as usize], true) {
                        continue;
                    }
                    for &y in &self.cliques[c as usize] {
                        if dist[y as usize] == u32::MAX {
                            dist[y as usize] = d;
                            next.push(y);
                        }
                    }
                }
            }
            frontier = next;
        }
        dist
    }

    /// Pairwise distances among `ids`: exact word metric for standard balls,
    /// ball-restricted BFS otherwise.
    pub fn pairwise(&self, ids: &[usize]) -> Vec<Vec<u32>> {
        ids.par_iter()
            .map(|&i| {
                if self.is_coned() {
                    let row = self.distances_from(i);
                    ids.iter().map(|&j| row[j]).collect()
                } else {
                    ids.iter()
                        .map(|&j| self.gp.distance(&self.points[i], &self.points[j]) as u32)
                        .collect()
                }
            })
            .collect()
    }

    /// `point_id,word,dist` rows.
    pub fn write_points_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "point_id,word,dist")?;
        for (i, p) in self.points.iter().enumerate() {
            writeln!(out, "{},{},{}", i, self.gp.format(p), self.dist[i])?;
        }
        Ok(())
    }

    /// `source,target,kind` rows, one per undirected edge.
    pub fn write_edges_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "source,target,kind")?;
        let mut seen = HashSet::new();
        for (i, adj) in self.gen_adj.iter().enumerate() {
            for &j in adj {
                if (i as u32) < j && seen.insert((i as u32, j)) {
                    writeln!(out, "{i},{j},generator")?;
                }
            }
        }
        for clique in &self.cliques {
            for (a, &i) in clique.iter().enumerate() {
                for &j in &clique[a + 1..] {
                    let (i, j) = (i.min(j), i.max(j));
                    if seen.insert((i, j)) {
                        writeln!(out, "{i},{j},cone")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Minimal number of steps from the identity to `g`, where a step either
/// multiplies by an element of one of `stars`' subgroups or by a single
/// generator.
///
/// Every path in the coned Cayley graph gives a factorization of `g`, and
/// any factorization can be rearranged into a reduced one, so it suffices to
/// cut the syllable heap of `g` into consecutive blocks. All prefixes of the
/// heap have length at most `|g|`, hence this is also the distance inside
/// any ball of radius at least `|g|`.
pub fn coned_length(gp: &GraphProduct, g: &NormalForm, stars: &[Subgraph]) -> u64 {
    let trace = gp.trace(g);
    if trace.is_empty() {
        return 0;
    }
    let covered = stars.iter().fold(Subgraph::EMPTY, |acc, &s| acc.union(s));
    let uncovered = gp.graph().all().difference(covered);
    // Syllables off every star are only reachable one generator at a time.
    let lengths: Vec<Vec<u64>> = (0..gp.rank())
        .map(|v| {
            g.syllables()
                .iter()
                .filter(|s| s.vertex == v)
                .map(|s| gp.group(v).length(&s.element))
                .collect()
        })
        .collect();
    let mut best: HashMap<Prefix, u64> = HashMap::new();
    let mut queue = BinaryHeap::new();
    let start = trace.empty_prefix();
    best.insert(start.clone(), 0);
    queue.push(Reverse((0u64, start)));
    while let Some(Reverse((d, p))) = queue.pop() {
        if trace.is_complete(&p) {
            return d;
        }
        if best.get(&p).is_some_and(|&b| b < d) {
            continue;
        }
        let mut moves: Vec<(Prefix, u64)> = stars
            .iter()
            .map(|&s| (trace.extend_within(&p, s), 1))
            .collect();
        for v in uncovered.iter() {
            let q = trace.extend_by_one(&p, v);
            if let Some(q) = q {
                moves.push((q, lengths[v][p[v] as usize]));
            }
        }
        for (q, w) in moves {
            if q == p {
                continue;
            }
            let nd = d + w;
            if best.get(&q).is_none_or(|&b| nd < b) {
                best.insert(q.clone(), nd);
                queue.push(Reverse((nd, q)));
            }
        }
    }
    unreachable!("the complete prefix is always reachable")
}

pub fn vertex_stars(gp: &GraphProduct) -> Vec<Subgraph> {
    coned_stars(gp, &MetricKind::ConedVertexStars, false).expect("vertex stars are valid")
}

/// Distance from the identity to `g` in the vertex-star coned Cayley graph,
/// restricted to the ball of radius `radius`.
pub fn cone_distance_restricted(
    gp: &GraphProduct,
    g: &NormalForm,
    radius: u64,
) -> Result<u64, CayleyError> {
    let length = gp.word_length(g);
    if length > radius {
        return Err(CayleyError::OutOfBall { length, radius });
    }
    Ok(coned_length(gp, g, &vertex_stars(gp)))
}

/// Cuts `g` into star-supported factors, always taking the largest
/// shuffle-accessible prefix that fits in one vertex star. Ties go to the
/// star that is least in ShortLex order, then to the lower vertex.
pub fn greedy_star_factorization(gp: &GraphProduct, g: &NormalForm) -> Vec<(NormalForm, Vertex)> {
    let graph = gp.graph();
    let mut order: Vec<(Subgraph, Vertex)> = (0..gp.rank())
        .map(|v| (graph.star(Subgraph::single(v)), v))
        .collect();
    order.sort_by_key(|&(st, v)| (st.shortlex_key(), v));
    let trace = gp.trace(g);
    let mut prefix = trace.empty_prefix();
    let mut out = Vec::new();
    while !trace.is_complete(&prefix) {
        let mut best: Option<(usize, Prefix, Vertex)> = None;
        for &(st, v) in &order {
            let q = trace.extend_within(&prefix, st);
            let size = trace.prefix_size(&q);
            if best.as_ref().is_none_or(|(b, _, _)| size > *b) {
                best = Some((size, q, v));
            }
        }
        let (_, q, v) = best.expect("graph has vertices");
        let factor = gp
            .normalize(&trace.difference(&prefix, &q))
            .expect("heap syllables are valid");
        out.push((factor, v));
        prefix = q;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaMethod {
    Exhaustive,
    Sampled { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaReport {
    /// Twice δ; Gromov products are half-integers.
    pub delta_halves: u64,
    pub delta: f64,
    pub sample_size: u64,
    pub points: usize,
    pub method: DeltaMethod,
}

impl DeltaReport {
    fn new(delta_halves: u64, sample_size: u64, points: usize, method: DeltaMethod) -> Self {
        DeltaReport {
            delta_halves,
            delta: delta_halves as f64 / 2.0,
            sample_size,
            points,
            method,
        }
    }
}

/// Twice the four-point defect: largest minus second-largest of the three
/// pair sums.
fn defect(d: &[Vec<u32>], x: usize, y: usize, z: usize, w: usize) -> u64 {
    let s1 = d[x][y] + d[z][w];
    let s2 = d[x][z] + d[y][w];
    let s3 = d[x][w] + d[y][z];
    let (hi, mid) = if s1 >= s2 {
        if s2 >= s3 {
            (s1, s2)
        } else if s1 >= s3 {
            (s1, s3)
        } else {
            (s3, s1)
        }
    } else if s1 >= s3 {
        (s2, s1)
    } else if s2 >= s3 {
        (s2, s3)
    } else {
        (s3, s2)
    };
    u64::from(hi - mid)
}

fn quadruples(n: u64) -> u64 {
    if n < 4 {
        0
    } else {
        n * (n - 1) / 2 * (n - 2) / 3 * (n - 3) / 4
    }
}

/// Four-point δ of the ball metric. Exhaustive over all 4-point subsets
/// when there are at most `budget` of them; otherwise `budget` quadruples
/// are sampled from a seeded subset of the points.
pub fn four_point_delta(ball: &MetricBall, budget: u64, seed: u64) -> DeltaReport {
    let n = ball.len();
    if quadruples(n as u64) <= budget {
        let ids: Vec<usize> = (0..n).collect();
        return delta_of_metric(&ball.pairwise(&ids), budget, seed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<usize> = (0..n).collect();
    let m = n.min(DELTA_SAMPLE_POINTS);
    for i in 0..m {
        let j = rng.gen_range(i..n);
        ids.swap(i, j);
    }
    ids.truncate(m);
    ids.sort_unstable();
    let worst = sampled_defect(&ball.pairwise(&ids), budget, seed);
    DeltaReport::new(worst, budget, n, DeltaMethod::Sampled { seed })
}

/// Four-point δ of a finite metric given as a distance matrix.
pub fn delta_of_metric(d: &[Vec<u32>], budget: u64, seed: u64) -> DeltaReport {
    let n = d.len();
    let total = quadruples(n as u64);
    if total > budget {
        let worst = sampled_defect(d, budget, seed);
        return DeltaReport::new(worst, budget, n, DeltaMethod::Sampled { seed });
    }
    let worst = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut worst = 0;
            for y in x + 1..n {
                for z in y + 1..n {
                    for w in z + 1..n {
                        worst = worst.max(defect(d, x, y, z, w));
                    }
                }
            }
            worst
        })
        .max()
        .unwrap_or(0);
    DeltaReport::new(worst, total, n, DeltaMethod::Exhaustive)
}

/// Sampling is split into a fixed number of independently seeded chunks so
/// the result does not depend on the worker count.
const SAMPLE_CHUNKS: u64 = 64;

fn sampled_defect(d: &[Vec<u32>], budget: u64, seed: u64) -> u64 {
    let m = d.len();
    if m < 4 {
        return 0;
    }
    let per_chunk = budget.div_ceil(SAMPLE_CHUNKS);
    (0..SAMPLE_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ (c + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let count = per_chunk.min(budget.saturating_sub(c * per_chunk));
            let mut worst = 0;
            for _ in 0..count {
                let q = rand::seq::index::sample(&mut rng, m, 4);
                worst = worst.max(defect(d, q.index(0), q.index(1), q.index(2), q.index(3)));
            }
            worst
        })
        .max()
        .unwrap_or(0)
}

/// Generators spelling `x`, vertex by vertex in normal-form order.
pub fn spell_letters(gp: &GraphProduct, x: &NormalForm) -> Vec<Syllable> {
    x.syllables()
        .iter()
        .flat_map(|s| {
            gp.group(s.vertex)
                .spell(&s.element)
                .into_iter()
                .map(move |e| Syllable::new(s.vertex, e))
        })
        .collect()
}

/// The path from `x` through the prefixes of `letters`.
pub fn walk(gp: &GraphProduct, x: &NormalForm, letters: &[Syllable]) -> Vec<NormalForm> {
    let mut path = Vec::with_capacity(letters.len() + 1);
    path.push(x.clone());
    for s in letters {
        let next = gp.mul_syllable(path.last().unwrap(), s);
        path.push(next);
    }
    path
}

/// Geodesic from `x` to `y` spelling the normal form of `x⁻¹y` one
/// generator at a time.
pub fn standard_geodesic(gp: &GraphProduct, x: &NormalForm, y: &NormalForm) -> Vec<NormalForm> {
    walk(gp, x, &spell_letters(gp, &gp.between(x, y)))
}

/// A random geodesic from `x` to `y`: a random commuting reshuffle of the
/// letters of `x⁻¹y`.
pub fn random_geodesic<R: Rng>(
    gp: &GraphProduct,
    x: &NormalForm,
    y: &NormalForm,
    rng: &mut R,
) -> Vec<NormalForm> {
    let letters = spell_letters(gp, &gp.between(x, y));
    walk(gp, x, &gp.random_extension(&letters, rng))
}
