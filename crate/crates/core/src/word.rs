//! Graph products of vertex groups and their syllable normal forms.
//!
//! A word is a sequence of syllables, each a nonidentity element of one
//! vertex group. Syllables on adjacent vertices commute. A word is reduced
//! when no two syllables on the same vertex are separated only by syllables
//! commuting with that vertex; reduced words for the same element differ by
//! shuffles of commuting neighbours. The canonical representative is the
//! shuffle whose vertex sequence is lexicographically least.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::Rng;

use thiserror::Error;

use crate::graph::{GraphError, SimplicialGraph, Subgraph, Vertex};
use crate::group::{GroupElement, GroupError, VertexGroup, VertexGroupSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("no vertex group given for vertex `{0}`")]
    MissingVertexGroup(String),
    #[error("vertex group given for unknown vertex `{0}`")]
    UnknownGroupVertex(String),
    #[error("invalid syllable: {0}")]
    InvalidSyllable(String),
    #[error("elements belong to different graph products")]
    MixedAmbient,
    #[error("element support {support} is not contained in the star {star}")]
    NotInStar { support: String, star: String },
    #[error("subgraph {0} has empty link")]
    EmptyLink(String),
    #[error("subgraph must be nonempty")]
    EmptySubgraph,
}

/// One nonidentity vertex-group element, tagged with its vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syllable {
    pub vertex: Vertex,
    pub element: GroupElement,
}

impl Syllable {
    pub fn new(vertex: Vertex, element: GroupElement) -> Self {
        Syllable { vertex, element }
    }
}

/// Canonical reduced syllable sequence for an element of a graph product.
///
/// The derived ordering is structural; use [`GraphProduct::shortlex_cmp`]
/// for ShortLex comparison.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalForm {
    ambient: u64,
    syllables: Vec<Syllable>,
}

impl NormalForm {
    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn syllable_count(&self) -> usize {
        self.syllables.len()
    }

    pub fn ambient(&self) -> u64 {
        self.ambient
    }
}

/// Result of splitting an element of `G_st(Λ)` into a `G_Λ` part and a
/// `G_lk(Λ)` part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarDecomposition {
    /// Part supported in Λ; lies in the star of `v`.
    pub h: NormalForm,
    /// A vertex of lk(Λ).
    pub v: Vertex,
    /// Part supported in lk(Λ); lies in the star of `w`.
    pub k: NormalForm,
    /// A vertex of Λ.
    pub w: Vertex,
}

/// A graph product `G_Γ` with concrete vertex groups.
#[derive(Debug, Clone)]
pub struct GraphProduct {
    graph: SimplicialGraph,
    groups: Vec<VertexGroup>,
    /// `blocks[u]`: vertices whose syllables do not commute with a
    /// `u`-syllable (everything outside the link of `u`, `u` included).
    blocks: Vec<u64>,
    id: u64,
}

impl PartialEq for GraphProduct {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.graph == other.graph && self.groups == other.groups
    }
}

impl Eq for GraphProduct {}

impl GraphProduct {
    pub fn new(graph: SimplicialGraph, groups: Vec<VertexGroup>) -> Result<Self, WordError> {
        if groups.len() != graph.len() {
            let missing = graph.names().get(groups.len()).cloned().unwrap_or_default();
            return Err(WordError::MissingVertexGroup(missing));
        }
        let blocks = (0..graph.len())
            .map(|u| !graph.neighbours(u).bits())
            .collect();
        let mut hasher = DefaultHasher::new();
        graph.names().hash(&mut hasher);
        for u in 0..graph.len() {
            graph.neighbours(u).bits().hash(&mut hasher);
        }
        format!("{:?}", groups.iter().map(VertexGroup::spec).collect::<Vec<_>>()).hash(&mut hasher);
        Ok(GraphProduct {
            graph,
            groups,
            blocks,
            id: hasher.finish(),
        })
    }

    /// Every vertex group equal to `spec`.
    pub fn uniform(graph: SimplicialGraph, spec: VertexGroupSpec) -> Result<Self, WordError> {
        let group = VertexGroup::new(spec)?;
        let groups = vec![group; graph.len()];
        Self::new(graph, groups)
    }

    /// Right-angled Artin group: every vertex group ℤ.
    pub fn raag(graph: SimplicialGraph) -> Self {
        Self::uniform(graph, VertexGroupSpec::Integer).expect("ℤ vertex groups are valid")
    }

    /// Vertex groups keyed by vertex name.
    pub fn from_named_specs(
        graph: SimplicialGraph,
        specs: &BTreeMap<String, VertexGroupSpec>,
    ) -> Result<Self, WordError> {
        for name in specs.keys() {
            if graph.vertex(name).is_none() {
                return Err(WordError::UnknownGroupVertex(name.clone()));
            }
        }
        let groups = graph
            .names()
            .iter()
            .map(|name| {
                let spec = specs
                    .get(name)
                    .ok_or_else(|| WordError::MissingVertexGroup(name.clone()))?;
                Ok(VertexGroup::new(spec.clone())?)
            })
            .collect::<Result<Vec<_>, WordError>>()?;
        Self::new(graph, groups)
    }

    pub fn graph(&self) -> &SimplicialGraph {
        &self.graph
    }

    pub fn group(&self, v: Vertex) -> &VertexGroup {
        &self.groups[v]
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn rank(&self) -> usize {
        self.graph.len()
    }

    pub fn all_infinite(&self) -> bool {
        self.groups.iter().all(VertexGroup::is_infinite)
    }

    /// Whether syllables on `u` and `v` commute (distinct adjacent vertices).
    pub fn commute(&self, u: Vertex, v: Vertex) -> bool {
        self.blocks[u] & (1 << v) == 0
    }

    /// Vertices that block a `u`-syllable from shuffling past them.
    pub fn blockers(&self, u: Vertex) -> u64 {
        self.blocks[u]
    }

    pub fn identity(&self) -> NormalForm {
        NormalForm {
            ambient: self.id,
            syllables: Vec::new(),
        }
    }

    /// Single-syllable element; errors on identity or invalid elements.
    pub fn syllable(&self, vertex: Vertex, element: GroupElement) -> Result<NormalForm, WordError> {
        self.check_syllable(&Syllable::new(vertex, element.clone()))?;
        Ok(NormalForm {
            ambient: self.id,
            syllables: vec![Syllable::new(vertex, element)],
        })
    }

    /// Generator `vertex^1` of a ℤ or cyclic vertex group, or the first free
    /// generator.
    pub fn generator(&self, name: &str) -> NormalForm {
        self.parse_word(name).expect("generator literal")
    }

    fn check_syllable(&self, s: &Syllable) -> Result<(), WordError> {
        if s.vertex >= self.rank() {
            return Err(WordError::InvalidSyllable(format!("unknown vertex index {}", s.vertex)));
        }
        if !self.groups[s.vertex].is_valid(&s.element) {
            return Err(WordError::InvalidSyllable(format!(
                "`{}` is not a nonidentity element of the group at `{}`",
                s.element,
                self.graph.name(s.vertex)
            )));
        }
        Ok(())
    }

    fn check_ambient(&self, x: &NormalForm) -> Result<(), WordError> {
        if x.ambient == self.id {
            Ok(())
        } else {
            Err(WordError::MixedAmbient)
        }
    }

    /// Canonical normal form of the product of `word`.
    pub fn normalize(&self, word: &[Syllable]) -> Result<NormalForm, WordError> {
        for s in word {
            self.check_syllable(s)?;
        }
        let mut reduced = Vec::with_capacity(word.len());
        for s in word {
            self.push_reduced(&mut reduced, s.clone());
        }
        Ok(self.finish(reduced))
    }

    /// Appends `s` to a reduced word, merging with the nearest same-vertex
    /// syllable it can shuffle back to.
    fn push_reduced(&self, out: &mut Vec<Syllable>, s: Syllable) {
        let u = s.vertex;
        for i in (0..out.len()).rev() {
            let t = out[i].vertex;
            if t == u {
                match self.groups[u].multiply(&out[i].element, &s.element) {
                    Some(e) => out[i].element = e,
                    None => {
                        out.remove(i);
                    }
                }
                return;
            }
            if self.blocks[u] & (1 << t) != 0 {
                break;
            }
        }
        out.push(s);
    }

    fn finish(&self, reduced: Vec<Syllable>) -> NormalForm {
        NormalForm {
            ambient: self.id,
            syllables: self.canonical_order(reduced),
        }
    }

    /// Lexicographically least linear extension of the syllable heap of a
    /// reduced word.
    fn canonical_order(&self, syllables: Vec<Syllable>) -> Vec<Syllable> {
        let n = syllables.len();
        if n < 2 {
            return syllables;
        }
        let mut slots: Vec<Option<Syllable>> = syllables.into_iter().map(Some).collect();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut seen = 0u64;
            let mut best: Option<usize> = None;
            for (j, slot) in slots.iter().enumerate() {
                let Some(s) = slot else { continue };
                let u = s.vertex;
                if seen & self.blocks[u] == 0
                    && best.is_none_or(|b| u < slots[b].as_ref().unwrap().vertex)
                {
                    best = Some(j);
                }
                seen |= 1 << u;
            }
            out.push(slots[best.expect("a reduced heap has a minimal element")].take().unwrap());
        }
        out
    }

    /// Product `x·y`.
    pub fn multiply(&self, x: &NormalForm, y: &NormalForm) -> Result<NormalForm, WordError> {
        self.check_ambient(x)?;
        self.check_ambient(y)?;
        Ok(self.mul(x, y))
    }

    /// Product without the ambient check.
    pub fn mul(&self, x: &NormalForm, y: &NormalForm) -> NormalForm {
        debug_assert!(x.ambient == self.id && y.ambient == self.id);
        if y.is_identity() {
            return x.clone();
        }
        if x.is_identity() {
            return y.clone();
        }
        let mut reduced = x.syllables.clone();
        for s in &y.syllables {
            self.push_reduced(&mut reduced, s.clone());
        }
        self.finish(reduced)
    }

    /// Right multiplication by a single syllable.
    pub fn mul_syllable(&self, x: &NormalForm, s: &Syllable) -> NormalForm {
        let mut reduced = x.syllables.clone();
        self.push_reduced(&mut reduced, s.clone());
        self.finish(reduced)
    }

    pub fn invert(&self, x: &NormalForm) -> NormalForm {
        let reversed = x
            .syllables
            .iter()
            .rev()
            .map(|s| Syllable::new(s.vertex, self.groups[s.vertex].inverse(&s.element)))
            .collect();
        self.finish(reversed)
    }

    /// `x⁻¹·y`.
    pub fn between(&self, x: &NormalForm, y: &NormalForm) -> NormalForm {
        self.mul(&self.invert(x), y)
    }

    pub fn pow(&self, x: &NormalForm, n: i64) -> NormalForm {
        let base = if n < 0 { self.invert(x) } else { x.clone() };
        let mut acc = self.identity();
        for _ in 0..n.unsigned_abs() {
            acc = self.mul(&acc, &base);
        }
        acc
    }

    pub fn support(&self, x: &NormalForm) -> Subgraph {
        Subgraph::from_vertices(x.syllables.iter().map(|s| s.vertex))
    }

    /// Word length over the union of the vertex groups' generating sets.
    pub fn word_length(&self, x: &NormalForm) -> u64 {
        x.syllables
            .iter()
            .map(|s| self.groups[s.vertex].length(&s.element))
            .sum()
    }

    /// Distance `|x⁻¹y|` in the standard Cayley graph.
    pub fn distance(&self, x: &NormalForm, y: &NormalForm) -> u64 {
        self.word_length(&self.between(x, y))
    }

    /// Membership in the parabolic subgroup `G_Λ`.
    pub fn in_parabolic(&self, x: &NormalForm, sub: Subgraph) -> bool {
        self.support(x).is_subset(sub)
    }

    /// ShortLex comparison: word length first, then syllable sequence.
    pub fn shortlex_cmp(&self, x: &NormalForm, y: &NormalForm) -> std::cmp::Ordering {
        self.word_length(x)
            .cmp(&self.word_length(y))
            .then_with(|| x.syllables.cmp(&y.syllables))
    }

    /// Removes from the right end every shuffle-accessible syllable whose
    /// vertex lies in `sub`. The result is the unique shortest element of
    /// the coset `x·G_sub`.
    pub fn strip_right(&self, x: &NormalForm, sub: Subgraph) -> NormalForm {
        let mut kept_mask = 0u64;
        let mut kept = Vec::with_capacity(x.syllables.len());
        for s in x.syllables.iter().rev() {
            let u = s.vertex;
            if sub.contains(u) && kept_mask & self.blocks[u] == 0 {
                continue;
            }
            kept_mask |= 1 << u;
            kept.push(s.clone());
        }
        kept.reverse();
        self.finish(kept)
    }

    /// Splits `x = p·r` where `p` is the largest shuffle-accessible prefix
    /// supported in `sub`.
    pub fn strip_left(&self, x: &NormalForm, sub: Subgraph) -> (NormalForm, NormalForm) {
        let mut kept_mask = 0u64;
        let mut prefix = Vec::new();
        let mut rest = Vec::new();
        for s in &x.syllables {
            let u = s.vertex;
            if sub.contains(u) && kept_mask & self.blocks[u] == 0 {
                prefix.push(s.clone());
            } else {
                kept_mask |= 1 << u;
                rest.push(s.clone());
            }
        }
        (self.finish(prefix), self.finish(rest))
    }

    /// Splits an element of `G_st(Λ) = G_Λ × G_lk(Λ)` as `g = h·k`.
    pub fn decompose_star_element(
        &self,
        g: &NormalForm,
        lambda: Subgraph,
    ) -> Result<StarDecomposition, WordError> {
        if lambda.is_empty() {
            return Err(WordError::EmptySubgraph);
        }
        let link = self.graph.link(lambda);
        if link.is_empty() {
            return Err(WordError::EmptyLink(self.graph.format_subgraph(lambda)));
        }
        let star = lambda.union(link);
        let support = self.support(g);
        if !support.is_subset(star) {
            return Err(WordError::NotInStar {
                support: self.graph.format_subgraph(support),
                star: self.graph.format_subgraph(star),
            });
        }
        let (h, k): (Vec<Syllable>, Vec<Syllable>) =
            g.syllables.iter().cloned().partition(|s| lambda.contains(s.vertex));
        Ok(StarDecomposition {
            h: self.finish(h),
            v: link.first().unwrap(),
            k: self.finish(k),
            w: lambda.first().unwrap(),
        })
    }

    /// Symmetric generating set: the generators of each vertex group, in
    /// vertex order.
    pub fn generators(&self) -> Vec<Syllable> {
        (0..self.rank())
            .flat_map(|v| {
                self.groups[v]
                    .generators()
                    .into_iter()
                    .map(move |e| Syllable::new(v, e))
            })
            .collect()
    }

    /// Parses a whitespace-separated word literal, e.g. `a^-2 b c^3`,
    /// `a[1,-2]` for free vertex groups or `a{4}` for table groups.
    /// `1`, `e`, `id` and the empty string denote the identity.
    pub fn parse_syllables(&self, text: &str) -> Result<Vec<Syllable>, WordError> {
        let mut out = Vec::new();
        for token in text.split_whitespace() {
            if matches!(token, "1" | "e" | "id") {
                continue;
            }
            let cut = token.find(['^', '[', '{']).unwrap_or(token.len());
            let (name, suffix) = token.split_at(cut);
            let v = self
                .graph
                .vertex(name)
                .ok_or_else(|| WordError::InvalidSyllable(format!("unknown vertex `{name}`")))?;
            match self.groups[v].parse_element(suffix)? {
                Some(e) => out.push(Syllable::new(v, e)),
                None => {
                    return Err(WordError::InvalidSyllable(format!(
                        "`{token}` is the identity"
                    )))
                }
            }
        }
        Ok(out)
    }

    pub fn parse_word(&self, text: &str) -> Result<NormalForm, WordError> {
        let syllables = self.parse_syllables(text)?;
        self.normalize(&syllables)
    }

    pub fn format(&self, x: &NormalForm) -> String {
        if x.is_identity() {
            return "1".to_string();
        }
        x.syllables
            .iter()
            .map(|s| self.format_syllable(s))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn format_syllable(&self, s: &Syllable) -> String {
        format!(
            "{}{}",
            self.graph.name(s.vertex),
            self.groups[s.vertex].format_element(&s.element)
        )
    }

    pub fn display<'a>(&'a self, x: &'a NormalForm) -> DisplayWord<'a> {
        DisplayWord { product: self, word: x }
    }

    /// A random linear extension of the heap of `x`: a reduced shuffle
    /// representative, not canonicalized.
    pub fn random_shuffle<R: Rng>(&self, x: &NormalForm, rng: &mut R) -> Vec<Syllable> {
        self.random_extension(&x.syllables, rng)
    }

    /// Random reordering of `items` that only swaps adjacent commuting
    /// entries, so the product is unchanged. Entries on the same vertex keep
    /// their relative order.
    pub fn random_extension<R: Rng>(&self, items: &[Syllable], rng: &mut R) -> Vec<Syllable> {
        let mut slots: Vec<Option<Syllable>> = items.iter().cloned().map(Some).collect();
        let mut out = Vec::with_capacity(slots.len());
        let mut available = Vec::new();
        while out.len() < items.len() {
            available.clear();
            let mut seen = 0u64;
            for (j, slot) in slots.iter().enumerate() {
                let Some(s) = slot else { continue };
                if seen & self.blocks[s.vertex] == 0 {
                    available.push(j);
                }
                seen |= 1 << s.vertex;
            }
            let pick = available[rng.gen_range(0..available.len())];
            out.push(slots[pick].take().unwrap());
        }
        out
    }

    /// A random word (not necessarily reduced) of `len` vertex-group
    /// generators.
    pub fn random_word<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<Syllable> {
        let gens = self.generators();
        (0..len)
            .map(|_| gens[rng.gen_range(0..gens.len())].clone())
            .collect()
    }

    /// Random element supported in `sub`, built from `len` generator
    /// syllables.
    pub fn random_element_in<R: Rng>(&self, sub: Subgraph, len: usize, rng: &mut R) -> NormalForm {
        let gens: Vec<Syllable> = self
            .generators()
            .into_iter()
            .filter(|s| sub.contains(s.vertex))
            .collect();
        if gens.is_empty() {
            return self.identity();
        }
        let word: Vec<Syllable> = (0..len)
            .map(|_| gens[rng.gen_range(0..gens.len())].clone())
            .collect();
        self.normalize(&word).expect("generators are valid syllables")
    }

    /// Every element of `G_sub` of word length at most `radius`, in BFS
    /// order.
    pub fn subgroup_ball(&self, sub: Subgraph, radius: u64) -> Vec<NormalForm> {
        let gens: Vec<Syllable> = self
            .generators()
            .into_iter()
            .filter(|s| sub.contains(s.vertex))
            .collect();
        let mut seen = std::collections::HashSet::new();
        seen.insert(self.identity());
        let mut out = vec![self.identity()];
        let mut frontier = vec![self.identity()];
        for _ in 0..radius {
            let mut next = Vec::new();
            for x in &frontier {
                for s in &gens {
                    let y = self.mul_syllable(x, s);
                    if seen.insert(y.clone()) {
                        next.push(y);
                    }
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    /// Heap view of `x` for prefix computations.
    pub fn trace(&self, x: &NormalForm) -> Trace {
        Trace::new(self, x)
    }
}

pub struct DisplayWord<'a> {
    product: &'a GraphProduct,
    word: &'a NormalForm,
}

impl fmt::Display for DisplayWord<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.product.format(self.word))
    }
}

/// Prefix of a heap, recorded as the number of syllables taken on each
/// vertex. Same-vertex syllables are totally ordered in the heap, so the
/// counts determine the prefix.
pub type Prefix = Vec<u16>;

/// The syllable heap (trace) of a reduced word.
///
/// Prefixes of the heap are exactly the elements `p` with `x = p·q` and
/// `|x| = |p| + |q|`.
#[derive(Debug, Clone)]
pub struct Trace {
    syllables: Vec<Syllable>,
    /// Positions of each vertex's syllables, in word order.
    by_vertex: Vec<Vec<usize>>,
    /// For each position, the number of syllables on every vertex that must
    /// precede it.
    required: Vec<Vec<u16>>,
    blocks: Vec<u64>,
}

impl Trace {
    fn new(product: &GraphProduct, x: &NormalForm) -> Self {
        let n = product.rank();
        let mut by_vertex = vec![Vec::new(); n];
        let mut counts = vec![0u16; n];
        let mut required = Vec::with_capacity(x.syllables.len());
        for (i, s) in x.syllables.iter().enumerate() {
            let u = s.vertex;
            let req: Vec<u16> = (0..n)
                .map(|w| if product.blocks[u] & (1 << w) != 0 { counts[w] } else { 0 })
                .collect();
            required.push(req);
            by_vertex[u].push(i);
            counts[u] += 1;
        }
        Trace {
            syllables: x.syllables.clone(),
            by_vertex,
            required,
            blocks: product.blocks.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.syllables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn empty_prefix(&self) -> Prefix {
        vec![0; self.by_vertex.len()]
    }

    pub fn is_complete(&self, prefix: &Prefix) -> bool {
        prefix
            .iter()
            .zip(&self.by_vertex)
            .all(|(&c, positions)| c as usize == positions.len())
    }

    fn addable(&self, prefix: &Prefix, pos: usize) -> bool {
        let u = self.syllables[pos].vertex;
        let req = &self.required[pos];
        (0..prefix.len()).all(|w| self.blocks[u] & (1 << w) == 0 || prefix[w] >= req[w])
    }

    /// Largest prefix containing `prefix` whose new syllables all lie on
    /// vertices of `allowed`.
    pub fn extend_within(&self, prefix: &Prefix, allowed: Subgraph) -> Prefix {
        let mut out = prefix.clone();
        loop {
            let mut changed = false;
            for u in allowed.iter() {
                if u >= out.len() {
                    break;
                }
                while (out[u] as usize) < self.by_vertex[u].len() {
                    let pos = self.by_vertex[u][out[u] as usize];
                    if self.addable(&out, pos) {
                        out[u] += 1;
                        changed = true;
                    } else {
                        break;
                    }
                }
            }
            if !changed {
                return out;
            }
        }
    }

    /// `prefix` plus the next syllable on `v`, if that syllable is minimal
    /// in the rest of the heap.
    pub fn extend_by_one(&self, prefix: &Prefix, v: Vertex) -> Option<Prefix> {
        let &pos = self.by_vertex[v].get(prefix[v] as usize)?;
        self.addable(prefix, pos).then(|| {
            let mut out = prefix.clone();
            out[v] += 1;
            out
        })
    }

    /// Syllables lying in `to` but not in `from`, in word order.
    pub fn difference(&self, from: &Prefix, to: &Prefix) -> Vec<Syllable> {
        let mut ordinal = vec![0u16; self.by_vertex.len()];
        let mut out = Vec::new();
        for s in &self.syllables {
            let u = s.vertex;
            let k = ordinal[u];
            if k >= from[u] && k < to[u] {
                out.push(s.clone());
            }
            ordinal[u] += 1;
        }
        out
    }

    pub fn prefix_size(&self, prefix: &Prefix) -> usize {
        prefix.iter().map(|&c| c as usize).sum()
    }
}
