//! Parallelism classes `[gΛ]` of cosets of star subgroups and the nesting,
//! orthogonality and transversality relations between them.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{GraphError, SimplicialGraph, Subgraph, DEFAULT_SUBGRAPH_LIMIT};
use crate::word::{GraphProduct, NormalForm, WordError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("elements belong to different graph products")]
    MixedAmbient,
    #[error("no domain nested in {w} is orthogonal to {u}")]
    NoOrthogonal { w: String, u: String },
    #[error("{u} is not nested in {w}")]
    NotNested { w: String, u: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// The class `[gΛ]` of cosets `hG_Λ` with `g⁻¹h ∈ G_st(Λ)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParallelismClass {
    /// Shortest element of `g·G_st(Λ)`.
    pub rep: NormalForm,
    pub lambda: Subgraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Nesting {
    /// The first class is nested in the second.
    Inside,
    /// The second class is nested in the first.
    Contains,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DomainRelation {
    Equal,
    Nested(Nesting),
    Orthogonal,
    Transverse,
}

impl fmt::Display for DomainRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainRelation::Equal => "equal",
            DomainRelation::Nested(Nesting::Inside) => "nested",
            DomainRelation::Nested(Nesting::Contains) => "contains",
            DomainRelation::Orthogonal => "orthogonal",
            DomainRelation::Transverse => "transverse",
        })
    }
}

/// Whether `gG_Λ` and `hG_Λ` are parallel.
pub fn parallel(gp: &GraphProduct, g: &NormalForm, h: &NormalForm, lambda: Subgraph) -> bool {
    let st = gp.graph().star(lambda);
    gp.support(&gp.between(g, h)).is_subset(st)
}

pub fn canonicalize(gp: &GraphProduct, g: &NormalForm, lambda: Subgraph) -> ParallelismClass {
    ParallelismClass {
        rep: gp.strip_right(g, gp.graph().star(lambda)),
        lambda,
    }
}

/// The ⊑-maximal class `[Γ]`.
pub fn maximal_class(gp: &GraphProduct) -> ParallelismClass {
    ParallelismClass {
        rep: gp.identity(),
        lambda: gp.graph().all(),
    }
}

/// Factorization `x = p·q` with `p ∈ G_A` and `q ∈ G_B`, if one exists.
///
/// The largest shuffle-accessible prefix of `x` supported in `A` is taken as
/// `p`. Any factorization can be rearranged into a reduced one, so if `x`
/// lies in `G_A·G_B` at all then the remainder is supported in `B`.
pub fn double_coset_split(
    gp: &GraphProduct,
    x: &NormalForm,
    a: Subgraph,
    b: Subgraph,
) -> Option<(NormalForm, NormalForm)> {
    let (p, q) = gp.strip_left(x, a);
    gp.support(&q).is_subset(b).then_some((p, q))
}

pub fn in_double_coset(gp: &GraphProduct, x: &NormalForm, a: Subgraph, b: Subgraph) -> bool {
    double_coset_split(gp, x, a, b).is_some()
}

/// An element `k` with `[kΛ] = A` and `[kΩ] = B`, if one exists.
pub fn common_refinement(
    gp: &GraphProduct,
    a: &ParallelismClass,
    b: &ParallelismClass,
) -> Option<NormalForm> {
    let graph = gp.graph();
    let x = gp.between(&a.rep, &b.rep);
    let (p, _) = double_coset_split(gp, &x, graph.star(a.lambda), graph.star(b.lambda))?;
    Some(gp.mul(&a.rep, &p))
}

pub fn relation(
    gp: &GraphProduct,
    a: &ParallelismClass,
    b: &ParallelismClass,
) -> Result<DomainRelation, DomainError> {
    if a.rep.ambient() != gp.id() || b.rep.ambient() != gp.id() {
        return Err(DomainError::MixedAmbient);
    }
    Ok(relation_unchecked(gp, a, b))
}

fn relation_unchecked(
    gp: &GraphProduct,
    a: &ParallelismClass,
    b: &ParallelismClass,
) -> DomainRelation {
    let graph = gp.graph();
    let (l, o) = (a.lambda, b.lambda);
    let shape = if l == o {
        Some(DomainRelation::Equal)
    } else if l.is_subset(o) {
        Some(DomainRelation::Nested(Nesting::Inside))
    } else if o.is_subset(l) {
        Some(DomainRelation::Nested(Nesting::Contains))
    } else if l.is_subset(graph.link(o)) {
        Some(DomainRelation::Orthogonal)
    } else {
        None
    };
    match shape {
        Some(rel) if common_refinement(gp, a, b).is_some() => rel,
        _ => DomainRelation::Transverse,
    }
}

pub fn is_nested(gp: &GraphProduct, a: &ParallelismClass, b: &ParallelismClass) -> bool {
    matches!(
        relation_unchecked(gp, a, b),
        DomainRelation::Equal | DomainRelation::Nested(Nesting::Inside)
    )
}

/// The container `[k(lk(Λ_U) ∩ Λ_W)]` for `U ⊑ W`: the largest class nested
/// in `W` and orthogonal to `U`.
pub fn container(
    gp: &GraphProduct,
    w: &ParallelismClass,
    u: &ParallelismClass,
) -> Result<ParallelismClass, DomainError> {
    if w.rep.ambient() != gp.id() || u.rep.ambient() != gp.id() {
        return Err(DomainError::MixedAmbient);
    }
    let names = || (format_class(gp, w), format_class(gp, u));
    if !u.lambda.is_subset(w.lambda) {
        let (w, u) = names();
        return Err(DomainError::NotNested { w, u });
    }
    let k = common_refinement(gp, u, w).ok_or_else(|| {
        let (w, u) = names();
        DomainError::NotNested { w, u }
    })?;
    let lambda = gp.graph().link(u.lambda).intersection(w.lambda);
    if lambda.is_empty() {
        let (w, u) = names();
        return Err(DomainError::NoOrthogonal { w, u });
    }
    Ok(canonicalize(gp, &k, lambda))
}

/// Nonempty subgraphs with nonempty link, in ShortLex order.
pub fn coning_family(graph: &SimplicialGraph) -> Result<Vec<Subgraph>, GraphError> {
    let mut family = graph.subgraphs_with_link(DEFAULT_SUBGRAPH_LIMIT)?;
    family.sort_by_key(|s| s.shortlex_key());
    Ok(family)
}

/// `WORD@v1,v2`, the same syntax the class parser accepts.
pub fn format_class(gp: &GraphProduct, c: &ParallelismClass) -> String {
    format!(
        "{}@{}",
        gp.format(&c.rep),
        gp.graph().subgraph_names(c.lambda).join(",")
    )
}

pub fn parse_class(gp: &GraphProduct, text: &str) -> Result<ParallelismClass, DomainError> {
    let (word, verts) = text.rsplit_once('@').ok_or_else(|| {
        WordError::InvalidSyllable(format!("class literal `{text}` lacks `@`"))
    })?;
    let rep = gp.parse_word(word)?;
    let names: Vec<&str> = verts
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let lambda = gp.graph().parse_subgraph(&names)?;
    if lambda.is_empty() {
        return Err(DomainError::Word(WordError::EmptySubgraph));
    }
    Ok(canonicalize(gp, &rep, lambda))
}

#[derive(Debug, Clone, Serialize)]
pub struct ContainerEntry {
    #[serde(rename = "W")]
    pub w: String,
    #[serde(rename = "U")]
    pub u: String,
    #[serde(rename = "Q")]
    pub q: Option<String>,
    pub orthogonal_witnesses: Vec<String>,
    pub clean: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContainerReport {
    pub depth: u64,
    pub pairs_checked: usize,
    pub triples_checked: usize,
    pub violations: usize,
    pub entries: Vec<ContainerEntry>,
}

impl ContainerReport {
    pub fn all_clean(&self) -> bool {
        self.violations == 0
    }
}

/// Checks the container of every pair `U ⊆ W` of identity-representative
/// classes against every class `V = [gΛ_V]` nested in `W` and orthogonal to
/// `U`, with `g ∈ G_W` of word length at most `depth`.
///
/// Entries are listed for pairs with at least one orthogonal witness, or
/// with any inconsistency.
pub fn verify_clean_containers(
    gp: &GraphProduct,
    depth: u64,
) -> Result<ContainerReport, DomainError> {
    use rayon::prelude::*;

    let graph = gp.graph();
    let subgraphs = graph.enumerate_subgraphs(DEFAULT_SUBGRAPH_LIMIT, None)?;
    let pairs: Vec<(Subgraph, Subgraph)> = subgraphs
        .iter()
        .flat_map(|&w| {
            subgraphs
                .iter()
                .filter(move |u| u.is_subset(w))
                .map(move |&u| (w, u))
        })
        .collect();
    let results: Vec<(usize, Option<ContainerEntry>)> = pairs
        .par_iter()
        .map(|&(wl, ul)| check_pair(gp, &subgraphs, wl, ul, depth))
        .collect();
    let mut report = ContainerReport {
        depth,
        pairs_checked: pairs.len(),
        triples_checked: 0,
        violations: 0,
        entries: Vec::new(),
    };
    for (triples, entry) in results {
        report.triples_checked += triples;
        if let Some(entry) = entry {
            report.violations += entry.violations.len();
            report.entries.push(entry);
        }
    }
    Ok(report)
}

fn check_pair(
    gp: &GraphProduct,
    subgraphs: &[Subgraph],
    wl: Subgraph,
    ul: Subgraph,
    depth: u64,
) -> (usize, Option<ContainerEntry>) {
    let w = canonicalize(gp, &gp.identity(), wl);
    let u = canonicalize(gp, &gp.identity(), ul);
    let translates = gp.subgroup_ball(wl, depth);
    let mut witnesses: Vec<ParallelismClass> = Vec::new();
    for &vl in subgraphs.iter().filter(|v| v.is_subset(wl)) {
        for g in &translates {
            let v = canonicalize(gp, g, vl);
            if witnesses.contains(&v) {
                continue;
            }
            if is_nested(gp, &v, &w) && relation_unchecked(gp, &v, &u) == DomainRelation::Orthogonal
            {
                witnesses.push(v);
            }
        }
    }
    let mut violations = Vec::new();
    let q = match container(gp, &w, &u) {
        Ok(q) => {
            if witnesses.is_empty() {
                violations.push("container exists but no orthogonal witness".to_string());
            }
            if !is_nested(gp, &q, &w) {
                violations.push("container not nested in W".to_string());
            }
            if relation_unchecked(gp, &q, &u) != DomainRelation::Orthogonal {
                violations.push("container not orthogonal to U".to_string());
            }
            for v in &witnesses {
                if !is_nested(gp, v, &q) {
                    violations.push(format!("{} not nested in container", format_class(gp, v)));
                }
            }
            Some(q)
        }
        Err(e) => {
            if !witnesses.is_empty() {
                violations.push(format!("container missing: {e}"));
            }
            None
        }
    };
    let triples = witnesses.len();
    if witnesses.is_empty() && violations.is_empty() {
        return (triples, None);
    }
    let entry = ContainerEntry {
        w: format_class(gp, &w),
        u: format_class(gp, &u),
        q: q.map(|q| format_class(gp, &q)),
        orthogonal_witnesses: witnesses.iter().map(|v| format_class(gp, v)).collect(),
        clean: violations.is_empty(),
        violations,
    };
    (triples, Some(entry))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::Syllable;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p3() -> GraphProduct {
        GraphProduct::raag(SimplicialGraph::path(3))
    }

    fn p4() -> GraphProduct {
        GraphProduct::raag(SimplicialGraph::path(4))
    }

    fn sub(gp: &GraphProduct, names: &[&str]) -> Subgraph {
        gp.graph().parse_subgraph(names).unwrap()
    }

    fn class(gp: &GraphProduct, text: &str) -> ParallelismClass {
        parse_class(gp, text).unwrap()
    }

    /// ShortLex-least element of `g·G_st(Λ)` by enumeration.
    fn canonical_oracle(gp: &GraphProduct, g: &NormalForm, lambda: Subgraph) -> NormalForm {
        let st = gp.graph().star(lambda);
        gp.subgroup_ball(st, gp.word_length(g))
            .iter()
            .map(|p| gp.mul(g, p))
            .min_by(|x, y| gp.shortlex_cmp(x, y))
            .unwrap()
    }

    /// Membership in `G_A·G_B` by enumerating the `G_A` factor.
    fn double_coset_oracle(gp: &GraphProduct, x: &NormalForm, a: Subgraph, b: Subgraph) -> bool {
        gp.subgroup_ball(a, gp.word_length(x))
            .iter()
            .any(|p| gp.support(&gp.between(p, x)).is_subset(b))
    }

    #[test]
    fn parallel_examples() {
        let gp = p3();
        let e = gp.identity();
        let a = sub(&gp, &["a"]);
        assert!(parallel(&gp, &e, &gp.generator("b"), a));
        assert!(!parallel(&gp, &e, &gp.generator("c"), a));
        let g = gp.parse_word("a c^2 b").unwrap();
        assert!(parallel(&gp, &g, &g, a));
    }

    #[test]
    fn canonicalize_examples() {
        let gp = p3();
        let a = sub(&gp, &["a"]);
        assert!(canonicalize(&gp, &gp.generator("b"), a).rep.is_identity());
        let ca = gp.parse_word("c a").unwrap();
        assert_eq!(gp.format(&canonicalize(&gp, &ca, a).rep), "c");
        assert!(canonicalize(&gp, &gp.identity(), a).rep.is_identity());
    }

    #[test]
    fn canonicalize_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for gp in [p3(), p4(), GraphProduct::raag(SimplicialGraph::cycle(5))] {
            let family = gp.graph().enumerate_subgraphs(16, None).unwrap();
            for _ in 0..60 {
                let len = rng.gen_range(0..=5);
                let g = gp.normalize(&gp.random_word(len, &mut rng)).unwrap();
                if gp.word_length(&g) > 5 {
                    continue;
                }
                let lambda = family[rng.gen_range(0..family.len())];
                assert_eq!(
                    canonicalize(&gp, &g, lambda).rep,
                    canonical_oracle(&gp, &g, lambda),
                    "{} {}",
                    gp.format(&g),
                    gp.graph().format_subgraph(lambda)
                );
            }
        }
    }

    #[test]
    fn left_pruning_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for gp in [p4(), GraphProduct::raag(SimplicialGraph::cycle(5))] {
            let family = gp.graph().enumerate_subgraphs(16, None).unwrap();
            let mut hits = 0;
            for _ in 0..400 {
                let a = gp.graph().star(family[rng.gen_range(0..family.len())]);
                let b = gp.graph().star(family[rng.gen_range(0..family.len())]);
                // Half the samples are built inside G_A·G_B so both answers occur.
                let x = if rng.gen_bool(0.5) {
                    let p = gp.random_element_in(a, 3, &mut rng);
                    let q = gp.random_element_in(b, 3, &mut rng);
                    gp.mul(&p, &q)
                } else {
                    gp.normalize(&gp.random_word(5, &mut rng)).unwrap()
                };
                let fast = in_double_coset(&gp, &x, a, b);
                hits += fast as usize;
                assert_eq!(fast, double_coset_oracle(&gp, &x, a, b), "{}", gp.format(&x));
            }
            assert!(hits > 100);
        }
    }

    #[test]
    fn relation_examples() {
        let gp = p4();
        let a = class(&gp, "1@a");
        assert_eq!(relation(&gp, &a, &class(&gp, "1@b")), Ok(DomainRelation::Orthogonal));
        assert_eq!(relation(&gp, &a, &class(&gp, "1@c")), Ok(DomainRelation::Transverse));
        assert_eq!(
            relation(&gp, &a, &maximal_class(&gp)),
            Ok(DomainRelation::Nested(Nesting::Inside))
        );
        assert_eq!(
            relation(&gp, &maximal_class(&gp), &a),
            Ok(DomainRelation::Nested(Nesting::Contains))
        );
        assert_eq!(relation(&gp, &a, &class(&gp, "b^3@a")), Ok(DomainRelation::Equal));
        // Translating far away breaks orthogonality.
        assert_eq!(relation(&gp, &a, &class(&gp, "c d@b")), Ok(DomainRelation::Transverse));
        let other = p3();
        assert_eq!(
            relation(&gp, &a, &class(&other, "1@a")),
            Err(DomainError::MixedAmbient)
        );
    }

    #[test]
    fn container_examples() {
        let gp = p4();
        let top = maximal_class(&gp);
        let q = container(&gp, &top, &class(&gp, "1@a")).unwrap();
        assert_eq!(format_class(&gp, &q), "1@b");
        let q = container(&gp, &class(&gp, "1@a,b,c"), &class(&gp, "1@b")).unwrap();
        assert_eq!(format_class(&gp, &q), "1@a,c");
        let g3 = p3();
        let q = container(&g3, &maximal_class(&g3), &class(&g3, "1@b")).unwrap();
        assert_eq!(format_class(&g3, &q), "1@a,c");
        assert!(matches!(
            container(&gp, &class(&gp, "1@a,b"), &class(&gp, "1@a,b")),
            Err(DomainError::NoOrthogonal { .. })
        ));
        assert!(matches!(
            container(&gp, &class(&gp, "1@a"), &class(&gp, "1@b")),
            Err(DomainError::NotNested { .. })
        ));
    }

    #[test]
    fn container_follows_translate() {
        let gp = p4();
        let u = class(&gp, "d^2@a");
        let q = container(&gp, &maximal_class(&gp), &u).unwrap();
        assert_eq!(format_class(&gp, &q), "d^2@b");
        assert_eq!(relation(&gp, &q, &u), Ok(DomainRelation::Orthogonal));
    }

    #[test]
    fn coning_family_examples() {
        let fam = |g: &SimplicialGraph| -> Vec<String> {
            coning_family(g)
                .unwrap()
                .into_iter()
                .map(|s| g.format_subgraph(s))
                .collect()
        };
        assert_eq!(
            fam(&SimplicialGraph::path(4)),
            ["{a}", "{b}", "{c}", "{d}", "{a,c}", "{b,d}"]
        );
        assert_eq!(fam(&SimplicialGraph::path(3)), ["{a}", "{b}", "{c}", "{a,c}"]);
        assert!(fam(&SimplicialGraph::edgeless(2)).is_empty());
    }

    #[test]
    fn clean_containers_small_graphs() {
        for graph in [
            SimplicialGraph::path(4),
            SimplicialGraph::path(3),
            SimplicialGraph::complete(3),
            SimplicialGraph::cycle(5),
        ] {
            let gp = GraphProduct::raag(graph);
            let report = verify_clean_containers(&gp, 1).unwrap();
            assert!(report.all_clean(), "{}", serde_json::to_string(&report).unwrap());
            assert!(report.triples_checked > 0);
        }
    }

    #[test]
    fn class_literals_round_trip() {
        let gp = p4();
        let c = class(&gp, "d a@b");
        assert_eq!(format_class(&gp, &c), "d@b");
        assert_eq!(class(&gp, &format_class(&gp, &c)), c);
        assert!(parse_class(&gp, "a").is_err());
        assert!(parse_class(&gp, "a@").is_err());
        assert!(parse_class(&gp, "a@z").is_err());
    }

    fn arb_class(gp: GraphProduct) -> impl Strategy<Value = ParallelismClass> {
        let n = gp.rank();
        let gens = gp.generators().len();
        (proptest::collection::vec(0..gens, 0..6), 1u64..(1 << n)).prop_map(move |(w, mask)| {
            let all = gp.generators();
            let word: Vec<Syllable> = w.into_iter().map(|i| all[i].clone()).collect();
            let g = gp.normalize(&word).unwrap();
            canonicalize(&gp, &g, Subgraph::from_bits(mask))
        })
    }

    fn translate_within_star(
        gp: &GraphProduct,
        c: &ParallelismClass,
        seed: u64,
    ) -> NormalForm {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = gp.random_element_in(gp.graph().star(c.lambda), 4, &mut rng);
        gp.mul(&c.rep, &p)
    }

    proptest! {
        #[test]
        fn canonicalize_idempotent_and_parallel_invariant(c in arb_class(p4()), seed in any::<u64>()) {
            let gp = p4();
            prop_assert_eq!(&canonicalize(&gp, &c.rep, c.lambda), &c);
            let moved = translate_within_star(&gp, &c, seed);
            prop_assert_eq!(&canonicalize(&gp, &moved, c.lambda), &c);
        }

        #[test]
        fn relation_well_defined(a in arb_class(p4()), b in arb_class(p4()), s in any::<u64>()) {
            let gp = p4();
            let rel = relation(&gp, &a, &b).unwrap();
            let a2 = ParallelismClass { rep: translate_within_star(&gp, &a, s), lambda: a.lambda };
            let b2 = ParallelismClass { rep: translate_within_star(&gp, &b, s ^ 1), lambda: b.lambda };
            prop_assert_eq!(relation(&gp, &a2, &b2).unwrap(), rel);
        }

        #[test]
        fn relation_symmetry(a in arb_class(p4()), b in arb_class(p4())) {
            let gp = p4();
            let ab = relation(&gp, &a, &b).unwrap();
            let ba = relation(&gp, &b, &a).unwrap();
            let flipped = match ab {
                DomainRelation::Nested(Nesting::Inside) => DomainRelation::Nested(Nesting::Contains),
                DomainRelation::Nested(Nesting::Contains) => DomainRelation::Nested(Nesting::Inside),
                other => other,
            };
            prop_assert_eq!(ba, flipped);
            prop_assert_eq!(ab == DomainRelation::Equal, a == b);
        }

        #[test]
        fn nesting_transitive(a in arb_class(p4()), b in arb_class(p4()), c in arb_class(p4())) {
            let gp = p4();
            if is_nested(&gp, &a, &b) && is_nested(&gp, &b, &c) {
                prop_assert!(is_nested(&gp, &a, &c));
            }
        }

        #[test]
        fn container_is_orthogonal(w in arb_class(p4()), u in arb_class(p4())) {
            let gp = p4();
            if let Ok(q) = container(&gp, &w, &u) {
                prop_assert_eq!(relation(&gp, &q, &u).unwrap(), DomainRelation::Orthogonal);
                prop_assert!(is_nested(&gp, &q, &w));
            }
        }
    }
}
