use graphprod::{GraphProduct, SimplicialGraph, Subgraph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph_on_five() -> impl Strategy<Value = SimplicialGraph> {
    (0u64..1 << 10).prop_map(|mask| SimplicialGraph::from_edge_mask(5, mask))
}

fn subgraph(g: &SimplicialGraph) -> impl Strategy<Value = Subgraph> {
    let n = g.len();
    (0usize..1 << n).prop_map(move |bits| Subgraph::from_vertices((0..n).filter(move |v| bits >> v & 1 == 1)))
}

#[test]
fn enumeration_counts_all_nonempty_subgraphs() {
    for n in 1..=5 {
        let g = SimplicialGraph::edgeless(n);
        assert_eq!(g.enumerate_subgraphs(1 << 10, None).unwrap().len(), (1 << n) - 1);
    }
}

proptest! {
    #[test]
    fn link_and_star_shape((g, s) in graph_on_five().prop_flat_map(|g| { let s = subgraph(&g); (Just(g), s) })) {
        let link = g.link(s);
        prop_assert!(s.is_subset(g.star(s)));
        if !s.is_empty() {
            prop_assert_eq!(link.intersection(s), Subgraph::EMPTY);
        }
        for u in 0..g.len() {
            for v in 0..g.len() {
                prop_assert_eq!(
                    g.link(Subgraph::single(u)).contains(v),
                    g.link(Subgraph::single(v)).contains(u)
                );
            }
        }
    }

    #[test]
    fn link_is_full_join(mask in 0u64..1 << 10, a in 1usize..32, b in 1usize..32) {
        let g = SimplicialGraph::from_edge_mask(5, mask);
        let sub = |bits: usize| Subgraph::from_vertices((0..5).filter(|v| bits >> v & 1 == 1));
        let (lam, om) = (sub(a), sub(b));
        let join = lam.iter().all(|u| om.iter().all(|v| g.adjacent(u, v)));
        prop_assert_eq!(lam.is_subset(g.link(om)), join);
    }

    #[test]
    fn normalize_is_idempotent_and_support_is_shuffle_invariant(seed in any::<u64>(), len in 0usize..16) {
        let gp = GraphProduct::raag(SimplicialGraph::path(4));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gp.normalize(&gp.random_word(len, &mut rng)).unwrap();
        prop_assert_eq!(gp.normalize(x.syllables()).unwrap(), x.clone());
        let shuffled = gp.random_shuffle(&x, &mut rng);
        let mut a: Vec<_> = x.syllables().to_vec();
        let mut b = shuffled;
        a.sort_by_key(|s| s.vertex);
        b.sort_by_key(|s| s.vertex);
        prop_assert_eq!(
            a.iter().map(|s| s.vertex).collect::<Vec<_>>(),
            b.iter().map(|s| s.vertex).collect::<Vec<_>>()
        );
    }

    #[test]
    fn centre_of_p3_commutes_with_the_free_factor(seed in any::<u64>(), len in 0usize..12) {
        let gp = GraphProduct::raag(SimplicialGraph::path(3));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ac = Subgraph::from_vertices([0, 2]);
        let x = gp.random_element_in(ac, len, &mut rng);
        let b = gp.parse_word("b").unwrap();
        prop_assert_eq!(gp.mul(&x, &b), gp.mul(&b, &x));
    }
}
