use graphprod::cayley::{cone_distance_restricted, four_point_delta, greedy_star_factorization};
use graphprod::morse::{distortion_curve, RSchedule};
use graphprod::{build_ball, BallOptions, GraphProduct, MetricKind, SimplicialGraph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn standard_ball_distances_are_word_lengths() {
    for graph in [SimplicialGraph::path(3), SimplicialGraph::cycle(4), SimplicialGraph::edgeless(2)] {
        let gp = GraphProduct::raag(graph);
        let ball = build_ball(&gp, &gp.identity(), 4, MetricKind::Standard, BallOptions::default()).unwrap();
        for (x, &d) in ball.points().iter().zip(ball.dist()) {
            assert_eq!(gp.word_length(x), u64::from(d));
        }
    }
}

#[test]
fn tree_balls_have_zero_delta() {
    for rank in 1..=3 {
        let gp = GraphProduct::raag(SimplicialGraph::edgeless(rank));
        let ball = build_ball(&gp, &gp.identity(), 3, MetricKind::Standard, BallOptions::default()).unwrap();
        assert_eq!(four_point_delta(&ball, u64::MAX, 0).delta_halves, 0);
    }
}

#[test]
fn distortion_rows_are_monotone() {
    let gp = GraphProduct::raag(SimplicialGraph::path(4));
    let schedule = RSchedule::Relative { offsets: vec![0, 2, 4] };
    let curve = distortion_curve(&gp, &gp.parse_word("a c").unwrap(), 5, &schedule).unwrap();
    for w in curve.rows.windows(2) {
        assert!(w[0].standard <= w[1].standard);
    }
    for row in &curve.rows {
        let cones: Vec<u64> = row.cone.iter().flatten().copied().collect();
        assert!(cones.windows(2).all(|c| c[0] >= c[1]), "row {row:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_factorization_bounds_cone_distance(seed in any::<u64>(), len in 0usize..10) {
        let gp = GraphProduct::raag(SimplicialGraph::path(4));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = gp.normalize(&gp.random_word(len, &mut rng)).unwrap();
        let pieces = greedy_star_factorization(&gp, &g);
        let cone = cone_distance_restricted(&gp, &g, gp.word_length(&g) + 4).unwrap();
        prop_assert!(pieces.len() as u64 >= cone);
        let product = pieces.iter().fold(gp.identity(), |acc, (p, _)| gp.mul(&acc, p));
        prop_assert_eq!(product, g);
    }
}
