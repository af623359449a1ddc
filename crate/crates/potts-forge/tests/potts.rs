use potts_forge::graph::Graph;
use potts_forge::potts::{Params, PottsModel, State};
use proptest::prelude::*;

fn arb_graph() -> impl Strategy<Value = Graph> {
    (2usize..=6).prop_flat_map(|n| {
        let all: Vec<(usize, usize)> =
            (1..=n).flat_map(|i| ((i + 1)..=n).map(move |j| (i, j))).collect();
        proptest::sample::subsequence(all.clone(), 1..=all.len())
            .prop_map(move |edges| Graph::new(n, &edges).unwrap())
    })
}

fn arb_state(n: usize, q: u8) -> impl Strategy<Value = State> {
    proptest::collection::vec(1..=q, n).prop_map(State)
}

proptest! {
    // E(theta, S) is linear in theta: E(a*th1 + b*th2) = a*E(th1) + b*E(th2)
    #[test]
    fn energy_is_linear_in_theta(g in arb_graph(), seed in any::<u64>(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let m = PottsModel::ising(g);
        let (nv, ne) = (m.graph().n_vertices(), m.graph().n_edges());
        let mut rng = seed;
        let mut next = || { rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1); (rng >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0 };
        let th1 = Params { h: (0..nv).map(|_| next()).collect(), j: (0..ne).map(|_| next()).collect() };
        let th2 = Params { h: (0..nv).map(|_| next()).collect(), j: (0..ne).map(|_| next()).collect() };
        let combo = Params {
            h: th1.h.iter().zip(&th2.h).map(|(x, y)| a * x + b * y).collect(),
            j: th1.j.iter().zip(&th2.j).map(|(x, y)| a * x + b * y).collect(),
        };
        let s = m.decode((rng as usize) % m.n_total_states().unwrap()).unwrap();
        let lhs = m.energy(&combo, &s).unwrap();
        let rhs = a * m.energy(&th1, &s).unwrap() + b * m.energy(&th2, &s).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
    }

    // swapping V(a,b) for V(b,a) is a no-op because the table is symmetric
    #[test]
    fn energy_matches_feature_row(g in arb_graph(), seed in any::<u64>()) {
        let m = PottsModel::ising(g);
        let (nv, ne) = (m.graph().n_vertices(), m.graph().n_edges());
        let mut rng = seed;
        let mut next = || { rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1); (rng >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0 };
        let th = Params { h: (0..nv).map(|_| next()).collect(), j: (0..ne).map(|_| next()).collect() };
        let s = m.decode((rng as usize) % m.n_total_states().unwrap()).unwrap();
        let row = m.feature_row(&s).unwrap();
        let flat = th.to_vec();
        let dot: f64 = row.iter().zip(&flat).map(|(r, t)| r * t).sum();
        prop_assert!((dot - m.energy(&th, &s).unwrap()).abs() < 1e-10);
    }

    // with H = 0 the Ising energy is invariant under a global spin flip
    #[test]
    fn ising_global_flip_symmetry(g in arb_graph(), j_seed in any::<u64>()) {
        let m = PottsModel::ising(g);
        let ne = m.graph().n_edges();
        let mut rng = j_seed;
        let mut next = || { rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1); (rng >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0 };
        let th = Params { h: vec![0.0; m.graph().n_vertices()], j: (0..ne).map(|_| next()).collect() };
        for idx in 0..m.n_total_states().unwrap() {
            let s = m.decode(idx).unwrap();
            let flipped = State(s.labels().iter().map(|&l| 3 - l).collect());
            let e = m.energy(&th, &s).unwrap();
            let ef = m.energy(&th, &flipped).unwrap();
            prop_assert!((e - ef).abs() < 1e-12, "state {idx}: {e} vs {ef}");
        }
    }

    // decode . encode is the identity over the full index range
    #[test]
    fn encode_decode_roundtrip(n in 2usize..=6, q in 2u8..=4) {
        let g = Graph::new(n, &[(1, 2)]).unwrap();
        let m = PottsModel::new(
            g,
            q as usize,
            (0..q).map(|i| i as f64).collect(),
            (0..q).map(|a| (0..q).map(|b| (a * b) as f64).collect()).collect(),
        ).unwrap();
        for idx in 0..m.n_total_states().unwrap() {
            let s = m.decode(idx).unwrap();
            prop_assert_eq!(m.encode(&s).unwrap(), idx);
        }
    }
}

proptest! {
    // encode rejects any state with an out-of-range label
    #[test]
    fn encode_rejects_bad_labels(s in arb_state(3, 5)) {
        let m = PottsModel::ising(Graph::complete(3).unwrap());
        let valid = s.labels().iter().all(|&l| (1..=2).contains(&l));
        prop_assert_eq!(m.encode(&s).is_ok(), valid);
    }
}
