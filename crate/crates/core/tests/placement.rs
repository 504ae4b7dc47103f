use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splatsched::placement::{
    brute_force_optimal, hierarchical_place, local_search, lsa_assign, objective, p_norm, CostCoefficients,
    HierarchicalConfig, PlacementSolution, SearchBudget,
};
use splatsched::visibility::AccessMatrix;

fn matrix_strategy(max_rows_per_gpu: usize, max_gpus: usize) -> impl Strategy<Value = AccessMatrix> {
    (1..=max_gpus, 1..=max_rows_per_gpu).prop_flat_map(|(n, slots)| {
        prop::collection::vec(prop::collection::vec(0u64..40, n), n * slots)
            .prop_map(|rows| AccessMatrix::from_rows(rows).unwrap())
    })
}

fn coefficient_strategy() -> impl Strategy<Value = CostCoefficients> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, prop_oneof![Just(1.0), Just(2.0), Just(4.0), Just(f64::INFINITY)])
        .prop_map(|(b, g, d, p)| CostCoefficients::new(0.0, b + 0.01, g, d, p).unwrap())
}

proptest! {
    #[test]
    fn searched_solutions_stay_balanced_and_conserve_flow(
        a in matrix_strategy(4, 4),
        c in coefficient_strategy(),
    ) {
        let init = lsa_assign(&a).unwrap();
        let out = local_search(&a, &init, &c, &SearchBudget::default()).unwrap();
        prop_assert_eq!(out.solution.counts(), init.counts());
        prop_assert!(PlacementSolution::new(out.solution.assignment().to_vec(), a.cols()).is_ok());
        let b = objective(&a, &out.solution, &c).unwrap();
        prop_assert_eq!(b.send.iter().sum::<u64>(), b.recv.iter().sum::<u64>());
        prop_assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        let b_rows = a.rows() as u64;
        prop_assert!(out.evaluations <= (out.swaps as u64 + 1) * b_rows * b_rows);
    }

    #[test]
    fn norm_sandwich(x in prop::collection::vec(0u64..10_000, 1..16), p in 1.0f64..8.0) {
        let max = *x.iter().max().unwrap() as f64;
        let norm = p_norm(&x, p);
        let n = x.len() as f64;
        prop_assert!(max <= norm * (1.0 + 1e-12));
        prop_assert!(norm <= n.powf(1.0 / p) * max * (1.0 + 1e-12));
    }

    #[test]
    fn lsa_is_exact_for_communication_volume(a in matrix_strategy(2, 3)) {
        let c = CostCoefficients::alpha_only();
        let lsa = objective(&a, &lsa_assign(&a).unwrap(), &c).unwrap();
        let best = objective(&a, &brute_force_optimal(&a, &c).unwrap(), &c).unwrap();
        prop_assert_eq!(lsa.total_local, best.total_local);
    }

    #[test]
    fn brute_force_beats_heuristics(a in matrix_strategy(2, 3), c in coefficient_strategy()) {
        let exact = CostCoefficients { alpha: 0.5, ..c };
        let init = lsa_assign(&a).unwrap();
        let heuristic = local_search(&a, &init, &exact, &SearchBudget::default()).unwrap().solution;
        let best = brute_force_optimal(&a, &exact).unwrap();
        let hv = objective(&a, &heuristic, &exact).unwrap().exact;
        let bv = objective(&a, &best, &exact).unwrap().exact;
        prop_assert!(bv <= hv + 1e-9);
    }
}

#[test]
fn eight_by_four_lsa_matches_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let c = CostCoefficients::alpha_only();
    for _ in 0..10 {
        let a = AccessMatrix::from_rows((0..8).map(|_| (0..4).map(|_| rng.gen_range(0..100)).collect()).collect())
            .unwrap();
        let lsa = objective(&a, &lsa_assign(&a).unwrap(), &c).unwrap();
        let best = objective(&a, &brute_force_optimal(&a, &c).unwrap(), &c).unwrap();
        assert_eq!(lsa.total_local, best.total_local);
    }
}

#[test]
fn two_patch_brute_force_picks_better_of_two() {
    let a = AccessMatrix::from_rows(vec![vec![1, 9], vec![8, 2]]).unwrap();
    let w = brute_force_optimal(&a, &CostCoefficients::alpha_only()).unwrap();
    assert_eq!(w.assignment(), &[1, 0]);
}

#[test]
fn hierarchical_result_is_balanced_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let a = AccessMatrix::from_rows((0..32).map(|_| (0..8).map(|_| rng.gen_range(0..500)).collect()).collect())
            .unwrap();
        let cfg = HierarchicalConfig::new(4, 2, CostCoefficients::balanced());
        let w = hierarchical_place(&a, &cfg).unwrap();
        assert_eq!(w.counts(), vec![4; 8]);
        let again = hierarchical_place(&a, &cfg).unwrap();
        assert_eq!(w, again);
    }
}

#[test]
fn trace_replay_files() {
    let a = AccessMatrix::from_rows(vec![vec![3, 1], vec![0, 4], vec![2, 2], vec![5, 0]]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("access.csv");
    a.save_csv(&path).unwrap();
    let loaded = AccessMatrix::load_csv(&path).unwrap();
    let w = lsa_assign(&loaded).unwrap();
    let sol = dir.path().join("placement.csv");
    w.save_csv(&sol).unwrap();
    assert_eq!(PlacementSolution::load_csv(&sol, 2).unwrap(), w);
    let b = objective(&loaded, &w, &CostCoefficients::balanced()).unwrap();
    let json = dir.path().join("objective.json");
    b.save_json(&json).unwrap();
    let text = std::fs::read_to_string(json).unwrap();
    assert!(text.contains("\"total_local\""));
}
