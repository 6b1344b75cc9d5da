mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stosched::check::violations;
use stosched::{sgs_serial, solve_min_makespan, Optimality, SolveBudget};

#[test]
fn exact_solver_matches_order_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let budget = SolveBudget::default();
    for _ in 0..50 {
        let inst = random_instance(&mut rng, 6);
        let y = random_durations(&mut rng, &inst);
        let s = solve_min_makespan(&inst, &y, &budget).unwrap();
        assert_eq!(s.optimality, Optimality::Exact);
        let enumerated = permutations(inst.task_count())
            .into_iter()
            .filter(|o| is_topological(&inst, o))
            .map(|o| sgs_serial(&inst, &y, &o).unwrap().makespan)
            .min()
            .unwrap();
        assert_eq!(s.makespan, enumerated);
        assert_eq!(s.makespan, brute_force_min_makespan(&inst, &y));
        assert!(violations(&inst, &s.starts, &y).is_empty());
    }
}

#[test]
fn sgs_matches_naive_placement() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let inst = random_instance(&mut rng, 6);
        let y = random_durations(&mut rng, &inst);
        let order = random_topological(&mut rng, &inst);
        let s = sgs_serial(&inst, &y, &order).unwrap();
        let (starts, makespan) = place_in_order(&inst, &y, &order);
        assert_eq!(s.starts, starts);
        assert_eq!(s.makespan, makespan);
    }
}

#[test]
fn optimum_is_invariant_under_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let budget = SolveBudget::default();
    for _ in 0..30 {
        let inst = random_instance(&mut rng, 6);
        let y = random_durations(&mut rng, &inst);
        let n = inst.task_count();
        let perm = {
            use rand::seq::SliceRandom;
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        };
        let relabeled = relabel(&inst, &perm);
        let mut y2 = vec![0; n];
        for j in 0..n {
            y2[perm[j]] = y.durations[j];
        }
        let a = solve_min_makespan(&inst, &y, &budget).unwrap();
        let b = solve_min_makespan(&relabeled, &stosched::Scenario::new(y2), &budget).unwrap();
        assert_eq!(a.makespan, b.makespan);
    }
}

#[test]
fn heuristic_never_beats_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let heuristic = SolveBudget {
        exact_threshold: 0,
        heuristic_evals: 50,
        ..SolveBudget::default()
    };
    for _ in 0..30 {
        let inst = random_instance(&mut rng, 6);
        let y = random_durations(&mut rng, &inst);
        let h = solve_min_makespan(&inst, &y, &heuristic).unwrap();
        assert_eq!(h.optimality, Optimality::Heuristic);
        assert!(violations(&inst, &h.starts, &y).is_empty());
        assert!(h.makespan >= brute_force_min_makespan(&inst, &y));
    }
}
