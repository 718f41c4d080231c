use std::collections::BTreeMap;

use cddp_core::bq::solve_omega_exact;
use cddp_core::cluster::{generate_clusters, KappaRule};
use cddp_core::lip::encode_point;
use cddp_core::lsh::{solve_omega_lsh, LshParams, OmegaSubmodel};
use cddp_core::testbed::{generate_bsc, merge_bsc, tiny_instance, BscSpec, MergeSpec};
use cddp_core::*;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_bsc(slacks: Vec<f64>, seed: u64) -> Instance {
    let spec = BscSpec { slack_set: slacks, density: 0.5, ..BscSpec::new(3, 2, seed) };
    generate_bsc(&spec).unwrap()
}

fn random_design(inst: &Instance, rng: &mut ChaCha8Rng) -> FirstStageDesign {
    let mut levels = |side: Side| -> Vec<Option<usize>> {
        let mut v: Vec<Option<usize>> = inst
            .doors(side)
            .iter()
            .map(|d| {
                let k = rng.random_range(0..=d.levels());
                (k > 0).then_some(k)
            })
            .collect();
        while v.iter().flatten().count() > inst.max_doors(side) {
            let on: Vec<usize> = (0..v.len()).filter(|&i| v[i].is_some()).collect();
            v[*on.choose(rng).unwrap()] = None;
        }
        v
    };
    let strip = levels(Side::Strip);
    let stack = levels(Side::Stack);
    FirstStageDesign::from_levels(&strip, &stack)
}

fn random_assignment(inst: &Instance, w: usize, rng: &mut ChaCha8Rng) -> ScenarioAssignment {
    let mut pick = |side: Side, n: usize| -> Vec<Dock> {
        (0..n)
            .map(|node| {
                let doors = inst.eligible_doors(side, w, node);
                if doors.is_empty() || rng.random_bool(0.1) {
                    Dock::Outsourced
                } else {
                    Dock::Door(*doors.choose(rng).unwrap())
                }
            })
            .collect()
    };
    let s = inst.scenario(w);
    let origins = pick(Side::Strip, s.origins());
    let destinations = pick(Side::Stack, s.destinations());
    ScenarioAssignment::canonical(origins, destinations)
}

/// A random point that passes the feasibility check, if one turns up.
fn random_feasible_point(inst: &Instance, rng: &mut ChaCha8Rng) -> Option<Solution> {
    (0..500).find_map(|_| {
        let design = random_design(inst, rng);
        let assignments: Vec<_> = (0..inst.scenarios().len()).map(|w| random_assignment(inst, w, rng)).collect();
        check_feasibility(inst, &design, &assignments).is_empty().then_some(Solution { design, assignments })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clusters_partition_the_scenarios(
        slacks in prop::collection::vec(prop::sample::select(vec![5.0, 10.0, 20.0]), 1..8),
        kappa in 1usize..6,
        seed in any::<u64>(),
    ) {
        let a = small_bsc(slacks.clone(), seed);
        let b = generate_bsc(&BscSpec { n_nodes: 4, ..BscSpec::new(4, 2, seed) }).unwrap();
        let inst = merge_bsc(&MergeSpec::default(), &[a, b]).unwrap();
        let set = generate_clusters(&inst, &KappaRule::uniform(kappa), seed).unwrap();
        let mut seen = vec![0; inst.scenarios().len()];
        let mut total = 0.0;
        for c in &set.clusters {
            prop_assert!(!c.scenarios.is_empty() && c.scenarios.len() <= kappa);
            for &w in &c.scenarios {
                seen[w] += 1;
                let s = inst.scenario(w);
                prop_assert_eq!((s.origins(), s.destinations()), c.group);
            }
            prop_assert!((c.conditional.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            total += c.weight;
        }
        prop_assert!(seen.iter().all(|&n| n == 1));
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert_eq!(set, generate_clusters(&inst, &KappaRule::uniform(kappa), seed).unwrap());
    }

    #[test]
    fn lsh_is_feasible_and_never_below_exact(seed in 0u64..10_000, design_seed in any::<u64>()) {
        let inst = tiny_instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(design_seed);
        let design = random_design(&inst, &mut rng);
        for w in 0..inst.scenarios().len() {
            for basic in [false, true] {
                let sub = OmegaSubmodel::from_design(&inst, w, &design, basic);
                let lsh = solve_omega_lsh(&sub, &LshParams { restarts: 3, seed: design_seed });
                let a = lsh.solution.as_ref().unwrap();
                prop_assert!(sub.is_feasible(a));
                prop_assert!((sub.value(a) - lsh.incumbent.unwrap()).abs() <= 1e-9 * sub.value(a).abs().max(1.0));
                let exact = solve_omega_exact(&sub, None, u64::MAX);
                prop_assert!(lsh.incumbent.unwrap() >= exact.incumbent.unwrap() - 1e-9);
                prop_assert_eq!(&lsh, &solve_omega_lsh(&sub, &LshParams { restarts: 3, seed: design_seed }));
            }
        }
    }

    #[test]
    fn lifted_points_satisfy_the_linearization(seed in 0u64..10_000, point_seed in any::<u64>()) {
        let inst = tiny_instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
        let Some(sol) = random_feasible_point(&inst, &mut rng) else { return Ok(()) };
        let milp = build_lip(&inst);
        let assignments: BTreeMap<usize, ScenarioAssignment> = sol.assignments.iter().cloned().enumerate().collect();
        let x = encode_point(&milp, &inst, Some(&sol.design), &assignments);
        prop_assert!(milp.is_feasible(&x, 1e-9));
        let direct = sol.evaluate(&inst).unwrap().total;
        prop_assert!((milp.objective_value(&x) - direct).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn generation_is_reproducible(nodes in 1usize..6, doors in 1usize..4, seed in any::<u64>()) {
        let spec = BscSpec::new(nodes, doors, seed);
        prop_assert_eq!(generate_bsc(&spec).unwrap(), generate_bsc(&spec).unwrap());
        prop_assert_eq!(tiny_instance(seed), tiny_instance(seed));
    }

    #[test]
    fn restriction_renormalizes_weights(seed in 0u64..10_000) {
        let inst = tiny_instance(seed);
        let last = inst.scenarios().len() - 1;
        let r = inst.restricted(&[last]).unwrap();
        prop_assert_eq!(r.scenarios().len(), 1);
        prop_assert!((r.scenario(0).weight() - 1.0).abs() < 1e-12);
    }
}
