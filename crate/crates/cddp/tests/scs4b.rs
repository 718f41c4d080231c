use cddp::scs4b::{gap_percent, goodness_ratio, run, Decision, RunStatus, Scs4bParams};
use cddp_core::cluster::{BoundOption, BoundStatus, KappaRule};
use cddp_core::model::evaluate_solution;
use cddp_core::oracle::{brute_force_oracle, OracleLimits};
use cddp_core::solve::close;
use cddp_core::testbed::tiny_instance;
use cddp_core::*;

fn oracle(inst: &Instance) -> f64 {
    brute_force_oracle(inst, &OracleLimits::default()).unwrap().incumbent.unwrap()
}

fn params(kappa: usize, seed: u64) -> Scs4bParams {
    Scs4bParams { kappa: KappaRule::uniform(kappa), seed, both_bounds: true, ..Scs4bParams::default() }
}

fn slack(v: f64) -> f64 {
    1e-6 * v.abs().max(1.0)
}

#[test]
fn bounds_and_incumbent_enclose_the_optimum() {
    let mut enclosed = 0;
    for seed in 0..30 {
        let inst = tiny_instance(seed);
        for kappa in [1, 2, inst.scenarios().len()] {
            let rep = run(&inst, &params(kappa, seed)).unwrap();
            let Some(refined) = rep.refined.as_ref() else {
                assert_eq!(rep.status, RunStatus::EmptyPool);
                continue;
            };
            let z = oracle(refined);
            for b in &rep.bounds {
                assert_eq!(b.status, BoundStatus::Exact, "seed {seed}");
                assert!(b.value.unwrap() <= z + slack(z), "seed {seed} kappa {kappa}: {:?} above {z}", b);
            }
            if let Some(ub) = rep.incumbent {
                assert!(z <= ub + slack(z), "seed {seed} kappa {kappa}: incumbent {ub} below {z}");
                let gap = rep.gap().unwrap();
                assert!(gap >= -1e-6, "seed {seed}: gap {gap}");
                enclosed += 1;
            }
        }
    }
    assert!(enclosed >= 60, "only {enclosed} runs produced an incumbent");
}

#[test]
fn accepted_solutions_are_feasible_and_priced_exactly() {
    let mut checked = 0;
    for seed in 0..30 {
        let inst = tiny_instance(seed);
        let rep = run(&inst, &params(2, seed)).unwrap();
        let (Some(refined), Some(sol)) = (rep.refined.as_ref(), rep.solution.as_ref()) else { continue };
        assert!(check_feasibility(refined, &sol.design, &sol.assignments).is_empty(), "seed {seed}");
        assert_eq!(rep.out(), 0);
        let total = evaluate_solution(refined, &sol.design, &sol.assignments).unwrap().total;
        assert!(close(total, rep.incumbent.unwrap()), "seed {seed}: {total} vs {:?}", rep.incumbent);
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} incumbents");
}

#[test]
fn incumbent_never_increases_over_the_trial_log() {
    for seed in 0..30 {
        let inst = tiny_instance(seed);
        let rep = run(&inst, &params(1, seed)).unwrap();
        let accepted: Vec<f64> =
            rep.trials.iter().filter(|t| t.decision == Decision::Accepted).map(|t| t.value).collect();
        assert!(accepted.windows(2).all(|w| w[1] < w[0]), "seed {seed}: {accepted:?}");
        assert_eq!(accepted.last().copied(), rep.incumbent);
    }
}

#[test]
fn one_cluster_recovers_the_optimum_without_outsourcing() {
    let mut checked = 0;
    for seed in 0..40 {
        let inst = tiny_instance(seed);
        let best = brute_force_oracle(&inst, &OracleLimits::default()).unwrap();
        let sol = best.solution.unwrap();
        if sol.assignments.iter().any(ScenarioAssignment::uses_outsourcing) {
            continue;
        }
        let rep = run(&inst, &params(inst.scenarios().len(), seed)).unwrap();
        if !rep.removed.is_empty() {
            continue;
        }
        let z = best.incumbent.unwrap();
        let whole = rep.bound(BoundOption::Full).unwrap().value.unwrap();
        assert!(close(whole, z), "seed {seed}: bound {whole} vs {z}");
        assert!(rep.incumbent.is_some_and(|v| close(v, z)), "seed {seed}: incumbent {:?} vs {z}: {:#?} {:?}", rep.incumbent, rep.trials, sol);
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} instances qualified");
}

#[test]
fn gap_and_ratio_arithmetic() {
    assert_eq!(format!("{:.2}", gap_percent(7488.4, 7385.6)), "1.37");
    assert_eq!(format!("{:.4}", goodness_ratio(9241.6, 9240.6)), "1.0001");
    assert_eq!(format!("{:.4}", goodness_ratio(7488.4, 7468.4)), "1.0027");
}

#[test]
fn parameters_are_validated() {
    let inst = tiny_instance(0);
    for p in [
        Scs4bParams { rho: 1.5, ..Scs4bParams::default() },
        Scs4bParams { delta: 0, ..Scs4bParams::default() },
        Scs4bParams { kappa: KappaRule::uniform(0), ..Scs4bParams::default() },
        Scs4bParams { reference_value: Some(0.0), ..Scs4bParams::default() },
    ] {
        assert!(run(&inst, &p).is_err());
    }
}
