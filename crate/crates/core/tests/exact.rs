use cddp_core::bq::{solve_bq, solve_omega_exact, BqParams};
use cddp_core::lsh::{solve_omega_lsh, LshParams, OmegaSubmodel};
use cddp_core::oracle::{brute_force_oracle, OracleLimits};
use cddp_core::solve::close;
use cddp_core::testbed::tiny_instance;
use cddp_core::*;

#[test]
fn bq_search_matches_enumeration() {
    for seed in 0..25 {
        let inst = tiny_instance(seed);
        let oracle = brute_force_oracle(&inst, &OracleLimits::default()).unwrap();
        let bq = solve_bq(&inst, &BqParams::default());
        assert!(bq.is_optimal(), "seed {seed}: {:?}", bq.status);
        let (a, b) = (oracle.incumbent.unwrap(), bq.incumbent.unwrap());
        assert!(close(a, b), "seed {seed}: oracle {a} vs bq {b}");
        let sol = bq.solution.unwrap();
        assert!(check_feasibility(&inst, &sol.design, &sol.assignments).is_empty());
        assert!(close(sol.evaluate(&inst).unwrap().total, b));
        let osol = oracle.solution.unwrap();
        assert!(check_feasibility(&inst, &osol.design, &osol.assignments).is_empty(), "seed {seed}");
    }
}

#[test]
fn lsh_never_beats_exact_and_stays_feasible() {
    for seed in 0..25 {
        let inst = tiny_instance(seed);
        let oracle = brute_force_oracle(&inst, &OracleLimits::default()).unwrap().solution.unwrap();
        for w in 0..inst.scenarios().len() {
            let sub = OmegaSubmodel::from_design(&inst, w, &oracle.design, false);
            let exact = solve_omega_exact(&sub, None, u64::MAX);
            let lsh = solve_omega_lsh(&sub, &LshParams { restarts: 5, seed });
            let a = lsh.solution.as_ref().unwrap();
            assert!(sub.is_feasible(a));
            assert!(lsh.incumbent.unwrap() >= exact.incumbent.unwrap() - 1e-9);
        }
    }
}

#[test]
fn oracle_refuses_large_spaces() {
    let inst = cddp_core::testbed::generate_bsc(&cddp_core::testbed::BscSpec::new(8, 4, 1)).unwrap();
    assert!(matches!(
        brute_force_oracle(&inst, &OracleLimits::default()),
        Err(cddp_core::oracle::OracleError::TooLarge { .. })
    ));
}
