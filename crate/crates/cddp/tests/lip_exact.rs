use cddp::bb::{solve_bb, BbParams};
use cddp_core::oracle::{brute_force_oracle, OracleLimits};
use cddp_core::solve::close;
use cddp_core::testbed::tiny_instance;
use cddp_core::*;

#[test]
fn lip_optimum_matches_enumeration() {
    let t = std::time::Instant::now();
    for seed in 0..25 {
        let inst = tiny_instance(seed);
        let oracle = brute_force_oracle(&inst, &OracleLimits::default()).unwrap();
        let milp = build_lip(&inst);
        let r = solve_bb(&milp, &BbParams::default());
        assert!(r.is_optimal(), "seed {seed}: {:?}", r.status);
        let (a, b) = (oracle.incumbent.unwrap(), r.incumbent.unwrap());
        assert!(close(a, b), "seed {seed}: oracle {a} vs lip {b} ({} nodes)", r.nodes);
    }
    eprintln!("{:?}", t.elapsed());
}
