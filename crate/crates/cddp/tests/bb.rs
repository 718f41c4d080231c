use cddp::bb::{solve_bb, BbParams};
use cddp_core::milp::{GenericMilp, Sense, VarKind};
use cddp_core::SolveStatus;
use proptest::prelude::*;

/// Binary program with `Le` rows, plus the enumerated optimum.
fn model(obj: &[i32], rows: &[(Vec<i32>, i32)]) -> (GenericMilp, Option<f64>) {
    let mut m = GenericMilp::new("p");
    let vars: Vec<usize> =
        obj.iter().enumerate().map(|(j, &c)| m.add_var(format!("b{j}"), VarKind::Binary, (0.0, 1.0), c.into(), None)).collect();
    for (r, (a, rhs)) in rows.iter().enumerate() {
        m.add_row(format!("r{r}"), vars.iter().zip(a).map(|(&j, &v)| (j, f64::from(v))), Sense::Le, (*rhs).into());
    }
    let n = obj.len();
    let best = (0u32..1 << n)
        .filter(|mask| rows.iter().all(|(a, rhs)| (0..n).filter(|j| mask >> j & 1 == 1).map(|j| a[j]).sum::<i32>() <= *rhs))
        .map(|mask| (0..n).filter(|j| mask >> j & 1 == 1).map(|j| f64::from(obj[j])).sum::<f64>())
        .fold(None, |b: Option<f64>, v| Some(b.map_or(v, |b| b.min(v))));
    (m, best)
}

fn programs() -> impl Strategy<Value = (Vec<i32>, Vec<(Vec<i32>, i32)>)> {
    (1usize..9).prop_flat_map(|n| {
        (
            prop::collection::vec(-20i32..20, n),
            prop::collection::vec((prop::collection::vec(-5i32..10, n), -3i32..15), 0..4),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn optimum_matches_enumeration((obj, rows) in programs()) {
        let (m, best) = model(&obj, &rows);
        let r = solve_bb(&m, &BbParams::default());
        match best {
            None => prop_assert_eq!(r.status, SolveStatus::Infeasible),
            Some(v) => {
                prop_assert_eq!(r.status, SolveStatus::Optimal);
                prop_assert!((r.incumbent.unwrap() - v).abs() < 1e-6);
                prop_assert!(m.is_feasible(r.solution.as_ref().unwrap(), 1e-6));
            }
        }
    }

    #[test]
    fn limited_bound_stays_below_every_point((obj, rows) in programs(), limit in 1u64..6) {
        let (m, best) = model(&obj, &rows);
        let r = solve_bb(&m, &BbParams { node_limit: Some(limit), ..Default::default() });
        if let (Some(b), Some(v)) = (r.bound, best) {
            prop_assert!(b <= v + 1e-6);
        }
        if let (Some(u), Some(v)) = (r.incumbent, best) {
            prop_assert!(u >= v - 1e-6);
        }
        if let (Some(b), Some(u)) = (r.bound, r.incumbent) {
            prop_assert!(b <= u + 1e-6);
        }
        let again = solve_bb(&m, &BbParams { node_limit: Some(limit), ..Default::default() });
        prop_assert_eq!((r.status, r.incumbent, r.bound, r.solution), (again.status, again.incumbent, again.bound, again.solution));
    }
}
