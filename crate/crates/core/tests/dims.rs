use cddp_core::cluster::{build_c_submodel, Cluster};
use cddp_core::testbed::{generate_bsc, merge_bsc, BscSpec, MergeSpec};
use cddp_core::*;

/// Column and row counts from the index sets alone, independent of the builder.
fn formula_dims(inst: &Instance) -> ModelDims {
    let mut d = ModelDims::default();
    for side in [Side::Strip, Side::Stack] {
        let levels: usize = inst.doors(side).iter().map(DoorSpec::levels).sum();
        d.n_binary += levels;
        d.n_rows += inst.door_count(side) + 1;
        d.n_nonzeros += 2 * levels;
    }
    for (w, s) in inst.scenarios().iter().enumerate() {
        let opts = |side: Side, node: usize| inst.eligible_doors(side, w, node).len() + 1;
        let xs: Vec<usize> = (0..s.origins()).map(|m| opts(Side::Strip, m)).collect();
        let ys: Vec<usize> = (0..s.destinations()).map(|n| opts(Side::Stack, n)).collect();
        let (sx, sy): (usize, usize) = (xs.iter().sum(), ys.iter().sum());
        d.n_binary += 2 + sx + sy;
        d.n_continuous += sx * sy;
        // capacity rows: level terms unless fully disrupted, plus eligible
        // nodes; a row with neither is not emitted
        for side in [Side::Strip, Side::Stack] {
            for (door, spec) in inst.doors(side).iter().enumerate() {
                let k = if s.disruption(side)[door] < 1.0 { spec.levels() } else { 0 };
                let elig = (0..s.nodes(side)).filter(|&node| inst.is_eligible(side, w, node, door)).count();
                d.n_rows += usize::from(k + elig > 0);
                d.n_nonzeros += k + elig;
            }
        }
        // flag + sum per node, RLT rows
        d.n_rows += 2 * (s.origins() + s.destinations());
        d.n_rows += sx * s.destinations() + s.origins() * sy;
        d.n_nonzeros += 2 * (s.origins() + s.destinations()) + sx + sy;
        d.n_nonzeros += 2 * sx * sy + sx * s.destinations() + s.origins() * sy;
    }
    d
}

#[test]
fn eight_node_instance_dimensions() {
    let inst = generate_bsc(&BscSpec::new(8, 4, 7)).unwrap();
    let dims = count_dims(&build_lip(&inst));
    assert_eq!(dims.n_rows, 3410);
    assert_eq!(dims.n_binary, 450);
    assert_eq!(dims.n_continuous, 8000);
    assert_eq!(dims, formula_dims(&inst));
    assert_eq!(dims.n_nonzeros, 20360);
}

fn dims(rows: usize, n01: usize, nc: usize, nz: usize) -> ModelDims {
    ModelDims { n_rows: rows, n_binary: n01, n_continuous: nc, n_nonzeros: nz }
}

#[test]
fn single_family_and_merged_benchmarks() {
    let i1 = generate_bsc(&BscSpec::new(8, 4, 1)).unwrap();
    let i2 = generate_bsc(&BscSpec::new(10, 5, 2)).unwrap();
    let i4 = generate_bsc(&BscSpec::new(15, 6, 3)).unwrap();
    let i3 = merge_bsc(&MergeSpec::default(), &[i1.clone(), i2.clone()]).unwrap();
    let i5 = merge_bsc(&MergeSpec::default(), &[i1, i2.clone(), i4.clone()]).unwrap();
    for (inst, want) in [
        (&i2, dims(6262, 660, 18000, 43650)),
        (&i3, dims(9662, 1070, 26000, 63930)),
        (&i4, dims(16124, 1120, 55125, 128670)),
        (&i5, dims(25774, 2140, 81125, 192500)),
    ] {
        let got = count_dims(&build_lip(inst));
        assert_eq!(got, want);
        assert_eq!(got, formula_dims(inst));
    }
    // 10-node members of the merge
    let c = Cluster::new(&i3, 0, vec![5, 6], 2);
    assert_eq!(count_dims(&build_c_submodel(&i3, &c)), dims(2512, 294, 7200, 17520));
}

#[test]
fn largest_cluster_dimensions() {
    let i1 = generate_bsc(&BscSpec::new(8, 4, 1)).unwrap();
    let c = Cluster::new(&i1, 0, vec![0, 1, 2], 3);
    assert_eq!(count_dims(&build_c_submodel(&i1, &c)), dims(2050, 286, 4800, 12248));
    let i2 = generate_bsc(&BscSpec::new(10, 5, 2)).unwrap();
    let c = Cluster::new(&i2, 0, vec![0, 1], 2);
    assert_eq!(count_dims(&build_c_submodel(&i2, &c)), dims(2512, 294, 7200, 17520));
}

#[test]
fn smallest_model_by_hand() {
    let door = DoorSpec { capacities: vec![10.0, 10.0], install_costs: vec![100.0, 5.0] };
    let flow = FlowMatrix::from_rows(&[vec![4.0]]).unwrap();
    let inst = Instance::new(InstanceData {
        strip_doors: vec![door.clone()],
        stack_doors: vec![door],
        max_strip_doors: 1,
        max_stack_doors: 1,
        distance: vec![8.0],
        outsourcing_penalty: 100.0,
        scenarios: vec![Scenario::new(1.0, flow, vec![0.0], vec![0.0])],
    })
    .unwrap();
    let dims = count_dims(&build_lip(&inst));
    assert_eq!(dims.n_binary, 8);
    assert_eq!(dims.n_continuous, 4);
}

#[test]
fn empty_scenario_set_keeps_first_stage_only() {
    let mut data = generate_bsc(&BscSpec::new(3, 2, 1)).unwrap().into_data();
    data.scenarios.clear();
    let inst = Instance::new(data).unwrap();
    let dims = count_dims(&build_lip(&inst));
    assert_eq!(dims.n_binary, 2 * 2 * 5);
    assert_eq!(dims.n_continuous, 0);
    assert_eq!(dims.n_rows, 2 * (2 + 1));
}

#[test]
fn model_without_doors_is_empty() {
    let inst = Instance::new(InstanceData {
        strip_doors: vec![],
        stack_doors: vec![],
        max_strip_doors: 1,
        max_stack_doors: 1,
        distance: vec![],
        outsourcing_penalty: 1.0,
        scenarios: vec![],
    })
    .unwrap();
    assert_eq!(count_dims(&build_lip(&inst)), ModelDims::default());
}

#[test]
fn symbol_names_round_trip() {
    let inst = generate_bsc(&BscSpec::new(3, 2, 5)).unwrap();
    let milp = build_lip(&inst);
    for (col, v) in milp.vars().iter().enumerate() {
        let sym = milp.symbol(col).unwrap();
        assert_eq!(Symbol::parse(&v.name), Some(sym));
        assert_eq!(milp.var_of(&sym), Some(col));
    }
}
