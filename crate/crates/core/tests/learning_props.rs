use std::collections::BTreeSet;

use proptest::prelude::*;
use stlcluster::learning::{
    bounding_hyperbox, essential_corners, synthesize_formula, CornerSubset,
};
use stlcluster::projection::{Projector, Valuation};
use stlcluster::semantics::satisfies;
use stlcluster::templates;
use stlcluster::trace::TimedTrace;

fn overshoot_points() -> impl Strategy<Value = Vec<Valuation>> {
    prop::collection::vec((-1.5f64..=1.5, 0.0f64..=5.0), 1..20).prop_map(|ps| {
        ps.into_iter()
            .map(|(a, tau)| Valuation::point([("a", a), ("tau", tau)]))
            .collect()
    })
}

fn trace() -> impl Strategy<Value = TimedTrace> {
    prop::collection::vec((-1.0f64..1.0, 0u8..2), 3..20).prop_map(|rows| {
        let times = (0..rows.len()).map(|i| i as f64 * 0.5).collect();
        let rows = rows
            .into_iter()
            .map(|(x, lc)| vec![0.0, lc as f64, x])
            .collect();
        TimedTrace::new(times, rows, vec!["x_ref".into(), "lane_change".into(), "x".into()])
            .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn box_contains_its_points(pts in overshoot_points(), open_a in any::<bool>()) {
        let ps = templates::builtin("overshoot").unwrap().space();
        let open: BTreeSet<String> = if open_a { BTreeSet::from(["a".into()]) } else { BTreeSet::new() };
        let b = bounding_hyperbox(&ps, &pts, &[0.01, 0.05], &open).unwrap();
        for p in &pts {
            prop_assert!(b.contains_valuation(p));
        }
        prop_assert!(ps.coords_leq(b.nu_s(), b.nu_w()));
    }

    #[test]
    fn essential_corners_and_size_bound(pts in overshoot_points(), mask in 0u32..8) {
        let tpl = templates::builtin("overshoot").unwrap();
        let ps = tpl.space();
        let b = bounding_hyperbox(&ps, &pts, &[0.01, 0.05], &BTreeSet::new()).unwrap();
        prop_assert_eq!(essential_corners(&b).len(), ps.len());
        let all = ["10", "01", "00"];
        let bits: Vec<&str> = (0..3).filter(|k| mask >> k & 1 == 1).map(|k| all[k]).collect();
        let corners = CornerSubset::from_bits(2, &bits).unwrap();
        let psi = synthesize_formula(&tpl, &b, &corners).unwrap();
        let phi = tpl.formula().size();
        prop_assert_eq!(psi.size, (corners.len() + 1) * phi + 2 * corners.len());
        if corners.len() <= ps.len() {
            prop_assert!(psi.size <= (ps.len() + 1) * (phi + 2));
        }
    }

    #[test]
    fn instantiation_agrees_with_the_monitor(x in trace(), a in -1.5f64..=1.5, tau in 0.0f64..=5.0) {
        let tpl = templates::builtin("overshoot").unwrap();
        let pr = Projector::new(&tpl, x.channels()).unwrap();
        let ground = tpl.instantiate(&Valuation::point([("a", a), ("tau", tau)])).unwrap();
        prop_assert!(ground.is_ground());
        prop_assert_eq!(ground.subformulas().len(), tpl.formula().subformulas().len());
        prop_assert_eq!(satisfies(&x, &ground, 0.0).unwrap(), pr.sat(&x, &[a, tau]).unwrap());
    }

    #[test]
    fn synthesized_formula_matches_the_region(x in trace(), pts in overshoot_points()) {
        let tpl = templates::builtin("overshoot").unwrap();
        let ps = tpl.space();
        let pr = Projector::new(&tpl, x.channels()).unwrap();
        let b = bounding_hyperbox(&ps, &pts, &[0.01, 0.05], &BTreeSet::new()).unwrap();
        let corners = CornerSubset::essential(2);
        let psi = synthesize_formula(&tpl, &b, &corners).unwrap();
        let expected = pr.sat(&x, b.nu_w()).unwrap()
            && corners.corners().iter().all(|c| !pr.sat(&x, &b.corner(c)).unwrap());
        prop_assert_eq!(satisfies(&x, &psi.formula, 0.0).unwrap(), expected);
    }
}
