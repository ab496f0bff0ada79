use proptest::prelude::*;
use stlcluster::formula::{parse_formula, Atom, Cmp, Formula, Interval, LinearExpr, Operand};
use stlcluster::semantics::satisfies;
use stlcluster::trace::TimedTrace;

fn trace_strategy() -> impl Strategy<Value = TimedTrace> {
    (prop::collection::vec(-2.0f64..2.0, 2..12), 0.1f64..1.0).prop_map(|(xs, dt)| {
        let times = (0..xs.len()).map(|i| i as f64 * dt).collect();
        TimedTrace::new(times, xs.into_iter().map(|v| vec![v]).collect(), vec!["x".into()])
            .unwrap()
    })
}

fn atom() -> impl Strategy<Value = Formula> {
    (prop_oneof![Just(Cmp::Gt), Just(Cmp::Lt), Just(Cmp::Ge), Just(Cmp::Le)], -2.0f64..2.0)
        .prop_map(|(cmp, c)| {
            Formula::Atom(Atom {
                expr: LinearExpr::channel("x"),
                cmp,
                rhs: Operand::Const((c * 100.0).round() / 100.0),
            })
        })
}

fn interval() -> impl Strategy<Value = Interval> {
    (0u32..20, 0u32..20).prop_map(|(a, w)| Interval::closed(a as f64 / 10.0, (a + w) as f64 / 10.0))
}

fn formula() -> impl Strategy<Value = Formula> {
    atom().prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (interval(), inner.clone()).prop_map(|(i, a)| Formula::Eventually(i, Box::new(a))),
            (interval(), inner.clone()).prop_map(|(i, a)| Formula::Always(i, Box::new(a))),
            (interval(), inner.clone(), inner).prop_map(|(i, a, b)| Formula::Until(
                i,
                Box::new(a),
                Box::new(b)
            )),
        ]
    })
}

fn sat(x: &TimedTrace, f: &Formula) -> bool {
    satisfies(x, f, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn always_is_dual_to_eventually(x in trace_strategy(), i in interval(), f in formula()) {
        let g = Formula::Always(i.clone(), Box::new(f.clone()));
        let nfn = Formula::not(Formula::Eventually(i, Box::new(Formula::not(f))));
        prop_assert_eq!(sat(&x, &g), sat(&x, &nfn));
    }

    #[test]
    fn de_morgan(x in trace_strategy(), a in formula(), b in formula()) {
        let lhs = Formula::not(Formula::and(a.clone(), b.clone()));
        let rhs = Formula::or(Formula::not(a), Formula::not(b));
        prop_assert_eq!(sat(&x, &lhs), sat(&x, &rhs));
    }

    #[test]
    fn negation_flips(x in trace_strategy(), f in formula()) {
        prop_assert_eq!(sat(&x, &Formula::not(f.clone())), !sat(&x, &f));
    }

    #[test]
    fn display_round_trips(f in formula()) {
        prop_assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn wider_window_never_hurts_eventually(x in trace_strategy(), a in 0u32..10, w in 0u32..10, f in formula()) {
        let narrow = Formula::Eventually(Interval::closed(a as f64 / 10.0, (a + w) as f64 / 10.0), Box::new(f.clone()));
        let wide = Formula::Eventually(Interval::closed(a as f64 / 10.0, (a + w + 5) as f64 / 10.0), Box::new(f));
        prop_assert!(!sat(&x, &narrow) || sat(&x, &wide));
    }
}
