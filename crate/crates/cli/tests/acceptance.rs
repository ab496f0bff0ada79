//! End-to-end acceptance checks, one test per criterion. Run with
//! `--nocapture` to see the one-line verdicts.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use stlcluster::clustering::{adjusted_rand_index, fit_gmm, fit_kmeans, Labeling, ProjectionMatrix};
use stlcluster::formula::{
    parse_formula, validate_polarity, Atom, Cmp, Formula, Interval, LinearExpr, Operand,
    PstlTemplate,
};
use stlcluster::learning::{
    bounding_hyperbox, check_comparable_convexity, essential_corners, synthesize_formula,
    CornerSubset, Hyperbox, Shape,
};
use stlcluster::projection::{query_bound, ParameterSpace, Projector, Valuation};
use stlcluster::semantics::satisfies;
use stlcluster::templates;
use stlcluster::trace::{preprocess, synth_traces, Preprocess, TimedTrace, TraceSet};
use stlcluster_cli::config::PipelineConfig;
use stlcluster_cli::pipeline::{cluster_stage, execute, learn_stage, project_stage};
use stlcluster_cli::pitfall::{dtw_compare, partition, pitfall_corpus};

fn verdict(n: usize, name: &str, ok: bool, detail: &str, elapsed: Duration, budget: Duration) {
    let in_time = elapsed < budget;
    let status = if ok && in_time { "PASS" } else { "FAIL" };
    println!(
        "criterion {n:>2} {status} {name}: {detail} ({:.3} s, budget {:.3} s)",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    assert!(ok, "criterion {n} failed: {detail}");
    assert!(in_time, "criterion {n} exceeded {budget:?}: {elapsed:?}");
}

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn overshoot_space() -> ParameterSpace {
    templates::builtin("overshoot").unwrap().space()
}

#[test]
fn criterion_01_partial_order() {
    let start = Instant::now();
    let ps = overshoot_space();
    let nu1 = Valuation::point([("tau", 0.1), ("a", -1.1)]);
    let nu2 = Valuation::point([("tau", 3.3), ("a", -1.3)]);
    let forward = ps.param_leq(&nu1, &nu2).unwrap();
    let backward = ps.param_leq(&nu2, &nu1).unwrap();
    let elapsed = start.elapsed();
    verdict(
        1,
        "partial order",
        forward && !backward,
        &format!("nu1 <= nu2 is {forward}, nu2 <= nu1 is {backward}"),
        elapsed,
        Duration::from_millis(1),
    );
}

#[test]
fn criterion_02_example_box_formula() {
    let tpl = templates::builtin("overshoot").unwrap();
    let expected = parse_formula(
        "F(lane_change > 0.5 & F[0, 3.3](x - x_ref > -1.3)) \
         & !F(lane_change > 0.5 & F[0, 0.1](x - x_ref > -1.3)) \
         & !F(lane_change > 0.5 & F[0, 3.3](x - x_ref > -1.1))",
    )
    .unwrap();
    let start = Instant::now();
    let ps = tpl.space();
    let pts: Vec<Valuation> = [(-1.3, 0.1), (-1.3, 3.3), (-1.1, 3.3), (-1.1, 0.1)]
        .into_iter()
        .map(|(a, tau)| Valuation::point([("a", a), ("tau", tau)]))
        .collect();
    let b = bounding_hyperbox(&ps, &pts, &[0.0, 0.0], &BTreeSet::new()).unwrap();
    let corners = essential_corners(&b);
    let psi = synthesize_formula(&tpl, &b, &CornerSubset::essential(2)).unwrap();
    let elapsed = start.elapsed();
    let want = vec![
        Valuation::point([("a", -1.3), ("tau", 0.1)]),
        Valuation::point([("a", -1.1), ("tau", 3.3)]),
    ];
    let ok = corners == want && psi.formula == expected;
    verdict(
        2,
        "example box formula",
        ok,
        &format!("corners match: {}, formula: {}", corners == want, psi.formula),
        elapsed,
        Duration::from_millis(1),
    );
}

fn random_walk_traces(count: usize, seed: u64) -> TraceSet {
    let channels = vec!["pos.x".to_string(), "pos.y".to_string()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ts = TraceSet::new(channels.clone());
    for i in 0..count {
        let times: Vec<f64> = (0..=60).map(|k| k as f64 * 0.5).collect();
        let (mut x, mut y) = (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
        let rows = times
            .iter()
            .map(|_| {
                x += rng.random_range(-0.4..0.4);
                y += rng.random_range(-0.4..0.4);
                vec![x, y]
            })
            .collect();
        ts.insert(format!("walk_{i:03}"), TimedTrace::new(times, rows, channels.clone()).unwrap())
            .unwrap();
    }
    ts
}

/// 100 traces suited to each bundled template.
fn corpus_for(template: &str) -> TraceSet {
    let n = 100;
    match template {
        "overshoot" => synth_traces(
            "overshoot",
            &params(&[("amplitude", 0.6), ("amplitude_jitter", 0.9), ("noise", 0.01)]),
            n,
            31,
        )
        .unwrap(),
        "overshoot_step" => {
            let ts = synth_traces(
                "overshoot",
                &params(&[("amplitude", 0.6), ("amplitude_jitter", 0.9)]),
                n,
                32,
            )
            .unwrap();
            let step = Preprocess::Derivative {
                channel: "x".into(),
                order: 2,
                name: "ddx".into(),
            };
            preprocess(&ts, &step).unwrap().traces
        }
        "step" => synth_traces("step", &params(&[("height_jitter", 0.5)]), n, 33).unwrap(),
        "spike" => synth_traces("spike", &params(&[("height_jitter", 0.5)]), n, 34).unwrap(),
        "avoid" | "reorient" => random_walk_traces(n, 35),
        lane if lane.starts_with("lane_dwell") => {
            synth_traces("lane_dwell", &params(&[]), n, 36).unwrap()
        }
        other => panic!("no corpus for {other}"),
    }
}

struct SoundnessStats {
    projections: usize,
    sentinels: BTreeMap<String, usize>,
    unsound: Vec<String>,
    not_minimal: Vec<String>,
    over_budget: Vec<String>,
}

fn check_projections(tpl: &PstlTemplate, ts: &TraceSet, stats: &mut SoundnessStats) {
    let pr = Projector::new(tpl, ts.channels()).unwrap();
    let ps = pr.space();
    let bound = query_bound(ps);
    let sat = |x: &TimedTrace, coords: &[f64]| {
        let f = tpl.instantiate(&ps.valuation(coords)).unwrap();
        satisfies(x, &f, 0.0).unwrap()
    };
    for (id, x) in ts.iter() {
        let p = pr.project_lex(x).unwrap();
        stats.projections += 1;
        let tag = format!("{}/{id}", tpl.name());
        if p.queries > bound {
            stats.over_budget.push(format!("{tag}: {} > {bound}", p.queries));
        }
        let nu = match &p.valuation {
            Valuation::Point(_) => ps.to_vec(&p.valuation).unwrap(),
            _ => {
                *stats.sentinels.entry(tpl.name().to_string()).or_default() += 1;
                continue;
            }
        };
        if !sat(x, &nu) {
            stats.unsound.push(tag.clone());
        }
        for (i, d) in ps.decls().iter().enumerate() {
            let mut s = nu.clone();
            s[i] = ps.strengthen(i, nu[i], 2.0 * d.epsilon).clamp(d.lo, d.hi);
            if s[i] != nu[i] && sat(x, &s) {
                stats.not_minimal.push(format!("{tag} coordinate {}", d.name));
            }
        }
    }
}

fn all_projection_stats() -> (SoundnessStats, Duration) {
    let start = Instant::now();
    let mut stats = SoundnessStats {
        projections: 0,
        sentinels: BTreeMap::new(),
        unsound: Vec::new(),
        not_minimal: Vec::new(),
        over_budget: Vec::new(),
    };
    for name in templates::names() {
        let tpl = templates::builtin(name).unwrap();
        check_projections(&tpl, &corpus_for(name), &mut stats);
    }
    (stats, start.elapsed())
}

#[test]
fn criterion_03_projection_soundness_and_minimality() {
    let (s, elapsed) = all_projection_stats();
    let ok = s.unsound.is_empty() && s.not_minimal.is_empty();
    verdict(
        3,
        "projection soundness and minimality",
        ok,
        &format!(
            "{} projections (sentinels {:?}), {} unsound, {} not minimal {:?}",
            s.projections,
            s.sentinels,
            s.unsound.len(),
            s.not_minimal.len(),
            s.unsound.iter().chain(&s.not_minimal).take(3).collect::<Vec<_>>()
        ),
        elapsed,
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_04_query_bound() {
    let (s, elapsed) = all_projection_stats();
    verdict(
        4,
        "query count bound",
        s.over_budget.is_empty(),
        &format!(
            "{} projections, {} over the bound {:?}",
            s.projections,
            s.over_budget.len(),
            s.over_budget.iter().take(3).collect::<Vec<_>>()
        ),
        elapsed,
        Duration::from_secs(60),
    );
}

/// `max` of `x - x_ref` over `[t, t + tau]` after any lane-change sample,
/// maximized over lane-change samples; `-inf` without a lane change.
fn overshoot_envelope(x: &TimedTrace, tau: f64) -> f64 {
    let (lc, xi, xr) = (
        x.channel_index("lane_change").unwrap(),
        x.channel_index("x").unwrap(),
        x.channel_index("x_ref").unwrap(),
    );
    let times = x.times();
    let e = |i: usize| x.value(i, xi) - x.value(i, xr);
    let e_at = |t: f64| {
        let j = times.partition_point(|&s| s <= t);
        if j == 0 {
            return e(0);
        }
        if j == times.len() {
            return e(times.len() - 1);
        }
        let (t0, t1) = (times[j - 1], times[j]);
        let w = (t - t0) / (t1 - t0);
        e(j - 1) * (1.0 - w) + e(j) * w
    };
    let span = *times.last().unwrap();
    let mut best = f64::NEG_INFINITY;
    for i in (0..x.len()).filter(|&i| x.value(i, lc) > 0.5) {
        let end = (times[i] + tau).min(span);
        let mut m = e_at(end);
        for j in i..x.len() {
            if times[j] > end {
                break;
            }
            m = m.max(e(j));
        }
        best = best.max(m);
    }
    best
}

struct Grid {
    a: Vec<f64>,
    tau: Vec<f64>,
}

fn overshoot_grid(ps: &ParameterSpace) -> Grid {
    let axis = |i: usize| {
        let d = &ps.decls()[i];
        let step = d.epsilon / 2.0;
        let n = ((d.hi - d.lo) / step).round() as usize;
        (0..=n).map(|k| d.lo + k as f64 * step).collect::<Vec<f64>>()
    };
    Grid {
        a: axis(0),
        tau: axis(1),
    }
}

/// Brute-force reading of the box formula: some grid valuation of the
/// closed box is satisfied and no grid valuation below `nu_w` outside the
/// closed box is.
fn grid_oracle(ps: &ParameterSpace, grid: &Grid, env: &[f64], nu_s: &[f64], nu_w: &[f64]) -> bool {
    if !ps.coords_leq(nu_s, nu_w) {
        return false;
    }
    let mut inside_sat = false;
    for (ti, &tau) in grid.tau.iter().enumerate() {
        for &a in &grid.a {
            let p = [a, tau];
            if !ps.coords_leq(&p, nu_w) {
                continue;
            }
            let sat = env[ti] > a;
            let in_box = ps.coords_leq(nu_s, &p);
            if sat && !in_box {
                return false;
            }
            inside_sat |= sat && in_box;
        }
    }
    inside_sat
}

fn moved(ps: &ParameterSpace, b: &Hyperbox, grow: bool) -> (Vec<f64>, Vec<f64>) {
    let mut s = b.nu_s().to_vec();
    let mut w = b.nu_w().to_vec();
    for (i, d) in ps.decls().iter().enumerate() {
        if grow {
            s[i] = ps.strengthen(i, s[i], d.epsilon).clamp(d.lo, d.hi);
            w[i] = ps.weaken(i, w[i], d.epsilon).clamp(d.lo, d.hi);
        } else {
            s[i] = ps.weaken(i, s[i], d.epsilon);
            w[i] = ps.strengthen(i, w[i], d.epsilon);
        }
    }
    (s, w)
}

fn three_group_overshoot(counts: [usize; 3], seeds: [u64; 3]) -> PipelineConfig {
    PipelineConfig::from_json(&format!(
        r#"{{
            "schema_version": 1,
            "traces": [
                {{"kind": "synth", "family": "overshoot", "count": {}, "seed": {},
                  "params": {{"amplitude": 0.1, "amplitude_jitter": 0.2, "settle": 0.5}}, "prefix": "damped"}},
                {{"kind": "synth", "family": "overshoot", "count": {}, "seed": {},
                  "params": {{"amplitude": 0.6, "amplitude_jitter": 0.1, "settle": 1.0}}, "prefix": "moderate"}},
                {{"kind": "synth", "family": "overshoot", "count": {}, "seed": {},
                  "params": {{"amplitude": 1.2, "amplitude_jitter": 0.1, "settle": 2.5}}, "prefix": "aggressive"}}
            ],
            "template": "builtin:overshoot",
            "clustering": {{"algorithm": "kmeans", "k": 3, "seed": 4}}
        }}"#,
        counts[0], seeds[0], counts[1], seeds[1], counts[2], seeds[2]
    ))
    .unwrap()
}

#[test]
fn criterion_05_box_formula_equivalence() {
    let start = Instant::now();
    let cfg = three_group_overshoot([17, 17, 16], [41, 42, 43]);
    let run = execute(&cfg, Path::new(".")).unwrap();
    let tpl = &run.template;
    let ps = tpl.space();
    let grid = overshoot_grid(&ps);
    let (mut compared, mut banded, mut disagreements) = (0, 0, Vec::new());
    for (id, x) in run.traces.iter() {
        let env: Vec<f64> = grid.tau.iter().map(|&tau| overshoot_envelope(x, tau)).collect();
        for (c, psi) in &run.learned {
            let b = &psi.hyperbox;
            let (gs, gw) = moved(&ps, b, true);
            let (ss, sw) = moved(&ps, b, false);
            let grown = grid_oracle(&ps, &grid, &env, &gs, &gw);
            let shrunk = grid_oracle(&ps, &grid, &env, &ss, &sw);
            let exact = grid_oracle(&ps, &grid, &env, b.nu_s(), b.nu_w());
            if grown != shrunk || grown != exact {
                banded += 1;
                continue;
            }
            compared += 1;
            let formula = satisfies(x, &psi.formula, 0.0).unwrap();
            if formula != exact {
                disagreements.push(format!("{id} vs {}", c.label));
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        5,
        "box formula equivalence",
        run.learned.len() == 3 && compared > 0 && disagreements.is_empty(),
        &format!(
            "{} traces x {} boxes: {compared} compared, {banded} in the band, {} disagree {:?}",
            run.traces.len(),
            run.learned.len(),
            disagreements.len(),
            disagreements.iter().take(3).collect::<Vec<_>>()
        ),
        elapsed,
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_06_size_bound() {
    let start = Instant::now();
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("demo");
    let mut checked = 0;
    let mut violations = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(&demo).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries.iter().filter(|p| p.extension().is_some_and(|e| e == "json")) {
        let cfg = PipelineConfig::from_file(path).unwrap();
        let run = execute(&cfg, &demo).unwrap();
        let p = run.template.params().len();
        let phi = run.template.formula().size();
        for (c, psi) in &run.learned {
            checked += 1;
            if psi.size > (p + 1) * (phi + 2) {
                violations.push(format!("{}:{} size {}", path.display(), c.label, psi.size));
            }
        }
    }
    verdict(
        6,
        "formula size bound",
        checked > 0 && violations.is_empty(),
        &format!("{checked} formulas from {} demos, violations {violations:?}", entries.len()),
        start.elapsed(),
        Duration::from_secs(60),
    );
}

fn blobs() -> (ProjectionMatrix, Vec<usize>) {
    let centers = [(0.2, 0.2), (0.8, 0.2), (0.5, 0.8)];
    let normal = Normal::new(0.0, 0.02).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut rows, mut truth) = (Vec::new(), Vec::new());
    for i in 0..150 {
        let c = i % 3;
        rows.push(vec![
            centers[c].0 + normal.sample(&mut rng),
            centers[c].1 + normal.sample(&mut rng),
        ]);
        truth.push(c);
    }
    let ids = (0..150).map(|i| format!("p{i:03}")).collect();
    (ProjectionMatrix::new(ids, vec!["u".into(), "v".into()], rows).unwrap(), truth)
}

fn labels_in_order(l: &Labeling, pm: &ProjectionMatrix) -> Vec<String> {
    pm.ids()
        .iter()
        .map(|id| l.get(id).unwrap().iter().next().unwrap().clone())
        .collect()
}

#[test]
fn criterion_07_blob_recovery() {
    let start = Instant::now();
    let (pm, truth) = blobs();
    let (_, gmm) = fit_gmm(&pm, 3, 7, 200, 1e-9).unwrap();
    let (_, km) = fit_kmeans(&pm, 3, 7, 200, 1e-9).unwrap();
    let ari_gmm = adjusted_rand_index(&labels_in_order(&gmm, &pm), &truth);
    let ari_km = adjusted_rand_index(&labels_in_order(&km, &pm), &truth);
    verdict(
        7,
        "blob recovery",
        ari_gmm >= 0.9 && ari_km >= 0.99,
        &format!("ARI gmm {ari_gmm:.4} (>= 0.9), k-means {ari_km:.4} (>= 0.99)"),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_08_dtw_pitfall() {
    let start = Instant::now();
    let ts = pitfall_corpus(0).unwrap();
    let tpl = templates::builtin("overshoot").unwrap();
    let c = dtw_compare(&ts, &tpl, "x", 2, 0).unwrap();
    let group = |names: &[&str]| -> Vec<String> {
        let mut g: Vec<String> = ts
            .ids()
            .filter(|id| names.iter().any(|n| id.starts_with(n)))
            .cloned()
            .collect();
        g.sort();
        g
    };
    let mut want_dtw = vec![group(&["flat"]), group(&["large", "small"])];
    let mut want_proj = vec![group(&["flat", "small"]), group(&["large"])];
    want_dtw.sort();
    want_proj.sort();
    let (got_dtw, got_proj) = (partition(&c.dtw_labeling), partition(&c.projection_labeling));
    let ok = got_dtw == want_dtw && got_proj == want_proj && got_dtw != got_proj;
    verdict(
        8,
        "DTW pitfall",
        ok,
        &format!("dtw {got_dtw:?}, projection {got_proj:?}"),
        start.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_09_polarity_validator() {
    let start = Instant::now();
    let tied: PstlTemplate = "name: tied\nparams:\n  h value + -1 1 0.01\n  w time + 0 1 0.01\nformula:\n  F(x <= h & F[0, w](x >= h))"
        .parse()
        .unwrap();
    let times: Vec<f64> = (0..=10).map(|i| i as f64).collect();
    let mut zero = TraceSet::new(vec!["x".into()]);
    zero.insert(
        "zero",
        TimedTrace::new(times.clone(), vec![vec![0.0]; times.len()], vec!["x".into()]).unwrap(),
    )
    .unwrap();
    let flagged = validate_polarity(&tied, &zero, 200, 1).unwrap();
    let mut failing = Vec::new();
    for name in templates::names() {
        let tpl = templates::builtin(name).unwrap();
        let all = corpus_for(name);
        let mut few = TraceSet::new(all.channels().to_vec());
        for (id, x) in all.iter().take(5) {
            few.insert(id.clone(), x.clone()).unwrap();
        }
        let r = validate_polarity(&tpl, &few, 60, 3).unwrap();
        if !r.passed() {
            failing.push(name);
        }
    }
    verdict(
        9,
        "polarity validator",
        !flagged.passed() && failing.is_empty(),
        &format!(
            "tied template: {} counterexamples; bundled templates failing: {failing:?}",
            flagged.counterexamples.len()
        ),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_10_comparable_convexity() {
    let start = Instant::now();
    let ps = overshoot_space();
    let boxes = [
        Hyperbox::new(ps.clone(), vec![-1.1, 0.1], vec![-1.3, 3.3]).unwrap(),
        Hyperbox::new(ps.clone(), vec![1.5, 0.0], vec![-1.5, 5.0]).unwrap(),
        Hyperbox::new(ps.clone(), vec![0.4, 2.0], vec![0.1, 2.5]).unwrap(),
    ];
    let mut failures = Vec::new();
    for (i, b) in boxes.iter().enumerate() {
        if !check_comparable_convexity(&Shape::Box(b.clone()), 300, i as u64).passed() {
            failures.push(format!("box {i}"));
        }
        let all = ["10", "01", "00"];
        for mask in 0..8u32 {
            let bits: Vec<&str> = (0..3).filter(|k| mask >> k & 1 == 1).map(|k| all[k]).collect();
            let shape = Shape::from_corners(b, &CornerSubset::from_bits(2, &bits).unwrap());
            if !check_comparable_convexity(&shape, 300, mask as u64).passed() {
                failures.push(format!("box {i} corners {bits:?}"));
            }
        }
    }
    let low = Hyperbox::new(ps.clone(), vec![1.5, 0.0], vec![0.5, 1.5]).unwrap();
    let high = Hyperbox::new(ps, vec![-0.5, 3.0], vec![-1.5, 5.0]).unwrap();
    let corrupted = Shape::Union(vec![Shape::Box(low), Shape::Box(high)]);
    let report = check_comparable_convexity(&corrupted, 300, 9);
    verdict(
        10,
        "comparable convexity",
        failures.is_empty() && !report.passed(),
        &format!(
            "well-formed failures {failures:?}; corrupted union counterexample {:?}",
            report.counterexample
        ),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

fn random_trace(rng: &mut ChaCha8Rng) -> TimedTrace {
    let n = rng.random_range(2..15);
    let dt = rng.random_range(0.1..1.0);
    let times = (0..n).map(|i| i as f64 * dt).collect();
    let rows = (0..n)
        .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
        .collect();
    TimedTrace::new(times, rows, vec!["x".into(), "y".into()]).unwrap()
}

fn random_interval(rng: &mut ChaCha8Rng) -> Interval {
    let a = rng.random_range(0..20) as f64 / 10.0;
    let w = rng.random_range(0..20) as f64 / 10.0;
    Interval::closed(a, a + w)
}

fn random_formula(rng: &mut ChaCha8Rng, depth: u32) -> Formula {
    if depth == 0 || rng.random_bool(0.3) {
        let cmp = [Cmp::Gt, Cmp::Lt, Cmp::Ge, Cmp::Le][rng.random_range(0..4)];
        let ch = if rng.random_bool(0.5) { "x" } else { "y" };
        return Formula::Atom(Atom {
            expr: LinearExpr::channel(ch),
            cmp,
            rhs: Operand::Const(rng.random_range(-200..200) as f64 / 100.0),
        });
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_formula(rng, depth - 1));
    match rng.random_range(0..6) {
        0 => Formula::Not(sub(rng)),
        1 => Formula::And(sub(rng), sub(rng)),
        2 => Formula::Or(sub(rng), sub(rng)),
        3 => Formula::Eventually(random_interval(rng), sub(rng)),
        4 => Formula::Always(random_interval(rng), sub(rng)),
        _ => Formula::Until(random_interval(rng), sub(rng), sub(rng)),
    }
}

#[test]
fn criterion_11_logic_laws() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sat = |x: &TimedTrace, f: &Formula| satisfies(x, f, 0.0).unwrap();
    let (mut duality, mut de_morgan, mut transport) = (0, 0, 0);
    let tpl: PstlTemplate =
        "name: band\nparams:\n  c value - -2 2 0.01\n  w time + 0 3 0.01\nformula:\n  F[0, w](x > c) | F[0, w](y < -c)"
            .parse()
            .unwrap();
    let ps = tpl.space();
    for _ in 0..1000 {
        let x = random_trace(&mut rng);
        let f = random_formula(&mut rng, 3);
        let g = random_formula(&mut rng, 3);
        let i = random_interval(&mut rng);
        let always = Formula::Always(i.clone(), Box::new(f.clone()));
        let dual = Formula::not(Formula::Eventually(i, Box::new(Formula::not(f.clone()))));
        duality += (sat(&x, &always) != sat(&x, &dual)) as usize;
        let lhs = Formula::not(Formula::and(f.clone(), g.clone()));
        let rhs = Formula::or(Formula::not(f), Formula::not(g));
        de_morgan += (sat(&x, &lhs) != sat(&x, &rhs)) as usize;
        let p: Vec<f64> = ps.decls().iter().map(|d| rng.random_range(d.lo..=d.hi)).collect();
        let q: Vec<f64> = ps.decls().iter().map(|d| rng.random_range(d.lo..=d.hi)).collect();
        let (lo, hi): (Vec<f64>, Vec<f64>) = (0..ps.len())
            .map(|k| (ps.stronger_of(k, p[k], q[k]), ps.weaker_of(k, p[k], q[k])))
            .unzip();
        let strong = tpl.instantiate(&ps.valuation(&lo)).unwrap();
        let weak = tpl.instantiate(&ps.valuation(&hi)).unwrap();
        transport += (sat(&x, &strong) && !sat(&x, &weak)) as usize;
    }
    verdict(
        11,
        "logic laws",
        duality == 0 && de_morgan == 0 && transport == 0,
        &format!(
            "1000 cases: {duality} duality, {de_morgan} De Morgan, {transport} transport violations"
        ),
        start.elapsed(),
        Duration::from_secs(30),
    );
}

#[test]
fn pipeline_outputs_are_consistent_and_deterministic() {
    let cfg = three_group_overshoot([8, 8, 8], [1, 2, 3]);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (run, files) = stlcluster_cli::pipeline::run_pipeline(&cfg, Path::new("."), a.path()).unwrap();
    stlcluster_cli::pipeline::run_pipeline(&cfg, Path::new("."), b.path()).unwrap();
    for f in &files {
        let name = f.file_name().unwrap();
        assert_eq!(std::fs::read(f).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
    let json: BTreeSet<String> = run.clusters_file().clusters.iter().map(|c| c.label.clone()).collect();
    let csv = Labeling::read_csv(std::fs::File::open(a.path().join("labeling.csv")).unwrap()).unwrap();
    let sentinels: BTreeSet<String> = run.clusters_file().sentinels.keys().cloned().collect();
    assert_eq!(csv.label_set(), json.union(&sentinels).cloned().collect());
    let reloaded = learn_stage(
        &run.template,
        &run.table,
        &run.clustered.normalized,
        &csv,
        &cfg.learning,
    )
    .unwrap();
    assert_eq!(reloaded.len(), run.learned.len());
    let again = cluster_stage(&project_stage(&run.traces, &run.template).unwrap(), &cfg.clustering).unwrap();
    assert_eq!(again.labeling, run.clustered.labeling);
}
