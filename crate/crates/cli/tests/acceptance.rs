//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeSet;
use std::time::Instant;

use buildings::at_infinity::{boundary_complex, check_parallelism, raw_representatives, sundial, ParallelClass};
use buildings::atlas::{
    ec_closure, generate_star, generate_thin, save_path, validate_atlas, BPoint, BuildingInstance, GeneratorParams,
};
use buildings::axiom_suite::{fc_cover, replay, window_grid, Axiom, SampleWindow, Suite};
use buildings::coxeter::{FaceMask, Matrix, RootSystem, RootType, WeylGroup};
use buildings::lambda::{LambdaSpec, Scalar, Q};
use buildings::local_structure::{residue, residues_isomorphic};
use buildings::model_space::{AffineMap, MetricKind, Point, RegionShape, TMode};
use buildings::report::Witness;

type Outcome = Result<String, String>;

fn params(t: RootType, spec: LambdaSpec) -> GeneratorParams {
    GeneratorParams { root_type: t, spec, t_mode: TMode::Full }
}

fn star(t: RootType, spec: LambdaSpec, k: usize) -> BuildingInstance {
    generate_star(params(t, spec), 0, k, false).expect("star instance")
}

fn thin_instances() -> Vec<BuildingInstance> {
    let mut out = Vec::new();
    for t in [RootType::A1, RootType::A2, RootType::B2] {
        for spec in [LambdaSpec::Integers, LambdaSpec::Rationals] {
            out.push(generate_thin(params(t, spec)));
        }
    }
    out
}

fn star_instances() -> Vec<BuildingInstance> {
    vec![
        star(RootType::A1, LambdaSpec::Integers, 3),
        star(RootType::A1, LambdaSpec::Integers, 4),
        star(RootType::A1, LambdaSpec::LexPair, 3),
        star(RootType::A2, LambdaSpec::Rationals, 3),
    ]
}

fn all_instances() -> Vec<BuildingInstance> {
    let mut v = thin_instances();
    v.extend(star_instances());
    v
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cli(args: &[&str]) -> (u8, String) {
    let mut out = Vec::new();
    let code = buildings_cli::run(std::iter::once("buildings").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).expect("utf-8 output"))
}

fn criterion_1() -> Outcome {
    let window = SampleWindow::default();
    let mut runs = 0;
    for b in all_instances() {
        let suite = Suite::new(&b, window).map_err(|e| e.to_string())?;
        for metric in MetricKind::BOTH {
            let m = suite.matrix(metric);
            runs += 1;
            if !m.all_pass() {
                let failing: Vec<String> = m
                    .axioms
                    .iter()
                    .filter(|r| !r.verdict.is_ok())
                    .map(|r| format!("{} ({:?})", r.axiom, r.witness))
                    .collect();
                return Err(format!("{} under {metric}: {}", b.name(), failing.join(", ")));
            }
        }
    }
    Ok(format!("{runs} instance/metric runs, all six bundles pass (R=8, q=4, N=1000)"))
}

fn criterion_2() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let full = star(RootType::A1, LambdaSpec::Integers, 3);
    let seed = full.remove_apartment(2).map_err(|e| e.to_string())?;
    let suite = Suite::new(&seed, SampleWindow::default()).map_err(|e| e.to_string())?;
    let a3 = suite.check(Axiom::A3, MetricKind::D1);
    ensure(!a3.verdict.is_ok(), || "A3 passes on the reduced atlas".into())?;
    let w = a3.witness.clone().ok_or("A3 failure without witness")?;
    ensure(replay(&seed, &w), || format!("witness {w:?} does not replay"))?;
    ensure(!replay(&full, &w), || "witness also replays on the full instance".into())?;

    let shifted = AffineMap::new(Matrix::identity(1), Point::from_ints(LambdaSpec::Integers, &[1]));
    let corrupted = full.with_map(0, 1, shifted).map_err(|e| e.to_string())?;
    let v = validate_atlas(&corrupted);
    ensure(!v.verdict.is_ok(), || "validation accepts a shifted transition map".into())?;
    ensure(v.witness.as_ref().is_some_and(|w| replay(&corrupted, w)), || "validation witness does not replay".into())?;

    let p_seed = dir.path().join("reduced.bldg");
    let p_bad = dir.path().join("corrupted.bldg");
    save_path(&seed, &p_seed).map_err(|e| e.to_string())?;
    save_path(&corrupted, &p_bad).map_err(|e| e.to_string())?;
    let (c1, _) = cli(&["check", "--instance", p_seed.to_str().unwrap(), "--axioms", "A3"]);
    let (c2, _) = cli(&["validate", "--instance", p_bad.to_str().unwrap()]);
    ensure(c1 == 1 && c2 == 1, || format!("exit codes {c1} and {c2}, expected 1 and 1"))?;
    let kind = match &w {
        Witness::NoCommonApartment { objects } => format!("{} objects", objects.len()),
        other => format!("{other:?}"),
    };
    Ok(format!("A3 witness ({kind}) replays; corrupted map rejected; CLI exit codes 1/1"))
}

fn criterion_3() -> Outcome {
    let mut cases = 0;
    let mut reps = 0;
    for b in all_instances() {
        let (c, violation) = check_parallelism(&b);
        cases += c;
        reps += raw_representatives(&b).len();
        if let Some(t) = violation {
            return Err(format!("{}: transitivity fails on {t:?}", b.name()));
        }
    }
    Ok(format!("{reps} representatives, {cases} relation cases, zero violations"))
}

/// Classes at infinity by brute force: the far point of each origin-based
/// chamber cone, identified across charts.
fn far_point_oracle(b: &BuildingInstance) -> (usize, usize) {
    let model = b.model();
    let group = model.group();
    let mut ends = Vec::new();
    let mut per_chart: Vec<BTreeSet<usize>> = Vec::new();
    for a in 0..b.apartment_count() {
        let mut set = BTreeSet::new();
        for w in group.ids() {
            let rays = model.rays(w, FaceMask::CHAMBER);
            let dir: Vec<Q> = (0..model.rank()).map(|i| rays.iter().map(|r| r[i]).sum::<Q>() * Q::from_integer(1000)).collect();
            let p = b.canonical_point(&BPoint::new(a, model.point(&dir)));
            let idx = ends.iter().position(|e| *e == p).unwrap_or_else(|| {
                ends.push(p.clone());
                ends.len() - 1
            });
            set.insert(idx);
        }
        per_chart.push(set);
    }
    per_chart.sort();
    per_chart.dedup();
    (ends.len(), per_chart.len())
}

fn criterion_4() -> Outcome {
    let mut checked = 0;
    let mut instances = all_instances();
    for spec in [LambdaSpec::Integers, LambdaSpec::Rationals, LambdaSpec::LexPair] {
        for k in 2..=6 {
            instances.push(star(RootType::A1, spec, k));
        }
    }
    for b in &instances {
        let bc = boundary_complex(b);
        let (chambers, apartments) = far_point_oracle(b);
        ensure(bc.chambers.len() == chambers && bc.distinct_apartments() == apartments, || {
            format!(
                "{}: {} chambers / {} apartments, oracle {chambers} / {apartments}",
                b.name(),
                bc.chambers.len(),
                bc.distinct_apartments()
            )
        })?;
        ensure(bc.is_building(), || format!("{}: {:?} {:?}", b.name(), bc.verdict, bc.bijection))?;
        if b.model().root_type() == RootType::A1 && b.apartment_count() > 1 {
            let k = bc.chambers.len();
            ensure(apartments == k * (k - 1) / 2, || format!("{}: {apartments} apartments for {k} ends", b.name()))?;
        }
        if b.apartment_count() == 1 {
            ensure(chambers == b.model().group().order() && apartments == 1, || format!("{}: thin counts", b.name()))?;
        }
        checked += 1;
    }
    Ok(format!("{checked} instances match the far-point oracle; building and bijection checks pass"))
}

fn residue_points(b: &BuildingInstance) -> Vec<BPoint> {
    let model = b.model();
    let spec = model.spec();
    let r = if model.rank() == 1 { 10 } else { 2 };
    let w = SampleWindow { radius: r, den: 1, samples: 0, seed: 0 };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for a in 0..b.apartment_count() {
        let mut pts = window_grid(spec, model.rank(), &w);
        if spec == LambdaSpec::LexPair {
            pts.push(Point::new([Scalar::pair(spec, Q::from_integer(0), Q::from_integer(1))]));
        }
        for p in pts {
            let x = b.canonical_point(&BPoint::new(a, p));
            if seen.insert(x.clone()) {
                out.push(x);
            }
        }
    }
    out
}

fn criterion_5() -> Outcome {
    let mut total = 0;
    for b in all_instances() {
        let pts = residue_points(&b);
        ensure(pts.len() >= 20, || format!("{}: only {} points", b.name(), pts.len()))?;
        let origin = BPoint::new(0, b.model().origin());
        ensure(pts.contains(&b.canonical_point(&origin)), || "branch point missing".into())?;
        for x in &pts {
            let r = residue(&b, x).map_err(|e| format!("{}: {e}", b.name()))?;
            ensure(r.is_building(), || format!("{} at {x}: {:?}", b.name(), r.verdict))?;
        }
        total += pts.len();
    }
    let mut compared = 0;
    for (t, spec, k) in [
        (RootType::A1, LambdaSpec::Integers, 3),
        (RootType::A1, LambdaSpec::Integers, 4),
        (RootType::A1, LambdaSpec::LexPair, 3),
        (RootType::A2, LambdaSpec::Rationals, 3),
    ] {
        let seed = generate_star(params(t, spec), 0, k, true).map_err(|e| e.to_string())?;
        let closed = ec_closure(&seed).map_err(|e| e.to_string())?;
        for x in residue_points(&seed) {
            let (small, large) = (residue(&seed, &x), residue(&closed, &x));
            let (Ok(small), Ok(large)) = (small, large) else { return Err(format!("residue failed at {x}")) };
            ensure(residues_isomorphic(&small, &large), || format!("{}: residues differ at {x}", seed.name()))?;
            compared += 1;
        }
    }
    Ok(format!("{total} residues are spherical buildings; {compared} seed/closure residue pairs isomorphic"))
}

fn criterion_6() -> Outcome {
    let window = SampleWindow::default();
    let mut details = Vec::new();
    for b in star_instances() {
        let suite = Suite::new(&b, window).map_err(|e| e.to_string())?;
        for metric in MetricKind::BOTH {
            let r = suite.check(Axiom::A5, metric);
            ensure(r.verdict.is_pass(), || format!("{} {metric}: {r} {:?}", b.name(), r.witness))?;
        }
        let mi = suite.check_metric_independence();
        ensure(mi.verdict.is_pass(), || format!("{}: {mi} {:?}", b.name(), mi.witness))?;
        ensure(suite.cross_triples() == window.samples, || {
            format!("{}: only {} cross-apartment triples", b.name(), suite.cross_triples())
        })?;
        let (centers, germs) = suite.germ_statistics();
        details.push(format!("{} {centers}/{germs}", b.name()));
    }
    Ok(format!(
        "retractions well defined and non-expansive under d1 and dinf; 1000 cross-apartment triangles per instance (centers/germs: {})",
        details.join(", ")
    ))
}

fn criterion_7() -> Outcome {
    let mut triples = 0;
    for b in all_instances() {
        let roots = b.model().roots();
        let m = b.apartment_count();
        let half = |i, j| b.overlap(i, j).is_some_and(|r| matches!(r.shape(roots), RegionShape::HalfApartment(_)));
        for i in 0..m {
            for j in i + 1..m {
                for k in j + 1..m {
                    if !(half(i, j) && half(i, k) && half(j, k)) {
                        continue;
                    }
                    triples += 1;
                    let shape = buildings::at_infinity::triple_intersection(&b, i, j, k).shape(roots);
                    ensure(matches!(shape, RegionShape::HalfApartment(_) | RegionShape::Hyperplane { .. }), || {
                        format!("{} triple ({i},{j},{k}) is {}", b.name(), shape.label())
                    })?;
                }
            }
        }
    }
    let s3 = star(RootType::A1, LambdaSpec::Integers, 3);
    let e0 = ParallelClass::new(&s3, 0, buildings::coxeter::WeylId::IDENTITY, FaceMask::CHAMBER);
    let sd = sundial(&s3, 2, &e0).map_err(|e| e.to_string())?;
    ensure(sd.apartments == [0, 1] && sd.triple == "hyperplane beta0(x) = 0", || format!("star3 sundial {sd:?}"))?;

    let a2 = star(RootType::A2, LambdaSpec::Rationals, 3);
    let bc = boundary_complex(&a2);
    let mut found = Vec::new();
    for c in &bc.chambers {
        if let Ok(s) = sundial(&a2, 2, c) {
            found.push(s);
        }
    }
    ensure(!found.is_empty(), || "no sundial configuration in the A2 star".into())?;
    for s in &found {
        let (i, j) = (s.apartments[0], s.apartments[1]);
        let overlap = a2.overlap(i, j).map(|r| r.shape(a2.model().roots()));
        ensure(matches!(overlap, Some(RegionShape::HalfApartment(_))), || format!("A2 sundial apartments {i},{j}"))?;
        ensure(s.triple == "hyperplane beta0(x) = 0", || format!("A2 sundial triple {}", s.triple))?;
    }
    Ok(format!(
        "{triples} half-apartment triples classify as half-apartment or wall; sundials: star3 (0,1) on {{0}}, A2 star {} configurations on the wall",
        found.len()
    ))
}

/// Closure of the simple reflection matrices under multiplication, with
/// word lengths from breadth-first search.
fn closure_oracle(t: RootType) -> (usize, usize) {
    let roots = RootSystem::build(t);
    let gens: Vec<Matrix> = (0..roots.rank()).map(|i| roots.simple_reflection(i)).collect();
    let mut seen = vec![Matrix::identity(roots.rank())];
    let mut frontier = seen.clone();
    let mut depth = 0;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for m in &frontier {
            for g in &gens {
                let p = m.mul(g);
                if !seen.contains(&p) {
                    seen.push(p.clone());
                    next.push(p);
                }
            }
        }
        if !next.is_empty() {
            depth += 1;
        }
        frontier = next;
    }
    (seen.len(), depth)
}

fn criterion_8() -> Outcome {
    let mut rows = Vec::new();
    for (t, order, diameter) in [(RootType::A1, 2, 1), (RootType::A2, 6, 3), (RootType::B2, 8, 4)] {
        let g = WeylGroup::enumerate(&RootSystem::build(t));
        let oracle = closure_oracle(t);
        ensure(g.order() == order && g.diameter() == diameter && oracle == (order, diameter), || {
            format!("{t}: |W|={} diam={} oracle {oracle:?}", g.order(), g.diameter())
        })?;
        rows.push(format!("{t} {order}/{diameter}"));
    }
    Ok(format!("orders/diameters {}", rows.join(", ")))
}

fn criterion_9() -> Outcome {
    let window = SampleWindow::default();
    let mut details = Vec::new();
    for b in star_instances() {
        let suite = Suite::new(&b, window).map_err(|e| e.to_string())?;
        let grid = window_grid(b.model().spec(), b.model().rank(), &window);
        ensure(suite.fc_configs().len() == 200, || "expected 200 configurations".into())?;
        let (mut points, mut max_family, mut cover_total) = (0, 0, 0);
        for metric in MetricKind::BOTH {
            for cfg in suite.fc_configs() {
                let cert = fc_cover(&b, cfg, &grid, metric).map_err(|w| format!("{}: {w:?}", b.name()))?;
                ensure(cert.family.len() <= cert.boundary_chambers, || "family too large".into())?;
                ensure(cert.cover.len() == cert.family.len(), || "cover incomplete".into())?;
                points += cert.segment_points;
                max_family = max_family.max(cert.family.len());
                cover_total += cert.cover.len();
            }
        }
        details.push(format!("{} ({points} segment points, family <= {max_family}, {cover_total} cover apartments)", b.name()));
    }
    Ok(details.join("; "))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for b in [star(RootType::A1, LambdaSpec::Integers, 3), star(RootType::A2, LambdaSpec::Rationals, 3)] {
        let path = dir.path().join(format!("{}.bldg", b.name()));
        save_path(&b, &path).map_err(|e| e.to_string())?;
        let p = path.to_str().unwrap();
        for cmd in [
            vec!["matrix", "--instance", p, "--format", "json", "--seed", "11"],
            vec!["check", "--instance", p, "--format", "json", "--seed", "11", "--metric", "both"],
            vec!["infinity", "--instance", p, "--format", "json"],
        ] {
            let (c1, o1) = cli(&cmd);
            let (c2, o2) = cli(&cmd);
            ensure(c1 == 0 && c2 == 0, || format!("{cmd:?} exit codes {c1}/{c2}"))?;
            ensure(o1 == o2, || format!("{cmd:?} output differs between runs"))?;
            compared += 1;
        }
    }
    Ok(format!("{compared} command pairs produce byte-identical JSON"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("axiom bundle consistency", criterion_1),
        ("mutation detection", criterion_2),
        ("parallelism equivalence", criterion_3),
        ("building at infinity", criterion_4),
        ("residue buildings", criterion_5),
        ("retraction contract", criterion_6),
        ("triple intersections and sundial", criterion_7),
        ("Coxeter facts", criterion_8),
        ("covering", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} [{secs:.1}s]: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} [{secs:.1}s]: {why}", k + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
