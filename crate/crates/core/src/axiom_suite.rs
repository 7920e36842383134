//! Windowed verification of the axiom families on a building instance,
//! witness searches, and the consistency matrix of the six equivalent
//! axiom bundles.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::at_infinity::{boundary_complex, describe_shape, parallel_direct, triple_intersection, ParallelClass};
use crate::atlas::{exchange_missing, missing_exchange, validate_atlas, BPoint, BuildingInstance};
use crate::coxeter::{FaceMask, WeylId};
use crate::lambda::{LambdaSpec, Scalar, Q};
use crate::local_structure::{residue, Germ};
use crate::model_space::{ConvexRegion, HalfSpace, MetricKind, Point, RegionShape, Sense, WeylSimplex};
use crate::report::{CheckReport, Object, Verdict, Witness};
use crate::retraction::{check_nonexpansive_with, check_well_defined, distance_located, Located, Retraction};

/// Number of (x, y, z, A) configurations sampled for (FC'').
pub const FC_CONFIGS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SuiteError {
    #[error("unknown axiom '{0}'")]
    UnknownAxiom(String),
    #[error("the suite handles at most 64 apartments, the instance has {0}")]
    TooManyApartments(usize),
    #[error("bad window: {0}")]
    Window(String),
    #[error("malformed arguments: {0}")]
    Arguments(String),
}

/// The finite verification surface: a systematic grid of coordinates with
/// absolute value at most `radius` and denominators at most `den`, plus
/// `samples` random points drawn with `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleWindow {
    pub radius: i64,
    pub den: i64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SampleWindow {
    fn default() -> Self {
        SampleWindow { radius: 8, den: 4, samples: 1000, seed: 0 }
    }
}

impl SampleWindow {
    pub fn validate(&self) -> Result<(), SuiteError> {
        if self.radius < 1 || self.radius > 1000 {
            return Err(SuiteError::Window("radius must lie in 1..=1000".into()));
        }
        if self.den < 1 || self.den > 64 {
            return Err(SuiteError::Window("denominator bound must lie in 1..=64".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Axiom {
    A1,
    A2,
    A3,
    #[serde(rename = "A3'")]
    A3p,
    #[serde(rename = "A3''")]
    A3pp,
    A4,
    A5,
    A6,
    EC,
    GG,
    CO,
    #[serde(rename = "FC''")]
    FCpp,
}

impl Axiom {
    pub const ALL: [Axiom; 12] = [
        Axiom::A1,
        Axiom::A2,
        Axiom::A3,
        Axiom::A3p,
        Axiom::A3pp,
        Axiom::A4,
        Axiom::A5,
        Axiom::A6,
        Axiom::EC,
        Axiom::GG,
        Axiom::CO,
        Axiom::FCpp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::A1 => "A1",
            Axiom::A2 => "A2",
            Axiom::A3 => "A3",
            Axiom::A3p => "A3'",
            Axiom::A3pp => "A3''",
            Axiom::A4 => "A4",
            Axiom::A5 => "A5",
            Axiom::A6 => "A6",
            Axiom::EC => "EC",
            Axiom::GG => "GG",
            Axiom::CO => "CO",
            Axiom::FCpp => "FC''",
        }
    }

    /// Parses `all` or a comma-separated list of axiom names.
    pub fn parse_list(text: &str) -> Result<Vec<Axiom>, SuiteError> {
        if text.trim().eq_ignore_ascii_case("all") {
            return Ok(Axiom::ALL.to_vec());
        }
        let mut out: Vec<Axiom> = text.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axiom {
    type Err = SuiteError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_uppercase().replace('"', "''");
        Axiom::ALL
            .into_iter()
            .find(|a| a.name() == t)
            .ok_or_else(|| SuiteError::UnknownAxiom(s.to_string()))
    }
}

/// The six bundles whose equivalence is asserted by the main theorem.
pub const BUNDLES: [&[Axiom]; 6] = [
    &[Axiom::A4, Axiom::A5, Axiom::A6],
    &[Axiom::A4, Axiom::A5, Axiom::EC],
    &[Axiom::A4, Axiom::A6],
    &[Axiom::GG, Axiom::CO],
    &[Axiom::A3p, Axiom::CO],
    &[Axiom::A3pp, Axiom::A4, Axiom::FCpp, Axiom::EC],
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BundleReport {
    pub bundle: usize,
    pub axioms: Vec<Axiom>,
    pub verdict: Verdict,
    /// First failing axiom of the bundle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing: Option<Axiom>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatrixReport {
    pub instance: String,
    pub metric: MetricKind,
    pub window: SampleWindow,
    pub axioms: Vec<CheckReport>,
    pub bundles: Vec<BundleReport>,
}

impl MatrixReport {
    pub fn all_pass(&self) -> bool {
        self.bundles.iter().all(|b| b.verdict.is_pass())
    }

    /// All bundles agree (all pass or all fail).
    pub fn consistent(&self) -> bool {
        self.bundles.windows(2).all(|w| w[0].verdict == w[1].verdict)
    }
}

#[derive(Debug, Clone)]
struct GermRec {
    germ: Germ,
    located: Vec<Option<WeylSimplex>>,
    mask: u64,
    center: usize,
}

#[derive(Debug, Clone)]
struct ChamberRec {
    chart: usize,
    simplex: WeylSimplex,
    /// Apartments containing the whole chamber.
    mask: u64,
    /// Apartments containing a sub-chamber.
    sub_mask: u64,
    germ: usize,
    center: usize,
}

/// One sampled configuration for (FC'').
#[derive(Debug, Clone)]
pub struct FcConfig {
    pub apartment: usize,
    pub x: Point,
    pub y: Point,
    pub z: BPoint,
    pub mu: Germ,
}

/// The `z`-based covering family of an apartment and the apartment cover
/// built from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverCertificate {
    /// `z`-based chambers, one per chamber at infinity of A, as
    /// (chart, base, Weyl element).
    pub family: Vec<(usize, Point, usize)>,
    /// Number of chambers of ∂A.
    pub boundary_chambers: usize,
    /// Windowed points of the segment that were checked.
    pub segment_points: usize,
    /// For each family member, the apartment containing the center germ
    /// and the member's germ.
    pub germ_apartments: Vec<usize>,
    /// For each family member, the unique apartment containing it and the
    /// opposite chamber; every one of them contains the center germ.
    pub cover: Vec<usize>,
}

/// Query kinds for [`find_witness`].
#[derive(Debug, Clone)]
pub enum WitnessQuery {
    /// An apartment containing a chamber germ and a chamber at infinity.
    GermAndChamberAtInfinity { germ: Germ, class: ParallelClass },
    /// An apartment containing the Weyl chamber `(chart, chamber)` and the
    /// germ.
    ChamberAndGerm { chart: usize, chamber: WeylSimplex, germ: Germ },
    /// An apartment containing the germ and a sub-chamber of the Weyl
    /// chamber `(chart, chamber)`.
    GermAndSubchamber { germ: Germ, chart: usize, chamber: WeylSimplex },
    /// Classification of the intersection of three apartments.
    TripleIntersection { apartments: [usize; 3] },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "found", rename_all = "snake_case")]
pub enum Found {
    Apartment { apartment: usize },
    Shape { shape: String, description: String },
}

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&i| mask & (1 << i) != 0)
}

fn lowest(mask: u64) -> Option<usize> {
    (mask != 0).then(|| mask.trailing_zeros() as usize)
}

fn first_located(l: &Located) -> BPoint {
    l.locs
        .iter()
        .enumerate()
        .find_map(|(a, p)| p.as_ref().map(|p| BPoint::new(a, p.clone())))
        .unwrap_or_else(|| l.point.clone())
}

fn scalar(spec: LambdaSpec, major: Q, minor: Q) -> Scalar {
    match spec {
        LambdaSpec::LexPair => Scalar::pair(spec, major, minor),
        _ => Scalar::from_q(spec, major),
    }
}

/// Coordinate values of the grid along one axis.
fn axis_values(spec: LambdaSpec, radius: i64, den: i64) -> Vec<Scalar> {
    let den = if spec == LambdaSpec::Integers { 1 } else { den };
    let mut qs: Vec<Q> = (1..=den).flat_map(|d| (-radius * d..=radius * d).map(move |p| Q::new(p, d))).collect();
    qs.sort();
    qs.dedup();
    let mut out: Vec<Scalar> = qs.into_iter().map(|q| Scalar::from_q(spec, q)).collect();
    if spec == LambdaSpec::LexPair {
        for a in -1..=1 {
            for e in [-1, 1] {
                out.push(Scalar::pair(spec, Q::from_integer(a), Q::from_integer(e)));
            }
        }
        out.sort();
    }
    out
}

/// Grid of chart coordinates: the full axis grid in rank one; in rank two
/// the integer box together with the fine grid on the unit box.
pub fn window_grid(spec: LambdaSpec, rank: usize, w: &SampleWindow) -> Vec<Point> {
    let values = axis_values(spec, w.radius, w.den);
    if rank == 1 {
        return values.into_iter().map(|v| Point::new([v])).collect();
    }
    let ints: Vec<Scalar> = (-w.radius..=w.radius).map(|k| Scalar::from_int(spec, k)).collect();
    let one = Scalar::from_int(spec, 1);
    let fine: Vec<Scalar> = values.into_iter().filter(|v| v.abs() <= one).collect();
    let mut out: Vec<Point> = Vec::new();
    for set in [&ints, &fine] {
        for a in set {
            for b in set {
                out.push(Point::new([*a, *b]));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Base points used as germ centers.
fn center_grid(spec: LambdaSpec, rank: usize, w: &SampleWindow) -> Vec<Point> {
    if rank == 1 {
        return window_grid(spec, rank, w);
    }
    let mut qs: Vec<Q> = [-2, -1, 0, 1, 2].into_iter().map(Q::from_integer).collect();
    if spec != LambdaSpec::Integers && w.den >= 2 {
        qs.extend([Q::new(-1, 2), Q::new(1, 2)]);
    }
    qs.sort();
    let mut out = Vec::new();
    for a in &qs {
        for b in &qs {
            out.push(Point::new([Scalar::from_q(spec, *a), Scalar::from_q(spec, *b)]));
        }
    }
    out
}

fn random_scalar(rng: &mut ChaCha8Rng, spec: LambdaSpec, w: &SampleWindow) -> Scalar {
    let d = if spec == LambdaSpec::Integers { 1 } else { rng.random_range(1..=w.den) };
    let p = rng.random_range(-w.radius * d..=w.radius * d);
    let minor = if spec == LambdaSpec::LexPair { rng.random_range(-2..=2) } else { 0 };
    scalar(spec, Q::new(p, d), Q::from_integer(minor))
}

fn random_point(rng: &mut ChaCha8Rng, spec: LambdaSpec, rank: usize, w: &SampleWindow) -> Point {
    Point::new((0..rank).map(|_| random_scalar(rng, spec, w)).collect::<Vec<_>>())
}

/// The Weyl chamber (or simplex) as a region of its chart.
pub fn simplex_region(b: &BuildingInstance, s: &WeylSimplex) -> ConvexRegion {
    let model = b.model();
    let group = model.group();
    let mut halves = Vec::new();
    for i in 0..model.rank() {
        let root = group.act_on_root(s.chamber, i);
        let k = model.root_value(root, &s.base);
        halves.push(HalfSpace::new(root, Sense::Ge, k));
        if s.face.contains(i) {
            halves.push(HalfSpace::new(root, Sense::Le, k));
        }
    }
    model.region(&halves)
}

/// Apartments containing the whole Weyl simplex `s` of chart `chart`.
pub fn chamber_mask(b: &BuildingInstance, chart: usize, s: &WeylSimplex) -> u64 {
    let rays = b.model().simplex_rays(s);
    (0..b.apartment_count())
        .filter(|&d| d == chart || b.entry(chart, d).is_some_and(|(r, _)| r.contains_based_cone(&s.base, &rays)))
        .fold(0, |m, d| m | (1 << d))
}

/// Apartments containing a sub-simplex (a translate inside `s`) of `s`.
pub fn subchamber_mask(b: &BuildingInstance, chart: usize, s: &WeylSimplex) -> u64 {
    let rays = b.model().simplex_rays(s);
    let region = simplex_region(b, s);
    (0..b.apartment_count())
        .filter(|&d| {
            d == chart
                || b.entry(chart, d).is_some_and(|(r, _)| r.recedes_along(&rays) && !r.intersect(&region).is_empty())
        })
        .fold(0, |m, d| m | (1 << d))
}

fn germ_mask(b: &BuildingInstance, g: &Germ) -> u64 {
    mask_of(&b.locate_germ(g.chart, &g.simplex))
}

fn mask_of<T>(v: &[Option<T>]) -> u64 {
    v.iter().enumerate().filter(|(_, x)| x.is_some()).fold(0, |m, (a, _)| m | (1 << a))
}

/// Apartments containing the object.
pub fn object_mask(b: &BuildingInstance, o: &Object) -> u64 {
    match o {
        Object::Point { at } => mask_of(&b.locate(at)),
        Object::Germ { germ } => germ_mask(b, germ),
        Object::Chamber { class } => mask_of(&class.locate(b)),
        Object::WeylChamber { chart, base, chamber } => {
            chamber_mask(b, *chart, &WeylSimplex::chamber(base.clone(), WeylId(*chamber)))
        }
    }
}

/// Number of pairwise different apartments among the set bits.
fn distinct_apartments(b: &BuildingInstance, mask: u64) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for a in bits(mask) {
        if !out.iter().any(|&c| b.apartments_equal(a, c)) {
            out.push(a);
        }
    }
    out
}

fn weyl_object(chart: usize, s: &WeylSimplex) -> Object {
    Object::WeylChamber { chart, base: s.base.clone(), chamber: s.chamber.0 }
}

/// Precomputed samples of an instance; every check reads from it.
pub struct Suite<'a> {
    b: &'a BuildingInstance,
    window: SampleWindow,
    /// Grid points of every chart, deduplicated, followed by the random
    /// samples.
    points: Vec<Located>,
    grid_points: usize,
    chart_grid: Vec<Point>,
    pairs: Vec<(usize, usize)>,
    triples: Vec<[usize; 3]>,
    cross_triples: usize,
    centers: Vec<Located>,
    germs: Vec<GermRec>,
    chambers: Vec<ChamberRec>,
    fc_configs: Vec<FcConfig>,
}

impl<'a> Suite<'a> {
    pub fn new(b: &'a BuildingInstance, window: SampleWindow) -> Result<Suite<'a>, SuiteError> {
        window.validate()?;
        let m = b.apartment_count();
        if m > 64 {
            return Err(SuiteError::TooManyApartments(m));
        }
        let model = b.model();
        let (spec, rank) = (model.spec(), model.rank());
        let mut rng = ChaCha8Rng::seed_from_u64(window.seed);

        let chart_grid = window_grid(spec, rank, &window);
        let raw: Vec<BPoint> =
            (0..m).flat_map(|a| chart_grid.iter().map(move |p| BPoint::new(a, p.clone()))).collect();
        let mut points = dedup_located(b, raw);
        let grid_points = points.len();
        let random: Vec<BPoint> = (0..window.samples)
            .map(|_| {
                let a = rng.random_range(0..m);
                BPoint::new(a, random_point(&mut rng, spec, rank, &window))
            })
            .collect();
        points.extend(random.into_par_iter().map(|p| Located::new(b, p)).collect::<Vec<_>>());

        let n = points.len();
        let pairs: Vec<(usize, usize)> =
            (0..window.samples).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();

        let masks: Vec<u64> = points.iter().map(Located::mask).collect();
        let mut cross = Vec::new();
        let mut other = Vec::new();
        let mut attempts = 0;
        while cross.len() < window.samples && attempts < 50 * window.samples.max(1) {
            attempts += 1;
            let t = [rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n)];
            let [x, y, z] = t.map(|i| masks[i]);
            if x & y == 0 || y & z == 0 || x & z == 0 {
                continue;
            }
            if x & y & z == 0 {
                cross.push(t);
            } else if other.len() < window.samples {
                other.push(t);
            }
        }
        let cross_triples = cross.len();
        let mut triples = cross;
        triples.extend(other.into_iter().take(window.samples - cross_triples));

        let raw_centers: Vec<BPoint> = (0..m)
            .flat_map(|a| center_grid(spec, rank, &window).into_iter().map(move |p| BPoint::new(a, p)))
            .collect();
        let centers = dedup_located(b, raw_centers);
        let (germs, chambers) = enumerate_chambers(b, &centers);

        let fc_count = window.samples.min(FC_CONFIGS);
        let mut fc_configs = Vec::with_capacity(fc_count);
        for _ in 0..fc_count {
            let apartment = rng.random_range(0..m);
            let x = random_point(&mut rng, spec, rank, &window);
            let y = random_point(&mut rng, spec, rank, &window);
            let z = &points[rng.random_range(0..n)];
            let zb = first_located(z);
            let w = WeylId(rng.random_range(0..model.group().order()));
            let mu = Germ::at(b, &zb, w, FaceMask::CHAMBER);
            fc_configs.push(FcConfig { apartment, x, y, z: zb, mu });
        }

        Ok(Suite {
            b,
            window,
            points,
            grid_points,
            chart_grid,
            pairs,
            triples,
            cross_triples,
            centers,
            germs,
            chambers,
            fc_configs,
        })
    }

    pub fn instance(&self) -> &BuildingInstance {
        self.b
    }

    pub fn window(&self) -> SampleWindow {
        self.window
    }

    pub fn fc_configs(&self) -> &[FcConfig] {
        &self.fc_configs
    }

    /// Number of germ centers and chamber germs in the sample.
    pub fn germ_statistics(&self) -> (usize, usize) {
        (self.centers.len(), self.germs.len())
    }

    pub fn check(&self, axiom: Axiom, metric: MetricKind) -> CheckReport {
        let mut report = match axiom {
            Axiom::A1 => CheckReport::not_applicable("A1", "structural: charts are affine images of the model space"),
            Axiom::A2 => self.check_a2(),
            Axiom::A3 => self.check_a3(),
            Axiom::A3p => self.check_a3p(),
            Axiom::A3pp => self.check_a3pp(),
            Axiom::A4 => self.check_a4(),
            Axiom::A5 => self.check_a5(metric),
            Axiom::A6 => self.check_a6(),
            Axiom::EC => self.check_ec(),
            Axiom::GG => self.check_gg(),
            Axiom::CO => self.check_co(),
            Axiom::FCpp => self.check_fc(metric),
        };
        report.axiom = axiom.name().to_string();
        report
    }

    pub fn check_all(&self, axioms: &[Axiom], metric: MetricKind) -> Vec<CheckReport> {
        axioms.par_iter().map(|&a| self.check(a, metric)).collect()
    }

    pub fn matrix(&self, metric: MetricKind) -> MatrixReport {
        let axioms = self.check_all(&Axiom::ALL, metric);
        let by_name: BTreeMap<Axiom, &CheckReport> = Axiom::ALL.into_iter().zip(&axioms).collect();
        let bundles = BUNDLES
            .iter()
            .enumerate()
            .map(|(k, members)| {
                let failing = members.iter().copied().find(|a| !by_name[a].verdict.is_pass());
                BundleReport {
                    bundle: k + 1,
                    axioms: members.to_vec(),
                    verdict: if failing.is_some() { Verdict::Fail } else { Verdict::Pass },
                    failing,
                }
            })
            .collect();
        MatrixReport { instance: self.b.name().to_string(), metric, window: self.window, axioms, bundles }
    }

    fn point_object(&self, i: usize) -> Object {
        Object::Point { at: first_located(&self.points[i]) }
    }

    fn check_a2(&self) -> CheckReport {
        let b = self.b;
        let v = validate_atlas(b);
        if !v.verdict.is_pass() {
            return v;
        }
        let surface = format!("atlas validation; overlap membership at {} points; midpoints of {} pairs", self.points.len(), self.pairs.len());
        let mut cases = v.cases;
        for p in &self.points {
            for (i, x) in p.locs.iter().enumerate() {
                let Some(x) = x else { continue };
                for (j, y) in p.locs.iter().enumerate() {
                    cases += 1;
                    let declared = b.entry(i, j).is_some_and(|(r, _)| r.contains(x));
                    if declared != y.is_some() {
                        let problem = format!("point {x} of chart {i}: declared overlap and located overlap with chart {j} differ");
                        return CheckReport::fail("A2", cases, surface, Witness::Gluing { i, j, problem });
                    }
                }
            }
        }
        for &(u, v) in &self.pairs {
            let (pu, pv) = (&self.points[u], &self.points[v]);
            for i in bits(pu.mask() & pv.mask()) {
                let (Some(a), Some(c)) = (&pu.locs[i], &pv.locs[i]) else { continue };
                let mid = a.midpoint(c);
                for j in bits(pu.mask() & pv.mask()) {
                    cases += 1;
                    if !b.entry(i, j).is_some_and(|(r, _)| r.contains(&mid)) {
                        let w = Witness::Convexity { i, j, a: a.clone(), b: c.clone() };
                        return CheckReport::fail("A2", cases, surface, w);
                    }
                }
            }
        }
        CheckReport::pass("A2", cases, surface)
    }

    fn check_a3(&self) -> CheckReport {
        let n = self.points.len();
        let masks: Vec<u64> = self.points.iter().map(Located::mask).collect();
        let surface = format!("all {} pairs of {n} points ({} grid, {} random)", n * (n + 1) / 2, self.grid_points, n - self.grid_points);
        let hit = (0..n).into_par_iter().find_map_first(|i| (i..n).find(|&j| masks[i] & masks[j] == 0).map(|j| (i, j)));
        match hit {
            None => CheckReport::pass("A3", (n * (n + 1) / 2) as u64, surface),
            Some((i, j)) => {
                let cases = (0..i).map(|r| n - r).sum::<usize>() + (j - i) + 1;
                let w = Witness::NoCommonApartment { objects: vec![self.point_object(i), self.point_object(j)] };
                CheckReport::fail("A3", cases as u64, surface, w)
            }
        }
    }

    fn check_a3pp(&self) -> CheckReport {
        let n = self.points.len();
        let g = self.germs.len();
        let surface = format!("{n} points against {g} chamber germs at {} centers", self.centers.len());
        let hit = (0..n).into_par_iter().find_map_first(|i| {
            let m = self.points[i].mask();
            (0..g).find(|&k| self.germs[k].mask & m == 0).map(|k| (i, k))
        });
        match hit {
            None => CheckReport::pass("A3''", (n * g) as u64, surface),
            Some((i, k)) => {
                let w = Witness::NoCommonApartment {
                    objects: vec![self.point_object(i), Object::Germ { germ: self.germs[k].germ.clone() }],
                };
                CheckReport::fail("A3''", (i * g + k + 1) as u64, surface, w)
            }
        }
    }

    fn check_a3p(&self) -> CheckReport {
        let g = self.germs.len();
        let surface = format!("all pairs of {g} chamber germs at {} centers", self.centers.len());
        let hit = (0..g)
            .into_par_iter()
            .find_map_first(|i| (i..g).find(|&j| self.germs[i].mask & self.germs[j].mask == 0).map(|j| (i, j)));
        match hit {
            None => CheckReport::pass("A3'", (g * (g + 1) / 2) as u64, surface),
            Some((i, j)) => {
                let w = Witness::NoCommonApartment {
                    objects: vec![
                        Object::Germ { germ: self.germs[i].germ.clone() },
                        Object::Germ { germ: self.germs[j].germ.clone() },
                    ],
                };
                CheckReport::fail("A3'", (i * g + j + 1) as u64, surface, w)
            }
        }
    }

    fn check_gg(&self) -> CheckReport {
        let surface = format!("residues and germ pairs at {} centers", self.centers.len());
        let mut by_center: Vec<Vec<usize>> = vec![Vec::new(); self.centers.len()];
        for (k, g) in self.germs.iter().enumerate() {
            by_center[g.center].push(k);
        }
        let outcome: Vec<(u64, Option<Witness>)> = by_center
            .par_iter()
            .enumerate()
            .map(|(c, ks)| {
                let mut cases = 1;
                let at = first_located(&self.centers[c]);
                match residue(self.b, &at) {
                    Err(e) => return (cases, Some(Witness::Residue { at, problem: e.to_string() })),
                    Ok(r) => {
                        if let Err(problem) = r.verdict {
                            return (cases, Some(Witness::Residue { at, problem }));
                        }
                    }
                }
                for (x, &i) in ks.iter().enumerate() {
                    for &j in &ks[x..] {
                        cases += 1;
                        if self.germs[i].mask & self.germs[j].mask == 0 {
                            let objects = vec![
                                Object::Germ { germ: self.germs[i].germ.clone() },
                                Object::Germ { germ: self.germs[j].germ.clone() },
                            ];
                            return (cases, Some(Witness::NoCommonApartment { objects }));
                        }
                    }
                }
                (cases, None)
            })
            .collect();
        fold_outcomes("GG", surface, outcome)
    }

    fn check_co(&self) -> CheckReport {
        let b = self.b;
        let group = b.model().group();
        let diameter = group.diameter();
        let surface = format!("opposite chamber pairs at {} centers ({} chambers)", self.centers.len(), self.chambers.len());
        let mut by_center: Vec<Vec<usize>> = vec![Vec::new(); self.centers.len()];
        for (k, c) in self.chambers.iter().enumerate() {
            by_center[c.center].push(k);
        }
        let outcome: Vec<(u64, Option<Witness>)> = by_center
            .par_iter()
            .map(|ks| {
                let mut cases = 0;
                for (x, &i) in ks.iter().enumerate() {
                    for &j in &ks[x + 1..] {
                        let (s, t) = (&self.chambers[i], &self.chambers[j]);
                        let (gs, gt) = (&self.germs[s.germ], &self.germs[t.germ]);
                        let objects = || vec![weyl_object(s.chart, &s.simplex), weyl_object(t.chart, &t.simplex)];
                        let Some(c) = lowest(gs.mask & gt.mask) else {
                            return (cases + 1, Some(Witness::NoCommonApartment { objects: objects() }));
                        };
                        let (ws, wt) = (gs.located[c].as_ref(), gt.located[c].as_ref());
                        let (Some(ws), Some(wt)) = (ws, wt) else { continue };
                        if group.gallery_distance(ws.chamber, wt.chamber) != diameter {
                            continue;
                        }
                        cases += 1;
                        let common = distinct_apartments(b, s.mask & t.mask);
                        match common.len() {
                            1 => {}
                            0 => return (cases, Some(Witness::NoCommonApartment { objects: objects() })),
                            _ => return (cases, Some(Witness::NotUnique { objects: objects(), apartments: common })),
                        }
                    }
                }
                (cases, None)
            })
            .collect();
        fold_outcomes("CO", surface, outcome)
    }

    fn check_a4(&self) -> CheckReport {
        let c = self.chambers.len();
        let surface = format!("all pairs of {c} Weyl chambers based at {} centers", self.centers.len());
        let hit = (0..c).into_par_iter().find_map_first(|i| {
            (i..c).find(|&j| self.chambers[i].sub_mask & self.chambers[j].sub_mask == 0).map(|j| (i, j))
        });
        match hit {
            None => CheckReport::pass("A4", (c * (c + 1) / 2) as u64, surface),
            Some((i, j)) => {
                let (s, t) = (&self.chambers[i], &self.chambers[j]);
                let w = Witness::Subchambers {
                    objects: vec![weyl_object(s.chart, &s.simplex), weyl_object(t.chart, &t.simplex)],
                };
                CheckReport::fail("A4", (i * c + j + 1) as u64, surface, w)
            }
        }
    }

    fn check_a5(&self, metric: MetricKind) -> CheckReport {
        let b = self.b;
        let jobs: Vec<(usize, usize)> =
            self.germs.iter().enumerate().flat_map(|(k, g)| bits(g.mask).map(move |a| (k, a))).collect();
        let dists: Vec<Option<Scalar>> = self
            .pairs
            .par_iter()
            .map(|&(i, j)| distance_located(b, &self.points[i], &self.points[j], metric))
            .collect();
        let surface = format!(
            "{} retractions (chamber germs at {} centers x apartments), well-definedness at {} points, {} pairs, metric {metric}",
            jobs.len(),
            self.centers.len(),
            self.points.len(),
            self.pairs.len()
        );
        let outcome: Vec<(u64, Option<Witness>)> = jobs
            .par_iter()
            .map(|&(k, a)| {
                let r = match Retraction::new(b, a, &self.germs[k].germ) {
                    Ok(r) => r,
                    Err(e) => {
                        let w = Witness::Residue { at: self.germs[k].germ.base(), problem: e.to_string() };
                        return (1, Some(w));
                    }
                };
                let wd = check_well_defined(&r, &self.points);
                if !wd.verdict.is_pass() {
                    return (wd.cases, wd.witness);
                }
                let ne = check_nonexpansive_with(b.model(), &r, metric, &self.points, &self.pairs, &dists);
                (wd.cases + ne.cases, ne.witness)
            })
            .collect();
        fold_outcomes("A5", surface, outcome)
    }

    fn check_a6(&self) -> CheckReport {
        let b = self.b;
        let roots = b.model().roots();
        let m = b.apartment_count();
        let half = |i: usize, j: usize| {
            b.overlap(i, j).is_some_and(|r| matches!(r.shape(roots), RegionShape::HalfApartment(_)))
        };
        let mut cases = 0;
        for i in 0..m {
            for j in i + 1..m {
                for k in j + 1..m {
                    if !(half(i, j) && half(i, k) && half(j, k)) {
                        continue;
                    }
                    cases += 1;
                    let shape = triple_intersection(b, i, j, k).shape(roots);
                    if shape == RegionShape::Empty {
                        let w = Witness::Triple { apartments: [i, j, k], shape: describe_shape(&shape) };
                        return CheckReport::fail("A6", cases, "all apartment triples", w);
                    }
                }
            }
        }
        CheckReport::pass("A6", cases, format!("all {} apartment triples", m * m.saturating_sub(1) * m.saturating_sub(2) / 6))
    }

    fn check_ec(&self) -> CheckReport {
        let m = self.b.apartment_count();
        let surface = format!("all {} apartment pairs", m * m.saturating_sub(1) / 2);
        match missing_exchange(self.b) {
            Ok(None) => CheckReport::pass("EC", (m * m.saturating_sub(1) / 2) as u64, surface),
            Ok(Some((i, j))) => CheckReport::fail("EC", 1, surface, Witness::Exchange { i, j }),
            Err(e) => CheckReport::fail("EC", 1, surface, Witness::Gluing { i: 0, j: 0, problem: e.to_string() }),
        }
    }

    fn check_fc(&self, metric: MetricKind) -> CheckReport {
        let surface = format!(
            "{} sampled (x, y, z, A) configurations, windowed segment points, metric {metric}",
            self.fc_configs.len()
        );
        let outcome: Vec<(u64, Option<Witness>)> = self
            .fc_configs
            .par_iter()
            .map(|cfg| match fc_cover(self.b, cfg, &self.chart_grid, metric) {
                Ok(cert) => (cert.segment_points as u64 + 1, None),
                Err(w) => (1, Some(w)),
            })
            .collect();
        fold_outcomes("FC''", surface, outcome)
    }

    /// Chart independence of both metrics on sampled pairs, and the
    /// triangle inequality on sampled triples, preferring triples that no
    /// single apartment contains.
    pub fn check_metric_independence(&self) -> CheckReport {
        const NAME: &str = "metric-independence";
        let b = self.b;
        let model = b.model();
        let surface = format!(
            "{} pairs and {} triples ({} cross-apartment), metrics d1 and dinf",
            self.pairs.len(),
            self.triples.len(),
            self.cross_triples
        );
        let mut cases = 0;
        for which in MetricKind::BOTH {
            for &(u, v) in &self.pairs {
                let (pu, pv) = (&self.points[u], &self.points[v]);
                let mut first: Option<(usize, Scalar)> = None;
                for c in bits(pu.mask() & pv.mask()) {
                    let (Some(x), Some(y)) = (&pu.locs[c], &pv.locs[c]) else { continue };
                    cases += 1;
                    let d = model.metric(x, y, which);
                    match &first {
                        None => first = Some((c, d)),
                        Some((c0, d0)) if *d0 != d => {
                            let w = Witness::Distance {
                                x: pu.point.clone(),
                                y: pv.point.clone(),
                                charts: [*c0, c],
                                metric: which,
                            };
                            return CheckReport::fail(NAME, cases, surface, w);
                        }
                        Some(_) => {}
                    }
                }
            }
            for t in &self.triples {
                let [x, y, z] = t.map(|i| &self.points[i]);
                let d = |p: &Located, q: &Located| distance_located(b, p, q, which);
                let (Some(xy), Some(yz), Some(xz)) = (d(x, y), d(y, z), d(x, z)) else { continue };
                cases += 1;
                if xz > xy + yz || xy > xz + yz || yz > xy + xz {
                    let w = Witness::Triangle { x: x.point.clone(), y: y.point.clone(), z: z.point.clone(), metric: which };
                    return CheckReport::fail(NAME, cases, surface, w);
                }
            }
        }
        CheckReport::pass(NAME, cases, surface)
    }

    /// Number of sampled triples no apartment contains.
    pub fn cross_triples(&self) -> usize {
        self.cross_triples
    }
}

fn fold_outcomes(axiom: &str, surface: String, outcome: Vec<(u64, Option<Witness>)>) -> CheckReport {
    let mut cases = 0;
    for (c, w) in outcome {
        cases += c;
        if let Some(w) = w {
            return CheckReport::fail(axiom, cases, surface, w);
        }
    }
    CheckReport::pass(axiom, cases, surface)
}

fn dedup_located(b: &BuildingInstance, raw: Vec<BPoint>) -> Vec<Located> {
    let located: Vec<Located> = raw.into_par_iter().map(|p| Located::new(b, p)).collect();
    let mut seen = std::collections::BTreeSet::new();
    located.into_iter().filter(|l| seen.insert(first_located(l))).collect()
}

fn enumerate_chambers(b: &BuildingInstance, centers: &[Located]) -> (Vec<GermRec>, Vec<ChamberRec>) {
    let group = b.model().group();
    let raw: Vec<Vec<(usize, WeylSimplex, Germ, u64, u64)>> = centers
        .par_iter()
        .map(|c| {
            let mut out = Vec::new();
            for (a, x) in c.locs.iter().enumerate() {
                let Some(x) = x else { continue };
                for w in group.ids() {
                    let s = WeylSimplex::chamber(x.clone(), w);
                    let germ = Germ::new(b, a, &s);
                    out.push((a, s.clone(), germ, chamber_mask(b, a, &s), subchamber_mask(b, a, &s)));
                }
            }
            out
        })
        .collect();
    let mut germ_index: BTreeMap<Germ, usize> = BTreeMap::new();
    let mut germs = Vec::new();
    let mut chambers = Vec::new();
    let mut chamber_keys = std::collections::BTreeSet::new();
    for (center, list) in raw.into_iter().enumerate() {
        for (a, s, germ, mask, sub_mask) in list {
            let gi = *germ_index.entry(germ.clone()).or_insert_with(|| {
                let located = b.locate_germ(germ.chart, &germ.simplex);
                germs.push(GermRec { mask: mask_of(&located), germ, located, center });
                germs.len() - 1
            });
            let d0 = lowest(mask).unwrap_or(a);
            let key = match b.entry(a, d0) {
                Some((_, map)) if d0 != a => (d0, b.model().map_simplex(map, &s)),
                _ => (a, Some(s.clone())),
            };
            if chamber_keys.insert(key) {
                chambers.push(ChamberRec { chart: a, simplex: s, mask, sub_mask, germ: gi, center });
            }
        }
    }
    (germs, chambers)
}

/// Covering family of `z`-based chambers for (z, A), the check that it
/// covers `seg_A(x, y)`, then one apartment through the center germ per
/// family member: it contains the member and a chamber opposite to it at `z`.
pub fn fc_cover(
    b: &BuildingInstance,
    cfg: &FcConfig,
    grid: &[Point],
    metric: MetricKind,
) -> Result<CoverCertificate, Witness> {
    let model = b.model();
    let group = model.group();
    let a = cfg.apartment;
    let zl = Located::new(b, cfg.z.clone());
    let cover_witness = |point: &Point, problem: String| Witness::Cover {
        x: BPoint::new(a, cfg.x.clone()),
        y: BPoint::new(a, cfg.y.clone()),
        z: cfg.z.clone(),
        apartment: a,
        point: point.clone(),
        problem,
    };
    let family = lemma_family(b, a, &zl).map_err(|class| {
        cover_witness(&cfg.x, format!("no z-based Weyl chamber parallel to {}", class.label(b)))
    })?;
    let boundary_chambers = boundary_classes(b, a).len();
    if family.len() > boundary_chambers {
        return Err(cover_witness(&cfg.x, format!("family has {} members for {boundary_chambers} chambers at infinity", family.len())));
    }

    let mid = cfg.x.midpoint(&cfg.y);
    let mut segment_points = 0;
    for p in grid.iter().chain([&cfg.x, &cfg.y, &mid]) {
        if !model.segment_membership(&cfg.x, &cfg.y, p, metric) {
            continue;
        }
        segment_points += 1;
        let locs = b.locate(&BPoint::new(a, p.clone()));
        let covered = family
            .iter()
            .any(|(g, s)| locs[*g].as_ref().is_some_and(|q| model.simplex_contains(s, q)));
        if !covered {
            return Err(cover_witness(p, "segment point outside every chamber of the family".into()));
        }
    }

    let mu_mask = germ_mask(b, &cfg.mu);
    let mut germ_apartments = Vec::new();
    let mut cover = Vec::new();
    for (g, s) in &family {
        let located = b.locate_germ(*g, s);
        let Some(t) = lowest(mu_mask & mask_of(&located)) else {
            let objects = vec![Object::Germ { germ: cfg.mu.clone() }, Object::Germ { germ: Germ::new(b, *g, s) }];
            return Err(Witness::NoCommonApartment { objects });
        };
        let st = located[t].clone().expect("located germ");
        let opposite = WeylSimplex::chamber(st.base, group.mul(st.chamber, group.longest()));
        let common = distinct_apartments(b, chamber_mask(b, *g, s) & chamber_mask(b, t, &opposite));
        let objects = || vec![weyl_object(*g, s), weyl_object(t, &opposite)];
        match common.as_slice() {
            [ai] => {
                if mu_mask & (1 << ai) == 0 {
                    let objects = vec![Object::Germ { germ: cfg.mu.clone() }, weyl_object(*g, s), weyl_object(t, &opposite)];
                    return Err(Witness::NoCommonApartment { objects });
                }
                germ_apartments.push(t);
                cover.push(*ai);
            }
            [] => return Err(Witness::NoCommonApartment { objects: objects() }),
            _ => return Err(Witness::NotUnique { objects: objects(), apartments: common }),
        }
    }
    Ok(CoverCertificate {
        family: family.iter().map(|(g, s)| (*g, s.base.clone(), s.chamber.0)).collect(),
        boundary_chambers,
        segment_points,
        germ_apartments,
        cover,
    })
}

/// Chambers at infinity of apartment `a`, in the order of W.
pub fn boundary_classes(b: &BuildingInstance, a: usize) -> Vec<ParallelClass> {
    let mut out: Vec<ParallelClass> = Vec::new();
    for w in b.model().group().ids() {
        let c = ParallelClass::new(b, a, w, FaceMask::CHAMBER);
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// One `z`-based Weyl chamber per chamber at infinity of `a`, each given
/// in a chart containing both `z` and the class; the failing class if
/// there is none.
fn lemma_family(b: &BuildingInstance, a: usize, z: &Located) -> Result<Vec<(usize, WeylSimplex)>, ParallelClass> {
    boundary_classes(b, a)
        .into_iter()
        .map(|c| {
            let loc = c.locate(b);
            (0..b.apartment_count())
                .find_map(|g| Some((g, WeylSimplex::chamber(z.locs[g].clone()?, loc[g]?))))
                .ok_or(c)
        })
        .collect()
}

/// Builds the suite and runs the matrix for one metric.
pub fn mainthm_matrix(b: &BuildingInstance, window: SampleWindow, metric: MetricKind) -> Result<MatrixReport, SuiteError> {
    Ok(Suite::new(b, window)?.matrix(metric))
}

pub fn check_axiom(b: &BuildingInstance, axiom: Axiom, window: SampleWindow, metric: MetricKind) -> Result<CheckReport, SuiteError> {
    Ok(Suite::new(b, window)?.check(axiom, metric))
}

pub fn check_metric_independence(b: &BuildingInstance, window: SampleWindow) -> Result<CheckReport, SuiteError> {
    Ok(Suite::new(b, window)?.check_metric_independence())
}

pub fn find_witness(b: &BuildingInstance, q: &WitnessQuery) -> Result<Option<Found>, SuiteError> {
    let m = b.apartment_count();
    let bad = |s: &str| SuiteError::Arguments(s.to_string());
    let check_germ = |g: &Germ| {
        if g.chart >= m {
            Err(bad("germ chart out of range"))
        } else if !g.is_chamber() {
            Err(bad("germ is not a chamber germ"))
        } else {
            Ok(germ_mask(b, g))
        }
    };
    let check_chamber = |chart: usize, s: &WeylSimplex| {
        if chart >= m {
            Err(bad("chamber chart out of range"))
        } else if s.face != FaceMask::CHAMBER || s.chamber.0 >= b.model().group().order() {
            Err(bad("not a Weyl chamber"))
        } else {
            Ok(())
        }
    };
    let apartment = |mask: u64| lowest(mask).map(|a| Found::Apartment { apartment: a });
    match q {
        WitnessQuery::GermAndChamberAtInfinity { germ, class } => {
            let gm = check_germ(germ)?;
            if !class.is_chamber() || class.chart >= m {
                return Err(bad("not a chamber at infinity"));
            }
            Ok(apartment(gm & mask_of(&class.locate(b))))
        }
        WitnessQuery::ChamberAndGerm { chart, chamber, germ } => {
            let gm = check_germ(germ)?;
            check_chamber(*chart, chamber)?;
            Ok(apartment(gm & chamber_mask(b, *chart, chamber)))
        }
        WitnessQuery::GermAndSubchamber { germ, chart, chamber } => {
            let gm = check_germ(germ)?;
            check_chamber(*chart, chamber)?;
            Ok(apartment(gm & subchamber_mask(b, *chart, chamber)))
        }
        WitnessQuery::TripleIntersection { apartments: [i, j, k] } => {
            if [i, j, k].iter().any(|&&x| x >= m) {
                return Err(bad("apartment index out of range"));
            }
            let shape = triple_intersection(b, *i, *j, *k).shape(b.model().roots());
            Ok(match shape {
                RegionShape::HalfApartment(_) | RegionShape::Hyperplane { .. } => {
                    Some(Found::Shape { shape: shape.label().to_string(), description: describe_shape(&shape) })
                }
                _ => None,
            })
        }
    }
}

/// Re-runs the operation a witness refers to; true when the violation is
/// reproduced.
pub fn replay(b: &BuildingInstance, w: &Witness) -> bool {
    let model = b.model();
    let m = b.apartment_count();
    match w {
        Witness::Gluing { i, j, .. } => {
            let v = validate_atlas(b);
            if !v.verdict.is_pass() {
                return v.witness.as_ref() == Some(w);
            }
            gluing_mismatch(b, *i, *j)
        }
        Witness::Cocycle { i, j, k, point, .. } => {
            let (Some((rij, mij)), Some((rjk, mjk))) = (b.entry(*i, *j), b.entry(*j, *k)) else { return true };
            if !rij.contains(point) {
                return false;
            }
            let pj = mij.apply(point);
            if !rjk.contains(&pj) {
                return false;
            }
            match b.entry(*i, *k) {
                None => true,
                Some((rik, mik)) => !rik.contains(point) || mik.apply(point) != mjk.apply(&pj),
            }
        }
        Witness::Convexity { i, j, a, b: c } => {
            b.entry(*i, *j).is_some_and(|(r, _)| r.contains(a) && r.contains(c) && !r.contains(&a.midpoint(c)))
        }
        Witness::NoCommonApartment { objects } => {
            objects.iter().fold(u64::MAX >> (64 - m.clamp(1, 64)), |acc, o| acc & object_mask(b, o)) == 0
        }
        Witness::Subchambers { objects } => objects
            .iter()
            .map(|o| match o {
                Object::WeylChamber { chart, base, chamber } => {
                    subchamber_mask(b, *chart, &WeylSimplex::chamber(base.clone(), WeylId(*chamber)))
                }
                other => object_mask(b, other),
            })
            .fold(u64::MAX, |a, x| a & x)
            == 0,
        Witness::NotUnique { objects, .. } => {
            let mask = objects.iter().fold(u64::MAX >> (64 - m.clamp(1, 64)), |acc, o| acc & object_mask(b, o));
            distinct_apartments(b, mask).len() > 1
        }
        Witness::Residue { at, .. } => match residue(b, at) {
            Err(_) => true,
            Ok(r) => !r.is_building(),
        },
        Witness::Boundary { .. } => !boundary_complex(b).is_building(),
        Witness::RetractionInconsistent { apartment, center, y, g1, g2 } => {
            let Ok(r) = Retraction::new(b, *apartment, center) else { return true };
            let l = Located::new(b, y.clone());
            let e1 = r.via(*g1, &l.locs);
            let e2 = if g2 == apartment { l.locs[*apartment].clone() } else { r.via(*g2, &l.locs) };
            e1.is_some() && e2.is_some() && e1 != e2
        }
        Witness::RetractionExpands { apartment, center, x, y, metric } => {
            let Ok(r) = Retraction::new(b, *apartment, center) else { return true };
            let (lx, ly) = (Located::new(b, x.clone()), Located::new(b, y.clone()));
            match (r.apply_located(&lx.locs), r.apply_located(&ly.locs), distance_located(b, &lx, &ly, *metric)) {
                (Some(rx), Some(ry), Some(d)) => model.metric(&rx, &ry, *metric) > d,
                _ => false,
            }
        }
        Witness::RetractionFiber { apartment, center, y } => {
            let Ok(r) = Retraction::new(b, *apartment, center) else { return true };
            let l = Located::new(b, y.clone());
            r.apply_located(&l.locs).as_ref() == Some(r.base_in_a())
                && l.locs[*apartment].as_ref() != Some(r.base_in_a())
        }
        Witness::RetractionUndefined { apartment, center, y } => {
            let Ok(r) = Retraction::new(b, *apartment, center) else { return true };
            r.apply_located(&b.locate(y)).is_none()
        }
        Witness::Triple { apartments: [i, j, k], .. } => {
            triple_intersection(b, *i, *j, *k).shape(model.roots()) == RegionShape::Empty
        }
        Witness::Exchange { i, j } => exchange_missing(b, *i, *j).unwrap_or(true),
        Witness::Cover { z, apartment, point, .. } => {
            let zl = Located::new(b, z.clone());
            match lemma_family(b, *apartment, &zl) {
                Err(_) => true,
                Ok(family) => {
                    let locs = b.locate(&BPoint::new(*apartment, point.clone()));
                    !family.iter().any(|(g, s)| locs[*g].as_ref().is_some_and(|q| model.simplex_contains(s, q)))
                }
            }
        }
        Witness::Triangle { x, y, z, metric } => {
            let d = |p: &BPoint, q: &BPoint| crate::retraction::distance(b, p, q, *metric);
            match (d(x, y), d(y, z), d(x, z)) {
                (Some(xy), Some(yz), Some(xz)) => xz > xy + yz || xy > xz + yz || yz > xy + xz,
                _ => false,
            }
        }
        Witness::Distance { x, y, charts: [c1, c2], metric } => {
            let (lx, ly) = (b.locate(x), b.locate(y));
            match (&lx[*c1], &ly[*c1], &lx[*c2], &ly[*c2]) {
                (Some(a), Some(c), Some(d), Some(e)) => model.metric(a, c, *metric) != model.metric(d, e, *metric),
                _ => false,
            }
        }
        Witness::Parallel { a, b: c, c: d } => {
            let ab = parallel_direct(b, a, c);
            let bc = parallel_direct(b, c, d);
            let ac = parallel_direct(b, a, d);
            !parallel_direct(b, a, a) || ab != parallel_direct(b, c, a) || (ab && bc && !ac)
        }
    }
}

/// Declared region of (i, j) and the located overlap disagree at some
/// grid point of chart i.
fn gluing_mismatch(b: &BuildingInstance, i: usize, j: usize) -> bool {
    let w = SampleWindow::default();
    window_grid(b.model().spec(), b.model().rank(), &w).into_iter().any(|x| {
        let declared = b.entry(i, j).is_some_and(|(r, _)| r.contains(&x));
        declared != b.locate(&BPoint::new(i, x))[j].is_some()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{generate_star, generate_thin, GeneratorParams};
    use crate::coxeter::RootType;
    use crate::model_space::TMode;

    fn params(t: RootType, spec: LambdaSpec) -> GeneratorParams {
        GeneratorParams { root_type: t, spec, t_mode: TMode::Full }
    }

    fn small() -> SampleWindow {
        SampleWindow { radius: 4, den: 2, samples: 150, seed: 7 }
    }

    #[test]
    fn axiom_names_round_trip() {
        for a in Axiom::ALL {
            assert_eq!(a.name().parse::<Axiom>().unwrap(), a);
        }
        assert_eq!(Axiom::parse_list("all").unwrap().len(), 12);
        assert_eq!(Axiom::parse_list("a3, CO,fc''").unwrap(), vec![Axiom::A3, Axiom::CO, Axiom::FCpp]);
        assert!(Axiom::parse_list("A7").is_err());
    }

    #[test]
    fn grid_sizes() {
        let w = SampleWindow { radius: 2, den: 2, samples: 0, seed: 0 };
        assert_eq!(window_grid(LambdaSpec::Integers, 1, &w).len(), 5);
        // Halves from −2 to 2.
        assert_eq!(window_grid(LambdaSpec::Rationals, 1, &w).len(), 9);
        assert_eq!(window_grid(LambdaSpec::LexPair, 1, &w).len(), 15);
        // 5×5 integer box plus the 5×5 fine box, sharing 3×3 points.
        assert_eq!(window_grid(LambdaSpec::Rationals, 2, &w).len(), 41);
    }

    #[test]
    fn star3_passes_everything() {
        let b = generate_star(params(RootType::A1, LambdaSpec::Integers), 0, 3, false).unwrap();
        let suite = Suite::new(&b, small()).unwrap();
        for metric in MetricKind::BOTH {
            let m = suite.matrix(metric);
            for r in &m.axioms {
                assert!(r.verdict.is_ok(), "{r}");
            }
            assert!(m.all_pass());
        }
        assert!(suite.check_metric_independence().verdict.is_pass());
        assert!(suite.cross_triples() > 0);
    }

    #[test]
    fn seed_atlas_fails_a3_with_a_replayable_witness() {
        let full = generate_star(params(RootType::A1, LambdaSpec::Integers), 0, 3, false).unwrap();
        let seed = full.remove_apartment(2).unwrap();
        let suite = Suite::new(&seed, small()).unwrap();
        let r = suite.check(Axiom::A3, MetricKind::D1);
        assert_eq!(r.verdict, Verdict::Fail);
        let w = r.witness.clone().unwrap();
        let Witness::NoCommonApartment { objects } = &w else { panic!("{w:?}") };
        // One point on each of the two branches the seed fails to join.
        let charts: Vec<usize> = objects
            .iter()
            .map(|o| match o {
                Object::Point { at } => at.chart,
                _ => panic!(),
            })
            .collect();
        assert_eq!(charts, vec![0, 1]);
        assert!(replay(&seed, &w));
        assert!(!replay(&full, &w));
        let m = suite.matrix(MetricKind::D1);
        assert!(m.bundles.iter().all(|b| b.verdict == Verdict::Fail), "{:?}", m.bundles);
        for rep in m.axioms.iter().filter(|r| r.verdict == Verdict::Fail) {
            assert!(replay(&seed, rep.witness.as_ref().unwrap()), "{rep}");
        }
    }

    #[test]
    fn degenerate_pair_passes() {
        let b = generate_thin(params(RootType::A1, LambdaSpec::Integers));
        let w = SampleWindow { radius: 1, den: 1, samples: 0, seed: 0 };
        let r = check_axiom(&b, Axiom::A3, w, MetricKind::D1).unwrap();
        assert!(r.verdict.is_pass());
        assert_eq!(r.cases, 6);
    }

    #[test]
    fn find_witness_examples() {
        let b = generate_star(params(RootType::A1, LambdaSpec::Integers), 0, 3, false).unwrap();
        let o = BPoint::new(0, Point::from_ints(LambdaSpec::Integers, &[0]));
        // Toward e1 is downward in chart 0; ∂e2 is downward in chart 1.
        let mu = Germ::at(&b, &o, WeylId(1), FaceMask::CHAMBER);
        let c = ParallelClass::new(&b, 1, WeylId(1), FaceMask::CHAMBER);
        let q = WitnessQuery::GermAndChamberAtInfinity { germ: mu.clone(), class: c };
        assert_eq!(find_witness(&b, &q).unwrap(), Some(Found::Apartment { apartment: 2 }));
        let q = WitnessQuery::TripleIntersection { apartments: [0, 1, 2] };
        let Some(Found::Shape { shape, description }) = find_witness(&b, &q).unwrap() else { panic!() };
        assert_eq!(shape, "hyperplane");
        assert!(description.ends_with("= 0"), "{description}");

        let thin = generate_thin(params(RootType::A2, LambdaSpec::Rationals));
        let s = WeylSimplex::chamber(Point::from_ints(LambdaSpec::Rationals, &[1, 1]), WeylId(2));
        let t = Germ::at(&thin, &BPoint::new(0, Point::from_ints(LambdaSpec::Rationals, &[-3, 2])), WeylId(4), FaceMask::CHAMBER);
        let q = WitnessQuery::ChamberAndGerm { chart: 0, chamber: s.clone(), germ: t.clone() };
        assert_eq!(find_witness(&thin, &q).unwrap(), Some(Found::Apartment { apartment: 0 }));
        let q = WitnessQuery::GermAndSubchamber { germ: t, chart: 0, chamber: s };
        assert_eq!(find_witness(&thin, &q).unwrap(), Some(Found::Apartment { apartment: 0 }));
        let q = WitnessQuery::TripleIntersection { apartments: [0, 0, 5] };
        assert!(find_witness(&thin, &q).is_err());
    }

    #[test]
    fn germ_and_subchamber_in_a_star() {
        // The chamber [2, ∞) of chart 2 lies on the e1 branch; its
        // sub-chambers reach into apartment 0 as well.
        let b = generate_star(params(RootType::A1, LambdaSpec::Integers), 0, 3, false).unwrap();
        let s = WeylSimplex::chamber(Point::from_ints(LambdaSpec::Integers, &[2]), WeylId::IDENTITY);
        assert_eq!(chamber_mask(&b, 2, &s), 0b101);
        assert_eq!(subchamber_mask(&b, 2, &s), 0b101);
        let s = WeylSimplex::chamber(Point::from_ints(LambdaSpec::Integers, &[-2]), WeylId::IDENTITY);
        // [−2, ∞) in chart 2 crosses the branch point: apartment 0 only
        // contains its tail beyond 0.
        assert_eq!(chamber_mask(&b, 2, &s), 0b100);
        assert_eq!(subchamber_mask(&b, 2, &s), 0b101);
    }

    #[test]
    fn fc_cover_in_star() {
        let b = generate_star(params(RootType::A1, LambdaSpec::Integers), 0, 3, false).unwrap();
        let z = BPoint::new(1, Point::from_ints(LambdaSpec::Integers, &[-5]));
        let cfg = FcConfig {
            apartment: 0,
            x: Point::from_ints(LambdaSpec::Integers, &[-3]),
            y: Point::from_ints(LambdaSpec::Integers, &[4]),
            mu: Germ::at(&b, &z, WeylId::IDENTITY, FaceMask::CHAMBER),
            z,
        };
        let grid = window_grid(LambdaSpec::Integers, 1, &SampleWindow::default());
        let cert = fc_cover(&b, &cfg, &grid, MetricKind::D1).unwrap();
        assert_eq!(cert.boundary_chambers, 2);
        assert_eq!(cert.family.len(), 2);
        assert_eq!(cert.segment_points, 8 + 3);
        assert_eq!(cert.cover.len(), 2);
    }

    #[test]
    fn deterministic_reports() {
        let b = generate_star(params(RootType::A1, LambdaSpec::Rationals), 0, 3, false).unwrap();
        let a = serde_json::to_string(&mainthm_matrix(&b, small(), MetricKind::DInf).unwrap()).unwrap();
        let c = serde_json::to_string(&mainthm_matrix(&b, small(), MetricKind::DInf).unwrap()).unwrap();
        assert_eq!(a, c);
    }
}
