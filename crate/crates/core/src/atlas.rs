//! Finitely presented buildings: apartments (copies of 𝔸) glued along
//! convex regions by affine Weyl maps.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coxeter::{CoxeterError, Matrix, RootType};
use crate::lambda::{LambdaError, LambdaSpec, Scalar, Q};
use crate::model_space::{
    AffineMap, ConvexRegion, HalfSpace, ModelError, ModelSpace, Point, RegionShape, Sense, TMode, WeylSimplex,
};
use crate::report::{CheckReport, Witness};

/// Upper bound on the number of apartments the exchange closure may create.
pub const CLOSURE_CAP: usize = 64;

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("apartment index {index} out of range (instance has {count})")]
    Index { index: usize, count: usize },
    #[error("gluing ({0},{1}) is declared twice")]
    Duplicate(usize, usize),
    #[error("gluing of apartment {0} with itself")]
    SelfGluing(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error(transparent)]
    Coxeter(#[from] CoxeterError),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid instance: {0}")]
    Format(String),
    #[error("unsupported generator parameters: {0}")]
    Unsupported(String),
    #[error("exchange closure exceeded {cap} apartments (last pair ({i},{j}))")]
    ClosureCap { cap: usize, i: usize, j: usize },
    #[error("exchange closure: {0}")]
    Closure(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// `region_in_i ⊂ 𝔸` is the overlap of apartments i and j in chart-i
/// coordinates; `map_j_from_i` converts chart-i coordinates of an overlap
/// point into chart-j coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gluing {
    pub i: usize,
    pub j: usize,
    pub region_in_i: ConvexRegion,
    pub map_j_from_i: AffineMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    region: ConvexRegion,
    map: AffineMap,
}

/// A point of the building: chart index plus coordinates in that chart.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BPoint {
    pub chart: usize,
    pub local: Point,
}

impl BPoint {
    pub fn new(chart: usize, local: Point) -> Self {
        BPoint { chart, local }
    }

    /// Parses `i:(c1,...,cn)`.
    pub fn parse(spec: LambdaSpec, text: &str) -> Result<BPoint, ModelError> {
        let (chart, rest) = text
            .split_once(':')
            .ok_or_else(|| ModelError::Parse(text.into(), "expected chart:(coords)".into()))?;
        let chart = chart
            .trim()
            .parse()
            .map_err(|_| ModelError::Parse(text.into(), "bad chart index".into()))?;
        Ok(BPoint { chart, local: Point::parse(spec, rest)? })
    }
}

impl fmt::Display for BPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.chart, self.local)
    }
}

impl Serialize for BPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A finite atlas. Charts are taken modulo precomposition with Ŵ_T, so the
/// invariance axiom holds by construction.
#[derive(Debug, Clone)]
pub struct BuildingInstance {
    name: String,
    provenance: String,
    model: ModelSpace,
    apartments: usize,
    declared: Vec<Gluing>,
    /// Row-major `apartments × apartments`; the diagonal is the identity on
    /// all of 𝔸 and symmetric entries are synthesized from declared ones.
    table: Vec<Option<Entry>>,
}

impl BuildingInstance {
    pub fn new(
        name: impl Into<String>,
        model: ModelSpace,
        apartments: usize,
        gluings: Vec<Gluing>,
    ) -> Result<Self, AtlasError> {
        let m = apartments;
        let mut table: Vec<Option<Entry>> = vec![None; m * m];
        for a in 0..m {
            table[a * m + a] = Some(Entry {
                region: model.all(),
                map: AffineMap::identity(model.rank(), model.spec()),
            });
        }
        for g in &gluings {
            for idx in [g.i, g.j] {
                if idx >= m {
                    return Err(AtlasError::Index { index: idx, count: m });
                }
            }
            if g.i == g.j {
                return Err(AtlasError::SelfGluing(g.i));
            }
            let slot = &mut table[g.i * m + g.j];
            if slot.is_some() {
                return Err(AtlasError::Duplicate(g.i, g.j));
            }
            if g.map_j_from_i.linear.dim() != model.rank() || g.map_j_from_i.translation.rank() != model.rank() {
                return Err(AtlasError::Format(format!("gluing ({},{}) has a map of the wrong rank", g.i, g.j)));
            }
            *slot = Some(Entry { region: g.region_in_i.clone(), map: g.map_j_from_i.clone() });
        }
        for g in &gluings {
            if table[g.j * m + g.i].is_none() {
                if let Ok(inv) = g.map_j_from_i.inverse() {
                    let region = g.region_in_i.preimage(&inv);
                    table[g.j * m + g.i] = Some(Entry { region, map: inv });
                }
            }
        }
        Ok(BuildingInstance {
            name: name.into(),
            provenance: String::new(),
            model,
            apartments,
            declared: gluings,
            table,
        })
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn model(&self) -> &ModelSpace {
        &self.model
    }

    pub fn apartment_count(&self) -> usize {
        self.apartments
    }

    pub fn gluings(&self) -> &[Gluing] {
        &self.declared
    }

    /// Overlap of apartments i and j in chart-i coordinates, with the
    /// chart-j transition. `None` if the apartments are not glued.
    pub fn entry(&self, i: usize, j: usize) -> Option<(&ConvexRegion, &AffineMap)> {
        self.table[i * self.apartments + j].as_ref().map(|e| (&e.region, &e.map))
    }

    pub fn overlap(&self, i: usize, j: usize) -> Option<&ConvexRegion> {
        self.entry(i, j).map(|e| e.0)
    }

    /// Two charts describe the same apartment iff they overlap everywhere.
    pub fn apartments_equal(&self, i: usize, j: usize) -> bool {
        i == j || self.overlap(i, j).is_some_and(|r| r.is_everything())
    }

    /// Breadth-first transport of a point through the gluing graph: entry
    /// `a` holds the chart-a coordinates of `p`, if `p` lies in apartment a.
    pub fn locate(&self, p: &BPoint) -> Vec<Option<Point>> {
        let m = self.apartments;
        let mut out: Vec<Option<Point>> = vec![None; m];
        if p.chart >= m {
            return out;
        }
        out[p.chart] = Some(p.local.clone());
        let mut queue = VecDeque::from([p.chart]);
        while let Some(a) = queue.pop_front() {
            let x = out[a].clone().unwrap();
            for b in 0..m {
                if out[b].is_some() {
                    continue;
                }
                if let Some((region, map)) = self.entry(a, b) {
                    if region.contains(&x) {
                        out[b] = Some(map.apply(&x));
                        queue.push_back(b);
                    }
                }
            }
        }
        out
    }

    pub fn transport(&self, p: &BPoint, target: usize) -> Option<Point> {
        self.locate(p).into_iter().nth(target).flatten()
    }

    pub fn same_point(&self, p: &BPoint, q: &BPoint) -> bool {
        p == q || self.transport(p, q.chart).as_ref() == Some(&q.local)
    }

    /// Representation in the lowest chart containing the point.
    pub fn canonical_point(&self, p: &BPoint) -> BPoint {
        self.locate(p)
            .into_iter()
            .enumerate()
            .find_map(|(a, x)| x.map(|x| BPoint::new(a, x)))
            .unwrap_or_else(|| p.clone())
    }

    pub fn charts_containing(&self, p: &BPoint) -> Vec<(usize, Point)> {
        self.locate(p).into_iter().enumerate().filter_map(|(a, x)| x.map(|x| (a, x))).collect()
    }

    /// Transports the germ at its base of a Weyl simplex in chart `chart`:
    /// a hop is allowed when the overlap contains the germ.
    pub fn locate_germ(&self, chart: usize, s: &WeylSimplex) -> Vec<Option<WeylSimplex>> {
        self.bfs_simplex(chart, s, |region, t| region.contains_germ(&t.base, &self.model.simplex_rays(t)))
    }

    /// Transports the direction of a Weyl simplex: a hop is allowed when
    /// the overlap contains a translate of its cone. The base points of the
    /// returned simplices are apexes of such translates.
    pub fn locate_cone(&self, chart: usize, s: &WeylSimplex) -> Vec<Option<WeylSimplex>> {
        let m = self.apartments;
        let mut out: Vec<Option<WeylSimplex>> = vec![None; m];
        out[chart] = Some(s.clone());
        let mut queue = VecDeque::from([chart]);
        while let Some(a) = queue.pop_front() {
            let t = out[a].clone().unwrap();
            let rays = self.model.simplex_rays(&t);
            for b in 0..m {
                if out[b].is_some() {
                    continue;
                }
                if let Some((region, map)) = self.entry(a, b) {
                    if let Some(apex) = region.contains_cone(&rays) {
                        let moved = WeylSimplex { base: apex, chamber: t.chamber, face: t.face };
                        if let Some(image) = self.model.map_simplex(map, &moved) {
                            out[b] = Some(image);
                            queue.push_back(b);
                        }
                    }
                }
            }
        }
        out
    }

    fn bfs_simplex(
        &self,
        chart: usize,
        s: &WeylSimplex,
        admissible: impl Fn(&ConvexRegion, &WeylSimplex) -> bool,
    ) -> Vec<Option<WeylSimplex>> {
        let m = self.apartments;
        let mut out: Vec<Option<WeylSimplex>> = vec![None; m];
        out[chart] = Some(s.clone());
        let mut queue = VecDeque::from([chart]);
        while let Some(a) = queue.pop_front() {
            let t = out[a].clone().unwrap();
            for b in 0..m {
                if out[b].is_some() {
                    continue;
                }
                if let Some((region, map)) = self.entry(a, b) {
                    if admissible(region, &t) {
                        if let Some(image) = self.model.map_simplex(map, &t) {
                            out[b] = Some(image);
                            queue.push_back(b);
                        }
                    }
                }
            }
        }
        out
    }

    /// The instance without apartment `index`; remaining apartments are
    /// renumbered in order.
    pub fn remove_apartment(&self, index: usize) -> Result<BuildingInstance, AtlasError> {
        if index >= self.apartments {
            return Err(AtlasError::Index { index, count: self.apartments });
        }
        let renum = |a: usize| if a > index { a - 1 } else { a };
        let gluings = self
            .declared
            .iter()
            .filter(|g| g.i != index && g.j != index)
            .map(|g| Gluing { i: renum(g.i), j: renum(g.j), ..g.clone() })
            .collect();
        Ok(BuildingInstance::new(self.name.clone(), self.model.clone(), self.apartments - 1, gluings)?
            .with_provenance(format!("{} minus apartment {index}", self.provenance)))
    }

    /// Replaces the declared transition map of gluing `(i,j)`.
    pub fn with_map(&self, i: usize, j: usize, map: AffineMap) -> Result<BuildingInstance, AtlasError> {
        let mut gluings = self.declared.clone();
        let g = gluings
            .iter_mut()
            .find(|g| (g.i, g.j) == (i, j))
            .ok_or_else(|| AtlasError::Format(format!("no declared gluing ({i},{j})")))?;
        g.map_j_from_i = map;
        Ok(BuildingInstance::new(self.name.clone(), self.model.clone(), self.apartments, gluings)?
            .with_provenance(format!("{} with map ({i},{j}) replaced", self.provenance)))
    }
}

/// Checks that the atlas is well formed: maps lie in Ŵ_T, regions are
/// nonempty convex sets bounded by walls, symmetric entries agree, and the
/// transition maps satisfy the cocycle condition on every triple overlap.
/// Triple overlaps are checked exactly: containment of regions by
/// Fourier–Motzkin elimination and agreement of maps on the affine hull.
pub fn validate_atlas(b: &BuildingInstance) -> CheckReport {
    const AXIOM: &str = "atlas";
    let model = b.model();
    let m = b.apartment_count();
    let surface = format!("{m} apartments, {} declared gluings, all ordered triples", b.gluings().len());
    let mut cases = 0u64;
    let fail = |cases, w| CheckReport::fail(AXIOM, cases, surface.clone(), w);
    let gluing_problem = |i, j, problem: &str| Witness::Gluing { i, j, problem: problem.to_string() };

    for g in b.gluings() {
        cases += 1;
        let (i, j) = (g.i, g.j);
        if model.weyl_part(&g.map_j_from_i).is_none() {
            return fail(cases, gluing_problem(i, j, "linear part is not in the spherical Weyl group"));
        }
        if model.check_point(&g.map_j_from_i.translation).is_err() {
            return fail(cases, gluing_problem(i, j, "translation has the wrong coordinate type"));
        }
        if !model.translation_allowed(&g.map_j_from_i.translation) {
            return fail(cases, gluing_problem(i, j, "translation is not in T"));
        }
        if g.region_in_i.is_empty() {
            return fail(cases, gluing_problem(i, j, "gluing region is empty"));
        }
        if !g.region_in_i.walls_are_roots(model.roots()) {
            return fail(cases, gluing_problem(i, j, "gluing region has a non-wall boundary"));
        }
    }
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            cases += 1;
            match (b.entry(i, j), b.entry(j, i)) {
                (Some((rij, mij)), Some((rji, mji))) => {
                    if mij.compose(mji) != AffineMap::identity(model.rank(), model.spec()) {
                        return fail(cases, gluing_problem(i, j, "maps (i,j) and (j,i) are not mutually inverse"));
                    }
                    if !rij.preimage(mji).same_set(rji) {
                        return fail(cases, gluing_problem(i, j, "regions (i,j) and (j,i) do not correspond"));
                    }
                }
                (None, None) => {}
                _ => return fail(cases, gluing_problem(i, j, "gluing has no inverse")),
            }
        }
    }
    for i in 0..m {
        for j in 0..m {
            let Some((rij, mij)) = b.entry(i, j) else { continue };
            for k in 0..m {
                if k == i || k == j || i == j {
                    continue;
                }
                let Some((rjk, mjk)) = b.entry(j, k) else { continue };
                cases += 1;
                let triple = rij.intersect(&rjk.preimage(mij));
                let Some(p) = triple.witness_point() else { continue };
                match b.entry(i, k) {
                    None => {
                        return fail(
                            cases,
                            Witness::Cocycle { i, j, k, point: p, problem: "no gluing (i,k) for a triple point".into() },
                        )
                    }
                    Some((rik, mik)) => {
                        if !triple.is_subset_of(rik) {
                            let q = first_outside(&triple, rik).unwrap_or(p);
                            return fail(
                                cases,
                                Witness::Cocycle { i, j, k, point: q, problem: "triple point outside region (i,k)".into() },
                            );
                        }
                        let composite = mjk.compose(mij);
                        if !triple.maps_agree(&composite, mik) {
                            let q = disagreement_point(&triple, &composite, mik).unwrap_or(p);
                            return fail(
                                cases,
                                Witness::Cocycle { i, j, k, point: q, problem: "transition maps disagree".into() },
                            );
                        }
                    }
                }
            }
        }
    }
    CheckReport::pass(AXIOM, cases, surface)
}

/// A point of `r` outside `s`, if any.
fn first_outside(r: &ConvexRegion, s: &ConvexRegion) -> Option<Point> {
    let (p0, dirs) = r.affine_hull()?;
    if !s.contains(&p0) {
        return Some(p0);
    }
    // Walk along hull directions from the witness in both senses.
    let spec = r.spec();
    for d in &dirs {
        for step in [1i64, -1, 2, -2, 8, -8, 64, -64] {
            let q = p0.offset(d, Scalar::from_int(spec, step));
            if r.contains(&q) && !s.contains(&q) {
                return Some(q);
            }
        }
    }
    None
}

fn disagreement_point(r: &ConvexRegion, m1: &AffineMap, m2: &AffineMap) -> Option<Point> {
    let (p0, dirs) = r.affine_hull()?;
    if m1.apply(&p0) != m2.apply(&p0) {
        return Some(p0);
    }
    let spec = r.spec();
    for d in &dirs {
        for step in [1i64, -1, 2, -2, 8, -8, 64, -64] {
            let q = p0.offset(d, Scalar::from_int(spec, step));
            if r.contains(&q) && m1.apply(&q) != m2.apply(&q) {
                return Some(q);
            }
        }
    }
    None
}

/// Merges the two pieces `p1 ⊂ C`, `p2 ⊂ M` (with `C ∪ M = 𝔸`) of a new
/// apartment's overlap with an old one into a single gluing entry.
fn merge_pieces(
    p1: Option<(ConvexRegion, AffineMap)>,
    p2: Option<(ConvexRegion, AffineMap)>,
    c_side: &ConvexRegion,
    m_side: &ConvexRegion,
    model: &ModelSpace,
) -> Result<Option<Entry>, String> {
    let p1 = p1.filter(|(r, _)| !r.is_empty());
    let p2 = p2.filter(|(r, _)| !r.is_empty());
    let (r1, m1, r2, m2) = match (p1, p2) {
        (None, None) => return Ok(None),
        (Some((r, m)), None) | (None, Some((r, m))) => {
            return Ok(Some(Entry { region: r.canonical(model.roots()), map: m }))
        }
        (Some((r1, m1)), Some((r2, m2))) => (r1, m1, r2, m2),
    };
    let map = if r2.maps_agree(&m1, &m2) {
        m1
    } else if r1.maps_agree(&m1, &m2) {
        m2
    } else {
        return Err("overlap pieces carry incompatible transition maps".into());
    };
    let region = if r1.is_subset_of(&r2) {
        r2
    } else if r2.is_subset_of(&r1) {
        r1
    } else {
        let c1 = r1.canonical(model.roots());
        let c2 = r2.canonical(model.roots());
        let mut keep = Vec::new();
        for (r, other) in [(&c1, &c2), (&c2, &c1)] {
            for h in r.halves(model.roots()).into_iter().flatten() {
                let hr = model.region(&[h.clone()]);
                if other.is_subset_of(&hr) {
                    keep.push(h);
                }
            }
        }
        let union = model.region(&keep);
        if !(union.intersect(c_side).is_subset_of(&c1) && union.intersect(m_side).is_subset_of(&c2)) {
            return Err("overlap of the new apartment with an old one is not convex".into());
        }
        union
    };
    Ok(Some(Entry { region: region.canonical(model.roots()), map }))
}

/// Adds, for every pair of apartments meeting in a half-apartment `M`
/// with wall `H`, the apartment `(A ⊕ B) ∪ H` unless an equal one is
/// already present; repeats until nothing new appears.
///
/// The new chart uses chart-j coordinates on the part outside `M` and
/// reaches the part of apartment i outside `M` by reflecting in `H`.
pub fn ec_closure(b: &BuildingInstance) -> Result<BuildingInstance, AtlasError> {
    let model = b.model().clone();
    let mut m = b.apartment_count();
    let mut table = nested_table(b);
    loop {
        let mut added = false;
        let mut i = 0;
        while i < m {
            let mut j = i + 1;
            while j < m {
                if let Some(entry) = exchange_apartment(&model, &table, i, j).map_err(AtlasError::Closure)? {
                    if m >= CLOSURE_CAP {
                        return Err(AtlasError::ClosureCap { cap: CLOSURE_CAP, i, j });
                    }
                    for (l, row) in table.iter_mut().enumerate() {
                        let e = entry[l].clone();
                        row.push(e.as_ref().and_then(|e| {
                            let inv = e.map.inverse().ok()?;
                            Some(Entry { region: e.region.preimage(&inv).canonical(model.roots()), map: inv })
                        }));
                    }
                    let mut new_row = entry;
                    new_row.push(Some(Entry { region: model.all(), map: AffineMap::identity(model.rank(), model.spec()) }));
                    table.push(new_row);
                    m += 1;
                    added = true;
                }
                j += 1;
            }
            i += 1;
        }
        if !added {
            break;
        }
    }
    let mut gluings = Vec::new();
    for (i, row) in table.iter().enumerate() {
        for (j, e) in row.iter().enumerate().skip(i + 1) {
            if let Some(e) = e {
                gluings.push(Gluing {
                    i,
                    j,
                    region_in_i: e.region.canonical(model.roots()),
                    map_j_from_i: e.map.clone(),
                });
            }
        }
    }
    let provenance = if m == b.apartment_count() {
        b.provenance.clone()
    } else {
        format!("exchange closure of {}", if b.provenance.is_empty() { &b.name } else { &b.provenance })
    };
    Ok(BuildingInstance::new(b.name.clone(), model, m, gluings)?.with_provenance(provenance))
}

/// Is the exchange apartment of the pair (i,j) missing? False when the
/// two apartments do not meet in a half-apartment.
pub fn exchange_missing(b: &BuildingInstance, i: usize, j: usize) -> Result<bool, AtlasError> {
    let m = b.apartment_count();
    if i >= m || j >= m {
        return Err(AtlasError::Index { index: i.max(j), count: m });
    }
    let (i, j) = (i.min(j), i.max(j));
    Ok(exchange_apartment(b.model(), &nested_table(b), i, j).map_err(AtlasError::Closure)?.is_some())
}

fn nested_table(b: &BuildingInstance) -> Vec<Vec<Option<Entry>>> {
    let m = b.apartment_count();
    (0..m).map(|r| (0..m).map(|c| b.table[r * m + c].clone()).collect()).collect()
}

/// First pair of apartments (in lexicographic order) whose exchange
/// apartment is missing.
pub fn missing_exchange(b: &BuildingInstance) -> Result<Option<(usize, usize)>, AtlasError> {
    let m = b.apartment_count();
    let table = nested_table(b);
    for i in 0..m {
        for j in i + 1..m {
            if exchange_apartment(b.model(), &table, i, j).map_err(AtlasError::Closure)?.is_some() {
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

/// Gluing row of the exchange apartment for the pair (i,j), or `None` if
/// the pair does not meet in a half-apartment or the apartment exists.
fn exchange_apartment(
    model: &ModelSpace,
    table: &[Vec<Option<Entry>>],
    i: usize,
    j: usize,
) -> Result<Option<Vec<Option<Entry>>>, String> {
    let Some(eji) = &table[j][i] else { return Ok(None) };
    let RegionShape::HalfApartment(h) = eji.region.shape(model.roots()) else {
        return Ok(None);
    };
    let m_side = model.region(&[h.clone()]);
    let c_side = model.region(&[h.complement_closure()]);
    let reflection = model.wall_reflection(h.root, h.k);
    // Chart-i coordinates of a new-chart point on the M side.
    let phi = eji.map.compose(&reflection);
    let n = table.len();
    let mut row: Vec<Option<Entry>> = Vec::with_capacity(n);
    for l in 0..n {
        let piece1 = table[j][l].as_ref().map(|e| (c_side.intersect(&e.region), e.map.clone()));
        let piece2 = table[i][l]
            .as_ref()
            .map(|e| (m_side.intersect(&e.region.preimage(&phi)), e.map.compose(&phi)));
        let entry = merge_pieces(piece1, piece2, &c_side, &m_side, model)
            .map_err(|e| format!("pair ({i},{j}), apartment {l}: {e}"))?;
        if entry.as_ref().is_some_and(|e| e.region.is_everything()) {
            return Ok(None);
        }
        row.push(entry);
    }
    Ok(Some(row))
}

/// Generator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Thin,
    Star { wall_root: usize, branches: usize, seed_only: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorParams {
    pub root_type: RootType,
    pub spec: LambdaSpec,
    pub t_mode: TMode,
}

/// Thin instance: a single apartment.
pub fn generate_thin(p: GeneratorParams) -> BuildingInstance {
    let model = ModelSpace::new(p.root_type, p.spec, p.t_mode);
    BuildingInstance::new(format!("thin-{}-{}", p.root_type, p.spec), model, 1, Vec::new())
        .expect("thin instance is well formed")
        .with_provenance(format!("generate thin --type {} --lambda {}", p.root_type, p.spec))
}

/// `k` half-apartments bounded by the wall of `wall_root` through the
/// origin, glued along that wall. The seed atlas consists of the apartments
/// joining half 0 to half j; the exchange closure adds the rest, so that
/// apartment `0` joins halves 0,1, apartment `1` joins 0,2 and so on.
pub fn generate_star(
    p: GeneratorParams,
    wall_root: usize,
    branches: usize,
    seed_only: bool,
) -> Result<BuildingInstance, AtlasError> {
    let model = ModelSpace::new(p.root_type, p.spec, p.t_mode);
    if branches < 2 {
        return Err(AtlasError::Unsupported(format!("star needs at least 2 branches, got {branches}")));
    }
    if wall_root >= model.roots().num_positive() {
        return Err(AtlasError::Unsupported(format!(
            "wall root {wall_root} out of range ({} positive roots)",
            model.roots().num_positive()
        )));
    }
    let zero = Scalar::zero(p.spec);
    let shared = model.region(&[HalfSpace::new(wall_root, Sense::Ge, zero)]);
    let seed_count = branches - 1;
    let mut gluings = Vec::new();
    for i in 0..seed_count {
        for j in i + 1..seed_count {
            gluings.push(Gluing {
                i,
                j,
                region_in_i: shared.clone(),
                map_j_from_i: AffineMap::identity(model.rank(), p.spec),
            });
        }
    }
    let name = format!("star-{}-{}-{branches}", p.root_type, p.spec);
    let provenance = format!(
        "generate star --type {} --lambda {} --branches {branches} --wall-root {wall_root}",
        p.root_type, p.spec
    );
    let seed = BuildingInstance::new(name, model, seed_count, gluings)?.with_provenance(provenance.clone());
    if seed_only {
        return Ok(seed.with_provenance(format!("{provenance} --seed-atlas")));
    }
    Ok(ec_closure(&seed)?.with_provenance(provenance))
}

pub fn generate(kind: GeneratorKind, p: GeneratorParams) -> Result<BuildingInstance, AtlasError> {
    match kind {
        GeneratorKind::Thin => Ok(generate_thin(p)),
        GeneratorKind::Star { wall_root, branches, seed_only } => generate_star(p, wall_root, branches, seed_only),
    }
}

// ---- file format ----

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    provenance: String,
    #[serde(with = "text")]
    root_system: RootType,
    #[serde(with = "text")]
    lambda: LambdaSpec,
    t_mode: TMode,
    apartments: usize,
    #[serde(default)]
    gluings: Vec<GluingRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GluingRecord {
    i: usize,
    j: usize,
    region: Vec<HalfSpaceRecord>,
    map: MapRecord,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HalfSpaceRecord {
    root: RootRef,
    sense: Sense,
    k: String,
}

/// A positive-root index, or a signed string such as `"-1"` naming the
/// negative of a positive root.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RootRef {
    Index(usize),
    Signed(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapRecord {
    #[serde(default)]
    word: Vec<usize>,
    translation: Vec<String>,
    /// Raw linear part, for maps outside the Weyl group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    linear: Option<Vec<Vec<String>>>,
}

mod text {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

fn parse_q(text: &str) -> Result<Q, String> {
    match Scalar::parse(LambdaSpec::Rationals, text) {
        Ok(s) => Ok(s.major()),
        Err(e) => Err(e.to_string()),
    }
}

/// Serializes an instance to the JSON instance format. Only declared
/// gluings are written.
pub fn save(b: &BuildingInstance) -> Result<String, AtlasError> {
    let model = b.model();
    let mut gluings = Vec::new();
    for (n, g) in b.gluings().iter().enumerate() {
        let mut region = Vec::new();
        for h in g.region_in_i.halves(model.roots()) {
            let h = h.ok_or_else(|| AtlasError::Format(format!("gluing {n}: region is not bounded by walls")))?;
            region.push(HalfSpaceRecord { root: RootRef::Index(h.root), sense: h.sense, k: h.k.to_string() });
        }
        let translation = g.map_j_from_i.translation.coords().iter().map(|c| c.to_string()).collect();
        let map = match model.weyl_part(&g.map_j_from_i) {
            Some(w) => MapRecord { word: model.group().element(w).word.clone(), translation, linear: None },
            None => MapRecord {
                word: Vec::new(),
                translation,
                linear: Some(
                    g.map_j_from_i
                        .linear
                        .rows()
                        .iter()
                        .map(|r| r.iter().map(crate::lambda::fmt_q).collect())
                        .collect(),
                ),
            },
        };
        gluings.push(GluingRecord { i: g.i, j: g.j, region, map });
    }
    let file = InstanceFile {
        name: b.name.clone(),
        provenance: b.provenance.clone(),
        root_system: model.root_type(),
        lambda: model.spec(),
        t_mode: model.t_mode(),
        apartments: b.apartment_count(),
        gluings,
    };
    let mut out = serde_json::to_string_pretty(&file).map_err(|e| AtlasError::Format(e.to_string()))?;
    out.push('\n');
    Ok(out)
}

/// Parses the JSON instance format. Syntax errors carry line and column;
/// semantic checks beyond well-formedness are left to [`validate_atlas`].
pub fn load(text: &str) -> Result<BuildingInstance, AtlasError> {
    let file: InstanceFile = serde_json::from_str(text)
        .map_err(|e| AtlasError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
    let model = ModelSpace::new(file.root_system, file.lambda, file.t_mode);
    let rank = model.rank();
    let spec = model.spec();
    let npos = model.roots().num_positive();
    let mut gluings = Vec::new();
    for (n, g) in file.gluings.iter().enumerate() {
        let ctx = |what: &str, e: &dyn fmt::Display| AtlasError::Format(format!("gluings[{n}].{what}: {e}"));
        let mut halves = Vec::new();
        for (r, h) in g.region.iter().enumerate() {
            let k = Scalar::parse(spec, &h.k).map_err(|e| ctx(&format!("region[{r}].k"), &e))?;
            let (root, negate) = match &h.root {
                RootRef::Index(i) => (*i, false),
                RootRef::Signed(s) => {
                    let t = s.trim();
                    let (neg, digits) = match t.strip_prefix('-') {
                        Some(d) => (true, d),
                        None => (false, t.strip_prefix('+').unwrap_or(t)),
                    };
                    let i = digits.parse::<usize>().map_err(|e| ctx(&format!("region[{r}].root"), &e))?;
                    (i, neg)
                }
            };
            if root >= npos {
                return Err(ctx(&format!("region[{r}].root"), &format!("no positive root {root} (have {npos})")));
            }
            // -β(x) ≥ k is β(x) ≤ -k.
            halves.push(if negate { HalfSpace::new(root, h.sense.flip(), -k) } else { HalfSpace::new(root, h.sense, k) });
        }
        if g.map.translation.len() != rank {
            return Err(ctx("map.translation", &format!("expected {rank} coordinates")));
        }
        let translation = Point::new(
            g.map
                .translation
                .iter()
                .map(|t| Scalar::parse(spec, t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ctx("map.translation", &e))?,
        );
        let linear = match &g.map.linear {
            Some(rows) => {
                if !g.map.word.is_empty() {
                    return Err(ctx("map", &"give either word or linear, not both"));
                }
                if rows.len() != rank || rows.iter().any(|r| r.len() != rank) {
                    return Err(ctx("map.linear", &format!("expected a {rank}x{rank} matrix")));
                }
                let parsed = rows
                    .iter()
                    .map(|r| r.iter().map(|t| parse_q(t)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| ctx("map.linear", &e))?;
                Matrix::from_rows(&parsed)
            }
            None => {
                let w = model
                    .group()
                    .from_word(&g.map.word)
                    .ok_or_else(|| ctx("map.word", &"simple reflection index out of range"))?;
                model.group().matrix(w).clone()
            }
        };
        gluings.push(Gluing {
            i: g.i,
            j: g.j,
            region_in_i: model.region(&halves),
            map_j_from_i: AffineMap::new(linear, translation),
        });
    }
    Ok(BuildingInstance::new(file.name, model, file.apartments, gluings)?.with_provenance(file.provenance))
}

pub fn load_path(path: &std::path::Path) -> Result<BuildingInstance, AtlasError> {
    let text = std::fs::read_to_string(path).map_err(|e| AtlasError::Io(format!("{}: {e}", path.display())))?;
    load(&text)
}

pub fn save_path(b: &BuildingInstance, path: &std::path::Path) -> Result<(), AtlasError> {
    std::fs::write(path, save(b)?).map_err(|e| AtlasError::Io(format!("{}: {e}", path.display())))
}

impl FromStr for GeneratorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "thin" => Ok(GeneratorKind::Thin),
            "star" => Ok(GeneratorKind::Star { wall_root: 0, branches: 3, seed_only: false }),
            other => Err(format!("unknown generator {other:?} (expected thin or star)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_space::MetricKind;
    use num_traits::Zero;
    use proptest::prelude::*;

    fn params(t: RootType, spec: LambdaSpec) -> GeneratorParams {
        GeneratorParams { root_type: t, spec, t_mode: TMode::Full }
    }

    fn star3() -> BuildingInstance {
        generate_star(params(RootType::A1, LambdaSpec::Integers), 0, 3, false).unwrap()
    }

    fn pt(b: &BuildingInstance, chart: usize, c: &[i64]) -> BPoint {
        BPoint::new(chart, Point::from_ints(b.model().spec(), c))
    }

    #[test]
    fn star3_matches_the_declared_chart_conventions() {
        let b = star3();
        assert_eq!(b.apartment_count(), 3);
        let model = b.model();
        let zero = Scalar::zero(model.spec());
        let ge = model.region(&[HalfSpace::new(0, Sense::Ge, zero)]);
        let le = model.region(&[HalfSpace::new(0, Sense::Le, zero)]);
        let id = AffineMap::identity(1, model.spec());
        let neg = model.weyl_map(model.group().simple(0), model.origin());
        let (r01, m01) = b.entry(0, 1).unwrap();
        assert!(r01.same_set(&ge) && *m01 == id);
        let (r02, m02) = b.entry(0, 2).unwrap();
        assert!(r02.same_set(&le) && *m02 == neg);
        let (r12, m12) = b.entry(1, 2).unwrap();
        assert!(r12.same_set(&le) && *m12 == id);
    }

    #[test]
    fn validate_examples() {
        let thin = generate_thin(params(RootType::A2, LambdaSpec::Rationals));
        assert!(validate_atlas(&thin).verdict.is_pass());
        let b = star3();
        assert!(validate_atlas(&b).verdict.is_pass());
        let doubling = AffineMap::new(Matrix::scalar(1, Q::from_integer(2)), b.model().origin());
        let bad = b.with_map(0, 1, doubling).unwrap();
        let report = validate_atlas(&bad);
        assert!(!report.verdict.is_ok());
        assert!(report.witness.is_some());
    }

    #[test]
    fn cocycle_violation_is_found_with_a_point() {
        let b = star3();
        // A translated reflection keeps the map in Ŵ_T but breaks the
        // triple (0,1,2) at the branch point.
        let neg = b.model().weyl_map(b.model().group().simple(0), Point::from_ints(b.model().spec(), &[1]));
        let bad = b.with_map(0, 2, neg).unwrap();
        let r = validate_atlas(&bad);
        assert!(!r.verdict.is_ok(), "{r}");
    }

    #[test]
    fn same_point_examples() {
        let b = star3();
        let p = pt(&b, 0, &[-2]);
        assert!(b.same_point(&p, &p));
        assert!(b.same_point(&pt(&b, 0, &[-2]), &pt(&b, 2, &[2])));
        assert!(!b.same_point(&pt(&b, 0, &[1]), &pt(&b, 2, &[1])));
    }

    #[test]
    fn transport_examples() {
        let b = star3();
        let p = pt(&b, 1, &[-3]);
        assert_eq!(b.transport(&p, 1), Some(p.local.clone()));
        assert_eq!(b.transport(&p, 2), Some(Point::from_ints(b.model().spec(), &[-3])));
        assert_eq!(b.transport(&pt(&b, 0, &[2]), 2), None);
    }

    #[test]
    fn transport_agrees_with_direct_gluing_lookup() {
        // Oracle: on a complete atlas a point lies in chart b iff the direct
        // overlap region contains it.
        for b in [star3(), generate_star(params(RootType::A2, LambdaSpec::Rationals), 0, 4, false).unwrap()] {
            let model = b.model();
            for a in 0..b.apartment_count() {
                for x in -3..=3 {
                    for y in -3..=3 {
                        let c: Vec<i64> = [x, y][..model.rank()].to_vec();
                        let p = BPoint::new(a, model.point(&c.iter().map(|v| Q::from_integer(*v)).collect::<Vec<_>>()));
                        let loc = b.locate(&p);
                        for (t, got) in loc.iter().enumerate() {
                            let direct = b.entry(a, t).filter(|(r, _)| r.contains(&p.local)).map(|(_, m)| m.apply(&p.local));
                            assert_eq!(got, &direct);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn closure_examples() {
        let thin = generate_thin(params(RootType::A1, LambdaSpec::Integers));
        assert_eq!(ec_closure(&thin).unwrap().apartment_count(), 1);
        let seed = generate_star(params(RootType::A1, LambdaSpec::Integers), 0, 3, true).unwrap();
        assert_eq!(seed.apartment_count(), 2);
        let closed = ec_closure(&seed).unwrap();
        assert_eq!(closed.apartment_count(), 3);
        let seed4 = generate_star(params(RootType::A1, LambdaSpec::Integers), 0, 4, true).unwrap();
        let closed4 = ec_closure(&seed4).unwrap();
        assert_eq!(closed4.apartment_count(), 6);
        assert!(validate_atlas(&closed4).verdict.is_pass());
        // Idempotence.
        assert_eq!(ec_closure(&closed4).unwrap().apartment_count(), 6);
    }

    /// Oracle for star trees: label every apartment by the pair of ends it
    /// joins, found by pushing far points of each chart to the seed charts.
    fn end_pairs(b: &BuildingInstance, k: usize) -> Vec<(usize, usize)> {
        let far = 1000;
        let end_of = |p: &BPoint| -> usize {
            // Seed chart j (j < k-1) joins end 0 (at +∞) to end j+1 (at -∞).
            for (a, x) in b.charts_containing(p) {
                if a < k - 1 {
                    return if x.coords()[0].is_positive() { 0 } else { a + 1 };
                }
            }
            usize::MAX
        };
        let mut pairs: Vec<(usize, usize)> = (0..b.apartment_count())
            .map(|a| {
                let e1 = end_of(&pt(b, a, &[far]));
                let e2 = end_of(&pt(b, a, &[-far]));
                (e1.min(e2), e1.max(e2))
            })
            .collect();
        pairs.sort();
        pairs
    }

    #[test]
    fn star_trees_have_one_apartment_per_pair_of_ends() {
        for k in 2..=5 {
            let b = generate_star(params(RootType::A1, LambdaSpec::Integers), 0, k, false).unwrap();
            let mut expect = Vec::new();
            for e1 in 0..k {
                for e2 in e1 + 1..k {
                    expect.push((e1, e2));
                }
            }
            assert_eq!(end_pairs(&b, k), expect);
        }
    }

    #[test]
    fn generated_stars_intersect_as_expected() {
        for spec in [LambdaSpec::Integers, LambdaSpec::LexPair] {
            let b = generate_star(params(RootType::A1, spec), 0, 3, false).unwrap();
            assert!(validate_atlas(&b).verdict.is_pass());
            for i in 0..3 {
                for j in i + 1..3 {
                    assert!(matches!(b.overlap(i, j).unwrap().shape(b.model().roots()), RegionShape::HalfApartment(_)));
                }
            }
            let triple = b.overlap(0, 1).unwrap().intersect(&b.overlap(0, 2).unwrap());
            assert_eq!(triple.shape(b.model().roots()), RegionShape::Hyperplane { root: 0, k: Scalar::zero(spec) });
        }
        for t in [RootType::A2, RootType::B2] {
            for wall in 0..2 {
                let b = generate_star(params(t, LambdaSpec::Rationals), wall, 3, false).unwrap();
                assert_eq!(b.apartment_count(), 3);
                assert!(validate_atlas(&b).verdict.is_pass());
                let shapes: Vec<RegionShape> =
                    [(0, 1), (0, 2), (1, 2)].iter().map(|&(i, j)| b.overlap(i, j).unwrap().shape(b.model().roots())).collect();
                for s in &shapes {
                    let RegionShape::HalfApartment(h) = s else { panic!("{s:?}") };
                    assert!(h.k.is_zero());
                    assert_eq!(h.root, wall);
                }
            }
        }
    }

    #[test]
    fn file_round_trip() {
        let b = star3();
        let text = save(&b).unwrap();
        let back = load(&text).unwrap();
        assert_eq!(save(&back).unwrap(), text);
        assert_eq!(back.apartment_count(), 3);
        assert!(validate_atlas(&back).verdict.is_pass());

        let corrupted = b
            .with_map(0, 1, AffineMap::new(Matrix::scalar(1, Q::from_integer(2)), b.model().origin()))
            .unwrap();
        let text = save(&corrupted).unwrap();
        assert!(text.contains("\"linear\""));
        assert_eq!(save(&load(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn load_rejects_unknown_root_system_with_position() {
        let text = "{\n  \"name\": \"x\",\n  \"root_system\": \"G2\",\n  \"lambda\": \"Z\",\n  \"t_mode\": \"full\",\n  \"apartments\": 1\n}";
        match load(text) {
            Err(AtlasError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hand_written_thin_a2_validates() {
        let text = r#"{
            "name": "thin-a2",
            "root_system": "A2",
            "lambda": "Q",
            "t_mode": "full",
            "apartments": 1,
            "gluings": []
        }"#;
        let b = load(text).unwrap();
        assert!(validate_atlas(&b).verdict.is_pass());
        assert_eq!(b.model().group().order(), 6);
    }

    #[test]
    fn signed_roots_and_lex_scalars_load() {
        let text = r#"{
            "name": "two-lines",
            "root_system": "A1",
            "lambda": "QxQ_lex",
            "t_mode": "full",
            "apartments": 2,
            "gluings": [{"i": 0, "j": 1, "region": [{"root": "-0", "sense": "<=", "k": "(0,0)"}],
                         "map": {"word": [], "translation": ["(0,0)"]}}]
        }"#;
        let b = load(text).unwrap();
        let r = b.overlap(0, 1).unwrap();
        assert!(r.contains(&Point::new([Scalar::pair(LambdaSpec::LexPair, Q::zero(), Q::from_integer(1))])));
        assert!(!r.contains(&Point::new([Scalar::pair(LambdaSpec::LexPair, Q::zero(), Q::from_integer(-1))])));
    }

    #[test]
    fn removing_the_exchange_apartment() {
        let b = star3();
        let seed = b.remove_apartment(2).unwrap();
        assert_eq!(seed.apartment_count(), 2);
        assert!(validate_atlas(&seed).verdict.is_pass());
        assert!(b.remove_apartment(3).is_err());
    }

    #[test]
    fn metric_on_glued_points() {
        let b = star3();
        let m = b.model();
        let x = b.transport(&pt(&b, 2, &[2]), 0).unwrap();
        assert_eq!(x, Point::from_ints(m.spec(), &[-2]));
        assert_eq!(m.metric(&x, &Point::from_ints(m.spec(), &[3]), MetricKind::D1), Scalar::from_int(m.spec(), 10));
    }

    proptest! {
        #[test]
        fn same_point_is_an_equivalence(a in 0usize..3, b_ in 0usize..3, c in 0usize..3, x in -4i64..=4, y in -4i64..=4, z in -4i64..=4) {
            let b = star3();
            let (p, q, r) = (pt(&b, a, &[x]), pt(&b, b_, &[y]), pt(&b, c, &[z]));
            prop_assert!(b.same_point(&p, &p));
            prop_assert_eq!(b.same_point(&p, &q), b.same_point(&q, &p));
            if b.same_point(&p, &q) && b.same_point(&q, &r) {
                prop_assert!(b.same_point(&p, &r));
            }
        }

        #[test]
        fn transport_is_path_independent(a in 0usize..6, x in -5i64..=5, route in proptest::collection::vec(0usize..6, 1..5)) {
            // Compose the declared maps along a random route through charts
            // that contain the point; the result must match the direct
            // transport.
            let b = generate_star(params(RootType::A1, LambdaSpec::Integers), 0, 4, false).unwrap();
            let p = pt(&b, a, &[x]);
            let mut cur = (a, p.local.clone());
            for &next in &route {
                if let Some((r, m)) = b.entry(cur.0, next) {
                    if r.contains(&cur.1) {
                        cur = (next, m.apply(&cur.1));
                    }
                }
            }
            prop_assert_eq!(b.transport(&p, cur.0), Some(cur.1));
        }
    }
}
