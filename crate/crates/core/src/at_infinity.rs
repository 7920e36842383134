//! Parallelism of Weyl simplices, the spherical building ∂X at infinity,
//! the sundial configuration and lifting of galleries.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::atlas::{BPoint, BuildingInstance};
use crate::chamber_system::ChamberSystem;
use crate::coxeter::{FaceMask, WeylId};
use crate::local_structure::{delta_x, project_pi_x, LocalError};
use crate::model_space::{ConvexRegion, RegionShape, WeylSimplex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InfinityError {
    #[error("simplices have different face types")]
    FaceMismatch,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("bad class id {0:?}")]
    BadClass(String),
    #[error(transparent)]
    Local(#[from] LocalError),
}

/// Parallel class ∂S of a Weyl simplex, represented by its direction
/// (chamber element and face) in the least chart whose apartment contains a
/// sub-simplex of a representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ParallelClass {
    pub chart: usize,
    pub chamber: WeylId,
    pub face: FaceMask,
}

impl ParallelClass {
    /// Canonical class of the simplex with direction `w` and face `face` in
    /// chart `chart`.
    pub fn new(b: &BuildingInstance, chart: usize, w: WeylId, face: FaceMask) -> ParallelClass {
        let group = b.model().group();
        let raw = ParallelClass { chart, chamber: group.coset_rep(w, face), face };
        raw.locate(b)
            .into_iter()
            .enumerate()
            .find_map(|(a, u)| u.map(|u| ParallelClass { chart: a, chamber: u, face }))
            .unwrap_or(raw)
    }

    /// Direction of the class in every chart whose apartment contains it
    /// at infinity.
    pub fn locate(&self, b: &BuildingInstance) -> Vec<Option<WeylId>> {
        let s = WeylSimplex { base: b.model().origin(), chamber: self.chamber, face: self.face };
        b.locate_cone(self.chart, &s).into_iter().map(|t| t.map(|t| t.chamber)).collect()
    }

    pub fn in_apartment(&self, b: &BuildingInstance, a: usize) -> bool {
        self.locate(b)[a].is_some()
    }

    pub fn is_chamber(&self) -> bool {
        self.face == FaceMask::CHAMBER
    }

    /// `chart:word` for chambers.
    pub fn label(&self, b: &BuildingInstance) -> String {
        format!("{}:{}", self.chart, b.model().group().word_label(self.chamber))
    }

    /// Parses `chart:word` as a chamber class.
    pub fn parse(b: &BuildingInstance, text: &str) -> Result<ParallelClass, InfinityError> {
        let bad = || InfinityError::BadClass(text.into());
        let (chart, word) = text.split_once(':').ok_or_else(bad)?;
        let chart: usize = chart.trim().parse().map_err(|_| bad())?;
        if chart >= b.apartment_count() {
            return Err(bad());
        }
        let w = b.model().group().parse_word(word).ok_or_else(bad)?;
        Ok(ParallelClass::new(b, chart, w, FaceMask::CHAMBER))
    }
}

/// Parallelism of two Weyl simplices of the same face type, given in
/// charts `s_chart` and `t_chart`.
pub fn parallel(
    b: &BuildingInstance,
    s_chart: usize,
    s: &WeylSimplex,
    t_chart: usize,
    t: &WeylSimplex,
) -> Result<bool, InfinityError> {
    if s.face != t.face {
        return Err(InfinityError::FaceMismatch);
    }
    Ok(ParallelClass::new(b, s_chart, s.chamber, s.face) == ParallelClass::new(b, t_chart, t.chamber, t.face))
}

/// One-step parallelism: the two directions are translates of each other
/// inside the overlap of their charts.
pub fn parallel_direct(b: &BuildingInstance, s: &ParallelClass, t: &ParallelClass) -> bool {
    let group = b.model().group();
    if s.face != t.face {
        return false;
    }
    let (sw, tw) = (group.coset_rep(s.chamber, s.face), group.coset_rep(t.chamber, t.face));
    if s.chart == t.chart {
        return sw == tw;
    }
    let Some((region, map)) = b.entry(s.chart, t.chart) else { return false };
    let rays = b.model().rays(sw, s.face);
    if region.contains_cone(&rays).is_none() {
        return false;
    }
    match b.model().weyl_part(map) {
        Some(u) => group.coset_rep(group.mul(u, sw), s.face) == tw,
        None => false,
    }
}

/// All raw representatives (chart, direction) of simplices at infinity:
/// chambers, and panels in rank two.
pub fn raw_representatives(b: &BuildingInstance) -> Vec<ParallelClass> {
    let group = b.model().group();
    let rank = b.model().rank();
    let mut faces = vec![FaceMask::CHAMBER];
    if rank > 1 {
        faces.extend((0..rank).map(FaceMask::panel));
    }
    let mut out = Vec::new();
    for chart in 0..b.apartment_count() {
        for &face in &faces {
            let mut seen = Vec::new();
            for w in group.ids() {
                let r = group.coset_rep(w, face);
                if !seen.contains(&r) {
                    seen.push(r);
                    out.push(ParallelClass { chart, chamber: r, face });
                }
            }
        }
    }
    out
}

/// Exhaustive check that one-step parallelism is an equivalence relation
/// on raw representatives and that its classes are exactly the canonical
/// classes. Returns the number of cases and the first violating triple.
pub fn check_parallelism(b: &BuildingInstance) -> (u64, Option<[ParallelClass; 3]>) {
    let reps = raw_representatives(b);
    let n = reps.len();
    let rel: Vec<Vec<bool>> = reps.iter().map(|s| reps.iter().map(|t| parallel_direct(b, s, t)).collect()).collect();
    let canon: Vec<ParallelClass> = reps.iter().map(|r| ParallelClass::new(b, r.chart, r.chamber, r.face)).collect();
    let mut cases = 0u64;
    for i in 0..n {
        cases += 1;
        if !rel[i][i] {
            return (cases, Some([reps[i], reps[i], reps[i]]));
        }
        for j in 0..n {
            cases += 1;
            if rel[i][j] != rel[j][i] || rel[i][j] != (canon[i] == canon[j]) {
                return (cases, Some([reps[i], reps[j], reps[j]]));
            }
            if !rel[i][j] {
                continue;
            }
            for k in 0..n {
                cases += 1;
                if rel[j][k] && !rel[i][k] {
                    return (cases, Some([reps[i], reps[j], reps[k]]));
                }
            }
        }
    }
    (cases, None)
}

/// ∂X: chambers are parallel classes of Weyl chambers, apartments are the
/// boundaries of atlas apartments.
#[derive(Debug, Clone)]
pub struct BoundaryComplex {
    pub chambers: Vec<ParallelClass>,
    pub panels: Vec<ParallelClass>,
    pub system: ChamberSystem,
    /// Chart of each apartment of `system`.
    pub apartment_charts: Vec<usize>,
    pub verdict: Result<(), String>,
    /// Distinct atlas apartments have distinct boundaries and equal ones
    /// equal boundaries.
    pub bijection: Result<(), String>,
}

impl BoundaryComplex {
    pub fn chamber_index(&self, c: &ParallelClass) -> Option<usize> {
        self.chambers.binary_search(c).ok()
    }

    pub fn is_building(&self) -> bool {
        self.verdict.is_ok() && self.bijection.is_ok()
    }

    /// Number of distinct boundary apartments.
    pub fn distinct_apartments(&self) -> usize {
        let mut sets = self.system.apartment_sets();
        sets.sort();
        sets.dedup();
        sets.len()
    }

    /// Chamber classes in the boundary of apartment `a`.
    pub fn apartment_chambers(&self, a: usize) -> Vec<ParallelClass> {
        let mut out: Vec<ParallelClass> = self.system.apartments[a].iter().map(|&c| self.chambers[c]).collect();
        out.sort();
        out
    }

    pub fn distance(&self, c: &ParallelClass, d: &ParallelClass) -> Option<usize> {
        let (i, j) = (self.chamber_index(c)?, self.chamber_index(d)?);
        Some(self.system.distances()[i][j])
    }
}

pub fn boundary_complex(b: &BuildingInstance) -> BoundaryComplex {
    let model = b.model();
    let group = model.group();
    let rank = model.rank();
    let m = b.apartment_count();
    let mut chamber_of: BTreeMap<(usize, WeylId), ParallelClass> = BTreeMap::new();
    for a in 0..m {
        for w in group.ids() {
            chamber_of.insert((a, w), ParallelClass::new(b, a, w, FaceMask::CHAMBER));
        }
    }
    let mut chambers: Vec<ParallelClass> = chamber_of.values().copied().collect();
    chambers.sort();
    chambers.dedup();
    let cid = |c: &ParallelClass| chambers.binary_search(c).unwrap();
    let mut panels: Vec<ParallelClass> = Vec::new();
    let mut panel_table = vec![vec![0usize; rank]; chambers.len()];
    let mut conflict = None;
    if rank > 1 {
        let mut panel_of: BTreeMap<(usize, WeylId, usize), ParallelClass> = BTreeMap::new();
        for a in 0..m {
            for w in group.ids() {
                for i in 0..rank {
                    panel_of.insert((a, w, i), ParallelClass::new(b, a, w, FaceMask::panel(i)));
                }
            }
        }
        panels = panel_of.values().copied().collect();
        panels.sort();
        panels.dedup();
        let mut filled = vec![vec![false; rank]; chambers.len()];
        for (&(a, w, i), p) in &panel_of {
            let c = cid(&chamber_of[&(a, w)]);
            let id = panels.binary_search(p).unwrap();
            if filled[c][i] && panel_table[c][i] != id {
                conflict = Some(format!("chamber {c} at infinity has two different type-{i} panels"));
            }
            filled[c][i] = true;
            panel_table[c][i] = id;
        }
    }
    // In rank one every chamber at infinity is adjacent to every other one.
    let apartments: Vec<Vec<usize>> =
        (0..m).map(|a| group.ids().map(|w| cid(&chamber_of[&(a, w)])).collect()).collect();
    let system = ChamberSystem { chambers: chambers.len(), apartments, panels: panel_table };
    let verdict = match conflict {
        Some(c) => Err(c),
        None => system.check(group),
    };
    let sets = system.apartment_sets();
    let mut bijection = Ok(());
    'outer: for a in 0..m {
        for c in a + 1..m {
            let equal = b.apartments_equal(a, c);
            if equal != (sets[a] == sets[c]) {
                bijection = Err(format!(
                    "apartments {a} and {c} are {} but their boundaries are {}",
                    if equal { "equal" } else { "distinct" },
                    if equal { "distinct" } else { "equal" }
                ));
                break 'outer;
            }
        }
    }
    BoundaryComplex { chambers, panels, system, apartment_charts: (0..m).collect(), verdict, bijection }
}

/// Intersection of three apartments, in chart-`i` coordinates.
pub fn triple_intersection(b: &BuildingInstance, i: usize, j: usize, k: usize) -> ConvexRegion {
    let model = b.model();
    let empty = || model.region(&[]).intersect(&contradiction(b));
    let rij = b.overlap(i, j).cloned().unwrap_or_else(empty);
    let rik = b.overlap(i, k).cloned().unwrap_or_else(empty);
    rij.intersect(&rik)
}

fn contradiction(b: &BuildingInstance) -> ConvexRegion {
    use crate::model_space::{HalfSpace, Sense};
    let model = b.model();
    let one = model.scalar(crate::lambda::Q::from_integer(1));
    model.region(&[HalfSpace::new(0, Sense::Ge, one), HalfSpace::new(0, Sense::Le, -one)])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sundial {
    /// The two apartments, in increasing order.
    pub apartments: [usize; 2],
    /// The chambers of ∂A opposite `c`, matching `apartments`.
    pub opposite: [ParallelClass; 2],
    /// Shape of the triple intersection, in chart-A coordinates.
    pub triple: String,
}

/// Given an apartment `A` and a chamber `c` at infinity outside ∂A but
/// containing a panel of ∂A, finds the two chambers `d1`, `d2` of ∂A
/// opposite `c` and apartments `A_i` with `d_i, c ∈ ∂A_i`; then checks that
/// the three apartments pairwise meet in half-apartments and all three in a
/// wall.
pub fn sundial(b: &BuildingInstance, a: usize, c: &ParallelClass) -> Result<Sundial, InfinityError> {
    if a >= b.apartment_count() {
        return Err(InfinityError::Precondition(format!("no apartment {a}")));
    }
    let bc = boundary_complex(b);
    let ci = bc
        .chamber_index(c)
        .ok_or_else(|| InfinityError::Precondition("class is not a chamber at infinity".into()))?;
    let own = &bc.system.apartments[a];
    if own.contains(&ci) {
        return Err(InfinityError::Precondition("chamber lies in the boundary of the apartment".into()));
    }
    let own_panels: Vec<(usize, usize)> =
        own.iter().flat_map(|&d| bc.system.panels[d].iter().copied().enumerate().collect::<Vec<_>>()).collect();
    let shares_panel = bc.system.panels[ci].iter().enumerate().any(|(i, &p)| own_panels.contains(&(i, p)));
    if !shares_panel {
        return Err(InfinityError::Precondition("chamber has no panel in the boundary of the apartment".into()));
    }
    let dist = bc.system.distances();
    let diam = b.model().group().diameter();
    let mut opposite: Vec<usize> = own.iter().copied().filter(|&d| dist[ci][d] == diam).collect();
    opposite.sort();
    if opposite.len() != 2 {
        return Err(InfinityError::NotFound(format!(
            "expected two chambers of the apartment opposite the class, found {}",
            opposite.len()
        )));
    }
    let mut found = Vec::new();
    for &d in &opposite {
        let ap = bc.system.apartments.iter().position(|l| l.contains(&d) && l.contains(&ci)).ok_or_else(|| {
            InfinityError::NotFound(format!(
                "no apartment contains {} and {} (missing exchange apartment?)",
                bc.chambers[d].label(b),
                c.label(b)
            ))
        })?;
        found.push((ap, bc.chambers[d]));
    }
    found.sort();
    let (a1, a2) = (found[0].0, found[1].0);
    let roots = b.model().roots();
    for (x, y) in [(a, a1), (a, a2), (a1, a2)] {
        let shape = b.overlap(x, y).map(|r| r.shape(roots));
        if !matches!(shape, Some(RegionShape::HalfApartment(_))) {
            return Err(InfinityError::NotFound(format!("apartments {x} and {y} do not meet in a half-apartment")));
        }
    }
    let triple = triple_intersection(b, a, a1, a2).shape(roots);
    if !matches!(triple, RegionShape::Hyperplane { .. }) {
        return Err(InfinityError::NotFound(format!("triple intersection is {}", triple.label())));
    }
    Ok(Sundial { apartments: [a1, a2], opposite: [found[0].1, found[1].1], triple: describe_shape(&triple) })
}

pub fn describe_shape(s: &RegionShape) -> String {
    match s {
        RegionShape::Hyperplane { root, k } => format!("hyperplane beta{root}(x) = {k}"),
        RegionShape::HalfApartment(h) => format!("half-apartment beta{}(x) {} {}", h.root, h.sense.symbol(), h.k),
        other => other.label().to_string(),
    }
}

/// Given a minimal gallery of chambers at infinity whose projections to
/// Δ_xX also form a minimal gallery, finds an apartment containing `x` and
/// all of the `x`-based representatives.
pub fn lift_gallery(b: &BuildingInstance, x: &BPoint, gallery: &[ParallelClass]) -> Result<Option<usize>, InfinityError> {
    if gallery.is_empty() {
        return Err(InfinityError::Precondition("empty gallery".into()));
    }
    let bc = boundary_complex(b);
    let idx: Vec<usize> = gallery
        .iter()
        .map(|c| bc.chamber_index(c).ok_or_else(|| InfinityError::Precondition("not a chamber at infinity".into())))
        .collect::<Result<_, _>>()?;
    let dist = bc.system.distances();
    let k = gallery.len() - 1;
    for w in idx.windows(2) {
        if dist[w[0]][w[1]] != 1 {
            return Err(InfinityError::Precondition("consecutive chambers are not adjacent".into()));
        }
    }
    if dist[idx[0]][idx[k]] != k {
        return Err(InfinityError::Precondition("gallery is not minimal at infinity".into()));
    }
    let germs = gallery.iter().map(|c| project_pi_x(b, c, x)).collect::<Result<Vec<_>, _>>()?;
    if delta_x(b, &germs[0], &germs[k])? != k {
        return Err(InfinityError::Precondition("projected gallery is not minimal in the residue".into()));
    }
    for (a, _) in b.charts_containing(x) {
        if gallery.iter().all(|c| c.in_apartment(b, a)) {
            return Ok(Some(a));
        }
    }
    Ok(None)
}
