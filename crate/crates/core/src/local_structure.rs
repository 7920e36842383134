//! Germs of Weyl simplices at a point and the residue building Δ_xX.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::at_infinity::ParallelClass;
use crate::atlas::{BPoint, BuildingInstance};
use crate::chamber_system::ChamberSystem;
use crate::coxeter::{FaceMask, WeylId};
use crate::model_space::{ModelError, Point, WeylSimplex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LocalError {
    #[error("point {0} does not lie in apartment {1}")]
    NotInChart(BPoint, usize),
    #[error("germs are based at different points {0} and {1}")]
    BaseMismatch(BPoint, BPoint),
    #[error("germ is not a full chamber")]
    NotAChamber,
    #[error("no chart contains both {0} and a representative of the class")]
    NoRepresentative(BPoint),
    #[error("germ is not a chamber of this residue")]
    Unknown,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Germ at its base point of a Weyl simplex, in canonical form: the least
/// chart containing the germ, with the chamber element reduced to the least
/// coset representative for its face.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Germ {
    pub chart: usize,
    pub simplex: WeylSimplex,
}

impl Germ {
    /// Canonical germ of the simplex `s` given in chart `chart`.
    pub fn new(b: &BuildingInstance, chart: usize, s: &WeylSimplex) -> Germ {
        let group = b.model().group();
        let s = WeylSimplex { chamber: group.coset_rep(s.chamber, s.face), ..s.clone() };
        b.locate_germ(chart, &s)
            .into_iter()
            .enumerate()
            .find_map(|(a, t)| t.map(|t| Germ { chart: a, simplex: t }))
            .unwrap_or(Germ { chart, simplex: s })
    }

    /// Germ at `x` of the chamber (or face) `w·C_f` taken in the chart of `x`.
    pub fn at(b: &BuildingInstance, x: &BPoint, w: WeylId, face: FaceMask) -> Germ {
        Germ::new(b, x.chart, &WeylSimplex { base: x.local.clone(), chamber: w, face })
    }

    pub fn base(&self) -> BPoint {
        BPoint::new(self.chart, self.simplex.base.clone())
    }

    pub fn is_chamber(&self) -> bool {
        self.simplex.face == FaceMask::CHAMBER
    }

    /// Parses `chart:(coords):word` where `word` is `e` or simple
    /// reflection indices joined by dots; the germ is a full chamber.
    pub fn parse(b: &BuildingInstance, text: &str) -> Result<Germ, ModelError> {
        let bad = |why: &str| ModelError::Parse(text.into(), why.into());
        let (point, word) = text.rsplit_once(':').ok_or_else(|| bad("expected chart:(coords):word"))?;
        let x = BPoint::parse(b.model().spec(), point)?;
        b.model().check_point(&x.local)?;
        if x.chart >= b.apartment_count() {
            return Err(bad("chart index out of range"));
        }
        let w = b.model().group().parse_word(word).ok_or_else(|| bad("bad Weyl word"))?;
        Ok(Germ::at(b, &x, w, FaceMask::CHAMBER))
    }

    pub fn label(&self, b: &BuildingInstance) -> String {
        let word = b.model().group().word_label(self.simplex.chamber);
        if self.is_chamber() {
            format!("{}:{}:{}", self.chart, self.simplex.base, word)
        } else {
            format!("{}:{}:{}/{}", self.chart, self.simplex.base, word, self.simplex.face.0)
        }
    }
}

impl Serialize for Germ {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Germ", 4)?;
        st.serialize_field("chart", &self.chart)?;
        st.serialize_field("base", &self.simplex.base)?;
        st.serialize_field("chamber", &self.simplex.chamber.0)?;
        st.serialize_field("face", &self.simplex.face.0)?;
        st.end()
    }
}

/// Do the two simplices (in the given charts) have the same germ? Their
/// bases must be the same point of the building.
pub fn germ_equal(
    b: &BuildingInstance,
    s_chart: usize,
    s: &WeylSimplex,
    t_chart: usize,
    t: &WeylSimplex,
) -> Result<bool, LocalError> {
    let (x, y) = (BPoint::new(s_chart, s.base.clone()), BPoint::new(t_chart, t.base.clone()));
    if !b.same_point(&x, &y) {
        return Err(LocalError::BaseMismatch(x, y));
    }
    Ok(s.face == t.face && Germ::new(b, s_chart, s) == Germ::new(b, t_chart, t))
}

/// The residue Δ_xX: chambers are the chamber germs at `x`, apartments
/// come from the atlas apartments through `x`.
#[derive(Debug, Clone)]
pub struct ResidueComplex {
    pub at: BPoint,
    /// Charts containing `x` with the local coordinates of `x`.
    pub charts: Vec<(usize, Point)>,
    /// Canonical chamber germs, sorted.
    pub chambers: Vec<Germ>,
    /// Canonical panel germs, sorted.
    pub panels: Vec<Germ>,
    pub system: ChamberSystem,
    /// Chart behind each apartment of `system`.
    pub apartment_charts: Vec<usize>,
    pub verdict: Result<(), String>,
}

impl ResidueComplex {
    pub fn chamber_index(&self, g: &Germ) -> Option<usize> {
        self.chambers.binary_search(g).ok()
    }

    pub fn is_building(&self) -> bool {
        self.verdict.is_ok()
    }

    pub fn distance(&self, g1: &Germ, g2: &Germ) -> Result<usize, LocalError> {
        let a = self.chamber_index(g1).ok_or(LocalError::Unknown)?;
        let c = self.chamber_index(g2).ok_or(LocalError::Unknown)?;
        Ok(self.system.distances()[a][c])
    }

    /// Adjacency lists of the chamber graph.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        self.system.neighbours()
    }
}

/// Builds Δ_xX and checks that it is a spherical building of the type of
/// the instance.
pub fn residue(b: &BuildingInstance, x: &BPoint) -> Result<ResidueComplex, LocalError> {
    let model = b.model();
    model.check_point(&x.local)?;
    if x.chart >= b.apartment_count() {
        return Err(LocalError::NotInChart(x.clone(), x.chart));
    }
    let group = model.group();
    let rank = model.rank();
    let charts = b.charts_containing(x);
    let mut chamber_of: BTreeMap<(usize, WeylId), Germ> = BTreeMap::new();
    let mut panel_of: BTreeMap<(usize, WeylId, usize), Germ> = BTreeMap::new();
    for (a, xa) in &charts {
        for w in group.ids() {
            let s = WeylSimplex::chamber(xa.clone(), w);
            chamber_of.insert((*a, w), Germ::new(b, *a, &s));
            for i in 0..rank {
                let face = FaceMask::panel(i);
                let f = WeylSimplex { base: xa.clone(), chamber: group.coset_rep(w, face), face };
                panel_of.insert((*a, w, i), Germ::new(b, *a, &f));
            }
        }
    }
    let mut chambers: Vec<Germ> = chamber_of.values().cloned().collect();
    chambers.sort();
    chambers.dedup();
    let mut panels: Vec<Germ> = panel_of.values().cloned().collect();
    panels.sort();
    panels.dedup();
    let cid = |g: &Germ| chambers.binary_search(g).unwrap();
    let pid = |g: &Germ| panels.binary_search(g).unwrap();
    let mut panel_table = vec![vec![usize::MAX; rank]; chambers.len()];
    let mut conflict = None;
    for (&(a, w, i), p) in &panel_of {
        let c = cid(&chamber_of[&(a, w)]);
        let id = pid(p);
        if panel_table[c][i] != usize::MAX && panel_table[c][i] != id {
            conflict = Some(format!("chamber {c} has two different type-{i} panels"));
        }
        panel_table[c][i] = id;
    }
    let apartments: Vec<Vec<usize>> = charts
        .iter()
        .map(|(a, _)| group.ids().map(|w| cid(&chamber_of[&(*a, w)])).collect())
        .collect();
    let system = ChamberSystem { chambers: chambers.len(), apartments, panels: panel_table };
    let verdict = match conflict {
        Some(c) => Err(c),
        None => system.check(group),
    };
    Ok(ResidueComplex {
        at: x.clone(),
        apartment_charts: charts.iter().map(|(a, _)| *a).collect(),
        charts,
        chambers,
        panels,
        system,
        verdict,
    })
}

fn same_base(b: &BuildingInstance, g1: &Germ, g2: &Germ) -> Result<(), LocalError> {
    if !b.same_point(&g1.base(), &g2.base()) {
        return Err(LocalError::BaseMismatch(g1.base(), g2.base()));
    }
    if !g1.is_chamber() || !g2.is_chamber() {
        return Err(LocalError::NotAChamber);
    }
    Ok(())
}

/// Gallery distance between two chamber germs in Δ_xX.
pub fn delta_x(b: &BuildingInstance, g1: &Germ, g2: &Germ) -> Result<usize, LocalError> {
    same_base(b, g1, g2)?;
    residue(b, &g1.base())?.distance(g1, g2)
}

/// Opposition in Δ_xX: distance equal to the Coxeter diameter.
pub fn opposite_at(b: &BuildingInstance, g1: &Germ, g2: &Germ) -> Result<bool, LocalError> {
    Ok(delta_x(b, g1, g2)? == b.model().group().diameter())
}

/// The germ at `x` of the `x`-based Weyl chamber in the class `c`.
pub fn project_pi_x(b: &BuildingInstance, c: &ParallelClass, x: &BPoint) -> Result<Germ, LocalError> {
    let located = c.locate(b);
    for (a, xa) in b.charts_containing(x) {
        if let Some(w) = located[a] {
            return Ok(Germ::new(b, a, &WeylSimplex { base: xa, chamber: w, face: c.face }));
        }
    }
    Err(LocalError::NoRepresentative(x.clone()))
}

/// Are two residues isomorphic chamber complexes? The charts of `small`
/// must be a prefix of those of `large` (as after exchange closure), so
/// canonical germs can be compared directly.
pub fn residues_isomorphic(small: &ResidueComplex, large: &ResidueComplex) -> bool {
    if small.chambers != large.chambers {
        return false;
    }
    small.system.neighbours() == large.system.neighbours()
}
