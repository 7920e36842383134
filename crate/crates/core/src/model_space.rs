//! The model apartment 𝔸(Φ,Λ): points, the affine Weyl group, half-spaces,
//! convex regions, Weyl simplices and the two invariant Λ-metrics.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::coxeter::{eval, FaceMask, Matrix, RootSystem, RootType, WeylGroup, WeylId};
use crate::lambda::{LambdaError, LambdaSpec, Scalar, Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("point has {got} coordinates, model space has rank {rank}")]
    Rank { got: usize, rank: usize },
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error("cannot parse point {0:?}: {1}")]
    Parse(String, String),
    #[error("affine map is not invertible")]
    Singular,
}

/// Which translations are allowed in the affine Weyl group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TMode {
    /// All of 𝔸.
    #[serde(rename = "full")]
    Full,
    /// The coroot lattice tensored with Λ.
    #[serde(rename = "lattice")]
    Lattice,
}

impl FromStr for TMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(TMode::Full),
            "lattice" => Ok(TMode::Lattice),
            other => Err(format!("unknown t_mode {other:?} (expected full or lattice)")),
        }
    }
}

impl fmt::Display for TMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TMode::Full => "full",
            TMode::Lattice => "lattice",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricKind {
    /// `Σ_{β∈Φ⁺} |β(x−y)|`
    #[serde(rename = "d1")]
    D1,
    /// `max_{β∈Φ⁺} |β(x−y)|`
    #[serde(rename = "dinf")]
    DInf,
}

impl MetricKind {
    pub const BOTH: [MetricKind; 2] = [MetricKind::D1, MetricKind::DInf];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::D1 => "d1",
            MetricKind::DInf => "dinf",
        }
    }
}

impl FromStr for MetricKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "d1" => Ok(MetricKind::D1),
            "dinf" => Ok(MetricKind::DInf),
            other => Err(format!("unknown metric {other:?} (expected d1 or dinf)")),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A point of 𝔸 in coroot coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    coords: SmallVec<[Scalar; 2]>,
}

impl Point {
    pub fn new(coords: impl IntoIterator<Item = Scalar>) -> Self {
        let coords: SmallVec<[Scalar; 2]> = coords.into_iter().collect();
        debug_assert!(coords.windows(2).all(|w| w[0].spec() == w[1].spec()));
        Point { coords }
    }

    pub fn origin(rank: usize, spec: LambdaSpec) -> Self {
        Point { coords: SmallVec::from_elem(Scalar::zero(spec), rank) }
    }

    pub fn from_ints(spec: LambdaSpec, values: &[i64]) -> Self {
        Point::new(values.iter().map(|&v| Scalar::from_int(spec, v)))
    }

    pub fn coords(&self) -> &[Scalar] {
        &self.coords
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn add(&self, other: &Point) -> Point {
        Point::new(self.coords.iter().zip(&other.coords).map(|(a, b)| *a + *b))
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point::new(self.coords.iter().zip(&other.coords).map(|(a, b)| *a - *b))
    }

    pub fn scale(&self, factor: Q) -> Point {
        Point::new(self.coords.iter().map(|a| a.scale(factor)))
    }

    pub fn midpoint(&self, other: &Point) -> Point {
        self.add(other).scale(Q::new(1, 2))
    }

    /// Adds a rational direction vector scaled by a Λ-value.
    pub fn offset(&self, direction: &[Q], amount: Scalar) -> Point {
        Point::new(self.coords.iter().zip(direction).map(|(c, d)| *c + amount.scale(*d)))
    }

    pub fn transform(&self, m: &Matrix) -> Point {
        let n = self.coords.len();
        let spec = self.spec();
        Point::new((0..n).map(|i| {
            (0..n).fold(Scalar::zero(spec), |acc, k| acc + self.coords[k].scale(m.get(i, k)))
        }))
    }

    /// Evaluates a rational linear functional.
    pub fn pair(&self, functional: &[Q]) -> Scalar {
        let spec = self.spec();
        self.coords.iter().zip(functional).fold(Scalar::zero(spec), |acc, (c, f)| acc + c.scale(*f))
    }

    pub fn spec(&self) -> LambdaSpec {
        self.coords.first().map(|c| c.spec()).unwrap_or(LambdaSpec::Rationals)
    }

    pub fn parse(spec: LambdaSpec, text: &str) -> Result<Point, ModelError> {
        let t = text.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| ModelError::Parse(text.into(), "expected (c1,...,cn)".into()))?;
        let parts = split_top_level(inner);
        let coords = parts
            .iter()
            .map(|p| Scalar::parse(spec, p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Point::new(coords))
    }
}

/// Splits on commas that are not nested inside parentheses.
pub(crate) fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                cur.push(ch);
            }
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
            }
            _ => cur.push(ch),
        }
    }
    if !cur.trim().is_empty() || !out.is_empty() {
        out.push(cur);
    }
    out
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `x ↦ linear·x + translation`. Elements of Ŵ_T have a Weyl matrix as
/// linear part; arbitrary invertible matrices are representable so that
/// malformed atlases can be loaded and rejected by validation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct AffineMap {
    pub linear: Matrix,
    pub translation: Point,
}

impl AffineMap {
    pub fn identity(rank: usize, spec: LambdaSpec) -> Self {
        AffineMap { linear: Matrix::identity(rank), translation: Point::origin(rank, spec) }
    }

    pub fn new(linear: Matrix, translation: Point) -> Self {
        AffineMap { linear, translation }
    }

    pub fn apply(&self, x: &Point) -> Point {
        x.transform(&self.linear).add(&self.translation)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            linear: self.linear.mul(&other.linear),
            translation: self.apply(&other.translation),
        }
    }

    pub fn inverse(&self) -> Result<AffineMap, ModelError> {
        let inv = self.linear.inverse().ok_or(ModelError::Singular)?;
        let t = self.translation.transform(&inv).scale(-Q::one());
        Ok(AffineMap { linear: inv, translation: t })
    }

    pub fn is_identity(&self) -> bool {
        self.linear == Matrix::identity(self.linear.dim())
            && self.translation.coords().iter().all(|c| c.is_zero())
    }
}

impl fmt::Debug for AffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x ↦ {:?}·x + {}", self.linear, self.translation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
}

impl Sense {
    pub fn flip(self) -> Sense {
        match self {
            Sense::Ge => Sense::Le,
            Sense::Le => Sense::Ge,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Ge => ">=",
            Sense::Le => "<=",
        }
    }
}

/// `{x : β(x) ≥ k}` or `{x : β(x) ≤ k}` for a positive root `β`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfSpace {
    /// Index into Φ⁺.
    pub root: usize,
    pub sense: Sense,
    pub k: Scalar,
}

impl HalfSpace {
    pub fn new(root: usize, sense: Sense, k: Scalar) -> Self {
        HalfSpace { root, sense, k }
    }

    pub fn complement_closure(&self) -> HalfSpace {
        HalfSpace { root: self.root, sense: self.sense.flip(), k: self.k }
    }
}

impl fmt::Display for HalfSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "β{}(x) {} {}", self.root, self.sense.symbol(), self.k)
    }
}

/// `normal·x ≥ k`, possibly strict. Strict constraints only appear inside
/// feasibility queries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Ineq {
    normal: SmallVec<[Q; 2]>,
    k: Scalar,
    strict: bool,
}

/// Fourier–Motzkin feasibility over the ordered ℚ-vector space ℚ⊗Λ.
/// Returns a witness point if the system is feasible.
fn fourier_motzkin(ineqs: &[Ineq], nvars: usize, spec: LambdaSpec) -> Option<Vec<Scalar>> {
    if nvars == 0 {
        let ok = ineqs.iter().all(|c| {
            let zero = Scalar::zero(spec);
            if c.strict {
                zero > c.k
            } else {
                zero >= c.k
            }
        });
        return ok.then(Vec::new);
    }
    let v = nvars - 1;
    let mut keep = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for c in ineqs {
        match c.normal[v].cmp(&Q::zero()) {
            Ordering::Equal => keep.push(c.clone()),
            Ordering::Greater => lower.push(c),
            Ordering::Less => upper.push(c),
        }
    }
    let mut reduced: Vec<Ineq> = keep
        .into_iter()
        .map(|c| Ineq { normal: c.normal[..v].iter().copied().collect(), k: c.k, strict: c.strict })
        .collect();
    for p in &lower {
        for n in &upper {
            let a = p.normal[v];
            let b = -n.normal[v];
            let normal = (0..v).map(|j| p.normal[j] / a + n.normal[j] / b).collect();
            reduced.push(Ineq {
                normal,
                k: p.k.scale(Q::one() / a) + n.k.scale(Q::one() / b),
                strict: p.strict || n.strict,
            });
        }
    }
    let mut sol = fourier_motzkin(&reduced, v, spec)?;
    let rest = |c: &Ineq| {
        (0..v).fold(Scalar::zero(spec), |acc, j| acc + sol[j].scale(c.normal[j]))
    };
    // Bounds on x_v given the earlier coordinates.
    let lo = lower
        .iter()
        .map(|c| ((c.k - rest(c)).scale(Q::one() / c.normal[v]), c.strict))
        .max_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let hi = upper
        .iter()
        .map(|c| ((c.k - rest(c)).scale(Q::one() / c.normal[v]), c.strict))
        .min_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    let one = Scalar::from_int(spec, 1);
    let value = match (lo, hi) {
        (Some((l, ls)), Some((h, hs))) => {
            if l == h {
                if ls || hs {
                    return None;
                }
                l
            } else if l < h {
                (l + h).scale(Q::new(1, 2))
            } else {
                return None;
            }
        }
        (Some((l, ls)), None) => {
            if ls {
                l + one
            } else {
                l
            }
        }
        (None, Some((h, hs))) => {
            if hs {
                h - one
            } else {
                h
            }
        }
        (None, None) => Scalar::zero(spec),
    };
    sol.push(value);
    Some(sol)
}

/// Shape of a convex region, as far as the building axioms care.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionShape {
    Empty,
    All,
    HalfApartment(HalfSpace),
    /// The wall `β(x) = k`.
    Hyperplane { root: usize, k: Scalar },
    Other,
}

impl RegionShape {
    pub fn label(&self) -> &'static str {
        match self {
            RegionShape::Empty => "empty",
            RegionShape::All => "all",
            RegionShape::HalfApartment(_) => "half-apartment",
            RegionShape::Hyperplane { .. } => "hyperplane",
            RegionShape::Other => "other",
        }
    }
}

/// Finite intersection of closed half-spaces.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ConvexRegion {
    rank: usize,
    spec: LambdaSpec,
    ineqs: Vec<Ineq>,
}

impl ConvexRegion {
    pub fn all(rank: usize, spec: LambdaSpec) -> Self {
        ConvexRegion { rank, spec, ineqs: Vec::new() }
    }

    pub fn from_halves(roots: &RootSystem, spec: LambdaSpec, halves: &[HalfSpace]) -> Self {
        let mut r = ConvexRegion::all(roots.rank(), spec);
        for h in halves {
            r.push_half(roots, h);
        }
        r
    }

    fn push_half(&mut self, roots: &RootSystem, h: &HalfSpace) {
        let f = &roots.root(h.root).functional;
        let ineq = match h.sense {
            Sense::Ge => Ineq { normal: f.iter().copied().collect(), k: h.k, strict: false },
            Sense::Le => Ineq { normal: f.iter().map(|x| -*x).collect(), k: -h.k, strict: false },
        };
        self.ineqs.push(ineq);
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn spec(&self) -> LambdaSpec {
        self.spec
    }

    pub fn constraint_count(&self) -> usize {
        self.ineqs.len()
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.ineqs.iter().all(|c| x.pair(&c.normal) >= c.k)
    }

    pub fn intersect(&self, other: &ConvexRegion) -> ConvexRegion {
        let mut ineqs = self.ineqs.clone();
        ineqs.extend(other.ineqs.iter().cloned());
        ConvexRegion { rank: self.rank, spec: self.spec, ineqs }
    }

    pub fn witness_point(&self) -> Option<Point> {
        fourier_motzkin(&self.ineqs, self.rank, self.spec).map(Point::new)
    }

    pub fn is_empty(&self) -> bool {
        self.witness_point().is_none()
    }

    fn implies(&self, c: &Ineq) -> bool {
        let mut sys = self.ineqs.clone();
        sys.push(Ineq {
            normal: c.normal.iter().map(|x| -*x).collect(),
            k: -c.k,
            strict: !c.strict,
        });
        fourier_motzkin(&sys, self.rank, self.spec).is_none()
    }

    /// A point of the region together with a basis of the direction space
    /// of its affine hull. `None` for the empty region.
    pub fn affine_hull(&self) -> Option<(Point, Vec<Vec<Q>>)> {
        let p0 = self.witness_point()?;
        let equalities: Vec<Vec<Q>> = self
            .ineqs
            .iter()
            .filter(|c| {
                let mut sys = self.ineqs.clone();
                sys.push(Ineq { normal: c.normal.clone(), k: c.k, strict: true });
                fourier_motzkin(&sys, self.rank, self.spec).is_none()
            })
            .map(|c| c.normal.to_vec())
            .collect();
        Some((p0, nullspace(&equalities, self.rank)))
    }

    /// Do two affine maps agree at every point of the region?
    pub fn maps_agree(&self, m1: &AffineMap, m2: &AffineMap) -> bool {
        let Some((p0, dirs)) = self.affine_hull() else {
            return true;
        };
        m1.apply(&p0) == m2.apply(&p0) && dirs.iter().all(|d| m1.linear.apply(d) == m2.linear.apply(d))
    }

    pub fn is_subset_of(&self, other: &ConvexRegion) -> bool {
        if self.is_empty() {
            return true;
        }
        other.ineqs.iter().all(|c| self.implies(c))
    }

    pub fn same_set(&self, other: &ConvexRegion) -> bool {
        self.is_subset_of(other) && other.is_subset_of(self)
    }

    pub fn is_everything(&self) -> bool {
        ConvexRegion::all(self.rank, self.spec).is_subset_of(self)
    }

    /// Removes redundant constraints and sorts the rest by (root, sense, k).
    /// Empty regions keep a single contradictory constraint.
    pub fn canonical(&self, roots: &RootSystem) -> ConvexRegion {
        if self.is_empty() {
            let spec = self.spec;
            let contradiction = Ineq {
                normal: SmallVec::from_elem(Q::zero(), self.rank),
                k: Scalar::from_int(spec, 1),
                strict: false,
            };
            return ConvexRegion { rank: self.rank, spec, ineqs: vec![contradiction] };
        }
        let mut ineqs = self.ineqs.clone();
        let mut i = 0;
        while i < ineqs.len() {
            let c = ineqs.remove(i);
            let rest = ConvexRegion { rank: self.rank, spec: self.spec, ineqs: ineqs.clone() };
            if !rest.implies(&c) {
                ineqs.insert(i, c);
                i += 1;
            }
        }
        let mut out = ConvexRegion { rank: self.rank, spec: self.spec, ineqs };
        out.ineqs.sort_by_key(|c| sort_key(roots, c));
        out
    }

    /// Constraints as root half-spaces; `None` for constraints whose normal
    /// is not a root direction.
    pub fn halves(&self, roots: &RootSystem) -> Vec<Option<HalfSpace>> {
        self.ineqs.iter().map(|c| as_half(roots, c)).collect()
    }

    /// True if every constraint is a wall of a root.
    pub fn walls_are_roots(&self, roots: &RootSystem) -> bool {
        self.ineqs.iter().all(|c| as_half(roots, c).is_some() || c.normal.iter().all(|x| x.is_zero()))
    }

    pub fn shape(&self, roots: &RootSystem) -> RegionShape {
        if self.is_empty() {
            return RegionShape::Empty;
        }
        let can = self.canonical(roots);
        let halves: Vec<Option<HalfSpace>> = can.halves(roots);
        match halves.as_slice() {
            [] => RegionShape::All,
            [Some(h)] => RegionShape::HalfApartment(h.clone()),
            [Some(a), Some(b)] if a.root == b.root && a.k == b.k && a.sense != b.sense => {
                RegionShape::Hyperplane { root: a.root, k: a.k }
            }
            _ => RegionShape::Other,
        }
    }

    /// `{ m(x) : x ∈ self }`.
    pub fn image(&self, m: &AffineMap) -> Result<ConvexRegion, ModelError> {
        let inv = m.inverse()?;
        Ok(self.preimage(&inv))
    }

    /// `{ x : m(x) ∈ self }`.
    pub fn preimage(&self, m: &AffineMap) -> ConvexRegion {
        let ineqs = self
            .ineqs
            .iter()
            .map(|c| Ineq {
                normal: m.linear.pull_back(&c.normal).into_iter().collect(),
                k: c.k - m.translation.pair(&c.normal),
                strict: c.strict,
            })
            .collect();
        ConvexRegion { rank: self.rank, spec: self.spec, ineqs }
    }

    /// True if every ray lies in the recession cone, i.e. every translate
    /// of the cone based in the region stays in the region.
    pub fn recedes_along(&self, rays: &[Vec<Q>]) -> bool {
        self.ineqs
            .iter()
            .all(|c| rays.iter().all(|r| eval(&c.normal, r) >= Q::zero()))
    }

    /// Some translate of the cone spanned by `rays` lies in the region; the
    /// returned apex is one such base point.
    pub fn contains_cone(&self, rays: &[Vec<Q>]) -> Option<Point> {
        if !self.recedes_along(rays) {
            return None;
        }
        self.witness_point()
    }

    /// `base + cone(rays)` lies entirely in the region.
    pub fn contains_based_cone(&self, base: &Point, rays: &[Vec<Q>]) -> bool {
        self.contains(base) && self.recedes_along(rays)
    }

    /// Some ε-ball intersection of `base + cone(rays)` lies in the region:
    /// every constraint tight at `base` must be nondecreasing along the
    /// rays.
    pub fn contains_germ(&self, base: &Point, rays: &[Vec<Q>]) -> bool {
        self.ineqs.iter().all(|c| {
            let v = base.pair(&c.normal);
            match v.cmp(&c.k) {
                Ordering::Less => false,
                Ordering::Greater => true,
                Ordering::Equal => rays.iter().all(|r| eval(&c.normal, r) >= Q::zero()),
            }
        })
    }

    /// A radius ε such that `(base + cone) ∩ B_ε(base)` lies in the region,
    /// for either metric. Uses `|β(v)| ≤ dinf(v) ≤ d1(v)` for root normals.
    pub fn germ_radius(&self, roots: &RootSystem, base: &Point, rays: &[Vec<Q>]) -> Option<Scalar> {
        if !self.contains_germ(base, rays) {
            return None;
        }
        let mut eps: Option<Scalar> = None;
        for c in &self.ineqs {
            let slack = base.pair(&c.normal) - c.k;
            if slack.is_zero() {
                continue;
            }
            let h = as_half(roots, c)?;
            let _ = h;
            eps = Some(match eps {
                Some(e) if e <= slack => e,
                _ => slack,
            });
        }
        Some(eps.unwrap_or_else(|| Scalar::infinitesimal(self.spec)))
    }
}

/// Basis of `{v : row·v = 0 for every row}`.
pub(crate) fn nullspace(rows: &[Vec<Q>], n: usize) -> Vec<Vec<Q>> {
    let mut m: Vec<Vec<Q>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let lead = m[r][col];
        for x in m[r].iter_mut() {
            *x /= lead;
        }
        for i in 0..m.len() {
            if i != r && !m[i][col].is_zero() {
                let f = m[i][col];
                for c in 0..n {
                    let v = m[r][c];
                    m[i][c] -= f * v;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    (0..n)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Q::zero(); n];
            v[free] = Q::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[row][free];
            }
            v
        })
        .collect()
}

fn as_half(roots: &RootSystem, c: &Ineq) -> Option<HalfSpace> {
    let idx = roots.index_of_functional(&c.normal)?;
    let (root, neg) = roots.positive_part(idx);
    Some(if neg {
        HalfSpace { root, sense: Sense::Le, k: -c.k }
    } else {
        HalfSpace { root, sense: Sense::Ge, k: c.k }
    })
}

fn sort_key(roots: &RootSystem, c: &Ineq) -> (usize, Sense, Scalar, Vec<Q>) {
    match as_half(roots, c) {
        Some(h) => (h.root, h.sense, h.k, Vec::new()),
        None => (usize::MAX, Sense::Ge, c.k, c.normal.to_vec()),
    }
}

impl fmt::Debug for ConvexRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ineqs.is_empty() {
            return f.write_str("{all}");
        }
        let parts: Vec<String> = self
            .ineqs
            .iter()
            .map(|c| {
                let n: Vec<String> = c.normal.iter().map(crate::lambda::fmt_q).collect();
                format!("[{}]·x {} {}", n.join(","), if c.strict { ">" } else { ">=" }, c.k)
            })
            .collect();
        write!(f, "{{{}}}", parts.join(" ∧ "))
    }
}

/// `base + w·(face of C_f)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeylSimplex {
    pub base: Point,
    pub chamber: WeylId,
    pub face: FaceMask,
}

impl WeylSimplex {
    pub fn chamber(base: Point, chamber: WeylId) -> Self {
        WeylSimplex { base, chamber, face: FaceMask::CHAMBER }
    }
}

/// 𝔸(Φ,Λ) together with its affine Weyl group data.
#[derive(Debug, Clone)]
pub struct ModelSpace {
    roots: RootSystem,
    group: WeylGroup,
    spec: LambdaSpec,
    t_mode: TMode,
    /// `rays[w][i] = w·ω_i∨`.
    rays: Vec<Vec<Vec<Q>>>,
    simple_functionals: Vec<Vec<Q>>,
}

impl ModelSpace {
    pub fn new(root_type: RootType, spec: LambdaSpec, t_mode: TMode) -> Self {
        let roots = RootSystem::build(root_type);
        let group = WeylGroup::enumerate(&roots);
        let coweights = roots.fundamental_coweights();
        let rays = group
            .ids()
            .map(|w| coweights.iter().map(|om| group.matrix(w).apply(om)).collect())
            .collect();
        let simple_functionals = (0..roots.rank()).map(|i| roots.simple_root(i).functional.clone()).collect();
        ModelSpace { roots, group, spec, t_mode, rays, simple_functionals }
    }

    pub fn roots(&self) -> &RootSystem {
        &self.roots
    }

    pub fn group(&self) -> &WeylGroup {
        &self.group
    }

    pub fn spec(&self) -> LambdaSpec {
        self.spec
    }

    pub fn t_mode(&self) -> TMode {
        self.t_mode
    }

    pub fn rank(&self) -> usize {
        self.roots.rank()
    }

    pub fn root_type(&self) -> RootType {
        self.roots.root_type()
    }

    pub fn origin(&self) -> Point {
        Point::origin(self.rank(), self.spec)
    }

    pub fn scalar(&self, q: Q) -> Scalar {
        Scalar::from_q(self.spec, q)
    }

    pub fn point(&self, values: &[Q]) -> Point {
        Point::new(values.iter().map(|v| Scalar::from_q(self.spec, *v)))
    }

    pub fn check_point(&self, x: &Point) -> Result<(), ModelError> {
        if x.rank() != self.rank() {
            return Err(ModelError::Rank { got: x.rank(), rank: self.rank() });
        }
        for c in x.coords() {
            if c.spec() != self.spec {
                return Err(LambdaError::SpecMismatch(c.spec(), self.spec).into());
            }
        }
        Ok(())
    }

    pub fn root_value(&self, root: usize, x: &Point) -> Scalar {
        x.pair(&self.roots.root(root).functional)
    }

    /// Affine map with Weyl linear part.
    pub fn weyl_map(&self, w: WeylId, translation: Point) -> AffineMap {
        AffineMap::new(self.group.matrix(w).clone(), translation)
    }

    /// Affine reflection in the wall `β(x) = k`.
    pub fn wall_reflection(&self, root: usize, k: Scalar) -> AffineMap {
        let r = self.roots.root(root);
        let rank = self.rank();
        let mut m = Matrix::identity(rank);
        for i in 0..rank {
            for j in 0..rank {
                m.set(i, j, m.get(i, j) - r.coroot[i] * r.functional[j]);
            }
        }
        let t = Point::new(r.coroot.iter().map(|c| k.scale(*c)));
        AffineMap::new(m, t)
    }

    /// The Weyl part of an affine map, if its linear part lies in W̄.
    pub fn weyl_part(&self, m: &AffineMap) -> Option<WeylId> {
        self.group.lookup(&m.linear)
    }

    /// Does the translation lie in T for this instance's T-mode?
    pub fn translation_allowed(&self, t: &Point) -> bool {
        match self.t_mode {
            TMode::Full => true,
            TMode::Lattice => t.coords().iter().all(|c| c.in_group()),
        }
    }

    pub fn in_affine_weyl_group(&self, m: &AffineMap) -> bool {
        self.weyl_part(m).is_some() && self.translation_allowed(&m.translation)
    }

    pub fn apply(&self, m: &AffineMap, x: &Point) -> Result<Point, ModelError> {
        self.check_point(x)?;
        self.check_point(&m.translation)?;
        Ok(m.apply(x))
    }

    /// Extreme rays of the direction cone `w·(face of C_f)`.
    pub fn rays(&self, w: WeylId, face: FaceMask) -> Vec<Vec<Q>> {
        (0..self.rank())
            .filter(|&i| !face.contains(i))
            .map(|i| self.rays[w.0][i].clone())
            .collect()
    }

    pub fn simplex_rays(&self, s: &WeylSimplex) -> Vec<Vec<Q>> {
        self.rays(s.chamber, s.face)
    }

    /// Membership of a point in a Weyl simplex.
    pub fn simplex_contains(&self, s: &WeylSimplex, x: &Point) -> bool {
        let winv = self.group.matrix(self.group.inverse(s.chamber));
        let u = x.sub(&s.base).transform(winv);
        (0..self.rank()).all(|i| {
            let v = u.pair(&self.simple_functionals[i]);
            if s.face.contains(i) {
                v.is_zero()
            } else {
                !v.is_negative()
            }
        })
    }

    /// Image of a simplex under an affine map with Weyl linear part.
    pub fn map_simplex(&self, m: &AffineMap, s: &WeylSimplex) -> Option<WeylSimplex> {
        let w = self.weyl_part(m)?;
        Some(WeylSimplex {
            base: m.apply(&s.base),
            chamber: self.group.coset_rep(self.group.mul(w, s.chamber), s.face),
            face: s.face,
        })
    }

    pub fn metric(&self, x: &Point, y: &Point, which: MetricKind) -> Scalar {
        let d = x.sub(y);
        let values = self.roots.positive_roots().iter().map(|r| d.pair(&r.functional).abs());
        match which {
            MetricKind::D1 => values.fold(Scalar::zero(self.spec), |a, b| a + b),
            MetricKind::DInf => values.fold(Scalar::zero(self.spec), |a, b| if b > a { b } else { a }),
        }
    }

    pub fn checked_metric(&self, x: &Point, y: &Point, which: MetricKind) -> Result<Scalar, ModelError> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.metric(x, y, which))
    }

    pub fn segment_membership(&self, x: &Point, y: &Point, z: &Point, which: MetricKind) -> bool {
        self.metric(x, z, which) + self.metric(z, y, which) == self.metric(x, y, which)
    }

    /// Some translate of the direction cone of `s` lies in `region`; returns
    /// an apex witness.
    pub fn region_contains_cone(&self, region: &ConvexRegion, s: &WeylSimplex) -> Option<Point> {
        region.contains_cone(&self.simplex_rays(s))
    }

    pub fn germ_in_region(&self, region: &ConvexRegion, s: &WeylSimplex) -> bool {
        region.contains_germ(&s.base, &self.simplex_rays(s))
    }

    pub fn region(&self, halves: &[HalfSpace]) -> ConvexRegion {
        ConvexRegion::from_halves(&self.roots, self.spec, halves)
    }

    pub fn half(&self, root: usize, sense: Sense, k: Scalar) -> HalfSpace {
        HalfSpace::new(root, sense, k)
    }

    pub fn all(&self) -> ConvexRegion {
        ConvexRegion::all(self.rank(), self.spec)
    }

    /// The chamber element `w` with `w·C_f` containing direction `v` in its
    /// interior, if any.
    pub fn chamber_of_direction(&self, v: &[Q]) -> Option<WeylId> {
        self.group.ids().find(|&w| {
            let winv = self.group.matrix(self.group.inverse(w));
            let u = winv.apply(v);
            self.simple_functionals.iter().all(|f| eval(f, &u).is_positive())
        })
    }
}
