//! Retractions `r_{A,μ}` onto an apartment centered at a chamber germ.

use std::collections::VecDeque;

use thiserror::Error;

use crate::atlas::{BPoint, BuildingInstance};
use crate::lambda::Scalar;
use crate::local_structure::Germ;
use crate::model_space::{AffineMap, MetricKind, ModelSpace, Point, WeylSimplex};
use crate::report::{CheckReport, Witness};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RetractionError {
    #[error("apartment {0} does not exist")]
    NoApartment(usize),
    #[error("the center germ does not lie in apartment {0}")]
    CenterOutside(usize),
    #[error("the center must be a chamber germ")]
    NotAChamber,
    #[error("no chart contains both {0} and the center germ")]
    NoCommonChart(BPoint),
}

/// `r_{A,μ}`: for `y`, pick a chart `g` containing `y` and `μ`; the result
/// is the chart-A point obtained by the (affinely extended) transition
/// from `g` to `A`.
#[derive(Debug, Clone)]
pub struct Retraction {
    pub apartment: usize,
    pub center: Germ,
    /// Charts containing the center, in breadth-first order from the
    /// center's canonical chart.
    order: Vec<usize>,
    /// Transition from each chart containing the center to chart A.
    to_a: Vec<Option<AffineMap>>,
    /// Base point of the center in chart-A coordinates.
    base_in_a: Point,
}

impl Retraction {
    pub fn new(b: &BuildingInstance, apartment: usize, center: &Germ) -> Result<Retraction, RetractionError> {
        if apartment >= b.apartment_count() {
            return Err(RetractionError::NoApartment(apartment));
        }
        if !center.is_chamber() {
            return Err(RetractionError::NotAChamber);
        }
        let located = b.locate_germ(center.chart, &center.simplex);
        let Some(in_a) = &located[apartment] else {
            return Err(RetractionError::CenterOutside(apartment));
        };
        let m = b.apartment_count();
        let mut to_a = vec![None; m];
        for (g, s) in located.iter().enumerate() {
            if s.is_some() {
                // The center lies in both apartments, so they are glued.
                to_a[g] = b.entry(g, apartment).map(|(_, map)| map.clone());
            }
        }
        let mut order = Vec::new();
        let mut seen = vec![false; m];
        let mut queue = VecDeque::from([center.chart]);
        seen[center.chart] = true;
        while let Some(a) = queue.pop_front() {
            if to_a[a].is_some() {
                order.push(a);
            }
            for c in 0..m {
                if !seen[c] && b.entry(a, c).is_some() {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        Ok(Retraction { apartment, center: center.clone(), order, to_a, base_in_a: in_a.base.clone() })
    }

    /// Charts admissible for the definition at a point with the given
    /// locations (as returned by [`BuildingInstance::locate`]).
    pub fn admissible(&self, locs: &[Option<Point>]) -> Vec<usize> {
        self.order.iter().copied().filter(|&g| locs[g].is_some()).collect()
    }

    /// Evaluation through a specific chart.
    pub fn via(&self, g: usize, locs: &[Option<Point>]) -> Option<Point> {
        let map = self.to_a.get(g)?.as_ref()?;
        locs.get(g)?.as_ref().map(|y| map.apply(y))
    }

    /// Chart-A coordinates of `r(y)` given the locations of `y`.
    pub fn apply_located(&self, locs: &[Option<Point>]) -> Option<Point> {
        self.order.iter().find_map(|&g| self.via(g, locs))
    }

    pub fn retract(&self, b: &BuildingInstance, y: &BPoint) -> Result<BPoint, RetractionError> {
        self.apply_located(&b.locate(y))
            .map(|p| BPoint::new(self.apartment, p))
            .ok_or_else(|| RetractionError::NoCommonChart(y.clone()))
    }

    /// Base point of the center in chart-A coordinates.
    pub fn base_in_a(&self) -> &Point {
        &self.base_in_a
    }

    pub fn base(&self) -> BPoint {
        BPoint::new(self.apartment, self.base_in_a.clone())
    }
}

/// A sampled point with its coordinates in every chart.
#[derive(Debug, Clone)]
pub struct Located {
    pub point: BPoint,
    pub locs: Vec<Option<Point>>,
}

impl Located {
    pub fn new(b: &BuildingInstance, point: BPoint) -> Located {
        let locs = b.locate(&point);
        Located { point, locs }
    }

    pub fn mask(&self) -> u64 {
        self.locs.iter().enumerate().filter(|(_, l)| l.is_some()).fold(0, |m, (a, _)| m | (1 << a))
    }
}

/// Distance in X, computed in the first chart containing both points.
pub fn distance_located(b: &BuildingInstance, x: &Located, y: &Located, which: MetricKind) -> Option<Scalar> {
    x.locs
        .iter()
        .zip(&y.locs)
        .find_map(|(p, q)| Some(b.model().metric(p.as_ref()?, q.as_ref()?, which)))
}

pub fn distance(b: &BuildingInstance, x: &BPoint, y: &BPoint, which: MetricKind) -> Option<Scalar> {
    distance_located(b, &Located::new(b, x.clone()), &Located::new(b, y.clone()), which)
}

/// Every admissible chart gives the same value at every sample, and the
/// restriction to each apartment containing the center is the transition
/// isomorphism onto A.
pub fn check_well_defined(r: &Retraction, samples: &[Located]) -> CheckReport {
    const AXIOM: &str = "retraction-well-defined";
    let surface = format!("{} sample points, all admissible chart pairs", samples.len());
    let mut cases = 0;
    for y in samples {
        let charts = r.admissible(&y.locs);
        if charts.is_empty() {
            let w = Witness::RetractionUndefined { apartment: r.apartment, center: r.center.clone(), y: y.point.clone() };
            return CheckReport::fail(AXIOM, cases, surface, w);
        }
        let first = r.via(charts[0], &y.locs);
        for &g in &charts[1..] {
            cases += 1;
            if r.via(g, &y.locs) != first {
                let w = Witness::RetractionInconsistent {
                    apartment: r.apartment,
                    center: r.center.clone(),
                    y: y.point.clone(),
                    g1: charts[0],
                    g2: g,
                };
                return CheckReport::fail(AXIOM, cases, surface, w);
            }
        }
        if let Some(own) = &y.locs[r.apartment] {
            cases += 1;
            if first.as_ref() != Some(own) {
                let w = Witness::RetractionInconsistent {
                    apartment: r.apartment,
                    center: r.center.clone(),
                    y: y.point.clone(),
                    g1: charts[0],
                    g2: r.apartment,
                };
                return CheckReport::fail(AXIOM, cases, surface, w);
            }
        }
    }
    CheckReport::pass(AXIOM, cases, surface)
}

/// `d(r(x), r(y)) ≤ d(x, y)` on sampled pairs, and no sampled point other
/// than the center's base point is mapped onto it.
pub fn check_nonexpansive(
    b: &BuildingInstance,
    r: &Retraction,
    which: MetricKind,
    points: &[Located],
    pairs: &[(usize, usize)],
) -> CheckReport {
    let dists: Vec<Option<Scalar>> =
        pairs.iter().map(|&(i, j)| distance_located(b, &points[i], &points[j], which)).collect();
    check_nonexpansive_with(b.model(), r, which, points, pairs, &dists)
}

/// As [`check_nonexpansive`], with the distances `d(x, y)` of the pairs
/// precomputed (`None` where the pair shares no chart).
pub fn check_nonexpansive_with(
    model: &ModelSpace,
    r: &Retraction,
    which: MetricKind,
    points: &[Located],
    pairs: &[(usize, usize)],
    dists: &[Option<Scalar>],
) -> CheckReport {
    const AXIOM: &str = "retraction-nonexpansive";
    let surface = format!("{} sampled pairs, {} fiber samples, metric {which}", pairs.len(), points.len());
    let mut cases = 0;
    let images: Vec<Option<Point>> = points.iter().map(|p| r.apply_located(&p.locs)).collect();
    for (&(i, j), d) in pairs.iter().zip(dists) {
        let (Some(ri), Some(rj), Some(d)) = (&images[i], &images[j], d) else { continue };
        cases += 1;
        if model.metric(ri, rj, which) > *d {
            let w = Witness::RetractionExpands {
                apartment: r.apartment,
                center: r.center.clone(),
                x: points[i].point.clone(),
                y: points[j].point.clone(),
                metric: which,
            };
            return CheckReport::fail(AXIOM, cases, surface, w);
        }
    }
    for (p, img) in points.iter().zip(&images) {
        cases += 1;
        // The base point lies in A, so a point equal to it has exactly
        // these coordinates in chart A.
        if img.as_ref() == Some(r.base_in_a()) && p.locs[r.apartment].as_ref() != Some(r.base_in_a()) {
            let w = Witness::RetractionFiber { apartment: r.apartment, center: r.center.clone(), y: p.point.clone() };
            return CheckReport::fail(AXIOM, cases, surface, w);
        }
    }
    CheckReport::pass(AXIOM, cases, surface)
}

/// All chamber germs at `x` as seen from the chart of `x`.
pub fn germs_at(b: &BuildingInstance, x: &BPoint) -> Vec<Germ> {
    let mut out: Vec<Germ> = b
        .charts_containing(x)
        .into_iter()
        .flat_map(|(a, xa)| {
            b.model().group().ids().map(move |w| (a, WeylSimplex::chamber(xa.clone(), w))).collect::<Vec<_>>()
        })
        .map(|(a, s)| Germ::new(b, a, &s))
        .collect();
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{generate_star, generate_thin, GeneratorParams};
    use crate::coxeter::{FaceMask, Matrix, RootType, WeylId};
    use crate::lambda::{LambdaSpec, Q};
    use crate::model_space::TMode;

    fn star3() -> BuildingInstance {
        let p = GeneratorParams { root_type: RootType::A1, spec: LambdaSpec::Integers, t_mode: TMode::Full };
        generate_star(p, 0, 3, false).unwrap()
    }

    fn pt(b: &BuildingInstance, chart: usize, c: i64) -> BPoint {
        BPoint::new(chart, Point::from_ints(b.model().spec(), &[c]))
    }

    fn grid(b: &BuildingInstance) -> Vec<Located> {
        (0..b.apartment_count())
            .flat_map(|a| (-6..=6).map(move |c| (a, c)))
            .map(|(a, c)| Located::new(b, pt(b, a, c)))
            .collect()
    }

    #[test]
    fn retract_examples() {
        let b = star3();
        let mu = Germ::at(&b, &pt(&b, 0, 0), WeylId::IDENTITY, FaceMask::CHAMBER);
        let r = Retraction::new(&b, 0, &mu).unwrap();
        let y = pt(&b, 0, 5);
        assert_eq!(r.retract(&b, &y).unwrap(), y);
        assert_eq!(r.retract(&b, &pt(&b, 1, -3)).unwrap(), pt(&b, 0, -3));
        assert_eq!(r.retract(&b, &pt(&b, 2, 2)).unwrap(), pt(&b, 0, -2));
    }

    #[test]
    fn well_defined_on_star3_for_all_centers_at_the_branch_point() {
        let b = star3();
        let samples = grid(&b);
        let o = pt(&b, 0, 0);
        for mu in germs_at(&b, &o) {
            for a in 0..3 {
                if let Ok(r) = Retraction::new(&b, a, &mu) {
                    let rep = check_well_defined(&r, &samples);
                    assert!(rep.verdict.is_pass(), "{rep}");
                }
            }
        }
        let thin = generate_thin(GeneratorParams { root_type: RootType::A2, spec: LambdaSpec::Rationals, t_mode: TMode::Full });
        let mu = Germ::at(&thin, &BPoint::new(0, thin.model().origin()), WeylId::IDENTITY, FaceMask::CHAMBER);
        let r = Retraction::new(&thin, 0, &mu).unwrap();
        let s = vec![Located::new(&thin, BPoint::new(0, thin.model().point(&[Q::from_integer(1), Q::new(1, 2)])))];
        assert!(check_well_defined(&r, &s).verdict.is_pass());
    }

    #[test]
    fn corrupted_gluing_breaks_well_definedness() {
        let b = star3();
        // Shift the transition between charts 1 and 2 by one unit: the
        // instance no longer satisfies the cocycle condition, and
        // evaluating the retraction through different charts disagrees.
        let model = b.model();
        let shifted = AffineMap::new(Matrix::identity(1), Point::from_ints(model.spec(), &[1]));
        let bad = b.with_map(1, 2, shifted).unwrap();
        let mu = Germ::at(&bad, &pt(&bad, 0, 0), WeylId::IDENTITY, FaceMask::CHAMBER);
        let r = Retraction::new(&bad, 0, &mu).unwrap();
        let rep = check_well_defined(&r, &grid(&bad));
        assert!(!rep.verdict.is_ok());
        assert!(matches!(rep.witness, Some(Witness::RetractionInconsistent { .. })));
    }

    #[test]
    fn nonexpansive_examples() {
        let b = star3();
        let mu = Germ::at(&b, &pt(&b, 0, 0), WeylId::IDENTITY, FaceMask::CHAMBER);
        let r = Retraction::new(&b, 0, &mu).unwrap();
        let x = pt(&b, 2, 2);
        let y = pt(&b, 2, -3);
        let d1 = distance(&b, &x, &y, MetricKind::D1).unwrap();
        assert_eq!(d1, Scalar::from_int(model_spec(&b), 10));
        let (rx, ry) = (r.retract(&b, &x).unwrap(), r.retract(&b, &y).unwrap());
        assert_eq!((rx.clone(), ry.clone()), (pt(&b, 0, -2), pt(&b, 0, -3)));
        for which in MetricKind::BOTH {
            let d = distance(&b, &x, &y, which).unwrap();
            let dr = distance(&b, &rx, &ry, which).unwrap();
            assert!(dr <= d);
            // One positive root in rank one: both metrics agree.
            assert_eq!(dr, Scalar::from_int(model_spec(&b), 2));
        }
        let points = grid(&b);
        let n = points.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        for which in MetricKind::BOTH {
            assert!(check_nonexpansive(&b, &r, which, &points, &pairs).verdict.is_pass());
        }
    }

    fn model_spec(b: &BuildingInstance) -> LambdaSpec {
        b.model().spec()
    }

    #[test]
    fn retraction_is_idempotent_and_isometric_on_apartments_through_the_center() {
        let b = star3();
        let points = grid(&b);
        for mu in germs_at(&b, &pt(&b, 0, 1)) {
            for a in 0..3 {
                let Ok(r) = Retraction::new(&b, a, &mu) else { continue };
                for y in &points {
                    let ry = r.retract(&b, &y.point).unwrap();
                    assert_eq!(r.retract(&b, &ry).unwrap(), ry);
                }
                for g in 0..3 {
                    if b.locate_germ(mu.chart, &mu.simplex)[g].is_none() {
                        continue;
                    }
                    for c1 in -4..=4 {
                        for c2 in -4..=4 {
                            let (p, q) = (pt(&b, g, c1), pt(&b, g, c2));
                            let d = distance(&b, &p, &q, MetricKind::D1).unwrap();
                            let dr = distance(&b, &r.retract(&b, &p).unwrap(), &r.retract(&b, &q).unwrap(), MetricKind::D1).unwrap();
                            assert_eq!(d, dr);
                        }
                    }
                }
            }
        }
    }
}
