//! Check reports and the witnesses attached to failures.

use std::fmt;

use serde::Serialize;

use crate::atlas::BPoint;
use crate::at_infinity::ParallelClass;
use crate::local_structure::Germ;
use crate::model_space::{MetricKind, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "not-applicable")]
    NotApplicable,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    /// Not-applicable counts as passing for bundle verdicts.
    pub fn is_ok(self) -> bool {
        self != Verdict::Fail
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not-applicable",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Something living in the building that a witness refers to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Object {
    Point { at: BPoint },
    Germ { germ: Germ },
    Chamber { class: ParallelClass },
    /// The full Weyl chamber `base + w·C_f` in chart `chart`.
    WeylChamber { chart: usize, base: Point, chamber: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A gluing record that is malformed on its own.
    Gluing { i: usize, j: usize, problem: String },
    /// `point` (chart-i coordinates) lies in charts i, j, k but the
    /// transition maps disagree or a region is missing it.
    Cocycle { i: usize, j: usize, k: usize, point: Point, problem: String },
    /// Two points of an overlap whose midpoint (in chart i) leaves it.
    Convexity { i: usize, j: usize, a: Point, b: Point },
    /// No single apartment contains all of the objects.
    NoCommonApartment { objects: Vec<Object> },
    /// No apartment contains sub-chambers of all of the given chambers.
    Subchambers { objects: Vec<Object> },
    /// More than one apartment contains all of the objects.
    NotUnique { objects: Vec<Object>, apartments: Vec<usize> },
    /// Two germs at a point whose residue distance is not what an
    /// apartment predicts, or some other residue defect.
    Residue { at: BPoint, problem: String },
    Boundary { problem: String },
    /// Evaluations of a retraction through charts `g1` and `g2` differ.
    RetractionInconsistent { apartment: usize, center: Germ, y: BPoint, g1: usize, g2: usize },
    RetractionExpands { apartment: usize, center: Germ, x: BPoint, y: BPoint, metric: MetricKind },
    /// `y ≠ x₀` is retracted onto the base point `x₀` of the center.
    RetractionFiber { apartment: usize, center: Germ, y: BPoint },
    /// `y` shares no chart with the center of a retraction.
    RetractionUndefined { apartment: usize, center: Germ, y: BPoint },
    /// Three apartments pairwise meeting in half-apartments.
    Triple { apartments: [usize; 3], shape: String },
    /// Two apartments meeting in a half-apartment whose exchange
    /// apartment is missing.
    Exchange { i: usize, j: usize },
    /// A point of a segment outside every chamber of the covering family.
    Cover { x: BPoint, y: BPoint, z: BPoint, apartment: usize, point: Point, problem: String },
    Triangle { x: BPoint, y: BPoint, z: BPoint, metric: MetricKind },
    /// The distance between two points depends on the chart used.
    Distance { x: BPoint, y: BPoint, charts: [usize; 2], metric: MetricKind },
    /// Parallelism fails to be transitive on three classes.
    Parallel { a: ParallelClass, b: ParallelClass, c: ParallelClass },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub axiom: String,
    pub verdict: Verdict,
    /// Number of elementary cases examined.
    pub cases: u64,
    /// Human-readable description of the verification surface.
    pub surface: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckReport {
    pub fn pass(axiom: &str, cases: u64, surface: impl Into<String>) -> Self {
        CheckReport {
            axiom: axiom.to_string(),
            verdict: Verdict::Pass,
            cases,
            surface: surface.into(),
            witness: None,
            note: None,
        }
    }

    pub fn fail(axiom: &str, cases: u64, surface: impl Into<String>, witness: Witness) -> Self {
        CheckReport {
            axiom: axiom.to_string(),
            verdict: Verdict::Fail,
            cases,
            surface: surface.into(),
            witness: Some(witness),
            note: None,
        }
    }

    pub fn not_applicable(axiom: &str, note: impl Into<String>) -> Self {
        CheckReport {
            axiom: axiom.to_string(),
            verdict: Verdict::NotApplicable,
            cases: 0,
            surface: String::new(),
            witness: None,
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Builds a pass or fail report from a case count and an optional
    /// first failure.
    pub fn from_outcome(axiom: &str, cases: u64, surface: impl Into<String>, failure: Option<Witness>) -> Self {
        match failure {
            None => CheckReport::pass(axiom, cases, surface),
            Some(w) => CheckReport::fail(axiom, cases, surface, w),
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<8} {:<15} cases={}", self.axiom, self.verdict.label(), self.cases)?;
        if let Some(w) = &self.witness {
            write!(f, " witness={}", serde_json::to_string(w).unwrap_or_default())?;
        }
        if let Some(n) = &self.note {
            write!(f, " ({n})")?;
        }
        Ok(())
    }
}
