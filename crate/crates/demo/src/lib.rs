//! WebAssembly bindings for the browser demo in `web/`. Every call
//! generates the requested instance afresh and returns JSON.

use buildings::at_infinity::boundary_complex;
use buildings::atlas::{generate, validate_atlas, BPoint, BuildingInstance, GeneratorKind, GeneratorParams};
use buildings::local_structure::{residue, Germ};
use buildings::model_space::{MetricKind, TMode};
use buildings::retraction::{distance, Retraction};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn instance(root_type: &str, lambda: &str, branches: u32) -> Result<BuildingInstance, String> {
    let p = GeneratorParams {
        root_type: root_type.parse().map_err(|e| format!("{e}"))?,
        spec: lambda.parse().map_err(|e| format!("{e}"))?,
        t_mode: TMode::Full,
    };
    let kind = if branches <= 1 {
        GeneratorKind::Thin
    } else {
        GeneratorKind::Star { wall_root: 0, branches: branches as usize, seed_only: false }
    };
    generate(kind, p).map_err(|e| e.to_string())
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Summary {
    name: String,
    apartments: usize,
    gluings: usize,
    atlas: String,
    boundary_chambers: Vec<String>,
    boundary_apartments: usize,
    boundary_is_building: bool,
}

pub fn describe_json(root_type: &str, lambda: &str, branches: u32) -> Result<String, String> {
    let b = instance(root_type, lambda, branches)?;
    let bc = boundary_complex(&b);
    json(&Summary {
        name: b.name().to_string(),
        apartments: b.apartment_count(),
        gluings: b.gluings().len(),
        atlas: validate_atlas(&b).verdict.label().to_string(),
        boundary_chambers: bc.chambers.iter().map(|c| c.label(&b)).collect(),
        boundary_apartments: bc.distinct_apartments(),
        boundary_is_building: bc.is_building(),
    })
}

#[derive(Serialize)]
struct ResidueView {
    at: String,
    chambers: Vec<String>,
    adjacency: Vec<Vec<usize>>,
    apartment_charts: Vec<usize>,
    is_building: bool,
}

pub fn residue_json(root_type: &str, lambda: &str, branches: u32, point: &str) -> Result<String, String> {
    let b = instance(root_type, lambda, branches)?;
    let x = BPoint::parse(b.model().spec(), point).map_err(|e| e.to_string())?;
    let r = residue(&b, &x).map_err(|e| e.to_string())?;
    json(&ResidueView {
        at: x.to_string(),
        chambers: r.chambers.iter().map(|g| g.label(&b)).collect(),
        adjacency: r.adjacency(),
        apartment_charts: r.apartment_charts.clone(),
        is_building: r.is_building(),
    })
}

#[derive(Serialize)]
struct RetractView {
    image: String,
    distance_to_base: Option<String>,
    image_distance_to_base: Option<String>,
}

pub fn retract_json(
    root_type: &str,
    lambda: &str,
    branches: u32,
    apartment: u32,
    germ: &str,
    point: &str,
) -> Result<String, String> {
    let b = instance(root_type, lambda, branches)?;
    let mu = Germ::parse(&b, germ).map_err(|e| e.to_string())?;
    let y = BPoint::parse(b.model().spec(), point).map_err(|e| e.to_string())?;
    if y.chart >= b.apartment_count() {
        return Err(format!("no chart {}", y.chart));
    }
    let r = Retraction::new(&b, apartment as usize, &mu).map_err(|e| e.to_string())?;
    let image = r.retract(&b, &y).map_err(|e| e.to_string())?;
    let base = r.base();
    let d = |p: &BPoint| distance(&b, p, &base, MetricKind::D1).map(|d| d.to_string());
    json(&RetractView { image: image.to_string(), distance_to_base: d(&y), image_distance_to_base: d(&image) })
}

/// Summary of a generated instance: apartments and the building at
/// infinity. `branches <= 1` gives the thin instance.
#[wasm_bindgen]
pub fn describe(root_type: &str, lambda: &str, branches: u32) -> Result<String, JsError> {
    describe_json(root_type, lambda, branches).map_err(|e| JsError::new(&e))
}

/// The residue at `point` (`chart:(c1,...)`).
#[wasm_bindgen]
pub fn residue_at(root_type: &str, lambda: &str, branches: u32, point: &str) -> Result<String, JsError> {
    residue_json(root_type, lambda, branches, point).map_err(|e| JsError::new(&e))
}

/// Retraction of `point` onto `apartment` centered at `germ`
/// (`chart:(coords):word`).
#[wasm_bindgen]
pub fn retract(
    root_type: &str,
    lambda: &str,
    branches: u32,
    apartment: u32,
    germ: &str,
    point: &str,
) -> Result<String, JsError> {
    retract_json(root_type, lambda, branches, apartment, germ, point).map_err(|e| JsError::new(&e))
}
