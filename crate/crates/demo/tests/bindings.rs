use buildings_demo::{describe_json, residue_json, retract_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn describe_star_and_thin() {
    let v = parse(describe_json("A1", "Z", 4).unwrap());
    assert_eq!(v["apartments"], 6);
    assert_eq!(v["boundary_chambers"].as_array().unwrap().len(), 4);
    assert_eq!(v["boundary_apartments"], 6);
    assert_eq!(v["atlas"], "pass");
    let v = parse(describe_json("B2", "Q", 1).unwrap());
    assert_eq!(v["apartments"], 1);
    assert_eq!(v["boundary_chambers"].as_array().unwrap().len(), 8);
    assert!(describe_json("G2", "Q", 3).is_err());
}

#[test]
fn residue_at_branch_point() {
    let v = parse(residue_json("A1", "Z", 3, "0:(0)").unwrap());
    assert_eq!(v["chambers"].as_array().unwrap().len(), 3);
    assert_eq!(v["is_building"], true);
    let v = parse(residue_json("A1", "Z", 3, "0:(1/2)").unwrap());
    assert_eq!(v["chambers"].as_array().unwrap().len(), 2);
    assert!(residue_json("A1", "Z", 3, "9:(0)").is_err());
}

#[test]
fn retract_folds_branches() {
    let v = parse(retract_json("A1", "Z", 3, 0, "0:(0):e", "1:(-3)").unwrap());
    assert_eq!(v["image"], "0:(-3)");
    assert_eq!(v["distance_to_base"], v["image_distance_to_base"]);
    assert!(retract_json("A1", "Z", 3, 7, "0:(0):e", "1:(-3)").is_err());
}
