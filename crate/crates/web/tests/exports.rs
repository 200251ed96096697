use serde_json::Value;

use qvhi_web::{jlambda_curve_json, solve_channel_json, yield_sweep_json};

#[test]
fn curve_is_symmetric_and_bounded() {
    let v: Value = serde_json::from_str(&jlambda_curve_json(0.5, 3.0, 61).unwrap()).unwrap();
    let j = v["j"].as_array().unwrap();
    let dj = v["dj"].as_array().unwrap();
    assert_eq!(j.len(), 61);
    assert_eq!(j[30].as_f64().unwrap(), 0.0);
    for i in 0..61 {
        assert!((j[i].as_f64().unwrap() - j[60 - i].as_f64().unwrap()).abs() < 1e-14);
        assert!(dj[i].as_f64().unwrap().abs() <= 1.0);
    }
    assert!(jlambda_curve_json(0.5, 3.0, 1).is_err());
    assert!(jlambda_curve_json(-1.0, 3.0, 5).is_err());
}

#[test]
fn channel_solve_returns_a_field() {
    let v: Value = serde_json::from_str(&solve_channel_json(r#"{"nx": 4, "ny": 2, "alpha": 0.05}"#).unwrap()).unwrap();
    let nodes = v["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), v["velocity"].as_array().unwrap().len());
    assert!(v["norm_u"].as_f64().unwrap() > 0.0);
    assert_eq!(v["active"], true);
    assert!(v["box_ratio_u"].as_f64().unwrap() <= 1.0 + 1e-6);
}

#[test]
fn bad_parameters_are_reported() {
    assert!(solve_channel_json(r#"{"nx": 4, "colour": 1}"#).unwrap_err().contains("bad parameters"));
    assert!(solve_channel_json(r#"{"force": "20*z"}"#).is_err());
}

#[test]
fn sweep_deviations_shrink() {
    let v: Value = serde_json::from_str(&yield_sweep_json(r#"{"nx": 4, "ny": 2}"#, 4).unwrap()).unwrap();
    assert_eq!(v["g"].as_array().unwrap().len(), 5);
    assert_eq!(v["non_increasing"], true);
}
