use aepnp_wasm_demo::{compare_solvers, noise_curve, ransac_demo};
use serde_json::Value;

#[test]
fn exports_are_deterministic_json() {
    assert_eq!(compare_solvers(60, 1.0, 1.3, 0.7, 9), compare_solvers(60, 1.0, 1.3, 0.7, 9));
    assert_eq!(noise_curve(1.0, 1, 40, 4, 2), noise_curve(1.0, 1, 40, 4, 2));
    assert_eq!(ransac_demo(100, 0.1, 1.0, 2.0, 3), ransac_demo(100, 0.1, 1.0, 2.0, 3));
}

#[test]
fn errors_come_back_as_strings() {
    let err = ransac_demo(100, 1.5, 1.0, 2.0, 0).unwrap_err();
    assert!(err.contains("outlier ratio"), "{err}");
    assert!(compare_solvers(3, 0.0, 1.0, 1.0, 0).is_ok_and(|s| {
        let v: Value = serde_json::from_str(&s).unwrap();
        v["estimates"][1]["errors"].is_null()
    }));
}
