use serde_json::Value;
use subsel_wasm::{compare_json, concave_curves_json, greedy_trajectory_json};

const IN_DOMAIN: &str = "where is the clinic\nthe clinic opens at nine\nsee the doctor at the clinic\n";
const GROUND: &str = "the clinic opens at nine\nthe clinic opens at nine\nprices fell today\n\
                      where is the doctor\nrice prices rose\nthe doctor sees patients at nine\n";

fn json(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn trajectory_respects_budget_and_is_monotone() {
    let v = json(greedy_trajectory_json(IN_DOMAIN, GROUND, 12.0, "sqrt", 3, "words").unwrap());
    let steps = v["steps"].as_array().unwrap();
    assert!(!steps.is_empty());
    let mut last = 0.0;
    for s in steps {
        let f = s["objective"].as_f64().unwrap();
        assert!(f > last);
        last = f;
        assert!(s["cumulative_cost"].as_f64().unwrap() <= 12.0);
    }
    assert!(v["lazy_evaluations"].as_u64() <= v["naive_evaluations"].as_u64());
    assert_eq!(v["ground_size"], 6);
}

#[test]
fn duplicate_is_not_picked_twice_first() {
    let v = json(greedy_trajectory_json(IN_DOMAIN, GROUND, 2.0, "sqrt", 3, "unit").unwrap());
    let ids: Vec<u64> = v["steps"].as_array().unwrap().iter().map(|s| s["id"].as_u64().unwrap()).collect();
    assert_eq!(ids.len(), 2);
    assert!(!(ids.contains(&0) && ids.contains(&1)), "{ids:?}");
}

#[test]
fn comparison_lists_both_methods_and_small_pool_oracle() {
    let v = json(compare_json(IN_DOMAIN, GROUND, 3.0, "unit", 3, 2).unwrap());
    let methods = v["methods"].as_array().unwrap();
    let names: Vec<&str> = methods.iter().map(|m| m["method"].as_str().unwrap()).collect();
    assert_eq!(names, ["submod", "xent"]);
    for m in methods {
        assert_eq!(m["ids"].as_array().unwrap().len(), m["texts"].as_array().unwrap().len());
    }
    assert!(v["greedy_ratio"].as_f64().unwrap() >= 1.0 - (-1.0f64).exp());
}

#[test]
fn curves_sample_each_function() {
    let v = json(concave_curves_json("sqrt, log1p, linear", 4.0, 5).unwrap());
    let curves = v.as_array().unwrap();
    assert_eq!(curves.len(), 3);
    assert_eq!(curves[0]["points"][4][1].as_f64().unwrap(), 2.0);
    assert_eq!(curves[2]["points"][3][1].as_f64().unwrap(), 3.0);
}

#[test]
fn bad_input_is_reported() {
    assert!(greedy_trajectory_json("", GROUND, 5.0, "sqrt", 2, "words").is_err());
    assert!(greedy_trajectory_json(IN_DOMAIN, GROUND, 5.0, "cubic", 2, "words").is_err());
    assert!(greedy_trajectory_json(IN_DOMAIN, GROUND, -1.0, "sqrt", 2, "words").is_err());
    assert!(concave_curves_json("power:2", 1.0, 3).is_err());
    assert!(compare_json(IN_DOMAIN, GROUND, 3.0, "pages", 3, 2).is_err());
}
