use rollout_fabrics_demo::api::{attractor_profile, barrier_profile, scenario_names, Session};
use serde_json::Value;

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn every_listed_scenario_starts() {
    for name in json(&scenario_names()).as_array().unwrap() {
        let s = Session::new(name.as_str().unwrap(), "mrdf", 0).unwrap();
        let frame = json(&s.frame());
        assert_eq!(frame["t"], 0.0);
        assert!(!frame["robots"].as_array().unwrap().is_empty());
    }
}

#[test]
fn head_on_frames_show_the_stall_and_its_resolution() {
    let run = |mode| {
        let mut s = Session::new("head_on", mode, 0).unwrap();
        loop {
            let f = json(&s.step(50).unwrap());
            if f["done"] == true {
                return f;
            }
        }
    };
    let mrdf = run("mrdf");
    assert_eq!(
        (mrdf["success"].clone(), mrdf["deadlocks"].clone()),
        (Value::Bool(false), Value::from(0))
    );
    let rf = run("rf");
    assert_eq!(rf["success"], true);
    assert!(rf["deadlocks"].as_u64().unwrap() >= 1);
}

#[test]
fn preview_has_one_point_per_step() {
    let mut s = Session::new("desk_benchmark", "rf", 3).unwrap();
    s.step(100).unwrap();
    let p = json(&s.preview(25).unwrap());
    for path in p["paths"].as_array().unwrap() {
        assert_eq!(path.as_array().unwrap().len(), 26);
    }
    assert!(s.preview(0).is_err());
}

#[test]
fn bad_inputs_are_errors() {
    assert!(Session::new("nowhere", "rf", 0).is_err());
    assert!(Session::new("head_on", "fly", 0).is_err());
    assert!(barrier_profile(0.0, -1.0, 1.0).is_err());
}

#[test]
fn barrier_profile_switches_off_when_receding() {
    let p = json(&barrier_profile(0.05, 0.3, 5.0).unwrap());
    for key in ["geometry", "metric", "leaf"] {
        assert!(
            p[key].as_array().unwrap().iter().all(|v| v.as_f64().unwrap() == 0.0),
            "{key}"
        );
    }
    let p = json(&barrier_profile(0.05, -0.5, 5.0).unwrap());
    let g: Vec<f64> = p["geometry"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    // pushes away, harder when closer
    assert!(g.windows(2).all(|w| w[0] > w[1] && w[1] > 0.0));
}

#[test]
fn attractor_pull_saturates_at_the_gain() {
    let p = json(&attractor_profile(2.0, 0.1));
    let pull = p["pull"].as_array().unwrap();
    assert_eq!(pull[0], 0.0);
    let last = pull.last().unwrap().as_f64().unwrap();
    assert!(last < 2.0 && last > 1.99);
}
