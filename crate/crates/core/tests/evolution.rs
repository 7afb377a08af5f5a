use std::sync::OnceLock;

use mmfrac::evolution::{
    griffith_ledger_check, power_bound_check, run_incremental, write_trace_csv, IncrementTrace, Model, Scenario,
};
use mmfrac::{Error, Material};

fn small_strip() -> Scenario {
    let mat = Material::new(1.0, 1.0, 2.0 / 16.0).unwrap();
    Scenario::strip(17, 17, 1.0, 1.0, mat, 1.0, 1.8, 20).unwrap()
}

fn trace() -> &'static IncrementTrace {
    static T: OnceLock<IncrementTrace> = OnceLock::new();
    T.get_or_init(|| run_incremental(&small_strip()).unwrap())
}

#[test]
fn the_strip_breaks_once_and_for_all() {
    let tr = trace();
    assert_eq!(tr.steps.len(), 37);
    let onset = tr.onset().expect("the strip separates before T = 1.8");
    assert!(onset.t > 0.9 && onset.t < 1.8, "onset at {}", onset.t);
    // once separated, always separated
    assert!(tr.steps.iter().skip(onset.k).all(|r| r.separated));
    // Separation releases almost all the stored energy, and pulling the
    // broken strip further does not reload it.
    let peak = tr.steps[onset.k - 1].energy.elastic;
    assert!(onset.energy.elastic < 0.1 * peak, "{} vs {peak}", onset.energy.elastic);
    for w in tr.steps[onset.k..].windows(2) {
        assert!(w[1].energy.elastic <= w[0].energy.elastic * (1.0 + 1e-9));
    }
}

#[test]
fn damage_never_heals() {
    for w in trace().steps.windows(2) {
        assert!(w[1].v.is_below(&w[0].v), "healing between steps {} and {}", w[0].k, w[1].k);
    }
}

#[test]
fn incremental_griffith_holds_and_detects_cheating() {
    let tr = trace();
    assert!(griffith_ledger_check(tr, None).iter().all(|v| v.ok));
    let mut bad = tr.clone();
    let onset = bad.onset().unwrap().k;
    bad.steps[onset].surface_increment += 0.5;
    let verdicts = griffith_ledger_check(&bad, None);
    assert!(!verdicts[onset - 1].ok);
    assert_eq!(verdicts.iter().filter(|v| !v.ok).count(), 1);
}

#[test]
fn energy_stays_below_supplied_power() {
    let tr = trace();
    let pb = power_bound_check(tr, tr.steps_per_unit, None);
    assert!(pb.ok, "violations at {:?}", pb.violations);
    assert!(pb.p_est > 0.0);
}

#[test]
fn trace_output_is_reproducible() {
    let again = run_incremental(&small_strip()).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_trace_csv(&mut a, trace(), false).unwrap();
    write_trace_csv(&mut b, &again, false).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 38);
}

#[test]
fn invalid_scenarios_are_rejected() {
    let mut s = small_strip();
    s.steps_per_unit = 0;
    assert!(matches!(run_incremental(&s), Err(Error::InvalidParameter(_))));
    let mut s = small_strip();
    s.horizon = -1.0;
    assert!(matches!(run_incremental(&s), Err(Error::InvalidParameter(_))));
    let s = small_strip().with_model(Model::Viscous { lambda: 0.0 });
    assert!(matches!(run_incremental(&s), Err(Error::InvalidParameter(_))));
}
