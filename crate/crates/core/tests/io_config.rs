use mmfrac::config::{ConfigError, ScenarioConfig};
use mmfrac::evolution::Model;
use mmfrac::io::{read_damage_csv, read_field_csv, write_damage_csv, write_field_csv};
use mmfrac::{DamageField, Grid2, ScalarField};
use proptest::prelude::*;

fn config_text(nx: usize, mu: f64, g: f64, eps_cells: f64, sigma: Option<f64>, kind: &str, lambda: f64) -> String {
    let sigma_line = sigma.map(|s| format!("Sigma = {s:e}\n")).unwrap_or_default();
    format!(
        "[grid]\nnx = {nx}\nny = {nx}\nlx = 1.0\nly = 1.0\n\n\
         [boundary]\nbottom = \"u1\"\ntop = \"u2\"\nleft = \"f\"\nright = \"f\"\n\n\
         [material]\nmu = {mu:e}\nG = {g:e}\neps = {:e}\n{sigma_line}\n\
         [load]\ndelta = 0.5\nT = 2.0\ns = 40\n\n\
         [model]\nkind = \"{kind}\"\nlambda = {lambda:e}\n",
        eps_cells / (nx - 1) as f64
    )
}

#[test]
fn improved_model_needs_sigma_and_gets_it() {
    let c = ScenarioConfig::parse(&config_text(9, 1.0, 1.0, 2.0, Some(0.72), "improved", 1.0)).unwrap();
    assert_eq!(c.model, Model::Improved);
    assert_eq!(c.material.sigma, 0.72);
    let err = ScenarioConfig::parse(&config_text(9, 1.0, 1.0, 2.0, None, "improved", 1.0)).unwrap_err();
    assert_eq!(err, ConfigError::MissingKey("material.Sigma".into()));
}

#[test]
fn unreadable_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = ScenarioConfig::from_path(&dir.path().join("nope.toml")).unwrap_err();
    assert!(matches!(err, ConfigError::Io(_)));
}

#[test]
fn scenario_from_config_runs_the_requested_model() {
    let c = ScenarioConfig::parse(&config_text(9, 1.0, 1.0, 2.0, None, "viscous", 0.5)).unwrap();
    let s = c.to_scenario().unwrap();
    assert_eq!(s.model, Model::Viscous { lambda: 0.5 });
    assert_eq!(s.n_steps(), 80);
    assert_eq!(s.load.eval(1.0), (0.0, 0.5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn config_round_trip(
        nx in 3usize..200,
        mu in 1e-3f64..1e3,
        g in 1e-3f64..1e3,
        eps_cells in 1.0f64..10.0,
        sigma in proptest::option::of(1e-3f64..10.0),
        kind in prop_oneof![Just("first"), Just("viscous")],
        lambda in 1e-6f64..10.0,
    ) {
        let c = ScenarioConfig::parse(&config_text(nx, mu, g, eps_cells, sigma, kind, lambda)).unwrap();
        let back = ScenarioConfig::parse(&c.to_toml()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn field_files_round_trip_exactly(nx in 3usize..12, ny in 3usize..12, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let h = 0.125;
        let g = Grid2::new(nx, ny, (nx - 1) as f64 * h, (ny - 1) as f64 * h).unwrap();
        let u = ScalarField::new(g, (0..g.n_nodes()).map(|_| rng.gen_range(-1e6..1e6) * rng.gen::<f64>()).collect()).unwrap();
        let v = DamageField::new(g, (0..g.n_nodes()).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &u).unwrap();
        prop_assert_eq!(read_field_csv(buf.as_slice()).unwrap(), u);
        let mut buf = Vec::new();
        write_damage_csv(&mut buf, &v).unwrap();
        prop_assert_eq!(read_damage_csv(buf.as_slice()).unwrap(), v);
    }
}
