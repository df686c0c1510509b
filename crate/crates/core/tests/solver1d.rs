use bloom_core::ode::integrate_homogeneous_at;
use bloom_core::params::{HomState, ModelParams, Parameter};
use bloom_core::solver1d::{build_grid, integrate_1d, Field1D};
use bloom_core::wind::{ConstantWind, OscillatoryWind};

fn times(n: usize, dt: f64) -> Vec<f64> {
    (1..=n).map(|k| k as f64 * dt).collect()
}

#[test]
fn uniform_data_tracks_the_ode() {
    let p = ModelParams::default();
    let grid = build_grid(1000.0, 21).unwrap();
    let s = HomState::from_quota(2.0, 0.02, 0.5);
    let f = Field1D::uniform(grid.nx, &s, 0.02);
    let ts = times(10, 5.0);
    let pde = integrate_1d(&f, &grid, &ConstantWind::default(), &p, 50.0, 1e-9, 1e-12, &ts).unwrap();
    let ode = integrate_homogeneous_at(&s, &p, &ts, 1e-10, 1e-13).unwrap();
    for (k, field) in pde.fields.iter().enumerate() {
        let o = ode.states[k];
        for i in 0..grid.nx {
            assert!((field.biomass[i] - o.biomass).abs() <= 1e-3 * o.biomass.abs());
            assert!((field.internal[i] - o.internal_p).abs() <= 1e-3 * o.internal_p.abs());
            assert!((field.dissolved[i] - o.dissolved_p).abs() <= 1e-3 * o.dissolved_p.abs());
        }
    }
}

#[test]
fn closed_budget_is_conserved() {
    let p = ModelParams::default().with(Parameter::Exchange, 0.0);
    let grid = build_grid(1000.0, 41).unwrap();
    let f = Field1D::default_initial(&grid, &p);
    let total0 = f.phosphorus_total();
    let pde = integrate_1d(&f, &grid, &ConstantWind::default(), &p, 100.0, 1e-8, 1e-12, &times(10, 10.0)).unwrap();
    for field in &pde.fields {
        let drift = (field.phosphorus_total() - total0).abs() / total0;
        assert!(drift < 1e-8, "drift {drift}");
    }
}

#[test]
fn no_phosphorus_means_extinction() {
    let p = ModelParams::default().with(Parameter::PH, 0.0);
    let grid = build_grid(1000.0, 41).unwrap();
    let f = Field1D::default_initial(&grid, &p);
    let pde = integrate_1d(&f, &grid, &ConstantWind::default(), &p, 1000.0, 1e-6, 1e-10, &[1000.0]).unwrap();
    assert!(pde.fields[0].max_biomass() < 1e-3 * f.max_biomass());
}

#[test]
fn rich_lake_saturates_uniformly() {
    let p = ModelParams::default().with(Parameter::PH, 2.0);
    let grid = build_grid(1000.0, 41).unwrap();
    let f = Field1D::default_initial(&grid, &p);
    let pde = integrate_1d(&f, &grid, &ConstantWind::default(), &p, 1000.0, 1e-6, 1e-10, &[1000.0]).unwrap();
    let end = &pde.fields[0];
    assert!(end.min_biomass() > 0.0);
    assert!(end.max_biomass() / end.min_biomass() < 1.01, "{} {}", end.max_biomass(), end.min_biomass());
}

#[test]
fn oscillating_wind_keeps_invariants() {
    let p = ModelParams::default().with(Parameter::PH, 2.0);
    let grid = build_grid(1000.0, 41).unwrap();
    let f = Field1D::default_initial(&grid, &p);
    let wind = OscillatoryWind::new(3.0, 10.0, 0.3).unwrap();
    let pde = integrate_1d(&f, &grid, &wind, &p, 60.0, 1e-6, 1e-10, &times(6, 10.0)).unwrap();
    assert_eq!(pde.fields.len(), 6);
}

#[test]
fn doubling_resolution_changes_little() {
    let p = ModelParams::default();
    let b_at = |nx: usize| {
        let grid = build_grid(1000.0, nx).unwrap();
        let f = Field1D::default_initial(&grid, &p);
        let pde = integrate_1d(&f, &grid, &ConstantWind([20.0, 0.0]), &p, 50.0, 1e-8, 1e-12, &[50.0]).unwrap();
        pde.fields[0].biomass.clone()
    };
    let coarse = b_at(51);
    let fine = b_at(101);
    let (mut num, mut den) = (0.0, 0.0);
    for (i, c) in coarse.iter().enumerate() {
        let f = fine[2 * i];
        num += (f - c) * (f - c);
        den += f * f;
    }
    let rel = (num / den).sqrt();
    assert!(rel < 0.02, "relative L2 change {rel}");
}
