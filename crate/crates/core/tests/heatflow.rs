//! Heat flows against the exact lattice semigroup on abelian data.

use std::f64::consts::PI;

use proptest::prelude::*;
use ymcal_core::algebra::Alg;
use ymcal_core::estimates::semigroup_defect;
use ymcal_core::gauge::{curvature, Connection};
use ymcal_core::heatflow::{
    gronwall_uniqueness_check, magnetic_energy, reconstruct_caloric, run_dymhf, run_ymhf,
    solve_covariant_heat, FlowConfig, FlowGauge, HeatSource, Integrator, Schedule,
};
use ymcal_core::hyperbolic::{generate, DataSpec, Generator};
use ymcal_core::lattice::{Field, Grid, LatticeField};

const L: f64 = 8.0;

fn grid(n: usize) -> Grid {
    Grid::new(n, L).unwrap()
}

fn cfg(s_max: f64) -> FlowConfig {
    FlowConfig {
        s_max,
        schedule: Schedule {
            per_octave: 2,
            octaves: 4,
        },
        ..FlowConfig::default()
    }
}

/// `dir · sin(2πk x_axis / L)` placed in component `comp` of a one-form.
fn transverse(g: Grid, comp: usize, axis: usize, k: f64, dir: Alg) -> LatticeField {
    let mut comps = [Field::zeros(g), Field::zeros(g), Field::zeros(g)];
    comps[comp] = Field::from_fn(g, move |x| dir * (2.0 * PI * k * x[axis] / L).sin());
    LatticeField::one_form(comps)
}

/// Decay rate of a single mode under two central differences.
fn rate(g: Grid, k: f64) -> f64 {
    (2.0 * PI * k * g.h() / L).sin().powi(2) / (g.h() * g.h())
}

#[test]
fn config_validation_and_samples() {
    assert!(FlowConfig {
        cfl: 0.3,
        ..FlowConfig::default()
    }
    .validate()
    .is_err());
    assert!(FlowConfig {
        s_max: 1.5,
        ..FlowConfig::default()
    }
    .validate()
    .is_err());
    assert!(FlowConfig {
        schedule: Schedule {
            per_octave: 0,
            octaves: 3
        },
        ..FlowConfig::default()
    }
    .validate()
    .is_err());
    let s = cfg(0.5).sample_points();
    assert_eq!(s.len(), 2 + 8);
    assert_eq!(s[0], 0.0);
    assert_eq!(*s.last().unwrap(), 0.5);
    assert_eq!(s[1], 0.5 / 16.0);
    assert!(s.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn zero_connection_is_stationary() {
    let g = grid(8);
    for gauge in [FlowGauge::Caloric, FlowGauge::DeTurck] {
        let traj = run_ymhf(&Connection::zero(g), &cfg(1.0), gauge).unwrap();
        assert!(traj
            .samples
            .iter()
            .all(|p| p.conn.max_abs() == 0.0 && p.magnetic == 0.0));
    }
}

#[test]
fn transverse_wave_decays_at_the_lattice_rate() {
    let g = grid(16);
    let a = transverse(g, 1, 0, 1.0, Alg::basis(2) * 0.3);
    let lambda = rate(g, 1.0);
    for gauge in [FlowGauge::Caloric, FlowGauge::DeTurck] {
        let traj = run_ymhf(&Connection::new(a.clone()).unwrap(), &cfg(1.0), gauge).unwrap();
        for p in &traj.samples {
            let expect = a.map(|c| c.scale((-lambda * p.s).exp()));
            assert!(p.conn.spatial.sub(&expect).max_abs() <= 1e-9, "s = {}", p.s);
        }
    }
}

#[test]
fn euler_is_first_order_and_rk4_is_far_more_accurate() {
    let g = grid(16);
    let a = transverse(g, 2, 1, 2.0, Alg::basis(0) * 0.2);
    let lambda = rate(g, 2.0);
    // one segment, so every step has the configured size
    let err = |integrator, cfl| {
        let c = FlowConfig {
            integrator,
            cfl,
            schedule: Schedule {
                per_octave: 1,
                octaves: 0,
            },
            ..cfg(0.5)
        };
        let traj = run_ymhf(&Connection::new(a.clone()).unwrap(), &c, FlowGauge::Caloric).unwrap();
        let p = traj.last();
        p.conn
            .spatial
            .sub(&a.map(|c| c.scale((-lambda * p.s).exp())))
            .max_abs()
    };
    let (e1, e2) = (err(Integrator::Euler, 0.2), err(Integrator::Euler, 0.1));
    let order = (e1 / e2).log2();
    assert!((order - 1.0).abs() < 0.15, "order {order}");
    assert!(err(Integrator::Rk4, 0.2) < 1e-3 * e1);
}

#[test]
fn abelian_curvature_follows_the_free_semigroup() {
    let g = grid(16);
    let spec = DataSpec {
        generator: Generator::RandomBandlimited,
        amplitude: 0.3,
        abelian: true,
        modes: 2,
        seed: 5,
        ..DataSpec::default()
    };
    let data = generate(g, &spec).unwrap();
    let defect = |cfl| {
        semigroup_defect(
            &run_ymhf(
                &data.connection(),
                &FlowConfig { cfl, ..cfg(1.0) },
                FlowGauge::Caloric,
            )
            .unwrap(),
        )
    };
    let (coarse, fine) = (defect(0.025), defect(0.0125));
    assert!(fine <= ymcal_core::tolerances::SEMIGROUP_EXACT, "{fine}");
    // what remains is the time integrator
    let order = (coarse / fine).log2();
    assert!(order > 3.5, "order {order}");
}

#[test]
fn covariant_heat_with_flat_coefficients() {
    let g = grid(16);
    let traj = run_ymhf(&Connection::zero(g), &cfg(1.0), FlowGauge::Caloric).unwrap();
    let sigma = transverse(g, 0, 2, 1.0, Alg::new(0.5, -0.5, 1.0));
    let sol = solve_covariant_heat(&traj, HeatSource::CurvatureCoupling, &sigma).unwrap();
    let lambda = rate(g, 1.0);
    for (s, v) in sol.s.iter().zip(&sol.values) {
        assert!(
            v.sub(&sigma.map(|c| c.scale((-lambda * s).exp())))
                .max_abs()
                <= 1e-9
        );
    }
    // no curvature, no source
    assert!(sol.source_integral.iter().all(|&v| v == 0.0));
    assert!(sol.sup.windows(2).all(|w| w[1] <= w[0]));
    assert!(solve_covariant_heat(
        &traj,
        HeatSource::None,
        &LatticeField::zeros(g, ymcal_core::lattice::Rank::TwoForm)
    )
    .is_err());
}

#[test]
fn dynamic_flow_carries_a_transverse_electric_field() {
    let g = grid(16);
    let e0 = transverse(g, 1, 0, 1.0, Alg::basis(1) * 0.2);
    let traj = run_dymhf(&Connection::zero(g), &e0, &cfg(1.0)).unwrap();
    let lambda = rate(g, 1.0);
    for p in &traj.samples {
        let f0 = p.f0.as_ref().unwrap();
        assert!(
            f0.sub(&e0.map(|c| c.scale((-lambda * p.s).exp())))
                .max_abs()
                <= 1e-9
        );
        assert_eq!(p.conn.max_abs(), 0.0);
        // transverse, so the divergence that drives A_0 vanishes
        assert!(p.conn.temporal.as_ref().map_or(0.0, Field::max_abs) <= 1e-12);
    }
}

#[test]
fn deturck_reconstruction_matches_the_caloric_flow() {
    let g = grid(16);
    let data = generate(
        g,
        &DataSpec {
            amplitude: 0.05,
            ..DataSpec::default()
        },
    )
    .unwrap();
    let c = FlowConfig {
        dense: true,
        ..cfg(0.25)
    };
    let det = run_ymhf(&data.connection(), &c, FlowGauge::DeTurck).unwrap();
    let rec = reconstruct_caloric(&det).unwrap();
    let cal = run_ymhf(&data.connection(), &cfg(0.25), FlowGauge::Caloric).unwrap();
    assert!(rec.drift <= 1e-10);
    assert_eq!(rec.transforms.len(), cal.samples.len());
    for (a, b) in rec.trajectory.samples.iter().zip(&cal.samples) {
        assert!(
            (a.magnetic - b.magnetic).abs() <= 1e-3 * b.magnetic.max(1e-12),
            "s = {}",
            a.s
        );
    }
    assert!(reconstruct_caloric(&cal).is_err());
}

#[test]
fn gronwall_envelope_holds_for_small_perturbations() {
    let g = grid(8);
    let data = generate(
        g,
        &DataSpec {
            amplitude: 0.2,
            ..DataSpec::default()
        },
    )
    .unwrap();
    let dir = transverse(g, 0, 1, 1.0, Alg::new(1.0, 0.0, 1.0));
    let rep = gronwall_uniqueness_check(&data.connection(), &cfg(1.0), &dir, 1e-6).unwrap();
    assert!(rep.delta[0] > 0.0);
    assert!(rep.envelope_ratio <= 1.0, "{}", rep.envelope_ratio);
    // the perturbation is linear in its size
    let twice = gronwall_uniqueness_check(&data.connection(), &cfg(1.0), &dir, 2e-6).unwrap();
    for (a, b) in rep.delta.iter().zip(&twice.delta) {
        assert!((b / a - 2.0).abs() < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn magnetic_energy_never_increases(seed in 1u64..10_000, amp in 0.05..1.0f64, modes in 1usize..3) {
        let g = grid(8);
        let data = generate(g, &DataSpec { amplitude: amp, seed, modes, ..DataSpec::default() }).unwrap();
        let traj = run_ymhf(&data.connection(), &cfg(1.0), FlowGauge::Caloric).unwrap();
        let m = traj.magnetic();
        prop_assert!(m.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        prop_assert_eq!(m[0], magnetic_energy(&curvature(&data.connection())));
    }
}
