//! Estimate checks against closed forms, energy identities and trivial inputs.

use std::f64::consts::PI;

use proptest::prelude::*;
use ymcal_core::estimates::suite::{check_deturck_equivalence, check_magnetic_monotonicity};
use ymcal_core::estimates::{
    check_duhamel_comparison, check_duhamel_l2, check_energy_integral, duhamel_l2_sides,
    identity_residuals, observed_order, spread, Correspondence, EstimateReport, Sigma,
    SourceProfile,
};
use ymcal_core::gauge::Connection;
use ymcal_core::heatflow::{run_ymhf, FlowConfig, FlowGauge, Schedule};
use ymcal_core::hyperbolic::{generate, DataSpec};
use ymcal_core::lattice::fourier::central_symbol;
use ymcal_core::lattice::norms::real_lp;
use ymcal_core::lattice::Grid;
use ymcal_core::Error;

const L: f64 = 8.0;

fn grid(n: usize) -> Grid {
    Grid::new(n, L).unwrap()
}

fn flow(conn: &Connection, per_octave: usize, dense: bool) -> ymcal_core::heatflow::FlowTrajectory {
    let cfg = FlowConfig {
        s_max: 1.0,
        schedule: Schedule {
            per_octave,
            octaves: 8,
        },
        dense,
        ..FlowConfig::default()
    };
    run_ymhf(conn, &cfg, FlowGauge::Caloric).unwrap()
}

fn abelian(n: usize) -> Connection {
    generate(
        grid(n),
        &DataSpec {
            amplitude: 0.3,
            abelian: true,
            modes: 2,
            seed: 11,
            ..DataSpec::default()
        },
    )
    .unwrap()
    .connection()
}

#[test]
fn orders_and_spreads() {
    assert!((observed_order(4.0e-3, 1.0e-3, 2.0) - 2.0).abs() < 1e-14);
    assert!((observed_order(27.0, 1.0, 3.0) - 3.0).abs() < 1e-14);
    assert_eq!(spread(&[0.0, 0.0]), 0.0);
    assert_eq!(spread(&[2.0, 2.0, 2.0]), 0.0);
    assert!((spread(&[1.0, 1.5, 1.2]) - 0.5).abs() < 1e-15);
    assert_eq!(spread(&[0.0, 1.0]), f64::INFINITY);
    let coarse = EstimateReport {
        measured_constant: 0.8,
        ..report()
    };
    let fine = EstimateReport {
        measured_constant: 0.2,
        ..report()
    };
    assert_eq!(
        coarse.with_refinement(&fine, 2.0).refinement_order,
        Some(2.0)
    );
}

fn report() -> EstimateReport {
    EstimateReport {
        name: "probe".into(),
        measured_constant: 0.0,
        bound_form: String::new(),
        pass: true,
        refinement_order: None,
        details: Default::default(),
    }
}

#[test]
fn duhamel_sides_for_a_constant_source() {
    let g = grid(8);
    let gx = vec![0.5; g.sites()];
    let (l2, l1) = (real_lp(&g, &gx, 2.0), real_lp(&g, &gx, 1.0));
    let s0: f64 = 0.75;
    for a in [0.0f64, 1.0, 2.5] {
        // the zero mode does not diffuse: u(s) = g s^{a+1}/(a+1)
        let lhs = l2 * (s0.powf(2.0 * a + 2.5) / ((a + 1.0).powi(2) * (2.0 * a + 2.5))).sqrt();
        let rhs = l1 * (s0.powf(2.0 * a + 1.0) / (2.0 * a + 1.0)).sqrt();
        let (l, r) = duhamel_l2_sides(g, &gx, SourceProfile::Power(a), s0).unwrap();
        assert!((l / lhs - 1.0).abs() < 1e-3, "a = {a}: {l} vs {lhs}");
        assert!((r / rhs - 1.0).abs() < 1e-3, "a = {a}: {r} vs {rhs}");
    }
}

#[test]
fn duhamel_sides_for_a_single_mode() {
    let g = grid(8);
    let m = [1usize, 2, 0];
    let gx: Vec<f64> = (0..g.sites())
        .map(|i| {
            let [x, y, _] = g.position(i);
            (2.0 * PI * (x + 2.0 * y) / L).cos()
        })
        .collect();
    let lambda = central_symbol(&g, m);
    let s0 = 1.0;
    // u(s) = g (λs - 1 + e^{-λs}) / λ² for φ(s) = s
    let u = |s: f64| (lambda * s - 1.0 + (-lambda * s).exp()) / (lambda * lambda);
    let k = 200_000;
    let simpson: f64 = (0..=k)
        .map(|j| {
            let s = s0 * j as f64 / k as f64;
            let w = if j == 0 || j == k {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            if s == 0.0 {
                0.0
            } else {
                w * s.powf(-0.5) * u(s).powi(2)
            }
        })
        .sum::<f64>()
        * s0
        / (3.0 * k as f64);
    let lhs = real_lp(&g, &gx, 2.0) * simpson.sqrt();
    let (l, _) = duhamel_l2_sides(g, &gx, SourceProfile::Power(1.0), s0).unwrap();
    assert!((l / lhs - 1.0).abs() < 1e-3, "{l} vs {lhs}");
}

#[test]
fn duhamel_l2_report() {
    let g = grid(8);
    let zero = vec![0.0; g.sites()];
    let family = [
        SourceProfile::Power(0.0),
        SourceProfile::Spike {
            center: 0.3,
            width: 0.05,
        },
    ];
    let rep = check_duhamel_l2(g, &zero, &family, 1.0).unwrap();
    assert_eq!(rep.measured_constant, 0.0);
    assert!(rep.pass);
    let gx: Vec<f64> = (0..g.sites())
        .map(|i| (2.0 * PI * g.position(i)[2] / L).sin())
        .collect();
    let rep = check_duhamel_l2(g, &gx, &family, 1.0).unwrap();
    assert!(rep.measured_constant.is_finite() && rep.measured_constant > 0.0);
    assert!(duhamel_l2_sides(g, &gx, SourceProfile::Power(-0.6), 1.0).is_err());
    assert!(duhamel_l2_sides(g, &gx[1..], SourceProfile::Power(1.0), 1.0).is_err());
}

#[test]
fn energy_integral_of_zero_is_zero() {
    let traj = flow(&Connection::zero(grid(8)), 2, false);
    let rep = check_energy_integral(&traj, Sigma::F, 0.75, (0.0, 1.0)).unwrap();
    assert_eq!(
        (
            rep.details["lhs"],
            rep.details["rhs"],
            rep.measured_constant
        ),
        (0.0, 0.0, 0.0)
    );
    assert!(rep.pass);
    assert!(matches!(
        check_energy_integral(&traj, Sigma::Fs0, 0.75, (0.0, 1.0)),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn energy_integral_is_an_identity_for_the_free_flow() {
    let traj = flow(&abelian(16), 32, false);
    let s1 = traj.samples[1].s;
    let rep = check_energy_integral(&traj, Sigma::F, 0.75, (s1, 1.0)).unwrap();
    // ½‖σ(s2)‖² + ∫‖Dσ‖² = ½‖σ(s1)‖² up to the quadrature in s
    assert!(
        (rep.details["endpoint_balance"] - 1.0).abs() < 1e-3,
        "{}",
        rep.details["endpoint_balance"]
    );
    // the sup term alone is ‖σ(s1)‖ and the gradient term is at most ‖σ(s1)‖/√2
    assert!(rep.measured_constant >= 1.0 - 1e-12);
    assert!(rep.measured_constant <= 1.0 + 0.5f64.sqrt() + 1e-3);
    assert!(rep.pass);
}

#[test]
fn abelian_flows_satisfy_the_flow_identities_exactly() {
    let traj = flow(&abelian(8), 2, false);
    let r = identity_residuals(&traj);
    assert!(
        r.bianchi <= 1e-12 && r.caloric_divergence <= 1e-12 && r.transport <= 1e-12,
        "{r:?}"
    );
}

#[test]
fn pointwise_comparison_of_trivial_and_abelian_flows() {
    let zero = flow(&Connection::zero(grid(8)), 1, true);
    let rep = check_duhamel_comparison(&zero, Sigma::F).unwrap();
    assert_eq!(rep.measured_constant, 0.0);
    let traj = flow(&abelian(8), 1, true);
    let rep = check_duhamel_comparison(&traj, Sigma::F).unwrap();
    // no source: the majorant is the free evolution of |σ(0)|, which dominates |σ|
    assert!(rep.details["majorant_signed"] <= 1e-12, "{rep:?}");
    assert!(rep.details["max_principle_signed"] <= 1e-12);
    assert!(rep.pass);
    assert!(check_duhamel_comparison(&flow(&abelian(8), 1, false), Sigma::F).is_err());
}

#[test]
fn suite_checks_on_small_data() {
    let data = generate(
        grid(8),
        &DataSpec {
            amplitude: 0.2,
            ..DataSpec::default()
        },
    )
    .unwrap();
    let flows = vec![
        flow(&data.connection(), 2, false),
        flow(&abelian(8), 2, false),
    ];
    let rep = check_magnetic_monotonicity(&flows);
    assert!(rep.pass && rep.details["increases"] == 0.0, "{rep:?}");
    let tiny = generate(
        grid(16),
        &DataSpec {
            amplitude: 1e-4,
            ..DataSpec::default()
        },
    )
    .unwrap();
    let cfg = FlowConfig {
        s_max: 0.25,
        schedule: Schedule {
            per_octave: 2,
            octaves: 4,
        },
        ..FlowConfig::default()
    };
    let rep = check_deturck_equivalence(&tiny.connection(), &cfg).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn monotonicity_check_flags_an_increase() {
    let mut traj = flow(&abelian(8), 1, false);
    let last = traj.samples.len() - 1;
    traj.samples[last].magnetic = traj.samples[0].magnetic * 2.0;
    let rep = check_magnetic_monotonicity(&[traj]);
    assert!(!rep.pass);
    assert_eq!(rep.details["increases"], 1.0);
}

proptest! {
    #[test]
    fn correspondence_preserves_the_inequality(s in 1e-4..1.0f64, w in -2.0..2.0f64, l in 0.0..10.0f64, r in 0.0..10.0f64, c in 0.5..4.0f64) {
        let k = Correspondence::new(s, w, l, r);
        let sw = s.powf(w);
        prop_assert_eq!(k.normalized, (sw * l, sw * r));
        prop_assert_eq!(k.raw, (l, r));
        // away from the equality case the two readings agree
        prop_assume!((l - c * r).abs() > 1e-9 * (l + c * r));
        prop_assert_eq!(k.holds(c), l <= c * r);
    }

    #[test]
    fn scaling_both_levels_keeps_the_order(coarse in 1e-8..1.0f64, ratio in 1.01..100.0f64, lambda in 1e-3..1e3f64) {
        let fine = coarse / ratio;
        let a = observed_order(coarse, fine, 2.0);
        let b = observed_order(lambda * coarse, lambda * fine, 2.0);
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
}
