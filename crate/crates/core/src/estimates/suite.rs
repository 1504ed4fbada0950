//! Checks that compare runs: step halving, grid refinement and gauge routes.
//!
//! Each takes the runs it needs (or builds them from data) and returns one
//! [`EstimateReport`]. Quantities below [`RESIDUAL_FLOOR`] are treated as exact
//! and do not enter order estimates.

use super::{identity_residuals, observed_order, ratio, EstimateReport};
use crate::error::{Error, Result};
use crate::gauge::{smoothed_abs, substitute_derivatives, Connection, Direction};
use crate::heatflow::{reconstruct_caloric, run_ymhf, FlowConfig, FlowGauge, FlowTrajectory};
use crate::hyperbolic::assembly::fs_time_identity_residual_at;
use crate::hyperbolic::{evolve_diagnostics, temporal_gauge_ode, Assembly, CauchyData};
use crate::lattice::{Field, LatticeField};
use crate::tolerances;

/// Residuals at or below this level count as exact zeros.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Order of a residual pair, or `None` when the coarse value is already at the floor.
fn order_above_floor(coarse: f64, fine: f64, h_ratio: f64) -> Option<f64> {
    (coarse > RESIDUAL_FLOOR).then(|| observed_order(coarse, fine.max(f64::MIN_POSITIVE), h_ratio))
}

fn min_order(orders: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    orders.into_iter().flatten().reduce(f64::min)
}

/// Relative energy drift over `[0, t_final]` at `dt_ratio · h` and at half that step.
pub fn check_energy_conservation(
    data: &CauchyData,
    t_final: f64,
    dt_ratio: f64,
) -> Result<EstimateReport> {
    let coarse = evolve_diagnostics(data, t_final, dt_ratio)?;
    let fine = evolve_diagnostics(data, t_final, 0.5 * dt_ratio)?;
    let (d1, d2) = (coarse.energy_drift(), fine.energy_drift());
    let mut rep = EstimateReport::new("energy_conservation", "|E(t) - E(0)| / E(0) ≤ C dt²");
    rep.detail("energy", coarse.diagnostics[0].energy);
    rep.detail("drift", d1);
    rep.detail("drift_half_step", d2);
    rep.detail("sync_drift", coarse.energy_sync_drift());
    rep.detail("scaling_quantity", coarse.diagnostics[0].energy);
    let dt = coarse.dt;
    rep.measured_constant = d1 / (dt * dt);
    let (lo, hi) = (
        4.0 * (1.0 - tolerances::ORDER_TWO_RATIO_BAND),
        4.0 * (1.0 + tolerances::ORDER_TWO_RATIO_BAND),
    );
    rep.pass = d1 <= tolerances::ENERGY_DRIFT;
    if d1 > RESIDUAL_FLOOR {
        let r = d1 / d2;
        rep.detail("halving_ratio", r);
        rep.refinement_order = Some(r.log2());
        rep.pass &= r >= lo && r <= hi;
    }
    Ok(rep)
}

/// Growth of the Gauss residual under joint refinement of the grid and the
/// step (`dt = dt_ratio · h` on both grids). The data must satisfy the
/// constraint; unconstrained data fail with their relative residual recorded.
pub fn check_gauss_constraint(
    coarse: &CauchyData,
    fine: &CauchyData,
    t_final: f64,
    dt_ratio: f64,
) -> Result<EstimateReport> {
    let h_ratio = coarse.a.grid().h() / fine.a.grid().h();
    let c = evolve_diagnostics(coarse, t_final, dt_ratio)?;
    let f = evolve_diagnostics(fine, t_final, dt_ratio)?;
    let (gc, gf) = (c.gauss_growth(), f.gauss_growth());
    let mut rep = EstimateReport::new("gauss_constraint", "‖D^ℓE_ℓ(t)‖₂ - ‖D^ℓE_ℓ(0)‖₂ ≤ C dt² t");
    let rel = coarse.relative_gauss().max(fine.relative_gauss());
    rep.detail("relative_data_residual", rel);
    rep.detail(
        "final_residual",
        f.diagnostics.last().map_or(0.0, |d| d.gauss),
    );
    rep.detail("growth_coarse", gc);
    rep.detail("growth_fine", gf);
    rep.measured_constant = gf / (f.dt * f.dt * t_final);
    rep.refinement_order = order_above_floor(gc, gf, h_ratio);
    rep.pass = rel <= tolerances::CONSTRAINT_HYPOTHESIS
        && rep
            .refinement_order
            .is_none_or(|o| o >= tolerances::IDENTITY_ORDER);
    Ok(rep)
}

/// `B(s)` non-increasing along every flow, strictly while `‖F_s‖₂ > 1e-8`.
pub fn check_magnetic_monotonicity(flows: &[FlowTrajectory]) -> EstimateReport {
    let mut rep = EstimateReport::new(
        "magnetic_monotonicity",
        "B(s') ≤ B(s) for s' > s, strict while F_s ≠ 0",
    );
    let mut increases = 0usize;
    let mut flat = 0usize;
    let mut worst: f64 = 0.0;
    for traj in flows {
        for w in traj.samples.windows(2) {
            let (b0, b1) = (w[0].magnetic, w[1].magnetic);
            if b1 > b0 {
                increases += 1;
                worst = worst.max(ratio(b1 - b0, b0));
            } else if b1 == b0 && crate::lattice::lp_norm(&w[0].fs, 2.0) > 1e-8 {
                flat += 1;
            }
        }
    }
    rep.detail("runs", flows.len() as f64);
    rep.detail("increases", increases as f64);
    rep.detail("stalls", flat as f64);
    rep.measured_constant = worst;
    rep.pass = increases == 0 && flat == 0;
    rep
}

/// Largest sitewise `||F|²_a - |F|²_b|` over matching samples, relative to the
/// sample's `max |F|²_a`.
pub fn curvature_density_agreement(a: &FlowTrajectory, b: &FlowTrajectory) -> f64 {
    let mut worst: f64 = 0.0;
    for (p, q) in a.samples.iter().zip(&b.samples) {
        let x = smoothed_abs(&p.f, 0.0);
        let y = smoothed_abs(&q.f, 0.0);
        let top = x.iter().fold(0.0_f64, |m, v| m.max(v * v));
        let dev = x
            .iter()
            .zip(&y)
            .fold(0.0_f64, |m, (u, v)| m.max((u * u - v * v).abs()));
        worst = worst.max(ratio(dev, top));
    }
    worst
}

/// Caloric flow against the DeTurck flow moved into the caloric gauge, at the
/// configured step and at half of it.
pub fn check_deturck_equivalence(conn: &Connection, cfg: &FlowConfig) -> Result<EstimateReport> {
    let half = FlowConfig {
        cfl: 0.5 * cfg.cfl,
        dense: true,
        ..*cfg
    };
    let full = FlowConfig {
        dense: true,
        ..*cfg
    };
    let caloric = run_ymhf(conn, cfg, FlowGauge::Caloric)?;
    let rec = reconstruct_caloric(&run_ymhf(conn, &full, FlowGauge::DeTurck)?)?;
    let rec_half = reconstruct_caloric(&run_ymhf(conn, &half, FlowGauge::DeTurck)?)?;
    let agreement = curvature_density_agreement(&caloric, &rec.trajectory);
    let mut rep = EstimateReport::new(
        "deturck_equivalence",
        "||F|²_caloric - |F|²_DeTurck| ≤ ε max|F|², ‖Ã_s‖ → 0 with ds",
    );
    rep.detail("agreement", agreement);
    rep.detail("residual", rec.residual);
    rep.detail("residual_half_step", rec_half.residual);
    rep.detail("gauge_drift", rec.drift.max(rec_half.drift));
    rep.measured_constant = agreement;
    rep.refinement_order = order_above_floor(rec.residual, rec_half.residual, 2.0);
    rep.pass =
        agreement <= tolerances::DETURCK_AGREEMENT && rep.refinement_order.is_none_or(|o| o >= 1.0);
    Ok(rep)
}

/// Combines pointwise-comparison reports from two resolutions: every run must
/// pass, and each violation kind that is above the floor on the coarse grid must
/// shrink at order two.
pub fn check_pointwise_refinement(
    coarse: &[EstimateReport],
    fine: &[EstimateReport],
    h_ratio: f64,
) -> EstimateReport {
    let mut rep = EstimateReport::new(
        "pointwise_refinement",
        "violations ≤ C h², shrinking at order 2",
    );
    let worst = |runs: &[EstimateReport], key: &str| {
        runs.iter()
            .map(|r| r.details.get(key).copied().unwrap_or(0.0))
            .fold(0.0, f64::max)
    };
    let mut orders = Vec::new();
    for key in ["kato", "majorant", "max_principle"] {
        let (c, f) = (worst(coarse, key), worst(fine, key));
        rep.detail(format!("{key}_coarse"), c);
        rep.detail(format!("{key}_fine"), f);
        orders.push(order_above_floor(c, f, h_ratio));
    }
    let all: Vec<&EstimateReport> = coarse.iter().chain(fine).collect();
    rep.detail("runs", all.len() as f64);
    rep.detail("failed_runs", all.iter().filter(|r| !r.pass).count() as f64);
    rep.measured_constant = all.iter().map(|r| r.measured_constant).fold(0.0, f64::max);
    rep.refinement_order = min_order(orders);
    rep.pass = all.iter().all(|r| r.pass)
        && rep
            .refinement_order
            .is_none_or(|o| o >= tolerances::IDENTITY_ORDER);
    rep
}

fn order_report(
    name: &str,
    bound: &str,
    coarse: &[(&str, f64)],
    fine: &[(&str, f64)],
    h: (f64, f64),
) -> EstimateReport {
    let mut rep = EstimateReport::new(name, bound);
    let mut orders = Vec::new();
    let mut top: f64 = 0.0;
    for ((key, c), (_, f)) in coarse.iter().zip(fine) {
        rep.detail(format!("{key}_coarse"), *c);
        rep.detail(format!("{key}_fine"), *f);
        let o = order_above_floor(*c, *f, h.0 / h.1);
        if let Some(o) = o {
            rep.detail(format!("{key}_order"), o);
        }
        orders.push(o);
        top = top.max(f / (h.1 * h.1));
    }
    rep.measured_constant = top;
    rep.refinement_order = min_order(orders);
    rep.pass = rep
        .refinement_order
        .is_none_or(|o| o >= tolerances::IDENTITY_ORDER);
    rep
}

fn flow_h(traj: &FlowTrajectory) -> f64 {
    traj.samples[0].conn.grid().h()
}

/// Bianchi, caloric divergence and curvature transport residuals of two flows
/// of the same data on different grids.
pub fn check_flow_identities(coarse: &FlowTrajectory, fine: &FlowTrajectory) -> EstimateReport {
    let pick = |t: &FlowTrajectory| {
        let id = identity_residuals(t);
        [
            ("bianchi", id.bianchi),
            ("caloric_divergence", id.caloric_divergence),
            ("transport", id.transport),
        ]
    };
    order_report(
        "flow_identities",
        "residual ≤ C h², observed order ≥ 1.9",
        &pick(coarse),
        &pick(fine),
        (flow_h(coarse), flow_h(fine)),
    )
}

/// Interior slices of `coarse` paired with the fine slice at the same time.
///
/// Refinement orders compare residuals at common times only; the finer slab
/// has interior slices nearer its ends that the coarse one never sees.
pub fn shared_interior(coarse: &Assembly, fine: &Assembly) -> Vec<(usize, usize)> {
    let fine_interior = fine.interior();
    coarse
        .interior()
        .into_iter()
        .filter_map(|k| {
            let t = coarse.t[k];
            fine_interior
                .iter()
                .find(|&&j| (fine.t[j] - t).abs() <= 1e-9 * fine.dt)
                .map(|&j| (k, j))
        })
        .collect()
}

fn worst_shared(
    pairs: &[(usize, usize)],
    coarse: &Assembly,
    fine: &Assembly,
    at: impl Fn(&Assembly, usize) -> f64,
) -> (f64, f64) {
    pairs.iter().fold((0.0f64, 0.0f64), |(c, f), &(k, j)| {
        (c.max(at(coarse, k)), f.max(at(fine, j)))
    })
}

/// The `∇₀F_si` decomposition and the temporal relation `∂_tA̲_i = F̲_0i` on two
/// assemblies refined jointly in `h` and `dt`, compared at shared slice times.
pub fn check_assembly_identities(coarse: &Assembly, fine: &Assembly) -> Result<EstimateReport> {
    let pairs = shared_interior(coarse, fine);
    if pairs.is_empty() {
        return Err(Error::InvalidParameter(
            "assemblies share no interior slice time".into(),
        ));
    }
    let fs = worst_shared(&pairs, coarse, fine, fs_time_identity_residual_at);
    let tr = worst_shared(&pairs, coarse, fine, Assembly::temporal_relation_at);
    Ok(order_report(
        "assembly_identities",
        "residual ≤ C (h² + dt²), observed order ≥ 1.9",
        &[("fs_time_identity", fs.0), ("temporal_relation", tr.0)],
        &[("fs_time_identity", fs.1), ("temporal_relation", tr.1)],
        (flow_h(&coarse.flows[0]), flow_h(&fine.flows[0])),
    ))
}

const SUBSTITUTION_AXES: [&[usize]; 3] = [&[0], &[0, 1], &[2, 1, 0]];

/// Derivative substitution identities: exact reconstruction on each grid and
/// the lattice defect of their continuum form across two resolutions.
pub fn check_substitution(
    coarse: (&Connection, &LatticeField),
    fine: (&Connection, &LatticeField),
) -> Result<EstimateReport> {
    let h_ratio = coarse.0.grid().h() / fine.0.grid().h();
    let mut rep = EstimateReport::new(
        "substitution_identities",
        "exact reconstruction; continuum form within C h²",
    );
    let mut reconstruction: f64 = 0.0;
    let mut orders = Vec::new();
    for axes in SUBSTITUTION_AXES {
        for dir in [Direction::CovToUsual, Direction::UsualToCov] {
            let sc = substitute_derivatives(coarse.0, coarse.1, axes, dir)?;
            let sf = substitute_derivatives(fine.0, fine.1, axes, dir)?;
            reconstruction = reconstruction
                .max(sc.relative_error())
                .max(sf.relative_error());
            let tag = format!(
                "k{}_{}",
                axes.len(),
                if dir == Direction::CovToUsual {
                    "cov"
                } else {
                    "usual"
                }
            );
            let (c, f) = (sc.lattice_correction(), sf.lattice_correction());
            rep.detail(format!("{tag}_coarse"), c);
            rep.detail(format!("{tag}_fine"), f);
            orders.push(order_above_floor(c, f, h_ratio));
        }
    }
    rep.detail("reconstruction", reconstruction);
    rep.measured_constant = reconstruction;
    rep.refinement_order = min_order(orders);
    rep.pass = reconstruction <= tolerances::SUBSTITUTION
        && rep
            .refinement_order
            .is_none_or(|o| o >= tolerances::IDENTITY_ORDER);
    Ok(rep)
}

/// Post-transform `A̲_0` under joint refinement of `h` and `dt`, and the bounds
/// on the transform solving `∂_t V = V Ã_0` on the fine assembly.
pub fn check_gauge_ode(coarse: &Assembly, fine: &Assembly) -> Result<EstimateReport> {
    if fine.slices() < 3 || coarse.slices() < 3 {
        return Err(Error::InvalidParameter(
            "gauge ODE check needs at least three slices".into(),
        ));
    }
    let pairs = shared_interior(coarse, fine);
    if pairs.is_empty() {
        return Err(Error::InvalidParameter(
            "assemblies share no interior slice time".into(),
        ));
    }
    let (a0_coarse, a0_fine) = worst_shared(&pairs, coarse, fine, Assembly::a0_after_at);
    let h = |a: &Assembly| a.flows[0].samples[0].conn.grid().h();
    let a0: Vec<Field> = (0..fine.slices()).map(|k| fine.a0_top(k).clone()).collect();
    let v_bar = crate::gauge::GaugeTransform::identity(*a0[0].grid());
    let tg = temporal_gauge_ode(&fine.t, &a0, &v_bar)?;
    let mut rep = EstimateReport::new(
        "gauge_ode",
        "‖A̲_0‖₂ ≤ C (dt² + h²); ‖V(t)‖∞ ≤ ‖V̄‖∞ exp(∫‖A_0‖∞)",
    );
    rep.detail("a0_after_coarse", a0_coarse);
    rep.detail("a0_after_fine", a0_fine);
    rep.detail("a0_after_fine_all", fine.a0_after);
    rep.detail("envelope_ratio", tg.envelope_ratio);
    rep.detail("first_derivative_ratio", tg.first_derivative_ratio);
    rep.detail("second_derivative_ratio", tg.second_derivative_ratio);
    rep.detail("a0_norm", tg.a0_norm.total());
    rep.detail("drift", tg.drift.max(fine.drift).max(coarse.drift));
    rep.measured_constant = fine.a0_after / (fine.dt * fine.dt + h(fine) * h(fine));
    rep.refinement_order = order_above_floor(a0_coarse, a0_fine, h(coarse) / h(fine));
    rep.pass = rep
        .refinement_order
        .is_none_or(|o| o >= tolerances::IDENTITY_ORDER)
        && tg.envelope_ratio <= 1.0 + 1e-12
        && tg.first_derivative_ratio.is_finite()
        && tg.second_derivative_ratio.is_finite();
    Ok(rep)
}
