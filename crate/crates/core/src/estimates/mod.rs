//! Quantitative checks of the parabolic and hyperbolic estimates.
//!
//! Every check measures both sides of an inequality (or the scaling of one side)
//! on computed trajectories and decides pass/fail by a named tolerance from
//! [`crate::tolerances`]. Constants are measured and reported, never assumed.

pub mod suite;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{
    apply_gauge, cov_diff, cov_div_one_form, cov_div_two_form, cov_laplace, cov_sobolev,
    covariant_diff, curvature, kato_excess, Connection,
};
use crate::heatflow::{curvature_coupling, FlowSample, FlowTrajectory};
use crate::hyperbolic::{i_norm, Assembly};
use crate::lattice::fourier::{central_symbol, Spectral};
use crate::lattice::norms::{axis_multisets, field_lp, real_lp};
use crate::lattice::{
    diff_field, pair_index, pnorm_s, Field, Grid, LatticeField, NormProfile, Rank, SPATIAL_PAIRS,
};
use crate::tolerances;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub measured_constant: f64,
    pub bound_form: String,
    pub pass: bool,
    pub refinement_order: Option<f64>,
    pub details: BTreeMap<String, f64>,
}

impl EstimateReport {
    pub(crate) fn new(name: &str, bound_form: &str) -> EstimateReport {
        EstimateReport {
            name: name.into(),
            measured_constant: 0.0,
            bound_form: bound_form.into(),
            pass: false,
            refinement_order: None,
            details: BTreeMap::new(),
        }
    }

    pub(crate) fn detail(&mut self, key: impl Into<String>, v: f64) {
        self.details.insert(key.into(), v);
    }

    /// Attaches `log(c_coarse / c_fine) / log(h_coarse / h_fine)` from a finer run.
    pub fn with_refinement(mut self, fine: &EstimateReport, h_ratio: f64) -> EstimateReport {
        self.refinement_order = Some(observed_order(
            self.measured_constant,
            fine.measured_constant,
            h_ratio,
        ));
        self
    }
}

/// Convergence order from two error levels with mesh ratio `h_ratio > 1`.
pub fn observed_order(coarse: f64, fine: f64, h_ratio: f64) -> f64 {
    (coarse / fine).ln() / h_ratio.ln()
}

/// Relative spread `max/min - 1` of positive values; 0 when all vanish.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min - 1.0
    }
}

pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Conserved energy of the data behind a trajectory: `½Σ‖F_0i‖² + B` for dynamic
/// flows, `B` otherwise.
pub fn data_energy(traj: &FlowTrajectory) -> f64 {
    let p = &traj.samples[0];
    p.magnetic + p.f0.as_ref().map_or(0.0, |e| 0.5 * e.l2_sq_total())
}

fn l2_total(v: &[Field]) -> f64 {
    v.iter().map(Field::l2_sq).sum::<f64>().sqrt()
}

fn spatial(p: &FlowSample) -> Connection {
    Connection {
        spatial: p.conn.spatial.clone(),
        temporal: None,
    }
}

/// `(Q∞(k), Q₂(k))` for `k = 1..=k_max`: `sup_s s^{(k-1)/2}‖D^{k-1}F‖₂` and
/// `(∫ s^k ‖D^k F‖₂² ds/s)^{1/2}`.
pub fn smoothing_f_norms(traj: &FlowTrajectory, k_max: usize) -> Result<Vec<(f64, f64)>> {
    weighted_pairs(traj, k_max, 0.0, |p| p.f.clone())
}

/// The same pairs for `F_s` with the extra weight `s^{1/2}`.
pub fn smoothing_fs_norms(traj: &FlowTrajectory, k_max: usize) -> Result<Vec<(f64, f64)>> {
    weighted_pairs(traj, k_max, 0.5, |p| p.fs.clone())
}

fn weighted_pairs(
    traj: &FlowTrajectory,
    k_max: usize,
    shift: f64,
    field: impl Fn(&FlowSample) -> LatticeField,
) -> Result<Vec<(f64, f64)>> {
    if k_max == 0 || k_max > 3 {
        return Err(Error::UnsupportedOrder(k_max));
    }
    let norms: Vec<Vec<f64>> = traj
        .samples
        .iter()
        .map(|p| {
            let conn = spatial(p);
            let f = field(p);
            (0..=k_max).map(|m| cov_sobolev(&conn, &f, m)).collect()
        })
        .collect();
    let interval = (0.0, traj.config.s_max);
    let mut out = Vec::new();
    for k in 1..=k_max {
        let sup = NormProfile::new(
            traj.s_grid()[1..].to_vec(),
            norms[1..].iter().map(|v| v[k - 1]).collect(),
        )?
        .with_zero(norms[0][k - 1]);
        let l2 = NormProfile::new(
            traj.s_grid()[1..].to_vec(),
            norms[1..].iter().map(|v| v[k]).collect(),
        )?;
        out.push((
            pnorm_s(&sup, shift + (k - 1) as f64 / 2.0, f64::INFINITY, interval)?,
            pnorm_s(&l2, shift + k as f64 / 2.0, 2.0, interval)?,
        ));
    }
    Ok(out)
}

fn sweep_report(
    name: &str,
    bound: &str,
    per_run: Vec<Vec<(f64, f64)>>,
    energies: &[f64],
) -> EstimateReport {
    let mut rep = EstimateReport::new(name, bound);
    let k_max = per_run.first().map_or(0, Vec::len);
    let mut pass = per_run
        .iter()
        .flatten()
        .all(|(a, b)| a.is_finite() && b.is_finite());
    let mut worst = 0.0_f64;
    for k in 0..k_max {
        for (form, pick) in [("sup", 0usize), ("l2", 1)] {
            let ratios: Vec<f64> = per_run
                .iter()
                .zip(energies)
                .map(|(q, &e)| ratio(if pick == 0 { q[k].0 } else { q[k].1 }, e.sqrt()))
                .collect();
            let sp = spread(&ratios);
            let top = ratios.iter().cloned().fold(0.0, f64::max);
            rep.detail(format!("k{}_{form}_spread", k + 1), sp);
            rep.detail(format!("k{}_{form}_ratio", k + 1), top);
            worst = worst.max(top);
            pass &= sp <= tolerances::SMOOTHING_SPREAD;
        }
    }
    rep.measured_constant = worst;
    rep.detail(
        "scaling_quantity",
        per_run.first().and_then(|q| q.first()).map_or(0.0, |p| p.0),
    );
    rep.pass = pass;
    rep
}

/// Weighted covariant derivatives of `F` against `√𝐄` across an amplitude sweep.
pub fn check_smoothing_f(sweep: &[FlowTrajectory], k_max: usize) -> Result<EstimateReport> {
    let per_run = sweep
        .iter()
        .map(|t| smoothing_f_norms(t, k_max))
        .collect::<Result<Vec<_>>>()?;
    let energies: Vec<f64> = sweep.iter().map(data_energy).collect();
    Ok(sweep_report(
        "smoothing_F",
        "s^{(k-1)/2}‖D^{k-1}F‖₂, (∫ s^k‖D^kF‖₂² ds/s)^{1/2} ≤ C_k √E",
        per_run,
        &energies,
    ))
}

/// The `F_s` variant, plus the sup-norm route by Gagliardo-Nirenberg:
/// `‖ψ‖∞ ≤ C ‖Dψ‖₂^{1/2} ‖D²ψ‖₂^{1/2}` for `ψ = D^{k-1}F_s`.
pub fn check_smoothing_fs(sweep: &[FlowTrajectory], k_max: usize) -> Result<EstimateReport> {
    let per_run = sweep
        .iter()
        .map(|t| smoothing_fs_norms(t, k_max))
        .collect::<Result<Vec<_>>>()?;
    let energies: Vec<f64> = sweep.iter().map(data_energy).collect();
    let mut rep = sweep_report(
        "smoothing_Fs",
        "s^{1/2+(k-1)/2}‖D^{k-1}F_s‖₂, (∫ s^{1+k}‖D^kF_s‖₂² ds/s)^{1/2} ≤ C_k √E",
        per_run,
        &energies,
    );
    for k in 1..=k_max.min(2) {
        let mut sup_ratios = Vec::new();
        let mut gn: f64 = 0.0;
        for (traj, &e) in sweep.iter().zip(&energies) {
            let mut sup: f64 = 0.0;
            for p in &traj.samples[1..] {
                let conn = spatial(p);
                let mut psi = vec![p.fs.clone()];
                for _ in 1..k {
                    psi = psi
                        .iter()
                        .flat_map(|g| {
                            (0..3)
                                .map(|a| covariant_diff(&conn, g, a))
                                .collect::<Vec<_>>()
                        })
                        .collect();
                }
                let linf = psi
                    .iter()
                    .map(|g| real_lp(g.grid(), &crate::gauge::smoothed_abs(g, 0.0), f64::INFINITY))
                    .fold(0.0, f64::max);
                let d1 = psi
                    .iter()
                    .map(|g| cov_sobolev(&conn, g, 1).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let d2 = psi
                    .iter()
                    .map(|g| cov_sobolev(&conn, g, 2).powi(2))
                    .sum::<f64>()
                    .sqrt();
                gn = gn.max(ratio(linf, (d1 * d2).sqrt()));
                sup = sup.max(p.s.powf(0.75 + k as f64 / 2.0) * linf);
            }
            sup_ratios.push(ratio(sup, e.sqrt()));
        }
        let sp = spread(&sup_ratios);
        rep.detail(format!("k{k}_linf_spread"), sp);
        rep.detail(
            format!("k{k}_linf_ratio"),
            sup_ratios.iter().cloned().fold(0.0, f64::max),
        );
        rep.detail(format!("k{k}_gagliardo_nirenberg"), gn);
        rep.pass &= sp <= tolerances::SMOOTHING_SPREAD && gn.is_finite();
    }
    Ok(rep)
}

/// `Σ_k sup_s s^{1/4+(k-1)/2}‖D^{k-1}F_s0‖₂` and `Σ_k (∫ (s^{1/4+k/2}‖D^kF_s0‖₂)² ds/s)^{1/2}`.
pub fn fs0_norms(traj: &FlowTrajectory, k_max: usize) -> Result<(f64, f64)> {
    if traj.samples[0].fs0.is_none() {
        return Err(Error::InvalidParameter("F_s0 needs a dynamic flow".into()));
    }
    let pairs = weighted_pairs(traj, k_max, 0.25, |p| {
        LatticeField::scalar(p.fs0.clone().expect("dynamic flow"))
    })?;
    Ok(pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y)))
}

/// Relative Gauss residual of the data behind a dynamic flow.
pub fn data_gauss(traj: &FlowTrajectory) -> f64 {
    let p = &traj.samples[0];
    let Some(e) = p.f0.as_ref() else { return 0.0 };
    let conn = spatial(p);
    let scale: f64 = (0..3)
        .map(|l| field_lp(&cov_diff(conn.a(l), &e.comps[l], l), 2.0))
        .sum();
    ratio(field_lp(&cov_div_one_form(&conn, e), 2.0), scale)
}

/// Scaling of the `F_s0` norms with the data amplitude, without checking the
/// constraint. `sweep` pairs amplitudes with dynamic flows.
pub fn fs0_amplitude_scaling(
    sweep: &[(f64, &FlowTrajectory)],
    k_max: usize,
) -> Result<EstimateReport> {
    if sweep.len() < 2 {
        return Err(Error::InvalidParameter(
            "amplitude scaling needs at least two runs".into(),
        ));
    }
    let mut runs: Vec<(f64, f64, f64)> = Vec::new();
    for (amp, traj) in sweep {
        let (sup, l2) = fs0_norms(traj, k_max)?;
        runs.push((*amp, sup, l2));
    }
    runs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rep = EstimateReport::new(
        "improved_Fs0",
        "Σ_k s^{1/4+(k-1)/2}‖D^{k-1}F_s0‖₂ ≤ C E; halving the amplitude divides it by ≈ 4",
    );
    let (lo, hi) = tolerances::FS0_RATIO;
    let mut pass = true;
    let mut worst: f64 = 0.0;
    // zero data: both sides vanish and there is nothing to scale
    let trivial = runs.iter().all(|r| r.1 == 0.0);
    for (j, w) in runs.windows(2).enumerate().filter(|_| !trivial) {
        let (a0, s0, l0) = w[0];
        let (a1, s1, l1) = w[1];
        // factor per halving of the amplitude
        let per_halving = |x0: f64, x1: f64| 2f64.powf((x1 / x0).ln() / (a1 / a0).ln());
        let r_sup = per_halving(s0, s1);
        let r_l2 = per_halving(l0, l1);
        rep.detail(format!("step{j}_sup_ratio"), r_sup);
        rep.detail(format!("step{j}_l2_ratio"), r_l2);
        pass &= r_sup.is_finite() && r_sup >= lo && r_sup <= hi;
        worst = worst.max((r_sup - 4.0).abs());
    }
    for (j, (a, s, l)) in runs.iter().enumerate() {
        rep.detail(format!("run{j}_amplitude"), *a);
        rep.detail(format!("run{j}_sup"), *s);
        rep.detail(format!("run{j}_l2"), *l);
    }
    let top = runs.last().expect("two runs");
    let e = data_energy(sweep.iter().find(|(a, _)| *a == top.0).expect("present").1);
    rep.measured_constant = ratio(top.1, e);
    rep.detail("scaling_quantity", top.1);
    rep.detail("max_deviation_from_4", worst);
    rep.pass = pass;
    Ok(rep)
}

/// Improved `F_s0` bound; the data must satisfy the Gauss constraint.
pub fn check_improved_fs0(
    sweep: &[(f64, &FlowTrajectory)],
    k_max: usize,
) -> Result<EstimateReport> {
    for (_, traj) in sweep {
        let g = data_gauss(traj);
        if g > tolerances::CONSTRAINT_HYPOTHESIS {
            return Err(Error::ConstraintViolated(g));
        }
    }
    fs0_amplitude_scaling(sweep, k_max)
}

/// Quantity obeying a covariant heat equation along the flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sigma {
    /// `F_ij`.
    F,
    /// `D_k F_ij` for all k and i < j.
    DxF,
    /// `F_s0` of a dynamic flow.
    Fs0,
}

/// Flow state rebuilt from stored fields.
struct State {
    conn: Connection,
    f: LatticeField,
    fs: LatticeField,
    f0: Option<LatticeField>,
}

impl State {
    fn from_fields(fields: &[Field]) -> State {
        let conn = Connection {
            spatial: LatticeField {
                rank: Rank::OneForm,
                comps: fields[..3].to_vec(),
            },
            temporal: None,
        };
        let f = curvature(&conn);
        let fs = cov_div_two_form(&conn, &f);
        let f0 = (fields.len() >= 6).then(|| LatticeField {
            rank: Rank::OneForm,
            comps: fields[3..6].to_vec(),
        });
        State { conn, f, fs, f0 }
    }

    fn from_sample(p: &FlowSample) -> State {
        State {
            conn: spatial(p),
            f: p.f.clone(),
            fs: p.fs.clone(),
            f0: p.f0.clone(),
        }
    }

    /// `∂_s F_ij = D_i F_sj - D_j F_si`, the exact derivative of the lattice curvature.
    fn f_dot(&self) -> Vec<Field> {
        SPATIAL_PAIRS
            .iter()
            .map(|&(i, j)| {
                let mut r = cov_diff(self.conn.a(i), &self.fs.comps[j], i);
                r.axpy(-1.0, &cov_diff(self.conn.a(j), &self.fs.comps[i], j));
                r
            })
            .collect()
    }

    /// `σ` and `N = ∂_s σ - D^ℓD_ℓ σ`.
    fn sigma_and_source(&self, sel: Sigma) -> Result<(Vec<Field>, Vec<Field>)> {
        let lap =
            |v: &[Field]| -> Vec<Field> { v.iter().map(|c| cov_laplace(&self.conn, c)).collect() };
        let minus = |a: Vec<Field>, b: Vec<Field>| -> Vec<Field> {
            a.iter().zip(&b).map(|(x, y)| x.sub(y)).collect()
        };
        match sel {
            Sigma::F => {
                let sigma = self.f.comps.clone();
                let n = minus(self.f_dot(), lap(&sigma));
                Ok((sigma, n))
            }
            Sigma::DxF => {
                let fd = self.f_dot();
                let mut sigma = Vec::new();
                let mut dot = Vec::new();
                for k in 0..3 {
                    #[allow(clippy::needless_range_loop)]
                    for p in 0..3 {
                        sigma.push(cov_diff(self.conn.a(k), &self.f.comps[p], k));
                        let mut d = cov_diff(self.conn.a(k), &fd[p], k);
                        d.axpy(1.0, &self.fs.comps[k].bracket(&self.f.comps[p]));
                        dot.push(d);
                    }
                }
                let n = minus(dot, lap(&sigma));
                Ok((sigma, n))
            }
            Sigma::Fs0 => {
                let f0 = self
                    .f0
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("F_s0 needs a dynamic flow".into()))?;
                let coupling = curvature_coupling(&self.f, f0);
                let fs0 = cov_div_one_form(&self.conn, f0).scale(-1.0);
                let mut dot = Field::zeros(*self.conn.grid());
                for l in 0..3 {
                    let mut f0_dot = cov_laplace(&self.conn, &f0.comps[l]);
                    f0_dot.axpy(1.0, &coupling.comps[l]);
                    dot.axpy(-1.0, &cov_diff(self.conn.a(l), &f0_dot, l));
                    dot.axpy(-1.0, &self.fs.comps[l].bracket(&f0.comps[l]));
                }
                let sigma = vec![fs0];
                let n = minus(vec![dot], lap(&sigma));
                Ok((sigma, n))
            }
        }
    }
}

fn grad_total(conn: &Connection, v: &[Field]) -> f64 {
    v.iter()
        .flat_map(|c| (0..3).map(move |a| cov_diff(conn.a(a), c, a).l2_sq()))
        .sum::<f64>()
        .sqrt()
}

/// Both sides of the energy integral inequality on `(s1, s2]` for weight `ell`:
/// `‖σ‖_{𝓛^{ℓ,∞}𝓛²} + ‖𝓓σ‖_{𝓛^{ℓ,2}𝓛²} ≤ s1^ℓ‖σ(s1)‖_{𝓛²(s1)} + (ℓ-3/4)₊‖σ‖_{𝓛^{ℓ,2}𝓛²} + ‖N‖_{𝓛^{ℓ+1,1}𝓛²}`.
pub fn check_energy_integral(
    traj: &FlowTrajectory,
    sel: Sigma,
    ell: f64,
    interval: (f64, f64),
) -> Result<EstimateReport> {
    let (s1, s2) = interval;
    let mut sig = Vec::new();
    let mut grad = Vec::new();
    let mut src = Vec::new();
    for p in &traj.samples {
        let st = State::from_sample(p);
        let (sigma, n) = st.sigma_and_source(sel)?;
        sig.push(l2_total(&sigma));
        grad.push(grad_total(&st.conn, &sigma));
        src.push(l2_total(&n));
    }
    let s = traj.s_grid();
    let prof = |v: &[f64]| -> Result<NormProfile> {
        Ok(NormProfile::new(s[1..].to_vec(), v[1..].to_vec())?.with_zero(v[0]))
    };
    let w = ell - 0.75;
    let sup = pnorm_s(&prof(&sig)?, w, f64::INFINITY, interval)?;
    let dterm = pnorm_s(&prof(&grad)?, w + 0.5, 2.0, interval)?;
    // the (ℓ - 3/4)₊ term is absent at the critical weight, where its norm may diverge
    let l2 = if w > 0.0 {
        pnorm_s(&prof(&sig)?, w, 2.0, interval)?
    } else {
        0.0
    };
    let nterm = pnorm_s(&prof(&src)?, w + 1.0, 1.0, interval)?;
    let start = if s1 == 0.0 {
        match w.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Equal) => sig[0],
            Some(std::cmp::Ordering::Greater) => 0.0,
            _ => f64::INFINITY,
        }
    } else {
        let k = s
            .iter()
            .position(|&x| (x - s1).abs() <= 1e-12 * s1.max(1.0))
            .ok_or(Error::ProfileRange {
                lo: s1,
                hi: s2,
                first: s[0],
                last: *s.last().unwrap(),
            })?;
        s1.powf(w) * sig[k]
    };
    let lhs = sup + dterm;
    let rhs = start + w.max(0.0) * l2 + nterm;
    let mut rep = EstimateReport::new(
        "energy_integral",
        "‖σ‖_{L^{ℓ,∞}L²} + ‖Dσ‖_{L^{ℓ,2}L²} ≤ C (s1^ℓ‖σ(s1)‖ + (ℓ-3/4)₊‖σ‖_{L^{ℓ,2}L²} + ‖N‖_{L^{ℓ+1,1}L²})",
    );
    rep.detail("lhs", lhs);
    rep.detail("rhs", rhs);
    rep.detail("ell", ell);
    // energy balance at the right end, an equality for the free heat flow at the critical weight
    let k2 = s
        .iter()
        .rposition(|&x| x <= s2 * (1.0 + 1e-12))
        .unwrap_or(0);
    let end = s2.powf(w) * sig[k2];
    rep.detail(
        "endpoint_balance",
        ratio(
            0.5 * end * end + dterm * dterm,
            0.5 * start * start + w.max(0.0) * l2 * l2 + nterm * sup,
        ),
    );
    rep.measured_constant = ratio(lhs, rhs);
    rep.pass = rep.measured_constant <= tolerances::ENERGY_INTEGRAL_CONSTANT;
    Ok(rep)
}

/// `∫_0^1 e^{-zw} w dw`.
fn phi_a(z: f64) -> f64 {
    if z < 0.1 {
        // Σ (-z)^k / (k! (k+2))
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 0..12 {
            sum += term / (k as f64 + 2.0);
            term *= -z / (k as f64 + 1.0);
        }
        sum
    } else {
        (1.0 - (-z).exp() * (1.0 + z)) / (z * z)
    }
}

/// `∫_0^1 e^{-zw} dw`.
fn phi_1(z: f64) -> f64 {
    if z < 1e-4 {
        1.0 - z / 2.0 + z * z / 6.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `u(s + ds) = e^{dsΔ}u + ds (φ_a(z) f_0 + (φ_1(z) - φ_a(z)) f_1)` for the
/// free heat equation with a source linear in s; exact mode by mode.
fn exp_step(spec: &Spectral, u: &[f64], f0: &[f64], f1: &[f64], ds: f64) -> Vec<f64> {
    let g = *spec.grid();
    let z = move |m: [usize; 3]| ds * central_symbol(&g, m);
    let mut out = spec.multiply_real(u, |m| (-z(m)).exp());
    let a = spec.multiply_real(f0, |m| phi_a(z(m)));
    let b = spec.multiply_real(f1, |m| phi_1(z(m)) - phi_a(z(m)));
    for k in 0..out.len() {
        out[k] += ds * (a[k] + b[k]);
    }
    out
}

fn site_abs(v: &[Field]) -> Vec<f64> {
    let sites = v[0].grid().sites();
    (0..sites)
        .map(|s| v.iter().map(|c| c.data()[s].norm_sq()).sum::<f64>().sqrt())
        .collect()
}

/// Pointwise comparisons along a dense trajectory: the Kato inequality
/// `|∂|σ|_ε| ≤ |Dσ|`, the Duhamel majorant `|σ(s)| ≤ e^{sΔ}|σ(0)| + ∫ e^{(s-s')Δ}|N|`,
/// and the weak maximum principle `‖σ(s)‖∞ ≤ ‖σ(0)‖∞ + ∫‖N‖∞`. Violations are
/// relative to `‖σ(0)‖∞` and compared with `C h²`.
pub fn check_duhamel_comparison(traj: &FlowTrajectory, sel: Sigma) -> Result<EstimateReport> {
    let dense = traj.dense.as_ref().ok_or_else(|| {
        Error::InvalidParameter("pointwise comparison needs a dense trajectory".into())
    })?;
    let grid = *traj.samples[0].conn.grid();
    let h = grid.h();
    let eps = h * h;
    let spec = Spectral::new(grid);
    let st0 = State::from_fields(&dense[0].1);
    let (sig0, n0) = st0.sigma_and_source(sel)?;
    let mut majorant = site_abs(&sig0);
    let scale = majorant.iter().cloned().fold(0.0, f64::max);
    let mut abs_prev = site_abs(&n0);
    let mut source_integral = 0.0;
    let mut n_sup_prev = abs_prev.iter().cloned().fold(0.0, f64::max);
    let mut majorant_violation = f64::NEG_INFINITY;
    let mut max_principle_violation = f64::NEG_INFINITY;
    let mut kato: f64 = 0.0;
    {
        let sl = LatticeField {
            rank: Rank::Scalar,
            comps: sig0.clone(),
        };
        kato = kato.max(kato_excess(&st0.conn, &sl, eps).0);
    }
    for k in 1..dense.len() {
        let ds = dense[k].0 - dense[k - 1].0;
        let st = State::from_fields(&dense[k].1);
        let (sigma, n) = st.sigma_and_source(sel)?;
        let abs_n = site_abs(&n);
        majorant = exp_step(&spec, &majorant, &abs_prev, &abs_n, ds);
        let abs_sigma = site_abs(&sigma);
        for (a, m) in abs_sigma.iter().zip(&majorant) {
            majorant_violation = majorant_violation.max(a - m);
        }
        let n_sup = abs_n.iter().cloned().fold(0.0, f64::max);
        source_integral += 0.5 * ds * (n_sup_prev + n_sup);
        let sup = abs_sigma.iter().cloned().fold(0.0, f64::max);
        max_principle_violation = max_principle_violation.max(sup - scale - source_integral);
        let sl = LatticeField {
            rank: Rank::Scalar,
            comps: sigma,
        };
        kato = kato.max(kato_excess(&st.conn, &sl, eps).0);
        abs_prev = abs_n;
        n_sup_prev = n_sup;
    }
    let rel = |v: f64| ratio(v.max(0.0), scale);
    let mut rep = EstimateReport::new(
        "pointwise_comparison",
        "violations of Kato, Duhamel majorant and maximum principle ≤ C h² ‖σ(0)‖∞",
    );
    rep.detail("kato", rel(kato));
    rep.detail("majorant", rel(majorant_violation));
    rep.detail("max_principle", rel(max_principle_violation));
    rep.detail("h", h);
    // signed: negative values are the margin by which the bound held
    rep.detail(
        "majorant_signed",
        majorant_violation / scale.max(f64::MIN_POSITIVE),
    );
    rep.detail(
        "max_principle_signed",
        max_principle_violation / scale.max(f64::MIN_POSITIVE),
    );
    let worst = rel(kato)
        .max(rel(majorant_violation))
        .max(rel(max_principle_violation));
    rep.measured_constant = worst / (h * h);
    rep.pass = rep.measured_constant <= tolerances::POINTWISE_COMPARISON;
    Ok(rep)
}

/// Largest sitewise deviation of an abelian flow's curvature from the exact
/// free heat semigroup applied to the initial curvature, relative to its size.
pub fn semigroup_defect(traj: &FlowTrajectory) -> f64 {
    let grid = *traj.samples[0].conn.grid();
    let spec = Spectral::new(grid);
    let f0 = &traj.samples[0].f;
    let scale = f0.max_abs();
    let mut worst: f64 = 0.0;
    for p in &traj.samples[1..] {
        for (c0, c) in f0.comps.iter().zip(&p.f.comps) {
            worst = worst.max(spec.heat_field(c0, p.s).sub(c).max_abs());
        }
    }
    ratio(worst, scale)
}

/// Time profile of a synthetic source `N(s, x) = φ(s) g(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SourceProfile {
    /// `φ(s) = s^a`.
    Power(f64),
    /// `φ(s) = exp(-((s - center)/width)²)`.
    Spike { center: f64, width: f64 },
}

impl SourceProfile {
    fn eval(&self, s: f64) -> f64 {
        match *self {
            SourceProfile::Power(a) => s.powf(a),
            SourceProfile::Spike { center, width } => (-((s - center) / width).powi(2)).exp(),
        }
    }

    /// `∫_0^s φ` for small s, to start the march.
    fn head_integral(&self, s: f64) -> f64 {
        match *self {
            SourceProfile::Power(a) => s.powf(a + 1.0) / (a + 1.0),
            SourceProfile::Spike { .. } => s * self.eval(s),
        }
    }
}

/// Points per octave and octaves of the geometric s-grid used by [`duhamel_l2_sides`].
pub const DUHAMEL_GRID: (usize, usize) = (64, 30);

/// Both sides of `(∫_0^{s0} s^{1/2}‖∫_0^s e^{(s-s')Δ}N ds'‖₂² ds/s)^{1/2} ≤ C (∫_0^{s0} s‖N‖₁² ds/s)^{1/2}`
/// for a separable source with spatial factor `g`.
pub fn duhamel_l2_sides(
    grid: Grid,
    g: &[f64],
    profile: SourceProfile,
    s0: f64,
) -> Result<(f64, f64)> {
    if g.len() != grid.sites() {
        return Err(Error::InvalidParameter(
            "source factor must live on the grid".into(),
        ));
    }
    if let SourceProfile::Power(a) = profile {
        if a <= -0.5 {
            return Err(Error::InvalidParameter(format!(
                "power {a} makes the source norm diverge"
            )));
        }
    }
    let spec = Spectral::new(grid);
    let (per, oct) = DUHAMEL_GRID;
    let m = per * oct;
    let s: Vec<f64> = (0..=m)
        .rev()
        .map(|j| s0 * (-(j as f64) / per as f64).exp2())
        .collect();
    let g_l1 = real_lp(&grid, g, 1.0);
    let mut u: Vec<f64> = g.iter().map(|v| v * profile.head_integral(s[0])).collect();
    let mut lhs_vals = vec![s[0].sqrt() * real_lp(&grid, &u, 2.0).powi(2)];
    for k in 1..s.len() {
        let ds = s[k] - s[k - 1];
        let f0: Vec<f64> = g.iter().map(|v| v * profile.eval(s[k - 1])).collect();
        let f1: Vec<f64> = g.iter().map(|v| v * profile.eval(s[k])).collect();
        u = exp_step(&spec, &u, &f0, &f1, ds);
        lhs_vals.push(s[k].sqrt() * real_lp(&grid, &u, 2.0).powi(2));
    }
    let rhs_vals: Vec<f64> = s
        .iter()
        .map(|&x| x * (g_l1 * profile.eval(x)).powi(2))
        .collect();
    // trapezoid in ln s, with the head below s[0] closed by the leading power law
    let integrate = |v: &[f64]| -> f64 {
        let du = (2f64).ln() / per as f64;
        let body: f64 = v.windows(2).map(|w| 0.5 * du * (w[0] + w[1])).sum();
        let alpha = if v[0] > 0.0 && v[1] > 0.0 {
            (v[1] / v[0]).ln() / du
        } else {
            0.0
        };
        body + if alpha > 0.0 { v[0] / alpha } else { 0.0 }
    };
    Ok((integrate(&lhs_vals).sqrt(), integrate(&rhs_vals).sqrt()))
}

/// Measured constant of the Duhamel `L²` bound over a family of source profiles.
pub fn check_duhamel_l2(
    grid: Grid,
    g: &[f64],
    family: &[SourceProfile],
    s0: f64,
) -> Result<EstimateReport> {
    let mut rep = EstimateReport::new(
        "duhamel_l2",
        "‖∫ e^{(s-s')Δ}N‖_{L^{1,2}L²} ≤ C ‖N‖_{L^{2,2}L¹}",
    );
    let mut worst: f64 = 0.0;
    for (j, p) in family.iter().enumerate() {
        let (l, r) = duhamel_l2_sides(grid, g, *p, s0)?;
        let c = ratio(l, r);
        rep.detail(format!("profile{j}"), c);
        worst = worst.max(c);
    }
    rep.measured_constant = worst;
    rep.pass = worst.is_finite() && worst <= tolerances::DUHAMEL_L2_CONSTANT;
    Ok(rep)
}

/// `Σ_{k<k_max} sup_s s^{1/4+k/2}‖∂^k A(s)‖∞` in the caloric-temporal gauge at slice `t`.
pub fn linfty_a_norm(asm: &Assembly, t: usize, k_max: usize) -> Result<Vec<f64>> {
    if k_max == 0 || k_max > 3 {
        return Err(Error::UnsupportedOrder(k_max));
    }
    let v = &asm.transforms[t];
    let mut out = vec![0.0_f64; k_max];
    for p in &asm.flows[t].samples[1..] {
        let a = apply_gauge(&spatial(p), v, None).spatial;
        for (k, o) in out.iter_mut().enumerate() {
            let mut sup: f64 = 0.0;
            for (seq, _) in axis_multisets(k) {
                let mut g = a.clone();
                for &ax in &seq {
                    g = diff_field(&g, ax);
                }
                sup = sup.max(crate::lattice::lp_norm(&g, f64::INFINITY));
            }
            *o = o.max(p.s.powf(0.25 + k as f64 / 2.0) * sup);
        }
    }
    Ok(out)
}

/// `s^{1/4+k/2}‖∂^kA‖∞` against `𝓘_A + C √𝐄` across an amplitude sweep of assemblies.
pub fn check_linfty_a(sweep: &[&Assembly], k_max: usize) -> Result<EstimateReport> {
    let mut rep = EstimateReport::new("linfty_A", "sup_s s^{1/4+k/2}‖∂^kA(s)‖∞ ≤ I_A(t) + C √E");
    let mut per_k: Vec<Vec<f64>> = vec![Vec::new(); k_max];
    for asm in sweep {
        let e = data_energy(&asm.flows[0]);
        let ia = i_norm(asm, 0, 3)?.a_part;
        for (k, q) in linfty_a_norm(asm, 0, k_max)?.into_iter().enumerate() {
            per_k[k].push(ratio(q, ia + e.sqrt()));
        }
    }
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for (k, r) in per_k.iter().enumerate() {
        let sp = spread(r);
        rep.detail(format!("k{k}_spread"), sp);
        rep.detail(format!("k{k}_ratio"), r.iter().cloned().fold(0.0, f64::max));
        worst = r.iter().cloned().fold(worst, f64::max);
        pass &= r.iter().all(|x| x.is_finite()) && sp <= tolerances::SMOOTHING_SPREAD;
    }
    rep.measured_constant = worst;
    rep.pass = pass;
    Ok(rep)
}

/// Growth of `𝓘(t)` over an assembly and the tracking of its `F_s` part by `√𝐄`
/// across an amplitude sweep. The growth exponent is `max_t log(𝓘(t)/𝓘(0)) / log(1+t)`
/// and must not exceed `depth + 1`.
pub fn check_ctrl_by_energy(sweep: &[&Assembly], depth: usize) -> Result<EstimateReport> {
    let mut rep = EstimateReport::new("ctrl_by_energy", "I_A(t) ≤ C (1+|t|)^N and I_Fs(t) ≤ C √E");
    let mut fs_ratios = Vec::new();
    let mut exponent: f64 = 0.0;
    for asm in sweep {
        let e = data_energy(&asm.flows[0]);
        let norms = (0..asm.slices())
            .map(|k| i_norm(asm, k, depth))
            .collect::<Result<Vec<_>>>()?;
        let i0 = norms[0].total();
        for (k, n) in norms.iter().enumerate().skip(1) {
            let t = asm.t[k] - asm.t[0];
            if i0 > 0.0 && n.total() > i0 {
                exponent = exponent.max((n.total() / i0).ln() / (1.0 + t).ln());
            }
        }
        let top = norms.iter().map(|n| n.fs_part).fold(0.0, f64::max);
        fs_ratios.push(ratio(top, e.sqrt()));
    }
    let sp = spread(&fs_ratios);
    rep.detail("growth_exponent", exponent);
    rep.detail("exponent_limit", (depth + 1) as f64);
    rep.detail("fs_spread", sp);
    rep.measured_constant = fs_ratios.iter().cloned().fold(0.0, f64::max);
    rep.pass = exponent <= (depth + 1) as f64 && sp <= tolerances::SMOOTHING_SPREAD;
    Ok(rep)
}

/// Residuals of identities that hold exactly in the continuum, maximized over the samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// `‖D_0F_12 + D_1F_20 + D_2F_01‖₂`.
    pub bianchi: f64,
    /// `‖D^ℓ F_sℓ‖₂`.
    pub caloric_divergence: f64,
    /// `‖∂_sF_ij - D^ℓD_ℓF_ij - 2[F_i^ℓ, F_jℓ]‖₂` with the exact lattice `∂_sF`.
    pub transport: f64,
}

pub fn identity_residuals(traj: &FlowTrajectory) -> IdentityResiduals {
    let mut out = IdentityResiduals::default();
    for p in &traj.samples {
        let st = State::from_sample(p);
        out.bianchi = out
            .bianchi
            .max(crate::gauge::bianchi_residual(&st.conn, &st.f));
        out.caloric_divergence = out
            .caloric_divergence
            .max(field_lp(&cov_div_one_form(&st.conn, &st.fs), 2.0));
        let (_, n) = st
            .sigma_and_source(Sigma::F)
            .expect("F is always available");
        for (idx, &(i, j)) in SPATIAL_PAIRS.iter().enumerate() {
            let mut r = n[idx].clone();
            for l in 0..3 {
                if let (Some((a, sa)), Some((b, sb))) = (pair_index(i, l), pair_index(j, l)) {
                    r.axpy(2.0 * sa * sb, &st.f.comps[a].bracket(&st.f.comps[b]));
                }
            }
            out.transport = out.transport.max(field_lp(&r, 2.0));
        }
    }
    out
}

/// p-normalized reading of an unnormalized inequality at one s: both sides are
/// multiplied by `s^weight`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correspondence {
    pub s: f64,
    pub weight: f64,
    pub raw: (f64, f64),
    pub normalized: (f64, f64),
}

impl Correspondence {
    pub fn new(s: f64, weight: f64, raw_lhs: f64, raw_rhs: f64) -> Correspondence {
        let w = s.powf(weight);
        Correspondence {
            s,
            weight,
            raw: (raw_lhs, raw_rhs),
            normalized: (w * raw_lhs, w * raw_rhs),
        }
    }

    /// Whether `lhs ≤ c · rhs` holds in the normalized form.
    pub fn holds(&self, c: f64) -> bool {
        self.normalized.0 <= c * self.normalized.1
    }
}

/// p-normalized `L^q` norm at scale s: `s^{-3/(2q)}‖f‖_q`, with `q = ∞` unweighted.
pub fn p_normalized_lq(f: &Field, q: f64, s: f64) -> f64 {
    let w = if q.is_infinite() { 0.0 } else { -1.5 / q };
    s.powf(w) * field_lp(f, q)
}
