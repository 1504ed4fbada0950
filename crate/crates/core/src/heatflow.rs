//! Yang-Mills heat flow in the caloric and DeTurck gauges, the gauge ODE
//! relating them, the dynamic flow carrying `A_0`, and the linear covariant
//! heat equation for `F_0i`.

use serde::{Deserialize, Serialize};

use crate::algebra::Su2;
use crate::error::{Error, Result};
use crate::gauge::{
    apply_gauge, cov_diff, cov_div_one_form, cov_div_two_form, cov_laplace, curvature,
    div_one_form, Connection, GaugeTransform,
};
use crate::lattice::{diff_field, lp_norm, pair_index, Field, LatticeField, NormProfile, Rank};
use crate::tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Rk4,
    Euler,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowGauge {
    Caloric,
    DeTurck,
}

/// Geometric sample points `s_max · 2^{-j/per_octave}` for `j = 0..=per_octave·octaves`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub per_octave: usize,
    pub octaves: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            per_octave: 4,
            octaves: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub s_max: f64,
    /// Step size `ds = cfl · h²`.
    pub cfl: f64,
    pub schedule: Schedule,
    pub integrator: Integrator,
    /// Keep the state after every step, not only at the samples.
    pub dense: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            s_max: 1.0,
            cfl: 0.1,
            schedule: Schedule::default(),
            integrator: Integrator::Rk4,
            dense: false,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.25) {
            return Err(Error::InvalidParameter(format!(
                "flow cfl {} must lie in (0, 0.25]",
                self.cfl
            )));
        }
        if !(self.s_max > 0.0 && self.s_max <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "s_max {} must lie in (0, 1]",
                self.s_max
            )));
        }
        if self.schedule.per_octave == 0 {
            return Err(Error::InvalidParameter(
                "schedule needs at least one sample per octave".into(),
            ));
        }
        Ok(())
    }

    /// Sample points, starting with 0 and increasing to `s_max`.
    pub fn sample_points(&self) -> Vec<f64> {
        let m = self.schedule.per_octave * self.schedule.octaves;
        let mut s = vec![0.0];
        s.extend(
            (0..=m)
                .rev()
                .map(|j| self.s_max * (-(j as f64) / self.schedule.per_octave as f64).exp2()),
        );
        s
    }
}

/// Flow state at one sample.
#[derive(Clone, Debug)]
pub struct FlowSample {
    pub s: f64,
    pub conn: Connection,
    /// `F_ij`, recomputed from the connection.
    pub f: LatticeField,
    /// `F_si = D^ℓ F_ℓi`.
    pub fs: LatticeField,
    /// `F_0i` of the dynamic flow.
    pub f0: Option<LatticeField>,
    /// `F_s0 = D^ℓ F_ℓ0` of the dynamic flow.
    pub fs0: Option<Field>,
    pub magnetic: f64,
}

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub config: FlowConfig,
    pub gauge: FlowGauge,
    pub samples: Vec<FlowSample>,
    /// Step-resolved states (`s`, flattened fields) when `config.dense` is set.
    pub dense: Option<Vec<(f64, Vec<Field>)>>,
}

impl FlowTrajectory {
    pub fn s_grid(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.s).collect()
    }

    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("trajectories are never empty")
    }

    pub fn magnetic(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.magnetic).collect()
    }

    /// Profile of `value` over the positive samples, with the s = 0 value attached.
    pub fn profile(&self, value: impl Fn(&FlowSample) -> f64) -> Result<NormProfile> {
        let (zero, rest) = self
            .samples
            .split_first()
            .expect("trajectories are never empty");
        let s = rest.iter().map(|p| p.s).collect();
        let v = rest.iter().map(&value).collect();
        Ok(NormProfile::new(s, v)?.with_zero(value(zero)))
    }

    /// Spatial connection at `s`, linearly interpolated between stored states.
    pub fn connection_at(&self, s: f64) -> Connection {
        let stored: Vec<(f64, &[Field])> = match &self.dense {
            Some(d) => d.iter().map(|(s, st)| (*s, &st[..3])).collect(),
            None => self
                .samples
                .iter()
                .map(|p| (p.s, &p.conn.spatial.comps[..]))
                .collect(),
        };
        let k = stored.partition_point(|(t, _)| *t < s);
        let one_form = |c: &[Field]| LatticeField {
            rank: Rank::OneForm,
            comps: c[..3].to_vec(),
        };
        if k == 0 {
            return Connection {
                spatial: one_form(stored[0].1),
                temporal: None,
            };
        }
        if k >= stored.len() {
            return Connection {
                spatial: one_form(stored[stored.len() - 1].1),
                temporal: None,
            };
        }
        let (s0, a) = stored[k - 1];
        let (s1, b) = stored[k];
        let t = (s - s0) / (s1 - s0);
        let comps = (0..3)
            .map(|i| {
                let mut f = a[i].scale(1.0 - t);
                f.axpy(t, &b[i]);
                f
            })
            .collect();
        Connection {
            spatial: LatticeField {
                rank: Rank::OneForm,
                comps,
            },
            temporal: None,
        }
    }
}

/// `∂_s A_i = D^ℓ F_ℓi`.
pub fn ymhf_caloric_step(conn: &Connection) -> LatticeField {
    cov_div_two_form(conn, &curvature(conn))
}

/// `∂_s A_i = D^ℓ F_ℓi + D_i (∂^ℓ A_ℓ)`.
pub fn deturck_step(conn: &Connection) -> LatticeField {
    let mut v = ymhf_caloric_step(conn);
    let div = div_one_form(&conn.spatial);
    for i in 0..3 {
        v.comps[i].axpy(1.0, &cov_diff(conn.a(i), &div, i));
    }
    v
}

/// Magnetic energy `½ Σ_{i<j} ‖F_ij‖²`.
pub fn magnetic_energy(f: &LatticeField) -> f64 {
    0.5 * f.l2_sq_total()
}

fn one_form(comps: &[Field]) -> LatticeField {
    LatticeField {
        rank: Rank::OneForm,
        comps: comps.to_vec(),
    }
}

fn conn_of(state: &[Field]) -> Connection {
    Connection {
        spatial: one_form(&state[..3]),
        temporal: state.get(6).cloned(),
    }
}

/// `2 [F_i^ℓ, σ_ℓ]` summed over ℓ, for a one-form σ.
pub fn curvature_coupling(f: &LatticeField, sigma: &LatticeField) -> LatticeField {
    let grid = *f.grid();
    let comps = (0..3)
        .map(|i| {
            let mut out = Field::zeros(grid);
            for l in 0..3 {
                if let Some((k, sign)) = pair_index(i, l) {
                    out.axpy(2.0 * sign, &f.comps[k].bracket(&sigma.comps[l]));
                }
            }
            out
        })
        .collect();
    LatticeField {
        rank: Rank::OneForm,
        comps,
    }
}

fn dymhf_velocity(state: &[Field]) -> Vec<Field> {
    let conn = Connection {
        spatial: one_form(&state[..3]),
        temporal: None,
    };
    let f = curvature(&conn);
    let f0 = one_form(&state[3..6]);
    let mut out = cov_div_two_form(&conn, &f).comps;
    let coupling = curvature_coupling(&f, &f0);
    for i in 0..3 {
        let mut v = cov_laplace(&conn, &f0.comps[i]);
        v.axpy(1.0, &coupling.comps[i]);
        out.push(v);
    }
    out.push(cov_div_one_form(&conn, &f0).scale(-1.0));
    out
}

fn combine(y: &[Field], c: f64, k: &[Field]) -> Vec<Field> {
    y.iter()
        .zip(k)
        .map(|(a, b)| {
            let mut r = a.clone();
            r.axpy(c, b);
            r
        })
        .collect()
}

/// One explicit step of `y' = v(s, y)`.
pub(crate) fn step<V>(y: &[Field], s: f64, ds: f64, integrator: Integrator, v: &V) -> Vec<Field>
where
    V: Fn(f64, &[Field]) -> Vec<Field>,
{
    match integrator {
        Integrator::Euler => combine(y, ds, &v(s, y)),
        Integrator::Rk4 => {
            let k1 = v(s, y);
            let k2 = v(s + 0.5 * ds, &combine(y, 0.5 * ds, &k1));
            let k3 = v(s + 0.5 * ds, &combine(y, 0.5 * ds, &k2));
            let k4 = v(s + ds, &combine(y, ds, &k3));
            let mut out = y.to_vec();
            for (j, o) in out.iter_mut().enumerate() {
                o.axpy(ds / 6.0, &k1[j]);
                o.axpy(ds / 3.0, &k2[j]);
                o.axpy(ds / 3.0, &k3[j]);
                o.axpy(ds / 6.0, &k4[j]);
            }
            out
        }
    }
}

/// Steps covering `[a, b]` with size at most `cfl · h²`.
pub(crate) fn segment_steps(a: f64, b: f64, max_step: f64) -> (usize, f64) {
    let n = ((b - a) / max_step * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (n, (b - a) / n as f64)
}

fn sup_of(state: &[Field]) -> f64 {
    state.iter().fold(0.0, |m, f| m.max(f.max_abs()))
}

fn make_sample(s: f64, state: &[Field]) -> FlowSample {
    let conn = conn_of(state);
    let spatial_only = Connection {
        spatial: conn.spatial.clone(),
        temporal: None,
    };
    let f = curvature(&spatial_only);
    let fs = cov_div_two_form(&spatial_only, &f);
    let (f0, fs0) = if state.len() > 3 {
        let f0 = one_form(&state[3..6]);
        let fs0 = cov_div_one_form(&spatial_only, &f0).scale(-1.0);
        (Some(f0), Some(fs0))
    } else {
        (None, None)
    };
    let magnetic = magnetic_energy(&f);
    FlowSample {
        s,
        conn,
        f,
        fs,
        f0,
        fs0,
        magnetic,
    }
}

fn integrate<V>(
    init: Vec<Field>,
    cfg: &FlowConfig,
    gauge: FlowGauge,
    v: V,
) -> Result<FlowTrajectory>
where
    V: Fn(f64, &[Field]) -> Vec<Field>,
{
    cfg.validate()?;
    let h = init[0].grid().h();
    let max_step = cfg.cfl * h * h;
    let points = cfg.sample_points();
    let mut state = init;
    let mut samples = vec![make_sample(0.0, &state)];
    let mut dense = cfg.dense.then(|| vec![(0.0, state.clone())]);
    for w in points.windows(2) {
        let (n, ds) = segment_steps(w[0], w[1], max_step);
        for j in 0..n {
            let s = w[0] + j as f64 * ds;
            state = step(&state, s, ds, cfg.integrator, &v);
            let sup = sup_of(&state);
            #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
            if !(sup <= tolerances::BLOWUP) {
                return Err(Error::FlowDiverged { s: s + ds, sup });
            }
            if let Some(d) = dense.as_mut() {
                let s_next = if j + 1 == n { w[1] } else { s + ds };
                d.push((s_next, state.clone()));
            }
        }
        samples.push(make_sample(w[1], &state));
    }
    Ok(FlowTrajectory {
        config: *cfg,
        gauge,
        samples,
        dense,
    })
}

/// Yang-Mills heat flow of the spatial connection in the chosen gauge.
pub fn run_ymhf(conn0: &Connection, cfg: &FlowConfig, gauge: FlowGauge) -> Result<FlowTrajectory> {
    let init = conn0.spatial.comps.clone();
    let velocity = move |_: f64, y: &[Field]| {
        let conn = Connection {
            spatial: one_form(y),
            temporal: None,
        };
        match gauge {
            FlowGauge::Caloric => ymhf_caloric_step(&conn).comps,
            FlowGauge::DeTurck => deturck_step(&conn).comps,
        }
    };
    integrate(init, cfg, gauge, velocity)
}

/// Dynamic heat flow in the caloric gauge: `A_i` by the heat flow, `F_0i` by the
/// covariant heat equation with curvature coupling, and `∂_s A_0 = -D^ℓ F_0ℓ`,
/// advanced together in one state. `e0` is `F_0i` at `s = 0`.
pub fn run_dymhf(
    conn0: &Connection,
    e0: &LatticeField,
    cfg: &FlowConfig,
) -> Result<FlowTrajectory> {
    if e0.rank != Rank::OneForm {
        return Err(Error::RankMismatch("F_0i data must be a one-form".into()));
    }
    let grid = *conn0.grid();
    let mut init = conn0.spatial.comps.clone();
    init.extend(e0.comps.iter().cloned());
    init.push(conn0.temporal.clone().unwrap_or_else(|| Field::zeros(grid)));
    integrate(init, cfg, FlowGauge::Caloric, |_, y| dymhf_velocity(y))
}

/// A DeTurck trajectory moved into the caloric gauge.
pub struct Reconstruction {
    pub trajectory: FlowTrajectory,
    /// `U(s)` at every sample.
    pub transforms: Vec<GaugeTransform>,
    /// Largest `‖Ã_s‖₂` over interior steps.
    pub residual: f64,
    /// Largest unit-norm drift of `U` before renormalization.
    pub drift: f64,
}

fn mul_alg_field(u: &[Su2], a: &Field) -> Vec<Su2> {
    u.iter().zip(a.data()).map(|(g, &x)| g.mul_alg(x)).collect()
}

fn axpy_quat(u: &[Su2], c: f64, k: &[Su2]) -> Vec<Su2> {
    u.iter().zip(k).map(|(a, b)| a.add(b.scale(c))).collect()
}

/// Integrates `∂_s U = U A_s` with `A_s = ∂^ℓ A_ℓ` along a dense DeTurck
/// trajectory and gauge-transforms every sample by `U(s)`.
pub fn reconstruct_caloric(traj: &FlowTrajectory) -> Result<Reconstruction> {
    if traj.gauge != FlowGauge::DeTurck {
        return Err(Error::InvalidParameter(
            "reconstruction needs a DeTurck trajectory".into(),
        ));
    }
    let dense = traj
        .dense
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("reconstruction needs a dense trajectory".into()))?;
    let grid = *traj.samples[0].conn.grid();
    let a_s = |st: &[Field]| div_one_form(&one_form(&st[..3]));
    let mut u = vec![Su2::IDENTITY; grid.sites()];
    let mut transforms = vec![GaugeTransform::identity(grid)];
    let mut next_sample = 1;
    let mut drift: f64 = 0.0;
    let mut residual: f64 = 0.0;
    // rolling window of (s, U, A_s) for the residual
    let mut window: Vec<(f64, Vec<Su2>, Field)> = vec![(0.0, u.clone(), a_s(&dense[0].1))];
    let mut a_prev = a_s(&dense[0].1);
    for k in 1..dense.len() {
        let (s0, s1) = (dense[k - 1].0, dense[k].0);
        let ds = s1 - s0;
        let a1 = a_s(&dense[k].1);
        let mut mid = a_prev.scale(0.5);
        mid.axpy(0.5, &a1);
        let k1 = mul_alg_field(&u, &a_prev);
        let k2 = mul_alg_field(&axpy_quat(&u, 0.5 * ds, &k1), &mid);
        let k3 = mul_alg_field(&axpy_quat(&u, 0.5 * ds, &k2), &mid);
        let k4 = mul_alg_field(&axpy_quat(&u, ds, &k3), &a1);
        for (j, g) in u.iter_mut().enumerate() {
            let next = g.add(
                k1[j]
                    .add(k2[j].scale(2.0))
                    .add(k3[j].scale(2.0))
                    .add(k4[j])
                    .scale(ds / 6.0),
            );
            drift = drift.max((next.norm() - 1.0).abs());
            *g = next.normalize();
        }
        if drift > tolerances::GAUGE_ODE_DRIFT {
            return Err(Error::GaugeOdeDrift(drift));
        }
        window.push((s1, u.clone(), a1.clone()));
        if window.len() == 3 {
            residual = residual.max(caloric_residual(&window));
            window.remove(0);
        }
        a_prev = a1;
        if next_sample < traj.samples.len() && (s1 - traj.samples[next_sample].s).abs() <= 1e-12 {
            transforms.push(GaugeTransform::from_values(grid, u.clone())?);
            next_sample += 1;
        }
    }
    let samples = traj
        .samples
        .iter()
        .zip(&transforms)
        .map(|(p, g)| {
            let conn = apply_gauge(
                &Connection {
                    spatial: p.conn.spatial.clone(),
                    temporal: None,
                },
                g,
                None,
            );
            make_sample(p.s, &conn.spatial.comps)
        })
        .collect();
    let trajectory = FlowTrajectory {
        config: traj.config,
        gauge: FlowGauge::Caloric,
        samples,
        dense: None,
    };
    Ok(Reconstruction {
        trajectory,
        transforms,
        residual,
        drift,
    })
}

/// `‖U A_s U⁻¹ - (∂_s U) U⁻¹‖₂` at the middle of three consecutive states.
fn caloric_residual(w: &[(f64, Vec<Su2>, Field)]) -> f64 {
    let (s0, s1, s2) = (w[0].0, w[1].0, w[2].0);
    let (h1, h2) = (s1 - s0, s2 - s1);
    let (c0, c1, c2) = (
        -h2 / (h1 * (h1 + h2)),
        (h2 - h1) / (h1 * h2),
        h1 / (h2 * (h1 + h2)),
    );
    let u = &w[1].1;
    let grid = *w[1].2.grid();
    let data = (0..u.len())
        .map(|k| {
            let du = w[0].1[k]
                .scale(c0)
                .add(u[k].scale(c1))
                .add(w[2].1[k].scale(c2));
            u[k].adjoint(w[1].2.data()[k]) - du.mul(u[k].inv()).project_alg()
        })
        .collect();
    let f = Field::from_data(grid, data).expect("same grid");
    crate::lattice::norms::field_lp(&f, 2.0)
}

/// Source term of the linear covariant heat equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatSource {
    None,
    /// `2 [F_i^ℓ, σ_ℓ]` as in the equation for `F_0i`.
    CurvatureCoupling,
}

pub struct HeatSolution {
    pub s: Vec<f64>,
    pub values: Vec<LatticeField>,
    /// `sup_x |σ(s)|` at the samples.
    pub sup: Vec<f64>,
    /// `∫_0^s ‖source‖∞` at the samples.
    pub source_integral: Vec<f64>,
}

/// `∂_s σ_i = D^ℓ D_ℓ σ_i + source` with coefficients read from `traj`.
pub fn solve_covariant_heat(
    traj: &FlowTrajectory,
    source: HeatSource,
    init: &LatticeField,
) -> Result<HeatSolution> {
    if init.rank != Rank::OneForm {
        return Err(Error::RankMismatch(
            "covariant heat solver takes a one-form".into(),
        ));
    }
    let cfg = traj.config;
    let h = init.grid().h();
    let max_step = cfg.cfl * h * h;
    let points = traj.s_grid();
    let velocity = |s: f64, y: &[Field]| -> Vec<Field> {
        let conn = traj.connection_at(s);
        let sigma = one_form(y);
        let mut out: Vec<Field> = y.iter().map(|c| cov_laplace(&conn, c)).collect();
        if source == HeatSource::CurvatureCoupling {
            let src = curvature_coupling(&curvature(&conn), &sigma);
            for (o, c) in out.iter_mut().zip(&src.comps) {
                o.axpy(1.0, c);
            }
        }
        out
    };
    let source_sup = |s: f64, y: &[Field]| -> f64 {
        match source {
            HeatSource::None => 0.0,
            HeatSource::CurvatureCoupling => lp_sup(&curvature_coupling(
                &curvature(&traj.connection_at(s)),
                &one_form(y),
            )),
        }
    };
    let mut state = init.comps.clone();
    let mut values = vec![init.clone()];
    let mut sup = vec![lp_sup(init)];
    let mut integral = 0.0;
    let mut source_integral = vec![0.0];
    for w in points.windows(2) {
        let (n, ds) = segment_steps(w[0], w[1], max_step);
        for j in 0..n {
            let s = w[0] + j as f64 * ds;
            let before = source_sup(s, &state);
            state = step(&state, s, ds, cfg.integrator, &velocity);
            let m = sup_of(&state);
            #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
            if !(m <= tolerances::BLOWUP) {
                return Err(Error::FlowDiverged { s: s + ds, sup: m });
            }
            integral += 0.5 * ds * (before + source_sup(s + ds, &state));
        }
        let v = one_form(&state);
        sup.push(lp_sup(&v));
        values.push(v);
        source_integral.push(integral);
    }
    Ok(HeatSolution {
        s: points,
        values,
        sup,
        source_integral,
    })
}

/// Sitewise sup of the magnitude summed over components.
fn lp_sup(f: &LatticeField) -> f64 {
    crate::gauge::smoothed_abs(f, 0.0)
        .into_iter()
        .fold(0.0, f64::max)
}

/// Perturbation growth between two caloric flows.
pub struct GronwallReport {
    pub s: Vec<f64>,
    /// `δ𝓑(s)`, the max of the sup norms of `δA`, `∂^ℓ δA_ℓ`, `δF`, `δF_s`.
    pub delta: Vec<f64>,
    /// Rate `K = C + C²` built from the sup norms of the two runs.
    pub rate: f64,
    /// Largest `δ𝓑(s) / (δ𝓑(0) e^{Ks})`.
    pub envelope_ratio: f64,
}

fn grad_sup(f: &LatticeField) -> f64 {
    (0..3).fold(0.0, |m, a| m.max(lp_norm(&diff_field(f, a), f64::INFINITY)))
}

/// Runs the flow from `conn0` and from `conn0 + scale·direction` and compares them.
pub fn gronwall_uniqueness_check(
    conn0: &Connection,
    cfg: &FlowConfig,
    direction: &LatticeField,
    scale: f64,
) -> Result<GronwallReport> {
    let a = run_ymhf(conn0, cfg, FlowGauge::Caloric)?;
    let mut spatial = conn0.spatial.clone();
    spatial.axpy(scale, direction);
    let b = run_ymhf(&Connection::new(spatial)?, cfg, FlowGauge::Caloric)?;
    let inf = f64::INFINITY;
    let mut delta = Vec::new();
    let mut c: f64 = 1.0;
    for (p, q) in a.samples.iter().zip(&b.samples) {
        let da = q.conn.spatial.sub(&p.conn.spatial);
        let d = lp_norm(&da, inf)
            .max(div_one_form(&da).max_abs())
            .max(lp_norm(&q.f.sub(&p.f), inf))
            .max(lp_norm(&q.fs.sub(&p.fs), inf));
        delta.push(d);
        for r in [p, q] {
            let sup = lp_norm(&r.conn.spatial, inf)
                .max(grad_sup(&r.conn.spatial))
                .max(lp_norm(&r.f, inf))
                .max(grad_sup(&r.f))
                .max(lp_norm(&r.fs, inf))
                .max(grad_sup(&r.fs));
            c = c.max(1.0 + sup);
        }
    }
    let rate = c + c * c;
    let s = a.s_grid();
    let envelope_ratio = if delta[0] > 0.0 {
        s.iter().zip(&delta).fold(0.0_f64, |m, (&s, &d)| {
            m.max(d / (delta[0] * (rate * s).exp()))
        })
    } else if delta.iter().all(|&d| d == 0.0) {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(GronwallReport {
        s,
        delta,
        rate,
        envelope_ratio,
    })
}
