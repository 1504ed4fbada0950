//! Gauge transforms in t and the mixed space-time norm of `A_0`.

use crate::algebra::Su2;
use crate::error::{Error, Result};
use crate::gauge::GaugeTransform;
use crate::lattice::{diff, diff_quat, norms::real_lp, Field, Grid};
use crate::tolerances;

fn check_profile(t: &[f64], a0: &[Field]) -> Result<()> {
    if t.is_empty() || t.len() != a0.len() {
        return Err(Error::InvalidParameter(
            "A_0 profile needs one field per time".into(),
        ));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("times must increase".into()));
    }
    Ok(())
}

fn times_alg(u: &[Su2], a: &[crate::algebra::Alg], c: f64) -> Vec<Su2> {
    u.iter()
        .zip(a)
        .map(|(g, &x)| g.mul_alg(x).scale(c))
        .collect()
}

/// RK4 for `∂_t V = V A(t)` sitewise from `V(t_0) = v_bar`, with `A` linear
/// between samples. Returns `V` at every sample and the largest unit-norm drift
/// seen before renormalization.
pub(crate) fn integrate_group_ode(
    t: &[f64],
    a0: &[Field],
    v_bar: &GaugeTransform,
) -> Result<(Vec<GaugeTransform>, f64)> {
    check_profile(t, a0)?;
    let grid = *v_bar.grid();
    let mut v = v_bar.values().to_vec();
    let mut out = vec![v_bar.clone()];
    let mut drift: f64 = 0.0;
    for k in 0..t.len() - 1 {
        let dt = t[k + 1] - t[k];
        let (a, b) = (a0[k].data(), a0[k + 1].data());
        let mid: Vec<_> = a.iter().zip(b).map(|(&x, &y)| (x + y) * 0.5).collect();
        let k1 = times_alg(&v, a, 1.0);
        let v2: Vec<Su2> = v
            .iter()
            .zip(&k1)
            .map(|(g, d)| g.add(d.scale(0.5 * dt)))
            .collect();
        let k2 = times_alg(&v2, &mid, 1.0);
        let v3: Vec<Su2> = v
            .iter()
            .zip(&k2)
            .map(|(g, d)| g.add(d.scale(0.5 * dt)))
            .collect();
        let k3 = times_alg(&v3, &mid, 1.0);
        let v4: Vec<Su2> = v.iter().zip(&k3).map(|(g, d)| g.add(d.scale(dt))).collect();
        let k4 = times_alg(&v4, b, 1.0);
        for j in 0..v.len() {
            let incr = k1[j]
                .add(k2[j].scale(2.0))
                .add(k3[j].scale(2.0))
                .add(k4[j])
                .scale(dt / 6.0);
            let next = v[j].add(incr);
            drift = drift.max((next.norm() - v[j].norm()).abs());
            v[j] = next.normalize();
        }
        if drift > tolerances::GAUGE_ODE_DRIFT {
            return Err(Error::GaugeOdeDrift(drift));
        }
        out.push(GaugeTransform::from_values(grid, v.clone())?);
    }
    Ok((out, drift))
}

/// Solution of the temporal gauge ODE with the measured constants of its bounds.
pub struct TemporalGauge {
    pub transforms: Vec<GaugeTransform>,
    pub drift: f64,
    /// `sup_t ‖V(t)‖∞ / (‖V̄‖∞ exp(∫_0^t ‖A_0‖∞))`.
    pub envelope_ratio: f64,
    /// `‖∂_{t,x}V‖_{L∞L³} / (‖∂V̄‖_{L³} + 𝒜_0 ‖V̄‖∞)`.
    pub first_derivative_ratio: f64,
    /// `‖∂²_x V‖_{L∞L²} / (‖∂²V̄‖_{L²} + 𝒜_0 ‖V̄‖∞)`.
    pub second_derivative_ratio: f64,
    pub a0_norm: A0Norm,
}

fn quat_abs(u: &[Su2]) -> Vec<f64> {
    u.iter().map(|g| g.norm()).collect()
}

/// Pointwise `(Σ_a |∂_a V|²)^{1/2}`.
fn grad_quat(grid: &Grid, u: &[Su2]) -> Vec<f64> {
    let d: Vec<Vec<Su2>> = (0..3).map(|a| diff_quat(grid, u, a)).collect();
    (0..u.len())
        .map(|s| d.iter().map(|v| v[s].norm().powi(2)).sum::<f64>().sqrt())
        .collect()
}

/// Pointwise `(Σ_{a,b} |∂_a∂_b V|²)^{1/2}`.
fn hess_quat(grid: &Grid, u: &[Su2]) -> Vec<f64> {
    let mut acc = vec![0.0; u.len()];
    for a in 0..3 {
        let da = diff_quat(grid, u, a);
        for b in 0..3 {
            for (s, g) in diff_quat(grid, &da, b).iter().enumerate() {
                acc[s] += g.norm().powi(2);
            }
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// Integrates `∂_t V = V A_0` from `V(t_0) = v_bar` and records the ratios of the
/// three transform bounds.
pub fn temporal_gauge_ode(
    t: &[f64],
    a0: &[Field],
    v_bar: &GaugeTransform,
) -> Result<TemporalGauge> {
    let (transforms, drift) = integrate_group_ode(t, a0, v_bar)?;
    let grid = *v_bar.grid();
    let inf = f64::INFINITY;
    let vb = v_bar.values();
    let vb_sup = real_lp(&grid, &quat_abs(vb), inf);
    let mut integral = 0.0;
    let mut envelope_ratio: f64 = 0.0;
    let mut first: f64 = 0.0;
    let mut second: f64 = 0.0;
    for k in 0..t.len() {
        if k > 0 {
            integral += 0.5 * (t[k] - t[k - 1]) * (a0[k - 1].max_abs() + a0[k].max_abs());
        }
        let v = transforms[k].values();
        envelope_ratio =
            envelope_ratio.max(real_lp(&grid, &quat_abs(v), inf) / (vb_sup * integral.exp()));
        let grad = grad_quat(&grid, v);
        let dt_v: Vec<f64> = if t.len() < 2 {
            vec![0.0; v.len()]
        } else {
            let (hi, lo) = if k == 0 {
                (1, 0)
            } else if k + 1 == t.len() {
                (k, k - 1)
            } else {
                (k + 1, k - 1)
            };
            let dt = t[hi] - t[lo];
            let (vh, vl) = (transforms[hi].values(), transforms[lo].values());
            (0..v.len())
                .map(|s| vh[s].sub(vl[s]).scale(1.0 / dt).norm())
                .collect()
        };
        let combined: Vec<f64> = grad
            .iter()
            .zip(&dt_v)
            .map(|(g, d)| (g * g + d * d).sqrt())
            .collect();
        first = first.max(real_lp(&grid, &combined, 3.0));
        second = second.max(real_lp(&grid, &hess_quat(&grid, v), 2.0));
    }
    let a0_norm = a0_norm(t, a0)?;
    let ratio = |num: f64, base: f64| {
        let den = base + a0_norm.total() * vb_sup;
        if den > 0.0 {
            num / den
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    Ok(TemporalGauge {
        first_derivative_ratio: ratio(first, real_lp(&grid, &grad_quat(&grid, vb), 3.0)),
        second_derivative_ratio: ratio(second, real_lp(&grid, &hess_quat(&grid, vb), 2.0)),
        transforms,
        drift,
        envelope_ratio,
        a0_norm,
    })
}

/// The five mixed norms making up `𝒜_0(I)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct A0Norm {
    /// `‖A_0‖_{L∞_t L³_x}`.
    pub sup_l3: f64,
    /// `‖∂_x A_0‖_{L∞_t L²_x}`.
    pub sup_grad_l2: f64,
    /// `‖A_0‖_{L¹_t L∞_x}`.
    pub int_linf: f64,
    /// `‖∂_x A_0‖_{L¹_t L³_x}`.
    pub int_grad_l3: f64,
    /// `‖∂²_x A_0‖_{L¹_t L²_x}`.
    pub int_hess_l2: f64,
}

impl A0Norm {
    pub fn total(&self) -> f64 {
        self.sup_l3 + self.sup_grad_l2 + self.int_linf + self.int_grad_l3 + self.int_hess_l2
    }
}

fn field_abs(f: &Field) -> Vec<f64> {
    f.data().iter().map(|a| a.norm()).collect()
}

fn grad_abs(f: &Field) -> Vec<f64> {
    let d: Vec<Field> = (0..3).map(|a| diff(f, a)).collect();
    (0..f.grid().sites())
        .map(|s| d.iter().map(|g| g.data()[s].norm_sq()).sum::<f64>().sqrt())
        .collect()
}

fn hess_abs(f: &Field) -> Vec<f64> {
    let mut acc = vec![0.0; f.grid().sites()];
    for a in 0..3 {
        let da = diff(f, a);
        for b in 0..3 {
            for (s, g) in diff(&da, b).data().iter().enumerate() {
                acc[s] += g.norm_sq();
            }
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// `𝒜_0` over the sampled interval; `L¹_t` by the trapezoid rule, `L∞_t` by the max over samples.
pub fn a0_norm(t: &[f64], a0: &[Field]) -> Result<A0Norm> {
    check_profile(t, a0)?;
    let grid = *a0[0].grid();
    let per: Vec<[f64; 5]> = a0
        .iter()
        .map(|f| {
            let g = grad_abs(f);
            [
                real_lp(&grid, &field_abs(f), 3.0),
                real_lp(&grid, &g, 2.0),
                f.max_abs(),
                real_lp(&grid, &g, 3.0),
                real_lp(&grid, &hess_abs(f), 2.0),
            ]
        })
        .collect();
    let sup = |i: usize| per.iter().fold(0.0_f64, |m, v| m.max(v[i]));
    let int = |i: usize| {
        (1..t.len())
            .map(|k| 0.5 * (t[k] - t[k - 1]) * (per[k - 1][i] + per[k][i]))
            .sum::<f64>()
    };
    Ok(A0Norm {
        sup_l3: sup(0),
        sup_grad_l2: sup(1),
        int_linf: int(2),
        int_grad_l3: int(3),
        int_hess_l2: int(4),
    })
}
