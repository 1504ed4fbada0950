//! Caloric-temporal gauge: one dynamic heat flow per time slice, then the
//! s-independent gauge transform that removes `A_0` at the top of the flow.

use rayon::prelude::*;

use super::{CauchyData, SpacetimeSlab};
use crate::algebra::Su2;
use crate::error::{Error, Result};
use crate::gauge::{apply_gauge, cov_diff, cov_laplace, cov_sobolev, Connection, GaugeTransform};
use crate::heatflow::{run_dymhf, FlowConfig, FlowTrajectory};
use crate::lattice::{
    norms::field_lp, pair_index, pnorm_s, sobolev_norm, Field, LatticeField, NormProfile,
};

use super::temporal::integrate_group_ode;

/// A slab of dynamic heat flows with the gauge transform to the caloric-temporal gauge.
pub struct Assembly {
    pub dt: f64,
    pub t: Vec<f64>,
    /// Flows in the gauge `A_s = 0`, `A_0(s = 0) = 0`, one per slice.
    pub flows: Vec<FlowTrajectory>,
    /// `V(t)`, solving `∂_t V = V Ã_0` with `Ã_0 = A_0(s = s_max)`.
    pub transforms: Vec<GaugeTransform>,
    /// Largest unit-norm drift of `V` before renormalization.
    pub drift: f64,
    /// Relative Gauss residual of the first slice.
    pub initial_gauss: f64,
    /// Largest `‖A̲_0‖₂` over interior slices after the transform.
    pub a0_after: f64,
    /// Largest `max_i ‖∂_t A̲_i - F̲_0i‖₂` over interior slices.
    pub temporal_relation: f64,
}

impl Assembly {
    pub fn slices(&self) -> usize {
        self.t.len()
    }

    pub fn s_max(&self) -> f64 {
        self.flows[0].config.s_max
    }

    /// `Ã_0 = A_0(s = s_max)` at slice `k`, before the transform.
    pub fn a0_top(&self, k: usize) -> &Field {
        self.flows[k]
            .last()
            .conn
            .temporal
            .as_ref()
            .expect("dynamic flows carry A_0")
    }

    /// `A̲_i` at slice `k`: the connection at `s = s_max` after the transform.
    pub fn a_under(&self, k: usize) -> LatticeField {
        let conn = Connection {
            spatial: self.flows[k].last().conn.spatial.clone(),
            temporal: None,
        };
        apply_gauge(&conn, &self.transforms[k], None).spatial
    }

    /// `F̲_0i` at slice `k`.
    pub fn f0_under(&self, k: usize) -> LatticeField {
        self.flows[k]
            .last()
            .f0
            .as_ref()
            .expect("dynamic flows carry F_0i")
            .adjoint_by(self.transforms[k].values())
    }

    /// `F_si` at slice `k`, sample `j`, after the transform.
    pub fn fs_under(&self, k: usize, j: usize) -> LatticeField {
        self.flows[k].samples[j]
            .fs
            .adjoint_by(self.transforms[k].values())
    }

    /// Neighbouring slices and the divisor for a t-derivative at slice `k`;
    /// the last flag marks a one-sided difference.
    fn stencil(&self, k: usize) -> (usize, usize, f64, bool) {
        let n = self.slices();
        if k == 0 {
            (1, 0, self.dt, true)
        } else if k + 1 == n {
            (k, k - 1, self.dt, true)
        } else {
            (k + 1, k - 1, 2.0 * self.dt, false)
        }
    }

    /// `‖A̲_0‖₂` at slice `k` after the transform.
    pub fn a0_after_at(&self, k: usize) -> f64 {
        a0_under_norm(self, k)
    }

    /// `max_i ‖∂_t A̲_i - F̲_0i‖₂` at slice `k`.
    pub fn temporal_relation_at(&self, k: usize) -> f64 {
        let (da, _) = self.time_derivative(k, |j| self.a_under(j));
        crate::lattice::lp_norm(&da.sub(&self.f0_under(k)), 2.0)
    }

    /// Interior slice indices, where t-derivatives are central.
    pub fn interior(&self) -> Vec<usize> {
        interior(self.slices())
    }

    /// Central (or one-sided at the ends) t-derivative of a slice quantity.
    pub fn time_derivative(
        &self,
        k: usize,
        value: impl Fn(usize) -> LatticeField,
    ) -> (LatticeField, bool) {
        let (hi, lo, div, one_sided) = self.stencil(k);
        (value(hi).sub(&value(lo)).scale(1.0 / div), one_sided)
    }
}

fn interior(n: usize) -> Vec<usize> {
    if n >= 3 {
        (1..n - 1).collect()
    } else {
        (0..n).collect()
    }
}

/// Runs the dynamic flow on every slice and integrates the gauge ODE in t.
///
/// The slab must keep every slice. The Gauss residual is recorded, not enforced;
/// estimates that need the constraint check it themselves.
pub fn build_caloric_temporal(slab: &SpacetimeSlab, cfg: &FlowConfig) -> Result<Assembly> {
    cfg.validate()?;
    if slab.slices.len() != slab.t.len() || slab.slices.is_empty() {
        return Err(Error::InvalidParameter(
            "assembly needs a slab that keeps every slice".into(),
        ));
    }
    let cfg = FlowConfig {
        dense: false,
        ..*cfg
    };
    let initial_gauss =
        CauchyData::new(slab.slices[0].0.clone(), slab.slices[0].1.clone())?.relative_gauss();
    let flows = slab
        .slices
        .par_iter()
        .map(|(a, e)| run_dymhf(&Connection::new(a.clone())?, e, &cfg))
        .collect::<Result<Vec<_>>>()?;
    let grid = *slab.slices[0].0.grid();
    let a0: Vec<Field> = flows
        .iter()
        .map(|f| {
            f.last()
                .conn
                .temporal
                .clone()
                .expect("dynamic flows carry A_0")
        })
        .collect();
    let (transforms, drift) = integrate_group_ode(&slab.t, &a0, &GaugeTransform::identity(grid))?;
    let mut asm = Assembly {
        dt: slab.dt,
        t: slab.t.clone(),
        flows,
        transforms,
        drift,
        initial_gauss,
        a0_after: 0.0,
        temporal_relation: 0.0,
    };
    if asm.slices() >= 2 {
        for k in interior(asm.slices()) {
            asm.a0_after = asm.a0_after.max(asm.a0_after_at(k));
            asm.temporal_relation = asm.temporal_relation.max(asm.temporal_relation_at(k));
        }
    }
    Ok(asm)
}

/// `‖V Ã_0 V⁻¹ - (∂_t V) V⁻¹‖₂` with `∂_t V` by differences across slices.
fn a0_under_norm(asm: &Assembly, k: usize) -> f64 {
    let (hi, lo, div, _) = asm.stencil(k);
    let (vh, vl) = (asm.transforms[hi].values(), asm.transforms[lo].values());
    let v = asm.transforms[k].values();
    let a0 = asm.a0_top(k);
    let data = (0..v.len())
        .map(|s| {
            let dv: Su2 = vh[s].sub(vl[s]).scale(1.0 / div);
            v[s].adjoint(a0.data()[s]) - dv.mul(v[s].inv()).project_alg()
        })
        .collect();
    field_lp(&Field::from_data(*a0.grid(), data).expect("same grid"), 2.0)
}

/// Largest `‖∂_t F_si - (D^ℓD_ℓ F_0i - 2[F_0^ℓ, F_iℓ] + D_i F_s0 - [A_0, F_si])‖₂`
/// over interior slices and all samples, in the flow gauge.
pub fn fs_time_identity_residual(asm: &Assembly) -> f64 {
    if asm.slices() < 3 {
        return 0.0;
    }
    interior(asm.slices())
        .into_iter()
        .map(|k| fs_time_identity_residual_at(asm, k))
        .fold(0.0, f64::max)
}

/// The same residual at slice `k`, over all samples.
pub fn fs_time_identity_residual_at(asm: &Assembly, k: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..asm.flows[k].samples.len() {
        let (dfs, _) = asm.time_derivative(k, |m| asm.flows[m].samples[j].fs.clone());
        let p = &asm.flows[k].samples[j];
        let conn = &p.conn;
        let f0 = p.f0.as_ref().expect("dynamic flows carry F_0i");
        let fs0 = p.fs0.as_ref().expect("dynamic flows carry F_s0");
        let a0 = conn
            .temporal
            .clone()
            .unwrap_or_else(|| Field::zeros(*conn.grid()));
        for i in 0..3 {
            let mut r = dfs.comps[i].clone();
            r.axpy(-1.0, &cov_laplace(conn, &f0.comps[i]));
            for l in 0..3 {
                if let Some((idx, sign)) = pair_index(i, l) {
                    r.axpy(2.0 * sign, &f0.comps[l].bracket(&p.f.comps[idx]));
                }
            }
            r.axpy(-1.0, &cov_diff(conn.a(i), fs0, i));
            r.axpy(1.0, &a0.bracket(&p.fs.comps[i]));
            worst = worst.max(field_lp(&r, 2.0));
        }
    }
    worst
}

/// Two parts of the slice norm and whether its t-derivatives were one-sided.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct INorm {
    pub fs_part: f64,
    pub a_part: f64,
    pub one_sided: bool,
}

impl INorm {
    pub fn total(&self) -> f64 {
        self.fs_part + self.a_part
    }
}

/// `Σ_{k≤depth} ‖∇_{t,x}F_s‖_{𝓛^{5/4,∞}_s Ḣ^{k-1}} + ‖∇_{t,x}F_s‖_{𝓛^{5/4,2}_s Ḣ^{k-1}}`
/// plus `Σ_{k≤depth} ‖∂_{t,x}A̲‖_{Ḣ^{k-1}}`, in the caloric-temporal gauge at slice `k`.
///
/// `∇ = s^{1/2}∂`, and the p-normalized `Ḣ^m` carries `s^{m/2 - 3/4}`, so the
/// weight applied to `‖∂^{k-1} ∂_{t,x} F_s‖₂` is `s^{1/2 + k/2}`.
pub fn i_norm(asm: &Assembly, k: usize, depth: usize) -> Result<INorm> {
    if k >= asm.slices() {
        return Err(Error::InvalidParameter(format!(
            "slice {k} outside the assembly"
        )));
    }
    let samples = &asm.flows[k].samples;
    let s: Vec<f64> = samples.iter().skip(1).map(|p| p.s).collect();
    let interval = (0.0, asm.s_max());
    let mut one_sided = false;
    let dts: Vec<LatticeField> = (1..samples.len())
        .map(|j| {
            let (d, os) = asm.time_derivative(k, |m| asm.fs_under(m, j));
            one_sided |= os;
            d
        })
        .collect();
    let mut fs_part = 0.0;
    for m in 1..=depth {
        let values = (1..samples.len())
            .map(|j| {
                let fs = asm.fs_under(k, j);
                (sobolev_norm(&fs, m).powi(2) + sobolev_norm(&dts[j - 1], m - 1).powi(2)).sqrt()
            })
            .collect();
        let profile = NormProfile::new(s.clone(), values)?;
        let ell = 0.5 + m as f64 / 2.0;
        fs_part += pnorm_s(&profile, ell, f64::INFINITY, interval)?
            + pnorm_s(&profile, ell, 2.0, interval)?;
    }
    let a = asm.a_under(k);
    let (da, os) = asm.time_derivative(k, |m| asm.a_under(m));
    one_sided |= os;
    let a_part = (1..=depth)
        .map(|m| (sobolev_norm(&a, m).powi(2) + sobolev_norm(&da, m - 1).powi(2)).sqrt())
        .sum();
    Ok(INorm {
        fs_part,
        a_part,
        one_sided,
    })
}

/// `Σ_{m=1}^{3} ‖∇^{m-1}F_s0‖_{𝓛^{1,∞}_s 𝓛²} + ‖∇^m F_s0‖_{𝓛^{1,2}_s 𝓛²}` at slice `k`,
/// with covariant derivatives.
pub fn e_script_norm(asm: &Assembly, k: usize) -> Result<f64> {
    if k >= asm.slices() {
        return Err(Error::InvalidParameter(format!(
            "slice {k} outside the assembly"
        )));
    }
    let samples = &asm.flows[k].samples[1..];
    let s: Vec<f64> = samples.iter().map(|p| p.s).collect();
    let norms: Vec<[f64; 4]> = samples
        .iter()
        .map(|p| {
            let fs0 = LatticeField::scalar(p.fs0.clone().expect("dynamic flows carry F_s0"));
            let conn = Connection {
                spatial: p.conn.spatial.clone(),
                temporal: None,
            };
            [0, 1, 2, 3].map(|m| cov_sobolev(&conn, &fs0, m))
        })
        .collect();
    let interval = (0.0, asm.s_max());
    let mut total = 0.0;
    for m in 1..=3 {
        let sup = NormProfile::new(s.clone(), norms.iter().map(|v| v[m - 1]).collect())?;
        let l2 = NormProfile::new(s.clone(), norms.iter().map(|v| v[m]).collect())?;
        total += pnorm_s(&sup, 0.25 + (m - 1) as f64 / 2.0, f64::INFINITY, interval)?;
        total += pnorm_s(&l2, 0.25 + m as f64 / 2.0, 2.0, interval)?;
    }
    Ok(total)
}
