//! Yang-Mills evolution in temporal gauge, its monitors, and the
//! caloric-temporal gauge assembly built on top of it.

pub mod assembly;
pub mod datagen;
pub mod temporal;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::curvature;
use crate::gauge::{cov_div_one_form, Connection};
use crate::heatflow::{magnetic_energy, ymhf_caloric_step};
use crate::lattice::{norms::field_lp, LatticeField, Rank};
use crate::tolerances;

pub use assembly::{build_caloric_temporal, e_script_norm, i_norm, Assembly, INorm};
pub use datagen::{generate, DataSpec, Generator};
pub use temporal::{a0_norm, temporal_gauge_ode, A0Norm, TemporalGauge};

/// Initial data `(Ā_i, Ē_i)` with its recorded Gauss residual.
#[derive(Clone, Debug)]
pub struct CauchyData {
    pub a: LatticeField,
    pub e: LatticeField,
    /// `‖∂^ℓ Ē_ℓ + [Ā^ℓ, Ē_ℓ]‖₂`.
    pub gauss: f64,
    pub spec: Option<DataSpec>,
}

impl CauchyData {
    pub fn new(a: LatticeField, e: LatticeField) -> Result<CauchyData> {
        if a.rank != Rank::OneForm || e.rank != Rank::OneForm {
            return Err(Error::RankMismatch("Cauchy data are two one-forms".into()));
        }
        if a.grid() != e.grid() {
            return Err(Error::RankMismatch("Cauchy data on different grids".into()));
        }
        let gauss = gauss_residual(&a, &e);
        Ok(CauchyData {
            a,
            e,
            gauss,
            spec: None,
        })
    }

    pub fn with_spec(mut self, spec: DataSpec) -> CauchyData {
        self.spec = Some(spec);
        self
    }

    pub fn connection(&self) -> Connection {
        Connection {
            spatial: self.a.clone(),
            temporal: None,
        }
    }

    /// Gauss residual relative to the size of the divergence terms.
    pub fn relative_gauss(&self) -> f64 {
        let conn = self.connection();
        let scale: f64 = (0..3)
            .map(|l| field_lp(&crate::gauge::cov_diff(conn.a(l), &self.e.comps[l], l), 2.0))
            .sum();
        if scale == 0.0 {
            0.0
        } else {
            self.gauss / scale
        }
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.e.l2_sq_total() + magnetic_energy(&curvature(&self.connection()))
    }
}

/// `‖∂^ℓ E_ℓ + [A^ℓ, E_ℓ]‖₂`.
pub fn gauss_residual(a: &LatticeField, e: &LatticeField) -> f64 {
    let conn = Connection {
        spatial: a.clone(),
        temporal: None,
    };
    field_lp(&cov_div_one_form(&conn, e), 2.0)
}

/// Rescales bump data by `x → λx`, `A → A/λ`, `E → E/λ²`.
pub fn scale_data(data: &CauchyData, lambda: f64) -> Result<CauchyData> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scale factor {lambda} must be positive"
        )));
    }
    if lambda == 1.0 {
        return Ok(data.clone());
    }
    let spec = data
        .spec
        .ok_or_else(|| Error::InvalidParameter("rescaling needs generator data".into()))?;
    if spec.generator != Generator::Bump {
        // periodic generators fill the whole torus
        return Err(Error::SupportOverflow {
            radius: f64::INFINITY,
            limit: 1.0 / 6.0,
        });
    }
    let scaled = DataSpec {
        amplitude: spec.amplitude / lambda,
        width: spec.width * lambda,
        ..spec
    };
    generate(*data.a.grid(), &scaled)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceDiagnostics {
    pub t: f64,
    /// Energy with the electric term taken from the two neighbouring half steps,
    /// `½ (E_{n-½}, E_{n+½}) + B(A_n)`; exactly conserved by the scheme for linear problems.
    pub energy: f64,
    /// `½ ‖E_n‖² + B(A_n)` with the synchronized electric field.
    pub energy_sync: f64,
    pub gauss: f64,
    /// `max_ν ‖w_ν‖₂`, with `∂_t E` by differences across steps.
    pub tension: f64,
}

#[derive(Clone, Debug)]
pub struct SpacetimeSlab {
    pub dt: f64,
    pub t: Vec<f64>,
    /// `(A_i, E_i)` per stored time.
    pub slices: Vec<(LatticeField, LatticeField)>,
    pub diagnostics: Vec<SliceDiagnostics>,
}

impl SpacetimeSlab {
    pub fn energy_drift(&self) -> f64 {
        drift(self.diagnostics.iter().map(|d| d.energy))
    }

    pub fn energy_sync_drift(&self) -> f64 {
        drift(self.diagnostics.iter().map(|d| d.energy_sync))
    }

    /// Largest growth of the Gauss residual over its initial value.
    pub fn gauss_growth(&self) -> f64 {
        let g0 = self.diagnostics[0].gauss;
        self.diagnostics
            .iter()
            .fold(0.0, |m, d| m.max(d.gauss - g0))
    }

    pub fn max_tension(&self) -> f64 {
        self.diagnostics.iter().fold(0.0, |m, d| m.max(d.tension))
    }
}

fn drift(mut it: impl Iterator<Item = f64>) -> f64 {
    let Some(e0) = it.next() else { return 0.0 };
    let m = it.fold(0.0_f64, |m, e| m.max((e - e0).abs()));
    if e0 == 0.0 {
        m
    } else {
        m / e0
    }
}

/// Number of steps and step size for `t_final` with `dt ≤ dt_ratio · h`.
pub fn time_steps(h: f64, t_final: f64, dt_ratio: f64) -> Result<(usize, f64)> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
    if !(dt_ratio > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt_ratio {dt_ratio} must be positive"
        )));
    }
    if dt_ratio > 0.5 {
        return Err(Error::CflViolation(dt_ratio));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "final time {t_final} must be positive"
        )));
    }
    let n = (t_final / (dt_ratio * h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((n, t_final / n as f64))
}

/// Velocity Verlet for `∂_t A_i = E_i`, `∂_t E_i = D^ℓ F_ℓi` in temporal gauge.
pub fn evolve_temporal(data: &CauchyData, t_final: f64, dt_ratio: f64) -> Result<SpacetimeSlab> {
    evolve(data, t_final, dt_ratio, true)
}

/// As [`evolve_temporal`] but keeps only the first and last slices.
pub fn evolve_diagnostics(data: &CauchyData, t_final: f64, dt_ratio: f64) -> Result<SpacetimeSlab> {
    evolve(data, t_final, dt_ratio, false)
}

fn force(a: &LatticeField) -> LatticeField {
    ymhf_caloric_step(&Connection {
        spatial: a.clone(),
        temporal: None,
    })
}

fn evolve(data: &CauchyData, t_final: f64, dt_ratio: f64, keep: bool) -> Result<SpacetimeSlab> {
    let grid = *data.a.grid();
    let (steps, dt) = time_steps(grid.h(), t_final, dt_ratio)?;
    let mut a = data.a.clone();
    let mut e = data.e.clone();
    let mut f = force(&a);
    // (t, A, E, force) of the previous, current and next slice for the tension
    let mut prev: Option<LatticeField> = None;
    let mut t = Vec::with_capacity(steps + 1);
    let mut slices = Vec::new();
    let mut diagnostics = Vec::with_capacity(steps + 1);
    let mut pending: Option<(f64, LatticeField, LatticeField, LatticeField)> =
        Some((0.0, a.clone(), e.clone(), f.clone()));
    for n in 1..=steps + 1 {
        let next = if n <= steps {
            let mut half = e.clone();
            half.axpy(0.5 * dt, &f);
            a.axpy(dt, &half);
            f = force(&a);
            e = half;
            e.axpy(0.5 * dt, &f);
            let sup = a.max_abs().max(e.max_abs());
            #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
            if !(sup <= tolerances::BLOWUP) {
                return Err(Error::BlowUp {
                    t: n as f64 * dt,
                    sup,
                });
            }
            Some((n as f64 * dt, a.clone(), e.clone(), f.clone()))
        } else {
            None
        };
        let (tc, ac, ec, fc) = pending.take().expect("slice pending");
        let e_dot = match (&prev, &next) {
            (Some(ep), Some((_, _, en, _))) => en.sub(ep).scale(0.5 / dt),
            (None, Some((_, _, en, _))) => en.sub(&ec).scale(1.0 / dt),
            (Some(ep), None) => ec.sub(ep).scale(1.0 / dt),
            (None, None) => LatticeField::zeros(grid, Rank::OneForm),
        };
        diagnostics.push(slice_diagnostics(tc, &ac, &ec, &fc, &e_dot, dt));
        t.push(tc);
        if keep || n == 1 || next.is_none() {
            slices.push((ac, ec.clone()));
        }
        prev = Some(ec);
        pending = next;
    }
    Ok(SpacetimeSlab {
        dt,
        t,
        slices,
        diagnostics,
    })
}

fn slice_diagnostics(
    t: f64,
    a: &LatticeField,
    e: &LatticeField,
    f: &LatticeField,
    e_dot: &LatticeField,
    dt: f64,
) -> SliceDiagnostics {
    let conn = Connection {
        spatial: a.clone(),
        temporal: None,
    };
    let b = magnetic_energy(&curvature(&conn));
    let kinetic = 0.5 * e.l2_sq_total();
    let energy = kinetic - dt * dt / 8.0 * f.l2_sq_total() + b;
    let gauss_field = cov_div_one_form(&conn, e);
    let gauss = field_lp(&gauss_field, 2.0);
    let mut tension = gauss;
    for i in 0..3 {
        let w = e_dot.comps[i].sub(&f.comps[i]);
        tension = tension.max(field_lp(&w, 2.0));
    }
    SliceDiagnostics {
        t,
        energy,
        energy_sync: kinetic + b,
        gauss,
        tension,
    }
}
