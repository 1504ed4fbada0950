//! Covariant calculus for su(2) connections on the lattice.
//!
//! All derivatives are central differences, so `D_i = ∂_i + [A_i, ·]` is
//! exactly skew-adjoint for the summed inner product.

pub mod substitution;

use rayon::prelude::*;

use crate::algebra::{exp_map, Alg, Su2};
use crate::error::{Error, Result};
use crate::lattice::{
    diff, diff_quat, norms::field_lp, pair_index, stencil, Field, Grid, LatticeField, Rank,
};

pub use substitution::{substitute_derivatives, Direction, Substitution, TermShape};

#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    pub spatial: LatticeField,
    pub temporal: Option<Field>,
}

impl Connection {
    pub fn new(spatial: LatticeField) -> Result<Connection> {
        if spatial.rank != Rank::OneForm {
            return Err(Error::RankMismatch(format!(
                "connection needs a one-form, got {:?}",
                spatial.rank
            )));
        }
        Ok(Connection {
            spatial,
            temporal: None,
        })
    }

    pub fn zero(grid: Grid) -> Connection {
        Connection {
            spatial: LatticeField::zeros(grid, Rank::OneForm),
            temporal: None,
        }
    }

    pub fn with_temporal(mut self, a0: Field) -> Connection {
        self.temporal = Some(a0);
        self
    }

    pub fn grid(&self) -> &Grid {
        self.spatial.grid()
    }

    #[inline]
    pub fn a(&self, i: usize) -> &Field {
        &self.spatial.comps[i]
    }

    pub fn is_finite(&self) -> bool {
        self.spatial.is_finite() && self.temporal.as_ref().is_none_or(Field::is_finite)
    }

    pub fn max_abs(&self) -> f64 {
        let t = self.temporal.as_ref().map_or(0.0, Field::max_abs);
        self.spatial.max_abs().max(t)
    }
}

/// `∂_axis f + [a, f]` for a single field, fused into one stencil pass.
pub fn cov_diff(a: &Field, f: &Field, axis: usize) -> Field {
    let inv = 0.5 / f.grid().h();
    let (d, ad) = (f.data(), a.data());
    let data = stencil(f.grid(), axis, |i, ip, im| {
        (d[ip] - d[im]) * inv + ad[i].bracket(d[i])
    });
    Field::from_data(*f.grid(), data).expect("same grid")
}

/// `D_axis f`, componentwise.
pub fn covariant_diff(conn: &Connection, f: &LatticeField, axis: usize) -> LatticeField {
    f.map(|c| cov_diff(conn.a(axis), c, axis))
}

/// `Σ_ℓ D_ℓ D_ℓ f`.
pub fn cov_laplace(conn: &Connection, f: &Field) -> Field {
    let mut out = Field::zeros(*f.grid());
    for l in 0..3 {
        let a = conn.a(l);
        out.axpy(1.0, &cov_diff(a, &cov_diff(a, f, l), l));
    }
    out
}

/// `F_ij = ∂_i A_j - ∂_j A_i + [A_i, A_j]` for i < j.
pub fn curvature(conn: &Connection) -> LatticeField {
    let comps = crate::lattice::SPATIAL_PAIRS
        .iter()
        .map(|&(i, j)| curvature_entry(conn.a(i), conn.a(j), i, j))
        .collect();
    LatticeField {
        rank: Rank::TwoForm,
        comps,
    }
}

fn curvature_entry(ai: &Field, aj: &Field, i: usize, j: usize) -> Field {
    let mut f = diff(aj, i);
    f.axpy(-1.0, &diff(ai, j));
    let br = ai.bracket(aj);
    f.axpy(1.0, &br);
    f
}

/// Spacetime curvature with index 0 for time; `velocity` supplies `∂_t A_i`.
pub fn curvature_spacetime(conn: &Connection, velocity: &LatticeField) -> LatticeField {
    let grid = *conn.grid();
    let a0 = conn.temporal.clone().unwrap_or_else(|| Field::zeros(grid));
    let mut comps: Vec<Field> = (0..3)
        .map(|i| {
            let mut f = velocity.comps[i].clone();
            f.axpy(-1.0, &diff(&a0, i));
            f.axpy(1.0, &a0.bracket(conn.a(i)));
            f
        })
        .collect();
    comps.extend(curvature(conn).comps);
    LatticeField {
        rank: Rank::SpacetimeTwoForm,
        comps,
    }
}

/// The electric part `F_0i` of a spacetime two-form.
pub fn electric_part(f: &LatticeField) -> LatticeField {
    LatticeField {
        rank: Rank::OneForm,
        comps: f.comps[..3].to_vec(),
    }
}

/// The spatial part `F_ij` of a spacetime two-form.
pub fn magnetic_part(f: &LatticeField) -> LatticeField {
    LatticeField {
        rank: Rank::TwoForm,
        comps: f.comps[3..].to_vec(),
    }
}

/// `(D^ℓ F_ℓi)_i` for a spatial two-form.
pub fn cov_div_two_form(conn: &Connection, f: &LatticeField) -> LatticeField {
    let grid = *conn.grid();
    let comps = (0..3)
        .map(|i| {
            let mut out = Field::zeros(grid);
            for l in 0..3 {
                if let Some((k, sign)) = pair_index(l, i) {
                    out.axpy(sign, &cov_diff(conn.a(l), &f.comps[k], l));
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

/// `Σ_ℓ D_ℓ v_ℓ` for a one-form.
pub fn cov_div_one_form(conn: &Connection, v: &LatticeField) -> Field {
    let mut out = Field::zeros(*conn.grid());
    for l in 0..3 {
        out.axpy(1.0, &cov_diff(conn.a(l), &v.comps[l], l));
    }
    out
}

/// Ordinary divergence `Σ_ℓ ∂_ℓ v_ℓ`.
pub fn div_one_form(v: &LatticeField) -> Field {
    let mut out = Field::zeros(*v.grid());
    for l in 0..3 {
        out.axpy(1.0, &diff(&v.comps[l], l));
    }
    out
}

/// A group-valued field.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeTransform {
    grid: Grid,
    u: Vec<Su2>,
}

impl GaugeTransform {
    pub fn identity(grid: Grid) -> GaugeTransform {
        GaugeTransform {
            grid,
            u: vec![Su2::IDENTITY; grid.sites()],
        }
    }

    pub fn from_values(grid: Grid, u: Vec<Su2>) -> Result<GaugeTransform> {
        if u.len() != grid.sites() {
            return Err(Error::InvalidParameter(
                "gauge transform size mismatch".into(),
            ));
        }
        Ok(GaugeTransform { grid, u })
    }

    /// Sitewise exponential of an algebra-valued field.
    pub fn exp_of(f: &Field) -> GaugeTransform {
        GaugeTransform {
            grid: *f.grid(),
            u: f.data().par_iter().map(|&a| exp_map(a)).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Su2] {
        &self.u
    }

    pub fn inverse(&self) -> GaugeTransform {
        GaugeTransform {
            grid: self.grid,
            u: self.u.iter().map(|g| g.inv()).collect(),
        }
    }

    /// Sitewise product `self · o`.
    pub fn compose(&self, o: &GaugeTransform) -> GaugeTransform {
        GaugeTransform {
            grid: self.grid,
            u: self.u.iter().zip(&o.u).map(|(a, b)| a.mul(*b)).collect(),
        }
    }

    /// Largest deviation of `|u|` from 1.
    pub fn unit_defect(&self) -> f64 {
        self.u
            .iter()
            .fold(0.0, |m, g| m.max((g.norm() - 1.0).abs()))
    }

    pub fn renormalize(&mut self) {
        self.u.iter_mut().for_each(|g| *g = g.normalize());
    }
}

/// `U A_i U⁻¹ - (∂_i U) U⁻¹` with the derivative term projected onto su(2).
///
/// The temporal component, if present, becomes `U A_0 U⁻¹ - (∂_t U) U⁻¹` when
/// `u_t` is given and `U A_0 U⁻¹` otherwise.
pub fn apply_gauge(conn: &Connection, u: &GaugeTransform, u_t: Option<&[Su2]>) -> Connection {
    let grid = *conn.grid();
    let vals = u.values();
    let comps = (0..3)
        .map(|i| {
            let du = diff_quat(&grid, vals, i);
            let data = conn
                .a(i)
                .data()
                .par_iter()
                .zip(vals.par_iter())
                .zip(du.par_iter())
                .map(|((&a, &g), &dg)| g.adjoint(a) - dg.mul(g.inv()).project_alg())
                .collect();
            Field::from_data(grid, data).expect("same grid")
        })
        .collect();
    let temporal = conn.temporal.as_ref().map(|a0| {
        let data = a0
            .data()
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                let g = vals[k];
                let base = g.adjoint(a);
                match u_t {
                    Some(ut) => base - ut[k].mul(g.inv()).project_alg(),
                    None => base,
                }
            })
            .collect();
        Field::from_data(grid, data).expect("same grid")
    });
    Connection {
        spatial: LatticeField {
            rank: Rank::OneForm,
            comps,
        },
        temporal,
    }
}

/// `‖D_0 F_12 + D_1 F_20 + D_2 F_01‖₂`; in three dimensions every index triple
/// gives this expression up to sign.
pub fn bianchi_residual(conn: &Connection, f: &LatticeField) -> f64 {
    let entry = |i, j| f.two_form_entry(i, j).expect("off-diagonal");
    let mut r = cov_diff(conn.a(0), &entry(1, 2), 0);
    r.axpy(1.0, &cov_diff(conn.a(1), &entry(2, 0), 1));
    r.axpy(1.0, &cov_diff(conn.a(2), &entry(0, 1), 2));
    field_lp(&r, 2.0)
}

/// Gauss residual `Σ_ℓ D_ℓ E_ℓ`.
pub fn gauss_field(conn: &Connection, e: &LatticeField) -> Field {
    cov_div_one_form(conn, e)
}

/// `w_ν = D^μ F_νμ` with signature (-+++); `f0_dot` supplies `∂_t F_0i`.
///
/// `w_0 = Σ_ℓ D_ℓ F_0ℓ` and `w_i = D_0 F_0i - Σ_ℓ D_ℓ F_ℓi`.
pub fn tension_field(conn: &Connection, f: &LatticeField, f0_dot: &LatticeField) -> LatticeField {
    let grid = *conn.grid();
    let e = electric_part(f);
    let b = magnetic_part(f);
    let a0 = conn.temporal.clone().unwrap_or_else(|| Field::zeros(grid));
    let w0 = cov_div_one_form(conn, &e);
    let div_b = cov_div_two_form(conn, &b);
    let mut comps = vec![w0];
    for i in 0..3 {
        let mut wi = f0_dot.comps[i].clone();
        wi.axpy(1.0, &a0.bracket(&e.comps[i]));
        wi.axpy(-1.0, &div_b.comps[i]);
        comps.push(wi);
    }
    LatticeField {
        rank: Rank::SpacetimeOneForm,
        comps,
    }
}

/// `Q_jk(φ, ψ) = ∂_jφ ∂_kψ - ∂_kφ ∂_jψ`, taken coefficient by coefficient.
pub fn null_form(phi: &Field, psi: &Field, j: usize, k: usize) -> Result<Field> {
    if j == k || j > 2 || k > 2 {
        return Err(Error::InvalidParameter(format!(
            "null form needs distinct axes, got ({j}, {k})"
        )));
    }
    let (pj, pk, qj, qk) = (diff(phi, j), diff(phi, k), diff(psi, j), diff(psi, k));
    let data = (0..phi.grid().sites())
        .map(|s| {
            let c = |m: usize| {
                pj.data()[s].0[m] * qk.data()[s].0[m] - pk.data()[s].0[m] * qj.data()[s].0[m]
            };
            Alg([c(0), c(1), c(2)])
        })
        .collect();
    Field::from_data(*phi.grid(), data)
}

/// Smoothed pointwise magnitude `sqrt(Σ_c |σ_c|² + ε)`.
pub fn smoothed_abs(f: &LatticeField, eps: f64) -> Vec<f64> {
    let sites = f.grid().sites();
    (0..sites)
        .map(|s| (f.comps.iter().map(|c| c.data()[s].norm_sq()).sum::<f64>() + eps).sqrt())
        .collect()
}

/// Largest excess of `|∂_a |σ|_ε|` over `|D_a σ|` across sites and axes, together
/// with `max |D σ|` for scale.
pub fn kato_excess(conn: &Connection, f: &LatticeField, eps: f64) -> (f64, f64) {
    let grid = *conn.grid();
    let g = smoothed_abs(f, eps);
    let mut excess: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for a in 0..3 {
        let dg = crate::lattice::diff_real(&grid, &g, a);
        let df = covariant_diff(conn, f, a);
        let mag = smoothed_abs(&df, 0.0);
        for s in 0..grid.sites() {
            excess = excess.max(dg[s].abs() - mag[s]);
            scale = scale.max(mag[s]);
        }
    }
    (excess.max(0.0), scale)
}

/// Covariant Ḣ^m seminorm: ℓ² over ordered axis sequences and components of
/// `‖D_{a1}⋯D_{am} f_c‖₂`.
pub fn cov_sobolev(conn: &Connection, f: &LatticeField, m: usize) -> f64 {
    let mut level = vec![f.clone()];
    for _ in 0..m {
        level = level
            .iter()
            .flat_map(|g| (0..3).map(move |a| covariant_diff(conn, g, a)))
            .collect();
    }
    level
        .iter()
        .map(LatticeField::l2_sq_total)
        .sum::<f64>()
        .sqrt()
}
