//! Seeded Cauchy data generators.
//!
//! Every generator is a closed-form field sampled at the lattice sites, so the
//! same spec gives the same continuum data at every resolution.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CauchyData;
use crate::algebra::Alg;
use crate::error::{Error, Result};
use crate::gauge::{apply_gauge, cov_diff, cov_div_one_form, Connection, GaugeTransform};
use crate::lattice::{diff, Field, Grid, LatticeField, Rank};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Standing transverse wave along the first axis, valued in τ₃.
    AbelianWave,
    /// Gaussian bump centred in the period.
    Bump,
    /// Random trigonometric polynomial.
    RandomBandlimited,
    /// `A = -(∂U)U⁻¹` for `U = exp(φ)`, with `E = 0`.
    PureGauge,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub generator: Generator,
    pub amplitude: f64,
    pub seed: u64,
    /// Project the electric field onto the Gauss constraint surface.
    pub constrained: bool,
    /// Bump width as a fraction of the period.
    pub width: f64,
    /// Highest wave number per axis (band-limited and pure-gauge data), or the
    /// mode of the abelian wave.
    pub modes: usize,
    /// Keep all data in the τ₃ direction.
    pub abelian: bool,
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec {
            generator: Generator::RandomBandlimited,
            amplitude: 0.1,
            seed: 1,
            constrained: true,
            width: 1.0 / 24.0,
            modes: 1,
            abelian: false,
        }
    }
}

/// Bump support radius in units of the width; `exp(-r²/w²)` is below 1.3e-4 there.
pub const BUMP_SUPPORT: f64 = 3.0;

impl DataSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "amplitude {} must be finite and nonnegative",
                self.amplitude
            )));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bump width {} must be positive",
                self.width
            )));
        }
        if self.modes == 0 {
            return Err(Error::InvalidParameter("modes must be at least 1".into()));
        }
        if self.generator == Generator::Bump {
            let radius = BUMP_SUPPORT * self.width;
            if radius > 1.0 / 6.0 {
                return Err(Error::SupportOverflow {
                    radius,
                    limit: 1.0 / 6.0,
                });
            }
        }
        Ok(())
    }
}

fn rand_alg(rng: &mut ChaCha8Rng, abelian: bool) -> Alg {
    if abelian {
        Alg::new(0.0, 0.0, rng.gen_range(-1.0..1.0))
    } else {
        Alg::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        )
    }
}

/// `Σ_m c_m cos(k_m·x) + d_m sin(k_m·x)` over half of the nonzero modes with `|m_j| ≤ modes`.
struct Trig {
    terms: Vec<([f64; 3], Alg, Alg)>,
}

impl Trig {
    fn random(rng: &mut ChaCha8Rng, grid: &Grid, modes: usize, abelian: bool) -> Trig {
        let m = modes as i64;
        let k0 = 2.0 * PI / grid.length();
        let mut terms = Vec::new();
        for a in -m..=m {
            for b in -m..=m {
                for c in -m..=m {
                    // one representative of each ± pair
                    if (a, b, c) <= (0, 0, 0) {
                        continue;
                    }
                    let k = [a as f64 * k0, b as f64 * k0, c as f64 * k0];
                    terms.push((k, rand_alg(rng, abelian), rand_alg(rng, abelian)));
                }
            }
        }
        let norm = 1.0 / (terms.len() as f64).sqrt();
        for t in terms.iter_mut() {
            t.1 = t.1 * norm;
            t.2 = t.2 * norm;
        }
        Trig { terms }
    }

    fn eval(&self, x: [f64; 3]) -> Alg {
        let mut out = Alg::ZERO;
        for (k, c, d) in &self.terms {
            let ph = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
            out += *c * ph.cos() + *d * ph.sin();
        }
        out
    }
}

fn gaussian(grid: &Grid, width: f64) -> impl Fn([f64; 3]) -> f64 + Sync {
    let c = 0.5 * grid.length();
    let w = width * grid.length();
    move |x: [f64; 3]| {
        let r2: f64 = x.iter().map(|v| (v - c) * (v - c)).sum();
        (-r2 / (w * w)).exp()
    }
}

/// Central-difference curl; its central-difference divergence vanishes identically.
pub fn curl(w: &LatticeField) -> LatticeField {
    let comps = (0..3)
        .map(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let mut f = diff(&w.comps[k], j);
            f.axpy(-1.0, &diff(&w.comps[j], k));
            f
        })
        .collect();
    LatticeField {
        rank: Rank::OneForm,
        comps,
    }
}

/// Removes the Gauss residual of `e` by `e ← e - Dφ` with `-D^ℓD_ℓ φ = -D^ℓ e_ℓ`,
/// solved by conjugate gradients. Returns the corrected field.
pub fn project_gauss(
    conn: &Connection,
    e: &LatticeField,
    rel_tol: f64,
    max_iter: usize,
) -> LatticeField {
    let grid = *conn.grid();
    let op = |p: &Field| {
        let mut out = Field::zeros(grid);
        for l in 0..3 {
            out.axpy(-1.0, &cov_diff(conn.a(l), &cov_diff(conn.a(l), p, l), l));
        }
        out
    };
    let rhs = cov_div_one_form(conn, e).scale(-1.0);
    let b_norm = rhs.l2_sq().sqrt();
    if b_norm == 0.0 {
        return e.clone();
    }
    let mut phi = Field::zeros(grid);
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = r.l2_sq();
    for _ in 0..max_iter {
        if rr.sqrt() <= rel_tol * b_norm {
            break;
        }
        let ap = op(&p);
        let pap = p.inner_sum(&ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        phi.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rr_new = r.l2_sq();
        let beta = rr_new / rr;
        rr = rr_new;
        let mut next = r.clone();
        next.axpy(beta, &p);
        p = next;
    }
    let mut out = e.clone();
    for l in 0..3 {
        out.comps[l].axpy(-1.0, &cov_diff(conn.a(l), &phi, l));
    }
    out
}

/// Samples the data described by `spec` on `grid`.
pub fn generate(grid: Grid, spec: &DataSpec) -> Result<CauchyData> {
    spec.validate()?;
    let amp = spec.amplitude;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (a, e) = match spec.generator {
        Generator::AbelianWave => {
            let k = 2.0 * PI * spec.modes as f64 / grid.length();
            let a1 = Field::from_fn(grid, |x| Alg::new(0.0, 0.0, amp * (k * x[0]).cos()));
            let a = LatticeField::one_form([Field::zeros(grid), a1, Field::zeros(grid)]);
            (a, LatticeField::zeros(grid, Rank::OneForm))
        }
        Generator::Bump => {
            let g = gaussian(&grid, spec.width);
            let w = spec.width * grid.length();
            let dirs: Vec<Alg> = (0..6).map(|_| rand_alg(&mut rng, spec.abelian)).collect();
            let a = LatticeField::one_form(
                [0, 1, 2].map(|i| Field::from_fn(grid, |x| dirs[i] * (amp * g(x)))),
            );
            let e = if spec.constrained {
                let wf = LatticeField::one_form(
                    [3, 4, 5].map(|i| Field::from_fn(grid, |x| dirs[i] * (amp * g(x)))),
                );
                curl(&wf)
            } else {
                LatticeField::one_form(
                    [3, 4, 5].map(|i| Field::from_fn(grid, |x| dirs[i] * (amp / w * g(x)))),
                )
            };
            (a, e)
        }
        Generator::RandomBandlimited => {
            let ta: Vec<Trig> = (0..3)
                .map(|_| Trig::random(&mut rng, &grid, spec.modes, spec.abelian))
                .collect();
            let tw: Vec<Trig> = (0..3)
                .map(|_| Trig::random(&mut rng, &grid, spec.modes, spec.abelian))
                .collect();
            let a = LatticeField::one_form(
                [0, 1, 2].map(|i| Field::from_fn(grid, |x| ta[i].eval(x) * amp)),
            );
            let e = if spec.constrained {
                let k0 = grid.length() / (2.0 * PI);
                let wf = LatticeField::one_form(
                    [0, 1, 2].map(|i| Field::from_fn(grid, |x| tw[i].eval(x) * (amp * k0))),
                );
                curl(&wf)
            } else {
                LatticeField::one_form(
                    [0, 1, 2].map(|i| Field::from_fn(grid, |x| tw[i].eval(x) * amp)),
                )
            };
            (a, e)
        }
        Generator::PureGauge => {
            let t = Trig::random(&mut rng, &grid, spec.modes, spec.abelian);
            let phi = Field::from_fn(grid, |x| t.eval(x) * amp);
            let u = GaugeTransform::exp_of(&phi);
            let conn = apply_gauge(&Connection::zero(grid), &u, None);
            (conn.spatial, LatticeField::zeros(grid, Rank::OneForm))
        }
    };
    let e = if spec.constrained
        && !spec.abelian
        && matches!(
            spec.generator,
            Generator::Bump | Generator::RandomBandlimited
        ) {
        let conn = Connection::new(a.clone())?;
        project_gauss(&conn, &e, 1e-14, 4000)
    } else {
        e
    };
    CauchyData::new(a, e).map(|d| d.with_spec(*spec))
}
