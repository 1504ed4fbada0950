//! Periodic cubic lattice, algebra-valued fields and central-difference stencils.

pub mod fourier;
pub mod norms;
pub mod snapshot;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Alg, Su2};
use crate::error::{Error, Result};

pub use norms::{lp_norm, pairwise_sum, pnorm_s, sobolev_norm, NormProfile};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    /// `n` must be a power of two in 8..=256.
    pub fn new(n: usize, length: f64) -> Result<Grid> {
        if !n.is_power_of_two() || !(8..=256).contains(&n) {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two in 8..=256"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "period length {length} must be positive"
            )));
        }
        Ok(Grid { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn sites(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(3)
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.n + y) * self.n + z
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let n = self.n;
        [i / (n * n), (i / n) % n, i % n]
    }

    pub fn position(&self, i: usize) -> [f64; 3] {
        let h = self.h();
        self.coords(i).map(|c| c as f64 * h)
    }

    /// Index of the site displaced by `delta` lattice steps along `axis`.
    #[inline]
    pub fn shift(&self, i: usize, axis: usize, delta: isize) -> usize {
        let mut c = self.coords(i);
        let n = self.n as isize;
        c[axis] = (c[axis] as isize + delta).rem_euclid(n) as usize;
        self.index(c[0], c[1], c[2])
    }
}

/// Evaluates `f(i, i+e_axis, i-e_axis)` at every site, x-planes in parallel.
pub(crate) fn stencil<T, F>(grid: &Grid, axis: usize, f: F) -> Vec<T>
where
    T: Copy + Default + Send,
    F: Fn(usize, usize, usize) -> T + Sync,
{
    let n = grid.n;
    let mask = n - 1;
    let mut out = vec![T::default(); n * n * n];
    out.par_chunks_mut(n * n)
        .enumerate()
        .for_each(|(x, plane)| {
            let (xp, xm) = ((x + 1) & mask, (x + mask) & mask);
            for y in 0..n {
                let (yp, ym) = ((y + 1) & mask, (y + mask) & mask);
                for z in 0..n {
                    let i = (x * n + y) * n + z;
                    let (ip, im) = match axis {
                        0 => ((xp * n + y) * n + z, (xm * n + y) * n + z),
                        1 => ((x * n + yp) * n + z, (x * n + ym) * n + z),
                        _ => (
                            (x * n + y) * n + ((z + 1) & mask),
                            (x * n + y) * n + ((z + mask) & mask),
                        ),
                    };
                    plane[y * n + z] = f(i, ip, im);
                }
            }
        });
    out
}

/// A single algebra-valued function on the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    data: Vec<Alg>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Field {
        Field {
            grid,
            data: vec![Alg::ZERO; grid.sites()],
        }
    }

    pub fn constant(grid: Grid, a: Alg) -> Field {
        Field {
            grid,
            data: vec![a; grid.sites()],
        }
    }

    /// Samples `f` at the physical site positions.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> Alg + Sync) -> Field {
        let data = (0..grid.sites())
            .into_par_iter()
            .map(|i| f(grid.position(i)))
            .collect();
        Field { grid, data }
    }

    pub fn from_data(grid: Grid, data: Vec<Alg>) -> Result<Field> {
        if data.len() != grid.sites() {
            return Err(Error::InvalidParameter(format!(
                "field data has {} sites, grid needs {}",
                data.len(),
                grid.sites()
            )));
        }
        Ok(Field { grid, data })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[Alg] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Alg] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(Alg) -> Alg + Sync) -> Field {
        Field {
            grid: self.grid,
            data: self.data.par_iter().map(|&a| f(a)).collect(),
        }
    }

    pub fn zip_map(&self, o: &Field, f: impl Fn(Alg, Alg) -> Alg + Sync) -> Field {
        let data = self
            .data
            .par_iter()
            .zip(o.data.par_iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Field {
            grid: self.grid,
            data,
        }
    }

    pub fn add(&self, o: &Field) -> Field {
        self.zip_map(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Field) -> Field {
        self.zip_map(o, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|a| a * c)
    }

    /// `self += c * o`
    pub fn axpy(&mut self, c: f64, o: &Field) {
        self.data
            .par_iter_mut()
            .zip(o.data.par_iter())
            .for_each(|(a, &b)| *a += b * c);
    }

    /// Sitewise `[self, o]`.
    pub fn bracket(&self, o: &Field) -> Field {
        self.zip_map(o, |a, b| a.bracket(b))
    }

    /// Sitewise `u f u⁻¹`.
    pub fn adjoint_by(&self, u: &[Su2]) -> Field {
        let data = self
            .data
            .par_iter()
            .zip(u.par_iter())
            .map(|(&a, &g)| g.adjoint(a))
            .collect();
        Field {
            grid: self.grid,
            data,
        }
    }

    /// Sitewise `|f|` from the inner product.
    pub fn abs(&self) -> Vec<f64> {
        self.data.iter().map(|a| a.norm()).collect()
    }

    /// `h³ Σ (f, g)`, reduced pairwise.
    pub fn inner_sum(&self, o: &Field) -> f64 {
        let v: Vec<f64> = self
            .data
            .iter()
            .zip(&o.data)
            .map(|(a, b)| a.inner(*b))
            .collect();
        pairwise_sum(&v) * self.grid.cell_volume()
    }

    pub fn l2_sq(&self) -> f64 {
        self.inner_sum(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.norm()))
    }

    pub fn max_coeff(&self) -> f64 {
        self.data
            .iter()
            .fold(0.0, |m, a| a.0.iter().fold(m, |m, v| m.max(v.abs())))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }
}

/// Central difference `(f(x+h e) - f(x-h e)) / 2h`.
pub fn diff(f: &Field, axis: usize) -> Field {
    let inv = 0.5 / f.grid.h();
    let d = &f.data;
    let data = stencil(&f.grid, axis, |_, ip, im| (d[ip] - d[im]) * inv);
    Field { grid: f.grid, data }
}

/// Neighbour average `(f(x+h e) + f(x-h e)) / 2`; the companion of [`diff`] in the discrete product rule.
pub fn avg(f: &Field, axis: usize) -> Field {
    let d = &f.data;
    let data = stencil(&f.grid, axis, |_, ip, im| (d[ip] + d[im]) * 0.5);
    Field { grid: f.grid, data }
}

/// Seven-point Laplacian.
pub fn laplace(f: &Field) -> Field {
    let inv = 1.0 / (f.grid.h() * f.grid.h());
    let d = &f.data;
    let mut out = Field::zeros(f.grid);
    for axis in 0..3 {
        let part = stencil(&f.grid, axis, |i, ip, im| {
            (d[ip] + d[im] - d[i] * 2.0) * inv
        });
        out.data.iter_mut().zip(part).for_each(|(o, p)| *o += p);
    }
    out
}

/// Central difference of a real scalar function.
pub fn diff_real(grid: &Grid, f: &[f64], axis: usize) -> Vec<f64> {
    let inv = 0.5 / grid.h();
    stencil(grid, axis, |_, ip, im| (f[ip] - f[im]) * inv)
}

/// Central difference of a quaternion-valued function.
pub fn diff_quat(grid: &Grid, u: &[Su2], axis: usize) -> Vec<Su2> {
    let inv = 0.5 / grid.h();
    stencil(grid, axis, |_, ip, im| u[ip].sub(u[im]).scale(inv))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rank {
    Scalar,
    OneForm,
    TwoForm,
    SpacetimeOneForm,
    SpacetimeTwoForm,
}

impl Rank {
    pub fn components(self) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::OneForm | Rank::TwoForm => 3,
            Rank::SpacetimeOneForm => 4,
            Rank::SpacetimeTwoForm => 6,
        }
    }

    pub fn code(self) -> u32 {
        match self {
            Rank::Scalar => 0,
            Rank::OneForm => 1,
            Rank::TwoForm => 2,
            Rank::SpacetimeOneForm => 3,
            Rank::SpacetimeTwoForm => 4,
        }
    }

    pub fn from_code(c: u32) -> Option<Rank> {
        Some(match c {
            0 => Rank::Scalar,
            1 => Rank::OneForm,
            2 => Rank::TwoForm,
            3 => Rank::SpacetimeOneForm,
            4 => Rank::SpacetimeTwoForm,
            _ => return None,
        })
    }
}

/// Stored pairs of a spatial two-form, in storage order.
pub const SPATIAL_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Storage slot and sign of the (i, j) entry of a spatial two-form; `None` on the diagonal.
pub fn pair_index(i: usize, j: usize) -> Option<(usize, f64)> {
    let slot = |a, b| SPATIAL_PAIRS.iter().position(|&p| p == (a, b));
    match i.cmp(&j) {
        std::cmp::Ordering::Less => slot(i, j).map(|k| (k, 1.0)),
        std::cmp::Ordering::Greater => slot(j, i).map(|k| (k, -1.0)),
        std::cmp::Ordering::Equal => None,
    }
}

/// Stored pairs of a spacetime two-form, index 0 being time.
pub const SPACETIME_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// A rank-indexed collection of fields on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeField {
    pub rank: Rank,
    pub comps: Vec<Field>,
}

impl LatticeField {
    pub fn zeros(grid: Grid, rank: Rank) -> LatticeField {
        LatticeField {
            rank,
            comps: vec![Field::zeros(grid); rank.components()],
        }
    }

    pub fn new(rank: Rank, comps: Vec<Field>) -> Result<LatticeField> {
        if comps.len() != rank.components() {
            return Err(Error::RankMismatch(format!(
                "{rank:?} needs {} components, got {}",
                rank.components(),
                comps.len()
            )));
        }
        if let Some(g) = comps.first().map(|c| *c.grid()) {
            if comps.iter().any(|c| *c.grid() != g) {
                return Err(Error::RankMismatch(
                    "components live on different grids".into(),
                ));
            }
        }
        Ok(LatticeField { rank, comps })
    }

    pub fn scalar(f: Field) -> LatticeField {
        LatticeField {
            rank: Rank::Scalar,
            comps: vec![f],
        }
    }

    pub fn one_form(comps: [Field; 3]) -> LatticeField {
        LatticeField {
            rank: Rank::OneForm,
            comps: comps.into(),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.comps[0].grid()
    }

    /// Entry (i, j) of a spatial two-form as a signed field.
    pub fn two_form_entry(&self, i: usize, j: usize) -> Option<Field> {
        pair_index(i, j).map(|(k, sign)| {
            if sign > 0.0 {
                self.comps[k].clone()
            } else {
                self.comps[k].scale(-1.0)
            }
        })
    }

    pub fn map(&self, f: impl Fn(&Field) -> Field) -> LatticeField {
        LatticeField {
            rank: self.rank,
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn zip_map(&self, o: &LatticeField, f: impl Fn(&Field, &Field) -> Field) -> LatticeField {
        LatticeField {
            rank: self.rank,
            comps: self
                .comps
                .iter()
                .zip(&o.comps)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, o: &LatticeField) -> LatticeField {
        self.zip_map(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &LatticeField) -> LatticeField {
        self.zip_map(o, |a, b| a.sub(b))
    }

    pub fn scale(&self, c: f64) -> LatticeField {
        self.map(|a| a.scale(c))
    }

    pub fn axpy(&mut self, c: f64, o: &LatticeField) {
        self.comps
            .iter_mut()
            .zip(&o.comps)
            .for_each(|(a, b)| a.axpy(c, b));
    }

    pub fn adjoint_by(&self, u: &[Su2]) -> LatticeField {
        self.map(|f| f.adjoint_by(u))
    }

    /// Sum of squared L² norms over components.
    pub fn l2_sq_total(&self) -> f64 {
        self.comps.iter().map(Field::l2_sq).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(Field::is_finite)
    }
}

/// Componentwise [`diff`].
pub fn diff_field(f: &LatticeField, axis: usize) -> LatticeField {
    f.map(|c| diff(c, axis))
}

/// Componentwise [`laplace`].
pub fn laplace_field(f: &LatticeField) -> LatticeField {
    f.map(laplace)
}
