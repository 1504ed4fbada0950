//! Fourier multipliers on the periodic lattice.
//!
//! Used for the free heat semigroup of the central-difference Laplacian, whose
//! symbol is `Σ_j sin²(θ_j)/h²` with `θ_j = 2π m_j / n`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{Field, Grid};
use crate::algebra::Alg;

pub struct Spectral {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn new(grid: Grid) -> Spectral {
        let mut planner = FftPlanner::new();
        let n = grid.n();
        Spectral {
            grid,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex<f64>], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        let mut line = vec![Complex::new(0.0, 0.0); n];
        for axis in 0..3 {
            let stride = match axis {
                0 => n * n,
                1 => n,
                _ => 1,
            };
            for a in 0..n {
                for b in 0..n {
                    let base = match axis {
                        0 => a * n + b,
                        1 => a * n * n + b,
                        _ => (a * n + b) * n,
                    };
                    for (k, c) in line.iter_mut().enumerate() {
                        *c = data[base + k * stride];
                    }
                    fft.process(&mut line);
                    for (k, c) in line.iter().enumerate() {
                        data[base + k * stride] = *c;
                    }
                }
            }
        }
    }

    /// Applies a real multiplier `symbol(m)` (even in m) to a real function.
    pub fn multiply_real(&self, f: &[f64], symbol: impl Fn([usize; 3]) -> f64) -> Vec<f64> {
        let n = self.grid.n();
        let mut buf: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.fwd);
        for (i, c) in buf.iter_mut().enumerate() {
            *c *= symbol(self.grid.coords(i));
        }
        self.transform(&mut buf, &self.inv);
        let norm = 1.0 / (n * n * n) as f64;
        buf.iter().map(|c| c.re * norm).collect()
    }

    /// Applies a real multiplier to each basis coefficient of an algebra-valued field.
    pub fn multiply_field(&self, f: &Field, symbol: impl Fn([usize; 3]) -> f64 + Copy) -> Field {
        let mut out = vec![Alg::ZERO; self.grid.sites()];
        for k in 0..3 {
            let chan: Vec<f64> = f.data().iter().map(|a| a.0[k]).collect();
            let res = self.multiply_real(&chan, symbol);
            out.iter_mut().zip(res).for_each(|(o, v)| o.0[k] = v);
        }
        Field::from_data(self.grid, out).expect("same grid")
    }

    /// `e^{sΔ}` for the central-difference Laplacian.
    pub fn heat(&self, f: &[f64], s: f64) -> Vec<f64> {
        let g = self.grid;
        self.multiply_real(f, move |m| (-s * central_symbol(&g, m)).exp())
    }

    pub fn heat_field(&self, f: &Field, s: f64) -> Field {
        let g = self.grid;
        self.multiply_field(f, move |m| (-s * central_symbol(&g, m)).exp())
    }
}

/// Eigenvalue of `-Σ ∂_j∂_j` (central differences) on the mode `m`.
pub fn central_symbol(grid: &Grid, m: [usize; 3]) -> f64 {
    let n = grid.n() as f64;
    let h = grid.h();
    m.iter()
        .map(|&k| (2.0 * std::f64::consts::PI * k as f64 / n).sin().powi(2))
        .sum::<f64>()
        / (h * h)
}

/// Eigenvalue of minus the seven-point Laplacian on the mode `m`.
pub fn seven_point_symbol(grid: &Grid, m: [usize; 3]) -> f64 {
    let n = grid.n() as f64;
    let h = grid.h();
    m.iter()
        .map(|&k| 4.0 * (std::f64::consts::PI * k as f64 / n).sin().powi(2))
        .sum::<f64>()
        / (h * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_multiplier_round_trips() {
        let g = Grid::new(8, 2.0).unwrap();
        let sp = Spectral::new(g);
        let f: Vec<f64> = (0..g.sites()).map(|i| (i as f64 * 0.37).sin()).collect();
        let back = sp.multiply_real(&f, |_| 1.0);
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn heat_preserves_mean() {
        let g = Grid::new(8, 2.0).unwrap();
        let sp = Spectral::new(g);
        let f: Vec<f64> = (0..g.sites()).map(|i| (i % 5) as f64).collect();
        let u = sp.heat(&f, 0.3);
        let (a, b): (f64, f64) = (f.iter().sum(), u.iter().sum());
        assert!((a - b).abs() < 1e-10);
    }
}
