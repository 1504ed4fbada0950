//! Lebesgue and Sobolev norms on the lattice, and weighted norms in the flow parameter s.

use serde::{Deserialize, Serialize};

use super::{diff, Field, LatticeField};
use crate::error::{Error, Result};

const PAIRWISE_BLOCK: usize = 64;

/// Sum by recursive halving; the association order depends only on the length.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= PAIRWISE_BLOCK {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// L^p norm of a single field; `p = f64::INFINITY` gives the sup norm.
pub fn field_lp(f: &Field, p: f64) -> f64 {
    if p.is_infinite() {
        return f.max_abs();
    }
    let terms: Vec<f64> = if p == 2.0 {
        f.data().iter().map(|a| a.norm_sq()).collect()
    } else {
        f.data().iter().map(|a| a.norm().powf(p)).collect()
    };
    (pairwise_sum(&terms) * f.grid().cell_volume()).powf(1.0 / p)
}

/// L^p norm of a real function on the lattice.
pub fn real_lp(grid: &super::Grid, f: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return f.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let terms: Vec<f64> = f.iter().map(|v| v.abs().powf(p)).collect();
    (pairwise_sum(&terms) * grid.cell_volume()).powf(1.0 / p)
}

/// L^p norm, maximised over the component index.
pub fn lp_norm(f: &LatticeField, p: f64) -> f64 {
    f.comps.iter().fold(0.0, |m, c| m.max(field_lp(c, p)))
}

/// Nondecreasing axis sequences of length m with their multinomial multiplicities.
pub(crate) fn axis_multisets(m: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(m: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for a in start..3 {
            cur.push(a);
            rec(m, a, cur, out);
            cur.pop();
        }
    }
    let mut seqs = Vec::new();
    rec(m, 0, &mut Vec::new(), &mut seqs);
    let fact = |k: usize| (1..=k).product::<usize>() as f64;
    seqs.into_iter()
        .map(|s| {
            let counts = [0, 1, 2].map(|a| s.iter().filter(|&&x| x == a).count());
            let mult = fact(m) / counts.iter().map(|&c| fact(c)).product::<f64>();
            (s, mult)
        })
        .collect()
}

/// Ḣ^m seminorm of one field: ℓ² over all ordered multi-indices of L² norms.
pub fn field_sobolev(f: &Field, m: usize) -> f64 {
    let mut total = 0.0;
    for (seq, mult) in axis_multisets(m) {
        let mut g = f.clone();
        for &a in &seq {
            g = diff(&g, a);
        }
        total += mult * g.l2_sq();
    }
    total.sqrt()
}

/// Ḣ^m seminorm; components are combined by max, multi-indices by ℓ².
pub fn sobolev_norm(f: &LatticeField, m: usize) -> f64 {
    if m == 0 {
        return lp_norm(f, 2.0);
    }
    let per_seq: Vec<(f64, f64)> = axis_multisets(m)
        .into_iter()
        .map(|(seq, mult)| {
            let mut g = f.clone();
            for &a in &seq {
                g = super::diff_field(&g, a);
            }
            (mult, lp_norm(&g, 2.0))
        })
        .collect();
    per_seq
        .iter()
        .map(|(mult, v)| mult * v * v)
        .sum::<f64>()
        .sqrt()
}

/// A nonnegative function of s sampled on an increasing positive grid,
/// optionally with its value at s = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormProfile {
    s: Vec<f64>,
    values: Vec<f64>,
    at_zero: Option<f64>,
}

impl NormProfile {
    pub fn new(s: Vec<f64>, values: Vec<f64>) -> Result<NormProfile> {
        if s.is_empty() || s.len() != values.len() {
            return Err(Error::InvalidParameter(
                "profile needs matching non-empty s and value lists".into(),
            ));
        }
        if s[0] <= 0.0 || s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "profile s-grid must be positive and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "profile values must be finite and nonnegative".into(),
            ));
        }
        Ok(NormProfile {
            s,
            values,
            at_zero: None,
        })
    }

    pub fn with_zero(mut self, v: f64) -> NormProfile {
        self.at_zero = Some(v);
        self
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at_zero(&self) -> Option<f64> {
        self.at_zero
    }

    /// Pointwise product, used for Hölder-type comparisons.
    pub fn product(&self, o: &NormProfile) -> Result<NormProfile> {
        if self.s != o.s {
            return Err(Error::InvalidParameter(
                "profiles on different s-grids".into(),
            ));
        }
        let v = self
            .values
            .iter()
            .zip(&o.values)
            .map(|(a, b)| a * b)
            .collect();
        let mut p = NormProfile::new(self.s.clone(), v)?;
        if let (Some(a), Some(b)) = (self.at_zero, o.at_zero) {
            p.at_zero = Some(a * b);
        }
        Ok(p)
    }
}

/// `( ∫_J (s^ℓ f(s))^p ds/s )^{1/p}` by the trapezoid rule in log s; sup for `p = ∞`.
///
/// An interval starting at 0 is closed below the first sample with the power law
/// fitted to the first two samples; a non-decaying tail yields infinity.
pub fn pnorm_s(profile: &NormProfile, ell: f64, p: f64, interval: (f64, f64)) -> Result<f64> {
    let (lo, hi) = interval;
    let first = profile.s[0];
    let last = *profile.s.last().unwrap();
    let tol = 1e-12;
    let covered = lo >= 0.0
        && hi > lo
        && hi <= last * (1.0 + tol)
        && hi >= first * (1.0 - tol)
        && (lo == 0.0 || lo >= first * (1.0 - tol));
    if !covered {
        return Err(Error::ProfileRange {
            lo,
            hi,
            first,
            last,
        });
    }
    let weighted = |s: f64, f: f64| s.powf(ell) * f;
    if p.is_infinite() {
        let mut sup: f64 = 0.0;
        for (&s, &f) in profile.s.iter().zip(&profile.values) {
            if s > lo * (1.0 + tol) && s <= hi * (1.0 + tol) {
                sup = sup.max(weighted(s, f));
            }
        }
        if lo == 0.0 && ell == 0.0 {
            if let Some(z) = profile.at_zero {
                sup = sup.max(z);
            }
        }
        return Ok(sup);
    }
    // (u, g) with u = ln s and g = (s^ℓ f)^p, linear interpolation at interior endpoints
    let g_at = |k: usize| weighted(profile.s[k], profile.values[k]).powf(p);
    let interp = |s: f64| -> f64 {
        let k = profile
            .s
            .partition_point(|&x| x < s)
            .min(profile.s.len() - 1);
        if (profile.s[k] - s).abs() <= tol * s || k == 0 {
            return g_at(k);
        }
        let (u0, u1) = (profile.s[k - 1].ln(), profile.s[k].ln());
        let t = (s.ln() - u0) / (u1 - u0);
        g_at(k - 1) * (1.0 - t) + g_at(k) * t
    };
    let start = if lo == 0.0 { first } else { lo };
    let mut pts: Vec<(f64, f64)> = vec![(start.ln(), interp(start))];
    for k in 0..profile.s.len() {
        let s = profile.s[k];
        if s > start * (1.0 + tol) && s < hi * (1.0 - tol) {
            pts.push((s.ln(), g_at(k)));
        }
    }
    if hi > start * (1.0 + tol) {
        pts.push((hi.ln(), interp(hi)));
    }
    let mut terms: Vec<f64> = pts
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .collect();
    if lo == 0.0 && pts.len() >= 2 {
        let (u0, g0) = pts[0];
        let (u1, g1) = pts[1];
        if g0 > 0.0 {
            if g1 <= 0.0 {
                return Ok(f64::INFINITY);
            }
            let alpha = (g1.ln() - g0.ln()) / (u1 - u0);
            if alpha <= 0.0 {
                return Ok(f64::INFINITY);
            }
            terms.push(g0 / alpha);
        }
    }
    Ok(pairwise_sum(&terms).max(0.0).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(n: usize, ratio: f64) -> Vec<f64> {
        (0..n).rev().map(|j| ratio.powi(-(j as i32))).collect()
    }

    #[test]
    fn multiset_weights_count_all_sequences() {
        for m in 0..4 {
            let total: f64 = axis_multisets(m).iter().map(|(_, w)| w).sum();
            assert_eq!(total, 3f64.powi(m as i32));
        }
    }

    #[test]
    fn pairwise_sum_exact_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
    }

    #[test]
    fn profile_rejects_bad_grids() {
        assert!(NormProfile::new(vec![0.5, 0.25], vec![1.0, 1.0]).is_err());
        assert!(NormProfile::new(vec![0.0, 0.25], vec![1.0, 1.0]).is_err());
        assert!(NormProfile::new(vec![0.5], vec![-1.0]).is_err());
    }

    #[test]
    fn out_of_range_interval() {
        let s = geometric(10, 2.0);
        let p = NormProfile::new(s.clone(), vec![1.0; 10]).unwrap();
        assert!(matches!(
            pnorm_s(&p, 1.0, 2.0, (0.0, 2.0)),
            Err(Error::ProfileRange { .. })
        ));
        assert!(matches!(
            pnorm_s(&p, 1.0, 2.0, (1e-6, 1.0)),
            Err(Error::ProfileRange { .. })
        ));
    }

    #[test]
    fn non_decaying_tail_is_infinite() {
        let s = geometric(20, 2.0);
        let p = NormProfile::new(s, vec![1.0; 20]).unwrap();
        assert!(pnorm_s(&p, 0.0, 2.0, (0.0, 1.0)).unwrap().is_infinite());
    }
}
