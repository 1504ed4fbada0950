//! Stencils, norms and s-weighted norms against analytic and direct-sum oracles.

use std::f64::consts::PI;

use proptest::prelude::*;
use ymcal_core::algebra::Alg;
use ymcal_core::estimates::p_normalized_lq;
use ymcal_core::lattice::fourier::{central_symbol, Spectral};
use ymcal_core::lattice::norms::{field_lp, field_sobolev};
use ymcal_core::lattice::snapshot::{read_snapshot, write_snapshot, HEADER_LEN, MAGIC};
use ymcal_core::lattice::{
    diff, laplace, lp_norm, pnorm_s, sobolev_norm, Field, Grid, LatticeField, NormProfile, Rank,
};

const L: f64 = 8.0;

fn grid(n: usize) -> Grid {
    Grid::new(n, L).unwrap()
}

fn wave(g: Grid, axis: usize, k: f64, dir: Alg) -> Field {
    Field::from_fn(g, move |x| dir * (2.0 * PI * k * x[axis] / L).sin())
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.sub(b).max_coeff()
}

/// A sum of a few low Fourier modes with given coefficients.
fn band_limited(g: Grid, coeffs: &[f64]) -> Field {
    let c = coeffs.to_vec();
    Field::from_fn(g, move |x| {
        let mut a = Alg::ZERO;
        for (j, w) in c.chunks(6).enumerate() {
            let k = 2.0 * PI * (1 + j % 2) as f64 / L;
            let phase = k * (x[0] + 2.0 * x[1] * (j % 3) as f64 - x[2]) + w[0];
            a = a
                + Alg::new(w[1], w[2], w[3]) * phase.sin()
                + Alg::new(w[4], w[5], 0.0) * (k * x[(j + 1) % 3]).cos();
        }
        a
    })
}

#[test]
fn grid_rejects_non_powers_of_two() {
    assert!(Grid::new(12, L).is_err());
    assert!(Grid::new(4, L).is_err());
    assert!(Grid::new(16, -1.0).is_err());
    assert_eq!(grid(16).h(), 0.5);
}

#[test]
fn diff_of_constant_vanishes() {
    let f = Field::constant(grid(8), Alg::new(1.0, -2.0, 3.0));
    for axis in 0..3 {
        assert_eq!(diff(&f, axis).max_coeff(), 0.0);
    }
    assert_eq!(laplace(&f).max_coeff(), 0.0);
}

fn diff_error(n: usize) -> f64 {
    let g = grid(n);
    let tau3 = Alg::basis(2);
    let exact = Field::from_fn(g, move |x| {
        tau3 * ((2.0 * PI / L) * (2.0 * PI * x[0] / L).cos())
    });
    max_diff(&diff(&wave(g, 0, 1.0, tau3), 0), &exact)
}

#[test]
fn diff_of_sine_is_second_order() {
    let (e16, e32) = (diff_error(16), diff_error(32));
    let h = grid(16).h();
    // Taylor remainder of the central difference: k³h²/6
    let k = 2.0 * PI / L;
    assert!(e16 <= k.powi(3) * h * h / 6.0 * 1.0001);
    let ratio = e16 / e32;
    assert!((ratio - 4.0).abs() <= 0.4, "ratio {ratio}");
}

#[test]
fn laplace_of_sine_matches_analytic_and_discrete_symbols() {
    let g = grid(16);
    let tau1 = Alg::basis(0);
    let f = wave(g, 0, 1.0, tau1);
    let k = 2.0 * PI / L;
    let h = g.h();
    let continuum = f.scale(-k * k);
    assert!(max_diff(&laplace(&f), &continuum) <= k.powi(4) * h * h / 12.0 * 1.0001);
    let discrete = f.scale(-4.0 * (0.5 * k * h).sin().powi(2) / (h * h));
    assert!(max_diff(&laplace(&f), &discrete) <= 1e-12);
}

#[test]
fn laplace_is_symmetric_under_axis_exchange() {
    let g = grid(8);
    let a = laplace(&wave(g, 0, 2.0, Alg::basis(1)));
    let b = laplace(&wave(g, 1, 2.0, Alg::basis(1)));
    for i in 0..g.sites() {
        let [x, y, z] = g.coords(i);
        assert_eq!(a.data()[i], b.data()[g.index(y, x, z)]);
    }
}

#[test]
fn lp_norm_of_zero_and_of_a_single_site() {
    let g = grid(8);
    let zero = LatticeField::zeros(g, Rank::OneForm);
    for p in [1.0, 2.0, 3.0, 6.0, f64::INFINITY] {
        assert_eq!(lp_norm(&zero, p), 0.0);
    }
    let mut f = Field::zeros(g);
    f.data_mut()[g.index(3, 1, 4)] = Alg::basis(2);
    let single = LatticeField::scalar(f);
    let h = g.h();
    assert!((lp_norm(&single, 2.0) - (0.5f64).sqrt() * h.powf(1.5)).abs() <= 1e-15);
    for p in [1.0, 3.0, 6.0] {
        // |τ₃| = 1/√2 on one cell of volume h³
        let direct = ((0.5f64).sqrt().powf(p) * h.powi(3)).powf(1.0 / p);
        assert!((lp_norm(&single, p) - direct).abs() <= 1e-14 * direct);
    }
    assert_eq!(lp_norm(&single, f64::INFINITY), (0.5f64).sqrt());
}

#[test]
fn multi_component_norms_take_the_max_over_components() {
    let g = grid(8);
    let a = wave(g, 0, 1.0, Alg::basis(0));
    let b = wave(g, 1, 1.0, Alg::basis(0)).scale(3.0);
    let f = LatticeField::one_form([a.clone(), b.clone(), Field::zeros(g)]);
    assert_eq!(lp_norm(&f, 2.0), field_lp(&b, 2.0));
}

#[test]
fn sobolev_norms_of_plane_waves() {
    let g = grid(16);
    let k = 2.0;
    let f = LatticeField::scalar(wave(g, 2, k, Alg::basis(0)));
    assert_eq!(sobolev_norm(&f, 0), lp_norm(&f, 2.0));
    let l2 = lp_norm(&f, 2.0);
    // central differences carry the symbol sin(kh)/h
    let symbol = (2.0 * PI * k * g.h() / L).sin() / g.h();
    assert!((sobolev_norm(&f, 1) - symbol * l2).abs() <= 1e-12 * l2);
    assert!((sobolev_norm(&f, 2) - symbol * symbol * l2).abs() <= 1e-11 * l2);
    let continuum = 2.0 * PI * k / L;
    assert!(
        (sobolev_norm(&f, 1) / l2 - continuum).abs()
            <= continuum.powi(3) * g.h().powi(2) / 6.0 * 1.0001
    );
    let c = LatticeField::scalar(Field::constant(g, Alg::new(1.0, 1.0, 1.0)));
    assert_eq!(sobolev_norm(&c, 1), 0.0);
    assert_eq!(sobolev_norm(&c, 3), 0.0);
}

#[test]
fn weighted_s_norm_examples() {
    // 64 samples per octave over 40 octaves below 1
    let s: Vec<f64> = (0..=40 * 64)
        .rev()
        .map(|j| 2f64.powf(-(j as f64) / 64.0))
        .collect();
    let ones = NormProfile::new(s.clone(), vec![1.0; s.len()]).unwrap();
    let a = pnorm_s(&ones, 1.0, 2.0, (0.0, 1.0)).unwrap();
    assert!((a - 0.5f64.sqrt()).abs() <= 1e-4, "{a}");
    assert_eq!(pnorm_s(&ones, 0.0, f64::INFINITY, (0.0, 1.0)).unwrap(), 1.0);
    let inv_sqrt = NormProfile::new(s.clone(), s.iter().map(|v| v.powf(-0.5)).collect()).unwrap();
    let b = pnorm_s(&inv_sqrt, 0.75, 2.0, (0.0, 1.0)).unwrap();
    assert!((b - 2f64.sqrt()).abs() <= 1e-4, "{b}");
    assert!(matches!(
        pnorm_s(&ones, 1.0, 2.0, (0.0, 2.0)),
        Err(ymcal_core::Error::ProfileRange { .. })
    ));
}

#[test]
fn power_law_closure_is_exact_for_power_laws() {
    // two octaves only, so the tail below s = 1/4 is closed analytically
    let s: Vec<f64> = (0..=32)
        .rev()
        .map(|j| 2f64.powf(-(j as f64) / 16.0))
        .collect();
    let f = NormProfile::new(s.clone(), s.iter().map(|v| v.powf(0.3)).collect()).unwrap();
    // ∫₀¹ s^{2(0.5 + 0.3)} ds/s = 1/1.6, trapezoid error only above the first sample
    let v = pnorm_s(&f, 0.5, 2.0, (0.0, 1.0)).unwrap();
    assert!((v - (1.0 / 1.6f64).sqrt()).abs() <= 1e-3, "{v}");
}

#[test]
fn p_normalized_relation() {
    let g = grid(8);
    let f = wave(g, 0, 1.0, Alg::new(1.0, 0.5, 0.0));
    for s in [0.01, 0.3, 1.0] {
        assert_eq!(
            p_normalized_lq(&f, 2.0, s),
            s.powf(-0.75) * field_lp(&f, 2.0)
        );
    }
    // sup over s of s^{3/4} times the normalized norm is the plain norm
    let s: Vec<f64> = (0..=20).rev().map(|j| 2f64.powi(-j)).collect();
    let vals: Vec<f64> = s.iter().map(|&v| p_normalized_lq(&f, 2.0, v)).collect();
    let prof = NormProfile::new(s, vals).unwrap();
    let sup = pnorm_s(&prof, 0.75, f64::INFINITY, (0.0, 1.0)).unwrap();
    assert!((sup - field_lp(&f, 2.0)).abs() <= 1e-14 * sup);
}

#[test]
fn snapshot_round_trip_and_layout() {
    let g = grid(8);
    let f = LatticeField::one_form([
        wave(g, 0, 1.0, Alg::basis(0)),
        wave(g, 1, 2.0, Alg::basis(1)),
        wave(g, 2, 3.0, Alg::new(0.1, 0.2, 0.3)),
    ]);
    let mut bytes = Vec::new();
    write_snapshot(&mut bytes, &f).unwrap();
    assert_eq!(bytes.len(), HEADER_LEN + g.sites() * 3 * 3 * 8);
    assert_eq!(&bytes[..4], MAGIC);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 8);
    assert!(bytes[20..32].iter().all(|&b| b == 0));
    // site 0, component 2, basis 2
    let first = f64::from_le_bytes(
        bytes[HEADER_LEN + 8 * 8..HEADER_LEN + 9 * 8]
            .try_into()
            .unwrap(),
    );
    assert_eq!(first, f.comps[2].data()[0].0[2]);
    let back = read_snapshot(bytes.as_slice(), L).unwrap();
    assert_eq!(back, f);
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(read_snapshot(bad.as_slice(), L).is_err());
    assert!(read_snapshot(&bytes[..100], L).is_err());
}

#[test]
fn spectral_heat_matches_per_mode_decay() {
    let g = grid(16);
    let sp = Spectral::new(g);
    let f = wave(g, 1, 3.0, Alg::basis(2));
    let s = 0.7;
    let decay = (-s * central_symbol(&g, [0, 3, 0])).exp();
    assert!(max_diff(&sp.heat_field(&f, s), &f.scale(decay)) <= 1e-13);
    // semigroup property
    let two = sp.heat_field(&sp.heat_field(&f, 0.3), 0.4);
    assert!(max_diff(&two, &sp.heat_field(&f, 0.7)) <= 1e-13);
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stencils_commute_with_translations(c in coeffs(), axis in 0usize..3, shift in 1isize..7) {
        let g = grid(8);
        let f = band_limited(g, &c);
        let translate = |h: &Field| {
            let data = (0..g.sites()).map(|i| h.data()[g.shift(i, 1, shift)]).collect();
            Field::from_data(g, data).unwrap()
        };
        prop_assert_eq!(diff(&translate(&f), axis), translate(&diff(&f, axis)));
        prop_assert_eq!(laplace(&translate(&f)), translate(&laplace(&f)));
    }

    #[test]
    fn central_differences_are_skew_adjoint(c in coeffs(), d in coeffs(), axis in 0usize..3) {
        let g = grid(8);
        let (f, h) = (band_limited(g, &c), band_limited(g, &d));
        let lhs = (diff(&f, axis).inner_sum(&h) + f.inner_sum(&diff(&h, axis))) * g.cell_volume();
        prop_assert!(lhs.abs() <= 1e-10 * field_lp(&f, 2.0) * field_lp(&h, 2.0) + 1e-300);
    }

    #[test]
    fn norms_are_absolutely_homogeneous(c in coeffs(), lambda in -5.0..5.0f64) {
        let g = grid(8);
        let f = band_limited(g, &c);
        let lf = LatticeField::scalar(f.clone());
        let sf = LatticeField::scalar(f.scale(lambda));
        for p in [1.0, 2.0, 3.0, 6.0, f64::INFINITY] {
            let (a, b) = (lp_norm(&sf, p), lambda.abs() * lp_norm(&lf, p));
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }
        for m in 0..3 {
            let (a, b) = (sobolev_norm(&sf, m), lambda.abs() * sobolev_norm(&lf, m));
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }
    }

    #[test]
    fn gagliardo_nirenberg_ratio_is_bounded(c in coeffs()) {
        let g = grid(16);
        let f = band_limited(g, &c);
        let l2 = field_lp(&f, 2.0);
        prop_assume!(l2 > 1e-3);
        let ratio = field_lp(&f, 3.0) / (l2.sqrt() * field_sobolev(&f, 1).sqrt());
        prop_assert!(ratio.is_finite() && ratio <= 1.0, "ratio {}", ratio);
    }

    #[test]
    fn holder_for_weighted_s_norms(
        f in prop::collection::vec(0.0..2.0f64, 33),
        g in prop::collection::vec(0.0..2.0f64, 33),
        l1 in -0.5..1.5f64,
        l2 in -0.5..1.5f64,
        split in 0usize..3,
    ) {
        let s: Vec<f64> = (0..33).rev().map(|j| 2f64.powf(-(j as f64) / 4.0)).collect();
        let (pf, pg) = (NormProfile::new(s.clone(), f).unwrap(), NormProfile::new(s.clone(), g).unwrap());
        let fg = pf.product(&pg).unwrap();
        // 1/p = 1/p1 + 1/p2
        let (p, p1, p2) = [(1.0, 2.0, 2.0), (2.0, f64::INFINITY, 2.0), (1.0, 1.0, f64::INFINITY)][split];
        let interval = (s[0], 1.0);
        let lhs = pnorm_s(&fg, l1 + l2, p, interval).unwrap();
        let rhs = pnorm_s(&pf, l1, p1, interval).unwrap() * pnorm_s(&pg, l2, p2, interval).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300, "{} > {}", lhs, rhs);
    }
}
