//! su(2) kernel against explicit 2×2 complex matrices.

use num_complex::Complex64 as C;
use proptest::prelude::*;
use ymcal_core::algebra::{adjoint, bracket, exp_map, inner, product, Alg, Su2};

type M = [[C; 2]; 2];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

fn pauli(k: usize) -> M {
    match k {
        0 => [[ZERO, ONE], [ONE, ZERO]],
        1 => [[ZERO, -I], [I, ZERO]],
        _ => [[ONE, ZERO], [ZERO, -ONE]],
    }
}

fn mm(a: &M, b: &M) -> M {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn add(a: &M, b: &M, s: f64) -> M {
    let mut c = *a;
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] += b[i][j] * s;
        }
    }
    c
}

fn scale(a: &M, s: C) -> M {
    a.map(|r| r.map(|v| v * s))
}

/// `Σ a_k (-i σ_k / 2)`.
fn alg_matrix(a: Alg) -> M {
    (0..3).fold([[ZERO; 2]; 2], |m, k| {
        add(&m, &scale(&pauli(k), -I * 0.5), a.0[k])
    })
}

/// `q0 I - i q·σ`.
fn group_matrix(u: Su2) -> M {
    let id = [[ONE, ZERO], [ZERO, ONE]];
    (0..3).fold(scale(&id, ONE * u.q[0]), |m, k| {
        add(&m, &scale(&pauli(k), -I), u.q[k + 1])
    })
}

/// Coefficients of a traceless anti-hermitian matrix: `a_k = 2 Re tr(m τ_k*)`.
fn coeffs(m: &M) -> Alg {
    let mut out = [0.0; 3];
    for (k, v) in out.iter_mut().enumerate() {
        let tk = alg_matrix(Alg::basis(k));
        let adj = [
            [tk[0][0].conj(), tk[1][0].conj()],
            [tk[0][1].conj(), tk[1][1].conj()],
        ];
        let p = mm(m, &adj);
        *v = 2.0 * (p[0][0] + p[1][1]).re;
    }
    Alg(out)
}

fn dist(a: &M, b: &M) -> f64 {
    (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (a[i][j] - b[i][j]).norm())
        .fold(0.0, f64::max)
}

/// `exp` by scaling and squaring with a Taylor core.
fn expm(a: &M) -> M {
    let norm = a.iter().flatten().map(|v| v.norm()).sum::<f64>();
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let x = scale(a, ONE / 2f64.powi(squarings));
    let id = [[ONE, ZERO], [ZERO, ONE]];
    let (mut sum, mut term) = (id, id);
    for k in 1..20 {
        term = scale(&mm(&term, &x), ONE / k as f64);
        sum = add(&sum, &term, 1.0);
    }
    for _ in 0..squarings {
        sum = mm(&sum, &sum);
    }
    sum
}

fn alg() -> impl Strategy<Value = Alg> {
    prop::array::uniform3(-3.0..3.0f64).prop_map(Alg)
}

fn unit() -> impl Strategy<Value = Su2> {
    alg().prop_map(|a| exp_map(a * 2.0))
}

fn close(a: Alg, b: Alg, tol: f64) -> bool {
    (a - b).coeff_len() <= tol
}

#[test]
fn bracket_of_basis_elements_matches_matrix_commutator() {
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = (alg_matrix(Alg::basis(i)), alg_matrix(Alg::basis(j)));
            let comm = add(&mm(&a, &b), &mm(&b, &a), -1.0);
            assert!(
                close(bracket(Alg::basis(i), Alg::basis(j)), coeffs(&comm), 1e-15),
                "[τ{i}, τ{j}]"
            );
        }
    }
    assert_eq!(bracket(Alg::basis(0), Alg::basis(1)), Alg::basis(2));
    assert_eq!(bracket(Alg::basis(0), Alg::basis(0)), Alg::ZERO);
}

#[test]
fn inner_of_basis_elements_matches_trace() {
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = (alg_matrix(Alg::basis(i)), alg_matrix(Alg::basis(j)));
            let badj = [
                [b[0][0].conj(), b[1][0].conj()],
                [b[0][1].conj(), b[1][1].conj()],
            ];
            let p = mm(&a, &badj);
            assert!((inner(Alg::basis(i), Alg::basis(j)) - (p[0][0] + p[1][1]).re).abs() < 1e-15);
        }
    }
    assert_eq!(inner(Alg::basis(0), Alg::basis(0)), 0.5);
    assert_eq!(inner(Alg::basis(0), Alg::basis(1)), 0.0);
}

#[test]
fn exp_of_zero_is_identity() {
    assert_eq!(exp_map(Alg::ZERO), Su2::IDENTITY);
}

#[test]
fn exp_about_third_axis() {
    let theta = 1.3;
    let u = exp_map(Alg::basis(2) * theta);
    let expect = [(0.5 * theta).cos(), 0.0, 0.0, (0.5 * theta).sin()];
    for (q, e) in u.q.iter().zip(expect) {
        assert!((q - e).abs() < 1e-15);
    }
    assert!(dist(&group_matrix(u), &expm(&alg_matrix(Alg::basis(2) * theta))) < 1e-13);
}

#[test]
fn adjoint_by_identity_is_trivial() {
    let a = Alg::new(0.3, -1.2, 2.0);
    assert_eq!(adjoint(Su2::IDENTITY, a), a);
}

#[test]
fn long_products_stay_on_the_group() {
    let u = exp_map(Alg::new(0.7, -0.2, 0.4));
    let p = product(std::iter::repeat_n(u, 1000));
    assert!((p.norm() - 1.0).abs() <= 1e-12);
    let direct = exp_map(Alg::new(0.7, -0.2, 0.4) * 1000.0);
    // compare as rotations, which is insensitive to the sign of the quaternion
    let a = Alg::new(1.0, 2.0, -0.5);
    assert!(close(adjoint(p, a), adjoint(direct, a), 1e-9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bracket_matches_matrix_commutator(a in alg(), b in alg()) {
        let (ma, mb) = (alg_matrix(a), alg_matrix(b));
        let comm = add(&mm(&ma, &mb), &mm(&mb, &ma), -1.0);
        prop_assert!(close(bracket(a, b), coeffs(&comm), 1e-12));
        prop_assert!(close(bracket(a, b) + bracket(b, a), Alg::ZERO, 0.0));
    }

    #[test]
    fn jacobi_identity(a in alg(), b in alg(), c in alg()) {
        let j = bracket(a, bracket(b, c)) + bracket(b, bracket(c, a)) + bracket(c, bracket(a, b));
        prop_assert!(j.coeff_len() <= 1e-12 * (1.0 + a.coeff_len() * b.coeff_len() * c.coeff_len()));
    }

    #[test]
    fn inner_is_ad_invariant(a in alg(), b in alg(), c in alg()) {
        let lhs = inner(bracket(c, a), b) + inner(a, bracket(c, b));
        prop_assert!(lhs.abs() <= 1e-12 * (1.0 + a.norm() * b.norm() * c.norm()));
    }

    #[test]
    fn inner_is_bi_invariant(u in unit(), a in alg(), b in alg()) {
        let d = inner(adjoint(u, a), adjoint(u, b)) - inner(a, b);
        prop_assert!(d.abs() <= 1e-12 * (1.0 + a.norm() * b.norm()));
        prop_assert!((adjoint(u, a).norm() - a.norm()).abs() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn adjoint_matches_conjugation(u in unit(), a in alg()) {
        let m = group_matrix(u);
        let minv = group_matrix(u.inv());
        let conj = mm(&mm(&m, &alg_matrix(a)), &minv);
        prop_assert!(close(adjoint(u, a), coeffs(&conj), 1e-12));
    }

    #[test]
    fn adjoint_preserves_the_bracket(u in unit(), a in alg(), b in alg()) {
        let lhs = adjoint(u, bracket(a, b));
        let rhs = bracket(adjoint(u, a), adjoint(u, b));
        prop_assert!(close(lhs, rhs, 1e-11));
    }

    #[test]
    fn exp_matches_scaling_and_squaring(v in prop::array::uniform3(-1.0..1.0f64), r in 0.0..10.0f64) {
        let dir = Alg(v);
        prop_assume!(dir.coeff_len() > 1e-6);
        let a = dir * (r / dir.coeff_len());
        let u = exp_map(a);
        prop_assert!((u.norm() - 1.0).abs() <= 1e-12);
        prop_assert!(dist(&group_matrix(u), &expm(&alg_matrix(a))) <= 1e-10);
    }

    #[test]
    fn exp_of_negative_is_inverse(a in alg()) {
        let p = exp_map(a).mul(exp_map(-a));
        prop_assert!((p.q[0] - 1.0).abs() <= 1e-14 && p.q[1..].iter().all(|v| v.abs() <= 1e-14));
    }

    #[test]
    fn adjoint_linearizes_to_the_bracket(a in alg(), b in alg()) {
        // symmetric difference removes the t² term
        let t = 1e-4;
        let d = (adjoint(exp_map(b * t), a) - adjoint(exp_map(b * -t), a)) * (0.5 / t);
        let err = (d - bracket(b, a)).coeff_len();
        prop_assert!(err <= 1e-6 * (1.0 + a.coeff_len()) * (1.0 + b.coeff_len()).powi(3));
    }

    #[test]
    fn log_inverts_exp_on_the_principal_branch(v in prop::array::uniform3(-1.0..1.0f64)) {
        let a = Alg(v);
        prop_assert!(close(exp_map(a).log(), a, 1e-12));
    }
}
