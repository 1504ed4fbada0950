//! su(2) and SU(2).
//!
//! Algebra elements are stored as coefficients in the basis `τ_k = -i σ_k / 2`,
//! so the bracket is the cross product and `(a, b) = Re tr(a b*) = ½ a·b`.
//! Group elements are unit quaternions `q0 + q·(i, j, k)`, identified with the
//! matrix `q0 I - i q·σ`; under that identification `τ_k` is the pure
//! quaternion with coefficient ½ on the k-th unit.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Multiplications between renormalizations in [`product`].
pub const RENORM_INTERVAL: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Alg(pub [f64; 3]);

impl Alg {
    pub const ZERO: Alg = Alg([0.0; 3]);

    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Alg([a, b, c])
    }

    /// The basis element τ_k, k in 0..3.
    pub fn basis(k: usize) -> Self {
        let mut c = [0.0; 3];
        c[k] = 1.0;
        Alg(c)
    }

    #[inline]
    pub fn bracket(self, b: Alg) -> Alg {
        let a = self.0;
        let b = b.0;
        Alg([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    #[inline]
    pub fn inner(self, b: Alg) -> f64 {
        0.5 * (self.0[0] * b.0[0] + self.0[1] * b.0[1] + self.0[2] * b.0[2])
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.inner(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Euclidean length of the coefficient vector (twice the squared inner-product norm, rooted).
    #[inline]
    pub fn coeff_len(self) -> f64 {
        (self.0[0] * self.0[0] + self.0[1] * self.0[1] + self.0[2] * self.0[2]).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Add for Alg {
    type Output = Alg;
    #[inline]
    fn add(self, o: Alg) -> Alg {
        Alg([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Alg {
    type Output = Alg;
    #[inline]
    fn sub(self, o: Alg) -> Alg {
        Alg([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Alg {
    type Output = Alg;
    #[inline]
    fn neg(self) -> Alg {
        Alg([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Alg {
    type Output = Alg;
    #[inline]
    fn mul(self, s: f64) -> Alg {
        Alg([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<Alg> for f64 {
    type Output = Alg;
    #[inline]
    fn mul(self, a: Alg) -> Alg {
        a * self
    }
}

impl AddAssign for Alg {
    #[inline]
    fn add_assign(&mut self, o: Alg) {
        self.0[0] += o.0[0];
        self.0[1] += o.0[1];
        self.0[2] += o.0[2];
    }
}

impl SubAssign for Alg {
    #[inline]
    fn sub_assign(&mut self, o: Alg) {
        self.0[0] -= o.0[0];
        self.0[1] -= o.0[1];
        self.0[2] -= o.0[2];
    }
}

/// A quaternion; unit quaternions are SU(2) elements. Non-unit values appear
/// as intermediate RK stages and as derivatives of group-valued fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Su2 {
    pub q: [f64; 4],
}

impl Default for Su2 {
    fn default() -> Self {
        Su2::IDENTITY
    }
}

impl Su2 {
    pub const IDENTITY: Su2 = Su2 {
        q: [1.0, 0.0, 0.0, 0.0],
    };
    pub const ZERO: Su2 = Su2 { q: [0.0; 4] };

    pub const fn from_quat(q: [f64; 4]) -> Self {
        Su2 { q }
    }

    /// The algebra element `a` viewed as a (pure) quaternion.
    #[inline]
    pub fn from_alg(a: Alg) -> Self {
        Su2 {
            q: [0.0, 0.5 * a.0[0], 0.5 * a.0[1], 0.5 * a.0[2]],
        }
    }

    /// Hamilton product, i.e. the matrix product.
    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, o: Su2) -> Su2 {
        let [a0, a1, a2, a3] = self.q;
        let [b0, b1, b2, b3] = o.q;
        Su2 {
            q: [
                a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
                a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
                a0 * b2 + a2 * b0 + a3 * b1 - a1 * b3,
                a0 * b3 + a3 * b0 + a1 * b2 - a2 * b1,
            ],
        }
    }

    /// `self · a` for an algebra element `a`.
    #[inline]
    pub fn mul_alg(self, a: Alg) -> Su2 {
        self.mul(Su2::from_alg(a))
    }

    /// Quaternion conjugate; the inverse for unit quaternions.
    #[inline]
    pub fn inv(self) -> Su2 {
        Su2 {
            q: [self.q[0], -self.q[1], -self.q[2], -self.q[3]],
        }
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.q.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn normalize(self) -> Su2 {
        let n = self.norm();
        if n == 0.0 {
            return Su2::IDENTITY;
        }
        Su2 {
            q: self.q.map(|v| v / n),
        }
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn add(self, o: Su2) -> Su2 {
        Su2 {
            q: [
                self.q[0] + o.q[0],
                self.q[1] + o.q[1],
                self.q[2] + o.q[2],
                self.q[3] + o.q[3],
            ],
        }
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, o: Su2) -> Su2 {
        Su2 {
            q: [
                self.q[0] - o.q[0],
                self.q[1] - o.q[1],
                self.q[2] - o.q[2],
                self.q[3] - o.q[3],
            ],
        }
    }

    #[inline]
    pub fn scale(self, s: f64) -> Su2 {
        Su2 {
            q: self.q.map(|v| v * s),
        }
    }

    /// Projection of the matrix onto su(2): drop the trace (hermitian) part.
    #[inline]
    pub fn project_alg(self) -> Alg {
        Alg([2.0 * self.q[1], 2.0 * self.q[2], 2.0 * self.q[3]])
    }

    /// `u a u⁻¹`.
    #[inline]
    pub fn adjoint(self, a: Alg) -> Alg {
        // rotate the vector part: v' = v + 2 q0 (w × v) + 2 w × (w × v)
        let q0 = self.q[0];
        let w = Alg([self.q[1], self.q[2], self.q[3]]);
        let c1 = w.bracket(a);
        let c2 = w.bracket(c1);
        a + c1 * (2.0 * q0) + c2 * 2.0
    }

    /// Inverse of [`exp_map`] on the principal branch.
    pub fn log(self) -> Alg {
        let u = self.normalize();
        let v = Alg([u.q[1], u.q[2], u.q[3]]);
        let s = v.coeff_len();
        if s < 1e-300 {
            return Alg::ZERO;
        }
        let half = s.atan2(u.q[0]);
        v * (2.0 * half / s)
    }

    pub fn is_finite(self) -> bool {
        self.q.iter().all(|v| v.is_finite())
    }
}

/// Closed-form exponential: `exp(v·τ) = cos(|v|/2) + sin(|v|/2) v̂`.
pub fn exp_map(a: Alg) -> Su2 {
    let theta = a.coeff_len();
    let half = 0.5 * theta;
    let sinc = if half < 1e-4 {
        // sin(half)/theta with the series for small angles
        0.5 * (1.0 - half * half / 6.0 + half.powi(4) / 120.0)
    } else {
        half.sin() / theta
    };
    Su2 {
        q: [half.cos(), a.0[0] * sinc, a.0[1] * sinc, a.0[2] * sinc],
    }
}

pub fn bracket(a: Alg, b: Alg) -> Alg {
    a.bracket(b)
}

pub fn inner(a: Alg, b: Alg) -> f64 {
    a.inner(b)
}

pub fn adjoint(u: Su2, a: Alg) -> Alg {
    u.adjoint(a)
}

/// Ordered product with renormalization every [`RENORM_INTERVAL`] factors.
pub fn product<I: IntoIterator<Item = Su2>>(factors: I) -> Su2 {
    let mut acc = Su2::IDENTITY;
    for (i, f) in factors.into_iter().enumerate() {
        acc = acc.mul(f);
        if (i + 1) % RENORM_INTERVAL == 0 {
            acc = acc.normalize();
        }
    }
    acc.normalize()
}
