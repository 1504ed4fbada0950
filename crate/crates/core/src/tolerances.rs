//! Named tolerances shared by the runtime guards and the estimate checks.

/// `| |q| - 1 |` allowed after renormalizing a group element.
pub const GROUP_UNIT: f64 = 1e-12;
/// `| |U| - 1 |` allowed for a stored gauge transform.
pub const GAUGE_UNIT: f64 = 1e-10;
/// Unit-norm drift of the gauge ODE before renormalization.
pub const GAUGE_ODE_DRIFT: f64 = 1e-8;
/// Sup norm of the connection above which a flow or evolution is declared divergent.
pub const BLOWUP: f64 = 1e6;
/// Relative Gauss residual produced by the constrained data generator.
pub const GENERATOR_GAUSS: f64 = 1e-10;
/// Relative Gauss residual above which the improved F_s0 bound is not applicable.
pub const CONSTRAINT_HYPOTHESIS: f64 = 1e-6;

/// Relative conserved-energy drift at the reference resolution.
pub const ENERGY_DRIFT: f64 = 1e-4;
/// Accepted band around 4 for the drift ratio under halving of dt.
pub const ORDER_TWO_RATIO_BAND: f64 = 0.15;
/// Minimal observed convergence order for identities exact in the continuum.
pub const IDENTITY_ORDER: f64 = 1.9;
/// Reconstruction error of the derivative substitution identities.
pub const SUBSTITUTION: f64 = 1e-10;
/// Sitewise relative agreement of |F|² between the DeTurck and caloric routes.
pub const DETURCK_AGREEMENT: f64 = 1e-5;
/// Allowed relative spread of weighted norms over √E in an amplitude sweep.
pub const SMOOTHING_SPREAD: f64 = 0.20;
/// Accepted range of the F_s0 norm ratio when the amplitude is halved.
pub const FS0_RATIO: (f64, f64) = (3.4, 4.6);
/// Declared constant of the energy integral inequality, quadrature included.
pub const ENERGY_INTEGRAL_CONSTANT: f64 = 4.0;
/// Abelian maximum-principle equalities against the exact semigroup.
pub const SEMIGROUP_EXACT: f64 = 1e-8;
/// Declared `C` in `violation ≤ C h² ‖σ(0)‖∞` for the pointwise comparisons.
pub const POINTWISE_COMPARISON: f64 = 1.0;
/// Declared constant of the Duhamel `L²` bound across the source family.
pub const DUHAMEL_L2_CONSTANT: f64 = 1.0;
