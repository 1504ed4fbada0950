//! Expansion of iterated covariant derivatives into ordinary ones and back.
//!
//! `D_{a1}⋯D_{ak} f` is expanded symbolically into nested brackets of
//! differentiated connection components and a differentiated `f`. On the
//! lattice the product rule is exact in the form
//! `∂[P, Q] = [∂P, μQ] + [μP, ∂Q]` with `μ` the neighbour average, and
//! `μ[P, Q] = [μP, μQ] + h²[∂P, ∂Q]`; every term therefore has
//! `j + Σℓ_i + ℓ = k + 2·(power of h²)`.

use crate::error::{Error, Result};
use crate::lattice::{avg, diff, Field, LatticeField};

use super::{cov_diff, Connection};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    CovToUsual,
    UsualToCov,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Diff(usize),
    Avg(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Base {
    Conn(usize),
    Target,
    /// `D_{β1}⋯D_{βm} f`, outermost first.
    CovTarget(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Expr {
    Leaf { ops: Vec<Op>, base: Base },
    Bracket(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug)]
struct Term {
    coeff: f64,
    hpow: u32,
    expr: Expr,
}

/// Derivative bookkeeping of one correction term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermShape {
    /// Orders of the derivatives falling on each connection factor.
    pub conn_orders: Vec<usize>,
    /// Order of the derivative falling on `f`.
    pub target_order: usize,
    pub h_power: u32,
}

impl TermShape {
    pub fn weight(&self) -> usize {
        self.conn_orders.len() + self.conn_orders.iter().sum::<usize>() + self.target_order
    }
}

pub struct Substitution {
    pub reconstructed: LatticeField,
    pub direct: LatticeField,
    /// The expansion with neighbour averages replaced by the identity and the
    /// `h²`-weighted terms dropped: the continuum form of the identity.
    pub continuum_form: LatticeField,
    pub corrections: Vec<TermShape>,
}

impl Substitution {
    /// Largest sitewise deviation relative to the size of the direct field.
    pub fn relative_error(&self) -> f64 {
        let diff = self.reconstructed.sub(&self.direct).max_abs();
        diff / self.direct.max_abs().max(1e-300)
    }

    /// `‖direct - continuum_form‖₂`, the lattice defect of the continuum identity.
    pub fn lattice_correction(&self) -> f64 {
        crate::lattice::lp_norm(&self.direct.sub(&self.continuum_form), 2.0)
    }
}

fn leaf(base: Base) -> Expr {
    Expr::Leaf {
        ops: Vec::new(),
        base,
    }
}

fn bracket(l: Expr, r: Expr) -> Expr {
    Expr::Bracket(Box::new(l), Box::new(r))
}

fn push_op(e: &Expr, op: Op) -> Expr {
    match e {
        Expr::Leaf { ops, base } => {
            let mut ops = ops.clone();
            ops.push(op);
            Expr::Leaf {
                ops,
                base: base.clone(),
            }
        }
        Expr::Bracket(..) => unreachable!("operators are pushed to leaves only"),
    }
}

/// Central difference of an expression as a sum of (coeff, h-power, expr).
fn d(axis: usize, e: &Expr) -> Vec<(f64, u32, Expr)> {
    match e {
        Expr::Leaf { .. } => vec![(1.0, 0, push_op(e, Op::Diff(axis)))],
        Expr::Bracket(l, r) => {
            let mut out = Vec::new();
            for (c1, h1, dl) in d(axis, l) {
                for (c2, h2, mr) in mu(axis, r) {
                    out.push((c1 * c2, h1 + h2, bracket(dl.clone(), mr)));
                }
            }
            for (c1, h1, ml) in mu(axis, l) {
                for (c2, h2, dr) in d(axis, r) {
                    out.push((c1 * c2, h1 + h2, bracket(ml.clone(), dr)));
                }
            }
            out
        }
    }
}

fn mu(axis: usize, e: &Expr) -> Vec<(f64, u32, Expr)> {
    match e {
        Expr::Leaf { .. } => vec![(1.0, 0, push_op(e, Op::Avg(axis)))],
        Expr::Bracket(l, r) => {
            let mut out = Vec::new();
            for (c1, h1, ml) in mu(axis, l) {
                for (c2, h2, mr) in mu(axis, r) {
                    out.push((c1 * c2, h1 + h2, bracket(ml.clone(), mr)));
                }
            }
            for (c1, h1, dl) in d(axis, l) {
                for (c2, h2, dr) in d(axis, r) {
                    out.push((c1 * c2, h1 + h2 + 1, bracket(dl.clone(), dr)));
                }
            }
            out
        }
    }
}

/// All terms of `D_{a1}⋯D_{ak} f` in ordinary derivatives.
fn expand_cov(axes: &[usize]) -> Vec<Term> {
    let mut terms = vec![Term {
        coeff: 1.0,
        hpow: 0,
        expr: leaf(Base::Target),
    }];
    for &a in axes.iter().rev() {
        let mut next = Vec::new();
        for t in &terms {
            for (c, h, e) in d(a, &t.expr) {
                next.push(Term {
                    coeff: t.coeff * c,
                    hpow: t.hpow + h,
                    expr: e,
                });
            }
            next.push(Term {
                coeff: t.coeff,
                hpow: t.hpow,
                expr: bracket(leaf(Base::Conn(a)), t.expr.clone()),
            });
        }
        terms = next;
    }
    terms
}

fn is_pure(e: &Expr) -> bool {
    matches!(e, Expr::Leaf { base: Base::Target, ops } if ops.iter().all(|o| matches!(o, Op::Diff(_))))
}

/// `∂^β f` rewritten with covariant derivatives of f.
fn expand_usual(beta: &[usize]) -> Vec<Term> {
    let mut out = vec![Term {
        coeff: 1.0,
        hpow: 0,
        expr: leaf(Base::CovTarget(beta.to_vec())),
    }];
    if beta.is_empty() {
        return out;
    }
    for t in expand_cov(beta).into_iter().filter(|t| !is_pure(&t.expr)) {
        for (c, h, e) in substitute_target(&t.expr) {
            out.push(Term {
                coeff: -t.coeff * c,
                hpow: t.hpow + h,
                expr: e,
            });
        }
    }
    out
}

/// Replaces every `ops ∘ f` leaf by the covariant expansion of its derivative part.
fn substitute_target(e: &Expr) -> Vec<(f64, u32, Expr)> {
    match e {
        Expr::Leaf {
            ops,
            base: Base::Target,
        } => {
            let diffs: Vec<usize> = ops
                .iter()
                .filter_map(|o| if let Op::Diff(a) = o { Some(*a) } else { None })
                .collect();
            let avgs: Vec<usize> = ops
                .iter()
                .filter_map(|o| if let Op::Avg(a) = o { Some(*a) } else { None })
                .collect();
            let mut acc: Vec<(f64, u32, Expr)> = expand_usual(&diffs)
                .into_iter()
                .map(|t| (t.coeff, t.hpow, t.expr))
                .collect();
            for a in avgs {
                let mut next = Vec::new();
                for (c, h, ex) in &acc {
                    for (c2, h2, ex2) in mu(a, ex) {
                        next.push((c * c2, h + h2, ex2));
                    }
                }
                acc = next;
            }
            acc
        }
        Expr::Leaf { .. } => vec![(1.0, 0, e.clone())],
        Expr::Bracket(l, r) => {
            let mut out = Vec::new();
            for (c1, h1, el) in substitute_target(l) {
                for (c2, h2, er) in substitute_target(r) {
                    out.push((c1 * c2, h1 + h2, bracket(el.clone(), er)));
                }
            }
            out
        }
    }
}

fn shape(t: &Term) -> TermShape {
    fn walk(e: &Expr, conn: &mut Vec<usize>, target: &mut usize) {
        match e {
            Expr::Leaf { ops, base } => {
                let n = ops.iter().filter(|o| matches!(o, Op::Diff(_))).count();
                match base {
                    Base::Conn(_) => conn.push(n),
                    Base::Target => *target = n,
                    Base::CovTarget(b) => *target = n + b.len(),
                }
            }
            Expr::Bracket(l, r) => {
                walk(l, conn, target);
                walk(r, conn, target);
            }
        }
    }
    let mut conn_orders = Vec::new();
    let mut target_order = 0;
    walk(&t.expr, &mut conn_orders, &mut target_order);
    TermShape {
        conn_orders,
        target_order,
        h_power: t.hpow,
    }
}

fn cov_chain(conn: &Connection, f: &Field, axes: &[usize]) -> Field {
    let mut g = f.clone();
    for &a in axes.iter().rev() {
        g = cov_diff(conn.a(a), &g, a);
    }
    g
}

fn usual_chain(f: &Field, axes: &[usize]) -> Field {
    let mut g = f.clone();
    for &a in axes.iter().rev() {
        g = diff(&g, a);
    }
    g
}

fn eval(e: &Expr, conn: &Connection, f: &Field, lattice: bool) -> Field {
    match e {
        Expr::Leaf { ops, base } => {
            let mut g = match base {
                Base::Conn(i) => conn.a(*i).clone(),
                Base::Target => f.clone(),
                Base::CovTarget(b) => cov_chain(conn, f, b),
            };
            for op in ops {
                g = match *op {
                    Op::Diff(a) => diff(&g, a),
                    Op::Avg(a) if lattice => avg(&g, a),
                    Op::Avg(_) => g,
                };
            }
            g
        }
        Expr::Bracket(l, r) => eval(l, conn, f, lattice).bracket(&eval(r, conn, f, lattice)),
    }
}

fn eval_sum(terms: &[Term], conn: &Connection, f: &Field, lattice: bool) -> Field {
    let h2 = conn.grid().h().powi(2);
    let mut out = Field::zeros(*f.grid());
    for t in terms.iter().filter(|t| lattice || t.hpow == 0) {
        out.axpy(
            t.coeff * h2.powi(t.hpow as i32),
            &eval(&t.expr, conn, f, lattice),
        );
    }
    out
}

/// Rebuilds `D^α f` (or `∂^α f`) from the other kind of derivative plus the
/// correction terms; `axes` lists α outermost first.
pub fn substitute_derivatives(
    conn: &Connection,
    f: &LatticeField,
    axes: &[usize],
    direction: Direction,
) -> Result<Substitution> {
    if axes.len() > 3 {
        return Err(Error::UnsupportedOrder(axes.len()));
    }
    if axes.is_empty() || axes.iter().any(|&a| a > 2) {
        return Err(Error::InvalidParameter(
            "derivative axes must be 1 to 3 entries in 0..3".into(),
        ));
    }
    let (main, corrections): (Vec<Term>, Vec<Term>) = match direction {
        Direction::CovToUsual => expand_cov(axes).into_iter().partition(|t| is_pure(&t.expr)),
        Direction::UsualToCov => expand_usual(axes).into_iter().partition(
            |t| matches!(&t.expr, Expr::Leaf { ops, base: Base::CovTarget(_) } if ops.is_empty()),
        ),
    };
    let mut rec = Vec::new();
    let mut direct = Vec::new();
    let mut continuum = Vec::new();
    for c in &f.comps {
        let mut r = eval_sum(&main, conn, c, true);
        r.axpy(1.0, &eval_sum(&corrections, conn, c, true));
        rec.push(r);
        let mut r = eval_sum(&main, conn, c, false);
        r.axpy(1.0, &eval_sum(&corrections, conn, c, false));
        continuum.push(r);
        direct.push(match direction {
            Direction::CovToUsual => cov_chain(conn, c, axes),
            Direction::UsualToCov => usual_chain(c, axes),
        });
    }
    Ok(Substitution {
        reconstructed: LatticeField {
            rank: f.rank,
            comps: rec,
        },
        direct: LatticeField {
            rank: f.rank,
            comps: direct,
        },
        continuum_form: LatticeField {
            rank: f.rank,
            comps: continuum,
        },
        corrections: corrections.iter().map(shape).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_expansion_has_expected_terms() {
        let terms = expand_cov(&[0, 1]);
        // ∂∂f, [∂A,μf], [μA,∂f], [A,∂f], [A,[A,f]]
        assert_eq!(terms.len(), 5);
        assert_eq!(terms.iter().filter(|t| is_pure(&t.expr)).count(), 1);
    }

    #[test]
    fn weights_balance() {
        for axes in [vec![0], vec![2, 1], vec![0, 1, 2], vec![1, 1, 1]] {
            let k = axes.len();
            for t in expand_cov(&axes).iter().chain(expand_usual(&axes).iter()) {
                let s = shape(t);
                assert_eq!(s.weight(), k + 2 * s.h_power as usize, "{axes:?}");
            }
        }
    }
}
