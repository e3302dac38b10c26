mod common;

use common::{monomial_jet, monomial_partial, orders, richardson, transcendentals};
use gpke::jets::{arith, Jet2, Op};
use proptest::prelude::*;

fn max_coeff(j: &Jet2) -> f64 {
    orders().fold(0.0f64, |m, (i, k)| m.max(j.coeff(i, k).abs()))
}

fn max_diff(a: &Jet2, b: &Jet2) -> f64 {
    orders().fold(0.0f64, |m, (i, k)| m.max((a.coeff(i, k) - b.coeff(i, k)).abs()))
}

fn random_jet(x: f64, y: f64, d: [[f64; 5]; 5]) -> Jet2 {
    Jet2::from_partials(x, y, &d)
}

fn partial_table() -> impl Strategy<Value = [[f64; 5]; 5]> {
    proptest::array::uniform5(proptest::array::uniform5(-1.0f64..1.0))
}

#[test]
fn monomials_are_exact_at_dyadic_points() {
    let dyadic = [-1.5, -0.75, -0.125, 0.0, 0.25, 0.5, 1.0, 2.0];
    for &x in &dyadic {
        for &y in &dyadic {
            for a in 0..=6 {
                for b in 0..=6 - a {
                    let jet = monomial_jet(a, b, x, y);
                    for (i, j) in orders() {
                        assert_eq!(jet.coeff(i, j), monomial_partial(a, b, i, j, x, y), "x^{a} y^{b} d({i},{j}) at ({x},{y})");
                    }
                }
            }
        }
    }
}

#[test]
fn partials_beyond_order_four_are_refused() {
    let jet = monomial_jet(3, 3, 0.5, 0.5);
    assert!(jet.partial(3, 2).is_err());
    assert_eq!(jet.coeff(5, 0), 0.0);
}

proptest! {
    #[test]
    fn polynomials_match_analytic_partials(
        x in -2.0f64..2.0,
        y in -2.0f64..2.0,
        c in proptest::collection::vec(-3.0f64..3.0, 28),
    ) {
        // Every monomial of total degree ≤ 6.
        let mut jet = Jet2::var_x(x, y).constant_like(0.0);
        let mut terms = Vec::new();
        for a in 0..=6 {
            for b in 0..=6 - a {
                let k = terms.len();
                terms.push((a, b, c[k]));
                jet = jet + c[k] * monomial_jet(a, b, x, y);
            }
        }
        for (i, j) in orders() {
            let exact: f64 = terms.iter().map(|&(a, b, ck)| ck * monomial_partial(a, b, i, j, x, y)).sum();
            let scale: f64 = terms.iter().map(|&(a, b, ck)| (ck * monomial_partial(a, b, i, j, x, y)).abs()).sum();
            prop_assert!((jet.coeff(i, j) - exact).abs() <= 1e-13 * scale.max(1.0), "({i},{j}): {} vs {exact}", jet.coeff(i, j));
        }
    }

    #[test]
    fn transcendentals_agree_with_richardson_differences(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        for t in transcendentals() {
            let jet = (t.jet)(x, y);
            prop_assert!(((t.f)(x, y) - jet.value()).abs() <= 1e-14 * jet.value().abs().max(1.0), "{} value", t.name);
            for order in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
                let h = if order.0 + order.1 == 1 { 1e-3 } else { 2e-3 };
                let fd = richardson(t.f, x, y, order, h);
                let v = jet.coeff(order.0, order.1);
                prop_assert!((fd - v).abs() <= 1e-7 * v.abs().max(1.0), "{} {order:?}: jet {v} fd {fd}", t.name);
            }
        }
    }

    #[test]
    fn products_obey_leibniz(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let fs = transcendentals();
        let (f, g) = ((fs[0].jet)(x, y), (fs[3].jet)(x, y));
        let fg = f * g;
        let binom = |n: usize, k: usize| common::falling(n, k) / common::falling(k, k);
        for (i, j) in orders() {
            let mut sum = 0.0;
            let mut scale = 0.0;
            for k in 0..=i {
                for l in 0..=j {
                    let term = binom(i, k) * binom(j, l) * f.coeff(k, l) * g.coeff(i - k, j - l);
                    sum += term;
                    scale += term.abs();
                }
            }
            prop_assert!((fg.coeff(i, j) - sum).abs() <= 1e-13 * scale.max(1.0));
        }
    }

    #[test]
    fn addition_and_multiplication_commute_and_associate(
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
        da in partial_table(),
        db in partial_table(),
        dc in partial_table(),
    ) {
        let (a, b, c) = (random_jet(x, y, da), random_jet(x, y, db), random_jet(x, y, dc));
        prop_assert_eq!(a + b, b + a);
        let tol = |j: &Jet2| 1e-13 * max_coeff(j).max(1.0);
        prop_assert!(max_diff(&(a * b), &(b * a)) <= tol(&(a * b)));
        prop_assert!(max_diff(&((a + b) + c), &(a + (b + c))) <= 1e-15 * 8.0);
        let left = (a * b) * c;
        prop_assert!(max_diff(&left, &(a * (b * c))) <= 1e-12 * max_coeff(&left).max(1.0));
        prop_assert_eq!(arith(&a, &b, Op::Mul).unwrap(), a * b);
    }

    #[test]
    fn division_undoes_multiplication(
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
        da in partial_table(),
        mut db in partial_table(),
        b0 in 1.0f64..3.0,
        sign in proptest::bool::ANY,
    ) {
        db[0][0] = if sign { b0 } else { -b0 };
        let (a, b) = (random_jet(x, y, da), random_jet(x, y, db));
        let back = (a * b).try_div(&b, "b").unwrap();
        prop_assert!(max_diff(&back, &a) <= 1e-12 * max_coeff(&a).max(1.0), "{back:?} vs {a:?}");
    }
}

#[test]
fn division_by_a_vanishing_jet_is_an_error() {
    let x = Jet2::var_x(0.0, 1.0);
    assert!(x.try_div(&x, "x").is_err());
}
