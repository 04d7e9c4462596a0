use std::sync::Arc;

use parageo::chart::{exterior_derivative_1form, lie_bracket};
use parageo::expr::{parse_expression, Node};
use parageo::{Chart, Expression, Pt, TensorField};
use proptest::prelude::*;

fn names() -> Arc<[String]> {
    ["x", "y", "z"].iter().map(|s| s.to_string()).collect()
}

fn chart() -> Arc<Chart> {
    Chart::new("R3", &["x", "y", "z"], &[(-2.0, 2.0); 3]).unwrap()
}

fn b(n: Node) -> Box<Node> {
    Box::new(n)
}

/// `1.5 + e²`, a denominator bounded away from zero.
fn safe(e: Node) -> Node {
    Node::Add(b(Node::Const(1.5)), b(Node::Pow(b(e), 2)))
}

fn leaf() -> impl Strategy<Value = Node> {
    prop_oneof![
        (0u32..400).prop_map(|k| Node::Const(k as f64 / 100.0)),
        (0usize..3).prop_map(Node::Coord),
    ]
}

/// Rational expressions whose denominators never vanish.
fn rational() -> impl Strategy<Value = Node> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Node::Neg(b(a))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Add(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Sub(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Mul(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Div(b(x), b(safe(y)))),
            (inner.clone(), 0i32..4).prop_map(|(x, k)| Node::Pow(b(x), k)),
            (inner, 1i32..3).prop_map(|(x, k)| Node::Pow(b(safe(x)), -k)),
        ]
    })
}

/// Arbitrary trees, including ones with poles, for the printer round trip.
fn any_tree() -> impl Strategy<Value = Node> {
    leaf().prop_recursive(5, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Node::Neg(b(a))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Add(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Sub(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Mul(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Div(b(x), b(y))),
            (inner, -8i32..=8).prop_map(|(x, k)| Node::Pow(b(x), k)),
        ]
    })
}

fn polynomial() -> impl Strategy<Value = Node> {
    leaf().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Add(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Sub(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Mul(b(x), b(y))),
            (inner, 0i32..4).prop_map(|(x, k)| Node::Pow(b(x), k)),
        ]
    })
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    [-1.5..1.5f64, -1.5..1.5f64, -1.5..1.5f64]
}

fn expr(n: Node) -> Expression {
    Expression::new(n, names()).unwrap()
}

fn close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + floor
}

fn vector_field(nodes: [Node; 3]) -> TensorField {
    TensorField::new(&chart(), 1, 0, nodes.into_iter().map(expr).collect()).unwrap()
}

/// `[Y, Z]` as an expression field, built from symbolic partials.
fn bracket_field(y: &TensorField, z: &TensorField) -> TensorField {
    let (yc, zc) = (y.components(), z.components());
    let comps = (0..3)
        .map(|k| {
            (0..3).fold(Expression::zero(names()), |acc, i| {
                acc + yc[i].clone() * zc[k].partial(i) - zc[i].clone() * yc[k].partial(i)
            })
        })
        .collect();
    TensorField::new(&chart(), 1, 0, comps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn jet_matches_central_differences(n in rational(), at in point()) {
        let e = expr(n);
        let j = e.eval_jet2(&at).unwrap();
        let h = 1e-5;
        let f = |d: [f64; 3]| e.eval(&[at[0] + d[0], at[1] + d[1], at[2] + d[2]]).unwrap();
        let unit = |i: usize, s: f64| {
            let mut d = [0.0; 3];
            d[i] = s;
            d
        };
        for i in 0..3 {
            let fd = (f(unit(i, h)) - f(unit(i, -h))) / (2.0 * h);
            prop_assert!(close(j.gradient[i], fd, 1e-6, 1e-9), "∂{i}: jet {} fd {fd} for {e}", j.gradient[i]);
            // second derivatives by central differences of the exact gradient
            let gp = e.eval_jet2(&[at[0] + unit(i, h)[0], at[1] + unit(i, h)[1], at[2] + unit(i, h)[2]]).unwrap();
            let gm = e.eval_jet2(&[at[0] - unit(i, h)[0], at[1] - unit(i, h)[1], at[2] - unit(i, h)[2]]).unwrap();
            for k in 0..3 {
                let fd2 = (gp.gradient[k] - gm.gradient[k]) / (2.0 * h);
                prop_assert!(close(j.hess(i, k), fd2, 1e-6, 1e-9), "∂{i}∂{k}: jet {} fd {fd2} for {e}", j.hess(i, k));
            }
        }
    }

    #[test]
    fn product_rule_is_exact(a in rational(), c in rational(), at in point()) {
        let (ea, ec) = (expr(a.clone()), expr(c.clone()));
        let prod = expr(Node::Mul(b(a), b(c))).eval_jet2(&at).unwrap();
        let (ja, jc) = (ea.eval_jet2(&at).unwrap(), ec.eval_jet2(&at).unwrap());
        let scale = 1.0 + ja.value.abs().max(1.0) * jc.value.abs().max(1.0)
            * (1.0 + ja.gradient.iter().chain(&jc.gradient).fold(0.0_f64, |m, v| m.max(v.abs())));
        prop_assert!((prod.value - ja.value * jc.value).abs() <= 1e-12 * scale);
        for i in 0..3 {
            let leibniz = ja.gradient[i] * jc.value + ja.value * jc.gradient[i];
            prop_assert!((prod.gradient[i] - leibniz).abs() <= 1e-12 * scale);
            for k in 0..3 {
                let second = ja.hess(i, k) * jc.value
                    + ja.gradient[i] * jc.gradient[k]
                    + ja.gradient[k] * jc.gradient[i]
                    + ja.value * jc.hess(i, k);
                let mag = 1.0 + ja.hess(i, k).abs() * jc.value.abs() + ja.value.abs() * jc.hess(i, k).abs()
                    + (ja.gradient[i] * jc.gradient[k]).abs() * 2.0;
                prop_assert!((prod.hess(i, k) - second).abs() <= 1e-12 * mag.max(scale));
            }
        }
    }

    #[test]
    fn print_then_parse_is_identity(n in any_tree()) {
        let e = expr(n);
        let printed = e.to_string();
        let back = parse_expression(&printed, &names()).unwrap();
        prop_assert_eq!(back, e, "printed as {}", printed);
    }

    #[test]
    fn lie_bracket_satisfies_jacobi(
        x in [polynomial(), polynomial(), polynomial()],
        y in [polynomial(), polynomial(), polynomial()],
        z in [polynomial(), polynomial(), polynomial()],
        at in point(),
    ) {
        let (x, y, z) = (vector_field(x), vector_field(y), vector_field(z));
        let p = Pt::from_f64(&chart(), &at).unwrap();
        let terms = [
            lie_bracket(&x, &bracket_field(&y, &z), &p).unwrap().components,
            lie_bracket(&y, &bracket_field(&z, &x), &p).unwrap().components,
            lie_bracket(&z, &bracket_field(&x, &y), &p).unwrap().components,
        ];
        let scale = 1.0 + terms.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        for k in 0..3 {
            let sum = terms[0][k] + terms[1][k] + terms[2][k];
            prop_assert!(sum.abs() / scale <= 1e-8, "component {k}: {sum} (scale {scale})");
        }
    }

    #[test]
    fn exact_forms_are_closed(n in polynomial(), at in point()) {
        let f = expr(n);
        let df = TensorField::new(&chart(), 0, 1, (0..3).map(|i| f.partial(i)).collect()).unwrap();
        let p = Pt::from_f64(&chart(), &at).unwrap();
        let d = exterior_derivative_1form(&df, &p).unwrap();
        prop_assert!(d.matrix.max_abs() <= 1e-10, "d(df) = {:?} for f = {f}", d.matrix);
    }
}
