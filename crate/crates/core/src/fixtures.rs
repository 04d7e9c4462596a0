//! Built-in structures and maps: the para-Sasakian pair `M1`, `M2` with the
//! coordinate swap between them, flat model structures, and a few maps that
//! exercise the map identities.

use std::sync::Arc;

use crate::chart::{Chart, TensorField};
use crate::error::Result;
use crate::expr::Expression;
use crate::maps::SmoothMapSpec;
use crate::metric::MetricField;
use crate::structures::{ParaHermitianStructure, ParacontactStructure};

/// `x ∈ [0.5, 2.5]` keeps `g₁` nondegenerate with signature `(2, 1)`.
pub const M1_DOMAIN: [(f64, f64); 3] = [(0.5, 2.5), (-2.0, 2.0), (-2.0, 2.0)];
/// `v ∈ [0.5, 2.5]`, the image of `M1_DOMAIN` under the swap.
pub const M2_DOMAIN: [(f64, f64); 3] = [(-2.0, 2.0), (0.5, 2.5), (-2.0, 2.0)];

pub fn m1_chart() -> Arc<Chart> {
    Chart::new("M1", &["x", "y", "z"], &M1_DOMAIN).expect("valid chart")
}

pub fn m2_chart() -> Arc<Chart> {
    Chart::new("M2", &["u", "v", "w"], &M2_DOMAIN).expect("valid chart")
}

pub fn flat_chart3() -> Arc<Chart> {
    Chart::new("R3", &["x", "y", "z"], &[(-1.0, 1.0); 3]).expect("valid chart")
}

pub fn plane_chart(half_width: f64) -> Arc<Chart> {
    Chart::new("P2", &["u", "v"], &[(-half_width, half_width); 2]).expect("valid chart")
}

/// `φ₁∂x = −∂y + x²∂z`, `φ₁∂y = −∂x`, `ξ₁ = ∂z`, `η₁ = x²dy + dz`.
pub fn m1_on(chart: &Arc<Chart>) -> Result<ParacontactStructure> {
    ParacontactStructure::new(
        "M1",
        TensorField::endomorphism(chart, &["0", "-1", "0", "-1", "0", "0", "x^2", "0", "0"])?,
        TensorField::vector(chart, &["0", "0", "1"])?,
        TensorField::covector(chart, &["0", "x^2", "1"])?,
        MetricField::parse(chart, &["-x", "0", "0", "0", "x^4+x", "x^2", "0", "x^2", "1"], (2, 1))?,
    )
}

pub fn m1() -> Result<ParacontactStructure> {
    m1_on(&m1_chart())
}

/// `φ₂∂u = −∂v`, `φ₂∂v = −∂u + v²∂w`, `ξ₂ = ∂w`. With `corrected` the
/// contact form is `v²du + dw`, the metric dual of `ξ₂`; otherwise it is
/// `−v²du + dw`, which violates duality and `φ² = Id − η⊗ξ`.
pub fn m2_on(chart: &Arc<Chart>, corrected: bool) -> Result<ParacontactStructure> {
    let eta0 = if corrected { "v^2" } else { "-v^2" };
    ParacontactStructure::new(
        "M2",
        TensorField::endomorphism(chart, &["0", "-1", "0", "-1", "0", "0", "0", "v^2", "0"])?,
        TensorField::vector(chart, &["0", "0", "1"])?,
        TensorField::covector(chart, &[eta0, "0", "1"])?,
        MetricField::parse(chart, &["v^4+v", "0", "v^2", "0", "-v", "0", "v^2", "0", "1"], (2, 1))?,
    )
}

pub fn m2(corrected: bool) -> Result<ParacontactStructure> {
    m2_on(&m2_chart(), corrected)
}

/// `M1` with `η = x²dy + (1 + y²)dz`: no longer normal.
pub fn perturbed_eta_m1() -> Result<ParacontactStructure> {
    let base = m1()?;
    let c = base.chart().clone();
    ParacontactStructure::new(
        "M1-perturbed-eta",
        base.phi,
        base.xi,
        TensorField::covector(&c, &["0", "x^2", "1+y^2"])?,
        base.metric,
    )
}

/// `φ∂x = ∂y`, `φ∂y = ∂x`, `ξ = ∂z`, `η = dz`, `g = diag(1, −1, 1)`.
pub fn flat_paracosymplectic() -> Result<ParacontactStructure> {
    flat_paracosymplectic_with(&flat_chart3(), &["0", "0", "1"])
}

/// The flat structure with a replacement contact form.
pub fn flat_paracosymplectic_with(chart: &Arc<Chart>, eta: &[&str]) -> Result<ParacontactStructure> {
    ParacontactStructure::new(
        "R3",
        TensorField::endomorphism(chart, &["0", "1", "0", "1", "0", "0", "0", "0", "0"])?,
        TensorField::vector(chart, &["0", "0", "1"])?,
        TensorField::covector(chart, eta)?,
        MetricField::parse(chart, &["1", "0", "0", "0", "-1", "0", "0", "0", "1"], (2, 1))?,
    )
}

fn flat_para_kahler_on(chart: &Arc<Chart>, scale: f64) -> Result<ParaHermitianStructure> {
    let (a, b) = (format!("{scale:?}"), format!("{:?}", -scale));
    ParaHermitianStructure::new(
        "P2",
        TensorField::endomorphism(chart, &["0", "1", "1", "0"])?,
        MetricField::parse(chart, &[&a, "0", "0", &b], (1, 1))?,
    )
}

/// `J∂u = ∂v`, `J∂v = ∂u`, `h = scale·diag(1, −1)` on `[−1, 1]²`.
pub fn flat_para_kahler(scale: f64) -> Result<ParaHermitianStructure> {
    flat_para_kahler_on(&plane_chart(1.0), scale)
}

type Matrix = Vec<Vec<Expression>>;

fn mat_mul(a: &Matrix, b: &Matrix, zero: &Expression) -> Matrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(zero.clone(), |acc, k| acc + a[i][k].clone() * b[k][j].clone()))
                .collect()
        })
        .collect()
}

fn transpose(a: &Matrix) -> Matrix {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| a[j][i].clone()).collect()).collect()
}

/// A non-integrable almost para-Hermitian structure on a 4-box:
/// `J = A J₀ A⁻¹`, `h = A⁻ᵀ h₀ A⁻¹` with `A = I + N` and `N` strictly upper
/// triangular with polynomial entries, so `A⁻¹ = I − N + N² − N³` exactly.
/// `coeffs` scales the six entries of `N`.
pub fn perturbed_para_hermitian(coeffs: &[f64]) -> Result<ParaHermitianStructure> {
    assert_eq!(coeffs.len(), 6, "six coefficients, one per strictly upper entry");
    let chart = Chart::new("P4", &["a", "b", "c", "d"], &[(-0.5, 0.5); 4])?;
    let names = chart.coord_names().clone();
    let k = |v: f64| Expression::constant(v, names.clone());
    let x = |i: usize| Expression::coord(i, names.clone());
    let zero = k(0.0);
    let n = 4;
    let mut nil: Matrix = vec![vec![zero.clone(); n]; n];
    let mut idx = 0;
    for i in 0..n {
        for j in i + 1..n {
            let poly = x(idx % n) + x((idx + 1) % n).powi(2) * k(0.5);
            nil[i][j] = k(coeffs[idx]) * poly;
            idx += 1;
        }
    }
    let ident: Matrix = (0..n)
        .map(|i| (0..n).map(|j| if i == j { k(1.0) } else { zero.clone() }).collect())
        .collect();
    let add = |a: &Matrix, b: &Matrix, s: f64| -> Matrix {
        (0..n)
            .map(|i| (0..n).map(|j| a[i][j].clone() + k(s) * b[i][j].clone()).collect())
            .collect()
    };
    let a = add(&ident, &nil, 1.0);
    let n2 = mat_mul(&nil, &nil, &zero);
    let n3 = mat_mul(&n2, &nil, &zero);
    let a_inv = add(&add(&add(&ident, &nil, -1.0), &n2, 1.0), &n3, -1.0);
    let swap = |i: usize| i ^ 1;
    let j0: Matrix = (0..n)
        .map(|i| (0..n).map(|j| if j == swap(i) { k(1.0) } else { zero.clone() }).collect())
        .collect();
    let h0: Matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (i == j, i % 2) {
                    (true, 0) => k(1.0),
                    (true, _) => k(-1.0),
                    _ => zero.clone(),
                })
                .collect()
        })
        .collect();
    let j = mat_mul(&mat_mul(&a, &j0, &zero), &a_inv, &zero);
    let h = mat_mul(&mat_mul(&transpose(&a_inv), &h0, &zero), &a_inv, &zero);
    let flat = |m: Matrix| m.into_iter().flatten().collect::<Vec<_>>();
    ParaHermitianStructure::new(
        "P4",
        TensorField::new(&chart, 1, 1, flat(j))?,
        MetricField::new(TensorField::new(&chart, 0, 2, flat(h))?, (2, 2))?,
    )
}

/// `M1 → M2`, `(x, y, z) ↦ (y, x, z)`.
pub fn swap_example(corrected: bool) -> Result<(ParacontactStructure, ParacontactStructure, SmoothMapSpec)> {
    let s1 = m1()?;
    let s2 = m2(corrected)?;
    let f = SmoothMapSpec::parse("swap", s1.chart(), s2.chart(), &["y", "x", "z"])?;
    Ok((s1, s2, f))
}

/// `(x, y, z) ↦ (y, x + 1, z)` on `x ∈ [0.5, 1.5]`. It does not intertwine
/// `φ₁` and `φ₂`, because `φ₂` at the shifted point differs.
pub fn shifted_swap() -> Result<(ParacontactStructure, ParacontactStructure, SmoothMapSpec)> {
    let chart = Chart::new("M1", &["x", "y", "z"], &[(0.5, 1.5), (-2.0, 2.0), (-2.0, 2.0)])?;
    let s1 = m1_on(&chart)?;
    let s2 = m2(true)?;
    let f = SmoothMapSpec::parse("shifted-swap", &chart, s2.chart(), &["y", "x+1", "z"])?;
    Ok((s1, s2, f))
}

/// Flat paracosymplectic `R3 → P2`, `(x, y, z) ↦ (x, y)`.
pub fn projection() -> Result<(ParacontactStructure, ParaHermitianStructure, SmoothMapSpec)> {
    let s = flat_paracosymplectic()?;
    let n = flat_para_kahler(1.0)?;
    let f = SmoothMapSpec::parse("projection", s.chart(), n.chart(), &["x", "y"])?;
    Ok((s, n, f))
}

/// Flat para-Kähler `P2 → R3`, `(u, v) ↦ (u, v, 0)`.
pub fn inclusion() -> Result<(ParaHermitianStructure, ParacontactStructure, SmoothMapSpec)> {
    let n = flat_para_kahler(1.0)?;
    let s = flat_paracosymplectic()?;
    let f = SmoothMapSpec::parse("inclusion", n.chart(), s.chart(), &["u", "v", "0"])?;
    Ok((n, s, f))
}

/// `P2 → M1`, `(u, v) ↦ γ((u + v)/4)` with `γ(s) = (1 + s, −s, (1 + s)³/3)`,
/// a null curve tangent to the `+1` eigenline of `φ₁` inside `ker η₁`.
pub fn null_curve_into_m1() -> Result<(ParaHermitianStructure, ParacontactStructure, SmoothMapSpec)> {
    let n = flat_para_kahler(1.0)?;
    let s = m1()?;
    let f = SmoothMapSpec::parse(
        "null-curve",
        n.chart(),
        s.chart(),
        &["1+(u+v)/4", "-(u+v)/4", "(1+(u+v)/4)^3/3"],
    )?;
    Ok((n, s, f))
}

/// `M1 → P2`, `(x, y, z) ↦ (x² + y², −2xy)`, a `(φ₁, J)`-paraholomorphic map
/// into the flat para-Kähler plane.
pub fn m1_to_plane() -> Result<(ParacontactStructure, ParaHermitianStructure, SmoothMapSpec)> {
    let s = m1()?;
    let n = flat_para_kahler_on(&plane_chart(11.0), 1.0)?;
    let f = SmoothMapSpec::parse("to-plane", s.chart(), n.chart(), &["x^2+y^2", "-2*x*y"])?;
    Ok((s, n, f))
}

/// Flat `R3 → R3`, `(x, y, z) ↦ (x², y, z)`: paraholomorphic in no sense and
/// not parapluriharmonic.
pub fn square_x() -> Result<(ParacontactStructure, SmoothMapSpec)> {
    let s = flat_paracosymplectic()?;
    let f = SmoothMapSpec::parse("square-x", s.chart(), s.chart(), &["x^2", "y", "z"])?;
    Ok((s, f))
}
