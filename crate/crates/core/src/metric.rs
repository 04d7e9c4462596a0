//! Metric algebra: inverse, Levi-Civita connection, covariant derivatives,
//! traces, divergence and sign-tagged orthonormal frames.

use std::sync::Arc;

use crate::chart::{BilinearValue, Chart, Point, TensorField, TensorValue, VectorValue};
use crate::error::{Error, Result};
use crate::expr::Jet2;
use crate::linalg::{axpy, unit, Mat};
use crate::report::{scaled_residual, CheckReport, ResidualTracker};
use crate::scalar::Scalar;
use crate::structures::ParacontactStructure;

/// Relative pivot floor used when inverting metrics.
const INVERSE_FLOOR: f64 = 1e-12;
/// `|det g| ≤ DET_FLOOR · max|g|ⁿ` is treated as singular.
const DET_FLOOR: f64 = 1e-10;
/// Candidates with `|g(v,v)|` below this cannot seed a frame vector.
const PIVOT_FLOOR: f64 = 1e-10;
/// Relative eigenvalue cutoff for signature counting.
const SIGNATURE_CUTOFF: f64 = 1e-10;

/// A symmetric nondegenerate (0,2) field with a declared signature
/// `(positive, negative)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    field: TensorField,
    signature: (usize, usize),
}

impl MetricField {
    pub fn new(field: TensorField, signature: (usize, usize)) -> Result<Self> {
        field.expect_rank(0, 2)?;
        let n = field.chart().dim();
        if signature.0 + signature.1 != n {
            return Err(Error::Dimension(format!(
                "signature {signature:?} does not match dimension {n}"
            )));
        }
        field.check_symmetric(1e-10)?;
        Ok(Self { field, signature })
    }

    /// Row-major component texts.
    pub fn parse(chart: &Arc<Chart>, texts: &[&str], signature: (usize, usize)) -> Result<Self> {
        Self::new(TensorField::bilinear(chart, texts)?, signature)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.field.chart()
    }

    pub fn field(&self) -> &TensorField {
        &self.field
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    pub fn dim(&self) -> usize {
        self.chart().dim()
    }

    /// The same metric multiplied by a positive constant.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let names = self.chart().coord_names().clone();
        let comps = self
            .field
            .components()
            .iter()
            .map(|e| crate::expr::Expression::constant(factor, names.clone()) * e.clone())
            .collect();
        Self::new(TensorField::new(self.chart(), 0, 2, comps)?, self.signature)
    }

    /// Metric data at `p`: values, inverse, first derivatives and
    /// Christoffel symbols.
    pub fn at<T: Scalar>(&self, p: &Point<T>) -> Result<MetricPoint<T>> {
        let n = self.dim();
        let jets = self.field.jets(p)?;
        let g = Mat::from_fn(n, |i, j| jets[i * n + j].value);
        let singular = || Error::SingularMetric { coords: p.to_f64() };
        let scale = g.max_abs();
        if g.det().abs() <= T::lit(DET_FLOOR) * scale.powi(n as i32) {
            return Err(singular());
        }
        let inv = g.inverse(T::lit(INVERSE_FLOOR)).ok_or_else(singular)?;
        let mut dg = vec![T::zero(); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    dg[(k * n + i) * n + j] = jets[i * n + j].gradient[k];
                }
            }
        }
        let mut gamma = vec![T::zero(); n * n * n];
        let half = T::lit(0.5);
        let d = |k: usize, i: usize, j: usize| dg[(k * n + i) * n + j];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = T::zero();
                    for l in 0..n {
                        acc = acc + inv[(k, l)] * (d(i, j, l) + d(j, i, l) - d(l, i, j));
                    }
                    let v = half * acc;
                    gamma[(k * n + i) * n + j] = v;
                    gamma[(k * n + j) * n + i] = v;
                }
            }
        }
        Ok(MetricPoint {
            point: p.clone(),
            g,
            inv,
            dg,
            gamma,
        })
    }

    pub fn jets<T: Scalar>(&self, p: &Point<T>) -> Result<Vec<Jet2<T>>> {
        self.field.jets(p)
    }

    /// Signature counted from eigenvalue signs at `p`.
    pub fn signature_at<T: Scalar>(&self, p: &Point<T>) -> Result<(usize, usize)> {
        let n = self.dim();
        let g = Mat::from_row_major(n, self.field.values(p)?);
        Ok(g.inertia(T::lit(SIGNATURE_CUTOFF)))
    }
}

/// Metric data evaluated at one point.
#[derive(Debug, Clone)]
pub struct MetricPoint<T> {
    pub point: Point<T>,
    pub g: Mat<T>,
    pub inv: Mat<T>,
    dg: Vec<T>,
    gamma: Vec<T>,
}

impl<T: Scalar> MetricPoint<T> {
    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// `∂_k g_ij`.
    #[inline]
    pub fn dg(&self, k: usize, i: usize, j: usize) -> T {
        let n = self.dim();
        self.dg[(k * n + i) * n + j]
    }

    /// `Γ^k_ij`.
    #[inline]
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> T {
        let n = self.dim();
        self.gamma[(k * n + i) * n + j]
    }

    pub fn inner(&self, u: &[T], v: &[T]) -> T {
        self.g.bilinear(u, v)
    }

    /// Lowers an index: `v ↦ g(v, ·)`.
    pub fn flat(&self, v: &[T]) -> Vec<T> {
        self.g.apply(v)
    }

    /// `g^{ij} B_ij`.
    pub fn trace(&self, b: &Mat<T>) -> T {
        let n = self.dim();
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                acc = acc + self.inv[(i, j)] * b[(i, j)];
            }
        }
        acc
    }

    /// `∇_{∂_i} Y` for a vector field given by component jets.
    pub fn nabla_vector(&self, y: &[Jet2<T>], i: usize) -> Vec<T> {
        let n = self.dim();
        (0..n)
            .map(|k| {
                (0..n).fold(y[k].gradient[i], |acc, j| acc + self.gamma(k, i, j) * y[j].value)
            })
            .collect()
    }

    /// `∇_{∂_i} Y` along an arbitrary direction `x`.
    pub fn nabla_vector_along(&self, y: &[Jet2<T>], x: &[T]) -> Vec<T> {
        combine(x, |i| self.nabla_vector(y, i))
    }

    /// `(∇_{∂_i} w)_j = ∂_i w_j − Γ^k_ij w_k`.
    pub fn nabla_covector(&self, w: &[Jet2<T>], i: usize) -> Vec<T> {
        let n = self.dim();
        (0..n)
            .map(|j| (0..n).fold(w[j].gradient[i], |acc, k| acc - self.gamma(k, i, j) * w[k].value))
            .collect()
    }

    /// `(∇_{∂_i} A)^k_j = ∂_i A^k_j + Γ^k_il A^l_j − Γ^l_ij A^k_l`.
    pub fn nabla_endo(&self, a: &[Jet2<T>], i: usize) -> Mat<T> {
        let n = self.dim();
        Mat::from_fn(n, |k, j| {
            let mut acc = a[k * n + j].gradient[i];
            for l in 0..n {
                acc = acc + self.gamma(k, i, l) * a[l * n + j].value
                    - self.gamma(l, i, j) * a[k * n + l].value;
            }
            acc
        })
    }

    /// `(∇_X A)` along direction `x`.
    pub fn nabla_endo_along(&self, a: &[Jet2<T>], x: &[T]) -> Mat<T> {
        let n = self.dim();
        let flat = combine(x, |i| self.nabla_endo(a, i).as_slice().to_vec());
        Mat::from_row_major(n, flat)
    }

    /// `(∇_{∂_i} B)_jk = ∂_i B_jk − Γ^l_ij B_lk − Γ^l_ik B_jl`.
    pub fn nabla_bilinear(&self, b: &[Jet2<T>], i: usize) -> Mat<T> {
        let n = self.dim();
        Mat::from_fn(n, |j, k| {
            let mut acc = b[j * n + k].gradient[i];
            for l in 0..n {
                acc = acc
                    - self.gamma(l, i, j) * b[l * n + k].value
                    - self.gamma(l, i, k) * b[j * n + l].value;
            }
            acc
        })
    }

    /// `(∇_{∂_i} g)_jk` from the cached derivatives.
    pub fn nabla_metric(&self, i: usize) -> Mat<T> {
        let n = self.dim();
        Mat::from_fn(n, |j, k| {
            let mut acc = self.dg(i, j, k);
            for l in 0..n {
                acc = acc - self.gamma(l, i, j) * self.g[(l, k)] - self.gamma(l, i, k) * self.g[(j, l)];
            }
            acc
        })
    }

    /// `div A = g^{ij} (∇_{∂_i} A)(∂_j)`.
    pub fn divergence_endo(&self, a: &[Jet2<T>]) -> Vec<T> {
        let n = self.dim();
        let mut out = vec![T::zero(); n];
        for i in 0..n {
            let na = self.nabla_endo(a, i);
            for j in 0..n {
                let w = self.inv[(i, j)];
                if w == T::zero() {
                    continue;
                }
                for k in 0..n {
                    out[k] = out[k] + w * na[(k, j)];
                }
            }
        }
        out
    }
}

/// `Σ_i x^i f(i)`.
fn combine<T: Scalar>(x: &[T], f: impl Fn(usize) -> Vec<T>) -> Vec<T> {
    let mut out: Option<Vec<T>> = None;
    for (i, &xi) in x.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        let term = f(i);
        out = Some(match out {
            None => term.iter().map(|&t| xi * t).collect(),
            Some(acc) => axpy(xi, &term, &acc),
        });
    }
    out.unwrap_or_else(|| vec![T::zero(); f(0).len()])
}

/// The Christoffel symbols `Γ^k_ij` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelValue<T> {
    pub point: Point<T>,
    table: Vec<T>,
}

impl<T: Scalar> ChristoffelValue<T> {
    /// `Γ^k_ij`, i.e. the `∂_k` component of `∇_{∂_i}∂_j`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> T {
        let n = self.point.dim();
        self.table[(k * n + i) * n + j]
    }
}

/// An orthonormal frame with signs `ε_a = g(E_a, E_a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameValue<T> {
    pub point: Point<T>,
    pub vectors: Vec<Vec<T>>,
    pub signs: Vec<i8>,
}

impl<T: Scalar> FrameValue<T> {
    /// `max |g(E_a,E_b) − ε_a δ_ab|`.
    pub fn orthonormality_residual(&self, g: &Mat<T>) -> f64 {
        let n = self.vectors.len();
        let mut worst = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                let target = if a == b { T::from_i8(self.signs[a]).unwrap() } else { T::zero() };
                let r = (g.bilinear(&self.vectors[a], &self.vectors[b]) - target).abs();
                worst = worst.max(r.to_f64_lossy());
            }
        }
        worst
    }

    /// `Σ_a ε_a B(E_a, E_a)`.
    pub fn signed_trace(&self, b: &Mat<T>) -> T {
        self.vectors
            .iter()
            .zip(&self.signs)
            .fold(T::zero(), |acc, (e, &s)| acc + T::from_i8(s).unwrap() * b.bilinear(e, e))
    }
}

pub fn metric_inverse<T: Scalar>(g: &MetricField, p: &Point<T>) -> Result<Mat<T>> {
    Ok(g.at(p)?.inv)
}

pub fn christoffel<T: Scalar>(g: &MetricField, p: &Point<T>) -> Result<ChristoffelValue<T>> {
    let mp = g.at(p)?;
    Ok(ChristoffelValue {
        point: p.clone(),
        table: mp.gamma,
    })
}

/// `∇_X T` for a field of rank (1,0), (0,1), (1,1) or (0,2); the result has
/// the rank of `T`.
pub fn covariant_derivative<T: Scalar>(
    field: &TensorField,
    g: &MetricField,
    p: &Point<T>,
    direction: &[T],
) -> Result<TensorValue<T>> {
    let mp = g.at(p)?;
    let jets = field.jets(p)?;
    if direction.len() != p.dim() {
        return Err(Error::Dimension("direction has wrong length".into()));
    }
    let comps = match field.rank() {
        (1, 0) => mp.nabla_vector_along(&jets, direction),
        (0, 1) => combine(direction, |i| mp.nabla_covector(&jets, i)),
        (1, 1) => combine(direction, |i| mp.nabla_endo(&jets, i).as_slice().to_vec()),
        (0, 2) => combine(direction, |i| mp.nabla_bilinear(&jets, i).as_slice().to_vec()),
        other => {
            return Err(Error::Dimension(format!(
                "covariant derivative of a {other:?} field is not supported"
            )))
        }
    };
    Ok(TensorValue::from_components(field.rank(), p, comps))
}

/// `g^{ij} B_ij`.
pub fn metric_trace_bilinear<T: Scalar>(b: &BilinearValue<T>, g: &MetricField, p: &Point<T>) -> Result<T> {
    Ok(g.at(p)?.trace(&b.matrix))
}

/// `div A = g^{ij} (∇_{∂_i} A)(∂_j)`.
pub fn divergence_11<T: Scalar>(a: &TensorField, g: &MetricField, p: &Point<T>) -> Result<VectorValue<T>> {
    a.expect_rank(1, 1)?;
    let mp = g.at(p)?;
    Ok(VectorValue {
        point: p.clone(),
        components: mp.divergence_endo(&a.jets(p)?),
    })
}

/// Gram–Schmidt on the coordinate basis, pivoting on the largest
/// `|g(v,v)|` among the remaining candidates.
pub fn orthonormal_frame<T: Scalar>(g: &MetricField, p: &Point<T>) -> Result<FrameValue<T>> {
    let mp = g.at(p)?;
    let n = mp.dim();
    let mut remaining: Vec<Vec<T>> = (0..n).map(|i| unit(n, i)).collect();
    let mut vectors = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    while vectors.len() < n {
        let projected: Vec<Vec<T>> = remaining
            .iter()
            .map(|v| project_out(&mp.g, v, &vectors, &signs))
            .collect();
        let mut best: Option<(usize, Vec<T>, T)> = None;
        let consider = |best: &mut Option<(usize, Vec<T>, T)>, idx: usize, v: Vec<T>| {
            let q = mp.inner(&v, &v);
            if best.as_ref().is_none_or(|(_, _, bq)| q.abs() > bq.abs()) {
                *best = Some((idx, v, q));
            }
        };
        for (idx, v) in projected.iter().enumerate() {
            consider(&mut best, idx, v.clone());
        }
        if best.as_ref().is_some_and(|(_, _, q)| q.abs() <= T::lit(PIVOT_FLOOR)) {
            // every remaining candidate is null: try pairwise sums
            for a in 0..projected.len() {
                for b in a + 1..projected.len() {
                    let sum: Vec<T> = projected[a].iter().zip(&projected[b]).map(|(&x, &y)| x + y).collect();
                    consider(&mut best, a, sum);
                }
            }
        }
        let (idx, v, q) = best.ok_or_else(|| Error::PivotFailure("no candidates left".into()))?;
        if q.abs() <= T::lit(PIVOT_FLOOR) {
            return Err(Error::PivotFailure(format!(
                "all candidate norms below {PIVOT_FLOOR:e} at {:?}",
                p.to_f64()
            )));
        }
        let norm = q.abs().sqrt();
        vectors.push(v.iter().map(|&c| c / norm).collect());
        signs.push(if q > T::zero() { 1 } else { -1 });
        remaining.remove(idx);
    }
    let pos = signs.iter().filter(|&&s| s > 0).count();
    if (pos, n - pos) != g.signature() {
        return Err(Error::PivotFailure(format!(
            "frame signs ({pos},{}) disagree with declared signature {:?}",
            n - pos,
            g.signature()
        )));
    }
    Ok(FrameValue {
        point: p.clone(),
        vectors,
        signs,
    })
}

/// `v − Σ_a ε_a g(v, E_a) E_a`.
pub(crate) fn project_out<T: Scalar>(g: &Mat<T>, v: &[T], frame: &[Vec<T>], signs: &[i8]) -> Vec<T> {
    let mut out = v.to_vec();
    for (e, &s) in frame.iter().zip(signs) {
        let c = T::from_i8(s).unwrap() * g.bilinear(v, e);
        out = axpy(-c, e, &out);
    }
    out
}

/// A φ-basis `{X_1..X_n, φX_1..φX_n, ξ}` with `X_i`, `ξ` spacelike and
/// `φX_i` timelike.
pub fn phi_basis<T: Scalar>(s: &ParacontactStructure, p: &Point<T>) -> Result<FrameValue<T>> {
    let local = s.at(p)?;
    let g = &local.metric.g;
    let dim = p.dim();
    let half = (dim - 1) / 2;
    let mut candidates = Vec::with_capacity(2 * dim);
    for a in 0..dim {
        let e = unit::<T>(dim, a);
        let u = axpy(-local.eta_of(&e), &local.xi, &e);
        let pu = local.phi.apply(&u);
        candidates.push(u);
        candidates.push(pu);
    }
    let mut chosen: Vec<Vec<T>> = Vec::new();
    let mut chosen_signs: Vec<i8> = Vec::new();
    let mut xs = Vec::with_capacity(half);
    for _ in 0..half {
        let mut best: Option<(Vec<T>, T)> = None;
        for c in &candidates {
            let v = project_out(g, c, &chosen, &chosen_signs);
            let q = g.bilinear(&v, &v);
            if best.as_ref().is_none_or(|(_, bq)| q > *bq) {
                best = Some((v, q));
            }
        }
        let (v, q) = best.ok_or_else(|| Error::PivotFailure("empty candidate set".into()))?;
        if q <= T::lit(PIVOT_FLOOR) {
            return Err(Error::PivotFailure(format!(
                "no spacelike vector left in ker η at {:?}",
                p.to_f64()
            )));
        }
        let x: Vec<T> = v.iter().map(|&c| c / q.sqrt()).collect();
        let phx = local.phi.apply(&x);
        chosen.push(x.clone());
        chosen_signs.push(1);
        chosen.push(phx.clone());
        chosen_signs.push(-1);
        xs.push((x, phx));
    }
    let mut vectors: Vec<Vec<T>> = xs.iter().map(|(x, _)| x.clone()).collect();
    vectors.extend(xs.iter().map(|(_, px)| px.clone()));
    vectors.push(local.xi.clone());
    let mut signs = vec![1_i8; half];
    signs.extend(std::iter::repeat_n(-1, half));
    signs.push(1);
    let frame = FrameValue {
        point: p.clone(),
        vectors,
        signs,
    };
    let r = frame.orthonormality_residual(g);
    if r > 1e-8 {
        return Err(Error::PivotFailure(format!(
            "φ-basis relations fail (residual {r:e}) at {:?}",
            p.to_f64()
        )));
    }
    Ok(frame)
}

/// `∇g = 0` over the given points.
pub fn check_metric_compatibility<T: Scalar>(
    name: &str,
    g: &MetricField,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(name, tol);
    for p in points {
        let mp = g.at(p)?;
        let scale = mp.g.max_abs();
        let mut worst = 0.0_f64;
        for i in 0..mp.dim() {
            let ng = mp.nabla_metric(i);
            worst = worst.max(scaled_residual(ng.as_slice(), &[&[scale]]));
        }
        t.record("nabla_g", worst, &p.to_f64());
    }
    Ok(t.finish())
}

/// `g^{ij}B_ij` against `Σ_a ε_a B(E_a,E_a)` for `B = g` and each extra
/// bilinear form.
pub fn check_trace_frame<T: Scalar>(
    name: &str,
    g: &MetricField,
    extra: &[&TensorField],
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(name, tol);
    for p in points {
        let mp = g.at(p)?;
        let frame = orthonormal_frame(g, p)?;
        t.record(
            "frame_orthonormality",
            frame.orthonormality_residual(&mp.g),
            &p.to_f64(),
        );
        let n = mp.dim();
        let mut forms = vec![mp.g.clone()];
        for b in extra {
            forms.push(Mat::from_row_major(n, b.values(p)?));
        }
        for b in &forms {
            let a = mp.trace(b);
            let f = frame.signed_trace(b);
            t.record("trace_vs_frame", scaled_residual(&[a - f], &[&[a], &[f]]), &p.to_f64());
        }
    }
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Pt;

    fn m1() -> (Arc<Chart>, MetricField) {
        let c = Chart::new("M1", &["x", "y", "z"], &[(0.5, 2.5), (-2.0, 2.0), (-2.0, 2.0)]).unwrap();
        let g = MetricField::parse(&c, &["-x", "0", "0", "0", "x^4+x", "x^2", "0", "x^2", "1"], (2, 1)).unwrap();
        (c, g)
    }

    fn flat(signs: [&str; 3]) -> (Arc<Chart>, MetricField) {
        let c = Chart::new("R3", &["x", "y", "z"], &[(-1.0, 1.0); 3]).unwrap();
        let pos = signs.iter().filter(|s| !s.starts_with('-')).count();
        let comps = [signs[0], "0", "0", "0", signs[1], "0", "0", "0", signs[2]];
        let sig = (pos, 3 - pos);
        (c.clone(), MetricField::parse(&c, &comps, sig).unwrap())
    }

    fn pt(c: &Arc<Chart>, x: &[f64]) -> Point<f64> {
        Pt::from_f64(c, x).unwrap()
    }

    #[test]
    fn inverse_examples() {
        let (c, g) = flat(["1", "-1", "1"]);
        let inv = metric_inverse(&g, &pt(&c, &[0.0, 0.0, 0.0])).unwrap();
        assert_eq!(inv, Mat::<f64>::from_row_major(3, vec![1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0]));

        let (c, g) = m1();
        let inv = metric_inverse(&g, &pt(&c, &[1.0, 0.0, 0.0])).unwrap();
        let expected = [-1.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, -1.0, 2.0];
        for (a, b) in inv.as_slice().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }

        let c = Chart::new("R3", &["x", "y", "z"], &[(-1.0, 1.0); 3]).unwrap();
        let degenerate = MetricField::parse(&c, &["1", "0", "0", "0", "0", "0", "0", "0", "1"], (2, 1)).unwrap();
        assert!(matches!(
            metric_inverse::<f64>(&degenerate, &pt(&c, &[0.0; 3])),
            Err(Error::SingularMetric { .. })
        ));
    }

    #[test]
    fn christoffel_examples() {
        let (c, g) = flat(["1", "-1", "1"]);
        let ch = christoffel(&g, &pt(&c, &[0.3, 0.1, 0.2])).unwrap();
        assert!(ch.table.iter().all(|&v| v == 0.0));

        let (c, g) = m1();
        let ch = christoffel(&g, &pt(&c, &[2.0, 0.0, 0.0])).unwrap();
        assert!((ch.get(0, 0, 0) - 0.25).abs() < 1e-14);
        let ch = christoffel(&g, &pt(&c, &[1.0, 0.0, 0.0])).unwrap();
        assert!((ch.get(0, 1, 1) - 2.5).abs() < 1e-14);
        assert!((ch.get(1, 0, 2) - 1.0).abs() < 1e-14);
        assert!((ch.get(2, 0, 2) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn covariant_derivative_of_xi() {
        let (c, g) = m1();
        let xi = TensorField::vector(&c, &["0", "0", "1"]).unwrap();
        let p = pt(&c, &[1.0, 0.5, -0.5]);
        let d1 = covariant_derivative(&xi, &g, &p, &[1.0, 0.0, 0.0]).unwrap().components();
        for (a, b) in d1.iter().zip([0.0, 1.0, -1.0]) {
            assert!((a - b).abs() < 1e-13);
        }
        let d3 = covariant_derivative(&xi, &g, &p, &[0.0, 0.0, 1.0]).unwrap().components();
        assert!(d3.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn divergence_of_identity_vanishes() {
        let (c, g) = m1();
        let id = TensorField::endomorphism(&c, &["1", "0", "0", "0", "1", "0", "0", "0", "1"]).unwrap();
        let d = divergence_11(&id, &g, &pt(&c, &[1.3, 0.2, 0.1])).unwrap();
        assert!(d.components.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn para_sasakian_divergence_is_minus_two_xi() {
        // div φ = -(dim - 1) ξ on a para-Sasakian manifold
        let (c, g) = m1();
        let phi = TensorField::endomorphism(&c, &["0", "-1", "0", "-1", "0", "0", "x^2", "0", "0"]).unwrap();
        let d = divergence_11(&phi, &g, &pt(&c, &[1.0, 1.0, 1.0])).unwrap();
        for (a, b) in d.components.iter().zip([0.0, 0.0, -2.0]) {
            assert!((a - b).abs() < 1e-12, "{:?}", d.components);
        }
    }

    #[test]
    fn traces() {
        let (c, g) = m1();
        let p = pt(&c, &[1.7, -0.3, 0.9]);
        let gv = BilinearValue {
            point: p.clone(),
            matrix: g.at(&p).unwrap().g,
        };
        assert!((metric_trace_bilinear(&gv, &g, &p).unwrap() - 3.0).abs() < 1e-13);
        let zero = BilinearValue {
            point: p.clone(),
            matrix: Mat::zeros(3),
        };
        assert_eq!(metric_trace_bilinear(&zero, &g, &p).unwrap(), 0.0);
    }

    #[test]
    fn frames() {
        let (c, g) = flat(["1", "-1", "1"]);
        let f = orthonormal_frame(&g, &pt(&c, &[0.0; 3])).unwrap();
        let mut sorted = f.signs.clone();
        sorted.sort();
        assert_eq!(sorted, vec![-1, 1, 1]);
        assert!(f.vectors.iter().all(|v| v.iter().filter(|&&x| x != 0.0).count() == 1));

        let (c, g) = m1();
        let p = pt(&c, &[1.0, 0.0, 0.0]);
        let f = orthonormal_frame(&g, &p).unwrap();
        assert!(f.orthonormality_residual(&g.at(&p).unwrap().g) < 1e-9);
        assert_eq!(f.signs.iter().filter(|&&s| s < 0).count(), 1);

        let c2 = Chart::new("R2", &["a", "b"], &[(-1.0, 1.0); 2]).unwrap();
        let null_basis = MetricField::parse(&c2, &["0", "1", "1", "0"], (1, 1)).unwrap();
        let f = orthonormal_frame(&null_basis, &pt(&c2, &[0.0, 0.0])).unwrap();
        assert!(f.orthonormality_residual(&null_basis.at(&pt(&c2, &[0.0, 0.0])).unwrap().g) < 1e-12);
    }

    #[test]
    fn metric_compatibility_and_torsion() {
        let (c, g) = m1();
        let points: Vec<Point<f64>> = c.sample(64, 1);
        let r = check_metric_compatibility("M1", &g, &points, 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
        for p in &points {
            let ch = christoffel(&g, p).unwrap();
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        assert_eq!(ch.get(k, i, j), ch.get(k, j, i));
                    }
                }
            }
        }
    }

    #[test]
    fn trace_matches_frame_sum() {
        let (c, g) = m1();
        let points: Vec<Point<f64>> = c.sample(32, 3);
        let b = TensorField::bilinear(&c, &["x*y", "z", "1", "z", "y^2", "x", "1", "x", "3"]).unwrap();
        let r = check_trace_frame("M1", &g, &[&b], &points, 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn asymmetric_metric_rejected() {
        let c = Chart::new("R2", &["a", "b"], &[(-1.0, 1.0); 2]).unwrap();
        assert!(MetricField::parse(&c, &["1", "a", "0", "-1"], (1, 1)).is_err());
    }

    #[test]
    fn f32_christoffel() {
        let (c, g) = m1();
        let p = Point::<f32>::from_f64(&c, &[2.0, 0.0, 0.0]).unwrap();
        let ch = christoffel(&g, &p).unwrap();
        assert!((ch.get(0, 0, 0) - 0.25).abs() < 1e-6);
    }
}
