//! Smooth maps between charts: pushforward, second fundamental form,
//! tension, paraholomorphy and the identities relating them to the
//! structure tensors on either side.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::{bracket_from_jets, BilinearValue, Chart, Point};
use crate::error::{Error, Result};
use crate::expr::{Expression, Jet2};
use crate::linalg::{axpy, dot, unit, Mat};
use crate::metric::{orthonormal_frame, phi_basis, MetricField, MetricPoint};
use crate::report::{identity_residual, scaled_residual, CheckReport, ResidualTracker};
use crate::scalar::Scalar;
use crate::structures::{
    j_adapted_frame, ParaHermitianStructure, ParacontactPoint, ParacontactStructure, StructureRef,
};
use crate::DEFAULT_TOL;

/// `f: source → target`, one expression per target coordinate written in
/// source coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMapSpec {
    pub name: String,
    source: Arc<Chart>,
    target: Arc<Chart>,
    components: Vec<Expression>,
}

impl SmoothMapSpec {
    pub fn new(
        name: impl Into<String>,
        source: &Arc<Chart>,
        target: &Arc<Chart>,
        components: Vec<Expression>,
    ) -> Result<Self> {
        if components.len() != target.dim() {
            return Err(Error::Dimension(format!(
                "map into `{}` needs {} components, got {}",
                target.name,
                target.dim(),
                components.len()
            )));
        }
        if let Some(e) = components.iter().find(|e| e.names() != source.coord_names()) {
            return Err(Error::Dimension(format!(
                "map component `{e}` is not written in the coordinates of `{}`",
                source.name
            )));
        }
        Ok(Self {
            name: name.into(),
            source: source.clone(),
            target: target.clone(),
            components,
        })
    }

    pub fn parse(name: impl Into<String>, source: &Arc<Chart>, target: &Arc<Chart>, texts: &[&str]) -> Result<Self> {
        let comps = texts
            .iter()
            .enumerate()
            .map(|(i, t)| source.parse(t).map_err(|e| e.at_path(format!("map.components[{i}]"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, source, target, comps)
    }

    pub fn source(&self) -> &Arc<Chart> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Chart> {
        &self.target
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }

    pub fn jets<T: Scalar>(&self, p: &Point<T>) -> Result<Vec<Jet2<T>>> {
        if **p.chart() != *self.source {
            return Err(Error::Dimension(format!(
                "map `{}` is defined on `{}`, point is on `{}`",
                self.name,
                self.source.name,
                p.chart().name
            )));
        }
        self.components.iter().map(|e| e.eval_jet2(p.coords())).collect()
    }

    /// `f(p)`; fails if the image leaves the target domain box.
    pub fn image<T: Scalar>(&self, p: &Point<T>) -> Result<Point<T>> {
        let coords = self.jets(p)?.into_iter().map(|j| j.value).collect();
        Point::new(&self.target, coords)
    }
}

/// A vector in `T_{f(p)}` of the target, attached to the source point `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionAlongMap<T> {
    pub point: Point<T>,
    pub components: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructurePair {
    /// `(φ, J)`: paracontact source, para-Hermitian target.
    ContactToHermitian,
    /// `(J, φ)`: para-Hermitian source, paracontact target.
    HermitianToContact,
    /// `(φ₁, φ₂)`: paracontact on both sides.
    ContactToContact,
}

/// Which structure tensors a map intertwines, and with which sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapKind {
    pub pair: StructurePair,
    /// `+1` paraholomorphic, `−1` anti-paraholomorphic.
    pub sign: i8,
}

impl MapKind {
    pub fn paraholomorphic(pair: StructurePair) -> Self {
        Self { pair, sign: 1 }
    }

    pub fn anti(pair: StructurePair) -> Self {
        Self { pair, sign: -1 }
    }

    fn validate(&self, source: StructureRef<'_>, target: StructureRef<'_>) -> Result<()> {
        use StructurePair::*;
        let ok = matches!(
            (self.pair, source, target),
            (ContactToHermitian, StructureRef::Contact(_), StructureRef::Hermitian(_))
                | (HermitianToContact, StructureRef::Hermitian(_), StructureRef::Contact(_))
                | (ContactToContact, StructureRef::Contact(_), StructureRef::Contact(_))
        );
        if !ok || !matches!(self.sign, 1 | -1) {
            return Err(Error::Dimension(format!(
                "map kind {self:?} does not match structures `{}` → `{}`",
                source.name(),
                target.name()
            )));
        }
        Ok(())
    }
}

/// Everything about `f` at one point that the map checks need: order-2
/// jets of the components and both metrics with their connections.
#[derive(Debug, Clone)]
pub struct MapPoint<T> {
    pub image: Point<T>,
    pub jets: Vec<Jet2<T>>,
    pub g1: MetricPoint<T>,
    pub g2: MetricPoint<T>,
}

impl<T: Scalar> MapPoint<T> {
    pub fn new(f: &SmoothMapSpec, g1: &MetricField, g2: &MetricField, p: &Point<T>) -> Result<Self> {
        if g1.chart() != f.source() || g2.chart() != f.target() {
            return Err(Error::Dimension(format!(
                "metrics on `{}`/`{}` do not match map `{}`",
                g1.chart().name,
                g2.chart().name,
                f.name
            )));
        }
        let jets = f.jets(p)?;
        let image = Point::new(f.target(), jets.iter().map(|j| j.value).collect())?;
        Ok(Self {
            g1: g1.at(p)?,
            g2: g2.at(&image)?,
            image,
            jets,
        })
    }

    pub fn source_dim(&self) -> usize {
        self.g1.dim()
    }

    pub fn target_dim(&self) -> usize {
        self.jets.len()
    }

    pub fn point(&self) -> &Point<T> {
        &self.g1.point
    }

    /// `f_*X`.
    pub fn push(&self, x: &[T]) -> Vec<T> {
        self.jets.iter().map(|j| dot(&j.gradient, x)).collect()
    }

    /// `α_f(∂_i, ∂_j)`.
    pub fn alpha_coord(&self, i: usize, j: usize) -> Vec<T> {
        let n1 = self.source_dim();
        let n2 = self.target_dim();
        (0..n2)
            .map(|c| {
                let mut v = self.jets[c].hess(i, j);
                for k in 0..n1 {
                    v = v - self.g1.gamma(k, i, j) * self.jets[c].gradient[k];
                }
                for a in 0..n2 {
                    for b in 0..n2 {
                        v = v + self.g2.gamma(c, a, b) * self.jets[a].gradient[i] * self.jets[b].gradient[j];
                    }
                }
                v
            })
            .collect()
    }

    /// `α_f(X, Y)` for constant-coefficient `X`, `Y`.
    pub fn alpha(&self, x: &[T], y: &[T]) -> Vec<T> {
        let n1 = self.source_dim();
        let mut out = vec![T::zero(); self.target_dim()];
        for i in 0..n1 {
            for j in 0..n1 {
                let w = x[i] * y[j];
                if w != T::zero() {
                    out = axpy(w, &self.alpha_coord(i, j), &out);
                }
            }
        }
        out
    }

    /// `τ(f) = g₁^{ij} α_f(∂_i, ∂_j)`.
    pub fn tension(&self) -> Vec<T> {
        let n1 = self.source_dim();
        let mut out = vec![T::zero(); self.target_dim()];
        for i in 0..n1 {
            for j in 0..n1 {
                let w = self.g1.inv[(i, j)];
                if w != T::zero() {
                    out = axpy(w, &self.alpha_coord(i, j), &out);
                }
            }
        }
        out
    }

    /// `(f*g₂)_ij = g₂(f_*∂_i, f_*∂_j)`.
    pub fn pullback(&self) -> Mat<T> {
        let n1 = self.source_dim();
        let cols: Vec<Vec<T>> = (0..n1).map(|i| self.push(&unit(n1, i))).collect();
        Mat::from_fn(n1, |i, j| self.g2.inner(&cols[i], &cols[j]))
    }
}

pub fn pushforward<T: Scalar>(f: &SmoothMapSpec, p: &Point<T>, x: &[T]) -> Result<SectionAlongMap<T>> {
    let jets = f.jets(p)?;
    if x.len() != p.dim() {
        return Err(Error::Dimension(format!("vector of length {} at a {}-dimensional point", x.len(), p.dim())));
    }
    Ok(SectionAlongMap {
        point: p.clone(),
        components: jets.iter().map(|j| dot(&j.gradient, x)).collect(),
    })
}

pub fn pullback_metric<T: Scalar>(f: &SmoothMapSpec, g2: &MetricField, p: &Point<T>) -> Result<BilinearValue<T>> {
    let jets = f.jets(p)?;
    let image = f.image(p)?;
    let h = g2.at(&image)?;
    let n1 = p.dim();
    let cols: Vec<Vec<T>> = (0..n1)
        .map(|i| jets.iter().map(|j| j.gradient[i]).collect())
        .collect();
    Ok(BilinearValue {
        point: p.clone(),
        matrix: Mat::from_fn(n1, |i, j| h.inner(&cols[i], &cols[j])),
    })
}

/// `e(f) = ½ Tr_{g₁}(f*g₂)`, signed.
pub fn energy_density<T: Scalar>(f: &SmoothMapSpec, g1: &MetricField, g2: &MetricField, p: &Point<T>) -> Result<T> {
    let m = MapPoint::new(f, g1, g2, p)?;
    Ok(T::lit(0.5) * m.g1.trace(&m.pullback()))
}

pub fn second_fundamental_form<T: Scalar>(
    f: &SmoothMapSpec,
    g1: &MetricField,
    g2: &MetricField,
    p: &Point<T>,
    x: &[T],
    y: &[T],
) -> Result<SectionAlongMap<T>> {
    let m = MapPoint::new(f, g1, g2, p)?;
    Ok(SectionAlongMap {
        point: p.clone(),
        components: m.alpha(x, y),
    })
}

pub fn tension_field<T: Scalar>(
    f: &SmoothMapSpec,
    g1: &MetricField,
    g2: &MetricField,
    p: &Point<T>,
) -> Result<SectionAlongMap<T>> {
    let m = MapPoint::new(f, g1, g2, p)?;
    Ok(SectionAlongMap {
        point: p.clone(),
        components: m.tension(),
    })
}

fn name(f: &SmoothMapSpec, check: &str) -> String {
    format!("{}/{check}", f.name)
}

/// `τ(f) = 0` at every point.
pub fn is_harmonic<T: Scalar>(
    f: &SmoothMapSpec,
    g1: &MetricField,
    g2: &MetricField,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(name(f, "harmonic"), tol);
    for p in points {
        let m = MapPoint::new(f, g1, g2, p)?;
        t.record("tension", scaled_residual(&m.tension(), &[]), &p.to_f64());
    }
    Ok(t.finish())
}

/// `α_f(∂_i, ∂_j) = α_f(∂_j, ∂_i)`, also on mixed random-looking directions.
pub fn check_alpha_symmetry<T: Scalar>(
    f: &SmoothMapSpec,
    g1: &MetricField,
    g2: &MetricField,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(name(f, "alpha-symmetry"), tol);
    for p in points {
        let m = MapPoint::new(f, g1, g2, p)?;
        let n = m.source_dim();
        let x: Vec<T> = (0..n).map(|i| T::lit(1.0 + 0.5 * i as f64)).collect();
        let y: Vec<T> = (0..n).map(|i| T::lit(if i % 2 == 0 { -0.75 } else { 1.25 })).collect();
        let mut worst = identity_residual(&m.alpha(&x, &y), &m.alpha(&y, &x), &[]);
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max(identity_residual(&m.alpha_coord(i, j), &m.alpha_coord(j, i), &[]));
            }
        }
        t.record("alpha_symmetric", worst, &p.to_f64());
    }
    Ok(t.finish())
}

/// `½ g₁^{ij}(f*g₂)_ij` against the signed frame sum. The value itself
/// is reported in the notes.
pub fn check_energy_density<T: Scalar>(
    f: &SmoothMapSpec,
    g1: &MetricField,
    g2: &MetricField,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(name(f, "energy-density"), tol);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        let m = MapPoint::new(f, g1, g2, p)?;
        let b = m.pullback();
        let half = T::lit(0.5);
        let e = half * m.g1.trace(&b);
        let frame = orthonormal_frame(g1, p)?;
        let e_frame = half * frame.signed_trace(&b);
        t.record("trace_vs_frame", identity_residual(&[e], &[e_frame], &[]), &p.to_f64());
        lo = lo.min(e.to_f64_lossy());
        hi = hi.max(e.to_f64_lossy());
    }
    if !points.is_empty() {
        t.note(format!("energy density ranges over [{lo:.6}, {hi:.6}]"));
    }
    Ok(t.finish())
}

/// `Tr_{g₁} α_f` through the inverse metric against the signed sum over a
/// φ-basis (paracontact source) or an orthonormal frame.
pub fn check_tension_trace_frame<T: Scalar>(
    f: &SmoothMapSpec,
    source: StructureRef<'_>,
    g2: &MetricField,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let g1 = source.metric();
    let mut t = ResidualTracker::new(name(f, "tension-trace-frame"), tol);
    for p in points {
        let m = MapPoint::new(f, g1, g2, p)?;
        let frame = match source {
            StructureRef::Contact(s) => phi_basis(s, p)?,
            StructureRef::Hermitian(_) => orthonormal_frame(g1, p)?,
        };
        let mut sum = vec![T::zero(); m.target_dim()];
        for (e, &s) in frame.vectors.iter().zip(&frame.signs) {
            sum = axpy(T::from_i8(s).unwrap(), &m.alpha(e, e), &sum);
        }
        t.record("trace_vs_frame", identity_residual(&m.tension(), &sum, &[]), &p.to_f64());
    }
    Ok(t.finish())
}

fn structure_point<T: Scalar>(s: StructureRef<'_>, p: &Point<T>) -> Result<(Mat<T>, Vec<Jet2<T>>)> {
    let jets = s.tensor().jets(p)?;
    let n = p.dim();
    Ok((Mat::from_fn(n, |a, b| jets[a * n + b].value), jets))
}

fn contact<'a>(s: StructureRef<'a>, role: &str) -> Result<&'a ParacontactStructure> {
    match s {
        StructureRef::Contact(c) => Ok(c),
        StructureRef::Hermitian(h) => Err(Error::Dimension(format!(
            "{role} must be paracontact, `{}` is para-Hermitian",
            h.name
        ))),
    }
}

/// `f_*∘Ψ₁ = σ Ψ₂∘f_*` on coordinate fields, plus the consequences that
/// go with each kind: `f_*ξ = 0` for `(φ, J)`; `Im f_* ⊥ ξ` for `(J, φ)`;
/// `η₂(f_*X) = 0` on `ker η₁` and `f_*ξ₁ ∥ ξ₂` for `(φ₁, φ₂)`.
pub fn check_paraholomorphic<T: Scalar>(
    f: &SmoothMapSpec,
    kind: MapKind,
    source: StructureRef<'_>,
    target: StructureRef<'_>,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    kind.validate(source, target)?;
    let label = if kind.sign > 0 { "paraholomorphic" } else { "anti-paraholomorphic" };
    let mut t = ResidualTracker::new(name(f, label), tol);
    let sigma = T::from_i8(kind.sign).unwrap();
    for p in points {
        let m = MapPoint::new(f, source.metric(), target.metric(), p)?;
        let at = p.to_f64();
        let (psi1, _) = structure_point(source, p)?;
        let (psi2, _) = structure_point(target, &m.image)?;
        let n1 = m.source_dim();
        let mut worst = 0.0_f64;
        for i in 0..n1 {
            let e = unit::<T>(n1, i);
            let lhs = m.push(&psi1.apply(&e));
            let rhs: Vec<T> = psi2.apply(&m.push(&e)).into_iter().map(|v| sigma * v).collect();
            worst = worst.max(identity_residual(&lhs, &rhs, &[]));
        }
        t.record("intertwining", worst, &at);
        match kind.pair {
            StructurePair::ContactToHermitian => {
                let s1 = contact(source, "source")?.at(p)?;
                let fx = m.push(&s1.xi);
                t.record("push_xi_vanishes", scaled_residual(&fx, &[&s1.xi]), &at);
            }
            StructurePair::HermitianToContact => {
                let s2 = contact(target, "target")?.at(&m.image)?;
                let mut w = 0.0_f64;
                for i in 0..n1 {
                    let fx = m.push(&unit(n1, i));
                    let g = m.g2.inner(&fx, &s2.xi);
                    w = w.max(scaled_residual(&[g], &[&fx]));
                }
                t.record("image_orthogonal_xi", w, &at);
            }
            StructurePair::ContactToContact => {
                let s1 = contact(source, "source")?.at(p)?;
                let s2 = contact(target, "target")?.at(&m.image)?;
                let mut w = 0.0_f64;
                for x in s1.kernel_basis() {
                    let fx = m.push(&x);
                    w = w.max(scaled_residual(&[s2.eta_of(&fx)], &[&fx]));
                }
                t.record("kernel_preserved", w, &at);
                let fxi = m.push(&s1.xi);
                let lambda = s2.eta_of(&fxi);
                let perp = axpy(-lambda, &s2.xi, &fxi);
                t.record("xi_parallel", scaled_residual(&perp, &[&fxi]), &at);
            }
        }
    }
    Ok(t.finish())
}

/// `β(X, Y) = (∇̄_{f_*X} Ψ)(f_*Y)` for the target structure tensor `Ψ`.
pub fn beta_along_map<T: Scalar>(
    f: &SmoothMapSpec,
    source_metric: &MetricField,
    target: StructureRef<'_>,
    p: &Point<T>,
    x: &[T],
    y: &[T],
) -> Result<SectionAlongMap<T>> {
    let m = MapPoint::new(f, source_metric, target.metric(), p)?;
    let (_, jets) = structure_point(target, &m.image)?;
    Ok(SectionAlongMap {
        point: p.clone(),
        components: beta(&m, &jets, x, y),
    })
}

fn beta<T: Scalar>(m: &MapPoint<T>, psi2: &[Jet2<T>], x: &[T], y: &[T]) -> Vec<T> {
    m.g2.nabla_endo_along(psi2, &m.push(x)).apply(&m.push(y))
}

/// `Ψ₂(τ(f)) = σ f_*(div Ψ₁) − Tr_{g₁} β`, where `f_*∘Ψ₁ = σ Ψ₂∘f_*`.
/// Each term is computed on its own: `τ` from the second fundamental form,
/// `div Ψ₁` from the source connection, `β` from the target connection.
pub fn verify_tension_transfer<T: Scalar>(
    f: &SmoothMapSpec,
    kind: MapKind,
    source: StructureRef<'_>,
    target: StructureRef<'_>,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    kind.validate(source, target)?;
    let mut t = ResidualTracker::new(name(f, "tension-transfer"), tol);
    let sigma = T::from_i8(kind.sign).unwrap();
    for p in points {
        let m = MapPoint::new(f, source.metric(), target.metric(), p)?;
        let (_, psi1_jets) = structure_point(source, p)?;
        let (psi2, psi2_jets) = structure_point(target, &m.image)?;
        let lhs = psi2.apply(&m.tension());
        let div: Vec<T> = m.push(&m.g1.divergence_endo(&psi1_jets));
        let n1 = m.source_dim();
        let mut tr_beta = vec![T::zero(); m.target_dim()];
        for i in 0..n1 {
            for j in 0..n1 {
                let w = m.g1.inv[(i, j)];
                if w != T::zero() {
                    tr_beta = axpy(w, &beta(&m, &psi2_jets, &unit(n1, i), &unit(n1, j)), &tr_beta);
                }
            }
        }
        let rhs: Vec<T> = div.iter().zip(&tr_beta).map(|(&d, &b)| sigma * d - b).collect();
        t.record("tension_transfer", identity_residual(&lhs, &rhs, &[&div, &tr_beta]), &p.to_f64());
    }
    Ok(t.finish())
}

/// `σΨ₂(α_f(X,Y)) + σβ(X,Y) = f_*((∇_XΨ₁)Y) + α_f(X, Ψ₁Y)` for every pair
/// drawn from `directions` (coordinate fields, plus `ξ` on a paracontact
/// source, when empty).
pub fn verify_pointwise_transfer<T: Scalar>(
    f: &SmoothMapSpec,
    kind: MapKind,
    source: StructureRef<'_>,
    target: StructureRef<'_>,
    points: &[Point<T>],
    directions: &[Vec<T>],
    tol: f64,
) -> Result<CheckReport> {
    kind.validate(source, target)?;
    let mut t = ResidualTracker::new(name(f, "pointwise-transfer"), tol);
    let sigma = T::from_i8(kind.sign).unwrap();
    for p in points {
        let m = MapPoint::new(f, source.metric(), target.metric(), p)?;
        let (psi1, psi1_jets) = structure_point(source, p)?;
        let (psi2, psi2_jets) = structure_point(target, &m.image)?;
        let n1 = m.source_dim();
        let dirs: Vec<Vec<T>> = if directions.is_empty() {
            let mut d: Vec<Vec<T>> = (0..n1).map(|i| unit(n1, i)).collect();
            if let StructureRef::Contact(s) = source {
                d.push(s.xi.values(p)?);
            }
            d
        } else {
            directions.to_vec()
        };
        let mut worst = 0.0_f64;
        for x in &dirs {
            let nabla = m.g1.nabla_endo_along(&psi1_jets, x);
            for y in &dirs {
                let a = psi2.apply(&m.alpha(x, y));
                let b = beta(&m, &psi2_jets, x, y);
                let lhs: Vec<T> = a.iter().zip(&b).map(|(&a, &b)| sigma * (a + b)).collect();
                let c = m.push(&nabla.apply(y));
                let d = m.alpha(x, &psi1.apply(y));
                let rhs: Vec<T> = c.iter().zip(&d).map(|(&c, &d)| c + d).collect();
                worst = worst.max(identity_residual(&lhs, &rhs, &[&a, &b, &c, &d]));
            }
        }
        t.record("pointwise_transfer", worst, &p.to_f64());
    }
    Ok(t.finish())
}

/// `Σᵢ(∇_{Je′ᵢ}Je′ᵢ − ∇_{e′ᵢ}e′ᵢ) = J(div J − Σᵢ[e′ᵢ, Je′ᵢ])` on a J-adapted
/// orthonormal frame field. `div J` comes from the inverse-metric trace;
/// its frame expansion `Σᵢ([e′ᵢ,Je′ᵢ] − J∇_{e′ᵢ}e′ᵢ + J∇_{Je′ᵢ}Je′ᵢ)` is
/// reported as a second identity.
pub fn verify_frame_identity<T: Scalar>(
    s: &ParaHermitianStructure,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(format!("{}/frame-identity", s.name), tol);
    for p in points {
        let l = s.at(p)?;
        let n = l.dim();
        let frame = j_adapted_frame(s, p)?;
        let mut lhs = vec![T::zero(); n];
        let mut brackets = vec![T::zero(); n];
        let mut expansion = vec![T::zero(); n];
        for (e, je) in &frame {
            let ev: Vec<T> = e.iter().map(|c| c.value).collect();
            let jev: Vec<T> = je.iter().map(|c| c.value).collect();
            let nee = l.metric.nabla_vector_along(e, &ev);
            let njj = l.metric.nabla_vector_along(je, &jev);
            let br = bracket_from_jets(e, je);
            lhs = axpy(T::one(), &njj, &axpy(-T::one(), &nee, &lhs));
            brackets = axpy(T::one(), &br, &brackets);
            let jn = l.j.apply(&axpy(-T::one(), &nee, &njj));
            expansion = axpy(T::one(), &jn, &axpy(T::one(), &br, &expansion));
        }
        let div = l.metric.divergence_endo(&l.j_jets);
        let rhs = l.j.apply(&axpy(-T::one(), &brackets, &div));
        let at = p.to_f64();
        t.record("frame_identity", identity_residual(&lhs, &rhs, &[&div, &brackets]), &at);
        t.record("divergence_expansion", identity_residual(&div, &expansion, &[]), &at);
    }
    Ok(t.finish())
}

/// `g(τ(f), ξ) = 0` on the paracontact target, i.e. `τ(f)` lies in
/// `ker η`.
pub fn verify_tension_vertical<T: Scalar>(
    f: &SmoothMapSpec,
    source: &ParaHermitianStructure,
    target: &ParacontactStructure,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(name(f, "tension-vertical"), tol);
    for p in points {
        let m = MapPoint::new(f, &source.metric, &target.metric, p)?;
        let s2 = target.at(&m.image)?;
        let tau = m.tension();
        let g = m.g2.inner(&tau, &s2.xi);
        t.record("tension_xi_component", scaled_residual(&[g], &[&tau]), &p.to_f64());
    }
    Ok(t.finish())
}

/// `α_f(X,Y) = α_f(φX,φY)` on coordinate pairs and `α_f(X,ξ) = 0`.
pub fn check_parapluriharmonic<T: Scalar>(
    f: &SmoothMapSpec,
    source: &ParacontactStructure,
    target_metric: &MetricField,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(name(f, "parapluriharmonic"), tol);
    for p in points {
        let m = MapPoint::new(f, &source.metric, target_metric, p)?;
        let s = source.at(p)?;
        let n = m.source_dim();
        let at = p.to_f64();
        let mut pluri = 0.0_f64;
        let mut xi_row = 0.0_f64;
        for a in 0..n {
            let ea = unit::<T>(n, a);
            let pa = s.phi.apply(&ea);
            for b in a..n {
                let eb = unit::<T>(n, b);
                let pb = s.phi.apply(&eb);
                pluri = pluri.max(identity_residual(&m.alpha(&ea, &eb), &m.alpha(&pa, &pb), &[]));
            }
            xi_row = xi_row.max(scaled_residual(&m.alpha(&ea, &s.xi), &[]));
        }
        t.record("alpha_phi_invariant", pluri, &at);
        t.record("alpha_xi_vanishes", xi_row, &at);
    }
    Ok(t.finish())
}

/// For a `(φ, J)` map out of a normal 3-manifold:
/// `f_*((∇_Xφ)Y) = −(q f_*X + p f_*φX)η(Y)` and
/// `J(α_f(X,Y)) = −(q f_*X + p f_*φX)η(Y) + α_f(X, φY)`, with `(p, q)`
/// extracted pointwise unless `pq` overrides them.
pub fn verify_normality_transfer<T: Scalar>(
    f: &SmoothMapSpec,
    source: &ParacontactStructure,
    target: &ParaHermitianStructure,
    points: &[Point<T>],
    pq: Option<(f64, f64)>,
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(name(f, "normality-transfer"), tol);
    if pq.is_some() {
        t.note("structure functions overridden");
    }
    for p in points {
        let m = MapPoint::new(f, &source.metric, &target.metric, p)?;
        let s = source.at(p)?;
        let j = target.at(&m.image)?.j;
        let (pf, qf) = match pq {
            Some((a, b)) => (T::lit(a), T::lit(b)),
            None => s.structure_functions(),
        };
        let n = m.source_dim();
        let mut dirs: Vec<Vec<T>> = (0..n).map(|i| unit(n, i)).collect();
        dirs.push(s.xi.clone());
        let mut w2 = 0.0_f64;
        let mut w3 = 0.0_f64;
        for x in &dirs {
            let fx = m.push(x);
            let fpx = m.push(&s.phi.apply(x));
            let nabla = s.metric.nabla_endo_along(&s.phi_jets, x);
            for y in &dirs {
                let ey = s.eta_of(y);
                let common: Vec<T> = fx.iter().zip(&fpx).map(|(&a, &b)| -(qf * a + pf * b) * ey).collect();
                let lhs2 = m.push(&nabla.apply(y));
                w2 = w2.max(identity_residual(&lhs2, &common, &[&fx, &fpx]));
                let lhs3 = j.apply(&m.alpha(x, y));
                let a = m.alpha(x, &s.phi.apply(y));
                let rhs3: Vec<T> = common.iter().zip(&a).map(|(&c, &a)| c + a).collect();
                w3 = w3.max(identity_residual(&lhs3, &rhs3, &[&common, &a]));
            }
        }
        let at = p.to_f64();
        t.record("pushed_nabla_phi", w2, &at);
        t.record("j_alpha", w3, &at);
    }
    Ok(t.finish())
}

fn lambda_parts<T: Scalar>(m: &MapPoint<T>, s1: &ParacontactPoint<T>, s2: &ParacontactPoint<T>) -> (T, f64) {
    let fxi = m.push(&s1.xi);
    let lambda = s2.eta_of(&fxi);
    let perp = axpy(-lambda, &s2.xi, &fxi);
    (lambda, scaled_residual(&perp, &[&fxi]))
}

/// `λ = η₂(f_*ξ₁)`; fails if `f_*ξ₁` is not parallel to `ξ₂`.
pub fn lambda_of_map<T: Scalar>(
    f: &SmoothMapSpec,
    source: &ParacontactStructure,
    target: &ParacontactStructure,
    p: &Point<T>,
) -> Result<T> {
    let m = MapPoint::new(f, &source.metric, &target.metric, p)?;
    let (lambda, r) = lambda_parts(&m, &source.at(p)?, &target.at(&m.image)?);
    if r > DEFAULT_TOL {
        return Err(Error::NotParallel { residual: r });
    }
    Ok(lambda)
}

/// `f_*ξ₁ = λξ₂` and `f*η₂ = λη₁`, with `λ = η₂(f_*ξ₁)`.
pub fn check_lambda_consistency<T: Scalar>(
    f: &SmoothMapSpec,
    source: &ParacontactStructure,
    target: &ParacontactStructure,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(name(f, "lambda"), tol);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        let m = MapPoint::new(f, &source.metric, &target.metric, p)?;
        let s1 = source.at(p)?;
        let s2 = target.at(&m.image)?;
        let (lambda, r) = lambda_parts(&m, &s1, &s2);
        let at = p.to_f64();
        t.record("push_xi", r, &at);
        let n = m.source_dim();
        let pulled: Vec<T> = (0..n).map(|i| s2.eta_of(&m.push(&unit(n, i)))).collect();
        let scaled: Vec<T> = s1.eta.iter().map(|&e| lambda * e).collect();
        t.record("pullback_eta", identity_residual(&pulled, &scaled, &[]), &at);
        lo = lo.min(lambda.to_f64_lossy());
        hi = hi.max(lambda.to_f64_lossy());
    }
    if !points.is_empty() {
        t.note(format!("λ ranges over [{lo:.12}, {hi:.12}]"));
    }
    Ok(t.finish())
}

/// `g₂(ξ₂, f_*X) = 0` for `X` in `ker η₁`.
pub fn check_xi_orthogonal_image<T: Scalar>(
    f: &SmoothMapSpec,
    source: &ParacontactStructure,
    target: &ParacontactStructure,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(name(f, "xi-orthogonal-image"), tol);
    for p in points {
        let m = MapPoint::new(f, &source.metric, &target.metric, p)?;
        let s1 = source.at(p)?;
        let s2 = target.at(&m.image)?;
        let mut w = 0.0_f64;
        for x in s1.kernel_basis() {
            let fx = m.push(&x);
            w = w.max(scaled_residual(&[m.g2.inner(&s2.xi, &fx)], &[]));
        }
        t.record("xi_orthogonal", w, &p.to_f64());
    }
    Ok(t.finish())
}

/// For `X, Y` in `ker η₁`:
/// `α_f(X,φ₁Y) − α_f(φ₁X,Y) = η₂(f_*Y)f_*X − η₂(f_*X)f_*Y` and
/// `α_f(X,Y) − α_f(φ₁X,φ₁Y) = −η₂(f_*X)φ₂(f_*Y)`. The size of the
/// obstruction `η₂(f_*X)` goes into the notes.
pub fn verify_pluriharmonic_obstruction<T: Scalar>(
    f: &SmoothMapSpec,
    source: &ParacontactStructure,
    target: &ParacontactStructure,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(name(f, "pluriharmonic-obstruction"), tol);
    let mut obstruction = 0.0_f64;
    for p in points {
        let m = MapPoint::new(f, &source.metric, &target.metric, p)?;
        let s1 = source.at(p)?;
        let s2 = target.at(&m.image)?;
        let basis = s1.kernel_basis();
        let mut w5 = 0.0_f64;
        let mut w6 = 0.0_f64;
        for x in &basis {
            let px = s1.phi.apply(x);
            let fx = m.push(x);
            let ex = s2.eta_of(&fx);
            obstruction = obstruction.max(ex.abs().to_f64_lossy());
            for y in &basis {
                let py = s1.phi.apply(y);
                let fy = m.push(y);
                let ey = s2.eta_of(&fy);
                let a = m.alpha(x, &py);
                let b = m.alpha(&px, y);
                let lhs5: Vec<T> = a.iter().zip(&b).map(|(&a, &b)| a - b).collect();
                let rhs5: Vec<T> = fx.iter().zip(&fy).map(|(&u, &v)| ey * u - ex * v).collect();
                w5 = w5.max(identity_residual(&lhs5, &rhs5, &[&a, &b]));
                let c = m.alpha(x, y);
                let d = m.alpha(&px, &py);
                let lhs6: Vec<T> = c.iter().zip(&d).map(|(&c, &d)| c - d).collect();
                let rhs6: Vec<T> = s2.phi.apply(&fy).into_iter().map(|v| -ex * v).collect();
                w6 = w6.max(identity_residual(&lhs6, &rhs6, &[&c, &d]));
            }
        }
        let at = p.to_f64();
        t.record("alpha_phi_antisymmetry", w5, &at);
        t.record("alpha_phi_defect", w6, &at);
    }
    t.note(format!("max |η₂(f_*X)| over ker η₁ basis = {obstruction:.6e}"));
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Pt;
    use crate::fixtures;

    fn pts(c: &Arc<Chart>, n: usize) -> Vec<Point<f64>> {
        c.sample(n, 42)
    }

    #[test]
    fn swap_map_basics() {
        let (m1, m2, f) = fixtures::swap_example(true).unwrap();
        let p = Pt::from_f64(m1.chart(), &[1.0, 2.0, 0.0]).unwrap();
        let e1 = pushforward(&f, &p, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(e1.components, vec![0.0, 1.0, 0.0]);
        let xi = pushforward(&f, &p, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(xi.components, vec![0.0, 0.0, 1.0]);
        let pb = pullback_metric(&f, &m2.metric, &p).unwrap();
        let g1 = m1.metric.at(&p).unwrap().g;
        assert!(pb.matrix.sub(&g1).max_abs() < 1e-12);
        let e = energy_density(&f, &m1.metric, &m2.metric, &p).unwrap();
        assert!((e - 1.5).abs() < 1e-12);
        let q = Pt::from_f64(m1.chart(), &[1.0, 2.0, 1.5]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let a = second_fundamental_form(&f, &m1.metric, &m2.metric, &q, &unit(3, i), &unit(3, j)).unwrap();
                assert!(a.components.iter().all(|v| v.abs() < 1e-12), "{i}{j}: {:?}", a.components);
            }
        }
    }

    #[test]
    fn identity_and_constant_maps() {
        let m1 = fixtures::m1().unwrap();
        let c = m1.chart();
        let id = SmoothMapSpec::parse("id", c, c, &["x", "y", "z"]).unwrap();
        let p = Pt::from_f64(c, &[1.3, -0.4, 0.2]).unwrap();
        let x = [0.3, 1.0, -2.0];
        assert_eq!(pushforward(&id, &p, &x).unwrap().components, x.to_vec());
        assert!((energy_density(&id, &m1.metric, &m1.metric, &p).unwrap() - 1.5).abs() < 1e-12);
        let tau = tension_field(&id, &m1.metric, &m1.metric, &p).unwrap();
        assert!(tau.components.iter().all(|v| v.abs() < 1e-12));
        let k = SmoothMapSpec::parse("const", c, c, &["1", "0", "0"]).unwrap();
        assert_eq!(energy_density(&k, &m1.metric, &m1.metric, &p).unwrap(), 0.0);
        assert_eq!(lambda_of_map(&k, &m1, &m1, &p).unwrap(), 0.0);
        assert!(check_lambda_consistency(&k, &m1, &m1, &[p], 1e-12).unwrap().passed);
    }

    #[test]
    fn square_map_tension() {
        let c = Chart::new("E3", &["x", "y", "z"], &[(-1.0, 1.0); 3]).unwrap();
        let line = Chart::new("E1", &["t"], &[(-5.0, 5.0)]).unwrap();
        let g = MetricField::parse(&c, &["1", "0", "0", "0", "1", "0", "0", "0", "1"], (3, 0)).unwrap();
        let h = MetricField::parse(&line, &["1"], (1, 0)).unwrap();
        let f = SmoothMapSpec::parse("sq", &c, &line, &["x^2"]).unwrap();
        for p in pts(&c, 5) {
            let tau = tension_field(&f, &g, &h, &p).unwrap();
            assert!((tau.components[0] - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn paraholomorphy_of_the_swap_map() {
        let (m1, m2, f) = fixtures::swap_example(true).unwrap();
        let p = pts(m1.chart(), 16);
        let kind = MapKind::paraholomorphic(StructurePair::ContactToContact);
        let r = check_paraholomorphic(&f, kind, StructureRef::Contact(&m1), StructureRef::Contact(&m2), &p, 1e-10).unwrap();
        assert!(r.passed, "{r:?}");
        let anti = MapKind::anti(StructurePair::ContactToContact);
        let r = check_paraholomorphic(&f, anti, StructureRef::Contact(&m1), StructureRef::Contact(&m2), &p, 1e-10).unwrap();
        assert!(!r.passed);
        for q in &p {
            assert!((lambda_of_map(&f, &m1, &m2, q).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_from_para_sasakian_formula() {
        let (m1, m2, f) = fixtures::swap_example(true).unwrap();
        let p = Pt::from_f64(m1.chart(), &[1.0, 2.0, 0.0]).unwrap();
        let e1 = [1.0, 0.0, 0.0];
        let b = beta_along_map(&f, &m1.metric, StructureRef::Contact(&m2), &p, &e1, &e1).unwrap();
        for (a, e) in b.components.iter().zip([0.0, 0.0, 1.0]) {
            assert!((a - e).abs() < 1e-12, "{:?}", b.components);
        }
        let e3 = [0.0, 0.0, 0.0];
        let z = beta_along_map(&f, &m1.metric, StructureRef::Contact(&m2), &p, &e3, &e1).unwrap();
        assert!(z.components.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn swap_map_identities() {
        let (m1, m2, f) = fixtures::swap_example(true).unwrap();
        let p = pts(m1.chart(), 24);
        let kind = MapKind::paraholomorphic(StructurePair::ContactToContact);
        let (s, t) = (StructureRef::Contact(&m1), StructureRef::Contact(&m2));
        for r in [
            verify_tension_transfer(&f, kind, s, t, &p, 1e-8).unwrap(),
            verify_pointwise_transfer(&f, kind, s, t, &p, &[], 1e-8).unwrap(),
            check_parapluriharmonic(&f, &m1, &m2.metric, &p, 1e-8).unwrap(),
            verify_pluriharmonic_obstruction(&f, &m1, &m2, &p, 1e-8).unwrap(),
            check_xi_orthogonal_image(&f, &m1, &m2, &p, 1e-9).unwrap(),
            is_harmonic(&f, &m1.metric, &m2.metric, &p, 1e-8).unwrap(),
            check_tension_trace_frame(&f, s, &m2.metric, &p, 1e-8).unwrap(),
            check_alpha_symmetry(&f, &m1.metric, &m2.metric, &p, 1e-9).unwrap(),
            check_energy_density(&f, &m1.metric, &m2.metric, &p, 1e-9).unwrap(),
        ] {
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn stretched_swap_lambda() {
        let (m1, m2, _) = fixtures::swap_example(true).unwrap();
        let f = SmoothMapSpec::parse("stretch", m1.chart(), m2.chart(), &["y", "x", "z/2"]).unwrap();
        let p = Pt::from_f64(m1.chart(), &[1.0, 0.5, 1.0]).unwrap();
        assert!((lambda_of_map(&f, &m1, &m2, &p).unwrap() - 0.5).abs() < 1e-12);
        let r = check_lambda_consistency(&f, &m1, &m2, &[p], 1e-9).unwrap();
        assert!(r.sub("push_xi").unwrap() < 1e-12);
        assert!(r.sub("pullback_eta").unwrap() > 0.1);
    }

    #[test]
    fn not_parallel_is_an_error() {
        let (m1, m2, _) = fixtures::swap_example(true).unwrap();
        let f = SmoothMapSpec::parse("tilt", m1.chart(), m2.chart(), &["y+z/4", "x", "z"]).unwrap();
        let p = Pt::from_f64(m1.chart(), &[1.0, 0.5, 1.0]).unwrap();
        assert!(matches!(lambda_of_map(&f, &m1, &m2, &p), Err(Error::NotParallel { .. })));
    }

    #[test]
    fn projection_fixture() {
        let (s, n, f) = fixtures::projection().unwrap();
        let p = pts(s.chart(), 16);
        let kind = MapKind::paraholomorphic(StructurePair::ContactToHermitian);
        let (a, b) = (StructureRef::Contact(&s), StructureRef::Hermitian(&n));
        let r = check_paraholomorphic(&f, kind, a, b, &p, 1e-12).unwrap();
        assert!(r.passed && r.sub("push_xi_vanishes") == Some(0.0));
        assert!(verify_tension_transfer(&f, kind, a, b, &p, 1e-9).unwrap().passed);
        assert!(check_parapluriharmonic(&f, &s, &n.metric, &p, 1e-12).unwrap().passed);
        assert!(verify_normality_transfer(&f, &s, &n, &p, None, 1e-9).unwrap().passed);
        let wrong = verify_normality_transfer(&f, &s, &n, &p, Some((1.0, 0.0)), 1e-9).unwrap();
        assert!(wrong.sub("pushed_nabla_phi").unwrap() > 0.1);
    }

    #[test]
    fn squaring_breaks_pluriharmonicity() {
        let s = fixtures::flat_paracosymplectic().unwrap();
        let f = SmoothMapSpec::parse("square-x", s.chart(), s.chart(), &["x^2", "y", "z"]).unwrap();
        let p = Pt::from_f64(s.chart(), &[0.5, 0.2, -0.1]).unwrap();
        let a = second_fundamental_form(&f, &s.metric, &s.metric, &p, &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(a.components, vec![2.0, 0.0, 0.0]);
        assert!(!check_parapluriharmonic(&f, &s, &s.metric, &[p], 1e-8).unwrap().passed);
    }

    #[test]
    fn frame_identity_on_flat_and_perturbed() {
        let flat = fixtures::flat_para_kahler(1.0).unwrap();
        let r = verify_frame_identity(&flat, &pts(flat.chart(), 4), 1e-12).unwrap();
        assert_eq!(r.max_residual, 0.0);
        let scaled = fixtures::flat_para_kahler(4.0).unwrap();
        assert!(verify_frame_identity(&scaled, &pts(scaled.chart(), 4), 1e-9).unwrap().passed);
        let pert = fixtures::perturbed_para_hermitian(&[0.3, -0.2, 0.15, 0.1, -0.25, 0.05]).unwrap();
        let r = verify_frame_identity(&pert, &pts(pert.chart(), 16), 1e-7).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn inclusion_and_null_curve_are_vertical() {
        let (n, s, f) = fixtures::inclusion().unwrap();
        assert!(verify_tension_vertical(&f, &n, &s, &pts(n.chart(), 8), 1e-9).unwrap().passed);
        let (n, m1, f) = fixtures::null_curve_into_m1().unwrap();
        let p = pts(n.chart(), 16);
        let kind = MapKind::paraholomorphic(StructurePair::HermitianToContact);
        let (a, b) = (StructureRef::Hermitian(&n), StructureRef::Contact(&m1));
        assert!(check_paraholomorphic(&f, kind, a, b, &p, 1e-10).unwrap().passed);
        assert!(verify_tension_vertical(&f, &n, &m1, &p, 1e-9).unwrap().passed);
        assert!(verify_tension_transfer(&f, kind, a, b, &p, 1e-8).unwrap().passed);
        let k = SmoothMapSpec::parse("const", n.chart(), m1.chart(), &["1", "0", "0"]).unwrap();
        let r = verify_tension_vertical(&k, &n, &m1, &p, 1e-12).unwrap();
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn harmonic_map_to_para_kahler_plane() {
        let (m1, n, f) = fixtures::m1_to_plane().unwrap();
        let p = pts(m1.chart(), 24);
        let kind = MapKind::paraholomorphic(StructurePair::ContactToHermitian);
        let (a, b) = (StructureRef::Contact(&m1), StructureRef::Hermitian(&n));
        assert!(check_paraholomorphic(&f, kind, a, b, &p, 1e-10).unwrap().passed);
        assert!(is_harmonic(&f, &m1.metric, &n.metric, &p, 1e-8).unwrap().passed);
        assert!(verify_tension_transfer(&f, kind, a, b, &p, 1e-8).unwrap().passed);
        assert!(verify_normality_transfer(&f, &m1, &n, &p, None, 1e-8).unwrap().passed);
    }

    #[test]
    fn shifted_swap_is_not_paraholomorphic() {
        let (m1, m2, f) = fixtures::shifted_swap().unwrap();
        let p = pts(f.source(), 16);
        let kind = MapKind::paraholomorphic(StructurePair::ContactToContact);
        let r = check_paraholomorphic(&f, kind, StructureRef::Contact(&m1), StructureRef::Contact(&m2), &p, 1e-8).unwrap();
        assert!(!r.passed);
        let r = verify_pluriharmonic_obstruction(&f, &m1, &m2, &p, 1e-7).unwrap();
        assert!(!r.passed);
    }
}
