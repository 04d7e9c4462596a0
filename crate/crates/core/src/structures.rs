//! Almost paracontact metric and almost para-Hermitian structures, with
//! checks for their axioms, normality and the `(p, q)` classification.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::{d_of_covector, BilinearValue, Chart, CovectorValue, Point, TensorField, VectorValue};
use crate::error::{Error, Result};
use crate::expr::Jet2;
use crate::linalg::{axpy, dot, unit, Mat};
use crate::metric::{orthonormal_frame, phi_basis, MetricField, MetricPoint};
use crate::report::{identity_residual, scaled_residual, CheckReport, ResidualTracker};
use crate::scalar::Scalar;

/// Relative singular-value cutoff for ranks of structure tensors.
pub const RANK_CUTOFF: f64 = 1e-8;

/// `(φ, ξ, η, g)` on an odd-dimensional chart.
#[derive(Debug, Clone)]
pub struct ParacontactStructure {
    pub name: String,
    pub phi: TensorField,
    pub xi: TensorField,
    pub eta: TensorField,
    pub metric: MetricField,
}

/// `(J, h)` on an even-dimensional chart.
#[derive(Debug, Clone)]
pub struct ParaHermitianStructure {
    pub name: String,
    pub j: TensorField,
    pub metric: MetricField,
}

fn same_chart(fields: &[&TensorField], metric: &MetricField) -> Result<()> {
    for f in fields {
        if f.chart() != metric.chart() {
            return Err(Error::Dimension(format!(
                "structure tensor on chart `{}` but metric on chart `{}`",
                f.chart().name,
                metric.chart().name
            )));
        }
    }
    Ok(())
}

impl ParacontactStructure {
    pub fn new(
        name: impl Into<String>,
        phi: TensorField,
        xi: TensorField,
        eta: TensorField,
        metric: MetricField,
    ) -> Result<Self> {
        phi.expect_rank(1, 1)?;
        xi.expect_rank(1, 0)?;
        eta.expect_rank(0, 1)?;
        same_chart(&[&phi, &xi, &eta], &metric)?;
        if metric.dim().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "paracontact structure needs odd dimension, chart has {}",
                metric.dim()
            )));
        }
        Ok(Self {
            name: name.into(),
            phi,
            xi,
            eta,
            metric,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.metric.chart()
    }

    /// `n` in `dim = 2n + 1`.
    pub fn half_dim(&self) -> usize {
        (self.chart().dim() - 1) / 2
    }

    pub fn at<T: Scalar>(&self, p: &Point<T>) -> Result<ParacontactPoint<T>> {
        let n = p.dim();
        let phi_jets = self.phi.jets(p)?;
        let xi_jets = self.xi.jets(p)?;
        let eta_jets = self.eta.jets(p)?;
        Ok(ParacontactPoint {
            phi: Mat::from_fn(n, |i, j| phi_jets[i * n + j].value),
            xi: xi_jets.iter().map(|j| j.value).collect(),
            eta: eta_jets.iter().map(|j| j.value).collect(),
            phi_jets,
            xi_jets,
            eta_jets,
            metric: self.metric.at(p)?,
        })
    }
}

/// A paracontact structure evaluated at one point, with first derivatives.
#[derive(Debug, Clone)]
pub struct ParacontactPoint<T> {
    pub phi: Mat<T>,
    pub xi: Vec<T>,
    pub eta: Vec<T>,
    pub phi_jets: Vec<Jet2<T>>,
    pub xi_jets: Vec<Jet2<T>>,
    pub eta_jets: Vec<Jet2<T>>,
    pub metric: MetricPoint<T>,
}

impl<T: Scalar> ParacontactPoint<T> {
    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn eta_of(&self, v: &[T]) -> T {
        dot(&self.eta, v)
    }

    /// `∇_{∂_i} ξ`.
    pub fn nabla_xi(&self, i: usize) -> Vec<T> {
        self.metric.nabla_vector(&self.xi_jets, i)
    }

    /// `(∇_{∂_i} φ)`.
    pub fn nabla_phi(&self, i: usize) -> Mat<T> {
        self.metric.nabla_endo(&self.phi_jets, i)
    }

    /// The endomorphism `X ↦ ∇_X ξ` (column `i` is `∇_{∂_i} ξ`).
    pub fn nabla_xi_endo(&self) -> Mat<T> {
        let n = self.dim();
        let cols: Vec<Vec<T>> = (0..n).map(|i| self.nabla_xi(i)).collect();
        Mat::from_fn(n, |k, i| cols[i][k])
    }

    /// Coordinate fields projected onto `ker η`: `∂_a − η(∂_a) ξ`.
    pub fn kernel_basis(&self) -> Vec<Vec<T>> {
        (0..self.dim())
            .map(|a| {
                let e = unit(self.dim(), a);
                axpy(-self.eta_of(&e), &self.xi, &e)
            })
            .collect()
    }

    /// `N_φ(∂_a, ∂_b)` with `N_φ = [φ,φ] − 2dη⊗ξ`.
    pub fn nijenhuis(&self, a: usize, b: usize) -> Vec<T> {
        let n = self.dim();
        let phi = |k: usize, j: usize| self.phi_jets[k * n + j].value;
        let dphi = |k: usize, j: usize, i: usize| self.phi_jets[k * n + j].gradient[i];
        let d_eta = d_of_covector(&self.eta_jets);
        let two = T::lit(2.0);
        (0..n)
            .map(|k| {
                let mut acc = T::zero();
                for i in 0..n {
                    acc = acc + phi(i, a) * dphi(k, b, i) - phi(i, b) * dphi(k, a, i);
                    acc = acc + phi(k, i) * dphi(i, a, b) - phi(k, i) * dphi(i, b, a);
                }
                acc - two * d_eta[(a, b)] * self.xi[k]
            })
            .collect()
    }

    /// `(p, q)` with `2p = tr(X ↦ ∇_X ξ)` and `2q = tr(X ↦ φ∇_X ξ)`.
    pub fn structure_functions(&self) -> (T, T) {
        let a = self.nabla_xi_endo();
        let half = T::lit(0.5);
        (half * a.trace(), half * self.phi.matmul(&a).trace())
    }
}

impl ParaHermitianStructure {
    pub fn new(name: impl Into<String>, j: TensorField, metric: MetricField) -> Result<Self> {
        j.expect_rank(1, 1)?;
        same_chart(&[&j], &metric)?;
        if metric.dim() % 2 == 1 {
            return Err(Error::Dimension(format!(
                "para-Hermitian structure needs even dimension, chart has {}",
                metric.dim()
            )));
        }
        Ok(Self {
            name: name.into(),
            j,
            metric,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.metric.chart()
    }

    pub fn half_dim(&self) -> usize {
        self.chart().dim() / 2
    }

    pub fn at<T: Scalar>(&self, p: &Point<T>) -> Result<ParaHermitianPoint<T>> {
        let n = p.dim();
        let j_jets = self.j.jets(p)?;
        Ok(ParaHermitianPoint {
            j: Mat::from_fn(n, |a, b| j_jets[a * n + b].value),
            j_jets,
            metric: self.metric.at(p)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ParaHermitianPoint<T> {
    pub j: Mat<T>,
    pub j_jets: Vec<Jet2<T>>,
    pub metric: MetricPoint<T>,
}

impl<T: Scalar> ParaHermitianPoint<T> {
    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    pub fn nabla_j(&self, i: usize) -> Mat<T> {
        self.metric.nabla_endo(&self.j_jets, i)
    }
}

/// Structure tensor of either kind, as seen by the map layer.
#[derive(Debug, Clone, Copy)]
pub enum StructureRef<'a> {
    Contact(&'a ParacontactStructure),
    Hermitian(&'a ParaHermitianStructure),
}

impl<'a> StructureRef<'a> {
    /// `φ` or `J`.
    pub fn tensor(&self) -> &'a TensorField {
        match self {
            StructureRef::Contact(s) => &s.phi,
            StructureRef::Hermitian(s) => &s.j,
        }
    }

    pub fn metric(&self) -> &'a MetricField {
        match self {
            StructureRef::Contact(s) => &s.metric,
            StructureRef::Hermitian(s) => &s.metric,
        }
    }

    pub fn name(&self) -> &'a str {
        match self {
            StructureRef::Contact(s) => &s.name,
            StructureRef::Hermitian(s) => &s.name,
        }
    }

    pub fn chart(&self) -> &'a Arc<Chart> {
        self.metric().chart()
    }
}

fn matrix_residual<T: Scalar>(lhs: &Mat<T>, rhs: &Mat<T>, extra: &[&Mat<T>]) -> f64 {
    let extra: Vec<&[T]> = extra.iter().map(|m| m.as_slice()).collect();
    identity_residual(lhs.as_slice(), rhs.as_slice(), &extra)
}

fn outer<T: Scalar>(col: &[T], row: &[T]) -> Mat<T> {
    Mat::from_fn(col.len(), |i, j| col[i] * row[j])
}

fn check_name(s: &str, check: &str) -> String {
    format!("{s}/{check}")
}

/// `φ² = Id − η⊗ξ`, `η(ξ) = 1`, `φξ = 0`, `η∘φ = 0`, `rank φ = 2n` and equal
/// `±1` eigenspace dimensions.
pub fn check_almost_paracontact<T: Scalar>(
    s: &ParacontactStructure,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(check_name(&s.name, "almost-paracontact"), tol);
    let half = s.half_dim();
    for p in points {
        let l = s.at(p)?;
        let n = l.dim();
        let at = p.to_f64();
        let id = Mat::identity(n);
        let exi = outer(&l.xi, &l.eta);
        let phi2 = l.phi.matmul(&l.phi);
        t.record("phi_squared", matrix_residual(&phi2, &id.sub(&exi), &[&exi]), &at);
        let ex = l.eta_of(&l.xi);
        t.record("eta_of_xi", identity_residual(&[ex], &[T::one()], &[]), &at);
        let phi_xi = l.phi.apply(&l.xi);
        t.record(
            "phi_xi",
            scaled_residual(&phi_xi, &[l.phi.as_slice(), &l.xi]),
            &at,
        );
        let eta_phi = l.phi.transpose().apply(&l.eta);
        t.record(
            "eta_phi",
            scaled_residual(&eta_phi, &[l.phi.as_slice(), &l.eta]),
            &at,
        );
        let cut = T::lit(RANK_CUTOFF);
        let rank = l.phi.rank(cut);
        t.record("phi_rank", rank.abs_diff(2 * half) as f64, &at);
        let plus = n - l.phi.sub(&id).rank(cut);
        let minus = n - l.phi.add(&id).rank(cut);
        t.record(
            "eigenspace_dims",
            (plus.abs_diff(half) + minus.abs_diff(half)) as f64,
            &at,
        );
    }
    Ok(t.finish())
}

/// `g(φX,φY) = −g(X,Y) + η(X)η(Y)`, `g(X,ξ) = η(X)`, `g(φX,Y) = −g(X,φY)`
/// and signature `(n+1, n)`.
pub fn check_compatible_metric<T: Scalar>(
    s: &ParacontactStructure,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(check_name(&s.name, "compatible-metric"), tol);
    let half = s.half_dim();
    for p in points {
        let l = s.at(p)?;
        let at = p.to_f64();
        let g = &l.metric.g;
        let pgp = l.phi.transpose().matmul(g).matmul(&l.phi);
        let ee = outer(&l.eta, &l.eta);
        t.record("phi_anti_isometry", matrix_residual(&pgp, &ee.sub(g), &[g, &ee]), &at);
        let gxi = l.metric.flat(&l.xi);
        t.record("eta_dual_xi", identity_residual(&gxi, &l.eta, &[]), &at);
        let pg = l.phi.transpose().matmul(g);
        let gp = g.matmul(&l.phi);
        t.record("phi_skew", matrix_residual(&pg, &gp.scale(-T::one()), &[]), &at);
        let sig = s.metric.signature_at(p)?;
        let mismatch = sig.0.abs_diff(half + 1) + sig.1.abs_diff(half);
        t.record("signature", mismatch as f64, &at);
    }
    Ok(t.finish())
}

/// `dη(X,Y) = g(X, φY)`.
pub fn check_paracontact_metric<T: Scalar>(
    s: &ParacontactStructure,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(check_name(&s.name, "paracontact-metric"), tol);
    for p in points {
        let l = s.at(p)?;
        let d_eta = d_of_covector(&l.eta_jets);
        let gp = l.metric.g.matmul(&l.phi);
        t.record("d_eta", matrix_residual(&d_eta, &gp, &[]), &p.to_f64());
    }
    Ok(t.finish())
}

/// `N_φ(X, Y)` at `p` for constant-coefficient vectors `X`, `Y`.
pub fn nijenhuis_paracontact<T: Scalar>(
    s: &ParacontactStructure,
    p: &Point<T>,
    x: &[T],
    y: &[T],
) -> Result<VectorValue<T>> {
    let l = s.at(p)?;
    let n = l.dim();
    let mut out = vec![T::zero(); n];
    for a in 0..n {
        for b in 0..n {
            let w = x[a] * y[b];
            if w != T::zero() {
                out = axpy(w, &l.nijenhuis(a, b), &out);
            }
        }
    }
    Ok(VectorValue {
        point: p.clone(),
        components: out,
    })
}

/// Normality: `N_φ = 0` on all coordinate pairs.
pub fn check_normal<T: Scalar>(s: &ParacontactStructure, points: &[Point<T>], tol: f64) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(check_name(&s.name, "normal"), tol);
    for p in points {
        let l = s.at(p)?;
        let scale = l.phi_jets.iter().fold(T::zero(), |m, j| {
            j.gradient.iter().fold(m.max(j.value.abs()), |m, g| m.max(g.abs()))
        });
        let n = l.dim();
        let mut worst = 0.0_f64;
        for a in 0..n {
            for b in a + 1..n {
                let nv = l.nijenhuis(a, b);
                worst = worst.max(scaled_residual(&nv, &[&[scale * scale]]));
            }
        }
        t.record("nijenhuis", worst, &p.to_f64());
    }
    Ok(t.finish())
}

pub fn extract_pq<T: Scalar>(s: &ParacontactStructure, p: &Point<T>) -> Result<(T, T)> {
    Ok(s.at(p)?.structure_functions())
}

/// `(∇_Xφ)Y = q(g(X,Y)ξ − η(Y)X) + p(g(φX,Y)ξ − η(Y)φX)` and
/// `∇_Xξ = p(X − η(X)ξ) + qφX`, with `(p, q)` extracted pointwise.
pub fn check_pq_identities<T: Scalar>(s: &ParacontactStructure, points: &[Point<T>], tol: f64) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(check_name(&s.name, "pq-identities"), tol);
    for p in points {
        let l = s.at(p)?;
        let at = p.to_f64();
        let (pf, qf) = l.structure_functions();
        let n = l.dim();
        let g = &l.metric.g;
        let pg = l.phi.transpose().matmul(g);
        let mut w12 = 0.0_f64;
        let mut w13 = 0.0_f64;
        for i in 0..n {
            let ei = unit::<T>(n, i);
            let phi_ei = l.phi.apply(&ei);
            let np = l.nabla_phi(i);
            for j in 0..n {
                let lhs: Vec<T> = (0..n).map(|k| np[(k, j)]).collect();
                let eta_j = l.eta[j];
                let rhs: Vec<T> = (0..n)
                    .map(|k| {
                        qf * (g[(i, j)] * l.xi[k] - eta_j * ei[k])
                            + pf * (pg[(i, j)] * l.xi[k] - eta_j * phi_ei[k])
                    })
                    .collect();
                w12 = w12.max(identity_residual(&lhs, &rhs, &[]));
            }
            let lhs = l.nabla_xi(i);
            let eta_i = l.eta[i];
            let rhs: Vec<T> = (0..n)
                .map(|k| pf * (ei[k] - eta_i * l.xi[k]) + qf * phi_ei[k])
                .collect();
            w13 = w13.max(identity_residual(&lhs, &rhs, &[]));
        }
        t.record("nabla_phi_pq", w12, &at);
        t.record("nabla_xi_pq", w13, &at);
    }
    Ok(t.finish())
}

/// `(∇_Xφ)Y = −g(X,Y)ξ + η(Y)X`.
pub fn check_para_sasakian<T: Scalar>(s: &ParacontactStructure, points: &[Point<T>], tol: f64) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(check_name(&s.name, "para-sasakian"), tol);
    for p in points {
        let l = s.at(p)?;
        let n = l.dim();
        let g = &l.metric.g;
        let mut worst = 0.0_f64;
        for i in 0..n {
            let np = l.nabla_phi(i);
            for j in 0..n {
                let lhs: Vec<T> = (0..n).map(|k| np[(k, j)]).collect();
                let rhs: Vec<T> = (0..n)
                    .map(|k| {
                        let delta = if k == i { T::one() } else { T::zero() };
                        -g[(i, j)] * l.xi[k] + l.eta[j] * delta
                    })
                    .collect();
                worst = worst.max(identity_residual(&lhs, &rhs, &[]));
            }
        }
        t.record("nabla_phi", worst, &p.to_f64());
    }
    Ok(t.finish())
}

/// `∇_Xξ = −φX` and `∇_ξξ = 0`.
pub fn check_k_paracontact<T: Scalar>(s: &ParacontactStructure, points: &[Point<T>], tol: f64) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(check_name(&s.name, "k-paracontact"), tol);
    for p in points {
        let l = s.at(p)?;
        let n = l.dim();
        let at = p.to_f64();
        let mut worst = 0.0_f64;
        for i in 0..n {
            let lhs = l.nabla_xi(i);
            let rhs: Vec<T> = (0..n).map(|k| -l.phi[(k, i)]).collect();
            worst = worst.max(identity_residual(&lhs, &rhs, &[]));
        }
        t.record("nabla_xi", worst, &at);
        let nxx = l.metric.nabla_vector_along(&l.xi_jets, &l.xi);
        t.record("nabla_xi_xi", scaled_residual(&nxx, &[&l.xi]), &at);
    }
    Ok(t.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureClass {
    Paracosymplectic,
    ParaSasakian,
    OtherNormal,
    NotNormal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureClassification {
    pub p: f64,
    pub q: f64,
    /// Largest deviation of `p` or `q` from its mean over the samples.
    pub spread: f64,
    pub class: StructureClass,
    pub normal_residual: f64,
}

/// Classifies a normal almost paracontact metric 3-manifold by its
/// structure functions. Independent of the order of `points`.
pub fn classify_normal_3<T: Scalar>(
    s: &ParacontactStructure,
    points: &[Point<T>],
    tol: f64,
) -> Result<StructureClassification> {
    if s.chart().dim() != 3 {
        return Err(Error::Dimension("classification applies to 3-manifolds".into()));
    }
    if points.is_empty() {
        return Err(Error::Dimension("classification needs at least one sample".into()));
    }
    let normal = check_normal(s, points, tol)?;
    let mut ps = Vec::with_capacity(points.len());
    let mut qs = Vec::with_capacity(points.len());
    for p in points {
        let (pv, qv) = extract_pq(s, p)?;
        ps.push(pv.to_f64_lossy());
        qs.push(qv.to_f64_lossy());
    }
    let stats = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let spread = v.iter().fold(0.0_f64, |m, x| m.max((x - mean).abs()));
        (mean, spread)
    };
    let (p, sp) = stats(&mut ps);
    let (q, sq) = stats(&mut qs);
    let spread = sp.max(sq);
    let class = if !normal.passed {
        StructureClass::NotNormal
    } else if spread > tol {
        StructureClass::OtherNormal
    } else if p.abs() <= tol && q.abs() <= tol {
        StructureClass::Paracosymplectic
    } else if p.abs() <= tol && (q + 1.0).abs() <= tol {
        StructureClass::ParaSasakian
    } else {
        StructureClass::OtherNormal
    };
    Ok(StructureClassification {
        p,
        q,
        spread,
        class,
        normal_residual: normal.max_residual,
    })
}

/// Report form of [`classify_normal_3`]: passes when the structure is
/// normal with constant `(p, q)` equal to `(0, 0)` or `(0, −1)`.
pub fn check_classification<T: Scalar>(
    s: &ParacontactStructure,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let c = classify_normal_3(s, points, tol)?;
    let mut t = ResidualTracker::new(check_name(&s.name, "classification"), tol);
    let at = points[0].to_f64();
    t.record("normal", c.normal_residual, &at);
    t.record("pq_spread", c.spread, &at);
    let mismatch = if c.class == StructureClass::OtherNormal { 1.0 } else { 0.0 };
    t.record("class_mismatch", mismatch, &at);
    t.note(format!("class {:?}, p = {:.3e}, q = {:.12}", c.class, c.p, c.q));
    Ok(t.finish())
}

/// Orthonormality of the φ-basis at each point; a point where no φ-basis
/// can be built counts as residual 1.
pub fn check_phi_basis<T: Scalar>(s: &ParacontactStructure, points: &[Point<T>], tol: f64) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(check_name(&s.name, "phi-basis"), tol);
    let mut failures = 0usize;
    for p in points {
        let at = p.to_f64();
        match phi_basis(s, p) {
            Ok(frame) => {
                let g = s.metric.at(p)?.g;
                t.record("orthonormality", frame.orthonormality_residual(&g), &at);
            }
            Err(Error::PivotFailure(msg)) => {
                t.record("orthonormality", 1.0, &at);
                if failures == 0 {
                    t.note(msg);
                }
                failures += 1;
            }
            Err(e) => return Err(e),
        }
    }
    if failures > 1 {
        t.note(format!("no φ-basis at {failures} of {} points", points.len()));
    }
    Ok(t.finish())
}

/// `J² = Id`, equal `±1` eigenspace dimensions, `h(JX,Y) = −h(X,JY)` and
/// signature `(m, m)`.
pub fn check_para_hermitian<T: Scalar>(
    s: &ParaHermitianStructure,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(check_name(&s.name, "para-hermitian"), tol);
    let m = s.half_dim();
    for p in points {
        let l = s.at(p)?;
        let n = l.dim();
        let at = p.to_f64();
        let id = Mat::identity(n);
        t.record("j_squared", matrix_residual(&l.j.matmul(&l.j), &id, &[]), &at);
        let cut = T::lit(RANK_CUTOFF);
        let plus = n - l.j.sub(&id).rank(cut);
        let minus = n - l.j.add(&id).rank(cut);
        t.record("eigenspace_dims", (plus.abs_diff(m) + minus.abs_diff(m)) as f64, &at);
        let g = &l.metric.g;
        let jg = l.j.transpose().matmul(g);
        let gj = g.matmul(&l.j);
        t.record("j_skew", matrix_residual(&jg, &gj.scale(-T::one()), &[]), &at);
        let sig = s.metric.signature_at(p)?;
        t.record("signature", (sig.0.abs_diff(m) + sig.1.abs_diff(m)) as f64, &at);
    }
    Ok(t.finish())
}

/// Jets of `Φ_ij = h(J∂_i, ∂_j) = J^k_i h_kj`.
fn fundamental_jets<T: Scalar>(j: &[Jet2<T>], h: &[Jet2<T>], n: usize) -> Vec<Jet2<T>> {
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = Jet2::constant(j[0].dim(), T::zero());
            for k in 0..n {
                acc = acc.add(&j[k * n + a].mul(&h[k * n + b]));
            }
            out.push(acc);
        }
    }
    out
}

/// `Φ(X,Y) = h(JX,Y)`.
pub fn fundamental_form<T: Scalar>(s: &ParaHermitianStructure, p: &Point<T>) -> Result<BilinearValue<T>> {
    let l = s.at(p)?;
    Ok(BilinearValue {
        point: p.clone(),
        matrix: l.j.transpose().matmul(&l.metric.g),
    })
}

/// `δΦ(X) = Σ_a ε_a (∇_{E_a}Φ)(E_a, X)` over an orthonormal frame.
pub fn codifferential_form<T: Scalar>(s: &ParaHermitianStructure, p: &Point<T>) -> Result<CovectorValue<T>> {
    let l = s.at(p)?;
    let n = l.dim();
    let h_jets = s.metric.jets(p)?;
    let phi_jets = fundamental_jets(&l.j_jets, &h_jets, n);
    let frame = orthonormal_frame(&s.metric, p)?;
    let nabla: Vec<Mat<T>> = (0..n).map(|i| l.metric.nabla_bilinear(&phi_jets, i)).collect();
    let mut out = vec![T::zero(); n];
    for (e, &sign) in frame.vectors.iter().zip(&frame.signs) {
        let eps = T::from_i8(sign).unwrap();
        for (i, ni) in nabla.iter().enumerate() {
            if e[i] == T::zero() {
                continue;
            }
            for (x, o) in out.iter_mut().enumerate() {
                let val = (0..n).fold(T::zero(), |acc, a| acc + e[a] * ni[(a, x)]);
                *o = *o + eps * e[i] * val;
            }
        }
    }
    Ok(CovectorValue {
        point: p.clone(),
        components: out,
    })
}

/// `∇J = 0`; also reports `δΦ`.
pub fn check_para_kahler<T: Scalar>(
    s: &ParaHermitianStructure,
    points: &[Point<T>],
    tol: f64,
) -> Result<CheckReport> {
    let mut t = ResidualTracker::new(check_name(&s.name, "para-kahler"), tol);
    for p in points {
        let l = s.at(p)?;
        let at = p.to_f64();
        let scale = l.j.max_abs();
        let mut worst = 0.0_f64;
        for i in 0..l.dim() {
            worst = worst.max(scaled_residual(l.nabla_j(i).as_slice(), &[&[scale]]));
        }
        t.record("nabla_j", worst, &at);
        let d = codifferential_form(s, p)?;
        t.record("codifferential", scaled_residual(&d.components, &[]), &at);
    }
    Ok(t.finish())
}

/// One frame pair `(e, J e)` as component jets.
pub type FramePair<T> = (Vec<Jet2<T>>, Vec<Jet2<T>>);

/// A J-adapted orthonormal frame field near `p`: pairs `(e_i, J e_i)` as
/// component jets, with `h(e_i,e_i) = 1` and `h(Je_i,Je_i) = −1`. Pivots
/// are chosen at `p` and held fixed, so the jets are the derivatives of a
/// smooth local frame.
pub fn j_adapted_frame<T: Scalar>(
    s: &ParaHermitianStructure,
    p: &Point<T>,
) -> Result<Vec<FramePair<T>>> {
    let n = p.dim();
    let h = s.metric.jets(p)?;
    let j = s.j.jets(p)?;
    let zero = Jet2::constant(n, T::zero());
    let one = Jet2::constant(n, T::one());
    let inner = |u: &[Jet2<T>], v: &[Jet2<T>]| {
        let mut acc = zero.clone();
        for a in 0..n {
            for b in 0..n {
                acc = acc.add(&u[a].mul(&h[a * n + b]).mul(&v[b]));
            }
        }
        acc
    };
    let apply_j = |v: &[Jet2<T>]| -> Vec<Jet2<T>> {
        (0..n)
            .map(|k| (0..n).fold(zero.clone(), |acc, l| acc.add(&j[k * n + l].mul(&v[l]))))
            .collect()
    };
    let mut candidates: Vec<Vec<Jet2<T>>> = (0..n)
        .map(|a| (0..n).map(|k| if k == a { one.clone() } else { zero.clone() }).collect())
        .collect();
    for a in 0..n {
        for b in a + 1..n {
            let sum: Vec<Jet2<T>> = candidates[a].iter().zip(&candidates[b]).map(|(x, y)| x.add(y)).collect();
            candidates.push(sum);
        }
    }
    let mut pairs: Vec<FramePair<T>> = Vec::new();
    for _ in 0..n / 2 {
        let mut best: Option<(Vec<Jet2<T>>, Jet2<T>)> = None;
        for c in &candidates {
            let mut v = c.clone();
            for (e, je) in &pairs {
                let ce = inner(c, e);
                let cje = inner(c, je);
                v = v
                    .iter()
                    .zip(e.iter().zip(je))
                    .map(|(vk, (ek, jek))| vk.sub(&ce.mul(ek)).add(&cje.mul(jek)))
                    .collect();
            }
            let mut q = inner(&v, &v);
            if q.value < T::zero() {
                v = apply_j(&v);
                q = inner(&v, &v);
            }
            if best.as_ref().is_none_or(|(_, bq)| q.value > bq.value) {
                best = Some((v, q));
            }
        }
        let (v, q) = best.ok_or_else(|| Error::PivotFailure("no candidates".into()))?;
        if q.value <= T::lit(1e-10) {
            return Err(Error::PivotFailure(format!(
                "no spacelike candidate for a J-adapted frame at {:?}",
                p.to_f64()
            )));
        }
        let inv_norm = q.sqrt().recip();
        let e: Vec<Jet2<T>> = v.iter().map(|c| c.mul(&inv_norm)).collect();
        let je = apply_j(&e);
        pairs.push((e, je));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Pt;
    use crate::fixtures;

    fn pts(c: &Arc<Chart>, n: usize) -> Vec<Point<f64>> {
        c.sample(n, 11)
    }

    #[test]
    fn m1_axioms() {
        let s = fixtures::m1().unwrap();
        let p = pts(s.chart(), 32);
        for r in [
            check_almost_paracontact(&s, &p, 1e-10).unwrap(),
            check_compatible_metric(&s, &p, 1e-10).unwrap(),
            check_paracontact_metric(&s, &p, 1e-10).unwrap(),
            check_normal(&s, &p, 1e-10).unwrap(),
            check_pq_identities(&s, &p, 1e-10).unwrap(),
            check_para_sasakian(&s, &p, 1e-10).unwrap(),
            check_k_paracontact(&s, &p, 1e-10).unwrap(),
        ] {
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn broken_eta_xi_fails() {
        let c = fixtures::flat_chart3();
        let s = fixtures::flat_paracosymplectic_with(&c, &["0", "0", "0"]).unwrap();
        let r = check_almost_paracontact(&s, &pts(&c, 4), 1e-8).unwrap();
        assert!(!r.passed);
        assert!(r.sub("eta_of_xi").unwrap() > 0.1);
    }

    #[test]
    fn flat_paracosymplectic() {
        let s = fixtures::flat_paracosymplectic().unwrap();
        let p = pts(s.chart(), 8);
        assert!(check_almost_paracontact(&s, &p, 1e-12).unwrap().passed);
        assert!(check_compatible_metric(&s, &p, 1e-12).unwrap().passed);
        assert!(!check_paracontact_metric(&s, &p, 1e-8).unwrap().passed);
        assert!(check_pq_identities(&s, &p, 1e-12).unwrap().passed);
        assert!(!check_para_sasakian(&s, &p, 1e-8).unwrap().passed);
        assert_eq!(extract_pq(&s, &p[0]).unwrap(), (0.0, 0.0));
        let c = classify_normal_3(&s, &p, 1e-8).unwrap();
        assert_eq!(c.class, StructureClass::Paracosymplectic);
    }

    #[test]
    fn euclidean_metric_fails_compatibility() {
        let c = fixtures::flat_chart3();
        let g = MetricField::parse(&c, &["1", "0", "0", "0", "1", "0", "0", "0", "1"], (3, 0)).unwrap();
        let base = fixtures::flat_paracosymplectic().unwrap();
        let s = ParacontactStructure::new("E", base.phi, base.xi, base.eta, g).unwrap();
        let r = check_compatible_metric(&s, &pts(&c, 4), 1e-8).unwrap();
        assert!(r.sub("phi_anti_isometry").unwrap() > 0.1);
        assert!(r.sub("signature").unwrap() >= 1.0);
    }

    #[test]
    fn structure_functions() {
        let m1 = fixtures::m1().unwrap();
        let p = Pt::from_f64(m1.chart(), &[1.0, 1.0, 1.0]).unwrap();
        let (pv, qv) = extract_pq::<f64>(&m1, &p).unwrap();
        assert!(pv.abs() < 1e-12 && (qv + 1.0).abs() < 1e-12);
        let m2 = fixtures::m2(true).unwrap();
        let p = Pt::from_f64(m2.chart(), &[1.0, 1.0, 1.0]).unwrap();
        let (pv, qv) = extract_pq::<f64>(&m2, &p).unwrap();
        assert!(pv.abs() < 1e-12 && (qv + 1.0).abs() < 1e-12);
    }

    #[test]
    fn nijenhuis_is_antisymmetric() {
        let s = fixtures::perturbed_eta_m1().unwrap();
        let p = Pt::from_f64(s.chart(), &[1.2, 0.7, -0.3]).unwrap();
        let x = [0.3, -1.1, 0.4];
        let y = [1.5, 0.2, -0.7];
        let a = nijenhuis_paracontact::<f64>(&s, &p, &x, &y).unwrap().components;
        let b = nijenhuis_paracontact::<f64>(&s, &p, &y, &x).unwrap().components;
        for (u, v) in a.iter().zip(&b) {
            assert!((u + v).abs() < 1e-13);
        }
        let xx = nijenhuis_paracontact::<f64>(&s, &p, &x, &x).unwrap().components;
        assert!(xx.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn perturbed_eta_is_not_normal() {
        let s = fixtures::perturbed_eta_m1().unwrap();
        let p = pts(s.chart(), 32);
        let r = check_pq_identities(&s, &p, 1e-7).unwrap();
        assert!(!r.passed);
        assert!(r.sub("nabla_phi_pq").unwrap() > 1e-7);
        assert!(r.sub("nabla_xi_pq").unwrap() <= 1e-7);
        assert!(!check_normal(&s, &p, 1e-7).unwrap().passed);
        assert_eq!(classify_normal_3(&s, &p, 1e-7).unwrap().class, StructureClass::NotNormal);
    }

    #[test]
    fn classification_ignores_sample_order() {
        let s = fixtures::m1().unwrap();
        let mut p = pts(s.chart(), 40);
        let a = classify_normal_3(&s, &p, 1e-8).unwrap();
        p.reverse();
        p.rotate_left(7);
        let b = classify_normal_3(&s, &p, 1e-8).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class, StructureClass::ParaSasakian);
    }

    #[test]
    fn flat_para_kahler_forms() {
        let s = fixtures::flat_para_kahler(1.0).unwrap();
        let p = Pt::from_f64(s.chart(), &[0.2, -0.4]).unwrap();
        let phi = fundamental_form::<f64>(&s, &p).unwrap();
        assert_eq!(phi.matrix[(0, 1)], -1.0);
        let d = codifferential_form::<f64>(&s, &p).unwrap();
        assert!(d.components.iter().all(|&v| v == 0.0));
        let r = check_para_kahler(&s, std::slice::from_ref(&p), 1e-12).unwrap();
        assert!(r.passed && r.max_residual == 0.0);
        assert!(check_para_hermitian(&s, &[p], 1e-12).unwrap().passed);
    }

    #[test]
    fn j_adapted_frame_is_orthonormal() {
        let s = fixtures::perturbed_para_hermitian(&[0.3, -0.2, 0.15, 0.1, -0.25, 0.05]).unwrap();
        for p in pts(s.chart(), 8) {
            let frame = j_adapted_frame(&s, &p).unwrap();
            let g = s.metric.at(&p).unwrap().g;
            for (e, je) in &frame {
                let ev: Vec<f64> = e.iter().map(|j| j.value).collect();
                let jv: Vec<f64> = je.iter().map(|j| j.value).collect();
                assert!((g.bilinear(&ev, &ev) - 1.0).abs() < 1e-10);
                assert!((g.bilinear(&jv, &jv) + 1.0).abs() < 1e-10);
                assert!(g.bilinear(&ev, &jv).abs() < 1e-10);
            }
        }
    }
}
