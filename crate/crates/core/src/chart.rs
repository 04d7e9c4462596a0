//! Charts, points, tensor fields and the connection-free calculus on them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expression, Jet2};
use crate::linalg::Mat;
use crate::sampling::sample_box;
use crate::scalar::Scalar;

/// A coordinate patch: named coordinates and a closed domain box.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub name: String,
    names: Arc<[String]>,
    domain: Vec<(f64, f64)>,
}

impl Chart {
    pub fn new(
        name: impl Into<String>,
        coords: &[&str],
        domain: &[(f64, f64)],
    ) -> Result<Arc<Self>> {
        let owned: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        Self::from_parts(name.into(), owned, domain.to_vec())
    }

    pub fn from_parts(
        name: String,
        coords: Vec<String>,
        domain: Vec<(f64, f64)>,
    ) -> Result<Arc<Self>> {
        if coords.is_empty() {
            return Err(Error::InvalidChart(format!("chart `{name}` has no coordinates")));
        }
        if coords.len() != domain.len() {
            return Err(Error::InvalidChart(format!(
                "chart `{name}` has {} coordinates but {} domain intervals",
                coords.len(),
                domain.len()
            )));
        }
        for (i, c) in coords.iter().enumerate() {
            let valid = c
                .chars()
                .next()
                .is_some_and(|ch| ch.is_ascii_alphabetic() || ch == '_')
                && c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
            if !valid {
                return Err(Error::InvalidChart(format!("invalid coordinate name `{c}`")));
            }
            if coords[..i].contains(c) {
                return Err(Error::InvalidChart(format!("duplicate coordinate name `{c}`")));
            }
        }
        for &(lo, hi) in &domain {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidChart(format!(
                    "empty or non-finite interval [{lo}, {hi}] in chart `{name}`"
                )));
            }
        }
        Ok(Arc::new(Self {
            name,
            names: coords.into(),
            domain,
        }))
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn coord_names(&self) -> &Arc<[String]> {
        &self.names
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        coords.len() == self.dim()
            && coords
                .iter()
                .zip(&self.domain)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    pub fn parse(&self, text: &str) -> Result<Expression> {
        parse_expression(text, &self.names)
    }

    pub fn sample<T: Scalar>(self: &Arc<Self>, count: usize, seed: u64) -> Vec<Point<T>> {
        sample_box(&self.domain, count, seed)
            .into_iter()
            .map(|c| Point::from_f64(self, &c).expect("sample inside domain"))
            .collect()
    }
}

/// A point of a chart, checked against the domain box at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<T> {
    chart: Arc<Chart>,
    coords: Vec<T>,
}

impl<T: Scalar> Point<T> {
    pub fn new(chart: &Arc<Chart>, coords: Vec<T>) -> Result<Self> {
        let as_f64: Vec<f64> = coords.iter().map(|c| c.to_f64_lossy()).collect();
        if !chart.contains(&as_f64) {
            return Err(Error::OutOfDomain {
                chart: chart.name.clone(),
                coords: as_f64,
            });
        }
        Ok(Self {
            chart: chart.clone(),
            coords,
        })
    }

    pub fn from_f64(chart: &Arc<Chart>, coords: &[f64]) -> Result<Self> {
        Self::new(chart, coords.iter().map(|&c| T::lit(c)).collect())
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.to_f64_lossy()).collect()
    }
}

/// A tensor field of rank `(upper, lower)` with `upper ≤ 1`, `lower ≤ 2`.
///
/// Components are stored row-major over (upper indices, lower indices); for
/// a `(1,1)` field the entry `(i, j)` is `T^i_j`, so column `j` is the image
/// of `∂_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    chart: Arc<Chart>,
    upper: u8,
    lower: u8,
    components: Vec<Expression>,
}

impl TensorField {
    pub fn new(chart: &Arc<Chart>, upper: u8, lower: u8, components: Vec<Expression>) -> Result<Self> {
        if upper > 1 || lower > 2 || upper + lower > 2 {
            return Err(Error::Dimension(format!(
                "unsupported tensor rank ({upper},{lower})"
            )));
        }
        let n = chart.dim();
        let expected = n.pow((upper + lower) as u32);
        if components.len() != expected {
            return Err(Error::Dimension(format!(
                "rank ({upper},{lower}) field on a {n}-dimensional chart needs {expected} components, got {}",
                components.len()
            )));
        }
        if let Some(bad) = components.iter().find(|e| e.names() != chart.coord_names()) {
            return Err(Error::Dimension(format!(
                "component `{bad}` is not written in the coordinates of chart `{}`",
                chart.name
            )));
        }
        Ok(Self {
            chart: chart.clone(),
            upper,
            lower,
            components,
        })
    }

    /// Parses components from text; `texts` is row-major as in [`TensorField`].
    pub fn parse(chart: &Arc<Chart>, upper: u8, lower: u8, texts: &[&str]) -> Result<Self> {
        let comps = texts
            .iter()
            .enumerate()
            .map(|(i, t)| chart.parse(t).map_err(|e| e.at_path(format!("component {i}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(chart, upper, lower, comps)
    }

    pub fn vector(chart: &Arc<Chart>, texts: &[&str]) -> Result<Self> {
        Self::parse(chart, 1, 0, texts)
    }

    pub fn covector(chart: &Arc<Chart>, texts: &[&str]) -> Result<Self> {
        Self::parse(chart, 0, 1, texts)
    }

    pub fn endomorphism(chart: &Arc<Chart>, texts: &[&str]) -> Result<Self> {
        Self::parse(chart, 1, 1, texts)
    }

    pub fn bilinear(chart: &Arc<Chart>, texts: &[&str]) -> Result<Self> {
        Self::parse(chart, 0, 2, texts)
    }

    pub fn zero(chart: &Arc<Chart>, upper: u8, lower: u8) -> Result<Self> {
        let n = chart.dim().pow((upper + lower) as u32);
        Self::new(
            chart,
            upper,
            lower,
            vec![Expression::zero(chart.coord_names().clone()); n],
        )
    }

    /// The coordinate field `∂_i`.
    pub fn coordinate_field(chart: &Arc<Chart>, i: usize) -> Self {
        let names = chart.coord_names().clone();
        let comps = (0..chart.dim())
            .map(|k| Expression::constant(if k == i { 1.0 } else { 0.0 }, names.clone()))
            .collect();
        Self::new(chart, 1, 0, comps).expect("coordinate field shape")
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn rank(&self) -> (u8, u8) {
        (self.upper, self.lower)
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }

    /// Column `j` of a `(1,1)` field as a vector field (the image of `∂_j`).
    pub fn column(&self, j: usize) -> Result<Self> {
        self.expect_rank(1, 1)?;
        let n = self.chart.dim();
        let comps = (0..n).map(|i| self.components[i * n + j].clone()).collect();
        Self::new(&self.chart, 1, 0, comps)
    }

    pub(crate) fn expect_rank(&self, upper: u8, lower: u8) -> Result<()> {
        if self.rank() != (upper, lower) {
            return Err(Error::Dimension(format!(
                "expected a ({upper},{lower}) field, got ({},{})",
                self.upper, self.lower
            )));
        }
        Ok(())
    }

    fn check_point<T: Scalar>(&self, p: &Point<T>) -> Result<()> {
        if !Arc::ptr_eq(p.chart(), &self.chart) && **p.chart() != *self.chart {
            return Err(Error::Dimension(format!(
                "point of chart `{}` used with a field on chart `{}`",
                p.chart().name,
                self.chart.name
            )));
        }
        Ok(())
    }

    /// Component jets at `p`.
    pub fn jets<T: Scalar>(&self, p: &Point<T>) -> Result<Vec<Jet2<T>>> {
        self.check_point(p)?;
        self.components.iter().map(|e| e.eval_jet2(p.coords())).collect()
    }

    /// Component values at `p`.
    pub fn values<T: Scalar>(&self, p: &Point<T>) -> Result<Vec<T>> {
        self.check_point(p)?;
        self.components.iter().map(|e| e.eval(p.coords())).collect()
    }

    /// Maximum of `|B_ij − B_ji| / (1 + max|B|)` over the given points.
    pub fn symmetry_residual<T: Scalar>(&self, points: &[Point<T>]) -> Result<f64> {
        self.expect_rank(0, 2)?;
        let n = self.chart.dim();
        let mut worst = 0.0_f64;
        for p in points {
            let m = Mat::from_row_major(n, self.values(p)?);
            let scale = T::one() + m.max_abs();
            for i in 0..n {
                for j in i + 1..n {
                    let r = ((m[(i, j)] - m[(j, i)]).abs() / scale).to_f64_lossy();
                    worst = worst.max(r);
                }
            }
        }
        Ok(worst)
    }

    /// Symmetry check at 16 seeded sample points of the chart domain.
    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        let points: Vec<Point<f64>> = self.chart.sample(16, 0x5eed);
        let r = self.symmetry_residual(&points)?;
        if r > tol {
            return Err(Error::Dimension(format!(
                "declared-symmetric field is not symmetric (residual {r:e})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorValue<T> {
    pub point: Point<T>,
    pub components: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovectorValue<T> {
    pub point: Point<T>,
    pub components: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndoValue<T> {
    pub point: Point<T>,
    pub matrix: Mat<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BilinearValue<T> {
    pub point: Point<T>,
    pub matrix: Mat<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorValue<T> {
    Scalar(T),
    Vector(VectorValue<T>),
    Covector(CovectorValue<T>),
    Endo(EndoValue<T>),
    Bilinear(BilinearValue<T>),
}

impl<T: Scalar> TensorValue<T> {
    pub(crate) fn from_components(rank: (u8, u8), p: &Point<T>, comps: Vec<T>) -> Self {
        let n = p.dim();
        match rank {
            (0, 0) => TensorValue::Scalar(comps[0]),
            (1, 0) => TensorValue::Vector(VectorValue {
                point: p.clone(),
                components: comps,
            }),
            (0, 1) => TensorValue::Covector(CovectorValue {
                point: p.clone(),
                components: comps,
            }),
            (1, 1) => TensorValue::Endo(EndoValue {
                point: p.clone(),
                matrix: Mat::from_row_major(n, comps),
            }),
            (0, 2) => TensorValue::Bilinear(BilinearValue {
                point: p.clone(),
                matrix: Mat::from_row_major(n, comps),
            }),
            _ => unreachable!("rank checked at field construction"),
        }
    }

    /// Flat component table, row-major.
    pub fn components(&self) -> Vec<T> {
        match self {
            TensorValue::Scalar(v) => vec![*v],
            TensorValue::Vector(v) => v.components.clone(),
            TensorValue::Covector(v) => v.components.clone(),
            TensorValue::Endo(v) => v.matrix.as_slice().to_vec(),
            TensorValue::Bilinear(v) => v.matrix.as_slice().to_vec(),
        }
    }
}

pub fn evaluate_tensor<T: Scalar>(field: &TensorField, p: &Point<T>) -> Result<TensorValue<T>> {
    Ok(TensorValue::from_components(field.rank(), p, field.values(p)?))
}

/// `[X,Y]^k = X^i ∂_i Y^k − Y^i ∂_i X^k`.
pub fn lie_bracket<T: Scalar>(x: &TensorField, y: &TensorField, p: &Point<T>) -> Result<VectorValue<T>> {
    x.expect_rank(1, 0)?;
    y.expect_rank(1, 0)?;
    if x.chart() != y.chart() {
        return Err(Error::Dimension("lie bracket of fields on different charts".into()));
    }
    let (xj, yj) = (x.jets(p)?, y.jets(p)?);
    Ok(VectorValue {
        point: p.clone(),
        components: bracket_from_jets(&xj, &yj),
    })
}

pub(crate) fn bracket_from_jets<T: Scalar>(x: &[Jet2<T>], y: &[Jet2<T>]) -> Vec<T> {
    let n = x.len();
    (0..n)
        .map(|k| {
            (0..n).fold(T::zero(), |acc, i| {
                acc + x[i].value * y[k].gradient[i] - y[i].value * x[k].gradient[i]
            })
        })
        .collect()
}

/// `dη(∂_i, ∂_j) = ½(∂_i η_j − ∂_j η_i)`; the ½ convention makes
/// `dη(X,Y) = g(X, φY)` the paracontact metric condition.
pub fn exterior_derivative_1form<T: Scalar>(eta: &TensorField, p: &Point<T>) -> Result<BilinearValue<T>> {
    eta.expect_rank(0, 1)?;
    let jets = eta.jets(p)?;
    Ok(BilinearValue {
        point: p.clone(),
        matrix: d_of_covector(&jets),
    })
}

pub(crate) fn d_of_covector<T: Scalar>(jets: &[Jet2<T>]) -> Mat<T> {
    let half = T::lit(0.5);
    Mat::from_fn(jets.len(), |i, j| half * (jets[j].gradient[i] - jets[i].gradient[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Pt;

    fn m1_chart() -> Arc<Chart> {
        Chart::new("M1", &["x", "y", "z"], &[(0.5, 2.5), (-2.0, 2.0), (-2.0, 2.0)]).unwrap()
    }

    #[test]
    fn chart_validation() {
        assert!(Chart::new("c", &["x", "x"], &[(0.0, 1.0), (0.0, 1.0)]).is_err());
        assert!(Chart::new("c", &["x"], &[(1.0, 0.0)]).is_err());
        assert!(Chart::new("c", &[], &[]).is_err());
        let c = m1_chart();
        assert!(Point::<f64>::from_f64(&c, &[0.0, 0.0, 0.0]).is_err());
        assert!(Point::<f64>::from_f64(&c, &[0.5, 2.0, -2.0]).is_ok());
    }

    #[test]
    fn phi1_column_at_x1() {
        let c = m1_chart();
        let phi = TensorField::endomorphism(&c, &["0", "-1", "0", "-1", "0", "0", "x^2", "0", "0"]).unwrap();
        let p = Pt::from_f64(&c, &[1.0, 0.0, 0.0]).unwrap();
        let TensorValue::Endo(v) = evaluate_tensor::<f64>(&phi, &p).unwrap() else {
            panic!()
        };
        assert_eq!([v.matrix[(0, 0)], v.matrix[(1, 0)], v.matrix[(2, 0)]], [0.0, -1.0, 1.0]);
        let zero = TensorField::zero(&c, 1, 1).unwrap();
        assert!(evaluate_tensor::<f64>(&zero, &p).unwrap().components().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn brackets() {
        let c = m1_chart();
        let p = Pt::from_f64(&c, &[1.0, 0.3, -0.2]).unwrap();
        let dx = TensorField::coordinate_field(&c, 0);
        let dy = TensorField::coordinate_field(&c, 1);
        assert_eq!(lie_bracket::<f64>(&dx, &dy, &p).unwrap().components, vec![0.0; 3]);
        let phi_e1 = TensorField::vector(&c, &["0", "-1", "x^2"]).unwrap();
        assert_eq!(
            lie_bracket::<f64>(&dx, &phi_e1, &p).unwrap().components,
            vec![0.0, 0.0, 2.0]
        );
        let x = TensorField::vector(&c, &["x*y", "z^2-x", "y"]).unwrap();
        assert_eq!(lie_bracket::<f64>(&x, &x, &p).unwrap().components, vec![0.0; 3]);
    }

    #[test]
    fn exterior_derivative_conventions() {
        let c = m1_chart();
        let p = Pt::from_f64(&c, &[1.0, 0.0, 0.0]).unwrap();
        let dz = TensorField::covector(&c, &["0", "0", "1"]).unwrap();
        assert!(exterior_derivative_1form::<f64>(&dz, &p).unwrap().matrix.max_abs() == 0.0);
        let eta1 = TensorField::covector(&c, &["0", "x^2", "1"]).unwrap();
        let d = exterior_derivative_1form::<f64>(&eta1, &p).unwrap();
        assert_eq!(d.matrix[(0, 1)], 1.0);
        assert_eq!(d.matrix[(1, 0)], -1.0);

        let m2 = Chart::new("M2", &["u", "v", "w"], &[(-2.0, 2.0), (0.5, 2.5), (-2.0, 2.0)]).unwrap();
        let q = Pt::from_f64(&m2, &[0.0, 1.0, 0.0]).unwrap();
        let eta2 = TensorField::covector(&m2, &["v^2", "0", "1"]).unwrap();
        assert_eq!(exterior_derivative_1form::<f64>(&eta2, &q).unwrap().matrix[(0, 1)], -1.0);
    }

    #[test]
    fn rank_and_shape_errors() {
        let c = m1_chart();
        assert!(TensorField::endomorphism(&c, &["0", "1"]).is_err());
        let v = TensorField::vector(&c, &["1", "0", "0"]).unwrap();
        assert!(v.column(0).is_err());
        assert!(matches!(
            TensorField::vector(&c, &["1", "q", "0"]),
            Err(Error::Expression { .. })
        ));
    }
}
