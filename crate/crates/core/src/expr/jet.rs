use crate::scalar::Scalar;

/// Value, gradient and Hessian of a scalar field at a point.
///
/// Arithmetic on jets is second-order truncated Taylor arithmetic, so
/// derivatives of rational expressions are exact up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2<T> {
    pub value: T,
    pub gradient: Vec<T>,
    /// Row-major `n × n`, always symmetric.
    pub hessian: Vec<T>,
}

impl<T: Scalar> Jet2<T> {
    pub fn constant(n: usize, value: T) -> Self {
        Self {
            value,
            gradient: vec![T::zero(); n],
            hessian: vec![T::zero(); n * n],
        }
    }

    /// The coordinate function `x_index` at a point where it equals `value`.
    pub fn variable(n: usize, index: usize, value: T) -> Self {
        let mut jet = Self::constant(n, value);
        jet.gradient[index] = T::one();
        jet
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> T {
        self.hessian[i * self.dim() + j]
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        self.scale(-T::one())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            value: self.value * s,
            gradient: self.gradient.iter().map(|&g| g * s).collect(),
            hessian: self.hessian.iter().map(|&h| h * s).collect(),
        }
    }

    /// Leibniz rule: `(ab)'' = a''b + ab'' + a'⊗b' + b'⊗a'`.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.dim();
        let (a, b) = (self.value, other.value);
        let gradient = (0..n)
            .map(|i| self.gradient[i] * b + a * other.gradient[i])
            .collect();
        let mut hessian = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let h = self.hess(i, j) * b
                    + a * other.hess(i, j)
                    + self.gradient[i] * other.gradient[j]
                    + self.gradient[j] * other.gradient[i];
                hessian[i * n + j] = h;
                hessian[j * n + i] = h;
            }
        }
        Self {
            value: a * b,
            gradient,
            hessian,
        }
    }

    /// Applies a scalar function given its value and first two derivatives at
    /// `self.value`.
    pub fn compose(&self, f: T, df: T, d2f: T) -> Self {
        let n = self.dim();
        let gradient = self.gradient.iter().map(|&g| df * g).collect();
        let mut hessian = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let h = df * self.hess(i, j) + d2f * self.gradient[i] * self.gradient[j];
                hessian[i * n + j] = h;
                hessian[j * n + i] = h;
            }
        }
        Self {
            value: f,
            gradient,
            hessian,
        }
    }

    /// `1 / self`. The caller is responsible for the degeneracy check.
    pub fn recip(&self) -> Self {
        let v = self.value;
        let r = T::one() / v;
        self.compose(r, -r * r, T::lit(2.0) * r * r * r)
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.recip())
    }

    /// Integer power; for negative exponents the caller checks the base.
    pub fn powi(&self, k: i32) -> Self {
        let n = self.dim();
        match k {
            0 => Self::constant(n, T::one()),
            1 => self.clone(),
            _ if k > 0 => {
                let v = self.value;
                let kf = T::from_i32(k).unwrap();
                let f = v.powi(k);
                let df = kf * v.powi(k - 1);
                let d2f = kf * (kf - T::one()) * v.powi(k - 2);
                self.compose(f, df, d2f)
            }
            _ => self.powi(-k).recip(),
        }
    }

    /// Square root; requires a positive value.
    pub fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        let two = T::lit(2.0);
        self.compose(s, T::one() / (two * s), -T::one() / (T::lit(4.0) * s * s * s))
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.gradient.iter().all(|g| g.is_finite())
            && self.hessian.iter().all(|h| h.is_finite())
    }

    fn zip(&self, other: &Self, op: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self {
            value: op(self.value, other.value),
            gradient: self
                .gradient
                .iter()
                .zip(&other.gradient)
                .map(|(&a, &b)| op(a, b))
                .collect(),
            hessian: self
                .hessian
                .iter()
                .zip(&other.hessian)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }
}
