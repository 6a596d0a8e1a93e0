//! Sparse multivariate polynomials in the power basis.
//!
//! A polynomial is a map from exponent vectors to nonzero coefficients.
//! The representation is canonical: zero coefficients are never stored, so
//! two polynomials are equal iff their term maps are equal. The key
//! operation beyond ring arithmetic is [`MultiPoly::compose_affine`], which
//! substitutes an affine change of variables `x = a + G·alpha` and is what
//! turns an objective over a parallelotope into an objective over the unit
//! box.

use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Exponent vector of a monomial; entry `i` is the power of variable `i`.
pub type ExponentVec = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("polynomial dimension mismatch: expected {expected} variables, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Sparse multivariate polynomial with `f64` coefficients.
///
/// Terms are kept in a `BTreeMap` so iteration order (and therefore every
/// downstream serialization) is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<ExponentVec, f64>,
}

impl MultiPoly {
    /// The zero polynomial over `nvars` variables (empty term map).
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    /// The constant polynomial `c`.
    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        if c != 0.0 {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    /// The monomial `x_idx`.
    pub fn var(nvars: usize, idx: usize) -> Self {
        assert!(idx < nvars, "variable index {idx} out of range {nvars}");
        let mut exps = vec![0; nvars];
        exps[idx] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(exps, 1.0);
        Self { nvars, terms }
    }

    /// Builds a polynomial from `(coefficient, exponents)` pairs, merging
    /// duplicates and dropping zero coefficients.
    pub fn from_terms(
        nvars: usize,
        terms: impl IntoIterator<Item = (f64, ExponentVec)>,
    ) -> Result<Self, PolyError> {
        let mut p = Self::zero(nvars);
        for (c, e) in terms {
            if e.len() != nvars {
                return Err(PolyError::DimensionMismatch {
                    expected: nvars,
                    got: e.len(),
                });
            }
            p.add_term(c, e);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Term iterator in deterministic (lexicographic) order.
    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVec, f64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, c: f64, e: ExponentVec) {
        debug_assert_eq!(e.len(), self.nvars);
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                if c != 0.0 {
                    v.insert(c);
                }
            }
        }
    }

    fn check_dims(&self, other: &Self) -> Result<(), PolyError> {
        if self.nvars == other.nvars {
            Ok(())
        } else {
            Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                got: other.nvars,
            })
        }
    }

    /// `self + other`, restoring canonical form.
    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (e, c) in other.terms() {
            out.add_term(c, e.clone());
        }
        Ok(out)
    }

    /// `self * other`.
    pub fn checked_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_dims(other)?;
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in self.terms() {
            for (eb, cb) in other.terms() {
                let e: ExponentVec = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(ca * cb, e);
            }
        }
        Ok(out)
    }

    /// `c * self`.
    pub fn scale(&self, c: f64) -> Self {
        if c == 0.0 {
            return Self::zero(self.nvars);
        }
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, &v)| (e.clone(), c * v)).collect(),
        }
    }

    /// Evaluates the polynomial at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        if x.len() != self.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                got: x.len(),
            });
        }
        let mut acc = 0.0;
        for (e, c) in self.terms() {
            let mut m = c;
            for (xi, &ei) in x.iter().zip(e) {
                if ei > 0 {
                    m *= xi.powi(ei as i32);
                }
            }
            acc += m;
        }
        Ok(acc)
    }

    /// Per-variable maximum exponent; the zero polynomial maps to all zeros.
    pub fn multi_degree(&self) -> ExponentVec {
        let mut deg = vec![0u32; self.nvars];
        for (e, _) in self.terms() {
            for (d, &ei) in deg.iter_mut().zip(e) {
                *d = (*d).max(ei);
            }
        }
        deg
    }

    /// Substitutes `x = a + G·alpha`, returning `q` with
    /// `q(alpha) = self(a + G·alpha)`.
    ///
    /// Column `k` of `G` is the generator multiplying `alpha_k`. Powers of
    /// each affine form are memoized, so the cost stays polynomial in the
    /// term count and degree.
    pub fn compose_affine(&self, a: &DVector<f64>, g: &DMatrix<f64>) -> Result<Self, PolyError> {
        let n = self.nvars;
        if a.len() != n || g.nrows() != n || g.ncols() != n {
            return Err(PolyError::DimensionMismatch {
                expected: n,
                got: a.len().min(g.nrows()),
            });
        }
        let deg = self.multi_degree();
        // powers[j][t] = (a_j + sum_k G[j,k] alpha_k)^t
        let mut powers: Vec<Vec<MultiPoly>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut affine = MultiPoly::constant(n, a[j]);
            for k in 0..n {
                if g[(j, k)] != 0.0 {
                    affine.add_term(g[(j, k)], {
                        let mut e = vec![0; n];
                        e[k] = 1;
                        e
                    });
                }
            }
            let mut pows = vec![MultiPoly::constant(n, 1.0)];
            for t in 1..=deg[j] as usize {
                let next = pows[t - 1].checked_mul(&affine)?;
                pows.push(next);
            }
            powers.push(pows);
        }
        let mut out = Self::zero(n);
        for (e, c) in self.terms() {
            let mut prod = MultiPoly::constant(n, c);
            for (j, &ej) in e.iter().enumerate() {
                if ej > 0 {
                    prod = prod.checked_mul(&powers[j][ej as usize])?;
                }
            }
            out = out.checked_add(&prod)?;
        }
        Ok(out)
    }

    /// `sum_i coeffs[i] * polys[i]`; all polynomials must share dimensions.
    pub fn linear_combination(coeffs: &[f64], polys: &[MultiPoly]) -> Result<Self, PolyError> {
        assert_eq!(coeffs.len(), polys.len());
        let nvars = polys.first().map_or(0, MultiPoly::nvars);
        let mut out = Self::zero(nvars);
        for (&c, p) in coeffs.iter().zip(polys) {
            out = out.checked_add(&p.scale(c))?;
        }
        Ok(out)
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &ei) in e.iter().enumerate() {
                if ei == 1 {
                    write!(f, "*x{i}")?;
                } else if ei > 1 {
                    write!(f, "*x{i}^{ei}")?;
                }
            }
        }
        Ok(())
    }
}

macro_rules! impl_poly_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl std::ops::$trait for &MultiPoly {
            type Output = MultiPoly;
            fn $method(self, rhs: &MultiPoly) -> MultiPoly {
                self.$checked(rhs).expect("polynomial dimension mismatch")
            }
        }
    };
}

impl_poly_binop!(Add, add, checked_add);
impl_poly_binop!(Mul, mul, checked_mul);

impl std::ops::Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_add(&rhs.scale(-1.0))
            .expect("polynomial dimension mismatch")
    }
}

impl std::ops::Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}
