//! Parallelotopes and parallelotope bundles.
//!
//! A parallelotope is stored in half-space form: a square template matrix
//! whose rows are the constraint directions, plus lower and upper offsets
//! per row. The generator form (anchor plus edge vectors) is derived on
//! demand by solving the template's corner systems. A bundle is a list of
//! parallelotopes whose intersection is the represented set; all queries on
//! a bundle (support optimization, containment, boxing, volume) act on that
//! intersection.

mod lp;
mod volume;

pub use lp::LpError;

use nalgebra::{DMatrix, DVector, RowDVector};
use thiserror::Error;

/// Templates whose normalized determinant falls below this are rejected as
/// genuinely dependent rather than merely ill-conditioned.
pub const SINGULARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bounds out of order at row {index}: lower {lower} > upper {upper}")]
    BoundsOrder { index: usize, lower: f64, upper: f64 },
    #[error("zero template row at index {index}")]
    ZeroRow { index: usize },
    #[error(
        "singular template matrix (normalized |det| = {det:.3e}, condition estimate {cond:.3e})"
    )]
    SingularTemplate { det: f64, cond: f64 },
    #[error("bundle intersection is empty")]
    EmptyIntersection,
    #[error("optimization direction is unbounded over the bundle")]
    Unbounded,
    #[error("numerical failure in LP solve: {0}")]
    Numerical(String),
}

impl From<LpError> for GeometryError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::Infeasible => GeometryError::EmptyIntersection,
            LpError::Unbounded => GeometryError::Unbounded,
            LpError::IterationLimit => GeometryError::Numerical(e.to_string()),
        }
    }
}

/// Half-space form parallelotope: `lower <= template * x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parallelotope {
    template: DMatrix<f64>,
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl Parallelotope {
    pub fn new(
        template: DMatrix<f64>,
        lower: DVector<f64>,
        upper: DVector<f64>,
    ) -> Result<Self, GeometryError> {
        let n = template.nrows();
        if template.ncols() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                got: template.ncols(),
            });
        }
        if lower.len() != n || upper.len() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                got: lower.len().min(upper.len()),
            });
        }
        for i in 0..n {
            if lower[i] > upper[i] {
                return Err(GeometryError::BoundsOrder {
                    index: i,
                    lower: lower[i],
                    upper: upper[i],
                });
            }
        }
        let normalized = normalized_copy(&template)?;
        let det = normalized.determinant().abs();
        if det <= SINGULARITY_TOL {
            let cond = condition_estimate(&normalized);
            return Err(GeometryError::SingularTemplate { det, cond });
        }
        Ok(Self {
            template,
            lower,
            upper,
        })
    }

    /// Axis-aligned box `lo <= x <= hi`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self, GeometryError> {
        let n = lo.len();
        if hi.len() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                got: hi.len(),
            });
        }
        Self::new(
            DMatrix::identity(n, n),
            DVector::from_row_slice(lo),
            DVector::from_row_slice(hi),
        )
    }

    pub fn dim(&self) -> usize {
        self.template.nrows()
    }

    pub fn template(&self) -> &DMatrix<f64> {
        &self.template
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn row(&self, i: usize) -> RowDVector<f64> {
        self.template.row(i).into_owned()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let vals = &self.template * x;
        (0..self.dim()).all(|i| vals[i] >= self.lower[i] - tol && vals[i] <= self.upper[i] + tol)
    }

    /// Converts to generator form by solving the corner systems
    /// `T v = lower` and `T v_j = mu_j` where `mu_j` lifts row `j` to its
    /// upper offset.
    pub fn generator_rep(&self) -> Result<GeneratorRep, GeometryError> {
        let n = self.dim();
        let lu = self.template.clone().lu();
        let singular = || {
            let normalized = normalized_copy(&self.template).unwrap_or_else(|_| self.template.clone());
            GeometryError::SingularTemplate {
                det: normalized.determinant().abs(),
                cond: condition_estimate(&normalized),
            }
        };
        let anchor = lu.solve(&self.lower).ok_or_else(singular)?;
        let mut generators = Vec::with_capacity(n);
        for j in 0..n {
            let mut mu = self.lower.clone();
            mu[j] = self.upper[j];
            let v = lu.solve(&mu).ok_or_else(singular)?;
            generators.push(v - &anchor);
        }
        Ok(GeneratorRep { anchor, generators })
    }
}

/// Scales template rows to unit Euclidean norm, scaling offsets to match;
/// the represented set is unchanged.
pub fn normalize_rows(
    template: &DMatrix<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> Result<Parallelotope, GeometryError> {
    let n = template.nrows();
    let mut t = template.clone();
    let mut lo = lower.clone();
    let mut hi = upper.clone();
    for i in 0..n {
        let norm = t.row(i).norm();
        if norm == 0.0 {
            return Err(GeometryError::ZeroRow { index: i });
        }
        for j in 0..t.ncols() {
            t[(i, j)] /= norm;
        }
        lo[i] /= norm;
        hi[i] /= norm;
    }
    Parallelotope::new(t, lo, hi)
}

pub(crate) fn normalized_copy(template: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    let mut t = template.clone();
    for i in 0..t.nrows() {
        let norm = t.row(i).norm();
        if norm == 0.0 {
            return Err(GeometryError::ZeroRow { index: i });
        }
        for j in 0..t.ncols() {
            t[(i, j)] /= norm;
        }
    }
    Ok(t)
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Generator form: the set `{ anchor + sum_i alpha_i g_i : alpha in [0,1]^n }`.
#[derive(Debug, Clone)]
pub struct GeneratorRep {
    pub anchor: DVector<f64>,
    pub generators: Vec<DVector<f64>>,
}

impl GeneratorRep {
    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// Generators as matrix columns.
    pub fn generator_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, self.generators.len(), |r, c| self.generators[c][r])
    }

    /// All `2^n` vertices `anchor + sum_{i in S} g_i`.
    pub fn vertices(&self) -> Vec<DVector<f64>> {
        let n = self.generators.len();
        let mut out = Vec::with_capacity(1 << n);
        for bits in 0u32..(1 << n) {
            let mut v = self.anchor.clone();
            for (i, g) in self.generators.iter().enumerate() {
                if bits >> i & 1 == 1 {
                    v += g;
                }
            }
            out.push(v);
        }
        out
    }
}

/// Finite intersection of parallelotopes sharing one ambient dimension.
#[derive(Debug, Clone)]
pub struct Bundle {
    members: Vec<Parallelotope>,
}

impl Bundle {
    pub fn new(members: Vec<Parallelotope>) -> Result<Self, GeometryError> {
        let first = members.first().ok_or(GeometryError::DimensionMismatch {
            expected: 1,
            got: 0,
        })?;
        let n = first.dim();
        for m in &members {
            if m.dim() != n {
                return Err(GeometryError::DimensionMismatch {
                    expected: n,
                    got: m.dim(),
                });
            }
        }
        Ok(Self { members })
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn members(&self) -> &[Parallelotope] {
        &self.members
    }

    pub fn contains_point(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.members.iter().all(|p| p.contains(x, tol))
    }

    /// All constraint rows of all members, row-normalized, as
    /// `(direction, lower, upper)` triples.
    pub(crate) fn stacked_rows(&self) -> Vec<(RowDVector<f64>, f64, f64)> {
        let mut rows = Vec::new();
        for p in &self.members {
            for i in 0..p.dim() {
                let r = p.row(i);
                let norm = r.norm();
                if norm == 0.0 {
                    continue;
                }
                rows.push((r / norm, p.lower()[i] / norm, p.upper()[i] / norm));
            }
        }
        rows
    }

    /// Maximizes `v . x` over the bundle.
    ///
    /// The best-conditioned member parametrizes the search space as its unit
    /// box; the remaining members' constraints become bounded slack rows of
    /// a small LP. Returns an optimizing vertex and the optimal value.
    pub fn maximize_direction(
        &self,
        v: &DVector<f64>,
    ) -> Result<(DVector<f64>, f64), GeometryError> {
        let n = self.dim();
        if v.len() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        let pi = self.best_conditioned_member();
        let rep = self.members[pi].generator_rep()?;
        let g = rep.generator_matrix();
        let a = &rep.anchor;

        let others: Vec<usize> = (0..self.members.len()).filter(|&k| k != pi).collect();
        let m = others.len() * n;
        let ncols = n + m;
        let mut rows = DMatrix::zeros(m, ncols);
        let mut rhs = vec![0.0; m];
        let mut upper = vec![1.0; ncols];
        for (block, &k) in others.iter().enumerate() {
            let p = &self.members[k];
            for i in 0..n {
                let r = block * n + i;
                let t_row = p.row(i);
                let w = &t_row * &g;
                for j in 0..n {
                    rows[(r, j)] = w[j];
                }
                rows[(r, n + r)] = 1.0;
                let t_dot_a = t_row.dot(&a.transpose());
                rhs[r] = p.upper()[i] - t_dot_a;
                upper[n + r] = (p.upper()[i] - p.lower()[i]).max(0.0);
            }
        }
        let mut obj = vec![0.0; ncols];
        let vg = v.transpose() * &g;
        obj[..n].copy_from_slice(vg.transpose().as_slice());

        let (val, w) = lp::maximize_bounded(&obj, &rows, &rhs, &upper)?;
        let alpha = DVector::from_row_slice(&w[..n]);
        let x = a + &g * alpha;
        Ok((x, val + v.dot(a)))
    }

    fn best_conditioned_member(&self) -> usize {
        let mut best = 0;
        let mut best_det = f64::NEG_INFINITY;
        for (k, p) in self.members.iter().enumerate() {
            let det = normalized_copy(p.template())
                .map(|t| t.determinant().abs())
                .unwrap_or(0.0);
            if det > best_det {
                best_det = det;
                best = k;
            }
        }
        best
    }

    /// Tightest axis-aligned box around the bundle, via `2n` LP solves.
    pub fn bounding_box(&self) -> Result<(DVector<f64>, DVector<f64>), GeometryError> {
        let n = self.dim();
        let mut lo = DVector::zeros(n);
        let mut hi = DVector::zeros(n);
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            hi[i] = self.maximize_direction(&e)?.1;
            e[i] = -1.0;
            lo[i] = -self.maximize_direction(&e)?.1;
        }
        Ok((lo, hi))
    }

    /// Volume estimate: exact convex-hull volume of the enumerated vertex
    /// set for ambient dimension at most three, enveloping-box volume above
    /// that. Flat sets report zero.
    pub fn volume_estimate(&self) -> Result<f64, GeometryError> {
        volume::volume_estimate(self)
    }

    /// Vertices of the intersection polytope (used by the volume path and
    /// by tests; exact only up to LP/solve tolerances).
    pub fn enumerate_vertices(&self) -> Result<Vec<DVector<f64>>, GeometryError> {
        Ok(volume::enumerate_vertices(self))
    }
}


#[cfg(test)]
mod tests {
    use super::testutil::random_template;
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn example_parallelotope() -> Parallelotope {
        // 0 <= x - y <= 1, 0 <= y <= 1.
        Parallelotope::new(
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 1.0]),
            DVector::from_row_slice(&[0.0, 0.0]),
            DVector::from_row_slice(&[1.0, 1.0]),
        )
        .unwrap()
    }

    fn unit_box(n: usize) -> Parallelotope {
        Parallelotope::from_box(&vec![0.0; n], &vec![1.0; n]).unwrap()
    }

    #[test]
    fn generator_rep_of_sheared_parallelotope() {
        let rep = example_parallelotope().generator_rep().unwrap();
        assert!((rep.anchor - DVector::from_row_slice(&[0.0, 0.0])).norm() < 1e-12);
        assert!((&rep.generators[0] - DVector::from_row_slice(&[1.0, 0.0])).norm() < 1e-12);
        assert!((&rep.generators[1] - DVector::from_row_slice(&[1.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn generator_rep_of_unit_box() {
        let rep = unit_box(3).generator_rep().unwrap();
        assert!(rep.anchor.norm() < 1e-12);
        for (i, g) in rep.generators.iter().enumerate() {
            let mut e = DVector::zeros(3);
            e[i] = 1.0;
            assert!((g - e).norm() < 1e-12);
        }
    }

    #[test]
    fn generator_rep_flat_direction() {
        // Degenerate width in y: generator becomes the zero vector.
        let p = Parallelotope::from_box(&[0.0, 0.5], &[1.0, 0.5]).unwrap();
        let rep = p.generator_rep().unwrap();
        assert!(rep.generators[1].norm() < 1e-12);
        assert!((rep.anchor[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn singular_template_rejected() {
        let err = Parallelotope::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]),
            DVector::zeros(2),
            DVector::from_row_slice(&[1.0, 1.0]),
        )
        .unwrap_err();
        assert!(matches!(err, GeometryError::SingularTemplate { .. }));
        let msg = err.to_string();
        assert!(msg.contains("det"), "{msg}");
    }

    #[test]
    fn maximize_on_unit_box() {
        let q = Bundle::new(vec![unit_box(2)]).unwrap();
        let (p, v) = q
            .maximize_direction(&DVector::from_row_slice(&[1.0, 1.0]))
            .unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        assert!((p - DVector::from_row_slice(&[1.0, 1.0])).norm() < 1e-9);

        let (p, v) = q
            .maximize_direction(&DVector::from_row_slice(&[-1.0, 0.0]))
            .unwrap();
        assert!(v.abs() < 1e-9);
        assert!(p[0].abs() < 1e-9);
    }

    #[test]
    fn maximize_on_example_parallelotope() {
        let q = Bundle::new(vec![example_parallelotope()]).unwrap();
        let (p, v) = q
            .maximize_direction(&DVector::from_row_slice(&[1.0, 0.0]))
            .unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        assert!((p - DVector::from_row_slice(&[2.0, 1.0])).norm() < 1e-9);
    }

    #[test]
    fn contains_point_examples() {
        let q = Bundle::new(vec![example_parallelotope()]).unwrap();
        assert!(q.contains_point(&DVector::from_row_slice(&[1.5, 0.5]), 0.0));
        assert!(!q.contains_point(&DVector::from_row_slice(&[0.0, 1.0]), 1e-9));
    }

    #[test]
    fn maximizer_is_contained() {
        let q = Bundle::new(vec![example_parallelotope(), unit_box(2)]).unwrap();
        for dir in [[1.0, 0.3], [-0.5, 1.0], [0.0, -1.0], [2.0, -2.0]] {
            let (p, _) = q.maximize_direction(&DVector::from_row_slice(&dir)).unwrap();
            assert!(q.contains_point(&p, 1e-9));
        }
    }

    #[test]
    fn bounding_box_examples() {
        let q = Bundle::new(vec![unit_box(2)]).unwrap();
        let (lo, hi) = q.bounding_box().unwrap();
        assert!(lo.norm() < 1e-9);
        assert!((hi - DVector::from_row_slice(&[1.0, 1.0])).norm() < 1e-9);

        let q = Bundle::new(vec![example_parallelotope()]).unwrap();
        let (lo, hi) = q.bounding_box().unwrap();
        assert!(lo.norm() < 1e-9);
        assert!((hi - DVector::from_row_slice(&[2.0, 1.0])).norm() < 1e-9);

        // Intersection with the unit box trims x to [0, 1].
        let q = Bundle::new(vec![example_parallelotope(), unit_box(2)]).unwrap();
        let (lo, hi) = q.bounding_box().unwrap();
        assert!(lo.norm() < 1e-9);
        assert!((hi - DVector::from_row_slice(&[1.0, 1.0])).norm() < 1e-9);
    }

    #[test]
    fn empty_intersection_reported() {
        let far = Parallelotope::from_box(&[5.0, 5.0], &[6.0, 6.0]).unwrap();
        let q = Bundle::new(vec![unit_box(2), far]).unwrap();
        let err = q
            .maximize_direction(&DVector::from_row_slice(&[1.0, 0.0]))
            .unwrap_err();
        assert!(matches!(err, GeometryError::EmptyIntersection));
    }

    #[test]
    fn normalize_rows_scales_bounds() {
        let p = normalize_rows(
            &DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 2.0]),
            &DVector::from_row_slice(&[0.0, 0.0]),
            &DVector::from_row_slice(&[10.0, 4.0]),
        )
        .unwrap();
        assert!((p.template()[(0, 0)] - 0.6).abs() < 1e-12);
        assert!((p.template()[(0, 1)] - 0.8).abs() < 1e-12);
        assert!((p.upper()[0] - 2.0).abs() < 1e-12);
        assert!((p.upper()[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_rows_zero_row_errors() {
        let err = normalize_rows(
            &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
            &DVector::zeros(2),
            &DVector::from_row_slice(&[1.0, 1.0]),
        )
        .unwrap_err();
        assert!(matches!(err, GeometryError::ZeroRow { index: 0 }));
    }

    #[test]
    fn normalize_preserves_membership() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..20 {
            let t = random_template(&mut rng, 2);
            let lo = DVector::from_fn(2, |_, _| rng.random_range(-1.0..0.0));
            let hi = DVector::from_fn(2, |_, _| rng.random_range(0.1..1.5));
            let p = Parallelotope::new(t.clone(), lo.clone(), hi.clone()).unwrap();
            let q = normalize_rows(&t, &lo, &hi).unwrap();
            for _ in 0..50 {
                let x = DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
                assert_eq!(p.contains(&x, 1e-9), q.contains(&x, 1e-9));
            }
        }
    }

    #[test]
    fn generator_round_trip_vertices_satisfy_constraints() {
        let mut rng = StdRng::seed_from_u64(57);
        for _ in 0..25 {
            let n = rng.random_range(2..=4);
            let t = random_template(&mut rng, n);
            let lo = DVector::from_fn(n, |_, _| rng.random_range(-1.0..0.0));
            let hi = DVector::from_fn(n, |_, _| rng.random_range(0.1..1.2));
            let p = Parallelotope::new(t, lo.clone(), hi.clone()).unwrap();
            let rep = p.generator_rep().unwrap();
            let mut attained_lo = vec![false; n];
            let mut attained_hi = vec![false; n];
            for v in rep.vertices() {
                assert!(p.contains(&v, 1e-7), "vertex escapes half-space form");
                let vals = p.template() * &v;
                for i in 0..n {
                    if (vals[i] - lo[i]).abs() < 1e-7 {
                        attained_lo[i] = true;
                    }
                    if (vals[i] - hi[i]).abs() < 1e-7 {
                        attained_hi[i] = true;
                    }
                }
            }
            assert!(attained_lo.iter().all(|&b| b), "lower bounds not attained");
            assert!(attained_hi.iter().all(|&b| b), "upper bounds not attained");
        }
    }

    #[test]
    fn lp_matches_vertex_brute_force() {
        let mut rng = StdRng::seed_from_u64(4242);
        for _ in 0..30 {
            let n = rng.random_range(2..=4);
            let t = random_template(&mut rng, n);
            let lo = DVector::from_fn(n, |_, _| rng.random_range(-1.0..0.0));
            let hi = DVector::from_fn(n, |_, _| rng.random_range(0.1..1.2));
            let p = Parallelotope::new(t, lo, hi).unwrap();
            let rep = p.generator_rep().unwrap();
            let q = Bundle::new(vec![p]).unwrap();
            for _ in 0..5 {
                let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                let (_, val) = q.maximize_direction(&v).unwrap();
                let brute = rep
                    .vertices()
                    .iter()
                    .map(|x| v.dot(x))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((val - brute).abs() < 1e-7, "lp {val} vs brute {brute}");
            }
        }
    }

    #[test]
    fn intersection_monotone_in_bounding_box() {
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..20 {
            let base = unit_box(2);
            let t = random_template(&mut rng, 2);
            let lo = DVector::from_fn(2, |_, _| rng.random_range(-0.5..0.0));
            let hi = DVector::from_fn(2, |_, _| rng.random_range(0.5..2.0));
            let extra = Parallelotope::new(t, lo, hi).unwrap();
            let q1 = Bundle::new(vec![base.clone()]).unwrap();
            let q2 = Bundle::new(vec![base, extra]).unwrap();
            let bb1 = q1.bounding_box().unwrap();
            match q2.bounding_box() {
                Ok(bb2) => {
                    for i in 0..2 {
                        assert!(bb2.0[i] >= bb1.0[i] - 1e-9);
                        assert!(bb2.1[i] <= bb1.1[i] + 1e-9);
                    }
                }
                Err(GeometryError::EmptyIntersection) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

}
