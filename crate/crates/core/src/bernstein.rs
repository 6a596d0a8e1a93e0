//! Sound range bounds of polynomials over the unit box.
//!
//! The values of a polynomial on `[0,1]^n` are bracketed by the minimum and
//! maximum of its Bernstein-basis coefficients, so converting from the power
//! basis gives a global enclosure with no iteration. The bounds are exact
//! for multilinear polynomials and conservative otherwise; optional
//! bisection tightens them at geometric cost.

use crate::poly::MultiPoly;
use nalgebra::{DMatrix, DVector};

/// Dense tensor of Bernstein coefficients of shape `(d_1+1) x ... x (d_n+1)`.
#[derive(Debug, Clone)]
pub struct BernsteinTensor {
    degree: Vec<u32>,
    shape: Vec<usize>,
    coeffs: Vec<f64>,
}

impl BernsteinTensor {
    pub fn degree(&self) -> &[u32] {
        &self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn min_coeff(&self) -> f64 {
        self.coeffs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Coefficient at a corner of the index lattice, identified by the box
    /// vertex bits (`false` -> index 0, `true` -> index `d_k`).
    pub fn corner(&self, vertex: &[bool]) -> f64 {
        assert_eq!(vertex.len(), self.shape.len());
        let mut idx = 0;
        let mut stride = 1;
        for k in (0..self.shape.len()).rev() {
            if vertex[k] {
                idx += (self.shape[k] - 1) * stride;
            }
            stride *= self.shape[k];
        }
        self.coeffs[idx]
    }
}

fn pascal_rows(max_n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(max_n + 1);
    for n in 0..=max_n {
        let mut row = vec![1.0; n + 1];
        for j in 1..n {
            row[j] = rows[n - 1][j - 1] + rows[n - 1][j];
        }
        rows.push(row);
    }
    rows
}

/// Converts a power-basis polynomial over `[0,1]^n` to its Bernstein tensor.
///
/// `b_I = sum_{J <= I} prod_k [C(I_k,J_k)/C(d_k,J_k)] a_J` where `d` is the
/// multi-degree. The sum is accumulated term by term: each power coefficient
/// `a_J` scatters into the sub-lattice `I >= J`, which keeps the cost
/// proportional to the number of stored terms.
pub fn power_to_bernstein(p: &MultiPoly) -> BernsteinTensor {
    let degree = p.multi_degree();
    let n = degree.len();
    let shape: Vec<usize> = degree.iter().map(|&d| d as usize + 1).collect();
    let mut strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    let total: usize = shape.iter().product();
    let mut coeffs = vec![0.0; total.max(1)];
    let maxd = degree.iter().copied().max().unwrap_or(0) as usize;
    let pascal = pascal_rows(maxd);

    for (exps, a) in p.terms() {
        // ratios[k][o] = C(J_k+o, J_k) / C(d_k, J_k), o = 0..=(d_k-J_k)
        let mut ratios: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut extents: Vec<usize> = Vec::with_capacity(n);
        let mut base_idx = 0usize;
        for k in 0..n {
            let j = exps[k] as usize;
            let d = degree[k] as usize;
            let denom = pascal[d][j];
            let r: Vec<f64> = (j..=d).map(|i| pascal[i][j] / denom).collect();
            extents.push(d - j + 1);
            ratios.push(r);
            base_idx += j * strides[k];
        }
        scatter(&mut coeffs, &strides, base_idx, &extents, &ratios, a);
    }

    BernsteinTensor {
        degree,
        shape,
        coeffs,
    }
}

fn scatter(
    coeffs: &mut [f64],
    strides: &[usize],
    base_idx: usize,
    extents: &[usize],
    ratios: &[Vec<f64>],
    a: f64,
) {
    let n = extents.len();
    if n == 0 {
        coeffs[0] += a;
        return;
    }
    let mut offs = vec![0usize; n];
    // partial[k+1] = prod_{j<=k} ratios[j][offs[j]]
    let mut partial = vec![1.0; n + 1];
    for k in 0..n {
        partial[k + 1] = partial[k] * ratios[k][0];
    }
    let mut idx = base_idx;
    loop {
        coeffs[idx] += a * partial[n];
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if offs[k] + 1 < extents[k] {
                offs[k] += 1;
                idx += strides[k];
                break;
            }
            idx -= offs[k] * strides[k];
            offs[k] = 0;
        }
        for j in k..n {
            partial[j + 1] = partial[j] * ratios[j][offs[j]];
        }
    }
}

/// Upper bound of `p` over the unit box: the maximum Bernstein coefficient.
pub fn opt_box_upper(p: &MultiPoly) -> f64 {
    power_to_bernstein(p).max_coeff()
}

/// Lower bound of `p` over the unit box: the minimum Bernstein coefficient,
/// which equals `-opt_box_upper(-p)`.
pub fn opt_box_lower(p: &MultiPoly) -> f64 {
    power_to_bernstein(p).min_coeff()
}

/// Both bounds from a single tensor.
pub fn opt_box_range(p: &MultiPoly) -> (f64, f64) {
    let t = power_to_bernstein(p);
    (t.min_coeff(), t.max_coeff())
}

/// Enclosure refined by recursively bisecting the widest axis `depth` times.
///
/// Each half is mapped back to the unit box by an affine substitution before
/// re-enclosing, so every leaf is a plain Bernstein bound on a sub-box.
pub fn opt_box_range_subdivided(p: &MultiPoly, depth: u32) -> (f64, f64) {
    let widths = vec![1.0; p.nvars()];
    range_rec(p, &widths, depth)
}

pub fn opt_box_upper_subdivided(p: &MultiPoly, depth: u32) -> f64 {
    opt_box_range_subdivided(p, depth).1
}

pub fn opt_box_lower_subdivided(p: &MultiPoly, depth: u32) -> f64 {
    opt_box_range_subdivided(p, depth).0
}

fn range_rec(p: &MultiPoly, widths: &[f64], depth: u32) -> (f64, f64) {
    if depth == 0 || p.nvars() == 0 {
        return opt_box_range(p);
    }
    let n = p.nvars();
    let axis = widths
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |(bi, bw), (i, &w)| {
            if w > bw {
                (i, w)
            } else {
                (bi, bw)
            }
        })
        .0;
    let mut halved = widths.to_vec();
    halved[axis] /= 2.0;

    let mut g = DMatrix::identity(n, n);
    g[(axis, axis)] = 0.5;
    let lower_half = p
        .compose_affine(&DVector::zeros(n), &g)
        .expect("square substitution");
    let mut shift = DVector::zeros(n);
    shift[axis] = 0.5;
    let upper_half = p.compose_affine(&shift, &g).expect("square substitution");

    let (lo_a, hi_a) = range_rec(&lower_half, &halved, depth - 1);
    let (lo_b, hi_b) = range_rec(&upper_half, &halved, depth - 1);
    (lo_a.min(lo_b), hi_a.max(hi_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn parabola() -> MultiPoly {
        // alpha - alpha^2
        MultiPoly::from_terms(1, [(1.0, vec![1]), (-1.0, vec![2])]).unwrap()
    }

    fn linear_2d() -> MultiPoly {
        MultiPoly::from_terms(2, [(2.0, vec![1, 0]), (3.0, vec![0, 1])]).unwrap()
    }

    #[test]
    fn parabola_tensor_by_hand() {
        let t = power_to_bernstein(&parabola());
        assert_eq!(t.degree(), &[2]);
        let c = t.coeffs();
        assert!((c[0] - 0.0).abs() < 1e-15);
        assert!((c[1] - 0.5).abs() < 1e-15);
        assert!((c[2] - 0.0).abs() < 1e-15);
    }

    #[test]
    fn linear_corners_equal_vertex_values() {
        let t = power_to_bernstein(&linear_2d());
        assert_eq!(t.corner(&[false, false]), 0.0);
        assert_eq!(t.corner(&[false, true]), 3.0);
        assert_eq!(t.corner(&[true, false]), 2.0);
        assert_eq!(t.corner(&[true, true]), 5.0);
    }

    #[test]
    fn constant_tensor() {
        let t = power_to_bernstein(&MultiPoly::constant(2, 4.5));
        assert_eq!(t.coeffs(), &[4.5]);
        let z = power_to_bernstein(&MultiPoly::zero(3));
        assert_eq!(z.coeffs(), &[0.0]);
    }

    #[test]
    fn upper_bound_examples() {
        assert!((opt_box_upper(&parabola()) - 0.5).abs() < 1e-15);
        assert!((opt_box_upper(&linear_2d()) - 5.0).abs() < 1e-15);
        assert!((opt_box_upper(&MultiPoly::constant(1, 7.0)) - 7.0).abs() < 1e-15);
    }

    #[test]
    fn lower_bound_examples() {
        assert!((opt_box_lower(&parabola()) - 0.0).abs() < 1e-15);
        assert!((opt_box_lower(&linear_2d()) - 0.0).abs() < 1e-15);
        assert!((opt_box_lower(&MultiPoly::constant(2, -3.0)) + 3.0).abs() < 1e-15);
    }

    #[test]
    fn lower_is_negated_upper_of_negation() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let p = random_poly(&mut rng, 2, 3);
            let lo = opt_box_lower(&p);
            let via_neg = -opt_box_upper(&p.scale(-1.0));
            assert!((lo - via_neg).abs() <= 1e-12 * (1.0 + lo.abs()));
        }
    }

    // Oracle for the depth-1 subdivided bound on alpha - alpha^2: apply the
    // univariate power->Bernstein formula b_i = sum_{j<=i} C(i,j)/C(d,j) a_j
    // by literal arithmetic to each half.
    #[test]
    fn subdivided_parabola_depth_one() {
        // Left half via alpha = beta/2: beta/2 - beta^2/4.
        let left = [0.0, 0.5, -0.25];
        // Right half via alpha = (1+beta)/2: 1/4 - beta^2/4.
        let right = [0.25, 0.0, -0.25];
        let bern = |a: [f64; 3]| {
            [
                a[0],
                a[0] + a[1] * (1.0 / 2.0),
                a[0] + a[1] + a[2],
            ]
        };
        let max3 = |b: [f64; 3]| b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let expected = max3(bern(left)).max(max3(bern(right)));
        assert!((expected - 0.25).abs() < 1e-15);

        let got = opt_box_upper_subdivided(&parabola(), 1);
        assert!((got - expected).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn subdivided_depth_zero_equals_plain() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let p = random_poly(&mut rng, 2, 3);
            assert_eq!(opt_box_upper_subdivided(&p, 0), opt_box_upper(&p));
        }
    }

    #[test]
    fn subdivided_linear_unchanged() {
        for depth in 0..4 {
            let hi = opt_box_upper_subdivided(&linear_2d(), depth);
            assert!((hi - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_refinement() {
        let mut rng = StdRng::seed_from_u64(29);
        for _ in 0..30 {
            let p = random_poly(&mut rng, 2, 4);
            let d0 = opt_box_upper_subdivided(&p, 0);
            let d1 = opt_box_upper_subdivided(&p, 1);
            let d2 = opt_box_upper_subdivided(&p, 2);
            assert!(d1 <= d0 + 1e-12);
            assert!(d2 <= d1 + 1e-12);
        }
    }

    #[test]
    fn corner_coeffs_interpolate() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..30 {
            let p = random_poly(&mut rng, 3, 3);
            let t = power_to_bernstein(&p);
            for bits in 0..8u32 {
                let vertex: Vec<bool> = (0..3).map(|k| bits >> k & 1 == 1).collect();
                let x: Vec<f64> = vertex.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                let want = p.eval(&x).unwrap();
                let got = t.corner(&vertex);
                assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn enclosure_on_grid() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..40 {
            let p = random_poly(&mut rng, 2, 4);
            let (lo, hi) = opt_box_range(&p);
            let m = 40;
            for i in 0..=m {
                for j in 0..=m {
                    let x = [i as f64 / m as f64, j as f64 / m as f64];
                    let v = p.eval(&x).unwrap();
                    assert!(v <= hi + 1e-9, "value {v} above bound {hi} for {p}");
                    assert!(v >= lo - 1e-9, "value {v} below bound {lo} for {p}");
                }
            }
        }
    }

    #[test]
    fn multilinear_bounds_are_exact() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..30 {
            let n = 3;
            let terms: Vec<(f64, Vec<u32>)> = (0..6)
                .map(|_| {
                    let e: Vec<u32> = (0..n).map(|_| rng.random_range(0..=1)).collect();
                    (rng.random_range(-5.0..5.0), e)
                })
                .collect();
            let p = MultiPoly::from_terms(n, terms).unwrap();
            let (lo, hi) = opt_box_range(&p);
            let mut vmax = f64::NEG_INFINITY;
            let mut vmin = f64::INFINITY;
            for bits in 0..(1u32 << n) {
                let x: Vec<f64> = (0..n)
                    .map(|k| if bits >> k & 1 == 1 { 1.0 } else { 0.0 })
                    .collect();
                let v = p.eval(&x).unwrap();
                vmax = vmax.max(v);
                vmin = vmin.min(v);
            }
            assert!((hi - vmax).abs() <= 1e-10 * (1.0 + vmax.abs()));
            assert!((lo - vmin).abs() <= 1e-10 * (1.0 + vmin.abs()));
        }
    }

    fn random_poly(rng: &mut StdRng, nvars: usize, maxdeg: u32) -> MultiPoly {
        let nterms = rng.random_range(1..=6);
        let terms: Vec<(f64, Vec<u32>)> = (0..nterms)
            .map(|_| {
                let e: Vec<u32> = (0..nvars).map(|_| rng.random_range(0..=maxdeg)).collect();
                (rng.random_range(-5.0..5.0), e)
            })
            .collect();
        MultiPoly::from_terms(nvars, terms).unwrap()
    }
}
