//! Bundle volume estimation.
//!
//! For ambient dimension at most three the estimate is the exact volume of
//! the intersection polytope: vertices are enumerated by solving every
//! choice of `n` active constraints at either offset, infeasible solutions
//! are discarded, and the hull volume is computed directly (interval length,
//! shoelace area, or facet decomposition). Above dimension three the
//! estimate falls back to the enveloping-box volume.

use super::{Bundle, GeometryError};
use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

const FEAS_TOL: f64 = 1e-7;
const DEDUP_TOL: f64 = 1e-9;
const COMBO_DET_TOL: f64 = 1e-9;

pub fn volume_estimate(bundle: &Bundle) -> Result<f64, GeometryError> {
    match bundle.dim() {
        0 => Ok(0.0),
        1 => {
            let (lo, hi) = bundle.bounding_box()?;
            Ok((hi[0] - lo[0]).max(0.0))
        }
        2 => Ok(hull_area_2d(&enumerate_vertices(bundle))),
        3 => Ok(hull_volume_3d(bundle, &enumerate_vertices(bundle))),
        _ => {
            let (lo, hi) = bundle.bounding_box()?;
            Ok((0..bundle.dim())
                .map(|i| (hi[i] - lo[i]).max(0.0))
                .product())
        }
    }
}

/// Vertices of the intersection polytope: solve each choice of `n` active
/// constraint rows at either bound and keep the feasible solutions.
pub fn enumerate_vertices(bundle: &Bundle) -> Vec<DVector<f64>> {
    let n = bundle.dim();
    let rows = bundle.stacked_rows();
    let mut vertices: Vec<DVector<f64>> = Vec::new();
    for combo in (0..rows.len()).combinations(n) {
        let m = DMatrix::from_fn(n, n, |r, c| rows[combo[r]].0[c]);
        if m.determinant().abs() <= COMBO_DET_TOL {
            continue;
        }
        let lu = m.lu();
        for bits in 0u32..(1 << n) {
            let b = DVector::from_fn(n, |r, _| {
                if bits >> r & 1 == 1 {
                    rows[combo[r]].2
                } else {
                    rows[combo[r]].1
                }
            });
            let Some(x) = lu.solve(&b) else { continue };
            if !bundle.contains_point(&x, FEAS_TOL) {
                continue;
            }
            if !vertices.iter().any(|v| (v - &x).amax() <= DEDUP_TOL) {
                vertices.push(x);
            }
        }
    }
    vertices
}

/// Shoelace area of the convex hull (monotone chain); collinear input
/// collapses to zero.
fn hull_area_2d(points: &[DVector<f64>]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len() + 1);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        return 0.0;
    }
    let mut area = 0.0;
    for i in 0..hull.len() {
        let (x0, y0) = hull[i];
        let (x1, y1) = hull[(i + 1) % hull.len()];
        area += x0 * y1 - x1 * y0;
    }
    area.abs() / 2.0
}

/// Exact hull volume in 3-D by decomposing each facet polygon into
/// triangles and summing tetrahedra against the polytope centroid.
fn hull_volume_3d(bundle: &Bundle, vertices: &[DVector<f64>]) -> f64 {
    if vertices.len() < 4 || affinely_flat(vertices) {
        return 0.0;
    }
    let centroid = {
        let mut c = DVector::zeros(3);
        for v in vertices {
            c += v;
        }
        c / vertices.len() as f64
    };

    // Candidate facet planes from every constraint bound, deduplicated by
    // canonical (unit normal, offset) form.
    let mut planes: Vec<(DVector<f64>, f64)> = Vec::new();
    for (row, lo, hi) in bundle.stacked_rows() {
        let normal = row.transpose();
        for &b in &[hi, lo] {
            let (n_c, b_c) = canonical_plane(&normal, b);
            if !planes
                .iter()
                .any(|(pn, pb)| (pn - &n_c).amax() <= 1e-9 && (pb - b_c).abs() <= 1e-9)
            {
                planes.push((n_c, b_c));
            }
        }
    }

    let mut volume = 0.0;
    for (normal, offset) in &planes {
        let on_plane: Vec<&DVector<f64>> = vertices
            .iter()
            .filter(|v| (normal.dot(v) - offset).abs() <= FEAS_TOL * (1.0 + offset.abs()))
            .collect();
        if on_plane.len() < 3 {
            continue;
        }
        // In-plane orthonormal frame for angular ordering.
        let u1 = {
            let mut best = DVector::zeros(3);
            let mut best_align = f64::INFINITY;
            for k in 0..3 {
                let mut e = DVector::zeros(3);
                e[k] = 1.0;
                let align = normal[k].abs();
                if align < best_align {
                    best_align = align;
                    best = e;
                }
            }
            let proj = &best - normal * normal.dot(&best);
            proj.normalize()
        };
        let u2 = DVector::from_row_slice(&[
            normal[1] * u1[2] - normal[2] * u1[1],
            normal[2] * u1[0] - normal[0] * u1[2],
            normal[0] * u1[1] - normal[1] * u1[0],
        ]);
        let fc = {
            let mut c = DVector::zeros(3);
            for v in &on_plane {
                c += *v;
            }
            c / on_plane.len() as f64
        };
        let mut ordered: Vec<(f64, &DVector<f64>)> = on_plane
            .iter()
            .map(|v| {
                let d = *v - &fc;
                (d.dot(&u2).atan2(d.dot(&u1)), *v)
            })
            .collect();
        ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite angles"));
        for i in 1..ordered.len() - 1 {
            let a = ordered[0].1 - &centroid;
            let b = ordered[i].1 - &centroid;
            let c = ordered[i + 1].1 - &centroid;
            let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0]);
            volume += det.abs() / 6.0;
        }
    }
    volume
}

fn canonical_plane(normal: &DVector<f64>, offset: f64) -> (DVector<f64>, f64) {
    let sign = normal
        .iter()
        .find(|x| x.abs() > 1e-9)
        .map_or(1.0, |&x| if x < 0.0 { -1.0 } else { 1.0 });
    (normal * sign, offset * sign)
}

/// True when the point set has affine rank below the ambient dimension
/// (relative singular-value test on the centered data).
fn affinely_flat(vertices: &[DVector<f64>]) -> bool {
    let n = vertices[0].len();
    if vertices.len() <= n {
        return true;
    }
    let mut mean = DVector::zeros(n);
    for v in vertices {
        mean += v;
    }
    mean /= vertices.len() as f64;
    let data = DMatrix::from_fn(vertices.len(), n, |r, c| vertices[r][c] - mean[c]);
    let sv = data.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return true;
    }
    sv.min() <= 1e-9 * smax
}
