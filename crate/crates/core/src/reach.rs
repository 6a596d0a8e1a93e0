//! Reachability drivers.
//!
//! One step of the computation bounds every template direction against the
//! image of the current bundle: for each member parallelotope, the
//! direction's dot product with the dynamics is composed into unit-box
//! coordinates and bounded by the Bernstein enclosure; across members the
//! least upper bound and greatest lower bound win. The static driver feeds
//! a fixed direction collection to every step; the dynamic driver grows new
//! template sets per step from a local linear fit and from PCA of
//! propagated support points, retiring them when their lifespan lapses.

use crate::bernstein;
use crate::geometry::{Bundle, GeometryError, Parallelotope};
use crate::poly::{MultiPoly, PolyError};
use crate::templates::{
    approx_linear_trans, assemble_active_templates, get_support_points, pca_directions,
    propagate_points, update_linapp_template, TemplateOrigin, TemplateSet,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Slack allowed before a crossed bound pair is treated as a soundness bug
/// rather than floating-point noise.
const BOUND_CROSS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(
        "template direction {index}: lower bound {lower} exceeds upper bound {upper}; \
         this violates the transform soundness guarantee"
    )]
    BoundsCrossed { index: usize, lower: f64, upper: f64 },
    #[error(
        "overapproximation diverged: bounds are no longer finite \
         (the set blew up past floating-point range)"
    )]
    Diverged,
}

#[derive(Debug, Error)]
pub enum ReachError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: TransformError,
    },
}

impl ReachError {
    /// True for failures that indicate an internal soundness bug rather
    /// than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            ReachError::Step {
                source: TransformError::BoundsCrossed { .. },
                ..
            }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachMode {
    Static,
    Dynamic,
}

/// Configuration for one reachability run.
#[derive(Debug, Clone)]
pub struct ReachConfig {
    pub steps: usize,
    pub mode: ReachMode,
    pub l_lin: usize,
    pub l_pca: usize,
    pub static_sets: Vec<TemplateSet>,
    pub subdivision_depth: u32,
    pub rng_seed: u64,
}

impl ReachConfig {
    pub fn static_mode(steps: usize, static_sets: Vec<TemplateSet>) -> Self {
        Self {
            steps,
            mode: ReachMode::Static,
            l_lin: 0,
            l_pca: 0,
            static_sets,
            subdivision_depth: 0,
            rng_seed: 0,
        }
    }

    pub fn dynamic_mode(steps: usize, l_lin: usize, l_pca: usize) -> Self {
        Self {
            steps,
            mode: ReachMode::Dynamic,
            l_lin,
            l_pca,
            static_sets: Vec::new(),
            subdivision_depth: 0,
            rng_seed: 0,
        }
    }

    fn validate(&self) -> Result<(), ReachError> {
        if self.mode == ReachMode::Dynamic && self.l_lin + self.l_pca == 0 {
            return Err(ReachError::Config(
                "dynamic mode needs l_lin + l_pca >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Warning attached to a step (currently only linear-fit fallbacks).
#[derive(Debug, Clone)]
pub struct ReachEvent {
    pub step: usize,
    pub message: String,
}

/// Step-indexed reachable-set overapproximations plus volume estimates.
///
/// Index 0 holds the initial bundle, so both vectors have `steps + 1`
/// entries.
#[derive(Debug, Clone)]
pub struct Flowpipe {
    pub bundles: Vec<Bundle>,
    pub volumes: Vec<f64>,
    pub events: Vec<ReachEvent>,
}

impl Flowpipe {
    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub fn steps(&self) -> usize {
        self.bundles.len() - 1
    }
}

/// Sound image of a bundle under the dynamics, bounded along every row of
/// every given template set.
///
/// Per direction and per member, the upper bound comes from the Bernstein
/// enclosure of the composed objective over the unit box (optionally
/// subdivided); the final offsets take the minimum upper and maximum lower
/// bound across members. The output has one parallelotope per template set.
pub fn transform_bundle(
    dynamics: &[MultiPoly],
    bundle: &Bundle,
    sets: &[TemplateSet],
    subdivision_depth: u32,
) -> Result<Bundle, TransformError> {
    let n = bundle.dim();
    assert_eq!(dynamics.len(), n, "dynamics dimension mismatch");

    let reps = bundle
        .members()
        .iter()
        .map(|p| p.generator_rep())
        .collect::<Result<Vec<_>, _>>()?;
    let frames: Vec<(DVector<f64>, DMatrix<f64>)> = reps
        .iter()
        .map(|rep| (rep.anchor.clone(), rep.generator_matrix()))
        .collect();

    let directions: Vec<(usize, usize)> = sets
        .iter()
        .enumerate()
        .flat_map(|(si, set)| (0..set.dim()).map(move |ri| (si, ri)))
        .collect();

    // Independent per-direction bound computations; order is preserved by
    // the indexed collect, so results do not depend on thread count.
    let bounds: Vec<Result<(f64, f64), PolyError>> = directions
        .par_iter()
        .map(|&(si, ri)| {
            let dir = sets[si].dirs().row(ri);
            let objective = MultiPoly::linear_combination(
                dir.transpose().as_slice(),
                dynamics,
            )?;
            let mut lower = f64::NEG_INFINITY;
            let mut upper = f64::INFINITY;
            for (anchor, gen) in &frames {
                let composed = objective.compose_affine(anchor, gen)?;
                let (lo, hi) = if subdivision_depth == 0 {
                    bernstein::opt_box_range(&composed)
                } else {
                    bernstein::opt_box_range_subdivided(&composed, subdivision_depth)
                };
                upper = upper.min(hi);
                lower = lower.max(lo);
            }
            Ok((lower, upper))
        })
        .collect();

    let mut members = Vec::with_capacity(sets.len());
    let mut cursor = 0;
    for set in sets {
        let m = set.dim();
        let mut lo = DVector::zeros(m);
        let mut hi = DVector::zeros(m);
        for i in 0..m {
            let (mut l, u) = bounds[cursor + i].clone()?;
            if !l.is_finite() || !u.is_finite() {
                return Err(TransformError::Diverged);
            }
            if l > u {
                if l - u > BOUND_CROSS_TOL {
                    return Err(TransformError::BoundsCrossed {
                        index: cursor + i,
                        lower: l,
                        upper: u,
                    });
                }
                l = u;
            }
            lo[i] = l;
            hi[i] = u;
        }
        cursor += m;
        members.push(Parallelotope::new(set.dirs().clone(), lo, hi)?);
    }
    Ok(Bundle::new(members)?)
}

fn axis_set_of(p0: &Parallelotope) -> Result<TemplateSet, TransformError> {
    let normalized = crate::geometry::normalized_copy(p0.template())?;
    TemplateSet::new(normalized, TemplateOrigin::Axis, 0)
        .map_err(|e| TransformError::Geometry(GeometryError::Numerical(e.to_string())))
}

/// Tightest parallelotope with the given directions around a bundle, via
/// one LP pair per direction.
fn fit_to_bundle(set: &TemplateSet, q: &Bundle) -> Result<Parallelotope, TransformError> {
    let n = set.dim();
    let mut lo = DVector::zeros(n);
    let mut hi = DVector::zeros(n);
    for i in 0..n {
        let d = set.dirs().row(i).transpose();
        hi[i] = q.maximize_direction(&d)?.1;
        lo[i] = -q.maximize_direction(&(-&d))?.1;
        if lo[i] > hi[i] {
            // LP round-off on flat directions.
            let mid = 0.5 * (lo[i] + hi[i]);
            lo[i] = mid;
            hi[i] = mid;
        }
    }
    Ok(Parallelotope::new(set.dirs().clone(), lo, hi)?)
}

/// Reachability with a fixed template collection (the axis set plus any
/// configured static sets) applied at every step.
pub fn reach_static(
    dynamics: &[MultiPoly],
    p0: &Parallelotope,
    cfg: &ReachConfig,
) -> Result<Flowpipe, ReachError> {
    cfg.validate()?;
    let at_step = |step: usize| move |source: TransformError| ReachError::Step { step, source };

    let axis = axis_set_of(p0).map_err(at_step(0))?;
    let mut sets = vec![axis];
    sets.extend(cfg.static_sets.iter().cloned());

    let q0_members = {
        let seed_bundle = Bundle::new(vec![p0.clone()])
            .map_err(|e| at_step(0)(e.into()))?;
        let mut members = vec![p0.clone()];
        for set in &sets[1..] {
            members.push(fit_to_bundle(set, &seed_bundle).map_err(at_step(0))?);
        }
        members
    };
    let mut bundle = Bundle::new(q0_members).map_err(|e| at_step(0)(e.into()))?;

    let mut flowpipe = Flowpipe {
        bundles: Vec::with_capacity(cfg.steps + 1),
        volumes: Vec::with_capacity(cfg.steps + 1),
        events: Vec::new(),
    };
    flowpipe
        .volumes
        .push(bundle.volume_estimate().map_err(|e| at_step(0)(e.into()))?);
    flowpipe.bundles.push(bundle.clone());

    for k in 1..=cfg.steps {
        bundle = transform_bundle(dynamics, &bundle, &sets, cfg.subdivision_depth)
            .map_err(at_step(k))?;
        flowpipe
            .volumes
            .push(bundle.volume_estimate().map_err(|e| at_step(k)(e.into()))?);
        flowpipe.bundles.push(bundle.clone());
    }
    Ok(flowpipe)
}

/// Automatic reachability with dynamically generated templates.
///
/// Each step fits a linear map to the support points and their images,
/// updates the running template by its inverse, and derives fresh linear
/// and PCA template sets; sets stay active for their configured lifespans
/// alongside the permanent axis set.
pub fn reach_dynamic(
    dynamics: &[MultiPoly],
    p0: &Parallelotope,
    cfg: &ReachConfig,
) -> Result<Flowpipe, ReachError> {
    cfg.validate()?;
    let at_step = |step: usize| move |source: TransformError| ReachError::Step { step, source };

    let axis = axis_set_of(p0).map_err(at_step(0))?;
    let mut running = TemplateSet::new(axis.dirs().clone(), TemplateOrigin::LinApp, 0)
        .expect("axis directions are valid");
    let mut history: Vec<TemplateSet> = Vec::new();

    let mut bundle = Bundle::new(vec![p0.clone()]).map_err(|e| at_step(0)(e.into()))?;
    let mut flowpipe = Flowpipe {
        bundles: Vec::with_capacity(cfg.steps + 1),
        volumes: Vec::with_capacity(cfg.steps + 1),
        events: Vec::new(),
    };
    flowpipe
        .volumes
        .push(bundle.volume_estimate().map_err(|e| at_step(0)(e.into()))?);
    flowpipe.bundles.push(bundle.clone());

    for k in 1..=cfg.steps {
        let support = get_support_points(&bundle).map_err(|e| at_step(k)(e.into()))?;
        let propagated =
            propagate_points(support.points(), dynamics).map_err(|e| at_step(k)(e.into()))?;
        if propagated
            .iter()
            .any(|p| !p.iter().all(|v| v.is_finite()))
        {
            return Err(at_step(k)(TransformError::Diverged));
        }

        if cfg.l_lin >= 1 {
            let a = approx_linear_trans(support.points(), &propagated);
            let (updated, fell_back) = update_linapp_template(&running, &a, k);
            if fell_back {
                flowpipe.events.push(ReachEvent {
                    step: k,
                    message: "near-singular linear fit; reusing previous linear-approximation \
                              template directions"
                        .into(),
                });
            }
            running = updated;
            history.push(running.clone());
        }
        if cfg.l_pca >= 1 {
            history.push(pca_directions(&propagated, k));
        }

        let active = assemble_active_templates(&history, &axis, k, cfg.l_lin, cfg.l_pca);
        bundle = transform_bundle(dynamics, &bundle, &active, cfg.subdivision_depth)
            .map_err(at_step(k))?;
        flowpipe
            .volumes
            .push(bundle.volume_estimate().map_err(|e| at_step(k)(e.into()))?);
        flowpipe.bundles.push(bundle.clone());

        // Only the still-active window is needed going forward.
        let keep_from = k.saturating_sub(cfg.l_lin.max(cfg.l_pca));
        history.retain(|t| t.birth_step() > keep_from);
    }
    Ok(flowpipe)
}

/// Runs whichever driver the configuration selects.
pub fn reach(
    dynamics: &[MultiPoly],
    p0: &Parallelotope,
    cfg: &ReachConfig,
) -> Result<Flowpipe, ReachError> {
    match cfg.mode {
        ReachMode::Static => reach_static(dynamics, p0, cfg),
        ReachMode::Dynamic => reach_dynamic(dynamics, p0, cfg),
    }
}

/// Trajectory `x_0, f(x_0), f(f(x_0)), ...` of length `steps + 1`.
pub fn simulate(
    dynamics: &[MultiPoly],
    x0: &DVector<f64>,
    steps: usize,
) -> Result<Vec<DVector<f64>>, PolyError> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    out.push(x.clone());
    for _ in 0..steps {
        let mut next = DVector::zeros(dynamics.len());
        for (i, p) in dynamics.iter().enumerate() {
            next[i] = p.eval(x.as_slice())?;
        }
        x = next;
        out.push(x.clone());
    }
    Ok(out)
}

/// Deterministic uniform samples from a box; zero-width coordinates stay
/// pinned at their value.
pub fn sample_box(box_: &[(f64, f64)], count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            DVector::from_fn(box_.len(), |i, _| {
                let (lo, hi) = box_[i];
                if hi > lo {
                    rng.random_range(lo..hi)
                } else {
                    lo
                }
            })
        })
        .collect()
}
