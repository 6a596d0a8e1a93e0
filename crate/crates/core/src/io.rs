//! Flowpipe output formats.
//!
//! The JSON document and the volume CSV are the tool's data products; both
//! are byte-deterministic for a given flowpipe so that identical runs can
//! be compared verbatim.

use crate::reach::{Flowpipe, ReachConfig, ReachMode};
use serde::Serialize;

#[derive(Serialize)]
struct FlowpipeDoc<'a> {
    model: &'a str,
    config: ConfigDoc,
    steps: Vec<StepDoc>,
    events: Vec<EventDoc<'a>>,
}

#[derive(Serialize)]
struct ConfigDoc {
    mode: &'static str,
    steps: usize,
    l_lin: usize,
    l_pca: usize,
    static_sets: usize,
    subdivision_depth: u32,
    rng_seed: u64,
}

#[derive(Serialize)]
struct StepDoc {
    k: usize,
    parallelotopes: Vec<PtopeDoc>,
    volume: f64,
}

#[derive(Serialize)]
struct PtopeDoc {
    #[serde(rename = "T")]
    template: Vec<Vec<f64>>,
    c_l: Vec<f64>,
    c_u: Vec<f64>,
}

#[derive(Serialize)]
struct EventDoc<'a> {
    step: usize,
    warning: &'a str,
}

/// Renders the flowpipe as its JSON document.
pub fn flowpipe_json(model: &str, cfg: &ReachConfig, fp: &Flowpipe) -> String {
    let doc = FlowpipeDoc {
        model,
        config: ConfigDoc {
            mode: match cfg.mode {
                ReachMode::Static => "static",
                ReachMode::Dynamic => "dynamic",
            },
            steps: cfg.steps,
            l_lin: cfg.l_lin,
            l_pca: cfg.l_pca,
            static_sets: cfg.static_sets.len(),
            subdivision_depth: cfg.subdivision_depth,
            rng_seed: cfg.rng_seed,
        },
        steps: fp
            .bundles
            .iter()
            .enumerate()
            .map(|(k, bundle)| StepDoc {
                k,
                parallelotopes: bundle
                    .members()
                    .iter()
                    .map(|p| PtopeDoc {
                        template: (0..p.dim())
                            .map(|i| p.row(i).iter().copied().collect())
                            .collect(),
                        c_l: p.lower().iter().copied().collect(),
                        c_u: p.upper().iter().copied().collect(),
                    })
                    .collect(),
                volume: fp.volumes[k],
            })
            .collect(),
        events: fp
            .events
            .iter()
            .map(|e| EventDoc {
                step: e.step,
                warning: &e.message,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("flowpipe serialization cannot fail")
}

/// Per-step volume table: header `step,volume`, one row per step.
pub fn volumes_csv(fp: &Flowpipe) -> String {
    let mut out = String::from("step,volume\n");
    for (k, v) in fp.volumes.iter().enumerate() {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}
