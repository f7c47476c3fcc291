use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::edge::RenormalizedField;
use super::flow::clusters;
use crate::error::RenormError;
use crate::rng::{self, Purpose};
use crate::tracer::{DisplacementSeries, SeriesParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxWalkParams {
    pub sample_times: Vec<f64>,
    pub n_replicas: usize,
    pub seed: u64,
    /// Minimum size of the largest cluster relative to the window.
    pub min_cluster_fraction: f64,
    /// Start every replica here instead of in the largest cluster.
    pub forced_start: Option<Vec<i64>>,
}

impl AuxWalkParams {
    pub fn new(sample_times: Vec<f64>, n_replicas: usize, seed: u64) -> Self {
        AuxWalkParams {
            sample_times,
            n_replicas,
            seed,
            min_cluster_fraction: 0.1,
            forced_start: None,
        }
    }
}

/// Continuous-time walk on the renormalised torus jumping across each open
/// bond at rate 1. Displacements are unwrapped and in renormalised units.
/// Replica `r` uses stream `(seed, Walk, r)` and, unless a start is forced,
/// starts at a uniform vertex of the largest open cluster.
pub fn aux_walk(field: &RenormalizedField, p: &AuxWalkParams) -> Result<DisplacementSeries, RenormError> {
    let d = field.dim();
    let report = clusters(field);
    let starts: Vec<usize> = match &p.forced_start {
        Some(c) => {
            if c.len() != d {
                return Err(RenormError::InvalidInput("forced start has the wrong dimension".into()));
            }
            vec![field.index(c)]
        }
        None => {
            let threshold = (p.min_cluster_fraction * field.n_vertices() as f64).ceil() as usize;
            if report.largest_size < threshold.max(1) {
                return Err(RenormError::NotPercolating {
                    largest: report.largest_size,
                    threshold,
                });
            }
            report.members(report.largest_label)
        }
    };
    let mut series = DisplacementSeries::new(
        p.sample_times.clone(),
        d,
        SeriesParams {
            source: "aux_walk".into(),
            d,
            s: None,
            rho: None,
            dims: field.cells.clone(),
            seed: p.seed,
            streams: (0..p.n_replicas as u64)
                .map(|r| rng::stream_id(Purpose::Walk, r))
                .collect(),
        },
    )?;
    // Open directions per vertex, as (axis, sign) pairs.
    let moves: Vec<Vec<(usize, i64)>> = (0..field.n_vertices())
        .map(|v| {
            (0..d)
                .flat_map(|a| [(a, 1), (a, -1)])
                .filter(|&(a, s)| field.open(v, a, s))
                .collect()
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..p.n_replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(p.seed, Purpose::Walk, r as u64);
            let mut v = starts[rng.random_range(0..starts.len())];
            let mut pos = vec![0i64; d];
            let mut out = Vec::with_capacity(p.sample_times.len() * d);
            // Holding time at v is Exp(number of open bonds at v).
            let schedule = |v: usize, t: f64, rng: &mut rng::Rng| match moves[v].len() {
                0 => f64::INFINITY,
                k => {
                    let e: f64 = Exp1.sample(rng);
                    t + e / k as f64
                }
            };
            let mut next_jump = schedule(v, 0.0, &mut rng);
            for &ts in &p.sample_times {
                while next_jump <= ts {
                    let opts = &moves[v];
                    let (a, s) = opts[rng.random_range(0..opts.len())];
                    v = field.step(v, a, s);
                    pos[a] += s;
                    next_jump = schedule(v, next_jump, &mut rng);
                }
                out.extend(pos.iter().map(|&c| c as f64));
            }
            out
        })
        .collect();
    for row in rows {
        series.push_replica(&row)?;
    }
    Ok(series)
}
