use std::sync::Arc;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{sample_bernoulli_with, ConstraintSpec, KmcEngine, SampleCondition, TorusGraph};
use crate::error::TracerError;
use crate::lattice::{Configuration, Domain};
use crate::rng::{self, Purpose};
use crate::stats::mean_stderr;

/// Provenance of a displacement series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    pub source: String,
    pub d: usize,
    pub s: Option<usize>,
    pub rho: Option<f64>,
    pub dims: Vec<usize>,
    pub seed: u64,
    /// RNG stream id of each replica.
    pub streams: Vec<u64>,
}

/// Unwrapped displacement samples `X_t` for a set of replicas sharing the
/// same sample times. `times[0]` is 0 and every replica starts at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementSeries {
    times: Vec<f64>,
    d: usize,
    n_replicas: usize,
    /// Replica-major, then time, then axis.
    data: Vec<f64>,
    pub params: SeriesParams,
    pub warnings: Vec<String>,
}

impl DisplacementSeries {
    pub fn new(times: Vec<f64>, d: usize, params: SeriesParams) -> Result<Self, TracerError> {
        check_times(&times)?;
        if d == 0 {
            return Err(TracerError::InvalidInput("d must be >= 1".into()));
        }
        Ok(DisplacementSeries {
            times,
            d,
            n_replicas: 0,
            data: Vec::new(),
            params,
            warnings: Vec::new(),
        })
    }

    /// Appends a replica given as `times.len() * d` values, time-major.
    pub fn push_replica(&mut self, values: &[f64]) -> Result<(), TracerError> {
        if values.len() != self.times.len() * self.d {
            return Err(TracerError::InvalidInput(format!(
                "replica has {} values, expected {}",
                values.len(),
                self.times.len() * self.d
            )));
        }
        if values[..self.d].iter().any(|&v| v != 0.0) {
            return Err(TracerError::InvalidInput("displacement at time 0 must vanish".into()));
        }
        self.data.extend_from_slice(values);
        self.n_replicas += 1;
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_replicas(&self) -> usize {
        self.n_replicas
    }

    #[inline]
    pub fn get(&self, replica: usize, t: usize, axis: usize) -> f64 {
        self.data[(replica * self.times.len() + t) * self.d + axis]
    }

    pub fn replica(&self, r: usize) -> &[f64] {
        let w = self.times.len() * self.d;
        &self.data[r * w..(r + 1) * w]
    }

    /// Mean and standard error of `X_t[a]²` across replicas, per sample time.
    pub fn msd(&self, axis: usize) -> Vec<(f64, f64)> {
        (0..self.times.len())
            .map(|t| {
                let v: Vec<f64> = (0..self.n_replicas)
                    .map(|r| self.get(r, t, axis).powi(2))
                    .collect();
                mean_stderr(&v)
            })
            .collect()
    }

    pub fn max_abs_displacement(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_times(times: &[f64]) -> Result<(), TracerError> {
    if times.first() != Some(&0.0) {
        return Err(TracerError::InvalidInput("sample times must start at 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(TracerError::InvalidInput("sample times must be finite and increasing".into()));
    }
    Ok(())
}

/// `0, t_max/n, 2 t_max/n, ..., t_max`.
pub fn linear_times(t_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaggedMethod {
    /// Tagged particle carried along by the lab-frame exchange dynamics.
    Joint,
    /// Environment re-centred on the tracer after each tracer jump, with a
    /// displacement accumulator.
    Recentered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedRunParams {
    pub rho: f64,
    pub spec: ConstraintSpec,
    pub dims: Vec<usize>,
    pub sample_times: Vec<f64>,
    pub n_replicas: usize,
    pub seed: u64,
    pub method: TaggedMethod,
}

/// Tagged-particle runs from `μ(· | η(0) = 1)` with the tracer at 0.
/// Replica `r` draws everything from stream `(seed, Replica, r)`.
pub fn tagged_run(p: &TaggedRunParams) -> Result<DisplacementSeries, TracerError> {
    if !(p.rho > 0.0 && p.rho < 1.0) {
        return Err(TracerError::InvalidInput(format!("density must lie in (0,1), got {}", p.rho)));
    }
    if p.spec.d != p.dims.len() {
        return Err(TracerError::InvalidInput("spec dimension does not match dims".into()));
    }
    check_times(&p.sample_times)?;
    let domain = Domain::torus(p.dims.clone());
    let graph = Arc::new(TorusGraph::new(&domain)?);
    let streams: Vec<u64> = (0..p.n_replicas as u64)
        .map(|r| rng::stream_id(Purpose::Replica, r))
        .collect();
    let mut series = DisplacementSeries::new(
        p.sample_times.clone(),
        p.spec.d,
        SeriesParams {
            source: match p.method {
                TaggedMethod::Joint => "joint".into(),
                TaggedMethod::Recentered => "recentered".into(),
            },
            d: p.spec.d,
            s: Some(p.spec.s),
            rho: Some(p.rho),
            dims: p.dims.clone(),
            seed: p.seed,
            streams,
        },
    )?;
    let rows: Vec<Result<Vec<f64>, TracerError>> = (0..p.n_replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(p.seed, Purpose::Replica, r as u64);
            let η = sample_bernoulli_with(&domain, p.rho, &mut rng, SampleCondition::TracerAtOrigin)?;
            match p.method {
                TaggedMethod::Joint => Ok(joint_replica(&graph, &η, p, &mut rng)?),
                TaggedMethod::Recentered => Ok(recentered_replica(&graph, &η, p, &mut rng)?),
            }
        })
        .collect();
    for row in rows {
        series.push_replica(&row?)?;
    }
    let quarter = p.dims.iter().min().copied().unwrap_or(0) as f64 / 4.0;
    let max = series.max_abs_displacement();
    if max > quarter {
        series.warnings.push(format!(
            "max |X_t| = {max} exceeds a quarter of the torus side ({quarter}); finite-size effects likely"
        ));
    }
    Ok(series)
}

fn joint_replica(
    graph: &Arc<TorusGraph>,
    η: &Configuration,
    p: &TaggedRunParams,
    rng: &mut rng::Rng,
) -> Result<Vec<f64>, TracerError> {
    let mut engine = KmcEngine::with_graph(graph.clone(), η, p.spec)?;
    let mut out = Vec::with_capacity(p.sample_times.len() * p.spec.d);
    for &t in &p.sample_times {
        engine.advance_to(t, rng, |_| {});
        out.extend(engine.displacement().iter().map(|&v| v as f64));
    }
    Ok(out)
}

fn recentered_replica(
    graph: &Arc<TorusGraph>,
    η: &Configuration,
    p: &TaggedRunParams,
    rng: &mut rng::Rng,
) -> Result<Vec<f64>, TracerError> {
    let mut engine = KmcEngine::with_graph(graph.clone(), η, p.spec)?;
    let mut out = Vec::with_capacity(p.sample_times.len() * p.spec.d);
    for &t in &p.sample_times {
        while engine.step_until(t, rng).is_some() {
            if engine.tracer_site() != Some(0) {
                // The tracer left the origin: shift the frame so it sits at 0
                // again. The engine is rebuilt from the translated field.
                let now = engine.time();
                let shifted = engine.configuration().recentered()?;
                engine = KmcEngine::with_graph(graph.clone(), &shifted, p.spec)?;
                engine.set_time(now);
            }
        }
        out.extend(engine.displacement().iter().map(|&v| v as f64));
    }
    Ok(out)
}

/// Independent Brownian paths with diffusion constant `d0` per axis:
/// increments are Normal(0, 2 d0 Δt).
pub fn synthetic_brownian(
    d: usize,
    d0: f64,
    times: &[f64],
    n_replicas: usize,
    seed: u64,
) -> Result<DisplacementSeries, TracerError> {
    let mut series = DisplacementSeries::new(
        times.to_vec(),
        d,
        SeriesParams {
            source: "synthetic_brownian".into(),
            d,
            s: None,
            rho: None,
            dims: Vec::new(),
            seed,
            streams: (0..n_replicas as u64)
                .map(|r| rng::stream_id(Purpose::Synthetic, r))
                .collect(),
        },
    )?;
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    for r in 0..n_replicas {
        let mut rng = rng::stream(seed, Purpose::Synthetic, r as u64);
        let mut pos = vec![0.0; d];
        let mut row = Vec::with_capacity(times.len() * d);
        row.extend_from_slice(&pos);
        for w in times.windows(2) {
            let scale = (2.0 * d0 * (w[1] - w[0])).sqrt();
            for v in pos.iter_mut() {
                *v += scale * std.sample(&mut rng);
            }
            row.extend_from_slice(&pos);
        }
        series.push_replica(&row)?;
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_validation() {
        let params = SeriesParams {
            source: "t".into(),
            d: 1,
            s: None,
            rho: None,
            dims: vec![],
            seed: 0,
            streams: vec![],
        };
        assert!(DisplacementSeries::new(vec![1.0, 2.0], 1, params.clone()).is_err());
        let mut s = DisplacementSeries::new(vec![0.0, 1.0], 1, params).unwrap();
        assert!(s.push_replica(&[1.0, 1.0]).is_err());
        s.push_replica(&[0.0, 3.0]).unwrap();
        assert_eq!(s.msd(0)[1].0, 9.0);
    }

    #[test]
    fn both_methods_run() {
        for method in [TaggedMethod::Joint, TaggedMethod::Recentered] {
            let p = TaggedRunParams {
                rho: 0.3,
                spec: ConstraintSpec::new(2, 2).unwrap(),
                dims: vec![8, 8],
                sample_times: linear_times(5.0, 5),
                n_replicas: 3,
                seed: 4,
                method,
            };
            let s = tagged_run(&p).unwrap();
            assert_eq!(s.n_replicas(), 3);
            assert_eq!(s, tagged_run(&p).unwrap());
        }
    }
}
