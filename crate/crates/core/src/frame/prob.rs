use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::search::{frameability_search, frame_domain, Verdict};
use crate::dynamics::{sample_bernoulli_with, ConstraintSpec, SampleCondition};
use crate::error::FrameError;
use crate::lattice::Region;
use crate::rng::{self, Purpose};
use crate::stats::{wilson_interval, Z95};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameabilityEstimate {
    pub l: usize,
    pub rho: f64,
    pub n: usize,
    pub frameable: usize,
    pub not_frameable: usize,
    pub unknown: usize,
    pub p_frameable: f64,
    pub p_unknown: f64,
    /// 95% Wilson interval on the frameable fraction.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_states_visited: f64,
}

/// Samples `ω ~ Bernoulli(ρ)` on `Λ_L = [0,L]^d` and searches each for a
/// framing path. Sample `k` uses stream `(seed, Sample, k)`. Unknown
/// verdicts count as not frameable in `p_frameable` and are reported apart.
pub fn estimate_frameable_prob(
    rho: f64,
    l: usize,
    spec: &ConstraintSpec,
    n_samples: usize,
    budget: usize,
    seed: u64,
) -> Result<FrameabilityEstimate, FrameError> {
    if l < 1 {
        return Err(FrameError::InvalidInput("L must be >= 1".into()));
    }
    if n_samples == 0 {
        return Err(FrameError::InvalidInput("need at least one sample".into()));
    }
    let region = Region::lambda(spec.d, l);
    let domain = frame_domain(&region)?;
    let results: Vec<Result<(u8, usize), FrameError>> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(seed, Purpose::Sample, k as u64);
            let ω = sample_bernoulli_with(&domain, rho, &mut rng, SampleCondition::None)?;
            let v = frameability_search(&ω, &region, spec, budget)?;
            let class = match v.verdict {
                Verdict::Frameable(_) => 0,
                Verdict::NotFrameable(_) => 1,
                Verdict::Unknown => 2,
            };
            Ok((class, v.stats.states_visited))
        })
        .collect();
    let mut counts = [0usize; 3];
    let mut states = 0usize;
    for r in results {
        let (c, s) = r?;
        counts[c as usize] += 1;
        states += s;
    }
    let n = n_samples;
    let (ci_lo, ci_hi) = wilson_interval(counts[0], n, Z95);
    Ok(FrameabilityEstimate {
        l,
        rho,
        n,
        frameable: counts[0],
        not_frameable: counts[1],
        unknown: counts[2],
        p_frameable: counts[0] as f64 / n as f64,
        p_unknown: counts[2] as f64 / n as f64,
        ci_lo,
        ci_hi,
        mean_states_visited: states as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density_is_always_frameable() {
        let spec = ConstraintSpec::new(2, 2).unwrap();
        let e = estimate_frameable_prob(0.0, 3, &spec, 20, 100, 1).unwrap();
        assert_eq!(e.p_frameable, 1.0);
        assert_eq!(e.unknown, 0);
    }
}
