use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;
use crate::lattice::{Configuration, Domain, Region, SiteVector};
use crate::rng::{self, Purpose, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleCondition {
    None,
    /// Site 0 occupied and carrying the tracer.
    TracerAtOrigin,
    /// Tracer at 0 and the rest of `{0,1}^d` empty.
    EventA,
}

/// I.i.d. Bernoulli(ρ) occupancies, then the conditioning pattern imposed.
pub fn sample_bernoulli(
    domain: &Domain,
    rho: f64,
    seed: u64,
    condition: SampleCondition,
) -> Result<Configuration, DynamicsError> {
    sample_bernoulli_with(domain, rho, &mut rng::stream(seed, Purpose::Sample, 0), condition)
}

pub fn sample_bernoulli_with(
    domain: &Domain,
    rho: f64,
    rng: &mut Rng,
    condition: SampleCondition,
) -> Result<Configuration, DynamicsError> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(DynamicsError::InvalidDensity(rho));
    }
    let mut η = Configuration::empty(domain.clone());
    for i in 0..domain.n_sites() {
        if rng.random::<f64>() < rho {
            η.set_index(i, true);
        }
    }
    impose(&mut η, condition)?;
    Ok(η)
}

/// Overwrites the sites fixed by `condition`.
pub fn impose(η: &mut Configuration, condition: SampleCondition) -> Result<(), DynamicsError> {
    let d = η.dim();
    let origin = SiteVector::zero(d);
    if η.domain().resolve(&origin).is_none() {
        return Err(DynamicsError::OriginOutside);
    }
    match condition {
        SampleCondition::None => {}
        SampleCondition::TracerAtOrigin => {
            η.set(&origin, true)?;
            η.set_tracer(Some(origin))?;
        }
        SampleCondition::EventA => {
            let cube = Region::boxed(origin.clone(), vec![2; d]);
            if cube.sites().iter().any(|x| η.domain().resolve(x).is_none()) {
                return Err(DynamicsError::OriginOutside);
            }
            η.set_tracer(None)?;
            for x in cube.sites() {
                η.set(&x, x.is_zero())?;
            }
            η.set_tracer(Some(origin))?;
        }
    }
    Ok(())
}
