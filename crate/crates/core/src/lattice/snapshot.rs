//! JSON snapshot format.
//!
//! ```json
//! {"dims":[4,4],"boundary":"torus","occupancy":"<base64>","tracer":[0,0],"displacement":[0,0]}
//! ```
//!
//! `occupancy` is the base64 (standard alphabet, padded) encoding of the
//! bit-packed field: site with linear index `k` (axis 0 fastest) is bit
//! `k % 8` of byte `k / 8`. Fixed boxes whose origin is not the zero vector
//! carry an extra `origin` key.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{BitField, Boundary, Configuration, Domain, SiteVector};
use crate::error::LatticeError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub dims: Vec<usize>,
    pub boundary: String,
    pub occupancy: String,
    pub tracer: Option<Vec<i64>>,
    pub displacement: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Vec<i64>>,
}

impl Configuration {
    pub fn to_snapshot(&self) -> Snapshot {
        let dom = self.domain();
        let boundary = match dom.boundary() {
            Boundary::Torus => "torus",
            Boundary::Fixed(true) => "fixed1",
            Boundary::Fixed(false) => "fixed0",
        };
        Snapshot {
            dims: dom.dims().to_vec(),
            boundary: boundary.to_string(),
            occupancy: STANDARD.encode(self.bits().to_bytes()),
            tracer: self.tracer().map(|t| t.coords().to_vec()),
            displacement: self.displacement().map(|t| t.coords().to_vec()),
            origin: (!dom.origin().is_zero()).then(|| dom.origin().coords().to_vec()),
        }
    }

    pub fn from_snapshot(s: &Snapshot) -> Result<Configuration, LatticeError> {
        let bad = |m: &str| LatticeError::InvalidSnapshot(m.to_string());
        if s.dims.is_empty() || s.dims.contains(&0) {
            return Err(bad("dims must be non-empty and positive"));
        }
        let d = s.dims.len();
        let origin = match &s.origin {
            Some(o) if o.len() == d => SiteVector::new(o.clone()),
            Some(_) => return Err(bad("origin dimension mismatch")),
            None => SiteVector::zero(d),
        };
        let domain = match s.boundary.as_str() {
            "torus" if s.origin.is_none() => Domain::torus(s.dims.clone()),
            "torus" => return Err(bad("torus snapshots carry no origin")),
            "fixed1" => Domain::fixed(origin, s.dims.clone(), true),
            "fixed0" => Domain::fixed(origin, s.dims.clone(), false),
            other => return Err(bad(&format!("unknown boundary {other:?}"))),
        };
        let bytes = STANDARD
            .decode(&s.occupancy)
            .map_err(|e| bad(&format!("occupancy: {e}")))?;
        let bits = BitField::from_bytes(domain.n_sites(), &bytes)
            .ok_or_else(|| bad("occupancy length does not match dims"))?;
        let mut c = Configuration::from_bits(domain, bits)?;
        if let Some(t) = &s.tracer {
            if t.len() != d {
                return Err(bad("tracer dimension mismatch"));
            }
            c.set_tracer(Some(SiteVector::new(t.clone())))?;
        }
        match &s.displacement {
            Some(v) if v.len() == d => c.set_displacement(Some(SiteVector::new(v.clone()))),
            Some(_) => return Err(bad("displacement dimension mismatch")),
            None => c.set_displacement(None),
        }
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_snapshot()).expect("snapshot serializes")
    }

    pub fn from_json(s: &str) -> Result<Configuration, LatticeError> {
        let snap: Snapshot =
            serde_json::from_str(s).map_err(|e| LatticeError::InvalidSnapshot(e.to_string()))?;
        Configuration::from_snapshot(&snap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_encoding() {
        let mut c = Configuration::torus(vec![3, 3]);
        c.set(&SiteVector::from([0, 0]), true).unwrap();
        c.set(&SiteVector::from([2, 2]), true).unwrap();
        c.set_tracer(Some(SiteVector::from([0, 0]))).unwrap();
        // Bits 0 and 8 set: bytes [0x01, 0x01].
        assert_eq!(
            c.to_json(),
            r#"{"dims":[3,3],"boundary":"torus","occupancy":"AQE=","tracer":[0,0],"displacement":[0,0]}"#
        );
        assert_eq!(Configuration::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn fixed_box_with_origin_roundtrips() {
        let mut c = Configuration::empty(Domain::fixed(SiteVector::from([-1, 2]), vec![2, 3], true));
        c.set(&SiteVector::from([0, 4]), true).unwrap();
        let j = c.to_json();
        assert!(j.contains("\"fixed1\"") && j.contains("\"origin\":[-1,2]"));
        assert_eq!(Configuration::from_json(&j).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Configuration::from_json(r#"{"dims":[3],"boundary":"torus","occupancy":"AAAA","tracer":null,"displacement":null}"#).is_err());
        assert!(Configuration::from_json(r#"{"dims":[3],"boundary":"mobius","occupancy":"AA==","tracer":null,"displacement":null}"#).is_err());
        // Tracer on an empty site.
        assert!(Configuration::from_json(r#"{"dims":[3],"boundary":"torus","occupancy":"AA==","tracer":[1],"displacement":null}"#).is_err());
    }
}
