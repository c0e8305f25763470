//! Common contract for anything that maps points to archetype mixtures and
//! back.

use crate::aanet::AAnetNetwork;
use crate::error::{Error, Result};
use crate::linear_aa::{transform_against, PCHAFactors, PchaOnAe};
use crate::matrix::DataMatrix;

pub trait ArchetypalModel {
    fn k(&self) -> usize;
    fn feature_count(&self) -> usize;
    fn is_trained(&self) -> bool;
    /// Points to mixtures, n x k with rows (approximately) on the simplex.
    fn encode(&self, x: &DataMatrix) -> Result<DataMatrix>;
    /// Mixtures to feature space, n x m.
    fn decode(&self, mixtures: &DataMatrix) -> Result<DataMatrix>;
    /// The k decoded archetypes, k x m.
    fn archetypes(&self) -> Result<DataMatrix>;
}

impl ArchetypalModel for AAnetNetwork {
    fn k(&self) -> usize {
        AAnetNetwork::k(self)
    }

    fn feature_count(&self) -> usize {
        AAnetNetwork::feature_count(self)
    }

    fn is_trained(&self) -> bool {
        AAnetNetwork::is_trained(self)
    }

    fn encode(&self, x: &DataMatrix) -> Result<DataMatrix> {
        AAnetNetwork::encode(self, x)
    }

    fn decode(&self, mixtures: &DataMatrix) -> Result<DataMatrix> {
        AAnetNetwork::decode(self, mixtures)
    }

    fn archetypes(&self) -> Result<DataMatrix> {
        self.get_archetypes()
    }
}

impl ArchetypalModel for PCHAFactors {
    fn k(&self) -> usize {
        PCHAFactors::k(self)
    }

    fn feature_count(&self) -> usize {
        PCHAFactors::feature_count(self)
    }

    fn is_trained(&self) -> bool {
        true
    }

    fn encode(&self, x: &DataMatrix) -> Result<DataMatrix> {
        transform_against(&self.archetypes, x)
    }

    fn decode(&self, mixtures: &DataMatrix) -> Result<DataMatrix> {
        if mixtures.cols() != self.k() {
            return Err(Error::invalid(format!(
                "decode: mixtures have width {}, expected k={}",
                mixtures.cols(),
                self.k()
            )));
        }
        mixtures.matmul(&self.archetypes)
    }

    fn archetypes(&self) -> Result<DataMatrix> {
        Ok(self.archetypes.clone())
    }
}

impl ArchetypalModel for PchaOnAe {
    fn k(&self) -> usize {
        self.latent.k()
    }

    fn feature_count(&self) -> usize {
        self.ae.feature_count()
    }

    fn is_trained(&self) -> bool {
        self.ae.is_trained()
    }

    fn encode(&self, x: &DataMatrix) -> Result<DataMatrix> {
        let codes = self.ae.encode(x)?;
        transform_against(&self.latent.archetypes, &codes)
    }

    fn decode(&self, mixtures: &DataMatrix) -> Result<DataMatrix> {
        if mixtures.cols() != self.k() {
            return Err(Error::invalid(format!(
                "decode: mixtures have width {}, expected k={}",
                mixtures.cols(),
                self.k()
            )));
        }
        let latent_points = mixtures.matmul(&self.latent.archetypes)?;
        self.ae.decode(&latent_points)
    }

    fn archetypes(&self) -> Result<DataMatrix> {
        Ok(self.archetypes.clone())
    }
}
