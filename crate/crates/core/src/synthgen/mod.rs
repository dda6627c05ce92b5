//! Synthetic networks: layered random generators, anonymized replicas of an
//! existing network, and imputation of unobserved contracting shares.

mod anonymize;
mod generate;
mod impute;

use rand::Rng;
use thiserror::Error;

pub use anonymize::{anonymize_rewire, AnonymizationConfig};
pub use generate::{
    generate_random_network, random_general_network, random_snapshot_sequence, AssumptionMode, GeneralGraphSpec,
    GeneratorSpec, Law, RoleFractions, SnapshotSpec,
};
pub use impute::{impute_unobserved, segment_medians, ImputationEntry, ImputationReport, DUMMY_PREFIX};

use crate::netgraph::NetworkError;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("network has a directed cycle")]
    NotADag,
    #[error("stub matching failed after {attempts} attempts")]
    StubMatchingFailed { attempts: usize },
    #[error("obligee '{obligee}' has a weight deficit but no principal with a segment_type")]
    NoSegmentInformation { obligee: String },
    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Laplace(0, scale) by inverse CDF. `scale = 0` yields 0.
pub fn laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn laplace_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| laplace(&mut rng, 2.0)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let mad = xs.iter().map(|x| x.abs()).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.03);
        assert!((mad - 2.0).abs() < 0.03);
        assert_eq!(laplace(&mut rng, 0.0), 0.0);
    }
}
