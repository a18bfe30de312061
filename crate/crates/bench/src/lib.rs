//! Shared inputs for the benchmarks.

use landau_core::{generate_distribution, DiscreteDistribution, DistributionKind, DistributionSpec, VelocityGrid};

/// The relaxation scenario: two Maxwellians at `+-1.5` on the first axis.
pub fn bimodal(n: usize) -> DiscreteDistribution {
    let spec = DistributionSpec::new(DistributionKind::Bimaxwellian { separation: 3.0, temperature: 0.8 });
    generate_distribution(&spec, &VelocityGrid::new(3, 5.0, n).expect("grid")).expect("bimodal")
}

/// Unit Maxwellian, normalized.
pub fn maxwellian(n: usize) -> DiscreteDistribution {
    let spec = DistributionSpec::normalized(DistributionKind::Maxwellian { temperature: 1.0, mean: vec![] });
    generate_distribution(&spec, &VelocityGrid::new(3, 6.0, n).expect("grid")).expect("maxwellian")
}
