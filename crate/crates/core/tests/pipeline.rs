use landau_core::functionals::{functional_report, moments, DissipationForm, FunctionalReport};
use landau_core::solver::{run, SolverConfig};
use landau_core::{generate_distribution, DiscreteDistribution, DistributionKind, DistributionSpec, PsiSpec, VelocityGrid};

fn bimodal(n: usize) -> DiscreteDistribution {
    let spec = DistributionSpec::new(DistributionKind::Bimaxwellian { separation: 3.0, temperature: 0.8 });
    generate_distribution(&spec, &VelocityGrid::new(3, 5.0, n).unwrap()).unwrap()
}

#[test]
fn generate_evaluate_and_relax() {
    let f0 = bimodal(12);
    let before = functional_report(&f0, &PsiSpec::Coulomb, DissipationForm::Projected).unwrap();
    assert!(before.mass > 0.0);

    let mut cfg = SolverConfig::new(PsiSpec::Coulomb, 4);
    cfg.moment_orders = vec![0.0, 1.0];
    let (series, f1) = run(&f0, &cfg).unwrap();
    assert!(series.invariants_held());
    assert_eq!(series.records.len(), 5);

    let (m0, m1) = (moments(&f0, &[]), moments(&f1, &[]));
    assert!((m0.mass - m1.mass).abs() <= 1e-13 * m0.mass);
    assert!((m0.energy - m1.energy).abs() <= 1e-12 * m0.energy);
    for (a, b) in m0.momentum.iter().zip(&m1.momentum) {
        assert!((a - b).abs() <= 1e-12 * (2.0 * m0.mass * m0.energy).sqrt());
    }
    assert!(m1.entropy < m0.entropy);
    let first = &series.records[0];
    assert_eq!(first.moments.len(), 2);
    assert!((first.moments[0].1 - first.mass).abs() <= 1e-12 * first.mass);
}

#[test]
fn states_and_reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = bimodal(8);
    let path = dir.path().join("state.json");
    f.write_json(&path).unwrap();
    let back = DiscreteDistribution::read_json(&path).unwrap();
    assert_eq!(back.values(), f.values());
    assert_eq!(back.grid().nodes_per_axis(), 8);

    let spec = DistributionSpec::new(DistributionKind::CustomFile { path: path.clone() });
    let same = generate_distribution(&spec, f.grid()).unwrap();
    assert_eq!(same.values(), f.values());

    let report = functional_report(&f, &PsiSpec::PowerLaw { gamma: -2.0 }, DissipationForm::Pairdiff).unwrap();
    let text = serde_json::to_string(&report).unwrap();
    let parsed: FunctionalReport = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, report);
}
