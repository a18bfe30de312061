use super::*;
use crate::grid::VelocityGrid;
use std::f64::consts::PI;

fn gaussian_at(v: &[f64], center: f64, t: f64) -> f64 {
    let r2: f64 = v.iter().enumerate().map(|(d, x)| if d == 0 { (x - center).powi(2) } else { x * x }).sum();
    (2.0 * PI * t).powf(-(v.len() as f64) / 2.0) * (-r2 / (2.0 * t)).exp()
}

fn maxwellian(n: usize, l: f64) -> DiscreteDistribution {
    DiscreteDistribution::from_fn(VelocityGrid::new(3, l, n).unwrap(), |v| gaussian_at(v, 0.0, 1.0)).unwrap()
}

fn bimodal(n: usize, l: f64) -> DiscreteDistribution {
    DiscreteDistribution::from_fn(VelocityGrid::new(3, l, n).unwrap(), |v| {
        0.5 * gaussian_at(v, 1.5, 0.8) + 0.5 * gaussian_at(v, -1.5, 0.8)
    })
    .unwrap()
}

fn weighted_sums(f: &DiscreteDistribution, q: &[f64]) -> (f64, Vec<f64>, f64, f64) {
    let grid = f.grid();
    let mut p = vec![0.0; 3];
    let mut mom = vec![0.0; 3];
    let (mut mass, mut energy, mut scale) = (0.0, 0.0, 0.0);
    for k in 0..grid.len() {
        grid.point(k, &mut p);
        mass += q[k];
        for d in 0..3 {
            mom[d] += q[k] * p[d];
        }
        energy += q[k] * p.iter().map(|x| x * x).sum::<f64>();
        scale += q[k].abs() * (1.0 + p.iter().map(|x| x * x).sum::<f64>());
    }
    (mass, mom, energy, scale)
}

#[test]
fn operator_conserves_collision_invariants() {
    let f = bimodal(12, 5.0);
    let q = collision_operator(&f, &PsiSpec::Coulomb, CoefficientMethod::Fft).unwrap();
    let (mass, mom, energy, scale) = weighted_sums(&f, &q);
    assert!(scale > 0.0);
    assert!(mass.abs() < 1e-13 * scale);
    for m in mom {
        assert!(m.abs() < 1e-13 * scale);
    }
    assert!(energy.abs() < 1e-13 * scale);
}

#[test]
fn dissipation_is_entropy_production() {
    let f = bimodal(10, 5.0);
    let op = CollisionOperator::new(f.grid(), &PsiSpec::Coulomb, CoefficientMethod::Fft).unwrap();
    let eval = op.evaluate(&f).unwrap();
    let vol = f.grid().cell_volume();
    let dh: f64 = f.values().iter().zip(&eval.q).map(|(x, q)| q * (x.ln() + 1.0)).sum::<f64>() * vol;
    assert!(eval.dissipation > 0.0);
    assert!((dh + eval.dissipation).abs() < 1e-10 * eval.dissipation);
}

#[test]
fn maxwellian_is_stationary() {
    let f = maxwellian(16, 6.0);
    let op = CollisionOperator::new(f.grid(), &PsiSpec::Coulomb, CoefficientMethod::Fft).unwrap();
    let eval = op.evaluate(&f).unwrap();
    let qmax = eval.q.iter().fold(0.0f64, |a, q| a.max(q.abs()));
    let g = bimodal(16, 6.0);
    let qref = op.evaluate(&g).unwrap().q.iter().fold(0.0f64, |a, q| a.max(q.abs()));
    assert!(qmax < 1e-12 * qref, "{qmax:e} vs {qref:e}");
    assert!(eval.dissipation.abs() < 1e-12 * op.evaluate(&g).unwrap().dissipation);
}

#[test]
fn fft_matches_direct_operator() {
    let f = bimodal(8, 4.0);
    let fast = collision_operator(&f, &PsiSpec::Coulomb, CoefficientMethod::Fft).unwrap();
    let slow = collision_operator(&f, &PsiSpec::Coulomb, CoefficientMethod::Direct).unwrap();
    let scale = slow.iter().fold(0.0f64, |a, q| a.max(q.abs()));
    for (a, b) in fast.iter().zip(&slow) {
        assert!((a - b).abs() < 1e-12 * scale);
    }
}

#[test]
fn small_step_matches_assembled_operator() {
    let f = bimodal(8, 4.0);
    let q = collision_operator(&f, &PsiSpec::Coulomb, CoefficientMethod::Direct).unwrap();
    let dt = 1e-9;
    let next = step(&f, &PsiSpec::Coulomb, dt).unwrap();
    let scale = q.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for k in 0..q.len() {
        let rate = (next.values()[k] - f.values()[k]) / dt;
        assert!((rate - q[k]).abs() <= 1e-8 * scale.max(1.0), "{k}: {rate} vs {}", q[k]);
    }
}

#[test]
fn symbol_bound_matches_scan() {
    let scan = (0..=100_000)
        .map(|t| {
            let th = PI * t as f64 / 100_000.0;
            ((8.0 * th.sin() - (2.0 * th).sin()) / 6.0).powi(2)
        })
        .fold(0.0, f64::max);
    assert!((Stencil::Fourth.symbol_bound() - scan).abs() < 1e-9);
}

#[test]
fn oversized_step_is_rejected() {
    let f = bimodal(10, 5.0);
    let solver = Solver::new(&f, &PsiSpec::Coulomb, CoefficientMethod::Fft, TimeScheme::Euler).unwrap();
    let eval = solver.operator().evaluate(&f).unwrap();
    let auto = solver.time_step(&eval, TimeStep::Auto).unwrap();
    let err = solver.advance(&f, &eval, TimeStep::Fixed(10.0 * auto)).unwrap_err();
    assert!(matches!(err, Error::Stability { .. }));
}

#[test]
fn agrees_with_nonconservative_form_at_second_order() {
    let gap = |n: usize| {
        let g = VelocityGrid::new(3, 6.0, n).unwrap();
        let f = DiscreteDistribution::from_fn(g, |v| {
            (-(v[0] * v[0] / 1.6 + v[1] * v[1] / 2.0 + v[2] * v[2] / 2.8)).exp()
        })
        .unwrap();
        let a = collision_operator(&f, &PsiSpec::Coulomb, CoefficientMethod::Fft).unwrap();
        let b = nonconservative_operator(&f, &PsiSpec::Coulomb, CoefficientMethod::Fft).unwrap();
        let grid = f.grid();
        let mut num = 0.0;
        let mut den = 0.0;
        let mut p = vec![0.0; 3];
        for k in 0..grid.len() {
            grid.point(k, &mut p);
            if p.iter().all(|x| x.abs() < 3.0) {
                num += (a[k] - b[k]).powi(2);
                den += a[k].powi(2);
            }
        }
        (num / den).sqrt()
    };
    let coarse = gap(12);
    let fine = gap(24);
    assert!(coarse / fine > 3.0, "{coarse:e} {fine:e}");
}

#[test]
fn short_run_decreases_entropy() {
    let f = bimodal(12, 5.0);
    let mut config = SolverConfig::new(PsiSpec::Coulomb, 10);
    config.moment_orders = vec![0.0, 2.0];
    config.lp_exponents = vec![1.0];
    let (series, last) = run(&f, &config).unwrap();
    assert_eq!(series.records.len(), 11);
    assert!(series.invariants_held(), "{series:?}");
    for w in series.records.windows(2) {
        assert!(w[1].entropy < w[0].entropy);
        assert!(w[1].time > w[0].time);
        assert!(w[1].int_dissipation >= w[0].int_dissipation);
        assert!((w[1].mass - w[0].mass).abs() < 1e-12);
    }
    let rec = series.records.last().unwrap();
    assert_eq!(rec.moment(0.0), Some(rec.mass));
    assert!(rec.lp(1.0).is_some());
    assert_eq!(last.values().len(), f.values().len());
}

#[test]
fn config_json_round_trip() {
    let mut config = SolverConfig::new(PsiSpec::PowerLaw { gamma: -2.5 }, 5);
    let json = serde_json::to_string(&config).unwrap();
    assert!(json.contains("\"auto\""));
    assert_eq!(serde_json::from_str::<SolverConfig>(&json).unwrap(), config);
    config.dt = TimeStep::Fixed(0.01);
    let json = serde_json::to_string(&config).unwrap();
    assert_eq!(serde_json::from_str::<SolverConfig>(&json).unwrap(), config);
    assert!(serde_json::from_str::<TimeStep>("\"soon\"").is_err());
}

#[test]
fn restart_is_bit_identical() {
    let f = bimodal(8, 4.0);
    let config = SolverConfig::new(PsiSpec::Coulomb, 3);
    let (_, three) = run(&f, &config).unwrap();
    let (_, two) = run(&f, &SolverConfig::new(PsiSpec::Coulomb, 2)).unwrap();
    let (_, resumed) = run(&two, &SolverConfig::new(PsiSpec::Coulomb, 1)).unwrap();
    assert_eq!(three.values(), resumed.values());
}
