//! Parametric families of initial distributions.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{normalize, DiscreteDistribution, VelocityGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    /// `(2 pi T)^(-N/2) exp(-|v - mean|^2 / 2T)`; an empty mean is the origin.
    Maxwellian {
        temperature: f64,
        #[serde(default)]
        mean: Vec<f64>,
    },
    /// Equal-weight Maxwellians centered at `+-separation/2` on the first axis.
    Bimaxwellian { separation: f64, temperature: f64 },
    /// Centered Gaussian with one variance per axis.
    AnisotropicGaussian { variances: Vec<f64> },
    /// `exp(-(|v| - radius)^2 / 2 width^2)`.
    RadialShell { radius: f64, width: f64 },
    /// `(1 + |v|^2)^(-exponent/2)`.
    RadialHeavyTail { exponent: f64 },
    /// Weighted sum of other families, each sampled before summing.
    Mixture { components: Vec<MixtureComponent> },
    /// Distribution file; resampled by multilinear interpolation when its
    /// grid differs from the target grid.
    CustomFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub spec: DistributionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub kind: DistributionKind,
    /// Rescale to unit mass, zero momentum and `int f |v|^2 = N`.
    #[serde(default)]
    pub normalize: bool,
}

impl DistributionSpec {
    pub fn new(kind: DistributionKind) -> Self {
        Self { kind, normalize: false }
    }

    pub fn normalized(kind: DistributionKind) -> Self {
        Self { kind, normalize: true }
    }

    /// True when the sampled values depend on `|v|` only.
    pub fn is_radial(&self) -> bool {
        match &self.kind {
            DistributionKind::Maxwellian { mean, .. } => mean.iter().all(|&m| m == 0.0),
            DistributionKind::RadialShell { .. } | DistributionKind::RadialHeavyTail { .. } => true,
            DistributionKind::Mixture { components } => components.iter().all(|c| c.spec.is_radial()),
            _ => false,
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} must be positive, got {x}")))
    }
}

fn gaussian(dim: usize, t: f64, center: &[f64]) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    let amp = (2.0 * PI * t).powf(-(dim as f64) / 2.0);
    move |v: &[f64]| {
        let r2: f64 = v
            .iter()
            .enumerate()
            .map(|(d, x)| {
                let c = center.get(d).copied().unwrap_or(0.0);
                (x - c) * (x - c)
            })
            .sum();
        amp * (-r2 / (2.0 * t)).exp()
    }
}

fn sample(kind: &DistributionKind, grid: &VelocityGrid) -> Result<DiscreteDistribution> {
    let dim = grid.dim();
    match kind {
        DistributionKind::Maxwellian { temperature, mean } => {
            positive("temperature", *temperature)?;
            if !mean.is_empty() && mean.len() != dim {
                return Err(Error::validation(format!("mean has {} entries for dimension {dim}", mean.len())));
            }
            DiscreteDistribution::from_fn(grid.clone(), gaussian(dim, *temperature, mean))
        }
        DistributionKind::Bimaxwellian { separation, temperature } => {
            positive("separation", *separation)?;
            positive("temperature", *temperature)?;
            let plus = [separation / 2.0];
            let minus = [-separation / 2.0];
            let (a, b) = (gaussian(dim, *temperature, &plus), gaussian(dim, *temperature, &minus));
            DiscreteDistribution::from_fn(grid.clone(), |v| 0.5 * a(v) + 0.5 * b(v))
        }
        DistributionKind::AnisotropicGaussian { variances } => {
            if variances.len() != dim {
                return Err(Error::validation(format!("{} variances for dimension {dim}", variances.len())));
            }
            for &s in variances {
                positive("variance", s)?;
            }
            let amp = (2.0 * PI).powf(-(dim as f64) / 2.0) / variances.iter().product::<f64>().sqrt();
            DiscreteDistribution::from_fn(grid.clone(), |v| {
                let e: f64 = v.iter().zip(variances).map(|(x, s)| x * x / (2.0 * s)).sum();
                amp * (-e).exp()
            })
        }
        DistributionKind::RadialShell { radius, width } => {
            positive("radius", *radius)?;
            positive("width", *width)?;
            DiscreteDistribution::from_fn(grid.clone(), |v| {
                let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                (-(r - radius).powi(2) / (2.0 * width * width)).exp()
            })
        }
        DistributionKind::RadialHeavyTail { exponent } => {
            positive("exponent", *exponent)?;
            DiscreteDistribution::from_fn(grid.clone(), |v| {
                (1.0 + v.iter().map(|x| x * x).sum::<f64>()).powf(-exponent / 2.0)
            })
        }
        DistributionKind::Mixture { components } => {
            if components.is_empty() {
                return Err(Error::validation("mixture needs at least one component"));
            }
            let mut values = vec![0.0; grid.len()];
            for c in components {
                positive("mixture weight", c.weight)?;
                let part = generate_distribution(&c.spec, grid)?;
                for (acc, x) in values.iter_mut().zip(part.values()) {
                    *acc += c.weight * x;
                }
            }
            DiscreteDistribution::new(grid.clone(), values)
        }
        DistributionKind::CustomFile { path } => {
            let f = DiscreteDistribution::read_json(path)?;
            let src = f.grid();
            if src.dim() != dim {
                return Err(Error::Format {
                    path: path.clone(),
                    message: format!("file has dimension {}, grid has {dim}", src.dim()),
                });
            }
            if src.half_width() == grid.half_width() && src.nodes_per_axis() == grid.nodes_per_axis() {
                return Ok(f);
            }
            DiscreteDistribution::from_fn(grid.clone(), |v| f.interpolate(v))
        }
    }
}

/// Samples `spec` at the cell centers of `grid`, then normalizes if asked.
pub fn generate_distribution(spec: &DistributionSpec, grid: &VelocityGrid) -> Result<DiscreteDistribution> {
    let f = sample(&spec.kind, grid)?;
    if f.is_zero() {
        return Err(Error::Degenerate("generated distribution vanishes on the grid".into()));
    }
    if spec.normalize {
        Ok(normalize(&f)?.0)
    } else {
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::moments;

    fn grid() -> VelocityGrid {
        VelocityGrid::new(3, 6.0, 16).unwrap()
    }

    #[test]
    fn normalized_maxwellian_moments() {
        let spec = DistributionSpec::normalized(DistributionKind::Maxwellian {
            temperature: 1.0,
            mean: vec![],
        });
        let f = generate_distribution(&spec, &grid()).unwrap();
        let m = moments(&f, &[]);
        assert!((m.mass - 1.0).abs() < 1e-3);
        assert!(m.momentum.iter().all(|p| p.abs() < 1e-3));
        assert!((2.0 * m.energy - 3.0).abs() < 3e-3);
    }

    #[test]
    fn symmetric_bimaxwellian_has_no_momentum() {
        let spec = DistributionSpec::new(DistributionKind::Bimaxwellian {
            separation: 2.0,
            temperature: 0.7,
        });
        let f = generate_distribution(&spec, &grid()).unwrap();
        let m = moments(&f, &[]);
        assert!(m.momentum.iter().all(|p| p.abs() < 1e-14 * m.mass));
    }

    #[test]
    fn radial_kinds_are_rotation_invariant() {
        let kinds = [
            DistributionKind::RadialShell { radius: 2.0, width: 0.6 },
            DistributionKind::RadialHeavyTail { exponent: 7.0 },
            DistributionKind::Maxwellian { temperature: 1.3, mean: vec![] },
        ];
        for kind in kinds {
            let spec = DistributionSpec::normalized(kind);
            assert!(spec.is_radial());
            let f = generate_distribution(&spec, &grid()).unwrap();
            assert!(f.rotation_deviation() < 1e-3, "{spec:?}");
        }
        let aniso = DistributionSpec::new(DistributionKind::AnisotropicGaussian { variances: vec![0.5, 1.0, 2.0] });
        assert!(!aniso.is_radial());
        assert!(generate_distribution(&aniso, &grid()).unwrap().rotation_deviation() > 1e-2);
    }

    #[test]
    fn mixture_is_weighted_sum() {
        let a = DistributionSpec::new(DistributionKind::Maxwellian { temperature: 1.0, mean: vec![] });
        let b = DistributionSpec::new(DistributionKind::RadialShell { radius: 2.0, width: 0.5 });
        let mix = DistributionSpec::new(DistributionKind::Mixture {
            components: vec![
                MixtureComponent { weight: 0.3, spec: a.clone() },
                MixtureComponent { weight: 0.7, spec: b.clone() },
            ],
        });
        let g = grid();
        let (fa, fb, fm) = (
            generate_distribution(&a, &g).unwrap(),
            generate_distribution(&b, &g).unwrap(),
            generate_distribution(&mix, &g).unwrap(),
        );
        for k in 0..g.len() {
            assert!((fm.values()[k] - 0.3 * fa.values()[k] - 0.7 * fb.values()[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = grid();
        let bad = [
            DistributionKind::Maxwellian { temperature: -1.0, mean: vec![] },
            DistributionKind::Maxwellian { temperature: 1.0, mean: vec![0.0] },
            DistributionKind::AnisotropicGaussian { variances: vec![1.0, 1.0] },
            DistributionKind::RadialShell { radius: 1.0, width: 0.0 },
            DistributionKind::Mixture { components: vec![] },
        ];
        for kind in bad {
            assert!(matches!(generate_distribution(&DistributionSpec::new(kind), &g), Err(Error::Validation(_))));
        }
    }

    #[test]
    fn custom_file_round_trip_and_resample() {
        let dir = std::env::temp_dir().join(format!("landau-gen-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.json");
        let src = generate_distribution(
            &DistributionSpec::new(DistributionKind::Maxwellian { temperature: 1.0, mean: vec![] }),
            &grid(),
        )
        .unwrap();
        src.write_json(&path).unwrap();
        let spec = DistributionSpec::new(DistributionKind::CustomFile { path: path.clone() });
        let same = generate_distribution(&spec, &grid()).unwrap();
        assert_eq!(same.values(), src.values());
        let other = generate_distribution(&spec, &VelocityGrid::new(3, 6.0, 12).unwrap()).unwrap();
        let (a, b) = (moments(&other, &[]).mass, moments(&src, &[]).mass);
        assert!((a - b).abs() < 0.1, "{a} {b}");
        let missing = DistributionSpec::new(DistributionKind::CustomFile { path: dir.join("none.json") });
        assert!(matches!(generate_distribution(&missing, &grid()), Err(Error::Io { .. })));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{"kind": "mixture", "normalize": true, "components": [
            {"weight": 0.5, "spec": {"kind": "radial_shell", "radius": 2.0, "width": 0.5}},
            {"weight": 0.5, "spec": {"kind": "maxwellian", "temperature": 1.0}}]}"#;
        let spec: DistributionSpec = serde_json::from_str(text).unwrap();
        assert!(spec.normalize && spec.is_radial());
        let again: DistributionSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, again);
        assert!(serde_json::from_str::<DistributionSpec>(r#"{"kind": "bogus"}"#).is_err());
    }
}
