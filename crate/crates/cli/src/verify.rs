use std::collections::BTreeMap;
use std::path::Path;

use landau_core::inequalities::{
    check_edd_theorem, check_gamma_lower_bound, check_interpolation, check_sobolev, check_young, ConstantUsed,
    EddMode, InequalityReport, InterpolationExponents, SobolevVariant,
};
use landau_core::{generate_distribution, DiscreteDistribution, DistributionSpec, PsiSpec, VelocityGrid};
use serde::{Deserialize, Serialize};

use crate::{io, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    EddRadial,
    EddRatio,
    /// Explicit Coulomb constants, reported with both Fisher weights.
    SobolevCoulomb,
    SobolevGeneral,
    Young,
    Interpolation,
    GammaFloor,
}

impl SuiteKind {
    fn label(self) -> &'static str {
        match self {
            SuiteKind::EddRadial => "edd_radial",
            SuiteKind::EddRatio => "edd_ratio",
            SuiteKind::SobolevCoulomb => "sobolev_coulomb",
            SuiteKind::SobolevGeneral => "sobolev_general",
            SuiteKind::Young => "young",
            SuiteKind::Interpolation => "interpolation",
            SuiteKind::GammaFloor => "gamma_floor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub name: String,
    pub distribution: DistributionSpec,
}

fn default_young_radius() -> f64 {
    1.0
}

fn default_young_r() -> f64 {
    1.5
}

fn default_hbar() -> f64 {
    8.0
}

fn default_interpolation() -> Vec<InterpolationExponents> {
    vec![
        InterpolationExponents { q1: 1.0, a1: 1.0, q2: 3.0, a2: -1.5, beta: 0.5 },
        InterpolationExponents { q1: 2.0, a1: 0.0, q2: f64::INFINITY, a2: 1.0, beta: 0.25 },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteParams {
    /// Lebesgue exponent of the general Sobolev form when `N = 2`.
    #[serde(default)]
    pub sobolev_q: Option<f64>,
    #[serde(default = "default_young_radius")]
    pub young_radius: f64,
    #[serde(default = "default_young_r")]
    pub young_r: f64,
    #[serde(default = "default_interpolation")]
    pub interpolation: Vec<InterpolationExponents>,
    /// Entropy bound used by the Gamma floor.
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            sobolev_q: None,
            young_radius: default_young_radius(),
            young_r: default_young_r(),
            interpolation: default_interpolation(),
            hbar: default_hbar(),
        }
    }
}

fn default_resolutions() -> Vec<usize> {
    vec![24]
}

fn default_half_width() -> f64 {
    6.0
}

fn default_dim() -> usize {
    3
}

fn default_psi() -> PsiSpec {
    PsiSpec::Coulomb
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub suites: Vec<SuiteKind>,
    pub families: Vec<Family>,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_psi")]
    pub psi: PsiSpec,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub params: SuiteParams,
}

impl VerifyConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.suites.is_empty() {
            return Err(CliError::Usage("the suite list is empty".into()));
        }
        if self.families.is_empty() {
            return Err(CliError::Usage("the family list is empty".into()));
        }
        if self.resolutions.is_empty() {
            return Err(CliError::Usage("the resolution list is empty".into()));
        }
        let mut seen = BTreeMap::new();
        for f in &self.families {
            if seen.insert(f.name.as_str(), ()).is_some() {
                return Err(CliError::Usage(format!("family {:?} is listed twice", f.name)));
            }
        }
        Ok(())
    }
}

/// One checker outcome; `report` is absent when the checker refused its
/// input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyEntry {
    pub suite: SuiteKind,
    pub family: String,
    pub resolution: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<InequalityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl VerifyEntry {
    /// Refused inputs and violated explicit-constant inequalities fail;
    /// ratio-only reports never do.
    pub fn failed(&self) -> bool {
        match &self.report {
            Some(r) => r.is_explicit() && !r.holds,
            None => true,
        }
    }

    fn label(&self) -> String {
        let name = self.report.as_ref().map_or(self.suite.label(), |r| r.name.as_str());
        format!("{name}/{}/{}", self.family, self.resolution)
    }
}

fn check(
    suite: SuiteKind,
    f: &DiscreteDistribution,
    cfg: &VerifyConfig,
) -> landau_core::Result<Vec<InequalityReport>> {
    let p = &cfg.params;
    Ok(match suite {
        SuiteKind::EddRadial => vec![check_edd_theorem(f, &cfg.psi, EddMode::RadialExplicit)?],
        SuiteKind::EddRatio => vec![check_edd_theorem(f, &cfg.psi, EddMode::Ratio)?],
        SuiteKind::SobolevCoulomb => vec![
            check_sobolev(f, -3.0, SobolevVariant::CoulombExplicit)?,
            check_sobolev(f, -3.0, SobolevVariant::CoulombDisplay)?,
        ],
        SuiteKind::SobolevGeneral => vec![check_sobolev(
            f,
            cfg.psi.bounds().gamma1,
            SobolevVariant::General { q: p.sobolev_q },
        )?],
        SuiteKind::Young => vec![check_young(f, &cfg.psi, p.young_radius, p.young_r)?],
        SuiteKind::Interpolation => p
            .interpolation
            .iter()
            .map(|e| check_interpolation(f, *e))
            .collect::<landau_core::Result<_>>()?,
        SuiteKind::GammaFloor => vec![check_gamma_lower_bound(f, p.hbar)?],
    })
}

/// Runs every suite over the family by resolution matrix.
pub fn evaluate(cfg: &VerifyConfig) -> Result<Vec<VerifyEntry>, CliError> {
    cfg.validate()?;
    let mut entries = Vec::new();
    for &n in &cfg.resolutions {
        let grid = VelocityGrid::new(cfg.dim, cfg.half_width, n)?;
        for family in &cfg.families {
            let f = generate_distribution(&family.distribution, &grid);
            for &suite in &cfg.suites {
                let result = f.as_ref().map_err(|e| e.to_string()).and_then(|f| check(suite, f, cfg).map_err(|e| e.to_string()));
                match result {
                    Ok(reports) => entries.extend(reports.into_iter().map(|r| VerifyEntry {
                        suite,
                        family: family.name.clone(),
                        resolution: n,
                        report: Some(r),
                        error: None,
                    })),
                    Err(e) => entries.push(VerifyEntry {
                        suite,
                        family: family.name.clone(),
                        resolution: n,
                        report: None,
                        error: Some(e),
                    }),
                }
            }
        }
    }
    Ok(entries)
}

fn write_summary(path: &Path, entries: &[VerifyEntry]) -> Result<(), CliError> {
    let mut w = io::csv_writer(path)?;
    w.write_record(["suite", "family", "resolution", "name", "lhs", "rhs", "slack", "holds", "constant", "error"])
        .map_err(|e| io::csv_error(path, e))?;
    for e in entries {
        let row = match &e.report {
            Some(r) => vec![
                e.suite.label().to_string(),
                e.family.clone(),
                e.resolution.to_string(),
                r.name.clone(),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.slack.map_or(String::new(), |s| s.to_string()),
                r.holds.to_string(),
                match r.constant_used {
                    ConstantUsed::Explicit(c) => c.to_string(),
                    ConstantUsed::RatioOnly => "ratio-only".to_string(),
                },
                String::new(),
            ],
            None => vec![
                e.suite.label().to_string(),
                e.family.clone(),
                e.resolution.to_string(),
                e.suite.label().to_string(),
                String::new(),
                String::new(),
                String::new(),
                "false".to_string(),
                String::new(),
                e.error.clone().unwrap_or_default(),
            ],
        };
        w.write_record(&row).map_err(|err| io::csv_error(path, err))?;
    }
    w.flush().map_err(|e| io::csv_error(path, e))
}

pub fn run(cfg: &VerifyConfig, out_dir: &Path) -> Result<(), CliError> {
    let entries = evaluate(cfg)?;
    io::create_dir(out_dir)?;
    io::write_json(&out_dir.join("reports.json"), &entries)?;
    write_summary(&out_dir.join("summary.csv"), &entries)?;
    let failed: Vec<String> = entries
        .iter()
        .filter(|e| e.failed())
        .map(|e| match &e.error {
            Some(msg) => format!("{}: {msg}", e.label()),
            None => e.label(),
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "{} of {} checks failed: {}",
            failed.len(),
            entries.len(),
            failed.join("; ")
        )))
    }
}
