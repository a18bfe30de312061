//! Explicit time integration of the spatially homogeneous Landau equation
//! and the diagnostics recorded along a run.

mod diagnostics;
mod operator;
mod test_function;

pub use diagnostics::{
    lp_energy_balance, lp_functional, moment_tracking, nonconservative_operator, LpBalance, MomentTracking,
    MAX_POLYNOMIAL_DEGREE,
};
pub use operator::{collision_operator, CollisionOperator, OperatorEvaluation, Stencil};
pub use test_function::{cutoff, weak_form_rhs, Derivatives, TestFunction, WeakFormValue};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::functionals::{moments, weighted_fisher, weighted_lp};
use crate::grid::DiscreteDistribution;
use crate::kernels::{CoefficientMethod, PsiSpec};

/// Relative mass change per step tolerated before clipping.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Absolute entropy increase tolerated per step.
pub const ENTROPY_TOLERANCE: f64 = 1e-8;
/// Clipped mass per step, relative to the total, above which a warning is
/// raised.
pub const CLIP_BUDGET: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// Recomputed every step from the current diffusion matrix.
    Auto,
    Fixed(f64),
}

impl Serialize for TimeStep {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TimeStep::Auto => s.serialize_str("auto"),
            TimeStep::Fixed(dt) => s.serialize_f64(*dt),
        }
    }
}

impl<'de> Deserialize<'de> for TimeStep {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Label(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(dt) => Ok(TimeStep::Fixed(dt)),
            Raw::Label(l) if l == "auto" => Ok(TimeStep::Auto),
            Raw::Label(l) => Err(serde::de::Error::custom(format!("dt must be a number or \"auto\", got {l:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    Euler,
    #[default]
    Heun,
}

fn default_record_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub psi: PsiSpec,
    pub dt: TimeStep,
    pub steps: usize,
    #[serde(default)]
    pub scheme: TimeScheme,
    #[serde(default)]
    pub method: CoefficientMethod,
    #[serde(default)]
    pub stencil: Stencil,
    /// Orders `l` of the moments `int f (1 + |v|^2)^l` to record.
    #[serde(default)]
    pub moment_orders: Vec<f64>,
    /// Exponents `k` of the `L^(k+1)` balance to record.
    #[serde(default)]
    pub lp_exponents: Vec<f64>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl SolverConfig {
    pub fn new(psi: PsiSpec, steps: usize) -> Self {
        Self {
            psi,
            dt: TimeStep::Auto,
            steps,
            scheme: TimeScheme::default(),
            method: CoefficientMethod::default(),
            stencil: Stencil::default(),
            moment_orders: Vec::new(),
            lp_exponents: Vec::new(),
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::validation(format!("dt must be positive, got {dt}")));
            }
        }
        if self.record_every == 0 {
            return Err(Error::validation("record_every must be at least 1"));
        }
        if let Some(k) = self.lp_exponents.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(Error::validation(format!("lp exponents must be positive, got {k}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpRecord {
    pub k: f64,
    /// `int f^(k+1) / (k+1)`.
    pub functional: f64,
    /// `drift_term - dissipation_term`.
    pub net: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    /// Step size that produced this state; zero for the initial record.
    pub dt: f64,
    pub mass: f64,
    pub momentum: Vec<f64>,
    pub energy: f64,
    pub entropy: f64,
    /// Discrete entropy dissipation of the scheme at this state.
    pub dissipation: f64,
    pub moments: Vec<(f64, f64)>,
    pub fisher_weighted: f64,
    /// `|| f ||_{L^3_{-3}}`.
    pub l3w_norm: f64,
    /// Mass removed by clipping in the step that produced this state.
    pub clipped_mass: f64,
    /// Mass before clipping in the step that produced this state.
    pub mass_pre_clip: f64,
    pub lp: Vec<LpRecord>,
    /// Running trapezoid integral of the dissipation.
    pub int_dissipation: f64,
    /// Running trapezoid integral of `l3w_norm`.
    pub int_l3w: f64,
}

impl DiagnosticsRecord {
    pub fn moment(&self, l: f64) -> Option<f64> {
        self.moments.iter().find(|(m, _)| *m == l).map(|(_, v)| *v)
    }

    pub fn lp(&self, k: f64) -> Option<LpRecord> {
        self.lp.iter().find(|r| r.k == k).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub psi: PsiSpec,
    pub records: Vec<DiagnosticsRecord>,
    /// Largest `|mass_pre_clip - mass_before| / mass_before` over all steps.
    pub max_mass_drift: f64,
    /// Largest `H(t_{m+1}) - H(t_m)` over all steps.
    pub max_entropy_increase: f64,
    /// Largest clipped mass per step relative to the total.
    pub max_clip_fraction: f64,
    pub warnings: Vec<String>,
}

impl TimeSeries {
    /// Mass conservation, H-monotonicity and the clip budget held on every
    /// step.
    pub fn invariants_held(&self) -> bool {
        self.max_mass_drift <= MASS_TOLERANCE
            && self.max_entropy_increase <= ENTROPY_TOLERANCE
            && self.max_clip_fraction <= CLIP_BUDGET
    }
}

/// Result of advancing one step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: DiscreteDistribution,
    pub dt: f64,
    pub mass_before: f64,
    pub mass_pre_clip: f64,
    pub clipped_mass: f64,
}

/// Time integrator bound to one grid and kernel.
pub struct Solver {
    operator: CollisionOperator,
    scheme: TimeScheme,
}

impl Solver {
    pub fn new(f: &DiscreteDistribution, psi: &PsiSpec, method: CoefficientMethod, scheme: TimeScheme) -> Result<Self> {
        Self::with_operator(CollisionOperator::new(f.grid(), psi, method)?, scheme)
    }

    pub fn with_operator(operator: CollisionOperator, scheme: TimeScheme) -> Result<Self> {
        Ok(Self { operator, scheme })
    }

    pub fn operator(&self) -> &CollisionOperator {
        &self.operator
    }

    /// Resolves the step size for a state whose operator evaluation is
    /// `eval`, rejecting steps above the stability limit.
    pub fn time_step(&self, eval: &OperatorEvaluation, dt: TimeStep) -> Result<f64> {
        if !(eval.lambda_max > 0.0) {
            return Err(Error::Degenerate("the diffusion matrix vanishes; nothing to evolve".into()));
        }
        let limit = self.operator.stability_limit(eval.lambda_max);
        let dt = match dt {
            TimeStep::Auto => self.operator.auto_time_step(eval.lambda_max),
            TimeStep::Fixed(dt) => dt,
        };
        if dt > limit {
            return Err(Error::Stability { dt, limit });
        }
        Ok(dt)
    }

    /// One step from `f`, reusing its operator evaluation.
    pub fn advance(&self, f: &DiscreteDistribution, eval: &OperatorEvaluation, dt: TimeStep) -> Result<StepOutcome> {
        let dt = self.time_step(eval, dt)?;
        let vals = f.values();
        let next: Vec<f64> = match self.scheme {
            TimeScheme::Euler => vals.iter().zip(&eval.q).map(|(x, q)| x + dt * q).collect(),
            TimeScheme::Heun => {
                let stage: Vec<f64> = vals.iter().zip(&eval.q).map(|(x, q)| x + dt * q).collect();
                let stage = DiscreteDistribution::from_parts(f.grid().clone(), stage);
                let q2 = self.operator.evaluate(&stage)?.q;
                vals.iter()
                    .zip(eval.q.iter().zip(&q2))
                    .map(|(x, (a, b))| x + 0.5 * dt * (a + b))
                    .collect()
            }
        };
        let grid = f.grid();
        let vol = grid.cell_volume();
        let mass_before = crate::sum::pairwise_sum(vals) * vol;
        let mass_pre_clip = crate::sum::pairwise_sum(&next) * vol;
        let negatives: Vec<f64> = next.iter().map(|x| x.min(0.0)).collect();
        let clipped_mass = -crate::sum::pairwise_sum(&negatives) * vol;
        let clipped: Vec<f64> = next.into_iter().map(|x| x.max(0.0)).collect();
        Ok(StepOutcome {
            state: DiscreteDistribution::from_parts(grid.clone(), clipped),
            dt,
            mass_before,
            mass_pre_clip,
            clipped_mass,
        })
    }

    pub fn step(&self, f: &DiscreteDistribution, dt: TimeStep) -> Result<StepOutcome> {
        let eval = self.operator.evaluate(f)?;
        self.advance(f, &eval, dt)
    }
}

/// One explicit Euler step with the FFT coefficient path.
pub fn step(f: &DiscreteDistribution, spec: &PsiSpec, dt: f64) -> Result<DiscreteDistribution> {
    let solver = Solver::new(f, spec, CoefficientMethod::Fft, TimeScheme::Euler)?;
    Ok(solver.step(f, TimeStep::Fixed(dt))?.state)
}

/// Runs `config.steps` steps from `f0`; returns the diagnostics and the
/// final state.
pub fn run(f0: &DiscreteDistribution, config: &SolverConfig) -> Result<(TimeSeries, DiscreteDistribution)> {
    run_with(f0, config, |_, _| {})
}

/// As [`run`], calling `observe` with every recorded state.
pub fn run_with<F>(f0: &DiscreteDistribution, config: &SolverConfig, mut observe: F) -> Result<(TimeSeries, DiscreteDistribution)>
where
    F: FnMut(&DiscreteDistribution, &DiagnosticsRecord),
{
    config.validate()?;
    let operator = CollisionOperator::with_stencil(f0.grid(), &config.psi, config.method, config.stencil)?;
    let solver = Solver::with_operator(operator, config.scheme)?;
    let gamma1 = config.psi.bounds().gamma1;
    let recorder = |step: usize,
                    time: f64,
                    dt: f64,
                    f: &DiscreteDistribution,
                    eval: &OperatorEvaluation,
                    outcome: Option<&StepOutcome>|
     -> Result<DiagnosticsRecord> {
        let m = moments(f, &config.moment_orders);
        let lp = config
            .lp_exponents
            .iter()
            .map(|&k| {
                Ok(LpRecord {
                    k,
                    functional: lp_functional(f, k),
                    net: diagnostics::lp_energy_balance_with(eval, f, k)?.net,
                })
            })
            .collect::<Result<_>>()?;
        Ok(DiagnosticsRecord {
            step,
            time,
            dt,
            mass: m.mass,
            momentum: m.momentum,
            energy: m.energy,
            entropy: m.entropy,
            dissipation: eval.dissipation,
            moments: m.moments,
            fisher_weighted: weighted_fisher(f, gamma1),
            l3w_norm: weighted_lp(f, 3.0, -3.0)?,
            clipped_mass: outcome.map_or(0.0, |o| o.clipped_mass),
            mass_pre_clip: outcome.map_or(m.mass, |o| o.mass_pre_clip),
            lp,
            int_dissipation: 0.0,
            int_l3w: 0.0,
        })
    };

    let mut f = f0.clone();
    let mut eval = solver.operator.evaluate(&f)?;
    let mut records = vec![recorder(0, 0.0, 0.0, &f, &eval, None)?];
    observe(&f, &records[0]);
    let mut entropy = records[0].entropy;
    let mut time = 0.0;
    let mut series = TimeSeries {
        psi: config.psi.clone(),
        records: Vec::new(),
        max_mass_drift: 0.0,
        max_entropy_increase: f64::NEG_INFINITY,
        max_clip_fraction: 0.0,
        warnings: Vec::new(),
    };
    for s in 1..=config.steps {
        let outcome = solver.advance(&f, &eval, config.dt)?;
        time += outcome.dt;
        let drift = (outcome.mass_pre_clip - outcome.mass_before).abs() / outcome.mass_before;
        series.max_mass_drift = series.max_mass_drift.max(drift);
        let clip_fraction = outcome.clipped_mass / outcome.mass_before;
        if clip_fraction > CLIP_BUDGET {
            series
                .warnings
                .push(format!("step {s}: clipped mass fraction {clip_fraction:e} exceeds {CLIP_BUDGET:e}"));
        }
        series.max_clip_fraction = series.max_clip_fraction.max(clip_fraction);
        f = outcome.state.clone();
        eval = solver.operator.evaluate(&f)?;
        let new_entropy = moments(&f, &[]).entropy;
        series.max_entropy_increase = series.max_entropy_increase.max(new_entropy - entropy);
        entropy = new_entropy;
        if s % config.record_every == 0 || s == config.steps {
            let mut rec = recorder(s, time, outcome.dt, &f, &eval, Some(&outcome))?;
            let prev = records.last().expect("initial record");
            let span = rec.time - prev.time;
            rec.int_dissipation = prev.int_dissipation + 0.5 * span * (prev.dissipation.max(0.0) + rec.dissipation.max(0.0));
            rec.int_l3w = prev.int_l3w + 0.5 * span * (prev.l3w_norm + rec.l3w_norm);
            observe(&f, &rec);
            records.push(rec);
        }
    }
    if config.steps == 0 {
        series.max_entropy_increase = 0.0;
    }
    series.records = records;
    Ok((series, f))
}

#[cfg(test)]
mod tests;
