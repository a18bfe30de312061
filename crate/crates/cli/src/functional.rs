use std::path::Path;

use landau_core::functionals::{functional_report, DissipationForm};
use landau_core::{generate_distribution, DiscreteDistribution, DistributionKind, DistributionSpec, PsiSpec, VelocityGrid};

use crate::{io, CliError};

/// `coulomb`, `power_law:<gamma>` or a JSON object.
pub fn parse_psi(text: &str) -> Result<PsiSpec, CliError> {
    let text = text.trim();
    let spec = if text.starts_with('{') {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid --psi JSON: {e}")))?
    } else if text == "coulomb" {
        PsiSpec::Coulomb
    } else if let Some(g) = text.strip_prefix("power_law:") {
        let gamma = g
            .parse()
            .map_err(|_| CliError::Usage(format!("invalid power-law exponent {g:?}")))?;
        PsiSpec::PowerLaw { gamma }
    } else {
        return Err(CliError::Usage(format!(
            "--psi must be coulomb, power_law:<gamma> or a JSON object, got {text:?}"
        )));
    };
    Ok(spec)
}

pub fn run(input: &Path, psi: &str, out: &Path, form: DissipationForm, resolution: Option<usize>) -> Result<(), CliError> {
    let psi = parse_psi(psi)?;
    let mut f = DiscreteDistribution::read_json(input)?;
    if let Some(n) = resolution {
        let g = f.grid();
        let grid = VelocityGrid::new(g.dim(), g.half_width(), n)?;
        let spec = DistributionSpec::new(DistributionKind::CustomFile { path: input.to_path_buf() });
        f = generate_distribution(&spec, &grid)?;
    }
    let report = functional_report(&f, &psi, form)?;
    io::write_json(out, &report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_forms() {
        assert_eq!(parse_psi("coulomb").unwrap(), PsiSpec::Coulomb);
        assert_eq!(parse_psi("power_law:-2.5").unwrap(), PsiSpec::PowerLaw { gamma: -2.5 });
        assert_eq!(
            parse_psi(r#"{"kind": "power_law", "gamma": -1}"#).unwrap(),
            PsiSpec::PowerLaw { gamma: -1.0 }
        );
        assert!(matches!(parse_psi("hard"), Err(CliError::Usage(_))));
        assert!(matches!(parse_psi("power_law:x"), Err(CliError::Usage(_))));
    }
}
