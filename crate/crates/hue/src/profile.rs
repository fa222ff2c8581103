//! Calibration profiles in TOML.
//!
//! ```toml
//! fractions = [0.90, 0.60, 0.50, 0.69, 0.51]
//! mu_range = [1.5, 4.5]
//! sigma_range = [0.3, 1.2]
//!
//! [scale]
//! min = 1.0
//! max = 5.0
//! step = 1.0
//! ```

use std::path::Path;

use hue_core::synth::CalibrationProfile;

use crate::CliError;

pub fn parse_profile(text: &str) -> Result<CalibrationProfile, String> {
    let profile: CalibrationProfile = toml::from_str(text).map_err(|e| e.to_string())?;
    profile.validate().map_err(|e| e.to_string())?;
    Ok(profile)
}

pub fn read_profile(path: &Path) -> Result<CalibrationProfile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_profile(&text).map_err(|m| CliError::parse(path, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_profile_is_table1() {
        let text = include_str!("../profiles/table1.toml");
        assert_eq!(parse_profile(text).unwrap(), CalibrationProfile::table1());
    }

    #[test]
    fn rejects_bad_fractions() {
        let text = "fractions = [1.5]\nmu_range = [1.5, 4.5]\nsigma_range = [0.3, 1.2]\n[scale]\nmin = 1.0\nmax = 5.0\nstep = 1.0\n";
        assert!(parse_profile(text).unwrap_err().contains("fractions"));
        assert!(parse_profile("fractions = [0.5]").is_err());
    }
}
