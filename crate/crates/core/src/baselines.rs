//! Comparison schemes built from the same AO machinery.

use std::fmt;
use std::str::FromStr;

use crate::ao::{self, AoOptions, AoTrace, SlackState};
use crate::error::Error;
use crate::model::{DesignPoint, ScenarioState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Joint beams and positions.
    Proposed,
    /// Beams only, antennas fixed on the uniform grid.
    Fpa,
    /// Positions only, beams fixed to the initial matched filters.
    Fb,
    /// Proposed pipeline with perfect CSI.
    Upper,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::Fpa, Scheme::Fb, Scheme::Upper];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Fpa => "fpa",
            Scheme::Fb => "fb",
            Scheme::Upper => "upper",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Argument(format!("unknown scheme `{s}` (expected proposed, fpa, fb or upper)")))
    }
}

pub type SchemeRun = (DesignPoint, SlackState, AoTrace);

pub fn run_proposed(scenario: &ScenarioState, opts: &AoOptions) -> SchemeRun {
    ao::run(scenario, opts)
}

pub fn run_fpa(scenario: &ScenarioState, opts: &AoOptions) -> SchemeRun {
    ao::run(scenario, &AoOptions { optimize_positions: false, ..opts.clone() })
}

pub fn run_fb(scenario: &ScenarioState, opts: &AoOptions) -> SchemeRun {
    ao::run(scenario, &AoOptions { optimize_beams: false, ..opts.clone() })
}

/// Runs on the perfect-CSI view of the scenario, so the reported objective is
/// the true rate of the returned design.
pub fn run_upper_bound(scenario: &ScenarioState, opts: &AoOptions) -> SchemeRun {
    ao::run(&scenario.perfect_csi(), opts)
}

pub fn run_scheme(scheme: Scheme, scenario: &ScenarioState, opts: &AoOptions) -> SchemeRun {
    match scheme {
        Scheme::Proposed => run_proposed(scenario, opts),
        Scheme::Fpa => run_fpa(scenario, opts),
        Scheme::Fb => run_fb(scenario, opts),
        Scheme::Upper => run_upper_bound(scenario, opts),
    }
}
