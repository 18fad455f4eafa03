//! Run configuration: JSON file defaults, command-line overrides, validation.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use scars::dynamics::InitialState;
use scars::mps_scars::MpsKind;
use scars::spectral::SectorChoice;
use scars::Boundary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Bc {
    Pbc,
    Obc,
}

impl From<Bc> for Boundary {
    fn from(b: Bc) -> Self {
        match b {
            Bc::Pbc => Boundary::Periodic,
            Bc::Obc => Boundary::Open,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    K0,
    Kpi,
    /// k = 0 and k = π together.
    All,
    /// No momentum reduction.
    Full,
}

impl From<Sector> for SectorChoice {
    fn from(s: Sector) -> Self {
        match s {
            Sector::K0 => SectorChoice::K0,
            Sector::Kpi => SectorChoice::Kpi,
            Sector::All => SectorChoice::All,
            Sector::Full => SectorChoice::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Initial {
    Neel,
    NeelPrime,
    Polarized,
    Random,
}

impl From<Initial> for InitialState {
    fn from(i: Initial) -> Self {
        match i {
            Initial::Neel => InitialState::Neel,
            Initial::NeelPrime => InitialState::NeelPrime,
            Initial::Polarized => InitialState::Polarized,
            Initial::Random => InitialState::Random,
        }
    }
}

/// Operator selection for `operator` dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    /// PXP, plus the deformation when `--perturbed` is set.
    Hamiltonian,
    Pxp,
    Perturbation,
    /// Staggered magnetization.
    Ms,
    /// `[H⁺, H⁻]` of the Hamiltonian's Néel-distance split.
    Hz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Perturbation {
    pub enabled: bool,
    pub h0: f64,
    /// `None` picks the library default for the chain length.
    pub range: Option<usize>,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            enabled: false,
            h0: 0.051,
            range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Quench {
    pub initial: Initial,
    pub t_max: f64,
    pub dt: f64,
    pub window_center: f64,
    pub window_width: f64,
    pub samples: usize,
}

impl Default for Quench {
    fn default() -> Self {
        Self {
            initial: Initial::Neel,
            t_max: 300.0,
            dt: 0.25,
            window_center: 180.0,
            window_width: 40.0,
            samples: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    /// Chain lengths for `qfi-scaling`.
    pub sizes: Vec<usize>,
    pub bc: Bc,
    /// `None` means k0 ⊕ kπ on a ring and the full basis on an open chain.
    pub sector: Option<Sector>,
    pub omega: f64,
    pub perturbation: Perturbation,
    pub quench: Quench,
    /// `mps-check` only; `None` runs every kind.
    pub kind: Option<MpsKind>,
    pub seed: Option<u64>,
    /// Kept out of the metadata so the destination never changes contents.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 12,
            sizes: vec![8, 10, 12, 14],
            bc: Bc::Pbc,
            sector: None,
            omega: 1.0,
            perturbation: Perturbation::default(),
            quench: Quench::default(),
            kind: None,
            seed: None,
            out: None,
            format: None,
        }
    }
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON document mirroring the run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Number of sites.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Comma-separated chain lengths for qfi-scaling.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, global = true, value_enum)]
    pub bc: Option<Bc>,
    #[arg(long, global = true, value_enum)]
    pub sector: Option<Sector>,
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    /// Add the golden-ratio deformation to PXP.
    #[arg(long, global = true)]
    pub perturbed: bool,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub h0: Option<f64>,
    /// Deformation range R.
    #[arg(long, global = true)]
    pub range: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub initial: Option<Initial>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Required whenever random states are drawn.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub window_center: Option<f64>,
    #[arg(long, global = true)]
    pub window_width: Option<f64>,
    /// MPS state: phi1, phi2, gamma11, gamma12, gamma21 or gamma22.
    #[arg(long, global = true)]
    pub kind: Option<MpsKind>,
    /// Output directory; must not exist yet (or be empty).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    pub fn resolve(o: &Overrides) -> Result<Self, String> {
        let mut c = match &o.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        macro_rules! set {
            ($src:expr => $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(o.n => c.n);
        set!(o.sizes => c.sizes);
        set!(o.bc => c.bc);
        set!(o.omega => c.omega);
        set!(o.h0 => c.perturbation.h0);
        set!(o.initial => c.quench.initial);
        set!(o.samples => c.quench.samples);
        set!(o.t_max => c.quench.t_max);
        set!(o.dt => c.quench.dt);
        set!(o.window_center => c.quench.window_center);
        set!(o.window_width => c.quench.window_width);
        if o.sector.is_some() {
            c.sector = o.sector;
        }
        if o.range.is_some() {
            c.perturbation.range = o.range;
        }
        if o.kind.is_some() {
            c.kind = o.kind;
        }
        if o.seed.is_some() {
            c.seed = o.seed;
        }
        if o.out.is_some() {
            c.out = o.out.clone();
        }
        if o.format.is_some() {
            c.format = o.format;
        }
        c.perturbation.enabled |= o.perturbed;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), String> {
        let even = |n: usize| n >= 2 && n.is_multiple_of(2);
        if !even(self.n) {
            return Err(format!("--n must be even and at least 2, got {}", self.n));
        }
        if let Some(bad) = self.sizes.iter().find(|&&n| !even(n)) {
            return Err(format!("--sizes entries must be even and at least 2, got {bad}"));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(format!("--omega must be positive, got {}", self.omega));
        }
        if !self.perturbation.h0.is_finite() {
            return Err("--h0 must be finite".into());
        }
        let q = &self.quench;
        if !(q.dt.is_finite() && q.dt > 0.0) {
            return Err(format!("--dt must be positive, got {}", q.dt));
        }
        if !(q.t_max.is_finite() && q.t_max >= 0.0) {
            return Err(format!("--t-max must be non-negative, got {}", q.t_max));
        }
        if !(q.window_width.is_finite() && q.window_width > 0.0 && q.window_center.is_finite()) {
            return Err("window centre must be finite and width positive".into());
        }
        if q.samples == 0 {
            return Err("--samples must be at least 1".into());
        }
        if q.initial == Initial::Random && self.seed.is_none() {
            return Err("random initial states need an explicit --seed".into());
        }
        if self.bc == Bc::Obc && matches!(self.sector, Some(Sector::K0 | Sector::Kpi | Sector::All)) {
            return Err("momentum sectors need --bc pbc; use --sector full".into());
        }
        Ok(())
    }

    pub fn sector_choice(&self) -> SectorChoice {
        match (self.sector, self.bc) {
            (Some(s), _) => s.into(),
            (None, Bc::Pbc) => SectorChoice::All,
            (None, Bc::Obc) => SectorChoice::Full,
        }
    }

    pub fn boundary(&self) -> Boundary {
        self.bc.into()
    }

    /// Seed for commands that draw random states.
    pub fn require_seed(&self) -> Result<u64, String> {
        self.seed
            .ok_or_else(|| "random initial states need an explicit --seed".into())
    }
}
