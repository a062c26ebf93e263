//! Run configuration: a single TOML file with nested sections, strict about
//! unknown keys, plus the in-repo presets that reproduce the reference
//! figures. CLI flags override file keys; every run re-emits the fully
//! resolved configuration next to its outputs.

use quenchci::error::Error;
use quenchci::model::ModelConfig;
use quenchci::quench::QuenchProtocol;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub trap: TrapConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub populations: PopulationsConfig,
    #[serde(default)]
    pub multiwell: MultiwellConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n_bosons: usize,
    pub n_sites: usize,
    pub v0: f64,
    pub g: f64,
    pub n_bands: usize,
    pub n_grid: usize,
    /// Build the Wannier construction potential at the initial trap
    /// curvature instead of the bare lattice.
    #[serde(default)]
    pub wannier_at_initial_trap: bool,
    /// Cap on the number-state basis size.
    #[serde(default = "default_basis_cap")]
    pub basis_cap: usize,
}

fn default_basis_cap() -> usize {
    quenchci::fock::DEFAULT_BASIS_CAP
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapConfig {
    pub omega_i_sq: f64,
    pub omega_f_sq: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        TrapConfig { omega_i_sq: 0.8, omega_f_sq: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub t_final: f64,
    pub dt_sample: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig { t_final: 300.0, dt_sample: 0.1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub omega_sq_min: f64,
    pub omega_sq_max: f64,
    pub n_points: usize,
    pub n_states: usize,
    pub refine_max_levels: usize,
    pub refine_rel_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            omega_sq_min: 0.0,
            omega_sq_max: 0.85,
            n_points: 171,
            n_states: 9,
            refine_max_levels: 12,
            refine_rel_tol: 0.01,
        }
    }
}

impl ScanConfig {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.n_points.max(2);
        (0..n)
            .map(|i| {
                self.omega_sq_min
                    + (self.omega_sq_max - self.omega_sq_min) * i as f64 / (n - 1) as f64
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    /// Initial kept-eigenstate count; 0 keeps the full parity block.
    pub k_start: usize,
    /// Hard cap; 0 disables the cap.
    pub k_cap: usize,
}

impl EvolveConfig {
    pub fn opts(&self) -> quenchci::quench::EvolveOpts {
        quenchci::quench::EvolveOpts {
            k_start: (self.k_start > 0).then_some(self.k_start),
            k_cap: (self.k_cap > 0).then_some(self.k_cap),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    /// BLAS thread count; 0 picks the available parallelism.
    pub threads: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into(), threads: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationsConfig {
    /// Number states to track, e.g. "0,4,0" or "1,3,0_S" (band-major
    /// occupations, optional parity-combination suffix). Empty = track the
    /// dominant contributions of the initial state.
    pub targets: Vec<String>,
    /// How many dominant initial-state contributions to track when no
    /// explicit targets are given.
    pub auto_count: usize,
    /// State-preparation population threshold reported per target.
    pub prep_threshold: f64,
}

impl Default for PopulationsConfig {
    fn default() -> Self {
        PopulationsConfig { targets: Vec::new(), auto_count: 8, prep_threshold: 0.6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MultiwellConfig {
    /// Initial trap curvatures compared in one run (empty = [trap.omega_i_sq]).
    pub omega_i_sq_list: Vec<f64>,
    /// Spacing of density snapshots along the evolution.
    pub density_every: f64,
}

impl RunConfig {
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            n_bosons: self.system.n_bosons,
            n_sites: self.system.n_sites,
            v0: self.system.v0,
            g: self.system.g,
            n_grid: self.system.n_grid,
            n_bands: self.system.n_bands,
            wannier_omega_sq: if self.system.wannier_at_initial_trap {
                self.trap.omega_i_sq
            } else {
                0.0
            },
            basis_cap: Some(self.system.basis_cap),
        }
    }

    pub fn protocol(&self) -> QuenchProtocol {
        QuenchProtocol {
            omega_i_sq: self.trap.omega_i_sq,
            omega_f_sq: self.trap.omega_f_sq,
            t_final: self.time.t_final,
            dt_sample: self.time.dt_sample,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.model_config().validate()?;
        if self.time.t_final <= 0.0 || self.time.dt_sample <= 0.0 {
            return Err(Error::Config("time values must be positive".into()));
        }
        if self.scan.omega_sq_max < self.scan.omega_sq_min {
            return Err(Error::Config("scan range is reversed".into()));
        }
        if self.scan.omega_sq_max == self.scan.omega_sq_min && self.scan.n_points > 1 {
            return Err(Error::Config("scan range is empty".into()));
        }
        if self.scan.n_points < 2 {
            return Err(Error::Config("scan needs at least 2 points".into()));
        }
        if self.multiwell.density_every < 0.0 {
            return Err(Error::Config("density_every must be non-negative".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Parse a population target like "1,3,0" or "1,3,0_S" into band-major
/// occupations (zero-padded to n_orbitals) and a combination flag.
pub fn parse_target(
    text: &str,
    n_orbitals: usize,
    n_bosons: usize,
) -> Result<(Vec<u8>, bool), Error> {
    let (body, combo) = if let Some(b) = text.strip_suffix("_S") {
        (b, true)
    } else if let Some(b) = text.strip_suffix("_A") {
        (b, true)
    } else {
        (text, false)
    };
    let mut occ: Vec<u8> = Vec::new();
    for tok in body.split(',') {
        let v: u8 = tok
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad occupation token '{tok}' in '{text}'")))?;
        occ.push(v);
    }
    if occ.len() > n_orbitals {
        return Err(Error::Config(format!(
            "target '{text}' has {} orbitals, model has {n_orbitals}",
            occ.len()
        )));
    }
    occ.resize(n_orbitals, 0);
    let total: usize = occ.iter().map(|&v| v as usize).sum();
    if total != n_bosons {
        return Err(Error::Config(format!(
            "target '{text}' holds {total} bosons, model has {n_bosons}"
        )));
    }
    Ok((occ, combo))
}

/// Embedded presets reproducing the reference figures.
pub const PRESETS: &[(&str, &str)] = &[
    ("paper-fig1a", include_str!("../presets/paper-fig1a.toml")),
    ("paper-fig1b", include_str!("../presets/paper-fig1b.toml")),
    ("paper-fig2a", include_str!("../presets/paper-fig2a.toml")),
    ("paper-fig3a", include_str!("../presets/paper-fig3a.toml")),
    ("paper-fig3b", include_str!("../presets/paper-fig3b.toml")),
    ("paper-fig3c", include_str!("../presets/paper-fig3c.toml")),
    ("paper-fig3d", include_str!("../presets/paper-fig3d.toml")),
    ("paper-fig3e", include_str!("../presets/paper-fig3e.toml")),
    ("paper-fig3f", include_str!("../presets/paper-fig3f.toml")),
    ("paper-fig4a", include_str!("../presets/paper-fig4a.toml")),
    ("paper-fig4a-g0", include_str!("../presets/paper-fig4a-g0.toml")),
    ("paper-fig4a-g4", include_str!("../presets/paper-fig4a-g4.toml")),
    ("paper-fig4a-wi056", include_str!("../presets/paper-fig4a-wi056.toml")),
    ("paper-fig4c-n6", include_str!("../presets/paper-fig4c-n6.toml")),
    ("paper-fig5a", include_str!("../presets/paper-fig5a.toml")),
    ("paper-fig5b", include_str!("../presets/paper-fig5b.toml")),
    ("paper-fig5b-s3", include_str!("../presets/paper-fig5b-s3.toml")),
    ("paper-fig5d", include_str!("../presets/paper-fig5d.toml")),
];

pub fn load_preset(name: &str) -> Result<RunConfig, Error> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| RunConfig::from_toml_str(text))
        .unwrap_or_else(|| {
            Err(Error::Config(format!(
                "unknown preset '{name}'; available: {}",
                PRESETS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
            )))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for (name, text) in PRESETS {
            let cfg = RunConfig::from_toml_str(text)
                .unwrap_or_else(|e| panic!("preset {name}: {e}"));
            cfg.validate().unwrap_or_else(|e| panic!("preset {name}: {e}"));
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"
[system]
n_bosons = 4
n_sites = 3
v0 = 9.0
g = 1.0
n_bands = 3
n_grid = 300
bogus_key = 1
"#;
        assert!(RunConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn config_round_trips() {
        let cfg = load_preset("paper-fig1a").unwrap();
        let text = cfg.to_toml_string();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(text, back.to_toml_string());
    }

    #[test]
    fn target_parsing() {
        let (occ, combo) = parse_target("1,3,0", 9, 4).unwrap();
        assert_eq!(occ, vec![1, 3, 0, 0, 0, 0, 0, 0, 0]);
        assert!(!combo);
        let (occ, combo) = parse_target("1,3,0_S", 3, 4).unwrap();
        assert_eq!(occ, vec![1, 3, 0]);
        assert!(combo);
        assert!(parse_target("1,1,1", 3, 4).is_err());
        assert!(parse_target("4x", 3, 4).is_err());
    }
}
