use crate::CliError;
use loghardy_core::assembly::BetaSpec;
use loghardy_core::geometry::DomainSpec;
use loghardy_core::weights::{GridSpec, ScanQuantity, WeightParams};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use std::str::FromStr;

/// The experiment kinds, one per subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Eigen,
    Robin,
    Admissible,
    Sobolev,
    WeightsScan,
    Asymptotics,
    Pencil,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Eigen,
        Command::Robin,
        Command::Admissible,
        Command::Sobolev,
        Command::WeightsScan,
        Command::Asymptotics,
        Command::Pencil,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Robin => "robin",
            Command::Admissible => "admissible",
            Command::Sobolev => "sobolev",
            Command::WeightsScan => "weights-scan",
            Command::Asymptotics => "asymptotics",
            Command::Pencil => "pencil",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown command `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub target_h: f64,
    pub grading_q: f64,
    pub rings: usize,
    /// Uniform refinements applied after building.
    pub refinements: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { target_h: 0.05, grading_q: 0.5, rings: 12, refinements: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-10, residual_tol: 1e-8, max_iter: 500 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; the `--out` flag takes precedence.
    pub dir: Option<String>,
    pub emit_svg: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenSection {
    pub a_values: Vec<f64>,
    /// Angular modes `1..=oracle_modes` of the radial reference on disks.
    pub oracle_modes: u32,
    pub oracle_grid: usize,
}

impl Default for EigenSection {
    fn default() -> Self {
        Self { a_values: vec![1.2], oracle_modes: 3, oracle_grid: 4000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobinSection {
    pub a: f64,
    pub beta: BetaSpec,
}

impl Default for RobinSection {
    fn default() -> Self {
        Self { a: 2.0, beta: BetaSpec::Constant { value: 1.0 } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmissibleSection {
    pub a_values: Vec<f64>,
    pub l_values: Vec<f64>,
    /// Solve on an L-shaped star domain for at most this many admissible pairs.
    pub realizations: usize,
    pub bump_angle: f64,
    pub bump_amplitude: f64,
}

impl Default for AdmissibleSection {
    fn default() -> Self {
        Self {
            a_values: vec![1.01, 1.02, 1.05, 1.1, 1.2],
            l_values: vec![0.5, 0.6, 0.7, 0.8, 0.9],
            realizations: 2,
            bump_angle: 0.0,
            bump_amplitude: 1.0,
        }
    }
}

/// Exponents of one Sobolev case; `a` comes from the weights section.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolevCase {
    pub p: f64,
    #[serde(rename = "A")]
    pub mass_exponent: f64,
    #[serde(rename = "B")]
    pub gradient_exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SobolevSection {
    pub cases: Vec<SobolevCase>,
    pub dirichlet: bool,
    pub max_iter: usize,
    pub tol: f64,
    pub scaling_lambdas: Vec<f64>,
    /// Offsets of `A` from its critical value for the scaling table.
    pub scaling_offsets: Vec<f64>,
    /// `B` values of the radial checks.
    pub radial_b_values: Vec<f64>,
    pub radial_nodes: usize,
    pub radial_samples: usize,
}

impl Default for SobolevSection {
    fn default() -> Self {
        Self {
            cases: vec![SobolevCase { p: 2.0, mass_exponent: 2.0, gradient_exponent: 0.0 }],
            dirichlet: true,
            max_iter: 1000,
            tol: 1e-10,
            scaling_lambdas: vec![1.0, 0.5, 0.1, 0.02],
            scaling_offsets: vec![0.0, -0.3],
            radial_b_values: vec![-0.5, 0.0, 0.5],
            radial_nodes: 2000,
            radial_samples: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub quantities: Vec<ScanQuantity>,
    pub grid: GridSpec,
    /// Also run the doubled grid and report the change of the supremum.
    pub doubling_check: bool,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            quantities: vec![ScanQuantity::Muckenhoupt, ScanQuantity::Adams],
            grid: GridSpec::default(),
            doubling_check: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsSection {
    pub a: f64,
    /// Graded rings `[outer, inner]` bounding the fit window; defaults to the
    /// inner half of the rings without the innermost two.
    pub window_rings: Option<[usize; 2]>,
}

impl Default for AsymptoticsSection {
    fn default() -> Self {
        Self { a: 1.01, window_rings: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PencilSection {
    pub a: f64,
    pub epsilons: Vec<f64>,
    /// Also tabulate the trace constant `∫_{∂Ω} u² ≤ ε ∫ |∇u|² + C ∫ u²`.
    pub trace: bool,
}

impl Default for PencilSection {
    fn default() -> Self {
        Self { a: std::f64::consts::E, epsilons: vec![0.1, 0.5, 1.0, 2.0], trace: true }
    }
}

/// A complete experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// When present it must agree with the subcommand.
    pub command: Option<Command>,
    pub domain: DomainSpec,
    pub weights: WeightParams,
    pub mesh: MeshConfig,
    pub solver: SolverConfig,
    pub outputs: OutputConfig,
    /// Seed of the sampled checks.
    pub seed: u64,
    pub eigen: EigenSection,
    pub robin: RobinSection,
    pub admissible: AdmissibleSection,
    pub sobolev: SobolevSection,
    pub scan: ScanSection,
    pub asymptotics: AsymptoticsSection,
    pub pencil: PencilSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            domain: DomainSpec::Disk { radius: 1.0 },
            weights: WeightParams::default(),
            mesh: MeshConfig::default(),
            solver: SolverConfig::default(),
            outputs: OutputConfig::default(),
            seed: 7,
            eigen: EigenSection::default(),
            robin: RobinSection::default(),
            admissible: AdmissibleSection::default(),
            sobolev: SobolevSection::default(),
            scan: ScanSection::default(),
            asymptotics: AsymptoticsSection::default(),
            pencil: PencilSection::default(),
        }
    }
}

fn check(ok: bool, field: &str, msg: impl fmt::Display) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("{field}: {msg}")))
    }
}

fn check_scale(field: &str, a: f64) -> Result<(), CliError> {
    check(a > 1.0 && a.is_finite(), field, format!("must be a finite number > 1, got {a}"))
}

impl ExperimentConfig {
    /// Re-checks every parameter invariant of the owning modules.
    pub fn validate(&self) -> Result<(), CliError> {
        self.domain.validate().map_err(|e| CliError::Config(format!("domain: {e}")))?;
        self.weights.validate().map_err(|e| CliError::Config(format!("weights: {e}")))?;
        let m = &self.mesh;
        check(m.target_h > 0.0 && m.target_h < 1.0, "mesh.target_h", format!("must lie in (0, 1), got {}", m.target_h))?;
        check(m.grading_q > 0.0 && m.grading_q < 1.0, "mesh.grading_q", format!("must lie in (0, 1), got {}", m.grading_q))?;
        check(m.rings >= 1, "mesh.rings", "must be at least 1")?;
        check(m.refinements <= 4, "mesh.refinements", format!("at most 4 supported, got {}", m.refinements))?;
        let s = &self.solver;
        check(s.tol > 0.0, "solver.tol", "must be positive")?;
        check(s.residual_tol > 0.0, "solver.residual_tol", "must be positive")?;
        check(s.max_iter >= 1, "solver.max_iter", "must be at least 1")?;
        check(!self.eigen.a_values.is_empty(), "eigen.a_values", "must not be empty")?;
        for (i, &a) in self.eigen.a_values.iter().enumerate() {
            check_scale(&format!("eigen.a_values[{i}]"), a)?;
        }
        check(self.eigen.oracle_modes >= 1, "eigen.oracle_modes", "must be at least 1")?;
        check(self.eigen.oracle_grid >= 200, "eigen.oracle_grid", "must be at least 200")?;
        check_scale("robin.a", self.robin.a)?;
        self.robin.beta.validate().map_err(|e| CliError::Config(format!("robin.beta: {e}")))?;
        for (i, &a) in self.admissible.a_values.iter().enumerate() {
            check_scale(&format!("admissible.a_values[{i}]"), a)?;
        }
        for (i, &l) in self.admissible.l_values.iter().enumerate() {
            check(l > 0.0 && l < 1.0, &format!("admissible.l_values[{i}]"), format!("must lie in (0, 1), got {l}"))?;
        }
        check(
            (0.0..=1.0).contains(&self.admissible.bump_amplitude),
            "admissible.bump_amplitude",
            "must lie in [0, 1]",
        )?;
        for (i, c) in self.sobolev.cases.iter().enumerate() {
            let params = self.sobolev_params(c);
            params.validate().map_err(|e| CliError::Config(format!("sobolev.cases[{i}]: {e}")))?;
            check(c.mass_exponent > 1.0, &format!("sobolev.cases[{i}].A"), "must be > 1")?;
        }
        check(self.sobolev.tol > 0.0 && self.sobolev.max_iter >= 1, "sobolev", "needs tol > 0 and max_iter ≥ 1")?;
        for (i, &l) in self.sobolev.scaling_lambdas.iter().enumerate() {
            check(l > 0.0 && l <= 1.0, &format!("sobolev.scaling_lambdas[{i}]"), format!("must lie in (0, 1], got {l}"))?;
        }
        for (i, &b) in self.sobolev.radial_b_values.iter().enumerate() {
            check(b > -1.0 && b < 1.0, &format!("sobolev.radial_b_values[{i}]"), format!("must lie in (−1, 1), got {b}"))?;
        }
        check(self.sobolev.radial_nodes >= 10, "sobolev.radial_nodes", "must be at least 10")?;
        self.scan.grid.validate().map_err(|e| CliError::Config(format!("scan.grid: {e}")))?;
        check_scale("asymptotics.a", self.asymptotics.a)?;
        if let Some([outer, inner]) = self.asymptotics.window_rings {
            check(outer < inner && inner <= self.mesh.rings, "asymptotics.window_rings", "need outer < inner ≤ mesh.rings")?;
        }
        check_scale("pencil.a", self.pencil.a)?;
        for (i, &e) in self.pencil.epsilons.iter().enumerate() {
            check(e > 0.0, &format!("pencil.epsilons[{i}]"), format!("must be positive, got {e}"))?;
        }
        Ok(())
    }

    pub fn sobolev_params(&self, case: &SobolevCase) -> WeightParams {
        WeightParams {
            scale: self.weights.scale,
            mass_exponent: case.mass_exponent,
            gradient_exponent: case.gradient_exponent,
            power: case.p,
            far_field_exponent: self.weights.far_field_exponent,
        }
    }
}

/// Sets `path` (dot separated, numeric segments index arrays) inside `root`.
/// The value is parsed as JSON and taken as a string when that fails.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (depth, seg) in segments.iter().enumerate() {
        let last = depth + 1 == segments.len();
        if seg.is_empty() {
            return Err(CliError::Config(format!("override `{path}` has an empty segment")));
        }
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        node = match node {
            Value::Object(map) => {
                let entry = map.entry(seg.to_string()).or_insert(Value::Null);
                if last {
                    *entry = value;
                    return Ok(());
                }
                entry
            }
            Value::Array(items) => {
                let index: usize = seg
                    .parse()
                    .map_err(|_| CliError::Config(format!("override `{path}`: `{seg}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(index)
                    .ok_or_else(|| CliError::Config(format!("override `{path}`: index {index} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::Config(format!("override `{path}`: `{seg}` is inside a scalar"))),
        };
    }
    Ok(())
}

/// Parses a configuration document, applies overrides and validates it.
/// Schema errors name the offending field.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let config: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("{path}: {}", e.into_inner()))
    })?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(parse_config("{}", &[]).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn overrides_reach_nested_fields_and_arrays() {
        let cfg = parse_config(
            r#"{"eigen": {"a_values": [1.2, 2.0]}}"#,
            &["eigen.a_values.1=3.5".into(), "mesh.rings=8".into(), "domain={\"kind\":\"disk\",\"radius\":0.5}".into()],
        )
        .unwrap();
        assert_eq!(cfg.eigen.a_values, vec![1.2, 3.5]);
        assert_eq!(cfg.mesh.rings, 8);
        assert_eq!(cfg.domain, DomainSpec::Disk { radius: 0.5 });
    }

    #[test]
    fn schema_errors_name_the_field() {
        let err = parse_config(r#"{"mesh": {"rings": "many"}}"#, &[]).unwrap_err().to_string();
        assert!(err.contains("mesh.rings"), "{err}");
        let err = parse_config(r#"{"mesh": {"ringz": 3}}"#, &[]).unwrap_err().to_string();
        assert!(err.contains("ringz"), "{err}");
        let err = parse_config(r#"{"eigen": {"a_values": [0.5]}}"#, &[]).unwrap_err().to_string();
        assert!(err.contains("eigen.a_values[0]"), "{err}");
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
            assert_eq!(serde_json::to_value(c).unwrap(), Value::String(c.name().into()));
        }
        assert!("bogus".parse::<Command>().is_err());
    }
}
