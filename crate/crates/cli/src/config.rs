//! Experiment configuration: JSON parsing and validation.
//!
//! Parsing rejects unknown keys; validation then collects every semantic
//! problem so a bad config is reported in one pass.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use floquet_core::lattice::MultiBandSpec;
use floquet_core::linalg::{ComplexMatrix, C64};
use floquet_core::models::{ModelKind, ModelSpec, ParityChoice, DEFAULT_TYPE2_T2};
use floquet_core::observables::PairSelection;
use serde::{Deserialize, Serialize};

use crate::{CliError, Command};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    sweep: Option<RawSweep>,
    sizes: Option<Vec<usize>>,
    parameter: Option<f64>,
    bracket: Option<[f64; 2]>,
    pair: Option<RawPair>,
    cutoff: Option<usize>,
    observables: Option<Vec<Observable>>,
    output_dir: Option<PathBuf>,
    workers: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: String,
    sites: usize,
    #[serde(default)]
    eta: f64,
    #[serde(default = "one")]
    period: f64,
    t2: Option<f64>,
    ansatz: Option<RawAnsatz>,
    parity: Option<ParityChoice>,
}

fn one() -> f64 {
    1.0
}

/// Entries are numbers or `[re, im]` pairs; blocks are lists of rows.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum RawEntry {
    Real(f64),
    Complex([f64; 2]),
}

type RawBlock = Vec<Vec<RawEntry>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnsatz {
    a1: RawBlock,
    a2: RawBlock,
    x1: Vec<RawBlock>,
    x2: Vec<RawBlock>,
    y1: Vec<RawBlock>,
    y2: Vec<RawBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    start: f64,
    stop: f64,
    steps: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum RawPair {
    Nearest([f64; 2]),
    Indices([usize; 2]),
}

/// Optional outputs a command can be asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    ExceptionalPoints,
    Thresholds,
    Bandwidth,
    Positions,
    Envelopes,
    Heatmap,
    Diagonals,
    Gamma,
}

impl Observable {
    fn name(self) -> &'static str {
        match self {
            Self::ExceptionalPoints => "exceptional_points",
            Self::Thresholds => "thresholds",
            Self::Bandwidth => "bandwidth",
            Self::Positions => "positions",
            Self::Envelopes => "envelopes",
            Self::Heatmap => "heatmap",
            Self::Diagonals => "diagonals",
            Self::Gamma => "gamma",
        }
    }
}

/// `(allowed, default)` optional outputs per command.
fn observables_for(cmd: Command) -> (&'static [Observable], &'static [Observable]) {
    use Observable::*;
    match cmd {
        Command::Spectrum => (&[ExceptionalPoints], &[ExceptionalPoints]),
        Command::PhaseDiagram => (&[Thresholds, Bandwidth], &[Thresholds]),
        Command::Trajectory => (&[], &[]),
        Command::ScaleFree => (&[Positions, Envelopes], &[Positions, Envelopes]),
        Command::Perturbation => (&[Heatmap, Diagonals, Gamma], &[Heatmap, Diagonals, Gamma]),
        Command::ValidateModel => (&[Bandwidth], &[Bandwidth]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: ModelSpec,
    pub sweep: Option<Sweep>,
    pub sizes: Vec<usize>,
    pub parameter: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub pair: Option<PairSelection>,
    pub cutoff: Option<usize>,
    pub observables: BTreeSet<Observable>,
    pub out_dir: PathBuf,
    pub workers: usize,
}

impl Experiment {
    pub fn load(path: &Path, cmd: Command, out: Option<&Path>, workers: Option<usize>) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::parse(&text, cmd, out, workers)
    }

    pub fn parse(text: &str, cmd: Command, out: Option<&Path>, workers: Option<usize>) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Config(vec![e.to_string()]))?;
        let exp = validate(raw, cmd, out, workers)?;
        ensure_writable(&exp.out_dir)?;
        Ok(exp)
    }

    pub fn wants(&self, o: Observable) -> bool {
        self.observables.contains(&o)
    }

    /// The sweep; validation guarantees it for commands that need one.
    pub fn sweep(&self) -> Sweep {
        self.sweep.expect("validated config has a sweep")
    }

    pub fn parameter(&self) -> f64 {
        self.parameter.expect("validated config has a parameter")
    }
}

fn validate(raw: RawConfig, cmd: Command, out: Option<&Path>, workers: Option<usize>) -> Result<Experiment, CliError> {
    let mut errors = Vec::new();
    let model = validate_model(&raw.model, &mut errors);
    let range = model.as_ref().map_or(0, |m| m.ansatz(1.0).range);

    let sweep = raw.sweep.map(|s| {
        if !(s.start.is_finite() && s.stop.is_finite()) {
            errors.push("sweep.start and sweep.stop must be finite".into());
        } else if !(s.start < s.stop) {
            errors.push(format!("sweep must have start < stop, got {} and {}", s.start, s.stop));
        }
        if s.steps < 2 {
            errors.push(format!("sweep.steps must be at least 2, got {}", s.steps));
        }
        Sweep { start: s.start, stop: s.stop, steps: s.steps }
    });

    let sizes = raw.sizes.unwrap_or_default();
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        errors.push("sizes must be strictly increasing".into());
    }
    for &n in &sizes {
        if n <= 2 * range.max(1) {
            errors.push(format!("size {n} is too small; need more than {} sites", 2 * range.max(1)));
        }
    }

    if let Some(p) = raw.parameter {
        if !p.is_finite() {
            errors.push("parameter must be finite".into());
        }
    }
    let bracket = raw.bracket.map(|[lo, hi]| {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            errors.push(format!("bracket must be finite with lo < hi, got [{lo}, {hi}]"));
        }
        (lo, hi)
    });
    let pair = raw.pair.map(|p| match p {
        RawPair::Nearest([re, im]) => {
            if !(re.is_finite() && im.is_finite()) {
                errors.push("pair.nearest must be finite".into());
            }
            PairSelection::NearestTo { re, im }
        }
        RawPair::Indices([i, j]) => {
            if i == j {
                errors.push("pair.indices must name two different states".into());
            }
            PairSelection::Indices(i, j)
        }
    });
    if let (Some(s), Some(m)) = (raw.cutoff, model.as_ref()) {
        if s == 0 || 2 * s >= m.sites {
            errors.push(format!("cutoff must satisfy 0 < 2 cutoff < sites, got {s} for {} sites", m.sites));
        }
    }
    let workers = workers.or(raw.workers).unwrap_or(1);
    if workers == 0 {
        errors.push("workers must be at least 1".into());
    }

    let (allowed, default) = observables_for(cmd);
    let observables: BTreeSet<Observable> = match raw.observables {
        Some(list) => {
            for o in &list {
                if !allowed.contains(o) {
                    errors.push(format!("observable '{}' is not available for {}", o.name(), cmd.name()));
                }
            }
            list.into_iter().collect()
        }
        None => default.iter().copied().collect(),
    };

    let need = |errors: &mut Vec<String>, ok: bool, what: &str| {
        if !ok {
            errors.push(format!("{} needs {what}", cmd.name()));
        }
    };
    match cmd {
        Command::Spectrum | Command::Trajectory => need(&mut errors, sweep.is_some(), "a sweep"),
        Command::PhaseDiagram => {
            need(&mut errors, sweep.is_some(), "a sweep");
            need(&mut errors, !sizes.is_empty(), "at least one size");
        }
        Command::ScaleFree => {
            need(&mut errors, raw.parameter.is_some(), "a parameter");
            need(&mut errors, sizes.len() >= 2, "at least two sizes");
        }
        Command::Perturbation | Command::ValidateModel => need(&mut errors, raw.parameter.is_some(), "a parameter"),
    }
    if cmd != Command::Trajectory && pair.is_some() {
        errors.push(format!("pair is only used by trajectory, not {}", cmd.name()));
    }

    let out_dir = out.map(Path::to_path_buf).or(raw.output_dir).unwrap_or_else(|| PathBuf::from("out"));
    match model {
        Some(model) if errors.is_empty() => Ok(Experiment {
            model,
            sweep,
            sizes,
            parameter: raw.parameter,
            bracket,
            pair,
            cutoff: raw.cutoff,
            observables,
            out_dir,
            workers,
        }),
        _ => Err(CliError::Config(errors)),
    }
}

fn validate_model(m: &RawModel, errors: &mut Vec<String>) -> Option<ModelSpec> {
    let before = errors.len();
    if !(0.0..=1.0).contains(&m.eta) {
        errors.push(format!("model.eta must lie in [0, 1], got {}", m.eta));
    }
    if !(m.period > 0.0 && m.period.is_finite()) {
        errors.push(format!("model.period must be positive and finite, got {}", m.period));
    }
    if m.t2.is_some() && m.name != "type2" {
        errors.push("model.t2 only applies to type2".into());
    }
    if m.name != "general" && (m.ansatz.is_some() || m.parity.is_some()) {
        errors.push("model.ansatz and model.parity only apply to general".into());
    }
    let kind = match m.name.as_str() {
        "minimal" => Some(ModelKind::Minimal),
        "type1" => Some(ModelKind::Type1),
        "type2" => {
            let t2 = m.t2.unwrap_or(DEFAULT_TYPE2_T2);
            if !t2.is_finite() {
                errors.push("model.t2 must be finite".into());
            }
            Some(ModelKind::Type2 { t2 })
        }
        "general" => match &m.ansatz {
            None => {
                errors.push("model.ansatz is required for general".into());
                None
            }
            Some(a) => convert_ansatz(a, errors).map(|ansatz| ModelKind::General {
                ansatz,
                parity: m.parity.unwrap_or(ParityChoice::Reflection),
            }),
        },
        other => {
            errors.push(format!("unknown model name '{other}'; expected minimal, type1, type2 or general"));
            None
        }
    };
    let kind = kind?;
    if errors.len() > before {
        return None;
    }
    match ModelSpec::new(kind, m.sites, m.eta, m.period) {
        Ok(spec) => Some(spec),
        Err(e) => {
            errors.push(format!("model: {e}"));
            None
        }
    }
}

fn convert_block(name: &str, b: &RawBlock, errors: &mut Vec<String>) -> Option<ComplexMatrix> {
    let rows: Vec<Vec<C64>> = b
        .iter()
        .map(|r| {
            r.iter()
                .map(|e| match *e {
                    RawEntry::Real(x) => C64::new(x, 0.0),
                    RawEntry::Complex([re, im]) => C64::new(re, im),
                })
                .collect()
        })
        .collect();
    match ComplexMatrix::from_rows(&rows) {
        Ok(m) if m.is_finite() => Some(m),
        Ok(_) => {
            errors.push(format!("model.ansatz.{name} has non-finite entries"));
            None
        }
        Err(e) => {
            errors.push(format!("model.ansatz.{name}: {e}"));
            None
        }
    }
}

fn convert_ansatz(a: &RawAnsatz, errors: &mut Vec<String>) -> Option<MultiBandSpec> {
    let range = a.x1.len();
    for (name, v) in [("x2", &a.x2), ("y1", &a.y1), ("y2", &a.y2)] {
        if v.len() != range {
            errors.push(format!("model.ansatz.{name} has {} blocks but x1 has {range}", v.len()));
        }
    }
    if range == 0 {
        errors.push("model.ansatz needs at least one hopping block per family".into());
    }
    let mut list = |name: &str, v: &[RawBlock]| -> Vec<Option<ComplexMatrix>> {
        v.iter().enumerate().map(|(i, b)| convert_block(&format!("{name}[{i}]"), b, errors)).collect()
    };
    let x1 = list("x1", &a.x1);
    let x2 = list("x2", &a.x2);
    let y1 = list("y1", &a.y1);
    let y2 = list("y2", &a.y2);
    let a1 = convert_block("a1", &a.a1, errors);
    let a2 = convert_block("a2", &a.a2, errors);
    let collect = |v: Vec<Option<ComplexMatrix>>| v.into_iter().collect::<Option<Vec<_>>>();
    let spec = MultiBandSpec {
        range,
        a1: a1?,
        a2: a2?,
        x1: collect(x1)?,
        x2: collect(x2)?,
        y1: collect(y1)?,
        y2: collect(y2)?,
    };
    match spec.validate() {
        Ok(()) => Some(spec),
        Err(e) => {
            errors.push(format!("model.ansatz: {e}"));
            None
        }
    }
}

fn ensure_writable(dir: &Path) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Config(vec![format!("output directory {} is not writable: {e}", dir.display())]);
    fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(".floquet-pt-write-test");
    fs::write(&probe, b"").map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, cmd: Command) -> Result<Experiment, Vec<String>> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| vec![e.to_string()])?;
        validate(raw, cmd, None, None).map_err(|e| match e {
            CliError::Config(v) => v,
            other => vec![other.to_string()],
        })
    }

    #[test]
    fn minimal_spectrum_config() {
        let e = parse(
            r#"{"model": {"name": "minimal", "sites": 20}, "sweep": {"start": 0, "stop": 3, "steps": 7}}"#,
            Command::Spectrum,
        )
        .unwrap();
        assert_eq!(e.model.sites, 20);
        assert_eq!(e.model.period, 1.0);
        assert!(e.wants(Observable::ExceptionalPoints));
        assert_eq!(e.workers, 1);
    }

    #[test]
    fn every_problem_is_reported() {
        let errs = parse(
            r#"{"model": {"name": "minimal", "sites": 20, "eta": 2, "period": -1},
                "sweep": {"start": 1, "stop": 1, "steps": 1}, "workers": 0}"#,
            Command::Spectrum,
        )
        .unwrap_err();
        assert_eq!(errs.len(), 5, "{errs:?}");
    }

    #[test]
    fn unknown_keys_and_names_rejected() {
        assert!(parse(r#"{"model": {"name": "minimal", "sites": 20}, "bogus": 1}"#, Command::ValidateModel).is_err());
        let errs = parse(r#"{"model": {"name": "nope", "sites": 20}, "parameter": 1}"#, Command::ValidateModel)
            .unwrap_err();
        assert!(errs[0].contains("unknown model name"));
    }

    #[test]
    fn command_requirements() {
        let m = r#""model": {"name": "type1", "sites": 12}"#;
        assert!(parse(&format!("{{{m}}}"), Command::ScaleFree).is_err());
        assert!(parse(&format!("{{{m}, \"parameter\": 3, \"sizes\": [10, 20]}}"), Command::ScaleFree).is_ok());
        assert!(parse(&format!("{{{m}, \"parameter\": 3, \"sizes\": [20, 10]}}"), Command::ScaleFree).is_err());
        let errs = parse(&format!("{{{m}, \"parameter\": 3, \"observables\": [\"heatmap\"]}}"), Command::ValidateModel)
            .unwrap_err();
        assert!(errs[0].contains("not available"));
    }

    #[test]
    fn general_ansatz_blocks() {
        let e = parse(
            r#"{"model": {"name": "general", "sites": 8, "parity": "identity", "ansatz": {
                "a1": [[0, 1], [1, 0]], "a2": [[0, 1], [1, 0]],
                "x1": [[[[1, 1], 0], [0, 1]]], "x2": [[[1, 0], [0, 1]]],
                "y1": [[[1, 0], [0, 1]]], "y2": [[[[1, -1], 0], [0, 1]]]}},
              "parameter": 0.5}"#,
            Command::ValidateModel,
        )
        .unwrap();
        assert_eq!(e.model.band_dim(), 2);
        let bad = parse(
            r#"{"model": {"name": "general", "sites": 8, "ansatz": {
                "a1": [[0, 1]], "a2": [[0]], "x1": [[[1]]], "x2": [], "y1": [[[1]]], "y2": [[[1]]]}},
              "parameter": 0.5}"#,
            Command::ValidateModel,
        )
        .unwrap_err();
        assert_eq!(bad.len(), 2, "{bad:?}");
    }
}
