//! Experiment configuration shared by the command-line flags and JSON config files.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use shearlab::eisenstein::Route;
use shearlab::group::GroupSpec;
use shearlab::orbit::{FitModel, Norm};
use shearlab::testfn::BumpParams;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Count,
    CosetCount,
    Fit,
    Shear,
    Eisenstein,
    Moment,
    Kronecker,
    Selftest,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Count => "count",
            Subcommand::CosetCount => "coset-count",
            Subcommand::Fit => "fit",
            Subcommand::Shear => "shear",
            Subcommand::Eisenstein => "eisenstein",
            Subcommand::Moment => "moment",
            Subcommand::Kronecker => "kronecker",
            Subcommand::Selftest => "selftest",
        }
    }
}

/// One experiment. Every field has a concrete value after defaults are applied, so the
/// manifest echo of a run is itself a config that reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    /// Built-in group name or path to a group JSON file.
    #[serde(default = "default_group")]
    pub group: String,
    #[serde(default = "default_x0")]
    pub x0: [i64; 3],
    #[serde(default, rename = "T")]
    pub t: Vec<f64>,
    #[serde(default)]
    pub q: Option<i64>,
    #[serde(default = "default_norm")]
    pub norm: Norm,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_nodes")]
    pub max_nodes: usize,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_psi")]
    pub psi: String,
    /// Evaluation points (x, y) for the Eisenstein subcommand.
    #[serde(default)]
    pub z: Vec<[f64; 2]>,
    #[serde(default)]
    pub s: Vec<f64>,
    /// Eisenstein route; defaults to Fourier on PSL(2,Z) and coset sums otherwise.
    #[serde(default)]
    pub route: Option<Route>,
    #[serde(default)]
    pub min_height: Option<f64>,
    /// Counting CSV read by `fit`.
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Fit models; empty means all.
    #[serde(default)]
    pub models: Vec<FitModel>,
    /// Rows with T below this are excluded from fits.
    #[serde(default = "default_min_t")]
    pub min_t: f64,
    /// Length of the q-expansion of the discriminant form.
    #[serde(default = "default_terms")]
    pub terms: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_group() -> String {
    "psl2z".into()
}
fn default_x0() -> [i64; 3] {
    [0, 1, 0]
}
fn default_norm() -> Norm {
    Norm::Sup
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_nodes() -> usize {
    50_000_000
}
fn default_slack() -> f64 {
    2.0
}
fn default_psi() -> String {
    "bump:default".into()
}
fn default_min_t() -> f64 {
    10.0
}
fn default_terms() -> usize {
    4000
}

impl ExperimentConfig {
    pub fn new(subcommand: Subcommand) -> Self {
        ExperimentConfig {
            subcommand,
            group: default_group(),
            x0: default_x0(),
            t: Vec::new(),
            q: None,
            norm: default_norm(),
            tol: default_tol(),
            max_nodes: default_max_nodes(),
            slack: default_slack(),
            psi: default_psi(),
            z: Vec::new(),
            s: Vec::new(),
            route: None,
            min_height: None,
            input: None,
            models: Vec::new(),
            min_t: default_min_t(),
            terms: default_terms(),
            out: None,
            seed: 0,
            threads: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if let Some(0) = self.threads {
            return bad("--threads must be at least 1".into());
        }
        let needs_t = matches!(self.subcommand, Subcommand::Count | Subcommand::CosetCount | Subcommand::Shear | Subcommand::Moment);
        if needs_t {
            if self.t.is_empty() {
                return bad("a T list is required".into());
            }
            if self.t.iter().any(|t| !t.is_finite()) || self.t.windows(2).any(|w| w[0] >= w[1]) {
                return bad("T values must be finite and strictly increasing".into());
            }
        }
        if matches!(self.subcommand, Subcommand::Count | Subcommand::CosetCount) && self.t[0] <= 0.0 {
            return bad("T values must be positive".into());
        }
        if self.subcommand == Subcommand::Moment && self.t[0] <= 1.0 {
            return bad("moment needs T > 1".into());
        }
        if self.subcommand == Subcommand::Shear && self.t[0] < 0.0 {
            return bad("shear needs T >= 0".into());
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive".into());
        }
        if !(self.slack >= 1.0) {
            return bad("slack must be at least 1".into());
        }
        match (self.subcommand, self.q) {
            (Subcommand::CosetCount, None) => return bad("coset-count needs --q".into()),
            (_, Some(q)) if q < 1 => return bad("q must be at least 1".into()),
            _ => {}
        }
        if self.x0 == [0, 0, 0] {
            return bad("x0 must be nonzero".into());
        }
        if self.subcommand == Subcommand::Fit && self.input.is_none() {
            return bad("fit needs --input".into());
        }
        if self.subcommand == Subcommand::Eisenstein {
            if self.z.is_empty() || self.s.is_empty() {
                return bad("eisenstein needs at least one --z and one --s".into());
            }
            if self.z.iter().any(|p| !(p[1] > 0.0) || !p[0].is_finite()) {
                return bad("evaluation points need y > 0".into());
            }
        }
        if matches!(self.subcommand, Subcommand::Moment | Subcommand::Kronecker) && !(100..=20_000).contains(&self.terms) {
            return bad("terms must lie in 100..=20000".into());
        }
        let spec = self.group_spec()?;
        if self.subcommand == Subcommand::Shear {
            parse_psi(&self.psi, &spec)?;
        }
        Ok(())
    }

    /// Resolves the group: a built-in name, else a JSON file.
    pub fn group_spec(&self) -> Result<GroupSpec, CliError> {
        if let Ok(g) = GroupSpec::builtin(&self.group) {
            return Ok(g);
        }
        let path = Path::new(&self.group);
        if path.is_file() {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("group file: {e}")))?;
            let spec = GroupSpec::from_json(&text).map_err(|e| CliError::Validation(e.to_string()))?;
            spec.check_cusps().map_err(|e| CliError::Validation(e.to_string()))?;
            return Ok(spec);
        }
        Err(CliError::Validation(format!("unknown group '{}' (built-ins: psl2z, thin4)", self.group)))
    }
}

/// Test function selected on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum PsiChoice {
    Bump(BumpParams),
    /// |Δ|² y^12 with the given number of q-expansion terms.
    Delta(usize),
}

/// Parses `bump:default`, `bump:cx=0,cy=2,rx=0.3,ry=0.7,beta=0` (any subset of keys), or
/// `delta` / `delta:N`.
pub fn parse_psi(text: &str, spec: &GroupSpec) -> Result<PsiChoice, CliError> {
    let bad = |m: &str| CliError::Validation(format!("--psi '{text}': {m}"));
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    match kind {
        "bump" => {
            let mut b = BumpParams::default();
            if !rest.is_empty() && rest != "default" {
                for kv in rest.split(',') {
                    let (k, v) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                    let v: f64 = v.trim().parse().map_err(|_| bad("value is not a number"))?;
                    match k.trim() {
                        "cx" => b.cx = v,
                        "cy" => b.cy = v,
                        "rx" => b.rx = v,
                        "ry" => b.ry = v,
                        "beta" => b.beta = v,
                        _ => return Err(bad("unknown bump key")),
                    }
                }
            }
            shearlab::testfn::TestFunction::bump(spec, b).map_err(|e| CliError::Validation(e.to_string()))?;
            Ok(PsiChoice::Bump(b))
        }
        "delta" => {
            let n = if rest.is_empty() { 200 } else { rest.parse().map_err(|_| bad("term count is not an integer"))? };
            if !(20..=20_000).contains(&n) {
                return Err(bad("term count must lie in 20..=20000"));
            }
            Ok(PsiChoice::Delta(n))
        }
        _ => Err(bad("expected bump:... or delta[:N]")),
    }
}
