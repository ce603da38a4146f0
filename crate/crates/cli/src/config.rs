//! Flat `key = value` experiment configs with dotted section names.
//!
//! ```text
//! experiment = FidelityScan
//! lattice.v = 1.3
//! lattice.gamma = 8/3
//! cavity.g = 11.1
//! sweep.param = lattice.v
//! sweep.start = 1.0
//! sweep.stop = 1.6
//! sweep.count = 31
//! ```
//!
//! `#` starts a comment. Numbers accept a simple `a/b` fraction form.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nhssh::fock::{CavityParams, SdscParams, DEFAULT_N_MAX};
use nhssh::lattice::LatticeParams;
use nhssh::meanfield::{ConjugateTerms, CorrelatorConvention, SolverConfig};
use nhssh::response::DiamagneticScaling;
use nhssh::C64;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    SpectrumObc,
    FidelityScan,
    FidelityMap,
    Wigner,
    Landscape,
    MetrologyScan,
    NonBloch,
    PhotonSpectral,
    DsvCompare,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::SpectrumObc,
        Experiment::FidelityScan,
        Experiment::FidelityMap,
        Experiment::Wigner,
        Experiment::Landscape,
        Experiment::MetrologyScan,
        Experiment::NonBloch,
        Experiment::PhotonSpectral,
        Experiment::DsvCompare,
    ];
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .iter()
            .copied()
            .find(|e| e.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| CliError::Config(format!("unknown experiment '{s}'")))
    }
}

/// Scalar parameters a sweep axis may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    V,
    W,
    Gamma,
    B0,
    A0,
    OmegaC,
    G,
}

impl SweepParam {
    pub fn key(self) -> &'static str {
        match self {
            SweepParam::V => "lattice.v",
            SweepParam::W => "lattice.w",
            SweepParam::Gamma => "lattice.gamma",
            SweepParam::B0 => "lattice.b0",
            SweepParam::A0 => "lattice.a0",
            SweepParam::OmegaC => "cavity.omega_c",
            SweepParam::G => "cavity.g",
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        [
            SweepParam::V,
            SweepParam::W,
            SweepParam::Gamma,
            SweepParam::B0,
            SweepParam::A0,
            SweepParam::OmegaC,
            SweepParam::G,
        ]
        .into_iter()
        .find(|p| p.key() == s)
        .ok_or_else(|| CliError::Config(format!("'{s}' is not a sweepable parameter")))
    }

    pub fn apply(self, lp: &mut LatticeParams, cp: &mut CavityParams, value: f64) {
        match self {
            SweepParam::V => lp.v = value,
            SweepParam::W => lp.w = value,
            SweepParam::Gamma => lp.gamma = value,
            SweepParam::B0 => lp.b0 = value,
            SweepParam::A0 => lp.a0 = value,
            SweepParam::OmegaC => cp.omega_c = value,
            SweepParam::G => cp.g_coupling = value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// How the fidelity reference state is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reference {
    /// Given squeezed displaced cat parameters.
    Fixed(SdscParams),
    /// Fit to the ground state at this value of the first sweep parameter,
    /// then hold fixed.
    FitAt(f64),
    /// Fit independently at every point.
    PerPoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub lattice: LatticeParams,
    pub cavity: CavityParams,
    pub solver: SolverConfig,
    pub sweep: Option<SweepAxis>,
    pub sweep2: Option<SweepAxis>,
    pub output_dir: PathBuf,
    pub reference: Reference,
    pub wigner_q: GridAxis,
    pub wigner_p: GridAxis,
    pub x_window: f64,
    /// Conjugate-term convention used when evaluating the semiclassical landscape.
    pub landscape_conjugate: ConjugateTerms,
    pub k_samples: usize,
    pub eta: Option<f64>,
    pub k_points: Option<usize>,
    pub diamagnetic: DiamagneticScaling,
    pub omega_max: Option<f64>,
    pub omega_count: usize,
    /// Every recognized `key = value` pair, in key order, for the manifest.
    pub echo: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "output_dir",
    "lattice.v",
    "lattice.w",
    "lattice.gamma",
    "lattice.l",
    "lattice.a0",
    "lattice.b0",
    "cavity.omega_c",
    "cavity.g",
    "cavity.n_max",
    "solver.tol",
    "solver.max_iter",
    "solver.mixing",
    "solver.min_mixing",
    "solver.convention",
    "solver.conjugate",
    "solver.degeneracy_tol",
    "sweep.param",
    "sweep.start",
    "sweep.stop",
    "sweep.count",
    "sweep2.param",
    "sweep2.start",
    "sweep2.stop",
    "sweep2.count",
    "reference.mode",
    "reference.at",
    "reference.r",
    "reference.lambda_re",
    "reference.lambda_im",
    "reference.alpha_re",
    "reference.alpha_im",
    "wigner.q_min",
    "wigner.q_max",
    "wigner.q_count",
    "wigner.p_min",
    "wigner.p_max",
    "wigner.p_count",
    "landscape.x_window",
    "landscape.conjugate",
    "nonbloch.k_samples",
    "response.eta",
    "response.k_points",
    "response.diamagnetic",
    "response.omega_max",
    "response.omega_count",
];

pub fn parse_number(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b) = (a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?);
            (b != 0.0).then_some(a / b)
        }
        None => s.trim().parse().ok(),
    }
}

/// Splits the text into `key -> value`, rejecting malformed lines, unknown
/// keys and duplicates.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KNOWN_KEYS.contains(&k) {
            return Err(CliError::Config(format!("line {}: unknown key '{k}'", lineno + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key '{k}'", lineno + 1)));
        }
    }
    Ok(map)
}

struct Pairs<'a>(&'a BTreeMap<String, String>);

impl Pairs<'_> {
    fn num(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(s) => parse_number(s).ok_or_else(|| CliError::Config(format!("{key}: '{s}' is not a number"))),
        }
    }

    fn opt_num(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.0.get(key).map(|_| self.num(key, 0.0)).transpose()
    }

    fn int(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::Config(format!("{key}: '{s}' is not a non-negative integer"))),
        }
    }

    fn sweep(&self, prefix: &str) -> Result<Option<SweepAxis>, CliError> {
        let key = format!("{prefix}.param");
        let Some(name) = self.0.get(&key) else {
            return Ok(None);
        };
        let param = SweepParam::parse(name)?;
        let start = self
            .opt_num(&format!("{prefix}.start"))?
            .ok_or_else(|| CliError::Config(format!("{prefix}.start is required")))?;
        let count = self.int(&format!("{prefix}.count"), 1)?;
        if count == 0 {
            return Err(CliError::Config(format!("{prefix}.count must be at least 1")));
        }
        let stop = self.num(&format!("{prefix}.stop"), start)?;
        Ok(Some(SweepAxis { param, start, stop, count }))
    }
}

/// See `nhssh::phasespace::classify_landscape` for why the landscape reads the
/// Hermitian-conjugate bonds as reversed correlators.
pub const DEFAULT_LANDSCAPE_CONJUGATE: ConjugateTerms = ConjugateTerms::Reversed;

fn conjugate_terms(map: &BTreeMap<String, String>, key: &str, default: ConjugateTerms) -> Result<ConjugateTerms, CliError> {
    match map.get(key).map(String::as_str) {
        None => Ok(default),
        Some("conjugate") => Ok(ConjugateTerms::ComplexConjugate),
        Some("reversed") => Ok(ConjugateTerms::Reversed),
        Some(s) => Err(CliError::Config(format!("{key}: unknown '{s}'"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let map = parse_pairs(text)?;
        let p = Pairs(&map);
        let experiment: Experiment = map
            .get("experiment")
            .ok_or_else(|| CliError::Config("'experiment' is required".into()))?
            .parse()?;
        let lattice = LatticeParams {
            v: p.num("lattice.v", 1.0)?,
            w: p.num("lattice.w", 1.0)?,
            gamma: p.num("lattice.gamma", 0.0)?,
            l: p.int("lattice.l", 40)?,
            a0: p.num("lattice.a0", 1.0)?,
            b0: p.num("lattice.b0", 0.5)?,
        };
        let cavity = CavityParams {
            omega_c: p.num("cavity.omega_c", 0.15)?,
            g_coupling: p.num("cavity.g", 0.0)?,
            n_max: p.int("cavity.n_max", DEFAULT_N_MAX)?,
        };
        let defaults = SolverConfig::default();
        let convention = match map.get("solver.convention").map(String::as_str) {
            None | Some("biorthogonal") => CorrelatorConvention::Biorthogonal,
            Some("right_right") => CorrelatorConvention::RightRight,
            Some(s) => return Err(CliError::Config(format!("solver.convention: unknown '{s}'"))),
        };
        let conjugate = conjugate_terms(&map, "solver.conjugate", ConjugateTerms::ComplexConjugate)?;
        let landscape_conjugate = conjugate_terms(&map, "landscape.conjugate", DEFAULT_LANDSCAPE_CONJUGATE)?;
        let solver = SolverConfig {
            tol: p.num("solver.tol", defaults.tol)?,
            max_iter: p.int("solver.max_iter", defaults.max_iter)?,
            mixing: p.num("solver.mixing", defaults.mixing)?,
            min_mixing: p.num("solver.min_mixing", defaults.min_mixing)?,
            convention,
            conjugate,
            degeneracy_tol: p.num("solver.degeneracy_tol", defaults.degeneracy_tol)?,
        };
        let reference = match map.get("reference.mode").map(String::as_str) {
            None | Some("per_point") => Reference::PerPoint,
            Some("fixed") => Reference::Fixed(SdscParams::new(
                C64::new(p.num("reference.r", 0.0)?, 0.0),
                C64::new(p.num("reference.lambda_re", 0.0)?, p.num("reference.lambda_im", 0.0)?),
                C64::new(p.num("reference.alpha_re", 0.0)?, p.num("reference.alpha_im", 0.0)?),
            )),
            Some("fit_at") => Reference::FitAt(
                p.opt_num("reference.at")?
                    .ok_or_else(|| CliError::Config("reference.at is required with reference.mode = fit_at".into()))?,
            ),
            Some(s) => return Err(CliError::Config(format!("reference.mode: unknown '{s}'"))),
        };
        let diamagnetic = match map.get("response.diamagnetic").map(String::as_str) {
            None | Some("peierls") => DiamagneticScaling::PeierlsOrder,
            Some("printed") => DiamagneticScaling::Printed,
            Some(s) => return Err(CliError::Config(format!("response.diamagnetic: unknown '{s}'"))),
        };
        let k_points = match map.get("response.k_points") {
            None => None,
            Some(_) => Some(p.int("response.k_points", 0)?),
        };
        Ok(ExperimentConfig {
            experiment,
            lattice,
            cavity,
            solver,
            sweep: p.sweep("sweep")?,
            sweep2: p.sweep("sweep2")?,
            output_dir: PathBuf::from(map.get("output_dir").map(String::as_str).unwrap_or("out")),
            reference,
            wigner_q: GridAxis {
                min: p.num("wigner.q_min", -6.0)?,
                max: p.num("wigner.q_max", 6.0)?,
                count: p.int("wigner.q_count", 121)?,
            },
            wigner_p: GridAxis {
                min: p.num("wigner.p_min", -6.0)?,
                max: p.num("wigner.p_max", 6.0)?,
                count: p.int("wigner.p_count", 121)?,
            },
            x_window: p.num("landscape.x_window", 6.0)?,
            landscape_conjugate,
            k_samples: p.int("nonbloch.k_samples", 256)?,
            eta: p.opt_num("response.eta")?,
            k_points,
            diamagnetic,
            omega_max: p.opt_num("response.omega_max")?,
            omega_count: p.int("response.omega_count", 400)?,
            echo: map,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Lattice and cavity parameters at one sweep point.
    pub fn point(&self, values: &[(SweepParam, f64)]) -> (LatticeParams, CavityParams) {
        let (mut lp, mut cp) = (self.lattice, self.cavity);
        for &(param, value) in values {
            param.apply(&mut lp, &mut cp, value);
        }
        (lp, cp)
    }

    /// All sweep points in row-major order (first axis slowest).
    pub fn points(&self) -> Vec<Vec<(SweepParam, f64)>> {
        match (&self.sweep, &self.sweep2) {
            (None, _) => vec![Vec::new()],
            (Some(a), None) => a.values().into_iter().map(|x| vec![(a.param, x)]).collect(),
            (Some(a), Some(b)) => a
                .values()
                .into_iter()
                .flat_map(|x| b.values().into_iter().map(move |y| vec![(a.param, x), (b.param, y)]))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Photon number needed before the cutoff is trusted: the Peierls phase
/// `theta = g max(b0, a0 - b0) / sqrt L` must be resolved, which takes
/// roughly `10 + 8 theta^2 n`-scale headroom; this uses `10 + 8 theta^2`.
fn cutoff_heuristic(lp: &LatticeParams, cp: &CavityParams) -> usize {
    let d = lp.b0.max(lp.a0 - lp.b0).abs();
    let theta = cp.g_coupling.abs() * d / (lp.l.max(1) as f64).sqrt();
    10 + (8.0 * theta * theta).ceil() as usize
}

/// Static checks of every sweep point; never runs a solver.
pub fn validate(cfg: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = Vec::new();
    let mut push = |severity: Severity, message: String| {
        if !out.iter().any(|d| d.message == message) {
            out.push(Diagnostic { severity, message });
        }
    };
    if let Err(e) = cfg.solver.validate() {
        push(Severity::Error, e.to_string());
    }
    for point in cfg.points() {
        let (lp, cp) = cfg.point(&point);
        if let Err(e) = lp.validate() {
            push(Severity::Error, e.to_string());
        }
        if let Err(e) = cp.validate() {
            push(Severity::Error, e.to_string());
        }
        if cp.g_coupling != 0.0 && cp.n_max < cutoff_heuristic(&lp, &cp) {
            push(
                Severity::Warning,
                format!(
                    "cutoff likely insufficient: n_max = {} for g = {}, b0 = {}, L = {}",
                    cp.n_max, cp.g_coupling, lp.b0, lp.l
                ),
            );
        }
    }
    if cfg.experiment == Experiment::FidelityMap && (cfg.sweep.is_none() || cfg.sweep2.is_none()) {
        push(Severity::Error, "FidelityMap needs both sweep and sweep2".into());
    }
    if cfg.sweep.is_none() && cfg.sweep2.is_some() {
        push(Severity::Error, "sweep2 given without sweep".into());
    }
    if let Reference::FitAt(_) = cfg.reference {
        if cfg.sweep.is_none() {
            push(Severity::Error, "reference.mode = fit_at needs a sweep".into());
        }
    }
    for (name, axis) in [("wigner.q", cfg.wigner_q), ("wigner.p", cfg.wigner_p)] {
        if axis.count < 2 || axis.max <= axis.min {
            push(Severity::Error, format!("{name}: need count >= 2 and max > min"));
        }
    }
    if cfg.eta.is_some_and(|e| e <= 0.0) {
        push(Severity::Error, "response.eta must be positive".into());
    }
    if cfg.k_points == Some(0) {
        push(Severity::Error, "response.k_points must be at least 1".into());
    }
    if cfg.k_samples < 16 {
        push(Severity::Error, "nonbloch.k_samples must be at least 16".into());
    }
    if cfg.omega_count < 2 {
        push(Severity::Error, "response.omega_count must be at least 2".into());
    }
    if let (Some(top), Some(eta)) = (cfg.omega_max, cfg.eta) {
        let spacing = top / (cfg.omega_count.max(2) - 1) as f64;
        if spacing > 0.5 * eta {
            push(
                Severity::Warning,
                format!("response axis spacing {spacing:.3e} exceeds eta/2; peaks of width eta may be missed"),
            );
        }
    }
    out
}
