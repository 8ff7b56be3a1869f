//! Command-line driver.
//!
//! Every subcommand is lowered to an [`ExperimentConfig`], validated, and
//! executed by [`run`]. `scarlab run --config file.json` takes the same
//! config directly. Trace experiments write one CSV plus a JSON sidecar into
//! the output directory; reports go to stdout.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::basis::{enumerate_blockaded_with, BasisLimits, BlockadedBasis};
use crate::dynamics::{exact_eigs, PropagatorConfig};
use crate::entanglement::{analytic_standard_entropy, entropy, rdm, Bipartition};
use crate::error::{Result, ScarError};
use crate::geometry::{
    chain, search_pairings, Boundary, CylinderVariant, Geometry, Graph, PairingPattern,
    DEFAULT_SEARCH_MAX_VERTICES,
};
use crate::mps::{
    finite_size_min_cut_entropy, min_cut_entropy_asymptotic, mps_amplitudes, to_geometry_order,
    ChainGeometry, CutKind, MpsMode, Parity, MIN_CUT_MAX_L,
};
use crate::operators::{apply_z, build_pxp, SparseOperator, StateVector};
use crate::protocols::{
    bell_initial_state, otoc_all, perturb, prepare, quench, butterfly_time, OtocMode, PrepTrace,
    BUTTERFLY_THRESHOLD,
};
use crate::scars::{build_lambda, check_symmetries, residual, ScarSpec};

/// Environment variable overriding the basis dimension guard.
pub const MAX_DIM_ENV: &str = "SCARLAB_MAX_DIM";

const DEFAULT_OUTPUT_DIR: &str = "scarlab-out";
const DEFAULT_SEED: u64 = 1;
const CROSSING_THRESHOLD: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Basis,
    Verify,
    SearchPairings,
    Entropy,
    MpsCheck,
    Spectrum,
    Prepare,
    Quench,
    Otoc,
    PerturbSweep,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Basis => "basis",
            Experiment::Verify => "verify",
            Experiment::SearchPairings => "search-pairings",
            Experiment::Entropy => "entropy",
            Experiment::MpsCheck => "mps-check",
            Experiment::Spectrum => "spectrum",
            Experiment::Prepare => "prepare",
            Experiment::Quench => "quench",
            Experiment::Otoc => "otoc",
            Experiment::PerturbSweep => "perturb-sweep",
        }
    }

    /// Config keys meaningful for this experiment besides `experiment`.
    fn allowed_keys(self) -> Vec<&'static str> {
        const SYSTEM: [&str; 6] = ["geometry", "L", "height", "variant", "graph_file", "pairing_file"];
        const PROP: [&str; 2] = ["krylov_dim", "step_tolerance"];
        const PREP: [&str; 4] = ["tau", "k_max", "initial", "measure"];
        const GRID: [&str; 3] = ["t_max", "dt", "threshold"];
        let mut keys: Vec<&str> = match self {
            Experiment::MpsCheck => vec!["L"],
            _ => SYSTEM.to_vec(),
        };
        let extra: Vec<&str> = match self {
            Experiment::Basis => vec!["list"],
            Experiment::Verify | Experiment::MpsCheck => vec![],
            Experiment::SearchPairings => vec!["max_vertices"],
            Experiment::Entropy => vec!["cut", "m", "subset"],
            Experiment::Spectrum => vec!["mu", "sigma", "seed", "output_dir"],
            Experiment::Prepare => [&PREP[..], &PROP[..], &["mu", "sigma", "seed", "output_dir"]].concat(),
            Experiment::Quench => {
                [&GRID[..], &PROP[..], &["kick", "mu", "sigma", "seed", "output_dir"]].concat()
            }
            Experiment::Otoc => [&GRID[..], &PROP[..], &["mode", "output_dir"]].concat(),
            Experiment::PerturbSweep => {
                [&PREP[..], &PROP[..], &["sigmas", "mu", "seed", "output_dir"]].concat()
            }
        };
        keys.extend(extra);
        keys
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// All spins down.
    Zero,
    /// Bell pairs on every other pair (even L only).
    Bell,
    /// The doubled eigenstate itself.
    Lambda,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureSet {
    /// Only the first pair.
    First,
    /// Every pair.
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OtocSelect {
    Approx,
    Exact,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CutSelect {
    /// Contiguous sites `0..m` (default `m = L`).
    Standard,
    /// Half cut keeping pairs intact, splitting one pair when L is odd.
    Min,
    /// Explicit vertex list.
    Subset,
}

/// One experiment, as read from JSON or assembled from flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// `chain-pbc`, `chain-obc`, `ring`, `dangler`, `grid`, `cylinder`,
    /// `decoupled-obc`, or `decoupled-pbc`.
    pub geometry: Option<String>,
    /// Chain length for `chain-*`, number of pairs otherwise.
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub height: Option<usize>,
    pub variant: Option<String>,
    pub graph_file: Option<PathBuf>,
    pub pairing_file: Option<PathBuf>,
    pub list: Option<bool>,
    pub max_vertices: Option<usize>,
    pub cut: Option<CutSelect>,
    pub m: Option<usize>,
    pub subset: Option<Vec<usize>>,
    pub tau: Option<f64>,
    pub k_max: Option<usize>,
    pub initial: Option<InitialState>,
    pub measure: Option<MeasureSet>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub sigmas: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub threshold: Option<f64>,
    pub kick: Option<usize>,
    pub mode: Option<OtocSelect>,
    pub krylov_dim: Option<usize>,
    pub step_tolerance: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            geometry: None,
            l: None,
            height: None,
            variant: None,
            graph_file: None,
            pairing_file: None,
            list: None,
            max_vertices: None,
            cut: None,
            m: None,
            subset: None,
            tau: None,
            k_max: None,
            initial: None,
            measure: None,
            mu: None,
            sigma: None,
            sigmas: None,
            seed: None,
            t_max: None,
            dt: None,
            threshold: None,
            kick: None,
            mode: None,
            krylov_dim: None,
            step_tolerance: None,
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| ScarError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Compact JSON with unset keys omitted.
    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut v {
            map.retain(|_, x| !x.is_null());
        }
        v
    }

    /// Rejects keys that the experiment does not use and out-of-range values.
    pub fn validate(&self) -> Result<()> {
        let allowed = self.experiment.allowed_keys();
        if let Value::Object(map) = self.to_value() {
            for key in map.keys().filter(|k| k.as_str() != "experiment") {
                if !allowed.contains(&key.as_str()) {
                    return Err(ScarError::Config(format!(
                        "key {key:?} is not used by {}",
                        self.experiment.name()
                    )));
                }
            }
        }
        if self.graph_file.is_some() && self.geometry.is_some() {
            return Err(ScarError::Config("give either geometry or graph_file, not both".into()));
        }
        if self.pairing_file.is_some() && self.graph_file.is_none() {
            return Err(ScarError::Config("pairing_file needs graph_file".into()));
        }
        let positive = [
            ("tau", self.tau),
            ("t_max", self.t_max),
            ("dt", self.dt),
            ("step_tolerance", self.step_tolerance),
        ];
        for (name, x) in positive {
            if let Some(x) = x {
                if !(x > 0.0) || !x.is_finite() {
                    return Err(ScarError::Config(format!("{name} must be positive, got {x}")));
                }
            }
        }
        let sigmas = self.sigma.into_iter().chain(self.sigmas.iter().flatten().copied());
        for s in sigmas {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(ScarError::Config(format!("sigma must be ≥ 0, got {s}")));
            }
        }
        if let Some(mu) = self.mu {
            if !mu.is_finite() {
                return Err(ScarError::Config("mu must be finite".into()));
            }
        }
        if let Some(th) = self.threshold {
            if !th.is_finite() {
                return Err(ScarError::Config("threshold must be finite".into()));
            }
        }
        if self.experiment == Experiment::PerturbSweep
            && self.sigmas.as_ref().map_or(true, |s| s.is_empty())
        {
            return Err(ScarError::Config("perturb-sweep needs a nonempty sigmas list".into()));
        }
        if self.cut == Some(CutSelect::Subset) && self.subset.is_none() {
            return Err(ScarError::Config("cut \"subset\" needs a subset list".into()));
        }
        if self.subset.is_some() && self.cut.map_or(false, |c| c != CutSelect::Subset) {
            return Err(ScarError::Config("subset is only used with cut \"subset\"".into()));
        }
        Ok(())
    }

    fn propagator(&self) -> Result<PropagatorConfig> {
        let mut cfg = PropagatorConfig::default();
        if let Some(k) = self.krylov_dim {
            cfg.krylov_dim = k;
        }
        if let Some(t) = self.step_tolerance {
            cfg.step_tolerance = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn times(&self, default_t_max: f64, default_dt: f64) -> Result<Vec<f64>> {
        let t_max = self.t_max.unwrap_or(default_t_max);
        let dt = self.dt.unwrap_or(default_dt);
        let n = (t_max / dt).round();
        if (n * dt - t_max).abs() > 1e-9 * t_max.max(1.0) {
            return Err(ScarError::Config(format!(
                "t_max = {t_max} is not a multiple of dt = {dt}"
            )));
        }
        Ok((0..=n as usize).map(|k| k as f64 * dt).collect())
    }
}

/// Basis limits, honoring [`MAX_DIM_ENV`].
pub fn basis_limits() -> Result<BasisLimits> {
    let mut limits = BasisLimits::default();
    if let Ok(raw) = std::env::var(MAX_DIM_ENV) {
        limits.max_dim = raw.trim().parse().map_err(|_| {
            ScarError::Config(format!("{MAX_DIM_ENV} must be a positive integer, got {raw:?}"))
        })?;
        if limits.max_dim == 0 {
            return Err(ScarError::Config(format!("{MAX_DIM_ENV} must be positive")));
        }
    }
    Ok(limits)
}

/// Parses a geometry descriptor.
pub fn parse_geometry(
    name: &str,
    l: usize,
    height: Option<usize>,
    variant: Option<&str>,
) -> Result<Geometry> {
    let need_height = || {
        height.ok_or_else(|| ScarError::Config(format!("geometry {name:?} needs height")))
    };
    let geom = match name {
        "chain-pbc" => Geometry::Chain { len: l, boundary: Boundary::Periodic },
        "chain-obc" => Geometry::Chain { len: l, boundary: Boundary::Open },
        "ring" => Geometry::RingDoubled { half_len: l },
        "dangler" => Geometry::Dangler { half_len: l },
        "grid" => Geometry::Grid { width: 2 * l, height: need_height()? },
        "cylinder" => Geometry::Cylinder {
            circumference: 2 * l,
            height: need_height()?,
            variant: variant.unwrap_or("pbc_ladder").parse::<CylinderVariant>()?,
        },
        "decoupled-obc" => Geometry::DecoupledChains { half_len: l, boundary: Boundary::Open },
        "decoupled-pbc" => Geometry::DecoupledChains { half_len: l, boundary: Boundary::Periodic },
        _ => return Err(ScarError::UnsupportedGeometry(format!("unknown geometry {name:?}"))),
    };
    let lattice = matches!(geom, Geometry::Grid { .. } | Geometry::Cylinder { .. });
    if height.is_some() && !lattice {
        return Err(ScarError::Config(format!("geometry {name:?} takes no height")));
    }
    if variant.is_some() && !matches!(geom, Geometry::Cylinder { .. }) {
        return Err(ScarError::Config(format!("geometry {name:?} takes no variant")));
    }
    Ok(geom)
}

/// Resolved interaction graph with its optional pairing.
struct System {
    label: String,
    graph: Graph,
    pairing: Option<PairingPattern>,
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| ScarError::Io(format!("{}: {e}", path.display())))
}

fn system(cfg: &ExperimentConfig) -> Result<System> {
    if let Some(path) = &cfg.graph_file {
        if cfg.l.is_some() || cfg.height.is_some() || cfg.variant.is_some() {
            return Err(ScarError::Config("L, height and variant describe a geometry, not a graph file".into()));
        }
        let graph = Graph::from_text(&read_file(path)?)?;
        let pairing = match &cfg.pairing_file {
            Some(p) => Some(PairingPattern::from_text(&read_file(p)?)?),
            None => None,
        };
        let stem = path.file_stem().map_or("graph".into(), |s| s.to_string_lossy().into_owned());
        return Ok(System { label: stem, graph, pairing });
    }
    let name = cfg
        .geometry
        .as_deref()
        .ok_or_else(|| ScarError::Config("need geometry or graph_file".into()))?;
    let l = cfg.l.ok_or_else(|| ScarError::Config("geometry needs L".into()))?;
    let geom = parse_geometry(name, l, cfg.height, cfg.variant.as_deref())?;
    let (graph, pairing) = geom.build()?;
    Ok(System { label: geom.label(), graph, pairing })
}

fn scar_spec(sys: &System) -> Result<ScarSpec> {
    let pairing = sys.pairing.clone().ok_or_else(|| {
        ScarError::Config(format!("{} has no pairing; supply one or run search-pairings", sys.label))
    })?;
    ScarSpec::with_limits(sys.graph.clone(), pairing, basis_limits()?)
}

/// Hamiltonian with optional Zeeman disorder.
fn hamiltonian(cfg: &ExperimentConfig, graph: &Graph, basis: &Arc<BlockadedBasis>) -> Result<SparseOperator> {
    let h = build_pxp(graph, basis, None, None)?;
    let (mu, sigma) = (cfg.mu.unwrap_or(0.0), cfg.sigma.unwrap_or(0.0));
    if mu == 0.0 && sigma == 0.0 {
        return Ok(h);
    }
    perturb(&h, graph, mu, sigma, cfg.seed.unwrap_or(DEFAULT_SEED))
}

/// A file produced by an experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Result of [`run`]: text for stdout and files for the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub stdout: String,
    pub files: Vec<OutputFile>,
}

/// Git-style content hash: SHA-256 of `"blob <len>\0" ++ bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Float rendering for CSV: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(columns: &[String]) -> Self {
        Csv { text: columns.join(",") + "\n" }
    }

    fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

fn report(value: Value) -> String {
    serde_json::to_string_pretty(&value).expect("report serializes") + "\n"
}

/// Executes one experiment without touching the filesystem except for
/// reading graph/pairing inputs.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let (summary, csv, stem) = match cfg.experiment {
        Experiment::Basis => return run_basis(cfg),
        Experiment::Verify => (run_verify(cfg)?, None, String::new()),
        Experiment::SearchPairings => (run_search(cfg)?, None, String::new()),
        Experiment::Entropy => (run_entropy(cfg)?, None, String::new()),
        Experiment::MpsCheck => (run_mps_check(cfg)?, None, String::new()),
        Experiment::Spectrum => {
            let (s, c, stem) = run_spectrum(cfg)?;
            (s, Some(c), stem)
        }
        Experiment::Prepare => {
            let (s, c, stem) = run_prepare(cfg)?;
            (s, Some(c), stem)
        }
        Experiment::Quench => {
            let (s, c, stem) = run_quench(cfg)?;
            (s, Some(c), stem)
        }
        Experiment::Otoc => {
            let (s, c, stem) = run_otoc(cfg)?;
            (s, Some(c), stem)
        }
        Experiment::PerturbSweep => {
            let (s, c, stem) = run_sweep(cfg)?;
            (s, Some(c), stem)
        }
    };
    let Some(csv) = csv else {
        return Ok(RunOutput { stdout: report(summary), files: vec![] });
    };
    let csv_name = format!("{stem}.csv");
    let bytes = csv.text.into_bytes();
    // The output location is left out so reruns elsewhere are byte-identical.
    let mut recorded = cfg.to_value();
    if let Value::Object(map) = &mut recorded {
        map.remove("output_dir");
    }
    let sidecar = json!({
        "config": recorded,
        "seed": cfg.seed.unwrap_or(DEFAULT_SEED),
        "csv": csv_name,
        "sha256": content_hash(&bytes),
        "version": env!("CARGO_PKG_VERSION"),
        "summary": summary,
    });
    let files = vec![
        OutputFile { name: csv_name, bytes },
        OutputFile { name: format!("{stem}.json"), bytes: report(sidecar).into_bytes() },
    ];
    Ok(RunOutput { stdout: report(summary), files })
}

/// Runs and writes files into the configured output directory.
pub fn execute(cfg: &ExperimentConfig) -> Result<String> {
    let out = run(cfg)?;
    if !out.files.is_empty() {
        let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        fs::create_dir_all(&dir).map_err(|e| ScarError::Io(format!("{}: {e}", dir.display())))?;
        for f in &out.files {
            let path = dir.join(&f.name);
            fs::write(&path, &f.bytes).map_err(|e| ScarError::Io(format!("{}: {e}", path.display())))?;
        }
    }
    Ok(out.stdout)
}

fn run_basis(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sys = system(cfg)?;
    let basis = enumerate_blockaded_with(&sys.graph, basis_limits()?)?;
    let mut out = format!("{}\n", basis.dim());
    if cfg.list.unwrap_or(false) {
        for &s in basis.states() {
            out.push_str(&basis.format_state(s));
            out.push('\n');
        }
    }
    Ok(RunOutput { stdout: out, files: vec![] })
}

fn run_verify(cfg: &ExperimentConfig) -> Result<Value> {
    let sys = system(cfg)?;
    let spec = scar_spec(&sys)?;
    let h = build_pxp(&spec.graph, &spec.full_basis, None, None)?;
    let v = build_lambda(&spec)?;
    let res = residual(&h, &v, 0.0)?;
    let sym = check_symmetries(&spec, &v)?;
    Ok(json!({
        "geometry": sys.label,
        "n_vertices": spec.graph.n_vertices(),
        "pairs": spec.pairing.pairs(),
        "half_dim": spec.half_basis.dim(),
        "full_dim": spec.full_basis.dim(),
        "energy": 0.0,
        "residual": res,
        "symmetry_max_deviation": sym.max_deviation(),
        "symmetries": sym,
        "eigenstate": res <= 1e-12,
    }))
}

fn run_search(cfg: &ExperimentConfig) -> Result<Value> {
    let sys = system(cfg)?;
    let max = cfg.max_vertices.unwrap_or(DEFAULT_SEARCH_MAX_VERTICES);
    let found = search_pairings(&sys.graph, max)?;
    let list: Vec<Value> = found
        .iter()
        .map(|(p, half)| {
            json!({
                "pairs": p.pairs(),
                "half_graph_edges": half.edges().collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(json!({
        "geometry": sys.label,
        "n_vertices": sys.graph.n_vertices(),
        "count": found.len(),
        "pairings": list,
    }))
}

/// Pairs `0..k` on both sides plus the first member of pair `k` when the
/// number of pairs is odd.
fn pair_cut(pairing: &PairingPattern) -> Vec<usize> {
    let l = pairing.len();
    let k = l / 2;
    let mut a: Vec<usize> = pairing.pairs()[..k].iter().flat_map(|&(x, y)| [x, y]).collect();
    if l % 2 == 1 {
        a.push(pairing.pairs()[k].0);
    }
    a.sort_unstable();
    a
}

fn chain_kind(graph: &Graph, l: usize) -> Option<ChainGeometry> {
    let (ring, _) = Geometry::RingDoubled { half_len: l }.build().ok()?;
    let (dangler, _) = Geometry::Dangler { half_len: l }.build().ok()?;
    if *graph == ring {
        Some(ChainGeometry::Ring)
    } else if *graph == dangler {
        Some(ChainGeometry::Dangler)
    } else {
        None
    }
}

fn run_entropy(cfg: &ExperimentConfig) -> Result<Value> {
    let sys = system(cfg)?;
    let spec = scar_spec(&sys)?;
    let v = build_lambda(&spec)?;
    let n = spec.graph.n_vertices();
    let l = spec.half_len();
    let cut = cfg.cut.unwrap_or(CutSelect::Standard);
    if cfg.m.is_some() && cut != CutSelect::Standard {
        return Err(ScarError::Config("m is only used with the standard cut".into()));
    }
    let subset: Vec<usize> = match cut {
        CutSelect::Standard => {
            let m = cfg.m.unwrap_or(l);
            if m == 0 || m >= n {
                return Err(ScarError::Config(format!("m must lie in 1..{n}, got {m}")));
            }
            (0..m).collect()
        }
        CutSelect::Min => pair_cut(&spec.pairing),
        CutSelect::Subset => cfg.subset.clone().unwrap_or_default(),
    };
    let part = Bipartition::new(&subset, n)?;
    let s = entropy(&rdm(&v, &part)?)?;
    let kind = chain_kind(&spec.graph, l);
    let analytic = match (cut, kind) {
        (CutSelect::Standard, Some(ChainGeometry::Ring)) => {
            Some(analytic_standard_entropy(l, cfg.m.unwrap_or(l))?)
        }
        _ => None,
    };
    let asymptotic = match (cut, kind) {
        (CutSelect::Min, Some(g)) => {
            let ck = if l % 2 == 0 { CutKind::Regular } else { CutKind::PairSplitting };
            min_cut_entropy_asymptotic(ck, g, Parity::of(l)).ok()
        }
        _ => None,
    };
    Ok(json!({
        "geometry": sys.label,
        "subset_a": part.subset_a(),
        "entropy": s,
        "analytic": analytic,
        "asymptotic": asymptotic,
        "ln_half_dim": (spec.half_basis.dim() as f64).ln(),
    }))
}

fn run_mps_check(cfg: &ExperimentConfig) -> Result<Value> {
    let l = cfg.l.ok_or_else(|| ScarError::Config("mps-check needs L".into()))?;
    let mut modes = serde_json::Map::new();
    for (name, mode, geom) in [
        ("trace", MpsMode::Trace, Geometry::RingDoubled { half_len: l }),
        ("boundary", MpsMode::Boundary, Geometry::Dangler { half_len: l }),
    ] {
        let spec = ScarSpec::from_geometry_with(&geom, basis_limits()?)?;
        let lambda = build_lambda(&spec)?;
        let mps = to_geometry_order(&mps_amplitudes(l, mode)?, l, &spec.full_basis)?;
        modes.insert(name.into(), json!({ "max_deviation": mps.distance(&lambda)? }));
    }
    let mut min_cut = serde_json::Map::new();
    if l <= MIN_CUT_MAX_L {
        let ck = if l % 2 == 0 { CutKind::Regular } else { CutKind::PairSplitting };
        for (name, g) in [("ring", ChainGeometry::Ring), ("dangler", ChainGeometry::Dangler)] {
            min_cut.insert(
                name.into(),
                json!({
                    "finite_size": finite_size_min_cut_entropy(l, g, ck)?,
                    "asymptotic": min_cut_entropy_asymptotic(ck, g, Parity::of(l))?,
                }),
            );
        }
    }
    Ok(json!({ "L": l, "modes": modes, "min_cut": min_cut }))
}

fn run_spectrum(cfg: &ExperimentConfig) -> Result<(Value, Csv, String)> {
    let sys = system(cfg)?;
    let basis = enumerate_blockaded_with(&sys.graph, basis_limits()?)?;
    let h = hamiltonian(cfg, &sys.graph, &basis)?;
    let eig = exact_eigs(&h)?;
    let lambda = match &sys.pairing {
        Some(_) => Some(build_lambda(&scar_spec(&sys)?)?),
        None => None,
    };
    let mut cols = vec!["index".to_string(), "energy".into()];
    if lambda.is_some() {
        cols.push("lambda_overlap".into());
    }
    let mut csv = Csv::new(&cols);
    let dim = eig.values.len();
    let mut best = (0usize, 0.0f64);
    for (k, &e) in eig.values.iter().enumerate() {
        let mut row = vec![k.to_string(), fmt_f64(e)];
        if let Some(lam) = &lambda {
            let col = eig.vectors.column(k);
            let ov: f64 = col
                .iter()
                .zip(lam.amplitudes())
                .map(|(a, b)| a.conj() * b)
                .sum::<num_complex::Complex64>()
                .norm_sqr();
            if ov > best.1 {
                best = (k, ov);
            }
            row.push(fmt_f64(ov));
        }
        csv.row(&row);
    }
    let zero_modes = eig.values.iter().filter(|e| e.abs() < 1e-9).count();
    let summary = json!({
        "geometry": sys.label,
        "dim": dim,
        "zero_modes": zero_modes,
        "max_lambda_overlap": lambda.as_ref().map(|_| best.1),
        "max_lambda_overlap_energy": lambda.as_ref().map(|_| eig.values[best.0]),
    });
    Ok((summary, csv, format!("spectrum-{}", sys.label)))
}

fn initial_state(
    kind: InitialState,
    spec: &ScarSpec,
    lambda: &StateVector,
) -> Result<StateVector> {
    match kind {
        InitialState::Zero => StateVector::basis_state(spec.full_basis.clone(), 0),
        InitialState::Bell => bell_initial_state(spec.half_len(), &spec.full_basis, &spec.pairing),
        InitialState::Lambda => Ok(lambda.clone()),
    }
}

fn measured_pairs(cfg: &ExperimentConfig, spec: &ScarSpec) -> Vec<(usize, usize)> {
    match cfg.measure.unwrap_or(MeasureSet::First) {
        MeasureSet::First => vec![spec.pairing.pairs()[0]],
        MeasureSet::All => spec.pairing.pairs().to_vec(),
    }
}

const PREP_COLUMNS: [&str; 5] = ["k", "t", "conditional_probability", "p_k", "infidelity"];

fn prep_rows(trace: &PrepTrace, prefix: &[String], csv: &mut Csv) {
    for s in &trace.steps {
        let mut row = prefix.to_vec();
        row.extend([
            s.k.to_string(),
            fmt_f64(s.t),
            fmt_f64(s.conditional_probability),
            fmt_f64(s.p_k),
            fmt_f64(s.infidelity),
        ]);
        csv.row(&row);
    }
}

fn prep_summary(trace: &PrepTrace) -> Value {
    let last = trace.steps.last().expect("trace has row 0");
    json!({
        "steps": last.k,
        "final_infidelity": last.infidelity,
        "min_infidelity": trace.steps.iter().map(|s| s.infidelity).fold(f64::INFINITY, f64::min),
        "final_p_k": last.p_k,
        "annihilated": trace.annihilated,
    })
}

fn run_prepare(cfg: &ExperimentConfig) -> Result<(Value, Csv, String)> {
    let sys = system(cfg)?;
    let spec = scar_spec(&sys)?;
    let lambda = build_lambda(&spec)?;
    let h = hamiltonian(cfg, &spec.graph, &spec.full_basis)?;
    let kind = cfg.initial.unwrap_or(InitialState::Zero);
    let psi0 = initial_state(kind, &spec, &lambda)?;
    let pairs = measured_pairs(cfg, &spec);
    let trace = prepare(
        &h,
        &pairs,
        cfg.tau.unwrap_or(1.0),
        cfg.k_max.unwrap_or(60),
        &psi0,
        &lambda,
        &cfg.propagator()?,
    )?;
    let cols: Vec<String> = PREP_COLUMNS.iter().map(|s| s.to_string()).collect();
    let mut csv = Csv::new(&cols);
    prep_rows(&trace, &[], &mut csv);
    let mut summary = prep_summary(&trace);
    summary["geometry"] = json!(sys.label);
    summary["initial_overlap"] = json!(lambda.fidelity(&psi0)?);
    Ok((summary, csv, format!("prepare-{}", sys.label)))
}

fn run_quench(cfg: &ExperimentConfig) -> Result<(Value, Csv, String)> {
    let sys = system(cfg)?;
    let spec = scar_spec(&sys)?;
    let l = spec.half_len();
    let n = spec.graph.n_vertices();
    let lambda = build_lambda(&spec)?;
    let h = hamiltonian(cfg, &spec.graph, &spec.full_basis)?;
    let kick = cfg.kick.unwrap_or(spec.pairing.pairs()[l - 1].0);
    let psi = apply_z(&lambda, kick)?;
    let times = cfg.times(40.0, 0.5)?;
    let pairs = spec.pairing.pairs().to_vec();
    let standard: Vec<usize> = pairs.iter().map(|&(a, _)| a).collect();
    let cuts = vec![Bipartition::new(&standard, n)?, Bipartition::new(&pair_cut(&spec.pairing), n)?];
    let trace = quench(&h, &psi, &times, &pairs, &cuts, &cfg.propagator()?)?;

    let mut cols = vec!["t".to_string()];
    cols.extend((0..l).map(|p| format!("zz_{p}")));
    cols.extend(["s_standard".to_string(), "s_pair_cut".to_string()]);
    let mut csv = Csv::new(&cols);
    for (k, &t) in trace.times.iter().enumerate() {
        let mut row = vec![fmt_f64(t)];
        row.extend(trace.correlators[k].iter().map(|&x| fmt_f64(x)));
        row.extend(trace.entropies[k].iter().map(|&x| fmt_f64(x)));
        csv.row(&row);
    }
    let threshold = cfg.threshold.unwrap_or(CROSSING_THRESHOLD);
    let crossings: Vec<Option<f64>> = (0..l).map(|p| trace.first_crossing(p, threshold)).collect();
    let last = trace.entropies.last().cloned().unwrap_or_default();
    let summary = json!({
        "geometry": sys.label,
        "kick": kick,
        "threshold": threshold,
        "first_crossing": crossings,
        "final_entropies": last,
        "page_estimate": (spec.half_basis.dim() as f64).ln() - 0.5,
    });
    Ok((summary, csv, format!("quench-{}", sys.label)))
}

/// OTOC takes the single-copy graph `G_A`: `chain-obc`/`chain-pbc` or a graph file.
fn otoc_half_graph(cfg: &ExperimentConfig) -> Result<(String, Graph)> {
    if cfg.graph_file.is_some() {
        let sys = system(cfg)?;
        return Ok((sys.label, sys.graph));
    }
    let l = cfg.l.ok_or_else(|| ScarError::Config("otoc needs L".into()))?;
    let boundary = match cfg.geometry.as_deref().unwrap_or("chain-obc") {
        "chain-obc" => Boundary::Open,
        "chain-pbc" => Boundary::Periodic,
        other => {
            return Err(ScarError::Config(format!(
                "otoc takes the single-copy graph (chain-obc, chain-pbc, or graph_file), got {other:?}"
            )))
        }
    };
    Ok((Geometry::Chain { len: l, boundary }.label(), chain(l, boundary)?))
}

fn run_otoc(cfg: &ExperimentConfig) -> Result<(Value, Csv, String)> {
    let (label, g_a) = otoc_half_graph(cfg)?;
    let l = g_a.n_vertices();
    let times = cfg.times(20.0, 0.25)?;
    let prop = cfg.propagator()?;
    let modes: Vec<(&str, OtocMode)> = match cfg.mode.unwrap_or(OtocSelect::Both) {
        OtocSelect::Approx => vec![("approx", OtocMode::Approx)],
        OtocSelect::Exact => vec![("exact", OtocMode::Exact)],
        OtocSelect::Both => vec![("approx", OtocMode::Approx), ("exact", OtocMode::Exact)],
    };
    let threshold = cfg.threshold.unwrap_or(BUTTERFLY_THRESHOLD);
    let mut cols = vec!["t".to_string()];
    let mut traces = Vec::new();
    let mut summary = serde_json::Map::new();
    for (name, mode) in &modes {
        let trace = otoc_all(&g_a, &times, *mode, &prop)?;
        cols.extend((0..l).map(|i| format!("{name}_{i}")));
        summary.insert(
            format!("butterfly_time_{name}"),
            json!(butterfly_time(&times, &trace.correlator_series(0), threshold)),
        );
        traces.push(trace);
    }
    let mut csv = Csv::new(&cols);
    for (k, &t) in times.iter().enumerate() {
        let mut row = vec![fmt_f64(t)];
        for tr in &traces {
            row.extend(tr.correlators[k].iter().map(|&x| fmt_f64(x)));
        }
        csv.row(&row);
    }
    summary.insert("graph".into(), json!(label));
    summary.insert("threshold".into(), json!(threshold));
    Ok((Value::Object(summary), csv, format!("otoc-{label}")))
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<(Value, Csv, String)> {
    let sys = system(cfg)?;
    let spec = scar_spec(&sys)?;
    let lambda = build_lambda(&spec)?;
    let h0 = build_pxp(&spec.graph, &spec.full_basis, None, None)?;
    let psi0 = initial_state(cfg.initial.unwrap_or(InitialState::Zero), &spec, &lambda)?;
    let pairs = measured_pairs(cfg, &spec);
    let prop = cfg.propagator()?;
    let (mu, seed) = (cfg.mu.unwrap_or(0.0), cfg.seed.unwrap_or(DEFAULT_SEED));
    let mut cols = vec!["sigma".to_string()];
    cols.extend(PREP_COLUMNS.iter().map(|s| s.to_string()));
    let mut csv = Csv::new(&cols);
    let mut runs = Vec::new();
    for &sigma in cfg.sigmas.as_deref().unwrap_or_default() {
        let h = perturb(&h0, &spec.graph, mu, sigma, seed)?;
        let energy = lambda.expectation(&h)?.re;
        let trace = prepare(
            &h,
            &pairs,
            cfg.tau.unwrap_or(1.0),
            cfg.k_max.unwrap_or(60),
            &psi0,
            &lambda,
            &prop,
        )?;
        prep_rows(&trace, &[fmt_f64(sigma)], &mut csv);
        let mut s = prep_summary(&trace);
        s["sigma"] = json!(sigma);
        s["lambda_residual"] = json!(residual(&h, &lambda, energy)?);
        runs.push(s);
    }
    let summary = json!({ "geometry": sys.label, "mu": mu, "seed": seed, "runs": runs });
    Ok((summary, csv, format!("perturb-sweep-{}", sys.label)))
}

// ---------------------------------------------------------------------------
// Command-line surface

#[derive(Debug, Parser)]
#[command(name = "scarlab", version, about = "Doubled scar eigenstates of PXP models on graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the blockaded basis dimension (and optionally the states).
    Basis {
        #[command(flatten)]
        system: SystemArgs,
        /// Also list every basis state, vertex 0 leftmost.
        #[arg(long)]
        list: bool,
    },
    /// Residual and symmetry report for the doubled eigenstate.
    Verify {
        #[command(flatten)]
        system: SystemArgs,
    },
    /// Exhaustive search for pairings satisfying the eigenstate condition.
    SearchPairings {
        #[command(flatten)]
        system: SystemArgs,
        /// Refuse graphs larger than this.
        #[arg(long)]
        max_vertices: Option<usize>,
    },
    /// Entanglement entropy of the doubled state across a cut.
    Entropy {
        #[command(flatten)]
        system: SystemArgs,
        /// standard, min, or subset (with --subset).
        #[arg(long, value_enum)]
        cut: Option<CutSelect>,
        /// Number of contiguous sites for the standard cut.
        #[arg(long)]
        m: Option<usize>,
        /// Explicit subsystem, comma separated.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<usize>>,
    },
    /// Compare the MPS against the direct construction; min-cut entropies.
    MpsCheck {
        /// Number of pairs.
        #[arg(long = "L", alias = "l")]
        l: usize,
    },
    /// Dense spectrum with overlaps on the doubled state (CSV).
    Spectrum {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Postselected preparation trace (CSV).
    Prepare {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        prep: PrepArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        prop: PropArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Quench from the kicked doubled state (CSV).
    Quench {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Vertex carrying the Z kick (default: first member of the last pair).
        #[arg(long)]
        kick: Option<usize>,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        prop: PropArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// OTOC proxies from the single-copy graph (CSV).
    Otoc {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// approx, exact, or both (default both).
        #[arg(long, value_enum)]
        mode: Option<OtocSelect>,
        #[command(flatten)]
        prop: PropArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Preparation under seeded Zeeman disorder for several strengths (CSV).
    PerturbSweep {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        prep: PrepArgs,
        /// Disorder strengths, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        sigmas: Vec<f64>,
        /// Mean of the Zeeman fields.
        #[arg(long, allow_negative_numbers = true)]
        mu: Option<f64>,
        /// RNG seed for the fields (default 1).
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        prop: PropArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run an experiment described by a JSON config.
    Run {
        /// Path to the JSON config.
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// chain-pbc, chain-obc, ring, dangler, grid, cylinder, decoupled-obc, decoupled-pbc.
    #[arg(long)]
    geometry: Option<String>,
    /// Chain length for chain-*, number of pairs otherwise.
    #[arg(long = "L", alias = "l")]
    l: Option<usize>,
    /// Lattice height for grid and cylinder.
    #[arg(long)]
    height: Option<usize>,
    /// Cylinder pairing: pbc_ladder, moebius, obc_ladder[:offset].
    #[arg(long)]
    variant: Option<String>,
    /// Edge-list graph file instead of a geometry.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Pairing file to go with --graph.
    #[arg(long)]
    pairing: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    /// Evolution time between measurements (default 1).
    #[arg(long)]
    tau: Option<f64>,
    /// Number of postselected steps (default 60).
    #[arg(long = "kmax", alias = "k-max")]
    k_max: Option<usize>,
    #[arg(long, value_enum)]
    initial: Option<InitialState>,
    #[arg(long, value_enum)]
    measure: Option<MeasureSet>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Mean of the Zeeman fields.
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Standard deviation of the Zeeman fields.
    #[arg(long)]
    sigma: Option<f64>,
    /// RNG seed for the fields (default 1).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// End of the time grid; must be a multiple of --dt.
    #[arg(long)]
    t_max: Option<f64>,
    /// Grid spacing.
    #[arg(long)]
    dt: Option<f64>,
    /// Correlator threshold for crossing / butterfly times.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PropArgs {
    /// Krylov subspace size (default 30).
    #[arg(long)]
    krylov_dim: Option<usize>,
    /// Error tolerance per propagator step (default 1e-10).
    #[arg(long)]
    step_tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Directory for CSV and sidecar files.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

impl SystemArgs {
    fn apply(self, c: &mut ExperimentConfig) {
        c.geometry = self.geometry;
        c.l = self.l;
        c.height = self.height;
        c.variant = self.variant;
        c.graph_file = self.graph;
        c.pairing_file = self.pairing;
    }
}

impl PrepArgs {
    fn apply(self, c: &mut ExperimentConfig) {
        c.tau = self.tau;
        c.k_max = self.k_max;
        c.initial = self.initial;
        c.measure = self.measure;
    }
}

impl NoiseArgs {
    fn apply(self, c: &mut ExperimentConfig) {
        c.mu = self.mu;
        c.sigma = self.sigma;
        c.seed = self.seed;
    }
}

impl GridArgs {
    fn apply(self, c: &mut ExperimentConfig) {
        c.t_max = self.t_max;
        c.dt = self.dt;
        c.threshold = self.threshold;
    }
}

impl PropArgs {
    fn apply(self, c: &mut ExperimentConfig) {
        c.krylov_dim = self.krylov_dim;
        c.step_tolerance = self.step_tolerance;
    }
}

impl Command {
    /// Lowers flags to a config; `run` reads and parses the file.
    pub fn into_config(self) -> Result<ExperimentConfig> {
        let mut c;
        match self {
            Command::Run { config } => return ExperimentConfig::from_json(&read_file(&config)?),
            Command::Basis { system, list } => {
                c = ExperimentConfig::new(Experiment::Basis);
                system.apply(&mut c);
                c.list = list.then_some(true);
            }
            Command::Verify { system } => {
                c = ExperimentConfig::new(Experiment::Verify);
                system.apply(&mut c);
            }
            Command::SearchPairings { system, max_vertices } => {
                c = ExperimentConfig::new(Experiment::SearchPairings);
                system.apply(&mut c);
                c.max_vertices = max_vertices;
            }
            Command::Entropy { system, cut, m, subset } => {
                c = ExperimentConfig::new(Experiment::Entropy);
                system.apply(&mut c);
                c.cut = if subset.is_some() && cut.is_none() { Some(CutSelect::Subset) } else { cut };
                c.m = m;
                c.subset = subset;
            }
            Command::MpsCheck { l } => {
                c = ExperimentConfig::new(Experiment::MpsCheck);
                c.l = Some(l);
            }
            Command::Spectrum { system, noise, out } => {
                c = ExperimentConfig::new(Experiment::Spectrum);
                system.apply(&mut c);
                noise.apply(&mut c);
                c.output_dir = out.out;
            }
            Command::Prepare { system, prep, noise, prop, out } => {
                c = ExperimentConfig::new(Experiment::Prepare);
                system.apply(&mut c);
                prep.apply(&mut c);
                noise.apply(&mut c);
                prop.apply(&mut c);
                c.output_dir = out.out;
            }
            Command::Quench { system, grid, kick, noise, prop, out } => {
                c = ExperimentConfig::new(Experiment::Quench);
                system.apply(&mut c);
                grid.apply(&mut c);
                c.kick = kick;
                noise.apply(&mut c);
                prop.apply(&mut c);
                c.output_dir = out.out;
            }
            Command::Otoc { system, grid, mode, prop, out } => {
                c = ExperimentConfig::new(Experiment::Otoc);
                system.apply(&mut c);
                grid.apply(&mut c);
                c.mode = mode;
                prop.apply(&mut c);
                c.output_dir = out.out;
            }
            Command::PerturbSweep { system, prep, sigmas, mu, seed, prop, out } => {
                c = ExperimentConfig::new(Experiment::PerturbSweep);
                system.apply(&mut c);
                prep.apply(&mut c);
                c.sigmas = Some(sigmas);
                c.mu = mu;
                c.seed = seed;
                prop.apply(&mut c);
                c.output_dir = out.out;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

/// Machine-readable error line for stderr.
pub fn error_json(err: &ScarError) -> String {
    json!({
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
            "exit_code": err.exit_code(),
        }
    })
    .to_string()
}

/// Entry point used by the binary; returns the process exit code.
/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                emit(&e.to_string());
                return 0;
            }
            let err = ScarError::Config(e.to_string().trim().to_string());
            eprintln!("{}", error_json(&err));
            return err.exit_code();
        }
    };
    match cli.command.into_config().and_then(|c| execute(&c)) {
        Ok(text) => {
            emit(&text);
            0
        }
        Err(err) => {
            eprintln!("{}", error_json(&err));
            err.exit_code()
        }
    }
}
