//! Flat `key = value` run configuration with dotted keys.
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors. Physical inputs are in Hartree atomic units, except `*_ev` keys
//! which are converted once here.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pxc_core::cavity::{ev_to_hartree, BareMode};
use pxc_core::compare::ScanOptions;
use pxc_core::fields::{Axis, Direction, Grid};
use pxc_core::functionals::{PxcParams, XcChoice};
use pxc_core::kohn_sham::{EigenOptions, Mixing, Nucleus, ScfOptions, SystemSpec};

use crate::CliError;

/// Every accepted key with its default; `None` means no default.
const KEYS: &[(&str, Option<&str>)] = &[
    ("system.nuclei", None),
    ("system.n_electrons", None),
    ("system.interactions", Some("on")),
    ("grid.half_width_bohr", Some("8.0")),
    ("grid.spacing_bohr", Some("0.25")),
    ("cavity.omega_ev", None),
    ("cavity.omega_ha", None),
    ("cavity.lambda", None),
    ("cavity.polarization", Some("z")),
    ("xc.choice", Some("lda_pz81")),
    ("pxc.enabled", Some("true")),
    ("pxc.eta_c", Some("1.0")),
    ("pxc.density_floor", Some("1e-12")),
    ("scf.mixing", Some("linear")),
    ("scf.alpha", Some("0.3")),
    ("scf.pulay_depth", Some("5")),
    ("scf.max_iter", Some("200")),
    ("scf.tol_density", Some("1e-7")),
    ("scf.tol_eig", Some("1e-7")),
    ("eigen.tol", Some("1e-8")),
    ("eigen.max_iter", Some("2000")),
    ("oracle.n_max", Some("4")),
    ("oracle.n_max_list", None),
    ("oracle.eig_tol", Some("1e-8")),
    ("oracle.seed", Some("1")),
    ("oracle.half_width_bohr", Some("8.0")),
    ("oracle.spacing_bohr", Some("0.4")),
    ("scan.eta_min", Some("0.0")),
    ("scan.eta_max", Some("1.5")),
    ("scan.step", Some("0.1")),
    ("scan.min_improvement", Some("1e-3")),
    ("scan.max_stages", Some("4")),
    ("calibrate.reference", Some("oracle")),
    ("calibrate.reference_in", None),
    ("calibrate.reference_out", None),
    ("calibrate.self_eta", Some("0.3")),
    ("output.density", Some("density.grid")),
    ("output.cut_axes", Some("z")),
];

const REQUIRED: &[&str] = &["system.nuclei", "system.n_electrons"];

#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Oracle,
    Files { rho_in: PathBuf, rho_out: PathBuf },
    /// Generated by the Kohn-Sham solver itself at the given `eta_c`.
    SelfAt(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSettings {
    pub n_max: usize,
    pub n_max_list: Vec<usize>,
    pub eig_tol: f64,
    pub seed: u64,
    pub half_width: f64,
    pub spacing: f64,
}

impl OracleSettings {
    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::cube(self.half_width, self.spacing)?)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub nuclei: Vec<Nucleus>,
    pub n_electrons: usize,
    pub interactions: bool,
    pub half_width: f64,
    pub spacing: f64,
    pub mode: Option<BareMode>,
    pub xc: XcChoice,
    pub pxc_enabled: bool,
    pub pxc: PxcParams,
    pub scf: ScfOptions,
    pub oracle: OracleSettings,
    pub scan: ScanOptions,
    pub reference: Reference,
    pub output_density: String,
    pub cut_axes: Vec<Axis>,
    /// Resolved `(key, value, from_file)` in key order, for the run log.
    entries: Vec<(String, String, bool)>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| usage(format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(usage(format!("{key}: expected on/off, got '{v}'"))),
    }
}

fn unquote(v: &str) -> &str {
    v.trim().trim_matches('"').trim()
}

/// `[{x=0, y=0, z=0, Z=1, a=0.5}, ...]`; `:` is accepted in place of `=`.
pub fn parse_nuclei(v: &str) -> Result<Vec<Nucleus>, CliError> {
    let key = "system.nuclei";
    let body = v
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| usage(format!("{key}: expected a list in brackets, got '{v}'")))?;
    let mut nuclei = Vec::new();
    let mut rest = body.trim();
    while !rest.is_empty() {
        let open = rest.find('{').ok_or_else(|| usage(format!("{key}: expected '{{' in '{rest}'")))?;
        if !rest[..open].trim().trim_matches(',').trim().is_empty() {
            return Err(usage(format!("{key}: unexpected text '{}'", &rest[..open])));
        }
        let close = rest.find('}').ok_or_else(|| usage(format!("{key}: unclosed '{{'")))?;
        let mut fields = BTreeMap::new();
        for item in rest[open + 1..close].split(',').filter(|s| !s.trim().is_empty()) {
            let (k, val) = item
                .split_once('=')
                .or_else(|| item.split_once(':'))
                .ok_or_else(|| usage(format!("{key}: expected name=value, got '{item}'")))?;
            let k = k.trim();
            if !["x", "y", "z", "Z", "a"].contains(&k) {
                return Err(usage(format!("{key}: unknown nucleus field '{k}' (expected x, y, z, Z, a)")));
            }
            if fields.insert(k.to_string(), parse_num::<f64>(key, val)?).is_some() {
                return Err(usage(format!("{key}: field '{k}' given twice")));
            }
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| usage(format!("{key}: nucleus is missing '{k}'")));
        nuclei.push(Nucleus::new([get("x")?, get("y")?, get("z")?], get("Z")?, get("a")?)?);
        rest = rest[close + 1..].trim().trim_start_matches(',').trim();
    }
    Ok(nuclei)
}

/// `x`, `y`, `z` or three comma-separated components.
pub fn parse_polarization(v: &str) -> Result<Direction, CliError> {
    let v = unquote(v);
    if let Ok(axis) = v.parse::<Axis>() {
        return Ok(Direction::along(axis));
    }
    let parts: Vec<f64> = v
        .split(',')
        .map(|p| parse_num("cavity.polarization", p))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Ok(Direction::new([a, b, c])?),
        _ => Err(usage(format!("cavity.polarization: expected x|y|z or \"cx,cy,cz\", got '{v}'"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    unquote(v).split(',').map(|p| parse_num(key, p)).collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parse config text; relative input paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut given: BTreeMap<String, String> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("line {}: expected 'key = value', got '{line}'", n + 1)))?;
            let k = k.trim();
            if !KEYS.iter().any(|(name, _)| *name == k) {
                return Err(usage(format!("line {}: unknown key '{k}'", n + 1)));
            }
            if given.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(usage(format!("line {}: key '{k}' given twice", n + 1)));
            }
        }
        for key in REQUIRED {
            if !given.contains_key(*key) {
                return Err(usage(format!("missing required key '{key}'")));
            }
        }

        let mut entries = Vec::new();
        let mut values: BTreeMap<&str, String> = BTreeMap::new();
        for (key, default) in KEYS {
            if let Some(v) = given.get(*key) {
                entries.push((key.to_string(), v.clone(), true));
                values.insert(key, v.clone());
            } else if let Some(d) = default {
                values.insert(key, d.to_string());
                if !key.starts_with("cavity.") || given.keys().any(|k| k.starts_with("cavity.")) {
                    entries.push((key.to_string(), d.to_string(), false));
                }
            }
        }
        let get = |k: &str| values.get(k).map(String::as_str);
        let req = |k: &'static str| get(k).ok_or_else(|| usage(format!("missing required key '{k}'")));

        let nuclei = parse_nuclei(req("system.nuclei")?)?;
        let n_electrons: usize = parse_num("system.n_electrons", req("system.n_electrons")?)?;
        let interactions = parse_bool("system.interactions", req("system.interactions")?)?;
        let half_width = parse_num("grid.half_width_bohr", req("grid.half_width_bohr")?)?;
        let spacing = parse_num("grid.spacing_bohr", req("grid.spacing_bohr")?)?;

        let mode = if given.keys().any(|k| k.starts_with("cavity.")) {
            let omega = match (given.get("cavity.omega_ev"), given.get("cavity.omega_ha")) {
                (Some(ev), None) => ev_to_hartree(parse_num("cavity.omega_ev", ev)?),
                (None, Some(ha)) => parse_num("cavity.omega_ha", ha)?,
                (Some(_), Some(_)) => return Err(usage("give exactly one of cavity.omega_ev and cavity.omega_ha, not both")),
                (None, None) => return Err(usage("missing required key 'cavity.omega_ev' (or 'cavity.omega_ha')")),
            };
            let lambda = parse_num("cavity.lambda", req("cavity.lambda")?)?;
            let eps = parse_polarization(req("cavity.polarization")?)?;
            Some(BareMode::new(omega, lambda, eps)?)
        } else {
            None
        };

        let xc: XcChoice = unquote(req("xc.choice")?).parse()?;
        let pxc_enabled = parse_bool("pxc.enabled", req("pxc.enabled")?)?;
        let pxc = PxcParams::new(
            parse_num("pxc.eta_c", req("pxc.eta_c")?)?,
            parse_num("pxc.density_floor", req("pxc.density_floor")?)?,
        )?;

        let alpha = parse_num("scf.alpha", req("scf.alpha")?)?;
        let mixing = match unquote(req("scf.mixing")?) {
            "linear" => Mixing::Linear { alpha },
            "pulay" => Mixing::Pulay { alpha, depth: parse_num("scf.pulay_depth", req("scf.pulay_depth")?)? },
            other => return Err(usage(format!("scf.mixing: expected linear or pulay, got '{other}'"))),
        };
        mixing.validate()?;
        let scf = ScfOptions {
            mixing,
            max_iter: parse_num("scf.max_iter", req("scf.max_iter")?)?,
            tol_density: parse_num("scf.tol_density", req("scf.tol_density")?)?,
            tol_eig: parse_num("scf.tol_eig", req("scf.tol_eig")?)?,
            eigen: EigenOptions {
                tol: parse_num("eigen.tol", req("eigen.tol")?)?,
                max_iter: parse_num("eigen.max_iter", req("eigen.max_iter")?)?,
                ..EigenOptions::default()
            },
            force: false,
        };

        let n_max: usize = parse_num("oracle.n_max", req("oracle.n_max")?)?;
        let n_max_list = match get("oracle.n_max_list") {
            Some(v) => parse_list("oracle.n_max_list", v)?,
            None => {
                let mut list: Vec<usize> = [1, 2, 4, 6, 8].into_iter().filter(|&m| m < n_max).collect();
                list.push(n_max);
                list
            }
        };
        if n_max_list.last() != Some(&n_max) || n_max_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(usage(format!(
                "oracle.n_max_list must be ascending and end at oracle.n_max = {n_max}, got {n_max_list:?}"
            )));
        }
        let oracle = OracleSettings {
            n_max,
            n_max_list,
            eig_tol: parse_num("oracle.eig_tol", req("oracle.eig_tol")?)?,
            seed: parse_num("oracle.seed", req("oracle.seed")?)?,
            half_width: parse_num("oracle.half_width_bohr", req("oracle.half_width_bohr")?)?,
            spacing: parse_num("oracle.spacing_bohr", req("oracle.spacing_bohr")?)?,
        };

        let scan = ScanOptions {
            eta_min: parse_num("scan.eta_min", req("scan.eta_min")?)?,
            eta_max: parse_num("scan.eta_max", req("scan.eta_max")?)?,
            step: parse_num("scan.step", req("scan.step")?)?,
            min_improvement: parse_num("scan.min_improvement", req("scan.min_improvement")?)?,
            max_stages: parse_num("scan.max_stages", req("scan.max_stages")?)?,
        };
        scan.validate()?;

        let reference = match unquote(req("calibrate.reference")?) {
            "oracle" => Reference::Oracle,
            "self" => Reference::SelfAt(parse_num("calibrate.self_eta", req("calibrate.self_eta")?)?),
            "files" => {
                let resolve = |k: &'static str| -> Result<PathBuf, CliError> {
                    let p = base.join(unquote(req(k).map_err(|_| usage(format!("calibrate.reference = files needs '{k}'")))?));
                    if p.is_file() {
                        Ok(p)
                    } else {
                        Err(usage(format!("{k}: no such file {}", p.display())))
                    }
                };
                Reference::Files { rho_in: resolve("calibrate.reference_in")?, rho_out: resolve("calibrate.reference_out")? }
            }
            other => return Err(usage(format!("calibrate.reference: expected oracle, files or self, got '{other}'"))),
        };

        let cut_axes = parse_axes(req("output.cut_axes")?)?;
        let cfg = Self {
            nuclei,
            n_electrons,
            interactions,
            half_width,
            spacing,
            mode,
            xc,
            pxc_enabled,
            pxc,
            scf,
            oracle,
            scan,
            reference,
            output_density: unquote(req("output.density")?).to_string(),
            cut_axes,
            entries,
        };
        cfg.system()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::cube(self.half_width, self.spacing)?)
    }

    pub fn system(&self) -> Result<SystemSpec, CliError> {
        Ok(SystemSpec::new(self.nuclei.clone(), self.n_electrons, self.grid()?, self.interactions)?)
    }

    pub fn modes(&self) -> Vec<BareMode> {
        self.mode.into_iter().collect()
    }

    pub fn require_mode(&self) -> Result<BareMode, CliError> {
        self.mode.ok_or_else(|| usage("this command needs a cavity mode (cavity.lambda and cavity.omega_ev or cavity.omega_ha)"))
    }

    /// Electron-photon parameters, or `None` when the pxc term is off.
    pub fn pxc_params(&self) -> Option<PxcParams> {
        self.pxc_enabled.then_some(self.pxc)
    }

    /// `key = value` lines with defaults marked.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v, from_file) in &self.entries {
            out.push_str(&format!("{k} = {v}{}\n", if *from_file { "" } else { "  # default" }));
        }
        out
    }
}

pub fn parse_axes(v: &str) -> Result<Vec<Axis>, CliError> {
    let axes: Vec<Axis> = unquote(v)
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Axis>())
        .collect::<Result<_, _>>()?;
    if axes.is_empty() {
        return Err(usage("no cut axes given"));
    }
    Ok(axes)
}
