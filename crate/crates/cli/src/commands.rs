//! Command implementations. Each writes its outputs under `Options::out_dir`,
//! prints a short summary on stdout and returns its main result.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use pxc_core::cavity::BareMode;
use pxc_core::compare::{calibrate_eta, delta_rho, i_metric, CalibrationResult, DensityPair};
use pxc_core::fields::{integrate, write_grid_file, Axis, Grid, ScalarField};
use pxc_core::kohn_sham::{
    external_potential, lowest_eigenpairs_with, KSState, KohnSham, ScfOptions, ScfRecord, SystemSpec,
};
use pxc_core::oracle::{fock_convergence, fock_csv, FockRow, PFConfig, PFGroundState};
use pxc_core::Error;

use crate::config::{Reference, RunConfig};
use crate::output::{common_grid, out_path, read_density, write_cuts, write_text, RunLog};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct Options {
    pub out_dir: PathBuf,
    /// Override the Poisson boundary check.
    pub force: bool,
    /// Overrides `oracle.seed`.
    pub seed: Option<u64>,
}

impl Options {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self { out_dir: out_dir.into(), force: false, seed: None }
    }
}

fn history_csv(history: &[ScfRecord]) -> String {
    let mut s = String::from("iter,density_change,eig_drift\n");
    for r in history {
        s.push_str(&format!("{},{:.17e},{:.17e}\n", r.iter, r.density_change, r.eig_drift));
    }
    s
}

fn write_density(dir: &Path, name: &str, field: &ScalarField, comment: &str) -> Result<(), CliError> {
    Ok(write_grid_file(out_path(dir, name)?, field, comment)?)
}

fn cut_center(cfg: Option<&RunConfig>) -> [f64; 3] {
    cfg.and_then(|c| c.nuclei.first()).map_or([0.0; 3], |n| n.position)
}

/// Log `result`'s error, flush the run log and pass the result on.
fn finish<T>(log: &mut RunLog, dir: &Path, result: Result<T, CliError>) -> Result<T, CliError> {
    if let Err(e) = &result {
        log.push(format!("error: {e}"));
    }
    log.write(dir)?;
    result
}

fn scf_options(cfg: &RunConfig, opts: &Options) -> ScfOptions {
    ScfOptions { force: opts.force, ..cfg.scf.clone() }
}

/// Self-consistent Kohn-Sham run.
pub fn cmd_scf(cfg: &RunConfig, opts: &Options) -> Result<KSState, CliError> {
    let dir = &opts.out_dir;
    let mut log = RunLog::new("scf");
    log.section("config", &cfg.echo());
    let result = (|| {
        let spec = cfg.system()?;
        log.grid("grid", spec.grid());
        let modes = cfg.modes();
        let ks = KohnSham::new(&spec, &modes, cfg.pxc_params(), cfg.xc, opts.force)?;
        for m in ks.modes() {
            log.mode("dressed mode", spec.n_electrons(), m);
        }
        log.push(format!(
            "xc = {}, pxc = {}",
            cfg.xc.name(),
            match cfg.pxc_params() {
                Some(p) if !modes.is_empty() => format!("on (eta_c = {})", p.eta_c),
                Some(_) => "on, no cavity mode".to_string(),
                None => "off".to_string(),
            }
        ));
        match ks.solve(&scf_options(cfg, opts)) {
            Ok(state) => {
                write_text(dir, "scf_history.csv", &history_csv(&state.scf_history))?;
                write_density(dir, &cfg.output_density, &state.density, "electron density (bohr^-3)")?;
                log.push(format!("converged in {} iterations", state.scf_history.len()));
                for (i, e) in state.eigenvalues.iter().enumerate() {
                    log.push(format!("eps_{i} = {e:.12} Ha"));
                }
                log.push(format!("integrated density = {:.12}", integrate(&state.density)));
                println!("scf converged in {} iterations, eps_0 = {:.10} Ha", state.scf_history.len(), state.eigenvalues[0]);
                Ok(state)
            }
            Err(Error::ScfNotConverged { iterations, density_change, eig_drift, history }) => {
                write_text(dir, "scf_history.csv", &history_csv(&history))?;
                Err(CliError::Numerical(format!(
                    "SCF did not converge after {iterations} iterations (last density change {density_change:e}, eigenvalue drift {eig_drift:e})"
                )))
            }
            Err(e) => Err(e.into()),
        }
    })();
    finish(&mut log, dir, result)
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub rows: Vec<FockRow>,
    pub state: PFGroundState,
    /// Lowest eigenvalue of the electronic Hamiltonian alone.
    pub electronic_eps0: f64,
    /// `electronic_eps0 + omega_tilde / 2`, the uncoupled ground-state energy.
    pub decoupled_energy: f64,
}

fn oracle_config(cfg: &RunConfig, mode: &BareMode, opts: &Options) -> Result<PFConfig, CliError> {
    if cfg.n_electrons != 1 || cfg.interactions {
        return Err(CliError::Usage(format!(
            "the oracle solves one electron without Hartree or xc terms; set system.n_electrons = 1 and system.interactions = off (got {} electrons, interactions {})",
            cfg.n_electrons,
            if cfg.interactions { "on" } else { "off" }
        )));
    }
    let spec = SystemSpec::new(cfg.nuclei.clone(), 1, cfg.oracle.grid()?, false)?;
    let mut pf = PFConfig::new(spec, mode, cfg.oracle.n_max)?;
    pf.eig_tol = cfg.oracle.eig_tol;
    pf.seed = opts.seed.unwrap_or(cfg.oracle.seed);
    Ok(pf)
}

/// Exact one-electron ground state with a Fock-truncation study.
pub fn cmd_oracle(cfg: &RunConfig, opts: &Options) -> Result<OracleReport, CliError> {
    let dir = &opts.out_dir;
    let mut log = RunLog::new("oracle");
    log.section("config", &cfg.echo());
    let result = (|| {
        let mode = cfg.require_mode()?;
        let pf = oracle_config(cfg, &mode, opts)?;
        log.grid("oracle grid", pf.spec().grid());
        log.mode("dressed mode", 1, pf.mode());
        log.push(format!("n_max list = {:?}, seed = {}, eig_tol = {:e}", cfg.oracle.n_max_list, pf.seed, pf.eig_tol));
        let (rows, state) = fock_convergence(&pf, &cfg.oracle.n_max_list)?;
        write_text(dir, "fock_convergence.csv", &fock_csv(&rows))?;
        write_density(dir, &cfg.output_density, &state.electron_density, "oracle electron density (bohr^-3)")?;
        let v = external_potential(pf.spec());
        let eps0 = lowest_eigenpairs_with(&v, 1, &cfg.scf.eigen, &[])?.values[0];
        let decoupled = eps0 + 0.5 * pf.mode().omega_tilde;
        for r in &rows {
            log.push(format!("n_max = {}: E0 = {:.12} Ha, I_vs_prev = {:?}", r.n_max, r.energy, r.i_vs_prev));
        }
        log.push(format!("E0 = {:.12} Ha (residual {:.3e}, {} matvecs)", state.energy, state.residual, state.matvecs));
        log.push(format!("mean photon number = {:.6e}", state.photon_number));
        log.push(format!("electronic eps_0 = {eps0:.12} Ha, eps_0 + omega_tilde/2 = {decoupled:.12} Ha"));
        println!("E0_ha={:.12} decoupled_ha={decoupled:.12}", state.energy);
        Ok(OracleReport { rows, state, electronic_eps0: eps0, decoupled_energy: decoupled })
    })();
    finish(&mut log, dir, result)
}

/// Kohn-Sham solver parametrized by `eta_c`, warm-started from the previous
/// run and caching each in-cavity density difference.
struct KsRunner<'a> {
    spec: &'a SystemSpec,
    mode: BareMode,
    cfg: &'a RunConfig,
    opts: ScfOptions,
    rho_out: ScalarField,
    target: Grid,
    prev: Option<KSState>,
    deltas: HashMap<u64, ScalarField>,
}

impl<'a> KsRunner<'a> {
    fn new(spec: &'a SystemSpec, mode: BareMode, cfg: &'a RunConfig, opts: ScfOptions, target: Grid) -> Result<Self, CliError> {
        // Reject incommensurate grids before any solve.
        ScalarField::zeros(spec.grid()).restrict_to(&target).map_err(|_| {
            CliError::Usage(format!("grid mismatch: reference grid {target} vs solver grid {}", spec.grid()))
        })?;
        let out = KohnSham::new(spec, &[mode], None, cfg.xc, opts.force)?.solve(&opts)?;
        Ok(Self { spec, mode, cfg, opts, rho_out: out.density, target, prev: None, deltas: HashMap::new() })
    }

    fn run(&mut self, eta: f64) -> pxc_core::Result<DensityPair> {
        let ks = KohnSham::new(self.spec, &[self.mode], Some(self.cfg.pxc.with_eta(eta)?), self.cfg.xc, self.opts.force)?;
        let state = ks.solve_from(&self.opts, self.prev.as_ref())?;
        let pair = DensityPair::new(state.density.restrict_to(&self.target)?, self.rho_out.restrict_to(&self.target)?)?;
        self.deltas.insert(eta.to_bits(), pair.delta.clone());
        self.prev = Some(state);
        Ok(pair)
    }
}

/// Calibrate `eta_c` against an oracle, file or self-generated reference.
pub fn cmd_calibrate(cfg: &RunConfig, opts: &Options) -> Result<CalibrationResult, CliError> {
    let dir = &opts.out_dir;
    let mut log = RunLog::new("calibrate");
    log.section("config", &cfg.echo());
    let result = (|| {
        let mode = cfg.require_mode()?;
        let scf = scf_options(cfg, opts);
        let (spec, reference) = match &cfg.reference {
            Reference::Oracle => {
                let pf = oracle_config(cfg, &mode, opts)?;
                log.push("reference: oracle; Kohn-Sham runs use the oracle grid".to_string());
                log.grid("grid", pf.spec().grid());
                log.mode("dressed mode", 1, pf.mode());
                let coupled = pxc_core::oracle::pf_ground_state(&pf)?;
                let free_mode = BareMode::new(mode.omega(), 0.0, mode.epsilon())?;
                let free = pxc_core::oracle::pf_ground_state(&oracle_config(cfg, &free_mode, opts)?)?;
                log.push(format!("oracle E0 = {:.12} Ha (cavity-free {:.12} Ha)", coupled.energy, free.energy));
                let spec = pf.spec().clone();
                (spec, DensityPair::new(coupled.electron_density, free.electron_density)?)
            }
            Reference::Files { rho_in, rho_out } => {
                log.push(format!("reference: files {} and {}", rho_in.display(), rho_out.display()));
                let spec = cfg.system()?;
                log.grid("grid", spec.grid());
                let pair = DensityPair::new(read_density(rho_in)?, read_density(rho_out)?)?;
                log.grid("reference grid", pair.delta.grid());
                (spec, pair)
            }
            Reference::SelfAt(eta) => {
                log.push(format!("reference: self-generated at eta_c = {eta}"));
                let spec = cfg.system()?;
                log.grid("grid", spec.grid());
                let zero = ScalarField::zeros(spec.grid());
                (spec, DensityPair::new(zero.clone(), zero)?)
            }
        };
        let target = reference.delta.grid().clone();
        let mut runner = KsRunner::new(&spec, mode, cfg, scf, target)?;
        let reference = match &cfg.reference {
            Reference::SelfAt(eta) => {
                let pair = runner.run(*eta)?;
                runner.prev = None;
                runner.deltas.clear();
                pair
            }
            _ => reference,
        };
        if !matches!(cfg.reference, Reference::Oracle) {
            let dressed = pxc_core::cavity::dress(&mode, spec.n_electrons())?;
            log.mode("dressed mode", spec.n_electrons(), &dressed);
        }

        let res = match calibrate_eta(&reference, |eta| runner.run(eta), &cfg.scan) {
            Ok(res) => res,
            Err(Error::Runner { eta, source, partial }) => {
                write_text(dir, "calibration.csv", &partial.to_csv())?;
                return Err(CliError::Numerical(format!("calibration runner failed at eta_c = {eta}: {source}")));
            }
            Err(e) => return Err(e.into()),
        };
        write_text(dir, "calibration.csv", &res.trace.to_csv())?;
        let best = runner.deltas[&res.eta_star.to_bits()].clone();
        write_density(dir, "delta_rho.grid", &best, &format!("calibrated density difference, eta_c = {}", res.eta_star))?;
        write_density(dir, "delta_rho_reference.grid", &reference.delta, "reference density difference")?;
        let mut columns = vec![("reference", &reference.delta), ("calibrated", &best)];
        let pxlda = runner.deltas.get(&1.0f64.to_bits());
        if let Some(d) = pxlda {
            columns.push(("eta_1", d));
        }
        write_cuts(dir, "", &cfg.cut_axes, cut_center(Some(cfg)), &columns)?;
        for s in &res.trace.stages {
            log.push(format!("stage {}: step {:e}, {} points", s.stage, s.step, s.points.len()));
        }
        if let Some(i1) = res.i_at(1.0) {
            log.push(format!("I(eta_c = 1) = {i1:.12e}"));
        }
        let summary = format!("eta_star={} I_star={:e}", res.eta_star, res.i_star);
        log.push(summary.clone());
        println!("{summary}");
        Ok(res)
    })();
    finish(&mut log, dir, result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareReport {
    pub i: f64,
    pub max_abs_a: f64,
    pub max_abs_b: f64,
}

/// `I` between the density differences of two in/out pairs.
pub fn cmd_compare(
    a: (&Path, &Path),
    b: (&Path, &Path),
    axes: &[Axis],
    opts: &Options,
) -> Result<CompareReport, CliError> {
    let dir = &opts.out_dir;
    let mut log = RunLog::new("compare");
    let result = (|| {
        let da = delta_rho(&read_density(a.0)?, &read_density(a.1)?)?;
        let db = delta_rho(&read_density(b.0)?, &read_density(b.1)?)?;
        log.grid("grid a", da.grid());
        log.grid("grid b", db.grid());
        let (da, db) = common_grid(da, db)?;
        let report = CompareReport { i: i_metric(&da, &db)?, max_abs_a: da.max_abs(), max_abs_b: db.max_abs() };
        write_density(dir, "delta_rho_a.grid", &da, "density difference a")?;
        write_density(dir, "delta_rho_b.grid", &db, "density difference b")?;
        write_cuts(dir, "", axes, cut_center(None), &[("delta_a", &da), ("delta_b", &db)])?;
        let summary = format!("I={:e} max_abs_delta_a={:e} max_abs_delta_b={:e}", report.i, report.max_abs_a, report.max_abs_b);
        log.push(summary.clone());
        println!("{summary}");
        Ok(report)
    })();
    finish(&mut log, dir, result)
}

/// `rho_in - rho_out` with line cuts.
pub fn cmd_deltarho(rho_in: &Path, rho_out: &Path, axes: &[Axis], opts: &Options) -> Result<ScalarField, CliError> {
    let dir = &opts.out_dir;
    let mut log = RunLog::new("deltarho");
    let result = (|| {
        let d = delta_rho(&read_density(rho_in)?, &read_density(rho_out)?)?;
        log.grid("grid", d.grid());
        write_density(dir, "delta_rho.grid", &d, "density difference")?;
        write_cuts(dir, "", axes, cut_center(None), &[("delta_rho", &d)])?;
        let summary = format!("max_abs_delta={:e} integral={:e}", d.max_abs(), integrate(&d));
        log.push(summary.clone());
        println!("{summary}");
        Ok(d)
    })();
    finish(&mut log, dir, result)
}
