//! One pipeline per experiment. Each sweep point is computed independently
//! (in parallel when enabled) and returns rows and files; the collector then
//! writes everything in point order so output is byte-identical across runs.

use std::path::Path;
use std::time::Instant;

use nhssh::fock::{self, CavityParams, SdscParams};
use nhssh::lattice::{self, DressedHoppings, LatticeParams};
use nhssh::meanfield::{self_consistent_solve, MeanFieldSolution};
use nhssh::metrology::MetrologyReport;
use nhssh::phasespace::{self, Landscape};
use nhssh::response::{self, ResponseConfig};
use nhssh::{par, C64};

use crate::config::{Experiment, ExperimentConfig, Reference, SweepParam};
use crate::output::{self, num, Column, Table};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    Unconverged,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Unconverged => "unconverged",
            Status::Failed => "failed",
        }
    }

    fn of(sol: &MeanFieldSolution) -> Self {
        if sol.converged {
            Status::Converged
        } else {
            Status::Unconverged
        }
    }
}

#[derive(Clone, Debug)]
pub struct PointRecord {
    pub index: usize,
    pub values: Vec<(SweepParam, f64)>,
    pub status: Status,
    pub iterations: usize,
    pub residual: f64,
    pub message: Option<String>,
}

#[derive(Clone, Debug)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub points: Vec<PointRecord>,
    pub files: Vec<String>,
    pub notes: Vec<String>,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.status == Status::Converged)
    }

    pub fn render(&self, cfg: &ExperimentConfig, threads: Option<usize>) -> String {
        let mut out = String::from("# nhssh run manifest\n");
        out.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("experiment = {}\n", self.experiment));
        out.push_str(&format!("parallel = {}\n", par::is_parallel()));
        if let Some(t) = threads {
            out.push_str(&format!("threads = {t}\n"));
        }
        out.push_str(&format!("wall_time_s = {:.3}\n", self.wall_time_s));
        for (k, v) in &cfg.echo {
            out.push_str(&format!("config.{k} = {v}\n"));
        }
        for n in &self.notes {
            out.push_str(&format!("note = {n}\n"));
        }
        for f in &self.files {
            out.push_str(&format!("file = {f}\n"));
        }
        for p in &self.points {
            let vals: Vec<String> = p.values.iter().map(|(k, v)| format!("{}={}", k.key(), num(*v))).collect();
            out.push_str(&format!(
                "point.{} = {} status={} iterations={} residual={}",
                p.index,
                if vals.is_empty() { "-".to_string() } else { vals.join(" ") },
                p.status.as_str(),
                p.iterations,
                num(p.residual)
            ));
            if let Some(m) = &p.message {
                out.push_str(&format!(" message=\"{}\"", m.replace('"', "'")));
            }
            out.push('\n');
        }
        out
    }
}

/// What one sweep point produces.
struct PointOutput {
    status: Status,
    iterations: usize,
    residual: f64,
    message: Option<String>,
    summary: Vec<String>,
    long_rows: Vec<Vec<String>>,
    files: Vec<(String, String)>,
}

impl PointOutput {
    fn failed(message: String, width: usize) -> Self {
        PointOutput {
            status: Status::Failed,
            iterations: 0,
            residual: f64::NAN,
            message: Some(message),
            summary: vec!["nan".into(); width],
            long_rows: Vec::new(),
            files: Vec::new(),
        }
    }

    fn from_solution(sol: &MeanFieldSolution, summary: Vec<String>) -> Self {
        PointOutput {
            status: Status::of(sol),
            iterations: sol.iterations,
            residual: sol.residual,
            message: None,
            summary,
            long_rows: Vec::new(),
            files: Vec::new(),
        }
    }
}

fn unit_of(p: SweepParam) -> &'static str {
    match p {
        SweepParam::B0 | SweepParam::A0 => "length",
        _ => "energy",
    }
}

fn bool_cell(b: bool) -> String {
    if b { "1" } else { "0" }.into()
}

struct Pipeline<'a> {
    cfg: &'a ExperimentConfig,
    summary_name: &'static str,
    summary_cols: Vec<Column>,
    long: Option<(&'static str, Vec<Column>)>,
}

fn solve(lp: &LatticeParams, cp: &CavityParams, cfg: &ExperimentConfig) -> Result<MeanFieldSolution, String> {
    self_consistent_solve(lp, cp, &cfg.solver).map_err(|e| e.to_string())
}

fn sdsc_cells(p: &SdscParams) -> Vec<String> {
    vec![num(p.r.re), num(p.lambda.re), num(p.lambda.im), num(p.alpha.re), num(p.alpha.im)]
}

fn sdsc_columns() -> Vec<Column> {
    vec![
        Column::new("r", "1"),
        Column::new("lambda_re", "1"),
        Column::new("lambda_im", "1"),
        Column::new("alpha_re", "1"),
        Column::new("alpha_im", "1"),
    ]
}

fn status_columns() -> Vec<Column> {
    vec![Column::new("status", "converged|unconverged|failed"), Column::new("iterations", "1")]
}

/// Reference state for fidelity experiments, resolved before the sweep.
fn resolve_reference(cfg: &ExperimentConfig, notes: &mut Vec<String>) -> Result<Option<SdscParams>, CliError> {
    match cfg.reference {
        Reference::PerPoint => Ok(None),
        Reference::Fixed(p) => Ok(Some(p)),
        Reference::FitAt(x) => {
            let axis = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("fit_at needs a sweep".into()))?;
            let (lp, cp) = cfg.point(&[(axis.param, x)]);
            let sol = solve(&lp, &cp, cfg).map_err(|e| CliError::Config(format!("reference solve failed: {e}")))?;
            let (p, f) = phasespace::fit_sdsc(&sol.photon_ground, None);
            notes.push(format!(
                "reference fitted at {}={} (converged={}): r={} lambda={}{:+}i alpha={}{:+}i fidelity={}",
                axis.param.key(),
                num(x),
                sol.converged,
                num(p.r.re),
                num(p.lambda.re),
                num(p.lambda.im),
                num(p.alpha.re),
                num(p.alpha.im),
                num(f)
            ));
            Ok(Some(p))
        }
    }
}

fn fidelity_point(
    cfg: &ExperimentConfig,
    lp: &LatticeParams,
    cp: &CavityParams,
    reference: Option<&SdscParams>,
) -> Result<PointOutput, String> {
    let sol = solve(lp, cp, cfg)?;
    let phi = &sol.photon_ground;
    let (params, f) = match reference {
        Some(p) => {
            let target = fock::sdsc_state(p, cp.n_max).map_err(|e| e.to_string())?;
            (*p, phasespace::fidelity(&target, phi))
        }
        None => phasespace::fit_sdsc(phi, None),
    };
    let land = phasespace::classify_landscape(&sol.hoppings, lp, cp, cfg.landscape_conjugate, cfg.x_window);
    let mut row = vec![num(f)];
    row.extend(sdsc_cells(&params));
    row.extend([num(phi.mean_photon_number()), bool_cell(land.kind == Landscape::DoubleWell)]);
    Ok(PointOutput::from_solution(&sol, row))
}

fn spectrum_point(cfg: &ExperimentConfig, lp: &LatticeParams, cp: &CavityParams) -> Result<PointOutput, String> {
    let (spec, sol) = if cp.g_coupling == 0.0 {
        (lattice::obc_spectrum(lp, &DressedHoppings::bare(lp)).map_err(|e| e.to_string())?, None)
    } else {
        let sol = solve(lp, cp, cfg)?;
        (sol.electron_spectrum.clone(), Some(sol))
    };
    let (xi_b, xi_w) = sol.as_ref().map_or((C64::new(1.0, 0.0), C64::new(1.0, 0.0)), |s| (s.xi_intra, s.xi_inter));
    let summary = vec![num(spec.max_imag()), num(lattice::zero_mode_gap(&spec)), num(xi_b.re), num(xi_w.re)];
    let mut out = match &sol {
        Some(s) => PointOutput::from_solution(s, summary),
        None => PointOutput {
            status: Status::Converged,
            iterations: 0,
            residual: 0.0,
            message: None,
            summary,
            long_rows: Vec::new(),
            files: Vec::new(),
        },
    };
    out.long_rows = spec
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, e)| vec![i.to_string(), num(e.re), num(e.im), num(e.norm())])
        .collect();
    Ok(out)
}

fn wigner_point(cfg: &ExperimentConfig, index: usize, lp: &LatticeParams, cp: &CavityParams) -> Result<PointOutput, String> {
    let sol = solve(lp, cp, cfg)?;
    let q = phasespace::linspace(cfg.wigner_q.min, cfg.wigner_q.max, cfg.wigner_q.count);
    let p = phasespace::linspace(cfg.wigner_p.min, cfg.wigner_p.max, cfg.wigner_p.count);
    let grid = phasespace::wigner(&sol.photon_ground, &q, &p);
    let (fit, f) = phasespace::fit_sdsc(&sol.photon_ground, None);
    let mut row = vec![num(grid.min()), num(grid.max()), num(grid.normalization()), num(f)];
    row.extend(sdsc_cells(&fit));
    let mut out = PointOutput::from_solution(&sol, row);
    out.files.push((format!("wigner_{index:04}.txt"), output::render_wigner(&grid)));
    let amps = Table {
        columns: vec![Column::new("n", "1"), Column::new("re_c", "1"), Column::new("im_c", "1"), Column::new("population", "1")],
        rows: sol
            .photon_ground
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(n, c)| vec![n.to_string(), num(c.re), num(c.im), num(c.norm_sqr())])
            .collect(),
    };
    out.files.push((format!("photon_state_{index:04}.csv"), amps.render()));
    Ok(out)
}

fn landscape_point(cfg: &ExperimentConfig, index: usize, lp: &LatticeParams, cp: &CavityParams) -> Result<PointOutput, String> {
    let sol = solve(lp, cp, cfg)?;
    let rep = phasespace::classify_landscape(&sol.hoppings, lp, cp, cfg.landscape_conjugate, cfg.x_window);
    let (x_star, depth) = rep.minima.first().map_or((f64::NAN, f64::NAN), |m| (m.x.abs(), m.energy));
    let row = vec![
        bool_cell(rep.kind == Landscape::DoubleWell),
        rep.minima.len().to_string(),
        num(x_star),
        num(depth),
        num(rep.max_imag),
    ];
    let mut out = PointOutput::from_solution(&sol, row);
    let xs = phasespace::linspace(-cfg.x_window, cfg.x_window, 601);
    let curve = Table {
        columns: vec![Column::new("x", "1"), Column::new("re_h", "energy"), Column::new("im_h", "energy")],
        rows: xs
            .iter()
            .map(|&x| {
                let h = phasespace::semiclassical_energy(x, 0.0, &sol.hoppings, lp, cp, cfg.landscape_conjugate);
                vec![num(x), num(h.re), num(h.im)]
            })
            .collect(),
    };
    out.files.push((format!("landscape_{index:04}.csv"), curve.render()));
    Ok(out)
}

fn metrology_point(cfg: &ExperimentConfig, lp: &LatticeParams, cp: &CavityParams) -> Result<PointOutput, String> {
    let sol = solve(lp, cp, cfg)?;
    let m = MetrologyReport::new(&sol.photon_ground);
    let row = vec![
        num(m.qfi),
        num(m.nonclassicality),
        num(m.nonclassicality_corrected),
        num(m.mean_n),
        num(m.var_n),
        num(sol.photon_ground.top_occupation()),
    ];
    Ok(PointOutput::from_solution(&sol, row))
}

fn nonbloch_point(cfg: &ExperimentConfig, index: usize, lp: &LatticeParams, cp: &CavityParams) -> Result<PointOutput, String> {
    let sol = solve(lp, cp, cfg)?;
    let d = sol.dressed;
    let (rp, rm) = lattice::r_pm_trajectory(&d, cfg.k_samples).map_err(|e| e.to_string())?;
    let wind = |c: &[C64]| lattice::winding_number(c).map_or("nan".to_string(), |w| w.to_string());
    let gap = 2.0 * lattice::bulk_dispersion(&d, 0.0).0.norm();
    let row = vec![num(gap), wind(&rp), wind(&rm), num(sol.xi_intra.re), num(sol.xi_inter.re)];
    let mut out = PointOutput::from_solution(&sol, row);
    let ks: Vec<f64> = (0..cfg.k_samples).map(|i| 2.0 * std::f64::consts::PI * i as f64 / cfg.k_samples as f64).collect();
    let table = Table {
        columns: vec![
            Column::new("k", "1/length"),
            Column::new("re_eps", "energy"),
            Column::new("im_eps", "energy"),
            Column::new("re_r_plus", "energy"),
            Column::new("im_r_plus", "energy"),
            Column::new("re_r_minus", "energy"),
            Column::new("im_r_minus", "energy"),
        ],
        rows: ks
            .iter()
            .zip(rp.iter().zip(&rm))
            .map(|(&k, (p, m))| {
                let e = lattice::bulk_dispersion(&d, k).0;
                vec![num(k), num(e.re), num(e.im), num(p.re), num(p.im), num(m.re), num(m.im)]
            })
            .collect(),
    };
    out.files.push((format!("nonbloch_{index:04}.csv"), table.render()));
    Ok(out)
}

fn spectral_point(cfg: &ExperimentConfig, index: usize, lp: &LatticeParams, cp: &CavityParams) -> Result<PointOutput, String> {
    let sol = solve(lp, cp, cfg)?;
    let d = sol.dressed;
    let rcfg = ResponseConfig {
        eta: cfg.eta.unwrap_or(0.02 * cp.omega_c),
        diamagnetic: cfg.diamagnetic,
        k_points: cfg.k_points,
    };
    let axis: Vec<f64> = match cfg.omega_max {
        Some(top) => phasespace::linspace(0.0, top, cfg.omega_count),
        None => {
            let top = 2.0 * cp.omega_c + 4.0 * response::band_top(&d);
            phasespace::linspace(0.0, top, cfg.omega_count)
        }
    };
    let curve = response::photon_spectral(lp, cp, &d, &axis, &rcfg).map_err(|e| e.to_string())?;
    let nk = rcfg.k_points.unwrap_or(lp.l);
    let edge = (0..nk)
        .map(|i| 2.0 * lattice::bulk_dispersion(&d, 2.0 * std::f64::consts::PI * i as f64 / nk as f64).0.norm())
        .fold(f64::INFINITY, f64::min);
    let peaks = curve.peaks(SPECTRAL_PEAK_REL);
    let below = peaks.iter().filter(|&&w| w < edge).count();
    let row = vec![
        peaks.len().to_string(),
        below.to_string(),
        num(peaks.first().copied().unwrap_or(f64::NAN)),
        num(edge),
        num(curve.total_weight()),
    ];
    let mut out = PointOutput::from_solution(&sol, row);
    out.files.push((
        format!("spectral_{index:04}.txt"),
        output::render_two_column("omega", "energy", "A", "1/energy", &curve.omega_axis, &curve.values),
    ));
    Ok(out)
}

/// Peaks lower than this fraction of the maximum are not counted as branches.
pub const SPECTRAL_PEAK_REL: f64 = 0.01;

fn dsv_point(cfg: &ExperimentConfig, lp: &LatticeParams, cp: &CavityParams) -> Result<PointOutput, String> {
    let sol = solve(lp, cp, cfg)?;
    let mut out = PointOutput::from_solution(&sol, Vec::new());
    match phasespace::dsv_ground_state(&sol.hoppings, lp, cp, cfg.solver.conjugate) {
        Ok((state, m)) => {
            out.summary = vec![
                num(phasespace::fidelity(&state, &sol.photon_ground)),
                num(m.w_eff.re),
                num(m.squeeze.re),
                num(m.displacement.re),
                num(m.displacement.im),
                num(sol.photon_ground.mean_photon_number()),
                num(state.mean_photon_number()),
            ];
        }
        Err(e) => {
            out.summary = vec!["nan".into(); 7];
            out.message = Some(e.to_string());
        }
    }
    Ok(out)
}

impl<'a> Pipeline<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        let (summary_name, summary_cols, long) = match cfg.experiment {
            Experiment::SpectrumObc => (
                "spectrum_summary.csv",
                vec![
                    Column::new("max_abs_im_e", "energy"),
                    Column::new("zero_mode_gap", "energy"),
                    Column::new("xi_intra", "1"),
                    Column::new("xi_inter", "1"),
                ],
                Some((
                    "spectrum.csv",
                    vec![
                        Column::new("index", "1"),
                        Column::new("re_e", "energy"),
                        Column::new("im_e", "energy"),
                        Column::new("abs_e", "energy"),
                    ],
                )),
            ),
            Experiment::FidelityScan | Experiment::FidelityMap => {
                let mut cols = vec![Column::new("fidelity", "1")];
                cols.extend(sdsc_columns());
                cols.extend([Column::new("mean_n", "1"), Column::new("double_well", "0|1")]);
                let name = if cfg.experiment == Experiment::FidelityScan { "fidelity.csv" } else { "fidelity_map.csv" };
                (name, cols, None)
            }
            Experiment::Wigner => {
                let mut cols = vec![
                    Column::new("w_min", "1"),
                    Column::new("w_max", "1"),
                    Column::new("normalization", "1"),
                    Column::new("fit_fidelity", "1"),
                ];
                cols.extend(sdsc_columns());
                ("wigner_summary.csv", cols, None)
            }
            Experiment::Landscape => (
                "landscape_summary.csv",
                vec![
                    Column::new("double_well", "0|1"),
                    Column::new("minima", "1"),
                    Column::new("x_star", "1"),
                    Column::new("re_h_min", "energy"),
                    Column::new("max_abs_im_h", "energy"),
                ],
                None,
            ),
            Experiment::MetrologyScan => (
                "metrology.csv",
                vec![
                    Column::new("qfi", "1"),
                    Column::new("nonclassicality", "1"),
                    Column::new("nonclassicality_corrected", "1"),
                    Column::new("mean_n", "1"),
                    Column::new("var_n", "1"),
                    Column::new("top_occupation", "1"),
                ],
                None,
            ),
            Experiment::NonBloch => (
                "nonbloch.csv",
                vec![
                    Column::new("gap_k0", "energy"),
                    Column::new("winding_r_plus", "1"),
                    Column::new("winding_r_minus", "1"),
                    Column::new("xi_intra", "1"),
                    Column::new("xi_inter", "1"),
                ],
                None,
            ),
            Experiment::PhotonSpectral => (
                "spectral.csv",
                vec![
                    Column::new("peaks", "1"),
                    Column::new("peaks_below_edge", "1"),
                    Column::new("lowest_peak", "energy"),
                    Column::new("continuum_edge", "energy"),
                    Column::new("total_weight", "1"),
                ],
                None,
            ),
            Experiment::DsvCompare => (
                "dsv.csv",
                vec![
                    Column::new("fidelity", "1"),
                    Column::new("w_eff", "energy"),
                    Column::new("squeeze", "1"),
                    Column::new("displacement_re", "1"),
                    Column::new("displacement_im", "1"),
                    Column::new("mean_n_numeric", "1"),
                    Column::new("mean_n_dsv", "1"),
                ],
                None,
            ),
        };
        Pipeline { cfg, summary_name, summary_cols, long }
    }

    fn point(&self, index: usize, values: &[(SweepParam, f64)], reference: Option<&SdscParams>) -> PointOutput {
        let (lp, cp) = self.cfg.point(values);
        if let Err(e) = lp.validate().and_then(|_| cp.validate()) {
            return PointOutput::failed(e.to_string(), self.summary_cols.len());
        }
        let cfg = self.cfg;
        let result = match cfg.experiment {
            Experiment::SpectrumObc => spectrum_point(cfg, &lp, &cp),
            Experiment::FidelityScan | Experiment::FidelityMap => fidelity_point(cfg, &lp, &cp, reference),
            Experiment::Wigner => wigner_point(cfg, index, &lp, &cp),
            Experiment::Landscape => landscape_point(cfg, index, &lp, &cp),
            Experiment::MetrologyScan => metrology_point(cfg, &lp, &cp),
            Experiment::NonBloch => nonbloch_point(cfg, index, &lp, &cp),
            Experiment::PhotonSpectral => spectral_point(cfg, index, &lp, &cp),
            Experiment::DsvCompare => dsv_point(cfg, &lp, &cp),
        };
        result.unwrap_or_else(|m| PointOutput::failed(m, self.summary_cols.len()))
    }
}

/// Runs the configured experiment and writes all outputs under `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut notes = Vec::new();
    let reference = match cfg.experiment {
        Experiment::FidelityScan | Experiment::FidelityMap => resolve_reference(cfg, &mut notes)?,
        _ => None,
    };
    let pipeline = Pipeline::new(cfg);
    let points = cfg.points();
    let indexed: Vec<(usize, &Vec<(SweepParam, f64)>)> = points.iter().enumerate().collect();
    let outputs = par::map(&indexed, |&(i, values)| pipeline.point(i, values, reference.as_ref()));

    let param_cols: Vec<Column> = points
        .first()
        .map(|p| p.iter().map(|(k, _)| Column::new(k.key(), unit_of(*k))).collect())
        .unwrap_or_default();
    let mut lead = vec![Column::new("point", "1")];
    lead.extend(param_cols);
    let mut summary = Table::new([lead.clone(), pipeline.summary_cols.clone(), status_columns()].concat());
    let mut long = pipeline.long.as_ref().map(|(_, cols)| Table::new([lead.clone(), cols.clone()].concat()));
    let mut files = Vec::new();
    let mut records = Vec::new();
    for ((i, values), out) in indexed.iter().zip(outputs) {
        let mut lead_cells = vec![i.to_string()];
        lead_cells.extend(values.iter().map(|(_, v)| num(*v)));
        let mut row = lead_cells.clone();
        row.extend(out.summary);
        row.extend([out.status.as_str().to_string(), out.iterations.to_string()]);
        summary.rows.push(row);
        if let Some(t) = long.as_mut() {
            for r in out.long_rows {
                t.rows.push([lead_cells.clone(), r].concat());
            }
        }
        for (name, content) in out.files {
            output::write(out_dir, &name, &content)?;
            files.push(name);
        }
        records.push(PointRecord {
            index: *i,
            values: (*values).clone(),
            status: out.status,
            iterations: out.iterations,
            residual: out.residual,
            message: out.message,
        });
    }
    output::write(out_dir, pipeline.summary_name, &summary.render())?;
    files.insert(0, pipeline.summary_name.to_string());
    if let (Some(t), Some((name, _))) = (long, pipeline.long.as_ref()) {
        output::write(out_dir, name, &t.render())?;
        files.insert(1, name.to_string());
    }
    if let Some(p) = reference {
        notes.push(format!(
            "reference r={} lambda={}{:+}i alpha={}{:+}i",
            num(p.r.re),
            num(p.lambda.re),
            num(p.lambda.im),
            num(p.alpha.re),
            num(p.alpha.im)
        ));
    }
    Ok(RunManifest {
        experiment: cfg.experiment,
        points: records,
        files,
        notes,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
