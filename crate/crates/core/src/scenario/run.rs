use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{
    classify_with_tol, relative_errors, spectra_report, write_errors_csv, write_spectra_csv,
    ClassifiedSpectrum, ErrorReport, ErrorSummary, ModeClass, SpectraReport,
};
use crate::assembly::{assemble_system, CoupledSecondOrderModel, MaterialProps};
use crate::error::{Error, Result};
use crate::io::{write_dense_matrix_market, write_matrix_market};
use crate::mesh::{build_dof_map, generate_plate_mesh, Direction, DofMap, Mesh};
use crate::reduction::{reduce, split_state, ReducedStateSpaceModel, ReductionMethod};
use crate::statespace::{full_eigensolution, pencil_eigenvalues, to_state_space, SymStateSpaceModel};
use crate::transient::{
    field_difference, integrate_full, integrate_reduced, uniform_samples, FieldDifference,
    IntegratorOptions, LoadPattern, Scheme, TransientResult,
};

use super::config::{ModeCounts, ScenarioConfig};

/// Mesh, DOF numbering and assembled model of a scenario.
pub struct Built {
    pub mesh: Mesh,
    pub dofs: DofMap,
    pub material: MaterialProps,
    pub ssm: SymStateSpaceModel,
}

impl Built {
    pub fn model(&self) -> &CoupledSecondOrderModel {
        self.ssm.model()
    }
}

/// Validates the config and assembles the coupled model.
pub fn build(cfg: &ScenarioConfig) -> Result<Built> {
    cfg.validate().into_result()?;
    let material = cfg.material.props()?;
    let mesh = generate_plate_mesh(&cfg.geometry, cfg.mesh.nx, cfg.mesh.ny)?;
    let dofs = build_dof_map(&mesh, &cfg.boundary)?;
    let mut model = assemble_system(&mesh, &material, cfg.geometry.thickness, &dofs)?;
    model.dofs = Some(dofs.clone());
    Ok(Built {
        mesh,
        dofs,
        material,
        ssm: to_state_space(&model),
    })
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output.dir`.
    pub out_dir: Option<PathBuf>,
    /// Overrides `reduction.methods`.
    pub methods: Option<Vec<ReductionMethod>>,
    /// Forces fixed-step RK4 with this step.
    pub fixed_step: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingEntry {
    pub method: ReductionMethod,
    pub n_structural: usize,
    pub n_thermal: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Warn,
    /// Not all three methods ran.
    Skipped,
}

/// The expected construction-cost order `uncoupled <= two-step <=
/// superposition`, reported but never enforced.
#[derive(Debug, Clone, Serialize)]
pub struct TimingCheck {
    pub n_structural: usize,
    pub n_thermal: usize,
    pub status: CheckStatus,
    pub superposition_slowest: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: ReductionMethod,
    pub counts: ModeCounts,
    pub label: String,
    pub construction_seconds: f64,
    pub spectrum: ClassifiedSpectrum,
    pub errors: ErrorReport,
    pub model: ReducedStateSpaceModel,
}

impl MethodRun {
    pub fn summary(&self, class: ModeClass) -> ErrorSummary {
        self.errors.summary(class)
    }
}

#[derive(Debug, Clone)]
pub struct TransientRun {
    pub label: String,
    pub method: Option<ReductionMethod>,
    pub result: TransientResult,
    pub difference: Option<FieldDifference>,
    pub model: Option<ReducedStateSpaceModel>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub n_structural: usize,
    pub n_thermal: usize,
    pub full_spectrum: ClassifiedSpectrum,
    pub full_eig_seconds: f64,
    pub methods: Vec<MethodRun>,
    pub spectra: SpectraReport,
    pub timings: Vec<TimingEntry>,
    pub timing_checks: Vec<TimingCheck>,
    pub transient: Vec<TransientRun>,
}

impl RunSummary {
    pub fn find(&self, method: ReductionMethod, counts: ModeCounts) -> Option<&MethodRun> {
        self.methods
            .iter()
            .find(|m| m.method == method && m.counts == counts)
    }
}

pub fn label(method: ReductionMethod, c: ModeCounts) -> String {
    format!("{}/{}x{}", method.as_str(), c.structural, c.thermal)
}

fn file_stem(label: &str) -> String {
    label.replace('/', "_")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs the whole scenario and writes every report under the output
/// directory. `config_text` is hashed into the manifest.
pub fn run(cfg: &ScenarioConfig, config_text: &str, opts: &RunOptions) -> Result<RunSummary> {
    let methods = match &opts.methods {
        Some(m) => m.clone(),
        None => cfg.methods()?,
    };
    if methods.is_empty() {
        return Err(Error::config("reduction.methods", "at least one method is required"));
    }
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let built = build(cfg)?;
    let ssm = &built.ssm;
    let (ns, nt) = (ssm.n_structural(), ssm.n_thermal());
    fs::create_dir_all(&out_dir)?;

    let t = Instant::now();
    let full_eig = full_eigensolution(ssm, false)?;
    let full_eig_seconds = t.elapsed().as_secs_f64();
    let full_spectrum = classify_with_tol(&full_eig.values, nt, cfg.analysis.real_tol)?;

    // Constructions run one after another so their timings are comparable.
    let mut runs = Vec::new();
    for &counts in &cfg.reduction.modes {
        for &method in &methods {
            let t = Instant::now();
            let r = reduce(method, ssm, counts.structural, counts.thermal)?;
            let construction_seconds = t.elapsed().as_secs_f64();
            let values = pencil_eigenvalues(&r.a, &r.b)?;
            let spectrum = classify_with_tol(&values, counts.thermal, cfg.analysis.real_tol)?;
            let errors = relative_errors(&full_spectrum, &spectrum);
            runs.push(MethodRun {
                method,
                counts,
                label: label(method, counts),
                construction_seconds,
                spectrum,
                errors,
                model: r,
            });
        }
    }

    let mut models: Vec<(&str, &ClassifiedSpectrum)> = vec![("full", &full_spectrum)];
    models.extend(runs.iter().map(|r| (r.label.as_str(), &r.spectrum)));
    let spectra = spectra_report(&models);

    let mut timings: Vec<TimingEntry> = runs
        .iter()
        .map(|r| TimingEntry {
            method: r.method,
            n_structural: r.counts.structural,
            n_thermal: r.counts.thermal,
            seconds: r.construction_seconds,
        })
        .collect();
    timings.sort_by(|a, b| a.seconds.total_cmp(&b.seconds));
    let timing_checks = cfg
        .reduction
        .modes
        .iter()
        .map(|&c| timing_check(&runs, c))
        .collect();

    let transient = if cfg.transient.enabled {
        run_transient(cfg, &built, &runs, &methods, opts)?
    } else {
        Vec::new()
    };

    let summary = RunSummary {
        out_dir: out_dir.clone(),
        n_structural: ns,
        n_thermal: nt,
        full_spectrum,
        full_eig_seconds,
        methods: runs,
        spectra,
        timings,
        timing_checks,
        transient,
    };
    write_reports(cfg, config_text, &built, &summary, opts)?;
    Ok(summary)
}

fn timing_check(runs: &[MethodRun], c: ModeCounts) -> TimingCheck {
    let secs = |m| {
        runs.iter()
            .find(|r| r.method == m && r.counts == c)
            .map(|r| r.construction_seconds)
    };
    let (u, p, s) = (
        secs(ReductionMethod::Uncoupled),
        secs(ReductionMethod::TwoStep),
        secs(ReductionMethod::Superposition),
    );
    let superposition_slowest = s.map(|s| {
        runs.iter()
            .filter(|r| r.counts == c && r.method != ReductionMethod::Superposition)
            .all(|r| r.construction_seconds <= s)
    });
    let status = match (u, p, s) {
        (Some(u), Some(p), Some(s)) if u <= p && p <= s => CheckStatus::Pass,
        (Some(_), Some(_), Some(_)) => CheckStatus::Warn,
        _ => CheckStatus::Skipped,
    };
    TimingCheck {
        n_structural: c.structural,
        n_thermal: c.thermal,
        status,
        superposition_slowest,
    }
}

fn run_transient(
    cfg: &ScenarioConfig,
    built: &Built,
    runs: &[MethodRun],
    methods: &[ReductionMethod],
    opts: &RunOptions,
) -> Result<Vec<TransientRun>> {
    let ssm = &built.ssm;
    let tc = &cfg.transient;
    let mut integ = tc.integrator();
    if let Some(step) = opts.fixed_step {
        integ.scheme = Scheme::Rk4 { step };
    }
    let counts = cfg
        .transient_modes()
        .ok_or_else(|| Error::config("transient.modes", "no mode counts to integrate"))?;
    let load = LoadPattern::new(
        &cfg.excitation,
        &built.mesh,
        &built.dofs,
        built.material.reference_temperature,
    )?;
    let samples = uniform_samples(tc.t_end, tc.samples);

    // Reduced models at the transient counts, building any not in the sweep.
    let mut reduced: Vec<(ReductionMethod, ReducedStateSpaceModel)> = Vec::new();
    for &m in methods {
        let r = match runs.iter().find(|r| r.method == m && r.counts == counts) {
            Some(run) => run.model.clone(),
            None => reduce(m, ssm, counts.structural, counts.thermal)?,
        };
        reduced.push((m, r));
    }

    let integrate_one = |r: Option<&ReducedStateSpaceModel>,
                         integ: &IntegratorOptions|
     -> Result<(TransientResult, f64)> {
        let t = Instant::now();
        let res = match r {
            None => integrate_full(ssm, &load, &vec![0.0; ssm.dim()], &samples, integ)?,
            Some(r) => integrate_reduced(
                r,
                &load,
                &vec![0.0; r.dim()],
                &samples,
                integ,
                Some(&built.dofs),
            )?,
        };
        Ok((res, t.elapsed().as_secs_f64()))
    };

    // Independent integrations run concurrently; each is sequential inside.
    let results: Vec<Result<(TransientResult, f64)>> = std::thread::scope(|s| {
        let full = s.spawn(|| integrate_one(None, &integ));
        let handles: Vec<_> = reduced
            .iter()
            .map(|(_, r)| s.spawn(|| integrate_one(Some(r), &integ)))
            .collect();
        let mut out = vec![full.join().expect("integration thread panicked")];
        out.extend(
            handles
                .into_iter()
                .map(|h| h.join().expect("integration thread panicked")),
        );
        out
    });
    let mut results = results.into_iter();
    let (full, full_secs) = results.next().expect("full run")?;

    let mut out = Vec::new();
    for ((m, r), res) in reduced.into_iter().zip(results) {
        let (res, secs) = res?;
        let diff = field_difference(&full, &res, &r, Some(&built.dofs))?;
        out.push(TransientRun {
            label: label(m, counts),
            method: Some(m),
            result: res,
            difference: Some(diff),
            model: Some(r),
            seconds: secs,
        });
    }
    out.insert(
        0,
        TransientRun {
            label: "full".into(),
            method: None,
            result: full,
            difference: None,
            model: None,
            seconds: full_secs,
        },
    );
    Ok(out)
}

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'a str,
    config_sha256: String,
    tmor_version: &'static str,
    faer_version: &'static str,
    n_structural: usize,
    n_thermal: usize,
    state_dim: usize,
    methods: Vec<&'static str>,
    modes: &'a [ModeCounts],
    classification_tol: f64,
    full_eigensolve_seconds: f64,
    overlap: Option<[f64; 2]>,
    transient: Option<TransientManifest>,
    files: Vec<String>,
}

#[derive(Serialize)]
struct TransientManifest {
    t_end: f64,
    samples: usize,
    scheme: String,
    rtol: f64,
    atol: f64,
    modes: Option<ModeCounts>,
    wall_seconds: Vec<(String, f64)>,
    steps: Vec<(String, usize, usize)>,
}

#[derive(Serialize)]
struct Timings<'a> {
    /// Sorted by construction time, fastest first.
    constructions: &'a [TimingEntry],
    full_eigensolve_seconds: f64,
    ordering: &'a [TimingCheck],
}

fn write_reports(
    cfg: &ScenarioConfig,
    config_text: &str,
    built: &Built,
    s: &RunSummary,
    opts: &RunOptions,
) -> Result<()> {
    let dir = &s.out_dir;
    let mut files = Vec::new();

    let reports: Vec<(&str, &ErrorReport)> =
        s.methods.iter().map(|m| (m.label.as_str(), &m.errors)).collect();
    let mut w = create(&dir.join("eigen_errors.csv"))?;
    write_errors_csv(&mut w, &reports)?;
    w.flush()?;
    files.push("eigen_errors.csv".to_string());

    let mut w = create(&dir.join("spectra.csv"))?;
    write_spectra_csv(&mut w, &s.spectra)?;
    w.flush()?;
    files.push("spectra.csv".to_string());

    let timings = Timings {
        constructions: &s.timings,
        full_eigensolve_seconds: s.full_eig_seconds,
        ordering: &s.timing_checks,
    };
    fs::write(dir.join("timings.json"), serde_json::to_string_pretty(&timings).expect("json"))?;
    files.push("timings.json".to_string());

    if !s.transient.is_empty() {
        let mut w = create(&dir.join("transient_max.csv"))?;
        writeln!(w, "model,time,max_theta,max_u,max_dtheta,max_du")?;
        for tr in &s.transient {
            for k in 0..tr.result.times.len() {
                let (dt, du) = match &tr.difference {
                    Some(d) => (d.max_theta[k], d.max_u[k]),
                    None => (0.0, 0.0),
                };
                writeln!(
                    w,
                    "{},{:e},{:e},{:e},{:e},{:e}",
                    tr.label, tr.result.times[k], tr.result.max_theta[k], tr.result.max_u[k], dt, du
                )?;
            }
        }
        w.flush()?;
        files.push("transient_max.csv".to_string());
        files.extend(write_snapshots(cfg, built, s)?);
    }

    if cfg.output.export_reduced {
        let rdir = dir.join("reduced");
        fs::create_dir_all(&rdir)?;
        for m in &s.methods {
            let stem = file_stem(&m.label);
            for (name, mat) in [("A", &m.model.a), ("B", &m.model.b), ("T", &m.model.t)] {
                let f = format!("{stem}_{name}.mtx");
                let mut w = create(&rdir.join(&f))?;
                write_dense_matrix_market(&mut w, mat)?;
                w.flush()?;
                files.push(format!("reduced/{f}"));
            }
        }
    }

    let full_overlap = s.spectra.overlaps.first().and_then(|o| o.overlap);
    let transient = (!s.transient.is_empty()).then(|| {
        let integ = cfg.transient.integrator();
        let scheme = match opts.fixed_step.map(|step| Scheme::Rk4 { step }).unwrap_or(integ.scheme) {
            Scheme::DormandPrince => "dormand-prince".to_string(),
            Scheme::Rk4 { step } => format!("rk4(h={step:e})"),
        };
        TransientManifest {
            t_end: cfg.transient.t_end,
            samples: cfg.transient.samples,
            scheme,
            rtol: integ.rtol,
            atol: integ.atol,
            modes: cfg.transient_modes(),
            wall_seconds: s.transient.iter().map(|t| (t.label.clone(), t.seconds)).collect(),
            steps: s
                .transient
                .iter()
                .map(|t| (t.label.clone(), t.result.stats.steps, t.result.stats.rejects))
                .collect(),
        }
    });
    files.push("manifest.json".to_string());
    let manifest = Manifest {
        name: &cfg.name,
        config_sha256: hex(&Sha256::digest(config_text.as_bytes())),
        tmor_version: env!("CARGO_PKG_VERSION"),
        faer_version: FAER_VERSION,
        n_structural: s.n_structural,
        n_thermal: s.n_thermal,
        state_dim: built.ssm.dim(),
        methods: {
            let mut m: Vec<_> = s.methods.iter().map(|m| m.method.as_str()).collect();
            m.dedup();
            m
        },
        modes: &cfg.reduction.modes,
        classification_tol: s.full_spectrum.tol,
        full_eigensolve_seconds: s.full_eig_seconds,
        overlap: full_overlap,
        transient,
        files,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).expect("json"))?;
    Ok(())
}

/// Linear-algebra backend release the crate is built against.
pub const FAER_VERSION: &str = "0.24";

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-node fields at the sample nearest each configured snapshot time.
fn write_snapshots(cfg: &ScenarioConfig, built: &Built, s: &RunSummary) -> Result<Vec<String>> {
    let mut files = Vec::new();
    if cfg.transient.snapshots.is_empty() {
        return Ok(files);
    }
    let fdir = s.out_dir.join("fields");
    fs::create_dir_all(&fdir)?;
    let full = &s.transient[0];
    let times = &full.result.times;
    let ns = built.ssm.n_structural();
    let dofs = &built.dofs;
    for &ts in &cfg.transient.snapshots {
        let k = (0..times.len())
            .min_by(|&a, &b| (times[a] - ts).abs().total_cmp(&(times[b] - ts).abs()))
            .expect("samples exist");
        for tr in &s.transient {
            let state = match &tr.model {
                None => tr.result.states[k].clone(),
                Some(r) => r.reconstruct(&tr.result.states[k])?,
            };
            let (u, _, theta) = split_state(&state, ns);
            let f = format!("{}_t{k:04}.csv", file_stem(&tr.label));
            let mut w = create(&fdir.join(&f))?;
            let has_diff = tr.difference.is_some();
            if has_diff {
                writeln!(w, "node,x,y,theta,ux,uy,dtheta,dux,duy")?;
            } else {
                writeln!(w, "node,x,y,theta,ux,uy")?;
            }
            for (node, xy) in built.mesh.nodes.iter().enumerate() {
                let th = dofs.thermal_dof(node).map_or(0.0, |d| theta[d]);
                let ux = dofs.structural_dof(node, Direction::X).map_or(0.0, |d| u[d]);
                let uy = dofs.structural_dof(node, Direction::Y).map_or(0.0, |d| u[d]);
                write!(w, "{node},{:e},{:e},{th:e},{ux:e},{uy:e}", xy[0], xy[1])?;
                if let Some(d) = &tr.difference {
                    let dth = dofs.thermal_dof(node).map_or(0.0, |i| d.theta[k][i]);
                    let dux = dofs.structural_dof(node, Direction::X).map_or(0.0, |i| d.u[k][i]);
                    let duy = dofs.structural_dof(node, Direction::Y).map_or(0.0, |i| d.u[k][i]);
                    write!(w, ",{dth:e},{dux:e},{duy:e}")?;
                }
                writeln!(w)?;
            }
            w.flush()?;
            files.push(format!("fields/{f}"));
        }
    }
    Ok(files)
}

/// Writes the assembled blocks and the state-space pencil as Matrix Market
/// files; returns the file names.
pub fn export_matrices(built: &Built, dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let m = built.model();
    let a = built.ssm.a_sparse();
    let b = built.ssm.b_sparse();
    let blocks = [
        ("M_ss.mtx", &m.mass),
        ("K_ss.mtx", &m.stiffness),
        ("D_TT.mtx", &m.capacity),
        ("K_TT.mtx", &m.conductivity),
        ("K_sT.mtx", &m.coupling),
        ("A.mtx", &a),
        ("B.mtx", &b),
    ];
    let mut files = Vec::new();
    for (name, mat) in blocks {
        let mut w = create(&dir.join(name))?;
        write_matrix_market(&mut w, mat)?;
        w.flush()?;
        files.push(name.to_string());
    }
    Ok(files)
}
