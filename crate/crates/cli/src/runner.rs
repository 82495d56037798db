//! One scenario run: simulate, evaluate the requested checks and write the
//! output files.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use hullswarm::analysis::{
    check_contraction, check_dini_bound, check_g2_sandwich, check_hull_drift, detect_set_tracking,
    verify_jlc_recursion, verify_siiss_ujlc, verify_siss, VerdictEntry, VerdictReport, ENVELOPE_TOL,
};
use hullswarm::certificates::{
    siiss_envelope_ujlc, siiss_recursion_jlc, siss_envelope, CertificateBundle, CertificateReport, JlcRecursion,
};
use hullswarm::scenarios::{Run, Scenario};
use hullswarm::topology::ConnectivityReport;
use hullswarm::Error;
use serde::{Deserialize, Serialize};

use crate::config::Check;
use crate::plot;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CERTIFICATES_FILE: &str = "certificates.toml";
pub const VERDICTS_FILE: &str = "verdicts.toml";
pub const PLOT_FILE: &str = "plot.svg";

/// Certificate constants of a scenario, as written to `certificates.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificatesDoc {
    pub scenario: String,
    pub connectivity: ConnectivityReport,
    /// Constants for the uniform window, when the schedule has one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub uniform: Option<CertificateReport>,
    /// Recursion constants at the marks, when the schedule is jointly
    /// connected with bidirectional pieces or an acyclic union.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub joint: Option<JointDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDoc {
    pub delta_hat: f64,
    pub delta_hat_log_gap: f64,
    pub marks: Vec<Vec<f64>>,
}

impl CertificatesDoc {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("certificates serialize")
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

#[derive(Debug)]
pub enum RunError {
    /// Bad configuration or input; exit code 1.
    Config(anyhow::Error),
    /// The state blew up at this time; exit code 3.
    Divergence(f64),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e:#}"),
            RunError::Divergence(t) => write!(f, "simulation diverged at t = {t}"),
        }
    }
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::Config(e)
    }
}

fn lib_err(e: Error, what: &str) -> RunError {
    match e {
        Error::Divergence { t } => RunError::Divergence(t),
        other => RunError::Config(anyhow::Error::new(other).context(what.to_string())),
    }
}

/// Settings shared by every scenario of an invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub dt: Option<f64>,
    pub t_end: f64,
    pub checks: Vec<Check>,
    pub eps: f64,
    pub plot: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: String,
    pub dir: PathBuf,
    pub report: VerdictReport,
}

/// Uniform window: the scenario's own when it is valid, else the smallest
/// witness up to half the horizon.
fn uniform_window(sc: &Scenario) -> Option<f64> {
    let s = &sc.schedule;
    sc.window
        .filter(|&w| s.classify_ujlc(w).unwrap_or(false))
        .or_else(|| s.ujlc_witness(s.horizon() / 2.0))
}

fn failed(check: &str, note: &str) -> VerdictEntry {
    VerdictEntry {
        check_name: check.to_string(),
        holds: false,
        max_violation: f64::INFINITY,
        first_violation_time: None,
        tolerance: ENVELOPE_TOL,
        samples: 0,
        note: Some(note.to_string()),
    }
}

const NO_WINDOW: &str = "schedule has no uniform connectivity window, so no certificate exists";
const NO_JOINT: &str =
    "schedule is neither uniformly connected nor jointly connected with bidirectional pieces or an acyclic union";

fn write_with<F>(path: &Path, f: F) -> Result<(), RunError>
where
    F: FnOnce(BufWriter<File>) -> hullswarm::Result<()>,
{
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f(BufWriter::new(file)).map_err(|e| lib_err(e, &format!("writing {}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Runs one scenario into `dir`.
pub fn execute(sc: &Scenario, settings: &RunSettings, dir: &Path) -> Result<Outcome, RunError> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let Run { spec, traj, metrics } =
        sc.simulate(settings.dt, Some(settings.t_end)).map_err(|e| lib_err(e, "simulating"))?;

    let schedule = &sc.schedule;
    let window = uniform_window(sc);
    let bundle = window
        .map(|w| CertificateBundle::new(sc.bounds, sc.n(), schedule.dwell(), w))
        .transpose()
        .map_err(|e| lib_err(e, "building certificates"))?;
    let joint_ok = schedule.classify_jlc() && (schedule.is_bidirectional() || schedule.union_is_acyclic());
    let recursion: Option<JlcRecursion> = if joint_ok && sc.n() >= 2 {
        let marks = schedule.jlc_marks(sc.n());
        if marks.is_empty() {
            None
        } else {
            Some(
                siiss_recursion_jlc(sc.bounds, sc.n(), schedule.dwell(), &marks)
                    .map_err(|e| lib_err(e, "building the recursion"))?,
            )
        }
    } else {
        None
    };

    let mut report = VerdictReport::default();
    let mut envelope_curve: Option<Vec<f64>> = None;
    let breaks: Vec<f64> = schedule.boundaries().collect();
    for &check in &settings.checks {
        match check {
            Check::Dini => report.verdicts.push(check_dini_bound(&metrics, &breaks).entry()),
            Check::G2 => report.verdicts.push(check_g2_sandwich(&metrics, sc.n(), sc.k()).entry()),
            Check::Lemma7 => report.verdicts.push(
                check_hull_drift(&traj, &metrics, 0.0)
                    .map_err(|e| lib_err(e, "hull drift check"))?
                    .entry(),
            ),
            Check::Siss => match &bundle {
                Some(b) => {
                    let env = siss_envelope(b).map_err(|e| lib_err(e, "SISS envelope"))?;
                    let z_sup = metrics.z_sup();
                    let v = verify_siss(&metrics, &spec, b, &env, z_sup).map_err(|e| lib_err(e, "SISS check"))?;
                    let d0 = metrics.dist[0];
                    envelope_curve = Some(metrics.times.iter().map(|&t| env.bound(d0, t, z_sup)).collect());
                    report.verdicts.push(v.entry());
                    if z_sup == 0.0 {
                        let (c, ratio) =
                            check_contraction(&metrics, &spec, b).map_err(|e| lib_err(e, "contraction check"))?;
                        report.verdicts.push(c.entry());
                        report.contraction_ratio = Some(ratio);
                    }
                }
                None => report.verdicts.push(failed("siss", NO_WINDOW)),
            },
            Check::Siiss => match (&bundle, &recursion) {
                (Some(b), _) => {
                    let env = siiss_envelope_ujlc(b).map_err(|e| lib_err(e, "integral envelope"))?;
                    let (cont, disc) =
                        verify_siiss_ujlc(&metrics, &spec, b, &env).map_err(|e| lib_err(e, "integral check"))?;
                    report.verdicts.push(cont.entry());
                    report.verdicts.push(disc.entry());
                }
                (None, Some(rec)) => report.verdicts.push(
                    verify_jlc_recursion(&metrics, &spec, rec)
                        .map_err(|e| lib_err(e, "recursion check"))?
                        .entry(),
                ),
                (None, None) => report.verdicts.push(failed("siiss", NO_JOINT)),
            },
            Check::Tracking => {
                let (tracked, entry) = detect_set_tracking(&metrics, settings.eps);
                report.tracking_entry_time = entry;
                report.verdicts.push(VerdictEntry {
                    check_name: "tracking".into(),
                    holds: tracked,
                    max_violation: metrics.dist.last().copied().unwrap_or(0.0) - settings.eps,
                    first_violation_time: None,
                    tolerance: settings.eps,
                    samples: metrics.len(),
                    note: None,
                });
            }
        }
    }

    let certificates = CertificatesDoc {
        scenario: sc.name.clone(),
        connectivity: schedule.report(schedule.horizon() / 2.0),
        uniform: bundle.as_ref().map(CertificateBundle::report),
        joint: recursion.as_ref().map(|r| JointDoc {
            delta_hat: r.delta_hat.value(),
            delta_hat_log_gap: r.delta_hat.log_gap(),
            marks: schedule.jlc_marks(sc.n()),
        }),
    };
    write_with(&dir.join(TRAJECTORY_FILE), |w| traj.write_csv(w))?;
    write_with(&dir.join(METRICS_FILE), |w| metrics.write_csv(w))?;
    write_text(&dir.join(CERTIFICATES_FILE), &certificates.to_toml())?;
    write_text(&dir.join(VERDICTS_FILE), &report.to_toml())?;
    if settings.plot {
        let svg = plot::render(&metrics, envelope_curve.as_deref(), &sc.name);
        write_text(&dir.join(PLOT_FILE), &svg)?;
    }
    Ok(Outcome {
        name: sc.name.clone(),
        dir: dir.to_path_buf(),
        report,
    })
}

/// 3 if anything diverged, else 1 on configuration errors, else 2 if a
/// check failed, else 0.
pub fn exit_code(results: &[Result<Outcome, RunError>]) -> i32 {
    if results.iter().any(|r| matches!(r, Err(RunError::Divergence(_)))) {
        3
    } else if results.iter().any(|r| matches!(r, Err(RunError::Config(_)))) {
        1
    } else if results.iter().any(|r| matches!(r, Ok(o) if !o.report.all_hold())) {
        2
    } else {
        0
    }
}
