//! Library side of the `hullswarm` command: configuration merging, scenario
//! resolution, runs and output files.

pub mod config;
pub mod plot;
pub mod runner;

use std::path::PathBuf;

pub use config::{Check, ConfigFile, ParamsDoc, RunConfig};
pub use runner::{execute, exit_code, CertificatesDoc, Outcome, RunError, RunSettings};

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn print_outcome(r: &Result<Outcome, RunError>, label: &str) {
    match r {
        Ok(o) => {
            for v in &o.report.verdicts {
                println!(
                    "{label}{:<16} {} max_violation={:.3e}{}",
                    v.check_name,
                    if v.holds { "PASS" } else { "FAIL" },
                    v.max_violation,
                    v.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
                );
            }
            if let Some(t) = o.report.tracking_entry_time {
                println!("{label}tracking entered at t = {t}");
            }
            if let Some(r) = o.report.contraction_ratio {
                println!("{label}largest contraction ratio {r:.6}");
            }
            println!("{label}wrote {}", o.dir.display());
        }
        Err(e) => eprintln!("{label}error: {e}"),
    }
}

/// Runs a merged configuration and returns the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e:#}");
        return 1;
    }
    let sources: Vec<&String> = if cfg.batch.is_empty() {
        vec![&cfg.scenario]
    } else {
        cfg.batch.iter().collect()
    };
    let mut jobs = Vec::new();
    for src in sources {
        match config::resolve(src, &cfg.params, cfg.horizon) {
            Ok(list) => jobs.extend(list),
            Err(e) => {
                eprintln!("error: {e:#}");
                return 1;
            }
        }
    }
    let settings = |t_end| RunSettings {
        dt: cfg.dt,
        t_end,
        checks: cfg.checks.clone(),
        eps: cfg.eps,
        plot: cfg.plot,
    };
    if cfg.batch.is_empty() {
        let job = &jobs[0];
        let r = execute(&job.scenario, &settings(job.t_end), &cfg.out);
        print_outcome(&r, "");
        return exit_code(&[r]);
    }
    let dirs: Vec<PathBuf> = jobs
        .iter()
        .enumerate()
        .map(|(i, j)| cfg.out.join(format!("{i:02}-{}", sanitize(&j.scenario.name))))
        .collect();
    let results: Vec<Result<Outcome, RunError>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .zip(&dirs)
            .map(|(job, dir)| s.spawn(move || execute(&job.scenario, &settings(job.t_end), dir)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(RunError::Config(anyhow::anyhow!("worker panicked")))))
            .collect()
    });
    for (job, r) in jobs.iter().zip(&results) {
        print_outcome(r, &format!("[{}] ", job.scenario.name));
    }
    exit_code(&results)
}
