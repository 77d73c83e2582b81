//! Job trace ingestion, synthetic trace generation, and validation.
//!
//! Trace files are UTF-8 text. The first line is a header naming the
//! resource dimensions, `#dims:<name0>,<name1>,...`, with dimension 0
//! always the compute dimension. Every following non-comment line is one
//! job: `id,submit_time,requested_walltime,actual_runtime,demand0,demand1,...`
//! (integer or decimal fields). Lines starting with `#` are ignored.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A unit of work: when it arrives, how long it runs, and what it needs
/// from each resource dimension. `demand[0]` is compute nodes; further
/// dimensions (burst buffer GB by default) follow the system spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: u64,
    pub submit_time: f64,
    pub requested_walltime: f64,
    pub actual_runtime: f64,
    pub demand: Vec<f64>,
}

/// Total capacity per resource dimension. Index 0 is the compute dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub dimension_names: Vec<String>,
    pub capacity: Vec<f64>,
}

impl SystemSpec {
    pub fn new(dimension_names: Vec<String>, capacity: Vec<f64>) -> Result<Self, TraceError> {
        if dimension_names.is_empty() || dimension_names.len() != capacity.len() {
            return Err(TraceError::BadSpec(
                "dimension names and capacities must be non-empty and equal length".into(),
            ));
        }
        let mut seen = HashSet::new();
        for name in &dimension_names {
            if !seen.insert(name.as_str()) {
                return Err(TraceError::BadSpec(format!("duplicate dimension name `{name}`")));
            }
        }
        if capacity.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(TraceError::BadSpec("every capacity must be positive".into()));
        }
        Ok(Self { dimension_names, capacity })
    }

    pub fn dims(&self) -> usize {
        self.capacity.len()
    }
}

/// Per-dimension demand distribution for the synthetic generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemandGen {
    /// Probability that a job requests none of this dimension. Must be 0
    /// for the compute dimension (every job needs at least one node).
    pub zero_probability: f64,
    /// Upper bound on a single job's demand, as a fraction of capacity.
    pub max_fraction: f64,
}

/// Parameters of the seeded synthetic trace generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenConfig {
    pub job_count: usize,
    /// Mean of the exponential inter-arrival distribution, seconds.
    pub mean_interarrival: f64,
    /// Log-uniform runtime bounds, seconds.
    pub runtime_range: (f64, f64),
    /// One entry per dimension of the target system spec.
    pub demand: Vec<DemandGen>,
    pub seed: u64,
}

impl GenConfig {
    fn validate(&self, spec: &SystemSpec) -> Result<(), TraceError> {
        if self.mean_interarrival <= 0.0 {
            return Err(TraceError::BadGenConfig("mean interarrival must be positive".into()));
        }
        let (lo, hi) = self.runtime_range;
        if lo <= 0.0 || hi < lo {
            return Err(TraceError::BadGenConfig(
                "runtime range must satisfy 0 < lo <= hi".into(),
            ));
        }
        if self.demand.len() != spec.dims() {
            return Err(TraceError::BadGenConfig(format!(
                "demand distribution has {} entries, spec has {} dimensions",
                self.demand.len(),
                spec.dims()
            )));
        }
        for (d, gen) in self.demand.iter().enumerate() {
            if !(0.0..=1.0).contains(&gen.zero_probability) {
                return Err(TraceError::BadGenConfig(format!(
                    "zero probability out of [0,1] in dimension {d}"
                )));
            }
            if !(gen.max_fraction > 0.0 && gen.max_fraction <= 1.0) {
                return Err(TraceError::BadGenConfig(format!(
                    "max fraction out of (0,1] in dimension {d}"
                )));
            }
        }
        if self.demand[0].zero_probability != 0.0 {
            return Err(TraceError::BadGenConfig(
                "compute dimension cannot have zero-demand jobs".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("invalid system spec: {0}")]
    BadSpec(String),
    #[error("invalid generator config: {0}")]
    BadGenConfig(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("job {id}: {message}")]
    InvalidJob { id: u64, message: String },
}

/// One validation finding about a job.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum IssueKind {
    /// actual_runtime exceeded requested_walltime and was clamped down.
    RuntimeClamped,
    /// The job can never run on this system.
    Fatal,
}

#[derive(Debug, Clone, Serialize)]
pub struct JobIssue {
    pub job_id: u64,
    pub kind: IssueKind,
    pub message: String,
}

/// Outcome of validating a job list against a system spec. `jobs` carries
/// the sanitized list with clamps applied; `ok` is true iff nothing fatal
/// was found.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub jobs: Vec<Job>,
    pub issues: Vec<JobIssue>,
    pub ok: bool,
}

/// Validate jobs against a spec: clamp runtimes that exceed the requested
/// walltime (recorded as warnings) and flag jobs that can never run.
pub fn validate_jobs(jobs: Vec<Job>, spec: &SystemSpec) -> ValidationReport {
    let mut issues = Vec::new();
    let mut out = Vec::with_capacity(jobs.len());
    for mut job in jobs {
        let mut fatal = false;
        if job.demand.len() != spec.dims() {
            issues.push(JobIssue {
                job_id: job.id,
                kind: IssueKind::Fatal,
                message: format!(
                    "demand has {} dimensions, system has {}",
                    job.demand.len(),
                    spec.dims()
                ),
            });
            fatal = true;
        } else {
            if job.demand[0] < 1.0 {
                issues.push(JobIssue {
                    job_id: job.id,
                    kind: IssueKind::Fatal,
                    message: "job needs at least one node".into(),
                });
                fatal = true;
            }
            for (d, (&need, &cap)) in job.demand.iter().zip(&spec.capacity).enumerate() {
                if need < 0.0 || !need.is_finite() {
                    issues.push(JobIssue {
                        job_id: job.id,
                        kind: IssueKind::Fatal,
                        message: format!("negative or non-finite demand in dimension {d}"),
                    });
                    fatal = true;
                } else if need > cap {
                    issues.push(JobIssue {
                        job_id: job.id,
                        kind: IssueKind::Fatal,
                        message: format!(
                            "demand {} exceeds capacity {} in dimension `{}`; the job can never run",
                            need, cap, spec.dimension_names[d]
                        ),
                    });
                    fatal = true;
                }
            }
        }
        if job.submit_time < 0.0 || !job.submit_time.is_finite() {
            issues.push(JobIssue {
                job_id: job.id,
                kind: IssueKind::Fatal,
                message: "submit time must be non-negative".into(),
            });
            fatal = true;
        }
        if job.actual_runtime <= 0.0 || job.requested_walltime <= 0.0 {
            issues.push(JobIssue {
                job_id: job.id,
                kind: IssueKind::Fatal,
                message: "runtime and walltime must be positive".into(),
            });
            fatal = true;
        } else if job.actual_runtime > job.requested_walltime {
            // Real schedulers kill at walltime; clamp so end events stay
            // well-defined.
            issues.push(JobIssue {
                job_id: job.id,
                kind: IssueKind::RuntimeClamped,
                message: format!(
                    "runtime {} exceeds walltime {}; clamped",
                    job.actual_runtime, job.requested_walltime
                ),
            });
            job.actual_runtime = job.requested_walltime;
        }
        if !fatal {
            out.push(job);
        }
    }
    let ok = !issues.iter().any(|i| i.kind == IssueKind::Fatal);
    ValidationReport { jobs: out, issues, ok }
}

/// Parse a trace from text and validate every job against `spec`.
/// Returns jobs sorted by (submit_time, id). Runtime clamps are applied
/// silently (query [`validate_jobs`] for the warning records); any fatal
/// validation issue is an error.
pub fn parse_trace(text: &str, spec: &SystemSpec) -> Result<Vec<Job>, TraceError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(TraceError::Parse {
        line: 1,
        message: "empty stream; expected `#dims:` header".into(),
    })?;
    let names = header.strip_prefix("#dims:").ok_or_else(|| TraceError::Parse {
        line: 1,
        message: "first line must be `#dims:<name0>,<name1>,...`".into(),
    })?;
    let names: Vec<&str> = names.split(',').map(str::trim).collect();
    if names.len() != spec.dims()
        || names.iter().zip(&spec.dimension_names).any(|(a, b)| a != b)
    {
        return Err(TraceError::Parse {
            line: 1,
            message: format!(
                "trace dimensions [{}] do not match system dimensions [{}]",
                names.join(","),
                spec.dimension_names.join(",")
            ),
        });
    }

    let mut jobs = Vec::new();
    let mut ids = HashSet::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let expected = 4 + spec.dims();
        if fields.len() != expected {
            return Err(TraceError::Parse {
                line: line_no,
                message: format!("expected {} fields, found {}", expected, fields.len()),
            });
        }
        let num = |s: &str, what: &str| -> Result<f64, TraceError> {
            s.parse::<f64>().map_err(|_| TraceError::Parse {
                line: line_no,
                message: format!("cannot parse {what} `{s}`"),
            })
        };
        let id = fields[0].parse::<u64>().map_err(|_| TraceError::Parse {
            line: line_no,
            message: format!("cannot parse job id `{}`", fields[0]),
        })?;
        if !ids.insert(id) {
            return Err(TraceError::Parse {
                line: line_no,
                message: format!("duplicate job id {id}"),
            });
        }
        let submit_time = num(fields[1], "submit time")?;
        let requested_walltime = num(fields[2], "walltime")?;
        let actual_runtime = num(fields[3], "runtime")?;
        let demand = fields[4..]
            .iter()
            .map(|f| num(f, "demand"))
            .collect::<Result<Vec<f64>, _>>()?;
        jobs.push(Job { id, submit_time, requested_walltime, actual_runtime, demand });
    }

    let report = validate_jobs(jobs, spec);
    if !report.ok {
        let first = report
            .issues
            .iter()
            .find(|i| i.kind == IssueKind::Fatal)
            .expect("not ok implies a fatal issue");
        return Err(TraceError::InvalidJob { id: first.job_id, message: first.message.clone() });
    }
    for issue in &report.issues {
        log::warn!("job {}: {}", issue.job_id, issue.message);
    }
    let mut jobs = report.jobs;
    jobs.sort_by(|a, b| {
        a.submit_time
            .total_cmp(&b.submit_time)
            .then_with(|| a.id.cmp(&b.id))
    });
    Ok(jobs)
}

/// Serialize jobs back to the trace text format. Round-trips through
/// [`parse_trace`].
pub fn write_trace(jobs: &[Job], spec: &SystemSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "#dims:{}", spec.dimension_names.join(","));
    for job in jobs {
        let _ = write!(
            out,
            "{},{},{},{}",
            job.id, job.submit_time, job.requested_walltime, job.actual_runtime
        );
        for d in &job.demand {
            let _ = write!(out, ",{d}");
        }
        out.push('\n');
    }
    out
}

/// Generate a seeded synthetic trace: exponential inter-arrivals,
/// log-uniform runtimes, uniform integer demands within per-dimension
/// bounds. Pure function of `(cfg, spec)`.
pub fn generate_synthetic(cfg: &GenConfig, spec: &SystemSpec) -> Result<Vec<Job>, TraceError> {
    cfg.validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.runtime_range;
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let mut clock = 0.0_f64;
    let mut jobs = Vec::with_capacity(cfg.job_count);
    for id in 1..=cfg.job_count as u64 {
        let u: f64 = rng.gen();
        clock += -cfg.mean_interarrival * (1.0 - u).ln();
        let runtime = if ln_hi > ln_lo {
            rng.gen_range(ln_lo..ln_hi).exp().min(hi).max(lo)
        } else {
            lo
        };
        // Walltime requests are padded estimates of the true runtime.
        let walltime = (runtime * rng.gen_range(1.0..3.0)).ceil();
        let mut demand = Vec::with_capacity(spec.dims());
        for (d, gen) in cfg.demand.iter().enumerate() {
            let zero = d != 0 && gen.zero_probability > 0.0 && rng.gen_bool(gen.zero_probability);
            if zero {
                demand.push(0.0);
            } else {
                let max_units = (gen.max_fraction * spec.capacity[d]).floor().max(1.0) as u64;
                demand.push(rng.gen_range(1..=max_units) as f64);
            }
        }
        jobs.push(Job {
            id,
            submit_time: clock,
            requested_walltime: walltime,
            actual_runtime: runtime.ceil().max(1.0),
            demand,
        });
    }
    Ok(jobs)
}
