//! Configured experiments, their reports, and the acceptance suite.

mod clock;
mod config;
mod coupling;
mod exactness;
mod kappa;
mod limits;
mod lil;
mod report;
mod small_deviation;

use std::path::Path;
use std::time::Instant;

pub use config::{ExperimentConfig, ExperimentId, Profile, DEFAULT_SEED};
pub use report::{write_summary, Check, CsvRow, ExperimentReport, ReportRow, CSV_HEADER};

use crate::error::Result;

/// Everything a runner needs.
pub(crate) struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub profile: Profile,
    pub seed: u64,
}

impl Ctx<'_> {
    /// `full` under the full profile, `quick` otherwise.
    pub fn pick<T>(&self, full: T, quick: T) -> T {
        match self.profile {
            Profile::Full => full,
            Profile::Quick => quick,
        }
    }
}

/// Run one configured experiment.
pub fn run(cfg: &ExperimentConfig, profile: Profile) -> Result<ExperimentReport> {
    cfg.validate()?;
    let id = cfg.id()?;
    let ctx = Ctx { cfg, profile, seed: cfg.seed() };
    let mut report = ExperimentReport::new(id, ctx.seed, cfg.hash());
    let start = Instant::now();
    match id {
        ExperimentId::Exactness => exactness::run(&ctx, &mut report)?,
        ExperimentId::Kappa => kappa::run(&ctx, &mut report)?,
        ExperimentId::E1 => limits::run_e1(&ctx, &mut report)?,
        ExperimentId::E2 => limits::run_mixture(&ctx, &mut report, &[1.0])?,
        ExperimentId::E3 => {
            let ts = cfg.t_values.clone().unwrap_or_else(|| vec![0.25, 0.5]);
            limits::run_mixture(&ctx, &mut report, &ts)?
        }
        ExperimentId::E4 => clock::run(&ctx, &mut report)?,
        ExperimentId::E5 => coupling::run(&ctx, &mut report)?,
        ExperimentId::E6 => small_deviation::run(&ctx, &mut report)?,
        ExperimentId::E7 => lil::run(&ctx, &mut report)?,
    }
    report.wall_time = start.elapsed();
    Ok(report)
}

/// Run an experiment with default settings and the given seed.
pub fn run_default(id: ExperimentId, profile: Profile, seed: u64) -> Result<ExperimentReport> {
    let mut cfg = ExperimentConfig::for_experiment(id);
    cfg.master_seed = Some(seed);
    run(&cfg, profile)
}

/// Acceptance criteria and a one-line description of each.
pub const CRITERIA: [(u8, &str); 10] = [
    (1, "incremental engine matches direct sums"),
    (2, "kappa routes agree; Monte Carlo I_n/n matches series"),
    (3, "d=3 Gaussian limit of H_n"),
    (4, "d=1 mixture limit at t = 1, 0.25, 0.5"),
    (5, "clock asymptotics in d = 1, 2, 3"),
    (6, "decomposition scaling slopes"),
    (7, "Révész coupling error slope"),
    (8, "small-ball bounds"),
    (9, "a* Laplace fit"),
    (10, "LIL running minima"),
];

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        let title = CRITERIA.iter().find(|c| c.0 == self.id).map_or("", |c| c.1);
        format!(
            "criterion {:>2} [{}] {title}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

/// Criterion outcomes covered by a report.
pub fn criterion_outcomes(report: &ExperimentReport) -> Vec<CriterionOutcome> {
    report
        .criteria()
        .into_iter()
        .map(|id| {
            let detail = report
                .rows
                .iter()
                .filter(|r| r.criterion == Some(id))
                .map(|r| {
                    let check = r.check.map(|c| format!(" ({c})")).unwrap_or_default();
                    format!("{}={:.6}{check}", r.name, r.value)
                })
                .collect::<Vec<_>>()
                .join("; ");
            CriterionOutcome { id, passed: report.criterion_passed(id).unwrap_or(false), detail }
        })
        .collect()
}

/// Experiments run by `verify_all`, in order.
pub const SUITE: [ExperimentId; 9] = ExperimentId::ALL;

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub reports: Vec<ExperimentReport>,
    pub criteria: Vec<CriterionOutcome>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed) && self.reports.iter().all(ExperimentReport::passed)
    }
}

/// Run the whole acceptance suite; with `out`, write one CSV per experiment
/// and `summary.txt`. Criterion outcomes are passed to `on_criterion` as
/// soon as they are known.
pub fn verify_all(
    profile: Profile,
    seed: u64,
    out: Option<&Path>,
    mut on_criterion: impl FnMut(&CriterionOutcome),
) -> Result<VerifyOutcome> {
    let mut reports = Vec::new();
    let mut criteria: Vec<CriterionOutcome> = Vec::new();
    for id in SUITE {
        let report = run_default(id, profile, seed)?;
        if let Some(dir) = out {
            report.write_to_dir(dir)?;
        }
        for c in criterion_outcomes(&report) {
            // Criterion 4 spans E2 and E3.
            if let Some(prev) = criteria.iter_mut().find(|p| p.id == c.id) {
                prev.passed &= c.passed;
                prev.detail = format!("{}; {}", prev.detail, c.detail);
            } else {
                criteria.push(c);
            }
        }
        for c in criteria.iter().filter(|c| last_experiment(c.id) == id) {
            on_criterion(c);
        }
        reports.push(report);
    }
    criteria.sort_by_key(|c| c.id);
    let outcome = VerifyOutcome { reports, criteria };
    if let Some(dir) = out {
        let mut footer = String::from("\n== acceptance\n");
        for c in &outcome.criteria {
            footer.push_str(&c.line());
            footer.push('\n');
        }
        footer.push_str(if outcome.passed() { "overall: PASS\n" } else { "overall: FAIL\n" });
        write_summary(dir, &outcome.reports, &footer)?;
    }
    Ok(outcome)
}

/// The experiment after which criterion `k` is complete.
fn last_experiment(k: u8) -> ExperimentId {
    match k {
        1 => ExperimentId::Exactness,
        2 => ExperimentId::Kappa,
        3 => ExperimentId::E1,
        4 => ExperimentId::E3,
        5 | 6 => ExperimentId::E4,
        7 => ExperimentId::E5,
        8 | 9 => ExperimentId::E6,
        _ => ExperimentId::E7,
    }
}
