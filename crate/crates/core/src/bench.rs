//! Benchmark matrices, (min, mean, max) summaries and Dolan-Moré
//! performance profiles.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cg::{run_seeded, BetaVariant, RunRecord, RunStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::problems::{lookup, sample_start};

/// Problems × variants × seeds, all sharing one base configuration.
#[derive(Clone, Debug)]
pub struct BenchMatrix {
    pub problems: Vec<String>,
    pub variants: Vec<BetaVariant>,
    pub seeds: Vec<u64>,
    /// Base settings; the variant field is replaced per cell.
    pub config: SolverConfig,
}

impl BenchMatrix {
    pub fn new(problems: Vec<String>, variants: Vec<BetaVariant>, seeds: Vec<u64>, config: SolverConfig) -> Result<Self> {
        let m = BenchMatrix {
            problems,
            variants,
            seeds,
            config,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.problems.is_empty() {
            return Err(Error::InvalidConfig("bench matrix has no problems".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::InvalidConfig("bench matrix has no variants".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("bench matrix has an empty seed range".into()));
        }
        for p in &self.problems {
            lookup(p)?;
        }
        for v in &self.variants {
            let mut cfg = self.config.clone();
            cfg.variant = *v;
            cfg.validate()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.problems.len() * self.variants.len() * self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parses `a..b` (both ends included), `a..=b`, a single seed, or a
/// comma-separated list of those.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidConfig(format!("cannot parse seed range {text:?}"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let b = b.strip_prefix('=').unwrap_or(b);
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(part.parse().map_err(|_| bad())?);
        }
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("empty seed range".into()));
    }
    Ok(seeds)
}

/// Runs every cell on a pool of `parallelism` workers. Records come back in
/// problem, variant, seed order whatever the pool size.
pub fn run_matrix(matrix: &BenchMatrix, parallelism: usize) -> Result<Vec<RunRecord>> {
    matrix.validate()?;
    if parallelism == 0 {
        return Err(Error::InvalidConfig("parallelism must be at least 1".into()));
    }
    let specs = matrix
        .problems
        .iter()
        .map(|p| lookup(p))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(matrix.len());
    for (pi, _) in specs.iter().enumerate() {
        for v in &matrix.variants {
            for &seed in &matrix.seeds {
                cells.push((pi, *v, seed));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let records = pool.install(|| {
        cells
            .par_iter()
            .map(|&(pi, variant, seed)| {
                let spec = &specs[pi];
                let mut cfg = matrix.config.clone();
                cfg.variant = variant;
                let x0 = sample_start(spec, seed);
                run_seeded(&spec.mo, &x0, &cfg, Some(seed))
                    .unwrap_or_else(|e| RunRecord::failed(&spec.name, &cfg, Some(seed), &x0, &e))
            })
            .collect()
    });
    Ok(records)
}

/// One row of `runs.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub problem: String,
    pub variant: String,
    pub seed: u64,
    pub status: RunStatus,
    pub iters: usize,
    pub wall_time_s: f64,
    pub final_xi: f64,
    pub restarts: usize,
}

impl From<&RunRecord> for RunRow {
    fn from(r: &RunRecord) -> Self {
        RunRow {
            problem: r.problem.clone(),
            variant: r.variant.name().to_string(),
            seed: r.seed.unwrap_or(0),
            status: r.status,
            iters: r.iterations,
            wall_time_s: r.wall_time,
            final_xi: r.final_xi(),
            restarts: r.restarts,
        }
    }
}

/// (min, mean, max) of iterations and time over the successful runs of one
/// (problem, variant) cell. Statistics are NaN when no run succeeded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub variant: String,
    pub runs: usize,
    pub failures: usize,
    pub iter_min: f64,
    pub iter_mean: f64,
    pub iter_max: f64,
    pub time_min: f64,
    pub time_mean: f64,
    pub time_max: f64,
}

fn min_mean_max(xs: &[f64]) -> (f64, f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = (xs.iter().sum::<f64>() / xs.len() as f64).clamp(min, max);
    (min, mean, max)
}

/// Groups rows by (problem, variant) in order of first appearance. A run
/// counts as successful when it ended `Critical`.
pub fn aggregate(rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: HashMap<(String, String), Vec<&RunRow>> = HashMap::new();
    for r in rows {
        let key = (r.problem.clone(), r.variant.clone());
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let members = &groups[&key];
            let ok: Vec<&&RunRow> = members.iter().filter(|r| r.status == RunStatus::Critical).collect();
            let iters: Vec<f64> = ok.iter().map(|r| r.iters as f64).collect();
            let times: Vec<f64> = ok.iter().map(|r| r.wall_time_s).collect();
            let (iter_min, iter_mean, iter_max) = min_mean_max(&iters);
            let (time_min, time_mean, time_max) = min_mean_max(&times);
            SummaryRow {
                problem: key.0,
                variant: key.1,
                runs: members.len(),
                failures: members.len() - ok.len(),
                iter_min,
                iter_mean,
                iter_max,
                time_min,
                time_mean,
                time_max,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Iterations,
    CpuTime,
}

impl Metric {
    /// File-name tag.
    pub fn tag(&self) -> &'static str {
        match self {
            Metric::Iterations => "iterations",
            Metric::CpuTime => "time",
        }
    }
}

/// Ratios `R[p][s]` and the step curves `F_s` sampled at every distinct
/// finite ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileData {
    pub metric: Metric,
    pub problems: Vec<String>,
    pub solvers: Vec<String>,
    /// `ratios[p][s]`; `None` stands for an unsolved cell (ratio +∞).
    pub ratios: Vec<Vec<Option<f64>>>,
    pub breakpoints: Vec<f64>,
    /// `curves[s][b]` is `F_s(breakpoints[b])`.
    pub curves: Vec<Vec<f64>>,
}

impl ProfileData {
    /// Builds the profile from `values[p][s]`; `None` or a non-finite value
    /// marks an unsolved cell.
    pub fn from_table(metric: Metric, problems: Vec<String>, solvers: Vec<String>, values: &[Vec<Option<f64>>]) -> Self {
        let ratios: Vec<Vec<Option<f64>>> = values
            .iter()
            .map(|row| {
                let finite = |v: &Option<f64>| v.filter(|x| x.is_finite() && *x >= 0.0);
                let best = row.iter().filter_map(finite).fold(f64::INFINITY, f64::min);
                row.iter()
                    .map(|v| {
                        finite(v).and_then(|x| {
                            if x == best {
                                Some(1.0)
                            } else if best > 0.0 {
                                Some(x / best)
                            } else {
                                None
                            }
                        })
                    })
                    .collect()
            })
            .collect();

        let mut breakpoints: Vec<f64> = ratios.iter().flatten().filter_map(|r| *r).collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();

        let np = problems.len().max(1) as f64;
        let curves = (0..solvers.len())
            .map(|s| {
                breakpoints
                    .iter()
                    .map(|&z| ratios.iter().filter(|row| row[s].is_some_and(|r| r <= z)).count() as f64 / np)
                    .collect()
            })
            .collect();

        ProfileData {
            metric,
            problems,
            solvers,
            ratios,
            breakpoints,
            curves,
        }
    }

    /// `F_s(z)`.
    pub fn eval(&self, solver: usize, z: f64) -> f64 {
        let np = self.problems.len().max(1) as f64;
        self.ratios.iter().filter(|row| row[solver].is_some_and(|r| r <= z)).count() as f64 / np
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["z".to_string()];
        header.extend(self.solvers.iter().cloned());
        out.write_record(&header).map_err(io_err)?;
        for (b, z) in self.breakpoints.iter().enumerate() {
            let mut rec = vec![z.to_string()];
            rec.extend(self.curves.iter().map(|c| c[b].to_string()));
            out.write_record(&rec).map_err(io_err)?;
        }
        out.flush().map_err(|e| io_err(e.into()))?;
        Ok(())
    }
}

/// Profile over the mean metric of each (problem, variant) cell. Problems
/// and solvers keep their order of first appearance.
pub fn performance_profile(summary: &[SummaryRow], metric: Metric) -> ProfileData {
    let mut problems: Vec<String> = Vec::new();
    let mut solvers: Vec<String> = Vec::new();
    for row in summary {
        if !problems.contains(&row.problem) {
            problems.push(row.problem.clone());
        }
        if !solvers.contains(&row.variant) {
            solvers.push(row.variant.clone());
        }
    }
    let mut values = vec![vec![None; solvers.len()]; problems.len()];
    for row in summary {
        let p = problems.iter().position(|x| *x == row.problem).expect("collected above");
        let s = solvers.iter().position(|x| *x == row.variant).expect("collected above");
        values[p][s] = Some(match metric {
            Metric::Iterations => row.iter_mean,
            Metric::CpuTime => row.time_mean,
        });
    }
    ProfileData::from_table(metric, problems, solvers, &values)
}

fn io_err(e: csv::Error) -> Error {
    Error::InvalidConfig(format!("csv: {e}"))
}

fn file_err(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidConfig(format!("{}: {e}", path.display()))
}

pub fn write_runs_csv(path: &Path, rows: &[RunRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    for r in rows {
        w.serialize(r).map_err(io_err)?;
    }
    w.flush().map_err(|e| file_err(path, e))
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRow>> {
    let mut r = csv::Reader::from_path(path).map_err(io_err)?;
    r.deserialize().map(|row| row.map_err(io_err)).collect()
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    for r in rows {
        w.serialize(r).map_err(io_err)?;
    }
    w.flush().map_err(|e| file_err(path, e))
}

/// Writes `profile_<metric>.csv` and `profile_<metric>.json` into `dir`.
pub fn write_profile(dir: &Path, profile: &ProfileData) -> Result<()> {
    let tag = profile.metric.tag();
    let csv_path = dir.join(format!("profile_{tag}.csv"));
    let f = File::create(&csv_path).map_err(|e| file_err(&csv_path, e))?;
    profile.write_csv(BufWriter::new(f))?;
    let json_path = dir.join(format!("profile_{tag}.json"));
    let f = File::create(&json_path).map_err(|e| file_err(&json_path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, profile).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    writeln!(w).map_err(|e| file_err(&json_path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cg::BetaKind;

    fn row(problem: &str, variant: &str, iters: usize, status: RunStatus) -> RunRow {
        RunRow {
            problem: problem.into(),
            variant: variant.into(),
            seed: 0,
            status,
            iters,
            wall_time_s: iters as f64 * 0.5,
            final_xi: 0.0,
            restarts: 0,
        }
    }

    #[test]
    fn seeds_parse() {
        assert_eq!(parse_seeds("0..99").unwrap().len(), 100);
        assert_eq!(parse_seeds("3..=5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_seeds("1,4, 7..8").unwrap(), vec![1, 4, 7, 8]);
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("5..2").is_err());
        assert!(parse_seeds("a..b").is_err());
    }

    #[test]
    fn aggregate_examples() {
        let rows = vec![
            row("p", "FR", 0, RunStatus::Critical),
            row("p", "FR", 3, RunStatus::Critical),
            row("p", "FR", 6, RunStatus::Critical),
        ];
        let s = aggregate(&rows);
        assert_eq!((s[0].iter_min, s[0].iter_mean, s[0].iter_max), (0.0, 3.0, 6.0));
        assert_eq!(s[0].failures, 0);

        let s = aggregate(&rows[1..2]);
        assert_eq!((s[0].iter_min, s[0].iter_mean, s[0].iter_max), (3.0, 3.0, 3.0));

        let rows = vec![
            row("p", "FR", 2, RunStatus::Critical),
            row("p", "FR", 9999, RunStatus::MaxIter),
            row("p", "FR", 4, RunStatus::Critical),
        ];
        let s = aggregate(&rows);
        assert_eq!(s[0].iter_mean, 3.0);
        assert_eq!((s[0].runs, s[0].failures), (3, 1));
    }

    #[test]
    fn profile_hand_example() {
        let values = vec![vec![Some(10.0), Some(20.0)], vec![Some(30.0), Some(15.0)]];
        let p = ProfileData::from_table(
            Metric::Iterations,
            vec!["p1".into(), "p2".into()],
            vec!["A".into(), "B".into()],
            &values,
        );
        assert_eq!(p.ratios, vec![vec![Some(1.0), Some(2.0)], vec![Some(2.0), Some(1.0)]]);
        assert_eq!(p.breakpoints, vec![1.0, 2.0]);
        assert_eq!(p.curves, vec![vec![0.5, 1.0], vec![0.5, 1.0]]);
    }

    #[test]
    fn profile_single_solver_and_failures() {
        let p = ProfileData::from_table(Metric::CpuTime, vec!["a".into()], vec!["S".into()], &[vec![Some(3.0)]]);
        assert_eq!(p.ratios, vec![vec![Some(1.0)]]);
        assert_eq!(p.eval(0, 1.0), 1.0);

        let values = vec![vec![Some(1.0), None], vec![Some(2.0), Some(2.0)]];
        let p = ProfileData::from_table(
            Metric::Iterations,
            vec!["a".into(), "b".into()],
            vec!["S".into(), "T".into()],
            &values,
        );
        assert_eq!(p.ratios[0][1], None);
        assert_eq!(p.eval(1, f64::MAX), 0.5);
        assert_eq!(p.eval(0, 1.0), 1.0);
    }

    #[test]
    fn profile_csv_layout() {
        let values = vec![vec![Some(10.0), Some(20.0)]];
        let p = ProfileData::from_table(Metric::Iterations, vec!["p".into()], vec!["FR".into(), "DY".into()], &values);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "z,FR,DY\n1,1,0\n2,1,1\n");
    }

    #[test]
    fn matrix_validation() {
        let cfg = SolverConfig::default();
        let v = vec![BetaVariant::standard(BetaKind::FR)];
        assert!(BenchMatrix::new(vec!["iq-convex-2".into()], v.clone(), vec![], cfg.clone()).is_err());
        assert!(BenchMatrix::new(vec!["nope".into()], v.clone(), vec![0], cfg.clone()).is_err());
        let m = BenchMatrix::new(vec!["iq-convex-2".into()], v, vec![0, 1, 2], cfg).unwrap();
        let recs = run_matrix(&m, 1).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![Some(0), Some(1), Some(2)]);
    }
}
