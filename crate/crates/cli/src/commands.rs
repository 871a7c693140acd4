//! The six subcommands. Each returns its artifacts so callers (the binary,
//! tests) decide what to print.
//!
//! Layout of a run directory:
//!
//! ```text
//! <out>/config.toml            resolved configuration
//! <out>/metrics.csv            round,method,accuracy,loss,messages
//! <out>/servers.csv            per-server evaluation
//! <out>/summary.txt            final and best values per series
//! <out>/chains.txt             chain files with block counts and head hashes
//! <out>/accuracy.svg, loss.svg
//! <out>/ledger/<SERIES>/       chain files, store/, experiment.toml
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dqfl_core::data::{load_idx_pair, prepare, PreparedData, RawDataset};
use dqfl_core::fed::{resume_baseline, run_baseline, Experiment, Method, RoundMetrics, Topology};
use dqfl_core::ledger::{verify_dir, Ledger, Verification, STORE_DIR};

use crate::config::{parse_methods, ExperimentConfig};
use crate::metrics::{by_method, metrics_csv, parse_metrics, servers_csv, summary_table, MetricsRow};
use crate::svg::{Chart, Series};
use crate::CliError;

/// Name of the configuration echo stored next to each ledger.
pub const EXPERIMENT_FILE: &str = "experiment.toml";
/// Rollback segments live under `<ledger>/segments/b<branch>`.
pub const SEGMENTS_DIR: &str = "segments";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub workers: usize,
}

/// One trained curve: a method, possibly pinned to a topology.
#[derive(Debug, Clone)]
pub struct SeriesReport {
    pub label: String,
    pub method: Method,
    pub metrics: Vec<RoundMetrics>,
    pub ledger_dir: PathBuf,
    pub chain_files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out: PathBuf,
    pub rows: Vec<MetricsRow>,
    pub series: Vec<SeriesReport>,
    pub config_echo: String,
    pub summary: String,
    pub warnings: Vec<String>,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))
}

fn load_raw(dir: &Path, prefix: &str) -> Result<RawDataset, CliError> {
    load_idx_pair(dir, prefix).map_err(|e| match e {
        dqfl_core::Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
            CliError::config(format!("dataset file missing: {io}"))
        }
        other => CliError::from_core(other),
    })
}

/// Loads, pools, splits and shards the dataset for `cfg`.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData, CliError> {
    let dir = &cfg.data.mnist_dir;
    if !dir.is_dir() {
        return Err(CliError::config(format!("dataset directory {} not found", dir.display())));
    }
    let train = load_raw(dir, "train")?;
    let test = if cfg.data.standard_test {
        Some(load_raw(dir, "t10k")?)
    } else {
        None
    };
    let n_clients = cfg.federation.n_servers * cfg.federation.clients_per_server;
    prepare(&train, test.as_ref(), &cfg.data_config()?, n_clients, cfg.seed).map_err(CliError::from_core)
}

fn experiment<'a>(
    cfg: &ExperimentConfig,
    data: &'a PreparedData,
    topology: Topology,
    workers: usize,
) -> Result<Experiment<'a>, CliError> {
    let mut federation = cfg.federation_config()?;
    federation.topology = topology;
    Ok(Experiment {
        data,
        federation,
        train: cfg.train_config(),
        qnn: cfg.qnn_model().map_err(CliError::from_core_config)?,
        dense: cfg.dense_model().map_err(CliError::from_core_config)?,
        central_data: cfg.central_data()?,
        workers,
    })
}

struct Job {
    label: String,
    method: Method,
    topology: Topology,
}

/// Summary of the dataset the configuration would train on.
pub fn cmd_ingest(cfg: &ExperimentConfig, out: &Path) -> Result<String, CliError> {
    let data = prepare_data(cfg)?;
    let k = data.class_set.len();
    let histogram = |labels: &[usize]| {
        let mut h = vec![0usize; k];
        for &l in labels {
            h[l] += 1;
        }
        h
    };
    let mut text = String::new();
    let _ = writeln!(text, "dataset   {}", cfg.data.mnist_dir.display());
    let _ = writeln!(text, "classes   {:?}", data.class_set);
    let _ = writeln!(text, "features  {}", data.test.dim());
    let pooled = data.pooled();
    let _ = writeln!(text, "train     {} {:?}", pooled.len(), histogram(pooled.labels()));
    let _ = writeln!(text, "test      {} {:?}", data.test.len(), histogram(data.test.labels()));
    let _ = writeln!(text, "partition {}", cfg.data.partition);
    for (i, shard) in data.shards.iter().enumerate() {
        let _ = writeln!(text, "client {i:>3} {:>6} {:?}", shard.len(), histogram(shard.labels()));
    }
    create_dir(out)?;
    write(&out.join("ingest.txt"), &text)?;
    Ok(text)
}

/// Runs every configured method under the configured topology.
pub fn cmd_run(opts: &RunOptions) -> Result<RunReport, CliError> {
    let cfg = &opts.config;
    let topology = cfg.topology()?;
    let (methods, dups) = parse_methods(cfg.baselines.methods.iter().map(String::as_str))?;
    let jobs = methods
        .into_iter()
        .map(|method| Job {
            label: method.as_str().to_string(),
            method,
            topology,
        })
        .collect::<Vec<_>>();
    let mut report = execute(opts, &jobs)?;
    report.warnings.extend(dups.iter().map(|m| format!("duplicate method {m} ignored")));
    Ok(report)
}

/// Runs `methods` side by side on one data preparation. With `topologies`,
/// DQFL runs once per topology as `DQFL_<TOPOLOGY>`.
pub fn cmd_compare(opts: &RunOptions, methods: &[String], topologies: &[Topology]) -> Result<RunReport, CliError> {
    let (methods, dups) = parse_methods(methods.iter().map(String::as_str))?;
    let default_topology = opts.config.topology()?;
    let mut jobs = Vec::new();
    for method in methods {
        if method == Method::Dqfl && !topologies.is_empty() {
            let mut seen = Vec::new();
            for &t in topologies {
                if !seen.contains(&t) {
                    seen.push(t);
                    jobs.push(Job {
                        label: format!("{}_{}", method.as_str(), t.as_str()),
                        method,
                        topology: t,
                    });
                }
            }
        } else {
            jobs.push(Job {
                label: method.as_str().to_string(),
                method,
                topology: default_topology,
            });
        }
    }
    if jobs.len() < 2 {
        return Err(CliError::config("compare needs at least two methods or topologies"));
    }
    let mut report = execute(opts, &jobs)?;
    report.warnings.extend(dups.iter().map(|m| format!("duplicate method {m} ignored")));
    Ok(report)
}

fn execute(opts: &RunOptions, jobs: &[Job]) -> Result<RunReport, CliError> {
    let mut cfg = opts.config.clone();
    cfg.out_dir = opts.out.clone();
    cfg.baselines.methods = jobs.iter().map(|j| j.method.as_str().to_string()).collect();
    cfg.baselines.methods.dedup();
    let data = prepare_data(&cfg)?;
    create_dir(&opts.out)?;
    let config_echo = cfg.to_toml();
    write(&opts.out.join("config.toml"), &config_echo)?;

    let mut series = Vec::with_capacity(jobs.len());
    for job in jobs {
        let exp = experiment(&cfg, &data, job.topology, opts.workers)?;
        let run = run_baseline(job.method, &exp).map_err(CliError::from_core)?;
        let ledger_dir = opts.out.join("ledger").join(&job.label);
        if ledger_dir.exists() {
            fs::remove_dir_all(&ledger_dir)
                .map_err(|e| CliError::io(format!("cannot clear {}", ledger_dir.display()), e))?;
        }
        let chain_files = run.ledger.save(&ledger_dir).map_err(CliError::from_core)?;
        let mut job_cfg = cfg.clone();
        job_cfg.baselines.methods = vec![job.method.as_str().to_string()];
        job_cfg.federation.topology = job.topology.as_str().to_ascii_lowercase();
        write(&ledger_dir.join(EXPERIMENT_FILE), job_cfg.to_toml())?;
        series.push(SeriesReport {
            label: job.label.clone(),
            method: job.method,
            metrics: run.metrics,
            ledger_dir,
            chain_files,
        });
    }
    let report = finish_report(&opts.out, series, config_echo, &[])?;
    Ok(report)
}

/// Writes metrics, per-server rows, summary, chain listing and charts.
fn finish_report(
    out: &Path,
    series: Vec<SeriesReport>,
    config_echo: String,
    warnings: &[String],
) -> Result<RunReport, CliError> {
    let rows: Vec<MetricsRow> = series
        .iter()
        .flat_map(|s| s.metrics.iter().map(|m| MetricsRow::from_round(&s.label, m)))
        .collect();
    write(&out.join("metrics.csv"), metrics_csv(&rows))?;
    let per_server: Vec<(String, Vec<RoundMetrics>)> =
        series.iter().map(|s| (s.label.clone(), s.metrics.clone())).collect();
    write(&out.join("servers.csv"), servers_csv(&per_server))?;
    let summary = summary_table(&rows);
    write(&out.join("summary.txt"), &summary)?;
    let mut listing = String::new();
    for s in &series {
        let ledger = Ledger::load(&s.ledger_dir).map_err(CliError::from_core)?;
        for c in ledger.chains() {
            let head = c.head().map(|b| b.block_hash.to_hex()).unwrap_or_default();
            let _ = writeln!(listing, "{} {} {} {head}", s.label, c.name(), c.len());
        }
    }
    write(&out.join("chains.txt"), &listing)?;
    write_charts(&rows, out)?;
    Ok(RunReport {
        out: out.to_path_buf(),
        rows,
        series,
        config_echo,
        summary,
        warnings: warnings.to_vec(),
    })
}

fn write_charts(rows: &[MetricsRow], out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let groups = by_method(rows);
    let mut paths = Vec::new();
    for (name, title, y_label, pick) in [
        ("accuracy.svg", "Test accuracy", "accuracy", (|r: &MetricsRow| r.accuracy) as fn(&MetricsRow) -> f64),
        ("loss.svg", "Test loss", "cross-entropy loss", |r: &MetricsRow| r.loss),
    ] {
        let chart = Chart {
            title: title.into(),
            x_label: "round".into(),
            y_label: y_label.into(),
            series: groups
                .iter()
                .map(|(label, g)| Series {
                    label: label.clone(),
                    points: g.iter().map(|r| (r.round as f64, pick(r))).collect(),
                })
                .collect(),
        };
        let path = out.join(name);
        write(&path, chart.render())?;
        paths.push(path);
    }
    Ok(paths)
}

/// Charts and a summary for one or more metrics files.
pub fn cmd_report(files: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>, CliError> {
    if files.is_empty() {
        return Err(CliError::config("report needs at least one metrics file"));
    }
    let mut rows = Vec::new();
    for f in files {
        let text = fs::read_to_string(f).map_err(|e| CliError::config(format!("cannot read {}: {e}", f.display())))?;
        rows.extend(parse_metrics(&text, f)?);
    }
    create_dir(out)?;
    let mut paths = write_charts(&rows, out)?;
    let report = out.join("report.txt");
    write(&report, summary_table(&rows))?;
    paths.push(report);
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainStatus {
    /// `<ledger>/<tier.owner>` relative to the verified directory.
    pub chain: String,
    pub blocks: usize,
    pub result: Verification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub chains: Vec<ChainStatus>,
}

impl VerifyOutcome {
    pub fn all_ok(&self) -> bool {
        self.chains.iter().all(|c| c.result.is_ok())
    }

    pub fn exit_code(&self) -> u8 {
        if self.all_ok() {
            0
        } else {
            1
        }
    }

    pub fn lines(&self) -> Vec<String> {
        self.chains
            .iter()
            .map(|c| match &c.result {
                Verification::Ok => format!("ok   {} ({} blocks)", c.chain, c.blocks),
                Verification::Bad { height, reason } => format!("FAIL {} height {height}: {reason}", c.chain),
            })
            .collect()
    }
}

/// Verifies a ledger directory, or every ledger directly below `dir`
/// (such as `<run>/ledger`). Exit 2 when there is nothing to verify.
pub fn cmd_verify(dir: &Path) -> Result<VerifyOutcome, CliError> {
    if !dir.is_dir() {
        return Err(CliError::config(format!("{} is not a directory", dir.display())));
    }
    let mut targets = Vec::new();
    if has_chain_files(dir) {
        targets.push((String::new(), dir.to_path_buf()));
    } else {
        let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| CliError::io(format!("cannot list {}", dir.display()), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && p.file_name().is_some_and(|n| n != STORE_DIR) && has_chain_files(p))
            .collect();
        subdirs.sort();
        for p in subdirs {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            targets.push((format!("{name}/"), p));
        }
    }
    if targets.is_empty() {
        return Err(CliError::config(format!("no chain files under {}", dir.display())));
    }
    let mut chains = Vec::new();
    for (prefix, path) in targets {
        let reports = verify_dir(&path).map_err(|e| match e {
            dqfl_core::Error::NotFound(_) => CliError::config(e.to_string()),
            other => CliError::runtime(other.to_string()),
        })?;
        chains.extend(reports.into_iter().map(|r| ChainStatus {
            chain: format!("{prefix}{}", r.chain),
            blocks: r.blocks,
            result: r.result,
        }));
    }
    Ok(VerifyOutcome { chains })
}

fn has_chain_files(dir: &Path) -> bool {
    dqfl_core::ledger::chain_files(dir).is_ok_and(|f| !f.is_empty())
}

#[derive(Debug, Clone)]
pub struct RollbackOptions {
    pub ledger_dir: PathBuf,
    pub round: u64,
    /// Client-training seed of the new branch; the original seed when absent.
    pub seed: Option<u64>,
    /// Rounds to run after `round`; the remainder of the configured rounds when absent.
    pub rounds: Option<u64>,
    pub workers: usize,
    /// Segment directory; `<ledger>/segments/b<branch>` when absent.
    pub out: Option<PathBuf>,
}

/// Restarts a saved run from the GLOBAL model of `round` on a new ledger
/// branch. Chains are extended, never truncated. Data preparation uses the
/// original seed so the client shards are unchanged.
pub fn cmd_rollback(opts: &RollbackOptions) -> Result<RunReport, CliError> {
    let dir = &opts.ledger_dir;
    let cfg_path = dir.join(EXPERIMENT_FILE);
    if !cfg_path.is_file() {
        return Err(CliError::config(format!("{} not found", cfg_path.display())));
    }
    let cfg = ExperimentConfig::load(&cfg_path)?;
    let method = *cfg
        .methods()?
        .first()
        .ok_or_else(|| CliError::config("experiment names no method"))?;
    let mut ledger = Ledger::load(dir).map_err(CliError::from_core)?;
    if let Some((name, v)) = ledger.verify_all().into_iter().find(|(_, v)| !v.is_ok()) {
        return Err(CliError::runtime(format!(
            "ledger fails verification: {name} height {}",
            v.bad_height().unwrap_or(0)
        )));
    }
    let head = ledger
        .global_digests(ledger.latest_branch())
        .last()
        .map(|(r, _)| *r)
        .unwrap_or(0);
    let rounds = match opts.rounds {
        Some(k) => k,
        None => cfg.federation.global_rounds.saturating_sub(opts.round),
    };
    let data = prepare_data(&cfg)?;
    let mut exp = experiment(&cfg, &data, cfg.topology()?, opts.workers)?;
    let new_seed = opts.seed.unwrap_or(cfg.seed);
    exp.federation.seed = new_seed;
    let metrics = resume_baseline(method, &exp, &mut ledger, opts.round, rounds).map_err(|e| match e {
        dqfl_core::Error::NotFound(_) => {
            CliError::runtime(format!("no GLOBAL block for round {} (latest round {head})", opts.round))
        }
        other => CliError::from_core(other),
    })?;
    let branch = ledger.latest_branch();
    let chain_files = ledger.save(dir).map_err(CliError::from_core)?;

    let out = match &opts.out {
        Some(p) => p.clone(),
        None => dir.join(SEGMENTS_DIR).join(format!("b{branch}")),
    };
    create_dir(&out)?;
    let mut echo = cfg.clone();
    echo.seed = new_seed;
    let mut config_echo = format!("# rollback of {} to round {} on branch {branch}\n", dir.display(), opts.round);
    config_echo.push_str(&echo.to_toml());
    write(&out.join("config.toml"), &config_echo)?;
    let label = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| method.as_str().to_string());
    let series = vec![SeriesReport {
        label,
        method,
        metrics,
        ledger_dir: dir.clone(),
        chain_files,
    }];
    finish_report(&out, series, config_echo, &[])
}
