use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use stlcluster::clustering::{normalize, Labeling, ProjectionMatrix};
use stlcluster::formula::{validate_polarity, PstlTemplate};
use stlcluster::learning::representatives;
use stlcluster::projection::ProjectionTable;
use stlcluster::templates;
use stlcluster::trace::{load_traces, synth_traces, TimedTrace, TraceSet};

use crate::config::{Algorithm, ClusteringSpec, CornerMode, LearningSpec, PipelineConfig};
use crate::pipeline::{self, cluster_labels, expand_paths, write_all};
use crate::pitfall::{dtw_compare, partition, pitfall_corpus};
use crate::{stage, CliError};

/// Exit code of `validate-template` when a violation is found.
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stlcluster", version, about = "Logical clustering of timed traces")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; `pipeline` defaults to the config's own.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus as one CSV per trace.
    Synth {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Generator parameter as `name=value`; repeatable.
        #[arg(long = "param")]
        params: Vec<String>,
    },
    /// Project traces onto a template's parameter space.
    Project {
        #[arg(long)]
        template: String,
        /// Trace files or directories of them.
        #[arg(long, num_args = 1.., required = true)]
        traces: Vec<PathBuf>,
        /// Channels to keep, comma separated.
        #[arg(long, value_delimiter = ',')]
        schema: Vec<String>,
    },
    /// Cluster a projection table.
    Cluster {
        #[arg(long)]
        projection: PathBuf,
        #[arg(long, value_enum, default_value_t = Algorithm::Gmm)]
        algorithm: Algorithm,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Enclose each cluster in a box and synthesize its formula.
    Learn {
        #[arg(long)]
        template: String,
        #[arg(long)]
        projection: PathBuf,
        #[arg(long)]
        labeling: PathBuf,
        /// Relaxation as `name=value`; repeatable.
        #[arg(long)]
        eps: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        open_dims: Vec<String>,
        #[arg(long)]
        suggest_open_dims: bool,
        /// `essential`, `none`, or comma separated bit strings.
        #[arg(long, default_value = "essential")]
        corners: String,
    },
    /// Representative trace ids of each cluster.
    Reps {
        #[arg(long)]
        template: String,
        #[arg(long)]
        projection: PathBuf,
        #[arg(long)]
        labeling: PathBuf,
        #[arg(long)]
        label: Option<String>,
    },
    /// Compare DTW grouping with projection grouping.
    DtwCompare {
        #[arg(long)]
        template: String,
        #[arg(long, num_args = 1..)]
        traces: Vec<PathBuf>,
        /// Use the bundled pitfall corpus instead of `--traces`.
        #[arg(long)]
        pitfall: bool,
        #[arg(long, default_value = "x")]
        channel: String,
        #[arg(long)]
        k: usize,
    },
    /// Run the whole pipeline from a JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
    /// Search for monotonicity violations of a template.
    ValidateTemplate {
        #[arg(long)]
        template: String,
        /// Traces to test on; a constant-zero trace when omitted.
        #[arg(long, num_args = 1..)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

fn key_values(items: &[String], what: &str) -> Result<BTreeMap<String, f64>, CliError> {
    items
        .iter()
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{what} `{kv}` is not name=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{what} `{kv}` has a non-numeric value")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn read_file(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_table(path: &Path) -> Result<ProjectionTable, CliError> {
    ProjectionTable::read_csv(read_file(path)?).map_err(stage("projection"))
}

fn read_labeling(path: &Path) -> Result<Labeling, CliError> {
    Labeling::read_csv(read_file(path)?).map_err(stage("labeling"))
}

fn template(spec: &str) -> Result<PstlTemplate, CliError> {
    templates::load(spec, None).map_err(stage("template"))
}

fn traces(paths: &[PathBuf], schema: &[String]) -> Result<TraceSet, CliError> {
    load_traces(&expand_paths(paths)?, schema).map_err(stage("traces"))
}

fn corner_mode(s: &str) -> CornerMode {
    match s {
        "essential" => CornerMode::Essential,
        "none" => CornerMode::None,
        bits => CornerMode::Bits(bits.split(',').map(|b| b.trim().to_string()).collect()),
    }
}

fn zero_trace(tpl: &PstlTemplate) -> TraceSet {
    let channels: Vec<String> = tpl.formula().channels().into_iter().collect();
    let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
    let rows = vec![vec![0.0; channels.len()]; times.len()];
    let mut ts = TraceSet::new(channels.clone());
    ts.insert("zero", TimedTrace::new(times, rows, channels).expect("valid grid"))
        .expect("fresh set");
    ts
}

fn distance_bytes(m: &stlcluster::clustering::DistanceMatrix) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    m.write_csv(&mut buf).map_err(stage("write"))?;
    Ok(buf)
}

/// Runs one command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    if let Some(n) = cli.threads {
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut stdout = std::io::stdout().lock();
    let mut say = |line: String| {
        let _ = writeln!(stdout, "{line}");
    };
    match cli.command {
        Command::Synth {
            family,
            count,
            params,
        } => {
            let params = key_values(&params, "parameter")?;
            let ts = synth_traces(&family, &params, count, cli.seed).map_err(stage("synth"))?;
            let written = ts.write_dir(&out_dir).map_err(stage("synth"))?;
            say(format!("wrote {} traces to {}", written.len(), out_dir.display()));
        }
        Command::Project {
            template: t,
            traces: paths,
            schema,
        } => {
            let tpl = template(&t)?;
            let ts = traces(&paths, &schema)?;
            let table = pipeline::project_stage(&ts, &tpl)?;
            write_all(&out_dir, &[("projection.csv".into(), table.to_csv_string().into_bytes())])?;
            say(format!("projected {} traces", table.rows().len()));
        }
        Command::Cluster {
            projection,
            algorithm,
            k,
            max_iter,
            tol,
        } => {
            let table = read_table(&projection)?;
            let spec = ClusteringSpec {
                algorithm,
                k,
                seed: cli.seed,
                max_iter,
                tol,
            };
            let c = pipeline::cluster_stage(&table, &spec)?;
            write_all(
                &out_dir,
                &[
                    ("labeling.csv".into(), pipeline::labeling_bytes(&c.labeling)?),
                    (
                        "model.json".into(),
                        serde_json::to_vec_pretty(&c.model).expect("model serializes"),
                    ),
                ],
            )?;
            say(format!("{} clusters", cluster_labels(&c.labeling).len()));
        }
        Command::Learn {
            template: t,
            projection,
            labeling,
            eps,
            open_dims,
            suggest_open_dims,
            corners,
        } => {
            let tpl = template(&t)?;
            let table = read_table(&projection)?;
            let labeling = read_labeling(&labeling)?;
            let (pm, _) = normalize(&ProjectionMatrix::from_table(&table));
            let spec = LearningSpec {
                eps: key_values(&eps, "eps")?,
                open_dims,
                suggest_open_dims,
                corners: corner_mode(&corners),
            };
            let learned = pipeline::learn_stage(&tpl, &table, &pm, &labeling, &spec)?;
            let file = pipeline::clusters_file(&tpl, &labeling, &learned);
            write_all(
                &out_dir,
                &[(
                    "clusters.json".into(),
                    serde_json::to_vec_pretty(&file).expect("clusters serialize"),
                )],
            )?;
            for c in &file.clusters {
                say(format!("{}: {}", c.label, c.formula));
            }
        }
        Command::Reps {
            template: t,
            projection,
            labeling,
            label,
        } => {
            let space = template(&t)?.space();
            let table = read_table(&projection)?;
            let labeling = read_labeling(&labeling)?;
            let (pm, _) = normalize(&ProjectionMatrix::from_table(&table));
            let labels = match label {
                Some(l) => vec![l],
                None => cluster_labels(&labeling),
            };
            say("label,strong,weak,center".into());
            for l in labels {
                let r = representatives(&pm, &labeling, &l, &space).map_err(stage("reps"))?;
                say(format!("{l},{},{},{}", r.strong, r.weak, r.center));
            }
        }
        Command::DtwCompare {
            template: t,
            traces: paths,
            pitfall,
            channel,
            k,
        } => {
            let tpl = template(&t)?;
            let ts = match (pitfall, paths.is_empty()) {
                (true, _) => pitfall_corpus(cli.seed)?,
                (false, false) => traces(&paths, &[])?,
                (false, true) => return Err(CliError::Usage("give --traces or --pitfall".into())),
            };
            let c = dtw_compare(&ts, &tpl, &channel, k, cli.seed)?;
            write_all(
                &out_dir,
                &[
                    ("dtw_labeling.csv".into(), pipeline::labeling_bytes(&c.dtw_labeling)?),
                    (
                        "projection_labeling.csv".into(),
                        pipeline::labeling_bytes(&c.projection_labeling)?,
                    ),
                    ("dtw_distance.csv".into(), distance_bytes(&c.dtw)?),
                    ("projection_distance.csv".into(), distance_bytes(&c.projection)?),
                ],
            )?;
            for (name, l) in [("dtw", &c.dtw_labeling), ("projection", &c.projection_labeling)] {
                let groups: Vec<String> =
                    partition(l).iter().map(|g| format!("{{{}}}", g.join(" "))).collect();
                say(format!("{name}: {}", groups.join(" ")));
            }
        }
        Command::Pipeline { config } => {
            let cfg = PipelineConfig::from_file(&config)?;
            let base = config.parent().unwrap_or(Path::new(".")).to_path_buf();
            let out = cli
                .out_dir
                .clone()
                .unwrap_or_else(|| pipeline::resolve(&base, &cfg.output_dir));
            let (run, files) = pipeline::run_pipeline(&cfg, &base, &out)?;
            for w in &run.warnings {
                eprintln!("warning: {w}");
            }
            for (c, _) in &run.learned {
                say(format!("{} ({} traces): {}", c.label, c.members, c.formula));
            }
            say(format!("wrote {} files to {}", files.len(), out.display()));
        }
        Command::ValidateTemplate {
            template: t,
            traces: paths,
            samples,
        } => {
            let tpl = template(&t)?;
            let ts = if paths.is_empty() {
                zero_trace(&tpl)
            } else {
                traces(&paths, &[])?
            };
            let report =
                validate_polarity(&tpl, &ts, samples, cli.seed).map_err(stage("validate"))?;
            say(report.to_string());
            if !report.passed() {
                return Ok(EXIT_VIOLATION);
            }
        }
    }
    Ok(0)
}
