use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stlcluster::clustering::{
    fit_gmm, fit_kmeans, normalize, ClusterModel, Labeling, Normalization, ProjectionMatrix,
    BOTTOM_LABEL, TOP_LABEL,
};
use stlcluster::formula::PstlTemplate;
use stlcluster::learning::{
    bounding_hyperbox, representatives, suggest_open_dims, synthesize_formula, CornerSubset,
    LearnedCluster, SynthesizedFormula,
};
use stlcluster::projection::{project_all, ProjectionTable, Valuation};
use stlcluster::templates;
use stlcluster::trace::{load_traces, preprocess, synth_traces, Preprocess, TraceSet};

use crate::config::{Algorithm, ClusteringSpec, CornerMode, LearningSpec, PipelineConfig, TraceSource};
use crate::{stage, CliError};

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Expands directories to their `*.csv` files, sorted by name.
pub fn expand_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let rd = std::fs::read_dir(p).map_err(|source| CliError::Io {
                path: p.clone(),
                source,
            })?;
            let mut files: Vec<PathBuf> = rd
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "csv"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn rename(ts: TraceSet, from: &str, to: &str) -> Result<TraceSet, CliError> {
    let mut out = TraceSet::new(ts.channels().to_vec());
    for (id, tr) in ts.iter() {
        let id = id.strip_prefix(from).map_or_else(|| id.clone(), |rest| format!("{to}{rest}"));
        out.insert(id, tr.clone()).map_err(stage("traces"))?;
    }
    Ok(out)
}

/// Loads and merges every trace source.
pub fn load_sources(sources: &[TraceSource], base: &Path) -> Result<TraceSet, CliError> {
    let mut all: Option<TraceSet> = None;
    for src in sources {
        let ts = match src {
            TraceSource::Files { paths, schema } => {
                let paths: Vec<PathBuf> = paths.iter().map(|p| resolve(base, p)).collect();
                load_traces(&expand_paths(&paths)?, schema).map_err(stage("traces"))?
            }
            TraceSource::Dir { path, schema } => {
                let files = expand_paths(&[resolve(base, path)])?;
                load_traces(&files, schema).map_err(stage("traces"))?
            }
            TraceSource::Synth {
                family,
                count,
                seed,
                params,
                prefix,
            } => {
                let ts = synth_traces(family, params, *count, *seed).map_err(stage("traces"))?;
                match prefix {
                    Some(p) => rename(ts, family, p)?,
                    None => ts,
                }
            }
        };
        match &mut all {
            None => all = Some(ts),
            Some(acc) => acc.extend(ts).map_err(stage("traces"))?,
        }
    }
    all.ok_or_else(|| CliError::Config("no trace sources".into()))
}

/// Runs the preprocessing steps in order, collecting warnings.
pub fn apply_preprocess(
    ts: TraceSet,
    steps: &[Preprocess],
) -> Result<(TraceSet, Vec<String>), CliError> {
    let mut warnings = Vec::new();
    let mut cur = ts;
    for step in steps {
        let out = preprocess(&cur, step).map_err(stage("preprocess"))?;
        warnings.extend(out.warnings);
        cur = out.traces;
    }
    Ok((cur, warnings))
}

/// Projects every trace; any per-trace failure aborts the stage.
pub fn project_stage(ts: &TraceSet, tpl: &PstlTemplate) -> Result<ProjectionTable, CliError> {
    let table = project_all(ts, tpl);
    if let Some((id, e)) = table.errors().iter().next() {
        return Err(CliError::Stage {
            stage: "project",
            msg: format!("trace `{id}`: {e}"),
        });
    }
    Ok(table)
}

/// The normalized matrix, its transform, the fitted model and the labeling.
#[derive(Debug, Clone)]
pub struct Clustered {
    pub normalized: ProjectionMatrix,
    pub normalization: Normalization,
    pub model: ClusterModel,
    pub labeling: Labeling,
}

pub fn cluster_stage(table: &ProjectionTable, spec: &ClusteringSpec) -> Result<Clustered, CliError> {
    let pm = ProjectionMatrix::from_table(table);
    let (normalized, normalization) = normalize(&pm);
    let fit = match spec.algorithm {
        Algorithm::Kmeans => fit_kmeans(&normalized, spec.k, spec.seed, spec.max_iter, spec.tol),
        Algorithm::Gmm => fit_gmm(&normalized, spec.k, spec.seed, spec.max_iter, spec.tol),
    };
    let (mut model, labeling) = fit.map_err(stage("cluster"))?;
    model.normalization = Some(normalization.clone());
    Ok(Clustered {
        normalized,
        normalization,
        model,
        labeling,
    })
}

/// Labels that name real clusters.
pub fn cluster_labels(labeling: &Labeling) -> Vec<String> {
    labeling
        .label_set()
        .into_iter()
        .filter(|l| l != TOP_LABEL && l != BOTTOM_LABEL)
        .collect()
}

pub fn corner_subset(mode: &CornerMode, dims: usize) -> Result<CornerSubset, CliError> {
    match mode {
        CornerMode::Essential => Ok(CornerSubset::essential(dims)),
        CornerMode::None => Ok(CornerSubset::none(dims)),
        CornerMode::Bits(bits) => CornerSubset::from_bits(dims, bits).map_err(stage("learn")),
    }
}

/// Encloses, describes and summarizes every non-reserved cluster.
pub fn learn_stage(
    tpl: &PstlTemplate,
    table: &ProjectionTable,
    normalized: &ProjectionMatrix,
    labeling: &Labeling,
    spec: &LearningSpec,
) -> Result<Vec<(LearnedCluster, SynthesizedFormula)>, CliError> {
    let space = tpl.space();
    let names = space.names();
    if let Some(bad) = spec
        .eps
        .keys()
        .chain(&spec.open_dims)
        .find(|n| !names.contains(n))
    {
        return Err(CliError::Stage {
            stage: "learn",
            msg: format!("unknown parameter `{bad}`"),
        });
    }
    let eps: Vec<f64> = space
        .decls()
        .iter()
        .map(|d| spec.eps.get(&d.name).copied().unwrap_or(d.epsilon))
        .collect();
    let corners = corner_subset(&spec.corners, space.len())?;
    let mut out = Vec::new();
    for label in cluster_labels(labeling) {
        let members = labeling.members(&label);
        let points: Vec<Valuation> = members
            .iter()
            .filter_map(|id| table.rows().get(id))
            .map(|p| p.valuation.clone())
            .filter(|v| !v.is_sentinel())
            .collect();
        let mut open: BTreeSet<String> = spec.open_dims.iter().cloned().collect();
        if spec.suggest_open_dims {
            open.extend(
                suggest_open_dims(normalized, labeling, &label, &space).map_err(stage("learn"))?,
            );
        }
        let b = bounding_hyperbox(&space, &points, &eps, &open).map_err(stage("learn"))?;
        let psi = synthesize_formula(tpl, &b, &corners).map_err(stage("learn"))?;
        let reps = representatives(normalized, labeling, &label, &space).map_err(stage("reps"))?;
        out.push((
            LearnedCluster::new(label, &psi, &open, reps, points.len()),
            psi,
        ));
    }
    Ok(out)
}

/// Contents of the learned-cluster JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustersFile {
    pub template: String,
    pub params: Vec<String>,
    pub clusters: Vec<LearnedCluster>,
    /// Reserved label to number of traces carrying it.
    pub sentinels: BTreeMap<String, usize>,
}

pub fn clusters_file(
    tpl: &PstlTemplate,
    labeling: &Labeling,
    learned: &[(LearnedCluster, SynthesizedFormula)],
) -> ClustersFile {
    let sentinels = [TOP_LABEL, BOTTOM_LABEL]
        .into_iter()
        .map(|l| (l.to_string(), labeling.members(l).len()))
        .filter(|(_, n)| *n > 0)
        .collect();
    ClustersFile {
        template: tpl.name().to_string(),
        params: tpl.param_names(),
        clusters: learned.iter().map(|(c, _)| c.clone()).collect(),
        sentinels,
    }
}

fn csv_bytes(write: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        write(&mut w).expect("in-memory csv");
        w.flush().expect("in-memory csv");
    }
    buf
}

/// `trace_id,<params>,label` with multiple labels joined by `;`.
pub fn scatter_csv(table: &ProjectionTable, labeling: &Labeling) -> Vec<u8> {
    csv_bytes(|w| {
        let mut header = vec!["trace_id".to_string()];
        header.extend(table.params().iter().cloned());
        header.push("label".into());
        w.write_record(&header)?;
        for (id, p) in table.rows() {
            let Valuation::Point(m) = &p.valuation else {
                continue;
            };
            let mut row = vec![id.clone()];
            row.extend(table.params().iter().map(|c| m[c].to_string()));
            let labels: Vec<String> = labeling
                .get(id)
                .map(|ls| ls.iter().cloned().collect())
                .unwrap_or_default();
            row.push(labels.join(";"));
            w.write_record(&row)?;
        }
        Ok(())
    })
}

/// Samples of every representative trace:
/// `label,role,trace_id,time,<channels>`.
pub fn representatives_csv(ts: &TraceSet, clusters: &[LearnedCluster]) -> Vec<u8> {
    csv_bytes(|w| {
        let mut header: Vec<String> = ["label", "role", "trace_id", "time"]
            .into_iter()
            .map(String::from)
            .collect();
        header.extend(ts.channels().iter().cloned());
        w.write_record(&header)?;
        for c in clusters {
            let r = &c.representatives;
            for (role, id) in [("strong", &r.strong), ("weak", &r.weak), ("center", &r.center)] {
                let Some(tr) = ts.get(id) else { continue };
                for i in 0..tr.len() {
                    let mut row = vec![c.label.clone(), role.to_string(), id.clone()];
                    row.push(tr.times()[i].to_string());
                    row.extend(tr.row(i).iter().map(|v| v.to_string()));
                    w.write_record(&row)?;
                }
            }
        }
        Ok(())
    })
}

pub fn labeling_bytes(labeling: &Labeling) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    labeling.write_csv(&mut buf).map_err(stage("write"))?;
    Ok(buf)
}

/// Writes all files or none: anything already written is removed when a
/// later write fails.
pub fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(source) = std::fs::write(&path, bytes) {
            for w in &written {
                let _ = std::fs::remove_file(w);
            }
            return Err(CliError::Io { path, source });
        }
        written.push(path);
    }
    Ok(written)
}

/// In-memory result of a pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub template: PstlTemplate,
    pub traces: TraceSet,
    pub warnings: Vec<String>,
    pub table: ProjectionTable,
    pub clustered: Clustered,
    pub learned: Vec<(LearnedCluster, SynthesizedFormula)>,
}

impl PipelineRun {
    pub fn clusters_file(&self) -> ClustersFile {
        clusters_file(&self.template, &self.clustered.labeling, &self.learned)
    }

    /// Output file names and contents, in write order.
    pub fn files(&self) -> Result<Vec<(String, Vec<u8>)>, CliError> {
        let clusters = self.clusters_file();
        Ok(vec![
            ("projection.csv".into(), self.table.to_csv_string().into_bytes()),
            ("labeling.csv".into(), labeling_bytes(&self.clustered.labeling)?),
            (
                "model.json".into(),
                serde_json::to_vec_pretty(&self.clustered.model).expect("model serializes"),
            ),
            (
                "clusters.json".into(),
                serde_json::to_vec_pretty(&clusters).expect("clusters serialize"),
            ),
            ("scatter.csv".into(), scatter_csv(&self.table, &self.clustered.labeling)),
            (
                "representatives.csv".into(),
                representatives_csv(&self.traces, &clusters.clusters),
            ),
        ])
    }
}

/// Runs every stage without touching the output directory. The template is
/// loaded before any trace is read.
pub fn execute(cfg: &PipelineConfig, base: &Path) -> Result<PipelineRun, CliError> {
    cfg.validate()?;
    let template = templates::load(&cfg.template, Some(base)).map_err(stage("template"))?;
    let traces = load_sources(&cfg.traces, base)?;
    let (traces, warnings) = apply_preprocess(traces, &cfg.preprocess)?;
    let table = project_stage(&traces, &template)?;
    let clustered = cluster_stage(&table, &cfg.clustering)?;
    let learned = learn_stage(
        &template,
        &table,
        &clustered.normalized,
        &clustered.labeling,
        &cfg.learning,
    )?;
    Ok(PipelineRun {
        template,
        traces,
        warnings,
        table,
        clustered,
        learned,
    })
}

/// Runs the pipeline and writes its outputs into `out_dir`.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    base: &Path,
    out_dir: &Path,
) -> Result<(PipelineRun, Vec<PathBuf>), CliError> {
    let run = execute(cfg, base)?;
    let files = write_all(out_dir, &run.files()?)?;
    Ok((run, files))
}
