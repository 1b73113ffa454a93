use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use tas_core::io::{read_data_file, read_matrix_file};
use tas_core::simulation::{
    data_partition_run, grid_cardinality_study, mle_diagnostics, run_model_simulation, EstimatorConfig, GridStudySetup,
    Scenario, ScenarioSpec, SimulationReport,
};
use tas_core::targets::summarise;
use tas_core::{
    build_target_set, external_target, posterior_grid, sample_covariance, tas_estimate, target_distance_matrix,
    AlphaGrid, Error, Provenance, Result, ShrinkageTarget, SymMatrix, TargetKind, TargetSet,
};

use crate::output::{num, RunInfo, Writer};
use crate::{DiagnoseArgs, EstimateArgs, Format, GridStudyArgs, PartitionArgs, SimulateArgs, TargetsArgs};

const LIKELIHOOD_NOTE: &str = "log marginal likelihood with both determinant exponents (nu0/2 and nu1/2) \
carrying the factor 1/2 of the inverse-Wishart normalising constant";

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn parse_kinds(names: &[String]) -> Result<Vec<TargetKind>> {
    names
        .iter()
        .filter(|n| !n.trim().is_empty())
        .map(|n| n.parse())
        .collect()
}

fn matrix_target(path: &Path, p: usize) -> Result<ShrinkageTarget> {
    let (_, m) = read_matrix_file(path)?;
    if m.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: m.dim(),
        });
    }
    ShrinkageTarget::new(
        format!("file:{}", file_stem(path)),
        m,
        Provenance::External {
            source: path.display().to_string(),
        },
    )
}

fn data_targets(paths: &[PathBuf], p: usize, center: bool) -> Result<Vec<ShrinkageTarget>> {
    paths
        .iter()
        .map(|path| external_target(&read_data_file(path)?, &file_stem(path), p, center))
        .collect()
}

/// Canonical kinds plus external matrices and auxiliary data sets.
fn assemble_targets(
    s: &SymMatrix,
    kinds: &[String],
    matrices: &[PathBuf],
    data: &[PathBuf],
    center: bool,
    warnings: &mut Vec<String>,
) -> Result<(TargetSet, Vec<TargetKind>)> {
    let p = s.dim();
    let kinds = parse_kinds(kinds)?;
    let mut targets = Vec::new();
    let mut excluded = Vec::new();
    if !kinds.is_empty() {
        let built = build_target_set(&kinds, s)?;
        warnings.extend(built.warnings);
        excluded = built.excluded;
        targets.extend(built.set.iter().cloned());
    }
    for path in matrices {
        targets.push(matrix_target(path, p)?);
    }
    targets.extend(data_targets(data, p, center)?);
    if !data.is_empty() {
        warnings.push("external targets from auxiliary data are shrinkage estimates, not raw covariances".into());
    }
    Ok((TargetSet::new(targets)?, excluded))
}

fn excluded_labels(excluded: &[TargetKind]) -> Vec<String> {
    excluded.iter().map(ToString::to_string).collect()
}

pub fn estimate(a: &EstimateArgs) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let mut info = RunInfo::new("estimate", a, None);
    let center = a.center.enabled();
    let x = read_data_file(&a.input)?;
    let labels = x.labels_or_default();
    let s = sample_covariance(&x, center)?;
    info.warnings.extend(s.warnings());
    let (set, excluded) = assemble_targets(
        &s.matrix,
        &a.targets,
        &a.external_target,
        &a.external_data,
        center,
        &mut info.warnings,
    )?;
    let grid = AlphaGrid::with_step(a.alpha_step)?;
    let table = posterior_grid(&s.matrix, s.n, &grid, &set)?;
    let est = tas_estimate(&table, &s.matrix, &set)?;
    let distances = target_distance_matrix(&set, &[("S".into(), s.matrix.clone())])?;
    info.finish(start, &a.output);

    let mut w = Writer::new(&a.output, &info)?;
    if a.output.wants(Format::Json) {
        let weights: Vec<_> = est
            .weights_by_label()
            .into_iter()
            .map(|(label, weight)| json!({ "label": label, "weight": weight }))
            .collect();
        w.json(
            "report.json",
            json!({
                "input": { "path": a.input, "p": x.p(), "n": x.n(), "centered": center, "labels": labels },
                "targets": set.iter().map(ShrinkageTarget::descriptor).collect::<Vec<_>>(),
                "excluded_targets": excluded_labels(&excluded),
                "target_weights": weights,
                "sample_weight": est.sample_weight,
                "alpha_grid": grid.values(),
                "log_ml": table.log_ml_rows(),
                "posterior": table.prob_rows(),
                "distance_matrix": distances,
                "likelihood": LIKELIHOOD_NOTE,
            }),
        )?;
    }
    if a.output.wants(Format::Csv) {
        w.matrix("sigma_hat.csv", &labels, &est.sigma_hat)?;
        let mut rows: Vec<Vec<String>> = est
            .weights_by_label()
            .into_iter()
            .map(|(label, weight)| vec![label, num(weight)])
            .collect();
        rows.push(vec!["S".into(), num(est.sample_weight)]);
        w.table("weights.csv", &["target", "weight"], &rows)?;
    }
    Ok(w.finish())
}

fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn targets(a: &TargetsArgs) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let mut info = RunInfo::new("targets", a, None);
    let center = a.center.enabled();
    let x = read_data_file(&a.input)?;
    let labels = x.labels_or_default();
    let s = sample_covariance(&x, center)?;
    info.warnings.extend(s.warnings());
    let (set, excluded) = assemble_targets(
        &s.matrix,
        &a.targets,
        &a.external_target,
        &a.external_data,
        center,
        &mut info.warnings,
    )?;
    let summary = summarise(&s.matrix);
    let distances = target_distance_matrix(&set, &[("S".into(), s.matrix.clone())])?;
    info.finish(start, &a.output);

    let mut w = Writer::new(&a.output, &info)?;
    if a.output.wants(Format::Json) {
        w.json(
            "targets.json",
            json!({
                "input": { "path": a.input, "p": x.p(), "n": x.n(), "centered": center },
                "mean_variance": summary.mean_variance,
                "mean_correlation": summary.mean_correlation,
                "targets": set.iter().map(ShrinkageTarget::descriptor).collect::<Vec<_>>(),
                "excluded_targets": excluded_labels(&excluded),
                "distance_matrix": distances,
            }),
        )?;
    }
    if a.output.wants(Format::Csv) {
        for t in &set {
            w.matrix(&format!("target_{}.csv", file_label(t.label())), &labels, t.matrix())?;
        }
        let rows: Vec<Vec<String>> = distances
            .labels
            .iter()
            .zip(&distances.values)
            .map(|(l, row)| std::iter::once(l.clone()).chain(row.iter().map(|v| num(*v))).collect())
            .collect();
        let header: Vec<&str> = std::iter::once("").chain(distances.labels.iter().map(String::as_str)).collect();
        w.table("distances.csv", &header, &rows)?;
    }
    Ok(w.finish())
}

/// Report JSON plus long-format PRIAL, loss and weight tables.
fn write_simulation(w: &mut Writer, report: &SimulationReport, formats: &crate::OutputArgs) -> Result<()> {
    if formats.wants(Format::Json) {
        w.json("report.json", json!({ "result": report }))?;
    }
    if formats.wants(Format::Csv) {
        let p = &report.prial;
        let rows: Vec<Vec<String>> = p
            .estimator_labels
            .iter()
            .zip(&p.prial)
            .map(|(l, v)| vec![l.clone(), num(*v)])
            .collect();
        w.table("prial.csv", &["estimator", "prial"], &rows)?;

        let rows: Vec<Vec<String>> = p
            .estimator_labels
            .iter()
            .zip(&p.losses)
            .flat_map(|(l, losses)| {
                losses
                    .iter()
                    .enumerate()
                    .map(move |(m, pair)| vec![l.clone(), m.to_string(), num(pair.sample), num(pair.estimator)])
            })
            .collect();
        w.table("losses.csv", &["estimator", "repetition", "loss_sample", "loss_estimator"], &rows)?;

        let mut rows = Vec::new();
        for dist in &report.weights {
            for (m, weights) in dist.per_repetition.iter().enumerate() {
                for (label, v) in dist.target_labels.iter().zip(weights) {
                    rows.push(vec![dist.estimator.clone(), m.to_string(), label.clone(), num(*v)]);
                }
                rows.push(vec![dist.estimator.clone(), m.to_string(), "S".into(), num(dist.sample_weight[m])]);
            }
        }
        w.table("weights.csv", &["estimator", "repetition", "target", "weight"], &rows)?;
    }
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let mut info = RunInfo::new("simulate", a, Some(a.seed));
    let id: Scenario = a.scenario.parse()?;
    let mut spec = ScenarioSpec::new(id, a.p)?;
    spec.params.s4_alpha = a.s4_alpha;
    spec.fresh_sigma = !a.fixed_sigma;
    let grid = AlphaGrid::with_step(a.alpha_step)?;
    let report = run_model_simulation(&spec, a.n, a.m, &EstimatorConfig::standard_set(), &grid, a.seed)?;
    info.warnings.extend(report.warnings.iter().cloned());
    info.finish(start, &a.output);
    let mut w = Writer::new(&a.output, &info)?;
    write_simulation(&mut w, &report, &a.output)?;
    Ok(w.finish())
}

pub fn partition(a: &PartitionArgs) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let mut info = RunInfo::new("partition", a, Some(a.seed));
    let center = a.center.enabled();
    let full = read_data_file(&a.input)?;
    let mut configs = EstimatorConfig::standard_set();
    if !a.external_data.is_empty() {
        configs.push(EstimatorConfig::Tas {
            label: "TAS-info".into(),
            kinds: TargetKind::ALL.to_vec(),
            external: data_targets(&a.external_data, full.p(), center)?,
        });
    }
    let grid = AlphaGrid::with_step(a.alpha_step)?;
    let report = data_partition_run(&full, a.n_small, a.m, &configs, &grid, a.seed, center)?;
    info.warnings.extend(report.warnings.iter().cloned());
    info.finish(start, &a.output);
    let mut w = Writer::new(&a.output, &info)?;
    write_simulation(&mut w, &report, &a.output)?;
    Ok(w.finish())
}

pub fn diagnose(a: &DiagnoseArgs) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let mut info = RunInfo::new("diagnose", a, Some(a.seed));
    let rows = mle_diagnostics(&a.p_list, &a.n_ratios, a.m, a.seed, a.center.enabled())?;
    info.finish(start, &a.output);
    let mut w = Writer::new(&a.output, &info)?;
    if a.output.wants(Format::Json) {
        w.json("diagnostics.json", json!({ "rows": rows }))?;
    }
    if a.output.wants(Format::Csv) {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.p.to_string(),
                    r.n.to_string(),
                    num(r.mean_frobenius_error),
                    r.mean_condition_number.map_or_else(|| "inf".into(), num),
                    num(r.singular_fraction),
                ]
            })
            .collect();
        w.table(
            "diagnostics.csv",
            &["p", "n", "mean_frobenius_error", "mean_condition_number", "singular_fraction"],
            &table,
        )?;
    }
    Ok(w.finish())
}

pub fn gridstudy(a: &GridStudyArgs) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let mut info = RunInfo::new("gridstudy", a, Some(a.seed));
    let setup = GridStudySetup {
        p: a.p,
        n: a.n,
        variance: a.variance,
    };
    let rows = grid_cardinality_study(&a.d, a.m, a.seed, &setup)?;
    info.finish(start, &a.output);
    let mut w = Writer::new(&a.output, &info)?;
    if a.output.wants(Format::Json) {
        w.json("gridstudy.json", json!({ "setup": setup, "rows": rows }))?;
    }
    if a.output.wants(Format::Csv) {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| vec![num(r.d), r.cardinality.to_string(), num(r.prial)])
            .collect();
        w.table("gridstudy.csv", &["d", "cardinality", "prial"], &table)?;
    }
    Ok(w.finish())
}
