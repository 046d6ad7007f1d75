use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::info;
use serde_json::json;

use crate::cohort::manifest::Cohort;
use crate::ecg::{EcgRecord, LEAD_NAMES};
use crate::error::{Error, Result};

use super::dtw::{dtw_matrix, DtwMatrix};
use super::features::{extract_features, per_lead_columns, PhenotypeFeatures, SCALAR_NAMES};
use super::zscore::zscores;

pub struct ScenarioFeatures {
    pub scenario: String,
    pub transmurality: String,
    pub features: PhenotypeFeatures,
}

pub struct AnalysisReport {
    pub mesh_id: String,
    pub dtw: DtwMatrix,
    pub scenarios: Vec<ScenarioFeatures>,
    pub replicates: Vec<PhenotypeFeatures>,
    /// `z[s][f]` for scenario `s` and scalar feature `f` ([`SCALAR_NAMES`]).
    pub z: Vec<Vec<Option<f64>>>,
}

impl AnalysisReport {
    /// Mean |z| of feature `f` over scenarios of one transmurality class,
    /// skipping NA entries; `None` when nothing is left.
    pub fn group_mean_abs_z(&self, f: usize, transmurality: &str) -> Option<f64> {
        let v: Vec<f64> = self
            .scenarios
            .iter()
            .zip(&self.z)
            .filter(|(s, _)| s.transmurality == transmurality)
            .filter_map(|(_, z)| z[f].map(f64::abs))
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn feature_index(name: &str) -> Option<usize> {
        SCALAR_NAMES.iter().position(|&n| n == name)
    }
}

/// DTW matrices, features and healthy-referenced z-scores for one mesh of
/// a cohort (the first mesh when `mesh_id` is `None`).
pub fn analyze_cohort(cohort: &Cohort, mesh_id: Option<&str>) -> Result<AnalysisReport> {
    let ids = cohort.mesh_ids();
    let id = match mesh_id {
        Some(m) if ids.iter().any(|i| i == m) => m.to_owned(),
        Some(m) => return Err(Error::Parameter(format!("mesh `{m}` is not in the cohort"))),
        None => ids.first().cloned().ok_or_else(|| Error::Validation("empty cohort".into()))?,
    };
    let records = cohort.scenario_records(&id)?;
    let rows: Vec<_> = cohort.samples.iter().filter(|r| r.mesh_id == id).collect();
    analyze_records(&id, &records, &rows.iter().map(|r| r.transmurality.clone()).collect::<Vec<_>>(), &cohort.replicate_records(&id)?)
}

pub fn analyze_records(
    mesh_id: &str,
    records: &[EcgRecord],
    transmurality: &[String],
    replicates: &[EcgRecord],
) -> Result<AnalysisReport> {
    let dtw = dtw_matrix(records)?;
    let scenarios = records
        .iter()
        .zip(transmurality)
        .map(|(r, t)| {
            let features = extract_features(r).map_err(|e| e.in_scenario(&r.scenario))?;
            Ok(ScenarioFeatures { scenario: r.scenario.clone(), transmurality: t.clone(), features })
        })
        .collect::<Result<Vec<_>>>()?;
    let replicates = replicates
        .iter()
        .map(|r| extract_features(r).map_err(|e| e.in_scenario("healthy replicate")))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<Vec<f64>> = scenarios.iter().map(|s| s.features.scalars().to_vec()).collect();
    let reps: Vec<Vec<f64>> = replicates.iter().map(|f| f.scalars().to_vec()).collect();
    let z = zscores(&xs, &reps)?;
    Ok(AnalysisReport { mesh_id: mesh_id.to_owned(), dtw, scenarios, replicates, z })
}

fn fmt(x: f64) -> String {
    format!("{x:.9e}")
}

fn matrix_csv(names: &[String], m: &[Vec<f64>]) -> String {
    let mut s = format!("scenario,{}\n", names.join(","));
    for (name, row) in names.iter().zip(m) {
        let cells: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        let _ = writeln!(s, "{name},{}", cells.join(","));
    }
    s
}

fn features_csv(report: &AnalysisReport) -> String {
    let mut s = format!(
        "scenario,transmurality,qrs_onset_ms,qrs_offset_ms,t_end_ms,{},{}\n",
        SCALAR_NAMES.join(","),
        per_lead_columns().join(",")
    );
    let mut row = |name: &str, tr: &str, f: &PhenotypeFeatures| {
        let mut cells = vec![name.to_owned(), tr.to_owned(), fmt(f.qrs_onset_ms), fmt(f.qrs_offset_ms), fmt(f.t_end_ms)];
        cells.extend(f.scalars().iter().map(|&v| fmt(v)));
        cells.extend(f.r_amplitude.iter().chain(&f.st_amplitude).chain(&f.t_amplitude).map(|&v| fmt(v)));
        s.push_str(&cells.join(","));
        s.push('\n');
    };
    for sf in &report.scenarios {
        row(&sf.scenario, &sf.transmurality, &sf.features);
    }
    for (k, f) in report.replicates.iter().enumerate() {
        row(&format!("healthy_r{k}"), "replicate", f);
    }
    s
}

fn zscores_csv(report: &AnalysisReport) -> String {
    let mut s = format!("scenario,transmurality,{}\n", SCALAR_NAMES.join(","));
    for (sf, z) in report.scenarios.iter().zip(&report.z) {
        let cells: Vec<String> = z.iter().map(|v| v.map_or_else(|| "NA".to_owned(), fmt)).collect();
        let _ = writeln!(s, "{},{},{}", sf.scenario, sf.transmurality, cells.join(","));
    }
    s
}

/// Heatmap of a row/column-labelled table; `None` cells are grey.
/// `diverging` centres the colour scale on zero.
pub fn heatmap_svg(title: &str, rows: &[String], cols: &[String], values: &[Vec<Option<f64>>], diverging: bool) -> String {
    let cell = 22.0;
    let left = 10.0 + 7.0 * rows.iter().map(|r| r.len()).max().unwrap_or(0) as f64;
    let top = 40.0 + 7.0 * cols.iter().map(|c| c.len()).max().unwrap_or(0) as f64;
    let w = left + cell * cols.len() as f64 + 20.0;
    let h = top + cell * rows.len() as f64 + 20.0;
    let finite = values.iter().flatten().flatten().copied();
    let scale = if diverging {
        finite.fold(0.0, |m: f64, v| m.max(v.abs())).max(1e-12)
    } else {
        finite.fold(0.0, f64::max).max(1e-12)
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" font-family="monospace" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="10" y="16" font-size="13">{title}</text>"#);
    for (j, c) in cols.iter().enumerate() {
        let x = left + cell * (j as f64 + 0.6);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" transform="rotate(-90 {x:.1} {:.1})">{c}</text>"#, top - 4.0, top - 4.0);
    }
    for (i, (r, vals)) in rows.iter().zip(values).enumerate() {
        let y = top + cell * i as f64;
        let _ = writeln!(s, r#"<text x="4" y="{:.1}">{r}</text>"#, y + cell * 0.7);
        for (j, v) in vals.iter().enumerate() {
            let fill = match v {
                None => "#bbbbbb".to_owned(),
                Some(v) if diverging => {
                    let t = (v / scale).clamp(-1.0, 1.0);
                    let (r, g, b) = if t >= 0.0 {
                        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
                    } else {
                        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
                    };
                    format!("rgb({:.0},{:.0},{:.0})", r, g, b)
                }
                Some(v) => {
                    let t = (v / scale).clamp(0.0, 1.0);
                    format!("rgb({:.0},{:.0},{:.0})", 255.0 * (1.0 - 0.8 * t), 255.0 * (1.0 - 0.6 * t), 255.0 * (1.0 - 0.2 * t))
                }
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{y:.1}" width="{cell}" height="{cell}" fill="{fill}" stroke="white"/>"#,
                left + cell * j as f64
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn wrap(m: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    m.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect()
}

/// Writes the CSV tables, heatmaps and a metadata file into `out`.
pub fn write_report(report: &AnalysisReport, out: &Path, config_json: &str) -> Result<()> {
    fs::create_dir_all(out)?;
    let names = &report.dtw.names;
    fs::write(out.join("dtw_max.csv"), matrix_csv(names, &report.dtw.max))?;
    fs::write(out.join("dtw_avg.csv"), matrix_csv(names, &report.dtw.avg))?;
    fs::write(out.join("features.csv"), features_csv(report))?;
    fs::write(out.join("zscores.csv"), zscores_csv(report))?;
    fs::write(out.join("dtw_max.svg"), heatmap_svg("max DTW over leads", names, names, &wrap(&report.dtw.max), false))?;
    fs::write(out.join("dtw_avg.svg"), heatmap_svg("mean DTW over leads", names, names, &wrap(&report.dtw.avg), false))?;
    let cols: Vec<String> = SCALAR_NAMES.iter().map(|s| s.to_string()).collect();
    fs::write(out.join("zscores.svg"), heatmap_svg("z vs healthy replicates", names, &cols, &report.z, true))?;
    let meta = json!({
        "mesh_id": report.mesh_id,
        "leads": LEAD_NAMES,
        "lead_amplitudes": "normalized by the per-record global max |value|; DTW magnitudes are in these units",
        "dtw_step_pattern": "symmetric, absolute-difference cost, no window",
        "healthy_replicates": report.replicates.len(),
        "config": serde_json::from_str::<serde_json::Value>(config_json).unwrap_or(serde_json::Value::Null),
    });
    fs::write(out.join("analysis.json"), serde_json::to_string_pretty(&meta).unwrap() + "\n")?;
    Ok(())
}

/// `analyze_cohort` followed by `write_report`.
pub fn analyze(cohort_dir: &Path, out: &Path, mesh_id: Option<&str>) -> Result<AnalysisReport> {
    let cohort = Cohort::open(cohort_dir)?;
    let report = analyze_cohort(&cohort, mesh_id)?;
    write_report(&report, out, &cohort.config.to_json())?;
    info!("analysis of {} written to {}", report.mesh_id, out.display());
    Ok(report)
}
