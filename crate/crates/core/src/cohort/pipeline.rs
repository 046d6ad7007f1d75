use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use log::{debug, warn};
use sha2::{Digest, Sha256};

use crate::activation::fim::{solve_eikonal_with_tol, ActivationMap, RootSet};
use crate::activation::roots::{default_root_set, jitter_root_times};
use crate::activation::build_velocity_tensor;
use crate::config::RunConfig;
use crate::ecg::leads::leads_at;
use crate::ecg::potentials::LeadField;
use crate::ecg::{normalize_and_resample, EcgRecord};
use crate::error::{Error, Result};
use crate::geometry::coords::{compute_ventricular_coordinates, VentricularCoords};
use crate::geometry::electrodes::{place_electrodes, ElectrodeSet};
use crate::geometry::fibers::{assign_fibers, FiberField};
use crate::geometry::mesh::Mesh;
use crate::infarct::catalog::{Scenario, HEALTHY};
use crate::infarct::noise::correlated_noise_field;
use crate::infarct::{scenario_tissue, TissueMap};
use crate::io::Annotated;
use crate::reaction::apd::apd_field;
use crate::reaction::cell::CalibrationTable;
use crate::reaction::simulate::{sample_count, simulate_stream, tau_close_field};

use super::sample::{CohortSample, SampleMeta, X_COLUMNS};
use super::sampling::subsample_nodes;

pub const NODE_SAMPLING: &str = "farthest_point";

/// 64-bit seed derived from a base seed and a label.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(label.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

type NoiseKey = (u64, u64);

/// One mesh with everything that does not depend on the scenario.
pub struct Heart {
    pub mesh_id: String,
    pub mesh: Mesh,
    pub coords: VentricularCoords,
    pub fibers: FiberField,
    pub electrodes: ElectrodeSet,
    pub roots: RootSet,
    pub config: RunConfig,
    pub lead_field: LeadField,
    /// Covers the APD range including border-zone prolongation.
    pub table: CalibrationTable,
    noise: Mutex<BTreeMap<NoiseKey, Arc<OnceLock<Result<Vec<f64>, String>>>>>,
}

/// Everything one scenario run produces.
pub struct ScenarioRun {
    pub tissue: TissueMap,
    pub activation: ActivationMap,
    /// Leads at the reaction record period, before normalization.
    pub raw: EcgRecord,
    pub ecg: EcgRecord,
    pub degenerate: bool,
}

impl Heart {
    /// Fills in whatever the annotated mesh lacks: coordinates, fibers
    /// (config helix angles) and electrodes (config, file, then automatic).
    pub fn prepare(mesh_id: &str, annotated: Annotated, config: &RunConfig) -> Result<Heart> {
        config.check()?;
        let mesh = annotated.mesh;
        let coords = compute_ventricular_coordinates(&mesh)?;
        let fibers = match annotated.fibers {
            Some(f) if f.triads.len() == mesh.tet_count() => f,
            _ => assign_fibers(&mesh, &coords, config.fibers.alpha_endo, config.fibers.alpha_epi)?,
        };
        let electrodes = config
            .electrodes
            .clone()
            .or(annotated.electrodes)
            .unwrap_or_else(|| place_electrodes(&mesh));
        let roots = default_root_set(&coords)?;
        let apd = &config.apd;
        let table = CalibrationTable::build(
            apd.apd_min,
            apd.apd_max * apd.bz_apd_factor,
            CalibrationTable::DEFAULT_STEP,
            &config.reaction,
        )?;
        let lead_field = LeadField::new(&mesh, &electrodes)?;
        Ok(Heart {
            mesh_id: mesh_id.to_owned(),
            mesh,
            coords,
            fibers,
            electrodes,
            roots,
            config: config.clone(),
            lead_field,
            table,
            noise: Mutex::new(BTreeMap::new()),
        })
    }

    /// Exported node subset (ascending), seeded per mesh.
    pub fn sample_nodes(&self) -> Result<Vec<usize>> {
        subsample_nodes(&self.mesh, self.config.cohort.nodes, derive_seed(self.config.cohort.seed, &self.mesh_id))
    }

    fn noise(&self, sigma: f64, seed: u64) -> Result<Vec<f64>> {
        let cell = self.noise.lock().unwrap().entry((sigma.to_bits(), seed)).or_default().clone();
        cell.get_or_init(|| correlated_noise_field(&self.mesh, sigma, seed).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Parameter)
    }

    /// Scar and border zone for a scenario; `true` when the scar came out
    /// empty.
    pub fn tissue(&self, scenario: &Scenario) -> Result<(TissueMap, bool)> {
        let Some(p) = &scenario.scar else {
            return Ok((TissueMap::healthy(self.mesh.node_count()), false));
        };
        scenario_tissue(&self.mesh, &self.coords, &self.noise(p.sigma, p.seed)?, p)
    }

    pub fn activate(&self, tissue: &TissueMap, roots: &RootSet) -> Result<ActivationMap> {
        let tensors = build_velocity_tensor(&self.mesh, &self.fibers, tissue, &self.config.conduction)?;
        let map = solve_eikonal_with_tol(&self.mesh, &tensors, roots, self.config.eikonal.tol_ms)?;
        let unreached = map.unreached();
        if !unreached.is_empty() {
            return Err(Error::Validation(format!(
                "{} nodes were never activated (first: {})",
                unreached.len(),
                unreached[0]
            )));
        }
        Ok(map)
    }

    /// Streams the reaction model straight into the lead field, so full
    /// voltage traces are never held in memory.
    pub fn leads(&self, tissue: &TissueMap, activation: &ActivationMap) -> Result<EcgRecord> {
        let apd = apd_field(&self.coords, tissue, &self.config.apd)?;
        let tau = tau_close_field(&apd, &self.table);
        let p = &self.config.reaction;
        let mut leads = vec![Vec::with_capacity(sample_count(p)); 8];
        simulate_stream(&activation.t_a, &tau, p, |_, u| {
            for (l, v) in leads.iter_mut().zip(leads_at(&self.lead_field.potentials(u))) {
                l.push(v);
            }
            Ok(())
        })?;
        Ok(EcgRecord {
            leads,
            sample_period: p.record_period(),
            scenario: String::new(),
            seed: 0,
            meta: BTreeMap::new(),
        })
    }

    fn run(&self, scenario: &Scenario, roots: &RootSet, seed: u64) -> Result<ScenarioRun> {
        let (tissue, degenerate) = self.tissue(scenario)?;
        if degenerate {
            warn!("{}: scenario `{}` produced no scar", self.mesh_id, scenario.name);
        }
        let activation = self.activate(&tissue, roots)?;
        debug!("{}: `{}` activated by {:.1} ms", self.mesh_id, scenario.name, activation.max_finite());
        let mut raw = self.leads(&tissue, &activation)?;
        raw.scenario = scenario.name.clone();
        raw.seed = seed;
        let mut ecg = normalize_and_resample(&raw, self.config.cohort.samples)?;
        ecg.meta.insert("mesh_id".into(), self.mesh_id.clone());
        ecg.meta.insert("config".into(), self.config.to_json());
        Ok(ScenarioRun { tissue, activation, raw, ecg, degenerate })
    }

    /// Full forward run of one scenario; `seed` drives the scar noise.
    pub fn run_scenario(&self, scenario: &Scenario, seed: u64) -> Result<ScenarioRun> {
        self.run(&scenario.with_seed(seed), &self.roots, seed).map_err(|e| e.in_scenario(&scenario.name))
    }

    /// Healthy control with root onset times jittered by the configured
    /// amount; `seed` drives the jitter.
    pub fn run_replicate(&self, seed: u64) -> Result<ScenarioRun> {
        let roots = jitter_root_times(&self.roots, self.config.cohort.root_jitter_ms, seed);
        let healthy = Scenario { name: HEALTHY.into(), location: None, transmurality: None, scar: None };
        self.run(&healthy, &roots, seed).map_err(|e| e.in_scenario("healthy replicate"))
    }

    /// Assembles the exported (X, S, Y) triple from a run.
    pub fn assemble(&self, scenario: &Scenario, seed: u64, run: &ScenarioRun, sampled: &[usize]) -> CohortSample {
        let mut x = Vec::with_capacity(sampled.len() * X_COLUMNS);
        for &i in sampled {
            let p = self.mesh.nodes[i];
            let c = self.coords.row(i);
            x.extend(p.iter().chain(&c).map(|&v| v as f32));
        }
        let t = run.ecg.len();
        let mut s = Vec::with_capacity(t * 8);
        for k in 0..t {
            s.extend(run.ecg.leads.iter().map(|l| l[k] as f32));
        }
        let y = sampled.iter().map(|&i| run.tissue.labels[i] as u8).collect();
        CohortSample {
            meta: SampleMeta {
                mesh_id: self.mesh_id.clone(),
                scenario: scenario.name.clone(),
                transmurality: scenario.transmurality_name().into(),
                seed,
                nodes: sampled.len(),
                samples: t,
                sample_period_ms: run.ecg.sample_period,
                leads: crate::ecg::LEAD_NAMES.iter().map(|s| s.to_string()).collect(),
                node_sampling: NODE_SAMPLING.into(),
                normalization: run.ecg.meta.get("normalization").cloned().unwrap_or_default(),
                degenerate: run.degenerate,
                config: self.config.to_json(),
            },
            x,
            s,
            y,
        }
    }
}
