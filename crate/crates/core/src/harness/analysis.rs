use std::path::Path;
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::CampaignConfig;
use super::store::EnsembleStore;
use crate::conjugation::{conjugated_ensemble_with, depolarize};
use crate::error::{Error, Result};
use crate::quantum::{
    average_density_matrix, best_subspace_by, build_mubs, postselect_state, CrosstalkMatrix, EncodingSubspace,
    KeyRateResult, MUBSet,
};

/// Ensembles below this size give a warning during analysis.
pub const MIN_RECOMMENDED_REALIZATIONS: usize = 100;

/// One analysed operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub satellite_altitude: f64,
    pub zenith_angle: f64,
    pub ground_altitude: f64,
    pub aperture_radius: f64,
    pub d: usize,
    pub subspace: EncodingSubspace,
    pub misalignment: f64,
    pub infidelity: f64,
    pub conjugated: bool,
    pub q: f64,
    /// Survival fraction (T′ when conjugated).
    pub t: f64,
    pub k1: Option<f64>,
    pub k: Option<f64>,
    pub realizations: usize,
    pub wall_time_s: f64,
}

/// JSON mirror of an analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: CampaignConfig,
    pub records: Vec<ResultRecord>,
}

/// Receiver noise applied to an ensemble before evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePoint {
    pub misalignment: f64,
    pub infidelity: f64,
    pub conjugated: bool,
    /// Build filters from the misaligned channel rather than the true one.
    pub filter_from_misaligned: bool,
}

/// Key rate of one subspace under one noise point. `aligned` holds the
/// true channels and `observed` the channels after misalignment (the same
/// slice when there is none).
pub fn evaluate_noise_point(
    aligned: &[CrosstalkMatrix],
    observed: &[CrosstalkMatrix],
    subspace: &EncodingSubspace,
    mubs: &MUBSet,
    noise: &NoisePoint,
) -> Result<KeyRateResult> {
    let restrict = |set: &[CrosstalkMatrix]| set.iter().map(|c| c.restrict(subspace)).collect::<Result<Vec<_>>>();
    let actual = restrict(observed)?;
    let rho = if noise.conjugated {
        let reference = if noise.filter_from_misaligned {
            actual.clone()
        } else {
            restrict(aligned)?
        };
        conjugated_ensemble_with(&reference, &actual)?.0
    } else {
        let states: Vec<_> = actual.iter().map(postselect_state).collect();
        average_density_matrix(&states)?
    };
    let rho = depolarize(&rho, noise.infidelity)?;
    KeyRateResult::from_state(&rho, mubs)
}

struct Task {
    geometry_index: usize,
    aperture_radius: f64,
    d: usize,
}

/// Evaluates every configured dimension and noise point for every
/// geometry and aperture in the store. The store is only read.
pub fn analyze(store: &EnsembleStore, config: &CampaignConfig) -> Result<Vec<ResultRecord>> {
    let geometries = config.geometries()?;
    let mut tasks = Vec::new();
    for g in store.geometry_indices() {
        if g >= geometries.len() {
            return Err(Error::Store(format!("store holds geometry {g} not present in the configuration")));
        }
        for &r in &config.optics.aperture_radii {
            for &d in &config.analysis.dimensions {
                tasks.push(Task {
                    geometry_index: g,
                    aperture_radius: r,
                    d,
                });
            }
        }
    }
    #[cfg(feature = "parallel")]
    let chunks: Vec<Result<Vec<ResultRecord>>> = tasks.par_iter().map(|t| analyze_task(store, config, t)).collect();
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Result<Vec<ResultRecord>>> = tasks.iter().map(|t| analyze_task(store, config, t)).collect();
    let mut out = Vec::new();
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

fn analyze_task(store: &EnsembleStore, config: &CampaignConfig, task: &Task) -> Result<Vec<ResultRecord>> {
    let recs = store.geometry_records(task.geometry_index);
    let first = recs.first().ok_or(Error::DegenerateEnsemble)?;
    if recs.len() < MIN_RECOMMENDED_REALIZATIONS {
        log::warn!(
            "geometry {} has only {} realizations; statistics will be poor",
            task.geometry_index,
            recs.len()
        );
    }
    let aligned = store.ensemble(task.geometry_index, task.aperture_radius, 0.0)?;
    let mubs = build_mubs(task.d)?;
    let fixed = config.fixed_subspace(task.d);
    let mut out = Vec::new();
    for &m in &config.analysis.misalignments {
        let shifted;
        let observed: &[CrosstalkMatrix] = if m == 0.0 {
            &aligned
        } else {
            shifted = store.ensemble(task.geometry_index, task.aperture_radius, m)?;
            &shifted
        };
        for &infidelity in &config.analysis.infidelities {
            for &conjugated in config.analysis.conjugation.variants() {
                let start = Instant::now();
                let noise = NoisePoint {
                    misalignment: m,
                    infidelity,
                    conjugated,
                    filter_from_misaligned: config.analysis.filter_from_misaligned,
                };
                let eval = |sub: &EncodingSubspace| evaluate_noise_point(&aligned, observed, sub, &mubs, &noise);
                let outcome = match &fixed {
                    Some(sub) => eval(sub).map(|r| (sub.clone(), r)),
                    None => best_subspace_by(task.d, eval),
                };
                let (subspace, result) = match outcome {
                    Ok(v) => v,
                    Err(Error::DegenerateEnsemble) => {
                        log::warn!("no photon survives at d={} r_a={}; point skipped", task.d, task.aperture_radius);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                out.push(ResultRecord {
                    satellite_altitude: first.satellite_altitude,
                    zenith_angle: first.zenith_angle,
                    ground_altitude: first.ground_altitude,
                    aperture_radius: task.aperture_radius,
                    d: task.d,
                    subspace,
                    misalignment: m,
                    infidelity,
                    conjugated,
                    q: result.q,
                    t: result.t,
                    k1: result.k1,
                    k: result.k,
                    realizations: recs.len(),
                    wall_time_s: start.elapsed().as_secs_f64(),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct CsvRow {
    satellite_altitude: f64,
    zenith_angle: f64,
    ground_altitude: f64,
    aperture_radius: f64,
    d: usize,
    subspace: String,
    misalignment: f64,
    infidelity: f64,
    conjugated: bool,
    q: f64,
    t: f64,
    k1: Option<f64>,
    k: Option<f64>,
    realizations: usize,
    wall_time_s: f64,
}

/// Writes one row per record with a header line.
pub fn write_csv<W: std::io::Write>(records: &[ResultRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(CsvRow {
            satellite_altitude: r.satellite_altitude,
            zenith_angle: r.zenith_angle,
            ground_altitude: r.ground_altitude,
            aperture_radius: r.aperture_radius,
            d: r.d,
            subspace: r.subspace.ls().iter().map(i32::to_string).collect::<Vec<_>>().join(" "),
            misalignment: r.misalignment,
            infidelity: r.infidelity,
            conjugated: r.conjugated,
            q: r.q,
            t: r.t,
            k1: r.k1,
            k: r.k,
            realizations: r.realizations,
            wall_time_s: r.wall_time_s,
        })
        .map_err(|e| Error::Store(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    write_csv(records, std::fs::File::create(path)?)
}

pub fn write_report(report: &AnalysisReport, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<AnalysisReport> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
