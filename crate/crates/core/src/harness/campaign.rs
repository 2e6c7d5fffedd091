use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::config::CampaignConfig;
use super::store::{ChannelRecord, EnsembleStore, RealizationRecord};
use crate::conjugation::apply_misalignment;
use crate::error::Result;
use crate::optics::ComplexField;
use crate::propagation::{ChannelRealizationSpec, ChannelSimulator};
use crate::quantum::{EncodingSubspace, ReceiverBasis, ALL_MODES};
use crate::seeding::derive_seed;
use crate::turbulence::{partition_slabs, ChannelGeometry, SlabPartition};

/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "OAMQKD_THREADS";

/// Seed of realization `realization` at geometry point `geometry_index`.
pub fn realization_seed(master_seed: u64, geometry_index: usize, realization: usize) -> u64 {
    derive_seed(&[master_seed, geometry_index as u64, realization as u64])
}

/// Runs `f` on a pool sized by [`THREADS_ENV`] when it is set.
pub fn with_configured_threads<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(f);
        }
    }
    f()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CampaignSummary {
    pub written: usize,
    pub skipped: usize,
}

/// Per-geometry machinery shared by every realization at that point.
pub struct GeometryContext<'a> {
    config: &'a CampaignConfig,
    pub index: usize,
    pub geometry: ChannelGeometry,
    pub partition: SlabPartition,
    simulator: &'a ChannelSimulator,
    receivers: Vec<ReceiverBasis>,
    misalignments: Vec<f64>,
}

impl<'a> GeometryContext<'a> {
    pub fn new(
        config: &'a CampaignConfig,
        simulator: &'a ChannelSimulator,
        index: usize,
        geometry: ChannelGeometry,
    ) -> Result<Self> {
        let beam = config.beam()?;
        let partition = partition_slabs(&geometry, &config.profile()?, beam.lambda)?;
        let z = geometry.path_length();
        let receivers = config
            .optics
            .aperture_radii
            .iter()
            .map(|&r| ReceiverBasis::new(&ALL_MODES, &simulator.grid(), z, &beam, r))
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            index,
            geometry,
            partition,
            simulator,
            receivers,
            misalignments: config.stored_misalignments(),
        })
    }

    pub fn spec(&self, realization: usize) -> Result<ChannelRealizationSpec> {
        Ok(ChannelRealizationSpec {
            geometry: self.geometry,
            partition: self.partition.clone(),
            profile: self.config.profile()?,
            beam: self.config.beam()?,
            seed: realization_seed(self.config.monte_carlo.master_seed, self.index, realization),
            turbulent: self.config.numerics.turbulent,
        })
    }

    /// Propagates all nine modes and records crosstalk for every aperture
    /// radius and misalignment.
    pub fn simulate(&self, realization: usize) -> Result<RealizationRecord> {
        let spec = self.spec(realization)?;
        let received = self.simulator.propagate_modes(&ALL_MODES, &spec)?;
        let full = EncodingSubspace::full();
        let mut channels = Vec::new();
        for &m in &self.misalignments {
            let fields: BTreeMap<i32, ComplexField> = if m == 0.0 {
                received.clone()
            } else {
                received
                    .iter()
                    .map(|(&l, f)| Ok((l, apply_misalignment(f, m, self.config.analysis.misalignment_direction)?)))
                    .collect::<Result<_>>()?
            };
            for rx in &self.receivers {
                let c = rx.crosstalk(&fields, &full)?;
                channels.push(ChannelRecord::from_matrix(rx.aperture_radius(), m, &c));
            }
        }
        channels.sort_by(|a, b| {
            a.aperture_radius
                .total_cmp(&b.aperture_radius)
                .then(a.misalignment.total_cmp(&b.misalignment))
        });
        Ok(RealizationRecord {
            geometry_index: self.index,
            realization,
            seed: spec.seed,
            satellite_altitude: self.geometry.satellite_altitude,
            zenith_angle: self.geometry.zenith_angle,
            ground_altitude: self.geometry.ground_altitude,
            channels,
        })
    }
}

pub fn build_simulator(config: &CampaignConfig) -> Result<ChannelSimulator> {
    Ok(ChannelSimulator::new(
        config.grid()?,
        config.beam()?,
        &config.profile()?,
        config.numerics.subharmonic_orders,
        config.numerics.absorber,
    ))
}

/// Fills the store at `store_path` with every (geometry, realization) the
/// configuration calls for, skipping records already present. Records are
/// computed in parallel batches and written in index order, so the file is
/// identical whatever the worker count or interruption history.
pub fn run_campaign(config: &CampaignConfig, store_path: &Path) -> Result<CampaignSummary> {
    config.validate()?;
    let mut store = EnsembleStore::create_or_resume(store_path, config)?;
    let simulator = build_simulator(config)?;
    let mut summary = CampaignSummary { written: 0, skipped: 0 };
    let batch = batch_size();
    for (index, geometry) in config.geometries()?.into_iter().enumerate() {
        let pending: Vec<usize> = (0..config.monte_carlo.realizations)
            .filter(|&r| !store.contains(index, r))
            .collect();
        summary.skipped += config.monte_carlo.realizations - pending.len();
        if pending.is_empty() {
            continue;
        }
        let ctx = GeometryContext::new(config, &simulator, index, geometry)?;
        log::info!(
            "geometry {index}: H={} m, theta={:.4} rad, {} slabs, {} realizations to run",
            geometry.satellite_altitude,
            geometry.zenith_angle,
            ctx.partition.len(),
            pending.len()
        );
        for chunk in pending.chunks(batch) {
            let start = Instant::now();
            let records = simulate_batch(&ctx, chunk)?;
            summary.written += records.len();
            store.append(records)?;
            log::info!(
                "geometry {index}: realizations {}..={} in {:.1} s",
                chunk[0],
                chunk[chunk.len() - 1],
                start.elapsed().as_secs_f64()
            );
        }
    }
    Ok(summary)
}

#[cfg(feature = "parallel")]
fn batch_size() -> usize {
    rayon::current_num_threads().max(1)
}

#[cfg(not(feature = "parallel"))]
fn batch_size() -> usize {
    1
}

#[cfg(feature = "parallel")]
fn simulate_batch(ctx: &GeometryContext<'_>, chunk: &[usize]) -> Result<Vec<RealizationRecord>> {
    chunk.par_iter().map(|&r| ctx.simulate(r)).collect()
}

#[cfg(not(feature = "parallel"))]
fn simulate_batch(ctx: &GeometryContext<'_>, chunk: &[usize]) -> Result<Vec<RealizationRecord>> {
    chunk.iter().map(|&r| ctx.simulate(r)).collect()
}
