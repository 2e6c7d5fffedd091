//! JSON-lines ensemble store: a header line identifying the physics that
//! produced the data, then one line per (geometry, realization).

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{CampaignConfig, GeometryConfig, NumericsConfig, OpticsConfig, TurbulenceConfig};
use crate::error::{Error, Result};
use crate::quantum::{CMatrix, CrosstalkMatrix, EncodingSubspace, ALL_MODES};

pub const STORE_FORMAT: &str = "oamqkd-ensemble/1";

/// Tolerance when matching stored aperture radii and misalignments.
const KEY_TOL: f64 = 1e-12;

/// Everything that determines the stored records. The realization count
/// is excluded so an ensemble can be extended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreKey {
    pub geometry: GeometryConfig,
    pub optics: OpticsConfig,
    pub turbulence: TurbulenceConfig,
    pub numerics: NumericsConfig,
    pub master_seed: u64,
    pub misalignments: Vec<f64>,
    pub misalignment_direction: f64,
}

impl StoreKey {
    pub fn from_config(config: &CampaignConfig) -> Self {
        Self {
            geometry: config.geometry.clone(),
            optics: config.optics.clone(),
            turbulence: config.turbulence.clone(),
            numerics: config.numerics.clone(),
            master_seed: config.monte_carlo.master_seed,
            misalignments: config.stored_misalignments(),
            misalignment_direction: config.analysis.misalignment_direction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreHeader {
    pub format: String,
    pub key: StoreKey,
}

/// Crosstalk over all nine modes for one receiver setting, row-major with
/// rows indexing the received mode and columns the sent mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub aperture_radius: f64,
    pub misalignment: f64,
    pub crosstalk: Vec<[f64; 2]>,
}

impl ChannelRecord {
    pub fn from_matrix(aperture_radius: f64, misalignment: f64, c: &CrosstalkMatrix) -> Self {
        let m = c.matrix();
        let crosstalk = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| [m[(i, j)].re, m[(i, j)].im]))
            .collect();
        Self {
            aperture_radius,
            misalignment,
            crosstalk,
        }
    }

    pub fn to_matrix(&self) -> Result<CrosstalkMatrix> {
        let d = ALL_MODES.len();
        if self.crosstalk.len() != d * d {
            return Err(Error::Store(format!("expected {} crosstalk entries, found {}", d * d, self.crosstalk.len())));
        }
        let m = CMatrix::from_fn(d, d, |i, j| {
            let [re, im] = self.crosstalk[i * d + j];
            Complex64::new(re, im)
        });
        CrosstalkMatrix::new(EncodingSubspace::full(), m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub geometry_index: usize,
    pub realization: usize,
    pub seed: u64,
    pub satellite_altitude: f64,
    pub zenith_angle: f64,
    pub ground_altitude: f64,
    pub channels: Vec<ChannelRecord>,
}

impl RealizationRecord {
    pub fn channel(&self, aperture_radius: f64, misalignment: f64) -> Option<&ChannelRecord> {
        self.channels.iter().find(|c| {
            (c.aperture_radius - aperture_radius).abs() < KEY_TOL && (c.misalignment - misalignment).abs() < KEY_TOL
        })
    }
}

#[derive(Debug)]
pub struct EnsembleStore {
    path: PathBuf,
    header: StoreHeader,
    records: Vec<RealizationRecord>,
    done: BTreeSet<(usize, usize)>,
}

fn parse_lines(path: &Path) -> Result<(Option<StoreHeader>, Vec<RealizationRecord>, u64)> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = None;
    let mut records = Vec::new();
    let mut valid_len = 0u64;
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 {
            break;
        }
        if !line.ends_with('\n') {
            // A write was interrupted; the partial line is discarded.
            log::warn!("discarding truncated final line of {}", path.display());
            break;
        }
        let text = line.trim_end();
        if header.is_none() {
            let h: StoreHeader =
                serde_json::from_str(text).map_err(|e| Error::Store(format!("bad store header: {e}")))?;
            if h.format != STORE_FORMAT {
                return Err(Error::Store(format!("unsupported store format {}", h.format)));
            }
            header = Some(h);
        } else {
            let rec: RealizationRecord = serde_json::from_str(text)
                .map_err(|e| Error::Store(format!("bad record after byte {valid_len}: {e}")))?;
            records.push(rec);
        }
        valid_len += n as u64;
    }
    Ok((header, records, valid_len))
}

impl EnsembleStore {
    /// Opens an existing store read-only.
    pub fn open(path: &Path) -> Result<Self> {
        let (header, records, _) = parse_lines(path)?;
        let header = header.ok_or_else(|| Error::Store(format!("{} is empty", path.display())))?;
        Ok(Self::assemble(path, header, records))
    }

    /// Opens `path` for appending, creating it if needed. An existing store
    /// must have been produced by the same physics and master seed; a
    /// truncated final line is removed.
    pub fn create_or_resume(path: &Path, config: &CampaignConfig) -> Result<Self> {
        let wanted = StoreHeader {
            format: STORE_FORMAT.to_string(),
            key: StoreKey::from_config(config),
        };
        if path.exists() && std::fs::metadata(path)?.len() > 0 {
            let (header, records, valid_len) = parse_lines(path)?;
            if let Some(header) = header {
                if header != wanted {
                    return Err(Error::Store(format!(
                        "{} was produced by a different configuration or master seed",
                        path.display()
                    )));
                }
                OpenOptions::new().write(true).open(path)?.set_len(valid_len)?;
                return Ok(Self::assemble(path, header, records));
            }
        }
        let mut file = File::create(path)?;
        writeln!(file, "{}", serde_json::to_string(&wanted)?)?;
        file.sync_data()?;
        Ok(Self::assemble(path, wanted, Vec::new()))
    }

    fn assemble(path: &Path, header: StoreHeader, records: Vec<RealizationRecord>) -> Self {
        let done = records.iter().map(|r| (r.geometry_index, r.realization)).collect();
        Self {
            path: path.to_path_buf(),
            header,
            records,
            done,
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn header(&self) -> &StoreHeader {
        &self.header
    }

    pub fn records(&self) -> &[RealizationRecord] {
        &self.records
    }

    pub fn contains(&self, geometry_index: usize, realization: usize) -> bool {
        self.done.contains(&(geometry_index, realization))
    }

    /// Appends records in order and flushes them to disk.
    pub fn append(&mut self, new: Vec<RealizationRecord>) -> Result<()> {
        let mut file = OpenOptions::new().append(true).open(&self.path)?;
        let mut buf = String::new();
        for rec in &new {
            buf.push_str(&serde_json::to_string(rec)?);
            buf.push('\n');
        }
        file.write_all(buf.as_bytes())?;
        file.sync_data()?;
        for rec in new {
            self.done.insert((rec.geometry_index, rec.realization));
            self.records.push(rec);
        }
        Ok(())
    }

    pub fn geometry_indices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.records.iter().map(|r| r.geometry_index).collect();
        set.into_iter().collect()
    }

    /// Records of one geometry point sorted by realization index.
    pub fn geometry_records(&self, geometry_index: usize) -> Vec<&RealizationRecord> {
        let mut recs: Vec<&RealizationRecord> =
            self.records.iter().filter(|r| r.geometry_index == geometry_index).collect();
        recs.sort_by_key(|r| r.realization);
        recs
    }

    /// Full 9×9 crosstalk ensemble for one geometry and receiver setting,
    /// ordered by realization index.
    pub fn ensemble(&self, geometry_index: usize, aperture_radius: f64, misalignment: f64) -> Result<Vec<CrosstalkMatrix>> {
        self.geometry_records(geometry_index)
            .into_iter()
            .map(|r| {
                r.channel(aperture_radius, misalignment)
                    .ok_or_else(|| {
                        Error::Store(format!(
                            "realization {} of geometry {geometry_index} has no channel for r_a={aperture_radius}, misalignment={misalignment}",
                            r.realization
                        ))
                    })?
                    .to_matrix()
            })
            .collect()
    }
}
