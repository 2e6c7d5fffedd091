use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{BeamParams, GridSpec};
use crate::quantum::EncodingSubspace;
use crate::turbulence::{ChannelGeometry, TurbulenceProfile};

/// Full description of a simulation campaign. Every section may be omitted
/// from a TOML file, in which case the reference (full-scale) values apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub geometry: GeometryConfig,
    pub optics: OpticsConfig,
    pub turbulence: TurbulenceConfig,
    pub numerics: NumericsConfig,
    pub monte_carlo: MonteCarloConfig,
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Satellite altitudes H (m).
    pub satellite_altitudes: Vec<f64>,
    /// Zenith angles (rad).
    pub zenith_angles: Vec<f64>,
    /// Ground-station altitude h0 (m).
    pub ground_altitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsConfig {
    pub waist: f64,
    pub wavelength: f64,
    pub aperture_radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurbulenceConfig {
    /// Ground-level C_n² term A (m^-2/3).
    pub ground_strength: f64,
    /// Ground wind speed (m/s).
    pub ground_wind: f64,
    pub outer_scale: f64,
    pub inner_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub grid_size: usize,
    pub grid_spacing: f64,
    pub subharmonic_orders: usize,
    pub absorber: bool,
    /// `false` propagates through zero screens (vacuum debugging).
    pub turbulent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub realizations: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConjugationMode {
    Off,
    On,
    Both,
}

impl ConjugationMode {
    pub fn variants(self) -> &'static [bool] {
        match self {
            Self::Off => &[false],
            Self::On => &[true],
            Self::Both => &[false, true],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub dimensions: Vec<usize>,
    /// Subspaces to evaluate instead of searching; dimensions without an
    /// entry here fall back to the search.
    pub fixed_subspaces: Vec<Vec<i32>>,
    /// Receiver misalignment magnitudes (m).
    pub misalignments: Vec<f64>,
    /// Misalignment direction (rad).
    pub misalignment_direction: f64,
    /// Conjugation infidelities applied as depolarization.
    pub infidelities: Vec<f64>,
    pub conjugation: ConjugationMode,
    /// Build each filter from the misaligned channel instead of the true one.
    pub filter_from_misaligned: bool,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            satellite_altitudes: (0..7).map(|i| 2e5 + 5e4 * f64::from(i)).collect(),
            zenith_angles: vec![0.0, FRAC_PI_4],
            ground_altitude: 3000.0,
        }
    }
}

impl Default for OpticsConfig {
    fn default() -> Self {
        Self {
            waist: 0.15,
            wavelength: 1064e-9,
            aperture_radii: vec![1.0, 4.0],
        }
    }
}

impl Default for TurbulenceConfig {
    fn default() -> Self {
        Self {
            ground_strength: 9.6e-14,
            ground_wind: 3.0,
            outer_scale: 5.0,
            inner_scale: 0.01,
        }
    }
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            grid_size: 2048,
            grid_spacing: 0.005,
            subharmonic_orders: 3,
            absorber: false,
            turbulent: true,
        }
    }
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            realizations: 4000,
            master_seed: 0x0A4D_5EED,
        }
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            dimensions: (2..=9).collect(),
            fixed_subspaces: Vec::new(),
            misalignments: vec![0.0],
            misalignment_direction: FRAC_PI_4,
            infidelities: vec![0.0],
            conjugation: ConjugationMode::Both,
            filter_from_misaligned: false,
        }
    }
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl CampaignConfig {
    /// Full-scale reference settings: 2048² grid at 5 mm, 4000 realizations.
    pub fn paper() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            optics: OpticsConfig::default(),
            turbulence: TurbulenceConfig::default(),
            numerics: NumericsConfig::default(),
            monte_carlo: MonteCarloConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }

    /// Workstation-scale settings: 512² grid at 2 cm, 300 realizations.
    pub fn desk() -> Self {
        let mut c = Self::paper();
        c.numerics.grid_size = 512;
        c.numerics.grid_spacing = 0.02;
        c.monte_carlo.realizations = 300;
        c
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.geometry.satellite_altitudes.is_empty() || self.geometry.zenith_angles.is_empty() {
            return bad("at least one satellite altitude and zenith angle are required".into());
        }
        self.geometries()?;
        self.grid()?;
        self.beam()?;
        self.profile()?;
        if self.optics.aperture_radii.is_empty() || self.optics.aperture_radii.iter().any(|&r| !(r > 0.0)) {
            return bad("aperture radii must be positive and non-empty".into());
        }
        if self.monte_carlo.realizations == 0 {
            return bad("realizations must be positive".into());
        }
        if let Some(&d) = self.analysis.dimensions.iter().find(|d| !(2..=9).contains(*d)) {
            return bad(format!("unsupported dimension {d}"));
        }
        for ls in &self.analysis.fixed_subspaces {
            EncodingSubspace::new(ls.clone()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        if self.analysis.misalignments.iter().any(|&m| !(m >= 0.0)) {
            return bad("misalignments must be non-negative".into());
        }
        if self.analysis.infidelities.iter().any(|&p| !(0.0..1.0).contains(&p)) {
            return bad("infidelities must lie in [0, 1)".into());
        }
        Ok(())
    }

    /// Geometry points, zenith-angle major; the position is the geometry
    /// index used in seeds and store records.
    pub fn geometries(&self) -> Result<Vec<ChannelGeometry>> {
        let g = &self.geometry;
        g.zenith_angles
            .iter()
            .flat_map(|&theta| {
                g.satellite_altitudes
                    .iter()
                    .map(move |&h| ChannelGeometry::new(h, g.ground_altitude, theta))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.numerics.grid_size, self.numerics.grid_spacing).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn beam(&self) -> Result<BeamParams> {
        BeamParams::new(self.optics.waist, self.optics.wavelength).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn profile(&self) -> Result<TurbulenceProfile> {
        let t = &self.turbulence;
        TurbulenceProfile::new(t.ground_strength, t.ground_wind, t.outer_scale, t.inner_scale)
            .map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Misalignments stored per realization: the configured list plus the
    /// aligned channel, sorted.
    pub fn stored_misalignments(&self) -> Vec<f64> {
        let mut m = self.analysis.misalignments.clone();
        m.push(0.0);
        m.sort_by(f64::total_cmp);
        m.dedup();
        m
    }

    /// Fixed subspace configured for dimension `d`, if any.
    pub fn fixed_subspace(&self, d: usize) -> Option<EncodingSubspace> {
        self.analysis
            .fixed_subspaces
            .iter()
            .find(|ls| ls.len() == d)
            .and_then(|ls| EncodingSubspace::new(ls.clone()).ok())
    }

    /// Overlap threshold for the vacuum check: 0.999 at full resolution,
    /// 0.99 on coarser grids.
    pub fn vacuum_overlap_threshold(&self) -> f64 {
        if self.numerics.grid_size >= 2048 && self.numerics.grid_spacing <= 0.005 {
            0.999
        } else {
            0.99
        }
    }
}
