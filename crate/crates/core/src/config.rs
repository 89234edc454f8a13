//! Flat key-value experiment file (TOML syntax).
//!
//! Every key is optional; missing keys take the defaults of [`SceneConfig`],
//! [`Spaces`] and [`Hyperparameters`]. Angles are degrees in the file and
//! radians everywhere else.
//!
//! ```toml
//! room_l = 8.0
//! grid_step = 0.2
//! fov = 75.0                # degrees
//! heights = [0.5, 1.0, 1.5, 2.0]
//! divergences = [5, 6, 7]   # degrees
//! alpha = 0.1
//! episode_order = "ascending"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::{ExplorationSchedule, Hyperparameters};
use crate::env::EpisodeOrder;
use crate::scene::{SceneConfig, Spaces, DEFAULT_N0};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub room_l: f64,
    pub room_w: f64,
    pub room_h: f64,
    pub grid_step: f64,
    pub n_tx_side: usize,
    pub p_t: f64,
    pub a_d: f64,
    pub fov: f64,
    pub n_conc: f64,
    pub gamma_th_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    pub emitter_pitch: f64,
    pub target_plane_z: f64,
    pub heights: Vec<f64>,
    pub divergences: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub eps_max: f64,
    pub eps_min: f64,
    pub lambda: f64,
    pub episode_order: EpisodeOrder,
    pub early_stop: bool,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let scene = SceneConfig::default();
        let spaces = Spaces::default();
        let hp = Hyperparameters::default();
        Self {
            room_l: scene.room_l,
            room_w: scene.room_w,
            room_h: scene.room_h,
            grid_step: scene.grid_step,
            n_tx_side: scene.n_tx_side,
            p_t: scene.p_t,
            a_d: scene.a_d,
            fov: scene.fov.to_degrees().round(),
            n_conc: scene.n_conc,
            gamma_th_db: scene.gamma_th_db,
            n0: None,
            emitter_pitch: scene.emitter_pitch,
            target_plane_z: scene.target_plane_z,
            heights: spaces.heights,
            divergences: (5..=20).map(f64::from).collect(),
            alpha: hp.alpha,
            gamma: hp.gamma,
            episodes: hp.episodes,
            eps_max: hp.schedule.eps_max,
            eps_min: hp.schedule.eps_min,
            lambda: hp.schedule.lambda,
            episode_order: hp.episode_order,
            early_stop: hp.early_stop,
        }
    }
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scene: SceneConfig,
    pub spaces: Spaces,
    pub learning: Hyperparameters,
    /// Whether `n0` came from the file rather than the built-in default.
    pub n0_from_file: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ConfigFile::default().resolve().expect("built-in defaults are valid")
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Converts to internal units and validates every section.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let scene = SceneConfig {
            room_l: self.room_l,
            room_w: self.room_w,
            room_h: self.room_h,
            grid_step: self.grid_step,
            n_tx_side: self.n_tx_side,
            p_t: self.p_t,
            a_d: self.a_d,
            fov: self.fov.to_radians(),
            n_conc: self.n_conc,
            gamma_th_db: self.gamma_th_db,
            n0: self.n0.unwrap_or(DEFAULT_N0),
            emitter_pitch: self.emitter_pitch,
            target_plane_z: self.target_plane_z,
        };
        let spaces = Spaces {
            heights: self.heights.clone(),
            divergences: self.divergences.iter().map(|d| d.to_radians()).collect(),
        };
        let learning = Hyperparameters {
            alpha: self.alpha,
            gamma: self.gamma,
            episodes: self.episodes,
            schedule: ExplorationSchedule {
                eps_max: self.eps_max,
                eps_min: self.eps_min,
                lambda: self.lambda,
            },
            episode_order: self.episode_order,
            early_stop: self.early_stop,
        };
        // Emptiness of the spaces is a config problem, checked before geometry.
        spaces.validate(scene.room_h)?;
        learning.validate()?;
        if let Some(n0) = self.n0 {
            if !(n0.is_finite() && n0 > 0.0) {
                return Err(Error::config(format!("n0 must be positive, got {n0}")));
            }
        }
        scene.validate()?;
        Ok(ExperimentConfig { scene, spaces, learning, n0_from_file: self.n0.is_some() })
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        ConfigFile::load(path)?.resolve()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ConfigFile::parse("").unwrap().resolve().unwrap();
        assert_eq!(cfg.scene, SceneConfig::default());
        assert_eq!(cfg.spaces, Spaces::default());
        assert_eq!(cfg.learning, Hyperparameters::default());
        assert!(!cfg.n0_from_file);
    }

    #[test]
    fn angles_are_converted_once() {
        let cfg = ConfigFile::parse("fov = 60.0\ndivergences = [10.0, 12.5]\nn0 = 1e-9\n")
            .unwrap()
            .resolve()
            .unwrap();
        assert!((cfg.scene.fov - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
        assert_eq!(cfg.spaces.divergences, vec![10f64.to_radians(), 12.5f64.to_radians()]);
        assert_eq!(cfg.scene.n0, 1e-9);
        assert!(cfg.n0_from_file);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(ConfigFile::parse("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(ConfigFile::parse("room_l = \"eight\""), Err(Error::Config(_))));
        let empty = ConfigFile::parse("divergences = []").unwrap();
        assert!(matches!(empty.resolve(), Err(Error::Config(_))));
        let bad_step = ConfigFile::parse("grid_step = 0.3").unwrap();
        assert!(matches!(bad_step.resolve(), Err(Error::Geometry(_))));
    }

    #[test]
    fn default_file_round_trips_through_toml() {
        let text = toml::to_string(&ConfigFile::default()).unwrap();
        assert_eq!(ConfigFile::parse(&text).unwrap(), ConfigFile::default());
    }
}
