//! Fits the noise floor `n0` to a table of target coverages.
//!
//! The optics for each target row are evaluated once; the sweep then only
//! re-thresholds the stored signal/interference profile for every candidate
//! `n0`, so the cost is one coverage evaluation per row.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::radio_map::{sig6, CoverageModel};
use crate::scene::SceneConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub height_m: f64,
    pub theta_deg: f64,
    pub coverage_pct: f64,
}

/// Exhaustive-search reference table shipped as the default target.
pub fn reference_targets() -> Vec<TargetRow> {
    [(0.5, 10.0, 93.33), (1.0, 10.0, 88.81), (1.5, 8.0, 89.70), (2.0, 11.0, 53.80)]
        .into_iter()
        .map(|(height_m, theta_deg, coverage_pct)| TargetRow { height_m, theta_deg, coverage_pct })
        .collect()
}

pub fn read_targets<R: Read>(input: R) -> Result<Vec<TargetRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Log-spaced candidate grid `lo * 10^(i / per_decade)` up to `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct N0Sweep {
    pub lo: f64,
    pub hi: f64,
    pub per_decade: usize,
}

impl Default for N0Sweep {
    fn default() -> Self {
        Self { lo: 1e-12, hi: 1e-4, per_decade: 9 }
    }
}

impl N0Sweep {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0 && self.hi >= self.lo && self.per_decade > 0) {
            return Err(Error::config("n0 sweep needs 0 < lo <= hi and per_decade >= 1"));
        }
        let steps = ((self.hi / self.lo).log10() * self.per_decade as f64).round() as usize;
        Ok((0..=steps)
            .map(|i| self.lo * 10f64.powf(i as f64 / self.per_decade as f64))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n0: f64,
    pub rms_pp: f64,
    pub predicted: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub targets: Vec<TargetRow>,
    pub sweep: Vec<SweepPoint>,
    best: usize,
}

impl Calibration {
    pub fn best(&self) -> &SweepPoint {
        &self.sweep[self.best]
    }

    /// Writes `n0,rms_pp` plus one `pred_<i>` column per target row.
    pub fn write_report<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["n0".to_string(), "rms_pp".to_string()];
        header.extend((0..self.targets.len()).map(|i| format!("pred_{i}")));
        w.write_record(&header)?;
        for p in &self.sweep {
            let mut row = vec![sig6(p.n0), sig6(p.rms_pp)];
            row.extend(p.predicted.iter().map(|&c| sig6(c)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn rms(predicted: &[f64], targets: &[TargetRow]) -> f64 {
    let sq: f64 = predicted
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t.coverage_pct).powi(2))
        .sum();
    (sq / targets.len() as f64).sqrt()
}

/// Picks the sweep point with the smallest RMS coverage error; the lowest
/// `n0` wins ties.
pub fn calibrate_n0(scene: &SceneConfig, targets: &[TargetRow], sweep: N0Sweep) -> Result<Calibration> {
    if targets.is_empty() {
        return Err(Error::config("calibration target table is empty"));
    }
    let grid = sweep.grid()?;
    let model = CoverageModel::new(scene.clone())?;
    let profiles = targets
        .iter()
        .map(|t| model.profile(t.height_m, t.theta_deg.to_radians()))
        .collect::<Result<Vec<_>>>()?;

    let points: Vec<SweepPoint> = grid
        .into_iter()
        .map(|n0| {
            let predicted: Vec<f64> = profiles
                .iter()
                .map(|p| p.coverage_pct(n0, scene.gamma_th_db))
                .collect();
            SweepPoint { n0, rms_pp: rms(&predicted, targets), predicted }
        })
        .collect();
    let best = points
        .iter()
        .enumerate()
        .fold(0, |b, (i, p)| if p.rms_pp < points[b].rms_pp { i } else { b });
    Ok(Calibration { targets: targets.to_vec(), sweep: points, best })
}

/// What `calibrate-n0` persists for the other commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub n0: f64,
    pub rms_pp: f64,
}

impl CalibrationFile {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let c: Self = toml::from_str(&text).map_err(|e| Error::config(e.to_string()))?;
        if !(c.n0 > 0.0) {
            return Err(Error::config(format!("{}: n0 must be positive", path.display())));
        }
        Ok(c)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio_map::coverage;

    fn small_scene() -> SceneConfig {
        SceneConfig { n_tx_side: 3, grid_step: 0.5, ..Default::default() }
    }

    #[test]
    fn default_grid_has_nine_points_per_decade() {
        let g = N0Sweep::default().grid().unwrap();
        assert_eq!(g.len(), 73);
        assert_eq!(g[0], 1e-12);
        assert!((g[72] / 1e-4 - 1.0).abs() < 1e-12);
        assert!((g[9] / 1e-11 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_target_is_rejected() {
        assert!(matches!(
            calibrate_n0(&small_scene(), &[], N0Sweep::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn best_point_is_the_argmin() {
        let scene = small_scene();
        let targets = vec![TargetRow { height_m: 1.0, theta_deg: 10.0, coverage_pct: 40.0 }];
        let cal = calibrate_n0(&scene, &targets, N0Sweep::default()).unwrap();
        let best = cal.best();
        assert!(cal.sweep.iter().all(|p| p.rms_pp >= best.rms_pp));
    }

    #[test]
    fn sweep_predictions_match_full_pipeline() {
        let scene = small_scene();
        let targets = reference_targets();
        let sweep = N0Sweep { lo: 1e-10, hi: 1e-8, per_decade: 1 };
        let cal = calibrate_n0(&scene, &targets, sweep).unwrap();
        for p in &cal.sweep {
            for (t, &pred) in targets.iter().zip(&p.predicted) {
                let s = SceneConfig { n0: p.n0, ..scene.clone() };
                let (c, _) = coverage(&s, t.height_m, t.theta_deg.to_radians()).unwrap();
                assert_eq!(c, pred);
            }
        }
    }

    #[test]
    fn targets_csv_round_trip() {
        let text = "height_m,theta_deg,coverage_pct\n0.5,10,93.33\n2,11,53.8\n";
        let rows = read_targets(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1], TargetRow { height_m: 2.0, theta_deg: 11.0, coverage_pct: 53.8 });
    }

    #[test]
    fn calibration_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("calibration.toml");
        let c = CalibrationFile { n0: 3.1622776601683795e-9, rms_pp: 4.25 };
        c.save(&path).unwrap();
        assert_eq!(CalibrationFile::load(&path).unwrap(), c);
    }
}
