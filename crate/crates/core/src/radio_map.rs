//! Per-beam received power, SINR and coverage over a receiver plane.
//!
//! Each grid point is independent: its row of per-beam powers is filled,
//! reduced to (serving beam, signal, interference), and only then combined
//! with the noise floor. [`DominantProfile`] keeps that noise-free reduction
//! so a sweep over `n0` does not redo the optics.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::optics::{self, FrontEnd};
use crate::par::{self, Execution};
use crate::scene::{self, BeamSet, ReceiverGrid, SceneConfig};
use crate::{Error, Result};

/// `n_points x n_tx` received powers in watts, row per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMatrix {
    pub nx: usize,
    pub ny: usize,
    pub n_tx: usize,
    data: Vec<f64>,
}

impl PowerMatrix {
    pub fn from_rows(nx: usize, ny: usize, n_tx: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nx * ny * n_tx {
            return Err(Error::config(format!(
                "power matrix needs {} entries, got {}",
                nx * ny * n_tx,
                data.len()
            )));
        }
        Ok(Self { nx, ny, n_tx, data })
    }

    pub fn n_points(&self) -> usize {
        self.nx * self.ny
    }

    pub fn row(&self, point: usize) -> &[f64] {
        &self.data[point * self.n_tx..(point + 1) * self.n_tx]
    }

    pub fn get(&self, point: usize, tx: usize) -> f64 {
        self.data[point * self.n_tx + tx]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

fn check_below_sources(beams: &BeamSet, grid: &ReceiverGrid) -> Result<()> {
    if beams.sources.iter().any(|s| s.z <= grid.z) {
        return Err(Error::geometry(format!(
            "receiver plane at {} m is not below every emitter",
            grid.z
        )));
    }
    Ok(())
}

/// Fills `row[k]` with the power collected at grid point `point` from beam `k`.
fn fill_point_row(
    beams: &BeamSet,
    grid: &ReceiverGrid,
    point: usize,
    front: &FrontEnd,
    p_t: f64,
    theta_div: f64,
    row: &mut [f64],
) -> Result<()> {
    let rx = grid.point(point);
    for ((out, &src), &dir) in row.iter_mut().zip(&beams.sources).zip(&beams.directions) {
        let (v, d) = scene::grid_vector(src, rx)?;
        let dev = optics::angular_deviation(dir, v)?;
        let irr = optics::irradiance(p_t, theta_div, d, dev)?;
        let inc = optics::incidence_angle(src.z, rx.z, d);
        *out = optics::received_power(irr, front, inc);
    }
    Ok(())
}

pub fn power_matrix(
    beams: &BeamSet,
    grid: &ReceiverGrid,
    front: &FrontEnd,
    p_t: f64,
    theta_div: f64,
) -> Result<PowerMatrix> {
    power_matrix_with(Execution::default(), beams, grid, front, p_t, theta_div)
}

pub fn power_matrix_with(
    exec: Execution,
    beams: &BeamSet,
    grid: &ReceiverGrid,
    front: &FrontEnd,
    p_t: f64,
    theta_div: f64,
) -> Result<PowerMatrix> {
    check_below_sources(beams, grid)?;
    let n_tx = beams.len();
    let mut data = vec![0.0; grid.len() * n_tx];
    par::try_fill_rows(exec, &mut data, n_tx, |p, row| {
        fill_point_row(beams, grid, p, front, p_t, theta_div, row)
    })?;
    PowerMatrix::from_rows(grid.xs.len(), grid.ys.len(), n_tx, data)
}

/// Dominant beam of one grid point and the powers around it.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dominant {
    serving: Option<usize>,
    signal: f64,
    interference: f64,
}

/// Lowest index wins ties; an all-zero row has no serving beam.
fn reduce_row(row: &[f64]) -> Dominant {
    let mut best = 0;
    for (k, &p) in row.iter().enumerate().skip(1) {
        if p > row[best] {
            best = k;
        }
    }
    let signal = row.get(best).copied().unwrap_or(0.0);
    let interference = row
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != best)
        .map(|(_, &p)| p)
        .sum();
    let serving = (signal > 0.0).then_some(best);
    Dominant { serving, signal, interference }
}

pub fn threshold_linear(gamma_th_db: f64) -> f64 {
    10f64.powf(gamma_th_db / 10.0)
}

/// Noise-independent summary of a power matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantProfile {
    pub nx: usize,
    pub ny: usize,
    pub serving: Vec<Option<usize>>,
    pub signal: Vec<f64>,
    pub interference: Vec<f64>,
}

impl DominantProfile {
    pub fn from_powers(powers: &PowerMatrix) -> Self {
        Self::collect(powers.nx, powers.ny, (0..powers.n_points()).map(|p| reduce_row(powers.row(p))))
    }

    fn collect(nx: usize, ny: usize, it: impl Iterator<Item = Dominant>) -> Self {
        let mut out = Self {
            nx,
            ny,
            serving: Vec::with_capacity(nx * ny),
            signal: Vec::with_capacity(nx * ny),
            interference: Vec::with_capacity(nx * ny),
        };
        for d in it {
            out.serving.push(d.serving);
            out.signal.push(d.signal);
            out.interference.push(d.interference);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }

    fn sinr_at(&self, p: usize, n0: f64) -> f64 {
        if self.serving[p].is_none() {
            return 0.0;
        }
        self.signal[p] / (self.interference[p] + n0)
    }

    /// Coverage percentage without materializing the map.
    pub fn coverage_pct(&self, n0: f64, gamma_th_db: f64) -> f64 {
        let thr = threshold_linear(gamma_th_db);
        let covered = (0..self.len()).filter(|&p| self.sinr_at(p, n0) >= thr).count();
        100.0 * covered as f64 / self.len() as f64
    }

    pub fn sinr_map(&self, n0: f64, gamma_th_db: f64) -> Result<SinrMap> {
        if !(n0 > 0.0) {
            return Err(Error::config(format!("n0 must be positive, got {n0}")));
        }
        let thr = threshold_linear(gamma_th_db);
        let sinr: Vec<f64> = (0..self.len()).map(|p| self.sinr_at(p, n0)).collect();
        let covered: Vec<bool> = sinr.iter().map(|&s| s >= thr).collect();
        let n_cov = covered.iter().filter(|&&c| c).count();
        let coverage_pct = 100.0 * n_cov as f64 / self.len() as f64;
        Ok(SinrMap {
            nx: self.nx,
            ny: self.ny,
            sinr,
            serving: self.serving.clone(),
            covered,
            coverage_pct,
            hole_pct: 100.0 - coverage_pct,
        })
    }
}

/// SINR and coverage over the receiver grid, row-major in y then x.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrMap {
    pub nx: usize,
    pub ny: usize,
    /// Linear SINR per grid point.
    pub sinr: Vec<f64>,
    pub serving: Vec<Option<usize>>,
    pub covered: Vec<bool>,
    pub coverage_pct: f64,
    pub hole_pct: f64,
}

pub fn sinr_map(powers: &PowerMatrix, n0: f64, gamma_th_db: f64) -> Result<SinrMap> {
    DominantProfile::from_powers(powers).sinr_map(n0, gamma_th_db)
}

/// A scene with its beams and front end built once, ready for repeated
/// `(height, divergence)` evaluations.
#[derive(Debug, Clone)]
pub struct CoverageModel {
    scene: SceneConfig,
    beams: BeamSet,
    front: FrontEnd,
    exec: Execution,
}

impl CoverageModel {
    pub fn new(scene: SceneConfig) -> Result<Self> {
        scene.validate()?;
        let beams = scene::build_beams(&scene)?;
        let front = FrontEnd::new(scene.a_d, scene.fov, scene.n_conc)?;
        Ok(Self { scene, beams, front, exec: Execution::default() })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn scene(&self) -> &SceneConfig {
        &self.scene
    }

    pub fn beams(&self) -> &BeamSet {
        &self.beams
    }

    pub fn front(&self) -> &FrontEnd {
        &self.front
    }

    pub fn grid(&self, h_r: f64) -> Result<ReceiverGrid> {
        let grid = scene::build_grid(&self.scene, h_r)?;
        check_below_sources(&self.beams, &grid)?;
        Ok(grid)
    }

    pub fn power_matrix(&self, h_r: f64, theta_div: f64) -> Result<PowerMatrix> {
        let grid = self.grid(h_r)?;
        power_matrix_with(self.exec, &self.beams, &grid, &self.front, self.scene.p_t, theta_div)
    }

    /// Streams rows point by point instead of holding the full matrix; the
    /// arithmetic is identical to [`power_matrix`] followed by
    /// [`DominantProfile::from_powers`].
    pub fn profile(&self, h_r: f64, theta_div: f64) -> Result<DominantProfile> {
        let grid = self.grid(h_r)?;
        let n_tx = self.beams.len();
        let rows = par::map_indices(self.exec, grid.len(), |p| {
            let mut row = vec![0.0; n_tx];
            fill_point_row(&self.beams, &grid, p, &self.front, self.scene.p_t, theta_div, &mut row)
                .map(|()| reduce_row(&row))
        });
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(DominantProfile::collect(grid.xs.len(), grid.ys.len(), rows.into_iter()))
    }

    pub fn evaluate(&self, h_r: f64, theta_div: f64) -> Result<SinrMap> {
        self.profile(h_r, theta_div)?
            .sinr_map(self.scene.n0, self.scene.gamma_th_db)
    }

    pub fn coverage_pct(&self, h_r: f64, theta_div: f64) -> Result<f64> {
        Ok(self.evaluate(h_r, theta_div)?.coverage_pct)
    }
}

/// The coverage objective for one receiver height and divergence.
pub fn coverage(scene: &SceneConfig, h_r: f64, theta_div: f64) -> Result<(f64, SinrMap)> {
    if !(h_r > 0.0 && h_r < scene.room_h) {
        return Err(Error::geometry(format!("receiver height {h_r} m outside (0, {})", scene.room_h)));
    }
    let map = CoverageModel::new(scene.clone())?.evaluate(h_r, theta_div)?;
    Ok((map.coverage_pct, map))
}

/// Formats with six significant digits, printed in the shortest form that
/// parses back to the rounded value.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// One row of the SINR CSV export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrRecord {
    pub x: f64,
    pub y: f64,
    pub sinr_db: f64,
    /// Dominant beam index, -1 where no beam reaches the point.
    pub serving: i64,
    pub covered: u8,
}

impl SinrMap {
    pub fn n_points(&self) -> usize {
        self.sinr.len()
    }

    pub fn sinr_db(&self, p: usize) -> f64 {
        10.0 * self.sinr[p].log10()
    }

    pub fn records(&self, grid: &ReceiverGrid) -> Result<Vec<SinrRecord>> {
        if grid.xs.len() != self.nx || grid.ys.len() != self.ny {
            return Err(Error::config("grid shape does not match the SINR map"));
        }
        Ok((0..self.n_points())
            .map(|p| {
                let pt = grid.point(p);
                SinrRecord {
                    x: pt.x,
                    y: pt.y,
                    sinr_db: self.sinr_db(p),
                    serving: self.serving[p].map_or(-1, |k| k as i64),
                    covered: u8::from(self.covered[p]),
                }
            })
            .collect())
    }

    /// Writes `x,y,sinr_db,serving,covered`, one row per grid point.
    pub fn write_csv<W: Write>(&self, grid: &ReceiverGrid, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "sinr_db", "serving", "covered"])?;
        for r in self.records(grid)? {
            w.write_record([
                sig6(r.x),
                sig6(r.y),
                sig6(r.sinr_db),
                r.serving.to_string(),
                r.covered.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn read_sinr_csv<R: Read>(input: R) -> Result<Vec<SinrRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}
