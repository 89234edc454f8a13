//! Room geometry, the steered emitter array, the receiver grid and the
//! discrete state/action spaces.

use std::ops::Sub;

use crate::{Error, Result};

/// Tolerance for "the grid step tiles the room".
const TILE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;

    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

/// Physical and optical parameters of the simulated room. Angles are radians.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub room_l: f64,
    pub room_w: f64,
    pub room_h: f64,
    pub grid_step: f64,
    pub n_tx_side: usize,
    /// Optical power per emitter, W.
    pub p_t: f64,
    /// Detector area, m².
    pub a_d: f64,
    /// Receiver half-angle field of view.
    pub fov: f64,
    pub n_conc: f64,
    pub gamma_th_db: f64,
    /// Noise power, W.
    pub n0: f64,
    /// Spacing between neighbouring emitters on the ceiling, m.
    pub emitter_pitch: f64,
    /// Height of the plane holding the beam aiming lattice, m.
    pub target_plane_z: f64,
}

/// Noise floor used when neither the config nor a calibration file sets one.
pub const DEFAULT_N0: f64 = 1e-12;

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            room_l: 8.0,
            room_w: 8.0,
            room_h: 3.0,
            grid_step: 0.2,
            n_tx_side: 15,
            p_t: 0.010,
            a_d: 1e-4,
            fov: 75f64.to_radians(),
            n_conc: 1.5,
            gamma_th_db: 5.0,
            n0: DEFAULT_N0,
            emitter_pitch: 0.0,
            target_plane_z: 0.0,
        }
    }
}

fn tiles(span: f64, step: f64) -> Option<usize> {
    let n = (span / step).round();
    if n >= 1.0 && (n * step - span).abs() <= TILE_TOL {
        Some(n as usize)
    } else {
        None
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("room_l", self.room_l),
            ("room_w", self.room_w),
            ("room_h", self.room_h),
            ("grid_step", self.grid_step),
            ("a_d", self.a_d),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::geometry(format!("{name} must be positive, got {v}")));
            }
        }
        // A dark array is allowed; it simply covers nothing.
        if !(self.p_t.is_finite() && self.p_t >= 0.0) {
            return Err(Error::geometry(format!("p_t must be non-negative, got {}", self.p_t)));
        }
        if !(self.fov > 0.0 && self.fov < std::f64::consts::FRAC_PI_2) {
            return Err(Error::geometry(format!(
                "fov must lie in (0, 90) degrees, got {} degrees",
                self.fov.to_degrees()
            )));
        }
        if !(self.n_conc >= 1.0) {
            return Err(Error::geometry(format!("n_conc must be >= 1, got {}", self.n_conc)));
        }
        if self.n_tx_side == 0 {
            return Err(Error::geometry("n_tx_side must be at least 1"));
        }
        if !(self.n0.is_finite() && self.n0 > 0.0) {
            return Err(Error::config(format!("n0 must be positive, got {}", self.n0)));
        }
        if !self.gamma_th_db.is_finite() {
            return Err(Error::config("gamma_th_db must be finite"));
        }
        if !(self.emitter_pitch.is_finite() && self.emitter_pitch >= 0.0) {
            return Err(Error::geometry("emitter_pitch must be non-negative"));
        }
        if !(self.target_plane_z.is_finite() && self.target_plane_z < self.room_h) {
            return Err(Error::geometry("target_plane_z must lie below the ceiling"));
        }
        if tiles(self.room_l, self.grid_step).is_none() || tiles(self.room_w, self.grid_step).is_none() {
            return Err(Error::geometry(format!(
                "grid_step {} does not tile a {} x {} m floor",
                self.grid_step, self.room_l, self.room_w
            )));
        }
        Ok(())
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx_side * self.n_tx_side
    }
}

/// Emitter positions and unit beam axes, indexed `k = row * n_tx_side + col`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSet {
    pub sources: Vec<Vec3>,
    pub directions: Vec<Vec3>,
}

impl BeamSet {
    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }
}

/// Centre of lattice cell `(row, col)` on the aiming plane.
pub fn aim_target(cfg: &SceneConfig, row: usize, col: usize) -> Vec3 {
    let n = cfg.n_tx_side as f64;
    Vec3::new(
        (col as f64 + 0.5) * cfg.room_l / n,
        (row as f64 + 0.5) * cfg.room_w / n,
        cfg.target_plane_z,
    )
}

/// Places the emitter array at the ceiling centre and steers beam `(r, c)`
/// at the centre of cell `(r, c)` of an `n_tx_side` square lattice on the
/// aiming plane.
pub fn build_beams(cfg: &SceneConfig) -> Result<BeamSet> {
    if cfg.n_tx_side == 0 {
        return Err(Error::geometry("n_tx_side must be at least 1"));
    }
    cfg.validate()?;
    let n = cfg.n_tx_side;
    let extent = (n - 1) as f64 * cfg.emitter_pitch;
    if extent > cfg.room_l || extent > cfg.room_w {
        return Err(Error::geometry(format!(
            "emitter array spans {extent} m, wider than the {} x {} m room",
            cfg.room_l, cfg.room_w
        )));
    }
    let half = (n - 1) as f64 / 2.0;
    let mut sources = Vec::with_capacity(n * n);
    let mut directions = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let src = Vec3::new(
                cfg.room_l / 2.0 + (c as f64 - half) * cfg.emitter_pitch,
                cfg.room_w / 2.0 + (r as f64 - half) * cfg.emitter_pitch,
                cfg.room_h,
            );
            let axis = aim_target(cfg, r, c) - src;
            let len = axis.norm();
            if len == 0.0 {
                return Err(Error::geometry(format!("beam ({r}, {c}) has a degenerate aim")));
            }
            sources.push(src);
            directions.push(axis.scale(1.0 / len));
        }
    }
    Ok(BeamSet { sources, directions })
}

/// Inclusive receiver lattice at height `z`. Points are stored row-major in
/// y then x: index `j * xs.len() + i` is `(xs[i], ys[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub z: f64,
}

impl ReceiverGrid {
    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, idx: usize) -> Vec3 {
        let nx = self.xs.len();
        Vec3::new(self.xs[idx % nx], self.ys[idx / nx], self.z)
    }

    pub fn points(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

fn axis(span: f64, step: f64) -> Result<Vec<f64>> {
    let n = tiles(span, step)
        .ok_or_else(|| Error::geometry(format!("grid_step {step} does not tile a {span} m span")))?;
    // Dividing last keeps both endpoints exact.
    Ok((0..=n).map(|i| span * i as f64 / n as f64).collect())
}

pub fn build_grid(cfg: &SceneConfig, h_r: f64) -> Result<ReceiverGrid> {
    if !(h_r.is_finite() && (0.0..cfg.room_h).contains(&h_r)) {
        return Err(Error::geometry(format!(
            "receiver height {h_r} m outside [0, {})",
            cfg.room_h
        )));
    }
    Ok(ReceiverGrid {
        xs: axis(cfg.room_l, cfg.grid_step)?,
        ys: axis(cfg.room_w, cfg.grid_step)?,
        z: h_r,
    })
}

/// Vector from an emitter to a grid point and its length.
pub fn grid_vector(source: Vec3, grid_point: Vec3) -> Result<(Vec3, f64)> {
    let v = grid_point - source;
    let d = v.norm();
    if d > 0.0 {
        Ok((v, d))
    } else {
        Err(Error::geometry("grid point coincides with an emitter"))
    }
}

/// Ordered receiver heights (states) and divergence angles (actions).
#[derive(Debug, Clone, PartialEq)]
pub struct Spaces {
    pub heights: Vec<f64>,
    /// Divergence half-angles, radians.
    pub divergences: Vec<f64>,
}

impl Default for Spaces {
    fn default() -> Self {
        Self {
            heights: vec![0.5, 1.0, 1.5, 2.0],
            divergences: (5..=20).map(|d| f64::from(d).to_radians()).collect(),
        }
    }
}

impl Spaces {
    pub fn n_states(&self) -> usize {
        self.heights.len()
    }

    pub fn n_actions(&self) -> usize {
        self.divergences.len()
    }

    pub fn validate(&self, room_h: f64) -> Result<()> {
        if self.heights.is_empty() {
            return Err(Error::config("state space (heights) is empty"));
        }
        if self.divergences.is_empty() {
            return Err(Error::config("action space (divergences) is empty"));
        }
        if !self.heights.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config("heights must be strictly increasing"));
        }
        if !self.divergences.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config("divergences must be strictly increasing"));
        }
        if let Some(h) = self.heights.iter().find(|&&h| !(h >= 0.0 && h < room_h)) {
            return Err(Error::config(format!("height {h} m outside [0, {room_h})")));
        }
        if let Some(t) = self
            .divergences
            .iter()
            .find(|&&t| !(t > 0.0 && t < std::f64::consts::FRAC_PI_2))
        {
            return Err(Error::config(format!(
                "divergence {} degrees outside (0, 90)",
                t.to_degrees()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::collections::HashSet;

    #[test]
    fn single_emitter_points_straight_down() {
        let cfg = SceneConfig { n_tx_side: 1, ..Default::default() };
        let beams = build_beams(&cfg).unwrap();
        assert_eq!(beams.sources, vec![Vec3::new(4.0, 4.0, 3.0)]);
        assert_eq!(beams.directions, vec![Vec3::new(0.0, 0.0, -1.0)]);
    }

    #[test]
    fn corner_beam_aims_at_first_cell() {
        let beams = build_beams(&SceneConfig::default()).unwrap();
        let t = 8.0 / 30.0;
        let raw = Vec3::new(t - 4.0, t - 4.0, -3.0);
        let want = raw.scale(1.0 / raw.norm());
        let got = beams.directions[0];
        assert_abs_diff_eq!(got.x, want.x, epsilon = 1e-15);
        assert_abs_diff_eq!(got.y, want.y, epsilon = 1e-15);
        assert_abs_diff_eq!(got.z, want.z, epsilon = 1e-15);
    }

    #[test]
    fn default_beams_are_unit_and_downward() {
        let beams = build_beams(&SceneConfig::default()).unwrap();
        assert_eq!(beams.len(), 225);
        for d in &beams.directions {
            assert!((d.norm() - 1.0).abs() < 1e-12);
            assert!(d.z < 0.0);
        }
    }

    #[test]
    fn targets_are_a_bijection() {
        let cfg = SceneConfig::default();
        let mut seen = HashSet::new();
        for r in 0..cfg.n_tx_side {
            for c in 0..cfg.n_tx_side {
                let t = aim_target(&cfg, r, c);
                seen.insert((t.x.to_bits(), t.y.to_bits()));
            }
        }
        assert_eq!(seen.len(), cfg.n_tx());
    }

    #[test]
    fn beams_mirror_under_xy_swap() {
        let cfg = SceneConfig { n_tx_side: 7, ..Default::default() };
        let beams = build_beams(&cfg).unwrap();
        let n = cfg.n_tx_side;
        for r in 0..n {
            for c in 0..n {
                let a = beams.directions[r * n + c];
                let b = beams.directions[c * n + r];
                assert_abs_diff_eq!(a.x, b.y, epsilon = 1e-12);
                assert_abs_diff_eq!(a.y, b.x, epsilon = 1e-12);
                assert_abs_diff_eq!(a.z, b.z, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rejects_zero_emitters_and_oversized_array() {
        let cfg = SceneConfig { n_tx_side: 0, ..Default::default() };
        assert!(matches!(build_beams(&cfg), Err(Error::Geometry(_))));
        let cfg = SceneConfig { emitter_pitch: 1.0, ..Default::default() };
        assert!(matches!(build_beams(&cfg), Err(Error::Geometry(_))));
    }

    #[test]
    fn default_grid_is_41_square() {
        let g = build_grid(&SceneConfig::default(), 1.0).unwrap();
        assert_eq!((g.xs.len(), g.ys.len(), g.len()), (41, 41, 1681));
        assert_eq!(g.z, 1.0);
        assert_eq!(g.xs[0], 0.0);
        assert_eq!(*g.xs.last().unwrap(), 8.0);
        assert_eq!(*g.ys.last().unwrap(), 8.0);
    }

    #[test]
    fn coarse_grid_hits_room_midpoint() {
        let cfg = SceneConfig { grid_step: 4.0, ..Default::default() };
        let g = build_grid(&cfg, 0.0).unwrap();
        assert_eq!(g.xs, vec![0.0, 4.0, 8.0]);
        assert_eq!(g.ys, vec![0.0, 4.0, 8.0]);
        assert_eq!(g.point(5), Vec3::new(8.0, 4.0, 0.0));
    }

    #[test]
    fn grid_rejects_non_tiling_step_and_high_plane() {
        let cfg = SceneConfig { grid_step: 0.3, ..Default::default() };
        assert!(build_grid(&cfg, 1.0).is_err());
        assert!(cfg.validate().is_err());
        assert!(build_grid(&SceneConfig::default(), 3.0).is_err());
    }

    #[test]
    fn grid_vector_cases() {
        let src = Vec3::new(4.0, 4.0, 3.0);
        let (v, d) = grid_vector(src, Vec3::new(4.0, 4.0, 0.0)).unwrap();
        assert_eq!((v, d), (Vec3::new(0.0, 0.0, -3.0), 3.0));
        let (v, d) = grid_vector(src, Vec3::new(7.0, 8.0, 1.0)).unwrap();
        assert_eq!(v, Vec3::new(3.0, 4.0, -2.0));
        assert_abs_diff_eq!(d, 29f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(grid_vector(src, src), Err(Error::Geometry(_))));
    }

    #[test]
    fn default_spaces() {
        let s = Spaces::default();
        assert_eq!(s.n_states(), 4);
        assert_eq!(s.n_actions(), 16);
        s.validate(3.0).unwrap();
        let bad = Spaces { heights: vec![1.0, 0.5], ..Default::default() };
        assert!(bad.validate(3.0).is_err());
        let empty = Spaces { divergences: vec![], ..Default::default() };
        assert!(matches!(empty.validate(3.0), Err(Error::Config(_))));
    }
}
