//! Brute-force re-derivation of the coverage pipeline on small random rooms,
//! written against plain arrays so it shares no code with the library.

#![allow(dead_code)]

use owc_coverage::radio_map::CoverageModel;
use owc_coverage::scene::SceneConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type V = [f64; 3];

fn sub(a: V, b: V) -> V {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: V, b: V) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V, b: V) -> V {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn len(a: V) -> f64 {
    dot(a, a).sqrt()
}

pub struct Reference {
    pub powers: Vec<Vec<f64>>,
    pub sinr: Vec<f64>,
    pub serving: Vec<Option<usize>>,
    pub coverage_pct: f64,
}

pub fn brute_force(c: &SceneConfig, h: f64, theta: f64) -> Reference {
    let n = c.n_tx_side;
    let mut tx: Vec<(V, V)> = vec![];
    for r in 0..n {
        for col in 0..n {
            let off = |i: usize| (i as f64 - (n as f64 - 1.0) / 2.0) * c.emitter_pitch;
            let src = [c.room_l / 2.0 + off(col), c.room_w / 2.0 + off(r), c.room_h];
            let aim = [
                c.room_l * (2 * col + 1) as f64 / (2 * n) as f64,
                c.room_w * (2 * r + 1) as f64 / (2 * n) as f64,
                c.target_plane_z,
            ];
            let v = sub(aim, src);
            let l = len(v);
            tx.push((src, [v[0] / l, v[1] / l, v[2] / l]));
        }
    }

    let nx = (c.room_l / c.grid_step).round() as usize + 1;
    let ny = (c.room_w / c.grid_step).round() as usize + 1;
    let gain = c.n_conc.powi(2) / c.fov.sin().powi(2);
    let threshold = 10f64.powf(c.gamma_th_db / 10.0);

    let mut out = Reference { powers: vec![], sinr: vec![], serving: vec![], coverage_pct: 0.0 };
    let mut covered = 0usize;
    for j in 0..ny {
        for i in 0..nx {
            let p = [i as f64 * c.grid_step, j as f64 * c.grid_step, h];
            let row: Vec<f64> = tx
                .iter()
                .map(|&(src, dir)| {
                    let v = sub(p, src);
                    let d = len(v);
                    let off_axis = len(cross(dir, v)).atan2(dot(dir, v));
                    let vertical = src[2] - p[2];
                    let horizontal = (v[0] * v[0] + v[1] * v[1]).sqrt();
                    let incidence = horizontal.atan2(vertical);
                    if incidence > c.fov {
                        return 0.0;
                    }
                    let w = d * theta;
                    let irr = 2.0 * c.p_t / (std::f64::consts::PI * w * w)
                        * (-2.0 * (off_axis / theta).powi(2)).exp();
                    irr * c.a_d * (vertical / d) * gain
                })
                .collect();

            let mut k = 0;
            for (idx, &v) in row.iter().enumerate() {
                if v > row[k] {
                    k = idx;
                }
            }
            let (sinr, serving) = if row[k] > 0.0 {
                let interference: f64 = row.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, v)| v).sum();
                (row[k] / (interference + c.n0), Some(k))
            } else {
                (0.0, None)
            };
            if sinr >= threshold {
                covered += 1;
            }
            out.powers.push(row);
            out.sinr.push(sinr);
            out.serving.push(serving);
        }
    }
    out.coverage_pct = 100.0 * covered as f64 / (nx * ny) as f64;
    out
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> (SceneConfig, f64, f64) {
    let step = rng.gen_range(0.5..2.0);
    let room_h = rng.gen_range(2.5..4.0);
    let n_tx_side = rng.gen_range(1..=3);
    let room_l = step * rng.gen_range(1..=4) as f64;
    let room_w = step * rng.gen_range(1..=4) as f64;
    let scene = SceneConfig {
        room_l,
        room_w,
        room_h,
        grid_step: step,
        n_tx_side,
        p_t: rng.gen_range(0.001..0.05),
        a_d: rng.gen_range(1e-5..1e-3),
        fov: rng.gen_range(30f64..85.0).to_radians(),
        n_conc: rng.gen_range(1.0..2.0),
        gamma_th_db: rng.gen_range(-5.0..15.0),
        n0: 10f64.powf(rng.gen_range(-10.0..-5.0)),
        emitter_pitch: if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..room_l.min(room_w) / 3.0) },
        target_plane_z: rng.gen_range(0.0..room_h - 0.5),
    };
    let h = rng.gen_range(0.0..room_h - 0.3);
    let theta = rng.gen_range(2f64..30.0).to_radians();
    (scene, h, theta)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Runs the 20-instance comparison; returns the first mismatch, if any.
pub fn compare_random_instances(seed: u64, count: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..count {
        let (scene, h, theta) = random_instance(&mut rng);
        let want = brute_force(&scene, h, theta);
        let model = CoverageModel::new(scene.clone()).map_err(|e| format!("case {case}: {e}"))?;
        let pm = model.power_matrix(h, theta).map_err(|e| format!("case {case}: {e}"))?;
        let got = model.evaluate(h, theta).map_err(|e| format!("case {case}: {e}"))?;

        if pm.n_points() != want.powers.len() || pm.n_points() > 25 || pm.n_tx > 9 {
            return Err(format!("case {case}: shape {}x{}", pm.n_points(), pm.n_tx));
        }
        for (p, row) in want.powers.iter().enumerate() {
            for (k, &w) in row.iter().enumerate() {
                if !rel_close(pm.get(p, k), w, 1e-12) {
                    return Err(format!("case {case}: power[{p}][{k}] {} vs {w}", pm.get(p, k)));
                }
            }
            if !rel_close(got.sinr[p], want.sinr[p], 1e-12) {
                return Err(format!("case {case}: sinr[{p}] {} vs {}", got.sinr[p], want.sinr[p]));
            }
            // Mirror-symmetric beams can tie to the last ulp; either is a valid server.
            let tied = match (got.serving[p], want.serving[p]) {
                (Some(a), Some(b)) => rel_close(row[a], row[b], 1e-12),
                (a, b) => a == b,
            };
            if !tied {
                return Err(format!("case {case}: serving[{p}] {:?} vs {:?}", got.serving[p], want.serving[p]));
            }
        }
        if got.coverage_pct != want.coverage_pct {
            return Err(format!("case {case}: coverage {} vs {}", got.coverage_pct, want.coverage_pct));
        }
    }
    Ok(())
}
