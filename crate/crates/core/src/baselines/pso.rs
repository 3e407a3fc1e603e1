use std::time::Instant;

use rand::Rng;

use super::{uniform_population, BaselineConfig};
use crate::evolution::{Evaluator, Objective, RunResult};
use crate::numerics::{Matrix, RngStream};
use crate::Result;

/// Inertia at generation `t` of `total`, linear from `start` to `end`; both
/// endpoints are hit exactly.
pub fn inertia_weight(t: usize, total: usize, start: f64, end: f64) -> f64 {
    if total <= 1 {
        return start;
    }
    if t + 1 >= total {
        return end;
    }
    start + (end - start) * t as f64 / (total - 1) as f64
}

/// `v' = w v + c1 r1 (pbest − x) + c2 r2 (gbest − x)`, clamped to `±vmax`.
#[allow(clippy::too_many_arguments)]
pub fn velocity_update(
    v: &[f64],
    x: &[f64],
    pbest: &[f64],
    gbest: &[f64],
    w: f64,
    c1: f64,
    c2: f64,
    r1: &[f64],
    r2: &[f64],
    vmax: &[f64],
) -> Vec<f64> {
    (0..v.len())
        .map(|j| {
            let raw = w * v[j] + c1 * r1[j] * (pbest[j] - x[j]) + c2 * r2[j] * (gbest[j] - x[j]);
            raw.clamp(-vmax[j], vmax[j])
        })
        .collect()
}

/// Global-best PSO. Positions start uniform in the box, velocities uniform in
/// `±vmax`; per particle and dimension the stream yields `r1` then `r2`.
pub fn run_pso<O: Objective + ?Sized>(
    objective: &O,
    config: &BaselineConfig,
    rng: &mut RngStream,
) -> Result<RunResult> {
    config.validate()?;
    let n = config.population;
    let vmax = velocity_limits(config);
    let neg: Vec<f64> = vmax.iter().map(|v| -v).collect();
    let pos = uniform_population(n, &config.lower, &config.upper, rng);
    let vel = uniform_population(n, &neg, &vmax, rng);
    run_pso_from(objective, config, pos, vel, rng)
}

fn velocity_limits(config: &BaselineConfig) -> Vec<f64> {
    config
        .lower
        .iter()
        .zip(&config.upper)
        .map(|(lo, hi)| config.velocity_clamp * (hi - lo))
        .collect()
}

pub(super) fn run_pso_from<O: Objective + ?Sized>(
    objective: &O,
    config: &BaselineConfig,
    mut pos: Matrix,
    mut vel: Matrix,
    rng: &mut RngStream,
) -> Result<RunResult> {
    let start = Instant::now();
    let (n, d) = pos.shape();
    let vmax = velocity_limits(config);
    let mut evaluator = Evaluator::new(objective, config.budget);
    let fit = evaluator.evaluate_rows(pos.row_iter())?;
    let mut pbest = pos.clone();
    let mut pbest_fit = fit;
    let mut g = argmin(&pbest_fit);
    let mut gbest = pbest.row(g).to_vec();
    let generations = config.generations();
    let (mut r1, mut r2) = (vec![0.0; d], vec![0.0; d]);

    for t in 0..generations {
        let w = inertia_weight(t, generations, config.inertia_start, config.inertia_end);
        for i in 0..n {
            for j in 0..d {
                r1[j] = rng.random();
                r2[j] = rng.random();
            }
            let v = velocity_update(
                vel.row(i),
                pos.row(i),
                pbest.row(i),
                &gbest,
                w,
                config.pso_cognitive,
                config.pso_social,
                &r1,
                &r2,
                &vmax,
            );
            vel.row_mut(i).copy_from_slice(&v);
            for (j, x) in pos.row_mut(i).iter_mut().enumerate() {
                *x = (*x + v[j]).clamp(config.lower[j], config.upper[j]);
            }
        }
        let fit = evaluator.evaluate_rows(pos.row_iter())?;
        for i in 0..n {
            if fit[i] < pbest_fit[i] {
                pbest_fit[i] = fit[i];
                pbest.row_mut(i).copy_from_slice(pos.row(i));
            }
        }
        g = argmin(&pbest_fit);
        gbest.copy_from_slice(pbest.row(g));
    }
    Ok(evaluator.finish(generations, Vec::new(), start.elapsed().as_secs_f64()))
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.total_cmp(&values[best]).is_lt() {
            best = i;
        }
    }
    best
}
