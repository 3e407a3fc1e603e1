use std::time::Instant;

use rand::Rng;

use super::{uniform_population, BaselineConfig};
use crate::evolution::{Evaluator, Objective, RunResult};
use crate::numerics::{Matrix, RngStream};
use crate::Result;

/// DE/rand/1/bin with greedy one-to-one replacement and clamping.
///
/// Per individual the stream yields, in order: `r1`, `r2`, `r3` (rejection
/// sampled), `j_rand`, then one uniform per gene.
pub fn run_de<O: Objective + ?Sized>(
    objective: &O,
    config: &BaselineConfig,
    rng: &mut RngStream,
) -> Result<RunResult> {
    config.validate()?;
    let pop = uniform_population(config.population, &config.lower, &config.upper, rng);
    run_de_from(objective, config, pop, rng)
}

pub(super) fn run_de_from<O: Objective + ?Sized>(
    objective: &O,
    config: &BaselineConfig,
    mut pop: Matrix,
    rng: &mut RngStream,
) -> Result<RunResult> {
    let start = Instant::now();
    let (n, d) = pop.shape();
    let mut evaluator = Evaluator::new(objective, config.budget);
    let mut fit = evaluator.evaluate_rows(pop.row_iter())?;
    let generations = config.generations();
    let mut trials = Matrix::zeros(n, d);

    for _ in 0..generations {
        for i in 0..n {
            let r1 = distinct_index(n, &[i], rng);
            let r2 = distinct_index(n, &[i, r1], rng);
            let r3 = distinct_index(n, &[i, r1, r2], rng);
            let j_rand = rng.random_range(0..d);
            for j in 0..d {
                let u: f64 = rng.random();
                let value = if u < config.de_crossover || j == j_rand {
                    pop[(r1, j)] + config.de_scale * (pop[(r2, j)] - pop[(r3, j)])
                } else {
                    pop[(i, j)]
                };
                trials.row_mut(i)[j] = value.clamp(config.lower[j], config.upper[j]);
            }
        }
        let trial_fit = evaluator.evaluate_rows(trials.row_iter())?;
        for i in 0..n {
            if trial_fit[i] <= fit[i] {
                pop.row_mut(i).copy_from_slice(trials.row(i));
                fit[i] = trial_fit[i];
            }
        }
    }
    Ok(evaluator.finish(generations, Vec::new(), start.elapsed().as_secs_f64()))
}

/// Uniform index in `0..n` not contained in `taken`.
fn distinct_index(n: usize, taken: &[usize], rng: &mut RngStream) -> usize {
    loop {
        let r = rng.random_range(0..n);
        if !taken.contains(&r) {
            return r;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::BaselineAlgorithm;
    use crate::benchmarks::{evaluate, FunctionId};

    fn config(n: usize, d: usize, budget: usize) -> BaselineConfig {
        let mut c = BaselineConfig::new(
            BaselineAlgorithm::DifferentialEvolution,
            vec![-5.0; d],
            vec![5.0; d],
            budget,
        );
        c.population = n;
        c
    }

    #[test]
    fn rejects_small_population() {
        let c = config(3, 2, 30);
        let f = |x: &[f64]| x[0];
        assert!(run_de(&f, &c, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn identical_population_stays_fixed() {
        let c = config(5, 3, 50);
        let pop = Matrix::from_rows(&vec![[1.0, -2.0, 0.5]; 5]).unwrap();
        let seen = std::sync::Mutex::new(Vec::new());
        let f = |x: &[f64]| {
            seen.lock().unwrap().push(x.to_vec());
            evaluate(FunctionId::Sphere, x)
        };
        run_de_from(&f, &c, pop, &mut RngStream::new(1, 0)).unwrap();
        assert!(seen.lock().unwrap().iter().all(|x| x == &[1.0, -2.0, 0.5]));
    }

    #[test]
    fn zero_scale_mutant_is_r1() {
        // CR = 1 makes the trial equal the mutant, which must be a population member
        let mut c = config(6, 2, 60);
        c.de_scale = 0.0;
        c.de_crossover = 1.0;
        let mut rng = RngStream::new(2, 0);
        let pop = uniform_population(6, &c.lower, &c.upper, &mut rng);
        let members: Vec<Vec<f64>> = pop.row_iter().map(<[f64]>::to_vec).collect();
        let seen = std::sync::Mutex::new(Vec::new());
        let f = |x: &[f64]| {
            seen.lock().unwrap().push(x.to_vec());
            x[0] * x[0] + x[1]
        };
        let mut c1 = c.clone();
        c1.budget = 12;
        run_de_from(&f, &c1, pop, &mut rng).unwrap();
        for trial in &seen.lock().unwrap()[6..] {
            assert!(members.contains(trial));
        }
    }

    /// Plain-vector replay of two generations with the same stream.
    #[test]
    fn matches_scripted_trace() {
        let (n, d) = (5, 2);
        let c = config(n, d, 15);
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * x[1] * x[1];
        let got = run_de(&f, &c, &mut RngStream::new(42, 7)).unwrap();

        let mut rng = RngStream::new(42, 7);
        let mut xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| -5.0 + 10.0 * rng.random::<f64>()).collect())
            .collect();
        let mut fs: Vec<f64> = xs.iter().map(|x| f(x)).collect();
        let mut trace = fs.clone();
        for _gen in 0..2 {
            let mut next = Vec::new();
            for i in 0..n {
                let mut r = [usize::MAX; 3];
                for k in 0..3 {
                    loop {
                        let cand = rng.random_range(0..n);
                        if cand != i && !r[..k].contains(&cand) {
                            r[k] = cand;
                            break;
                        }
                    }
                }
                let jr = rng.random_range(0..d);
                let mut u = xs[i].clone();
                for j in 0..d {
                    let p: f64 = rng.random();
                    if p < 0.5 || j == jr {
                        u[j] = (xs[r[0]][j] + 0.5 * (xs[r[1]][j] - xs[r[2]][j])).clamp(-5.0, 5.0);
                    }
                }
                next.push(u);
            }
            for i in 0..n {
                let fu = f(&next[i]);
                trace.push(fu);
                if fu <= fs[i] {
                    xs[i] = next[i].clone();
                    fs[i] = fu;
                }
            }
        }
        let mut best = f64::INFINITY;
        let expected: Vec<f64> = trace
            .iter()
            .map(|&v| {
                best = best.min(v);
                best
            })
            .collect();
        assert_eq!(got.best_so_far, expected);
        assert_eq!(got.best_fitness, fs.iter().cloned().fold(f64::INFINITY, f64::min));
        assert_eq!(got.generations, 2);
    }
}
