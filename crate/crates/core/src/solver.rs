//! Configuration search: a generational genetic algorithm with stochastic
//! uniform selection, heuristic crossover, Gaussian mutation and a
//! stall-based termination rule, plus an exhaustive grid-search baseline.
//!
//! Genotypes are real-valued triplets normalized to the unit cube; the
//! declared binary encoding of the source algorithm is incompatible with
//! its own (real-coded, toolbox-style) operators, so real coding is used
//! throughout. Decoding is linear onto the decision box, whose BS-density
//! axis is capped by the users-per-BS floor.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::Normal;

use crate::config::ScenarioConfig;
use crate::objective::{
    self, DecisionVector, Evaluation, PenaltyWeights,
};

/// Genetic algorithm controls.
#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    /// Population size n.
    pub population: usize,
    /// Generation limit m.
    pub max_generations: usize,
    /// Stall window i (generations).
    pub stall_window: usize,
    /// Stall threshold on the windowed relative change.
    pub stall_tol: f64,
    /// Heuristic crossover step beyond the better parent.
    pub crossover_ratio: f64,
    /// Fraction of non-elite offspring produced by crossover; the rest are
    /// mutants.
    pub crossover_fraction: f64,
    /// Gaussian mutation scale at generation 0, as a fraction of the
    /// normalized box width.
    pub mutation_sigma_start: f64,
    /// Mutation scale reached at the generation limit.
    pub mutation_sigma_end: f64,
    pub elite_count: usize,
    pub seed: u64,
    /// Which dispersion statistic drives the stall rule.
    pub stall_metric: StallMetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StallMetric {
    /// Standard deviation of population fitness.
    Spread,
    /// Relative change of the best fitness.
    BestChange,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 100,
            max_generations: 150,
            stall_window: 10,
            stall_tol: 1e-6,
            crossover_ratio: 1.9,
            crossover_fraction: 0.8,
            mutation_sigma_start: 0.1,
            mutation_sigma_end: 0.01,
            elite_count: 1,
            seed: 0,
            stall_metric: StallMetric::Spread,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Stall,
    MaxGen,
    Exhaustive,
}

/// Per-generation statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenStats {
    pub best: f64,
    pub mean: f64,
    pub spread: f64,
}

/// Outcome of a search over the decision box.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub best: DecisionVector,
    pub best_fitness: f64,
    /// Objective at the best point (W/m^2); equals the fitness when the
    /// point is feasible.
    pub best_objective: f64,
    pub evaluation: Option<Evaluation>,
    pub generations: usize,
    pub trace: Vec<GenStats>,
    pub termination: Termination,
    /// Fitness evaluations spent.
    pub evals: usize,
}

/// Decision box: transmit power, BS density (capped by the users-per-BS
/// floor), split factor.
pub fn decision_box(cfg: &ScenarioConfig) -> ([f64; 3], [f64; 3]) {
    let p = &cfg.population;
    let mut lambda_cap = p.lambda_b_max;
    if p.min_users_per_bs > 0.0 {
        lambda_cap = lambda_cap.min(p.lambda_u / p.min_users_per_bs);
    }
    // The density axis is open at zero; three decades below the cap covers
    // every regime the QoS constraints can accept.
    let lambda_lo = lambda_cap * 1e-3;
    (
        [cfg.radio.tx_power_min_w, lambda_lo, 0.0],
        [cfg.radio.tx_power_max_w, lambda_cap, 1.0],
    )
}

pub fn decode(cfg: &ScenarioConfig, genome: &[f64; 3]) -> DecisionVector {
    let (lo, hi) = decision_box(cfg);
    DecisionVector {
        tx_power_w: lo[0] + genome[0] * (hi[0] - lo[0]),
        lambda_b: lo[1] + genome[1] * (hi[1] - lo[1]),
        split: lo[2] + genome[2] * (hi[2] - lo[2]),
    }
}

/// Raw GA run over the normalized unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct GaRun {
    pub best_genome: [f64; 3],
    pub best_fitness: f64,
    pub generations: usize,
    pub trace: Vec<GenStats>,
    pub termination: Termination,
    pub evals: usize,
}

fn population_stats(fitness: &[f64]) -> GenStats {
    let n = fitness.len() as f64;
    let best = fitness.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = fitness.iter().sum::<f64>() / n;
    let var = fitness.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / n;
    GenStats {
        best,
        mean,
        spread: var.sqrt(),
    }
}

/// Stochastic uniform selection of `count` parents over linear rank scaling.
fn select_parents(fitness: &[f64], count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = fitness.len();
    // rank 0 = best (minimization); scaled expectation n..1 linear in rank.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
    let mut scaled = vec![0.0; n];
    for (rank, &idx) in order.iter().enumerate() {
        scaled[idx] = (n - rank) as f64;
    }
    let total: f64 = scaled.iter().sum();
    let step = total / count as f64;
    let start: f64 = rng.gen::<f64>() * step;
    let mut picks = Vec::with_capacity(count);
    let mut cursor = 0usize;
    let mut acc = scaled[0];
    for k in 0..count {
        let pointer = start + step * k as f64;
        while acc < pointer && cursor + 1 < n {
            cursor += 1;
            acc += scaled[cursor];
        }
        picks.push(cursor);
    }
    // Decouple mating order from fitness rank.
    picks.shuffle(rng);
    picks
}

fn heuristic_crossover(
    better: &[f64; 3],
    worse: &[f64; 3],
    ratio: f64,
) -> [f64; 3] {
    let mut child = [0.0; 3];
    for i in 0..3 {
        child[i] = (worse[i] + ratio * (better[i] - worse[i])).clamp(0.0, 1.0);
    }
    child
}

/// Minimize a fitness over the unit cube with the configured GA.
pub fn ga_minimize<F>(fitness_fn: F, ga: &GaConfig) -> GaRun
where
    F: Fn(&[f64; 3]) -> f64 + Sync,
{
    assert!(ga.population >= 2, "population must hold at least 2 individuals");
    assert!(ga.elite_count < ga.population);
    let n = ga.population;
    let normal = Normal::new(0.0, 1.0).unwrap();

    let eval_all = |genomes: &[[f64; 3]]| -> Vec<f64> {
        genomes.par_iter().map(|g| fitness_fn(g)).collect()
    };

    // Generation 0: uniform in the cube.
    let mut rng = ChaCha8Rng::seed_from_u64(ga.seed);
    let mut genomes: Vec<[f64; 3]> = (0..n)
        .map(|_| [rng.gen(), rng.gen(), rng.gen()])
        .collect();
    let mut fitness = eval_all(&genomes);
    let mut evals = n;

    let mut trace = vec![population_stats(&fitness)];
    let mut best_genome;
    let mut best_fitness;
    {
        let (i, _) = fitness
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.total_cmp(b))
            .unwrap();
        best_genome = genomes[i];
        best_fitness = fitness[i];
    }
    let mut gens_without_improvement = 0usize;
    let mut termination = Termination::MaxGen;
    let mut generation = 0usize;

    while generation + 1 < ga.max_generations {
        generation += 1;
        // Reseeded per generation so parallel evaluation order cannot
        // perturb the stream.
        let mut gen_rng = ChaCha8Rng::seed_from_u64(
            ga.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(generation as u64)),
        );

        let n_children = n - ga.elite_count;
        let n_cross = ((ga.crossover_fraction * n_children as f64).round() as usize).min(n_children);
        let n_mut = n_children - n_cross;
        let parents = select_parents(&fitness, 2 * n_cross + n_mut, &mut gen_rng);

        let sigma = ga.mutation_sigma_start
            + (ga.mutation_sigma_end - ga.mutation_sigma_start) * generation as f64
                / (ga.max_generations.max(2) - 1) as f64;

        let mut children: Vec<[f64; 3]> = Vec::with_capacity(n_children);
        for c in 0..n_cross {
            let (pa, pb) = (parents[2 * c], parents[2 * c + 1]);
            let (better, worse) = if fitness[pa] <= fitness[pb] {
                (pa, pb)
            } else {
                (pb, pa)
            };
            children.push(heuristic_crossover(
                &genomes[better],
                &genomes[worse],
                ga.crossover_ratio,
            ));
        }
        for m in 0..n_mut {
            let base = genomes[parents[2 * n_cross + m]];
            let mut child = [0.0; 3];
            for i in 0..3 {
                let noise: f64 = normal.sample(&mut gen_rng);
                child[i] = (base[i] + sigma * noise).clamp(0.0, 1.0);
            }
            children.push(child);
        }

        let child_fitness = eval_all(&children);
        evals += children.len();

        // Elites survive unchanged (fitness carried over, not re-evaluated);
        // children replace everyone else.
        let mut elite_idx: Vec<usize> = (0..n).collect();
        elite_idx.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
        elite_idx.truncate(ga.elite_count);
        let mut next_genomes = Vec::with_capacity(n);
        let mut next_fitness = Vec::with_capacity(n);
        for &e in &elite_idx {
            next_genomes.push(genomes[e]);
            next_fitness.push(fitness[e]);
        }
        next_genomes.extend(children);
        next_fitness.extend(child_fitness);
        genomes = next_genomes;
        fitness = next_fitness;

        let stats = population_stats(&fitness);
        trace.push(stats);

        let (i, _) = fitness
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.total_cmp(b))
            .unwrap();
        if fitness[i] < best_fitness {
            best_fitness = fitness[i];
            best_genome = genomes[i];
            gens_without_improvement = 0;
        } else {
            gens_without_improvement += 1;
        }

        // Termination: the stall rule on the dispersion statistic, or no
        // improvement of the archived best across the stall window.
        if gens_without_improvement >= ga.stall_window {
            termination = Termination::Stall;
            break;
        }
        if stalled(&trace, ga) {
            termination = Termination::Stall;
            break;
        }
    }

    GaRun {
        best_genome,
        best_fitness,
        generations: generation + 1,
        trace,
        termination,
        evals,
    }
}

/// Windowed stall test: the geometric mean of the relative change of the
/// dispersion statistic over the stall window falls below the threshold,
/// and the final value sits below the window mean.
fn stalled(trace: &[GenStats], ga: &GaConfig) -> bool {
    let w = ga.stall_window;
    if trace.len() < w + 1 {
        return false;
    }
    let metric = |s: &GenStats| match ga.stall_metric {
        StallMetric::Spread => s.spread,
        StallMetric::BestChange => s.best,
    };
    let tail = &trace[trace.len() - (w + 1)..];
    let mut log_sum = 0.0;
    for pair in tail.windows(2) {
        let prev = metric(&pair[0]);
        let cur = metric(&pair[1]);
        let rel = (cur - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
        log_sum += rel.max(1e-300).ln();
    }
    let geo_mean = (log_sum / w as f64).exp();
    if geo_mean >= ga.stall_tol {
        return false;
    }
    match ga.stall_metric {
        StallMetric::Spread => {
            let last = metric(tail.last().unwrap());
            let mean_prev = tail[..w].iter().map(metric).sum::<f64>() / w as f64;
            last < mean_prev || (last == 0.0 && mean_prev == 0.0)
        }
        StallMetric::BestChange => true,
    }
}

/// GA search over the scenario's decision box.
pub fn ga_optimize(
    base: &ScenarioConfig,
    ga: &GaConfig,
    weights: &PenaltyWeights,
) -> OptimizationResult {
    let run = ga_minimize(
        |genome| objective::fitness_or_penalty(base, &decode(base, genome), weights).0,
        ga,
    );
    let best = decode(base, &run.best_genome);
    finalize(base, best, run.best_fitness, run.generations, run.trace, run.termination, run.evals)
}

fn finalize(
    base: &ScenarioConfig,
    best: DecisionVector,
    best_fitness: f64,
    generations: usize,
    trace: Vec<GenStats>,
    termination: Termination,
    evals: usize,
) -> OptimizationResult {
    let evaluation = objective::evaluate_decision(base, &best).ok();
    let best_objective = evaluation
        .as_ref()
        .map(|e| e.report.objective)
        .unwrap_or(f64::INFINITY);
    OptimizationResult {
        best,
        best_fitness,
        best_objective,
        evaluation,
        generations,
        trace,
        termination,
        evals,
    }
}

/// Grid resolution per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSteps {
    pub power: usize,
    pub lambda: usize,
    pub split: usize,
}

impl Default for GridSteps {
    fn default() -> Self {
        GridSteps {
            power: 20,
            lambda: 20,
            split: 20,
        }
    }
}

/// Exhaustive search on the Cartesian grid over the decision box (endpoints
/// included). Returns the best feasible point by objective, or the best
/// point by fitness when nothing is feasible. Fully deterministic.
pub fn grid_search(
    base: &ScenarioConfig,
    steps: &GridSteps,
    weights: &PenaltyWeights,
) -> OptimizationResult {
    assert!(
        steps.power >= 2 && steps.lambda >= 2 && steps.split >= 2,
        "need at least 2 steps per axis"
    );
    let (lo, hi) = decision_box(base);
    let axis = |k: usize, n: usize, lo: f64, hi: f64| lo + (hi - lo) * k as f64 / (n - 1) as f64;
    let total = steps.power * steps.lambda * steps.split;

    let evaluated: Vec<(f64, Option<Evaluation>)> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let ip = flat / (steps.lambda * steps.split);
            let il = (flat / steps.split) % steps.lambda;
            let is = flat % steps.split;
            let dv = DecisionVector {
                tx_power_w: axis(ip, steps.power, lo[0], hi[0]),
                lambda_b: axis(il, steps.lambda, lo[1], hi[1]),
                split: axis(is, steps.split, lo[2], hi[2]),
            };
            objective::fitness_or_penalty(base, &dv, weights)
        })
        .collect();

    let mut best_idx = 0usize;
    let mut best_key = f64::INFINITY;
    let mut any_feasible = false;
    for (i, (fit, eval)) in evaluated.iter().enumerate() {
        let feasible = eval.as_ref().map(|e| e.report.feasible).unwrap_or(false);
        if feasible && !any_feasible {
            any_feasible = true;
            best_key = f64::INFINITY;
        }
        let key = if any_feasible {
            if !feasible {
                continue;
            }
            eval.as_ref().unwrap().report.objective
        } else {
            *fit
        };
        if key < best_key {
            best_key = key;
            best_idx = i;
        }
    }

    let ip = best_idx / (steps.lambda * steps.split);
    let il = (best_idx / steps.split) % steps.lambda;
    let is = best_idx % steps.split;
    let best = DecisionVector {
        tx_power_w: axis(ip, steps.power, lo[0], hi[0]),
        lambda_b: axis(il, steps.lambda, lo[1], hi[1]),
        split: axis(is, steps.split, lo[2], hi[2]),
    };
    let mut result = finalize(
        base,
        best,
        evaluated[best_idx].0,
        1,
        Vec::new(),
        Termination::Exhaustive,
        total,
    );
    if !any_feasible {
        // Best-by-fitness: objective may be meaningless; keep it but flag
        // through the evaluation's feasibility report.
        result.best_fitness = evaluated[best_idx].0;
    }
    result
}

/// Count fitness evaluations and mean evaluation time of a GA run.
#[derive(Debug, Clone, Copy)]
pub struct ComplexityReport {
    pub evals: usize,
    pub wall_time_per_eval_s: f64,
    pub generations: usize,
    pub termination: Termination,
}

pub fn complexity_probe(
    base: &ScenarioConfig,
    ga: &GaConfig,
    weights: &PenaltyWeights,
) -> (OptimizationResult, ComplexityReport) {
    use std::sync::atomic::{AtomicU64, Ordering};
    let nanos = AtomicU64::new(0);
    let count = AtomicU64::new(0);
    let run = ga_minimize(
        |genome| {
            let t0 = std::time::Instant::now();
            let v = objective::fitness_or_penalty(base, &decode(base, genome), weights).0;
            nanos.fetch_add(t0.elapsed().as_nanos() as u64, Ordering::Relaxed);
            count.fetch_add(1, Ordering::Relaxed);
            v
        },
        ga,
    );
    let best = decode(base, &run.best_genome);
    let evals = count.load(Ordering::Relaxed) as usize;
    assert!(
        evals <= ga.max_generations * ga.population,
        "evaluation budget exceeded: {evals} > {}",
        ga.max_generations * ga.population
    );
    let report = ComplexityReport {
        evals,
        wall_time_per_eval_s: nanos.load(Ordering::Relaxed) as f64 / 1e9 / evals.max(1) as f64,
        generations: run.generations,
        termination: run.termination,
    };
    let result = finalize(
        base,
        best,
        run.best_fitness,
        run.generations,
        run.trace,
        run.termination,
        run.evals,
    );
    (result, report)
}
