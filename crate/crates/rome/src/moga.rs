//! Multi-objective selection solver for a scheduling window.
//!
//! Each window job either starts now or stays queued, so a candidate
//! decision is a bit vector over the window. The solver maximizes the
//! per-dimension sums of selected demands subject to the free-capacity
//! constraints, and returns the Pareto front of feasible selections.
//!
//! Two routes are provided: an elitist non-dominated-sorting genetic
//! algorithm with an external archive ([`evolve`]), and exhaustive
//! enumeration for small windows ([`exact_front`]) used as its oracle.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policies::Window;

/// Hard ceiling on the solver time budget, seconds.
pub const MAX_TIME_BUDGET_SECS: f64 = 30.0;
/// Exhaustive enumeration refuses windows larger than this.
pub const EXACT_FRONT_MAX_WINDOW: usize = 20;

#[derive(Debug, Error)]
pub enum MogaError {
    #[error("window of {size} jobs exceeds the exact-enumeration guard of {max} (2^w candidates)")]
    WindowTooLarge { size: usize, max: usize },
    #[error("invalid GA parameters: {0}")]
    BadParams(String),
}

/// A candidate decision: which window jobs to start. `objectives[d]` is
/// the total demand the selection places on dimension `d`; `feasible`
/// means every objective fits in the free capacity it was evaluated
/// against.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub bits: Vec<bool>,
    pub objectives: Vec<f64>,
    pub feasible: bool,
}

impl Selection {
    /// Indices of selected window slots, ascending. Lexicographic order on
    /// this key prefers selections of higher-priority (earlier) slots and
    /// is the deterministic tie-break everywhere equal objective vectors
    /// must collapse to one representative.
    pub fn slot_key(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn selected_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Genetic algorithm knobs. `population_size` must be even and at least 4;
/// the time budget may not exceed [`MAX_TIME_BUDGET_SECS`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaParams {
    pub population_size: usize,
    pub max_generations: u32,
    pub crossover_probability: f64,
    /// Per-bit mutation probability; `None` means `1 / window_size`.
    pub mutation_probability_per_bit: Option<f64>,
    pub time_budget_secs: f64,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population_size: 64,
            max_generations: 128,
            crossover_probability: 0.9,
            mutation_probability_per_bit: None,
            time_budget_secs: 1.0,
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), MogaError> {
        if self.population_size < 4 || self.population_size % 2 != 0 {
            return Err(MogaError::BadParams(format!(
                "population size {} must be even and at least 4",
                self.population_size
            )));
        }
        if self.max_generations == 0 {
            return Err(MogaError::BadParams("max generations must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_probability) {
            return Err(MogaError::BadParams(format!(
                "crossover probability {} out of [0,1]",
                self.crossover_probability
            )));
        }
        if let Some(pm) = self.mutation_probability_per_bit {
            if !(0.0..=1.0).contains(&pm) {
                return Err(MogaError::BadParams(format!(
                    "mutation probability {pm} out of [0,1]"
                )));
            }
        }
        if !(self.time_budget_secs > 0.0) {
            return Err(MogaError::BadParams("time budget must be positive".into()));
        }
        if self.time_budget_secs > MAX_TIME_BUDGET_SECS {
            return Err(MogaError::BadParams(format!(
                "time budget {}s exceeds the {}s ceiling",
                self.time_budget_secs, MAX_TIME_BUDGET_SECS
            )));
        }
        Ok(())
    }
}

/// A set of feasible, mutually non-dominated selections, deduplicated by
/// objective vector and kept in canonical order (descending objectives,
/// dimension by dimension).
#[derive(Debug, Clone, Default)]
pub struct ParetoFront {
    members: Vec<Selection>,
}

impl ParetoFront {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn members(&self) -> &[Selection] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Offer a feasible selection to the front. Dominated offers are
    /// dropped; an offer with an already-present objective vector keeps
    /// whichever representative has the smaller slot key; otherwise the
    /// offer evicts every member it dominates.
    pub fn insert(&mut self, sel: Selection) -> bool {
        assert!(sel.feasible, "only feasible selections may enter a Pareto front");
        for member in &mut self.members {
            if member.objectives == sel.objectives {
                if sel.slot_key() < member.slot_key() {
                    *member = sel;
                }
                return true;
            }
            if dominates(&member.objectives, &sel.objectives) {
                return false;
            }
        }
        self.members.retain(|m| !dominates(&sel.objectives, &m.objectives));
        self.members.push(sel);
        true
    }

    /// Sort into canonical order: descending objective 0, then descending
    /// objective 1, and so on.
    pub fn canonicalize(&mut self) {
        self.members.sort_by(|a, b| {
            for (x, y) in a.objectives.iter().zip(&b.objectives) {
                match y.total_cmp(x) {
                    std::cmp::Ordering::Equal => continue,
                    other => return other,
                }
            }
            a.slot_key().cmp(&b.slot_key())
        });
    }

    /// Objective vectors in canonical order.
    pub fn objective_vectors(&self) -> Vec<Vec<f64>> {
        self.members.iter().map(|m| m.objectives.clone()).collect()
    }
}

/// Score a bit vector against a window snapshot: per-dimension demand sums
/// and the feasibility flag. Panics if the bit vector and window disagree
/// on length.
pub fn evaluate(bits: &[bool], window: &Window, free: &[f64]) -> Selection {
    assert_eq!(bits.len(), window.len(), "selection length must match window size");
    let mut objectives = vec![0.0; free.len()];
    for (&bit, job) in bits.iter().zip(&window.jobs) {
        if bit {
            debug_assert_eq!(job.demand.len(), free.len());
            for (o, &need) in objectives.iter_mut().zip(&job.demand) {
                *o += need;
            }
        }
    }
    let feasible = objectives.iter().zip(free).all(|(o, f)| o <= f);
    Selection { bits: bits.to_vec(), objectives, feasible }
}

/// Make a selection feasible by clearing set bits from the window tail
/// (lowest base-policy priority first) until every constraint holds.
/// Feasible inputs come back unchanged.
pub fn repair(bits: &[bool], window: &Window, free: &[f64]) -> Vec<bool> {
    assert_eq!(bits.len(), window.len(), "selection length must match window size");
    let mut bits = bits.to_vec();
    let mut sums = vec![0.0; free.len()];
    for (&bit, job) in bits.iter().zip(&window.jobs) {
        if bit {
            for (s, &need) in sums.iter_mut().zip(&job.demand) {
                *s += need;
            }
        }
    }
    let infeasible = |sums: &[f64]| sums.iter().zip(free).any(|(s, f)| s > f);
    for i in (0..bits.len()).rev() {
        if !infeasible(&sums) {
            break;
        }
        if bits[i] {
            bits[i] = false;
            for (s, &need) in sums.iter_mut().zip(&window.jobs[i].demand) {
                *s -= need;
            }
        }
    }
    bits
}

/// Pareto dominance, maximization sense: `a` is at least as good
/// everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    assert_eq!(a.len(), b.len(), "objective vectors must have equal length");
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// Fast non-dominated sorting. Front 0 is the maximal non-dominated set;
/// each later front is non-dominated once earlier fronts are removed.
/// Indices within a front stay in input order.
pub fn nondominated_sort(population: &[Selection]) -> Vec<Vec<usize>> {
    let n = population.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&population[i].objectives, &population[j].objectives) {
                dominated_by[i].push(j);
                domination_count[j] += 1;
            } else if dominates(&population[j].objectives, &population[i].objectives) {
                dominated_by[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::take(&mut current));
        current = next;
    }
    fronts
}

/// Crowding distance over a mutually non-dominated front. Duplicate
/// objective vectors are collapsed first and share their representative's
/// distance; per-objective boundary points get infinity; interior points
/// accumulate the normalized gap between their neighbors.
pub fn crowding_distance(front: &[Selection]) -> Vec<f64> {
    let n = front.len();
    if n == 0 {
        return Vec::new();
    }
    // Collapse duplicates: representative index per distinct vector.
    let mut unique: Vec<usize> = Vec::new();
    let mut rep_of = vec![0usize; n];
    for i in 0..n {
        match unique.iter().position(|&u| front[u].objectives == front[i].objectives) {
            Some(pos) => rep_of[i] = pos,
            None => {
                rep_of[i] = unique.len();
                unique.push(i);
            }
        }
    }
    let m = unique.len();
    let mut dist = vec![0.0f64; m];
    if m <= 2 {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        return rep_of.into_iter().map(|r| dist[r]).collect();
    }
    let dims = front[unique[0]].objectives.len();
    for d in 0..dims {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            let (oa, ob) = (&front[unique[a]].objectives, &front[unique[b]].objectives);
            oa[d].total_cmp(&ob[d]).then_with(|| {
                // Distinct vectors tied in this dimension: order by the
                // full vector so the sweep stays deterministic.
                oa.iter()
                    .zip(ob)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|c| *c != std::cmp::Ordering::Equal)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        let lo = front[unique[order[0]]].objectives[d];
        let hi = front[unique[order[m - 1]]].objectives[d];
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        for k in 1..m - 1 {
            let prev = front[unique[order[k - 1]]].objectives[d];
            let next = front[unique[order[k + 1]]].objectives[d];
            dist[order[k]] += (next - prev) / range;
        }
    }
    rep_of.into_iter().map(|r| dist[r]).collect()
}

/// Greedy policy-order prefix fill: walk the window in order and take
/// every job that still fits. Seeds the GA so its front never falls below
/// plain prefix scheduling.
fn greedy_prefix(window: &Window, free: &[f64]) -> Vec<bool> {
    let mut bits = vec![false; window.len()];
    let mut sums = vec![0.0; free.len()];
    for (i, job) in window.jobs.iter().enumerate() {
        let fits = sums
            .iter()
            .zip(&job.demand)
            .zip(free)
            .all(|((s, &need), f)| s + need <= *f);
        if fits {
            bits[i] = true;
            for (s, &need) in sums.iter_mut().zip(&job.demand) {
                *s += need;
            }
        }
    }
    bits
}

fn eval_all(genomes: &[Vec<bool>], window: &Window, free: &[f64], threads: usize) -> Vec<Selection> {
    if threads <= 1 || genomes.len() < 2 * threads {
        return genomes.iter().map(|g| evaluate(g, window, free)).collect();
    }
    let chunk = genomes.len().div_ceil(threads);
    let mut out: Vec<Option<Selection>> = vec![None; genomes.len()];
    std::thread::scope(|scope| {
        for (slots, chunk_genomes) in out.chunks_mut(chunk).zip(genomes.chunks(chunk)) {
            scope.spawn(move || {
                for (slot, genome) in slots.iter_mut().zip(chunk_genomes) {
                    *slot = Some(evaluate(genome, window, free));
                }
            });
        }
    });
    out.into_iter().map(|s| s.expect("all evaluation slots filled")).collect()
}

/// Binary tournament on (rank, crowding distance); lower rank wins, then
/// larger crowding, then the earlier population index.
fn tournament(rng: &mut ChaCha8Rng, rank: &[usize], crowd: &[f64]) -> usize {
    let a = rng.gen_range(0..rank.len());
    let b = rng.gen_range(0..rank.len());
    let better = |i: usize, j: usize| match rank[i].cmp(&rank[j]) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => match crowd[i].total_cmp(&crowd[j]) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => i <= j,
        },
    };
    if better(a, b) {
        a
    } else {
        b
    }
}

fn uniform_crossover(
    rng: &mut ChaCha8Rng,
    a: &[bool],
    b: &[bool],
) -> (Vec<bool>, Vec<bool>) {
    let mut c1 = Vec::with_capacity(a.len());
    let mut c2 = Vec::with_capacity(a.len());
    for (&x, &y) in a.iter().zip(b) {
        if rng.gen_bool(0.5) {
            c1.push(x);
            c2.push(y);
        } else {
            c1.push(y);
            c2.push(x);
        }
    }
    (c1, c2)
}

fn mutate(rng: &mut ChaCha8Rng, bits: &mut [bool], per_bit: f64) {
    for bit in bits.iter_mut() {
        if rng.gen_bool(per_bit) {
            *bit = !*bit;
        }
    }
}

/// Rank-then-crowding survivor selection over a combined population.
fn select_survivors(mut combined: Vec<Selection>, target: usize) -> Vec<Selection> {
    let fronts = nondominated_sort(&combined);
    let mut keep: Vec<usize> = Vec::with_capacity(target);
    for front in fronts {
        if keep.len() + front.len() <= target {
            keep.extend(front);
            if keep.len() == target {
                break;
            }
        } else {
            let sels: Vec<Selection> = front.iter().map(|&i| combined[i].clone()).collect();
            let crowd = crowding_distance(&sels);
            let mut by_crowd: Vec<usize> = (0..front.len()).collect();
            by_crowd.sort_by(|&a, &b| {
                crowd[b].total_cmp(&crowd[a]).then_with(|| front[a].cmp(&front[b]))
            });
            keep.extend(by_crowd.into_iter().take(target - keep.len()).map(|k| front[k]));
            break;
        }
    }
    keep.sort_unstable();
    let mut keep_iter = keep.into_iter().peekable();
    let mut survivors = Vec::with_capacity(target);
    for (i, sel) in combined.drain(..).enumerate() {
        if keep_iter.peek() == Some(&i) {
            keep_iter.next();
            survivors.push(sel);
        }
    }
    survivors
}

/// Single-threaded [`evolve_with_threads`].
pub fn evolve(window: &Window, free: &[f64], params: &GaParams) -> ParetoFront {
    evolve_with_threads(window, free, params, 1)
}

/// Evolve the window-selection population and return the non-dominated
/// set of every feasible individual ever evaluated.
///
/// The initial population holds the all-zero selection, the greedy
/// prefix fill, and repaired random bit vectors. Each generation runs
/// binary-tournament parent selection, uniform crossover, per-bit
/// mutation and tail-first repair, then rank/crowding survivor selection.
/// Terminates at `max_generations` or when the time budget elapses,
/// whichever comes first.
///
/// All randomness is drawn on the caller's thread in a fixed order, so
/// the result depends only on `(window, free, params)` and never on
/// `threads`.
pub fn evolve_with_threads(
    window: &Window,
    free: &[f64],
    params: &GaParams,
    threads: usize,
) -> ParetoFront {
    params.validate().expect("GA parameters must be validated before evolve");
    let started = Instant::now();
    let budget = Duration::from_secs_f64(params.time_budget_secs);
    let n = window.len();
    let mut archive = ParetoFront::new();
    if n == 0 {
        archive.insert(evaluate(&[], window, free));
        archive.canonicalize();
        return archive;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let per_bit = params
        .mutation_probability_per_bit
        .unwrap_or(1.0 / n as f64);

    let mut genomes: Vec<Vec<bool>> = Vec::with_capacity(params.population_size);
    genomes.push(vec![false; n]);
    genomes.push(greedy_prefix(window, free));
    while genomes.len() < params.population_size {
        let random: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        genomes.push(repair(&random, window, free));
    }
    let mut population = eval_all(&genomes, window, free, threads);
    for sel in &population {
        archive.insert(sel.clone());
    }

    for _ in 0..params.max_generations {
        if started.elapsed() >= budget {
            break;
        }
        let fronts = nondominated_sort(&population);
        let mut rank = vec![0usize; population.len()];
        let mut crowd = vec![0.0f64; population.len()];
        for (r, front) in fronts.iter().enumerate() {
            let sels: Vec<Selection> = front.iter().map(|&i| population[i].clone()).collect();
            let dist = crowding_distance(&sels);
            for (k, &i) in front.iter().enumerate() {
                rank[i] = r;
                crowd[i] = dist[k];
            }
        }

        let mut offspring_genomes = Vec::with_capacity(params.population_size);
        while offspring_genomes.len() < params.population_size {
            let a = tournament(&mut rng, &rank, &crowd);
            let b = tournament(&mut rng, &rank, &crowd);
            let (mut c1, mut c2) = if rng.gen_bool(params.crossover_probability) {
                uniform_crossover(&mut rng, &population[a].bits, &population[b].bits)
            } else {
                (population[a].bits.clone(), population[b].bits.clone())
            };
            mutate(&mut rng, &mut c1, per_bit);
            mutate(&mut rng, &mut c2, per_bit);
            offspring_genomes.push(repair(&c1, window, free));
            offspring_genomes.push(repair(&c2, window, free));
        }
        let offspring = eval_all(&offspring_genomes, window, free, threads);
        for sel in &offspring {
            archive.insert(sel.clone());
        }
        let mut combined = population;
        combined.extend(offspring);
        population = select_survivors(combined, params.population_size);
    }

    archive.canonicalize();
    archive
}

/// Enumerate all `2^w` selections and return the exact Pareto front.
/// Refuses windows larger than [`EXACT_FRONT_MAX_WINDOW`].
pub fn exact_front(window: &Window, free: &[f64]) -> Result<ParetoFront, MogaError> {
    let n = window.len();
    if n > EXACT_FRONT_MAX_WINDOW {
        return Err(MogaError::WindowTooLarge { size: n, max: EXACT_FRONT_MAX_WINDOW });
    }
    let mut front = ParetoFront::new();
    for mask in 0u64..(1u64 << n) {
        let bits: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let sel = evaluate(&bits, window, free);
        if sel.feasible {
            front.insert(sel);
        }
    }
    front.canonicalize();
    Ok(front)
}

/// Exact hypervolume of a 2-D front: the area between the reference point
/// and the union of dominated boxes, swept in canonical order. Panics on
/// non-2-D input or when a front point falls below the reference in any
/// dimension.
pub fn hypervolume_2d(front: &ParetoFront, reference: &[f64]) -> f64 {
    assert_eq!(reference.len(), 2, "hypervolume_2d needs exactly 2 objective dimensions");
    let mut members: Vec<&Selection> = front.members().iter().collect();
    members.sort_by(|a, b| b.objectives[0].total_cmp(&a.objectives[0]));
    let mut area = 0.0;
    let mut covered_y = reference[1];
    for sel in members {
        assert_eq!(sel.objectives.len(), 2, "hypervolume_2d needs exactly 2 objective dimensions");
        assert!(
            sel.objectives.iter().zip(reference).all(|(o, r)| o >= r),
            "front point below the hypervolume reference"
        );
        if sel.objectives[1] > covered_y {
            area += (sel.objectives[0] - reference[0]) * (sel.objectives[1] - covered_y);
            covered_y = sel.objectives[1];
        }
    }
    area
}
