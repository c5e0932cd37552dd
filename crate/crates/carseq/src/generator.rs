//! Seeded generation of the fourteen benchmark instance families.
//!
//! Every family fixes an option count, a class count, integer ranges for
//! the window rules, a bias mode for the car-to-class assignment, a
//! class-population mode and a per-option utilisation band. Class option
//! vectors are sampled as Bernoulli vectors (option `j` included with a
//! probability proportional to `p[j]/q[j]`), rejecting duplicates and the
//! all-zero vector until the required number of distinct vectors exists.
//! Utilisation bands are enforced by rejection: class populations are
//! redrawn first, then the whole instance (vectors and window rules), until
//! every option lands inside the band.
//!
//! Generation is deterministic given the spec: one seeded stream drives
//! every draw, and suite seeds derive from the base seed and instance name.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::core::Instance;
use crate::features::min_accommodating_length;
use crate::seeding::derive_seed;

/// Identifier of the generation procedure, embedded in config digests so
/// regenerated suites are distinguishable from older ones.
pub const GENERATOR_VERSION: &str = "carseq-gen-chacha8-v1";

/// The fourteen instance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Nobhiu,
    Negbhiu,
    Posbhiu,
    Hipqhiu,
    Hipqmedu,
    Negbhipqlou,
    Lopq820,
    Negbfixedpq,
    RandN,
    Rlou,
    Ranyu10o,
    Rnegbvlou10o,
    Rnegbhipqvlou10o,
    Rnegblopqvlou10o,
}

impl Family {
    pub const ALL: [Family; 14] = [
        Family::Nobhiu,
        Family::Negbhiu,
        Family::Posbhiu,
        Family::Hipqhiu,
        Family::Hipqmedu,
        Family::Negbhipqlou,
        Family::Lopq820,
        Family::Negbfixedpq,
        Family::RandN,
        Family::Rlou,
        Family::Ranyu10o,
        Family::Rnegbvlou10o,
        Family::Rnegbhipqvlou10o,
        Family::Rnegblopqvlou10o,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Nobhiu => "nobhiu",
            Family::Negbhiu => "negbhiu",
            Family::Posbhiu => "posbhiu",
            Family::Hipqhiu => "hipqhiu",
            Family::Hipqmedu => "hipqmedu",
            Family::Negbhipqlou => "negbhipqlou",
            Family::Lopq820 => "lopq820",
            Family::Negbfixedpq => "negbfixedpq",
            Family::RandN => "randN",
            Family::Rlou => "Rlou",
            Family::Ranyu10o => "Ranyu10o",
            Family::Rnegbvlou10o => "Rnegbvlou10o",
            Family::Rnegbhipqvlou10o => "Rnegbhipqvlou10o",
            Family::Rnegblopqvlou10o => "Rnegblopqvlou10o",
        }
    }

    pub fn parse(text: &str) -> Option<Family> {
        Family::ALL.iter().copied().find(|f| f.name().eq_ignore_ascii_case(text))
    }

    pub fn params(self) -> FamilyParams {
        // The shared defaults: 5 options, 25 classes, 1 <= p <= 3,
        // 1 <= q - p <= 2, per-car uniform class assignment.
        let base = FamilyParams {
            options: 5,
            classes: 25,
            p_range: (1, 3),
            qp_range: (1, 2),
            fixed_pq: None,
            band: Band::inclusive(0.90, 1.00),
            bias: Bias::None,
            population: Population::PerCarUniform,
            inclusion_scale: 1.0,
        };
        match self {
            Family::Nobhiu => base,
            Family::Negbhiu => FamilyParams {
                bias: Bias::Negative,
                // Negative bias drains demand from option-heavy classes, so
                // the proposal over-includes options to keep high
                // utilisation reachable.
                inclusion_scale: 1.12,
                ..base
            },
            Family::Posbhiu => FamilyParams { bias: Bias::Positive, inclusion_scale: 0.8, ..base },
            Family::Hipqhiu => FamilyParams { p_range: (2, 4), ..base },
            Family::Hipqmedu => FamilyParams {
                p_range: (2, 4),
                band: Band::inclusive(0.70, 0.80),
                inclusion_scale: 0.75,
                ..base
            },
            Family::Negbhipqlou => FamilyParams {
                p_range: (2, 4),
                band: Band::inclusive(0.50, 0.60),
                bias: Bias::Negative,
                inclusion_scale: 0.8,
                ..base
            },
            Family::Lopq820 => FamilyParams {
                options: 8,
                classes: 20,
                p_range: (1, 2),
                qp_range: (2, 3),
                band: Band::upper_only(1.00),
                ..base
            },
            Family::Negbfixedpq => FamilyParams {
                fixed_pq: Some((vec![3, 2, 1, 2, 1], vec![4, 3, 4, 5, 2])),
                band: Band::upper_only(1.00),
                bias: Bias::Negative,
                ..base
            },
            Family::RandN => FamilyParams { population: Population::RandomComposition, ..base },
            Family::Rlou => FamilyParams {
                population: Population::RandomComposition,
                band: Band::lower_only(0.50),
                ..base
            },
            Family::Ranyu10o => FamilyParams {
                options: 10,
                population: Population::RandomComposition,
                band: Band::unrestricted(),
                ..base
            },
            Family::Rnegbvlou10o => FamilyParams {
                options: 10,
                population: Population::RandomComposition,
                bias: Bias::Negative,
                band: Band::very_low(),
                inclusion_scale: 0.62,
                ..base
            },
            Family::Rnegbhipqvlou10o => FamilyParams {
                options: 10,
                p_range: (2, 4),
                population: Population::RandomComposition,
                bias: Bias::Negative,
                band: Band::very_low(),
                inclusion_scale: 0.6,
                ..base
            },
            Family::Rnegblopqvlou10o => FamilyParams {
                options: 10,
                p_range: (1, 2),
                qp_range: (2, 3),
                population: Population::RandomComposition,
                bias: Bias::Negative,
                band: Band::very_low(),
                inclusion_scale: 0.58,
                ..base
            },
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-option utilisation band, with inclusive or strict ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub lo_strict: bool,
    pub hi_strict: bool,
}

/// Floor applied to "very low utilisation" families so options do not
/// degenerate to near-empty.
pub const VERY_LOW_FLOOR: f64 = 0.30;

impl Band {
    pub fn inclusive(lo: f64, hi: f64) -> Self {
        Band { lo, hi, lo_strict: false, hi_strict: false }
    }

    /// No lower bound; utilisation at most `hi`.
    pub fn upper_only(hi: f64) -> Self {
        Band { lo: 0.0, hi, lo_strict: false, hi_strict: false }
    }

    /// Strictly above `lo`, no upper bound.
    pub fn lower_only(lo: f64) -> Self {
        Band { lo, hi: f64::INFINITY, lo_strict: true, hi_strict: false }
    }

    pub fn unrestricted() -> Self {
        Band { lo: 0.0, hi: f64::INFINITY, lo_strict: false, hi_strict: false }
    }

    /// Strictly below 0.60, floored at [`VERY_LOW_FLOOR`].
    pub fn very_low() -> Self {
        Band { lo: VERY_LOW_FLOOR, hi: 0.60, lo_strict: false, hi_strict: true }
    }

    pub fn contains(&self, value: f64) -> bool {
        let above = if self.lo_strict { value > self.lo } else { value >= self.lo };
        let below = if self.hi_strict { value < self.hi } else { value <= self.hi };
        above && below
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let open = if self.lo_strict { '(' } else { '[' };
        let close = if self.hi_strict { ')' } else { ']' };
        write!(f, "{open}{:.2}, {:.2}{close}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bias {
    None,
    /// Classes with fewer options receive more cars: a car landing in a
    /// class with `o_k` of `o` options is redrawn with probability `o_k/o`.
    Negative,
    /// Classes with more options receive more cars (redraw probability
    /// `1 - o_k/o`).
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Population {
    /// Each car picks its class uniformly.
    PerCarUniform,
    /// Class counts drawn uniformly over the compositions of `n` into `k`
    /// parts (stars and bars), conditioned on every class being populated.
    RandomComposition,
}

/// Resolved per-family generation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyParams {
    pub options: usize,
    pub classes: usize,
    pub p_range: (usize, usize),
    pub qp_range: (usize, usize),
    pub fixed_pq: Option<(Vec<usize>, Vec<usize>)>,
    pub band: Band,
    pub bias: Bias,
    pub population: Population,
    /// Multiplier on the `p/q` option-inclusion probability of the vector
    /// proposal. Bands centred away from the natural mean of the plain
    /// `p/q` proposal are unreachable by rejection alone, so the proposal
    /// is re-centred; the acceptance test is unchanged.
    pub inclusion_scale: f64,
}

#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub family: Family,
    pub num_cars: usize,
    pub seed: u64,
    /// Cap on class-vector draws.
    pub vector_retries: usize,
    /// Cap on class-population draws across all vector sets.
    pub band_retries: usize,
}

impl GeneratorSpec {
    pub fn new(family: Family, num_cars: usize, seed: u64) -> Self {
        GeneratorSpec {
            family,
            num_cars,
            seed,
            vector_retries: 1_000_000,
            band_retries: 100_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error(
        "{family}: utilisation band {band} unreachable within {attempts} population draws \
         (last violation: option {option} at {value:.3})"
    )]
    BandUnreachable { family: &'static str, band: Band, attempts: usize, option: usize, value: f64 },
    #[error("{family}: could not draw {classes} distinct class vectors within {attempts} draws")]
    VectorSpaceExhausted { family: &'static str, classes: usize, attempts: usize },
    #[error("{family}: {num_cars} cars cannot host the family parameters: {reason}")]
    BadSize { family: &'static str, num_cars: usize, reason: String },
}

/// Cars per class implied by the requirement matrix and demands, for one
/// option.
fn option_demand(vectors: &[Vec<bool>], demand: &[usize], option: usize) -> usize {
    vectors
        .iter()
        .zip(demand)
        .filter(|(v, _)| v[option])
        .map(|(_, &d)| d)
        .sum()
}

fn utilisation(p: usize, q: usize, t: usize, n: usize) -> f64 {
    if t == 0 {
        0.0
    } else {
        min_accommodating_length(p, q, t) as f64 / n as f64
    }
}

struct Draws<'a> {
    params: &'a FamilyParams,
    rng: ChaCha8Rng,
    n: usize,
}

impl Draws<'_> {
    fn pq(&mut self) -> (Vec<usize>, Vec<usize>) {
        if let Some((p, q)) = &self.params.fixed_pq {
            return (p.clone(), q.clone());
        }
        let (plo, phi) = self.params.p_range;
        let (dlo, dhi) = self.params.qp_range;
        let mut p = Vec::with_capacity(self.params.options);
        let mut q = Vec::with_capacity(self.params.options);
        for _ in 0..self.params.options {
            let pj = self.rng.random_range(plo..=phi);
            p.push(pj);
            q.push(pj + self.rng.random_range(dlo..=dhi));
        }
        (p, q)
    }

    /// Distinct non-zero Bernoulli option vectors; `None` once the per-set
    /// retry budget is exceeded (the caller then redraws the window rules).
    /// Under negative bias the all-options vector is excluded as well: such
    /// a class can never keep a car, so it would be left empty.
    fn vectors(&mut self, p: &[usize], q: &[usize], budget: usize) -> Option<Vec<Vec<bool>>> {
        let o = self.params.options;
        let k = self.params.classes;
        let mut budget = budget;
        let mut vectors: Vec<Vec<bool>> = Vec::with_capacity(k);
        while vectors.len() < k {
            if budget == 0 {
                return None;
            }
            budget -= 1;
            let v: Vec<bool> = (0..o)
                .map(|j| {
                    let prob = (self.params.inclusion_scale * p[j] as f64 / q[j] as f64)
                        .clamp(0.02, 0.98);
                    self.rng.random_bool(prob)
                })
                .collect();
            if !v.iter().any(|&b| b) {
                continue;
            }
            if self.params.bias == Bias::Negative && v.iter().all(|&b| b) {
                continue;
            }
            if !vectors.contains(&v) {
                vectors.push(v);
            }
        }
        Some(vectors)
    }

    /// Expected demand share per class under the bias, for screening vector
    /// sets before any population is drawn.
    fn expected_share(&self, ops_count: &[usize]) -> Vec<f64> {
        let weights = self.keep_weights(ops_count);
        let total: f64 = weights.iter().sum();
        weights.iter().map(|w| w / total.max(f64::MIN_POSITIVE)).collect()
    }

    /// Acceptance weight of each class under the bias: the probability that
    /// a car tested in the class stays there.
    fn keep_weights(&self, ops_count: &[usize]) -> Vec<f64> {
        let o = self.params.options as f64;
        ops_count
            .iter()
            .map(|&c| match self.params.bias {
                Bias::None => 1.0,
                Bias::Negative => 1.0 - c as f64 / o,
                Bias::Positive => c as f64 / o,
            })
            .collect()
    }

    /// Settled class of the reassignment chain, sampled in closed form: the
    /// car keeps its initial class with that class's acceptance weight;
    /// otherwise the chain of uniform redraws settles on class `j` with
    /// probability proportional to `j`'s acceptance weight.
    fn biased_class(&mut self, initial: usize, keep: &[f64], keep_cumsum: &[f64]) -> usize {
        if self.params.bias == Bias::None {
            return initial;
        }
        if self.rng.random_bool(keep[initial].clamp(0.0, 1.0)) {
            return initial;
        }
        let total = *keep_cumsum.last().unwrap();
        let x = self.rng.random_range(0.0..total);
        match keep_cumsum.partition_point(|&c| c <= x) {
            i if i < keep.len() => i,
            _ => keep.len() - 1,
        }
    }

    fn population(&mut self, ops_count: &[usize], demand: &mut Vec<usize>) {
        let k = self.params.classes;
        let n = self.n;
        let keep = self.keep_weights(ops_count);
        let keep_cumsum: Vec<f64> = keep
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        demand.clear();
        demand.resize(k, 0);
        match self.params.population {
            Population::PerCarUniform => {
                for _ in 0..n {
                    let initial = self.rng.random_range(0..k);
                    demand[self.biased_class(initial, &keep, &keep_cumsum)] += 1;
                }
            }
            Population::RandomComposition => {
                // Uniform over positive compositions of n into k parts, via
                // the shift bijection with weak compositions of n - k: every
                // class stays populated and no rejection is needed.
                let rest = n - k;
                let mut bars = rand::seq::index::sample(&mut self.rng, rest + k - 1, k - 1)
                    .into_vec();
                bars.sort_unstable();
                bars.push(rest + k - 1);
                let mut prev = 0usize;
                let mut composition = Vec::with_capacity(k);
                for &b in &bars {
                    composition.push(b - prev + 1);
                    prev = b + 1;
                }
                if self.params.bias == Bias::None {
                    *demand = composition;
                    return;
                }
                for (class, &count) in composition.iter().enumerate() {
                    for _ in 0..count {
                        demand[self.biased_class(class, &keep, &keep_cumsum)] += 1;
                    }
                }
            }
        }
    }
}

/// Generates one instance of the family, named `<family>-<n>-s<seed>`.
/// Deterministic given the spec.
pub fn generate(spec: &GeneratorSpec) -> Result<Instance, GeneratorError> {
    let name = format!("{}-{}-s{}", spec.family.name(), spec.num_cars, spec.seed);
    generate_named(spec, &name)
}

pub fn generate_named(spec: &GeneratorSpec, name: &str) -> Result<Instance, GeneratorError> {
    let params = spec.family.params();
    let n = spec.num_cars;
    let family = spec.family.name();
    if n < params.classes {
        return Err(GeneratorError::BadSize {
            family,
            num_cars: n,
            reason: format!("{} classes need at least as many cars", params.classes),
        });
    }
    let max_q = params.fixed_pq.as_ref().map_or(params.p_range.1 + params.qp_range.1, |(_, q)| {
        q.iter().copied().max().unwrap_or(1)
    });
    if max_q > n {
        return Err(GeneratorError::BadSize {
            family,
            num_cars: n,
            reason: format!("window length {max_q} exceeds the number of cars"),
        });
    }

    let mut draws = Draws { params: &params, rng: ChaCha8Rng::seed_from_u64(spec.seed), n };
    let mut population_attempts = 0usize;
    let mut vector_failures = 0usize;
    let mut last_violation = (0usize, f64::NAN);

    // Population draws per vector set before the whole instance is redrawn,
    // and vector draws per set before the window rules are redrawn.
    const POPULATION_TRIES_PER_SET: usize = 100;
    const VECTOR_TRIES_PER_SET: usize = 20_000;

    loop {
        if population_attempts >= spec.band_retries {
            return Err(GeneratorError::BandUnreachable {
                family,
                band: params.band,
                attempts: population_attempts,
                option: last_violation.0,
                value: last_violation.1,
            });
        }
        // A rejected vector set still counts as one attempt, so the loop is
        // bounded even when no population is ever drawn.
        population_attempts += 1;
        let (p, q) = draws.pq();
        let per_set = VECTOR_TRIES_PER_SET.min(spec.vector_retries);
        let Some(vectors) = draws.vectors(&p, &q, per_set) else {
            vector_failures += per_set;
            if vector_failures >= spec.vector_retries {
                return Err(GeneratorError::VectorSpaceExhausted {
                    family,
                    classes: params.classes,
                    attempts: vector_failures,
                });
            }
            continue;
        };
        let ops_count: Vec<usize> =
            vectors.iter().map(|v| v.iter().filter(|&&b| b).count()).collect();

        // Cheap screen: population draws are only worth spending on vector
        // sets whose expected utilisation is near the band. The final
        // acceptance test below is unchanged.
        if params.band.hi.is_finite() || params.band.lo > 0.0 {
            let share = draws.expected_share(&ops_count);
            let slack = 0.05 + (params.band.hi - params.band.lo).min(1.0) / 2.0;
            let plausible = (0..params.options).all(|j| {
                let expected: f64 = vectors
                    .iter()
                    .zip(&share)
                    .filter(|(v, _)| v[j])
                    .map(|(_, s)| s * n as f64)
                    .sum();
                let u = utilisation(p[j], q[j], expected.round() as usize, n);
                u >= params.band.lo - slack && u <= params.band.hi + slack
            });
            if !plausible {
                continue;
            }
        }

        let mut demand: Vec<usize> = Vec::new();
        for _ in 0..POPULATION_TRIES_PER_SET {
            population_attempts += 1;
            if population_attempts > spec.band_retries {
                break;
            }
            draws.population(&ops_count, &mut demand);
            if demand.iter().any(|&d| d == 0) {
                continue;
            }
            let mut ok = true;
            for j in 0..params.options {
                let t = option_demand(&vectors, &demand, j);
                let u = utilisation(p[j], q[j], t, n);
                if !params.band.contains(u) {
                    last_violation = (j, u);
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            let inst = Instance::new(name, demand, vectors, p, q)
                .expect("generated instances satisfy the data-model invariants");
            return Ok(inst);
        }
    }
}

/// Checks an instance against every structural constraint of a family:
/// option and class counts, window-rule ranges, distinct non-empty option
/// vectors, populated classes, and the utilisation band.
pub fn check_family_constraints(inst: &Instance, family: Family) -> Result<(), String> {
    let params = family.params();
    if inst.num_options() != params.options {
        return Err(format!("{} options, family fixes {}", inst.num_options(), params.options));
    }
    if inst.num_classes() != params.classes {
        return Err(format!("{} classes, family fixes {}", inst.num_classes(), params.classes));
    }
    for j in 0..inst.num_options() {
        let (p, q) = (inst.capacity(j), inst.window_len(j));
        match &params.fixed_pq {
            Some((fp, fq)) => {
                if p != fp[j] || q != fq[j] {
                    return Err(format!("option {j}: rule ({p}, {q}) differs from the fixed one"));
                }
            }
            None => {
                let (plo, phi) = params.p_range;
                let (dlo, dhi) = params.qp_range;
                if !(plo..=phi).contains(&p) {
                    return Err(format!("option {j}: p={p} outside [{plo}, {phi}]"));
                }
                if !(dlo..=dhi).contains(&(q - p)) {
                    return Err(format!("option {j}: q-p={} outside [{dlo}, {dhi}]", q - p));
                }
            }
        }
        let u = crate::features::option_utilisation(inst, j);
        if !params.band.contains(u) {
            return Err(format!("option {j}: utilisation {u:.4} outside {}", params.band));
        }
    }
    for class in 0..inst.num_classes() {
        if inst.options_of_class(class) == 0 {
            return Err(format!("class {class} requires no option"));
        }
    }
    Ok(())
}

/// The full benchmark suite: every family at 100, 300 and 500 cars, three
/// replicates each, with per-instance seeds derived from `base_seed` and
/// the instance name `<family>-<n>-<replicate>`.
pub fn generate_suite(base_seed: u64) -> Result<Vec<Instance>, GeneratorError> {
    let mut instances = Vec::with_capacity(Family::ALL.len() * 9);
    for family in Family::ALL {
        for n in [100usize, 300, 500] {
            for replicate in 0..3usize {
                let name = format!("{}-{}-{}", family.name(), n, replicate);
                let seed = derive_seed(base_seed, &format!("generate/{name}"));
                let spec = GeneratorSpec::new(family, n, seed);
                instances.push(generate_named(&spec, &name)?);
            }
        }
    }
    Ok(instances)
}
