//! Instance and sequence data model plus exact objective evaluation.
//!
//! A problem instance consists of `D` cars partitioned into `K` classes,
//! where each class requires a subset of `O` options. Option `j` carries a
//! subsequence rule `(p[j], q[j])`: in any `q[j]` consecutive positions, at
//! most `p[j]` cars may require the option. The objective penalises window
//! usage above the capacity (over-assignment, weighted by `a`) and below it
//! (under-assignment, weighted by `b`).
//!
//! Windows are identified by their end position `t` using 1-indexed
//! positions, matching the usual written formulation. Rust-side containers
//! (sequences, changed-position sets) are 0-indexed; the conversion happens
//! inside this module only.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

/// Errors produced by the core data model and evaluation routines.
#[derive(Debug, Error, PartialEq)]
pub enum CoreError {
    #[error("demand sums to {sum} but the instance declares {expected} cars")]
    DemandMismatch { sum: usize, expected: usize },
    #[error("class {class} has zero demand")]
    EmptyClass { class: usize },
    #[error("instance must have at least one car, option and class")]
    EmptyInstance,
    #[error("option {option}: capacity/window ({p}, {q}) violates 1 <= p <= q <= {d}")]
    BadWindowRule { option: usize, p: usize, q: usize, d: usize },
    #[error("classes {first} and {second} have identical option vectors")]
    DuplicateClass { first: usize, second: usize },
    #[error("requirement matrix has {rows} rows / {cols} columns, expected {k} x {o}")]
    BadRequirementShape { rows: usize, cols: usize, k: usize, o: usize },
    #[error("penalty matrix has {rows} rows / {cols} columns, expected {o} x {d}")]
    BadPenaltyShape { rows: usize, cols: usize, o: usize, d: usize },
    #[error("penalty weight for option {option}, window {window} is negative")]
    NegativePenalty { option: usize, window: usize },
    #[error("sequence has {got} positions, instance has {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("class {class} occupies {got} positions but has demand {expected}")]
    ClassCountMismatch { class: usize, got: usize, expected: usize },
    #[error("class index {class} out of range (instance has {k} classes)")]
    ClassOutOfRange { class: usize, k: usize },
    #[error("position {position} out of range (instance has {d} positions)")]
    PositionOutOfRange { position: usize, d: usize },
    #[error("replacement changes class counts (move must permute the multiset of classes)")]
    MoveChangesCounts,
    #[error("lower bound {lower_bound} exceeds incumbent objective {objective}: solver inconsistency")]
    BoundExceedsObjective { objective: f64, lower_bound: f64 },
}

/// Start position of the window ending at `t` for window length `q`,
/// clamped at the start of the sequence. Both `t` and the result are
/// 1-indexed.
///
/// ```
/// assert_eq!(carseq::core::window_start_for(2, 4), 3);
/// assert_eq!(carseq::core::window_start_for(5, 5), 1);
/// ```
pub fn window_start_for(q: usize, t: usize) -> usize {
    (t + 1).saturating_sub(q).max(1)
}

/// A validated car sequencing instance.
///
/// Immutable after construction; all invariants (demand totals, window
/// rules, pairwise-distinct class vectors, penalty shapes) are checked by
/// the constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    name: String,
    num_cars: usize,
    demand: Vec<usize>,
    requires: Vec<Vec<bool>>,
    capacity: Vec<usize>,
    window: Vec<usize>,
    over_penalty: Vec<Vec<f64>>,
    under_penalty: Vec<Vec<f64>>,
}

impl Instance {
    /// Builds an instance with unit over-assignment weights (`a = 1`) and
    /// zero under-assignment weights (`b = 0`), the convention used by the
    /// public benchmark sets, which only define violations.
    pub fn new(
        name: impl Into<String>,
        demand: Vec<usize>,
        requires: Vec<Vec<bool>>,
        capacity: Vec<usize>,
        window: Vec<usize>,
    ) -> Result<Self, CoreError> {
        let num_cars: usize = demand.iter().sum();
        let num_options = capacity.len();
        let over = vec![vec![1.0; num_cars]; num_options];
        let under = vec![vec![0.0; num_cars]; num_options];
        Self::with_penalties(name, demand, requires, capacity, window, over, under)
    }

    /// Builds an instance with explicit penalty matrices. Each matrix is
    /// `O x D`, row-major, indexed by window end position; entries for
    /// `t < p[j]` are carried but never enter the objective.
    pub fn with_penalties(
        name: impl Into<String>,
        demand: Vec<usize>,
        requires: Vec<Vec<bool>>,
        capacity: Vec<usize>,
        window: Vec<usize>,
        over_penalty: Vec<Vec<f64>>,
        under_penalty: Vec<Vec<f64>>,
    ) -> Result<Self, CoreError> {
        let num_cars: usize = demand.iter().sum();
        let k = demand.len();
        let o = capacity.len();
        if num_cars == 0 || k == 0 || o == 0 || window.len() != o {
            return Err(CoreError::EmptyInstance);
        }
        if let Some(class) = demand.iter().position(|&d| d == 0) {
            return Err(CoreError::EmptyClass { class });
        }
        if requires.len() != k || requires.iter().any(|row| row.len() != o) {
            return Err(CoreError::BadRequirementShape {
                rows: requires.len(),
                cols: requires.first().map_or(0, Vec::len),
                k,
                o,
            });
        }
        for j in 0..o {
            let (p, q) = (capacity[j], window[j]);
            if p < 1 || p > q || q > num_cars {
                return Err(CoreError::BadWindowRule { option: j, p, q, d: num_cars });
            }
        }
        for i in 0..k {
            for i2 in (i + 1)..k {
                if requires[i] == requires[i2] {
                    return Err(CoreError::DuplicateClass { first: i, second: i2 });
                }
            }
        }
        for (mat, label) in [(&over_penalty, 0usize), (&under_penalty, 1usize)] {
            let _ = label;
            if mat.len() != o || mat.iter().any(|row| row.len() != num_cars) {
                return Err(CoreError::BadPenaltyShape {
                    rows: mat.len(),
                    cols: mat.first().map_or(0, Vec::len),
                    o,
                    d: num_cars,
                });
            }
            for (j, row) in mat.iter().enumerate() {
                if let Some(t0) = row.iter().position(|&w| !(w >= 0.0)) {
                    return Err(CoreError::NegativePenalty { option: j, window: t0 + 1 });
                }
            }
        }
        Ok(Instance {
            name: name.into(),
            num_cars,
            demand,
            requires,
            capacity,
            window,
            over_penalty,
            under_penalty,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    /// Total number of cars, `D`.
    pub fn num_cars(&self) -> usize {
        self.num_cars
    }

    /// Number of options, `O`.
    pub fn num_options(&self) -> usize {
        self.capacity.len()
    }

    /// Number of car classes, `K`.
    pub fn num_classes(&self) -> usize {
        self.demand.len()
    }

    /// Cars demanded per class.
    pub fn demand(&self) -> &[usize] {
        &self.demand
    }

    /// Whether class `i` requires option `j`.
    pub fn requires(&self, class: usize, option: usize) -> bool {
        self.requires[class][option]
    }

    /// The full option vector of class `i`.
    pub fn option_vector(&self, class: usize) -> &[bool] {
        &self.requires[class]
    }

    /// Number of options required by class `i`.
    pub fn options_of_class(&self, class: usize) -> usize {
        self.requires[class].iter().filter(|&&r| r).count()
    }

    /// Window capacity `p[j]`.
    pub fn capacity(&self, option: usize) -> usize {
        self.capacity[option]
    }

    /// Window length `q[j]`.
    pub fn window_len(&self, option: usize) -> usize {
        self.window[option]
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacity
    }

    pub fn window_lens(&self) -> &[usize] {
        &self.window
    }

    /// Over-assignment weight `a[j][t]` for the window ending at 1-indexed `t`.
    pub fn over_penalty(&self, option: usize, t: usize) -> f64 {
        self.over_penalty[option][t - 1]
    }

    /// Under-assignment weight `b[j][t]` for the window ending at 1-indexed `t`.
    pub fn under_penalty(&self, option: usize, t: usize) -> f64 {
        self.under_penalty[option][t - 1]
    }

    pub(crate) fn over_penalty_rows(&self) -> &[Vec<f64>] {
        &self.over_penalty
    }

    pub(crate) fn under_penalty_rows(&self) -> &[Vec<f64>] {
        &self.under_penalty
    }

    /// True when every over-assignment weight is 1 and every
    /// under-assignment weight is 0 (the benchmark default).
    pub fn has_default_penalties(&self) -> bool {
        self.over_penalty.iter().all(|row| row.iter().all(|&w| w == 1.0))
            && self.under_penalty.iter().all(|row| row.iter().all(|&w| w == 0.0))
    }

    /// Start of the window for option `j` ending at 1-indexed position `t`.
    pub fn window_start(&self, option: usize, t: usize) -> usize {
        window_start_for(self.window[option], t)
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (D={}, O={}, K={})",
            if self.name.is_empty() { "<unnamed>" } else { &self.name },
            self.num_cars,
            self.num_options(),
            self.num_classes()
        )
    }
}

/// An ordering of car classes over the `D` positions; the symmetry-reduced
/// solution representation (cars of the same class are interchangeable).
///
/// Stored 0-indexed: `classes()[0]` is the class in position 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sequence {
    classes: Vec<usize>,
}

impl Sequence {
    pub fn new(classes: Vec<usize>) -> Self {
        Sequence { classes }
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Class at 0-indexed position.
    pub fn class_at(&self, position: usize) -> usize {
        self.classes[position]
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        self.classes.swap(a, b);
    }

    pub fn set(&mut self, position: usize, class: usize) {
        self.classes[position] = class;
    }

    /// Checks the class-count invariant against an instance.
    pub fn validate(&self, inst: &Instance) -> Result<(), CoreError> {
        if self.classes.len() != inst.num_cars() {
            return Err(CoreError::DimensionMismatch {
                got: self.classes.len(),
                expected: inst.num_cars(),
            });
        }
        let mut counts = vec![0usize; inst.num_classes()];
        for &c in &self.classes {
            if c >= inst.num_classes() {
                return Err(CoreError::ClassOutOfRange { class: c, k: inst.num_classes() });
            }
            counts[c] += 1;
        }
        for (class, (&got, &expected)) in counts.iter().zip(inst.demand()).enumerate() {
            if got != expected {
                return Err(CoreError::ClassCountMismatch { class, got, expected });
            }
        }
        Ok(())
    }

    /// Deterministic valid sequence: classes interleaved round-robin until
    /// demands are exhausted. Used as a fallback start when a solver gets a
    /// zero budget.
    pub fn round_robin(inst: &Instance) -> Self {
        let mut remaining = inst.demand().to_vec();
        let mut classes = Vec::with_capacity(inst.num_cars());
        while classes.len() < inst.num_cars() {
            for (class, rem) in remaining.iter_mut().enumerate() {
                if *rem > 0 {
                    *rem -= 1;
                    classes.push(class);
                }
            }
        }
        Sequence { classes }
    }

    /// Uniform random valid sequence (a shuffle of the demand multiset).
    pub fn random<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Self {
        let mut classes = Vec::with_capacity(inst.num_cars());
        for (class, &d) in inst.demand().iter().enumerate() {
            classes.extend(std::iter::repeat(class).take(d));
        }
        classes.shuffle(rng);
        Sequence { classes }
    }
}

/// Window violations and the weighted objective of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    over: Vec<Vec<u32>>,
    under: Vec<Vec<u32>>,
    uoa: f64,
    uua: f64,
}

impl Evaluation {
    /// Over-assignment `y[j][t]` of the window ending at 1-indexed `t`.
    pub fn over(&self, option: usize, t: usize) -> u32 {
        self.over[option][t - 1]
    }

    /// Under-assignment `z[j][t]` of the window ending at 1-indexed `t`.
    pub fn under(&self, option: usize, t: usize) -> u32 {
        self.under[option][t - 1]
    }

    /// Weighted upper over-assignment.
    pub fn uoa(&self) -> f64 {
        self.uoa
    }

    /// Weighted upper under-assignment.
    pub fn uua(&self) -> f64 {
        self.uua
    }

    /// Objective value `uoa + uua`.
    pub fn total(&self) -> f64 {
        self.uoa + self.uua
    }
}

fn window_usage(inst: &Instance, classes: &[usize], option: usize, t: usize) -> u32 {
    let u = inst.window_start(option, t);
    classes[(u - 1)..t]
        .iter()
        .filter(|&&c| inst.requires(c, option))
        .count() as u32
}

/// Evaluates a sequence: per-window over/under assignments and the weighted
/// objective. Windows with end position `t < p[j]` are skipped, exactly as
/// in the written sums.
pub fn evaluate(inst: &Instance, seq: &Sequence) -> Result<Evaluation, CoreError> {
    seq.validate(inst)?;
    let d = inst.num_cars();
    let o = inst.num_options();
    let mut over = vec![vec![0u32; d]; o];
    let mut under = vec![vec![0u32; d]; o];
    let mut uoa = 0.0;
    let mut uua = 0.0;
    for j in 0..o {
        let p = inst.capacity(j) as i64;
        let q = inst.window_len(j);
        let mut usage: i64 = 0;
        for t in 1..=d {
            // Sliding window: add the entering car, drop the one leaving.
            if inst.requires(seq.class_at(t - 1), j) {
                usage += 1;
            }
            if t > q && inst.requires(seq.class_at(t - 1 - q), j) {
                usage -= 1;
            }
            if t < inst.capacity(j) {
                continue;
            }
            let y = (usage - p).max(0) as u32;
            let z = (p - usage).max(0) as u32;
            over[j][t - 1] = y;
            under[j][t - 1] = z;
            uoa += inst.over_penalty(j, t) * f64::from(y);
            uua += inst.under_penalty(j, t) * f64::from(z);
        }
    }
    Ok(Evaluation { over, under, uoa, uua })
}

/// Re-evaluates after replacing the classes at `changes` (0-indexed
/// position, new class). Only windows overlapping a changed position are
/// recomputed. The move must permute the multiset of classes, so per-class
/// counts are preserved. `seq` is the sequence `eval` was computed from and
/// is not modified.
pub fn evaluate_delta(
    inst: &Instance,
    seq: &Sequence,
    eval: &Evaluation,
    changes: &[(usize, usize)],
) -> Result<Evaluation, CoreError> {
    let d = inst.num_cars();
    let mut removed = Vec::with_capacity(changes.len());
    let mut added = Vec::with_capacity(changes.len());
    for &(pos, class) in changes {
        if pos >= d {
            return Err(CoreError::PositionOutOfRange { position: pos, d });
        }
        if class >= inst.num_classes() {
            return Err(CoreError::ClassOutOfRange { class, k: inst.num_classes() });
        }
        removed.push(seq.class_at(pos));
        added.push(class);
    }
    removed.sort_unstable();
    added.sort_unstable();
    if removed != added {
        return Err(CoreError::MoveChangesCounts);
    }

    let mut classes = seq.classes().to_vec();
    for &(pos, class) in changes {
        classes[pos] = class;
    }

    let mut new_eval = eval.clone();
    for j in 0..inst.num_options() {
        let p = inst.capacity(j);
        let q = inst.window_len(j);
        // Windows ending at t cover positions [t+1-q, t]; a change at
        // 0-indexed pos touches t in [pos+1, pos+q].
        let mut touched: Vec<usize> = changes
            .iter()
            .flat_map(|&(pos, _)| {
                let lo = (pos + 1).max(p);
                let hi = (pos + q).min(d);
                lo..=hi
            })
            .collect();
        touched.sort_unstable();
        touched.dedup();
        for t in touched {
            let usage = window_usage(inst, &classes, j, t) as i64;
            let y = (usage - p as i64).max(0) as u32;
            let z = (p as i64 - usage).max(0) as u32;
            let old_y = new_eval.over[j][t - 1];
            let old_z = new_eval.under[j][t - 1];
            new_eval.uoa += inst.over_penalty(j, t) * (f64::from(y) - f64::from(old_y));
            new_eval.uua += inst.under_penalty(j, t) * (f64::from(z) - f64::from(old_z));
            new_eval.over[j][t - 1] = y;
            new_eval.under[j][t - 1] = z;
        }
    }
    Ok(new_eval)
}

/// Optimality gap `(best - bound) / best`, with the convention that a
/// proven-optimal zero-cost solution has gap 0.
pub fn objective_gap(best_obj: f64, lower_bound: f64) -> Result<f64, CoreError> {
    if lower_bound > best_obj || lower_bound < 0.0 {
        return Err(CoreError::BoundExceedsObjective {
            objective: best_obj,
            lower_bound,
        });
    }
    if best_obj == 0.0 {
        return Ok(0.0);
    }
    Ok((best_obj - lower_bound) / best_obj)
}

/// One point of a solver run trace: incumbent and bound after `ticks`
/// budget units.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub ticks: u64,
    pub objective: f64,
    pub bound: f64,
}

/// Outcome of a solver run on one instance.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub sequence: Sequence,
    pub objective: f64,
    pub lower_bound: f64,
    pub bound_certified: bool,
    pub ticks: u64,
    pub wall_seconds: f64,
    pub trace: Vec<TracePoint>,
}

impl SolveResult {
    pub fn gap(&self) -> Result<f64, CoreError> {
        objective_gap(self.objective, self.lower_bound.max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e4() -> Instance {
        Instance::new(
            "e4",
            vec![2, 2],
            vec![vec![true], vec![false]],
            vec![1],
            vec![2],
        )
        .unwrap()
    }

    #[test]
    fn window_start_formula() {
        assert_eq!(window_start_for(2, 1), 1);
        assert_eq!(window_start_for(2, 4), 3);
        assert_eq!(window_start_for(5, 5), 1);
    }

    #[test]
    fn evaluate_alternating_is_feasible() {
        let inst = e4();
        let ev = evaluate(&inst, &Sequence::new(vec![0, 1, 0, 1])).unwrap();
        assert_eq!(ev.uoa(), 0.0);
        assert_eq!(ev.total(), 0.0);
    }

    #[test]
    fn evaluate_blocked_pays_one() {
        let inst = e4();
        let ev = evaluate(&inst, &Sequence::new(vec![0, 0, 1, 1])).unwrap();
        assert_eq!(ev.over(0, 2), 1);
        assert_eq!(ev.over(0, 1), 0);
        assert_eq!(ev.over(0, 3), 0);
        assert_eq!(ev.over(0, 4), 0);
        assert_eq!(ev.uoa(), 1.0);
        assert_eq!(ev.total(), 1.0);
    }

    #[test]
    fn optionless_sequences_cost_nothing() {
        let inst = Instance::new(
            "noopt",
            vec![2, 1],
            vec![vec![false, false], vec![true, false]],
            vec![1, 1],
            vec![2, 2],
        )
        .unwrap();
        // Only option 0 matters; class 1 requires it once, never twice in a window.
        let ev = evaluate(&inst, &Sequence::new(vec![0, 1, 0])).unwrap();
        assert_eq!(ev.uoa(), 0.0);
    }

    #[test]
    fn evaluate_rejects_bad_shapes() {
        let inst = e4();
        let err = evaluate(&inst, &Sequence::new(vec![0, 1, 0])).unwrap_err();
        assert_eq!(err, CoreError::DimensionMismatch { got: 3, expected: 4 });
        let err = evaluate(&inst, &Sequence::new(vec![0, 0, 0, 1])).unwrap_err();
        assert_eq!(err, CoreError::ClassCountMismatch { class: 0, got: 3, expected: 2 });
    }

    #[test]
    fn delta_empty_change_is_identity() {
        let inst = e4();
        let seq = Sequence::new(vec![0, 0, 1, 1]);
        let ev = evaluate(&inst, &seq).unwrap();
        let dv = evaluate_delta(&inst, &seq, &ev, &[]).unwrap();
        assert_eq!(ev, dv);
    }

    #[test]
    fn delta_swap_matches_full() {
        let inst = e4();
        let seq = Sequence::new(vec![0, 0, 1, 1]);
        let ev = evaluate(&inst, &seq).unwrap();
        let dv = evaluate_delta(&inst, &seq, &ev, &[(1, 1), (2, 0)]).unwrap();
        let full = evaluate(&inst, &Sequence::new(vec![0, 1, 0, 1])).unwrap();
        assert_eq!(dv, full);
        assert_eq!(dv.total(), 0.0);
    }

    #[test]
    fn delta_rejects_count_changes() {
        let inst = e4();
        let seq = Sequence::new(vec![0, 0, 1, 1]);
        let ev = evaluate(&inst, &seq).unwrap();
        let err = evaluate_delta(&inst, &seq, &ev, &[(0, 1)]).unwrap_err();
        assert_eq!(err, CoreError::MoveChangesCounts);
    }

    #[test]
    fn gap_conventions() {
        assert_eq!(objective_gap(10.0, 9.0).unwrap(), 0.1);
        assert_eq!(objective_gap(7.0, 7.0).unwrap(), 0.0);
        assert_eq!(objective_gap(0.0, 0.0).unwrap(), 0.0);
        assert!(objective_gap(1.0, 2.0).is_err());
    }

    #[test]
    fn constructor_rejects_invalid() {
        assert!(matches!(
            Instance::new("x", vec![2, 0], vec![vec![true], vec![false]], vec![1], vec![2]),
            Err(CoreError::EmptyClass { class: 1 })
        ));
        assert!(matches!(
            Instance::new("x", vec![1, 1], vec![vec![true], vec![true]], vec![1], vec![2]),
            Err(CoreError::DuplicateClass { first: 0, second: 1 })
        ));
        assert!(matches!(
            Instance::new("x", vec![1, 1], vec![vec![true], vec![false]], vec![2], vec![1]),
            Err(CoreError::BadWindowRule { .. })
        ));
    }

    #[test]
    fn permutation_symmetry() {
        let inst = e4();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let seq = Sequence::random(&inst, &mut rng);
            let ev = evaluate(&inst, &seq).unwrap();
            // Swap two positions holding the same class.
            let mut swapped = seq.clone();
            let positions: Vec<usize> =
                (0..seq.len()).filter(|&i| seq.class_at(i) == seq.class_at(0)).collect();
            if positions.len() >= 2 {
                swapped.swap(positions[0], positions[1]);
                let ev2 = evaluate(&inst, &swapped).unwrap();
                assert_eq!(ev.total(), ev2.total());
            }
        }
    }

    #[test]
    fn complementarity_and_window_identity() {
        let demand = vec![3, 2, 2];
        let requires = vec![vec![true, false], vec![false, true], vec![true, true]];
        let inst = Instance::new("t", demand, requires, vec![1, 2], vec![3, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let seq = Sequence::random(&inst, &mut rng);
            let ev = evaluate(&inst, &seq).unwrap();
            for j in 0..inst.num_options() {
                for t in inst.capacity(j)..=inst.num_cars() {
                    let y = ev.over(j, t);
                    let z = ev.under(j, t);
                    assert_eq!(y * z, 0, "complementarity violated at ({j}, {t})");
                    let usage = window_usage(&inst, seq.classes(), j, t) as i64;
                    assert_eq!(
                        usage - inst.capacity(j) as i64,
                        i64::from(y) - i64::from(z),
                        "window identity violated at ({j}, {t})"
                    );
                }
            }
        }
    }

    #[test]
    fn round_robin_is_valid() {
        let inst = e4();
        Sequence::round_robin(&inst).validate(&inst).unwrap();
    }
}
