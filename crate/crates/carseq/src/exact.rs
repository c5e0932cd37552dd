//! Exact optimisation by branch-and-bound over class-per-position
//! assignments, a brute-force enumeration oracle, and the lazy-constraint
//! variant that activates window penalties on demand.
//!
//! The search assigns free positions in increasing position order and
//! prunes with an admissible completion bound: for every option the
//! remaining option cars are spread over the still-open positions as evenly
//! as the window capacities allow, ignoring the coupling between options.
//! The bound is cheap, never overestimates, and is strictly positive on
//! over-demanded options, which is what replaces an LP relaxation here.

use std::time::Instant;

use thiserror::Error;

use crate::budget::Budget;
use crate::core::{CoreError, Instance, Sequence, TracePoint};

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error("subproblem is inconsistent: {0}")]
    InvalidSubproblem(String),
    #[error("brute force refused: {permutations} completions exceed the cap of {cap}")]
    TooLarge { permutations: u128, cap: u128 },
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Set of (option, window-end) pairs whose penalty terms are counted.
///
/// `None` in a [`Subproblem`] means all windows; an empty mask means a
/// relaxation with no penalty terms at all.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMask {
    num_cars: usize,
    num_options: usize,
    bits: Vec<u64>,
}

impl WindowMask {
    pub fn empty(inst: &Instance) -> Self {
        let n = inst.num_options() * inst.num_cars();
        WindowMask {
            num_cars: inst.num_cars(),
            num_options: inst.num_options(),
            bits: vec![0; n.div_ceil(64)],
        }
    }

    fn index(&self, option: usize, t: usize) -> usize {
        debug_assert!(option < self.num_options && t >= 1 && t <= self.num_cars);
        option * self.num_cars + (t - 1)
    }

    pub fn insert(&mut self, option: usize, t: usize) -> bool {
        let i = self.index(option, t);
        let fresh = self.bits[i / 64] & (1 << (i % 64)) == 0;
        self.bits[i / 64] |= 1 << (i % 64);
        fresh
    }

    pub fn contains(&self, option: usize, t: usize) -> bool {
        let i = self.index(option, t);
        self.bits[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }
}

/// Objective of a full assignment, counting only the windows admitted by
/// the mask (all windows when `None`).
pub fn masked_objective(inst: &Instance, classes: &[usize], mask: Option<&WindowMask>) -> f64 {
    let mut total = 0.0;
    for j in 0..inst.num_options() {
        let p = inst.capacity(j) as i64;
        let q = inst.window_len(j);
        let mut usage: i64 = 0;
        for t in 1..=inst.num_cars() {
            if inst.requires(classes[t - 1], j) {
                usage += 1;
            }
            if t > q && inst.requires(classes[t - 1 - q], j) {
                usage -= 1;
            }
            if t < inst.capacity(j) {
                continue;
            }
            if mask.is_some_and(|m| !m.contains(j, t)) {
                continue;
            }
            let y = (usage - p).max(0) as f64;
            let z = (p - usage).max(0) as f64;
            total += inst.over_penalty(j, t) * y + inst.under_penalty(j, t) * z;
        }
    }
    total
}

/// A restriction of an instance to a set of free positions: everything
/// else is pinned to a partial assignment, and the free positions must be
/// filled from a multiset of classes that completes the demands.
#[derive(Debug, Clone)]
pub struct Subproblem<'a> {
    inst: &'a Instance,
    fixed: Vec<Option<usize>>,
    free_positions: Vec<usize>,
    free_classes: Vec<usize>,
    active_windows: Option<WindowMask>,
}

impl<'a> Subproblem<'a> {
    /// The whole instance: every position free.
    pub fn full(inst: &'a Instance) -> Self {
        Subproblem {
            inst,
            fixed: vec![None; inst.num_cars()],
            free_positions: (0..inst.num_cars()).collect(),
            free_classes: inst.demand().to_vec(),
            active_windows: None,
        }
    }

    /// Frees the given 0-indexed positions of an existing sequence and
    /// fixes the rest. The freed classes come from the sequence itself, so
    /// demands stay consistent by construction.
    pub fn from_sequence(
        inst: &'a Instance,
        seq: &Sequence,
        free_positions: &[usize],
    ) -> Result<Self, ExactError> {
        seq.validate(inst)?;
        let mut sorted: Vec<usize> = free_positions.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != free_positions.len() {
            return Err(ExactError::InvalidSubproblem("free positions repeat".into()));
        }
        if sorted.last().is_some_and(|&p| p >= inst.num_cars()) {
            return Err(ExactError::InvalidSubproblem("free position out of range".into()));
        }
        let mut fixed: Vec<Option<usize>> = seq.classes().iter().copied().map(Some).collect();
        let mut free_classes = vec![0usize; inst.num_classes()];
        for &p in &sorted {
            free_classes[seq.class_at(p)] += 1;
            fixed[p] = None;
        }
        Ok(Subproblem { inst, fixed, free_positions: sorted, free_classes, active_windows: None })
    }

    /// Restricts the counted penalty terms to the given window set.
    pub fn with_active_windows(mut self, mask: WindowMask) -> Self {
        self.active_windows = Some(mask);
        self
    }

    pub fn instance(&self) -> &Instance {
        self.inst
    }

    pub fn free_positions(&self) -> &[usize] {
        &self.free_positions
    }

    pub fn free_classes(&self) -> &[usize] {
        &self.free_classes
    }

    pub fn active_windows(&self) -> Option<&WindowMask> {
        self.active_windows.as_ref()
    }

    fn validate(&self) -> Result<(), ExactError> {
        let total_free: usize = self.free_classes.iter().sum();
        if total_free != self.free_positions.len() {
            return Err(ExactError::InvalidSubproblem(format!(
                "free multiset has {total_free} classes for {} positions",
                self.free_positions.len()
            )));
        }
        let mut counts = self.free_classes.clone();
        for (pos, slot) in self.fixed.iter().enumerate() {
            match slot {
                Some(c) => counts[*c] += 1,
                None => {
                    if self.free_positions.binary_search(&pos).is_err() {
                        return Err(ExactError::InvalidSubproblem(format!(
                            "position {pos} is neither fixed nor free"
                        )));
                    }
                }
            }
        }
        if counts != self.inst.demand() {
            return Err(ExactError::InvalidSubproblem(
                "fixed assignment plus free multiset does not match demands".into(),
            ));
        }
        Ok(())
    }

    /// Distinct completions of the free multiset.
    fn completion_count(&self, cap: u128) -> Option<u128> {
        let mut remaining: u128 = self.free_positions.len() as u128;
        let mut count: u128 = 1;
        for &c in &self.free_classes {
            // count *= C(remaining, c)
            let mut binom: u128 = 1;
            for i in 0..c as u128 {
                binom = binom.checked_mul(remaining - i)?;
                binom /= i + 1;
                if binom > cap.saturating_mul(1_000_000) {
                    return None;
                }
            }
            count = count.checked_mul(binom)?;
            remaining -= c as u128;
            if count > cap.saturating_mul(1_000_000) {
                return None;
            }
        }
        Some(count)
    }

    /// A full sequence from a free-position assignment.
    fn compose(&self, free_assignment: &[usize]) -> Sequence {
        let mut classes: Vec<usize> = Vec::with_capacity(self.inst.num_cars());
        for slot in &self.fixed {
            classes.push(slot.unwrap_or(usize::MAX));
        }
        for (&pos, &class) in self.free_positions.iter().zip(free_assignment) {
            classes[pos] = class;
        }
        Sequence::new(classes)
    }
}

/// Result of an exact run on a subproblem.
#[derive(Debug, Clone)]
pub struct ExactResult {
    pub best: Sequence,
    pub objective: f64,
    pub bound: f64,
    pub proven: bool,
    pub nodes: u64,
    pub wall_seconds: f64,
    pub trace: Vec<TracePoint>,
}

const BRUTE_FORCE_CAP: u128 = 10_000_000;

/// Enumerates every distinct completion in lexicographic class order and
/// returns the exact minimum. Refuses when more than `10^7` completions
/// exist. This is the testing oracle the search algorithms are checked
/// against.
pub fn brute_force(sub: &Subproblem) -> Result<ExactResult, ExactError> {
    sub.validate()?;
    let permutations = sub
        .completion_count(BRUTE_FORCE_CAP)
        .filter(|&c| c <= BRUTE_FORCE_CAP)
        .ok_or(ExactError::TooLarge { permutations: u128::MAX, cap: BRUTE_FORCE_CAP })?;
    if permutations > BRUTE_FORCE_CAP {
        return Err(ExactError::TooLarge { permutations, cap: BRUTE_FORCE_CAP });
    }
    let start = Instant::now();

    let mut assignment: Vec<usize> = Vec::new();
    for (class, &count) in sub.free_classes.iter().enumerate() {
        assignment.extend(std::iter::repeat(class).take(count));
    }

    let mut work: Vec<usize> = sub.fixed.iter().map(|s| s.unwrap_or(0)).collect();
    let mut best_assignment = assignment.clone();
    let mut best = f64::INFINITY;
    let mut nodes = 0u64;
    loop {
        for (&pos, &class) in sub.free_positions.iter().zip(&assignment) {
            work[pos] = class;
        }
        let value = masked_objective(sub.inst, &work, sub.active_windows());
        nodes += 1;
        if value < best {
            best = value;
            best_assignment.copy_from_slice(&assignment);
        }
        if !next_multiset_permutation(&mut assignment) {
            break;
        }
    }
    if sub.free_positions.is_empty() {
        let classes: Vec<usize> = sub.fixed.iter().map(|s| s.unwrap()).collect();
        best = masked_objective(sub.inst, &classes, sub.active_windows());
        nodes = 1;
    }
    Ok(ExactResult {
        best: sub.compose(&best_assignment),
        objective: best,
        bound: best,
        proven: true,
        nodes,
        wall_seconds: start.elapsed().as_secs_f64(),
        trace: vec![TracePoint { ticks: nodes, objective: best, bound: best }],
    })
}

/// Advances to the next permutation in lexicographic order; false once the
/// sequence is the last (descending) one.
fn next_multiset_permutation(values: &mut [usize]) -> bool {
    if values.len() < 2 {
        return false;
    }
    let mut i = values.len() - 1;
    while i > 0 && values[i - 1] >= values[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = values.len() - 1;
    while values[j] <= values[i - 1] {
        j -= 1;
    }
    values.swap(i - 1, j);
    values[i..].reverse();
    true
}

/// Options controlling one branch-and-bound run.
#[derive(Debug, Clone)]
pub struct SearchLimits {
    pub budget: Budget,
    /// Stop once `(incumbent - bound) / incumbent` falls to this value.
    pub gap_tolerance: f64,
    /// Seed incumbent; the search never returns anything worse.
    pub warm_start: Option<Sequence>,
}

impl SearchLimits {
    pub fn new(budget: Budget) -> Self {
        SearchLimits { budget, gap_tolerance: 0.0, warm_start: None }
    }

    pub fn with_gap_tolerance(mut self, tol: f64) -> Self {
        self.gap_tolerance = tol;
        self
    }

    pub fn with_warm_start(mut self, seq: Sequence) -> Self {
        self.warm_start = Some(seq);
        self
    }
}

struct Block {
    /// 1-indexed end position of the block window.
    t: usize,
    weight: f64,
    /// Whether the window's penalty is counted under the mask.
    counted: bool,
    /// Unassigned free positions in the block.
    m: i64,
    /// Option cars already decided (fixed or assigned) in the block.
    o: i64,
}

struct OptionState {
    capacity: i64,
    blocks: Vec<Block>,
    /// Counted block indices sorted by ascending weight.
    weight_order: Vec<usize>,
    /// Per free-position index: block的 index, or None when the position
    /// falls outside every full block (it then absorbs cars freely).
    block_of_free: Vec<Option<usize>>,
    /// Unassigned free positions outside the full blocks.
    sink: i64,
    /// Remaining option cars among the unassigned free classes.
    remaining: i64,
}

struct Candidate {
    class: usize,
    delta: f64,
}

struct Frame {
    node_bound: f64,
    candidates: Vec<Candidate>,
    next: usize,
    active: bool,
}

/// Depth-first branch and bound over the free positions of a subproblem.
struct Engine<'a> {
    sub: &'a Subproblem<'a>,
    inst: &'a Instance,
    work: Vec<usize>,
    remaining: Vec<usize>,
    options: Vec<OptionState>,
    /// Windows grouped by the free-position index whose assignment decides
    /// them, as (option, window end).
    decide_lists: Vec<Vec<(u32, u32)>>,
    const_penalty: f64,
    decided: f64,
    depth: usize,
    duplicate_of: Vec<usize>,
}

impl<'a> Engine<'a> {
    fn new(sub: &'a Subproblem<'a>) -> Self {
        let inst = sub.inst;
        let d = inst.num_cars();
        let o = inst.num_options();
        let free = &sub.free_positions;

        let work: Vec<usize> = sub.fixed.iter().map(|s| s.unwrap_or(usize::MAX)).collect();
        let mut free_flag = vec![false; d];
        for &p in free {
            free_flag[p] = true;
        }

        let counted = |option: usize, t: usize| -> bool {
            sub.active_windows.as_ref().is_none_or(|m| m.contains(option, t))
        };

        // Group windows by the free position that decides them and collect
        // the constant part from windows without free positions.
        let mut decide_lists: Vec<Vec<(u32, u32)>> = vec![Vec::new(); free.len()];
        let mut const_penalty = 0.0;
        let mut free_index_of = vec![usize::MAX; d];
        for (i, &p) in free.iter().enumerate() {
            free_index_of[p] = i;
        }
        for j in 0..o {
            for t in inst.capacity(j)..=d {
                if !counted(j, t) {
                    continue;
                }
                let u = inst.window_start(j, t);
                let last_free = (u - 1..t).rev().find(|&pos| free_flag[pos]);
                match last_free {
                    Some(pos) => decide_lists[free_index_of[pos]].push((j as u32, t as u32)),
                    None => {
                        let usage = work[(u - 1)..t]
                            .iter()
                            .filter(|&&c| inst.requires(c, j))
                            .count() as i64;
                        let p_j = inst.capacity(j) as i64;
                        const_penalty += inst.over_penalty(j, t) * (usage - p_j).max(0) as f64
                            + inst.under_penalty(j, t) * (p_j - usage).max(0) as f64;
                    }
                }
            }
        }

        // Disjoint full blocks [bq-q+1, bq] per option, kept only when they
        // contain a free position.
        let mut options = Vec::with_capacity(o);
        for j in 0..o {
            let q = inst.window_len(j);
            let mut blocks: Vec<Block> = Vec::new();
            let mut block_at = vec![usize::MAX; d];
            let mut b_end = q;
            while b_end <= d {
                let has_free = (b_end - q..b_end).any(|pos| free_flag[pos]);
                if has_free {
                    let o_fixed = (b_end - q..b_end)
                        .filter(|&pos| !free_flag[pos] && inst.requires(work[pos], j))
                        .count() as i64;
                    let m = (b_end - q..b_end).filter(|&pos| free_flag[pos]).count() as i64;
                    for pos in b_end - q..b_end {
                        block_at[pos] = blocks.len();
                    }
                    blocks.push(Block {
                        t: b_end,
                        weight: inst.over_penalty(j, b_end),
                        counted: counted(j, b_end),
                        m,
                        o: o_fixed,
                    });
                }
                b_end += q;
            }
            let mut weight_order: Vec<usize> =
                (0..blocks.len()).filter(|&b| blocks[b].counted).collect();
            weight_order.sort_by(|&a, &b| {
                blocks[a].weight.partial_cmp(&blocks[b].weight).unwrap().then(a.cmp(&b))
            });
            let block_of_free: Vec<Option<usize>> = free
                .iter()
                .map(|&p| {
                    let b = block_at[p];
                    (b != usize::MAX && blocks[b].counted).then_some(b)
                })
                .collect();
            // Positions in uncounted blocks absorb cars freely, same as the
            // tail outside every full block.
            let sink = block_of_free.iter().filter(|b| b.is_none()).count() as i64;
            let remaining = sub
                .free_classes
                .iter()
                .enumerate()
                .filter(|&(c, _)| inst.requires(c, j))
                .map(|(_, &n)| n as i64)
                .sum();
            options.push(OptionState {
                capacity: inst.capacity(j) as i64,
                blocks,
                weight_order,
                block_of_free,
                sink,
                remaining,
            });
        }

        // Guard against classes with identical option vectors; the data
        // model forbids them, so this is normally the identity map.
        let k = inst.num_classes();
        let mut duplicate_of: Vec<usize> = (0..k).collect();
        for i in 0..k {
            for i2 in 0..i {
                if inst.option_vector(i) == inst.option_vector(i2) {
                    duplicate_of[i] = i2;
                    break;
                }
            }
        }

        Engine {
            sub,
            inst,
            work,
            remaining: sub.free_classes.clone(),
            options,
            decide_lists,
            const_penalty,
            decided: 0.0,
            depth: 0,
            duplicate_of,
        }
    }

    fn num_free(&self) -> usize {
        self.sub.free_positions.len()
    }

    /// Penalty of the windows decided by assigning `class` at the current
    /// depth. Leaves the engine state untouched.
    fn decide_delta(&mut self, class: usize) -> f64 {
        let pos = self.sub.free_positions[self.depth];
        let prev = self.work[pos];
        self.work[pos] = class;
        let mut delta = 0.0;
        for &(j, t) in &self.decide_lists[self.depth] {
            let (j, t) = (j as usize, t as usize);
            let u = self.inst.window_start(j, t);
            let usage = self.work[(u - 1)..t]
                .iter()
                .filter(|&&c| self.inst.requires(c, j))
                .count() as i64;
            let p = self.inst.capacity(j) as i64;
            delta += self.inst.over_penalty(j, t) * (usage - p).max(0) as f64
                + self.inst.under_penalty(j, t) * (p - usage).max(0) as f64;
        }
        self.work[pos] = prev;
        delta
    }

    fn assign(&mut self, class: usize, delta: f64) {
        let fi = self.depth;
        let pos = self.sub.free_positions[fi];
        self.work[pos] = class;
        self.remaining[class] -= 1;
        for (j, state) in self.options.iter_mut().enumerate() {
            let has = self.inst.requires(class, j);
            if has {
                state.remaining -= 1;
            }
            match state.block_of_free[fi] {
                Some(b) => {
                    state.blocks[b].m -= 1;
                    if has {
                        state.blocks[b].o += 1;
                    }
                }
                None => state.sink -= 1,
            }
        }
        self.decided += delta;
        self.depth += 1;
    }

    fn unassign(&mut self, class: usize, delta: f64) {
        self.depth -= 1;
        let fi = self.depth;
        let pos = self.sub.free_positions[fi];
        self.work[pos] = usize::MAX;
        self.remaining[class] += 1;
        for (j, state) in self.options.iter_mut().enumerate() {
            let has = self.inst.requires(class, j);
            if has {
                state.remaining += 1;
            }
            match state.block_of_free[fi] {
                Some(b) => {
                    state.blocks[b].m += 1;
                    if has {
                        state.blocks[b].o -= 1;
                    }
                }
                None => state.sink += 1,
            }
        }
        self.decided -= delta;
    }

    /// Admissible lower bound on the best completion below the current
    /// node: exact penalties decided so far plus, per option, the cheapest
    /// way to spread the remaining option cars over the open positions.
    fn bound(&self) -> f64 {
        let mut bound = self.const_penalty + self.decided;
        for state in &self.options {
            if state.remaining <= 0 && state.blocks.iter().all(|b| b.m == 0 || b.o <= state.capacity)
            {
                // No leftover cars and no block already over capacity.
                continue;
            }
            let mut forced = 0.0;
            let mut free_cap = state.sink;
            for b in &state.blocks {
                if b.m == 0 {
                    continue;
                }
                forced += b.weight * (b.o - state.capacity).max(0) as f64;
                free_cap += b.m.min((state.capacity - b.o).max(0));
            }
            bound += forced;
            let mut leftover = state.remaining - free_cap;
            if leftover > 0 {
                for &bi in &state.weight_order {
                    let b = &state.blocks[bi];
                    if b.m == 0 {
                        continue;
                    }
                    let extra = b.m - b.m.min((state.capacity - b.o).max(0));
                    let take = extra.min(leftover);
                    if take > 0 {
                        bound += b.weight * take as f64;
                        leftover -= take;
                        if leftover == 0 {
                            break;
                        }
                    }
                }
            }
        }
        bound
    }

    /// Candidates at the current depth, ordered by least marginal penalty
    /// with ties broken by class index; duplicate option vectors skipped.
    fn candidates(&mut self) -> Vec<Candidate> {
        let mut cands: Vec<Candidate> = Vec::new();
        for class in 0..self.inst.num_classes() {
            if self.remaining[class] == 0 {
                continue;
            }
            if self.duplicate_of[class] != class && self.remaining[self.duplicate_of[class]] > 0 {
                continue;
            }
            let delta = self.decide_delta(class);
            cands.push(Candidate { class, delta });
        }
        cands.sort_by(|a, b| a.delta.partial_cmp(&b.delta).unwrap().then(a.class.cmp(&b.class)));
        cands
    }

    /// One deterministic greedy descent; returns the leaf assignment and
    /// its objective. Used to guarantee an incumbent even on a zero budget.
    fn greedy_dive(&mut self) -> (Vec<usize>, f64) {
        let n = self.num_free();
        let mut picks: Vec<(usize, f64)> = Vec::with_capacity(n);
        for _ in 0..n {
            let cands = self.candidates();
            let c = &cands[0];
            picks.push((c.class, c.delta));
            let (class, delta) = (c.class, c.delta);
            self.assign(class, delta);
        }
        let objective = self.const_penalty + self.decided;
        let assignment: Vec<usize> = picks.iter().map(|&(c, _)| c).collect();
        for &(class, delta) in picks.iter().rev() {
            self.unassign(class, delta);
        }
        (assignment, objective)
    }

    fn snapshot_free(&self) -> Vec<usize> {
        self.sub.free_positions.iter().map(|&p| self.work[p]).collect()
    }
}

/// Branch and bound over a subproblem. Limits never fail the run: when the
/// budget is spent the incumbent and the best valid bound are returned
/// with `proven = false`.
pub fn branch_and_bound(sub: &Subproblem, limits: SearchLimits) -> Result<ExactResult, ExactError> {
    sub.validate()?;
    let start = Instant::now();
    let mut budget = limits.budget;
    let mut engine = Engine::new(sub);
    let mut trace: Vec<TracePoint> = Vec::new();

    // Incumbent: warm start if given, improved by one greedy dive.
    let (mut best_assignment, mut best_value) = engine.greedy_dive();
    if let Some(warm) = &limits.warm_start {
        warm.validate(sub.inst)?;
        let warm_value = masked_objective(sub.inst, warm.classes(), sub.active_windows());
        let assignment: Vec<usize> =
            sub.free_positions.iter().map(|&p| warm.class_at(p)).collect();
        {
            // The warm start must agree with the fixed part of the subproblem.
            let consistent = sub
                .fixed
                .iter()
                .enumerate()
                .all(|(pos, slot)| slot.is_none_or(|c| warm.class_at(pos) == c));
            if !consistent {
                return Err(ExactError::InvalidSubproblem(
                    "warm start disagrees with the fixed assignment".into(),
                ));
            }
        }
        if warm_value < best_value {
            best_value = warm_value;
            best_assignment = assignment;
        }
    }

    let root_bound = engine.bound();
    let mut best_lb = root_bound.min(best_value);
    trace.push(TracePoint { ticks: 0, objective: best_value, bound: best_lb });

    let mut frames: Vec<Frame> = vec![Frame {
        node_bound: root_bound,
        candidates: engine.candidates(),
        next: 0,
        active: false,
    }];
    let mut active_stack: Vec<(usize, f64)> = Vec::new();
    let mut exhausted = false;
    let mut nodes = 0u64;

    'search: loop {
        let Some(top) = frames.len().checked_sub(1) else {
            exhausted = true;
            break;
        };
        if frames[top].active {
            let (class, delta) = active_stack.pop().unwrap();
            engine.unassign(class, delta);
            frames[top].active = false;
        }
        loop {
            let next_candidate = {
                let frame = &mut frames[top];
                frame.candidates.get(frame.next).map(|c| {
                    frame.next += 1;
                    (c.class, c.delta)
                })
            };
            let Some((class, delta)) = next_candidate else {
                frames.pop();
                continue 'search;
            };
            nodes += 1;
            if !budget.consume(1) {
                break 'search;
            }
            engine.assign(class, delta);
            let bound = engine.bound();
            if bound >= best_value {
                engine.unassign(class, delta);
                continue;
            }
            if engine.depth == engine.num_free() {
                let leaf_value = engine.const_penalty + engine.decided;
                if leaf_value < best_value {
                    best_value = leaf_value;
                    best_assignment = engine.snapshot_free();
                    let open = open_bound(&frames, best_value);
                    best_lb = best_lb.max(open.min(best_value));
                    trace.push(TracePoint {
                        ticks: budget.used(),
                        objective: best_value,
                        bound: best_lb,
                    });
                    // With a zero tolerance the proof is left to pruning, so
                    // `proven` keeps its exhausted-search meaning.
                    if limits.gap_tolerance > 0.0
                        && gap_reached(best_value, best_lb, limits.gap_tolerance)
                    {
                        engine.unassign(class, delta);
                        break 'search;
                    }
                }
                engine.unassign(class, delta);
                continue;
            }
            active_stack.push((class, delta));
            frames[top].active = true;
            let candidates = engine.candidates();
            frames.push(Frame { node_bound: bound, candidates, next: 0, active: false });
            continue 'search;
        }
    }

    let (bound, proven) = if exhausted {
        (best_value, true)
    } else {
        let open = open_bound(&frames, best_value);
        best_lb = best_lb.max(open.min(best_value));
        (best_lb, false)
    };
    if bound > best_value {
        return Err(ExactError::Core(CoreError::BoundExceedsObjective {
            objective: best_value,
            lower_bound: bound,
        }));
    }
    trace.push(TracePoint { ticks: budget.used(), objective: best_value, bound });
    Ok(ExactResult {
        best: sub.compose(&best_assignment),
        objective: best_value,
        bound,
        proven,
        nodes,
        wall_seconds: start.elapsed().as_secs_f64(),
        trace,
    })
}

/// Minimum bound over subtrees not yet explored; `incumbent` covers the
/// explored part.
fn open_bound(frames: &[Frame], incumbent: f64) -> f64 {
    let mut lb = incumbent;
    for frame in frames {
        if frame.next < frame.candidates.len() || frame.active {
            lb = lb.min(frame.node_bound);
        }
    }
    lb
}

fn gap_reached(incumbent: f64, bound: f64, tolerance: f64) -> bool {
    if bound >= incumbent {
        return true;
    }
    if incumbent <= 0.0 {
        return bound >= incumbent;
    }
    (incumbent - bound) / incumbent <= tolerance
}

/// Exact optimisation with lazily activated window penalties.
///
/// Starts from a master problem with no penalty terms and repeatedly: solves
/// the master over the active window set, evaluates the master incumbent
/// under the full penalty set, and activates every window that contributes
/// positive uncounted penalty. Terminates when the master optimum's full
/// evaluation matches its master objective (optimal if the master run was
/// proven) or when the budget runs out.
pub fn solve_lazy(inst: &Instance, budget: Budget) -> Result<ExactResult, ExactError> {
    let start = Instant::now();
    let mut budget = budget;
    let mut mask = WindowMask::empty(inst);
    let mut best_full = f64::INFINITY;
    let mut best_seq: Option<Sequence> = None;
    let mut best_bound = 0.0f64;
    let mut proven = false;
    let mut nodes = 0u64;
    let mut trace: Vec<TracePoint> = Vec::new();

    loop {
        let sub = Subproblem::full(inst).with_active_windows(mask.clone());
        let limits = SearchLimits::new(budget.slice(u64::MAX));
        let master = branch_and_bound(&sub, limits)?;
        budget.consume(master.nodes.max(1));
        nodes += master.nodes;
        best_bound = best_bound.max(master.bound);

        let full_value = masked_objective(inst, master.best.classes(), None);
        if full_value < best_full {
            best_full = full_value;
            best_seq = Some(master.best.clone());
        }
        trace.push(TracePoint { ticks: budget.used(), objective: best_full, bound: best_bound });

        if full_value - master.objective <= 1e-9 {
            proven = master.proven;
            break;
        }
        if budget.exhausted() {
            break;
        }
        let mut activated = false;
        for j in 0..inst.num_options() {
            for t in inst.capacity(j)..=inst.num_cars() {
                if mask.contains(j, t) {
                    continue;
                }
                let u = inst.window_start(j, t);
                let usage = master.best.classes()[(u - 1)..t]
                    .iter()
                    .filter(|&&c| inst.requires(c, j))
                    .count() as i64;
                let p = inst.capacity(j) as i64;
                let contribution = inst.over_penalty(j, t) * (usage - p).max(0) as f64
                    + inst.under_penalty(j, t) * (p - usage).max(0) as f64;
                if contribution > 0.0 {
                    mask.insert(j, t);
                    activated = true;
                }
            }
        }
        debug_assert!(activated, "no activation despite master/full mismatch");
        if !activated {
            break;
        }
    }

    let best = best_seq.expect("lazy loop always evaluates at least one incumbent");
    if proven {
        best_bound = best_full;
    }
    Ok(ExactResult {
        best,
        objective: best_full,
        bound: best_bound.min(best_full),
        proven,
        nodes,
        wall_seconds: start.elapsed().as_secs_f64(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::evaluate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e4() -> Instance {
        Instance::new("e4", vec![2, 2], vec![vec![true], vec![false]], vec![1], vec![2]).unwrap()
    }

    /// Small random instance for oracle sweeps.
    pub(crate) fn random_small_instance(seed: u64, max_d: usize, max_k: usize, max_o: usize) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let o = rng.random_range(1..=max_o);
            let k = rng.random_range(1..=max_k.min(1 << o));
            let d_total = rng.random_range(k.max(2)..=max_d.max(k.max(2)));
            // Distinct non-trivial option vectors.
            let mut vectors: Vec<Vec<bool>> = Vec::new();
            let mut attempts = 0;
            while vectors.len() < k && attempts < 1000 {
                attempts += 1;
                let v: Vec<bool> = (0..o).map(|_| rng.random_bool(0.5)).collect();
                if !vectors.contains(&v) {
                    vectors.push(v);
                }
            }
            if vectors.len() < k {
                continue;
            }
            let mut demand = vec![1usize; k];
            for _ in 0..(d_total - k) {
                let i = rng.random_range(0..k);
                demand[i] += 1;
            }
            let mut capacity = Vec::with_capacity(o);
            let mut window = Vec::with_capacity(o);
            for _ in 0..o {
                let p = rng.random_range(1..=3usize);
                let q = p + rng.random_range(0..=2usize);
                capacity.push(p.min(d_total));
                window.push(q.min(d_total).max(p.min(d_total)));
            }
            if let Ok(inst) =
                Instance::new(format!("rand-{seed}"), demand, vectors, capacity, window)
            {
                return inst;
            }
        }
    }

    #[test]
    fn brute_force_e4() {
        let inst = e4();
        let result = brute_force(&Subproblem::full(&inst)).unwrap();
        assert_eq!(result.objective, 0.0);
        assert!(result.proven);
        assert_eq!(result.nodes, 6);
        assert_eq!(evaluate(&inst, &result.best).unwrap().total(), 0.0);
    }

    #[test]
    fn brute_force_single_free_position() {
        let inst = e4();
        let seq = Sequence::new(vec![0, 1, 0, 1]);
        let sub = Subproblem::from_sequence(&inst, &seq, &[2]).unwrap();
        let result = brute_force(&sub).unwrap();
        assert_eq!(result.nodes, 1);
        assert_eq!(result.objective, evaluate(&inst, &seq).unwrap().total());
    }

    #[test]
    fn brute_force_empty_mask_is_free() {
        let inst = e4();
        let sub = Subproblem::full(&inst).with_active_windows(WindowMask::empty(&inst));
        let result = brute_force(&sub).unwrap();
        assert_eq!(result.objective, 0.0);
    }

    #[test]
    fn brute_force_refuses_huge_problems() {
        let demand = vec![12, 12, 12, 12];
        let requires = vec![
            vec![true, false],
            vec![false, true],
            vec![true, true],
            vec![false, false],
        ];
        let inst = Instance::new("big", demand, requires, vec![1, 1], vec![2, 2]).unwrap();
        assert!(matches!(
            brute_force(&Subproblem::full(&inst)),
            Err(ExactError::TooLarge { .. })
        ));
    }

    #[test]
    fn bnb_matches_oracle_on_small_instances() {
        for seed in 0..60 {
            let inst = random_small_instance(seed, 8, 4, 3);
            let sub = Subproblem::full(&inst);
            let oracle = brute_force(&sub).unwrap();
            let result = branch_and_bound(&sub, SearchLimits::new(Budget::unlimited())).unwrap();
            assert!(result.proven, "seed {seed} not proven");
            assert_eq!(result.objective, oracle.objective, "seed {seed}");
            assert_eq!(result.bound, result.objective);
            assert_eq!(
                evaluate(&inst, &result.best).unwrap().total(),
                result.objective,
                "seed {seed} sequence/objective mismatch"
            );
        }
    }

    #[test]
    fn zero_budget_gives_admissible_root_bound() {
        for seed in 0..40 {
            let inst = random_small_instance(seed, 8, 4, 3);
            let sub = Subproblem::full(&inst);
            let oracle = brute_force(&sub).unwrap();
            let result = branch_and_bound(&sub, SearchLimits::new(Budget::new(0))).unwrap();
            assert!(!result.proven);
            assert!(
                result.bound <= oracle.objective + 1e-12,
                "seed {seed}: root bound {} exceeds optimum {}",
                result.bound,
                oracle.objective
            );
            // The greedy dive incumbent is a real completion.
            assert!(result.objective >= oracle.objective);
            evaluate(&inst, &result.best).unwrap();
        }
    }

    #[test]
    fn single_class_subproblem_is_a_single_leaf() {
        let inst = e4();
        let seq = Sequence::new(vec![0, 1, 0, 1]);
        // Free two positions holding the same class.
        let sub = Subproblem::from_sequence(&inst, &seq, &[0, 2]).unwrap();
        let result = branch_and_bound(&sub, SearchLimits::new(Budget::unlimited())).unwrap();
        assert!(result.proven);
        assert_eq!(result.best, seq);
    }

    #[test]
    fn warm_start_is_never_worsened() {
        let inst = e4();
        let warm = Sequence::new(vec![0, 1, 0, 1]);
        let sub = Subproblem::full(&inst);
        let limits = SearchLimits::new(Budget::new(0)).with_warm_start(warm.clone());
        let result = branch_and_bound(&sub, limits).unwrap();
        assert!(result.objective <= evaluate(&inst, &warm).unwrap().total());
    }

    #[test]
    fn anytime_trace_is_monotone() {
        for seed in 0..20 {
            let inst = random_small_instance(seed, 9, 4, 3);
            let sub = Subproblem::full(&inst);
            let result = branch_and_bound(&sub, SearchLimits::new(Budget::new(200))).unwrap();
            for pair in result.trace.windows(2) {
                assert!(pair[1].objective <= pair[0].objective, "incumbent increased");
                assert!(pair[1].bound >= pair[0].bound - 1e-12, "bound decreased");
            }
        }
    }

    #[test]
    fn restricted_objective_is_dominated_by_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..30 {
            let inst = random_small_instance(seed, 9, 4, 3);
            let seq = Sequence::random(&inst, &mut rng);
            let mut mask = WindowMask::empty(&inst);
            for j in 0..inst.num_options() {
                for t in inst.capacity(j)..=inst.num_cars() {
                    if rng.random_bool(0.5) {
                        mask.insert(j, t);
                    }
                }
            }
            let restricted = masked_objective(&inst, seq.classes(), Some(&mask));
            let full = masked_objective(&inst, seq.classes(), None);
            assert!(restricted <= full + 1e-12);
            assert_eq!(full, evaluate(&inst, &seq).unwrap().total());
        }
    }

    #[test]
    fn lazy_terminates_first_round_on_feasible_optimum() {
        // Only one class carries the option and a single car of it exists,
        // so any first master solution is already feasible.
        let inst = Instance::new(
            "easy",
            vec![1, 3],
            vec![vec![true], vec![false]],
            vec![1],
            vec![2],
        )
        .unwrap();
        let result = solve_lazy(&inst, Budget::unlimited()).unwrap();
        assert_eq!(result.objective, 0.0);
        assert!(result.proven);
        assert_eq!(result.trace.len(), 1, "should terminate in one round");
    }

    #[test]
    fn lazy_e4_reaches_the_full_model_optimum() {
        let inst = e4();
        let lazy = solve_lazy(&inst, Budget::unlimited()).unwrap();
        let full =
            branch_and_bound(&Subproblem::full(&inst), SearchLimits::new(Budget::unlimited()))
                .unwrap();
        assert_eq!(lazy.objective, 0.0);
        assert_eq!(lazy.objective, full.objective);
        assert!(lazy.proven);
    }

    #[test]
    fn lazy_matches_oracle_on_small_instances() {
        for seed in 0..60 {
            let inst = random_small_instance(seed, 8, 4, 3);
            let oracle = brute_force(&Subproblem::full(&inst)).unwrap();
            let result = solve_lazy(&inst, Budget::unlimited()).unwrap();
            assert!(result.proven, "seed {seed}");
            assert_eq!(result.objective, oracle.objective, "seed {seed}");
        }
    }

    #[test]
    fn gap_tolerance_stops_early_with_valid_state() {
        for seed in 0..20 {
            let inst = random_small_instance(seed, 9, 4, 3);
            let sub = Subproblem::full(&inst);
            let oracle = brute_force(&sub).unwrap();
            let limits = SearchLimits::new(Budget::unlimited()).with_gap_tolerance(0.5);
            let result = branch_and_bound(&sub, limits).unwrap();
            assert!(result.bound <= oracle.objective + 1e-12);
            assert!(result.objective >= oracle.objective - 1e-12);
        }
    }

    #[test]
    fn next_permutation_visits_all_multiset_orders() {
        let mut v = vec![0, 0, 1, 2];
        let mut seen = vec![v.clone()];
        while next_multiset_permutation(&mut v) {
            seen.push(v.clone());
        }
        assert_eq!(seen.len(), 12);
        let mut dedup = seen.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 12);
    }
}
