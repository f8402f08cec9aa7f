//! Constrained-repair engine: sample boolean variables independently, then
//! repeatedly resample the variable set of the lowest-scoped violated event
//! until no event holds or the budget runs out.
//!
//! Every caller re-verifies the final assignment independently, so nothing
//! downstream rests on the engine's convergence analysis.

use std::collections::BTreeSet;

use rand::Rng;
use thiserror::Error;

use crate::rng;

/// Knobs shared by the randomized reductions: arc-keep probability, the
/// pre-trim out-degree, and the repair/restart budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleConfig {
    pub p: f64,
    pub d_trim: usize,
    pub max_rounds: u64,
    pub restarts: u32,
    pub seed: u64,
}

impl ResampleConfig {
    pub fn validate(&self) {
        assert!(self.p > 0.0 && self.p <= 1.0, "need 0 < p ≤ 1");
        assert!(self.max_rounds >= 1 && self.restarts >= 1);
    }
}

/// Diagnostic label for a bad event; the predicate itself lives in
/// [`EventKind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BadEventLabel {
    DegreeOutOfRange,
    TooManyHInNeighbors,
    CycleSurvives,
    OutDegreeLow,
}

/// The predicate of a bad event over the variable assignment. Variables are
/// indices into the bit vector; an event "holds" when the assignment is bad.
#[derive(Debug, Clone)]
pub enum EventKind {
    /// Holds iff every listed variable is kept.
    AllVarsKept { vars: Vec<u32> },
    /// Holds iff every group contains at least one kept variable.
    AllGroupsHit { groups: Vec<Vec<u32>> },
    /// Holds iff fewer than `threshold` of the variables are kept.
    KeptBelow { vars: Vec<u32>, threshold: usize },
    /// Holds iff the kept count falls outside lo..=hi.
    KeptOutOfRange { vars: Vec<u32>, lo: usize, hi: usize },
    /// Holds iff the caller-supplied predicate says so; `vars` must list
    /// every variable the predicate reads.
    Custom { vars: Vec<u32>, id: u32 },
}

impl EventKind {
    pub fn vars(&self) -> impl Iterator<Item = u32> + '_ {
        let (flat, groups): (&[u32], &[Vec<u32>]) = match self {
            EventKind::AllVarsKept { vars }
            | EventKind::KeptBelow { vars, .. }
            | EventKind::KeptOutOfRange { vars, .. }
            | EventKind::Custom { vars, .. } => (vars, &[]),
            EventKind::AllGroupsHit { groups } => (&[], groups),
        };
        flat.iter().copied().chain(groups.iter().flatten().copied())
    }

    fn holds(&self, bits: &[bool], custom: &mut dyn FnMut(u32, &[bool]) -> bool) -> bool {
        match self {
            EventKind::AllVarsKept { vars } => vars.iter().all(|&v| bits[v as usize]),
            EventKind::AllGroupsHit { groups } => groups
                .iter()
                .all(|g| g.iter().any(|&v| bits[v as usize])),
            EventKind::KeptBelow { vars, threshold } => {
                vars.iter().filter(|&&v| bits[v as usize]).count() < *threshold
            }
            EventKind::KeptOutOfRange { vars, lo, hi } => {
                let c = vars.iter().filter(|&&v| bits[v as usize]).count();
                c < *lo || c > *hi
            }
            EventKind::Custom { id, .. } => custom(*id, bits),
        }
    }
}

/// A bad event: what went wrong (`label`), where (`scope`, also the
/// deterministic selection key), and the variables it reads.
#[derive(Debug, Clone)]
pub struct BadEvent {
    pub label: BadEventLabel,
    pub scope: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone)]
pub struct ResampleOutcome {
    pub bits: Vec<bool>,
    /// Total resampling rounds across all attempts.
    pub rounds: u64,
    /// Attempts before the successful one.
    pub restarts_used: u32,
    /// Scope ids of resampled events, in order (the run's transcript).
    pub transcript: Vec<u64>,
}

#[derive(Debug, Error)]
pub enum ResampleError {
    #[error("resampling budget exceeded after {rounds} rounds; {} events survive", surviving.len())]
    BudgetExceeded {
        surviving: Vec<(BadEventLabel, u64)>,
        rounds: u64,
    },
}

/// Runs the sample-and-repair loop. `custom` evaluates [`EventKind::Custom`]
/// predicates and must be a pure function of (id, bits).
pub fn mt_resample(
    num_vars: usize,
    events: &[BadEvent],
    cfg: &ResampleConfig,
    mut custom: Option<&mut dyn FnMut(u32, &[bool]) -> bool>,
) -> Result<ResampleOutcome, ResampleError> {
    cfg.validate();
    debug_assert!(
        events.iter().all(|e| !matches!(e.kind, EventKind::Custom { .. }))
            || custom.is_some(),
        "custom events need an evaluator"
    );
    let mut never = |_: u32, _: &[bool]| false;
    let eval: &mut dyn FnMut(u32, &[bool]) -> bool = match custom.as_deref_mut() {
        Some(f) => f,
        None => &mut never,
    };

    // var → events index (CSR)
    let mut counts = vec![0usize; num_vars];
    for e in events {
        for v in e.kind.vars() {
            counts[v as usize] += 1;
        }
    }
    let mut offsets = Vec::with_capacity(num_vars + 1);
    let mut acc = 0;
    for &c in &counts {
        offsets.push(acc);
        acc += c;
    }
    offsets.push(acc);
    let mut touching = vec![0u32; acc];
    let mut fill = offsets.clone();
    for (idx, e) in events.iter().enumerate() {
        for v in e.kind.vars() {
            touching[fill[v as usize]] = idx as u32;
            fill[v as usize] += 1;
        }
    }

    let mut total_rounds: u64 = 0;
    let mut transcript = Vec::new();
    let mut last_surviving: Vec<(BadEventLabel, u64)> = Vec::new();

    for attempt in 0..cfg.restarts {
        let init_seed = rng::derive(cfg.seed, 0xA11C_0000 + attempt as u64);
        let mut bits: Vec<bool> = (0..num_vars)
            .map(|v| rng::keyed_bernoulli(init_seed, v as u64, cfg.p))
            .collect();
        let mut stream = rng::stream(cfg.seed, 0xBEA7_0000 + attempt as u64);

        let mut violated: BTreeSet<(u64, u32)> = BTreeSet::new();
        let mut queued = vec![false; events.len()];
        for (idx, e) in events.iter().enumerate() {
            if e.kind.holds(&bits, eval) {
                violated.insert((e.scope, idx as u32));
                queued[idx] = true;
            }
        }

        let mut stamp = vec![u64::MAX; events.len()];
        let mut rounds_left = cfg.max_rounds;
        let ok = loop {
            let Some(&(scope, idx)) = violated.iter().next() else {
                break true;
            };
            violated.remove(&(scope, idx));
            queued[idx as usize] = false;
            let e = &events[idx as usize];
            // lazily queued entries may have healed since insertion
            if !e.kind.holds(&bits, eval) {
                continue;
            }
            if rounds_left == 0 {
                // put it back so the survivors snapshot below sees it
                violated.insert((scope, idx));
                queued[idx as usize] = true;
                break false;
            }
            rounds_left -= 1;
            total_rounds += 1;
            transcript.push(scope);
            for v in e.kind.vars() {
                bits[v as usize] = stream.gen::<f64>() < cfg.p;
            }
            for v in e.kind.vars() {
                for &t in &touching[offsets[v as usize]..offsets[v as usize + 1]] {
                    if stamp[t as usize] == total_rounds || queued[t as usize] {
                        continue;
                    }
                    stamp[t as usize] = total_rounds;
                    let te = &events[t as usize];
                    if te.kind.holds(&bits, eval) {
                        violated.insert((te.scope, t));
                        queued[t as usize] = true;
                    }
                }
            }
        };

        if ok {
            return Ok(ResampleOutcome {
                bits,
                rounds: total_rounds,
                restarts_used: attempt,
                transcript,
            });
        }
        last_surviving = events
            .iter()
            .filter(|e| e.kind.holds(&bits, eval))
            .map(|e| (e.label, e.scope))
            .collect();
    }
    Err(ResampleError::BudgetExceeded {
        surviving: last_surviving,
        rounds: total_rounds,
    })
}
