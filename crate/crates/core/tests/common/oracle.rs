//! Exhaustive minimum of energy over the demand limit, for small
//! households.
//!
//! Works in integer tenths of a kW on hourly intervals, so the optimum is
//! exact and shares no arithmetic with the library. The search walks the
//! day interval by interval, branching over every class-legal ON set
//! (NISL: once started, stays on until done; ISL: any subset inside the
//! window), pruning branches that can no longer meet a deadline and
//! memoising on (interval, remaining run time, started flags).

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLoad {
    pub contiguous: bool,
    pub rated_tenths: i64,
    pub alpha: usize,
    pub beta: usize,
    /// Intervals of run time.
    pub need: usize,
}

#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub loads: Vec<OracleLoad>,
    pub ninsl_tenths: Vec<i64>,
    pub mdl_tenths: Vec<i64>,
}

type Key = (usize, Vec<usize>, u32);

struct Search<'a> {
    inst: &'a OracleInstance,
    memo: HashMap<Key, Option<i64>>,
}

impl Search<'_> {
    fn best(&mut self, t: usize, rem: &[usize], started: u32) -> Option<i64> {
        let inst = self.inst;
        let horizon = inst.mdl_tenths.len();
        // Deadline check: every load must still fit in what is left of its window.
        for (i, l) in inst.loads.iter().enumerate() {
            if rem[i] > 0 && (t > l.beta || rem[i] > l.beta + 1 - t.max(l.alpha)) {
                return None;
            }
        }
        if t == horizon {
            return Some(0);
        }
        let key = (t, rem.to_vec(), started);
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }

        // Per load: may it be off, may it be on?
        let mut choices = Vec::with_capacity(inst.loads.len());
        for (i, l) in inst.loads.iter().enumerate() {
            let in_window = l.alpha <= t && t <= l.beta;
            let running = l.contiguous && started & (1 << i) != 0;
            let can_on = rem[i] > 0 && in_window;
            let must_on = can_on && running;
            choices.push((!must_on, can_on));
        }

        let n = inst.loads.len();
        let mut best: Option<i64> = None;
        for mask in 0u32..(1 << n) {
            let legal = (0..n).all(|i| {
                let on = mask & (1 << i) != 0;
                let (can_off, can_on) = choices[i];
                if on {
                    can_on
                } else {
                    can_off
                }
            });
            if !legal {
                continue;
            }
            let mut draw = inst.ninsl_tenths[t];
            let mut next = rem.to_vec();
            let mut next_started = started;
            for (i, l) in inst.loads.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    draw += l.rated_tenths;
                    next[i] -= 1;
                    next_started |= 1 << i;
                } else if l.contiguous && started & (1 << i) != 0 && rem[i] > 0 {
                    unreachable!("running NISL loads are forced on");
                }
            }
            let here = (draw - inst.mdl_tenths[t]).max(0);
            if best.is_some_and(|b| here >= b) {
                continue;
            }
            if let Some(rest) = self.best(t + 1, &next, next_started) {
                let total = here + rest;
                if best.is_none_or(|b| total < b) {
                    best = Some(total);
                }
            }
        }
        self.memo.insert(key, best);
        best
    }
}

/// Minimum over all legal schedules of Σ max(0, draw − limit), in
/// tenth-kW intervals. `None` if no legal schedule exists.
pub fn min_excess_tenths(inst: &OracleInstance) -> Option<i64> {
    let rem: Vec<usize> = inst.loads.iter().map(|l| l.need).collect();
    Search {
        inst,
        memo: HashMap::new(),
    }
    .best(0, &rem, 0)
}

/// Σ max(0, draw − limit) for a given set of ON intervals per load.
pub fn excess_tenths(inst: &OracleInstance, on: &[Vec<usize>]) -> i64 {
    (0..inst.mdl_tenths.len())
        .map(|t| {
            let draw: i64 = inst.ninsl_tenths[t]
                + inst
                    .loads
                    .iter()
                    .zip(on)
                    .filter(|(_, ts)| ts.contains(&t))
                    .map(|(l, _)| l.rated_tenths)
                    .sum::<i64>();
            (draw - inst.mdl_tenths[t]).max(0)
        })
        .sum()
}
