//! Bounded response of the verified transfer: for every event list up to a
//! given length, the transfer returns after at most `k_poll` status polls.
//!
//! The lists are explored as a prefix tree. A run that finished without
//! reaching the end of its list behaves identically on every extension of
//! that list, so the whole subtree is accounted for by one run.

use crate::bus_model::regmap::spi_reg::RX_FULL;
use crate::bus_model::{ChannelEnable, EventList, SpiEvent, Word};
use crate::driver_stack::{AbstractState, Call, Machine, Registry, Resolve, Ret};
use crate::par::{self, ExecMode};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundedStats {
    /// Distinct lists of length `<= max_len` whose behaviour was checked.
    pub lists_covered: u64,
    /// Transfers actually executed.
    pub runs: u64,
    pub max_polls: u32,
    /// First list (in exploration order) on which the bound was exceeded
    /// or the transfer failed.
    pub violation: Option<Vec<SpiEvent>>,
}

impl BoundedStats {
    fn merge(mut self, o: BoundedStats) -> BoundedStats {
        self.lists_covered += o.lists_covered;
        self.runs += o.runs;
        self.max_polls = self.max_polls.max(o.max_polls);
        self.violation = self.violation.or(o.violation);
        self
    }
}

pub struct RunResult {
    pub polls: u32,
    /// The transfer asked for more events than the list holds.
    pub reached_end: bool,
    pub ok: bool,
}

pub fn run_transfer(reg: &Registry, events: &[SpiEvent]) -> RunResult {
    let mut a = AbstractState::default();
    a.spi.en = ChannelEnable::Enabled;
    a.spi_env = EventList::new(events.to_vec());
    let mut mc = Machine::from_abstract(reg, a, Resolve::Impl).with_trace();
    let ok = matches!(mc.exec(Call::Transfer(0xBB)), Ok(Ret::Xfer(_)));
    let trace = mc.trace();
    let polls = trace.iter().filter(|c| **c == Call::RegRead(RX_FULL)).count() as u32;
    let accesses =
        trace.iter().filter(|c| matches!(c, Call::SpiBusRead(_) | Call::SpiBusWrite(..))).count();
    RunResult { polls, reached_end: accesses > mc.a.spi_log.len(), ok }
}

fn lists_up_to(extra: usize, branching: u64) -> u64 {
    (0..=extra as u32).map(|j| branching.pow(j)).sum()
}

fn explore(reg: &Registry, prefix: Vec<SpiEvent>, max_len: usize, syms: &[SpiEvent], mode: ExecMode) -> BoundedStats {
    let r = run_transfer(reg, &prefix);
    let within = r.ok && r.polls <= reg.config.k_poll;
    let mut stats = BoundedStats {
        lists_covered: 0,
        runs: 1,
        max_polls: r.polls,
        violation: (!within).then(|| prefix.clone()),
    };
    if !r.reached_end || prefix.len() == max_len {
        stats.lists_covered = if r.reached_end { 1 } else { lists_up_to(max_len - prefix.len(), syms.len() as u64) };
        return stats;
    }
    stats.lists_covered = 1;
    // Fan out near the root only; deeper subtrees are small.
    let child_mode = if prefix.len() < 3 { mode } else { ExecMode::Sequential };
    let children = par::map_slice(child_mode, syms, |&s| {
        let mut p = prefix.clone();
        p.push(s);
        explore(reg, p, max_len, syms, ExecMode::Sequential)
    });
    children.into_iter().fold(stats, BoundedStats::merge)
}

/// Alphabet `{Null, XferDone, Recv(data)}`.
pub fn alphabet(data: Word) -> [SpiEvent; 3] {
    [SpiEvent::Null, SpiEvent::XferDone, SpiEvent::Recv(data)]
}

pub fn verified_bounded_response(reg: &Registry, max_len: usize, data: Word, mode: ExecMode) -> BoundedStats {
    explore(reg, Vec::new(), max_len, &alphabet(data), mode)
}

/// Plain enumeration of every list, for cross-checking small lengths.
pub fn brute_force(reg: &Registry, max_len: usize, data: Word) -> BoundedStats {
    let syms = alphabet(data);
    let mut stats = BoundedStats::default();
    let mut level: Vec<Vec<SpiEvent>> = vec![vec![]];
    for len in 0..=max_len {
        for l in &level {
            let r = run_transfer(reg, l);
            stats.runs += 1;
            stats.lists_covered += 1;
            stats.max_polls = stats.max_polls.max(r.polls);
            if (!r.ok || r.polls > reg.config.k_poll) && stats.violation.is_none() {
                stats.violation = Some(l.clone());
            }
        }
        if len < max_len {
            level = level
                .iter()
                .flat_map(|l| syms.iter().map(move |&s| [l.as_slice(), &[s]].concat()))
                .collect();
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver_stack::DriverConfig;

    #[test]
    fn pruned_matches_brute_force() {
        let reg = Registry::shipped(DriverConfig { k_poll: 4, poll_us: 5 });
        for n in 0..=7 {
            let fast = verified_bounded_response(&reg, n, 9, ExecMode::Sequential);
            let slow = brute_force(&reg, n, 9);
            assert_eq!(fast.lists_covered, slow.lists_covered, "n={n}");
            assert_eq!(fast.max_polls, slow.max_polls);
            assert_eq!(fast.violation, None);
            assert_eq!(fast.lists_covered, lists_up_to(n, 3));
        }
    }
}
