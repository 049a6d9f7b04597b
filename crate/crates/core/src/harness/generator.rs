//! State generators: exhaustive enumeration over a finite domain, or
//! seeded random sampling. Both are index-addressable so samples can be
//! produced independently and in parallel.

use crate::bus_model::{
    BusEvent, ChannelEnable, EventList, EventLog, I2cEvent, SpiEvent, SpiMode, Word,
};
use crate::driver_stack::{AbstractState, ImuCache, MagCache, Module};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Event lists: an optional fixed prefix followed by every sequence of up
/// to `max_len` symbols from the bus alphabet, `Recv` carrying each of
/// `values`. The log is either empty or the whole list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventBounds<E> {
    pub max_len: usize,
    pub values: Vec<Word>,
    pub prefixes: Vec<Vec<E>>,
    pub exhausted_logs: bool,
}

impl<E> EventBounds<E> {
    /// No events at all: one empty list, empty log.
    pub fn none() -> Self {
        EventBounds { max_len: 0, values: vec![], prefixes: vec![vec![]], exhausted_logs: false }
    }
}

/// Per-bus symbol set, `Recv` excluded.
pub trait Alphabet: BusEvent {
    fn plain() -> &'static [Self];
    fn recv(v: Word) -> Self;
}

impl Alphabet for SpiEvent {
    fn plain() -> &'static [Self] {
        &[SpiEvent::Null, SpiEvent::XferDone]
    }
    fn recv(v: Word) -> Self {
        SpiEvent::Recv(v)
    }
}

impl Alphabet for I2cEvent {
    fn plain() -> &'static [Self] {
        &[I2cEvent::Null, I2cEvent::Ack]
    }
    fn recv(v: Word) -> Self {
        I2cEvent::Recv(v)
    }
}

impl<E: Alphabet> EventBounds<E> {
    pub fn default_bounds() -> Self {
        EventBounds {
            max_len: 4,
            values: vec![0, 1, Word::MAX],
            prefixes: vec![vec![]],
            exhausted_logs: true,
        }
    }

    fn symbols(&self) -> Vec<E> {
        let mut s = E::plain().to_vec();
        s.extend(self.values.iter().map(|&v| E::recv(v)));
        s
    }

    /// Every (list, log) pair, in a fixed order.
    pub fn enumerate(&self) -> Vec<(EventList<E>, EventLog<E>)> {
        let syms = self.symbols();
        let mut tails: Vec<Vec<E>> = vec![vec![]];
        let mut frontier: Vec<Vec<E>> = vec![vec![]];
        for _ in 0..self.max_len {
            frontier = frontier
                .iter()
                .flat_map(|t| {
                    syms.iter().map(move |&s| {
                        let mut n = t.clone();
                        n.push(s);
                        n
                    })
                })
                .collect();
            tails.extend(frontier.iter().cloned());
        }
        let mut out = Vec::new();
        for p in &self.prefixes {
            for t in &tails {
                let mut events = p.clone();
                events.extend_from_slice(t);
                let list = EventList::new(events.clone());
                out.push((list.clone(), EventLog::new()));
                if self.exhausted_logs && !events.is_empty() {
                    out.push((list, EventLog::from_vec(events)));
                }
            }
        }
        out
    }
}

/// Which fields vary, and over which values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub en: Vec<ChannelEnable>,
    pub ms: Vec<SpiMode>,
    pub rx_full: Vec<bool>,
    pub tx_empty: Vec<bool>,
    /// Value loaded into every word-sized SPI register.
    pub spi_fill: Vec<Word>,
    /// Value loaded into every I2C register.
    pub i2c_fill: Vec<Word>,
    /// Value loaded into every cached sample word.
    pub cache_fill: Vec<Word>,
    pub stale: Vec<bool>,
    pub spi_events: EventBounds<SpiEvent>,
    pub i2c_events: EventBounds<I2cEvent>,
}

const MAX: Word = Word::MAX;

fn both<T: Copy>(a: T, b: T) -> Vec<T> {
    vec![a, b]
}

fn imu_frame(v: Word) -> [SpiEvent; 4] {
    [SpiEvent::XferDone, SpiEvent::Recv(v), SpiEvent::Null, SpiEvent::Null]
}

impl Domain {
    /// A single reset state with no events.
    pub fn point() -> Self {
        Domain {
            en: vec![ChannelEnable::Disabled],
            ms: vec![SpiMode::Master],
            rx_full: vec![false],
            tx_empty: vec![false],
            spi_fill: vec![0],
            i2c_fill: vec![0],
            cache_fill: vec![0],
            stale: vec![false],
            spi_events: EventBounds::none(),
            i2c_events: EventBounds::none(),
        }
    }

    /// Shipped bounds for the layer that adds `module`.
    pub fn for_module(module: Module) -> Self {
        let base = Domain::point();
        let spi = EventBounds::<SpiEvent>::default_bounds();
        let i2c = EventBounds::<I2cEvent>::default_bounds();
        let enables = both(ChannelEnable::Disabled, ChannelEnable::Enabled);
        let modes = both(SpiMode::Master, SpiMode::Slave);
        match module {
            Module::RegRw => Domain {
                en: enables,
                rx_full: both(false, true),
                spi_fill: vec![0, 1, MAX],
                spi_events: spi,
                ..base
            },
            Module::Ch0En | Module::Ch0Select => Domain {
                en: enables,
                ms: modes,
                rx_full: both(false, true),
                tx_empty: both(false, true),
                spi_fill: vec![0, 1, MAX],
                spi_events: spi,
                ..base
            },
            Module::Xfer => Domain {
                en: enables,
                ms: modes,
                rx_full: both(false, true),
                spi_fill: vec![0, 1, MAX],
                spi_events: spi,
                ..base
            },
            Module::ImuRead => {
                let full: Vec<SpiEvent> = [1, 2, 4096, 33, 0xFFFF, 0x8000]
                    .into_iter()
                    .flat_map(imu_frame)
                    .collect();
                Domain {
                    en: enables,
                    ms: modes,
                    rx_full: both(false, true),
                    spi_fill: vec![0, MAX],
                    cache_fill: vec![0, 0xFFFF],
                    stale: both(false, true),
                    spi_events: EventBounds {
                        max_len: 2,
                        prefixes: vec![vec![], full[..20].to_vec(), full],
                        ..spi
                    },
                    ..base
                }
            }
            Module::I2cRw | Module::MagAddr => Domain {
                i2c_fill: vec![0, 1, MAX],
                i2c_events: i2c,
                ..base
            },
            Module::MagRead => {
                let addr = vec![I2cEvent::Null, I2cEvent::Null, I2cEvent::Ack];
                let partial = [addr.clone(), vec![I2cEvent::Recv(0x12), I2cEvent::Recv(0x34)]].concat();
                let full = [
                    addr.clone(),
                    [0x05, 0x89, 0x00, 0x10, 0xFF, 0xFE].map(I2cEvent::Recv).to_vec(),
                ]
                .concat();
                Domain {
                    i2c_fill: vec![0, MAX],
                    cache_fill: vec![0, 0xFFFF],
                    i2c_events: EventBounds { prefixes: vec![vec![], addr, partial, full], ..i2c },
                    ..base
                }
            }
            Module::SpiBus | Module::I2cBus | Module::Timer => base,
        }
    }
}

/// A fully enumerated domain, ready for index lookups.
pub struct Enumeration {
    domain: Domain,
    spi_events: Vec<(EventList<SpiEvent>, EventLog<SpiEvent>)>,
    i2c_events: Vec<(EventList<I2cEvent>, EventLog<I2cEvent>)>,
    radices: [usize; 10],
}

impl Enumeration {
    pub fn new(domain: Domain) -> Self {
        let spi_events = domain.spi_events.enumerate();
        let i2c_events = domain.i2c_events.enumerate();
        let radices = [
            domain.en.len(),
            domain.ms.len(),
            domain.rx_full.len(),
            domain.tx_empty.len(),
            domain.spi_fill.len(),
            domain.i2c_fill.len(),
            domain.cache_fill.len(),
            domain.stale.len(),
            spi_events.len(),
            i2c_events.len(),
        ];
        Enumeration { domain, spi_events, i2c_events, radices }
    }

    pub fn len(&self) -> usize {
        self.radices.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, mut i: usize) -> AbstractState {
        let mut digit = [0usize; 10];
        for (k, r) in self.radices.iter().enumerate().rev() {
            digit[k] = i % r;
            i /= r;
        }
        let d = &self.domain;
        let (spi_env, spi_log) = self.spi_events[digit[8]].clone();
        let (i2c_env, i2c_log) = self.i2c_events[digit[9]].clone();
        build(
            Knobs {
                en: d.en[digit[0]],
                ms: d.ms[digit[1]],
                rx_full: d.rx_full[digit[2]],
                tx_empty: d.tx_empty[digit[3]],
                spi_fill: d.spi_fill[digit[4]],
                i2c_fill: d.i2c_fill[digit[5]],
                cache_fill: d.cache_fill[digit[6]],
                stale: d.stale[digit[7]],
            },
            spi_env,
            spi_log,
            i2c_env,
            i2c_log,
        )
    }
}

struct Knobs {
    en: ChannelEnable,
    ms: SpiMode,
    rx_full: bool,
    tx_empty: bool,
    spi_fill: Word,
    i2c_fill: Word,
    cache_fill: Word,
    stale: bool,
}

fn build(
    k: Knobs,
    spi_env: EventList<SpiEvent>,
    spi_log: EventLog<SpiEvent>,
    i2c_env: EventList<I2cEvent>,
    i2c_log: EventLog<I2cEvent>,
) -> AbstractState {
    let mut a = AbstractState { spi_env, spi_log, i2c_env, i2c_log, ..Default::default() };
    for i in 0..25 {
        let _ = a.spi.set(crate::RegAddr(i), k.spi_fill);
    }
    for i in 0..10 {
        let _ = a.i2c.set(crate::RegAddr(i), k.i2c_fill);
    }
    a.spi.en = k.en;
    a.spi.ms = k.ms;
    a.spi.rx_full = k.rx_full;
    a.spi.tx_empty = k.tx_empty;
    a.imu = ImuCache { words: [k.cache_fill; 6], stale: k.stale };
    a.mag = MagCache { words: [k.cache_fill; 3] };
    a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StateGenerator {
    Exhaustive(Domain),
    /// Knobs drawn from the domain; register words, event values and list
    /// lengths drawn at random. Sample `i` depends only on `(seed, i)`.
    Random { seed: u64, count: usize, domain: Domain },
}

/// A generator prepared for sampling.
pub enum Sampler {
    Exhaustive(Enumeration),
    Random { seed: u64, count: usize, domain: Domain },
}

impl StateGenerator {
    pub fn sampler(&self) -> Sampler {
        match self {
            StateGenerator::Exhaustive(d) => Sampler::Exhaustive(Enumeration::new(d.clone())),
            StateGenerator::Random { seed, count, domain } => {
                Sampler::Random { seed: *seed, count: *count, domain: domain.clone() }
            }
        }
    }
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, v: &[T]) -> T {
    v[rng.random_range(0..v.len())]
}

fn random_events<E: Alphabet>(rng: &mut ChaCha8Rng, b: &EventBounds<E>) -> (EventList<E>, EventLog<E>) {
    let mut events = b.prefixes[rng.random_range(0..b.prefixes.len())].clone();
    let extra = rng.random_range(0..=b.max_len);
    let n_plain = E::plain().len();
    for _ in 0..extra {
        let k = rng.random_range(0..=n_plain);
        events.push(if k < n_plain { E::plain()[k] } else { E::recv(rng.random()) });
    }
    let consumed = if b.exhausted_logs { rng.random_range(0..=events.len()) } else { 0 };
    let log = EventLog::from_vec(events[..consumed].to_vec());
    (EventList::new(events), log)
}

impl Sampler {
    pub fn len(&self) -> usize {
        match self {
            Sampler::Exhaustive(e) => e.len(),
            Sampler::Random { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> AbstractState {
        match self {
            Sampler::Exhaustive(e) => e.get(i),
            Sampler::Random { seed, domain, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(i as u64);
                let (spi_env, spi_log) = random_events(&mut rng, &domain.spi_events);
                let (i2c_env, i2c_log) = random_events(&mut rng, &domain.i2c_events);
                let mut a = build(
                    Knobs {
                        en: pick(&mut rng, &domain.en),
                        ms: pick(&mut rng, &domain.ms),
                        rx_full: pick(&mut rng, &domain.rx_full),
                        tx_empty: pick(&mut rng, &domain.tx_empty),
                        spi_fill: 0,
                        i2c_fill: 0,
                        cache_fill: 0,
                        stale: pick(&mut rng, &domain.stale),
                    },
                    spi_env,
                    spi_log,
                    i2c_env,
                    i2c_log,
                );
                for i in [0u32, 1, 4, 5] {
                    let _ = a.spi.set(crate::RegAddr(i), rng.random());
                }
                for i in 0..10 {
                    let _ = a.i2c.set(crate::RegAddr(i), rng.random());
                }
                a.imu.words = std::array::from_fn(|_| rng.random_range(0..=0xFFFF));
                a.mag.words = std::array::from_fn(|_| rng.random_range(0..=0xFFFF));
                a
            }
        }
    }
}

/// Interface calls exercised for `module`.
pub fn calls_for(module: Module) -> Vec<crate::driver_stack::Call> {
    use crate::driver_stack::Call;
    use crate::RegAddr;
    let words = [0, 1, MAX];
    match module {
        Module::RegRw => (0..25)
            .map(|i| Call::RegRead(RegAddr(i)))
            .chain((0..25).flat_map(|i| words.map(|v| Call::RegWrite(v, RegAddr(i)))))
            .collect(),
        Module::Ch0En => vec![Call::EnableChannel],
        Module::Ch0Select => vec![Call::SelectChannel(true), Call::SelectChannel(false)],
        Module::Xfer => words.map(Call::Transfer).to_vec(),
        Module::ImuRead => vec![Call::ImuRead],
        Module::I2cRw => (0..10)
            .map(|i| Call::I2cRegRead(RegAddr(i)))
            .chain((0..10).flat_map(|i| words.map(|v| Call::I2cRegWrite(v, RegAddr(i)))))
            .collect(),
        Module::MagAddr => vec![Call::MagAddress(0), Call::MagAddress(3), Call::MagAddress(MAX)],
        Module::MagRead => vec![Call::MagRead],
        Module::SpiBus | Module::I2cBus | Module::Timer => vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_enumeration_counts() {
        let b = EventBounds::<SpiEvent>::default_bounds();
        let n = 1 + 5 + 25 + 125 + 625;
        assert_eq!(b.enumerate().len(), 2 * n - 1);
        let mut small = EventBounds::<I2cEvent>::default_bounds();
        small.values = vec![0, 1, 2];
        small.exhausted_logs = false;
        assert_eq!(small.enumerate().len(), n);
    }

    #[test]
    fn enumeration_is_a_bijection() {
        let e = Enumeration::new(Domain::for_module(Module::Ch0En));
        assert_eq!(e.len(), 2 * 2 * 2 * 2 * 3 * 1561);
        let mut seen = std::collections::HashSet::new();
        for i in (0..e.len()).step_by(7) {
            assert!(seen.insert(e.get(i)));
        }
    }

    #[test]
    fn random_is_reproducible() {
        let g = StateGenerator::Random { seed: 9, count: 50, domain: Domain::for_module(Module::Xfer) };
        let (s1, s2) = (g.sampler(), g.sampler());
        for i in 0..50 {
            let a = s1.get(i);
            assert_eq!(a, s2.get(i));
            assert!(a.spi_log.is_prefix_of(&a.spi_env));
        }
    }
}
