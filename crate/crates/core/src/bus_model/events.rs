//! External sensor events, the pending event list and the consumed log.

use super::{BusError, Word};
use serde::{Deserialize, Serialize};
use std::fmt::{self, Debug};

/// Common surface of the two event alphabets.
pub trait BusEvent: Copy + Eq + Debug + Send + Sync + 'static {
    /// The identity event, also produced when the list is exhausted.
    const NULL: Self;
    fn to_text(&self) -> String;
    fn parse(line: &str) -> Result<Self, EventParseError>;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct EventParseError {
    pub line: usize,
    pub msg: String,
}

fn parse_recv(rest: &str) -> Result<Word, EventParseError> {
    rest.trim().parse::<Word>().map_err(|e| EventParseError {
        line: 0,
        msg: format!("bad RECV value `{}`: {e}", rest.trim()),
    })
}

fn bad(tok: &str) -> EventParseError {
    EventParseError { line: 0, msg: format!("unknown event `{tok}`") }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum I2cEvent {
    Null,
    Ack,
    Recv(Word),
}

impl BusEvent for I2cEvent {
    const NULL: Self = I2cEvent::Null;

    fn to_text(&self) -> String {
        match self {
            I2cEvent::Null => "NULL".into(),
            I2cEvent::Ack => "ACK".into(),
            I2cEvent::Recv(v) => format!("RECV {v}"),
        }
    }

    fn parse(line: &str) -> Result<Self, EventParseError> {
        let line = line.trim();
        match line.split_once(char::is_whitespace) {
            Some(("RECV", rest)) => Ok(I2cEvent::Recv(parse_recv(rest)?)),
            None if line == "NULL" => Ok(I2cEvent::Null),
            None if line == "ACK" => Ok(I2cEvent::Ack),
            _ => Err(bad(line)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpiEvent {
    Null,
    XferDone,
    Recv(Word),
}

impl BusEvent for SpiEvent {
    const NULL: Self = SpiEvent::Null;

    fn to_text(&self) -> String {
        match self {
            SpiEvent::Null => "NULL".into(),
            SpiEvent::XferDone => "XFERDONE".into(),
            SpiEvent::Recv(v) => format!("RECV {v}"),
        }
    }

    fn parse(line: &str) -> Result<Self, EventParseError> {
        let line = line.trim();
        match line.split_once(char::is_whitespace) {
            Some(("RECV", rest)) => Ok(SpiEvent::Recv(parse_recv(rest)?)),
            None if line == "NULL" => Ok(SpiEvent::Null),
            None if line == "XFERDONE" => Ok(SpiEvent::XferDone),
            _ => Err(bad(line)),
        }
    }
}

/// Events the environment will deliver, in order. Never mutated once built.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventList<E> {
    events: Vec<E>,
}

impl<E: BusEvent> EventList<E> {
    pub fn new(events: Vec<E>) -> Self {
        EventList { events }
    }

    pub fn as_slice(&self) -> &[E] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// One event per line; blank lines and `#` comments are skipped.
    pub fn to_text(&self) -> String {
        self.events.iter().map(|e| e.to_text() + "\n").collect()
    }

    pub fn parse(text: &str) -> Result<Self, EventParseError> {
        let mut events = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            events.push(E::parse(line).map_err(|e| EventParseError { line: i + 1, msg: e.msg })?);
        }
        Ok(EventList { events })
    }
}

impl<E> Default for EventList<E> {
    fn default() -> Self {
        EventList { events: Vec::new() }
    }
}

impl<E: Debug> Debug for EventList<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.events).finish()
    }
}

impl<E: BusEvent> From<Vec<E>> for EventList<E> {
    fn from(events: Vec<E>) -> Self {
        EventList::new(events)
    }
}

/// Events already consumed by the bus; always a prefix of its list.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventLog<E> {
    consumed: Vec<E>,
}

impl<E: BusEvent> EventLog<E> {
    pub fn new() -> Self {
        EventLog { consumed: Vec::new() }
    }

    /// A log with arbitrary contents. Used by state generators and
    /// mutants; nothing checks it against a list until the next read/write.
    pub fn from_vec(consumed: Vec<E>) -> Self {
        EventLog { consumed }
    }

    pub fn as_slice(&self) -> &[E] {
        &self.consumed
    }

    pub fn len(&self) -> usize {
        self.consumed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.consumed.is_empty()
    }

    pub fn is_prefix_of(&self, env: &EventList<E>) -> bool {
        env.events.starts_with(&self.consumed)
    }

    /// Events still pending in `env` after this log.
    pub fn remaining<'a>(&self, env: &'a EventList<E>) -> &'a [E] {
        env.events.get(self.consumed.len()..).unwrap_or(&[])
    }

    /// Drop the oldest consumed event. Breaks the prefix property; kept only
    /// so the checker can be shown to catch it.
    pub fn truncate_front(&mut self) {
        if !self.consumed.is_empty() {
            self.consumed.remove(0);
        }
    }
}

impl<E> Default for EventLog<E> {
    fn default() -> Self {
        EventLog { consumed: Vec::new() }
    }
}

impl<E: Debug> Debug for EventLog<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.consumed).finish()
    }
}

/// Pop the next pending event. An exhausted list yields the null event and
/// leaves the log as it is, so an idle bus simply observes nothing.
pub fn next_event<E: BusEvent>(
    env: &EventList<E>,
    mut log: EventLog<E>,
) -> Result<(E, EventLog<E>), BusError> {
    let n = log.consumed.len();
    if n > env.events.len() {
        return Err(BusError::PrefixViolation { position: env.events.len() });
    }
    if let Some(position) = (0..n).find(|&i| env.events[i] != log.consumed[i]) {
        return Err(BusError::PrefixViolation { position });
    }
    match env.events.get(n) {
        Some(&e) => {
            log.consumed.push(e);
            Ok((e, log))
        }
        None => Ok((E::NULL, log)),
    }
}
