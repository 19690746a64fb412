//! Rule-named machine traces, snapshot hashing, and observable outcomes.

use serde::Serialize;

use crate::syntax::Label;

/// Transition rules of the abstract machine, as they appear in traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RuleName {
    SCut,
    Sfwd,
    S1,
    Sbot,
    Sneg,
    Stensor,
    SparPos,
    SparNeg,
    /// Literal pop: the swap-only receive.
    Spar,
    Splus,
    Swith,
    Sbang,
    Squest,
    ScallPos,
    ScallNeg,
}

impl std::fmt::Display for RuleName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RuleName::SCut => "SCut",
            RuleName::Sfwd => "Sfwd",
            RuleName::S1 => "S1",
            RuleName::Sbot => "Sbot",
            RuleName::Sneg => "Sneg",
            RuleName::Stensor => "Stensor",
            RuleName::SparPos => "SparPos",
            RuleName::SparNeg => "SparNeg",
            RuleName::Spar => "Spar",
            RuleName::Splus => "Splus",
            RuleName::Swith => "Swith",
            RuleName::Sbang => "Sbang",
            RuleName::Squest => "Squest",
            RuleName::ScallPos => "ScallPos",
            RuleName::ScallNeg => "ScallNeg",
        };
        write!(f, "{s}")
    }
}

/// One trace entry: the rule applied and the hash of the state it produced.
#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub step: usize,
    pub rule: RuleName,
    pub hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
    /// Hash of the initial state, before any transition.
    pub initial_hash: String,
}

impl Trace {
    pub fn rules(&self) -> Vec<RuleName> {
        self.entries.iter().map(|e| e.rule).collect()
    }

    /// One JSON object per line; bit-stable across runs for the same input.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("trace serializes"));
            out.push('\n');
        }
        out
    }
}

/// A value consumed from a queue: the observable outcome of a run is the
/// multiset of these events, invariant under scheduling.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Event {
    Close,
    Label(Label),
    Int(i64),
    Clos,
    ExpClos,
}

impl std::fmt::Display for Event {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Event::Close => write!(f, "close"),
            Event::Label(l) => write!(f, "{l}"),
            Event::Int(n) => write!(f, "int:{n}"),
            Event::Clos => write!(f, "clos"),
            Event::ExpClos => write!(f, "clos!"),
        }
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn hash_str(s: &str) -> String {
    format!("{:016x}", fnv1a(s.as_bytes()))
}

/// Order-insensitive digest of consumption events.
pub fn outcome_digest(events: &[Event]) -> String {
    let mut rendered: Vec<String> = events.iter().map(|e| e.to_string()).collect();
    rendered.sort();
    hash_str(&rendered.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_order_insensitive() {
        let a = [Event::Int(3), Event::Close, Event::Label(Label::new("l"))];
        let b = [Event::Label(Label::new("l")), Event::Int(3), Event::Close];
        assert_eq!(outcome_digest(&a), outcome_digest(&b));
        let c = [Event::Int(2), Event::Close];
        assert_ne!(outcome_digest(&a), outcome_digest(&c));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
    }
}
