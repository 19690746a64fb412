//! Dyadic typing `P ⊢ Δ; Γ` with lazy context splitting, extended with the
//! buffered-cut rules and queue-value typing. Checking also elaborates the
//! term: receives whose payload is an integer become literal receives.
//!
//! The same checker gates source programs and re-checks decoded runtime
//! states, so preservation tests can call it after every reduction step.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{
    IntExpr, Label, Name, Polarity, Process, Queue, QueueValue, SessionType, Side,
};

pub type Gamma = BTreeMap<Name, SessionType>;
pub type Delta = BTreeMap<Name, SessionType>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TypeError {
    #[error("{rule}: unknown name {name}")]
    UnknownName { name: Name, rule: &'static str },
    #[error("{rule}: linearity violation on {name}: {detail}")]
    LinearityViolation {
        name: Name,
        detail: String,
        rule: &'static str,
    },
    #[error("{rule}: expected {expected}, found {found}")]
    TypeMismatch {
        expected: String,
        found: String,
        rule: &'static str,
    },
    #[error("{rule}: polarity mismatch: {detail}")]
    PolarityMismatch { detail: String, rule: &'static str },
    #[error("[T!]: empty linear context required: {name} escapes into a replicable process")]
    EmptyContextRequired { name: Name },
    #[error("{rule}: unknown label {label}")]
    UnknownLabel { label: Label, rule: &'static str },
    #[error("[Lemma 3]: writer endpoint typed {ty} needs a non-empty queue")]
    QueueMustBeNonEmpty { ty: String },
    #[error("[Lemma 2]: {0} may only occur as the final queue value")]
    NonFinalQueueValue(String),
    #[error("ill-formed type: {0}")]
    IllFormedType(String),
    #[error("cannot infer the payload type of a queue closure; check it against a reader type")]
    PayloadInference,
}

/// One line of the derivation: where in the term, which rule closed it.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct RuleLine {
    pub path: String,
    pub rule: &'static str,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct TypeDerivationReport {
    pub verdict: &'static str,
    pub rules: Vec<RuleLine>,
    pub residual_linear: Vec<String>,
}

/// Result of a successful check: the elaborated term plus the derivation.
#[derive(Debug, Clone)]
pub struct Checked {
    pub process: Process,
    pub report: TypeDerivationReport,
}

/// Check `p ⊢ Δ; Γ`, requiring Δ to be consumed exactly.
pub fn check(p: &Process, delta: &Delta, gamma: &Gamma) -> Result<Checked, TypeError> {
    for (n, t) in delta {
        if gamma.contains_key(n) {
            return Err(TypeError::LinearityViolation {
                name: n.clone(),
                detail: "appears in both contexts".into(),
                rule: "[ctx]",
            });
        }
        validate_type(t, false)?;
    }
    for t in gamma.values() {
        validate_type(t, false)?;
    }
    let mut ck = Checker {
        lin: Lin::new(delta.clone()),
        gamma: gamma.clone(),
        ints: BTreeSet::new(),
        rules: Vec::new(),
    };
    let process = ck.chk(p, "")?;
    let residual: Vec<String> = ck.lin.avail.keys().map(|n| n.to_string()).collect();
    if let Some(n) = ck.lin.avail.keys().next() {
        return Err(TypeError::LinearityViolation {
            name: n.clone(),
            detail: "never used".into(),
            rule: "[ctx]",
        });
    }
    Ok(Checked {
        process,
        report: TypeDerivationReport {
            verdict: "accept",
            rules: ck.rules,
            residual_linear: residual,
        },
    })
}

/// Check a closed program: `p ⊢ ∅; ∅`.
pub fn check_closed(p: &Process) -> Result<Checked, TypeError> {
    check(p, &Delta::new(), &Gamma::new())
}

fn validate_type(t: &SessionType, void_ok: bool) -> Result<(), TypeError> {
    use SessionType::*;
    match t {
        Void => {
            if void_ok {
                Ok(())
            } else {
                Err(TypeError::IllFormedType("void outside a closed writer".into()))
            }
        }
        One | Bot => Ok(()),
        LitInt | DualLitInt => Err(TypeError::IllFormedType(
            "bare int types only appear under a send or receive".into(),
        )),
        Tensor(a, b) => {
            if !matches!(**a, LitInt) {
                validate_type(a, false)?;
            }
            validate_type(b, false)
        }
        Par(a, b) => {
            if !matches!(**a, DualLitInt) {
                validate_type(a, false)?;
            }
            validate_type(b, false)
        }
        Plus(bs) | With(bs) => {
            if bs.is_empty() {
                return Err(TypeError::IllFormedType("empty label map".into()));
            }
            for t in bs.values() {
                validate_type(t, false)?;
            }
            Ok(())
        }
        Bang(a) | Quest(a) => validate_type(a, false),
    }
}

#[derive(Clone)]
struct Lin {
    avail: BTreeMap<Name, SessionType>,
    used: BTreeSet<Name>,
}

impl Lin {
    fn new(avail: BTreeMap<Name, SessionType>) -> Self {
        Lin {
            avail,
            used: BTreeSet::new(),
        }
    }

    fn consume(&mut self, n: &Name, rule: &'static str) -> Result<SessionType, TypeError> {
        match self.avail.remove(n) {
            Some(t) => {
                self.used.insert(n.clone());
                Ok(t)
            }
            None => {
                if self.used.contains(n) {
                    Err(TypeError::LinearityViolation {
                        name: n.clone(),
                        detail: "used twice".into(),
                        rule,
                    })
                } else {
                    Err(TypeError::UnknownName {
                        name: n.clone(),
                        rule,
                    })
                }
            }
        }
    }

    // Bind a name for a subderivation, returning what it shadowed.
    fn bind(&mut self, n: &Name, t: SessionType) -> (Option<SessionType>, bool) {
        let was_used = self.used.remove(n);
        (self.avail.insert(n.clone(), t), was_used)
    }

    fn unbind(
        &mut self,
        n: &Name,
        shadowed: (Option<SessionType>, bool),
        rule: &'static str,
    ) -> Result<(), TypeError> {
        if self.avail.remove(n).is_some() {
            return Err(TypeError::LinearityViolation {
                name: n.clone(),
                detail: "never used".into(),
                rule,
            });
        }
        self.used.remove(n);
        if let Some(t) = shadowed.0 {
            self.avail.insert(n.clone(), t);
        }
        if shadowed.1 {
            self.used.insert(n.clone());
        }
        Ok(())
    }
}

struct Checker {
    lin: Lin,
    gamma: Gamma,
    ints: BTreeSet<Name>,
    rules: Vec<RuleLine>,
}

impl Checker {
    fn rule(&mut self, path: &str, rule: &'static str) {
        self.rules.push(RuleLine {
            path: path.to_string(),
            rule,
        });
    }

    fn chk(&mut self, p: &Process, path: &str) -> Result<Process, TypeError> {
        use Process::*;
        match p {
            Inact => {
                self.rule(path, "[T0]");
                Ok(Inact)
            }
            Mix(a, b) => {
                self.rule(path, "[Tmix]");
                let a = self.chk(a, &format!("{path}/L"))?;
                let b = self.chk(b, &format!("{path}/R"))?;
                Ok(Process::mix(a, b))
            }
            Fwd(x, y) => {
                let tx = self.lin.consume(x, "[Tfwd]")?;
                let ty = self.lin.consume(y, "[Tfwd]")?;
                let want = tx.dual().map_err(|_| TypeError::IllFormedType(
                    "void endpoint in a forwarder".into(),
                ))?;
                if ty != want {
                    return Err(TypeError::TypeMismatch {
                        expected: crate::frontend::pretty_type(&want),
                        found: crate::frontend::pretty_type(&ty),
                        rule: "[Tfwd]",
                    });
                }
                self.rule(path, "[Tfwd]");
                Ok(Fwd(x.clone(), y.clone()))
            }
            Cut {
                left,
                name,
                ty,
                right,
                conc,
            } => {
                validate_type(ty, false)?;
                let dual = ty.dual().unwrap();
                self.rule(path, "[Tcut]");
                let sh = self.lin.bind(name, ty.clone());
                let left = self.chk(left, &format!("{path}/L"))?;
                self.lin.unbind(name, sh, "[Tcut]")?;
                let sh = self.lin.bind(name, dual);
                let right = self.chk(right, &format!("{path}/R"))?;
                self.lin.unbind(name, sh, "[Tcut]")?;
                Ok(Cut {
                    left: Box::new(left),
                    name: name.clone(),
                    ty: ty.clone(),
                    right: Box::new(right),
                    conc: *conc,
                })
            }
            BufCut { .. } => self.chk_bufcut(p, path),
            CutBang {
                bound,
                server,
                name,
                ty,
                client,
            } => {
                validate_type(ty, false)?;
                self.rule(path, "[Tcut!]");
                let server =
                    self.chk_exponential_body(server, bound, ty.clone(), &format!("{path}/S"))?;
                if self.lin.avail.contains_key(name) {
                    return Err(TypeError::LinearityViolation {
                        name: name.clone(),
                        detail: "appears in both contexts".into(),
                        rule: "[Tcut!]",
                    });
                }
                let dual = ty.dual().unwrap();
                let old = self.gamma.insert(name.clone(), dual);
                let client = self.chk(client, &format!("{path}/C"))?;
                match old {
                    Some(t) => {
                        self.gamma.insert(name.clone(), t);
                    }
                    None => {
                        self.gamma.remove(name);
                    }
                }
                Ok(CutBang {
                    bound: bound.clone(),
                    server: Box::new(server),
                    name: name.clone(),
                    ty: ty.clone(),
                    client: Box::new(client),
                })
            }
            Close(x) => {
                let t = self.lin.consume(x, "[T1]")?;
                if t != SessionType::One {
                    return Err(TypeError::TypeMismatch {
                        expected: "1".into(),
                        found: crate::frontend::pretty_type(&t),
                        rule: "[T1]",
                    });
                }
                self.rule(path, "[T1]");
                Ok(Close(x.clone()))
            }
            Wait(x, q) => {
                let t = self.lin.consume(x, "[T⊥]")?;
                if t != SessionType::Bot {
                    return Err(TypeError::TypeMismatch {
                        expected: "bot".into(),
                        found: crate::frontend::pretty_type(&t),
                        rule: "[T⊥]",
                    });
                }
                self.rule(path, "[T⊥]");
                let q = self.chk(q, &format!("{path}/K"))?;
                Ok(Process::wait(x.clone(), q))
            }
            Send {
                chan,
                bound,
                payload,
                cont,
            } => {
                let t = self.lin.consume(chan, "[T⊗]")?;
                let (a, b) = match t {
                    SessionType::Tensor(a, b) => (*a, *b),
                    other => {
                        return Err(TypeError::TypeMismatch {
                            expected: "a tensor type".into(),
                            found: crate::frontend::pretty_type(&other),
                            rule: "[T⊗]",
                        })
                    }
                };
                self.rule(path, "[T⊗]");
                let sh = self.lin.bind(bound, a);
                let payload = self.chk(payload, &format!("{path}/P"))?;
                self.lin.unbind(bound, sh, "[T⊗]")?;
                let sh = self.lin.bind(chan, b);
                let cont = self.chk(cont, &format!("{path}/K"))?;
                self.restore_chan(chan, sh);
                Ok(Send {
                    chan: chan.clone(),
                    bound: bound.clone(),
                    payload: Box::new(payload),
                    cont: Box::new(cont),
                })
            }
            Recv { chan, bound, cont } => {
                let t = self.lin.consume(chan, "[T⅋]")?;
                let (a, b) = match t {
                    SessionType::Par(a, b) => (*a, *b),
                    other => {
                        return Err(TypeError::TypeMismatch {
                            expected: "a par type".into(),
                            found: crate::frontend::pretty_type(&other),
                            rule: "[T⅋]",
                        })
                    }
                };
                if a == SessionType::DualLitInt {
                    // Integer payload: elaborate to a literal receive.
                    self.rule(path, "[T⅋]");
                    let added = self.ints.insert(bound.clone());
                    let sh = self.lin.bind(chan, b);
                    let cont = self.chk(cont, &format!("{path}/K"))?;
                    self.restore_chan(chan, sh);
                    if added {
                        self.ints.remove(bound);
                    }
                    return Ok(RecvLit {
                        chan: chan.clone(),
                        var: bound.clone(),
                        cont: Box::new(cont),
                    });
                }
                self.rule(path, "[T⅋]");
                let shb = self.lin.bind(bound, a);
                let shc = self.lin.bind(chan, b);
                let cont = self.chk(cont, &format!("{path}/K"))?;
                self.restore_chan(chan, shc);
                self.lin.unbind(bound, shb, "[T⅋]")?;
                Ok(Recv {
                    chan: chan.clone(),
                    bound: bound.clone(),
                    cont: Box::new(cont),
                })
            }
            Select { chan, label, cont } => {
                let t = self.lin.consume(chan, "[T⊕]")?;
                let bs = match t {
                    SessionType::Plus(bs) => bs,
                    other => {
                        return Err(TypeError::TypeMismatch {
                            expected: "a plus type".into(),
                            found: crate::frontend::pretty_type(&other),
                            rule: "[T⊕]",
                        })
                    }
                };
                let picked = bs.get(label).cloned().ok_or_else(|| TypeError::UnknownLabel {
                    label: label.clone(),
                    rule: "[T⊕]",
                })?;
                self.rule(path, "[T⊕]");
                let sh = self.lin.bind(chan, picked);
                let cont = self.chk(cont, &format!("{path}/K"))?;
                self.restore_chan(chan, sh);
                Ok(Select {
                    chan: chan.clone(),
                    label: label.clone(),
                    cont: Box::new(cont),
                })
            }
            Case { chan, branches } => {
                let t = self.lin.consume(chan, "[T&]")?;
                let bs = match t {
                    SessionType::With(bs) => bs,
                    other => {
                        return Err(TypeError::TypeMismatch {
                            expected: "a with type".into(),
                            found: crate::frontend::pretty_type(&other),
                            rule: "[T&]",
                        })
                    }
                };
                let have: BTreeSet<_> = branches.keys().collect();
                let want: BTreeSet<_> = bs.keys().collect();
                if have != want {
                    return Err(TypeError::TypeMismatch {
                        expected: format!("branches {want:?}"),
                        found: format!("branches {have:?}"),
                        rule: "[T&]",
                    });
                }
                self.rule(path, "[T&]");
                // All branches must consume the same linear names.
                let snapshot = self.lin.clone();
                let mut consumed: Option<BTreeSet<Name>> = None;
                let mut out = BTreeMap::new();
                for (l, body) in branches {
                    self.lin = snapshot.clone();
                    let sh = self.lin.bind(chan, bs[l].clone());
                    let body = self.chk(body, &format!("{path}/B[{l}]"))?;
                    self.restore_chan(chan, sh);
                    let taken: BTreeSet<Name> = snapshot
                        .avail
                        .keys()
                        .filter(|n| !self.lin.avail.contains_key(*n))
                        .cloned()
                        .collect();
                    match &consumed {
                        None => consumed = Some(taken),
                        Some(prev) if *prev == taken => {}
                        Some(prev) => {
                            let diff = prev.symmetric_difference(&taken).next().unwrap();
                            return Err(TypeError::LinearityViolation {
                                name: diff.clone(),
                                detail: "consumed in some branches only".into(),
                                rule: "[T&]",
                            });
                        }
                    }
                    out.insert(l.clone(), body);
                }
                // Keep the post-branch context of the last branch (all agree).
                Ok(Case {
                    chan: chan.clone(),
                    branches: out,
                })
            }
            Server { chan, bound, body } => {
                let t = self.lin.consume(chan, "[T!]")?;
                let a = match t {
                    SessionType::Bang(a) => *a,
                    other => {
                        return Err(TypeError::TypeMismatch {
                            expected: "a bang type".into(),
                            found: crate::frontend::pretty_type(&other),
                            rule: "[T!]",
                        })
                    }
                };
                self.rule(path, "[T!]");
                let body = self.chk_exponential_body(body, bound, a, &format!("{path}/B"))?;
                Ok(Server {
                    chan: chan.clone(),
                    bound: bound.clone(),
                    body: Box::new(body),
                })
            }
            Quest { chan, cont } => {
                let t = self.lin.consume(chan, "[T?]")?;
                let a = match t {
                    SessionType::Quest(a) => *a,
                    other => {
                        return Err(TypeError::TypeMismatch {
                            expected: "a quest type".into(),
                            found: crate::frontend::pretty_type(&other),
                            rule: "[T?]",
                        })
                    }
                };
                self.rule(path, "[T?]");
                let old = self.gamma.insert(chan.clone(), a);
                let cont = self.chk(cont, &format!("{path}/K"))?;
                match old {
                    Some(t) => {
                        self.gamma.insert(chan.clone(), t);
                    }
                    None => {
                        self.gamma.remove(chan);
                    }
                }
                Ok(Quest {
                    chan: chan.clone(),
                    cont: Box::new(cont),
                })
            }
            Call { chan, bound, cont } => {
                let a = self
                    .gamma
                    .get(chan)
                    .cloned()
                    .ok_or_else(|| TypeError::UnknownName {
                        name: chan.clone(),
                        rule: "[Tcall]",
                    })?;
                self.rule(path, "[Tcall]");
                let sh = self.lin.bind(bound, a);
                let cont = self.chk(cont, &format!("{path}/K"))?;
                self.lin.unbind(bound, sh, "[Tcall]")?;
                Ok(Call {
                    chan: chan.clone(),
                    bound: bound.clone(),
                    cont: Box::new(cont),
                })
            }
            SendLit { chan, value, cont } => {
                let t = self.lin.consume(chan, "[T⊗]")?;
                let b = match t {
                    SessionType::Tensor(a, b) if *a == SessionType::LitInt => *b,
                    other => {
                        return Err(TypeError::TypeMismatch {
                            expected: "int * _".into(),
                            found: crate::frontend::pretty_type(&other),
                            rule: "[T⊗]",
                        })
                    }
                };
                if let IntExpr::Var(v) = value {
                    if !self.ints.contains(v) {
                        return Err(TypeError::UnknownName {
                            name: v.clone(),
                            rule: "[T⊗]",
                        });
                    }
                }
                self.rule(path, "[T⊗]");
                let sh = self.lin.bind(chan, b);
                let cont = self.chk(cont, &format!("{path}/K"))?;
                self.restore_chan(chan, sh);
                Ok(SendLit {
                    chan: chan.clone(),
                    value: value.clone(),
                    cont: Box::new(cont),
                })
            }
            RecvLit { chan, var, cont } => {
                let t = self.lin.consume(chan, "[T⅋]")?;
                let b = match t {
                    SessionType::Par(a, b) if *a == SessionType::DualLitInt => *b,
                    other => {
                        return Err(TypeError::TypeMismatch {
                            expected: "~int par _".into(),
                            found: crate::frontend::pretty_type(&other),
                            rule: "[T⅋]",
                        })
                    }
                };
                self.rule(path, "[T⅋]");
                let added = self.ints.insert(var.clone());
                let sh = self.lin.bind(chan, b);
                let cont = self.chk(cont, &format!("{path}/K"))?;
                self.restore_chan(chan, sh);
                if added {
                    self.ints.remove(var);
                }
                Ok(RecvLit {
                    chan: chan.clone(),
                    var: var.clone(),
                    cont: Box::new(cont),
                })
            }
        }
    }

    // After re-binding a channel at its continuation type, the continuation
    // must have consumed it; restore whatever the binding shadowed.
    fn restore_chan(&mut self, chan: &Name, shadowed: (Option<SessionType>, bool)) {
        if let Some(t) = self.lin.avail.remove(chan) {
            // Continuation did not consume the channel: leave it available so
            // the enclosing binder reports the violation with its own rule.
            self.lin.avail.insert(chan.clone(), t);
            return;
        }
        self.lin.used.remove(chan);
        if let Some(t) = shadowed.0 {
            self.lin.avail.insert(chan.clone(), t);
        }
        if shadowed.1 {
            self.lin.used.insert(chan.clone());
        }
    }

    // [T!] / [Tcut!] premise: the body sees only its bound name linearly.
    fn chk_exponential_body(
        &mut self,
        body: &Process,
        bound: &Name,
        ty: SessionType,
        path: &str,
    ) -> Result<Process, TypeError> {
        let saved = self.lin.clone();
        let sh = self.lin.bind(bound, ty);
        let body = self.chk(body, path)?;
        self.lin.unbind(bound, sh, "[T!]")?;
        // Nothing but the bound name may have been consumed.
        for n in saved.avail.keys() {
            if !self.lin.avail.contains_key(n) {
                return Err(TypeError::EmptyContextRequired { name: n.clone() });
            }
        }
        Ok(body)
    }

    fn chk_bufcut(&mut self, p: &Process, path: &str) -> Result<Process, TypeError> {
        let Process::BufCut {
            left,
            left_name,
            left_ty,
            queue,
            right_name,
            right_ty,
            right,
            writer,
            conc,
        } = p
        else {
            unreachable!()
        };
        let (wname, wty, wproc, rname, rty, rproc) = match writer {
            Side::Left => (left_name, left_ty, left, right_name, right_ty, right),
            Side::Right => (right_name, right_ty, right, left_name, left_ty, left),
        };
        validate_type(wty, true)?;
        validate_type(rty, false)?;
        if rty.polarity() != Ok(Polarity::Negative) {
            return Err(TypeError::PolarityMismatch {
                detail: format!(
                    "reader endpoint {rname} has non-negative type {}",
                    crate::frontend::pretty_type(rty)
                ),
                rule: "[TcutB]",
            });
        }
        let writer_inert = wproc.is_inact() && *wty == SessionType::Void;
        if *wty == SessionType::Void && !wproc.is_inact() {
            return Err(TypeError::PolarityMismatch {
                detail: "void writer type with a live writer process".into(),
                rule: "[Tcut-1]",
            });
        }
        if queue.is_empty() {
            if *wty == SessionType::Void || wty.polarity() == Ok(Polarity::Negative) {
                return Err(TypeError::QueueMustBeNonEmpty {
                    ty: crate::frontend::pretty_type(wty),
                });
            }
            let want = rty.dual().unwrap();
            if *wty != want {
                return Err(TypeError::TypeMismatch {
                    expected: crate::frontend::pretty_type(&want),
                    found: crate::frontend::pretty_type(wty),
                    rule: "[TcutB]",
                });
            }
        }
        self.rule(path, "[TcutB]");

        // Walk the queue against the reader type, consuming closure contexts
        // from the shared linear pool.
        let mut cur = rty.clone();
        let k = queue.len();
        for (i, v) in queue.0.iter().enumerate() {
            let last = i + 1 == k;
            match v {
                QueueValue::CloseToken => {
                    if !last {
                        return Err(TypeError::NonFinalQueueValue("close token".into()));
                    }
                    if cur != SessionType::Bot {
                        return Err(TypeError::TypeMismatch {
                            expected: "bot".into(),
                            found: crate::frontend::pretty_type(&cur),
                            rule: "[Tcut-1]",
                        });
                    }
                    if !writer_inert {
                        return Err(TypeError::PolarityMismatch {
                            detail: "close token enqueued but the writer is still live".into(),
                            rule: "[Tcut-1]",
                        });
                    }
                    cur = SessionType::Void;
                }
                QueueValue::ExpClos { bound, body } => {
                    if !last {
                        return Err(TypeError::NonFinalQueueValue("exponential closure".into()));
                    }
                    let u = match &cur {
                        SessionType::Quest(u) => (**u).clone(),
                        other => {
                            return Err(TypeError::TypeMismatch {
                                expected: "a quest type".into(),
                                found: crate::frontend::pretty_type(other),
                                rule: "[Tcut!]",
                            })
                        }
                    };
                    if !writer_inert {
                        return Err(TypeError::PolarityMismatch {
                            detail: "exponential closure enqueued but the writer is still live"
                                .into(),
                            rule: "[Tcut!]",
                        });
                    }
                    let provided = u.dual().unwrap();
                    self.chk_exponential_body(body, bound, provided, &format!("{path}/q{i}"))?;
                    cur = SessionType::Void;
                }
                QueueValue::Label(l) => {
                    let bs = match &cur {
                        SessionType::With(bs) => bs.clone(),
                        other => {
                            return Err(TypeError::TypeMismatch {
                                expected: "a with type".into(),
                                found: crate::frontend::pretty_type(other),
                                rule: "[Tcut-⊕]",
                            })
                        }
                    };
                    cur = bs.get(l).cloned().ok_or_else(|| TypeError::UnknownLabel {
                        label: l.clone(),
                        rule: "[Tcut-⊕]",
                    })?;
                }
                QueueValue::Int(_) => {
                    cur = match cur {
                        SessionType::Par(a, b) if *a == SessionType::DualLitInt => *b,
                        other => {
                            return Err(TypeError::TypeMismatch {
                                expected: "~int par _".into(),
                                found: crate::frontend::pretty_type(&other),
                                rule: "[Tcut-⊗]",
                            })
                        }
                    };
                }
                QueueValue::LinClos { bound, body } => {
                    let (u, b) = match cur {
                        SessionType::Par(u, b) => (*u, *b),
                        other => {
                            return Err(TypeError::TypeMismatch {
                                expected: "a par type".into(),
                                found: crate::frontend::pretty_type(&other),
                                rule: "[Tcut-⊗]",
                            })
                        }
                    };
                    let t = u.dual().map_err(|_| {
                        TypeError::IllFormedType("void payload type".into())
                    })?;
                    let sh = self.lin.bind(bound, t);
                    let _ = self.chk(body, &format!("{path}/q{i}"))?;
                    self.lin.unbind(bound, sh, "[Tcut-⊗]")?;
                    cur = b;
                }
            }
        }
        let left_out;
        let right_out;
        if writer_inert {
            if cur != SessionType::Void {
                // Queue ended before the reader type did.
                return Err(TypeError::TypeMismatch {
                    expected: "a close token or exponential closure".into(),
                    found: "end of queue".into(),
                    rule: "[Tcut-1]",
                });
            }
            let rchecked = {
                let sh = self.lin.bind(rname, rty.clone());
                let r = self.chk(rproc, &format!("{path}/R"))?;
                self.lin.unbind(rname, sh, "[TcutB]")?;
                r
            };
            match writer {
                Side::Left => {
                    left_out = Process::Inact;
                    right_out = rchecked;
                }
                Side::Right => {
                    left_out = rchecked;
                    right_out = Process::Inact;
                }
            }
        } else {
            if wty.polarity() == Ok(Polarity::Negative) && queue.is_empty() {
                return Err(TypeError::QueueMustBeNonEmpty {
                    ty: crate::frontend::pretty_type(wty),
                });
            }
            let want = wty.dual().map_err(|_| TypeError::PolarityMismatch {
                detail: "void writer type with a live writer process".into(),
                rule: "[Tcut-1]",
            })?;
            if cur != want {
                return Err(TypeError::TypeMismatch {
                    expected: crate::frontend::pretty_type(&want),
                    found: crate::frontend::pretty_type(&cur),
                    rule: "[TcutB]",
                });
            }
            let wchecked = {
                let sh = self.lin.bind(wname, wty.clone());
                let w = self.chk(wproc, &format!("{path}/W"))?;
                self.lin.unbind(wname, sh, "[TcutB]")?;
                w
            };
            let rchecked = {
                let sh = self.lin.bind(rname, rty.clone());
                let r = self.chk(rproc, &format!("{path}/R"))?;
                self.lin.unbind(rname, sh, "[TcutB]")?;
                r
            };
            match writer {
                Side::Left => {
                    left_out = wchecked;
                    right_out = rchecked;
                }
                Side::Right => {
                    left_out = rchecked;
                    right_out = wchecked;
                }
            }
        }
        Ok(Process::BufCut {
            left: Box::new(left_out),
            left_name: left_name.clone(),
            left_ty: left_ty.clone(),
            queue: queue.clone(),
            right_name: right_name.clone(),
            right_ty: right_ty.clone(),
            right: Box::new(right_out),
            writer: *writer,
            conc: *conc,
        })
    }
}

/// The type of a single queue value: a complete type or a one-hole context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueueValueType {
    /// `⊥` — a close token.
    Bot,
    /// `?Ā` — an exponential closure.
    QuestOf(SessionType),
    /// `T̄ ⅋ □` — a linear closure or integer, carrying the dual payload type.
    ParHole(SessionType),
    /// A with-context with the hole in the selected branch.
    WithHole {
        branches: BTreeMap<Label, SessionType>,
        selected: Label,
    },
}

impl QueueValueType {
    /// Plug `rest` into the hole, if any.
    pub fn plug(&self, rest: SessionType) -> SessionType {
        match self {
            QueueValueType::Bot => SessionType::Bot,
            QueueValueType::QuestOf(a) => SessionType::quest(a.clone()),
            QueueValueType::ParHole(t) => SessionType::par(t.clone(), rest),
            QueueValueType::WithHole { branches, selected } => {
                let mut bs = branches.clone();
                bs.insert(selected.clone(), rest);
                SessionType::With(bs)
            }
        }
    }
}

/// Type a single queue value, optionally against the reader-side type at its
/// queue position. Without a reader type the payload type of closures is
/// inferred, which only succeeds for bodies whose first action on the bound
/// name pins the type down.
pub fn check_queue_value(
    v: &QueueValue,
    gamma: &Gamma,
    delta: &Delta,
    against: Option<&SessionType>,
) -> Result<QueueValueType, TypeError> {
    match v {
        QueueValue::CloseToken => {
            if !delta.is_empty() {
                return Err(TypeError::LinearityViolation {
                    name: delta.keys().next().unwrap().clone(),
                    detail: "close token types under an empty linear context".into(),
                    rule: "[val-✓]",
                });
            }
            if let Some(t) = against {
                if *t != SessionType::Bot {
                    return Err(TypeError::TypeMismatch {
                        expected: "bot".into(),
                        found: crate::frontend::pretty_type(t),
                        rule: "[val-✓]",
                    });
                }
            }
            Ok(QueueValueType::Bot)
        }
        QueueValue::Int(_) => {
            let out = QueueValueType::ParHole(SessionType::DualLitInt);
            if let Some(SessionType::Par(a, _)) = against {
                if **a != SessionType::DualLitInt {
                    return Err(TypeError::TypeMismatch {
                        expected: "~int par _".into(),
                        found: crate::frontend::pretty_type(a),
                        rule: "[val-int]",
                    });
                }
            }
            Ok(out)
        }
        QueueValue::Label(l) => match against {
            Some(SessionType::With(bs)) => {
                if !bs.contains_key(l) {
                    return Err(TypeError::UnknownLabel {
                        label: l.clone(),
                        rule: "[val-#l]",
                    });
                }
                Ok(QueueValueType::WithHole {
                    branches: bs.clone(),
                    selected: l.clone(),
                })
            }
            Some(other) => Err(TypeError::TypeMismatch {
                expected: "a with type".into(),
                found: crate::frontend::pretty_type(other),
                rule: "[val-#l]",
            }),
            None => Err(TypeError::PayloadInference),
        },
        QueueValue::LinClos { bound, body } => {
            let t = match against {
                Some(SessionType::Par(u, _)) => u.dual().map_err(|_| {
                    TypeError::IllFormedType("void payload type".into())
                })?,
                Some(other) => {
                    return Err(TypeError::TypeMismatch {
                        expected: "a par type".into(),
                        found: crate::frontend::pretty_type(other),
                        rule: "[val-clos]",
                    })
                }
                None => infer_payload_type(body, bound, delta, gamma)?,
            };
            let mut sub = delta.clone();
            sub.insert(bound.clone(), t.clone());
            check(body, &sub, gamma)?;
            Ok(QueueValueType::ParHole(t.dual().unwrap()))
        }
        QueueValue::ExpClos { bound, body } => {
            if !delta.is_empty() {
                return Err(TypeError::LinearityViolation {
                    name: delta.keys().next().unwrap().clone(),
                    detail: "exponential closure types under an empty linear context".into(),
                    rule: "[val-clos!]",
                });
            }
            let a = match against {
                Some(SessionType::Quest(u)) => u.dual().map_err(|_| {
                    TypeError::IllFormedType("void payload type".into())
                })?,
                Some(other) => {
                    return Err(TypeError::TypeMismatch {
                        expected: "a quest type".into(),
                        found: crate::frontend::pretty_type(other),
                        rule: "[val-clos!]",
                    })
                }
                None => infer_payload_type(body, bound, delta, gamma)?,
            };
            let mut sub = Delta::new();
            sub.insert(bound.clone(), a.clone());
            check(body, &sub, gamma)?;
            Ok(QueueValueType::QuestOf(a.dual().unwrap()))
        }
    }
}

// Synthesize the type a closure body gives its bound name, from the first
// action on it. Fails on shapes the syntax does not determine (selects,
// quests).
fn infer_payload_type(
    body: &Process,
    bound: &Name,
    delta: &Delta,
    gamma: &Gamma,
) -> Result<SessionType, TypeError> {
    use Process::*;
    match body {
        Close(x) if x == bound => Ok(SessionType::One),
        Wait(x, _) if x == bound => Ok(SessionType::Bot),
        Fwd(x, y) if x == bound => delta
            .get(y)
            .ok_or_else(|| TypeError::PayloadInference)?
            .dual()
            .map_err(|_| TypeError::PayloadInference),
        Fwd(x, y) if y == bound => delta
            .get(x)
            .ok_or_else(|| TypeError::PayloadInference)?
            .dual()
            .map_err(|_| TypeError::PayloadInference),
        Send {
            chan,
            bound: b2,
            payload,
            cont,
        } if chan == bound => Ok(SessionType::tensor(
            infer_payload_type(payload, b2, delta, gamma)?,
            infer_payload_type(cont, bound, delta, gamma)?,
        )),
        SendLit { chan, cont, .. } if chan == bound => Ok(SessionType::tensor(
            SessionType::LitInt,
            infer_payload_type(cont, bound, delta, gamma)?,
        )),
        Recv {
            chan,
            bound: b2,
            cont,
        } if chan == bound => Ok(SessionType::par(
            infer_payload_type(cont, b2, delta, gamma)?,
            infer_payload_type(cont, bound, delta, gamma)?,
        )),
        RecvLit { chan, cont, .. } if chan == bound => Ok(SessionType::par(
            SessionType::DualLitInt,
            infer_payload_type(cont, bound, delta, gamma)?,
        )),
        Case { chan, branches } if chan == bound => {
            let bs: Result<BTreeMap<_, _>, _> = branches
                .iter()
                .map(|(l, p)| Ok((l.clone(), infer_payload_type(p, bound, delta, gamma)?)))
                .collect();
            Ok(SessionType::With(bs?))
        }
        Server { chan, bound: b2, body } if chan == bound => Ok(SessionType::bang(
            infer_payload_type(body, b2, delta, gamma)?,
        )),
        Mix(a, b) => infer_payload_type(a, bound, delta, gamma)
            .or_else(|_| infer_payload_type(b, bound, delta, gamma)),
        Wait(_, p) => infer_payload_type(p, bound, delta, gamma),
        _ => Err(TypeError::PayloadInference),
    }
}

/// The inversion of a checked buffered cut (the aggregated queue lemmas):
/// each value's one-hole type, the residual reader core, and whether the
/// writer has terminated.
#[derive(Debug, Clone)]
pub struct BufCutInversion {
    pub writer_ty: SessionType,
    pub reader_ty: SessionType,
    pub value_types: Vec<QueueValueType>,
    pub residual: SessionType,
    pub full: bool,
}

pub fn invert_buffered_cut(
    p: &Process,
    delta: &Delta,
    gamma: &Gamma,
) -> Result<BufCutInversion, TypeError> {
    let Process::BufCut {
        left_ty,
        queue,
        right_ty,
        writer,
        ..
    } = p
    else {
        return Err(TypeError::IllFormedType("not a buffered cut".into()));
    };
    check(p, delta, gamma)?;
    let (wty, rty) = match writer {
        Side::Left => (left_ty, right_ty),
        Side::Right => (right_ty, left_ty),
    };
    if (wty.polarity() == Ok(Polarity::Negative) || *wty == SessionType::Void) && queue.is_empty()
    {
        return Err(TypeError::QueueMustBeNonEmpty {
            ty: crate::frontend::pretty_type(wty),
        });
    }
    let mut value_types = Vec::new();
    let mut cur = rty.clone();
    let mut full = false;
    for v in &queue.0 {
        let vt = check_queue_value(v, gamma, delta, Some(&cur))?;
        cur = match &vt {
            QueueValueType::Bot | QueueValueType::QuestOf(_) => {
                full = true;
                SessionType::Void
            }
            QueueValueType::ParHole(_) => match cur {
                SessionType::Par(_, b) => *b,
                _ => unreachable!("checked above"),
            },
            QueueValueType::WithHole { branches, selected } => branches[selected].clone(),
        };
        value_types.push(vt);
    }
    Ok(BufCutInversion {
        writer_ty: wty.clone(),
        reader_ty: rty.clone(),
        value_types,
        residual: cur,
        full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_process, ParseOptions};
    use crate::syntax::Queue;

    fn n(s: &str) -> Name {
        Name::src(s)
    }

    fn parse(src: &str) -> Process {
        parse_process(
            src,
            ParseOptions {
                allow_runtime_syntax: true,
            },
        )
        .unwrap()
    }

    #[test]
    fn close_types_against_one() {
        let mut d = Delta::new();
        d.insert(n("x"), SessionType::One);
        let r = check(&Process::Close(n("x")), &d, &Gamma::new()).unwrap();
        assert_eq!(r.report.verdict, "accept");
    }

    #[test]
    fn fwd_needs_dual_types() {
        let mut d = Delta::new();
        d.insert(n("x"), SessionType::Bot);
        d.insert(n("y"), SessionType::One);
        assert!(check(&Process::Fwd(n("x"), n("y")), &d, &Gamma::new()).is_ok());

        let mut d2 = Delta::new();
        d2.insert(n("x"), SessionType::One);
        d2.insert(n("y"), SessionType::One);
        assert!(check(&Process::Fwd(n("x"), n("y")), &d2, &Gamma::new()).is_err());
    }

    #[test]
    fn reuse_is_a_linearity_violation() {
        let mut d = Delta::new();
        d.insert(n("x"), SessionType::One);
        let p = Process::mix(Process::Close(n("x")), Process::Close(n("x")));
        match check(&p, &d, &Gamma::new()) {
            Err(TypeError::LinearityViolation { name, .. }) => assert_eq!(name, n("x")),
            other => panic!("expected linearity violation, got {other:?}"),
        }
    }

    #[test]
    fn basic_closed_programs_check() {
        for src in [
            "cut { close x |x:1| wait x; 0 }",
            "cut { send x(y. close y); close x |x:1 * 1| recv x(z); wait z; wait x; 0 }",
            "cut { #inl x; close x |x:+{#inl: 1|#inr: 1}| case x { |#inl: wait x; 0 |#inr: wait x; 0 } }",
            "cut! { y. close y |!x:1| call x(z); wait z; 0 }",
            "cut { !x(y); close y |x:!1| ?x; call x(z); wait z; 0 }",
            "cut { send x(3); close x |x:int * 1| recv x(v); wait x; 0 }",
        ] {
            check_closed(&parse(src)).unwrap_or_else(|e| panic!("{src}: {e}"));
        }
    }

    #[test]
    fn ill_typed_programs_fail() {
        for src in [
            "close x",
            "cut { close x |x:1| close x }",
            "cut { close x |x:1| wait x; close x }",
            "cut { wait x; 0 |x:1| wait x; 0 }",
        ] {
            assert!(check_closed(&parse(src)).is_err(), "{src} should fail");
        }
    }

    #[test]
    fn server_body_must_be_linearly_closed() {
        // The server body forwards the ambient linear w.
        let p = parse(
            "cut { cut { !x(y); fwd y w |x:!1| ?x; call x(z); wait z; 0 } |w:bot| close w }",
        );
        match check_closed(&p) {
            Err(TypeError::EmptyContextRequired { .. }) => {}
            other => panic!("expected EmptyContextRequired, got {other:?}"),
        }
    }

    #[test]
    fn recv_on_int_elaborates_to_recvlit() {
        let p = parse("cut { send x(3); close x |x:int * 1| recv x(v); wait x; 0 }");
        let checked = check_closed(&p).unwrap();
        fn has_recvlit(p: &Process) -> bool {
            match p {
                Process::RecvLit { .. } => true,
                Process::Cut { left, right, .. } => has_recvlit(left) || has_recvlit(right),
                Process::Wait(_, k) => has_recvlit(k),
                _ => false,
            }
        }
        assert!(has_recvlit(&checked.process));
    }

    #[test]
    fn buffered_cut_examples() {
        // Full case: terminated writer against ⊥ reader. "void" is not
        // source syntax; build the term directly.
        let full = Process::BufCut {
            left: Box::new(Process::Inact),
            left_name: n("x"),
            left_ty: SessionType::Void,
            queue: Queue(vec![QueueValue::CloseToken]),
            right_name: n("y"),
            right_ty: SessionType::Bot,
            right: Box::new(Process::wait(n("y"), Process::Inact)),
            writer: Side::Left,
            conc: false,
        };
        let inv = invert_buffered_cut(&full, &Delta::new(), &Gamma::new()).unwrap();
        assert!(inv.full);
        assert_eq!(inv.reader_ty, SessionType::Bot);

        // Empty queue: exact duality, k = 0.
        let empty = parse("cut { close x |~x:1 [] y:bot| wait y; 0 }");
        let inv = invert_buffered_cut(&empty, &Delta::new(), &Gamma::new()).unwrap();
        assert!(inv.value_types.is_empty());
        assert_eq!(inv.residual, SessionType::One.dual().unwrap());

        // One linear closure: E1 = bot ⅋ □.
        let one_clos = Process::BufCut {
            left: Box::new(Process::Close(n("x"))),
            left_name: n("x"),
            left_ty: SessionType::One,
            queue: Queue(vec![QueueValue::LinClos {
                bound: n("z"),
                body: Process::Close(n("z")),
            }]),
            right_name: n("y"),
            right_ty: SessionType::par(SessionType::Bot, SessionType::Bot),
            right: Box::new(Process::recv(
                n("y"),
                n("w"),
                Process::wait(n("w"), Process::wait(n("y"), Process::Inact)),
            )),
            writer: Side::Left,
            conc: false,
        };
        let inv = invert_buffered_cut(&one_clos, &Delta::new(), &Gamma::new()).unwrap();
        assert_eq!(
            inv.value_types,
            vec![QueueValueType::ParHole(SessionType::Bot)]
        );
        assert_eq!(inv.residual, SessionType::Bot);
    }

    #[test]
    fn lemma3_rejects_negative_writer_with_empty_queue() {
        let p = Process::BufCut {
            left: Box::new(Process::wait(n("x"), Process::Inact)),
            left_name: n("x"),
            left_ty: SessionType::Bot,
            queue: Queue::empty(),
            right_name: n("y"),
            right_ty: SessionType::Bot,
            right: Box::new(Process::Close(n("y"))),
            writer: Side::Left,
            conc: false,
        };
        match check_closed(&p) {
            Err(TypeError::QueueMustBeNonEmpty { .. }) => {}
            other => panic!("expected Lemma 3 violation, got {other:?}"),
        }
    }

    #[test]
    fn queue_value_types() {
        // Close token under empty contexts.
        assert_eq!(
            check_queue_value(&QueueValue::CloseToken, &Gamma::new(), &Delta::new(), None)
                .unwrap(),
            QueueValueType::Bot
        );
        // Label against a with type.
        let with = SessionType::with([
            (Label::new("inl"), SessionType::Bot),
            (Label::new("inr"), SessionType::One),
        ]);
        let vt = check_queue_value(
            &QueueValue::Label(Label::new("inl")),
            &Gamma::new(),
            &Delta::new(),
            Some(&with),
        )
        .unwrap();
        match vt {
            QueueValueType::WithHole { selected, .. } => assert_eq!(selected, Label::new("inl")),
            other => panic!("{other:?}"),
        }
        // Linear closure with inferred payload type 1 gives bot ⅋ □.
        let vt = check_queue_value(
            &QueueValue::LinClos {
                bound: n("z"),
                body: Process::Close(n("z")),
            },
            &Gamma::new(),
            &Delta::new(),
            None,
        )
        .unwrap();
        assert_eq!(vt, QueueValueType::ParHole(SessionType::Bot));
    }

    #[test]
    fn report_carries_rule_names() {
        let p = parse("cut { close x |x:1| wait x; 0 }");
        let r = check_closed(&p).unwrap();
        let rules: Vec<_> = r.report.rules.iter().map(|l| l.rule).collect();
        assert!(rules.contains(&"[Tcut]"));
        assert!(rules.contains(&"[T1]"));
        assert!(rules.contains(&"[T⊥]"));
    }
}
