//! Abstract syntax: session types, duality and polarity, names, processes,
//! queues of in-flight values, substitution and free names.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A channel name: a source identifier or a generated id.
///
/// Generated ids live in their own namespace, so they never collide with
/// identifiers that appear in source text.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Name {
    Src(String),
    Gen(u64),
}

impl Name {
    pub fn src(s: impl Into<String>) -> Self {
        Name::Src(s.into())
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Name::Src(s) => write!(f, "{s}"),
            Name::Gen(n) => write!(f, "%{n}"),
        }
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Monotonic source of fresh generated names, scoped to one run.
#[derive(Debug, Default, Clone)]
pub struct NameGen {
    next: u64,
}

impl NameGen {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self) -> Name {
        let n = self.next;
        self.next += 1;
        Name::Gen(n)
    }

    /// Start above every generated name already occurring in `p`, so fresh
    /// names stay fresh when extending an existing term.
    pub fn above(p: &Process) -> Self {
        let mut max = 0;
        p.visit_names(&mut |n| {
            if let Name::Gen(k) = n {
                max = max.max(k + 1);
            }
        });
        NameGen { next: max }
    }
}

/// A branch label of the additive types.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label(pub String);

impl Label {
    pub fn new(s: impl Into<String>) -> Self {
        Label(s.into())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Linear-logic propositions read as session protocols.
///
/// `Void` is not a source type: it only appears as the write-endpoint
/// annotation of a buffered cut whose sender has terminated.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum SessionType {
    One,
    Bot,
    Tensor(Box<SessionType>, Box<SessionType>),
    Par(Box<SessionType>, Box<SessionType>),
    Plus(BTreeMap<Label, SessionType>),
    With(BTreeMap<Label, SessionType>),
    Bang(Box<SessionType>),
    Quest(Box<SessionType>),
    LitInt,
    DualLitInt,
    Void,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// Errors raised by operations on types themselves.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TypeOpError {
    #[error("ill-formed type: void has no dual")]
    VoidDual,
    #[error("ill-formed type: void has no polarity")]
    VoidPolarity,
    #[error("ill-formed type: empty label map")]
    EmptyLabelMap,
}

impl SessionType {
    pub fn tensor(a: SessionType, b: SessionType) -> Self {
        SessionType::Tensor(Box::new(a), Box::new(b))
    }

    pub fn par(a: SessionType, b: SessionType) -> Self {
        SessionType::Par(Box::new(a), Box::new(b))
    }

    pub fn bang(a: SessionType) -> Self {
        SessionType::Bang(Box::new(a))
    }

    pub fn quest(a: SessionType) -> Self {
        SessionType::Quest(Box::new(a))
    }

    pub fn plus(branches: impl IntoIterator<Item = (Label, SessionType)>) -> Self {
        SessionType::Plus(branches.into_iter().collect())
    }

    pub fn with(branches: impl IntoIterator<Item = (Label, SessionType)>) -> Self {
        SessionType::With(branches.into_iter().collect())
    }

    /// Structural negation. Undefined on `Void`.
    pub fn dual(&self) -> Result<SessionType, TypeOpError> {
        use SessionType::*;
        Ok(match self {
            One => Bot,
            Bot => One,
            Tensor(a, b) => SessionType::par(a.dual()?, b.dual()?),
            Par(a, b) => SessionType::tensor(a.dual()?, b.dual()?),
            Plus(bs) => With(dual_branches(bs)?),
            With(bs) => Plus(dual_branches(bs)?),
            Bang(a) => SessionType::quest(a.dual()?),
            Quest(a) => SessionType::bang(a.dual()?),
            LitInt => DualLitInt,
            DualLitInt => LitInt,
            Void => return Err(TypeOpError::VoidDual),
        })
    }

    /// Positive types start write bundles, negative types start reads.
    pub fn polarity(&self) -> Result<Polarity, TypeOpError> {
        use SessionType::*;
        Ok(match self {
            One | Tensor(..) | Plus(..) | Bang(..) | LitInt => Polarity::Positive,
            Bot | Par(..) | With(..) | Quest(..) | DualLitInt => Polarity::Negative,
            Void => return Err(TypeOpError::VoidPolarity),
        })
    }

    pub fn is_positive(&self) -> bool {
        self.polarity() == Ok(Polarity::Positive)
    }

    pub fn is_negative(&self) -> bool {
        self.polarity() == Ok(Polarity::Negative)
    }
}

fn dual_branches(
    bs: &BTreeMap<Label, SessionType>,
) -> Result<BTreeMap<Label, SessionType>, TypeOpError> {
    if bs.is_empty() {
        return Err(TypeOpError::EmptyLabelMap);
    }
    bs.iter()
        .map(|(l, t)| Ok((l.clone(), t.dual()?)))
        .collect()
}

/// Which endpoint of a buffered cut carries the writer mark.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// An integer argument of a literal send: a constant or a variable bound by
/// a literal receive.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum IntExpr {
    Lit(i64),
    Var(Name),
}

/// A value in flight inside a buffered cut.
///
/// Close tokens and exponential closures can only sit at the end of a
/// well-typed queue. The machine adds environment-carrying variants of the
/// closures; these are the purely syntactic ones.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum QueueValue {
    CloseToken,
    Label(Label),
    Int(i64),
    LinClos { bound: Name, body: Process },
    ExpClos { bound: Name, body: Process },
}

/// FIFO of queue values. Enqueue at the back, dequeue at the front;
/// concatenation keeps the front queue first.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize)]
pub struct Queue(pub Vec<QueueValue>);

impl Queue {
    pub fn empty() -> Self {
        Queue(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn push_back(&mut self, v: QueueValue) {
        self.0.push(v);
    }

    pub fn front(&self) -> Option<&QueueValue> {
        self.0.first()
    }

    pub fn pop_front(&mut self) -> Option<QueueValue> {
        if self.0.is_empty() {
            None
        } else {
            Some(self.0.remove(0))
        }
    }

    /// `self @ rhs`: the values of `self` are dequeued first.
    pub fn concat(mut self, rhs: Queue) -> Queue {
        self.0.extend(rhs.0);
        self
    }
}

/// Process terms of the calculus, including the two runtime constructs:
/// buffered cuts carrying queues and the concurrency-annotated cut.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Process {
    Inact,
    Mix(Box<Process>, Box<Process>),
    Fwd(Name, Name),
    /// `cut { left |x:ty| right }`; `conc` marks the forking variant.
    Cut {
        left: Box<Process>,
        name: Name,
        ty: SessionType,
        right: Box<Process>,
        conc: bool,
    },
    /// `cut { left |~x:A [q] y:B| right }` with the writer mark on one side.
    BufCut {
        left: Box<Process>,
        left_name: Name,
        left_ty: SessionType,
        queue: Queue,
        right_name: Name,
        right_ty: SessionType,
        right: Box<Process>,
        writer: Side,
        conc: bool,
    },
    /// `cut! { y.server |!x:A| client }`
    CutBang {
        bound: Name,
        server: Box<Process>,
        name: Name,
        ty: SessionType,
        client: Box<Process>,
    },
    Close(Name),
    Wait(Name, Box<Process>),
    /// `send x(y. payload); cont`
    Send {
        chan: Name,
        bound: Name,
        payload: Box<Process>,
        cont: Box<Process>,
    },
    /// `recv x(z); cont`
    Recv {
        chan: Name,
        bound: Name,
        cont: Box<Process>,
    },
    /// `#l x; cont`
    Select {
        chan: Name,
        label: Label,
        cont: Box<Process>,
    },
    /// `case x { |#l: P ... }`
    Case {
        chan: Name,
        branches: BTreeMap<Label, Process>,
    },
    /// `!x(y); body`
    Server {
        chan: Name,
        bound: Name,
        body: Box<Process>,
    },
    /// `?x; cont`
    Quest { chan: Name, cont: Box<Process> },
    /// `call x(z); cont`
    Call {
        chan: Name,
        bound: Name,
        cont: Box<Process>,
    },
    /// `send x(3); cont`
    SendLit {
        chan: Name,
        value: IntExpr,
        cont: Box<Process>,
    },
    /// `recv x(v); cont` where the payload is an integer
    RecvLit {
        chan: Name,
        var: Name,
        cont: Box<Process>,
    },
}

impl Process {
    pub fn mix(p: Process, q: Process) -> Process {
        Process::Mix(Box::new(p), Box::new(q))
    }

    pub fn cut(left: Process, name: Name, ty: SessionType, right: Process) -> Process {
        Process::Cut {
            left: Box::new(left),
            name,
            ty,
            right: Box::new(right),
            conc: false,
        }
    }

    pub fn pcut(left: Process, name: Name, ty: SessionType, right: Process) -> Process {
        Process::Cut {
            left: Box::new(left),
            name,
            ty,
            right: Box::new(right),
            conc: true,
        }
    }

    pub fn wait(x: Name, p: Process) -> Process {
        Process::Wait(x, Box::new(p))
    }

    pub fn send(chan: Name, bound: Name, payload: Process, cont: Process) -> Process {
        Process::Send {
            chan,
            bound,
            payload: Box::new(payload),
            cont: Box::new(cont),
        }
    }

    pub fn recv(chan: Name, bound: Name, cont: Process) -> Process {
        Process::Recv {
            chan,
            bound,
            cont: Box::new(cont),
        }
    }

    pub fn select(chan: Name, label: Label, cont: Process) -> Process {
        Process::Select {
            chan,
            label,
            cont: Box::new(cont),
        }
    }

    pub fn is_inact(&self) -> bool {
        matches!(self, Process::Inact)
    }

    /// The subject of an action process, when it is one. Static constructs
    /// and forwarders report no single subject.
    pub fn action_subject(&self) -> Option<&Name> {
        use Process::*;
        match self {
            Close(x) | Wait(x, _) => Some(x),
            Send { chan, .. }
            | Recv { chan, .. }
            | Select { chan, .. }
            | Case { chan, .. }
            | Server { chan, .. }
            | Quest { chan, .. }
            | Call { chan, .. }
            | SendLit { chan, .. }
            | RecvLit { chan, .. } => Some(chan),
            _ => None,
        }
    }

    /// Actions that start a read: wait, recv, case, quest, call.
    pub fn is_negative_action(&self) -> bool {
        matches!(
            self,
            Process::Wait(..)
                | Process::Recv { .. }
                | Process::Case { .. }
                | Process::Quest { .. }
                | Process::Call { .. }
                | Process::RecvLit { .. }
        )
    }

    /// Node count, with the inert process free. Used by the corpus
    /// generators to bound enumeration.
    pub fn size(&self) -> usize {
        use Process::*;
        match self {
            Inact => 0,
            Mix(p, q) => 1 + p.size() + q.size(),
            Fwd(..) | Close(..) => 1,
            Cut { left, right, .. } => 1 + left.size() + right.size(),
            BufCut {
                left, right, queue, ..
            } => {
                let qsize: usize = queue
                    .0
                    .iter()
                    .map(|v| match v {
                        QueueValue::LinClos { body, .. } | QueueValue::ExpClos { body, .. } => {
                            1 + body.size()
                        }
                        _ => 1,
                    })
                    .sum();
                1 + left.size() + right.size() + qsize
            }
            CutBang { server, client, .. } => 1 + server.size() + client.size(),
            Wait(_, p) => 1 + p.size(),
            Send { payload, cont, .. } => 1 + payload.size() + cont.size(),
            Recv { cont, .. }
            | Select { cont, .. }
            | Quest { cont, .. }
            | Call { cont, .. }
            | SendLit { cont, .. }
            | RecvLit { cont, .. } => 1 + cont.size(),
            Case { branches, .. } => 1 + branches.values().map(Process::size).sum::<usize>(),
            Server { body, .. } => 1 + body.size(),
        }
    }

    /// Visit every name occurrence, bound or free.
    pub fn visit_names(&self, f: &mut impl FnMut(&Name)) {
        use Process::*;
        match self {
            Inact => {}
            Mix(p, q) => {
                p.visit_names(f);
                q.visit_names(f);
            }
            Fwd(x, y) => {
                f(x);
                f(y);
            }
            Cut {
                left, name, right, ..
            } => {
                f(name);
                left.visit_names(f);
                right.visit_names(f);
            }
            BufCut {
                left,
                left_name,
                queue,
                right_name,
                right,
                ..
            } => {
                f(left_name);
                f(right_name);
                for v in &queue.0 {
                    match v {
                        QueueValue::LinClos { bound, body } | QueueValue::ExpClos { bound, body } => {
                            f(bound);
                            body.visit_names(f);
                        }
                        _ => {}
                    }
                }
                left.visit_names(f);
                right.visit_names(f);
            }
            CutBang {
                bound,
                server,
                name,
                client,
                ..
            } => {
                f(bound);
                f(name);
                server.visit_names(f);
                client.visit_names(f);
            }
            Close(x) => f(x),
            Wait(x, p) => {
                f(x);
                p.visit_names(f);
            }
            Send {
                chan,
                bound,
                payload,
                cont,
            } => {
                f(chan);
                f(bound);
                payload.visit_names(f);
                cont.visit_names(f);
            }
            Recv { chan, bound, cont } | Call { chan, bound, cont } => {
                f(chan);
                f(bound);
                cont.visit_names(f);
            }
            Select { chan, cont, .. } | Quest { chan, cont } => {
                f(chan);
                cont.visit_names(f);
            }
            Case { chan, branches } => {
                f(chan);
                for b in branches.values() {
                    b.visit_names(f);
                }
            }
            Server { chan, bound, body } => {
                f(chan);
                f(bound);
                body.visit_names(f);
            }
            SendLit { chan, value, cont } => {
                f(chan);
                if let IntExpr::Var(v) = value {
                    f(v);
                }
                cont.visit_names(f);
            }
            RecvLit { chan, var, cont } => {
                f(chan);
                f(var);
                cont.visit_names(f);
            }
        }
    }

    /// Free names, respecting all binders.
    pub fn free_names(&self) -> BTreeSet<Name> {
        use Process::*;
        match self {
            Inact => BTreeSet::new(),
            Mix(p, q) => union(p.free_names(), q.free_names()),
            Fwd(x, y) => [x.clone(), y.clone()].into_iter().collect(),
            Cut {
                left, name, right, ..
            } => {
                let mut s = union(p_minus(left.free_names(), name), p_minus(right.free_names(), name));
                s.remove(name);
                s
            }
            BufCut {
                left,
                left_name,
                queue,
                right_name,
                right,
                ..
            } => {
                let mut s = union(
                    p_minus(left.free_names(), left_name),
                    p_minus(right.free_names(), right_name),
                );
                for v in &queue.0 {
                    match v {
                        QueueValue::LinClos { bound, body } | QueueValue::ExpClos { bound, body } => {
                            s.extend(p_minus(body.free_names(), bound));
                        }
                        _ => {}
                    }
                }
                s
            }
            CutBang {
                bound,
                server,
                name,
                client,
                ..
            } => {
                let mut s = p_minus(server.free_names(), bound);
                s.extend(p_minus(client.free_names(), name));
                s
            }
            Close(x) => [x.clone()].into_iter().collect(),
            Wait(x, p) => {
                let mut s = p.free_names();
                s.insert(x.clone());
                s
            }
            Send {
                chan,
                bound,
                payload,
                cont,
            } => {
                let mut s = p_minus(payload.free_names(), bound);
                s.extend(cont.free_names());
                s.insert(chan.clone());
                s
            }
            Recv { chan, bound, cont } | Call { chan, bound, cont } => {
                let mut s = p_minus(cont.free_names(), bound);
                s.insert(chan.clone());
                s
            }
            Select { chan, cont, .. } | Quest { chan, cont } => {
                let mut s = cont.free_names();
                s.insert(chan.clone());
                s
            }
            Case { chan, branches } => {
                let mut s: BTreeSet<Name> = BTreeSet::new();
                for b in branches.values() {
                    s.extend(b.free_names());
                }
                s.insert(chan.clone());
                s
            }
            Server { chan, bound, body } => {
                let mut s = p_minus(body.free_names(), bound);
                s.insert(chan.clone());
                s
            }
            SendLit { chan, value, cont } => {
                let mut s = cont.free_names();
                if let IntExpr::Var(v) = value {
                    s.insert(v.clone());
                }
                s.insert(chan.clone());
                s
            }
            RecvLit { chan, var, cont } => {
                let mut s = p_minus(cont.free_names(), var);
                s.insert(chan.clone());
                s
            }
        }
    }

    /// Capture-avoiding renaming `{x/y}P`: every free `y` becomes `x`.
    /// Binders that would capture `x` are refreshed from `gen`.
    pub fn substitute(&self, x: &Name, y: &Name, gen: &mut NameGen) -> Process {
        if x == y {
            return self.clone();
        }
        self.subst_impl(x, y, gen)
    }

    fn subst_impl(&self, x: &Name, y: &Name, gen: &mut NameGen) -> Process {
        use Process::*;
        let sub = |n: &Name| if n == y { x.clone() } else { n.clone() };
        match self {
            Inact => Inact,
            Mix(p, q) => Process::mix(p.subst_impl(x, y, gen), q.subst_impl(x, y, gen)),
            Fwd(a, b) => Fwd(sub(a), sub(b)),
            Cut {
                left,
                name,
                ty,
                right,
                conc,
            } => {
                let (name, left, right) = subst_binder2(name, left, right, x, y, gen);
                Cut {
                    left: Box::new(left),
                    name,
                    ty: ty.clone(),
                    right: Box::new(right),
                    conc: *conc,
                }
            }
            BufCut {
                left,
                left_name,
                left_ty,
                queue,
                right_name,
                right_ty,
                right,
                writer,
                conc,
            } => {
                let (left_name, left) = subst_binder1(left_name, left, x, y, gen);
                let (right_name, right) = subst_binder1(right_name, right, x, y, gen);
                let queue = Queue(
                    queue
                        .0
                        .iter()
                        .map(|v| match v {
                            QueueValue::LinClos { bound, body } => {
                                let (bound, body) = subst_binder1(bound, body, x, y, gen);
                                QueueValue::LinClos { bound, body }
                            }
                            QueueValue::ExpClos { bound, body } => {
                                let (bound, body) = subst_binder1(bound, body, x, y, gen);
                                QueueValue::ExpClos { bound, body }
                            }
                            other => other.clone(),
                        })
                        .collect(),
                );
                BufCut {
                    left: Box::new(left),
                    left_name,
                    left_ty: left_ty.clone(),
                    queue,
                    right_name,
                    right_ty: right_ty.clone(),
                    right: Box::new(right),
                    writer: *writer,
                    conc: *conc,
                }
            }
            CutBang {
                bound,
                server,
                name,
                ty,
                client,
            } => {
                let (bound, server) = subst_binder1(bound, server, x, y, gen);
                let (name, client) = subst_binder1(name, client, x, y, gen);
                CutBang {
                    bound,
                    server: Box::new(server),
                    name,
                    ty: ty.clone(),
                    client: Box::new(client),
                }
            }
            Close(a) => Close(sub(a)),
            Wait(a, p) => Process::wait(sub(a), p.subst_impl(x, y, gen)),
            Send {
                chan,
                bound,
                payload,
                cont,
            } => {
                let (bound, payload) = subst_binder1(bound, payload, x, y, gen);
                Send {
                    chan: sub(chan),
                    bound,
                    payload: Box::new(payload),
                    cont: Box::new(cont.subst_impl(x, y, gen)),
                }
            }
            Recv { chan, bound, cont } => {
                let (bound, cont) = subst_binder1(bound, cont, x, y, gen);
                Recv {
                    chan: sub(chan),
                    bound,
                    cont: Box::new(cont),
                }
            }
            Select { chan, label, cont } => Select {
                chan: sub(chan),
                label: label.clone(),
                cont: Box::new(cont.subst_impl(x, y, gen)),
            },
            Case { chan, branches } => Case {
                chan: sub(chan),
                branches: branches
                    .iter()
                    .map(|(l, p)| (l.clone(), p.subst_impl(x, y, gen)))
                    .collect(),
            },
            Server { chan, bound, body } => {
                let (bound, body) = subst_binder1(bound, body, x, y, gen);
                Server {
                    chan: sub(chan),
                    bound,
                    body: Box::new(body),
                }
            }
            Quest { chan, cont } => Quest {
                chan: sub(chan),
                cont: Box::new(cont.subst_impl(x, y, gen)),
            },
            Call { chan, bound, cont } => {
                let (bound, cont) = subst_binder1(bound, cont, x, y, gen);
                Call {
                    chan: sub(chan),
                    bound,
                    cont: Box::new(cont),
                }
            }
            SendLit { chan, value, cont } => SendLit {
                chan: sub(chan),
                value: match value {
                    IntExpr::Var(v) => IntExpr::Var(sub(v)),
                    lit => lit.clone(),
                },
                cont: Box::new(cont.subst_impl(x, y, gen)),
            },
            RecvLit { chan, var, cont } => {
                let (var, cont) = subst_binder1(var, cont, x, y, gen);
                RecvLit {
                    chan: sub(chan),
                    var,
                    cont: Box::new(cont),
                }
            }
        }
    }

    /// Rename every binder to a fresh generated name, leaving free names
    /// alone. After this pass all binders in the term are distinct.
    pub fn freshen_binders(&self, gen: &mut NameGen) -> Process {
        self.freshen(&BTreeMap::new(), gen)
    }

    fn freshen(&self, env: &BTreeMap<Name, Name>, gen: &mut NameGen) -> Process {
        use Process::*;
        let look = |n: &Name| env.get(n).cloned().unwrap_or_else(|| n.clone());
        let bind = |env: &BTreeMap<Name, Name>, old: &Name, gen: &mut NameGen| {
            let fresh = gen.fresh();
            let mut e = env.clone();
            e.insert(old.clone(), fresh.clone());
            (fresh, e)
        };
        match self {
            Inact => Inact,
            Mix(p, q) => Process::mix(p.freshen(env, gen), q.freshen(env, gen)),
            Fwd(a, b) => Fwd(look(a), look(b)),
            Cut {
                left,
                name,
                ty,
                right,
                conc,
            } => {
                let (n, e) = bind(env, name, gen);
                Cut {
                    left: Box::new(left.freshen(&e, gen)),
                    name: n,
                    ty: ty.clone(),
                    right: Box::new(right.freshen(&e, gen)),
                    conc: *conc,
                }
            }
            BufCut {
                left,
                left_name,
                left_ty,
                queue,
                right_name,
                right_ty,
                right,
                writer,
                conc,
            } => {
                let (ln, le) = bind(env, left_name, gen);
                let (rn, re) = bind(env, right_name, gen);
                BufCut {
                    left: Box::new(left.freshen(&le, gen)),
                    left_name: ln,
                    left_ty: left_ty.clone(),
                    queue: Queue(
                        queue
                            .0
                            .iter()
                            .map(|v| match v {
                                QueueValue::LinClos { bound, body } => {
                                    let (b, e) = bind(env, bound, gen);
                                    QueueValue::LinClos {
                                        bound: b,
                                        body: body.freshen(&e, gen),
                                    }
                                }
                                QueueValue::ExpClos { bound, body } => {
                                    let (b, e) = bind(env, bound, gen);
                                    QueueValue::ExpClos {
                                        bound: b,
                                        body: body.freshen(&e, gen),
                                    }
                                }
                                other => other.clone(),
                            })
                            .collect(),
                    ),
                    right_name: rn,
                    right_ty: right_ty.clone(),
                    right: Box::new(right.freshen(&re, gen)),
                    writer: *writer,
                    conc: *conc,
                }
            }
            CutBang {
                bound,
                server,
                name,
                ty,
                client,
            } => {
                let (b, be) = bind(env, bound, gen);
                let (n, ne) = bind(env, name, gen);
                CutBang {
                    bound: b,
                    server: Box::new(server.freshen(&be, gen)),
                    name: n,
                    ty: ty.clone(),
                    client: Box::new(client.freshen(&ne, gen)),
                }
            }
            Close(a) => Close(look(a)),
            Wait(a, p) => Process::wait(look(a), p.freshen(env, gen)),
            Send {
                chan,
                bound,
                payload,
                cont,
            } => {
                let (b, e) = bind(env, bound, gen);
                Send {
                    chan: look(chan),
                    bound: b,
                    payload: Box::new(payload.freshen(&e, gen)),
                    cont: Box::new(cont.freshen(env, gen)),
                }
            }
            Recv { chan, bound, cont } => {
                let (b, e) = bind(env, bound, gen);
                Recv {
                    chan: look(chan),
                    bound: b,
                    cont: Box::new(cont.freshen(&e, gen)),
                }
            }
            Select { chan, label, cont } => Select {
                chan: look(chan),
                label: label.clone(),
                cont: Box::new(cont.freshen(env, gen)),
            },
            Case { chan, branches } => Case {
                chan: look(chan),
                branches: branches
                    .iter()
                    .map(|(l, p)| (l.clone(), p.freshen(env, gen)))
                    .collect(),
            },
            Server { chan, bound, body } => {
                let (b, e) = bind(env, bound, gen);
                Server {
                    chan: look(chan),
                    bound: b,
                    body: Box::new(body.freshen(&e, gen)),
                }
            }
            Quest { chan, cont } => Quest {
                chan: look(chan),
                cont: Box::new(cont.freshen(env, gen)),
            },
            Call { chan, bound, cont } => {
                let (b, e) = bind(env, bound, gen);
                Call {
                    chan: look(chan),
                    bound: b,
                    cont: Box::new(cont.freshen(&e, gen)),
                }
            }
            SendLit { chan, value, cont } => SendLit {
                chan: look(chan),
                value: match value {
                    IntExpr::Var(v) => IntExpr::Var(look(v)),
                    lit => lit.clone(),
                },
                cont: Box::new(cont.freshen(env, gen)),
            },
            RecvLit { chan, var, cont } => {
                let (v, e) = bind(env, var, gen);
                RecvLit {
                    chan: look(chan),
                    var: v,
                    cont: Box::new(cont.freshen(&e, gen)),
                }
            }
        }
    }

    /// Locally-canonical renumbering of binders: the basis for
    /// alpha-equivalence checks and deterministic hashing.
    pub fn alpha_normalize(&self) -> Process {
        let mut gen = NameGen::new();
        self.freshen(&BTreeMap::new(), &mut gen)
    }

    /// Rename only binders that collide with an already-seen binder, so the
    /// engines can assume all binders are distinct while source names stay
    /// readable in traces.
    pub fn ensure_unique_binders(&self, gen: &mut NameGen) -> Process {
        let mut seen = BTreeSet::new();
        self.uniq(&mut seen, gen)
    }

    fn uniq(&self, seen: &mut BTreeSet<Name>, gen: &mut NameGen) -> Process {
        // Walk top-down; whenever a binder repeats, substitute a fresh name
        // through its scope before descending.
        use Process::*;
        let mut fresh_for = |n: &Name, seen: &mut BTreeSet<Name>, gen: &mut NameGen| -> Option<Name> {
            if seen.contains(n) {
                Some(gen.fresh())
            } else {
                seen.insert(n.clone());
                None
            }
        };
        match self {
            Inact | Fwd(..) | Close(..) => self.clone(),
            Mix(a, b) => Process::mix(a.uniq(seen, gen), b.uniq(seen, gen)),
            Wait(x, p) => Process::wait(x.clone(), p.uniq(seen, gen)),
            Cut {
                left,
                name,
                ty,
                right,
                conc,
            } => {
                let (name, left, right) = match fresh_for(name, seen, gen) {
                    Some(f) => {
                        seen.insert(f.clone());
                        (
                            f.clone(),
                            left.substitute(&f, name, gen),
                            right.substitute(&f, name, gen),
                        )
                    }
                    None => (name.clone(), (**left).clone(), (**right).clone()),
                };
                Cut {
                    left: Box::new(left.uniq(seen, gen)),
                    name,
                    ty: ty.clone(),
                    right: Box::new(right.uniq(seen, gen)),
                    conc: *conc,
                }
            }
            BufCut {
                left,
                left_name,
                left_ty,
                queue,
                right_name,
                right_ty,
                right,
                writer,
                conc,
            } => {
                let (left_name, left) = match fresh_for(left_name, seen, gen) {
                    Some(f) => {
                        seen.insert(f.clone());
                        (f.clone(), left.substitute(&f, left_name, gen))
                    }
                    None => (left_name.clone(), (**left).clone()),
                };
                let (right_name, right) = match fresh_for(right_name, seen, gen) {
                    Some(f) => {
                        seen.insert(f.clone());
                        (f.clone(), right.substitute(&f, right_name, gen))
                    }
                    None => (right_name.clone(), (**right).clone()),
                };
                let queue = Queue(
                    queue
                        .0
                        .iter()
                        .map(|v| match v {
                            QueueValue::LinClos { bound, body } => {
                                let (bound, body) = match fresh_for(bound, seen, gen) {
                                    Some(f) => {
                                        seen.insert(f.clone());
                                        (f.clone(), body.substitute(&f, bound, gen))
                                    }
                                    None => (bound.clone(), body.clone()),
                                };
                                QueueValue::LinClos {
                                    bound,
                                    body: body.uniq(seen, gen),
                                }
                            }
                            QueueValue::ExpClos { bound, body } => {
                                let (bound, body) = match fresh_for(bound, seen, gen) {
                                    Some(f) => {
                                        seen.insert(f.clone());
                                        (f.clone(), body.substitute(&f, bound, gen))
                                    }
                                    None => (bound.clone(), body.clone()),
                                };
                                QueueValue::ExpClos {
                                    bound,
                                    body: body.uniq(seen, gen),
                                }
                            }
                            other => other.clone(),
                        })
                        .collect(),
                );
                BufCut {
                    left: Box::new(left.uniq(seen, gen)),
                    left_name,
                    left_ty: left_ty.clone(),
                    queue,
                    right_name,
                    right_ty: right_ty.clone(),
                    right: Box::new(right.uniq(seen, gen)),
                    writer: *writer,
                    conc: *conc,
                }
            }
            CutBang {
                bound,
                server,
                name,
                ty,
                client,
            } => {
                let (bound, server) = match fresh_for(bound, seen, gen) {
                    Some(f) => {
                        seen.insert(f.clone());
                        (f.clone(), server.substitute(&f, bound, gen))
                    }
                    None => (bound.clone(), (**server).clone()),
                };
                let (name, client) = match fresh_for(name, seen, gen) {
                    Some(f) => {
                        seen.insert(f.clone());
                        (f.clone(), client.substitute(&f, name, gen))
                    }
                    None => (name.clone(), (**client).clone()),
                };
                CutBang {
                    bound,
                    server: Box::new(server.uniq(seen, gen)),
                    name,
                    ty: ty.clone(),
                    client: Box::new(client.uniq(seen, gen)),
                }
            }
            Send {
                chan,
                bound,
                payload,
                cont,
            } => {
                let (bound, payload) = match fresh_for(bound, seen, gen) {
                    Some(f) => {
                        seen.insert(f.clone());
                        (f.clone(), payload.substitute(&f, bound, gen))
                    }
                    None => (bound.clone(), (**payload).clone()),
                };
                Send {
                    chan: chan.clone(),
                    bound,
                    payload: Box::new(payload.uniq(seen, gen)),
                    cont: Box::new(cont.uniq(seen, gen)),
                }
            }
            Recv { chan, bound, cont } => {
                let (bound, cont) = match fresh_for(bound, seen, gen) {
                    Some(f) => {
                        seen.insert(f.clone());
                        (f.clone(), cont.substitute(&f, bound, gen))
                    }
                    None => (bound.clone(), (**cont).clone()),
                };
                Recv {
                    chan: chan.clone(),
                    bound,
                    cont: Box::new(cont.uniq(seen, gen)),
                }
            }
            Select { chan, label, cont } => Select {
                chan: chan.clone(),
                label: label.clone(),
                cont: Box::new(cont.uniq(seen, gen)),
            },
            Case { chan, branches } => Case {
                chan: chan.clone(),
                branches: branches
                    .iter()
                    .map(|(l, p)| (l.clone(), p.uniq(seen, gen)))
                    .collect(),
            },
            Server { chan, bound, body } => {
                let (bound, body) = match fresh_for(bound, seen, gen) {
                    Some(f) => {
                        seen.insert(f.clone());
                        (f.clone(), body.substitute(&f, bound, gen))
                    }
                    None => (bound.clone(), (**body).clone()),
                };
                Server {
                    chan: chan.clone(),
                    bound,
                    body: Box::new(body.uniq(seen, gen)),
                }
            }
            Quest { chan, cont } => Quest {
                chan: chan.clone(),
                cont: Box::new(cont.uniq(seen, gen)),
            },
            Call { chan, bound, cont } => {
                let (bound, cont) = match fresh_for(bound, seen, gen) {
                    Some(f) => {
                        seen.insert(f.clone());
                        (f.clone(), cont.substitute(&f, bound, gen))
                    }
                    None => (bound.clone(), (**cont).clone()),
                };
                Call {
                    chan: chan.clone(),
                    bound,
                    cont: Box::new(cont.uniq(seen, gen)),
                }
            }
            SendLit { chan, value, cont } => SendLit {
                chan: chan.clone(),
                value: value.clone(),
                cont: Box::new(cont.uniq(seen, gen)),
            },
            RecvLit { chan, var, cont } => {
                let (var, cont) = match fresh_for(var, seen, gen) {
                    Some(f) => {
                        seen.insert(f.clone());
                        (f.clone(), cont.substitute(&f, var, gen))
                    }
                    None => (var.clone(), (**cont).clone()),
                };
                RecvLit {
                    chan: chan.clone(),
                    var,
                    cont: Box::new(cont.uniq(seen, gen)),
                }
            }
        }
    }

    /// Replace free occurrences of the integer variable `v` by the literal
    /// `n`.
    pub fn subst_int(&self, v: &Name, n: i64) -> Process {
        use Process::*;
        match self {
            SendLit { chan, value, cont } => SendLit {
                chan: chan.clone(),
                value: match value {
                    IntExpr::Var(w) if w == v => IntExpr::Lit(n),
                    other => other.clone(),
                },
                cont: Box::new(cont.subst_int(v, n)),
            },
            RecvLit { chan, var, cont } => {
                if var == v {
                    self.clone()
                } else {
                    RecvLit {
                        chan: chan.clone(),
                        var: var.clone(),
                        cont: Box::new(cont.subst_int(v, n)),
                    }
                }
            }
            Inact | Fwd(..) | Close(..) => self.clone(),
            Mix(a, b) => Process::mix(a.subst_int(v, n), b.subst_int(v, n)),
            Wait(x, p) => Process::wait(x.clone(), p.subst_int(v, n)),
            Cut {
                left,
                name,
                ty,
                right,
                conc,
            } => Cut {
                left: Box::new(left.subst_int(v, n)),
                name: name.clone(),
                ty: ty.clone(),
                right: Box::new(right.subst_int(v, n)),
                conc: *conc,
            },
            BufCut {
                left,
                left_name,
                left_ty,
                queue,
                right_name,
                right_ty,
                right,
                writer,
                conc,
            } => BufCut {
                left: Box::new(left.subst_int(v, n)),
                left_name: left_name.clone(),
                left_ty: left_ty.clone(),
                queue: Queue(
                    queue
                        .0
                        .iter()
                        .map(|qv| match qv {
                            QueueValue::LinClos { bound, body } => QueueValue::LinClos {
                                bound: bound.clone(),
                                body: body.subst_int(v, n),
                            },
                            QueueValue::ExpClos { bound, body } => QueueValue::ExpClos {
                                bound: bound.clone(),
                                body: body.subst_int(v, n),
                            },
                            other => other.clone(),
                        })
                        .collect(),
                ),
                right_name: right_name.clone(),
                right_ty: right_ty.clone(),
                right: Box::new(right.subst_int(v, n)),
                writer: *writer,
                conc: *conc,
            },
            CutBang {
                bound,
                server,
                name,
                ty,
                client,
            } => CutBang {
                bound: bound.clone(),
                server: Box::new(server.subst_int(v, n)),
                name: name.clone(),
                ty: ty.clone(),
                client: Box::new(client.subst_int(v, n)),
            },
            Send {
                chan,
                bound,
                payload,
                cont,
            } => Send {
                chan: chan.clone(),
                bound: bound.clone(),
                payload: Box::new(payload.subst_int(v, n)),
                cont: Box::new(cont.subst_int(v, n)),
            },
            Recv { chan, bound, cont } => Recv {
                chan: chan.clone(),
                bound: bound.clone(),
                cont: Box::new(cont.subst_int(v, n)),
            },
            Select { chan, label, cont } => Select {
                chan: chan.clone(),
                label: label.clone(),
                cont: Box::new(cont.subst_int(v, n)),
            },
            Case { chan, branches } => Case {
                chan: chan.clone(),
                branches: branches
                    .iter()
                    .map(|(l, p)| (l.clone(), p.subst_int(v, n)))
                    .collect(),
            },
            Server { chan, bound, body } => Server {
                chan: chan.clone(),
                bound: bound.clone(),
                body: Box::new(body.subst_int(v, n)),
            },
            Quest { chan, cont } => Quest {
                chan: chan.clone(),
                cont: Box::new(cont.subst_int(v, n)),
            },
            Call { chan, bound, cont } => Call {
                chan: chan.clone(),
                bound: bound.clone(),
                cont: Box::new(cont.subst_int(v, n)),
            },
        }
    }

    pub fn alpha_eq(&self, other: &Process) -> bool {
        self.alpha_normalize() == other.alpha_normalize()
    }
}

fn union(mut a: BTreeSet<Name>, b: BTreeSet<Name>) -> BTreeSet<Name> {
    a.extend(b);
    a
}

fn p_minus(mut s: BTreeSet<Name>, n: &Name) -> BTreeSet<Name> {
    s.remove(n);
    s
}

fn subst_binder1(
    bound: &Name,
    body: &Process,
    x: &Name,
    y: &Name,
    gen: &mut NameGen,
) -> (Name, Process) {
    if bound == y {
        // y is rebound here: no free occurrence below.
        (bound.clone(), body.clone())
    } else if bound == x {
        // Would capture the incoming x: refresh the binder first.
        let fresh = gen.fresh();
        let body = body.subst_impl(&fresh, bound, gen);
        (fresh, body.subst_impl(x, y, gen))
    } else {
        (bound.clone(), body.subst_impl(x, y, gen))
    }
}

fn subst_binder2(
    name: &Name,
    left: &Process,
    right: &Process,
    x: &Name,
    y: &Name,
    gen: &mut NameGen,
) -> (Name, Process, Process) {
    if name == y {
        (name.clone(), left.clone(), right.clone())
    } else if name == x {
        let fresh = gen.fresh();
        let left = left.subst_impl(&fresh, name, gen);
        let right = right.subst_impl(&fresh, name, gen);
        (
            fresh,
            left.subst_impl(x, y, gen),
            right.subst_impl(x, y, gen),
        )
    } else {
        (
            name.clone(),
            left.subst_impl(x, y, gen),
            right.subst_impl(x, y, gen),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Name {
        Name::src(s)
    }

    #[test]
    fn dual_of_units() {
        assert_eq!(SessionType::One.dual().unwrap(), SessionType::Bot);
        assert_eq!(
            SessionType::tensor(SessionType::One, SessionType::Bot)
                .dual()
                .unwrap(),
            SessionType::par(SessionType::Bot, SessionType::One)
        );
        assert_eq!(SessionType::LitInt.dual().unwrap(), SessionType::DualLitInt);
    }

    #[test]
    fn dual_involution_on_plus() {
        let t = SessionType::plus([(Label::new("l"), SessionType::One)]);
        assert_eq!(t.dual().unwrap().dual().unwrap(), t);
    }

    #[test]
    fn void_has_no_dual_or_polarity() {
        assert!(SessionType::Void.dual().is_err());
        assert!(SessionType::Void.polarity().is_err());
    }

    #[test]
    fn polarity_table() {
        assert_eq!(
            SessionType::bang(SessionType::One).polarity().unwrap(),
            Polarity::Positive
        );
        assert_eq!(
            SessionType::par(SessionType::One, SessionType::Bot)
                .polarity()
                .unwrap(),
            Polarity::Negative
        );
        let t = SessionType::tensor(SessionType::One, SessionType::One);
        assert_eq!(
            t.dual().unwrap().polarity().unwrap(),
            t.polarity().unwrap().flip()
        );
    }

    #[test]
    fn substitute_free_occurrence() {
        let mut gen = NameGen::new();
        let p = Process::Close(n("b"));
        assert_eq!(
            p.substitute(&n("a"), &n("b"), &mut gen),
            Process::Close(n("a"))
        );
    }

    #[test]
    fn substitute_respects_binding() {
        let mut gen = NameGen::new();
        // {a/b}(cut { close b |b:1| wait b; 0 }) is unchanged up to alpha.
        let p = Process::cut(
            Process::Close(n("b")),
            n("b"),
            SessionType::One,
            Process::wait(n("b"), Process::Inact),
        );
        let q = p.substitute(&n("a"), &n("b"), &mut gen);
        assert!(p.alpha_eq(&q));
    }

    #[test]
    fn substitute_in_mix() {
        let mut gen = NameGen::new();
        let p = Process::mix(
            Process::Close(n("b")),
            Process::wait(n("b"), Process::Inact),
        );
        let q = Process::mix(
            Process::Close(n("a")),
            Process::wait(n("a"), Process::Inact),
        );
        assert_eq!(p.substitute(&n("a"), &n("b"), &mut gen), q);
    }

    #[test]
    fn free_names_of_fwd_and_cut() {
        let fwd = Process::Fwd(n("x"), n("y"));
        assert_eq!(fwd.free_names(), [n("x"), n("y")].into_iter().collect());

        let cut = Process::cut(
            Process::Close(n("x")),
            n("x"),
            SessionType::One,
            Process::wait(n("x"), Process::Inact),
        );
        assert!(cut.free_names().is_empty());

        let send = Process::send(
            n("x"),
            n("y"),
            Process::Close(n("y")),
            Process::Close(n("x")),
        );
        assert_eq!(send.free_names(), [n("x")].into_iter().collect());
    }

    #[test]
    fn alpha_equivalent_terms_agree_on_free_names() {
        let p = Process::cut(
            Process::Close(n("x")),
            n("x"),
            SessionType::One,
            Process::wait(n("x"), Process::Inact),
        );
        let q = Process::cut(
            Process::Close(n("z")),
            n("z"),
            SessionType::One,
            Process::wait(n("z"), Process::Inact),
        );
        assert!(p.alpha_eq(&q));
        assert_eq!(p.free_names(), q.free_names());
    }

    #[test]
    fn queue_concat_is_fifo() {
        let mut q1 = Queue::empty();
        q1.push_back(QueueValue::Int(3));
        let mut q2 = Queue::empty();
        q2.push_back(QueueValue::Int(2));
        let mut q = q1.concat(q2);
        assert_eq!(q.pop_front(), Some(QueueValue::Int(3)));
        assert_eq!(q.pop_front(), Some(QueueValue::Int(2)));
        assert_eq!(q.pop_front(), None);
    }
}
