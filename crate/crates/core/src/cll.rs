//! Reference rewriter for the plain calculus: redex enumeration and
//! reduction modulo the static congruences, the observability predicate,
//! and bounded multi-strategy runs. This engine exists as an oracle, not a
//! performance machine.
//!
//! Redexes are found at a distance: a cut fires when each side exposes its
//! action on the cut name somewhere under static constructs only, which is
//! exactly reachability modulo the implemented congruence subset. Prefix
//! commutations are not searched.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::syntax::{IntExpr, Label, Name, NameGen, Polarity, Process, SessionType};
use crate::trace::Event;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Step {
    MixL,
    MixR,
    CutL,
    CutR,
    BangClient,
}

pub type Path = Vec<Step>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RedexRule {
    /// `cut { fwd x y |y| P }`
    Fwd,
    /// `[1⊥]`
    OneBot,
    /// `[⊗⅋]`
    TensorPar,
    /// `[⊗⅋]` at integer payloads
    Lit,
    /// `[&⊕]`
    WithPlus,
    /// `[!?]`
    BangQuest,
    /// `[call]`
    Call,
}

impl std::fmt::Display for RedexRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RedexRule::Fwd => "[fwd]",
            RedexRule::OneBot => "[1⊥]",
            RedexRule::TensorPar => "[⊗⅋]",
            RedexRule::Lit => "[⊗⅋:int]",
            RedexRule::WithPlus => "[&⊕]",
            RedexRule::BangQuest => "[!?]",
            RedexRule::Call => "[call]",
        };
        write!(f, "{s}")
    }
}

/// A reduction opportunity: the static path to the cut, the rule, and the
/// static paths of the interacting actions within the cut's sides.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Redex {
    pub cut_path: Path,
    pub rule: RedexRule,
    /// Action position within the side named by `fwd_on_left` or, for
    /// principal redexes, within the left/right side respectively.
    pub left_action: Path,
    pub right_action: Path,
    /// For [fwd]: the forwarder lives in the left side.
    pub fwd_on_left: bool,
    pub focus: Vec<Name>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("stale redex: the term changed under it")]
    StaleRedex,
    #[error("stuck: live checked term has no redex")]
    Stuck,
    #[error("step budget exceeded")]
    BudgetExceeded,
    #[error("buffered cuts are not part of this calculus; use the buffered engine")]
    BufferedInput,
}

/// Where reduction may happen: under mixes, under either side of a cut, and
/// under the client of an exponential cut.
fn subterm<'a>(p: &'a Process, path: &[Step]) -> Option<&'a Process> {
    let mut cur = p;
    for s in path {
        cur = match (s, cur) {
            (Step::MixL, Process::Mix(a, _)) => a,
            (Step::MixR, Process::Mix(_, b)) => b,
            (Step::CutL, Process::Cut { left, .. }) => left,
            (Step::CutR, Process::Cut { right, .. }) => right,
            (Step::BangClient, Process::CutBang { client, .. }) => client,
            _ => return None,
        };
    }
    Some(cur)
}

fn replace(p: &Process, path: &[Step], with: Process) -> Process {
    if path.is_empty() {
        return with;
    }
    match (&path[0], p) {
        (Step::MixL, Process::Mix(a, b)) => {
            Process::mix(replace(a, &path[1..], with), (**b).clone())
        }
        (Step::MixR, Process::Mix(a, b)) => {
            Process::mix((**a).clone(), replace(b, &path[1..], with))
        }
        (Step::CutL, Process::Cut { left, name, ty, right, conc }) => Process::Cut {
            left: Box::new(replace(left, &path[1..], with)),
            name: name.clone(),
            ty: ty.clone(),
            right: right.clone(),
            conc: *conc,
        },
        (Step::CutR, Process::Cut { left, name, ty, right, conc }) => Process::Cut {
            left: left.clone(),
            name: name.clone(),
            ty: ty.clone(),
            right: Box::new(replace(right, &path[1..], with)),
            conc: *conc,
        },
        (Step::BangClient, Process::CutBang { bound, server, name, ty, client }) => {
            Process::CutBang {
                bound: bound.clone(),
                server: server.clone(),
                name: name.clone(),
                ty: ty.clone(),
                client: Box::new(replace(client, &path[1..], with)),
            }
        }
        _ => unreachable!("path validated before replacement"),
    }
}

// Find the action with subject `x` (or a forwarder mentioning `x`) at a
// static position. Linearity gives at most one occurrence; for unrestricted
// names every call site is returned.
fn find_actions(p: &Process, x: &Name, here: Path, out: &mut Vec<(Path, Process)>) {
    match p {
        Process::Mix(a, b) => {
            let mut l = here.clone();
            l.push(Step::MixL);
            find_actions(a, x, l, out);
            let mut r = here;
            r.push(Step::MixR);
            find_actions(b, x, r, out);
        }
        Process::Cut { left, name, right, .. } => {
            if name != x {
                let mut l = here.clone();
                l.push(Step::CutL);
                find_actions(left, x, l, out);
                let mut r = here;
                r.push(Step::CutR);
                find_actions(right, x, r, out);
            }
        }
        Process::CutBang { name, client, bound, .. } => {
            if name != x && bound != x {
                let mut c = here;
                c.push(Step::BangClient);
                find_actions(client, x, c, out);
            }
        }
        Process::Fwd(a, b) => {
            if a == x || b == x {
                out.push((here, p.clone()));
            }
        }
        other => {
            if other.action_subject() == Some(x) {
                out.push((here, other.clone()));
            }
        }
    }
}

fn rule_of_pair(a: &Process, b: &Process) -> Option<RedexRule> {
    use Process::*;
    match (a, b) {
        (Close(..), Wait(..)) | (Wait(..), Close(..)) => Some(RedexRule::OneBot),
        (Send { .. }, Recv { .. }) | (Recv { .. }, Send { .. }) => Some(RedexRule::TensorPar),
        (SendLit { .. }, RecvLit { .. }) | (RecvLit { .. }, SendLit { .. }) => {
            Some(RedexRule::Lit)
        }
        (Select { .. }, Case { .. }) | (Case { .. }, Select { .. }) => Some(RedexRule::WithPlus),
        (Server { .. }, Quest { .. }) | (Quest { .. }, Server { .. }) => Some(RedexRule::BangQuest),
        _ => None,
    }
}

/// All redexes reachable modulo the implemented congruence subset, in
/// deterministic order: leftmost cut first, forwarders before principal
/// pairs.
pub fn enumerate_redexes(p: &Process) -> Vec<Redex> {
    let mut cuts = Vec::new();
    collect_cut_paths(p, Vec::new(), &mut cuts);
    let mut out = Vec::new();
    for path in cuts {
        let node = subterm(p, &path).expect("collected path");
        match node {
            Process::Cut { left, name, right, .. } => {
                let mut la = Vec::new();
                find_actions(left, name, Vec::new(), &mut la);
                let mut ra = Vec::new();
                find_actions(right, name, Vec::new(), &mut ra);
                // Forwarder redexes: the whole opposite side is the reduct.
                for (on_left, actions) in [(true, &la), (false, &ra)] {
                    for (ap, act) in actions {
                        if let Process::Fwd(a, b) = act {
                            out.push(Redex {
                                cut_path: path.clone(),
                                rule: RedexRule::Fwd,
                                left_action: ap.clone(),
                                right_action: Vec::new(),
                                fwd_on_left: on_left,
                                focus: vec![a.clone(), b.clone()],
                            });
                        }
                    }
                }
                if let (Some((lp, lact)), Some((rp, ract))) = (la.first(), ra.first()) {
                    if let Some(rule) = rule_of_pair(lact, ract) {
                        out.push(Redex {
                            cut_path: path.clone(),
                            rule,
                            left_action: lp.clone(),
                            right_action: rp.clone(),
                            fwd_on_left: true,
                            focus: vec![name.clone()],
                        });
                    }
                }
            }
            Process::CutBang { name, client, .. } => {
                let mut calls = Vec::new();
                find_actions(client, name, Vec::new(), &mut calls);
                for (cp, act) in calls {
                    if matches!(act, Process::Call { .. }) {
                        out.push(Redex {
                            cut_path: path.clone(),
                            rule: RedexRule::Call,
                            left_action: Vec::new(),
                            right_action: cp,
                            fwd_on_left: false,
                            focus: vec![name.clone()],
                        });
                    }
                }
            }
            _ => {}
        }
    }
    out.sort();
    out
}

fn collect_cut_paths(p: &Process, here: Path, out: &mut Vec<Path>) {
    match p {
        Process::Mix(a, b) => {
            let mut l = here.clone();
            l.push(Step::MixL);
            collect_cut_paths(a, l, out);
            let mut r = here;
            r.push(Step::MixR);
            collect_cut_paths(b, r, out);
        }
        Process::Cut { left, right, .. } => {
            out.push(here.clone());
            let mut l = here.clone();
            l.push(Step::CutL);
            collect_cut_paths(left, l, out);
            let mut r = here;
            r.push(Step::CutR);
            collect_cut_paths(right, r, out);
        }
        Process::CutBang { client, .. } => {
            out.push(here.clone());
            let mut c = here;
            c.push(Step::BangClient);
            collect_cut_paths(client, c, out);
        }
        _ => {}
    }
}

/// Apply one redex. Returns the contractum and the consumption event, if
/// the rule consumes an observable value.
pub fn reduce_at(
    p: &Process,
    r: &Redex,
    gen: &mut NameGen,
) -> Result<(Process, Option<Event>), EngineError> {
    let node = subterm(p, &r.cut_path).ok_or(EngineError::StaleRedex)?;
    let (contractum, event) = match node {
        Process::Cut { left, name, ty, right, conc } => {
            let _ = conc;
            match r.rule {
                RedexRule::Fwd => {
                    let (side, other) = if r.fwd_on_left {
                        (left, right)
                    } else {
                        (right, left)
                    };
                    let fwd = subterm(side, &r.left_action).ok_or(EngineError::StaleRedex)?;
                    let Process::Fwd(a, b) = fwd else {
                        return Err(EngineError::StaleRedex);
                    };
                    let o = if a == name {
                        b.clone()
                    } else if b == name {
                        a.clone()
                    } else {
                        return Err(EngineError::StaleRedex);
                    };
                    let renamed = other.substitute(&o, name, gen);
                    (replace(side, &r.left_action, renamed), None)
                }
                rule => {
                    let lact = subterm(left, &r.left_action).ok_or(EngineError::StaleRedex)?;
                    let ract = subterm(right, &r.right_action).ok_or(EngineError::StaleRedex)?;
                    let (core, event) =
                        principal_contractum(lact, ract, name, ty, rule, gen)?;
                    let right_plugged = replace(right, &r.right_action, core);
                    (replace(left, &r.left_action, right_plugged), event)
                }
            }
        }
        Process::CutBang { bound, server, name, ty, client } => {
            let call = subterm(client, &r.right_action).ok_or(EngineError::StaleRedex)?;
            let Process::Call { chan, bound: z, cont } = call else {
                return Err(EngineError::StaleRedex);
            };
            if chan != name {
                return Err(EngineError::StaleRedex);
            }
            // Replicate the server body into a fresh linear session.
            let copy = server.freshen_binders(gen).substitute(z, bound, gen);
            let new_cut = Process::cut(copy, z.clone(), ty.clone(), (**cont).clone());
            let client2 = replace(client, &r.right_action, new_cut);
            (
                Process::CutBang {
                    bound: bound.clone(),
                    server: server.clone(),
                    name: name.clone(),
                    ty: ty.clone(),
                    client: Box::new(client2),
                },
                None,
            )
        }
        _ => return Err(EngineError::StaleRedex),
    };
    Ok((replace(p, &r.cut_path, contractum), event))
}

// The reduct of a principal cut, before re-wrapping the static contexts.
fn principal_contractum(
    lact: &Process,
    ract: &Process,
    name: &Name,
    ty: &SessionType,
    rule: RedexRule,
    gen: &mut NameGen,
) -> Result<(Process, Option<Event>), EngineError> {
    use Process::*;
    match rule {
        RedexRule::OneBot => {
            let cont = match (lact, ract) {
                (Close(_), Wait(_, p)) | (Wait(_, p), Close(_)) => (**p).clone(),
                _ => return Err(EngineError::StaleRedex),
            };
            Ok((cont, Some(Event::Close)))
        }
        RedexRule::TensorPar => {
            let (send_left, send, recv) = match (lact, ract) {
                (s @ Send { .. }, r @ Recv { .. }) => (true, s, r),
                (r @ Recv { .. }, s @ Send { .. }) => (false, s, r),
                _ => return Err(EngineError::StaleRedex),
            };
            let (Send { bound: y, payload, cont: q, .. }, Recv { bound: z, cont: rk, .. }) =
                (send, recv)
            else {
                return Err(EngineError::StaleRedex);
            };
            let (a, b) = match tensor_of(ty, send_left) {
                Some(ab) => ab,
                None => return Err(EngineError::StaleRedex),
            };
            let renamed = rk.substitute(y, z, gen);
            let inner = Process::cut((**payload).clone(), y.clone(), a, renamed);
            // Keep the continuation of the sender on its original side.
            let outer = if send_left {
                Process::cut((**q).clone(), name.clone(), b, inner)
            } else {
                Process::cut(inner, name.clone(), b.dual().unwrap(), (**q).clone())
            };
            Ok((outer, Some(Event::Clos)))
        }
        RedexRule::Lit => {
            let (send_left, sv, rv, rk) = match (lact, ract) {
                (SendLit { value, .. }, RecvLit { var, cont, .. }) => {
                    (true, value.clone(), var.clone(), (**cont).clone())
                }
                (RecvLit { var, cont, .. }, SendLit { value, .. }) => {
                    (false, value.clone(), var.clone(), (**cont).clone())
                }
                _ => return Err(EngineError::StaleRedex),
            };
            let n = match sv {
                IntExpr::Lit(n) => n,
                IntExpr::Var(_) => return Err(EngineError::StaleRedex),
            };
            let (_, b) = match tensor_of(ty, send_left) {
                Some(ab) => ab,
                None => return Err(EngineError::StaleRedex),
            };
            let rk = rk.subst_int(&rv, n);
            let scont = match (lact, ract) {
                (SendLit { cont, .. }, _) | (_, SendLit { cont, .. }) => (**cont).clone(),
                _ => unreachable!(),
            };
            let out = if send_left {
                Process::cut(scont, name.clone(), b, rk)
            } else {
                Process::cut(rk, name.clone(), b.dual().unwrap(), scont)
            };
            Ok((out, Some(Event::Int(n))))
        }
        RedexRule::WithPlus => {
            let (sel_left, label, sk, branches) = match (lact, ract) {
                (Select { label, cont, .. }, Case { branches, .. }) => {
                    (true, label.clone(), (**cont).clone(), branches.clone())
                }
                (Case { branches, .. }, Select { label, cont, .. }) => {
                    (false, label.clone(), (**cont).clone(), branches.clone())
                }
                _ => return Err(EngineError::StaleRedex),
            };
            let branch = branches
                .get(&label)
                .cloned()
                .ok_or(EngineError::StaleRedex)?;
            let branch_ty = plus_branch_of(ty, sel_left, &label).ok_or(EngineError::StaleRedex)?;
            let out = if sel_left {
                Process::cut(sk, name.clone(), branch_ty, branch)
            } else {
                Process::cut(branch, name.clone(), branch_ty.dual().unwrap(), sk)
            };
            Ok((out, Some(Event::Label(label))))
        }
        RedexRule::BangQuest => {
            let (srv, quest_cont) = match (lact, ract) {
                (Server { bound, body, .. }, Quest { cont, .. }) => {
                    ((bound.clone(), (**body).clone()), (**cont).clone())
                }
                (Quest { cont, .. }, Server { bound, body, .. }) => {
                    ((bound.clone(), (**body).clone()), (**cont).clone())
                }
                _ => return Err(EngineError::StaleRedex),
            };
            let provided = bang_of(ty, matches!(lact, Server { .. }))
                .ok_or(EngineError::StaleRedex)?;
            Ok((
                Process::CutBang {
                    bound: srv.0,
                    server: Box::new(srv.1),
                    name: name.clone(),
                    ty: provided,
                    client: Box::new(quest_cont),
                },
                None,
            ))
        }
        RedexRule::Fwd | RedexRule::Call => Err(EngineError::StaleRedex),
    }
}

// The annotation seen from the sending side.
fn tensor_of(ty: &SessionType, send_left: bool) -> Option<(SessionType, SessionType)> {
    let t = if send_left {
        ty.clone()
    } else {
        ty.dual().ok()?
    };
    match t {
        SessionType::Tensor(a, b) => Some((*a, *b)),
        _ => None,
    }
}

fn plus_branch_of(ty: &SessionType, sel_left: bool, label: &Label) -> Option<SessionType> {
    let t = if sel_left { ty.clone() } else { ty.dual().ok()? };
    match t {
        SessionType::Plus(bs) => bs.get(label).cloned(),
        _ => None,
    }
}

fn bang_of(ty: &SessionType, server_left: bool) -> Option<SessionType> {
    let t = if server_left {
        ty.clone()
    } else {
        ty.dual().ok()?
    };
    match t {
        SessionType::Bang(a) => Some(*a),
        _ => None,
    }
}

/// The observability predicate: names on which the process offers an
/// immediate interaction, modulo the implemented congruence subset.
pub fn observables(p: &Process) -> std::collections::BTreeSet<Name> {
    use Process::*;
    match p {
        Inact => Default::default(),
        Fwd(x, y) => [x.clone(), y.clone()].into_iter().collect(),
        Mix(a, b) => {
            let mut s = observables(a);
            s.extend(observables(b));
            s
        }
        Cut { left, name, right, .. } => {
            let mut s = observables(left);
            s.extend(observables(right));
            s.remove(name);
            s
        }
        BufCut { left, left_name, right_name, right, .. } => {
            let mut s = observables(left);
            s.extend(observables(right));
            s.remove(left_name);
            s.remove(right_name);
            s
        }
        CutBang { name, client, .. } => {
            let mut s = observables(client);
            s.remove(name);
            s
        }
        act => act
            .action_subject()
            .map(|n| [n.clone()].into_iter().collect())
            .unwrap_or_default(),
    }
}

/// A process is live when an action sits at a static position.
pub fn is_live(p: &Process) -> bool {
    match p {
        Process::Inact => false,
        Process::Mix(a, b) => is_live(a) || is_live(b),
        Process::Cut { left, right, .. } => is_live(left) || is_live(right),
        Process::BufCut { left, right, .. } => is_live(left) || is_live(right),
        Process::CutBang { client, .. } => is_live(client),
        _ => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    First,
    Random(u64),
}

#[derive(Debug, Clone)]
pub struct CllRun {
    pub steps: Vec<(RedexRule, Process)>,
    pub final_term: Process,
    pub events: Vec<Event>,
}

pub const DEFAULT_CLL_BUDGET: usize = 10_000;

/// Reduce to normal form under a strategy. Checked closed input terminates;
/// the budget guards against engine bugs.
pub fn run_cll(
    p: &Process,
    strategy: Strategy,
    budget: usize,
) -> Result<CllRun, EngineError> {
    if contains_bufcut(p) {
        return Err(EngineError::BufferedInput);
    }
    let mut gen = NameGen::above(p);
    let mut cur = p.ensure_unique_binders(&mut gen);
    let mut steps = Vec::new();
    let mut events = Vec::new();
    let mut rng = match strategy {
        Strategy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Strategy::First => None,
    };
    for _ in 0..budget {
        let redexes = enumerate_redexes(&cur);
        if redexes.is_empty() {
            if is_live(&cur) && cur.free_names().is_empty() {
                return Err(EngineError::Stuck);
            }
            return Ok(CllRun {
                steps,
                final_term: cur,
                events,
            });
        }
        let r = match &mut rng {
            Some(rng) => &redexes[rng.gen_range(0..redexes.len())],
            None => &redexes[0],
        };
        let (next, ev) = reduce_at(&cur, r, &mut gen)?;
        if let Some(ev) = ev {
            events.push(ev);
        }
        steps.push((r.rule, next.clone()));
        cur = next;
    }
    Err(EngineError::BudgetExceeded)
}

/// All normal forms reachable within a budget, for the confluence suite.
pub fn all_normal_forms(p: &Process, budget: usize) -> Result<Vec<Process>, EngineError> {
    let mut gen = NameGen::above(p);
    let start = p.ensure_unique_binders(&mut gen);
    let mut frontier = vec![start];
    let mut normals = Vec::new();
    let mut visited = std::collections::BTreeSet::new();
    let mut expanded = 0usize;
    while let Some(t) = frontier.pop() {
        let key = crate::congruence::canonical_form(&t);
        if !visited.insert(key) {
            continue;
        }
        expanded += 1;
        if expanded > budget {
            return Err(EngineError::BudgetExceeded);
        }
        let redexes = enumerate_redexes(&t);
        if redexes.is_empty() {
            normals.push(t);
            continue;
        }
        for r in redexes {
            let (next, _) = reduce_at(&t, &r, &mut gen)?;
            frontier.push(next);
        }
    }
    Ok(normals)
}

fn contains_bufcut(p: &Process) -> bool {
    use Process::*;
    match p {
        BufCut { .. } => true,
        Mix(a, b) => contains_bufcut(a) || contains_bufcut(b),
        Cut { left, right, .. } => contains_bufcut(left) || contains_bufcut(right),
        CutBang { server, client, .. } => contains_bufcut(server) || contains_bufcut(client),
        Wait(_, p) => contains_bufcut(p),
        Send { payload, cont, .. } => contains_bufcut(payload) || contains_bufcut(cont),
        Recv { cont, .. }
        | Select { cont, .. }
        | Quest { cont, .. }
        | Call { cont, .. }
        | SendLit { cont, .. }
        | RecvLit { cont, .. } => contains_bufcut(cont),
        Case { branches, .. } => branches.values().any(contains_bufcut),
        Server { body, .. } => contains_bufcut(body),
        Inact | Fwd(..) | Close(..) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::congruent;
    use crate::frontend::{parse_process, ParseOptions};

    fn parse(src: &str) -> Process {
        parse_process(src, ParseOptions::default()).unwrap()
    }

    #[test]
    fn close_wait_redex_at_root() {
        let p = parse("cut { close x |x:1| wait x; 0 }");
        let rs = enumerate_redexes(&p);
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].rule, RedexRule::OneBot);
        assert!(rs[0].cut_path.is_empty());
        let mut gen = NameGen::new();
        let (q, ev) = reduce_at(&p, &rs[0], &mut gen).unwrap();
        assert_eq!(q, Process::Inact);
        assert_eq!(ev, Some(Event::Close));
    }

    #[test]
    fn inact_has_no_redex() {
        assert!(enumerate_redexes(&Process::Inact).is_empty());
    }

    #[test]
    fn fwd_redex_found_inside_outer_cut() {
        // cut { close w |w:1| cut { fwd w x ... } } exposes [fwd].
        let p = parse("cut { close w |w:1| cut { fwd x w |x:bot| close x } }");
        let rs = enumerate_redexes(&p);
        assert!(rs.iter().any(|r| r.rule == RedexRule::Fwd));
    }

    #[test]
    fn fwd_reduces_by_renaming() {
        let p = parse("cut { fwd x y |y:bot| close y }");
        let rs = enumerate_redexes(&p);
        let fwd = rs.iter().find(|r| r.rule == RedexRule::Fwd).unwrap();
        let mut gen = NameGen::new();
        let (q, _) = reduce_at(&p, fwd, &mut gen).unwrap();
        assert_eq!(q, parse("close x"));
    }

    #[test]
    fn select_case_reduces_to_branch_cut() {
        let p = parse(
            "cut { case x { |#inl: wait x; 0 |#inr: wait x; 0 } |x:&{#inl: bot|#inr: bot}| #inl x; close x }",
        );
        let rs = enumerate_redexes(&p);
        assert_eq!(rs[0].rule, RedexRule::WithPlus);
        let mut gen = NameGen::new();
        let (q, ev) = reduce_at(&p, &rs[0], &mut gen).unwrap();
        assert_eq!(ev, Some(Event::Label(Label::new("inl"))));
        assert!(congruent(&q, &parse("cut { wait x; 0 |x:bot| close x }")));
    }

    #[test]
    fn send_recv_produces_nested_cuts() {
        let p = parse(
            "cut { send x(y. close y); close x |x:1 * 1| recv x(z); wait z; wait x; 0 }",
        );
        let rs = enumerate_redexes(&p);
        assert_eq!(rs[0].rule, RedexRule::TensorPar);
        let mut gen = NameGen::above(&p);
        let (q, _) = reduce_at(&p, &rs[0], &mut gen).unwrap();
        let want = parse("cut { close x |x:1| cut { close y |y:1| wait y; wait x; 0 } }");
        assert!(congruent(&q, &want), "got {}", crate::frontend::pretty(&q));
    }

    #[test]
    fn call_replicates_server() {
        let p = parse("cut! { y. close y |!x:1| call x(z); wait z; 0 }");
        let rs = enumerate_redexes(&p);
        assert_eq!(rs[0].rule, RedexRule::Call);
        let mut gen = NameGen::above(&p);
        let (q, _) = reduce_at(&p, &rs[0], &mut gen).unwrap();
        let want = parse("cut! { y. close y |!x:1| cut { close z |z:1| wait z; 0 } }");
        assert!(congruent(&q, &want), "got {}", crate::frontend::pretty(&q));
    }

    #[test]
    fn observables_of_basic_terms() {
        let obs = observables(&parse("close x"));
        assert!(obs.contains(&Name::src("x")));
        let obs = observables(&parse("fwd x y"));
        assert_eq!(obs.len(), 2);
        // Guarded name is not observable until reduction.
        let p = parse("cut { close x |x:1| wait x; close w }");
        assert!(observables(&p).is_empty());
    }

    #[test]
    fn closed_programs_run_to_inact() {
        for src in [
            "cut { close x |x:1| wait x; 0 }",
            "cut { send x(y. close y); close x |x:1 * 1| recv x(z); wait z; wait x; 0 }",
            "cut! { y. close y |!x:1| call x(z); wait z; 0 }",
            "cut { !x(y); close y |x:!1| ?x; call x(z); wait z; 0 }",
            "cut { send x(3); close x |x:int * 1| recv x(v); wait x; 0 }",
        ] {
            let p = crate::typecheck::check_closed(&parse(src)).unwrap().process;
            let run = run_cll(&p, Strategy::First, DEFAULT_CLL_BUDGET).unwrap();
            // Exponential programs leave an inert replicated-server husk;
            // everything live must be gone.
            assert!(
                !is_live(&run.final_term),
                "{src} finished at {}",
                crate::frontend::pretty(&run.final_term)
            );
        }
    }

    #[test]
    fn confluence_on_small_program() {
        let p = parse(
            "cut { close x |x:1| wait x; 0 } || cut { close y |y:1| wait y; 0 }",
        );
        let nfs = all_normal_forms(&p, 10_000).unwrap();
        assert!(!nfs.is_empty());
        for nf in &nfs {
            assert!(congruent(nf, &nfs[0]));
        }
    }
}
