//! Structural-congruence decision by canonical forms.
//!
//! Two terms related by the implemented congruence subset — forwarder and
//! cut commutativity, the mix monoid laws, and the static commutations of
//! cuts, buffered cuts, and exponential cuts — receive equal canonical
//! encodings. Prefix commutations are outside the subset, so terms differing
//! only by action reordering stay distinct.
//!
//! A maximal static region (mixes, cuts, buffered cuts, exponential cuts) is
//! flattened into a soup: action-rooted parties connected by session edges,
//! with exponential bindings floated to the region top. The soup is a tree;
//! its encoding minimizes over root choices, and parallel components are
//! committed smallest-first. Continuations under action prefixes are nested
//! regions encoded recursively through one shared placeholder allocator, so
//! a session keeps a single placeholder identity across a whole party.

use std::collections::BTreeMap;

use crate::syntax::{IntExpr, Name, NameGen, Process, QueueValue, SessionType, Side};

/// Canonical encoding of a process modulo the implemented congruence subset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonForm(pub String);

pub fn congruent(p: &Process, q: &Process) -> bool {
    canonical_form(p) == canonical_form(q)
}

pub fn canonical_form(p: &Process) -> CanonForm {
    let mut gen = NameGen::above(p);
    let p = p.freshen_binders(&mut gen);
    let mut alloc = Alloc::default();
    // Free names of the whole term are part of its identity.
    for n in p.free_names() {
        alloc.tokens.insert(n.clone(), format!("f:{n}"));
    }
    CanonForm(enc_region(&p, &mut alloc, &mut gen))
}

/// Name rendering state: fixed tokens for binders, exponential servers and
/// top-level free names; first-occurrence placeholders for session endpoints
/// and names reaching in from enclosing regions.
#[derive(Clone, Default)]
struct Alloc {
    tokens: BTreeMap<Name, String>,
    slots: BTreeMap<Name, usize>,
    order: Vec<Name>,
    binders: usize,
}

impl Alloc {
    fn token(&mut self, n: &Name) -> String {
        if let Some(t) = self.tokens.get(n) {
            return t.clone();
        }
        if let Some(&i) = self.slots.get(n) {
            return format!("@{i}");
        }
        let i = self.order.len();
        self.slots.insert(n.clone(), i);
        self.order.push(n.clone());
        format!("@{i}")
    }

    fn bind(&mut self, n: &Name) -> Option<String> {
        let tok = format!("b{}", self.binders);
        self.binders += 1;
        self.tokens.insert(n.clone(), tok)
    }

    fn unbind(&mut self, n: &Name, old: Option<String>) {
        match old {
            Some(t) => {
                self.tokens.insert(n.clone(), t);
            }
            None => {
                self.tokens.remove(n);
            }
        }
    }
}

struct Bang {
    bound: Name,
    server: Process,
    name: Name,
    ty: SessionType,
}

enum Edge {
    Plain {
        names: [Name; 2],
        tys: [SessionType; 2],
        conc: bool,
    },
    Buffered {
        // Writer endpoint first.
        names: [Name; 2],
        tys: [SessionType; 2],
        queue: Vec<QueueValue>,
        conc: bool,
    },
}

impl Edge {
    fn names(&self) -> &[Name; 2] {
        match self {
            Edge::Plain { names, .. } | Edge::Buffered { names, .. } => names,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Vertex {
    Party(usize),
    Edge(usize),
    Inert,
}

#[derive(Default)]
struct Soup {
    parties: Vec<Process>,
    edges: Vec<Edge>,
    bangs: Vec<Bang>,
}

fn collect(p: &Process, soup: &mut Soup, gen: &mut NameGen) {
    match p {
        Process::Inact => {}
        Process::Mix(a, b) => {
            collect(a, soup, gen);
            collect(b, soup, gen);
        }
        Process::Cut {
            left,
            name,
            ty,
            right,
            conc,
        } => {
            // Split the shared cut name so each endpoint resolves uniquely.
            let rname = gen.fresh();
            let right = right.substitute(&rname, name, gen);
            let dual = ty.dual().unwrap_or(SessionType::Void);
            soup.edges.push(Edge::Plain {
                names: [name.clone(), rname],
                tys: [ty.clone(), dual],
                conc: *conc,
            });
            collect(left, soup, gen);
            collect(&right, soup, gen);
        }
        Process::BufCut {
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
            let (names, tys) = match writer {
                Side::Left => (
                    [left_name.clone(), right_name.clone()],
                    [left_ty.clone(), right_ty.clone()],
                ),
                Side::Right => (
                    [right_name.clone(), left_name.clone()],
                    [right_ty.clone(), left_ty.clone()],
                ),
            };
            soup.edges.push(Edge::Buffered {
                names,
                tys,
                queue: queue.0.clone(),
                conc: *conc,
            });
            collect(left, soup, gen);
            collect(right, soup, gen);
        }
        Process::CutBang {
            bound,
            server,
            name,
            ty,
            client,
        } => {
            soup.bangs.push(Bang {
                bound: bound.clone(),
                server: (**server).clone(),
                name: name.clone(),
                ty: ty.clone(),
            });
            collect(client, soup, gen);
        }
        other => soup.parties.push(other.clone()),
    }
}

fn enc_region(p: &Process, alloc: &mut Alloc, gen: &mut NameGen) -> String {
    let mut soup = Soup::default();
    collect(p, &mut soup, gen);

    // Order exponential bindings canonically: a server calling another
    // server is placed after it; ties break on the server encoding.
    // Duplicate bindings of alpha-equal servers (from distribution) merge.
    let mut remaining: Vec<Bang> = std::mem::take(&mut soup.bangs);
    let mut bang_prefix = String::new();
    let mut placed: Vec<(String, String)> = Vec::new(); // (encoding, token)
    let mut k = 0;
    while !remaining.is_empty() {
        let mut best: Option<(usize, String)> = None;
        for (i, b) in remaining.iter().enumerate() {
            let fns = b.server.free_names();
            let deps_ok = remaining
                .iter()
                .enumerate()
                .all(|(j, other)| j == i || !fns.contains(&other.name));
            if !deps_ok {
                continue;
            }
            let mut a2 = alloc.clone();
            let old = a2.bind(&b.bound);
            let body = enc_region(&b.server, &mut a2, gen);
            a2.unbind(&b.bound, old);
            let s = format!("{}:{}", pretty_ty(&b.ty), body);
            if best.as_ref().map(|(_, bs)| s < *bs).unwrap_or(true) {
                best = Some((i, s));
            }
        }
        let (i, s) = match best {
            Some(x) => x,
            // Cyclic server references: ill-typed; keep source order.
            None => (0, format!("cyclic{k}")),
        };
        let b = remaining.remove(i);
        if let Some((_, tok)) = placed.iter().find(|(ps, _)| *ps == s) {
            let tok = tok.clone();
            alloc.tokens.insert(b.name.clone(), tok);
        } else {
            let tok = format!("!{k}");
            bang_prefix.push_str(&format!("bang{{{tok}={s}}}"));
            alloc.tokens.insert(b.name.clone(), tok.clone());
            placed.push((s, tok));
            k += 1;
        }
    }

    // Resolve each session endpoint to its holding vertex.
    let mut holder: BTreeMap<Name, Vertex> = BTreeMap::new();
    for (i, party) in soup.parties.iter().enumerate() {
        for n in party.free_names() {
            holder.entry(n).or_insert(Vertex::Party(i));
        }
    }
    for (j, e) in soup.edges.iter().enumerate() {
        if let Edge::Buffered { queue, .. } = e {
            for v in queue {
                if let QueueValue::LinClos { bound, body } | QueueValue::ExpClos { bound, body } = v
                {
                    let mut fns = body.free_names();
                    fns.remove(bound);
                    for n in fns {
                        holder.entry(n).or_insert(Vertex::Edge(j));
                    }
                }
            }
        }
    }

    // Connected components over parties and edges.
    let np = soup.parties.len();
    let nv = np + soup.edges.len();
    let mut dsu: Vec<usize> = (0..nv).collect();
    fn find(dsu: &mut Vec<usize>, x: usize) -> usize {
        if dsu[x] != x {
            let r = find(dsu, dsu[x]);
            dsu[x] = r;
        }
        dsu[x]
    }
    for (j, e) in soup.edges.iter().enumerate() {
        for n in e.names() {
            if let Some(h) = holder.get(n) {
                let hi = match h {
                    Vertex::Party(i) => *i,
                    Vertex::Edge(j2) => np + j2,
                    Vertex::Inert => continue,
                };
                let (a, b) = (find(&mut dsu, np + j), find(&mut dsu, hi));
                dsu[a] = b;
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<Vertex>> = BTreeMap::new();
    for i in 0..np {
        comps.entry(find(&mut dsu, i)).or_default().push(Vertex::Party(i));
    }
    for j in 0..soup.edges.len() {
        comps
            .entry(find(&mut dsu, np + j))
            .or_default()
            .push(Vertex::Edge(j));
    }
    let mut pending: Vec<Vec<Vertex>> = comps.into_values().collect();

    let encoder = Encoder {
        soup: &soup,
        holder: &holder,
    };

    // Commit components smallest-first so placeholder numbering is layout
    // independent.
    let mut pieces: Vec<String> = Vec::new();
    while !pending.is_empty() {
        let mut best: Option<(usize, String, Alloc)> = None;
        for (ci, members) in pending.iter().enumerate() {
            let mut comp_best: Option<(String, Alloc)> = None;
            for &root in members {
                let mut a2 = alloc.clone();
                let mut trail = Vec::new();
                let s = encoder.vertex(root, None, &mut a2, gen, &mut trail);
                if comp_best.as_ref().map(|(bs, _)| s < *bs).unwrap_or(true) {
                    comp_best = Some((s, a2));
                }
            }
            let (s, a2) = comp_best.expect("component has members");
            if best.as_ref().map(|(_, bs, _)| s < *bs).unwrap_or(true) {
                best = Some((ci, s, a2));
            }
        }
        let (ci, s, a2) = best.expect("pending nonempty");
        pending.remove(ci);
        *alloc = a2;
        pieces.push(s);
    }

    if pieces.is_empty() {
        return format!("{bang_prefix}0");
    }
    format!("{bang_prefix}{}", pieces.join(" || "))
}

struct Encoder<'a> {
    soup: &'a Soup,
    holder: &'a BTreeMap<Name, Vertex>,
}

impl<'a> Encoder<'a> {
    fn vertex(
        &self,
        v: Vertex,
        parent: Option<Vertex>,
        alloc: &mut Alloc,
        gen: &mut NameGen,
        trail: &mut Vec<Vertex>,
    ) -> String {
        if trail.contains(&v) {
            return "cycle".to_string();
        }
        trail.push(v);
        let out = match v {
            Vertex::Inert => "0".to_string(),
            Vertex::Party(i) => {
                let party = &self.soup.parties[i];
                if let Process::Fwd(a, b) = party {
                    // Forwarder commutativity: order the two links by their
                    // encodings.
                    let mut aa = alloc.clone();
                    let mut ta = trail.clone();
                    let ea = self.link(a, v, parent, &mut aa, gen, &mut ta);
                    let mut ab = alloc.clone();
                    let mut tb = trail.clone();
                    let eb = self.link(b, v, parent, &mut ab, gen, &mut tb);
                    let (first, second) = if ea <= eb { (a, b) } else { (b, a) };
                    let e1 = self.link(first, v, parent, alloc, gen, trail);
                    let e2 = self.link(second, v, parent, alloc, gen, trail);
                    format!("fwd[{e1};{e2}]")
                } else {
                    let before = alloc.order.len();
                    let label = enc_party(party, alloc, gen);
                    let used: Vec<Name> = alloc.order[before..].to_vec();
                    let mut children = Vec::new();
                    for n in used {
                        children.push(self.link(&n, v, parent, alloc, gen, trail));
                    }
                    format!("P⟨{label}⟩[{}]", children.join(";"))
                }
            }
            Vertex::Edge(j) => {
                let e = &self.soup.edges[j];
                match e {
                    Edge::Plain { names, tys, conc } => {
                        // Cut commutativity: orient by type encoding; the two
                        // annotations are distinct duals.
                        let (first, second) = if pretty_ty(&tys[0]) <= pretty_ty(&tys[1]) {
                            (0usize, 1usize)
                        } else {
                            (1, 0)
                        };
                        let c0 = self.attach(&names[first], v, parent, alloc, gen, trail);
                        let c1 = self.attach(&names[second], v, parent, alloc, gen, trail);
                        format!(
                            "cut{}⟨{}⟩[{c0};{c1}]",
                            if *conc { "p" } else { "" },
                            pretty_ty(&tys[first])
                        )
                    }
                    Edge::Buffered {
                        names,
                        tys,
                        queue,
                        conc,
                    } => {
                        let c0 = self.attach(&names[0], v, parent, alloc, gen, trail);
                        let c1 = self.attach(&names[1], v, parent, alloc, gen, trail);
                        let mut qs = Vec::new();
                        let mut qchildren = Vec::new();
                        for qv in queue {
                            match qv {
                                QueueValue::CloseToken => qs.push("✓".to_string()),
                                QueueValue::Label(l) => qs.push(l.to_string()),
                                QueueValue::Int(n) => qs.push(n.to_string()),
                                QueueValue::LinClos { bound, body }
                                | QueueValue::ExpClos { bound, body } => {
                                    let bang = matches!(qv, QueueValue::ExpClos { .. });
                                    let old = alloc.bind(bound);
                                    let before = alloc.order.len();
                                    let s = enc_region(body, alloc, gen);
                                    alloc.unbind(bound, old);
                                    for n in alloc.order[before..].to_vec() {
                                        qchildren
                                            .push(self.link(&n, v, parent, alloc, gen, trail));
                                    }
                                    qs.push(format!(
                                        "{}clos({s})",
                                        if bang { "!" } else { "" }
                                    ));
                                }
                            }
                        }
                        format!(
                            "bcut{}⟨~{}|{}|{}⟩[{c0};{c1};{}]",
                            if *conc { "p" } else { "" },
                            pretty_ty(&tys[0]),
                            qs.join("@"),
                            pretty_ty(&tys[1]),
                            qchildren.join(";")
                        )
                    }
                }
            }
        };
        trail.pop();
        out
    }

    // Encode the vertex holding endpoint `n` of edge `at`.
    fn attach(
        &self,
        n: &Name,
        at: Vertex,
        parent: Option<Vertex>,
        alloc: &mut Alloc,
        gen: &mut NameGen,
        trail: &mut Vec<Vertex>,
    ) -> String {
        let h = self.holder.get(n).copied().unwrap_or(Vertex::Inert);
        if Some(h) == parent || h == at {
            "^".to_string()
        } else {
            self.vertex(h, Some(at), alloc, gen, trail)
        }
    }

    // Encode the edge attached at name `n`, seen from vertex `from`.
    fn link(
        &self,
        n: &Name,
        from: Vertex,
        parent: Option<Vertex>,
        alloc: &mut Alloc,
        gen: &mut NameGen,
        trail: &mut Vec<Vertex>,
    ) -> String {
        let edge = self
            .soup
            .edges
            .iter()
            .position(|e| e.names().iter().any(|m| m == n));
        match edge {
            Some(j) => {
                if parent == Some(Vertex::Edge(j)) {
                    "^".to_string()
                } else {
                    self.vertex(Vertex::Edge(j), Some(from), alloc, gen, trail)
                }
            }
            // Not a local session: a name reaching in from an enclosing
            // region; its placeholder is already allocated.
            None => "↑".to_string(),
        }
    }
}

fn pretty_ty(t: &SessionType) -> String {
    crate::frontend::pretty_type(t)
}

/// Encode an action-rooted process; continuations are nested regions that
/// share the allocator, so outer sessions keep one placeholder identity.
fn enc_party(p: &Process, alloc: &mut Alloc, gen: &mut NameGen) -> String {
    use Process::*;
    match p {
        Inact => "0".to_string(),
        Fwd(a, b) => {
            let ta = alloc.token(a);
            let tb = alloc.token(b);
            let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            format!("fwd {lo} {hi}")
        }
        Close(x) => format!("close {}", alloc.token(x)),
        Wait(x, k) => {
            format!("wait {};{}", alloc.token(x), enc_region(k, alloc, gen))
        }
        Send {
            chan,
            bound,
            payload,
            cont,
        } => {
            let c = alloc.token(chan);
            let old = alloc.bind(bound);
            let pl = enc_region(payload, alloc, gen);
            alloc.unbind(bound, old);
            let kk = enc_region(cont, alloc, gen);
            format!("send {c}({pl});{kk}")
        }
        Recv { chan, bound, cont } => {
            let c = alloc.token(chan);
            let old = alloc.bind(bound);
            let kk = enc_region(cont, alloc, gen);
            alloc.unbind(bound, old);
            format!("recv {c};{kk}")
        }
        Select { chan, label, cont } => {
            format!(
                "{label} {};{}",
                alloc.token(chan),
                enc_region(cont, alloc, gen)
            )
        }
        Case { chan, branches } => {
            let c = alloc.token(chan);
            let bs: Vec<String> = branches
                .iter()
                .map(|(l, b)| format!("{l}:{}", enc_region(b, alloc, gen)))
                .collect();
            format!("case {c}{{{}}}", bs.join("|"))
        }
        Server { chan, bound, body } => {
            let c = alloc.token(chan);
            let old = alloc.bind(bound);
            let s = enc_region(body, alloc, gen);
            alloc.unbind(bound, old);
            format!("!{c}({s})")
        }
        Quest { chan, cont } => {
            format!("?{};{}", alloc.token(chan), enc_region(cont, alloc, gen))
        }
        Call { chan, bound, cont } => {
            let c = alloc.token(chan);
            let old = alloc.bind(bound);
            let s = enc_region(cont, alloc, gen);
            alloc.unbind(bound, old);
            format!("call {c}({s})")
        }
        SendLit { chan, value, cont } => {
            let c = alloc.token(chan);
            let v = match value {
                IntExpr::Lit(n) => n.to_string(),
                IntExpr::Var(v) => alloc.token(v),
            };
            format!("send {c}<{v}>;{}", enc_region(cont, alloc, gen))
        }
        RecvLit { chan, var, cont } => {
            let c = alloc.token(chan);
            let old = alloc.bind(var);
            let s = enc_region(cont, alloc, gen);
            alloc.unbind(var, old);
            format!("recv {c}<{s}>")
        }
        // Static constructs never reach party position.
        other => crate::frontend::pretty(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_process, ParseOptions};

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
    fn mix_unit_and_commutativity() {
        assert!(congruent(&parse("close x || 0"), &parse("close x")));
        assert!(congruent(
            &parse("close x || wait y; 0"),
            &parse("(wait y; 0) || close x")
        ));
        // Right-nested vs left-nested association.
        let right = parse("close x || (wait y; 0) || close z");
        let left = parse("(close x || (wait y; 0)) || close z");
        assert!(congruent(&right, &left));
    }

    #[test]
    fn fwd_commutativity() {
        assert!(congruent(&parse("fwd x y"), &parse("fwd y x")));
    }

    #[test]
    fn distinct_actions_differ() {
        assert!(!congruent(&parse("close x"), &parse("wait x; 0")));
        assert!(!congruent(&parse("close x"), &parse("close y")));
    }

    #[test]
    fn cut_commutativity_dualizes() {
        let p = parse("cut { close x |x:1| wait x; 0 }");
        let q = parse("cut { wait x; 0 |x:bot| close x }");
        assert!(congruent(&p, &q));
    }

    #[test]
    fn cut_mix_extrusion() {
        let p = parse("cut { close x |x:1| (wait x; 0) || close y }");
        let q = parse("cut { close x |x:1| wait x; 0 } || close y");
        assert!(congruent(&p, &q));
    }

    #[test]
    fn cut_cut_reassociation() {
        let p = parse("cut { close x |x:1| cut { wait x; close y |y:1| wait y; 0 } }");
        let q = parse("cut { cut { close x |x:1| wait x; close y } |y:1| wait y; 0 }");
        assert!(congruent(&p, &q));
    }

    #[test]
    fn prefix_commutation_excluded() {
        let a = parse("wait x; wait y; 0");
        let b = parse("wait y; wait x; 0");
        assert!(!congruent(&a, &b));
    }

    #[test]
    fn buffered_comm() {
        let p = parse("cut { 0 |~x:1 [#close] y:bot| wait y; 0 }");
        let q = parse("cut { wait y; 0 |y:bot [#close] ~x:1| 0 }");
        assert!(congruent(&p, &q));
    }

    #[test]
    fn cutbang_floats_past_cut() {
        let p = parse(
            "cut { close w |w:1| cut! { y. close y |!s:1| wait w; ?s; call s(z); wait z; 0 } }",
        );
        let q = parse(
            "cut! { y. close y |!s:1| cut { close w |w:1| wait w; ?s; call s(z); wait z; 0 } }",
        );
        assert!(congruent(&p, &q));
    }

    #[test]
    fn alpha_irrelevance() {
        let p = parse("cut { close a |a:1| wait a; 0 }");
        let q = parse("cut { close b |b:1| wait b; 0 }");
        assert!(congruent(&p, &q));
    }

    #[test]
    fn wiring_matters() {
        let p = parse("cut { close a |a:1| cut { wait a; close b |b:1| wait b; 0 } }");
        let q = parse("cut { close a |a:1| cut { close b |b:1| wait b; wait a; 0 } }");
        assert!(!congruent(&p, &q));
    }
}
