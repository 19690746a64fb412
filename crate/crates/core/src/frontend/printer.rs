//! Pretty-printer. `parse(pretty(p))` returns a term alpha-equivalent to `p`.

use crate::syntax::{IntExpr, Process, Queue, QueueValue, SessionType, Side};

pub fn pretty(p: &Process) -> String {
    let mut s = String::new();
    write_proc(&mut s, p);
    s
}

fn write_proc(out: &mut String, p: &Process) {
    use Process::*;
    match p {
        Inact => out.push('0'),
        Mix(a, b) => {
            write_mix_operand(out, a);
            out.push_str(" || ");
            write_proc(out, b);
        }
        Fwd(x, y) => {
            out.push_str(&format!("fwd {x} {y}"));
        }
        Cut {
            left,
            name,
            ty,
            right,
            conc,
        } => {
            out.push_str(if *conc { "pcut { " } else { "cut { " });
            write_proc(out, left);
            out.push_str(&format!(" |{name}:{}| ", pretty_type(ty)));
            write_proc(out, right);
            out.push_str(" }");
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
            out.push_str(if *conc { "pcut { " } else { "cut { " });
            write_proc(out, left);
            let lm = if *writer == Side::Left { "~" } else { "" };
            let rm = if *writer == Side::Right { "~" } else { "" };
            out.push_str(&format!(
                " |{lm}{left_name}:{} {} {rm}{right_name}:{}| ",
                pretty_type(left_ty),
                pretty_queue(queue),
                pretty_type(right_ty)
            ));
            write_proc(out, right);
            out.push_str(" }");
        }
        CutBang {
            bound,
            server,
            name,
            ty,
            client,
        } => {
            out.push_str("cut! { ");
            out.push_str(&format!("{bound}. "));
            write_proc(out, server);
            out.push_str(&format!(" |!{name}:{}| ", pretty_type(ty)));
            write_proc(out, client);
            out.push_str(" }");
        }
        Close(x) => out.push_str(&format!("close {x}")),
        Wait(x, p) => {
            out.push_str(&format!("wait {x}; "));
            write_proc(out, p);
        }
        Send {
            chan,
            bound,
            payload,
            cont,
        } => {
            out.push_str(&format!("send {chan}({bound}. "));
            write_proc(out, payload);
            out.push_str("); ");
            write_proc(out, cont);
        }
        Recv { chan, bound, cont } => {
            out.push_str(&format!("recv {chan}({bound}); "));
            write_proc(out, cont);
        }
        Select { chan, label, cont } => {
            out.push_str(&format!("{label} {chan}; "));
            write_proc(out, cont);
        }
        Case { chan, branches } => {
            out.push_str(&format!("case {chan} {{ "));
            for (l, b) in branches {
                out.push_str(&format!("|{l}: "));
                write_proc(out, b);
                out.push(' ');
            }
            out.push('}');
        }
        Server { chan, bound, body } => {
            out.push_str(&format!("!{chan}({bound}); "));
            write_proc(out, body);
        }
        Quest { chan, cont } => {
            out.push_str(&format!("?{chan}; "));
            write_proc(out, cont);
        }
        Call { chan, bound, cont } => {
            out.push_str(&format!("call {chan}({bound}); "));
            write_proc(out, cont);
        }
        SendLit { chan, value, cont } => {
            match value {
                IntExpr::Lit(n) => out.push_str(&format!("send {chan}({n}); ")),
                IntExpr::Var(v) => out.push_str(&format!("send {chan}({v}); ")),
            }
            write_proc(out, cont);
        }
        RecvLit { chan, var, cont } => {
            out.push_str(&format!("recv {chan}({var}); "));
            write_proc(out, cont);
        }
    }
}

// Prefix continuations extend to the end of the input, so every mix operand
// except the last needs parentheses unless it is a closed form.
fn write_mix_operand(out: &mut String, p: &Process) {
    let closed = matches!(
        p,
        Process::Inact
            | Process::Fwd(..)
            | Process::Close(..)
            | Process::Cut { .. }
            | Process::BufCut { .. }
            | Process::CutBang { .. }
            | Process::Case { .. }
    );
    if closed {
        write_proc(out, p);
    } else {
        out.push('(');
        write_proc(out, p);
        out.push(')');
    }
}

fn pretty_queue(q: &Queue) -> String {
    let vals: Vec<String> = q.0.iter().map(pretty_qval).collect();
    format!("[{}]", vals.join("@"))
}

fn pretty_qval(v: &QueueValue) -> String {
    match v {
        QueueValue::CloseToken => "#close".to_string(),
        QueueValue::Label(l) => l.to_string(),
        QueueValue::Int(n) => n.to_string(),
        QueueValue::LinClos { bound, body } => format!("({bound}. {})", pretty(body)),
        QueueValue::ExpClos { bound, body } => format!("!({bound}. {})", pretty(body)),
    }
}

pub fn pretty_type(t: &SessionType) -> String {
    use SessionType::*;
    match t {
        One => "1".to_string(),
        Bot => "bot".to_string(),
        LitInt => "int".to_string(),
        DualLitInt => "~int".to_string(),
        Void => "void".to_string(),
        Tensor(a, b) => format!("{} * {}", paren_left(a), pretty_type(b)),
        Par(a, b) => format!("{} par {}", paren_left(a), pretty_type(b)),
        Plus(bs) => format!("+{}", pretty_branches(bs)),
        With(bs) => format!("&{}", pretty_branches(bs)),
        Bang(a) => format!("!{}", paren_prefix(a)),
        Quest(a) => format!("?{}", paren_prefix(a)),
    }
}

fn paren_left(t: &SessionType) -> String {
    match t {
        SessionType::Tensor(..) | SessionType::Par(..) => format!("({})", pretty_type(t)),
        _ => pretty_type(t),
    }
}

fn paren_prefix(t: &SessionType) -> String {
    match t {
        SessionType::Tensor(..) | SessionType::Par(..) => format!("({})", pretty_type(t)),
        _ => pretty_type(t),
    }
}

fn pretty_branches(bs: &std::collections::BTreeMap<crate::syntax::Label, SessionType>) -> String {
    let items: Vec<String> = bs
        .iter()
        .map(|(l, t)| format!("{l}: {}", pretty_type(t)))
        .collect();
    format!("{{{}}}", items.join("|"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_process, ParseOptions};
    use crate::syntax::{Label, Name, Process, Queue, QueueValue, SessionType, Side};

    fn n(s: &str) -> Name {
        Name::src(s)
    }

    fn roundtrip(p: &Process) {
        let text = pretty(p);
        let opts = ParseOptions {
            allow_runtime_syntax: true,
        };
        let q = parse_process(&text, opts).unwrap_or_else(|e| panic!("reparse {text:?}: {e:?}"));
        assert!(p.alpha_eq(&q), "round trip broke:\n  {text}\n  {q:?}");
    }

    #[test]
    fn parses_basic_cut() {
        let p = parse_process("cut { close x |x:1| wait x; 0 }", ParseOptions::default()).unwrap();
        assert_eq!(
            p,
            Process::cut(
                Process::Close(n("x")),
                n("x"),
                SessionType::One,
                Process::wait(n("x"), Process::Inact),
            )
        );
    }

    #[test]
    fn parses_fwd() {
        let p = parse_process("fwd x y", ParseOptions::default()).unwrap();
        assert_eq!(p, Process::Fwd(n("x"), n("y")));
    }

    #[test]
    fn rejects_duplicate_case_label() {
        let e = parse_process(
            "case x { |#inl: 0 |#inl: 0 }",
            ParseOptions::default(),
        )
        .unwrap_err();
        assert!(e[0].message.contains("duplicate label"));
    }

    #[test]
    fn prints_select_and_inact() {
        assert_eq!(pretty(&Process::Inact), "0");
        assert_eq!(
            pretty(&Process::select(n("x"), Label::new("l"), Process::Inact)),
            "#l x; 0"
        );
    }

    #[test]
    fn prints_buffered_cut_exactly() {
        let p = Process::BufCut {
            left: Box::new(Process::Close(n("x"))),
            left_name: n("x"),
            left_ty: SessionType::One,
            queue: Queue(vec![QueueValue::CloseToken]),
            right_name: n("y"),
            right_ty: SessionType::Bot,
            right: Box::new(Process::wait(n("y"), Process::Inact)),
            writer: Side::Left,
            conc: false,
        };
        assert_eq!(
            pretty(&p),
            "cut { close x |~x:1 [#close] y:bot| wait y; 0 }"
        );
        roundtrip(&p);
    }

    #[test]
    fn buffered_cut_needs_flag() {
        let e = parse_process(
            "cut { close x |~x:1 [#close] y:bot| wait y; 0 }",
            ParseOptions::default(),
        )
        .unwrap_err();
        assert!(e[0].message.contains("runtime syntax"));
    }

    #[test]
    fn type_right_associativity() {
        let p = parse_process(
            "cut { 0 |x:int * ~int par 1| 0 }",
            ParseOptions::default(),
        )
        .unwrap();
        match p {
            Process::Cut { ty, .. } => assert_eq!(
                ty,
                SessionType::tensor(
                    SessionType::LitInt,
                    SessionType::par(SessionType::DualLitInt, SessionType::One)
                )
            ),
            _ => panic!("not a cut"),
        }
    }

    #[test]
    fn definitions_expand() {
        let src = "helper = close x\nmain = cut { helper |x:1| wait x; 0 }";
        let p = crate::frontend::parse_program(src, ParseOptions::default()).unwrap();
        assert_eq!(
            p,
            Process::cut(
                Process::Close(n("x")),
                n("x"),
                SessionType::One,
                Process::wait(n("x"), Process::Inact),
            )
        );
    }

    #[test]
    fn unknown_definition_reference() {
        let e = crate::frontend::parse_program("main = nosuch", ParseOptions::default())
            .unwrap_err();
        assert!(e[0].message.contains("unknown definition"));
    }

    #[test]
    fn roundtrip_misc_terms() {
        for (src, _) in [
            ("0", ()),
            ("fwd x y", ()),
            ("close x || wait y; 0", ()),
            ("cut { send x(y. close y); close x |x:1 * 1| recv x(z); wait z; wait x; 0 }", ()),
            ("case x { |#inl: close y |#inr: fwd y x }", ()),
            ("cut! { y. close y |!x:1| call x(z); wait z; 0 }", ()),
            ("?x; call x(z); wait z; 0", ()),
            ("!x(y); close y", ()),
            ("send x(3); recv x(v); send y(v); 0", ()),
            ("#go x; case y { |#a: 0 }", ()),
            ("pcut { close x |x:1| wait x; 0 }", ()),
        ] {
            let p = parse_process(src, ParseOptions::default())
                .unwrap_or_else(|e| panic!("{src}: {e:?}"));
            roundtrip(&p);
        }
    }
}
