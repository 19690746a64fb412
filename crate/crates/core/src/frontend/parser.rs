//! Recursive-descent parser for the `.cll` concrete syntax.

use std::collections::BTreeMap;

use super::lexer::{lex, Token, TokenKind};
use super::Diagnostic;
use crate::syntax::{IntExpr, Label, Name, Process, Queue, QueueValue, SessionType, Side};

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Accept buffered cuts (`[queue]` forms) in source text.
    pub allow_runtime_syntax: bool,
}

const KEYWORDS: &[&str] = &[
    "cut", "pcut", "close", "wait", "send", "recv", "case", "call", "fwd", "par", "bot", "int",
];

/// Parse a whole file: either a bare process or `name = proc` definitions
/// with a `main`.
pub fn parse_program(src: &str, options: ParseOptions) -> Result<Process, Vec<Diagnostic>> {
    let toks = lex(src).map_err(|d| vec![d])?;
    let mut p = Parser {
        toks,
        pos: 0,
        options,
        defs: BTreeMap::new(),
    };
    let is_defs = matches!(p.peek_kind(), TokenKind::Ident(_))
        && matches!(p.peek_kind_at(1), TokenKind::Eq);
    let result = if is_defs {
        p.parse_defs()
    } else {
        p.parse_proc().and_then(|proc| {
            p.expect_eof()?;
            Ok(proc)
        })
    };
    result.map_err(|d| vec![d])
}

/// Parse a bare process (no definitions). Convenience for tests.
pub fn parse_process(src: &str, options: ParseOptions) -> Result<Process, Vec<Diagnostic>> {
    let toks = lex(src).map_err(|d| vec![d])?;
    let mut p = Parser {
        toks,
        pos: 0,
        options,
        defs: BTreeMap::new(),
    };
    let proc = p.parse_proc().map_err(|d| vec![d])?;
    p.expect_eof().map_err(|d| vec![d])?;
    Ok(proc)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    options: ParseOptions,
    defs: BTreeMap<String, Process>,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek_kind(&self) -> &TokenKind {
        &self.peek().kind
    }

    fn peek_kind_at(&self, ahead: usize) -> &TokenKind {
        &self.toks[(self.pos + ahead).min(self.toks.len() - 1)].kind
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos.min(self.toks.len() - 1)].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, msg: impl Into<String>) -> Diagnostic {
        let t = self.peek();
        Diagnostic::error(t.start, t.end, msg)
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<Token> {
        if self.peek_kind() == &kind {
            Ok(self.bump())
        } else {
            Err(self.err_here(format!("expected {what}")))
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if matches!(self.peek_kind(), TokenKind::Eof) {
            Ok(())
        } else {
            Err(self.err_here("expected end of input"))
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek_kind() == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    fn parse_defs(&mut self) -> PResult<Process> {
        loop {
            let name_tok = self.bump();
            let def_name = match name_tok.kind {
                TokenKind::Ident(s) => s,
                _ => return Err(self.err_here("expected definition name")),
            };
            self.expect(TokenKind::Eq, "'='")?;
            let body = self.parse_proc()?;
            if self.defs.contains_key(&def_name) {
                return Err(Diagnostic::error(
                    name_tok.start,
                    name_tok.end,
                    format!("duplicate definition name '{def_name}'"),
                ));
            }
            self.defs.insert(def_name, body);
            if matches!(self.peek_kind(), TokenKind::Eof) {
                break;
            }
        }
        self.defs
            .get("main")
            .cloned()
            .ok_or_else(|| self.err_here("no 'main' definition"))
    }

    fn parse_name(&mut self) -> PResult<Name> {
        let t = self.bump();
        match t.kind {
            TokenKind::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Ok(Name::Src(s)),
            TokenKind::GenName(n) => Ok(Name::Gen(n)),
            _ => Err(Diagnostic::error(t.start, t.end, "expected a name")),
        }
    }

    fn parse_label(&mut self) -> PResult<Label> {
        let t = self.bump();
        match t.kind {
            TokenKind::Ident(s) => {
                if s == "close" {
                    Err(Diagnostic::error(t.start, t.end, "reserved label 'close'"))
                } else {
                    Ok(Label(s))
                }
            }
            _ => Err(Diagnostic::error(t.start, t.end, "expected a label")),
        }
    }

    fn parse_proc(&mut self) -> PResult<Process> {
        let head = self.parse_atom()?;
        if self.eat(&TokenKind::BarBar) {
            let rest = self.parse_proc()?;
            Ok(Process::mix(head, rest))
        } else {
            Ok(head)
        }
    }

    fn parse_atom(&mut self) -> PResult<Process> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Int(0) => {
                self.bump();
                Ok(Process::Inact)
            }
            TokenKind::LParen => {
                self.bump();
                let p = self.parse_proc()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(p)
            }
            TokenKind::Bang => {
                // !x(y); P
                self.bump();
                let chan = self.parse_name()?;
                self.expect(TokenKind::LParen, "'('")?;
                let bound = self.parse_name()?;
                self.expect(TokenKind::RParen, "')'")?;
                self.expect(TokenKind::Semi, "';'")?;
                let body = self.parse_proc()?;
                Ok(Process::Server {
                    chan,
                    bound,
                    body: Box::new(body),
                })
            }
            TokenKind::Question => {
                self.bump();
                let chan = self.parse_name()?;
                self.expect(TokenKind::Semi, "';'")?;
                let cont = self.parse_proc()?;
                Ok(Process::Quest {
                    chan,
                    cont: Box::new(cont),
                })
            }
            TokenKind::Hash => {
                self.bump();
                let label = self.parse_label()?;
                let chan = self.parse_name()?;
                self.expect(TokenKind::Semi, "';'")?;
                let cont = self.parse_proc()?;
                Ok(Process::select(chan, label, cont))
            }
            TokenKind::Ident(kw) => {
                let kw = kw.clone();
                match kw.as_str() {
                    "fwd" => {
                        self.bump();
                        let x = self.parse_name()?;
                        let y = self.parse_name()?;
                        Ok(Process::Fwd(x, y))
                    }
                    "close" => {
                        self.bump();
                        let x = self.parse_name()?;
                        Ok(Process::Close(x))
                    }
                    "wait" => {
                        self.bump();
                        let x = self.parse_name()?;
                        self.expect(TokenKind::Semi, "';'")?;
                        let p = self.parse_proc()?;
                        Ok(Process::wait(x, p))
                    }
                    "send" => {
                        self.bump();
                        let chan = self.parse_name()?;
                        self.expect(TokenKind::LParen, "'('")?;
                        let arg = self.parse_send_arg()?;
                        self.expect(TokenKind::RParen, "')'")?;
                        self.expect(TokenKind::Semi, "';'")?;
                        let cont = self.parse_proc()?;
                        Ok(match arg {
                            SendArg::Session(bound, payload) => Process::Send {
                                chan,
                                bound,
                                payload: Box::new(payload),
                                cont: Box::new(cont),
                            },
                            SendArg::IntE(e) => Process::SendLit {
                                chan,
                                value: e,
                                cont: Box::new(cont),
                            },
                        })
                    }
                    "recv" => {
                        self.bump();
                        let chan = self.parse_name()?;
                        self.expect(TokenKind::LParen, "'('")?;
                        let bound = self.parse_name()?;
                        self.expect(TokenKind::RParen, "')'")?;
                        self.expect(TokenKind::Semi, "';'")?;
                        let cont = self.parse_proc()?;
                        Ok(Process::recv(chan, bound, cont))
                    }
                    "case" => {
                        self.bump();
                        let chan = self.parse_name()?;
                        self.expect(TokenKind::LBrace, "'{'")?;
                        let mut branches = BTreeMap::new();
                        while self.eat(&TokenKind::Bar) {
                            let hash = self.expect(TokenKind::Hash, "'#'")?;
                            let label = self.parse_label()?;
                            self.expect(TokenKind::Colon, "':'")?;
                            let body = self.parse_proc()?;
                            if branches.insert(label.clone(), body).is_some() {
                                return Err(Diagnostic::error(
                                    hash.start,
                                    hash.end,
                                    format!("duplicate label {label}"),
                                ));
                            }
                        }
                        self.expect(TokenKind::RBrace, "'}'")?;
                        if branches.is_empty() {
                            return Err(Diagnostic::error(
                                t.start,
                                t.end,
                                "case needs at least one branch",
                            ));
                        }
                        Ok(Process::Case { chan, branches })
                    }
                    "call" => {
                        self.bump();
                        let chan = self.parse_name()?;
                        self.expect(TokenKind::LParen, "'('")?;
                        let bound = self.parse_name()?;
                        self.expect(TokenKind::RParen, "')'")?;
                        self.expect(TokenKind::Semi, "';'")?;
                        let cont = self.parse_proc()?;
                        Ok(Process::Call {
                            chan,
                            bound,
                            cont: Box::new(cont),
                        })
                    }
                    "cut" | "pcut" => {
                        self.bump();
                        let conc = kw == "pcut";
                        if !conc && self.eat(&TokenKind::Bang) {
                            return self.parse_cut_bang();
                        }
                        self.parse_cut(conc)
                    }
                    _ => {
                        // A definition reference.
                        self.bump();
                        self.defs.get(&kw).cloned().ok_or_else(|| {
                            Diagnostic::error(
                                t.start,
                                t.end,
                                format!("unknown definition reference '{kw}'"),
                            )
                        })
                    }
                }
            }
            _ => Err(self.err_here("expected a process")),
        }
    }

    fn parse_cut_bang(&mut self) -> PResult<Process> {
        self.expect(TokenKind::LBrace, "'{'")?;
        let bound = self.parse_name()?;
        self.expect(TokenKind::Dot, "'.'")?;
        let server = self.parse_proc()?;
        self.expect(TokenKind::Bar, "'|'")?;
        self.expect(TokenKind::Bang, "'!'")?;
        let name = self.parse_name()?;
        self.expect(TokenKind::Colon, "':'")?;
        let ty = self.parse_type()?;
        self.expect(TokenKind::Bar, "'|'")?;
        let client = self.parse_proc()?;
        self.expect(TokenKind::RBrace, "'}'")?;
        Ok(Process::CutBang {
            bound,
            server: Box::new(server),
            name,
            ty,
            client: Box::new(client),
        })
    }

    fn parse_cut(&mut self, conc: bool) -> PResult<Process> {
        let open = self.expect(TokenKind::LBrace, "'{'")?;
        let left = self.parse_proc()?;
        self.expect(TokenKind::Bar, "'|'")?;
        let left_mark = self.eat(&TokenKind::Tilde);
        let left_name = self.parse_name()?;
        self.expect(TokenKind::Colon, "':'")?;
        let left_ty = self.parse_type()?;
        if matches!(self.peek_kind(), TokenKind::LBracket) {
            if !self.options.allow_runtime_syntax {
                return Err(Diagnostic::error(
                    open.start,
                    open.end,
                    "buffered cuts are runtime syntax; pass --allow-runtime-syntax",
                ));
            }
            let queue = self.parse_queue()?;
            let right_mark = self.eat(&TokenKind::Tilde);
            let right_name = self.parse_name()?;
            self.expect(TokenKind::Colon, "':'")?;
            let right_ty = self.parse_type()?;
            self.expect(TokenKind::Bar, "'|'")?;
            let right = self.parse_proc()?;
            self.expect(TokenKind::RBrace, "'}'")?;
            let writer = match (left_mark, right_mark) {
                (true, false) => Side::Left,
                (false, true) => Side::Right,
                _ => {
                    return Err(Diagnostic::error(
                        open.start,
                        open.end,
                        "exactly one endpoint of a buffered cut carries the writer mark '~'",
                    ))
                }
            };
            Ok(Process::BufCut {
                left: Box::new(left),
                left_name,
                left_ty,
                queue,
                right_name,
                right_ty,
                right: Box::new(right),
                writer,
                conc,
            })
        } else {
            if left_mark {
                return Err(Diagnostic::error(
                    open.start,
                    open.end,
                    "writer marks only appear on buffered cuts",
                ));
            }
            self.expect(TokenKind::Bar, "'|'")?;
            let right = self.parse_proc()?;
            self.expect(TokenKind::RBrace, "'}'")?;
            Ok(Process::Cut {
                left: Box::new(left),
                name: left_name,
                ty: left_ty,
                right: Box::new(right),
                conc,
            })
        }
    }

    fn parse_queue(&mut self) -> PResult<Queue> {
        self.expect(TokenKind::LBracket, "'['")?;
        let mut q = Queue::empty();
        if self.eat(&TokenKind::RBracket) {
            return Ok(q);
        }
        loop {
            q.push_back(self.parse_qval()?);
            if self.eat(&TokenKind::At) {
                continue;
            }
            self.expect(TokenKind::RBracket, "']' or '@'")?;
            return Ok(q);
        }
    }

    fn parse_qval(&mut self) -> PResult<QueueValue> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Hash => {
                self.bump();
                let lt = self.bump();
                match lt.kind {
                    TokenKind::Ident(s) if s == "close" => Ok(QueueValue::CloseToken),
                    TokenKind::Ident(s) => Ok(QueueValue::Label(Label(s))),
                    _ => Err(Diagnostic::error(lt.start, lt.end, "expected a label")),
                }
            }
            TokenKind::Int(n) => {
                let n = *n;
                self.bump();
                Ok(QueueValue::Int(n))
            }
            TokenKind::LParen => {
                self.bump();
                let bound = self.parse_name()?;
                self.expect(TokenKind::Dot, "'.'")?;
                let body = self.parse_proc()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(QueueValue::LinClos { bound, body })
            }
            TokenKind::Bang => {
                self.bump();
                self.expect(TokenKind::LParen, "'('")?;
                let bound = self.parse_name()?;
                self.expect(TokenKind::Dot, "'.'")?;
                let body = self.parse_proc()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(QueueValue::ExpClos { bound, body })
            }
            _ => Err(self.err_here("expected a queue value")),
        }
    }

    fn parse_send_arg(&mut self) -> PResult<SendArg> {
        match self.peek_kind().clone() {
            TokenKind::Int(n) => {
                self.bump();
                Ok(SendArg::IntE(IntExpr::Lit(n)))
            }
            _ => {
                let name = self.parse_name()?;
                if self.eat(&TokenKind::Dot) {
                    let payload = self.parse_proc()?;
                    Ok(SendArg::Session(name, payload))
                } else {
                    Ok(SendArg::IntE(IntExpr::Var(name)))
                }
            }
        }
    }

    fn parse_type(&mut self) -> PResult<SessionType> {
        let head = self.parse_type_prefix()?;
        match self.peek_kind() {
            TokenKind::Star => {
                self.bump();
                let rest = self.parse_type()?;
                Ok(SessionType::tensor(head, rest))
            }
            TokenKind::Ident(s) if s == "par" => {
                self.bump();
                let rest = self.parse_type()?;
                Ok(SessionType::par(head, rest))
            }
            _ => Ok(head),
        }
    }

    fn parse_type_prefix(&mut self) -> PResult<SessionType> {
        let t = self.bump();
        match &t.kind {
            TokenKind::Int(1) => Ok(SessionType::One),
            TokenKind::Ident(s) if s == "bot" => Ok(SessionType::Bot),
            TokenKind::Ident(s) if s == "int" => Ok(SessionType::LitInt),
            TokenKind::Tilde => {
                let n = self.bump();
                match n.kind {
                    TokenKind::Ident(s) if s == "int" => Ok(SessionType::DualLitInt),
                    _ => Err(Diagnostic::error(n.start, n.end, "expected 'int' after '~'")),
                }
            }
            TokenKind::Bang => Ok(SessionType::bang(self.parse_type_prefix()?)),
            TokenKind::Question => Ok(SessionType::quest(self.parse_type_prefix()?)),
            TokenKind::Plus => {
                let branches = self.parse_type_branches()?;
                Ok(SessionType::Plus(branches))
            }
            TokenKind::Amp => {
                let branches = self.parse_type_branches()?;
                Ok(SessionType::With(branches))
            }
            TokenKind::LParen => {
                let ty = self.parse_type()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(ty)
            }
            _ => Err(Diagnostic::error(t.start, t.end, "expected a type")),
        }
    }

    fn parse_type_branches(&mut self) -> PResult<BTreeMap<Label, SessionType>> {
        self.expect(TokenKind::LBrace, "'{'")?;
        let mut branches = BTreeMap::new();
        self.eat(&TokenKind::Bar);
        loop {
            let hash = self.expect(TokenKind::Hash, "'#'")?;
            let label = self.parse_label()?;
            self.expect(TokenKind::Colon, "':'")?;
            let ty = self.parse_type()?;
            if branches.insert(label.clone(), ty).is_some() {
                return Err(Diagnostic::error(
                    hash.start,
                    hash.end,
                    format!("duplicate label {label}"),
                ));
            }
            if self.eat(&TokenKind::Bar) {
                continue;
            }
            self.expect(TokenKind::RBrace, "'}'")?;
            if branches.is_empty() {
                return Err(Diagnostic::error(hash.start, hash.end, "empty label map"));
            }
            return Ok(branches);
        }
    }
}

enum SendArg {
    Session(Name, Process),
    IntE(IntExpr),
}
