use super::lexer::{tokenize, Tok, Token};
use crate::automata::{Alphabet, Automaton, Edge, Kind, Letter, PromiseLayout, PromiseMode, DEFAULT_LETTER_CAP};
use crate::error::{Error, Result};

/// Boolean label expression over AP indices.
#[derive(Clone, Debug)]
enum Label {
    True,
    False,
    Ap(usize),
    Not(Box<Label>),
    And(Box<Label>, Box<Label>),
    Or(Box<Label>, Box<Label>),
}

impl Label {
    fn eval(&self, letter: Letter) -> bool {
        match self {
            Label::True => true,
            Label::False => false,
            Label::Ap(i) => letter >> i & 1 == 1,
            Label::Not(a) => !a.eval(letter),
            Label::And(a, b) => a.eval(letter) && b.eval(letter),
            Label::Or(a, b) => a.eval(letter) || b.eval(letter),
        }
    }

    fn max_ap(&self) -> Option<usize> {
        match self {
            Label::True | Label::False => None,
            Label::Ap(i) => Some(*i),
            Label::Not(a) => a.max_ap(),
            Label::And(a, b) | Label::Or(a, b) => a.max_ap().max(b.max_ap()),
        }
    }
}

/// Acceptance condition shapes the parser understands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Acc {
    Inf,
    Fin,
    All,
    None,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|t| (t.line, t.col)).unwrap_or(self.eof)
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (line, col) = self.here();
        Err(Error::Syntax { line, col, msg: msg.into() })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn int(&mut self) -> Result<u64> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => self.error("expected integer"),
        }
    }

    fn string(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.error("expected string"),
        }
    }

    fn punct(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected '{c}'"))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Skips the values of an ignored header item.
    fn skip_values(&mut self) {
        while let Some(t) = self.peek() {
            if matches!(t, Tok::Header(_) | Tok::Body) {
                break;
            }
            self.pos += 1;
        }
    }

    fn label_or(&mut self) -> Result<Label> {
        let mut left = self.label_and()?;
        while self.eat('|') {
            let right = self.label_and()?;
            left = Label::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn label_and(&mut self) -> Result<Label> {
        let mut left = self.label_not()?;
        while self.eat('&') {
            let right = self.label_not()?;
            left = Label::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn label_not(&mut self) -> Result<Label> {
        if self.eat('!') {
            return Ok(Label::Not(Box::new(self.label_not()?)));
        }
        if self.eat('(') {
            let inner = self.label_or()?;
            self.punct(')')?;
            return Ok(inner);
        }
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(Label::Ap(v as usize))
            }
            Some(Tok::Ident(s)) if s == "t" => {
                self.pos += 1;
                Ok(Label::True)
            }
            Some(Tok::Ident(s)) if s == "f" => {
                self.pos += 1;
                Ok(Label::False)
            }
            Some(Tok::Ident(s)) if s.starts_with('@') => self.error("aliases are not supported"),
            _ => self.error("expected label expression"),
        }
    }

    fn acc_sets(&mut self) -> Result<Vec<u64>> {
        let mut sets = Vec::new();
        if self.eat('{') {
            while !self.eat('}') {
                sets.push(self.int()?);
            }
        }
        Ok(sets)
    }

    /// `Acceptance:` value: only the four shapes in [`Acc`].
    fn acceptance(&mut self) -> Result<Acc> {
        let count = self.int()?;
        let acc = match (count, self.next()) {
            (0, Some(Tok::Ident(s))) if s == "t" => Acc::All,
            (0, Some(Tok::Ident(s))) if s == "f" => Acc::None,
            (1, Some(Tok::Ident(s))) if s == "Inf" || s == "Fin" => {
                self.punct('(')?;
                if self.int()? != 0 {
                    return self.error("acceptance set must be 0");
                }
                self.punct(')')?;
                if s == "Inf" {
                    Acc::Inf
                } else {
                    Acc::Fin
                }
            }
            _ => {
                self.pos -= 1;
                return Err(Error::Unsupported(format!(
                    "acceptance condition at line {} (only Inf(0), Fin(0), t, f)",
                    self.here().0
                )));
            }
        };
        if !matches!(self.peek(), Some(Tok::Header(_)) | Some(Tok::Body) | None) {
            return Err(Error::Unsupported(format!("generalized acceptance at line {}", self.here().0)));
        }
        Ok(acc)
    }
}

/// Parses HOA text with the default letter cap.
pub fn parse_hoa(text: &str) -> Result<Automaton> {
    parse_hoa_with_cap(text, DEFAULT_LETTER_CAP)
}

/// Parses HOA text, refusing alphabets with more than `cap` letters.
pub fn parse_hoa_with_cap(text: &str, cap: u64) -> Result<Automaton> {
    let toks = tokenize(text)?;
    let eof = (text.lines().count().max(1), 1);
    let mut p = Parser { toks, pos: 0, eof };

    match p.next() {
        Some(Tok::Header(h)) if h == "HOA" => {}
        _ => {
            p.pos = 0;
            return p.error("expected 'HOA:'");
        }
    }
    match p.next() {
        Some(Tok::Ident(v)) if v == "v1" => {}
        _ => {
            p.pos -= 1;
            return p.error("expected version v1");
        }
    }

    let mut states: Option<usize> = None;
    let mut starts: Vec<u32> = Vec::new();
    let mut aps: Option<Vec<String>> = None;
    let mut acc: Option<Acc> = None;
    let mut promises: Option<(usize, PromiseMode, usize)> = None;
    let mut designated: Option<u32> = None;

    loop {
        match p.next() {
            Some(Tok::Body) => break,
            Some(Tok::Header(h)) => match h.as_str() {
                "States" => states = Some(p.int()? as usize),
                "Start" => {
                    starts.push(p.int()? as u32);
                    if p.peek() == Some(&Tok::Punct('&')) {
                        return Err(Error::Unsupported("conjunctive initial states".into()));
                    }
                }
                "AP" => {
                    let n = p.int()? as usize;
                    if n >= 63 || (1u64 << n) > cap {
                        return Err(Error::AlphabetTooLarge { letters: 1u64 << n.min(63), cap });
                    }
                    let mut names = Vec::with_capacity(n);
                    for _ in 0..n {
                        names.push(p.string()?);
                    }
                    aps = Some(names);
                }
                "Acceptance" => acc = Some(p.acceptance()?),
                "odp-promises" => {
                    let base = p.int()? as usize;
                    let mode_name = p.string()?;
                    let Some(mode) = PromiseMode::parse(&mode_name) else {
                        return p.error(format!("unknown promise mode {mode_name:?}"));
                    };
                    let count = p.int()? as usize;
                    promises = Some((base, mode, count));
                }
                "odp-designated" => designated = Some(p.int()? as u32),
                "Alias" => return Err(Error::Unsupported("aliases".into())),
                _ => p.skip_values(),
            },
            _ => {
                p.pos -= 1;
                return p.error("expected header item or --BODY--");
            }
        }
    }

    let aps = aps.unwrap_or_default();
    let alphabet = match promises {
        None => Alphabet::from_parts(aps.clone(), aps.len(), None)?,
        Some((base, mode, count)) => Alphabet::from_parts(aps.clone(), base, Some(PromiseLayout { mode, count }))?,
    };
    let acc = acc.ok_or_else(|| Error::Syntax { line: 1, col: 1, msg: "missing Acceptance header".into() })?;
    let kind = if acc == Acc::Fin { Kind::Uca } else { Kind::Nba };
    let raw = alphabet.raw_size() as Letter;
    let letters_of = |label: &Label| -> Vec<Letter> { (0..raw).filter(|&l| alphabet.is_valid(l) && label.eval(l)).collect() };

    let declared = states;
    let mut edges: Vec<Vec<Edge>> = vec![Vec::new(); declared.unwrap_or(0)];
    let mut seen_state = vec![false; declared.unwrap_or(0)];

    let ensure = |edges: &mut Vec<Vec<Edge>>, seen: &mut Vec<bool>, q: usize, p: &Parser| -> Result<()> {
        if q >= edges.len() {
            if declared.is_some() {
                return p.error(format!("state {q} exceeds declared state count"));
            }
            edges.resize(q + 1, Vec::new());
            seen.resize(q + 1, false);
        }
        Ok(())
    };

    loop {
        match p.next() {
            Some(Tok::End) => break,
            Some(Tok::Abort) => return p.error("automaton aborted"),
            Some(Tok::Header(h)) if h == "State" => {
                let state_label = if p.eat('[') {
                    let l = p.label_or()?;
                    p.punct(']')?;
                    check_aps(&p, &l, alphabet.num_aps())?;
                    Some(l)
                } else {
                    None
                };
                let q = p.int()? as usize;
                ensure(&mut edges, &mut seen_state, q, &p)?;
                if seen_state[q] {
                    return p.error(format!("state {q} declared twice"));
                }
                seen_state[q] = true;
                if let Some(Tok::Str(_)) = p.peek() {
                    p.pos += 1;
                }
                let state_sets = p.acc_sets()?;
                let state_marked = check_sets(&p, &state_sets)?;
                let mut implicit = 0 as Letter;
                loop {
                    match p.peek() {
                        Some(Tok::Header(_)) | Some(Tok::End) | Some(Tok::Abort) | None => break,
                        _ => {}
                    }
                    let edge_label = if p.eat('[') {
                        if state_label.is_some() {
                            return p.error("edge label on a labelled state");
                        }
                        let l = p.label_or()?;
                        p.punct(']')?;
                        check_aps(&p, &l, alphabet.num_aps())?;
                        Some(l)
                    } else {
                        None
                    };
                    let target = p.int()? as usize;
                    if p.peek() == Some(&Tok::Punct('&')) {
                        return Err(Error::Unsupported("universal branching".into()));
                    }
                    ensure(&mut edges, &mut seen_state, target, &p)?;
                    let sets = p.acc_sets()?;
                    let marked = mark_of(acc, state_marked || check_sets(&p, &sets)?);
                    let letters = match (&state_label, &edge_label) {
                        (Some(l), _) | (None, Some(l)) => letters_of(l),
                        (None, None) => {
                            let l = implicit;
                            implicit += 1;
                            if l >= raw {
                                return p.error("too many implicitly labelled edges");
                            }
                            if alphabet.is_valid(l) {
                                vec![l]
                            } else {
                                vec![]
                            }
                        }
                    };
                    for l in letters {
                        edges[q].push(Edge { letter: l, target: target as u32, marked });
                    }
                }
            }
            Some(_) => {
                p.pos -= 1;
                return p.error("expected 'State:' or --END--");
            }
            None => return p.error("missing --END--"),
        }
    }

    let n = declared.unwrap_or(edges.len());
    let mut a = Automaton::new(kind, alphabet, n);
    for (q, list) in edges.into_iter().enumerate() {
        a.set_edges(q as u32, list);
    }
    for &s in &starts {
        if s as usize >= n {
            return Err(Error::Syntax { line: 1, col: 1, msg: format!("start state {s} out of range") });
        }
    }
    a.initial = starts;
    if let Some(d) = designated {
        a.check_state(d)?;
        a.designated = Some(d);
    }
    Ok(a)
}

fn mark_of(acc: Acc, in_set: bool) -> bool {
    match acc {
        Acc::Inf | Acc::Fin => in_set,
        Acc::All => true,
        Acc::None => false,
    }
}

fn check_sets(p: &Parser, sets: &[u64]) -> Result<bool> {
    if sets.iter().any(|&s| s != 0) {
        return p.error("undeclared acceptance set");
    }
    Ok(!sets.is_empty())
}

fn check_aps(p: &Parser, l: &Label, n: usize) -> Result<()> {
    match l.max_ap() {
        Some(i) if i >= n => p.error(format!("label mentions undeclared AP {i}")),
        _ => Ok(()),
    }
}
