//! Tokenizer and triple-statement parser shared by the ontology and rule
//! formats.

use crate::error::{ParseError, ParseErrorKind};
use crate::graph::Triple;
use crate::term::{vocab, PrefixMap, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    IriRef(String),
    PName(String, String),
    Var(String),
    Blank(String),
    Str(String),
    Integer(String),
    Word(String),
    LangOrDirective(String),
    LBrace,
    RBrace,
    Dot,
    Semi,
    Comma,
    Carets,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::IriRef(s) => format!("<{s}>"),
            Tok::PName(p, l) => format!("{p}:{l}"),
            Tok::Var(v) => format!("?{v}"),
            Tok::Blank(b) => format!("_:{b}"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Integer(s) | Tok::Word(s) => s.clone(),
            Tok::LangOrDirective(s) => format!("@{s}"),
            Tok::LBrace => "{".into(),
            Tok::RBrace => "}".into(),
            Tok::Dot => ".".into(),
            Tok::Semi => ";".into(),
            Tok::Comma => ",".into(),
            Tok::Carets => "^^".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub column: usize,
}

fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::new(pos.line, pos.column, ParseErrorKind::Syntax(msg.into()))
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':')
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        match c {
            '{' => {
                out.push((Tok::LBrace, pos));
                bump!();
            }
            '}' => {
                out.push((Tok::RBrace, pos));
                bump!();
            }
            ';' => {
                out.push((Tok::Semi, pos));
                bump!();
            }
            ',' => {
                out.push((Tok::Comma, pos));
                bump!();
            }
            '.' => {
                out.push((Tok::Dot, pos));
                bump!();
            }
            '^' => {
                if chars.get(i + 1) != Some(&'^') {
                    return Err(syntax(pos, "expected `^^`"));
                }
                bump!();
                bump!();
                out.push((Tok::Carets, pos));
            }
            '<' => {
                bump!();
                let mut iri = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return Err(syntax(pos, "unterminated IRI")),
                        Some('>') => {
                            bump!();
                            break;
                        }
                        Some(&ch) if ch.is_whitespace() || ch == '<' || ch == '"' => {
                            return Err(syntax(pos, "invalid character in IRI"))
                        }
                        Some(&ch) => {
                            iri.push(ch);
                            bump!();
                        }
                    }
                }
                out.push((Tok::IriRef(iri), pos));
            }
            '"' => {
                bump!();
                let mut lex = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return Err(syntax(pos, "unterminated string")),
                        Some('"') => {
                            bump!();
                            break;
                        }
                        Some('\\') => {
                            bump!();
                            let esc = match chars.get(i) {
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some('r') => '\r',
                                Some('"') => '"',
                                Some('\\') => '\\',
                                _ => return Err(syntax(pos, "invalid escape in string")),
                            };
                            lex.push(esc);
                            bump!();
                        }
                        Some(&ch) => {
                            lex.push(ch);
                            bump!();
                        }
                    }
                }
                out.push((Tok::Str(lex), pos));
            }
            '?' | '$' => {
                bump!();
                let mut name = String::new();
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    name.push(chars[i]);
                    bump!();
                }
                if name.is_empty() {
                    return Err(syntax(pos, "empty variable name"));
                }
                out.push((Tok::Var(name), pos));
            }
            '@' => {
                bump!();
                let mut word = String::new();
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '-') {
                    word.push(chars[i]);
                    bump!();
                }
                out.push((Tok::LangOrDirective(word), pos));
            }
            '_' if chars.get(i + 1) == Some(&':') => {
                bump!();
                bump!();
                let mut label = String::new();
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '-'))
                {
                    label.push(chars[i]);
                    bump!();
                }
                if label.is_empty() {
                    return Err(syntax(pos, "empty blank-node label"));
                }
                out.push((Tok::Blank(label), pos));
            }
            c if c.is_ascii_digit()
                || ((c == '-' || c == '+')
                    && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) =>
            {
                let mut num = String::new();
                num.push(c);
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    num.push(chars[i]);
                    bump!();
                }
                out.push((Tok::Integer(num), pos));
            }
            c if c.is_alphabetic() || c == '_' || c == ':' => {
                let mut word = String::new();
                while i < chars.len() && is_name_char(chars[i]) {
                    word.push(chars[i]);
                    bump!();
                }
                // A trailing dot terminates the statement, it is not part of the name.
                let mut trailing = 0;
                while word.ends_with('.') {
                    word.pop();
                    trailing += 1;
                }
                match word.split_once(':') {
                    Some((prefix, local)) => {
                        out.push((Tok::PName(prefix.into(), local.into()), pos))
                    }
                    None => out.push((Tok::Word(word.clone()), pos)),
                }
                for k in 0..trailing {
                    let column = pos.column + word.chars().count() + k;
                    out.push((
                        Tok::Dot,
                        Pos {
                            line: pos.line,
                            column,
                        },
                    ));
                }
            }
            other => return Err(syntax(pos, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

/// What a statement block may contain.
#[derive(Clone, Copy, Debug)]
pub(crate) struct TermPolicy {
    pub variables: bool,
    pub placeholders: bool,
}

pub(crate) struct Cursor {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
}

impl Cursor {
    pub fn new(text: &str) -> Result<Self, ParseError> {
        let toks = tokenize(text)?;
        let lines = text.lines().count().max(1);
        let last_len = text.lines().last().map_or(0, |l| l.chars().count());
        Ok(Self {
            toks,
            at: 0,
            end: Pos {
                line: lines,
                column: last_len + 1,
            },
        })
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    pub fn pos(&self) -> Pos {
        self.toks.get(self.at).map_or(self.end, |(_, p)| *p)
    }

    pub fn next(&mut self) -> Option<(Tok, Pos)> {
        let item = self.toks.get(self.at).cloned();
        if item.is_some() {
            self.at += 1;
        }
        item
    }

    pub fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        syntax(self.pos(), msg)
    }

    pub fn expect(&mut self, want: &Tok) -> Result<Pos, ParseError> {
        match self.next() {
            Some((t, p)) if &t == want => Ok(p),
            Some((t, p)) => Err(syntax(
                p,
                format!("expected `{}`, found `{}`", want.describe(), t.describe()),
            )),
            None => Err(syntax(
                self.end,
                format!("expected `{}`, found end of input", want.describe()),
            )),
        }
    }

    pub fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    pub fn peek_word(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w == word)
    }

    pub fn expect_word(&mut self, word: &str) -> Result<(), ParseError> {
        match self.next() {
            Some((Tok::Word(w), _)) if w == word => Ok(()),
            Some((t, p)) => Err(syntax(
                p,
                format!("expected `{word}`, found `{}`", t.describe()),
            )),
            None => Err(syntax(
                self.end,
                format!("expected `{word}`, found end of input"),
            )),
        }
    }

    pub fn iri(&mut self, prefixes: &PrefixMap) -> Result<Term, ParseError> {
        match self.next() {
            Some((Tok::IriRef(iri), _)) => Ok(Term::iri(iri)),
            Some((Tok::PName(p, l), pos)) => Ok(Term::iri(resolve_pname(prefixes, &p, &l, pos)?)),
            Some((t, p)) => Err(syntax(
                p,
                format!("expected an IRI, found `{}`", t.describe()),
            )),
            None => Err(syntax(self.end, "expected an IRI, found end of input")),
        }
    }

    pub fn name(&mut self) -> Result<(String, Pos), ParseError> {
        match self.next() {
            Some((Tok::Word(w), p)) => Ok((w, p)),
            Some((t, p)) => Err(syntax(
                p,
                format!("expected a name, found `{}`", t.describe()),
            )),
            None => Err(syntax(self.end, "expected a name, found end of input")),
        }
    }

    /// `@prefix p: <ns> .`; the leading `@prefix` has already been consumed.
    pub fn prefix_directive(&mut self, prefixes: &mut PrefixMap) -> Result<(), ParseError> {
        let prefix = match self.next() {
            Some((Tok::PName(p, l), _)) if l.is_empty() => p,
            Some((t, p)) => {
                return Err(syntax(
                    p,
                    format!("expected prefix name, found `{}`", t.describe()),
                ))
            }
            None => return Err(syntax(self.end, "expected prefix name")),
        };
        let ns = match self.next() {
            Some((Tok::IriRef(iri), _)) => iri,
            Some((t, p)) => {
                return Err(syntax(
                    p,
                    format!("expected namespace IRI, found `{}`", t.describe()),
                ))
            }
            None => return Err(syntax(self.end, "expected namespace IRI")),
        };
        prefixes.insert(&prefix, &ns);
        self.expect(&Tok::Dot)?;
        Ok(())
    }

    fn term(
        &mut self,
        prefixes: &PrefixMap,
        policy: TermPolicy,
        predicate: bool,
    ) -> Result<(Term, Pos), ParseError> {
        let (tok, pos) = self
            .next()
            .ok_or_else(|| syntax(self.end, "expected a term, found end of input"))?;
        let term = match tok {
            Tok::IriRef(iri) => Term::iri(iri),
            Tok::PName(prefix, local) => Term::iri(resolve_pname(prefixes, &prefix, &local, pos)?),
            Tok::Word(w) if w == "a" && predicate => Term::iri(vocab::RDF_TYPE),
            Tok::Var(v) if policy.variables => Term::var(v),
            Tok::Var(v) => return Err(syntax(pos, format!("variable ?{v} not allowed here"))),
            Tok::Blank(b) if policy.placeholders => Term::placeholder(b),
            Tok::Blank(b) => return Err(syntax(pos, format!("blank node _:{b} not allowed here"))),
            Tok::Integer(n) => Term::literal(n, Some(vocab::XSD_INTEGER)),
            Tok::Str(lex) => {
                if self.eat(&Tok::Carets) {
                    let (dt, dpos) = self.term(
                        prefixes,
                        TermPolicy {
                            variables: false,
                            placeholders: false,
                        },
                        false,
                    )?;
                    match dt {
                        Term::Iri(iri) => Term::literal(lex, Some(&iri)),
                        _ => return Err(syntax(dpos, "datatype must be an IRI")),
                    }
                } else if let Some(Tok::LangOrDirective(tag)) = self.peek() {
                    return Err(syntax(
                        self.pos(),
                        format!("language tags are not supported (@{tag})"),
                    ));
                } else {
                    Term::literal(lex, None)
                }
            }
            other => {
                return Err(syntax(
                    pos,
                    format!("expected a term, found `{}`", other.describe()),
                ))
            }
        };
        if predicate && term.as_iri().is_none() && !term.is_variable() {
            return Err(syntax(pos, "predicate must be an IRI or variable"));
        }
        if term.is_literal() && predicate {
            return Err(syntax(pos, "literal in predicate position"));
        }
        Ok((term, pos))
    }

    /// One `S P O (; P O)* (, O)*` statement. The terminating `.` may be
    /// omitted before a closing `}` or a `FILTER`.
    pub fn statement(
        &mut self,
        prefixes: &PrefixMap,
        policy: TermPolicy,
        out: &mut Vec<(Triple, Pos)>,
    ) -> Result<(), ParseError> {
        let (subject, spos) = self.term(prefixes, policy, false)?;
        if subject.is_literal() {
            return Err(syntax(spos, "literal in subject position"));
        }
        loop {
            let (predicate, _) = self.term(prefixes, policy, true)?;
            loop {
                let (object, _) = self.term(prefixes, policy, false)?;
                out.push((
                    Triple::new(subject.clone(), predicate.clone(), object),
                    spos,
                ));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            if !self.eat(&Tok::Semi) {
                break;
            }
            // tolerate a dangling `;` before `.` or `}`
            if matches!(self.peek(), Some(Tok::Dot) | Some(Tok::RBrace)) {
                break;
            }
        }
        match self.peek() {
            Some(Tok::Dot) => {
                self.at += 1;
                Ok(())
            }
            Some(Tok::RBrace) => Ok(()),
            Some(Tok::Word(w)) if w == "FILTER" => Ok(()),
            Some(_) => Err(self.error(format!(
                "expected `.` after statement, found `{}`",
                self.peek().map(Tok::describe).unwrap_or_default()
            ))),
            None => Err(self.error("expected `.` after statement, found end of input")),
        }
    }
}

fn resolve_pname(
    prefixes: &PrefixMap,
    prefix: &str,
    local: &str,
    pos: Pos,
) -> Result<String, ParseError> {
    prefixes.expand(prefix, local).ok_or_else(|| {
        ParseError::new(
            pos.line,
            pos.column,
            ParseErrorKind::UnknownPrefix(prefix.to_string()),
        )
    })
}

/// Parse a single triple pattern such as `?y rdf:type :B_acc_credit`.
pub fn parse_pattern(text: &str, prefixes: &PrefixMap) -> Result<Triple, ParseError> {
    let mut source = text.trim().to_string();
    if !source.ends_with('.') {
        source.push_str(" .");
    }
    let mut cursor = Cursor::new(&source)?;
    let mut out = Vec::new();
    let policy = TermPolicy {
        variables: true,
        placeholders: false,
    };
    cursor.statement(prefixes, policy, &mut out)?;
    if !cursor.at_end() {
        return Err(cursor.error("trailing input after pattern"));
    }
    match out.len() {
        1 => Ok(out.remove(0).0),
        _ => Err(syntax(
            Pos { line: 1, column: 1 },
            "expected exactly one triple pattern",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_names_and_trailing_dot() {
        let toks: Vec<Tok> = tokenize(":a rdf:type :B.")
            .unwrap()
            .into_iter()
            .map(|(t, _)| t)
            .collect();
        assert_eq!(
            toks,
            vec![
                Tok::PName("".into(), "a".into()),
                Tok::PName("rdf".into(), "type".into()),
                Tok::PName("".into(), "B".into()),
                Tok::Dot,
            ]
        );
    }

    #[test]
    fn reports_positions() {
        let err = tokenize("\n  <unterminated").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
    }

    #[test]
    fn comment_does_not_eat_iri_fragment() {
        let toks = tokenize("<urn:x#y> # trailing").unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].0, Tok::IriRef("urn:x#y".into()));
    }

    #[test]
    fn pattern_parsing() {
        let mut p = PrefixMap::standard();
        p.insert("", "urn:ex#");
        let t = parse_pattern("?y rdf:type :B_acc_credit", &p).unwrap();
        assert_eq!(t.subject, Term::var("y"));
        assert_eq!(t.object, Term::iri("urn:ex#B_acc_credit"));
        assert!(matches!(
            parse_pattern("?y ex:p ?z", &p).unwrap_err().kind,
            ParseErrorKind::UnknownPrefix(_)
        ));
    }
}
