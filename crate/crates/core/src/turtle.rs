//! Parser and writer for the Turtle subset used by declaration documents.
//!
//! Supported: `@prefix` directives, prefixed names, full IRIs in angle
//! brackets, the `a` keyword, anonymous bracket nodes, collections
//! `( .. )`, predicate lists (`;`), object lists (`,`), and string /
//! integer / decimal / boolean literals. Not supported: datatype tags,
//! language tags, labelled blank nodes, escapes inside IRIs, or dots in
//! prefixed local names.

use crate::error::{Error, Result};
use crate::graph::{AnonId, Decimal, DeclarationGraph, Node, Scalar, Term, Triple};
use crate::ids::Id;
use crate::vocab;

/// Parse one document. `base` names the document for error messages and
/// anonymous-node handles; it must be distinct per loaded file.
pub fn parse_document(text: &str, base: &str) -> Result<DeclarationGraph> {
    Parser::new(text, base)?.run()
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    base: &'a str,
    graph: DeclarationGraph,
    anon_counter: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    PrefixDirective,
    Iri(String),
    PName { prefix: String, local: String },
    KeywordA,
    Bool(bool),
    Int(i64),
    Dec(f64),
    Str(String),
    Dot,
    Semicolon,
    Comma,
    OpenBracket,
    CloseBracket,
    OpenParen,
    CloseParen,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    line: usize,
    column: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, base: &'a str) -> Result<Self> {
        Ok(Parser {
            tokens: lex(text, base)?,
            pos: 0,
            base,
            graph: DeclarationGraph::new(base),
            anon_counter: 0,
        })
    }

    fn run(mut self) -> Result<DeclarationGraph> {
        while self.peek().kind != TokenKind::Eof {
            if self.peek().kind == TokenKind::PrefixDirective {
                self.prefix_directive()?;
            } else {
                self.triples()?;
            }
        }
        Ok(self.graph)
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<Token> {
        let t = self.advance();
        if &t.kind != kind {
            return Err(self.err(&t, format!("expected {what}")));
        }
        Ok(t)
    }

    fn err(&self, token: &Token, message: impl Into<String>) -> Error {
        Error::syntax(self.base, token.line, token.column, message)
    }

    fn prefix_directive(&mut self) -> Result<()> {
        self.advance(); // @prefix
        let t = self.advance();
        let prefix = match t.kind {
            TokenKind::PName { prefix, ref local } if local.is_empty() => prefix,
            _ => return Err(self.err(&t, "expected prefix name ending in ':'")),
        };
        let t = self.advance();
        let namespace = match t.kind {
            TokenKind::Iri(iri) => iri,
            _ => return Err(self.err(&t, "expected IRI in @prefix directive")),
        };
        self.expect(&TokenKind::Dot, "'.' after @prefix directive")?;
        if !self.graph.prefixes.iter().any(|(p, _)| p == &prefix) {
            self.graph.prefixes.push((prefix, namespace));
        }
        Ok(())
    }

    fn triples(&mut self) -> Result<()> {
        let subject = self.subject()?;
        self.predicate_object_list(&subject)?;
        self.expect(&TokenKind::Dot, "'.' at end of statement")?;
        Ok(())
    }

    fn subject(&mut self) -> Result<Node> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Iri(_) | TokenKind::PName { .. } => Ok(Node::Iri(self.iri()?)),
            TokenKind::OpenBracket => self.anon_node(),
            _ => Err(self.err(&t, "expected subject")),
        }
    }

    fn iri(&mut self) -> Result<Id> {
        let t = self.advance();
        match t.kind {
            TokenKind::Iri(iri) => Ok(Id::from(iri)),
            TokenKind::PName { prefix, local } => {
                let ns = self
                    .graph
                    .prefixes
                    .iter()
                    .find(|(p, _)| p == &prefix)
                    .map(|(_, n)| n.clone());
                match ns {
                    Some(ns) => Ok(Id::new(format!("{ns}{local}"))),
                    None => Err(Error::UndefinedPrefix {
                        file: self.base.to_string(),
                        location: crate::error::Location {
                            line: t.line,
                            column: t.column,
                        },
                        prefix,
                    }),
                }
            }
            _ => Err(self.err(&t, "expected IRI or prefixed name")),
        }
    }

    fn predicate_object_list(&mut self, subject: &Node) -> Result<()> {
        loop {
            let verb = self.verb()?;
            self.object_list(subject, &verb)?;
            if self.peek().kind == TokenKind::Semicolon {
                self.advance();
                // Trailing ';' before '.' or ']' is allowed.
                match self.peek().kind {
                    TokenKind::Dot | TokenKind::CloseBracket => return Ok(()),
                    TokenKind::Semicolon => continue,
                    _ => continue,
                }
            }
            return Ok(());
        }
    }

    fn verb(&mut self) -> Result<Id> {
        if self.peek().kind == TokenKind::KeywordA {
            self.advance();
            return Ok(vocab::rdf_type());
        }
        self.iri()
    }

    fn object_list(&mut self, subject: &Node, predicate: &Id) -> Result<()> {
        loop {
            let object = self.object()?;
            self.graph.insert(Triple {
                subject: subject.clone(),
                predicate: predicate.clone(),
                object,
            });
            if self.peek().kind == TokenKind::Comma {
                self.advance();
                continue;
            }
            return Ok(());
        }
    }

    fn object(&mut self) -> Result<Term> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Iri(_) | TokenKind::PName { .. } => Ok(Term::Node(Node::Iri(self.iri()?))),
            TokenKind::OpenBracket => Ok(Term::Node(self.anon_node()?)),
            TokenKind::OpenParen => self.collection(),
            TokenKind::Bool(b) => {
                let b = *b;
                self.advance();
                Ok(Term::Literal(Scalar::Bool(b)))
            }
            TokenKind::Int(i) => {
                let i = *i;
                self.advance();
                Ok(Term::Literal(Scalar::Int(i)))
            }
            TokenKind::Dec(d) => {
                let d = *d;
                self.advance();
                Ok(Term::Literal(Scalar::Dec(Decimal(d))))
            }
            TokenKind::Str(s) => {
                let s = s.clone();
                self.advance();
                Ok(Term::Literal(Scalar::Str(s)))
            }
            _ => Err(self.err(&t, "expected object")),
        }
    }

    fn anon_node(&mut self) -> Result<Node> {
        self.expect(&TokenKind::OpenBracket, "'['")?;
        let handle = AnonId {
            document: self.base.to_string(),
            ordinal: self.anon_counter,
        };
        self.anon_counter += 1;
        let node = Node::Anon(handle);
        if self.peek().kind != TokenKind::CloseBracket {
            self.predicate_object_list(&node)?;
        }
        self.expect(&TokenKind::CloseBracket, "']'")?;
        Ok(node)
    }

    fn collection(&mut self) -> Result<Term> {
        self.expect(&TokenKind::OpenParen, "'('")?;
        let mut items = Vec::new();
        while self.peek().kind != TokenKind::CloseParen {
            if self.peek().kind == TokenKind::Eof {
                let t = self.peek().clone();
                return Err(self.err(&t, "unterminated collection"));
            }
            items.push(self.object()?);
        }
        self.advance();
        Ok(Term::List(items))
    }
}

fn lex(text: &str, file: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut column = 1;

    macro_rules! tok {
        ($kind:expr, $l:expr, $c:expr) => {
            tokens.push(Token {
                kind: $kind,
                line: $l,
                column: $c,
            })
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let (l, col) = (line, column);
        let bump = |i: &mut usize, line: &mut usize, column: &mut usize| {
            if chars[*i] == '\n' {
                *line += 1;
                *column = 1;
            } else {
                *column += 1;
            }
            *i += 1;
        };

        match c {
            ' ' | '\t' | '\r' | '\n' => bump(&mut i, &mut line, &mut column),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    bump(&mut i, &mut line, &mut column);
                }
            }
            '.' => {
                tok!(TokenKind::Dot, l, col);
                bump(&mut i, &mut line, &mut column);
            }
            ';' => {
                tok!(TokenKind::Semicolon, l, col);
                bump(&mut i, &mut line, &mut column);
            }
            ',' => {
                tok!(TokenKind::Comma, l, col);
                bump(&mut i, &mut line, &mut column);
            }
            '[' => {
                tok!(TokenKind::OpenBracket, l, col);
                bump(&mut i, &mut line, &mut column);
            }
            ']' => {
                tok!(TokenKind::CloseBracket, l, col);
                bump(&mut i, &mut line, &mut column);
            }
            '(' => {
                tok!(TokenKind::OpenParen, l, col);
                bump(&mut i, &mut line, &mut column);
            }
            ')' => {
                tok!(TokenKind::CloseParen, l, col);
                bump(&mut i, &mut line, &mut column);
            }
            '<' => {
                bump(&mut i, &mut line, &mut column);
                let mut iri = String::new();
                loop {
                    if i >= chars.len() || chars[i] == '\n' {
                        return Err(Error::syntax(file, l, col, "unterminated IRI"));
                    }
                    if chars[i] == '>' {
                        bump(&mut i, &mut line, &mut column);
                        break;
                    }
                    iri.push(chars[i]);
                    bump(&mut i, &mut line, &mut column);
                }
                tok!(TokenKind::Iri(iri), l, col);
            }
            '"' => {
                bump(&mut i, &mut line, &mut column);
                let mut s = String::new();
                loop {
                    if i >= chars.len() || chars[i] == '\n' {
                        return Err(Error::MalformedLiteral {
                            file: file.to_string(),
                            location: crate::error::Location { line: l, column: col },
                            message: "unterminated string".to_string(),
                        });
                    }
                    match chars[i] {
                        '"' => {
                            bump(&mut i, &mut line, &mut column);
                            break;
                        }
                        '\\' => {
                            bump(&mut i, &mut line, &mut column);
                            if i >= chars.len() {
                                return Err(Error::MalformedLiteral {
                                    file: file.to_string(),
                                    location: crate::error::Location { line: l, column: col },
                                    message: "unterminated escape".to_string(),
                                });
                            }
                            let e = chars[i];
                            s.push(match e {
                                '"' => '"',
                                '\\' => '\\',
                                'n' => '\n',
                                't' => '\t',
                                'r' => '\r',
                                other => {
                                    return Err(Error::MalformedLiteral {
                                        file: file.to_string(),
                                        location: crate::error::Location {
                                            line: l,
                                            column: col,
                                        },
                                        message: format!("unknown escape '\\{other}'"),
                                    })
                                }
                            });
                            bump(&mut i, &mut line, &mut column);
                        }
                        other => {
                            s.push(other);
                            bump(&mut i, &mut line, &mut column);
                        }
                    }
                }
                tok!(TokenKind::Str(s), l, col);
            }
            '@' => {
                let mut word = String::new();
                bump(&mut i, &mut line, &mut column);
                while i < chars.len() && chars[i].is_ascii_alphabetic() {
                    word.push(chars[i]);
                    bump(&mut i, &mut line, &mut column);
                }
                if word == "prefix" {
                    tok!(TokenKind::PrefixDirective, l, col);
                } else {
                    return Err(Error::syntax(file, l, col, format!("unknown directive '@{word}'")));
                }
            }
            c if c.is_ascii_digit() || c == '+' || c == '-' => {
                let mut num = String::new();
                num.push(c);
                bump(&mut i, &mut line, &mut column);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    num.push(chars[i]);
                    bump(&mut i, &mut line, &mut column);
                }
                let mut is_decimal = false;
                if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                    is_decimal = true;
                    num.push('.');
                    bump(&mut i, &mut line, &mut column);
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        num.push(chars[i]);
                        bump(&mut i, &mut line, &mut column);
                    }
                }
                // A bare sign, or a number glued to a name, is malformed.
                if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '.') {
                    let trailing_dot_ok = chars[i] == '.'
                        && (i + 1 >= chars.len() || !chars[i + 1].is_ascii_digit() || is_decimal);
                    if !trailing_dot_ok {
                        return Err(Error::MalformedLiteral {
                            file: file.to_string(),
                            location: crate::error::Location { line: l, column: col },
                            message: format!("malformed number starting at '{num}'"),
                        });
                    }
                }
                if is_decimal {
                    let v: f64 = num.parse().map_err(|_| Error::MalformedLiteral {
                        file: file.to_string(),
                        location: crate::error::Location { line: l, column: col },
                        message: format!("invalid decimal '{num}'"),
                    })?;
                    tok!(TokenKind::Dec(v), l, col);
                } else {
                    let v: i64 = num.parse().map_err(|_| Error::MalformedLiteral {
                        file: file.to_string(),
                        location: crate::error::Location { line: l, column: col },
                        message: format!("invalid integer '{num}'"),
                    })?;
                    tok!(TokenKind::Int(v), l, col);
                }
            }
            c if is_pname_start(c) || c == ':' => {
                let mut word = String::new();
                while i < chars.len() && is_pname_char(chars[i]) {
                    word.push(chars[i]);
                    bump(&mut i, &mut line, &mut column);
                }
                if i < chars.len() && chars[i] == ':' {
                    // prefixed name
                    bump(&mut i, &mut line, &mut column);
                    let mut local = String::new();
                    while i < chars.len() && is_pname_char(chars[i]) {
                        local.push(chars[i]);
                        bump(&mut i, &mut line, &mut column);
                    }
                    tok!(
                        TokenKind::PName {
                            prefix: word,
                            local,
                        },
                        l,
                        col
                    );
                } else if word == "a" {
                    tok!(TokenKind::KeywordA, l, col);
                } else if word == "true" {
                    tok!(TokenKind::Bool(true), l, col);
                } else if word == "false" {
                    tok!(TokenKind::Bool(false), l, col);
                } else if word.is_empty() {
                    return Err(Error::syntax(file, l, col, format!("unexpected character '{c}'")));
                } else {
                    return Err(Error::syntax(file, l, col, format!("unexpected bare word '{word}'")));
                }
            }
            other => {
                return Err(Error::syntax(file, l, col, format!("unexpected character '{other}'")));
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        line,
        column,
    });
    Ok(tokens)
}

fn is_pname_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_pname_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

/// Write a graph back out as Turtle. Anonymous nodes are emitted inline,
/// which covers every graph this parser can produce; lists keep their
/// order. Intended for round-trip tests and debugging dumps.
pub fn write_document(graph: &DeclarationGraph) -> String {
    use std::collections::{BTreeMap, BTreeSet};

    let mut out = String::new();
    for (p, n) in &graph.prefixes {
        out.push_str(&format!("@prefix {p}: <{n}> .\n"));
    }
    if !graph.prefixes.is_empty() {
        out.push('\n');
    }

    let map = graph.prefix_map();
    let mut by_subject: BTreeMap<&Node, Vec<&Triple>> = BTreeMap::new();
    for t in graph.triples() {
        by_subject.entry(&t.subject).or_default().push(t);
    }
    // Anonymous nodes referenced as objects are nested, not emitted at top level.
    let mut nested: BTreeSet<&AnonId> = BTreeSet::new();
    fn collect_nested<'a>(term: &'a Term, nested: &mut BTreeSet<&'a AnonId>) {
        match term {
            Term::Node(Node::Anon(a)) => {
                nested.insert(a);
            }
            Term::List(items) => items.iter().for_each(|t| collect_nested(t, nested)),
            _ => {}
        }
    }
    for t in graph.triples() {
        collect_nested(&t.object, &mut nested);
    }

    fn render_term(
        term: &Term,
        map: &crate::ids::PrefixMap,
        by_subject: &BTreeMap<&Node, Vec<&Triple>>,
    ) -> String {
        match term {
            Term::Node(Node::Iri(id)) => map.compact(id),
            Term::Node(n @ Node::Anon(_)) => {
                let mut inner = String::new();
                if let Some(triples) = by_subject.get(n) {
                    let parts: Vec<String> = triples
                        .iter()
                        .map(|t| {
                            format!(
                                "{} {}",
                                render_verb(&t.predicate, map),
                                render_term(&t.object, map, by_subject)
                            )
                        })
                        .collect();
                    inner = parts.join(" ; ");
                }
                format!("[ {inner} ]")
            }
            Term::Literal(s) => s.to_string(),
            Term::List(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|t| render_term(t, map, by_subject))
                    .collect();
                format!("( {} )", parts.join(" "))
            }
        }
    }

    fn render_verb(id: &Id, map: &crate::ids::PrefixMap) -> String {
        if id.as_str() == crate::vocab::RDF_TYPE {
            "a".to_string()
        } else {
            map.compact(id)
        }
    }

    for (subject, triples) in &by_subject {
        match subject {
            Node::Anon(a) => {
                if nested.contains(a) {
                    continue;
                }
                // A top-level bracket subject carries its properties inline.
                let text = render_term(&Term::Node((*subject).clone()), &map, &by_subject);
                out.push_str(&format!("{text} .\n"));
            }
            Node::Iri(id) => {
                let parts: Vec<String> = triples
                    .iter()
                    .map(|t| {
                        format!(
                            "{} {}",
                            render_verb(&t.predicate, &map),
                            render_term(&t.object, &map, &by_subject)
                        )
                    })
                    .collect();
                out.push_str(&format!("{} {} .\n", map.compact(id), parts.join(" ;\n    ")));
            }
        }
    }
    out
}
