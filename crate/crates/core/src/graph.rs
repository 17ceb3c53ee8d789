//! Declaration graphs: the parsed form of a declaration document.
//!
//! A graph is a set of (subject, predicate, object) triples. Objects may be
//! named nodes, literals, or ordered lists (Turtle collections are kept
//! first-class rather than exploded into cons cells). Anonymous bracket
//! nodes become document-local handles until skolemization assigns them
//! content-hashed ids.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ids::{Id, PrefixMap};

/// Document-local handle for an anonymous node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnonId {
    pub document: String,
    pub ordinal: usize,
}

impl fmt::Display for AnonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_:{}#{}", self.document, self.ordinal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Iri(Id),
    Anon(AnonId),
}

impl Node {
    pub fn as_iri(&self) -> Option<&Id> {
        match self {
            Node::Iri(id) => Some(id),
            Node::Anon(_) => None,
        }
    }
}

/// A typed literal value. Decimals wrap `f64` with total ordering so terms
/// can live in ordered sets; document literals never contain NaN.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Dec(Decimal),
    Str(String),
}

impl Scalar {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Scalar::Bool(_) => "boolean",
            Scalar::Int(_) => "integer",
            Scalar::Dec(_) => "decimal",
            Scalar::Str(_) => "string",
        }
    }

    /// Canonical lexical form, used in signatures and display.
    pub fn lexical(&self) -> String {
        match self {
            Scalar::Bool(b) => b.to_string(),
            Scalar::Int(i) => i.to_string(),
            Scalar::Dec(d) => d.to_string(),
            Scalar::Str(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Int(i) => Some(*i as f64),
            Scalar::Dec(d) => Some(d.0),
            _ => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Str(s) => write!(f, "{:?}", s),
            other => f.write_str(&other.lexical()),
        }
    }
}

/// `f64` with total order and a lexical form that always keeps a decimal
/// point, so decimal literals survive a write/reparse round trip as decimals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Decimal(pub f64);

impl PartialEq for Decimal {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}
impl Eq for Decimal {}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}
impl std::hash::Hash for Decimal {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.fract() == 0.0 && self.0.is_finite() {
            write!(f, "{:.1}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Node(Node),
    Literal(Scalar),
    List(Vec<Term>),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Id> {
        match self {
            Term::Node(Node::Iri(id)) => Some(id),
            _ => None,
        }
    }

    pub fn as_node(&self) -> Option<&Node> {
        match self {
            Term::Node(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_scalar(&self) -> Option<&Scalar> {
        match self {
            Term::Literal(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Node,
    pub predicate: Id,
    pub object: Term,
}

/// Parsed content of one or more declaration documents.
#[derive(Debug, Clone, Default)]
pub struct DeclarationGraph {
    triples: BTreeSet<Triple>,
    pub base_document: String,
    pub prefixes: Vec<(String, String)>,
}

impl DeclarationGraph {
    pub fn new(base_document: impl Into<String>) -> Self {
        DeclarationGraph {
            triples: BTreeSet::new(),
            base_document: base_document.into(),
            prefixes: Vec::new(),
        }
    }

    pub fn insert(&mut self, triple: Triple) -> bool {
        self.triples.insert(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    /// Triples with the given subject.
    pub fn about<'a>(&'a self, subject: &'a Node) -> impl Iterator<Item = &'a Triple> + 'a {
        self.triples.iter().filter(move |t| &t.subject == subject)
    }

    /// Objects of (subject, predicate) pairs, in term order.
    pub fn objects<'a>(
        &'a self,
        subject: &'a Node,
        predicate: &'a Id,
    ) -> impl Iterator<Item = &'a Term> + 'a {
        self.triples
            .iter()
            .filter(move |t| &t.subject == subject && &t.predicate == predicate)
            .map(|t| &t.object)
    }

    /// The single object of (subject, predicate), if exactly one exists.
    pub fn object<'a>(&'a self, subject: &'a Node, predicate: &'a Id) -> Option<&'a Term> {
        let mut it = self.objects(subject, predicate);
        let first = it.next()?;
        if it.next().is_some() {
            return None;
        }
        Some(first)
    }

    /// Subjects carrying `rdf:type ty`, in order.
    pub fn subjects_of_type(&self, ty: &Id) -> Vec<&Node> {
        let rdf_type = crate::vocab::rdf_type();
        self.triples
            .iter()
            .filter(|t| t.predicate == rdf_type && t.object.as_iri() == Some(ty))
            .map(|t| &t.subject)
            .collect()
    }

    pub fn merge(&mut self, other: DeclarationGraph) {
        for triple in other.triples {
            self.triples.insert(triple);
        }
        for (p, n) in other.prefixes {
            if !self.prefixes.iter().any(|(ep, _)| ep == &p) {
                self.prefixes.push((p, n));
            }
        }
    }

    pub fn prefix_map(&self) -> PrefixMap {
        let mut map = PrefixMap::new();
        for (p, n) in &self.prefixes {
            map.declare(p, n);
        }
        map
    }

    /// Anonymous handles appearing anywhere in the graph.
    pub fn anonymous_handles(&self) -> BTreeSet<&AnonId> {
        let mut out = BTreeSet::new();
        fn walk_term<'a>(term: &'a Term, out: &mut BTreeSet<&'a AnonId>) {
            match term {
                Term::Node(Node::Anon(a)) => {
                    out.insert(a);
                }
                Term::List(items) => {
                    for item in items {
                        walk_term(item, out);
                    }
                }
                _ => {}
            }
        }
        for t in &self.triples {
            if let Node::Anon(a) = &t.subject {
                out.insert(a);
            }
            walk_term(&t.object, &mut out);
        }
        out
    }
}
