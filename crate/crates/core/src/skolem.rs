//! Content-hash skolemization of anonymous nodes.
//!
//! Anonymous handles are document-local, so the same inline declaration in
//! two files initially yields two distinct nodes. To let declarations unify
//! across files (inheritance must match parent declarations loaded from
//! separate documents), every anonymous node is replaced by a deterministic
//! id derived from a SHA-256 hash of its canonical signature:
//!
//! * the signature is the sorted multiset of (predicate, canonical object)
//!   pairs over the node's outgoing properties;
//! * a nested anonymous object contributes its own signature hash;
//! * ordered lists hash their elements in order;
//! * literals carry a kind tag, so the integer `3` and the string `"3"`
//!   hash differently.
//!
//! Identical structure therefore yields an identical id regardless of
//! source file or property order. Incoming edges do not participate.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{AnonId, DeclarationGraph, Node, Scalar, Term, Triple};
use crate::ids::Id;

const SKOLEM_PREFIX: &str = "urn:skolem:";

/// Replace every anonymous handle with its content-hashed id.
pub fn skolemize(graph: &DeclarationGraph) -> Result<DeclarationGraph> {
    let mut properties: BTreeMap<&AnonId, Vec<(&Id, &Term)>> = BTreeMap::new();
    for anon in graph.anonymous_handles() {
        properties.entry(anon).or_default();
    }
    for triple in graph.triples() {
        if let Node::Anon(a) = &triple.subject {
            properties
                .entry(a)
                .or_default()
                .push((&triple.predicate, &triple.object));
        }
    }

    let mut hashes: BTreeMap<AnonId, [u8; 32]> = BTreeMap::new();
    for anon in properties.keys() {
        let mut in_progress = Vec::new();
        signature(anon, &properties, &mut hashes, &mut in_progress)?;
    }

    let mut out = DeclarationGraph::new(graph.base_document.clone());
    out.prefixes = graph.prefixes.clone();
    for triple in graph.triples() {
        out.insert(Triple {
            subject: rewrite_node(&triple.subject, &hashes),
            predicate: triple.predicate.clone(),
            object: rewrite_term(&triple.object, &hashes),
        });
    }
    Ok(out)
}

/// The skolem id for a signature hash.
pub fn skolem_id(hash: &[u8; 32]) -> Id {
    Id::new(format!("{SKOLEM_PREFIX}{}", hex(hash)))
}

pub fn is_skolem(id: &Id) -> bool {
    id.as_str().starts_with(SKOLEM_PREFIX)
}

fn rewrite_node(node: &Node, hashes: &BTreeMap<AnonId, [u8; 32]>) -> Node {
    match node {
        Node::Iri(id) => Node::Iri(id.clone()),
        Node::Anon(a) => Node::Iri(skolem_id(&hashes[a])),
    }
}

fn rewrite_term(term: &Term, hashes: &BTreeMap<AnonId, [u8; 32]>) -> Term {
    match term {
        Term::Node(n) => Term::Node(rewrite_node(n, hashes)),
        Term::Literal(s) => Term::Literal(s.clone()),
        Term::List(items) => Term::List(items.iter().map(|t| rewrite_term(t, hashes)).collect()),
    }
}

fn signature(
    anon: &AnonId,
    properties: &BTreeMap<&AnonId, Vec<(&Id, &Term)>>,
    hashes: &mut BTreeMap<AnonId, [u8; 32]>,
    in_progress: &mut Vec<AnonId>,
) -> Result<[u8; 32]> {
    if let Some(h) = hashes.get(anon) {
        return Ok(*h);
    }
    if in_progress.contains(anon) {
        return Err(Error::SkolemCycle {
            handles: in_progress.iter().map(|a| a.to_string()).collect(),
        });
    }
    in_progress.push(anon.clone());

    let mut pairs: Vec<Vec<u8>> = Vec::new();
    if let Some(props) = properties.get(anon) {
        for (predicate, object) in props {
            let mut pair = Vec::new();
            write_len_prefixed(&mut pair, predicate.as_str().as_bytes());
            let canon = canonical_term(object, properties, hashes, in_progress)?;
            write_len_prefixed(&mut pair, &canon);
            pairs.push(pair);
        }
    }
    pairs.sort();

    let mut hasher = Sha256::new();
    for pair in &pairs {
        hasher.update(pair);
    }
    let hash: [u8; 32] = hasher.finalize().into();

    in_progress.pop();
    hashes.insert(anon.clone(), hash);
    Ok(hash)
}

fn canonical_term(
    term: &Term,
    properties: &BTreeMap<&AnonId, Vec<(&Id, &Term)>>,
    hashes: &mut BTreeMap<AnonId, [u8; 32]>,
    in_progress: &mut Vec<AnonId>,
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    match term {
        Term::Node(Node::Iri(id)) => {
            out.push(b'N');
            write_len_prefixed(&mut out, id.as_str().as_bytes());
        }
        Term::Node(Node::Anon(a)) => {
            out.push(b'B');
            let h = signature(a, properties, hashes, in_progress)?;
            out.extend_from_slice(&h);
        }
        Term::Literal(s) => {
            out.push(match s {
                Scalar::Bool(_) => b'b',
                Scalar::Int(_) => b'i',
                Scalar::Dec(_) => b'd',
                Scalar::Str(_) => b's',
            });
            write_len_prefixed(&mut out, s.lexical().as_bytes());
        }
        Term::List(items) => {
            out.push(b'L');
            out.extend_from_slice(&(items.len() as u64).to_le_bytes());
            for item in items {
                let canon = canonical_term(item, properties, hashes, in_progress)?;
                write_len_prefixed(&mut out, &canon);
            }
        }
    }
    Ok(out)
}

fn write_len_prefixed(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
    out.extend_from_slice(bytes);
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turtle::parse_document;

    fn skolemized(text: &str, base: &str) -> DeclarationGraph {
        skolemize(&parse_document(text, base).unwrap()).unwrap()
    }

    fn skolem_objects(graph: &DeclarationGraph) -> Vec<Id> {
        graph
            .triples()
            .filter_map(|t| t.object.as_iri())
            .filter(|id| is_skolem(id))
            .cloned()
            .collect()
    }

    const PREAMBLE: &str = "@prefix : <http://t.test/> .\n";

    #[test]
    fn identical_declarations_in_two_files_unify() {
        let text = format!("{PREAMBLE}:F :declares [ :fromLabel :X ; :toLabel :Y ] .");
        let a = skolemized(&text, "a.ttl");
        let b = skolemized(&text, "b.ttl");
        assert_eq!(skolem_objects(&a), skolem_objects(&b));
    }

    #[test]
    fn property_order_does_not_change_the_id() {
        let fwd = format!("{PREAMBLE}:F :declares [ :fromLabel :X ; :toLabel :Y ] .");
        let rev = format!("{PREAMBLE}:F :declares [ :toLabel :Y ; :fromLabel :X ] .");
        assert_eq!(
            skolem_objects(&skolemized(&fwd, "a.ttl")),
            skolem_objects(&skolemized(&rev, "a.ttl"))
        );
    }

    #[test]
    fn list_order_is_significant() {
        let ab = format!("{PREAMBLE}:F :declares [ :fromAllLabels ( :A :B ) ] .");
        let ba = format!("{PREAMBLE}:F :declares [ :fromAllLabels ( :B :A ) ] .");
        assert_ne!(
            skolem_objects(&skolemized(&ab, "a.ttl")),
            skolem_objects(&skolemized(&ba, "a.ttl"))
        );
    }

    #[test]
    fn literal_kind_is_part_of_the_signature() {
        let int = format!("{PREAMBLE}:F :declares [ :value 3 ] .");
        let string = format!("{PREAMBLE}:F :declares [ :value \"3\" ] .");
        assert_ne!(
            skolem_objects(&skolemized(&int, "a.ttl")),
            skolem_objects(&skolemized(&string, "a.ttl"))
        );
    }

    #[test]
    fn empty_node_gets_deterministic_id() {
        let text = format!("{PREAMBLE}:F :declares [ ] .");
        let a = skolemized(&text, "a.ttl");
        let b = skolemized(&text, "b.ttl");
        let ids = skolem_objects(&a);
        assert_eq!(ids.len(), 1);
        assert_eq!(ids, skolem_objects(&b));
    }

    #[test]
    fn nested_nodes_hash_recursively() {
        let outer = format!("{PREAMBLE}:F :declares [ :cond [ :op :lt ] ] .");
        let a = skolemized(&outer, "a.ttl");
        let b = skolemized(&outer, "b.ttl");
        // Two skolem ids each (outer and inner), pairwise equal across files.
        let mut ia = skolem_objects(&a);
        let mut ib = skolem_objects(&b);
        ia.sort();
        ib.sort();
        assert_eq!(ia.len(), 2);
        assert_eq!(ia, ib);
        assert!(a.anonymous_handles().is_empty());
    }
}
