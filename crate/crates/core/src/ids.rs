//! Interned identifiers.
//!
//! Every named thing in the model — containers, labels, facets, frameworks,
//! scopes, predicates — is identified by its expanded IRI. Prefixed names
//! are expanded at parse time; skolemized anonymous nodes get `urn:skolem:`
//! ids. `Id` is a cheap-to-clone shared string.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// An expanded IRI (or skolem URN) used as an identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Id(Arc<str>);

impl Id {
    pub fn new(s: impl AsRef<str>) -> Self {
        Id(Arc::from(s.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Id({})", &self.0)
    }
}

impl From<&str> for Id {
    fn from(s: &str) -> Self {
        Id::new(s)
    }
}

impl From<String> for Id {
    fn from(s: String) -> Self {
        Id(Arc::from(s))
    }
}

impl Serialize for Id {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Id {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        String::deserialize(de).map(Id::from)
    }
}

/// Maps namespace IRIs back to declared prefixes for display.
///
/// The first declaration of a namespace wins, so rendering is stable for a
/// fixed set of input documents. Ids with no matching namespace render in
/// angle brackets.
#[derive(Debug, Clone, Default)]
pub struct PrefixMap {
    // prefix -> namespace, insertion order preserved
    entries: Vec<(String, String)>,
}

impl PrefixMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a prefix/namespace pair. Later bindings never displace
    /// earlier ones, in either direction.
    pub fn declare(&mut self, prefix: &str, namespace: &str) {
        let taken = self
            .entries
            .iter()
            .any(|(p, n)| p == prefix || n == namespace);
        if !taken {
            self.entries.push((prefix.to_string(), namespace.to_string()));
        }
    }

    pub fn expand(&self, prefix: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(p, _)| p == prefix)
            .map(|(_, n)| n.as_str())
    }

    /// Render an id as `prefix:local` when a declared namespace is the
    /// longest prefix of it, otherwise as `<iri>`.
    pub fn compact(&self, id: &Id) -> String {
        let iri = id.as_str();
        let mut best: Option<(&str, &str)> = None;
        for (p, n) in &self.entries {
            if let Some(local) = iri.strip_prefix(n.as_str()) {
                if local_name_ok(local) && best.map_or(true, |(_, bn)| n.len() > bn.len()) {
                    best = Some((p, n));
                }
            }
        }
        match best {
            Some((p, n)) => format!("{}:{}", p, &iri[n.len()..]),
            None => format!("<{}>", iri),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(p, n)| (p.as_str(), n.as_str()))
    }
}

fn local_name_ok(local: &str) -> bool {
    !local.is_empty()
        && local
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compaction_uses_longest_namespace() {
        let mut map = PrefixMap::new();
        map.declare("ex", "http://x.test/");
        map.declare("sub", "http://x.test/sub#");
        let id = Id::new("http://x.test/sub#Thing");
        assert_eq!(map.compact(&id), "sub:Thing");
    }

    #[test]
    fn first_declaration_wins() {
        let mut map = PrefixMap::new();
        map.declare("a", "http://one/");
        map.declare("a", "http://two/");
        assert_eq!(map.expand("a"), Some("http://one/"));
        let id = Id::new("http://two/X");
        assert_eq!(map.compact(&id), "<http://two/X>");
    }

    #[test]
    fn unmatched_id_renders_in_angles() {
        let map = PrefixMap::new();
        assert_eq!(map.compact(&Id::new("urn:skolem:ab")), "<urn:skolem:ab>");
    }
}
