//! Domain types of the compliance metamodel.
//!
//! A model is (facets, labels, frameworks, inheritance); an environment is
//! (containers, scopes, ground assertions, containment, joinability).
//! Inference computes a subset of container x label x scope x framework.

use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::Scalar;
use crate::ids::{Id, PrefixMap};
use crate::manifest::FrameworkKind;

// ---------------------------------------------------------------------------
// Relations over containers
// ---------------------------------------------------------------------------

/// Canonical relations derived from immediate containment, plus joinability.
///
/// `Desc` is the strict transitive closure of `Child`; `Sib` requires a
/// shared parent and distinct endpoints; `Identity` is equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    Identity,
    Child,
    Parent,
    Desc,
    Sib,
    Joinable,
}

impl RelationKind {
    pub fn name(self) -> &'static str {
        match self {
            RelationKind::Identity => "id",
            RelationKind::Child => "child",
            RelationKind::Parent => "parent",
            RelationKind::Desc => "desc",
            RelationKind::Sib => "sib",
            RelationKind::Joinable => "joinable",
        }
    }
}

/// Declared propagation directions. The relation names the position of the
/// propagation target relative to the label carrier: inward reaches the
/// carrier's children, outward its parent, peer its siblings, joinable its
/// join partners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Inward,
    Outward,
    Peer,
    Joinable,
}

impl Direction {
    pub fn relation(self) -> RelationKind {
        match self {
            Direction::Inward => RelationKind::Child,
            Direction::Outward => RelationKind::Parent,
            Direction::Peer => RelationKind::Sib,
            Direction::Joinable => RelationKind::Joinable,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Inward => "inward",
            Direction::Outward => "outward",
            Direction::Peer => "peer",
            Direction::Joinable => "joinable",
        }
    }
}

// ---------------------------------------------------------------------------
// Model: facets, labels, frameworks, rules
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Facet {
    pub id: Id,
    pub name: String,
    pub framework: Id,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterKind {
    Integer,
    Decimal,
    String,
    Boolean,
}

impl ParameterKind {
    pub fn matches(self, value: &Scalar) -> bool {
        matches!(
            (self, value),
            (ParameterKind::Integer, Scalar::Int(_))
                | (ParameterKind::Decimal, Scalar::Dec(_))
                | (ParameterKind::Decimal, Scalar::Int(_))
                | (ParameterKind::String, Scalar::Str(_))
                | (ParameterKind::Boolean, Scalar::Bool(_))
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterSpec {
    pub name: String,
    pub kind: ParameterKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub id: Id,
    pub facet: Id,
    pub framework: Id,
    pub parameter_schema: Vec<ParameterSpec>,
}

/// One of (source label + parameter name) or a literal default must be
/// present; both may be, in which case the default is the fallback.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParameterSource {
    pub source_label: Option<Id>,
    pub source_parameter: Option<String>,
    pub default: Option<Scalar>,
}

impl ParameterSource {
    pub fn literal(value: Scalar) -> Self {
        ParameterSource {
            source_label: None,
            source_parameter: None,
            default: Some(value),
        }
    }

    pub fn display(&self, map: &PrefixMap) -> String {
        match (&self.source_label, &self.source_parameter, &self.default) {
            (Some(l), Some(p), Some(d)) => format!("{}.{p} (default {d})", map.compact(l)),
            (Some(l), Some(p), None) => format!("{}.{p}", map.compact(l)),
            (_, _, Some(d)) => format!("{d}"),
            _ => "<empty source>".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CompareOp {
    LessThan,
    LessOrEqual,
    GreaterThan,
    GreaterOrEqual,
    Equal,
}

impl CompareOp {
    pub fn name(self) -> &'static str {
        match self {
            CompareOp::LessThan => "lessThan",
            CompareOp::LessOrEqual => "lessOrEqual",
            CompareOp::GreaterThan => "greaterThan",
            CompareOp::GreaterOrEqual => "greaterOrEqual",
            CompareOp::Equal => "equal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoolOp {
    And,
    Or,
}

/// The condition language: label atoms, containment atoms, parameter
/// comparisons, and AND/OR composites. No negation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    /// True iff some container standing in `relation` to the subject
    /// carries `label` in the scope, under any framework. `relation` is
    /// restricted to id/child/parent/desc/sib.
    HasLabel { relation: RelationKind, label: Id },
    /// True iff a containment assertion (subject, label, scope) exists.
    ContainsLabel { label: Id },
    Comparison {
        left: ParameterSource,
        right: ParameterSource,
        operator: CompareOp,
    },
    Composite {
        operator: BoolOp,
        children: Vec<Condition>,
    },
}

impl Condition {
    /// Deterministic identity derived from structure alone, so the same
    /// condition declared in different documents shares evaluation records.
    pub fn canonical_id(&self) -> Id {
        let mut hasher = Sha256::new();
        self.write_canonical(&mut hasher);
        let hash = hasher.finalize();
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        Id::new(format!("urn:cond:{hex}"))
    }

    fn write_canonical(&self, hasher: &mut Sha256) {
        match self {
            Condition::HasLabel { relation, label } => {
                hasher.update([1u8]);
                hasher.update(relation.name().as_bytes());
                hasher.update([0]);
                hasher.update(label.as_str().as_bytes());
                hasher.update([0]);
            }
            Condition::ContainsLabel { label } => {
                hasher.update([2u8]);
                hasher.update(label.as_str().as_bytes());
                hasher.update([0]);
            }
            Condition::Comparison {
                left,
                right,
                operator,
            } => {
                hasher.update([3u8]);
                hasher.update(operator.name().as_bytes());
                hasher.update([0]);
                for source in [left, right] {
                    for part in [
                        source.source_label.as_ref().map(|l| l.as_str().to_string()),
                        source.source_parameter.clone(),
                        source.default.as_ref().map(|d| format!("{}{}", d.kind_name(), d.lexical())),
                    ] {
                        hasher.update(part.unwrap_or_default().as_bytes());
                        hasher.update([0]);
                    }
                }
            }
            Condition::Composite { operator, children } => {
                hasher.update([4u8]);
                hasher.update([match operator {
                    BoolOp::And => b'&',
                    BoolOp::Or => b'|',
                }]);
                hasher.update((children.len() as u64).to_le_bytes());
                for child in children {
                    child.write_canonical(hasher);
                }
            }
        }
    }

    pub fn display(&self, map: &PrefixMap) -> String {
        match self {
            Condition::HasLabel { relation, label } => {
                format!("hasLabel[{}]({})", relation.name(), map.compact(label))
            }
            Condition::ContainsLabel { label } => {
                format!("containsLabel({})", map.compact(label))
            }
            Condition::Comparison {
                left,
                right,
                operator,
            } => format!(
                "{} {} {}",
                left.display(map),
                operator.name(),
                right.display(map)
            ),
            Condition::Composite { operator, children } => {
                let glue = match operator {
                    BoolOp::And => " AND ",
                    BoolOp::Or => " OR ",
                };
                let parts: Vec<String> = children.iter().map(|c| c.display(map)).collect();
                format!("({})", parts.join(glue))
            }
        }
    }
}

/// Subject of a propagation declaration before facet expansion.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PropagationSubject {
    Label(Id),
    Facet(Id),
}

/// A rule as declared by a framework document. Facet-level propagation is
/// expanded to per-label rules during resolution; everything else already
/// names its single head label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeclaredRule {
    Simple {
        from: Id,
        to: Id,
    },
    Conditional {
        from: Id,
        condition: Condition,
        to: Id,
    },
    Implication {
        condition: Condition,
        to: Id,
    },
    Propagation {
        direction: Direction,
        subject: PropagationSubject,
    },
}

/// A rule ready for evaluation: facet propagation expanded, exactly one
/// head label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResolvedRule {
    Simple {
        from: Id,
        to: Id,
    },
    Conditional {
        from: Id,
        condition: Condition,
        to: Id,
    },
    Implication {
        condition: Condition,
        to: Id,
    },
    Propagation {
        direction: Direction,
        label: Id,
    },
}

impl ResolvedRule {
    pub fn head(&self) -> &Id {
        match self {
            ResolvedRule::Simple { to, .. } => to,
            ResolvedRule::Conditional { to, .. } => to,
            ResolvedRule::Implication { to, .. } => to,
            ResolvedRule::Propagation { label, .. } => label,
        }
    }

    pub fn condition(&self) -> Option<&Condition> {
        match self {
            ResolvedRule::Conditional { condition, .. } => Some(condition),
            ResolvedRule::Implication { condition, .. } => Some(condition),
            _ => None,
        }
    }

    pub fn display(&self, map: &PrefixMap) -> String {
        match self {
            ResolvedRule::Simple { from, to } => {
                format!("{} -> {}", map.compact(from), map.compact(to))
            }
            ResolvedRule::Conditional {
                from,
                condition,
                to,
            } => format!(
                "{} -[{}]-> {}",
                map.compact(from),
                condition.display(map),
                map.compact(to)
            ),
            ResolvedRule::Implication { condition, to } => {
                format!("{} => {}", condition.display(map), map.compact(to))
            }
            ResolvedRule::Propagation { direction, label } => {
                format!("propagate {} {}", map.compact(label), direction.name())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Framework {
    /// IRI of the framework node in its model documents.
    pub id: Id,
    /// Manifest id of the bundle that declared it.
    pub bundle: String,
    pub title: Option<String>,
    pub kind: FrameworkKind,
    /// Immediate parents (`extends` edges), in declaration order.
    pub parents: Vec<Id>,
    /// Declared rules paired with the skolemized declaration node.
    pub declared_rules: Vec<(DeclaredRule, Id)>,
    pub declared_labels: Vec<Id>,
    pub declared_facets: Vec<Id>,
}

/// The loaded model: every framework, label, and facet, in load order.
#[derive(Debug, Clone, Default)]
pub struct Model {
    pub frameworks: BTreeMap<Id, Framework>,
    pub labels: BTreeMap<Id, Label>,
    pub facets: BTreeMap<Id, Facet>,
    /// Framework ids in dependency order.
    pub load_order: Vec<Id>,
    /// Labels whose presence disqualifies a container from release.
    pub blocks_release: BTreeSet<Id>,
}

impl Model {
    /// Strict ancestors of a framework (transitive closure of parents),
    /// nearest first, deduplicated, deterministic.
    pub fn ancestors(&self, framework: &Id) -> Vec<Id> {
        let mut out = Vec::new();
        let mut queue: Vec<Id> = self
            .frameworks
            .get(framework)
            .map(|f| f.parents.clone())
            .unwrap_or_default();
        while let Some(next) = queue.first().cloned() {
            queue.remove(0);
            if out.contains(&next) {
                continue;
            }
            out.push(next.clone());
            if let Some(f) = self.frameworks.get(&next) {
                queue.extend(f.parents.clone());
            }
        }
        out
    }

    /// The framework plus its ancestors.
    pub fn closure(&self, framework: &Id) -> Vec<Id> {
        let mut out = vec![framework.clone()];
        out.extend(self.ancestors(framework));
        out
    }

    /// All labels belonging to a facet, across every loaded framework.
    pub fn labels_in_facet(&self, facet: &Id) -> Vec<Id> {
        self.labels
            .values()
            .filter(|l| &l.facet == facet)
            .map(|l| l.id.clone())
            .collect()
    }

    /// Detect cycles in the inheritance relation.
    pub fn validate_inheritance(&self) -> Result<()> {
        for start in self.frameworks.keys() {
            let mut seen = BTreeSet::new();
            let mut stack = vec![start.clone()];
            while let Some(f) = stack.pop() {
                if f == *start && !seen.is_empty() {
                    return Err(Error::Model(format!(
                        "framework inheritance cycle through '{start}'"
                    )));
                }
                if !seen.insert(f.clone()) {
                    continue;
                }
                if let Some(fw) = self.frameworks.get(&f) {
                    stack.extend(fw.parents.iter().cloned());
                }
            }
        }
        Ok(())
    }

    pub fn framework_by_bundle(&self, bundle: &str) -> Option<&Framework> {
        self.frameworks.values().find(|f| f.bundle == bundle)
    }
}

// ---------------------------------------------------------------------------
// Environment: containers, scopes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub id: Id,
    pub parent: Option<Id>,
    pub joinable: BTreeSet<Id>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scope {
    pub id: Id,
    pub visible: BTreeSet<Id>,
}

#[derive(Debug, Clone, Default)]
pub struct Environment {
    pub containers: BTreeMap<Id, Container>,
    pub scopes: BTreeMap<Id, Scope>,
    children: BTreeMap<Id, BTreeSet<Id>>,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a container. Assigning a second parent to an existing
    /// container is rejected; the containment relation is a forest.
    pub fn add_container(&mut self, id: Id, parent: Option<Id>) -> Result<()> {
        match self.containers.get_mut(&id) {
            Some(existing) => {
                if let Some(p) = parent {
                    if existing.parent.as_ref().is_some_and(|ep| *ep != p) {
                        return Err(Error::Environment(format!(
                            "container '{id}' has two parents: '{}' and '{p}'",
                            existing.parent.as_ref().unwrap()
                        )));
                    }
                    existing.parent = Some(p.clone());
                    self.children.entry(p).or_default().insert(id);
                }
            }
            None => {
                if let Some(p) = &parent {
                    self.children.entry(p.clone()).or_default().insert(id.clone());
                }
                self.containers.insert(
                    id.clone(),
                    Container {
                        id,
                        parent,
                        joinable: BTreeSet::new(),
                    },
                );
            }
        }
        Ok(())
    }

    /// Declare joinability once; it reads symmetrically.
    pub fn add_joinable(&mut self, a: &Id, b: &Id) -> Result<()> {
        if !self.containers.contains_key(a) {
            return Err(Error::UnknownContainer(a.clone()));
        }
        if !self.containers.contains_key(b) {
            return Err(Error::UnknownContainer(b.clone()));
        }
        self.containers.get_mut(a).unwrap().joinable.insert(b.clone());
        self.containers.get_mut(b).unwrap().joinable.insert(a.clone());
        Ok(())
    }

    pub fn add_scope(&mut self, id: Id) {
        self.scopes.entry(id.clone()).or_insert(Scope {
            id,
            visible: BTreeSet::new(),
        });
    }

    pub fn add_visibility(&mut self, scope: &Id, container: &Id) -> Result<()> {
        if !self.containers.contains_key(container) {
            return Err(Error::UnknownContainer(container.clone()));
        }
        let s = self
            .scopes
            .get_mut(scope)
            .ok_or_else(|| Error::UnknownScope(scope.clone()))?;
        s.visible.insert(container.clone());
        Ok(())
    }

    pub fn visible(&self, container: &Id, scope: &Id) -> bool {
        self.scopes
            .get(scope)
            .is_some_and(|s| s.visible.contains(container))
    }

    /// Strict ancestors, nearest first. Unbounded walks are cut off by the
    /// container count so a cyclic graph cannot hang callers; validation
    /// reports the cycle itself.
    pub fn ancestors(&self, container: &Id) -> Vec<Id> {
        let mut out = Vec::new();
        let mut current = self
            .containers
            .get(container)
            .and_then(|c| c.parent.clone());
        while let Some(p) = current {
            if out.contains(&p) || out.len() > self.containers.len() {
                break;
            }
            out.push(p.clone());
            current = self.containers.get(&p).and_then(|c| c.parent.clone());
        }
        out
    }

    pub fn children(&self, container: &Id) -> Vec<Id> {
        self.children
            .get(container)
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default()
    }

    pub fn descendants(&self, container: &Id) -> Vec<Id> {
        let mut out = Vec::new();
        let mut stack = self.children(container);
        while let Some(d) = stack.pop() {
            if out.contains(&d) {
                continue;
            }
            stack.extend(self.children(&d));
            out.push(d);
        }
        out.sort();
        out
    }

    pub fn siblings(&self, container: &Id) -> Vec<Id> {
        let Some(parent) = self.containers.get(container).and_then(|c| c.parent.as_ref()) else {
            return Vec::new();
        };
        self.children(parent)
            .into_iter()
            .filter(|c| c != container)
            .collect()
    }

    /// Containers standing in `relation` to `anchor`: for Child the
    /// anchor's children, for Parent its parent, for Desc its strict
    /// descendants, for Sib its siblings, for Joinable its join partners,
    /// for Identity the anchor itself.
    pub fn related(&self, relation: RelationKind, anchor: &Id) -> Vec<Id> {
        match relation {
            RelationKind::Identity => vec![anchor.clone()],
            RelationKind::Child => self.children(anchor),
            RelationKind::Parent => self
                .containers
                .get(anchor)
                .and_then(|c| c.parent.clone())
                .into_iter()
                .collect(),
            RelationKind::Desc => self.descendants(anchor),
            RelationKind::Sib => self.siblings(anchor),
            RelationKind::Joinable => self
                .containers
                .get(anchor)
                .map(|c| c.joinable.iter().cloned().collect())
                .unwrap_or_default(),
        }
    }

    /// Truth of the canonical relation sigma(d1, d2).
    pub fn canonical_relation(&self, kind: RelationKind, d1: &Id, d2: &Id) -> Result<bool> {
        for d in [d1, d2] {
            if !self.containers.contains_key(d) {
                return Err(Error::UnknownContainer(d.clone()));
            }
        }
        Ok(match kind {
            RelationKind::Identity => d1 == d2,
            RelationKind::Child => {
                self.containers.get(d1).and_then(|c| c.parent.as_ref()) == Some(d2)
            }
            RelationKind::Parent => {
                self.containers.get(d2).and_then(|c| c.parent.as_ref()) == Some(d1)
            }
            RelationKind::Desc => self.ancestors(d1).contains(d2),
            RelationKind::Sib => {
                d1 != d2 && {
                    let p1 = self.containers.get(d1).and_then(|c| c.parent.as_ref());
                    let p2 = self.containers.get(d2).and_then(|c| c.parent.as_ref());
                    p1.is_some() && p1 == p2
                }
            }
            RelationKind::Joinable => self
                .containers
                .get(d1)
                .is_some_and(|c| c.joinable.contains(d2)),
        })
    }

    /// Structural violations: containment cycles and dangling references.
    /// Double parents are already rejected at construction.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for (id, c) in &self.containers {
            if let Some(p) = &c.parent {
                if !self.containers.contains_key(p) {
                    problems.push(format!("container '{id}' has unknown parent '{p}'"));
                }
                if p == id {
                    problems.push(format!("container '{id}' contains itself"));
                    continue;
                }
            }
            // cycle detection: walk up with a step bound
            let mut steps = 0;
            let mut current = c.parent.clone();
            let mut path = vec![id.clone()];
            while let Some(p) = current {
                if path.contains(&p) {
                    path.push(p.clone());
                    problems.push(format!(
                        "containment cycle: {}",
                        path.iter()
                            .map(|i| i.to_string())
                            .collect::<Vec<_>>()
                            .join(" -> ")
                    ));
                    break;
                }
                path.push(p.clone());
                steps += 1;
                if steps > self.containers.len() {
                    break;
                }
                current = self.containers.get(&p).and_then(|c| c.parent.clone());
            }
        }
        for (id, s) in &self.scopes {
            for c in &s.visible {
                if !self.containers.contains_key(c) {
                    problems.push(format!("scope '{id}' includes unknown container '{c}'"));
                }
            }
        }
        problems.sort();
        problems.dedup();
        problems
    }
}

// ---------------------------------------------------------------------------
// Assertions
// ---------------------------------------------------------------------------

/// Identity of a compliance assertion; re-derivation is idempotent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AssertionKey {
    pub container: Id,
    pub label: Id,
    pub scope: Id,
    pub framework: Id,
}

impl AssertionKey {
    pub fn new(container: Id, label: Id, scope: Id, framework: Id) -> Self {
        AssertionKey {
            container,
            label,
            scope,
            framework,
        }
    }

    pub fn display(&self, map: &PrefixMap) -> String {
        format!(
            "({}, {}, {}, {})",
            map.compact(&self.container),
            map.compact(&self.label),
            map.compact(&self.scope),
            map.compact(&self.framework)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AssertionData {
    /// True only for assertions present in the initial set; inference never
    /// produces ground assertions.
    pub ground: bool,
    pub parameters: BTreeMap<String, Scalar>,
}

/// (container, label, scope): the container holds the label somewhere
/// strictly inside it, or was declared to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContainmentKey {
    pub container: Id,
    pub label: Id,
    pub scope: Id,
}

/// Outcome of evaluating a condition on a (container, scope) pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EvaluationKey {
    pub condition: Id,
    pub container: Id,
    pub scope: Id,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> Id {
        Id::new(format!("http://t.test/{s}"))
    }

    fn small_env() -> Environment {
        // db > table > column ; table2 under db ; t3 parentless
        let mut env = Environment::new();
        env.add_container(id("db"), None).unwrap();
        env.add_container(id("table"), Some(id("db"))).unwrap();
        env.add_container(id("column"), Some(id("table"))).unwrap();
        env.add_container(id("table2"), Some(id("db"))).unwrap();
        env.add_container(id("t3"), None).unwrap();
        env
    }

    #[test]
    fn identity_relation_holds_reflexively() {
        let env = small_env();
        assert!(env
            .canonical_relation(RelationKind::Identity, &id("db"), &id("db"))
            .unwrap());
    }

    #[test]
    fn siblings_require_a_shared_parent() {
        let env = small_env();
        assert!(env
            .canonical_relation(RelationKind::Sib, &id("table"), &id("table2"))
            .unwrap());
        // distinct parents -> not siblings
        assert!(!env
            .canonical_relation(RelationKind::Sib, &id("column"), &id("table2"))
            .unwrap());
        // parentless containers are nobody's siblings
        assert!(!env
            .canonical_relation(RelationKind::Sib, &id("db"), &id("t3"))
            .unwrap());
        assert!(!env
            .canonical_relation(RelationKind::Sib, &id("table"), &id("table"))
            .unwrap());
    }

    #[test]
    fn desc_is_the_strict_transitive_closure() {
        let env = small_env();
        assert!(env
            .canonical_relation(RelationKind::Desc, &id("column"), &id("db"))
            .unwrap());
        assert!(env
            .canonical_relation(RelationKind::Desc, &id("column"), &id("table"))
            .unwrap());
        assert!(!env
            .canonical_relation(RelationKind::Desc, &id("db"), &id("column"))
            .unwrap());
        assert!(!env
            .canonical_relation(RelationKind::Desc, &id("db"), &id("db"))
            .unwrap());
    }

    #[test]
    fn unknown_container_is_an_input_error() {
        let env = small_env();
        assert!(matches!(
            env.canonical_relation(RelationKind::Identity, &id("ghost"), &id("db")),
            Err(Error::UnknownContainer(_))
        ));
    }

    #[test]
    fn joinability_reads_symmetrically() {
        let mut env = small_env();
        env.add_joinable(&id("table"), &id("t3")).unwrap();
        assert!(env
            .canonical_relation(RelationKind::Joinable, &id("t3"), &id("table"))
            .unwrap());
        assert_eq!(env.related(RelationKind::Joinable, &id("t3")), vec![id("table")]);
    }

    #[test]
    fn double_parent_is_rejected() {
        let mut env = small_env();
        let err = env
            .add_container(id("column"), Some(id("table2")))
            .unwrap_err();
        assert!(err.to_string().contains("two parents"));
    }

    #[test]
    fn containment_cycle_is_reported() {
        let mut env = Environment::new();
        env.add_container(id("a"), Some(id("b"))).unwrap();
        env.add_container(id("b"), Some(id("a"))).unwrap();
        let problems = env.validate();
        assert!(problems.iter().any(|p| p.contains("cycle")));
    }

    #[test]
    fn condition_ids_are_structural() {
        let a = Condition::HasLabel {
            relation: RelationKind::Identity,
            label: id("L"),
        };
        let b = Condition::HasLabel {
            relation: RelationKind::Identity,
            label: id("L"),
        };
        let c = Condition::HasLabel {
            relation: RelationKind::Child,
            label: id("L"),
        };
        assert_eq!(a.canonical_id(), b.canonical_id());
        assert_ne!(a.canonical_id(), c.canonical_id());
    }
}
