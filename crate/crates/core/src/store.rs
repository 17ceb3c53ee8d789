//! Indexed store of assertions, containment facts, and evaluation records.
//!
//! The store is the single mutable state of an inference run. Ground facts
//! enter at load time; the engine adds derived facts between round
//! barriers, so readers never observe a partially applied round. Secondary
//! indexes are maintained on every insert and must always agree with a
//! linear scan of the primary map.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::Scalar;
use crate::ids::Id;
use crate::metamodel::{AssertionData, AssertionKey, ContainmentKey, Environment, EvaluationKey};

/// Why a containment fact is present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContainmentOrigin {
    /// Declared directly in the environment.
    Ground,
    /// Materialized from a descendant's assertion; the key is the first
    /// witness observed.
    Derived(AssertionKey),
}

/// How a derived assertion came to be: the rule instance and the premises
/// that satisfied it. Ground assertions have no derivation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub rule: String,
    pub framework: Id,
    pub premises: Vec<Premise>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Premise {
    Assertion(AssertionKey),
    Containment(ContainmentKey),
    Condition { id: Id, display: String },
}

#[derive(Debug, Clone, Default)]
pub struct Store {
    assertions: BTreeMap<AssertionKey, AssertionData>,
    containments: BTreeMap<ContainmentKey, ContainmentOrigin>,
    evaluations: BTreeMap<EvaluationKey, bool>,
    provenance: BTreeMap<AssertionKey, Derivation>,

    // secondary indexes
    by_container: BTreeMap<Id, BTreeSet<AssertionKey>>,
    by_label: BTreeMap<Id, BTreeSet<AssertionKey>>,
    by_scope: BTreeMap<Id, BTreeSet<AssertionKey>>,
    by_framework: BTreeMap<Id, BTreeSet<AssertionKey>>,
    // (container, scope) -> labels under any framework
    labels_in_scope: BTreeMap<(Id, Id), BTreeSet<Id>>,
    // (label, scope) -> containers carrying it under any framework
    carriers: BTreeMap<(Id, Id), BTreeSet<Id>>,
    // (label, scope, framework) -> containers
    carriers_by_framework: BTreeMap<(Id, Id, Id), BTreeSet<Id>>,

    pub warnings: Vec<String>,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    // -- insertion ---------------------------------------------------------

    /// Insert a ground assertion. Returns true iff it was new.
    pub fn insert_ground(
        &mut self,
        env: &Environment,
        key: AssertionKey,
        parameters: BTreeMap<String, Scalar>,
    ) -> Result<bool> {
        self.insert(env, key, AssertionData { ground: true, parameters }, None)
    }

    /// Insert a derived assertion with its first derivation. Returns true
    /// iff it was new; re-derivation leaves the recorded derivation alone.
    pub fn insert_derived(
        &mut self,
        env: &Environment,
        key: AssertionKey,
        derivation: Derivation,
    ) -> Result<bool> {
        self.insert(
            env,
            key,
            AssertionData {
                ground: false,
                parameters: BTreeMap::new(),
            },
            Some(derivation),
        )
    }

    fn insert(
        &mut self,
        env: &Environment,
        key: AssertionKey,
        data: AssertionData,
        derivation: Option<Derivation>,
    ) -> Result<bool> {
        if !env.visible(&key.container, &key.scope) {
            return Err(Error::ScopeVisibility {
                container: key.container.clone(),
                scope: key.scope.clone(),
            });
        }
        if let Some(existing) = self.assertions.get_mut(&key) {
            // Duplicate key: merge parameters, first value wins.
            for (name, value) in data.parameters {
                match existing.parameters.get(&name) {
                    None => {
                        existing.parameters.insert(name, value);
                    }
                    Some(old) if *old != value => {
                        self.warnings.push(format!(
                            "conflicting value for parameter '{name}' of {}: keeping {old}, ignoring {value}",
                            key.container
                        ));
                    }
                    Some(_) => {}
                }
            }
            return Ok(false);
        }

        self.by_container
            .entry(key.container.clone())
            .or_default()
            .insert(key.clone());
        self.by_label
            .entry(key.label.clone())
            .or_default()
            .insert(key.clone());
        self.by_scope
            .entry(key.scope.clone())
            .or_default()
            .insert(key.clone());
        self.by_framework
            .entry(key.framework.clone())
            .or_default()
            .insert(key.clone());
        self.labels_in_scope
            .entry((key.container.clone(), key.scope.clone()))
            .or_default()
            .insert(key.label.clone());
        self.carriers
            .entry((key.label.clone(), key.scope.clone()))
            .or_default()
            .insert(key.container.clone());
        self.carriers_by_framework
            .entry((key.label.clone(), key.scope.clone(), key.framework.clone()))
            .or_default()
            .insert(key.container.clone());
        if let Some(d) = derivation {
            self.provenance.insert(key.clone(), d);
        }
        self.assertions.insert(key, data);
        Ok(true)
    }

    /// Declare a ground containment fact.
    pub fn insert_ground_containment(&mut self, key: ContainmentKey) -> bool {
        if self.containments.contains_key(&key) {
            return false;
        }
        self.containments.insert(key, ContainmentOrigin::Ground);
        true
    }

    pub(crate) fn insert_cached_containment(&mut self, key: ContainmentKey, origin: ContainmentOrigin) {
        self.containments.insert(key, origin);
    }

    pub(crate) fn replace_derivation(&mut self, key: &AssertionKey, derivation: Derivation) {
        self.provenance.insert(key.clone(), derivation);
    }

    /// Materialize containment facts: for every assertion (d', l, g) and
    /// every strict ancestor d of d' visible in g, ensure (d, l, g) exists.
    /// Returns the number added by this call; a second call adds none.
    pub fn materialize_containment(&mut self, env: &Environment) -> usize {
        let mut added = 0;
        let mut new_facts = Vec::new();
        for key in self.assertions.keys() {
            for ancestor in env.ancestors(&key.container) {
                if !env.visible(&ancestor, &key.scope) {
                    continue;
                }
                let ckey = ContainmentKey {
                    container: ancestor,
                    label: key.label.clone(),
                    scope: key.scope.clone(),
                };
                if !self.containments.contains_key(&ckey) {
                    new_facts.push((ckey, key.clone()));
                }
            }
        }
        for (ckey, witness) in new_facts {
            if self
                .containments
                .insert(ckey, ContainmentOrigin::Derived(witness))
                .is_none()
            {
                added += 1;
            }
        }
        added
    }

    /// Record a condition evaluation. Results are monotone: once true,
    /// a record never reverts to false.
    pub fn record_evaluation(&mut self, key: EvaluationKey, result: bool) {
        match self.evaluations.get_mut(&key) {
            Some(existing) => {
                if result {
                    *existing = true;
                }
            }
            None => {
                self.evaluations.insert(key, result);
            }
        }
    }

    // -- lookup ------------------------------------------------------------

    pub fn get(&self, key: &AssertionKey) -> Option<&AssertionData> {
        self.assertions.get(key)
    }

    pub fn contains(&self, key: &AssertionKey) -> bool {
        self.assertions.contains_key(key)
    }

    pub fn assertions(&self) -> impl Iterator<Item = (&AssertionKey, &AssertionData)> {
        self.assertions.iter()
    }

    pub fn assertion_count(&self) -> usize {
        self.assertions.len()
    }

    pub fn containments(&self) -> impl Iterator<Item = (&ContainmentKey, &ContainmentOrigin)> {
        self.containments.iter()
    }

    pub fn has_containment(&self, container: &Id, label: &Id, scope: &Id) -> bool {
        self.containments.contains_key(&ContainmentKey {
            container: container.clone(),
            label: label.clone(),
            scope: scope.clone(),
        })
    }

    pub fn containment_origin(&self, key: &ContainmentKey) -> Option<&ContainmentOrigin> {
        self.containments.get(key)
    }

    pub fn evaluations(&self) -> impl Iterator<Item = (&EvaluationKey, &bool)> {
        self.evaluations.iter()
    }

    pub fn evaluation(&self, key: &EvaluationKey) -> Option<bool> {
        self.evaluations.get(key).copied()
    }

    pub fn derivation(&self, key: &AssertionKey) -> Option<&Derivation> {
        self.provenance.get(key)
    }

    pub(crate) fn provenance_entries(&self) -> impl Iterator<Item = (&AssertionKey, &Derivation)> {
        self.provenance.iter()
    }

    /// Labels carried by a container in a scope, under any framework.
    pub fn labels(&self, container: &Id, scope: &Id) -> BTreeSet<Id> {
        self.labels_in_scope
            .get(&(container.clone(), scope.clone()))
            .cloned()
            .unwrap_or_default()
    }

    pub fn has_label(&self, container: &Id, label: &Id, scope: &Id) -> bool {
        self.labels_in_scope
            .get(&(container.clone(), scope.clone()))
            .is_some_and(|s| s.contains(label))
    }

    /// Containers carrying a label in a scope, under any framework.
    pub fn carriers(&self, label: &Id, scope: &Id) -> BTreeSet<Id> {
        self.carriers
            .get(&(label.clone(), scope.clone()))
            .cloned()
            .unwrap_or_default()
    }

    /// Containers carrying a label in a scope under one framework.
    pub fn carriers_by_framework(&self, label: &Id, scope: &Id, framework: &Id) -> BTreeSet<Id> {
        self.carriers_by_framework
            .get(&(label.clone(), scope.clone(), framework.clone()))
            .cloned()
            .unwrap_or_default()
    }

    /// Assertion keys filtered through the secondary indexes.
    pub fn keys_by_container(&self, container: &Id) -> BTreeSet<AssertionKey> {
        self.by_container.get(container).cloned().unwrap_or_default()
    }

    pub fn keys_by_label(&self, label: &Id) -> BTreeSet<AssertionKey> {
        self.by_label.get(label).cloned().unwrap_or_default()
    }

    pub fn keys_by_scope(&self, scope: &Id) -> BTreeSet<AssertionKey> {
        self.by_scope.get(scope).cloned().unwrap_or_default()
    }

    pub fn keys_by_framework(&self, framework: &Id) -> BTreeSet<AssertionKey> {
        self.by_framework.get(framework).cloned().unwrap_or_default()
    }

    /// Resolve a parameter value on a (container, label, scope) triple,
    /// searching assertions of the label on the container. Frameworks are
    /// visited in key order, so the result is deterministic.
    pub fn parameter_value(
        &self,
        container: &Id,
        label: &Id,
        scope: &Id,
        parameter: &str,
    ) -> Option<Scalar> {
        self.by_container
            .get(container)?
            .iter()
            .filter(|k| &k.label == label && &k.scope == scope)
            .filter_map(|k| self.assertions.get(k))
            .find_map(|data| data.parameters.get(parameter).cloned())
    }

    /// Verify that every secondary index agrees with a linear scan.
    /// Cheap enough for tests and debug assertions; not used on hot paths.
    pub fn check_index_consistency(&self) -> Result<()> {
        let mut by_container: BTreeMap<Id, BTreeSet<AssertionKey>> = BTreeMap::new();
        let mut by_label: BTreeMap<Id, BTreeSet<AssertionKey>> = BTreeMap::new();
        let mut by_scope: BTreeMap<Id, BTreeSet<AssertionKey>> = BTreeMap::new();
        let mut by_framework: BTreeMap<Id, BTreeSet<AssertionKey>> = BTreeMap::new();
        let mut labels_in_scope: BTreeMap<(Id, Id), BTreeSet<Id>> = BTreeMap::new();
        let mut carriers: BTreeMap<(Id, Id), BTreeSet<Id>> = BTreeMap::new();
        let mut carriers_by_framework: BTreeMap<(Id, Id, Id), BTreeSet<Id>> = BTreeMap::new();
        for key in self.assertions.keys() {
            by_container
                .entry(key.container.clone())
                .or_default()
                .insert(key.clone());
            by_label
                .entry(key.label.clone())
                .or_default()
                .insert(key.clone());
            by_scope
                .entry(key.scope.clone())
                .or_default()
                .insert(key.clone());
            by_framework
                .entry(key.framework.clone())
                .or_default()
                .insert(key.clone());
            labels_in_scope
                .entry((key.container.clone(), key.scope.clone()))
                .or_default()
                .insert(key.label.clone());
            carriers
                .entry((key.label.clone(), key.scope.clone()))
                .or_default()
                .insert(key.container.clone());
            carriers_by_framework
                .entry((key.label.clone(), key.scope.clone(), key.framework.clone()))
                .or_default()
                .insert(key.container.clone());
        }
        let ok = by_container == self.by_container
            && by_label == self.by_label
            && by_scope == self.by_scope
            && by_framework == self.by_framework
            && labels_in_scope == self.labels_in_scope
            && carriers == self.carriers
            && carriers_by_framework == self.carriers_by_framework;
        if ok {
            Ok(())
        } else {
            Err(Error::Model("index out of sync with assertion map".to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> Id {
        Id::new(format!("http://t.test/{s}"))
    }

    fn env_with(containers: &[(&str, Option<&str>)], scope: &str, visible: &[&str]) -> Environment {
        let mut env = Environment::new();
        for (c, p) in containers {
            env.add_container(id(c), p.map(id)).unwrap();
        }
        env.add_scope(id(scope));
        for v in visible {
            env.add_visibility(&id(scope), &id(v)).unwrap();
        }
        env
    }

    fn key(c: &str, l: &str, g: &str, f: &str) -> AssertionKey {
        AssertionKey::new(id(c), id(l), id(g), id(f))
    }

    #[test]
    fn duplicate_insert_is_idempotent() {
        let env = env_with(&[("t", None)], "g", &["t"]);
        let mut store = Store::new();
        assert!(store
            .insert_ground(&env, key("t", "L", "g", "F"), BTreeMap::new())
            .unwrap());
        assert!(!store
            .insert_ground(&env, key("t", "L", "g", "F"), BTreeMap::new())
            .unwrap());
        assert_eq!(store.assertion_count(), 1);
    }

    #[test]
    fn insert_outside_scope_visibility_fails() {
        let env = env_with(&[("t", None), ("u", None)], "g", &["t"]);
        let mut store = Store::new();
        let err = store
            .insert_ground(&env, key("u", "L", "g", "F"), BTreeMap::new())
            .unwrap_err();
        assert!(matches!(err, Error::ScopeVisibility { .. }));
    }

    #[test]
    fn conflicting_parameter_keeps_first_value_and_warns() {
        let env = env_with(&[("t", None)], "g", &["t"]);
        let mut store = Store::new();
        let mut p1 = BTreeMap::new();
        p1.insert("k".to_string(), Scalar::Int(5));
        store.insert_ground(&env, key("t", "L", "g", "F"), p1).unwrap();
        let mut p2 = BTreeMap::new();
        p2.insert("k".to_string(), Scalar::Int(9));
        store.insert_ground(&env, key("t", "L", "g", "F"), p2).unwrap();
        assert_eq!(
            store.parameter_value(&id("t"), &id("L"), &id("g"), "k"),
            Some(Scalar::Int(5))
        );
        assert_eq!(store.warnings.len(), 1);
    }

    #[test]
    fn containment_materializes_to_all_visible_ancestors() {
        // column in table in database; all visible
        let env = env_with(
            &[("db", None), ("table", Some("db")), ("col", Some("table"))],
            "g",
            &["db", "table", "col"],
        );
        let mut store = Store::new();
        store
            .insert_ground(&env, key("col", "SSN", "g", "F"), BTreeMap::new())
            .unwrap();
        let added = store.materialize_containment(&env);
        assert_eq!(added, 2);
        assert!(store.has_containment(&id("table"), &id("SSN"), &id("g")));
        assert!(store.has_containment(&id("db"), &id("SSN"), &id("g")));
        // idempotent
        assert_eq!(store.materialize_containment(&env), 0);
    }

    #[test]
    fn root_container_with_no_descendants_yields_no_containment() {
        let env = env_with(&[("root", None)], "g", &["root"]);
        let mut store = Store::new();
        store
            .insert_ground(&env, key("root", "L", "g", "F"), BTreeMap::new())
            .unwrap();
        assert_eq!(store.materialize_containment(&env), 0);
    }

    #[test]
    fn invisible_ancestor_gains_no_containment() {
        let env = env_with(&[("db", None), ("t", Some("db"))], "g", &["t"]);
        let mut store = Store::new();
        store
            .insert_ground(&env, key("t", "L", "g", "F"), BTreeMap::new())
            .unwrap();
        assert_eq!(store.materialize_containment(&env), 0);
    }

    #[test]
    fn evaluation_results_are_monotone() {
        let mut store = Store::new();
        let ekey = EvaluationKey {
            condition: id("c"),
            container: id("d"),
            scope: id("g"),
        };
        store.record_evaluation(ekey.clone(), true);
        store.record_evaluation(ekey.clone(), false);
        assert_eq!(store.evaluations().next(), Some((&ekey, &true)));
    }

    #[test]
    fn indexes_agree_with_linear_scan() {
        let env = env_with(&[("a", None), ("b", None)], "g", &["a", "b"]);
        let mut store = Store::new();
        for (c, l, f) in [("a", "L1", "F1"), ("a", "L2", "F2"), ("b", "L1", "F2")] {
            store
                .insert_ground(&env, key(c, l, "g", f), BTreeMap::new())
                .unwrap();
        }
        store.check_index_consistency().unwrap();
        assert_eq!(store.keys_by_container(&id("a")).len(), 2);
        assert_eq!(store.keys_by_label(&id("L1")).len(), 2);
        assert_eq!(store.keys_by_framework(&id("F2")).len(), 2);
        assert_eq!(store.carriers(&id("L1"), &id("g")).len(), 2);
    }
}
