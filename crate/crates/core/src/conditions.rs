//! Condition marking, evaluation, and parameter resolution.
//!
//! Marking scans the effective rules and collects (condition, container,
//! scope) tuples whose outcome could still derive something: a conditional
//! rule with its trigger label present but its head absent, or a pure
//! implication whose head is absent. Marks propagate through composite
//! conditions. Marking is purely an optimization; evaluating an unmarked
//! condition on demand gives the same result.
//!
//! Evaluation is deterministic and side-effect-free apart from recording
//! `ConditionEvaluation` facts in the store. Composites evaluate every
//! child and compare satisfied count to total count: AND requires all,
//! OR requires at least one.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::Scalar;
use crate::ids::Id;
use crate::metamodel::{
    AssertionKey, BoolOp, CompareOp, Condition, Environment, EvaluationKey, ParameterSource,
    ResolvedRule,
};
use crate::resolver::EffectiveRuleSet;
use crate::store::Store;
use crate::vocab;

/// Conditions pending evaluation, keyed by structural condition id.
#[derive(Debug, Clone, Default)]
pub struct MarkSet {
    pending: BTreeMap<(Id, Id, Id), Condition>,
}

impl MarkSet {
    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn contains(&self, condition: &Condition, container: &Id, scope: &Id) -> bool {
        self.pending.contains_key(&(
            condition.canonical_id(),
            container.clone(),
            scope.clone(),
        ))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(Id, Id, Id), &Condition)> {
        self.pending.iter()
    }

    fn mark(&mut self, condition: &Condition, container: &Id, scope: &Id) {
        self.pending.insert(
            (condition.canonical_id(), container.clone(), scope.clone()),
            condition.clone(),
        );
        if let Condition::Composite { children, .. } = condition {
            for child in children {
                self.mark(child, container, scope);
            }
        }
    }
}

/// Collect the conditions worth evaluating this round.
pub fn mark(
    store: &Store,
    env: &Environment,
    rules: &BTreeMap<Id, EffectiveRuleSet>,
) -> MarkSet {
    let mut set = MarkSet::default();
    for (framework, ruleset) in rules {
        for rule in &ruleset.rules {
            match &rule.rule {
                ResolvedRule::Conditional {
                    from,
                    condition,
                    to,
                } => {
                    for scope in env.scopes.keys() {
                        for container in store.carriers(from, scope) {
                            let head = AssertionKey::new(
                                container.clone(),
                                to.clone(),
                                scope.clone(),
                                framework.clone(),
                            );
                            if !store.contains(&head) {
                                set.mark(condition, &container, scope);
                            }
                        }
                    }
                }
                ResolvedRule::Implication { condition, to } => {
                    for (scope_id, scope) in &env.scopes {
                        for container in &scope.visible {
                            let head = AssertionKey::new(
                                container.clone(),
                                to.clone(),
                                scope_id.clone(),
                                framework.clone(),
                            );
                            if !store.contains(&head) {
                                set.mark(condition, container, scope_id);
                            }
                        }
                    }
                }
                _ => {}
            }
        }
    }
    set
}

/// Evaluate a condition on (container, scope), recording the outcome for
/// it and every subcondition.
pub fn evaluate(
    condition: &Condition,
    container: &Id,
    scope: &Id,
    store: &mut Store,
    env: &Environment,
) -> Result<bool> {
    let result = match condition {
        Condition::HasLabel { relation, label } => env
            .related(*relation, container)
            .iter()
            .any(|witness| store.has_label(witness, label, scope)),
        Condition::ContainsLabel { label } => store.has_containment(container, label, scope),
        Condition::Comparison {
            left,
            right,
            operator,
        } => {
            let lv = resolve_parameter(left, container, scope, store)?;
            let rv = resolve_parameter(right, container, scope, store)?;
            compare(*operator, &lv, &rv)?
        }
        Condition::Composite { operator, children } => {
            let mut satisfied = 0usize;
            for child in children {
                if evaluate(child, container, scope, store, env)? {
                    satisfied += 1;
                }
            }
            match operator {
                BoolOp::And => satisfied == children.len(),
                BoolOp::Or => satisfied >= 1,
            }
        }
    };
    store.record_evaluation(
        EvaluationKey {
            condition: condition.canonical_id(),
            container: container.clone(),
            scope: scope.clone(),
        },
        result,
    );
    Ok(result)
}

/// Resolve a parameter source for a (container, scope) pair.
///
/// Lookup order: an assertion of the source label on the container itself;
/// then on the scope's configuration container (`<scope>#config`); then the
/// declared default. Sources with no label reference resolve straight to
/// their default.
pub fn resolve_parameter(
    source: &ParameterSource,
    container: &Id,
    scope: &Id,
    store: &Store,
) -> Result<Scalar> {
    if let (Some(label), Some(parameter)) = (&source.source_label, &source.source_parameter) {
        if let Some(value) = store.parameter_value(container, label, scope, parameter) {
            return Ok(value);
        }
        let config = vocab::scope_config_container(scope);
        if let Some(value) = store.parameter_value(&config, label, scope, parameter) {
            return Ok(value);
        }
        if let Some(default) = &source.default {
            return Ok(default.clone());
        }
        return Err(Error::ParameterUnresolved {
            label: label.clone(),
            parameter: parameter.clone(),
        });
    }
    source
        .default
        .clone()
        .ok_or_else(|| Error::ParameterUnresolved {
            label: Id::new("<none>"),
            parameter: "<none>".to_string(),
        })
}

/// Apply a comparison operator. Mixed integer/decimal operands coerce to
/// decimal; strings compare lexicographically; booleans support equality
/// only. Anything else is an error.
pub fn compare(op: CompareOp, left: &Scalar, right: &Scalar) -> Result<bool> {
    use std::cmp::Ordering;
    let ordering = match (left, right) {
        (Scalar::Str(a), Scalar::Str(b)) => a.cmp(b),
        (Scalar::Bool(a), Scalar::Bool(b)) => {
            if op == CompareOp::Equal {
                return Ok(a == b);
            }
            return Err(incomparable(op, left, right));
        }
        _ => match (left.as_f64(), right.as_f64()) {
            (Some(a), Some(b)) => a.partial_cmp(&b).ok_or_else(|| incomparable(op, left, right))?,
            _ => return Err(incomparable(op, left, right)),
        },
    };
    Ok(match op {
        CompareOp::LessThan => ordering == Ordering::Less,
        CompareOp::LessOrEqual => ordering != Ordering::Greater,
        CompareOp::GreaterThan => ordering == Ordering::Greater,
        CompareOp::GreaterOrEqual => ordering != Ordering::Less,
        CompareOp::Equal => ordering == Ordering::Equal,
    })
}

fn incomparable(op: CompareOp, left: &Scalar, right: &Scalar) -> Error {
    Error::IncomparableValues {
        left: left.to_string(),
        right: right.to_string(),
        operator: op.name().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Decimal;
    use crate::metamodel::RelationKind;

    fn id(s: &str) -> Id {
        Id::new(format!("http://t.test/{s}"))
    }

    fn setup() -> (Environment, Store) {
        let mut env = Environment::new();
        env.add_container(id("table"), None).unwrap();
        env.add_container(id("ssn"), Some(id("table"))).unwrap();
        env.add_scope(id("g"));
        for c in ["table", "ssn"] {
            env.add_visibility(&id("g"), &id(c)).unwrap();
        }
        (env, Store::new())
    }

    fn ground(store: &mut Store, env: &Environment, c: &str, l: &str) {
        store
            .insert_ground(
                env,
                AssertionKey::new(id(c), id(l), id("g"), id("F")),
                BTreeMap::new(),
            )
            .unwrap();
    }

    #[test]
    fn contains_label_sees_materialized_column_labels() {
        let (env, mut store) = setup();
        ground(&mut store, &env, "ssn", "IdentifierData");
        store.materialize_containment(&env);
        let cond = Condition::ContainsLabel {
            label: id("IdentifierData"),
        };
        assert!(evaluate(&cond, &id("table"), &id("g"), &mut store, &env).unwrap());
        assert!(!evaluate(&cond, &id("ssn"), &id("g"), &mut store, &env).unwrap());
    }

    #[test]
    fn comparison_against_default_threshold() {
        let (env, mut store) = setup();
        let mut params = BTreeMap::new();
        params.insert("minimumCohortSize".to_string(), Scalar::Int(5));
        store
            .insert_ground(
                &env,
                AssertionKey::new(id("table"), id("KAnon"), id("g"), id("F")),
                params,
            )
            .unwrap();
        let cond = Condition::Comparison {
            left: ParameterSource {
                source_label: Some(id("KAnon")),
                source_parameter: Some("minimumCohortSize".to_string()),
                default: None,
            },
            right: ParameterSource::literal(Scalar::Int(12)),
            operator: CompareOp::LessThan,
        };
        assert!(evaluate(&cond, &id("table"), &id("g"), &mut store, &env).unwrap());
    }

    #[test]
    fn composite_and_counts_children_and_records_them() {
        let (env, mut store) = setup();
        ground(&mut store, &env, "table", "A");
        ground(&mut store, &env, "table", "B");
        let has = |l: &str| Condition::HasLabel {
            relation: RelationKind::Identity,
            label: id(l),
        };
        let cond = Condition::Composite {
            operator: BoolOp::And,
            children: vec![has("A"), has("B")],
        };
        assert!(evaluate(&cond, &id("table"), &id("g"), &mut store, &env).unwrap());
        // parent plus both children recorded
        assert_eq!(store.evaluations().count(), 3);

        let with_missing = Condition::Composite {
            operator: BoolOp::And,
            children: vec![has("A"), has("Missing")],
        };
        assert!(!evaluate(&with_missing, &id("table"), &id("g"), &mut store, &env).unwrap());
        let or = Condition::Composite {
            operator: BoolOp::Or,
            children: vec![has("A"), has("Missing")],
        };
        assert!(evaluate(&or, &id("table"), &id("g"), &mut store, &env).unwrap());
    }

    #[test]
    fn has_label_relations_look_where_they_should() {
        let (env, mut store) = setup();
        ground(&mut store, &env, "ssn", "SSN");
        ground(&mut store, &env, "table", "Tab");
        let child = Condition::HasLabel {
            relation: RelationKind::Child,
            label: id("SSN"),
        };
        let parent = Condition::HasLabel {
            relation: RelationKind::Parent,
            label: id("Tab"),
        };
        assert!(evaluate(&child, &id("table"), &id("g"), &mut store, &env).unwrap());
        assert!(evaluate(&parent, &id("ssn"), &id("g"), &mut store, &env).unwrap());
        assert!(!evaluate(&child, &id("ssn"), &id("g"), &mut store, &env).unwrap());
    }

    #[test]
    fn parameter_falls_back_to_scope_config_then_default() {
        let (mut env, mut store) = setup();
        let source = ParameterSource {
            source_label: Some(id("Threshold")),
            source_parameter: Some("k".to_string()),
            default: Some(Scalar::Int(3)),
        };
        // nothing anywhere: default
        assert_eq!(
            resolve_parameter(&source, &id("table"), &id("g"), &store).unwrap(),
            Scalar::Int(3)
        );
        // scope config container takes precedence over the default
        let config = vocab::scope_config_container(&id("g"));
        env.add_container(config.clone(), None).unwrap();
        env.add_visibility(&id("g"), &config).unwrap();
        let mut params = BTreeMap::new();
        params.insert("k".to_string(), Scalar::Int(7));
        store
            .insert_ground(
                &env,
                AssertionKey::new(config, id("Threshold"), id("g"), id("F")),
                params,
            )
            .unwrap();
        assert_eq!(
            resolve_parameter(&source, &id("table"), &id("g"), &store).unwrap(),
            Scalar::Int(7)
        );
        // a value on the container itself beats both
        let mut params = BTreeMap::new();
        params.insert("k".to_string(), Scalar::Int(9));
        store
            .insert_ground(
                &env,
                AssertionKey::new(id("table"), id("Threshold"), id("g"), id("F")),
                params,
            )
            .unwrap();
        assert_eq!(
            resolve_parameter(&source, &id("table"), &id("g"), &store).unwrap(),
            Scalar::Int(9)
        );
    }

    #[test]
    fn unresolvable_parameter_without_default_errors() {
        let (_, store) = setup();
        let source = ParameterSource {
            source_label: Some(id("Threshold")),
            source_parameter: Some("k".to_string()),
            default: None,
        };
        let err = resolve_parameter(&source, &id("table"), &id("g"), &store).unwrap_err();
        assert!(err.to_string().contains("Threshold"));
        assert!(err.to_string().contains('k'));
    }

    #[test]
    fn numeric_kinds_coerce_for_comparison() {
        assert!(compare(CompareOp::LessThan, &Scalar::Int(5), &Scalar::Dec(Decimal(5.5))).unwrap());
        assert!(compare(CompareOp::Equal, &Scalar::Int(3), &Scalar::Dec(Decimal(3.0))).unwrap());
        assert!(compare(
            CompareOp::GreaterOrEqual,
            &Scalar::Dec(Decimal(0.09)),
            &Scalar::Dec(Decimal(0.09))
        )
        .unwrap());
        assert!(compare(CompareOp::Equal, &Scalar::Bool(true), &Scalar::Bool(true)).unwrap());
        assert!(compare(CompareOp::LessThan, &Scalar::Bool(true), &Scalar::Bool(true)).is_err());
        assert!(compare(
            CompareOp::LessThan,
            &Scalar::Str("a".into()),
            &Scalar::Int(1)
        )
        .is_err());
    }
}
