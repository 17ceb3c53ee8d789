//! Rule extraction and effective rule sets.
//!
//! Extraction turns the declarative vocabulary into rule values:
//!
//! * `declaresSubclassOf { fromLabel A ; isSubclassOf B }` — one simple rule
//! * `declaresSubclassOf { fromAnyLabel A1.. ; toLabel B }` — one simple
//!   rule per listed label
//! * `declaresImplication { fromLabel A ; toLabel B ; hasCondition p }` —
//!   a conditional rule; without `fromLabel`, a pure implication
//! * `declaresEquivalent { fromAllLabels (A1..An) ; toLabel B }` — a pure
//!   implication (A1 and .. and An => B) plus backward simple rules B -> Ai
//! * `declaresPropagation { propagatesLabel L | propagatesFacet X ;
//!   propagationDirection D }` — a propagation rule; facet subjects expand
//!   to every label of the facet at resolution time
//!
//! Resolution then computes each framework's effective rule set: declared
//! rules plus rules inherited from the ancestor closure whose head label
//! the framework does not override. A framework overrides a head label iff
//! it declares any rule with that head, across all rule variants.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{DeclarationGraph, Node, Scalar, Term};
use crate::ids::Id;
use crate::metamodel::{
    BoolOp, CompareOp, Condition, DeclaredRule, Direction, Model, ParameterSource,
    PropagationSubject, RelationKind, ResolvedRule,
};
use crate::vocab;

/// A resolved rule with its declaring framework and declaration node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ProvenancedRule {
    pub rule: ResolvedRule,
    pub framework: Id,
    pub node: Id,
}

/// The rules in force for one framework.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectiveRuleSet {
    pub framework: Id,
    pub rules: Vec<ProvenancedRule>,
}

/// Extract every rule the given framework node declares in the graph.
/// Labels and facets must already be known to the model.
pub fn extract_rules(
    graph: &DeclarationGraph,
    framework: &Id,
    model: &Model,
) -> Result<Vec<(DeclaredRule, Id)>> {
    let subject = Node::Iri(framework.clone());
    let mut rules = Vec::new();

    let node_id = |term: &Term, what: &str| -> Result<Id> {
        term.as_iri().cloned().ok_or_else(|| Error::MalformedRule {
            node: framework.clone(),
            message: format!("{what} declaration must be a node"),
        })
    };

    let declares_subclass = vocab::declares_subclass_of();
    for decl in graph.objects(&subject, &declares_subclass) {
        let node = node_id(decl, "declaresSubclassOf")?;
        rules.extend(extract_subclass(graph, &node, model)?);
    }

    let declares_implication = vocab::declares_implication();
    for decl in graph.objects(&subject, &declares_implication) {
        let node = node_id(decl, "declaresImplication")?;
        rules.push((extract_implication(graph, &node, model)?, node));
    }

    let declares_equivalent = vocab::declares_equivalent();
    for decl in graph.objects(&subject, &declares_equivalent) {
        let node = node_id(decl, "declaresEquivalent")?;
        rules.extend(extract_equivalence(graph, &node, model)?);
    }

    let declares_propagation = vocab::declares_propagation();
    for decl in graph.objects(&subject, &declares_propagation) {
        let node = node_id(decl, "declaresPropagation")?;
        rules.push((extract_propagation(graph, &node, model)?, node));
    }

    Ok(rules)
}

fn known_label(model: &Model, id: &Id, context: &str) -> Result<Id> {
    if model.labels.contains_key(id) {
        Ok(id.clone())
    } else {
        Err(Error::UnknownLabel {
            id: id.clone(),
            context: Some(context.to_string()),
        })
    }
}

fn label_object(
    graph: &DeclarationGraph,
    node: &Id,
    predicate: &Id,
    model: &Model,
    context: &str,
) -> Result<Option<Id>> {
    let subject = Node::Iri(node.clone());
    match graph.object(&subject, predicate) {
        Some(term) => {
            let id = term.as_iri().ok_or_else(|| Error::MalformedRule {
                node: node.clone(),
                message: format!("{context} must name a label"),
            })?;
            Ok(Some(known_label(model, id, context)?))
        }
        None => Ok(None),
    }
}

fn extract_subclass(
    graph: &DeclarationGraph,
    node: &Id,
    model: &Model,
) -> Result<Vec<(DeclaredRule, Id)>> {
    let subject = Node::Iri(node.clone());
    if let Some(from) = label_object(graph, node, &vocab::from_label(), model, "fromLabel")? {
        let to = label_object(graph, node, &vocab::is_subclass_of(), model, "isSubclassOf")?
            .ok_or_else(|| Error::MalformedRule {
                node: node.clone(),
                message: "declaresSubclassOf with fromLabel needs isSubclassOf".to_string(),
            })?;
        return Ok(vec![(DeclaredRule::Simple { from, to }, node.clone())]);
    }

    // fromAnyLabel: one simple rule per listed label; accepts repeated
    // objects (comma form) and a single collection.
    let mut from_labels = Vec::new();
    let from_any = vocab::from_any_label();
    for term in graph.objects(&subject, &from_any) {
        match term {
            Term::List(items) => {
                for item in items {
                    let id = item.as_iri().ok_or_else(|| Error::MalformedRule {
                        node: node.clone(),
                        message: "fromAnyLabel list may only contain labels".to_string(),
                    })?;
                    from_labels.push(known_label(model, id, "fromAnyLabel")?);
                }
            }
            other => {
                let id = other.as_iri().ok_or_else(|| Error::MalformedRule {
                    node: node.clone(),
                    message: "fromAnyLabel objects must be labels".to_string(),
                })?;
                from_labels.push(known_label(model, id, "fromAnyLabel")?);
            }
        }
    }
    if from_labels.is_empty() {
        return Err(Error::MalformedRule {
            node: node.clone(),
            message: "declaresSubclassOf needs fromLabel or fromAnyLabel".to_string(),
        });
    }
    let to = label_object(graph, node, &vocab::to_label(), model, "toLabel")?.ok_or_else(|| {
        Error::MalformedRule {
            node: node.clone(),
            message: "declaresSubclassOf with fromAnyLabel needs toLabel".to_string(),
        }
    })?;
    Ok(from_labels
        .into_iter()
        .map(|from| {
            (
                DeclaredRule::Simple {
                    from,
                    to: to.clone(),
                },
                node.clone(),
            )
        })
        .collect())
}

fn extract_implication(graph: &DeclarationGraph, node: &Id, model: &Model) -> Result<DeclaredRule> {
    let subject = Node::Iri(node.clone());
    let to = label_object(graph, node, &vocab::to_label(), model, "toLabel")?.ok_or_else(|| {
        Error::MalformedRule {
            node: node.clone(),
            message: "declaresImplication needs toLabel".to_string(),
        }
    })?;
    let has_condition = vocab::has_condition();
    let condition_term =
        graph
            .object(&subject, &has_condition)
            .ok_or_else(|| Error::MalformedRule {
                node: node.clone(),
                message: "declaresImplication needs hasCondition".to_string(),
            })?;
    let condition_node = condition_term
        .as_iri()
        .ok_or_else(|| Error::MalformedRule {
            node: node.clone(),
            message: "hasCondition must reference a condition node".to_string(),
        })?;
    let condition = extract_condition(graph, condition_node, model)?;
    match label_object(graph, node, &vocab::from_label(), model, "fromLabel")? {
        Some(from) => Ok(DeclaredRule::Conditional {
            from,
            condition,
            to,
        }),
        None => Ok(DeclaredRule::Implication { condition, to }),
    }
}

fn extract_equivalence(
    graph: &DeclarationGraph,
    node: &Id,
    model: &Model,
) -> Result<Vec<(DeclaredRule, Id)>> {
    let subject = Node::Iri(node.clone());
    let from_all = vocab::from_all_labels();
    let term = graph
        .object(&subject, &from_all)
        .ok_or_else(|| Error::MalformedRule {
            node: node.clone(),
            message: "declaresEquivalent needs fromAllLabels".to_string(),
        })?;
    let items = match term {
        Term::List(items) if !items.is_empty() => items,
        Term::List(_) => {
            return Err(Error::MalformedRule {
                node: node.clone(),
                message: "fromAllLabels collection may not be empty".to_string(),
            })
        }
        _ => {
            return Err(Error::MalformedRule {
                node: node.clone(),
                message: "fromAllLabels must be a collection".to_string(),
            })
        }
    };
    let mut labels = Vec::new();
    for item in items {
        let id = item.as_iri().ok_or_else(|| Error::MalformedRule {
            node: node.clone(),
            message: "fromAllLabels may only contain labels".to_string(),
        })?;
        labels.push(known_label(model, id, "fromAllLabels")?);
    }
    let to = label_object(graph, node, &vocab::to_label(), model, "toLabel")?.ok_or_else(|| {
        Error::MalformedRule {
            node: node.clone(),
            message: "declaresEquivalent needs toLabel".to_string(),
        }
    })?;

    // Forward: the conjunction of all listed labels implies the target.
    // Backward: the target implies each listed label.
    let forward = DeclaredRule::Implication {
        condition: Condition::Composite {
            operator: BoolOp::And,
            children: labels
                .iter()
                .map(|l| Condition::HasLabel {
                    relation: RelationKind::Identity,
                    label: l.clone(),
                })
                .collect(),
        },
        to: to.clone(),
    };
    let mut rules = vec![(forward, node.clone())];
    for label in labels {
        rules.push((
            DeclaredRule::Simple {
                from: to.clone(),
                to: label,
            },
            node.clone(),
        ));
    }
    Ok(rules)
}

fn extract_propagation(
    graph: &DeclarationGraph,
    node: &Id,
    model: &Model,
) -> Result<DeclaredRule> {
    let subject = Node::Iri(node.clone());
    let direction_term = graph
        .object(&subject, &vocab::propagation_direction())
        .and_then(|t| t.as_iri().cloned())
        .ok_or_else(|| Error::MalformedRule {
            node: node.clone(),
            message: "declaresPropagation needs propagationDirection".to_string(),
        })?;
    let direction = if direction_term == vocab::inward() {
        Direction::Inward
    } else if direction_term == vocab::outward() {
        Direction::Outward
    } else if direction_term == vocab::peer() {
        Direction::Peer
    } else if direction_term == vocab::joinable() {
        Direction::Joinable
    } else {
        return Err(Error::MalformedRule {
            node: node.clone(),
            message: format!(
                "unknown propagation direction '{direction_term}' (expected Inward, Outward, Peer, or Joinable)"
            ),
        });
    };

    let label = label_object(graph, node, &vocab::propagates_label(), model, "propagatesLabel")?;
    let facet = graph
        .object(&subject, &vocab::propagates_facet())
        .and_then(|t| t.as_iri().cloned());
    let subject_spec = match (label, facet) {
        (Some(l), None) => PropagationSubject::Label(l),
        (None, Some(x)) => {
            if !model.facets.contains_key(&x) {
                return Err(Error::UnknownFacet(x));
            }
            PropagationSubject::Facet(x)
        }
        (None, None) => {
            return Err(Error::MalformedRule {
                node: node.clone(),
                message: "declaresPropagation needs propagatesLabel or propagatesFacet"
                    .to_string(),
            })
        }
        (Some(_), Some(_)) => {
            return Err(Error::MalformedRule {
                node: node.clone(),
                message: "declaresPropagation may not name both a label and a facet".to_string(),
            })
        }
    };
    Ok(DeclaredRule::Propagation {
        direction,
        subject: subject_spec,
    })
}

/// Parse a condition node. Composite conditions must have at least one
/// child; the grammar has no negation.
pub fn extract_condition(graph: &DeclarationGraph, node: &Id, model: &Model) -> Result<Condition> {
    let subject = Node::Iri(node.clone());
    let rdf_type = vocab::rdf_type();
    let ty = graph
        .object(&subject, &rdf_type)
        .and_then(|t| t.as_iri().cloned())
        .ok_or_else(|| Error::MalformedCondition {
            node: node.clone(),
            message: "condition node has no type".to_string(),
        })?;

    let require_label = |predicate: &Id, what: &str| -> Result<Id> {
        let id = graph
            .object(&subject, predicate)
            .and_then(|t| t.as_iri().cloned())
            .ok_or_else(|| Error::MalformedCondition {
                node: node.clone(),
                message: format!("missing {what}"),
            })?;
        known_label(model, &id, what)
    };

    if ty == vocab::has_label_condition() {
        Ok(Condition::HasLabel {
            relation: RelationKind::Identity,
            label: require_label(&vocab::requires_label(), "requiresLabel")?,
        })
    } else if ty == vocab::relation_label_condition() {
        let relation_term = graph
            .object(&subject, &vocab::on_relation())
            .and_then(|t| t.as_iri().cloned())
            .ok_or_else(|| Error::MalformedCondition {
                node: node.clone(),
                message: "missing onRelation".to_string(),
            })?;
        let relation = if relation_term == vocab::rel_self() {
            RelationKind::Identity
        } else if relation_term == vocab::rel_child() {
            RelationKind::Child
        } else if relation_term == vocab::rel_parent() {
            RelationKind::Parent
        } else if relation_term == vocab::rel_descendant() {
            RelationKind::Desc
        } else if relation_term == vocab::rel_sibling() {
            RelationKind::Sib
        } else {
            return Err(Error::MalformedCondition {
                node: node.clone(),
                message: format!(
                    "unknown relation '{relation_term}' (expected Self, Child, Parent, Descendant, or Sibling)"
                ),
            });
        };
        Ok(Condition::HasLabel {
            relation,
            label: require_label(&vocab::requires_label(), "requiresLabel")?,
        })
    } else if ty == vocab::contains_label_condition() {
        Ok(Condition::ContainsLabel {
            label: require_label(&vocab::requires_contains(), "requiresContains")?,
        })
    } else if ty == vocab::comparison_condition() {
        let operator_term = graph
            .object(&subject, &vocab::comparison_operator())
            .and_then(|t| t.as_iri().cloned())
            .ok_or_else(|| Error::MalformedCondition {
                node: node.clone(),
                message: "missing comparisonOperator".to_string(),
            })?;
        let operator = if operator_term == vocab::less_than() {
            CompareOp::LessThan
        } else if operator_term == vocab::less_or_equal() {
            CompareOp::LessOrEqual
        } else if operator_term == vocab::greater_than() {
            CompareOp::GreaterThan
        } else if operator_term == vocab::greater_or_equal() {
            CompareOp::GreaterOrEqual
        } else if operator_term == vocab::equal() {
            CompareOp::Equal
        } else {
            return Err(Error::MalformedCondition {
                node: node.clone(),
                message: format!("unknown comparison operator '{operator_term}'"),
            });
        };
        let source = |predicate: &Id, what: &str| -> Result<ParameterSource> {
            let source_node = graph
                .object(&subject, predicate)
                .and_then(|t| t.as_iri().cloned())
                .ok_or_else(|| Error::MalformedCondition {
                    node: node.clone(),
                    message: format!("missing {what}"),
                })?;
            extract_parameter_source(graph, &source_node, model)
        };
        Ok(Condition::Comparison {
            left: source(&vocab::left_source(), "leftSource")?,
            right: source(&vocab::right_source(), "rightSource")?,
            operator,
        })
    } else if ty == vocab::composite_condition() {
        let operator_term = graph
            .object(&subject, &vocab::logical_operator())
            .and_then(|t| t.as_iri().cloned())
            .ok_or_else(|| Error::MalformedCondition {
                node: node.clone(),
                message: "missing logicalOperator".to_string(),
            })?;
        let operator = if operator_term == vocab::op_and() {
            BoolOp::And
        } else if operator_term == vocab::op_or() {
            BoolOp::Or
        } else {
            return Err(Error::MalformedCondition {
                node: node.clone(),
                message: format!("unknown logical operator '{operator_term}'"),
            });
        };
        let has_condition = vocab::has_condition();
        let mut children = Vec::new();
        for term in graph.objects(&subject, &has_condition) {
            let child = term.as_iri().ok_or_else(|| Error::MalformedCondition {
                node: node.clone(),
                message: "composite children must be condition nodes".to_string(),
            })?;
            children.push(extract_condition(graph, child, model)?);
        }
        if children.is_empty() {
            return Err(Error::MalformedCondition {
                node: node.clone(),
                message: "composite condition has no children".to_string(),
            });
        }
        Ok(Condition::Composite { operator, children })
    } else {
        Err(Error::MalformedCondition {
            node: node.clone(),
            message: format!("unknown condition type '{ty}'"),
        })
    }
}

fn extract_parameter_source(
    graph: &DeclarationGraph,
    node: &Id,
    model: &Model,
) -> Result<ParameterSource> {
    let subject = Node::Iri(node.clone());
    if let Some(ty) = graph
        .object(&subject, &vocab::source_type())
        .and_then(|t| t.as_iri())
    {
        if *ty != vocab::label_parameter() {
            return Err(Error::MalformedCondition {
                node: node.clone(),
                message: format!("unknown sourceType '{ty}'"),
            });
        }
    }
    let source_label = match graph
        .object(&subject, &vocab::source_label())
        .and_then(|t| t.as_iri().cloned())
    {
        Some(id) => Some(known_label(model, &id, "sourceLabel")?),
        None => None,
    };
    let source_parameter = graph
        .object(&subject, &vocab::source_parameter())
        .and_then(|t| t.as_scalar())
        .and_then(|s| match s {
            Scalar::Str(s) => Some(s.clone()),
            _ => None,
        });
    let default = graph
        .object(&subject, &vocab::default_value())
        .and_then(|t| t.as_scalar().cloned());

    let has_reference = source_label.is_some() && source_parameter.is_some();
    if !has_reference && default.is_none() {
        return Err(Error::MalformedCondition {
            node: node.clone(),
            message: "parameter source needs sourceLabel with sourceParameter, or a defaultValue"
                .to_string(),
        });
    }
    if source_label.is_some() != source_parameter.is_some() {
        return Err(Error::MalformedCondition {
            node: node.clone(),
            message: "sourceLabel and sourceParameter must be declared together".to_string(),
        });
    }
    Ok(ParameterSource {
        source_label,
        source_parameter,
        default,
    })
}

/// Expand a declared rule against the current label table. Facet-level
/// propagation yields one rule per label of the facet.
pub fn expand_rule(rule: &DeclaredRule, model: &Model) -> Vec<ResolvedRule> {
    match rule {
        DeclaredRule::Simple { from, to } => vec![ResolvedRule::Simple {
            from: from.clone(),
            to: to.clone(),
        }],
        DeclaredRule::Conditional {
            from,
            condition,
            to,
        } => vec![ResolvedRule::Conditional {
            from: from.clone(),
            condition: condition.clone(),
            to: to.clone(),
        }],
        DeclaredRule::Implication { condition, to } => vec![ResolvedRule::Implication {
            condition: condition.clone(),
            to: to.clone(),
        }],
        DeclaredRule::Propagation { direction, subject } => match subject {
            PropagationSubject::Label(l) => vec![ResolvedRule::Propagation {
                direction: *direction,
                label: l.clone(),
            }],
            PropagationSubject::Facet(x) => model
                .labels_in_facet(x)
                .into_iter()
                .map(|label| ResolvedRule::Propagation {
                    direction: *direction,
                    label,
                })
                .collect(),
        },
    }
}

/// Compute the effective rule set of every framework.
pub fn resolve_effective_rules(model: &Model) -> Result<BTreeMap<Id, EffectiveRuleSet>> {
    model.validate_inheritance()?;

    // Expanded declared rules and head sets, per framework.
    let mut expanded: BTreeMap<&Id, Vec<ProvenancedRule>> = BTreeMap::new();
    let mut own_heads: BTreeMap<&Id, BTreeSet<Id>> = BTreeMap::new();
    for (fid, framework) in &model.frameworks {
        let mut rules = Vec::new();
        let mut heads = BTreeSet::new();
        for (declared, node) in &framework.declared_rules {
            for resolved in expand_rule(declared, model) {
                heads.insert(resolved.head().clone());
                rules.push(ProvenancedRule {
                    rule: resolved,
                    framework: fid.clone(),
                    node: node.clone(),
                });
            }
        }
        expanded.insert(fid, rules);
        own_heads.insert(fid, heads);
    }

    let mut out = BTreeMap::new();
    for fid in model.frameworks.keys() {
        let mut rules: Vec<ProvenancedRule> = expanded[fid].clone();
        let heads = &own_heads[fid];
        for ancestor in model.ancestors(fid) {
            for rule in expanded.get(&ancestor).into_iter().flatten() {
                if !heads.contains(rule.rule.head()) {
                    rules.push(rule.clone());
                }
            }
        }
        // Diamond inheritance can deliver the same declaration twice.
        rules.sort();
        rules.dedup_by(|a, b| a.rule == b.rule && a.node == b.node);
        out.insert(
            fid.clone(),
            EffectiveRuleSet {
                framework: fid.clone(),
                rules,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::FrameworkKind;
    use crate::metamodel::{Facet, Framework, Label};
    use crate::skolem::skolemize;
    use crate::turtle::parse_document;

    const NS: &str = "http://t.test/";

    fn id(s: &str) -> Id {
        Id::new(format!("{NS}{s}"))
    }

    fn test_model(labels: &[&str]) -> Model {
        let mut model = Model::default();
        let fid = id("F");
        model.facets.insert(
            id("X"),
            Facet {
                id: id("X"),
                name: "X".to_string(),
                framework: fid.clone(),
            },
        );
        for l in labels {
            model.labels.insert(
                id(l),
                Label {
                    id: id(l),
                    facet: id("X"),
                    framework: fid.clone(),
                    parameter_schema: vec![],
                },
            );
        }
        model.frameworks.insert(
            fid.clone(),
            Framework {
                id: fid.clone(),
                bundle: "f".to_string(),
                title: None,
                kind: FrameworkKind::Core,
                parents: vec![],
                declared_rules: vec![],
                declared_facets: vec![id("X")],
                declared_labels: labels.iter().map(|l| id(l)).collect(),
            },
        );
        model.load_order.push(fid);
        model
    }

    fn extract(ttl: &str, labels: &[&str]) -> Vec<(DeclaredRule, Id)> {
        let doc = format!("@prefix : <{NS}> .\n@prefix fw: <{}> .\n{ttl}", vocab::FW_NS);
        let graph = skolemize(&parse_document(&doc, "test.ttl").unwrap()).unwrap();
        let model = test_model(labels);
        extract_rules(&graph, &id("F"), &model).unwrap()
    }

    #[test]
    fn inward_label_propagation_extracts() {
        let rules = extract(
            ":F fw:declaresPropagation [ fw:propagatesLabel :PersonalData ; fw:propagationDirection fw:Inward ] .",
            &["PersonalData"],
        );
        assert_eq!(rules.len(), 1);
        assert_eq!(
            rules[0].0,
            DeclaredRule::Propagation {
                direction: Direction::Inward,
                subject: PropagationSubject::Label(id("PersonalData")),
            }
        );
    }

    #[test]
    fn equivalence_expands_to_forward_and_backward_rules() {
        let rules = extract(
            ":F fw:declaresEquivalent [ fw:fromAllLabels ( :Unique :Open ) ; fw:toLabel :Direct ] .",
            &["Unique", "Open", "Direct"],
        );
        assert_eq!(rules.len(), 3);
        assert_eq!(
            rules[0].0,
            DeclaredRule::Implication {
                condition: Condition::Composite {
                    operator: BoolOp::And,
                    children: vec![
                        Condition::HasLabel {
                            relation: RelationKind::Identity,
                            label: id("Unique")
                        },
                        Condition::HasLabel {
                            relation: RelationKind::Identity,
                            label: id("Open")
                        },
                    ],
                },
                to: id("Direct"),
            }
        );
        assert_eq!(
            rules[1].0,
            DeclaredRule::Simple {
                from: id("Direct"),
                to: id("Unique")
            }
        );
        assert_eq!(
            rules[2].0,
            DeclaredRule::Simple {
                from: id("Direct"),
                to: id("Open")
            }
        );
    }

    #[test]
    fn from_any_label_expands_per_label() {
        let rules = extract(
            ":F fw:declaresSubclassOf [ fw:fromAnyLabel :A, :B, :C ; fw:toLabel :T ] .",
            &["A", "B", "C", "T"],
        );
        assert_eq!(rules.len(), 3);
        for (rule, _) in &rules {
            assert!(matches!(rule, DeclaredRule::Simple { to, .. } if *to == id("T")));
        }
    }

    #[test]
    fn framework_without_declarations_has_no_rules() {
        let rules = extract(":F a fw:Framework .", &[]);
        assert!(rules.is_empty());
    }

    #[test]
    fn unknown_label_reference_is_rejected() {
        let doc = format!(
            "@prefix : <{NS}> .\n@prefix fw: <{}> .\n:F fw:declaresSubclassOf [ fw:fromLabel :Ghost ; fw:isSubclassOf :T ] .",
            vocab::FW_NS
        );
        let graph = skolemize(&parse_document(&doc, "test.ttl").unwrap()).unwrap();
        let model = test_model(&["T"]);
        assert!(matches!(
            extract_rules(&graph, &id("F"), &model),
            Err(Error::UnknownLabel { .. })
        ));
    }

    #[test]
    fn empty_composite_is_rejected_at_extraction() {
        let doc = format!(
            "@prefix : <{NS}> .\n@prefix fw: <{}> .\n:F fw:declaresImplication [ fw:toLabel :T ; fw:hasCondition [ a fw:CompositeCondition ; fw:logicalOperator fw:AND ] ] .",
            vocab::FW_NS
        );
        let graph = skolemize(&parse_document(&doc, "test.ttl").unwrap()).unwrap();
        let model = test_model(&["T"]);
        let err = extract_rules(&graph, &id("F"), &model).unwrap_err();
        assert!(err.to_string().contains("no children"));
    }

    #[test]
    fn direction_outside_the_four_values_is_rejected() {
        let doc = format!(
            "@prefix : <{NS}> .\n@prefix fw: <{}> .\n:F fw:declaresPropagation [ fw:propagatesLabel :T ; fw:propagationDirection fw:Sideways ] .",
            vocab::FW_NS
        );
        let graph = skolemize(&parse_document(&doc, "test.ttl").unwrap()).unwrap();
        let model = test_model(&["T"]);
        let err = extract_rules(&graph, &id("F"), &model).unwrap_err();
        assert!(err.to_string().contains("unknown propagation direction"));
    }

    #[test]
    fn child_override_suppresses_inherited_rules_by_head() {
        // Parent declares a simple rule with head L; the child declares a
        // pure implication with the same head. The child's effective set
        // must contain only its own L-headed rule.
        let mut model = test_model(&["A", "L"]);
        let parent = id("F");
        let child = id("G");
        let rule_node = id("parentRule");
        model
            .frameworks
            .get_mut(&parent)
            .unwrap()
            .declared_rules
            .push((
                DeclaredRule::Simple {
                    from: id("A"),
                    to: id("L"),
                },
                rule_node,
            ));
        model.frameworks.insert(
            child.clone(),
            Framework {
                id: child.clone(),
                bundle: "g".to_string(),
                title: None,
                kind: FrameworkKind::Custom,
                parents: vec![parent.clone()],
                declared_rules: vec![(
                    DeclaredRule::Implication {
                        condition: Condition::HasLabel {
                            relation: RelationKind::Identity,
                            label: id("A"),
                        },
                        to: id("L"),
                    },
                    id("childRule"),
                )],
                declared_labels: vec![],
                declared_facets: vec![],
            },
        );
        let effective = resolve_effective_rules(&model).unwrap();
        let child_rules = &effective[&child].rules;
        assert_eq!(child_rules.len(), 1);
        assert!(matches!(
            &child_rules[0].rule,
            ResolvedRule::Implication { to, .. } if *to == id("L")
        ));
        assert_eq!(child_rules[0].framework, child);
        // The parent keeps its own rule.
        assert_eq!(effective[&parent].rules.len(), 1);
    }

    #[test]
    fn framework_without_parents_keeps_declared_rules_only() {
        let mut model = test_model(&["A", "B"]);
        model
            .frameworks
            .get_mut(&id("F"))
            .unwrap()
            .declared_rules
            .push((
                DeclaredRule::Simple {
                    from: id("A"),
                    to: id("B"),
                },
                id("n"),
            ));
        let effective = resolve_effective_rules(&model).unwrap();
        assert_eq!(effective[&id("F")].rules.len(), 1);
    }

    #[test]
    fn facet_propagation_expands_to_every_label_of_the_facet() {
        let mut model = test_model(&["A", "B", "C"]);
        model
            .frameworks
            .get_mut(&id("F"))
            .unwrap()
            .declared_rules
            .push((
                DeclaredRule::Propagation {
                    direction: Direction::Inward,
                    subject: PropagationSubject::Facet(id("X")),
                },
                id("n"),
            ));
        let effective = resolve_effective_rules(&model).unwrap();
        assert_eq!(effective[&id("F")].rules.len(), 3);

        // Adding one label to the facet adds exactly one rule on re-resolution.
        model.labels.insert(
            id("D"),
            Label {
                id: id("D"),
                facet: id("X"),
                framework: id("F"),
                parameter_schema: vec![],
            },
        );
        let effective = resolve_effective_rules(&model).unwrap();
        assert_eq!(effective[&id("F")].rules.len(), 4);
    }

    #[test]
    fn declared_and_retained_inherited_heads_are_disjoint() {
        let mut model = test_model(&["A", "B", "L"]);
        let parent = id("F");
        let child = id("G");
        model
            .frameworks
            .get_mut(&parent)
            .unwrap()
            .declared_rules
            .extend([
                (
                    DeclaredRule::Simple {
                        from: id("A"),
                        to: id("L"),
                    },
                    id("n1"),
                ),
                (
                    DeclaredRule::Simple {
                        from: id("A"),
                        to: id("B"),
                    },
                    id("n2"),
                ),
            ]);
        model.frameworks.insert(
            child.clone(),
            Framework {
                id: child.clone(),
                bundle: "g".to_string(),
                title: None,
                kind: FrameworkKind::Custom,
                parents: vec![parent],
                declared_rules: vec![(
                    DeclaredRule::Simple {
                        from: id("B"),
                        to: id("L"),
                    },
                    id("n3"),
                )],
                declared_labels: vec![],
                declared_facets: vec![],
            },
        );
        let effective = resolve_effective_rules(&model).unwrap();
        let rules = &effective[&child].rules;
        let declared_heads: BTreeSet<&Id> = rules
            .iter()
            .filter(|r| r.framework == child)
            .map(|r| r.rule.head())
            .collect();
        let inherited_heads: BTreeSet<&Id> = rules
            .iter()
            .filter(|r| r.framework != child)
            .map(|r| r.rule.head())
            .collect();
        assert!(declared_heads.is_disjoint(&inherited_heads));
        // A->B flows through, A->L is overridden.
        assert_eq!(rules.len(), 2);
    }

    #[test]
    fn diamond_inheritance_deduplicates_shared_declarations() {
        // base <- left, base <- right, child <- left+right. The base rule
        // reaches the child twice through the same declaration node.
        let mut model = test_model(&["A", "B"]);
        let base = id("F");
        model
            .frameworks
            .get_mut(&base)
            .unwrap()
            .declared_rules
            .push((
                DeclaredRule::Simple {
                    from: id("A"),
                    to: id("B"),
                },
                id("shared"),
            ));
        for (name, parents) in [
            ("Left", vec![base.clone()]),
            ("Right", vec![base.clone()]),
            ("Child", vec![id("Left"), id("Right")]),
        ] {
            model.frameworks.insert(
                id(name),
                Framework {
                    id: id(name),
                    bundle: name.to_lowercase(),
                    title: None,
                    kind: FrameworkKind::Custom,
                    parents,
                    declared_rules: vec![],
                    declared_labels: vec![],
                    declared_facets: vec![],
                },
            );
        }
        let effective = resolve_effective_rules(&model).unwrap();
        assert_eq!(effective[&id("Child")].rules.len(), 1);
    }

    #[test]
    fn inheritance_cycle_is_rejected() {
        let mut model = test_model(&[]);
        model.frameworks.get_mut(&id("F")).unwrap().parents = vec![id("G")];
        model.frameworks.insert(
            id("G"),
            Framework {
                id: id("G"),
                bundle: "g".to_string(),
                title: None,
                kind: FrameworkKind::Custom,
                parents: vec![id("F")],
                declared_rules: vec![],
                declared_labels: vec![],
                declared_facets: vec![],
            },
        );
        assert!(resolve_effective_rules(&model).is_err());
    }
}
