//! Fixed-point inference.
//!
//! Each round applies every effective rule instance against the state the
//! round started from, staging new assertions and committing them at a
//! round barrier. Rules are positive, the universe D x L x G x F is
//! finite, so iteration reaches the least fixed point in at most |U|
//! productive rounds; the run aborts with an internal error if that bound
//! is ever exceeded.
//!
//! A round runs six phases: index upkeep (incremental on insert), rule
//! expansion (cached after resolution), containment materialization,
//! condition marking, condition evaluation, and derivation.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::conditions;
use crate::error::{Error, Result};
use crate::ids::{Id, PrefixMap};
use crate::metamodel::{
    AssertionKey, Condition, ContainmentKey, Environment, EvaluationKey, Model, ResolvedRule,
};
use crate::resolver::EffectiveRuleSet;
use crate::store::{ContainmentOrigin, Derivation, Premise, Store};

#[derive(Debug, Clone, Copy, Default)]
pub struct EngineOptions {
    /// Restrict single-premise rule matching to the previous round's newly
    /// derived assertions. Purely an optimization; the naive path is the
    /// semantic reference and both must produce the same fixed point.
    pub semi_naive: bool,
    /// Require premise labels to be asserted by the rule's own framework
    /// for simple and conditional rules as well, not only for propagation.
    pub strict_premises: bool,
}

/// Outcome of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub rounds: usize,
    pub new_assertions_per_round: Vec<usize>,
    pub total_assertions: usize,
    pub universe_bound: u64,
    pub wall_time_ms: u64,
    pub phases: Vec<String>,
    pub cache_hit: bool,
}

impl RunReport {
    pub fn cache_hit(total_assertions: usize) -> Self {
        RunReport {
            rounds: 0,
            new_assertions_per_round: Vec::new(),
            total_assertions,
            universe_bound: 0,
            wall_time_ms: 0,
            phases: vec!["cache-load (load and iterate phases skipped)".to_string()],
            cache_hit: true,
        }
    }
}

/// Everything an inference run reads but does not own.
pub struct InferenceContext<'a> {
    pub env: &'a Environment,
    pub model: &'a Model,
    pub rules: &'a BTreeMap<Id, EffectiveRuleSet>,
    pub prefixes: &'a PrefixMap,
    pub options: EngineOptions,
}

impl<'a> InferenceContext<'a> {
    /// Frameworks in dependency order; any not in the model's load order
    /// (programmatic setups) follow in id order.
    fn framework_order(&self) -> Vec<Id> {
        let mut order: Vec<Id> = self
            .model
            .load_order
            .iter()
            .filter(|f| self.rules.contains_key(*f))
            .cloned()
            .collect();
        for f in self.rules.keys() {
            if !order.contains(f) {
                order.push(f.clone());
            }
        }
        order
    }

    pub fn universe_bound(&self) -> u64 {
        let d = self.env.containers.len() as u128;
        let l = self.model.labels.len() as u128;
        let g = self.env.scopes.len() as u128;
        let f = self.model.frameworks.len() as u128;
        (d * l * g * f).min(u64::MAX as u128) as u64
    }
}

/// Run the immediate-consequence operator to its least fixed point.
pub fn run_to_fixed_point(ctx: &InferenceContext, store: &mut Store) -> Result<RunReport> {
    let start = Instant::now();
    let problems = ctx.env.validate();
    if !problems.is_empty() {
        return Err(Error::Environment(problems.join("; ")));
    }
    ctx.model.validate_inheritance()?;

    let bound = ctx.universe_bound();
    let mut report = RunReport {
        rounds: 0,
        new_assertions_per_round: Vec::new(),
        total_assertions: 0,
        universe_bound: bound,
        wall_time_ms: 0,
        phases: Vec::new(),
        cache_hit: false,
    };

    let mut delta: Option<BTreeSet<AssertionKey>> = None;
    loop {
        report.rounds += 1;
        let (added, new_delta, phase) = round(ctx, store, delta.as_ref())?;
        report.new_assertions_per_round.push(added);
        report.phases.push(format!("round {}: {}", report.rounds, phase));
        delta = Some(new_delta);
        if added == 0 {
            break;
        }
        if report.rounds as u64 > bound {
            return Err(Error::Model(format!(
                "fixed point not reached within the universe bound of {bound} rounds"
            )));
        }
    }

    report.total_assertions = store.assertion_count();
    report.wall_time_ms = duration_ms(start.elapsed());
    Ok(report)
}

/// Apply one full round of rule instances. Returns the number of
/// assertions that were not previously present.
pub fn step(ctx: &InferenceContext, store: &mut Store) -> Result<usize> {
    let (added, _, _) = round(ctx, store, None)?;
    Ok(added)
}

fn duration_ms(d: Duration) -> u64 {
    d.as_millis().min(u64::MAX as u128) as u64
}

type RoundOutcome = (usize, BTreeSet<AssertionKey>, String);

fn round(
    ctx: &InferenceContext,
    store: &mut Store,
    delta: Option<&BTreeSet<AssertionKey>>,
) -> Result<RoundOutcome> {
    // Phases 1 and 2 are maintained structures: indexes update on insert
    // and rule expansion happened at resolution.
    let materialized = store.materialize_containment(ctx.env);

    let marks = conditions::mark(store, ctx.env, ctx.rules);
    let marked = marks.len();
    let mut evaluated = 0usize;
    for ((_, container, scope), condition) in marks.entries() {
        conditions::evaluate(condition, container, scope, store, ctx.env)?;
        evaluated += 1;
    }

    let staged = derive(ctx, store, delta)?;
    let mut added = 0usize;
    let mut new_delta = BTreeSet::new();
    for (key, derivation) in staged {
        if store.insert_derived(ctx.env, key.clone(), derivation)? {
            added += 1;
            new_delta.insert(key);
        }
    }

    let phase = format!(
        "index ok; expansion cached; materialized +{materialized}; marked {marked}; evaluated {evaluated}; derived +{added}"
    );
    Ok((added, new_delta, phase))
}

/// Collect every rule firing against the current state. Nothing is
/// committed here, so rule order cannot influence the resulting set; it
/// only decides which derivation is recorded first for a key.
fn derive(
    ctx: &InferenceContext,
    store: &Store,
    delta: Option<&BTreeSet<AssertionKey>>,
) -> Result<Vec<(AssertionKey, Derivation)>> {
    let mut staged: BTreeMap<AssertionKey, Derivation> = BTreeMap::new();
    let use_delta = ctx.options.semi_naive && delta.is_some();

    // (label, scope) -> carriers restricted to last round's delta
    let mut delta_carriers: BTreeMap<(&Id, &Id), BTreeSet<&Id>> = BTreeMap::new();
    let mut delta_carriers_fw: BTreeMap<(&Id, &Id, &Id), BTreeSet<&Id>> = BTreeMap::new();
    if use_delta {
        for key in delta.unwrap() {
            delta_carriers
                .entry((&key.label, &key.scope))
                .or_default()
                .insert(&key.container);
            delta_carriers_fw
                .entry((&key.label, &key.scope, &key.framework))
                .or_default()
                .insert(&key.container);
        }
    }

    let scopes: Vec<&Id> = ctx.env.scopes.keys().collect();
    for framework in ctx.framework_order() {
        let Some(ruleset) = ctx.rules.get(&framework) else {
            continue;
        };
        for rule in &ruleset.rules {
            let rule_text = rule.rule.display(ctx.prefixes);
            match &rule.rule {
                ResolvedRule::Simple { from, to } => {
                    for scope in &scopes {
                        let carriers = premise_carriers(
                            ctx, store, from, scope, &framework, use_delta,
                            &delta_carriers, &delta_carriers_fw,
                        );
                        for container in carriers {
                            let key = AssertionKey::new(
                                container.clone(),
                                to.clone(),
                                (*scope).clone(),
                                framework.clone(),
                            );
                            if store.contains(&key) || staged.contains_key(&key) {
                                continue;
                            }
                            let witness = premise_witness(ctx, store, &container, from, scope, &framework);
                            staged.insert(
                                key,
                                Derivation {
                                    rule: rule_text.clone(),
                                    framework: framework.clone(),
                                    premises: witness.into_iter().map(Premise::Assertion).collect(),
                                },
                            );
                        }
                    }
                }
                ResolvedRule::Conditional {
                    from,
                    condition,
                    to,
                } => {
                    let cond_id = condition.canonical_id();
                    for scope in &scopes {
                        // Triggers are never delta-restricted: the condition
                        // may have become true without a new trigger.
                        let carriers = premise_carriers(
                            ctx, store, from, scope, &framework, false,
                            &delta_carriers, &delta_carriers_fw,
                        );
                        for container in carriers {
                            let key = AssertionKey::new(
                                container.clone(),
                                to.clone(),
                                (*scope).clone(),
                                framework.clone(),
                            );
                            if store.contains(&key) || staged.contains_key(&key) {
                                continue;
                            }
                            if !condition_holds(store, &cond_id, &container, scope) {
                                continue;
                            }
                            let witness = premise_witness(ctx, store, &container, from, scope, &framework);
                            let mut premises: Vec<Premise> =
                                witness.into_iter().map(Premise::Assertion).collect();
                            premises.extend(condition_premises(store, condition, &container, scope, ctx.prefixes));
                            staged.insert(
                                key,
                                Derivation {
                                    rule: rule_text.clone(),
                                    framework: framework.clone(),
                                    premises,
                                },
                            );
                        }
                    }
                }
                ResolvedRule::Implication { condition, to } => {
                    let cond_id = condition.canonical_id();
                    for (scope_id, scope) in &ctx.env.scopes {
                        for container in &scope.visible {
                            let key = AssertionKey::new(
                                container.clone(),
                                to.clone(),
                                scope_id.clone(),
                                framework.clone(),
                            );
                            if store.contains(&key) || staged.contains_key(&key) {
                                continue;
                            }
                            if !condition_holds(store, &cond_id, container, scope_id) {
                                continue;
                            }
                            staged.insert(
                                key,
                                Derivation {
                                    rule: rule_text.clone(),
                                    framework: framework.clone(),
                                    premises: condition_premises(store, condition, container, scope_id, ctx.prefixes),
                                },
                            );
                        }
                    }
                }
                ResolvedRule::Propagation { direction, label } => {
                    let relation = direction.relation();
                    for scope in &scopes {
                        // Propagation premises are framework-scoped.
                        let sources: Vec<Id> = if use_delta {
                            delta_carriers_fw
                                .get(&(label, *scope, &framework))
                                .map(|s| s.iter().map(|c| (*c).clone()).collect())
                                .unwrap_or_default()
                        } else {
                            store
                                .carriers_by_framework(label, scope, &framework)
                                .into_iter()
                                .collect()
                        };
                        for source in sources {
                            for target in ctx.env.related(relation, &source) {
                                if !ctx.env.visible(&target, scope) {
                                    continue;
                                }
                                let key = AssertionKey::new(
                                    target,
                                    label.clone(),
                                    (*scope).clone(),
                                    framework.clone(),
                                );
                                if store.contains(&key) || staged.contains_key(&key) {
                                    continue;
                                }
                                staged.insert(
                                    key,
                                    Derivation {
                                        rule: rule_text.clone(),
                                        framework: framework.clone(),
                                        premises: vec![Premise::Assertion(AssertionKey::new(
                                            source.clone(),
                                            label.clone(),
                                            (*scope).clone(),
                                            framework.clone(),
                                        ))],
                                    },
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(staged.into_iter().collect())
}

#[allow(clippy::too_many_arguments)]
fn premise_carriers(
    ctx: &InferenceContext,
    store: &Store,
    label: &Id,
    scope: &Id,
    framework: &Id,
    use_delta: bool,
    delta_carriers: &BTreeMap<(&Id, &Id), BTreeSet<&Id>>,
    delta_carriers_fw: &BTreeMap<(&Id, &Id, &Id), BTreeSet<&Id>>,
) -> Vec<Id> {
    if ctx.options.strict_premises {
        if use_delta {
            delta_carriers_fw
                .get(&(label, scope, framework))
                .map(|s| s.iter().map(|c| (*c).clone()).collect())
                .unwrap_or_default()
        } else {
            store
                .carriers_by_framework(label, scope, framework)
                .into_iter()
                .collect()
        }
    } else if use_delta {
        delta_carriers
            .get(&(label, scope))
            .map(|s| s.iter().map(|c| (*c).clone()).collect())
            .unwrap_or_default()
    } else {
        store.carriers(label, scope).into_iter().collect()
    }
}

/// The premise assertion recorded for a trigger label; the smallest
/// matching key in assertion order, so provenance is deterministic.
fn premise_witness(
    ctx: &InferenceContext,
    store: &Store,
    container: &Id,
    label: &Id,
    scope: &Id,
    framework: &Id,
) -> Option<AssertionKey> {
    if ctx.options.strict_premises {
        let key = AssertionKey::new(
            container.clone(),
            label.clone(),
            scope.clone(),
            framework.clone(),
        );
        return store.contains(&key).then_some(key);
    }
    store
        .keys_by_container(container)
        .into_iter()
        .find(|k| &k.label == label && &k.scope == scope)
}

fn condition_holds(store: &Store, condition_id: &Id, container: &Id, scope: &Id) -> bool {
    store
        .evaluation(&EvaluationKey {
            condition: condition_id.clone(),
            container: container.clone(),
            scope: scope.clone(),
        })
        .unwrap_or(false)
}

fn condition_premises(
    store: &Store,
    condition: &Condition,
    container: &Id,
    scope: &Id,
    prefixes: &PrefixMap,
) -> Vec<Premise> {
    let mut premises = Vec::new();
    // Containment atoms point at the containment fact so explanations can
    // follow the witness chain.
    collect_containment_premises(condition, container, scope, store, &mut premises);
    premises.push(Premise::Condition {
        id: condition.canonical_id(),
        display: condition.display(prefixes),
    });
    premises
}

fn collect_containment_premises(
    condition: &Condition,
    container: &Id,
    scope: &Id,
    store: &Store,
    out: &mut Vec<Premise>,
) {
    match condition {
        Condition::ContainsLabel { label } => {
            if store.has_containment(container, label, scope) {
                out.push(Premise::Containment(ContainmentKey {
                    container: container.clone(),
                    label: label.clone(),
                    scope: scope.clone(),
                }));
            }
        }
        Condition::Composite { children, .. } => {
            for child in children {
                collect_containment_premises(child, container, scope, store, out);
            }
        }
        _ => {}
    }
}

// ---------------------------------------------------------------------------
// Release
// ---------------------------------------------------------------------------

/// Move a container across scope boundaries: grant visibility in the
/// target scope and copy its ground assertions from the source scope.
/// Derived assertions stay behind; run inference again to obtain the
/// target scope's consequences.
pub fn release(
    store: &mut Store,
    env: &mut Environment,
    container: &Id,
    from_scope: &Id,
    to_scope: &Id,
) -> Result<usize> {
    if !env.scopes.contains_key(to_scope) {
        return Err(Error::UnknownScope(to_scope.clone()));
    }
    if !env.visible(container, from_scope) {
        return Err(Error::ScopeVisibility {
            container: container.clone(),
            scope: from_scope.clone(),
        });
    }
    env.add_visibility(to_scope, container)?;

    let ground: Vec<(AssertionKey, BTreeMap<String, crate::graph::Scalar>)> = store
        .keys_by_container(container)
        .into_iter()
        .filter(|k| &k.scope == from_scope)
        .filter_map(|k| {
            let data = store.get(&k)?;
            data.ground.then(|| (k.clone(), data.parameters.clone()))
        })
        .collect();

    let mut transferred = 0;
    for (key, parameters) in ground {
        let new_key = AssertionKey::new(
            key.container.clone(),
            key.label.clone(),
            to_scope.clone(),
            key.framework.clone(),
        );
        if store.insert_ground(env, new_key, parameters)? {
            transferred += 1;
        }
    }
    Ok(transferred)
}

// ---------------------------------------------------------------------------
// Explanation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Explanation {
    pub key: AssertionKey,
    pub ground: bool,
    pub rule: Option<String>,
    pub framework: Option<Id>,
    pub premises: Vec<ExplanationPremise>,
}

#[derive(Debug, Clone)]
pub enum ExplanationPremise {
    Assertion(Box<Explanation>),
    Containment {
        key: ContainmentKey,
        ground: bool,
        witness: Option<Box<Explanation>>,
    },
    Condition {
        id: Id,
        result: bool,
    },
}

/// Reconstruct how an assertion was first derived, down to ground leaves.
pub fn explain(store: &Store, key: &AssertionKey) -> Result<Explanation> {
    let data = store.get(key).ok_or_else(|| Error::AssertionNotFound {
        container: key.container.clone(),
        label: key.label.clone(),
        scope: key.scope.clone(),
        framework: key.framework.clone(),
    })?;
    if data.ground {
        return Ok(Explanation {
            key: key.clone(),
            ground: true,
            rule: None,
            framework: None,
            premises: Vec::new(),
        });
    }
    let derivation = store.derivation(key).ok_or_else(|| {
        Error::Model(format!("derived assertion without derivation record: {key:?}"))
    })?;
    let mut premises = Vec::new();
    for premise in &derivation.premises {
        match premise {
            Premise::Assertion(k) => {
                premises.push(ExplanationPremise::Assertion(Box::new(explain(store, k)?)));
            }
            Premise::Containment(ck) => {
                let origin = store.containment_origin(ck);
                let (ground, witness) = match origin {
                    Some(ContainmentOrigin::Ground) | None => (true, None),
                    Some(ContainmentOrigin::Derived(w)) => {
                        (false, Some(Box::new(explain(store, w)?)))
                    }
                };
                premises.push(ExplanationPremise::Containment {
                    key: ck.clone(),
                    ground,
                    witness,
                });
            }
            Premise::Condition { id, .. } => {
                let result = condition_holds(store, id, &key.container, &key.scope);
                premises.push(ExplanationPremise::Condition {
                    id: id.clone(),
                    result,
                });
            }
        }
    }
    Ok(Explanation {
        key: key.clone(),
        ground: false,
        rule: Some(derivation.rule.clone()),
        framework: Some(derivation.framework.clone()),
        premises,
    })
}

/// Render an explanation as an indented tree.
pub fn render_explanation(explanation: &Explanation, map: &PrefixMap) -> String {
    let mut out = String::new();
    render_node(explanation, map, 0, &mut out);
    out
}

fn render_node(node: &Explanation, map: &PrefixMap, depth: usize, out: &mut String) {
    let indent = "  ".repeat(depth);
    if node.ground {
        out.push_str(&format!("{indent}{} [ground]\n", node.key.display(map)));
        return;
    }
    out.push_str(&format!(
        "{indent}{} [derived by {} via {}]\n",
        node.key.display(map),
        node.framework
            .as_ref()
            .map(|f| map.compact(f))
            .unwrap_or_default(),
        node.rule.as_deref().unwrap_or("?")
    ));
    for premise in &node.premises {
        match premise {
            ExplanationPremise::Assertion(a) => render_node(a, map, depth + 1, out),
            ExplanationPremise::Containment { key, ground, witness } => {
                let indent = "  ".repeat(depth + 1);
                out.push_str(&format!(
                    "{indent}contains({}, {}, {}){}\n",
                    map.compact(&key.container),
                    map.compact(&key.label),
                    map.compact(&key.scope),
                    if *ground { " [ground]" } else { "" }
                ));
                if let Some(w) = witness {
                    render_node(w, map, depth + 2, out);
                }
            }
            ExplanationPremise::Condition { id, result } => {
                let indent = "  ".repeat(depth + 1);
                out.push_str(&format!("{indent}condition {} = {result}\n", short_cond(id)));
            }
        }
    }
}

fn short_cond(id: &Id) -> String {
    let s = id.as_str();
    if let Some(hex) = s.strip_prefix("urn:cond:") {
        format!("urn:cond:{}", &hex[..hex.len().min(12)])
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::FrameworkKind;
    use crate::metamodel::{Direction, Framework, Label, RelationKind};
    use crate::resolver::ProvenancedRule;

    fn id(s: &str) -> Id {
        Id::new(format!("http://t.test/{s}"))
    }

    struct Fixture {
        env: Environment,
        model: Model,
        rules: BTreeMap<Id, EffectiveRuleSet>,
        store: Store,
        prefixes: PrefixMap,
    }

    impl Fixture {
        fn ctx(&self) -> InferenceContext<'_> {
            InferenceContext {
                env: &self.env,
                model: &self.model,
                rules: &self.rules,
                prefixes: &self.prefixes,
                options: EngineOptions::default(),
            }
        }

        fn run(&mut self) -> RunReport {
            let ctx = InferenceContext {
                env: &self.env,
                model: &self.model,
                rules: &self.rules,
                prefixes: &self.prefixes,
                options: EngineOptions::default(),
            };
            run_to_fixed_point(&ctx, &mut self.store).unwrap()
        }
    }

    fn fixture(labels: &[&str], containers: &[(&str, Option<&str>)]) -> Fixture {
        let mut env = Environment::new();
        for (c, p) in containers {
            env.add_container(id(c), p.map(id)).unwrap();
        }
        env.add_scope(id("g"));
        for (c, _) in containers {
            env.add_visibility(&id("g"), &id(c)).unwrap();
        }
        let mut model = Model::default();
        let fid = id("F");
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
                declared_labels: labels.iter().map(|l| id(l)).collect(),
                declared_facets: vec![],
            },
        );
        model.load_order.push(fid.clone());
        let mut rules = BTreeMap::new();
        rules.insert(
            fid.clone(),
            EffectiveRuleSet {
                framework: fid,
                rules: vec![],
            },
        );
        Fixture {
            env,
            model,
            rules,
            store: Store::new(),
            prefixes: PrefixMap::new(),
        }
    }

    fn add_rule(fixture: &mut Fixture, rule: ResolvedRule) {
        let fid = id("F");
        fixture.rules.get_mut(&fid).unwrap().rules.push(ProvenancedRule {
            rule,
            framework: fid.clone(),
            node: id("n"),
        });
    }

    fn ground(fixture: &mut Fixture, c: &str, l: &str) {
        fixture
            .store
            .insert_ground(
                &fixture.env,
                AssertionKey::new(id(c), id(l), id("g"), id("F")),
                BTreeMap::new(),
            )
            .unwrap();
    }

    #[test]
    fn simple_rule_chain_runs_to_fixed_point() {
        let mut f = fixture(&["A", "B", "C"], &[("t", None)]);
        add_rule(&mut f, ResolvedRule::Simple { from: id("A"), to: id("B") });
        add_rule(&mut f, ResolvedRule::Simple { from: id("B"), to: id("C") });
        ground(&mut f, "t", "A");
        let report = f.run();
        assert!(f.store.contains(&AssertionKey::new(id("t"), id("C"), id("g"), id("F"))));
        assert_eq!(*report.new_assertions_per_round.last().unwrap(), 0);
        assert!(report.rounds as u64 <= report.universe_bound + 1);
    }

    #[test]
    fn empty_rule_set_fixes_immediately() {
        let mut f = fixture(&["A"], &[("t", None)]);
        ground(&mut f, "t", "A");
        let report = f.run();
        assert_eq!(report.rounds, 1);
        assert_eq!(f.store.assertion_count(), 1);
    }

    #[test]
    fn step_at_fixed_point_adds_nothing() {
        let mut f = fixture(&["A", "B"], &[("t", None)]);
        add_rule(&mut f, ResolvedRule::Simple { from: id("A"), to: id("B") });
        ground(&mut f, "t", "A");
        f.run();
        let ctx = f.ctx();
        assert_eq!(step(&ctx, &mut f.store).unwrap(), 0);
    }

    #[test]
    fn adversarial_chain_respects_round_bound() {
        let n = 30;
        let labels: Vec<String> = (0..n).map(|i| format!("L{i}")).collect();
        let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        let mut f = fixture(&refs, &[("t", None)]);
        for i in 0..n - 1 {
            add_rule(
                &mut f,
                ResolvedRule::Simple {
                    from: id(&format!("L{i}")),
                    to: id(&format!("L{}", i + 1)),
                },
            );
        }
        ground(&mut f, "t", "L0");
        let report = f.run();
        assert!(f.store.contains(&AssertionKey::new(
            id("t"),
            id(&format!("L{}", n - 1)),
            id("g"),
            id("F")
        )));
        // one label per round plus the empty closing round
        assert_eq!(report.rounds, n);
        assert!((report.rounds as u64) <= report.universe_bound + 1);
    }

    #[test]
    fn joinable_propagation_reaches_partners() {
        let mut f = fixture(&["PHI"], &[("a", None), ("b", None)]);
        f.env.add_joinable(&id("a"), &id("b")).unwrap();
        add_rule(
            &mut f,
            ResolvedRule::Propagation {
                direction: Direction::Joinable,
                label: id("PHI"),
            },
        );
        ground(&mut f, "a", "PHI");
        f.run();
        assert!(f.store.contains(&AssertionKey::new(id("b"), id("PHI"), id("g"), id("F"))));
    }

    #[test]
    fn propagation_skips_invisible_targets() {
        let mut f = fixture(&["L"], &[("parent", None), ("kid", Some("parent"))]);
        // restrict visibility to the parent only
        f.env.scopes.get_mut(&id("g")).unwrap().visible.remove(&id("kid"));
        add_rule(
            &mut f,
            ResolvedRule::Propagation {
                direction: Direction::Inward,
                label: id("L"),
            },
        );
        ground(&mut f, "parent", "L");
        f.run();
        assert!(!f
            .store
            .contains(&AssertionKey::new(id("kid"), id("L"), id("g"), id("F"))));
    }

    #[test]
    fn inward_propagation_flows_to_children_not_parents() {
        let mut f = fixture(&["L"], &[("parent", None), ("kid", Some("parent"))]);
        add_rule(
            &mut f,
            ResolvedRule::Propagation {
                direction: Direction::Inward,
                label: id("L"),
            },
        );
        ground(&mut f, "parent", "L");
        f.run();
        assert!(f.store.contains(&AssertionKey::new(id("kid"), id("L"), id("g"), id("F"))));

        let mut g = fixture(&["L"], &[("parent", None), ("kid", Some("parent"))]);
        add_rule(
            &mut g,
            ResolvedRule::Propagation {
                direction: Direction::Inward,
                label: id("L"),
            },
        );
        ground(&mut g, "kid", "L");
        g.run();
        assert!(!g
            .store
            .contains(&AssertionKey::new(id("parent"), id("L"), id("g"), id("F"))));
    }

    #[test]
    fn conditional_rule_fires_when_condition_becomes_true() {
        // A on t triggers; condition requires a child to carry W, which
        // only arrives via an inward propagation in a later round.
        let mut f = fixture(&["A", "W", "Out"], &[("t", None), ("kid", Some("t"))]);
        add_rule(
            &mut f,
            ResolvedRule::Conditional {
                from: id("A"),
                condition: Condition::HasLabel {
                    relation: RelationKind::Child,
                    label: id("W"),
                },
                to: id("Out"),
            },
        );
        add_rule(
            &mut f,
            ResolvedRule::Propagation {
                direction: Direction::Inward,
                label: id("W"),
            },
        );
        ground(&mut f, "t", "A");
        ground(&mut f, "t", "W");
        f.run();
        assert!(f.store.contains(&AssertionKey::new(id("t"), id("Out"), id("g"), id("F"))));
    }

    #[test]
    fn ground_and_derived_stay_separate() {
        let mut f = fixture(&["A", "B"], &[("t", None)]);
        add_rule(&mut f, ResolvedRule::Simple { from: id("A"), to: id("B") });
        ground(&mut f, "t", "A");
        f.run();
        let derived = AssertionKey::new(id("t"), id("B"), id("g"), id("F"));
        assert!(!f.store.get(&derived).unwrap().ground);
        assert!(f
            .store
            .get(&AssertionKey::new(id("t"), id("A"), id("g"), id("F")))
            .unwrap()
            .ground);
    }

    #[test]
    fn release_transfers_ground_only_and_grants_visibility() {
        let mut f = fixture(&["A", "B"], &[("t", None)]);
        f.env.add_scope(id("g2"));
        add_rule(&mut f, ResolvedRule::Simple { from: id("A"), to: id("B") });
        ground(&mut f, "t", "A");
        f.run();

        let moved = release(&mut f.store, &mut f.env, &id("t"), &id("g"), &id("g2")).unwrap();
        assert_eq!(moved, 1);
        assert!(f.env.visible(&id("t"), &id("g2")));
        assert!(f.store.contains(&AssertionKey::new(id("t"), id("A"), id("g2"), id("F"))));
        assert!(!f.store.contains(&AssertionKey::new(id("t"), id("B"), id("g2"), id("F"))));

        // re-running inference derives the consequence in the new scope
        let ctx = f.ctx();
        run_to_fixed_point(&ctx, &mut f.store).unwrap();
        assert!(f.store.contains(&AssertionKey::new(id("t"), id("B"), id("g2"), id("F"))));
    }

    #[test]
    fn release_into_source_scope_moves_nothing() {
        let mut f = fixture(&["A"], &[("t", None)]);
        ground(&mut f, "t", "A");
        assert_eq!(
            release(&mut f.store, &mut f.env, &id("t"), &id("g"), &id("g")).unwrap(),
            0
        );
    }

    #[test]
    fn release_without_ground_assertions_still_grants_visibility() {
        let mut f = fixture(&[], &[("t", None)]);
        f.env.add_scope(id("g2"));
        assert_eq!(
            release(&mut f.store, &mut f.env, &id("t"), &id("g"), &id("g2")).unwrap(),
            0
        );
        assert!(f.env.visible(&id("t"), &id("g2")));
    }

    #[test]
    fn release_requires_presence_in_source_scope() {
        let mut f = fixture(&[], &[("t", None)]);
        f.env.add_scope(id("g2"));
        f.env.add_scope(id("g3"));
        let err = release(&mut f.store, &mut f.env, &id("t"), &id("g2"), &id("g3")).unwrap_err();
        assert!(matches!(err, Error::ScopeVisibility { .. }));
    }

    #[test]
    fn explain_ground_assertion_is_a_leaf() {
        let mut f = fixture(&["A"], &[("t", None)]);
        ground(&mut f, "t", "A");
        let e = explain(
            &f.store,
            &AssertionKey::new(id("t"), id("A"), id("g"), id("F")),
        )
        .unwrap();
        assert!(e.ground);
        assert!(e.premises.is_empty());
    }

    #[test]
    fn explain_unknown_assertion_errors() {
        let f = fixture(&[], &[("t", None)]);
        assert!(matches!(
            explain(
                &f.store,
                &AssertionKey::new(id("t"), id("A"), id("g"), id("F"))
            ),
            Err(Error::AssertionNotFound { .. })
        ));
    }

    #[test]
    fn explain_follows_the_derivation_chain() {
        let mut f = fixture(&["A", "B", "C"], &[("t", None)]);
        add_rule(&mut f, ResolvedRule::Simple { from: id("A"), to: id("B") });
        add_rule(&mut f, ResolvedRule::Simple { from: id("B"), to: id("C") });
        ground(&mut f, "t", "A");
        f.run();
        let e = explain(
            &f.store,
            &AssertionKey::new(id("t"), id("C"), id("g"), id("F")),
        )
        .unwrap();
        assert!(!e.ground);
        let ExplanationPremise::Assertion(b) = &e.premises[0] else {
            panic!("expected assertion premise");
        };
        assert_eq!(b.key.label, id("B"));
        let ExplanationPremise::Assertion(a) = &b.premises[0] else {
            panic!("expected assertion premise");
        };
        assert!(a.ground);
        let text = render_explanation(&e, &f.prefixes);
        assert!(text.contains("[ground]"));
    }

    #[test]
    fn strict_premises_requires_same_framework_trigger() {
        // premise asserted by framework G, rule owned by F
        let mut f = fixture(&["A", "B"], &[("t", None)]);
        add_rule(&mut f, ResolvedRule::Simple { from: id("A"), to: id("B") });
        f.store
            .insert_ground(
                &f.env,
                AssertionKey::new(id("t"), id("A"), id("g"), id("G")),
                BTreeMap::new(),
            )
            .unwrap();

        let mut strict_store = f.store.clone();
        let mut ctx = f.ctx();
        run_to_fixed_point(&ctx, &mut f.store).unwrap();
        assert!(f.store.contains(&AssertionKey::new(id("t"), id("B"), id("g"), id("F"))));

        ctx.options.strict_premises = true;
        run_to_fixed_point(&ctx, &mut strict_store).unwrap();
        assert!(!strict_store.contains(&AssertionKey::new(id("t"), id("B"), id("g"), id("F"))));
    }

    #[test]
    fn semi_naive_matches_naive_result() {
        let mut f = fixture(
            &["A", "B", "C", "P"],
            &[("root", None), ("mid", Some("root")), ("leaf", Some("mid"))],
        );
        add_rule(&mut f, ResolvedRule::Simple { from: id("A"), to: id("B") });
        add_rule(&mut f, ResolvedRule::Simple { from: id("B"), to: id("C") });
        add_rule(
            &mut f,
            ResolvedRule::Propagation {
                direction: Direction::Inward,
                label: id("C"),
            },
        );
        add_rule(
            &mut f,
            ResolvedRule::Conditional {
                from: id("C"),
                condition: Condition::HasLabel {
                    relation: RelationKind::Desc,
                    label: id("C"),
                },
                to: id("P"),
            },
        );
        ground(&mut f, "root", "A");

        let mut naive_store = f.store.clone();
        let mut semi_store = f.store.clone();
        let mut ctx = f.ctx();
        run_to_fixed_point(&ctx, &mut naive_store).unwrap();
        ctx.options.semi_naive = true;
        run_to_fixed_point(&ctx, &mut semi_store).unwrap();

        let naive: Vec<_> = naive_store.assertions().map(|(k, _)| k.clone()).collect();
        let semi: Vec<_> = semi_store.assertions().map(|(k, _)| k.clone()).collect();
        assert_eq!(naive, semi);
    }
}
