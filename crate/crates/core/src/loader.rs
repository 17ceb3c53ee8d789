//! Bundle discovery and system loading.
//!
//! A framework bundle is a directory holding `framework.toml` and the
//! model documents it names. Environments are separate declaration files
//! describing containers, scopes, ground labels, ground containment, and
//! statistical record sources:
//!
//! ```text
//! :Table a fw:DataContainer .
//! :Db fw:contains :Table .
//! :Table fw:joinableWith :Other .
//! :Scope a fw:GovernanceScope ; fw:includesContainer :Db, :Table .
//! :Table fw:hasGroundLabel b:Individual .
//! :Table fw:hasGroundLabel [ fw:label b:KAnonymityAnalysis ;
//!     fw:parameter [ fw:parameterName "minimumCohortSize" ; fw:parameterValue 5 ] ] .
//! :Table fw:containsLabel b:IdentifierData .
//! :Table fw:recordsSource [ fw:csvPath "records.csv" ;
//!     fw:quasiIdentifiers ( "age" "gender" ) ] .
//! ```
//!
//! Loading parses everything in dependency order, skolemizes anonymous
//! nodes, builds the model and effective rule sets, and instantiates
//! ground facts into a store: a container's intrinsic ground labels and
//! containment declarations enter every scope the container is visible
//! in, and each record source is measured and asserted per scope.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{DeclarationGraph, Node, Scalar, Term};
use crate::ids::{Id, PrefixMap};
use crate::kanon::{self, RecordTable};
use crate::manifest::{self, Manifest};
use crate::metamodel::{
    AssertionKey, ContainmentKey, Environment, Facet, Framework, Label, Model, ParameterKind,
    ParameterSpec,
};
use crate::resolver::{self, EffectiveRuleSet};
use crate::skolem::skolemize;
use crate::store::Store;
use crate::turtle::parse_document;
use crate::vocab;

#[derive(Debug, Clone)]
pub struct LoadConfig {
    pub frameworks_dir: PathBuf,
    /// Bundle names whose rules run during inference. `None` runs all
    /// loaded frameworks; an empty list loads vocabulary only, so the
    /// fixed point equals the ground assertions.
    pub rule_frameworks: Option<Vec<String>>,
    pub env_files: Vec<PathBuf>,
}

/// Everything a run needs, fully loaded and validated.
pub struct LoadedSystem {
    pub model: Model,
    pub env: Environment,
    pub store: Store,
    /// Effective rule sets for every loaded framework.
    pub rules: BTreeMap<Id, EffectiveRuleSet>,
    /// Frameworks whose rules participate in inference.
    pub selected: BTreeSet<Id>,
    pub prefixes: PrefixMap,
    pub warnings: Vec<String>,
    /// SHA-256 over all input documents; the cache key.
    pub input_hash: [u8; 32],
}

impl LoadedSystem {
    /// The rule sets inference should apply.
    pub fn active_rules(&self) -> BTreeMap<Id, EffectiveRuleSet> {
        self.rules
            .iter()
            .filter(|(f, _)| self.selected.contains(*f))
            .map(|(f, r)| (f.clone(), r.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

/// Load bundles and environments, instantiate ground facts, resolve rules.
pub fn load_system(config: &LoadConfig) -> Result<LoadedSystem> {
    let mut warnings = Vec::new();
    let mut hasher = InputHasher::new();

    let bundles = discover_bundles(&config.frameworks_dir, &mut hasher)?;
    let order = manifest::topo_order(
        &bundles.iter().map(|b| b.manifest.clone()).collect::<Vec<_>>(),
    )?;

    let mut prefixes = PrefixMap::new();
    prefixes.declare("fw", vocab::FW_NS);

    // Parse every bundle's model documents in dependency order.
    let mut parsed: Vec<ParsedBundle> = Vec::new();
    for name in &order {
        let bundle = bundles.iter().find(|b| b.manifest.id == *name).expect("ordered");
        let graphs = parse_bundle(bundle, &mut hasher)?;
        if !bundle.manifest.construct_files.is_empty() {
            warnings.push(format!(
                "framework '{}': construct files are not supported and were ignored: {}",
                bundle.manifest.id,
                bundle.manifest.construct_files.join(", ")
            ));
        }
        for g in &graphs {
            for (p, n) in &g.prefixes {
                prefixes.declare(p, n);
            }
        }
        parsed.push(ParsedBundle {
            manifest: bundle.manifest.clone(),
            graphs,
        });
    }

    let (model, union_graph) = build_model(&parsed)?;

    // Environments.
    let mut env_docs: Vec<(PathBuf, DeclarationGraph)> = Vec::new();
    for path in &config.env_files {
        let text = read_input(path, &mut hasher)?;
        let graph = skolemize(&parse_document(&text, &path.display().to_string())?)?;
        for (p, n) in &graph.prefixes {
            prefixes.declare(p, n);
        }
        env_docs.push((path.clone(), graph));
    }
    let mut env_union = DeclarationGraph::new("environment");
    for (_, g) in &env_docs {
        env_union.merge(g.clone());
    }

    let (env, grounds, containments) = build_environment(&env_union, &model)?;
    let directives = record_directives(&env_docs, &env, &mut hasher)?;

    let problems = env.validate();
    if !problems.is_empty() {
        return Err(Error::Environment(problems.join("; ")));
    }
    model.validate_inheritance()?;

    let rules = resolver::resolve_effective_rules(&model)?;

    // Instantiate intrinsic ground declarations into every visible scope.
    let mut store = Store::new();
    for (scope_id, scope) in &env.scopes {
        for ground in &grounds {
            if !scope.visible.contains(&ground.container) {
                continue;
            }
            store.insert_ground(
                &env,
                AssertionKey::new(
                    ground.container.clone(),
                    ground.label.clone(),
                    scope_id.clone(),
                    ground.framework.clone(),
                ),
                ground.parameters.clone(),
            )?;
        }
        for (container, label) in &containments {
            if !scope.visible.contains(container) {
                continue;
            }
            store.insert_ground_containment(ContainmentKey {
                container: container.clone(),
                label: label.clone(),
                scope: scope_id.clone(),
            });
        }
    }

    // Statistical measurements enter as ground facts before inference.
    for directive in &directives {
        let stats_framework = model
            .labels
            .get(&vocab::kanonymity_analysis())
            .map(|l| l.framework.clone())
            .ok_or_else(|| {
                Error::Model(
                    "record sources need the base bundle (KAnonymityAnalysis is not declared)"
                        .to_string(),
                )
            })?;
        let table = RecordTable::from_csv_path(
            directive.container.clone(),
            &directive.csv_path,
            directive.quasi_identifiers.clone(),
        )?;
        for (scope_id, scope) in &env.scopes {
            if scope.visible.contains(&directive.container) {
                kanon::emit_analysis(&mut store, &env, &table, scope_id, &stats_framework)?;
            }
        }
    }

    let selected: BTreeSet<Id> = match &config.rule_frameworks {
        None => model.frameworks.keys().cloned().collect(),
        Some(names) => {
            let mut set = BTreeSet::new();
            for name in names {
                let framework = model
                    .framework_by_bundle(name)
                    .ok_or_else(|| Error::UnknownFramework(Id::new(name)))?;
                set.insert(framework.id.clone());
            }
            set
        }
    };

    let _ = union_graph; // parsed declarations are fully lifted into the model

    Ok(LoadedSystem {
        model,
        env,
        store,
        rules,
        selected,
        prefixes,
        warnings,
        input_hash: hasher.finish(),
    })
}

/// Best-effort validation: collect every diagnosable problem instead of
/// stopping at the first.
pub fn validate_inputs(config: &LoadConfig) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    let mut hasher = InputHasher::new();

    let bundles = match discover_bundles(&config.frameworks_dir, &mut hasher) {
        Ok(b) => b,
        Err(e) => {
            diagnostics.push(Diagnostic {
                severity: Severity::Error,
                message: e.to_string(),
            });
            return diagnostics;
        }
    };
    let manifests: Vec<Manifest> = bundles.iter().map(|b| b.manifest.clone()).collect();
    let order = match manifest::topo_order(&manifests) {
        Ok(o) => o,
        Err(e) => {
            diagnostics.push(Diagnostic {
                severity: Severity::Error,
                message: e.to_string(),
            });
            return diagnostics;
        }
    };

    let mut parsed = Vec::new();
    for name in &order {
        let bundle = bundles.iter().find(|b| b.manifest.id == *name).expect("ordered");
        if !bundle.manifest.construct_files.is_empty() {
            diagnostics.push(Diagnostic {
                severity: Severity::Warning,
                message: format!(
                    "framework '{}': construct files are not supported and were ignored: {}",
                    bundle.manifest.id,
                    bundle.manifest.construct_files.join(", ")
                ),
            });
        }
        match parse_bundle(bundle, &mut hasher) {
            Ok(graphs) => parsed.push(ParsedBundle {
                manifest: bundle.manifest.clone(),
                graphs,
            }),
            Err(e) => diagnostics.push(Diagnostic {
                severity: Severity::Error,
                message: e.to_string(),
            }),
        }
    }

    let model = match build_model(&parsed) {
        Ok((model, _)) => Some(model),
        Err(e) => {
            diagnostics.push(Diagnostic {
                severity: Severity::Error,
                message: e.to_string(),
            });
            None
        }
    };
    if let Some(model) = &model {
        if let Err(e) = model.validate_inheritance() {
            diagnostics.push(Diagnostic {
                severity: Severity::Error,
                message: e.to_string(),
            });
        }
        if let Err(e) = resolver::resolve_effective_rules(model) {
            diagnostics.push(Diagnostic {
                severity: Severity::Error,
                message: e.to_string(),
            });
        }
    }

    let mut env_union = DeclarationGraph::new("environment");
    let mut env_docs = Vec::new();
    for path in &config.env_files {
        let text = match read_input(path, &mut hasher) {
            Ok(t) => t,
            Err(e) => {
                diagnostics.push(Diagnostic {
                    severity: Severity::Error,
                    message: e.to_string(),
                });
                continue;
            }
        };
        match parse_document(&text, &path.display().to_string()).and_then(|g| skolemize(&g)) {
            Ok(graph) => {
                env_union.merge(graph.clone());
                env_docs.push((path.clone(), graph));
            }
            Err(e) => diagnostics.push(Diagnostic {
                severity: Severity::Error,
                message: e.to_string(),
            }),
        }
    }

    if let Some(model) = &model {
        match build_environment(&env_union, model) {
            Ok((env, _, _)) => {
                for problem in env.validate() {
                    diagnostics.push(Diagnostic {
                        severity: Severity::Error,
                        message: problem,
                    });
                }
                if let Err(e) = record_directives(&env_docs, &env, &mut hasher) {
                    diagnostics.push(Diagnostic {
                        severity: Severity::Error,
                        message: e.to_string(),
                    });
                }
            }
            Err(e) => diagnostics.push(Diagnostic {
                severity: Severity::Error,
                message: e.to_string(),
            }),
        }
    }

    diagnostics
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

struct DiscoveredBundle {
    dir: PathBuf,
    manifest: Manifest,
}

struct ParsedBundle {
    manifest: Manifest,
    graphs: Vec<DeclarationGraph>,
}

fn discover_bundles(dir: &Path, hasher: &mut InputHasher) -> Result<Vec<DiscoveredBundle>> {
    if !dir.is_dir() {
        return Err(Error::Environment(format!(
            "frameworks directory '{}' does not exist",
            dir.display()
        )));
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    let mut bundles = Vec::new();
    for entry in entries {
        let manifest_path = entry.join("framework.toml");
        if !manifest_path.is_file() {
            continue;
        }
        let text = read_input(&manifest_path, hasher)?;
        let manifest = manifest::parse_manifest(&text, &manifest_path.display().to_string())?;
        bundles.push(DiscoveredBundle {
            dir: entry,
            manifest,
        });
    }
    Ok(bundles)
}

fn parse_bundle(bundle: &DiscoveredBundle, hasher: &mut InputHasher) -> Result<Vec<DeclarationGraph>> {
    let mut graphs = Vec::new();
    for file in &bundle.manifest.model_files {
        let path = bundle.dir.join(file);
        let text = read_input(&path, hasher)?;
        let graph = parse_document(&text, &path.display().to_string())?;
        graphs.push(skolemize(&graph)?);
    }
    Ok(graphs)
}

fn build_model(bundles: &[ParsedBundle]) -> Result<(Model, DeclarationGraph)> {
    let mut model = Model::default();
    let mut union_graph = DeclarationGraph::new("model");
    let mut bundle_graphs: Vec<(String, DeclarationGraph, Manifest)> = Vec::new();

    for bundle in bundles {
        let mut merged = DeclarationGraph::new(bundle.manifest.id.clone());
        for g in &bundle.graphs {
            merged.merge(g.clone());
        }
        union_graph.merge(merged.clone());
        bundle_graphs.push((bundle.manifest.id.clone(), merged, bundle.manifest.clone()));
    }

    // First pass: framework nodes, facets, labels.
    let framework_type = Id::new(format!("{}Framework", vocab::FW_NS));
    for (name, graph, manifest) in &bundle_graphs {
        let nodes = graph.subjects_of_type(&framework_type);
        let framework_id = match nodes.as_slice() {
            [Node::Iri(id)] => (*id).clone(),
            [] => {
                return Err(Error::Model(format!(
                    "bundle '{name}' declares no framework node (expected exactly one 'a fw:Framework')"
                )))
            }
            _ => {
                return Err(Error::Model(format!(
                    "bundle '{name}' declares {} framework nodes, expected one",
                    nodes.len()
                )))
            }
        };
        if let Some(existing) = model.frameworks.get(&framework_id) {
            return Err(Error::Model(format!(
                "framework node '{framework_id}' is declared by both '{}' and '{name}'",
                existing.bundle
            )));
        }

        let mut declared_facets = Vec::new();
        for node in graph.subjects_of_type(&vocab::facet()) {
            let Node::Iri(facet_id) = node else {
                return Err(Error::Model(format!(
                    "bundle '{name}': facets must be named nodes"
                )));
            };
            declared_facets.push(facet_id.clone());
            model.facets.insert(
                facet_id.clone(),
                Facet {
                    id: facet_id.clone(),
                    name: local_name(facet_id),
                    framework: framework_id.clone(),
                },
            );
        }

        model.frameworks.insert(
            framework_id.clone(),
            Framework {
                id: framework_id.clone(),
                bundle: name.clone(),
                title: manifest.title.clone(),
                kind: manifest.kind,
                parents: Vec::new(),
                declared_rules: Vec::new(),
                declared_labels: Vec::new(),
                declared_facets,
            },
        );
        model.load_order.push(framework_id);
    }

    // Labels may reference facets from dependency bundles, so collect them
    // once all facets are known.
    for (name, graph, _) in &bundle_graphs {
        let framework_id = model
            .frameworks
            .values()
            .find(|f| f.bundle == *name)
            .map(|f| f.id.clone())
            .expect("registered above");
        let in_facet = vocab::in_facet();
        let blocks_release = vocab::blocks_release();
        let mut declared_labels = Vec::new();
        for node in graph.subjects_of_type(&vocab::compliance_label()) {
            let Node::Iri(label_id) = node else {
                return Err(Error::Model(format!(
                    "bundle '{name}': labels must be named nodes"
                )));
            };
            let facet = graph
                .object(node, &in_facet)
                .and_then(|t| t.as_iri().cloned())
                .ok_or_else(|| {
                    Error::Model(format!(
                        "label '{label_id}' in bundle '{name}' declares no facet (fw:inFacet)"
                    ))
                })?;
            if !model.facets.contains_key(&facet) {
                return Err(Error::UnknownFacet(facet));
            }
            if let Some(existing) = model.labels.get(label_id) {
                return Err(Error::Model(format!(
                    "label '{label_id}' is declared by both '{}' and '{framework_id}'",
                    existing.framework
                )));
            }
            let parameter_schema = parameter_schema(graph, node, label_id)?;
            if graph
                .object(node, &blocks_release)
                .and_then(|t| t.as_scalar())
                == Some(&Scalar::Bool(true))
            {
                model.blocks_release.insert(label_id.clone());
            }
            declared_labels.push(label_id.clone());
            model.labels.insert(
                label_id.clone(),
                Label {
                    id: label_id.clone(),
                    facet,
                    framework: framework_id.clone(),
                    parameter_schema,
                },
            );
        }
        model
            .frameworks
            .get_mut(&framework_id)
            .expect("registered above")
            .declared_labels = declared_labels;
    }

    // Inheritance edges.
    let extends = vocab::extends();
    let framework_ids: Vec<Id> = model.load_order.clone();
    for framework_id in &framework_ids {
        let subject = Node::Iri(framework_id.clone());
        let mut parents = Vec::new();
        for term in union_graph.objects(&subject, &extends) {
            let parent = term.as_iri().cloned().ok_or_else(|| {
                Error::Model(format!("framework '{framework_id}': extends must name a framework"))
            })?;
            if !model.frameworks.contains_key(&parent) {
                return Err(Error::UnknownFramework(parent));
            }
            parents.push(parent);
        }
        model.frameworks.get_mut(framework_id).expect("known").parents = parents;
    }

    // Rules, validated against the complete label table.
    for framework_id in &framework_ids {
        let declared = resolver::extract_rules(&union_graph, framework_id, &model)?;
        model
            .frameworks
            .get_mut(framework_id)
            .expect("known")
            .declared_rules = declared;
    }

    Ok((model, union_graph))
}

fn parameter_schema(
    graph: &DeclarationGraph,
    node: &Node,
    label: &Id,
) -> Result<Vec<ParameterSpec>> {
    let schema_pred = vocab::has_parameter_schema();
    let name_pred = vocab::parameter_name();
    let kind_pred = vocab::parameter_kind();
    let mut schema: Vec<ParameterSpec> = Vec::new();
    for term in graph.objects(node, &schema_pred) {
        let spec_node = term.as_node().cloned().ok_or_else(|| {
            Error::Model(format!("label '{label}': parameter schema must be a node"))
        })?;
        let name = graph
            .object(&spec_node, &name_pred)
            .and_then(|t| t.as_scalar())
            .and_then(|s| match s {
                Scalar::Str(s) => Some(s.clone()),
                _ => None,
            })
            .ok_or_else(|| {
                Error::Model(format!("label '{label}': parameter schema needs a string name"))
            })?;
        if schema.iter().any(|s| s.name == name) {
            return Err(Error::Model(format!(
                "label '{label}': duplicate parameter name '{name}'"
            )));
        }
        let kind_term = graph
            .object(&spec_node, &kind_pred)
            .and_then(|t| t.as_iri().cloned())
            .ok_or_else(|| {
                Error::Model(format!("label '{label}': parameter '{name}' needs a kind"))
            })?;
        let kind = if kind_term == vocab::integer_kind() {
            ParameterKind::Integer
        } else if kind_term == vocab::decimal_kind() {
            ParameterKind::Decimal
        } else if kind_term == vocab::string_kind() {
            ParameterKind::String
        } else if kind_term == vocab::boolean_kind() {
            ParameterKind::Boolean
        } else {
            return Err(Error::Model(format!(
                "label '{label}': unknown parameter kind '{kind_term}'"
            )));
        };
        schema.push(ParameterSpec { name, kind });
    }
    Ok(schema)
}

struct GroundDeclaration {
    container: Id,
    label: Id,
    framework: Id,
    parameters: BTreeMap<String, Scalar>,
}

struct RecordDirective {
    container: Id,
    csv_path: PathBuf,
    quasi_identifiers: Vec<String>,
}

fn build_environment(
    graph: &DeclarationGraph,
    model: &Model,
) -> Result<(Environment, Vec<GroundDeclaration>, Vec<(Id, Id)>)> {
    let mut env = Environment::new();

    let container_type = vocab::data_container();
    let mut containers: Vec<Id> = Vec::new();
    for node in graph.subjects_of_type(&container_type) {
        let Node::Iri(id) = node else {
            return Err(Error::Environment("containers must be named nodes".to_string()));
        };
        containers.push(id.clone());
        env.add_container(id.clone(), None)?;
    }

    let contains = vocab::contains();
    let joinable_with = vocab::joinable_with();
    for triple in graph.triples() {
        if triple.predicate == contains {
            let parent = named(&triple.subject, "contains subject")?;
            let child = triple
                .object
                .as_iri()
                .ok_or_else(|| Error::Environment("contains object must be a container".into()))?;
            for c in [&parent, child] {
                if !env.containers.contains_key(c) {
                    return Err(Error::UnknownContainer((*c).clone()));
                }
            }
            env.add_container(child.clone(), Some(parent.clone()))?;
        } else if triple.predicate == joinable_with {
            let a = named(&triple.subject, "joinableWith subject")?;
            let b = triple.object.as_iri().ok_or_else(|| {
                Error::Environment("joinableWith object must be a container".into())
            })?;
            env.add_joinable(&a, b)?;
        }
    }

    let scope_type = vocab::governance_scope();
    let includes = vocab::includes_container();
    for node in graph.subjects_of_type(&scope_type) {
        let Node::Iri(scope_id) = node else {
            return Err(Error::Environment("scopes must be named nodes".to_string()));
        };
        env.add_scope(scope_id.clone());
        for term in graph.objects(node, &includes) {
            let container = term.as_iri().ok_or_else(|| {
                Error::Environment(format!("scope '{scope_id}': includesContainer must name a container"))
            })?;
            env.add_visibility(scope_id, container)?;
        }
    }

    // Ground labels, plain or parameterized.
    let has_ground = vocab::has_ground_label();
    let label_pred = vocab::label();
    let parameter_pred = vocab::parameter();
    let name_pred = vocab::parameter_name();
    let value_pred = Id::new(format!("{}parameterValue", vocab::FW_NS));
    let mut grounds = Vec::new();
    for triple in graph.triples() {
        if triple.predicate != has_ground {
            continue;
        }
        let container = named(&triple.subject, "hasGroundLabel subject")?;
        if !env.containers.contains_key(&container) {
            return Err(Error::UnknownContainer(container));
        }
        let (label_id, parameters) = match &triple.object {
            Term::Node(Node::Iri(id)) => {
                // plain label reference or parameterized node; decide by
                // the presence of fw:label on it
                let as_node = Node::Iri(id.clone());
                match graph.object(&as_node, &label_pred).and_then(|t| t.as_iri().cloned()) {
                    Some(inner) => {
                        let mut params = BTreeMap::new();
                        for pterm in graph.objects(&as_node, &parameter_pred) {
                            let pnode = pterm.as_node().cloned().ok_or_else(|| {
                                Error::Environment("fw:parameter must be a node".into())
                            })?;
                            let name = graph
                                .object(&pnode, &name_pred)
                                .and_then(|t| t.as_scalar())
                                .and_then(|s| match s {
                                    Scalar::Str(s) => Some(s.clone()),
                                    _ => None,
                                })
                                .ok_or_else(|| {
                                    Error::Environment(
                                        "parameter needs a string fw:parameterName".into(),
                                    )
                                })?;
                            let value = graph
                                .object(&pnode, &value_pred)
                                .and_then(|t| t.as_scalar().cloned())
                                .ok_or_else(|| {
                                    Error::Environment(format!(
                                        "parameter '{name}' needs fw:parameterValue"
                                    ))
                                })?;
                            params.insert(name, value);
                        }
                        (inner, params)
                    }
                    None => (id.clone(), BTreeMap::new()),
                }
            }
            other => {
                return Err(Error::Environment(format!(
                    "hasGroundLabel object must be a label or a parameterized node, got {other:?}"
                )))
            }
        };
        let label = model.labels.get(&label_id).ok_or_else(|| Error::UnknownLabel {
            id: label_id.clone(),
            context: Some(format!("ground assertion on '{container}'")),
        })?;
        if !label.parameter_schema.is_empty() {
            for (name, value) in &parameters {
                let spec = label
                    .parameter_schema
                    .iter()
                    .find(|s| &s.name == name)
                    .ok_or_else(|| {
                        Error::Environment(format!(
                            "label '{label_id}' declares no parameter '{name}'"
                        ))
                    })?;
                if !spec.kind.matches(value) {
                    return Err(Error::Environment(format!(
                        "parameter '{name}' of '{label_id}' expects {:?}, got {}",
                        spec.kind,
                        value.kind_name()
                    )));
                }
            }
        }
        grounds.push(GroundDeclaration {
            container,
            label: label_id,
            framework: label.framework.clone(),
            parameters,
        });
    }

    // Ground containment declarations.
    let contains_label = vocab::contains_label();
    let mut containments = Vec::new();
    for triple in graph.triples() {
        if triple.predicate != contains_label {
            continue;
        }
        let container = named(&triple.subject, "containsLabel subject")?;
        if !env.containers.contains_key(&container) {
            return Err(Error::UnknownContainer(container));
        }
        let label = triple
            .object
            .as_iri()
            .ok_or_else(|| Error::Environment("containsLabel object must be a label".into()))?;
        if !model.labels.contains_key(label) {
            return Err(Error::UnknownLabel {
                id: label.clone(),
                context: Some(format!("ground containment on '{container}'")),
            });
        }
        containments.push((container, label.clone()));
    }

    Ok((env, grounds, containments))
}

fn record_directives(
    env_docs: &[(PathBuf, DeclarationGraph)],
    env: &Environment,
    hasher: &mut InputHasher,
) -> Result<Vec<RecordDirective>> {
    let records_source = vocab::records_source();
    let csv_path_pred = vocab::csv_path();
    let qi_pred = vocab::quasi_identifiers();
    let mut directives = Vec::new();
    for (path, graph) in env_docs {
        let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
        for triple in graph.triples() {
            if triple.predicate != records_source {
                continue;
            }
            let container = named(&triple.subject, "recordsSource subject")?;
            if !env.containers.contains_key(&container) {
                return Err(Error::UnknownContainer(container));
            }
            let node = triple
                .object
                .as_node()
                .cloned()
                .ok_or_else(|| Error::Environment("recordsSource must be a node".into()))?;
            let csv_rel = graph
                .object(&node, &csv_path_pred)
                .and_then(|t| t.as_scalar())
                .and_then(|s| match s {
                    Scalar::Str(s) => Some(s.clone()),
                    _ => None,
                })
                .ok_or_else(|| Error::Environment("recordsSource needs a string fw:csvPath".into()))?;
            let mut quasi_identifiers = Vec::new();
            if let Some(Term::List(items)) = graph.object(&node, &qi_pred) {
                for item in items {
                    match item.as_scalar() {
                        Some(Scalar::Str(s)) => quasi_identifiers.push(s.clone()),
                        _ => {
                            return Err(Error::Environment(
                                "quasiIdentifiers must be a collection of strings".into(),
                            ))
                        }
                    }
                }
            }
            let csv_path = base_dir.join(&csv_rel);
            // CSV content participates in the input hash.
            let _ = read_input(&csv_path, hasher)?;
            directives.push(RecordDirective {
                container,
                csv_path,
                quasi_identifiers,
            });
        }
    }
    Ok(directives)
}

fn named(node: &Node, what: &str) -> Result<Id> {
    node.as_iri()
        .cloned()
        .ok_or_else(|| Error::Environment(format!("{what} must be a named node")))
}

fn local_name(id: &Id) -> String {
    let s = id.as_str();
    let cut = s.rfind(['#', '/']).map(|i| i + 1).unwrap_or(0);
    s[cut..].to_string()
}

fn read_input(path: &Path, hasher: &mut InputHasher) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| {
        Error::Environment(format!("cannot read '{}': {e}", path.display()))
    })?;
    hasher.add(path, &bytes);
    String::from_utf8(bytes)
        .map_err(|_| Error::Environment(format!("'{}' is not UTF-8", path.display())))
}

/// Order-independent content hash over every input document.
struct InputHasher {
    entries: Vec<(String, [u8; 32])>,
}

impl InputHasher {
    fn new() -> Self {
        InputHasher { entries: Vec::new() }
    }

    fn add(&mut self, path: &Path, bytes: &[u8]) {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_default();
        let mut h = Sha256::new();
        h.update(bytes);
        self.entries.push((name, h.finalize().into()));
    }

    fn finish(&self) -> [u8; 32] {
        let mut entries = self.entries.clone();
        entries.sort();
        entries.dedup();
        let mut h = Sha256::new();
        for (name, digest) in entries {
            h.update((name.len() as u64).to_le_bytes());
            h.update(name.as_bytes());
            h.update(digest);
        }
        h.finalize().into()
    }
}
