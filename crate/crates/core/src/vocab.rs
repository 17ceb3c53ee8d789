//! The core declaration vocabulary.
//!
//! Framework model files and environment files use these terms. Bundled
//! documents bind the namespace to the `fw:` prefix; the full IRIs below are
//! what the engine matches after prefix expansion.

use crate::ids::Id;

/// Namespace for the core vocabulary.
pub const FW_NS: &str = "https://framewise.dev/ns/core#";
/// Namespace of the bundled base taxonomy.
pub const BASE_NS: &str = "https://framewise.dev/ns/base#";
/// rdf:type, written `a` in documents.
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

macro_rules! fw_terms {
    ($($name:ident => $local:literal),* $(,)?) => {
        $(pub fn $name() -> Id { Id::new(concat!("https://framewise.dev/ns/core#", $local)) })*
    };
}

fw_terms! {
    // classes
    framework => "Framework",
    facet => "Facet",
    compliance_label => "ComplianceLabel",
    data_container => "DataContainer",
    governance_scope => "GovernanceScope",
    conditional_implication => "ConditionalImplication",
    has_label_condition => "HasLabelCondition",
    contains_label_condition => "ContainsLabelCondition",
    relation_label_condition => "RelationLabelCondition",
    comparison_condition => "ComparisonCondition",
    composite_condition => "CompositeCondition",
    label_parameter => "LabelParameter",

    // framework and label declarations
    extends => "extends",
    in_facet => "inFacet",
    blocks_release => "blocksRelease",
    has_parameter_schema => "hasParameterSchema",
    parameter_name => "parameterName",
    parameter_kind => "parameterKind",
    integer_kind => "IntegerKind",
    decimal_kind => "DecimalKind",
    string_kind => "StringKind",
    boolean_kind => "BooleanKind",

    // rule declarations
    declares_subclass_of => "declaresSubclassOf",
    declares_implication => "declaresImplication",
    declares_equivalent => "declaresEquivalent",
    declares_propagation => "declaresPropagation",
    from_label => "fromLabel",
    from_any_label => "fromAnyLabel",
    from_all_labels => "fromAllLabels",
    to_label => "toLabel",
    is_subclass_of => "isSubclassOf",
    has_condition => "hasCondition",
    propagates_label => "propagatesLabel",
    propagates_facet => "propagatesFacet",
    propagation_direction => "propagationDirection",
    inward => "Inward",
    outward => "Outward",
    peer => "Peer",
    joinable => "Joinable",

    // condition bodies
    requires_label => "requiresLabel",
    requires_contains => "requiresContains",
    on_relation => "onRelation",
    rel_self => "Self",
    rel_child => "Child",
    rel_parent => "Parent",
    rel_descendant => "Descendant",
    rel_sibling => "Sibling",
    left_source => "leftSource",
    right_source => "rightSource",
    source_type => "sourceType",
    source_label => "sourceLabel",
    source_parameter => "sourceParameter",
    default_value => "defaultValue",
    comparison_operator => "comparisonOperator",
    less_than => "lessThan",
    less_or_equal => "lessOrEqual",
    greater_than => "greaterThan",
    greater_or_equal => "greaterOrEqual",
    equal => "equal",
    logical_operator => "logicalOperator",
    op_and => "AND",
    op_or => "OR",

    // environment declarations
    contains => "contains",
    joinable_with => "joinableWith",
    includes_container => "includesContainer",
    has_ground_label => "hasGroundLabel",
    contains_label => "containsLabel",
    label => "label",
    parameter => "parameter",
    records_source => "recordsSource",
    csv_path => "csvPath",
    quasi_identifiers => "quasiIdentifiers",
}

/// Label the statistics pass asserts, declared by the base bundle.
pub fn kanonymity_analysis() -> Id {
    Id::new("https://framewise.dev/ns/base#KAnonymityAnalysis")
}

/// Parameter carrying the measured minimum cohort size.
pub const MINIMUM_COHORT_SIZE: &str = "minimumCohortSize";

pub fn rdf_type() -> Id {
    Id::new(RDF_TYPE)
}

/// Conventional suffix of the per-scope configuration container that may
/// carry threshold labels consulted during parameter resolution.
pub const SCOPE_CONFIG_SUFFIX: &str = "#config";

pub fn scope_config_container(scope: &Id) -> Id {
    Id::new(format!("{}{}", scope, SCOPE_CONFIG_SUFFIX))
}
