//! Framework manifests (`framework.toml`) and dependency ordering.
//!
//! Manifests are flat key/value files: strings, arrays of strings, comments.
//! Only the handful of keys below is accepted; the reader is deliberately
//! minimal and does not implement general TOML.
//!
//! ```text
//! id = "gdpr"
//! title = "GDPR"                # optional display name
//! kind = "privacy"              # internal | core | privacy | custom
//! dependencies = ["base"]
//! model = ["model/gdpr.ttl"]    # parsed declaration documents
//! constructs = []               # unsupported; non-empty produces a warning
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Framework category, used as a load-order tiebreak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FrameworkKind {
    Internal,
    Core,
    Privacy,
    Custom,
}

impl FrameworkKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "internal" => Ok(FrameworkKind::Internal),
            "core" => Ok(FrameworkKind::Core),
            "privacy" => Ok(FrameworkKind::Privacy),
            "custom" => Ok(FrameworkKind::Custom),
            other => Err(Error::UnknownKind {
                kind: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for FrameworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameworkKind::Internal => "internal",
            FrameworkKind::Core => "core",
            FrameworkKind::Privacy => "privacy",
            FrameworkKind::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub id: String,
    pub title: Option<String>,
    pub kind: FrameworkKind,
    pub dependencies: Vec<String>,
    pub model_files: Vec<String>,
    pub construct_files: Vec<String>,
}

pub fn parse_manifest(text: &str, file: &str) -> Result<Manifest> {
    let err = |message: String| Error::Manifest {
        file: file.to_string(),
        message,
    };

    let mut values: BTreeMap<String, ManifestValue> = BTreeMap::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((lineno, raw)) = lines.next() {
        let line = strip_comment(raw).trim().to_string();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            return Err(err(format!(
                "line {}: sections are not supported; use flat keys",
                lineno + 1
            )));
        }
        let (key, mut rest) = line
            .split_once('=')
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .ok_or_else(|| err(format!("line {}: expected 'key = value'", lineno + 1)))?;
        if rest.starts_with('[') && !rest.ends_with(']') {
            // array continued over multiple lines
            while let Some((_, next)) = lines.next() {
                rest.push(' ');
                rest.push_str(strip_comment(next).trim());
                if rest.ends_with(']') {
                    break;
                }
            }
        }
        let value = parse_value(&rest)
            .ok_or_else(|| err(format!("line {}: malformed value for '{key}'", lineno + 1)))?;
        if values.insert(key.clone(), value).is_some() {
            return Err(err(format!("duplicate key '{key}'")));
        }
    }

    let take_string = |values: &BTreeMap<String, ManifestValue>, key: &str| match values.get(key) {
        Some(ManifestValue::Str(s)) => Ok(Some(s.clone())),
        Some(ManifestValue::Array(_)) => Err(err(format!("key '{key}' must be a string"))),
        None => Ok(None),
    };
    let take_array = |values: &BTreeMap<String, ManifestValue>, key: &str| match values.get(key) {
        Some(ManifestValue::Array(a)) => Ok(a.clone()),
        Some(ManifestValue::Str(_)) => Err(err(format!("key '{key}' must be an array"))),
        None => Ok(Vec::new()),
    };

    for key in values.keys() {
        if !matches!(
            key.as_str(),
            "id" | "title" | "kind" | "dependencies" | "model" | "constructs"
        ) {
            return Err(err(format!("unknown key '{key}'")));
        }
    }

    let id = take_string(&values, "id")?
        .ok_or_else(|| err("missing required key 'id'".to_string()))?;
    let kind = FrameworkKind::parse(
        &take_string(&values, "kind")?
            .ok_or_else(|| err("missing required key 'kind'".to_string()))?,
    )?;

    Ok(Manifest {
        id,
        title: take_string(&values, "title")?,
        kind,
        dependencies: take_array(&values, "dependencies")?,
        model_files: take_array(&values, "model")?,
        construct_files: take_array(&values, "constructs")?,
    })
}

enum ManifestValue {
    Str(String),
    Array(Vec<String>),
}

fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_value(text: &str) -> Option<ManifestValue> {
    let text = text.trim();
    if let Some(inner) = text.strip_prefix('"').and_then(|t| t.strip_suffix('"')) {
        if inner.contains('"') {
            return None;
        }
        return Some(ManifestValue::Str(inner.to_string()));
    }
    if let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        let inner = inner.trim();
        if inner.is_empty() {
            return Some(ManifestValue::Array(Vec::new()));
        }
        let mut items = Vec::new();
        for part in inner.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue; // trailing comma
            }
            let item = part.strip_prefix('"')?.strip_suffix('"')?;
            items.push(item.to_string());
        }
        return Some(ManifestValue::Array(items));
    }
    None
}

/// Order frameworks so every dependency precedes its dependents. Ties break
/// on (kind, id) so internal < core < privacy < custom loads first.
pub fn topo_order(manifests: &[Manifest]) -> Result<Vec<String>> {
    let by_id: BTreeMap<&str, &Manifest> =
        manifests.iter().map(|m| (m.id.as_str(), m)).collect();
    for m in manifests {
        for dep in &m.dependencies {
            if !by_id.contains_key(dep.as_str()) {
                return Err(Error::MissingDependency {
                    framework: m.id.clone(),
                    missing: dep.clone(),
                });
            }
        }
    }

    let mut remaining: BTreeSet<&str> = by_id.keys().copied().collect();
    let mut order = Vec::new();
    while !remaining.is_empty() {
        let mut ready: Vec<&Manifest> = remaining
            .iter()
            .map(|id| by_id[id])
            .filter(|m| {
                m.dependencies
                    .iter()
                    .all(|d| !remaining.contains(d.as_str()))
            })
            .collect();
        if ready.is_empty() {
            // Everything left participates in or depends on a cycle; report
            // the members of an actual cycle found by walking dependencies.
            let cycle = find_cycle(&by_id, &remaining);
            return Err(Error::DependencyCycle { cycle });
        }
        ready.sort_by_key(|m| (m.kind, m.id.clone()));
        let next = ready[0].id.clone();
        remaining.remove(next.as_str());
        order.push(next);
    }
    Ok(order)
}

fn find_cycle(by_id: &BTreeMap<&str, &Manifest>, remaining: &BTreeSet<&str>) -> Vec<String> {
    let start = *remaining.iter().next().expect("non-empty");
    let mut path: Vec<&str> = vec![start];
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    seen.insert(start);
    let mut current = start;
    loop {
        let next = by_id[current]
            .dependencies
            .iter()
            .map(|d| d.as_str())
            .find(|d| remaining.contains(d));
        match next {
            Some(n) if seen.contains(n) => {
                let from = path.iter().position(|p| *p == n).unwrap_or(0);
                let mut cycle: Vec<String> = path[from..].iter().map(|s| s.to_string()).collect();
                cycle.sort();
                return cycle;
            }
            Some(n) => {
                path.push(n);
                seen.insert(n);
                current = n;
            }
            None => {
                // current has no remaining deps; it should have been ready
                return path.iter().map(|s| s.to_string()).collect();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(id: &str, kind: FrameworkKind, deps: &[&str]) -> Manifest {
        Manifest {
            id: id.to_string(),
            title: None,
            kind,
            dependencies: deps.iter().map(|s| s.to_string()).collect(),
            model_files: vec![],
            construct_files: vec![],
        }
    }

    #[test]
    fn parses_privacy_manifest_with_dependency() {
        let text = r#"
            id = "ema"
            kind = "privacy"
            dependencies = ["gdpr"]
            model = ["model/ema.ttl"]
        "#;
        let m = parse_manifest(text, "framework.toml").unwrap();
        assert_eq!(m.id, "ema");
        assert_eq!(m.kind, FrameworkKind::Privacy);
        assert_eq!(m.dependencies, vec!["gdpr"]);
        assert_eq!(m.model_files, vec!["model/ema.ttl"]);
    }

    #[test]
    fn missing_dependencies_key_defaults_to_empty() {
        let m = parse_manifest("id = \"base\"\nkind = \"core\"\n", "f.toml").unwrap();
        assert!(m.dependencies.is_empty());
        assert!(m.construct_files.is_empty());
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let e = parse_manifest("id = \"x\"\nkind = \"exotic\"\n", "f.toml").unwrap_err();
        assert!(matches!(e, Error::UnknownKind { kind } if kind == "exotic"));
    }

    #[test]
    fn missing_id_is_rejected() {
        let e = parse_manifest("kind = \"core\"\n", "f.toml").unwrap_err();
        assert!(e.to_string().contains("missing required key 'id'"));
    }

    #[test]
    fn multiline_arrays_parse() {
        let text = "id = \"x\"\nkind = \"core\"\nmodel = [\n  \"a.ttl\",\n  \"b.ttl\",\n]\n";
        let m = parse_manifest(text, "f.toml").unwrap();
        assert_eq!(m.model_files, vec!["a.ttl", "b.ttl"]);
    }

    #[test]
    fn chain_orders_dependencies_first() {
        let ms = vec![
            manifest("ema", FrameworkKind::Privacy, &["gdpr"]),
            manifest("gdpr", FrameworkKind::Privacy, &["base"]),
            manifest("base", FrameworkKind::Core, &[]),
        ];
        assert_eq!(topo_order(&ms).unwrap(), vec!["base", "gdpr", "ema"]);
    }

    #[test]
    fn single_framework_orders_alone() {
        let ms = vec![manifest("solo", FrameworkKind::Custom, &[])];
        assert_eq!(topo_order(&ms).unwrap(), vec!["solo"]);
    }

    #[test]
    fn cycle_is_reported_with_members() {
        let ms = vec![
            manifest("a", FrameworkKind::Core, &["b"]),
            manifest("b", FrameworkKind::Core, &["a"]),
        ];
        match topo_order(&ms).unwrap_err() {
            Error::DependencyCycle { cycle } => assert_eq!(cycle, vec!["a", "b"]),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_dependency_is_reported() {
        let ms = vec![manifest("a", FrameworkKind::Core, &["ghost"])];
        assert!(matches!(
            topo_order(&ms).unwrap_err(),
            Error::MissingDependency { missing, .. } if missing == "ghost"
        ));
    }

    #[test]
    fn kind_breaks_ties_internal_first() {
        let ms = vec![
            manifest("zz-internal", FrameworkKind::Internal, &[]),
            manifest("aa-custom", FrameworkKind::Custom, &[]),
            manifest("mm-core", FrameworkKind::Core, &[]),
        ];
        assert_eq!(
            topo_order(&ms).unwrap(),
            vec!["zz-internal", "mm-core", "aa-custom"]
        );
    }
}
