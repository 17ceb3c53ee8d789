//! Release-suitability verdicts across frameworks.
//!
//! A container is suitable for release under a framework iff neither the
//! framework nor any of its ancestors asserts a release-blocking label on
//! it in the scope under review. Labels opt in to blocking release with
//! `fw:blocksRelease true` in their declaring bundle; the bundled
//! frameworks mark their controlled categories (PHI, PersonalData, the
//! EMA risk flag).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ids::{Id, PrefixMap};
use crate::metamodel::{Environment, Model};
use crate::store::Store;

#[derive(Debug, Clone, Serialize)]
pub struct ControlledLabel {
    pub label: Id,
    pub by_framework: Id,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub container: Id,
    pub scope: Id,
    pub framework: Id,
    pub releasable: bool,
    pub controlled: Vec<ControlledLabel>,
}

/// Evaluate each (container, scope, framework) cell. Inference must have
/// run already; this only reads the store.
pub fn compare(
    store: &Store,
    env: &Environment,
    model: &Model,
    containers: &[Id],
    scopes: &[Id],
    frameworks: &[Id],
) -> Result<Vec<Verdict>> {
    for c in containers {
        if !env.containers.contains_key(c) {
            return Err(Error::UnknownContainer(c.clone()));
        }
    }
    for s in scopes {
        if !env.scopes.contains_key(s) {
            return Err(Error::UnknownScope(s.clone()));
        }
    }
    for f in frameworks {
        if !model.frameworks.contains_key(f) {
            return Err(Error::UnknownFramework(f.clone()));
        }
    }

    let mut verdicts = Vec::new();
    for container in containers {
        for scope in scopes {
            for framework in frameworks {
                let closure = model.closure(framework);
                let mut controlled = Vec::new();
                for key in store.keys_by_container(container) {
                    if &key.scope != scope {
                        continue;
                    }
                    if !closure.contains(&key.framework) {
                        continue;
                    }
                    if model.blocks_release.contains(&key.label) {
                        controlled.push(ControlledLabel {
                            label: key.label.clone(),
                            by_framework: key.framework.clone(),
                        });
                    }
                }
                controlled.sort_by(|a, b| (&a.label, &a.by_framework).cmp(&(&b.label, &b.by_framework)));
                verdicts.push(Verdict {
                    container: container.clone(),
                    scope: scope.clone(),
                    framework: framework.clone(),
                    releasable: controlled.is_empty(),
                    controlled,
                });
            }
        }
    }
    Ok(verdicts)
}

/// Render verdicts as a matrix: one row per (container, scope), one column
/// per framework, then an attribution line for every blocked cell.
pub fn render_matrix(verdicts: &[Verdict], model: &Model, map: &PrefixMap) -> String {
    let mut rows: Vec<(Id, Id)> = Vec::new();
    let mut frameworks: Vec<Id> = Vec::new();
    for v in verdicts {
        let row = (v.container.clone(), v.scope.clone());
        if !rows.contains(&row) {
            rows.push(row);
        }
        if !frameworks.contains(&v.framework) {
            frameworks.push(v.framework.clone());
        }
    }

    let header_of = |f: &Id| -> String {
        model
            .frameworks
            .get(f)
            .map(|fw| fw.bundle.clone())
            .unwrap_or_else(|| map.compact(f))
    };

    let row_label = |c: &Id, s: &Id| format!("{} @ {}", map.compact(c), map.compact(s));

    let mut col0 = rows
        .iter()
        .map(|(c, s)| row_label(c, s).len())
        .max()
        .unwrap_or(0);
    col0 = col0.max("container @ scope".len());

    let headers: Vec<String> = frameworks.iter().map(header_of).collect();
    let mut out = String::new();
    out.push_str(&format!("{:<col0$}", "container @ scope"));
    for h in &headers {
        out.push_str(&format!("  {h}"));
    }
    out.push('\n');

    let cell = |c: &Id, s: &Id, f: &Id| -> &'static str {
        verdicts
            .iter()
            .find(|v| &v.container == c && &v.scope == s && &v.framework == f)
            .map(|v| if v.releasable { "\u{2713}" } else { "\u{2717}" })
            .unwrap_or("-")
    };

    for (c, s) in &rows {
        out.push_str(&format!("{:<col0$}", row_label(c, s)));
        for (f, h) in frameworks.iter().zip(&headers) {
            let mark = cell(c, s, f);
            out.push_str(&format!("  {mark:<width$}", width = h.len()));
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    }

    let mut blocked: Vec<&Verdict> = verdicts.iter().filter(|v| !v.releasable).collect();
    blocked.sort_by_key(|v| (v.container.clone(), v.scope.clone(), v.framework.clone()));
    if !blocked.is_empty() {
        out.push('\n');
        for v in blocked {
            for c in &v.controlled {
                out.push_str(&format!(
                    "{} @ {} [{}]: {} (by {})\n",
                    map.compact(&v.container),
                    map.compact(&v.scope),
                    header_of(&v.framework),
                    map.compact(&c.label),
                    map.compact(&c.by_framework),
                ));
            }
        }
    }
    out
}
