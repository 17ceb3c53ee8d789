//! k-anonymity over tabular record data.
//!
//! Records are partitioned by their quasi-identifier projection; k is the
//! minimum group size. Values compare by exact string equality after
//! trimming. The measurement enters the store as a ground statistical
//! assertion carrying a `minimumCohortSize` parameter, which threshold
//! rules consume.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Scalar;
use crate::ids::Id;
use crate::metamodel::{AssertionKey, Environment};
use crate::store::Store;
use crate::vocab;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordTable {
    pub container: Id,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub quasi_identifiers: Vec<String>,
}

impl RecordTable {
    /// Read a table from CSV. The first row is the header; every row must
    /// match its arity, and the quasi-identifiers must name header columns.
    pub fn from_csv_path(
        container: Id,
        path: &Path,
        quasi_identifiers: Vec<String>,
    ) -> Result<RecordTable> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::RecordTable(format!("{}: {e}", path.display())))?;
        let columns: Vec<String> = reader
            .headers()
            .map_err(|e| Error::RecordTable(format!("{}: {e}", path.display())))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record
                .map_err(|e| Error::RecordTable(format!("{}: {e}", path.display())))?;
            rows.push(record.iter().map(|v| v.to_string()).collect());
        }
        let table = RecordTable {
            container,
            columns,
            rows,
            quasi_identifiers,
        };
        table.check_shape()?;
        Ok(table)
    }

    fn check_shape(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(Error::RecordTable(format!(
                    "row {} has {} values, expected {}",
                    i + 1,
                    row.len(),
                    self.columns.len()
                )));
            }
        }
        for qi in &self.quasi_identifiers {
            if !self.columns.contains(qi) {
                return Err(Error::RecordTable(format!(
                    "quasi-identifier '{qi}' is not a column of '{}'",
                    self.container
                )));
            }
        }
        Ok(())
    }
}

/// Minimum cohort size over the partition of rows by quasi-identifier
/// values. An empty quasi-identifier set puts every row in one group, so
/// k equals the row count.
pub fn compute_k(table: &RecordTable) -> Result<usize> {
    if table.rows.is_empty() {
        return Err(Error::EmptyRecordTable);
    }
    table.check_shape()?;
    let qi_indexes: Vec<usize> = table
        .quasi_identifiers
        .iter()
        .map(|qi| table.columns.iter().position(|c| c == qi).expect("checked"))
        .collect();
    let mut groups: BTreeMap<Vec<&str>, usize> = BTreeMap::new();
    for row in &table.rows {
        let key: Vec<&str> = qi_indexes.iter().map(|&i| row[i].trim()).collect();
        *groups.entry(key).or_insert(0) += 1;
    }
    Ok(*groups.values().min().expect("non-empty table"))
}

/// Assert the measurement as a ground fact on (container, scope), under
/// the base framework. Idempotent per (container, scope).
pub fn emit_analysis(
    store: &mut Store,
    env: &Environment,
    table: &RecordTable,
    scope: &Id,
    framework: &Id,
) -> Result<AssertionKey> {
    let k = compute_k(table)?;
    let key = AssertionKey::new(
        table.container.clone(),
        vocab::kanonymity_analysis(),
        scope.clone(),
        framework.clone(),
    );
    let mut parameters = BTreeMap::new();
    parameters.insert(
        vocab::MINIMUM_COHORT_SIZE.to_string(),
        Scalar::Int(k as i64),
    );
    store.insert_ground(env, key.clone(), parameters)?;
    Ok(key)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(columns: &[&str], rows: &[&[&str]], qi: &[&str]) -> RecordTable {
        RecordTable {
            container: Id::new("http://t.test/table"),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: rows
                .iter()
                .map(|r| r.iter().map(|v| v.to_string()).collect())
                .collect(),
            quasi_identifiers: qi.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn minimum_group_size_wins() {
        let t = table(
            &["age", "gender"],
            &[&["30", "M"], &["30", "M"], &["30", "F"]],
            &["age", "gender"],
        );
        assert_eq!(compute_k(&t).unwrap(), 1);
    }

    #[test]
    fn empty_quasi_identifier_set_groups_everything() {
        let t = table(&["age"], &[&["1"], &["2"], &["3"]], &[]);
        assert_eq!(compute_k(&t).unwrap(), 3);
    }

    #[test]
    fn identical_rows_give_row_count() {
        let t = table(
            &["age", "gender"],
            &[&["30", "M"], &["30", "M"], &["30", "M"]],
            &["age", "gender"],
        );
        assert_eq!(compute_k(&t).unwrap(), 3);
    }

    #[test]
    fn empty_table_is_an_error() {
        let t = table(&["age"], &[], &["age"]);
        assert!(matches!(compute_k(&t), Err(Error::EmptyRecordTable)));
    }

    #[test]
    fn values_trim_before_comparison() {
        let t = table(&["a"], &[&[" x"], &["x "], &["y"]], &["a"]);
        assert_eq!(compute_k(&t).unwrap(), 1); // y is alone
    }

    #[test]
    fn unknown_quasi_identifier_is_rejected() {
        let t = table(&["a"], &[&["1"]], &["ghost"]);
        assert!(compute_k(&t).is_err());
    }

    #[test]
    fn emit_is_idempotent_per_container_scope() {
        let mut env = Environment::new();
        let c = Id::new("http://t.test/table");
        let g = Id::new("http://t.test/g");
        let f = Id::new("http://t.test/base");
        env.add_container(c.clone(), None).unwrap();
        env.add_scope(g.clone());
        env.add_visibility(&g, &c).unwrap();
        let mut store = Store::new();
        let t = table(&["age"], &[&["30"], &["30"]], &["age"]);
        let key = emit_analysis(&mut store, &env, &t, &g, &f).unwrap();
        emit_analysis(&mut store, &env, &t, &g, &f).unwrap();
        assert_eq!(store.assertion_count(), 1);
        assert_eq!(
            store.get(&key).unwrap().parameters[vocab::MINIMUM_COHORT_SIZE],
            Scalar::Int(2)
        );
        assert!(store.get(&key).unwrap().ground);
    }
}
