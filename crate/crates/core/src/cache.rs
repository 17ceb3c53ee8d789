//! Binary cache of a computed store.
//!
//! Layout: magic, format version, input content hash, then length-prefixed
//! sections for prefixes, environment, model summary, assertions,
//! containment facts, evaluation records, and derivations. The cache is a
//! private format, not an interchange format; a version bump invalidates
//! old files. Staleness is detected by comparing the stored input hash
//! against a fresh hash of the input documents.
//!
//! A cached store is post-fixed-point: queries, comparisons, and
//! explanations work without re-running load or iterate, but rule sets are
//! not stored, so further inference needs a full load.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Decimal, Scalar};
use crate::ids::{Id, PrefixMap};
use crate::loader::LoadedSystem;
use crate::manifest::FrameworkKind;
use crate::metamodel::{
    AssertionKey, ContainmentKey, Environment, EvaluationKey, Facet, Framework, Label, Model,
    ParameterKind, ParameterSpec,
};
use crate::store::{ContainmentOrigin, Derivation, Premise, Store};

const MAGIC: &[u8; 8] = b"FWCACHE\0";
const VERSION: u32 = 1;

/// Serialize a loaded system's results to a cache file.
pub fn save_cache(path: &Path, system: &LoadedSystem) -> Result<()> {
    let mut w = Writer::default();
    w.bytes(MAGIC);
    w.u32(VERSION);
    w.bytes(&system.input_hash);

    // prefixes
    let prefixes: Vec<(String, String)> = system
        .prefixes
        .iter()
        .map(|(p, n)| (p.to_string(), n.to_string()))
        .collect();
    w.u64(prefixes.len() as u64);
    for (p, n) in prefixes {
        w.string(&p);
        w.string(&n);
    }

    // environment
    w.u64(system.env.containers.len() as u64);
    for container in system.env.containers.values() {
        w.id(&container.id);
        w.opt_id(container.parent.as_ref());
        w.u64(container.joinable.len() as u64);
        for j in &container.joinable {
            w.id(j);
        }
    }
    w.u64(system.env.scopes.len() as u64);
    for scope in system.env.scopes.values() {
        w.id(&scope.id);
        w.u64(scope.visible.len() as u64);
        for v in &scope.visible {
            w.id(v);
        }
    }

    // model summary (rules are not stored)
    w.u64(system.model.facets.len() as u64);
    for facet in system.model.facets.values() {
        w.id(&facet.id);
        w.string(&facet.name);
        w.id(&facet.framework);
    }
    w.u64(system.model.labels.len() as u64);
    for label in system.model.labels.values() {
        w.id(&label.id);
        w.id(&label.facet);
        w.id(&label.framework);
        w.u64(label.parameter_schema.len() as u64);
        for spec in &label.parameter_schema {
            w.string(&spec.name);
            w.u8(parameter_kind_tag(spec.kind));
        }
    }
    w.u64(system.model.frameworks.len() as u64);
    for framework in system.model.frameworks.values() {
        w.id(&framework.id);
        w.string(&framework.bundle);
        w.opt_string(framework.title.as_deref());
        w.u8(kind_tag(framework.kind));
        w.u64(framework.parents.len() as u64);
        for p in &framework.parents {
            w.id(p);
        }
    }
    w.u64(system.model.load_order.len() as u64);
    for f in &system.model.load_order {
        w.id(f);
    }
    w.u64(system.model.blocks_release.len() as u64);
    for l in &system.model.blocks_release {
        w.id(l);
    }
    w.u64(system.selected.len() as u64);
    for f in &system.selected {
        w.id(f);
    }

    // assertions
    w.u64(system.store.assertions().count() as u64);
    for (key, data) in system.store.assertions() {
        w.assertion_key(key);
        w.u8(data.ground as u8);
        w.u64(data.parameters.len() as u64);
        for (name, value) in &data.parameters {
            w.string(name);
            w.scalar(value);
        }
    }

    // containments
    w.u64(system.store.containments().count() as u64);
    for (key, origin) in system.store.containments() {
        w.id(&key.container);
        w.id(&key.label);
        w.id(&key.scope);
        match origin {
            ContainmentOrigin::Ground => w.u8(0),
            ContainmentOrigin::Derived(witness) => {
                w.u8(1);
                w.assertion_key(witness);
            }
        }
    }

    // evaluations
    w.u64(system.store.evaluations().count() as u64);
    for (key, result) in system.store.evaluations() {
        w.id(&key.condition);
        w.id(&key.container);
        w.id(&key.scope);
        w.u8(*result as u8);
    }

    // derivations
    w.u64(system.store.provenance_entries().count() as u64);
    for (key, derivation) in system.store.provenance_entries() {
        w.assertion_key(key);
        w.string(&derivation.rule);
        w.id(&derivation.framework);
        w.u64(derivation.premises.len() as u64);
        for premise in &derivation.premises {
            match premise {
                Premise::Assertion(k) => {
                    w.u8(0);
                    w.assertion_key(k);
                }
                Premise::Containment(k) => {
                    w.u8(1);
                    w.id(&k.container);
                    w.id(&k.label);
                    w.id(&k.scope);
                }
                Premise::Condition { id, display } => {
                    w.u8(2);
                    w.id(id);
                    w.string(display);
                }
            }
        }
    }

    fs::write(path, w.buf)?;
    Ok(())
}

/// Load a cache written by [`save_cache`], verifying format version and
/// input hash. The returned system has no rule sets; it serves queries,
/// comparisons, and explanations.
pub fn load_cache(path: &Path, expected_hash: &[u8; 32]) -> Result<LoadedSystem> {
    let data = fs::read(path)?;
    let mut r = Reader { data: &data, pos: 0 };

    let magic = r.take(8)?;
    if magic != MAGIC {
        return Err(Error::CacheCorrupt("bad magic".to_string()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::CacheVersion {
            found: version,
            expected: VERSION,
        });
    }
    let stored_hash: [u8; 32] = r
        .take(32)?
        .try_into()
        .map_err(|_| Error::CacheCorrupt("truncated hash".to_string()))?;
    if &stored_hash != expected_hash {
        return Err(Error::CacheStale);
    }

    let mut prefixes = PrefixMap::new();
    for _ in 0..r.u64()? {
        let p = r.string()?;
        let n = r.string()?;
        prefixes.declare(&p, &n);
    }

    let mut env = Environment::new();
    let container_count = r.u64()?;
    let mut joins: Vec<(Id, Vec<Id>)> = Vec::new();
    for _ in 0..container_count {
        let id = r.id()?;
        let parent = r.opt_id()?;
        let mut joinable = Vec::new();
        for _ in 0..r.u64()? {
            joinable.push(r.id()?);
        }
        env.add_container(id.clone(), parent)
            .map_err(|e| Error::CacheCorrupt(e.to_string()))?;
        joins.push((id, joinable));
    }
    for (id, joinable) in joins {
        for j in joinable {
            env.add_joinable(&id, &j)
                .map_err(|e| Error::CacheCorrupt(e.to_string()))?;
        }
    }
    for _ in 0..r.u64()? {
        let id = r.id()?;
        env.add_scope(id.clone());
        for _ in 0..r.u64()? {
            let v = r.id()?;
            env.add_visibility(&id, &v)
                .map_err(|e| Error::CacheCorrupt(e.to_string()))?;
        }
    }

    let mut model = Model::default();
    for _ in 0..r.u64()? {
        let id = r.id()?;
        let name = r.string()?;
        let framework = r.id()?;
        model.facets.insert(
            id.clone(),
            Facet {
                id,
                name,
                framework,
            },
        );
    }
    for _ in 0..r.u64()? {
        let id = r.id()?;
        let facet = r.id()?;
        let framework = r.id()?;
        let mut parameter_schema = Vec::new();
        for _ in 0..r.u64()? {
            let name = r.string()?;
            let kind = parameter_kind_from(r.u8()?)?;
            parameter_schema.push(ParameterSpec { name, kind });
        }
        model.labels.insert(
            id.clone(),
            Label {
                id,
                facet,
                framework,
                parameter_schema,
            },
        );
    }
    for _ in 0..r.u64()? {
        let id = r.id()?;
        let bundle = r.string()?;
        let title = r.opt_string()?;
        let kind = kind_from(r.u8()?)?;
        let mut parents = Vec::new();
        for _ in 0..r.u64()? {
            parents.push(r.id()?);
        }
        model.frameworks.insert(
            id.clone(),
            Framework {
                id,
                bundle,
                title,
                kind,
                parents,
                declared_rules: Vec::new(),
                declared_labels: Vec::new(),
                declared_facets: Vec::new(),
            },
        );
    }
    for _ in 0..r.u64()? {
        let f = r.id()?;
        model.load_order.push(f);
    }
    for _ in 0..r.u64()? {
        let l = r.id()?;
        model.blocks_release.insert(l);
    }
    let mut selected = BTreeSet::new();
    for _ in 0..r.u64()? {
        selected.insert(r.id()?);
    }

    let mut store = Store::new();
    for _ in 0..r.u64()? {
        let key = r.assertion_key()?;
        let ground = r.u8()? == 1;
        let mut parameters = BTreeMap::new();
        for _ in 0..r.u64()? {
            let name = r.string()?;
            let value = r.scalar()?;
            parameters.insert(name, value);
        }
        let inserted = if ground {
            store
                .insert_ground(&env, key, parameters)
                .map_err(|e| Error::CacheCorrupt(e.to_string()))?
        } else {
            store
                .insert_derived(
                    &env,
                    key.clone(),
                    Derivation {
                        rule: String::new(),
                        framework: key.framework.clone(),
                        premises: Vec::new(),
                    },
                )
                .map_err(|e| Error::CacheCorrupt(e.to_string()))?
        };
        if !inserted {
            return Err(Error::CacheCorrupt("duplicate assertion record".to_string()));
        }
    }
    for _ in 0..r.u64()? {
        let key = ContainmentKey {
            container: r.id()?,
            label: r.id()?,
            scope: r.id()?,
        };
        match r.u8()? {
            0 => {
                store.insert_ground_containment(key);
            }
            1 => {
                let witness = r.assertion_key()?;
                store.insert_cached_containment(key, ContainmentOrigin::Derived(witness));
            }
            other => return Err(Error::CacheCorrupt(format!("bad containment tag {other}"))),
        }
    }
    for _ in 0..r.u64()? {
        let key = EvaluationKey {
            condition: r.id()?,
            container: r.id()?,
            scope: r.id()?,
        };
        let result = r.u8()? == 1;
        store.record_evaluation(key, result);
    }
    for _ in 0..r.u64()? {
        let key = r.assertion_key()?;
        let rule = r.string()?;
        let framework = r.id()?;
        let mut premises = Vec::new();
        for _ in 0..r.u64()? {
            premises.push(match r.u8()? {
                0 => Premise::Assertion(r.assertion_key()?),
                1 => Premise::Containment(ContainmentKey {
                    container: r.id()?,
                    label: r.id()?,
                    scope: r.id()?,
                }),
                2 => Premise::Condition {
                    id: r.id()?,
                    display: r.string()?,
                },
                other => return Err(Error::CacheCorrupt(format!("bad premise tag {other}"))),
            });
        }
        store.replace_derivation(
            &key,
            Derivation {
                rule,
                framework,
                premises,
            },
        );
    }

    if r.pos != data.len() {
        return Err(Error::CacheCorrupt("trailing bytes".to_string()));
    }

    Ok(LoadedSystem {
        model,
        env,
        store,
        rules: BTreeMap::new(),
        selected,
        prefixes,
        warnings: Vec::new(),
        input_hash: stored_hash,
    })
}

fn kind_tag(kind: FrameworkKind) -> u8 {
    match kind {
        FrameworkKind::Internal => 0,
        FrameworkKind::Core => 1,
        FrameworkKind::Privacy => 2,
        FrameworkKind::Custom => 3,
    }
}

fn kind_from(tag: u8) -> Result<FrameworkKind> {
    Ok(match tag {
        0 => FrameworkKind::Internal,
        1 => FrameworkKind::Core,
        2 => FrameworkKind::Privacy,
        3 => FrameworkKind::Custom,
        other => return Err(Error::CacheCorrupt(format!("bad framework kind {other}"))),
    })
}

fn parameter_kind_tag(kind: ParameterKind) -> u8 {
    match kind {
        ParameterKind::Integer => 0,
        ParameterKind::Decimal => 1,
        ParameterKind::String => 2,
        ParameterKind::Boolean => 3,
    }
}

fn parameter_kind_from(tag: u8) -> Result<ParameterKind> {
    Ok(match tag {
        0 => ParameterKind::Integer,
        1 => ParameterKind::Decimal,
        2 => ParameterKind::String,
        3 => ParameterKind::Boolean,
        other => return Err(Error::CacheCorrupt(format!("bad parameter kind {other}"))),
    })
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn string(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.buf.extend_from_slice(s.as_bytes());
    }
    fn opt_string(&mut self, s: Option<&str>) {
        match s {
            Some(s) => {
                self.u8(1);
                self.string(s);
            }
            None => self.u8(0),
        }
    }
    fn id(&mut self, id: &Id) {
        self.string(id.as_str());
    }
    fn opt_id(&mut self, id: Option<&Id>) {
        match id {
            Some(id) => {
                self.u8(1);
                self.id(id);
            }
            None => self.u8(0),
        }
    }
    fn assertion_key(&mut self, key: &AssertionKey) {
        self.id(&key.container);
        self.id(&key.label);
        self.id(&key.scope);
        self.id(&key.framework);
    }
    fn scalar(&mut self, value: &Scalar) {
        match value {
            Scalar::Bool(b) => {
                self.u8(0);
                self.u8(*b as u8);
            }
            Scalar::Int(i) => {
                self.u8(1);
                self.buf.extend_from_slice(&i.to_le_bytes());
            }
            Scalar::Dec(d) => {
                self.u8(2);
                self.buf.extend_from_slice(&d.0.to_bits().to_le_bytes());
            }
            Scalar::Str(s) => {
                self.u8(3);
                self.string(s);
            }
        }
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::CacheCorrupt("unexpected end of file".to_string()));
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn string(&mut self) -> Result<String> {
        let len = self.u64()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::CacheCorrupt("invalid UTF-8".to_string()))
    }
    fn opt_string(&mut self) -> Result<Option<String>> {
        Ok(match self.u8()? {
            0 => None,
            _ => Some(self.string()?),
        })
    }
    fn id(&mut self) -> Result<Id> {
        Ok(Id::from(self.string()?))
    }
    fn opt_id(&mut self) -> Result<Option<Id>> {
        Ok(match self.u8()? {
            0 => None,
            _ => Some(self.id()?),
        })
    }
    fn assertion_key(&mut self) -> Result<AssertionKey> {
        Ok(AssertionKey {
            container: self.id()?,
            label: self.id()?,
            scope: self.id()?,
            framework: self.id()?,
        })
    }
    fn scalar(&mut self) -> Result<Scalar> {
        Ok(match self.u8()? {
            0 => Scalar::Bool(self.u8()? == 1),
            1 => Scalar::Int(i64::from_le_bytes(self.take(8)?.try_into().unwrap())),
            2 => Scalar::Dec(Decimal(f64::from_bits(u64::from_le_bytes(
                self.take(8)?.try_into().unwrap(),
            )))),
            3 => Scalar::Str(self.string()?),
            other => return Err(Error::CacheCorrupt(format!("bad scalar tag {other}"))),
        })
    }
}
