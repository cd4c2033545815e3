//! Replica location service: logical file names, collections, physical locations.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("duplicate lfn {0:?}")]
    DuplicateLfn(String),
    #[error("unknown lfn {0:?}")]
    UnknownLfn(String),
    #[error("duplicate replica {0} for {1:?}")]
    DuplicateReplica(PhysicalLocation, String),
    #[error("unknown replica {0} for {1:?}")]
    UnknownReplica(PhysicalLocation, String),
    #[error("file size must be positive")]
    ZeroSize,
    #[error("invalid lfn {0:?}: {1}")]
    InvalidLfn(String, &'static str),
    #[error("invalid location {0:?}: {1}")]
    InvalidLocation(String, &'static str),
    #[error("snapshot line {line}: {message}")]
    Snapshot { line: usize, message: String },
}

/// A concrete copy of a logical file: node plus storage path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhysicalLocation {
    pub node: String,
    pub path: String,
}

impl PhysicalLocation {
    pub fn new(node: impl Into<String>, path: impl Into<String>) -> Self {
        PhysicalLocation {
            node: node.into(),
            path: path.into(),
        }
    }

    fn validate(&self) -> Result<(), CatalogError> {
        let bad = |s: &str, what| CatalogError::InvalidLocation(s.to_string(), what);
        if self.node.is_empty() {
            return Err(bad(&self.node, "empty node"));
        }
        if self.node.contains([':', ',', '|']) || self.node.chars().any(char::is_whitespace) {
            return Err(bad(&self.node, "node contains reserved characters"));
        }
        if self.path.is_empty() {
            return Err(bad(&self.path, "empty path"));
        }
        if self.path.contains([',', '|']) || self.path.chars().any(char::is_whitespace) {
            return Err(bad(&self.path, "path contains reserved characters"));
        }
        Ok(())
    }
}

impl std::fmt::Display for PhysicalLocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.node, self.path)
    }
}

/// One logical file: its collection, size, and replica set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogRecord {
    pub lfn: String,
    pub collection: String,
    pub size_bytes: u64,
    pub replicas: BTreeSet<PhysicalLocation>,
}

/// The replica catalog. A single logical service; all mutation goes through
/// one writer.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Catalog {
    records: BTreeMap<String, CatalogRecord>,
    collections: BTreeMap<String, BTreeSet<String>>,
}

fn validate_lfn(lfn: &str) -> Result<(), CatalogError> {
    if lfn.is_empty() {
        return Err(CatalogError::InvalidLfn(lfn.to_string(), "empty"));
    }
    if lfn.chars().any(char::is_whitespace) {
        return Err(CatalogError::InvalidLfn(
            lfn.to_string(),
            "contains whitespace",
        ));
    }
    if lfn.contains('|') {
        return Err(CatalogError::InvalidLfn(
            lfn.to_string(),
            "contains reserved character",
        ));
    }
    Ok(())
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Register a new logical file with an empty replica set.
    pub fn register(
        &mut self,
        lfn: &str,
        collection: &str,
        size_bytes: u64,
    ) -> Result<&CatalogRecord, CatalogError> {
        validate_lfn(lfn)?;
        if size_bytes == 0 {
            return Err(CatalogError::ZeroSize);
        }
        if self.records.contains_key(lfn) {
            return Err(CatalogError::DuplicateLfn(lfn.to_string()));
        }
        self.collections
            .entry(collection.to_string())
            .or_default()
            .insert(lfn.to_string());
        let record = CatalogRecord {
            lfn: lfn.to_string(),
            collection: collection.to_string(),
            size_bytes,
            replicas: BTreeSet::new(),
        };
        Ok(self.records.entry(lfn.to_string()).or_insert(record))
    }

    /// Add a physical location for an existing logical file.
    pub fn add_replica(
        &mut self,
        lfn: &str,
        location: PhysicalLocation,
    ) -> Result<&CatalogRecord, CatalogError> {
        location.validate()?;
        let record = self
            .records
            .get_mut(lfn)
            .ok_or_else(|| CatalogError::UnknownLfn(lfn.to_string()))?;
        if !record.replicas.insert(location.clone()) {
            return Err(CatalogError::DuplicateReplica(location, lfn.to_string()));
        }
        Ok(record)
    }

    /// Remove a physical location. The record persists even with no replicas.
    pub fn remove_replica(
        &mut self,
        lfn: &str,
        location: &PhysicalLocation,
    ) -> Result<&CatalogRecord, CatalogError> {
        let record = self
            .records
            .get_mut(lfn)
            .ok_or_else(|| CatalogError::UnknownLfn(lfn.to_string()))?;
        if !record.replicas.remove(location) {
            return Err(CatalogError::UnknownReplica(
                location.clone(),
                lfn.to_string(),
            ));
        }
        Ok(record)
    }

    /// Drop a record and all of its replicas atomically.
    pub fn unregister(&mut self, lfn: &str) -> Result<CatalogRecord, CatalogError> {
        let record = self
            .records
            .remove(lfn)
            .ok_or_else(|| CatalogError::UnknownLfn(lfn.to_string()))?;
        if let Some(members) = self.collections.get_mut(&record.collection) {
            members.remove(lfn);
            if members.is_empty() {
                self.collections.remove(&record.collection);
            }
        }
        Ok(record)
    }

    /// Query a record. Replicas come back ordered by (node, path).
    pub fn lookup(&self, lfn: &str) -> Result<&CatalogRecord, CatalogError> {
        self.records
            .get(lfn)
            .ok_or_else(|| CatalogError::UnknownLfn(lfn.to_string()))
    }

    /// Members of a collection in lexicographic order. Unknown collections
    /// are empty.
    pub fn list_collection(&self, collection: &str) -> Vec<&str> {
        self.collections
            .get(collection)
            .map(|set| set.iter().map(String::as_str).collect())
            .unwrap_or_default()
    }

    pub fn records(&self) -> impl Iterator<Item = &CatalogRecord> {
        self.records.values()
    }

    /// Serialize to the snapshot format: one tab-separated record per line,
    /// sorted by lfn; replicas joined by commas, `-` when empty.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for record in self.records.values() {
            let replicas = if record.replicas.is_empty() {
                "-".to_string()
            } else {
                record
                    .replicas
                    .iter()
                    .map(|loc| loc.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                record.lfn, record.collection, record.size_bytes, replicas
            ));
        }
        out
    }

    /// Rebuild a catalog from snapshot text.
    pub fn restore(text: &str) -> Result<Self, CatalogError> {
        let mut catalog = Catalog::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(CatalogError::Snapshot {
                    line: lineno,
                    message: format!("expected 4 tab-separated fields, got {}", fields.len()),
                });
            }
            let size: u64 = fields[2].parse().map_err(|_| CatalogError::Snapshot {
                line: lineno,
                message: format!("invalid size {:?}", fields[2]),
            })?;
            catalog
                .register(fields[0], fields[1], size)
                .map_err(|e| CatalogError::Snapshot {
                    line: lineno,
                    message: e.to_string(),
                })?;
            if fields[3] != "-" {
                for part in fields[3].split(',') {
                    let (node, path) = part.split_once(':').ok_or(CatalogError::Snapshot {
                        line: lineno,
                        message: format!("invalid replica {part:?}"),
                    })?;
                    catalog
                        .add_replica(fields[0], PhysicalLocation::new(node, path))
                        .map_err(|e| CatalogError::Snapshot {
                            line: lineno,
                            message: e.to_string(),
                        })?;
                }
            }
        }
        Ok(catalog)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn loc(node: &str, path: &str) -> PhysicalLocation {
        PhysicalLocation::new(node, path)
    }

    #[test]
    fn register_starts_with_no_replicas() {
        let mut c = Catalog::new();
        let r = c.register("modis/A1/ch01", "area-A1", 300_000_000).unwrap();
        assert!(r.replicas.is_empty());
        let back = c.lookup("modis/A1/ch01").unwrap();
        assert_eq!(back.collection, "area-A1");
        assert_eq!(back.size_bytes, 300_000_000);
    }

    #[test]
    fn duplicate_registration_rejected() {
        let mut c = Catalog::new();
        c.register("f", "coll", 1).unwrap();
        assert_eq!(
            c.register("f", "coll", 1),
            Err(CatalogError::DuplicateLfn("f".into()))
        );
    }

    #[test]
    fn zero_size_rejected() {
        let mut c = Catalog::new();
        assert_eq!(c.register("f", "coll", 0), Err(CatalogError::ZeroSize));
    }

    #[test]
    fn add_and_remove_replicas() {
        let mut c = Catalog::new();
        c.register("f", "coll", 10).unwrap();
        c.add_replica("f", loc("n1", "/d/f")).unwrap();
        c.add_replica("f", loc("n2", "/d/f")).unwrap();
        assert_eq!(c.lookup("f").unwrap().replicas.len(), 2);

        let err = c.add_replica("f", loc("n1", "/d/f")).unwrap_err();
        assert!(matches!(err, CatalogError::DuplicateReplica(..)));

        c.remove_replica("f", &loc("n1", "/d/f")).unwrap();
        assert_eq!(c.lookup("f").unwrap().replicas.len(), 1);
        c.remove_replica("f", &loc("n2", "/d/f")).unwrap();
        assert!(c.lookup("f").unwrap().replicas.is_empty());

        let err = c.remove_replica("f", &loc("n2", "/d/f")).unwrap_err();
        assert!(matches!(err, CatalogError::UnknownReplica(..)));
    }

    #[test]
    fn replica_ops_on_unregistered_lfn_fail() {
        let mut c = Catalog::new();
        assert_eq!(
            c.add_replica("ghost", loc("n1", "/p")),
            Err(CatalogError::UnknownLfn("ghost".into()))
        );
    }

    #[test]
    fn lookup_orders_replicas_lexicographically() {
        let mut c = Catalog::new();
        c.register("f", "coll", 10).unwrap();
        c.add_replica("f", loc("n3", "/a")).unwrap();
        c.add_replica("f", loc("n1", "/z")).unwrap();
        c.add_replica("f", loc("n1", "/a")).unwrap();
        let mut expected = vec![loc("n1", "/a"), loc("n1", "/z"), loc("n3", "/a")];
        expected.sort();
        let got: Vec<_> = c.lookup("f").unwrap().replicas.iter().cloned().collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn list_collection_partitions_the_catalog() {
        let mut c = Catalog::new();
        assert!(c.list_collection("none").is_empty());
        for i in 1..=36 {
            c.register(&format!("g/ch{i:02}"), "granule-X", 100).unwrap();
        }
        c.register("other/f", "granule-Y", 100).unwrap();
        assert_eq!(c.list_collection("granule-X").len(), 36);
        assert_eq!(c.list_collection("granule-Y"), vec!["other/f"]);
    }

    #[test]
    fn whitespace_lfn_rejected() {
        let mut c = Catalog::new();
        assert!(matches!(
            c.register("bad name", "coll", 1),
            Err(CatalogError::InvalidLfn(..))
        ));
    }

    #[test]
    fn empty_catalog_snapshot_round_trip() {
        let c = Catalog::new();
        assert_eq!(Catalog::restore(&c.snapshot()).unwrap(), c);
    }

    #[test]
    fn truncated_snapshot_reports_line() {
        let text = "f\tcoll\t10\tn1:/p\nbroken\tline\n";
        match Catalog::restore(text) {
            Err(CatalogError::Snapshot { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected snapshot error, got {other:?}"),
        }
    }

    #[test]
    fn unregister_cascades() {
        let mut c = Catalog::new();
        c.register("f", "coll", 10).unwrap();
        c.add_replica("f", loc("n1", "/p")).unwrap();
        c.unregister("f").unwrap();
        assert!(c.is_empty());
        assert!(c.list_collection("coll").is_empty());
    }

    // Model-based check: the replica set always equals a plain set replay,
    // and snapshot/restore is lossless.
    proptest! {
        #[test]
        fn replica_set_matches_set_oracle(ops in prop::collection::vec((0u8..2, 0u8..4, 0u8..3), 0..60)) {
            let mut c = Catalog::new();
            c.register("f", "coll", 10).unwrap();
            let mut oracle: std::collections::BTreeSet<PhysicalLocation> = Default::default();
            for (op, node, path) in ops {
                let l = loc(&format!("n{node}"), &format!("/p{path}"));
                if op == 0 {
                    let expected = oracle.insert(l.clone());
                    prop_assert_eq!(c.add_replica("f", l).is_ok(), expected);
                } else {
                    let expected = oracle.remove(&l);
                    prop_assert_eq!(c.remove_replica("f", &l).is_ok(), expected);
                }
                let got: Vec<_> = c.lookup("f").unwrap().replicas.iter().cloned().collect();
                let want: Vec<_> = oracle.iter().cloned().collect();
                prop_assert_eq!(got, want);
            }
        }

        #[test]
        fn snapshot_restore_preserves_records(
            files in prop::collection::vec((1u8..40, 1u64..1_000_000, 0usize..4), 1..40)
        ) {
            let mut c = Catalog::new();
            for (i, (coll, size, replicas)) in files.iter().enumerate() {
                let lfn = format!("file/{i:03}");
                c.register(&lfn, &format!("coll-{coll}"), *size).unwrap();
                for r in 0..*replicas {
                    c.add_replica(&lfn, loc(&format!("n{r}"), &format!("/data/{i:03}"))).unwrap();
                }
            }
            let restored = Catalog::restore(&c.snapshot()).unwrap();
            prop_assert_eq!(restored, c);
        }
    }
}
