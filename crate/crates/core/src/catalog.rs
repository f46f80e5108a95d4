//! Item attributes and dense feature vectors.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

/// Attribute names treated as continuous by default; their values are
/// replaced with decile buckets `d0`..`d9` at load time.
pub const DEFAULT_CONTINUOUS: &[&str] = &["price", "review", "star", "sale", "sales"];

#[derive(Debug, Clone, Default)]
struct Attribute {
    name: String,
    values: Vec<String>,
    lookup: FxHashMap<String, u32>,
}

impl Attribute {
    fn intern(&mut self, value: &str) -> u32 {
        if let Some(&id) = self.lookup.get(value) {
            return id;
        }
        let id = self.values.len() as u32;
        self.values.push(value.to_owned());
        self.lookup.insert(value.to_owned(), id);
        id
    }
}

#[derive(Debug, Clone, Default)]
struct Entry {
    // indexed by attribute position; None is an explicit null
    attrs: Vec<Option<u32>>,
    features: Option<Vec<f64>>,
}

/// Item id → categorical attributes and an optional dense feature vector.
///
/// Every attribute seen on any item is part of the schema; items that do not
/// carry it hold a null. All feature vectors share one dimension.
#[derive(Debug, Clone, Default)]
pub struct ItemCatalog {
    attributes: Vec<Attribute>,
    attribute_index: FxHashMap<String, usize>,
    entries: BTreeMap<String, Entry>,
    dim: Option<usize>,
}

impl ItemCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an item. Empty attribute values are stored as nulls.
    pub fn insert(
        &mut self,
        item: &str,
        attrs: &[(&str, &str)],
        features: Option<Vec<f64>>,
    ) -> Result<()> {
        if self.entries.contains_key(item) {
            return Err(Error::InvalidInput(format!(
                "duplicate catalog item {item:?}"
            )));
        }
        if let Some(f) = &features {
            match self.dim {
                Some(d) if d != f.len() => {
                    return Err(Error::InvalidInput(format!(
                        "item {item:?} has {} features, catalog dimension is {d}",
                        f.len()
                    )))
                }
                Some(_) => {}
                None => self.dim = Some(f.len()),
            }
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "item {item:?} has non-finite features"
                )));
            }
        }
        let mut entry = Entry {
            attrs: Vec::new(),
            features,
        };
        for &(name, value) in attrs {
            let idx = self.attribute_slot(name);
            if entry.attrs.len() <= idx {
                entry.attrs.resize(idx + 1, None);
            }
            if !value.is_empty() {
                entry.attrs[idx] = Some(self.attributes[idx].intern(value));
            }
        }
        self.entries.insert(item.to_owned(), entry);
        Ok(())
    }

    fn attribute_slot(&mut self, name: &str) -> usize {
        if let Some(&idx) = self.attribute_index.get(name) {
            return idx;
        }
        let idx = self.attributes.len();
        self.attributes.push(Attribute {
            name: name.to_owned(),
            ..Default::default()
        });
        self.attribute_index.insert(name.to_owned(), idx);
        idx
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, item: &str) -> bool {
        self.entries.contains_key(item)
    }

    pub fn items(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Attribute names in first-seen order.
    pub fn attribute_names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn attribute_position(&self, name: &str) -> Option<usize> {
        self.attribute_index.get(name).copied()
    }

    /// Feature dimension; zero when no item carries features.
    pub fn dim(&self) -> usize {
        self.dim.unwrap_or(0)
    }

    pub fn features(&self, item: &str) -> Option<&[f64]> {
        self.entries.get(item)?.features.as_deref()
    }

    /// `None` for unknown items, unknown attributes and nulls alike.
    pub fn attribute(&self, item: &str, name: &str) -> Option<&str> {
        let pos = self.attribute_position(name)?;
        let id = self.value_id(item, pos)?;
        Some(self.attributes[pos].values[id as usize].as_str())
    }

    pub(crate) fn value_id(&self, item: &str, pos: usize) -> Option<u32> {
        self.entries.get(item)?.attrs.get(pos).copied().flatten()
    }

    /// Per attribute: whether every listed item carries the same non-null value.
    pub fn shared_attributes(&self, items: &[&str]) -> Vec<bool> {
        let entries: Option<Vec<&Entry>> = items.iter().map(|i| self.entries.get(*i)).collect();
        let Some(entries) = entries else {
            return vec![false; self.attributes.len()];
        };
        (0..self.attributes.len())
            .map(|pos| {
                let first = entries
                    .first()
                    .and_then(|e| e.attrs.get(pos).copied().flatten());
                first.is_some()
                    && entries
                        .iter()
                        .all(|e| e.attrs.get(pos).copied().flatten() == first)
            })
            .collect()
    }

    /// Replaces numeric values of the named attributes with decile buckets.
    /// Attributes with any non-numeric value are left untouched.
    pub fn bucket_continuous(&mut self, names: &[&str]) {
        for name in names {
            let Some(pos) = self.attribute_position(name) else {
                continue;
            };
            let mut numeric: Vec<(String, f64)> = Vec::new();
            let mut all_numeric = true;
            for (item, entry) in &self.entries {
                if let Some(id) = entry.attrs.get(pos).copied().flatten() {
                    match self.attributes[pos].values[id as usize].parse::<f64>() {
                        Ok(v) if v.is_finite() => numeric.push((item.clone(), v)),
                        _ => {
                            all_numeric = false;
                            break;
                        }
                    }
                }
            }
            let already_bucketed = || {
                self.attributes[pos]
                    .values
                    .iter()
                    .all(|v| matches!(v.as_bytes(), [b'd', b'0'..=b'9']))
            };
            if !all_numeric && already_bucketed() {
                continue;
            }
            if !all_numeric {
                log::warn!("attribute {name:?} has non-numeric values; kept categorical");
                continue;
            }
            let mut sorted: Vec<f64> = numeric.iter().map(|(_, v)| *v).collect();
            sorted.sort_by(f64::total_cmp);
            let count = sorted.len();
            let mut attr = Attribute {
                name: name.to_string(),
                ..Default::default()
            };
            for (item, v) in numeric {
                // rank = number of strictly smaller values, so ties share a bucket
                let rank = sorted.partition_point(|x| *x < v);
                let bucket = (rank * 10 / count).min(9);
                let id = attr.intern(&format!("d{bucket}"));
                self.entries.get_mut(&item).unwrap().attrs[pos] = Some(id);
            }
            self.attributes[pos] = attr;
        }
    }

    /// Parses `item\tname=value;name=value\tf1,f2,...` lines.
    ///
    /// The feature column may be empty or absent for items without features.
    /// Continuous attributes in [`DEFAULT_CONTINUOUS`] are bucketed.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut catalog = ItemCatalog::new();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let item = fields.next().unwrap_or_default();
            if item.is_empty() {
                return Err(Error::parse(lineno, "empty item id"));
            }
            let attr_field = fields.next().unwrap_or_default();
            let feature_field = fields.next().unwrap_or_default();
            if fields.next().is_some() {
                return Err(Error::parse(lineno, "too many fields"));
            }
            let mut attrs = Vec::new();
            for pair in attr_field.split(';').filter(|p| !p.is_empty()) {
                let (name, value) = pair
                    .split_once('=')
                    .ok_or_else(|| Error::parse(lineno, format!("attribute {pair:?} lacks '='")))?;
                if name.is_empty() {
                    return Err(Error::parse(lineno, "empty attribute name"));
                }
                attrs.push((name, value));
            }
            let features = if feature_field.trim().is_empty() {
                None
            } else {
                let parsed: std::result::Result<Vec<f64>, _> = feature_field
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect();
                Some(parsed.map_err(|e| Error::parse(lineno, format!("bad feature value: {e}")))?)
            };
            catalog
                .insert(item, &attrs, features)
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
        }
        catalog.bucket_continuous(DEFAULT_CONTINUOUS);
        Ok(catalog)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    /// Writes items sorted by id in the format accepted by [`ItemCatalog::read`].
    /// Nulls are omitted; bucketed attributes are written as their bucket labels.
    pub fn write_to<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        for (item, entry) in &self.entries {
            write!(out, "{item}\t")?;
            let mut first = true;
            for (attr, value) in self.attributes.iter().zip(&entry.attrs) {
                if let Some(id) = value {
                    if !first {
                        out.write_all(b";")?;
                    }
                    write!(out, "{}={}", attr.name, attr.values[*id as usize])?;
                    first = false;
                }
            }
            out.write_all(b"\t")?;
            if let Some(features) = &entry.features {
                for (i, x) in features.iter().enumerate() {
                    if i > 0 {
                        out.write_all(b",")?;
                    }
                    write!(out, "{x}")?;
                }
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
