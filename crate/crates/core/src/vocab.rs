use std::collections::HashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Ordered list of distinct relation names with a reverse index.
#[derive(Debug, Clone, Default)]
pub struct RelationVocab {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl RelationVocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vocabulary keeping the first appearance of every name.
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self::new();
        for name in names {
            vocab.push(name.into());
        }
        vocab
    }

    /// Appends `name` if absent and returns its index.
    pub fn push(&mut self, name: String) -> usize {
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        let i = self.names.len();
        self.index.insert(name.clone(), i);
        self.names.push(name);
        i
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    /// This vocabulary followed by the names of `other` it does not contain.
    pub fn union(&self, other: &RelationVocab) -> RelationVocab {
        Self::from_names(self.names.iter().chain(other.names.iter()).cloned())
    }
}

impl PartialEq for RelationVocab {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
    }
}

impl Eq for RelationVocab {}

impl Serialize for RelationVocab {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.names.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RelationVocab {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(deserializer)?;
        let vocab = Self::from_names(names.iter().cloned());
        if vocab.len() != names.len() {
            return Err(serde::de::Error::custom("duplicate relation in vocabulary"));
        }
        Ok(vocab)
    }
}

/// Lowercases and collapses internal whitespace.
pub fn normalize_relation(raw: &str) -> String {
    raw.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}
