//! Mark alphabets. Marks are dense integer ids; labels live in a registry
//! and only matter at serialization boundaries.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Dense mark id. The numeric order is the canonical total order on marks.
pub type Mark = u32;

/// One alphabet (edge marks or vertex marks) mapping ids to labels.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    labels: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, Mark>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut a = Self::new();
        for l in labels {
            a.intern(&l.into());
        }
        a
    }

    /// Alphabet with labels "0".."k-1".
    pub fn numeric(k: usize) -> Self {
        Self::from_labels((0..k).map(|i| i.to_string()))
    }

    /// Returns the id of `label`, assigning the next id on first sight.
    pub fn intern(&mut self, label: &str) -> Mark {
        if let Some(&m) = self.index.get(label) {
            return m;
        }
        let m = self.labels.len() as Mark;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), m);
        m
    }

    pub fn get(&self, label: &str) -> Option<Mark> {
        self.index.get(label).copied()
    }

    /// Label of `mark`; unknown ids render as their number.
    pub fn label(&self, mark: Mark) -> String {
        self.labels
            .get(mark as usize)
            .cloned()
            .unwrap_or_else(|| mark.to_string())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// The pair of alphabets (edge marks, vertex marks) in use for a session.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkRegistry {
    pub edge: Alphabet,
    pub vertex: Alphabet,
}

impl MarkRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry with `edges` edge marks and `vertices` vertex marks labeled by number.
    pub fn numeric(edges: usize, vertices: usize) -> Self {
        Self { edge: Alphabet::numeric(edges), vertex: Alphabet::numeric(vertices) }
    }

    /// Rebuilds lookup indices after deserialization.
    pub fn reindexed(self) -> Self {
        Self {
            edge: Alphabet::from_labels(self.edge.labels),
            vertex: Alphabet::from_labels(self.vertex.labels),
        }
    }
}
