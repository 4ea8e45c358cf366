use crate::domain::Item;

/// One client's perturbed value as seen on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbedReport {
    /// An id from the whole domain.
    FullDomain(Item),
    /// An id that was in the bulletin's hot set when randomized.
    HotSet(Item),
    /// "My value is cold."
    Bot,
    OlhPair { seed: u32, y: u32 },
    /// Hadamard column index.
    HrIndex(u32),
}

impl PerturbedReport {
    /// The concrete item id the server may store, if any.
    pub fn item(&self) -> Option<Item> {
        match *self {
            PerturbedReport::FullDomain(v) | PerturbedReport::HotSet(v) => Some(v),
            _ => None,
        }
    }
}

/// Debiased `(id, estimate)` pairs, best first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopKReport {
    pub entries: Vec<(Item, f64)>,
    /// Post-warm-up events processed when the query ran.
    pub timestamp: u64,
}

impl TopKReport {
    pub fn ids(&self) -> Vec<Item> {
        self.entries.iter().map(|&(id, _)| id).collect()
    }

    pub fn estimate(&self, item: Item) -> Option<f64> {
        self.entries
            .iter()
            .find(|&&(id, _)| id == item)
            .map(|&(_, c)| c)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
