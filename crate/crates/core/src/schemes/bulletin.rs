use crate::domain::Item;
use crate::heavyguardian::HeavyGuardian;

/// Server snapshot that clients randomize against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bulletin {
    pub seq: u32,
    /// Heavy-part ids in slot order.
    pub hot_ids: Vec<Item>,
    /// Set when the heavy part has a free slot or its weakest count is <= 1.
    pub weakest_low: bool,
    sorted: Vec<Item>,
}

impl Bulletin {
    pub fn new(seq: u32, hot_ids: Vec<Item>, weakest_low: bool) -> Self {
        let mut sorted = hot_ids.clone();
        sorted.sort_unstable();
        Self {
            seq,
            hot_ids,
            weakest_low,
            sorted,
        }
    }

    pub fn snapshot(hg: &HeavyGuardian, seq: u32) -> Self {
        Self::new(seq, hg.hot_ids(), weakest_is_low(hg))
    }

    /// Hot ids in ascending order; randomizers index hot symbols by this order.
    pub fn sorted(&self) -> &[Item] {
        &self.sorted
    }

    pub fn hot_len(&self) -> usize {
        self.sorted.len()
    }

    /// Position of `item` in [`Bulletin::sorted`].
    pub fn rank(&self, item: Item) -> Option<usize> {
        self.sorted.binary_search(&item).ok()
    }

    pub fn is_hot(&self, item: Item) -> bool {
        self.rank(item).is_some()
    }
}

/// The shared "least count <= 1" test; a free slot counts as zero.
pub fn weakest_is_low(hg: &HeavyGuardian) -> bool {
    hg.least_count() <= 1.0
}
