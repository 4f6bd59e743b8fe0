use rand::Rng;

const ABSENT: u32 = u32::MAX;

/// A subset of `0..n` with O(1) insert, remove, membership and uniform
/// sampling.
///
/// Membership is kept twice: a bitmap for cheap tests and mask export,
/// and a dense member array with a back-pointer per vertex for removal
/// and sampling. The two always agree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    bits: Vec<u64>,
    members: Vec<u32>,
    position: Vec<u32>,
}

impl VertexSet {
    pub fn new(n: usize) -> Self {
        Self {
            bits: vec![0; n.div_ceil(64)],
            members: Vec::new(),
            position: vec![ABSENT; n],
        }
    }

    pub fn full(n: usize) -> Self {
        Self::from_vertices(n, 0..n)
    }

    pub fn from_vertices<I: IntoIterator<Item = usize>>(n: usize, vertices: I) -> Self {
        let mut s = Self::new(n);
        for v in vertices {
            s.insert(v);
        }
        s
    }

    /// Set whose members are the one-bits of `mask` (`n <= 64`).
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self::from_vertices(n, (0..n).filter(|&v| mask >> v & 1 == 1))
    }

    /// Number of vertices in the universe.
    pub fn universe(&self) -> usize {
        self.position.len()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.bits[v >> 6] >> (v & 63) & 1 == 1
    }

    /// Returns `true` if `v` was not already present.
    pub fn insert(&mut self, v: usize) -> bool {
        assert!(v < self.universe(), "vertex {v} outside universe {}", self.universe());
        if self.contains(v) {
            return false;
        }
        self.bits[v >> 6] |= 1 << (v & 63);
        self.position[v] = self.members.len() as u32;
        self.members.push(v as u32);
        true
    }

    /// Returns `true` if `v` was present.
    pub fn remove(&mut self, v: usize) -> bool {
        if v >= self.universe() || !self.contains(v) {
            return false;
        }
        self.bits[v >> 6] &= !(1 << (v & 63));
        let at = self.position[v] as usize;
        let last = self.members.pop().expect("non-empty");
        if last as usize != v {
            self.members[at] = last;
            self.position[last as usize] = at as u32;
        }
        self.position[v] = ABSENT;
        true
    }

    /// Uniformly random member, or `None` if empty.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        if self.members.is_empty() {
            None
        } else {
            Some(self.members[rng.random_range(0..self.members.len())] as usize)
        }
    }

    /// Members in insertion-dependent (not sorted) order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().map(|&v| v as usize)
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.iter().collect();
        v.sort_unstable();
        v
    }

    pub fn complement(&self) -> Self {
        Self::from_vertices(self.universe(), (0..self.universe()).filter(|&v| !self.contains(v)))
    }

    /// Bitmask of the members; `None` when the universe exceeds 64.
    pub fn to_mask(&self) -> Option<u64> {
        (self.universe() <= 64).then(|| self.bits.first().copied().unwrap_or(0))
    }

    /// Checks that the bitmap, member array and positions agree.
    pub fn is_consistent(&self) -> bool {
        let popcount: u32 = self.bits.iter().map(|w| w.count_ones()).sum();
        popcount as usize == self.members.len()
            && self.members.iter().enumerate().all(|(i, &v)| {
                self.position[v as usize] as usize == i && self.contains(v as usize)
            })
            && (0..self.universe()).all(|v| self.contains(v) == (self.position[v] != ABSENT))
    }
}
