//! Bag-local encodings used as DP keys: partitions packed into a `u64` with 4-bit
//! labels in restricted-growth form, and pair sets as triangular bitmasks.

pub(crate) const MAX_ELEMS: usize = 16;

/// A partition of `0..n` (n ≤ 16) stored as canonical labels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Part(pub u64);

impl Part {
    pub fn label(self, i: usize) -> u8 {
        ((self.0 >> (4 * i)) & 15) as u8
    }

    /// Every element in its own block.
    pub fn discrete(n: usize) -> Part {
        let mut p = 0u64;
        for i in 0..n {
            p |= (i as u64) << (4 * i);
        }
        Part(p)
    }

    pub fn same(self, i: usize, j: usize) -> bool {
        self.label(i) == self.label(j)
    }

    pub fn from_labels(labels: &[u8]) -> Part {
        let mut map = [u8::MAX; 256];
        let mut next = 0u8;
        let mut p = 0u64;
        for (i, &l) in labels.iter().enumerate() {
            if map[l as usize] == u8::MAX {
                map[l as usize] = next;
                next += 1;
            }
            p |= (map[l as usize] as u64) << (4 * i);
        }
        Part(p)
    }

    /// The partition induced on the elements `idx` (renumbered `0..idx.len()`).
    pub fn restrict(self, idx: &[u8]) -> Part {
        let mut labels = [0u8; MAX_ELEMS];
        for (i, &x) in idx.iter().enumerate() {
            labels[i] = self.label(x as usize);
        }
        Part::from_labels(&labels[..idx.len()])
    }

    /// Merge the blocks of elements `a` and `b` over `0..n`.
    pub fn merge_pair(self, a: usize, b: usize, n: usize) -> Part {
        let (la, lb) = (self.label(a), self.label(b));
        if la == lb {
            return self;
        }
        let mut labels = [0u8; MAX_ELEMS];
        for (i, l) in labels.iter_mut().enumerate().take(n) {
            let x = self.label(i);
            *l = if x == lb { la } else { x };
        }
        Part::from_labels(&labels[..n])
    }

    #[cfg(test)]
    pub fn block_count(self, n: usize) -> usize {
        (0..n).map(|i| self.label(i)).max().map_or(0, |m| m as usize + 1)
    }
}

/// Union-find over at most 16 elements.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Uf {
    parent: [u8; MAX_ELEMS],
    n: u8,
}

impl Uf {
    pub fn new(n: usize) -> Self {
        debug_assert!(n <= MAX_ELEMS);
        let mut parent = [0u8; MAX_ELEMS];
        for (i, p) in parent.iter_mut().enumerate() {
            *p = i as u8;
        }
        Uf { parent, n: n as u8 }
    }

    pub fn find(&mut self, mut x: u8) -> u8 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    pub fn union(&mut self, a: u8, b: u8) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }

    /// Merge the blocks of `part` (over `map.len()` elements) after mapping element `i` to `map[i]`.
    pub fn merge_mapped(&mut self, part: Part, map: &[u8]) {
        let mut first = [u8::MAX; MAX_ELEMS];
        for (i, &target) in map.iter().enumerate() {
            let l = part.label(i) as usize;
            if first[l] == u8::MAX {
                first[l] = target;
            } else {
                self.union(first[l], target);
            }
        }
    }

    pub fn merge(&mut self, part: Part) {
        let n = self.n as usize;
        let mut first = [u8::MAX; MAX_ELEMS];
        for i in 0..n {
            let l = part.label(i) as usize;
            if first[l] == u8::MAX {
                first[l] = i as u8;
            } else {
                self.union(first[l], i as u8);
            }
        }
    }

    pub fn part(&mut self) -> Part {
        let n = self.n as usize;
        let mut labels = [0u8; MAX_ELEMS];
        for (i, l) in labels.iter_mut().enumerate().take(n) {
            *l = self.find(i as u8);
        }
        Part::from_labels(&labels[..n])
    }
}

/// Index of the unordered pair `{i, j}` (i ≠ j) in a triangular bitmask.
pub(crate) fn tri(i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    b * (b - 1) / 2 + a
}

/// A set of unordered pairs over `0..n` (n ≤ 11).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct PairSet(pub u64);

pub(crate) const MAX_PAIR_ELEMS: usize = 11;

impl PairSet {
    pub fn contains(self, i: usize, j: usize) -> bool {
        i != j && self.0 >> tri(i, j) & 1 == 1
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        if i != j {
            self.0 |= 1 << tri(i, j);
        }
    }

    pub fn union(self, other: PairSet) -> PairSet {
        PairSet(self.0 | other.0)
    }

    /// Adjacency rows over `0..n`.
    pub fn adjacency(self, n: usize) -> [u16; MAX_PAIR_ELEMS] {
        let mut adj = [0u16; MAX_PAIR_ELEMS];
        for j in 1..n {
            for i in 0..j {
                if self.0 >> tri(i, j) & 1 == 1 {
                    adj[i] |= 1 << j;
                    adj[j] |= 1 << i;
                }
            }
        }
        adj
    }

    pub fn from_adjacency(adj: &[u16], n: usize) -> PairSet {
        let mut p = PairSet(0);
        for j in 1..n {
            for i in 0..j {
                if adj[i] >> j & 1 == 1 {
                    p.0 |= 1 << tri(i, j);
                }
            }
        }
        p
    }

    /// Pairs joined by a chain whose intermediate elements lie in `z`.
    pub fn closure_through(self, z: u16, n: usize) -> PairSet {
        let adj = self.adjacency(n);
        let mut out = [0u16; MAX_PAIR_ELEMS];
        for u in 0..n {
            let mut reach = adj[u];
            let mut expanded = 0u16;
            loop {
                let todo = reach & z & !expanded & !(1 << u);
                if todo == 0 {
                    break;
                }
                let mut t = todo;
                while t != 0 {
                    let x = t.trailing_zeros() as usize;
                    t &= t - 1;
                    reach |= adj[x];
                }
                expanded |= todo;
            }
            out[u] = reach & !(1 << u);
        }
        // Reachability is symmetric here, but keep only u<v bits consistently.
        PairSet::from_adjacency(&out, n)
    }

    /// Pairs within the elements `idx`, renumbered `0..idx.len()`.
    pub fn restrict(self, idx: &[u8]) -> PairSet {
        let mut p = PairSet(0);
        for b in 1..idx.len() {
            for a in 0..b {
                if self.contains(idx[a] as usize, idx[b] as usize) {
                    p.0 |= 1 << tri(a, b);
                }
            }
        }
        p
    }

    /// Rename element `i` to `map[i]`.
    pub fn lift(self, map: &[u8]) -> PairSet {
        let mut p = PairSet(0);
        for b in 1..map.len() {
            for a in 0..b {
                if self.0 >> tri(a, b) & 1 == 1 {
                    p.insert(map[a] as usize, map[b] as usize);
                }
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_labels() {
        assert_eq!(Part::from_labels(&[3, 3, 1]), Part::from_labels(&[0, 0, 1]));
        let p = Part::from_labels(&[0, 1, 0, 2]);
        assert!(p.same(0, 2));
        assert!(!p.same(0, 1));
        assert_eq!(p.restrict(&[1, 3]), Part::discrete(2));
        assert_eq!(p.restrict(&[2, 0]), Part::from_labels(&[0, 0]));
        assert_eq!(p.block_count(4), 3);
    }

    #[test]
    fn union_find_merges() {
        let mut uf = Uf::new(4);
        uf.merge_mapped(Part::from_labels(&[0, 0]), &[1, 3]);
        uf.union(0, 2);
        assert_eq!(uf.part(), Part::from_labels(&[0, 1, 0, 1]));
    }

    #[test]
    fn pair_closure_through() {
        let mut p = PairSet(0);
        p.insert(0, 1);
        p.insert(1, 2);
        p.insert(2, 3);
        let c = p.closure_through(0b0010, 4);
        assert!(c.contains(0, 2));
        assert!(!c.contains(0, 3));
        let all = p.closure_through(0b1111, 4);
        assert!(all.contains(0, 3));
        assert_eq!(p.closure_through(0, 4), p);
        assert_eq!(p.restrict(&[1, 2]).0, 1);
    }
}
