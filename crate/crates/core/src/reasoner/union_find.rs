/// Disjoint sets over dense `u32` ids.
///
/// The caller decides which root survives a union, so representatives can
/// follow a domain ordering (least name) rather than rank.
#[derive(Clone, Debug, Default)]
pub(crate) struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub(crate) fn push(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    pub(crate) fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        // Path compression.
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    pub(crate) fn is_root(&self, x: u32) -> bool {
        self.parent[x as usize] == x
    }

    /// Attaches the root of `loser` under the root of `winner`.
    pub(crate) fn attach(&mut self, loser: u32, winner: u32) {
        let l = self.find(loser);
        let w = self.find(winner);
        if l != w {
            self.parent[l as usize] = w;
        }
    }
}
