//! Orbits of matrix entries under a permutation group acting by
//! conjugation, used to restrict matrix variables to the invariant subspace.

use crate::linalg;

/// Partition of the d x d entry positions into orbits of (r, c) -> (pi r, pi c).
#[derive(Clone, Debug)]
pub struct OrbitPartition {
    dim: usize,
    /// orbit id of entry r * dim + c
    orbit: Vec<usize>,
    n_orbits: usize,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl OrbitPartition {
    /// Trivial partition: every entry on its own.
    pub fn trivial(dim: usize) -> Self {
        OrbitPartition {
            dim,
            orbit: (0..dim * dim).collect(),
            n_orbits: dim * dim,
        }
    }

    /// Orbits of the group generated by the given basis permutations.
    pub fn from_generators(dim: usize, generators: &[Vec<usize>]) -> Self {
        let n = dim * dim;
        let mut parent: Vec<usize> = (0..n).collect();
        for g in generators {
            assert_eq!(g.len(), dim, "generator must permute the basis");
            for r in 0..dim {
                for c in 0..dim {
                    let a = find(&mut parent, r * dim + c);
                    let b = find(&mut parent, g[r] * dim + g[c]);
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut id = vec![usize::MAX; n];
        let mut orbit = vec![0; n];
        let mut next = 0;
        for (i, o) in orbit.iter_mut().enumerate() {
            let root = find(&mut parent, i);
            if id[root] == usize::MAX {
                id[root] = next;
                next += 1;
            }
            *o = id[root];
        }
        OrbitPartition {
            dim,
            orbit,
            n_orbits: next,
        }
    }

    /// Group generated by permutations of tensor factors. Each entry of
    /// `factor_perms` lists, for every output factor, the input factor it
    /// takes (all factors must have matching dimensions where permuted).
    pub fn from_factor_permutations(dims: &[usize], factor_perms: &[Vec<usize>]) -> Self {
        let gens: Vec<Vec<usize>> = factor_perms
            .iter()
            .map(|order| linalg::permutation_map(dims, order))
            .collect();
        Self::from_generators(dims.iter().product(), &gens)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_orbits(&self) -> usize {
        self.n_orbits
    }

    pub fn orbit_of(&self, r: usize, c: usize) -> usize {
        self.orbit[r * self.dim + c]
    }

    /// Entry positions grouped by orbit.
    pub fn members(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![vec![]; self.n_orbits];
        for r in 0..self.dim {
            for c in 0..self.dim {
                out[self.orbit_of(r, c)].push((r, c));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swap_of_two_qubits() {
        // (C^2)^{(x)2} under swap: symmetric operators have dimension 10.
        let p = OrbitPartition::from_factor_permutations(&[2, 2], &[vec![1, 0]]);
        assert_eq!(p.n_orbits(), 10);
    }

    #[test]
    fn three_copies_of_ququart() {
        let dims = [4, 4, 4];
        let gens = vec![vec![1, 0, 2], vec![0, 2, 1]];
        let p = OrbitPartition::from_factor_permutations(&dims, &gens);
        // dim Sym^3 of M_4 = C(16 + 2, 3)
        assert_eq!(p.n_orbits(), 816);
    }
}
