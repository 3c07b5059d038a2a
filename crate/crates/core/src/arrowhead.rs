//! Arrowhead decomposition of a tridiagonal system: contiguous blocks
//! separated by single scalar unknowns, reordered into block form
//! `(S W_R; W_L H)` and solved through the Schur complement
//! `H - W_L S^{-1} W_R` on the separators.
//!
//! Block solves and back-substitution are exposed individually so slab
//! workers can run them in parallel; [`ArrowheadSystem::solve`] chains the
//! same operations sequentially and is bitwise identical to the distributed
//! path.

use crate::fast_poisson::{thomas_on_slices as thomas_slices, Tridiagonal};
use crate::linalg::DenseLu;
use crate::{Error, Result};

/// Index layout of a partitioned tridiagonal system: `m` contiguous blocks
/// of interior unknowns with one scalar separator between consecutive blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMap {
    pub n: usize,
    pub blocks: Vec<std::ops::Range<usize>>,
    pub separators: Vec<usize>,
}

impl PartitionMap {
    /// Balanced partition: block sizes differ by at most one.
    pub fn balanced(n: usize, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("block count must be positive".into()));
        }
        if n < 3 * m - 1 {
            return Err(Error::PartitionTooSmall { n, m });
        }
        let interiors = n - (m - 1);
        let base = interiors / m;
        let extra = interiors % m;
        let mut blocks = Vec::with_capacity(m);
        let mut separators = Vec::with_capacity(m - 1);
        let mut start = 0;
        for k in 0..m {
            let size = base + usize::from(k < extra);
            blocks.push(start..start + size);
            start += size;
            if k + 1 < m {
                separators.push(start);
                start += 1;
            }
        }
        debug_assert_eq!(start, n);
        Ok(Self {
            n,
            blocks,
            separators,
        })
    }

    /// Partition with explicit separator positions (used to align blocks with
    /// slab boundaries). Separators must leave every block at least 2 wide.
    pub fn from_separators(n: usize, separators: Vec<usize>) -> Result<Self> {
        let m = separators.len() + 1;
        let mut blocks = Vec::with_capacity(m);
        let mut start = 0;
        for (k, &sep) in separators.iter().enumerate() {
            if sep <= start + 1 || sep >= n {
                return Err(Error::InvalidParameter(format!(
                    "separator {k} at {sep} leaves a block shorter than 2"
                )));
            }
            blocks.push(start..sep);
            start = sep + 1;
        }
        if start + 2 > n {
            return Err(Error::InvalidParameter(
                "last block is shorter than 2".into(),
            ));
        }
        blocks.push(start..n);
        Ok(Self {
            n,
            blocks,
            separators,
        })
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

/// A tridiagonal matrix rearranged into arrowhead block form, with the Schur
/// complement of the separators factored for reuse.
#[derive(Debug, Clone)]
pub struct ArrowheadSystem {
    map: PartitionMap,
    matrix: Tridiagonal,
    /// Per block: `S_k^{-1} W_R` column through the left separator coupling
    /// (empty for the first block).
    zl: Vec<Vec<f64>>,
    /// Per block: `S_k^{-1} W_R` column through the right separator coupling
    /// (empty for the last block).
    zr: Vec<Vec<f64>>,
    schur: Option<DenseLu>,
}

/// Rearrange a tridiagonal matrix into `m` balanced blocks plus separators.
pub fn decompose(matrix: &Tridiagonal, m: usize) -> Result<(PartitionMap, ArrowheadSystem)> {
    let map = PartitionMap::balanced(matrix.len(), m)?;
    let sys = ArrowheadSystem::from_map(matrix.clone(), map.clone())?;
    Ok((map, sys))
}

impl ArrowheadSystem {
    pub fn from_map(matrix: Tridiagonal, map: PartitionMap) -> Result<Self> {
        if matrix.len() != map.n {
            return Err(Error::InvalidParameter(format!(
                "partition covers {} unknowns but the matrix has {}",
                map.n,
                matrix.len()
            )));
        }
        Ok(Self {
            map,
            matrix,
            zl: Vec::new(),
            zr: Vec::new(),
            schur: None,
        })
    }

    pub fn map(&self) -> &PartitionMap {
        &self.map
    }

    pub fn matrix(&self) -> &Tridiagonal {
        &self.matrix
    }

    /// Coupling of block `k`'s first row to its left separator.
    fn left_coupling(&self, k: usize) -> f64 {
        self.matrix.sub[self.map.blocks[k].start]
    }

    /// Coupling of block `k`'s last row to its right separator.
    fn right_coupling(&self, k: usize) -> f64 {
        self.matrix.sup[self.map.blocks[k].end - 1]
    }

    /// `W_L` entries of separator `p`: (onto last of block p, onto first of
    /// block p+1).
    fn separator_couplings(&self, p: usize) -> (f64, f64) {
        let sep = self.map.separators[p];
        (self.matrix.sub[sep], self.matrix.sup[sep])
    }

    /// Solve the interior tridiagonal block `k` for an arbitrary right-hand
    /// side (the couplings to the separators are excluded by construction).
    pub fn block_solve(&self, k: usize, rhs: &[f64]) -> Result<Vec<f64>> {
        let range = self.map.blocks[k].clone();
        assert_eq!(rhs.len(), range.len());
        thomas_slices(
            &self.matrix.sub[range.clone()],
            &self.matrix.diag[range.clone()],
            &self.matrix.sup[range],
            rhs,
        )
        .map_err(|_| Error::SingularSystem("arrowhead block"))
    }

    /// Factor the Schur complement `H - W_L S^{-1} W_R` and cache the
    /// `S^{-1} W_R` columns.
    pub fn precompute_schur(&mut self) -> Result<()> {
        let m = self.map.block_count();
        let mut zl = vec![Vec::new(); m];
        let mut zr = vec![Vec::new(); m];
        for k in 0..m {
            let len = self.map.blocks[k].len();
            if k > 0 {
                let mut e = vec![0.0; len];
                e[0] = self.left_coupling(k);
                zl[k] = self.block_solve(k, &e)?;
            }
            if k + 1 < m {
                let mut e = vec![0.0; len];
                e[len - 1] = self.right_coupling(k);
                zr[k] = self.block_solve(k, &e)?;
            }
        }

        let s = m - 1;
        if s > 0 {
            let mut schur = vec![0.0; s * s];
            for p in 0..s {
                let (l_p, r_p) = self.separator_couplings(p);
                let sep_p = self.map.separators[p];
                schur[p * s + p] = self.matrix.diag[sep_p]
                    - l_p * zr[p].last().copied().unwrap_or(0.0)
                    - r_p * zl[p + 1].first().copied().unwrap_or(0.0);
                if p > 0 {
                    schur[p * s + p - 1] = -l_p * zl[p].last().copied().unwrap_or(0.0);
                }
                if p + 1 < s {
                    schur[p * s + p + 1] = -r_p * zr[p + 1].first().copied().unwrap_or(0.0);
                }
            }
            self.schur = Some(DenseLu::factor(schur, s, "arrowhead Schur complement")?);
        } else {
            self.schur = None;
        }
        self.zl = zl;
        self.zr = zr;
        Ok(())
    }

    /// Separator equation `p` reduced by the block contributions.
    pub fn separator_rhs(&self, p: usize, f_sep: f64, z_last: f64, z_next_first: f64) -> f64 {
        let (l_p, r_p) = self.separator_couplings(p);
        f_sep - l_p * z_last - r_p * z_next_first
    }

    /// Solve the factored Schur system for the separator unknowns.
    pub fn solve_separators(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match &self.schur {
            Some(lu) => Ok(lu.solve(rhs)),
            None if rhs.is_empty() => Ok(Vec::new()),
            None => Err(Error::SingularSystem("Schur complement not factored")),
        }
    }

    /// `s^k = z^k - zl^k h^{k-1} - zr^k h^k` with absent separators zero.
    pub fn back_substitute(
        &self,
        k: usize,
        z: &[f64],
        h_left: Option<f64>,
        h_right: Option<f64>,
    ) -> Vec<f64> {
        let mut out = z.to_vec();
        if let Some(h) = h_left {
            for (o, c) in out.iter_mut().zip(self.zl[k].iter()) {
                *o -= c * h;
            }
        }
        if let Some(h) = h_right {
            for (o, c) in out.iter_mut().zip(self.zr[k].iter()) {
                *o -= c * h;
            }
        }
        out
    }

    /// Full sequential solve through the block operations. Requires
    /// [`Self::precompute_schur`] to have run when there is more than one
    /// block.
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(f.len(), self.map.n);
        let m = self.map.block_count();
        if m > 1 && self.schur.is_none() {
            return Err(Error::SingularSystem("Schur complement not factored"));
        }
        let mut z = Vec::with_capacity(m);
        for k in 0..m {
            z.push(self.block_solve(k, &f[self.map.blocks[k].clone()])?);
        }
        let s = m - 1;
        let mut rhs_h = Vec::with_capacity(s);
        for p in 0..s {
            let f_sep = f[self.map.separators[p]];
            rhs_h.push(self.separator_rhs(p, f_sep, *z[p].last().unwrap(), z[p + 1][0]));
        }
        let h = self.solve_separators(&rhs_h)?;

        let mut u = vec![0.0; self.map.n];
        for k in 0..m {
            let h_left = if k > 0 { Some(h[k - 1]) } else { None };
            let h_right = if k + 1 < m { Some(h[k]) } else { None };
            let s_block = self.back_substitute(k, &z[k], h_left, h_right);
            u[self.map.blocks[k].clone()].copy_from_slice(&s_block);
        }
        for (p, &sep) in self.map.separators.iter().enumerate() {
            u[sep] = h[p];
        }
        Ok(u)
    }

    /// Rebuild the original tridiagonal matrix from the block form under the
    /// inverse permutation (diagnostic; tests the rearrangement).
    pub fn reassemble(&self) -> Tridiagonal {
        let n = self.map.n;
        let mut out = Tridiagonal {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
        };
        for (k, block) in self.map.blocks.iter().enumerate() {
            for i in block.clone() {
                out.diag[i] = self.matrix.diag[i];
                if i > block.start {
                    out.sub[i] = self.matrix.sub[i];
                }
                if i + 1 < block.end {
                    out.sup[i] = self.matrix.sup[i];
                }
            }
            // W_R couplings of this block.
            if k > 0 {
                out.sub[block.start] = self.left_coupling(k);
            }
            if k + 1 < self.map.block_count() {
                out.sup[block.end - 1] = self.right_coupling(k);
            }
        }
        // Separator rows: H diagonal plus W_L couplings.
        for (p, &sep) in self.map.separators.iter().enumerate() {
            let (l_p, r_p) = self.separator_couplings(p);
            out.diag[sep] = self.matrix.diag[sep];
            out.sub[sep] = l_p;
            out.sup[sep] = r_p;
        }
        out
    }
}
