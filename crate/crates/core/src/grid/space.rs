use crate::jet::shuffle_sign;

/// Block of `degree`-cells sharing one orientation `mask`.
#[derive(Clone, Debug)]
pub struct Block {
    pub mask: u32,
    pub offset: usize,
    pub len: usize,
    /// Cells per axis: `n` along spanned axes, `n + 1` otherwise.
    pub ext: Vec<usize>,
    pub stride: Vec<usize>,
}

impl Block {
    #[inline]
    pub fn index(&self, x: &[usize]) -> usize {
        x.iter().zip(&self.stride).map(|(a, b)| a * b).sum()
    }

    pub fn multi_index(&self, mut i: usize, out: &mut [usize]) {
        for (j, s) in self.stride.iter().enumerate() {
            out[j] = i / s;
            i %= s;
        }
    }
}

/// Uniform cubical grid on `[0,1]^m` with `n` cells per axis.
#[derive(Clone, Debug)]
pub struct Grid {
    pub m: usize,
    pub n: usize,
    pub h: f64,
    blocks: Vec<Vec<Block>>,
    mask_block: Vec<usize>,
    counts: Vec<usize>,
    weights: Vec<Vec<f64>>,
}

/// Advances an odometer over `ext`; returns false after the last index.
#[inline]
pub fn next_index(x: &mut [usize], ext: &[usize]) -> bool {
    for j in (0..x.len()).rev() {
        x[j] += 1;
        if x[j] < ext[j] {
            return true;
        }
        x[j] = 0;
    }
    false
}

impl Grid {
    pub fn new(m: usize, n: usize) -> Self {
        assert!((1..=8).contains(&m), "grid dimension must be 1..=8");
        assert!(n >= 1, "grid needs at least one cell per axis");
        let h = 1.0 / n as f64;
        let mut blocks = vec![Vec::new(); m + 1];
        let mut mask_block = vec![0; 1 << m];
        let mut counts = vec![0; m + 1];
        for mask in 0u32..(1 << m) {
            let k = mask.count_ones() as usize;
            let ext: Vec<usize> = (0..m)
                .map(|j| if mask & (1 << j) != 0 { n } else { n + 1 })
                .collect();
            let mut stride = vec![1; m];
            for j in (0..m.saturating_sub(1)).rev() {
                stride[j] = stride[j + 1] * ext[j + 1];
            }
            let len: usize = ext.iter().product();
            mask_block[mask as usize] = blocks[k].len();
            blocks[k].push(Block {
                mask,
                offset: counts[k],
                len,
                ext,
                stride,
            });
            counts[k] += len;
        }
        let mut g = Self {
            m,
            n,
            h,
            blocks,
            mask_block,
            counts,
            weights: Vec::new(),
        };
        g.weights = (0..=m).map(|k| g.build_weights(k)).collect();
        g
    }

    fn build_weights(&self, k: usize) -> Vec<f64> {
        let base = self.h.powi(self.m as i32 - 2 * k as i32);
        let mut w = vec![0.0; self.counts[k]];
        let mut x = vec![0usize; self.m];
        for b in &self.blocks[k] {
            x.iter_mut().for_each(|v| *v = 0);
            let mut i = b.offset;
            loop {
                let mut f = base;
                for j in 0..self.m {
                    if b.mask & (1 << j) == 0 && (x[j] == 0 || x[j] == self.n) {
                        f *= 0.5;
                    }
                }
                w[i] = f;
                i += 1;
                if !next_index(&mut x, &b.ext) {
                    break;
                }
            }
        }
        w
    }

    pub fn blocks(&self, k: usize) -> &[Block] {
        &self.blocks[k]
    }

    pub fn block_of(&self, mask: u32) -> &Block {
        let k = mask.count_ones() as usize;
        &self.blocks[k][self.mask_block[mask as usize]]
    }

    /// Number of `k`-cells: `C(m,k) n^k (n+1)^{m-k}`.
    pub fn count(&self, k: usize) -> usize {
        self.counts[k]
    }

    /// Diagonal mass weights `h^{m-2k}` with a factor 1/2 per unspanned
    /// axis on which the cell sits on the boundary.
    pub fn weights(&self, k: usize) -> &[f64] {
        &self.weights[k]
    }

    pub fn node_count(&self) -> usize {
        (self.n + 1).pow(self.m as u32)
    }

    /// Barycenter of a cell.
    pub fn barycenter(&self, mask: u32, x: &[usize], out: &mut [f64]) {
        for j in 0..self.m {
            let off = if mask & (1 << j) != 0 { 0.5 } else { 0.0 };
            out[j] = (x[j] as f64 + off) * self.h;
        }
    }

    pub fn full_mask(&self) -> u32 {
        ((1u64 << self.m) - 1) as u32
    }

    pub fn complement_sign(&self, mask: u32) -> f64 {
        shuffle_sign(mask, self.full_mask() & !mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn cell_counts_match_binomials() {
        for (m, n) in [(2, 3), (3, 4), (4, 3)] {
            let g = Grid::new(m, n);
            for k in 0..=m {
                let expect = binom(m, k) * n.pow(k as u32) * (n + 1).pow((m - k) as u32);
                assert_eq!(g.count(k), expect);
            }
        }
    }

    #[test]
    fn weights_sum_to_volume() {
        let g = Grid::new(3, 4);
        // sum of weights * (cell value h^k)^2 for the constant form dx_I: sum_w h^{2k} = C(m,k)
        for k in 0..=3 {
            let s: f64 = g
                .weights(k)
                .iter()
                .map(|w| w * g.h.powi(2 * k as i32))
                .sum();
            assert!((s - binom(3, k) as f64).abs() < 1e-12);
        }
    }
}
