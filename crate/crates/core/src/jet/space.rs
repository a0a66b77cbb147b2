use std::collections::HashMap;

/// Monomial bookkeeping for jets in `m` variables truncated at total degree `order`.
#[derive(Debug)]
pub struct JetSpace {
    pub m: usize,
    pub order: usize,
    monos: Vec<Vec<u8>>,
    degree: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    /// `(a, b, c)`: monomial `a` times monomial `b` is monomial `c`.
    mul: Vec<(u32, u32, u32)>,
    /// Per axis: `(src, dst, factor)` with `d/dx_i x^src = factor x^dst`.
    deriv: Vec<Vec<(u32, u32, f64)>>,
    /// Sorted masks of each cardinality.
    masks: Vec<Vec<u32>>,
    mask_pos: Vec<usize>,
}

fn compositions(m: usize, deg: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() == m - 1 {
        let used: usize = prefix.iter().map(|&v| v as usize).sum();
        let mut v = prefix.clone();
        v.push((deg - used) as u8);
        out.push(v);
        return;
    }
    let used: usize = prefix.iter().map(|&v| v as usize).sum();
    for e in (0..=deg - used).rev() {
        prefix.push(e as u8);
        compositions(m, deg, prefix, out);
        prefix.pop();
    }
}

impl JetSpace {
    pub fn new(m: usize, order: usize) -> Self {
        assert!((1..=8).contains(&m), "jet dimension must be 1..=8");
        let mut monos = Vec::new();
        for deg in 0..=order {
            compositions(m, deg, &mut Vec::new(), &mut monos);
        }
        let degree: Vec<usize> = monos
            .iter()
            .map(|v| v.iter().map(|&e| e as usize).sum())
            .collect();
        let index: HashMap<Vec<u8>, usize> = monos
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let mut mul = Vec::new();
        for (a, ma) in monos.iter().enumerate() {
            for (b, mb) in monos.iter().enumerate() {
                if degree[a] + degree[b] > order {
                    continue;
                }
                let s: Vec<u8> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                mul.push((a as u32, b as u32, index[&s] as u32));
            }
        }
        let deriv = (0..m)
            .map(|i| {
                monos
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v[i] > 0)
                    .map(|(s, v)| {
                        let mut w = v.clone();
                        w[i] -= 1;
                        (s as u32, index[&w] as u32, v[i] as f64)
                    })
                    .collect()
            })
            .collect();
        let mut masks = vec![Vec::new(); m + 1];
        for mask in 0u32..(1 << m) {
            masks[mask.count_ones() as usize].push(mask);
        }
        let mut mask_pos = vec![0; 1 << m];
        for list in &masks {
            for (p, &mk) in list.iter().enumerate() {
                mask_pos[mk as usize] = p;
            }
        }
        Self {
            m,
            order,
            monos,
            degree,
            index,
            mul,
            deriv,
            masks,
            mask_pos,
        }
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn monomial(&self, i: usize) -> &[u8] {
        &self.monos[i]
    }

    pub fn degree_of(&self, i: usize) -> usize {
        self.degree[i]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }

    pub fn masks(&self, k: usize) -> &[u32] {
        &self.masks[k]
    }

    pub fn mask_pos(&self, mask: u32) -> usize {
        self.mask_pos[mask as usize]
    }

    pub fn n_components(&self, k: usize) -> usize {
        self.masks[k].len()
    }

    /// `out += coef * a * b` (truncated).
    #[inline]
    pub fn mul_acc(&self, a: &[f64], b: &[f64], coef: f64, out: &mut [f64]) {
        for &(i, j, k) in &self.mul {
            out[k as usize] += coef * a[i as usize] * b[j as usize];
        }
    }

    /// `out += d/dx_axis a`.
    #[inline]
    pub fn deriv_acc(&self, axis: usize, a: &[f64], coef: f64, out: &mut [f64]) {
        for &(s, d, f) in &self.deriv[axis] {
            out[d as usize] += coef * f * a[s as usize];
        }
    }

    pub fn product_pairs(&self) -> usize {
        self.mul.len()
    }
}

/// `(-1)^{#{(i, j): i in a, j in b, i > j}}`, the sign of `dx_a ^ dx_b`
/// against `dx_{a|b}` (both in increasing order).
pub fn shuffle_sign(a: u32, b: u32) -> f64 {
    let mut inv = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        inv += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let s = JetSpace::new(6, 4);
        assert_eq!(s.len(), 210);
        assert_eq!(s.product_pairs(), 1820);
        assert_eq!(s.n_components(2), 15);
    }

    #[test]
    fn shuffle_signs() {
        assert_eq!(shuffle_sign(0b01, 0b10), 1.0);
        assert_eq!(shuffle_sign(0b10, 0b01), -1.0);
        assert_eq!(shuffle_sign(0b101, 0b010), -1.0);
    }
}
