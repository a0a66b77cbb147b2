//! Cochain files. Values are ordered by base-point multi-index
//! (lexicographic over `[0,N]^m`, axis 0 slowest), then by orientation
//! (increasing axis bitmask among the `k`-subsets), then by algebra basis
//! index. Cells whose spanned axes would leave the grid are skipped.
//!
//! Binary layout, little-endian:
//! `b"HGTC"`, `u32` version (1), `u32` m, `u32` N, `u32` k, `u32` dim,
//! `u32` name length, name bytes (UTF-8), `u64` value count, `f64` values.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cochain::GridForm;
use super::space::{next_index, Grid};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"HGTC";
const VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CochainFile {
    pub m: usize,
    pub n: usize,
    pub degree: usize,
    pub algebra: String,
    pub dim: usize,
    pub values: Vec<f64>,
}

/// Internal cell index for each cell in file order.
fn file_order(g: &Grid, k: usize) -> Vec<usize> {
    let m = g.m;
    let mut order = Vec::with_capacity(g.count(k));
    let mut x = vec![0usize; m];
    let ext = vec![g.n + 1; m];
    loop {
        for b in g.blocks(k) {
            if (0..m).all(|j| b.mask & (1 << j) == 0 || x[j] < g.n) {
                order.push(b.offset + b.index(&x));
            }
        }
        if !next_index(&mut x, &ext) {
            break;
        }
    }
    order
}

pub fn to_file(w: &GridForm, algebra: &str) -> CochainFile {
    let g = &w.grid;
    let mut values = Vec::with_capacity(w.data.len());
    for c in file_order(g, w.degree) {
        values.extend_from_slice(w.value(c));
    }
    CochainFile {
        m: g.m,
        n: g.n,
        degree: w.degree,
        algebra: algebra.to_string(),
        dim: w.dim,
        values,
    }
}

/// Rebuilds the cochain; `grid` is reused when its shape matches.
pub fn from_file(f: &CochainFile, grid: Option<&Arc<Grid>>) -> Result<GridForm> {
    if !(1..=8).contains(&f.m) || f.n == 0 || f.degree > f.m {
        return Err(Error::Data(format!(
            "cochain header out of range: m={} N={} k={}",
            f.m, f.n, f.degree
        )));
    }
    let g = match grid {
        Some(g) if g.m == f.m && g.n == f.n => g.clone(),
        Some(g) => {
            return Err(Error::Data(format!(
                "cochain is on an m={} N={} grid, expected m={} N={}",
                f.m, f.n, g.m, g.n
            )))
        }
        None => Arc::new(Grid::new(f.m, f.n)),
    };
    let mut w = GridForm::zero(&g, f.degree, f.dim);
    if f.values.len() != w.data.len() {
        return Err(Error::Size(format!(
            "cochain has {} values, header implies {}",
            f.values.len(),
            w.data.len()
        )));
    }
    for (i, c) in file_order(&g, f.degree).into_iter().enumerate() {
        w.data[c * f.dim..(c + 1) * f.dim].copy_from_slice(&f.values[i * f.dim..(i + 1) * f.dim]);
    }
    Ok(w)
}

pub fn write_binary(out: &mut impl Write, f: &CochainFile) -> Result<()> {
    out.write_all(MAGIC)?;
    for v in [
        VERSION,
        f.m as u32,
        f.n as u32,
        f.degree as u32,
        f.dim as u32,
        f.algebra.len() as u32,
    ] {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(f.algebra.as_bytes())?;
    out.write_all(&(f.values.len() as u64).to_le_bytes())?;
    for v in &f.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary(inp: &mut impl Read) -> Result<CochainFile> {
    let mut magic = [0u8; 4];
    inp.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Data("not a cochain file (bad magic)".into()));
    }
    let mut u32s = [0u32; 6];
    for v in u32s.iter_mut() {
        let mut b = [0u8; 4];
        inp.read_exact(&mut b)?;
        *v = u32::from_le_bytes(b);
    }
    if u32s[0] != VERSION {
        return Err(Error::Data(format!(
            "unsupported cochain version {}",
            u32s[0]
        )));
    }
    let mut name = vec![0u8; u32s[5] as usize];
    inp.read_exact(&mut name)?;
    let algebra = String::from_utf8(name).map_err(|e| Error::Data(format!("algebra name: {e}")))?;
    let mut b8 = [0u8; 8];
    inp.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    let mut values = Vec::with_capacity(count.min(1 << 28));
    for _ in 0..count {
        inp.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    Ok(CochainFile {
        m: u32s[1] as usize,
        n: u32s[2] as usize,
        degree: u32s[3] as usize,
        dim: u32s[4] as usize,
        algebra,
        values,
    })
}

/// Reads JSON or binary, chosen by the leading byte.
pub fn load(path: &Path) -> Result<CochainFile> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        read_binary(&mut bytes.as_slice())
    } else {
        let de = &mut serde_json::Deserializer::from_slice(&bytes);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: format!("{}: {}", path.display(), e.path()),
            message: e.inner().to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn json_and_binary_round_trip() {
        let g = Arc::new(Grid::new(3, 3));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let w = GridForm::random(&g, 2, 3, 1.0, &mut rng);
        let f = to_file(&w, "su2");
        let js = serde_json::to_string(&f).unwrap();
        let back: CochainFile = serde_json::from_str(&js).unwrap();
        assert_eq!(from_file(&back, Some(&g)).unwrap().data, w.data);
        let mut buf = Vec::new();
        write_binary(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), 4 + 24 + 3 + 8 + 8 * w.data.len());
        let b = read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(b.algebra, "su2");
        assert_eq!(from_file(&b, None).unwrap().data, w.data);
    }

    #[test]
    fn order_is_lexicographic_then_orientation() {
        // m = 2, N = 1, 1-cells: x=(0,0): dx0 (mask 1), dx1 (mask 2); x=(0,1): dx0; x=(1,0): dx1
        let g = Grid::new(2, 1);
        let order = file_order(&g, 1);
        let b1 = g.block_of(1);
        let b2 = g.block_of(2);
        assert_eq!(
            order,
            vec![
                b1.offset,
                b2.offset,
                b1.offset + b1.index(&[0, 1]),
                b2.offset + b2.index(&[1, 0])
            ]
        );
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let f = CochainFile {
            m: 2,
            n: 2,
            degree: 1,
            algebra: "so3".into(),
            dim: 3,
            values: vec![0.0; 5],
        };
        assert!(matches!(from_file(&f, None), Err(Error::Size(_))));
    }
}
