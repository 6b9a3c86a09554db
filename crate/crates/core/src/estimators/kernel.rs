//! Discretized OU transition for a fixed step.
//!
//! Column `j` holds the law of the next bin given the field sits at center
//! `j`: normal masses integrated over each target bin, tails folded into the
//! edge bins. Entries below `TRUNCATION` at the ends of a column are dropped
//! and the column is rescaled to unit mass, which leaves a narrow band.
//!
//! The band is stored in panels of `ROWS` target rows. Within a panel each
//! source column contributes one short contiguous vector, so the product
//! keeps `ROWS` accumulators in registers and never revisits the output.

use super::grid::{binned_normal, PosteriorGrid};
use crate::error::{Error, Result};
use crate::ou::OuParams;

const TRUNCATION: f64 = 1e-12;
const ROWS: usize = 8;
const CHAINS: usize = 4;

#[derive(Debug, Clone)]
pub struct OuKernel {
    n: usize,
    /// First source column of each panel.
    first_col: Vec<usize>,
    /// Offset of each panel in `data`; the last entry is the total length.
    offset: Vec<usize>,
    /// Panel `b`, column `first_col[b] + c`, row `b * ROWS + r` sits at
    /// `offset[b] + c * ROWS + r`.
    data: Vec<f64>,
    dt: f64,
}

impl OuKernel {
    /// Transition over `dt` on the bins of `grid`.
    pub fn new(grid: &PosteriorGrid, dt: f64, ou: &OuParams) -> Result<Self> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("prediction step must be non-negative, got {dt}")));
        }
        let n = grid.n_bins();
        let edges = grid.edges();
        let sd = ou.transition_variance(dt).sqrt();

        let mut col_lo = Vec::with_capacity(n);
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut column = vec![0.0; n];
        for &x in grid.centers() {
            let (mean, _) = ou.transition(x, dt);
            binned_normal(&edges, mean, sd, &mut column);
            let lo = column.iter().position(|&p| p >= TRUNCATION).unwrap_or(0);
            let hi = column.iter().rposition(|&p| p >= TRUNCATION).map_or(n, |i| i + 1);
            let mass: f64 = column[lo..hi].iter().sum();
            col_lo.push(lo);
            cols.push(column[lo..hi].iter().map(|p| p / mass).collect());
        }

        let panels = n.div_ceil(ROWS);
        let mut first_col = Vec::with_capacity(panels);
        let mut offset = Vec::with_capacity(panels + 1);
        let mut data = Vec::new();
        for b in 0..panels {
            let (r0, r1) = (b * ROWS, ((b + 1) * ROWS).min(n));
            let touches = |j: usize| col_lo[j] < r1 && col_lo[j] + cols[j].len() > r0;
            let c0 = (0..n).find(|&j| touches(j)).unwrap_or(0);
            let c1 = (0..n).rfind(|&j| touches(j)).map_or(c0, |j| j + 1);
            first_col.push(c0);
            offset.push(data.len());
            for j in c0..c1 {
                for i in r0..r0 + ROWS {
                    let p = i.checked_sub(col_lo[j]).and_then(|k| cols[j].get(k)).copied().unwrap_or(0.0);
                    data.push(if i < r1 { p } else { 0.0 });
                }
            }
        }
        offset.push(data.len());
        Ok(Self { n, first_col, offset, data, dt })
    }

    pub fn n_bins(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Stored entries, padding included; a dense kernel would hold `n^2`.
    pub fn stored(&self) -> usize {
        self.data.len()
    }

    /// Widest panel, in source columns.
    pub fn bandwidth(&self) -> usize {
        self.offset.windows(2).map(|w| (w[1] - w[0]) / ROWS).max().unwrap_or(0)
    }

    /// `P(target bin i | source bin j)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let b = i / ROWS;
        let cols = (self.offset[b + 1] - self.offset[b]) / ROWS;
        match j.checked_sub(self.first_col[b]) {
            Some(c) if c < cols => self.data[self.offset[b] + c * ROWS + i % ROWS],
            _ => 0.0,
        }
    }

    /// Mass leaving source bin `j`; one up to rounding.
    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.entry(i, j)).sum()
    }

    /// `out = scale * K w`.
    pub fn apply_scaled(&self, w: &[f64], out: &mut [f64], scale: f64) {
        assert_eq!(w.len(), self.n);
        assert_eq!(out.len(), self.n);
        #[cfg(target_arch = "x86_64")]
        {
            if std::arch::is_x86_feature_detected!("avx512f") && std::arch::is_x86_feature_detected!("fma") {
                // SAFETY: the required target feature was detected at runtime.
                return unsafe { self.apply_avx512(w, out, scale) };
            }
            if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
                // SAFETY: as above.
                return unsafe { self.apply_avx2(w, out, scale) };
            }
        }
        self.apply_portable(w, out, scale)
    }

    /// `out = K w`.
    pub fn apply(&self, w: &[f64], out: &mut [f64]) {
        self.apply_scaled(w, out, 1.0)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f,fma")]
    unsafe fn apply_avx512(&self, w: &[f64], out: &mut [f64], scale: f64) {
        self.apply_portable(w, out, scale)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2,fma")]
    unsafe fn apply_avx2(&self, w: &[f64], out: &mut [f64], scale: f64) {
        self.apply_portable(w, out, scale)
    }

    // `CHAINS` independent accumulators per row, taking source columns in
    // turn, hide the FMA latency. The order of operations is fixed by the
    // source and `mul_add` is always fused, so every instruction set gives
    // the same bits; without hardware FMA it is merely slow.
    #[inline(always)]
    fn apply_portable(&self, w: &[f64], out: &mut [f64], scale: f64) {
        for (b, dst) in out.chunks_mut(ROWS).enumerate() {
            let panel = &self.data[self.offset[b]..self.offset[b + 1]];
            let src = &w[self.first_col[b]..self.first_col[b] + panel.len() / ROWS];
            let mut acc = [[0.0f64; ROWS]; CHAINS];
            let groups = panel.chunks_exact(CHAINS * ROWS).zip(src.chunks_exact(CHAINS));
            let tail = src.len() - src.len() % CHAINS;
            for (k, ws) in groups {
                for c in 0..CHAINS {
                    for r in 0..ROWS {
                        acc[c][r] = ws[c].mul_add(k[c * ROWS + r], acc[c][r]);
                    }
                }
            }
            for (c, &wl) in src[tail..].iter().enumerate() {
                let k = &panel[(tail + c) * ROWS..(tail + c + 1) * ROWS];
                for r in 0..ROWS {
                    acc[c][r] = wl.mul_add(k[r], acc[c][r]);
                }
            }
            for (r, o) in dst.iter_mut().enumerate() {
                let mut sum = acc[0][r];
                for a in &acc[1..] {
                    sum += a[r];
                }
                *o = sum * scale;
            }
        }
    }

    /// One prediction step of `grid` in place; `scratch` must have the grid's
    /// length. The result is renormalized.
    pub fn predict(&self, grid: &mut PosteriorGrid, scratch: &mut Vec<f64>) {
        scratch.resize(self.n, 0.0);
        self.apply(grid.weights(), scratch);
        grid.weights_mut().copy_from_slice(scratch);
        grid.normalize();
    }
}

/// Convenience wrapper: `grid` predicted forward by `dt`.
pub fn ou_predict(grid: &PosteriorGrid, dt: f64, ou: &OuParams) -> Result<PosteriorGrid> {
    let kernel = OuKernel::new(grid, dt, ou)?;
    let mut out = grid.clone();
    let mut scratch = Vec::new();
    kernel.predict(&mut out, &mut scratch);
    Ok(out)
}
