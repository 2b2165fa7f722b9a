//! Dense-matrix support for the per-step inner loops.
//!
//! [`SquareMat`] is the storage used by learners for |S|×|S| model
//! matrices (learned source maps, iLSTD's `A`). Column-major storage
//! makes source-trace columns cheap but rows touch |S| distinct cache
//! lines, which wrecks the linear scaling of per-step cost once the
//! matrix outgrows L2. The layout here blocks the matrix into 2-row ×
//! 4-column tiles — exactly one 64-byte line each, stored block-column-
//! major — so a column walk streams contiguous lines and a row walk
//! touches |S|/4 lines instead of |S|. The backing buffer is 2 MiB-
//! aligned and advised as hugepage-backed to keep the strided row walks
//! off the TLB.
//!
//! Padding elements (odd |S| rows, |S| mod 4 columns) are guaranteed
//! zero and are never observable through the public surface.

use nalgebra::DMatrix;

/// Induced ∞-norm (maximum absolute row sum).
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        let mut row_sum = 0.0;
        for j in 0..m.ncols() {
            row_sum += m[(i, j)].abs();
        }
        worst = worst.max(row_sum);
    }
    worst
}

/// Frobenius norm of `a - b`.
pub fn frobenius_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

const HUGE_ALIGN: usize = 2 * 1024 * 1024;

/// Owned, zero-initialized f64 buffer, 2 MiB-aligned and madvised for
/// transparent hugepages on Linux. Falls back to plain aligned memory
/// when the advice is unsupported.
struct AlignedBuf {
    ptr: *mut f64,
    len: usize,
}

unsafe impl Send for AlignedBuf {}
unsafe impl Sync for AlignedBuf {}

impl AlignedBuf {
    fn zeroed(len: usize) -> Self {
        assert!(len > 0);
        let bytes = (len * 8).div_ceil(HUGE_ALIGN) * HUGE_ALIGN;
        unsafe {
            let mut raw: *mut libc::c_void = std::ptr::null_mut();
            let rc = libc::posix_memalign(&mut raw, HUGE_ALIGN, bytes);
            assert_eq!(rc, 0, "allocation of {bytes} bytes failed");
            #[cfg(target_os = "linux")]
            {
                // Best effort; harmless if the kernel refuses.
                libc::madvise(raw, bytes, libc::MADV_HUGEPAGE);
            }
            std::ptr::write_bytes(raw as *mut u8, 0, bytes);
            AlignedBuf {
                ptr: raw as *mut f64,
                len,
            }
        }
    }

    #[inline]
    fn as_slice(&self) -> &[f64] {
        unsafe { std::slice::from_raw_parts(self.ptr, self.len) }
    }

    #[inline]
    fn as_mut_slice(&mut self) -> &mut [f64] {
        unsafe { std::slice::from_raw_parts_mut(self.ptr, self.len) }
    }
}

impl Drop for AlignedBuf {
    fn drop(&mut self) {
        unsafe { libc::free(self.ptr as *mut libc::c_void) }
    }
}

impl Clone for AlignedBuf {
    fn clone(&self) -> Self {
        let mut out = AlignedBuf::zeroed(self.len);
        out.as_mut_slice().copy_from_slice(self.as_slice());
        out
    }
}

/// Zeroed f64 vector on the aligned, hugepage-advised allocator, for
/// hot per-step vectors whose layout should not depend on allocator
/// bucketing luck.
#[derive(Clone)]
pub struct AlignedVec(AlignedBuf);

impl AlignedVec {
    pub fn zeros(len: usize) -> Self {
        AlignedVec(AlignedBuf::zeroed(len))
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        self.0.as_mut_slice()
    }
}

impl std::fmt::Debug for AlignedVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "AlignedVec({})", self.0.len)
    }
}

/// Square matrix in 2×4 line-blocked layout with O(|S|) column and row
/// primitives.
#[derive(Clone)]
pub struct SquareMat {
    buf: AlignedBuf,
    n: usize,
    /// Block-grid height: ⌈n/2⌉ block rows.
    brows: usize,
    /// Block-grid width: ⌈n/4⌉ block columns.
    bcols: usize,
}

impl SquareMat {
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0);
        let brows = n.div_ceil(2);
        let bcols = n.div_ceil(4);
        SquareMat {
            buf: AlignedBuf::zeroed(brows * bcols * 8),
            n,
            brows,
            bcols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SquareMat::zeros(n);
        for d in 0..n {
            m.set(d, d, 1.0);
        }
        m
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let mut out = SquareMat::zeros(m.nrows());
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                out.set(i, j, m[(i, j)]);
            }
        }
        out
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, row: usize, col: usize) -> usize {
        ((col >> 2) * self.brows + (row >> 1)) * 8 + ((row & 1) << 2) + (col & 3)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.buf.as_slice()[self.offset(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let k = self.offset(row, col);
        self.buf.as_mut_slice()[k] = value;
    }

    pub fn read_col_into(&self, j: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n);
        let data = self.buf.as_slice();
        let mut base = (j >> 2) * self.brows * 8 + (j & 3);
        let mut pairs = out.chunks_exact_mut(2);
        for pair in &mut pairs {
            pair[0] = data[base];
            pair[1] = data[base + 4];
            base += 8;
        }
        if let [last] = pairs.into_remainder() {
            *last = data[base];
        }
    }

    pub fn read_row_into(&self, i: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n);
        let data = self.buf.as_slice();
        let mut base = (i >> 1) * 8 + ((i & 1) << 2);
        let stride = self.brows * 8;
        let mut quads = out.chunks_exact_mut(4);
        for quad in &mut quads {
            quad.copy_from_slice(&data[base..base + 4]);
            base += stride;
        }
        for (k, slot) in quads.into_remainder().iter_mut().enumerate() {
            *slot = data[base + k];
        }
    }

    /// `out[k] += a · M[k, j]` for all rows k.
    pub fn col_axpy_into(&self, j: usize, a: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n);
        let data = self.buf.as_slice();
        let mut base = (j >> 2) * self.brows * 8 + (j & 3);
        let mut pairs = out.chunks_exact_mut(2);
        for pair in &mut pairs {
            pair[0] += a * data[base];
            pair[1] += a * data[base + 4];
            base += 8;
        }
        if let [last] = pairs.into_remainder() {
            *last += a * data[base];
        }
    }

    /// Column blend: `[M]_{·dst} ← keep·[M]_{·dst} + w·src`, then
    /// `M[dst, dst] += unit`. `src` must not alias the matrix.
    pub fn blend_col(&mut self, dst: usize, keep: f64, w: f64, src: &[f64], unit: f64) {
        debug_assert_eq!(src.len(), self.n);
        let diag = self.offset(dst, dst);
        let data = self.buf.as_mut_slice();
        let mut base = (dst >> 2) * self.brows * 8 + (dst & 3);
        let mut pairs = src.chunks_exact(2);
        for pair in &mut pairs {
            data[base] = keep * data[base] + w * pair[0];
            data[base + 4] = keep * data[base + 4] + w * pair[1];
            base += 8;
        }
        if let [last] = pairs.remainder() {
            data[base] = keep * data[base] + w * last;
        }
        data[diag] += unit;
    }

    /// `[M]_{·dst} ← keep·[M]_{·dst}`, then `M[dst, dst] += unit`.
    pub fn scale_col(&mut self, dst: usize, keep: f64, unit: f64) {
        let diag = self.offset(dst, dst);
        let data = self.buf.as_mut_slice();
        let mut base = (dst >> 2) * self.brows * 8 + (dst & 3);
        let mut rows = 0;
        while rows + 2 <= self.n {
            data[base] *= keep;
            data[base + 4] *= keep;
            base += 8;
            rows += 2;
        }
        if rows < self.n {
            data[base] *= keep;
        }
        data[diag] += unit;
    }

    /// Row blend: `[M]_{dst·} ← keep·[M]_{dst·} + w·[M]_{src·}`, then
    /// `M[dst, dst] += unit`. One pass; element-wise read-modify-write,
    /// so `src == dst` combines each entry's old value once. Padding
    /// columns blend zeros into zeros and stay zero.
    pub fn blend_row_from_row(&mut self, dst: usize, keep: f64, w: f64, src: usize, unit: f64) {
        let diag = self.offset(dst, dst);
        let data = self.buf.as_mut_slice();
        let lane_d = (dst & 1) << 2;
        let lane_s = (src & 1) << 2;
        let mut base_d = (dst >> 1) * 8 + lane_d;
        let mut base_s = (src >> 1) * 8 + lane_s;
        let stride = self.brows * 8;
        for _ in 0..self.bcols {
            for l in 0..4 {
                data[base_d + l] = keep * data[base_d + l] + w * data[base_s + l];
            }
            base_d += stride;
            base_s += stride;
        }
        data[diag] += unit;
    }

    /// Dot product of row `i` with `v`.
    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.n);
        let data = self.buf.as_slice();
        let mut base = (i >> 1) * 8 + ((i & 1) << 2);
        let stride = self.brows * 8;
        let mut acc = 0.0;
        let mut quads = v.chunks_exact(4);
        for quad in &mut quads {
            acc += data[base] * quad[0]
                + data[base + 1] * quad[1]
                + data[base + 2] * quad[2]
                + data[base + 3] * quad[3];
            base += stride;
        }
        for (k, x) in quads.remainder().iter().enumerate() {
            acc += data[base + k] * x;
        }
        acc
    }

    /// `out[c] += a · M[i, c]` for all columns c.
    pub fn row_axpy_into(&self, i: usize, a: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n);
        let data = self.buf.as_slice();
        let mut base = (i >> 1) * 8 + ((i & 1) << 2);
        let stride = self.brows * 8;
        let mut quads = out.chunks_exact_mut(4);
        for quad in &mut quads {
            quad[0] += a * data[base];
            quad[1] += a * data[base + 1];
            quad[2] += a * data[base + 2];
            quad[3] += a * data[base + 3];
            base += stride;
        }
        for (k, slot) in quads.into_remainder().iter_mut().enumerate() {
            *slot += a * data[base + k];
        }
    }

    /// `out = M · x`.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        out.fill(0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            self.col_axpy_into(j, xj, out);
        }
    }

    /// Frobenius norm of `M - other`.
    pub fn frobenius_diff(&self, other: &DMatrix<f64>) -> f64 {
        debug_assert_eq!(other.nrows(), self.n);
        let mut acc = 0.0;
        for j in 0..self.n {
            for i in 0..self.n {
                let d = self.get(i, j) - other[(i, j)];
                acc += d * d;
            }
        }
        acc.sqrt()
    }
}

impl std::fmt::Debug for SquareMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SquareMat({}x{})", self.n, self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> (SquareMat, DMatrix<f64>) {
        let dm = DMatrix::from_fn(n, n, |i, j| ((i * 31 + j * 7) % 11) as f64 - 5.0 + 0.1 * i as f64);
        (SquareMat::from_dmatrix(&dm), dm)
    }

    #[test]
    fn round_trip_preserves_elements() {
        for n in [1, 2, 3, 4, 5, 7, 8, 9, 125] {
            let (m, dm) = sample(n);
            assert_eq!(m.to_dmatrix(), dm, "n = {n}");
        }
    }

    #[test]
    fn blend_ops_match_naive() {
        for n in [5, 7, 8, 9] {
            let (mut m, mut reference) = sample(n);
            let src: Vec<f64> = (0..n).map(|k| k as f64 - 2.0).collect();
            m.blend_col(2, 0.9, 0.05, &src, 0.1);
            for i in 0..n {
                reference[(i, 2)] = 0.9 * reference[(i, 2)] + 0.05 * src[i];
            }
            reference[(2, 2)] += 0.1;

            m.blend_row_from_row(4, 0.8, 0.15, 1, 0.2);
            for c in 0..n {
                reference[(4, c)] = 0.8 * reference[(4, c)] + 0.15 * reference[(1, c)];
            }
            reference[(4, 4)] += 0.2;

            m.blend_row_from_row(3, 0.7, 0.2, 3, 0.05);
            for c in 0..n {
                reference[(3, c)] = 0.7 * reference[(3, c)] + 0.2 * reference[(3, c)];
            }
            reference[(3, 3)] += 0.05;

            m.scale_col(1, 0.5, 0.25);
            for i in 0..n {
                reference[(i, 1)] *= 0.5;
            }
            reference[(1, 1)] += 0.25;

            assert!(m.frobenius_diff(&reference) < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn vector_ops_agree_with_nalgebra() {
        for n in [3, 7, 8, 9, 12] {
            let (m, dm) = sample(n);
            let x: Vec<f64> = (0..n).map(|k| (k as f64).sin()).collect();
            let mut out = vec![0.0; n];
            m.matvec(&x, &mut out);
            let expect = &dm * DMatrix::from_column_slice(n, 1, &x);
            for i in 0..n {
                assert!((out[i] - expect[(i, 0)]).abs() < 1e-12);
                assert!((m.row_dot(i, &x) - expect[(i, 0)]).abs() < 1e-12);
            }

            let mut col = vec![0.0; n];
            m.read_col_into(2.min(n - 1), &mut col);
            let mut row = vec![0.0; n];
            m.read_row_into(1.min(n - 1), &mut row);
            for k in 0..n {
                assert_eq!(col[k], dm[(k, 2.min(n - 1))]);
                assert_eq!(row[k], dm[(1.min(n - 1), k)]);
            }

            let mut acc: Vec<f64> = (0..n).map(|k| k as f64).collect();
            let mut acc_ref = acc.clone();
            m.col_axpy_into(0, 0.5, &mut acc);
            m.row_axpy_into(0, -0.25, &mut acc);
            for (k, slot) in acc_ref.iter_mut().enumerate() {
                *slot += 0.5 * dm[(k, 0)] - 0.25 * dm[(0, k)];
            }
            for k in 0..n {
                assert!((acc[k] - acc_ref[k]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn inf_norm_of_stochastic_matrix_is_one() {
        let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.25, 0.75]);
        assert!((inf_norm(&p) - 1.0).abs() < 1e-15);
    }
}
