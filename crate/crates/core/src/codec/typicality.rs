//! Letter-frequency joint typicality. A tuple of sequences is accepted when
//! every joint letter count lies within `delta * n` of its expectation under
//! the model distribution, and letters of zero model probability never occur.

/// Precomputed per-cell count bounds for one model table.
#[derive(Debug, Clone)]
pub struct TypeTest {
    n: usize,
    dims: Vec<usize>,
    lo: Vec<u32>,
    hi: Vec<u32>,
}

impl TypeTest {
    /// `probs` is the dense model distribution over the product of `dims`.
    pub fn new(probs: &[f64], dims: Vec<usize>, n: usize, delta: f64) -> Self {
        let cells: usize = dims.iter().product();
        assert_eq!(cells, probs.len(), "model table does not match dims");
        let slack = delta * n as f64;
        let mut lo = Vec::with_capacity(cells);
        let mut hi = Vec::with_capacity(cells);
        for &p in probs {
            if p <= 0.0 {
                lo.push(0);
                hi.push(0);
            } else {
                let expect = n as f64 * p;
                let l = (expect - slack - 1e-9).ceil().max(0.0) as u32;
                let h = (expect + slack + 1e-9).floor().min(n as f64) as u32;
                lo.push(l);
                hi.push(h);
            }
        }
        Self { n, dims, lo, hi }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_cells(&self) -> usize {
        self.lo.len()
    }

    pub fn upper(&self, cell: usize) -> u32 {
        self.hi[cell]
    }

    fn check_counts(&self, counts: &[u32]) -> bool {
        counts
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&c, (&l, &h))| c >= l && c <= h)
    }

    /// Typicality of a pair of sequences against a two-axis model.
    pub fn accepts_pair(&self, a: &[u8], b: &[u8], counts: &mut [u32]) -> bool {
        debug_assert_eq!(self.dims.len(), 2);
        let db = self.dims[1];
        counts.fill(0);
        for (&ai, &bi) in a.iter().zip(b) {
            let cell = ai as usize * db + bi as usize;
            counts[cell] += 1;
            if counts[cell] > self.hi[cell] {
                return false;
            }
        }
        self.check_counts(counts)
    }

    /// Typicality of a triple of sequences against a three-axis model.
    pub fn accepts_triple(&self, a: &[u8], b: &[u8], c: &[u8], counts: &mut [u32]) -> bool {
        debug_assert_eq!(self.dims.len(), 3);
        let (db, dc) = (self.dims[1], self.dims[2]);
        counts.fill(0);
        for i in 0..a.len() {
            let cell = (a[i] as usize * db + b[i] as usize) * dc + c[i] as usize;
            counts[cell] += 1;
            if counts[cell] > self.hi[cell] {
                return false;
            }
        }
        self.check_counts(counts)
    }
}
