//! Small direct solvers for banded systems.

/// Square banded matrix stored by diagonals: `kl` sub-diagonals and `ku`
/// super-diagonals.
#[derive(Clone, Debug)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    // Row-major, each row holds columns i-kl ..= i+ku.
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i}, {j}) outside the band");
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let s = self.slot(i, j);
        self.data[s] += value;
    }

    /// Solves `A x = rhs` by Gaussian elimination without pivoting, which
    /// is stable for the diagonally dominant M-matrices produced by
    /// absorbing chains. Returns `None` on a zero pivot.
    pub fn solve(mut self, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        for k in 0..n {
            let pivot = self.get(k, k);
            if pivot == 0.0 || !pivot.is_finite() {
                return None;
            }
            for i in k + 1..(k + self.kl + 1).min(n) {
                let factor = self.get(i, k) / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in k..(k + self.ku + 1).min(n) {
                    let v = self.get(k, j);
                    if v != 0.0 {
                        let s = self.slot(i, j);
                        self.data[s] -= factor * v;
                    }
                }
                rhs[i] -= factor * rhs[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for j in i + 1..(i + self.ku + 1).min(n) {
                s -= self.get(i, j) * x[j];
            }
            x[i] = s / self.get(i, i);
        }
        Some(x)
    }
}
