//! Banded LU with partial pivoting for the Newton systems.

/// Square matrix with `kl` sub- and `ku` super-diagonals. Each row stores
/// columns `i - kl ..= i + ku + kl`; the extra `kl` columns absorb fill-in
/// from row interchanges.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Singular {
    pub column: usize,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl, "({i}, {j}) outside the band");
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i}, {j}) outside the band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + self.kl).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Solves `A x = b` in place of `self`.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>, Singular> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        let reach = self.ku + self.kl;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + reach).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 0.0 && best.is_finite()) {
                return Err(Singular { column: k });
            }
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.data.swap(a, b);
                }
                x.swap(k, p);
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last_row {
                let si = self.slot(i, k);
                let m = self.data[si] / pivot;
                if m == 0.0 {
                    continue;
                }
                self.data[si] = 0.0;
                for j in k + 1..=last_col {
                    let (sk, sj) = (self.slot(k, j), self.slot(i, j));
                    self.data[sj] -= m * self.data[sk];
                }
                x[i] -= m * x[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            let mut acc = x[k];
            for j in k + 1..=last_col {
                acc -= self.get(k, j) * x[j];
            }
            x[k] = acc / self.get(k, k);
        }
        Ok(x)
    }
}
