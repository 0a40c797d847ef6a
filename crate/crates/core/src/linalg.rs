//! Dense exact linear algebra over a field, sized for torsion-point and
//! fixed-point computations (dimensions stay in the low tens).

use crate::ring::Ring;

/// Row-major matrix over a field-like ring (every nonzero entry must invert).
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<R: Ring> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<R>,
}

impl<R: Ring> Mat<R> {
    pub fn new(rows: usize, cols: usize, data: Vec<R>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn from_columns(cols: Vec<Vec<R>>) -> Self {
        let ncols = cols.len();
        let nrows = cols[0].len();
        let proto = cols[0][0].zero_like();
        let mut data = vec![proto; nrows * ncols];
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), nrows);
            for (i, v) in col.iter().enumerate() {
                data[i * ncols + j] = v.clone();
            }
        }
        Mat {
            rows: nrows,
            cols: ncols,
            data,
        }
    }

    pub fn at(&self, i: usize, j: usize) -> &R {
        &self.data[i * self.cols + j]
    }

    fn set(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.cols + j] = v;
    }

    /// Reduced row echelon form; returns the pivot column of each pivot row.
    fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row >= self.rows {
                break;
            }
            let Some(piv) = (row..self.rows).find(|&i| !self.at(i, col).is_zero()) else {
                continue;
            };
            for j in 0..self.cols {
                let tmp = self.at(row, j).clone();
                self.set(row, j, self.at(piv, j).clone());
                self.set(piv, j, tmp);
            }
            let inv = self.at(row, col).inv().expect("field entry");
            for j in 0..self.cols {
                self.set(row, j, self.at(row, j).mul(&inv));
            }
            for i in 0..self.rows {
                if i == row || self.at(i, col).is_zero() {
                    continue;
                }
                let factor = self.at(i, col).clone();
                for j in 0..self.cols {
                    let v = self.at(i, j).sub(&factor.mul(self.at(row, j)));
                    self.set(i, j, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of the right kernel {v : M v = 0}.
    pub fn kernel_basis(&self) -> Vec<Vec<R>> {
        let proto = self
            .data
            .first()
            .map(|x| x.zero_like())
            .expect("kernel of an empty matrix");
        let mut m = self.clone();
        let pivots = m.rref();
        let mut basis = Vec::new();
        let mut piv_iter = 0;
        for col in 0..self.cols {
            if piv_iter < pivots.len() && pivots[piv_iter] == col {
                piv_iter += 1;
                continue;
            }
            // Free column: back-substitute.
            let mut v = vec![proto.clone(); self.cols];
            v[col] = proto.one_like();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = m.at(r, col).neg();
            }
            basis.push(v);
        }
        basis
    }

    /// Solve M v = rhs; `None` when inconsistent. Free variables are set to 0.
    pub fn solve(&self, rhs: &[R]) -> Option<Vec<R>> {
        assert_eq!(rhs.len(), self.rows);
        let proto = rhs.first()?.zero_like();
        let mut aug = Mat {
            rows: self.rows,
            cols: self.cols + 1,
            data: {
                let mut d = Vec::with_capacity(self.rows * (self.cols + 1));
                for i in 0..self.rows {
                    d.extend(
                        self.data[i * self.cols..(i + 1) * self.cols]
                            .iter()
                            .cloned(),
                    );
                    d.push(rhs[i].clone());
                }
                d
            },
        };
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut v = vec![proto; self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = aug.at(r, self.cols).clone();
        }
        Some(v)
    }

    pub fn det(&self) -> R {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        let mut det = self.data[0].one_like();
        for col in 0..m.cols {
            let Some(piv) = (col..m.rows).find(|&i| !m.at(i, col).is_zero()) else {
                return self.data[0].zero_like();
            };
            if piv != col {
                det = det.neg();
                for j in 0..m.cols {
                    let tmp = m.at(col, j).clone();
                    m.set(col, j, m.at(piv, j).clone());
                    m.set(piv, j, tmp);
                }
            }
            let d = m.at(col, col).clone();
            det = det.mul(&d);
            let inv = d.inv().expect("field entry");
            for i in col + 1..m.rows {
                if m.at(i, col).is_zero() {
                    continue;
                }
                let factor = m.at(i, col).mul(&inv);
                for j in col..m.cols {
                    let v = m.at(i, j).sub(&factor.mul(m.at(col, j)));
                    m.set(i, j, v);
                }
            }
        }
        det
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Tower;

    #[test]
    fn kernel_and_solve_over_f2() {
        let t = Tower::fq(2, 1, None).unwrap();
        let e = |n: u64| t.el_from_index(1, n);
        // [[1,1,0],[0,1,1]] over F_2: kernel spanned by (1,1,1).
        let m = Mat::new(2, 3, vec![e(1), e(1), e(0), e(0), e(1), e(1)]);
        let kb = m.kernel_basis();
        assert_eq!(kb.len(), 1);
        assert_eq!(kb[0], vec![e(1), e(1), e(1)]);
        let sol = m.solve(&[e(1), e(0)]).unwrap();
        // Check M*sol = rhs.
        let r0 = sol[0]
            .mul(m.at(0, 0))
            .add(&sol[1].mul(m.at(0, 1)))
            .add(&sol[2].mul(m.at(0, 2)));
        assert_eq!(r0, e(1));
    }

    #[test]
    fn determinant_matches_cofactor_2x2() {
        let t = Tower::fq(3, 1, None).unwrap();
        let e = |n: u64| t.el_from_index(1, n);
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        let m = Mat::new(2, 2, vec![e(a), e(b), e(c), e(d)]);
                        let expect = e(a).mul(&e(d)).sub(&e(b).mul(&e(c)));
                        assert_eq!(m.det(), expect);
                    }
                }
            }
        }
    }
}
