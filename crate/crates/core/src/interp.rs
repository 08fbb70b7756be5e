//! Piecewise quintic Hermite tables.
//!
//! Each channel stores value, first and second derivative at every node, so
//! the interpolant is C² and reproduces the stored derivatives exactly at
//! the nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Taylor3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteTable {
    /// Strictly increasing nodes.
    pub nodes: Vec<f64>,
    /// `channels[c][i] = [f, f', f'']` of channel `c` at node `i`.
    pub channels: Vec<Vec<[f64; 3]>>,
}

impl HermiteTable {
    pub fn new(nodes: Vec<f64>, channels: Vec<Vec<[f64; 3]>>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::SpecValidation("table needs at least two nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::SpecValidation("table nodes must be strictly increasing".into()));
        }
        if channels.iter().any(|c| c.len() != nodes.len()) {
            return Err(Error::SpecValidation("table channel length mismatch".into()));
        }
        Ok(Self { nodes, channels })
    }

    pub fn domain(&self) -> [f64; 2] {
        [self.nodes[0], *self.nodes.last().unwrap()]
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    fn segment(&self, x: f64) -> Result<usize> {
        let [a, b] = self.domain();
        let tol = 1e-9 * (b - a);
        if !(x >= a - tol && x <= b + tol) {
            return Err(Error::ParameterOutOfRange { u: x, v: f64::NAN });
        }
        let i = self.nodes.partition_point(|&n| n <= x);
        Ok(i.saturating_sub(1).min(self.nodes.len() - 2))
    }

    /// Interpolant of channel `c` with derivatives up to order three.
    pub fn eval(&self, c: usize, x: f64) -> Result<Taylor3> {
        let i = self.segment(x)?;
        Ok(self.eval_segment(c, i, x))
    }

    pub fn eval_all(&self, x: f64) -> Result<Vec<Taylor3>> {
        let i = self.segment(x)?;
        Ok((0..self.channels.len()).map(|c| self.eval_segment(c, i, x)).collect())
    }

    fn eval_segment(&self, c: usize, i: usize, x: f64) -> Taylor3 {
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let t = Taylor3([(x - x0) / h, 1.0 / h, 0.0, 0.0]);
        let [f0, d0, s0] = self.channels[c][i];
        let [f1, d1, s1] = self.channels[c][i + 1];
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h01 = t - t3 * 6.0 + t4 * 8.0 - t5 * 3.0;
        let h02 = (t2 - t3 * 3.0 + t4 * 3.0 - t5) * 0.5;
        let h10 = t3 * 10.0 - t4 * 15.0 + t5 * 6.0;
        let h11 = t3 * -4.0 + t4 * 7.0 - t5 * 3.0;
        let h12 = (t3 - t4 * 2.0 + t5) * 0.5;
        // h00 = 1 - h10; writing the value part as f0 + h10 (f1 - f0) avoids
        // cancellation in the derivatives when h is small.
        h10 * (f1 - f0) + f0 + h01 * (d0 * h) + h02 * (s0 * h * h) + h11 * (d1 * h) + h12 * (s1 * h * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sin_table(n: usize) -> HermiteTable {
        let nodes: Vec<f64> = (0..=n).map(|i| 3.0 * i as f64 / n as f64).collect();
        let ch = nodes.iter().map(|&x| [x.sin(), x.cos(), -x.sin()]).collect();
        HermiteTable::new(nodes, vec![ch]).unwrap()
    }

    #[test]
    fn reproduces_nodes_exactly() {
        let t = sin_table(10);
        let x = t.nodes[3];
        let v = t.eval(0, x).unwrap();
        assert_relative_eq!(v.d(0), x.sin(), epsilon = 1e-15);
        assert_relative_eq!(v.d(1), x.cos(), epsilon = 1e-13);
        assert_relative_eq!(v.d(2), -x.sin(), epsilon = 1e-11);
    }

    #[test]
    fn sixth_order_convergence() {
        let err = |n| {
            let t = sin_table(n);
            (0..200)
                .map(|k| {
                    let x = 0.013 + 2.97 * k as f64 / 200.0;
                    (t.eval(0, x).unwrap().d(0) - x.sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        let r = err(8) / err(16);
        assert!(r > 40.0, "ratio {r}");
    }

    #[test]
    fn quintic_is_reproduced() {
        let p = |x: f64| [x.powi(5) - x, 5.0 * x.powi(4) - 1.0, 20.0 * x.powi(3)];
        let nodes = vec![-1.0, 0.3, 2.0];
        let t = HermiteTable::new(nodes.clone(), vec![nodes.iter().map(|&x| p(x)).collect()]).unwrap();
        let v = t.eval(0, 1.1).unwrap();
        assert_relative_eq!(v.d(0), p(1.1)[0], epsilon = 1e-12);
        assert_relative_eq!(v.d(2), p(1.1)[2], epsilon = 1e-10);
    }

    #[test]
    fn rejects_bad_tables_and_points() {
        assert!(HermiteTable::new(vec![0.0, 0.0], vec![vec![[0.0; 3]; 2]]).is_err());
        assert!(sin_table(4).eval(0, 3.5).is_err());
    }
}
