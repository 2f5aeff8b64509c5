//! Gauss-type quadrature rules built with the Golub-Welsch algorithm.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Family {
    Legendre,
    Hermite,
    Laguerre,
}

type Rule = (Vec<f64>, Vec<f64>);

/// Standard rules are deterministic, so each `(family, n)` is solved once.
fn standard_rule(family: Family, n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<(Family, usize), Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().expect("quadrature cache").get(&(family, n)) {
        return r.clone();
    }
    let rule = match family {
        Family::Legendre => {
            let off: Vec<f64> = (1..n)
                .map(|k| {
                    let k = k as f64;
                    k / (4.0 * k * k - 1.0).sqrt()
                })
                .collect();
            golub_welsch(&vec![0.0; n], &off, 2.0)
        }
        Family::Hermite => {
            let off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
            golub_welsch(&vec![0.0; n], &off, 1.0)
        }
        Family::Laguerre => {
            let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + 1.0).collect();
            let off: Vec<f64> = (1..n).map(|k| k as f64).collect();
            golub_welsch(&diag, &off, 1.0)
        }
    };
    cache.lock().expect("quadrature cache").insert((family, n), rule.clone());
    rule
}

/// Nodes and positive weights on a (possibly unbounded) interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        crate::numeric::kahan_sum(self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.nodes.is_empty() || self.nodes.len() != self.weights.len() {
            return Err("quadrature rule must have matching, nonempty node/weight arrays".into());
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err("quadrature weights must be strictly positive".into());
        }
        if self.nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err("quadrature nodes must be strictly increasing".into());
        }
        Ok(())
    }

    /// Gauss-Legendre rule for Lebesgue measure on `[a, b]`.
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Self {
        let (x, w) = standard_rule(Family::Legendre, n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        QuadratureRule {
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|w| half * w).collect(),
            lower: a,
            upper: b,
        }
    }

    /// Gauss-Hermite rule integrating against the `N(mean, var)` law.
    pub fn gauss_hermite_normal(n: usize, mean: f64, var: f64) -> Self {
        let (z, w) = standard_rule(Family::Hermite, n);
        let sd = var.sqrt();
        QuadratureRule {
            nodes: z.iter().map(|z| mean + sd * z).collect(),
            weights: w,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    /// Gauss-Laguerre rule integrating against the unit exponential law.
    pub fn gauss_laguerre(n: usize) -> Self {
        let (x, w) = standard_rule(Family::Laguerre, n);
        QuadratureRule {
            nodes: x,
            weights: w,
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }

    /// Drop nodes whose weight underflowed to zero.
    pub(crate) fn pruned(mut self) -> Self {
        let keep: Vec<bool> = self.weights.iter().map(|w| *w > 0.0).collect();
        let mut k = keep.iter();
        self.nodes.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        self.weights.retain(|_| *k.next().unwrap());
        self
    }
}

/// Nodes (ascending) and weights of the Gauss rule whose Jacobi matrix has
/// diagonal `diag` and off-diagonal `off`; `mu0` is the total weight mass.
///
/// Implicit-shift QL on the tridiagonal matrix, carrying only the first
/// component of each eigenvector, which is all the weights need.
fn golub_welsch(diag: &[f64], off: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 100, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z).map(|(x, v)| (x, mu0 * v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}
