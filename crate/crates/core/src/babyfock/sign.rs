use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A generator index.
///
/// Plain (untwisted, single-index) generators use `j = 0`. Twisted generators
/// carry a signed `j` in `±1..=±k`, and `site` distinguishes the copies used by
/// the central-limit model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub site: u32,
    pub j: i32,
}

impl Label {
    pub const fn new(site: u32, j: i32) -> Self {
        Label { site, j }
    }

    pub const fn plain(site: u32) -> Self {
        Label { site, j: 0 }
    }

    /// `(site, j) -> (site, -j)`.
    pub const fn mirror(self) -> Self {
        Label {
            site: self.site,
            j: -self.j,
        }
    }

    pub const fn abs(self) -> Self {
        Label {
            site: self.site,
            j: self.j.abs(),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.j == 0 {
            write!(f, "{}", self.site)
        } else {
            write!(f, "({},{})", self.site, self.j)
        }
    }
}

/// Symmetric ±1 table on a finite index set with `-1` on the diagonal.
///
/// `ε(a, b) = +1` means `x_a` and `x_b` commute, `-1` that they anticommute.
#[derive(Clone, Debug, PartialEq)]
pub struct SignFunction {
    labels: Vec<Label>,
    index: HashMap<Label, usize>,
    values: Vec<i8>,
    mirror: bool,
}

impl SignFunction {
    /// Builds the table from `f`, which is consulted on every ordered pair of
    /// distinct labels. The diagonal is forced to `-1`.
    pub fn from_fn(labels: Vec<Label>, mut f: impl FnMut(Label, Label) -> i8) -> Result<Self> {
        let n = labels.len();
        let mut index = HashMap::with_capacity(n);
        for (pos, &l) in labels.iter().enumerate() {
            if index.insert(l, pos).is_some() {
                return Err(Error::domain(format!("duplicate label {l}")));
            }
        }
        let mut values = vec![-1i8; n * n];
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let v = f(labels[a], labels[b]);
                if v != 1 && v != -1 {
                    return Err(Error::domain(format!(
                        "sign value {v} at ({}, {}) is not ±1",
                        labels[a], labels[b]
                    )));
                }
                values[a * n + b] = v;
            }
        }
        for a in 0..n {
            for b in 0..a {
                if values[a * n + b] != values[b * n + a] {
                    return Err(Error::domain(format!(
                        "sign function is not symmetric at ({}, {})",
                        labels[a], labels[b]
                    )));
                }
            }
        }
        let mut sf = SignFunction {
            labels,
            index,
            values,
            mirror: false,
        };
        sf.mirror = sf.check_mirror();
        Ok(sf)
    }

    /// Every off-diagonal entry equal to `value`.
    pub fn constant(labels: Vec<Label>, value: i8) -> Result<Self> {
        Self::from_fn(labels, |_, _| value)
    }

    /// Lifts a site-level sign function to generator labels:
    /// `ε((i, j), (i', j')) = ε(i, i')`, so same-site generators anticommute.
    ///
    /// `js` lists the `j` values carried by every site, in the order they should
    /// appear inside a site block.
    pub fn lift_sites(&self, js: &[i32]) -> Result<Self> {
        let mut labels = Vec::with_capacity(self.labels.len() * js.len());
        for s in &self.labels {
            for &j in js {
                labels.push(Label::new(s.site, j));
            }
        }
        self.lift_onto(labels)
    }

    fn lift_onto(&self, labels: Vec<Label>) -> Result<Self> {
        let site_pos: HashMap<u32, usize> = self
            .labels
            .iter()
            .enumerate()
            .map(|(p, l)| (l.site, p))
            .collect();
        let n = self.labels.len();
        Self::from_fn(labels, |a, b| {
            let pa = site_pos[&a.site];
            let pb = site_pos[&b.site];
            self.values[pa * n + pb]
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn position(&self, label: Label) -> Option<usize> {
        self.index.get(&label).copied()
    }

    /// Sign by positions in [`labels`](Self::labels).
    #[inline]
    pub fn value_at(&self, a: usize, b: usize) -> i8 {
        self.values[a * self.labels.len() + b]
    }

    /// Sign by label. Panics if either label is not in the index set.
    pub fn value(&self, a: Label, b: Label) -> i8 {
        self.value_at(self.index[&a], self.index[&b])
    }

    /// Whether the table satisfies `ε(a, b) = ε(|a|, |b|)` on a signed index set.
    pub fn is_mirror(&self) -> bool {
        self.mirror
    }

    fn check_mirror(&self) -> bool {
        if self.labels.is_empty() {
            return true;
        }
        for &a in &self.labels {
            if a.j == 0 || !self.index.contains_key(&a.mirror()) {
                return false;
            }
        }
        self.labels.iter().all(|&a| {
            self.labels
                .iter()
                .all(|&b| self.value(a, b) == self.value(a.abs(), b.abs()))
        })
    }

    /// Restriction to a subset of labels, in the given order.
    pub fn restrict(&self, labels: &[Label]) -> Result<Self> {
        for l in labels {
            if !self.index.contains_key(l) {
                return Err(Error::domain(format!("label {l} is not in the index set")));
            }
        }
        Self::from_fn(labels.to_vec(), |a, b| self.value(a, b))
    }

    /// True when every label of `smaller` is present here with the same signs.
    pub fn extends(&self, smaller: &SignFunction) -> bool {
        smaller.labels.iter().all(|&a| {
            self.index.contains_key(&a)
                && smaller
                    .labels
                    .iter()
                    .all(|&b| self.value(a, b) == smaller.value(a, b))
        })
    }

    /// Mean of `ε` over ordered pairs of distinct indices.
    pub fn off_diagonal_mean(&self) -> f64 {
        let n = self.labels.len();
        if n < 2 {
            return 0.0;
        }
        let mut sum = 0i64;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    sum += i64::from(self.value_at(a, b));
                }
            }
        }
        sum as f64 / (n * (n - 1)) as f64
    }
}
