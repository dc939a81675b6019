use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One tensor factor: a labelled Hilbert space of fixed dimension.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labelled tensor factors. Index order is row-major,
/// the first factor being the most significant digit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SystemLayout {
    factors: Vec<Factor>,
}

impl SystemLayout {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let factors = factors
            .into_iter()
            .map(|(label, dim)| Factor { label: label.into(), dim })
            .collect();
        Self::from_factors(factors)
    }

    pub fn from_factors(factors: Vec<Factor>) -> Result<Self> {
        for (i, f) in factors.iter().enumerate() {
            if f.label.is_empty() {
                return Err(Error::Layout("empty factor label".into()));
            }
            if f.label.contains('|') || f.label.contains(',') {
                return Err(Error::Layout(format!("label `{}` contains a reserved character", f.label)));
            }
            if f.dim == 0 {
                return Err(Error::Layout(format!("factor `{}` has dimension 0", f.label)));
            }
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::DuplicateLabel(f.label.clone()));
            }
        }
        Ok(SystemLayout { factors })
    }

    /// Layout with a single factor.
    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(label.into(), dim)])
    }

    /// The empty layout (a trivial one-dimensional space).
    pub fn trivial() -> Self {
        SystemLayout { factors: Vec::new() }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Total dimension; 1 for the empty layout.
    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.label.clone()).collect()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    /// Dimension of the named factor.
    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .map(|p| self.factors[p].dim)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Concatenation; fails on shared labels.
    pub fn concat(&self, other: &SystemLayout) -> Result<SystemLayout> {
        let mut f = self.factors.clone();
        f.extend(other.factors.iter().cloned());
        Self::from_factors(f)
    }

    /// Positions of `labels` in this layout, in the order given.
    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref();
            let p = self.position(l).ok_or_else(|| Error::UnknownLabel(l.to_string()))?;
            if out.contains(&p) {
                return Err(Error::DuplicateLabel(l.to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Sub-layout with the given labels, kept in this layout's order.
    pub fn restrict<S: AsRef<str>>(&self, labels: &[S]) -> Result<SystemLayout> {
        let mut pos = self.positions(labels)?;
        pos.sort_unstable();
        Ok(SystemLayout { factors: pos.into_iter().map(|p| self.factors[p].clone()).collect() })
    }

    /// Sub-layout with the given labels in the order given.
    pub fn reorder<S: AsRef<str>>(&self, labels: &[S]) -> Result<SystemLayout> {
        let pos = self.positions(labels)?;
        Ok(SystemLayout { factors: pos.into_iter().map(|p| self.factors[p].clone()).collect() })
    }

    /// Labels not in `labels`, in layout order.
    pub fn complement<S: AsRef<str>>(&self, labels: &[S]) -> Vec<String> {
        self.factors
            .iter()
            .filter(|f| !labels.iter().any(|l| l.as_ref() == f.label))
            .map(|f| f.label.clone())
            .collect()
    }

    /// A label not yet used, derived from `base`.
    pub fn fresh_label(&self, base: &str) -> String {
        if !self.contains(base) {
            return base.to_string();
        }
        (1..)
            .map(|k| format!("{base}{k}"))
            .find(|l| !self.contains(l))
            .expect("unbounded search")
    }

    /// Same factors, one dimension changed.
    pub fn with_dim(&self, label: &str, dim: usize) -> Result<SystemLayout> {
        let p = self.position(label).ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        let mut f = self.factors.clone();
        f[p].dim = dim;
        Self::from_factors(f)
    }

    /// Compact textual form such as `A2 B2 C2`.
    pub fn describe(&self) -> String {
        self.factors.iter().map(|f| format!("{}{}", f.label, f.dim)).collect::<Vec<_>>().join(" ")
    }

    /// Dimensions joined with `x`, e.g. `2x2x2`.
    pub fn dims_string(&self) -> String {
        self.dims().iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
    }
}

/// For every basis index of a layout, the flattened index of a chosen group
/// of factors (in the chosen order) and of the remaining factors (in layout order).
pub(crate) struct IndexSplit {
    pub keep: Vec<usize>,
    pub rest: Vec<usize>,
    pub keep_dim: usize,
    pub rest_dim: usize,
}

impl IndexSplit {
    pub fn new(layout: &SystemLayout, keep_positions: &[usize]) -> Self {
        let dims = layout.dims();
        let n = dims.len();
        let rest_positions: Vec<usize> = (0..n).filter(|p| !keep_positions.contains(p)).collect();
        let strides_of = |pos: &[usize]| {
            let mut s = vec![0usize; n];
            let mut acc = 1;
            for &p in pos.iter().rev() {
                s[p] = acc;
                acc *= dims[p];
            }
            (s, acc)
        };
        let (ks, keep_dim) = strides_of(keep_positions);
        let (rs, rest_dim) = strides_of(&rest_positions);
        let total = layout.dim();
        let mut keep = Vec::with_capacity(total);
        let mut rest = Vec::with_capacity(total);
        let mut digits = vec![0usize; n];
        for _ in 0..total {
            let mut k = 0;
            let mut r = 0;
            for p in 0..n {
                k += digits[p] * ks[p];
                r += digits[p] * rs[p];
            }
            keep.push(k);
            rest.push(r);
            for p in (0..n).rev() {
                digits[p] += 1;
                if digits[p] < dims[p] {
                    break;
                }
                digits[p] = 0;
            }
        }
        IndexSplit { keep, rest, keep_dim, rest_dim }
    }

    /// Full indices grouped by their rest index: `groups[r]` lists `(keep, full)`.
    pub fn groups(&self) -> Vec<Vec<(usize, usize)>> {
        let mut g = vec![Vec::with_capacity(self.keep_dim); self.rest_dim];
        for (i, (&k, &r)) in self.keep.iter().zip(&self.rest).enumerate() {
            g[r].push((k, i));
        }
        g
    }
}

/// Conditioning split `A|B`: entropy of the left labels conditioned on the right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub a: Vec<String>,
    pub b: Vec<String>,
}

impl Split {
    pub fn new<S: Into<String>>(a: impl IntoIterator<Item = S>, b: impl IntoIterator<Item = S>) -> Result<Self> {
        let a: Vec<String> = a.into_iter().map(Into::into).collect();
        let b: Vec<String> = b.into_iter().map(Into::into).collect();
        if a.is_empty() {
            return Err(Error::invalid("split needs at least one system on the left"));
        }
        for (i, l) in a.iter().chain(&b).enumerate() {
            if a.iter().chain(&b).take(i).any(|m| m == l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(Split { a, b })
    }

    /// Parse `A|BC`, `AB|C,C'` or `A1,A2|B`. A side containing a comma is
    /// split on commas; otherwise every character starts a label and trailing
    /// primes attach to the preceding label.
    pub fn parse(text: &str) -> Result<Self> {
        let (l, r) = text
            .split_once('|')
            .ok_or_else(|| Error::invalid(format!("split `{text}` lacks a `|`")))?;
        if r.contains('|') {
            return Err(Error::invalid(format!("split `{text}` has more than one `|`")));
        }
        Split::new(parse_labels(l)?, parse_labels(r)?)
    }

    /// All labels involved, left side first.
    pub fn labels(&self) -> Vec<String> {
        self.a.iter().chain(&self.b).cloned().collect()
    }

    pub fn check(&self, layout: &SystemLayout) -> Result<()> {
        layout.positions(&self.labels()).map(|_| ())
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let side = |v: &[String]| {
            if v.iter().all(|l| l.chars().filter(|c| *c != '\'').count() == 1) {
                v.concat()
            } else {
                v.join(",")
            }
        };
        write!(f, "{}|{}", side(&self.a), side(&self.b))
    }
}

/// Parse one side of a split or a label list.
pub fn parse_labels(side: &str) -> Result<Vec<String>> {
    let side = side.trim();
    if side.is_empty() {
        return Ok(Vec::new());
    }
    if side.contains(',') {
        let v: Vec<String> = side.split(',').map(|s| s.trim().to_string()).collect();
        if v.iter().any(|s| s.is_empty()) {
            return Err(Error::invalid(format!("empty label in `{side}`")));
        }
        return Ok(v);
    }
    let mut out: Vec<String> = Vec::new();
    for c in side.chars() {
        if c == '\'' {
            match out.last_mut() {
                Some(l) => l.push(c),
                None => return Err(Error::invalid(format!("label list `{side}` starts with a prime"))),
            }
        } else if c.is_whitespace() {
            continue;
        } else {
            out.push(c.to_string());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_rejects_duplicates_and_zero_dims() {
        assert!(matches!(SystemLayout::new([("A", 2), ("A", 3)]), Err(Error::DuplicateLabel(_))));
        assert!(SystemLayout::new([("A", 0)]).is_err());
        let l = SystemLayout::new([("A", 2), ("B", 3)]).unwrap();
        assert_eq!(l.dim(), 6);
        assert_eq!(l.fresh_label("A"), "A1");
        assert_eq!(l.fresh_label("R"), "R");
    }

    #[test]
    fn split_parsing() {
        let s = Split::parse("A|BC").unwrap();
        assert_eq!(s.a, vec!["A"]);
        assert_eq!(s.b, vec!["B", "C"]);
        let s = Split::parse("AB|CC'").unwrap();
        assert_eq!(s.b, vec!["C", "C'"]);
        let s = Split::parse("X1,X2|Y").unwrap();
        assert_eq!(s.a, vec!["X1", "X2"]);
        assert_eq!(s.to_string(), "X1,X2|Y");
        assert_eq!(Split::parse("A|").unwrap().b.len(), 0);
        assert!(Split::parse("A|A").is_err());
        assert!(Split::parse("AB").is_err());
    }

    #[test]
    fn index_split_matches_row_major_digits() {
        let l = SystemLayout::new([("A", 2), ("B", 3), ("C", 2)]).unwrap();
        // keep C then A
        let s = IndexSplit::new(&l, &[2, 0]);
        assert_eq!(s.keep_dim, 4);
        assert_eq!(s.rest_dim, 3);
        for i in 0..12 {
            let (a, b, c) = (i / 6, (i / 2) % 3, i % 2);
            assert_eq!(s.keep[i], c * 2 + a);
            assert_eq!(s.rest[i], b);
        }
    }
}
