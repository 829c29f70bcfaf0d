//! Concrete vertex groups with a solvable word problem and exact word length.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("cyclic group order must be at least 2, got {0}")]
    CyclicOrder(u32),
    #[error("free group rank must be at least 1, got {0}")]
    FreeRank(u32),
    #[error("invalid multiplication table: {0}")]
    InvalidTable(String),
    #[error("invalid element literal `{0}`")]
    InvalidElement(String),
}

/// Declarative description of a vertex group, as found in configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum VertexGroupSpec {
    #[serde(rename = "Z", alias = "Integer")]
    Integer,
    #[serde(rename = "Cyclic")]
    Cyclic { n: u32 },
    #[serde(rename = "Free")]
    Free { rank: u32 },
    #[serde(rename = "Table")]
    Table {
        table: Vec<Vec<u32>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generators: Option<Vec<u32>>,
    },
}

impl VertexGroupSpec {
    /// Infinite-ness is declared by kind: ℤ and free groups are infinite,
    /// cyclic and table groups finite.
    pub fn is_infinite(&self) -> bool {
        matches!(self, VertexGroupSpec::Integer | VertexGroupSpec::Free { .. })
    }
}

/// A nonidentity element of some vertex group.
///
/// The derived ordering is the tie-break used for ShortLex comparison of
/// syllables sitting on the same vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    Int(i64),
    Residue(u32),
    /// Freely reduced word; letter `±i` is the `i`-th generator or its inverse.
    Free(Vec<i32>),
    Table(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Kind {
    Integer,
    Cyclic(u32),
    Free(u32),
    Table(TableGroup),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct TableGroup {
    table: Vec<Vec<u32>>,
    identity: u32,
    inverse: Vec<u32>,
    lengths: Vec<u32>,
    generators: Vec<u32>,
}

/// A validated vertex group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexGroup {
    spec: VertexGroupSpec,
    kind: Kind,
}

impl VertexGroup {
    pub fn new(spec: VertexGroupSpec) -> Result<Self, GroupError> {
        let kind = match &spec {
            VertexGroupSpec::Integer => Kind::Integer,
            VertexGroupSpec::Cyclic { n } => {
                if *n < 2 {
                    return Err(GroupError::CyclicOrder(*n));
                }
                Kind::Cyclic(*n)
            }
            VertexGroupSpec::Free { rank } => {
                if *rank < 1 {
                    return Err(GroupError::FreeRank(*rank));
                }
                Kind::Free(*rank)
            }
            VertexGroupSpec::Table { table, generators } => {
                Kind::Table(TableGroup::new(table, generators.as_deref())?)
            }
        };
        Ok(VertexGroup { spec, kind })
    }

    pub fn integer() -> Self {
        Self::new(VertexGroupSpec::Integer).unwrap()
    }

    pub fn cyclic(n: u32) -> Result<Self, GroupError> {
        Self::new(VertexGroupSpec::Cyclic { n })
    }

    pub fn free(rank: u32) -> Result<Self, GroupError> {
        Self::new(VertexGroupSpec::Free { rank })
    }

    pub fn spec(&self) -> &VertexGroupSpec {
        &self.spec
    }

    pub fn is_infinite(&self) -> bool {
        self.spec.is_infinite()
    }

    /// Product `a·b`, or `None` when it is the identity.
    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Option<GroupElement> {
        match (&self.kind, a, b) {
            (Kind::Integer, GroupElement::Int(x), GroupElement::Int(y)) => {
                let s = x + y;
                (s != 0).then_some(GroupElement::Int(s))
            }
            (Kind::Cyclic(n), GroupElement::Residue(x), GroupElement::Residue(y)) => {
                let s = (x + y) % n;
                (s != 0).then_some(GroupElement::Residue(s))
            }
            (Kind::Free(_), GroupElement::Free(x), GroupElement::Free(y)) => {
                let mut out = x.clone();
                for &letter in y {
                    if out.last() == Some(&-letter) {
                        out.pop();
                    } else {
                        out.push(letter);
                    }
                }
                (!out.is_empty()).then_some(GroupElement::Free(out))
            }
            (Kind::Table(t), GroupElement::Table(x), GroupElement::Table(y)) => {
                let p = t.table[*x as usize][*y as usize];
                (p != t.identity).then_some(GroupElement::Table(p))
            }
            _ => panic!("element kind does not match vertex group"),
        }
    }

    pub fn inverse(&self, a: &GroupElement) -> GroupElement {
        match (&self.kind, a) {
            (Kind::Integer, GroupElement::Int(x)) => GroupElement::Int(-x),
            (Kind::Cyclic(n), GroupElement::Residue(x)) => GroupElement::Residue(n - x),
            (Kind::Free(_), GroupElement::Free(w)) => {
                GroupElement::Free(w.iter().rev().map(|l| -l).collect())
            }
            (Kind::Table(t), GroupElement::Table(x)) => GroupElement::Table(t.inverse[*x as usize]),
            _ => panic!("element kind does not match vertex group"),
        }
    }

    /// Word length over the vertex group's declared generating set.
    pub fn length(&self, a: &GroupElement) -> u64 {
        match (&self.kind, a) {
            (Kind::Integer, GroupElement::Int(x)) => x.unsigned_abs(),
            (Kind::Cyclic(n), GroupElement::Residue(x)) => u64::from((*x).min(n - x)),
            (Kind::Free(_), GroupElement::Free(w)) => w.len() as u64,
            (Kind::Table(t), GroupElement::Table(x)) => u64::from(t.lengths[*x as usize]),
            _ => panic!("element kind does not match vertex group"),
        }
    }

    /// Whether `a` is a valid nonidentity element of this group.
    pub fn is_valid(&self, a: &GroupElement) -> bool {
        match (&self.kind, a) {
            (Kind::Integer, GroupElement::Int(x)) => *x != 0,
            (Kind::Cyclic(n), GroupElement::Residue(x)) => *x > 0 && x < n,
            (Kind::Free(rank), GroupElement::Free(w)) => {
                !w.is_empty()
                    && w.iter().all(|&l| l != 0 && l.unsigned_abs() <= *rank)
                    && w.windows(2).all(|p| p[0] != -p[1])
            }
            (Kind::Table(t), GroupElement::Table(x)) => {
                (*x as usize) < t.table.len() && *x != t.identity
            }
            _ => false,
        }
    }

    /// Symmetric generating set in a fixed order.
    pub fn generators(&self) -> Vec<GroupElement> {
        match &self.kind {
            Kind::Integer => vec![GroupElement::Int(1), GroupElement::Int(-1)],
            Kind::Cyclic(n) => {
                if *n == 2 {
                    vec![GroupElement::Residue(1)]
                } else {
                    vec![GroupElement::Residue(1), GroupElement::Residue(n - 1)]
                }
            }
            Kind::Free(rank) => (1..=*rank as i32)
                .flat_map(|i| [GroupElement::Free(vec![i]), GroupElement::Free(vec![-i])])
                .collect(),
            Kind::Table(t) => t.generators.iter().map(|&g| GroupElement::Table(g)).collect(),
        }
    }

    /// A geodesic spelling of `a` as a product of generators.
    pub fn spell(&self, a: &GroupElement) -> Vec<GroupElement> {
        let gens = self.generators();
        let mut out = Vec::new();
        let mut rest = Some(a.clone());
        while let Some(x) = rest {
            let len = self.length(&x);
            let (s, next) = gens
                .iter()
                .map(|s| (s, self.multiply(&self.inverse(s), &x)))
                .find(|(_, y)| y.as_ref().map_or(0, |y| self.length(y)) + 1 == len)
                .expect("some generator shortens a nonidentity element");
            out.push(s.clone());
            rest = next;
        }
        out
    }

    /// `a^n` for an integer `n`; `None` for the identity.
    pub fn power(&self, a: &GroupElement, n: i64) -> Option<GroupElement> {
        match (&self.kind, a) {
            (Kind::Integer, GroupElement::Int(x)) => {
                let p = x * n;
                (p != 0).then_some(GroupElement::Int(p))
            }
            (Kind::Cyclic(m), GroupElement::Residue(x)) => {
                let p = (i64::from(*x) * n).rem_euclid(i64::from(*m)) as u32;
                (p != 0).then_some(GroupElement::Residue(p))
            }
            _ => {
                let base = if n < 0 { self.inverse(a) } else { a.clone() };
                let mut acc: Option<GroupElement> = None;
                for _ in 0..n.unsigned_abs() {
                    acc = match acc {
                        None => Some(base.clone()),
                        Some(x) => self.multiply(&x, &base),
                    };
                }
                acc
            }
        }
    }

    /// Parses the suffix of a syllable token (everything after the vertex
    /// name): `^k` for ℤ and ℤ/n, `[1,-2]` for free groups, `{i}` for table
    /// groups. An empty suffix means the first generator.
    pub fn parse_element(&self, suffix: &str) -> Result<Option<GroupElement>, GroupError> {
        let bad = || GroupError::InvalidElement(suffix.to_string());
        match &self.kind {
            Kind::Integer | Kind::Cyclic(_) => {
                let k: i64 = if suffix.is_empty() {
                    1
                } else {
                    suffix
                        .strip_prefix('^')
                        .ok_or_else(bad)?
                        .parse()
                        .map_err(|_| bad())?
                };
                let one = match self.kind {
                    Kind::Integer => GroupElement::Int(1),
                    _ => GroupElement::Residue(1),
                };
                Ok(self.power(&one, k))
            }
            Kind::Free(rank) => {
                if suffix.is_empty() {
                    return Ok(Some(GroupElement::Free(vec![1])));
                }
                let body = suffix
                    .strip_prefix('[')
                    .and_then(|s| s.strip_suffix(']'))
                    .ok_or_else(bad)?;
                let mut acc: Option<GroupElement> = None;
                for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    let l: i32 = part.parse().map_err(|_| bad())?;
                    if l == 0 || l.unsigned_abs() > *rank {
                        return Err(bad());
                    }
                    let letter = GroupElement::Free(vec![l]);
                    acc = match acc {
                        None => Some(letter),
                        Some(x) => self.multiply(&x, &letter),
                    };
                }
                Ok(acc)
            }
            Kind::Table(t) => {
                let body = suffix
                    .strip_prefix('{')
                    .and_then(|s| s.strip_suffix('}'))
                    .ok_or_else(bad)?;
                let i: u32 = body.trim().parse().map_err(|_| bad())?;
                if i as usize >= t.table.len() {
                    return Err(bad());
                }
                Ok((i != t.identity).then_some(GroupElement::Table(i)))
            }
        }
    }

    /// Inverse of [`parse_element`](Self::parse_element) for nonidentity elements.
    pub fn format_element(&self, a: &GroupElement) -> String {
        match a {
            GroupElement::Int(1) | GroupElement::Residue(1) => String::new(),
            GroupElement::Int(k) => format!("^{k}"),
            GroupElement::Residue(r) => format!("^{r}"),
            GroupElement::Free(w) => {
                let parts: Vec<String> = w.iter().map(|l| l.to_string()).collect();
                format!("[{}]", parts.join(","))
            }
            GroupElement::Table(i) => format!("{{{i}}}"),
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Int(k) => write!(f, "{k}"),
            GroupElement::Residue(r) => write!(f, "{r}"),
            GroupElement::Free(w) => write!(f, "{w:?}"),
            GroupElement::Table(i) => write!(f, "#{i}"),
        }
    }
}

impl TableGroup {
    fn new(table: &[Vec<u32>], generators: Option<&[u32]>) -> Result<Self, GroupError> {
        let n = table.len();
        let err = |m: String| GroupError::InvalidTable(m);
        if n < 2 {
            return Err(err("table group needs at least two elements".into()));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(err(format!("row {i} has length {}, expected {n}", row.len())));
            }
            if row.iter().any(|&x| x as usize >= n) {
                return Err(err(format!("row {i} has an entry out of range")));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| table[e][x] as usize == x && table[x][e] as usize == x))
            .ok_or_else(|| err("no two-sided identity".into()))? as u32;
        let mut inverse = vec![0u32; n];
        for x in 0..n {
            let inv = (0..n)
                .find(|&y| table[x][y] == identity && table[y][x] == identity)
                .ok_or_else(|| err(format!("element {x} has no inverse")))?;
            inverse[x] = inv as u32;
        }
        // exhaustive associativity for small tables, a fixed lattice of
        // triples otherwise
        let step = if n <= 48 { 1 } else { n / 48 + 1 };
        for a in (0..n).step_by(step) {
            for b in (0..n).step_by(step) {
                for c in (0..n).step_by(step) {
                    let left = table[table[a][b] as usize][c];
                    let right = table[a][table[b][c] as usize];
                    if left != right {
                        return Err(err(format!("not associative at ({a},{b},{c})")));
                    }
                }
            }
        }
        let declared: Vec<u32> = match generators {
            Some(gens) => {
                for &g in gens {
                    if g as usize >= n || g == identity {
                        return Err(err(format!("generator {g} is not a nonidentity element")));
                    }
                }
                gens.to_vec()
            }
            None => (0..n as u32).filter(|&g| g != identity).collect(),
        };
        let mut symmetric: Vec<u32> = declared
            .iter()
            .flat_map(|&g| [g, inverse[g as usize]])
            .collect();
        symmetric.sort_unstable();
        symmetric.dedup();

        let mut lengths = vec![u32::MAX; n];
        lengths[identity as usize] = 0;
        let mut queue = VecDeque::from([identity]);
        while let Some(x) = queue.pop_front() {
            for &g in &symmetric {
                let y = table[x as usize][g as usize];
                if lengths[y as usize] == u32::MAX {
                    lengths[y as usize] = lengths[x as usize] + 1;
                    queue.push_back(y);
                }
            }
        }
        if lengths.contains(&u32::MAX) {
            return Err(err("declared generators do not generate the group".into()));
        }
        Ok(TableGroup {
            table: table.to_vec(),
            identity,
            inverse,
            lengths,
            generators: symmetric,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z3_table() -> Vec<Vec<u32>> {
        (0..3).map(|i| (0..3).map(|j| (i + j) % 3).collect()).collect()
    }

    /// S3 as permutations of {0,1,2}, elements indexed in lexicographic order
    /// of their one-line notation.
    fn s3_table() -> Vec<Vec<u32>> {
        let perms: Vec<[usize; 3]> = vec![
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap() as u32;
        perms
            .iter()
            .map(|p| {
                perms
                    .iter()
                    .map(|q| index([p[q[0]], p[q[1]], p[q[2]]]))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn integer_arithmetic() {
        let z = VertexGroup::integer();
        assert_eq!(z.multiply(&GroupElement::Int(2), &GroupElement::Int(-2)), None);
        assert_eq!(z.length(&GroupElement::Int(-3)), 3);
        assert!(z.is_infinite());
    }

    #[test]
    fn cyclic_lengths() {
        let c5 = VertexGroup::cyclic(5).unwrap();
        let lens: Vec<u64> = (1..5).map(|r| c5.length(&GroupElement::Residue(r))).collect();
        assert_eq!(lens, vec![1, 2, 2, 1]);
        assert_eq!(VertexGroup::cyclic(1), Err(GroupError::CyclicOrder(1)));
        assert_eq!(VertexGroup::cyclic(2).unwrap().generators().len(), 1);
    }

    #[test]
    fn free_reduction() {
        let f2 = VertexGroup::free(2).unwrap();
        let x = GroupElement::Free(vec![1, 2]);
        let y = GroupElement::Free(vec![-2, -1]);
        assert_eq!(f2.multiply(&x, &y), None);
        assert_eq!(f2.inverse(&x), y);
        assert_eq!(
            f2.multiply(&x, &GroupElement::Free(vec![-2, 1])),
            Some(GroupElement::Free(vec![1, 1]))
        );
        assert_eq!(f2.parse_element("[1,-2,2]").unwrap(), Some(GroupElement::Free(vec![1])));
    }

    #[test]
    fn table_group_matches_cyclic() {
        let t = VertexGroup::new(VertexGroupSpec::Table {
            table: z3_table(),
            generators: Some(vec![1]),
        })
        .unwrap();
        assert_eq!(t.length(&GroupElement::Table(2)), 1);
        assert_eq!(t.inverse(&GroupElement::Table(1)), GroupElement::Table(2));
        assert!(!t.is_infinite());
    }

    #[test]
    fn table_group_nonabelian() {
        let s3 = VertexGroup::new(VertexGroupSpec::Table {
            table: s3_table(),
            generators: Some(vec![1, 2]),
        })
        .unwrap();
        // two transpositions generate; the longest element has length 3
        let max_len = (1..6).map(|i| s3.length(&GroupElement::Table(i))).max();
        assert_eq!(max_len, Some(3));
        let a = GroupElement::Table(1);
        let b = GroupElement::Table(2);
        assert_ne!(s3.multiply(&a, &b), s3.multiply(&b, &a));
    }

    #[test]
    fn table_validation_errors() {
        let mut broken = z3_table();
        broken[1][1] = 1;
        assert!(matches!(
            VertexGroup::new(VertexGroupSpec::Table { table: broken, generators: None }),
            Err(GroupError::InvalidTable(_))
        ));
        let s3 = VertexGroup::new(VertexGroupSpec::Table {
            table: s3_table(),
            generators: Some(vec![3]),
        });
        assert!(matches!(s3, Err(GroupError::InvalidTable(_))));
    }

    #[test]
    fn element_literals_round_trip() {
        let z = VertexGroup::integer();
        assert_eq!(z.parse_element("^-2").unwrap(), Some(GroupElement::Int(-2)));
        assert_eq!(z.parse_element("^0").unwrap(), None);
        assert_eq!(z.format_element(&GroupElement::Int(-2)), "^-2");
        let c3 = VertexGroup::cyclic(3).unwrap();
        assert_eq!(c3.parse_element("^-1").unwrap(), Some(GroupElement::Residue(2)));
        assert!(z.parse_element("[1]").is_err());
    }
}
