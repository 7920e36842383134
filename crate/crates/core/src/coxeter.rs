//! Finite root systems of rank ≤ 2 and their spherical Weyl groups.
//!
//! Coordinates on the model space are taken in the basis of simple
//! coroots. In that basis every root is an integral linear functional and
//! every Weyl group element is an integral matrix, so everything stays
//! exact over ℚ.
//!
//! Normalization: the simple roots are `α1, α2`; for B2 the root `α1` is
//! short, so the positive roots are `α1, α2, α1+α2, 2α1+α2`.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::lambda::Q;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoxeterError {
    #[error("unsupported root system {0:?} (expected A1, A2 or B2)")]
    Unsupported(String),
    #[error("root index {0} out of range")]
    NotARoot(usize),
    #[error("vector has length {got}, expected rank {rank}")]
    Rank { got: usize, rank: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RootType {
    A1,
    A2,
    B2,
}

impl RootType {
    pub fn name(self) -> &'static str {
        match self {
            RootType::A1 => "A1",
            RootType::A2 => "A2",
            RootType::B2 => "B2",
        }
    }

    pub fn rank(self) -> usize {
        match self {
            RootType::A1 => 1,
            RootType::A2 | RootType::B2 => 2,
        }
    }

    /// Gram matrix of the simple roots (any W-invariant scaling will do).
    fn gram(self) -> Vec<Vec<Q>> {
        let i = |n: i64| Q::from_integer(n);
        match self {
            RootType::A1 => vec![vec![i(2)]],
            RootType::A2 => vec![vec![i(2), i(-1)], vec![i(-1), i(2)]],
            RootType::B2 => vec![vec![i(1), i(-1)], vec![i(-1), i(2)]],
        }
    }
}

impl fmt::Display for RootType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RootType {
    type Err = CoxeterError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A1" => Ok(RootType::A1),
            "A2" => Ok(RootType::A2),
            "B2" | "C2" => Ok(RootType::B2),
            other => Err(CoxeterError::Unsupported(other.to_string())),
        }
    }
}

/// Small dense rational matrix acting on coroot coordinates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    n: usize,
    entries: SmallVec<[Q; 4]>,
}

impl Matrix {
    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zero(n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    pub fn zero(n: usize) -> Self {
        Matrix { n, entries: SmallVec::from_elem(Q::zero(), n * n) }
    }

    pub fn from_rows(rows: &[Vec<Q>]) -> Self {
        let n = rows.len();
        let mut m = Matrix::zero(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        m
    }

    pub fn scalar(n: usize, factor: Q) -> Self {
        let mut m = Matrix::zero(n);
        for i in 0..n {
            m.set(i, i, factor);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Q {
        self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        self.entries[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<Q>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Q::zero();
                for k in 0..n {
                    acc += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn apply(&self, v: &[Q]) -> Vec<Q> {
        (0..self.n)
            .map(|i| (0..self.n).fold(Q::zero(), |acc, k| acc + self.get(i, k) * v[k]))
            .collect()
    }

    /// Row vector times matrix: the pull-back of a linear functional.
    pub fn pull_back(&self, functional: &[Q]) -> Vec<Q> {
        (0..self.n)
            .map(|j| (0..self.n).fold(Q::zero(), |acc, k| acc + functional[k] * self.get(k, j)))
            .collect()
    }

    /// Gauss–Jordan inverse; `None` if singular.
    pub fn inverse(&self) -> Option<Matrix> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a.get(r, col).is_zero())?;
            if pivot != col {
                for j in 0..n {
                    let (x, y) = (a.get(col, j), a.get(pivot, j));
                    a.set(col, j, y);
                    a.set(pivot, j, x);
                    let (x, y) = (inv.get(col, j), inv.get(pivot, j));
                    inv.set(col, j, y);
                    inv.set(pivot, j, x);
                }
            }
            let p = a.get(col, col);
            for j in 0..n {
                a.set(col, j, a.get(col, j) / p);
                inv.set(col, j, inv.get(col, j) / p);
            }
            for r in 0..n {
                if r != col {
                    let f = a.get(r, col);
                    if !f.is_zero() {
                        for j in 0..n {
                            a.set(r, j, a.get(r, j) - f * a.get(col, j));
                            inv.set(r, j, inv.get(r, j) - f * inv.get(col, j));
                        }
                    }
                }
            }
        }
        Some(inv)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> =
            self.rows().iter().map(|r| r.iter().map(crate::lambda::fmt_q).collect()).collect();
        write!(f, "{rows:?}")
    }
}

/// A root together with its two coordinate descriptions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Root {
    /// Coefficients in the basis of simple roots.
    pub coeffs: Vec<i64>,
    /// The root as a functional on coroot coordinates: `β(x) = Σ functional[i]·x[i]`.
    pub functional: Vec<Q>,
    /// The coroot `β∨` in coroot coordinates.
    pub coroot: Vec<Q>,
}

/// Finite root system Φ of rank ≤ 2.
#[derive(Debug, Clone)]
pub struct RootSystem {
    root_type: RootType,
    rank: usize,
    gram: Vec<Vec<Q>>,
    /// Positive roots first (simple roots leading, then by height), then
    /// their negatives in the same order.
    roots: Vec<Root>,
    functional_index: HashMap<Vec<Q>, usize>,
}

impl RootSystem {
    /// Closes the simple roots under simple reflections.
    pub fn build(root_type: RootType) -> Self {
        let gram = root_type.gram();
        let rank = root_type.rank();
        let mut seen: Vec<Vec<i64>> = Vec::new();
        let mut queue: VecDeque<Vec<i64>> = VecDeque::new();
        for i in 0..rank {
            let mut e = vec![0; rank];
            e[i] = 1;
            queue.push_back(e);
        }
        while let Some(beta) = queue.pop_front() {
            if seen.contains(&beta) {
                continue;
            }
            for i in 0..rank {
                let pairing = Self::pairing_coeffs(&gram, &beta, i);
                assert!(pairing.is_integer(), "non-crystallographic pairing");
                let mut img = beta.clone();
                img[i] -= pairing.to_integer();
                if !seen.contains(&img) {
                    queue.push_back(img);
                }
            }
            seen.push(beta);
        }
        let mut positive: Vec<Vec<i64>> =
            seen.iter().filter(|c| c.iter().all(|&x| x >= 0)).cloned().collect();
        positive.sort_by_key(|c| (c.iter().sum::<i64>(), c.iter().map(|x| -x).collect::<Vec<_>>()));
        let mut all = positive.clone();
        all.extend(positive.iter().map(|c| c.iter().map(|x| -x).collect::<Vec<_>>()));
        assert_eq!(all.len(), seen.len(), "Φ = Φ⁺ ⊔ −Φ⁺");

        let roots: Vec<Root> = all
            .into_iter()
            .map(|coeffs| {
                let norm = Self::form(&gram, &coeffs, &coeffs);
                let functional =
                    (0..rank).map(|i| Self::pairing_coeffs(&gram, &coeffs, i)).collect();
                let coroot = (0..rank)
                    .map(|j| Q::from_integer(coeffs[j]) * gram[j][j] / norm)
                    .collect();
                Root { coeffs, functional, coroot }
            })
            .collect();
        let functional_index =
            roots.iter().enumerate().map(|(i, r)| (r.functional.clone(), i)).collect();
        RootSystem { root_type, rank, gram, roots, functional_index }
    }

    fn form(gram: &[Vec<Q>], a: &[i64], b: &[i64]) -> Q {
        let mut acc = Q::zero();
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                acc += gram[i][j] * Q::from_integer(ai * bj);
            }
        }
        acc
    }

    /// `⟨β, α_i∨⟩ = 2(β, α_i)/(α_i, α_i)`.
    fn pairing_coeffs(gram: &[Vec<Q>], beta: &[i64], i: usize) -> Q {
        let mut e = vec![0; beta.len()];
        e[i] = 1;
        Q::from_integer(2) * Self::form(gram, beta, &e) / gram[i][i]
    }

    pub fn root_type(&self) -> RootType {
        self.root_type
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn roots(&self) -> &[Root] {
        &self.roots
    }

    pub fn root(&self, index: usize) -> &Root {
        &self.roots[index]
    }

    pub fn num_positive(&self) -> usize {
        self.roots.len() / 2
    }

    pub fn positive_roots(&self) -> &[Root] {
        &self.roots[..self.num_positive()]
    }

    pub fn simple_root(&self, i: usize) -> &Root {
        &self.roots[i]
    }

    /// Index of `−β`.
    pub fn negate_index(&self, index: usize) -> usize {
        let p = self.num_positive();
        if index < p {
            index + p
        } else {
            index - p
        }
    }

    /// Root index whose functional equals `functional`, if any.
    pub fn index_of_functional(&self, functional: &[Q]) -> Option<usize> {
        self.functional_index.get(functional).copied()
    }

    /// Splits a root index into (positive root index, is_negative).
    pub fn positive_part(&self, index: usize) -> (usize, bool) {
        let p = self.num_positive();
        if index < p {
            (index, false)
        } else {
            (index - p, true)
        }
    }

    /// `⟨β, α∨⟩` for roots `β, α`.
    pub fn pairing(&self, beta: usize, alpha: usize) -> Q {
        eval(&self.roots[beta].functional, &self.roots[alpha].coroot)
    }

    /// Reflects a coroot-coordinate vector in the hyperplane of root `alpha`:
    /// `x ↦ x − α(x)·α∨`.
    pub fn reflect(&self, alpha: usize, x: &[Q]) -> Result<Vec<Q>, CoxeterError> {
        let root = self.roots.get(alpha).ok_or(CoxeterError::NotARoot(alpha))?;
        if x.len() != self.rank {
            return Err(CoxeterError::Rank { got: x.len(), rank: self.rank });
        }
        let ax = eval(&root.functional, x);
        Ok(x.iter().zip(&root.coroot).map(|(xi, ci)| *xi - ax * *ci).collect())
    }

    /// Index of `r_α(β)`.
    pub fn reflect_root(&self, alpha: usize, beta: usize) -> Result<usize, CoxeterError> {
        let a = self.roots.get(alpha).ok_or(CoxeterError::NotARoot(alpha))?;
        let b = self.roots.get(beta).ok_or(CoxeterError::NotARoot(beta))?;
        // As functionals: r_α(β) = β − ⟨β, α∨⟩ α.
        let k = eval(&b.functional, &a.coroot);
        let img: Vec<Q> = b.functional.iter().zip(&a.functional).map(|(x, y)| *x - k * *y).collect();
        self.index_of_functional(&img).ok_or(CoxeterError::NotARoot(usize::MAX))
    }

    /// Matrix of the simple reflection `s_i` on coroot coordinates.
    pub fn simple_reflection(&self, i: usize) -> Matrix {
        let mut m = Matrix::identity(self.rank);
        let root = &self.roots[i];
        for k in 0..self.rank {
            for j in 0..self.rank {
                let v = m.get(k, j) - root.coroot[k] * root.functional[j];
                m.set(k, j, v);
            }
        }
        m
    }

    /// Fundamental coweights `ω_i∨` (dual to the simple roots), the extreme
    /// rays of the fundamental Weyl chamber.
    pub fn fundamental_coweights(&self) -> Vec<Vec<Q>> {
        let rows: Vec<Vec<Q>> = (0..self.rank).map(|i| self.roots[i].functional.clone()).collect();
        let inv = Matrix::from_rows(&rows).inverse().expect("simple roots are independent");
        (0..self.rank).map(|i| (0..self.rank).map(|k| inv.get(k, i)).collect()).collect()
    }

    pub fn gram(&self) -> &[Vec<Q>] {
        &self.gram
    }
}

pub(crate) fn eval(functional: &[Q], x: &[Q]) -> Q {
    functional.iter().zip(x).fold(Q::zero(), |acc, (a, b)| acc + *a * *b)
}

/// Index of an element of the spherical Weyl group within its
/// [`WeylGroup`]. Indices follow breadth-first order, so they refine length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeylId(pub usize);

impl WeylId {
    pub const IDENTITY: WeylId = WeylId(0);
}

/// An element of W̄ given by a reduced word and its matrix.
#[derive(Debug, Clone)]
pub struct SphericalWeylElement {
    pub word: Vec<usize>,
    pub matrix: Matrix,
}

impl SphericalWeylElement {
    pub fn length(&self) -> usize {
        self.word.len()
    }
}

/// The full spherical Weyl group with multiplication table.
#[derive(Debug, Clone)]
pub struct WeylGroup {
    rank: usize,
    elements: Vec<SphericalWeylElement>,
    by_matrix: HashMap<Matrix, usize>,
    mul: Vec<Vec<usize>>,
    inv: Vec<usize>,
    /// `root_action[w][β]` = index of `w·β`.
    root_action: Vec<Vec<usize>>,
    /// Elements of the parabolic subgroup `W_J` for each bitmask `J`.
    parabolic: Vec<Vec<usize>>,
}

impl WeylGroup {
    /// Breadth-first closure over right multiplication by simple reflections.
    pub fn enumerate(roots: &RootSystem) -> Self {
        let rank = roots.rank();
        let gens: Vec<Matrix> = (0..rank).map(|i| roots.simple_reflection(i)).collect();
        let mut elements = vec![SphericalWeylElement { word: vec![], matrix: Matrix::identity(rank) }];
        let mut by_matrix = HashMap::new();
        by_matrix.insert(Matrix::identity(rank), 0usize);
        let mut head = 0;
        while head < elements.len() {
            for (i, g) in gens.iter().enumerate() {
                let m = elements[head].matrix.mul(g);
                if !by_matrix.contains_key(&m) {
                    let mut word = elements[head].word.clone();
                    word.push(i);
                    by_matrix.insert(m.clone(), elements.len());
                    elements.push(SphericalWeylElement { word, matrix: m });
                }
            }
            head += 1;
        }
        let n = elements.len();
        let mul: Vec<Vec<usize>> = (0..n)
            .map(|a| (0..n).map(|b| by_matrix[&elements[a].matrix.mul(&elements[b].matrix)]).collect())
            .collect();
        let inv: Vec<usize> = (0..n).map(|a| (0..n).find(|&b| mul[a][b] == 0).unwrap()).collect();
        let root_action = (0..n)
            .map(|w| {
                let winv = &elements[inv[w]].matrix;
                roots
                    .roots()
                    .iter()
                    .map(|r| {
                        roots
                            .index_of_functional(&winv.pull_back(&r.functional))
                            .expect("W permutes Φ")
                    })
                    .collect()
            })
            .collect();
        let parabolic = (0..1usize << rank)
            .map(|mask| {
                (0..n)
                    .filter(|&w| elements[w].word.iter().all(|&i| mask & (1 << i) != 0))
                    .collect()
            })
            .collect();
        WeylGroup { rank, elements, by_matrix, mul, inv, root_action, parabolic }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = WeylId> + '_ {
        (0..self.elements.len()).map(WeylId)
    }

    pub fn element(&self, w: WeylId) -> &SphericalWeylElement {
        &self.elements[w.0]
    }

    pub fn matrix(&self, w: WeylId) -> &Matrix {
        &self.elements[w.0].matrix
    }

    pub fn length(&self, w: WeylId) -> usize {
        self.elements[w.0].word.len()
    }

    pub fn diameter(&self) -> usize {
        self.elements.iter().map(|e| e.word.len()).max().unwrap_or(0)
    }

    pub fn longest(&self) -> WeylId {
        WeylId(self.elements.len() - 1)
    }

    pub fn mul(&self, a: WeylId, b: WeylId) -> WeylId {
        WeylId(self.mul[a.0][b.0])
    }

    pub fn inverse(&self, w: WeylId) -> WeylId {
        WeylId(self.inv[w.0])
    }

    pub fn simple(&self, i: usize) -> WeylId {
        debug_assert!(i < self.rank);
        WeylId(1 + i)
    }

    pub fn lookup(&self, m: &Matrix) -> Option<WeylId> {
        self.by_matrix.get(m).copied().map(WeylId)
    }

    /// Element from a word in simple reflections (need not be reduced).
    pub fn from_word(&self, word: &[usize]) -> Option<WeylId> {
        let mut w = WeylId::IDENTITY;
        for &i in word {
            if i >= self.rank {
                return None;
            }
            w = self.mul(w, self.simple(i));
        }
        Some(w)
    }

    /// Reduced word as text: `e` for the identity, else indices joined by
    /// dots, e.g. `0.1`.
    pub fn word_label(&self, w: WeylId) -> String {
        let word = &self.element(w).word;
        if word.is_empty() {
            "e".to_string()
        } else {
            word.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
        }
    }

    pub fn parse_word(&self, text: &str) -> Option<WeylId> {
        let t = text.trim();
        if t == "e" || t.is_empty() {
            return Some(WeylId::IDENTITY);
        }
        let word = t.split('.').map(|p| p.trim().parse::<usize>().ok()).collect::<Option<Vec<_>>>()?;
        self.from_word(&word)
    }

    /// Index of `w·β`.
    pub fn act_on_root(&self, w: WeylId, beta: usize) -> usize {
        self.root_action[w.0][beta]
    }

    /// Reduced length of `w1⁻¹ w2`: the gallery distance between the
    /// chambers `w1·C_f` and `w2·C_f` in the Coxeter complex.
    pub fn gallery_distance(&self, w1: WeylId, w2: WeylId) -> usize {
        self.length(self.mul(self.inverse(w1), w2))
    }

    /// Elements of the standard parabolic subgroup for the face mask.
    pub fn parabolic(&self, face: FaceMask) -> &[usize] {
        &self.parabolic[face.0 as usize]
    }

    /// Canonical (least-index) representative of the coset `w·W_J`.
    pub fn coset_rep(&self, w: WeylId, face: FaceMask) -> WeylId {
        self.parabolic(face)
            .iter()
            .map(|&u| self.mul[w.0][u])
            .min()
            .map(WeylId)
            .unwrap()
    }
}

/// Subset of simple-root indices selecting a face of the fundamental
/// chamber: the face on which those simple roots vanish. The empty mask is
/// the whole chamber; the full mask is the basepoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceMask(pub u8);

impl FaceMask {
    pub const CHAMBER: FaceMask = FaceMask(0);

    pub fn full(rank: usize) -> Self {
        FaceMask(((1u16 << rank) - 1) as u8)
    }

    pub fn panel(i: usize) -> Self {
        FaceMask(1 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent closure: reflect every root in every root until stable,
    /// working directly with the Gram form rather than functionals.
    fn closure_oracle(t: RootType) -> usize {
        let gram = t.gram();
        let rank = t.rank();
        let form = |a: &[Q], b: &[Q]| {
            let mut acc = Q::zero();
            for i in 0..rank {
                for j in 0..rank {
                    acc += gram[i][j] * a[i] * b[j];
                }
            }
            acc
        };
        let mut set: Vec<Vec<Q>> = (0..rank)
            .map(|i| (0..rank).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
            .collect();
        loop {
            let mut grew = false;
            let snapshot = set.clone();
            for a in &snapshot {
                for b in &snapshot {
                    let k = Q::from_integer(2) * form(b, a) / form(a, a);
                    let img: Vec<Q> = b.iter().zip(a).map(|(x, y)| *x - k * *y).collect();
                    if !set.contains(&img) {
                        set.push(img);
                        grew = true;
                    }
                }
            }
            if !grew {
                return set.len();
            }
        }
    }

    /// Independent group closure by left-multiplying with all root
    /// reflections until no new matrix appears.
    fn group_oracle(rs: &RootSystem) -> (usize, usize) {
        let gens: Vec<Matrix> = (0..rs.rank()).map(|i| rs.simple_reflection(i)).collect();
        let mut layers: Vec<Vec<Matrix>> = vec![vec![Matrix::identity(rs.rank())]];
        let mut all: Vec<Matrix> = layers[0].clone();
        loop {
            let mut next = Vec::new();
            for m in layers.last().unwrap() {
                for g in &gens {
                    let p = g.mul(m);
                    if !all.contains(&p) {
                        all.push(p.clone());
                        next.push(p);
                    }
                }
            }
            if next.is_empty() {
                return (all.len(), layers.len() - 1);
            }
            layers.push(next);
        }
    }

    #[test]
    fn positive_root_counts() {
        assert_eq!(RootSystem::build(RootType::A1).num_positive(), 1);
        for t in [RootType::A1, RootType::A2, RootType::B2] {
            let rs = RootSystem::build(t);
            assert_eq!(rs.roots().len(), closure_oracle(t), "{t}");
        }
        assert_eq!(RootSystem::build(RootType::A2).num_positive(), 3);
        assert_eq!(RootSystem::build(RootType::B2).num_positive(), 4);
    }

    #[test]
    fn b2_positive_roots_in_order() {
        let rs = RootSystem::build(RootType::B2);
        let coeffs: Vec<Vec<i64>> = rs.positive_roots().iter().map(|r| r.coeffs.clone()).collect();
        assert_eq!(coeffs, vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![2, 1]]);
    }

    #[test]
    fn reflect_examples() {
        let a1 = RootSystem::build(RootType::A1);
        let c = vec![Q::new(5, 3)];
        assert_eq!(a1.reflect(0, &c).unwrap(), vec![Q::new(-5, 3)]);
        let twice = a1.reflect(0, &a1.reflect(0, &c).unwrap()).unwrap();
        assert_eq!(twice, c);

        let a2 = RootSystem::build(RootType::A2);
        let img = a2.reflect_root(0, 1).unwrap();
        assert_eq!(a2.root(img).coeffs, vec![1, 1]);
        assert!(a2.reflect(9, &[Q::zero(), Q::zero()]).is_err());
    }

    #[test]
    fn reflections_permute_roots() {
        for t in [RootType::A1, RootType::A2, RootType::B2] {
            let rs = RootSystem::build(t);
            for a in 0..rs.roots().len() {
                for b in 0..rs.roots().len() {
                    assert!(rs.reflect_root(a, b).is_ok());
                }
                assert_eq!(rs.reflect_root(a, a).unwrap(), rs.negate_index(a));
            }
        }
    }

    #[test]
    fn weyl_group_orders_and_diameters() {
        for (t, order, diam) in [(RootType::A1, 2, 1), (RootType::A2, 6, 3), (RootType::B2, 8, 4)] {
            let rs = RootSystem::build(t);
            let w = WeylGroup::enumerate(&rs);
            assert_eq!((w.order(), w.diameter()), (order, diam), "{t}");
            assert_eq!(group_oracle(&rs), (order, diam), "{t} oracle");
        }
    }

    #[test]
    fn gallery_distance_examples() {
        let a1 = RootSystem::build(RootType::A1);
        let w1 = WeylGroup::enumerate(&a1);
        assert_eq!(w1.gallery_distance(WeylId(0), WeylId(0)), 0);
        assert_eq!(w1.gallery_distance(WeylId::IDENTITY, w1.simple(0)), 1);
        let a2 = RootSystem::build(RootType::A2);
        let w2 = WeylGroup::enumerate(&a2);
        assert_eq!(w2.gallery_distance(WeylId::IDENTITY, w2.longest()), 3);
    }

    #[test]
    fn gallery_distance_is_a_metric() {
        for t in [RootType::A1, RootType::A2, RootType::B2] {
            let rs = RootSystem::build(t);
            let w = WeylGroup::enumerate(&rs);
            for a in w.ids() {
                for b in w.ids() {
                    let d = w.gallery_distance(a, b);
                    assert_eq!(d, w.gallery_distance(b, a));
                    assert_eq!(d == 0, a == b);
                    assert!(d <= w.diameter());
                    for c in w.ids() {
                        assert!(d <= w.gallery_distance(a, c) + w.gallery_distance(c, b));
                    }
                }
            }
        }
    }

    #[test]
    fn words_are_reduced_and_match_matrices() {
        for t in [RootType::A1, RootType::A2, RootType::B2] {
            let rs = RootSystem::build(t);
            let w = WeylGroup::enumerate(&rs);
            for id in w.ids() {
                let e = w.element(id);
                let prod = e
                    .word
                    .iter()
                    .fold(Matrix::identity(rs.rank()), |m, &i| m.mul(&rs.simple_reflection(i)));
                assert_eq!(prod, e.matrix);
                assert_eq!(w.from_word(&e.word), Some(id));
                // Length equals the number of positive roots sent negative.
                let inversions = (0..rs.num_positive())
                    .filter(|&b| w.act_on_root(w.inverse(id), b) >= rs.num_positive())
                    .count();
                assert_eq!(inversions, e.length());
            }
        }
    }

    #[test]
    fn coweights_are_dual_to_simple_roots() {
        for t in [RootType::A1, RootType::A2, RootType::B2] {
            let rs = RootSystem::build(t);
            let om = rs.fundamental_coweights();
            for i in 0..rs.rank() {
                for j in 0..rs.rank() {
                    let v = eval(&rs.simple_root(j).functional, &om[i]);
                    assert_eq!(v, if i == j { Q::one() } else { Q::zero() });
                }
            }
        }
    }

    #[test]
    fn unsupported_type_is_rejected() {
        assert!("G2".parse::<RootType>().is_err());
        assert!("H3".parse::<RootType>().is_err());
    }
}
