use num_complex::Complex64;

use super::model::{LinearOp, Mode, Prim, Side, SparseVec, SpinModel, SpinVector};
use super::sign::Label;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LetterKind {
    /// Left creation `β*`.
    BetaStar,
    /// Left annihilation `β`.
    Beta,
    /// Right creation `α*`.
    AlphaStar,
    /// Right annihilation `α`.
    Alpha,
    /// Twisted `γ_a = μ⁻¹ β*_a + μ β_{-a}`.
    Gamma,
    GammaStar,
    /// Twisted `δ_a = μ α*_a + μ⁻¹ α_{-a}`.
    Delta,
    DeltaStar,
    /// `β*_a + β_a`, self-adjoint.
    GammaUntwisted,
    /// `α*_a + α_a`, self-adjoint.
    DeltaUntwisted,
}

impl LetterKind {
    pub fn adjoint(self) -> Self {
        use LetterKind::*;
        match self {
            BetaStar => Beta,
            Beta => BetaStar,
            AlphaStar => Alpha,
            Alpha => AlphaStar,
            Gamma => GammaStar,
            GammaStar => Gamma,
            Delta => DeltaStar,
            DeltaStar => Delta,
            GammaUntwisted => GammaUntwisted,
            DeltaUntwisted => DeltaUntwisted,
        }
    }

    fn is_twisted(self) -> bool {
        matches!(
            self,
            LetterKind::Gamma | LetterKind::GammaStar | LetterKind::Delta | LetterKind::DeltaStar
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Letter {
    pub kind: LetterKind,
    pub label: Label,
    pub coeff: Complex64,
}

impl Letter {
    pub fn new(kind: LetterKind, label: Label) -> Self {
        Letter {
            kind,
            label,
            coeff: Complex64::new(1.0, 0.0),
        }
    }

    pub fn with_coeff(mut self, c: Complex64) -> Self {
        self.coeff = c;
        self
    }

    pub fn adjoint(self) -> Self {
        Letter {
            kind: self.kind.adjoint(),
            label: self.label,
            coeff: self.coeff.conj(),
        }
    }
}

/// A product of letters; `letters[0]` is leftmost, so the last letter acts first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorWord {
    pub letters: Vec<Letter>,
}

impl OperatorWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        OperatorWord { letters }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// `(l_1 ... l_m)* = l_m* ... l_1*`.
    pub fn adjoint(&self) -> Self {
        OperatorWord {
            letters: self.letters.iter().rev().map(|l| l.adjoint()).collect(),
        }
    }
}

impl FromIterator<Letter> for OperatorWord {
    fn from_iter<T: IntoIterator<Item = Letter>>(iter: T) -> Self {
        OperatorWord {
            letters: iter.into_iter().collect(),
        }
    }
}

impl SpinModel {
    fn prim_op(&self, label: Label, create: bool, side: Side) -> Result<LinearOp> {
        Ok(LinearOp::prim(Prim {
            bit: self.bit(label)?,
            create,
            side,
        }))
    }

    /// Expands a letter into primitive left/right creation-annihilation terms.
    pub fn compile(&self, letter: &Letter) -> Result<LinearOp> {
        use LetterKind::*;
        let a = letter.label;
        if letter.kind.is_twisted() {
            if self.mode() != Mode::Twisted {
                return Err(Error::mode(format!(
                    "{:?} needs a twisted model",
                    letter.kind
                )));
            }
            if a.j <= 0 {
                return Err(Error::domain(format!(
                    "twisted generator label {a} must have j > 0"
                )));
            }
        }
        let mu = Complex64::new(self.mu_of(a), 0.0);
        let inv = Complex64::new(1.0 / self.mu_of(a), 0.0);
        let op = match letter.kind {
            BetaStar => self.prim_op(a, true, Side::Left)?,
            Beta => self.prim_op(a, false, Side::Left)?,
            AlphaStar => self.prim_op(a, true, Side::Right)?,
            Alpha => self.prim_op(a, false, Side::Right)?,
            Gamma => self
                .prim_op(a, true, Side::Left)?
                .scaled(inv)
                .plus(self.prim_op(a.mirror(), false, Side::Left)?.scaled(mu)),
            GammaStar => self
                .prim_op(a, false, Side::Left)?
                .scaled(inv)
                .plus(self.prim_op(a.mirror(), true, Side::Left)?.scaled(mu)),
            Delta => self
                .prim_op(a, true, Side::Right)?
                .scaled(mu)
                .plus(self.prim_op(a.mirror(), false, Side::Right)?.scaled(inv)),
            DeltaStar => self
                .prim_op(a, false, Side::Right)?
                .scaled(mu)
                .plus(self.prim_op(a.mirror(), true, Side::Right)?.scaled(inv)),
            GammaUntwisted => self
                .prim_op(a, true, Side::Left)?
                .plus(self.prim_op(a, false, Side::Left)?),
            DeltaUntwisted => self
                .prim_op(a, true, Side::Right)?
                .plus(self.prim_op(a, false, Side::Right)?),
        };
        Ok(op.scaled(letter.coeff))
    }

    pub fn compile_word(&self, word: &OperatorWord) -> Result<Vec<LinearOp>> {
        word.letters.iter().map(|l| self.compile(l)).collect()
    }

    pub fn apply_generator(&self, letter: &Letter, v: &SpinVector) -> Result<SpinVector> {
        Ok(self.apply_dense(&self.compile(letter)?, v))
    }

    /// Dense right-to-left application of a word.
    pub fn apply_word(&self, word: &OperatorWord, v: &SpinVector) -> Result<SpinVector> {
        let ops = self.compile_word(word)?;
        let mut cur = v.clone();
        for op in ops.iter().rev() {
            cur = self.apply_dense(op, &cur);
        }
        Ok(cur)
    }

    /// Sparse application to a vector given as `(basis index, amplitude)` pairs.
    pub fn apply_word_sparse(&self, word: &OperatorWord, v: &SparseVec) -> Result<SparseVec> {
        let ops = self.compile_word(word)?;
        Ok(self.apply_product_sparse(&ops, v))
    }

    /// `w·1` as a sparse vector.
    pub fn word_on_vacuum(&self, word: &OperatorWord) -> Result<SparseVec> {
        let mut v = SparseVec::new();
        v.insert(0, Complex64::new(1.0, 0.0));
        self.apply_word_sparse(word, &v)
    }

    /// `φ^ε(w) = ⟨1, w·1⟩`.
    pub fn vacuum_state(&self, word: &OperatorWord) -> Result<Complex64> {
        Ok(self
            .word_on_vacuum(word)?
            .get(&0)
            .copied()
            .unwrap_or_default())
    }

    /// Dense matrix of a word, column `b` being `w e_b`.
    pub fn word_matrix(&self, word: &OperatorWord) -> Result<nalgebra::DMatrix<Complex64>> {
        let ops = self.compile_word(word)?;
        Ok(self.product_matrix(&ops))
    }

    pub fn product_matrix(&self, ops: &[LinearOp]) -> nalgebra::DMatrix<Complex64> {
        let dim = self.dim();
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        for b in 0..dim {
            let mut v = SparseVec::new();
            v.insert(b as u64, Complex64::new(1.0, 0.0));
            for (r, c) in self.apply_product_sparse(ops, &v) {
                m[(r as usize, b)] = c;
            }
        }
        m
    }
}
