//! Structural constraints and the linear equality system of a truncation.
//!
//! Over the truncated basis the two affine-subspace identities become
//! finitely many linear equations in the coefficient matrices: every
//! matrix entry of each identity is cleared onto the common denominator of
//! its terms and the numerator coefficients are matched power by power.
//! Rows are scaled to unit maximum magnitude, given a canonical sign, and
//! deduplicated, which drops the bitwise-identical rows the row and column
//! identities share.
//!
//! Sparsity constraints on the control response Y (and hence on the
//! controller, for quadratically invariant patterns) are expressed as
//! extra rows pinning the disallowed coefficients to zero, for every
//! coefficient index including the feedthrough index 0.

use std::collections::{HashMap, HashSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::BlockId;
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::rational::{multiset_diff, multiset_extra};
use crate::rmatrix::{Domain, RationalMatrix};

/// A boolean support pattern for a transfer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PatternWire", into = "PatternWire")]
pub struct SparsityPattern {
    nrows: usize,
    ncols: usize,
    mask: Vec<bool>,
}

impl SparsityPattern {
    pub fn from_rows(rows: Vec<Vec<bool>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
        if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidInput("empty or ragged pattern".into()));
        }
        Ok(SparsityPattern {
            nrows,
            ncols,
            mask: rows.into_iter().flatten().collect(),
        })
    }

    pub fn full(nrows: usize, ncols: usize) -> Self {
        SparsityPattern {
            nrows,
            ncols,
            mask: vec![true; nrows * ncols],
        }
    }

    pub fn lower_triangular(n: usize) -> Self {
        let mut p = SparsityPattern {
            nrows: n,
            ncols: n,
            mask: vec![false; n * n],
        };
        for i in 0..n {
            for j in 0..=i {
                p.mask[i * n + j] = true;
            }
        }
        p
    }

    /// Support of a rational matrix: true where the entry is nonzero.
    pub fn support_of(m: &RationalMatrix) -> Self {
        SparsityPattern {
            nrows: m.nrows(),
            ncols: m.ncols(),
            mask: m.entries().iter().map(|e| !e.is_zero()).collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.ncols + j]
    }

    /// Boolean matrix product: the support of a product of matrices with
    /// these supports (absent accidental cancellation).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "pattern {}x{} composed with {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut out = SparsityPattern {
            nrows: self.nrows,
            ncols: other.ncols,
            mask: vec![false; self.nrows * other.ncols],
        };
        for i in 0..self.nrows {
            for j in 0..other.ncols {
                out.mask[i * other.ncols + j] =
                    (0..self.ncols).any(|k| self.allowed(i, k) && other.allowed(k, j));
            }
        }
        Ok(out)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self
                .mask
                .iter()
                .zip(other.mask.iter())
                .all(|(a, b)| !a || *b)
    }

    /// Largest absolute numerator coefficient over the disallowed entries.
    pub fn off_pattern_magnitude(&self, m: &RationalMatrix) -> Result<f64> {
        if m.nrows() != self.nrows || m.ncols() != self.ncols {
            return Err(Error::DimensionMismatch(
                "pattern does not match matrix shape".into(),
            ));
        }
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                if !self.allowed(i, j) {
                    worst = worst.max(m.entry(i, j).num().max_abs_coeff());
                }
            }
        }
        Ok(worst)
    }
}

#[derive(Serialize, Deserialize)]
struct PatternWire {
    #[serde(rename = "S")]
    s: Vec<Vec<u8>>,
}

impl TryFrom<PatternWire> for SparsityPattern {
    type Error = Error;

    fn try_from(w: PatternWire) -> Result<Self> {
        if w.s.iter().flatten().any(|v| *v > 1) {
            return Err(Error::InvalidInput("pattern entries must be 0 or 1".into()));
        }
        SparsityPattern::from_rows(
            w.s.into_iter()
                .map(|r| r.into_iter().map(|v| v == 1).collect())
                .collect(),
        )
    }
}

impl From<SparsityPattern> for PatternWire {
    fn from(p: SparsityPattern) -> Self {
        PatternWire {
            s: (0..p.nrows)
                .map(|i| (0..p.ncols).map(|j| u8::from(p.allowed(i, j))).collect())
                .collect(),
        }
    }
}

/// Whether a controller pattern is quadratically invariant under a plant
/// support: every composition K G K allowed by the patterns stays inside
/// the controller pattern, so the pattern is preserved by feedback.
pub fn is_quadratically_invariant(
    k_pattern: &SparsityPattern,
    g_support: &SparsityPattern,
) -> Result<bool> {
    let kgk = k_pattern.compose(g_support)?.compose(k_pattern)?;
    Ok(kgk.is_subset_of(k_pattern))
}

/// Coordinates of one scalar unknown: coefficient `index` of entry
/// (`row`, `col`) of one block of the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarKey {
    pub block: BlockId,
    #[serde(rename = "i")]
    pub index: usize,
    pub row: usize,
    pub col: usize,
}

/// The assembled linear equality system `A x = b` of a truncation.
///
/// Columns are ordered block by block (X, Y, W, Z), coefficient index
/// fastest varying last: for each block, all entries of coefficient 0 in
/// row-major order, then coefficient 1, and so on. Rows are stored
/// sparsely; [`EqualitySystem::dense`] materializes them.
#[derive(Debug, Clone)]
pub struct EqualitySystem {
    domain: Domain,
    horizon: usize,
    pole_shift: Option<f64>,
    p: usize,
    m: usize,
    vars: Vec<VarKey>,
    lookup: HashMap<VarKey, usize>,
    rows: Vec<(Vec<(usize, f64)>, f64)>,
}

impl EqualitySystem {
    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn pole_shift(&self) -> Option<f64> {
        self.pole_shift
    }

    pub fn plant_outputs(&self) -> usize {
        self.p
    }

    pub fn plant_inputs(&self) -> usize {
        self.m
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[VarKey] {
        &self.vars
    }

    pub fn var_index(&self, key: &VarKey) -> Option<usize> {
        self.lookup.get(key).copied()
    }

    /// Appends rows pinning the given unknowns to zero.
    pub fn append_var_pins<I: IntoIterator<Item = VarKey>>(&mut self, keys: I) {
        for key in keys {
            let col = self.lookup[&key];
            self.rows.push((vec![(col, 1.0)], 0.0));
        }
    }

    /// Materializes the dense system.
    pub fn dense(&self) -> (DMatrix<f64>, DVector<f64>) {
        let mut a = DMatrix::zeros(self.rows.len(), self.vars.len());
        let mut b = DVector::zeros(self.rows.len());
        for (r, (cols, rhs)) in self.rows.iter().enumerate() {
            for (c, v) in cols {
                a[(r, *c)] = *v;
            }
            b[r] = *rhs;
        }
        (a, b)
    }

    /// Sparse-triplet rendering of the system for inspection.
    pub fn to_sparse_json(&self) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(r, (cols, _))| {
                cols.iter()
                    .map(move |(c, v)| serde_json::json!([r, c, v]))
            })
            .collect();
        let rhs: Vec<f64> = self.rows.iter().map(|(_, b)| *b).collect();
        serde_json::json!({
            "rows": self.rows.len(),
            "cols": self.vars.len(),
            "entries": entries,
            "rhs": rhs,
            "vars": self.vars,
        })
    }
}

/// Accumulates, for one matrix entry of one identity, the polynomial
/// multiplying each unknown over the entry's common denominator, plus the
/// right-hand-side polynomial.
struct EntryAccum {
    vars: HashMap<usize, Polynomial>,
    rhs: Polynomial,
}

impl EntryAccum {
    fn new() -> Self {
        EntryAccum {
            vars: HashMap::new(),
            rhs: Polynomial::zero(),
        }
    }

    fn add_var(&mut self, col: usize, poly: Polynomial) {
        if poly.is_zero() {
            return;
        }
        let slot = self.vars.entry(col).or_insert_with(Polynomial::zero);
        *slot = slot.add(&poly);
    }
}

struct RowSink {
    rows: Vec<(Vec<(usize, f64)>, f64)>,
    seen: HashSet<Vec<(usize, u64)>>,
}

impl RowSink {
    fn new() -> Self {
        RowSink {
            rows: Vec::new(),
            seen: HashSet::new(),
        }
    }

    /// Emits one row per matched power of the entry's accumulated
    /// polynomials, unit-scaled, sign-canonicalized and deduplicated.
    fn emit(&mut self, acc: EntryAccum) {
        let mut cols: Vec<(usize, &Polynomial)> = acc.vars.iter().map(|(c, p)| (*c, p)).collect();
        cols.sort_by_key(|(c, _)| *c);
        let deg = cols
            .iter()
            .map(|(_, p)| p.degree().unwrap_or(0))
            .chain(std::iter::once(acc.rhs.degree().unwrap_or(0)))
            .max()
            .unwrap_or(0);
        for t in 0..=deg {
            let mut row: Vec<(usize, f64)> = cols
                .iter()
                .filter_map(|(c, p)| {
                    let v = p.coeff(t);
                    (v != 0.0).then_some((*c, v))
                })
                .collect();
            let mut rhs = acc.rhs.coeff(t);
            let scale = row
                .iter()
                .map(|(_, v)| v.abs())
                .fold(rhs.abs(), f64::max);
            if scale == 0.0 {
                continue;
            }
            let sign = row
                .first()
                .map(|(_, v)| *v)
                .unwrap_or(rhs)
                .signum();
            let factor = sign / scale;
            for (_, v) in row.iter_mut() {
                *v *= factor;
            }
            rhs *= factor;
            let key: Vec<(usize, u64)> = row
                .iter()
                .map(|(c, v)| (*c, v.to_bits()))
                .chain(std::iter::once((usize::MAX, rhs.to_bits())))
                .collect();
            if self.seen.insert(key) {
                self.rows.push((row, rhs));
            }
        }
    }
}

/// Assembles the equality system of the affine-subspace identities for a
/// plant over the truncated basis, with optional sparsity rows on Y.
pub fn assemble(
    g: &RationalMatrix,
    horizon: usize,
    pole_shift: Option<f64>,
    sparsity: Option<&SparsityPattern>,
) -> Result<EqualitySystem> {
    match (g.domain(), pole_shift) {
        (Domain::S, Some(a)) if a.is_finite() && a > 0.0 => {}
        (Domain::S, _) => {
            return Err(Error::InvalidInput(
                "continuous synthesis requires a pole shift a > 0".into(),
            ))
        }
        (Domain::Z, None) => {}
        (Domain::Z, Some(_)) => {
            return Err(Error::InvalidInput(
                "discrete synthesis takes no pole shift".into(),
            ))
        }
    }
    if !g.is_strictly_proper() {
        return Err(Error::ImproperPlant(
            "synthesis requires a strictly proper plant".into(),
        ));
    }
    let (p, m) = (g.nrows(), g.ncols());
    if let Some(s) = sparsity {
        if s.nrows() != m || s.ncols() != p {
            return Err(Error::DimensionMismatch(format!(
                "sparsity pattern {}x{} for a controller of shape {}x{}",
                s.nrows(),
                s.ncols(),
                m,
                p
            )));
        }
    }

    let n = horizon;
    let mut vars = Vec::new();
    let mut lookup = HashMap::new();
    for block in BlockId::ALL {
        let (rows, cols) = block.shape(p, m);
        for index in 0..=n {
            for row in 0..rows {
                for col in 0..cols {
                    let key = VarKey {
                        block,
                        index,
                        row,
                        col,
                    };
                    lookup.insert(key, vars.len());
                    vars.push(key);
                }
            }
        }
    }
    let col_of = |block: BlockId, index: usize, row: usize, col: usize| {
        lookup[&VarKey {
            block,
            index,
            row,
            col,
        }]
    };

    let sigma_root = match g.domain() {
        Domain::Z => Complex64::new(0.0, 0.0),
        Domain::S => Complex64::new(-pole_shift.unwrap(), 0.0),
    };
    let sigma = match g.domain() {
        Domain::Z => Polynomial::from_coeffs(&[0.0, 1.0]),
        Domain::S => Polynomial::from_coeffs(&[pole_shift.unwrap(), 1.0]),
    };
    let mut sigpow = vec![Polynomial::one()];
    for i in 1..=n {
        sigpow.push(sigpow[i - 1].mul(&sigma));
    }
    let sig_roots = vec![sigma_root; n];

    let mut sink = RowSink::new();

    // left identity, first block column: X - G Y = I
    // left identity, second block column: W - G Z = 0
    // right identity, first block column: W - X G = 0
    // right identity, second block column: Z - Y G = I
    //
    // Each case pairs a "direct" block with a product of the plant and
    // another block; `left` selects whether the plant multiplies from the
    // left (sum over the plant's columns) or from the right (sum over its
    // rows).
    struct Family {
        direct: BlockId,
        through: BlockId,
        left: bool,
        identity: bool,
    }
    let families = [
        Family {
            direct: BlockId::X,
            through: BlockId::Y,
            left: true,
            identity: true,
        },
        Family {
            direct: BlockId::W,
            through: BlockId::Z,
            left: true,
            identity: false,
        },
        Family {
            direct: BlockId::W,
            through: BlockId::X,
            left: false,
            identity: false,
        },
        Family {
            direct: BlockId::Z,
            through: BlockId::Y,
            left: false,
            identity: true,
        },
    ];

    for fam in &families {
        let (rows, cols) = fam.direct.shape(p, m);
        let inner = if fam.left { m } else { p };
        for r in 0..rows {
            for c in 0..cols {
                // Common denominator: sigma^N times the least common
                // multiple of the plant denominators on this row (left) or
                // column (right). Every term carries the full sigma^N, so
                // plant poles at the basis root stack on top of it rather
                // than merging into it.
                let mut plant_roots: Vec<Complex64> = Vec::new();
                for k in 0..inner {
                    let e = if fam.left {
                        g.entry(r, k)
                    } else {
                        g.entry(k, c)
                    };
                    let extra = multiset_extra(&plant_roots, e.poles());
                    plant_roots.extend(extra);
                }
                let mut acc = EntryAccum::new();
                if fam.identity && r == c {
                    let mut den_roots = sig_roots.clone();
                    den_roots.extend_from_slice(&plant_roots);
                    acc.rhs = Polynomial::from_roots(&den_roots);
                }
                let lift_direct = Polynomial::from_roots(&plant_roots);
                for i in 0..=n {
                    acc.add_var(
                        col_of(fam.direct, i, r, c),
                        lift_direct.mul(&sigpow[n - i]),
                    );
                }
                for k in 0..inner {
                    let e = if fam.left {
                        g.entry(r, k)
                    } else {
                        g.entry(k, c)
                    };
                    if e.is_zero() {
                        continue;
                    }
                    let lift = Polynomial::from_roots(&multiset_diff(&plant_roots, e.poles()));
                    let base = e.num().mul(&lift).scale(-1.0);
                    for i in 0..=n {
                        let (tr, tc) = if fam.left { (k, c) } else { (r, k) };
                        acc.add_var(
                            col_of(fam.through, i, tr, tc),
                            base.mul(&sigpow[n - i]),
                        );
                    }
                }
                sink.emit(acc);
            }
        }
    }

    let mut sys = EqualitySystem {
        domain: g.domain(),
        horizon,
        pole_shift,
        p,
        m,
        vars,
        lookup,
        rows: sink.rows,
    };

    if let Some(s) = sparsity {
        let pins = (0..m).flat_map(|r| {
            (0..p).filter(move |c| !s.allowed(r, *c)).flat_map(move |c| {
                (0..=n).map(move |index| VarKey {
                    block: BlockId::Y,
                    index,
                    row: r,
                    col: c,
                })
            })
        });
        sys.append_var_pins(pins);
    }

    Ok(sys)
}
