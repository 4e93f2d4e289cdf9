use crate::error::{Error, Result};
use crate::hermitian::{CMatrix, HermitianMatrix};
use num_complex::Complex64;
use std::collections::{BTreeSet, HashMap};

/// Handle of a declared variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarRole {
    Input,
    Auxiliary,
}

#[derive(Clone, Debug)]
pub struct VariableDecl {
    pub name: String,
    pub dim: usize,
    pub role: VarRole,
}

/// Values for some or all variables of a system.
pub type Assignment = HashMap<VarId, HermitianMatrix>;

/// One linear step applied to a matrix argument.
#[derive(Clone, Debug)]
pub enum MapStep {
    /// V ↦ M V
    Left(CMatrix),
    /// V ↦ V M
    Right(CMatrix),
    /// V ↦ V ⊗ I_d
    KronIdentityRight(usize),
    /// V ↦ I_d ⊗ conj(V)
    KronIdentityLeftConj(usize),
    /// V ↦ [Tr V]
    Trace,
}

impl MapStep {
    fn apply(&self, v: &CMatrix) -> CMatrix {
        match self {
            MapStep::Left(m) => m * v,
            MapStep::Right(m) => v * m,
            MapStep::KronIdentityRight(d) => v.kronecker(&CMatrix::identity(*d, *d)),
            MapStep::KronIdentityLeftConj(d) => {
                CMatrix::identity(*d, *d).kronecker(&v.map(|z| z.conj()))
            }
            MapStep::Trace => CMatrix::from_element(1, 1, v.trace()),
        }
    }

    fn adjoint(&self) -> MapStep {
        match self {
            MapStep::Left(m) => MapStep::Right(m.adjoint()),
            MapStep::Right(m) => MapStep::Left(m.adjoint()),
            other => other.clone(),
        }
    }

    fn out_shape(&self, (r, c): (usize, usize)) -> Result<(usize, usize)> {
        match self {
            MapStep::Left(m) if m.ncols() == r => Ok((m.nrows(), c)),
            MapStep::Right(m) if m.nrows() == c => Ok((r, m.ncols())),
            MapStep::KronIdentityRight(d) | MapStep::KronIdentityLeftConj(d) => Ok((r * d, c * d)),
            MapStep::Trace if r == c => Ok((1, 1)),
            _ => Err(Error::Shape(format!("map step cannot act on a {r}x{c} argument"))),
        }
    }
}

/// coef · S_p(…S_1(V)…) for the variable V.
#[derive(Clone, Debug)]
pub struct Term {
    pub var: VarId,
    pub coef: Complex64,
    pub steps: Vec<MapStep>,
}

impl Term {
    fn apply(&self, v: &CMatrix) -> CMatrix {
        let out = self.steps.iter().fold(v.clone(), |acc, s| s.apply(&acc));
        out * self.coef
    }
}

/// Affine matrix-valued expression: a constant plus linear maps of variables.
#[derive(Clone, Debug)]
pub struct AffineExpr {
    rows: usize,
    cols: usize,
    constant: CMatrix,
    terms: Vec<Term>,
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl AffineExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        AffineExpr {
            rows,
            cols,
            constant: CMatrix::zeros(rows, cols),
            terms: Vec::new(),
        }
    }

    pub fn constant(m: CMatrix) -> Self {
        AffineExpr {
            rows: m.nrows(),
            cols: m.ncols(),
            constant: m,
            terms: Vec::new(),
        }
    }

    pub fn hermitian(h: &HermitianMatrix) -> Self {
        Self::constant(h.as_matrix().clone())
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(CMatrix::identity(n, n))
    }

    pub fn scalar(x: f64) -> Self {
        Self::constant(CMatrix::from_element(1, 1, real(x)))
    }

    /// The variable itself, of order `dim`.
    pub fn var(id: VarId, dim: usize) -> Self {
        AffineExpr {
            rows: dim,
            cols: dim,
            constant: CMatrix::zeros(dim, dim),
            terms: vec![Term {
                var: id,
                coef: real(1.0),
                steps: Vec::new(),
            }],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn constant_part(&self) -> &CMatrix {
        &self.constant
    }

    pub fn variables(&self) -> BTreeSet<VarId> {
        self.terms.iter().map(|t| t.var).collect()
    }

    fn assert_same_shape(&self, other: &AffineExpr) {
        assert_eq!(
            self.shape(),
            other.shape(),
            "affine expressions of different shapes combined"
        );
    }

    pub fn plus(mut self, other: &AffineExpr) -> Self {
        self.assert_same_shape(other);
        self.constant += &other.constant;
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn minus(self, other: &AffineExpr) -> Self {
        self.plus(&other.scaled(-1.0))
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.scaled_complex(real(s))
    }

    pub fn scaled_complex(&self, s: Complex64) -> Self {
        AffineExpr {
            rows: self.rows,
            cols: self.cols,
            constant: &self.constant * s,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coef: t.coef * s,
                    ..t.clone()
                })
                .collect(),
        }
    }

    fn map_step(&self, step: MapStep) -> Result<Self> {
        let (rows, cols) = step.out_shape(self.shape())?;
        Ok(AffineExpr {
            rows,
            cols,
            constant: step.apply(&self.constant),
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    t.steps.push(step.clone());
                    t
                })
                .collect(),
        })
    }

    /// M · self
    pub fn left(&self, m: &CMatrix) -> Result<Self> {
        self.map_step(MapStep::Left(m.clone()))
    }

    /// self · M
    pub fn right(&self, m: &CMatrix) -> Result<Self> {
        self.map_step(MapStep::Right(m.clone()))
    }

    /// self ⊗ I_d
    pub fn kron_identity_right(&self, d: usize) -> Self {
        self.map_step(MapStep::KronIdentityRight(d))
            .expect("Kronecker lifting accepts any shape")
    }

    /// I_d ⊗ conj(self)
    pub fn kron_identity_left_conj(&self, d: usize) -> Self {
        self.map_step(MapStep::KronIdentityLeftConj(d))
            .expect("Kronecker lifting accepts any shape")
    }

    pub fn trace(&self) -> Result<Self> {
        self.map_step(MapStep::Trace)
    }

    /// Conjugate transpose, valid for Hermitian variable values.
    pub fn adjoint(&self) -> Self {
        AffineExpr {
            rows: self.cols,
            cols: self.rows,
            constant: self.constant.adjoint(),
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    var: t.var,
                    coef: t.coef.conj(),
                    steps: t.steps.iter().map(MapStep::adjoint).collect(),
                })
                .collect(),
        }
    }

    /// Value under an assignment covering every referenced variable.
    pub fn evaluate(&self, values: &Assignment) -> Result<CMatrix> {
        let mut out = self.constant.clone();
        for t in &self.terms {
            let v = values
                .get(&t.var)
                .ok_or_else(|| Error::UndeclaredVariable(format!("no value for variable #{}", t.var.0)))?;
            out += t.apply(v.as_matrix());
        }
        Ok(out)
    }

    /// The linear part restricted to `var`, applied to `v`; None if `var` does not occur.
    pub fn linear_image(&self, var: VarId, v: &CMatrix) -> Option<CMatrix> {
        let mut out: Option<CMatrix> = None;
        for t in self.terms.iter().filter(|t| t.var == var) {
            let img = t.apply(v);
            out = Some(match out {
                Some(acc) => acc + img,
                None => img,
            });
        }
        out
    }
}

/// A square block assembled from affine cells, required to be PSD.
#[derive(Clone, Debug)]
pub struct LmiBlock {
    label: String,
    dims: Vec<usize>,
    cells: Vec<Vec<AffineExpr>>,
}

impl LmiBlock {
    /// Builds a block from its upper triangle: `upper[r]` lists cells (r, r), (r, r+1), ….
    /// The lower triangle is the adjoint of the upper one.
    pub fn from_upper(label: impl Into<String>, upper: Vec<Vec<AffineExpr>>) -> Result<Self> {
        let label = label.into();
        let nb = upper.len();
        if nb == 0 {
            return Err(Error::Shape(format!("block {label} is empty")));
        }
        let dims: Vec<usize> = upper.iter().map(|row| row.first().map_or(0, |c| c.rows)).collect();
        let mut cells: Vec<Vec<Option<AffineExpr>>> = vec![vec![None; nb]; nb];
        for (r, row) in upper.into_iter().enumerate() {
            if row.len() != nb - r {
                return Err(Error::Shape(format!(
                    "block {label}: row {r} has {} cells, expected {}",
                    row.len(),
                    nb - r
                )));
            }
            for (off, cell) in row.into_iter().enumerate() {
                let c = r + off;
                if cell.shape() != (dims[r], dims[c]) {
                    return Err(Error::Shape(format!(
                        "block {label}: cell ({r},{c}) is {:?}, expected {:?}",
                        cell.shape(),
                        (dims[r], dims[c])
                    )));
                }
                if c != r {
                    cells[c][r] = Some(cell.adjoint());
                }
                cells[r][c] = Some(cell);
            }
        }
        let cells = cells
            .into_iter()
            .map(|row| row.into_iter().map(|c| c.expect("filled")).collect())
            .collect();
        Ok(LmiBlock { label, dims, cells })
    }

    /// A 1×1 block [e] ⪰ 0.
    pub fn scalar(label: impl Into<String>, e: AffineExpr) -> Result<Self> {
        Self::from_upper(label, vec![vec![e]])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Cells in block-row order, lower triangle included.
    pub fn cells(&self) -> &[Vec<AffineExpr>] {
        &self.cells
    }

    pub fn size(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn variables(&self) -> BTreeSet<VarId> {
        self.cells
            .iter()
            .flatten()
            .flat_map(|c| c.variables())
            .collect()
    }

    fn assemble(&self, mut cell: impl FnMut(&AffineExpr) -> Result<Option<CMatrix>>) -> Result<Option<CMatrix>> {
        let n = self.size();
        let mut out = CMatrix::zeros(n, n);
        let mut any = false;
        let mut r0 = 0;
        for (r, row) in self.cells.iter().enumerate() {
            let mut c0 = 0;
            for (c, e) in row.iter().enumerate() {
                if let Some(m) = cell(e)? {
                    any = true;
                    out.view_mut((r0, c0), (self.dims[r], self.dims[c])).copy_from(&m);
                }
                c0 += self.dims[c];
            }
            r0 += self.dims[r];
        }
        Ok(any.then_some(out))
    }

    /// The block value under a full assignment.
    pub fn evaluate(&self, values: &Assignment) -> Result<HermitianMatrix> {
        let m = self
            .assemble(|e| e.evaluate(values).map(Some))?
            .expect("blocks have at least one cell");
        Ok(HermitianMatrix::hermitian_part(&m))
    }

    /// Constant part of the block.
    pub fn constant(&self) -> CMatrix {
        self.assemble(|e| Ok(Some(e.constant.clone())))
            .ok()
            .flatten()
            .expect("blocks have at least one cell")
    }

    /// Linear image of `var` at value `v`, or None if the block does not involve `var`.
    pub fn linear_image(&self, var: VarId, v: &CMatrix) -> Option<CMatrix> {
        self.assemble(|e| Ok(e.linear_image(var, v))).ok().flatten()
    }
}

#[derive(Clone, Debug)]
pub struct LinearEquality {
    pub label: String,
    pub expr: AffineExpr,
}

/// Symbolic LMI system: PSD blocks and linear equalities over Hermitian variables.
#[derive(Clone, Debug, Default)]
pub struct LinearMatrixSystem {
    vars: Vec<VariableDecl>,
    blocks: Vec<LmiBlock>,
    equalities: Vec<LinearEquality>,
}

/// Minimum eigenvalue of every block and Frobenius norm of every equality residual.
#[derive(Clone, Debug)]
pub struct SystemEvaluation {
    pub block_min_eigs: Vec<f64>,
    pub block_scales: Vec<f64>,
    pub equality_residuals: Vec<f64>,
}

impl SystemEvaluation {
    /// True when every block is PSD and every equality holds, up to `tol`
    /// relative to max(1, block norm).
    pub fn satisfied(&self, tol: f64) -> bool {
        self.block_min_eigs
            .iter()
            .zip(&self.block_scales)
            .all(|(l, s)| *l >= -tol * s.max(1.0))
            && self.equality_residuals.iter().all(|r| *r <= tol)
    }

    pub fn min_margin(&self) -> f64 {
        self.block_min_eigs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl LinearMatrixSystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a Hermitian variable of order `dim`.
    ///
    /// # Panics
    /// If the name is already taken or `dim` is zero.
    pub fn declare(&mut self, name: impl Into<String>, dim: usize, role: VarRole) -> VarId {
        let name = name.into();
        assert!(dim > 0, "variable {name} must have positive order");
        assert!(self.var_id(&name).is_none(), "variable {name} declared twice");
        self.vars.push(VariableDecl { name, dim, role });
        VarId(self.vars.len() - 1)
    }

    /// The expression consisting of a declared variable.
    pub fn expr(&self, id: VarId) -> AffineExpr {
        AffineExpr::var(id, self.vars[id.0].dim)
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    /// Looks up a variable by name, failing with an undeclared-variable error.
    pub fn require(&self, name: &str) -> Result<VarId> {
        self.var_id(name)
            .ok_or_else(|| Error::UndeclaredVariable(name.to_string()))
    }

    pub fn decl(&self, id: VarId) -> &VariableDecl {
        &self.vars[id.0]
    }

    pub fn variables(&self) -> &[VariableDecl] {
        &self.vars
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.vars.len()).map(VarId)
    }

    pub fn blocks(&self) -> &[LmiBlock] {
        &self.blocks
    }

    pub fn equalities(&self) -> &[LinearEquality] {
        &self.equalities
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(LmiBlock::size).collect()
    }

    fn check_vars(&self, vars: &BTreeSet<VarId>, what: &str) -> Result<()> {
        match vars.iter().find(|v| v.0 >= self.vars.len()) {
            Some(v) => Err(Error::UndeclaredVariable(format!("#{} in {what}", v.0))),
            None => Ok(()),
        }
    }

    pub fn add_block(&mut self, block: LmiBlock) -> Result<()> {
        self.check_vars(&block.variables(), &block.label)?;
        self.blocks.push(block);
        Ok(())
    }

    /// Adds the constraint `expr = 0`; `expr` must be square.
    pub fn add_equality(&mut self, label: impl Into<String>, expr: AffineExpr) -> Result<()> {
        let label = label.into();
        if expr.rows != expr.cols {
            return Err(Error::Shape(format!("equality {label} is not square")));
        }
        self.check_vars(&expr.variables(), &label)?;
        self.equalities.push(LinearEquality { label, expr });
        Ok(())
    }

    /// Adds a = b for two expressions of equal shape.
    pub fn add_equal(&mut self, label: impl Into<String>, a: AffineExpr, b: &AffineExpr) -> Result<()> {
        if a.shape() != b.shape() {
            return Err(Error::Shape("equality sides differ in shape".into()));
        }
        self.add_equality(label, a.minus(b))
    }

    /// Checks that every variable has a value of the declared order.
    pub fn check_assignment(&self, values: &Assignment) -> Result<()> {
        for (id, decl) in self.vars.iter().enumerate() {
            match values.get(&VarId(id)) {
                None => return Err(Error::UndeclaredVariable(format!("no value for {}", decl.name))),
                Some(v) if v.dim() != decl.dim => {
                    return Err(Error::Shape(format!(
                        "{} has order {}, expected {}",
                        decl.name,
                        v.dim(),
                        decl.dim
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, values: &Assignment) -> Result<SystemEvaluation> {
        self.check_assignment(values)?;
        let mut block_min_eigs = Vec::with_capacity(self.blocks.len());
        let mut block_scales = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let v = b.evaluate(values)?;
            block_min_eigs.push(v.min_eigenvalue()?);
            block_scales.push(v.frobenius_norm());
        }
        let equality_residuals = self
            .equalities
            .iter()
            .map(|e| {
                e.expr
                    .evaluate(values)
                    .map(|m| m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            })
            .collect::<Result<_>>()?;
        Ok(SystemEvaluation {
            block_min_eigs,
            block_scales,
            equality_residuals,
        })
    }

    /// Every block value is Hermitian for a given assignment.
    pub fn blocks_are_hermitian(&self, values: &Assignment, tol: f64) -> Result<bool> {
        for b in &self.blocks {
            let m = b
                .assemble(|e| e.evaluate(values).map(Some))?
                .expect("blocks have at least one cell");
            let defect = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if defect > tol * m.iter().map(|z| z.norm()).fold(1.0, f64::max) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
