use super::{solve, BlockSdp, SdpBlock, SdpOptions, SdpSolution};
use crate::cone_factory::{AffineExpr, Assignment, LinearMatrixSystem, MapStep, VarId};
use crate::error::{Error, Result};
use crate::hermitian::{CMatrix, HermitianMatrix};
use num_complex::Complex64;
use std::collections::{BTreeMap, HashMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A real linear functional given as the real part of a 1×1 affine expression.
#[derive(Clone, Debug)]
pub struct Objective {
    pub sense: Sense,
    pub expr: AffineExpr,
}

impl Objective {
    pub fn minimize(expr: AffineExpr) -> Self {
        Objective {
            sense: Sense::Minimize,
            expr,
        }
    }

    pub fn maximize(expr: AffineExpr) -> Self {
        Objective {
            sense: Sense::Maximize,
            expr,
        }
    }

    pub fn zero() -> Self {
        Self::minimize(AffineExpr::scalar(0.0))
    }
}

#[derive(Clone, Copy, Debug)]
enum Part {
    Diag,
    Re,
    Im,
}

#[derive(Clone, Copy, Debug)]
struct Param {
    var: VarId,
    a: usize,
    b: usize,
    part: Part,
}

impl Param {
    fn basis(&self, n: usize) -> CMatrix {
        let mut e = CMatrix::zeros(n, n);
        match self.part {
            Part::Diag => e[(self.a, self.a)] = Complex64::new(1.0, 0.0),
            Part::Re => {
                e[(self.a, self.b)] = Complex64::new(1.0, 0.0);
                e[(self.b, self.a)] = Complex64::new(1.0, 0.0);
            }
            Part::Im => {
                e[(self.a, self.b)] = Complex64::new(0.0, 1.0);
                e[(self.b, self.a)] = Complex64::new(0.0, -1.0);
            }
        }
        e
    }
}

/// A block SDP together with the map back to system variables.
#[derive(Clone, Debug)]
pub struct CompiledSdp {
    pub problem: BlockSdp,
    sense: Sense,
    offset: f64,
    complex: bool,
    dims: Vec<usize>,
    params: Vec<Param>,
    base: Vec<f64>,
    columns: Vec<Vec<(usize, f64)>>,
    fixings: Assignment,
}

fn is_real_matrix(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

fn expr_is_real(e: &AffineExpr) -> bool {
    is_real_matrix(e.constant_part())
        && e.terms().iter().all(|t| {
            t.coef.im == 0.0
                && t.steps.iter().all(|s| match s {
                    MapStep::Left(m) | MapStep::Right(m) => is_real_matrix(m),
                    _ => true,
                })
        })
}

fn system_exprs(sys: &LinearMatrixSystem) -> impl Iterator<Item = &AffineExpr> {
    sys.blocks()
        .iter()
        .flat_map(|b| b.cells().iter().flatten())
        .chain(sys.equalities().iter().map(|e| &e.expr))
}

/// Real symmetric image of a Hermitian block value, embedded as
/// [[A, −B], [B, A]] in the complex case.
fn embed(m: &CMatrix, complex: bool) -> DenseSym {
    let n = m.nrows();
    if !complex || n == 1 {
        return DenseSym::from_fn(n, n, |i, j| 0.5 * (m[(i, j)].re + m[(j, i)].re));
    }
    DenseSym::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, bj) = (i / n, j / n);
        let (r, c) = (i % n, j % n);
        let h = 0.5 * (m[(r, c)] + m[(c, r)].conj());
        match (bi, bj) {
            (0, 0) | (1, 1) => h.re,
            (0, 1) => -h.im,
            _ => h.im,
        }
    })
}

type DenseSym = nalgebra::DMatrix<f64>;

fn dense_to_sparse(m: &DenseSym) -> Vec<(usize, usize, f64)> {
    let n = m.nrows();
    let mut out = Vec::new();
    for c in 0..n {
        for r in 0..=c {
            let v = m[(r, c)];
            if v != 0.0 {
                out.push((r, c, v));
            }
        }
    }
    out
}

fn is_hermitian_matrix(m: &CMatrix) -> bool {
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    (m - m.adjoint()).iter().all(|z| z.norm() <= 1e-14 * scale)
}

struct Rref {
    /// (pivot parameter, reduced row over parameters, right-hand side)
    pivots: Vec<(usize, Vec<f64>, f64)>,
}

/// Row reduction of A p = c, preferring late parameters as pivots.
fn rref(rows: Vec<(Vec<f64>, f64)>, labels: &[String]) -> Result<Rref> {
    let mut pivots: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    for (ri, (mut row, mut rhs)) in rows.into_iter().enumerate() {
        let scale = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (pc, prow, prhs) in &pivots {
            let f = row[*pc];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(prow) {
                    *x -= f * p;
                }
                row[*pc] = 0.0;
                rhs -= f * prhs;
            }
        }
        let max = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if max <= 1e-12 * scale.max(1.0) {
            if rhs.abs() > 1e-9 * (1.0 + scale) {
                return Err(Error::InconsistentFixings(format!(
                    "equality {} cannot hold (residual {rhs:.3e})",
                    labels[ri]
                )));
            }
            continue;
        }
        let pc = (0..row.len())
            .rev()
            .find(|&j| row[j].abs() >= 0.1 * max)
            .expect("a maximal entry exists");
        let inv = 1.0 / row[pc];
        for x in row.iter_mut() {
            *x *= inv;
        }
        row[pc] = 1.0;
        rhs *= inv;
        for x in row.iter_mut() {
            if x.abs() <= 1e-15 {
                *x = 0.0;
            }
        }
        for (_, prow, prhs) in pivots.iter_mut() {
            let f = prow[pc];
            if f != 0.0 {
                for (x, p) in prow.iter_mut().zip(&row) {
                    *x -= f * p;
                }
                prow[pc] = 0.0;
                *prhs -= f * rhs;
            }
        }
        pivots.push((pc, row, rhs));
    }
    Ok(Rref { pivots })
}

/// Compiles a system, an objective and fixings of some variables into a block SDP
/// over the remaining degrees of freedom.
pub fn compile(sys: &LinearMatrixSystem, objective: &Objective, fixings: &Assignment) -> Result<CompiledSdp> {
    let nvars = sys.variables().len();
    if objective.expr.shape() != (1, 1) {
        return Err(Error::Shape("objective must be a 1x1 expression".into()));
    }
    if let Some(v) = objective.expr.variables().iter().find(|v| v.0 >= nvars) {
        return Err(Error::UndeclaredVariable(format!("#{} in objective", v.0)));
    }
    for (id, val) in fixings {
        if id.0 >= nvars {
            return Err(Error::UndeclaredVariable(format!("#{} in fixings", id.0)));
        }
        let d = sys.decl(*id);
        if val.dim() != d.dim {
            return Err(Error::InconsistentFixings(format!(
                "{} fixed to order {}, declared {}",
                d.name,
                val.dim(),
                d.dim
            )));
        }
    }
    let complex = !(system_exprs(sys).all(expr_is_real)
        && expr_is_real(&objective.expr)
        && fixings.values().all(HermitianMatrix::is_real));

    let dims: Vec<usize> = sys.variables().iter().map(|d| d.dim).collect();
    let mut params = Vec::new();
    for id in sys.var_ids() {
        if fixings.contains_key(&id) {
            continue;
        }
        let n = dims[id.0];
        for a in 0..n {
            params.push(Param { var: id, a, b: a, part: Part::Diag });
        }
        for a in 0..n {
            for b in a + 1..n {
                params.push(Param { var: id, a, b, part: Part::Re });
            }
        }
        if complex {
            for a in 0..n {
                for b in a + 1..n {
                    params.push(Param { var: id, a, b, part: Part::Im });
                }
            }
        }
    }
    let np = params.len();

    let mut base_assign = fixings.clone();
    for id in sys.var_ids() {
        base_assign
            .entry(id)
            .or_insert_with(|| HermitianMatrix::zeros(dims[id.0]));
    }

    // Equality rows.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut row_labels = Vec::new();
    for eq in sys.equalities() {
        let c = eq.expr.evaluate(&base_assign)?;
        let n = c.nrows();
        let eq_vars = eq.expr.variables();
        let mut images: Vec<(usize, CMatrix)> = Vec::new();
        for (l, p) in params.iter().enumerate() {
            if eq_vars.contains(&p.var) {
                if let Some(img) = eq.expr.linear_image(p.var, &p.basis(dims[p.var.0])) {
                    images.push((l, img));
                }
            }
        }
        let hermitian = is_hermitian_matrix(&c) && images.iter().all(|(_, m)| is_hermitian_matrix(m));
        let mut push = |get: &dyn Fn(&CMatrix) -> f64| {
            let mut row = vec![0.0; np];
            for (l, img) in &images {
                row[*l] = get(img);
            }
            rows.push((row, -get(&c)));
            row_labels.push(eq.label.clone());
        };
        for a in 0..n {
            for b in 0..n {
                if hermitian && b < a {
                    continue;
                }
                push(&|m: &CMatrix| m[(a, b)].re);
                if !hermitian || b > a {
                    push(&|m: &CMatrix| m[(a, b)].im);
                }
            }
        }
    }
    let reduced = rref(rows, &row_labels)?;

    let mut is_pivot = vec![None; np];
    for (i, (pc, _, _)) in reduced.pivots.iter().enumerate() {
        is_pivot[*pc] = Some(i);
    }
    let free: Vec<usize> = (0..np).filter(|l| is_pivot[*l].is_none()).collect();
    let mut zindex = vec![usize::MAX; np];
    for (j, &l) in free.iter().enumerate() {
        zindex[l] = j;
    }
    let mut base = vec![0.0; np];
    let mut columns: Vec<Vec<(usize, f64)>> = free.iter().map(|&l| vec![(l, 1.0)]).collect();
    // inverse: parameter -> [(z index, coefficient)]
    let mut inverse: Vec<Vec<(usize, f64)>> = vec![Vec::new(); np];
    for (j, &l) in free.iter().enumerate() {
        inverse[l].push((j, 1.0));
    }
    for (pc, row, rhs) in &reduced.pivots {
        base[*pc] = *rhs;
        for &l in &free {
            let a = row[l];
            if a != 0.0 {
                columns[zindex[l]].push((*pc, -a));
                inverse[*pc].push((zindex[l], -a));
            }
        }
    }
    let nz = free.len();

    // Objective.
    let obj_const = objective.expr.evaluate(&base_assign)?[(0, 0)].re;
    let obj_vars = objective.expr.variables();
    let mut obj_param = vec![0.0; np];
    for (l, p) in params.iter().enumerate() {
        if obj_vars.contains(&p.var) {
            if let Some(img) = objective.expr.linear_image(p.var, &p.basis(dims[p.var.0])) {
                obj_param[l] = img[(0, 0)].re;
            }
        }
    }
    let offset = obj_const + (0..np).map(|l| base[l] * obj_param[l]).sum::<f64>();
    let sign = if objective.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let cost: Vec<f64> = columns
        .iter()
        .map(|col| sign * col.iter().map(|(l, c)| c * obj_param[*l]).sum::<f64>())
        .collect();

    // Blocks.
    let mut problem = BlockSdp::new(cost);
    let mut scalars = SdpBlock::new(0, true, "scalars");
    for blk in sys.blocks() {
        let bvars = blk.variables();
        let constant = blk.evaluate(&base_assign)?;
        let c = embed(constant.as_matrix(), complex);
        let size = c.nrows();
        let mut f0 = -c;
        let mut fz: BTreeMap<usize, DenseSym> = BTreeMap::new();
        for (l, p) in params.iter().enumerate() {
            if !bvars.contains(&p.var) {
                continue;
            }
            let Some(img) = blk.linear_image(p.var, &p.basis(dims[p.var.0])) else {
                continue;
            };
            let g = embed(&img, complex);
            if base[l] != 0.0 {
                f0 -= &g * base[l];
            }
            for &(j, coef) in &inverse[l] {
                fz.entry(j)
                    .and_modify(|m| *m += &g * coef)
                    .or_insert_with(|| &g * coef);
            }
        }
        fz.retain(|_, m| m.iter().any(|v| *v != 0.0));
        if size == 1 {
            let row = scalars.size;
            scalars.size += 1;
            scalars.add(0, row, row, f0[(0, 0)]);
            for (j, m) in &fz {
                scalars.add(j + 1, row, row, m[(0, 0)]);
            }
            continue;
        }
        if fz.is_empty() && (-&f0).symmetric_eigenvalues().min() >= -1e-12 * f0.norm().max(1.0) {
            continue;
        }
        let mut b = SdpBlock::new(size, false, blk.label());
        for (r, c, v) in dense_to_sparse(&f0) {
            b.add(0, r, c, v);
        }
        for (j, m) in &fz {
            for (r, c, v) in dense_to_sparse(m) {
                b.add(j + 1, r, c, v);
            }
        }
        problem.push_block(b);
    }
    if scalars.size > 0 {
        problem.push_block(scalars);
    }
    debug_assert_eq!(problem.num_vars(), nz);

    Ok(CompiledSdp {
        problem,
        sense: objective.sense,
        offset,
        complex,
        dims,
        params,
        base,
        columns,
        fixings: fixings.clone(),
    })
}

impl CompiledSdp {
    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// True when variables were parametrized with complex entries.
    pub fn is_complex(&self) -> bool {
        self.complex
    }

    /// Objective of the system at the point described by `y`.
    pub fn objective_value(&self, y: &[f64]) -> f64 {
        let b: f64 = self.problem.cost.iter().zip(y).map(|(c, v)| c * v).sum();
        match self.sense {
            Sense::Minimize => self.offset + b,
            Sense::Maximize => self.offset - b,
        }
    }

    /// Objective value implied by a dual bound of the block SDP.
    pub fn objective_from_bound(&self, bound: f64) -> f64 {
        match self.sense {
            Sense::Minimize => self.offset + bound,
            Sense::Maximize => self.offset - bound,
        }
    }

    /// Values of every system variable at the point described by `y`.
    pub fn assignment(&self, y: &[f64]) -> Assignment {
        let mut p = self.base.clone();
        for (col, yj) in self.columns.iter().zip(y) {
            for (l, c) in col {
                p[*l] += c * yj;
            }
        }
        let mut mats: HashMap<VarId, CMatrix> = HashMap::new();
        for (param, v) in self.params.iter().zip(&p) {
            let n = self.dims[param.var.0];
            let m = mats.entry(param.var).or_insert_with(|| CMatrix::zeros(n, n));
            *m += param.basis(n) * Complex64::new(*v, 0.0);
        }
        let mut out = self.fixings.clone();
        for (id, m) in mats {
            out.insert(id, HermitianMatrix::hermitian_part(&m));
        }
        for (i, &n) in self.dims.iter().enumerate() {
            out.entry(VarId(i)).or_insert_with(|| HermitianMatrix::zeros(n));
        }
        out
    }

    /// Solves the compiled problem.
    pub fn solve(&self, opts: &SdpOptions) -> Result<SdpSolution> {
        solve(&self.problem, opts)
    }

    /// Largest s such that every block can be made ⪰ sI, capped at 1.
    pub fn feasibility_margin(&self, opts: &SdpOptions) -> Result<(f64, SdpSolution)> {
        let sol = solve(&self.problem.with_margin(), opts)?;
        let s = *sol.y.last().expect("margin variable present");
        Ok((s, sol))
    }
}
