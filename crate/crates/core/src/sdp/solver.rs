use super::BlockSdp;
use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

#[derive(Clone, Debug)]
pub struct SdpOptions {
    /// Relative residual and gap tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest accepted sum of block sizes.
    pub max_block_dim: usize,
    pub step_fraction: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            tol: 1e-8,
            max_iter: 200,
            max_block_dim: 400,
            step_fraction: 0.98,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    /// An approximate dual ray certifies that no y makes every block PSD.
    Infeasible,
    /// An approximate primal ray makes bᵀy decrease without bound.
    Unbounded,
    MaxIterations,
    /// Progress stopped before the tolerances were met.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub y: Vec<f64>,
    /// bᵀy
    pub objective: f64,
    /// ⟨F_0, Z⟩, a lower bound on bᵀy over feasible y when Z is dual feasible.
    pub dual_bound: f64,
    /// Slack matrices Σ y_i F_i − F_0 tracked by the method, per block.
    pub slack: Vec<DMatrix<f64>>,
    /// Dual matrices per block.
    pub dual: Vec<DMatrix<f64>>,
    /// ‖Σ y_i F_i − F_0 − S‖ / (1 + ‖F_0‖).
    pub primal_infeasibility: f64,
    /// ‖b − (⟨F_i, Z⟩)_i‖ / (1 + ‖b‖).
    pub dual_infeasibility: f64,
    /// ⟨S, Z⟩
    pub gap: f64,
    pub iterations: usize,
}

impl SdpSolution {
    /// max(|bᵀy − ⟨F_0, Z⟩|, ⟨S, Z⟩) relative to 1 + |bᵀy| + |⟨F_0, Z⟩|.
    pub fn relative_gap(&self) -> f64 {
        let diff = (self.objective - self.dual_bound).abs();
        diff.max(self.gap) / (1.0 + self.objective.abs() + self.dual_bound.abs())
    }

    /// Optimal, or stopped early at an iterate whose residuals and relative gap are all below `level`.
    pub fn accurate_to(&self, level: f64) -> bool {
        match self.status {
            SdpStatus::Optimal => true,
            SdpStatus::Stalled | SdpStatus::MaxIterations => {
                self.primal_infeasibility <= level
                    && self.dual_infeasibility <= level
                    && self.relative_gap() <= level
            }
            SdpStatus::Infeasible | SdpStatus::Unbounded => false,
        }
    }
}

/// One dense block of the internal representation; diagonal blocks are split
/// into 1×1 blocks.
struct Blk {
    origin: usize,
    offset: usize,
    size: usize,
    f0: DMatrix<f64>,
    /// global variable indices, increasing
    vars: Vec<usize>,
    /// full symmetric entry lists of F_j for each local variable
    mats: Vec<Vec<(usize, usize, f64)>>,
    /// every F_j has the form [[A, −B], [B, A]]
    structured: bool,
}

impl Blk {
    fn inner(&self, local: usize, x: &DMatrix<f64>) -> f64 {
        self.mats[local].iter().map(|&(r, c, v)| v * x[(r, c)]).sum()
    }

    fn add_combination(&self, coef: &[f64], out: &mut DMatrix<f64>) {
        for (l, &g) in self.vars.iter().enumerate() {
            let y = coef[g];
            if y != 0.0 {
                for &(r, c, v) in &self.mats[l] {
                    out[(r, c)] += y * v;
                }
            }
        }
    }
}

struct Scaling {
    lambda: DVector<f64>,
    g: DMatrix<f64>,
    /// columns svec(Gᵀ F_j G) for the block's variables
    v: DMatrix<f64>,
}

fn build_blocks(problem: &BlockSdp) -> Vec<Blk> {
    let mut out = Vec::new();
    for (bi, b) in problem.blocks.iter().enumerate() {
        let parts: Vec<(usize, usize)> = if b.diagonal {
            (0..b.size).map(|i| (i, 1)).collect()
        } else {
            vec![(0, b.size)]
        };
        for (offset, size) in parts {
            let mut f0 = DMatrix::zeros(size, size);
            let mut per_var: std::collections::BTreeMap<usize, Vec<(usize, usize, f64)>> = Default::default();
            for e in b.entries() {
                if e.row < offset || e.row >= offset + size {
                    continue;
                }
                let (r, c) = (e.row - offset, e.col - offset);
                if e.mat == 0 {
                    f0[(r, c)] += e.value;
                    if r != c {
                        f0[(c, r)] += e.value;
                    }
                } else {
                    let list = per_var.entry(e.mat - 1).or_default();
                    list.push((r, c, e.value));
                    if r != c {
                        list.push((c, r, e.value));
                    }
                }
            }
            let (vars, mats): (Vec<usize>, Vec<_>) = per_var.into_iter().unzip();
            let structured = size % 2 == 0
                && size > 2
                && is_structured(&f0)
                && mats.iter().all(|f: &Vec<(usize, usize, f64)>| {
                    let mut d = DMatrix::zeros(size, size);
                    for &(r, c, v) in f {
                        d[(r, c)] += v;
                    }
                    is_structured(&d)
                });
            out.push(Blk {
                origin: bi,
                offset,
                size,
                f0,
                vars,
                mats,
                structured,
            });
        }
    }
    out
}

fn is_structured(m: &DMatrix<f64>) -> bool {
    let h = m.nrows() / 2;
    let scale = m.amax().max(f64::MIN_POSITIVE);
    (0..h).all(|i| {
        (0..h).all(|j| {
            (m[(i, j)] - m[(i + h, j + h)]).abs() <= 1e-14 * scale
                && (m[(i, j + h)] + m[(i + h, j)]).abs() <= 1e-14 * scale
        })
    })
}

/// Orthogonal projection onto matrices of the form [[A, −B], [B, A]].
fn project_structured(m: &mut DMatrix<f64>) {
    let h = m.nrows() / 2;
    for i in 0..h {
        for j in 0..h {
            let a = 0.5 * (m[(i, j)] + m[(i + h, j + h)]);
            let b = 0.5 * (m[(i + h, j)] - m[(i, j + h)]);
            m[(i, j)] = a;
            m[(i + h, j + h)] = a;
            m[(i + h, j)] = b;
            m[(i, j + h)] = -b;
        }
    }
}

fn frob2(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}

fn block_name(problem: &BlockSdp, b: &Blk) -> String {
    let pb = &problem.blocks[b.origin];
    if pb.diagonal {
        format!("block {} ({}) entry {}", b.origin + 1, pb.label, b.offset + 1)
    } else {
        format!("block {} ({})", b.origin + 1, pb.label)
    }
}

fn nt_scaling(s: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let l = Cholesky::new(z.clone())?.unpack();
    let mut lsl = l.transpose() * s * &l;
    symmetrize(&mut lsl);
    let eig = SymmetricEigen::new(lsl);
    if eig.eigenvalues.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let lambda = eig.eigenvalues.map(f64::sqrt);
    let mut g = &l * &eig.eigenvectors;
    for (j, lam) in lambda.iter().enumerate() {
        let f = 1.0 / lam.sqrt();
        g.column_mut(j).scale_mut(f);
    }
    Some((lambda, g))
}

fn svec_len(s: usize) -> usize {
    s * (s + 1) / 2
}

/// Stacks the upper triangle with off-diagonal entries scaled by √2, so that
/// svec(A)·svec(B) = ⟨A, B⟩.
fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    for c in 0..n {
        for r in 0..c {
            out[k] = std::f64::consts::SQRT_2 * 0.5 * (m[(r, c)] + m[(c, r)]);
            k += 1;
        }
        out[k] = m[(c, c)];
        k += 1;
    }
}

fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for c in 0..n {
        for r in 0..c {
            let x = v[k] * std::f64::consts::FRAC_1_SQRT_2;
            m[(r, c)] = x;
            m[(c, r)] = x;
            k += 1;
        }
        m[(c, c)] = v[k];
        k += 1;
    }
    m
}

/// svec(Gᵀ F_j G) for every local variable of the block.
fn scaled_constraints(b: &Blk, g: &DMatrix<f64>) -> DMatrix<f64> {
    let s = b.size;
    let mut v = DMatrix::zeros(svec_len(s), b.vars.len());
    let gt = g.transpose();
    for (l, f) in b.mats.iter().enumerate() {
        let ft = if f.len() > 2 * s {
            let mut dense = DMatrix::zeros(s, s);
            for &(r, c, x) in f {
                dense[(r, c)] += x;
            }
            &gt * dense * g
        } else {
            let mut acc = DMatrix::zeros(s, s);
            for &(r, c, x) in f {
                let gr = gt.column(r);
                let gc = gt.column(c);
                acc.ger(x, &gr, &gc, 1.0);
            }
            acc
        };
        svec_into(&ft, v.column_mut(l).as_mut_slice());
    }
    v
}

/// Largest α ≤ cap with Λ + α D ⪰ 0, for D symmetric in the scaled space.
fn max_step(lambda: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    let n = lambda.len();
    let m = DMatrix::from_fn(n, n, |i, j| d[(i, j)] / (lambda[i] * lambda[j]).sqrt());
    let mut m = m;
    symmetrize(&mut m);
    let min = if n == 1 { m[(0, 0)] } else { m.symmetric_eigenvalues().min() };
    if min < 0.0 {
        -1.0 / min
    } else {
        f64::INFINITY
    }
}

fn schur(blocks: &[Blk], scal: &[Scaling], p: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(p, p);
    for (b, sc) in blocks.iter().zip(scal) {
        let local = sc.v.tr_mul(&sc.v);
        for (il, &gi) in b.vars.iter().enumerate() {
            for (jl, &gj) in b.vars.iter().enumerate() {
                m[(gi, gj)] += local[(il, jl)];
            }
        }
    }
    m
}

/// h − Vᵀ(V dy), evaluated block by block without forming the Schur matrix.
fn schur_residual(
    blocks: &[Blk],
    scal: &[Scaling],
    h: &DVector<f64>,
    dy: &DVector<f64>,
    active: &[bool],
) -> DVector<f64> {
    let mut r = h.clone();
    for (b, sc) in blocks.iter().zip(scal) {
        let local = DVector::from_iterator(b.vars.len(), b.vars.iter().map(|&g| dy[g]));
        let back = sc.v.tr_mul(&(&sc.v * local));
        for (l, &g) in b.vars.iter().enumerate() {
            r[g] -= back[l];
        }
    }
    for (i, a) in active.iter().enumerate() {
        if !a {
            r[i] = 0.0;
        }
    }
    r
}

struct Snapshot {
    score: f64,
    y: Vec<f64>,
    s: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    pinf: f64,
    dinf: f64,
    iter: usize,
}

struct Direction {
    dy: DVector<f64>,
    ds: Vec<DMatrix<f64>>,
    ds_scaled: Vec<DMatrix<f64>>,
    dz_scaled: Vec<DMatrix<f64>>,
}

/// Solves the linearized system for the scaled complementarity right-hand side `q`.
fn direction(
    blocks: &[Blk],
    scal: &[Scaling],
    chol: &Cholesky<f64, nalgebra::Dyn>,
    q: &[DMatrix<f64>],
    rp: &[DMatrix<f64>],
    rp_scaled: &[DMatrix<f64>],
    rd: &DVector<f64>,
    active: &[bool],
) -> Direction {
    let p = rd.len();
    let mut h = -rd.clone();
    for (bi, b) in blocks.iter().enumerate() {
        let mut hv = vec![0.0; svec_len(b.size)];
        svec_into(&(&q[bi] - &rp_scaled[bi]), &mut hv);
        let local = scal[bi].v.tr_mul(&DVector::from_vec(hv));
        for (l, &g) in b.vars.iter().enumerate() {
            h[g] += local[l];
        }
    }
    for i in 0..p {
        if !active[i] {
            h[i] = 0.0;
        }
    }
    let mut dy = chol.solve(&h);
    let mut res = schur_residual(blocks, scal, &h, &dy, active);
    let mut res_norm = res.norm();
    for _ in 0..4 {
        let cand = &dy + chol.solve(&res);
        let cand_res = schur_residual(blocks, scal, &h, &cand, active);
        let cand_norm = cand_res.norm();
        if cand_norm >= res_norm {
            break;
        }
        dy = cand;
        res = cand_res;
        res_norm = cand_norm;
    }
    let dyv: Vec<f64> = dy.iter().copied().collect();
    let mut ds = Vec::with_capacity(blocks.len());
    let mut ds_scaled = Vec::with_capacity(blocks.len());
    let mut dz_scaled = Vec::with_capacity(blocks.len());
    for (bi, b) in blocks.iter().enumerate() {
        let mut d = rp[bi].clone();
        b.add_combination(&dyv, &mut d);
        symmetrize(&mut d);
        let local = DVector::from_iterator(b.vars.len(), b.vars.iter().map(|&g| dyv[g]));
        let dt = smat((&scal[bi].v * local).as_slice(), b.size) + &rp_scaled[bi];
        let dzt = &q[bi] - &dt;
        ds.push(d);
        ds_scaled.push(dt);
        dz_scaled.push(dzt);
    }
    Direction {
        dy,
        ds,
        ds_scaled,
        dz_scaled,
    }
}

/// Primal-dual path following with Nesterov–Todd scaling and Mehrotra's
/// predictor-corrector.
pub fn solve(problem: &BlockSdp, opts: &SdpOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let dim = problem.total_dim();
    if dim > opts.max_block_dim {
        return Err(Error::TooLarge(format!(
            "total block dimension {dim} exceeds the cap {}",
            opts.max_block_dim
        )));
    }
    let p = problem.num_vars();
    let b = DVector::from_column_slice(&problem.cost);
    let blocks = build_blocks(problem);

    let mut active = vec![false; p];
    for blk in &blocks {
        for &v in &blk.vars {
            active[v] = true;
        }
    }

    let norm_f0 = blocks.iter().map(|x| frob2(&x.f0)).sum::<f64>().sqrt();
    let norm_b = b.norm();

    let finish = |status, y: Vec<f64>, s: &[DMatrix<f64>], z: &[DMatrix<f64>], pinf, dinf, iterations| {
        let dual_bound = blocks
            .iter()
            .zip(z)
            .map(|(blk, zb)| blk.f0.dot(zb))
            .sum::<f64>();
        let objective = problem.cost.iter().zip(&y).map(|(c, v)| c * v).sum();
        let gap = s.iter().zip(z).map(|(a, b)| a.dot(b)).sum();
        let mut slack: Vec<DMatrix<f64>> = problem
            .blocks
            .iter()
            .map(|pb| DMatrix::zeros(pb.size, pb.size))
            .collect();
        let mut dual = slack.clone();
        for ((blk, sb), zb) in blocks.iter().zip(s).zip(z) {
            let o = blk.offset;
            slack[blk.origin]
                .view_mut((o, o), (blk.size, blk.size))
                .copy_from(sb);
            dual[blk.origin]
                .view_mut((o, o), (blk.size, blk.size))
                .copy_from(zb);
        }
        SdpSolution {
            status,
            y,
            objective,
            dual_bound,
            slack,
            dual,
            primal_infeasibility: pinf,
            dual_infeasibility: dinf,
            gap,
            iterations,
        }
    };

    if let Some(j) = (0..p).find(|&j| !active[j] && b[j] != 0.0) {
        let mut y = vec![0.0; p];
        y[j] = -b[j].signum();
        let s: Vec<DMatrix<f64>> = blocks.iter().map(|x| -&x.f0).collect();
        let z: Vec<DMatrix<f64>> = blocks.iter().map(|x| DMatrix::zeros(x.size, x.size)).collect();
        return Ok(finish(SdpStatus::Unbounded, y, &s, &z, 0.0, 1.0, 0));
    }
    if blocks.is_empty() {
        let y = vec![0.0; p];
        return Ok(finish(SdpStatus::Optimal, y, &[], &[], 0.0, 0.0, 0));
    }

    // Initial point.
    let mut y = DVector::zeros(p);
    let mut s_mats = Vec::with_capacity(blocks.len());
    let mut z_mats = Vec::with_capacity(blocks.len());
    for blk in &blocks {
        let n = blk.size as f64;
        let mut xi = 10f64.max(n.sqrt());
        let mut eta = 10f64.max(n.sqrt()).max(1.0 + blk.f0.norm());
        for (l, &g) in blk.vars.iter().enumerate() {
            let nf = blk.mats[l].iter().map(|e| e.2 * e.2).sum::<f64>().sqrt();
            xi = xi.max(n * (1.0 + b[g].abs()) / (1.0 + nf));
            eta = eta.max(1.0 + nf);
        }
        z_mats.push(DMatrix::identity(blk.size, blk.size) * xi);
        s_mats.push(DMatrix::identity(blk.size, blk.size) * eta);
    }

    let tol = opts.tol;
    let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut stall = 0usize;
    let mut best: Option<Snapshot> = None;
    macro_rules! give_up {
        ($status:expr, $y:expr, $pinf:expr, $dinf:expr, $iter:expr) => {
            return Ok(match best {
                Some(bs) => finish($status, bs.y, &bs.s, &bs.z, bs.pinf, bs.dinf, bs.iter),
                None => finish($status, $y, &s_mats, &z_mats, $pinf, $dinf, $iter),
            })
        };
    }
    for iter in 0..opts.max_iter {
        let yv: Vec<f64> = y.iter().copied().collect();
        let mut rp = Vec::with_capacity(blocks.len());
        for (bi, blk) in blocks.iter().enumerate() {
            let mut r = -&blk.f0 - &s_mats[bi];
            blk.add_combination(&yv, &mut r);
            symmetrize(&mut r);
            rp.push(r);
        }
        let mut az = DVector::zeros(p);
        for (bi, blk) in blocks.iter().enumerate() {
            for (l, &g) in blk.vars.iter().enumerate() {
                az[g] += blk.inner(l, &z_mats[bi]);
            }
        }
        let rd = &b - &az;
        let pobj = b.dot(&y);
        let dobj: f64 = blocks.iter().zip(&z_mats).map(|(blk, z)| blk.f0.dot(z)).sum();
        let gap: f64 = s_mats.iter().zip(&z_mats).map(|(s, z)| s.dot(z)).sum();
        let rp_norm = rp.iter().map(frob2).sum::<f64>().sqrt();
        let pinf = rp_norm / (1.0 + norm_f0);
        let dinf = rd.norm() / (1.0 + norm_b);
        let relgap = gap.max((pobj - dobj).abs()) / (1.0 + pobj.abs() + dobj.abs());

        if pinf <= tol && dinf <= tol && relgap <= tol {
            return Ok(finish(SdpStatus::Optimal, yv, &s_mats, &z_mats, pinf, dinf, iter));
        }
        let trz: f64 = z_mats.iter().map(|z| z.trace()).sum();
        if dobj > 0.0
            && az.norm() <= tol * dobj
            && dobj >= 1e-6 * trz * (1.0 + norm_f0)
            && pinf > tol
        {
            return Ok(finish(SdpStatus::Infeasible, yv, &s_mats, &z_mats, pinf, dinf, iter));
        }
        if pobj < 0.0 && dinf > tol {
            let ray: f64 = blocks
                .iter()
                .zip(&rp)
                .map(|(blk, r)| frob2(&(&blk.f0 + r)))
                .sum::<f64>()
                .sqrt();
            if ray <= tol * (-pobj) && -pobj > 1e6 * (1.0 + norm_f0) {
                return Ok(finish(SdpStatus::Unbounded, yv, &s_mats, &z_mats, pinf, dinf, iter));
            }
        }

        let score = pinf.max(dinf).max(relgap);
        match &best {
            Some(bs) if score >= bs.score => {
                if bs.score <= tol.sqrt() && score > 10.0 * bs.score {
                    give_up!(SdpStatus::Stalled, yv, pinf, dinf, iter);
                }
            }
            _ => {
                best = Some(Snapshot {
                    score,
                    y: yv.clone(),
                    s: s_mats.clone(),
                    z: z_mats.clone(),
                    pinf,
                    dinf,
                    iter,
                })
            }
        }
        let progress = (pinf, dinf, relgap);
        if progress.0 >= 0.999 * last.0 && progress.1 >= 0.999 * last.1 && progress.2 >= 0.999 * last.2 {
            stall += 1;
            if stall >= 5 {
                give_up!(SdpStatus::Stalled, yv, pinf, dinf, iter);
            }
        } else {
            stall = 0;
        }
        last = progress;

        let mut scal = Vec::with_capacity(blocks.len());
        for (bi, blk) in blocks.iter().enumerate() {
            match nt_scaling(&s_mats[bi], &z_mats[bi]) {
                Some((lambda, g)) => {
                    let v = scaled_constraints(blk, &g);
                    scal.push(Scaling { lambda, g, v })
                }
                None if pinf <= tol.sqrt() && dinf <= tol.sqrt() => {
                    give_up!(SdpStatus::Stalled, yv, pinf, dinf, iter);
                }
                None => {
                    return Err(Error::Numerical(format!(
                        "{}: iterate lost positive definiteness at iteration {iter}",
                        block_name(problem, blk)
                    )))
                }
            }
        }
        let rp_scaled: Vec<DMatrix<f64>> = scal
            .iter()
            .zip(&rp)
            .map(|(sc, r)| {
                let mut x = sc.g.transpose() * r * &sc.g;
                symmetrize(&mut x);
                x
            })
            .collect();

        let mut m = schur(&blocks, &scal, p);
        for i in 0..p {
            if !active[i] {
                m[(i, i)] = 1.0;
            }
        }
        let chol = match Cholesky::new(m.clone()) {
            Some(c) => c,
            None => {
                let maxd = (0..p).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
                let mut reg = 1e-14 * maxd.max(1e-300);
                let mut found = None;
                for _ in 0..6 {
                    let mut mr = m.clone();
                    for i in 0..p {
                        mr[(i, i)] += reg;
                    }
                    if let Some(c) = Cholesky::new(mr) {
                        found = Some(c);
                        break;
                    }
                    reg *= 100.0;
                }
                match found {
                    Some(c) => c,
                    None => give_up!(SdpStatus::Stalled, yv, pinf, dinf, iter),
                }
            }
        };

        let n_total = dim as f64;
        let mu = gap / n_total;

        // Predictor.
        let q_aff: Vec<DMatrix<f64>> = scal
            .iter()
            .map(|sc| DMatrix::from_diagonal(&(-&sc.lambda)))
            .collect();
        let aff = direction(&blocks, &scal, &chol, &q_aff, &rp, &rp_scaled, &rd, &active);
        let (mut ap, mut ad) = (1.0f64, 1.0f64);
        for (bi, sc) in scal.iter().enumerate() {
            ap = ap.min(max_step(&sc.lambda, &aff.ds_scaled[bi]));
            ad = ad.min(max_step(&sc.lambda, &aff.dz_scaled[bi]));
        }
        let mut mu_aff = 0.0;
        for (bi, sc) in scal.iter().enumerate() {
            let lam = DMatrix::from_diagonal(&sc.lambda);
            let sa = &lam + &aff.ds_scaled[bi] * ap;
            let za = &lam + &aff.dz_scaled[bi] * ad;
            mu_aff += sa.dot(&za);
        }
        mu_aff /= n_total;
        let sigma = (mu_aff.max(0.0) / mu).powi(3).min(1.0);

        // Corrector.
        let q_cor: Vec<DMatrix<f64>> = scal
            .iter()
            .enumerate()
            .map(|(bi, sc)| {
                let n = sc.lambda.len();
                let prod = &aff.ds_scaled[bi] * &aff.dz_scaled[bi];
                DMatrix::from_fn(n, n, |i, j| {
                    let mut r = -0.5 * (prod[(i, j)] + prod[(j, i)]);
                    if i == j {
                        r += sigma * mu - sc.lambda[i] * sc.lambda[i];
                    }
                    2.0 * r / (sc.lambda[i] + sc.lambda[j])
                })
            })
            .collect();
        let dir = direction(&blocks, &scal, &chol, &q_cor, &rp, &rp_scaled, &rd, &active);
        let (mut ap, mut ad) = (f64::INFINITY, f64::INFINITY);
        for (bi, sc) in scal.iter().enumerate() {
            ap = ap.min(max_step(&sc.lambda, &dir.ds_scaled[bi]));
            ad = ad.min(max_step(&sc.lambda, &dir.dz_scaled[bi]));
        }
        let ap = (opts.step_fraction * ap).min(1.0);
        let ad = (opts.step_fraction * ad).min(1.0);

        y += &dir.dy * ap;
        for (bi, sc) in scal.iter().enumerate() {
            s_mats[bi] += &dir.ds[bi] * ap;
            let mut dz = &sc.g * &dir.dz_scaled[bi] * sc.g.transpose();
            symmetrize(&mut dz);
            z_mats[bi] += dz * ad;
            symmetrize(&mut s_mats[bi]);
            if blocks[bi].structured {
                project_structured(&mut s_mats[bi]);
                project_structured(&mut z_mats[bi]);
            }
        }
    }
    let yv: Vec<f64> = y.iter().copied().collect();
    let (pinf, dinf) = residuals(&blocks, &b, &yv, &s_mats, &z_mats, norm_f0, norm_b);
    give_up!(SdpStatus::MaxIterations, yv, pinf, dinf, opts.max_iter)
}

fn residuals(
    blocks: &[Blk],
    b: &DVector<f64>,
    y: &[f64],
    s: &[DMatrix<f64>],
    z: &[DMatrix<f64>],
    norm_f0: f64,
    norm_b: f64,
) -> (f64, f64) {
    let mut rp2 = 0.0;
    let mut az = DVector::zeros(b.len());
    for (bi, blk) in blocks.iter().enumerate() {
        let mut r = -&blk.f0 - &s[bi];
        blk.add_combination(y, &mut r);
        rp2 += frob2(&r);
        for (l, &g) in blk.vars.iter().enumerate() {
            az[g] += blk.inner(l, &z[bi]);
        }
    }
    (rp2.sqrt() / (1.0 + norm_f0), (b - az).norm() / (1.0 + norm_b))
}
