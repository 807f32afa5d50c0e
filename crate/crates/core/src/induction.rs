//! Successive first-return maps on the nested intervals
//! `I_0 = [0, 1) ⊇ I_1 ⊇ I_2 ⊇ …`, where `I_{k+1}` is the first continuity
//! piece of the map induced on `I_k`, together with the visit matrices
//! `B_k` and empirical versions of the associated growth constants.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::iet::Iet;
use crate::numeric::ExactScalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InductionError {
    #[error("induction exceeded {0} piece iterations")]
    CapExceeded(u64),
    #[error("induced map at stage {stage} has {got} pieces instead of {expected}")]
    PieceCount {
        stage: usize,
        expected: usize,
        got: usize,
    },
    #[error("stage {0} is not available")]
    MissingStage(usize),
    #[error("piece {j} out of range for {b} pieces")]
    BadPiece { j: usize, b: usize },
    #[error("need k < l, got k = {k}, l = {l}")]
    BadOrder { k: usize, l: usize },
    #[error("need at least {needed} matrices, got {got}")]
    InsufficientDepth { needed: usize, got: usize },
    #[error("matrix entries overflow u64")]
    Overflow,
}

/// A square matrix of visit counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Matrix {
    pub size: usize,
    /// Row-major.
    pub entries: Vec<u64>,
}

impl Matrix {
    pub fn identity(size: usize) -> Self {
        let mut entries = vec![0; size * size];
        for i in 0..size {
            entries[i * size + i] = 1;
        }
        Matrix { size, entries }
    }

    pub fn zeros(size: usize) -> Self {
        Matrix {
            size,
            entries: vec![0; size * size],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.size + j]
    }

    fn set(&mut self, i: usize, j: usize, v: u64) {
        self.entries[i * self.size + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.size).map(|i| self.get(i, j)).collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        (0..self.size).map(|j| self.column(j).iter().sum()).collect()
    }

    /// Operator 1-norm: the largest column sum.
    pub fn norm1(&self) -> u64 {
        self.column_sums().into_iter().max().unwrap_or(0)
    }

    pub fn is_positive(&self) -> bool {
        self.entries.iter().all(|&e| e > 0)
    }

    pub fn checked_mul(&self, other: &Matrix) -> Option<Matrix> {
        let n = self.size;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc: u64 = 0;
                for m in 0..n {
                    acc = acc.checked_add(self.get(i, m).checked_mul(other.get(m, j))?)?;
                }
                out.set(i, j, acc);
            }
        }
        Some(out)
    }
}

/// The map induced on `I_k = [0, |I_k|)` as an exchange of `b` pieces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InductionStage {
    pub k: usize,
    /// `|I_k|`.
    pub length: ExactScalar,
    /// Left endpoints of `I_{k,1}, …, I_{k,b}`.
    pub starts: Vec<ExactScalar>,
    pub lengths: Vec<ExactScalar>,
    /// Translation applied on each piece by the induced map.
    pub offsets: Vec<ExactScalar>,
    /// Zero-based rank of each piece's image.
    pub permutation: Vec<usize>,
    /// First return time of each piece to `I_k` under the base map.
    pub base_return_times: Vec<u64>,
}

impl InductionStage {
    pub fn base(iet: &Iet) -> Self {
        InductionStage {
            k: 0,
            length: ExactScalar::one(),
            starts: iet.starts().to_vec(),
            lengths: iet.lengths().to_vec(),
            offsets: iet.offsets().to_vec(),
            permutation: (0..iet.interval_count())
                .map(|i| iet.permutation().image(i))
                .collect(),
            base_return_times: vec![1; iet.interval_count()],
        }
    }

    pub fn piece_count(&self) -> usize {
        self.starts.len()
    }

    /// Zero-based piece containing `x ∈ I_k`.
    pub fn piece_of(&self, x: &ExactScalar) -> usize {
        self.starts.partition_point(|s| s <= x) - 1
    }

    pub fn contains(&self, x: &ExactScalar) -> bool {
        !x.signum().is_lt() && *x < self.length
    }

    pub fn apply(&self, x: &ExactScalar) -> ExactScalar {
        x + &self.offsets[self.piece_of(x)]
    }

    pub fn midpoint(&self, j: usize) -> ExactScalar {
        &self.starts[j] + &self.lengths[j].halve_times(1)
    }
}

/// A stage together with the data produced when inducing from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub next: InductionStage,
    /// `B_k(i, j)`: visits of the orbit of `I_{k+1,j}` to `I_{k,i}`.
    pub matrix: Matrix,
    /// `r_{k,k+1}(j)`.
    pub return_times: Vec<u64>,
}

struct Segment {
    origin: ExactScalar,
    len: ExactScalar,
    cur: ExactScalar,
    visits: Vec<u64>,
    steps: u64,
}

/// Induces the stage-`k` map on its first piece.
pub fn induce_once(stage: &InductionStage, cap: u64) -> Result<Transition, InductionError> {
    let b = stage.piece_count();
    let target = stage.lengths[0].clone();
    let mut work = vec![Segment {
        origin: ExactScalar::zero(),
        len: target.clone(),
        cur: ExactScalar::zero(),
        visits: vec![0; b],
        steps: 0,
    }];
    let mut done: Vec<Segment> = Vec::new();
    let mut budget = cap;
    while let Some(mut seg) = work.pop() {
        if budget == 0 {
            return Err(InductionError::CapExceeded(cap));
        }
        budget -= 1;
        let i = stage.piece_of(&seg.cur);
        let piece_end = &stage.starts[i] + &stage.lengths[i];
        let end = &seg.cur + &seg.len;
        if end > piece_end {
            let head = &piece_end - &seg.cur;
            work.push(Segment {
                origin: &seg.origin + &head,
                len: &seg.len - &head,
                cur: piece_end,
                visits: seg.visits.clone(),
                steps: seg.steps,
            });
            seg.len = head;
        }
        seg.visits[i] += 1;
        seg.steps += 1;
        seg.cur = &seg.cur + &stage.offsets[i];
        if seg.cur >= target {
            work.push(seg);
            continue;
        }
        let end = &seg.cur + &seg.len;
        if end > target {
            let head = &target - &seg.cur;
            work.push(Segment {
                origin: &seg.origin + &head,
                len: &seg.len - &head,
                cur: target.clone(),
                visits: seg.visits.clone(),
                steps: seg.steps,
            });
            seg.len = head;
        }
        done.push(seg);
    }

    done.sort_by(|a, b| a.origin.cmp(&b.origin));
    let mut merged: Vec<Segment> = Vec::with_capacity(b);
    for seg in done {
        if let Some(last) = merged.last_mut() {
            let contiguous = &last.origin + &last.len == seg.origin;
            if contiguous && &last.cur - &last.origin == &seg.cur - &seg.origin {
                last.len = &last.len + &seg.len;
                continue;
            }
        }
        merged.push(seg);
    }
    if merged.len() != b {
        return Err(InductionError::PieceCount {
            stage: stage.k + 1,
            expected: b,
            got: merged.len(),
        });
    }

    let mut matrix = Matrix::zeros(b);
    let mut return_times = Vec::with_capacity(b);
    let mut base_return_times = Vec::with_capacity(b);
    for (j, seg) in merged.iter().enumerate() {
        let mut base = 0u64;
        for (i, &v) in seg.visits.iter().enumerate() {
            matrix.set(i, j, v);
            base = v
                .checked_mul(stage.base_return_times[i])
                .and_then(|x| x.checked_add(base))
                .ok_or(InductionError::Overflow)?;
        }
        return_times.push(seg.steps);
        base_return_times.push(base);
    }
    let mut by_image: Vec<usize> = (0..b).collect();
    by_image.sort_by(|&x, &y| merged[x].cur.cmp(&merged[y].cur));
    let mut permutation = vec![0; b];
    for (rank, &j) in by_image.iter().enumerate() {
        permutation[j] = rank;
    }
    let next = InductionStage {
        k: stage.k + 1,
        length: target,
        starts: merged.iter().map(|s| s.origin.clone()).collect(),
        lengths: merged.iter().map(|s| s.len.clone()).collect(),
        offsets: merged.iter().map(|s| &s.cur - &s.origin).collect(),
        permutation,
        base_return_times,
    };
    Ok(Transition {
        next,
        matrix,
        return_times,
    })
}

/// Stages `0..=depth` and the `depth` matrices `B_0, …, B_{depth−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Induction {
    pub stages: Vec<InductionStage>,
    pub matrices: Vec<Matrix>,
    /// `return_times[k][j] = r_{k,k+1}(j)`.
    pub return_times: Vec<Vec<u64>>,
}

impl Induction {
    pub fn depth(&self) -> usize {
        self.matrices.len()
    }

    pub fn piece_count(&self) -> usize {
        self.stages[0].piece_count()
    }
}

/// Runs `depth` induction steps; `cap` bounds the work of each step.
pub fn run_induction(iet: &Iet, depth: usize, cap: u64) -> Result<Induction, InductionError> {
    let mut stages = vec![InductionStage::base(iet)];
    let mut matrices = Vec::with_capacity(depth);
    let mut return_times = Vec::with_capacity(depth);
    for _ in 0..depth {
        let t = induce_once(stages.last().expect("nonempty"), cap)?;
        stages.push(t.next);
        matrices.push(t.matrix);
        return_times.push(t.return_times);
    }
    Ok(Induction {
        stages,
        matrices,
        return_times,
    })
}

/// `B_{k,r} = B_k B_{k+1} ⋯ B_{k+r}`.
pub fn matrix_product(ind: &Induction, k: usize, r: usize) -> Result<Matrix, InductionError> {
    if k + r >= ind.matrices.len() {
        return Err(InductionError::MissingStage(k + r));
    }
    let mut acc = ind.matrices[k].clone();
    for m in &ind.matrices[k + 1..=k + r] {
        acc = acc.checked_mul(m).ok_or(InductionError::Overflow)?;
    }
    Ok(acc)
}

/// Brute-force `r_{k,l}(j)`: follows the base map from the midpoint of
/// `I_{l,j}` and counts visits to `I_k` until the orbit re-enters `I_l`.
pub fn return_time_oracle(
    iet: &Iet,
    ind: &Induction,
    k: usize,
    l: usize,
    j: usize,
    cap: u64,
) -> Result<u64, InductionError> {
    if k >= l {
        return Err(InductionError::BadOrder { k, l });
    }
    let stage = ind.stages.get(l).ok_or(InductionError::MissingStage(l))?;
    let outer = &ind.stages[k].length;
    if j >= stage.piece_count() {
        return Err(InductionError::BadPiece {
            j,
            b: stage.piece_count(),
        });
    }
    let mut x = stage.midpoint(j);
    let mut visits = 0;
    for _ in 0..cap {
        x = iet.apply(&x);
        if x < *outer {
            visits += 1;
            if x < stage.length {
                return Ok(visits);
            }
        }
    }
    Err(InductionError::CapExceeded(cap))
}

/// Largest pairwise angle between the columns of a product, with the
/// sample coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleSample {
    pub k: usize,
    pub r: usize,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactsReport {
    pub depth: usize,
    /// Largest ratio between return times of two pieces over all `k < l`.
    pub d1: f64,
    /// Largest ratio between two piece lengths of one stage.
    pub d2: f64,
    /// Smallest `|I_k| / |I_{k,j}|`.
    pub rho1: f64,
    /// Largest `|I_k| / |I_{k,j}|`.
    pub rho2: f64,
    /// Largest `‖B_k‖_1`.
    pub d3: u64,
    /// Least `r` with every available `B_{k,r}` positive.
    pub positivity_lag: Option<usize>,
    pub angles: Vec<AngleSample>,
    /// Geometric decay rate of the largest angle in `r`.
    pub gamma: f64,
    pub d4: f64,
    /// Every column sum of every product matched the composed return times.
    pub column_sums_exact: bool,
}

fn ratio(a: &ExactScalar, b: &ExactScalar) -> f64 {
    (a / b).to_f64()
}

/// Angle between integer vectors, from the exact Gram determinant.
pub fn angle(v: &[u64], w: &[u64]) -> f64 {
    let dot = |a: &[u64], b: &[u64]| -> BigInt {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| BigInt::from(x) * BigInt::from(y))
            .sum()
    };
    let vv = dot(v, v);
    let ww = dot(w, w);
    let vw = dot(v, w);
    let denom = &vv * &ww;
    let gram = &denom - &vw * &vw;
    if denom == BigInt::from(0) {
        return 0.0;
    }
    let sin2 = BigRational::new(gram, denom).to_f64().unwrap_or(0.0).clamp(0.0, 1.0);
    let s = sin2.sqrt().asin();
    if vw < BigInt::from(0) {
        std::f64::consts::PI - s
    } else {
        s
    }
}

fn max_column_angle(m: &Matrix) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..m.size {
        for l in j + 1..m.size {
            best = best.max(angle(&m.column(j), &m.column(l)));
        }
    }
    best
}

/// Least-squares slope of `ln θ` against `r`, returned as `exp(slope)`,
/// and the smallest `D_4` with `θ ≤ D_4 γ^r` on every sample.
fn fit_rate(samples: &[AngleSample]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.theta > 0.0)
        .map(|s| (s.r as f64, s.theta.ln()))
        .collect();
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let gamma = (sxy / sxx).exp();
    let d4 = samples
        .iter()
        .map(|s| s.theta / gamma.powi(s.r as i32))
        .fold(0.0, f64::max);
    (gamma, d4)
}

pub fn check_facts(ind: &Induction) -> Result<FactsReport, InductionError> {
    let depth = ind.depth();
    if depth < 3 {
        return Err(InductionError::InsufficientDepth {
            needed: 3,
            got: depth,
        });
    }
    let b = ind.piece_count();

    let mut d2: f64 = 1.0;
    let mut rho1 = f64::INFINITY;
    let mut rho2: f64 = 0.0;
    for st in &ind.stages {
        let lo = st.lengths.iter().min().expect("nonempty");
        let hi = st.lengths.iter().max().expect("nonempty");
        d2 = d2.max(ratio(hi, lo));
        rho1 = rho1.min(ratio(&st.length, hi));
        rho2 = rho2.max(ratio(&st.length, lo));
    }
    let d3 = ind.matrices.iter().map(Matrix::norm1).max().unwrap_or(0);

    let mut d1: f64 = 1.0;
    let mut column_sums_exact = true;
    let mut positivity_lag: Option<usize> = None;
    let mut per_r: Vec<Vec<f64>> = vec![Vec::new(); depth];
    let mut angles = Vec::new();
    for k in 0..depth {
        let mut prod = ind.matrices[k].clone();
        for (r, thetas) in per_r.iter_mut().enumerate().take(depth - k) {
            if r > 0 {
                prod = prod
                    .checked_mul(&ind.matrices[k + r])
                    .ok_or(InductionError::Overflow)?;
            }
            let sums = prod.column_sums();
            let lo = *sums.iter().min().expect("nonempty");
            let hi = *sums.iter().max().expect("nonempty");
            d1 = d1.max(hi as f64 / lo as f64);
            // Σ_i B_{k,r}(i,j) r_{0,k}(i) must equal r_{0,k+r+1}(j)
            for j in 0..b {
                let composed: u64 = (0..b)
                    .map(|i| prod.get(i, j) * ind.stages[k].base_return_times[i])
                    .sum();
                if composed != ind.stages[k + r + 1].base_return_times[j] {
                    column_sums_exact = false;
                }
            }
            if r == 0 && sums != ind.return_times[k] {
                column_sums_exact = false;
            }
            let theta = max_column_angle(&prod);
            thetas.push(theta);
            angles.push(AngleSample { k, r, theta });
        }
    }
    for r in 0..depth {
        let all_positive = (0..depth - r).all(|k| {
            matrix_product(ind, k, r)
                .map(|m| m.is_positive())
                .unwrap_or(false)
        });
        if all_positive {
            positivity_lag = Some(r);
            break;
        }
    }

    let lag = positivity_lag.unwrap_or(0);
    let envelope: Vec<AngleSample> = per_r
        .iter()
        .enumerate()
        .skip(lag)
        .filter(|(_, v)| !v.is_empty())
        .map(|(r, v)| AngleSample {
            k: 0,
            r,
            theta: v.iter().cloned().fold(0.0, f64::max),
        })
        .collect();
    let (gamma, d4) = fit_rate(&envelope);
    Ok(FactsReport {
        depth,
        d1,
        d2,
        rho1,
        rho2,
        d3,
        positivity_lag,
        angles,
        gamma,
        d4,
        column_sums_exact,
    })
}
