//! Friendship between a point `(x, t)` and a step function `f`.
//!
//! At scale `k`, with `w = δ/2^k`, the right tower over `x` is the family
//! `T^i [x, x + 2w]` for `0 ≤ i < 2^k`; the left tower uses `[x − 2w, x]`.
//! For each discontinuity `p` of `f` the five conditions are:
//!
//! 1. every `T^i` (`i < 2^k`) is continuous on the base interval;
//! 2. the tower intervals are pairwise disjoint;
//! 3. `p ∈ T^ℓ [x, x + w]` for some `ℓ < 2^{k−1}`;
//! 4. no other discontinuity of `f` meets the tower;
//! 5. the orbit spends at least a `β` fraction of its window visits in the
//!    second half of the time range.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::iet::{Iet, RecurrenceConstants};
use crate::numeric::{ExactScalar, NumericError};
use crate::skew::{skew_step, SkewState, Window};
use crate::step::{BoundedFamily, StepError, StepFunction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FriendError {
    #[error("scale k must be at least 1")]
    ZeroScale,
    #[error("scale k = {0} is too large for an explicit orbit sweep")]
    ScaleTooLarge(u32),
    #[error("point {0} is outside [0, 1)")]
    OutOfRange(ExactScalar),
    #[error("delta must be positive")]
    BadDelta,
    #[error("the {0:?} tower fails continuity or disjointness at scale {1}")]
    TowerFails(Side, u32),
    #[error("no side passes continuity and disjointness at scale {0}")]
    NoSide(u32),
    #[error("discontinuity index {index} out of range 1..={d}")]
    BadIndex { index: usize, d: usize },
    #[error("scale {k} is too coarse: (c1 + delta)/2^(k-1) = {lhs} is not below xi/4 = {rhs}")]
    ScaleTooCoarse {
        k: u32,
        lhs: ExactScalar,
        rhs: ExactScalar,
    },
    #[error("cannot move discontinuity {index} out of the tower inside (0, 1)")]
    NoRoom { index: usize },
    #[error("constructed function fails the check at scale {0}")]
    ConstructionFailed(u32),
    #[error("z = {z} is not within 2·delta/2^k of x = {x}")]
    ShadowTooFar { x: ExactScalar, z: ExactScalar },
    #[error("orbits of x and z separate at step {0}")]
    IsometryBroken(u64),
    #[error("a second discontinuity of f separates the orbits at step {0}")]
    SecondStraddle(u64),
    #[error("nonpositive constant in {0}")]
    NonPositiveConstant(&'static str),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Maximum scale swept explicitly.
pub const MAX_SCALE: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    Right,
    Left,
}

/// The orbit `u_m = T^m x`, `m < 2^{k_max}`, with the per-scale continuity
/// and disjointness margins computed in one sweep.
#[derive(Debug, Clone)]
pub struct Tower {
    x: ExactScalar,
    delta: ExactScalar,
    k_max: u32,
    points: Vec<ExactScalar>,
    sorted: Vec<(ExactScalar, usize)>,
    /// Indexed by `k`: min over `m ≤ 2^k − 2` of the distance from `u_m` to
    /// the next discontinuity (or 1) strictly above it.
    room_right: Vec<ExactScalar>,
    /// Same, distance down to the last interval start at or below `u_m`.
    room_left: Vec<ExactScalar>,
    /// Smallest gap among `u_0, …, u_{2^k − 1}`.
    min_gap: Vec<ExactScalar>,
}

impl Tower {
    pub fn new(iet: &Iet, x: &ExactScalar, delta: &ExactScalar, k_max: u32) -> Result<Self, FriendError> {
        if k_max == 0 {
            return Err(FriendError::ZeroScale);
        }
        if k_max > MAX_SCALE {
            return Err(FriendError::ScaleTooLarge(k_max));
        }
        if x.signum().is_lt() || *x >= ExactScalar::one() {
            return Err(FriendError::OutOfRange(x.clone()));
        }
        if delta.signum().is_le() {
            return Err(FriendError::BadDelta);
        }
        let n = 1usize << k_max;
        let starts = iet.starts();
        let disc = iet.discontinuities();
        let one = ExactScalar::one();
        let mut points = Vec::with_capacity(n);
        let mut set: BTreeSet<ExactScalar> = BTreeSet::new();
        let mut room_right = vec![ExactScalar::zero(); k_max as usize + 1];
        let mut room_left = room_right.clone();
        let mut min_gap = room_right.clone();
        let mut run_right: Option<ExactScalar> = None;
        let mut run_left: Option<ExactScalar> = None;
        let mut run_gap: Option<ExactScalar> = None;
        let mut u = x.clone();
        for m in 0..n {
            let above = disc.partition_point(|b| b <= &u);
            let right = disc.get(above).unwrap_or(&one) - &u;
            let left = &u - &starts[starts.partition_point(|b| b <= &u) - 1];
            run_right = Some(keep_min(run_right, right));
            run_left = Some(keep_min(run_left, left));
            if let Some(pred) = set.range(..&u).next_back() {
                run_gap = Some(keep_min(run_gap, &u - pred));
            }
            if let Some(succ) = set.range(&u..).next() {
                run_gap = Some(keep_min(run_gap, succ - &u));
            }
            set.insert(u.clone());
            // m = 2^k − 2 closes the continuity window of scale k
            if (m + 2).is_power_of_two() {
                let k = (m + 2).trailing_zeros() as usize;
                if k <= k_max as usize {
                    room_right[k] = run_right.clone().expect("set");
                    room_left[k] = run_left.clone().expect("set");
                }
            }
            if m >= 1 && (m + 1).is_power_of_two() {
                let k = (m + 1).trailing_zeros() as usize;
                min_gap[k] = run_gap.clone().unwrap_or_else(ExactScalar::zero);
            }
            let next = iet.apply(&u);
            points.push(std::mem::replace(&mut u, next));
        }
        let mut sorted: Vec<(ExactScalar, usize)> =
            points.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        sorted.sort();
        Ok(Tower {
            x: x.clone(),
            delta: delta.clone(),
            k_max,
            points,
            sorted,
            room_right,
            room_left,
            min_gap,
        })
    }

    pub fn x(&self) -> &ExactScalar {
        &self.x
    }

    pub fn delta(&self) -> &ExactScalar {
        &self.delta
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    /// `u_m = T^m x`.
    pub fn point(&self, m: usize) -> &ExactScalar {
        &self.points[m]
    }

    /// `w = δ/2^k`.
    pub fn width(&self, k: u32) -> ExactScalar {
        self.delta.halve_times(k)
    }

    fn two_w(&self, k: u32) -> ExactScalar {
        self.delta.halve_times(k - 1)
    }

    pub fn continuous(&self, k: u32, side: Side) -> bool {
        let two_w = self.two_w(k);
        match side {
            Side::Right => self.room_right[k as usize] > two_w,
            Side::Left => self.room_left[k as usize] >= two_w,
        }
    }

    /// Disjointness of the closed tower intervals; the same on both sides.
    pub fn disjoint(&self, k: u32) -> bool {
        self.min_gap[k as usize] > self.two_w(k)
    }

    pub fn passes_f1_f2(&self, k: u32, side: Side) -> bool {
        self.continuous(k, side) && self.disjoint(k)
    }

    /// Indices `i < limit` with `u_i ∈ [lo, hi]`.
    fn indices_in(&self, lo: &ExactScalar, hi: &ExactScalar, limit: usize) -> Vec<usize> {
        let start = self.sorted.partition_point(|(p, _)| p < lo);
        self.sorted[start..]
            .iter()
            .take_while(|(p, _)| p <= hi)
            .filter(|(_, i)| *i < limit)
            .map(|(_, i)| *i)
            .collect()
    }

    /// Smallest `ℓ < 2^{k−1}` with `p` in the `ℓ`-th half-width interval.
    pub fn f3_witness(&self, p: &ExactScalar, k: u32, side: Side) -> Option<usize> {
        let w = self.width(k);
        let (lo, hi) = match side {
            Side::Right => (p - &w, p.clone()),
            Side::Left => (p.clone(), p + &w),
        };
        self.indices_in(&lo, &hi, 1 << (k - 1)).into_iter().min()
    }

    /// Tower levels `i < 2^k` whose interval contains `q`.
    pub fn tower_hits(&self, q: &ExactScalar, k: u32, side: Side) -> Vec<usize> {
        let two_w = self.two_w(k);
        let (lo, hi) = match side {
            Side::Right => (q - &two_w, q.clone()),
            Side::Left => (q.clone(), q + &two_w),
        };
        let mut hits = self.indices_in(&lo, &hi, 1 << k);
        hits.sort_unstable();
        hits
    }
}

fn keep_min(cur: Option<ExactScalar>, v: ExactScalar) -> ExactScalar {
    match cur {
        Some(c) if c <= v => c,
        _ => v,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SidePass {
    pub right: bool,
    pub left: bool,
}

impl SidePass {
    /// The right side wins ties.
    pub fn preferred(&self) -> Option<Side> {
        if self.right {
            Some(Side::Right)
        } else if self.left {
            Some(Side::Left)
        } else {
            None
        }
    }
}

pub fn check_f1_f2(iet: &Iet, x: &ExactScalar, k: u32, delta: &ExactScalar) -> Result<SidePass, FriendError> {
    let tower = Tower::new(iet, x, delta, k)?;
    Ok(SidePass {
        right: tower.passes_f1_f2(k, Side::Right),
        left: tower.passes_f1_f2(k, Side::Left),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum F34Outcome {
    Pass { witness: usize },
    /// No early tower interval contains the discontinuity.
    NoWitness,
    /// Other discontinuities (one-based index, location) meet the tower.
    Crowded { others: Vec<(usize, ExactScalar)> },
}

impl F34Outcome {
    pub fn witness(&self) -> Option<usize> {
        match self {
            F34Outcome::Pass { witness } => Some(*witness),
            _ => None,
        }
    }
}

/// Per discontinuity of `f`, in order.
pub fn f3_f4_on(tower: &Tower, f: &StepFunction, k: u32, side: Side) -> Vec<F34Outcome> {
    let locs = f.locations();
    let crowding: Vec<bool> = locs
        .iter()
        .map(|q| !tower.tower_hits(q, k, side).is_empty())
        .collect();
    locs.iter()
        .enumerate()
        .map(|(i, p)| {
            let others: Vec<(usize, ExactScalar)> = locs
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i && crowding[*j])
                .map(|(j, q)| (j + 1, q.clone()))
                .collect();
            match tower.f3_witness(p, k, side) {
                None => F34Outcome::NoWitness,
                Some(_) if !others.is_empty() => F34Outcome::Crowded { others },
                Some(witness) => F34Outcome::Pass { witness },
            }
        })
        .collect()
}

pub fn check_f3_f4(
    iet: &Iet,
    f: &StepFunction,
    x: &ExactScalar,
    k: u32,
    delta: &ExactScalar,
    side: Side,
) -> Result<Vec<F34Outcome>, FriendError> {
    let tower = Tower::new(iet, x, delta, k)?;
    if !tower.passes_f1_f2(k, side) {
        return Err(FriendError::TowerFails(side, k));
    }
    Ok(f3_f4_on(&tower, f, k, side))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct F5Outcome {
    pub k: u32,
    /// Visits at times `2^{k−1} ≤ n < 2^k`.
    pub lhs: u64,
    /// Visits at times `0 ≤ n < 2^k`.
    pub rhs: u64,
    pub pass: bool,
}

/// Visit counts `#{n < 2^j : t + S_n ∈ [−B, B]}` for `j = 0, …, k_max`.
pub fn visit_profile(
    iet: &Iet,
    f: &StepFunction,
    start: &SkewState,
    window: &Window,
    k_max: u32,
) -> Result<Vec<u64>, FriendError> {
    if k_max > MAX_SCALE {
        return Err(FriendError::ScaleTooLarge(k_max));
    }
    let n = 1u64 << k_max;
    let mut out = Vec::with_capacity(k_max as usize + 1);
    let mut s = start.clone();
    let mut count = 0;
    for m in 0..n {
        if window.contains(&s) {
            count += 1;
        }
        if (m + 1).is_power_of_two() {
            out.push(count);
        }
        s = skew_step(iet, f, &s);
    }
    Ok(out)
}

fn f5_from_profile(profile: &[u64], k: u32, beta: &ExactScalar) -> F5Outcome {
    let rhs = profile[k as usize];
    let lhs = rhs - profile[k as usize - 1];
    let pass = ExactScalar::from_integer(lhs as i64) >= beta * &ExactScalar::from_integer(rhs as i64);
    F5Outcome { k, lhs, rhs, pass }
}

pub fn check_f5(
    iet: &Iet,
    f: &StepFunction,
    start: &SkewState,
    window: &Window,
    k: u32,
    beta: &ExactScalar,
) -> Result<F5Outcome, FriendError> {
    if k == 0 {
        return Err(FriendError::ZeroScale);
    }
    let profile = visit_profile(iet, f, start, window, k)?;
    Ok(f5_from_profile(&profile, k, beta))
}

/// The constants `A` and `C` governing how far perturbations may move a
/// function while keeping the conditions intact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerturbationConstants {
    pub d: usize,
    pub bound: ExactScalar,
    pub xi: ExactScalar,
    pub c1: ExactScalar,
    pub c2: ExactScalar,
    pub delta: ExactScalar,
    pub a: ExactScalar,
    pub c: ExactScalar,
}

impl PerturbationConstants {
    /// `max{1, 8D/(3ξ)}`.
    pub fn value_factor(&self) -> ExactScalar {
        value_factor(&self.bound, &self.xi)
    }

    /// `(2c_1 + 3δ)/2^k · (d+1) · max{1, 8D/(3ξ)}`.
    pub fn nudge_budget(&self, k: u32) -> ExactScalar {
        let lead = &self.c1 * &ExactScalar::from_integer(2) + &self.delta * &ExactScalar::from_integer(3);
        lead.halve_times(k) * ExactScalar::from_integer(self.d as i64 + 1) * self.value_factor()
    }

    /// `(c_1 + δ)/2^{k−1} < ξ/4`.
    pub fn scale_is_fine(&self, k: u32) -> bool {
        (&self.c1 + &self.delta).halve_times(k - 1) < self.xi.halve_times(2)
    }
}

fn value_factor(bound: &ExactScalar, xi: &ExactScalar) -> ExactScalar {
    let v = bound * &ExactScalar::from_integer(8) / (xi * &ExactScalar::from_integer(3));
    v.max_of(&ExactScalar::one()).clone()
}

pub fn perturbation_constants(
    rc: &RecurrenceConstants,
    family: &BoundedFamily,
    xi: &ExactScalar,
) -> Result<PerturbationConstants, FriendError> {
    for (name, v) in [("c1", &rc.c1_est), ("c2", &rc.c2_est), ("xi", xi), ("D", &family.bound)] {
        if v.signum().is_le() {
            return Err(FriendError::NonPositiveConstant(name));
        }
    }
    if family.d == 0 {
        return Err(FriendError::NonPositiveConstant("d"));
    }
    let (c1, c2, delta) = (&rc.c1_est, &rc.c2_est, &rc.delta);
    let int = |n: i64| ExactScalar::from_integer(n);
    let d = int(family.d as i64);
    let big_d = &family.bound;
    let ratio = (delta * &int(10) + c1 * &int(6)).try_div(&(delta * &int(3) + c1 * &int(3)))?;
    let a = int(2) * (&d + &int(1)) * ratio * value_factor(big_d, xi);
    let c = int(6) * &d * big_d * &a * c1 / c2 + int(2) * &d * big_d + int(4) * &d * &a * c1;
    Ok(PerturbationConstants {
        d: family.d,
        bound: big_d.clone(),
        xi: xi.clone(),
        c1: c1.clone(),
        c2: c2.clone(),
        delta: delta.clone(),
        a,
        c,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Perturbation {
    pub g: StepFunction,
    pub side: Side,
    pub k: u32,
    /// Tower level whose half-width interval holds the placed discontinuity.
    pub witness: usize,
    /// `(zero-based discontinuity, zeta)` in the order applied.
    pub moves: Vec<(usize, ExactScalar)>,
    pub distance: ExactScalar,
    pub budget: ExactScalar,
}

/// Open intervals `(lo, hi)` covering the tower widened by `w/3` per side.
fn widened_components(tower: &Tower, k: u32, side: Side) -> Vec<(ExactScalar, ExactScalar)> {
    let w = tower.width(k);
    let third = &w / &ExactScalar::from_integer(3);
    let two_w = &w * &ExactScalar::from_integer(2);
    let (below, above) = match side {
        Side::Right => (third.clone(), &two_w + &third),
        Side::Left => (&two_w + &third, third.clone()),
    };
    let limit = 1usize << k;
    let mut comps: Vec<(ExactScalar, ExactScalar)> = Vec::new();
    for (u, _) in tower.sorted.iter().filter(|(_, i)| *i < limit) {
        let lo = u - &below;
        let hi = u + &above;
        match comps.last_mut() {
            Some(last) if lo < last.1 => {
                if hi > last.1 {
                    last.1 = hi;
                }
            }
            _ => comps.push((lo, hi)),
        }
    }
    comps
}

/// Builds `g` near `f` whose `i`-th discontinuity (zero-based) sits in the
/// middle third of an early half-width tower interval, with every other
/// discontinuity at least `w/3` away from the tower.
pub fn construct_good_perturbation(
    iet: &Iet,
    f: &StepFunction,
    x: &ExactScalar,
    i: usize,
    k: u32,
    constants: &PerturbationConstants,
) -> Result<Perturbation, FriendError> {
    let d = f.discontinuity_count();
    if i >= d {
        return Err(FriendError::BadIndex { index: i + 1, d });
    }
    if k == 0 {
        return Err(FriendError::ZeroScale);
    }
    if !constants.scale_is_fine(k) {
        return Err(FriendError::ScaleTooCoarse {
            k,
            lhs: (&constants.c1 + &constants.delta).halve_times(k - 1),
            rhs: f.xi().halve_times(2),
        });
    }
    let tower = Tower::new(iet, x, &constants.delta, k)?;
    let side = SidePass {
        right: tower.passes_f1_f2(k, Side::Right),
        left: tower.passes_f1_f2(k, Side::Left),
    }
    .preferred()
    .ok_or(FriendError::NoSide(k))?;

    let w = tower.width(k);
    let three = ExactScalar::from_integer(3);
    let third = &w / &three;
    let half = w.halve_times(1);
    let early = 1usize << (k - 1);
    // u_ℓ ↦ the middle third [c − w/6, c + w/6] around the centre c
    let centre = |u: &ExactScalar| match side {
        Side::Right => u + &half,
        Side::Left => u - &half,
    };
    let sixth = third.halve_times(1);
    let p = &f.locations()[i];
    let settled = (0..early).find(|&l| (p - &centre(tower.point(l))).abs() <= sixth);
    let (witness, p_target) = match settled {
        Some(l) => (l, p.clone()),
        None => (0..early)
            .map(|l| (l, centre(tower.point(l))))
            .min_by(|a, b| (p - &a.1).abs().cmp(&(p - &b.1).abs()))
            .expect("at least one early level"),
    };

    let comps = widened_components(&tower, k, side);
    let zero = ExactScalar::zero();
    let one = ExactScalar::one();
    let mut targets: Vec<ExactScalar> = f.locations().to_vec();
    targets[i] = p_target;
    for (j, q) in f.locations().iter().enumerate() {
        if j == i {
            continue;
        }
        let at = comps.partition_point(|c| c.0 < *q);
        if at == 0 || *q >= comps[at - 1].1 {
            continue;
        }
        let (lo, hi) = &comps[at - 1];
        let lo_ok = *lo > zero;
        let hi_ok = *hi < one;
        let to = match (lo_ok, hi_ok) {
            (true, true) => {
                if (q - lo) <= (hi - q) {
                    lo.clone()
                } else {
                    hi.clone()
                }
            }
            (true, false) => lo.clone(),
            (false, true) => hi.clone(),
            (false, false) => return Err(FriendError::NoRoom { index: j + 1 }),
        };
        targets[j] = to;
    }

    let mut g = f.clone();
    let mut moves = Vec::new();
    for (j, target) in targets.iter().enumerate() {
        let zeta = target - &f.locations()[j];
        if zeta.is_zero() {
            continue;
        }
        g = g.nudge(j, &zeta)?;
        moves.push((j, zeta));
    }
    match f3_f4_on(&tower, &g, k, side)[i] {
        F34Outcome::Pass { witness: got } if got == witness => {}
        _ => return Err(FriendError::ConstructionFailed(k)),
    }
    let distance = f.distance(&g)?;
    Ok(Perturbation {
        g,
        side,
        k,
        witness,
        moves,
        distance,
        budget: constants.nudge_budget(k),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShadowOutcome {
    /// Step at which the orbits straddle a discontinuity of `f`.
    pub ell: Option<u64>,
    /// `S_n(z) − S_n(x)` after the straddle.
    pub offset: ExactScalar,
    /// One-based discontinuity crossed and its jump `y_{i+1} − y_i`.
    pub jump: Option<(usize, ExactScalar)>,
    /// Offsets were 0 up to `ell` and equal to `offset` after, the
    /// horizontal distance stayed `|z − x|`, and the offset is `±jump`.
    pub verified: bool,
    pub steps: u64,
}

/// Follows `(x, t)` and `(z, t)` for `2^k` steps and checks that their
/// heights differ by exactly one jump of `f` after the single straddle.
pub fn shadow_orbit(
    iet: &Iet,
    f: &StepFunction,
    x: &ExactScalar,
    z: &ExactScalar,
    t: &ExactScalar,
    k: u32,
    delta: &ExactScalar,
) -> Result<ShadowOutcome, FriendError> {
    if k == 0 {
        return Err(FriendError::ZeroScale);
    }
    if k > MAX_SCALE {
        return Err(FriendError::ScaleTooLarge(k));
    }
    for p in [x, z] {
        if p.signum().is_lt() || *p >= ExactScalar::one() {
            return Err(FriendError::OutOfRange(p.clone()));
        }
    }
    let gap = z - x;
    if gap.abs() > delta.halve_times(k - 1) {
        return Err(FriendError::ShadowTooFar {
            x: x.clone(),
            z: z.clone(),
        });
    }
    let steps = 1u64 << k;
    let mut a = SkewState {
        x: x.clone(),
        t: t.clone(),
    };
    let mut b = SkewState {
        x: z.clone(),
        t: t.clone(),
    };
    let mut ell = None;
    let mut offset = ExactScalar::zero();
    let mut jump = None;
    for n in 0..steps {
        if &b.x - &a.x != gap {
            return Err(FriendError::IsometryBroken(n));
        }
        let fa = f.value_at(&a.x);
        let fb = f.value_at(&b.x);
        if fa != fb {
            if ell.is_some() {
                return Err(FriendError::SecondStraddle(n));
            }
            let (lo, hi) = if a.x <= b.x { (&a.x, &b.x) } else { (&b.x, &a.x) };
            let locs = f.locations();
            let idx = locs.partition_point(|p| p <= lo);
            if idx >= locs.len() || locs[idx] > *hi || idx + 1 < locs.partition_point(|p| p <= hi) {
                return Err(FriendError::SecondStraddle(n));
            }
            ell = Some(n);
            jump = Some((idx + 1, &f.values()[idx + 1] - &f.values()[idx]));
        }
        a = skew_step(iet, f, &a);
        b = skew_step(iet, f, &b);
        let diff = &b.t - &a.t;
        let expected_zero = ell.is_none();
        if expected_zero && !diff.is_zero() {
            return Err(FriendError::SecondStraddle(n));
        }
        if !expected_zero {
            if offset.is_zero() {
                offset = diff;
            } else if diff != offset {
                return Err(FriendError::SecondStraddle(n));
            }
        }
    }
    if &b.x - &a.x != gap {
        return Err(FriendError::IsometryBroken(steps));
    }
    let verified = match &jump {
        None => offset.is_zero(),
        Some((_, v)) => {
            if gap.signum().is_gt() {
                offset == *v
            } else {
                offset == -v
            }
        }
    };
    Ok(ShadowOutcome {
        ell,
        offset,
        jump,
        verified,
        steps,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScaleResult {
    pub k: u32,
    pub continuous_right: bool,
    pub continuous_left: bool,
    pub disjoint: bool,
    pub f5: F5Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscontinuityResult {
    /// One-based.
    pub index: usize,
    pub location: ExactScalar,
    /// Passing scales with their witnesses.
    pub right: Vec<(u32, usize)>,
    pub left: Vec<(u32, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FriendshipReport {
    pub delta: ExactScalar,
    pub beta: ExactScalar,
    pub window: ExactScalar,
    pub k_max: u32,
    pub m_min: usize,
    pub scales: Vec<ScaleResult>,
    pub discontinuities: Vec<DiscontinuityResult>,
    pub right_friends: bool,
    pub left_friends: bool,
    pub side: Option<Side>,
    pub friends: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn friendship_report(
    iet: &Iet,
    f: &StepFunction,
    start: &SkewState,
    window: &Window,
    delta: &ExactScalar,
    k_max: u32,
    beta: &ExactScalar,
    m_min: usize,
) -> Result<FriendshipReport, FriendError> {
    let tower = Tower::new(iet, &start.x, delta, k_max)?;
    friendship_report_on(&tower, iet, f, start, window, beta, m_min)
}

/// [`friendship_report`] over a prebuilt tower at `start.x`, so sweeps over
/// windows or heights reuse one orbit.
pub fn friendship_report_on(
    tower: &Tower,
    iet: &Iet,
    f: &StepFunction,
    start: &SkewState,
    window: &Window,
    beta: &ExactScalar,
    m_min: usize,
) -> Result<FriendshipReport, FriendError> {
    if tower.x() != &start.x {
        return Err(FriendError::OutOfRange(start.x.clone()));
    }
    let k_max = tower.k_max();
    let delta = tower.delta();
    let profile = visit_profile(iet, f, start, window, k_max)?;
    let mut scales = Vec::with_capacity(k_max as usize);
    let mut discontinuities: Vec<DiscontinuityResult> = f
        .locations()
        .iter()
        .enumerate()
        .map(|(i, p)| DiscontinuityResult {
            index: i + 1,
            location: p.clone(),
            right: Vec::new(),
            left: Vec::new(),
        })
        .collect();
    for k in 1..=k_max {
        let f5 = f5_from_profile(&profile, k, beta);
        let disjoint = tower.disjoint(k);
        let continuous_right = tower.continuous(k, Side::Right);
        let continuous_left = tower.continuous(k, Side::Left);
        for (side, ok) in [(Side::Right, continuous_right), (Side::Left, continuous_left)] {
            if !(ok && disjoint && f5.pass) {
                continue;
            }
            for (res, outcome) in discontinuities.iter_mut().zip(f3_f4_on(tower, f, k, side)) {
                if let Some(wit) = outcome.witness() {
                    match side {
                        Side::Right => res.right.push((k, wit)),
                        Side::Left => res.left.push((k, wit)),
                    }
                }
            }
        }
        scales.push(ScaleResult {
            k,
            continuous_right,
            continuous_left,
            disjoint,
            f5,
        });
    }
    let right_friends = discontinuities.iter().all(|r| r.right.len() >= m_min);
    let left_friends = discontinuities.iter().all(|r| r.left.len() >= m_min);
    let side = SidePass {
        right: right_friends,
        left: left_friends,
    }
    .preferred();
    Ok(FriendshipReport {
        delta: delta.clone(),
        beta: beta.clone(),
        window: window.half_height().clone(),
        k_max,
        m_min,
        scales,
        discontinuities,
        right_friends,
        left_friends,
        side,
        friends: side.is_some(),
    })
}
