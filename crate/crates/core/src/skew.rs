//! The skew product `T_f(x, t) = (Tx, t + f(x))` on `[0, 1) × ℝ` and the
//! map it induces on the window `X_B = [0, 1) × [−B, B]`.

use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::iet::Iet;
use crate::numeric::{ExactScalar, NumericError};
use crate::step::StepFunction;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkewError {
    #[error("window half-height must be positive, got {0}")]
    BadWindow(ExactScalar),
    #[error("state ({x}, {t}) lies outside the window")]
    OutsideWindow { x: ExactScalar, t: ExactScalar },
    #[error("point {0} is outside [0, 1)")]
    OutOfRange(ExactScalar),
    #[error("no return to the window within {cap} steps")]
    CapExceeded { cap: u64, last: SkewState },
    #[error("need at least one sample")]
    NoSamples,
    #[error("grid needs at least one box in each direction")]
    EmptyGrid,
    #[error("collar width {b} must lie in (0, {window}]")]
    BadCollar { b: ExactScalar, window: ExactScalar },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SkewState {
    pub x: ExactScalar,
    pub t: ExactScalar,
}

impl SkewState {
    pub fn new(x: ExactScalar, t: ExactScalar) -> Result<Self, SkewError> {
        if x.signum().is_lt() || x >= ExactScalar::one() {
            return Err(SkewError::OutOfRange(x));
        }
        Ok(SkewState { x, t })
    }

    /// The vertical translation `V^v`.
    pub fn shifted(&self, v: &ExactScalar) -> SkewState {
        SkewState {
            x: self.x.clone(),
            t: &self.t + v,
        }
    }
}

impl std::fmt::Display for SkewState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.t)
    }
}

/// `X_B = [0, 1) × [−B, B]`, closed in the vertical direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Window {
    b: ExactScalar,
}

impl Window {
    pub fn new(b: ExactScalar) -> Result<Self, SkewError> {
        if b.signum().is_le() {
            return Err(SkewError::BadWindow(b));
        }
        Ok(Window { b })
    }

    pub fn half_height(&self) -> &ExactScalar {
        &self.b
    }

    pub fn contains_height(&self, t: &ExactScalar) -> bool {
        t.abs() <= self.b
    }

    pub fn contains(&self, s: &SkewState) -> bool {
        self.contains_height(&s.t)
    }
}

pub fn skew_step(iet: &Iet, f: &StepFunction, s: &SkewState) -> SkewState {
    SkewState {
        x: iet.apply(&s.x),
        t: &s.t + f.value_at(&s.x),
    }
}

/// Yields `(T^n x, S_n f(x))` for `n = 0, 1, 2, …`.
pub struct BirkhoffIter<'a> {
    iet: &'a Iet,
    f: &'a StepFunction,
    state: SkewState,
}

impl<'a> BirkhoffIter<'a> {
    pub fn new(iet: &'a Iet, f: &'a StepFunction, x: ExactScalar) -> Self {
        BirkhoffIter {
            iet,
            f,
            state: SkewState {
                x,
                t: ExactScalar::zero(),
            },
        }
    }
}

impl Iterator for BirkhoffIter<'_> {
    type Item = SkewState;

    fn next(&mut self) -> Option<SkewState> {
        let next = skew_step(self.iet, self.f, &self.state);
        Some(std::mem::replace(&mut self.state, next))
    }
}

/// `S_0 = 0, S_1, …, S_n` along the orbit of `x`.
pub fn birkhoff_sum(
    iet: &Iet,
    f: &StepFunction,
    x: &ExactScalar,
    n: usize,
) -> Result<Vec<ExactScalar>, SkewError> {
    SkewState::new(x.clone(), ExactScalar::zero())?;
    Ok(BirkhoffIter::new(iet, f, x.clone())
        .take(n + 1)
        .map(|s| s.t)
        .collect())
}

/// Number of `0 ≤ n < N` with `t + S_n ∈ [−B, B]`.
pub fn visit_count(
    iet: &Iet,
    f: &StepFunction,
    start: &SkewState,
    window: &Window,
    n: u64,
) -> u64 {
    let mut s = start.clone();
    let mut count = 0;
    for _ in 0..n {
        if window.contains(&s) {
            count += 1;
        }
        s = skew_step(iet, f, &s);
    }
    count
}

/// First return of `s` to the window under `T_f`, with the return time.
pub fn induced_step(
    iet: &Iet,
    f: &StepFunction,
    window: &Window,
    s: &SkewState,
    cap: u64,
) -> Result<(SkewState, u64), SkewError> {
    if !window.contains(s) {
        return Err(SkewError::OutsideWindow {
            x: s.x.clone(),
            t: s.t.clone(),
        });
    }
    let mut cur = s.clone();
    for n in 1..=cap {
        cur = skew_step(iet, f, &cur);
        if window.contains(&cur) {
            return Ok((cur, n));
        }
    }
    Err(SkewError::CapExceeded { cap, last: cur })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Grid {
    pub nx: usize,
    pub nt: usize,
}

/// Histogram of an induced orbit over a uniform grid on `X_B`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    pub window: ExactScalar,
    pub grid: Grid,
    /// Row-major by t: `counts[row * nx + column]`.
    pub counts: Vec<u64>,
    pub total: u64,
    /// Sum of return times along the sampled orbit.
    pub total_return_time: u64,
    #[serde(skip)]
    heights: Vec<ExactScalar>,
}

impl EmpiricalMeasure {
    pub fn count(&self, column: usize, row: usize) -> u64 {
        self.counts[row * self.grid.nx + column]
    }

    pub fn row_total(&self, row: usize) -> u64 {
        self.counts[row * self.grid.nx..(row + 1) * self.grid.nx].iter().sum()
    }

    pub fn fractions(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total as f64)
            .collect()
    }

    /// Total variation distance between two histograms on the same grid.
    pub fn total_variation(&self, other: &EmpiricalMeasure) -> f64 {
        self.fractions()
            .iter()
            .zip(other.fractions())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0
    }

    /// Sorted sample heights.
    pub fn heights(&self) -> &[ExactScalar] {
        &self.heights
    }
}

fn grid_index(lo: &ExactScalar, width: &ExactScalar, n: usize, v: &ExactScalar) -> usize {
    let q = (v - lo) * ExactScalar::from_integer(n as i64) / width;
    q.floor().to_usize().unwrap_or(0).min(n - 1)
}

/// Histogram of the first `n` states `s, S s, S² s, …` of the induced map.
pub fn empirical_measure(
    iet: &Iet,
    f: &StepFunction,
    window: &Window,
    start: &SkewState,
    n: u64,
    grid: Grid,
    cap: u64,
) -> Result<EmpiricalMeasure, SkewError> {
    if n == 0 {
        return Err(SkewError::NoSamples);
    }
    if grid.nx == 0 || grid.nt == 0 {
        return Err(SkewError::EmptyGrid);
    }
    if !window.contains(start) {
        return Err(SkewError::OutsideWindow {
            x: start.x.clone(),
            t: start.t.clone(),
        });
    }
    let lo = -window.half_height();
    let height = window.half_height() * ExactScalar::from_integer(2);
    let mut counts = vec![0u64; grid.nx * grid.nt];
    let mut heights = Vec::with_capacity(n as usize);
    let mut total_return_time = 0;
    let mut cur = start.clone();
    for i in 0..n {
        let column = grid_index(&ExactScalar::zero(), &ExactScalar::one(), grid.nx, &cur.x);
        let row = grid_index(&lo, &height, grid.nt, &cur.t);
        counts[row * grid.nx + column] += 1;
        heights.push(cur.t.clone());
        if i + 1 < n {
            let (next, r) = induced_step(iet, f, window, &cur, cap)?;
            total_return_time += r;
            cur = next;
        }
    }
    heights.sort();
    Ok(EmpiricalMeasure {
        window: window.half_height().clone(),
        grid,
        counts,
        total: n,
        total_return_time,
        heights,
    })
}

/// Fraction of samples in `[0,1) × ([−B, −B+b] ∪ [B−b, B])`.
pub fn collar_mass(m: &EmpiricalMeasure, b: &ExactScalar) -> Result<f64, SkewError> {
    if b.signum().is_le() || *b > m.window {
        return Err(SkewError::BadCollar {
            b: b.clone(),
            window: m.window.clone(),
        });
    }
    let low_edge = b - &m.window;
    let high_edge = &m.window - b;
    let hs = &m.heights;
    let low = hs.partition_point(|t| *t <= low_edge);
    let high = hs.len() - hs.partition_point(|t| *t < high_edge);
    // the two strips overlap when b > B/2; count each sample once
    let inside = if low_edge >= high_edge {
        hs.len()
    } else {
        low + high
    };
    Ok(inside as f64 / m.total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::s;

    fn third() -> Iet {
        Iet::rotation(&s("1/3")).unwrap()
    }

    fn sign() -> StepFunction {
        StepFunction::new(vec![s("1/2"), s("1/2")], vec![s("1"), s("-1")]).unwrap()
    }

    fn st(x: &str, t: &str) -> SkewState {
        SkewState::new(s(x), s(t)).unwrap()
    }

    #[test]
    fn steps_on_the_third_rotation() {
        let (t, f) = (third(), sign());
        let a = skew_step(&t, &f, &st("0", "0"));
        assert_eq!(a, st("1/3", "1"));
        let b = skew_step(&t, &f, &a);
        assert_eq!(b, st("2/3", "2"));
        assert_eq!(skew_step(&t, &f, &b), st("0", "1"));
        let shifted = skew_step(&t, &f, &st("0", "5/7"));
        assert_eq!(shifted, a.shifted(&s("5/7")));
    }

    #[test]
    fn partial_sums() {
        let (t, f) = (third(), sign());
        assert_eq!(
            birkhoff_sum(&t, &f, &s("0"), 3).unwrap(),
            vec![s("0"), s("1"), s("2"), s("1")]
        );
        assert_eq!(birkhoff_sum(&t, &f, &s("1/2"), 1).unwrap()[1], s("-1"));
        // the orbit average of f is 1/3, so sums drift upward by 1 per period
        assert_eq!(
            birkhoff_sum(&t, &f, &s("0"), 6).unwrap(),
            vec![s("0"), s("1"), s("2"), s("1"), s("2"), s("3"), s("2")]
        );
    }

    #[test]
    fn visits() {
        let (t, f) = (third(), sign());
        let w = Window::new(s("2")).unwrap();
        assert_eq!(visit_count(&t, &f, &st("0", "0"), &w, 6), 5);
        let huge = Window::new(s("100")).unwrap();
        assert_eq!(visit_count(&t, &f, &st("0", "0"), &huge, 50), 50);
        assert_eq!(visit_count(&t, &f, &st("0", "9"), &w, 6), 0);
    }

    #[test]
    fn induced_returns() {
        let (t, f) = (third(), sign());
        let w = Window::new(s("1")).unwrap();
        assert_eq!(
            induced_step(&t, &f, &w, &st("2/3", "0"), 10).unwrap(),
            (st("0", "-1"), 1)
        );
        assert_eq!(
            induced_step(&t, &f, &w, &st("0", "0"), 10).unwrap(),
            (st("1/3", "1"), 1)
        );
        assert_eq!(
            induced_step(&t, &f, &w, &st("1/3", "1"), 10).unwrap(),
            (st("0", "1"), 2)
        );
        assert!(matches!(
            induced_step(&t, &f, &w, &st("1/3", "2"), 10),
            Err(SkewError::OutsideWindow { .. })
        ));
        // from (0, 1) the sums climb away for good
        assert!(matches!(
            induced_step(&t, &f, &w, &st("0", "1"), 1000),
            Err(SkewError::CapExceeded { cap: 1000, .. })
        ));
    }

    #[test]
    fn golden_histogram_uses_integer_rows() {
        let t = Iet::golden_rotation();
        let f = sign();
        let w = Window::new(s("1")).unwrap();
        let grid = Grid { nx: 3, nt: 3 };
        let m = empirical_measure(&t, &f, &w, &st("0", "0"), 300, grid, 1_000_000).unwrap();
        assert_eq!(m.total, 300);
        assert_eq!(m.counts.iter().sum::<u64>(), 300);
        assert!(m.heights().iter().all(|h| [s("-1"), s("0"), s("1")].contains(h)));
        assert_eq!(collar_mass(&m, &s("1")).unwrap(), 1.0);
        let inner = m.heights().iter().filter(|h| h.is_zero()).count() as f64 / 300.0;
        assert!((collar_mass(&m, &s("1/3")).unwrap() - (1.0 - inner)).abs() < 1e-12);
        assert!(matches!(
            empirical_measure(&t, &f, &w, &st("0", "0"), 0, grid, 10),
            Err(SkewError::NoSamples)
        ));
    }

    #[test]
    fn collar_is_empty_when_mass_is_interior() {
        let t = Iet::golden_rotation();
        let f = sign();
        let w = Window::new(s("10")).unwrap();
        let grid = Grid { nx: 2, nt: 5 };
        // a single sample at height 0
        let m = empirical_measure(&t, &f, &w, &st("0", "0"), 1, grid, 10).unwrap();
        assert_eq!(collar_mass(&m, &s("1/2")).unwrap(), 0.0);
        assert!(collar_mass(&m, &s("11")).is_err());
        assert!(collar_mass(&m, &s("0")).is_err());
    }
}
