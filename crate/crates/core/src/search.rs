//! Largest feasible load along one axis (bisection with confidence-gated
//! verdicts) and best configuration over a finite grid.
//!
//! Feasibility is assumed monotone: once a load violates a target, every
//! larger load does too. A probe is asked for a number of trials and returns
//! one estimate per constraint. While any interval straddles its target the
//! trial count is doubled up to the cap; at the cap the point estimate
//! decides.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimate::{OutageEstimate, Verdict};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub estimate: OutageEstimate,
    pub target: f64,
}

impl Constraint {
    pub fn new(estimate: OutageEstimate, target: f64) -> Self {
        Self { estimate, target }
    }

    pub fn verdict(&self) -> Verdict {
        self.estimate.verdict(self.target)
    }
}

/// All constraints evaluated at one load.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Probe {
    pub constraints: Vec<Constraint>,
}

impl Probe {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        Self { constraints }
    }

    pub fn verdict(&self) -> Verdict {
        let mut all_meet = true;
        for c in &self.constraints {
            match c.verdict() {
                Verdict::Violates => return Verdict::Violates,
                Verdict::Ambiguous => all_meet = false,
                Verdict::Meets => {}
            }
        }
        if all_meet {
            Verdict::Meets
        } else {
            Verdict::Ambiguous
        }
    }

    pub fn point_meets(&self) -> bool {
        self.constraints.iter().all(|c| c.estimate.point_meets(c.target))
    }

    pub fn trials(&self) -> u64 {
        self.constraints.iter().map(|c| c.estimate.trials).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    pub initial_trials: u64,
    pub max_trials: u64,
    /// Bisection stops once the bracket is narrower than this.
    pub tolerance: f64,
}

impl SearchSettings {
    pub fn new(initial_trials: u64, max_trials: u64, tolerance: f64) -> Result<Self> {
        if initial_trials == 0 {
            return Err(Error::param("initial_trials", 0.0, "at least one trial"));
        }
        if max_trials < initial_trials {
            return Err(Error::param("max_trials", max_trials as f64, "at least initial_trials"));
        }
        if !(tolerance > 0.0) || !tolerance.is_finite() {
            return Err(Error::param("tolerance", tolerance, "a positive width"));
        }
        Ok(Self {
            initial_trials,
            max_trials,
            tolerance,
        })
    }
}

/// Feasibility of one load after escalation.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub feasible: bool,
    /// False when the decision fell back to the point estimate.
    pub confident: bool,
    pub probe: Probe,
}

pub fn assess<F>(x: f64, settings: &SearchSettings, probe: &mut F) -> Assessment
where
    F: FnMut(f64, u64) -> Probe,
{
    let mut n = settings.initial_trials;
    loop {
        let p = probe(x, n);
        match p.verdict() {
            Verdict::Meets => return Assessment { feasible: true, confident: true, probe: p },
            Verdict::Violates => return Assessment { feasible: false, confident: true, probe: p },
            Verdict::Ambiguous if n >= settings.max_trials => {
                return Assessment {
                    feasible: p.point_meets(),
                    confident: false,
                    probe: p,
                }
            }
            Verdict::Ambiguous => n = n.saturating_mul(2).min(settings.max_trials),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SearchResult {
    /// Largest load found feasible; the lower bracket end when `meets` is
    /// false.
    pub argmax: f64,
    /// Whether any load in the bracket was feasible.
    pub meets: bool,
    /// The search started from a floor that turned out infeasible.
    pub pruned: bool,
    /// Largest evaluated load whose intervals all sit below their targets.
    pub band_low: f64,
    /// Smallest evaluated load with some interval entirely above its
    /// target, or the upper bracket end.
    pub band_high: f64,
    /// Probe at `argmax`.
    pub probe: Probe,
    /// Every load assessed, in order, with its final probe.
    pub history: Vec<(f64, Probe)>,
    pub evaluations: u32,
}

/// First step above a feasible floor, as a fraction of the floor.
const GALLOP_FRACTION: f64 = 1.0 / 16.0;

/// Largest `x` in `[lower, upper]` meeting every constraint. With `floor`
/// set the search only looks above it and reports `pruned` when the floor
/// itself fails; past a feasible floor it steps up with doubling strides
/// until a load fails, then bisects the last stride.
pub fn bisect<F>(lower: f64, upper: f64, floor: Option<f64>, settings: &SearchSettings, mut probe: F) -> SearchResult
where
    F: FnMut(f64, u64) -> Probe,
{
    let start = match floor {
        Some(f) if f > lower => f.min(upper),
        _ => lower,
    };
    let mut evaluations = 1;
    let first = assess(start, settings, &mut probe);
    let mut history = alloc::vec![(start, first.probe.clone())];
    let mut band_low = lower;
    let mut band_high = upper;
    let note = |x: f64, a: &Assessment, lo: &mut f64, hi: &mut f64| {
        if a.confident && a.feasible {
            *lo = lo.max(x);
        } else if a.confident {
            *hi = hi.min(x);
        }
    };
    note(start, &first, &mut band_low, &mut band_high);
    if !first.feasible {
        return SearchResult {
            argmax: start,
            meets: false,
            pruned: start > lower,
            band_low,
            band_high,
            probe: first.probe,
            history,
            evaluations,
        };
    }
    let mut lo = start;
    let mut hi = upper;
    let mut best = first.probe;
    let mut rejected = false;
    if start > lower {
        let mut step = (start * GALLOP_FRACTION).max(settings.tolerance);
        while lo + step < upper {
            let x = lo + step;
            let a = assess(x, settings, &mut probe);
            evaluations += 1;
            history.push((x, a.probe.clone()));
            note(x, &a, &mut band_low, &mut band_high);
            if !a.feasible {
                hi = x;
                rejected = true;
                break;
            }
            lo = x;
            best = a.probe;
            step *= 2.0;
        }
    }
    while hi - lo > settings.tolerance {
        let mid = 0.5 * (lo + hi);
        let a = assess(mid, settings, &mut probe);
        evaluations += 1;
        history.push((mid, a.probe.clone()));
        note(mid, &a, &mut band_low, &mut band_high);
        if a.feasible {
            lo = mid;
            best = a.probe;
        } else {
            hi = mid;
            rejected = true;
        }
    }
    if !rejected && lo < upper {
        let a = assess(upper, settings, &mut probe);
        evaluations += 1;
        history.push((upper, a.probe.clone()));
        note(upper, &a, &mut band_low, &mut band_high);
        if a.feasible {
            lo = upper;
            best = a.probe;
        }
    }
    SearchResult {
        argmax: lo,
        meets: true,
        pruned: false,
        band_low: band_low.min(lo),
        band_high: band_high.max(lo),
        probe: best,
        history,
        evaluations,
    }
}

/// Tightens the band of a finished search. Steps away from `argmax` with
/// doubling strides, starting at the tolerance, until a probe is confident
/// on each side or the existing band edge is reached.
pub fn refine_band<F>(result: &mut SearchResult, settings: &SearchSettings, mut probe: F)
where
    F: FnMut(f64, u64) -> Probe,
{
    if !result.meets {
        return;
    }
    let mut step = settings.tolerance;
    loop {
        let x = result.argmax + step;
        if x >= result.band_high {
            break;
        }
        let a = assess(x, settings, &mut probe);
        result.evaluations += 1;
        result.history.push((x, a.probe));
        if a.confident && !a.feasible {
            result.band_high = x;
            break;
        }
        step *= 2.0;
    }
    let mut step = settings.tolerance;
    loop {
        let x = result.argmax - step;
        if x <= result.band_low {
            break;
        }
        let a = assess(x, settings, &mut probe);
        result.evaluations += 1;
        result.history.push((x, a.probe));
        if a.confident && a.feasible {
            result.band_low = x;
            break;
        }
        step *= 2.0;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridBest<P> {
    pub index: usize,
    pub point: P,
    pub result: SearchResult,
}

/// Maximizes a search over `grid`. The objective receives the incumbent's
/// `argmax` as a floor so it can skip points that cannot beat it. The first
/// point attaining the maximum wins. When no point is feasible the first
/// point is returned with `meets == false`.
///
/// The lower band edge uses every point: any point confidently feasible at
/// `x` puts the optimum above `x`. The upper edge is the winner's.
pub fn optimize_grid<P, F>(grid: &[P], mut objective: F) -> Result<GridBest<P>>
where
    P: Clone,
    F: FnMut(&P, Option<f64>) -> SearchResult,
{
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut best: Option<GridBest<P>> = None;
    let mut fallback = None;
    let mut band_low = f64::NEG_INFINITY;
    for (index, point) in grid.iter().enumerate() {
        let floor = best.as_ref().map(|b| b.result.argmax);
        let r = objective(point, floor);
        if r.meets && !r.pruned {
            band_low = band_low.max(r.band_low);
        }
        if !r.meets || r.pruned {
            if index == 0 {
                fallback = Some(r);
            }
            continue;
        }
        if best.as_ref().is_none_or(|b| r.argmax > b.result.argmax) {
            best = Some(GridBest {
                index,
                point: point.clone(),
                result: r,
            });
        }
    }
    Ok(match best {
        Some(mut b) => {
            b.result.band_low = band_low.min(b.result.argmax);
            b
        }
        None => GridBest {
            index: 0,
            point: grid[0].clone(),
            result: fallback.expect("first point evaluated"),
        },
    })
}
