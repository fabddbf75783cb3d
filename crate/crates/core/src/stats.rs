//! Empirical quantities of an event stream: novelty counts, common-slope
//! Heaps fits, the log-ratio process and table composition quantiles.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ColorId;
use crate::simulator::{DrawEvent, EventLog};

/// Anything that exposes a validated `N`-agent event sequence.
pub trait EventSource {
    fn n_agents(&self) -> usize;
    /// Sorted by `(t, agent)`, exactly `n_agents` events per step.
    fn events(&self) -> &[DrawEvent];

    fn horizon(&self) -> u64 {
        self.events().last().map_or(0, |e| e.t)
    }

    /// External name of a color, for error messages.
    fn item_label(&self, color: ColorId) -> String {
        color.to_string()
    }
}

impl EventSource for EventLog {
    fn n_agents(&self) -> usize {
        self.spec.n_agents()
    }

    fn events(&self) -> &[DrawEvent] {
        &self.events
    }
}

/// Checks that `events` are grouped by consecutive `t` starting at 1, one
/// event per agent in agent order. Line numbers assume one header line.
pub fn check_layout(events: &[DrawEvent], n_agents: usize) -> Result<()> {
    if n_agents == 0 {
        return Err(Error::Domain("log has no agents".into()));
    }
    if events.len() % n_agents != 0 {
        return Err(Error::Malformed {
            line: events.len() + 1,
            message: format!(
                "{} events is not a whole number of {n_agents}-agent steps",
                events.len()
            ),
        });
    }
    for (i, e) in events.iter().enumerate() {
        let t = (i / n_agents) as u64 + 1;
        let agent = i % n_agents;
        if e.t != t || e.agent != agent {
            return Err(Error::Malformed {
                line: i + 2,
                message: format!(
                    "expected t={t}, agent={}, found t={}, agent={}",
                    agent + 1,
                    e.t,
                    e.agent + 1
                ),
            });
        }
    }
    Ok(())
}

/// `n` log-spaced integer times in `[1, horizon]`, deduplicated, always
/// containing both ends.
pub fn log_spaced_times(horizon: u64, n: usize) -> Vec<u64> {
    if horizon <= 1 || n < 2 {
        return vec![horizon.max(1)];
    }
    let top = (horizon as f64).log10();
    let mut out: Vec<u64> = (0..n)
        .map(|k| 10f64.powf(top * k as f64 / (n - 1) as f64).round() as u64)
        .map(|t| t.clamp(1, horizon))
        .collect();
    out.push(horizon);
    out.sort_unstable();
    out.dedup();
    out
}

/// Default checkpoints: every step up to `10^5`, otherwise 1000 log-spaced times.
pub fn default_sample_times(horizon: u64) -> Vec<u64> {
    if horizon <= 100_000 {
        (1..=horizon).collect()
    } else {
        log_spaced_times(horizon, 1000)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectories {
    pub times: Vec<u64>,
    /// `d_star[h][k]` = `D*_{times[k],h}`.
    pub d_star: Vec<Vec<u64>>,
    /// `d[h][k]` = `D_{times[k],h}`.
    pub d: Vec<Vec<u64>>,
    pub d_star_total: Vec<u64>,
}

impl Trajectories {
    pub fn n_agents(&self) -> usize {
        self.d_star.len()
    }

    pub fn series(&self, values: &[u64]) -> Vec<(f64, f64)> {
        self.times
            .iter()
            .zip(values)
            .map(|(&t, &v)| (t as f64, v as f64))
            .collect()
    }
}

/// Novelty and adoption counts of every agent at the requested times.
pub fn trajectories<S: EventSource + ?Sized>(log: &S, sample_times: &[u64]) -> Result<Trajectories> {
    let n = log.n_agents();
    let events = log.events();
    check_layout(events, n)?;
    let horizon = log.horizon();
    let mut times: Vec<u64> = sample_times
        .iter()
        .copied()
        .filter(|&t| t >= 1 && t <= horizon)
        .collect();
    times.sort_unstable();
    times.dedup();

    let mut out = Trajectories {
        times: times.clone(),
        d_star: vec![Vec::with_capacity(times.len()); n],
        d: vec![Vec::with_capacity(times.len()); n],
        d_star_total: Vec::with_capacity(times.len()),
    };
    let mut d_star = vec![0u64; n];
    let mut d = vec![0u64; n];
    let mut next = times.iter().peekable();
    for step in events.chunks_exact(n) {
        for e in step {
            d_star[e.agent] += e.new_system as u64;
            d[e.agent] += e.new_agent as u64;
        }
        let t = step[0].t;
        if next.peek() == Some(&&t) {
            next.next();
            for h in 0..n {
                out.d_star[h].push(d_star[h]);
                out.d[h].push(d[h]);
            }
            out.d_star_total.push(d_star.iter().sum());
        }
    }
    Ok(out)
}

/// Shared-slope least-squares fit in `log10`–`log10` coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeapsFit {
    pub slope: f64,
    pub intercepts: Vec<f64>,
    /// `1 − SS_res/SS_tot`, with `SS_tot` taken around each series' own mean.
    pub r_squared: f64,
    /// `α̂(D*₁) − α̂(D*₂)` when both novelty series were fit.
    pub u_hat: Option<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    pub series_r_squared: Vec<f64>,
}

/// Points of `series` used by a fit: for each of `n_points` log-uniform
/// targets on `[t_min, t_max]`, the last sample at or before the target.
fn fit_points(series: &[(f64, f64)], t_min: f64, t_max: f64, n_points: usize) -> Vec<usize> {
    let (lo, hi) = (t_min.log10(), t_max.log10());
    let mut picked: Vec<usize> = (0..n_points)
        .filter_map(|k| {
            let frac = if n_points > 1 {
                k as f64 / (n_points - 1) as f64
            } else {
                1.0
            };
            // Guard against 10^log10(T) rounding just below T.
            let target = 10f64.powf(lo + (hi - lo) * frac) * (1.0 + 1e-12);
            let idx = series.partition_point(|p| p.0 <= target);
            (idx > 0 && series[idx - 1].0 >= t_min * (1.0 - 1e-12)).then(|| idx - 1)
        })
        .collect();
    picked.dedup();
    picked
}

/// Joint fit of `log10 y = α_k + β log10 t` over all series with one slope.
pub fn heaps_fit(series: &[Vec<(f64, f64)>], t_min: f64, n_points: usize) -> Result<HeapsFit> {
    if series.is_empty() || series.iter().any(Vec::is_empty) {
        return Err(Error::Domain("heaps_fit needs non-empty series".into()));
    }
    let t_max = series[0].last().expect("non-empty").0;
    if !(t_min < t_max) || t_min <= 0.0 {
        return Err(Error::DegenerateRange { t_min, t_max });
    }
    let mut groups: Vec<Vec<(f64, f64)>> = Vec::with_capacity(series.len());
    for (k, s) in series.iter().enumerate() {
        let mut pts = Vec::new();
        for i in fit_points(s, t_min, t_max, n_points) {
            let (t, y) = s[i];
            if !(y > 0.0) {
                return Err(Error::NonPositive {
                    series: k,
                    t,
                    value: y,
                });
            }
            pts.push((t.log10(), y.log10()));
        }
        if pts.len() < 2 {
            return Err(Error::DegenerateRange { t_min, t_max });
        }
        groups.push(pts);
    }

    let means: Vec<(f64, f64)> = groups
        .iter()
        .map(|g| {
            let n = g.len() as f64;
            (
                g.iter().map(|p| p.0).sum::<f64>() / n,
                g.iter().map(|p| p.1).sum::<f64>() / n,
            )
        })
        .collect();
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (g, &(mx, my)) in groups.iter().zip(&means) {
        for &(x, y) in g {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
        }
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateRange { t_min, t_max });
    }
    let slope = sxy / sxx;
    let intercepts: Vec<f64> = means.iter().map(|&(mx, my)| my - slope * mx).collect();

    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    let mut series_r_squared = Vec::with_capacity(groups.len());
    for ((g, &(_, my)), &a) in groups.iter().zip(&means).zip(&intercepts) {
        let res: f64 = g.iter().map(|&(x, y)| (y - a - slope * x).powi(2)).sum();
        let tot: f64 = g.iter().map(|&(_, y)| (y - my).powi(2)).sum();
        series_r_squared.push(if tot > 0.0 { 1.0 - res / tot } else { 1.0 });
        ss_res += res;
        ss_tot += tot;
    }
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(HeapsFit {
        slope,
        intercepts,
        r_squared,
        u_hat: None,
        t_min,
        t_max,
        n_points,
        series_r_squared,
    })
}

/// Which trajectories share the fitted slope.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesSelection {
    /// `D*_h` for every agent, then `D_h` for every agent.
    #[default]
    Four,
    /// `D*_h` only.
    Two,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Defaults to `max(100, T/1000)`, capped below `T`.
    pub t_min: Option<f64>,
    pub n_points: usize,
    pub series: SeriesSelection,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            t_min: None,
            n_points: 200,
            series: SeriesSelection::Four,
        }
    }
}

pub fn default_t_min(horizon: u64) -> f64 {
    (horizon as f64 / 1000.0).max(100.0)
}

/// Fits the novelty (and optionally adoption) series of every agent. With
/// two or more agents `u_hat` is the intercept gap between `D*₁` and `D*₂`.
pub fn fit_trajectories(traj: &Trajectories, options: &FitOptions) -> Result<HeapsFit> {
    let n = traj.n_agents();
    let horizon = *traj
        .times
        .last()
        .ok_or(Error::Domain("empty trajectories".into()))?;
    let t_min = options.t_min.unwrap_or_else(|| default_t_min(horizon));
    let mut series: Vec<_> = traj.d_star.iter().map(|s| traj.series(s)).collect();
    if options.series == SeriesSelection::Four && n > 1 {
        series.extend(traj.d.iter().map(|s| traj.series(s)));
    }
    let mut fit = heaps_fit(&series, t_min, options.n_points)?;
    if n >= 2 {
        fit.u_hat = Some(fit.intercepts[0] - fit.intercepts[1]);
    }
    Ok(fit)
}

/// `log10 D*_{t,h} − log10 D*_{t,j}` wherever both counts are positive.
pub fn ratio_series(traj: &Trajectories, h: usize, j: usize) -> Vec<(u64, f64)> {
    traj.times
            .iter()
            .zip(traj.d_star[h].iter().zip(&traj.d_star[j]))
            .filter(|(_, (a, b))| **a > 0 && **b > 0)
            .map(|(&t, (&a, &b))| (t, (a as f64).log10() - (b as f64).log10()))
            .collect()
}

/// Empirical quantile with linear interpolation between order statistics
/// (the "type 7" rule). `sorted` must be ascending and non-empty.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub const DEFAULT_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Clone, Debug, PartialEq)]
pub struct CompositionOptions {
    pub min_occupancy: u64,
    pub bin_width_log10: f64,
    pub levels: Vec<f64>,
    /// Agent whose share of each table is reported (0-based).
    pub agent: usize,
}

impl Default for CompositionOptions {
    fn default() -> Self {
        Self {
            min_occupancy: 10,
            bin_width_log10: 0.5,
            levels: DEFAULT_LEVELS.to_vec(),
            agent: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompositionBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// One value per level; `None` for an empty bin.
    pub quantiles: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompositionTable {
    pub levels: Vec<f64>,
    pub agent: usize,
    pub bins: Vec<CompositionBin>,
}

impl CompositionTable {
    /// Non-empty bin with the largest occupancies.
    pub fn top_bin(&self) -> Option<&CompositionBin> {
        self.bins.iter().rev().find(|b| b.count > 0)
    }
}

/// Final per-agent draw counts of every color, indexed `[color][agent]`.
pub fn final_counts<S: EventSource + ?Sized>(log: &S) -> Result<Vec<Vec<u32>>> {
    let n = log.n_agents();
    check_layout(log.events(), n)?;
    let mut counts: Vec<Vec<u32>> = Vec::new();
    for e in log.events() {
        if e.color >= counts.len() {
            counts.resize(e.color + 1, vec![0; n]);
        }
        counts[e.color][e.agent] += 1;
    }
    Ok(counts)
}

/// Quantiles of one agent's share of each table, binned by table occupancy.
pub fn composition_quantiles<S: EventSource + ?Sized>(
    log: &S,
    options: &CompositionOptions,
) -> Result<CompositionTable> {
    composition_from_counts(&final_counts(log)?, options)
}

/// [`composition_quantiles`] over precomputed `[color][agent]` counts, which
/// may pool tables from several runs.
pub fn composition_from_counts(
    counts: &[Vec<u32>],
    options: &CompositionOptions,
) -> Result<CompositionTable> {
    let w = options.bin_width_log10;
    if !(w > 0.0) {
        return Err(Error::Domain(format!("bin width must be positive, got {w}")));
    }
    if options.min_occupancy == 0 {
        return Err(Error::Domain("min_occupancy must be at least 1".into()));
    }
    if options.levels.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Domain("quantile levels must lie in [0, 1]".into()));
    }
    let bin_of = |occ: f64| ((occ.log10() / w) + 1e-9).floor() as i64;
    let mut tables: Vec<(u64, f64)> = counts
        .iter()
        .map(|c| {
            let occ: u64 = c.iter().map(|&k| k as u64).sum();
            let own = c.get(options.agent).copied().unwrap_or(0) as f64;
            (occ, if occ > 0 { own / occ as f64 } else { 0.0 })
        })
        .filter(|&(occ, _)| occ >= options.min_occupancy)
        .collect();
    tables.sort_by_key(|&(occ, _)| occ);

    let mut bins = Vec::new();
    if let (Some(first), Some(last)) = (tables.first(), tables.last()) {
        let (k_lo, k_hi) = (bin_of(options.min_occupancy as f64), bin_of(last.0 as f64));
        debug_assert!(bin_of(first.0 as f64) >= k_lo);
        for k in k_lo..=k_hi {
            let mut props: Vec<f64> = tables
                .iter()
                .filter(|&&(occ, _)| bin_of(occ as f64) == k)
                .map(|&(_, p)| p)
                .collect();
            props.sort_by(f64::total_cmp);
            bins.push(CompositionBin {
                lo: 10f64.powf(k as f64 * w),
                hi: 10f64.powf((k + 1) as f64 * w),
                count: props.len(),
                quantiles: (!props.is_empty()).then(|| {
                    options
                        .levels
                        .iter()
                        .map(|&p| quantile_type7(&props, p))
                        .collect()
                }),
            });
        }
    }
    Ok(CompositionTable {
        levels: options.levels.clone(),
        agent: options.agent,
        bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(c: f64, beta: f64, ts: impl Iterator<Item = u64>) -> Vec<(f64, f64)> {
        ts.map(|t| (t as f64, c * (t as f64).powf(beta))).collect()
    }

    #[test]
    fn exact_common_power_law() {
        let s1 = power(2.0, 0.5, 1..=10_000);
        let s2 = power(5.0, 0.5, 1..=10_000);
        let fit = heaps_fit(&[s1, s2], 10.0, 200).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let gap = fit.intercepts[0] - fit.intercepts[1];
        assert!((gap - (2.0f64 / 5.0).log10()).abs() < 1e-12);
    }

    #[test]
    fn different_exponents_pool_to_midpoint() {
        // Both series are sampled on the same grid, so the pooled slope is
        // the average of 0.4 and 0.6.
        let s1 = power(1.0, 0.4, 1..=10_000);
        let s2 = power(1.0, 0.6, 1..=10_000);
        let fit = heaps_fit(&[s1, s2], 10.0, 200).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!(fit.r_squared < 1.0);
    }

    #[test]
    fn degenerate_ranges() {
        let s = power(1.0, 0.5, 1..=100);
        assert!(matches!(
            heaps_fit(&[s.clone()], 100.0, 50),
            Err(Error::DegenerateRange { .. })
        ));
        let mut z = s;
        z[99].1 = 0.0;
        assert!(matches!(
            heaps_fit(&[z], 10.0, 50),
            Err(Error::NonPositive { .. })
        ));
    }

    #[test]
    fn quantile_type7_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_type7(&xs, 0.0), 1.0);
        assert_eq!(quantile_type7(&xs, 1.0), 4.0);
        assert_eq!(quantile_type7(&xs, 0.5), 2.5);
        assert!((quantile_type7(&xs, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn log_spaced_times_cover_range() {
        let ts = log_spaced_times(100_000, 1000);
        assert_eq!(ts[0], 1);
        assert_eq!(*ts.last().unwrap(), 100_000);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(log_spaced_times(1, 10), vec![1]);
    }

    #[test]
    fn composition_single_owner() {
        let counts = vec![vec![12, 0], vec![40, 0], vec![500, 0], vec![3, 0]];
        let table = composition_from_counts(&counts, &CompositionOptions::default()).unwrap();
        let total: usize = table.bins.iter().map(|b| b.count).sum();
        assert_eq!(total, 3);
        for b in &table.bins {
            if let Some(q) = &b.quantiles {
                assert!(q.iter().all(|&x| x == 1.0));
            }
        }
        assert_eq!(table.bins[0].lo, 10.0);
        // 500 lands in [316, 1000).
        let top = table.top_bin().unwrap();
        assert!((top.lo - 10f64.powf(2.5)).abs() < 1e-9 && top.count == 1);
    }

    #[test]
    fn composition_empty_bins_have_no_quantiles() {
        let counts = vec![vec![5, 6], vec![600, 400]];
        let table = composition_from_counts(&counts, &CompositionOptions::default()).unwrap();
        assert!(table.bins.iter().any(|b| b.count == 0 && b.quantiles.is_none()));
        assert_eq!(table.top_bin().unwrap().quantiles.as_ref().unwrap()[2], 0.6);
    }
}
