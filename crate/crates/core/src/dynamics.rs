//! Continuous-time heat-bath dynamics on height fields.
//!
//! Each interior site carries a rate-2 clock; on a ring the site is resampled
//! from its two allowed values, taking the larger one when U < p_up with
//! p_up = λ/(1+λ), λ = e^{q/scale}. Clocks are realised by uniformization:
//! a single Poisson stream of rate 2·|sites| with uniform site choice.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hexlattice::{extreme_tilings, neighbour_bounds, parse_grid_lines, to_grid_text, HeightField, HexDomain};
use crate::rng::{mix64, CounterRng};

/// Per-site clock rate.
pub const SITE_RATE: f64 = 2.0;

/// Default epoch cap for coupling from the past (total horizon 2^40).
pub const DEFAULT_MAX_EPOCHS: u32 = 40;

#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub domain: Arc<HexDomain>,
    pub q: f64,
    /// N in the tilt e^{q/N}; defaults to na.
    pub scale: f64,
    pub floor: Option<HeightField>,
    pub ceiling: Option<HeightField>,
    /// Vertex mask over the row-major grid; `None` means every site.
    pub active: Option<Vec<bool>>,
    pub seed: u64,
}

impl ChainConfig {
    pub fn new(domain: &Arc<HexDomain>, seed: u64) -> Self {
        ChainConfig {
            domain: domain.clone(),
            q: 0.0,
            scale: domain.sides().0 as f64,
            floor: None,
            ceiling: None,
            active: None,
            seed,
        }
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_floor(mut self, floor: HeightField) -> Self {
        self.floor = Some(floor);
        self
    }

    pub fn with_ceiling(mut self, ceiling: HeightField) -> Self {
        self.ceiling = Some(ceiling);
        self
    }

    pub fn with_active(mut self, mask: Vec<bool>) -> Self {
        self.active = Some(mask);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.q.is_finite() || !(self.scale > 0.0) {
            return Err(Error::Invalid(format!("q={} scale={}", self.q, self.scale)));
        }
        for c in [&self.floor, &self.ceiling].into_iter().flatten() {
            if c.domain() != &self.domain {
                return Err(Error::DomainMismatch);
            }
        }
        if let (Some(f), Some(c)) = (&self.floor, &self.ceiling) {
            if !f.leq(c) {
                return Err(Error::Constraint("floor exceeds ceiling".into()));
            }
        }
        if let Some(m) = &self.active {
            if m.len() != self.domain.width() * self.domain.rows() {
                return Err(Error::Invalid("active mask has wrong size".into()));
            }
        }
        Ok(())
    }

    /// Probability of choosing the larger value at a flippable site.
    pub fn p_up(&self) -> f64 {
        let t = self.q / self.scale;
        // λ/(1+λ) written to stay finite for large |t|
        1.0 / (1.0 + (-t).exp())
    }

    /// Sites carrying a clock: interior vertices inside the active mask.
    pub fn sites(&self) -> Vec<u32> {
        self.domain
            .interior()
            .iter()
            .copied()
            .filter(|&i| self.active.as_ref().is_none_or(|m| m[i as usize]))
            .collect()
    }

    /// Hash of floor, ceiling and active mask.
    pub fn constraints_hash(&self) -> u64 {
        let mut h = mix64(0x5eed);
        let mut eat = |v: u64| h = mix64(h ^ v);
        for (tag, c) in [(1u64, &self.floor), (2u64, &self.ceiling)] {
            match c {
                Some(f) => {
                    eat(tag);
                    f.raw().iter().for_each(|&v| eat(v as u32 as u64));
                }
                None => eat(tag << 8),
            }
        }
        match &self.active {
            Some(m) => m.iter().for_each(|&b| eat(b as u64 + 7)),
            None => eat(3 << 8),
        }
        h
    }

    pub(crate) fn kernel(&self) -> Kernel {
        let n = self.domain.width() * self.domain.rows();
        Kernel {
            width: self.domain.width(),
            p_up: self.p_up(),
            floor: self.floor.as_ref().map_or_else(|| vec![i32::MIN; n], |f| f.raw().to_vec()),
            ceil: self.ceiling.as_ref().map_or_else(|| vec![i32::MAX; n], |f| f.raw().to_vec()),
        }
    }

    fn check_within(&self, f: &HeightField) -> Result<()> {
        if f.domain() != &self.domain {
            return Err(Error::DomainMismatch);
        }
        f.check_admissible()?;
        if self.floor.as_ref().is_some_and(|fl| !fl.leq(f)) {
            return Err(Error::Constraint("state below floor".into()));
        }
        if self.ceiling.as_ref().is_some_and(|c| !f.leq(c)) {
            return Err(Error::Constraint("state above ceiling".into()));
        }
        Ok(())
    }
}

/// Compiled update rule.
#[derive(Clone, Debug)]
pub(crate) struct Kernel {
    pub width: usize,
    pub p_up: f64,
    pub floor: Vec<i32>,
    pub ceil: Vec<i32>,
}

impl Kernel {
    /// Heat-bath move at flat index `i`; returns whether the height changed.
    #[inline]
    pub fn apply(&self, h: &mut [i32], i: usize, u: f64) -> bool {
        let (lo, hi) = neighbour_bounds(h, self.width, i);
        if lo == hi {
            return false;
        }
        let v = if u < self.p_up { hi } else { lo };
        if v == h[i] || v < self.floor[i] || v > self.ceil[i] {
            return false;
        }
        h[i] = v;
        true
    }
}

/// Single heat-bath move at vertex (x, y) with uniform `u`.
pub fn heat_bath_update(f: &HeightField, x: i32, y: i32, u: f64, cfg: &ChainConfig) -> Result<HeightField> {
    let d = f.domain();
    if !d.contains(x, y) {
        return Err(Error::OutsideDomain(x as i64, y as i64));
    }
    let i = d.index(x, y);
    if d.is_boundary(x, y) || cfg.active.as_ref().is_some_and(|m| !m[i]) {
        return Ok(f.clone());
    }
    let mut h = f.raw().to_vec();
    cfg.kernel().apply(&mut h, i, u);
    Ok(HeightField::from_raw(d.clone(), h))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub index: u64,
    /// Flat grid index of the updated vertex.
    pub site: u32,
    pub u: f64,
}

/// Poisson event stream keyed by (seed, epoch). Event i is a pure function of
/// the key and i; only the arrival time is a running sum.
#[derive(Clone, Debug)]
pub struct EventStream {
    rng: CounterRng,
    sites: Arc<[u32]>,
    rate: f64,
    next: u64,
    time: f64,
}

impl EventStream {
    pub fn new(seed: u64, epoch: u64, sites: Arc<[u32]>) -> Self {
        let rate = SITE_RATE * sites.len() as f64;
        EventStream { rng: CounterRng::new(seed, epoch), sites, rate, next: 0, time: 0.0 }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// (inter-arrival gap, site, uniform) of event `i`.
    #[inline]
    pub fn draw(&self, i: u64) -> (f64, u32, f64) {
        let gap = -self.rng.uniform(i, 0).ln() / self.rate;
        let site = self.sites[self.rng.below(i, 1, self.sites.len())];
        (gap, site, self.rng.uniform(i, 2))
    }
}

impl Iterator for EventStream {
    type Item = Event;

    #[inline]
    fn next(&mut self) -> Option<Event> {
        if self.sites.is_empty() {
            return None;
        }
        let (gap, site, u) = self.draw(self.next);
        self.time += gap;
        let ev = Event { time: self.time, index: self.next, site, u };
        self.next += 1;
        Some(ev)
    }
}

/// A running chain with a private working copy of the heights.
pub struct Chain {
    domain: Arc<HexDomain>,
    kernel: Kernel,
    h: Vec<i32>,
    stream: EventStream,
    pending: Option<Event>,
    time: f64,
    events: u64,
}

impl Chain {
    pub fn new(cfg: &ChainConfig, init: &HeightField) -> Result<Self> {
        cfg.validate()?;
        cfg.check_within(init)?;
        Ok(Chain {
            domain: cfg.domain.clone(),
            kernel: cfg.kernel(),
            h: init.raw().to_vec(),
            stream: EventStream::new(cfg.seed, 0, cfg.sites().into()),
            pending: None,
            time: 0.0,
            events: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn heights(&self) -> &[i32] {
        &self.h
    }

    pub fn state(&self) -> HeightField {
        HeightField::from_raw(self.domain.clone(), self.h.clone())
    }

    /// Process every event with time ≤ t.
    pub fn advance_to(&mut self, t: f64) {
        self.advance_with(t, |_, _, _| {});
    }

    /// As [`Chain::advance_to`], calling `obs(event, changed, heights)` after each event.
    pub fn advance_with(&mut self, t: f64, mut obs: impl FnMut(&Event, bool, &[i32])) {
        loop {
            let ev = match self.pending.take().or_else(|| self.stream.next()) {
                Some(ev) => ev,
                None => break,
            };
            if ev.time > t {
                self.pending = Some(ev);
                break;
            }
            let changed = self.kernel.apply(&mut self.h, ev.site as usize, ev.u);
            self.events += 1;
            obs(&ev, changed, &self.h);
        }
        self.time = self.time.max(t);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: HeightField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub q: f64,
    pub scale: f64,
    pub constraints_hash: u64,
    pub horizon: f64,
    pub events: u64,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn last(&self) -> &HeightField {
        &self.snapshots.last().expect("trajectory has a snapshot").field
    }
}

fn snapshot_times(horizon: f64, times: &[f64]) -> Result<Vec<f64>> {
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::Invalid(format!("horizon {horizon}")));
    }
    let mut ts = vec![0.0];
    for &t in times {
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::Invalid(format!("snapshot time {t} outside [0, {horizon}]")));
        }
        ts.push(t);
    }
    ts.push(horizon);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    Ok(ts)
}

/// Run the chain from `init` up to `horizon`, recording the state at 0,
/// at each requested time and at the horizon.
pub fn run(cfg: &ChainConfig, init: &HeightField, horizon: f64, times: &[f64]) -> Result<Trajectory> {
    let ts = snapshot_times(horizon, times)?;
    let mut chain = Chain::new(cfg, init)?;
    let mut snapshots = Vec::with_capacity(ts.len());
    for t in ts {
        chain.advance_to(t);
        snapshots.push(Snapshot { time: t, field: chain.state() });
    }
    Ok(Trajectory {
        seed: cfg.seed,
        q: cfg.q,
        scale: cfg.scale,
        constraints_hash: cfg.constraints_hash(),
        horizon,
        events: chain.events(),
        snapshots,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingRun {
    pub bottom: HeightField,
    pub top: HeightField,
    pub coalescence_time: Option<f64>,
    pub events: u64,
    /// Number of per-event order checks performed.
    pub order_checks: u64,
}

/// Run two chains from `lower ≤ upper`, checking the order after every event.
/// With equal seeds both chains read one stream; with different seeds they
/// read independent streams, which is only useful as a negative control.
pub fn coupled_run(
    cfg_lower: &ChainConfig,
    cfg_upper: &ChainConfig,
    lower: &HeightField,
    upper: &HeightField,
    horizon: f64,
    stop_at_coalescence: bool,
) -> Result<CouplingRun> {
    cfg_lower.validate()?;
    cfg_upper.validate()?;
    cfg_lower.check_within(lower)?;
    cfg_upper.check_within(upper)?;
    if lower.domain() != upper.domain() || cfg_lower.domain != cfg_upper.domain {
        return Err(Error::DomainMismatch);
    }
    if !lower.leq(upper) {
        return Err(Error::Constraint("initial pair is not ordered".into()));
    }
    let d = lower.domain().clone();
    let (kl, ku) = (cfg_lower.kernel(), cfg_upper.kernel());
    let mut lo = lower.raw().to_vec();
    let mut hi = upper.raw().to_vec();
    let mut diff = lo.iter().zip(&hi).filter(|(a, b)| a != b).count();
    let mut coalescence = (diff == 0).then_some(0.0);
    let (mut events, mut checks) = (0u64, 0u64);

    let shared = cfg_lower.seed == cfg_upper.seed && cfg_lower.sites() == cfg_upper.sites();
    let mut s_lo = EventStream::new(cfg_lower.seed, 0, cfg_lower.sites().into()).peekable();
    let mut s_hi = EventStream::new(cfg_upper.seed, 0, cfg_upper.sites().into()).peekable();

    loop {
        if stop_at_coalescence && coalescence.is_some() {
            break;
        }
        let t_lo = s_lo.peek().map_or(f64::INFINITY, |e| e.time);
        let t_hi = s_hi.peek().map_or(f64::INFINITY, |e| e.time);
        let (ev, which) = if shared {
            let e = s_lo.next();
            s_hi.next();
            (e, 2)
        } else if t_lo <= t_hi {
            (s_lo.next(), 0)
        } else {
            (s_hi.next(), 1)
        };
        let Some(ev) = ev else { break };
        if ev.time > horizon {
            break;
        }
        let i = ev.site as usize;
        let before = lo[i] != hi[i];
        if which != 1 {
            kl.apply(&mut lo, i, ev.u);
        }
        if which != 0 {
            ku.apply(&mut hi, i, ev.u);
        }
        events += 1;
        checks += 1;
        if lo[i] > hi[i] {
            let (x, y) = d.vertex(i);
            return Err(Error::OrderViolation { time: ev.time, x: x as i64, y: y as i64 });
        }
        let after = lo[i] != hi[i];
        match (before, after) {
            (true, false) => diff -= 1,
            (false, true) => diff += 1,
            _ => {}
        }
        if diff == 0 && coalescence.is_none() {
            coalescence = Some(ev.time);
        } else if diff > 0 {
            coalescence = None;
        }
    }
    Ok(CouplingRun {
        bottom: HeightField::from_raw(d.clone(), lo),
        top: HeightField::from_raw(d, hi),
        coalescence_time: coalescence,
        events,
        order_checks: checks,
    })
}

/// Starting pair for coupling: the ceiling (else the maximal tiling) on top
/// and the floor (else the minimal tiling) below.
pub fn clipped_extremes(cfg: &ChainConfig) -> (HeightField, HeightField) {
    let (min, max) = extreme_tilings(&cfg.domain);
    (cfg.floor.clone().unwrap_or(min), cfg.ceiling.clone().unwrap_or(max))
}

/// Evolve the clipped extremes under one stream until they meet or `horizon` passes.
pub fn grand_coupling(cfg: &ChainConfig, horizon: f64) -> Result<CouplingRun> {
    let (min, max) = clipped_extremes(cfg);
    coupled_run(cfg, cfg, &min, &max, horizon, true)
}

/// Length of CFTP epoch k; epoch k covers [−B_{k+1}, −B_k) with B_0 = 0, B_k = 2^{k−1}.
pub fn epoch_length(k: u32) -> f64 {
    if k == 0 {
        1.0
    } else {
        2f64.powi(k as i32 - 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CftpOutcome {
    pub field: HeightField,
    /// Number of epochs in the successful round.
    pub epochs: u32,
    /// Start time −T of the successful round.
    pub start: f64,
    /// Events processed over all rounds, per chain.
    pub events: u64,
}

/// Coupling from the past with doubling horizons. Epoch k always replays the
/// stream keyed by (seed, k), so earlier randomness is reused verbatim.
pub fn cftp(cfg: &ChainConfig, max_epochs: u32) -> Result<CftpOutcome> {
    cfg.validate()?;
    let kernel = cfg.kernel();
    let sites: Arc<[u32]> = cfg.sites().into();
    let (min, max) = clipped_extremes(cfg);
    let mut total = 0u64;
    for k_max in 0..max_epochs {
        let mut lo = min.raw().to_vec();
        let mut hi = max.raw().to_vec();
        let mut diff = lo.iter().zip(&hi).filter(|(a, b)| a != b).count();
        for k in (0..=k_max).rev() {
            let len = epoch_length(k);
            for ev in EventStream::new(cfg.seed, k as u64, sites.clone()) {
                if ev.time >= len {
                    break;
                }
                let i = ev.site as usize;
                total += 1;
                if diff == 0 {
                    kernel.apply(&mut lo, i, ev.u);
                    continue;
                }
                let before = lo[i] != hi[i];
                kernel.apply(&mut lo, i, ev.u);
                kernel.apply(&mut hi, i, ev.u);
                let after = lo[i] != hi[i];
                if before && !after {
                    diff -= 1;
                } else if after && !before {
                    diff += 1;
                }
            }
        }
        if diff == 0 {
            let start = if k_max == 0 { 1.0 } else { 2f64.powi(k_max as i32) };
            return Ok(CftpOutcome {
                field: HeightField::from_raw(cfg.domain.clone(), lo),
                epochs: k_max + 1,
                start: -start,
                events: total,
            });
        }
    }
    Err(Error::CftpCap(max_epochs))
}

/// Exact sample from the stationary law of `cfg`.
pub fn cftp_sample(cfg: &ChainConfig) -> Result<HeightField> {
    cftp(cfg, DEFAULT_MAX_EPOCHS).map(|o| o.field)
}

#[derive(Clone, Debug)]
pub struct CensorInterval {
    pub start: f64,
    pub end: f64,
    /// Sites allowed to update; `None` means all.
    pub region: Option<Vec<bool>>,
    pub floor: Option<HeightField>,
    pub ceiling: Option<HeightField>,
}

#[derive(Clone, Debug, Default)]
pub struct CensorSchedule {
    pub intervals: Vec<CensorInterval>,
}

impl CensorSchedule {
    pub fn horizon(&self) -> f64 {
        self.intervals.last().map_or(0.0, |i| i.end)
    }

    pub fn validate(&self, domain: &Arc<HexDomain>) -> Result<()> {
        let mut t = 0.0;
        for (n, iv) in self.intervals.iter().enumerate() {
            if iv.start != t {
                let what = if iv.start > t { "gap" } else { "overlap" };
                return Err(Error::Schedule(format!("{what} before interval {n} at t={}", iv.start)));
            }
            if !(iv.end > iv.start) || !iv.end.is_finite() {
                return Err(Error::Schedule(format!("interval {n} is empty or unbounded")));
            }
            if iv.region.as_ref().is_some_and(|r| r.len() != domain.width() * domain.rows()) {
                return Err(Error::Schedule(format!("interval {n} region has wrong size")));
            }
            for c in [&iv.floor, &iv.ceiling].into_iter().flatten() {
                if c.domain() != domain {
                    return Err(Error::DomainMismatch);
                }
            }
            t = iv.end;
        }
        Ok(())
    }
}

/// Censored dynamics: during interval i only sites of Λ_i update, under the
/// tighter of the interval's and the chain's floor and ceiling. Uses the
/// same event stream as [`run`].
pub fn censored_run(cfg: &ChainConfig, sched: &CensorSchedule, init: &HeightField, times: &[f64]) -> Result<Trajectory> {
    cfg.validate()?;
    sched.validate(&cfg.domain)?;
    let horizon = sched.horizon();
    let ts = snapshot_times(horizon, times)?;
    let base = cfg.kernel();
    let kernels: Vec<Kernel> = sched
        .intervals
        .iter()
        .map(|iv| {
            let mut k = base.clone();
            if let Some(f) = &iv.floor {
                k.floor.iter_mut().zip(f.raw()).for_each(|(a, b)| *a = (*a).max(*b));
            }
            if let Some(c) = &iv.ceiling {
                k.ceil.iter_mut().zip(c.raw()).for_each(|(a, b)| *a = (*a).min(*b));
            }
            k
        })
        .collect();
    cfg.check_within(init)?;
    if let Some(first) = sched.intervals.first() {
        let k = &kernels[0];
        if init.raw().iter().enumerate().any(|(i, &v)| v < k.floor[i] || v > k.ceil[i]) {
            return Err(Error::Constraint(format!("initial state violates interval starting at {}", first.start)));
        }
    }
    let mut h = init.raw().to_vec();
    let mut stream = EventStream::new(cfg.seed, 0, cfg.sites().into()).peekable();
    let mut snapshots = Vec::new();
    let mut events = 0u64;
    let mut iv = 0usize;
    for t in ts {
        while let Some(ev) = stream.peek().copied() {
            if ev.time > t || ev.time >= horizon {
                break;
            }
            stream.next();
            events += 1;
            while sched.intervals[iv].end <= ev.time {
                iv += 1;
            }
            let i = ev.site as usize;
            if sched.intervals[iv].region.as_ref().is_some_and(|r| !r[i]) {
                continue;
            }
            kernels[iv].apply(&mut h, i, ev.u);
        }
        snapshots.push(Snapshot { time: t, field: HeightField::from_raw(cfg.domain.clone(), h.clone()) });
    }
    Ok(Trajectory {
        seed: cfg.seed,
        q: cfg.q,
        scale: cfg.scale,
        constraints_hash: cfg.constraints_hash(),
        horizon,
        events,
        snapshots,
    })
}

/// Trajectory as text: `# key=value` header lines, then for every snapshot a
/// `t=<time>` line followed by a height grid.
pub fn trajectory_to_text(tr: &Trajectory) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# seed={}", tr.seed);
    let _ = writeln!(s, "# q={:?}", tr.q);
    let _ = writeln!(s, "# scale={:?}", tr.scale);
    let _ = writeln!(s, "# constraints={:016x}", tr.constraints_hash);
    let _ = writeln!(s, "# T={:?}", tr.horizon);
    let _ = writeln!(s, "# events={}", tr.events);
    for snap in &tr.snapshots {
        let _ = writeln!(s, "t={:?}", snap.time);
        s.push_str(&to_grid_text(&snap.field));
    }
    s
}

pub fn trajectory_from_text(text: &str) -> Result<Trajectory> {
    let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
    let lines: Vec<&str> = text.strip_suffix('\n').unwrap_or(text).split('\n').collect();
    let mut meta = std::collections::BTreeMap::new();
    let mut n = 0;
    while n < lines.len() && lines[n].starts_with("# ") {
        let (k, v) = lines[n][2..].split_once('=').ok_or_else(|| perr(n + 1, "bad header"))?;
        meta.insert(k.to_string(), v.to_string());
        n += 1;
    }
    let get = |k: &str| meta.get(k).ok_or_else(|| perr(0, &format!("missing {k}")));
    let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| perr(0, &format!("bad {k}"))) };
    let int = |k: &str| -> Result<u64> { get(k)?.parse().map_err(|_| perr(0, &format!("bad {k}"))) };
    let hash = u64::from_str_radix(get("constraints")?, 16).map_err(|_| perr(0, "bad constraints hash"))?;
    let mut snapshots = Vec::new();
    while n < lines.len() {
        let t: f64 = lines[n]
            .strip_prefix("t=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| perr(n + 1, "expected t=<time>"))?;
        let (field, used) = parse_grid_lines(&lines[n + 1..], n + 2)?;
        snapshots.push(Snapshot { time: t, field });
        n += 1 + used;
    }
    Ok(Trajectory {
        seed: int("seed")?,
        q: num("q")?,
        scale: num("scale")?,
        constraints_hash: hash,
        horizon: num("T")?,
        events: int("events")?,
        snapshots,
    })
}
