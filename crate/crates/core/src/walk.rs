//! Simple symmetric random walk on Z^d with incremental occupation
//! bookkeeping.
//!
//! Sites are bit-packed into a `u128` key (each coordinate gets
//! `min(64, 128/d)` bits, stored with a bias) and the occupation map is an
//! open-addressing table with linear probing over those keys. A step costs
//! one probe sequence, so whole walks run in O(n) expected time.
//!
//! The starting point `S_0` is not a visit: counts start with `S_1`.

use rand::RngCore;

use crate::error::{LabError, Result};
use crate::rng::{self, Purpose};

/// Largest supported lattice dimension.
pub const MAX_DIMENSION: usize = 8;

/// A lattice site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub coords: Vec<i64>,
}

impl Site {
    pub fn new(coords: Vec<i64>) -> Self {
        Site { coords }
    }

    pub fn origin(dim: usize) -> Self {
        Site { coords: vec![0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl From<i64> for Site {
    fn from(x: i64) -> Self {
        Site { coords: vec![x] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkConfig {
    pub dimension: usize,
    pub steps: u64,
    pub seed: u64,
    /// Replicate index; selects the random stream under `seed`.
    pub replicate: u64,
    /// Record the starting site as a visit. Off for every real run; it only
    /// exists to demonstrate that the diagnostics catch the off-by-one.
    pub count_initial_site: bool,
}

impl WalkConfig {
    pub fn new(dimension: usize, steps: u64, seed: u64) -> Self {
        WalkConfig { dimension, steps, seed, replicate: 0, count_initial_site: false }
    }

    pub fn replicate(mut self, replicate: u64) -> Self {
        self.replicate = replicate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_dimension(self.dimension)
    }
}

pub(crate) fn check_dimension(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIMENSION {
        return Err(LabError::UnsupportedDimension {
            dim,
            reason: "walk dimension must be between 1 and 8",
        });
    }
    Ok(())
}

/// How coordinates are packed into a key.
#[derive(Debug, Clone, Copy)]
pub struct KeyLayout {
    dim: usize,
    bits: u32,
    limit: i64,
}

impl KeyLayout {
    pub fn new(dim: usize) -> Result<Self> {
        check_dimension(dim)?;
        let bits = (128 / dim as u32).min(64);
        Ok(KeyLayout { dim, bits, limit: (1i64 << (bits - 2).min(62)) - 1 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest representable `|coordinate|`.
    pub fn limit(&self) -> i64 {
        self.limit
    }

    #[inline(always)]
    fn bias(&self) -> u128 {
        1u128 << (self.bits - 1)
    }

    #[inline(always)]
    fn unit(&self, axis: usize) -> u128 {
        1u128 << (axis as u32 * self.bits)
    }

    pub fn pack(&self, coords: &[i64]) -> Result<u128> {
        if coords.len() != self.dim {
            return Err(LabError::Input(format!(
                "site has {} coordinates, walk dimension is {}",
                coords.len(),
                self.dim
            )));
        }
        let mut key = 0u128;
        for (axis, &c) in coords.iter().enumerate() {
            if c.abs() > self.limit {
                return Err(LabError::LatticeOverflow(self.limit));
            }
            let field = (self.bias() as i128 + c as i128) as u128;
            key |= field << (axis as u32 * self.bits);
        }
        Ok(key)
    }

    pub fn unpack(&self, key: u128) -> Site {
        let mask = if self.bits == 128 { u128::MAX } else { (1u128 << self.bits) - 1 };
        let coords = (0..self.dim)
            .map(|axis| {
                let field = (key >> (axis as u32 * self.bits)) & mask;
                (field as i128 - self.bias() as i128) as i64
            })
            .collect();
        Site { coords }
    }
}

/// Aggregated history of one site.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SiteStats {
    pub count: u64,
    pub charge_sum: f64,
    pub charge_sq_sum: f64,
}

#[derive(Clone, Copy)]
struct Slot {
    key: u128,
    stats: SiteStats,
}

const EMPTY: u128 = 0;

/// Site -> (visit count, charge sum, squared-charge sum).
#[derive(Clone)]
pub struct OccupancyMap {
    layout: KeyLayout,
    slots: Vec<Slot>,
    len: usize,
    shift: u32,
    total: u64,
}

impl std::fmt::Debug for OccupancyMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OccupancyMap")
            .field("dim", &self.layout.dim)
            .field("sites", &self.len)
            .field("total_count", &self.total)
            .finish()
    }
}

#[inline(always)]
fn hash(key: u128) -> u64 {
    let mut z = (key as u64) ^ ((key >> 64) as u64).rotate_left(29);
    z = (z ^ (z >> 32)).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    z = (z ^ (z >> 32)).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    z ^ (z >> 32)
}

impl OccupancyMap {
    pub fn new(dim: usize) -> Result<Self> {
        Ok(Self::with_layout(KeyLayout::new(dim)?, 64))
    }

    fn with_layout(layout: KeyLayout, capacity: usize) -> Self {
        let cap = capacity.next_power_of_two().max(16);
        OccupancyMap {
            layout,
            slots: vec![Slot { key: EMPTY, stats: SiteStats::default() }; cap],
            len: 0,
            shift: 64 - cap.trailing_zeros(),
            total: 0,
        }
    }

    pub fn layout(&self) -> KeyLayout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    /// Number of distinct sites recorded.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sum of visit counts.
    pub fn total_count(&self) -> u64 {
        self.total
    }

    /// Slot index of `key`, inserting an empty record if absent.
    #[inline(always)]
    fn slot(&mut self, key: u128) -> usize {
        if 2 * (self.len + 1) > self.slots.len() {
            self.grow();
        }
        let mask = self.slots.len() - 1;
        let mut i = (hash(key) >> self.shift) as usize;
        loop {
            let k = self.slots[i].key;
            if k == key {
                return i;
            }
            if k == EMPTY {
                self.slots[i].key = key;
                self.len += 1;
                return i;
            }
            i = (i + 1) & mask;
        }
    }

    fn find(&self, key: u128) -> Option<usize> {
        let mask = self.slots.len() - 1;
        let mut i = (hash(key) >> self.shift) as usize;
        loop {
            let k = self.slots[i].key;
            if k == key {
                return Some(i);
            }
            if k == EMPTY {
                return None;
            }
            i = (i + 1) & mask;
        }
    }

    fn grow(&mut self) {
        let mut bigger = Self::with_layout(self.layout, self.slots.len() * 2);
        for s in self.slots.iter().filter(|s| s.key != EMPTY) {
            let i = bigger.slot(s.key);
            bigger.slots[i].stats = s.stats;
        }
        bigger.total = self.total;
        *self = bigger;
    }

    #[inline(always)]
    fn deposit(&mut self, slot: usize, charge: f64) {
        let s = &mut self.slots[slot].stats;
        s.count += 1;
        s.charge_sum += charge;
        s.charge_sq_sum += charge * charge;
        self.total += 1;
    }

    /// Record one visit to `site` carrying `charge`; returns the site's
    /// statistics from before the visit.
    pub fn record(&mut self, site: &Site, charge: f64) -> Result<SiteStats> {
        let key = self.layout.pack(&site.coords)?;
        Ok(self.record_key(key, charge))
    }

    #[inline(always)]
    pub(crate) fn record_key(&mut self, key: u128, charge: f64) -> SiteStats {
        let slot = self.slot(key);
        let prior = self.slots[slot].stats;
        self.deposit(slot, charge);
        prior
    }

    pub fn get(&self, site: &Site) -> Option<SiteStats> {
        let key = self.layout.pack(&site.coords).ok()?;
        self.find(key).map(|i| self.slots[i].stats)
    }

    /// All recorded sites, in table order.
    pub fn iter(&self) -> impl Iterator<Item = (Site, SiteStats)> + '_ {
        self.slots
            .iter()
            .filter(|s| s.key != EMPTY)
            .map(move |s| (self.layout.unpack(s.key), s.stats))
    }

    /// Σ_x count(x)^2.
    pub fn sum_count_sq(&self) -> f64 {
        self.slots
            .iter()
            .filter(|s| s.key != EMPTY)
            .map(|s| (s.stats.count as f64).powi(2))
            .sum()
    }

    /// Number of pairs i < j with S_i = S_j, i.e. Σ_x c(c-1)/2.
    pub fn intersection_count(&self) -> u64 {
        self.slots
            .iter()
            .filter(|s| s.key != EMPTY)
            .map(|s| s.stats.count * s.stats.count.saturating_sub(1) / 2)
            .sum()
    }
}

/// What the per-step visitor sees: the step index, the new site and that
/// site's statistics before this visit is recorded.
#[derive(Debug, Clone, Copy)]
pub struct Step<'a> {
    pub k: u64,
    pub site: &'a [i64],
    pub prior: SiteStats,
}

/// Current lattice position with its packed key.
#[derive(Debug, Clone)]
pub struct Position {
    layout: KeyLayout,
    coords: [i64; MAX_DIMENSION],
    key: u128,
}

impl Position {
    pub fn origin(layout: KeyLayout) -> Self {
        let key = layout.pack(&vec![0; layout.dim]).expect("origin is representable");
        Position { layout, coords: [0; MAX_DIMENSION], key }
    }

    /// Move along direction `dir` in `0..2d`: axis `dir / 2`, positive when
    /// `dir` is even.
    #[inline(always)]
    pub fn step(&mut self, dir: usize) -> Result<()> {
        let axis = dir >> 1;
        let c = &mut self.coords[axis];
        if dir & 1 == 0 {
            *c += 1;
            self.key += self.layout.unit(axis);
        } else {
            *c -= 1;
            self.key -= self.layout.unit(axis);
        }
        if c.abs() > self.layout.limit {
            return Err(LabError::LatticeOverflow(self.layout.limit));
        }
        Ok(())
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.layout.dim]
    }

    pub fn key(&self) -> u128 {
        self.key
    }
}

/// Run `cfg.steps` uniform nearest-neighbour steps from the origin.
///
/// `visitor` is called once per step before the map is updated and returns
/// the charge deposited at that step's site. Each step consumes exactly
/// one 64-bit draw from the walk stream.
pub fn simulate_walk<F>(cfg: &WalkConfig, mut visitor: F) -> Result<OccupancyMap>
where
    F: FnMut(&Step<'_>) -> f64,
{
    cfg.validate()?;
    let layout = KeyLayout::new(cfg.dimension)?;
    let mut map = OccupancyMap::with_layout(layout, 64);
    let mut pos = Position::origin(layout);
    if cfg.count_initial_site {
        map.record_key(pos.key, 0.0);
    }
    let mut rng = rng::stream(cfg.seed, cfg.replicate, Purpose::Walk);
    let directions = 2 * cfg.dimension as u64;
    for k in 1..=cfg.steps {
        pos.step(rng::below(rng.next_u64(), directions) as usize)?;
        let slot = map.slot(pos.key);
        let prior = map.slots[slot].stats;
        let q = visitor(&Step { k, site: pos.coords(), prior });
        map.deposit(slot, q);
    }
    Ok(map)
}

/// Same bookkeeping over an explicit sequence of sites `S_1, S_2, ...`
/// (no nearest-neighbour check; any site sequence is accepted).
pub fn replay_sites<F>(dim: usize, sites: &[Site], mut visitor: F) -> Result<OccupancyMap>
where
    F: FnMut(&Step<'_>) -> f64,
{
    let layout = KeyLayout::new(dim)?;
    let mut map = OccupancyMap::with_layout(layout, sites.len());
    for (i, site) in sites.iter().enumerate() {
        let key = layout.pack(&site.coords)?;
        let slot = map.slot(key);
        let prior = map.slots[slot].stats;
        let q = visitor(&Step { k: i as u64 + 1, site: &site.coords, prior });
        map.deposit(slot, q);
    }
    Ok(map)
}

/// The sites `S_1..S_n` of the walk `cfg` would produce.
pub fn record_path(cfg: &WalkConfig) -> Result<Vec<Site>> {
    let mut path = Vec::with_capacity(cfg.steps as usize);
    simulate_walk(cfg, |s| {
        path.push(Site::new(s.site.to_vec()));
        0.0
    })?;
    Ok(path)
}

/// Sites reached by following explicit direction indices from the origin.
pub fn path_from_directions(dim: usize, dirs: &[usize]) -> Result<Vec<Site>> {
    let mut pos = Position::origin(KeyLayout::new(dim)?);
    dirs.iter()
        .map(|&d| {
            if d >= 2 * dim {
                return Err(LabError::Input(format!("direction {d} out of range for d={dim}")));
            }
            pos.step(d)?;
            Ok(Site::new(pos.coords().to_vec()))
        })
        .collect()
}

/// Dense visit counts `L_n^x` of a one-dimensional walk.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LocalTimeField {
    /// `counts[i]` holds site `i - origin_offset`.
    pub origin_offset: i64,
    pub counts: Vec<u64>,
}

impl LocalTimeField {
    pub fn get(&self, x: i64) -> u64 {
        let i = x + self.origin_offset;
        if i < 0 {
            return 0;
        }
        self.counts.get(i as usize).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Σ_x (L^x)^2.
    pub fn sum_sq(&self) -> f64 {
        self.counts.iter().map(|&c| (c as f64) * (c as f64)).sum()
    }

    /// Nonzero sites as `(x, L^x)`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| (i as i64 - self.origin_offset, c))
    }

    /// Number of sites with a nonzero count.
    pub fn support_size(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    fn bump(&mut self, x: i64) {
        if self.counts.is_empty() {
            self.counts = vec![0; 64];
            self.origin_offset = 32;
        }
        let mut i = x + self.origin_offset;
        if i < 0 || i as usize >= self.counts.len() {
            let extra = self.counts.len() as i64;
            let mut grown = vec![0u64; self.counts.len() * 3];
            grown[extra as usize..extra as usize + self.counts.len()].copy_from_slice(&self.counts);
            self.counts = grown;
            self.origin_offset += extra;
            i = x + self.origin_offset;
        }
        self.counts[i as usize] += 1;
    }
}

/// Local times `L_n^x` of a one-dimensional site sequence.
pub fn local_time_field(path: &[Site]) -> Result<LocalTimeField> {
    let mut field = LocalTimeField::default();
    for site in path {
        if site.dim() != 1 {
            return Err(LabError::UnsupportedDimension {
                dim: site.dim(),
                reason: "local time fields are one-dimensional",
            });
        }
        field.bump(site.coords[0]);
    }
    Ok(field)
}

/// Local-time field of a d=1 walk straight from the random stream, without
/// building the hash map. Consumes the walk stream exactly as
/// [`simulate_walk`] does, so the two agree site by site.
pub fn simulate_local_time_1d(steps: u64, seed: u64, replicate: u64, purpose: Purpose) -> LocalTimeField {
    let mut rng = rng::stream(seed, replicate, purpose);
    let mut field = LocalTimeField::default();
    let mut x = 0i64;
    // Pre-size for a few standard deviations of range.
    let reach = 8 * ((steps as f64).sqrt() as usize) + 64;
    field.counts = vec![0; 2 * reach + 1];
    field.origin_offset = reach as i64;
    for _ in 0..steps {
        x += if rng::below(rng.next_u64(), 2) == 0 { 1 } else { -1 };
        let i = x + field.origin_offset;
        if i < 0 || i as usize >= field.counts.len() {
            field.bump(x);
        } else {
            field.counts[i as usize] += 1;
        }
    }
    field
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sites(xs: &[i64]) -> Vec<Site> {
        xs.iter().map(|&x| Site::from(x)).collect()
    }

    #[test]
    fn forced_three_step_path() {
        // +1, -1, +1
        let path = path_from_directions(1, &[0, 1, 0]).unwrap();
        assert_eq!(path, sites(&[1, 0, 1]));
        let map = replay_sites(1, &path, |_| 1.0).unwrap();
        assert_eq!(map.get(&Site::from(1)).unwrap().count, 2);
        assert_eq!(map.get(&Site::from(0)).unwrap().count, 1);
        assert_eq!(map.total_count(), 3);
        assert_eq!(map.intersection_count(), 1);
    }

    #[test]
    fn visitor_sees_prior_state() {
        let mut priors = Vec::new();
        replay_sites(1, &sites(&[1, 0, 1]), |s| {
            priors.push((s.k, s.prior.count, s.prior.charge_sum));
            2.0
        })
        .unwrap();
        assert_eq!(priors, vec![(1, 0, 0.0), (2, 0, 0.0), (3, 1, 2.0)]);
    }

    #[test]
    fn empty_walk() {
        let map = simulate_walk(&WalkConfig::new(1, 0, 1), |_| 0.0).unwrap();
        assert!(map.is_empty());
        assert_eq!(map.total_count(), 0);
    }

    #[test]
    fn counts_sum_to_steps_in_d3() {
        let map = simulate_walk(&WalkConfig::new(3, 1_000_000, 99), |_| 1.0).unwrap();
        assert_eq!(map.total_count(), 1_000_000);
        let summed: u64 = map.iter().map(|(_, s)| s.count).sum();
        assert_eq!(summed, 1_000_000);
        for (_, s) in map.iter() {
            assert_eq!(s.charge_sq_sum, s.count as f64);
        }
    }

    #[test]
    fn walk_is_deterministic_given_seed() {
        let a = record_path(&WalkConfig::new(2, 500, 17)).unwrap();
        let b = record_path(&WalkConfig::new(2, 500, 17)).unwrap();
        let c = record_path(&WalkConfig::new(2, 500, 18)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn steps_are_nearest_neighbour() {
        let path = record_path(&WalkConfig::new(4, 2000, 3)).unwrap();
        let mut prev = Site::origin(4);
        for s in path {
            let l1: i64 = s.coords.iter().zip(&prev.coords).map(|(a, b)| (a - b).abs()).sum();
            assert_eq!(l1, 1);
            prev = s;
        }
    }

    #[test]
    fn initial_site_flag_adds_one_visit_to_origin() {
        let mut cfg = WalkConfig::new(2, 100, 4);
        let plain = simulate_walk(&cfg, |_| 0.0).unwrap();
        cfg.count_initial_site = true;
        let flagged = simulate_walk(&cfg, |_| 0.0).unwrap();
        assert_eq!(flagged.total_count(), plain.total_count() + 1);
        let origin = Site::origin(2);
        let base = plain.get(&origin).map_or(0, |s| s.count);
        assert_eq!(flagged.get(&origin).unwrap().count, base + 1);
    }

    #[test]
    fn local_time_of_hand_path() {
        let f = local_time_field(&sites(&[1, 0, 1])).unwrap();
        assert_eq!(f.get(1), 2);
        assert_eq!(f.get(0), 1);
        assert_eq!(f.sum_sq(), 5.0);
        assert_eq!(f.total(), 3);
        let empty = local_time_field(&[]).unwrap();
        assert_eq!(empty.total(), 0);
        assert_eq!(empty.get(0), 0);
    }

    #[test]
    fn local_time_rejects_higher_dimension() {
        let err = local_time_field(&[Site::new(vec![0, 1])]).unwrap_err();
        assert!(matches!(err, LabError::UnsupportedDimension { dim: 2, .. }));
    }

    #[test]
    fn dense_and_hashed_local_times_agree() {
        for rep in 0..5 {
            let cfg = WalkConfig::new(1, 20_000, 77).replicate(rep);
            let map = simulate_walk(&cfg, |_| 0.0).unwrap();
            let dense = simulate_local_time_1d(20_000, 77, rep, Purpose::Walk);
            let from_path = local_time_field(&record_path(&cfg).unwrap()).unwrap();
            assert_eq!(dense.iter().collect::<Vec<_>>(), from_path.iter().collect::<Vec<_>>());
            for (site, stats) in map.iter() {
                assert_eq!(dense.get(site.coords[0]), stats.count);
            }
            assert_eq!(dense.support_size(), map.len());
        }
    }

    #[test]
    fn self_intersection_exponent_is_three_halves() {
        // Median of Σ(L^x)^2 / n^{3/2} over 200 walks of 10^5 steps.
        let n = 100_000u64;
        let ratios: Vec<f64> = (0..200)
            .map(|r| simulate_local_time_1d(n, 2024, r, Purpose::Walk).sum_sq() / (n as f64).powf(1.5))
            .collect();
        let med = crate::stats::median(&ratios).unwrap();
        assert!((0.5..=2.0).contains(&med), "median = {med}");
    }

    #[test]
    fn key_layout_roundtrip_extremes() {
        for d in 1..=MAX_DIMENSION {
            let layout = KeyLayout::new(d).unwrap();
            let lim = layout.limit();
            let coords: Vec<i64> = (0..d).map(|i| if i % 2 == 0 { lim } else { -lim }).collect();
            let key = layout.pack(&coords).unwrap();
            assert_ne!(key, EMPTY);
            assert_eq!(layout.unpack(key).coords, coords);
            let mut too_far = coords.clone();
            too_far[0] = lim + 1;
            assert!(layout.pack(&too_far).is_err());
        }
        assert!(KeyLayout::new(0).is_err());
        assert!(KeyLayout::new(MAX_DIMENSION + 1).is_err());
    }

    proptest! {
        #[test]
        fn map_matches_naive_counting(dim in 1usize..=4, dirs in prop::collection::vec(0usize..8, 0..300)) {
            let dirs: Vec<usize> = dirs.into_iter().map(|d| d % (2 * dim)).collect();
            let path = path_from_directions(dim, &dirs).unwrap();
            let map = replay_sites(dim, &path, |s| s.k as f64).unwrap();
            prop_assert_eq!(map.total_count(), path.len() as u64);
            let mut naive = std::collections::BTreeMap::<Site, (u64, f64)>::new();
            for (i, s) in path.iter().enumerate() {
                let e = naive.entry(s.clone()).or_default();
                e.0 += 1;
                e.1 += (i + 1) as f64;
            }
            prop_assert_eq!(naive.len(), map.len());
            for (site, (c, q)) in naive {
                let got = map.get(&site).unwrap();
                prop_assert_eq!(got.count, c);
                prop_assert_eq!(got.charge_sum, q);
            }
        }
    }
}
