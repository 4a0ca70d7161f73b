//! The Hamiltonian `H_n`, its Dambis–Dubins–Schwarz clock `Ξ_n` and the
//! pieces of the clock's decomposition, all updated in one pass.
//!
//! When step `k` lands on `z = S_k`, the site's prior statistics are the
//! visit count `c`, the charge sum `C` and the squared-charge sum `D`
//! accumulated over `S_1..S_{k-1}`. With charge `q` and duration `dt`:
//!
//! ```text
//! H   += q C          I  += c          V  += C²        Ξ  += C² dt
//! M   += D - c        N  += D (dt-1)   Ξ1 += D dt      Ξ2 += (C² - D) dt
//! b   += (C² - D)/2   a  += (C² - D)/2 · (dt-1)
//! ```
//!
//! so that `Ξ1 = I + M + N`, `Ξ = Ξ1 + Ξ2` and `Ξ2 = 2(a + b)`.

use std::io::Write;

use crate::charges::{ChargeFeed, ChargeStream};
use crate::error::{LabError, Result};
use crate::stats::CompensatedSum;
use crate::walk::{replay_sites, simulate_walk, OccupancyMap, Site, SiteStats, WalkConfig};

/// Terms of the clock decomposition after `n` steps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct XiDecomposition {
    pub i_n: u64,
    pub m_n: f64,
    pub n_n: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub a_n: f64,
    pub b_n: f64,
}

impl XiDecomposition {
    /// Largest relative violation among the three algebraic identities,
    /// given the total clock `xi`.
    pub fn identity_residual(&self, xi: f64) -> f64 {
        let rel = |lhs: f64, rhs: f64| (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
        rel(self.xi1, self.i_n as f64 + self.m_n + self.n_n)
            .max(rel(xi, self.xi1 + self.xi2))
            .max(rel(self.xi2, 2.0 * (self.a_n + self.b_n)))
    }
}

/// One stored point of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Checkpoint {
    pub k: u64,
    pub h: f64,
    pub v: f64,
    pub xi: f64,
    pub i: u64,
    pub m: f64,
    pub n: f64,
    pub xi2: f64,
    /// max_{j<=k} |H_j|
    pub max_abs_h: f64,
}

/// Sorted set of step indices at which a trace is recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoints {
    ks: Vec<u64>,
}

impl Checkpoints {
    pub fn new(mut ks: Vec<u64>) -> Self {
        ks.sort_unstable();
        ks.dedup();
        Checkpoints { ks }
    }

    /// `0`, `n` and the rounded powers `ratio^j` in between.
    pub fn geometric(n: u64, ratio: f64) -> Result<Self> {
        if !(ratio > 1.0) {
            return Err(LabError::Parameter(format!("checkpoint ratio must exceed 1, got {ratio}")));
        }
        let mut ks = vec![0, n];
        let mut x = 1.0f64;
        while x <= n as f64 {
            ks.push(x.round() as u64);
            x *= ratio;
        }
        Ok(Checkpoints::new(ks))
    }

    /// Geometric with the default ratio 2^{1/4}.
    pub fn default_geometric(n: u64) -> Self {
        Checkpoints::geometric(n, 2f64.powf(0.25)).expect("ratio exceeds 1")
    }

    /// `2^lo, 2^{lo+1}, ..., 2^hi`.
    pub fn powers_of_two(lo: u32, hi: u32) -> Self {
        Checkpoints::new((lo..=hi).map(|e| 1u64 << e).collect())
    }

    pub fn every_step(n: u64) -> Self {
        Checkpoints { ks: (0..=n).collect() }
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.ks
    }
}

/// Checkpoints plus the final state of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTrace {
    pub checkpoints: Vec<Checkpoint>,
    pub last: Checkpoint,
    pub decomposition: XiDecomposition,
}

impl HamiltonianTrace {
    /// Checkpoint at step `k`, if recorded.
    pub fn at(&self, k: u64) -> Option<&Checkpoint> {
        self.checkpoints.binary_search_by_key(&k, |c| c.k).ok().map(|i| &self.checkpoints[i])
    }

    /// CSV rows `experiment,replicate,k,H,V,Xi,I,M,N,Xi2`.
    pub fn write_csv<W: Write>(&self, out: &mut W, experiment: &str, replicate: u64) -> std::io::Result<()> {
        for c in &self.checkpoints {
            writeln!(
                out,
                "{experiment},{replicate},{},{},{},{},{},{},{},{}",
                c.k, c.h, c.v, c.xi, c.i, c.m, c.n, c.xi2
            )?;
        }
        Ok(())
    }

    pub const CSV_HEADER: &'static str = "experiment,replicate,k,H,V,Xi,I,M,N,Xi2";
}

/// Running state of the fused update.
#[derive(Debug, Clone, Default)]
pub struct Accumulator {
    k: u64,
    h: CompensatedSum,
    i: u64,
    v: CompensatedSum,
    xi: CompensatedSum,
    m: CompensatedSum,
    n: CompensatedSum,
    xi1: CompensatedSum,
    xi2: CompensatedSum,
    a: CompensatedSum,
    b: CompensatedSum,
    max_abs_h: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Advance by one step that lands on a site with statistics `prior`.
    #[inline]
    pub fn push(&mut self, prior: &SiteStats, q: f64, dt: f64) {
        let c = prior.count as f64;
        let big_c = prior.charge_sum;
        let d = prior.charge_sq_sum;
        let c2 = big_c * big_c;
        let tau = c2 - d;
        self.k += 1;
        self.h.add(q * big_c);
        self.i += prior.count;
        self.v.add(c2);
        self.xi.add(c2 * dt);
        self.m.add(d - c);
        self.n.add(d * (dt - 1.0));
        self.xi1.add(d * dt);
        self.xi2.add(tau * dt);
        self.b.add(0.5 * tau);
        self.a.add(0.5 * tau * (dt - 1.0));
        self.max_abs_h = self.max_abs_h.max(self.h.value().abs());
    }

    pub fn steps(&self) -> u64 {
        self.k
    }

    pub fn h(&self) -> f64 {
        self.h.value()
    }

    pub fn xi(&self) -> f64 {
        self.xi.value()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            k: self.k,
            h: self.h.value(),
            v: self.v.value(),
            xi: self.xi.value(),
            i: self.i,
            m: self.m.value(),
            n: self.n.value(),
            xi2: self.xi2.value(),
            max_abs_h: self.max_abs_h,
        }
    }

    pub fn decomposition(&self) -> XiDecomposition {
        XiDecomposition {
            i_n: self.i,
            m_n: self.m.value(),
            n_n: self.n.value(),
            xi1: self.xi1.value(),
            xi2: self.xi2.value(),
            a_n: self.a.value(),
            b_n: self.b.value(),
        }
    }
}

/// Records checkpoints while an accumulator runs.
struct Recorder<'a> {
    ks: &'a [u64],
    next: usize,
    out: Vec<Checkpoint>,
}

impl<'a> Recorder<'a> {
    fn new(cp: &'a Checkpoints, acc: &Accumulator) -> Self {
        let mut r = Recorder { ks: cp.as_slice(), next: 0, out: Vec::with_capacity(cp.as_slice().len()) };
        r.observe(acc);
        r
    }

    #[inline]
    fn observe(&mut self, acc: &Accumulator) {
        while self.next < self.ks.len() && self.ks[self.next] <= acc.steps() {
            if self.ks[self.next] == acc.steps() {
                self.out.push(acc.checkpoint());
            }
            self.next += 1;
        }
    }

    fn finish(self, acc: &Accumulator) -> HamiltonianTrace {
        HamiltonianTrace { checkpoints: self.out, last: acc.checkpoint(), decomposition: acc.decomposition() }
    }
}

fn check_lengths(sites: &[Site], charges: &ChargeStream) -> Result<()> {
    if sites.len() != charges.len() {
        return Err(LabError::Input(format!(
            "walk has {} steps but {} charges were supplied",
            sites.len(),
            charges.len()
        )));
    }
    Ok(())
}

/// Trace of `H, V, Ξ, I` (and the decomposition) along an explicit walk.
pub fn hamiltonian_path(sites: &[Site], charges: &ChargeStream, checkpoints: &Checkpoints) -> Result<HamiltonianTrace> {
    check_lengths(sites, charges)?;
    let dim = sites.first().map_or(1, |s| s.dim());
    let mut acc = Accumulator::new();
    let mut rec = Recorder::new(checkpoints, &acc);
    replay_sites(dim, sites, |step| {
        let (q, dt) = charges.pairs[step.k as usize - 1];
        acc.push(&step.prior, q, dt);
        rec.observe(&acc);
        q
    })?;
    Ok(rec.finish(&acc))
}

/// Final clock decomposition along an explicit walk.
pub fn xi_decomposition(sites: &[Site], charges: &ChargeStream) -> Result<XiDecomposition> {
    Ok(hamiltonian_path(sites, charges, &Checkpoints::new(Vec::new()))?.decomposition)
}

/// Result of a streamed polymer run.
#[derive(Debug, Clone)]
pub struct PolymerRun {
    pub trace: HamiltonianTrace,
    pub occupancy: OccupancyMap,
}

/// Simulate the walk `cfg` with charges from `feed`, without storing the path.
pub fn run_polymer(cfg: &WalkConfig, feed: &mut ChargeFeed, checkpoints: &Checkpoints) -> Result<PolymerRun> {
    let mut acc = Accumulator::new();
    let mut rec = Recorder::new(checkpoints, &acc);
    let occupancy = simulate_walk(cfg, |step| {
        let (q, dt) = feed.next_pair();
        acc.push(&step.prior, q, dt);
        rec.observe(&acc);
        q
    })?;
    Ok(PolymerRun { trace: rec.finish(&acc), occupancy })
}
