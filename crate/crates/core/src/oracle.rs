//! Direct evaluation of the defining multiple sums, O(n²) and O(n³).
//!
//! These share no code with the incremental engine: they compare sites
//! coordinate-wise and loop over index pairs and triples. They exist to
//! check the engine.

use crate::charges::ChargeStream;
use crate::error::{LabError, Result};
use crate::walk::Site;

/// Every quantity the engine tracks, evaluated from scratch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectSums {
    pub h: f64,
    pub i: u64,
    pub v: f64,
    pub xi: f64,
    pub m: f64,
    pub n: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub a: f64,
    pub b: f64,
}

/// Evaluate all sums for sites `S_1..S_n` with pairs `(q_k, dt_k)`.
///
/// ```text
/// H  = Σ_{i<j} q_i q_j 1{S_i=S_j}          I  = Σ_{i<j} 1{S_i=S_j}
/// V  = Σ_k (Σ_{i<k} q_i 1{S_i=S_k})²        Ξ  = same, weighted by dt_k
/// M  = Σ_{i<k} (q_i² - 1) 1{S_i=S_k}        N  = Σ_{i<k} q_i² (dt_k - 1) 1{S_i=S_k}
/// Ξ1 = Σ_{i<k} q_i² dt_k 1{S_i=S_k}         Ξ2 = Σ_k dt_k Σ_{i≠j<k} q_i q_j 1{S_i=S_j=S_k}
/// b  = Σ_k Σ_{i<j<k} q_i q_j 1{S_i=S_j=S_k} a  = same, weighted by dt_k - 1
/// ```
pub fn direct_sums(sites: &[Site], charges: &ChargeStream) -> Result<DirectSums> {
    if sites.len() != charges.len() {
        return Err(LabError::Input("walk and charge lengths differ".into()));
    }
    let n = sites.len();
    let q: Vec<f64> = charges.charges();
    let dt: Vec<f64> = charges.durations();
    let same = |i: usize, j: usize| sites[i].coords == sites[j].coords;
    let mut out = DirectSums { h: 0.0, i: 0, v: 0.0, xi: 0.0, m: 0.0, n: 0.0, xi1: 0.0, xi2: 0.0, a: 0.0, b: 0.0 };
    for k in 0..n {
        let mut c = 0.0;
        for i in 0..k {
            if same(i, k) {
                out.h += q[i] * q[k];
                out.i += 1;
                c += q[i];
                out.m += q[i] * q[i] - 1.0;
                out.n += q[i] * q[i] * (dt[k] - 1.0);
                out.xi1 += q[i] * q[i] * dt[k];
            }
        }
        out.v += c * c;
        out.xi += c * c * dt[k];
        let mut pairs_ordered = 0.0;
        let mut pairs_lower = 0.0;
        for i in 0..k {
            if !same(i, k) {
                continue;
            }
            for j in 0..k {
                if j != i && same(j, k) {
                    pairs_ordered += q[i] * q[j];
                    if i < j {
                        pairs_lower += q[i] * q[j];
                    }
                }
            }
        }
        out.xi2 += dt[k] * pairs_ordered;
        out.b += pairs_lower;
        out.a += pairs_lower * (dt[k] - 1.0);
    }
    Ok(out)
}
