use serde::{Deserialize, Serialize};

use crate::algebra::C64;
use crate::spinor::SpinorBundle;

/// Invariants of a bundle under `C ↦ uCu⁻¹`: trace and determinant of every
/// `C^i`, of every commutator `[C^i, C^j]` with `i < j` and of every
/// `σ_S^i_j`, followed by the three signs.
pub fn invariants(b: &SpinorBundle) -> Vec<C64> {
    let mut out = Vec::new();
    let mut td = |m: &crate::linalg::CMat| {
        out.push(m.trace());
        out.push(m.determinant());
    };
    for c in &b.c {
        td(c);
    }
    for i in 0..b.n() {
        for j in i + 1..b.n() {
            td(&(&b.c[i] * &b.c[j] - &b.c[j] * &b.c[i]));
        }
    }
    for row in &b.sigma_s {
        for s in row {
            td(s);
        }
    }
    let s = b.signs;
    out.extend([s.eps, s.eps_prime, s.eps_dprime].map(|e| C64::new(f64::from(e), 0.0)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    /// Index of the first member, used as the representative.
    pub representative: usize,
    pub members: Vec<usize>,
    pub invariants: Vec<C64>,
}

fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).norm() <= tol * (1.0 + x.norm().max(y.norm())))
}

/// Groups bundles whose invariants agree within `tol`, in input order.
pub fn dedup_gauge(bundles: &[SpinorBundle], tol: f64) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = Vec::new();
    for (k, b) in bundles.iter().enumerate() {
        let inv = invariants(b);
        match clusters
            .iter_mut()
            .find(|c| close(&c.invariants, &inv, tol))
        {
            Some(c) => c.members.push(k),
            None => clusters.push(Cluster {
                id: clusters.len(),
                representative: k,
                members: vec![k],
                invariants: inv,
            }),
        }
    }
    clusters
}

/// Cluster id of every input bundle.
pub fn cluster_ids(clusters: &[Cluster], count: usize) -> Vec<usize> {
    let mut ids = vec![0; count];
    for c in clusters {
        for &m in &c.members {
            ids[m] = c.id;
        }
    }
    ids
}
