//! Ground-truth Ursell machinery at small particle number.
//!
//! Three independent routes to the same connected correlations:
//! the literal sum over connected labeled graphs
//! `ψ_n^c = Σ_G Π_{(i,j)∈G} (e^{-m_ij} - 1)`, the algebraic Ln of the
//! Boltzmann sequence in the symmetric-sequence algebra, and the subset
//! flow ODE `∂_t ψ^c(S) = -U̇_S ψ^c(S) - ½ Σ_{I⊆S} U̇(I; S∖I) ψ^c(I) ψ^c(S∖I)`
//! integrated along the scale decomposition. Subsets are bitmasks over
//! n <= 8 vertices.

use crate::charges::ChargeConfiguration;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::scale::ScaleModel;
use serde::Serialize;

pub const MAX_PARTICLES: usize = 8;

/// Symmetric pair-coupling matrix (entries βθ_ij, zero diagonal).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairPotentialMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl PairPotentialMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if !(2..=MAX_PARTICLES).contains(&n) {
            return Err(Error::SizeLimit { n, min: 2, max: MAX_PARTICLES });
        }
        if entries.len() != n * n {
            return Err(Error::InvalidInput {
                reason: format!("expected {}x{} entries", n, n),
            });
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::InvalidInput {
                    reason: format!("diagonal entry ({i},{i}) must be 0"),
                });
            }
            for j in 0..n {
                if (entries[i * n + j] - entries[j * n + i]).abs() > 1e-12 {
                    return Err(Error::InvalidInput {
                        reason: format!("entries not symmetric at ({i},{j})"),
                    });
                }
            }
        }
        Ok(Self { n, entries })
    }

    /// Couplings σ_i σ_j (v(t, r_ij) - v(t0, r_ij)) of a charge
    /// configuration along the scale decomposition.
    pub fn from_configuration(
        model: &ScaleModel,
        config: &ChargeConfiguration,
        t0: f64,
        t: f64,
        q: &QuadratureSpec,
    ) -> Result<Self> {
        let n = config.n();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let r = config.distance(i, j);
                let v = model.covariance(t, r, q)? - model.covariance(t0, r, q)?;
                let m = f64::from(config.signs[i] * config.signs[j]) * v;
                entries[i * n + j] = m;
                entries[j * n + i] = m;
            }
        }
        Self::new(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Restriction to the particles in `mask`.
    fn submatrix_energy(&self, mask: u32) -> f64 {
        let mut u = 0.0;
        let mut rest = mask;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let mut rest2 = rest;
            while rest2 != 0 {
                let j = rest2.trailing_zeros() as usize;
                rest2 &= rest2 - 1;
                u += self.coupling(i, j);
            }
        }
        u
    }
}

/// Edge index of the pair (i, j), i < j, in lexicographic order.
fn edge_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // edges (0,1), (0,2), ..., (0,n-1), (1,2), ...
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

fn edge_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Connectivity of the vertex set {0..n-1} under the edge bitmask.
fn is_connected(n: usize, edges: u32, adjacency: &[Vec<(usize, u32)>]) -> bool {
    // adjacency[i] lists (j, edge bit) for all j != i.
    let all = (1u32 << n) - 1;
    let mut reached = 1u32;
    let mut frontier = 1u32;
    while frontier != 0 {
        let mut next = 0u32;
        let mut f = frontier;
        while f != 0 {
            let i = f.trailing_zeros() as usize;
            f &= f - 1;
            for &(j, bit) in &adjacency[i] {
                if edges & bit != 0 && reached & (1 << j) == 0 {
                    next |= 1 << j;
                }
            }
        }
        reached |= next;
        frontier = next;
    }
    reached == all
}

fn adjacency_table(n: usize) -> Vec<Vec<(usize, u32)>> {
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let bit = 1u32 << edge_index(n, i, j);
            adj[i].push((j, bit));
            adj[j].push((i, bit));
        }
    }
    adj
}

/// Iterator over the edge sets of all connected labeled graphs on n vertices.
pub struct ConnectedGraphs {
    n: usize,
    next_mask: u64,
    limit: u64,
    adjacency: Vec<Vec<(usize, u32)>>,
}

impl Iterator for ConnectedGraphs {
    /// An edge bitmask; bit `edge_index(n, i, j)` set means edge (i, j).
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        while self.next_mask < self.limit {
            let mask = self.next_mask as u32;
            self.next_mask += 1;
            if is_connected(self.n, mask, &self.adjacency) {
                return Some(mask);
            }
        }
        None
    }
}

/// Enumerate every connected labeled graph on n vertices exactly once.
pub fn connected_graphs(n: usize) -> Result<ConnectedGraphs> {
    if !(2..=MAX_PARTICLES).contains(&n) {
        return Err(Error::SizeLimit { n, min: 2, max: MAX_PARTICLES });
    }
    Ok(ConnectedGraphs {
        n,
        next_mask: 0,
        limit: 1u64 << edge_count(n),
        adjacency: adjacency_table(n),
    })
}

/// Edge list (i, j) pairs of an edge bitmask.
pub fn edges_of_mask(n: usize, mask: u32) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if mask & (1 << edge_index(n, i, j)) != 0 {
                out.push((i, j));
            }
        }
    }
    out
}

/// The connected-graph sum `Σ_G Π_{(i,j)∈G} (e^{-m_ij} - 1)` over all
/// connected labeled graphs on the full vertex set.
pub fn ursell_graph_sum(m: &PairPotentialMatrix) -> Result<f64> {
    let n = m.n();
    let full = (1u32 << n) - 1;
    Ok(ursell_graph_sum_subset(m, full))
}

/// The same sum restricted to the particles in `mask` (|mask| >= 1);
/// singletons give 1, the empty set 0.
pub fn ursell_graph_sum_subset(m: &PairPotentialMatrix, mask: u32) -> f64 {
    let members: Vec<usize> = (0..m.n()).filter(|&i| mask & (1 << i) != 0).collect();
    let sn = members.len();
    match sn {
        0 => return 0.0,
        1 => return 1.0,
        _ => {}
    }
    // Mayer bonds of the restriction.
    let mut bonds = vec![0.0; edge_count(sn)];
    for a in 0..sn {
        for b in (a + 1)..sn {
            bonds[edge_index(sn, a, b)] = (-m.coupling(members[a], members[b])).exp_m1();
        }
    }
    let adjacency = adjacency_table(sn);
    let mut sum = 0.0;
    for mask in 0..(1u64 << edge_count(sn)) {
        let mask = mask as u32;
        if !is_connected(sn, mask, &adjacency) {
            continue;
        }
        let mut prod = 1.0;
        let mut rest = mask;
        while rest != 0 {
            let e = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            prod *= bonds[e];
        }
        sum += prod;
    }
    sum
}

/// Element of the symmetric-sequence algebra, truncated to subsets of
/// {1..n}: one value per bitmask.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UrsellSequence {
    n: usize,
    values: Vec<f64>,
}

impl UrsellSequence {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n > MAX_PARTICLES {
            return Err(Error::SizeLimit { n, min: 1, max: MAX_PARTICLES });
        }
        if values.len() != 1 << n {
            return Err(Error::InvalidInput {
                reason: format!("need 2^{n} subset values, got {}", values.len()),
            });
        }
        Ok(Self { n, values })
    }

    /// The ∘-identity: 1 on the empty set, 0 elsewhere.
    pub fn identity(n: usize) -> Self {
        let mut values = vec![0.0; 1 << n];
        values[0] = 1.0;
        Self { n, values }
    }

    pub fn zero(n: usize) -> Self {
        Self { n, values: vec![0.0; 1 << n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, mask: u32) -> f64 {
        self.values[mask as usize]
    }

    pub fn empty_value(&self) -> f64 {
        self.values[0]
    }

    pub fn full_value(&self) -> f64 {
        self.values[(1usize << self.n) - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Subset convolution `(a∘b)(S) = Σ_{I⊆S} a(I) b(S∖I)`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::SizeMismatch { left: self.n, right: other.n });
        }
        let size = 1usize << self.n;
        let mut out = vec![0.0; size];
        for s in 0..size {
            let s = s as u32;
            let mut acc = 0.0;
            // Enumerate submasks of s (including 0 and s).
            let mut sub = s;
            loop {
                acc += self.values[sub as usize] * other.values[(s & !sub) as usize];
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & s;
            }
            out[s as usize] = acc;
        }
        Ok(Self { n: self.n, values: out })
    }

    /// Algebraic exponential `Σ_k a^{∘k}/k!`; exact at finite n because a
    /// k-fold product of empty-set-zero sequences vanishes on subsets
    /// smaller than k.
    pub fn exp(&self) -> Result<Self> {
        if self.empty_value() != 0.0 {
            return Err(Error::WrongAffineSpace {
                value: self.empty_value(),
                expected: 0.0,
            });
        }
        let mut result = Self::identity(self.n);
        let mut power = Self::identity(self.n);
        let mut factorial = 1.0;
        for k in 1..=self.n {
            power = power.product(self)?;
            factorial *= k as f64;
            for (r, p) in result.values.iter_mut().zip(&power.values) {
                *r += p / factorial;
            }
        }
        Ok(result)
    }

    /// Algebraic logarithm `Σ_k (-1)^{k-1} (b - 1)^{∘k}/k`, the inverse of
    /// [`Self::exp`].
    pub fn ln(&self) -> Result<Self> {
        if self.empty_value() != 1.0 {
            return Err(Error::WrongAffineSpace {
                value: self.empty_value(),
                expected: 1.0,
            });
        }
        let mut shifted = self.clone();
        shifted.values[0] = 0.0;
        let mut result = Self::zero(self.n);
        let mut power = Self::identity(self.n);
        for k in 1..=self.n {
            power = power.product(&shifted)?;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            for (r, p) in result.values.iter_mut().zip(&power.values) {
                *r += sign * p / k as f64;
            }
        }
        Ok(result)
    }
}

/// Reproducible random configurations for oracle sweeps: uniform positions
/// in a centered box, uniform signs, pairs kept at least `min_distance`
/// apart so the Boltzmann weights stay well-scaled.
pub fn sample_configurations(
    n: usize,
    count: usize,
    seed: u64,
    min_distance: f64,
    box_half: f64,
) -> Vec<ChargeConfiguration> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let positions: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.gen_range(-box_half..box_half), rng.gen_range(-box_half..box_half)])
            .collect();
        let signs: Vec<i8> = (0..n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        let config = ChargeConfiguration::new(positions, signs).expect("valid sample");
        let too_close = (0..n).any(|i| ((i + 1)..n).any(|j| config.distance(i, j) < min_distance));
        if !too_close {
            out.push(config);
        }
    }
    out
}

/// Boltzmann sequence ψ(S) = e^{-U(S)} of a coupling matrix (1 on ∅ and
/// singletons).
pub fn boltzmann_sequence(m: &PairPotentialMatrix) -> UrsellSequence {
    let n = m.n();
    let values = (0..1u32 << n)
        .map(|mask| (-m.submatrix_energy(mask)).exp())
        .collect();
    UrsellSequence { n, values }
}

/// Ursell sequence from the graph sums on every subset (0 on ∅, 1 on
/// singletons).
pub fn ursell_sequence_from_graphs(m: &PairPotentialMatrix) -> UrsellSequence {
    let n = m.n();
    let values = (0..1u32 << n)
        .map(|mask| ursell_graph_sum_subset(m, mask))
        .collect();
    UrsellSequence { n, values }
}

/// Integrate the subset flow ODE for a fixed configuration from t0 to t;
/// returns ψ^c(S) for every subset at time t.
///
/// The cross energy satisfies U̇(I; S∖I) = U̇_S - U̇_I - U̇_{S∖I}, so only the
/// per-subset internal energies are needed each stage.
pub fn ursell_flow_solve(
    model: &ScaleModel,
    config: &ChargeConfiguration,
    t0: f64,
    t: f64,
    steps: usize,
    q: &QuadratureSpec,
) -> Result<UrsellSequence> {
    let n = config.n();
    if n > 6 {
        return Err(Error::SizeLimit { n, min: 1, max: 6 });
    }
    if !(t0 < t) {
        return Err(Error::InvalidInput {
            reason: format!("need t0 < t, got {t0} >= {t}"),
        });
    }
    if steps < 10 {
        return Err(Error::InvalidInput {
            reason: "need at least 10 steps".into(),
        });
    }
    let size = 1usize << n;

    // Pair couplings σσ v̇ at one time, then internal energies per subset.
    let subset_energies = |time: f64| -> Result<Vec<f64>> {
        let mut vdot = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let val = f64::from(config.signs[i] * config.signs[j])
                    * model.covariance_rate(time, config.distance(i, j), q)?;
                vdot[i * n + j] = val;
                vdot[j * n + i] = val;
            }
        }
        let mut u = vec![0.0; size];
        for mask in 1..size {
            let top = 31 - (mask as u32).leading_zeros() as usize;
            let rest = mask & !(1 << top);
            let mut cross = 0.0;
            let mut r = rest;
            while r != 0 {
                let j = r.trailing_zeros() as usize;
                r &= r - 1;
                cross += vdot[top * n + j];
            }
            u[mask] = u[rest] + cross;
        }
        Ok(u)
    };

    // State: ψ^c for all masks; ∅ stays 0, singletons stay 1.
    let mut state = vec![0.0; size];
    for i in 0..n {
        state[1 << i] = 1.0;
    }

    let rhs = |u: &[f64], y: &[f64], dy: &mut [f64]| {
        for (mask, slot) in dy.iter_mut().enumerate().take(size) {
            let bits = (mask as u32).count_ones();
            if bits < 2 {
                *slot = 0.0;
                continue;
            }
            let mask = mask as u32;
            let mut quad = 0.0;
            let mut sub = mask;
            loop {
                let comp = mask & !sub;
                let cross = u[mask as usize] - u[sub as usize] - u[comp as usize];
                quad += cross * y[sub as usize] * y[comp as usize];
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
            *slot = -u[mask as usize] * y[mask as usize] - 0.5 * quad;
        }
    };

    let h = (t - t0) / steps as f64;
    let mut k1 = vec![0.0; size];
    let mut k2 = vec![0.0; size];
    let mut k3 = vec![0.0; size];
    let mut k4 = vec![0.0; size];
    let mut tmp = vec![0.0; size];
    for step in 0..steps {
        let tc = t0 + h * step as f64;
        let u_begin = subset_energies(tc)?;
        let u_mid = subset_energies(tc + 0.5 * h)?;
        let u_end = subset_energies(tc + h)?;
        rhs(&u_begin, &state, &mut k1);
        for i in 0..size {
            tmp[i] = state[i] + 0.5 * h * k1[i];
        }
        rhs(&u_mid, &tmp, &mut k2);
        for i in 0..size {
            tmp[i] = state[i] + 0.5 * h * k2[i];
        }
        rhs(&u_mid, &tmp, &mut k3);
        for i in 0..size {
            tmp[i] = state[i] + h * k3[i];
        }
        rhs(&u_end, &tmp, &mut k4);
        for i in 0..size {
            state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    UrsellSequence::new(n, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> PairPotentialMatrix {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.gen_range(-1.2..1.2);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        PairPotentialMatrix::new(n, entries).unwrap()
    }

    #[test]
    fn connected_graph_counts() {
        // Labeled connected graphs on n vertices.
        let expected = [(2usize, 1u64), (3, 4), (4, 38), (5, 728), (6, 26704), (7, 1866256)];
        for (n, count) in expected {
            let got = connected_graphs(n).unwrap().count() as u64;
            assert_eq!(got, count, "n = {n}");
        }
        assert!(matches!(connected_graphs(9), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn graph_sum_small_cases() {
        // n = 2: e^{-u} - 1.
        let u = 0.7;
        let m = PairPotentialMatrix::new(2, vec![0.0, u, u, 0.0]).unwrap();
        let got = ursell_graph_sum(&m).unwrap();
        assert!((got - ((-u).exp() - 1.0)).abs() < 1e-15);

        // All couplings zero: 0 for n >= 2.
        let m = PairPotentialMatrix::new(3, vec![0.0; 9]).unwrap();
        assert_eq!(ursell_graph_sum(&m).unwrap(), 0.0);

        // n = 3 uniform coupling: 3f² + f³ over the 4 connected graphs.
        let u = 0.4;
        let f = (-u as f64).exp() - 1.0;
        let mut e = vec![0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    e[i * 3 + j] = u;
                }
            }
        }
        let m = PairPotentialMatrix::new(3, e).unwrap();
        let got = ursell_graph_sum(&m).unwrap();
        assert!((got - (3.0 * f * f + f * f * f)).abs() < 1e-14);
    }

    #[test]
    fn graph_sum_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_matrix(5, &mut rng);
        let base = ursell_graph_sum(&m).unwrap();
        // Relabel particles by the cycle (0 1 2 3 4).
        let perm = [1usize, 2, 3, 4, 0];
        let mut e = vec![0.0; 25];
        for i in 0..5 {
            for j in 0..5 {
                e[perm[i] * 5 + perm[j]] = m.coupling(i, j);
            }
        }
        let pm = PairPotentialMatrix::new(5, e).unwrap();
        // Invariant up to float reassociation of the 728-term sum.
        let relabeled = ursell_graph_sum(&pm).unwrap();
        assert!((relabeled - base).abs() <= 1e-13 * base.abs().max(1.0));
    }

    #[test]
    fn product_identity_and_commutativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        let a = UrsellSequence::new(n, (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let b = UrsellSequence::new(n, (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let id = UrsellSequence::identity(n);
        assert_eq!(a.product(&id).unwrap(), a);
        let ab = a.product(&b).unwrap();
        let ba = b.product(&a).unwrap();
        for (x, y) in ab.values().iter().zip(ba.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn product_n1_by_hand() {
        let a = UrsellSequence::new(1, vec![2.0, 3.0]).unwrap();
        let b = UrsellSequence::new(1, vec![5.0, 7.0]).unwrap();
        let ab = a.product(&b).unwrap();
        // (a∘b)(∅) = a(∅)b(∅); (a∘b)({1}) = a(∅)b({1}) + a({1})b(∅).
        assert_eq!(ab.value(0), 10.0);
        assert_eq!(ab.value(1), 2.0 * 7.0 + 3.0 * 5.0);
    }

    #[test]
    fn exp_of_zero_and_affine_checks() {
        let z = UrsellSequence::zero(3);
        assert_eq!(z.exp().unwrap(), UrsellSequence::identity(3));
        let bad = UrsellSequence::new(2, vec![0.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(bad.exp(), Err(Error::WrongAffineSpace { .. })));
        assert!(matches!(bad.ln(), Err(Error::WrongAffineSpace { .. })));
    }

    #[test]
    fn ln_exp_roundtrip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for n in 2..=5 {
            for _ in 0..20 {
                let mut vals: Vec<f64> = (0..1 << n).map(|_| rng.gen_range(-0.8..0.8)).collect();
                vals[0] = 0.0;
                let a = UrsellSequence::new(n, vals).unwrap();
                let back = a.exp().unwrap().ln().unwrap();
                for (x, y) in a.values().iter().zip(back.values()) {
                    assert!((x - y).abs() <= 1e-12, "n = {n}");
                }
            }
        }
    }

    #[test]
    fn exp_of_ursell_is_boltzmann() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=5 {
            for _ in 0..10 {
                let m = random_matrix(n, &mut rng);
                let psi_c = ursell_sequence_from_graphs(&m);
                let psi = psi_c.exp().unwrap();
                let boltz = boltzmann_sequence(&m);
                for (x, y) in psi.values().iter().zip(boltz.values()) {
                    assert!((x - y).abs() <= 1e-10, "n = {n}");
                }
            }
        }
    }

    #[test]
    fn flow_matches_closed_form_n2() {
        // ψ₂^c(t) = exp(-σ₁σ₂ ∫ v̇) - 1 with ∫ v̇ = v(t) - v(t0).
        let beta = 2.0 * PI;
        let model = ScaleModel::exponential(beta, 2.0).unwrap();
        let q = QuadratureSpec::default();
        for signs in [[1i8, 1], [1, -1]] {
            let config = ChargeConfiguration::new(
                vec![[0.0, 0.0], [0.9, 0.4]],
                signs.to_vec(),
            )
            .unwrap();
            let got = ursell_flow_solve(&model, &config, -3.0, 0.0, 600, &q)
                .unwrap()
                .full_value();
            let r = config.distance(0, 1);
            let dv = model.covariance(0.0, r, &q).unwrap()
                - model.covariance(-3.0, r, &q).unwrap();
            let expect = (-(f64::from(signs[0] * signs[1])) * dv).exp() - 1.0;
            assert!(
                (got - expect).abs() < 1e-8 * expect.abs().max(1.0),
                "signs {signs:?}: {got} vs {expect}"
            );
            if signs[0] * signs[1] == 1 {
                // Repulsive Mayer bond stays in (-1, 0].
                assert!(got > -1.0 && got <= 0.0);
            }
        }
    }

    #[test]
    fn flow_frozen_when_rates_vanish() {
        // β = 0 freezes the flow at its initial data.
        let model = ScaleModel::exponential(0.0, 2.0).unwrap();
        let config = ChargeConfiguration::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![1, -1, 1],
        )
        .unwrap();
        let seq = ursell_flow_solve(&model, &config, -2.0, 0.0, 100, &QuadratureSpec::default())
            .unwrap();
        assert_eq!(seq.full_value(), 0.0);
        assert_eq!(seq.value(0b011), 0.0);
        assert_eq!(seq.value(0b001), 1.0);
    }

    #[test]
    fn flow_matches_graph_sum_n3() {
        let beta = 2.0 * PI;
        let model = ScaleModel::exponential(beta, 2.0).unwrap();
        let q = QuadratureSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..3 {
            let positions: Vec<[f64; 2]> = (0..3)
                .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect();
            let signs: Vec<i8> = (0..3).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            let config = ChargeConfiguration::new(positions, signs).unwrap();
            if (0..2).any(|i| ((i + 1)..3).any(|j| config.distance(i, j) < 0.1)) {
                continue;
            }
            let flow = ursell_flow_solve(&model, &config, -3.0, 0.0, 800, &q).unwrap();
            let m = PairPotentialMatrix::from_configuration(&model, &config, -3.0, 0.0, &q).unwrap();
            let graph = ursell_graph_sum(&m).unwrap();
            let got = flow.full_value();
            assert!(
                (got - graph).abs() <= 1e-6 * graph.abs().max(1e-3),
                "{got} vs {graph}"
            );
        }
    }
}
