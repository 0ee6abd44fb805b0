//! The kicked Ising Floquet operator and its momentum-sector blocks.
//!
//! Qubit `j` is digit `m_j` of the packed basis index (see
//! [`crate::combinatorics`]); digit `0` is the `sigma^z = +1` state. The
//! field is rotated about the z axis into the x-z plane, which leaves the
//! spectrum unchanged and makes every kick and Ising factor satisfy
//! `conj(U) = U^dagger` in the computational basis. Sector bases are built to
//! be invariant under `K = conj . R`, so the symmetrized operator
//! `U_kick(b/2) U_Ising U_kick(b/2)` is complex symmetric in them.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    enumerate_orbit_representatives, is_special_sector, sector_dimension, survives_projection, BasisState, PackedSpace,
};
use crate::error::{KicError, Result};

/// Largest chain handled by the dense full-space reference operator.
pub const MAX_FULL_MATRIX_SITES: usize = 10;

/// Default tolerance for the unitarity and symmetry checks.
pub const DEFAULT_STRUCTURE_TOL: f64 = 1e-10;

/// Threshold on `|<n|R P_k|n>|` separating self-mirror orbits from paired ones.
const MIRROR_OVERLAP_TOL: f64 = 1e-10;

/// Candidates with a smaller norm after orthogonalization are dropped.
const GRAM_SCHMIDT_DROP_TOL: f64 = 1e-8;

/// Coupling, field and chain length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(rename = "J")]
    pub coupling: f64,
    pub b: [f64; 3],
    #[serde(rename = "L")]
    pub sites: usize,
}

impl ModelParams {
    pub fn new(coupling: f64, b: [f64; 3], sites: usize) -> Result<Self> {
        let p = Self { coupling, b, sites };
        p.validate()?;
        Ok(p)
    }

    /// `J = 0.7`, `b = (0.9, 0, 0.9)`.
    pub fn canonical(sites: usize) -> Self {
        Self {
            coupling: 0.7,
            b: [0.9, 0.0, 0.9],
            sites,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(KicError::invalid(format!("L={} must be >= 2", self.sites)));
        }
        if self.sites > 40 {
            return Err(KicError::ResourceLimit(format!(
                "L={} is far beyond what a dense state vector can hold",
                self.sites
            )));
        }
        if !self.coupling.is_finite() || self.b.iter().any(|x| !x.is_finite()) {
            return Err(KicError::invalid("J and b must be finite"));
        }
        Ok(())
    }

    /// Angle of the z rotation that brings `b` into the x-z plane (zero when
    /// `b_y = 0` and `b_x >= 0`).
    pub fn field_rotation(&self) -> f64 {
        let [bx, by, _] = self.b;
        if by == 0.0 && bx >= 0.0 {
            0.0
        } else {
            by.atan2(bx)
        }
    }

    /// The field actually used for construction: `(sqrt(bx^2 + by^2), 0, bz)`.
    pub fn working_field(&self) -> [f64; 3] {
        let [bx, by, bz] = self.b;
        if self.field_rotation() == 0.0 {
            [bx, 0.0, bz]
        } else {
            [bx.hypot(by), 0.0, bz]
        }
    }
}

/// `exp(-i b.sigma) = cos|b| I - i sin|b| (b/|b|).sigma`, row-major.
pub fn single_kick_matrix(b: [f64; 3]) -> [[C64; 2]; 2] {
    let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    if norm == 0.0 {
        return [
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        ];
    }
    let (s, c) = norm.sin_cos();
    let [nx, ny, nz] = [b[0] / norm, b[1] / norm, b[2] / norm];
    let minus_i_sin = C64::new(0.0, -s);
    // n.sigma = [[nz, nx - i ny], [nx + i ny, -nz]]
    [
        [C64::new(c, 0.0) + minus_i_sin * nz, minus_i_sin * C64::new(nx, -ny)],
        [minus_i_sin * C64::new(nx, ny), C64::new(c, 0.0) - minus_i_sin * nz],
    ]
}

/// `J sum_j z_j z_{j+1}` with periodic closure, `z = +1` for digit 0.
pub fn ising_phase(state: &BasisState, coupling: f64) -> Result<f64> {
    if state.local_dim() != 2 {
        return Err(KicError::invalid("the Ising phase is defined for qubits only"));
    }
    let digits = state.digits();
    let sites = digits.len();
    let bonds: i64 = (0..sites)
        .map(|j| if digits[j] == digits[(j + 1) % sites] { 1 } else { -1 })
        .sum();
    Ok(coupling * bonds as f64)
}

/// Ising phase straight from a packed qubit index.
#[inline]
fn packed_ising_phase(x: u64, sites: usize, coupling: f64) -> f64 {
    let mask = (1u64 << sites) - 1;
    let rotated = ((x >> 1) | ((x & 1) << (sites - 1))) & mask;
    let anti = (x ^ rotated).count_ones() as i64;
    coupling * (sites as i64 - 2 * anti) as f64
}

/// Applies `kick^{(x)L}` to a full state vector in place.
pub fn apply_kick_layer(state: &mut [C64], sites: usize, kick: &[[C64; 2]; 2]) {
    debug_assert_eq!(state.len(), 1 << sites);
    for bit in 0..sites {
        let stride = 1usize << bit;
        for block in (0..state.len()).step_by(2 * stride) {
            for x in block..block + stride {
                // bit clear: digit 0 (row 0); bit set: digit 1 (row 1)
                let a0 = state[x];
                let a1 = state[x + stride];
                state[x] = kick[0][0] * a0 + kick[0][1] * a1;
                state[x + stride] = kick[1][0] * a0 + kick[1][1] * a1;
            }
        }
    }
}

/// Diagonal Ising evolution `exp(-i J sum z z)` on a full state vector.
pub fn apply_ising_layer(state: &mut [C64], sites: usize, coupling: f64) {
    for (x, amp) in state.iter_mut().enumerate() {
        let phase = packed_ising_phase(x as u64, sites, coupling);
        *amp *= C64::from_polar(1.0, -phase);
    }
}

/// Precomputed layers of one Floquet period.
#[derive(Debug, Clone)]
pub struct FloquetPropagator {
    pub params: ModelParams,
    pub symmetrized: bool,
    kick: [[C64; 2]; 2],
    ising: Vec<C64>,
}

impl FloquetPropagator {
    pub fn new(params: ModelParams, symmetrized: bool) -> Result<Self> {
        params.validate()?;
        let field = params.working_field();
        let field = if symmetrized { field.map(|x| x / 2.0) } else { field };
        let ising = (0..1u64 << params.sites)
            .map(|x| C64::from_polar(1.0, -packed_ising_phase(x, params.sites, params.coupling)))
            .collect();
        Ok(Self {
            params,
            symmetrized,
            kick: single_kick_matrix(field),
            ising,
        })
    }

    /// `U_Ising U_kick` or `U_kick(b/2) U_Ising U_kick(b/2)` applied in place.
    pub fn apply(&self, state: &mut [C64]) {
        let sites = self.params.sites;
        apply_kick_layer(state, sites, &self.kick);
        for (amp, phase) in state.iter_mut().zip(&self.ising) {
            *amp *= phase;
        }
        if self.symmetrized {
            apply_kick_layer(state, sites, &self.kick);
        }
    }
}

/// A sparse vector over the computational basis, sorted by index.
pub type SparseVector = Vec<(u64, C64)>;

/// Orthonormal, `K`-invariant basis of the momentum subspace `H_k` of `L` qubits.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub sites: usize,
    pub k: usize,
    pub vectors: Vec<SparseVector>,
    /// Reflection-invariant momentum (`k = 0` or `k = L/2`).
    pub special: bool,
}

impl SectorBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }
}

fn normalize(v: &mut SparseVector) -> f64 {
    let norm = v.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, a) in v.iter_mut() {
            *a /= norm;
        }
    }
    norm
}

fn sparse_dot(u: &SparseVector, v: &SparseVector) -> C64 {
    // <u|v>, both sorted by index
    let (mut i, mut j) = (0, 0);
    let mut acc = C64::new(0.0, 0.0);
    while i < u.len() && j < v.len() {
        match u[i].0.cmp(&v[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += u[i].1.conj() * v[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

fn linear_combination(a: C64, u: &SparseVector, b: C64, v: &SparseVector) -> SparseVector {
    let mut out: SparseVector = Vec::with_capacity(u.len() + v.len());
    let (mut i, mut j) = (0, 0);
    while i < u.len() || j < v.len() {
        let next = match (u.get(i), v.get(j)) {
            (Some(&(x, p)), Some(&(y, q))) if x == y => {
                i += 1;
                j += 1;
                (x, a * p + b * q)
            }
            (Some(&(x, p)), Some(&(y, _))) if x < y => {
                i += 1;
                (x, a * p)
            }
            (Some(&(x, p)), None) => {
                i += 1;
                (x, a * p)
            }
            (_, Some(&(y, q))) => {
                j += 1;
                (y, b * q)
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

/// `K v = conj(R v)`.
fn apply_antiunitary(space: &PackedSpace, v: &SparseVector) -> SparseVector {
    let mut out: SparseVector = v.iter().map(|&(x, a)| (space.reflect(x), a.conj())).collect();
    out.sort_unstable_by_key(|&(x, _)| x);
    out
}

/// Normalized `P_k |n>` for an orbit representative of primitive period `period`.
fn projected_orbit_state(space: &PackedSpace, rep: u64, period: usize, k: usize) -> SparseVector {
    let sites = space.sites;
    let mut v: SparseVector = Vec::with_capacity(period);
    let mut x = rep;
    for j in 0..period {
        let angle = -2.0 * PI * ((j * k) % sites) as f64 / sites as f64;
        v.push((x, C64::from_polar(1.0, angle)));
        x = space.translate(x);
    }
    v.sort_unstable_by_key(|&(x, _)| x);
    normalize(&mut v);
    v
}

/// Flips the sign so the lowest-index nonzero amplitude has positive real
/// part (positive imaginary part if the real part vanishes). Only a sign is
/// free: any other phase would break `K`-invariance.
fn fix_sign(v: &mut SparseVector) {
    if let Some(&(_, a)) = v.iter().find(|(_, a)| a.norm() > 1e-12) {
        let flip = if a.re.abs() > 1e-12 { a.re < 0.0 } else { a.im < 0.0 };
        if flip {
            for (_, amp) in v.iter_mut() {
                *amp = -*amp;
            }
        }
    }
}

/// Builds the `K`-invariant orthonormal basis of `H_k` for `L` qubits.
///
/// Each orbit representative `|n>` surviving `P_k` yields `v = P_k|n>` and
/// `w = K v`. When `<n|R P_k|n>` is nonzero, `w` lies on the same orbit and
/// the nonvanishing one of `v + w`, `i(v - w)` is kept. Otherwise `w` lives on
/// the mirror orbit and both combinations enter the basis; the mirror orbit
/// is then skipped when its own representative comes up.
pub fn build_sector_basis(sites: usize, k: usize) -> Result<SectorBasis> {
    if sites < 2 {
        return Err(KicError::invalid(format!("L={sites} must be >= 2")));
    }
    if k >= sites {
        return Err(KicError::invalid(format!("momentum k={k} outside 0..{sites}")));
    }
    let space = PackedSpace::new(sites, 2)?;
    let orbits = enumerate_orbit_representatives(sites, 2)?;
    let i_unit = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);

    let mut vectors = Vec::new();
    for orbit in &orbits {
        if !survives_projection(orbit.primitive_period, k, sites)? {
            continue;
        }
        let rep = orbit.representative;
        let v = projected_orbit_state(&space, rep, orbit.primitive_period, k);
        let w = apply_antiunitary(&space, &v);
        // <n|R P_k|n> is the amplitude of P_k|n> on R|n>
        let reflected = space.reflect(rep);
        let mirror_overlap = v
            .iter()
            .find(|(x, _)| *x == reflected)
            .map(|&(_, a)| a)
            .unwrap_or_default();
        let self_mirror = mirror_overlap.norm() > MIRROR_OVERLAP_TOL;
        if !self_mirror {
            let (mirror_rep, _) = space.canonical(space.reflect(rep));
            if mirror_rep < rep {
                continue;
            }
        }

        let candidates = [
            linear_combination(one, &v, one, &w),
            linear_combination(i_unit, &v, -i_unit, &w),
        ];
        let mut group: Vec<SparseVector> = Vec::with_capacity(2);
        for mut cand in candidates {
            for prev in &group {
                let overlap = sparse_dot(prev, &cand);
                cand = linear_combination(one, &cand, -overlap, prev);
            }
            cand.retain(|(_, a)| a.norm() > 1e-15);
            if normalize(&mut cand) > GRAM_SCHMIDT_DROP_TOL {
                fix_sign(&mut cand);
                group.push(cand);
            }
            if self_mirror {
                break;
            }
        }
        if self_mirror && group.is_empty() {
            // v + w vanished: w = -v, so i(v - w) carries the orbit
            let mut cand = linear_combination(i_unit, &v, -i_unit, &w);
            normalize(&mut cand);
            fix_sign(&mut cand);
            group.push(cand);
        }
        vectors.extend(group);
    }

    let expected = sector_dimension(sites, 2, k)?;
    if vectors.len() as u128 != expected {
        return Err(KicError::Consistency(format!(
            "sector basis L={sites} k={k} has {} vectors, expected {expected}",
            vectors.len()
        )));
    }
    Ok(SectorBasis {
        sites,
        k,
        vectors,
        special: is_special_sector(sites, k),
    })
}

/// One momentum block of the Floquet operator.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub k: usize,
    pub matrix: Mat<C64>,
    pub params: ModelParams,
    pub symmetrized: bool,
    pub special: bool,
    /// `max |(U^dagger U - I)_ij|`.
    pub unitarity_error: f64,
    /// `max |U_ij - U_ji|`.
    pub symmetry_error: f64,
}

impl SectorOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `max |(M^dagger M - I)_ij|`.
pub fn unitarity_error(m: &Mat<C64>) -> f64 {
    let product = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for j in 0..product.ncols() {
        for i in 0..product.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((product[(i, j)] - target).norm());
        }
    }
    worst
}

/// `max |M_ij - M_ji|`.
pub fn symmetry_error(m: &Mat<C64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).norm());
        }
    }
    worst
}

/// Matrix elements `<u_i|U|u_j>` in the given sector basis.
///
/// Columns are produced by scattering `u_j` into a full state vector,
/// applying the layered propagator, and gathering against the sparse basis.
pub fn sector_floquet(params: &ModelParams, basis: &SectorBasis, symmetrized: bool) -> Result<SectorOperator> {
    sector_floquet_with_tol(params, basis, symmetrized, DEFAULT_STRUCTURE_TOL)
}

pub fn sector_floquet_with_tol(
    params: &ModelParams,
    basis: &SectorBasis,
    symmetrized: bool,
    tol: f64,
) -> Result<SectorOperator> {
    if params.sites != basis.sites {
        return Err(KicError::invalid(format!(
            "basis built for L={} used with L={}",
            basis.sites, params.sites
        )));
    }
    let propagator = FloquetPropagator::new(*params, symmetrized)?;
    let dim = basis.dim();
    let mut matrix = Mat::<C64>::zeros(dim, dim);
    let mut state = vec![C64::new(0.0, 0.0); 1 << params.sites];
    for (j, column) in basis.vectors.iter().enumerate() {
        state.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
        for &(x, a) in column {
            state[x as usize] = a;
        }
        propagator.apply(&mut state);
        for (i, row) in basis.vectors.iter().enumerate() {
            matrix[(i, j)] = row.iter().map(|&(x, a)| a.conj() * state[x as usize]).sum();
        }
    }
    let unitarity = unitarity_error(&matrix);
    if !(unitarity <= tol) {
        return Err(KicError::numerical(format!(
            "sector L={} k={} is not unitary: max |U^dagger U - I| = {unitarity:.3e}",
            params.sites, basis.k
        )));
    }
    let symmetry = symmetry_error(&matrix);
    Ok(SectorOperator {
        k: basis.k,
        matrix,
        params: *params,
        symmetrized,
        special: basis.special,
        unitarity_error: unitarity,
        symmetry_error: symmetry,
    })
}

fn kron(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// The full `2^L x 2^L` Floquet matrix built from explicit Kronecker
/// products. Used as an independent cross-check for small chains.
pub fn full_floquet_matrix(params: &ModelParams, symmetrized: bool) -> Result<Mat<C64>> {
    params.validate()?;
    let sites = params.sites;
    if sites > MAX_FULL_MATRIX_SITES {
        return Err(KicError::ResourceLimit(format!(
            "full Floquet matrix limited to L <= {MAX_FULL_MATRIX_SITES}"
        )));
    }
    let field = params.working_field();
    let field = if symmetrized { field.map(|x| x / 2.0) } else { field };
    let k = single_kick_matrix(field);
    let single = Mat::from_fn(2, 2, |i, j| k[i][j]);
    let mut kick = single.clone();
    for _ in 1..sites {
        kick = kron(&kick, &single);
    }
    let size = 1usize << sites;
    let ising = Mat::from_fn(size, size, |i, j| {
        if i != j {
            return C64::new(0.0, 0.0);
        }
        let state = BasisState::from_index(i as u64, sites, 2).expect("index in range");
        let phase = ising_phase(&state, params.coupling).expect("qubit state");
        C64::from_polar(1.0, -phase)
    });
    Ok(if symmetrized {
        &kick * &ising * &kick
    } else {
        &ising * &kick
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::BasisState;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    /// `exp(-i H)` for a 2x2 matrix `H = b.sigma` by scaling and squaring a
    /// Taylor series.
    fn expm_oracle(b: [f64; 3]) -> [[C64; 2]; 2] {
        let i = C64::new(0.0, 1.0);
        let h = [
            [C64::new(b[2], 0.0), C64::new(b[0], -b[1])],
            [C64::new(b[0], b[1]), C64::new(-b[2], 0.0)],
        ];
        let scale = 1 << 10;
        let a: Vec<Vec<C64>> = (0..2)
            .map(|r| (0..2).map(|c| -i * h[r][c] / scale as f64).collect())
            .collect();
        let mul = |x: &Vec<Vec<C64>>, y: &Vec<Vec<C64>>| -> Vec<Vec<C64>> {
            (0..2)
                .map(|r| (0..2).map(|c| x[r][0] * y[0][c] + x[r][1] * y[1][c]).collect())
                .collect()
        };
        let mut term = vec![
            vec![C64::new(1.0, 0.0), C64::default()],
            vec![C64::default(), C64::new(1.0, 0.0)],
        ];
        let mut sum = term.clone();
        for n in 1..30 {
            term = mul(&term, &a);
            term.iter_mut().flatten().for_each(|z| *z /= n as f64);
            for r in 0..2 {
                for c in 0..2 {
                    sum[r][c] += term[r][c];
                }
            }
        }
        for _ in 0..10 {
            sum = mul(&sum, &sum);
        }
        [[sum[0][0], sum[0][1]], [sum[1][0], sum[1][1]]]
    }

    #[test]
    fn kick_matrix_special_values() {
        let id = single_kick_matrix([0.0; 3]);
        assert!(close(id[0][0], C64::new(1.0, 0.0), 1e-15));
        assert!(close(id[0][1], C64::new(0.0, 0.0), 1e-15));

        let x = single_kick_matrix([PI / 2.0, 0.0, 0.0]);
        assert!(close(x[0][0], C64::new(0.0, 0.0), 1e-15));
        assert!(close(x[0][1], C64::new(0.0, -1.0), 1e-15));
        assert!(close(x[1][0], C64::new(0.0, -1.0), 1e-15));
    }

    #[test]
    fn canonical_kick_matches_taylor_exponential() {
        let b = [0.9, 0.0, 0.9];
        let k = single_kick_matrix(b);
        let oracle = expm_oracle(b);
        for r in 0..2 {
            for c in 0..2 {
                assert!(
                    close(k[r][c], oracle[r][c], 1e-12),
                    "{r}{c}: {} vs {}",
                    k[r][c],
                    oracle[r][c]
                );
            }
        }
        // frozen 4 s.f. values
        assert!(close(k[0][0], C64::new(0.2936, -0.6759), 1e-4));
        assert!(close(k[1][1], C64::new(0.2936, 0.6759), 1e-4));
        assert!(close(k[0][1], C64::new(0.0, -0.6759), 1e-4));

        let general = [0.3, -0.8, 0.5];
        let k = single_kick_matrix(general);
        let oracle = expm_oracle(general);
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        assert!(close(det, C64::new(1.0, 0.0), 1e-14));
        for r in 0..2 {
            for c in 0..2 {
                assert!(close(k[r][c], oracle[r][c], 1e-12));
            }
        }
    }

    #[test]
    fn ising_phase_bond_counting() {
        let phase = |s: &str| ising_phase(&BasisState::parse(s, 2).unwrap(), 0.7).unwrap();
        assert!((phase("0000") - 2.8).abs() < 1e-12);
        assert!((phase("0101") + 2.8).abs() < 1e-12);
        assert!(phase("0011").abs() < 1e-12);
        for x in 0..64u64 {
            let s = BasisState::from_index(x, 6, 2).unwrap();
            assert!((packed_ising_phase(x, 6, 0.7) - ising_phase(&s, 0.7).unwrap()).abs() < 1e-12);
        }
        assert!(ising_phase(&BasisState::parse("012", 3).unwrap(), 0.7).is_err());
    }

    #[test]
    fn kick_layer_preserves_norm() {
        let sites = 7;
        let mut state: Vec<C64> = (0..1 << sites)
            .map(|x| C64::new((x as f64 * 0.37).sin(), (x as f64 * 0.11).cos()))
            .collect();
        let before: f64 = state.iter().map(|a| a.norm_sqr()).sum();
        apply_kick_layer(&mut state, sites, &single_kick_matrix([0.9, 0.0, 0.9]));
        let after: f64 = state.iter().map(|a| a.norm_sqr()).sum();
        assert!((before - after).abs() / before < 1e-12);
    }

    #[test]
    fn sector_basis_is_orthonormal_and_complete() {
        let b1 = build_sector_basis(4, 1).unwrap();
        assert_eq!(b1.dim(), 3);
        let b0 = build_sector_basis(4, 0).unwrap();
        assert_eq!(b0.dim(), 6);
        assert!(b0.special);
        for basis in [&b0, &b1] {
            for (i, u) in basis.vectors.iter().enumerate() {
                for (j, v) in basis.vectors.iter().enumerate() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((sparse_dot(u, v) - target).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sector_basis_vectors_are_k_invariant_momentum_states() {
        for sites in [5, 6, 8] {
            let space = PackedSpace::new(sites, 2).unwrap();
            for k in 0..sites {
                let basis = build_sector_basis(sites, k).unwrap();
                for u in &basis.vectors {
                    let ku = apply_antiunitary(&space, u);
                    assert!(linear_combination(C64::new(1.0, 0.0), u, C64::new(-1.0, 0.0), &ku)
                        .iter()
                        .all(|(_, a)| a.norm() < 1e-12));
                    // T u = exp(2 pi i k / L) u
                    let phase = C64::from_polar(1.0, 2.0 * PI * k as f64 / sites as f64);
                    let mut tu: SparseVector = u.iter().map(|&(x, a)| (space.translate(x), a)).collect();
                    tu.sort_unstable_by_key(|&(x, _)| x);
                    for (&(x, a), &(y, b)) in u.iter().zip(&tu) {
                        assert_eq!(x, y);
                        assert!((b - phase * a).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn basis_vectors_live_on_an_orbit_and_its_mirror() {
        let sites = 8;
        let space = PackedSpace::new(sites, 2).unwrap();
        for k in 0..sites {
            for u in build_sector_basis(sites, k).unwrap().vectors {
                let rep = space.canonical(u[0].0).0;
                let mirror = space.canonical(space.reflect(rep)).0;
                for &(x, _) in &u {
                    let r = space.canonical(x).0;
                    assert!(r == rep || r == mirror);
                }
            }
        }
    }

    #[test]
    fn trivial_parameters_give_identity() {
        let params = ModelParams::new(0.0, [0.0; 3], 6).unwrap();
        let basis = build_sector_basis(6, 1).unwrap();
        let op = sector_floquet(&params, &basis, false).unwrap();
        for i in 0..op.dim() {
            for j in 0..op.dim() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((op.matrix[(i, j)] - target).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn sector_traces_add_up_to_full_trace() {
        let params = ModelParams::canonical(6);
        for symmetrized in [false, true] {
            let full = full_floquet_matrix(&params, symmetrized).unwrap();
            let full_trace: C64 = (0..64).map(|i| full[(i, i)]).sum();
            let sector_trace: C64 = (0..6)
                .map(|k| {
                    let op = sector_floquet(&params, &build_sector_basis(6, k).unwrap(), symmetrized).unwrap();
                    (0..op.dim()).map(|i| op.matrix[(i, i)]).sum::<C64>()
                })
                .sum();
            assert!((full_trace - sector_trace).norm() < 1e-10);
        }
    }

    #[test]
    fn symmetrized_sector_is_complex_symmetric() {
        let params = ModelParams::canonical(10);
        let op = sector_floquet(&params, &build_sector_basis(10, 1).unwrap(), true).unwrap();
        assert!(op.symmetry_error < 1e-10, "{}", op.symmetry_error);
        assert!(op.unitarity_error < 1e-10);
    }

    #[test]
    fn y_field_is_rotated_into_xz_plane() {
        let p = ModelParams::new(0.7, [0.0, 0.9, 0.9], 6).unwrap();
        assert!((p.field_rotation() - PI / 2.0).abs() < 1e-15);
        let [bx, by, bz] = p.working_field();
        assert!((bx - 0.9).abs() < 1e-15 && by == 0.0 && bz == 0.9);
        let op = sector_floquet(&p, &build_sector_basis(6, 1).unwrap(), true).unwrap();
        assert!(op.symmetry_error < 1e-10);
    }

    #[test]
    fn sectors_do_not_mix() {
        // <u|U|v> = 0 for u in H_k and v in H_k', k != k'
        let sites = 6;
        let params = ModelParams::canonical(sites);
        let propagator = FloquetPropagator::new(params, false).unwrap();
        let bases: Vec<_> = (0..sites).map(|k| build_sector_basis(sites, k).unwrap()).collect();
        let mut state = vec![C64::default(); 1 << sites];
        for &(x, a) in &bases[2].vectors[0] {
            state[x as usize] = a;
        }
        propagator.apply(&mut state);
        for (k, basis) in bases.iter().enumerate() {
            if k == 2 {
                continue;
            }
            for u in &basis.vectors {
                let overlap: C64 = u.iter().map(|&(x, a)| a.conj() * state[x as usize]).sum();
                assert!(overlap.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_mismatched_basis() {
        let basis = build_sector_basis(6, 1).unwrap();
        assert!(sector_floquet(&ModelParams::canonical(8), &basis, true).is_err());
        assert!(build_sector_basis(6, 6).is_err());
    }
}
