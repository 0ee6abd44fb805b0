//! Translation orbits of computational basis states and momentum-sector
//! dimensions.
//!
//! A basis state of `L` qudits of local dimension `d` is the digit string
//! `m_0 m_1 ... m_{L-1}`. It is packed into an integer index with `m_0` as the
//! most significant base-`d` digit, so integer order coincides with
//! lexicographic order of the digit strings.
//!
//! The cyclic translation acts as `T |m_0 ... m_{L-1}> = |m_{L-1} m_0 ... m_{L-2}>`.
//! The number of translation orbits whose states have primitive period `J`
//! follows from Möbius inversion of `sum_{J | L} J N(J) = d^L`, and the
//! dimension of the momentum subspace `k` counts the orbits with `k J / L`
//! integral.

use crate::error::{KicError, Result};

/// Largest state-space size accepted by the exact counting routines.
pub const MAX_STATE_SPACE: u128 = 1u128 << 64;

/// Default cap on `d^L` for routines that walk the whole state space.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 28;

/// A computational basis state `|m_0 m_1 ... m_{L-1}>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisState {
    digits: Vec<u32>,
    d: u32,
}

impl BasisState {
    pub fn new(digits: Vec<u32>, d: u32) -> Result<Self> {
        if d < 2 {
            return Err(KicError::invalid(format!("local dimension d={d} must be >= 2")));
        }
        if digits.is_empty() {
            return Err(KicError::invalid("a basis state needs at least one site"));
        }
        if let Some(bad) = digits.iter().find(|&&m| m >= d) {
            return Err(KicError::invalid(format!("digit {bad} out of range for d={d}")));
        }
        Ok(Self { digits, d })
    }

    /// Parses a string of decimal digits such as `"0101"`.
    pub fn parse(s: &str, d: u32) -> Result<Self> {
        let digits = s
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .ok_or_else(|| KicError::invalid(format!("'{c}' is not a digit")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(digits, d)
    }

    pub fn from_index(index: u64, sites: usize, d: u32) -> Result<Self> {
        let size = state_space_size(sites, d)?;
        if index as u128 >= size {
            return Err(KicError::invalid(format!(
                "index {index} outside state space of size {size}"
            )));
        }
        let mut digits = vec![0; sites];
        let mut x = index;
        for slot in digits.iter_mut().rev() {
            *slot = (x % d as u64) as u32;
            x /= d as u64;
        }
        Self::new(digits, d)
    }

    pub fn index(&self) -> u64 {
        self.digits
            .iter()
            .fold(0u64, |acc, &m| acc.wrapping_mul(self.d as u64).wrapping_add(m as u64))
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn sites(&self) -> usize {
        self.digits.len()
    }

    pub fn local_dim(&self) -> u32 {
        self.d
    }

    /// One application of the cyclic translation `T`.
    pub fn translated(&self) -> Self {
        let mut digits = self.digits.clone();
        digits.rotate_right(1);
        Self { digits, d: self.d }
    }

    /// The site reflection `R |m_0 ... m_{L-1}> = |m_{L-1} ... m_0>`.
    pub fn reflected(&self) -> Self {
        let mut digits = self.digits.clone();
        digits.reverse();
        Self { digits, d: self.d }
    }
}

impl std::fmt::Display for BasisState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|")?;
        for m in &self.digits {
            write!(f, "{m}")?;
        }
        write!(f, ">")
    }
}

/// A translation-equivalence class: its lexicographically minimal member and
/// the primitive period shared by all members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrbitClass {
    /// Packed index of the representative.
    pub representative: u64,
    pub primitive_period: usize,
}

impl OrbitClass {
    pub fn representative_state(&self, sites: usize, d: u32) -> BasisState {
        BasisState::from_index(self.representative, sites, d).expect("orbit representative lies in the state space")
    }
}

/// `d^L`, rejected above 2^64.
pub fn state_space_size(sites: usize, d: u32) -> Result<u128> {
    checked_power(d as u128, sites)
        .filter(|&n| n <= MAX_STATE_SPACE)
        .ok_or_else(|| KicError::ResourceLimit(format!("d^L = {d}^{sites} exceeds 2^64")))
}

fn checked_power(base: u128, exp: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
        if acc > MAX_STATE_SPACE {
            return None;
        }
    }
    Some(acc)
}

/// Positive divisors of `n` in increasing order.
pub fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|j| n.is_multiple_of(*j)).collect()
}

/// The Möbius function.
pub fn mobius(n: u64) -> Result<i32> {
    if n == 0 {
        return Err(KicError::invalid("the Möbius function is defined for n >= 1"));
    }
    let mut n = n;
    let mut sign = 1;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return Ok(0);
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    Ok(sign)
}

/// Smallest `J >= 1` with `T^J |n> = |n>`.
pub fn primitive_period(state: &BasisState) -> usize {
    let sites = state.sites();
    let digits = state.digits();
    divisors(sites)
        .into_iter()
        .find(|&j| (0..sites).all(|i| digits[i] == digits[(i + j) % sites]))
        .unwrap_or(sites)
}

/// Whether `P_k |n> != 0` for a state of primitive period `period`, i.e.
/// whether `k * period / L` is an integer.
pub fn survives_projection(period: usize, k: usize, sites: usize) -> Result<bool> {
    if period == 0 || !sites.is_multiple_of(period) {
        return Err(KicError::invalid(format!(
            "primitive period {period} does not divide L={sites}"
        )));
    }
    if k >= sites {
        return Err(KicError::invalid(format!("momentum k={k} outside 0..{sites}")));
    }
    Ok((k * period).is_multiple_of(sites))
}

/// Number of translation orbits whose members have primitive period exactly
/// `period`, `(1/J) sum_{m | J} mu(J/m) d^m`.
pub fn count_primitive_classes(period: usize, d: u32) -> Result<u128> {
    if period == 0 {
        return Err(KicError::invalid("primitive period must be >= 1"));
    }
    let mut sum: i128 = 0;
    for m in divisors(period) {
        let mu = mobius((period / m) as u64)?;
        if mu == 0 {
            continue;
        }
        let power = state_space_size(m, d)? as i128;
        sum += mu as i128 * power;
    }
    if sum < 0 || sum % period as i128 != 0 {
        return Err(KicError::Consistency(format!(
            "Möbius sum {sum} for J={period}, d={d} is not a non-negative multiple of J"
        )));
    }
    Ok((sum / period as i128) as u128)
}

/// `dim H_k` for `L` qudits of dimension `d`.
pub fn sector_dimension(sites: usize, d: u32, k: usize) -> Result<u128> {
    if sites == 0 {
        return Err(KicError::invalid("L must be >= 1"));
    }
    if k >= sites {
        return Err(KicError::invalid(format!("momentum k={k} outside 0..{sites}")));
    }
    state_space_size(sites, d)?;
    let mut dim = 0u128;
    for period in divisors(sites) {
        if survives_projection(period, k, sites)? {
            dim += count_primitive_classes(period, d)?;
        }
    }
    Ok(dim)
}

/// Whether `k` is one of the reflection-invariant momenta `0` and `L/2`.
pub fn is_special_sector(sites: usize, k: usize) -> bool {
    k == 0 || (sites.is_multiple_of(2) && k == sites / 2)
}

/// The non-special momenta `1 ..= ceil(L/2) - 1`; `k` and `L - k` carry the
/// same spectrum so only one of each pair appears.
pub fn relevant_sectors(sites: usize) -> Vec<usize> {
    (1..sites.div_ceil(2)).collect()
}

/// Dimensions of all `L` momentum sectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorDimensionTable {
    pub sites: usize,
    pub d: u32,
    pub dims: Vec<u128>,
}

impl SectorDimensionTable {
    pub fn new(sites: usize, d: u32) -> Result<Self> {
        if d < 2 {
            return Err(KicError::invalid(format!("local dimension d={d} must be >= 2")));
        }
        let dims = (0..sites)
            .map(|k| sector_dimension(sites, d, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sites, d, dims })
    }

    pub fn total(&self) -> u128 {
        self.dims.iter().sum()
    }
}

/// Index-level helpers on packed states.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PackedSpace {
    pub sites: usize,
    pub d: u64,
    /// `d^(L-1)`, the weight of digit `m_0`.
    top: u64,
}

impl PackedSpace {
    pub fn new(sites: usize, d: u32) -> Result<Self> {
        let size = state_space_size(sites, d)?;
        if size > u64::MAX as u128 {
            return Err(KicError::ResourceLimit(format!(
                "d^L = {d}^{sites} does not fit a packed index"
            )));
        }
        Ok(Self {
            sites,
            d: d as u64,
            top: (d as u64).pow(sites as u32 - 1),
        })
    }

    #[inline]
    pub fn translate(&self, x: u64) -> u64 {
        x / self.d + (x % self.d) * self.top
    }

    #[inline]
    pub fn reflect(&self, mut x: u64) -> u64 {
        let mut y = 0;
        for _ in 0..self.sites {
            y = y * self.d + x % self.d;
            x /= self.d;
        }
        y
    }

    /// Minimal member of the orbit of `x` and its primitive period.
    pub fn canonical(&self, x: u64) -> (u64, usize) {
        let mut rep = x;
        let mut y = self.translate(x);
        let mut period = 1;
        while y != x {
            rep = rep.min(y);
            y = self.translate(y);
            period += 1;
        }
        (rep, period)
    }
}

/// One [`OrbitClass`] per translation orbit, sorted by representative.
pub fn enumerate_orbit_representatives(sites: usize, d: u32) -> Result<Vec<OrbitClass>> {
    enumerate_orbit_representatives_with_budget(sites, d, DEFAULT_ENUMERATION_BUDGET)
}

pub fn enumerate_orbit_representatives_with_budget(sites: usize, d: u32, budget: u64) -> Result<Vec<OrbitClass>> {
    if sites == 0 || d < 2 {
        return Err(KicError::invalid(format!(
            "need L >= 1 and d >= 2, got L={sites}, d={d}"
        )));
    }
    let size = state_space_size(sites, d)?;
    if size > budget as u128 {
        return Err(KicError::ResourceLimit(format!(
            "enumerating {size} states exceeds the budget of {budget}"
        )));
    }
    let space = PackedSpace::new(sites, d)?;
    let mut classes = Vec::new();
    'states: for x in 0..size as u64 {
        let mut y = space.translate(x);
        let mut period = 1;
        while y != x {
            if y < x {
                continue 'states;
            }
            y = space.translate(y);
            period += 1;
        }
        classes.push(OrbitClass {
            representative: x,
            primitive_period: period,
        });
    }
    Ok(classes)
}
