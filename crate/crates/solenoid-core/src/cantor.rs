//! Transversal Cantor sets: binary cylinder trees with holonomy-invariant
//! (or deliberately non-invariant) masses.
//!
//! A transversal is described by its construction rule, not a materialised
//! tree: cylinder intervals and masses are computed along the address path.
//! Mass splitting uses a complement rule with a one-ulp fixup so that the two
//! children of any node sum to the parent mass exactly, at every depth. This
//! makes additivity an identity rather than a tolerance, and makes the
//! dyadic-odometer invariance of balanced Bernoulli masses hold with
//! deviation exactly zero.

use crate::error::{Result, SolenoidError};

pub const MAX_DEPTH: usize = 32;

/// Address of a cylinder: the branch choices from the root, most significant
/// first. Packed into a `u32`, one bit per level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address {
    bits: u32,
    depth: u8,
}

impl Address {
    pub fn root() -> Self {
        Address { bits: 0, depth: 0 }
    }

    pub fn from_bits(bits: u32, depth: usize) -> Self {
        assert!(depth <= MAX_DEPTH);
        let mask = if depth == 32 {
            u32::MAX
        } else {
            (1u32 << depth) - 1
        };
        Address {
            bits: bits & mask,
            depth: depth as u8,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.len() > MAX_DEPTH {
            return Err(SolenoidError::Address {
                address: s.into(),
                reason: format!("deeper than the supported maximum {MAX_DEPTH}"),
            });
        }
        let mut bits = 0u32;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits |= 1 << i,
                _ => {
                    return Err(SolenoidError::Address {
                        address: s.into(),
                        reason: "symbols must be 0 or 1".into(),
                    })
                }
            }
        }
        Ok(Address {
            bits,
            depth: s.len() as u8,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth as usize
    }

    /// Branch at level `i` (0-based from the root).
    pub fn symbol(&self, i: usize) -> u8 {
        debug_assert!(i < self.depth());
        ((self.bits >> i) & 1) as u8
    }

    pub fn child(&self, s: u8) -> Address {
        debug_assert!(self.depth() < MAX_DEPTH);
        Address {
            bits: self.bits | ((s as u32) << self.depth),
            depth: self.depth + 1,
        }
    }

    pub fn is_prefix_of(&self, other: &Address) -> bool {
        if self.depth > other.depth {
            return false;
        }
        let mask = if self.depth == 32 {
            u32::MAX
        } else {
            (1u32 << self.depth) - 1
        };
        (self.bits & mask) == (other.bits & mask)
    }

    /// All addresses at `depth`, in interval order (left to right does not
    /// coincide with numeric order of `bits`; ordering here is by the path,
    /// which matches interval order for every construction in this module).
    pub fn all_at_depth(depth: usize) -> Vec<Address> {
        assert!(depth <= 22, "enumerating more than 2^22 cylinders");
        let count = 1usize << depth;
        let mut out = Vec::with_capacity(count);
        let mut stack = vec![Address::root()];
        while let Some(a) = stack.pop() {
            if a.depth() == depth {
                out.push(a);
            } else {
                stack.push(a.child(1));
                stack.push(a.child(0));
            }
        }
        out
    }
}

impl std::fmt::Display for Address {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.depth == 0 {
            return write!(f, "(root)");
        }
        for i in 0..self.depth() {
            write!(f, "{}", self.symbol(i))?;
        }
        Ok(())
    }
}

/// Gap schedule of a positive-measure (fat) Cantor construction: `gap(d)` is
/// the absolute length removed from the middle of each interval at stage `d`
/// (1-based).
#[derive(Debug, Clone, PartialEq)]
pub enum GapSchedule {
    /// `g_d = c * 4^{-d}`; removes total mass `c/2`, leaving `1 - c/2`.
    Geometric { c: f64 },
    /// Finite schedule, zero beyond the listed stages.
    Explicit(Vec<f64>),
}

impl GapSchedule {
    pub fn gap(&self, stage: usize) -> f64 {
        match self {
            GapSchedule::Geometric { c } => c * 0.25f64.powi(stage as i32),
            GapSchedule::Explicit(gaps) => gaps.get(stage - 1).copied().unwrap_or(0.0),
        }
    }

    /// Total measure removed inside one depth-`d` interval by all later
    /// stages: `sum_{j>=1} 2^{j-1} gap(d+j)`.
    pub fn tail(&self, depth: usize) -> f64 {
        match self {
            GapSchedule::Geometric { c } => 0.5 * c * 0.25f64.powi(depth as i32),
            GapSchedule::Explicit(gaps) => {
                let mut acc = 0.0;
                for (i, g) in gaps.iter().enumerate() {
                    let stage = i + 1;
                    if stage > depth {
                        acc += 2f64.powi((stage - depth - 1) as i32) * g;
                    }
                }
                acc
            }
        }
    }
}

/// Construction rule of the transversal set.
#[derive(Debug, Clone, PartialEq)]
pub enum TransversalKind {
    /// Remove the middle `ratio` of each interval; limit set has measure 0.
    MiddleCantor { ratio: f64 },
    /// Remove absolute gaps from a schedule; limit set has positive measure.
    FatCantor { schedule: GapSchedule },
    /// The whole interval `[0, 1]`, subdivided dyadically.
    FullInterval,
    /// A single point; the transversal of an embedded submanifold.
    Atom { point: f64 },
}

/// Mass assignment on the cylinder tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureKind {
    /// Product measure: branch 1 carries fraction `p`, branch 0 carries the
    /// complement.
    Bernoulli { p: f64 },
    /// Proportional to the Lebesgue measure of the limit set inside each
    /// cylinder, scaled to the declared total. All constructions here are
    /// left/right symmetric, so each child carries exactly half its parent.
    LebesgueRestricted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CantorTransversal {
    kind: TransversalKind,
    depth: usize,
    measure: MeasureKind,
    total_mass: f64,
}

/// Walk `big` by ulps until `small + big` rounds exactly to `m`. Because
/// `big >= m/2`, its ulp is no coarser than the ulp of `m`, so the rounded
/// sum sweeps the float grid near `m` in single steps; the only way to miss
/// is a round-to-even tie lock, reported as `None`.
fn walk_complement(small: f64, m: f64) -> Option<f64> {
    let mut big = m - small;
    big += m - (small + big);
    for _ in 0..64 {
        let s = small + big;
        if s == m {
            return Some(big);
        }
        big = if s > m { big.next_down() } else { big.next_up() };
    }
    None
}

/// Split `m` into the two child masses. The smaller-weight side is computed
/// by multiplication, the other as the complement, adjusted so that
/// `left + right == m` holds exactly. If every complement sum ties halfway
/// between floats (round-to-even then skips over `m` forever), the small
/// side is nudged by one of its own, strictly finer, ulps to break the tie.
fn split_mass(m: f64, weight0: f64) -> (f64, f64) {
    let (small_is_zero, mut small) = if weight0 <= 0.5 {
        (true, m * weight0)
    } else {
        (false, m * (1.0 - weight0))
    };
    let mut big = m - small;
    for attempt in 0..4 {
        match walk_complement(small, m) {
            Some(b) => {
                big = b;
                break;
            }
            None => {
                small = match attempt {
                    0 => small.next_down(),
                    1 => small.next_up().next_up(),
                    _ => small.next_down(),
                };
            }
        }
    }
    if small_is_zero {
        (small, big)
    } else {
        (big, small)
    }
}

impl CantorTransversal {
    pub fn build(
        kind: TransversalKind,
        depth: usize,
        measure: MeasureKind,
        total_mass: f64,
    ) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(SolenoidError::Construction(format!(
                "depth {depth} exceeds the supported maximum {MAX_DEPTH}"
            )));
        }
        if !(total_mass > 0.0) || !total_mass.is_finite() {
            return Err(SolenoidError::Construction(format!(
                "total mass {total_mass} must be positive and finite"
            )));
        }
        match &kind {
            TransversalKind::MiddleCantor { ratio } => {
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(SolenoidError::Construction(format!(
                        "middle-Cantor ratio {ratio} outside (0, 1)"
                    )));
                }
                if matches!(measure, MeasureKind::LebesgueRestricted) {
                    return Err(SolenoidError::Construction(
                        "a measure-zero middle-Cantor set cannot carry a Lebesgue-restricted measure"
                            .into(),
                    ));
                }
            }
            TransversalKind::FatCantor { schedule } => {
                // Every stage must remove less than the current interval
                // length, and the limit set must keep positive measure.
                let mut len = 1.0f64;
                for stage in 1..=depth.max(1) {
                    let g = schedule.gap(stage);
                    if !(g >= 0.0) || g >= len {
                        return Err(SolenoidError::Construction(format!(
                            "gap schedule exceeds interval length at stage {stage} (gap {g}, length {len})"
                        )));
                    }
                    len = 0.5 * (len - g);
                }
                let limit = 1.0 - schedule.tail(0);
                if limit <= 0.0 {
                    return Err(SolenoidError::Construction(format!(
                        "gap schedule removes total mass {} >= 1",
                        schedule.tail(0)
                    )));
                }
            }
            TransversalKind::FullInterval => {}
            TransversalKind::Atom { point } => {
                if !(*point >= 0.0 && *point <= 1.0) {
                    return Err(SolenoidError::Construction(format!(
                        "atom {point} outside [0, 1]"
                    )));
                }
                if depth != 0 {
                    return Err(SolenoidError::Construction(
                        "an atomic transversal has depth 0".into(),
                    ));
                }
            }
        }
        if let MeasureKind::Bernoulli { p } = measure {
            if !(p > 0.0 && p < 1.0) {
                return Err(SolenoidError::Construction(format!(
                    "bernoulli parameter {p} outside (0, 1)"
                )));
            }
        }
        Ok(CantorTransversal {
            kind,
            depth,
            measure,
            total_mass,
        })
    }

    pub fn kind(&self) -> &TransversalKind {
        &self.kind
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn measure_kind(&self) -> MeasureKind {
        self.measure
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.kind, TransversalKind::Atom { .. })
    }

    /// Cylinder addresses at the working depth (a single root for atoms).
    pub fn cylinders(&self, depth: usize) -> Vec<Address> {
        if self.is_atomic() {
            return vec![Address::root()];
        }
        Address::all_at_depth(depth.min(self.depth))
    }

    fn check_depth(&self, addr: &Address) -> Result<()> {
        if addr.depth() > self.depth && !self.is_atomic() {
            return Err(SolenoidError::Address {
                address: addr.to_string(),
                reason: format!("deeper than the built depth {}", self.depth),
            });
        }
        Ok(())
    }

    /// Closed interval of the cylinder at `addr`.
    pub fn interval(&self, addr: &Address) -> Result<(f64, f64)> {
        self.check_depth(addr)?;
        match &self.kind {
            TransversalKind::Atom { point } => Ok((*point, *point)),
            TransversalKind::FullInterval => {
                let (mut a, mut b) = (0.0, 1.0);
                for i in 0..addr.depth() {
                    let mid = 0.5 * (a + b);
                    if addr.symbol(i) == 0 {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                Ok((a, b))
            }
            TransversalKind::MiddleCantor { ratio } => {
                let keep = 0.5 * (1.0 - ratio);
                let (mut a, mut b) = (0.0, 1.0);
                for i in 0..addr.depth() {
                    let len = (b - a) * keep;
                    if addr.symbol(i) == 0 {
                        b = a + len;
                    } else {
                        a = b - len;
                    }
                }
                Ok((a, b))
            }
            TransversalKind::FatCantor { schedule } => {
                let (mut a, mut b) = (0.0, 1.0);
                for i in 0..addr.depth() {
                    let len = 0.5 * ((b - a) - schedule.gap(i + 1));
                    if addr.symbol(i) == 0 {
                        b = a + len;
                    } else {
                        a = b - len;
                    }
                }
                Ok((a, b))
            }
        }
    }

    /// A genuine point of the transversal set inside the cylinder: the left
    /// endpoint, which every construction keeps in the limit set.
    pub fn representative(&self, addr: &Address) -> Result<f64> {
        Ok(self.interval(addr)?.0)
    }

    /// Mass of the cylinder at `addr`.
    pub fn cylinder_measure(&self, addr: &Address) -> Result<f64> {
        self.check_depth(addr)?;
        if self.is_atomic() {
            return Ok(self.total_mass);
        }
        let weight0 = match self.measure {
            MeasureKind::Bernoulli { p } => 1.0 - p,
            MeasureKind::LebesgueRestricted => 0.5,
        };
        let mut m = self.total_mass;
        for i in 0..addr.depth() {
            let (m0, m1) = split_mass(m, weight0);
            m = if addr.symbol(i) == 0 { m0 } else { m1 };
        }
        Ok(m)
    }

    /// Lebesgue measure of the limit set inside the cylinder (not the
    /// transversal mass; used by the rigorous overlap certificates).
    pub fn limit_lebesgue(&self, addr: &Address) -> Result<f64> {
        self.check_depth(addr)?;
        match &self.kind {
            TransversalKind::Atom { .. } | TransversalKind::MiddleCantor { .. } => Ok(0.0),
            TransversalKind::FullInterval => {
                let (a, b) = self.interval(addr)?;
                Ok(b - a)
            }
            TransversalKind::FatCantor { schedule } => {
                let (a, b) = self.interval(addr)?;
                Ok((b - a) - schedule.tail(addr.depth()))
            }
        }
    }

    /// Total Lebesgue measure of the limit set.
    pub fn limit_lebesgue_total(&self) -> f64 {
        self.limit_lebesgue(&Address::root()).unwrap_or(0.0)
    }
}

/// Holonomy along the suspension: how leaving one cylinder re-enters the
/// transversal.
#[derive(Debug, Clone, PartialEq)]
pub enum ReturnMap {
    Identity,
    /// Add one with carry in the branch digits, least significant first:
    /// the dyadic odometer.
    Odometer,
    /// A permutation of the depth-`d` cylinders, acting on address prefixes.
    /// `map[i]` is the image of prefix `i` (binary, level 0 = bit 0).
    Permutation { prefix_depth: usize, map: Vec<u32> },
}

impl ReturnMap {
    pub fn validate(&self) -> Result<()> {
        if let ReturnMap::Permutation { prefix_depth, map } = self {
            let count = 1usize << prefix_depth;
            if map.len() != count {
                return Err(SolenoidError::Construction(format!(
                    "permutation over depth {prefix_depth} needs {count} entries, got {}",
                    map.len()
                )));
            }
            let mut seen = vec![false; count];
            for &img in map {
                if (img as usize) >= count || seen[img as usize] {
                    return Err(SolenoidError::Construction(
                        "return map is not a bijection of cylinders".into(),
                    ));
                }
                seen[img as usize] = true;
            }
        }
        Ok(())
    }

    /// Minimum address depth on which the map acts.
    pub fn prefix_depth(&self) -> usize {
        match self {
            ReturnMap::Permutation { prefix_depth, .. } => *prefix_depth,
            _ => 0,
        }
    }

    pub fn apply(&self, addr: &Address) -> Result<Address> {
        match self {
            ReturnMap::Identity => Ok(*addr),
            ReturnMap::Odometer => {
                let mut bits = addr.bits;
                let depth = addr.depth();
                let mut i = 0;
                while i < depth {
                    let mask = 1u32 << i;
                    if bits & mask == 0 {
                        bits |= mask;
                        break;
                    }
                    bits &= !mask; // carry
                    i += 1;
                }
                Ok(Address::from_bits(bits, depth))
            }
            ReturnMap::Permutation { prefix_depth, map } => {
                if addr.depth() < *prefix_depth {
                    return Err(SolenoidError::Address {
                        address: addr.to_string(),
                        reason: format!(
                            "permutation return map needs depth >= {prefix_depth}"
                        ),
                    });
                }
                let mask = (1u32 << prefix_depth) - 1;
                let prefix = addr.bits & mask;
                let image = map[prefix as usize];
                Ok(Address::from_bits(
                    (addr.bits & !mask) | image,
                    addr.depth(),
                ))
            }
        }
    }

    pub fn apply_inverse(&self, addr: &Address) -> Result<Address> {
        match self {
            ReturnMap::Identity => Ok(*addr),
            ReturnMap::Odometer => {
                // subtract one with borrow
                let mut bits = addr.bits;
                let depth = addr.depth();
                let mut i = 0;
                while i < depth {
                    let mask = 1u32 << i;
                    if bits & mask != 0 {
                        bits &= !mask;
                        break;
                    }
                    bits |= mask; // borrow
                    i += 1;
                }
                Ok(Address::from_bits(bits, depth))
            }
            ReturnMap::Permutation { prefix_depth, map } => {
                if addr.depth() < *prefix_depth {
                    return Err(SolenoidError::Address {
                        address: addr.to_string(),
                        reason: format!(
                            "permutation return map needs depth >= {prefix_depth}"
                        ),
                    });
                }
                let mask = (1u32 << prefix_depth) - 1;
                let prefix = addr.bits & mask;
                let pre = map
                    .iter()
                    .position(|&img| img == prefix)
                    .expect("validated permutation is surjective");
                Ok(Address::from_bits(
                    (addr.bits & !mask) | pre as u32,
                    addr.depth(),
                ))
            }
        }
    }

    /// `h^j` for any integer power.
    pub fn iterate(&self, addr: &Address, j: i64) -> Result<Address> {
        let mut a = *addr;
        if j >= 0 {
            for _ in 0..j {
                a = self.apply(&a)?;
            }
        } else {
            for _ in 0..(-j) {
                a = self.apply_inverse(&a)?;
            }
        }
        Ok(a)
    }
}

/// Largest mass discrepancy `|mass(h(C)) - mass(C)|` over depth-`d`
/// cylinders: zero exactly when the measure is invariant under the declared
/// return map at that resolution.
pub fn holonomy_invariance_deviation(
    transversal: &CantorTransversal,
    map: &ReturnMap,
    depth: usize,
) -> Result<f64> {
    map.validate()?;
    if depth < map.prefix_depth() {
        return Err(SolenoidError::Parameter(format!(
            "deviation needs depth >= the return map's prefix depth {}",
            map.prefix_depth()
        )));
    }
    let mut worst = 0.0f64;
    for addr in transversal.cylinders(depth) {
        let image = map.apply(&addr)?;
        let m = transversal.cylinder_measure(&addr)?;
        let mh = transversal.cylinder_measure(&image)?;
        worst = worst.max((mh - m).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn middle_third(depth: usize) -> CantorTransversal {
        CantorTransversal::build(
            TransversalKind::MiddleCantor { ratio: 1.0 / 3.0 },
            depth,
            MeasureKind::Bernoulli { p: 0.5 },
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn middle_third_depth_two_geometry_and_mass() {
        let t = middle_third(2);
        let cylinders = t.cylinders(2);
        assert_eq!(cylinders.len(), 4);
        for addr in &cylinders {
            let (a, b) = t.interval(addr).unwrap();
            assert_abs_diff_eq!(b - a, 1.0 / 9.0, epsilon = 1e-15);
            assert_eq!(t.cylinder_measure(addr).unwrap(), 0.25);
        }
        let a01 = Address::parse("01").unwrap();
        assert_eq!(t.cylinder_measure(&a01).unwrap(), 0.25);
        let (lo, hi) = t.interval(&a01).unwrap();
        assert_abs_diff_eq!(lo, 2.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 3.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn root_has_declared_total_mass() {
        let t = middle_third(3);
        assert_eq!(t.cylinder_measure(&Address::root()).unwrap(), 1.0);
        let (a, b) = t.interval(&Address::root()).unwrap();
        assert_eq!((a, b), (0.0, 1.0));
    }

    #[test]
    fn fat_cantor_keeps_length_above_gap_sum_bound() {
        // schedule g_d = 4^{-d}; by depth D the removed length is
        // sum_{d<=D} 2^{d-1} 4^{-d} < 1/2, computed here independently.
        let t = CantorTransversal::build(
            TransversalKind::FatCantor {
                schedule: GapSchedule::Geometric { c: 1.0 },
            },
            10,
            MeasureKind::LebesgueRestricted,
            1.0,
        )
        .unwrap();
        for depth in 1..=10usize {
            let total: f64 = t
                .cylinders(depth)
                .iter()
                .map(|a| {
                    let (lo, hi) = t.interval(a).unwrap();
                    hi - lo
                })
                .sum();
            let removed: f64 = (1..=depth)
                .map(|d| 2f64.powi(d as i32 - 1) * 0.25f64.powi(d as i32))
                .sum();
            assert!(total >= 1.0 - removed - 1e-12);
            assert!(total > 0.5);
        }
    }

    #[test]
    fn fat_cantor_limit_measure_matches_gap_accounting() {
        // independent oracle: enumerate removed gaps inside [0, 1] directly
        let c = 0.8;
        let t = CantorTransversal::build(
            TransversalKind::FatCantor {
                schedule: GapSchedule::Geometric { c },
            },
            14,
            MeasureKind::LebesgueRestricted,
            0.6,
        )
        .unwrap();
        // limit measure = 1 - c/2 = 0.6
        assert_abs_diff_eq!(t.limit_lebesgue_total(), 0.6, epsilon = 1e-12);
        // inside a depth-d cylinder: interval length minus the future gaps
        for depth in [1usize, 3, 6] {
            for addr in t.cylinders(depth) {
                let (a, b) = t.interval(&addr).unwrap();
                let mut expected = b - a;
                for stage in depth + 1..=90 {
                    expected -= 2f64.powi((stage - depth - 1) as i32)
                        * c
                        * 0.25f64.powi(stage as i32);
                }
                assert_abs_diff_eq!(
                    t.limit_lebesgue(&addr).unwrap(),
                    expected,
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn lebesgue_restricted_mass_is_symmetric_split() {
        let t = CantorTransversal::build(
            TransversalKind::FatCantor {
                schedule: GapSchedule::Geometric { c: 0.8 },
            },
            8,
            MeasureKind::LebesgueRestricted,
            0.6,
        )
        .unwrap();
        // the construction is symmetric, so cylinder mass is total / 2^d;
        // cross-check against the limit Lebesgue measure inside the cylinder
        for addr in t.cylinders(5) {
            let m = t.cylinder_measure(&addr).unwrap();
            assert_abs_diff_eq!(m, 0.6 / 32.0, epsilon = 1e-16);
            assert_abs_diff_eq!(m, t.limit_lebesgue(&addr).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn mass_additivity_exact_at_every_node() {
        for p in [0.5, 0.3, 0.123456789, 0.9999, 1e-8] {
            let t = CantorTransversal::build(
                TransversalKind::MiddleCantor { ratio: 0.5 },
                12,
                MeasureKind::Bernoulli { p },
                0.7,
            )
            .unwrap();
            for depth in 0..12usize {
                for addr in t.cylinders(depth) {
                    let m = t.cylinder_measure(&addr).unwrap();
                    let m0 = t.cylinder_measure(&addr.child(0)).unwrap();
                    let m1 = t.cylinder_measure(&addr.child(1)).unwrap();
                    assert_eq!(m0 + m1, m, "additivity violated at {addr}");
                }
            }
        }
    }

    #[test]
    fn intervals_nested_and_disjoint() {
        let t = CantorTransversal::build(
            TransversalKind::FatCantor {
                schedule: GapSchedule::Geometric { c: 0.8 },
            },
            10,
            MeasureKind::LebesgueRestricted,
            1.0,
        )
        .unwrap();
        for depth in 1..=6usize {
            let cyls = t.cylinders(depth);
            let mut intervals: Vec<(f64, f64)> =
                cyls.iter().map(|a| t.interval(a).unwrap()).collect();
            intervals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            for w in intervals.windows(2) {
                assert!(w[0].1 < w[1].0, "cylinders overlap at depth {depth}");
            }
        }
        // nesting
        let addr = Address::parse("0110").unwrap();
        let (a, b) = t.interval(&addr).unwrap();
        let (pa, pb) = t
            .interval(&Address::parse("011").unwrap())
            .unwrap();
        assert!(pa <= a && b <= pb);
    }

    #[test]
    fn odometer_is_add_one_with_carry() {
        let h = ReturnMap::Odometer;
        let a = Address::parse("110").unwrap(); // 1 + 2 -> carries to 001
        assert_eq!(h.apply(&a).unwrap(), Address::parse("001").unwrap());
        let b = Address::parse("111").unwrap(); // wraps around
        assert_eq!(h.apply(&b).unwrap(), Address::parse("000").unwrap());
        // inverse undoes
        for bits in 0..8u32 {
            let addr = Address::from_bits(bits, 3);
            assert_eq!(h.apply_inverse(&h.apply(&addr).unwrap()).unwrap(), addr);
        }
    }

    #[test]
    fn balanced_bernoulli_odometer_deviation_exactly_zero() {
        let t = middle_third(16);
        for depth in [1usize, 4, 9, 16] {
            let d =
                holonomy_invariance_deviation(&t, &ReturnMap::Odometer, depth).unwrap();
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn skewed_bernoulli_odometer_deviation_at_depth_two() {
        // masses: 00 -> 0.49, 10 -> 0.21, 01 -> 0.21, 11 -> 0.09;
        // odometer sends 11 -> 00, so the worst deviation is 0.40
        let t = CantorTransversal::build(
            TransversalKind::MiddleCantor { ratio: 1.0 / 3.0 },
            4,
            MeasureKind::Bernoulli { p: 0.3 },
            1.0,
        )
        .unwrap();
        let d = holonomy_invariance_deviation(&t, &ReturnMap::Odometer, 2).unwrap();
        assert_abs_diff_eq!(d, 0.40, epsilon = 1e-12);
        assert!(d > 1e-3);
    }

    #[test]
    fn permutation_return_map_validates_and_applies() {
        let h = ReturnMap::Permutation {
            prefix_depth: 2,
            map: vec![2, 0, 3, 1],
        };
        h.validate().unwrap();
        let a = Address::parse("001").unwrap(); // prefix 00 = 0 -> 2 = "01"
        assert_eq!(h.apply(&a).unwrap(), Address::parse("011").unwrap());
        assert_eq!(h.apply_inverse(&h.apply(&a).unwrap()).unwrap(), a);
        let bad = ReturnMap::Permutation {
            prefix_depth: 2,
            map: vec![2, 0, 3, 3],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn construction_rejects_invalid_parameters() {
        assert!(CantorTransversal::build(
            TransversalKind::MiddleCantor { ratio: 1.5 },
            4,
            MeasureKind::Bernoulli { p: 0.5 },
            1.0
        )
        .is_err());
        assert!(CantorTransversal::build(
            TransversalKind::MiddleCantor { ratio: 0.5 },
            4,
            MeasureKind::LebesgueRestricted,
            1.0
        )
        .is_err());
        // gap larger than the interval at stage 1
        assert!(CantorTransversal::build(
            TransversalKind::FatCantor {
                schedule: GapSchedule::Explicit(vec![1.5])
            },
            4,
            MeasureKind::LebesgueRestricted,
            1.0
        )
        .is_err());
        assert!(CantorTransversal::build(
            TransversalKind::FullInterval,
            40,
            MeasureKind::LebesgueRestricted,
            1.0
        )
        .is_err());
        assert!(CantorTransversal::build(
            TransversalKind::FullInterval,
            4,
            MeasureKind::Bernoulli { p: 0.0 },
            1.0
        )
        .is_err());
    }

    #[test]
    fn deviation_requires_permutation_prefix_depth() {
        let t = middle_third(4);
        let h = ReturnMap::Permutation {
            prefix_depth: 3,
            map: (0..8u32).rev().collect(),
        };
        assert!(holonomy_invariance_deviation(&t, &h, 2).is_err());
        assert!(holonomy_invariance_deviation(&t, &h, 3).is_ok());
    }
}
