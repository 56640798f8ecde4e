//! Design-matrix generation: plain Monte Carlo, Latin hypercube, Saltelli
//! pick-freeze blocks and Morris one-at-a-time trajectories.
//!
//! All generators draw in the unit hypercube and map to physical space
//! through the marginal quantile functions, so stratification (LHS) and grid
//! structure (Morris) survive non-uniform marginals. Every generator is a
//! pure function of `(space, sizes, seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::distributions::{DistributionError, InputSpace};

/// How a design matrix was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    MonteCarlo,
    Lhs,
    PickFreeze,
    Morris,
    /// Loaded from disk or assembled by hand; no generator provenance.
    External,
}

impl DesignKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DesignKind::MonteCarlo => "monte_carlo",
            DesignKind::Lhs => "lhs",
            DesignKind::PickFreeze => "pick_freeze",
            DesignKind::Morris => "morris",
            DesignKind::External => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("empty design: n must be at least 1")]
    EmptyDesign,
    #[error("design requires n >= {required}, got {got}")]
    DesignTooSmall { required: usize, got: usize },
    #[error("morris delta {delta} is not a multiple of 1/(levels-1) in (0, 1) for levels={levels}")]
    DeltaOffGrid { delta: f64, levels: usize },
    #[error("morris requires levels >= 2 and r >= 1")]
    BadMorrisParameters,
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// An `n × d` design matrix in physical space with column names and
/// generation provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    values: Vec<f64>, // row-major
    n: usize,
    d: usize,
    names: Vec<String>,
    design: DesignKind,
    seed: u64,
}

impl SampleMatrix {
    pub fn from_rows(
        names: Vec<String>,
        rows: Vec<Vec<f64>>,
        design: DesignKind,
        seed: u64,
    ) -> Result<Self, SamplingError> {
        if rows.is_empty() {
            return Err(SamplingError::EmptyDesign);
        }
        let d = names.len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for row in &rows {
            assert_eq!(row.len(), d, "row length must match column count");
            values.extend_from_slice(row);
        }
        Ok(Self { values, n: rows.len(), d, names, design, seed })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.d
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn design(&self) -> DesignKind {
        self.design
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    /// New matrix keeping the rows in `range` (used for pick-freeze blocks).
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> SampleMatrix {
        SampleMatrix {
            values: self.values[range.start * self.d..range.end * self.d].to_vec(),
            n: range.len(),
            d: self.d,
            names: self.names.clone(),
            design: self.design,
            seed: self.seed,
        }
    }
}

/// Quantile map that keeps unbounded supports finite at the grid edges.
///
/// Morris grids and LHS strata may produce u exactly 0 or 1; for a marginal
/// with an infinite support bound that would map to ±∞, so u is pulled in by
/// 1e-12 on that side.
fn map_unit(space: &InputSpace, j: usize, u: f64) -> Result<f64, DistributionError> {
    let (lo, hi) = space.distribution(j).support();
    let mut u = u;
    if hi.is_infinite() {
        u = u.min(1.0 - 1e-12);
    }
    if lo.is_infinite() {
        u = u.max(1e-12);
    }
    space.distribution(j).quantile(u)
}

fn map_unit_rows(
    space: &InputSpace,
    unit_rows: &[Vec<f64>],
    design: DesignKind,
    seed: u64,
) -> Result<SampleMatrix, SamplingError> {
    let mut rows = Vec::with_capacity(unit_rows.len());
    for unit in unit_rows {
        let mut row = Vec::with_capacity(unit.len());
        for (j, &u) in unit.iter().enumerate() {
            row.push(map_unit(space, j, u)?);
        }
        rows.push(row);
    }
    SampleMatrix::from_rows(space.names(), rows, design, seed)
}

/// Independent uniform draws per cell, mapped through the marginals.
pub fn monte_carlo(space: &InputSpace, n: usize, seed: u64) -> Result<SampleMatrix, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptyDesign);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = unit_monte_carlo(&mut rng, n, space.dimension());
    map_unit_rows(space, &unit, DesignKind::MonteCarlo, seed)
}

fn unit_monte_carlo(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
        .collect()
}

/// Latin hypercube: one point per equal-probability stratum per column,
/// uniform within the stratum, with independent column permutations.
pub fn lhs(space: &InputSpace, n: usize, seed: u64) -> Result<SampleMatrix, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptyDesign);
    }
    let d = space.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = vec![vec![0.0; d]; n];
    for j in 0..d {
        let mut perm: Vec<usize> = (0..n).collect();
        // Fisher-Yates
        for i in (1..n).rev() {
            let k = rng.gen_range(0..=i);
            perm.swap(i, k);
        }
        for (i, row) in unit.iter_mut().enumerate() {
            row[j] = (perm[i] as f64 + rng.gen::<f64>()) / n as f64;
        }
    }
    map_unit_rows(space, &unit, DesignKind::Lhs, seed)
}

/// Identifies a block of rows inside a flattened pick-freeze design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PickFreezeBlock {
    A,
    B,
    /// A with column `i` taken from B.
    ASwapped(usize),
    /// B with column `i` taken from A (second-order designs only).
    BSwapped(usize),
}

/// Saltelli pick-freeze design: blocks A, B and the column-swapped hybrids,
/// flattened in the row order A, B, A_B^(1), …, A_B^(d) (then B_A^(i) when
/// second-order blocks are requested).
#[derive(Debug, Clone, PartialEq)]
pub struct PickFreezeDesign {
    base_n: usize,
    d: usize,
    second_order: bool,
    sample: SampleMatrix,
}

impl PickFreezeDesign {
    pub fn base_n(&self) -> usize {
        self.base_n
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn has_second_order(&self) -> bool {
        self.second_order
    }

    pub fn sample(&self) -> &SampleMatrix {
        &self.sample
    }

    /// Row range of a block inside the flattened sample.
    pub fn block_rows(&self, block: PickFreezeBlock) -> std::ops::Range<usize> {
        let n = self.base_n;
        let start = match block {
            PickFreezeBlock::A => 0,
            PickFreezeBlock::B => n,
            PickFreezeBlock::ASwapped(i) => {
                assert!(i < self.d);
                (2 + i) * n
            }
            PickFreezeBlock::BSwapped(i) => {
                assert!(self.second_order, "design has no second-order blocks");
                assert!(i < self.d);
                (2 + self.d + i) * n
            }
        };
        start..start + n
    }

    /// Rebuild from a flattened sample (artifact reload path).
    pub fn from_sample(
        sample: SampleMatrix,
        base_n: usize,
        second_order: bool,
    ) -> Result<Self, SamplingError> {
        let d = sample.n_cols();
        let blocks = if second_order { 2 * d + 2 } else { d + 2 };
        if sample.n_rows() != base_n * blocks {
            return Err(SamplingError::DesignTooSmall {
                required: base_n * blocks,
                got: sample.n_rows(),
            });
        }
        Ok(Self { base_n, d, second_order, sample })
    }
}

/// Build the Saltelli design: cost `n(d+2)` model calls, or `n(2d+2)` with
/// second-order blocks. A and B come from distinct streams of the seed.
pub fn saltelli_design(
    space: &InputSpace,
    n: usize,
    seed: u64,
    second_order: bool,
) -> Result<PickFreezeDesign, SamplingError> {
    if n < 2 {
        return Err(SamplingError::DesignTooSmall { required: 2, got: n });
    }
    let d = space.dimension();
    let mut rng_a = ChaCha8Rng::seed_from_u64(seed);
    rng_a.set_stream(0);
    let mut rng_b = ChaCha8Rng::seed_from_u64(seed);
    rng_b.set_stream(1);
    let a = unit_monte_carlo(&mut rng_a, n, d);
    let b = unit_monte_carlo(&mut rng_b, n, d);

    let mut unit = Vec::with_capacity(n * if second_order { 2 * d + 2 } else { d + 2 });
    unit.extend(a.iter().cloned());
    unit.extend(b.iter().cloned());
    for i in 0..d {
        for (ra, rb) in a.iter().zip(&b) {
            let mut row = ra.clone();
            row[i] = rb[i];
            unit.push(row);
        }
    }
    if second_order {
        for i in 0..d {
            for (ra, rb) in a.iter().zip(&b) {
                let mut row = rb.clone();
                row[i] = ra[i];
                unit.push(row);
            }
        }
    }
    let sample = map_unit_rows(space, &unit, DesignKind::PickFreeze, seed)?;
    Ok(PickFreezeDesign { base_n: n, d, second_order, sample })
}

/// One step of a Morris trajectory: which input moved and in which direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorrisStep {
    pub input: usize,
    /// +1.0 for a forward move (+Δ in unit space), -1.0 for backward.
    pub direction: f64,
}

/// Morris one-at-a-time design: `r` trajectories of `d+1` rows each on a
/// `levels`-point grid per input.
#[derive(Debug, Clone, PartialEq)]
pub struct MorrisDesign {
    r: usize,
    levels: usize,
    delta: f64,
    sample: SampleMatrix,
    unit: Vec<Vec<f64>>,
    steps: Vec<Vec<MorrisStep>>,
}

impl MorrisDesign {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sample(&self) -> &SampleMatrix {
        &self.sample
    }

    pub fn unit_rows(&self) -> &[Vec<f64>] {
        &self.unit
    }

    /// Move metadata per trajectory, in row order.
    pub fn steps(&self) -> &[Vec<MorrisStep>] {
        &self.steps
    }

    pub fn dimension(&self) -> usize {
        self.sample.n_cols()
    }
}

/// The standard default step: `levels / (2(levels-1))`, e.g. 2/3 for 4 levels.
pub fn default_morris_delta(levels: usize) -> f64 {
    levels as f64 / (2.0 * (levels as f64 - 1.0))
}

/// Generate `r` random OAT trajectories. `delta` must be a multiple of
/// `1/(levels-1)` inside (0, 1]; each input moves exactly once per trajectory.
pub fn morris_trajectories(
    space: &InputSpace,
    r: usize,
    levels: usize,
    delta: f64,
    seed: u64,
) -> Result<MorrisDesign, SamplingError> {
    if r < 1 || levels < 2 {
        return Err(SamplingError::BadMorrisParameters);
    }
    let grid_step = 1.0 / (levels as f64 - 1.0);
    let t = (delta / grid_step).round() as i64;
    if t < 1 || t as usize > levels - 1 || (delta - t as f64 * grid_step).abs() > 1e-9 {
        return Err(SamplingError::DeltaOffGrid { delta, levels });
    }
    let t = t as usize;
    let d = space.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut unit = Vec::with_capacity(r * (d + 1));
    let mut steps = Vec::with_capacity(r);
    for _ in 0..r {
        // Work on integer grid indices so coordinates stay exactly on the grid.
        let mut idx: Vec<usize> = Vec::with_capacity(d);
        let mut signs: Vec<i64> = Vec::with_capacity(d);
        for _ in 0..d {
            let forward = rng.gen::<bool>();
            let (sign, start) = if forward {
                (1i64, rng.gen_range(0..levels - t))
            } else {
                (-1i64, rng.gen_range(t..levels))
            };
            signs.push(sign);
            idx.push(start);
        }
        // Random move order.
        let mut order: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            let k = rng.gen_range(0..=i);
            order.swap(i, k);
        }
        let to_unit =
            |idx: &[usize]| idx.iter().map(|&k| k as f64 * grid_step).collect::<Vec<f64>>();
        unit.push(to_unit(&idx));
        let mut traj_steps = Vec::with_capacity(d);
        for &j in &order {
            idx[j] = (idx[j] as i64 + signs[j] * t as i64) as usize;
            unit.push(to_unit(&idx));
            traj_steps.push(MorrisStep { input: j, direction: signs[j] as f64 });
        }
        steps.push(traj_steps);
    }
    let sample = map_unit_rows(space, &unit, DesignKind::Morris, seed)?;
    Ok(MorrisDesign { r, levels, delta, sample, unit, steps })
}
