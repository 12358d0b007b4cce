//! Measurement masks, sub-masks, and super-resolution lattices.
//!
//! A [`Mask`] marks which grid points of a field were measured. Training
//! additionally withholds part of a measurement mask `A` through
//! [`sample_submask`], producing `B̃ ⊆ A`: the model is conditioned on the
//! `B̃`-observed points but supervised on all of `A`. Low-resolution fields
//! enter the pipeline through [`inflate_lowres`], which places them on a
//! sparse lattice of a finer grid.
//!
//! Mask file layout (little-endian): `"AMSK" | height u32 | width u32 |`
//! then `ceil(H·W/8)` bytes of row-major bits, least-significant bit first.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::Field;

pub const MASK_MAGIC: &[u8; 4] = b"AMSK";

/// Binary observation pattern on a square grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    size: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn empty(size: usize) -> Mask {
        assert!(
            size >= 2 && size.is_power_of_two(),
            "mask side must be a power of two >= 2, got {size}"
        );
        Mask {
            size,
            bits: vec![false; size * size],
        }
    }

    pub fn full(size: usize) -> Mask {
        let mut m = Mask::empty(size);
        m.bits.fill(true);
        m
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.size + col]
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.size + col] = value;
    }

    pub fn observed_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        self.observed_count() as f64 / self.bits.len() as f64
    }

    /// Flat indices of observed points, ascending.
    pub fn observed_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// True when every point observed here is also observed in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.size == other.size
            && self
                .bits
                .iter()
                .zip(&other.bits)
                .all(|(&a, &b)| !a || b)
    }

    /// Pointwise AND.
    pub fn intersect(&self, other: &Mask) -> Mask {
        assert_eq!(self.size, other.size, "mask sizes must match");
        Mask {
            size: self.size,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a && b)
                .collect(),
        }
    }

    /// 1.0/0.0 indicator field, the form the network consumes.
    pub fn indicator(&self) -> Field {
        Field::from_vec(
            self.size,
            self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
    }
}

/// How a measurement mask is drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum MaskPolicy {
    /// `round(keep_fraction · n²)` points, uniform without replacement.
    Random { keep_fraction: f64 },
    /// `round(keep_fraction · n² / patch_size²)` square patches at uniform
    /// top-left corners; the mask is exactly their union (overlap allowed).
    Patch { keep_fraction: f64, patch_size: usize },
    /// `round(keep_fraction · n)` whole columns, uniform without replacement.
    Column { keep_fraction: f64 },
    /// One fully observed axis-aligned rectangle (col0, row0, width, height).
    Window { col0: usize, row0: usize, width: usize, height: usize },
    /// Every `factor`-th point starting at `shift = (row, col)` — where an
    /// inflated low-resolution field lives.
    SuperResLattice { factor: usize, shift: (usize, usize) },
}

fn check_fraction(f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) || !f.is_finite() {
        return Err(Error::config(format!("keep fraction {f} outside [0, 1]")));
    }
    Ok(())
}

/// Choose `count` distinct values from `0..n` by partial Fisher–Yates,
/// returned in draw order.
fn choose_distinct(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    debug_assert!(count <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = i + rng.random_range(0..n - i);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

/// Draw a measurement mask of side `size` under `policy`. Deterministic in
/// `seed`; structured policies (window, lattice) ignore the seed.
pub fn make_mask(size: usize, policy: &MaskPolicy, seed: u64) -> Result<Mask> {
    let mut mask = Mask::empty(size);
    let n = size * size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *policy {
        MaskPolicy::Random { keep_fraction } => {
            check_fraction(keep_fraction)?;
            let count = (keep_fraction * n as f64).round() as usize;
            for idx in choose_distinct(n, count, &mut rng) {
                mask.bits[idx] = true;
            }
        }
        MaskPolicy::Patch {
            keep_fraction,
            patch_size,
        } => {
            check_fraction(keep_fraction)?;
            if patch_size == 0 || patch_size > size {
                return Err(Error::config(format!(
                    "patch size {patch_size} outside 1..={size}"
                )));
            }
            let patches =
                (keep_fraction * n as f64 / (patch_size * patch_size) as f64).round() as usize;
            for _ in 0..patches {
                let row = rng.random_range(0..=size - patch_size);
                let col = rng.random_range(0..=size - patch_size);
                for y in row..row + patch_size {
                    for x in col..col + patch_size {
                        mask.set(y, x, true);
                    }
                }
            }
        }
        MaskPolicy::Column { keep_fraction } => {
            check_fraction(keep_fraction)?;
            let count = (keep_fraction * size as f64).round() as usize;
            for col in choose_distinct(size, count, &mut rng) {
                for y in 0..size {
                    mask.set(y, col, true);
                }
            }
        }
        MaskPolicy::Window {
            col0,
            row0,
            width,
            height,
        } => {
            if width == 0 || height == 0 || col0 + width > size || row0 + height > size {
                return Err(Error::config(format!(
                    "window ({col0},{row0},{width},{height}) exceeds the {size}x{size} grid"
                )));
            }
            for y in row0..row0 + height {
                for x in col0..col0 + width {
                    mask.set(y, x, true);
                }
            }
        }
        MaskPolicy::SuperResLattice { factor, shift } => {
            if factor < 2 || size % factor != 0 {
                return Err(Error::config(format!(
                    "lattice factor {factor} must be >= 2 and divide {size}"
                )));
            }
            if shift.0 >= factor || shift.1 >= factor {
                return Err(Error::config("lattice shift must be smaller than the factor"));
            }
            let mut y = shift.0;
            while y < size {
                let mut x = shift.1;
                while x < size {
                    mask.set(y, x, true);
                    x += factor;
                }
                y += factor;
            }
        }
    }
    Ok(mask)
}

/// A field restricted to a mask: values are exactly zero off-mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialObservation {
    pub values: Field,
    pub mask: Mask,
}

/// Restrict `field` to `mask`, zeroing everything unobserved.
pub fn apply_mask(field: &Field, mask: &Mask) -> PartialObservation {
    assert_eq!(field.size(), mask.size(), "field and mask sizes must match");
    let values = Field::from_vec(
        field.size(),
        field
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &v)| if mask.get(i) { v } else { 0.0 })
            .collect(),
    );
    PartialObservation {
        values,
        mask: mask.clone(),
    }
}

/// How training withholds observed points from the conditioning channels.
#[derive(Debug, Clone, PartialEq)]
pub enum SubmaskPolicy {
    /// Withhold nothing: `B̃ = A`.
    All,
    /// Withhold everything: `B̃ = ∅` (the unseen direction of regression).
    Nothing,
    /// Keep `round(fraction · |A|)` observed points, uniform.
    KeepFraction(f64),
    /// Withhold exactly `count` observed points, uniform.
    WithholdCount(usize),
    /// Withhold `count` whole columns among those containing observations.
    WithholdColumns(usize),
    /// Clear the observed points under `count` random `size × size` patches.
    WithholdPatches { count: usize, size: usize },
}

/// Draw `B̃ ⊆ a` under `policy`. The subset property holds structurally:
/// the result starts from `a` and only ever clears bits.
pub fn sample_submask(a: &Mask, policy: &SubmaskPolicy, seed: u64) -> Result<Mask> {
    let mut b = a.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *policy {
        SubmaskPolicy::All => {}
        SubmaskPolicy::Nothing => b.bits.fill(false),
        SubmaskPolicy::KeepFraction(fraction) => {
            check_fraction(fraction)?;
            let observed = a.observed_indices();
            let keep = (fraction * observed.len() as f64).round() as usize;
            let withhold = observed.len() - keep;
            for pick in choose_distinct(observed.len(), withhold, &mut rng) {
                b.bits[observed[pick]] = false;
            }
        }
        SubmaskPolicy::WithholdCount(count) => {
            let observed = a.observed_indices();
            if count > observed.len() {
                return Err(Error::config(format!(
                    "cannot withhold {count} of {} observed points",
                    observed.len()
                )));
            }
            for pick in choose_distinct(observed.len(), count, &mut rng) {
                b.bits[observed[pick]] = false;
            }
        }
        SubmaskPolicy::WithholdColumns(count) => {
            let cols: Vec<usize> = (0..a.size)
                .filter(|&c| (0..a.size).any(|r| a.is_observed(r, c)))
                .collect();
            if count > cols.len() {
                return Err(Error::config(format!(
                    "cannot withhold {count} of {} observed columns",
                    cols.len()
                )));
            }
            for pick in choose_distinct(cols.len(), count, &mut rng) {
                let col = cols[pick];
                for r in 0..a.size {
                    b.set(r, col, false);
                }
            }
        }
        SubmaskPolicy::WithholdPatches { count, size } => {
            if size == 0 || size > a.size {
                return Err(Error::config(format!(
                    "patch size {size} outside 1..={}",
                    a.size
                )));
            }
            for _ in 0..count {
                let row = rng.random_range(0..=a.size - size);
                let col = rng.random_range(0..=a.size - size);
                for y in row..row + size {
                    for x in col..col + size {
                        b.set(y, x, false);
                    }
                }
            }
        }
    }
    debug_assert!(b.is_subset_of(a));
    Ok(b)
}

/// Place a low-resolution field onto the `factor`-times-finer grid as a
/// lattice observation: values on the lattice, zeros (unobserved) elsewhere.
pub fn inflate_lowres(low: &Field, factor: usize, shift: (usize, usize)) -> Result<PartialObservation> {
    if factor < 2 {
        return Err(Error::config("inflation factor must be at least 2"));
    }
    if shift.0 >= factor || shift.1 >= factor {
        return Err(Error::config("lattice shift must be smaller than the factor"));
    }
    let high_size = low.size() * factor;
    if !high_size.is_power_of_two() {
        return Err(Error::config(format!(
            "inflated side {high_size} is not a power of two"
        )));
    }
    let mask = make_mask(high_size, &MaskPolicy::SuperResLattice { factor, shift }, 0)?;
    let mut values = Field::zeros(high_size);
    for y in 0..low.size() {
        for x in 0..low.size() {
            *values.at_mut(shift.0 + y * factor, shift.1 + x * factor) = low.at(y, x);
        }
    }
    Ok(PartialObservation { values, mask })
}

/// Read a high-resolution field back off the lattice: the exact inverse of
/// [`inflate_lowres`] on the observed points.
pub fn downsample_lattice(field: &Field, factor: usize, shift: (usize, usize)) -> Result<Field> {
    if factor < 2 || field.size() % factor != 0 {
        return Err(Error::config(format!(
            "lattice factor {factor} must be >= 2 and divide {}",
            field.size()
        )));
    }
    if shift.0 >= factor || shift.1 >= factor {
        return Err(Error::config("lattice shift must be smaller than the factor"));
    }
    let low_size = field.size() / factor;
    Ok(Field::from_fn(low_size, |y, x| {
        field.at(shift.0 + y * factor, shift.1 + x * factor)
    }))
}

/// Coverage summary of a mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskStats {
    pub observed: usize,
    pub total: usize,
    pub fraction: f64,
    /// Largest Chebyshev distance from any grid point to its nearest
    /// observed point; `size` when nothing is observed at all.
    pub largest_gap: usize,
}

/// Observed fraction and largest unobserved gap (multi-source BFS with
/// 8-connectivity, i.e. Chebyshev distance).
pub fn mask_stats(mask: &Mask) -> MaskStats {
    let size = mask.size();
    let observed = mask.observed_count();
    if observed == 0 {
        return MaskStats {
            observed,
            total: size * size,
            fraction: 0.0,
            largest_gap: size,
        };
    }
    let mut dist = vec![usize::MAX; size * size];
    let mut queue = VecDeque::new();
    for i in 0..size * size {
        if mask.get(i) {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    let mut largest = 0;
    while let Some(i) = queue.pop_front() {
        let (y, x) = (i / size, i % size);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dy == 0 && dx == 0 {
                    continue;
                }
                let (ny, nx) = (y as i64 + dy, x as i64 + dx);
                if ny < 0 || nx < 0 || ny >= size as i64 || nx >= size as i64 {
                    continue;
                }
                let j = ny as usize * size + nx as usize;
                if dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    largest = largest.max(dist[j]);
                    queue.push_back(j);
                }
            }
        }
    }
    MaskStats {
        observed,
        total: size * size,
        fraction: observed as f64 / (size * size) as f64,
        largest_gap: largest,
    }
}

/// Write a mask in the bit-packed container.
pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    let size = mask.size();
    let n_bits = size * size;
    let mut buf = Vec::with_capacity(12 + n_bits / 8 + 1);
    buf.extend_from_slice(MASK_MAGIC);
    buf.extend_from_slice(&(size as u32).to_le_bytes());
    buf.extend_from_slice(&(size as u32).to_le_bytes());
    let mut byte = 0u8;
    for (i, &bit) in mask.bits.iter().enumerate() {
        if bit {
            byte |= 1 << (i % 8);
        }
        if i % 8 == 7 {
            buf.push(byte);
            byte = 0;
        }
    }
    if n_bits % 8 != 0 {
        buf.push(byte);
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

/// Read a mask from the bit-packed container.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let mut r = BufReader::new(File::open(path)?);
    let disp = path.display().to_string();
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::format(disp.clone(), "truncated magic"))?;
    if &magic != MASK_MAGIC {
        return Err(Error::format(disp, "bad magic, not a mask file"));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)
        .map_err(|_| Error::format(disp.clone(), "truncated height"))?;
    let h = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)
        .map_err(|_| Error::format(disp.clone(), "truncated width"))?;
    let w = u32::from_le_bytes(u32buf) as usize;
    if h != w || !h.is_power_of_two() || h < 2 {
        return Err(Error::format(disp, format!("unsupported grid {h}x{w}")));
    }
    let n_bits = h * w;
    let mut bytes = vec![0u8; n_bits.div_ceil(8)];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::format(disp.clone(), "truncated bit data"))?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::format(disp, "trailing bytes after bit data"));
    }
    let mut mask = Mask::empty(h);
    for i in 0..n_bits {
        mask.bits[i] = bytes[i / 8] >> (i % 8) & 1 == 1;
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn random_mask_count_is_rounded_fraction() {
        // 3% of a 128² grid: round(0.03 · 16384) = 492 points
        let m = make_mask(128, &MaskPolicy::Random { keep_fraction: 0.03 }, 1).unwrap();
        assert_eq!(m.observed_count(), 492);

        // and the draw is deterministic in the seed
        let m2 = make_mask(128, &MaskPolicy::Random { keep_fraction: 0.03 }, 1).unwrap();
        assert_eq!(m, m2);
        let m3 = make_mask(128, &MaskPolicy::Random { keep_fraction: 0.03 }, 2).unwrap();
        assert_ne!(m, m3);
    }

    #[test]
    fn submask_keep_two_thirds_count() {
        let a = make_mask(128, &MaskPolicy::Random { keep_fraction: 0.03 }, 1).unwrap();
        let b = sample_submask(&a, &SubmaskPolicy::KeepFraction(2.0 / 3.0), 9).unwrap();
        // round(492 · 2/3) = 328
        assert_eq!(b.observed_count(), 328);
        assert!(b.is_subset_of(&a));
    }

    #[test]
    fn submask_composition_stays_nested() {
        let a = make_mask(32, &MaskPolicy::Random { keep_fraction: 0.4 }, 3).unwrap();
        let b = sample_submask(&a, &SubmaskPolicy::KeepFraction(0.5), 4).unwrap();
        let c = sample_submask(&b, &SubmaskPolicy::WithholdCount(10), 5).unwrap();
        assert!(c.is_subset_of(&b) && b.is_subset_of(&a) && c.is_subset_of(&a));
        assert_eq!(c.observed_count(), b.observed_count() - 10);
    }

    #[test]
    fn withhold_too_many_is_a_config_error() {
        let a = make_mask(16, &MaskPolicy::Random { keep_fraction: 0.1 }, 3).unwrap();
        let n = a.observed_count();
        assert!(matches!(
            sample_submask(&a, &SubmaskPolicy::WithholdCount(n + 1), 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn structured_submasks_clear_whole_structures() {
        let a = make_mask(16, &MaskPolicy::Column { keep_fraction: 0.5 }, 7).unwrap();
        let b = sample_submask(&a, &SubmaskPolicy::WithholdColumns(3), 1).unwrap();
        assert!(b.is_subset_of(&a));
        // exactly 3 previously observed columns went fully dark
        let dark = (0..16)
            .filter(|&c| {
                (0..16).any(|r| a.is_observed(r, c)) && (0..16).all(|r| !b.is_observed(r, c))
            })
            .count();
        assert_eq!(dark, 3);

        let p = sample_submask(&a, &SubmaskPolicy::WithholdPatches { count: 2, size: 4 }, 1).unwrap();
        assert!(p.is_subset_of(&a));
    }

    #[test]
    fn window_policy_checks_bounds() {
        assert!(make_mask(
            16,
            &MaskPolicy::Window { col0: 10, row0: 2, width: 8, height: 4 },
            0
        )
        .is_err());
        let w = make_mask(
            16,
            &MaskPolicy::Window { col0: 2, row0: 3, width: 4, height: 5 },
            0,
        )
        .unwrap();
        assert_eq!(w.observed_count(), 20);
        assert!(w.is_observed(3, 2) && w.is_observed(7, 5) && !w.is_observed(8, 2));
    }

    #[test]
    fn patch_mask_is_union_of_patches() {
        let m = make_mask(32, &MaskPolicy::Patch { keep_fraction: 0.2, patch_size: 4 }, 5).unwrap();
        // union of round(0.2·1024/16) = 13 patches of 16 points, overlaps allowed
        assert!(m.observed_count() <= 13 * 16);
        assert!(m.observed_count() > 0);
    }

    #[test]
    fn checkerboard_lattice_stats() {
        // factor-2 lattice observes a quarter of the grid; every point has
        // an observed 8-neighbor
        let m = make_mask(16, &MaskPolicy::SuperResLattice { factor: 2, shift: (0, 0) }, 0).unwrap();
        let stats = mask_stats(&m);
        assert_eq!(stats.fraction, 0.25);
        assert_eq!(stats.largest_gap, 1);
        assert_eq!(mask_stats(&Mask::empty(8)).largest_gap, 8);
        assert_eq!(mask_stats(&Mask::full(8)).largest_gap, 0);
    }

    #[test]
    fn factor_four_lattice_fraction() {
        // 8² inflated by 4: 64 of 1024 points observed = 6.25%
        let low = Field::from_fn(8, |y, x| (y * 8 + x) as f64);
        let obs = inflate_lowres(&low, 4, (0, 0)).unwrap();
        assert_eq!(obs.mask.size(), 32);
        assert_eq!(obs.mask.observed_count(), 64);
        assert_eq!(mask_stats(&obs.mask).fraction, 0.0625);
    }

    #[test]
    fn inflate_downsample_round_trip() {
        let low = Field::from_fn(8, |y, x| ((y * 31 + x * 7) as f64).sin());
        for shift in [(0, 0), (1, 2), (3, 3)] {
            let obs = inflate_lowres(&low, 4, shift).unwrap();
            // values sit exactly on the lattice, zeros elsewhere
            for y in 0..32 {
                for x in 0..32 {
                    if !obs.mask.is_observed(y, x) {
                        assert_eq!(obs.values.at(y, x), 0.0);
                    }
                }
            }
            let back = downsample_lattice(&obs.values, 4, shift).unwrap();
            assert_eq!(back.as_slice(), low.as_slice());
        }
    }

    #[test]
    fn apply_mask_zeroes_unobserved() {
        let f = Field::from_fn(8, |y, x| 1.0 + (y * 8 + x) as f64);
        let m = make_mask(8, &MaskPolicy::Random { keep_fraction: 0.3 }, 2).unwrap();
        let obs = apply_mask(&f, &m);
        for i in 0..64 {
            if m.get(i) {
                assert_eq!(obs.values.as_slice()[i], f.as_slice()[i]);
            } else {
                assert_eq!(obs.values.as_slice()[i], 0.0);
            }
        }
    }

    #[test]
    fn mask_file_round_trip_and_packing() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.amsk");
        let m = make_mask(32, &MaskPolicy::Random { keep_fraction: 0.13 }, 11).unwrap();
        write_mask(&path, &m).unwrap();
        let back = read_mask(&path).unwrap();
        assert_eq!(m, back);

        // frozen micro-example: 2×2 bits [1,0,0,1] pack to 0b1001 = 9
        let mut tiny = Mask::empty(2);
        tiny.set(0, 0, true);
        tiny.set(1, 1, true);
        let tiny_path = dir.path().join("tiny.amsk");
        write_mask(&tiny_path, &tiny).unwrap();
        let bytes = std::fs::read(&tiny_path).unwrap();
        assert_eq!(&bytes[0..4], b"AMSK");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(bytes[12], 0b0000_1001);
        assert_eq!(bytes.len(), 13);
    }

    #[test]
    fn mask_file_rejects_corruption() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.amsk");
        let m = make_mask(16, &MaskPolicy::Random { keep_fraction: 0.5 }, 0).unwrap();
        write_mask(&path, &m).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_mask(&path), Err(Error::Format { .. })));
    }
}
