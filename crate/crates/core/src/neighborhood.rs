//! Locality: the disk of radius `d` around a pixel and the `n` nearest
//! training pixels of each class inside it.
//!
//! A single [`OffsetTable`] per radius is shared by every pixel. Its order,
//! `(squared distance, d_row, d_col)`, makes the per-class "first `n` hits"
//! exactly the `n` nearest training pixels with ties broken top to bottom,
//! then left to right.

use crate::raster::{ClassMask, GrayImage};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NeighborhoodError {
    #[error("argument error: {0}")]
    Argument(String),
}

/// Integer offsets inside a disk, nearest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetTable {
    radius: usize,
    offsets: Vec<(i32, i32)>,
}

impl OffsetTable {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

pub fn disk_offsets(radius: usize) -> OffsetTable {
    let r = radius as i64;
    let r2 = r * r;
    let mut offsets: Vec<(i32, i32)> = Vec::new();
    for dr in -r..=r {
        for dc in -r..=r {
            if dr * dr + dc * dc <= r2 {
                offsets.push((dr as i32, dc as i32));
            }
        }
    }
    offsets.sort_by_key(|&(dr, dc)| (dr * dr + dc * dc, dr, dc));
    OffsetTable { radius, offsets }
}

/// Local training pixels of one class, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTrainingSet {
    pub class_id: u32,
    pub intensities: Vec<f64>,
    pub sources: Vec<(usize, usize)>,
}

/// Calls `visit(class, row, col)` for at most `per_class` training pixels
/// of each class, in table order. Stops early once every class is full.
#[inline]
pub(crate) fn scan_local<F: FnMut(u32, usize, usize)>(
    mask: &ClassMask,
    center: (usize, usize),
    table: &OffsetTable,
    per_class: usize,
    counts: &mut [usize],
    mut visit: F,
) {
    counts.iter_mut().for_each(|c| *c = 0);
    let class_count = mask.class_count() as usize;
    if per_class == 0 || class_count == 0 {
        return;
    }
    let (h, w) = (mask.height() as i64, mask.width() as i64);
    let (r0, c0) = (center.0 as i64, center.1 as i64);
    let labels = mask.labels();
    let mut full = 0usize;
    for &(dr, dc) in table.offsets() {
        let (r, c) = (r0 + dr as i64, c0 + dc as i64);
        if r < 0 || c < 0 || r >= h || c >= w {
            continue;
        }
        let label = labels[(r * w + c) as usize];
        if label == 0 {
            continue;
        }
        let slot = &mut counts[label as usize];
        if *slot >= per_class {
            continue;
        }
        *slot += 1;
        visit(label, r as usize, c as usize);
        if *slot == per_class {
            full += 1;
            if full == class_count {
                break;
            }
        }
    }
}

/// The local training sets of every class with at least one pixel in the disk,
/// ordered by class id.
pub fn select_local_training(
    image: &GrayImage,
    mask: &ClassMask,
    center: (usize, usize),
    table: &OffsetTable,
    per_class: usize,
) -> Result<Vec<LocalTrainingSet>, NeighborhoodError> {
    if image.width() != mask.width() || image.height() != mask.height() {
        return Err(NeighborhoodError::Argument(format!(
            "image is {}x{} but mask is {}x{}",
            image.width(),
            image.height(),
            mask.width(),
            mask.height()
        )));
    }
    if center.0 >= image.height() || center.1 >= image.width() {
        return Err(NeighborhoodError::Argument(format!(
            "center {center:?} outside the image"
        )));
    }
    if per_class == 0 {
        return Err(NeighborhoodError::Argument("per-class cap must be >= 1".into()));
    }
    let class_count = mask.class_count() as usize;
    let mut sets: Vec<LocalTrainingSet> = (1..=class_count as u32)
        .map(|class_id| LocalTrainingSet {
            class_id,
            intensities: Vec::new(),
            sources: Vec::new(),
        })
        .collect();
    let mut counts = vec![0usize; class_count + 1];
    scan_local(mask, center, table, per_class, &mut counts, |class, r, c| {
        let set = &mut sets[class as usize - 1];
        set.intensities.push(image.get(r, c));
        set.sources.push((r, c));
    });
    sets.retain(|s| !s.sources.is_empty());
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_disk() {
        assert_eq!(
            disk_offsets(1).offsets(),
            &[(0, 0), (-1, 0), (0, -1), (0, 1), (1, 0)]
        );
    }

    #[test]
    fn radius_three_count() {
        // Brute-force lattice count of x^2 + y^2 <= 9.
        let mut count = 0;
        for x in -3i32..=3 {
            for y in -3i32..=3 {
                if x * x + y * y <= 9 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 29);
        assert_eq!(disk_offsets(3).len(), count);
    }

    #[test]
    fn diagonal_tie_order() {
        let table = disk_offsets(2);
        let diag: Vec<_> = table
            .offsets()
            .iter()
            .copied()
            .filter(|&(r, c)| r * r + c * c == 2)
            .collect();
        assert_eq!(diag, vec![(-1, -1), (-1, 1), (1, -1), (1, 1)]);
        assert_eq!(table.offsets()[0], (0, 0));
    }

    #[test]
    fn unlabeled_mask_gives_nothing() {
        let img = GrayImage::new(4, 4, vec![1.0; 16]).unwrap();
        let mask = ClassMask::with_class_count(4, 4, vec![0; 16], 2).unwrap();
        let sets = select_local_training(&img, &mask, (1, 1), &disk_offsets(3), 5).unwrap();
        assert!(sets.is_empty());
    }

    #[test]
    fn offset_order_selection() {
        let img = GrayImage::from_fn(5, 5, |r, c| (10 * r + c) as f64).unwrap();
        let mask = ClassMask::new(5, 5, vec![1; 25]).unwrap();
        let sets = select_local_training(&img, &mask, (2, 2), &disk_offsets(1), 3).unwrap();
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].sources, vec![(2, 2), (1, 2), (2, 1)]);
        assert_eq!(sets[0].intensities, vec![22.0, 12.0, 21.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let img = GrayImage::new(2, 2, vec![0.0; 4]).unwrap();
        let mask = ClassMask::new(3, 1, vec![1; 3]).unwrap();
        assert!(select_local_training(&img, &mask, (0, 0), &disk_offsets(1), 3).is_err());
    }

    /// All training pixels of `class` within the disk, sorted by
    /// (squared distance, absolute row, absolute col).
    fn brute_force(
        mask: &ClassMask,
        center: (usize, usize),
        radius: usize,
        class: u32,
    ) -> Vec<(usize, usize)> {
        let mut hits = Vec::new();
        for r in 0..mask.height() {
            for c in 0..mask.width() {
                let dr = r as i64 - center.0 as i64;
                let dc = c as i64 - center.1 as i64;
                if mask.get(r, c) == class && dr * dr + dc * dc <= (radius * radius) as i64 {
                    hits.push((dr * dr + dc * dc, r, c));
                }
            }
        }
        hits.sort();
        hits.into_iter().map(|(_, r, c)| (r, c)).collect()
    }

    #[test]
    fn two_class_layout_with_ties() {
        // d = 3, n = 4 around (4,4). Both classes have an equidistant group
        // straddling the n = 4 cut, so the reading-order tie rule decides.
        #[rustfmt::skip]
        let layout = [
            0,0,0,0,0,0,0,0,0,
            0,1,1,0,0,0,0,0,0,
            0,1,1,0,0,2,0,0,0,
            0,1,1,0,0,0,2,0,0,
            0,1,1,0,0,2,0,0,0,
            0,1,1,0,0,0,2,0,0,
            0,1,1,0,0,2,0,0,0,
            0,0,0,0,0,0,0,0,0,
            0,0,0,0,0,0,0,0,0,
        ];
        let mask = ClassMask::new(9, 9, layout.to_vec()).unwrap();
        let img = GrayImage::from_fn(9, 9, |r, c| (r * 9 + c) as f64).unwrap();
        let center = (4, 4);
        let sets = select_local_training(&img, &mask, center, &disk_offsets(3), 4).unwrap();
        assert_eq!(sets.len(), 2);
        for set in &sets {
            let oracle: Vec<_> = brute_force(&mask, center, 3, set.class_id)
                .into_iter()
                .take(4)
                .collect();
            assert_eq!(set.sources, oracle, "class {}", set.class_id);
        }
        // Pink: (4,2) then the squared-distance-5 pair, then (2,2) beats (6,2).
        assert_eq!(sets[0].sources, vec![(4, 2), (3, 2), (5, 2), (2, 2)]);
        // Blue: (4,5) then three of the four squared-distance-5 pixels; (6,5) loses.
        assert_eq!(sets[1].sources, vec![(4, 5), (2, 5), (3, 6), (5, 6)]);
    }

    fn arb_instance() -> impl Strategy<Value = (ClassMask, (usize, usize), usize, usize)> {
        (
            proptest::collection::vec(0u32..4, 256),
            0usize..16,
            0usize..16,
            1usize..7,
            1usize..20,
        )
            .prop_map(|(labels, r, c, radius, n)| {
                (
                    ClassMask::with_class_count(16, 16, labels, 3).unwrap(),
                    (r, c),
                    radius,
                    n,
                )
            })
    }

    proptest! {
        #[test]
        fn selection_matches_brute_force((mask, center, radius, n) in arb_instance()) {
            let img = GrayImage::from_fn(16, 16, |r, c| (r * 16 + c) as f64).unwrap();
            let table = disk_offsets(radius);
            let sets = select_local_training(&img, &mask, center, &table, n).unwrap();
            for class in 1..=3u32 {
                let oracle: Vec<_> = brute_force(&mask, center, radius, class).into_iter().take(n).collect();
                let got = sets.iter().find(|s| s.class_id == class);
                match got {
                    None => prop_assert!(oracle.is_empty()),
                    Some(set) => {
                        prop_assert_eq!(&set.sources, &oracle);
                        for &(r, c) in &set.sources {
                            let dr = r as i64 - center.0 as i64;
                            let dc = c as i64 - center.1 as i64;
                            prop_assert!(dr * dr + dc * dc <= (radius * radius) as i64);
                            prop_assert_eq!(mask.get(r, c), class);
                        }
                    }
                }
            }
            let again = select_local_training(&img, &mask, center, &table, n).unwrap();
            prop_assert_eq!(sets, again);
        }

        #[test]
        fn unbounded_cap_is_disk_intersection((mask, center, radius, _n) in arb_instance()) {
            let img = GrayImage::from_fn(16, 16, |r, c| (r * 16 + c) as f64).unwrap();
            let table = disk_offsets(radius);
            let sets = select_local_training(&img, &mask, center, &table, table.len()).unwrap();
            for class in 1..=3u32 {
                let mut oracle = brute_force(&mask, center, radius, class);
                oracle.sort();
                let mut got = sets
                    .iter()
                    .find(|s| s.class_id == class)
                    .map(|s| s.sources.clone())
                    .unwrap_or_default();
                got.sort();
                prop_assert_eq!(got, oracle);
            }
        }
    }
}
