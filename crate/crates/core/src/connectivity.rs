//! Degree profiles of `f^k_ω` on preimages of `D = D(0, R̃0)`, the critical
//! orbit disconnectedness scan, and grid approximations of `K_ω`.

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{ParamSource, Shifted};
use crate::dynamics::{escape_time, green, Constants, EscapeTime, GreenOutcome};
use crate::pgm::Graymap;
use crate::Complex;

/// Per-level degree bounds for one sequence.
///
/// `l[k]` counts indices `i < k` with `g_{σ^i ω}(0) < G 2^{-(k-i)}`, i.e.
/// `σ^i ω ∈ A_{k-i}`. Every component of `(f^k_ω)^{-1}(D)` then maps onto `D`
/// with degree at most `2^{l[k]}`. Indices run `0..=k_max`, with `l[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeProfile {
    pub k_max: u32,
    pub horizon: u32,
    /// `g_{σ^i ω}(0)` for `i < k_max`.
    pub critical_greens: Vec<GreenOutcome>,
    pub l: Vec<u32>,
    /// `2^{l[k]}`, saturating at `u64::MAX`.
    pub degree_bound: Vec<u64>,
    /// Levels where a comparison fell within the error bound of its
    /// threshold and was counted as membership.
    pub tie_levels: Vec<u32>,
    /// Some critical orbit stayed bounded up to the horizon and was counted
    /// as `g = 0`.
    pub horizon_limited: bool,
}

impl DegreeProfile {
    pub fn degree_bound_at(&self, k: u32) -> u64 {
        self.degree_bound[k as usize]
    }
}

fn saturating_pow2(l: u32) -> u64 {
    if l >= 64 {
        u64::MAX
    } else {
        1u64 << l
    }
}

pub fn critical_profile<P: ParamSource + ?Sized>(
    seq: &P,
    k_max: u32,
    consts: &Constants,
    n_max: u32,
    tol: f64,
) -> DegreeProfile {
    assert!(k_max >= 1, "k_max must be at least 1");
    let critical_greens: Vec<GreenOutcome> = (0..k_max)
        .map(|i| {
            let shifted = Shifted::new(seq, u64::from(i));
            green(&shifted, Complex::new(0.0, 0.0), consts, n_max, tol)
        })
        .collect();

    let mut l = vec![0u32; k_max as usize + 1];
    let mut tie_levels = Vec::new();
    for k in 1..=k_max {
        let mut count = 0;
        let mut tie = false;
        for i in 0..k {
            let threshold = consts.g * 0.5f64.powi((k - i) as i32);
            match critical_greens[i as usize] {
                GreenOutcome::Bounded { .. } => count += 1,
                GreenOutcome::Escaped { eval, .. } => {
                    if eval.value - eval.abs_error < threshold {
                        count += 1;
                        tie |= eval.value >= threshold;
                    }
                }
            }
        }
        l[k as usize] = count;
        if tie {
            tie_levels.push(k);
        }
    }
    DegreeProfile {
        k_max,
        horizon: n_max,
        horizon_limited: critical_greens
            .iter()
            .any(|g| matches!(g, GreenOutcome::Bounded { .. })),
        degree_bound: l.iter().map(|&x| saturating_pow2(x)).collect(),
        critical_greens,
        l,
        tie_levels,
    }
}

/// Property (K, k): `σ^i ω ∈ A_{k-i}` for more than `K` indices `i < k`.
pub fn property_kk(profile: &DegreeProfile, big_k: u32, k: u32) -> bool {
    assert!(k <= profile.k_max, "level {k} beyond k_max {}", profile.k_max);
    profile.l[k as usize] > big_k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    EvidenceTotallyDisconnected,
    Inconclusive,
}

pub const HORIZON_CAVEAT: &str = "finite-horizon diagnostic: the degree bound must hold \
for infinitely many levels, which no finite run certifies";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SufficiencyReport {
    #[serde(rename = "K")]
    pub big_k: u32,
    pub k_max: u32,
    /// Levels `k > K` with `l(k) <= K`, i.e. degree bound `2^K` on every
    /// preimage component. Levels `k <= K` satisfy this trivially and are
    /// not counted.
    pub levels_satisfying: Vec<u32>,
    pub verdict: Verdict,
    pub horizon_limited: bool,
    pub caveat: &'static str,
}

/// Evidence for the uniform degree bound `N = 2^K` at many levels.
///
/// The verdict is `EvidenceTotallyDisconnected` when at least `⌈k_max/2⌉`
/// informative levels satisfy the bound.
pub fn sufficient_condition_report(profile: &DegreeProfile, big_k: u32) -> SufficiencyReport {
    let levels_satisfying: Vec<u32> = (1..=profile.k_max)
        .filter(|&k| k > big_k && profile.l[k as usize] <= big_k)
        .collect();
    let needed = profile.k_max.div_ceil(2) as usize;
    SufficiencyReport {
        big_k,
        k_max: profile.k_max,
        verdict: if levels_satisfying.len() >= needed {
            Verdict::EvidenceTotallyDisconnected
        } else {
            Verdict::Inconclusive
        },
        levels_satisfying,
        horizon_limited: profile.horizon_limited,
        caveat: HORIZON_CAVEAT,
    }
}

/// Shifts `k <= shift_max` whose critical orbit `f^n_{σ^k ω}(0)` reaches `R0`.
///
/// A nonempty result certifies that `J_ω` is disconnected; an empty one only
/// says no escape was seen within `n_max` steps.
pub fn bbr_disconnected_scan<P: ParamSource + ?Sized>(
    seq: &P,
    shift_max: u32,
    consts: &Constants,
    n_max: u32,
) -> Vec<u32> {
    (0..=shift_max)
        .filter(|&k| {
            let shifted = Shifted::new(seq, u64::from(k));
            matches!(
                escape_time(&shifted, Complex::new(0.0, 0.0), consts, n_max),
                EscapeTime::Escaped { .. }
            )
        })
        .collect()
}

/// Square window `center ± half_width` in both coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridBox {
    pub center: Complex,
    pub half_width: f64,
}

impl GridBox {
    pub fn centered(half_width: f64) -> Self {
        GridBox {
            center: Complex::new(0.0, 0.0),
            half_width,
        }
    }
}

/// Escape times sampled at cell centers. Row 0 is the top edge (largest
/// imaginary part); `None` marks cells bounded up to `n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: GridBox,
    pub resolution: usize,
    pub n_max: u32,
    pub cells: Vec<Option<u32>>,
}

impl GridField {
    pub fn cell_size(&self) -> f64 {
        cell_size(&self.grid, self.resolution)
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Complex {
        cell_center(&self.grid, self.resolution, row, col)
    }

    pub fn is_bounded(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.resolution + col].is_none()
    }

    pub fn bounded_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    /// 255 for bounded cells, otherwise `min(254, escape time)`.
    pub fn to_graymap(&self, comments: Vec<String>) -> Graymap {
        Graymap {
            width: self.resolution,
            height: self.resolution,
            comments,
            pixels: self
                .cells
                .iter()
                .map(|c| match c {
                    None => 255,
                    Some(k) => (*k).min(254) as u8,
                })
                .collect(),
        }
    }
}

fn cell_size(grid: &GridBox, resolution: usize) -> f64 {
    2.0 * grid.half_width / resolution as f64
}

pub(crate) fn cell_center(grid: &GridBox, resolution: usize, row: usize, col: usize) -> Complex {
    let h = cell_size(grid, resolution);
    Complex::new(
        grid.center.re - grid.half_width + (col as f64 + 0.5) * h,
        grid.center.im + grid.half_width - (row as f64 + 0.5) * h,
    )
}

pub fn grid_escape_field<P: ParamSource + ?Sized>(
    seq: &P,
    consts: &Constants,
    grid: GridBox,
    resolution: usize,
    n_max: u32,
) -> GridField {
    assert!(resolution >= 2, "resolution must be at least 2");
    let mut cells = vec![None; resolution * resolution];
    cells
        .par_chunks_mut(resolution)
        .enumerate()
        .for_each(|(row, out)| {
            for (col, cell) in out.iter_mut().enumerate() {
                let z = cell_center(&grid, resolution, row, col);
                *cell = escape_time(seq, z, consts, n_max).k();
            }
        });
    GridField {
        grid,
        resolution,
        n_max,
        cells,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    pub component_count: usize,
    /// Cell counts, largest first.
    pub sizes: Vec<usize>,
    /// Largest bounding-box diagonal over all components, in plane units.
    pub max_diameter: f64,
    pub resolution: usize,
    pub n_max: u32,
}

/// 4-connected component label of every bounded cell, numbered in raster
/// order of first appearance.
pub fn component_labels(field: &GridField) -> Vec<Option<usize>> {
    let n = field.resolution;
    let mut uf = UnionFind::<usize>::new(n * n);
    for row in 0..n {
        for col in 0..n {
            if !field.is_bounded(row, col) {
                continue;
            }
            let here = row * n + col;
            if col + 1 < n && field.is_bounded(row, col + 1) {
                uf.union(here, here + 1);
            }
            if row + 1 < n && field.is_bounded(row + 1, col) {
                uf.union(here, here + n);
            }
        }
    }
    let mut root_label = vec![usize::MAX; n * n];
    let mut next = 0;
    (0..n * n)
        .map(|idx| {
            if field.cells[idx].is_some() {
                return None;
            }
            let root = uf.find_mut(idx);
            if root_label[root] == usize::MAX {
                root_label[root] = next;
                next += 1;
            }
            Some(root_label[root])
        })
        .collect()
}

pub fn components(field: &GridField) -> ComponentReport {
    let n = field.resolution;
    let labels = component_labels(field);
    let count = labels.iter().flatten().max().map_or(0, |m| m + 1);
    // (size, min_row, max_row, min_col, max_col)
    let mut stats = vec![(0usize, usize::MAX, 0usize, usize::MAX, 0usize); count];
    for (idx, label) in labels.iter().enumerate() {
        if let Some(l) = label {
            let (row, col) = (idx / n, idx % n);
            let s = &mut stats[*l];
            s.0 += 1;
            s.1 = s.1.min(row);
            s.2 = s.2.max(row);
            s.3 = s.3.min(col);
            s.4 = s.4.max(col);
        }
    }
    let h = field.cell_size();
    let max_diameter = stats
        .iter()
        .map(|s| {
            let height = (s.2 - s.1 + 1) as f64 * h;
            let width = (s.4 - s.3 + 1) as f64 * h;
            height.hypot(width)
        })
        .fold(0.0, f64::max);
    let mut sizes: Vec<usize> = stats.iter().map(|s| s.0).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    ComponentReport {
        component_count: count,
        sizes,
        max_diameter,
        resolution: field.resolution,
        n_max: field.n_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ParamSequence;

    fn constant(re: f64) -> ParamSequence {
        ParamSequence::Constant(Complex::new(re, 0.0))
    }

    #[test]
    fn zero_sequence_has_full_degree() {
        let k1 = Constants::derive(1.0).unwrap();
        let p = critical_profile(&constant(0.0), 10, &k1, 200, 1e-10);
        for k in 0..=10u32 {
            assert_eq!(p.l[k as usize], k);
            assert_eq!(p.degree_bound_at(k), 1 << k);
        }
        assert!(p.horizon_limited);
        assert!(property_kk(&p, 2, 5));
        assert!(!property_kk(&p, 5, 5));
        let r = sufficient_condition_report(&p, 3);
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.levels_satisfying.is_empty());
    }

    #[test]
    fn escaping_constant_profile_stabilizes() {
        let k5 = Constants::derive(5.0).unwrap();
        let seq = constant(5.0);
        let p = critical_profile(&seq, 40, &k5, 1000, 1e-12);
        // oracle: g(0) from the Green's function, thresholds G 2^-m above it
        let g0 = green(&seq, Complex::new(0.0, 0.0), &k5, 1000, 1e-12).value_or_zero();
        let l_star = (1..200).filter(|&m| g0 < k5.g * 0.5f64.powi(m)).count() as u32;
        assert_eq!(l_star, 2);
        for k in 0..=40usize {
            assert_eq!(p.l[k], (k as u32).min(l_star));
        }
        let r = sufficient_condition_report(&p, l_star);
        assert_eq!(r.verdict, Verdict::EvidenceTotallyDisconnected);
        assert!(!property_kk(&p, l_star, 40));
    }

    #[test]
    fn scan_examples() {
        let k1 = Constants::derive(1.0).unwrap();
        assert!(bbr_disconnected_scan(&constant(0.0), 50, &k1, 500).is_empty());
        let witness = ParamSequence::Explicit {
            items: vec![Complex::new(-2.0, 0.0)],
            tail: Complex::new(0.0, 0.0),
        };
        let k2 = Constants::derive(2.0).unwrap();
        assert_eq!(bbr_disconnected_scan(&witness, 10, &k2, 500), vec![0]);
        let k = Constants::derive(0.5).unwrap();
        assert_eq!(
            bbr_disconnected_scan(&constant(0.3), 50, &k, 1000),
            (0..=50).collect::<Vec<_>>()
        );
    }

    #[test]
    fn unit_disk_grid() {
        let k1 = Constants::derive(1.0).unwrap();
        let n = 128;
        let field = grid_escape_field(&constant(0.0), &k1, GridBox::centered(2.5), n, 60);
        let h = field.cell_size();
        for row in 0..n {
            for col in 0..n {
                let m = field.cell_center(row, col).norm();
                if m < 1.0 - h {
                    assert!(field.is_bounded(row, col));
                } else if m > 1.0 + h {
                    assert!(!field.is_bounded(row, col));
                }
            }
        }
        let report = components(&field);
        assert_eq!(report.component_count, 1);
        assert_eq!(report.sizes[0], field.bounded_count());
        assert!((report.max_diameter - 2.0 * 2f64.sqrt()).abs() < 4.0 * h);
    }

    #[test]
    fn empty_field_has_no_components() {
        let field = GridField {
            grid: GridBox::centered(1.0),
            resolution: 4,
            n_max: 1,
            cells: vec![Some(0); 16],
        };
        let r = components(&field);
        assert_eq!(r.component_count, 0);
        assert_eq!(r.max_diameter, 0.0);
        assert!(r.sizes.is_empty());
    }

    #[test]
    fn labels_follow_four_connectivity() {
        // diagonal neighbours are separate components
        let b = None;
        let e = Some(1);
        let field = GridField {
            grid: GridBox::centered(1.0),
            resolution: 3,
            n_max: 1,
            cells: vec![b, e, b, e, b, e, b, b, b],
        };
        let labels = component_labels(&field);
        assert_eq!(labels[0], Some(0));
        assert_eq!(labels[2], Some(1));
        assert_eq!(labels[4], Some(2));
        assert_eq!(labels[6], Some(2));
        assert_eq!(labels[8], Some(2));
        assert_eq!(labels[1], None);
        let r = components(&field);
        assert_eq!(r.sizes, vec![4, 1, 1]);
    }
}
