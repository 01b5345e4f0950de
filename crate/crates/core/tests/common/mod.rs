//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the crate's dynamics or connectivity code: orbits
//! are iterated with plain loops, components are labelled by breadth-first
//! flood fill, and roots come from an explicit polynomial.

#![allow(dead_code)]

use std::collections::VecDeque;

use randjulia::Complex;

/// Coefficients (lowest degree first) of `f_{c_{k-1}} ∘ ... ∘ f_{c_0}`.
pub fn composed_poly(params: &[Complex]) -> Vec<Complex> {
    let mut p = vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)];
    for &c in params {
        let mut sq = vec![Complex::new(0.0, 0.0); 2 * p.len() - 1];
        for (i, a) in p.iter().enumerate() {
            for (j, b) in p.iter().enumerate() {
                sq[i + j] += a * b;
            }
        }
        sq[0] += c;
        p = sq;
    }
    p
}

pub fn eval_poly(p: &[Complex], z: Complex) -> (Complex, Complex) {
    let mut v = Complex::new(0.0, 0.0);
    let mut d = Complex::new(0.0, 0.0);
    for &a in p.iter().rev() {
        d = d * z + v;
        v = v * z + a;
    }
    (v, d)
}

/// All roots of a monic-leading polynomial by Aberth–Ehrlich iteration.
pub fn aberth_roots(p: &[Complex]) -> Vec<Complex> {
    let n = p.len() - 1;
    let lead = p[n].norm();
    let cauchy = 1.0 + p[..n].iter().map(|a| a.norm() / lead).fold(0.0, f64::max);
    let mut z: Vec<Complex> = (0..n)
        .map(|j| Complex::from_polar(cauchy * 0.9, 2.0 * std::f64::consts::PI * (j as f64 + 0.25) / n as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (v, d) = eval_poly(p, z[i]);
            if v.norm() == 0.0 {
                continue;
            }
            let ratio = v / d;
            let repulsion: Complex = (0..n)
                .filter(|&j| j != i)
                .map(|j| Complex::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let step = ratio / (Complex::new(1.0, 0.0) - ratio * repulsion);
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// The `2^k` solutions of `f^k(z) = w` by taking both square roots
/// backwards through each map.
pub fn backward_roots(params: &[Complex], w: Complex) -> Vec<Complex> {
    let mut layer = vec![w];
    for &c in params.iter().rev() {
        layer = layer
            .iter()
            .flat_map(|&v| {
                let s = (v - c).sqrt();
                [s, -s]
            })
            .collect();
    }
    layer
}

pub fn iterate_plain(params: &[Complex], mut z: Complex) -> Complex {
    for &c in params {
        z = z * z + c;
    }
    z
}

/// Square grid of `n × n` cell centers over `[-h, h]²`, row 0 at the top.
pub struct Grid {
    pub n: usize,
    pub h: f64,
}

impl Grid {
    pub fn center(&self, row: usize, col: usize) -> Complex {
        let cell = 2.0 * self.h / self.n as f64;
        Complex::new(
            -self.h + (col as f64 + 0.5) * cell,
            self.h - (row as f64 + 0.5) * cell,
        )
    }

    pub fn cell_of(&self, z: Complex) -> Option<(usize, usize)> {
        let cell = 2.0 * self.h / self.n as f64;
        let col = ((z.re + self.h) / cell).floor();
        let row = ((self.h - z.im) / cell).floor();
        if col < 0.0 || row < 0.0 || col >= self.n as f64 || row >= self.n as f64 {
            return None;
        }
        Some((row as usize, col as usize))
    }
}

/// 4-connected labels by breadth-first flood fill, numbered in raster order.
pub fn flood_labels(mask: &[bool], n: usize) -> (Vec<Option<usize>>, usize) {
    let mut labels = vec![None; n * n];
    let mut next = 0;
    for start in 0..n * n {
        if !mask[start] || labels[start].is_some() {
            continue;
        }
        labels[start] = Some(next);
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (r, c) = (i / n, i % n);
            let mut visit = |j: usize| {
                if mask[j] && labels[j].is_none() {
                    labels[j] = Some(next);
                    queue.push_back(j);
                }
            };
            if r > 0 {
                visit(i - n);
            }
            if r + 1 < n {
                visit(i + n);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < n {
                visit(i + 1);
            }
        }
        next += 1;
    }
    (labels, next)
}

/// Cells whose centers stay inside `|z| < r0` for the whole horizon under a
/// constant parameter.
pub fn bounded_mask_constant(c: Complex, r0: f64, grid: &Grid, n_max: u32) -> Vec<bool> {
    let mut mask = vec![false; grid.n * grid.n];
    for row in 0..grid.n {
        for col in 0..grid.n {
            let mut z = grid.center(row, col);
            let mut inside = z.norm() < r0;
            for _ in 0..n_max {
                if !inside {
                    break;
                }
                z = z * z + c;
                inside = z.norm() < r0;
            }
            mask[row * grid.n + col] = inside;
        }
    }
    mask
}

/// Largest number of solutions of `f^k(z) = w` that fall in one grid
/// component of `{ |f^k(z)| < radius }`.
pub struct DegreeCount {
    pub max_degree: usize,
    pub components: usize,
    pub roots: usize,
}

pub fn exact_component_degree(params: &[Complex], w: Complex, radius: f64, resolution: usize) -> DegreeCount {
    let grid = Grid {
        n: resolution,
        h: radius,
    };
    let mask: Vec<bool> = (0..resolution * resolution)
        .map(|i| iterate_plain(params, grid.center(i / resolution, i % resolution)).norm() < radius)
        .collect();
    let (labels, count) = flood_labels(&mask, resolution);

    let mut poly = composed_poly(params);
    poly[0] -= w;
    let roots = aberth_roots(&poly);
    let reference = backward_roots(params, w);
    for r in &roots {
        let nearest = reference.iter().map(|b| (b - r).norm()).fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-7, "root finders disagree: {r} is {nearest} from the nearest backward root");
    }

    let mut per_component = vec![0usize; count];
    for r in &reference {
        let (row, col) = grid.cell_of(*r).expect("roots lie in the disk");
        let label = labels[row * resolution + col].expect("a root maps into the disk");
        per_component[label] += 1;
    }
    DegreeCount {
        max_degree: per_component.iter().copied().max().unwrap_or(0),
        components: count,
        roots: reference.len(),
    }
}
