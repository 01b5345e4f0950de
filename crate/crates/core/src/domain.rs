//! Parameter regions `V`, uniform sampling on them, and parameter sequences.
//!
//! Random draws are counter based: draw `i` of stream `s` under master seed
//! `m` is a pure function of `(m, s, i)`, so a sequence element never depends
//! on which thread produced it or on what was drawn before it.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Complex;

/// Absolute tolerance for membership on [`Region::Circle`].
pub const CIRCLE_TOLERANCE: f64 = 1e-12;

/// Upper bound on rejected proposals for a single draw.
pub const MAX_REJECTIONS: u32 = 1_000_000;

/// `Im` extent of the main cardioid, attained at `μ = e^{2πi/3}`.
const CARDIOID_HALF_HEIGHT: f64 = 0.649_519_052_838_329; // 3√3/8

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("center must be finite")]
    BadCenter,
    #[error("union must have at least one member")]
    EmptyUnion,
    #[error("union members must have positive area (circle found)")]
    CircleInUnion,
    #[error("sequence parameter must be finite")]
    NonFiniteParameter,
    #[error("periodic sequence needs at least one item")]
    EmptyPeriod,
}

/// A bounded parameter set with a uniform distribution on it.
///
/// Disks are open. `Circle` carries normalized arc length, every other
/// variant normalized area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    Disk {
        radius: f64,
    },
    Circle {
        radius: f64,
    },
    #[serde(rename = "cardioid")]
    MainCardioid,
    DiskAt {
        center: Complex,
        radius: f64,
    },
    Union {
        members: Vec<Region>,
    },
}

fn check_radius(radius: f64) -> Result<(), RegionError> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(RegionError::BadRadius(radius))
    }
}

impl Region {
    pub fn validate(&self) -> Result<(), RegionError> {
        match self {
            Region::Disk { radius } | Region::Circle { radius } => check_radius(*radius),
            Region::MainCardioid => Ok(()),
            Region::DiskAt { center, radius } => {
                if !(center.re.is_finite() && center.im.is_finite()) {
                    return Err(RegionError::BadCenter);
                }
                check_radius(*radius)
            }
            Region::Union { members } => {
                if members.is_empty() {
                    return Err(RegionError::EmptyUnion);
                }
                for m in members {
                    if matches!(m, Region::Circle { .. }) {
                        return Err(RegionError::CircleInUnion);
                    }
                    m.validate()?;
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, c: Complex) -> bool {
        match self {
            Region::Disk { radius } => c.norm() < *radius,
            Region::Circle { radius } => (c.norm() - radius).abs() <= CIRCLE_TOLERANCE,
            Region::MainCardioid => {
                // 1 - 4c = (1 - μ)², and the principal root picks 1 - μ.
                let w = (Complex::new(1.0, 0.0) - 4.0 * c).sqrt();
                (Complex::new(1.0, 0.0) - w).norm() < 1.0
            }
            Region::DiskAt { center, radius } => (c - center).norm() < *radius,
            Region::Union { members } => members.iter().any(|m| m.contains(c)),
        }
    }

    /// Smallest `R` with the region inside the closed disk of radius `R`.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Region::Disk { radius } | Region::Circle { radius } => *radius,
            Region::MainCardioid => 0.75,
            Region::DiskAt { center, radius } => center.norm() + radius,
            Region::Union { members } => members
                .iter()
                .map(Region::bounding_radius)
                .fold(0.0, f64::max),
        }
    }

    /// Axis-aligned box `(lower-left, upper-right)` containing the region.
    pub fn bounding_box(&self) -> (Complex, Complex) {
        match self {
            Region::Disk { radius } | Region::Circle { radius } => (
                Complex::new(-radius, -radius),
                Complex::new(*radius, *radius),
            ),
            Region::MainCardioid => (
                Complex::new(-0.75, -CARDIOID_HALF_HEIGHT),
                Complex::new(0.375, CARDIOID_HALF_HEIGHT),
            ),
            Region::DiskAt { center, radius } => (
                Complex::new(center.re - radius, center.im - radius),
                Complex::new(center.re + radius, center.im + radius),
            ),
            Region::Union { members } => {
                let mut lo = Complex::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Complex::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for m in members {
                    let (a, b) = m.bounding_box();
                    lo = Complex::new(lo.re.min(a.re), lo.im.min(a.im));
                    hi = Complex::new(hi.re.max(b.re), hi.im.max(b.im));
                }
                (lo, hi)
            }
        }
    }

    /// Uniform draw number `draw` from stream `stream` under `master_seed`.
    ///
    /// Panics if a rejection sampler exceeds [`MAX_REJECTIONS`] proposals,
    /// which only happens for degenerate unions.
    pub fn sample(&self, master_seed: u64, stream: u64, draw: u64) -> Complex {
        let mut rng = stream_rng(master_seed, stream);
        rng.set_word_pos(draw_start(draw));
        self.draw_at(&mut rng, draw)
    }

    /// Draw `draw` from a keystream positioned at its first word; leaves the
    /// keystream at the first word of draw `draw + 1`.
    fn draw_at(&self, main: &mut ChaCha8Rng, draw: u64) -> Complex {
        let mut words = DrawWords {
            main,
            used: 0,
            overflow: None,
            draw,
        };
        let c = self.propose_from(&mut words);
        let (used, overflowed) = (words.used, words.overflow.is_some());
        if overflowed {
            main.set_word_pos(draw_start(draw + 1));
        } else {
            for _ in used..DRAW_WORDS {
                main.next_u32();
            }
        }
        c
    }

    fn propose_from<R: Rng>(&self, rng: &mut R) -> Complex {
        match self {
            Region::Circle { radius } => {
                let theta = 2.0 * PI * rng.random::<f64>();
                Complex::from_polar(*radius, theta)
            }
            Region::Disk { radius } => {
                retry(self, rng, |rng| disk_point(rng, Complex::new(0.0, 0.0), *radius))
            }
            Region::DiskAt { center, radius } => retry(self, rng, |rng| disk_point(rng, *center, *radius)),
            Region::MainCardioid | Region::Union { .. } => {
                let (lo, hi) = self.bounding_box();
                retry(self, rng, |rng| {
                    Complex::new(
                        lo.re + (hi.re - lo.re) * rng.random::<f64>(),
                        lo.im + (hi.im - lo.im) * rng.random::<f64>(),
                    )
                })
            }
        }
    }
}

/// Keystream words owned by each draw. Draws that need more continue in a
/// per-draw overflow region far beyond every primary block.
const DRAW_WORDS: u32 = 16;
const OVERFLOW_BASE: u128 = 1 << 67;

fn draw_start(draw: u64) -> u128 {
    u128::from(draw) * u128::from(DRAW_WORDS)
}

fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// The words of one draw: its primary block, then its overflow region.
struct DrawWords<'a> {
    main: &'a mut ChaCha8Rng,
    used: u32,
    overflow: Option<ChaCha8Rng>,
    draw: u64,
}

impl RngCore for DrawWords<'_> {
    fn next_u32(&mut self) -> u32 {
        if self.used < DRAW_WORDS {
            self.used += 1;
            return self.main.next_u32();
        }
        let draw = self.draw;
        let main = &*self.main;
        self.overflow
            .get_or_insert_with(|| {
                let mut rng = main.clone();
                // 2^32 words per draw covers the full rejection budget
                rng.set_word_pos(OVERFLOW_BASE + (u128::from(draw) << 32));
                rng
            })
            .next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        let lo = u64::from(self.next_u32());
        let hi = u64::from(self.next_u32());
        (hi << 32) | lo
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(4) {
            let bytes = self.next_u32().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

fn disk_point<R: Rng>(rng: &mut R, center: Complex, radius: f64) -> Complex {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    center + Complex::from_polar(r, theta)
}

fn retry<R: Rng>(region: &Region, rng: &mut R, mut propose: impl FnMut(&mut R) -> Complex) -> Complex {
    for _ in 0..MAX_REJECTIONS {
        let c = propose(rng);
        if region.contains(c) {
            return c;
        }
    }
    panic!("rejection sampler exceeded {MAX_REJECTIONS} proposals for {region}");
}

impl fmt::Display for Region {
    /// Writes the textual region form accepted by the command line parser.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Disk { radius } => write!(f, "disk:{radius}"),
            Region::Circle { radius } => write!(f, "circle:{radius}"),
            Region::MainCardioid => write!(f, "cardioid"),
            Region::DiskAt { center, radius } => {
                write!(f, "disk_at:{},{},{radius}", center.re, center.im)
            }
            Region::Union { members } => {
                write!(f, "union:[")?;
                for (i, m) in members.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{m}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Anything that supplies the parameter `c_i` for every index `i`.
pub trait ParamSource: Sync {
    fn param(&self, i: u64) -> Complex;

    /// `c_start, c_start+1, ...` in order; equal to calling [`param`](Self::param)
    /// for each index, but may be cheaper.
    fn params(&self, start: u64) -> Box<dyn Iterator<Item = Complex> + '_> {
        Box::new((start..).map(move |i| self.param(i)))
    }

    /// The shifted sequence `σ^k ω`.
    fn shift(&self, k: u64) -> Shifted<'_, Self>
    where
        Self: Sized,
    {
        Shifted { inner: self, offset: k }
    }
}

/// `σ^k ω` as an index offset into a borrowed sequence.
#[derive(Debug, Clone, Copy)]
pub struct Shifted<'a, P: ?Sized> {
    inner: &'a P,
    offset: u64,
}

impl<'a, P: ?Sized> Shifted<'a, P> {
    pub fn new(inner: &'a P, offset: u64) -> Self {
        Shifted { inner, offset }
    }
}

impl<P: ParamSource + ?Sized> ParamSource for Shifted<'_, P> {
    fn param(&self, i: u64) -> Complex {
        self.inner.param(i + self.offset)
    }

    fn params(&self, start: u64) -> Box<dyn Iterator<Item = Complex> + '_> {
        self.inner.params(start + self.offset)
    }
}

/// A parameter sequence `ω = (c_0, c_1, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSequence {
    Constant(Complex),
    /// A finite prefix followed by a constant tail.
    Explicit {
        items: Vec<Complex>,
        tail: Complex,
    },
    Periodic(Vec<Complex>),
    Random {
        region: Region,
        master_seed: u64,
        stream: u64,
    },
}

fn finite(c: &Complex) -> bool {
    c.re.is_finite() && c.im.is_finite()
}

impl ParamSequence {
    pub fn random(region: Region, master_seed: u64, stream: u64) -> Self {
        ParamSequence::Random {
            region,
            master_seed,
            stream,
        }
    }

    pub fn validate(&self) -> Result<(), RegionError> {
        let all_finite = match self {
            ParamSequence::Constant(c) => finite(c),
            ParamSequence::Explicit { items, tail } => items.iter().all(finite) && finite(tail),
            ParamSequence::Periodic(items) => {
                if items.is_empty() {
                    return Err(RegionError::EmptyPeriod);
                }
                items.iter().all(finite)
            }
            ParamSequence::Random { region, .. } => return region.validate(),
        };
        if all_finite {
            Ok(())
        } else {
            Err(RegionError::NonFiniteParameter)
        }
    }

    /// Declared bound on `|c_i|` over the whole sequence.
    pub fn bound(&self) -> f64 {
        match self {
            ParamSequence::Constant(c) => c.norm(),
            ParamSequence::Explicit { items, tail } => items
                .iter()
                .map(|c| c.norm())
                .fold(tail.norm(), f64::max),
            ParamSequence::Periodic(items) => items.iter().map(|c| c.norm()).fold(0.0, f64::max),
            ParamSequence::Random { region, .. } => region.bounding_radius(),
        }
    }

    pub fn at(&self, i: u64) -> Complex {
        match self {
            ParamSequence::Constant(c) => *c,
            ParamSequence::Explicit { items, tail } => usize::try_from(i)
                .ok()
                .and_then(|i| items.get(i))
                .copied()
                .unwrap_or(*tail),
            ParamSequence::Periodic(items) => items[(i % items.len() as u64) as usize],
            ParamSequence::Random {
                region,
                master_seed,
                stream,
            } => region.sample(*master_seed, *stream, i),
        }
    }
}

impl ParamSource for ParamSequence {
    fn param(&self, i: u64) -> Complex {
        self.at(i)
    }

    fn params(&self, start: u64) -> Box<dyn Iterator<Item = Complex> + '_> {
        match self {
            ParamSequence::Random {
                region,
                master_seed,
                stream,
            } => {
                let mut rng = stream_rng(*master_seed, *stream);
                rng.set_word_pos(draw_start(start));
                Box::new((start..).map(move |i| region.draw_at(&mut rng, i)))
            }
            _ => Box::new((start..).map(move |i| self.at(i))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn membership_examples() {
        assert!(Region::MainCardioid.contains(c(0.0, 0.0)));
        assert!(!Region::MainCardioid.contains(c(0.26, 0.0)));
        assert!(Region::MainCardioid.contains(c(-0.74, 0.0)));
        assert!(!Region::MainCardioid.contains(c(-0.76, 0.0)));
        assert!(!Region::Disk { radius: 1.0 }.contains(c(1.0, 0.0)));
        assert!(Region::Circle { radius: 0.5 }.contains(c(0.0, -0.5)));
        assert!(!Region::Circle { radius: 0.5 }.contains(c(0.0, -0.4)));
    }

    #[test]
    fn bounding_radii() {
        assert_eq!(Region::Disk { radius: 0.5 }.bounding_radius(), 0.5);
        assert_eq!(Region::MainCardioid.bounding_radius(), 0.75);
        let u = Region::Union {
            members: vec![
                Region::Disk { radius: 0.25 },
                Region::DiskAt {
                    center: c(0.5, 0.0),
                    radius: 0.1,
                },
            ],
        };
        assert!((u.bounding_radius() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn cardioid_boundary_stays_inside_its_box() {
        let (lo, hi) = Region::MainCardioid.bounding_box();
        for i in 0..10_000 {
            let mu = Complex::from_polar(1.0, 2.0 * PI * i as f64 / 10_000.0);
            let p = mu / 2.0 - mu * mu / 4.0;
            assert!(p.re >= lo.re - 1e-12 && p.re <= hi.re + 1e-12);
            assert!(p.im >= lo.im - 1e-12 && p.im <= hi.im + 1e-12);
        }
    }

    #[test]
    fn cardioid_contains_quarter_disk() {
        // 10^3 points spread over |c| < 1/4
        for i in 0..1000u32 {
            let r = 0.25 * ((i % 40) as f64 + 0.5) / 40.0;
            let theta = 2.0 * PI * (i / 40) as f64 / 25.0;
            assert!(Region::MainCardioid.contains(Complex::from_polar(r, theta)));
        }
    }

    #[test]
    fn circle_samples_have_exact_radius() {
        let region = Region::Circle { radius: 0.5 };
        for i in 0..1000 {
            let s = region.sample(9, 3, i);
            assert!((s.norm() - 0.5).abs() <= 1e-15);
        }
    }

    #[test]
    fn sampling_is_a_pure_function_of_the_counter() {
        let region = Region::MainCardioid;
        let a = region.sample(42, 7, 1000);
        let _ = region.sample(42, 7, 999);
        assert_eq!(a, region.sample(42, 7, 1000));
        assert_ne!(a, region.sample(42, 8, 1000));
        assert_ne!(a, region.sample(43, 7, 1000));
    }

    #[test]
    fn sequence_indexing() {
        let e = ParamSequence::Explicit {
            items: vec![c(-2.0, 0.0)],
            tail: c(0.0, 0.0),
        };
        assert_eq!(e.at(0), c(-2.0, 0.0));
        assert_eq!(e.at(5), c(0.0, 0.0));
        let p = ParamSequence::Periodic(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(p.at(3), c(0.0, 1.0));
        assert_eq!(ParamSequence::Constant(c(0.3, 0.0)).at(12345), c(0.3, 0.0));
        assert_eq!(p.shift(1).param(0), c(0.0, 1.0));
        assert_eq!(p.shift(1).shift(2).param(0), c(0.0, 1.0));
    }

    #[test]
    fn validation() {
        assert!(Region::Disk { radius: 0.0 }.validate().is_err());
        assert!(Region::Union { members: vec![] }.validate().is_err());
        assert_eq!(
            Region::Union {
                members: vec![Region::Circle { radius: 1.0 }]
            }
            .validate(),
            Err(RegionError::CircleInUnion)
        );
        assert!(ParamSequence::Periodic(vec![]).validate().is_err());
        assert!(ParamSequence::Constant(c(f64::NAN, 0.0)).validate().is_err());
    }

    #[test]
    fn json_form() {
        let r: Region =
            serde_json::from_str(r#"{"type":"disk_at","center":[2.0,0.0],"radius":0.1}"#).unwrap();
        assert_eq!(
            r,
            Region::DiskAt {
                center: c(2.0, 0.0),
                radius: 0.1
            }
        );
        let r: Region = serde_json::from_str(r#"{"type":"cardioid"}"#).unwrap();
        assert_eq!(r, Region::MainCardioid);
    }

    #[test]
    fn streamed_parameters_match_indexed_ones() {
        let sparse = Region::Union {
            members: vec![
                Region::DiskAt {
                    center: c(-1.0, -1.0),
                    radius: 0.1,
                },
                Region::DiskAt {
                    center: c(1.0, 1.0),
                    radius: 0.1,
                },
            ],
        };
        for region in [
            Region::Disk { radius: 1.0 },
            Region::Circle { radius: 0.5 },
            Region::MainCardioid,
            sparse,
        ] {
            let seq = ParamSequence::random(region.clone(), 17, 4);
            let streamed: Vec<Complex> = seq.params(3).take(200).collect();
            for (j, z) in streamed.iter().enumerate() {
                assert_eq!(*z, seq.at(3 + j as u64), "{region} at {}", 3 + j);
                assert!(region.contains(*z));
            }
            let shifted = Shifted::new(&seq, 5);
            assert_eq!(shifted.params(2).next(), Some(seq.at(7)));
        }
    }
}
