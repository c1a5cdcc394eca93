//! Constellations: square QAM generation, power normalization, high-order
//! moments, nearest-point slicing and the text interchange format.
//!
//! Points are always kept in encoder-index order, so symbol index `i` maps to
//! point `i` everywhere in the crate.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt::Write;
use core::ops::Range;

use num_complex::Complex64;
// unused only when another crate in the build links std
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// An ordered set of `M = 2^m` complex points.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    name: String,
    points: Vec<Complex64>,
}

/// Normalized fourth and sixth moments of a constellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstellationMoments {
    pub mu4: f64,
    pub mu6: f64,
}

impl Constellation {
    /// Wraps `points` without rescaling them.
    pub fn new(name: impl Into<String>, points: Vec<Complex64>) -> Result<Self> {
        let m = points.len();
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::InvalidCardinality(m));
        }
        if let Some(i) = points.iter().position(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::NonFinitePoint(i));
        }
        Ok(Constellation {
            name: name.into(),
            points,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn cardinality(&self) -> usize {
        self.points.len()
    }

    /// Bits per symbol, `log2 M`.
    pub fn bits(&self) -> u32 {
        self.points.len().trailing_zeros()
    }

    pub fn mean_power(&self) -> f64 {
        mean_power(&self.points)
    }

    /// Rescaled copy with unit average power.
    pub fn normalized(&self) -> Result<Self> {
        Ok(normalize(&self.points)?.with_name(self.name.clone()))
    }

    /// Copy with every point multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Constellation {
            name: self.name.clone(),
            points: self.points.iter().map(|p| p * factor).collect(),
        }
    }

    /// Copy rotated by `angle` radians.
    pub fn rotated(&self, angle: f64) -> Self {
        let r = Complex64::from_polar(1.0, angle);
        Constellation {
            name: self.name.clone(),
            points: self.points.iter().map(|p| p * r).collect(),
        }
    }

    pub fn moments(&self) -> Result<ConstellationMoments> {
        moments(&self.points)
    }

    /// Smallest distance between two distinct points.
    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }

    /// Largest `s <= 16` such that a rotation by `2π/s` maps every point to
    /// within `rel_tol * min_distance` of some point. Returns 1 when the
    /// constellation has no such symmetry.
    pub fn rotational_symmetry_order(&self, rel_tol: f64) -> usize {
        if self.points.len() < 2 {
            return 1;
        }
        let tol = rel_tol * self.min_distance();
        let slicer = Slicer::new(&self.points);
        for s in (2..=16usize).rev() {
            let rot = Complex64::from_polar(1.0, 2.0 * PI / s as f64);
            let ok = self.points.iter().all(|p| {
                let (_, d2) = slicer.nearest(p * rot);
                d2.sqrt() <= tol
            });
            if ok {
                return s;
            }
        }
        1
    }

    /// Serializes to the text interchange format: a `M=<int>` header followed
    /// by `M` lines of `re,im`. Values are written with the shortest
    /// representation that parses back to the identical `f64`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 + 48 * self.points.len());
        let _ = writeln!(out, "M={}", self.points.len());
        for p in &self.points {
            let _ = writeln!(out, "{},{}", p.re, p.im);
        }
        out
    }

    /// Parses the text interchange format. Row numbers in errors are 1-based
    /// line numbers.
    pub fn from_text(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hrow, header) = lines.next().ok_or(Error::Parse {
            row: 1,
            msg: "missing header".to_string(),
        })?;
        let declared: usize = header
            .trim()
            .strip_prefix("M=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Parse {
                row: hrow + 1,
                msg: format!("expected header `M=<int>`, found `{}`", header.trim()),
            })?;
        let mut points = Vec::with_capacity(declared);
        for (row, line) in lines {
            let row = row + 1;
            let (re, im) = line.trim().split_once(',').ok_or_else(|| Error::Parse {
                row,
                msg: format!("expected `re,im`, found `{}`", line.trim()),
            })?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    row,
                    msg: format!("non-numeric entry `{}`", s.trim()),
                })
            };
            points.push(Complex64::new(parse(re)?, parse(im)?));
        }
        if points.len() != declared {
            return Err(Error::Parse {
                row: hrow + 1,
                msg: format!("header declares M={} but {} rows follow", declared, points.len()),
            });
        }
        Constellation::new(name, points)
    }
}

pub(crate) fn mean_power(points: &[Complex64]) -> f64 {
    points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64
}

/// Scales `points` to unit average power.
pub fn normalize(points: &[Complex64]) -> Result<Constellation> {
    if points.is_empty() {
        return Err(Error::InvalidCardinality(0));
    }
    let power = mean_power(points);
    if power <= 0.0 {
        return Err(Error::DegenerateConstellation);
    }
    let scale = 1.0 / power.sqrt();
    Constellation::new("", points.iter().map(|p| p * scale).collect())
}

/// `mu4 = E|X|^4 / (E|X|^2)^2` and `mu6 = E|X|^6 / (E|X|^2)^3` with uniform
/// weights over the points.
pub fn moments(points: &[Complex64]) -> Result<ConstellationMoments> {
    let n = points.len() as f64;
    let (mut s2, mut s4, mut s6) = (0.0, 0.0, 0.0);
    for p in points {
        let a = p.norm_sqr();
        s2 += a;
        s4 += a * a;
        s6 += a * a * a;
    }
    if n == 0.0 || s2 <= 0.0 {
        return Err(Error::DegenerateConstellation);
    }
    let (e2, e4, e6) = (s2 / n, s4 / n, s6 / n);
    Ok(ConstellationMoments {
        mu4: e4 / (e2 * e2),
        mu6: e6 / (e2 * e2 * e2),
    })
}

/// Square QAM with per-dimension levels `±1, ±3, …, ±(√M − 1)` normalized to
/// unit power. Index `i = a·√M + b` has real level `a` and imaginary level `b`.
pub fn make_square_qam(m: usize) -> Result<Constellation> {
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::InvalidCardinality(m));
    }
    let side = (m as f64).sqrt().round() as usize;
    if side * side != m {
        return Err(Error::NotSquare(m));
    }
    Ok(normalize(&grid_points(side, side))?.with_name(format!("qam{m}")))
}

/// Rectangular `rows × cols` grid with odd-integer levels, unnormalized.
pub(crate) fn grid_points(rows: usize, cols: usize) -> Vec<Complex64> {
    let mut points = Vec::with_capacity(rows * cols);
    for a in 0..rows {
        for b in 0..cols {
            points.push(Complex64::new(
                (2 * a) as f64 - (rows - 1) as f64,
                (2 * b) as f64 - (cols - 1) as f64,
            ));
        }
    }
    points
}

/// Exact minimum-Euclidean-distance decisions against a fixed point set.
///
/// A uniform grid over the constellation's bounding square stores, for every
/// cell, the points that can be nearest to some location inside that cell.
/// Queries falling outside the grid are searched exhaustively. Ties resolve
/// to the smallest point index in both paths.
#[derive(Debug, Clone)]
pub struct Slicer {
    points: Vec<Complex64>,
    origin: f64,
    cell: f64,
    side: usize,
    cells: Vec<Range<u32>>,
    candidates: Vec<u32>,
}

impl Slicer {
    pub fn new(points: &[Complex64]) -> Self {
        let points = points.to_vec();
        let radius = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
        if points.len() <= 8 || radius == 0.0 {
            return Slicer {
                points,
                origin: 0.0,
                cell: 1.0,
                side: 0,
                cells: Vec::new(),
                candidates: Vec::new(),
            };
        }
        let side = ((points.len() as f64).sqrt() * 4.0).ceil() as usize;
        let half = 1.5 * radius;
        let origin = -half;
        let cell = 2.0 * half / side as f64;
        let margin = 1e-6 * cell;
        let mut cells = Vec::with_capacity(side * side);
        let mut candidates = Vec::new();
        for iy in 0..side {
            for ix in 0..side {
                let x0 = origin + ix as f64 * cell - margin;
                let y0 = origin + iy as f64 * cell - margin;
                let (x1, y1) = (x0 + cell + 2.0 * margin, y0 + cell + 2.0 * margin);
                let bound = points
                    .iter()
                    .map(|p| {
                        let dx = (p.re - x0).abs().max((p.re - x1).abs());
                        let dy = (p.im - y0).abs().max((p.im - y1).abs());
                        dx * dx + dy * dy
                    })
                    .fold(f64::INFINITY, f64::min);
                let start = candidates.len() as u32;
                for (i, p) in points.iter().enumerate() {
                    let dx = (x0 - p.re).max(0.0).max(p.re - x1);
                    let dy = (y0 - p.im).max(0.0).max(p.im - y1);
                    if dx * dx + dy * dy <= bound {
                        candidates.push(i as u32);
                    }
                }
                cells.push(start..candidates.len() as u32);
            }
        }
        Slicer {
            points,
            origin,
            cell,
            side,
            cells,
            candidates,
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Index of the nearest point and its squared distance to `z`.
    #[inline]
    pub fn nearest(&self, z: Complex64) -> (usize, f64) {
        if self.side > 0 {
            let fx = (z.re - self.origin) / self.cell;
            let fy = (z.im - self.origin) / self.cell;
            let lim = self.side as f64;
            if fx >= 0.0 && fy >= 0.0 && fx < lim && fy < lim {
                let range = &self.cells[fy as usize * self.side + fx as usize];
                let mut best = (0usize, f64::INFINITY);
                for &i in &self.candidates[range.start as usize..range.end as usize] {
                    let d = (z - self.points[i as usize]).norm_sqr();
                    if d < best.1 {
                        best = (i as usize, d);
                    }
                }
                return best;
            }
        }
        self.nearest_exhaustive(z)
    }

    pub fn nearest_exhaustive(&self, z: Complex64) -> (usize, f64) {
        let mut best = (0usize, f64::INFINITY);
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn qpsk_is_constant_modulus() {
        let q = make_square_qam(4).unwrap();
        let s = 1.0 / 2f64.sqrt();
        for p in q.points() {
            assert!((p.re.abs() - s).abs() < 1e-15 && (p.im.abs() - s).abs() < 1e-15);
        }
    }

    #[test]
    fn qam16_scale_factor() {
        let q = make_square_qam(16).unwrap();
        // level 1 scaled by 1/sqrt(10)
        let smallest = q.points().iter().map(|p| p.re.abs()).fold(f64::INFINITY, f64::min);
        assert!((smallest - 1.0 / 10f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn qam64_grid() {
        let q = make_square_qam(64).unwrap();
        assert_eq!(q.cardinality(), 64);
        assert_eq!(q.bits(), 6);
        assert!((q.mean_power() - 1.0).abs() < 1e-12);
        let mut re: Vec<i64> = q.points().iter().map(|p| (p.re * 42f64.sqrt()).round() as i64).collect();
        re.sort();
        re.dedup();
        assert_eq!(re, vec![-7, -5, -3, -1, 1, 3, 5, 7]);
    }

    #[test]
    fn qam_rejects_bad_cardinality() {
        assert_eq!(make_square_qam(8), Err(Error::NotSquare(8)));
        assert_eq!(make_square_qam(12), Err(Error::InvalidCardinality(12)));
        assert_eq!(make_square_qam(0), Err(Error::InvalidCardinality(0)));
    }

    #[test]
    fn normalize_examples() {
        let n = normalize(&[c(2.0, 0.0), c(-2.0, 0.0)]).unwrap();
        assert_eq!(n.points(), &[c(1.0, 0.0), c(-1.0, 0.0)]);
        let n = normalize(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(n.points(), &[c(1.0, 0.0), c(-1.0, 0.0)]);
        let n = normalize(&[c(1.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert!((n.points()[0].re - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((n.points()[1].re - 3.0 / 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(normalize(&[c(0.0, 0.0), c(0.0, 0.0)]), Err(Error::DegenerateConstellation));
    }

    #[test]
    fn moments_examples() {
        let m = make_square_qam(4).unwrap().moments().unwrap();
        assert!((m.mu4 - 1.0).abs() < 1e-14 && (m.mu6 - 1.0).abs() < 1e-14);
        let m = make_square_qam(16).unwrap().moments().unwrap();
        assert!((m.mu4 - 1.32).abs() < 1e-12 && (m.mu6 - 1.96).abs() < 1e-12);
        let q = make_square_qam(16).unwrap();
        let big = q.scaled(7.0).moments().unwrap();
        assert!((big.mu4 - m.mu4).abs() < 1e-12 && (big.mu6 - m.mu6).abs() < 1e-12);
        assert_eq!(moments(&[c(0.0, 0.0), c(0.0, 0.0)]), Err(Error::DegenerateConstellation));
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let q = make_square_qam(64).unwrap().rotated(0.123);
        let back = Constellation::from_text("qam64", &q.to_text()).unwrap();
        for (a, b) in q.points().iter().zip(back.points()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn text_errors() {
        let q = make_square_qam(64).unwrap();
        let text = q.to_text();
        let short: String = text.lines().take(64).map(|l| format!("{l}\n")).collect();
        assert!(matches!(Constellation::from_text("x", &short), Err(Error::Parse { .. })));
        let bad = "M=2\n1.0,0.0\nabc,0.0\n";
        assert_eq!(
            Constellation::from_text("x", bad),
            Err(Error::Parse {
                row: 3,
                msg: "non-numeric entry `abc`".into()
            })
        );
        assert!(matches!(Constellation::from_text("x", "N=2\n"), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn qam_symmetry_order_is_four() {
        assert_eq!(make_square_qam(64).unwrap().rotational_symmetry_order(0.05), 4);
        let skew = Constellation::new("s", vec![c(1.0, 0.0), c(-0.5, 0.2), c(0.1, 0.9), c(-0.3, -1.1)]).unwrap();
        assert_eq!(skew.rotational_symmetry_order(0.05), 1);
    }

    #[test]
    fn slicer_matches_exhaustive_on_qam() {
        let q = make_square_qam(64).unwrap();
        let s = Slicer::new(q.points());
        let mut k = 0u64;
        for ix in -60..60 {
            for iy in -60..60 {
                k += 1;
                let z = c(ix as f64 * 0.031 + 1e-3 * (k % 7) as f64, iy as f64 * 0.029);
                assert_eq!(s.nearest(z), s.nearest_exhaustive(z));
            }
        }
    }

    fn points_strategy() -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 16)
            .prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect::<Vec<_>>())
            .prop_filter("nondegenerate", |v| mean_power(v) > 1e-3)
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(p in points_strategy()) {
            let once = normalize(&p).unwrap();
            let twice = normalize(once.points()).unwrap();
            prop_assert!((once.mean_power() - 1.0).abs() < 1e-9);
            for (a, b) in once.points().iter().zip(twice.points()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }

        #[test]
        fn moments_rotation_and_scale_invariant(p in points_strategy(), alpha in 0.0f64..6.3, k in 0.1f64..10.0) {
            let cst = Constellation::new("p", p).unwrap();
            let base = cst.moments().unwrap();
            let moved = cst.rotated(alpha).scaled(k).moments().unwrap();
            prop_assert!((base.mu4 - moved.mu4).abs() < 1e-9 * base.mu4);
            prop_assert!((base.mu6 - moved.mu6).abs() < 1e-9 * base.mu6);
            prop_assert!(base.mu4 >= 1.0 - 1e-12 && base.mu6 >= 1.0 - 1e-12);
        }

        #[test]
        fn slicer_is_exact(p in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 32),
                           q in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 64)) {
            let pts: Vec<Complex64> = p.into_iter().map(|(a, b)| c(a, b)).collect();
            let s = Slicer::new(&pts);
            for (a, b) in q {
                prop_assert_eq!(s.nearest(c(a, b)), s.nearest_exhaustive(c(a, b)));
            }
        }
    }
}
