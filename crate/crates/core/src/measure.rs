//! Compactly supported finite measures on the real line, stored as a list of
//! atoms plus a density table on a uniform grid (trapezoidal mass convention).

use std::fmt;
use std::io::Write as IoWrite;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum moment order accepted before ill-conditioning dominates.
pub const MAX_MOMENT_ORDER: usize = 32;

/// Tolerance on the total mass of a measure declared to be a probability.
pub const PROBABILITY_TOL: f64 = 1e-6;

/// Uniform grid carrying the absolutely continuous part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi || n < 2 {
            return Err(Error::Invalid(format!(
                "grid must have finite lo < hi and n >= 2, got [{lo}, {hi}] n={n}"
            )));
        }
        Ok(GridSpec { lo, hi, n })
    }

    /// Grid spacing.
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.lo + self.step() * j as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.node(j))
    }
}

/// A finite measure with bounded support: point masses plus a gridded density.
///
/// The density follows the trapezoidal convention: the mass of the table is
/// `h * (d_0/2 + d_1 + ... + d_{n-2} + d_{n-1}/2)`. Atoms and density may
/// coexist. Values are immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedMeasure {
    atoms: Vec<(f64, f64)>,
    grid: Option<GridSpec>,
    density: Vec<f64>,
    is_probability: bool,
}

#[derive(Serialize, Deserialize)]
struct MeasureSchema {
    atoms: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    density: Vec<f64>,
}

impl DiscretizedMeasure {
    /// General constructor. `probability` requests exact renormalization,
    /// accepted only when the raw mass is already within [`PROBABILITY_TOL`].
    pub fn new(
        atoms: Vec<(f64, f64)>,
        table: Option<(GridSpec, Vec<f64>)>,
        probability: bool,
    ) -> Result<Self> {
        let tol = if probability { PROBABILITY_TOL } else { 0.0 };
        Self::with_mass_tolerance(atoms, table, probability, tol)
    }

    /// Constructor with a caller-chosen mass tolerance for the probability
    /// check (the inversion pipeline renormalizes within 1e-3).
    pub(crate) fn with_mass_tolerance(
        atoms: Vec<(f64, f64)>,
        table: Option<(GridSpec, Vec<f64>)>,
        probability: bool,
        mass_tol: f64,
    ) -> Result<Self> {
        for &(p, m) in &atoms {
            if !p.is_finite() || !m.is_finite() {
                return Err(Error::Invalid(format!("non-finite atom ({p}, {m})")));
            }
            if m < 0.0 {
                return Err(Error::NegativeMass(m));
            }
        }
        let (grid, density) = match table {
            Some((g, d)) => {
                if d.len() != g.n {
                    return Err(Error::Invalid(format!(
                        "density length {} does not match grid n {}",
                        d.len(),
                        g.n
                    )));
                }
                for &v in &d {
                    if !v.is_finite() {
                        return Err(Error::Invalid(format!("non-finite density value {v}")));
                    }
                    if v < 0.0 {
                        return Err(Error::NegativeMass(v));
                    }
                }
                (Some(g), d)
            }
            None => (None, Vec::new()),
        };
        if atoms.is_empty() && grid.is_none() {
            return Err(Error::EmptyMeasure);
        }
        let mut measure = DiscretizedMeasure { atoms, grid, density, is_probability: false };
        if probability {
            let mass = measure.total_mass();
            if (mass - 1.0).abs() > mass_tol || mass <= 0.0 {
                return Err(Error::NotProbability(mass));
            }
            measure.rescale(1.0 / mass);
            measure.is_probability = true;
        }
        Ok(measure)
    }

    /// Purely atomic measure.
    pub fn from_atoms(atoms: Vec<(f64, f64)>, probability: bool) -> Result<Self> {
        Self::new(atoms, None, probability)
    }

    /// The point mass at `a`.
    pub fn point_mass(a: f64) -> Self {
        Self::from_atoms(vec![(a, 1.0)], true).expect("point mass is a probability")
    }

    /// Symmetric two-point measure on {-1, +1}.
    pub fn symmetric_bernoulli() -> Self {
        Self::from_atoms(vec![(-1.0, 0.5), (1.0, 0.5)], true).expect("probability")
    }

    fn rescale(&mut self, factor: f64) {
        for a in &mut self.atoms {
            a.1 *= factor;
        }
        for v in &mut self.density {
            *v *= factor;
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn grid(&self) -> Option<GridSpec> {
        self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn is_probability(&self) -> bool {
        self.is_probability
    }

    /// Weighted sum of `g` over atoms and the trapezoidal density table.
    /// All mass-like quantities (total mass, moments, integrals) share this
    /// summation path.
    pub fn weighted_sum(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        let mut total = 0.0;
        for &(p, m) in &self.atoms {
            total += m * g(p);
        }
        if let Some(grid) = self.grid {
            let h = grid.step();
            let n = grid.n;
            let mut acc = 0.0;
            for j in 0..n {
                let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                acc += w * self.density[j] * g(grid.node(j));
            }
            total += h * acc;
        }
        total
    }

    fn weighted_sum_complex(&self, mut g: impl FnMut(f64) -> Complex64) -> Complex64 {
        let mut total = Complex64::default();
        for &(p, m) in &self.atoms {
            total += m * g(p);
        }
        if let Some(grid) = self.grid {
            let h = grid.step();
            let n = grid.n;
            let mut acc = Complex64::default();
            for j in 0..n {
                let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                acc += w * self.density[j] * g(grid.node(j));
            }
            total += h * acc;
        }
        total
    }

    pub fn total_mass(&self) -> f64 {
        self.weighted_sum(|_| 1.0)
    }

    /// k-th raw moment.
    pub fn moment(&self, k: usize) -> Result<f64> {
        if k > MAX_MOMENT_ORDER {
            return Err(Error::OrderTooHigh(k, MAX_MOMENT_ORDER));
        }
        Ok(self.weighted_sum(|x| x.powi(k as i32)))
    }

    /// Integral of a test function against the measure.
    pub fn integrate(&self, f: &TestFunction) -> Result<Complex64> {
        if let TestFunction::BlackBox(bb) = f {
            let (lo, hi) = self.support();
            if lo < bb.lo - 1e-12 || hi > bb.hi + 1e-12 {
                return Err(Error::DomainMismatch { f_lo: bb.lo, f_hi: bb.hi, lo, hi });
            }
        }
        Ok(self.weighted_sum_complex(|x| f.eval(x)))
    }

    /// Convex hull of the support (atom positions and grid bounds).
    pub fn support(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(p, _) in &self.atoms {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        if let Some(g) = self.grid {
            lo = lo.min(g.lo);
            hi = hi.max(g.hi);
        }
        (lo, hi)
    }

    /// Cumulative distribution at `x` (atoms at `x` included).
    pub fn cdf(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &(p, m) in &self.atoms {
            if p <= x {
                acc += m;
            }
        }
        if let Some(grid) = self.grid {
            let h = grid.step();
            for j in 0..grid.n - 1 {
                let (x0, x1) = (grid.node(j), grid.node(j + 1));
                let (d0, d1) = (self.density[j], self.density[j + 1]);
                if x >= x1 {
                    acc += 0.5 * h * (d0 + d1);
                } else if x > x0 {
                    let s = x - x0;
                    acc += d0 * s + (d1 - d0) * s * s / (2.0 * h);
                    break;
                } else {
                    break;
                }
            }
        }
        acc
    }

    /// Draw `n` samples by inverse-CDF; deterministic for a given generator.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
        if !self.is_probability {
            return Err(Error::NotProbability(self.total_mass()));
        }
        let sampler = Sampler::new(self);
        Ok((0..n).map(|_| sampler.draw(rng.random::<f64>())).collect())
    }

    /// Quantiles of the density part at `k` equal-mass levels; the returned
    /// weights sum to the density mass. Atoms are not collapsed.
    pub fn density_equal_mass_nodes(&self, k: usize) -> Vec<(f64, f64)> {
        let grid = match self.grid {
            Some(g) => g,
            None => return Vec::new(),
        };
        let h = grid.step();
        let cell_mass: Vec<f64> = (0..grid.n - 1)
            .map(|j| 0.5 * h * (self.density[j] + self.density[j + 1]))
            .collect();
        let total: f64 = cell_mass.iter().sum();
        if total <= 0.0 {
            return Vec::new();
        }
        let w = total / k as f64;
        let mut nodes = Vec::with_capacity(k);
        let mut cell = 0usize;
        let mut below = 0.0;
        for i in 0..k {
            let target = (i as f64 + 0.5) * w;
            while cell + 1 < cell_mass.len() && below + cell_mass[cell] < target {
                below += cell_mass[cell];
                cell += 1;
            }
            let r = (target - below).clamp(0.0, cell_mass[cell]);
            let s = invert_cell_mass(self.density[cell], self.density[cell + 1], h, r);
            nodes.push((grid.node(cell) + s, w));
        }
        nodes
    }

    /// Weighted mixture of measures resampled onto a common grid. Component
    /// densities are linearly interpolated; atoms closer than `atom_tol`
    /// are merged mass-weighted.
    pub fn mixture(
        components: &[(f64, &DiscretizedMeasure)],
        grid: GridSpec,
        atom_tol: f64,
        probability: bool,
    ) -> Result<Self> {
        let mut density = vec![0.0; grid.n];
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for &(w, m) in components {
            for &(p, mass) in m.atoms() {
                atoms.push((p, w * mass));
            }
            if m.grid.is_some() {
                for (j, v) in density.iter_mut().enumerate() {
                    *v += w * m.density_at(grid.node(j));
                }
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (p, m) in atoms {
            match merged.last_mut() {
                Some(last) if (p - last.0).abs() <= atom_tol => {
                    let total = last.1 + m;
                    last.0 = (last.0 * last.1 + p * m) / total;
                    last.1 = total;
                }
                _ => merged.push((p, m)),
            }
        }
        Self::with_mass_tolerance(merged, Some((grid, density)), probability, 1e-3)
    }

    /// Density linearly interpolated at `x` (0 outside the table).
    pub fn density_at(&self, x: f64) -> f64 {
        let grid = match self.grid {
            Some(g) => g,
            None => return 0.0,
        };
        if x < grid.lo || x > grid.hi {
            return 0.0;
        }
        let h = grid.step();
        let j = (((x - grid.lo) / h).floor() as usize).min(grid.n - 2);
        let s = (x - grid.node(j)) / h;
        self.density[j] * (1.0 - s) + self.density[j + 1] * s
    }

    /// L1 distance: absolute density difference plus unmatched atom mass
    /// (atoms paired within `atom_tol`).
    pub fn l1_distance(&self, other: &Self, atom_tol: f64) -> f64 {
        let (lo_a, hi_a) = self.support();
        let (lo_b, hi_b) = other.support();
        let (lo, hi) = (lo_a.min(lo_b), hi_a.max(hi_b));
        let n = 4001;
        let h = (hi - lo) / (n - 1) as f64;
        let mut dist = 0.0;
        for j in 0..n {
            let x = lo + h * j as f64;
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            dist += w * h * (self.density_at(x) - other.density_at(x)).abs();
        }
        let mut other_atoms: Vec<(f64, f64)> = other.atoms.clone();
        for &(p, m) in &self.atoms {
            match other_atoms
                .iter_mut()
                .filter(|(q, _)| (p - q).abs() <= atom_tol)
                .min_by(|a, b| (a.0 - p).abs().total_cmp(&(b.0 - p).abs()))
            {
                Some(pair) => {
                    dist += (m - pair.1).abs();
                    pair.1 = f64::NAN; // consumed
                    other_atoms.retain(|(_, v)| !v.is_nan());
                }
                None => dist += m,
            }
        }
        dist += other_atoms.iter().map(|&(_, m)| m).sum::<f64>();
        dist
    }

    /// Serialize to the measure file schema.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(MeasureSchema {
            atoms: self.atoms.clone(),
            grid: self.grid,
            density: self.density.clone(),
        })
        .expect("schema is serializable")
    }

    /// Read the measure file schema. A measure whose mass is within 1e-6 of
    /// one is renormalized and flagged as a probability.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let schema: MeasureSchema = serde_json::from_value(value.clone())
            .map_err(|e| Error::Invalid(format!("measure schema: {e}")))?;
        let table = match schema.grid {
            Some(g) => {
                GridSpec::new(g.lo, g.hi, g.n)?;
                Some((g, schema.density))
            }
            None if schema.density.is_empty() => None,
            None => return Err(Error::Invalid("density given without a grid".into())),
        };
        let raw = Self::with_mass_tolerance(schema.atoms.clone(), table.clone(), false, 0.0)?;
        let probability = (raw.total_mass() - 1.0).abs() <= PROBABILITY_TOL;
        Self::with_mass_tolerance(schema.atoms, table, probability, PROBABILITY_TOL)
    }

    /// CSV export: `# atom pos mass` comment lines, then `x,density` rows.
    pub fn write_csv(&self, out: &mut impl IoWrite) -> std::io::Result<()> {
        for &(p, m) in &self.atoms {
            writeln!(out, "# atom {p} {m}")?;
        }
        writeln!(out, "x,density")?;
        if let Some(grid) = self.grid {
            for j in 0..grid.n {
                writeln!(out, "{},{}", grid.node(j), self.density[j])?;
            }
        }
        Ok(())
    }
}

/// Solve for the offset `s` in a grid cell such that the trapezoidal mass of
/// `[0, s]` equals `target` (density linear from `d0` to `d1` over width `h`).
fn invert_cell_mass(d0: f64, d1: f64, h: f64, target: f64) -> f64 {
    let slope = (d1 - d0) / h;
    let s = if slope.abs() * h <= 1e-12 * (d0 + d1).max(1e-300) {
        if d0 > 0.0 {
            target / d0
        } else {
            0.5 * h
        }
    } else {
        let disc = (d0 * d0 + 2.0 * slope * target).max(0.0);
        (disc.sqrt() - d0) / slope
    };
    s.clamp(0.0, h)
}

/// Precomputed inverse-CDF sampler over interleaved atoms and density cells.
struct Sampler {
    // (cumulative mass before segment, segment)
    segments: Vec<(f64, Segment)>,
    total: f64,
}

enum Segment {
    Atom { pos: f64, mass: f64 },
    Cell { x0: f64, d0: f64, d1: f64, h: f64, mass: f64 },
}

impl Segment {
    fn position_key(&self) -> f64 {
        match self {
            Segment::Atom { pos, .. } => *pos,
            Segment::Cell { x0, .. } => *x0,
        }
    }
    fn mass(&self) -> f64 {
        match self {
            Segment::Atom { mass, .. } | Segment::Cell { mass, .. } => *mass,
        }
    }
}

impl Sampler {
    fn new(m: &DiscretizedMeasure) -> Self {
        let mut segs: Vec<Segment> = Vec::new();
        for &(pos, mass) in m.atoms() {
            if mass > 0.0 {
                segs.push(Segment::Atom { pos, mass });
            }
        }
        if let Some(grid) = m.grid {
            let h = grid.step();
            for j in 0..grid.n - 1 {
                let (d0, d1) = (m.density[j], m.density[j + 1]);
                let mass = 0.5 * h * (d0 + d1);
                if mass > 0.0 {
                    segs.push(Segment::Cell { x0: grid.node(j), d0, d1, h, mass });
                }
            }
        }
        segs.sort_by(|a, b| a.position_key().total_cmp(&b.position_key()));
        let mut cum = 0.0;
        let segments = segs
            .into_iter()
            .map(|s| {
                let before = cum;
                cum += s.mass();
                (before, s)
            })
            .collect();
        Sampler { segments, total: cum }
    }

    fn draw(&self, u: f64) -> f64 {
        let target = u * self.total;
        let idx = self
            .segments
            .partition_point(|(before, _)| *before <= target)
            .saturating_sub(1);
        let (before, seg) = &self.segments[idx];
        match seg {
            Segment::Atom { pos, .. } => *pos,
            Segment::Cell { x0, d0, d1, h, mass } => {
                let r = (target - before).clamp(0.0, *mass);
                x0 + invert_cell_mass(*d0, *d1, *h, r)
            }
        }
    }
}

type RealToComplex = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Black-box C^2 function on a stated interval; derivative evaluators are
/// optional and requested only by the generator operations.
#[derive(Clone)]
pub struct BlackBoxFn {
    pub f: RealToComplex,
    pub d1: Option<RealToComplex>,
    pub d2: Option<RealToComplex>,
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Debug for BlackBoxFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBoxFn")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("d1", &self.d1.is_some())
            .field("d2", &self.d2.is_some())
            .finish()
    }
}

/// A test function: polynomial, resolvent x -> 1/(z - x), or black box.
#[derive(Debug, Clone)]
pub enum TestFunction {
    /// Coefficients in ascending degree order.
    Polynomial(Vec<f64>),
    /// Pole z with Im z != 0.
    Resolvent(Complex64),
    BlackBox(BlackBoxFn),
}

impl TestFunction {
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        TestFunction::Polynomial(coeffs)
    }

    /// The monomial x^k.
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        TestFunction::Polynomial(c)
    }

    pub fn constant(c: f64) -> Self {
        TestFunction::Polynomial(vec![c])
    }

    pub fn resolvent(pole: Complex64) -> Result<Self> {
        if pole.im == 0.0 {
            return Err(Error::Invalid("resolvent pole must be off the real axis".into()));
        }
        Ok(TestFunction::Resolvent(pole))
    }

    /// Black box from real-valued closures.
    pub fn black_box_real<F, G, H>(lo: f64, hi: f64, f: F, d1: Option<G>, d2: Option<H>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let lift = |g: Box<dyn Fn(f64) -> f64 + Send + Sync>| -> RealToComplex {
            Arc::new(move |x| Complex64::new(g(x), 0.0))
        };
        TestFunction::BlackBox(BlackBoxFn {
            f: lift(Box::new(f)),
            d1: d1.map(|g| lift(Box::new(g))),
            d2: d2.map(|g| lift(Box::new(g))),
            lo,
            hi,
        })
    }

    /// Black box from complex-valued closures.
    pub fn black_box_complex(
        lo: f64,
        hi: f64,
        f: RealToComplex,
        d1: Option<RealToComplex>,
        d2: Option<RealToComplex>,
    ) -> Self {
        TestFunction::BlackBox(BlackBoxFn { f, d1, d2, lo, hi })
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            TestFunction::Polynomial(c) => Complex64::new(horner(c, x), 0.0),
            TestFunction::Resolvent(z) => 1.0 / (z - x),
            TestFunction::BlackBox(bb) => (bb.f)(x),
        }
    }

    pub fn d1(&self, x: f64) -> Result<Complex64> {
        match self {
            TestFunction::Polynomial(c) => Ok(Complex64::new(horner(&derive(c), x), 0.0)),
            TestFunction::Resolvent(z) => {
                let r = 1.0 / (z - x);
                Ok(r * r)
            }
            TestFunction::BlackBox(bb) => match &bb.d1 {
                Some(g) => Ok(g(x)),
                None => Err(Error::DerivativeUnavailable(1)),
            },
        }
    }

    pub fn d2(&self, x: f64) -> Result<Complex64> {
        match self {
            TestFunction::Polynomial(c) => Ok(Complex64::new(horner(&derive(&derive(c)), x), 0.0)),
            TestFunction::Resolvent(z) => {
                let r = 1.0 / (z - x);
                Ok(2.0 * r * r * r)
            }
            TestFunction::BlackBox(bb) => match &bb.d2 {
                Some(g) => Ok(g(x)),
                None => Err(Error::DerivativeUnavailable(2)),
            },
        }
    }

    /// The adjoint f* (complex conjugate of values on the real line).
    pub fn adjoint(&self) -> Self {
        match self {
            TestFunction::Polynomial(c) => TestFunction::Polynomial(c.clone()),
            TestFunction::Resolvent(z) => TestFunction::Resolvent(z.conj()),
            TestFunction::BlackBox(bb) => {
                let f = bb.f.clone();
                let d1 = bb.d1.clone();
                let d2 = bb.d2.clone();
                TestFunction::BlackBox(BlackBoxFn {
                    f: Arc::new(move |x| f(x).conj()),
                    d1: d1.map(|g| -> RealToComplex { Arc::new(move |x| g(x).conj()) }),
                    d2: d2.map(|g| -> RealToComplex { Arc::new(move |x| g(x).conj()) }),
                    lo: bb.lo,
                    hi: bb.hi,
                })
            }
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn derive(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn point_mass_has_unit_mass() {
        let m = DiscretizedMeasure::point_mass(0.0);
        assert_eq!(m.total_mass(), 1.0);
        assert_eq!(m.moment(1).unwrap(), 0.0);
    }

    #[test]
    fn bernoulli_moments() {
        let m = DiscretizedMeasure::symmetric_bernoulli();
        assert!((m.moment(2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(m.moment(3).unwrap(), 0.0);
    }

    #[test]
    fn arcsine_table_mass_within_1e4() {
        let m = reference::arcsine_measure(1.0, 2001);
        // constructed without renormalization: the raw trapezoid mass is the check
        let raw = reference::arcsine_table_raw_mass(1.0, 2001);
        assert!((raw - 1.0).abs() <= 1e-4, "raw mass {raw}");
        assert!((m.total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn negative_mass_rejected() {
        assert!(matches!(
            DiscretizedMeasure::from_atoms(vec![(0.0, -0.1)], false),
            Err(Error::NegativeMass(_))
        ));
        assert!(matches!(
            DiscretizedMeasure::new(Vec::new(), None, false),
            Err(Error::EmptyMeasure)
        ));
    }

    #[test]
    fn moment_order_guard() {
        let m = DiscretizedMeasure::point_mass(2.0);
        assert!(matches!(m.moment(33), Err(Error::OrderTooHigh(33, _))));
    }

    #[test]
    fn moment_zero_equals_total_mass_exactly() {
        let m = reference::arcsine_measure(0.7, 801);
        assert_eq!(m.moment(0).unwrap(), m.total_mass());
    }

    // Independent oracle: substituting x = sqrt(2t) sin(theta) turns the
    // second arcsine moment into a smooth integral handled by Simpson.
    fn arcsine_m2_oracle(t: f64) -> f64 {
        let n = 20_000;
        let h = std::f64::consts::PI / n as f64;
        let g = |theta: f64| 2.0 * t * (theta.sin()).powi(2) / std::f64::consts::PI;
        let mut acc = g(-std::f64::consts::FRAC_PI_2) + g(std::f64::consts::FRAC_PI_2);
        for j in 1..n {
            let theta = -std::f64::consts::FRAC_PI_2 + h * j as f64;
            acc += if j % 2 == 1 { 4.0 } else { 2.0 } * g(theta);
        }
        acc * h / 3.0
    }

    #[test]
    fn arcsine_second_moment() {
        let oracle = arcsine_m2_oracle(1.0);
        assert!((oracle - 1.0).abs() < 1e-10, "oracle {oracle}");
        let m = reference::arcsine_measure(1.0, 2001);
        assert!((m.moment(2).unwrap() - oracle).abs() <= 1e-3);
    }

    #[test]
    fn integrate_examples() {
        let arcs = reference::arcsine_measure(0.5, 2001);
        let one = arcs.integrate(&TestFunction::constant(1.0)).unwrap();
        assert!((one.re - 1.0).abs() <= 1e-6 && one.im == 0.0);
        let x2 = arcs.integrate(&TestFunction::monomial(2)).unwrap();
        let oracle = arcsine_m2_oracle(0.5);
        assert!((x2.re - oracle).abs() <= 1e-3);

        let delta = DiscretizedMeasure::point_mass(0.0);
        let r = delta
            .integrate(&TestFunction::resolvent(Complex64::new(0.0, 2.0)).unwrap())
            .unwrap();
        assert!((r.re - 0.0).abs() < 1e-15 && (r.im + 0.5).abs() < 1e-15);
    }

    #[test]
    fn black_box_domain_check() {
        let m = DiscretizedMeasure::point_mass(3.0);
        let f = TestFunction::black_box_real(
            -1.0,
            1.0,
            |x| x,
            None::<fn(f64) -> f64>,
            None::<fn(f64) -> f64>,
        );
        assert!(matches!(m.integrate(&f), Err(Error::DomainMismatch { .. })));
    }

    #[test]
    fn sampling_point_mass() {
        let m = DiscretizedMeasure::point_mass(1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(m.sample(5, &mut rng).unwrap(), vec![1.5; 5]);
    }

    #[test]
    fn sampling_requires_probability() {
        let m = DiscretizedMeasure::from_atoms(vec![(0.0, 0.5)], false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(matches!(m.sample(1, &mut rng), Err(Error::NotProbability(_))));
    }

    #[test]
    fn sampling_statistics() {
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(42);

        let arcs = reference::arcsine_measure(1.0, 2001);
        let xs = arcs.sample(n, &mut rng).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        // sigma^2 = t = 1
        assert!(mean.abs() <= 3.0 / (n as f64).sqrt(), "mean {mean}");

        let bern = DiscretizedMeasure::symmetric_bernoulli();
        let ys = bern.sample(n, &mut rng).unwrap();
        let frac = ys.iter().filter(|&&y| y > 0.0).count() as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 3.0 / (2.0 * (n as f64).sqrt()), "frac {frac}");
    }

    fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn sampling_kolmogorov_distance() {
        let n = 100_000usize;
        let bound = 2.0 / (n as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(3);

        let arcs = reference::arcsine_measure(1.0, 2001);
        let d = ks_distance(arcs.sample(n, &mut rng).unwrap(), |x| arcs.cdf(x));
        assert!(d <= bound, "arcsine KS {d}");

        let bern = DiscretizedMeasure::symmetric_bernoulli();
        let d = ks_distance(bern.sample(n, &mut rng).unwrap(), |x| bern.cdf(x));
        assert!(d <= bound, "bernoulli KS {d}");

        let delta = DiscretizedMeasure::point_mass(0.25);
        let d = ks_distance(delta.sample(n, &mut rng).unwrap(), |x| delta.cdf(x));
        assert!(d <= bound, "point mass KS {d}");
    }

    #[test]
    fn symmetric_measures_have_vanishing_odd_moments() {
        let m = reference::arcsine_measure(1.0, 2001);
        let scale = 2.0f64.sqrt();
        for k in [1usize, 3, 5, 7] {
            let mk = m.moment(k).unwrap();
            assert!(mk.abs() <= 1e-9 * scale.powi(k as i32), "m{k} = {mk}");
        }
    }

    #[test]
    fn json_round_trip() {
        let m = reference::arcsine_measure(1.0, 401);
        let v = m.to_json();
        let back = DiscretizedMeasure::from_json(&v).unwrap();
        assert!(back.is_probability());
        assert!(m.l1_distance(&back, 1e-9) < 1e-12);
    }

    #[test]
    fn csv_export_has_atom_comments() {
        let m = DiscretizedMeasure::from_atoms(vec![(0.5, 1.0)], true).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# atom 0.5 1\n"));
        assert!(text.contains("x,density"));
    }

    #[test]
    fn equal_mass_nodes_preserve_mean() {
        let m = reference::arcsine_measure(1.0, 2001);
        let nodes = m.density_equal_mass_nodes(512);
        let mass: f64 = nodes.iter().map(|&(_, w)| w).sum();
        assert!((mass - 1.0).abs() < 1e-9);
        let mean: f64 = nodes.iter().map(|&(x, w)| x * w).sum();
        assert!(mean.abs() < 1e-3);
    }
}
