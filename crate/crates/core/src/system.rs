//! Finite metric dynamical systems.
//!
//! A [`FiniteMetricSystem`] is a finite point set with an exact rational
//! metric and a permutation acting on it: the desk-scale stand-in for a
//! compact metric space with a homeomorphism. All "for all times"
//! quantifiers become finite because the pair sequence
//! `n -> (f^n x, f^n y)` is periodic with period dividing
//! `lcm(period(x), period(y))`.
//!
//! Systems are immutable after construction and every operation on them is a
//! pure function, so values can be shared freely across parallel workers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Cycle structure of a permutation: the finite substitute for the orbit
/// structure of a homeomorphism.
#[derive(Debug, Clone)]
pub struct OrbitIndex {
    /// Disjoint cycles, each listed in map order starting at its least element.
    pub cycles: Vec<Vec<usize>>,
    /// Length of the cycle through each point.
    pub period_of: Vec<u64>,
    /// lcm of all cycle lengths; `f^order` is the identity.
    pub order: u64,
}

impl OrbitIndex {
    fn build(map: &[usize]) -> Self {
        let n = map.len();
        let mut seen = vec![false; n];
        let mut cycles = Vec::new();
        let mut period_of = vec![0u64; n];
        let mut order = 1u64;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cycle.push(x);
                x = map[x];
            }
            let len = cycle.len() as u64;
            for &p in &cycle {
                period_of[p] = len;
            }
            order = num_integer::lcm(order, len);
            cycles.push(cycle);
        }
        OrbitIndex {
            cycles,
            period_of,
            order,
        }
    }
}

/// A finite point set, an exact rational metric and a permutation of the
/// points.
#[derive(Debug, Clone)]
pub struct FiniteMetricSystem {
    points: Vec<String>,
    metric: Vec<Vec<Rational>>,
    map: Vec<usize>,
    inverse: Vec<usize>,
    orbits: OrbitIndex,
    diameter: Rational,
}

/// On-disk form: `{"points": [...], "metric": [["0","1"],...], "map": [1,0]}`
/// with every metric entry a rational string (`"p/q"` or an integer string).
/// Entry `metric[i][j]` is the distance from `points[i]` to `points[j]`.
#[derive(Serialize, Deserialize)]
struct SystemFile {
    points: Vec<String>,
    metric: Vec<Vec<Rational>>,
    map: Vec<usize>,
}

impl FiniteMetricSystem {
    /// Builds and fully validates a system: metric symmetry, zero exactly on
    /// the diagonal, strict positivity off it, the triangle inequality, and
    /// bijectivity of the map.
    pub fn new(points: Vec<String>, metric: Vec<Vec<Rational>>, map: Vec<usize>) -> Result<Self> {
        let sys = Self::assemble(points, metric, map)?;
        sys.validate_triangle()?;
        Ok(sys)
    }

    /// Builds a system whose metric is valid by construction (weighted sums
    /// of validated metrics), skipping the cubic triangle-inequality scan.
    /// Symmetry, diagonal and positivity are still checked.
    pub(crate) fn new_unchecked_triangle(
        points: Vec<String>,
        metric: Vec<Vec<Rational>>,
        map: Vec<usize>,
    ) -> Result<Self> {
        Self::assemble(points, metric, map)
    }

    fn assemble(points: Vec<String>, metric: Vec<Vec<Rational>>, map: Vec<usize>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Parse("empty point set".into()));
        }
        {
            let mut sorted = points.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != n {
                return Err(Error::Parse("duplicate point identifiers".into()));
            }
        }
        if metric.len() != n || metric.iter().any(|row| row.len() != n) {
            return Err(Error::Metric(format!("metric matrix is not {n}x{n}")));
        }
        for i in 0..n {
            if !metric[i][i].is_zero() {
                return Err(Error::Metric(format!(
                    "d({p},{p}) = {v} must be 0",
                    p = points[i],
                    v = metric[i][i]
                )));
            }
            for j in 0..i {
                if metric[i][j] != metric[j][i] {
                    return Err(Error::Metric(format!(
                        "asymmetry: d({},{}) = {} but d({},{}) = {}",
                        points[i], points[j], metric[i][j], points[j], points[i], metric[j][i]
                    )));
                }
                if !metric[i][j].is_positive() {
                    return Err(Error::Metric(format!(
                        "d({},{}) = {} must be positive for distinct points",
                        points[i], points[j], metric[i][j]
                    )));
                }
            }
        }
        if map.len() != n {
            return Err(Error::Map(format!(
                "map has {} entries, expected {n}",
                map.len()
            )));
        }
        let mut hit = vec![false; n];
        for (i, &img) in map.iter().enumerate() {
            if img >= n {
                return Err(Error::Map(format!(
                    "map sends {} to out-of-range index {img}",
                    points[i]
                )));
            }
            if hit[img] {
                return Err(Error::Map(format!(
                    "map is not a permutation: index {img} ({}) hit twice",
                    points[img]
                )));
            }
            hit[img] = true;
        }
        let mut inverse = vec![0usize; n];
        for (i, &img) in map.iter().enumerate() {
            inverse[img] = i;
        }
        let orbits = OrbitIndex::build(&map);
        let diameter = metric
            .iter()
            .flatten()
            .max()
            .cloned()
            .unwrap_or_else(Rational::zero);
        Ok(FiniteMetricSystem {
            points,
            metric,
            map,
            inverse,
            orbits,
            diameter,
        })
    }

    fn validate_triangle(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                if j == i {
                    continue;
                }
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    let via = &self.metric[i][k] + &self.metric[k][j];
                    if self.metric[i][j] > via {
                        return Err(Error::Metric(format!(
                            "triangle inequality fails on ({},{},{}): d = {} > {} + {}",
                            self.points[i],
                            self.points[k],
                            self.points[j],
                            self.metric[i][j],
                            self.metric[i][k],
                            self.metric[k][j]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Full validation including the triangle inequality; used by tests on
    /// systems built through the unchecked constructor.
    pub fn validate(&self) -> Result<()> {
        self.validate_triangle()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn point_name(&self, i: usize) -> &str {
        &self.points[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p == name)
    }

    pub fn dist(&self, i: usize, j: usize) -> &Rational {
        &self.metric[i][j]
    }

    pub fn metric(&self) -> &[Vec<Rational>] {
        &self.metric
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn apply_inv(&self, i: usize) -> usize {
        self.inverse[i]
    }

    /// `f^k(i)` for any integer exponent, reduced modulo the cycle length.
    pub fn apply_pow(&self, i: usize, k: i64) -> usize {
        let p = self.orbits.period_of[i] as i64;
        let mut k = k.rem_euclid(p);
        let mut x = i;
        while k > 0 {
            x = self.map[x];
            k -= 1;
        }
        x
    }

    pub fn orbits(&self) -> &OrbitIndex {
        &self.orbits
    }

    pub fn order(&self) -> u64 {
        self.orbits.order
    }

    pub fn period_of(&self, i: usize) -> u64 {
        self.orbits.period_of[i]
    }

    /// Largest metric entry.
    pub fn diameter(&self) -> &Rational {
        &self.diameter
    }

    /// All distinct metric values, sorted ascending (always contains 0).
    pub fn metric_values(&self) -> Vec<Rational> {
        let mut vals: Vec<Rational> = self.metric.iter().flatten().cloned().collect();
        vals.sort();
        vals.dedup();
        vals
    }

    /// Orbit sup distance `D(x,y) = max_n d(f^n x, f^n y)`, the supremum over
    /// all integer times, computed over one period of the pair sequence.
    pub fn orbit_sup_distance(&self, x: usize, y: usize) -> Rational {
        let period = num_integer::lcm(self.period_of(x), self.period_of(y));
        let mut best = self.metric[x][y].clone();
        let (mut a, mut b) = (x, y);
        for _ in 1..period {
            a = self.map[a];
            b = self.map[b];
            if self.metric[a][b] > best {
                best = self.metric[a][b].clone();
            }
        }
        best
    }

    /// Full matrix of orbit sup distances.
    pub fn orbit_sup_matrix(&self) -> Vec<Vec<Rational>> {
        let n = self.len();
        let rows: Vec<Vec<Rational>> = crate::par::map_indices(n, |x| {
            (0..n).map(|y| self.orbit_sup_distance(x, y)).collect()
        });
        rows
    }

    /// Distinct orbit sup distance values, sorted ascending.
    pub fn orbit_sup_values(&self) -> Vec<Rational> {
        let mut vals: Vec<Rational> = Vec::new();
        for x in 0..self.len() {
            for y in x..self.len() {
                vals.push(self.orbit_sup_distance(x, y));
            }
        }
        vals.sort();
        vals.dedup();
        vals
    }

    /// Least orbit sup distance over distinct pairs: the system is
    /// `alpha`-expansive exactly for `alpha` below this value. `None` for a
    /// one-point system (expansive at every threshold).
    pub fn expansivity_sup(&self) -> Option<Rational> {
        let n = self.len();
        let mut best: Option<Rational> = None;
        for x in 0..n {
            for y in (x + 1)..n {
                let d = self.orbit_sup_distance(x, y);
                if best.as_ref().is_none_or(|b| d < *b) {
                    best = Some(d);
                }
            }
        }
        best
    }

    /// `C0` distance to another permutation of the same point set:
    /// `max_x d(f x, g x)`.
    pub fn c0_distance(&self, g: &[usize]) -> Result<Rational> {
        let n = self.len();
        if g.len() != n {
            return Err(Error::SizeMismatch(format!(
                "permutation has {} entries, system has {n} points",
                g.len()
            )));
        }
        let mut hit = vec![false; n];
        for &img in g {
            if img >= n || hit[img] {
                return Err(Error::Map("g is not a permutation of the point set".into()));
            }
            hit[img] = true;
        }
        Ok((0..n)
            .map(|x| self.metric[self.map[x]][g[x]].clone())
            .max()
            .unwrap())
    }

    /// Same point set and metric, different permutation.
    pub fn with_map(&self, map: Vec<usize>) -> Result<Self> {
        Self::new_unchecked_triangle(self.points.clone(), self.metric.clone(), map)
    }

    /// Same point set and permutation, different metric. The new metric is
    /// fully validated.
    pub fn with_metric(&self, metric: Vec<Vec<Rational>>) -> Result<Self> {
        Self::new(self.points.clone(), metric, self.map.clone())
    }

    /// Parses and validates a system from the JSON file format.
    pub fn from_json(source: &str) -> Result<Self> {
        let file: SystemFile =
            serde_json::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(file.points, file.metric, file.map)
    }

    /// Serializes to the JSON file format.
    pub fn to_json(&self) -> String {
        let file = SystemFile {
            points: self.points.clone(),
            metric: self.metric.clone(),
            map: self.map.clone(),
        };
        serde_json::to_string_pretty(&file).expect("system serialization cannot fail")
    }
}

/// Loads a system from file contents, validating every invariant.
pub fn load_system(source: &str) -> Result<FiniteMetricSystem> {
    FiniteMetricSystem::from_json(source)
}

/// Weighted product of two systems: points are pairs, the metric is
/// `w1*d1 + w2*d2` on components and the map acts componentwise.
pub fn product_system(
    sys1: &FiniteMetricSystem,
    sys2: &FiniteMetricSystem,
    w1: &Rational,
    w2: &Rational,
) -> Result<FiniteMetricSystem> {
    if !w1.is_positive() || !w2.is_positive() {
        return Err(Error::BadParameters(format!(
            "product weights must be positive, got {w1} and {w2}"
        )));
    }
    let (n1, n2) = (sys1.len(), sys2.len());
    let n = n1 * n2;
    let pair = |a: usize, b: usize| a * n2 + b;
    let mut points = Vec::with_capacity(n);
    let mut map = vec![0usize; n];
    for a in 0..n1 {
        for b in 0..n2 {
            points.push(format!("({},{})", sys1.point_name(a), sys2.point_name(b)));
            map[pair(a, b)] = pair(sys1.apply(a), sys2.apply(b));
        }
    }
    let mut metric = vec![vec![Rational::zero(); n]; n];
    for a in 0..n1 {
        for b in 0..n2 {
            for c in 0..n1 {
                for e in 0..n2 {
                    metric[pair(a, b)][pair(c, e)] = w1 * sys1.dist(a, c) + w2 * sys2.dist(b, e);
                }
            }
        }
    }
    // Componentwise weighted sums of metrics satisfy the triangle inequality.
    FiniteMetricSystem::new_unchecked_triangle(points, metric, map)
}
