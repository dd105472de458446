//! Hyperparameter configuration spaces: sampling distributions, grid
//! enumeration, and density evaluation.
//!
//! A [`SearchSpace`] is an ordered set of named dimensions, each carrying a
//! [`Distribution`]. Spaces are validated at construction, so sampling and
//! enumeration never fail afterwards. Quantized variants only ever produce
//! values of the form `round(x / q) * q`.

use std::f64::consts::PI;
use std::path::Path;

use indexmap::IndexMap;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};

use crate::error::{Error, Result};

/// Tolerance used when checking that a value is a multiple of `q`.
pub const QUANTIZE_TOL: f64 = 1e-9;

/// One concrete value for a dimension: a real number or a categorical label.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ParamValue {
    Real(f64),
    Label(String),
}

impl ParamValue {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            ParamValue::Real(v) => Some(*v),
            ParamValue::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            ParamValue::Real(_) => None,
            ParamValue::Label(s) => Some(s),
        }
    }
}

impl std::fmt::Display for ParamValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Label(s) => write!(f, "{s}"),
        }
    }
}

/// A sampling distribution for one dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    /// Flat density on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// `exp(U)` where `U` is uniform on `[ln lo, ln hi]`; requires `lo > 0`.
    LogUniform { lo: f64, hi: f64 },
    /// Uniform draw on `[lo, hi]` snapped to the nearest multiple of `q`.
    QUniform { lo: f64, hi: f64, q: f64 },
    /// Log-uniform draw snapped to the nearest multiple of `q`.
    QLogUniform { lo: f64, hi: f64, q: f64 },
    /// Gaussian with mean `mu` and standard deviation `sigma`; untruncated.
    Normal { mu: f64, sigma: f64 },
    /// Gaussian draw snapped to the nearest multiple of `q`; untruncated.
    QNormal { mu: f64, sigma: f64, q: f64 },
    /// Uniform pick among distinct labels.
    Choice { options: Vec<String> },
}

/// Snap `x` to the nearest multiple of `q`.
pub fn quantize(x: f64, q: f64) -> f64 {
    (x / q).round() * q
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

impl Distribution {
    /// Check the variant's parameter constraints.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match self {
            Distribution::Uniform { lo, hi } => {
                if !(lo < hi) {
                    return bad(format!("uniform requires lo < hi, got [{lo}, {hi}]"));
                }
            }
            Distribution::LogUniform { lo, hi } => {
                if !(*lo > 0.0 && lo < hi) {
                    return bad(format!("loguniform requires 0 < lo < hi, got [{lo}, {hi}]"));
                }
            }
            Distribution::QUniform { lo, hi, q } => {
                if !(lo < hi) {
                    return bad(format!("quniform requires lo < hi, got [{lo}, {hi}]"));
                }
                if !(*q > 0.0) {
                    return bad(format!("quniform requires q > 0, got {q}"));
                }
            }
            Distribution::QLogUniform { lo, hi, q } => {
                if !(*lo > 0.0 && lo < hi) {
                    return bad(format!("qloguniform requires 0 < lo < hi, got [{lo}, {hi}]"));
                }
                if !(*q > 0.0) {
                    return bad(format!("qloguniform requires q > 0, got {q}"));
                }
            }
            Distribution::Normal { sigma, .. } => {
                if !(*sigma > 0.0) {
                    return bad(format!("normal requires sigma > 0, got {sigma}"));
                }
            }
            Distribution::QNormal { sigma, q, .. } => {
                if !(*sigma > 0.0) {
                    return bad(format!("qnormal requires sigma > 0, got {sigma}"));
                }
                if !(*q > 0.0) {
                    return bad(format!("qnormal requires q > 0, got {q}"));
                }
            }
            Distribution::Choice { options } => {
                if options.is_empty() {
                    return bad("choice requires at least one option".into());
                }
                let mut seen = std::collections::HashSet::new();
                for o in options {
                    if !seen.insert(o) {
                        return bad(format!("choice options must be distinct, `{o}` repeats"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Draw one value.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamValue {
        match self {
            Distribution::Uniform { lo, hi } => {
                ParamValue::Real(lo + rng.random::<f64>() * (hi - lo))
            }
            Distribution::LogUniform { lo, hi } => {
                let u = lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln());
                ParamValue::Real(u.exp())
            }
            Distribution::QUniform { lo, hi, q } => {
                let x = lo + rng.random::<f64>() * (hi - lo);
                ParamValue::Real(quantize(x, *q))
            }
            Distribution::QLogUniform { lo, hi, q } => {
                let u = lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln());
                ParamValue::Real(quantize(u.exp(), *q))
            }
            Distribution::Normal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                ParamValue::Real(mu + sigma * z)
            }
            Distribution::QNormal { mu, sigma, q } => {
                let z: f64 = rng.sample(StandardNormal);
                ParamValue::Real(quantize(mu + sigma * z, *q))
            }
            Distribution::Choice { options } => {
                let i = rng.random_range(0..options.len());
                ParamValue::Label(options[i].clone())
            }
        }
    }

    /// Whether `value` lies in this distribution's support.
    pub fn contains(&self, value: &ParamValue) -> bool {
        match (self, value) {
            (Distribution::Uniform { lo, hi }, ParamValue::Real(x))
            | (Distribution::LogUniform { lo, hi }, ParamValue::Real(x)) => {
                x.is_finite() && *lo <= *x && *x <= *hi
            }
            (Distribution::QUniform { lo, hi, q }, ParamValue::Real(x))
            | (Distribution::QLogUniform { lo, hi, q }, ParamValue::Real(x)) => {
                if !x.is_finite() || (x - quantize(*x, *q)).abs() > QUANTIZE_TOL {
                    return false;
                }
                let k = (x / q).round() as i64;
                let (k_min, k_max) = quantized_bounds(*lo, *hi, *q);
                k_min <= k && k <= k_max
            }
            (Distribution::Normal { .. }, ParamValue::Real(x)) => x.is_finite(),
            (Distribution::QNormal { q, .. }, ParamValue::Real(x)) => {
                x.is_finite() && (x - quantize(*x, *q)).abs() <= QUANTIZE_TOL
            }
            (Distribution::Choice { options }, ParamValue::Label(s)) => {
                options.iter().any(|o| o == s)
            }
            _ => false,
        }
    }

    /// Natural log of the density (continuous variants) or probability mass
    /// (quantized and categorical variants). Returns `-inf` outside the
    /// support.
    pub fn log_density(&self, value: &ParamValue) -> f64 {
        if !self.contains(value) {
            return f64::NEG_INFINITY;
        }
        match (self, value) {
            (Distribution::Uniform { lo, hi }, ParamValue::Real(_)) => -(hi - lo).ln(),
            (Distribution::LogUniform { lo, hi }, ParamValue::Real(x)) => {
                -x.ln() - (hi.ln() - lo.ln()).ln()
            }
            (Distribution::QUniform { lo, hi, q }, ParamValue::Real(x)) => {
                let center = quantize(*x, *q);
                let a = (center - q / 2.0).max(*lo);
                let b = (center + q / 2.0).min(*hi);
                ((b - a).max(0.0) / (hi - lo)).ln()
            }
            (Distribution::QLogUniform { lo, hi, q }, ParamValue::Real(x)) => {
                let center = quantize(*x, *q);
                let a = (center - q / 2.0).max(*lo);
                let b = (center + q / 2.0).min(*hi);
                if b <= a {
                    return f64::NEG_INFINITY;
                }
                ((b.ln() - a.ln()) / (hi.ln() - lo.ln())).ln()
            }
            (Distribution::Normal { mu, sigma }, ParamValue::Real(x)) => {
                let z = (x - mu) / sigma;
                -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
            }
            (Distribution::QNormal { mu, sigma, q }, ParamValue::Real(x)) => {
                let center = quantize(*x, *q);
                let n = NormalDist::new(*mu, *sigma).expect("sigma validated > 0");
                let mass = n.cdf(center + q / 2.0) - n.cdf(center - q / 2.0);
                mass.ln()
            }
            (Distribution::Choice { options }, ParamValue::Label(_)) => {
                -(options.len() as f64).ln()
            }
            _ => f64::NEG_INFINITY,
        }
    }

    /// Values this dimension contributes to a grid.
    ///
    /// Continuous variants are spaced linearly (geometrically for log
    /// variants) with `resolution` points between the bounds, inclusive.
    /// Unbounded Gaussians use `mu ± 2 sigma` as grid bounds. Quantized
    /// variants enumerate every multiple of `q` in range and `Choice` lists
    /// all options; both ignore `resolution`.
    pub fn grid_values(&self, resolution: usize) -> Result<Vec<ParamValue>> {
        if resolution == 0 {
            return Err(Error::InvalidArgument(
                "grid resolution must be at least 1".into(),
            ));
        }
        let vals = match self {
            // Clamp rounding drift so grid points always satisfy `contains`.
            Distribution::Uniform { lo, hi } => linspace(*lo, *hi, resolution)
                .into_iter()
                .map(|x| ParamValue::Real(x.clamp(*lo, *hi)))
                .collect(),
            Distribution::LogUniform { lo, hi } => linspace(lo.ln(), hi.ln(), resolution)
                .into_iter()
                .map(|u| ParamValue::Real(u.exp().clamp(*lo, *hi)))
                .collect(),
            Distribution::Normal { mu, sigma } => {
                linspace(mu - 2.0 * sigma, mu + 2.0 * sigma, resolution)
                    .into_iter()
                    .map(ParamValue::Real)
                    .collect()
            }
            Distribution::QUniform { lo, hi, q }
            | Distribution::QLogUniform { lo, hi, q } => {
                let (k_min, k_max) = quantized_bounds(*lo, *hi, *q);
                (k_min..=k_max)
                    .map(|k| ParamValue::Real(k as f64 * q))
                    .collect()
            }
            Distribution::QNormal { mu, sigma, q } => {
                let lo = mu - 2.0 * sigma;
                let hi = mu + 2.0 * sigma;
                let (k_min, k_max) = quantized_bounds(lo, hi, *q);
                (k_min..=k_max)
                    .map(|k| ParamValue::Real(k as f64 * q))
                    .collect()
            }
            Distribution::Choice { options } => options
                .iter()
                .map(|o| ParamValue::Label(o.clone()))
                .collect(),
        };
        Ok(vals)
    }
}

/// Index range of quantized support points: `{k*q : k_min <= k <= k_max}`.
fn quantized_bounds(lo: f64, hi: f64, q: f64) -> (i64, i64) {
    ((lo / q).round() as i64, (hi / q).round() as i64)
}

/// An ordered set of named dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    dims: IndexMap<String, Distribution>,
}

impl SearchSpace {
    /// Build a space from `(name, distribution)` pairs, validating every
    /// dimension. Names must be unique and non-empty; at least one dimension
    /// is required.
    pub fn new<I, S>(dims: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Distribution)>,
        S: Into<String>,
    {
        let mut map = IndexMap::new();
        for (name, dist) in dims {
            let name = name.into();
            if name.is_empty() {
                return Err(Error::InvalidArgument(
                    "dimension names must be non-empty".into(),
                ));
            }
            dist.validate()?;
            if map.insert(name.clone(), dist).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate dimension name `{name}`"
                )));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidArgument(
                "a search space needs at least one dimension".into(),
            ));
        }
        Ok(SearchSpace { dims: map })
    }

    pub fn dimensions(&self) -> &IndexMap<String, Distribution> {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Draw one assignment, each dimension independently, in dimension order.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamAssignment {
        let values = self
            .dims
            .iter()
            .map(|(name, dist)| (name.clone(), dist.sample(rng)))
            .collect();
        ParamAssignment { values }
    }

    /// Whether `assignment` has exactly this space's dimensions with every
    /// value in support.
    pub fn contains(&self, assignment: &ParamAssignment) -> bool {
        if assignment.values.len() != self.dims.len() {
            return false;
        }
        self.dims.iter().all(|(name, dist)| {
            assignment
                .values
                .get(name)
                .is_some_and(|v| dist.contains(v))
        })
    }

    /// Cartesian grid over all dimensions, first dimension varying slowest.
    ///
    /// `resolution` sets the point count for continuous dimensions; quantized
    /// dimensions enumerate all multiples of `q` in range and `Choice` all
    /// options, regardless of `resolution`.
    pub fn grid_points(&self, resolution: usize) -> Result<Vec<ParamAssignment>> {
        let per_dim: Vec<(String, Vec<ParamValue>)> = self
            .dims
            .iter()
            .map(|(name, dist)| Ok((name.clone(), dist.grid_values(resolution)?)))
            .collect::<Result<_>>()?;
        Ok(cartesian_product(&per_dim))
    }
}

/// Cartesian product of per-dimension value lists, in dimension order with
/// the last dimension varying fastest.
pub fn cartesian_product(per_dim: &[(String, Vec<ParamValue>)]) -> Vec<ParamAssignment> {
    let total: usize = per_dim.iter().map(|(_, vals)| vals.len()).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; per_dim.len()];
    for _ in 0..total {
        let values = per_dim
            .iter()
            .zip(&idx)
            .map(|((name, vals), &i)| (name.clone(), vals[i].clone()))
            .collect();
        out.push(ParamAssignment { values });
        for d in (0..per_dim.len()).rev() {
            idx[d] += 1;
            if idx[d] < per_dim[d].1.len() {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

/// One concrete configuration: dimension name to value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamAssignment {
    #[serde(flatten)]
    values: IndexMap<String, ParamValue>,
}

impl ParamAssignment {
    pub fn new<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = (S, ParamValue)>,
        S: Into<String>,
    {
        ParamAssignment {
            values: values.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.get(name)
    }

    pub fn real(&self, name: &str) -> Option<f64> {
        self.values.get(name).and_then(ParamValue::as_real)
    }

    pub fn label(&self, name: &str) -> Option<&str> {
        self.values.get(name).and_then(ParamValue::as_label)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ParamValue)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl std::fmt::Display for ParamAssignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .values
            .iter()
            .map(|(k, v)| match v {
                ParamValue::Real(x) => format!("{k}={x:.6}"),
                ParamValue::Label(s) => format!("{k}={s}"),
            })
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Debug, Deserialize)]
struct RawDimension {
    dist: Option<String>,
    lo: Option<f64>,
    hi: Option<f64>,
    q: Option<f64>,
    mu: Option<f64>,
    sigma: Option<f64>,
    options: Option<Vec<String>>,
}

/// Parse a JSON space file: an object mapping dimension name to a
/// `{"dist": ..., ...}` record. Errors name the dimension and field.
pub fn space_from_json(text: &str) -> Result<SearchSpace> {
    let raw: IndexMap<String, RawDimension> = serde_json::from_str(text)?;
    let mut dims = Vec::with_capacity(raw.len());
    for (name, spec) in raw {
        let dist = parse_dimension(&name, &spec)?;
        dims.push((name, dist));
    }
    SearchSpace::new(dims)
}

/// Read and parse a JSON space file from disk.
pub fn space_from_json_file(path: &Path) -> Result<SearchSpace> {
    let text = std::fs::read_to_string(path)?;
    space_from_json(&text)
}

fn parse_dimension(name: &str, spec: &RawDimension) -> Result<Distribution> {
    let err = |field: &str, reason: &str| Error::SpaceFile {
        dimension: name.to_string(),
        field: field.to_string(),
        reason: reason.to_string(),
    };
    let need = |field: &str, v: Option<f64>| v.ok_or_else(|| err(field, "required but missing"));
    let dist_tag = spec
        .dist
        .as_deref()
        .ok_or_else(|| err("dist", "required but missing"))?;
    let dist = match dist_tag {
        "uniform" => Distribution::Uniform {
            lo: need("lo", spec.lo)?,
            hi: need("hi", spec.hi)?,
        },
        "loguniform" => Distribution::LogUniform {
            lo: need("lo", spec.lo)?,
            hi: need("hi", spec.hi)?,
        },
        "quniform" => Distribution::QUniform {
            lo: need("lo", spec.lo)?,
            hi: need("hi", spec.hi)?,
            q: need("q", spec.q)?,
        },
        "qloguniform" => Distribution::QLogUniform {
            lo: need("lo", spec.lo)?,
            hi: need("hi", spec.hi)?,
            q: need("q", spec.q)?,
        },
        "normal" => Distribution::Normal {
            mu: need("mu", spec.mu)?,
            sigma: need("sigma", spec.sigma)?,
        },
        "qnormal" => Distribution::QNormal {
            mu: need("mu", spec.mu)?,
            sigma: need("sigma", spec.sigma)?,
            q: need("q", spec.q)?,
        },
        "choice" => Distribution::Choice {
            options: spec
                .options
                .clone()
                .ok_or_else(|| err("options", "required but missing"))?,
        },
        other => {
            return Err(err(
                "dist",
                &format!(
                    "unknown distribution `{other}` (expected uniform, loguniform, quniform, \
                     qloguniform, normal, qnormal, or choice)"
                ),
            ))
        }
    };
    dist.validate().map_err(|e| Error::SpaceFile {
        dimension: name.to_string(),
        field: "dist".to_string(),
        reason: e.to_string(),
    })?;
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn uniform_sample_stays_in_bounds() {
        let d = Distribution::Uniform { lo: 0.0, hi: 1.0 };
        let mut r = rng(7);
        for _ in 0..1000 {
            let v = d.sample(&mut r).as_real().unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn quniform_sample_is_integer_valued() {
        let d = Distribution::QUniform {
            lo: 2.0,
            hi: 10.0,
            q: 1.0,
        };
        let mut r = rng(7);
        for _ in 0..1000 {
            let v = d.sample(&mut r).as_real().unwrap();
            assert_eq!(v, v.round());
            assert!((2.0..=10.0).contains(&v));
        }
    }

    #[test]
    fn single_option_choice_always_picked() {
        let d = Distribution::Choice {
            options: vec!["a".into()],
        };
        let mut r = rng(0);
        for _ in 0..10 {
            assert_eq!(d.sample(&mut r).as_label(), Some("a"));
        }
    }

    #[test]
    fn identical_seeds_give_identical_streams() {
        let space = SearchSpace::new(vec![
            ("x", Distribution::Uniform { lo: -1.0, hi: 3.0 }),
            (
                "n",
                Distribution::QLogUniform {
                    lo: 1.0,
                    hi: 100.0,
                    q: 2.0,
                },
            ),
            ("z", Distribution::Normal { mu: 0.0, sigma: 2.0 }),
            (
                "c",
                Distribution::Choice {
                    options: vec!["a".into(), "b".into(), "c".into()],
                },
            ),
        ])
        .unwrap();
        let mut r1 = rng(42);
        let mut r2 = rng(42);
        for _ in 0..50 {
            assert_eq!(space.sample(&mut r1), space.sample(&mut r2));
        }
    }

    #[test]
    fn grid_cardinality_is_product_of_counts() {
        let space = SearchSpace::new(vec![
            ("a", Distribution::Uniform { lo: 0.0, hi: 1.0 }),
            (
                "b",
                Distribution::Choice {
                    options: vec!["x".into(), "y".into(), "z".into()],
                },
            ),
        ])
        .unwrap();
        let pts = space.grid_points(2).unwrap();
        assert_eq!(pts.len(), 6);
        // First dimension varies slowest.
        assert_eq!(pts[0].real("a"), Some(0.0));
        assert_eq!(pts[0].label("b"), Some("x"));
        assert_eq!(pts[2].real("a"), Some(0.0));
        assert_eq!(pts[2].label("b"), Some("z"));
        assert_eq!(pts[3].real("a"), Some(1.0));
    }

    #[test]
    fn uniform_grid_is_linearly_spaced() {
        let d = Distribution::Uniform { lo: 0.0, hi: 1.0 };
        let vals: Vec<f64> = d
            .grid_values(3)
            .unwrap()
            .iter()
            .map(|v| v.as_real().unwrap())
            .collect();
        assert_eq!(vals, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn quantized_grid_enumerates_all_multiples() {
        let d = Distribution::QUniform {
            lo: 1.0,
            hi: 3.0,
            q: 1.0,
        };
        for resolution in [1, 2, 7] {
            let vals: Vec<f64> = d
                .grid_values(resolution)
                .unwrap()
                .iter()
                .map(|v| v.as_real().unwrap())
                .collect();
            assert_eq!(vals, vec![1.0, 2.0, 3.0]);
        }
    }

    #[test]
    fn loguniform_grid_is_geometric() {
        let d = Distribution::LogUniform { lo: 1.0, hi: 100.0 };
        let vals: Vec<f64> = d
            .grid_values(3)
            .unwrap()
            .iter()
            .map(|v| v.as_real().unwrap())
            .collect();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 10.0).abs() < 1e-9);
        assert!((vals[2] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn zero_resolution_is_rejected() {
        let d = Distribution::Uniform { lo: 0.0, hi: 1.0 };
        assert!(matches!(
            d.grid_values(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn log_density_flat_uniform() {
        let d = Distribution::Uniform { lo: 0.0, hi: 2.0 };
        let got = d.log_density(&ParamValue::Real(1.0));
        assert!((got - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_density_choice_uniform_mass() {
        let d = Distribution::Choice {
            options: vec!["a".into(), "b".into(), "c".into(), "d".into()],
        };
        let got = d.log_density(&ParamValue::Label("b".into()));
        assert!((got - 0.25f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_density_standard_normal_at_mode() {
        // Density at the mode of N(0,1) is 1/sqrt(2*pi); the normalization
        // oracle below confirms the density integrates to one.
        let d = Distribution::Normal { mu: 0.0, sigma: 1.0 };
        let got = d.log_density(&ParamValue::Real(0.0));
        let expected = -(0.5 * (2.0 * PI).ln());
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn out_of_support_density_is_neg_infinity() {
        let d = Distribution::Uniform { lo: 0.0, hi: 1.0 };
        assert_eq!(d.log_density(&ParamValue::Real(1.5)), f64::NEG_INFINITY);
        let q = Distribution::QUniform {
            lo: 0.0,
            hi: 10.0,
            q: 1.0,
        };
        assert_eq!(q.log_density(&ParamValue::Real(2.5)), f64::NEG_INFINITY);
    }

    /// Trapezoid integral of `exp(log_density)` over `[a, b]`.
    fn integrate_density(d: &Distribution, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let f = |x: f64| d.log_density(&ParamValue::Real(x)).exp();
        let mut acc = 0.5 * (f(a) + f(b));
        for i in 1..n {
            acc += f(a + h * i as f64);
        }
        acc * h
    }

    #[test]
    fn continuous_densities_integrate_to_one() {
        let cases = vec![
            (Distribution::Uniform { lo: -1.0, hi: 4.0 }, -1.0, 4.0),
            (Distribution::LogUniform { lo: 0.01, hi: 50.0 }, 0.01, 50.0),
            (Distribution::Normal { mu: 1.5, sigma: 0.7 }, -6.0, 9.0),
        ];
        for (d, a, b) in cases {
            let integral = integrate_density(&d, a, b, 200_000);
            assert!(
                (integral - 1.0).abs() < 1e-3,
                "{d:?} integrated to {integral}"
            );
        }
    }

    #[test]
    fn quantized_masses_sum_to_one() {
        let cases = vec![
            Distribution::QUniform {
                lo: 0.3,
                hi: 7.9,
                q: 1.0,
            },
            Distribution::QUniform {
                lo: -2.0,
                hi: 2.0,
                q: 0.25,
            },
            Distribution::QLogUniform {
                lo: 1.0,
                hi: 300.0,
                q: 50.0,
            },
        ];
        for d in cases {
            let total: f64 = d
                .grid_values(1)
                .unwrap()
                .iter()
                .map(|v| d.log_density(v).exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "{d:?} mass summed to {total}");
        }
        // QNormal support is unbounded; sum over +/- 10 sigma.
        let d = Distribution::QNormal {
            mu: 3.0,
            sigma: 2.0,
            q: 0.5,
        };
        let total: f64 = (-40..=92)
            .map(|k| d.log_density(&ParamValue::Real(k as f64 * 0.5)).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-6, "qnormal mass summed to {total}");
    }

    #[test]
    fn invalid_distributions_rejected() {
        assert!(Distribution::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(Distribution::LogUniform { lo: 0.0, hi: 1.0 }.validate().is_err());
        assert!(Distribution::QUniform {
            lo: 0.0,
            hi: 1.0,
            q: 0.0
        }
        .validate()
        .is_err());
        assert!(Distribution::Normal { mu: 0.0, sigma: 0.0 }.validate().is_err());
        assert!(Distribution::Choice { options: vec![] }.validate().is_err());
        assert!(Distribution::Choice {
            options: vec!["a".into(), "a".into()]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn space_rejects_duplicates_and_empty() {
        assert!(SearchSpace::new(vec![
            ("x", Distribution::Uniform { lo: 0.0, hi: 1.0 }),
            ("x", Distribution::Uniform { lo: 0.0, hi: 2.0 }),
        ])
        .is_err());
        let empty: Vec<(String, Distribution)> = vec![];
        assert!(SearchSpace::new(empty).is_err());
    }

    #[test]
    fn json_space_round_trip() {
        let text = r#"{
            "eta": {"dist": "loguniform", "lo": 0.005, "hi": 0.3},
            "depth": {"dist": "quniform", "lo": 2, "hi": 10, "q": 1},
            "booster": {"dist": "choice", "options": ["gbtree", "dart"]}
        }"#;
        let space = space_from_json(text).unwrap();
        assert_eq!(space.len(), 3);
        let names: Vec<&String> = space.dimensions().keys().collect();
        assert_eq!(names, vec!["eta", "depth", "booster"]);
    }

    #[test]
    fn json_space_errors_name_dimension_and_field() {
        let text = r#"{"eta": {"dist": "loguniform", "lo": 0.005}}"#;
        match space_from_json(text) {
            Err(Error::SpaceFile {
                dimension, field, ..
            }) => {
                assert_eq!(dimension, "eta");
                assert_eq!(field, "hi");
            }
            other => panic!("expected SpaceFile error, got {other:?}"),
        }
        let text = r#"{"x": {"dist": "triangular", "lo": 0, "hi": 1}}"#;
        assert!(matches!(
            space_from_json(text),
            Err(Error::SpaceFile { .. })
        ));
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arb_distribution() -> impl Strategy<Value = Distribution> {
        prop_oneof![
            (-100.0..100.0f64, 0.1..100.0f64)
                .prop_map(|(lo, w)| Distribution::Uniform { lo, hi: lo + w }),
            (0.001..10.0f64, 1.1..1000.0f64)
                .prop_map(|(lo, f)| Distribution::LogUniform { lo, hi: lo * f }),
            (-50.0..50.0f64, 0.5..50.0f64, 0.1..5.0f64)
                .prop_map(|(lo, w, q)| Distribution::QUniform { lo, hi: lo + w, q }),
            (0.01..5.0f64, 1.5..500.0f64, 0.1..5.0f64)
                .prop_map(|(lo, f, q)| Distribution::QLogUniform { lo, hi: lo * f, q }),
            (-10.0..10.0f64, 0.1..10.0f64)
                .prop_map(|(mu, sigma)| Distribution::Normal { mu, sigma }),
            (-10.0..10.0f64, 0.1..10.0f64, 0.1..5.0f64)
                .prop_map(|(mu, sigma, q)| Distribution::QNormal { mu, sigma, q }),
            prop::collection::hash_set("[a-z]{1,6}", 1..6).prop_map(|s| Distribution::Choice {
                options: {
                    let mut v: Vec<String> = s.into_iter().collect();
                    v.sort();
                    v
                }
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Seeded samples always satisfy the support predicate.
        #[test]
        fn samples_lie_in_support(d in arb_distribution(), seed in any::<u64>()) {
            prop_assume!(d.validate().is_ok());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..200 {
                let v = d.sample(&mut rng);
                prop_assert!(d.contains(&v), "{d:?} produced out-of-support {v:?}");
            }
        }

        /// Quantized samples are exact multiples of q within 1e-9.
        #[test]
        fn quantized_samples_are_multiples(
            lo in -50.0..50.0f64, w in 0.5..50.0f64, q in 0.1..5.0f64, seed in any::<u64>()
        ) {
            let d = Distribution::QUniform { lo, hi: lo + w, q };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..200 {
                let v = d.sample(&mut rng).as_real().unwrap();
                prop_assert!((v - quantize(v, q)).abs() <= QUANTIZE_TOL);
            }
        }

        /// Grid cardinality equals the product of per-dimension counts.
        #[test]
        fn grid_cardinality_matches_product(
            res in 1usize..5, n_opts in 1usize..4, k in 2i64..6
        ) {
            let space = SearchSpace::new(vec![
                ("u".to_string(), Distribution::Uniform { lo: 0.0, hi: 1.0 }),
                ("q".to_string(), Distribution::QUniform { lo: 1.0, hi: k as f64, q: 1.0 }),
                ("c".to_string(), Distribution::Choice {
                    options: (0..n_opts).map(|i| format!("o{i}")).collect(),
                }),
            ]).unwrap();
            let pts = space.grid_points(res).unwrap();
            prop_assert_eq!(pts.len(), res * k as usize * n_opts);
        }
    }
}
