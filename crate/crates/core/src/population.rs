//! Agent model ensembles and the thermodynamic quantities defined on them.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};

/// One agent's internal model, a point in `[0, 1]^K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentModel(Vec<f64>);

impl AgentModel {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(CoordError::invalid("components", "model needs at least one component"));
        }
        if let Some(c) = components.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(CoordError::invalid("components", format!("{c} outside [0, 1]")));
        }
        Ok(AgentModel(components))
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        Self::new(bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn squared_distance(&self, other: &AgentModel) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn l1_distance(&self, other: &AgentModel) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }
}

/// N agent models of common length K.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    models: Vec<AgentModel>,
}

impl Population {
    pub fn new(models: Vec<AgentModel>) -> Result<Self> {
        let first = models.first().ok_or(CoordError::EmptyPopulation)?;
        let k = first.len();
        if let Some(m) = models.iter().find(|m| m.len() != k) {
            return Err(CoordError::ModelLengthMismatch {
                expected: k,
                got: m.len(),
            });
        }
        Ok(Population { models })
    }

    /// `n` copies of the same model.
    pub fn consensus(n: usize, model: AgentModel) -> Result<Self> {
        Self::new(vec![model; n])
    }

    /// Models scattered uniformly within `±spread` of `center`, clipped to `[0, 1]`.
    pub fn scattered<R: Rng + ?Sized>(n: usize, center: &AgentModel, spread: f64, rng: &mut R) -> Result<Self> {
        if !(spread >= 0.0 && spread.is_finite()) {
            return Err(CoordError::invalid(
                "spread",
                format!("must be nonnegative, got {spread}"),
            ));
        }
        let models = (0..n)
            .map(|_| {
                let comps = center
                    .components()
                    .iter()
                    .map(|&c| {
                        let jitter = if spread > 0.0 {
                            rng.random_range(-spread..=spread)
                        } else {
                            0.0
                        };
                        (c + jitter).clamp(0.0, 1.0)
                    })
                    .collect();
                AgentModel(comps)
            })
            .collect();
        Self::new(models)
    }

    pub fn models(&self) -> &[AgentModel] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Model length K.
    pub fn model_len(&self) -> usize {
        self.models[0].len()
    }

    /// Removes and returns agent `index`. Refuses to empty the population.
    pub fn remove(&mut self, index: usize) -> Result<AgentModel> {
        if index >= self.models.len() {
            return Err(CoordError::IndexOutOfRange {
                index,
                len: self.models.len(),
            });
        }
        if self.models.len() == 1 {
            return Err(CoordError::EmptyPopulation);
        }
        Ok(self.models.remove(index))
    }

    /// Reads a population from CSV with header `k0,k1,...,k{K-1}`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        for (i, h) in headers.iter().enumerate() {
            if h.trim() != format!("k{i}") {
                return Err(CoordError::Malformed(format!("expected header `k{i}`, found `{h}`")));
            }
        }
        let mut models = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let comps = rec
                .iter()
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| CoordError::Malformed(format!("row {row}: `{f}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if comps.len() != headers.len() {
                return Err(CoordError::ModelLengthMismatch {
                    expected: headers.len(),
                    got: comps.len(),
                });
            }
            models.push(AgentModel::new(comps)?);
        }
        Self::new(models)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record((0..self.model_len()).map(|i| format!("k{i}")))?;
        for m in &self.models {
            wtr.write_record(m.components().iter().map(|c| c.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Componentwise mean model m̄.
pub fn mean_model(pop: &Population) -> AgentModel {
    let n = pop.len() as f64;
    let mut mean = vec![0.0; pop.model_len()];
    for m in pop.models() {
        for (acc, c) in mean.iter_mut().zip(m.components()) {
            *acc += c;
        }
    }
    for v in &mut mean {
        *v /= n;
    }
    AgentModel(mean)
}

/// `T_co = Σᵢ ||mᵢ − m̄||² / (N·K²)`.
pub fn coordination_temperature(pop: &Population) -> f64 {
    let mean = mean_model(pop);
    let k = pop.model_len() as f64;
    let sum: f64 = pop.models().iter().map(|m| m.squared_distance(&mean)).sum();
    sum / (pop.len() as f64 * k * k)
}

/// Same quantity as [`coordination_temperature`] through the all-pairs form
/// `Σᵢⱼ ||mᵢ − mⱼ||² / (2·N²·K²)`.
pub fn pairwise_temperature(pop: &Population) -> f64 {
    let n = pop.len() as f64;
    let k = pop.model_len() as f64;
    let models = pop.models();
    let mut sum = 0.0;
    for (i, a) in models.iter().enumerate() {
        for b in &models[i + 1..] {
            sum += a.squared_distance(b);
        }
    }
    // each unordered pair appears twice in the ordered double sum
    2.0 * sum / (2.0 * n * n * k * k)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapEstimator {
    /// `1 − ||mᵢ − mⱼ||₁ / K` (one minus normalized Hamming distance on bits).
    #[default]
    L1Agreement,
    /// Pearson correlation between model vectors, clipped to `[0, 1]`.
    Pearson,
}

/// Mean pairwise overlap ρ over unordered agent pairs.
pub fn pairwise_overlap(pop: &Population, estimator: OverlapEstimator) -> Result<f64> {
    if pop.len() < 2 {
        return Err(CoordError::TooFewAgents {
            needed: 2,
            got: pop.len(),
        });
    }
    let k = pop.model_len() as f64;
    let models = pop.models();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, a) in models.iter().enumerate() {
        for b in &models[i + 1..] {
            sum += match estimator {
                OverlapEstimator::L1Agreement => 1.0 - a.l1_distance(b) / k,
                OverlapEstimator::Pearson => pearson_overlap(a, b),
            };
            count += 1;
        }
    }
    Ok((sum / count as f64).clamp(0.0, 1.0))
}

fn pearson_overlap(a: &AgentModel, b: &AgentModel) -> f64 {
    if a == b {
        return 1.0;
    }
    let k = a.len() as f64;
    let ma = a.components().iter().sum::<f64>() / k;
    let mb = b.components().iter().sum::<f64>() / k;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.components().iter().zip(b.components()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    (cov / (va * vb).sqrt()).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogBase {
    /// Natural log; reproduces T_c ≈ 0.128 at N=50, K̄=20, K₀=10.
    #[default]
    Natural,
    Two,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

/// Critical coordination temperature and transition width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub t_c: f64,
    /// `√T_c`.
    pub width: f64,
}

/// `T_c = (K₀/K̄) / log N`.
pub fn critical_temperature(n: f64, k_bar: f64, k0: f64, base: LogBase) -> Result<CriticalPoint> {
    if !(n >= 2.0) {
        return Err(CoordError::invalid("n_agents", format!("must be at least 2, got {n}")));
    }
    if !(k_bar > 0.0) {
        return Err(CoordError::invalid("k_bar", format!("must be positive, got {k_bar}")));
    }
    if !(k0 > 0.0) {
        return Err(CoordError::invalid("k0", format!("must be positive, got {k0}")));
    }
    let t_c = (k0 / k_bar) / base.log(n);
    Ok(CriticalPoint { t_c, width: t_c.sqrt() })
}

/// `ψ = (K_absolute − K_relative) / K_absolute`.
pub fn order_parameter(k_absolute: f64, k_relative: f64) -> Result<f64> {
    if !(k_absolute > 0.0) {
        return Err(CoordError::invalid(
            "k_absolute",
            format!("must be positive, got {k_absolute}"),
        ));
    }
    if !(k_relative >= 0.0) {
        return Err(CoordError::invalid(
            "k_relative",
            format!("must be nonnegative, got {k_relative}"),
        ));
    }
    if k_relative > k_absolute {
        return Err(CoordError::invalid(
            "k_relative",
            format!("{k_relative} exceeds k_absolute {k_absolute}"),
        ));
    }
    Ok((k_absolute - k_relative) / k_absolute)
}

/// Work in bits to cool from `t1` to `t2`: `N·(K̄ − K₀)·log₂(T₁/T₂)`.
///
/// Positive for cooling (`t2 < t1`), zero when the temperatures agree.
pub fn cooling_work(n: f64, k_bar: f64, k0: f64, t1: f64, t2: f64) -> Result<f64> {
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(CoordError::invalid(
            "temperature",
            format!("must be positive, got {t1} and {t2}"),
        ));
    }
    if k_bar < k0 {
        return Err(CoordError::invalid("k_bar", format!("{k_bar} is below k0 {k0}")));
    }
    Ok(n * (k_bar - k0) * (t1 / t2).log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pop(rows: &[&[f64]]) -> Population {
        Population::new(rows.iter().map(|r| AgentModel::new(r.to_vec()).unwrap()).collect()).unwrap()
    }

    #[test]
    fn means() {
        let p = pop(&[&[0.3, 0.7], &[0.3, 0.7]]);
        assert_eq!(mean_model(&p).components(), &[0.3, 0.7]);
        let p = pop(&[&[0.0], &[1.0]]);
        assert_eq!(mean_model(&p).components(), &[0.5]);
        let p = pop(&[&[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]]);
        for c in mean_model(&p).components() {
            assert!((c - 2.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn temperature_hand_cases() {
        assert_eq!(coordination_temperature(&pop(&[&[0.4, 0.1], &[0.4, 0.1]])), 0.0);
        assert_eq!(coordination_temperature(&pop(&[&[0.0], &[1.0]])), 0.25);
        let a = pop(&[&[0.1, 0.9], &[0.5, 0.2], &[0.8, 0.8]]);
        let b = pop(&[&[0.8, 0.8], &[0.1, 0.9], &[0.5, 0.2]]);
        assert_eq!(coordination_temperature(&a), coordination_temperature(&b));
    }

    #[test]
    fn overlap_hand_cases() {
        let same = pop(&[&[1.0, 0.0, 1.0], &[1.0, 0.0, 1.0]]);
        assert_eq!(pairwise_overlap(&same, OverlapEstimator::L1Agreement).unwrap(), 1.0);
        let comp = pop(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]);
        assert_eq!(pairwise_overlap(&comp, OverlapEstimator::L1Agreement).unwrap(), 0.0);
        let three = pop(&[&[0.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let rho = pairwise_overlap(&three, OverlapEstimator::L1Agreement).unwrap();
        assert!((rho - 1.0 / 3.0).abs() < 1e-15);
        assert!(pairwise_overlap(&pop(&[&[0.2]]), OverlapEstimator::L1Agreement).is_err());
        assert_eq!(pairwise_overlap(&same, OverlapEstimator::Pearson).unwrap(), 1.0);
        assert_eq!(pairwise_overlap(&comp, OverlapEstimator::Pearson).unwrap(), 0.0);
    }

    #[test]
    fn critical_point() {
        let cp = critical_temperature(50.0, 20.0, 10.0, LogBase::Natural).unwrap();
        assert!((cp.t_c - 0.1278).abs() < 1e-4);
        assert!((cp.width - 0.3575).abs() < 1e-4);
        let unit = critical_temperature(std::f64::consts::E, 7.0, 7.0, LogBase::Natural).unwrap();
        assert!((unit.t_c - 1.0).abs() < 1e-15);
        let two = critical_temperature(4.0, 2.0, 1.0, LogBase::Two).unwrap();
        assert_eq!(two.t_c, 0.25);
        assert!(critical_temperature(1.0, 20.0, 10.0, LogBase::Natural).is_err());
    }

    #[test]
    fn order_param() {
        assert_eq!(order_parameter(20.0, 20.0).unwrap(), 0.0);
        assert_eq!(order_parameter(20.0, 10.0).unwrap(), 0.5);
        assert!(order_parameter(20.0, 1e-12).unwrap() > 1.0 - 1e-12);
        assert!(order_parameter(10.0, 20.0).is_err());
    }

    #[test]
    fn work() {
        assert_eq!(cooling_work(50.0, 20.0, 10.0, 0.7, 0.7).unwrap(), 0.0);
        assert_eq!(cooling_work(50.0, 20.0, 10.0, 1.0, 0.5).unwrap(), 500.0);
        assert_eq!(cooling_work(50.0, 10.0, 10.0, 1.0, 0.01).unwrap(), 0.0);
        assert!(cooling_work(50.0, 20.0, 10.0, 0.0, 0.5).is_err());
        assert!(cooling_work(50.0, 5.0, 10.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn csv_roundtrip_and_header_check() {
        let p = pop(&[&[0.0, 0.25, 1.0], &[0.5, 0.125, 0.75]]);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k0,k1,k2\n"));
        assert_eq!(Population::read_csv(buf.as_slice()).unwrap(), p);
        assert!(Population::read_csv("a,b\n0,1\n".as_bytes()).is_err());
        assert!(Population::read_csv("k0\n1.5\n".as_bytes()).is_err());
    }

    #[test]
    fn remove_keeps_one() {
        let mut p = pop(&[&[0.0], &[1.0]]);
        assert!(p.remove(5).is_err());
        p.remove(0).unwrap();
        assert!(matches!(p.remove(0), Err(CoordError::EmptyPopulation)));
    }
}
