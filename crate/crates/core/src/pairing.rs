//! Shortest-distance D2D pairing.
//!
//! All node pairs closer than the target distance `mu` are visited in
//! ascending distance order and a pair is accepted when neither endpoint is
//! matched yet. Equal distances are ordered by `(index_a, index_b)`.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{retention_probability, ModelParams};
use crate::error::{Error, Result};
use crate::montecarlo::{sample_candidates, Candidates, SimConfig};
use crate::pointprocess::{Point, PointPattern};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub a: usize,
    pub b: usize,
    /// Link distance in meters.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PairingResult {
    pub pairs: Vec<Pair>,
    pub unpaired: Vec<usize>,
    /// One member per pair once [`select_transmitters`] has run; empty before.
    pub transmitters: Vec<usize>,
}

impl PairingResult {
    pub fn paired_count(&self) -> usize {
        2 * self.pairs.len()
    }

    /// Every node that belongs to a pair, in pair order.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().flat_map(|p| [p.a, p.b])
    }
}

/// Candidate links of a pattern up to some maximum distance, sorted by
/// `(distance, a, b)`. Building once and running [`CandidateLinks::greedy`]
/// for several `mu` values avoids re-scanning the pattern.
#[derive(Debug, Clone)]
pub struct CandidateLinks {
    node_count: usize,
    links: Vec<Pair>,
}

impl CandidateLinks {
    pub fn build(positions: &[Point], max_mu: f64) -> Self {
        let node_count = positions.len();
        let mut links = Vec::new();
        if node_count >= 2 && max_mu > 0.0 {
            let extent = bounding_extent(positions);
            if !max_mu.is_finite() || max_mu >= extent {
                for i in 0..node_count {
                    for j in i + 1..node_count {
                        push_if_close(&mut links, positions, i, j, max_mu);
                    }
                }
            } else {
                grid_links(&mut links, positions, max_mu);
            }
        }
        links.sort_by(|l, r| {
            l.distance
                .total_cmp(&r.distance)
                .then(l.a.cmp(&r.a))
                .then(l.b.cmp(&r.b))
        });
        Self { node_count, links }
    }

    pub fn links(&self) -> &[Pair] {
        &self.links
    }

    /// Greedy matching restricted to links of length `<= mu`. A zero target
    /// distance admits no link.
    pub fn greedy(&self, mu: f64) -> PairingResult {
        let mut matched = vec![false; self.node_count];
        let mut pairs = Vec::new();
        if mu > 0.0 {
            for link in self.links.iter().take_while(|l| l.distance <= mu) {
                if !matched[link.a] && !matched[link.b] {
                    matched[link.a] = true;
                    matched[link.b] = true;
                    pairs.push(*link);
                }
            }
        }
        let unpaired = (0..self.node_count).filter(|&i| !matched[i]).collect();
        PairingResult {
            pairs,
            unpaired,
            transmitters: Vec::new(),
        }
    }
}

fn bounding_extent(positions: &[Point]) -> f64 {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in positions {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    (x1 - x0).hypot(y1 - y0)
}

fn push_if_close(links: &mut Vec<Pair>, positions: &[Point], a: usize, b: usize, max_mu: f64) {
    let distance = positions[a].distance(positions[b]);
    if distance <= max_mu {
        links.push(Pair { a, b, distance });
    }
}

/// Bucket points into square cells of side `cell`; close pairs are then in
/// the same or an adjacent cell.
fn grid_links(links: &mut Vec<Pair>, positions: &[Point], cell: f64) {
    let key = |p: &Point| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in positions.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(i);
    }
    for (i, p) in positions.iter().enumerate() {
        let (cx, cy) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = buckets.get(&(cx + dx, cy + dy)) {
                    for &j in bucket.iter().filter(|&&j| j > i) {
                        push_if_close(links, positions, i, j, cell);
                    }
                }
            }
        }
    }
}

/// Matches the nodes of `pattern` into disjoint pairs no longer than `mu`.
pub fn pair_nodes(pattern: &PointPattern, mu: f64) -> Result<PairingResult> {
    if !(mu >= 0.0) {
        return Err(Error::invalid("mu", format!("target distance must be >= 0, got {mu}")));
    }
    Ok(CandidateLinks::build(pattern.positions(), mu).greedy(mu))
}

/// Designates one transmitting member per pair with a fair coin.
pub fn select_transmitters(mut pairing: PairingResult, stream: RngStream) -> PairingResult {
    let mut rng = stream.generator();
    pairing.transmitters = pairing
        .pairs
        .iter()
        .map(|p| if rng.random::<bool>() { p.a } else { p.b })
        .collect();
    pairing
}

/// Empirical retention at one target distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionEstimate {
    pub mu: f64,
    /// Mean fraction of candidate nodes that end up paired; `None` when no
    /// replication produced a single candidate.
    pub empirical_probability: Option<f64>,
    /// Closed-form retention at the configured `k`.
    pub analytic_probability: f64,
    /// Replications that contributed (had at least one candidate).
    pub replications: usize,
    pub half_width_95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionCurve {
    pub lambda: f64,
    pub k: f64,
    pub points: Vec<RetentionEstimate>,
}

impl RetentionCurve {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["mu_m", "retention_empirical", "retention_analytic", "ci95", "replications"])?;
        for p in &self.points {
            w.write_record([
                p.mu.to_string(),
                p.empirical_probability.map(|v| v.to_string()).unwrap_or_default(),
                p.analytic_probability.to_string(),
                p.half_width_95.to_string(),
                p.replications.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Empirical retention: for each `mu`, the fraction of candidate nodes in the
/// sampling disk that end up paired, averaged over replications that had at
/// least one candidate. Replication `i` uses the same candidate stream as
/// coverage replication `i`.
pub fn estimate_retention(config: &SimConfig, mu_grid: &[f64], replications: usize) -> Result<RetentionCurve> {
    config.validate()?;
    if replications == 0 {
        return Err(Error::invalid("replications", "must be >= 1"));
    }
    if let Some(m) = mu_grid.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
        return Err(Error::invalid("mu_grid", format!("target distances must be finite and >= 0, got {m}")));
    }
    let max_mu = mu_grid.iter().copied().fold(0.0, f64::max);
    let pairing_config = SimConfig {
        model: ModelParams { mu: max_mu, ..config.model },
        ..*config
    };

    let per_replication: Vec<Option<Vec<f64>>> = (0..replications as u64)
        .into_par_iter()
        .map(|i| -> Result<Option<Vec<f64>>> {
            let Candidates { pattern, inside } = sample_candidates(&pairing_config, i)?;
            if inside == 0 {
                return Ok(None);
            }
            let links = CandidateLinks::build(pattern.positions(), max_mu);
            let fractions = mu_grid
                .iter()
                .map(|&mu| {
                    let paired = links.greedy(mu).members().filter(|&j| j < inside).count();
                    paired as f64 / inside as f64
                })
                .collect();
            Ok(Some(fractions))
        })
        .collect::<Result<_>>()?;

    let defined: Vec<&Vec<f64>> = per_replication.iter().flatten().collect();
    let n = defined.len();
    let points = mu_grid
        .iter()
        .enumerate()
        .map(|(j, &mu)| {
            let analytic_probability = retention_probability(config.model.k, config.model.lambda, mu)?;
            if n == 0 {
                return Ok(RetentionEstimate {
                    mu,
                    empirical_probability: None,
                    analytic_probability,
                    replications: 0,
                    half_width_95: 0.0,
                });
            }
            let mean = defined.iter().map(|f| f[j]).sum::<f64>() / n as f64;
            let var = if n > 1 {
                defined.iter().map(|f| (f[j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            Ok(RetentionEstimate {
                mu,
                empirical_probability: Some(mean),
                analytic_probability,
                replications: n,
                half_width_95: 1.96 * (var / n as f64).sqrt(),
            })
        })
        .collect::<Result<_>>()?;

    Ok(RetentionCurve {
        lambda: config.model.lambda,
        k: config.model.k,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> PointPattern {
        PointPattern::from_positions(xs.iter().map(|&x| Point::new(x, 0.0)).collect())
    }

    #[test]
    fn two_close_nodes_pair() {
        let r = pair_nodes(&line(&[0.0, 10.0]), 50.0).unwrap();
        assert_eq!(r.pairs.len(), 1);
        assert_eq!((r.pairs[0].a, r.pairs[0].b), (0, 1));
        assert!((r.pairs[0].distance - 10.0).abs() < 1e-12);
        assert!(r.unpaired.is_empty());
    }

    #[test]
    fn two_distant_nodes_stay_unpaired() {
        let r = pair_nodes(&line(&[0.0, 60.0]), 50.0).unwrap();
        assert!(r.pairs.is_empty());
        assert_eq!(r.unpaired, vec![0, 1]);
    }

    #[test]
    fn globally_shortest_link_wins() {
        let r = pair_nodes(&line(&[0.0, 10.0, 12.0]), 50.0).unwrap();
        assert_eq!(r.pairs.len(), 1);
        assert_eq!((r.pairs[0].a, r.pairs[0].b), (1, 2));
        assert!((r.pairs[0].distance - 2.0).abs() < 1e-12);
        assert_eq!(r.unpaired, vec![0]);
    }

    #[test]
    fn ties_break_on_index_order() {
        // 0-1 and 1-2 both 5 m; (0, 1) sorts first
        let r = pair_nodes(&line(&[0.0, 5.0, 10.0]), 50.0).unwrap();
        assert_eq!((r.pairs[0].a, r.pairs[0].b), (0, 1));
        assert_eq!(r.unpaired, vec![2]);
    }

    #[test]
    fn empty_and_zero_mu() {
        assert_eq!(pair_nodes(&PointPattern::empty(), 50.0).unwrap(), PairingResult::default());
        let r = pair_nodes(&line(&[0.0, 0.0, 3.0]), 0.0).unwrap();
        assert!(r.pairs.is_empty());
        assert!(pair_nodes(&line(&[0.0]), -1.0).is_err());
    }

    #[test]
    fn grid_and_exhaustive_search_agree() {
        use crate::pointprocess::{sample_ppp, Annulus};
        let region = Annulus::new(1.0, 500.0).unwrap();
        for rep in 0..20 {
            let p = sample_ppp(&region, 1e-4, RngStream::new(4, rep, 0)).unwrap();
            let grid = CandidateLinks::build(p.positions(), 50.0);
            let brute = CandidateLinks::build(p.positions(), f64::INFINITY);
            let brute: Vec<Pair> = brute.links().iter().copied().filter(|l| l.distance <= 50.0).collect();
            assert_eq!(grid.links(), &brute[..]);
        }
    }

    #[test]
    fn one_transmitter_per_pair() {
        let none = select_transmitters(PairingResult::default(), RngStream::new(1, 0, 4));
        assert!(none.transmitters.is_empty());

        let r = pair_nodes(&line(&[0.0, 1.0, 100.0, 101.0, 200.0, 201.0]), 5.0).unwrap();
        let r = select_transmitters(r, RngStream::new(1, 0, 4));
        assert_eq!(r.transmitters.len(), r.pairs.len());
        for (t, p) in r.transmitters.iter().zip(&r.pairs) {
            assert!(*t == p.a || *t == p.b);
        }
    }

    #[test]
    fn transmitter_coin_is_fair() {
        let pairs: Vec<Pair> = (0..100_000)
            .map(|i| Pair { a: 2 * i, b: 2 * i + 1, distance: 1.0 })
            .collect();
        let r = select_transmitters(
            PairingResult { pairs, unpaired: vec![], transmitters: vec![] },
            RngStream::new(2, 0, 4),
        );
        let first = r.transmitters.iter().zip(&r.pairs).filter(|(t, p)| **t == p.a).count();
        let frac = first as f64 / r.pairs.len() as f64;
        assert!((frac - 0.5).abs() < 0.005, "{frac}");
    }

    fn config(lambda: f64) -> SimConfig {
        SimConfig {
            model: ModelParams { lambda, ..ModelParams::default() },
            ..SimConfig::default()
        }
    }

    #[test]
    fn retention_is_zero_at_zero_distance() {
        let curve = estimate_retention(&config(1e-4), &[0.0, 25.0], 200).unwrap();
        assert_eq!(curve.points[0].empirical_probability, Some(0.0));
        assert!(curve.points[1].empirical_probability.unwrap() > 0.0);
    }

    #[test]
    fn retention_without_candidates_is_undefined() {
        let curve = estimate_retention(&config(0.0), &[10.0, 50.0], 50).unwrap();
        assert!(curve.points.iter().all(|p| p.empirical_probability.is_none() && p.replications == 0));
        let mut out = Vec::new();
        curve.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), "mu_m,retention_empirical,retention_analytic,ci95,replications");
        assert_eq!(text.lines().nth(1).unwrap(), "10,,0,0,0");
    }

    #[test]
    fn low_density_retention_tracks_closed_form() {
        let curve = estimate_retention(&config(2.5e-5), &[50.0], 3000).unwrap();
        let p = curve.points[0];
        assert!((p.analytic_probability - 0.145_364).abs() < 1e-6);
        let emp = p.empirical_probability.unwrap();
        assert!((emp - p.analytic_probability).abs() < 0.03, "empirical {emp}");
        assert!(p.half_width_95 > 0.0 && p.half_width_95 < 0.02);
    }

    #[test]
    fn high_density_mismatch_is_larger() {
        // squared deviation from the k = 0.8 curve, summed over the calibration grid
        let grid = [10.0, 20.0, 30.0, 40.0, 50.0];
        let misfit = |lambda: f64| {
            estimate_retention(&config(lambda), &grid, 3000)
                .unwrap()
                .points
                .iter()
                .map(|p| (p.empirical_probability.unwrap() - p.analytic_probability).powi(2))
                .sum::<f64>()
        };
        let (low, high) = (misfit(2.5e-5), misfit(1e-4));
        assert!(high > 3.0 * low, "low {low}, high {high}");
    }
}
