//! Seeded synthetic instances: Haar-uniform ground truth, right-multiplied
//! axis/angle noise and random edge dropping with connectivity repair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Measurement, RaGraph, RotationStack};
use crate::so3::{random_rotation, AngleDistribution, Rotation};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    /// Noise angle standard deviation in radians, or its variance when
    /// `phi_is_variance` is set.
    pub phi: f64,
    /// Probability of dropping each edge of the complete graph.
    pub p: f64,
    pub seed: u64,
    pub phi_is_variance: bool,
}

impl SynthSpec {
    pub fn new(n: usize, phi: f64, p: f64, seed: u64) -> Self {
        SynthSpec {
            n,
            phi,
            p,
            seed,
            phi_is_variance: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!(
                "n must be at least 2, got {}",
                self.n
            )));
        }
        if !(self.phi >= 0.0 && self.phi.is_finite()) {
            return Err(Error::invalid(format!(
                "phi must be finite and non-negative, got {}",
                self.phi
            )));
        }
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::invalid(format!(
                "p must lie in [0, 1), got {}",
                self.p
            )));
        }
        Ok(())
    }

    pub fn noise_stddev(&self) -> f64 {
        if self.phi_is_variance {
            self.phi.sqrt()
        } else {
            self.phi
        }
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: RaGraph,
    pub truth: RotationStack,
}

pub fn generate(spec: &SynthSpec) -> Result<Instance> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth: Vec<Rotation> = (0..n)
        .map(|_| random_rotation(&mut rng, AngleDistribution::Uniform))
        .collect();

    let noise = AngleDistribution::Normal {
        stddev: spec.noise_stddev(),
    };
    let mut candidates = Vec::with_capacity(n * (n - 1) / 2);
    let mut kept = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let rel = truth[i].transpose() * truth[j] * random_rotation(&mut rng, noise);
            kept.push(spec.p == 0.0 || !rng.random_bool(spec.p));
            candidates.push(Measurement { i, j, rel });
        }
    }

    if !is_connected(
        n,
        candidates
            .iter()
            .zip(&kept)
            .filter(|(_, &k)| k)
            .map(|(e, _)| (e.i, e.j)),
    ) {
        for (a, b) in random_spanning_tree(n, &mut rng) {
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            kept[pair_index(n, i, j)] = true;
        }
    }

    let edges = candidates
        .into_iter()
        .zip(kept)
        .filter_map(|(e, k)| k.then_some(e))
        .collect();
    Ok(Instance {
        graph: RaGraph::new(n, edges)?,
        truth: RotationStack::new(truth),
    })
}

/// Position of the pair `(i, j)`, `i < j`, in row-major upper-triangle order.
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

fn is_connected(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components == 1
}

/// Uniformly random labeled spanning tree of the complete graph on `n`
/// vertices, decoded from a random Prüfer sequence.
pub fn random_spanning_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => return Vec::new(),
        2 => return vec![(0, 1)],
        _ => {}
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &c in &code {
        degree[c] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut leaves: std::collections::BTreeSet<usize> =
        (0..n).filter(|&v| degree[v] == 1).collect();
    for &c in &code {
        let leaf = leaves
            .pop_first()
            .expect("a Prüfer sequence always leaves a leaf");
        edges.push((leaf, c));
        degree[c] -= 1;
        if degree[c] == 1 {
            leaves.insert(c);
        }
    }
    let last: Vec<usize> = leaves.into_iter().collect();
    edges.push((last[0], last[1]));
    edges
}

/// Monte Carlo estimate of `E[8 sin²(ε/2)]` with `ε ~ N(0, stddev²)`, the
/// expected chordal energy of one noisy measurement at the ground truth.
pub fn expected_edge_energy(stddev: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for _ in 0..samples {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        sum += 8.0 * (0.5 * stddev * z).sin().powi(2);
    }
    sum / samples as f64
}
