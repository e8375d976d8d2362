//! Network specifications and their Hamiltonians.
//!
//! Dynamics are restricted to the single-excitation subspace spanned by
//! `|n⟩`, the state with the single flipped spin at node `n`. Nodes are
//! numbered from 1 throughout the public API.
//!
//! The effective Hamiltonian uses hop amplitude `J` between coupled nodes and
//! diagonal `-ε × (sum of couplings incident to the node)`. Projecting the
//! full XXZ Hamiltonian onto the subspace gives `2 × H_eff + c·I` with
//! `c = ε × (sum of all edge couplings)`; the factor and the shift only
//! rescale time and add a global phase.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpinError};
use crate::Complex64;

/// Largest network accepted by [`full_space_hamiltonian`].
pub const MAX_FULL_SPACE_SPINS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Chain,
    Ring,
}

impl std::str::FromStr for Topology {
    type Err = SpinError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chain" => Ok(Topology::Chain),
            "ring" => Ok(Topology::Ring),
            other => Err(SpinError::InvalidConfig(format!("unknown topology {other:?}"))),
        }
    }
}

/// A uniformly coupled chain or ring of `n` spin-1/2 particles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct NetworkSpec {
    topology: Topology,
    n: usize,
    coupling: f64,
    anisotropy: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    topology: Topology,
    n: usize,
    j: f64,
    epsilon: f64,
}

impl TryFrom<RawSpec> for NetworkSpec {
    type Error = SpinError;

    fn try_from(raw: RawSpec) -> Result<Self> {
        NetworkSpec::new(raw.topology, raw.n, raw.j, raw.epsilon)
    }
}

impl From<NetworkSpec> for RawSpec {
    fn from(spec: NetworkSpec) -> Self {
        RawSpec {
            topology: spec.topology,
            n: spec.n,
            j: spec.coupling,
            epsilon: spec.anisotropy,
        }
    }
}

impl NetworkSpec {
    pub fn new(topology: Topology, n: usize, coupling: f64, anisotropy: f64) -> Result<Self> {
        let min = match topology {
            Topology::Chain => 2,
            Topology::Ring => 3,
        };
        if n < min {
            return Err(SpinError::InvalidSize { topology, n });
        }
        if !coupling.is_finite() || coupling <= 0.0 {
            return Err(SpinError::InvalidCoupling(coupling));
        }
        if !anisotropy.is_finite() || anisotropy < 0.0 {
            return Err(SpinError::InvalidAnisotropy(anisotropy));
        }
        Ok(NetworkSpec {
            topology,
            n,
            coupling,
            anisotropy,
        })
    }

    pub fn chain(n: usize, coupling: f64, anisotropy: f64) -> Result<Self> {
        Self::new(Topology::Chain, n, coupling, anisotropy)
    }

    pub fn ring(n: usize, coupling: f64, anisotropy: f64) -> Result<Self> {
        Self::new(Topology::Ring, n, coupling, anisotropy)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn anisotropy(&self) -> f64 {
        self.anisotropy
    }

    /// Coupled node pairs as zero-based indices `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = (0..self.n - 1).map(|a| (a, a + 1)).collect();
        if self.topology == Topology::Ring {
            edges.push((0, self.n - 1));
        }
        edges
    }

    /// Checks a one-based node index against the network size.
    pub fn check_node(&self, node: usize) -> Result<()> {
        check_node(node, self.n)
    }

    pub fn hamiltonian(&self) -> EffectiveHamiltonian {
        effective_hamiltonian(self)
    }
}

pub(crate) fn check_node(node: usize, n: usize) -> Result<()> {
    if node == 0 || node > n {
        Err(SpinError::NodeOutOfRange { node, n })
    } else {
        Ok(())
    }
}

pub fn build_network(topology: Topology, n: usize, coupling: f64, anisotropy: f64) -> Result<NetworkSpec> {
    NetworkSpec::new(topology, n, coupling, anisotropy)
}

/// Real symmetric `N×N` Hamiltonian on the single-excitation subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveHamiltonian {
    matrix: DMatrix<f64>,
    spec: NetworkSpec,
}

impl EffectiveHamiltonian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn size(&self) -> usize {
        self.spec.n
    }
}

pub fn effective_hamiltonian(spec: &NetworkSpec) -> EffectiveHamiltonian {
    let n = spec.n;
    let j = spec.coupling;
    let mut matrix = DMatrix::zeros(n, n);
    for (a, b) in spec.edges() {
        matrix[(a, b)] = j;
        matrix[(b, a)] = j;
        matrix[(a, a)] -= spec.anisotropy * j;
        matrix[(b, b)] -= spec.anisotropy * j;
    }
    EffectiveHamiltonian {
        matrix,
        spec: *spec,
    }
}

/// Basis index of `|node⟩` in the full `2^n` space.
///
/// Basis states are ordered lexicographically with spin 1 as the leftmost
/// tensor factor; bit value 0 is spin up (σz = +1) and 1 is spin down, so
/// `|node⟩` has a single set bit at position `n - node` from the right.
pub fn excitation_index(n: usize, node: usize) -> usize {
    1 << (n - node)
}

fn pauli() -> [DMatrix<Complex64>; 3] {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let sx = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
    let sy = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
    [sx, sy, sz]
}

/// `I ⊗ … ⊗ σ ⊗ … ⊗ σ ⊗ … ⊗ I` with the Pauli factor at zero-based sites `a` and `b`.
fn two_site_operator(n: usize, a: usize, b: usize, sigma: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let id = DMatrix::<Complex64>::identity(2, 2);
    let mut op = DMatrix::<Complex64>::identity(1, 1);
    for site in 0..n {
        let factor = if site == a || site == b { sigma } else { &id };
        op = op.kronecker(factor);
    }
    op
}

/// Full `2^n × 2^n` Hamiltonian
/// `Σ_edges J (σx σx + σy σy + ε σz σz)`, used as an independent oracle for
/// the effective model.
pub fn full_space_hamiltonian(spec: &NetworkSpec) -> Result<DMatrix<Complex64>> {
    let n = spec.n;
    if n > MAX_FULL_SPACE_SPINS {
        return Err(SpinError::TooLarge {
            n,
            max: MAX_FULL_SPACE_SPINS,
        });
    }
    let [sx, sy, sz] = pauli();
    let dim = 1usize << n;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let j = Complex64::new(spec.coupling, 0.0);
    let je = Complex64::new(spec.coupling * spec.anisotropy, 0.0);
    for (a, b) in spec.edges() {
        h += two_site_operator(n, a, b, &sx) * j;
        h += two_site_operator(n, a, b, &sy) * j;
        if spec.anisotropy != 0.0 {
            h += two_site_operator(n, a, b, &sz) * je;
        }
    }
    Ok(h)
}
