//! Graph convolutional kernels and their diagnostics.
//!
//! Every kernel here is an eigenvalue mapping of the self-loop-normalized
//! Laplacian L̂:
//!
//! | Family | Matrix | Scalar map on λ̂ |
//! |--------|--------|------------------|
//! | `laplacian` | L̂ | λ |
//! | `power:k=K` | L̂ᵏ | λᵏ |
//! | `limit` | S, the k→∞ limit of L̂ᵏ | 1 at λ=1, else 0 |
//! | `linear` | (I + L̂)/2 | (1+λ)/2 |
//! | `poisson:r=R` | (1−r²)((r²+1)I − 2rL̂)⁻¹ | (1−r²)/(1−2rλ+r²) |
//! | `cheb:r=R,K=K` | I + 2·Σ₁ᴷ rᵏ Tₖ(L̂) | partial sum of the same series |
//!
//! The Poisson kernel is the closed form of the Chebyshev series with
//! coefficients θ′₀ = 1, θ′ₖ = 2rᵏ; `cheb_partial` evaluates the series
//! by the three-term recurrence without any eigendecomposition, so the
//! two construction paths cross-validate each other.
//!
//! A kernel is *self-smoothing* when it is idempotent: it then projects
//! every feature map into a fixed subspace of dimension trace = rank.
//! [`detect_self_smoothing`] measures that directly.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::numerics::{self, idempotency_defect, matrix_power, solve_spd, trace};
use crate::{Error, Result};

/// Default Poisson radius, used wherever a default is needed.
pub const DEFAULT_POISSON_R: f64 = 0.5;

/// Symbolic kernel identity: family plus parameters.
///
/// String form (used by the CLI and in serialized reports):
/// `laplacian | power:k=<int> | limit | linear | poisson:r=<float> |
/// cheb:r=<float>,K=<int>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum KernelSpec {
    Laplacian,
    Power { k: u32 },
    SmoothingLimit,
    Linear,
    Poisson { r: f64 },
    ChebyshevPartial { r: f64, k: u32 },
}

impl KernelSpec {
    /// Check parameter ranges: |r| < 1 strictly, k ≥ 1 for the power
    /// kernel. The Chebyshev partial sum allows K = 0 (the empty sum).
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Power { k } if k == 0 => Err(Error::InvalidKernelParameter(
                "power kernel needs k >= 1".into(),
            )),
            KernelSpec::Poisson { r } | KernelSpec::ChebyshevPartial { r, .. }
                if !(r.abs() < 1.0) =>
            {
                Err(Error::InvalidKernelParameter(format!(
                    "radius r={r} must satisfy |r| < 1"
                )))
            }
            _ => Ok(()),
        }
    }

    /// The scalar eigenvalue map this kernel applies to the spectrum of L̂.
    pub fn eigenvalue_map(&self, lambda: f64) -> f64 {
        match *self {
            KernelSpec::Laplacian => lambda,
            KernelSpec::Power { k } => lambda.powi(k as i32),
            // Pointwise limit of λᵏ on (−1, 1].
            KernelSpec::SmoothingLimit => {
                if (lambda - 1.0).abs() < 1e-9 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelSpec::Linear => 0.5 * (1.0 + lambda),
            KernelSpec::Poisson { r } => eigenvalue_map_poisson(lambda, r),
            KernelSpec::ChebyshevPartial { r, k } => {
                let mut acc = 1.0;
                let mut t_prev = 1.0;
                let mut t_cur = lambda;
                let mut rk = 1.0;
                for _ in 1..=k {
                    rk *= r;
                    acc += 2.0 * rk * t_cur;
                    let t_next = 2.0 * lambda * t_cur - t_prev;
                    t_prev = t_cur;
                    t_cur = t_next;
                }
                acc
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KernelSpec::Laplacian => write!(f, "laplacian"),
            KernelSpec::Power { k } => write!(f, "power:k={k}"),
            KernelSpec::SmoothingLimit => write!(f, "limit"),
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Poisson { r } => write!(f, "poisson:r={r}"),
            KernelSpec::ChebyshevPartial { r, k } => write!(f, "cheb:r={r},K={k}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let bad = |token: &str| Error::KernelParse {
            input: input.to_string(),
            token: token.to_string(),
        };
        let (family, params) = match input.split_once(':') {
            Some((f, p)) => (f, Some(p)),
            None => (input, None),
        };
        let parse_param = |text: &str, key: &str| -> Result<String> {
            let (k, v) = text.split_once('=').ok_or_else(|| bad(text))?;
            if k != key || v.is_empty() {
                return Err(bad(text));
            }
            Ok(v.to_string())
        };
        let spec = match (family, params) {
            ("laplacian", None) => KernelSpec::Laplacian,
            ("limit", None) => KernelSpec::SmoothingLimit,
            ("linear", None) => KernelSpec::Linear,
            ("power", Some(p)) => {
                let v = parse_param(p, "k")?;
                let k = v.parse::<u32>().map_err(|_| bad(&v))?;
                KernelSpec::Power { k }
            }
            ("poisson", Some(p)) => {
                let v = parse_param(p, "r")?;
                let r = v.parse::<f64>().map_err(|_| bad(&v))?;
                KernelSpec::Poisson { r }
            }
            ("cheb", Some(p)) => {
                let (rp, kp) = p.split_once(',').ok_or_else(|| bad(p))?;
                let rv = parse_param(rp, "r")?;
                let r = rv.parse::<f64>().map_err(|_| bad(&rv))?;
                let kv = parse_param(kp, "K")?;
                let k = kv.parse::<u32>().map_err(|_| bad(&kv))?;
                KernelSpec::ChebyshevPartial { r, k }
            }
            (other, None) => return Err(bad(other)),
            (other, Some(_)) => return Err(bad(other)),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<KernelSpec> for String {
    fn from(spec: KernelSpec) -> String {
        spec.to_string()
    }
}

impl TryFrom<String> for KernelSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// What the self-smoothing detector found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfSmoothingReport {
    /// ‖M² − M‖_max.
    pub idempotency_defect: f64,
    pub trace: f64,
    /// Eigenvalues above the rank tolerance.
    pub rank: usize,
    /// Dimension of the invariant subspace; equals `rank` when the
    /// kernel is idempotent.
    pub subspace_dim: usize,
    /// True when the defect is within tolerance.
    pub verdict: bool,
}

/// Materialize a kernel on a graph.
pub fn build_kernel(g: &Graph, spec: &KernelSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    Ok(match *spec {
        KernelSpec::Laplacian => g.laplacian_hat(),
        KernelSpec::Power { k } => kernel_power(&g.laplacian_hat(), k),
        KernelSpec::SmoothingLimit => kernel_smoothing_limit(g),
        KernelSpec::Linear => kernel_linear(&g.laplacian_hat()),
        KernelSpec::Poisson { r } => kernel_poisson(&g.laplacian_hat(), r)?,
        KernelSpec::ChebyshevPartial { r, k } => cheb_partial(&g.laplacian_hat(), r, k)?,
    })
}

/// L̂ᵏ, the SGC-style kernel including k-hop neighborhoods.
pub fn kernel_power(lhat: &Array2<f64>, k: u32) -> Array2<f64> {
    matrix_power(lhat, k)
}

/// The smoothing limit S = lim L̂ᵏ: per connected component c,
/// S_ij = √(d_i d_j) / Σ_{v∈c} d_v with self-loop degrees, and zero
/// across components.
pub fn kernel_smoothing_limit(g: &Graph) -> Array2<f64> {
    let n = g.node_count();
    let d = g.degrees(true).values;
    let sqrt_d = d.mapv(f64::sqrt);
    let mut s = Array2::zeros((n, n));
    for component in g.connected_components() {
        let total: f64 = component.iter().map(|&v| d[v]).sum();
        for &i in &component {
            for &j in &component {
                s[[i, j]] = sqrt_d[i] * sqrt_d[j] / total;
            }
        }
    }
    s
}

/// Linear mapping trick Li = (I + L̂)/2.
pub fn kernel_linear(lhat: &Array2<f64>) -> Array2<f64> {
    let n = lhat.nrows();
    0.5 * (Array2::eye(n) + lhat)
}

/// Poisson kernel P = (1−r²)((r²+1)I − 2rL̂)⁻¹ for |r| < 1.
///
/// The system matrix is positive definite for any λ̂ ∈ [−1, 1]:
/// its eigenvalues are (r−λ)² + 1 − λ² ≥ (|r|−1)² > 0.
pub fn kernel_poisson(lhat: &Array2<f64>, r: f64) -> Result<Array2<f64>> {
    if !(r.abs() < 1.0) {
        return Err(Error::InvalidKernelParameter(format!(
            "radius r={r} must satisfy |r| < 1"
        )));
    }
    let n = lhat.nrows();
    let system = (r * r + 1.0) * Array2::<f64>::eye(n) - 2.0 * r * lhat;
    let mut p = solve_spd(&system, &Array2::eye(n))?;
    p *= 1.0 - r * r;
    // Symmetric in exact arithmetic; fold away solver rounding.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (p[[i, j]] + p[[j, i]]);
            p[[i, j]] = avg;
            p[[j, i]] = avg;
        }
    }
    Ok(p)
}

/// Partial Chebyshev sum I + 2·Σ_{k=1..K} rᵏ Tₖ(L̂), evaluated with the
/// three-term recurrence T_{k+2} = 2xT_{k+1} − T_k.
///
/// Deliberately avoids eigendecomposition so that convergence to the
/// Poisson closed form cross-validates two independent computation paths.
pub fn cheb_partial(lhat: &Array2<f64>, r: f64, big_k: u32) -> Result<Array2<f64>> {
    if !(r.abs() < 1.0) {
        return Err(Error::InvalidKernelParameter(format!(
            "radius r={r} must satisfy |r| < 1"
        )));
    }
    let n = lhat.nrows();
    let mut acc: Array2<f64> = Array2::eye(n);
    if big_k == 0 {
        return Ok(acc);
    }
    let mut t_prev: Array2<f64> = Array2::eye(n);
    let mut t_cur = lhat.clone();
    let mut rk = 1.0;
    for _ in 1..=big_k {
        rk *= r;
        acc.scaled_add(2.0 * rk, &t_cur);
        let t_next = 2.0 * lhat.dot(&t_cur) - &t_prev;
        t_prev = t_cur;
        t_cur = t_next;
    }
    Ok(acc)
}

/// Scalar eigenvalue map of the Poisson kernel:
/// (1−r²)/(1 − 2rλ + r²).
///
/// Total for |r| < 1 and λ ∈ [−1, 1]: the denominator is at least
/// (1−|r|)² > 0.
pub fn eigenvalue_map_poisson(lambda: f64, r: f64) -> f64 {
    (1.0 - r * r) / (1.0 - 2.0 * r * lambda + r * r)
}

/// Spectral-norm bound on the Chebyshev truncation error:
/// ‖chebK − P‖₂ ≤ 2|r|^(K+1)/(1−|r|), from ‖Tₖ(L̂)‖₂ ≤ 1 on a
/// spectrum inside [−1, 1].
pub fn chebyshev_tail_bound(r: f64, big_k: u32) -> f64 {
    2.0 * r.abs().powi(big_k as i32 + 1) / (1.0 - r.abs())
}

/// Default idempotency tolerance for an n×n kernel.
pub fn default_idempotency_tol(n: usize) -> f64 {
    1e-8 * n as f64
}

/// Measure how close a kernel is to idempotent and how large its
/// invariant subspace is.
///
/// `tol = None` uses [`default_idempotency_tol`].
pub fn detect_self_smoothing(m: &Array2<f64>, tol: Option<f64>) -> Result<SelfSmoothingReport> {
    let spectrum = numerics::eigh(m)?;
    let n = spectrum.len();
    let tol = tol.unwrap_or_else(|| default_idempotency_tol(n));
    let defect = idempotency_defect(m);
    let rank_tol = numerics::default_rank_tol(n, spectrum.spectral_radius());
    let rank = spectrum
        .eigenvalues
        .iter()
        .filter(|lambda| lambda.abs() > rank_tol)
        .count();
    Ok(SelfSmoothingReport {
        idempotency_defect: defect,
        trace: trace(m),
        rank,
        subspace_dim: rank,
        verdict: defect <= tol,
    })
}

fn check_block_params(n1: usize, n2: usize, p: f64, q: f64) -> Result<()> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidConfig(
            "both block sizes must be at least 1".into(),
        ));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidProbability {
            name: "p",
            value: p,
            expected: "p in (0, 1]",
        });
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidProbability {
            name: "q",
            value: q,
            expected: "q in [0, 1]",
        });
    }
    Ok(())
}

/// Expectation of the self-loop adjacency Â of a two-block SBM:
/// diagonal 1, within-block p, cross-block q.
pub fn expected_adjacency(n1: usize, n2: usize, p: f64, q: f64) -> Result<Array2<f64>> {
    check_block_params(n1, n2, p, q)?;
    let n = n1 + n2;
    if n > crate::graph::DEFAULT_NODE_CAP {
        return Err(Error::NodeCapExceeded {
            n,
            cap: crate::graph::DEFAULT_NODE_CAP,
        });
    }
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] = if i == j {
                1.0
            } else if (i < n1) == (j < n1) {
                p
            } else {
                q
            };
        }
    }
    Ok(a)
}

/// L̂ of the expected adjacency: rows sum exactly to the block degrees
/// d₁ = 1 + (n₁−1)p + n₂q and d₂ = 1 + (n₂−1)p + n₁q.
pub fn expected_laplacian_hat(n1: usize, n2: usize, p: f64, q: f64) -> Result<Array2<f64>> {
    let a = expected_adjacency(n1, n2, p, q)?;
    let n = n1 + n2;
    let d1 = 1.0 + (n1 as f64 - 1.0) * p + n2 as f64 * q;
    let d2 = 1.0 + (n2 as f64 - 1.0) * p + n1 as f64 * q;
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / if i < n1 { d1.sqrt() } else { d2.sqrt() })
        .collect();
    let mut l = a;
    for i in 0..n {
        for j in 0..n {
            l[[i, j]] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    Ok(l)
}

/// Closed-form spectrum of the expected L̂ of a two-block SBM, as
/// (eigenvalue, multiplicity) pairs sorted by eigenvalue.
///
/// The within-block eigenvalue is (1−p)/d, not (1−ρ)/d; the two coincide
/// in the ε → 0 limit. Entries with zero multiplicity are dropped.
pub fn smallgap_spectrum_closed_form(
    n1: usize,
    n2: usize,
    p: f64,
    q: f64,
) -> Result<Vec<(f64, usize)>> {
    check_block_params(n1, n2, p, q)?;
    let d1 = 1.0 + (n1 as f64 - 1.0) * p + n2 as f64 * q;
    let d2 = 1.0 + (n2 as f64 - 1.0) * p + n1 as f64 * q;
    let mut out = Vec::with_capacity(4);
    if n1 > 1 {
        out.push(((1.0 - p) / d1, n1 - 1));
    }
    if n2 > 1 {
        out.push(((1.0 - p) / d2, n2 - 1));
    }
    out.push((1.0 - (n2 as f64 / d1 + n1 as f64 / d2) * q, 1));
    out.push((1.0, 1));
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Expand a (value, multiplicity) list into a sorted eigenvalue vector.
pub fn expand_spectrum(pairs: &[(f64, usize)]) -> Vec<f64> {
    let mut out: Vec<f64> = pairs
        .iter()
        .flat_map(|&(value, mult)| std::iter::repeat(value).take(mult))
        .collect();
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{eigh, max_abs_diff};
    use ndarray::array;

    fn path2() -> Graph {
        Graph::new(2, vec![(0, 1)]).unwrap()
    }

    fn triangle() -> Graph {
        Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn build_kernel_examples() {
        let l = build_kernel(&path2(), &KernelSpec::Laplacian).unwrap();
        assert!(max_abs_diff(&l, &array![[0.5, 0.5], [0.5, 0.5]]) < 1e-15);

        let p0 = build_kernel(&triangle(), &KernelSpec::Poisson { r: 0.0 }).unwrap();
        assert!(max_abs_diff(&p0, &Array2::eye(3)) < 1e-12);

        let k3 = build_kernel(&triangle(), &KernelSpec::Laplacian).unwrap();
        assert!(max_abs_diff(&k3, &Array2::from_elem((3, 3), 1.0 / 3.0)) < 1e-15);
    }

    #[test]
    fn power_examples() {
        let lhat = path2().laplacian_hat();
        assert!(max_abs_diff(&kernel_power(&lhat, 1), &lhat) < 1e-15);
        // [[.5,.5],[.5,.5]] is idempotent, so every power is itself.
        assert!(max_abs_diff(&kernel_power(&lhat, 5), &lhat) < 1e-14);

        let third = triangle().laplacian_hat();
        assert!(max_abs_diff(&kernel_power(&third, 2), &third) < 1e-14);
    }

    #[test]
    fn smoothing_limit_examples() {
        let s = kernel_smoothing_limit(&path2());
        assert!(max_abs_diff(&s, &array![[0.5, 0.5], [0.5, 0.5]]) < 1e-15);

        // 3-node star, center 0: d = (3, 2, 2), Σd = 7.
        let star = Graph::new(3, vec![(0, 1), (0, 2)]).unwrap();
        let s = kernel_smoothing_limit(&star);
        let d = [3.0f64, 2.0, 2.0];
        for i in 0..3 {
            for j in 0..3 {
                assert!((s[[i, j]] - (d[i] * d[j]).sqrt() / 7.0).abs() < 1e-15);
            }
        }

        let two_edges = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        let s = kernel_smoothing_limit(&two_edges);
        let block = array![[0.5, 0.5], [0.5, 0.5]];
        for b in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((s[[2 * b + i, 2 * b + j]] - block[[i, j]]).abs() < 1e-15);
                }
            }
        }
        assert_eq!(s[[0, 2]], 0.0);
        assert_eq!(s[[3, 1]], 0.0);
    }

    #[test]
    fn linear_examples() {
        let single = Graph::new(1, vec![]).unwrap();
        let li = kernel_linear(&single.laplacian_hat());
        assert!(max_abs_diff(&li, &array![[1.0]]) < 1e-15);

        let li = kernel_linear(&path2().laplacian_hat());
        assert!(max_abs_diff(&li, &array![[0.75, 0.25], [0.25, 0.75]]) < 1e-15);

        // Eigenvalues of Li are (1+λ̂)/2 ∈ (0, 1].
        let g = Graph::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let lhat = g.laplacian_hat();
        let li = kernel_linear(&lhat);
        let mapped: Vec<f64> = eigh(&lhat)
            .unwrap()
            .eigenvalues
            .iter()
            .map(|&x| 0.5 * (1.0 + x))
            .collect();
        let li_eigs = eigh(&li).unwrap().eigenvalues;
        for (a, b) in li_eigs.iter().zip(mapped.iter()) {
            assert!((a - b).abs() < 1e-10);
            assert!(*a > 0.0 && *a <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn poisson_examples() {
        let single = Graph::new(1, vec![]).unwrap();
        let p = kernel_poisson(&single.laplacian_hat(), 0.5).unwrap();
        // Eq. at λ̂ = 1: (1+r)/(1−r) = 3.
        assert!((p[[0, 0]] - 3.0).abs() < 1e-12);

        let p = kernel_poisson(&path2().laplacian_hat(), 0.5).unwrap();
        assert!(max_abs_diff(&p, &array![[1.8, 1.2], [1.2, 1.8]]) < 1e-12);

        let p = kernel_poisson(&triangle().laplacian_hat(), 0.0).unwrap();
        assert!(max_abs_diff(&p, &Array2::eye(3)) < 1e-12);

        assert!(matches!(
            kernel_poisson(&path2().laplacian_hat(), 1.0),
            Err(Error::InvalidKernelParameter(_))
        ));
    }

    #[test]
    fn poisson_commutes_with_laplacian() {
        let g = Graph::new(6, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (1, 4)]).unwrap();
        let lhat = g.laplacian_hat();
        let p = kernel_poisson(&lhat, 0.5).unwrap();
        assert!(max_abs_diff(&p.dot(&lhat), &lhat.dot(&p)) <= 1e-8);
    }

    #[test]
    fn cheb_examples() {
        let lhat = path2().laplacian_hat();
        assert!(max_abs_diff(&cheb_partial(&lhat, 0.5, 0).unwrap(), &Array2::eye(2)) < 1e-15);

        let k1 = cheb_partial(&lhat, 0.3, 1).unwrap();
        let expected = Array2::eye(2) + 0.6 * &lhat;
        assert!(max_abs_diff(&k1, &expected) < 1e-15);

        // Single node: cheb(0.5, 1) = [2]; exact P = [3]; the gap of 1
        // equals the tail bound 2r^(K+1)/(1−r) = 1.
        let single = Graph::new(1, vec![]).unwrap();
        let lhat1 = single.laplacian_hat();
        let c = cheb_partial(&lhat1, 0.5, 1).unwrap();
        assert!((c[[0, 0]] - 2.0).abs() < 1e-15);
        let p = kernel_poisson(&lhat1, 0.5).unwrap();
        let gap = (p[[0, 0]] - c[[0, 0]]).abs();
        assert!((gap - chebyshev_tail_bound(0.5, 1)).abs() < 1e-12);
    }

    #[test]
    fn poisson_map_examples() {
        assert!((eigenvalue_map_poisson(1.0, 0.5) - 3.0).abs() < 1e-15);
        assert!((eigenvalue_map_poisson(0.0, 0.5) - 0.6).abs() < 1e-15);
        assert!((eigenvalue_map_poisson(-1.0, 0.5) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn detect_self_smoothing_examples() {
        let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)]).unwrap();
        let report = detect_self_smoothing(&kernel_smoothing_limit(&g), None).unwrap();
        assert!(report.verdict);
        assert_eq!(report.rank, 1);
        assert!((report.trace - 1.0).abs() < 1e-10);

        let uniform = Array2::from_elem((5, 5), 0.2);
        assert!(detect_self_smoothing(&uniform, None).unwrap().verdict);

        let p = kernel_poisson(&path2().laplacian_hat(), 0.5).unwrap();
        let report = detect_self_smoothing(&p, None).unwrap();
        assert!(!report.verdict);
        assert_eq!(report.rank, 2);
    }

    #[test]
    fn report_trace_matches_rank_when_idempotent() {
        for edges in [vec![(0, 1), (1, 2)], vec![(0, 1)], vec![]] {
            let g = Graph::new(3, edges).unwrap();
            let report = detect_self_smoothing(&kernel_smoothing_limit(&g), None).unwrap();
            assert!(report.verdict);
            assert!((report.trace - report.rank as f64).abs() <= 0.5);
            assert_eq!(report.rank, g.connected_components().len());
        }
    }

    #[test]
    fn expected_adjacency_examples() {
        let ones = expected_adjacency(2, 2, 1.0, 1.0).unwrap();
        assert!(max_abs_diff(&ones, &Array2::from_elem((4, 4), 1.0)) < 1e-15);

        let block = expected_adjacency(2, 2, 0.7, 0.0).unwrap();
        assert_eq!(block[[0, 2]], 0.0);
        assert_eq!(block[[0, 1]], 0.7);
        assert_eq!(block[[2, 3]], 0.7);
        assert_eq!(block[[1, 1]], 1.0);

        let tiny = expected_adjacency(1, 1, 0.9, 0.3).unwrap();
        assert!(max_abs_diff(&tiny, &array![[1.0, 0.3], [0.3, 1.0]]) < 1e-15);
    }

    #[test]
    fn closed_form_fully_connected() {
        // p = q = 1, n1 = n2: eigenvalues {0 ×(N−1), 1}.
        let eigs = expand_spectrum(&smallgap_spectrum_closed_form(4, 4, 1.0, 1.0).unwrap());
        assert_eq!(eigs.len(), 8);
        for &e in &eigs[..7] {
            assert!(e.abs() < 1e-12);
        }
        assert!((eigs[7] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_epsilon_zero_limit() {
        // p = q = ρ collapses to {(1−ρ)/(1+(N−1)ρ) ×(N−1), 1}.
        let (n1, n2, rho) = (5usize, 3usize, 0.4f64);
        let n = n1 + n2;
        let eigs = expand_spectrum(&smallgap_spectrum_closed_form(n1, n2, rho, rho).unwrap());
        let bulk = (1.0 - rho) / (1.0 + (n as f64 - 1.0) * rho);
        for &e in &eigs[..n - 1] {
            assert!((e - bulk).abs() < 1e-12);
        }
        assert!((eigs[n - 1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_worked_example() {
        // n1 = n2 = 20, p = 0.6, q = 0.4: d = 20.4;
        // {0.4/20.4 ×38, 4.4/20.4, 1}.
        let pairs = smallgap_spectrum_closed_form(20, 20, 0.6, 0.4).unwrap();
        let eigs = expand_spectrum(&pairs);
        assert_eq!(eigs.len(), 40);
        for &e in &eigs[..38] {
            assert!((e - 0.4 / 20.4).abs() < 1e-12);
        }
        assert!((eigs[38] - 4.4 / 20.4).abs() < 1e-12);
        assert!((eigs[39] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_numeric_oracle() {
        for &(n1, n2, p, q) in &[
            (3usize, 4usize, 0.7f64, 0.2f64),
            (6, 2, 0.5, 0.5),
            (5, 5, 0.9, 0.1),
            (4, 7, 0.6, 0.0),
            (1, 6, 0.8, 0.3),
        ] {
            let closed = expand_spectrum(&smallgap_spectrum_closed_form(n1, n2, p, q).unwrap());
            let numeric = eigh(&expected_laplacian_hat(n1, n2, p, q).unwrap()).unwrap();
            for (a, b) in closed.iter().zip(numeric.eigenvalues.iter()) {
                assert!(
                    (a - b).abs() <= 1e-8,
                    "n1={n1} n2={n2} p={p} q={q}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn kernel_string_round_trip() {
        for s in [
            "laplacian",
            "power:k=3",
            "limit",
            "linear",
            "poisson:r=0.5",
            "poisson:r=-0.25",
            "cheb:r=0.5,K=8",
            "cheb:r=0.9,K=0",
        ] {
            let spec: KernelSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }

    #[test]
    fn kernel_string_rejects_bad_tokens() {
        for (input, token) in [
            ("laplacean", "laplacean"),
            ("power:j=3", "j=3"),
            ("power:k=x", "x"),
            ("poisson:r=1.5", ""),
            ("cheb:r=0.5", "r=0.5"),
            ("laplacian:k=2", "laplacian"),
        ] {
            let err = input.parse::<KernelSpec>().unwrap_err();
            match err {
                Error::KernelParse { token: t, .. } => {
                    if !token.is_empty() {
                        assert_eq!(t, token, "input {input}");
                    }
                }
                Error::InvalidKernelParameter(_) => {
                    assert_eq!(input, "poisson:r=1.5");
                }
                other => panic!("unexpected error for {input}: {other:?}"),
            }
        }
    }

    #[test]
    fn scalar_map_matches_matrix_construction() {
        let g = Graph::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 2)]).unwrap();
        let lhat = g.laplacian_hat();
        let base = eigh(&lhat).unwrap();
        for spec in [
            KernelSpec::Laplacian,
            KernelSpec::Power { k: 3 },
            KernelSpec::Linear,
            KernelSpec::Poisson { r: 0.5 },
            KernelSpec::Poisson { r: -0.3 },
            KernelSpec::ChebyshevPartial { r: 0.5, k: 6 },
        ] {
            let kernel = build_kernel(&g, &spec).unwrap();
            let mut mapped: Vec<f64> = base
                .eigenvalues
                .iter()
                .map(|&x| spec.eigenvalue_map(x))
                .collect();
            mapped.sort_by(|a, b| a.total_cmp(b));
            let got = eigh(&kernel).unwrap().eigenvalues;
            for (a, b) in got.iter().zip(mapped.iter()) {
                assert!((a - b).abs() <= 1e-8, "{spec}: {a} vs {b}");
            }
        }
    }
}
