use super::{Graph, GraphError};

pub const MAX_EXACT_CONDUCTANCE_VERTICES: usize = 24;

/// Exact conductance as a reduced-or-not fraction `(cut_edges, volume)`.
///
/// Enumerates the `2^(n-1)` cuts `{S, V \ S}` with vertex 0 in `S`, in
/// Gray-code order so each cut is obtained from the previous one by moving
/// a single vertex. For each cut the side of smaller volume is the one
/// measured.
pub fn conductance_exact_ratio(g: &Graph) -> Result<(u64, u64), GraphError> {
    let n = g.vertex_count();
    if n > MAX_EXACT_CONDUCTANCE_VERTICES {
        return Err(GraphError::TooLargeForExact { n, max: MAX_EXACT_CONDUCTANCE_VERTICES });
    }
    g.require_connected()?;
    if n < 2 {
        return Err(GraphError::Disconnected);
    }
    let nbr: Vec<u32> = (0..n)
        .map(|u| g.neighbors(u).iter().fold(0u32, |m, &v| m | 1 << v))
        .collect();
    let deg: Vec<u64> = g.degrees().map(|d| d as u64).collect();
    let total: u64 = deg.iter().sum();

    let mut set: u32 = 1;
    let mut cut = deg[0];
    let mut vol = deg[0];
    let mut best: Option<(u64, u64)> = None;
    let mut consider = |cut: u64, vol: u64| {
        let side = vol.min(total - vol);
        if side == 0 {
            return;
        }
        match best {
            Some((bc, bv)) if cut * bv >= bc * side => {}
            _ => best = Some((cut, side)),
        }
    };
    consider(cut, vol);
    let free = n - 1;
    for i in 1u64..(1u64 << free) {
        // Gray code step: flip bit trailing_zeros(i) of the free vertices.
        let v = i.trailing_zeros() as usize + 1;
        let bit = 1u32 << v;
        let inside = (nbr[v] & set).count_ones() as u64;
        if set & bit == 0 {
            cut = cut + deg[v] - 2 * inside;
            vol += deg[v];
        } else {
            cut = cut + 2 * inside - deg[v];
            vol -= deg[v];
        }
        set ^= bit;
        consider(cut, vol);
    }
    Ok(best.expect("a connected graph on >= 2 vertices has a proper cut"))
}

/// Exact conductance `min |E(S, V\S)| / vol(S)` over `0 < vol(S) <= vol(V)/2`.
pub fn conductance_exact(g: &Graph) -> Result<f64, GraphError> {
    conductance_exact_ratio(g).map(|(c, v)| c as f64 / v as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralCertificate {
    /// Estimate of the second largest eigenvalue of `A / d`.
    pub lambda2: f64,
    /// Norm of the eigen-residual at the final iterate.
    pub residual: f64,
    pub iterations: usize,
    /// `(1 - lambda2_upper) / 2` with `lambda2_upper = lambda2 + 2 * residual`.
    pub lower_bound: f64,
}

const POWER_TOLERANCE: f64 = 1e-8;
const POWER_MAX_ITERATIONS: usize = 200_000;

/// Cheeger-type lower bound on the conductance of a regular graph.
///
/// Power iteration runs on `M = (I + A/d) / 2`, whose spectrum lies in
/// `[0, 1]`, restricted to the complement of the constant vector; the
/// top eigenvalue there is `(1 + lambda2) / 2`. The Rayleigh quotient
/// `theta` plus the residual norm bounds that eigenvalue from above once
/// the iterate is dominated by the top eigenvector, and the returned
/// bound uses that upper estimate.
pub fn conductance_spectral_lower(g: &Graph) -> Result<SpectralCertificate, GraphError> {
    let n = g.vertex_count();
    let d = g.regular_degree().ok_or(GraphError::NotRegular)?;
    if n < 2 || d == 0 {
        return Err(GraphError::Disconnected);
    }
    let inv_d = 1.0 / d as f64;
    let apply = |x: &[f64], y: &mut [f64]| {
        for (u, yu) in y.iter_mut().enumerate() {
            let s: f64 = g.neighbors(u).iter().map(|&v| x[v as usize]).sum();
            *yu = 0.5 * (x[u] + s * inv_d);
        }
    };
    let project = |x: &mut [f64]| {
        let mean = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|v| *v -= mean);
    };
    let normalize = |x: &mut [f64]| -> f64 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        norm
    };

    // Deterministic pseudo-random start (splitmix-style hash of the index).
    let mut x: Vec<f64> = (0..n as u64)
        .map(|i| {
            let mut z = i.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    project(&mut x);
    normalize(&mut x);
    let mut y = vec![0.0; n];
    let mut theta = f64::NAN;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < POWER_MAX_ITERATIONS {
        iterations += 1;
        apply(&x, &mut y);
        project(&mut y);
        let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - next * a).powi(2))
            .sum::<f64>()
            .sqrt();
        theta = next;
        if residual <= POWER_TOLERANCE || y.iter().all(|&v| v == 0.0) {
            break;
        }
        std::mem::swap(&mut x, &mut y);
        normalize(&mut x);
    }
    let lambda2 = 2.0 * theta - 1.0;
    let lower_bound = (1.0 - theta - residual).max(0.0);
    Ok(SpectralCertificate { lambda2, residual, iterations, lower_bound })
}
