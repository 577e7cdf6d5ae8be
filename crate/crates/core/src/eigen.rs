//! Lowest eigenpairs of the real symmetric Hamiltonian.
//!
//! Small spaces go through a dense symmetric eigensolver. Larger ones use a
//! block Davidson iteration: a Krylov-like subspace grown by
//! diagonally-preconditioned residuals, fully reorthogonalized, with
//! Rayleigh-Ritz on the projected matrix and thick restarts that keep the
//! lowest Ritz vectors. The Rydberg Hamiltonian is strongly diagonally
//! dominant (interactions reach hundreds of MHz while Ω is a few MHz), which
//! is exactly where the diagonal preconditioner pays off.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{domain, Error, Result};
use crate::hamiltonian::{DiagonalCache, HamiltonianParams};

/// Largest dimension handled by dense diagonalization.
pub const DENSE_MAX_DIM: usize = 256;

/// Residual tolerance relative to the norm of H.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeOptions {
    /// Subspace size that triggers a restart.
    pub max_basis: usize,
    /// Residual bound relative to `norm_estimate`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl IterativeOptions {
    pub fn for_count(k: usize) -> Self {
        Self {
            max_basis: (4 * k + 24).max(40),
            tolerance: RESIDUAL_TOLERANCE,
            max_iterations: 5000,
        }
    }
}

/// Lowest `k` eigenpairs of H(params), gauge-fixed so that the first entry of
/// largest magnitude is positive.
///
/// `warm` may hold approximate eigenvectors (e.g. from a nearby time); they
/// seed the iterative path and are ignored by the dense one.
pub fn lowest_eigenpairs(cache: &DiagonalCache, params: HamiltonianParams, k: usize, warm: &[Vec<f64>]) -> Result<EigenPairs> {
    let dim = cache.dim();
    if k == 0 || k > dim {
        return domain(format!("requested {k} eigenpairs of a {dim}-dimensional Hamiltonian"));
    }
    let mut pairs = if dim <= DENSE_MAX_DIM || 4 * k >= dim {
        dense_lowest(&cache.dense(params), k)
    } else {
        let diagonal = cache.diagonal(params.detuning);
        // max |H_ii| never exceeds ‖H‖, so the residual test is at least as strict as requested.
        let norm = diagonal.iter().fold(params.rabi.abs(), |m, d| m.max(d.abs()));
        davidson_lowest(
            |x, y| cache.apply(params, x, y),
            &diagonal,
            norm,
            k,
            warm,
            &IterativeOptions::for_count(k),
        )?
    };
    pairs.vectors.iter_mut().for_each(|v| fix_sign(v));
    Ok(pairs)
}

/// Dense symmetric diagonalization, lowest `k` pairs.
pub fn dense_lowest(matrix: &DMatrix<f64>, k: usize) -> EigenPairs {
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let take = k.min(order.len());
    EigenPairs {
        values: order[..take].iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order[..take]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect(),
    }
}

/// Make the first component of (near-)maximal magnitude positive.
pub fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(lead) = v.iter().find(|x| x.abs() >= max * (1.0 - 1e-8)) {
        if *lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Growing orthonormal subspace with images and projected matrix.
struct Subspace {
    basis: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
    projected: DMatrix<f64>,
}

impl Subspace {
    fn new(capacity: usize) -> Self {
        Self {
            basis: Vec::with_capacity(capacity),
            images: Vec::with_capacity(capacity),
            projected: DMatrix::zeros(capacity, capacity),
        }
    }

    fn len(&self) -> usize {
        self.basis.len()
    }

    /// Orthonormalize `v` against the basis and append it; false if it was
    /// (numerically) already contained.
    fn push<A>(&mut self, mut v: Vec<f64>, apply: &A) -> Result<bool>
    where
        A: Fn(&[f64], &mut [f64]) -> Result<()>,
    {
        if !orthonormalize_against(&mut v, &self.basis) {
            return Ok(false);
        }
        let mut av = vec![0.0; v.len()];
        apply(&v, &mut av)?;
        let j = self.basis.len();
        for (i, b) in self.basis.iter().enumerate() {
            let g = dot(b, &av);
            self.projected[(i, j)] = g;
            self.projected[(j, i)] = g;
        }
        self.projected[(j, j)] = dot(&v, &av);
        self.basis.push(v);
        self.images.push(av);
        Ok(true)
    }

    /// Replace the basis by Ritz vectors whose images are already known.
    fn reset(&mut self, vectors: Vec<Vec<f64>>, images: Vec<Vec<f64>>) {
        self.basis = vectors;
        self.images = images;
        reorthonormalize(&mut self.basis, &mut self.images);
        let m = self.basis.len();
        for i in 0..m {
            for j in i..m {
                let g = dot(&self.basis[i], &self.images[j]);
                self.projected[(i, j)] = g;
                self.projected[(j, i)] = g;
            }
        }
    }
}

struct Ritz {
    value: f64,
    vector: Vec<f64>,
    image: Vec<f64>,
    residual: Vec<f64>,
    residual_norm: f64,
}

/// Block Davidson for the `k` lowest eigenpairs of a symmetric operator with
/// diagonal `diagonal`. Converged when every residual is below
/// `options.tolerance · norm_estimate`.
pub fn davidson_lowest<A>(
    apply: A,
    diagonal: &[f64],
    norm_estimate: f64,
    k: usize,
    warm: &[Vec<f64>],
    options: &IterativeOptions,
) -> Result<EigenPairs>
where
    A: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    let dim = diagonal.len();
    if k == 0 || k > dim {
        return domain(format!("requested {k} eigenpairs of a {dim}-dimensional operator"));
    }
    let max_basis = options.max_basis.max(3 * k).min(dim);
    let keep = (2 * k).max(k + 2).min(max_basis - k).max(k);
    let threshold = options.tolerance * norm_estimate.max(f64::MIN_POSITIVE);
    let mut seed = 0x9E37_79B9_7F4A_7C15u64;

    let mut space = Subspace::new(max_basis);
    for w in warm.iter().filter(|w| w.len() == dim).take(max_basis / 2) {
        space.push(w.clone(), &apply)?;
    }
    // Seed the lowest diagonal entries, plus one random direction so that no
    // symmetry sector is excluded from the start.
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| diagonal[a].total_cmp(&diagonal[b]).then(a.cmp(&b)));
    for &i in order.iter().take(k) {
        if space.len() > k {
            break;
        }
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        space.push(e, &apply)?;
    }
    space.push(random_vector(dim, &mut seed), &apply)?;

    let mut worst = f64::INFINITY;
    for _ in 0..options.max_iterations {
        let ritz = rayleigh_ritz(&space, keep.min(space.len()));
        worst = ritz.iter().take(k).map(|r| r.residual_norm).fold(0.0, f64::max);
        if worst <= threshold || space.len() == dim {
            let mut ritz = ritz;
            ritz.truncate(k);
            return Ok(EigenPairs {
                values: ritz.iter().map(|r| r.value).collect(),
                vectors: ritz.into_iter().map(|r| r.vector).collect(),
            });
        }

        let corrections: Vec<Vec<f64>> = ritz
            .iter()
            .take(k)
            .filter(|r| r.residual_norm > threshold)
            .map(|r| olsen_correction(r, diagonal))
            .collect();

        if space.len() + corrections.len() > max_basis {
            let (vectors, images) = ritz.into_iter().map(|r| (r.vector, r.image)).unzip();
            space.reset(vectors, images);
        }
        let mut added = 0;
        for c in corrections {
            if space.len() < max_basis && space.push(c, &apply)? {
                added += 1;
            }
        }
        if added == 0 && space.len() < max_basis {
            space.push(random_vector(dim, &mut seed), &apply)?;
        }
    }
    Err(Error::NoConvergence {
        iterations: options.max_iterations,
        residual: worst,
    })
}

fn rayleigh_ritz(space: &Subspace, count: usize) -> Vec<Ritz> {
    let m = space.len();
    let eig = SymmetricEigen::new(space.projected.view((0, 0), (m, m)).into_owned());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order
        .into_iter()
        .take(count)
        .map(|col| {
            let s = eig.eigenvectors.column(col);
            let vector = combine(&space.basis, s.as_slice());
            let image = combine(&space.images, s.as_slice());
            let value = eig.eigenvalues[col];
            let residual: Vec<f64> = image.iter().zip(&vector).map(|(a, b)| a - value * b).collect();
            let residual_norm = dot(&residual, &residual).sqrt();
            Ritz {
                value,
                vector,
                image,
                residual,
                residual_norm,
            }
        })
        .collect()
}

/// Olsen's correction t = M⁻¹r − ε M⁻¹y with M = D − θ and ε chosen so that
/// t ⟂ y. Plain M⁻¹r stalls once y is close to a single basis state.
fn olsen_correction(ritz: &Ritz, diagonal: &[f64]) -> Vec<f64> {
    let inverse: Vec<f64> = diagonal
        .iter()
        .map(|d| {
            let m = d - ritz.value;
            1.0 / if m.abs() < 1e-8 { 1e-8f64.copysign(m) } else { m }
        })
        .collect();
    let mr: Vec<f64> = ritz.residual.iter().zip(&inverse).map(|(r, i)| r * i).collect();
    let my: Vec<f64> = ritz.vector.iter().zip(&inverse).map(|(y, i)| y * i).collect();
    let denom = dot(&ritz.vector, &my);
    let eps = if denom.abs() > 0.0 { dot(&ritz.vector, &mr) / denom } else { 0.0 };
    mr.iter().zip(&my).map(|(a, b)| a - eps * b).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn combine(vectors: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; vectors[0].len()];
    for (v, &c) in vectors.iter().zip(coeffs) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
    out
}

/// Two passes of classical Gram-Schmidt; false if nothing survives.
fn orthonormalize_against(v: &mut [f64], basis: &[Vec<f64>]) -> bool {
    let before = dot(v, v).sqrt();
    if before == 0.0 || !before.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= before);
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    let after = dot(v, v).sqrt();
    if after <= 1e-10 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= after);
    true
}

/// Modified Gram-Schmidt on the basis, applying the same linear map to the images.
fn reorthonormalize(basis: &mut [Vec<f64>], images: &mut [Vec<f64>]) {
    for i in 0..basis.len() {
        for j in 0..i {
            let c = dot(&basis[j], &basis[i]);
            let (head, tail) = basis.split_at_mut(i);
            tail[0].iter_mut().zip(&head[j]).for_each(|(x, y)| *x -= c * y);
            let (ihead, itail) = images.split_at_mut(i);
            itail[0].iter_mut().zip(&ihead[j]).for_each(|(x, y)| *x -= c * y);
        }
        let n = dot(&basis[i], &basis[i]).sqrt();
        basis[i].iter_mut().for_each(|x| *x /= n);
        images[i].iter_mut().for_each(|x| *x /= n);
    }
}

/// Deterministic pseudo-random vector (splitmix64).
fn random_vector(dim: usize, state: &mut u64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim)
        .map(|_| {
            *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = *state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    normalize(&mut v);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::LatticeSpec;

    fn residual(cache: &DiagonalCache, params: HamiltonianParams, value: f64, v: &[f64]) -> f64 {
        let hv = cache.apply_new(params, v).unwrap();
        hv.iter().zip(v).map(|(a, b)| (a - value * b).powi(2)).sum::<f64>().sqrt()
    }

    fn iterative(cache: &DiagonalCache, params: HamiltonianParams, k: usize, warm: &[Vec<f64>]) -> EigenPairs {
        let diagonal = cache.diagonal(params.detuning);
        let norm = diagonal.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        davidson_lowest(
            |x, y| cache.apply(params, x, y),
            &diagonal,
            norm,
            k,
            warm,
            &IterativeOptions::for_count(k),
        )
        .unwrap()
    }

    #[test]
    fn iterative_matches_dense() {
        let spec = LatticeSpec::standard(9).unwrap();
        let cache = DiagonalCache::new(&spec).unwrap();
        for (rabi, detuning) in [(2.0, 3.0), (2.0, -10.0), (0.3, 10.0), (2.0, 0.5)] {
            let params = HamiltonianParams::new(rabi, detuning).unwrap();
            let dense = dense_lowest(&cache.dense(params), 5);
            let iter = iterative(&cache, params, 5, &[]);
            for i in 0..5 {
                assert!((dense.values[i] - iter.values[i]).abs() < 1e-9, "level {i} at ({rabi}, {detuning})");
                assert!(residual(&cache, params, iter.values[i], &iter.vectors[i]) < 1e-9 * 600.0);
            }
        }
    }

    #[test]
    fn warm_start_and_classical_limit() {
        let spec = LatticeSpec::standard(10).unwrap();
        let cache = DiagonalCache::new(&spec).unwrap();
        let params = HamiltonianParams::new(0.0, -1.0).unwrap();
        let pairs = lowest_eigenpairs(&cache, params, 1, &[]).unwrap();
        assert!(pairs.values[0].abs() < 1e-9);
        assert!((pairs.vectors[0][0] - 1.0).abs() < 1e-9);

        let p1 = HamiltonianParams::new(2.0, 1.0).unwrap();
        let p2 = HamiltonianParams::new(2.0, 1.01).unwrap();
        let a = lowest_eigenpairs(&cache, p1, 2, &[]).unwrap();
        let b = lowest_eigenpairs(&cache, p2, 2, &a.vectors).unwrap();
        let c = lowest_eigenpairs(&cache, p2, 2, &[]).unwrap();
        assert!((b.values[0] - c.values[0]).abs() < 1e-9);
        assert!((b.values[1] - c.values[1]).abs() < 1e-9);
    }

    #[test]
    fn sign_gauge() {
        let mut v = vec![0.1, -0.7, 0.7];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.7, -0.7]);
    }

    #[test]
    fn rejects_bad_counts() {
        let cache = DiagonalCache::new(&LatticeSpec::standard(2).unwrap()).unwrap();
        assert!(lowest_eigenpairs(&cache, HamiltonianParams::default(), 0, &[]).is_err());
        assert!(lowest_eigenpairs(&cache, HamiltonianParams::default(), 5, &[]).is_err());
    }
}
