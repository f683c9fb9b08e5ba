//! Krylov-subspace approximation of the exponential action e^{tW} x.
//!
//! Each step builds an Arnoldi basis of dimension m for W (independent of
//! the step length), exponentiates the small augmented Hessenberg matrix
//! and keeps the step if the a posteriori error estimate is below the
//! tolerance; otherwise only the small exponential is recomputed with a
//! shorter step. The step-size control follows the scheme of the Expokit
//! `expv` routines.

use ndarray::{s, Array2};
use ndarray_linalg::Inverse;

use crate::error::{Error, Result};
use crate::liouville::Generator;
use crate::sparse::{C64, ONE, ZERO};

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn max_abs(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &Array2<C64>) -> f64 {
    a.columns().into_iter().map(|c| c.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    let nrm = norm1(a);
    let squarings = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a * C64::new(0.5f64.powi(squarings), 0.0);
    let id = Array2::<C64>::eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let u_inner = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u = a.dot(&(a6.dot(&u_inner) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1)));
    let v_inner = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = a6.dot(&v_inner) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let mut r = (&v - &u).inv()?.dot(&(&v + &u));
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Step controller settings.
#[derive(Debug, Clone, Copy)]
pub struct KrylovSettings {
    pub krylov_dim: usize,
    /// Local error tolerance per unit time, relative to the vector norm.
    pub tol: f64,
    pub max_step: f64,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        Self { krylov_dim: 30, tol: 1e-10, max_step: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct KrylovStats {
    pub steps: usize,
    pub rejected: usize,
    pub matvecs: usize,
}

/// Adaptive propagator; carries the step size from one call to the next.
#[derive(Debug, Clone)]
pub struct KrylovPropagator {
    settings: KrylovSettings,
    step: Option<f64>,
    pub stats: KrylovStats,
}

const SAFETY: f64 = 0.9;
const DELTA: f64 = 1.2;
const MAX_REJECT: usize = 20;

impl KrylovPropagator {
    pub fn new(settings: KrylovSettings) -> Self {
        assert!(settings.krylov_dim >= 2, "Krylov dimension must be at least 2");
        Self { settings, step: None, stats: KrylovStats::default() }
    }

    /// Replaces `x` by e^{duration W} x. `t0` only labels errors.
    pub fn advance<G: Generator + ?Sized>(&mut self, w: &G, x: &mut Vec<C64>, t0: f64, duration: f64) -> Result<()> {
        let n = x.len();
        let tol = self.settings.tol;
        let mut t = 0.0;
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(self.settings.krylov_dim + 1);
        while t < duration {
            let beta = norm2(x);
            if beta == 0.0 {
                return Ok(());
            }
            let m = self.settings.krylov_dim.min(n);
            basis.clear();
            basis.push(x.iter().map(|v| v / beta).collect());
            let mut h = Array2::<C64>::zeros((m + 2, m + 2));
            let mut avnorm: f64 = 0.0;
            let mut breakdown = None;
            for j in 0..m {
                let mut p = w.apply_vec(&basis[j]);
                self.stats.matvecs += 1;
                avnorm = avnorm.max(norm2(&p));
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(v, &p);
                    h[[i, j]] = hij;
                    axpy(-hij, v, &mut p);
                }
                let s = norm2(&p);
                if !s.is_finite() {
                    return Err(Error::KrylovBreakdown { time: t0 + t, reason: "non-finite Arnoldi vector".into() });
                }
                if s <= 1e-14 * avnorm.max(1e-300) {
                    breakdown = Some(j + 1);
                    break;
                }
                h[[j + 1, j]] = C64::new(s, 0.0);
                basis.push(p.iter().map(|v| v / s).collect());
            }

            let remaining = duration - t;
            let (dim, extra) = match breakdown {
                Some(k) => (k, 0),
                None => {
                    h[[m + 1, m]] = ONE;
                    avnorm = norm2(&w.apply_vec(&basis[m]));
                    self.stats.matvecs += 1;
                    (m, 2)
                }
            };

            let mut tau = match breakdown {
                Some(_) => remaining,
                None => self.step.unwrap_or(1.0 / avnorm.max(1e-12)).min(remaining).min(self.settings.max_step),
            };
            let mut rejected = 0;
            let (f, err, order) = loop {
                let sub = h.slice(s![..dim + extra, ..dim + extra]).mapv(|v| v * tau);
                let f = expm(&sub.to_owned())?;
                if extra == 0 {
                    break (f, 0.0, 1.0);
                }
                let p1 = f[[m, 0]].norm() * beta;
                let p2 = f[[m + 1, 0]].norm() * beta * avnorm;
                let (err, order) = if p1 > 10.0 * p2 {
                    (p2, 1.0 / m as f64)
                } else if p1 > p2 {
                    (p1 * p2 / (p1 - p2), 1.0 / m as f64)
                } else {
                    (p1, 1.0 / (m as f64 - 1.0))
                };
                if err <= DELTA * tau * tol * beta {
                    break (f, err, order);
                }
                rejected += 1;
                self.stats.rejected += 1;
                if rejected > MAX_REJECT {
                    return Err(Error::KrylovBreakdown {
                        time: t0 + t,
                        reason: format!("step rejected {MAX_REJECT} times (error estimate {err:.3e})"),
                    });
                }
                tau *= (SAFETY * (tau * tol * beta / err).powf(order)).clamp(0.1, 0.9);
            };

            // x = β V f[:, 0] over the basis (including the m+1-th vector)
            let used = (dim + extra.min(1)).min(basis.len());
            x.iter_mut().for_each(|v| *v = ZERO);
            for (i, v) in basis.iter().take(used).enumerate() {
                axpy(f[[i, 0]] * beta, v, x);
            }
            t += tau;
            self.stats.steps += 1;
            if extra > 0 {
                let grow = if err > 0.0 { SAFETY * (tau * tol * beta / err).powf(order) } else { 5.0 };
                self.step = Some((tau * grow.clamp(0.2, 5.0)).min(self.settings.max_step));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOutcome {
    pub iterations: usize,
    /// Final ‖b - Op x‖₂ / ‖b‖₂ as tracked by the least-squares recurrence.
    pub relative_residual: f64,
}

/// Restarted GMRES for `op(x) = b`, starting from the given `x`.
pub fn gmres(
    op: &dyn Fn(&[C64]) -> Vec<C64>,
    b: &[C64],
    x: &mut [C64],
    restart: usize,
    rel_tol: f64,
    max_iter: usize,
) -> GmresOutcome {
    let bnorm = norm2(b).max(1e-300);
    let mut iterations = 0;
    loop {
        let ax = op(x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta / bnorm <= rel_tol || iterations >= max_iter {
            return GmresOutcome { iterations, relative_residual: beta / bnorm };
        }
        let mut basis = vec![r.iter().map(|v| v / beta).collect::<Vec<_>>()];
        let mut h = Array2::<C64>::zeros((restart + 1, restart));
        let mut cs = vec![0.0; restart];
        let mut sn = vec![ZERO; restart];
        let mut g = vec![ZERO; restart + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k = 0;
        while k < restart && iterations < max_iter {
            let mut w = op(&basis[k]);
            iterations += 1;
            for (i, v) in basis.iter().enumerate() {
                let hik = dot(v, &w);
                h[[i, k]] = hik;
                axpy(-hik, v, &mut w);
            }
            let wn = norm2(&w);
            h[[k + 1, k]] = C64::new(wn, 0.0);
            for i in 0..k {
                let (a, bb) = (h[[i, k]], h[[i + 1, k]]);
                h[[i, k]] = a * cs[i] + sn[i] * bb;
                h[[i + 1, k]] = -sn[i].conj() * a + bb * cs[i];
            }
            let (a, bb) = (h[[k, k]], h[[k + 1, k]]);
            let r = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if a.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = ONE;
            } else {
                cs[k] = a.norm() / r;
                sn[k] = (a / a.norm()) * bb.conj() / r;
            }
            h[[k, k]] = a * cs[k] + sn[k] * bb;
            h[[k + 1, k]] = ZERO;
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];
            k += 1;
            if g[k].norm() / bnorm <= rel_tol || wn <= 1e-14 * r {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution on the triangular k x k system
        let mut y = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= h[[i, j]] * y[j];
            }
            y[i] = acc / h[[i, i]];
        }
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, &basis[i], x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use ndarray_linalg::Eig;

    fn close(a: &Array2<C64>, b: &Array2<C64>, tol: f64) -> bool {
        (a - b).iter().all(|v| v.norm() <= tol)
    }

    #[test]
    fn expm_diagonal_and_nilpotent() {
        let d = arr2(&[[C64::new(1.0, 0.0), ZERO], [ZERO, C64::new(-2.0, 3.0)]]);
        let e = expm(&d).unwrap();
        assert!((e[[0, 0]] - C64::new(1f64.exp(), 0.0)).norm() < 1e-14);
        assert!((e[[1, 1]] - C64::new(-2.0, 3.0).exp()).norm() < 1e-14);

        let nil = arr2(&[[ZERO, C64::new(5.0, 0.0)], [ZERO, ZERO]]);
        let want = arr2(&[[ONE, C64::new(5.0, 0.0)], [ZERO, ONE]]);
        assert!(close(&expm(&nil).unwrap(), &want, 1e-13));
    }

    #[test]
    fn expm_matches_eigendecomposition() {
        // fixed non-normal matrix with a large norm to force squaring
        let a = Array2::from_shape_fn((6, 6), |(i, j)| {
            C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0) * 1.7
        });
        let (vals, vecs) = a.eig().unwrap();
        let expd = Array2::from_diag(&vals.mapv(|v| v.exp()));
        let want = vecs.dot(&expd).dot(&vecs.inv().unwrap());
        let got = expm(&a).unwrap();
        let scale = want.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(close(&got, &want, 1e-10 * scale));
        // e^A e^{-A} = 1
        let back = got.dot(&expm(&(-&a)).unwrap());
        assert!(close(&back, &Array2::eye(6), 1e-9));
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 40;
        let a = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                C64::new(4.0 + i as f64 * 0.1, 1.0)
            } else {
                C64::new(((i * 13 + j * 7) % 11) as f64 / 11.0 - 0.5, ((i + j) % 3) as f64 * 0.1) * 0.3
            }
        });
        let want: Vec<C64> = (0..n).map(|i| C64::new(i as f64, -(i as f64) * 0.5)).collect();
        let b = a.dot(&ndarray::Array1::from(want.clone())).to_vec();
        let op = |v: &[C64]| a.dot(&ndarray::ArrayView1::from(v)).to_vec();
        let mut x = vec![ZERO; n];
        let out = gmres(&op, &b, &mut x, 8, 1e-12, 500);
        assert!(out.relative_residual <= 1e-12, "{out:?}");
        let err = x.iter().zip(&want).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }
}
