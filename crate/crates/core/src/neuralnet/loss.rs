//! Batch losses with analytic gradients. Every loss is averaged over the
//! batch so the learning rate does not depend on batch size.

use crate::error::{ensure, Result};
use crate::numkernel::euclidean;
use crate::scalar::Real;

/// Additive guard in the Siamese pair weight `1 / (‖x̂_i − x̂_j‖ + ε)`.
pub const SIAMESE_EPS: f64 = 1e-8;

/// Loss value and its gradient with respect to each input vector.
#[derive(Clone, Debug, PartialEq)]
pub struct LossGrad<T> {
    pub loss: T,
    pub grad: Vec<Vec<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripletLoss<T> {
    pub loss: T,
    pub grad_anchor: Vec<Vec<T>>,
    pub grad_close: Vec<Vec<T>>,
    pub grad_far: Vec<Vec<T>>,
    /// Number of triplets with an active hinge.
    pub active: usize,
}

fn same_lengths<T>(a: &[Vec<T>], b: &[Vec<T>], what: &str) -> Result<()> {
    ensure!(a.len() == b.len(), "{what}: batch sizes differ ({} vs {})", a.len(), b.len());
    ensure!(
        a.iter().zip(b).all(|(x, y)| x.len() == y.len()),
        "{what}: vector lengths differ"
    );
    Ok(())
}

/// `(x − y) / ‖x − y‖`, or zero when the vectors coincide.
fn unit_diff<T: Real>(x: &[T], y: &[T]) -> (T, Vec<T>) {
    let d = euclidean(x, y);
    if d > T::zero() {
        (d, x.iter().zip(y).map(|(&a, &b)| (a - b) / d).collect())
    } else {
        (d, vec![T::zero(); x.len()])
    }
}

/// Mean over the batch of `(‖a − c‖ − ‖a − f‖ + margin)⁺`.
pub fn triplet_loss<T: Real>(
    anchor: &[Vec<T>],
    close: &[Vec<T>],
    far: &[Vec<T>],
    margin: T,
) -> Result<TripletLoss<T>> {
    same_lengths(anchor, close, "triplet loss")?;
    same_lengths(anchor, far, "triplet loss")?;
    ensure!(margin >= T::zero(), "triplet margin must be nonnegative");
    let n = anchor.len();
    let inv = if n > 0 { T::one() / T::lit(n as f64) } else { T::zero() };
    let mut out = TripletLoss {
        loss: T::zero(),
        grad_anchor: Vec::with_capacity(n),
        grad_close: Vec::with_capacity(n),
        grad_far: Vec::with_capacity(n),
        active: 0,
    };
    for ((a, c), f) in anchor.iter().zip(close).zip(far) {
        let (dc, uc) = unit_diff(a, c);
        let (df, uf) = unit_diff(a, f);
        let hinge = dc - df + margin;
        if !hinge.is_finite() {
            // keep the failure visible instead of reading it as an inactive hinge
            out.loss += hinge.abs();
        }
        if hinge > T::zero() {
            out.loss += hinge * inv;
            out.active += 1;
            out.grad_anchor.push(uc.iter().zip(&uf).map(|(&p, &q)| (p - q) * inv).collect());
            out.grad_close.push(uc.iter().map(|&p| -p * inv).collect());
            out.grad_far.push(uf.iter().map(|&q| q * inv).collect());
        } else {
            out.grad_anchor.push(vec![T::zero(); a.len()]);
            out.grad_close.push(vec![T::zero(); a.len()]);
            out.grad_far.push(vec![T::zero(); a.len()]);
        }
    }
    Ok(out)
}

/// Mean squared Euclidean error; gradient with respect to `predicted`.
pub fn mse_loss<T: Real>(predicted: &[Vec<T>], target: &[Vec<T>]) -> Result<LossGrad<T>> {
    same_lengths(predicted, target, "MSE loss")?;
    squared_error(predicted, target)
}

/// Mean squared reconstruction error; gradient with respect to `reconstruction`.
pub fn ae_loss<T: Real>(input: &[Vec<T>], reconstruction: &[Vec<T>]) -> Result<LossGrad<T>> {
    same_lengths(input, reconstruction, "autoencoder loss")?;
    squared_error(reconstruction, input)
}

fn squared_error<T: Real>(x: &[Vec<T>], target: &[Vec<T>]) -> Result<LossGrad<T>> {
    let n = x.len();
    let inv = if n > 0 { T::one() / T::lit(n as f64) } else { T::zero() };
    let two = T::lit(2.0);
    let mut loss = T::zero();
    let grad = x
        .iter()
        .zip(target)
        .map(|(p, t)| {
            p.iter()
                .zip(t)
                .map(|(&a, &b)| {
                    let d = a - b;
                    loss += d * d * inv;
                    two * d * inv
                })
                .collect()
        })
        .collect();
    Ok(LossGrad { loss, grad })
}

/// Sammon-weighted pair stress between chart and embedding distances,
/// divided by the number of samples:
/// `(1/N) Σ_(i,j) γ_ij (‖x̂_i − x̂_j‖ − ‖v_i − v_j‖)²`
/// with `γ_ij = 1 / (‖x̂_i − x̂_j‖ + ε)` held constant when differentiating.
/// The gradient is with respect to `predicted`.
pub fn siamese_loss<T: Real>(
    predicted: &[Vec<T>],
    embeddings: &[Vec<T>],
    pairs: &[(usize, usize)],
) -> Result<LossGrad<T>> {
    ensure!(!pairs.is_empty(), "Siamese loss needs at least one pair");
    ensure!(
        predicted.len() == embeddings.len(),
        "Siamese loss: {} predictions for {} embeddings",
        predicted.len(),
        embeddings.len()
    );
    let n = predicted.len();
    ensure!(
        pairs.iter().all(|&(i, j)| i < n && j < n),
        "Siamese loss: pair index out of range"
    );
    let inv = T::one() / T::lit(n as f64);
    let eps = T::lit(SIAMESE_EPS);
    let two = T::lit(2.0);
    let mut loss = T::zero();
    let mut grad: Vec<Vec<T>> = predicted.iter().map(|p| vec![T::zero(); p.len()]).collect();
    for &(i, j) in pairs {
        let (dx, u) = unit_diff(&predicted[i], &predicted[j]);
        let dv = euclidean(&embeddings[i], &embeddings[j]);
        let gamma = T::one() / (dx + eps);
        let r = dx - dv;
        loss += gamma * r * r * inv;
        let k = two * gamma * r * inv;
        for (d, &uk) in u.iter().enumerate() {
            grad[i][d] += k * uk;
            grad[j][d] -= k * uk;
        }
    }
    Ok(LossGrad { loss, grad })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_boundaries() {
        let a = vec![vec![0.0, 0.0]];
        let f = vec![vec![10.0, 0.0]];
        let t = triplet_loss(&a, &a, &f, 10.0).unwrap();
        assert_eq!(t.loss, 0.0);
        assert_eq!(t.active, 0);
        let t = triplet_loss(&a, &a, &a, 10.0).unwrap();
        assert_eq!(t.loss, 10.0);
        // zero distances => zero distance gradients
        assert!(t.grad_anchor[0].iter().all(|&g| g == 0.0));
        assert!(triplet_loss(&a, &a, &f, -1.0).is_err());
        let bad = vec![vec![f64::INFINITY, 0.0]];
        assert!(!triplet_loss(&bad, &a, &bad, 1.0).unwrap().loss.is_finite());
    }

    #[test]
    fn mse_examples() {
        let p = vec![vec![0.0, 0.0]];
        let t = vec![vec![3.0, 4.0]];
        let r = mse_loss(&p, &t).unwrap();
        assert_eq!(r.loss, 25.0);
        assert_eq!(r.grad[0], vec![-6.0, -8.0]);
        assert_eq!(mse_loss(&t, &t).unwrap().loss, 0.0);
        assert!(mse_loss(&p, &[vec![1.0]]).is_err());
    }

    #[test]
    fn ae_examples() {
        let x = vec![vec![1.0, -2.0, 0.5, 3.0]];
        let r: Vec<Vec<f64>> = x.iter().map(|v| v.iter().map(|a| a + 1.0).collect()).collect();
        assert_eq!(ae_loss(&x, &r).unwrap().loss, 4.0);
        assert_eq!(ae_loss(&x, &x).unwrap().loss, 0.0);
    }

    #[test]
    fn siamese_examples() {
        let x: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![2.0, 0.0]];
        let v = vec![vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        // one pair, chart distance 2, embedding distance 1: (1/2)(2-1)^2, over N = 2
        let r = siamese_loss(&x, &v, &[(0, 1)]).unwrap();
        assert!((r.loss - 0.5 * 1.0 / 2.0).abs() < 1e-8);
        let same: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
        assert!(siamese_loss(&same, &v, &[(0, 1)]).unwrap().loss.abs() < 1e-15);
        assert!(siamese_loss(&x, &v, &[]).is_err());
        assert!(siamese_loss(&x, &v, &[(0, 2)]).is_err());
    }
}
