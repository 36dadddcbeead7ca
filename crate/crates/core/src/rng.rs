use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Deterministic generator for stream `stream` under `root`.
///
/// Monte-Carlo trials each get their own stream so results do not depend on
/// scheduling order.
pub fn stream_rng(root: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(root);
    rng.set_stream(stream);
    rng
}

pub(crate) fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniformly distributed direction on the unit sphere in `dim` dimensions.
pub(crate) fn unit_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let mut v = gaussian_vec(rng, dim);
        let n = norm(&v);
        if n > 1e-12 {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
