use super::klein::{compressed_site, compressed_tensor, klein_projector};
use super::ReplicaVariant;
use crate::error::{Error, Result};
use crate::mps::{Boundary, Mps};
use crate::tensor::{contract, zgemm, zgemm_strided, DenseTensor, C64, ONE, ZERO};

/// Largest replica site tensor that is materialized.
pub const MATERIALIZE_LIMIT: usize = 1 << 24;

/// Site tensors `B_k` of the replica MPS, shape `(χ'_l, d^(n), χ'_r)`.
///
/// Uncompressed bonds index the `2n` copies with copy 0 slowest; copy `c`
/// of the conjugated variant holds `A*` when `c` is odd.
#[derive(Clone, Debug)]
pub struct ReplicaTensorSet {
    pub n: usize,
    pub variant: ReplicaVariant,
    pub tensors: Vec<DenseTensor>,
}

impl ReplicaTensorSet {
    pub fn phys_dim(&self) -> usize {
        self.tensors[0].shape()[1]
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.tensors.iter().map(|t| t.shape()[0]).collect();
        b.push(self.tensors[self.tensors.len() - 1].shape()[2]);
        b
    }

    /// `ln ⟨Φ|Φ⟩`.
    pub fn log_norm_squared(&self) -> f64 {
        generic_log_norm(&self.tensors)
    }
}

/// Open-chain `ln ⟨Φ|Φ⟩` for site tensors of any physical dimension.
pub(crate) fn generic_log_norm(tensors: &[DenseTensor]) -> f64 {
    let mut e = vec![ONE];
    let mut m = 1;
    let mut log = 0.0;
    for t in tensors {
        let (d, r) = (t.shape()[1], t.shape()[2]);
        let mut x = vec![ZERO; m * d * r];
        zgemm(m, m, d * r, &e, t.data(), 0.0, &mut x);
        let tc: Vec<C64> = t.data().iter().map(|z| z.conj()).collect();
        let mut en = vec![ZERO; r * r];
        zgemm_strided(r, m * d, r, &tc, (1, r), &x, (r, 1), 0.0, &mut en, (r, 1));
        let s = en.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if s == 0.0 {
            return f64::NEG_INFINITY;
        }
        en.iter_mut().for_each(|z| *z /= s);
        log += s.ln();
        e = en;
        m = r;
    }
    log + e[0].re.ln()
}

/// `(x₁ x₂, y₁ y₂, z₁ z₂)` Kronecker product of rank-3 tensors.
fn kron3(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    let (sa, sb) = (a.shape(), b.shape());
    DenseTensor::from_fn(&[sa[0] * sb[0], sa[1] * sb[1], sa[2] * sb[2]], |ix| {
        a.get(&[ix[0] / sb[0], ix[1] / sb[1], ix[2] / sb[2]]) * b.get(&[ix[0] % sb[0], ix[1] % sb[1], ix[2] % sb[2]])
    })
}

/// `⊗_c Â_c` with `Â_c = A*` on conjugated copies.
pub(crate) fn copy_product(a: &DenseTensor, conj_mask: &[bool]) -> DenseTensor {
    let mut acc = DenseTensor::from_fn(&[1, 1, 1], |_| ONE);
    for &c in conj_mask {
        acc = kron3(&acc, &if c { a.conj() } else { a.clone() });
    }
    acc
}

/// Materialize the replica MPS of an open chain.
pub fn build_replica(psi: &Mps, n: usize, variant: ReplicaVariant) -> Result<ReplicaTensorSet> {
    variant.check(n)?;
    if psi.boundary() != Boundary::Open {
        return Err(Error::Precondition("replica tensors are built for open chains".into()));
    }
    let gamma = variant.gamma(n)?;
    let mask = variant.conj_mask(n);
    let tensors = match variant {
        ReplicaVariant::SymmetricCompressed => {
            let bonds = psi.bond_dims();
            let qs: Vec<_> = bonds.iter().map(|&b| klein_projector(b)).collect();
            psi.tensors()
                .iter()
                .enumerate()
                .map(|(k, a)| compressed_tensor(&compressed_site(a, &gamma, &qs[k], &qs[k + 1])))
                .collect::<Result<Vec<_>>>()?
        }
        _ => psi
            .tensors()
            .iter()
            .map(|a| {
                let size = a.shape()[0].pow(2 * n as u32) * gamma.nrows() * a.shape()[2].pow(2 * n as u32);
                if size > MATERIALIZE_LIMIT {
                    return Err(Error::SizeGuard {
                        what: "replica site entries",
                        value: size,
                        limit: MATERIALIZE_LIMIT,
                    });
                }
                let c = copy_product(a, &mask);
                contract(&gamma, &c, &[(1, 1)])?.permute(&[1, 0, 2])
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(ReplicaTensorSet { n, variant, tensors })
}
