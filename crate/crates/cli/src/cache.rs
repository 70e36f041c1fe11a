//! On-disk cache of the adaptive basis.
//!
//! Layout (little endian): magic `QABBASIS`, format version `u32`, width,
//! height, `T` and the vector cap as `u64`, planck and cutoff as `f64`, the
//! SHA-256 of the smoothed potential, then `T` energies and `T` vectors of
//! `width * height` values each. A file is reused only when every header
//! field and the hash match the request.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qabpnp_core::denoise::{basis_request, QabDenoiser, ThresholdSpec};
use qabpnp_core::image::Image;
use qabpnp_core::qab::{assemble_hamiltonian, eigendecompose, prepare_potential, QabBasis, QabConfig};
use sha2::{Digest, Sha256};

const MAGIC: &[u8; 8] = b"QABBASIS";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheKey {
    pub width: usize,
    pub height: usize,
    pub cap: usize,
    pub planck: f64,
    pub cutoff: f64,
    pub potential_hash: [u8; 32],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Disabled,
    Hit,
    Miss,
}

pub fn potential_hash(potential: &Image) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((potential.width() as u64).to_le_bytes());
    h.update((potential.height() as u64).to_le_bytes());
    for v in potential.pixels() {
        h.update(v.to_le_bytes());
    }
    h.finalize().into()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cache_path(dir: &Path, key: &CacheKey) -> PathBuf {
    dir.join(format!("basis-{}.bin", hex(&key.potential_hash[..8])))
}

pub fn encode(basis: &QabBasis, key: &CacheKey) -> Vec<u8> {
    let mut out = Vec::with_capacity(96 + 8 * basis.len() * (1 + basis.dim()));
    out.extend_from_slice(MAGIC);
    out.extend(VERSION.to_le_bytes());
    for v in [key.width, key.height, basis.len(), key.cap] {
        out.extend((v as u64).to_le_bytes());
    }
    out.extend(key.planck.to_le_bytes());
    out.extend(key.cutoff.to_le_bytes());
    out.extend(key.potential_hash);
    for e in basis.energies() {
        out.extend(e.to_le_bytes());
    }
    for v in basis.vectors() {
        for x in v {
            out.extend(x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).context("cache length overflow")?;
        let s = self.bytes.get(self.pos..end).context("cache file is truncated")?;
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into()?))
    }
}

/// Decodes a cache file, failing unless it was written for `key`.
pub fn decode(bytes: &[u8], key: &CacheKey) -> Result<QabBasis> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        bail!("not a basis cache file");
    }
    if u32::from_le_bytes(r.take(4)?.try_into()?) != VERSION {
        bail!("unsupported basis cache version");
    }
    let width = r.u64()? as usize;
    let height = r.u64()? as usize;
    let t = r.u64()? as usize;
    let cap = r.u64()? as usize;
    let planck = r.f64()?;
    let cutoff = r.f64()?;
    let hash: [u8; 32] = r.take(32)?.try_into()?;
    let found = CacheKey {
        width,
        height,
        cap,
        planck,
        cutoff,
        potential_hash: hash,
    };
    if found.width != key.width
        || found.height != key.height
        || found.cap != key.cap
        || found.planck.to_bits() != key.planck.to_bits()
        || found.cutoff.to_bits() != key.cutoff.to_bits()
        || found.potential_hash != key.potential_hash
    {
        bail!("basis cache is stale");
    }
    let n = width.checked_mul(height).context("cache size overflow")?;
    if bytes.len() != r.pos + 8 * t * (1 + n) {
        bail!("basis cache has the wrong length");
    }
    let energies = (0..t).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let mut vectors = Vec::with_capacity(t);
    for _ in 0..t {
        vectors.push((0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?);
    }
    Ok(QabBasis::from_parts(width, height, energies, vectors)?)
}

/// Builds the denoiser for `observation`, going through the cache in `dir`
/// when one is given. Cache IO problems only cost a rebuild.
pub fn cached_denoiser(
    observation: &Image,
    cfg: &QabConfig,
    spec: ThresholdSpec,
    use_omp: bool,
    dir: Option<&Path>,
) -> Result<(QabDenoiser, CacheStatus)> {
    let Some(dir) = dir else {
        return Ok((QabDenoiser::from_observation(observation, cfg, spec, use_omp)?, CacheStatus::Disabled));
    };
    cfg.validate()?;
    let potential = prepare_potential(observation, cfg.sigma_smooth)?;
    let (cutoff, cap) = basis_request(cfg, &spec, use_omp, observation.len());
    let key = CacheKey {
        width: observation.width(),
        height: observation.height(),
        cap,
        planck: cfg.planck,
        cutoff,
        potential_hash: potential_hash(&potential),
    };
    let path = cache_path(dir, &key);
    if let Ok(bytes) = fs::read(&path) {
        if let Ok(basis) = decode(&bytes, &key) {
            return Ok((QabDenoiser::new(basis, spec, use_omp), CacheStatus::Hit));
        }
    }
    let h = assemble_hamiltonian(&potential, cfg.planck)?;
    let basis = eigendecompose(&h, cutoff, cap)?;
    let written = fs::create_dir_all(dir).and_then(|_| fs::write(&path, encode(&basis, &key)));
    if let Err(e) = written {
        eprintln!("warning: could not write basis cache {}: {e}", path.display());
    }
    Ok((QabDenoiser::new(basis, spec, use_omp), CacheStatus::Miss))
}
