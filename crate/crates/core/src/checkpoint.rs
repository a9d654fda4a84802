//! Binary checkpoints for bit-exact restarts.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `MMP1` |
//! | 4     | format version (`u32`, currently 1) |
//! | 4     | grid size `n` (`u32`) |
//! | 4     | system variant id (`u32`) |
//! | 40    | `mu, chi, kappa, eta, nu` (`f64`) |
//! | 24    | `alpha` (`f64 × 3`) |
//! | 8     | `r` (`f64`) |
//! | 8     | `t` (`f64`) |
//! | 8     | step count (`u64`) |
//! | 8     | RNG seed (`u64`) |
//!
//! followed by nine coefficient arrays `u₁ u₂ u₃ ω₁ ω₂ ω₃ m₁ m₂ m₃`, each
//! `n³` pairs `(re, im)` of `f64`, row-major over `(k₁, k₂, k₃)` with each
//! axis ordered `0, 1, …, n/2−1, −n/2, …, −1`.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, SpectralScalarField, SpectralVectorField};
use crate::state::{PhysParams, State, SystemVariant};

pub const MAGIC: &[u8; 4] = b"MMP1";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 40 + 24 + 8 + 8 + 8 + 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub variant: SystemVariant,
    pub params: PhysParams,
    pub step: u64,
    pub seed: u64,
    /// Carries the grid and the simulation time.
    pub state: State,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(format!("invalid checkpoint: {}", msg.into()))
}

pub fn encode(ckpt: &Checkpoint) -> Vec<u8> {
    let g = ckpt.state.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 9 * 16 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&ckpt.variant.id().to_le_bytes());
    let p = &ckpt.params;
    for x in [p.mu, p.chi, p.kappa, p.eta, p.nu, p.alpha[0], p.alpha[1], p.alpha[2], p.r, ckpt.state.t] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&ckpt.step.to_le_bytes());
    out.extend_from_slice(&ckpt.seed.to_le_bytes());
    for field in ckpt.state.fields() {
        for comp in field.components() {
            for z in comp.coeffs() {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.buf[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut r = Reader { buf: bytes, pos: 4 };
    let version = r.u32();
    if version != FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let n = r.u32() as usize;
    let grid = GridSpec::new(n).map_err(|e| bad(e.to_string()))?;
    let variant_id = r.u32();
    let variant = SystemVariant::from_id(variant_id)
        .ok_or_else(|| bad(format!("unknown variant id {variant_id}")))?;
    let (mu, chi, kappa, eta, nu) = (r.f64(), r.f64(), r.f64(), r.f64(), r.f64());
    let alpha = [r.f64(), r.f64(), r.f64()];
    let rr = r.f64();
    let t = r.f64();
    let step = r.u64();
    let seed = r.u64();

    let expected = HEADER_LEN + 9 * 16 * grid.len();
    if bytes.len() != expected {
        return Err(bad(format!(
            "length {} does not match {expected} expected for n = {n}",
            bytes.len()
        )));
    }
    let mut read_vector = || -> Result<SpectralVectorField> {
        let mut comps = Vec::with_capacity(3);
        for _ in 0..3 {
            let coeffs: Vec<Complex64> = (0..grid.len())
                .map(|_| Complex64::new(r.f64(), r.f64()))
                .collect();
            comps.push(SpectralScalarField::from_coeffs(grid, coeffs)?);
        }
        let [a, b, c]: [SpectralScalarField; 3] = comps.try_into().unwrap();
        SpectralVectorField::from_components([a, b, c])
    };
    let u = read_vector()?;
    let omega = read_vector()?;
    let magnetic = read_vector()?;
    Ok(Checkpoint {
        variant,
        params: PhysParams {
            mu,
            chi,
            kappa,
            eta,
            nu,
            alpha,
            r: rr,
        },
        step,
        seed,
        state: State {
            u,
            omega,
            magnetic,
            t,
        },
    })
}

pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    std::fs::write(path, encode(ckpt)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
