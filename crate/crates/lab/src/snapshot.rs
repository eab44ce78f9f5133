//! Binary field snapshots.
//!
//! Layout, little-endian throughout:
//! `"LAEALAB1"`, domain kind (0 torus, 1 channel), bottom and top wall (0 none, 1 no-slip,
//! 2 free-slip), `Lx`, `Ly`, `nx`, `ny` (u64), `α`, `t`, step (u64), field count (u64), then
//! per field a u64 name length and the UTF-8 name, then per field `nx·ny` row-major f64 values.

use std::io::{Read, Write};
use std::path::Path;

use laelab_core::{DomainKind, DomainSpec, Grid, ScalarField, VectorField, WallCondition};
use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"LAEALAB1";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a snapshot file")]
    BadMagic,
    #[error("unsupported snapshot version {0:?}")]
    UnsupportedVersion(String),
    #[error("snapshot is truncated")]
    Truncated,
    #[error("snapshot header is malformed: {0}")]
    Malformed(String),
    #[error("snapshot is {found:?}, expected {expected:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error(transparent)]
    Io(std::io::Error),
}

impl From<std::io::Error> for SnapshotError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            SnapshotError::Truncated
        } else {
            SnapshotError::Io(e)
        }
    }
}

/// Named scalar components on a grid, with the model state they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub spec: DomainSpec,
    pub nx: usize,
    pub ny: usize,
    pub alpha: f64,
    pub t: f64,
    pub step: u64,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    /// A velocity snapshot with components `u1` and `u2`.
    pub fn velocity(grid: &Grid, alpha: f64, t: f64, step: u64, u: &VectorField) -> Self {
        Snapshot {
            spec: *grid.spec(),
            nx: grid.nx(),
            ny: grid.ny(),
            alpha,
            t,
            step,
            fields: vec![("u1".into(), u.c[0].data.clone()), ("u2".into(), u.c[1].data.clone())],
        }
    }

    /// The velocity stored by [`Snapshot::velocity`], checked against `grid`.
    pub fn to_velocity(&self, grid: &Grid) -> Result<VectorField, SnapshotError> {
        if (self.nx, self.ny) != (grid.nx(), grid.ny()) {
            return Err(SnapshotError::DimensionMismatch { expected: (grid.nx(), grid.ny()), found: (self.nx, self.ny) });
        }
        let get = |name: &str| {
            self.fields
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, d)| ScalarField::from_vec(grid, d.clone()))
                .ok_or_else(|| SnapshotError::Malformed(format!("missing field {name}")))
        };
        Ok(VectorField::new(get("u1")?, get("u2")?))
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<(), SnapshotError> {
        w.write_all(MAGIC)?;
        let (kind, walls) = match self.spec.kind {
            DomainKind::Torus => (0u8, [0u8, 0]),
            DomainKind::Channel { bottom, top } => (1, [wall_byte(bottom), wall_byte(top)]),
        };
        w.write_all(&[kind, walls[0], walls[1]])?;
        for v in [self.spec.lx, self.spec.ly] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [self.nx as u64, self.ny as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [self.alpha, self.t] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.step.to_le_bytes())?;
        w.write_all(&(self.fields.len() as u64).to_le_bytes())?;
        for (name, _) in &self.fields {
            w.write_all(&(name.len() as u64).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
        }
        for (name, data) in &self.fields {
            if data.len() != self.nx * self.ny {
                return Err(SnapshotError::Malformed(format!("field {name} has {} values", data.len())));
            }
            for v in data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, SnapshotError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            if magic[..7] == MAGIC[..7] {
                return Err(SnapshotError::UnsupportedVersion(String::from_utf8_lossy(&magic).into_owned()));
            }
            return Err(SnapshotError::BadMagic);
        }
        let mut b = [0u8; 3];
        r.read_exact(&mut b)?;
        let (lx, ly) = (read_f64(r)?, read_f64(r)?);
        let spec = match b[0] {
            0 if b[1] == 0 && b[2] == 0 => DomainSpec::torus(lx, ly),
            1 => DomainSpec::channel(lx, ly, byte_wall(b[1])?, byte_wall(b[2])?),
            _ => return Err(SnapshotError::Malformed(format!("domain bytes {b:?}"))),
        };
        let nx = read_len(r)?;
        let ny = read_len(r)?;
        let (alpha, t) = (read_f64(r)?, read_f64(r)?);
        let step = read_u64(r)?;
        let count = read_len(r)?;
        let mut names = Vec::new();
        for _ in 0..count {
            let len = read_len(r)?;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            names.push(String::from_utf8(buf).map_err(|_| SnapshotError::Malformed("field name is not UTF-8".into()))?);
        }
        let size = nx.checked_mul(ny).ok_or_else(|| SnapshotError::Malformed("grid size overflows".into()))?;
        let mut fields = Vec::new();
        for name in names {
            let mut data = Vec::new();
            for _ in 0..size {
                data.push(read_f64(r)?);
            }
            fields.push((name, data));
        }
        Ok(Snapshot { spec, nx, ny, alpha, t, step, fields })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, SnapshotError> {
        let mut out = Vec::new();
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<(), SnapshotError> {
        std::fs::write(path, self.to_bytes()?).map_err(SnapshotError::Io)
    }

    pub fn load(path: &Path) -> Result<Self, SnapshotError> {
        let bytes = std::fs::read(path).map_err(SnapshotError::Io)?;
        Self::read_from(&mut bytes.as_slice())
    }
}

fn wall_byte(w: WallCondition) -> u8 {
    match w {
        WallCondition::Dirichlet => 1,
        WallCondition::Neumann => 2,
    }
}

fn byte_wall(b: u8) -> Result<WallCondition, SnapshotError> {
    match b {
        1 => Ok(WallCondition::Dirichlet),
        2 => Ok(WallCondition::Neumann),
        _ => Err(SnapshotError::Malformed(format!("wall byte {b}"))),
    }
}

fn read_u64(r: &mut impl Read) -> Result<u64, SnapshotError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_len(r: &mut impl Read) -> Result<usize, SnapshotError> {
    let v = read_u64(r)?;
    // Lengths beyond this bound cannot come from a grid the solver can hold.
    if v > 1 << 32 {
        return Err(SnapshotError::Malformed(format!("length {v}")));
    }
    Ok(v as usize)
}

fn read_f64(r: &mut impl Read) -> Result<f64, SnapshotError> {
    Ok(f64::from_bits(read_u64(r)?))
}
