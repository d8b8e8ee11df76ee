//! On-disk formats for sampled objects and run manifests.
//!
//! Every JSON document carries `schema_version`. The binary record is
//!
//! ```text
//! magic "CMAPBIN\0" | u32 LE schema_version | u64 LE seed | varint replicate
//! | varint len, family utf-8 | varint len, tree varints (see PlanarTree)
//! | zigzag varint labels (one per white vertex) | i8 epsilon
//! | varint n_vertices | varint n_half_edges | varint vertex_of[h]...
//! | varint next_around_vertex[h]... | varint root_arc | varint rho
//! ```
//!
//! Files are written once: an existing path is an error.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bijections::Mobile;
use crate::error::{Error, Result};
use crate::planarmap::PlanarMap;
use crate::trees::{read_varint, write_varint, PlanarTree};

pub const SCHEMA_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"CMAPBIN\0";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Bin,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Bin => "bin",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "bin" => Ok(Format::Bin),
            _ => Err(Error::Invalid(format!("unknown format `{s}` (json|bin)"))),
        }
    }
}

/// One sampled replicate: the mobile and its map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub schema_version: u32,
    pub family: String,
    pub seed: u64,
    pub replicate: u64,
    pub mobile: Mobile,
    pub map: PlanarMap,
}

fn zigzag(x: i64) -> u64 {
    ((x << 1) ^ (x >> 63)) as u64
}

fn unzigzag(x: u64) -> i64 {
    ((x >> 1) as i64) ^ -((x & 1) as i64)
}

impl SampleRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serialises")
    }

    pub fn to_bin(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.schema_version.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        write_varint(&mut out, self.replicate);
        write_varint(&mut out, self.family.len() as u64);
        out.extend_from_slice(self.family.as_bytes());
        let tree = self.mobile.tree().to_varint_bytes();
        write_varint(&mut out, tree.len() as u64);
        out.extend_from_slice(&tree);
        for &l in self.mobile.labels() {
            write_varint(&mut out, zigzag(l));
        }
        out.push(self.mobile.epsilon() as u8);
        let m = &self.map;
        write_varint(&mut out, m.n_vertices() as u64);
        write_varint(&mut out, m.n_half_edges() as u64);
        for h in 0..m.n_half_edges() {
            write_varint(&mut out, m.vertex_of(h) as u64);
        }
        for h in 0..m.n_half_edges() {
            write_varint(&mut out, m.next_around_vertex(h) as u64);
        }
        write_varint(&mut out, m.root_arc() as u64);
        write_varint(&mut out, m.rho() as u64);
        out
    }

    pub fn from_bin(bytes: &[u8]) -> Result<Self> {
        let bad = |what: &str| Error::Invalid(format!("binary record: {what}"));
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("bad magic"));
        }
        let schema_version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if schema_version != SCHEMA_VERSION {
            return Err(bad(&format!("unsupported schema_version {schema_version}")));
        }
        let seed = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let mut pos = 20;
        let replicate = read_varint(bytes, &mut pos)?;
        let take = |pos: &mut usize, len: usize| -> Result<&[u8]> {
            let s = bytes.get(*pos..*pos + len).ok_or_else(|| bad("truncated"))?;
            *pos += len;
            Ok(s)
        };
        let flen = read_varint(bytes, &mut pos)? as usize;
        let family = String::from_utf8(take(&mut pos, flen)?.to_vec()).map_err(|_| bad("family is not utf-8"))?;
        let tlen = read_varint(bytes, &mut pos)? as usize;
        let tree = PlanarTree::from_varint_bytes(take(&mut pos, tlen)?)?;
        let n_white = tree.white_vertices().len();
        let labels = (0..n_white)
            .map(|_| read_varint(bytes, &mut pos).map(unzigzag))
            .collect::<Result<Vec<_>>>()?;
        let epsilon = take(&mut pos, 1)?[0] as i8;
        let mobile = Mobile::new(tree, labels, epsilon)?;
        let nv = read_varint(bytes, &mut pos)? as usize;
        let nh = read_varint(bytes, &mut pos)? as usize;
        let mut read_n = |k: usize| {
            (0..k)
                .map(|_| read_varint(bytes, &mut pos).map(|x| x as usize))
                .collect::<Result<Vec<_>>>()
        };
        let vertex_of = read_n(nh)?;
        let next = read_n(nh)?;
        let tail = read_n(2)?;
        if pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        let map = PlanarMap::new(nv, vertex_of, next, tail[0], tail[1])?;
        Ok(Self {
            schema_version,
            family,
            seed,
            replicate,
            mobile,
            map,
        })
    }

    pub fn encode(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Json => self.to_json().into_bytes(),
            Format::Bin => self.to_bin(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Create `path` and write `bytes`; fails if the file exists.
pub fn write_new(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub rng: String,
    pub command: String,
    pub family: String,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub format: Format,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    /// Write every `(name, bytes)` into `dir` and then the manifest.
    pub fn write_with_files(mut self, dir: &Path, files: &[(String, Vec<u8>)]) -> Result<PathBuf> {
        for (name, bytes) in files {
            write_new(&dir.join(name), bytes)?;
            self.files.push(FileEntry {
                path: name.clone(),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(bytes),
            });
        }
        let path = dir.join(Self::FILE_NAME);
        write_new(&path, serde_json::to_string_pretty(&self)?.as_bytes())?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&read_file(path)?)?)
    }

    /// Names of files whose hash no longer matches.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.files {
            if sha256_hex(&read_file(&dir.join(&f.path))?) != f.sha256 {
                bad.push(f.path.clone());
            }
        }
        Ok(bad)
    }
}
