//! `.ctmesh` container: a tetrahedral mesh plus named node/element fields.
//!
//! Layout (little endian):
//!
//! ```text
//! "CTMESH1\n"
//! node_count u64, nodes f64 x 3 x N
//! tet_count u64, tets u32 x 4 x M
//! repeated until EOF:
//!   name_len u32, name bytes (utf-8)
//!   kind u8       0 node f64, 1 elem f64, 2 node u8, 3 elem u8, 4 text
//!   components u32
//!   payload       f64/u8 x components x (N or M); text: byte_len u64 + bytes
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::coords::{Ventricle, VentricularCoords};
use crate::geometry::electrodes::ElectrodeSet;
use crate::geometry::fibers::{FiberField, Triad};
use crate::geometry::mesh::{Mesh, SurfaceTag};
use crate::infarct::{Tissue, TissueMap};

pub const MESH_MAGIC: &[u8; 8] = b"CTMESH1\n";

#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    NodeF64 { components: u32, values: Vec<f64> },
    ElemF64 { components: u32, values: Vec<f64> },
    NodeU8 { components: u32, values: Vec<u8> },
    ElemU8 { components: u32, values: Vec<u8> },
    Text(String),
}

impl FieldData {
    fn kind(&self) -> u8 {
        match self {
            FieldData::NodeF64 { .. } => 0,
            FieldData::ElemF64 { .. } => 1,
            FieldData::NodeU8 { .. } => 2,
            FieldData::ElemU8 { .. } => 3,
            FieldData::Text(_) => 4,
        }
    }
}

/// A mesh with its named fields, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFile {
    pub nodes: Vec<[f64; 3]>,
    pub tets: Vec<[u32; 4]>,
    pub fields: BTreeMap<String, FieldData>,
}

impl MeshFile {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MESH_MAGIC)?;
        w.write_all(&(self.nodes.len() as u64).to_le_bytes())?;
        for p in &self.nodes {
            for x in p {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.write_all(&(self.tets.len() as u64).to_le_bytes())?;
        for t in &self.tets {
            for v in t {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        for (name, data) in &self.fields {
            self.check_len(name, data)?;
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&[data.kind()])?;
            match data {
                FieldData::NodeF64 { components, values } | FieldData::ElemF64 { components, values } => {
                    w.write_all(&components.to_le_bytes())?;
                    for x in values {
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
                FieldData::NodeU8 { components, values } | FieldData::ElemU8 { components, values } => {
                    w.write_all(&components.to_le_bytes())?;
                    w.write_all(values)?;
                }
                FieldData::Text(s) => {
                    w.write_all(&1u32.to_le_bytes())?;
                    w.write_all(&(s.len() as u64).to_le_bytes())?;
                    w.write_all(s.as_bytes())?;
                }
            }
        }
        Ok(())
    }

    fn check_len(&self, name: &str, data: &FieldData) -> Result<()> {
        let (n, c, len) = match data {
            FieldData::NodeF64 { components, values } => (self.nodes.len(), *components, values.len()),
            FieldData::ElemF64 { components, values } => (self.tets.len(), *components, values.len()),
            FieldData::NodeU8 { components, values } => (self.nodes.len(), *components, values.len()),
            FieldData::ElemU8 { components, values } => (self.tets.len(), *components, values.len()),
            FieldData::Text(_) => return Ok(()),
        };
        if n * c as usize != len {
            return Err(Error::Format(format!("field `{name}` has {len} values, expected {}", n * c as usize)));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| Error::Format("truncated header".into()))?;
        if &magic != MESH_MAGIC {
            return Err(Error::Format("not a ctmesh file".into()));
        }
        let n = read_u64(r)? as usize;
        let mut nodes = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            nodes.push([read_f64(r)?, read_f64(r)?, read_f64(r)?]);
        }
        let m = read_u64(r)? as usize;
        let mut tets = Vec::with_capacity(m.min(1 << 24));
        for _ in 0..m {
            tets.push([read_u32(r)?, read_u32(r)?, read_u32(r)?, read_u32(r)?]);
        }
        let mut fields = BTreeMap::new();
        loop {
            let mut len = [0u8; 4];
            match r.read(&mut len[..1])? {
                0 => break,
                _ => r.read_exact(&mut len[1..]).map_err(|_| Error::Format("truncated field".into()))?,
            }
            let name_len = u32::from_le_bytes(len) as usize;
            let name = String::from_utf8(read_bytes(r, name_len)?)
                .map_err(|_| Error::Format("field name is not utf-8".into()))?;
            let kind = read_bytes(r, 1)?[0];
            let components = read_u32(r)?;
            let count = |per: usize| per * components as usize;
            let data = match kind {
                0 => FieldData::NodeF64 { components, values: read_f64s(r, count(n))? },
                1 => FieldData::ElemF64 { components, values: read_f64s(r, count(m))? },
                2 => FieldData::NodeU8 { components, values: read_bytes(r, count(n))? },
                3 => FieldData::ElemU8 { components, values: read_bytes(r, count(m))? },
                4 => {
                    let len = read_u64(r)? as usize;
                    FieldData::Text(
                        String::from_utf8(read_bytes(r, len)?)
                            .map_err(|_| Error::Format(format!("text field `{name}` is not utf-8")))?,
                    )
                }
                k => return Err(Error::Format(format!("unknown field kind {k} for `{name}`"))),
            };
            fields.insert(name, data);
        }
        Ok(MeshFile { nodes, tets, fields })
    }

    fn node_f64(&self, name: &str, components: u32) -> Result<Option<&[f64]>> {
        match self.fields.get(name) {
            None => Ok(None),
            Some(FieldData::NodeF64 { components: c, values }) if *c == components => Ok(Some(values)),
            Some(_) => Err(Error::Format(format!("field `{name}` has an unexpected kind"))),
        }
    }

    fn elem_f64(&self, name: &str, components: u32) -> Result<Option<&[f64]>> {
        match self.fields.get(name) {
            None => Ok(None),
            Some(FieldData::ElemF64 { components: c, values }) if *c == components => Ok(Some(values)),
            Some(_) => Err(Error::Format(format!("field `{name}` has an unexpected kind"))),
        }
    }

    fn node_u8(&self, name: &str) -> Result<Option<&[u8]>> {
        match self.fields.get(name) {
            None => Ok(None),
            Some(FieldData::NodeU8 { components: 1, values }) => Ok(Some(values)),
            Some(_) => Err(Error::Format(format!("field `{name}` has an unexpected kind"))),
        }
    }

    fn text(&self, name: &str) -> Result<Option<&str>> {
        match self.fields.get(name) {
            None => Ok(None),
            Some(FieldData::Text(s)) => Ok(Some(s)),
            Some(_) => Err(Error::Format(format!("field `{name}` is not text"))),
        }
    }
}

fn read_bytes<R: Read>(r: &mut R, n: usize) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    r.take(n as u64).read_to_end(&mut buf)?;
    if buf.len() != n {
        return Err(Error::Format("unexpected end of file".into()));
    }
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| Error::Format("unexpected end of file".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| Error::Format("unexpected end of file".into()))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let bytes = read_bytes(r, n * 8)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// A mesh and whichever pipeline annotations have been computed so far.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Annotated {
    pub mesh: Mesh,
    pub fibers: Option<FiberField>,
    pub electrodes: Option<ElectrodeSet>,
    pub tissue: Option<TissueMap>,
    pub activation: Option<Vec<f64>>,
    /// Free-form text metadata (effective config, scenario name, ...).
    pub meta: BTreeMap<String, String>,
}

impl Annotated {
    pub fn new(mesh: Mesh) -> Self {
        Annotated { mesh, ..Default::default() }
    }

    pub fn to_file(&self) -> Result<MeshFile> {
        let mut fields = BTreeMap::new();
        let m = &self.mesh;
        fields.insert("edge_target".to_owned(), FieldData::Text(format!("{:?}", m.edge_target)));
        if !m.surface.is_empty() {
            fields.insert(
                "surface".to_owned(),
                FieldData::NodeU8 { components: 1, values: m.surface.iter().map(|t| t.0).collect() },
            );
        }
        if let Some(c) = &m.analytic_coords {
            let values = (0..c.len()).flat_map(|i| c.row(i)).collect();
            fields.insert("coords".to_owned(), FieldData::NodeF64 { components: 4, values });
        }
        if let Some(f) = &self.fibers {
            let values = f.triads.iter().flat_map(|t| t.to_array()).collect();
            fields.insert("fibers".to_owned(), FieldData::ElemF64 { components: 9, values });
            let flags = (0..m.tet_count()).map(|t| u8::from(f.fallback.binary_search(&t).is_ok())).collect();
            fields.insert("fiber_fallback".to_owned(), FieldData::ElemU8 { components: 1, values: flags });
        }
        if let Some(e) = &self.electrodes {
            fields.insert(
                "electrodes".to_owned(),
                FieldData::Text(serde_json::to_string(e).map_err(|e| Error::Format(e.to_string()))?),
            );
        }
        if let Some(t) = &self.tissue {
            fields.insert("tissue".to_owned(), FieldData::NodeU8 { components: 1, values: t.to_u8() });
        }
        if let Some(t) = &self.activation {
            fields.insert("t_a_ms".to_owned(), FieldData::NodeF64 { components: 1, values: t.clone() });
        }
        for (k, v) in &self.meta {
            fields.entry(format!("meta.{k}")).or_insert_with(|| FieldData::Text(v.clone()));
        }
        Ok(MeshFile { nodes: m.nodes.clone(), tets: m.tets.clone(), fields })
    }

    pub fn from_file(file: MeshFile) -> Result<Self> {
        let edge_target = match file.text("edge_target")? {
            Some(s) => s.trim().parse().map_err(|_| Error::Format("bad edge_target".into()))?,
            None => 0.0,
        };
        let mut mesh = Mesh::new(file.nodes.clone(), file.tets.clone(), edge_target);
        if mesh.edge_target <= 0.0 {
            mesh.edge_target = mesh.mean_edge_length();
        }
        if let Some(s) = file.node_u8("surface")? {
            mesh.surface = s.iter().map(|&b| SurfaceTag(b)).collect();
        }
        if let Some(v) = file.node_f64("coords", 4)? {
            let mut c = VentricularCoords::default();
            for row in v.chunks_exact(4) {
                c.tm.push(row[0]);
                c.ab.push(row[1]);
                c.rt.push(row[2]);
                c.tv.push(Ventricle::from_f64(row[3]));
            }
            mesh.analytic_coords = Some(c);
        }
        mesh.validate()?;
        let fibers = match file.elem_f64("fibers", 9)? {
            Some(v) => {
                let fallback = match file.fields.get("fiber_fallback") {
                    Some(FieldData::ElemU8 { values, .. }) => {
                        values.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| i).collect()
                    }
                    _ => Vec::new(),
                };
                Some(FiberField { triads: v.chunks_exact(9).map(Triad::from_array).collect(), fallback })
            }
            None => None,
        };
        let electrodes = match file.text("electrodes")? {
            Some(s) => Some(serde_json::from_str(s).map_err(|e| Error::Format(format!("electrodes: {e}")))?),
            None => None,
        };
        let tissue = match file.node_u8("tissue")? {
            Some(v) => Some(TissueMap::from_u8(v)?),
            None => None,
        };
        let activation = file.node_f64("t_a_ms", 1)?.map(<[f64]>::to_vec);
        let meta = file
            .fields
            .iter()
            .filter_map(|(k, v)| match (k.strip_prefix("meta."), v) {
                (Some(k), FieldData::Text(s)) => Some((k.to_owned(), s.clone())),
                _ => None,
            })
            .collect();
        Ok(Annotated { mesh, fibers, electrodes, tissue, activation, meta })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.to_file()?.write(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_file(MeshFile::read(path)?)
    }

    pub fn tissue_or_healthy(&self) -> TissueMap {
        self.tissue.clone().unwrap_or_else(|| TissueMap::healthy(self.mesh.node_count()))
    }
}

impl TissueMap {
    pub fn to_u8(&self) -> Vec<u8> {
        self.labels.iter().map(|&t| t as u8).collect()
    }

    pub fn from_u8(v: &[u8]) -> Result<Self> {
        let labels = v
            .iter()
            .map(|&b| match b {
                0 => Ok(Tissue::Normal),
                1 => Ok(Tissue::Scar),
                2 => Ok(Tissue::BorderZone),
                b => Err(Error::Format(format!("tissue label {b} out of range"))),
            })
            .collect::<Result<_>>()?;
        Ok(TissueMap { labels })
    }
}
