//! OBJ and PLY mesh I/O with optional per-vertex RGB.
//!
//! PLY output is binary little-endian with `float` positions and `uchar`
//! colors, so colors round-trip to within 1/255. OBJ colors use the common
//! `v x y z r g b` extension.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::mesh::TriMesh;
use crate::error::{Error, Result};
use crate::Vec3;

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    match extension(path).as_str() {
        "obj" => read_obj(path),
        "ply" => read_ply(path),
        other => Err(Error::format(
            path,
            format!("unsupported mesh extension '{other}'"),
        )),
    }
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match extension(path).as_str() {
        "obj" => write_obj(mesh, path),
        "ply" => write_ply(mesh, path),
        other => Err(Error::format(
            path,
            format!("unsupported mesh extension '{other}'"),
        )),
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

pub fn write_obj(mesh: &TriMesh, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for (i, p) in mesh.vertices().iter().enumerate() {
        match mesh.colors() {
            Some(c) => writeln!(
                w,
                "v {} {} {} {} {} {}",
                p.x, p.y, p.z, c[i].x, c[i].y, c[i].z
            ),
            None => writeln!(w, "v {} {} {}", p.x, p.y, p.z),
        }
        .map_err(io)?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_obj(path: &Path) -> Result<TriMesh> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut verts = Vec::new();
    let mut colors = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut it = line.split_whitespace();
        let bad = |msg: &str| Error::format(path, format!("line {}: {msg}", lineno + 1));
        match it.next() {
            Some("v") => {
                let nums: Vec<f64> = it
                    .map(|s| s.parse::<f64>().map_err(|_| bad("bad number")))
                    .collect::<Result<_>>()?;
                if nums.len() < 3 {
                    return Err(bad("vertex needs 3 coordinates"));
                }
                verts.push(Vec3::new(nums[0], nums[1], nums[2]));
                if nums.len() >= 6 {
                    colors.push(Vec3::new(nums[3], nums[4], nums[5]));
                }
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|s| {
                        let first = s.split('/').next().unwrap_or("");
                        let i: i64 = first.parse().map_err(|_| bad("bad face index"))?;
                        let n = verts.len() as i64;
                        let resolved = if i < 0 { n + i } else { i - 1 };
                        if resolved < 0 {
                            return Err(bad("face index out of range"));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(bad("face needs 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    let mut mesh = TriMesh::new(verts, faces).map_err(|e| Error::format(path, e.to_string()))?;
    if !colors.is_empty() && colors.len() == mesh.num_vertices() {
        mesh.set_colors(Some(colors))?;
    }
    Ok(mesh)
}

fn to_u8(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_ply(mesh: &TriMesh, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header += &format!("element vertex {}\n", mesh.num_vertices());
    header += "property float x\nproperty float y\nproperty float z\n";
    if mesh.colors().is_some() {
        header += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    }
    header += &format!("element face {}\n", mesh.num_faces());
    header += "property list uchar int vertex_indices\nend_header\n";
    w.write_all(header.as_bytes()).map_err(io)?;
    for (i, p) in mesh.vertices().iter().enumerate() {
        for c in [p.x, p.y, p.z] {
            w.write_all(&(c as f32).to_le_bytes()).map_err(io)?;
        }
        if let Some(col) = mesh.colors() {
            w.write_all(&[to_u8(col[i].x), to_u8(col[i].y), to_u8(col[i].z)])
                .map_err(io)?;
        }
    }
    for f in mesh.faces() {
        w.write_all(&[3u8]).map_err(io)?;
        for &v in f {
            w.write_all(&(v as i32).to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode(self, b: &[u8], little: bool) -> f64 {
        macro_rules! num {
            ($t:ty, $n:expr) => {{
                let arr: [u8; $n] = b[..$n].try_into().unwrap();
                (if little {
                    <$t>::from_le_bytes(arr)
                } else {
                    <$t>::from_be_bytes(arr)
                }) as f64
            }};
        }
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => num!(i16, 2),
            Scalar::U16 => num!(u16, 2),
            Scalar::I32 => num!(i32, 4),
            Scalar::U32 => num!(u32, 4),
            Scalar::F32 => num!(f32, 4),
            Scalar::F64 => num!(f64, 8),
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Scalar::F32 | Scalar::F64)
    }
}

#[derive(Debug)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug, PartialEq)]
enum PlyFormat {
    Ascii,
    Binary { little: bool },
}

pub fn read_ply(path: &Path) -> Result<TriMesh> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let bad = |msg: String| Error::format(path, msg);
    let mut line = String::new();
    let read_line = |r: &mut BufReader<File>, line: &mut String| -> Result<()> {
        line.clear();
        let n = r.read_line(line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::format(path, "unexpected end of header"));
        }
        Ok(())
    };
    read_line(&mut r, &mut line)?;
    if line.trim() != "ply" {
        return Err(bad("missing 'ply' magic".into()));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        read_line(&mut r, &mut line)?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "ascii", _] => format = Some(PlyFormat::Ascii),
            ["format", "binary_little_endian", _] => {
                format = Some(PlyFormat::Binary { little: true })
            }
            ["format", "binary_big_endian", _] => {
                format = Some(PlyFormat::Binary { little: false })
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| bad(format!("bad element count '{count}'")))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| bad("property before element".into()))?;
                let ct = Scalar::parse(ct).ok_or_else(|| bad(format!("unknown type '{ct}'")))?;
                let it = Scalar::parse(it).ok_or_else(|| bad(format!("unknown type '{it}'")))?;
                el.props.push(Property::List(name.to_string(), ct, it));
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| bad("property before element".into()))?;
                let ty = Scalar::parse(ty).ok_or_else(|| bad(format!("unknown type '{ty}'")))?;
                el.props.push(Property::Scalar(name.to_string(), ty));
            }
            ["end_header"] => break,
            _ => {}
        }
    }
    let format = format.ok_or_else(|| bad("missing format line".into()))?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(|e| Error::io(path, e))?;

    let mut source: Box<dyn ValueSource> = match format {
        PlyFormat::Ascii => Box::new(AsciiSource {
            tokens: String::from_utf8_lossy(&rest)
                .split_whitespace()
                .map(str::to_owned)
                .collect::<Vec<_>>()
                .into_iter(),
        }),
        PlyFormat::Binary { little } => Box::new(BinarySource {
            data: rest,
            pos: 0,
            little,
        }),
    };

    let mut verts = Vec::new();
    let mut colors = Vec::new();
    let mut faces = Vec::new();
    for el in &elements {
        for _ in 0..el.count {
            let mut pos = [0.0; 3];
            let mut col = [f64::NAN; 3];
            let mut color_is_int = true;
            for prop in &el.props {
                match prop {
                    Property::Scalar(name, ty) => {
                        let v = source
                            .next(*ty)
                            .ok_or_else(|| bad("truncated data".into()))?;
                        if el.name == "vertex" {
                            match name.as_str() {
                                "x" => pos[0] = v,
                                "y" => pos[1] = v,
                                "z" => pos[2] = v,
                                "red" | "r" => (col[0], color_is_int) = (v, ty.is_integer()),
                                "green" | "g" => col[1] = v,
                                "blue" | "b" => col[2] = v,
                                _ => {}
                            }
                        }
                    }
                    Property::List(name, ct, it) => {
                        let n = source
                            .next(*ct)
                            .ok_or_else(|| bad("truncated data".into()))?
                            as usize;
                        let mut idx = Vec::with_capacity(n);
                        for _ in 0..n {
                            idx.push(
                                source
                                    .next(*it)
                                    .ok_or_else(|| bad("truncated data".into()))?
                                    as usize,
                            );
                        }
                        if el.name == "face" && (name == "vertex_indices" || name == "vertex_index")
                        {
                            for k in 1..idx.len().saturating_sub(1) {
                                faces.push([idx[0], idx[k], idx[k + 1]]);
                            }
                        }
                    }
                }
            }
            if el.name == "vertex" {
                verts.push(Vec3::new(pos[0], pos[1], pos[2]));
                if col.iter().all(|c| c.is_finite()) {
                    let scale = if color_is_int { 1.0 / 255.0 } else { 1.0 };
                    colors.push(Vec3::new(col[0], col[1], col[2]) * scale);
                }
            }
        }
    }
    let mut mesh = TriMesh::new(verts, faces).map_err(|e| bad(e.to_string()))?;
    if !colors.is_empty() && colors.len() == mesh.num_vertices() {
        mesh.set_colors(Some(colors))?;
    }
    Ok(mesh)
}

trait ValueSource {
    fn next(&mut self, ty: Scalar) -> Option<f64>;
}

struct AsciiSource {
    tokens: std::vec::IntoIter<String>,
}

impl ValueSource for AsciiSource {
    fn next(&mut self, _ty: Scalar) -> Option<f64> {
        self.tokens.next()?.parse().ok()
    }
}

struct BinarySource {
    data: Vec<u8>,
    pos: usize,
    little: bool,
}

impl ValueSource for BinarySource {
    fn next(&mut self, ty: Scalar) -> Option<f64> {
        let n = ty.size();
        let bytes = self.data.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(ty.decode(bytes, self.little))
    }
}
