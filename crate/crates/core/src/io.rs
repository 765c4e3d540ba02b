//! Text and image formats.
//!
//! * edge list: `u v w` per line (`w` defaults to 1), optional `# vertices N` header
//! * constraints: `ML u v [w]` / `CL u v [w]`
//! * point cloud: `x y label`
//! * labels: one integer per line
//! * scribbles: `row col label`
//! * images: binary or ASCII PGM (`P5` / `P2`)
//!
//! Blank lines and lines starting with `#` are ignored everywhere. Ids are 0-based.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::generators::LabeledPointCloud;
use crate::graph::{WeightedGraph, MIN_EDGE_WEIGHT};
use crate::merge::{Constraint, ConstraintSet};

/// Non-comment lines with their 1-based line numbers, split on whitespace.
fn records<R: BufRead>(reader: R) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed.split_whitespace().map(str::to_string).collect()));
    }
    Ok(out)
}

fn field<T: FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what} `{tok}`"),
    })
}

fn arity(line: usize, toks: &[String], min: usize, max: usize) -> Result<()> {
    if toks.len() < min || toks.len() > max {
        return Err(Error::Parse {
            line,
            msg: format!("expected {min}..={max} fields, found {}", toks.len()),
        });
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path)?))
}

/// Reads an edge list. The vertex count is the `# vertices N` header when
/// present, otherwise one more than the largest id.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<WeightedGraph> {
    let mut header_n = None;
    let mut edges = Vec::new();
    let mut max_id = None::<usize>;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("# vertices") {
            header_n = Some(field::<usize>(i + 1, rest.trim(), "vertex count")?);
            continue;
        }
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        let owned: Vec<String> = toks.iter().map(|s| s.to_string()).collect();
        arity(i + 1, &owned, 2, 3)?;
        let u: usize = field(i + 1, toks[0], "vertex id")?;
        let v: usize = field(i + 1, toks[1], "vertex id")?;
        let w: f64 = match toks.get(2) {
            Some(tok) => field(i + 1, tok, "weight")?,
            None => 1.0,
        };
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v, w));
    }
    let n = header_n.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    WeightedGraph::from_edges(n, edges)
}

pub fn write_edge_list<W: Write>(g: &WeightedGraph, mut w: W) -> Result<()> {
    writeln!(w, "# vertices {}", g.n())?;
    for (u, v, weight) in g.edges() {
        writeln!(w, "{u} {v} {weight}")?;
    }
    Ok(())
}

pub fn load_edge_list(path: &Path) -> Result<WeightedGraph> {
    read_edge_list(open(path)?)
}

pub fn save_edge_list(g: &WeightedGraph, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_edge_list(g, &mut buf)?;
    Ok(fs::write(path, buf)?)
}

pub fn read_constraints<R: BufRead>(reader: R) -> Result<ConstraintSet> {
    let mut c = ConstraintSet::new();
    for (line, toks) in records(reader)? {
        arity(line, &toks, 3, 4)?;
        let u = field(line, &toks[1], "vertex id")?;
        let v = field(line, &toks[2], "vertex id")?;
        let weight = match toks.get(3) {
            Some(t) => Some(field(line, t, "weight")?),
            None => None,
        };
        let item = Constraint { u, v, weight };
        match toks[0].as_str() {
            "ML" => c.must_link.push(item),
            "CL" => c.cannot_link.push(item),
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected ML or CL, found `{other}`"),
                })
            }
        }
    }
    Ok(c)
}

pub fn write_constraints<W: Write>(c: &ConstraintSet, mut w: W) -> Result<()> {
    for (tag, list) in [("ML", &c.must_link), ("CL", &c.cannot_link)] {
        for e in list {
            match e.weight {
                Some(weight) => writeln!(w, "{tag} {} {} {weight}", e.u, e.v)?,
                None => writeln!(w, "{tag} {} {}", e.u, e.v)?,
            }
        }
    }
    Ok(())
}

pub fn load_constraints(path: &Path) -> Result<ConstraintSet> {
    read_constraints(open(path)?)
}

pub fn save_constraints(c: &ConstraintSet, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_constraints(c, &mut buf)?;
    Ok(fs::write(path, buf)?)
}

pub fn read_point_cloud<R: BufRead>(reader: R) -> Result<LabeledPointCloud> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (line, toks) in records(reader)? {
        arity(line, &toks, 3, 3)?;
        points.push([field(line, &toks[0], "coordinate")?, field(line, &toks[1], "coordinate")?]);
        labels.push(field(line, &toks[2], "label")?);
    }
    LabeledPointCloud::new(points, labels)
}

pub fn write_point_cloud<W: Write>(cloud: &LabeledPointCloud, mut w: W) -> Result<()> {
    for (p, l) in cloud.points.iter().zip(&cloud.labels) {
        writeln!(w, "{} {} {l}", p[0], p[1])?;
    }
    Ok(())
}

pub fn load_point_cloud(path: &Path) -> Result<LabeledPointCloud> {
    read_point_cloud(open(path)?)
}

pub fn save_point_cloud(cloud: &LabeledPointCloud, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_point_cloud(cloud, &mut buf)?;
    Ok(fs::write(path, buf)?)
}

pub fn read_labels<R: BufRead>(reader: R) -> Result<Vec<usize>> {
    records(reader)?
        .into_iter()
        .map(|(line, toks)| {
            arity(line, &toks, 1, 1)?;
            field(line, &toks[0], "label")
        })
        .collect()
}

pub fn write_labels<W: Write>(labels: &[usize], mut w: W) -> Result<()> {
    let mut s = String::with_capacity(labels.len() * 2);
    for l in labels {
        let _ = writeln!(s, "{l}");
    }
    Ok(w.write_all(s.as_bytes())?)
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    read_labels(open(path)?)
}

pub fn save_labels(labels: &[usize], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_labels(labels, &mut buf)?;
    Ok(fs::write(path, buf)?)
}

/// A labeled pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scribble {
    pub row: usize,
    pub col: usize,
    pub label: usize,
}

pub fn read_scribbles<R: BufRead>(reader: R) -> Result<Vec<Scribble>> {
    records(reader)?
        .into_iter()
        .map(|(line, toks)| {
            arity(line, &toks, 3, 3)?;
            Ok(Scribble {
                row: field(line, &toks[0], "row")?,
                col: field(line, &toks[1], "column")?,
                label: field(line, &toks[2], "label")?,
            })
        })
        .collect()
}

pub fn write_scribbles<W: Write>(s: &[Scribble], mut w: W) -> Result<()> {
    for x in s {
        writeln!(w, "{} {} {}", x.row, x.col, x.label)?;
    }
    Ok(())
}

pub fn load_scribbles(path: &Path) -> Result<Vec<Scribble>> {
    read_scribbles(open(path)?)
}

/// Grayscale image with raw sample values in `0..=maxval`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::UnsupportedImage("empty image".into()));
        }
        if maxval == 0 {
            return Err(Error::UnsupportedImage("maxval must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        if let Some(p) = pixels.iter().find(|&&p| p > maxval) {
            return Err(Error::UnsupportedImage(format!("sample {p} exceeds maxval {maxval}")));
        }
        Ok(GrayImage {
            width,
            height,
            maxval,
            pixels,
        })
    }

    /// Pixel index of `(row, col)`.
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    /// Intensity in `[0, 1]`.
    pub fn intensity(&self, i: usize) -> f64 {
        self.pixels[i] as f64 / self.maxval as f64
    }
}

/// Parses a plain (`P2`) or raw (`P5`) PGM image.
pub fn read_pgm<R: Read>(mut reader: R) -> Result<GrayImage> {
    let mut data = Vec::new();
    reader.read_to_end(&mut data)?;
    let mut pos = 0;
    // Header tokens, skipping whitespace and `#` comments.
    let mut token = |data: &[u8]| -> Result<String> {
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::UnsupportedImage("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
    };
    let magic = token(&data)?;
    let num = |s: String| {
        s.parse::<usize>()
            .map_err(|_| Error::UnsupportedImage(format!("bad PGM header field `{s}`")))
    };
    let width = num(token(&data)?)?;
    let height = num(token(&data)?)?;
    let maxval = num(token(&data)?)?;
    if maxval == 0 || maxval > u16::MAX as usize {
        return Err(Error::UnsupportedImage(format!("maxval {maxval} out of range")));
    }
    let count = width * height;
    let pixels: Vec<u16> = match magic.as_str() {
        "P2" => (0..count)
            .map(|_| {
                let t = token(&data)?;
                t.parse::<u16>()
                    .map_err(|_| Error::UnsupportedImage(format!("bad sample `{t}`")))
            })
            .collect::<Result<_>>()?,
        "P5" => {
            // exactly one whitespace byte separates the header from the raster
            let body = &data[(pos + 1).min(data.len())..];
            let bytes = if maxval < 256 { 1 } else { 2 };
            if body.len() < count * bytes {
                return Err(Error::UnsupportedImage("truncated PGM raster".into()));
            }
            if bytes == 1 {
                body[..count].iter().map(|&b| b as u16).collect()
            } else {
                body[..2 * count]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]))
                    .collect()
            }
        }
        other => return Err(Error::UnsupportedImage(format!("unsupported magic `{other}`"))),
    };
    GrayImage::new(width, height, maxval as u16, pixels)
}

/// Writes `img` as raw `P5`, or as plain `P2` when `plain` is set.
pub fn write_pgm<W: Write>(img: &GrayImage, mut w: W, plain: bool) -> Result<()> {
    let magic = if plain { "P2" } else { "P5" };
    write!(w, "{magic}\n{} {}\n{}\n", img.width, img.height, img.maxval)?;
    if plain {
        for row in img.pixels.chunks(img.width) {
            let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    } else if img.maxval < 256 {
        w.write_all(&img.pixels.iter().map(|&p| p as u8).collect::<Vec<_>>())?;
    } else {
        for p in &img.pixels {
            w.write_all(&p.to_be_bytes())?;
        }
    }
    Ok(())
}

pub fn load_pgm(path: &Path) -> Result<GrayImage> {
    read_pgm(open(path)?)
}

pub fn save_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_pgm(img, &mut buf, false)?;
    Ok(fs::write(path, buf)?)
}

/// Label map as an 8-bit image, labels spread evenly over the gray range.
pub fn labels_to_image(labels: &[usize], width: usize, height: usize) -> Result<GrayImage> {
    let k = labels.iter().copied().max().map_or(1, |m| m + 1);
    let step = if k > 1 { 255 / (k - 1).min(255) } else { 0 };
    let pixels = labels.iter().map(|&l| (l.min(255) * step).min(255) as u16).collect();
    GrayImage::new(width, height, 255, pixels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            _ => Err(Error::InvalidArgument(format!("connectivity must be 4 or 8, got {v}"))),
        }
    }
}

/// Pixel grid graph with `w = exp(−(g_i − g_j)² / (2σ²))` on intensities in
/// `[0, 1]`. Weights are floored at the smallest admissible edge weight so
/// the grid stays connected.
pub fn image_to_graph(img: &GrayImage, sigma: f64, connectivity: Connectivity) -> Result<WeightedGraph> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let (w, h) = (img.width, img.height);
    let offsets: &[(usize, isize)] = match connectivity {
        Connectivity::Four => &[(0, 1), (1, 0)],
        Connectivity::Eight => &[(0, 1), (1, 0), (1, 1), (1, -1)],
    };
    let mut edges = Vec::with_capacity(w * h * offsets.len());
    for r in 0..h {
        for c in 0..w {
            let i = img.index(r, c);
            for &(dr, dc) in offsets {
                let (r2, c2) = (r + dr, c as isize + dc);
                if r2 >= h || c2 < 0 || c2 as usize >= w {
                    continue;
                }
                let j = img.index(r2, c2 as usize);
                let diff = img.intensity(i) - img.intensity(j);
                let weight = (-diff * diff / (2.0 * sigma * sigma)).exp().max(MIN_EDGE_WEIGHT);
                edges.push((i, j, weight));
            }
        }
    }
    WeightedGraph::from_edges(w * h, edges)
}

/// Pairwise constraints among scribbled pixels: must-link within a label,
/// cannot-link across labels.
pub fn scribble_constraints(img: &GrayImage, scribbles: &[Scribble]) -> Result<ConstraintSet> {
    let mut vertices = Vec::with_capacity(scribbles.len());
    let mut labels = vec![0; img.width * img.height];
    for s in scribbles {
        if s.row >= img.height || s.col >= img.width {
            return Err(Error::InvalidArgument(format!(
                "scribble ({}, {}) outside {}x{} image",
                s.row, s.col, img.height, img.width
            )));
        }
        let i = img.index(s.row, s.col);
        labels[i] = s.label;
        vertices.push(i);
    }
    vertices.sort_unstable();
    vertices.dedup();
    Ok(crate::generators::clique_constraints(&labels, &vertices))
}
