//! On-disk formats: scene, junction, wireframe and grid JSON plus the WFHM
//! binary heat map.
//!
//! JSON numbers use the shortest representation that parses back to the
//! same `f64`, so every reader/writer pair round-trips bit for bit.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use wireframe_core::annotate::AnnotatedScene;
use wireframe_core::geom::{Branch, Junction, Point, Segment, Wireframe};
use wireframe_core::gridcodec::{CellPrediction, GridConfig, GridEncoding};
use wireframe_core::raster::HeatMap;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("format types serialize infallibly");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value))
}

/// `{"width", "height", "lines": [[x1, y1, x2, y2], ...]}`; optional
/// per-line `scores` for detector output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub width: usize,
    pub height: usize,
    pub lines: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

impl SceneFile {
    pub fn from_segments(width: usize, height: usize, segments: &[Segment]) -> Self {
        Self {
            width,
            height,
            lines: segments
                .iter()
                .map(|s| [s.a.x, s.a.y, s.b.x, s.b.y])
                .collect(),
            scores: None,
        }
    }

    pub fn segments(&self) -> Result<Vec<Segment>> {
        self.lines
            .iter()
            .enumerate()
            .map(|(i, l)| {
                Segment::from_coords(l[0], l[1], l[2], l[3]).with_context(|| format!("line {i}"))
            })
            .collect()
    }

    /// Validated scene (coordinates inside the image, no degenerate lines).
    pub fn to_scene(&self) -> Result<AnnotatedScene> {
        let segs = self.segments()?;
        Ok(AnnotatedScene::new(self.width, self.height, segs)?)
    }

    /// Lines with their scores; unscored lines count as 1.
    pub fn scored_segments(&self) -> Result<Vec<(Segment, f64)>> {
        let segs = self.segments()?;
        match &self.scores {
            None => Ok(segs.into_iter().map(|s| (s, 1.0)).collect()),
            Some(sc) => {
                ensure!(
                    sc.len() == segs.len(),
                    "{} scores for {} lines",
                    sc.len(),
                    segs.len()
                );
                Ok(segs.into_iter().zip(sc.iter().copied()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchRecord {
    pub theta: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionRecord {
    pub x: f64,
    pub y: f64,
    pub score: f64,
    pub branches: Vec<BranchRecord>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub derived: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl From<&Junction> for JunctionRecord {
    fn from(j: &Junction) -> Self {
        Self {
            x: j.center.x,
            y: j.center.y,
            score: j.confidence,
            branches: j
                .branches
                .iter()
                .map(|b| BranchRecord {
                    theta: b.angle,
                    score: b.confidence,
                })
                .collect(),
            derived: j.derived,
        }
    }
}

impl JunctionRecord {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.x.is_finite() && self.y.is_finite(),
            "non-finite junction center"
        );
        ensure!(
            (0.0..=1.0).contains(&self.score),
            "junction score {} outside [0, 1]",
            self.score
        );
        for b in &self.branches {
            ensure!(
                (0.0..360.0).contains(&b.theta),
                "branch angle {} outside [0, 360)",
                b.theta
            );
            ensure!(
                (0.0..=1.0).contains(&b.score),
                "branch score {} outside [0, 1]",
                b.score
            );
        }
        Ok(())
    }

    pub fn to_junction(&self) -> Junction {
        let branches = self
            .branches
            .iter()
            .map(|b| Branch {
                angle: b.theta,
                confidence: b.score,
            })
            .collect();
        let mut j = Junction::new(Point::new(self.x, self.y), branches, self.score);
        j.derived = self.derived;
        j
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionFile {
    pub width: usize,
    pub height: usize,
    pub junctions: Vec<JunctionRecord>,
}

impl JunctionFile {
    pub fn new(width: usize, height: usize, junctions: &[Junction]) -> Self {
        Self {
            width,
            height,
            junctions: junctions.iter().map(JunctionRecord::from).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, j) in self.junctions.iter().enumerate() {
            j.validate().with_context(|| format!("junction {i}"))?;
        }
        Ok(())
    }

    pub fn to_junctions(&self) -> Result<Vec<Junction>> {
        self.validate()?;
        Ok(self
            .junctions
            .iter()
            .map(JunctionRecord::to_junction)
            .collect())
    }
}

/// Junctions, segments as endpoint index pairs, and optional incidence
/// triplets `(junction, segment, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireframeFile {
    pub width: usize,
    pub height: usize,
    pub junctions: Vec<JunctionRecord>,
    pub segments: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incidence: Option<Vec<[usize; 3]>>,
}

impl WireframeFile {
    pub fn new(width: usize, height: usize, wf: &Wireframe) -> Self {
        let w = &wf.incidence;
        let mut triplets = Vec::new();
        for n in 0..w.rows {
            for m in 0..w.cols {
                if w.get(n, m) != 0 {
                    triplets.push([n, m, 1]);
                }
            }
        }
        Self {
            width,
            height,
            junctions: wf.junctions.iter().map(JunctionRecord::from).collect(),
            segments: wf.endpoints.iter().map(|&(a, b)| [a, b]).collect(),
            incidence: Some(triplets),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.junctions.len(), self.segments.len());
        for (i, j) in self.junctions.iter().enumerate() {
            j.validate().with_context(|| format!("junction {i}"))?;
        }
        for (i, s) in self.segments.iter().enumerate() {
            ensure!(
                s[0] < n && s[1] < n,
                "segment {i} references a missing junction"
            );
            ensure!(s[0] != s[1], "segment {i} joins a junction to itself");
        }
        if let Some(inc) = &self.incidence {
            for t in inc {
                ensure!(
                    t[0] < n && t[1] < m && t[2] == 1,
                    "bad incidence triplet {t:?}"
                );
            }
        }
        Ok(())
    }

    pub fn junctions(&self) -> Result<Vec<Junction>> {
        self.validate()?;
        Ok(self
            .junctions
            .iter()
            .map(JunctionRecord::to_junction)
            .collect())
    }

    pub fn segment_list(&self) -> Result<Vec<Segment>> {
        self.validate()?;
        self.segments
            .iter()
            .map(|&[a, b]| {
                let (p, q) = (&self.junctions[a], &self.junctions[b]);
                Ok(Segment::from_coords(p.x, p.y, q.x, q.y)?)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRecord {
    pub conf: f64,
    pub dx: f64,
    pub dy: f64,
    pub bin_conf: Vec<f64>,
    pub bin_residual: Vec<f64>,
}

/// Grid encoding: cells in row-major order, displacements in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub image_w: usize,
    pub image_h: usize,
    pub grid_w: usize,
    pub grid_h: usize,
    pub bins: usize,
    pub cells: Vec<CellRecord>,
}

impl From<&GridEncoding> for GridFile {
    fn from(g: &GridEncoding) -> Self {
        let c = g.config;
        Self {
            image_w: c.image_w,
            image_h: c.image_h,
            grid_w: c.grid_w,
            grid_h: c.grid_h,
            bins: c.bins,
            cells: g
                .cells
                .iter()
                .map(|p| CellRecord {
                    conf: p.center_conf,
                    dx: p.dx,
                    dy: p.dy,
                    bin_conf: p.bin_conf.clone(),
                    bin_residual: p.bin_residual.clone(),
                })
                .collect(),
        }
    }
}

impl GridFile {
    pub fn to_encoding(&self) -> Result<GridEncoding> {
        let enc = GridEncoding {
            config: GridConfig {
                grid_h: self.grid_h,
                grid_w: self.grid_w,
                bins: self.bins,
                image_w: self.image_w,
                image_h: self.image_h,
            },
            cells: self
                .cells
                .iter()
                .map(|c| CellPrediction {
                    center_conf: c.conf,
                    dx: c.dx,
                    dy: c.dy,
                    bin_conf: c.bin_conf.clone(),
                    bin_residual: c.bin_residual.clone(),
                })
                .collect(),
        };
        enc.validate()?;
        Ok(enc)
    }
}

pub const WFHM_MAGIC: &[u8; 4] = b"WFHM";
pub const WFHM_VERSION: u16 = 1;
pub const WFHM_HEADER_LEN: usize = 14;

pub fn wfhm_len(width: usize, height: usize) -> usize {
    WFHM_HEADER_LEN + 4 * width * height
}

/// Encodes a heat map as WFHM. Values are stored as `f32`.
pub fn encode_wfhm(h: &HeatMap) -> Result<Vec<u8>> {
    let w = u32::try_from(h.width).context("heat map width exceeds u32")?;
    let hh = u32::try_from(h.height).context("heat map height exceeds u32")?;
    let mut out = Vec::with_capacity(wfhm_len(h.width, h.height));
    out.extend_from_slice(WFHM_MAGIC);
    out.extend_from_slice(&WFHM_VERSION.to_le_bytes());
    out.extend_from_slice(&w.to_le_bytes());
    out.extend_from_slice(&hh.to_le_bytes());
    for &v in &h.values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_wfhm(bytes: &[u8]) -> Result<HeatMap> {
    ensure!(
        bytes.len() >= WFHM_HEADER_LEN,
        "heat map file shorter than its header"
    );
    ensure!(&bytes[..4] == WFHM_MAGIC, "bad heat map magic");
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    ensure!(
        version == WFHM_VERSION,
        "unsupported heat map version {version}"
    );
    let w = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let h = u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes")) as usize;
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(WFHM_HEADER_LEN));
    if expected != Some(bytes.len()) {
        bail!(
            "heat map of {w}x{h} should be {expected:?} bytes, found {}",
            bytes.len()
        );
    }
    let values = bytes[WFHM_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    Ok(HeatMap::from_values(w, h, values)?)
}

pub fn read_wfhm(path: &Path) -> Result<HeatMap> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_wfhm(&bytes).with_context(|| format!("decoding {}", path.display()))
}

pub fn write_wfhm(path: &Path, h: &HeatMap) -> Result<()> {
    let bytes = encode_wfhm(h)?;
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Any JSON file that carries junctions.
pub fn read_junction_set(path: &Path) -> Result<(usize, usize, Vec<Junction>)> {
    let v: serde_json::Value = read_json(path)?;
    let ctx = || format!("parsing {}", path.display());
    if v.get("segments").is_some() {
        let f: WireframeFile = serde_json::from_value(v).with_context(ctx)?;
        Ok((f.width, f.height, f.junctions().with_context(ctx)?))
    } else {
        let f: JunctionFile = serde_json::from_value(v).with_context(ctx)?;
        Ok((f.width, f.height, f.to_junctions().with_context(ctx)?))
    }
}

/// Segments paired with their scores.
pub type ScoredSegments = Vec<(Segment, f64)>;

/// Any JSON file that carries line segments, each with a score.
pub fn read_line_set(path: &Path) -> Result<(usize, usize, ScoredSegments)> {
    let v: serde_json::Value = read_json(path)?;
    let ctx = || format!("parsing {}", path.display());
    if v.get("segments").is_some() {
        let f: WireframeFile = serde_json::from_value(v).with_context(ctx)?;
        let segs = f.segment_list().with_context(ctx)?;
        Ok((
            f.width,
            f.height,
            segs.into_iter().map(|s| (s, 1.0)).collect(),
        ))
    } else {
        let f: SceneFile = serde_json::from_value(v).with_context(ctx)?;
        Ok((f.width, f.height, f.scored_segments().with_context(ctx)?))
    }
}
