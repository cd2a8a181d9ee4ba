//! CSV artifact formats.
//!
//! | file            | columns                                        |
//! |-----------------|------------------------------------------------|
//! | horizon GT      | `frame_index,Y,alpha`                          |
//! | horizon report  | `frame_index,Y,alpha,score,candidate_rank`     |
//! | object GT       | `frame_index,object_id,x,y,w,h,motion`         |
//! | tracks          | `frame_index,track_id,x,y,w,h,area,label`      |
//! | transforms      | `frame_index,rotation,tx,ty,scale,cx,cy`       |
//! | landmarks       | `frame_index_a,frame_index_b,xa,ya,xb,yb`      |
//!
//! Horizon readers accept either horizon layout.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the in-memory values exactly.

use std::path::Path;

use mariscope_core::evalbench::{HorizonRecord, ObjectRecord};
use mariscope_core::foreground::TrackObservation;
use mariscope_core::registration::LandmarkPair;
use mariscope_core::{BoundingBox, FrameTransform, HorizonEstimate, MotionLabel};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct HorizonRow {
    frame_index: u64,
    #[serde(rename = "Y")]
    y: f64,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
struct HorizonReportRow {
    frame_index: u64,
    #[serde(rename = "Y")]
    y: f64,
    alpha: f64,
    score: f64,
    candidate_rank: usize,
}

#[derive(Deserialize)]
struct LandmarkRow {
    frame_index_a: u64,
    frame_index_b: u64,
    xa: f64,
    ya: f64,
    xb: f64,
    yb: f64,
}

#[derive(Serialize, Deserialize)]
struct ObjectRow {
    frame_index: u64,
    object_id: u64,
    x: i64,
    y: i64,
    w: u32,
    h: u32,
    motion: String,
}

#[derive(Serialize, Deserialize)]
struct TrackRow {
    frame_index: u64,
    track_id: u64,
    x: i64,
    y: i64,
    w: u32,
    h: u32,
    area: usize,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct TransformRow {
    frame_index: u64,
    rotation: f64,
    tx: f64,
    ty: f64,
    scale: f64,
    cx: f64,
    cy: f64,
}

/// Incremental CSV writer; the header is written on creation, so even an
/// empty artifact is self-describing.
pub struct CsvSink {
    path: std::path::PathBuf,
    writer: csv::Writer<std::fs::File>,
}

impl CsvSink {
    fn create(path: &Path, header: &[&str]) -> Result<Self> {
        crate::io::create_parent(path)?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| Error::format(path, e))?;
        writer.write_record(header).map_err(|e| Error::format(path, e))?;
        Ok(CsvSink { path: path.to_path_buf(), writer })
    }

    fn row<T: Serialize>(&mut self, row: T) -> Result<()> {
        self.writer.serialize(row).map_err(|e| Error::format(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }

    pub fn horizon(path: &Path) -> Result<Self> {
        Self::create(path, &["frame_index", "Y", "alpha"])
    }

    pub fn push_horizon(&mut self, r: &HorizonRecord) -> Result<()> {
        self.row(HorizonRow { frame_index: r.frame_index, y: r.y, alpha: r.alpha })
    }

    /// Detector output: the estimate plus its score and Hough candidate rank.
    pub fn horizon_report(path: &Path) -> Result<Self> {
        Self::create(path, &["frame_index", "Y", "alpha", "score", "candidate_rank"])
    }

    pub fn push_estimate(&mut self, frame_index: u64, e: &HorizonEstimate) -> Result<()> {
        self.row(HorizonReportRow { frame_index, y: e.y, alpha: e.alpha, score: e.score, candidate_rank: e.candidate_rank })
    }

    pub fn transforms(path: &Path) -> Result<Self> {
        Self::create(path, &["frame_index", "rotation", "tx", "ty", "scale", "cx", "cy"])
    }

    pub fn push_transform(&mut self, frame_index: u64, t: &FrameTransform) -> Result<()> {
        self.row(TransformRow {
            frame_index,
            rotation: t.rotation,
            tx: t.translation.0,
            ty: t.translation.1,
            scale: t.scale,
            cx: t.center.0,
            cy: t.center.1,
        })
    }

    pub fn objects(path: &Path) -> Result<Self> {
        Self::create(path, &["frame_index", "object_id", "x", "y", "w", "h", "motion"])
    }

    pub fn push_object(&mut self, r: &ObjectRecord) -> Result<()> {
        self.row(ObjectRow {
            frame_index: r.frame_index,
            object_id: r.object_id,
            x: r.bbox.x,
            y: r.bbox.y,
            w: r.bbox.w,
            h: r.bbox.h,
            motion: r.motion.name().to_string(),
        })
    }

    pub fn tracks(path: &Path) -> Result<Self> {
        Self::create(path, &["frame_index", "track_id", "x", "y", "w", "h", "area", "label"])
    }

    pub fn push_track(&mut self, o: &TrackObservation) -> Result<()> {
        self.row(TrackRow {
            frame_index: o.frame_index,
            track_id: o.track_id,
            x: o.bbox.x,
            y: o.bbox.y,
            w: o.bbox.w,
            h: o.bbox.h,
            area: o.area,
            label: o.label.name().to_string(),
        })
    }
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| Error::format(path, e))?;
    r.deserialize().collect::<std::result::Result<Vec<T>, _>>().map_err(|e| Error::format(path, e))
}

fn parse_label(path: &Path, s: &str) -> Result<MotionLabel> {
    MotionLabel::from_name(s).ok_or_else(|| Error::format(path, format!("unknown motion label {s:?}")))
}

pub fn write_horizon_csv(path: &Path, records: &[HorizonRecord]) -> Result<()> {
    let mut sink = CsvSink::horizon(path)?;
    for r in records {
        sink.push_horizon(r)?;
    }
    sink.flush()
}

pub fn read_horizon_csv(path: &Path) -> Result<Vec<HorizonRecord>> {
    Ok(read_rows::<HorizonRow>(path)?.into_iter().map(|r| HorizonRecord { frame_index: r.frame_index, y: r.y, alpha: r.alpha }).collect())
}

/// Point pairs keyed by the frame they register (`b`), each with the frame
/// it is registered onto (`a`).
pub type Landmarks = std::collections::BTreeMap<u64, (u64, Vec<LandmarkPair>)>;

/// Reads a landmark file. Every `frame_index_b` must name a single
/// `frame_index_a`, which must be an earlier frame.
pub fn read_landmarks_csv(path: &Path) -> Result<Landmarks> {
    let mut out = Landmarks::new();
    for r in read_rows::<LandmarkRow>(path)? {
        if r.frame_index_a >= r.frame_index_b {
            return Err(Error::format(path, format!("frame {} must be registered onto an earlier frame, not {}", r.frame_index_b, r.frame_index_a)));
        }
        let e = out.entry(r.frame_index_b).or_insert_with(|| (r.frame_index_a, Vec::new()));
        if e.0 != r.frame_index_a {
            return Err(Error::format(path, format!("frame {} has landmarks onto both {} and {}", r.frame_index_b, e.0, r.frame_index_a)));
        }
        e.1.push(((r.xa, r.ya), (r.xb, r.yb)));
    }
    Ok(out)
}

pub fn write_objects_csv(path: &Path, records: &[ObjectRecord]) -> Result<()> {
    let mut sink = CsvSink::objects(path)?;
    for r in records {
        sink.push_object(r)?;
    }
    sink.flush()
}

pub fn read_objects_csv(path: &Path) -> Result<Vec<ObjectRecord>> {
    read_rows::<ObjectRow>(path)?
        .into_iter()
        .map(|r| {
            let motion = parse_label(path, &r.motion)?;
            if motion == MotionLabel::Undetermined {
                return Err(Error::format(path, "object ground truth must be static or dynamic"));
            }
            Ok(ObjectRecord { frame_index: r.frame_index, object_id: r.object_id, bbox: BoundingBox::new(r.x, r.y, r.w, r.h), motion })
        })
        .collect()
}

pub fn write_tracks_csv(path: &Path, records: &[TrackObservation]) -> Result<()> {
    let mut sink = CsvSink::tracks(path)?;
    for r in records {
        sink.push_track(r)?;
    }
    sink.flush()
}

pub fn read_tracks_csv(path: &Path) -> Result<Vec<TrackObservation>> {
    read_rows::<TrackRow>(path)?
        .into_iter()
        .map(|r| {
            Ok(TrackObservation {
                frame_index: r.frame_index,
                track_id: r.track_id,
                bbox: BoundingBox::new(r.x, r.y, r.w, r.h),
                area: r.area,
                label: parse_label(path, &r.label)?,
            })
        })
        .collect()
}

pub fn write_transforms_csv(path: &Path, transforms: &[(u64, FrameTransform)]) -> Result<()> {
    let mut sink = CsvSink::transforms(path)?;
    for (i, t) in transforms {
        sink.push_transform(*i, t)?;
    }
    sink.flush()
}

pub fn read_transforms_csv(path: &Path) -> Result<Vec<(u64, FrameTransform)>> {
    Ok(read_rows::<TransformRow>(path)?
        .into_iter()
        .map(|r| (r.frame_index, FrameTransform { rotation: r.rotation, translation: (r.tx, r.ty), scale: r.scale, center: (r.cx, r.cy) }))
        .collect())
}
