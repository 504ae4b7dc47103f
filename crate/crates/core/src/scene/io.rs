//! Dataset files: a JSON header plus a sibling little-endian binary points file.
//!
//! Points file layout: magic `SSPC`, `u32` count, `count * 3` `f32` positions (x, y, z),
//! then `count * 2` `f32` presence intervals (start, end) iff the header declares temporal data.
//! Positions are stored in single precision, so only clouds whose coordinates are exactly
//! representable as `f32` (everything the generators produce) round-trip bit-exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CameraView, PointCloud, Presence, SceneDataset, WorkloadProfile};
use crate::error::{Error, Result};
use crate::geometry::Point3;

pub const DATASET_VERSION: &str = "splatsched-v1";
pub const POINTS_FILE: &str = "points.bin";
pub const POINTS_MAGIC: &[u8; 4] = b"SSPC";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: String,
    profile: WorkloadProfile,
    temporal: bool,
    point_count: u64,
    points_file: String,
    views: Vec<CameraView>,
}

/// Writes the header to `header_path` and the points to `points.bin` next to it.
pub fn save_dataset(dataset: &SceneDataset, header_path: &Path) -> Result<()> {
    let temporal = dataset.cloud.presence().is_some();
    let header = Header {
        version: DATASET_VERSION.to_owned(),
        profile: dataset.profile.clone(),
        temporal,
        point_count: dataset.cloud.len() as u64,
        points_file: POINTS_FILE.to_owned(),
        views: dataset.views.clone(),
    };
    let json = serde_json::to_string_pretty(&header).map_err(|source| Error::Json {
        path: header_path.to_owned(),
        source,
    })?;
    fs::write(header_path, json).map_err(|e| Error::io(header_path, e))?;

    let n = dataset.cloud.len();
    let mut buf = Vec::with_capacity(8 + n * 12 + if temporal { n * 8 } else { 0 });
    buf.extend_from_slice(POINTS_MAGIC);
    let count = u32::try_from(n)
        .map_err(|_| Error::param("points", "more than u32::MAX points cannot be stored"))?;
    buf.extend_from_slice(&count.to_le_bytes());
    for p in dataset.cloud.points() {
        for v in [p.x, p.y, p.z] {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    if let Some(presence) = dataset.cloud.presence() {
        for p in presence {
            buf.extend_from_slice(&(p.start as f32).to_le_bytes());
            buf.extend_from_slice(&(p.end as f32).to_le_bytes());
        }
    }
    let points_path = sibling(header_path, POINTS_FILE);
    fs::write(&points_path, buf).map_err(|e| Error::io(points_path, e))
}

pub fn load_dataset(header_path: &Path) -> Result<SceneDataset> {
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| json_format_error(&text, &e))?;
    match value.get("version").and_then(|v| v.as_str()) {
        Some(DATASET_VERSION) => {}
        Some(other) => {
            return Err(Error::Version {
                found: other.to_owned(),
                expected: DATASET_VERSION,
            })
        }
        None => {
            return Err(Error::Format {
                what: "dataset header",
                offset: 0,
                reason: "missing string field `version`".into(),
            })
        }
    }
    let header: Header = serde_json::from_str(&text).map_err(|e| json_format_error(&text, &e))?;
    if header.points_file.contains(['/', '\\']) {
        return Err(Error::Format {
            what: "dataset header",
            offset: 0,
            reason: "points_file must be a bare file name".into(),
        });
    }
    let points_path = sibling(header_path, &header.points_file);
    let bytes = fs::read(&points_path).map_err(|e| Error::io(&points_path, e))?;
    let (points, presence) = decode_points(&bytes, header.temporal)?;
    if points.len() as u64 != header.point_count {
        return Err(Error::Format {
            what: "points file",
            offset: 4,
            reason: format!(
                "header declares {} points, points file holds {}",
                header.point_count,
                points.len()
            ),
        });
    }
    let cloud = PointCloud::new(points, presence)?;
    SceneDataset::new(cloud, header.views, header.profile)
}

fn sibling(header_path: &Path, name: &str) -> PathBuf {
    header_path.with_file_name(name)
}

fn json_format_error(text: &str, err: &serde_json::Error) -> Error {
    // serde_json reports 1-based line/column; convert to a byte offset.
    let offset = if err.line() == 0 {
        0
    } else {
        text.split_inclusive('\n')
            .take(err.line() - 1)
            .map(str::len)
            .sum::<usize>()
            + err.column().saturating_sub(1)
    };
    Error::Format {
        what: "dataset header",
        offset: offset as u64,
        reason: err.to_string(),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, field: &str) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format {
                what: "points file",
                offset: self.bytes.len() as u64,
                reason: format!("truncated while reading {field}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn f32(&mut self, field: &str) -> Result<f64> {
        let b = self.take(4, field)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
    }
}

fn decode_points(bytes: &[u8], temporal: bool) -> Result<(Vec<Point3>, Option<Vec<Presence>>)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != POINTS_MAGIC {
        return Err(Error::Format {
            what: "points file",
            offset: 0,
            reason: "bad magic bytes".into(),
        });
    }
    let c = r.take(4, "count")?;
    let count = u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize;
    let per_point = if temporal { 20 } else { 12 };
    let expected = 8 + count * per_point;
    if bytes.len() < expected {
        return Err(Error::Format {
            what: "points file",
            offset: bytes.len() as u64,
            reason: format!("truncated: {count} points need {expected} bytes"),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Format {
            what: "points file",
            offset: expected as u64,
            reason: "trailing bytes after point data".into(),
        });
    }
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let x = r.f32("position")?;
        let y = r.f32("position")?;
        let z = r.f32("position")?;
        points.push(Point3::new(x, y, z));
    }
    let presence = if temporal {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let start = r.f32("presence")?;
            let end = r.f32("presence")?;
            out.push(Presence { start, end });
        }
        Some(out)
    } else {
        None
    };
    Ok((points, presence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_aerial_scene, generate_temporal_scene, AerialParams, TemporalParams};

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.json");
        let d = generate_temporal_scene(&TemporalParams {
            aerial: AerialParams::new(5, 300, (3, 3), 9, 40.0),
            duration: 4.0,
        })
        .unwrap();
        save_dataset(&d, &path).unwrap();
        assert!(dir.path().join(POINTS_FILE).exists());
        assert_eq!(load_dataset(&path).unwrap(), d);
    }

    #[test]
    fn truncated_points_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.json");
        let d = generate_aerial_scene(&AerialParams::new(5, 100, (3, 3), 9, 40.0)).unwrap();
        save_dataset(&d, &path).unwrap();
        let pts = dir.path().join(POINTS_FILE);
        let bytes = fs::read(&pts).unwrap();
        for cut in [0, 3, 6, 100, bytes.len() - 1] {
            fs::write(&pts, &bytes[..cut]).unwrap();
            match load_dataset(&path) {
                Err(Error::Format { offset, .. }) => assert!(offset <= cut as u64),
                other => panic!("cut at {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.json");
        let d = generate_aerial_scene(&AerialParams::new(5, 10, (3, 3), 2, 40.0)).unwrap();
        save_dataset(&d, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap().replace(DATASET_VERSION, "splatsched-v9");
        fs::write(&path, text).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Version { .. })));
    }

    #[test]
    fn malformed_header_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.json");
        fs::write(&path, "{\"version\": \"splatsched-v1\",\n  \"profile\": [}").unwrap();
        match load_dataset(&path) {
            Err(Error::Format { offset, .. }) => assert!(offset > 20 && offset < 50, "{offset}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        assert!(matches!(
            decode_points(b"XXXX\0\0\0\0", false),
            Err(Error::Format { offset: 0, .. })
        ));
        let (pts, pres) = decode_points(b"SSPC\0\0\0\0", false).unwrap();
        assert!(pts.is_empty() && pres.is_none());
    }
}
