use std::io::{Read, Write};
use std::path::Path;

use super::objective::{ObjectiveBreakdown, PlacementSolution};
use crate::error::{Error, Result};

impl PlacementSolution {
    /// CSV `patch_id,gpu`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["patch_id", "gpu"])?;
        for (j, k) in self.assignment().iter().enumerate() {
            w.write_record([j.to_string(), k.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file).map_err(|source| Error::Csv {
            path: path.to_owned(),
            source,
        })
    }

    /// Rows may come in any order but must cover patches `0..n` exactly once.
    pub fn read_csv<R: Read>(input: R, n_gpus: usize) -> Result<Self> {
        let bad = |offset: u64, reason: String| Error::Format {
            what: "placement csv",
            offset,
            reason,
        };
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers().map_err(|e| bad(0, e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != ["patch_id", "gpu"] {
            return Err(bad(0, "header must be patch_id,gpu".into()));
        }
        let mut pairs = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(e.position().map_or(0, |p| p.byte()), e.to_string()))?;
            let offset = rec.position().map_or(0, |p| p.byte());
            let parse = |i: usize| -> Result<usize> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| bad(offset, format!("column {i} is not an index")))
            };
            pairs.push((parse(0)?, parse(1)?));
        }
        let mut gpu = vec![u32::MAX; pairs.len()];
        for (j, k) in pairs {
            if j >= gpu.len() || gpu[j] != u32::MAX {
                return Err(Error::Consistency(format!("patch {j} is out of range or listed twice")));
            }
            gpu[j] = k as u32;
        }
        PlacementSolution::new(gpu, n_gpus)
    }

    pub fn load_csv(path: &Path, n_gpus: usize) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, n_gpus)
    }
}

impl ObjectiveBreakdown {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let w = PlacementSolution::new(vec![1, 0, 0, 1], 2).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("patch_id,gpu\n0,1\n"));
        assert_eq!(PlacementSolution::read_csv(&buf[..], 2).unwrap(), w);
    }

    #[test]
    fn bad_inputs() {
        let dup = "patch_id,gpu\n0,0\n0,1\n";
        assert!(matches!(PlacementSolution::read_csv(dup.as_bytes(), 2), Err(Error::Consistency(_))));
        let junk = "patch_id,gpu\n0,x\n";
        assert!(matches!(PlacementSolution::read_csv(junk.as_bytes(), 2), Err(Error::Format { .. })));
        let unbalanced = "patch_id,gpu\n0,0\n1,0\n";
        assert!(matches!(PlacementSolution::read_csv(unbalanced.as_bytes(), 2), Err(Error::Constraint(_))));
    }
}
