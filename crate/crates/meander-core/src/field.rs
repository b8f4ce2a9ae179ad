// Copyright 2026 The meander authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Expected or empirical particle counts indexed by position, with the
//! domain scale and an optional time tag. CSV layout: `#`-prefixed metadata
//! lines, a header row, then `lx,ly,value` rows.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FieldEntry {
    /// Integer lattice coordinates when the field lives on a lattice.
    pub coord: Option<[i64; 2]>,
    /// Real position of the sample.
    pub pos: [f64; 2],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub scale: f64,
    /// Time tag; `None` means the stationary profile.
    pub time: Option<f64>,
    entries: Vec<FieldEntry>,
}

impl DensityField {
    pub fn new(scale: f64, time: Option<f64>) -> Self {
        Self {
            scale,
            time,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, coord: Option<[i64; 2]>, pos: [f64; 2], value: f64) {
        self.entries.push(FieldEntry { coord, pos, value });
    }

    pub fn entries(&self) -> &[FieldEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.value)
    }

    /// Value at an integer lattice coordinate.
    pub fn value_at(&self, coord: [i64; 2]) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.coord == Some(coord))
            .map(|e| e.value)
    }

    /// Largest absolute difference against another field with identical
    /// support (compared entry by entry).
    pub fn max_abs_diff(&self, other: &DensityField) -> Result<f64> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::InvalidArgument(format!(
                "field supports differ: {} vs {} entries",
                self.entries.len(),
                other.entries.len()
            )));
        }
        let mut m = 0.0f64;
        for (a, b) in self.entries.iter().zip(&other.entries) {
            if a.coord != b.coord {
                return Err(Error::InvalidArgument("field supports differ".into()));
            }
            m = m.max((a.value - b.value).abs());
        }
        Ok(m)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, extra_meta: &[(String, String)]) -> Result<()> {
        writeln!(w, "# meander density field v1")?;
        writeln!(w, "# scale = {}", self.scale)?;
        match self.time {
            Some(t) => writeln!(w, "# time = {t}")?,
            None => writeln!(w, "# time = inf")?,
        }
        for (k, v) in extra_meta {
            writeln!(w, "# {k} = {v}")?;
        }
        writeln!(w, "lx,ly,value")?;
        for e in &self.entries {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", e.pos[0], e.pos[1], e.value)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut scale = 1.0f64;
        let mut time = None;
        let mut entries = Vec::new();
        let mut saw_header = false;
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let mut parts = meta.splitn(2, '=');
                let key = parts.next().unwrap_or("").trim();
                let val = parts.next().unwrap_or("").trim();
                match key {
                    "scale" => scale = val.parse().map_err(|_| Error::Other("bad scale".into()))?,
                    "time" => {
                        time = if val == "inf" {
                            None
                        } else {
                            Some(val.parse().map_err(|_| Error::Other("bad time".into()))?)
                        }
                    }
                    _ => {}
                }
                continue;
            }
            if !saw_header {
                if line != "lx,ly,value" {
                    return Err(Error::Other(format!("unexpected header: {line}")));
                }
                saw_header = true;
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Other(format!("bad row: {line}")));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Other(format!("bad number: {s}")))
            };
            entries.push(FieldEntry {
                coord: None,
                pos: [parse(cols[0])?, parse(cols[1])?],
                value: parse(cols[2])?,
            });
        }
        Ok(Self { scale, time, entries })
    }
}
