//! Extended-XYZ-style frames file.
//!
//! Per frame: an atom-count line, a key=value properties line (energy,
//! trajectory, frame, format version, column spec), then one line per atom:
//! `species x y z fx fy fz free`. Floats are written with 17 significant
//! digits so a write/read round trip is bit-exact.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{DataError, Structure};

const COLUMNS: &str = "species:x:y:z:fx:fy:fz:free";
const XYZ_VERSION: u32 = 1;

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_frames(path: &Path, frames: &[Structure]) -> Result<(), DataError> {
    let mut out = String::new();
    for s in frames {
        writeln!(out, "{}", s.n_atoms()).unwrap();
        writeln!(
            out,
            "energy={} trajectory={} frame={} version={} columns={}",
            fmt_f(s.energy),
            s.trajectory,
            s.frame,
            XYZ_VERSION,
            COLUMNS
        )
        .unwrap();
        for i in 0..s.n_atoms() {
            let p = s.positions[i];
            let f = s.forces[i];
            writeln!(
                out,
                "{} {} {} {} {} {} {} {}",
                s.species[i],
                fmt_f(p[0]),
                fmt_f(p[1]),
                fmt_f(p[2]),
                fmt_f(f[0]),
                fmt_f(f[1]),
                fmt_f(f[2]),
                u8::from(s.free[i])
            )
            .unwrap();
        }
    }
    std::fs::write(path, out).map_err(|e| DataError::Io { path: path.display().to_string(), source: e })
}

struct LineReader<R> {
    inner: R,
    line_no: usize,
    path: String,
}

impl<R: BufRead> LineReader<R> {
    fn next_line(&mut self) -> Result<Option<String>, DataError> {
        let mut buf = String::new();
        let n = self
            .inner
            .read_line(&mut buf)
            .map_err(|e| DataError::Io { path: self.path.clone(), source: e })?;
        if n == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        Ok(Some(buf.trim_end_matches(['\n', '\r']).to_string()))
    }

    fn err(&self, msg: impl Into<String>) -> DataError {
        DataError::Parse { path: self.path.clone(), line: self.line_no, msg: msg.into() }
    }
}

fn parse_finite(r: &LineReader<impl BufRead>, tok: &str, what: &str) -> Result<f64, DataError> {
    let v: f64 = tok.parse().map_err(|_| r.err(format!("malformed {what}: `{tok}`")))?;
    if !v.is_finite() {
        return Err(r.err(format!("non-finite {what}: `{tok}`")));
    }
    Ok(v)
}

pub fn read_frames(path: &Path) -> Result<Vec<Structure>, DataError> {
    let file = std::fs::File::open(path)
        .map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
    let mut r = LineReader {
        inner: BufReader::new(file),
        line_no: 0,
        path: path.display().to_string(),
    };

    let mut frames = Vec::new();
    while let Some(count_line) = r.next_line()? {
        if count_line.trim().is_empty() {
            continue;
        }
        let n: usize = count_line
            .trim()
            .parse()
            .map_err(|_| r.err(format!("expected atom count, got `{count_line}`")))?;

        let header = r.next_line()?.ok_or_else(|| r.err("missing properties line"))?;
        let mut energy = None;
        let mut trajectory = None;
        let mut frame = None;
        for kv in header.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| r.err(format!("malformed property `{kv}`")))?;
            match k {
                "energy" => energy = Some(parse_finite(&r, v, "energy")?),
                "trajectory" => {
                    trajectory = Some(v.parse().map_err(|_| r.err("malformed trajectory id"))?)
                }
                "frame" => frame = Some(v.parse().map_err(|_| r.err("malformed frame index"))?),
                "version" => {
                    let ver: u32 = v.parse().map_err(|_| r.err("malformed version"))?;
                    if ver != XYZ_VERSION {
                        return Err(r.err(format!("unsupported frames version {ver}")));
                    }
                }
                "columns" => {
                    if v != COLUMNS {
                        return Err(r.err(format!("unsupported column spec `{v}`")));
                    }
                }
                _ => return Err(r.err(format!("unknown property `{k}`"))),
            }
        }
        let energy = energy.ok_or_else(|| r.err("missing energy property"))?;
        let trajectory = trajectory.ok_or_else(|| r.err("missing trajectory property"))?;
        let frame = frame.ok_or_else(|| r.err("missing frame property"))?;

        let mut s = Structure {
            species: Vec::with_capacity(n),
            positions: Vec::with_capacity(n),
            energy,
            forces: Vec::with_capacity(n),
            free: Vec::with_capacity(n),
            trajectory,
            frame,
        };
        for _ in 0..n {
            let line = r
                .next_line()?
                .ok_or_else(|| r.err(format!("truncated frame: expected {n} atom lines")))?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 8 {
                return Err(r.err(format!("expected 8 columns, got {}", toks.len())));
            }
            let z: u8 = toks[0].parse().map_err(|_| r.err("malformed species id"))?;
            let mut p = [0.0; 3];
            let mut f = [0.0; 3];
            for k in 0..3 {
                p[k] = parse_finite(&r, toks[1 + k], "position")?;
                f[k] = parse_finite(&r, toks[4 + k], "force")?;
            }
            let free = match toks[7] {
                "0" => false,
                "1" => true,
                other => return Err(r.err(format!("malformed free flag `{other}`"))),
            };
            s.species.push(z);
            s.positions.push(p);
            s.forces.push(f);
            s.free.push(free);
        }
        frames.push(s);
    }
    Ok(frames)
}
