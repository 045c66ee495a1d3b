//! CSV particle files and tables.
//!
//! Every file starts with a `# csfmm-csv v1` line followed by a mandatory
//! header. Floats are written with 17 significant digits so that values
//! survive a round trip bit for bit.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use csfmm::Vec3;

use crate::error::{CliError, CliResult};

pub const VERSION_LINE: &str = "# csfmm-csv v1";

/// Tolerance on `|x| − 1` for positions read from files.
const UNIT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParticleFormat {
    /// `x,y,z,weight`: weights are used as given.
    Xyz,
    /// `lon,lat,area,value`: degrees, steradians, field value.
    LonLat,
}

impl ParticleFormat {
    pub fn header(self) -> [&'static str; 4] {
        match self {
            ParticleFormat::Xyz => ["x", "y", "z", "weight"],
            ParticleFormat::LonLat => ["lon", "lat", "area", "value"],
        }
    }

    fn detect(header: &csv::StringRecord) -> CliResult<Self> {
        let cols: Vec<String> = header.iter().map(|c| c.trim().to_ascii_lowercase()).collect();
        for f in [ParticleFormat::Xyz, ParticleFormat::LonLat] {
            if cols == f.header() {
                return Ok(f);
            }
        }
        Err(CliError::Csv(format!(
            "unrecognised particle header `{}`; expected `x,y,z,weight` or `lon,lat,area,value`",
            cols.join(",")
        )))
    }
}

#[derive(Clone, Debug)]
pub struct Particles {
    pub format: ParticleFormat,
    pub positions: Vec<Vec3>,
    /// Quadrature weights `A_j f_j`, or the weights column.
    pub weights: Vec<f64>,
    /// Present only for `lon,lat,area,value` input.
    pub areas: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
}

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file))
}

fn parse_row(rec: &csv::StringRecord, width: usize, line: usize) -> CliResult<Vec<f64>> {
    if rec.len() != width {
        return Err(CliError::Csv(format!("line {line}: expected {width} columns, found {}", rec.len())));
    }
    rec.iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Csv(format!("line {line}: `{s}` is not a finite number")))
        })
        .collect()
}

pub fn read_particles(path: &Path) -> CliResult<Particles> {
    let mut rdr = reader(path)?;
    let format = ParticleFormat::detect(rdr.headers()?)?;
    let mut out = Particles {
        format,
        positions: vec![],
        weights: vec![],
        areas: (format == ParticleFormat::LonLat).then(Vec::new),
        values: (format == ParticleFormat::LonLat).then(Vec::new),
    };
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k + 2, |p| p.line() as usize);
        let r = parse_row(&rec, 4, line)?;
        match format {
            ParticleFormat::Xyz => {
                let p = Vec3::new(r[0], r[1], r[2]);
                if (p.norm() - 1.0).abs() > UNIT_TOL {
                    return Err(CliError::Csv(format!("line {line}: point is not on the unit sphere")));
                }
                out.positions.push(p.normalized());
                out.weights.push(r[3]);
            }
            ParticleFormat::LonLat => {
                if r[2] < 0.0 {
                    return Err(CliError::Csv(format!("line {line}: negative area")));
                }
                out.positions.push(Vec3::from_lon_lat(r[0].to_radians(), r[1].to_radians()));
                out.weights.push(r[2] * r[3]);
                out.areas.as_mut().unwrap().push(r[2]);
                out.values.as_mut().unwrap().push(r[3]);
            }
        }
    }
    if out.positions.is_empty() {
        return Err(CliError::Csv(format!("{}: no particles", path.display())));
    }
    Ok(out)
}

/// Reads the value columns of a potentials file (`x,y,z,phi...`), checking
/// that its positions match `positions`.
pub fn read_reference(path: &Path, positions: &[Vec3]) -> CliResult<Vec<Vec<f64>>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 4 || cols[..3] != ["x", "y", "z"] {
        return Err(CliError::Reference(format!("reference header `{}` must start with x,y,z", cols.join(","))));
    }
    let mut rows = vec![];
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let r = parse_row(&rec, cols.len(), k + 2)?;
        let p = Vec3::new(r[0], r[1], r[2]);
        match positions.get(k) {
            Some(q) if p.dist(*q) <= 1e-12 => rows.push(r[3..].to_vec()),
            Some(_) => return Err(CliError::Reference(format!("reference row {} is at a different point", k + 1))),
            None => return Err(CliError::Reference(format!("reference has more than {} rows", positions.len()))),
        }
    }
    if rows.len() != positions.len() {
        return Err(CliError::Reference(format!("reference has {} rows, expected {}", rows.len(), positions.len())));
    }
    Ok(rows)
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table with the version line and a header.
pub struct Table {
    inner: csv::Writer<Box<dyn Write>>,
    width: usize,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> CliResult<Self> {
        let mut file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        writeln!(file, "{VERSION_LINE}")?;
        Self::with_writer(Box::new(std::io::BufWriter::new(file)), header)
    }

    pub fn with_writer(w: Box<dyn Write>, header: &[&str]) -> CliResult<Self> {
        let mut inner = csv::Writer::from_writer(w);
        inner.write_record(header)?;
        Ok(Table { inner, width: header.len() })
    }

    pub fn row(&mut self, values: &[f64]) -> CliResult<()> {
        debug_assert_eq!(values.len(), self.width);
        self.inner.write_record(values.iter().map(|&v| fmt_f64(v)))?;
        Ok(())
    }

    /// Row with leading text columns.
    pub fn mixed_row(&mut self, text: &[&str], values: &[f64]) -> CliResult<()> {
        debug_assert_eq!(text.len() + values.len(), self.width);
        let rec: Vec<String> = text.iter().map(|s| s.to_string()).chain(values.iter().map(|&v| fmt_f64(v))).collect();
        self.inner.write_record(&rec)?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut f = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn detects_both_headers() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(&dir, "a.csv", "# csfmm-csv v1\nx,y,z,weight\n0,0,1,2.5\n1,0,0,-1\n");
        let p = read_particles(&a).unwrap();
        assert_eq!(p.format, ParticleFormat::Xyz);
        assert_eq!(p.weights, vec![2.5, -1.0]);
        assert!(p.areas.is_none());

        let b = write(&dir, "b.csv", "lon, lat, area, value\n90,0,0.5,4\n0,90,0.25,2\n");
        let p = read_particles(&b).unwrap();
        assert_eq!(p.format, ParticleFormat::LonLat);
        assert!(p.positions[0].dist(Vec3::new(0.0, 1.0, 0.0)) < 1e-15);
        assert!(p.positions[1].dist(Vec3::new(0.0, 0.0, 1.0)) < 1e-15);
        assert_eq!(p.weights, vec![2.0, 0.5]);
        assert_eq!(p.values.unwrap(), vec![4.0, 2.0]);
    }

    #[test]
    fn malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        for body in [
            "a,b,c\n1,2,3\n",
            "x,y,z,weight\n0,0,1\n",
            "x,y,z,weight\n0,0,2,1\n",
            "x,y,z,weight\n0,0,1,nan\n",
            "lon,lat,area,value\n0,0,-1,1\n",
            "x,y,z,weight\n",
        ] {
            let p = write(&dir, "bad.csv", body);
            let e = read_particles(&p).unwrap_err();
            assert_eq!(e.code(), "E_CSV", "{body:?}: {e}");
        }
        let e = read_particles(&dir.path().join("missing.csv")).unwrap_err();
        assert_eq!(e.code(), "E_IO");
    }

    #[test]
    fn table_and_reference() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phi.csv");
        let pts = [Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.6, 0.8, 0.0)];
        let mut t = Table::create(&path, &["x", "y", "z", "phi"]).unwrap();
        for (p, v) in pts.iter().zip([0.1, 0.2]) {
            t.row(&[p.x, p.y, p.z, v]).unwrap();
        }
        t.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(VERSION_LINE));
        assert_eq!(read_reference(&path, &pts).unwrap(), vec![vec![0.1], vec![0.2]]);
        assert_eq!(read_reference(&path, &pts[..1]).unwrap_err().code(), "E_REFERENCE");
        assert_eq!(read_reference(&path, &[pts[1], pts[0]]).unwrap_err().code(), "E_REFERENCE");
    }
}
