use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::DiscreteField;
use crate::{Error, Result};

/// Grid description written as the `#`-prefixed JSON line that opens a field
/// CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: Vec<usize>,
    pub vertices: usize,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

/// A field file read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldCsv {
    pub meta: GridMeta,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

/// Writes `field` as CSV with columns `x1,...,xn,value`, preceded by a
/// `# {json}` metadata line. `extra` entries are merged into the metadata.
pub fn write_field_csv(
    field: &DiscreteField,
    extra: serde_json::Map<String, serde_json::Value>,
    mut out: impl Write,
) -> Result<()> {
    let grid = field.grid();
    let n = grid.dim();
    let meta = GridMeta {
        dim: n,
        lo: grid.domain().lo().to_vec(),
        hi: grid.domain().hi().to_vec(),
        resolution: grid.resolution().to_vec(),
        vertices: grid.num_vertices(),
        extra,
    };
    writeln!(out, "# {}", serde_json::to_string(&meta)?)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    for v in 0..grid.num_vertices() {
        let mut row: Vec<String> = grid.vertex(v).iter().map(|c| format!("{c:?}")).collect();
        row.push(format!("{:?}", field.values()[v]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a file produced by [`write_field_csv`].
pub fn read_field_csv(mut input: impl BufRead) -> Result<FieldCsv> {
    let mut first = String::new();
    input.read_line(&mut first)?;
    let json = first
        .strip_prefix('#')
        .ok_or_else(|| Error::config("field CSV must start with a '# {json}' metadata line"))?;
    let meta: GridMeta = serde_json::from_str(json.trim())?;
    let mut r = csv::Reader::from_reader(input);
    let n = meta.dim;
    let mut points = Vec::with_capacity(meta.vertices);
    let mut values = Vec::with_capacity(meta.vertices);
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != n + 1 {
            return Err(Error::config(format!(
                "expected {} columns, found {}",
                n + 1,
                rec.len()
            )));
        }
        let nums = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::config(format!("bad number in field CSV: {e}")))?;
        values.push(nums[n]);
        points.push(nums[..n].to_vec());
    }
    Ok(FieldCsv { meta, points, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxDomain;
    use crate::grid::Grid;

    #[test]
    fn round_trip() {
        let g = Grid::uniform(&BoxDomain::unit(2), 3).unwrap();
        let u = DiscreteField::from_fn(g.clone(), |x| x[0] / 3.0 - x[1]);
        let mut buf = Vec::new();
        write_field_csv(&u, Default::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap() == "x1,x2,value");
        let back = read_field_csv(&buf[..]).unwrap();
        assert_eq!(back.meta.resolution, vec![3, 3]);
        assert_eq!(back.values, u.values());
        assert_eq!(back.points.len(), 16);
    }
}
