//! Dataset CSV format: header `y1,...,yp,label`, one record per row, labels
//! `1` or `2`, an empty label field for a missing label.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::likelihood::{Dataset, Record};
use crate::model::ClassLabel;

fn header(p: usize) -> Vec<String> {
    (1..=p)
        .map(|j| format!("y{j}"))
        .chain(std::iter::once("label".to_string()))
        .collect()
}

/// Parses a dataset. Errors name the offending row (1-based, counting the
/// header as row 1) and column.
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let head = rdr
        .headers()
        .map_err(|e| Error::Input(format!("row 1: {e}")))?
        .clone();
    let cols: Vec<&str> = head.iter().collect();
    if cols.len() < 2 || cols.last() != Some(&"label") {
        return Err(Error::Input("row 1: header must be y1,...,yp,label".into()));
    }
    let p = cols.len() - 1;
    if cols[..p].iter().zip(header(p)).any(|(c, e)| *c != e) {
        return Err(Error::Input(format!(
            "row 1: header must be {}",
            header(p).join(",")
        )));
    }
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Input(format!("row {line}: {e}")))?;
        if row.len() != p + 1 {
            return Err(Error::Input(format!(
                "row {line}: expected {} fields, found {}",
                p + 1,
                row.len()
            )));
        }
        let y = (0..p)
            .map(|j| {
                let field = &row[j];
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::Input(format!(
                            "row {line}, column y{}: not a finite number: {field:?}",
                            j + 1
                        ))
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = match &row[p] {
            "" => None,
            "1" => Some(ClassLabel::One),
            "2" => Some(ClassLabel::Two),
            other => {
                return Err(Error::Input(format!(
                    "row {line}, column label: expected 1, 2 or empty, found {other:?}"
                )))
            }
        };
        records.push(Record { y, label });
    }
    Dataset::new(p, records)
}

pub fn read_dataset_file(path: &std::path::Path) -> Result<Dataset> {
    let file =
        std::fs::File::open(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    read_dataset(std::io::BufReader::new(file))
}

/// Writes a dataset with round-trip precision.
pub fn write_dataset<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let io_err = |e: csv::Error| Error::Input(e.to_string());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(header(data.p())).map_err(io_err)?;
    for r in data.records() {
        let mut fields: Vec<String> = r.y.iter().map(|v| format!("{v:?}")).collect();
        fields.push(r.label.map_or(String::new(), |l| l.as_u8().to_string()));
        w.write_record(&fields).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let data = Dataset::new(
            2,
            vec![
                Record::labeled(vec![0.1, -2.5e-17], ClassLabel::One),
                Record::unlabeled(vec![1.0 / 3.0, 4.0]),
                Record::labeled(vec![-7.25, 0.0], ClassLabel::Two),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_dataset(&data, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("y1,y2,label\n"));
        assert!(text.contains("0.3333333333333333,4.0,\n"));
        assert_eq!(read_dataset(&buf[..]).unwrap(), data);
    }

    #[test]
    fn errors_name_row_and_column() {
        let err = read_dataset("y1,label\n0.5,1\nabc,2\n".as_bytes())
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 3") && err.contains("y1"), "{err}");
        let err = read_dataset("y1,label\n0.5,3\n".as_bytes())
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 2") && err.contains("label"), "{err}");
        assert!(read_dataset("x,label\n1,1\n".as_bytes()).is_err());
    }
}
