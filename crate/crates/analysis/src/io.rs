use std::io::{Read, Write};

use crate::{AnalysisError, Distribution};

/// Reads one count per line. Blank lines are skipped; a non-numeric first
/// line is treated as a header.
pub fn read_distribution(label: impl Into<String>, reader: impl Read) -> Result<Distribution, AnalysisError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let Some(field) = record.get(0).map(str::trim).filter(|f| !f.is_empty()) else { continue };
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(AnalysisError::BadParams(format!("line {}: {field:?} is not a number", i + 1))),
        }
    }
    Distribution::new(label, values)
}

/// Writes a header and rows as CSV.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_counts_with_optional_header() {
        let d = read_distribution("x", "followers\n10\n\n20\n30\n".as_bytes()).unwrap();
        assert_eq!(d.values(), &[10.0, 20.0, 30.0]);
        let d = read_distribution("x", "1\n2".as_bytes()).unwrap();
        assert_eq!(d.values(), &[1.0, 2.0]);
    }

    #[test]
    fn rejects_garbage_and_negatives() {
        assert!(matches!(read_distribution("x", "1\nabc\n".as_bytes()), Err(AnalysisError::BadParams(_))));
        assert!(matches!(read_distribution("x", "1\n-2\n".as_bytes()), Err(AnalysisError::BadValue(_))));
        assert!(matches!(read_distribution("x", "".as_bytes()), Err(AnalysisError::Empty)));
    }

    #[test]
    fn writes_rows() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["a", "b"], &[vec!["1".into(), "x,y".into()]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,\"x,y\"\n");
    }
}
