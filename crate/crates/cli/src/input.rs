//! CSV ingestion: one row per variable, one column per observation.

use std::io::Read;

use sphericity::matrix::DataMatrix;

/// Parses a data matrix. Rows are reported 1-based, counting data rows only.
pub fn read_matrix<R: Read>(reader: R, header: bool) -> Result<DataMatrix, String> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| format!("row {row}: {e}"))?;
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            let got = record.len();
            let noun = if got == 1 { "field" } else { "fields" };
            return Err(format!("row {row} has {got} {noun}, expected {expected} like row 1"));
        }
        for (j, field) in record.iter().enumerate() {
            let col = j + 1;
            if field.is_empty() {
                return Err(format!("row {row}, column {col}: missing value"));
            }
            let v: f64 = field
                .parse()
                .map_err(|_| format!("row {row}, column {col}: cannot parse '{field}' as a number"))?;
            if !v.is_finite() {
                return Err(format!("row {row}, column {col}: value '{field}' is not finite"));
            }
            values.push(v);
        }
        rows += 1;
    }
    let cols = width.unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err("input has no data".into());
    }
    // values are row-major; DataMatrix stores columns
    let rows_vec: Vec<Vec<f64>> = values.chunks(cols).map(<[f64]>::to_vec).collect();
    DataMatrix::from_rows(&rows_vec).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_rows_as_variables() {
        let x = read_matrix("1,2,3\n4,5,6\n".as_bytes(), false).unwrap();
        assert_eq!((x.p(), x.n()), (2, 3));
        assert_eq!(x.column(1), &[2.0, 5.0]);
    }

    #[test]
    fn skips_header_when_asked() {
        let x = read_matrix("a,b\n1,2\n3,4\n5, 6\n".as_bytes(), true).unwrap();
        assert_eq!((x.p(), x.n()), (3, 2));
        assert!(read_matrix("a,b\n1,2\n".as_bytes(), false).is_err());
    }

    #[test]
    fn names_the_ragged_row() {
        let err = read_matrix("1,2\n3,4\n5\n".as_bytes(), false).unwrap_err();
        assert!(err.contains("row 3"), "{err}");
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(read_matrix("1,x\n".as_bytes(), false).unwrap_err().contains("column 2"));
        assert!(read_matrix("1,\n".as_bytes(), false).unwrap_err().contains("missing"));
        assert!(read_matrix("1,NaN\n".as_bytes(), false).unwrap_err().contains("not finite"));
        assert!(read_matrix("".as_bytes(), false).is_err());
    }
}
