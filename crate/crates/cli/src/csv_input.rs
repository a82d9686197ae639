//! Strict CSV ingestion. Comma-separated, required header row, nonnegative
//! integers only, blank lines ignored; anything else is an error naming the
//! offending row.

use dualinspect::{CountPair, CountSample, FullCountSample, LatentTriple};

fn rows(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim_end_matches('\r')))
        .filter(|(_, line)| !line.trim().is_empty())
}

fn parse_fields(row: usize, line: &str, expected: usize) -> Result<Vec<u32>, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != expected {
        return Err(format!(
            "row {row}: expected {expected} comma-separated fields, found {}",
            fields.len()
        ));
    }
    fields
        .iter()
        .map(|f| {
            f.trim()
                .parse::<u32>()
                .map_err(|_| format!("row {row}: '{}' is not a nonnegative integer", f.trim()))
        })
        .collect()
}

fn check_header(row: usize, line: &str, expected: &str) -> Result<(), String> {
    let normalized: Vec<&str> = line.split(',').map(str::trim).collect();
    if normalized != expected.split(',').collect::<Vec<_>>() {
        return Err(format!("row {row}: expected header '{expected}', found '{line}'"));
    }
    Ok(())
}

/// Parse a `r1,r2` file into a count sample.
pub fn parse_pairs(text: &str) -> Result<CountSample, String> {
    let mut iter = rows(text);
    let (row, header) = iter.next().ok_or("input is empty")?;
    check_header(row, header, "r1,r2")?;
    let mut items = Vec::new();
    for (row, line) in iter {
        let fields = parse_fields(row, line, 2)?;
        items.push(CountPair::new(fields[0], fields[1]));
    }
    CountSample::new(items).map_err(|e| e.to_string())
}

/// Parse a `x1,x2,y` file into per-item latent triples.
pub fn parse_triples(text: &str) -> Result<FullCountSample, String> {
    let mut iter = rows(text);
    let (row, header) = iter.next().ok_or("input is empty")?;
    check_header(row, header, "x1,x2,y")?;
    let mut items = Vec::new();
    for (row, line) in iter {
        let fields = parse_fields(row, line, 3)?;
        items.push(LatentTriple::new(fields[0], fields[1], fields[2]));
    }
    FullCountSample::new(items).map_err(|e| e.to_string())
}

/// Render a count sample back to the `r1,r2` layout.
#[cfg(test)]
pub fn write_pairs(sample: &CountSample) -> String {
    let mut out = String::from("r1,r2\n");
    for pair in sample.items() {
        out.push_str(&format!("{},{}\n", pair.r1, pair.r2));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_blank_lines_and_crlf() {
        let sample = parse_pairs("r1,r2\r\n\r\n2,3\n1,1\n\n3,4\n0,2\n").unwrap();
        assert_eq!(sample.len(), 4);
        assert_eq!(sample.items()[0], CountPair::new(2, 3));
    }

    #[test]
    fn header_mismatch_names_the_row() {
        let err = parse_pairs("x1,x2,y\n1,2\n").unwrap_err();
        assert!(err.contains("row 1"), "{err}");
        assert!(err.contains("r1,r2"), "{err}");
    }

    #[test]
    fn bad_field_names_the_row() {
        let err = parse_pairs("r1,r2\n2,3\n2,-1\n").unwrap_err();
        assert!(err.contains("row 3"), "{err}");
        let err = parse_pairs("r1,r2\n2,3\n2,3,4\n").unwrap_err();
        assert!(err.contains("row 3") && err.contains("fields"), "{err}");
        let err = parse_pairs("r1,r2\n2,3\n1,1.5\n").unwrap_err();
        assert!(err.contains("1.5"), "{err}");
    }

    #[test]
    fn triple_round_trip() {
        let sample = parse_triples("x1,x2,y\n1,2,3\n0,1,1\n").unwrap();
        assert_eq!(sample.len(), 2);
        assert_eq!(sample.items()[1], LatentTriple::new(0, 1, 1));
    }

    #[test]
    fn pair_round_trip() {
        let text = "r1,r2\n2,3\n1,1\n3,4\n0,2\n";
        let sample = parse_pairs(text).unwrap();
        assert_eq!(write_pairs(&sample), text);
    }
}
