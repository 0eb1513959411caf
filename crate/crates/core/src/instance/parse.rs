//! Reader and writer for the Solomon / Gehring-Homberger text layout.
//!
//! ```text
//! C1_2_1
//!
//! VEHICLE
//! NUMBER     CAPACITY
//!   50          200
//!
//! CUSTOMER
//! CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE   TIME
//!     0      70         70          0          0       1351          0
//!     1      33         78         20        750        809         90
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{DistanceConvention, Instance, Vertex};
use crate::error::{Error, Result};

pub fn parse_instance(text: &str) -> Result<Instance> {
    parse_instance_with(text, DistanceConvention::Exact)
}

pub fn parse_instance_with(text: &str, convention: DistanceConvention) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (_, name) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty instance file"))?;
    let name = name.to_string();

    let (line, tag) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "malformed header: missing VEHICLE block"))?;
    if !tag.eq_ignore_ascii_case("VEHICLE") {
        return Err(Error::parse(line, format!("malformed header: expected VEHICLE, found {tag:?}")));
    }
    let (line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(line, "malformed header: missing NUMBER CAPACITY line"))?;
    let upper = header.to_ascii_uppercase();
    if !(upper.contains("NUMBER") && upper.contains("CAPACITY")) {
        return Err(Error::parse(line, format!("malformed header: expected NUMBER CAPACITY, found {header:?}")));
    }
    let (line, fleet_line) = lines
        .next()
        .ok_or_else(|| Error::parse(line, "malformed header: missing fleet values"))?;
    let fleet_fields = numeric_fields(line, fleet_line)?;
    if fleet_fields.len() != 2 {
        return Err(Error::parse(line, format!("expected `NUMBER CAPACITY`, found {} fields", fleet_fields.len())));
    }
    let fleet_size = as_count(line, fleet_fields[0], "vehicle number")?;
    let capacity = fleet_fields[1];

    let (line, tag) = lines
        .next()
        .ok_or_else(|| Error::parse(line, "malformed header: missing CUSTOMER block"))?;
    if !tag.eq_ignore_ascii_case("CUSTOMER") {
        return Err(Error::parse(line, format!("malformed header: expected CUSTOMER, found {tag:?}")));
    }

    let mut rows: Vec<(usize, Vertex)> = Vec::new();
    let mut seen = HashSet::new();
    for (line, raw) in lines {
        // Column header lines (possibly wrapped) precede the first data row.
        if rows.is_empty() && raw.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            continue;
        }
        let fields = numeric_fields(line, raw)?;
        if fields.len() != 7 {
            return Err(Error::parse(line, format!("expected 7 customer fields, found {}", fields.len())));
        }
        let id = as_count(line, fields[0], "customer number")?;
        let id = u32::try_from(id).map_err(|_| Error::parse(line, "customer number out of range"))?;
        if !seen.insert(id) {
            return Err(Error::parse(line, format!("duplicate customer id {id}")));
        }
        let vertex = Vertex {
            id,
            x: fields[1],
            y: fields[2],
            demand: fields[3],
            ready: fields[4],
            due: fields[5],
            service: fields[6],
        };
        if vertex.ready > vertex.due {
            return Err(Error::parse(
                line,
                format!("time window inverted at line {line} (customer {id}: ready {} > due {})", vertex.ready, vertex.due),
            ));
        }
        rows.push((line, vertex));
    }
    if rows.is_empty() {
        return Err(Error::parse(line, "no depot row in CUSTOMER block"));
    }
    let (_, depot) = rows.remove(0);
    let customers = rows.into_iter().map(|(_, v)| v).collect();
    Instance::with_convention(name, depot, customers, fleet_size, capacity, convention)
}

fn numeric_fields(line: usize, raw: &str) -> Result<Vec<f64>> {
    raw.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Error::parse(line, format!("non-numeric field {tok:?}")))
        })
        .collect()
}

fn as_count(line: usize, value: f64, what: &str) -> Result<usize> {
    if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(Error::parse(line, format!("{what} must be a non-negative integer, found {value}")))
    }
}

/// Writes an instance in the same layout; local vertex indices become the
/// `CUST NO.` column so external solvers can answer in local ids.
pub fn write_instance(instance: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}\n", instance.name());
    let _ = writeln!(out, "VEHICLE\nNUMBER     CAPACITY");
    let _ = writeln!(out, "  {}  {}\n", instance.fleet_size(), instance.capacity());
    let _ = writeln!(out, "CUSTOMER");
    let _ = writeln!(
        out,
        "CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE   TIME\n"
    );
    for (idx, v) in instance.vertices().iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>5} {} {} {} {} {} {}",
            idx, v.x, v.y, v.demand, v.ready, v.due, v.service
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = "TINY_3

VEHICLE
NUMBER     CAPACITY
  2         200

CUSTOMER
CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE   TIME

    0      40         50          0          0       1236          0
    1      45         68         10        912        967         90
    2      45         70         30        825        870         90
    3      42         66         10         65        146         90
";

    #[test]
    fn parses_three_customer_file() {
        let inst = parse_instance(TINY).unwrap();
        assert_eq!(inst.name(), "TINY_3");
        assert_eq!(inst.num_customers(), 3);
        assert_eq!(inst.capacity(), 200.0);
        assert_eq!(inst.fleet_size(), 2);
        assert_eq!(inst.vertex(2).ready, 825.0);
        assert_eq!(inst.cost(0, 1), (25.0f64 + 324.0).sqrt());
    }

    #[test]
    fn inverted_window_is_line_anchored() {
        let text = TINY.replace("65        146", "100        50");
        match parse_instance(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 13);
                assert!(message.contains("time window inverted at line 13"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        let dup = TINY.replace("    3      42", "    2      42");
        assert!(matches!(parse_instance(&dup), Err(Error::Parse { line: 13, .. })));
        let garbage = TINY.replace("45         70", "45         zz");
        assert!(matches!(parse_instance(&garbage), Err(Error::Parse { line: 12, .. })));
        let no_vehicle = TINY.replace("VEHICLE", "VEHICLES");
        assert!(matches!(parse_instance(&no_vehicle), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn write_then_parse_is_stable() {
        let inst = parse_instance(TINY).unwrap();
        let again = parse_instance(&write_instance(&inst)).unwrap();
        assert_eq!(again.num_customers(), 3);
        assert_eq!(again.cost_matrix(), inst.cost_matrix());
        assert_eq!(again.vertex(3).due, 146.0);
    }
}
