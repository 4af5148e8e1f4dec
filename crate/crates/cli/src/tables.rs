//! CSV input formats.
//!
//! Case files: header `case_id,member_id,v1,...,vd`, one row per vector,
//! `member_id = 0` marking the observation. Rows of one case must be
//! contiguous; members may appear in any order and are sorted by member id.
//!
//! Series files: header `day,member_id,v1,...,vd`, `member_id = 0` marking
//! the observation and `1..=m_raw` the raw members; days sorted ascending.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rankcal::postprocess::{DayRecord, ForecastSeries};
use rankcal::{CaseId, ForecastCase};

use crate::error::{data, CliResult};

struct Row {
    line: u64,
    group: String,
    member_id: u64,
    values: Vec<f64>,
}

fn read_rows(path: &Path, group_column: &str) -> CliResult<Vec<Row>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| data(format!("{}: {e}", path.display())))?;
    {
        let headers = reader.headers()?;
        if headers.len() < 3 {
            return Err(data(format!(
                "{}: header must be {group_column},member_id,v1,...",
                path.display()
            )));
        }
        if &headers[0] != group_column || &headers[1] != "member_id" {
            return Err(data(format!(
                "{}: header starts with `{},{}`, expected `{group_column},member_id`",
                path.display(),
                &headers[0],
                &headers[1]
            )));
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let complain = |what: &str| data(format!("{}: line {line}: {what}", path.display()));
        if record.len() < 3 {
            return Err(complain("expected at least three columns"));
        }
        let member_id: u64 = record[1]
            .trim()
            .parse()
            .map_err(|_| complain(&format!("cannot parse member_id `{}`", &record[1])))?;
        let values = record
            .iter()
            .skip(2)
            .map(|field| {
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| complain(&format!("cannot parse value `{field}`")))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(Row {
            line,
            group: record[0].trim().to_string(),
            member_id,
            values,
        });
    }
    Ok(rows)
}

/// One parsed group: identifier, member rows, observation row, first line.
type ParsedGroup = (String, Vec<Vec<f64>>, Vec<f64>, u64);

/// Group contiguous rows and split each group into observation and sorted
/// members.
fn group_rows(path: &Path, rows: Vec<Row>) -> CliResult<Vec<ParsedGroup>> {
    let mut groups: Vec<(String, Vec<Row>)> = Vec::new();
    let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();
    for row in rows {
        match groups.last_mut() {
            Some((group, members)) if *group == row.group => members.push(row),
            _ => {
                if !seen.insert(row.group.clone()) {
                    return Err(data(format!(
                        "{}: line {}: rows of `{}` are not contiguous",
                        path.display(),
                        row.line,
                        row.group
                    )));
                }
                groups.push((row.group.clone(), vec![row]));
            }
        }
    }
    groups
        .into_iter()
        .map(|(group, mut members)| {
            let line = members[0].line;
            members.sort_by_key(|row| row.member_id);
            let complain = |what: String| {
                data(format!("{}: line {line}: `{group}`: {what}", path.display()))
            };
            if members[0].member_id != 0 {
                return Err(complain("missing observation row (member_id 0)".into()));
            }
            if members.len() < 2 {
                return Err(complain("needs at least one member besides the observation".into()));
            }
            for pair in members.windows(2) {
                if pair[0].member_id == pair[1].member_id {
                    return Err(complain(format!(
                        "duplicate member_id {}",
                        pair[0].member_id
                    )));
                }
            }
            let observation = members[0].values.clone();
            let member_values: Vec<Vec<f64>> =
                members.drain(1..).map(|row| row.values).collect();
            Ok((group, member_values, observation, line))
        })
        .collect()
}

/// Read a case file into forecast cases, preserving file order.
pub fn read_cases(path: &Path) -> CliResult<Vec<ForecastCase>> {
    if fs::metadata(path)?.len() == 0 {
        return Ok(Vec::new());
    }
    let rows = read_rows(path, "case_id")?;
    group_rows(path, rows)?
        .into_iter()
        .map(|(case_id, members, observation, line)| {
            ForecastCase::new(CaseId::Label(case_id), &members, &observation)
                .map_err(|e| data(format!("{}: line {line}: {e}", path.display())))
        })
        .collect()
}

/// Read a series file.
pub fn read_series(path: &Path) -> CliResult<ForecastSeries> {
    let rows = read_rows(path, "day")?;
    let days = group_rows(path, rows)?
        .into_iter()
        .map(|(day, raw_members, observation, line)| {
            let day: i64 = day.parse().map_err(|_| {
                data(format!(
                    "{}: line {line}: cannot parse day `{day}`",
                    path.display()
                ))
            })?;
            Ok(DayRecord {
                day,
                raw_members,
                observation,
            })
        })
        .collect::<CliResult<Vec<DayRecord>>>()?;
    ForecastSeries::new(days).map_err(|e| data(format!("{}: {e}", path.display())))
}

/// Write cases in the documented format, observation row first.
pub fn write_cases(path: &Path, cases: &[ForecastCase]) -> CliResult<()> {
    let d = cases.first().map_or(1, ForecastCase::dim);
    let mut out = String::from("case_id,member_id");
    for k in 1..=d {
        write!(out, ",v{k}").expect("string write");
    }
    out.push('\n');
    for case in cases {
        let mut write_row = |member_id: usize, values: &[f64]| {
            write!(out, "{},{member_id}", case.case_id()).expect("string write");
            for value in values {
                write!(out, ",{value}").expect("string write");
            }
            out.push('\n');
        };
        write_row(0, case.observation());
        for (i, member) in case.members().enumerate() {
            write_row(i + 1, member);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write per-case ranks as `case_id,rank` rows.
pub fn write_ranks(path: &Path, ranks: &[(String, u32)]) -> CliResult<()> {
    let mut out = String::from("case_id,rank\n");
    for (case_id, rank) in ranks {
        writeln!(out, "{case_id},{rank}").expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}
