//! Trial lists: CSV lines `label,score` with label `target` or `nontarget`.
//! A leading `label,score` header line is allowed.

use std::path::Path;

use farfield_core::metrics::{Label, Trial, TrialSet};

use crate::fsutil::write_atomic;
use crate::{Error, Result};

pub fn parse_label(s: &str) -> Option<Label> {
    match s {
        "target" => Some(Label::Target),
        "nontarget" => Some(Label::Nontarget),
        _ => None,
    }
}

pub fn read_trials(path: &Path) -> Result<TrialSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut trials = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.len() != 2 {
            return Err(Error::format(
                path,
                format!("line {line}: expected `label,score`"),
            ));
        }
        if i == 0 && &record[0] == "label" && &record[1] == "score" {
            continue;
        }
        let label = parse_label(&record[0])
            .ok_or_else(|| Error::format(path, format!("line {line}: unknown label {:?}", &record[0])))?;
        let score: f64 = record[1]
            .parse()
            .map_err(|_| Error::format(path, format!("line {line}: bad score {:?}", &record[1])))?;
        if !score.is_finite() {
            return Err(Error::format(path, format!("line {line}: score must be finite")));
        }
        trials.push(Trial { label, score });
    }
    Ok(TrialSet::new(trials)?)
}

pub fn write_trials(trials: &TrialSet, path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["label", "score"])
            .map_err(|e| csv_error(path, e))?;
        for t in trials.trials() {
            let label = match t.label {
                Label::Target => "target",
                Label::Nontarget => "nontarget",
            };
            out.write_record([label, &format!("{:?}", t.score)])
                .map_err(|e| csv_error(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let message = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        _ => Error::format(path, message),
    }
}
