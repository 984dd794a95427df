//! JSON-lines dataset ingestion and persistence.
//!
//! Both files open with a header line `{"schema":"v1","dim":<int>}`
//! declaring the embedding dimension for every following line. The
//! actions file then carries `{id, text, embedding}` lines in id order;
//! the records file carries `{id, text, embedding, correct_ids}` lines.
//! Validation failures name the offending file and 1-based line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::DatasetRecord;
use crate::types::{ActionEntry, ActionSpace, Context};
use crate::{Error, Result};

const SCHEMA: &str = "v1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema: String,
    dim: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ActionLine {
    id: usize,
    text: String,
    embedding: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordLine {
    id: usize,
    text: String,
    embedding: Vec<f64>,
    correct_ids: Vec<usize>,
}

fn data_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Data { path: path.display().to_string(), line, msg: msg.into() }
}

/// Reads and validates the header, returning the declared dimension.
fn read_header(path: &Path, line: Option<String>) -> Result<usize> {
    let text = line.ok_or_else(|| data_error(path, 1, "missing header line"))?;
    let header: Header = serde_json::from_str(&text)
        .map_err(|e| data_error(path, 1, format!("invalid header: {e}")))?;
    if header.schema != SCHEMA {
        return Err(data_error(
            path,
            1,
            format!("unsupported schema {:?}, expected {SCHEMA:?}", header.schema),
        ));
    }
    if header.dim == 0 {
        return Err(data_error(path, 1, "embedding dimension must be at least 1"));
    }
    Ok(header.dim)
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = std::io::Result<String>>> {
    let file =
        File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(BufReader::new(file).lines())
}

fn load_actions(path: &Path) -> Result<ActionSpace> {
    let mut lines = open_lines(path)?;
    let first = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let dim = read_header(path, first)?;

    let mut entries = Vec::new();
    for (offset, line) in lines.enumerate() {
        let number = offset + 2;
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let action: ActionLine = serde_json::from_str(&line)
            .map_err(|e| data_error(path, number, e.to_string()))?;
        if action.id != entries.len() {
            return Err(data_error(
                path,
                number,
                format!("action ids must be 0..n in order; got id {}", action.id),
            ));
        }
        if action.embedding.len() != dim {
            return Err(data_error(
                path,
                number,
                format!("embedding has {} dims, header declares {dim}", action.embedding.len()),
            ));
        }
        entries.push(ActionEntry {
            id: action.id,
            text: action.text,
            embedding: action.embedding,
        });
    }
    if entries.is_empty() {
        return Err(data_error(path, 1, "actions file declares no actions"));
    }
    ActionSpace::new_unchecked_size(entries)
}

fn load_records(path: &Path, num_actions: usize) -> Result<Vec<DatasetRecord>> {
    let mut lines = open_lines(path)?;
    let first = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let dim = read_header(path, first)?;

    let mut records = Vec::new();
    for (offset, line) in lines.enumerate() {
        let number = offset + 2;
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RecordLine = serde_json::from_str(&line)
            .map_err(|e| data_error(path, number, e.to_string()))?;
        if record.embedding.len() != dim {
            return Err(data_error(
                path,
                number,
                format!("embedding has {} dims, header declares {dim}", record.embedding.len()),
            ));
        }
        if record.correct_ids.is_empty() {
            return Err(data_error(path, number, "correct_ids is empty"));
        }
        if let Some(&bad) = record.correct_ids.iter().find(|&&id| id >= num_actions) {
            return Err(data_error(
                path,
                number,
                format!("correct id {bad} is outside the {num_actions} known actions"),
            ));
        }
        records.push(DatasetRecord {
            context: Context {
                id: record.id,
                text: record.text,
                embedding: record.embedding,
            },
            correct_ids: record.correct_ids,
        });
    }
    Ok(records)
}

/// Loads an action space and its labeled records from the two JSON-lines
/// files, fully validating both.
pub fn load_dataset(
    actions_path: impl AsRef<Path>,
    records_path: impl AsRef<Path>,
) -> Result<(ActionSpace, Vec<DatasetRecord>)> {
    let actions = load_actions(actions_path.as_ref())?;
    let records = load_records(records_path.as_ref(), actions.len())?;
    Ok((actions, records))
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    let file =
        File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(BufWriter::new(file))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::io(path.display().to_string(), e)
}

/// Writes an action space and records in the wire format [`load_dataset`]
/// reads back.
pub fn save_dataset(
    actions_path: impl AsRef<Path>,
    records_path: impl AsRef<Path>,
    actions: &ActionSpace,
    records: &[DatasetRecord],
) -> Result<()> {
    let path = actions_path.as_ref();
    let mut out = writer(path)?;
    let header =
        serde_json::to_string(&Header { schema: SCHEMA.into(), dim: actions.dim() })?;
    writeln!(out, "{header}").map_err(|e| io_err(path, e))?;
    for action in actions.iter() {
        let line = serde_json::to_string(&ActionLine {
            id: action.id,
            text: action.text.clone(),
            embedding: action.embedding.clone(),
        })?;
        writeln!(out, "{line}").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))?;

    let path = records_path.as_ref();
    let mut out = writer(path)?;
    let dim = records.first().map_or(actions.dim(), |r| r.context.dim());
    let header = serde_json::to_string(&Header { schema: SCHEMA.into(), dim })?;
    writeln!(out, "{header}").map_err(|e| io_err(path, e))?;
    for record in records {
        let line = serde_json::to_string(&RecordLine {
            id: record.context.id,
            text: record.context.text.clone(),
            embedding: record.context.embedding.clone(),
            correct_ids: record.correct_ids.clone(),
        })?;
        writeln!(out, "{line}").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::make_synthetic;
    use crate::env::SyntheticSpec;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn synthetic_data_round_trips() {
        let spec = SyntheticSpec {
            context_dim: 3,
            action_dim: 4,
            num_actions: 6,
            num_records: 100,
            seed: 5,
        };
        let (actions, records) = make_synthetic(&spec).unwrap();
        let dir = tmp();
        let a = dir.path().join("actions.jsonl");
        let r = dir.path().join("records.jsonl");
        save_dataset(&a, &r, &actions, &records).unwrap();
        let (actions2, records2) = load_dataset(&a, &r).unwrap();
        assert_eq!(actions2, actions);
        assert_eq!(records2.len(), records.len());
        for (x, y) in records2.iter().zip(&records) {
            assert_eq!(x.context, y.context);
            assert_eq!(x.correct_ids, y.correct_ids);
        }
    }

    #[test]
    fn header_only_records_file_is_an_empty_list() {
        let dir = tmp();
        let a = dir.path().join("actions.jsonl");
        let r = dir.path().join("records.jsonl");
        std::fs::write(
            &a,
            "{\"schema\":\"v1\",\"dim\":2}\n\
             {\"id\":0,\"text\":\"x\",\"embedding\":[1.0,0.0]}\n\
             {\"id\":1,\"text\":\"y\",\"embedding\":[0.0,1.0]}\n",
        )
        .unwrap();
        std::fs::write(&r, "{\"schema\":\"v1\",\"dim\":2}\n").unwrap();
        let (actions, records) = load_dataset(&a, &r).unwrap();
        assert_eq!(actions.len(), 2);
        assert!(records.is_empty());
    }

    #[test]
    fn out_of_range_correct_id_is_rejected_with_its_line() {
        let dir = tmp();
        let a = dir.path().join("actions.jsonl");
        let r = dir.path().join("records.jsonl");
        std::fs::write(
            &a,
            "{\"schema\":\"v1\",\"dim\":1}\n\
             {\"id\":0,\"text\":\"x\",\"embedding\":[1.0]}\n\
             {\"id\":1,\"text\":\"y\",\"embedding\":[2.0]}\n",
        )
        .unwrap();
        std::fs::write(
            &r,
            "{\"schema\":\"v1\",\"dim\":1}\n\
             {\"id\":0,\"text\":\"ok\",\"embedding\":[0.5],\"correct_ids\":[1]}\n\
             {\"id\":1,\"text\":\"bad\",\"embedding\":[0.5],\"correct_ids\":[2]}\n",
        )
        .unwrap();
        let err = load_dataset(&a, &r).unwrap_err();
        match err {
            Error::Data { line, ref msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("correct id 2"));
            }
            other => panic!("expected a data error, got {other}"),
        }
    }

    #[test]
    fn malformed_lines_and_headers_are_named() {
        let dir = tmp();
        let a = dir.path().join("actions.jsonl");
        std::fs::write(
            &a,
            "{\"schema\":\"v1\",\"dim\":1}\n\
             {\"id\":0,\"text\":\"x\",\"embedding\":[1.0]}\n\
             not json\n",
        )
        .unwrap();
        let err = load_actions(&a).unwrap_err();
        assert!(matches!(err, Error::Data { line: 3, .. }));

        std::fs::write(&a, "{\"schema\":\"v2\",\"dim\":1}\n").unwrap();
        assert!(matches!(load_actions(&a), Err(Error::Data { line: 1, .. })));

        std::fs::write(
            &a,
            "{\"schema\":\"v1\",\"dim\":3}\n\
             {\"id\":0,\"text\":\"x\",\"embedding\":[1.0]}\n",
        )
        .unwrap();
        let err = load_actions(&a).unwrap_err();
        match err {
            Error::Data { line, ref msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("header declares 3"));
            }
            other => panic!("expected a data error, got {other}"),
        }
    }

    #[test]
    fn action_ids_must_be_sequential() {
        let dir = tmp();
        let a = dir.path().join("actions.jsonl");
        std::fs::write(
            &a,
            "{\"schema\":\"v1\",\"dim\":1}\n\
             {\"id\":0,\"text\":\"x\",\"embedding\":[1.0]}\n\
             {\"id\":2,\"text\":\"y\",\"embedding\":[1.0]}\n",
        )
        .unwrap();
        assert!(matches!(load_actions(&a), Err(Error::Data { line: 3, .. })));
    }
}
