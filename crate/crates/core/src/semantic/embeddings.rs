use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// Word vectors of a single fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            vectors: HashMap::new(),
        }
    }

    /// Inserts a vector unless the word is already present. Returns whether
    /// the vector was stored.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dimension {
            return Err(Error::Dimension {
                expected: self.dimension,
                actual: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite embedding component".into()));
        }
        let word = word.into();
        if self.vectors.contains_key(&word) {
            return Ok(false);
        }
        self.vectors.insert(word, vector);
        Ok(true)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }
}

/// Loads a whitespace-separated text table, `word v1 .. vD` per line. A
/// leading `count dim` header line is detected and skipped. Duplicate words
/// keep their first vector.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut table: Option<EmbeddingTable> = None;
    let mut header_dim: Option<usize> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line_no = i + 1;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if line_no == 1 && rest.len() == 1 {
            if let (Ok(_), Ok(dim)) = (word.parse::<usize>(), rest[0].parse::<usize>()) {
                header_dim = Some(dim);
                continue;
            }
        }
        let vector = rest
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Malformed {
                line: line_no,
                message: format!("bad float: {e}"),
            })?;
        let table = table.get_or_insert_with(|| EmbeddingTable::new(header_dim.unwrap_or(vector.len())));
        if vector.len() != table.dimension || vector.is_empty() {
            return Err(Error::Malformed {
                line: line_no,
                message: format!("expected {} components, found {}", table.dimension, vector.len()),
            });
        }
        table.insert(word, vector).map_err(|e| Error::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
    }
    table.ok_or(Error::Empty("embedding file has no vectors"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_two_words() {
        let f = file_with("cat 1 0 0\ndog 0 1 0.5\n");
        let t = load_embeddings(f.path()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dimension(), 3);
        assert_eq!(t.get("dog"), Some(&[0.0, 1.0, 0.5][..]));
    }

    #[test]
    fn header_is_skipped() {
        let f = file_with("2 2\ncat 1 0\ndog 0 1\n");
        let t = load_embeddings(f.path()).unwrap();
        assert_eq!((t.len(), t.dimension()), (2, 2));
    }

    #[test]
    fn inconsistent_dimension_names_line() {
        let f = file_with("cat 1 0 0\ndog 0 1\n");
        match load_embeddings(f.path()) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicates_keep_first() {
        let f = file_with("cat 1 0\ncat 0 1\n");
        let t = load_embeddings(f.path()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("cat"), Some(&[1.0, 0.0][..]));
    }
}
