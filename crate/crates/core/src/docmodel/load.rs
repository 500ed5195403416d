use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use super::{parse_api_doc_with, Corpus, DocError, ParseOptions, Warning};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: DocError,
    },
    #[error("no .json documents in {0}")]
    Empty(PathBuf),
    #[error("invalid corpus: {0}")]
    Corpus(#[source] DocError),
}

#[derive(Debug)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub warnings: Vec<(PathBuf, Warning)>,
}

/// Parses every `*.json` file in `dir` (file-name order). Files are parsed
/// in parallel and merged in that order.
pub fn load_corpus_dir(dir: &Path, opts: &ParseOptions) -> Result<LoadedCorpus, LoadError> {
    let io = |source| LoadError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()).map_err(io))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    if files.is_empty() {
        return Err(LoadError::Empty(dir.to_path_buf()));
    }
    files.sort();

    let parsed = files
        .par_iter()
        .map(|path| {
            let raw = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
                path: path.clone(),
                source,
            })?;
            parse_api_doc_with(&raw, opts).map_err(|source| LoadError::Parse {
                path: path.clone(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut docs = Vec::with_capacity(parsed.len());
    let mut warnings = Vec::new();
    for (path, p) in files.into_iter().zip(parsed) {
        for w in p.warnings {
            log::warn!("{}: {}: {}", path.display(), w.field, w.message);
            warnings.push((path.clone(), w));
        }
        docs.push(p.doc);
    }
    Ok(LoadedCorpus {
        corpus: Corpus::new(docs).map_err(LoadError::Corpus)?,
        warnings,
    })
}
