//! Matrix acquisition with an on-disk cache.
//!
//! Files are stored decompressed as `<cache>/<name>.mtx` next to a
//! `<name>.mtx.sha256` sidecar holding the hash recorded at first fetch.
//! Nothing is written to the cache until the download has been decompressed
//! and parsed successfully.

use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::time::Duration;

use flate2::read::GzDecoder;
use sha2::{Digest, Sha256};
use thiserror::Error;

use pipecg_core::{parse_matrix_market, ParseError};

use crate::catalog::{lookup, DEFAULT_BASE_URL};

pub const CACHE_ENV: &str = "PIPECG_CACHE_DIR";

/// Largest download accepted, decompressed or not.
const MAX_BYTES: u64 = 1 << 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("not found")]
    NotFound,
    /// The host could not be reached at all (DNS, connect, TLS).
    #[error("unreachable: {0}")]
    Unreachable(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("{0}")]
    Other(String),
}

/// Source of remote bytes. Swapped out in tests to observe or fake network I/O.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<Vec<u8>, TransportError>;
}

pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new() -> Self {
        let agent = ureq::AgentBuilder::new().timeout_connect(Duration::from_secs(20)).build();
        Self { agent }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<Vec<u8>, TransportError> {
        match self.agent.get(url).call() {
            Ok(resp) => {
                let mut buf = Vec::new();
                resp.into_reader()
                    .take(MAX_BYTES)
                    .read_to_end(&mut buf)
                    .map_err(|e| TransportError::Other(e.to_string()))?;
                Ok(buf)
            }
            Err(ureq::Error::Status(404, _)) => Err(TransportError::NotFound),
            Err(ureq::Error::Status(code, _)) => Err(TransportError::Status(code)),
            Err(ureq::Error::Transport(t)) => Err(TransportError::Unreachable(t.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("matrix {name:?} not found{}", url.as_ref().map(|u| format!(" at {u}")).unwrap_or_default())]
    NotFound { name: String, url: Option<String> },
    #[error("matrix {name:?} is not cached and the network is unavailable ({detail})")]
    OfflineCacheMiss { name: String, detail: String },
    #[error("download of {url} failed: {detail}")]
    Network { url: String, detail: String },
    #[error("downloaded {name:?} could not be decompressed: {detail}")]
    Decompress { name: String, detail: String },
    #[error("downloaded {name:?} is not a valid matrix: {source}")]
    Invalid { name: String, source: ParseError },
    #[error("content hash of {name:?} changed: recorded {recorded}, got {found}")]
    HashMismatch { name: String, recorded: String, found: String },
    #[error("cache I/O on {path}: {detail}")]
    Io { path: PathBuf, detail: String },
}

fn io_err(path: &Path, e: io::Error) -> FetchError {
    FetchError::Io { path: path.to_path_buf(), detail: e.to_string() }
}

/// `$PIPECG_CACHE_DIR`, else the user cache directory, else `./.pipecg-cache`.
pub fn default_cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_ENV).filter(|d| !d.is_empty()) {
        return PathBuf::from(dir);
    }
    if let Some(dir) = std::env::var_os("XDG_CACHE_HOME").filter(|d| !d.is_empty()) {
        return PathBuf::from(dir).join("pipecg");
    }
    if let Some(home) = std::env::var_os("HOME").filter(|d| !d.is_empty()) {
        return PathBuf::from(home).join(".cache").join("pipecg");
    }
    PathBuf::from(".pipecg-cache")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub struct Fetcher {
    pub base_url: String,
    pub cache_dir: PathBuf,
    /// Never touch the network; a cache miss is an error.
    pub offline: bool,
    transport: Box<dyn Transport>,
}

impl Fetcher {
    pub fn new(cache_dir: impl Into<PathBuf>, transport: Box<dyn Transport>) -> Self {
        Self { base_url: DEFAULT_BASE_URL.to_string(), cache_dir: cache_dir.into(), offline: false, transport }
    }

    pub fn http(cache_dir: impl Into<PathBuf>) -> Self {
        Self::new(cache_dir, Box::new(HttpTransport::new()))
    }

    pub fn with_base_url(mut self, url: impl Into<String>) -> Self {
        self.base_url = url.into().trim_end_matches('/').to_string();
        self
    }

    pub fn with_offline(mut self, offline: bool) -> Self {
        self.offline = offline;
        self
    }

    pub fn cached_path(&self, name: &str) -> PathBuf {
        self.cache_dir.join(format!("{name}.mtx"))
    }

    fn hash_path(&self, name: &str) -> PathBuf {
        self.cache_dir.join(format!("{name}.mtx.sha256"))
    }

    pub fn url_for(&self, name: &str) -> Option<String> {
        lookup(name).map(|e| format!("{}/{}", self.base_url, e.path))
    }

    fn recorded_hash(&self, name: &str) -> Result<Option<String>, FetchError> {
        let p = self.hash_path(name);
        match fs::read_to_string(&p) {
            Ok(s) => Ok(Some(s.trim().to_string())),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&p, e)),
        }
    }

    /// Returns the cached file for `name`, downloading it on a miss.
    pub fn fetch_matrix(&self, name: &str) -> Result<PathBuf, FetchError> {
        let path = self.cached_path(name);
        if path.is_file() {
            let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
            self.check_hash(name, &bytes)?;
            return Ok(path);
        }
        self.download(name)
    }

    /// Downloads `name` even when cached; the content must hash to the
    /// recorded value if there is one.
    pub fn refetch_matrix(&self, name: &str) -> Result<PathBuf, FetchError> {
        self.download(name)
    }

    fn check_hash(&self, name: &str, bytes: &[u8]) -> Result<String, FetchError> {
        let found = sha256_hex(bytes);
        match self.recorded_hash(name)? {
            Some(recorded) if recorded != found => {
                Err(FetchError::HashMismatch { name: name.to_string(), recorded, found })
            }
            _ => Ok(found),
        }
    }

    fn download(&self, name: &str) -> Result<PathBuf, FetchError> {
        let url = self.url_for(name).ok_or_else(|| FetchError::NotFound { name: name.to_string(), url: None })?;
        if self.offline {
            return Err(FetchError::OfflineCacheMiss { name: name.to_string(), detail: "offline mode".into() });
        }
        let raw = self.transport.get(&url).map_err(|e| match e {
            TransportError::NotFound => FetchError::NotFound { name: name.to_string(), url: Some(url.clone()) },
            TransportError::Unreachable(detail) => FetchError::OfflineCacheMiss { name: name.to_string(), detail },
            other => FetchError::Network { url: url.clone(), detail: other.to_string() },
        })?;
        let text = decompress(&raw).map_err(|detail| FetchError::Decompress { name: name.to_string(), detail })?;
        parse_matrix_market(&text).map_err(|source| FetchError::Invalid { name: name.to_string(), source })?;
        let hash = self.check_hash(name, &text)?;

        fs::create_dir_all(&self.cache_dir).map_err(|e| io_err(&self.cache_dir, e))?;
        let path = self.cached_path(name);
        write_atomic(&path, &text)?;
        write_atomic(&self.hash_path(name), format!("{hash}\n").as_bytes())?;
        Ok(path)
    }
}

fn decompress(raw: &[u8]) -> Result<Vec<u8>, String> {
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw).take(MAX_BYTES).read_to_end(&mut out).map_err(|e| e.to_string())?;
        Ok(out)
    } else {
        Ok(raw.to_vec())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FetchError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let res = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = res {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(path, e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::Write;

    struct Fixed(Result<Vec<u8>, TransportError>);

    impl Transport for Fixed {
        fn get(&self, _: &str) -> Result<Vec<u8>, TransportError> {
            self.0.clone()
        }
    }

    const IDENT: &[u8] = b"%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n2 2 1.0\n";

    fn gz(bytes: &[u8]) -> Vec<u8> {
        let mut e = GzEncoder::new(Vec::new(), Compression::default());
        e.write_all(bytes).unwrap();
        e.finish().unwrap()
    }

    #[test]
    fn gzip_and_plain_payloads_both_decode() {
        assert_eq!(decompress(&gz(IDENT)).unwrap(), IDENT);
        assert_eq!(decompress(IDENT).unwrap(), IDENT);
        let g = gz(IDENT);
        assert!(decompress(&g[..g.len() / 2]).is_err());
    }

    #[test]
    fn transport_errors_map_to_distinct_fetch_errors() {
        let dir = tempfile::tempdir().unwrap();
        type Check = fn(&FetchError) -> bool;
        let cases: [(TransportError, Check); 3] = [
            (TransportError::NotFound, |e| matches!(e, FetchError::NotFound { url: Some(_), .. })),
            (TransportError::Unreachable("dns".into()), |e| matches!(e, FetchError::OfflineCacheMiss { .. })),
            (TransportError::Status(503), |e| matches!(e, FetchError::Network { .. })),
        ];
        for (t, check) in cases {
            let f = Fetcher::new(dir.path(), Box::new(Fixed(Err(t))));
            let e = f.fetch_matrix("nos4").unwrap_err();
            assert!(check(&e), "{e:?}");
        }
        let f = Fetcher::new(dir.path(), Box::new(Fixed(Ok(gz(IDENT)))));
        assert!(matches!(f.fetch_matrix("not_a_matrix"), Err(FetchError::NotFound { url: None, .. })));
        let f = f.with_offline(true);
        assert!(matches!(f.fetch_matrix("nos4"), Err(FetchError::OfflineCacheMiss { .. })));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn base_url_is_configurable() {
        let f = Fetcher::new("x", Box::new(Fixed(Err(TransportError::NotFound)))).with_base_url("http://mirror/mm/");
        assert_eq!(f.url_for("nos4").unwrap(), "http://mirror/mm/Harwell-Boeing/lanpro/nos4.mtx.gz");
    }
}
