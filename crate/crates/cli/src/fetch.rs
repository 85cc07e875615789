//! MNIST download with SHA-256 verification of the decompressed files.

use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use fedkan::{Error, Result};
use sha2::{Digest, Sha256};

pub const DEFAULT_BASE_URL: &str = "https://storage.googleapis.com/cvdf-datasets/mnist/";

/// `(file name, SHA-256 of the decompressed file)`.
pub const MNIST_CHECKSUMS: [(&str, &str); 4] = [
    (
        "train-images-idx3-ubyte",
        "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db",
    ),
    (
        "train-labels-idx1-ubyte",
        "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5",
    ),
    (
        "t10k-images-idx3-ubyte",
        "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7",
    ),
    (
        "t10k-labels-idx1-ubyte",
        "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2",
    ),
];

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, PartialEq, Eq)]
pub enum FetchStatus {
    AlreadyPresent,
    Downloaded,
}

/// Reads `<base>/<name>.gz`. `base` is an http(s) URL or a local directory.
fn fetch_gz(base: &str, name: &str) -> Result<Vec<u8>> {
    if base.starts_with("http://") || base.starts_with("https://") {
        let url = format!("{}/{name}.gz", base.trim_end_matches('/'));
        let response = reqwest::blocking::get(&url)
            .and_then(|r| r.error_for_status())
            .map_err(|e| Error::Io(std::io::Error::other(format!("GET {url}: {e}"))))?;
        let body = response
            .bytes()
            .map_err(|e| Error::Io(std::io::Error::other(format!("GET {url}: {e}"))))?;
        Ok(body.to_vec())
    } else {
        let path = Path::new(base).join(format!("{name}.gz"));
        std::fs::read(&path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
    }
}

fn gunzip(name: &str, gz: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    GzDecoder::new(gz)
        .read_to_end(&mut out)
        .map_err(|e| Error::Data(format!("{name}.gz is not valid gzip: {e}")))?;
    Ok(out)
}

/// Ensures every MNIST file is present in `dir` with the expected checksum.
/// Files that already verify are left alone unless `force` is set.
pub fn fetch_mnist(dir: &Path, base: &str, force: bool) -> Result<Vec<(PathBuf, FetchStatus)>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
    let mut results = Vec::new();
    for (name, expected) in MNIST_CHECKSUMS {
        let target = dir.join(name);
        if !force {
            if let Ok(existing) = std::fs::read(&target) {
                if sha256_hex(&existing) == expected {
                    results.push((target, FetchStatus::AlreadyPresent));
                    continue;
                }
            }
        }
        let bytes = gunzip(name, &fetch_gz(base, name)?)?;
        let actual = sha256_hex(&bytes);
        if actual != expected {
            return Err(Error::Data(format!(
                "checksum mismatch for {name}: expected {expected}, got {actual}"
            )));
        }
        let partial = dir.join(format!("{name}.partial"));
        std::fs::write(&partial, &bytes)?;
        std::fs::rename(&partial, &target)?;
        results.push((target, FetchStatus::Downloaded));
    }
    Ok(results)
}
