use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

use super::ChannelError;

/// Where a channel lives: a local directory or an HTTP(S) base URL. Both
/// hold `<platform>/repodata.json` and the archives next to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Locator {
    Dir(PathBuf),
    Url(String),
}

impl Locator {
    pub fn parse(text: &str) -> Locator {
        if text.starts_with("http://") || text.starts_with("https://") {
            Locator::Url(text.trim_end_matches('/').to_string())
        } else if let Some(path) = text.strip_prefix("file://") {
            Locator::Dir(PathBuf::from(path))
        } else {
            Locator::Dir(PathBuf::from(text))
        }
    }

    pub fn dir(path: impl AsRef<Path>) -> Locator {
        Locator::Dir(path.as_ref().to_path_buf())
    }

    /// Fetches `relative` below the locator. `Ok(None)` means the source was
    /// reachable but the document does not exist.
    pub fn fetch(&self, relative: &str) -> Result<Option<Vec<u8>>, ChannelError> {
        match self {
            Locator::Dir(root) => {
                if !root.is_dir() {
                    return Err(ChannelError::SourceUnreachable {
                        locator: self.to_string(),
                        reason: "not a directory".into(),
                    });
                }
                match std::fs::read(root.join(relative)) {
                    Ok(bytes) => Ok(Some(bytes)),
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                    Err(e) => Err(ChannelError::SourceUnreachable {
                        locator: self.to_string(),
                        reason: e.to_string(),
                    }),
                }
            }
            Locator::Url(base) => {
                let url = format!("{base}/{relative}");
                let unreachable = |reason: String| ChannelError::SourceUnreachable {
                    locator: url.clone(),
                    reason,
                };
                let agent: ureq::Agent = ureq::Agent::config_builder()
                    .http_status_as_error(false)
                    .build()
                    .into();
                let response = agent.get(&url).call().map_err(|e| unreachable(e.to_string()))?;
                match response.status().as_u16() {
                    200 => {
                        let mut bytes = Vec::new();
                        response
                            .into_body()
                            .into_reader()
                            .read_to_end(&mut bytes)
                            .map_err(|e| unreachable(e.to_string()))?;
                        Ok(Some(bytes))
                    }
                    404 => Ok(None),
                    code => Err(unreachable(format!("HTTP status {code}"))),
                }
            }
        }
    }
}

impl fmt::Display for Locator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Locator::Dir(p) => write!(f, "{}", p.display()),
            Locator::Url(u) => f.write_str(u),
        }
    }
}
