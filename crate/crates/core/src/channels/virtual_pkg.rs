use super::{Platform, VirtualPackage};
use crate::verspec::Version;

/// Declared facts about a target system. Nothing here is probed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlatformProfile {
    pub platform: Platform,
    pub glibc: Option<Version>,
    pub osx: Option<Version>,
}

impl PlatformProfile {
    pub fn new(platform: Platform) -> Self {
        PlatformProfile {
            platform,
            glibc: None,
            osx: None,
        }
    }

    pub fn with_glibc(mut self, version: Version) -> Self {
        self.glibc = Some(version);
        self
    }

    pub fn with_osx(mut self, version: Version) -> Self {
        self.osx = Some(version);
        self
    }
}

pub fn detect_virtual_packages(profile: &PlatformProfile) -> Vec<VirtualPackage> {
    let p = profile.platform;
    let mut out = Vec::new();
    if p.is_linux() {
        if let Some(v) = &profile.glibc {
            out.push(VirtualPackage::new("__glibc", v.clone()));
        }
    } else if p.is_osx() {
        if let Some(v) = &profile.osx {
            out.push(VirtualPackage::new("__osx", v.clone()));
        }
    } else if p.is_windows() {
        out.push(VirtualPackage::new("__win", Version::parse("0").unwrap()));
    }
    out
}
