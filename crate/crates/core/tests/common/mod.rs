//! Writes small channels with real archives into temporary directories.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use pkgstack_core::channels::{Locator, Platform, RepoData, RepoInfo, RepoRecord};
use pkgstack_core::environment::{sha256_hex, ArchiveIndex, ChannelRef, PackageArchive, PathMode};

pub struct Pkg {
    pub name: &'static str,
    pub version: &'static str,
    pub build: &'static str,
    pub build_number: u64,
    pub depends: Vec<&'static str>,
    pub files: Vec<(String, PathMode, bool, Vec<u8>)>,
}

pub fn pkg(name: &'static str, version: &'static str, depends: &[&'static str]) -> Pkg {
    Pkg {
        name,
        version,
        build: "h0",
        build_number: 0,
        depends: depends.to_vec(),
        files: vec![(
            format!("share/{name}/VERSION"),
            PathMode::Text,
            false,
            version.as_bytes().to_vec(),
        )],
    }
}

impl Pkg {
    pub fn file(mut self, path: &str, mode: PathMode, relocatable: bool, data: Vec<u8>) -> Self {
        self.files.push((path.to_string(), mode, relocatable, data));
        self
    }

    pub fn archive(&self, platform: Platform) -> PackageArchive {
        let mut a = PackageArchive::new(ArchiveIndex {
            name: self.name.into(),
            version: self.version.into(),
            build: self.build.into(),
            build_number: self.build_number,
            depends: self.depends.iter().map(|d| d.to_string()).collect(),
            subdir: platform,
        });
        for (p, m, r, d) in &self.files {
            a.add_file(p, *m, *r, d.clone());
        }
        a
    }
}

/// Writes `<root>/<platform>/repodata.json` plus archives and returns the
/// channel reference.
pub fn write_channel(root: &Path, name: &str, platform: Platform, pkgs: &[Pkg]) -> ChannelRef {
    let dir = root.join(name);
    let sub = dir.join(platform.as_str());
    std::fs::create_dir_all(&sub).unwrap();
    let mut packages = BTreeMap::new();
    for p in pkgs {
        let bytes = p.archive(platform).to_bytes();
        let filename = format!("{}-{}-{}.tar", p.name, p.version, p.build);
        std::fs::write(sub.join(&filename), &bytes).unwrap();
        packages.insert(
            filename,
            RepoRecord {
                name: p.name.into(),
                version: p.version.into(),
                build: p.build.into(),
                build_number: p.build_number,
                depends: p.depends.iter().map(|d| d.to_string()).collect(),
                sha256: sha256_hex(&bytes),
            },
        );
    }
    let doc = RepoData {
        info: RepoInfo { subdir: platform },
        packages,
    };
    std::fs::write(
        sub.join("repodata.json"),
        serde_json::to_vec_pretty(&doc).unwrap(),
    )
    .unwrap();
    ChannelRef::new(&dir.to_string_lossy(), Locator::dir(&dir))
}

/// Every file below `root` with its contents, plus every directory.
pub fn snapshot(root: &Path) -> BTreeMap<String, Option<Vec<u8>>> {
    let mut out = BTreeMap::new();
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Option<Vec<u8>>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            let rel = p.strip_prefix(base).unwrap().to_string_lossy().into_owned();
            if p.is_dir() {
                out.insert(rel, None);
                walk(base, &p, out);
            } else {
                out.insert(rel, Some(std::fs::read(&p).unwrap()));
            }
        }
    }
    if root.exists() {
        walk(root, root, &mut out);
    }
    out
}
