//! Recipes from ROS `package.xml` manifests, and build order for a whole
//! snapshot of them.

mod manifest;
mod mapping;
mod recipe;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::channels::Platform;
use crate::graph::topological_order;

pub use manifest::{parse_package_xml, RosManifest};
pub use mapping::DependencyMapping;
pub use recipe::{generate_recipe, Recipe, RecipeSource, Requirements};

#[derive(Debug, Error)]
pub enum VincaError {
    #[error("malformed manifest{}: {reason}", path.as_ref().map(|p| format!(" {}", p.display())).unwrap_or_default())]
    MalformedManifest { path: Option<PathBuf>, reason: String },
    #[error("malformed mapping, line {line}: {reason}")]
    MalformedMapping { line: usize, reason: String },
    #[error("unknown distro `{0}` (expected melodic, noetic, foxy or galactic)")]
    UnknownDistro(String),
    #[error("{package}: no mapping on {platform} for {}", keys.join(", "))]
    UnmappedDependency {
        package: String,
        platform: Platform,
        keys: Vec<String>,
    },
    #[error("dependency cycle: {}", .0.join(" -> "))]
    DependencyCycle(Vec<String>),
    #[error("duplicate package `{name}` in snapshot")]
    DuplicatePackage { name: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Distro {
    Melodic,
    Noetic,
    Foxy,
    Galactic,
}

impl Distro {
    pub const ALL: [Distro; 4] = [Distro::Melodic, Distro::Noetic, Distro::Foxy, Distro::Galactic];

    pub fn as_str(self) -> &'static str {
        match self {
            Distro::Melodic => "melodic",
            Distro::Noetic => "noetic",
            Distro::Foxy => "foxy",
            Distro::Galactic => "galactic",
        }
    }
}

impl fmt::Display for Distro {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Distro {
    type Err = VincaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Distro::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| VincaError::UnknownDistro(s.to_string()))
    }
}

/// `ros-<distro>-<name>` with underscores turned into hyphens.
pub fn mangle_name(ros_name: &str, distro: Distro) -> String {
    format!("ros-{distro}-{}", ros_name.replace('_', "-")).to_lowercase()
}

/// Reads every `package.xml` below `dir`, sorted by package name.
pub fn load_snapshot(dir: &Path) -> Result<Vec<RosManifest>, VincaError> {
    fn walk(dir: &Path, found: &mut Vec<PathBuf>) -> Result<(), VincaError> {
        let io = |source| VincaError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io)?;
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, found)?;
            } else if p.file_name().is_some_and(|n| n == "package.xml") {
                found.push(p);
            }
        }
        Ok(())
    }
    let mut paths = Vec::new();
    walk(dir, &mut paths)?;
    let mut manifests = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(|source| VincaError::Io {
            path: path.clone(),
            source,
        })?;
        let mut m = parse_package_xml(&text).map_err(|e| match e {
            VincaError::MalformedManifest { reason, .. } => VincaError::MalformedManifest {
                path: Some(path.clone()),
                reason,
            },
            other => other,
        })?;
        m.source_path = path
            .strip_prefix(dir)
            .unwrap_or(&path)
            .to_string_lossy()
            .replace('\\', "/");
        manifests.push(m);
    }
    manifests.sort_by(|a, b| a.name.cmp(&b.name));
    for w in manifests.windows(2) {
        if w[0].name == w[1].name {
            return Err(VincaError::DuplicatePackage {
                name: w[0].name.clone(),
            });
        }
    }
    Ok(manifests)
}

/// Names of the snapshot in an order where every package follows the
/// snapshot packages it build- or exec-depends on. Ties go alphabetically.
pub fn build_order(snapshot: &[RosManifest]) -> Result<Vec<String>, VincaError> {
    let position: BTreeMap<&str, usize> = snapshot
        .iter()
        .enumerate()
        .map(|(i, m)| (m.name.as_str(), i))
        .collect();
    let labels: Vec<String> = snapshot.iter().map(|m| m.name.clone()).collect();
    let deps: Vec<BTreeSet<usize>> = snapshot
        .iter()
        .map(|m| {
            m.recipe_keys()
                .filter_map(|k| position.get(k.as_str()).copied())
                .collect()
        })
        .collect();
    match topological_order(&labels, &deps) {
        Ok(order) => Ok(order.into_iter().map(|i| labels[i].clone()).collect()),
        Err(cycle) => Err(VincaError::DependencyCycle(
            cycle.into_iter().map(|i| labels[i].clone()).collect(),
        )),
    }
}

/// Recipes for every manifest of a snapshot, with siblings resolved
/// against the snapshot itself.
pub fn generate_snapshot(
    snapshot: &[RosManifest],
    distro: Distro,
    mapping: &DependencyMapping,
    platform: Platform,
) -> Vec<Result<Recipe, VincaError>> {
    let siblings: BTreeSet<String> = snapshot.iter().map(|m| m.name.clone()).collect();
    snapshot
        .iter()
        .map(|m| generate_recipe(m, distro, mapping, platform, &siblings))
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    use super::*;

    fn manifest(name: &str, exec: &[&str]) -> RosManifest {
        RosManifest {
            name: name.into(),
            version: "1.0.0".into(),
            exec_depends: exec.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn mangling() {
        assert_eq!(mangle_name("desktop", Distro::Noetic), "ros-noetic-desktop");
        assert_eq!(mangle_name("cv_bridge", Distro::Noetic), "ros-noetic-cv-bridge");
        assert_eq!(mangle_name("a", Distro::Foxy), "ros-foxy-a");
        assert!("hydro".parse::<Distro>().is_err());
    }

    #[test]
    fn orders() {
        let chain = [manifest("c", &["b"]), manifest("b", &["a"]), manifest("a", &[])];
        assert_eq!(build_order(&chain).unwrap(), ["a", "b", "c"]);
        let independent = [manifest("b", &[]), manifest("a", &[])];
        assert_eq!(build_order(&independent).unwrap(), ["a", "b"]);
        let cycle = [manifest("a", &["b"]), manifest("b", &["a"])];
        match build_order(&cycle) {
            Err(VincaError::DependencyCycle(path)) => assert_eq!(path, ["a", "b", "a"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn random_dags_respect_every_edge() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            // Edges only point from higher to lower index, so the graph is
            // acyclic; names are shuffled relative to the index.
            let n = 50;
            let mut names: Vec<String> = (0..n).map(|i| format!("pkg_{i:02}")).collect();
            for i in (1..n).rev() {
                names.swap(i, rng.random_range(0..=i));
            }
            let snapshot: Vec<RosManifest> = (0..n)
                .map(|i| {
                    let deps: Vec<&str> = (0..i)
                        .filter(|_| rng.random_bool(0.1))
                        .map(|j| names[j].as_str())
                        .collect();
                    manifest(&names[i], &deps)
                })
                .collect();
            let order = build_order(&snapshot).unwrap();
            assert_eq!(order.len(), n);
            let pos: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
            for m in &snapshot {
                for d in &m.exec_depends {
                    assert!(pos[d.as_str()] < pos[m.name.as_str()], "{d} after {}", m.name);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn mangling_is_injective(a in "[a-z][a-z0-9_]{0,12}", b in "[a-z][a-z0-9_]{0,12}") {
            for d in Distro::ALL {
                prop_assert_eq!(mangle_name(&a, d) == mangle_name(&b, d), a == b);
            }
        }
    }
}
