use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use super::{mangle_name, DependencyMapping, Distro, RosManifest, VincaError};
use crate::channels::Platform;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecipeSource {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Requirements {
    pub build: Vec<String>,
    pub host: Vec<String>,
    pub run: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recipe {
    pub name: String,
    pub version: String,
    pub source: RecipeSource,
    pub build_script: String,
    pub requirements: Requirements,
    pub summary: String,
    pub maintainers: Vec<String>,
}

/// Builds the recipe for one manifest. Keys naming another package of the
/// snapshot (`siblings`, ROS names) become mangled package names; all
/// others go through `mapping`. Every unresolvable key is reported at once.
pub fn generate_recipe(
    manifest: &RosManifest,
    distro: Distro,
    mapping: &DependencyMapping,
    platform: Platform,
    siblings: &BTreeSet<String>,
) -> Result<Recipe, VincaError> {
    let mut unmapped = BTreeSet::new();
    let mut resolve = |keys: &[&Vec<String>]| -> Vec<String> {
        let mut out = BTreeSet::new();
        for key in keys.iter().flat_map(|k| k.iter()) {
            if siblings.contains(key) {
                out.insert(mangle_name(key, distro));
            } else if let Some(specs) = mapping.lookup(key, platform) {
                out.extend(specs.iter().map(|s| s.to_string()));
            } else {
                unmapped.insert(key.clone());
            }
        }
        out.into_iter().collect()
    };
    let requirements = Requirements {
        build: resolve(&[&manifest.buildtool_depends]),
        host: resolve(&[&manifest.build_depends, &manifest.build_export_depends]),
        run: resolve(&[&manifest.exec_depends]),
    };
    if !unmapped.is_empty() {
        return Err(VincaError::UnmappedDependency {
            package: manifest.name.clone(),
            platform,
            keys: unmapped.into_iter().collect(),
        });
    }
    Ok(Recipe {
        name: mangle_name(&manifest.name, distro),
        version: manifest.version.clone(),
        source: RecipeSource {
            path: manifest.source_path.clone(),
            sha256: manifest.source_sha256.clone(),
        },
        build_script: if platform.is_windows() {
            "bld_ros.bat".into()
        } else {
            "build_ros.sh".into()
        },
        requirements,
        summary: manifest.description.clone(),
        maintainers: manifest.maintainers.clone(),
    })
}

fn write_nested_list(out: &mut String, indent: &str, key: &str, items: &[String]) {
    if items.is_empty() {
        let _ = writeln!(out, "{indent}{key}: []");
    } else {
        let _ = writeln!(out, "{indent}{key}:");
        for i in items {
            let _ = writeln!(out, "{indent}  - {i}");
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "package:\n  name: {}\n  version: {}",
            self.name, self.version
        );
        let _ = writeln!(
            out,
            "source:\n  path: {}\n  sha256: {}",
            self.source.path, self.source.sha256
        );
        let _ = writeln!(out, "build:\n  number: 0\n  script: {}", self.build_script);
        out.push_str("requirements:\n");
        write_nested_list(&mut out, "  ", "build", &self.requirements.build);
        write_nested_list(&mut out, "  ", "host", &self.requirements.host);
        write_nested_list(&mut out, "  ", "run", &self.requirements.run);
        out.push_str("about:\n");
        let _ = writeln!(out, "  summary: {}", self.summary);
        write_nested_list(&mut out, "  ", "maintainers", &self.maintainers);
        f.write_str(&out)
    }
}
