use super::VincaError;
use crate::environment::sha256_hex;

/// The parts of a ROS `package.xml` that matter for recipes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RosManifest {
    pub name: String,
    pub version: String,
    pub description: String,
    pub maintainers: Vec<String>,
    pub buildtool_depends: Vec<String>,
    pub build_depends: Vec<String>,
    pub build_export_depends: Vec<String>,
    pub exec_depends: Vec<String>,
    pub test_depends: Vec<String>,
    /// Where the document was read from, relative to its snapshot.
    pub source_path: String,
    pub source_sha256: String,
}

impl RosManifest {
    /// Every dependency key that ends up in a recipe.
    pub fn recipe_keys(&self) -> impl Iterator<Item = &String> {
        self.buildtool_depends
            .iter()
            .chain(&self.build_depends)
            .chain(&self.build_export_depends)
            .chain(&self.exec_depends)
    }
}

fn is_key(text: &str) -> bool {
    !text.is_empty()
        && text
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn push_unique(list: &mut Vec<String>, key: &str) {
    if !list.iter().any(|k| k == key) {
        list.push(key.to_string());
    }
}

/// Parses a `package.xml` document. `<depend>` counts as both a build and
/// an exec dependency.
pub fn parse_package_xml(document: &str) -> Result<RosManifest, VincaError> {
    let malformed = |reason: String| VincaError::MalformedManifest { path: None, reason };
    let doc = roxmltree::Document::parse(document).map_err(|e| malformed(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "package" {
        return Err(malformed(format!(
            "root element is <{}>, expected <package>",
            root.tag_name().name()
        )));
    }
    let mut m = RosManifest {
        source_path: "package.xml".into(),
        source_sha256: sha256_hex(document.as_bytes()),
        ..Default::default()
    };
    for node in root.children().filter(|n| n.is_element()) {
        let text = node.text().unwrap_or("").trim();
        let tag = node.tag_name().name();
        let lists: Vec<&mut Vec<String>> = match tag {
            "name" => {
                m.name = text.to_string();
                continue;
            }
            "version" => {
                m.version = text.to_string();
                continue;
            }
            "description" => {
                m.description = text.split_whitespace().collect::<Vec<_>>().join(" ");
                continue;
            }
            "maintainer" => {
                m.maintainers.push(text.to_string());
                continue;
            }
            "depend" => vec![&mut m.build_depends, &mut m.exec_depends],
            "build_depend" => vec![&mut m.build_depends],
            "build_export_depend" => vec![&mut m.build_export_depends],
            "exec_depend" | "run_depend" => vec![&mut m.exec_depends],
            "test_depend" => vec![&mut m.test_depends],
            "buildtool_depend" => vec![&mut m.buildtool_depends],
            _ => continue,
        };
        if !is_key(text) {
            return Err(malformed(format!("<{tag}> holds `{text}`, not a dependency key")));
        }
        for list in lists {
            push_unique(list, text);
        }
    }
    if m.name.is_empty() {
        return Err(malformed("missing <name>".into()));
    }
    if m.version.is_empty() {
        return Err(malformed("missing <version>".into()));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_manifest() {
        let m = parse_package_xml(
            r#"<?xml version="1.0"?>
            <package format="2"><name>foo_bar</name><version>1.2.3</version></package>"#,
        )
        .unwrap();
        assert_eq!(m.name, "foo_bar");
        assert_eq!(m.version, "1.2.3");
        assert_eq!(m.recipe_keys().count(), 0);
        assert!(m.test_depends.is_empty());
    }

    #[test]
    fn depend_expands_to_build_and_exec() {
        let m = parse_package_xml(
            "<package><name>a</name><version>1.0.0</version>
             <depend>roscpp</depend><test_depend>gtest</test_depend>
             <buildtool_depend>catkin</buildtool_depend></package>",
        )
        .unwrap();
        assert_eq!(m.build_depends, ["roscpp"]);
        assert_eq!(m.exec_depends, ["roscpp"]);
        assert_eq!(m.test_depends, ["gtest"]);
        assert_eq!(m.buildtool_depends, ["catkin"]);
    }

    #[test]
    fn malformed_documents() {
        for doc in [
            "<package><version>1</version></package>",
            "<package><name>a</name></package>",
            "<manifest><name>a</name><version>1</version></manifest>",
            "<package><name>a</name>",
            "<package><name>a</name><version>1</version><depend>a >= 2</depend></package>",
        ] {
            assert!(
                matches!(parse_package_xml(doc), Err(VincaError::MalformedManifest { .. })),
                "{doc}"
            );
        }
    }
}
