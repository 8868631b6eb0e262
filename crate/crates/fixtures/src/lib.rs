//! Fixture data: two channels (`robostack`, `conda-forge`) for linux-64 and
//! win-64 with real archives, a ROS manifest snapshot with its dependency
//! mapping, and lock spec files. Everything is generated deterministically
//! and committed under the workspace `fixtures/` directory.

pub mod synth;

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use pkgstack_core::channels::{Platform, RepoData, RepoInfo, RepoRecord};
use pkgstack_core::environment::{sha256_hex, ArchiveIndex, PackageArchive, PathMode, PLACEHOLDER};

/// The committed fixture tree.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

struct Pkg {
    name: &'static str,
    version: &'static str,
    build: &'static str,
    build_number: u64,
    depends: &'static [&'static str],
}

const fn p(
    name: &'static str,
    version: &'static str,
    build: &'static str,
    build_number: u64,
    depends: &'static [&'static str],
) -> Pkg {
    Pkg {
        name,
        version,
        build,
        build_number,
        depends,
    }
}

const ROBOSTACK_LINUX: &[Pkg] = &[
    p(
        "ros-noetic-desktop",
        "1.5.0",
        "py38h1c8a6f4_0",
        0,
        &["ros-noetic-middleware"],
    ),
    p(
        "ros-noetic-middleware",
        "1.5.0",
        "py38h5d1e8b2_0",
        0,
        &["ros-noetic-core"],
    ),
    p("ros-noetic-core", "1.5.0", "py38h9b2e0c7_0", 0, &[]),
    p(
        "ros-noetic-desktop-full",
        "1.5.0",
        "py38h7f3d2a1_0",
        0,
        &[
            "ros-noetic-desktop",
            "ros-noetic-rviz",
            "ros-noetic-cv-bridge",
            "ros-noetic-rosbag",
        ],
    ),
    p(
        "ros-noetic-roscpp",
        "1.15.11",
        "py38h4c2b9e1_1",
        1,
        &["__glibc >=2.12", "ros-noetic-core"],
    ),
    p(
        "ros-noetic-rospy",
        "1.15.11",
        "py38h3a7c1d5_1",
        1,
        &["python 3.8.*", "ros-noetic-core"],
    ),
    p(
        "ros-noetic-cv-bridge",
        "1.15.0",
        "py38h8e4f2b3_2",
        2,
        &["libopencv >=4.5", "ros-noetic-roscpp"],
    ),
    p(
        "ros-noetic-rviz",
        "1.14.7",
        "py38h2b6d4e8_0",
        0,
        &["qt >=5.12,<6", "ros-noetic-roscpp"],
    ),
    p(
        "ros-noetic-rosbag",
        "1.15.11",
        "py38h6e1a3c9_1",
        1,
        &["ros-noetic-roscpp", "ros-noetic-rospy"],
    ),
    p(
        "ros-noetic-catkin",
        "0.8.9",
        "py38h0d5b7f2_0",
        0,
        &["python 3.8.*", "empy"],
    ),
    p(
        "ros-noetic-catkin",
        "0.8.8",
        "py38h0d5b7f2_0",
        0,
        &["python 3.8.*", "empy"],
    ),
    p("empy", "3.3.2", "py38h9a8f2c1_0", 0, &["python >=3.8"]),
];

const CONDA_FORGE_LINUX: &[Pkg] = &[
    p("python", "3.8.8", "hffdb5ce_0_cpython", 0, &[]),
    p("python", "3.8.6", "h852b56e_0_cpython", 0, &[]),
    p("python", "3.9.1", "hffdb5ce_3_cpython", 3, &[]),
    p("libopencv", "4.5.2", "py38hcdf9bf1_0", 0, &["qt >=5.12,<6"]),
    p("qt", "5.12.9", "hda022c4_4", 4, &[]),
    p("ros-noetic-core", "1.5.1", "py38hcf10a3e_0", 0, &[]),
    p("libmodern", "1.0", "h3f9d0b2_0", 0, &["__glibc >=2.28"]),
];

const CONDA_FORGE_NOARCH: &[Pkg] = &[p("empy", "3.3.4", "pyh9f0ad1d_1", 1, &["python"])];

const ROBOSTACK_WIN: &[Pkg] = &[
    p(
        "ros-noetic-desktop",
        "1.5.0",
        "py38h6a1f0c2_0",
        0,
        &["ros-noetic-middleware"],
    ),
    p(
        "ros-noetic-middleware",
        "1.5.0",
        "py38h1e9d3b4_0",
        0,
        &["ros-noetic-core"],
    ),
    p("ros-noetic-core", "1.5.0", "py38h5c0a2e7_0", 0, &[]),
    p(
        "ros-noetic-roscpp",
        "1.15.11",
        "py38h7b4e1f0_1",
        1,
        &["ros-noetic-core"],
    ),
    p(
        "ros-noetic-rospy",
        "1.15.11",
        "py38h2f8c6a3_1",
        1,
        &["python 3.8.*", "ros-noetic-core"],
    ),
    p(
        "ros-noetic-catkin",
        "0.8.9",
        "py38h4a3e9d1_0",
        0,
        &["python 3.8.*", "empy"],
    ),
];

const CONDA_FORGE_WIN: &[Pkg] = &[
    p("python", "3.8.8", "h7840368_0_cpython", 0, &[]),
    p("python", "3.9.1", "h7840368_3_cpython", 3, &[]),
    p("libopencv", "4.5.2", "py38h5d2b1e0_0", 0, &["qt >=5.12,<6"]),
    p("qt", "5.12.9", "h5909a2a_4", 4, &[]),
];

/// Payload for a fixture package. `ros-noetic-core` and `python` carry
/// relocatable files in both modes.
fn archive(pkg: &Pkg, platform: Platform) -> PackageArchive {
    let mut a = PackageArchive::new(ArchiveIndex {
        name: pkg.name.into(),
        version: pkg.version.into(),
        build: pkg.build.into(),
        build_number: pkg.build_number,
        depends: pkg.depends.iter().map(|d| d.to_string()).collect(),
        subdir: platform,
    });
    a.add_file(
        &format!("share/{}/package.txt", pkg.name),
        PathMode::Text,
        false,
        format!("{} {} {}\n", pkg.name, pkg.version, pkg.build).into_bytes(),
    );
    let ph = PLACEHOLDER.as_str();
    match pkg.name {
        "ros-noetic-core" => {
            a.add_file(
                "etc/ros/setup.sh",
                PathMode::Text,
                true,
                format!(
                    "export ROS_DISTRO=noetic\nexport ROS_ROOT={ph}/share/ros\nexport CMAKE_PREFIX_PATH={ph}\n"
                )
                .into_bytes(),
            );
            let mut so = b"\x7fELF\x02\x01\x01\0".to_vec();
            so.extend_from_slice(&[0; 8]);
            so.extend_from_slice(format!("{ph}/lib/ros\0").as_bytes());
            so.extend_from_slice(b"\x10\x20\x30\x40");
            so.extend_from_slice(format!("RUNPATH={ph}/lib:{ph}/lib64\0").as_bytes());
            so.extend_from_slice(&[0xde, 0xad, 0xbe, 0xef]);
            a.add_file("lib/librosconsole.so", PathMode::Binary, true, so);
        }
        "python" => {
            let mut bin = b"MZ\x90\0\x03\0".to_vec();
            bin.extend_from_slice(format!("{ph}/lib/python3\0").as_bytes());
            bin.extend_from_slice(&[1, 2, 3, 4, 5]);
            a.add_file("bin/python", PathMode::Binary, true, bin);
        }
        _ => {}
    }
    a
}

fn write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, bytes)
}

fn write_subdir(channel_dir: &Path, platform: Platform, pkgs: &[Pkg]) -> io::Result<()> {
    let dir = channel_dir.join(platform.as_str());
    let mut packages = BTreeMap::new();
    for pkg in pkgs {
        let bytes = archive(pkg, platform).to_bytes();
        let filename = format!("{}-{}-{}.tar", pkg.name, pkg.version, pkg.build);
        write(&dir.join(&filename), &bytes)?;
        packages.insert(
            filename,
            RepoRecord {
                name: pkg.name.into(),
                version: pkg.version.into(),
                build: pkg.build.into(),
                build_number: pkg.build_number,
                depends: pkg.depends.iter().map(|d| d.to_string()).collect(),
                sha256: sha256_hex(&bytes),
            },
        );
    }
    let doc = RepoData {
        info: RepoInfo { subdir: platform },
        packages,
    };
    let mut json = serde_json::to_vec_pretty(&doc).expect("index serializes");
    json.push(b'\n');
    write(&dir.join("repodata.json"), &json)
}

fn package_xml(name: &str, version: &str, description: &str, deps: &[(&str, &str)]) -> String {
    let mut s = format!(
        "<?xml version=\"1.0\"?>\n<package format=\"3\">\n  <name>{name}</name>\n  <version>{version}</version>\n  <description>{description}</description>\n  <maintainer email=\"maintainer@example.org\">Fixture Maintainer</maintainer>\n  <license>BSD</license>\n"
    );
    for (tag, key) in deps {
        s.push_str(&format!("  <{tag}>{key}</{tag}>\n"));
    }
    s.push_str("</package>\n");
    s
}

/// ROS manifests by snapshot directory.
fn ros_manifests() -> Vec<(&'static str, String)> {
    vec![
        (
            "snapshot/desktop",
            package_xml(
                "desktop",
                "1.5.0",
                "A metapackage for the desktop variant.",
                &[
                    ("buildtool_depend", "catkin"),
                    ("exec_depend", "roscpp"),
                    ("exec_depend", "rospy"),
                    ("exec_depend", "cv_bridge"),
                    ("exec_depend", "rviz"),
                ],
            ),
        ),
        (
            "snapshot/cpp_common",
            package_xml(
                "cpp_common",
                "0.7.2",
                "Common C++ utilities.",
                &[("buildtool_depend", "catkin"), ("depend", "boost")],
            ),
        ),
        (
            "snapshot/roscpp",
            package_xml(
                "roscpp",
                "1.15.11",
                "C++ client library.",
                &[
                    ("buildtool_depend", "catkin"),
                    ("depend", "cpp_common"),
                    ("depend", "boost"),
                    ("test_depend", "gtest"),
                ],
            ),
        ),
        (
            "snapshot/rospy",
            package_xml(
                "rospy",
                "1.15.11",
                "Python client library.",
                &[
                    ("buildtool_depend", "catkin"),
                    ("exec_depend", "python3"),
                    ("exec_depend", "python3-yaml"),
                ],
            ),
        ),
        (
            "snapshot/cv_bridge",
            package_xml(
                "cv_bridge",
                "1.15.0",
                "Image conversion between ROS and OpenCV.",
                &[
                    ("buildtool_depend", "catkin"),
                    ("depend", "opencv"),
                    ("depend", "roscpp"),
                    ("build_export_depend", "boost"),
                ],
            ),
        ),
        (
            "snapshot/rviz",
            package_xml(
                "rviz",
                "1.14.7",
                "3D visualization tool.",
                &[
                    ("buildtool_depend", "catkin"),
                    ("depend", "qt5"),
                    ("depend", "roscpp"),
                ],
            ),
        ),
        (
            "snapshot/foo_bar",
            package_xml(
                "foo_bar",
                "0.1.0",
                "Example package with an underscore in its name.",
                &[
                    ("buildtool_depend", "catkin"),
                    ("depend", "roscpp"),
                    ("exec_depend", "opencv"),
                ],
            ),
        ),
        (
            "cycle/cycle_a",
            package_xml("cycle_a", "0.1.0", "Half of a cycle.", &[("depend", "cycle_b")]),
        ),
        (
            "cycle/cycle_b",
            package_xml(
                "cycle_b",
                "0.1.0",
                "Other half of a cycle.",
                &[("exec_depend", "cycle_a")],
            ),
        ),
        (
            "unmapped/needs_unmapped",
            package_xml(
                "needs_unmapped",
                "0.1.0",
                "Depends on keys nobody maps.",
                &[
                    ("buildtool_depend", "catkin"),
                    ("depend", "libfoo_missing"),
                    ("exec_depend", "another_missing_key"),
                ],
            ),
        ),
    ]
}

const MAPPING: &str = "\
# rosdep key -> channel packages, per platform
[linux-64]
catkin: [ros-noetic-catkin]
boost: [boost-cpp >=1.74,<1.75]
opencv: [libopencv]
qt5: [qt >=5.12,<6]
python3: [python 3.8.*]
python3-yaml: [pyyaml]
gtest: [gtest]

[win-64]
catkin: [ros-noetic-catkin]
boost: [boost-cpp >=1.74,<1.75]
opencv: [libopencv]
qt5: [qt >=5.12,<6]
python3: [python 3.8.*]
python3-yaml: [pyyaml]
gtest: [gtest]
";

const PYTHON_SPEC: &str = "\
name: python-lock
channels:
  - conda-forge
dependencies:
  - python=3.8
platforms:
  - linux-64
  - win-64
";

const ROS_SPEC: &str = "\
name: ros-lock
channels:
  - robostack
  - conda-forge
dependencies:
  - ros-noetic-desktop
  - ros-noetic-rospy
  - python=3.8
platforms:
  - linux-64
  - win-64
";

/// Writes the whole fixture tree below `root`.
pub fn write_all(root: &Path) -> io::Result<()> {
    let channels = root.join("channels");
    write_subdir(&channels.join("robostack"), Platform::Linux64, ROBOSTACK_LINUX)?;
    write_subdir(&channels.join("robostack"), Platform::Win64, ROBOSTACK_WIN)?;
    write_subdir(
        &channels.join("conda-forge"),
        Platform::Linux64,
        CONDA_FORGE_LINUX,
    )?;
    write_subdir(&channels.join("conda-forge"), Platform::Win64, CONDA_FORGE_WIN)?;
    write_subdir(
        &channels.join("conda-forge"),
        Platform::NoArch,
        CONDA_FORGE_NOARCH,
    )?;
    for (dir, xml) in ros_manifests() {
        write(&root.join("ros").join(dir).join("package.xml"), xml.as_bytes())?;
    }
    write(&root.join("ros/mapping.txt"), MAPPING.as_bytes())?;
    write(&root.join("specs/python.yml"), PYTHON_SPEC.as_bytes())?;
    write(&root.join("specs/ros.yml"), ROS_SPEC.as_bytes())?;
    Ok(())
}
