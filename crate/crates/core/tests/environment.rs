mod common;

use std::cell::Cell;
use std::path::Path;

use common::{pkg, snapshot, write_channel, Pkg};
use pkgstack_core::channels::{Platform, PlatformProfile};
use pkgstack_core::environment::*;
use pkgstack_core::solver::SolveError;
use pkgstack_core::verspec::MatchSpec;

const TS: &str = "2021-06-01T00:00:00Z";

fn specs(texts: &[&str]) -> Vec<MatchSpec> {
    texts.iter().map(|t| MatchSpec::parse(t).unwrap()).collect()
}

fn profile() -> PlatformProfile {
    PlatformProfile::new(Platform::Linux64)
}

fn relocatable_pkgs() -> Vec<Pkg> {
    let ph = PLACEHOLDER.as_bytes();
    let text = [b"PREFIX=".as_slice(), ph, b"\nLIB=", ph, b"/lib\n"].concat();
    let binary = [b"\x7fELF\0\0".as_slice(), ph, b"/lib/libcore.so\0\x01\x02"].concat();
    vec![
        pkg("app", "1.0", &["lib >=1"]),
        pkg("lib", "1.0", &["base"])
            .file("etc/lib.conf", PathMode::Text, true, text)
            .file("lib/libcore.so", PathMode::Binary, true, binary),
        pkg("lib", "2.0", &["base"]),
        pkg("base", "1.0", &[]),
        pkg("extra", "1.0", &["app"]),
    ]
}

fn setup(dir: &Path) -> ChannelRef {
    write_channel(
        &dir.join("channels"),
        "main",
        Platform::Linux64,
        &relocatable_pkgs(),
    )
}

fn create(dir: &Path, chan: &ChannelRef, name: &str, sp: &[&str]) -> EnvironmentState {
    let prefix = dir.join("envs").join(name);
    let plan = plan_create(&prefix, &specs(sp), &[], std::slice::from_ref(chan), &profile()).unwrap();
    plan.apply(&ChannelArchives::new(std::slice::from_ref(chan)), TS, None)
        .unwrap()
}

fn names(records: &[pkgstack_core::channels::PackageRecord]) -> Vec<String> {
    records
        .iter()
        .map(|r| format!("{}-{}", r.name, r.version))
        .collect()
}

#[test]
fn empty_environment_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    let chan = setup(dir.path());
    let state = create(dir.path(), &chan, "empty", &[]);
    assert!(state.installed.is_empty());
    assert_eq!(state.history.len(), 1);
    assert_eq!(EnvironmentState::load(&state.prefix).unwrap(), state);
    let doc = export_environment(&state, ExportMode::Full);
    assert!(doc.dependencies.is_empty());
    assert_eq!(doc.channels, std::slice::from_ref(&chan.source));
}

#[test]
fn create_links_in_dependency_order_and_relocates() {
    let dir = tempfile::tempdir().unwrap();
    let chan = setup(dir.path());
    let prefix = dir.path().join("envs").join("e1");
    let plan = plan_create(
        &prefix,
        &specs(&["app"]),
        &[],
        std::slice::from_ref(&chan),
        &profile(),
    )
    .unwrap();
    assert_eq!(names(&plan.transaction.link), ["base-1.0", "lib-2.0", "app-1.0"]);

    let plan = plan_create(
        &prefix,
        &specs(&["app", "lib <2"]),
        &[],
        std::slice::from_ref(&chan),
        &profile(),
    )
    .unwrap();
    assert_eq!(names(&plan.transaction.link), ["base-1.0", "lib-1.0", "app-1.0"]);
    let state = plan.apply(&ChannelArchives::new(&[chan]), TS, None).unwrap();
    assert_eq!(EnvironmentState::load(&prefix).unwrap(), state);

    let conf = std::fs::read_to_string(prefix.join("etc/lib.conf")).unwrap();
    let p = prefix.to_string_lossy();
    assert_eq!(conf, format!("PREFIX={p}\nLIB={p}/lib\n"));
    let so = std::fs::read(prefix.join("lib/libcore.so")).unwrap();
    let original = relocatable_pkgs()[1].files[2].3.clone();
    assert_eq!(so.len(), original.len());
    assert!(so.windows(10).all(|w| w != &PLACEHOLDER.as_bytes()[..10]));
    let needle = format!("{p}/lib/libcore.so\0");
    assert!(so.windows(needle.len()).any(|w| w == needle.as_bytes()));
    assert!(so.ends_with(b"\0\x01\x02"));
}

#[test]
fn identical_target_gives_empty_transaction_and_a_history_entry() {
    let dir = tempfile::tempdir().unwrap();
    let chan = setup(dir.path());
    let state = create(dir.path(), &chan, "e", &["app"]);
    let plan = plan_install(&state, &specs(&["app"]), &[], &profile()).unwrap();
    assert!(plan.transaction.is_empty());
    let after = plan.apply(&ChannelArchives::new(&[chan]), TS, None).unwrap();
    assert_eq!(after.installed, state.installed);
    assert_eq!(after.history.len(), 2);
}

#[test]
fn upgrade_replaces_only_the_changed_record() {
    let dir = tempfile::tempdir().unwrap();
    let chan = setup(dir.path());
    let state = create(dir.path(), &chan, "e", &["app", "lib <2"]);
    let plan = plan_install(&state, &specs(&["lib >=2"]), &[], &profile()).unwrap();
    assert_eq!(names(&plan.transaction.unlink), ["lib-1.0"]);
    assert_eq!(names(&plan.transaction.link), ["lib-2.0"]);
    let after = plan.apply(&ChannelArchives::new(&[chan]), TS, None).unwrap();
    assert!(!after.prefix.join("etc/lib.conf").exists());
    assert!(!after.prefix.join("lib").exists());
    assert_eq!(after.get("lib").unwrap().version, "2.0");
    assert_eq!(EnvironmentState::load(&after.prefix).unwrap(), after);
}

#[test]
fn remove_takes_dependents_and_orphans() {
    let dir = tempfile::tempdir().unwrap();
    let chan = setup(dir.path());
    let state = create(dir.path(), &chan, "e", &["extra"]);
    assert_eq!(state.installed.len(), 4);
    let closure = reverse_dependency_closure(&state.records().unwrap(), &["lib".to_string()].into());
    assert_eq!(closure, ["app", "extra", "lib"].map(String::from).into());

    let plan = plan_remove(&state, &["app".to_string()], &profile()).unwrap();
    let mut unlinked = names(&plan.transaction.unlink);
    unlinked.sort();
    assert_eq!(unlinked, ["app-1.0", "base-1.0", "extra-1.0", "lib-2.0"]);
    assert_eq!(names(&plan.transaction.unlink)[0], "extra-1.0");
    let after = plan.apply(&ChannelArchives::new(&[chan]), TS, None).unwrap();
    assert!(after.installed.is_empty());
    assert!(after.requested.is_empty());
}

#[test]
fn removing_a_pinned_package_is_unsatisfiable() {
    let dir = tempfile::tempdir().unwrap();
    let chan = setup(dir.path());
    let prefix = dir.path().join("e");
    let plan = plan_create(
        &prefix,
        &specs(&["app"]),
        &specs(&["base"]),
        std::slice::from_ref(&chan),
        &profile(),
    )
    .unwrap();
    let state = plan.apply(&ChannelArchives::new(&[chan]), TS, None).unwrap();
    let err = plan_remove(&state, &["base".into()], &profile()).unwrap_err();
    assert!(
        matches!(err, EnvError::Solve(SolveError::Unsatisfiable(_))),
        "{err}"
    );
    assert!(matches!(
        plan_remove(&state, &["nothere".into()], &profile()),
        Err(EnvError::PackageNotInstalled(_))
    ));
}

#[test]
fn no_candidates_creates_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let chan = setup(dir.path());
    let prefix = dir.path().join("e");
    let err = plan_create(&prefix, &specs(&["nothere"]), &[], &[chan], &profile()).unwrap_err();
    assert!(matches!(err, EnvError::Solve(SolveError::NoCandidates(_))));
    assert!(!prefix.exists());
}

#[test]
fn digest_mismatch_leaves_no_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let chan = setup(dir.path());
    let archive = dir.path().join("channels/main/linux-64/base-1.0-h0.tar");
    let mut bytes = std::fs::read(&archive).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&archive, bytes).unwrap();

    let prefix = dir.path().join("e");
    let plan = plan_create(
        &prefix,
        &specs(&["base"]),
        &[],
        std::slice::from_ref(&chan),
        &profile(),
    )
    .unwrap();
    let err = plan.apply(&ChannelArchives::new(&[chan]), TS, None).unwrap_err();
    assert!(matches!(err, EnvError::DigestMismatch { .. }), "{err}");
    assert!(!prefix.exists());
}

#[test]
fn overlong_prefix_fails_binary_relocation() {
    let dir = tempfile::tempdir().unwrap();
    let chan = setup(dir.path());
    let mut prefix = dir.path().to_path_buf();
    while prefix.to_string_lossy().len() <= PLACEHOLDER_LEN {
        prefix.push("a_long_directory_name");
    }
    let plan = plan_create(
        &prefix,
        &specs(&["lib <2"]),
        &[],
        std::slice::from_ref(&chan),
        &profile(),
    )
    .unwrap();
    let err = plan.apply(&ChannelArchives::new(&[chan]), TS, None).unwrap_err();
    assert!(
        matches!(
            err,
            EnvError::PrefixTooLong {
                limit: PLACEHOLDER_LEN,
                ..
            }
        ),
        "{err}"
    );
}

#[test]
fn existing_unowned_file_is_a_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let chan = setup(dir.path());
    let state = create(dir.path(), &chan, "e", &["base"]);
    std::fs::create_dir_all(state.prefix.join("share/app")).unwrap();
    std::fs::write(state.prefix.join("share/app/VERSION"), "mine").unwrap();
    let before = snapshot(&state.prefix);
    let plan = plan_install(&state, &specs(&["app"]), &[], &profile()).unwrap();
    let err = plan.apply(&ChannelArchives::new(&[chan]), TS, None).unwrap_err();
    assert!(matches!(err, EnvError::PathConflict { .. }), "{err}");
    assert_eq!(snapshot(&state.prefix), before);
}

#[test]
fn held_lock_blocks_transactions() {
    let dir = tempfile::tempdir().unwrap();
    let chan = setup(dir.path());
    let state = create(dir.path(), &chan, "e", &["base"]);
    let _held = PrefixLock::exclusive(&state.prefix).unwrap();
    let plan = plan_install(&state, &specs(&["app"]), &[], &profile()).unwrap();
    let err = plan.apply(&ChannelArchives::new(&[chan]), TS, None).unwrap_err();
    assert!(matches!(err, EnvError::LockHeld(_)), "{err}");
}

#[test]
fn every_interrupted_step_rolls_back() {
    let dir = tempfile::tempdir().unwrap();
    let chan = setup(dir.path());
    let state = create(dir.path(), &chan, "e", &["app", "lib <2"]);
    let plan = plan_install(&state, &specs(&["lib >=2", "extra"]), &[], &profile()).unwrap();
    let source = ChannelArchives::new(&[chan]);
    let before = snapshot(&state.prefix);

    // Fail at step 0, 1, 2, ... until the transaction runs to completion.
    let mut fail_at = 0;
    loop {
        let seen = Cell::new(0usize);
        let hook = |_: &Step| -> Result<(), String> {
            let i = seen.get();
            seen.set(i + 1);
            if i == fail_at {
                Err(format!("injected at step {i}"))
            } else {
                Ok(())
            }
        };
        match plan.apply(&source, TS, Some(&hook)) {
            Err(EnvError::Interrupted(_)) => {
                assert_eq!(snapshot(&state.prefix), before, "after failing step {fail_at}");
                fail_at += 1;
            }
            Ok(_) => break,
            Err(e) => panic!("{e}"),
        }
    }
    let total = fail_at;
    assert!(total > 5);
}

#[test]
fn export_modes() {
    let dir = tempfile::tempdir().unwrap();
    let chan = write_channel(
        &dir.path().join("channels"),
        "conda-forge",
        Platform::Linux64,
        &[Pkg {
            build: "hffdb5ce_0_cpython",
            ..pkg("python", "3.8.8", &[])
        }],
    );
    let state = create(dir.path(), &chan, "py", &["python=3.8"]);
    let full = export_environment(&state, ExportMode::Full);
    assert_eq!(full.dependencies, ["python=3.8.8=hffdb5ce_0_cpython"]);
    assert_eq!(full.name, "py");
    let nb = export_environment(&state, ExportMode::NoBuilds);
    assert_eq!(nb.dependencies, ["python=3.8.8"]);
}
