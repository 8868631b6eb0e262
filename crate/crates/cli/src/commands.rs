use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use pkgstack_core::channels::{
    detect_virtual_packages, load_channels, Locator, PackageRecord, Platform, PlatformProfile,
};
use pkgstack_core::environment::{
    export_environment, load_merged_index, plan_create, plan_install, plan_remove, ChannelArchives,
    ChannelRef, EnvError, EnvironmentDocument, EnvironmentState, ExportMode, Plan,
};
use pkgstack_core::lock::{
    generate_lock, index_digest, install_from_lock, Lockfile, PlatformInput, SpecFile,
};
use pkgstack_core::solver::{solve, SolveRequest};
use pkgstack_core::verspec::{MatchSpec, Version};
use pkgstack_core::vinca::{
    build_order, generate_recipe, load_snapshot, mangle_name, parse_package_xml, DependencyMapping, Distro,
};
use serde_json::json;

use crate::error::CliError;
use crate::{Command, Context, EnvCommand, ExportArgs, OptionalTarget, PlatformArgs, Target};

const DEFAULT_GLIBC: &str = "2.17";
const DEFAULT_OSX: &str = "10.15";

type Out<'a> = &'a mut dyn Write;

pub(crate) fn dispatch(command: Command, ctx: &Context, out: Out, err: Out) -> Result<(), CliError> {
    match command {
        Command::Create {
            target,
            specs,
            channels,
            pins,
            platform,
            dry_run,
            json,
        } => {
            let prefix = target_prefix(ctx, &target);
            let specs = parse_specs(&specs)?;
            let pins = parse_specs(&pins)?;
            let channels = resolve_channels(ctx, &channels);
            let profile = profile(platform.platform.as_deref(), &platform, None)?;
            let plan = plan_create(&prefix, &specs, &pins, &channels, &profile)?;
            finish(plan, ctx, dry_run, json, out)
        }
        Command::Install {
            target,
            specs,
            pins,
            platform,
            dry_run,
            json,
        } => {
            let state = load_env(ctx, &target)?;
            let specs = parse_specs(&specs)?;
            let pins = parse_specs(&pins)?;
            let profile = profile(platform.platform.as_deref(), &platform, Some(&state))?;
            let plan = plan_install(&state, &specs, &pins, &profile)?;
            finish(plan, ctx, dry_run, json, out)
        }
        Command::Remove {
            target,
            names,
            platform,
            dry_run,
            json,
        } => {
            let state = load_env(ctx, &target)?;
            let profile = profile(platform.platform.as_deref(), &platform, Some(&state))?;
            let plan = plan_remove(&state, &names, &profile)?;
            finish(plan, ctx, dry_run, json, out)
        }
        Command::List { target, json } => {
            let state = load_env(ctx, &target)?;
            if json {
                let records = state.records()?;
                print_json(out, &serde_json::to_value(&records).expect("records serialize"))
            } else {
                for p in &state.installed {
                    write_out(
                        out,
                        &format!("{} {} {} {}\n", p.name, p.version, p.build, p.channel),
                    )?;
                }
                Ok(())
            }
        }
        Command::Export { export } | Command::Env(EnvCommand::Export { export }) => {
            cmd_export(ctx, &export, out)
        }
        Command::Env(EnvCommand::Create {
            file,
            target,
            platform,
            dry_run,
            json,
        }) => cmd_env_create(ctx, &file, &target, &platform, dry_run, json, out),
        Command::Solve {
            specs,
            channels,
            pins,
            platform,
            json,
        } => {
            let specs = parse_specs(&specs)?;
            let pins = parse_specs(&pins)?;
            let channels = resolve_channels(ctx, &channels);
            let profile = profile(platform.platform.as_deref(), &platform, None)?;
            let index = load_merged_index(&channels, &profile)?;
            let request = SolveRequest::new(specs, &index)
                .with_virtual_packages(detect_virtual_packages(&profile))
                .with_pins(pins);
            let solution = solve(&request)?;
            if json {
                print_json(
                    out,
                    &serde_json::to_value(&solution).expect("solution serializes"),
                )
            } else {
                write_out(out, &solution.to_string())
            }
        }
        Command::Lock {
            specfile,
            output,
            glibc,
            osx,
            json,
        } => cmd_lock(ctx, &specfile, output.as_deref(), glibc, osx, json, out),
        Command::InstallLock {
            lockfile,
            target,
            platform,
        } => {
            let lock = Lockfile::parse(&read(&lockfile)?)?;
            let platform = match platform {
                Some(p) => p.parse()?,
                None => host_platform()?,
            };
            let prefix = target_prefix(ctx, &target);
            let channels = resolve_channels(ctx, &lock.channels);
            if let Some(section) = lock.section(platform) {
                let pairs: Vec<_> = channels
                    .iter()
                    .map(|c| (c.name.clone(), c.locator.clone()))
                    .collect();
                if let Ok(indexes) = load_channels(&pairs, platform) {
                    if index_digest(&indexes) != section.index_digest {
                        let _ = writeln!(
                            err,
                            "warning: the {platform} channel indexes changed since the lock was generated"
                        );
                    }
                }
            }
            let state = install_from_lock(&lock, platform, &prefix, &channels, &ctx.timestamp)?;
            for p in &state.installed {
                write_out(
                    out,
                    &format!("+ {}::{}-{}-{}\n", p.channel, p.name, p.version, p.build),
                )?;
            }
            Ok(())
        }
        Command::GenerateRecipe {
            manifest,
            distro,
            mapping,
            platform,
            snapshot,
            output,
        } => {
            let distro: Distro = distro.parse()?;
            let platform = match platform {
                Some(p) => p.parse()?,
                None => host_platform()?,
            };
            let mapping = DependencyMapping::parse(&read(&mapping)?)?;
            let m = parse_package_xml(&read(&manifest)?)?;
            let siblings: BTreeSet<String> = match snapshot {
                Some(dir) => load_snapshot(&dir)?.into_iter().map(|s| s.name).collect(),
                None => BTreeSet::new(),
            };
            let recipe = generate_recipe(&m, distro, &mapping, platform, &siblings)?;
            emit(out, output.as_deref(), &recipe.to_string())
        }
        Command::BuildOrder { snapshot, distro } => {
            let distro: Option<Distro> = distro.map(|d| d.parse()).transpose()?;
            let order = build_order(&load_snapshot(&snapshot)?)?;
            for name in order {
                let shown = match distro {
                    Some(d) => mangle_name(&name, d),
                    None => name,
                };
                write_out(out, &format!("{shown}\n"))?;
            }
            Ok(())
        }
    }
}

fn cmd_export(ctx: &Context, args: &ExportArgs, out: Out) -> Result<(), CliError> {
    let state = load_env(ctx, &args.target)?;
    let mode = if args.no_builds {
        ExportMode::NoBuilds
    } else {
        ExportMode::Full
    };
    let doc = export_environment(&state, mode);
    emit(out, args.file.as_deref(), &doc.to_string())
}

fn cmd_env_create(
    ctx: &Context,
    file: &Path,
    target: &OptionalTarget,
    platform: &PlatformArgs,
    dry_run: bool,
    json: bool,
    out: Out,
) -> Result<(), CliError> {
    let doc = EnvironmentDocument::parse(&read(file)?).map_err(|source| CliError::Document {
        path: file.to_path_buf(),
        source,
    })?;
    let prefix = match (&target.name, &target.prefix) {
        (_, Some(p)) => p.clone(),
        (Some(n), None) => ctx.root.join("envs").join(n),
        (None, None) if !doc.name.is_empty() => ctx.root.join("envs").join(&doc.name),
        (None, None) => return Err(CliError::Usage("the document has no name; pass -n or -p".into())),
    };
    let specs = parse_specs(&doc.dependencies)?;
    let channels = resolve_channels(ctx, &doc.channels);
    let profile = profile(platform.platform.as_deref(), platform, None)?;
    let plan = plan_create(&prefix, &specs, &[], &channels, &profile)?;
    finish(plan, ctx, dry_run, json, out)
}

fn cmd_lock(
    ctx: &Context,
    specfile: &Path,
    output: Option<&Path>,
    glibc: Option<String>,
    osx: Option<String>,
    json: bool,
    out: Out,
) -> Result<(), CliError> {
    let spec = SpecFile::parse(&read(specfile)?)?;
    let channels = resolve_channels(ctx, &spec.channels);
    let pairs: Vec<_> = channels
        .iter()
        .map(|c| (c.name.clone(), c.locator.clone()))
        .collect();
    let platform_args = PlatformArgs {
        platform: None,
        glibc,
        osx,
    };
    let mut inputs = BTreeMap::new();
    for &p in &spec.platforms {
        let profile = profile_for(p, &platform_args)?;
        let indexes = load_channels(&pairs, p)?;
        inputs.insert(p, PlatformInput { profile, indexes });
    }
    let lock = generate_lock(&spec, &inputs, &ctx.timestamp)?;
    let text = lock.to_string();
    if let Some(path) = output {
        std::fs::write(path, &text).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })?;
    }
    if json {
        print_json(out, &lock_json(&lock))
    } else if output.is_none() {
        write_out(out, &text)
    } else {
        Ok(())
    }
}

fn lock_json(lock: &Lockfile) -> serde_json::Value {
    json!({
        "input_digest": lock.input_digest,
        "generated": lock.generated,
        "channels": lock.channels,
        "sections": lock.sections.iter().map(|s| json!({
            "platform": s.platform.as_str(),
            "index_digest": s.index_digest,
            "virtual_packages": s.virtual_packages,
            "entries": s.entries.iter().map(|e| json!({
                "name": e.name,
                "version": e.version,
                "build": e.build,
                "channel": e.channel,
                "subdir": e.subdir.as_str(),
                "sha256": e.sha256,
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

/// Prints the plan and, unless `dry_run`, applies it.
fn finish(plan: Plan, ctx: &Context, dry_run: bool, json: bool, out: Out) -> Result<(), CliError> {
    if !dry_run {
        let source = ChannelArchives::new(&plan.channels);
        plan.apply(&source, &ctx.timestamp, None)?;
    }
    if json {
        let pins = |records: &[PackageRecord]| records.iter().map(|r| r.to_string()).collect::<Vec<_>>();
        print_json(
            out,
            &json!({
                "prefix": plan.state.prefix.to_string_lossy(),
                "action": plan.action,
                "dry_run": dry_run,
                "unlink": pins(&plan.transaction.unlink),
                "link": pins(&plan.transaction.link),
                "solution": plan.solution,
            }),
        )
    } else {
        let mut text = String::new();
        for line in plan.transaction.summary() {
            text.push_str(&line);
            text.push('\n');
        }
        write_out(out, &text)
    }
}

fn target_prefix(ctx: &Context, target: &Target) -> PathBuf {
    match (&target.name, &target.prefix) {
        (_, Some(p)) => p.clone(),
        (Some(n), None) => ctx.root.join("envs").join(n),
        (None, None) => unreachable!("clap requires -n or -p"),
    }
}

fn load_env(ctx: &Context, target: &Target) -> Result<EnvironmentState, CliError> {
    let prefix = target_prefix(ctx, target);
    if !EnvironmentState::is_environment(&prefix) {
        return Err(EnvError::NotAnEnvironment(prefix).into());
    }
    Ok(EnvironmentState::load(&prefix)?)
}

/// A URL, then a channel of that name under `<root>/channels/`, then a
/// directory path.
fn resolve_channel(ctx: &Context, source: &str) -> ChannelRef {
    if source.contains("://") {
        return ChannelRef::new(source, Locator::parse(source));
    }
    let named = ctx.root.join("channels").join(source);
    if !source.contains(['/', '\\']) && named.is_dir() {
        return ChannelRef::new(source, Locator::Dir(named));
    }
    ChannelRef::new(source, Locator::parse(source))
}

fn resolve_channels(ctx: &Context, sources: &[String]) -> Vec<ChannelRef> {
    sources.iter().map(|s| resolve_channel(ctx, s)).collect()
}

fn parse_specs(texts: &[String]) -> Result<Vec<MatchSpec>, CliError> {
    texts
        .iter()
        .map(|t| {
            MatchSpec::parse(t).map_err(|source| CliError::Spec {
                text: t.clone(),
                source,
            })
        })
        .collect()
}

fn host_platform() -> Result<Platform, CliError> {
    Platform::host().ok_or_else(|| CliError::Usage("unknown host platform; pass --platform".into()))
}

fn parse_version(flag: &str, text: &str) -> Result<Version, CliError> {
    Version::parse(text).map_err(|e| CliError::Usage(format!("--{flag} {text}: {e}")))
}

/// The profile for `platform` with declared versions or their defaults.
fn profile_for(platform: Platform, args: &PlatformArgs) -> Result<PlatformProfile, CliError> {
    let mut profile = PlatformProfile::new(platform);
    if platform.is_linux() {
        profile = profile.with_glibc(parse_version(
            "glibc",
            args.glibc.as_deref().unwrap_or(DEFAULT_GLIBC),
        )?);
    } else if platform.is_osx() {
        profile = profile.with_osx(parse_version("osx", args.osx.as_deref().unwrap_or(DEFAULT_OSX))?);
    }
    Ok(profile)
}

/// Target platform: the flag, else the platform of an existing
/// environment's packages, else the host.
fn profile(
    flag: Option<&str>,
    args: &PlatformArgs,
    state: Option<&EnvironmentState>,
) -> Result<PlatformProfile, CliError> {
    let platform = match flag {
        Some(p) => p.parse()?,
        None => match state
            .into_iter()
            .flat_map(|s| &s.installed)
            .map(|p| p.subdir)
            .find(|&p| p != Platform::NoArch)
        {
            Some(p) => p,
            None => host_platform()?,
        },
    };
    profile_for(platform, args)
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn write_out(out: Out, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|source| CliError::Write {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn print_json(out: Out, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("json renders");
    text.push('\n');
    write_out(out, &text)
}

/// Writes `text` to `path` if given, else to `out`.
fn emit(out: Out, path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => write_out(out, text),
    }
}
