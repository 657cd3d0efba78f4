//! Library side of the `detpro` binary: argument types, the run driver and
//! the output manifest.

mod commands;
mod config;
mod manifest;

use std::time::Instant;

use anyhow::Result;

pub use commands::admissible_splits;
pub use config::{Cli, Command, Common, FamilyInput, KernelInput};
pub use manifest::{sha256_hex, verify_manifest, OutputDigest, OutputDir, RunManifest, MANIFEST_NAME};

/// How a run ended when it did not error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Infeasibility or a counterexample; the binary exits with code 2.
    Negative(String),
}

pub fn run(cli: &Cli) -> Result<(Outcome, RunManifest)> {
    let start = Instant::now();
    let c = &cli.common;
    let mut out = OutputDir::create(&c.out)?;
    let outcome = match &cli.command {
        Command::Validate(k) => commands::validate(c, k, &mut out)?,
        Command::Enumerate(k) => commands::enumerate(c, k, &mut out)?,
        Command::Sample(k) => commands::sample(c, k, &mut out)?,
        Command::Ust { graph } => commands::ust(c, graph, &mut out)?,
        Command::Ope { family, bins } => commands::ope(c, family, *bins, &mut out)?,
        Command::CheckSr(k) => commands::check_sr(c, k, &mut out)?,
        Command::CheckNa { kernel, labels, graph, split } => commands::check_na(
            c,
            kernel.as_deref(),
            labels.as_deref(),
            graph.as_deref(),
            split.as_deref(),
            &mut out,
        )?,
        Command::Coupling { kernel1, kernel2, labels } => {
            commands::coupling(c, kernel1, kernel2, labels.as_deref(), &mut out)?
        }
        Command::ScanEntropy { dim, batch } => commands::scan_entropy(c, *dim, *batch, &mut out)?,
        Command::UnionCoupling { kernel1, kernel2, dim, ranks } => {
            let kernels = kernel1.as_deref().zip(kernel2.as_deref());
            let random = dim.zip(ranks.as_deref());
            commands::union_coupling(c, kernels, random, &mut out)?
        }
        Command::GmCheck { symbol } => commands::gm_check(symbol, &mut out)?,
        Command::Discretize { family, cells } => commands::discretize(c, family, cells, &mut out)?,
    };
    let mut outputs = out.digests().to_vec();
    outputs.sort_by(|a, b| a.file.cmp(&b.file));
    let manifest = RunManifest {
        tool: "detpro".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.command.name().into(),
        seed: c.seed,
        config: serde_json::to_value(cli)?,
        outcome: match &outcome {
            Outcome::Success => "success".into(),
            Outcome::Negative(_) => "negative".into(),
        },
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs,
    };
    manifest::write_manifest(&c.out, &manifest)?;
    Ok((outcome, manifest))
}
