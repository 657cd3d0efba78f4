use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use detpro_core::dpm::{full_distribution_capped, ENUMERATION_CAP};
use detpro_core::graph::{enumerate_spanning_trees, spanning_tree_count, transfer_current_kernel, UstSampler};
use detpro_core::io::{parse_graph, parse_kernel, write_distribution, write_kernel, write_labels, write_samples};
use detpro_core::lab::{
    entropy_concavity_scan, gm_domination_check, monotone_coupling, negative_association_check,
    strongly_rayleigh_slack, union_coupling_search, CirculantSymbol, CouplingOutcome, CouplingTable, UnionOutcome,
    MAX_BLOCK,
};
use detpro_core::ope::{
    count_law_distance, discretize_counts, empirical_count_law, empirical_intensity, joint_density_check,
    write_ope_samples, OpeFamily, OpeKind, OpeSampler, Region,
};
use detpro_core::random::random_orthogonal_pair;
use detpro_core::rng::task_rng;
use detpro_core::{
    validate_contraction, ContractionKernel, ContractionSampler, Error, ProjectionKernel, ProjectionSampler,
    SubsetDistribution,
};

use crate::config::{Common, FamilyInput, KernelInput};
use crate::manifest::OutputDir;
use crate::Outcome;

fn load_kernel(path: &Path, labels: Option<&Path>, tol: f64) -> Result<ContractionKernel> {
    let k = parse_kernel(path, labels, tol).with_context(|| format!("reading kernel {}", path.display()))?;
    validate_contraction(k, tol).with_context(|| format!("certifying kernel {}", path.display()))
}

fn load(input: &KernelInput, tol: f64) -> Result<ContractionKernel> {
    load_kernel(&input.kernel, input.labels.as_deref(), tol)
}

fn enumeration_cap(c: &Common) -> Result<usize> {
    if c.cap > ENUMERATION_CAP {
        return Err(Error::GroundSetTooLarge { size: c.cap, cap: ENUMERATION_CAP }.into());
    }
    Ok(c.cap)
}

fn family(f: &FamilyInput) -> Result<OpeFamily> {
    Ok(OpeFamily::new(f.family.parse::<OpeKind>()?, f.n)?)
}

fn labels(d: &SubsetDistribution, mask: u32) -> String {
    d.labels_of(mask).join(" ")
}

fn table_csv(d: &SubsetDistribution, t: &CouplingTable) -> Vec<u8> {
    let mut s = String::from("first_bitmask,second_bitmask,first_labels,second_labels,weight\n");
    for &(a, b, w) in &t.weights {
        s.push_str(&format!("{a},{b},{},{},{w:.16e}\n", labels(d, a), labels(d, b)));
    }
    s.into_bytes()
}

fn coupling_json(d: &SubsetDistribution, o: &CouplingOutcome) -> Value {
    match o {
        CouplingOutcome::Feasible(t) => json!({
            "feasible": true,
            "pairs": t.weights.len(),
            "row_residual": t.row_residual,
            "column_residual": t.column_residual,
        }),
        CouplingOutcome::Infeasible(e) => json!({
            "feasible": false,
            "increasing_event_generators": e.generators.iter().map(|&g| labels(d, g)).collect::<Vec<_>>(),
            "first_mass": e.first_mass,
            "second_mass": e.second_mass,
        }),
    }
}

pub fn validate(c: &Common, input: &KernelInput, out: &mut OutputDir) -> Result<Outcome> {
    let q = load(input, c.tol)?;
    let projection = ProjectionKernel::certify(q.clone()).ok();
    out.write_json(
        "validate.json",
        &json!({
            "fingerprint": q.kernel().fingerprint(),
            "dim": q.dim(),
            "labels": q.ground().labels(),
            "eigenvalues": q.eigenvalues(),
            "max_eigenvalue": q.max_eigenvalue(),
            "projection": projection.is_some(),
            "rank": projection.map(|p| p.rank()),
        }),
    )?;
    Ok(Outcome::Success)
}

pub fn enumerate(c: &Common, input: &KernelInput, out: &mut OutputDir) -> Result<Outcome> {
    let q = load(input, c.tol)?;
    let d = full_distribution_capped(&q, enumeration_cap(c)?)?;
    out.write_with("distribution.csv", |w| write_distribution(w, &d))?;
    Ok(Outcome::Success)
}

pub fn sample(c: &Common, input: &KernelInput, out: &mut OutputDir) -> Result<Outcome> {
    let q = load(input, c.tol)?;
    let trials = c.trials.unwrap_or(10_000);
    let samples: Vec<Vec<usize>> = match ProjectionKernel::certify(q.clone()) {
        Ok(p) => {
            let s = ProjectionSampler::new(&p);
            (0..trials).into_par_iter().map(|t| s.sample(&mut task_rng(c.seed, t))).collect::<Result<_, _>>()?
        }
        Err(_) => {
            let s = ContractionSampler::new(&q);
            (0..trials).into_par_iter().map(|t| s.sample(&mut task_rng(c.seed, t))).collect::<Result<_, _>>()?
        }
    };
    let fp = q.kernel().fingerprint();
    out.write_with("samples.txt", |w| write_samples(w, q.ground(), &fp, c.seed, &samples))?;
    Ok(Outcome::Success)
}

pub fn ust(c: &Common, graph: &Path, out: &mut OutputDir) -> Result<Outcome> {
    let g = parse_graph(graph).with_context(|| format!("reading graph {}", graph.display()))?;
    let trials = c.trials.unwrap_or(10_000);
    let sampler = UstSampler::new(&g)?;
    let trees: Vec<Vec<usize>> =
        (0..trials).into_par_iter().map(|t| sampler.sample(&mut task_rng(c.seed, t))).collect::<Result<_, _>>()?;
    let mut text = String::new();
    for t in &trees {
        text.push_str(&t.iter().map(usize::to_string).collect::<Vec<_>>().join(","));
        text.push('\n');
    }
    out.write("trees.txt", text.as_bytes())?;

    let mut counts = std::collections::BTreeMap::<Vec<usize>, u64>::new();
    for t in trees {
        *counts.entry(t).or_default() += 1;
    }
    let mut exact = std::collections::BTreeMap::<Vec<usize>, f64>::new();
    if g.num_edges() <= ENUMERATION_CAP {
        let all = enumerate_spanning_trees(&g)?;
        let total: f64 = all.iter().map(|t| t.1).sum();
        for (mask, w) in all {
            exact.insert(detpro_core::dpm::mask_to_indices(mask), w / total);
        }
    }
    let mut keys: Vec<&Vec<usize>> = counts.keys().chain(exact.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut csv = String::from("tree,count,frequency,probability\n");
    for k in keys {
        let n = counts.get(k).copied().unwrap_or(0);
        let p = exact.get(k).map_or(String::new(), |p| format!("{p:.16e}"));
        let tree = k.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        csv.push_str(&format!("{tree},{n},{:.16e},{p}\n", n as f64 / trials.max(1) as f64));
    }
    out.write("frequencies.csv", csv.as_bytes())?;
    let y = transfer_current_kernel(&g)?;
    let diag: Vec<f64> = (0..g.num_edges()).map(|e| y.matrix()[(e, e)].re).collect();
    out.write_json(
        "ust.json",
        &json!({
            "vertices": g.num_vertices(),
            "edges": g.num_edges(),
            "trials": trials,
            "spanning_tree_count": spanning_tree_count(&g)?,
            "transfer_current_diagonal": diag,
            "distinct_trees_observed": counts.len(),
        }),
    )?;
    Ok(Outcome::Success)
}

pub fn ope(c: &Common, input: &FamilyInput, bins: usize, out: &mut OutputDir) -> Result<Outcome> {
    let fam = family(input)?;
    let trials = c.trials.unwrap_or(1000) as usize;
    let configs = OpeSampler::new(fam).sample_many(trials, c.seed)?;
    out.write_with("ope_samples.csv", |w| write_ope_samples(w, &configs))?;
    let mut max_err: f64 = 0.0;
    let mut failures = 0usize;
    for cfg in &configs {
        let r = joint_density_check(&fam, &cfg.points)?;
        max_err = max_err.max(r.relative_difference);
        failures += usize::from(!r.passed);
    }
    let proposals: u64 = configs.iter().map(|c| c.proposals).sum();
    let rejections: u64 = configs.iter().map(|c| c.rejections).sum();
    let mut summary = json!({
        "family": fam.kind.name(),
        "n": fam.n,
        "trials": trials,
        "proposals": proposals,
        "rejections": rejections,
        "acceptance_rate": if proposals > 0 { (proposals - rejections) as f64 / proposals as f64 } else { 1.0 },
        "max_density_relative_error": max_err,
        "density_failures": failures,
    });
    if trials >= detpro_core::ope::MIN_INTENSITY_SAMPLES {
        let r = empirical_intensity(&fam, &configs, bins)?;
        out.write_with("intensity.csv", |w| r.write_csv(w))?;
        summary["intensity_max_abs_z"] = json!(r.max_abs_z);
    }
    out.write_json("ope.json", &summary)?;
    Ok(Outcome::Success)
}

pub fn check_sr(c: &Common, input: &KernelInput, out: &mut OutputDir) -> Result<Outcome> {
    let q = load(input, c.tol)?;
    let probes = c.trials.unwrap_or(1000) as usize;
    let r = strongly_rayleigh_slack(&q, probes, &mut task_rng(c.seed, 0))?;
    out.write_json(
        "sr.json",
        &json!({
            "fingerprint": q.kernel().fingerprint(),
            "probes": r.probes,
            "pairs": r.pairs,
            "min_slack": r.min_slack,
            "argmin": r.argmin.as_ref().map(|(x, e, f)| json!({"point": x, "pair": [e, f]})),
            "passed": r.passed,
        }),
    )?;
    Ok(if r.passed {
        Outcome::Success
    } else {
        Outcome::Negative(format!("strongly Rayleigh slack {} below tolerance", r.min_slack))
    })
}

/// Every nonempty proper split whose sides fit the upset enumeration, one
/// representative per unordered pair.
pub fn admissible_splits(n: usize) -> Vec<Vec<usize>> {
    let full = (1u32 << n) - 1;
    (1..full)
        .filter(|&m| m & 1 == 1 || n == 1)
        .filter(|&m| (m.count_ones() as usize) <= MAX_BLOCK && ((full ^ m).count_ones() as usize) <= MAX_BLOCK)
        .map(detpro_core::dpm::mask_to_indices)
        .collect()
}

pub fn check_na(
    c: &Common,
    kernel: Option<&Path>,
    labels_path: Option<&Path>,
    graph: Option<&Path>,
    split: Option<&[usize]>,
    out: &mut OutputDir,
) -> Result<Outcome> {
    let d = match (kernel, graph) {
        (Some(k), None) => full_distribution_capped(&load_kernel(k, labels_path, c.tol)?, enumeration_cap(c)?)?,
        (None, Some(g)) => detpro_core::graph::ust_distribution(&parse_graph(g)?)?,
        _ => bail!("give exactly one of --kernel or --graph"),
    };
    let n = d.ground().len();
    let splits = match split {
        Some(s) => vec![s.to_vec()],
        None => admissible_splits(n),
    };
    let mut rows = Vec::new();
    let mut failed = 0;
    for s in &splits {
        let r = negative_association_check(&d, s)?;
        failed += usize::from(!r.passed);
        rows.push(json!({"split": s, "pairs": r.pairs, "max_violation": r.max_violation, "passed": r.passed}));
    }
    out.write_json("na.json", &json!({ "elements": n, "splits": rows, "failed_splits": failed }))?;
    Ok(if failed == 0 {
        Outcome::Success
    } else {
        Outcome::Negative(format!("negative association fails on {failed} split(s)"))
    })
}

pub fn coupling(c: &Common, k1: &Path, k2: &Path, labels_path: Option<&Path>, out: &mut OutputDir) -> Result<Outcome> {
    let cap = enumeration_cap(c)?;
    let d1 = full_distribution_capped(&load_kernel(k1, labels_path, c.tol)?, cap)?;
    let d2 = full_distribution_capped(&load_kernel(k2, labels_path, c.tol)?, cap)?;
    ensure!(d1.ground() == d2.ground(), "kernels live on different ground sets");
    let o = monotone_coupling(&d1, &d2)?;
    if let CouplingOutcome::Feasible(t) = &o {
        out.write("coupling.csv", &table_csv(&d1, t))?;
    }
    out.write_json("coupling.json", &coupling_json(&d1, &o))?;
    Ok(if o.is_feasible() {
        Outcome::Success
    } else {
        Outcome::Negative("no monotone coupling: the first law is not dominated by the second".into())
    })
}

pub fn scan_entropy(c: &Common, dim: usize, batch: u64, out: &mut OutputDir) -> Result<Outcome> {
    let trials = c.trials.unwrap_or(10_000);
    let batch = batch.max(1);
    let mut lines = String::new();
    let mut found = 0;
    let mut overall = f64::INFINITY;
    let mut first = 0;
    while first < trials {
        let count = batch.min(trials - first);
        let r = entropy_concavity_scan(dim, first, count, c.seed)?;
        overall = overall.min(r.min_margin);
        let path = match &r.counterexample {
            Some(ce) => {
                found += 1;
                let rel = format!("counterexamples/trial-{}", ce.trial);
                for p in ce.persist(&out.root().join(&rel), c.seed)? {
                    out.adopt(&p)?;
                }
                Value::String(rel)
            }
            None => Value::Null,
        };
        let line = json!({
            "seed": c.seed,
            "first_trial": first,
            "trials": count,
            "min_margin": r.min_margin,
            "counterexample_path": path,
        });
        lines.push_str(&serde_json::to_string(&line)?);
        lines.push('\n');
        first += count;
    }
    out.write("scan.jsonl", lines.as_bytes())?;
    Ok(if found == 0 {
        Outcome::Success
    } else {
        Outcome::Negative(format!("{found} concavity counterexample(s); minimum margin {overall:e}"))
    })
}

fn union_json(o: &UnionOutcome) -> Value {
    match o {
        UnionOutcome::Feasible { table, union_residual, exact } => json!({
            "feasible": true,
            "exact": exact,
            "pairs": table.weights.len(),
            "row_residual": table.row_residual,
            "column_residual": table.column_residual,
            "union_residual": union_residual,
        }),
        UnionOutcome::Infeasible(f) => json!({
            "feasible": false,
            "exact": f.exact,
            "farkas_value": f.value,
            "farkas_max_column": f.max_column,
            "farkas_rows": f.rows.iter().map(|(b, m, y)| json!([format!("{b:?}"), m, y])).collect::<Vec<_>>(),
        }),
    }
}

fn load_projection(path: &Path, tol: f64) -> Result<ProjectionKernel> {
    Ok(ProjectionKernel::certify(load_kernel(path, None, tol)?)?)
}

pub fn union_coupling(
    c: &Common,
    kernels: Option<(&Path, &Path)>,
    random: Option<(usize, &[usize])>,
    out: &mut OutputDir,
) -> Result<Outcome> {
    let mut infeasible = 0;
    match (kernels, random) {
        (Some((k1, k2)), None) => {
            let (h1, h2) = (load_projection(k1, c.tol)?, load_projection(k2, c.tol)?);
            let o = union_coupling_search(&h1, &h2)?;
            if let UnionOutcome::Feasible { table, .. } = &o {
                let d = full_distribution_capped(h1.as_ref(), ENUMERATION_CAP)?;
                out.write("union_coupling.csv", &table_csv(&d, table))?;
            }
            infeasible += usize::from(!o.is_feasible());
            out.write_json("union.json", &union_json(&o))?;
        }
        (None, Some((dim, ranks))) => {
            ensure!(ranks.len() == 2, "--ranks takes two values r1,r2");
            ensure!(ranks[0] + ranks[1] <= dim, "ranks exceed the dimension");
            let trials = c.trials.unwrap_or(100);
            let results: Vec<Value> = (0..trials)
                .into_par_iter()
                .map(|t| -> detpro_core::Result<Value> {
                    let (h1, h2) = random_orthogonal_pair(dim, ranks[0], ranks[1], &mut task_rng(c.seed, t));
                    let mut v = union_json(&union_coupling_search(&h1, &h2)?);
                    v["trial"] = json!(t);
                    Ok(v)
                })
                .collect::<detpro_core::Result<_>>()?;
            let mut lines = String::new();
            for v in &results {
                infeasible += usize::from(v["feasible"] == json!(false));
                lines.push_str(&serde_json::to_string(v)?);
                lines.push('\n');
            }
            out.write("union.jsonl", lines.as_bytes())?;
        }
        _ => bail!("give --kernel1/--kernel2 or --dim/--ranks"),
    }
    Ok(if infeasible == 0 {
        Outcome::Success
    } else {
        Outcome::Negative(format!("{infeasible} instance(s) without a union coupling"))
    })
}

pub fn gm_check(symbol: &[f64], out: &mut OutputDir) -> Result<Outcome> {
    let s = CirculantSymbol::new(symbol.to_vec())?;
    let r = gm_domination_check(&s)?;
    let law = detpro_core::full_distribution(&s.kernel()?)?;
    out.write_json(
        "gm.json",
        &json!({
            "group": format!("Z_{}", r.group_size),
            "note": "cyclic surrogate of the integer-lattice statement",
            "symbol": s.values(),
            "lower_density": r.lower,
            "upper_density": r.upper,
            "dominates_lower_product": coupling_json(&law, &r.dominates_lower),
            "dominated_by_upper_product": coupling_json(&law, &r.dominated_by_upper),
        }),
    )?;
    Ok(if r.both_feasible() {
        Outcome::Success
    } else {
        Outcome::Negative("geometric-mean sandwich fails on the cyclic group".into())
    })
}

pub fn discretize(c: &Common, input: &FamilyInput, edges: &[f64], out: &mut OutputDir) -> Result<Outcome> {
    let fam = family(input)?;
    ensure!(edges.len() >= 2, "--cells needs at least two boundaries");
    let cells: Vec<Region> = edges.windows(2).map(|w| Region::new(w[0], w[1])).collect::<Result<_, _>>()?;
    let d = discretize_counts(&fam, &cells)?;
    let kernel_path = out.root().join("discrete.kernel");
    write_kernel(&kernel_path, d.kernel.kernel())?;
    out.adopt(&kernel_path)?;
    let labels_path = out.root().join("discrete.labels");
    write_labels(&labels_path, d.kernel.ground())?;
    out.adopt(&labels_path)?;
    let law = d.count_law(enumeration_cap(c)?)?;
    let mut csv = String::from("counts,probability\n");
    for (k, p) in &law {
        csv.push_str(&format!("{},{p:.16e}\n", k.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")));
    }
    out.write("count_law.csv", csv.as_bytes())?;
    let mut summary = json!({
        "family": fam.kind.name(),
        "n": fam.n,
        "cells": edges,
        "ground_size": d.kernel.dim(),
        "gram_error": d.gram_error(),
    });
    if let Some(trials) = c.trials.filter(|&t| t > 0) {
        let samples = OpeSampler::new(fam).sample_many(trials as usize, c.seed)?;
        let emp = empirical_count_law(&fam, &cells, &samples);
        summary["monte_carlo_trials"] = json!(trials);
        summary["total_variation"] = json!(count_law_distance(&law, &emp));
    }
    out.write_json("discretize.json", &summary)?;
    Ok(Outcome::Success)
}
