//! Acceptance suite. Runs every criterion, prints one line each, and fails
//! if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use detpro_core::dpm::{completeness_check, count_distribution, mask_to_indices};
use detpro_core::graph::{connected_graphs, spanning_tree_count, transfer_current_kernel, ust_distribution, Graph, UstSampler};
use detpro_core::lab::{
    monotone_coupling, negative_association_check, strongly_rayleigh_slack, union_coupling_search,
};
use detpro_core::linalg::{det, submatrix};
use detpro_core::ope::{
    count_law_distance, discretize_counts, empirical_count_law, empirical_intensity, joint_density_check, OpeFamily,
    OpeKind, OpeSampler, Region,
};
use detpro_core::random::{
    random_contraction, random_nested_projections, random_ordered_pair, random_orthogonal_pair, random_projection,
};
use detpro_core::rng::{rng_from_seed, task_rng};
use detpro_core::{full_distribution, C64, ContractionKernel, ContractionSampler, ProjectionSampler, SubsetDistribution};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_detpro"))
}

fn detpro(out: &Path, args: &[&str]) -> (i32, String) {
    let o = Command::new(bin()).args(args).arg("--out").arg(out).output().expect("spawn detpro");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stderr).into_owned())
}

/// `P(𝔄 = A) = Σ_{B ⊇ A} (-1)^{|B \ A|} det Q_B`.
fn inclusion_exclusion(q: &ContractionKernel) -> Vec<f64> {
    let n = q.dim();
    let m = q.matrix();
    let minors: Vec<f64> = (0..1u32 << n)
        .map(|b| if b == 0 { 1.0 } else { det(&submatrix(m, &mask_to_indices(b))).re })
        .collect();
    (0..1u32 << n)
        .map(|a| {
            (0..1u32 << n)
                .filter(|b| b & a == a)
                .map(|b| if (b ^ a).count_ones() % 2 == 0 { minors[b as usize] } else { -minors[b as usize] })
                .sum()
        })
        .collect()
}

/// `P(𝔄 = A) = det(I - Q) det(J_A)` with `J = Q (I - Q)^{-1}`, computed with
/// nalgebra's own LU.
fn jform(q: &ContractionKernel) -> Vec<f64> {
    let n = q.dim();
    let m: DMatrix<C64> = q.matrix().clone();
    let id = DMatrix::<C64>::identity(n, n);
    let comp = &id - &m;
    let j = &m * comp.clone().try_inverse().expect("I - Q invertible");
    let base = comp.determinant().re;
    (0..1u32 << n)
        .map(|a| {
            let idx = mask_to_indices(a);
            let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| j[(idx[r], idx[c])]);
            base * if idx.is_empty() { 1.0 } else { sub.determinant().re }
        })
        .collect()
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = rng_from_seed(101);
    let (mut worst_ie, mut worst_j, mut jcount) = (0.0f64, 0.0f64, 0);
    for _ in 0..100 {
        let q = random_contraction(4, &mut rng);
        let d = full_distribution(&q).map_err(|e| e.to_string())?;
        let ie = inclusion_exclusion(&q);
        for (a, b) in d.probs().iter().zip(&ie) {
            worst_ie = worst_ie.max((a - b).abs());
        }
        if q.max_eigenvalue() < 1.0 - 1e-6 {
            jcount += 1;
            for (a, b) in d.probs().iter().zip(&jform(&q)) {
                worst_j = worst_j.max((a - b).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst_ie <= 1e-9, || format!("inclusion-exclusion gap {worst_ie:e}"))?;
    ensure(worst_j <= 1e-9, || format!("J-form gap {worst_j:e}"))?;
    ensure(secs < 10.0, || format!("took {secs:.1}s"))?;
    Ok(format!("max gaps {worst_ie:.1e} (minors), {worst_j:.1e} (J-form, {jcount} kernels), {secs:.2}s"))
}

fn empirical(n: usize, samples: impl Iterator<Item = Vec<usize>>) -> Vec<f64> {
    let mut counts = vec![0.0; 1 << n];
    let mut total = 0.0;
    for s in samples {
        counts[s.iter().map(|&i| 1usize << i).sum::<usize>()] += 1.0;
        total += 1.0;
    }
    counts.iter().map(|c| c / total).collect()
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let draws = 100_000u64;
    let mut worst: f64 = 0.0;
    for k in 0..20u64 {
        let mut rng = rng_from_seed(200 + k);
        let rank = rng.random_range(1..=3);
        let p = random_projection(4, rank, &mut rng);
        let exact = full_distribution(p.as_ref()).map_err(|e| e.to_string())?;
        let s = ProjectionSampler::new(&p);
        let emp = empirical(4, (0..draws).map(|t| s.sample(&mut task_rng(k, t)).unwrap()));
        worst = worst.max(tv(&emp, exact.probs()));

        let q = random_contraction(4, &mut rng);
        let exact = full_distribution(&q).map_err(|e| e.to_string())?;
        let s = ContractionSampler::new(&q);
        let emp = empirical(4, (0..draws).map(|t| s.sample(&mut task_rng(1000 + k, t)).unwrap()));
        worst = worst.max(tv(&emp, exact.probs()));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst < 0.01, || format!("TV {worst}"))?;
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("max TV {worst:.4} over 40 kernels, {secs:.1}s"))
}

fn criterion_3() -> Check {
    let q = random_contraction(6, &mut rng_from_seed(300));
    let exact = count_distribution(&q);
    let s = ContractionSampler::new(&q);
    let draws = 100_000u64;
    let mut hist = [0.0; 7];
    for t in 0..draws {
        hist[s.sample(&mut task_rng(301, t)).unwrap().len()] += 1.0;
    }
    // Pool sparse cells so every expected count is at least 5; a short tail
    // joins the last full cell.
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut open = (0.0, 0.0);
    for (&o, &p) in hist.iter().zip(&exact.probs) {
        open = (open.0 + o, open.1 + p * draws as f64);
        if open.1 >= 5.0 {
            pooled.push(open);
            open = (0.0, 0.0);
        }
    }
    match pooled.last_mut() {
        Some(last) => *last = (last.0 + open.0, last.1 + open.1),
        None => pooled.push(open),
    }
    let cells = pooled.len();
    let stat: f64 = pooled.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let p = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat);
    ensure(p > 0.001, || format!("chi2 {stat:.2} on {} dof, p = {p:.2e}", cells - 1))?;
    Ok(format!("chi2 {stat:.2} on {} dof, p = {p:.3}", cells - 1))
}

fn criterion_4() -> Check {
    let mut notes = Vec::new();
    for (n, trees, diag, seed) in [(3usize, 3usize, 2.0 / 3.0, 400u64), (4, 16, 0.5, 401)] {
        let g = Graph::complete(n);
        let count = spanning_tree_count(&g).map_err(|e| e.to_string())?;
        ensure(count == trees as f64, || format!("K{n}: {count} trees"))?;
        let y = transfer_current_kernel(&g).map_err(|e| e.to_string())?;
        for e in 0..g.num_edges() {
            let v = y.matrix()[(e, e)].re;
            ensure((v - diag).abs() < 1e-10, || format!("K{n}: Y({e},{e}) = {v}"))?;
        }
        let s = UstSampler::new(&g).map_err(|e| e.to_string())?;
        let draws = 100_000u64;
        let mut freq = std::collections::BTreeMap::<Vec<usize>, f64>::new();
        for t in 0..draws {
            *freq.entry(s.sample(&mut task_rng(seed, t)).unwrap()).or_default() += 1.0;
        }
        ensure(freq.len() == trees, || format!("K{n}: {} distinct trees", freq.len()))?;
        let p = 1.0 / trees as f64;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        let worst = freq.values().map(|c| ((c / draws as f64 - p) / sigma).abs()).fold(0.0, f64::max);
        ensure(worst <= 3.0, || format!("K{n}: {worst:.2} sigma"))?;
        notes.push(format!("K{n} max {worst:.2}σ"));
    }
    Ok(notes.join(", "))
}

fn all_splits(n: usize) -> Vec<Vec<usize>> {
    detpro_cli::admissible_splits(n)
}

fn criterion_5() -> Check {
    let mut rng = rng_from_seed(500);
    let mut checks = 0usize;
    let mut worst = f64::NEG_INFINITY;
    let mut run = |d: &SubsetDistribution| -> Result<(), String> {
        for s in all_splits(d.ground().len()) {
            let r = negative_association_check(d, &s).map_err(|e| e.to_string())?;
            worst = worst.max(r.max_violation);
            checks += 1;
            ensure(r.passed, || format!("violation {:e} on split {s:?}", r.max_violation))?;
        }
        Ok(())
    };
    for k in 0..50 {
        let q = random_contraction(2 + k % 4, &mut rng);
        run(&full_distribution(&q).map_err(|e| e.to_string())?)?;
    }
    let mut graphs = 0;
    for n in 2..=6 {
        for g in connected_graphs(n, 5) {
            graphs += 1;
            run(&ust_distribution(&g).map_err(|e| e.to_string())?)?;
        }
    }
    Ok(format!("{checks} split checks over 50 kernels and {graphs} graphs, max covariance {worst:.1e}"))
}

fn criterion_6() -> Check {
    let mut rng = rng_from_seed(600);
    let mut worst = f64::INFINITY;
    for k in 0..50 {
        let q = random_contraction(2 + k % 4, &mut rng);
        let r = strongly_rayleigh_slack(&q, 1000, &mut rng).map_err(|e| e.to_string())?;
        worst = worst.min(r.min_slack);
        ensure(r.passed, || format!("slack {:e}", r.min_slack))?;
    }
    Ok(format!("min slack {worst:.2e} over 50 kernels"))
}

fn criterion_7() -> Check {
    let mut rng = rng_from_seed(700);
    for t in 0..1000 {
        let (q1, q2) = random_ordered_pair(4, &mut rng);
        let o = monotone_coupling(&full_distribution(&q1).unwrap(), &full_distribution(&q2).unwrap())
            .map_err(|e| e.to_string())?;
        ensure(o.is_feasible(), || format!("ordered pair {t} infeasible: {o:?}"))?;
        let r1 = rng.random_range(0..=4);
        let r2 = rng.random_range(r1..=4);
        let (h1, h2) = random_nested_projections(4, r1, r2, &mut rng);
        let o = monotone_coupling(&full_distribution(h1.as_ref()).unwrap(), &full_distribution(h2.as_ref()).unwrap())
            .map_err(|e| e.to_string())?;
        ensure(o.is_feasible(), || format!("nested pair {t} ({r1},{r2}) infeasible: {o:?}"))?;
    }
    Ok("1000 ordered pairs and 1000 nested projection pairs feasible".into())
}

fn criterion_8() -> Check {
    let mut worst: f64 = 0.0;
    for kind in [OpeKind::Cue, OpeKind::Gue, OpeKind::Ginibre, OpeKind::Disk] {
        for n in [2, 3, 5] {
            let f = OpeFamily::new(kind, n).unwrap();
            let configs = OpeSampler::new(f).sample_many(1000, 800 + n as u64).map_err(|e| e.to_string())?;
            for c in &configs {
                let r = joint_density_check(&f, &c.points).map_err(|e| e.to_string())?;
                worst = worst.max(r.relative_difference);
                ensure(r.relative_difference < 1e-8, || format!("{kind} n={n}: {r:?}"))?;
            }
        }
    }
    Ok(format!("max relative error {worst:.1e} over 12000 configurations"))
}

fn criterion_9() -> Check {
    let cue = OpeFamily::new(OpeKind::Cue, 8).unwrap();
    let samples = OpeSampler::new(cue).sample_many(10_000, 900).map_err(|e| e.to_string())?;
    let r = empirical_intensity(&cue, &samples, 32).map_err(|e| e.to_string())?;
    ensure(r.max_abs_z <= 4.0, || format!("CUE max |z| {}", r.max_abs_z))?;
    for n in [1, 4, 9] {
        let gue = OpeFamily::new(OpeKind::Gue, n).unwrap();
        for c in OpeSampler::new(gue).sample_many(1000, 901).map_err(|e| e.to_string())? {
            ensure(c.points.len() == n, || format!("GUE n={n}: {} points", c.points.len()))?;
        }
    }
    Ok(format!("CUE max |z| {:.2} over 32 bins; GUE counts exact", r.max_abs_z))
}

fn criterion_10() -> Check {
    let f = OpeFamily::new(OpeKind::Cue, 2).unwrap();
    let cells = [Region::new(0.0, 0.5).unwrap(), Region::new(0.5, 1.0).unwrap()];
    let d = discretize_counts(&f, &cells).map_err(|e| e.to_string())?;
    let exact = d.count_law(16).map_err(|e| e.to_string())?;
    let samples = OpeSampler::new(f).sample_many(100_000, 1000).map_err(|e| e.to_string())?;
    let dist = count_law_distance(&exact, &empirical_count_law(&f, &cells, &samples));
    ensure(dist < 0.02, || format!("TV {dist}"))?;
    Ok(format!("TV {dist:.4}, Gram error {:.1e}", d.gram_error()))
}

fn criterion_11() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let (code, err) = detpro(dir.path(), &["scan-entropy", "--dim", "4", "--trials", "10000", "--seed", "11"]);
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 300.0, || format!("took {secs:.0}s"))?;
    let text = std::fs::read_to_string(dir.path().join("scan.jsonl")).map_err(|e| e.to_string())?;
    let mut min = f64::INFINITY;
    let mut paths = Vec::new();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        min = min.min(v["min_margin"].as_f64().ok_or("missing min_margin")?);
        if let Some(p) = v["counterexample_path"].as_str() {
            paths.push(p.to_string());
        }
    }
    match code {
        0 => ensure(min >= -1e-9 && paths.is_empty(), || format!("exit 0 with min margin {min:e}"))?,
        2 => {
            ensure(min < -1e-9 && !paths.is_empty(), || "exit 2 without a counterexample".into())?;
            for p in &paths {
                ensure(dir.path().join(p).join("counterexample.json").exists(), || format!("{p} not persisted"))?;
            }
        }
        _ => return Err(format!("exit {code}: {err}")),
    }
    Ok(format!("exit {code}, min margin {min:.3e}, {secs:.1}s"))
}

fn criterion_12() -> Check {
    let mut rng = rng_from_seed(1200);
    for t in 0..100 {
        let r1 = rng.random_range(0..=4);
        let (h1, h2) = random_orthogonal_pair(4, r1, 4 - r1, &mut rng);
        let o = union_coupling_search(&h1, &h2).map_err(|e| e.to_string())?;
        ensure(o.is_feasible(), || format!("complementary instance {t} (r1={r1}) infeasible"))?;
    }
    let mut general = (0, 0);
    for _ in 0..100 {
        let r1 = rng.random_range(1..=2);
        let r2 = rng.random_range(1..=3 - r1);
        let (h1, h2) = random_orthogonal_pair(4, r1, r2, &mut rng);
        let feasible = union_coupling_search(&h1, &h2).map_err(|e| e.to_string())?.is_feasible();
        general.0 += usize::from(feasible);
        general.1 += 1;
    }
    Ok(format!("100/100 complementary feasible; general orthogonal pairs {}/{} feasible", general.0, general.1))
}

fn criterion_13() -> Check {
    let mut rng = rng_from_seed(1300);
    let mut total = 0;
    for k in 0..100u64 {
        let rank = rng.random_range(1..=5);
        let p = random_projection(6, rank, &mut rng);
        let s = ProjectionSampler::new(&p);
        for t in 0..100 {
            let sample = s.sample(&mut task_rng(1300 + k, t)).map_err(|e| e.to_string())?;
            let ok = completeness_check(&p, &sample).map_err(|e| e.to_string())?;
            ensure(ok, || format!("kernel {k} sample {sample:?} fails the rank check"))?;
            total += 1;
        }
    }
    Ok(format!("{total} samples, 0 failures"))
}

fn criterion_14() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let kernel = dir.path().join("q.kernel");
    let q = random_contraction(5, &mut rng_from_seed(1400));
    detpro_core::io::write_kernel(&kernel, q.kernel()).unwrap();
    let graph = dir.path().join("k4.graph");
    let mut buf = Vec::new();
    detpro_core::io::write_graph(&mut buf, &Graph::complete(4)).unwrap();
    std::fs::write(&graph, buf).unwrap();
    let k = kernel.to_str().unwrap();
    let g = graph.to_str().unwrap();
    let runs: [(&[&str], &str); 3] = [
        (&["sample", "--kernel", k, "--trials", "5000", "--seed", "7"], "samples.txt"),
        (&["ust", "--graph", g, "--trials", "5000", "--seed", "7"], "trees.txt"),
        (&["ope", "--family", "ginibre", "--n", "5", "--trials", "300", "--seed", "7"], "ope_samples.csv"),
    ];
    for (i, (args, file)) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("run{i}-{rep}"));
            let (code, err) = detpro(&out, args);
            ensure(code == 0, || format!("{} exit {code}: {err}", args[0]))?;
            outputs.push(std::fs::read(out.join(file)).map_err(|e| e.to_string())?);
            let bad = detpro_cli::verify_manifest(&out).map_err(|e| e.to_string())?;
            ensure(bad.is_empty(), || format!("manifest digests differ for {bad:?}"))?;
        }
        ensure(outputs[0] == outputs[1], || format!("{} output differs between runs", args[0]))?;
    }
    // A reversed domination pair is a negative result: exit 2, not 1.
    let low = dir.path().join("low.kernel");
    let high = dir.path().join("high.kernel");
    detpro_core::io::write_kernel(&low, ContractionKernel::diagonal(&[0.3]).unwrap().kernel()).unwrap();
    detpro_core::io::write_kernel(&high, ContractionKernel::diagonal(&[0.6]).unwrap().kernel()).unwrap();
    let (code, _) = detpro(
        &dir.path().join("neg"),
        &["coupling", "--kernel1", high.to_str().unwrap(), "--kernel2", low.to_str().unwrap()],
    );
    ensure(code == 2, || format!("infeasible coupling exited {code}"))?;
    Ok("sample, ust and ope outputs byte-identical across runs; infeasible run exits 2".into())
}

fn main() {
    let criteria: [Criterion; 14] = [
        ("enumeration oracle equivalence", criterion_1),
        ("sampler law", criterion_2),
        ("binomial counts", criterion_3),
        ("spanning tree exactness", criterion_4),
        ("negative association", criterion_5),
        ("strongly Rayleigh", criterion_6),
        ("stochastic domination", criterion_7),
        ("ensemble density identity", criterion_8),
        ("ensemble intensity", criterion_9),
        ("transference", criterion_10),
        ("entropy concavity scan", criterion_11),
        ("union coupling", criterion_12),
        ("completeness", criterion_13),
        ("determinism", criterion_14),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("criterion {id:>2} PASS  {name}: {msg} [{secs:.1}s]"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {msg} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
