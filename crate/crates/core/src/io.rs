//! Text formats.
//!
//! Kernel files: first line `n`, then `n` lines of `n` whitespace-separated
//! complex entries written `a+bi`, each part with 17 significant digits so
//! that writing and re-reading reproduces every bit. An optional labels file
//! holds one label per line.
//!
//! Graph files: header `p graph <nV> <nE>`, then one line `e <tail> <head>
//! [conductance]` per edge with 1-based vertex ids. Lines starting with `c`
//! are comments.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::dpm::SubsetDistribution;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::kernel::{GroundSet, HermitianKernel};
use crate::linalg::{CMatrix, C64};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// `a+bi` with 17 significant digits per part.
pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{}{:.16e}i", z.re, sign, z.im.abs())
}

/// Accepts `a+bi`, `a-bi`, `a`, and `bi`.
pub fn parse_complex(s: &str) -> Option<C64> {
    let s = s.trim();
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().ok().map(|re| C64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().ok()?;
            let im = match &body[k..] {
                "+" => 1.0,
                "-" => -1.0,
                t => t.parse::<f64>().ok()?,
            };
            Some(C64::new(re, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                t => t.parse::<f64>().ok()?,
            };
            Some(C64::new(0.0, im))
        }
    }
}

pub fn write_matrix<W: Write>(mut w: W, m: &CMatrix) -> Result<()> {
    writeln!(w, "{}", m.nrows())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_complex(m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<CMatrix> {
    let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(l) if l.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let (no, header) = lines.next().ok_or_else(|| parse_err(1, "empty kernel file"))?;
    let header = header?;
    let n: usize = header.trim().parse().map_err(|_| parse_err(no, format!("bad dimension {header:?}")))?;
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        let (no, line) = lines.next().ok_or_else(|| parse_err(no + i + 1, format!("expected {n} rows")))?;
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != n {
            return Err(parse_err(no, format!("expected {n} entries, found {}", fields.len())));
        }
        for (j, f) in fields.iter().enumerate() {
            m[(i, j)] = parse_complex(f).ok_or_else(|| parse_err(no, format!("malformed complex literal {f:?}")))?;
        }
    }
    if let Some((no, _)) = lines.next() {
        return Err(parse_err(no, "trailing content after the last row"));
    }
    Ok(m)
}

pub fn read_labels<R: BufRead>(r: R) -> Result<Vec<String>> {
    let mut labels = Vec::new();
    for line in r.lines() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() {
            labels.push(t.to_string());
        }
    }
    Ok(labels)
}

/// Reads a kernel file, plus an optional labels file (default labels `1..=n`).
pub fn parse_kernel(path: &Path, labels: Option<&Path>, tol: f64) -> Result<HermitianKernel> {
    let m = read_matrix(BufReader::new(fs::File::open(path)?))?;
    let ground = match labels {
        Some(p) => GroundSet::new(read_labels(BufReader::new(fs::File::open(p)?))?)?,
        None => GroundSet::numbered(m.nrows()),
    };
    HermitianKernel::new(ground, m, tol)
}

pub fn write_kernel(path: &Path, kernel: &HermitianKernel) -> Result<()> {
    let mut buf = Vec::new();
    write_matrix(&mut buf, kernel.entries())?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn write_labels(path: &Path, ground: &GroundSet) -> Result<()> {
    fs::write(path, ground.labels().iter().map(|l| format!("{l}\n")).collect::<String>())?;
    Ok(())
}

pub fn read_graph<R: BufRead>(r: R) -> Result<Graph> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let no = i + 1;
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first().copied() {
            None | Some("c") => continue,
            Some("p") => {
                if fields.len() != 4 || fields[1] != "graph" || header.is_some() {
                    return Err(parse_err(no, "expected a single `p graph <nV> <nE>` header"));
                }
                let nv = fields[2].parse().map_err(|_| parse_err(no, "bad vertex count"))?;
                let ne = fields[3].parse().map_err(|_| parse_err(no, "bad edge count"))?;
                header = Some((nv, ne));
            }
            Some("e") => {
                let (nv, _) = header.ok_or_else(|| parse_err(no, "edge before header"))?;
                if !(3..=4).contains(&fields.len()) {
                    return Err(parse_err(no, "expected `e <tail> <head> [conductance]`"));
                }
                let vertex = |s: &str| -> Result<usize> {
                    let v: usize = s.parse().map_err(|_| parse_err(no, format!("bad vertex {s:?}")))?;
                    if v == 0 || v > nv {
                        return Err(parse_err(no, format!("vertex {v} outside 1..={nv}")));
                    }
                    Ok(v - 1)
                };
                let tail = vertex(fields[1])?;
                let head = vertex(fields[2])?;
                if tail == head {
                    return Err(parse_err(no, "self-loop"));
                }
                let conductance = match fields.get(3) {
                    Some(s) => s.parse().map_err(|_| parse_err(no, format!("bad conductance {s:?}")))?,
                    None => 1.0,
                };
                edges.push(Edge { tail, head, conductance });
            }
            Some(other) => return Err(parse_err(no, format!("unknown line type {other:?}"))),
        }
    }
    let (nv, ne) = header.ok_or_else(|| parse_err(1, "missing header"))?;
    if edges.len() != ne {
        return Err(parse_err(0, format!("header declares {ne} edges, found {}", edges.len())));
    }
    Graph::new((1..=nv).map(|i| i.to_string()).collect(), edges)
}

pub fn write_graph<W: Write>(mut w: W, g: &Graph) -> Result<()> {
    writeln!(w, "p graph {} {}", g.num_vertices(), g.num_edges())?;
    for e in g.edges() {
        if e.conductance == 1.0 {
            writeln!(w, "e {} {}", e.tail + 1, e.head + 1)?;
        } else {
            writeln!(w, "e {} {} {:.16e}", e.tail + 1, e.head + 1, e.conductance)?;
        }
    }
    Ok(())
}

pub fn parse_graph(path: &Path) -> Result<Graph> {
    read_graph(BufReader::new(fs::File::open(path)?))
}

/// CSV with columns `subset_bitmask,labels,probability`; labels are
/// space-separated in ground-set order.
pub fn write_distribution<W: Write>(mut w: W, d: &SubsetDistribution) -> Result<()> {
    writeln!(w, "subset_bitmask,labels,probability")?;
    for (mask, p) in d.probs().iter().enumerate() {
        writeln!(w, "{},{},{:.16e}", mask, d.labels_of(mask as u32).join(" "), p)?;
    }
    Ok(())
}

/// One sample per line as comma-separated labels in ground-set order, after
/// a `# fingerprint=<hex> seed=<u64>` header.
pub fn write_samples<W: Write>(mut w: W, ground: &GroundSet, fingerprint: &str, seed: u64, samples: &[Vec<usize>]) -> Result<()> {
    writeln!(w, "# fingerprint={fingerprint} seed={seed}")?;
    for s in samples {
        let labels: Vec<&str> = s.iter().map(|&i| ground.label(i)).collect();
        writeln!(w, "{}", labels.join(","))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleDump {
    pub fingerprint: String,
    pub seed: u64,
    pub samples: Vec<Vec<String>>,
}

pub fn read_samples<R: BufRead>(r: R) -> Result<SampleDump> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty sample file"))??;
    let rest = header.strip_prefix("# ").ok_or_else(|| parse_err(1, "missing header"))?;
    let (mut fingerprint, mut seed) = (None, None);
    for kv in rest.split_whitespace() {
        match kv.split_once('=') {
            Some(("fingerprint", v)) => fingerprint = Some(v.to_string()),
            Some(("seed", v)) => seed = Some(v.parse().map_err(|_| parse_err(1, "bad seed"))?),
            _ => return Err(parse_err(1, format!("unexpected header field {kv:?}"))),
        }
    }
    let samples = lines
        .map(|l| l.map(|l| if l.is_empty() { Vec::new() } else { l.split(',').map(str::to_string).collect() }))
        .collect::<std::io::Result<_>>()?;
    Ok(SampleDump {
        fingerprint: fingerprint.ok_or_else(|| parse_err(1, "missing fingerprint"))?,
        seed: seed.ok_or_else(|| parse_err(1, "missing seed"))?,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_contraction;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    #[test]
    fn one_by_one_kernel() {
        let m = read_matrix("1\n0.5+0i\n".as_bytes()).unwrap();
        assert_eq!(m[(0, 0)], C64::new(0.5, 0.0));
    }

    #[test]
    fn malformed_literal_reports_line() {
        match read_matrix("1\n0.5+xi\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1-2i"), Some(C64::new(1.0, -2.0)));
        assert_eq!(parse_complex("1e-3+2.5e+1i"), Some(C64::new(1e-3, 25.0)));
        assert_eq!(parse_complex("-i"), Some(C64::new(0.0, -1.0)));
        assert_eq!(parse_complex("3"), Some(C64::new(3.0, 0.0)));
        assert_eq!(parse_complex("abc"), None);
    }

    #[test]
    fn random_kernel_round_trip() {
        let q = random_contraction(5, &mut rng_from_seed(1));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.txt");
        write_kernel(&path, q.kernel()).unwrap();
        let back = parse_kernel(&path, None, 1e-14).unwrap();
        assert_eq!(back.entries(), q.kernel().entries());
    }

    proptest! {
        #[test]
        fn complex_format_is_bit_exact(re in any::<f64>(), im in any::<f64>()) {
            prop_assume!(re.is_finite() && im.is_finite());
            let z = parse_complex(&format_complex(C64::new(re, im))).unwrap();
            prop_assert_eq!(z.re.to_bits(), re.to_bits());
            prop_assert_eq!(z.im.to_bits(), im.to_bits());
        }
    }

    #[test]
    fn graph_round_trip() {
        let text = "c triangle\np graph 3 3\ne 1 2\ne 2 3 2.5\ne 3 1\n";
        let g = read_graph(text.as_bytes()).unwrap();
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.edges()[1].conductance, 2.5);
        let mut out = Vec::new();
        write_graph(&mut out, &g).unwrap();
        let h = read_graph(out.as_slice()).unwrap();
        assert_eq!(g.edges(), h.edges());
        assert!(matches!(read_graph("p graph 2 1\ne 1 1\n".as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn samples_round_trip() {
        let g = GroundSet::new(["a", "b", "c"]).unwrap();
        let mut out = Vec::new();
        write_samples(&mut out, &g, "ff", 9, &[vec![0, 2], vec![]]).unwrap();
        let d = read_samples(out.as_slice()).unwrap();
        assert_eq!(d.seed, 9);
        assert_eq!(d.samples, vec![vec!["a".to_string(), "c".to_string()], vec![]]);
    }
}
