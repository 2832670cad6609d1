use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use cq_core::cubature::{self, dim_poly, reduce_sequence};
use cq_core::genz::{convergence_study, method_rule, rule_ladder, GenzFamily, Method};
use cq_core::io::{full_precision, study_csv, Payload, RuleFile};
use cq_core::{
    clenshaw_curtis_rule, gauss_rule, reduction_step, tensor_rule, smolyak_rule, ClenshawCurtisFamily,
    CubatureRule, Distribution, GaussFamily, NestedFamily, QuadratureRule, ReductionCriterion,
    ReductionMode, RuleFamily,
};
use rayon::prelude::*;
use serde_json::Value;

use crate::output::{self, emit, metadata, table, usage, write_text, Format};
use crate::{BenchmarkArgs, ConditionArgs, CountsArgs, QuadArgs, QuadKind, ReduceArgs, SmolyakArgs};

fn parse_dist(spec: &str) -> anyhow::Result<Distribution> {
    spec.parse::<Distribution>()
        .with_context(|| format!("--dist {spec}"))
}

fn with_metadata(mut file: RuleFile, invocation: &str) -> RuleFile {
    file.metadata.extend(metadata(invocation));
    file
}

fn weight_range(weights: &[f64]) -> (f64, f64) {
    weights
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &w| (lo.min(w), hi.max(w)))
}

pub fn quad(a: &QuadArgs, invocation: &str) -> anyhow::Result<()> {
    let dist = parse_dist(&a.dist)?;
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let rule = match a.kind {
        QuadKind::Gauss => gauss_rule(&dist, a.n)?,
        QuadKind::Cc => clenshaw_curtis_rule(&dist, a.n)?,
    };
    let file = match a.dim {
        0 => return Err(usage("--dim must be at least 1")),
        1 => RuleFile::quadrature(rule),
        d => RuleFile::cubature(tensor_rule(&vec![rule; d])?),
    };
    let file = with_metadata(file, invocation)
        .with_meta("distribution", dist.to_string())
        .with_meta("kind", format!("{:?}", a.kind).to_lowercase())
        .with_meta("n", a.n)
        .with_meta("dim", a.dim);
    emit(&file, a.output.out.as_deref(), a.output.format)
}

fn member_path(dir: &Path, prefix: &str, tag: &str, format: Format) -> PathBuf {
    dir.join(format!("{prefix}_{tag}.{}", format.extension()))
}

pub fn reduce(a: &ReduceArgs, invocation: &str) -> anyhow::Result<()> {
    let mode: ReductionMode = a.mode.parse()?;
    let criterion: ReductionCriterion = a.criterion.parse()?;
    let input = RuleFile::load(&a.input)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let base = |step: usize| {
        let mut m = metadata(invocation);
        m.insert("mode".into(), Value::from(mode.to_string()));
        m.insert("criterion".into(), Value::from(criterion.to_string()));
        m.insert("source".into(), Value::from(a.input.display().to_string()));
        m.insert("step".into(), Value::from(step));
        m
    };
    match input.payload {
        Payload::Quadrature(rule) => {
            let members = reduce_1d(&rule, mode, criterion, a.target_size, a.target_degree)?;
            for (step, r) in members.iter().enumerate() {
                let mut file = RuleFile::quadrature(r.clone());
                file.metadata = base(step);
                let path = member_path(&a.out_dir, &a.prefix, &format!("n{}", r.len()), a.format);
                write_text(Some(&path), &output::render(&file, a.format)?)?;
            }
            if let Some(path) = &a.family_out {
                let mut file = RuleFile::family(&NestedFamily::new(members)?);
                file.metadata = base(0);
                file.metadata.remove("step");
                file.save(path)?;
            }
            Ok(())
        }
        Payload::Cubature(rule) => {
            if a.target_size.is_some() {
                return Err(usage("--target-size applies to one-dimensional rules"));
            }
            let target = a.target_degree.unwrap_or(rule.degree());
            // A target above the declared degree is checked against the verified one.
            let steps = reduce_sequence(&rule, mode, rule.degree().max(target), target, criterion)?;
            let mut previous = rule.len();
            for (step, r) in steps.iter().enumerate() {
                let (lo, hi) = weight_range(r.weights());
                eprintln!(
                    "degree {}: {} -> {} nodes, weights in [{lo:.6e}, {hi:.6e}]",
                    r.degree(),
                    previous,
                    r.len()
                );
                previous = r.len();
                let mut file = RuleFile::cubature(r.clone());
                file.metadata = base(step + 1);
                let path = member_path(&a.out_dir, &a.prefix, &format!("deg{}", r.degree()), a.format);
                write_text(Some(&path), &output::render(&file, a.format)?)?;
            }
            Ok(())
        }
        Payload::Family(_) => Err(usage("reduce expects a single rule, not a family")),
    }
}

/// The input rule followed by each reduced rule.
fn reduce_1d(
    rule: &QuadratureRule,
    mode: ReductionMode,
    criterion: ReductionCriterion,
    target_size: Option<usize>,
    target_degree: Option<usize>,
) -> anyhow::Result<Vec<QuadratureRule>> {
    match mode {
        ReductionMode::Negative => {
            return Err(usage("negative mode applies to cubature rules"));
        }
        ReductionMode::Symmetric if !rule.is_symmetric() => {
            return Err(cq_core::Error::NotSymmetric.into());
        }
        _ => {}
    }
    let min_size = target_size.unwrap_or(1).max(1);
    let mut members = vec![rule.clone()];
    loop {
        let last = members.last().expect("never empty");
        if last.len() <= min_size || (last.is_symmetric() && last.len() <= 2) {
            break;
        }
        let next = reduction_step(last, criterion)?;
        if target_degree.is_some_and(|k| next.degree < k) {
            break;
        }
        let removed: Vec<String> = last
            .nodes
            .iter()
            .filter(|x| !next.nodes.contains(x))
            .map(|&x| full_precision(x))
            .collect();
        let (lo, hi) = weight_range(&next.weights);
        eprintln!(
            "{} -> {} nodes, removed [{}], weights in [{lo:.6e}, {hi:.6e}]",
            last.len(),
            next.len(),
            removed.join(", ")
        );
        members.push(next);
    }
    Ok(members)
}

pub fn smolyak(a: &SmolyakArgs, invocation: &str) -> anyhow::Result<()> {
    let dist = parse_dist(&a.dist)?;
    let mut owned: Vec<Box<dyn RuleFamily>> = Vec::new();
    let source = if a.cc {
        owned.push(Box::new(ClenshawCurtisFamily::new(dist.clone())?));
        format!("clenshaw_curtis {dist}")
    } else if a.gauss {
        owned.push(Box::new(GaussFamily::new(dist.clone())));
        format!("gauss {dist}")
    } else if !a.family.is_empty() {
        for path in &a.family {
            let family = RuleFile::load(path)?
                .nested_family()
                .with_context(|| path.display().to_string())?;
            owned.push(Box::new(family));
        }
        a.family
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(" ")
    } else {
        return Err(usage("choose --cc, --gauss or --family"));
    };
    let families: Vec<&dyn RuleFamily> = owned.iter().map(|f| f.as_ref()).collect();
    let rule = smolyak_rule(&families, a.level, a.dim)?;
    let file = with_metadata(RuleFile::cubature(rule), invocation)
        .with_meta("families", source)
        .with_meta("level", a.level)
        .with_meta("dim", a.dim);
    emit(&file, a.output.out.as_deref(), a.output.format)
}

enum CountColumn {
    Dim,
    Positive,
    Method(Method),
}

fn count_column(name: &str) -> anyhow::Result<CountColumn> {
    Ok(match name.trim() {
        "dim" => CountColumn::Dim,
        "positive" => CountColumn::Positive,
        "smolyak" => CountColumn::Method(Method::SmolyakCc),
        "symmetric" => CountColumn::Method(Method::ReducedPositive),
        "negative" => CountColumn::Method(Method::ReducedNegative),
        other => CountColumn::Method(
            other
                .parse()
                .map_err(|_| usage(format!("unknown count mode `{other}`")))?,
        ),
    })
}

fn count(column: &CountColumn, dist: &Distribution, d: usize, k: usize) -> anyhow::Result<u64> {
    Ok(match column {
        CountColumn::Dim => dim_poly(k, d)?,
        CountColumn::Positive => {
            let axis = gauss_rule(dist, k.div_ceil(2))?;
            let tensor = tensor_rule(&vec![axis; d])?;
            match cubature::reduce(&tensor, ReductionMode::Positive, k, ReductionCriterion::Prior) {
                Ok(r) => r.len() as u64,
                // Small tensors can have an empty kernel and are already minimal.
                Err(cq_core::Error::ReductionExhausted(_)) => tensor.len() as u64,
                Err(e) => return Err(e.into()),
            }
        }
        CountColumn::Method(m) => method_rule(*m, dist, d, k)?.len() as u64,
    })
}

pub fn counts(a: &CountsArgs, invocation: &str) -> anyhow::Result<()> {
    let dist = parse_dist(&a.dist)?;
    let columns: Vec<CountColumn> = a.modes.iter().map(|m| count_column(m)).collect::<anyhow::Result<_>>()?;
    if let Some(k) = a.degrees.iter().find(|&&k| k % 2 == 0) {
        return Err(usage(format!("degree {k} is not odd")));
    }
    if a.dims.contains(&0) {
        return Err(usage("dimensions must be positive"));
    }
    let cells: Vec<(usize, usize)> = a
        .dims
        .iter()
        .flat_map(|&d| a.degrees.iter().map(move |&k| (d, k)))
        .collect();
    let rows: Vec<Vec<String>> = cells
        .par_iter()
        .map(|&(d, k)| {
            let mut row = vec![d.to_string(), k.to_string()];
            for c in &columns {
                row.push(count(c, &dist, d, k)?.to_string());
            }
            Ok(row)
        })
        .collect::<anyhow::Result<_>>()?;
    let mut header = vec!["d", "K"];
    header.extend(a.modes.iter().map(|m| m.trim()));
    let mut meta = metadata(invocation);
    meta.insert("distribution".into(), Value::from(dist.to_string()));
    write_text(a.out.as_deref(), &table(&meta, &header, &rows))
}

pub fn condition(a: &ConditionArgs, invocation: &str) -> anyhow::Result<()> {
    if a.inputs.is_empty() && a.smolyak_dim.is_none() {
        return Err(usage("no rule files given"));
    }
    let mut rows = Vec::new();
    let row = |name: String, n: usize, degree: usize, kappa: f64| {
        vec![name, n.to_string(), degree.to_string(), full_precision(kappa)]
    };
    for path in &a.inputs {
        let name = path.display().to_string();
        match RuleFile::load(path)?.payload {
            Payload::Quadrature(r) => rows.push(row(name, r.len(), r.degree, r.condition_number())),
            Payload::Cubature(r) => rows.push(row(name, r.len(), r.degree(), r.condition_number())),
            Payload::Family(f) => {
                for r in &f.rules {
                    rows.push(row(format!("{name}#{}", r.len()), r.len(), r.degree, r.condition_number()));
                }
            }
        }
    }
    if let Some(d) = a.smolyak_dim {
        let dist = Distribution::uniform(-1.0, 1.0)?;
        for k in (1..=a.max_degree).step_by(2) {
            let r: CubatureRule = method_rule(Method::SmolyakCc, &dist, d, k)?;
            rows.push(row(format!("smolyak_cc_d{d}_K{k}"), r.len(), r.degree(), r.condition_number()));
        }
    }
    write_text(
        a.out.as_deref(),
        &table(&metadata(invocation), &["rule", "nodes", "degree", "kappa"], &rows),
    )
}

fn load_cubature(path: &Path) -> anyhow::Result<CubatureRule> {
    match RuleFile::load(path)?.payload {
        Payload::Cubature(r) => Ok(r),
        Payload::Quadrature(r) => Ok(tensor_rule(&[r])?),
        Payload::Family(_) => Err(usage(format!("{}: expected a rule, found a family", path.display()))),
    }
}

pub fn benchmark(a: &BenchmarkArgs, invocation: &str) -> anyhow::Result<()> {
    let family: GenzFamily = a.family.parse()?;
    if a.dim == 0 || a.runs == 0 {
        return Err(usage("--dim and --runs must be positive"));
    }
    let dist = parse_dist(&a.dist)?;
    let mut rules: Vec<(String, CubatureRule)> = Vec::new();
    for path in &a.rules {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        rules.push((name, load_cubature(path)?));
    }
    for m in &a.methods {
        let method: Method = m.parse()?;
        rules.extend(rule_ladder(method, &dist, a.dim, &a.degrees)?);
    }
    if rules.is_empty() {
        return Err(usage("give --rules or --methods"));
    }
    if let Some((name, r)) = rules.iter().find(|(_, r)| r.dim() != a.dim) {
        return Err(usage(format!("rule {name} has dimension {}, not {}", r.dim(), a.dim)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .context("building the worker pool")?;
    let rows = pool.install(|| convergence_study(&rules, family, a.runs, a.seed))?;
    let mut meta = metadata(invocation);
    meta.insert("family".into(), Value::from(family.to_string()));
    meta.insert("dim".into(), Value::from(a.dim));
    meta.insert("runs".into(), Value::from(a.runs));
    meta.insert("seed".into(), Value::from(a.seed));
    write_text(a.out.as_deref(), &study_csv(&rows, &meta))
}
