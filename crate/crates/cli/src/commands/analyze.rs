use std::io::Write;

use acstab_core::robustness::{
    classify_constant_initial, dirk_perturbation_gains, interval_sequence, perturbation_gain, preimage_constants, GainValue, IntervalSequence,
};
use acstab_core::schemes::SchemeKind;
use acstab_core::stability::{enumerate_bifurcations, stability_threshold};

use super::par_map;
use crate::args::{AnalyzeWhat, RunArgs};
use crate::error::CliError;
use crate::output::{fmt_num, fmt_sign, Table};

pub fn run(what: AnalyzeWhat, args: &RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let table = match what {
        AnalyzeWhat::Thresholds => thresholds(args)?,
        AnalyzeWhat::Bifurcations => bifurcations(args)?,
        AnalyzeWhat::Intervals => intervals(args)?,
        AnalyzeWhat::Classify => classify(args)?,
        AnalyzeWhat::Perturb => perturb(args)?,
    };
    table.emit(args.out.as_deref(), stdout)
}

/// One scheme with `--scheme`, all four otherwise.
fn schemes(args: &RunArgs) -> Result<Vec<SchemeKind>, CliError> {
    match args.scheme {
        Some(_) => Ok(vec![args.scheme()?]),
        None => Ok(SchemeKind::all().to_vec()),
    }
}

fn thresholds(args: &RunArgs) -> Result<Table, CliError> {
    let eps = args.eps_or(0.1)?;
    let mut table = Table::new(&["scheme", "formula", "dt_max"]);
    for kind in schemes(args)? {
        let t = stability_threshold(&kind, eps)?;
        table.push(vec![kind.tag().to_string(), t.formula.to_string(), fmt_num(t.dt_max)]);
    }
    Ok(table)
}

fn bifurcations(args: &RunArgs) -> Result<Table, CliError> {
    let kind = args.scheme()?;
    let dt = args.dt.ok_or_else(|| CliError::Config("--dt is required".into()))?;
    let c = args.c.unwrap_or(0.0);
    let dim = args.dim_for(0)?;
    let points = enumerate_bifurcations(&kind, c, dt, args.eps_min.unwrap_or(0.01), args.max_k.unwrap_or(8), dim)?;
    let mut header = vec!["scheme", "c", "dt", "k1"];
    if dim == 2 {
        header.push("k2");
    }
    header.extend(["eps_sq", "eigenfunction", "ambiguous"]);
    let mut table = Table::new(&header);
    for b in &points {
        let mut row = vec![b.scheme.clone(), fmt_num(c), fmt_num(dt)];
        row.extend((0..dim).map(|a| fmt_num(b.mode.k(a))));
        row.extend([fmt_num(b.eps_sq), b.eigenfunction.clone(), b.ambiguous.to_string()]);
        table.push(row);
    }
    if points.is_empty() {
        let why = if matches!(kind, SchemeKind::ModifiedCn) {
            "no bifurcation: the scheme is uniquely solvable for every step".to_string()
        } else if 1.0 - 3.0 * c * c <= 0.0 {
            format!("no bifurcation: 1 - 3c^2 <= 0 at c = {}", fmt_num(c))
        } else {
            "no bifurcation above eps_min".to_string()
        };
        let mut row = vec![kind.tag().to_string(), fmt_num(c), fmt_num(dt)];
        row.extend((0..dim).map(|_| String::new()));
        row.extend([String::new(), why, String::new()]);
        table.push(row);
    }
    Ok(table)
}

fn entry_labels(kind: &SchemeKind, n: usize) -> Vec<String> {
    (0..n)
        .map(|i| match kind {
            SchemeKind::Dirk(_) => format!("{}{}", if i % 2 == 0 { "r" } else { "s" }, i / 2 + 1),
            _ => format!("r{}", i + 1),
        })
        .collect()
}

fn intervals(args: &RunArgs) -> Result<Table, CliError> {
    let kind = args.scheme()?;
    let ratio = args.ratio(&kind)?;
    let seq = interval_sequence(&kind, ratio, args.count.unwrap_or(4))?;
    let entries = seq.entries();
    let mut table = Table::new(&["scheme", "ratio", "entry", "value", "label"]);
    for ((name, v), label) in entry_labels(&kind, entries.len()).into_iter().zip(&entries).zip(seq.labels()) {
        table.push(vec![kind.tag().to_string(), fmt_num(ratio), name, fmt_num(*v), fmt_sign(label)]);
    }
    Ok(table)
}

/// Predicted limit for a constant start `r`: the label of the interval
/// holding `|r|`, mirrored for negative `r`. `None` past the last entry
/// or on an endpoint.
pub fn region_label(seq: &IntervalSequence, r: f64) -> Option<i8> {
    let a = r.abs();
    if a == 0.0 {
        return None;
    }
    let entries = seq.entries();
    let i = entries.iter().position(|&e| a < e)?;
    if i > 0 && a == entries[i - 1] {
        return None;
    }
    let label = seq.labels()[i];
    Some(if r < 0.0 { -label } else { label })
}

fn pattern(signs: &[i8]) -> String {
    signs
        .iter()
        .map(|s| match s {
            1 => '+',
            -1 => '-',
            _ => '0',
        })
        .collect()
}

fn classify(args: &RunArgs) -> Result<Table, CliError> {
    let kind = args.scheme()?;
    let p = args.params(&kind)?;
    let ratio = kind.ratio(&p);
    let (rmin, rmax) = (args.rmin.unwrap_or(0.0), args.rmax.unwrap_or(4.0));
    if !(rmin < rmax) {
        return Err(CliError::Config(format!("--rmin ({rmin}) must be below --rmax ({rmax})")));
    }
    let samples = args.samples.unwrap_or(64);
    if samples == 0 {
        return Err(CliError::Config("--samples must be positive".into()));
    }
    let steps = args.steps.unwrap_or(2000);
    // enough entries to cover rmax, capped so a huge range stays cheap
    let reach = rmin.abs().max(rmax.abs());
    let mut count = args.count.unwrap_or(4);
    let seq = loop {
        let seq = interval_sequence(&kind, ratio, count)?;
        if seq.entries().last().is_some_and(|&e| e > reach) || count >= 64 {
            break seq;
        }
        count *= 2;
    };
    let width = (rmax - rmin) / samples as f64;
    let starts: Vec<f64> = (0..samples).map(|i| rmin + (i as f64 + 0.5) * width).collect();
    let results = par_map(starts, |r| classify_constant_initial(&kind, r, &p, steps, 1e-3))?;
    let mut table = Table::new(&["scheme", "ratio", "r", "limit", "settle_step", "sign_changes", "pattern", "region_label"]);
    for res in results {
        let res = res?;
        let upto = res.settle_step.unwrap_or(res.signs.len()).min(res.signs.len());
        table.push(vec![
            kind.tag().to_string(),
            fmt_num(ratio),
            fmt_num(res.r),
            fmt_sign(res.limit_sign),
            res.settle_step.map_or(String::new(), |s| s.to_string()),
            res.sign_changes().to_string(),
            pattern(&res.signs[..upto]),
            region_label(&seq, res.r).map_or(String::new(), fmt_sign),
        ]);
    }
    Ok(table)
}

fn perturb(args: &RunArgs) -> Result<Table, CliError> {
    let kind = args.scheme()?;
    let p = args.params(&kind)?;
    let k = args.mode()?;
    let c = args.c.ok_or_else(|| CliError::Config("--c is required".into()))?;
    let set = preimage_constants(&kind, c, &p)?;
    let branch = match args.r {
        Some(r) => set.branch_near(r),
        None => set.outermost(),
    }
    .ok_or_else(|| CliError::Solver(format!("no real preimage of {c}")))?;
    let g = match &kind {
        SchemeKind::Dirk(_) if branch.stages.len() == 2 => dirk_perturbation_gains(branch.stages[1], branch.stages[0], &k, &p),
        SchemeKind::Dirk(_) => return Err(CliError::Config("stage gains need a chainable two-stage tableau".into())),
        _ => perturbation_gain(&kind, c, branch.r, &k, &p)?,
    };
    let dim = k.dim();
    let mut header = vec!["scheme", "c", "r", "k1"];
    if dim == 2 {
        header.push("k2");
    }
    header.extend(["gain", "b2", "b1", "b0", "pole"]);
    let mut table = Table::new(&header);
    let mut row = vec![kind.tag().to_string(), fmt_num(c), fmt_num(branch.r)];
    row.extend((0..dim).map(|a| fmt_num(k.k(a))));
    match &g.gain {
        GainValue::Scalar(b) => row.extend([fmt_num(*b), String::new(), String::new(), String::new(), String::new()]),
        GainValue::Staged([b2, b1, b0]) => row.extend([fmt_num(*b0), fmt_num(*b2), fmt_num(*b1), fmt_num(*b0), String::new()]),
        GainValue::Pole(why) => row.extend([String::new(), String::new(), String::new(), String::new(), why.clone()]),
    }
    table.push(row);
    Ok(table)
}
