use std::io::Write;

use acstab_core::robustness::{classify_constant_initial, interval_sequence, params_for_ratio, IntervalSequence};
use acstab_core::schemes::SchemeKind;
use acstab_core::stability::stability_threshold;

use super::par_map;
use crate::args::{ReproduceId, RunArgs};
use crate::error::CliError;
use crate::output::{fmt_num, Table};
use crate::reference::{within_tolerance, R_LABELS, RATIOS, TABLE1, TABLE2, TABLE3, TABLE3_LABELS, TABLE4};

/// Steps allowed when classifying interval midpoints; small ratios relax
/// slowly towards the limit.
const CLASSIFY_STEPS: usize = 20_000;

pub fn run(id: ReproduceId, args: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let (table, passed, total) = match id {
        ReproduceId::Table1 => interval_table(SchemeKind::CrankNicolson, &TABLE1.map(|(r, v)| (r, v.to_vec())), &R_LABELS, args.check)?,
        ReproduceId::Table2 => interval_table(SchemeKind::ModifiedCn, &TABLE2.map(|(r, v)| (r, v.to_vec())), &R_LABELS, args.check)?,
        ReproduceId::Table3 => interval_table(SchemeKind::dirk2(), &TABLE3.map(|(r, v)| (r, v.to_vec())), &TABLE3_LABELS, args.check)?,
        ReproduceId::Table4 => table4(args.eps_or(0.1)?)?,
        ReproduceId::Fig1Data => region_data(SchemeKind::CrankNicolson, args.count.unwrap_or(4))?,
        ReproduceId::Fig5Data => region_data(SchemeKind::dirk2(), args.count.unwrap_or(4))?,
    };
    table.emit(args.out.as_deref(), stdout)?;
    verdict(id_name(id), passed, total, args.check, stderr)
}

fn verdict(name: &str, passed: usize, total: usize, check: bool, stderr: &mut dyn Write) -> Result<(), CliError> {
    writeln!(stderr, "{name}: {passed}/{total} checks pass")?;
    if check && passed != total {
        return Err(CliError::Mismatch(format!("{name}: {} of {total} checks differ from the reference", total - passed)));
    }
    Ok(())
}

fn id_name(id: ReproduceId) -> &'static str {
    match id {
        ReproduceId::Table1 => "table1",
        ReproduceId::Table2 => "table2",
        ReproduceId::Table3 => "table3",
        ReproduceId::Table4 => "table4",
        ReproduceId::Fig1Data => "fig1-data",
        ReproduceId::Fig5Data => "fig5-data",
    }
}

fn interval_table(kind: SchemeKind, reference: &[(f64, Vec<f64>)], labels: &[&str], check: bool) -> Result<(Table, usize, usize), CliError> {
    let per_family = if matches!(kind, SchemeKind::Dirk(_)) { labels.len() / 2 } else { labels.len() };
    let rows: Vec<_> = par_map(reference.to_vec(), |(ratio, want)| {
        interval_sequence(&kind, ratio, per_family).map(|s| (ratio, s.entries(), want))
    })?
    .into_iter()
    .collect::<Result<_, _>>()?;

    let mut header = vec!["ratio"];
    if check {
        header.extend(["entry", "computed", "reference", "abs_diff", "pass"]);
    } else {
        header.extend(labels);
    }
    let mut table = Table::new(&header);
    let (mut passed, mut total) = (0, 0);
    for (ratio, got, want) in rows {
        if check {
            for ((label, g), w) in labels.iter().zip(&got).zip(&want) {
                let ok = within_tolerance(*g, *w);
                passed += ok as usize;
                total += 1;
                table.push(vec![fmt_num(ratio), label.to_string(), fmt_num(*g), fmt_num(*w), fmt_num((g - w).abs()), ok.to_string()]);
            }
        } else {
            total += got.len();
            passed += got.iter().zip(&want).filter(|(g, w)| within_tolerance(**g, **w)).count();
            table.push(std::iter::once(fmt_num(ratio)).chain(got.iter().map(|v| fmt_num(*v))).collect());
        }
    }
    Ok((table, passed, total))
}

fn table4(eps: f64) -> Result<(Table, usize, usize), CliError> {
    let mut table = Table::new(&["scheme", "formula", "dt_max", "reference", "pass"]);
    let e2 = eps * eps;
    let mut passed = 0;
    for (kind, (tag, printed)) in SchemeKind::all().iter().zip(TABLE4) {
        let t = stability_threshold(kind, eps)?;
        let want = match printed {
            "eps^2" => e2,
            "2 eps^2" => 2.0 * e2,
            "inf" => f64::INFINITY,
            _ => {
                let SchemeKind::Dirk(tab) = kind else { unreachable!() };
                e2 / tab.max_diagonal()
            }
        };
        let ok = kind.tag() == tag && t.dt_max == want;
        passed += ok as usize;
        table.push(vec![tag.to_string(), t.formula.to_string(), fmt_num(t.dt_max), printed.to_string(), ok.to_string()]);
    }
    Ok((table, passed, TABLE4.len()))
}

/// Interval endpoints with the predicted limit sign, checked against the
/// scalar iteration started at each midpoint.
fn region_data(kind: SchemeKind, count: usize) -> Result<(Table, usize, usize), CliError> {
    let seqs: Vec<IntervalSequence> = par_map(RATIOS.to_vec(), |ratio| interval_sequence(&kind, ratio, count))?
        .into_iter()
        .collect::<Result<_, _>>()?;
    let mut jobs = Vec::new();
    for seq in &seqs {
        let entries = seq.entries();
        let mut lower = 0.0;
        for (i, (upper, label)) in entries.iter().zip(seq.labels()).enumerate() {
            jobs.push((seq.ratio, i, lower, *upper, label));
            lower = *upper;
        }
    }
    let results = par_map(jobs, |(ratio, i, lower, upper, label)| {
        let p = params_for_ratio(&kind, ratio)?;
        let mid = 0.5 * (lower + upper);
        let res = classify_constant_initial(&kind, mid, &p, CLASSIFY_STEPS, 1e-3)?;
        Ok::<_, acstab_core::Error>((ratio, i, lower, upper, label, res.limit_sign))
    })?;
    let mut table = Table::new(&["ratio", "interval", "lower", "upper", "label", "simulated_label", "pass"]);
    let mut passed = 0;
    let total = results.len();
    for r in results {
        let (ratio, i, lower, upper, label, sim) = r?;
        let ok = label == sim;
        passed += ok as usize;
        table.push(vec![fmt_num(ratio), i.to_string(), fmt_num(lower), fmt_num(upper), label.to_string(), sim.to_string(), ok.to_string()]);
    }
    Ok((table, passed, total))
}
