use std::io::Write;
use std::path::{Path, PathBuf};

use acstab_core::grid::ScalarField;
use acstab_core::robustness::{preimage_constants, preimage_field, GainSeed, PreimageOutcome};

use crate::args::{FieldSpec, RunArgs};
use crate::error::CliError;
use crate::output::{fmt_num, Table};

pub fn run(target: &str, args: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let spec = FieldSpec::parse(target)?;
    match spec.perturbation {
        None => constants(spec.value, args, stdout),
        Some((delta, _)) => field(&spec, delta, args, stdout, stderr),
    }
}

fn constants(c: f64, args: &RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let kind = args.scheme()?;
    let p = args.params(&kind)?;
    let set = preimage_constants(&kind, c, &p)?;
    let mut table = Table::new(&["record", "target", "value", "phi1", "phi2", "discriminant", "discriminant_sign", "stage"]);
    for b in &set.branches {
        let stage = |i: usize| b.stages.get(i).map_or(String::new(), |v| fmt_num(*v));
        table.push(vec![
            "root".into(),
            fmt_num(c),
            fmt_num(b.r),
            stage(0),
            stage(1),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    for q in &set.cubics {
        table.push(vec![
            "cubic".into(),
            fmt_num(q.target),
            String::new(),
            String::new(),
            String::new(),
            fmt_num(q.discriminant),
            q.discriminant_sign.to_string(),
            q.stage.clone(),
        ]);
    }
    table.emit(args.out.as_deref(), stdout)
}

fn field(spec: &FieldSpec, delta: f64, args: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let kind = args.scheme()?;
    let p = args.params(&kind)?;
    let dim = args.dim_for(spec.indices())?;
    let grid = args.grid(dim)?;
    let (_, mode) = spec.perturbation.as_ref().expect("field target");
    let profile = spec.profile(&grid)?.expect("field target");
    let c = spec.value;

    let set = preimage_constants(&kind, c, &p)?;
    let branch = match args.r {
        Some(r) => set.branch_near(r),
        None => set.outermost(),
    }
    .ok_or_else(|| CliError::Solver(format!("no real preimage of {c}")))?;
    let r = branch.r;
    let seed = GainSeed::for_branch(&kind, c, r, mode, &p)?;
    let hcfg = args.homotopy(delta)?;
    let ncfg = args.newton()?;
    let out = preimage_field(&kind, c, &profile, &seed, &p, &hcfg, &ncfg)?;

    field_table(&out.field).emit(args.out.as_deref(), stdout)?;
    let summary = summary_table(kind.tag(), c, r, seed.initial_gain, &out);
    match &args.out {
        Some(path) => summary.emit(Some(&summary_path(path)), stdout)?,
        None => summary.write_to(stderr)?,
    }
    if !out.completed {
        let last = out.last_good_delta.map_or("none".to_string(), fmt_num);
        return Err(CliError::Solver(format!("continuation stopped short of delta = {}; last good delta {last}", fmt_num(hcfg.delta_end))));
    }
    Ok(())
}

/// `<out>.summary.csv` next to the field file.
pub fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.csv");
    PathBuf::from(s)
}

fn field_table(u: &ScalarField) -> Table {
    let grid = u.grid();
    let dim = grid.dim();
    let header: &[&str] = if dim == 1 { &["x1", "value"] } else { &["x1", "x2", "value"] };
    let mut table = Table::new(header);
    for (i, v) in u.values().iter().enumerate() {
        let x = grid.coords(i);
        let mut row: Vec<String> = x[..dim].iter().map(|c| fmt_num(*c)).collect();
        row.push(fmt_num(*v));
        table.push(row);
    }
    table
}

fn summary_table(tag: &str, c: f64, r: f64, gain: f64, out: &PreimageOutcome) -> Table {
    let mut table = Table::new(&[
        "scheme",
        "c",
        "delta",
        "r",
        "gain",
        "completed",
        "last_good_delta",
        "solves",
        "newton_iterations",
        "forward_residual",
    ]);
    table.push(vec![
        tag.to_string(),
        fmt_num(c),
        fmt_num(out.delta),
        fmt_num(r),
        fmt_num(gain),
        out.completed.to_string(),
        out.last_good_delta.map_or(String::new(), fmt_num),
        out.solves.to_string(),
        out.report.iterations.to_string(),
        fmt_num(out.forward_residual),
    ]);
    table
}
