use std::io::Write;

use acstab_core::schemes::{simulate, SimulateConfig, Trajectory};

use crate::args::{FieldSpec, RunArgs};
use crate::error::CliError;
use crate::output::{fmt_num, fmt_sign, Table};

pub const HEADER: [&str; 10] = ["step", "t", "min", "max", "center", "l2", "sign", "settled", "settle_step", "limit"];

pub fn run(initial: &str, args: &RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = FieldSpec::parse(initial)?;
    let kind = args.scheme()?;
    let p = args.params(&kind)?;
    let dim = args.dim_for(spec.indices())?;
    let grid = args.grid(dim)?;
    let phi0 = spec.field(&grid)?;
    let cfg = SimulateConfig {
        newton: args.newton()?,
        ..SimulateConfig::default()
    };
    let traj = simulate(&kind, &phi0, args.steps.unwrap_or(100), &p, &cfg)?;
    trajectory_table(&traj).emit(args.out.as_deref(), stdout)?;
    match traj.failure {
        Some(why) => Err(CliError::Solver(why)),
        None => Ok(()),
    }
}

pub fn trajectory_table(traj: &Trajectory) -> Table {
    let mut table = Table::new(&HEADER);
    for s in &traj.summaries {
        let sign = if s.center > 0.0 { 1 } else if s.center < 0.0 { -1 } else { 0 };
        table.push(vec![
            s.step.to_string(),
            fmt_num(s.t),
            fmt_num(s.min),
            fmt_num(s.max),
            fmt_num(s.center),
            fmt_num(s.l2),
            fmt_sign(sign),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    let last = traj.summaries.last();
    let mut fin = vec![
        "final".to_string(),
        last.map_or(String::new(), |s| fmt_num(s.t)),
        last.map_or(String::new(), |s| fmt_num(s.min)),
        last.map_or(String::new(), |s| fmt_num(s.max)),
        last.map_or(String::new(), |s| fmt_num(s.center)),
        last.map_or(String::new(), |s| fmt_num(s.l2)),
        String::new(),
    ];
    fin.push(traj.settled.to_string());
    fin.push(traj.settle_step.map_or(String::new(), |s| s.to_string()));
    fin.push(fmt_sign(traj.limit_sign));
    table.push(fin);
    table
}
