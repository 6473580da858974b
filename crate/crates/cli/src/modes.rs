use std::io::Write;

use anyhow::Result;
use denjoy::acceptance::{run_all, CriterionReport};
use denjoy::canonical::TransferFamily;
use denjoy::flow::FlowGrid;
use denjoy::kernels::KernelField;
use denjoy::weyl::Weyl;
use denjoy::{Complex64 as C, Error, Point};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Mode, RunConfig};

const NAN: C = C { re: f64::NAN, im: f64::NAN };

/// Values at a pole or off the domain become `NaN`; other errors propagate.
fn or_nan(r: denjoy::Result<C>) -> denjoy::Result<C> {
    match r {
        Err(Error::Pole(_)) | Err(Error::OnSpectrum(_)) => Ok(NAN),
        other => other,
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn push_complex(row: &mut Vec<String>, z: C) {
    row.push(num(z.re));
    row.push(num(z.im));
}

fn complex_header(names: &[&str]) -> Vec<String> {
    names
        .iter()
        .flat_map(|n| [format!("{n}_re"), format!("{n}_im")])
        .collect()
}

fn write_rows<W: Write>(out: W, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Evaluates `f` over the λ-grid on the worker pool, keeping grid order.
fn over_lambdas<F>(cfg: &RunConfig, f: F) -> Result<Vec<Vec<String>>>
where
    F: Fn(C) -> denjoy::Result<Vec<String>> + Sync,
{
    let rows: Vec<denjoy::Result<Vec<String>>> = cfg.lambdas().into_par_iter().map(&f).collect();
    Ok(rows.into_iter().collect::<denjoy::Result<Vec<_>>>()?)
}

pub fn run<W: Write>(mode: Mode, cfg: &RunConfig, out: W) -> Result<()> {
    match mode {
        Mode::Green => green(cfg, out),
        Mode::Kernel => kernel(cfg, out),
        Mode::MFunction => m_function(cfg, out),
        Mode::Flow => flow(cfg, out),
        Mode::Transfer => transfer(cfg, out),
        Mode::FourierCheck => fourier_check(cfg, out),
        Mode::Acceptance => Ok(acceptance(cfg, out).map(|_| ())?),
    }
}

fn green<W: Write>(cfg: &RunConfig, out: W) -> Result<()> {
    let pot = cfg.potential()?;
    let g = pot.green_fn(cfg.lambda0())?;
    let rows = over_lambdas(cfg, |z| {
        let p = Point::Interior(z);
        let mut row = Vec::with_capacity(6);
        push_complex(&mut row, z);
        let value = if z == g.pole() { f64::INFINITY } else { g.value(p) };
        row.push(num(value));
        row.push(num(pot.theta(p).im));
        push_complex(&mut row, pot.theta(p));
        Ok(row)
    })?;
    let mut header = complex_header(&["lambda"]);
    header.extend(["green".into(), "martin".into()]);
    header.extend(complex_header(&["theta"]));
    write_rows(out, header, rows)
}

fn field(cfg: &RunConfig) -> Result<KernelField> {
    let pot = cfg.potential()?;
    let alpha = cfg.character(&pot)?;
    Ok(KernelField::with_options(&pot, &alpha, None, &cfg.tolerances.inversion_options())?)
}

fn kernel<W: Write>(cfg: &RunConfig, out: W) -> Result<()> {
    let f = field(cfg)?;
    let col = f.column(Point::Interior(cfg.lambda0()));
    let rows = over_lambdas(cfg, |z| {
        let p = Point::Interior(z);
        let mut row = Vec::with_capacity(5);
        push_complex(&mut row, z);
        push_complex(&mut row, col.eval(p));
        row.push(num(f.diagonal(p)));
        Ok(row)
    })?;
    let mut header = complex_header(&["lambda", "k"]);
    header.push("k_diagonal".into());
    write_rows(out, header, rows)
}

fn m_function<W: Write>(cfg: &RunConfig, out: W) -> Result<()> {
    let w = Weyl::from_field(field(cfg)?);
    let rows = over_lambdas(cfg, |z| {
        let p = Point::Interior(z);
        let mut row = Vec::with_capacity(8);
        push_complex(&mut row, z);
        push_complex(&mut row, or_nan(w.m_plus(p))?);
        push_complex(&mut row, or_nan(w.m_minus(p))?);
        push_complex(&mut row, or_nan(w.r_functions(p).map(|r| r.r0))?);
        Ok(row)
    })?;
    write_rows(out, complex_header(&["lambda", "m_plus", "m_minus", "r0"]), rows)
}

fn flow_grid(cfg: &RunConfig) -> Result<FlowGrid> {
    let pot = cfg.potential()?;
    let alpha = cfg.character(&pot)?;
    let x_max = cfg.x_max.unwrap_or(1.0);
    let h = cfg.x_step();
    Ok(FlowGrid::new(&pot, &alpha, (x_max / h).round() * h, h)?)
}

fn flow<W: Write>(cfg: &RunConfig, mut out: W) -> Result<()> {
    let grid = flow_grid(cfg)?;
    out.write_all(grid.to_csv().as_bytes())?;
    out.flush()?;
    Ok(())
}

fn transfer<W: Write>(cfg: &RunConfig, mut out: W) -> Result<()> {
    let grid = flow_grid(cfg)?;
    let fam = TransferFamily::new(&grid);
    let blocks: Vec<denjoy::Result<String>> = cfg
        .lambdas()
        .into_par_iter()
        .map(|z| fam.to_csv(Point::Interior(z)))
        .collect();
    for (k, block) in blocks.into_iter().enumerate() {
        let block = block?;
        let body = if k == 0 {
            block.as_str()
        } else {
            block.split_once('\n').map_or("", |(_, rest)| rest)
        };
        out.write_all(body.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn fourier_check<W: Write>(cfg: &RunConfig, out: W) -> Result<()> {
    let grid = flow_grid(cfg)?;
    let end = grid.len() - 1;
    let p0 = Point::Interior(cfg.lambda0());
    let mut rows = over_lambdas(cfg, |z| {
        let (lhs, rhs) = grid.kernel_identity(Point::Interior(z), p0, end);
        let mut row = vec!["kernel_identity".to_string()];
        push_complex(&mut row, z);
        push_complex(&mut row, lhs);
        push_complex(&mut row, rhs);
        row.push(num((lhs - rhs).norm() / lhs.norm()));
        Ok(row)
    })?;
    let cap = cfg.boundary_cap.unwrap_or(1e5);
    let half = end / 2;
    let steps: [(&str, Vec<usize>, Vec<C>); 2] = [
        ("plancherel_indicator", vec![0, end], vec![C::new(1.0, 0.0)]),
        ("plancherel_two_steps", vec![0, half.max(1), end], vec![C::new(1.0, 0.0), C::new(-0.5, 0.5)]),
    ];
    for (name, breaks, values) in steps {
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            continue;
        }
        let st = grid.step_transform(&breaks, &values)?;
        let (lhs, rhs) = (st.measure_norm_sq(), st.boundary_norm_sq(cap));
        let mut row = vec![name.to_string()];
        push_complex(&mut row, NAN);
        push_complex(&mut row, C::new(lhs, 0.0));
        push_complex(&mut row, C::new(rhs, 0.0));
        row.push(num((rhs / lhs - 1.0).abs()));
        rows.push(row);
    }
    let mut header = vec!["check".to_string()];
    header.extend(complex_header(&["lambda", "lhs", "rhs"]));
    header.push("rel_err".into());
    write_rows(out, header, rows)
}

#[derive(Serialize)]
struct Report<'a> {
    passed: usize,
    total: usize,
    criteria: &'a [CriterionReport],
}

/// Runs the suite and writes the JSON report; failures are report entries.
pub fn acceptance<W: Write>(cfg: &RunConfig, mut out: W) -> Result<Vec<CriterionReport>> {
    let reports = run_all(&cfg.acceptance_options());
    for r in &reports {
        eprintln!("{}", r.line());
    }
    let report = Report {
        passed: reports.iter().filter(|r| r.passed).count(),
        total: reports.len(),
        criteria: &reports,
    };
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(reports)
}
