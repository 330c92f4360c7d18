//! Plot-ready CSV and plain-file writers. Floats use `{:.16e}` so every
//! column round-trips exactly and never depends on locale.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use syncnet::sim::Trace;
use syncnet::verify::C64;

pub fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn row(w: &mut impl Write, values: impl IntoIterator<Item = f64>) -> std::io::Result<()> {
    let cells: Vec<String> = values.into_iter().map(|v| format!("{v:.16e}")).collect();
    writeln!(w, "{}", cells.join(","))
}

pub fn write_nyquist(path: &Path, points: &[(f64, C64)]) -> anyhow::Result<()> {
    let mut w = create(path)?;
    let body = (|| {
        writeln!(w, "omega,re,im")?;
        for (omega, z) in points {
            row(&mut w, [*omega, z.re, z.im])?;
        }
        w.flush()
    })();
    body.with_context(|| format!("writing {}", path.display()))
}

/// `t`, leader state, then per node: state, `‖z_i‖`, `u_i`, `ũ_i`, `τ_i`.
pub fn trace_header(trace: &Trace) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=trace.n).map(|k| format!("xbar_{k}")));
    for i in 1..=trace.d {
        cols.extend((1..=trace.n).map(|k| format!("x{i}_{k}")));
        cols.push(format!("z{i}_norm"));
        cols.push(format!("u{i}"));
        cols.push(format!("u{i}_tilde"));
        cols.extend((1..=trace.l + 1).map(|k| format!("tau{i}_{k}")));
    }
    cols.join(",")
}

pub fn write_trace(path: &Path, trace: &Trace) -> anyhow::Result<()> {
    let mut w = create(path)?;
    let body = (|| {
        writeln!(w, "{}", trace_header(trace))?;
        for ((t, s), sample) in trace.times.iter().zip(&trace.states).zip(&trace.samples) {
            let mut values = vec![*t];
            values.extend(s.x_bar.iter());
            for i in 0..trace.d {
                values.extend(s.x[i].iter());
                values.extend([sample.z_norm[i], sample.u[i], sample.u_tilde[i]]);
                values.extend(s.tau[i].iter());
            }
            row(&mut w, values)?;
        }
        w.flush()
    })();
    body.with_context(|| format!("writing {}", path.display()))
}
