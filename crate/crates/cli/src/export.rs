//! Grid export: CSV and JSON with deterministic ordering and 17-digit
//! floats, so identical scenarios produce byte-identical files.

use akns_core::dressing::DressedSolution;
use akns_core::hierarchy::GridSpec;
use anyhow::Context;
use std::io::Write;

fn fmt(v: f64) -> String {
    // 17 significant digits round-trips f64 exactly
    format!("{:.16e}", v)
}

pub fn column_names(n: usize) -> Vec<String> {
    let mut names = vec!["x".to_string(), "t".to_string()];
    for r in 1..=n {
        for c in 1..=n {
            names.push(format!("re_u_{r}_{c}"));
            names.push(format!("im_u_{r}_{c}"));
        }
    }
    names
}

fn rows(sol: &DressedSolution, grid: &GridSpec) -> anyhow::Result<Vec<Vec<f64>>> {
    let n = sol.spec().n();
    let mut out = Vec::new();
    for t in grid.ts() {
        for x in grid.xs() {
            let u = sol.u_at(x, t)?;
            let mut row = Vec::with_capacity(2 + 2 * n * n);
            row.push(x);
            row.push(t);
            for r in 0..n {
                for c in 0..n {
                    row.push(u[(r, c)].re);
                    row.push(u[(r, c)].im);
                }
            }
            out.push(row);
        }
    }
    Ok(out)
}

pub fn export_csv(
    sol: &DressedSolution,
    grid: &GridSpec,
    path: &std::path::Path,
) -> anyhow::Result<()> {
    let mut f =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(f, "{}", column_names(sol.spec().n()).join(","))?;
    for row in rows(sol, grid)? {
        let line: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn export_json(
    sol: &DressedSolution,
    grid: &GridSpec,
    path: &std::path::Path,
) -> anyhow::Result<()> {
    let mut f =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let cols = column_names(sol.spec().n());
    writeln!(f, "{{")?;
    writeln!(
        f,
        "  \"columns\": [{}],",
        cols.iter()
            .map(|c| format!("\"{c}\""))
            .collect::<Vec<_>>()
            .join(", ")
    )?;
    writeln!(f, "  \"rows\": [")?;
    let all = rows(sol, grid)?;
    for (i, row) in all.iter().enumerate() {
        let line: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        let comma = if i + 1 < all.len() { "," } else { "" };
        writeln!(f, "    [{}]{}", line.join(", "), comma)?;
    }
    writeln!(f, "  ]")?;
    writeln!(f, "}}")?;
    Ok(())
}
