//! Output files in JSON, LaTeX and plain text, named `(n_m)[suffix].ext`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use gd_core::diffpoly::LatexDisplay;
use gd_core::hierarchy::FlowEquation;
use gd_core::{AlmostCommutingResult, DiffOperator, DiffPolynomial};
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Latex,
    Text,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Latex => "tex",
            Format::Text => "txt",
        }
    }
}

pub fn file_name(n: usize, m: usize, suffix: &str, format: Format) -> String {
    format!("({n}_{m})[{suffix}].{}", format.extension())
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("values serialize");
    s.push('\n');
    s
}

pub fn render_operator(p: &DiffOperator, format: Format) -> String {
    match format {
        Format::Json => json(p),
        Format::Latex => format!("{}\n", p.to_latex()),
        Format::Text => format!("{}\n", p.to_text()),
    }
}

pub fn render_poly(h: &DiffPolynomial, format: Format) -> String {
    match format {
        Format::Json => json(h),
        Format::Latex => format!("{}\n", LatexDisplay(h)),
        Format::Text => format!("{h}\n"),
    }
}

#[derive(Serialize)]
struct FlowRecord<'a> {
    variable_index: u32,
    level: usize,
    stationary: bool,
    rhs: &'a DiffPolynomial,
}

pub fn render_flow(eq: &FlowEquation, stationary: bool, format: Format) -> String {
    match (format, stationary) {
        (Format::Json, _) => json(&FlowRecord {
            variable_index: eq.variable_index,
            level: eq.level,
            stationary,
            rhs: &eq.rhs,
        }),
        (Format::Latex, false) => format!("u_{{{},t}} = {}\n", eq.variable_index, LatexDisplay(&eq.rhs)),
        (Format::Latex, true) => format!("{} = 0\n", LatexDisplay(&eq.rhs)),
        (Format::Text, false) => format!("{eq}\n"),
        (Format::Text, true) => format!("{} = 0\n", eq.rhs),
    }
}

/// `P` and every `H_i` of one result.
pub fn basis_files(result: &AlmostCommutingResult, format: Format) -> Vec<(String, String)> {
    let (n, m) = (result.n, result.m);
    let mut files = vec![(file_name(n, m, "P", format), render_operator(&result.p, format))];
    for (i, h) in result.h.iter().enumerate() {
        files.push((file_name(n, m, &format!("H_{i}"), format), render_poly(h, format)));
    }
    files
}

/// One file per flow equation, suffixed by the variable index.
pub fn hierarchy_files(n: usize, m: usize, eqs: &[FlowEquation], stationary: bool, format: Format) -> Vec<(String, String)> {
    let tag = if stationary { "stationary" } else { "flow" };
    eqs.iter()
        .map(|eq| {
            let name = file_name(n, m, &format!("{tag}_{}", eq.variable_index), format);
            (name, render_flow(eq, stationary, format))
        })
        .collect()
}

pub fn write_files(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gd_core::wilson::almost_commuting;

    #[test]
    fn names_follow_the_dataset_pattern() {
        assert_eq!(file_name(3, 2, "P", Format::Latex), "(3_2)[P].tex");
        assert_eq!(file_name(7, 13, "H_5", Format::Json), "(7_13)[H_5].json");
        assert_eq!(file_name(3, 2, "flow_2", Format::Text), "(3_2)[flow_2].txt");
    }

    #[test]
    fn basis_rendering() {
        let r = almost_commuting(3, 2).unwrap();
        let files = basis_files(&r, Format::Text);
        assert_eq!(files.len(), 3);
        assert_eq!(files[0].1, "D^2 + 2/3*u2\n");
        assert_eq!(files[1].0, "(3_2)[H_0].txt");
        let tex = basis_files(&r, Format::Latex);
        assert_eq!(tex[0].1, "\\partial^{2} + \\frac{2}{3} u_2\n");
    }

    #[test]
    fn json_round_trip() {
        let r = almost_commuting(3, 4).unwrap();
        for (_, body) in basis_files(&r, Format::Json).iter().skip(1) {
            let h: DiffPolynomial = serde_json::from_str(body).unwrap();
            assert_eq!(render_poly(&h, Format::Json), *body);
        }
        let p: DiffOperator = serde_json::from_str(&render_operator(&r.p, Format::Json)).unwrap();
        assert_eq!(p, r.p);
    }
}
