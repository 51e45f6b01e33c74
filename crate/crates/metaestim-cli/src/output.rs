//! Artifact writers. Every CSV is comma-separated with a header row, `.`
//! decimals (Rust's shortest round-trip float text) and LF line endings, so
//! reruns with the same seed produce byte-identical files.

use metaestim::{AlgorithmOptions, Candidate, Estimates, ParameterSpace};
use serde::Serialize;
use std::io;
use std::path::Path;

fn candidate_row(c: &Candidate, with_iteration: bool) -> String {
    let mut fields: Vec<String> = c.values.iter().map(f64::to_string).collect();
    fields.push(c.pset.to_string());
    if with_iteration {
        fields.push(c.iteration.to_string());
    }
    fields.push(c.fitness.to_string());
    fields.join(",")
}

fn candidates_csv(names: &[&str], rows: &[&Candidate], with_iteration: bool) -> String {
    let mut header: Vec<&str> = names.to_vec();
    header.push("pset");
    if with_iteration {
        header.push("iteration");
    }
    header.push("fitness");
    let mut out = header.join(",");
    out.push('\n');
    for c in rows {
        out.push_str(&candidate_row(c, with_iteration));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Stats<'a> {
    total_evals: u64,
    converged: bool,
    achieved_tolerance: f64,
    wall_time: f64,
    seed: u64,
    options: &'a AlgorithmOptions,
}

/// Writes best.csv, iteration_bests.csv, visited_space.csv and stats.json
/// into `dir` (created if missing).
pub fn write_run(
    dir: &Path,
    space: &ParameterSpace,
    est: &Estimates,
    seed: u64,
    options: &AlgorithmOptions,
) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let names = space.names();
    std::fs::write(
        dir.join("best.csv"),
        candidates_csv(&names, &[&est.best], false),
    )?;
    let iter_rows: Vec<&Candidate> = est.iteration_bests.iter().collect();
    std::fs::write(
        dir.join("iteration_bests.csv"),
        candidates_csv(&names, &iter_rows, true),
    )?;
    write_visited(dir, space, est)?;
    write_stats(dir, est, seed, options)
}

/// Writes only visited_space.csv and stats.json (the explore artifact set).
pub fn write_visited(dir: &Path, space: &ParameterSpace, est: &Estimates) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let rows: Vec<&Candidate> = est.visited_space.iter().collect();
    std::fs::write(
        dir.join("visited_space.csv"),
        candidates_csv(&space.names(), &rows, true),
    )
}

pub fn write_stats(
    dir: &Path,
    est: &Estimates,
    seed: u64,
    options: &AlgorithmOptions,
) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let stats = Stats {
        total_evals: est.stats.total_evals,
        converged: est.stats.converged,
        achieved_tolerance: est.stats.achieved_tolerance,
        wall_time: est.stats.wall_time,
        seed,
        options,
    };
    let mut text = serde_json::to_string_pretty(&stats).expect("stats serialize");
    text.push('\n');
    std::fs::write(dir.join("stats.json"), text)
}

/// Grids the visited points over every cyclically adjacent parameter pair
/// (p1,p2), (p2,p3), ..., (pd,p1) and writes one `surface_<pi>_<pj>.csv`
/// per pair: grid x grid cells, cell-center coordinates, minimum fitness
/// seen in the cell, empty fitness field for cells never visited.
pub fn write_surfaces(
    dir: &Path,
    space: &ParameterSpace,
    visited: &[Candidate],
    grid: usize,
) -> io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let d = space.dimension();
    let names = space.names();
    let mut files = Vec::new();
    if d < 2 {
        return Ok(files);
    }
    for i in 0..d {
        let j = (i + 1) % d;
        let (pi, pj) = (&space.params()[i], &space.params()[j]);
        let (wi, wj) = (pi.range() / grid as f64, pj.range() / grid as f64);
        let bin = |x: f64, min: f64, w: f64| (((x - min) / w) as usize).min(grid - 1);
        let mut cells: Vec<Option<f64>> = vec![None; grid * grid];
        for c in visited {
            let a = bin(c.values[i], pi.min, wi);
            let b = bin(c.values[j], pj.min, wj);
            let cell = &mut cells[a * grid + b];
            *cell = Some(cell.map_or(c.fitness, |f: f64| f.min(c.fitness)));
        }
        let mut out = format!("{},{},fitness\n", names[i], names[j]);
        for a in 0..grid {
            let ci = pi.min + (a as f64 + 0.5) * wi;
            for b in 0..grid {
                let cj = pj.min + (b as f64 + 0.5) * wj;
                match cells[a * grid + b] {
                    Some(f) => out.push_str(&format!("{ci},{cj},{f}\n")),
                    None => out.push_str(&format!("{ci},{cj},\n")),
                }
            }
        }
        let file = format!("surface_{}_{}.csv", names[i], names[j]);
        std::fs::write(dir.join(&file), out)?;
        files.push(file);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use metaestim::RunStats;

    fn cand(values: Vec<f64>, fitness: f64, pset: u64, iteration: u64) -> Candidate {
        Candidate {
            values,
            fitness,
            pset,
            iteration,
        }
    }

    #[test]
    fn csv_rows_use_plain_decimal_text() {
        let c = cand(vec![1.5, -0.25], 0.0625, 3, 2);
        assert_eq!(candidate_row(&c, true), "1.5,-0.25,3,2,0.0625");
        assert_eq!(candidate_row(&c, false), "1.5,-0.25,3,0.0625");
    }

    #[test]
    fn csv_has_header_and_lf_endings() {
        let c = cand(vec![1.0], 2.0, 1, 0);
        let text = candidates_csv(&["x"], &[&c], true);
        assert_eq!(text, "x,pset,iteration,fitness\n1,1,0,2\n");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn surfaces_cover_cyclic_pairs_and_keep_empty_cells_empty() {
        let space = ParameterSpace::from_bounds(&[
            ("a", 0.0, 1.0),
            ("b", 0.0, 1.0),
            ("c", 0.0, 1.0),
        ])
        .unwrap();
        let visited = vec![
            cand(vec![0.1, 0.1, 0.1], 5.0, 1, 0),
            cand(vec![0.1, 0.1, 0.9], 3.0, 2, 0),
        ];
        let dir = tempfile::tempdir().unwrap();
        let files = write_surfaces(dir.path(), &space, &visited, 2).unwrap();
        assert_eq!(
            files,
            vec!["surface_a_b.csv", "surface_b_c.csv", "surface_c_a.csv"]
        );
        let ab = std::fs::read_to_string(dir.path().join("surface_a_b.csv")).unwrap();
        // both points share the (low, low) cell; min fitness wins
        assert_eq!(ab, "a,b,fitness\n0.25,0.25,3\n0.25,0.75,\n0.75,0.25,\n0.75,0.75,\n");
    }

    #[test]
    fn boundary_values_land_in_the_last_cell() {
        let space = ParameterSpace::from_bounds(&[("a", 0.0, 1.0), ("b", 0.0, 1.0)]).unwrap();
        let visited = vec![cand(vec![1.0, 1.0], 7.0, 1, 0)];
        let dir = tempfile::tempdir().unwrap();
        write_surfaces(dir.path(), &space, &visited, 2).unwrap();
        let ab = std::fs::read_to_string(dir.path().join("surface_a_b.csv")).unwrap();
        assert!(ab.ends_with("0.75,0.75,7\n"));
    }

    #[test]
    fn stats_json_carries_the_run_summary_and_options_echo() {
        let est = Estimates {
            best: cand(vec![0.0], 0.5, 1, 0),
            iteration_bests: vec![],
            visited_space: vec![],
            stats: RunStats {
                total_evals: 12,
                converged: true,
                achieved_tolerance: 0.1,
                wall_time: 0.25,
            },
        };
        let dir = tempfile::tempdir().unwrap();
        let opts = AlgorithmOptions::defaults(metaestim::Method::Saa);
        write_stats(dir.path(), &est, 99, &opts).unwrap();
        let text = std::fs::read_to_string(dir.path().join("stats.json")).unwrap();
        let json: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(json["total_evals"], 12);
        assert_eq!(json["converged"], true);
        assert_eq!(json["seed"], 99);
        assert!(json["options"]["saa"].is_object());
        assert!(text.ends_with('\n'));
    }
}
