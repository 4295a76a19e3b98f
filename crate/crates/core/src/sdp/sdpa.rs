//! SDPA sparse (`.dat-s`) export and import.
//!
//! SDPA states `min c^T x s.t. sum_i x_i F_i - F_0 >= 0`, so the constant
//! matrices are written negated. Scalar inequalities go into one diagonal
//! block and equalities into another as pairs of opposite rows. Comment
//! lines starting with `* ccmpc` carry what SDPA cannot express (objective
//! constant, block names, segments, block roles); files without them are
//! read as plain SDPA with every diagonal block taken as inequalities.
//! The grammar is described in `docs/sdpa-format.md`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::problem::{AffineExpr, PsdBlock, SdpProblem, Segment};
use crate::error::{Error, Result};

const TAG: &str = "* ccmpc";

pub fn write_sdpa(problem: &SdpProblem) -> String {
    let mut out = String::new();
    let n_psd = problem.blocks.len();
    let has_ineq = !problem.inequalities.is_empty();
    let has_eq = !problem.equalities.is_empty();
    let _ = writeln!(
        out,
        "{TAG} objective-constant {:e}",
        problem.objective.constant
    );
    for b in &problem.blocks {
        let _ = writeln!(out, "{TAG} block {}", b.name);
    }
    if has_ineq {
        let _ = writeln!(out, "{TAG} inequality-block {}", n_psd + 1);
    }
    if has_eq {
        let _ = writeln!(
            out,
            "{TAG} equality-block {}",
            n_psd + 1 + has_ineq as usize
        );
    }
    for s in &problem.segments {
        let _ = writeln!(
            out,
            "{TAG} segment {} {} {} {}",
            s.name, s.offset, s.num_vars, s.max_degree
        );
    }

    let mut sizes: Vec<i64> = problem.blocks.iter().map(|b| b.dim() as i64).collect();
    if has_ineq {
        sizes.push(-(problem.inequalities.len() as i64));
    }
    if has_eq {
        sizes.push(-2 * problem.equalities.len() as i64);
    }
    let _ = writeln!(out, "{}", problem.num_vars);
    let _ = writeln!(out, "{}", sizes.len());
    let _ = writeln!(
        out,
        "{}",
        sizes
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
    let mut c = vec![0.0; problem.num_vars];
    for &(i, v) in &problem.objective.terms {
        c[i] += v;
    }
    let _ = writeln!(
        out,
        "{}",
        c.iter()
            .map(|v| format!("{v:e}"))
            .collect::<Vec<_>>()
            .join(" ")
    );

    // (matrix, block, row, col) -> value, sorted for stable output
    let mut entries: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
    let mut push = |blk: usize, i: usize, j: usize, e: &AffineExpr, sign: f64| {
        if e.constant != 0.0 {
            entries.insert((0, blk, i, j), -sign * e.constant);
        }
        for &(k, v) in &e.terms {
            entries.insert((k + 1, blk, i, j), sign * v);
        }
    };
    for (b, block) in problem.blocks.iter().enumerate() {
        for (i, j, e) in block.upper_entries() {
            push(b + 1, i + 1, j + 1, e, 1.0);
        }
    }
    let mut next = n_psd + 1;
    if has_ineq {
        for (l, e) in problem.inequalities.iter().enumerate() {
            push(next, l + 1, l + 1, e, 1.0);
        }
        next += 1;
    }
    if has_eq {
        for (l, e) in problem.equalities.iter().enumerate() {
            push(next, 2 * l + 1, 2 * l + 1, e, 1.0);
            push(next, 2 * l + 2, 2 * l + 2, e, -1.0);
        }
    }
    for ((m, b, i, j), v) in entries {
        let _ = writeln!(out, "{m} {b} {i} {j} {v:e}");
    }
    out
}

pub fn read_sdpa(text: &str) -> Result<SdpProblem> {
    let mut constant = 0.0;
    let mut names: Vec<String> = Vec::new();
    let mut ineq_block = None;
    let mut eq_block = None;
    let mut segments = Vec::new();
    let mut tagged = false;
    let mut tokens: Vec<(usize, String)> = Vec::new();
    // header counts may share lines, so the numeric section is tokenized
    let mut header_done = 0usize;
    let mut entry_lines: Vec<(usize, &str)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix(TAG) {
            tagged = true;
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let bad = |m: &str| Error::SdpFormat {
                line: line_no,
                message: m.to_string(),
            };
            match parts.as_slice() {
                ["objective-constant", v] => constant = parse_f64(v, line_no)?,
                ["block", name] => names.push(name.to_string()),
                ["inequality-block", b] => ineq_block = Some(parse_usize(b, line_no)?),
                ["equality-block", b] => eq_block = Some(parse_usize(b, line_no)?),
                ["segment", name, off, nv, deg] => segments.push(Segment {
                    name: name.to_string(),
                    offset: parse_usize(off, line_no)?,
                    num_vars: parse_usize(nv, line_no)?,
                    max_degree: parse_usize(deg, line_no)? as u32,
                }),
                _ => return Err(bad("unrecognized metadata line")),
            }
            continue;
        }
        if line.is_empty() || line.starts_with('*') || line.starts_with('"') {
            continue;
        }
        if header_done < 4 {
            // trailing `=name` annotations are ignored
            let numeric = line.split('=').next().unwrap_or("");
            for t in numeric
                .split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
            {
                if !t.is_empty() {
                    tokens.push((line_no, t.to_string()));
                }
            }
            // m, nblocks, sizes..., then m costs
            header_done = header_progress(&tokens);
        } else {
            entry_lines.push((line_no, line));
        }
    }

    let mut it = tokens.into_iter();
    let mut next = |what: &str| -> Result<(usize, String)> {
        it.next().ok_or_else(|| Error::SdpFormat {
            line: 0,
            message: format!("missing {what}"),
        })
    };
    let (ln, t) = next("variable count")?;
    let m = parse_usize(&t, ln)?;
    let (ln, t) = next("block count")?;
    let nb = parse_usize(&t, ln)?;
    let mut sizes = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, t) = next("block size")?;
        let s: i64 = t.parse().map_err(|_| Error::SdpFormat {
            line: ln,
            message: format!("bad block size '{t}'"),
        })?;
        if s == 0 {
            return Err(Error::SdpFormat {
                line: ln,
                message: "zero block size".into(),
            });
        }
        sizes.push(s);
    }
    let mut cost = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, t) = next("objective coefficient")?;
        cost.push(parse_f64(&t, ln)?);
    }

    // per block: dense upper triangle of affine expressions
    let mut exprs: Vec<BTreeMap<(usize, usize), AffineExpr>> = vec![BTreeMap::new(); nb];
    for (ln, line) in entry_lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(Error::SdpFormat {
                line: ln,
                message: "expected 'matrix block row col value'".into(),
            });
        }
        let mat = parse_usize(parts[0], ln)?;
        let blk = parse_usize(parts[1], ln)?;
        let mut i = parse_usize(parts[2], ln)?;
        let mut j = parse_usize(parts[3], ln)?;
        let v = parse_f64(parts[4], ln)?;
        if mat > m || blk == 0 || blk > nb {
            return Err(Error::SdpFormat {
                line: ln,
                message: "matrix or block index out of range".into(),
            });
        }
        let size = sizes[blk - 1];
        let dim = size.unsigned_abs() as usize;
        if i == 0 || j == 0 || i > dim || j > dim || (size < 0 && i != j) {
            return Err(Error::SdpFormat {
                line: ln,
                message: "entry outside block".into(),
            });
        }
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        let e = exprs[blk - 1].entry((i - 1, j - 1)).or_default();
        if mat == 0 {
            e.constant -= v;
        } else {
            e.terms.push((mat - 1, v));
        }
    }
    for map in &mut exprs {
        for e in map.values_mut() {
            e.normalize();
        }
    }

    let mut problem = SdpProblem::new(m);
    problem.objective = AffineExpr::from_terms(constant, cost.into_iter().enumerate());
    problem.segments = segments;
    let mut psd_index = 0;
    for (b, (size, map)) in sizes.iter().zip(exprs).enumerate() {
        let id = b + 1;
        let dim = size.unsigned_abs() as usize;
        if tagged && Some(id) == eq_block {
            if dim % 2 != 0 {
                return Err(Error::SdpFormat {
                    line: 0,
                    message: "equality block must have even size".into(),
                });
            }
            for l in 0..dim / 2 {
                problem
                    .equalities
                    .push(map.get(&(2 * l, 2 * l)).cloned().unwrap_or_default());
            }
        } else if *size < 0 && (!tagged || Some(id) == ineq_block) {
            for l in 0..dim {
                problem
                    .inequalities
                    .push(map.get(&(l, l)).cloned().unwrap_or_default());
            }
        } else {
            let name = names
                .get(psd_index)
                .cloned()
                .unwrap_or_else(|| format!("block{id}"));
            psd_index += 1;
            let mut block = PsdBlock::new(name, dim);
            for ((i, j), e) in map {
                block.set(i, j, e);
            }
            problem.blocks.push(block);
        }
    }
    Ok(problem)
}

/// 4 once the header (counts, sizes and costs) is complete.
fn header_progress(tokens: &[(usize, String)]) -> usize {
    let get = |k: usize| tokens.get(k).and_then(|t| t.1.parse::<i64>().ok());
    let (Some(m), Some(nb)) = (get(0), get(1)) else {
        return 0;
    };
    if tokens.len() >= 2 + nb.max(0) as usize + m.max(0) as usize {
        4
    } else {
        1
    }
}

fn parse_usize(t: &str, line: usize) -> Result<usize> {
    t.parse().map_err(|_| Error::SdpFormat {
        line,
        message: format!("expected a nonnegative integer, got '{t}'"),
    })
}

fn parse_f64(t: &str, line: usize) -> Result<f64> {
    t.parse().map_err(|_| Error::SdpFormat {
        line,
        message: format!("expected a number, got '{t}'"),
    })
}
