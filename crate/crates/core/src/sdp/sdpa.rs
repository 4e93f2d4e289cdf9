use super::{BlockSdp, SdpBlock};
use crate::error::{Error, Result};
use std::fmt::Write;

/// Writes the problem in sparse SDPA format. Block labels go to leading comment lines.
pub fn export_sdpa(problem: &BlockSdp) -> String {
    let mut out = String::new();
    for (i, b) in problem.blocks.iter().enumerate() {
        if !b.label.is_empty() {
            let _ = writeln!(out, "* block {}: {}", i + 1, b.label);
        }
    }
    let _ = writeln!(out, "{}", problem.num_vars());
    let _ = writeln!(out, "{}", problem.blocks.len());
    let sizes: Vec<String> = problem
        .blocks
        .iter()
        .map(|b| {
            if b.diagonal {
                format!("-{}", b.size)
            } else {
                b.size.to_string()
            }
        })
        .collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let cost: Vec<String> = problem.cost.iter().map(|c| format!("{c:.16e}")).collect();
    let _ = writeln!(out, "{}", cost.join(" "));
    for (bi, b) in problem.blocks.iter().enumerate() {
        for e in b.entries() {
            let _ = writeln!(
                out,
                "{} {} {} {} {:.16e}",
                e.mat,
                bi + 1,
                e.row + 1,
                e.col + 1,
                e.value
            );
        }
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn header_tokens(s: &str) -> Vec<&str> {
    s.split(|c: char| c.is_whitespace() || ",{}()".contains(c))
        .filter(|t| !t.is_empty())
        .collect()
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot read {what} from '{tok}'")))
}

/// Reads a sparse SDPA problem. Leading lines starting with '"' or '*' are comments.
pub fn import_sdpa(source: &str) -> Result<BlockSdp> {
    let mut lines = source.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut labels: Vec<(usize, String)> = Vec::new();
    let mut next_header = |labels: &mut Vec<(usize, String)>| -> Result<(usize, &str)> {
        for (no, l) in lines.by_ref() {
            if l.is_empty() {
                continue;
            }
            if l.starts_with('"') || l.starts_with('*') {
                if let Some(rest) = l.strip_prefix("* block ") {
                    if let Some((idx, label)) = rest.split_once(": ") {
                        if let Ok(idx) = idx.parse::<usize>() {
                            labels.push((idx, label.to_string()));
                        }
                    }
                }
                continue;
            }
            return Ok((no, l));
        }
        Err(parse_err(0, "unexpected end of file in header"))
    };

    let (no, l) = next_header(&mut labels)?;
    let tok = header_tokens(l);
    let p: usize = parse_num(tok.first().ok_or_else(|| parse_err(no, "missing mDIM"))?, no, "mDIM")?;
    let (no, l) = next_header(&mut labels)?;
    let tok = header_tokens(l);
    let nb: usize = parse_num(tok.first().ok_or_else(|| parse_err(no, "missing nBLOCK"))?, no, "nBLOCK")?;
    let (no, l) = next_header(&mut labels)?;
    let tok = header_tokens(l);
    if tok.len() < nb {
        return Err(parse_err(no, format!("expected {nb} block sizes, found {}", tok.len())));
    }
    let mut blocks = Vec::with_capacity(nb);
    for t in &tok[..nb] {
        let s: i64 = parse_num(t, no, "block size")?;
        if s == 0 {
            return Err(parse_err(no, "block size 0"));
        }
        blocks.push(SdpBlock::new(s.unsigned_abs() as usize, s < 0, ""));
    }
    let mut cost = Vec::with_capacity(p);
    while cost.len() < p {
        let (no, l) = next_header(&mut labels)?;
        for t in header_tokens(l) {
            if cost.len() == p {
                break;
            }
            cost.push(parse_num::<f64>(t, no, "cost")?);
        }
    }
    drop(next_header);

    let mut seen = std::collections::HashSet::new();
    for (no, l) in lines {
        if l.is_empty() || l.starts_with('"') || l.starts_with('*') {
            continue;
        }
        let tok = header_tokens(l);
        if tok.len() < 5 {
            return Err(parse_err(no, "entry lines need 'matno blkno i j value'"));
        }
        let mat: usize = parse_num(tok[0], no, "matno")?;
        let blk: usize = parse_num(tok[1], no, "blkno")?;
        let i: usize = parse_num(tok[2], no, "row")?;
        let j: usize = parse_num(tok[3], no, "column")?;
        let v: f64 = parse_num(tok[4], no, "value")?;
        if mat > p {
            return Err(parse_err(no, format!("matno {mat} exceeds mDIM {p}")));
        }
        if blk == 0 || blk > nb {
            return Err(parse_err(no, format!("block {blk} out of range")));
        }
        let b = &mut blocks[blk - 1];
        if i == 0 || j == 0 || i > b.size || j > b.size {
            return Err(parse_err(no, format!("index ({i},{j}) outside block of size {}", b.size)));
        }
        if b.diagonal && i != j {
            return Err(parse_err(no, "off-diagonal entry in a diagonal block"));
        }
        if !v.is_finite() {
            return Err(parse_err(no, "non-finite value"));
        }
        let (r, c) = (i.min(j) - 1, i.max(j) - 1);
        if !seen.insert((mat, blk, r, c)) {
            return Err(parse_err(no, "duplicate entry"));
        }
        b.add(mat, r, c, v);
    }
    for (idx, label) in labels {
        if idx >= 1 && idx <= nb {
            blocks[idx - 1].label = label;
        }
    }
    let mut problem = BlockSdp::new(cost);
    for b in blocks {
        problem.push_block(b);
    }
    Ok(problem)
}
