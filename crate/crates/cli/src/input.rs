use std::fs;
use std::path::Path;

use crate::Failure;

/// Reads one number per line. Blank lines and lines starting with `#` are
/// skipped; anything else must parse as a finite decimal.
pub fn read_sample(path: &Path) -> Result<Vec<f64>, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let values = parse_sample(&text)
        .map_err(|(line, msg)| Failure::input(format!("{}:{line}: {msg}", path.display())))?;
    if values.is_empty() {
        return Err(Failure::input(format!("{}: no values", path.display())));
    }
    Ok(values)
}

pub fn parse_sample(text: &str) -> Result<Vec<f64>, (usize, String)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => return Err((i + 1, format!("non-finite value '{line}'"))),
            Err(_) => return Err((i + 1, format!("not a number: '{line}'"))),
        }
    }
    Ok(out)
}

/// `"10:20,60:60"` → `[(10, 20), (60, 60)]`.
pub fn parse_pairs(s: &str) -> Result<Vec<(u64, u64)>, String> {
    s.split(',')
        .map(|part| {
            let (a, b) = part
                .trim()
                .split_once(':')
                .ok_or_else(|| format!("expected n:m, got '{part}'"))?;
            let n = a.trim().parse().map_err(|_| format!("bad n in '{part}'"))?;
            let m = b.trim().parse().map_err(|_| format!("bad m in '{part}'"))?;
            Ok((n, m))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let v = parse_sample("# header\n1.5\n\n  -2e3 \n#x\n0").unwrap();
        assert_eq!(v, vec![1.5, -2000.0, 0.0]);
    }

    #[test]
    fn reports_line_numbers() {
        assert_eq!(parse_sample("1\n2\nabc\n").unwrap_err().0, 3);
        assert_eq!(parse_sample("# c\nNaN").unwrap_err().0, 2);
    }

    #[test]
    fn pairs() {
        assert_eq!(
            parse_pairs("10:20, 60:60").unwrap(),
            vec![(10, 20), (60, 60)]
        );
        assert!(parse_pairs("10-20").is_err());
        assert!(parse_pairs("a:3").is_err());
    }
}
