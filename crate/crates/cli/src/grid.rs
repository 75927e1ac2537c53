//! Parsers for list and grid flag values.

use crate::error::CliError;

/// Comma-separated reals; an item `from:to:steps` expands to `steps + 1`
/// evenly spaced points including both ends.
pub fn parse_reals(text: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim) {
        if item.contains(':') {
            out.extend(parse_range(item)?);
        } else {
            out.push(real(item)?);
        }
    }
    Ok(out)
}

/// Comma-separated positive integers; an item `a..b` expands inclusively.
pub fn parse_orders(text: &str) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim) {
        if let Some((a, b)) = item.split_once("..") {
            let (a, b) = (int(a)?, int(b.trim_start_matches('='))?);
            if a > b {
                return Err(CliError::config(format!("empty range '{item}'")));
            }
            out.extend(a..=b);
        } else {
            out.push(int(item)?);
        }
    }
    if out.contains(&0) {
        return Err(CliError::config("interaction orders must be >= 1"));
    }
    Ok(out)
}

/// `name:from:to:steps`.
pub fn parse_sweep(text: &str) -> Result<(String, Vec<f64>), CliError> {
    let (name, range) = text
        .split_once(':')
        .ok_or_else(|| CliError::config(format!("sweep '{text}' is not of the form name:from:to:steps")))?;
    Ok((name.to_string(), parse_range(range)?))
}

fn parse_range(item: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = item.split(':').collect();
    let [from, to, steps] = parts[..] else {
        return Err(CliError::config(format!("range '{item}' is not of the form from:to:steps")));
    };
    let (from, to, steps) = (real(from)?, real(to)?, int(steps)?);
    if steps == 0 {
        return Ok(vec![from]);
    }
    Ok((0..=steps).map(|i| if i == steps { to } else { from + (to - from) * i as f64 / steps as f64 }).collect())
}

fn real(s: &str) -> Result<f64, CliError> {
    let x: f64 = s.trim().parse().map_err(|_| CliError::config(format!("'{s}' is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::config(format!("'{s}' is not finite")));
    }
    Ok(x)
}

fn int(s: &str) -> Result<usize, CliError> {
    s.trim().parse().map_err(|_| CliError::config(format!("'{s}' is not a non-negative integer")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_and_ranges() {
        assert_eq!(parse_reals("2,6").unwrap(), vec![2.0, 6.0]);
        assert_eq!(parse_reals("0:1:4").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_reals("0.5, 0:1:1").unwrap(), vec![0.5, 0.0, 1.0]);
        assert_eq!(parse_reals("3:3:0").unwrap(), vec![3.0]);
        assert!(parse_reals("a").is_err());
        assert!(parse_reals("0:1").is_err());
        assert!(parse_reals("inf").is_err());
    }

    #[test]
    fn orders() {
        assert_eq!(parse_orders("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_orders("1,2,3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_orders("1..=2,5").unwrap(), vec![1, 2, 5]);
        assert!(parse_orders("0").is_err());
        assert!(parse_orders("3..1").is_err());
    }

    #[test]
    fn sweeps() {
        let (name, pts) = parse_sweep("g:0:0.1:2").unwrap();
        assert_eq!(name, "g");
        assert_eq!(pts, vec![0.0, 0.05, 0.1]);
        assert!(parse_sweep("g").is_err());
    }
}
