//! Parsing of complex literals (`a+bi`, `a-bi`) and weight lists.

use num_complex::Complex64;

pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let body = t
        .strip_suffix('i')
        .ok_or_else(|| format!("`{s}` is not of the form a+bi"))?;
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&j| (bytes[j] == b'+' || bytes[j] == b'-') && !matches!(bytes[j - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(j) => (&body[..j], &body[j..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    let re: f64 = re.parse().map_err(|_| format!("bad real part in `{s}`"))?;
    let im: f64 = im.parse().map_err(|_| format!("bad imaginary part in `{s}`"))?;
    Ok(Complex64::new(re, im))
}

pub fn parse_k_list(s: &str) -> Result<Vec<u32>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<u32>().map_err(|_| format!("bad weight `{p}` in sweep list")))
        .collect()
}

pub fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("`{s}` is not of the form a,b"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad bound in `{s}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad bound in `{s}`"))?;
    Ok((a, b))
}
