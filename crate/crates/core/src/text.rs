//! Shared text formatting for CSV outputs.

/// 17 significant digits, which round-trips every finite `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn push_row(line: &mut String, values: impl IntoIterator<Item = f64>) {
    for v in values {
        line.push(',');
        line.push_str(&fmt_f64(v));
    }
}

/// `(line number, key, value)`.
pub type KvLine = (usize, String, String);

/// Parse `key = value` lines. Blank lines and `#` comments are skipped;
/// returns `(line number, key, value)` triples in file order.
pub fn parse_kv(text: &str) -> Result<Vec<KvLine>, (usize, String)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err((i + 1, format!("expected `key = value`, got {raw:?}")));
        };
        let k = k.trim();
        if k.is_empty() {
            return Err((i + 1, "empty key".into()));
        }
        out.push((i + 1, k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn fmt_list(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for &x in &[
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            123_456_789.123_456_79,
            f64::MAX,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17);
        }
    }
}
