//! Quantity-list parsing for the CLI: comma lists and `start:step:stop`
//! ranges with SI suffixes (`GHz`, `THz` for frequencies; `mm`, `um` for
//! distances).

/// What unit a bare number carries and which suffixes are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    FrequencyHz,
    DistanceM,
}

impl Quantity {
    fn suffixes(self) -> &'static [(&'static str, f64)] {
        match self {
            // longest first so "mhz" wins over "hz"
            Quantity::FrequencyHz => &[
                ("thz", 1e12),
                ("ghz", 1e9),
                ("mhz", 1e6),
                ("khz", 1e3),
                ("hz", 1.0),
            ],
            Quantity::DistanceM => &[("mm", 1e-3), ("um", 1e-6), ("cm", 1e-2), ("m", 1.0)],
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Quantity::FrequencyHz => "frequency",
            Quantity::DistanceM => "distance",
        }
    }
}

/// Parse one number with an optional SI suffix.
pub fn parse_quantity(text: &str, kind: Quantity) -> Result<f64, String> {
    let trimmed = text.trim();
    let lower = trimmed.to_ascii_lowercase();
    let (digits, scale) = kind
        .suffixes()
        .iter()
        .find_map(|(suffix, scale)| {
            lower
                .strip_suffix(suffix)
                .map(|rest| (rest.trim_end(), *scale))
        })
        .unwrap_or((lower.as_str(), 1.0));
    let value: f64 = digits
        .parse()
        .map_err(|_| format!("invalid {} '{trimmed}'", kind.describe()))?;
    Ok(value * scale)
}

/// Parse a comma list where each item is a value or a `start:step:stop`
/// range (endpoints inclusive when they land on the step grid).
pub fn parse_list(text: &str, kind: Quantity) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(format!("empty item in {} list '{text}'", kind.describe()));
        }
        if item.contains(':') {
            let parts: Vec<&str> = item.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("range '{item}' must be start:step:stop"));
            }
            let start = parse_quantity(parts[0], kind)?;
            let step = parse_quantity(parts[1], kind)?;
            let stop = parse_quantity(parts[2], kind)?;
            #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN fails closed
            if !(step > 0.0) {
                return Err(format!("range '{item}' needs a positive step"));
            }
            if stop < start {
                return Err(format!("range '{item}' has stop below start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            for i in 0..=count {
                out.push(start + i as f64 * step);
            }
        } else {
            out.push(parse_quantity(item, kind)?);
        }
    }
    Ok(out)
}
