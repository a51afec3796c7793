//! Textual point addresses.
//!
//! Accepted forms:
//!
//! * JSON, `{"eta_num":1,"eta_den":4,"w":[2]}` or `{"eta_real":0.7,"w":[1,2]}`
//! * `num/den:w1,w2`, the angle `π·num/den` with labels `w1, w2`
//! * `real:w1,w2`, an angle in radians, e.g. `0.7:1,2`
//!
//! The label part may be empty (`1/2` or `1/2:`).

use diamond_heat::{Address, Angle};

use crate::CliError;

pub fn parse_address(text: &str) -> Result<Address, CliError> {
    let text = text.trim();
    let bad = |why: String| CliError::Config(format!("address `{text}`: {why}"));
    if text.starts_with('{') {
        return serde_json::from_str(text).map_err(|e| bad(e.to_string()));
    }
    let (angle, labels) = text.split_once(':').unwrap_or((text, ""));
    let eta = match angle.split_once('/') {
        Some((num, den)) => {
            let num: u128 = num
                .trim()
                .parse()
                .map_err(|_| bad(format!("numerator `{num}`")))?;
            let den: u128 = den
                .trim()
                .parse()
                .map_err(|_| bad(format!("denominator `{den}`")))?;
            Angle::exact(num, den).map_err(|e| bad(e.to_string()))?
        }
        None => {
            let r: f64 = angle
                .trim()
                .parse()
                .map_err(|_| bad(format!("angle `{angle}`")))?;
            Angle::real(r).map_err(|e| bad(e.to_string()))?
        }
    };
    let branches = labels
        .split(',')
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(|w| w.parse::<u32>().map_err(|_| bad(format!("label `{w}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Address::new(eta, branches))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_forms_agree() {
        let a = parse_address("1/4:2").unwrap();
        let b = parse_address(r#"{"eta_num":1,"eta_den":4,"w":[2]}"#).unwrap();
        assert_eq!(a, b);
        let c = parse_address("0.5:1,2").unwrap();
        assert_eq!(c.branches, vec![1, 2]);
        assert_eq!(c.eta.radians(), 0.5);
        assert_eq!(parse_address("3/2").unwrap().branches, Vec::<u32>::new());
    }

    #[test]
    fn malformed_addresses_are_config_errors() {
        for bad in ["x:1", "1/0", "1/2:a", "inf", "{\"w\":[1]}"] {
            assert!(
                matches!(parse_address(bad), Err(CliError::Config(_))),
                "{bad}"
            );
        }
    }
}
