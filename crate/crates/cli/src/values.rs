use std::f64::consts::PI;

use ndde_core::Vec3;

/// A finite number, optionally written with `pi`: `2pi`, `-pi/2`, `0.5*pi`.
pub fn parse_scalar(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let bad = || format!("cannot parse number '{s}'");
    let value = match s.find("pi") {
        Some(idx) => {
            let coef = s[..idx].trim_end_matches('*');
            let c = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| bad())?,
            };
            let rest = &s[idx + 2..];
            let d = match rest.strip_prefix('/') {
                None if rest.is_empty() => 1.0,
                Some(d) => d.parse::<f64>().map_err(|_| bad())?,
                None => return Err(bad()),
            };
            c * PI / d
        }
        None => s.parse::<f64>().map_err(|_| bad())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("'{s}' is not a finite number"))
    }
}

/// `x,y` or `x,y,z`; a missing z is 0.
pub fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts = s.split(',').map(parse_scalar).collect::<Result<Vec<_>, _>>()?;
    match parts[..] {
        [x, y] => Ok(Vec3::new(x, y, 0.0)),
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected 2 or 3 comma-separated components, got '{s}'")),
    }
}

/// `re,im` or a bare real number.
pub fn parse_complex(s: &str) -> Result<[f64; 2], String> {
    let parts = s.split(',').map(parse_scalar).collect::<Result<Vec<_>, _>>()?;
    match parts[..] {
        [re] => Ok([re, 0.0]),
        [re, im] => Ok([re, im]),
        _ => Err(format!("expected 're' or 're,im', got '{s}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn pi_tokens() {
        assert_eq!(parse_scalar("2pi").unwrap(), TAU);
        assert_eq!(parse_scalar("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_scalar("0.5*pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_scalar(" 1e-3 ").unwrap(), 1e-3);
        assert!(parse_scalar("pix").is_err());
        assert!(parse_scalar("inf").is_err());
        assert!(parse_scalar("").is_err());
    }

    #[test]
    fn vectors() {
        assert_eq!(parse_vec3("2pi,0").unwrap(), Vec3::new(TAU, 0.0, 0.0));
        assert_eq!(parse_vec3("1,2,3").unwrap(), Vec3::new(1.0, 2.0, 3.0));
        assert!(parse_vec3("1").is_err());
        assert!(parse_vec3("1,2,3,4").is_err());
        assert_eq!(parse_complex("0.5").unwrap(), [0.5, 0.0]);
    }
}
