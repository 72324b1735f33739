pub mod fit;
pub mod reproduce;
pub mod simulate;

use shapesize::{Frailty, Scenario};

pub fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|_| format!("unknown scenario `{s}` (valid: M1, M2, M3)"))
}

pub fn parse_frailty(s: &str) -> Result<Frailty, String> {
    match s.to_ascii_lowercase().as_str() {
        "one" | "1" | "degenerate_one" => Ok(Frailty::DegenerateOne),
        "gamma" => Ok(Frailty::Gamma),
        _ => Err(format!("unknown frailty `{s}` (valid: one, gamma)")),
    }
}

pub fn frailty_label(f: Frailty) -> &'static str {
    match f {
        Frailty::DegenerateOne => "W = 1",
        Frailty::Gamma => "W ~ Gamma(3, 1/3)",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_errors_list_valid_values() {
        assert_eq!(parse_scenario("m2").unwrap(), Scenario::M2);
        assert!(parse_scenario("M4").unwrap_err().contains("M1, M2, M3"));
    }

    #[test]
    fn frailty_aliases() {
        assert_eq!(parse_frailty("one").unwrap(), Frailty::DegenerateOne);
        assert_eq!(parse_frailty("degenerate_one").unwrap(), Frailty::DegenerateOne);
        assert_eq!(parse_frailty("Gamma").unwrap(), Frailty::Gamma);
        assert!(parse_frailty("lognormal").is_err());
    }
}
