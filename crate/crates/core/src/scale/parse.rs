//! The `name[:param]` mini-language and the `r,theta,d1,d2` CSV format.
//!
//! ```text
//! power:2            r^2
//! exp_minus_one      e^r - 1         (exp_minus_one:0.5 for e^{r/2} - 1)
//! log1p              log(1 + r)
//! exp_sqrt           e^{sqrt r} - 1
//! compose:A,B        A(B(r)); either side may be parenthesised
//! tabulated:PATH     CSV with header r,theta,d1,d2
//! ```

use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use super::{ScaleError, ScaleSpec, ScaleTable};

impl ScaleSpec {
    /// Parses a spec string, reading any `tabulated:` file it references.
    pub fn parse(text: &str) -> Result<Self, ScaleError> {
        let mut p = Parser { s: text.trim(), pos: 0 };
        let spec = p.term()?;
        if p.pos != p.s.len() {
            return Err(ScaleError::Parse(format!(
                "trailing input {:?} in {text:?}",
                &p.s[p.pos..]
            )));
        }
        Ok(spec)
    }
}

impl FromStr for ScaleSpec {
    type Err = ScaleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScaleSpec::parse(s)
    }
}

struct Parser<'a> {
    s: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn rest(&self) -> &str {
        &self.s[self.pos..]
    }

    fn eat(&mut self, c: char) -> bool {
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ScaleError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ScaleError::Parse(format!("expected {c:?} at {:?}", self.rest())))
        }
    }

    fn word(&mut self) -> &str {
        let start = self.pos;
        let end = self.rest().find([':', ',', ')', '(']).unwrap_or(self.rest().len());
        self.pos += end;
        self.s[start..start + end].trim()
    }

    fn number(&mut self) -> Result<f64, ScaleError> {
        let w = self.word().to_string();
        w.parse::<f64>()
            .map_err(|_| ScaleError::Parse(format!("expected a number, got {w:?}")))
    }

    fn term(&mut self) -> Result<ScaleSpec, ScaleError> {
        if self.eat('(') {
            let inner = self.term()?;
            self.expect(')')?;
            return Ok(inner);
        }
        let name = self.word().to_string();
        match name.as_str() {
            "power" => {
                self.expect(':')?;
                ScaleSpec::power(self.number()?)
            }
            "exp_minus_one" => {
                if self.eat(':') {
                    ScaleSpec::exp_minus_one_rate(self.number()?)
                } else {
                    Ok(ScaleSpec::exp_minus_one())
                }
            }
            "log1p" => Ok(ScaleSpec::log1p()),
            "exp_sqrt" => Ok(ScaleSpec::exp_sqrt()),
            "identity" | "id" => ScaleSpec::power(1.0),
            "compose" => {
                self.expect(':')?;
                let outer = self.term()?;
                self.expect(',')?;
                let inner = self.term()?;
                Ok(ScaleSpec::composed(outer, inner))
            }
            "tabulated" => {
                self.expect(':')?;
                let path = self.word().to_string();
                if path.is_empty() {
                    return Err(ScaleError::Parse("tabulated: needs a file path".into()));
                }
                Ok(ScaleSpec::tabulated(ScaleTable::from_csv_path(&path)?))
            }
            "" => Err(ScaleError::Parse(format!("empty scale spec at {:?}", self.rest()))),
            other => Err(ScaleError::Parse(format!(
                "unknown scale function {other:?} (expected power, exp_minus_one, log1p, exp_sqrt, compose, tabulated)"
            ))),
        }
    }
}

impl ScaleTable {
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, ScaleError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| ScaleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::from_csv_reader(file)?.with_label(path.display().to_string()))
    }

    /// Reads a table with header `r,theta,d1,d2`.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self, ScaleError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["r", "theta", "d1", "d2"];
        if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(ScaleError::InvalidTable(format!(
                "header must be r,theta,d1,d2 (got {})",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut cols: [Vec<f64>; 4] = Default::default();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 4 {
                return Err(ScaleError::InvalidTable(format!("row {} has {} fields", line + 1, record.len())));
            }
            for (c, field) in record.iter().enumerate() {
                let v = field.parse::<f64>().map_err(|_| {
                    ScaleError::InvalidTable(format!("row {}: {field:?} is not a number", line + 1))
                })?;
                cols[c].push(v);
            }
        }
        let [r, theta, d1, d2] = cols;
        ScaleTable::new(r, theta, d1, d2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::ScaleKind;

    #[test]
    fn parses_catalog_names() {
        assert_eq!(ScaleSpec::parse("power:2").unwrap(), ScaleSpec::power(2.0).unwrap());
        assert_eq!(ScaleSpec::parse("exp_sqrt").unwrap(), ScaleSpec::exp_sqrt());
        assert_eq!(ScaleSpec::parse(" log1p ").unwrap(), ScaleSpec::log1p());
        assert_eq!(
            ScaleSpec::parse("exp_minus_one:0.5").unwrap(),
            ScaleSpec::exp_minus_one_rate(0.5).unwrap()
        );
    }

    #[test]
    fn parses_nested_composition() {
        let s = ScaleSpec::parse("compose:compose:power:2,exp_sqrt,log1p").unwrap();
        let ScaleKind::Composed { outer, inner } = s.kind() else { panic!() };
        assert!(matches!(outer.kind(), ScaleKind::Composed { .. }));
        assert_eq!(**inner, ScaleSpec::log1p());
        let again = ScaleSpec::parse(&s.to_string()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "power", "power:-1", "power:x", "cosh", "compose:power:2", "log1p,"] {
            assert!(ScaleSpec::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn reads_csv_table() {
        let mut text = String::from("r,theta,d1,d2\n");
        for k in 0..=40 {
            let r = k as f64 * 0.05;
            text.push_str(&format!("{r},{},{},{}\n", r * r, 2.0 * r, 2.0));
        }
        let t = ScaleTable::from_csv_reader(text.as_bytes()).unwrap();
        let spec = ScaleSpec::tabulated(t);
        assert!((spec.eval(1.234, 0).unwrap() - 1.234f64.powi(2)).abs() < 1e-12);
        assert!((spec.eval(1.234, 1).unwrap() - 2.468).abs() < 1e-12);
        assert!(matches!(spec.eval(2.5, 0), Err(ScaleError::Domain { .. })));
    }

    #[test]
    fn csv_needs_zero_first_row() {
        let text = "r,theta,d1,d2\n0.1,0.01,0.2,2\n0.2,0.04,0.4,2\n0.3,0.09,0.6,2\n";
        assert!(ScaleTable::from_csv_reader(text.as_bytes()).is_err());
    }
}
