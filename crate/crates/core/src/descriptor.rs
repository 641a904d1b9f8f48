//! String descriptors of the form `name:key=value,key=value`.
//!
//! List-valued keys are written with commas and separated by semicolons,
//! as in `step:c=2,-1;a=0,0.5;b=0.5,1`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    raw: String,
    name: String,
    params: Vec<(String, String)>,
}

impl Descriptor {
    pub fn parse(raw: &str) -> Result<Self> {
        let raw = raw.trim();
        let (name, rest) = match raw.split_once(':') {
            Some((n, r)) => (n.trim(), r.trim()),
            None => (raw, ""),
        };
        if name.is_empty() {
            return Err(Error::config(format!("empty descriptor name in `{raw}`")));
        }
        let mut params: Vec<(String, String)> = Vec::new();
        for token in rest.split([',', ';']).map(str::trim).filter(|t| !t.is_empty()) {
            match token.split_once('=') {
                Some((k, v)) => {
                    let key = k.trim().to_ascii_lowercase();
                    if params.iter().any(|(existing, _)| *existing == key) {
                        return Err(Error::config(format!("duplicate key `{key}` in `{raw}`")));
                    }
                    params.push((key, v.trim().to_string()));
                }
                None => match params.last_mut() {
                    Some((_, v)) => {
                        v.push(',');
                        v.push_str(token);
                    }
                    None => return Err(Error::config(format!("malformed token `{token}` in `{raw}`"))),
                },
            }
        }
        Ok(Descriptor { raw: raw.to_string(), name: name.to_ascii_lowercase(), params })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    /// Rejects keys outside `allowed`, echoing the first offender.
    pub fn expect_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            Some((k, _)) => Err(Error::config(format!("unknown key `{k}` in `{}`", self.raw))),
            None => Ok(()),
        }
    }

    fn value(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.value(key).map(|v| parse_f64(v, &self.raw)).transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.value(key) {
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| Error::config(format!("`{v}` is not a non-negative integer in `{}`", self.raw))),
            None => Ok(default),
        }
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.value(key).map(|v| v.split(',').map(|x| parse_f64(x.trim(), &self.raw)).collect()).transpose()
    }
}

fn parse_f64(v: &str, raw: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| Error::config(format!("`{v}` is not a number in `{raw}`")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::config(format!("`{v}` is not finite in `{raw}`")))
    }
}
