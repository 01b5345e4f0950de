//! Text forms of complex numbers, regions, sequences and boxes.
//!
//! ```text
//! region   := "disk:" num | "circle:" num | "cardioid"
//!           | "disk_at:" num "," num "," num | "union:[" region ("," region)* "]"
//!           | JSON object {"type": "disk" | "circle" | "cardioid" | "disk_at" | "union", ...}
//! sequence := "constant:" cx | "explicit:" cx (";" cx)* "|" cx
//!           | "periodic:" cx (";" cx)* | "random:" region ":" stream
//! cx       := num | num ("+"|"-") num? "i" | num? "i"
//! ```

use std::fmt;

use crate::connectivity::GridBox;
use crate::domain::{ParamSequence, Region};
use crate::Complex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "at position {}: expected {}, found {}",
            self.position, self.expected, self.found
        )
    }
}

impl std::error::Error for ParseError {}

fn error(position: usize, expected: impl Into<String>, rest: &str) -> ParseError {
    let found = if rest.is_empty() {
        "end of input".to_string()
    } else {
        format!("{:?}", rest.chars().take(12).collect::<String>())
    };
    ParseError {
        position,
        expected: expected.into(),
        found,
    }
}

pub fn parse_number(text: &str, position: usize) -> Result<f64, ParseError> {
    let t = text.trim();
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(error(position, "a finite decimal number", text)),
    }
}

/// `0.3`, `-2`, `1+2i`, `-1-0.5e-3i`, `2i`, `i`, `-i`.
pub fn parse_complex(text: &str, position: usize) -> Result<Complex, ParseError> {
    let t = text.trim();
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex::new(parse_number(t, position)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&j| (bytes[j] == b'+' || bytes[j] == b'-') && !matches!(bytes[j - 1], b'e' | b'E'));
    let (re_text, im_text) = match split {
        Some(j) => (&body[..j], &body[j..]),
        None => ("", body),
    };
    let re = if re_text.is_empty() {
        0.0
    } else {
        parse_number(re_text, position)?
    };
    let im = match im_text {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => parse_number(s, position + re_text.len())
            .map_err(|_| error(position, "a complex number like 1-2i", text))?,
    };
    Ok(Complex::new(re, im))
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(error(self.pos, format!("`{token}`"), self.rest()))
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let len = self
            .rest()
            .find([',', ']', ':'])
            .unwrap_or(self.rest().len());
        let start = self.pos;
        let v = parse_number(&self.rest()[..len], start)?;
        self.pos += len;
        Ok(v)
    }

    fn region(&mut self) -> Result<Region, ParseError> {
        if self.eat("disk_at:") {
            let re = self.number()?;
            self.expect(",")?;
            let im = self.number()?;
            self.expect(",")?;
            let radius = self.number()?;
            Ok(Region::DiskAt {
                center: Complex::new(re, im),
                radius,
            })
        } else if self.eat("disk:") {
            Ok(Region::Disk {
                radius: self.number()?,
            })
        } else if self.eat("circle:") {
            Ok(Region::Circle {
                radius: self.number()?,
            })
        } else if self.eat("cardioid") {
            Ok(Region::MainCardioid)
        } else if self.eat("union:[") {
            let mut members = vec![self.region()?];
            while self.eat(",") {
                members.push(self.region()?);
            }
            self.expect("]")?;
            Ok(Region::Union { members })
        } else {
            Err(error(
                self.pos,
                "one of `disk:`, `circle:`, `cardioid`, `disk_at:`, `union:[`",
                self.rest(),
            ))
        }
    }
}

fn validated(region: Region, position: usize) -> Result<Region, ParseError> {
    region.validate().map_err(|e| ParseError {
        position,
        expected: "a valid region".into(),
        found: e.to_string(),
    })?;
    Ok(region)
}

pub fn parse_region(text: &str) -> Result<Region, ParseError> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        let region: Region = serde_json::from_str(trimmed).map_err(|e| ParseError {
            position: e.column().saturating_sub(1),
            expected: "a region JSON object".into(),
            found: e.to_string(),
        })?;
        return validated(region, 0);
    }
    let mut cursor = Cursor {
        text: trimmed,
        pos: 0,
    };
    let region = cursor.region()?;
    if !cursor.rest().is_empty() {
        return Err(error(cursor.pos, "end of region", cursor.rest()));
    }
    validated(region, 0)
}

fn complex_list(text: &str, offset: usize) -> Result<Vec<Complex>, ParseError> {
    let mut out = Vec::new();
    let mut pos = offset;
    for part in text.split(';') {
        out.push(parse_complex(part, pos)?);
        pos += part.len() + 1;
    }
    Ok(out)
}

/// Parses a sequence; `seed` is the master seed of `random:` sequences.
pub fn parse_sequence(text: &str, seed: u64) -> Result<ParamSequence, ParseError> {
    let text = text.trim();
    let seq = if let Some(rest) = text.strip_prefix("constant:") {
        ParamSequence::Constant(parse_complex(rest, 9)?)
    } else if let Some(rest) = text.strip_prefix("explicit:") {
        let (items, tail) = rest
            .split_once('|')
            .ok_or_else(|| error(text.len(), "`|tail`", ""))?;
        let items = if items.trim().is_empty() {
            Vec::new()
        } else {
            complex_list(items, 9)?
        };
        ParamSequence::Explicit {
            items,
            tail: parse_complex(tail, 9 + rest.find('|').unwrap_or(0) + 1)?,
        }
    } else if let Some(rest) = text.strip_prefix("periodic:") {
        ParamSequence::Periodic(complex_list(rest, 9)?)
    } else if let Some(rest) = text.strip_prefix("random:") {
        let (region_text, stream_text) = rest
            .rsplit_once(':')
            .ok_or_else(|| error(text.len(), "`:<stream>`", ""))?;
        let region = parse_region(region_text).map_err(|mut e| {
            e.position += 7;
            e
        })?;
        let stream = stream_text.trim().parse::<u64>().map_err(|_| {
            error(7 + region_text.len() + 1, "a nonnegative stream index", stream_text)
        })?;
        ParamSequence::random(region, seed, stream)
    } else {
        return Err(error(
            0,
            "one of `constant:`, `explicit:`, `periodic:`, `random:`",
            text,
        ));
    };
    seq.validate().map_err(|e| ParseError {
        position: 0,
        expected: "a valid sequence".into(),
        found: e.to_string(),
    })?;
    Ok(seq)
}

/// `cx,cy,half_width`.
pub fn parse_box(text: &str) -> Result<GridBox, ParseError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(error(0, "`center_re,center_im,half_width`", text));
    }
    let re = parse_number(parts[0], 0)?;
    let im = parse_number(parts[1], parts[0].len() + 1)?;
    let hw = parse_number(parts[2], parts[0].len() + parts[1].len() + 2)?;
    if hw <= 0.0 {
        return Err(error(0, "a positive half width", parts[2]));
    }
    Ok(GridBox {
        center: Complex::new(re, im),
        half_width: hw,
    })
}

pub fn format_box(b: &GridBox) -> String {
    format!("{},{},{}", b.center.re, b.center.im, b.half_width)
}

pub fn format_complex(c: Complex) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.im < 0.0 {
        format!("{}{}i", c.re, c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}
