//! Binary portable graymap (P5) encoding with comment lines.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub comments: Vec<String>,
    pub pixels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmError(pub String);

impl fmt::Display for PgmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed graymap: {}", self.0)
    }
}

impl std::error::Error for PgmError {}

impl Graymap {
    /// `P5`, one comment line per entry, then `width height` and maxval 255.
    pub fn encode(&self) -> Vec<u8> {
        assert_eq!(self.pixels.len(), self.width * self.height);
        let mut out = Vec::with_capacity(self.pixels.len() + 64);
        out.extend_from_slice(b"P5\n");
        for c in &self.comments {
            debug_assert!(!c.contains('\n'));
            out.extend_from_slice(b"# ");
            out.extend_from_slice(c.as_bytes());
            out.push(b'\n');
        }
        out.extend_from_slice(format!("{} {}\n255\n", self.width, self.height).as_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PgmError> {
        let mut pos = 0;
        let mut comments = Vec::new();
        let mut fields: Vec<usize> = Vec::new();
        let mut magic_seen = false;
        while fields.len() < 3 {
            skip_space(bytes, &mut pos);
            if pos >= bytes.len() {
                return Err(PgmError("truncated header".into()));
            }
            if bytes[pos] == b'#' {
                let end = bytes[pos..]
                    .iter()
                    .position(|&b| b == b'\n')
                    .map_or(bytes.len(), |e| pos + e);
                let text = String::from_utf8_lossy(&bytes[pos + 1..end]);
                comments.push(text.strip_prefix(' ').unwrap_or(&text).to_string());
                pos = end;
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let token = std::str::from_utf8(&bytes[start..pos])
                .map_err(|_| PgmError("non-ascii header".into()))?;
            if !magic_seen {
                if token != "P5" {
                    return Err(PgmError(format!("expected P5, found {token:?}")));
                }
                magic_seen = true;
            } else {
                fields.push(
                    token
                        .parse()
                        .map_err(|_| PgmError(format!("bad header field {token:?}")))?,
                );
            }
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let (width, height, maxval) = (fields[0], fields[1], fields[2]);
        if maxval != 255 {
            return Err(PgmError(format!("unsupported maxval {maxval}")));
        }
        let pixels = bytes
            .get(pos..pos + width * height)
            .ok_or_else(|| PgmError("truncated raster".into()))?
            .to_vec();
        Ok(Graymap {
            width,
            height,
            comments,
            pixels,
        })
    }
}

fn skip_space(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_bytes() {
        let g = Graymap {
            width: 2,
            height: 2,
            comments: vec!["seed = 1".into()],
            pixels: vec![0, 255, 7, 254],
        };
        let bytes = g.encode();
        assert_eq!(bytes, b"P5\n# seed = 1\n2 2\n255\n\x00\xff\x07\xfe");
        assert_eq!(Graymap::decode(&bytes).unwrap(), g);
    }

    #[test]
    fn rejects_other_formats() {
        assert!(Graymap::decode(b"P6\n1 1\n255\n\x00\x00\x00").is_err());
        assert!(Graymap::decode(b"P5\n2 2\n255\n\x00").is_err());
    }
}
