//! Image representation, PGM/PPM codecs, bilinear resizing, and circular
//! iris occlusion masking.
//!
//! The native on-disk format is 8-bit PGM (P2/P5, maxval 255); other formats
//! must be converted upstream. Overlays are written as binary PPM (P6).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// 8-bit single-channel raster. `data` is row-major, length `width * height`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Argument("image dimensions must be positive".into()));
        }
        if data.len() != width * height {
            return Err(Error::Argument(format!(
                "pixel buffer has {} bytes, expected {}x{}={}",
                data.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Constant-valued image.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("positive dims")
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("positive dims")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    /// Pixel value as f64, for interpolation arithmetic.
    #[inline]
    pub fn getf(&self, x: usize, y: usize) -> f64 {
        f64::from(self.get(x, y))
    }
}

/// Circular mask in pixel units. `cx`/`cy` are real-valued (column, row);
/// a pixel is inside iff its center (x+0.5, y+0.5) is within distance `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionCircle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl OcclusionCircle {
    pub fn new(cx: f64, cy: f64, r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::Argument(format!("occlusion radius must be >= 0, got {r}")));
        }
        if !cx.is_finite() || !cy.is_finite() {
            return Err(Error::Argument("occlusion center must be finite".into()));
        }
        Ok(Self { cx, cy, r })
    }

    /// Disk membership of the pixel at column `x`, row `y`.
    #[inline]
    pub fn contains_pixel(&self, x: usize, y: usize) -> bool {
        let dx = (x as f64 + 0.5) - self.cx;
        let dy = (y as f64 + 0.5) - self.cy;
        dx * dx + dy * dy <= self.r * self.r
    }
}

/// Zero every pixel whose center lies inside the circle; all others are
/// returned unchanged. The circle may exceed the image bounds.
pub fn apply_occlusion(img: &GrayImage, circle: &OcclusionCircle) -> GrayImage {
    let mut out = img.clone();
    // Bounding box keeps the scan linear in the disk area, not the image.
    let x0 = ((circle.cx - circle.r - 1.0).floor().max(0.0)) as usize;
    let y0 = ((circle.cy - circle.r - 1.0).floor().max(0.0)) as usize;
    let x1 = (((circle.cx + circle.r + 1.0).ceil()) as usize).min(img.width);
    let y1 = (((circle.cy + circle.r + 1.0).ceil()) as usize).min(img.height);
    for y in y0..y1 {
        for x in x0..x1 {
            if circle.contains_pixel(x, y) {
                out.data[y * img.width + x] = 0;
            }
        }
    }
    out
}

/// Bilinear resize with half-pixel sample centers and half-up rounding.
///
/// Output pixel (dx, dy) samples the source at
/// `((dx+0.5)*w/out_w - 0.5, (dy+0.5)*h/out_h - 0.5)`, clamped to the image,
/// so resizing to the source dimensions is the identity.
pub fn resize_bilinear(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Argument("resize target dimensions must be >= 1".into()));
    }
    let sx = img.width as f64 / out_w as f64;
    let sy = img.height as f64 / out_h as f64;
    let mut data = Vec::with_capacity(out_w * out_h);
    for dy in 0..out_h {
        let src_y = ((dy as f64 + 0.5) * sy - 0.5).clamp(0.0, (img.height - 1) as f64);
        let y0 = src_y.floor() as usize;
        let y1 = (y0 + 1).min(img.height - 1);
        let fy = src_y - y0 as f64;
        for dx in 0..out_w {
            let src_x = ((dx as f64 + 0.5) * sx - 0.5).clamp(0.0, (img.width - 1) as f64);
            let x0 = src_x.floor() as usize;
            let x1 = (x0 + 1).min(img.width - 1);
            let fx = src_x - x0 as f64;
            let top = (1.0 - fx) * img.getf(x0, y0) + fx * img.getf(x1, y0);
            let bot = (1.0 - fx) * img.getf(x0, y1) + fx * img.getf(x1, y1);
            let v = (1.0 - fy) * top + fy * bot;
            data.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::new(out_w, out_h, data)
}

// ---------------------------------------------------------------------------
// PGM / PPM codec
// ---------------------------------------------------------------------------

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Decode { offset: self.pos, msg: msg.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    /// Skip whitespace and `#` comment lines (comments run to end of line).
    fn skip_separators(&mut self) {
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(c) = self.peek() {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read_number(&mut self, what: &str) -> Result<u32> {
        self.skip_separators();
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err(format!("expected {what}, found {}", describe(self.peek()))));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("digits are ascii");
        text.parse::<u32>().map_err(|_| Error::Decode {
            offset: start,
            msg: format!("{what} out of range: {text}"),
        })
    }
}

fn describe(b: Option<u8>) -> String {
    match b {
        None => "end of file".into(),
        Some(b) if b.is_ascii_graphic() => format!("'{}'", b as char),
        Some(b) => format!("byte 0x{b:02x}"),
    }
}

/// Decode a binary (P5) or ASCII (P2) PGM file with maxval 255.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cur = Cursor { bytes, pos: 0 };
    let binary = match bytes {
        [b'P', b'5', ..] => true,
        [b'P', b'2', ..] => false,
        _ => return Err(cur.err("not a PGM file (expected P5 or P2 magic)")),
    };
    cur.pos = 2;
    let width = cur.read_number("width")? as usize;
    let height = cur.read_number("height")? as usize;
    if width == 0 || height == 0 {
        return Err(cur.err(format!("degenerate dimensions {width}x{height}")));
    }
    let maxval = cur.read_number("maxval")?;
    if maxval != 255 {
        return Err(cur.err(format!("unsupported maxval {maxval} (only 255)")));
    }
    let n = width * height;
    let data = if binary {
        // Exactly one whitespace byte separates the header from the payload.
        match cur.peek() {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            other => return Err(cur.err(format!("expected whitespace before payload, found {}", describe(other)))),
        }
        if bytes.len() < cur.pos + n {
            let have = bytes.len() - cur.pos;
            cur.pos = bytes.len();
            return Err(cur.err(format!("truncated payload: have {have} of {n} pixel bytes")));
        }
        bytes[cur.pos..cur.pos + n].to_vec()
    } else {
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let v = cur.read_number("pixel value")?;
            if v > 255 {
                return Err(cur.err(format!("pixel value {v} exceeds maxval 255")));
            }
            data.push(v as u8);
        }
        data
    };
    GrayImage::new(width, height, data)
}

/// Encode as binary PGM (P5). An optional `#` comment goes into the header.
pub fn encode_pgm_p5(img: &GrayImage, comment: Option<&str>) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.data.len() + 64);
    out.extend_from_slice(b"P5\n");
    if let Some(c) = comment {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    out.extend_from_slice(format!("{} {}\n255\n", img.width, img.height).as_bytes());
    out.extend_from_slice(&img.data);
    out
}

/// Encode as ASCII PGM (P2), one row of pixels per line.
pub fn encode_pgm_p2(img: &GrayImage) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&format!("P2\n{} {}\n255\n", img.width, img.height));
    for row in img.data.chunks(img.width) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

/// 8-bit RGB raster used for relevance overlays; `data` is row-major RGB
/// triples, length `3 * width * height`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    /// Grayscale image replicated onto all three channels.
    pub fn from_gray(img: &GrayImage) -> Self {
        let mut data = Vec::with_capacity(3 * img.data.len());
        for &v in &img.data {
            data.extend_from_slice(&[v, v, v]);
        }
        Self { width: img.width, height: img.height, data }
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Encode as binary PPM (P6). An optional `#` comment goes into the header.
pub fn encode_ppm_p6(img: &RgbImage, comment: Option<&str>) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.data.len() + 64);
    out.extend_from_slice(b"P6\n");
    if let Some(c) = comment {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    out.extend_from_slice(format!("{} {}\n255\n", img.width, img.height).as_bytes());
    out.extend_from_slice(&img.data);
    out
}
