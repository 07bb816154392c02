//! Byte-color visualization of generated test inputs.
//!
//! Inputs are recorded one per line in a hex "color dump"; each line is later
//! rendered as a grid of square boxes, one per byte, where byte `xy` is drawn
//! with color `#xy0000`.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use thiserror::Error;

pub const DEFAULT_BOXES_PER_ROW: u32 = 32;
pub const DEFAULT_BOX_PX: u32 = 8;
const WHITE: Rgb<u8> = Rgb([0xFF, 0xFF, 0xFF]);

#[derive(Debug, Error)]
pub enum VizError {
    #[error("dump line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("writing dump entry {index}: {source}")]
    Write {
        index: u64,
        #[source]
        source: io::Error,
    },
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("encoding {}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn byte_to_color(b: u8) -> [u8; 3] {
    [b, 0, 0]
}

/// `#rrggbb` in lowercase.
pub fn color_hex(rgb: [u8; 3]) -> String {
    format!("#{}", hex::encode(rgb))
}

pub fn encode_line(input: &[u8]) -> String {
    hex::encode(input)
}

/// Parses one dump line. `line` is 1-based and only used for errors.
pub fn parse_line(text: &str, line: usize) -> Result<Vec<u8>, VizError> {
    if text.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(VizError::Parse { line, message: "uppercase hex digit".into() });
    }
    hex::decode(text).map_err(|e| VizError::Parse { line, message: e.to_string() })
}

/// Parses a whole dump. An empty string has no entries; `"\n"` has one empty entry.
pub fn parse_dump(text: &str) -> Result<Vec<Vec<u8>>, VizError> {
    text.lines().enumerate().map(|(i, l)| parse_line(l, i + 1)).collect()
}

pub fn encode_dump<I, B>(inputs: I) -> String
where
    I: IntoIterator<Item = B>,
    B: AsRef<[u8]>,
{
    let mut out = String::new();
    for input in inputs {
        out.push_str(&encode_line(input.as_ref()));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlushPolicy {
    EveryLine,
    EveryN(u64),
}

/// Append-only writer for a color dump.
pub struct DumpWriter<W: Write> {
    sink: BufWriter<W>,
    flush: FlushPolicy,
    max_entries: Option<u64>,
    written: u64,
}

impl DumpWriter<File> {
    /// Opens (creating if needed) a dump file for appending.
    pub fn append_to(path: &Path, flush: FlushPolicy) -> io::Result<Self> {
        let file = fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self::new(file, flush))
    }
}

impl<W: Write> DumpWriter<W> {
    pub fn new(sink: W, flush: FlushPolicy) -> Self {
        Self { sink: BufWriter::new(sink), flush, max_entries: None, written: 0 }
    }

    /// Stop recording after `cap` entries.
    pub fn with_max_entries(mut self, cap: u64) -> Self {
        self.max_entries = Some(cap);
        self
    }

    pub fn entries_written(&self) -> u64 {
        self.written
    }

    /// Appends one entry. Returns `false` once the entry cap is reached.
    pub fn append_dump(&mut self, input: &[u8]) -> Result<bool, VizError> {
        if self.max_entries.is_some_and(|cap| self.written >= cap) {
            return Ok(false);
        }
        let index = self.written;
        let wrap = |source| VizError::Write { index, source };
        self.sink.write_all(encode_line(input).as_bytes()).map_err(wrap)?;
        self.sink.write_all(b"\n").map_err(wrap)?;
        self.written += 1;
        let due = match self.flush {
            FlushPolicy::EveryLine => true,
            FlushPolicy::EveryN(n) => n <= 1 || self.written.is_multiple_of(n),
        };
        if due {
            self.sink.flush().map_err(wrap)?;
        }
        Ok(true)
    }

    pub fn finish(mut self) -> Result<W, VizError> {
        let index = self.written;
        self.sink.flush().map_err(|source| VizError::Write { index, source })?;
        self.sink.into_inner().map_err(|e| VizError::Write { index, source: e.into_error() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageLayout {
    box_px: u32,
    boxes_per_row: u32,
    max_bytes: Option<usize>,
}

impl Default for ImageLayout {
    fn default() -> Self {
        Self { box_px: DEFAULT_BOX_PX, boxes_per_row: DEFAULT_BOXES_PER_ROW, max_bytes: None }
    }
}

impl ImageLayout {
    pub fn new(box_px: u32, boxes_per_row: u32, max_bytes: Option<usize>) -> Result<Self, VizError> {
        if box_px == 0 || boxes_per_row == 0 {
            return Err(VizError::Layout("box size and boxes per row must be at least 1".into()));
        }
        Ok(Self { box_px, boxes_per_row, max_bytes })
    }

    pub fn box_px(&self) -> u32 {
        self.box_px
    }

    pub fn boxes_per_row(&self) -> u32 {
        self.boxes_per_row
    }

    pub fn max_bytes(&self) -> Option<usize> {
        self.max_bytes
    }

    /// Image size for an input of `len` bytes.
    pub fn dimensions(&self, len: usize) -> (u32, u32) {
        let shown = self.max_bytes.map_or(len, |m| len.min(m));
        if shown == 0 {
            return (1, 1);
        }
        let rows = shown.div_ceil(self.boxes_per_row as usize) as u32;
        (self.boxes_per_row * self.box_px, rows * self.box_px)
    }
}

/// Renders one input as a byte grid. An empty input gives a 1x1 white image.
pub fn render_frame(input: &[u8], layout: &ImageLayout) -> RgbImage {
    let (width, height) = layout.dimensions(input.len());
    let mut img = RgbImage::from_pixel(width, height, WHITE);
    if width == 1 && height == 1 && input.is_empty() {
        return img;
    }
    let shown = layout.max_bytes.map_or(input.len(), |m| input.len().min(m));
    let per_row = layout.boxes_per_row as usize;
    let px = layout.box_px;
    for (k, &b) in input[..shown].iter().enumerate() {
        let x0 = (k % per_row) as u32 * px;
        let y0 = (k / per_row) as u32 * px;
        let color = Rgb(byte_to_color(b));
        for y in y0..y0 + px {
            for x in x0..x0 + px {
                img.put_pixel(x, y, color);
            }
        }
    }
    img
}

/// `file_%09d.png`, 1-based.
pub fn frame_name(index: usize) -> String {
    format!("file_{index:09}.png")
}

/// Writes one PNG per dump line into `out_dir`, in order. On a malformed
/// line the frames already written are left in place.
pub fn render_dump(dump_path: &Path, out_dir: &Path, layout: &ImageLayout) -> Result<Vec<PathBuf>, VizError> {
    let reader = BufReader::new(File::open(dump_path)?);
    fs::create_dir_all(out_dir)?;
    let mut frames = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let bytes = parse_line(&line?, line_no)?;
        let path = out_dir.join(frame_name(line_no));
        render_frame(&bytes, layout)
            .save_with_format(&path, image::ImageFormat::Png)
            .map_err(|source| VizError::Image { path: path.clone(), source })?;
        frames.push(path);
    }
    Ok(frames)
}
