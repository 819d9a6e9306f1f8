//! Draws frame decisions onto images.
//!
//! Decisions are first turned into a list of draw commands (rectangle,
//! color, label); the raster renderer only paints those commands. Person
//! boxes take the color of their distance status. Face boxes are drawn in the
//! keeps color when the mask is worn properly and no hand touches the face,
//! in the violates color otherwise.

use std::io::{self, BufRead, Write};

use font8x8::UnicodeFonts;
use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distancing::DistanceStatus;
use crate::ingestion::{parse_record, read_header, write_record, DrawCommandsHeader, FileHeader, IngestError, RecordLines};
use crate::model::{BoundingBox, HandLabel, ImageGeometry, MaskLabel};
use crate::report::FrameReport;

pub type Color = [u8; 3];

const GLYPH: u32 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OverlayError {
    #[error("image is {image_width}x{image_height} but the frame geometry is {width}x{height}")]
    GeometryMismatch { image_width: u32, image_height: u32, width: u32, height: u32 },
    #[error("overlay colors must be distinct")]
    IndistinctColors,
    #[error("line thickness must be at least 1")]
    Thickness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlayStyle {
    keeps_color: Color,
    violates_color: Color,
    unassessed_color: Color,
    thickness: u32,
}

impl OverlayStyle {
    pub fn new(keeps: Color, violates: Color, unassessed: Color, thickness: u32) -> Result<Self, OverlayError> {
        if keeps == violates || keeps == unassessed || violates == unassessed {
            return Err(OverlayError::IndistinctColors);
        }
        if thickness == 0 {
            return Err(OverlayError::Thickness);
        }
        Ok(Self { keeps_color: keeps, violates_color: violates, unassessed_color: unassessed, thickness })
    }

    pub fn keeps_color(&self) -> Color {
        self.keeps_color
    }

    pub fn violates_color(&self) -> Color {
        self.violates_color
    }

    pub fn unassessed_color(&self) -> Color {
        self.unassessed_color
    }

    pub fn thickness(&self) -> u32 {
        self.thickness
    }

    fn status_color(&self, status: DistanceStatus) -> Color {
        match status {
            DistanceStatus::Keeps => self.keeps_color,
            DistanceStatus::Violates => self.violates_color,
            DistanceStatus::Unassessed => self.unassessed_color,
        }
    }
}

impl Default for OverlayStyle {
    fn default() -> Self {
        Self { keeps_color: [0, 200, 0], violates_color: [220, 0, 0], unassessed_color: [128, 128, 128], thickness: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Person,
    Face,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawCommand {
    pub kind: EntityKind,
    pub id: String,
    pub rect: BoundingBox,
    pub color: Color,
    pub label: String,
}

fn face_label(mask: MaskLabel, hand: HandLabel) -> String {
    format!("{} {}", mask.as_str(), hand.as_str())
}

/// Draw commands for one frame report, sorted by (kind, id).
pub fn emit_overlay_commands(report: &FrameReport, style: &OverlayStyle) -> Vec<DrawCommand> {
    let mut commands: Vec<DrawCommand> = report
        .subject_statuses
        .iter()
        .map(|s| DrawCommand {
            kind: EntityKind::Person,
            id: s.person_id.clone(),
            rect: s.bbox,
            color: style.status_color(s.status),
            label: format!("{} {}", s.person_id, s.status.as_str()),
        })
        .collect();
    commands.extend(report.face_assessments.iter().map(|f| {
        let compliant = f.mask_label == MaskLabel::Mask && f.hand_label == HandLabel::NoInteraction;
        DrawCommand {
            kind: EntityKind::Face,
            id: f.face_id.clone(),
            rect: f.bbox,
            color: if compliant { style.keeps_color } else { style.violates_color },
            label: face_label(f.mask_label, f.hand_label),
        }
    }));
    commands.sort_by(|a, b| (a.kind, &a.id).cmp(&(b.kind, &b.id)));
    commands
}

/// Integer pixel extent of `rect` inside an image of `w x h`, inclusive on
/// both ends. `None` when nothing of the box is visible.
fn pixel_extent(rect: &BoundingBox, w: u32, h: u32) -> Option<(i64, i64, i64, i64)> {
    if !rect.is_finite() {
        return None;
    }
    let x0 = rect.x_min.floor() as i64;
    let y0 = rect.y_min.floor() as i64;
    let x1 = (rect.x_max.ceil() as i64 - 1).max(x0);
    let y1 = (rect.y_max.ceil() as i64 - 1).max(y0);
    if x1 < 0 || y1 < 0 || x0 >= i64::from(w) || y0 >= i64::from(h) {
        return None;
    }
    Some((x0, y0, x1, y1))
}

fn put(img: &mut RgbImage, x: i64, y: i64, color: Color) {
    if x >= 0 && y >= 0 && x < i64::from(img.width()) && y < i64::from(img.height()) {
        img.put_pixel(x as u32, y as u32, Rgb(color));
    }
}

fn draw_rect(img: &mut RgbImage, (x0, y0, x1, y1): (i64, i64, i64, i64), color: Color, thickness: u32) {
    for t in 0..i64::from(thickness) {
        let (ax, ay, bx, by) = (x0 + t, y0 + t, x1 - t, y1 - t);
        if ax > bx || ay > by {
            break;
        }
        for x in ax..=bx {
            put(img, x, ay, color);
            put(img, x, by, color);
        }
        for y in ay..=by {
            put(img, ax, y, color);
            put(img, bx, y, color);
        }
    }
}

fn draw_text(img: &mut RgbImage, x: i64, y: i64, text: &str, color: Color) {
    for (i, c) in text.chars().enumerate() {
        let glyph = font8x8::BASIC_FONTS.get(c).or_else(|| font8x8::BASIC_FONTS.get('?')).unwrap_or([0; 8]);
        let gx = x + i as i64 * i64::from(GLYPH);
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..8 {
                if bits & (1 << col) != 0 {
                    put(img, gx + col, y + row as i64, color);
                }
            }
        }
    }
}

/// Paints `commands` onto `image`. Labels sit just above their box, or just
/// inside it when there is no room above.
pub fn paint_commands(image: &mut RgbImage, commands: &[DrawCommand], style: &OverlayStyle) {
    let (w, h) = image.dimensions();
    for cmd in commands {
        let Some(extent) = pixel_extent(&cmd.rect, w, h) else { continue };
        draw_rect(image, extent, cmd.color, style.thickness);
        let (x0, y0, _, _) = extent;
        let above = y0 - i64::from(GLYPH) - 1;
        let ty = if above >= 0 { above } else { y0 + i64::from(style.thickness) + 1 };
        draw_text(image, x0.max(0), ty, &cmd.label, cmd.color);
    }
}

pub fn render_frame(
    image: &RgbImage,
    geometry: ImageGeometry,
    report: &FrameReport,
    style: &OverlayStyle,
) -> Result<RgbImage, OverlayError> {
    if image.dimensions() != (geometry.width, geometry.height) {
        return Err(OverlayError::GeometryMismatch {
            image_width: image.width(),
            image_height: image.height(),
            width: geometry.width,
            height: geometry.height,
        });
    }
    let mut out = image.clone();
    paint_commands(&mut out, &emit_overlay_commands(report, style), style);
    Ok(out)
}

pub fn write_draw_commands<W: Write>(w: &mut W, header: &DrawCommandsHeader, commands: &[DrawCommand]) -> io::Result<()> {
    write_record(w, &FileHeader::DrawCommands(header.clone()))?;
    for c in commands {
        write_record(w, c)?;
    }
    Ok(())
}

pub fn read_draw_commands<R: BufRead>(reader: R) -> Result<(DrawCommandsHeader, Vec<DrawCommand>), IngestError> {
    let mut lines = RecordLines::new(reader);
    let (line, header) = read_header(&mut lines)?;
    let FileHeader::DrawCommands(header) = header else {
        return Err(IngestError::WrongFormat { line, expected: "draw_commands", found: header.kind() });
    };
    let mut commands = Vec::new();
    for item in lines {
        let (line, text) = item?;
        commands.push(parse_record(line, &text)?);
    }
    Ok((header, commands))
}
