//! Wikipedia links and per-class highlight colors.

use ner_core::{EntityClass, LabelInventory};
use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use thiserror::Error;

pub const DEFAULT_WIKIPEDIA_BASE: &str = "https://ar.wikipedia.org";

/// Everything except RFC 3986 unreserved characters.
const PATH_SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

/// Golden angle in degrees.
const HUE_STEP: f64 = 137.507_764_050_037_85;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinkError {
    #[error("cannot link an empty surface")]
    EmptySurface,
    #[error("class {0} is not in the inventory")]
    UnknownClass(String),
}

/// `<base>/wiki/<surface>` with whitespace runs joined by `_` and the title
/// percent-encoded.
pub fn wikipedia_link(surface: &str, base: &str) -> Result<String, LinkError> {
    let title = surface.split_whitespace().collect::<Vec<_>>().join("_");
    if title.is_empty() {
        return Err(LinkError::EmptySurface);
    }
    Ok(format!(
        "{}/wiki/{}",
        base.trim_end_matches('/'),
        utf8_percent_encode(&title, PATH_SEGMENT)
    ))
}

/// `#rrggbb` for a class. Hues step by the golden angle over the class index
/// at fixed saturation and lightness.
pub fn class_color(class: &EntityClass, inventory: &LabelInventory) -> Result<String, LinkError> {
    let index = inventory
        .class_index(class)
        .ok_or_else(|| LinkError::UnknownClass(class.to_string()))?;
    let hue = (index as f64 * HUE_STEP) % 360.0;
    let (r, g, b) = hsl_to_rgb(hue, 0.70, 0.60);
    Ok(format!("#{r:02x}{g:02x}{b:02x}"))
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> (u8, u8, u8) {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to_byte = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    (to_byte(r), to_byte(g), to_byte(b))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    #[test]
    fn cairo_link() {
        assert_eq!(
            wikipedia_link("القاهرة", DEFAULT_WIKIPEDIA_BASE).unwrap(),
            "https://ar.wikipedia.org/wiki/%D8%A7%D9%84%D9%82%D8%A7%D9%87%D8%B1%D8%A9"
        );
    }

    #[test]
    fn spaces_become_underscores() {
        assert_eq!(
            wikipedia_link(" New  York ", "http://localhost:9/").unwrap(),
            "http://localhost:9/wiki/New_York"
        );
        assert_eq!(wikipedia_link("a/b?c", "http://x").unwrap(), "http://x/wiki/a%2Fb%3Fc");
    }

    #[test]
    fn empty_surface() {
        assert_eq!(wikipedia_link("", DEFAULT_WIKIPEDIA_BASE), Err(LinkError::EmptySurface));
        assert_eq!(wikipedia_link(" \t", DEFAULT_WIKIPEDIA_BASE), Err(LinkError::EmptySurface));
    }

    #[test]
    fn primary_hues() {
        assert_eq!(hsl_to_rgb(0.0, 1.0, 0.5), (255, 0, 0));
        assert_eq!(hsl_to_rgb(120.0, 1.0, 0.5), (0, 255, 0));
        assert_eq!(hsl_to_rgb(240.0, 1.0, 0.5), (0, 0, 255));
        assert_eq!(hsl_to_rgb(60.0, 1.0, 0.5), (255, 255, 0));
    }

    #[test]
    fn colors_are_stable_and_distinct() {
        let inv = ner_core::default_inventory();
        let colors: BTreeSet<String> = inv.classes().iter().map(|c| class_color(c, &inv).unwrap()).collect();
        assert_eq!(colors.len(), 50);
        let nation = EntityClass::new("Nation").unwrap();
        assert_eq!(class_color(&nation, &inv), class_color(&nation, &inv));
        let stranger = EntityClass::new("Stranger").unwrap();
        assert_eq!(
            class_color(&stranger, &inv),
            Err(LinkError::UnknownClass("Stranger".into()))
        );
    }
}
