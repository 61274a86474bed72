//! CSV serialization of p-value maps plus their 8-bit visualization.

use super::{Pgm, RasterError, ScalarMap};

/// One CSV row per image row. Defined values carry 9 significant digits:
/// fixed notation from 0.1 upward (and for exact zero), scientific below.
/// UNDEFINED is written as `nan`.
pub fn write_float_map(map: &ScalarMap) -> Vec<u8> {
    let mut out = String::with_capacity(map.values().len() * 12);
    for row in map.values().chunks(map.width()) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            match v {
                None => out.push_str("nan"),
                Some(v) if *v == 0.0 || *v >= 0.1 => out.push_str(&format!("{v:.9}")),
                Some(v) => out.push_str(&format!("{v:.8e}")),
            }
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Parses a map written by [`write_float_map`].
pub fn parse_float_map(bytes: &[u8]) -> Result<ScalarMap, RasterError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| RasterError::Format("float map is not UTF-8".into()))?;
    let mut width = None;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for field in line.split(',') {
            let field = field.trim();
            if field.eq_ignore_ascii_case("nan") {
                values.push(None);
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    RasterError::Format(format!("line {}: bad value {field:?}", lineno + 1))
                })?;
                values.push(Some(v));
            }
        }
        let row_len = values.len() - before;
        match width {
            None => width = Some(row_len),
            Some(w) if w != row_len => {
                return Err(RasterError::Format(format!(
                    "line {}: {row_len} fields, expected {w}",
                    lineno + 1
                )))
            }
            _ => {}
        }
    }
    let width = width.ok_or_else(|| RasterError::Format("empty float map".into()))?;
    let height = values.len() / width;
    ScalarMap::new(width, height, values)
}

/// Linear [0,1] -> [0,255] grayscale rendering; UNDEFINED renders white.
pub fn visualize_float_map(map: &ScalarMap) -> Pgm {
    let samples = map
        .values()
        .iter()
        .map(|v| match v {
            None => 255,
            Some(v) => (v.clamp(0.0, 1.0) * 255.0).round() as u32,
        })
        .collect();
    Pgm {
        width: map.width(),
        height: map.height(),
        maxval: 255,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_with_undefined() {
        let map = ScalarMap::new(2, 1, vec![Some(0.5), None]).unwrap();
        assert_eq!(write_float_map(&map), b"0.500000000,nan\n");
    }

    #[test]
    fn small_values_keep_significant_digits() {
        let map = ScalarMap::new(3, 1, vec![Some(0.0), Some(1.0), Some(1.2345678912e-20)]).unwrap();
        let text = String::from_utf8(write_float_map(&map)).unwrap();
        assert_eq!(text, "0.000000000,1.000000000,1.23456789e-20\n");
    }

    #[test]
    fn visualization() {
        let zeros = ScalarMap::new(2, 2, vec![Some(0.0); 4]).unwrap();
        assert!(visualize_float_map(&zeros).samples.iter().all(|&v| v == 0));
        let mixed = ScalarMap::new(3, 1, vec![Some(1.0), None, Some(0.5)]).unwrap();
        assert_eq!(visualize_float_map(&mixed).samples, vec![255, 255, 128]);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(parse_float_map(b"0.1,0.2\n0.3\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            (w, vals) in (1usize..6).prop_flat_map(|w| {
                (Just(w), proptest::collection::vec(proptest::option::of(0.0f64..=1.0), w..=w * 5))
            })
        ) {
            let h = vals.len() / w;
            let vals: Vec<_> = vals.into_iter().take(w * h).collect();
            let map = ScalarMap::new(w, h, vals).unwrap();
            let back = parse_float_map(&write_float_map(&map)).unwrap();
            prop_assert_eq!(back.width(), w);
            for (a, b) in map.values().iter().zip(back.values()) {
                match (a, b) {
                    (None, None) => {}
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9),
                    _ => prop_assert!(false, "definedness changed"),
                }
            }
        }
    }
}
