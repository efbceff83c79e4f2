use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::magfem::EigenResult;
use crate::mesh::LevelSetField;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 12.0;

/// Renders `|f|` as grey-shaded triangles with the superlevel contours at `thresholds`.
pub fn contour_svg(result: &EigenResult, thresholds: &[f64]) -> Result<String> {
    let mesh = result.mesh.as_ref();
    let modulus = result.modulus();
    let field = LevelSetField::new(mesh, &modulus)?;
    let top = field.max().max(f64::MIN_POSITIVE);
    let nodes = mesh.nodes();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in nodes {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let scale = (SIZE - 2.0 * MARGIN) / (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let map = |p: [f64; 2]| (MARGIN + (p[0] - lo[0]) * scale, SIZE - MARGIN - (p[1] - lo[1]) * scale);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    for t in mesh.triangles() {
        let mean = (modulus[t[0]] + modulus[t[1]] + modulus[t[2]]) / (3.0 * top);
        let g = (255.0 * (1.0 - mean)).round().clamp(0.0, 255.0) as u8;
        let pts: Vec<String> = t
            .iter()
            .map(|&i| {
                let (x, y) = map(nodes[i]);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        writeln!(s, r#"<polygon points="{}" fill="rgb({g},{g},{g})" stroke="none"/>"#, pts.join(" ")).unwrap();
    }
    for &z in thresholds {
        let slice = field.slice(z);
        for l in slice.contour_polygons.iter().chain(&slice.open_polylines) {
            let pts: Vec<String> = l
                .iter()
                .map(|&p| {
                    let (x, y) = map(p);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="crimson" stroke-width="1"/>"#,
                pts.join(" ")
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_contour_svg(result: &EigenResult, thresholds: &[f64], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, contour_svg(result, thresholds)?)?;
    Ok(())
}
