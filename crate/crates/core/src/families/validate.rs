use thiserror::Error;

use super::{Construction, Layer, LayeredGraph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValidationError {
    #[error("layer labels cover {labels} vertices but the graph has {vertices}")]
    LabelCount { labels: usize, vertices: usize },
    #[error("layer {layer} has {found} vertices, expected {expected}")]
    LayerSize { layer: &'static str, found: usize, expected: usize },
    #[error("vertex {vertex} (layer {layer}) has {found} neighbours in {toward}, expected {expected}")]
    Degree { vertex: usize, layer: &'static str, toward: &'static str, found: usize, expected: String },
    #[error("{what}: counted {left} from one side and {right} from the other")]
    EdgeCount { what: &'static str, left: usize, right: usize },
}

/// Recounts every layer-to-layer degree directly from the adjacency lists
/// and checks it against the construction's contract.
pub fn validate_layered(lg: &LayeredGraph) -> Result<(), ValidationError> {
    let g = &lg.graph;
    let n = g.vertex_count();
    if lg.layers.len() != n {
        return Err(ValidationError::LabelCount { labels: lg.layers.len(), vertices: n });
    }
    // counts[v] = neighbours of v in U, V, W.
    let counts: Vec<[usize; 3]> = (0..n)
        .map(|v| {
            let mut c = [0usize; 3];
            for &x in g.neighbors(v) {
                match lg.layers[x as usize] {
                    Layer::U => c[0] += 1,
                    Layer::V => c[1] += 1,
                    Layer::W => c[2] += 1,
                    Layer::None => {}
                }
            }
            c
        })
        .collect();
    let size = |l: Layer| lg.layers.iter().filter(|&&x| x == l).count();
    let expect_size = |l: Layer, expected: usize| {
        let found = size(l);
        if found == expected {
            Ok(())
        } else {
            Err(ValidationError::LayerSize { layer: l.tag(), found, expected })
        }
    };
    let check = |layer: Layer, toward: usize, ok: &dyn Fn(usize) -> bool, expected: String| {
        const NAMES: [&str; 3] = ["U", "V", "W"];
        for v in (0..n).filter(|&v| lg.layers[v] == layer) {
            let found = counts[v][toward];
            if !ok(found) {
                return Err(ValidationError::Degree {
                    vertex: v,
                    layer: layer.tag(),
                    toward: NAMES[toward],
                    found,
                    expected: expected.clone(),
                });
            }
        }
        Ok(())
    };
    let cross = |from: Layer, idx: usize| -> usize {
        (0..n).filter(|&v| lg.layers[v] == from).map(|v| counts[v][idx]).sum()
    };

    match lg.construction {
        Construction::Suppressor { n: base, root: m } => {
            expect_size(Layer::U, m * m * m)?;
            expect_size(Layer::V, base)?;
            expect_size(Layer::W, m * m)?;
            check(Layer::U, 0, &|c| c == 0, "0".into())?;
            check(Layer::U, 1, &|c| c == m, m.to_string())?;
            check(Layer::U, 2, &|c| c == 0, "0".into())?;
            check(Layer::V, 0, &|c| c == 1, "1".into())?;
            check(Layer::V, 1, &|c| c == 0, "0".into())?;
            check(Layer::V, 2, &|c| c == m * m, (m * m).to_string())?;
            check(Layer::W, 0, &|c| c == 0, "0".into())?;
            check(Layer::W, 1, &|c| c == base, base.to_string())?;
            check(Layer::W, 2, &|c| c == 0, "0".into())?;
            let (uv, vu) = (cross(Layer::U, 1), cross(Layer::V, 0));
            if uv != vu || uv != base {
                return Err(ValidationError::EdgeCount { what: "U-V edges", left: uv, right: vu });
            }
            let (vw, wv) = (cross(Layer::V, 2), cross(Layer::W, 1));
            if vw != wv || vw != base * m * m {
                return Err(ValidationError::EdgeCount { what: "V-W edges", left: vw, right: wv });
            }
        }
        Construction::Amplifier { n: base, root: m, alpha, w_to_v_base, .. } => {
            let m2 = m * m;
            expect_size(Layer::U, base)?;
            expect_size(Layer::V, m2)?;
            expect_size(Layer::W, alpha * m2)?;
            check(Layer::U, 0, &|c| c == 0, "0".into())?;
            check(Layer::U, 1, &|c| c == 1, "1".into())?;
            check(Layer::U, 2, &|c| c == 0, "0".into())?;
            check(Layer::V, 0, &|c| c == m, m.to_string())?;
            check(Layer::V, 1, &|c| c == 0, "0".into())?;
            check(Layer::V, 2, &|c| c == m2, m2.to_string())?;
            check(Layer::W, 0, &|c| c == 0, "0".into())?;
            check(
                Layer::W,
                1,
                &|c| c == w_to_v_base || c == w_to_v_base + 1,
                format!("{w_to_v_base} or {}", w_to_v_base + 1),
            )?;
            check(Layer::W, 2, &|c| c == m2, m2.to_string())?;
            let (uv, vu) = (cross(Layer::U, 1), cross(Layer::V, 0));
            if uv != vu || uv != base {
                return Err(ValidationError::EdgeCount { what: "U-V edges", left: uv, right: vu });
            }
            let (vw, wv) = (cross(Layer::V, 2), cross(Layer::W, 1));
            if vw != wv {
                return Err(ValidationError::EdgeCount { what: "V-W edges", left: vw, right: wv });
            }
        }
        Construction::Plain(_) => {
            if let Some(v) = lg.layers.iter().position(|&l| l != Layer::None) {
                return Err(ValidationError::Degree {
                    vertex: v,
                    layer: lg.layers[v].tag(),
                    toward: "-",
                    found: 0,
                    expected: "no layer labels".into(),
                });
            }
        }
    }
    Ok(())
}
