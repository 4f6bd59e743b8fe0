//! Plain-text edge lists: one `u v` pair per line, 0-based, each undirected
//! edge listed once. `#` starts a comment. A `# vertices: N` comment fixes
//! the vertex count so trailing isolated vertices survive a round trip;
//! without it the count is one more than the largest index seen.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Graph, GraphError};

const VERTICES_DIRECTIVE: &str = "vertices:";

pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let (content, comment) = match raw.split_once('#') {
            Some((c, rest)) => (c, Some(rest)),
            None => (raw, None),
        };
        if let Some(rest) = comment.map(str::trim) {
            if let Some(n) = rest.strip_prefix(VERTICES_DIRECTIVE) {
                let n = n.trim().parse::<usize>().map_err(|_| GraphError::Parse {
                    line: line_no,
                    message: format!("bad vertex count {:?}", n.trim()),
                })?;
                declared = Some(n);
            }
        }
        let mut fields = content.split_whitespace();
        let Some(first) = fields.next() else { continue };
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| GraphError::Parse {
                line: line_no,
                message: format!("expected a vertex index, found {s:?}"),
            })
        };
        let u = parse(first)?;
        let v = parse(fields.next().ok_or_else(|| GraphError::Parse {
            line: line_no,
            message: "expected two vertex indices".into(),
        })?)?;
        if fields.next().is_some() {
            return Err(GraphError::Parse {
                line: line_no,
                message: "trailing fields after edge".into(),
            });
        }
        if u == v {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("self-loop at vertex {u}"),
            });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("duplicate edge {} {}", u.min(v), u.max(v)),
            });
        }
        edges.push((u, v));
    }
    let inferred = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let n = match declared {
        Some(n) => {
            if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u.max(v) >= n) {
                return Err(GraphError::VertexOutOfRange { vertex: u.max(v), n });
            }
            n
        }
        None => inferred,
    };
    Graph::from_edges(n, edges)
}

pub fn load_edge_list<P: AsRef<Path>>(path: P) -> Result<Graph, GraphError> {
    parse_edge_list(&fs::read_to_string(path)?)
}

pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# {VERTICES_DIRECTIVE} {}", g.vertex_count())?;
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

pub fn save_edge_list<P: AsRef<Path>>(g: &Graph, path: P) -> Result<(), GraphError> {
    let mut buf = Vec::new();
    write_edge_list(g, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}
