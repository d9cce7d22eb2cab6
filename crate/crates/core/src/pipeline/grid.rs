use crate::error::{Error, Result};

/// One cell of an interpolation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub row: usize,
    pub col: usize,
    pub weights: Vec<f64>,
}

/// Interpolation weights over a layout of `corners` inputs.
///
/// - 2 corners: one row of `resolution` cells, linear weights.
/// - 3 corners: a triangle; row `r` holds `r + 1` cells. Corner 1 is the apex,
///   corners 2 and 3 the bottom-left and bottom-right vertices.
/// - 4 corners: a `resolution × resolution` square with bilinear weights, corners
///   ordered top-left, top-right, bottom-left, bottom-right.
pub fn weight_grid(corners: usize, resolution: usize) -> Result<Vec<GridPoint>> {
    if resolution < 2 {
        return Err(Error::InvalidParameter {
            name: "resolution",
            value: resolution as f64,
            reason: "must be at least 2",
        });
    }
    let steps = (resolution - 1) as f64;
    let mut out = Vec::new();
    match corners {
        2 => {
            for col in 0..resolution {
                let u = col as f64 / steps;
                out.push(GridPoint {
                    row: 0,
                    col,
                    weights: vec![1.0 - u, u],
                });
            }
        }
        3 => {
            for row in 0..resolution {
                for col in 0..=row {
                    out.push(GridPoint {
                        row,
                        col,
                        weights: vec![
                            (resolution - 1 - row) as f64 / steps,
                            (row - col) as f64 / steps,
                            col as f64 / steps,
                        ],
                    });
                }
            }
        }
        4 => {
            for row in 0..resolution {
                let v = row as f64 / steps;
                for col in 0..resolution {
                    let u = col as f64 / steps;
                    out.push(GridPoint {
                        row,
                        col,
                        weights: vec![(1.0 - u) * (1.0 - v), u * (1.0 - v), (1.0 - u) * v, u * v],
                    });
                }
            }
        }
        _ => {
            return Err(Error::InvalidParameter {
                name: "corners",
                value: corners as f64,
                reason: "must be 2, 3 or 4",
            })
        }
    }
    Ok(out)
}

/// Index of the corner a grid point coincides with, if any.
pub fn corner_index(point: &GridPoint) -> Option<usize> {
    let mut hot = point.weights.iter().enumerate().filter(|(_, w)| **w != 0.0);
    match (hot.next(), hot.next()) {
        (Some((k, &1.0)), None) => Some(k),
        _ => None,
    }
}
