//! Raster landscapes and their conversion to spreading graphs.
//!
//! Each cell becomes a node linked to its 8 neighbors. The rate of the edge
//! `j -> i` is `beta0 * veg(i) * diag * wind(bearing j -> i)`: the fuel of the
//! destination cell sets how fast fire enters it, diagonal links are scaled
//! by `diag_factor`, and wind boosts downwind links exponentially. Edges into
//! water have rate zero and are omitted.
//!
//! Grid file format:
//!
//! ```text
//! <rows> <cols>
//! <cols characters from D G E C W>   (repeated rows times)
//! ```
//!
//! Lines end in `\n`; the final newline is optional.

use std::fmt;

use thiserror::Error;

use crate::graph::{Edge, Geometry, GridShape, NodeParams, SpreadGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellClass {
    Desert,
    Grassland,
    Eucalyptus,
    City,
    Water,
}

impl CellClass {
    pub const ALL: [CellClass; 5] = [
        CellClass::Desert,
        CellClass::Grassland,
        CellClass::Eucalyptus,
        CellClass::City,
        CellClass::Water,
    ];

    pub fn code(self) -> char {
        match self {
            CellClass::Desert => 'D',
            CellClass::Grassland => 'G',
            CellClass::Eucalyptus => 'E',
            CellClass::City => 'C',
            CellClass::Water => 'W',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|class| class.code() == c)
    }
}

impl fmt::Display for CellClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridParseError {
    #[error("empty input")]
    Empty,
    #[error("line 1: expected '<rows> <cols>' with positive integers, found '{0}'")]
    BadHeader(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("line {line}, column {col}: unknown cell code {code:?}")]
    UnknownCell { line: usize, col: usize, code: char },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandscapeGrid {
    rows: usize,
    cols: usize,
    cells: Vec<CellClass>,
}

impl LandscapeGrid {
    pub fn new(rows: usize, cols: usize, cells: Vec<CellClass>) -> Result<Self, GridParseError> {
        if rows == 0 || cols == 0 || rows * cols != cells.len() {
            return Err(GridParseError::DimensionMismatch(format!(
                "{rows}x{cols} grid with {} cells",
                cells.len()
            )));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> &[CellClass] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> CellClass {
        self.cells[row * self.cols + col]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Node ids of all cells of a class.
    pub fn cells_of(&self, class: CellClass) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&i| self.cells[i] == class)
            .collect()
    }

    /// Quarter turn clockwise: cell `(r, c)` moves to `(c, rows - 1 - r)`.
    pub fn rotated_clockwise(&self) -> Self {
        let (rows, cols) = (self.cols, self.rows);
        let mut cells = vec![CellClass::Water; rows * cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                cells[c * cols + (self.rows - 1 - r)] = self.get(r, c);
            }
        }
        Self { rows, cols, cells }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for row in self.cells.chunks(self.cols) {
            out.extend(row.iter().map(|c| c.code()));
            out.push('\n');
        }
        out
    }
}

pub fn load_grid(text: &str) -> Result<LandscapeGrid, GridParseError> {
    if text.is_empty() {
        return Err(GridParseError::Empty);
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut lines = body.split('\n');
    let header = lines.next().ok_or(GridParseError::Empty)?;
    let dims: Vec<&str> = header.split(' ').collect();
    let parse_dim = |s: &str| -> Option<usize> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        s.parse().ok().filter(|&v| v > 0)
    };
    let (rows, cols) = match dims.as_slice() {
        [r, c] => match (parse_dim(r), parse_dim(c)) {
            (Some(r), Some(c)) => (r, c),
            _ => return Err(GridParseError::BadHeader(header.to_string())),
        },
        _ => return Err(GridParseError::BadHeader(header.to_string())),
    };

    let mut cells = Vec::with_capacity(rows * cols);
    let mut count = 0;
    for (k, line) in lines.enumerate() {
        count += 1;
        if count > rows {
            return Err(GridParseError::DimensionMismatch(format!(
                "more than the declared {rows} rows"
            )));
        }
        let width = line.chars().count();
        if width != cols {
            return Err(GridParseError::DimensionMismatch(format!(
                "row {} has {width} cells, expected {cols}",
                k + 1
            )));
        }
        for (col, ch) in line.chars().enumerate() {
            let class = CellClass::from_code(ch).ok_or(GridParseError::UnknownCell {
                line: k + 2,
                col: col + 1,
                code: ch,
            })?;
            cells.push(class);
        }
    }
    if count != rows {
        return Err(GridParseError::DimensionMismatch(format!(
            "found {count} rows, expected {rows}"
        )));
    }
    LandscapeGrid::new(rows, cols, cells)
}

/// Per-class lookup table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassTable {
    pub desert: f64,
    pub grassland: f64,
    pub eucalyptus: f64,
    pub city: f64,
    pub water: f64,
}

impl ClassTable {
    pub fn get(&self, class: CellClass) -> f64 {
        match class {
            CellClass::Desert => self.desert,
            CellClass::Grassland => self.grassland,
            CellClass::Eucalyptus => self.eucalyptus,
            CellClass::City => self.city,
            CellClass::Water => self.water,
        }
    }

    fn values(&self) -> [f64; 5] {
        [
            self.desert,
            self.grassland,
            self.eucalyptus,
            self.city,
            self.water,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    /// Baseline spreading rate.
    pub beta0: f64,
    /// Fuel factor of the destination cell.
    pub veg_factor: ClassTable,
    /// Recovery rate of every cell.
    pub delta: f64,
    /// Multiplier for diagonal links, in `(0, 1]`.
    pub diag_factor: f64,
    pub cost: ClassTable,
}

/// Default diagonal correction, the pi/4 overlap of a diagonal neighbor.
pub const DEFAULT_DIAG_FACTOR: f64 = 0.785;

impl Default for RateParams {
    fn default() -> Self {
        Self {
            beta0: 0.5,
            veg_factor: ClassTable {
                desert: 0.4,
                grassland: 1.0,
                eucalyptus: 1.4,
                city: 0.5,
                water: 0.0,
            },
            delta: 0.2,
            diag_factor: DEFAULT_DIAG_FACTOR,
            cost: ClassTable {
                desert: 0.01,
                grassland: 0.01,
                eucalyptus: 0.01,
                city: 1.0,
                water: 0.01,
            },
        }
    }
}

impl RateParams {
    /// Sets the cost of every non-city class.
    pub fn with_landscape_cost(mut self, cost: f64) -> Self {
        self.cost.desert = cost;
        self.cost.grassland = cost;
        self.cost.eucalyptus = cost;
        self.cost.water = cost;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(self.beta0) || !finite_nonneg(self.delta) {
            return Err("beta0 and delta must be >= 0".into());
        }
        if !self.veg_factor.values().into_iter().all(finite_nonneg) {
            return Err("vegetation factors must be >= 0".into());
        }
        if self.veg_factor.water != 0.0 {
            return Err("water must be unburnable (factor 0)".into());
        }
        if !self.cost.values().into_iter().all(finite_nonneg) {
            return Err("costs must be >= 0".into());
        }
        if !(self.diag_factor > 0.0 && self.diag_factor <= 1.0) {
            return Err(format!(
                "diagonal factor {} not in (0, 1]",
                self.diag_factor
            ));
        }
        Ok(())
    }
}

/// Wind over the landscape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindField {
    /// m/s
    pub speed: f64,
    /// Compass bearing the wind blows toward, radians (0 = north, pi/2 = east).
    pub direction: f64,
    pub c1: f64,
    pub c2: f64,
}

impl WindField {
    pub const DEFAULT_C1: f64 = 0.045;
    pub const DEFAULT_C2: f64 = 0.131;

    pub fn new(speed: f64, direction: f64) -> Self {
        Self {
            speed,
            direction,
            c1: Self::DEFAULT_C1,
            c2: Self::DEFAULT_C2,
        }
    }

    /// Wind coming from a compass bearing given in degrees.
    pub fn from_degrees(speed: f64, from_deg: f64) -> Self {
        Self::new(speed, (from_deg + 180.0).to_radians())
    }
}

/// `exp(V (c1 + c2 (cos(bearing - direction) - 1)))`
pub fn wind_factor(edge_bearing: f64, wind: &WindField) -> f64 {
    (wind.speed * (wind.c1 + wind.c2 * ((edge_bearing - wind.direction).cos() - 1.0))).exp()
}

// (d_row, d_col) in a fixed order; rows grow southward
const NEIGHBORS: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

/// Compass bearing of a grid step; north is decreasing row.
fn bearing(d_row: isize, d_col: isize) -> f64 {
    (d_col as f64).atan2(-(d_row as f64))
}

pub fn to_graph(
    grid: &LandscapeGrid,
    params: &RateParams,
    wind: Option<&WindField>,
) -> crate::error::Result<SpreadGraph> {
    params.validate().map_err(crate::error::Error::Config)?;
    if let Some(w) = wind {
        if !(w.speed.is_finite() && w.speed >= 0.0) {
            return Err(crate::error::Error::Config(format!(
                "wind speed {} must be >= 0",
                w.speed
            )));
        }
    }
    let (rows, cols) = (grid.rows(), grid.cols());
    let nodes = grid
        .cells()
        .iter()
        .map(|&class| NodeParams::new(params.delta, params.cost.get(class)))
        .collect();

    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let src = r * cols + c;
            for &(dr, dc) in &NEIGHBORS {
                let (rr, cc) = (r as isize + dr, c as isize + dc);
                if rr < 0 || cc < 0 || rr >= rows as isize || cc >= cols as isize {
                    continue;
                }
                let (rr, cc) = (rr as usize, cc as usize);
                let mut beta = params.beta0 * params.veg_factor.get(grid.get(rr, cc));
                if dr != 0 && dc != 0 {
                    beta *= params.diag_factor;
                }
                if let Some(w) = wind {
                    beta *= wind_factor(bearing(dr, dc), w);
                }
                if beta > 0.0 {
                    edges.push(Edge::new(src, rr * cols + cc, beta));
                }
            }
        }
    }

    let positions = (0..rows * cols)
        .map(|i| [(i % cols) as f64, (i / cols) as f64])
        .collect();
    SpreadGraph::new(nodes, edges)?.with_geometry(Geometry {
        positions,
        grid: Some(GridShape { rows, cols }),
    })
}

/// Bundled 25x40 demonstration landscape (1000 cells): desert to the
/// northwest, a city block in the northeast, eucalyptus forest in the
/// southwest with grassland corridors toward the city, a smaller forest patch
/// south of a lake, and a river along the east. It is an illustrative layout,
/// not a survey of any real terrain.
pub fn demo_landscape() -> LandscapeGrid {
    load_grid(include_str!("../data/demo_landscape.grid")).expect("bundled grid is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn parses_small_grids() {
        let g = load_grid("1 2\nGW").unwrap();
        assert_eq!(g.cells(), &[CellClass::Grassland, CellClass::Water]);
        let g = load_grid("2 2\nGG\nGG\n").unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.cells().iter().all(|&c| c == CellClass::Grassland));
    }

    #[test]
    fn grid_errors() {
        assert!(matches!(
            load_grid("2 2\nGGG"),
            Err(GridParseError::DimensionMismatch(_))
        ));
        assert!(matches!(
            load_grid("2 2\nGG"),
            Err(GridParseError::DimensionMismatch(_))
        ));
        assert!(matches!(
            load_grid("1 2\nGG\nGG"),
            Err(GridParseError::DimensionMismatch(_))
        ));
        assert!(matches!(load_grid(""), Err(GridParseError::Empty)));
        assert!(matches!(
            load_grid("1 2\nGX"),
            Err(GridParseError::UnknownCell {
                line: 2,
                col: 2,
                code: 'X'
            })
        ));
        assert!(matches!(
            load_grid("1  2\nGG"),
            Err(GridParseError::BadHeader(_))
        ));
        assert!(matches!(
            load_grid("0 2\n"),
            Err(GridParseError::BadHeader(_))
        ));
        // CRLF is not part of the format
        assert!(load_grid("1 2\r\nGG").is_err());
    }

    #[test]
    fn text_round_trip() {
        let g = demo_landscape();
        assert_eq!(load_grid(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn wind_factor_values() {
        let calm = WindField::new(0.0, 1.0);
        assert_eq!(wind_factor(2.5, &calm), 1.0);
        let w = WindField::new(4.0, 0.3);
        assert!((wind_factor(0.3, &w) - 0.18f64.exp()).abs() < 1e-15);
        assert!((wind_factor(0.3, &w) - 1.197).abs() < 1e-3);
        let cross = wind_factor(0.3 + std::f64::consts::FRAC_PI_2, &w);
        assert!(cross < wind_factor(0.3, &w));
    }

    #[test]
    fn bearings_follow_the_compass() {
        assert!((bearing(-1, 0) - 0.0).abs() < 1e-15);
        assert!((bearing(0, 1) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((bearing(-1, 1) - FRAC_PI_4).abs() < 1e-15);
        assert!((bearing(1, 0).abs() - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn grass_next_to_water() {
        let g = to_graph(&load_grid("1 2\nGW").unwrap(), &RateParams::default(), None).unwrap();
        assert_eq!(g.edges(), &[Edge::new(1, 0, 0.5)]);
    }

    #[test]
    fn center_of_grass_block() {
        let p = RateParams::default();
        let g = to_graph(&load_grid("3 3\nGGG\nGGG\nGGG").unwrap(), &p, None).unwrap();
        let into_center: Vec<_> = g.edges().iter().filter(|e| e.dst == 4).collect();
        assert_eq!(into_center.len(), 8);
        for e in into_center {
            let diagonal = (e.src % 3 != 1) && (e.src / 3 != 1);
            let expected = if diagonal { 0.5 * p.diag_factor } else { 0.5 };
            assert!((e.beta - expected).abs() < 1e-15, "{e:?}");
        }
    }

    #[test]
    fn calm_wind_is_identity() {
        let grid = demo_landscape();
        let p = RateParams::default();
        let calm = WindField::new(0.0, 2.0);
        assert_eq!(
            to_graph(&grid, &p, None).unwrap(),
            to_graph(&grid, &p, Some(&calm)).unwrap()
        );
    }

    #[test]
    fn demo_landscape_shape() {
        let g = demo_landscape();
        assert_eq!((g.rows(), g.cols()), (25, 40));
        for class in CellClass::ALL {
            assert!(!g.cells_of(class).is_empty(), "{class} missing");
        }
    }

    #[test]
    fn rejects_bad_params() {
        let grid = load_grid("1 2\nGG").unwrap();
        let mut p = RateParams::default();
        p.veg_factor.water = 0.1;
        assert!(to_graph(&grid, &p, None).is_err());
        let mut p = RateParams::default();
        p.diag_factor = 0.0;
        assert!(to_graph(&grid, &p, None).is_err());
        let w = WindField::new(-1.0, 0.0);
        assert!(to_graph(&grid, &RateParams::default(), Some(&w)).is_err());
    }
}
