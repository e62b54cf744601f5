use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};
use crate::exec::Execution;

/// Which kinds of solution a cell (agent) can find and accept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Acceptance {
    Neither,
    Findable,
    Accurate,
    Both,
}

impl Acceptance {
    pub fn accepts(self, kind: SolutionKind) -> bool {
        matches!(
            (self, kind),
            (Acceptance::Both, _)
                | (Acceptance::Findable, SolutionKind::Findable)
                | (Acceptance::Accurate, SolutionKind::Accurate)
        )
    }

    pub fn to_char(self) -> char {
        match self {
            Acceptance::Neither => '.',
            Acceptance::Findable => 'F',
            Acceptance::Accurate => 'A',
            Acceptance::Both => 'B',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            '.' => Acceptance::Neither,
            'F' => Acceptance::Findable,
            'A' => Acceptance::Accurate,
            'B' => Acceptance::Both,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionKind {
    Findable,
    Accurate,
}

impl FromStr for SolutionKind {
    type Err = CoordError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "findable" => Ok(SolutionKind::Findable),
            "accurate" => Ok(SolutionKind::Accurate),
            other => Err(CoordError::Malformed(format!("unknown solution kind `{other}`"))),
        }
    }
}

impl fmt::Display for SolutionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolutionKind::Findable => "findable",
            SolutionKind::Accurate => "accurate",
        })
    }
}

/// Grid of agents with per-cell acceptance sets and an adoption threshold
/// over the four von Neumann neighbours.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    width: usize,
    height: usize,
    cells: Vec<Acceptance>,
    threshold: usize,
}

impl Lattice {
    pub fn new(width: usize, height: usize, cells: Vec<Acceptance>, threshold: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(CoordError::invalid("lattice", "width and height must be positive"));
        }
        if cells.len() != width * height {
            return Err(CoordError::invalid(
                "lattice",
                format!("expected {} cells, got {}", width * height, cells.len()),
            ));
        }
        if threshold < 1 {
            return Err(CoordError::invalid("threshold", "must be at least 1"));
        }
        Ok(Lattice {
            width,
            height,
            cells,
            threshold,
        })
    }

    /// Parses one line per row, one of `F A B .` per cell.
    pub fn parse(text: &str, threshold: usize) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.trim().is_empty())
            .collect();
        let height = rows.len();
        let width = rows.first().map(|r| r.chars().count()).unwrap_or(0);
        let mut cells = Vec::with_capacity(width * height);
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(CoordError::Malformed(format!("row {y} has a different width")));
            }
            for (x, c) in row.chars().enumerate() {
                cells.push(
                    Acceptance::from_char(c)
                        .ok_or_else(|| CoordError::Malformed(format!("bad cell `{c}` at ({x}, {y})")))?,
                );
            }
        }
        Lattice::new(width, height, cells, threshold)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|c| c.to_char()));
            out.push('\n');
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn cell(&self, x: usize, y: usize) -> Acceptance {
        self.cells[y * self.width + x]
    }

    /// All cells accepting `kind`, row-major.
    pub fn accepting(&self, kind: SolutionKind) -> Vec<(usize, usize)> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .filter(|&(x, y)| self.cell(x, y).accepts(kind))
            .collect()
    }

    fn neighbours(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = (idx % self.width, idx / self.width);
        let w = self.width;
        [
            (x > 0).then(|| idx - 1),
            (x + 1 < w).then(|| idx + 1),
            (y > 0).then(|| idx - w),
            (y + 1 < self.height).then(|| idx + w),
        ]
        .into_iter()
        .flatten()
    }

    /// A 16x16 layout where findable cells form an X touching all four
    /// corners and accurate cells sit in small disconnected islands, one of
    /// them overlapping the X centre.
    pub fn figure_fixture() -> Self {
        let n = 16usize;
        let islands = [(7usize, 7usize), (1, 6), (12, 2), (2, 12), (12, 12), (7, 1)];
        let mut cells = Vec::with_capacity(n * n);
        for y in 0..n {
            for x in 0..n {
                let on_x = x.abs_diff(y) <= 1 || (x + y).abs_diff(n - 1) <= 1;
                let on_island = islands
                    .iter()
                    .any(|&(ix, iy)| (ix..ix + 2).contains(&x) && (iy..iy + 2).contains(&y));
                cells.push(match (on_x, on_island) {
                    (true, true) => Acceptance::Both,
                    (true, false) => Acceptance::Findable,
                    (false, true) => Acceptance::Accurate,
                    (false, false) => Acceptance::Neither,
                });
            }
        }
        Lattice::new(n, n, cells, 1).expect("fixture is well formed")
    }
}

/// Outcome of a bootstrap-percolation cascade.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeResult {
    pub kind: SolutionKind,
    /// `frames[r]` holds the cells adopting in round `r`; round 0 is the seeds.
    pub frames: Vec<Vec<(usize, usize)>>,
    /// The adopted set links top to bottom or left to right.
    pub spans: bool,
    pub adopted: usize,
    pub cells: usize,
}

impl CascadeResult {
    pub fn final_fraction(&self) -> f64 {
        self.adopted as f64 / self.cells as f64
    }

    pub fn rounds(&self) -> usize {
        self.frames.len()
    }

    /// Writes `round,cell_x,cell_y` rows.
    pub fn write_frames_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["round", "cell_x", "cell_y"])?;
        for (round, frame) in self.frames.iter().enumerate() {
            for (x, y) in frame {
                wtr.write_record([round.to_string(), x.to_string(), y.to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Runs synchronous rounds: an accepting, not-yet-adopted cell adopts when at
/// least `threshold` of its neighbours adopted in earlier rounds. Seeds that
/// do not accept `kind` are ignored.
pub fn cascade(lattice: &Lattice, kind: SolutionKind, seeds: &[(usize, usize)]) -> Result<CascadeResult> {
    if seeds.is_empty() {
        return Err(CoordError::invalid("seeds", "at least one seed is required"));
    }
    let w = lattice.width;
    let mut adopted = vec![false; w * lattice.height];
    let mut first = Vec::new();
    for &(x, y) in seeds {
        if x >= w || y >= lattice.height {
            return Err(CoordError::SeedOutsideLattice {
                x,
                y,
                width: w,
                height: lattice.height,
            });
        }
        let idx = y * w + x;
        if lattice.cells[idx].accepts(kind) && !adopted[idx] {
            adopted[idx] = true;
            first.push((x, y));
        }
    }
    let mut frames = vec![first];
    loop {
        let newly: Vec<usize> = (0..adopted.len())
            .filter(|&i| !adopted[i] && lattice.cells[i].accepts(kind))
            .filter(|&i| lattice.neighbours(i).filter(|&j| adopted[j]).count() >= lattice.threshold)
            .collect();
        if newly.is_empty() {
            break;
        }
        for &i in &newly {
            adopted[i] = true;
        }
        frames.push(newly.into_iter().map(|i| (i % w, i / w)).collect());
    }
    let count = adopted.iter().filter(|a| **a).count();
    Ok(CascadeResult {
        kind,
        spans: spans(lattice, &adopted),
        frames,
        adopted: count,
        cells: adopted.len(),
    })
}

/// A lattice, the solution kind spreading on it, and its seed cells.
pub type CascadeJob = (Lattice, SolutionKind, Vec<(usize, usize)>);

/// Independent cascades over many lattices, share-nothing.
pub fn cascade_many(jobs: &[CascadeJob], exec: Execution) -> Vec<Result<CascadeResult>> {
    exec.map(jobs, |(lattice, kind, seeds)| cascade(lattice, *kind, seeds))
}

fn spans(lattice: &Lattice, adopted: &[bool]) -> bool {
    let (w, h) = (lattice.width, lattice.height);
    let cells = w * h;
    let (top, bottom, left, right) = (cells, cells + 1, cells + 2, cells + 3);
    let mut uf = UnionFind::new(cells + 4);
    for i in (0..cells).filter(|&i| adopted[i]) {
        let (x, y) = (i % w, i / w);
        if x + 1 < w && adopted[i + 1] {
            uf.union(i, i + 1);
        }
        if y + 1 < h && adopted[i + w] {
            uf.union(i, i + w);
        }
        if y == 0 {
            uf.union(i, top);
        }
        if y == h - 1 {
            uf.union(i, bottom);
        }
        if x == 0 {
            uf.union(i, left);
        }
        if x == w - 1 {
            uf.union(i, right);
        }
    }
    uf.find(top) == uf.find(bottom) || uf.find(left) == uf.find(right)
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_findable_2x2() {
        let l = Lattice::parse("FF\nFF\n", 1).unwrap();
        let r = cascade(&l, SolutionKind::Findable, &[(0, 0)]).unwrap();
        assert_eq!(r.adopted, 4);
        assert!(r.rounds() <= 3);
        assert_eq!(r.frames[1].len(), 2);
        assert!(r.spans);
        assert_eq!(r.final_fraction(), 1.0);
    }

    #[test]
    fn isolated_island() {
        let l = Lattice::parse("...\n.A.\n...\n", 1).unwrap();
        let r = cascade(&l, SolutionKind::Accurate, &[(1, 1)]).unwrap();
        assert_eq!(r.adopted, 1);
        assert!(!r.spans);
    }

    #[test]
    fn single_column_spans_vertically() {
        let l = Lattice::parse("F..\nB..\nF..\n", 1).unwrap();
        assert!(cascade(&l, SolutionKind::Findable, &[(0, 2)]).unwrap().spans);
        assert!(!cascade(&l, SolutionKind::Accurate, &[(0, 1)]).unwrap().spans);
    }

    #[test]
    fn threshold_two_blocks_lines() {
        let l = Lattice::parse("FFF\nFFF\nFFF\n", 2).unwrap();
        let r = cascade(&l, SolutionKind::Findable, &[(0, 0)]).unwrap();
        assert_eq!(r.adopted, 1);
        let r = cascade(&l, SolutionKind::Findable, &[(0, 0), (1, 1)]).unwrap();
        assert_eq!(r.adopted, 4);
        let r = cascade(&l, SolutionKind::Findable, &[(0, 0), (1, 1), (2, 2)]).unwrap();
        assert_eq!(r.adopted, 9);
    }

    #[test]
    fn errors() {
        let l = Lattice::parse("F\n", 1).unwrap();
        assert!(matches!(
            cascade(&l, SolutionKind::Findable, &[(3, 0)]),
            Err(CoordError::SeedOutsideLattice { .. })
        ));
        assert!(cascade(&l, SolutionKind::Findable, &[]).is_err());
        assert!(Lattice::parse("FX\n", 1).is_err());
        assert!(Lattice::parse("FF\nF\n", 1).is_err());
        assert!(Lattice::parse("FF\n", 0).is_err());
    }

    #[test]
    fn text_roundtrip() {
        let f = Lattice::figure_fixture();
        assert_eq!(Lattice::parse(&f.to_text(), 1).unwrap(), f);
    }

    #[test]
    fn fixture_behaviour() {
        let f = Lattice::figure_fixture();
        let find = cascade(&f, SolutionKind::Findable, &[(0, 0)]).unwrap();
        assert!(find.spans);
        let seeds = f.accepting(SolutionKind::Accurate);
        let acc = cascade(&f, SolutionKind::Accurate, &seeds).unwrap();
        assert!(!acc.spans);
        assert!(find.adopted > acc.adopted);
    }

    #[test]
    fn frames_csv() {
        let l = Lattice::parse("FF\n", 1).unwrap();
        let r = cascade(&l, SolutionKind::Findable, &[(0, 0)]).unwrap();
        let mut buf = Vec::new();
        r.write_frames_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "round,cell_x,cell_y\n0,0,0\n1,1,0\n");
    }
}
