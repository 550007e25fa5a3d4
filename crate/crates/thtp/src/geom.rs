//! Node placement, unit-disc communication graph and geometric primitives.

use std::io::Write;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("node count must be positive")]
    NonPositiveCount,
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("side must be positive, got {0}")]
    NonPositiveSide(f64),
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Side length of the deployment square for `n` nodes at the given density
/// (nodes per square meter): l = sqrt(n / density).
pub fn side_from_density(n: usize, density: f64) -> Result<f64, GeomError> {
    if n == 0 {
        return Err(GeomError::NonPositiveCount);
    }
    if density <= 0.0 {
        return Err(GeomError::NonPositiveDensity(density));
    }
    Ok((n as f64 / density).sqrt())
}

/// `n` independent uniform points in [0, side]^2.
pub fn place_nodes(n: usize, side: f64, rng: &mut impl Rng) -> Result<Vec<Point>, GeomError> {
    if n == 0 {
        return Err(GeomError::NonPositiveCount);
    }
    if side <= 0.0 {
        return Err(GeomError::NonPositiveSide(side));
    }
    Ok((0..n)
        .map(|_| Point::new(rng.gen_range(0.0..=side), rng.gen_range(0.0..=side)))
        .collect())
}

/// Unit-disc adjacency: i and j are neighbors iff d(i, j) <= d_trx, i != j.
/// Uses a uniform grid with cell size d_trx, so only the 3x3 cell block
/// around a node is scanned.
pub fn build_udg(positions: &[Point], d_trx: f64) -> Result<Vec<Vec<usize>>, GeomError> {
    if d_trx <= 0.0 {
        return Err(GeomError::NonPositiveRadius(d_trx));
    }
    let n = positions.len();
    let mut adjacency = vec![Vec::new(); n];
    if n == 0 {
        return Ok(adjacency);
    }

    let min_x = positions.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let min_y = positions.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);

    let cell_of = |p: &Point| -> (usize, usize) {
        (
            ((p.x - min_x) / d_trx) as usize,
            ((p.y - min_y) / d_trx) as usize,
        )
    };

    let mut grid: std::collections::HashMap<(usize, usize), Vec<usize>> =
        std::collections::HashMap::new();
    for (i, p) in positions.iter().enumerate() {
        grid.entry(cell_of(p)).or_default().push(i);
    }

    for (i, p) in positions.iter().enumerate() {
        let (cx, cy) = cell_of(p);
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                let nx = cx as i64 + dx;
                let ny = cy as i64 + dy;
                if nx < 0 || ny < 0 {
                    continue;
                }
                if let Some(bucket) = grid.get(&(nx as usize, ny as usize)) {
                    for &j in bucket {
                        if j != i && p.dist(&positions[j]) <= d_trx {
                            adjacency[i].push(j);
                        }
                    }
                }
            }
        }
        adjacency[i].sort_unstable();
    }
    Ok(adjacency)
}

/// Minimum distance from `p` to segment AB, plus the nearest point on the
/// segment. A == B degenerates to point distance.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> (f64, Point) {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len_sq = abx * abx + aby * aby;
    if len_sq == 0.0 {
        return (p.dist(&a), a);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len_sq).clamp(0.0, 1.0);
    let foot = Point::new(a.x + t * abx, a.y + t * aby);
    (p.dist(&foot), foot)
}

#[derive(Debug, Clone)]
pub struct Network {
    pub positions: Vec<Point>,
    pub adjacency: Vec<Vec<usize>>,
    pub d_trx: f64,
    pub side: f64,
}

impl Network {
    pub fn build(positions: Vec<Point>, d_trx: f64, side: f64) -> Result<Self, GeomError> {
        let adjacency = build_udg(&positions, d_trx)?;
        Ok(Self {
            positions,
            adjacency,
            d_trx,
            side,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    /// Fraction of nodes in the largest connected component.
    pub fn giant_component_fraction(&self) -> f64 {
        let n = self.len();
        if n == 0 {
            return 0.0;
        }
        let mut seen = vec![false; n];
        let mut best = 0usize;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut size = 0usize;
            stack.push(start);
            seen[start] = true;
            while let Some(v) = stack.pop() {
                size += 1;
                for &w in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            best = best.max(size);
        }
        best as f64 / n as f64
    }

    /// Node ids of the largest connected component.
    pub fn giant_component(&self) -> Vec<usize> {
        let n = self.len();
        let mut comp = vec![usize::MAX; n];
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            let mut size = 0usize;
            comp[start] = id;
            stack.push(start);
            while let Some(v) = stack.pop() {
                size += 1;
                for &w in &self.adjacency[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        stack.push(w);
                    }
                }
            }
            sizes.push(size);
        }
        let best = (0..sizes.len()).max_by_key(|&i| sizes[i]).unwrap_or(0);
        (0..n).filter(|&v| comp[v] == best).collect()
    }

    /// Writes the graph as an edge list, one "i j" pair per line (i < j).
    pub fn write_edge_list(&self, mut w: impl Write) -> std::io::Result<()> {
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            for &j in nbrs {
                if i < j {
                    writeln!(w, "{} {}", i, j)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// O(n^2) adjacency oracle.
    fn brute_force_udg(positions: &[Point], d_trx: f64) -> Vec<Vec<usize>> {
        let n = positions.len();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if i != j && positions[i].dist(&positions[j]) <= d_trx {
                    adj[i].push(j);
                }
            }
        }
        adj
    }

    #[test]
    fn side_from_density_paper_default() {
        // sqrt(300 * 3.14 * 100^2 / 10) = sqrt(942000)
        let density = 10.0 / (100.0f64.powi(2) * 3.14);
        let side = side_from_density(300, density).unwrap();
        assert!((side - 942000.0f64.sqrt()).abs() < 1e-9);
        assert!((side - 970.567).abs() < 1e-3);
    }

    #[test]
    fn side_from_density_simple() {
        assert_eq!(side_from_density(100, 1.0).unwrap(), 10.0);
    }

    #[test]
    fn side_from_density_sqrt_scaling() {
        let d1 = 10.0 / (100.0f64.powi(2) * 3.14);
        let d4 = 40.0 / (100.0f64.powi(2) * 3.14);
        let l1 = side_from_density(300, d1).unwrap();
        let l4 = side_from_density(300, d4).unwrap();
        assert!((l1 / l4 - 2.0).abs() < 1e-12);
        assert!((l4 - 485.28).abs() < 0.01);
    }

    #[test]
    fn side_from_density_rejects_bad_inputs() {
        assert!(side_from_density(0, 1.0).is_err());
        assert!(side_from_density(10, 0.0).is_err());
        assert!(side_from_density(10, -1.0).is_err());
    }

    #[test]
    fn place_nodes_containment_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = place_nodes(1, 50.0, &mut rng).unwrap();
        assert!(pts[0].x >= 0.0 && pts[0].x <= 50.0);
        assert!(pts[0].y >= 0.0 && pts[0].y <= 50.0);

        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        let a = place_nodes(100, 100.0, &mut r1).unwrap();
        let b = place_nodes(100, 100.0, &mut r2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn place_nodes_mean_near_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pts = place_nodes(10_000, 100.0, &mut rng).unwrap();
        let mean_x: f64 = pts.iter().map(|p| p.x).sum::<f64>() / pts.len() as f64;
        assert!((mean_x - 50.0).abs() < 2.0);
    }

    #[test]
    fn udg_threshold() {
        let pos = vec![Point::new(0.0, 0.0), Point::new(99.0, 0.0)];
        let adj = build_udg(&pos, 100.0).unwrap();
        assert_eq!(adj[0], vec![1]);
        assert_eq!(adj[1], vec![0]);

        let pos = vec![Point::new(0.0, 0.0), Point::new(101.0, 0.0)];
        let adj = build_udg(&pos, 100.0).unwrap();
        assert!(adj[0].is_empty() && adj[1].is_empty());
    }

    #[test]
    fn udg_matches_brute_force_and_mean_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pos = place_nodes(2500, 1000.0, &mut rng).unwrap();
        let grid = build_udg(&pos, 100.0).unwrap();
        let brute = brute_force_udg(&pos, 100.0);
        assert_eq!(grid, brute);

        let mean_degree: f64 =
            grid.iter().map(|a| a.len() as f64).sum::<f64>() / grid.len() as f64;
        // area argument: 2500 * pi * 100^2 / 1000^2 ~ 78 interior; boundary
        // nodes pull the global mean down, allow 15% plus boundary slack.
        let expected = 2500.0 * std::f64::consts::PI * 100.0 * 100.0 / 1_000_000.0;
        assert!((mean_degree - expected).abs() / expected < 0.15);
    }

    #[test]
    fn udg_adjacency_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pos = place_nodes(300, 970.0, &mut rng).unwrap();
        let adj = build_udg(&pos, 100.0).unwrap();
        for (i, nbrs) in adj.iter().enumerate() {
            for &j in nbrs {
                assert!(adj[j].contains(&i));
            }
        }
    }

    #[test]
    fn segment_distance_perpendicular_drop() {
        let (d, foot) =
            point_segment_distance(Point::new(0.0, 5.0), Point::new(-10.0, 0.0), Point::new(10.0, 0.0));
        assert!((d - 5.0).abs() < 1e-12);
        assert!((foot.x).abs() < 1e-12 && foot.y.abs() < 1e-12);
    }

    #[test]
    fn segment_distance_clamped_endpoint() {
        let (d, foot) =
            point_segment_distance(Point::new(20.0, 5.0), Point::new(-10.0, 0.0), Point::new(10.0, 0.0));
        assert!((d - 125.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(foot, Point::new(10.0, 0.0));
    }

    #[test]
    fn segment_distance_degenerate() {
        let a = Point::new(3.0, 4.0);
        let (d, foot) = point_segment_distance(Point::new(0.0, 0.0), a, a);
        assert!((d - 5.0).abs() < 1e-12);
        assert_eq!(foot, a);
    }

    #[test]
    fn segment_distance_matches_dense_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0));
            let a = Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0));
            let b = Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0));
            let (d, foot) = point_segment_distance(p, a, b);
            let mut best = f64::INFINITY;
            for k in 0..=100_000 {
                let t = k as f64 / 100_000.0;
                let q = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
                best = best.min(p.dist(&q));
            }
            assert!((d - best).abs() < 1e-3, "d={d} sampled={best}");
            // symmetry and foot-on-segment
            let (d2, _) = point_segment_distance(p, b, a);
            assert!((d - d2).abs() < 1e-12);
            let seg_len = a.dist(&b);
            assert!(foot.dist(&a) + foot.dist(&b) - seg_len < 1e-9);
        }
    }

    proptest::proptest! {
        #[test]
        fn segment_distance_properties(
            px in -100.0f64..200.0, py in -100.0f64..200.0,
            ax in 0.0f64..100.0, ay in 0.0f64..100.0,
            bx in 0.0f64..100.0, by in 0.0f64..100.0,
        ) {
            let p = Point::new(px, py);
            let a = Point::new(ax, ay);
            let b = Point::new(bx, by);
            let (d, foot) = point_segment_distance(p, a, b);
            // never beats the endpoints, and the foot realizes the distance
            proptest::prop_assert!(d <= p.dist(&a) + 1e-9);
            proptest::prop_assert!(d <= p.dist(&b) + 1e-9);
            proptest::prop_assert!((d - p.dist(&foot)).abs() <= 1e-9);
            // foot lies on the segment
            proptest::prop_assert!(foot.dist(&a) + foot.dist(&b) <= a.dist(&b) + 1e-9);
        }
    }
}
