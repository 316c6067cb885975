//! Core parking dynamics on finite rooted trees.
//!
//! Trees are given in parent-array form with `parents[v] < v` for every
//! non-root vertex `v` (the root is index 0); both the breadth-first trees of
//! the simulator and the preorder-encoded trees of the enumeration oracle
//! satisfy this. A car arriving at vertex `v` parks there if the spot is
//! free, otherwise drives towards the root and takes the first free spot on
//! the way; a car that finds the root occupied exits. `visits[u]` counts
//! every car whose trajectory passes through `u` (parking there included).
//!
//! On a finite tree the final configuration, the visit counts and the exit
//! count do not depend on the order in which cars are processed; the
//! simulator still canonically parks cars by increasing arrival depth, which
//! is the order that stays meaningful on height-truncated trees.

/// Outcome of parking a car sequence on a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParkResult {
    pub occupied: Vec<bool>,
    pub visits: Vec<u64>,
    /// Cars that exited at the root.
    pub exits: u64,
}

impl ParkResult {
    /// Number of cars visiting the root.
    pub fn root_visits(&self) -> u64 {
        self.visits[0]
    }

    /// Outgoing flux `(X - 1)_+`.
    pub fn flux(&self) -> u64 {
        self.root_visits().saturating_sub(1)
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }
}

/// Park one car per entry of `car_vertices`, in sequence.
pub fn park_cars(parents: &[u32], car_vertices: &[u32]) -> ParkResult {
    let n = parents.len();
    let mut occupied = vec![false; n];
    let mut visits = vec![0u64; n];
    let mut exits = 0u64;
    for &start in car_vertices {
        let mut v = start as usize;
        loop {
            visits[v] += 1;
            if !occupied[v] {
                occupied[v] = true;
                break;
            }
            if v == 0 {
                exits += 1;
                break;
            }
            v = parents[v] as usize;
        }
    }
    let result = ParkResult { occupied, visits, exits };
    debug_assert_eq!(
        car_vertices.len() as u64,
        result.occupied_count() as u64 + result.exits,
        "car conservation"
    );
    debug_assert_eq!(result.exits, result.flux(), "exits equal (X-1)+");
    result
}

/// Expand an arrival vector into a car list ordered by increasing depth of
/// the arrival vertex.
pub fn layered_car_list(depths: &[u32], arrivals: &[u64]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..arrivals.len() as u32).filter(|&v| arrivals[v as usize] > 0).collect();
    order.sort_by_key(|&v| depths[v as usize]);
    let mut cars = Vec::with_capacity(arrivals.iter().sum::<u64>() as usize);
    for v in order {
        for _ in 0..arrivals[v as usize] {
            cars.push(v);
        }
    }
    cars
}

/// Depth of every vertex from the parent array.
pub fn depths_from_parents(parents: &[u32]) -> Vec<u32> {
    let mut depths = vec![0u32; parents.len()];
    for v in 1..parents.len() {
        depths[v] = depths[parents[v] as usize] + 1;
    }
    depths
}

/// Park an arrival vector in the canonical layered order.
pub fn park_arrivals(parents: &[u32], depths: &[u32], arrivals: &[u64]) -> ParkResult {
    park_cars(parents, &layered_car_list(depths, arrivals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_vertex() {
        let r = park_cars(&[0], &[0, 0, 0]);
        assert_eq!(r.root_visits(), 3);
        assert_eq!(r.flux(), 2);
        assert!(r.occupied[0]);
    }

    #[test]
    fn two_vertex_path_overflow_parks_at_root() {
        // Root 0 with child 1; both cars arrive at the child.
        let parents = [0u32, 0u32];
        let depths = depths_from_parents(&parents);
        let r = park_arrivals(&parents, &depths, &[0, 2]);
        assert_eq!(r.root_visits(), 1);
        assert_eq!(r.flux(), 0);
        assert_eq!(r.occupied, vec![true, true]);
        assert_eq!(r.visits, vec![1, 2]);
    }

    #[test]
    fn exits_only_after_root_full() {
        // Path 0 - 1 - 2, three cars at the leaf.
        let parents = [0u32, 0, 1];
        let depths = depths_from_parents(&parents);
        let r = park_arrivals(&parents, &depths, &[0, 0, 3]);
        assert_eq!(r.occupied, vec![true, true, true]);
        assert_eq!(r.root_visits(), 1);
        assert_eq!(r.exits, 0);
    }

    #[test]
    fn order_independence_small() {
        let parents = [0u32, 0, 0, 1, 1];
        let depths = depths_from_parents(&parents);
        let arrivals = [1u64, 0, 2, 2, 0];
        let layered = park_arrivals(&parents, &depths, &arrivals);
        // Reverse order: deepest cars first.
        let mut cars = layered_car_list(&depths, &arrivals);
        cars.reverse();
        let reversed = park_cars(&parents, &cars);
        assert_eq!(layered, reversed);
    }
}
