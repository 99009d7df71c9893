//! Datasets bundled with the library.

use super::capture::CaptureHistory;
use super::scr::{Point, Region, ScrData, DEFAULT_BUFFER_M};

/// Red-cheeked salamander plot: 78, 11 and 4 individuals seen on 1, 2 and 3
/// of 4 occasions.
pub fn builtin_salamander() -> CaptureHistory {
    let counts = std::iter::repeat_n(1, 78)
        .chain(std::iter::repeat_n(2, 11))
        .chain(std::iter::repeat_n(3, 4))
        .collect();
    CaptureHistory::new(counts, 4).expect("salamander counts are valid")
}

/// One realization of the homogeneous model with M = 100, psi = 0.4,
/// p = 0.25 and J = 3 (39 members, 19 detected).
pub fn builtin_simulated_m0() -> CaptureHistory {
    let counts = vec![1, 1, 1, 1, 1, 1, 1, 2, 2, 1, 1, 1, 1, 2, 2, 1, 1, 2, 1];
    CaptureHistory::new(counts, 3).expect("fixture counts are valid")
}

/// Snowshoe hare live-trapping grid: 13 individuals, 84 traps 50 m apart,
/// five occasions. The activity-center region extends 100 m past the grid.
pub fn builtin_hare() -> ScrData {
    let (traps, by_trap) = parse_listing(HARE_LISTING);
    let n = by_trap[0].len();
    let counts = (0..n).map(|i| by_trap.iter().map(|row| row[i]).collect()).collect();
    let region = Region::around(&traps, DEFAULT_BUFFER_M).expect("grid is non-empty");
    ScrData::new(traps, counts, 5, region).expect("hare listing is valid")
}

/// Parses the `[id,] x y c1 .. cn` listing into coordinates and per-trap rows.
pub(crate) fn parse_listing(text: &str) -> (Vec<Point>, Vec<Vec<u32>>) {
    let mut traps = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let rest = line.split_once(']').map_or(line, |(_, r)| r);
        let mut fields = rest.split_whitespace();
        let x: f64 = fields.next().unwrap().parse().unwrap();
        let y: f64 = fields.next().unwrap().parse().unwrap();
        traps.push([x, y]);
        rows.push(fields.map(|v| v.parse().unwrap()).collect());
    }
    (traps, rows)
}

const HARE_LISTING: &str = "
 [1,]    0    0 0 0 0 0 0 0 0 0 0 0 0 0 0
 [2,]   50    0 0 0 0 0 0 0 0 0 0 0 0 0 0
 [3,]  100    0 1 0 0 0 0 0 0 0 0 0 0 0 0
 [4,]  150    0 0 0 0 0 0 0 0 0 0 0 0 0 0
 [5,]  200    0 0 0 0 0 0 0 0 0 0 0 0 0 0
 [6,]  250    0 0 1 0 0 0 0 0 0 0 0 0 0 0
 [7,]  300    0 0 0 0 0 0 0 0 0 0 0 0 0 0
 [8,]  350    0 0 0 1 0 0 0 0 0 0 0 0 0 0
 [9,]  400    0 0 0 0 0 0 0 0 0 0 0 0 0 0
[10,]  450    0 0 0 0 1 0 0 0 0 0 0 0 0 0
[11,]  500    0 0 0 0 1 2 0 0 0 0 0 0 0 0
[12,]  550    0 0 0 0 0 0 0 0 0 0 0 0 0 0
[13,]    0  -50 0 0 0 0 0 0 0 0 0 0 0 0 0
[14,]   50  -50 1 0 0 0 0 0 0 0 0 0 0 0 0
[15,]  100  -50 0 0 0 0 0 0 0 0 0 0 0 0 0
[16,]  150  -50 0 0 0 0 0 0 0 0 0 0 0 0 0
[17,]  200  -50 0 0 0 0 0 0 0 0 0 0 0 0 0
[18,]  250  -50 0 0 0 0 0 0 0 0 0 0 0 0 0
[19,]  300  -50 0 0 0 0 0 0 0 0 0 0 0 0 0
[20,]  350  -50 0 0 0 0 0 1 0 0 0 0 0 0 0
[21,]  400  -50 0 0 0 0 0 0 0 0 0 0 0 0 0
[22,]  450  -50 0 0 0 0 0 0 0 0 0 0 0 0 0
[23,]  500  -50 0 0 0 0 0 0 0 0 0 0 0 0 0
[24,]  550  -50 0 0 0 1 0 0 0 0 0 0 0 0 0
[25,]    0 -100 0 0 0 0 0 0 0 0 0 0 0 0 0
[26,]   50 -100 0 0 0 0 0 0 0 0 0 0 0 0 0
[27,]  100 -100 1 0 0 0 0 0 0 0 0 0 0 0 0
[28,]  150 -100 0 0 0 0 0 0 0 0 0 0 0 0 0
[29,]  200 -100 0 0 0 0 0 0 0 0 0 0 0 0 0
[30,]  250 -100 0 0 0 0 0 0 0 0 0 0 0 0 0
[31,]  300 -100 0 0 2 0 0 0 1 0 0 0 0 0 0
[32,]  350 -100 0 0 0 0 0 0 0 0 0 0 0 0 0
[33,]  400 -100 0 0 0 0 0 0 0 0 0 0 0 0 0
[34,]  450 -100 0 0 0 0 0 0 0 0 0 0 0 0 0
[35,]  500 -100 0 0 0 0 0 0 0 0 0 0 0 0 0
[36,]  550 -100 0 0 0 0 0 0 0 0 0 0 0 0 0
[37,]    0 -150 0 0 0 0 0 0 0 0 0 0 0 0 0
[38,]   50 -150 0 0 0 0 0 0 0 0 0 0 0 0 0
[39,]  100 -150 0 0 0 0 0 0 0 1 0 0 0 0 0
[40,]  150 -150 0 0 0 0 0 0 0 0 0 0 0 0 0
[41,]  200 -150 0 0 0 0 0 0 0 0 0 0 0 0 0
[42,]  250 -150 0 0 0 0 0 0 0 0 0 0 0 0 0
[43,]  300 -150 0 0 0 0 0 0 0 0 0 0 0 0 0
[44,]  350 -150 0 0 0 0 0 0 0 0 0 0 0 0 0
[45,]  400 -150 0 0 2 0 0 0 0 0 0 0 0 0 0
[46,]  450 -150 0 0 0 0 0 0 0 0 0 0 0 0 0
[47,]  500 -150 0 0 0 0 0 0 0 0 0 0 0 0 0
[48,]  550 -150 0 0 0 0 0 0 0 0 0 0 0 0 0
[49,]    0 -200 0 0 0 0 0 0 0 0 0 0 0 0 0
[50,]   50 -200 0 0 0 0 0 0 0 0 0 0 0 0 0
[51,]  100 -200 0 0 0 0 0 0 0 1 0 0 0 0 0
[52,]  150 -200 0 0 0 0 0 0 0 0 0 0 0 0 0
[53,]  200 -200 0 0 0 0 0 0 0 0 0 0 0 0 0
[54,]  250 -200 0 0 0 0 0 0 0 0 0 0 0 0 0
[55,]  300 -200 0 0 0 0 0 0 0 0 0 0 0 0 0
[56,]  350 -200 0 0 0 0 0 0 0 0 0 0 0 0 0
[57,]  400 -200 0 0 0 0 0 0 0 0 1 0 0 0 0
[58,]  450 -200 0 0 0 0 0 0 0 0 0 0 0 0 0
[59,]  500 -200 0 0 0 0 2 0 0 0 0 0 0 0 0
[60,]  550 -200 0 0 0 0 0 0 0 0 0 2 0 0 0
[61,]    0 -250 0 0 0 0 0 0 0 0 0 0 0 0 0
[62,]   50 -250 0 0 0 0 0 0 0 0 0 0 0 0 0
[63,]  100 -250 0 0 0 0 0 0 0 0 0 0 0 0 0
[64,]  150 -250 0 0 0 0 0 0 0 1 0 0 0 0 0
[65,]  200 -250 0 0 0 0 0 0 0 0 0 0 0 0 0
[66,]  250 -250 0 0 0 0 0 0 0 0 0 0 0 0 0
[67,]  300 -250 1 0 0 0 0 0 0 0 0 0 0 0 0
[68,]  350 -250 0 0 0 0 0 0 0 0 2 0 0 0 0
[69,]  400 -250 0 0 0 0 0 0 0 0 0 0 0 0 0
[70,]  450 -250 0 0 0 0 0 0 0 0 0 0 0 0 0
[71,]  500 -250 0 0 0 0 0 0 0 0 0 0 0 0 0
[72,]  550 -250 0 0 0 0 0 0 0 0 0 1 1 0 0
[73,]    0 -300 0 0 0 0 0 0 0 0 0 0 0 1 0
[74,]   50 -300 0 0 0 0 0 0 0 0 0 0 0 0 1
[75,]  100 -300 0 0 0 0 0 0 0 0 0 0 0 0 0
[76,]  150 -300 0 0 0 0 0 0 0 0 0 0 0 0 0
[77,]  200 -300 0 0 0 0 0 0 0 0 0 0 0 0 0
[78,]  250 -300 0 0 0 0 0 0 0 0 0 0 0 0 0
[79,]  300 -300 0 0 0 0 0 0 0 0 0 0 0 0 0
[80,]  350 -300 0 0 0 0 0 0 0 0 0 0 0 0 0
[81,]  400 -300 0 0 0 0 0 0 0 0 1 0 0 0 0
[82,]  450 -300 0 0 0 0 0 0 0 0 1 0 0 0 0
[83,]  500 -300 0 0 0 0 0 0 0 0 0 0 1 0 0
[84,]  550 -300 0 0 0 0 0 0 0 0 0 0 1 0 0
";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn salamander_summary() {
        let h = builtin_salamander();
        assert_eq!(h.n(), 93);
        assert_eq!(h.total_detections(), 112);
        assert_eq!(*h.counts().iter().max().unwrap(), 3);
        assert_eq!(h.occasions(), 4);
    }

    #[test]
    fn hare_shape_and_region() {
        let d = builtin_hare();
        assert_eq!(d.num_traps(), 84);
        assert_eq!(d.n(), 13);
        assert_eq!(d.occasions(), 5);
        assert_eq!(d.traps()[2], [100.0, 0.0]);
        assert_eq!(d.count(0, 2), 1);
        assert_eq!(*d.region(), Region::new(-100.0, 650.0, -400.0, 100.0).unwrap());
        assert!((d.region().area() / 10_000.0 - 37.5).abs() < 1e-12);
        for i in 0..d.n() {
            assert!(d.row(i).iter().sum::<u32>() >= 1);
        }
    }

    #[test]
    fn simulated_fixture() {
        let h = builtin_simulated_m0();
        assert_eq!(h.n(), 19);
        assert_eq!(h.total_detections(), 24);
    }
}
