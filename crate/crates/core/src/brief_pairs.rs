//! Sampling pattern for the steered binary descriptor.
//!
//! 256 point pairs `(px, py, qx, qy)` drawn once from splitmix64 (seed 0),
//! uniform over the 31x31 patch and restricted to the radius-15 disk so that
//! every rotation stays within the patch. Frozen; do not regenerate.

pub(crate) const BRIEF_PAIRS: [[i8; 4]; 256] = [
    [1, 10, -11, 9], [0, -12, 3, 9], [4, -8, 9, -6], [-2, -1, 7, -4],
    [3, -5, -14, -5], [9, -6, 4, -14], [12, -6, -12, 4], [-9, -10, 3, -14],
    [11, 3, 8, 1], [-8, -5, 4, -12], [-6, -3, 7, 12], [-1, -6, -15, 0],
    [0, -4, -7, -2], [1, 6, -4, 14], [9, -8, -8, 11], [7, -11, 0, -10],
    [4, 13, 10, 1], [-9, -1, 7, 6], [4, -7, 1, 7], [-8, 9, 11, 1],
    [-1, -12, 1, -7], [2, -4, 5, -14], [14, -4, -8, 1], [7, 4, 0, 10],
    [-4, -7, -11, 8], [3, 2, 7, 12], [0, 3, -1, -7], [-3, 5, 8, -3],
    [3, -11, -13, 7], [11, 3, 5, 0], [1, 7, -3, -13], [-12, -5, -1, 2],
    [-15, 0, -2, -12], [8, -5, 1, 12], [8, -9, -8, 6], [-4, -10, 4, -14],
    [-3, -4, -11, 1], [8, -8, 8, 10], [6, 9, 4, 9], [-7, 13, 9, -11],
    [-10, 9, 2, 3], [14, -4, -1, -8], [-12, 4, 10, 1], [4, 10, -9, -4],
    [4, 12, 5, 8], [-11, 4, -2, 12], [-9, 3, -11, 6], [0, -6, 4, -5],
    [5, 14, -3, -13], [-14, 0, -6, -11], [-6, 0, 8, 7], [4, 5, -8, 3],
    [-6, 8, 9, -9], [-3, 4, -13, -1], [7, 3, 6, -10], [-2, 7, 11, 5],
    [-6, -4, 6, -4], [-1, 6, 1, 11], [10, 3, -3, 2], [5, -14, -6, -5],
    [-11, 7, -12, -1], [5, -6, 13, 4], [12, 4, -2, -5], [8, 9, -6, -5],
    [-8, -5, 3, -5], [6, -4, 4, 2], [0, -6, 10, -11], [4, 6, -2, 8],
    [-2, 3, -5, -10], [3, 11, -7, 1], [-6, 9, -8, 9], [4, 6, -12, 3],
    [4, 1, -6, 0], [-1, 9, -7, -3], [2, -6, 7, -4], [-2, -14, -13, -4],
    [-1, 8, 1, -14], [4, -6, -1, 3], [9, -1, -3, 3], [-5, 5, -3, -5],
    [4, -10, -4, -10], [6, -11, 10, 2], [-6, 8, -6, -8], [12, 5, -11, -10],
    [9, -3, 8, -4], [-9, -10, -7, 6], [5, 5, 0, -8], [-6, 4, -3, -5],
    [6, -12, 13, -1], [6, -8, -6, 7], [-9, 6, 12, -7], [1, -1, 0, -7],
    [1, 7, 9, 1], [-7, -13, 1, 5], [13, 7, 11, 6], [1, -2, -6, 6],
    [-3, -6, -13, 0], [0, 0, 8, -12], [-11, -3, -3, -14], [8, -12, 13, 4],
    [11, 7, -10, 11], [-3, 1, -7, -3], [4, 11, -4, -5], [-5, 13, -1, -11],
    [11, 2, 11, -2], [13, -6, -2, -11], [-1, 7, 7, -7], [-1, 11, -6, 5],
    [-7, 6, -12, 9], [-6, -6, -14, 2], [7, -1, -7, -7], [1, 7, 1, -3],
    [7, 5, 9, -1], [-11, 9, -8, -5], [-3, 1, 1, 3], [0, 15, -7, -8],
    [-8, 3, 6, -8], [-10, -10, 2, -5], [-10, 7, 1, -11], [-1, -13, 9, -4],
    [4, -9, 11, 9], [0, 1, -1, 13], [-1, 10, -7, 11], [-1, 10, 14, 3],
    [-10, 1, -9, -10], [2, 2, 11, 9], [4, -5, 4, 2], [3, 0, -1, -1],
    [3, -8, -5, -4], [-10, 7, -12, 1], [-3, -4, -1, 14], [-14, 2, -4, -3],
    [-9, 12, -4, 3], [-5, 5, -1, -4], [-1, 10, -5, 0], [-10, -1, 0, 14],
    [9, -11, -2, -5], [-9, 8, 5, 3], [-4, 8, -1, 11], [2, -6, 4, 3],
    [-12, -1, 12, -6], [0, 14, 6, -10], [13, 7, -9, -12], [-11, -10, 7, 2],
    [8, 5, 6, 13], [10, 0, -7, -6], [12, 9, -6, 8], [2, -11, -6, -6],
    [-5, 4, -13, -6], [14, -2, 5, -1], [1, -14, -12, 7], [-4, -6, 10, 4],
    [-5, -1, -4, 5], [-12, 4, 5, -5], [-7, -8, 13, 1], [8, 2, 1, -7],
    [-9, 9, -2, 2], [12, 2, 0, 3], [11, 6, -14, -5], [7, 0, 13, -2],
    [4, -5, -3, -6], [12, -1, -7, 9], [-7, -9, -8, -12], [10, 4, -6, 3],
    [4, -4, 10, -10], [-6, 4, -3, -1], [2, -13, -4, -10], [-1, 3, 2, 13],
    [1, -10, 8, -5], [-8, 7, 10, 7], [-7, -3, -13, -3], [12, 9, -11, 2],
    [1, -1, 1, -12], [0, 8, -3, -12], [5, -14, 1, -12], [-9, 7, -9, 11],
    [-14, -2, 2, -11], [-1, 13, -6, 0], [6, -3, 10, -4], [1, -7, 1, -11],
    [-5, 14, -7, 1], [-10, 10, -13, 1], [5, 12, 10, -11], [8, 12, 2, 3],
    [-2, -10, 1, -13], [-13, 5, -12, -9], [10, -3, -3, 5], [-14, 0, -8, -6],
    [13, 2, -7, -5], [0, 6, 4, 8], [1, -7, -6, -3], [0, -2, -11, 5],
    [-4, -9, 7, -13], [11, 3, 4, 4], [-1, -6, -5, 5], [1, 14, 12, 5],
    [-2, -14, 2, -7], [-11, -2, -6, 11], [7, 8, 0, 0], [-8, -3, 12, -4],
    [3, 3, 13, 7], [7, -4, 11, 3], [8, -7, 4, 11], [-10, -3, 6, -7],
    [-11, 7, 0, 10], [10, 1, -12, 8], [4, -13, 6, -8], [10, -8, -7, -8],
    [0, -7, -5, -2], [-2, -10, 12, 8], [-5, -4, -6, 4], [-5, 7, 1, 8],
    [-8, -12, -1, 13], [13, -3, 2, 9], [-12, -5, 7, -13], [3, 1, 7, 13],
    [-10, 1, 9, -10], [-9, 2, 2, 10], [3, -6, -9, 3], [6, 3, 6, 2],
    [-10, -4, -4, -3], [1, -11, 7, -5], [13, -1, -5, -5], [5, -3, 8, 4],
    [-9, -8, -3, -3], [-8, -11, -10, -9], [11, -5, 7, 5], [8, 5, 7, -2],
    [1, 2, -1, -8], [-1, -5, -9, -8], [6, 10, -6, -5], [3, 10, -7, 0],
    [5, 8, -11, -6], [-9, -4, 12, 1], [3, -11, 5, 13], [-11, 10, -5, 2],
    [-4, -14, 2, -8], [-4, 10, 3, 3], [13, 4, 8, -8], [4, -13, 11, 5],
    [-9, -3, -8, -8], [-4, -13, 9, 2], [6, 10, 8, 10], [-9, 6, 2, -1],
    [7, 11, 11, 3], [-11, 4, -11, 8], [-9, 11, -5, 2], [-7, 1, -8, -4],
    [11, 7, 1, 11], [-2, -2, 8, -8], [-4, -9, -4, 0], [3, 7, 2, 3],
    [-13, 6, 13, 3], [-9, 3, 5, 7], [-12, -8, 8, -2], [8, 6, 1, -2],
];
