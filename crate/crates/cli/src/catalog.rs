//! Vendored list of the benchmark matrices: where each lives under the
//! Matrix Market tree, its published size, and the HS iteration counts
//! used to pick a default iteration budget.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixEntry {
    pub name: &'static str,
    /// Path of the gzipped file relative to the base URL.
    pub path: &'static str,
    pub n: usize,
    /// Stored entries after symmetric expansion.
    pub nnz: usize,
    pub hs_iters: Option<usize>,
    pub hs_iters_jacobi: Option<usize>,
}

impl MatrixEntry {
    pub fn hs_iterations(&self, jacobi: bool) -> Option<usize> {
        if jacobi {
            self.hs_iters_jacobi
        } else {
            self.hs_iters
        }
    }
}

pub const DEFAULT_BASE_URL: &str = "https://math.nist.gov/pub/MatrixMarket2";

macro_rules! entry {
    ($name:literal, $dir:literal, $n:literal, $nnz:literal, $hs:expr, $hsj:expr) => {
        MatrixEntry {
            name: $name,
            path: concat!($dir, "/", $name, ".mtx.gz"),
            n: $n,
            nnz: $nnz,
            hs_iters: $hs,
            hs_iters_jacobi: $hsj,
        }
    };
}

pub static CATALOG: &[MatrixEntry] = &[
    entry!("1138_bus", "Harwell-Boeing/psadmit", 1138, 4054, Some(1721), Some(734)),
    entry!("494_bus", "Harwell-Boeing/psadmit", 494, 1666, Some(898), Some(371)),
    entry!("662_bus", "Harwell-Boeing/psadmit", 662, 2474, Some(443), Some(166)),
    entry!("685_bus", "Harwell-Boeing/psadmit", 685, 3249, Some(437), Some(192)),
    entry!("bcsstk03", "Harwell-Boeing/bcsstruc1", 112, 640, Some(364), Some(118)),
    entry!("bcsstk14", "Harwell-Boeing/bcsstruc2", 1806, 63454, Some(3982), Some(198)),
    entry!("bcsstk15", "Harwell-Boeing/bcsstruc2", 3948, 117816, Some(5702), Some(442)),
    entry!("bcsstk16", "Harwell-Boeing/bcsstruc2", 4884, 290378, Some(429), Some(132)),
    entry!("bcsstk17", "Harwell-Boeing/bcsstruc2", 10974, 428650, Some(17568), Some(2203)),
    entry!("bcsstk18", "Harwell-Boeing/bcsstruc2", 11948, 149090, Some(42525), Some(536)),
    entry!("bcsstk27", "Harwell-Boeing/bcsstruc4", 1224, 56126, Some(519), Some(173)),
    entry!("bcsstm19", "Harwell-Boeing/bcsstruc3", 817, 817, Some(274), None),
    entry!("bcsstm20", "Harwell-Boeing/bcsstruc3", 485, 485, Some(203), None),
    entry!("bcsstm21", "Harwell-Boeing/bcsstruc3", 3600, 3600, Some(3), None),
    entry!("bcsstm22", "Harwell-Boeing/bcsstruc3", 138, 138, Some(43), None),
    entry!("bcsstm23", "Harwell-Boeing/bcsstruc3", 3134, 3134, Some(1325), None),
    entry!("bcsstm24", "Harwell-Boeing/bcsstruc3", 3562, 3562, Some(1573), None),
    entry!("bcsstm25", "Harwell-Boeing/bcsstruc3", 15439, 15439, Some(10089), None),
    entry!("nos1", "Harwell-Boeing/lanpro", 237, 1017, Some(1846), Some(306)),
    entry!("nos2", "Harwell-Boeing/lanpro", 957, 4137, Some(29829), Some(3047)),
    entry!("nos3", "Harwell-Boeing/lanpro", 960, 15844, Some(221), Some(186)),
    entry!("nos4", "Harwell-Boeing/lanpro", 100, 594, Some(72), Some(67)),
    entry!("nos5", "Harwell-Boeing/lanpro", 468, 5172, Some(315), Some(136)),
    entry!("nos6", "Harwell-Boeing/lanpro", 675, 3255, Some(551), Some(71)),
    entry!("nos7", "Harwell-Boeing/lanpro", 729, 4617, Some(2869), Some(67)),
    entry!("s1rmq4m1", "misc/cylshell", 5489, 281111, Some(3406), Some(595)),
    entry!("s1rmt3m1", "misc/cylshell", 5489, 219521, Some(3890), Some(674)),
    entry!("s2rmq4m1", "misc/cylshell", 5489, 281111, Some(10476), Some(1437)),
    entry!("s2rmt3m1", "misc/cylshell", 5489, 219521, Some(14484), Some(2030)),
    entry!("s3dkq4m2", "misc/cylshell", 90449, 4820891, None, Some(25527)),
    entry!("s3dkt3m2", "misc/cylshell", 90449, 3753461, None, Some(36195)),
    entry!("s3rmq4m1", "misc/cylshell", 5489, 281111, Some(26628), Some(5743)),
    entry!("s3rmt3m1", "misc/cylshell", 5489, 219521, Some(38459), Some(8827)),
    entry!("s3rmt3m3", "misc/cylshell", 5357, 207695, Some(69095), Some(10251)),
];

/// HS iteration counts for the default model problem (n=48, ρ=0.8, κ=1e3).
pub const MODEL_HS_ITERS: (usize, usize) = (43, 49);

pub fn lookup(name: &str) -> Option<&'static MatrixEntry> {
    CATALOG.iter().find(|e| e.name.eq_ignore_ascii_case(name))
}
