use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

#[repr(C)]
pub struct FfiSettings {
    pub max_iter: u32,
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub tol_feas: f64,
    pub verbose: i32,
    pub chordal: i32,
}

unsafe fn csc_from_raw(
    nrows: usize,
    ncols: usize,
    colptr: *const usize,
    rowind: *const usize,
    nzval: *const f64,
) -> CscMatrix<f64> {
    let nnz = *colptr.add(ncols);
    CscMatrix::new(
        nrows,
        ncols,
        std::slice::from_raw_parts(colptr, ncols + 1).to_vec(),
        std::slice::from_raw_parts(rowind, nnz).to_vec(),
        std::slice::from_raw_parts(nzval, nnz).to_vec(),
    )
}

/// status codes: 0 solved, 1 almost solved, 2 primal infeasible, 3 dual infeasible,
/// 4 max iterations, 5 numerical trouble, 6 other
#[no_mangle]
pub unsafe extern "C" fn clarabel_ffi_solve(
    nvars: usize,
    p_colptr: *const usize,
    p_rowind: *const usize,
    p_nzval: *const f64,
    q: *const f64,
    nrows: usize,
    a_colptr: *const usize,
    a_rowind: *const usize,
    a_nzval: *const f64,
    b: *const f64,
    cone_tags: *const i32,
    cone_dims: *const usize,
    ncones: usize,
    settings: *const FfiSettings,
    x_out: *mut f64,
    obj_out: *mut f64,
    iters_out: *mut u32,
) -> i32 {
    let p = csc_from_raw(nvars, nvars, p_colptr, p_rowind, p_nzval);
    let a = csc_from_raw(nrows, nvars, a_colptr, a_rowind, a_nzval);
    let qv = std::slice::from_raw_parts(q, nvars);
    let bv = std::slice::from_raw_parts(b, nrows);

    let mut cones: Vec<SupportedConeT<f64>> = Vec::with_capacity(ncones);
    for i in 0..ncones {
        let dim = *cone_dims.add(i);
        let cone = match *cone_tags.add(i) {
            0 => SupportedConeT::ZeroConeT(dim),
            1 => SupportedConeT::NonnegativeConeT(dim),
            2 => SupportedConeT::SecondOrderConeT(dim),
            3 => SupportedConeT::PSDTriangleConeT(dim),
            _ => return 6,
        };
        cones.push(cone);
    }

    let s = &*settings;
    let settings = DefaultSettings::<f64> {
        max_iter: s.max_iter,
        tol_gap_abs: s.tol_gap_abs,
        tol_gap_rel: s.tol_gap_rel,
        tol_feas: s.tol_feas,
        verbose: s.verbose != 0,
        chordal_decomposition_enable: s.chordal != 0,
        ..DefaultSettings::default()
    };

    // Ill-conditioned PSD blocks can make the internal eigensolver panic;
    // treat that as a numerical failure instead of unwinding across the FFI.
    static QUIET_PANICS: std::sync::Once = std::sync::Once::new();
    QUIET_PANICS.call_once(|| std::panic::set_hook(Box::new(|_| {})));
    let solved = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        let mut solver = DefaultSolver::new(&p, qv, &a, bv, &cones, settings);
        solver.solve();
        solver.solution
    }));
    let solution = match solved {
        Ok(sol) => sol,
        Err(_) => return 5,
    };

    let xs = std::slice::from_raw_parts_mut(x_out, nvars);
    xs.copy_from_slice(&solution.x);
    *obj_out = solution.obj_val;
    *iters_out = solution.iterations;

    match solution.status {
        SolverStatus::Solved => 0,
        SolverStatus::AlmostSolved => 1,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => 2,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => 3,
        SolverStatus::MaxIterations | SolverStatus::MaxTime => 4,
        SolverStatus::NumericalError | SolverStatus::InsufficientProgress => 5,
        _ => 6,
    }
}
