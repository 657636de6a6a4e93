//! C ABI wrapper around the Clarabel interior-point solver.
//!
//! Solves  min q'x  s.t.  A x + s = b,  s in K,  where K is a product of
//! cones described by (tag, dim) pairs in row order:
//!   tag 0 = zero cone (dim rows)        tag 1 = nonnegative cone (dim rows)
//!   tag 2 = second-order cone (dim)     tag 3 = exponential cone (3 rows)
//!   tag 4 = PSD triangle cone (dim = matrix order, dim*(dim+1)/2 rows)
//! PSD rows are svec-scaled by the caller (off-diagonals times sqrt(2)).

use clarabel::algebra::*;
use clarabel::solver::*;
use std::slice;

pub const STATUS_SOLVED: i32 = 0;
pub const STATUS_PRIMAL_INFEASIBLE: i32 = 1;
pub const STATUS_DUAL_INFEASIBLE: i32 = 2;
pub const STATUS_MAX_ITERATIONS: i32 = 3;
pub const STATUS_MAX_TIME: i32 = 4;
pub const STATUS_NUMERICAL: i32 = 5;
pub const STATUS_ALMOST_SOLVED: i32 = 6;
pub const STATUS_OTHER: i32 = 7;

fn write_msg(msg_out: *mut u8, msg_cap: usize, msg: &str) {
    if msg_out.is_null() || msg_cap == 0 {
        return;
    }
    let bytes = msg.as_bytes();
    let n = bytes.len().min(msg_cap - 1);
    unsafe {
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), msg_out, n);
        *msg_out.add(n) = 0;
    }
}

/// Returns 0 on a completed solver run (inspect `status_out`), 1 on
/// malformed input, 2 on an internal panic.
#[no_mangle]
pub extern "C" fn flexhull_clarabel_solve(
    n_vars: usize,
    n_rows: usize,
    q: *const f64,
    a_colptr: *const usize,
    a_rowval: *const usize,
    a_nzval: *const f64,
    a_nnz: usize,
    b: *const f64,
    n_cones: usize,
    cone_tags: *const i32,
    cone_dims: *const usize,
    feas_tol: f64,
    gap_tol: f64,
    time_limit: f64,
    max_iter: u32,
    verbose: i32,
    x_out: *mut f64,
    status_out: *mut i32,
    obj_out: *mut f64,
    iters_out: *mut i32,
    solve_time_out: *mut f64,
    r_prim_out: *mut f64,
    r_dual_out: *mut f64,
    msg_out: *mut u8,
    msg_cap: usize,
) -> i32 {
    let result = std::panic::catch_unwind(|| {
        let q = unsafe { slice::from_raw_parts(q, n_vars) }.to_vec();
        let colptr = unsafe { slice::from_raw_parts(a_colptr, n_vars + 1) }.to_vec();
        let rowval = unsafe { slice::from_raw_parts(a_rowval, a_nnz) }.to_vec();
        let nzval = unsafe { slice::from_raw_parts(a_nzval, a_nnz) }.to_vec();
        let b = unsafe { slice::from_raw_parts(b, n_rows) }.to_vec();
        let tags = unsafe { slice::from_raw_parts(cone_tags, n_cones) };
        let dims = unsafe { slice::from_raw_parts(cone_dims, n_cones) };

        let mut cones: Vec<SupportedConeT<f64>> = Vec::with_capacity(n_cones);
        for (tag, dim) in tags.iter().zip(dims.iter()) {
            match tag {
                0 => cones.push(ZeroConeT(*dim)),
                1 => cones.push(NonnegativeConeT(*dim)),
                2 => cones.push(SecondOrderConeT(*dim)),
                3 => cones.push(ExponentialConeT()),
                4 => cones.push(PSDTriangleConeT(*dim)),
                _ => return Err(format!("unknown cone tag {tag}")),
            }
        }

        let p = CscMatrix::<f64>::zeros((n_vars, n_vars));
        let a = CscMatrix::new(n_rows, n_vars, colptr, rowval, nzval);

        let settings = DefaultSettings {
            verbose: verbose != 0,
            max_iter,
            time_limit: if time_limit > 0.0 { time_limit } else { f64::INFINITY },
            tol_feas: feas_tol,
            tol_gap_abs: gap_tol,
            tol_gap_rel: gap_tol,
            ..DefaultSettings::default()
        };

        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| format!("solver construction failed: {e:?}"))?;
        solver.solve();

        let status = match solver.solution.status {
            SolverStatus::Solved => STATUS_SOLVED,
            SolverStatus::AlmostSolved => STATUS_ALMOST_SOLVED,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                STATUS_PRIMAL_INFEASIBLE
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                STATUS_DUAL_INFEASIBLE
            }
            SolverStatus::MaxIterations => STATUS_MAX_ITERATIONS,
            SolverStatus::MaxTime => STATUS_MAX_TIME,
            SolverStatus::NumericalError | SolverStatus::InsufficientProgress => {
                STATUS_NUMERICAL
            }
            _ => STATUS_OTHER,
        };

        unsafe {
            let x = slice::from_raw_parts_mut(x_out, n_vars);
            for (dst, src) in x.iter_mut().zip(solver.solution.x.iter()) {
                *dst = *src;
            }
            *status_out = status;
            *obj_out = solver.solution.obj_val;
            *iters_out = solver.info.iterations as i32;
            *solve_time_out = solver.info.solve_time;
            *r_prim_out = solver.info.res_primal;
            *r_dual_out = solver.info.res_dual;
        }
        Ok(format!("{:?}", solver.solution.status))
    });

    match result {
        Ok(Ok(msg)) => {
            write_msg(msg_out, msg_cap, &msg);
            0
        }
        Ok(Err(msg)) => {
            write_msg(msg_out, msg_cap, &msg);
            1
        }
        Err(_) => {
            write_msg(msg_out, msg_cap, "internal solver panic");
            2
        }
    }
}
