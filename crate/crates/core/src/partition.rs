//! Slab-partitioned multi-worker execution of the interface solver.
//!
//! The grid is split into `m` contiguous column slabs along x, one in-process
//! worker per slab. Workers exchange data only through typed messages: two
//! ghost columns per side with their neighbors, per-mode separator scalars
//! with the coordinator (worker 0), and boundary-point data gathered to and
//! scattered from the coordinator. The x-direction tridiagonal systems of
//! the sine-transform solver are solved with the arrowhead decomposition,
//! blocks aligned with the slabs, so each worker only ever touches its own
//! columns plus the messaged scalars.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::mpsc::{channel, Receiver, Sender};

use crate::arrowhead::{ArrowheadSystem, PartitionMap};
use crate::correction::{accumulate_node, intersection_jumps, CorrectedRhs};
use crate::fast_poisson::SpectralPlan;
use crate::geometry::{ControlPointSet, ParametricBoundary};
use crate::grid::{CartesianGrid, GridField, IntersectionSet, NodeClassification, NodeValues};
use crate::interpolation::{one_sided_value, StencilSelection};
use crate::jumps::{InterfaceSpec, JumpData};
use crate::{Error, Result};

/// Contiguous column slabs, balanced within one column. The last worker also
/// owns the terminal node column of the box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlabPartition {
    /// Column ranges over `0..I`.
    pub ranges: Vec<Range<usize>>,
    /// Total cell columns (grid `I`).
    pub i_count: usize,
}

/// Ghost layer width on each side of a slab.
pub const GHOST_WIDTH: usize = 2;

/// Split the grid into `m` balanced slabs of at least 4 columns each.
pub fn partition_grid(grid: &CartesianGrid, m: usize) -> Result<SlabPartition> {
    if m == 0 {
        return Err(Error::InvalidParameter("worker count must be positive".into()));
    }
    let columns = grid.i_count;
    if columns / m < 4 {
        return Err(Error::SlabTooSmall {
            workers: m,
            columns,
        });
    }
    let base = columns / m;
    let extra = columns % m;
    let mut ranges = Vec::with_capacity(m);
    let mut start = 0;
    for k in 0..m {
        let width = base + usize::from(k < extra);
        ranges.push(start..start + width);
        start += width;
    }
    Ok(SlabPartition {
        ranges,
        i_count: columns,
    })
}

impl SlabPartition {
    pub fn worker_count(&self) -> usize {
        self.ranges.len()
    }

    /// Node columns owned by worker `k` (the last worker also owns column I).
    pub fn owned_columns(&self, k: usize) -> Range<usize> {
        let r = self.ranges[k].clone();
        if k + 1 == self.ranges.len() {
            r.start..r.end + 1
        } else {
            r
        }
    }

    /// Worker owning a given column.
    pub fn owner_of_column(&self, column: usize) -> usize {
        let col = column.min(self.i_count.saturating_sub(1));
        self.ranges
            .iter()
            .position(|r| r.contains(&col))
            .unwrap_or(self.ranges.len() - 1)
    }

    /// Unknown-space separators for the x-direction tridiagonal systems:
    /// the last interior unknown of each slab but the final one.
    pub fn unknown_separators(&self) -> Vec<usize> {
        self.ranges[..self.ranges.len() - 1]
            .iter()
            .map(|r| r.end - 2)
            .collect()
    }

    /// Assign each control point to the worker whose ghosted slab contains
    /// its whole interpolation stencil.
    pub fn control_owners(
        &self,
        control: &ControlPointSet,
        stencils: &[StencilSelection],
        grid: &CartesianGrid,
    ) -> Vec<usize> {
        (0..control.len())
            .map(|m| {
                let z = control.point(m).position;
                let column =
                    (((z.x - grid.x_lo) / grid.h) as usize).min(grid.i_count.saturating_sub(1));
                let preferred = self.owner_of_column(column);
                let span_lo = stencils[m].nodes.iter().map(|(i, _)| *i).min().unwrap();
                let span_hi = stencils[m].nodes.iter().map(|(i, _)| *i).max().unwrap();
                let fits = |k: usize| {
                    let cols = self.owned_columns(k);
                    span_lo + GHOST_WIDTH >= cols.start && span_hi < cols.end + GHOST_WIDTH
                };
                if fits(preferred) {
                    return preferred;
                }
                if preferred > 0 && fits(preferred - 1) {
                    return preferred - 1;
                }
                if preferred + 1 < self.worker_count() && fits(preferred + 1) {
                    return preferred + 1;
                }
                preferred
            })
            .collect()
    }
}

/// Message categories of the worker protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageTag {
    GhostExchange,
    BoundaryGather,
    BoundaryScatter,
    Separator,
}

/// Audit record of one message.
#[derive(Debug, Clone)]
pub struct MessageRecord {
    pub tag: MessageTag,
    pub from: usize,
    pub to: usize,
    /// Total scalars in the payload.
    pub scalars: usize,
    /// Independent per-mode batches carried in the payload (1 when the
    /// message is not mode-batched).
    pub batches: usize,
}

/// Field values over one slab with two ghost columns per side, stored
/// column-major so transforms see contiguous columns.
#[derive(Debug, Clone)]
pub struct SlabField {
    pub worker: usize,
    pub col_start: usize,
    pub col_end: usize,
    pub ny: usize,
    data: Vec<f64>,
}

impl SlabField {
    pub fn new(worker: usize, columns: Range<usize>, ny: usize) -> Self {
        let width = columns.len() + 2 * GHOST_WIDTH;
        Self {
            worker,
            col_start: columns.start,
            col_end: columns.end,
            ny,
            data: vec![0.0; width * ny],
        }
    }

    #[inline]
    fn local(&self, i: usize) -> usize {
        i + GHOST_WIDTH - self.col_start
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.local(i) * self.ny + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.local(i) * self.ny + j;
        self.data[idx] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.local(i) * self.ny + j;
        self.data[idx] += v;
    }

    pub fn owned_columns(&self) -> Range<usize> {
        self.col_start..self.col_end
    }

    /// Copy of one column (owned or ghost).
    pub fn column(&self, i: usize) -> Vec<f64> {
        let l = self.local(i);
        self.data[l * self.ny..(l + 1) * self.ny].to_vec()
    }

    pub fn set_column(&mut self, i: usize, values: &[f64]) {
        let l = self.local(i);
        self.data[l * self.ny..(l + 1) * self.ny].copy_from_slice(values);
    }
}

impl NodeValues for SlabField {
    #[inline]
    fn value_at(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }
}

/// Copy each worker's two edge columns into its neighbors' ghost layers.
/// Pure data movement; the threaded pipeline sends the same columns as
/// messages.
pub fn exchange_ghosts(fields: &mut [SlabField], audit: Option<&mut Vec<MessageRecord>>) {
    let m = fields.len();
    let mut records = Vec::new();
    for k in 0..m {
        if k + 1 < m {
            // k -> k+1: its last two owned columns become the right
            // neighbor's left ghosts.
            for i in fields[k].col_end - GHOST_WIDTH..fields[k].col_end {
                let col = fields[k].column(i);
                fields[k + 1].set_column(i, &col);
            }
            records.push(MessageRecord {
                tag: MessageTag::GhostExchange,
                from: k,
                to: k + 1,
                scalars: GHOST_WIDTH * fields[k].ny,
                batches: 1,
            });
            // k+1 -> k.
            for i in fields[k + 1].col_start..fields[k + 1].col_start + GHOST_WIDTH {
                let col = fields[k + 1].column(i);
                fields[k].set_column(i, &col);
            }
            records.push(MessageRecord {
                tag: MessageTag::GhostExchange,
                from: k + 1,
                to: k,
                scalars: GHOST_WIDTH * fields[k].ny,
                batches: 1,
            });
        }
    }
    if let Some(audit) = audit {
        audit.extend(records);
    }
}

/// Gather per-worker boundary values into one list ordered by global control
/// point index. `parts[k]` carries `(global index, value)` pairs.
pub fn gather_boundary(parts: &[Vec<(usize, f64)>], total: usize) -> Vec<f64> {
    let mut out = vec![0.0; total];
    for part in parts {
        for &(idx, v) in part {
            out[idx] = v;
        }
    }
    out
}

/// Scatter a global boundary list into per-worker pieces by ownership.
pub fn scatter_boundary(
    values: &[f64],
    owners: &[usize],
    workers: usize,
) -> Vec<Vec<(usize, f64)>> {
    let mut parts = vec![Vec::new(); workers];
    for (idx, (&v, &owner)) in values.iter().zip(owners.iter()).enumerate() {
        parts[owner].push((idx, v));
    }
    parts
}

/// Per-mode arrowhead factorizations aligned with a slab partition.
pub struct DistributedPlan {
    pub systems: Vec<ArrowheadSystem>,
}

impl std::fmt::Debug for DistributedPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DistributedPlan")
            .field("modes", &self.systems.len())
            .finish()
    }
}

impl DistributedPlan {
    /// Build and factor the per-mode tridiagonal systems with blocks aligned
    /// to the slab boundaries.
    pub fn new(slab: &SlabPartition, plan: &SpectralPlan) -> Result<Self> {
        let n = plan.i_count - 1;
        let map = if slab.worker_count() == 1 {
            PartitionMap::balanced(n, 1)?
        } else {
            PartitionMap::from_separators(n, slab.unknown_separators())?
        };
        let mut systems = Vec::with_capacity(plan.mode_count());
        for &lambda in &plan.eigenvalues {
            let matrix = plan.mode_matrix(lambda);
            let mut sys = ArrowheadSystem::from_map(matrix, map.clone())?;
            sys.precompute_schur()?;
            systems.push(sys);
        }
        Ok(Self { systems })
    }
}

/// What a distributed application extracts at the control points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extraction {
    Value,
    NormalDerivative,
}

/// Correction inputs for the worker pipeline.
struct CorrectionTask<'a> {
    spec: &'a InterfaceSpec,
    intersection_jumps: &'a [JumpData],
}

/// Extraction inputs for the worker pipeline.
struct ExtractionTask<'a> {
    control: &'a ControlPointSet,
    stencils: &'a [StencilSelection],
    control_jumps: &'a [JumpData],
    owners: &'a [usize],
    mode: Extraction,
}

/// Everything a worker needs, shared read-only.
struct WorkerShared<'a> {
    slab: &'a SlabPartition,
    dplan: &'a DistributedPlan,
    plan: &'a SpectralPlan,
    grid: &'a CartesianGrid,
    classification: &'a NodeClassification,
    intersections: &'a IntersectionSet,
    correction: Option<CorrectionTask<'a>>,
    extraction: Option<ExtractionTask<'a>>,
    /// Raw right-hand side when corrections are precomputed by the caller.
    rhs: Option<&'a GridField>,
}

type ScalarMsg = Vec<f64>;

struct WorkerLinks {
    senders: HashMap<usize, Sender<ScalarMsg>>,
    receivers: HashMap<usize, Receiver<ScalarMsg>>,
}

struct WorkerOutput {
    field: SlabField,
    boundary: Vec<(usize, f64)>,
    audit: Vec<MessageRecord>,
}

/// Solve the interface system with slab workers; equivalent to
/// `fast_poisson::solve_interface_system` (bitwise for one worker).
pub fn distributed_solve_interface(
    rhs: &GridField,
    slab: &SlabPartition,
    dplan: &DistributedPlan,
    plan: &SpectralPlan,
    grid: &CartesianGrid,
    classification: &NodeClassification,
    intersections: &IntersectionSet,
    audit: &mut Vec<MessageRecord>,
) -> Result<GridField> {
    let shared = WorkerShared {
        slab,
        dplan,
        plan,
        grid,
        classification,
        intersections,
        correction: None,
        extraction: None,
        rhs: Some(rhs),
    };
    let outputs = run_workers(&shared)?;
    let mut field = GridField::zeros(grid);
    for out in &outputs {
        for i in out.field.owned_columns() {
            for j in 0..grid.ny() {
                field.set(i, j, out.field.get(i, j));
            }
        }
        audit.extend(out.audit.iter().cloned());
    }
    Ok(field)
}

/// One full distributed operator application: per-worker corrections,
/// transform + arrowhead solve, ghost exchange, one-sided extraction at owned
/// control points, and a boundary gather. Returns the boundary data (global
/// order) and the assembled field.
#[allow(clippy::too_many_arguments)]
pub fn distributed_apply(
    slab: &SlabPartition,
    dplan: &DistributedPlan,
    plan: &SpectralPlan,
    grid: &CartesianGrid,
    boundary: &ParametricBoundary,
    classification: &NodeClassification,
    intersections: &IntersectionSet,
    control: &ControlPointSet,
    stencils: &[StencilSelection],
    spec: &InterfaceSpec,
    control_jumps: &[JumpData],
    extraction: Extraction,
    audit: &mut Vec<MessageRecord>,
) -> Result<(Vec<f64>, GridField)> {
    let owners = slab.control_owners(control, stencils, grid);
    let q_jumps = intersection_jumps(spec, intersections, boundary)?;

    // Boundary point data (six jumps per control point) scattered to its
    // owners before the interface solve starts.
    let m = slab.worker_count();
    let mut per_worker_counts = vec![0usize; m];
    for &o in &owners {
        per_worker_counts[o] += 1;
    }
    for (k, &count) in per_worker_counts.iter().enumerate() {
        audit.push(MessageRecord {
            tag: MessageTag::BoundaryScatter,
            from: 0,
            to: k,
            scalars: 6 * count,
            batches: 1,
        });
    }

    let shared = WorkerShared {
        slab,
        dplan,
        plan,
        grid,
        classification,
        intersections,
        correction: Some(CorrectionTask {
            spec,
            intersection_jumps: &q_jumps,
        }),
        extraction: Some(ExtractionTask {
            control,
            stencils,
            control_jumps,
            owners: &owners,
            mode: extraction,
        }),
        rhs: None,
    };
    let outputs = run_workers(&shared)?;

    let mut field = GridField::zeros(grid);
    let mut parts = Vec::with_capacity(outputs.len());
    for out in &outputs {
        for i in out.field.owned_columns() {
            for j in 0..grid.ny() {
                field.set(i, j, out.field.get(i, j));
            }
        }
        audit.extend(out.audit.iter().cloned());
        parts.push(out.boundary.clone());
    }
    let values = gather_boundary(&parts, control.len());
    Ok((values, field))
}

/// Spawn the workers, run the pipeline, and return outputs in worker order.
fn run_workers(shared: &WorkerShared<'_>) -> Result<Vec<WorkerOutput>> {
    let m = shared.slab.worker_count();

    // Channel mesh: adjacent pairs both ways plus coordinator links. A pair
    // created twice keeps only the latest channel, which is fine: message
    // order between any two workers is phase-ordered FIFO.
    let mut sender_maps: Vec<HashMap<usize, Sender<ScalarMsg>>> =
        (0..m).map(|_| HashMap::new()).collect();
    let mut receiver_maps: Vec<HashMap<usize, Receiver<ScalarMsg>>> =
        (0..m).map(|_| HashMap::new()).collect();
    {
        let mut link = |from: usize, to: usize| {
            if sender_maps[from].contains_key(&to) {
                return;
            }
            let (tx, rx) = channel();
            sender_maps[from].insert(to, tx);
            receiver_maps[to].insert(from, rx);
        };
        for k in 0..m.saturating_sub(1) {
            link(k, k + 1);
            link(k + 1, k);
        }
        for k in 1..m {
            link(k, 0);
            link(0, k);
        }
    }

    let mut links: Vec<WorkerLinks> = sender_maps
        .into_iter()
        .zip(receiver_maps)
        .map(|(senders, receivers)| WorkerLinks { senders, receivers })
        .collect();

    let mut results: Vec<Result<WorkerOutput>> = Vec::with_capacity(m);
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(m);
        for k in (0..m).rev() {
            let worker_links = links.pop().expect("one link set per worker");
            handles.push(scope.spawn(move || worker_main(k, shared, worker_links)));
        }
        for handle in handles.into_iter().rev() {
            results.push(handle.join().expect("worker panicked"));
        }
    });
    results.into_iter().collect()
}

fn worker_main(k: usize, shared: &WorkerShared<'_>, links: WorkerLinks) -> Result<WorkerOutput> {
    let m = shared.slab.worker_count();
    let grid = shared.grid;
    let plan = shared.plan;
    let cols = shared.slab.owned_columns(k);
    let ny = grid.ny();
    let mut audit = Vec::new();

    // Corrected right-hand side on the worker's own columns.
    let mut rhs_slab = SlabField::new(k, cols.clone(), ny);
    match (&shared.correction, shared.rhs) {
        (Some(task), _) => {
            let mut corrected = CorrectedRhs {
                field: GridField::zeros(grid),
                contributions: Vec::new(),
            };
            for j in 0..ny {
                for i in cols.clone() {
                    if shared.classification.is_interior(i, j) {
                        if let Some(source) = &task.spec.source {
                            rhs_slab.set(i, j, source.at_node(grid, i, j));
                        }
                    }
                    if shared.classification.is_irregular(i, j) && !grid.is_box_boundary(i, j) {
                        accumulate_node(
                            &mut corrected,
                            grid,
                            shared.classification,
                            shared.intersections,
                            task.intersection_jumps,
                            i,
                            j,
                        );
                    }
                }
            }
            for (i, j, v) in corrected.contributions {
                rhs_slab.add(i, j, v);
            }
        }
        (None, Some(rhs)) => {
            for i in cols.clone() {
                for j in 0..ny {
                    rhs_slab.set(i, j, rhs.get(i, j));
                }
            }
        }
        (None, None) => unreachable!("either a correction task or a raw rhs is provided"),
    }

    // Forward sine transform of the owned interior columns; unknown index
    // u = i - 1 over the worker's contiguous unknown range.
    let modes = plan.mode_count();
    let u_range = unknown_range(shared.slab, k, grid);
    let width = u_range.len();
    let mut fhat = vec![0.0; modes * width];
    let mut column = vec![0.0; modes];
    for u in u_range.clone() {
        let i = u + 1;
        for j in 1..grid.j_count {
            column[j - 1] = rhs_slab.get(i, j);
        }
        let hat = plan.dst1(&column);
        for (q, v) in hat.into_iter().enumerate() {
            fhat[q * width + (u - u_range.start)] = v;
        }
    }

    // Block solves for every mode.
    let systems = &shared.dplan.systems;
    let block = systems[0].map().blocks[k].clone();
    let sep_here = if k + 1 < m {
        Some(systems[0].map().separators[k])
    } else {
        None
    };
    let mut z_all: Vec<Vec<f64>> = Vec::with_capacity(modes);
    for (q, sys) in systems.iter().enumerate() {
        let rhs_block: Vec<f64> = block
            .clone()
            .map(|u| fhat[q * width + (u - u_range.start)])
            .collect();
        z_all.push(sys.block_solve(k, &rhs_block)?);
    }

    // Pass first block values left so each separator owner can reduce its
    // equation, then ship the reduced equations to the coordinator.
    if k > 0 {
        let payload: Vec<f64> = z_all.iter().map(|z| z[0]).collect();
        send(&links, k, k - 1, MessageTag::GhostExchange, payload, modes, &mut audit);
    }
    let h_own: Option<Vec<f64>> = if let Some(sep) = sep_here {
        let z_next_first = recv(&links, k + 1)?;
        let rhs_h: Vec<f64> = (0..modes)
            .map(|q| {
                let f_sep = fhat[q * width + (sep - u_range.start)];
                systems[q].separator_rhs(k, f_sep, *z_all[q].last().unwrap(), z_next_first[q])
            })
            .collect();
        if k == 0 {
            record_self(MessageTag::Separator, 0, rhs_h.len(), modes, &mut audit);
            Some(coordinator_schur(shared, &links, rhs_h, modes, &mut audit)?)
        } else {
            send(&links, k, 0, MessageTag::Separator, rhs_h, modes, &mut audit);
            Some(recv(&links, 0)?)
        }
    } else {
        // Single worker (no separators at all) or the last worker, which
        // contributes no separator equation but still receives h from the
        // left below.
        None
    };

    // Neighbor pass of the separator values: h_k travels k -> k+1.
    if let Some(h) = &h_own {
        if k + 1 < m {
            send(&links, k, k + 1, MessageTag::GhostExchange, h.clone(), modes, &mut audit);
        }
    }
    let h_left: Option<Vec<f64>> = if k > 0 { Some(recv(&links, k - 1)?) } else { None };

    // Back-substitute and inverse transform the owned columns.
    let mut vhat = vec![0.0; modes * width];
    for (q, sys) in systems.iter().enumerate() {
        let s_block = sys.back_substitute(
            k,
            &z_all[q],
            h_left.as_ref().map(|h| h[q]),
            h_own.as_ref().map(|h| h[q]),
        );
        for (offset, u) in block.clone().enumerate() {
            vhat[q * width + (u - u_range.start)] = s_block[offset];
        }
        if let (Some(sep), Some(h)) = (sep_here, h_own.as_ref()) {
            vhat[q * width + (sep - u_range.start)] = h[q];
        }
    }
    let mut field = SlabField::new(k, cols.clone(), ny);
    let mut spectrum = vec![0.0; modes];
    for u in u_range.clone() {
        let i = u + 1;
        for (q, s) in spectrum.iter_mut().enumerate() {
            *s = vhat[q * width + (u - u_range.start)];
        }
        let values = plan.idst1(&spectrum);
        for (j, v) in values.into_iter().enumerate() {
            field.set(i, j + 1, v);
        }
    }

    // Ghost exchange: two boundary-adjacent owned columns each way.
    if k > 0 {
        let mut payload = Vec::with_capacity(GHOST_WIDTH * ny);
        for i in cols.start..cols.start + GHOST_WIDTH {
            payload.extend(field.column(i));
        }
        send(&links, k, k - 1, MessageTag::GhostExchange, payload, 1, &mut audit);
    }
    if k + 1 < m {
        let mut payload = Vec::with_capacity(GHOST_WIDTH * ny);
        for i in cols.end - GHOST_WIDTH..cols.end {
            payload.extend(field.column(i));
        }
        send(&links, k, k + 1, MessageTag::GhostExchange, payload, 1, &mut audit);
        let incoming = recv(&links, k + 1)?;
        for (slot, i) in (cols.end..cols.end + GHOST_WIDTH).enumerate() {
            field.set_column(i, &incoming[slot * ny..(slot + 1) * ny]);
        }
    }
    if k > 0 {
        let incoming = recv(&links, k - 1)?;
        for (slot, i) in (cols.start - GHOST_WIDTH..cols.start).enumerate() {
            field.set_column(i, &incoming[slot * ny..(slot + 1) * ny]);
        }
    }

    // One-sided extraction at the worker's own control points.
    let mut boundary_part = Vec::new();
    if let Some(task) = &shared.extraction {
        for (idx, &owner) in task.owners.iter().enumerate() {
            if owner != k {
                continue;
            }
            let data = one_sided_value(&field, &task.stencils[idx], &task.control_jumps[idx])?;
            let value = match task.mode {
                Extraction::Value => data.value,
                Extraction::NormalDerivative => {
                    let n = task.control.point(idx).normal;
                    n.x * data.dx + n.y * data.dy
                }
            };
            boundary_part.push((idx, value));
        }
        let scalars = boundary_part.len();
        if k == 0 {
            record_self(MessageTag::BoundaryGather, 0, scalars, 1, &mut audit);
        } else {
            audit.push(MessageRecord {
                tag: MessageTag::BoundaryGather,
                from: k,
                to: 0,
                scalars,
                batches: 1,
            });
        }
    }

    Ok(WorkerOutput {
        field,
        boundary: boundary_part,
        audit,
    })
}

/// Coordinator side of the separator rendezvous: collect the reduced
/// equations in worker order, solve the per-mode Schur systems, and return
/// worker 0's own separator values (others are messaged back).
fn coordinator_schur(
    shared: &WorkerShared<'_>,
    links: &WorkerLinks,
    own_rhs: Vec<f64>,
    modes: usize,
    audit: &mut Vec<MessageRecord>,
) -> Result<Vec<f64>> {
    let m = shared.slab.worker_count();
    let sep_count = m - 1;
    let mut rhs_rows: Vec<Vec<f64>> = Vec::with_capacity(sep_count);
    rhs_rows.push(own_rhs);
    for worker in 1..sep_count {
        rhs_rows.push(recv(links, worker)?);
    }
    let mut h_rows: Vec<Vec<f64>> = vec![vec![0.0; modes]; sep_count];
    let mut rhs_h = vec![0.0; sep_count];
    for q in 0..modes {
        for (p, row) in rhs_rows.iter().enumerate() {
            rhs_h[p] = row[q];
        }
        let h = shared.dplan.systems[q].solve_separators(&rhs_h)?;
        for (p, v) in h.into_iter().enumerate() {
            h_rows[p][q] = v;
        }
    }
    record_self(MessageTag::Separator, 0, modes, modes, audit);
    for (worker, row) in h_rows.iter().enumerate().skip(1) {
        send(links, 0, worker, MessageTag::Separator, row.clone(), modes, audit);
    }
    Ok(h_rows.swap_remove(0))
}

fn unknown_range(slab: &SlabPartition, k: usize, grid: &CartesianGrid) -> Range<usize> {
    let cols = slab.owned_columns(k);
    let lo = cols.start.max(1) - 1;
    let hi = cols.end.min(grid.i_count) - 1;
    lo..hi
}

fn send(
    links: &WorkerLinks,
    from: usize,
    to: usize,
    tag: MessageTag,
    payload: Vec<f64>,
    batches: usize,
    audit: &mut Vec<MessageRecord>,
) {
    let scalars = payload.len();
    links.senders[&to].send(payload).expect("worker channel closed");
    audit.push(MessageRecord {
        tag,
        from,
        to,
        scalars,
        batches,
    });
}

fn recv(links: &WorkerLinks, from: usize) -> Result<ScalarMsg> {
    links.receivers[&from]
        .recv()
        .map_err(|_| Error::SingularSystem("worker channel closed"))
}

fn record_self(
    tag: MessageTag,
    worker: usize,
    scalars: usize,
    batches: usize,
    audit: &mut Vec<MessageRecord>,
) {
    audit.push(MessageRecord {
        tag,
        from: worker,
        to: worker,
        scalars,
        batches,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fast_poisson::solve_interface_system;
    use crate::geometry::{build_boundary, CurveKind, Vec2};
    use crate::grid::{build_grid, classify_nodes, find_intersections};
    use crate::test_support::pseudo_random;

    fn grid(n: usize) -> CartesianGrid {
        build_grid(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), n, n).unwrap()
    }

    /// A tiny far-away boundary so classification has no interior nodes;
    /// the solve-only pipeline ignores it.
    fn trivial_markers(g: &CartesianGrid) -> (NodeClassification, IntersectionSet) {
        let b = build_boundary(
            CurveKind::Circle { radius: g.h * 0.26 },
            Vec2::new(g.x(1) + 0.41 * g.h, g.y(1) + 0.47 * g.h),
        )
        .unwrap();
        let class = classify_nodes(g, &b).unwrap();
        let set = find_intersections(g, &class, &b).unwrap();
        (class, set)
    }

    #[test]
    fn balanced_slabs() {
        let g = grid(16);
        let p = partition_grid(&g, 4).unwrap();
        let widths: Vec<usize> = p.ranges.iter().map(|r| r.len()).collect();
        assert_eq!(widths, vec![4, 4, 4, 4]);
    }

    #[test]
    fn uneven_slabs_balance_within_one() {
        let g = build_grid(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), 10, 10).unwrap();
        // 10 columns cannot host 3 workers of >= 4 columns.
        assert!(matches!(
            partition_grid(&g, 3),
            Err(Error::SlabTooSmall { .. })
        ));
        let g = build_grid(Vec2::new(0.0, 0.0), Vec2::new(1.3, 1.3), 13, 13).unwrap();
        let p = partition_grid(&g, 3).unwrap();
        let widths: Vec<usize> = p.ranges.iter().map(|r| r.len()).collect();
        assert_eq!(widths, vec![5, 4, 4]);
    }

    #[test]
    fn single_worker_owns_everything() {
        let g = grid(16);
        let p = partition_grid(&g, 1).unwrap();
        assert_eq!(p.owned_columns(0), 0..17);
    }

    #[test]
    fn ghost_exchange_copies_neighbor_columns() {
        let g = grid(16);
        let p = partition_grid(&g, 4).unwrap();
        let ny = g.ny();
        // Field value = column index, constant per column.
        let mut fields: Vec<SlabField> = (0..4)
            .map(|k| {
                let mut f = SlabField::new(k, p.owned_columns(k), ny);
                for i in p.owned_columns(k) {
                    for j in 0..ny {
                        f.set(i, j, i as f64);
                    }
                }
                f
            })
            .collect();
        let mut audit = Vec::new();
        exchange_ghosts(&mut fields, Some(&mut audit));
        for k in 1..4 {
            let start = p.owned_columns(k).start;
            assert_eq!(fields[k].get(start - 2, 3), (start - 2) as f64);
            assert_eq!(fields[k].get(start - 1, 0), (start - 1) as f64);
        }
        for k in 0..3 {
            let end = p.owned_columns(k).end;
            assert_eq!(fields[k].get(end, 5), end as f64);
            assert_eq!(fields[k].get(end + 1, 5), (end + 1) as f64);
        }
        // Adjacent-only messages.
        for r in &audit {
            assert_eq!(r.tag, MessageTag::GhostExchange);
            assert_eq!(r.from.abs_diff(r.to), 1);
        }
    }

    #[test]
    fn ghost_round_trip_reassembles_bitwise() {
        let g = grid(16);
        let p = partition_grid(&g, 4).unwrap();
        let ny = g.ny();
        let mut seed = 11_u64;
        let mut global = GridField::zeros(&g);
        for j in 0..ny {
            for i in 0..g.nx() {
                global.set(i, j, pseudo_random(&mut seed));
            }
        }
        let mut fields: Vec<SlabField> = (0..4)
            .map(|k| {
                let mut f = SlabField::new(k, p.owned_columns(k), ny);
                for i in p.owned_columns(k) {
                    for j in 0..ny {
                        f.set(i, j, global.get(i, j));
                    }
                }
                f
            })
            .collect();
        exchange_ghosts(&mut fields, None);
        // Interiors plus ghosts all agree with the unpartitioned field.
        for (k, f) in fields.iter().enumerate() {
            let cols = p.owned_columns(k);
            let lo = cols.start.saturating_sub(GHOST_WIDTH);
            let hi = (cols.end + GHOST_WIDTH).min(g.nx());
            for i in lo..hi {
                for j in 0..ny {
                    assert_eq!(f.get(i, j), global.get(i, j), "worker {k} node ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn boundary_scatter_gather_round_trip() {
        for workers in [1, 3] {
            let owners: Vec<usize> = (0..20).map(|i| (i * workers) / 20).collect();
            let values: Vec<f64> = (0..20).map(|i| i as f64).collect();
            let parts = scatter_boundary(&values, &owners, workers);
            assert_eq!(parts.len(), workers);
            let back = gather_boundary(&parts, 20);
            assert_eq!(back, values);
        }
    }

    #[test]
    fn distributed_solve_matches_sequential_bitwise_for_one_worker() {
        let g = grid(32);
        let plan = SpectralPlan::new(&g, 0.4).unwrap();
        let slab = partition_grid(&g, 1).unwrap();
        let dplan = DistributedPlan::new(&slab, &plan).unwrap();
        let (class, inter) = trivial_markers(&g);
        let mut seed = 5150_u64;
        let mut rhs = GridField::zeros(&g);
        for j in 1..g.j_count {
            for i in 1..g.i_count {
                rhs.set(i, j, pseudo_random(&mut seed));
            }
        }
        let sequential = solve_interface_system(&rhs, &plan, &g).unwrap();
        let mut audit = Vec::new();
        let distributed =
            distributed_solve_interface(&rhs, &slab, &dplan, &plan, &g, &class, &inter, &mut audit)
                .unwrap();
        assert_eq!(sequential, distributed);
    }

    #[test]
    fn distributed_solve_matches_sequential_for_many_workers() {
        let g = grid(129);
        let plan = SpectralPlan::new(&g, 0.0).unwrap();
        let (class, inter) = trivial_markers(&g);
        let mut seed = 808_u64;
        let mut rhs = GridField::zeros(&g);
        for j in 1..g.j_count {
            for i in 1..g.i_count {
                rhs.set(i, j, pseudo_random(&mut seed));
            }
        }
        let sequential = solve_interface_system(&rhs, &plan, &g).unwrap();
        let scale = sequential.max_abs();
        for m in [2, 4, 8] {
            let slab = partition_grid(&g, m).unwrap();
            let dplan = DistributedPlan::new(&slab, &plan).unwrap();
            let mut audit = Vec::new();
            let distributed = distributed_solve_interface(
                &rhs, &slab, &dplan, &plan, &g, &class, &inter, &mut audit,
            )
            .unwrap();
            let mut max_diff = 0.0_f64;
            for j in 0..g.ny() {
                for i in 0..g.nx() {
                    max_diff = max_diff.max((distributed.get(i, j) - sequential.get(i, j)).abs());
                }
            }
            assert!(max_diff < 1e-12 * scale.max(1.0), "m = {m}: diff {max_diff}");
        }
    }

    #[test]
    fn distributed_solve_recovers_eigenfunction() {
        let n = 128;
        let g = grid(n);
        let kappa = 1.3;
        let plan = SpectralPlan::new(&g, kappa).unwrap();
        let slab = partition_grid(&g, 4).unwrap();
        let dplan = DistributedPlan::new(&slab, &plan).unwrap();
        let (class, inter) = trivial_markers(&g);
        let (p, q) = (3, 7);
        let h2 = g.h * g.h;
        let sine =
            |k: usize, idx: usize| (std::f64::consts::PI * (k * idx) as f64 / n as f64).sin();
        let eig = |k: usize| {
            let f = |j: usize| sine(k, j);
            (f(2) + f(0) - 2.0 * f(1)) / (h2 * f(1))
        };
        let mut rhs = GridField::zeros(&g);
        for j in 1..n {
            for i in 1..n {
                rhs.set(i, j, (eig(p) + eig(q) - kappa) * sine(p, i) * sine(q, j));
            }
        }
        let mut audit = Vec::new();
        let v =
            distributed_solve_interface(&rhs, &slab, &dplan, &plan, &g, &class, &inter, &mut audit)
                .unwrap();
        for j in 1..n {
            for i in 1..n {
                let want = sine(p, i) * sine(q, j);
                assert!((v.get(i, j) - want).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn separator_payload_is_m_minus_one_scalars_per_mode_each_way() {
        let g = grid(64);
        let plan = SpectralPlan::new(&g, 0.0).unwrap();
        let m = 4;
        let slab = partition_grid(&g, m).unwrap();
        let dplan = DistributedPlan::new(&slab, &plan).unwrap();
        let (class, inter) = trivial_markers(&g);
        let rhs = GridField::zeros(&g);
        let mut audit = Vec::new();
        distributed_solve_interface(&rhs, &slab, &dplan, &plan, &g, &class, &inter, &mut audit)
            .unwrap();
        let modes = plan.mode_count();
        // Wire messages toward/away from the coordinator plus its own two
        // local contributions (gather semantics include the root's element).
        let mut up_wire = 0usize;
        let mut down_wire = 0usize;
        let mut self_records = 0usize;
        for r in &audit {
            match r.tag {
                MessageTag::Separator => {
                    assert_eq!(r.scalars % r.batches, 0);
                    assert_eq!(r.batches, modes);
                    let per_mode = r.scalars / r.batches;
                    assert_eq!(per_mode, 1);
                    if r.from == 0 && r.to == 0 {
                        self_records += 1;
                    } else if r.to == 0 {
                        up_wire += per_mode;
                    } else {
                        down_wire += per_mode;
                    }
                }
                MessageTag::GhostExchange => {
                    assert_eq!(r.from.abs_diff(r.to), 1);
                }
                _ => {}
            }
        }
        assert_eq!(self_records, 2);
        assert_eq!(up_wire, m - 2);
        assert_eq!(down_wire, m - 2);
        // Exactly m - 1 separator scalars per mode in each direction.
        assert_eq!(up_wire + self_records / 2, m - 1);
        assert_eq!(down_wire + self_records / 2, m - 1);
    }
}
