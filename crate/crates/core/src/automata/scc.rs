//! Iterative Tarjan decomposition over implicit graphs.

/// Marker for nodes never reached from the roots.
pub const UNREACHED: u32 = u32::MAX;

/// Strongly connected components. Component ids are assigned in the order
/// Tarjan's algorithm closes them, so every edge leads from a component to
/// one with an id that is smaller or equal.
#[derive(Clone, Debug)]
pub struct Sccs {
    pub comp: Vec<u32>,
    pub count: usize,
}

impl Sccs {
    /// Nodes grouped by component, indexed by component id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (v, &c) in self.comp.iter().enumerate() {
            if c != UNREACHED {
                out[c as usize].push(v);
            }
        }
        out
    }
}

/// Tarjan's algorithm on the part of a graph with `n` nodes reachable from
/// `roots`. `succ(v, out)` must push the successors of `v` onto `out`.
pub fn tarjan<F>(n: usize, roots: impl IntoIterator<Item = usize>, mut succ: F) -> Sccs
where
    F: FnMut(usize, &mut Vec<usize>),
{
    let mut index = vec![UNREACHED; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNREACHED; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut frames: Vec<(usize, usize, usize)> = Vec::new();
    let mut buf: Vec<usize> = Vec::new();
    let mut tmp: Vec<usize> = Vec::new();
    let mut counter = 0u32;
    let mut count = 0usize;

    for root in roots {
        if index[root] != UNREACHED {
            continue;
        }
        let mut enter = |v: usize,
                         frames: &mut Vec<(usize, usize, usize)>,
                         buf: &mut Vec<usize>,
                         stack: &mut Vec<usize>,
                         index: &mut [u32],
                         low: &mut [u32],
                         on_stack: &mut [bool]| {
            index[v] = counter;
            low[v] = counter;
            counter += 1;
            stack.push(v);
            on_stack[v] = true;
            tmp.clear();
            succ(v, &mut tmp);
            let start = buf.len();
            buf.extend_from_slice(&tmp);
            frames.push((v, start, buf.len()));
        };
        enter(root, &mut frames, &mut buf, &mut stack, &mut index, &mut low, &mut on_stack);
        while let Some(frame) = frames.last_mut() {
            let (v, pos, end) = *frame;
            if pos < end {
                frame.1 += 1;
                let w = buf[pos];
                if index[w] == UNREACHED {
                    enter(w, &mut frames, &mut buf, &mut stack, &mut index, &mut low, &mut on_stack);
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if let Some(&(_, _, parent_end)) = frames.last() {
                buf.truncate(parent_end);
            } else {
                buf.clear();
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp[w] = count as u32;
                    if w == v {
                        break;
                    }
                }
                count += 1;
            }
            if let Some(&(parent, _, _)) = frames.last() {
                low[parent] = low[parent].min(low[v]);
            }
        }
    }
    Sccs { comp, count }
}

/// Nodes from which some node in `target` is reachable (including the
/// targets themselves), given predecessor lists.
pub fn backward_closure(target: &[bool], preds: &[Vec<usize>]) -> Vec<bool> {
    let mut seen = target.to_vec();
    let mut stack: Vec<usize> = (0..target.len()).filter(|&v| target[v]).collect();
    while let Some(v) = stack.pop() {
        for &u in &preds[v] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen
}
