/// Completion time of a pipelined chain computed unit by unit, independent of
/// the simulator. Each stage is `(size, unit, rate)` and runs on a dedicated
/// resource.
///
/// Stage `i` may start unit `j` once it has finished unit `j - 1` and stage
/// `i - 1` has produced enough output to cover the input fraction that unit
/// `j` ends at.
pub fn unit_pipeline_oracle(chain: &[(f64, f64, f64)]) -> f64 {
    let mut prev: Vec<(f64, f64)> = Vec::new(); // (cumulative fraction, finish)
    for &(size, unit, rate) in chain {
        let bounds = unit_bounds(size, unit);
        let mut cur = Vec::with_capacity(bounds.len());
        let mut last_finish: f64 = 0.0;
        let mut done = 0.0;
        for &b in &bounds {
            let frac = if size > 0.0 { b / size } else { 1.0 };
            let ready = prev
                .iter()
                .find(|&&(f, _)| f >= frac - 1e-12)
                .or(prev.last())
                .map_or(0.0, |&(_, t)| t);
            let finish = ready.max(last_finish) + (b - done) / rate;
            cur.push((frac, finish));
            last_finish = finish;
            done = b;
        }
        prev = cur;
    }
    prev.last().map_or(0.0, |&(_, t)| t)
}

fn unit_bounds(size: f64, unit: f64) -> Vec<f64> {
    if size <= 0.0 || unit <= 0.0 || unit >= size {
        return vec![size.max(0.0)];
    }
    let mut v = Vec::new();
    let mut b = unit;
    while b < size - 1e-9 * size {
        v.push(b);
        b += unit;
    }
    v.push(size);
    v
}
