use std::time::Instant;
fn main() {
    for n in [8u32, 10, 12, 13, 14] {
        let t = Instant::now();
        let set = m2lab_core::mandel::gleason_roots(n).unwrap();
        println!("gleason({n}): {} centers in {:.2}s", set.centers.len(), t.elapsed().as_secs_f64());
    }
}
