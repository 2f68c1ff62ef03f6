use qparrep::protocol;
use qparrep::rng::trial_rng;

fn main() {
    let dims = protocol::ThreeMessageDims { adversary: 2, message: 2, workspace: 4 };
    let mut rng = trial_rng(1001, 10);
    let t0 = std::time::Instant::now();
    let (p, a) = protocol::random_three_message(dims, 2, &mut rng).unwrap();
    println!("gen: {:?}", t0.elapsed());
    let t0 = std::time::Instant::now();
    let single = protocol::execute(&p, &a).unwrap().accept_probability;
    println!("single exec: {:?} -> {single}", t0.elapsed());
    for k in [3usize, 4] {
        let t0 = std::time::Instant::now();
        let pk = protocol::parallel_repeat_with_cap(&p, k, 1 << 18).unwrap();
        println!("k={k} repeat: {:?}", t0.elapsed());
        let t0 = std::time::Instant::now();
        let ak = protocol::product_adversary_with_cap(&a, k, 1 << 18).unwrap();
        println!("k={k} product adv: {:?}", t0.elapsed());
        let t0 = std::time::Instant::now();
        let m = protocol::execute(&pk, &ak).unwrap().accept_probability;
        println!("k={k} exec: {:?} -> err {:.2e}", t0.elapsed(), (m - single.powi(k as i32)).abs());
    }
}
