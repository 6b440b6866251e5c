use std::time::Instant;
fn main() {
    let seed = 42u64;
    for (name, f) in [
        ("series", Box::new(|| blax::driver::criterion_series()) as Box<dyn Fn() -> blax::Result<Vec<blax::report::CheckLine>>>),
        ("gramian", Box::new(move || blax::driver::criterion_gramian_consistency(seed))),
        ("onezero", Box::new(|| blax::driver::criterion_onezero_oracle())),
        ("family", Box::new(move || blax::driver::criterion_inner_family(seed, 256))),
        ("simulator", Box::new(move || blax::driver::criterion_simulator(seed))),
        ("classical", Box::new(move || blax::driver::criterion_classical_collapse(seed))),
        ("dichotomy", Box::new(|| blax::driver::criterion_stein_dichotomy())),
        ("squeeze", Box::new(move || blax::driver::criterion_squeeze(seed))),
        ("extras", Box::new(move || blax::driver::extra_invariants(seed))),
    ] {
        let t = Instant::now();
        let r = f();
        let ok = r.as_ref().map(|cs| cs.iter().all(|c| c.pass));
        println!("{name}: {:.2}s ok={ok:?}", t.elapsed().as_secs_f64());
        if let Err(e) = r { println!("   error: {e}"); }
    }
}
