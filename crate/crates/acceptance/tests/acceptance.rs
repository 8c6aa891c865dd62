use std::process::ExitCode;
use std::time::Instant;

use defosc_acceptance::CRITERIA;

fn main() -> ExitCode {
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in CRITERIA.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let t = Instant::now();
        let v = (c.run)();
        let secs = t.elapsed().as_secs_f64();
        let in_time = secs <= c.budget_s;
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = if in_time { format!("{secs:.2}s") } else { format!("{secs:.2}s, over the {}s budget", c.budget_s) };
        println!("criterion {:>2} {} {} ({timing}): {}", c.id, if pass { "PASS" } else { "FAIL" }, c.title, v.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
