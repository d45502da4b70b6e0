use rhucrl_core::env::{AdversaryChannel, Environment, PendulumEnv};
use rhucrl_core::policy::PolicyParams;
use rhucrl_core::types::{AdversaryAction, AgentAction, State};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let path = &args[1];
    let torque_limit: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(6.0);
    let fraction: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.3);
    let text = std::fs::read_to_string(path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let policy: PolicyParams = serde_json::from_value(v["policy"].clone()).unwrap();
    let env = PendulumEnv::new(
        1.0, 1.0, 9.81, torque_limit,
        AdversaryChannel::Torque { fraction },
        80, 0.05, 0.0, std::f64::consts::PI,
    ).unwrap();
    let mut s = env.spec().initial_state.clone();
    let mut total = 0.0;
    for h in 0..80 {
        let u = policy.eval(&s.0);
        let (next, r) = env.step(&s, &AgentAction(u.clone()), &AdversaryAction(vec![0.0]), &[0.0, 0.0]).unwrap();
        total += r;
        if h % 4 == 0 {
            println!("h={h:3} theta={:+.2} omega={:+.2} u={:+.2} r={:+.1}", s.0[0], s.0[1], u[0], r);
        }
        s = next;
    }
    println!("total (no adversary, no noise): {total:.1}");
    let _ = State(vec![]);
}
