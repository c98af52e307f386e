use dmt::closed_form::{dmt_at, dmt_curve, ChannelTriple};
use dmt::exponent::{build_program, dmt_via_greedy, dmt_via_lp, greedy_reduce, solve_lp};
use dmt::Rational;
use num_bigint::BigInt;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn three_routes_agree_up_to_five() {
    let mut cases = 0;
    for m in 1..=5 {
        for n in 1..=5 {
            for l in 1..=5 {
                let t = ChannelTriple::new(m, l, n).unwrap();
                let curve = dmt_curve(t);
                let max = curve.max_gain() as i64;
                for quarter in 0..=4 * max {
                    let r = q(quarter, 4);
                    let closed = dmt_at(&curve, &r).unwrap();
                    let lp = dmt_via_lp(m, n, l, &r).unwrap();
                    let greedy = dmt_via_greedy(m, n, l, &r).unwrap();
                    assert_eq!(lp, closed, "lp vs closed at (m,n,l)=({m},{n},{l}) r={r}");
                    assert_eq!(greedy, closed, "greedy vs closed at ({m},{n},{l}) r={r}");
                    cases += 1;
                }
            }
        }
    }
    println!("{cases} cases");
}

#[test]
fn lp_vertex_is_feasible_and_optimal() {
    for (m, n, l) in [(2, 2, 2), (4, 2, 3), (3, 3, 5), (5, 3, 4), (4, 4, 4)] {
        let (m, n) = if n > m { (n, m) } else { (m, n) };
        for quarter in 0..=4 * n.min(l) as i64 {
            let p = build_program(m, n, l, q(quarter, 4)).unwrap();
            let opt = solve_lp(&p).unwrap();
            assert!(p.is_feasible(&opt.alpha, &opt.beta));
            assert_eq!(p.epsilon(&opt.alpha, &opt.beta), opt.value);
            greedy_reduce(&p).unwrap();
        }
    }
}
