use proptest::prelude::*;

use spps::cli::{write_output, Format, Output};
use spps::expr::parse_expression;
use spps_core::basis::Solution;
use spps_core::grid::{make_grid, sample_real};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn quadratic_potentials_match_direct_arithmetic(c in 0.01..100.0f64, m in 2usize..200) {
        let src = format!("{}*x^2 + {}", c * c, c);
        let e = parse_expression(&src).unwrap();
        let grid = make_grid(1.0, m).unwrap();
        for &x in grid.nodes() {
            let direct = c * c * x * x + c;
            prop_assert!(close(e.eval(x), direct), "{src} at {x}: {} vs {direct}", e.eval(x));
        }
    }

    #[test]
    fn general_forms_match_direct_arithmetic(
        a in -50.0..50.0f64,
        b in -50.0..50.0f64,
        k in 0.1..5.0f64,
        x in 0.0..3.0f64,
    ) {
        let src = format!("{a}*exp(-{k}*x^2) - ({b})/(1 + x^2) + sqrt({k})*cos(x)");
        let e = parse_expression(&src).unwrap();
        let direct = a * (-k * x * x).exp() - b / (1.0 + x * x) + k.sqrt() * x.cos();
        prop_assert!((e.eval(x) - direct).abs() <= 1e-13 * (1.0 + a.abs() + b.abs()));
    }

    #[test]
    fn solution_csv_round_trips(values in prop::collection::vec(-1e12..1e12f64, 5), scale in -280i32..280) {
        let grid = make_grid(1.0, 4).unwrap();
        let s = 10f64.powi(scale);
        let u = sample_real(|x| values[(x * 4.0).round() as usize] * s, &grid).unwrap();
        let du = u.map(|v| v * 0.5);
        let output = Output::Solution(Solution { u: u.clone(), du });
        let mut buf = Vec::new();
        write_output(&mut buf, &output, Format::Csv).unwrap();
        let mut r = csv::Reader::from_reader(buf.as_slice());
        let parsed: Vec<Vec<f64>> = r
            .records()
            .map(|rec| rec.unwrap().iter().map(|f| f.parse().unwrap()).collect())
            .collect();
        prop_assert_eq!(parsed.len(), 5);
        for (j, row) in parsed.iter().enumerate() {
            prop_assert_eq!(row[0], grid.nodes()[j]);
            prop_assert_eq!(row[1], u[j].re);
            prop_assert_eq!(row[3], u[j].re * 0.5);
        }
    }
}
