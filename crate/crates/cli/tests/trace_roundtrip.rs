use proptest::prelude::*;
use rotorsim_cli::trace::{Abscissa, TraceFile};

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e9..1e9f64,
        0.0..1.0f64,
        (-300i32..300, 1.0..10.0f64).prop_map(|(e, m)| m * 10f64.powi(e)),
        Just(0.0),
    ]
}

fn same_to_12_digits(a: f64, b: f64) -> bool {
    a == b || ((a - b) / a.abs().max(b.abs())).abs() < 5e-12
}

proptest! {
    #[test]
    fn write_then_read_is_identity(
        rows in prop::collection::vec((value(), value(), value()), 0..60),
        with_err in any::<bool>(),
        time in any::<bool>(),
    ) {
        let t = TraceFile::new(
            if time { Abscissa::Time } else { Abscissa::Detuning },
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            with_err.then(|| rows.iter().map(|r| r.2).collect()),
        );
        let back = TraceFile::read(t.to_csv_string().as_bytes()).unwrap();
        prop_assert_eq!(back.abscissa, t.abscissa);
        prop_assert_eq!(back.excitation_err.is_some(), with_err);
        let pairs = back.x.iter().zip(&t.x).chain(back.excitation.iter().zip(&t.excitation));
        for (a, b) in pairs {
            prop_assert!(same_to_12_digits(*a, *b), "{} vs {}", a, b);
        }
        prop_assert_eq!(back, t);
    }
}
