//! Documented invocations against the committed CSVs. `ITEREQ_BLESS=1`
//! rewrites the files instead of comparing.

mod common;

#[test]
fn golden_files_match() {
    let bless = std::env::var_os("ITEREQ_BLESS").is_some_and(|v| v == "1");
    let cases = common::golden_cases();
    assert!(cases.len() >= 3);
    let failures: Vec<String> = cases
        .iter()
        .filter_map(|c| common::check_golden(c, bless).map(|m| format!("{}: {m}", c.name)))
        .collect();
    assert!(failures.is_empty(), "{}", failures.join("\n\n"));
}

#[test]
fn documented_values() {
    let read = |name: &str| std::fs::read_to_string(common::golden_dir().join(format!("{name}.csv"))).unwrap();
    let data_rows = |text: String| -> Vec<String> {
        text.lines().filter(|l| !l.starts_with('#')).skip(1).map(String::from).collect()
    };

    let tail = data_rows(read("tail_gamma2_s4"));
    assert_eq!(tail.len(), 1);
    let (x, v) = tail[0].split_once(',').unwrap();
    assert_eq!(x, "2");
    assert_eq!(format!("{:.6}", v.parse::<f64>().unwrap()), "0.203003");

    assert_eq!(data_rows(read("moments_exp_s5")), vec!["3,6".to_string()]);

    let sup: Vec<f64> = data_rows(read("converge_weibull_half"))
        .iter()
        .map(|r| r.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(sup.len(), 1000);
    assert!(sup.windows(2).all(|w| w[1] <= w[0]));
    // The limit is degenerate at 1, so the tail is 1 - sup_distance.
    assert!(1.0 - sup[999] > 0.95);
}
