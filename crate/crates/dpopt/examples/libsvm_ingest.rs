//! LIBSVM ingestion: parse, binarize labels, normalize into the unit ball,
//! and solve for the reference optimum. Pass a file path to use your own
//! data; without one, a small inline sample is used.

use dpopt::bench::reference_optimum;
use dpopt::datasets::{normalize_dataset, parse_libsvm, serialize_libsvm, LabelMap};

const SAMPLE: &str = "\
# tiny sample, zero/one labels
1 1:0.9 3:0.5
0 2:1.4
1 1:-0.3 2:0.2 3:0.1
0 1:0.4 3:-1.2
1 2:0.7
";

fn main() -> dpopt::Result<()> {
    let arg = std::env::args().nth(1);
    let text = match &arg {
        Some(path) => std::fs::read_to_string(path)?,
        None => SAMPLE.to_string(),
    };
    let records = parse_libsvm(&text)?;
    println!("parsed {} records", records.len());

    // multiclass sources need an explicit binarization rule, e.g. class 2
    // vs rest for covertype: LabelMap::positive_vs_rest(vec![2.0])
    let map = LabelMap::zero_one();
    let data = normalize_dataset(&records, &map)?;
    println!("dataset: n = {}, d = {} (features scaled into the unit ball)", data.n(), data.dim());

    let reference = reference_optimum(&data, 1e-10)?;
    println!(
        "reference optimum: loss* = {:.8} after {} damped-Newton iterations",
        reference.loss, reference.iterations
    );

    if arg.is_none() {
        println!("\nround-trip of the sample:\n{}", serialize_libsvm(&records));
    }
    Ok(())
}
