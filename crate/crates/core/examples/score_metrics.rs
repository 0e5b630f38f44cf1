//! BLEU, ROUGE and METEOR for a candidate/reference pair, with the METEOR
//! alignment spelled out.

use scenario_rag::metrics::{align, metric_tokenize, score_pair, MetricParams, RougeVariant};

fn main() {
    let mut args = std::env::args().skip(1);
    let candidate = args.next().unwrap_or_else(|| "Scan the parcels and open the Rücksendung menu".to_owned());
    let reference = args.next().unwrap_or_else(|| "Open the Rücksendung menu and scan the parcel".to_owned());

    let params = MetricParams {
        rouge_variants: [RougeVariant::Rouge1, RougeVariant::Rouge2, RougeVariant::RougeL].into(),
        ..MetricParams::default()
    };
    let report = score_pair(&candidate, &reference, &params);
    println!("BLEU   {:.4}", report.bleu);
    println!("ROUGE  {:.4}", report.rouge);
    println!("METEOR {:.4}", report.meteor);
    for (k, v) in &report.detail {
        println!("  {k:<8} {v:.4}");
    }

    let c = metric_tokenize(&candidate, &params);
    let r = metric_tokenize(&reference, &params);
    let alignment = align(&c, &r, params.meteor.node_limit);
    println!("alignment: {} matches in {} chunks", alignment.pairs.len(), alignment.chunks);
    for (i, j) in &alignment.pairs {
        println!("  {:<12} -> {}", c[*i], r[*j]);
    }
}
