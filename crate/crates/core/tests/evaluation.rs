use proptest::prelude::*;
use sgqa_core::eval::parse_predictions;
use sgqa_core::{compute_stats, evaluate, Binding, BlindBaseline, HopColumn, Prediction, QaPair, QuestionType};

fn pair(id: usize, qtype: QuestionType, hop: u8, answer: &str) -> QaPair {
    QaPair {
        question_id: format!("q{id}"),
        scene_id: "s".into(),
        question: format!("How many moving cars are there number {id}?"),
        answer: answer.into(),
        template_id: format!("{}_h{hop}", qtype.as_str()),
        hop,
        qtype,
        variant_index: 0,
        binding: Binding::new(),
    }
}

fn predict(id: usize, answer: &str) -> Prediction {
    Prediction { question_id: format!("q{id}"), answer: answer.into() }
}

#[test]
fn known_cell_accuracies() {
    let gt = vec![
        pair(0, QuestionType::Count, 0, "2"),
        pair(1, QuestionType::Count, 0, "0"),
        pair(2, QuestionType::Count, 1, "1"),
        pair(3, QuestionType::Count, 1, "3"),
        pair(4, QuestionType::Count, 1, "4"),
    ];
    let preds = vec![predict(0, "02"), predict(1, " 0 "), predict(2, "1"), predict(3, "5"), predict(4, "no")];
    let report = evaluate(&gt, &preds).unwrap();
    assert_eq!(report.cell(QuestionType::Count, HopColumn::H0).accuracy(), Some(100.0));
    assert_eq!(report.cell(QuestionType::Count, HopColumn::H1).accuracy().unwrap(), 100.0 / 3.0);
    assert_eq!(report.cell(QuestionType::Count, HopColumn::All).accuracy(), Some(60.0));
    assert_eq!(report.overall_accuracy(), Some(60.0));
    let tsv = report.to_tsv();
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(
        lines[0],
        "Exist-H0\tExist-H1\tExist-All\tCount-H0\tCount-H1\tCount-All\tObject-H0\tObject-H1\tObject-All\t\
         Status-H0\tStatus-H1\tStatus-All\tComparison-H0\tComparison-H1\tComparison-All\tAcc"
    );
    assert_eq!(lines[1], "-\t-\t-\t100.0\t33.3\t60.0\t-\t-\t-\t-\t-\t-\t-\t-\t-\t60.0");
}

#[test]
fn four_of_five() {
    let gt: Vec<_> = (0..5).map(|i| pair(i, QuestionType::Exist, 0, "yes")).collect();
    let preds: Vec<_> = (0..5).map(|i| predict(i, if i == 3 { "no" } else { "YES" })).collect();
    assert_eq!(evaluate(&gt, &preds).unwrap().overall_accuracy(), Some(80.0));
}

#[test]
fn prediction_file_parsing() {
    let preds = parse_predictions("{\"question_id\":\"q1\",\"answer\":\"yes\"}\n\n{\"question_id\":\"q2\",\"answer\":\"3\"}\n").unwrap();
    assert_eq!(preds, vec![predict(1, "yes"), predict(2, "3")]);
    assert!(parse_predictions("{\"question_id\":\"q1\"\n").is_err());
}

#[test]
fn blind_baseline_rules() {
    let mut train: Vec<_> = (0..10).map(|i| pair(i, QuestionType::Exist, 0, if i < 9 { "yes" } else { "no" })).collect();
    train.extend((10..20).map(|i| pair(i, QuestionType::Comparison, 0, if i % 2 == 0 { "yes" } else { "no" })));
    let model = BlindBaseline::fit(&train).unwrap();
    assert_eq!(model.predict(&pair(99, QuestionType::Exist, 0, "?")), "yes");
    assert_eq!(model.predict(&pair(99, QuestionType::Comparison, 0, "?")), "no");
    // Unseen template: global majority (11 yes, 9 no).
    assert_eq!(model.predict(&pair(99, QuestionType::Count, 1, "?")), "yes");
    assert!(BlindBaseline::fit(&[]).is_err());
}

fn dataset() -> impl Strategy<Value = (Vec<QaPair>, Vec<Prediction>)> {
    proptest::collection::vec((0usize..5, 0u8..2, 0usize..3, 0usize..3), 1..60).prop_map(|rows| {
        let mut gt = Vec::new();
        let mut preds = Vec::new();
        for (i, (q, hop, a, p)) in rows.into_iter().enumerate() {
            gt.push(pair(i, QuestionType::ALL[q], hop, &a.to_string()));
            if p < 3 {
                preds.push(predict(i, &p.to_string()));
            }
        }
        (gt, preds)
    })
}

proptest! {
    #[test]
    fn prediction_order_does_not_matter((gt, preds) in dataset(), seed in any::<u64>()) {
        let mut shuffled = preds.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            let j = (seed.wrapping_mul(i as u64 + 1) >> 7) as usize % (i + 1);
            shuffled.swap(i, j);
        }
        prop_assert_eq!(evaluate(&gt, &preds).unwrap(), evaluate(&gt, &shuffled).unwrap());
    }

    #[test]
    fn fixing_an_answer_never_hurts((gt, preds) in dataset(), which in any::<prop::sample::Index>()) {
        let before = evaluate(&gt, &preds).unwrap();
        let target = which.get(&gt);
        let mut fixed: Vec<_> = preds.iter().filter(|p| p.question_id != target.question_id).cloned().collect();
        fixed.push(Prediction { question_id: target.question_id.clone(), answer: target.answer.clone() });
        let after = evaluate(&gt, &fixed).unwrap();
        prop_assert!(after.overall.correct >= before.overall.correct);
        for qtype in QuestionType::ALL {
            for hop in HopColumn::ALL {
                prop_assert!(after.cell(qtype, hop).correct >= before.cell(qtype, hop).correct);
                prop_assert_eq!(after.cell(qtype, hop).total, before.cell(qtype, hop).total);
            }
        }
    }

    #[test]
    fn all_column_aggregates_hops((gt, preds) in dataset()) {
        let report = evaluate(&gt, &preds).unwrap();
        for qtype in QuestionType::ALL {
            let (h0, h1, all) = (report.cell(qtype, HopColumn::H0), report.cell(qtype, HopColumn::H1), report.cell(qtype, HopColumn::All));
            prop_assert_eq!(all.total, h0.total + h1.total);
            prop_assert_eq!(all.correct, h0.correct + h1.correct);
        }
        prop_assert_eq!(report.overall.total, gt.len());
    }

    #[test]
    fn stats_histograms_sum_to_size((gt, _) in dataset(), k in 1usize..6) {
        let stats = compute_stats(&gt, k).unwrap();
        prop_assert_eq!(stats.length_histogram.values().sum::<usize>(), gt.len());
        prop_assert_eq!(stats.qtype_histogram.values().sum::<usize>(), gt.len());
        prop_assert_eq!(stats.answer_histograms.values().flat_map(|h| h.values()).sum::<usize>(), gt.len());
        prop_assert_eq!(stats.prefixes.count, gt.len());
        let mut reversed = gt.clone();
        reversed.reverse();
        prop_assert_eq!(compute_stats(&reversed, k).unwrap(), stats);
    }
}

#[test]
fn stats_examples() {
    let one = QaPair { question: "Are there any cars?".into(), ..pair(0, QuestionType::Exist, 0, "yes") };
    let stats = compute_stats(&[one], 4).unwrap();
    assert_eq!(stats.length_histogram.into_iter().collect::<Vec<_>>(), vec![(4, 1)]);
    let a = QaPair { question: "How many moving cars are there?".into(), ..pair(0, QuestionType::Count, 0, "1") };
    let b = QaPair { question: "How many moving cars are parked?".into(), ..pair(1, QuestionType::Count, 0, "1") };
    let stats = compute_stats(&[a, b], 4).unwrap();
    assert_eq!(stats.prefixes.count_of(&["how", "many", "moving", "cars"]), 2);
}
