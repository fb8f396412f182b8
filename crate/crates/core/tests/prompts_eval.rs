mod common;

use common::{fixture_scene, repo_path};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scanforge::cognition::{ground_truth_map, DirectionalOffset, GlobalMap, MapEntry};
use scanforge::evaluation::{evaluate, evaluate_files, mean_relative_accuracy, Prediction};
use scanforge::geometry::Vec3;
use scanforge::prompts::{
    assemble_prompt, build_prompt_bundle, reasoning_plan, render_representation, RepresentationKind,
    REASONING_TEMPLATE,
};
use scanforge::qa::{
    generate_qa_for_room, Answer, AnswerType, Provenance, QaConfig, QaItem, QuestionCategory, Unit,
};

fn text_part() -> impl Strategy<Value = String> {
    // braces included so placeholder look-alikes inside parts are exercised
    "[a-z{} ]{0,30}[a-z]".prop_map(|s| s)
}

proptest! {
    #[test]
    fn assembled_length_is_parts_plus_scaffolding(
        scene in text_part(),
        question in text_part(),
        steps in prop::collection::vec(text_part(), 1..6),
    ) {
        let plan = scanforge::prompts::ReasoningPlan { category: QuestionCategory::RoomType, steps: steps.clone() };
        let out = assemble_prompt(&scene, &question, &plan).unwrap();
        let placeholders = "{scene}".len() + "{question}".len() + "{steps}".len();
        let numbering: usize = (1..=steps.len()).map(|k| format!("{k}. ").len() + 1).sum();
        let parts = scene.len() + question.len() + steps.iter().map(String::len).sum::<usize>();
        prop_assert_eq!(out.len(), parts + REASONING_TEMPLATE.len() - placeholders + numbering);
        prop_assert!(out.contains(&scene));
        prop_assert!(out.contains(&question));
    }

    #[test]
    fn description_rendering_parses_back(
        points in prop::collection::vec(prop::array::uniform3(-6.0..6.0f64), 1..8),
        yaw in 0.0..360.0f64,
    ) {
        let cats = ["chair", "lamp", "table"];
        let map = GlobalMap {
            entries: points
                .iter()
                .enumerate()
                .map(|(k, p)| MapEntry { object_id: format!("o{k}"), category: cats[k % 3].into(), global_position: (*p).into() })
                .collect(),
        };
        let front = [yaw.to_radians().cos(), yaw.to_radians().sin()];
        let text = render_representation(&map, RepresentationKind::Description, 1.0, front).unwrap();
        let dict: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(dict.len(), map.len());
        // keys follow map order; repeats of a category are numbered from 2
        let mut seen = std::collections::HashMap::new();
        for e in &map.entries {
            let n = seen.entry(e.category.clone()).or_insert(0);
            *n += 1;
            let key = if *n == 1 { e.category.clone() } else { format!("{} ({})", e.category, n) };
            let desc = dict[&key].as_str().unwrap();
            let off = DirectionalOffset::parse(desc).unwrap();
            let p = e.global_position;
            let want = [p.x * front[1] - p.y * front[0], p.x * front[0] + p.y * front[1], p.z];
            for (got, want) in [off.right, off.forward, off.up].into_iter().zip(want) {
                prop_assert!((got - want).abs() <= 0.05 + 1e-9, "{key}: {desc}");
            }
        }
    }

    #[test]
    fn relative_accuracy_is_bounded_and_monotone(gold in 0.01..100.0f64, a in -200.0..200.0f64, b in -200.0..200.0f64) {
        let (sa, sb) = (mean_relative_accuracy(gold, a), mean_relative_accuracy(gold, b));
        prop_assert!((0.0..=1.0).contains(&sa));
        if (a - gold).abs() <= (b - gold).abs() {
            prop_assert!(sa >= sb);
        }
        prop_assert_eq!(mean_relative_accuracy(gold, gold), 1.0);
    }

    #[test]
    fn report_ignores_input_order(seed in any::<u64>()) {
        let room = common::random_room_between(seed, 4, 10);
        let gold = generate_qa_for_room("s", &room, seed, &QaConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut preds = Vec::new();
        for g in &gold {
            if !rng.gen_bool(0.8) {
                continue;
            }
            let value = match &g.answer {
                Answer::Number(v) => format!("{}", v * rng.gen_range(0.5..1.5)),
                Answer::Text(t) if rng.gen_bool(0.5) => t.clone(),
                Answer::Text(_) => "no idea".into(),
            };
            preds.push(Prediction { qa_id: g.qa_id.clone(), value });
        }
        let base = evaluate(&gold, &preds).unwrap();
        let (mut g2, mut p2) = (gold.clone(), preds.clone());
        g2.shuffle(&mut rng);
        p2.shuffle(&mut rng);
        prop_assert_eq!(evaluate(&g2, &p2).unwrap(), base);
    }
}

#[test]
fn perfect_predictions_score_one() {
    let room = &fixture_scene("two_room_house.json").rooms[0];
    let gold = generate_qa_for_room("s", room, 3, &QaConfig::default()).unwrap();
    let preds: Vec<Prediction> = gold
        .iter()
        .map(|g| Prediction { qa_id: g.qa_id.clone(), value: g.answer.as_text() })
        .collect();
    let report = evaluate(&gold, &preds).unwrap();
    assert_eq!(report.overall, 1.0);
    assert_eq!(report.missing, 0);
}

#[test]
fn hand_scored_fixture() {
    let report = evaluate_files(&repo_path("fixtures/eval/gold.jsonl"), &repo_path("fixtures/eval/pred.jsonl")).unwrap();
    // scored by hand: 10 vs 9.5 passes 9 of 10 tolerances, 4 vs 3 passes 5,
    // 20 vs 23 passes 7, 2 vs 1 passes none
    let expected = [
        (QuestionCategory::AbsoluteDistance, (0.9 + 1.0 + 0.5) / 3.0),
        (QuestionCategory::ObjectSize, 0.0),
        (QuestionCategory::RelativeDirection, 0.5),
        (QuestionCategory::ContactRelationship, 1.0),
        (QuestionCategory::RoomType, 0.0),
        (QuestionCategory::RoomSize, 0.7),
    ];
    assert_eq!(report.categories.len(), expected.len());
    for (cat, acc) in expected {
        let got = report.category(cat).unwrap().accuracy;
        assert!((got - acc).abs() < 1e-12, "{cat}: {got} vs {acc}");
    }
    assert!((report.overall - 0.5).abs() < 1e-12);
    assert_eq!(report.items, 10);
    assert_eq!(report.missing, 1);
    assert_eq!(report.flagged, ["e-05"]);
}

#[test]
fn duplicate_and_unknown_predictions_are_rejected() {
    let item = QaItem {
        qa_id: "q".into(),
        scene_id: "s".into(),
        room_id: "r".into(),
        category: QuestionCategory::RoomSize,
        question: "What is the size of the room in square meters?".into(),
        answer_type: AnswerType::Number,
        answer: Answer::Number(12.0),
        unit: Unit::SquareMeters,
        options: None,
        provenance: Provenance { oracle: "hand".into(), object_ids: vec![] },
    };
    let p = |id: &str| Prediction { qa_id: id.into(), value: "12".into() };
    assert!(evaluate(std::slice::from_ref(&item), &[p("q"), p("q")]).is_err());
    assert!(evaluate(std::slice::from_ref(&item), &[p("other")]).is_err());
}

#[test]
fn bundle_uses_the_plan_for_the_question_category() {
    let room = &fixture_scene("kitchen_door.json").rooms[0];
    let map = ground_truth_map(room, "door-1").unwrap();
    let q = "How far is the refrigerator from the microwave in meters?";
    for kind in RepresentationKind::ALL {
        let b = build_prompt_bundle(&map, kind, 1.0, [1.0, 0.0], q).unwrap();
        assert_eq!(b.plan, reasoning_plan(QuestionCategory::AbsoluteDistance));
        assert!(b.rendered.contains(&b.scene_text));
        assert!(b.plan.steps.iter().all(|s| b.rendered.contains(s.as_str())));
    }
    let map3d = render_representation(&map, RepresentationKind::Map3d, 1.0, [1.0, 0.0]).unwrap();
    // door at the origin, as annotated offsets rounded to 0.1
    let door = room.object("door-1").unwrap().position;
    for e in &map.entries {
        let o = room.object(&e.object_id).unwrap().position;
        let d = Vec3::new(o.x - door.x, o.y - door.y, o.z - door.z);
        let line = format!(
            "{}: ({}, {}, {})",
            e.category,
            common::oracle::round_tenth_text(d.x),
            common::oracle::round_tenth_text(d.y),
            common::oracle::round_tenth_text(d.z)
        );
        assert!(map3d.lines().any(|l| l == line), "missing {line}");
    }
}
