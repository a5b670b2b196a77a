use promoai_core::llm::{generate, refine, LlmError, MockProvider, PromptTemplates, Role};
use promoai_core::pcl::{run_pcl, ErrorKind};
use promoai_testkit::predicates::{loop_around, skippable};
use promoai_testkit::{fixture, fixture_path};

fn script(name: &str) -> MockProvider {
    MockProvider::from_file(&fixture_path(&format!("mock/{name}.json"))).unwrap()
}

#[test]
fn repair_script_needs_two_attempts() {
    let t = PromptTemplates::default();
    let provider = script("repair");
    let r = generate(&t, &fixture("order_process.txt"), &provider, 5).unwrap();
    assert_eq!(r.attempts, 2);
    assert_eq!(r.model, run_pcl(&fixture("order_process.pcl")).unwrap());

    let first = provider.requests()[1][2].content.clone();
    let code = promoai_core::llm::extract_code(&first).unwrap();
    let err = run_pcl(&code).unwrap_err();
    assert_eq!(err.kind, ErrorKind::ReuseOfSubmodel);
    let error_turn = &r.conversation.messages()[3];
    assert_eq!(error_turn.role, Role::User);
    assert!(error_turn.content.contains(&err.message));
    assert!(error_turn.content.contains(&err.location.to_string()));
}

#[test]
fn exhausted_script() {
    let t = PromptTemplates::default();
    let err = generate(&t, "anything", &script("exhausted"), 5).unwrap_err();
    let LlmError::GenerationExhausted { attempts, conversation, .. } = err else {
        panic!("{err}")
    };
    assert_eq!(attempts, 5);
    assert_eq!(conversation.iteration_count, 5);
    assert!(conversation.check().is_empty());
}

#[test]
fn refinement_script_flips_predicates() {
    let t = PromptTemplates::default();
    let provider = script("refine");
    let base = generate(&t, &fixture("order_process.txt"), &provider, 5).unwrap();
    assert!(!loop_around(&base.model, "select item"));
    assert!(!skippable(&base.model, "select reward"));

    let looped = refine(&t, &base, "model the item selection as a loop", &provider, 5).unwrap();
    assert!(loop_around(&looped.model, "select item"));
    assert!(looped.conversation.extends(&base.conversation));

    let skip = refine(&t, &looped, "allow skipping the reward selection", &provider, 5).unwrap();
    assert!(skippable(&skip.model, "select reward"));
    assert!(loop_around(&skip.model, "select item"));
    assert!(skip.conversation.extends(&looped.conversation));
    assert!(skip.conversation.len() > looped.conversation.len());
    assert_eq!(skip.model, run_pcl(&fixture("order_process.pcl")).unwrap());
    assert!(skip.conversation.check().is_empty());
}
